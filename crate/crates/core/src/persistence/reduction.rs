use crate::filtration::{Filtration, Simplex};

use super::{BarcodePoint, RawBarcodes};

/// Symmetric difference of two sorted index lists (addition over GF(2)).
fn add_columns(target: &mut Vec<usize>, source: &[usize], scratch: &mut Vec<usize>) {
    scratch.clear();
    let (mut i, mut j) = (0, 0);
    while i < target.len() && j < source.len() {
        match target[i].cmp(&source[j]) {
            std::cmp::Ordering::Less => {
                scratch.push(target[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                scratch.push(source[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    scratch.extend_from_slice(&target[i..]);
    scratch.extend_from_slice(&source[j..]);
    std::mem::swap(target, scratch);
}

/// Persistence by standard column reduction of the filtration-ordered
/// boundary matrix over GF(2).
///
/// Columns are sparse sorted row lists. Column `j` is reduced by adding
/// the column owning its lowest row until the low is unique or the column
/// vanishes. Worst case cubic in the number of simplices.
pub fn persistence_matrix_reduction(flt: &Filtration) -> RawBarcodes {
    let entries = flt.entries();
    let n = flt.num_vertices();
    let mut position = vec![usize::MAX; n];
    for (pos, e) in entries.iter().enumerate() {
        if let Simplex::Vertex(v) = e.simplex {
            position[v] = pos;
        }
    }

    let mut columns: Vec<Vec<usize>> = entries
        .iter()
        .map(|e| match e.simplex {
            Simplex::Vertex(_) => Vec::new(),
            Simplex::Edge(a, b) => {
                let (pa, pb) = (position[a], position[b]);
                vec![pa.min(pb), pa.max(pb)]
            }
        })
        .collect();

    let mut owner_of_low: Vec<Option<usize>> = vec![None; entries.len()];
    let mut paired = vec![false; entries.len()];
    let mut scratch = Vec::new();
    let mut out = RawBarcodes::default();

    for j in 0..entries.len() {
        while let Some(&low) = columns[j].last() {
            match owner_of_low[low] {
                Some(k) => {
                    let (head, tail) = columns.split_at_mut(j);
                    add_columns(&mut tail[0], &head[k], &mut scratch);
                }
                None => break,
            }
        }
        let e = &entries[j];
        match columns[j].last() {
            Some(&low) => {
                owner_of_low[low] = Some(j);
                paired[low] = true;
                paired[j] = true;
                let birth = &entries[low];
                out.b0_finite.push(BarcodePoint {
                    birth: birth.value,
                    death: e.value,
                    birth_attribution: birth.attribution,
                    death_attribution: Some(e.attribution),
                    zero_persistence: birth.level == e.level,
                });
            }
            None if e.simplex.dim() == 1 => {
                out.b1_essential
                    .push(BarcodePoint::essential(e.value, e.attribution));
            }
            None => {}
        }
    }
    for (pos, e) in entries.iter().enumerate() {
        if e.simplex.dim() == 0 && !paired[pos] {
            out.b0_essential
                .push(BarcodePoint::essential(e.value, e.attribution));
        }
    }
    out
}
