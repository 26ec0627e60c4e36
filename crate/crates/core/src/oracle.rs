//! Brute-force persistent homology by GF(2) linear algebra.
//!
//! Computes persistent Betti numbers `β_k^{i,j}` from ranks of boundary
//! matrices of the sublevel complexes and recovers barcode multiplicities
//! from them by inclusion-exclusion. Exponentially slower than the engines
//! in [`crate::persistence`] and meant purely as ground truth for tests on
//! small graphs.
//!
//! Every sublevel complex is a prefix of the filtration order, so all
//! quantities below are functions of two prefix lengths.

use std::collections::BTreeMap;

use crate::error::{GflError, Result};
use crate::filtration::{Filtration, Simplex};
use crate::persistence::BarcodeValues;

/// Dense GF(2) matrix with bit-packed rows.
#[derive(Debug, Clone)]
pub struct BitMatrix {
    cols: usize,
    rows: Vec<Vec<u64>>,
}

impl BitMatrix {
    pub fn new(cols: usize) -> Self {
        BitMatrix {
            cols,
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, ones: impl IntoIterator<Item = usize>) {
        let mut row = vec![0u64; self.cols.div_ceil(64)];
        for c in ones {
            assert!(c < self.cols, "column {c} out of range");
            row[c / 64] ^= 1 << (c % 64);
        }
        self.rows.push(row);
    }

    /// Rank by Gaussian elimination; consumes a copy of the rows.
    pub fn rank(&self) -> usize {
        let mut rows = self.rows.clone();
        let mut rank = 0;
        for col in 0..self.cols {
            let (word, bit) = (col / 64, 1u64 << (col % 64));
            let Some(p) = (rank..rows.len()).find(|&r| rows[r][word] & bit != 0) else {
                continue;
            };
            rows.swap(rank, p);
            let pivot = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row[word] & bit != 0 {
                    for (x, y) in row.iter_mut().zip(&pivot) {
                        *x ^= y;
                    }
                }
            }
            rank += 1;
            if rank == rows.len() {
                break;
            }
        }
        rank
    }
}

struct PrefixHomology<'a> {
    flt: &'a Filtration,
    position: Vec<usize>,
}

impl<'a> PrefixHomology<'a> {
    fn new(flt: &'a Filtration) -> Self {
        let mut position = vec![usize::MAX; flt.num_vertices()];
        for (pos, e) in flt.entries().iter().enumerate() {
            if let Simplex::Vertex(v) = e.simplex {
                position[v] = pos;
            }
        }
        PrefixHomology { flt, position }
    }

    fn edges(&self, len: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.flt.entries()[..len]
            .iter()
            .filter_map(|e| match e.simplex {
                Simplex::Edge(a, b) => Some((a, b)),
                Simplex::Vertex(_) => None,
            })
    }

    fn count(&self, len: usize, dim: usize) -> usize {
        self.flt.entries()[..len]
            .iter()
            .filter(|e| e.simplex.dim() == dim)
            .count()
    }

    /// Rank of the edge boundary matrix of the prefix `q`, with rows
    /// restricted to vertices at positions `>= row_from`.
    fn boundary_rank(&self, q: usize, row_from: usize) -> usize {
        let mut m = BitMatrix::new(self.flt.num_vertices());
        for (a, b) in self.edges(q) {
            m.push_row([a, b].into_iter().filter(|&v| self.position[v] >= row_from));
        }
        m.rank()
    }

    /// `β_k` of the inclusion of prefix `p` into prefix `q`, `p <= q`.
    fn betti(&self, k: usize, p: usize, q: usize) -> usize {
        debug_assert!(p <= q);
        match k {
            // Z_0 is all of C_0; subtract dim(B_0(K_q) ∩ C_0(K_p)).
            0 => {
                let boundaries = self.boundary_rank(q, 0);
                let outside = self.boundary_rank(q, p);
                self.count(p, 0) - (boundaries - outside)
            }
            // no 2-simplices: nothing bounds, β_1 = dim Z_1(K_p)
            1 => self.count(p, 1) - self.boundary_rank(p, 0),
            _ => 0,
        }
    }
}

/// Prefix length of each level: `ends[i]` is the size of `K^{f,i}`.
fn level_ends(flt: &Filtration) -> Vec<usize> {
    let mut ends = vec![0; flt.num_levels() + 1];
    for (pos, e) in flt.entries().iter().enumerate() {
        ends[e.level] = pos + 1;
    }
    ends
}

/// Persistent Betti numbers `β_k^{i,j}` for `k ∈ {0, 1}` and all
/// `0 <= i <= j <= m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BettiTable {
    m: usize,
    beta: [Vec<Vec<usize>>; 2],
}

impl BettiTable {
    pub fn compute(flt: &Filtration) -> Self {
        let ends = level_ends(flt);
        let ph = PrefixHomology::new(flt);
        let m = flt.num_levels();
        let table = |k| {
            (0..=m)
                .map(|i| {
                    (0..=m)
                        .map(|j| {
                            if i <= j {
                                ph.betti(k, ends[i], ends[j])
                            } else {
                                0
                            }
                        })
                        .collect()
                })
                .collect()
        };
        BettiTable {
            m,
            beta: [table(0), table(1)],
        }
    }

    pub fn num_levels(&self) -> usize {
        self.m
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> Result<usize> {
        if k > 1 || i > j || j > self.m {
            return Err(GflError::Index(format!(
                "beta({k}, {i}, {j}) with m = {}",
                self.m
            )));
        }
        Ok(self.beta[k][i][j])
    }
}

/// `β_k^{i,j}` of a filtration, levels 1-based with `0` the empty complex.
pub fn persistent_betti(flt: &Filtration, k: usize, i: usize, j: usize) -> Result<usize> {
    let m = flt.num_levels();
    if k > 1 || i > j || j > m {
        return Err(GflError::Index(format!("beta({k}, {i}, {j}) with m = {m}")));
    }
    let ends = level_ends(flt);
    Ok(PrefixHomology::new(flt).betti(k, ends[i], ends[j]))
}

/// Barcode multiplicities: `finite[(i, j)]` for `1 <= i < j <= m` and
/// `essential[i]` for `1 <= i <= m`. Signed so that negative values, which
/// would contradict the theory, stay observable.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Multiplicities {
    pub finite: BTreeMap<(usize, usize), i64>,
    pub essential: BTreeMap<usize, i64>,
}

fn inclusion_exclusion(beta: impl Fn(usize, usize) -> i64, steps: usize) -> Multiplicities {
    let mut out = Multiplicities::default();
    for i in 1..=steps {
        for j in i + 1..=steps {
            let mu = (beta(i, j - 1) - beta(i, j)) - (beta(i - 1, j - 1) - beta(i - 1, j));
            if mu != 0 {
                out.finite.insert((i, j), mu);
            }
        }
        let mu = beta(i, steps) - beta(i - 1, steps);
        if mu != 0 {
            out.essential.insert(i, mu);
        }
    }
    out
}

pub fn multiplicities(bt: &BettiTable, k: usize) -> Multiplicities {
    inclusion_exclusion(|i, j| bt.beta[k.min(1)][i][j] as i64, bt.m)
}

/// Barcode values from multiplicities alone.
///
/// Zero-persistence 0-dimensional points are recovered by splitting each
/// level into its vertex-only prefix and the full level, then reading
/// multiplicities on the refined sequence; a point whose birth and death
/// steps fall in the same level is flagged.
pub fn oracle_barcode(flt: &Filtration) -> BarcodeValues {
    let ph = PrefixHomology::new(flt);
    let m = flt.num_levels();
    let ends = level_ends(flt);
    // refined step s: 2i-1 = vertex prefix of level i, 2i = level i
    let mut steps = vec![0usize; 2 * m + 1];
    for i in 1..=m {
        let vertices_end = flt.entries()[ends[i - 1]..ends[i]]
            .iter()
            .take_while(|e| e.simplex.dim() == 0)
            .count();
        steps[2 * i - 1] = ends[i - 1] + vertices_end;
        steps[2 * i] = ends[i];
    }
    let level = |s: usize| s.div_ceil(2);

    let mut out = BarcodeValues::default();
    for k in 0..=1 {
        let mut table = vec![vec![0i64; 2 * m + 1]; 2 * m + 1];
        for (p, row) in table.iter_mut().enumerate() {
            for (q, cell) in row.iter_mut().enumerate().skip(p) {
                *cell = ph.betti(k, steps[p], steps[q]) as i64;
            }
        }
        let mu = inclusion_exclusion(|p, q| table[p][q], 2 * m);
        for (&(s, t), &count) in &mu.finite {
            assert!(count > 0, "negative multiplicity at ({s}, {t})");
            let (a, b) = (flt.level_value(level(s)), flt.level_value(level(t)));
            let point = (a, b, level(s) == level(t));
            debug_assert_eq!(k, 0, "graphs have no finite 1-dimensional points");
            out.b0_finite
                .extend(std::iter::repeat_n(point, count as usize));
        }
        for (&s, &count) in &mu.essential {
            assert!(count > 0, "negative essential multiplicity at {s}");
            let target = if k == 0 {
                &mut out.b0_essential
            } else {
                &mut out.b1_essential
            };
            target.extend(std::iter::repeat_n(
                flt.level_value(level(s)),
                count as usize,
            ));
        }
    }
    out.b0_finite.sort_by(|x, y| {
        x.0.total_cmp(&y.0)
            .then(x.1.total_cmp(&y.1))
            .then(x.2.cmp(&y.2))
    });
    out.b0_essential.sort_by(f64::total_cmp);
    out.b1_essential.sort_by(f64::total_cmp);
    out
}
