use crate::filtration::{Filtration, Simplex};

use super::{BarcodePoint, RawBarcodes};

/// Disjoint-set forest whose roots remember the elder vertex of their
/// component, i.e. the one earliest in the filtration.
struct Components {
    parent: Vec<usize>,
    rank: Vec<u8>,
    elder: Vec<usize>,
}

impl Components {
    fn new(n: usize) -> Self {
        Components {
            parent: (0..n).collect(),
            rank: vec![0; n],
            elder: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, ra: usize, rb: usize, elder: usize) {
        let root = match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => {
                self.parent[ra] = rb;
                rb
            }
            std::cmp::Ordering::Greater => {
                self.parent[rb] = ra;
                ra
            }
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
                ra
            }
        };
        self.elder[root] = elder;
    }
}

/// Persistence by union-find with the elder rule.
///
/// Components are compared by the filtration position of their elder
/// vertex. Because the order sorts equal values by vertex index, equal
/// births are resolved in favour of the smaller vertex index surviving.
pub fn persistence_union_find(flt: &Filtration) -> RawBarcodes {
    let n = flt.num_vertices();
    let mut position = vec![usize::MAX; n];
    let mut value = vec![0.0; n];
    let mut level = vec![0; n];
    for (pos, e) in flt.entries().iter().enumerate() {
        if let Simplex::Vertex(v) = e.simplex {
            position[v] = pos;
            value[v] = e.value;
            level[v] = e.level;
        }
    }

    let mut comps = Components::new(n);
    let mut out = RawBarcodes::default();
    for e in flt.entries() {
        let Simplex::Edge(a, b) = e.simplex else {
            continue;
        };
        debug_assert!(position[a] != usize::MAX && position[b] != usize::MAX);
        let (ra, rb) = (comps.find(a), comps.find(b));
        if ra == rb {
            out.b1_essential
                .push(BarcodePoint::essential(e.value, e.attribution));
            continue;
        }
        let (ea, eb) = (comps.elder[ra], comps.elder[rb]);
        let (elder, young) = if position[ea] < position[eb] {
            (ea, eb)
        } else {
            (eb, ea)
        };
        out.b0_finite.push(BarcodePoint {
            birth: value[young],
            death: e.value,
            birth_attribution: young,
            death_attribution: Some(e.attribution),
            zero_persistence: level[young] == e.level,
        });
        comps.union(ra, rb, elder);
    }
    for v in 0..n {
        if comps.find(v) == v {
            let elder = comps.elder[v];
            out.b0_essential
                .push(BarcodePoint::essential(value[elder], elder));
        }
    }
    out
}
