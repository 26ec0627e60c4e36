//! Sublevel-set filtrations of vertex-filtered graphs.
//!
//! Edges take the maximum of their endpoint values. Simplices are totally
//! ordered by `(value, dimension, vertex tuple)`, so within one value level
//! every vertex precedes every edge and faces always precede cofaces.

use std::cmp::Ordering;

use crate::error::{GflError, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Simplex {
    Vertex(usize),
    /// Endpoints in ascending order.
    Edge(usize, usize),
}

impl Simplex {
    pub fn dim(&self) -> usize {
        match self {
            Simplex::Vertex(_) => 0,
            Simplex::Edge(..) => 1,
        }
    }
}

/// A filtration entry: the simplex, its value, the vertex whose filter value
/// realizes it, and its 1-based level among distinct values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiltrationEntry {
    pub simplex: Simplex,
    pub value: f64,
    pub attribution: usize,
    pub level: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Filtration {
    num_vertices: usize,
    entries: Vec<FiltrationEntry>,
    levels: Vec<f64>,
}

impl Filtration {
    pub fn entries(&self) -> &[FiltrationEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    /// Sorted distinct filtration values `a_1 < ... < a_m`.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Number of distinct levels `m`.
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Value of level `i` (1-based).
    pub fn level_value(&self, i: usize) -> f64 {
        self.levels[i - 1]
    }
}

fn key_cmp(a: &FiltrationEntry, b: &FiltrationEntry) -> Ordering {
    a.value
        .total_cmp(&b.value)
        .then(a.simplex.dim().cmp(&b.simplex.dim()))
        .then(a.simplex.cmp(&b.simplex))
}

/// Builds the sublevel filtration of `g` under the vertex values `f`.
pub fn build_sublevel_filtration(g: &Graph, f: &[f64]) -> Result<Filtration> {
    let n = g.num_vertices();
    if f.len() != n {
        return Err(GflError::Index(format!(
            "{} filter values for {n} vertices",
            f.len()
        )));
    }
    if let Some(v) = f.iter().position(|x| !x.is_finite()) {
        return Err(GflError::Numeric(format!(
            "filter value {} at vertex {v}",
            f[v]
        )));
    }
    let mut entries = Vec::with_capacity(n + g.num_edges());
    entries.extend(f.iter().enumerate().map(|(v, &value)| FiltrationEntry {
        simplex: Simplex::Vertex(v),
        // -0.0 and 0.0 must share a level
        value: value + 0.0,
        attribution: v,
        level: 0,
    }));
    entries.extend(g.edges().iter().map(|&(a, b)| {
        // ties go to the smaller index, which is `a`
        let attribution = if f[b] > f[a] { b } else { a };
        FiltrationEntry {
            simplex: Simplex::Edge(a, b),
            value: f[attribution] + 0.0,
            attribution,
            level: 0,
        }
    }));
    entries.sort_unstable_by(key_cmp);

    let mut levels: Vec<f64> = Vec::new();
    for e in &mut entries {
        if levels.last() != Some(&e.value) {
            levels.push(e.value);
        }
        e.level = levels.len();
    }
    Ok(Filtration {
        num_vertices: n,
        entries,
        levels,
    })
}

/// Elementwise negation, turning sublevel into superlevel filtrations.
pub fn negate_filter(f: &[f64]) -> Vec<f64> {
    f.iter().map(|x| -x).collect()
}
