//! Synthetic graph families whose classes differ in their cycle rank.

use std::collections::BTreeSet;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::KeyValues;
use crate::error::{GflError, Result};
use crate::graph::{Graph, GraphDataset};

/// A connected graph family with a fixed number of independent cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Uniform random recursive tree plus `cycles` extra edges.
    Cycles(usize),
    /// Preferential-attachment tree (a few high-degree hubs) plus
    /// `cycles` extra edges.
    HubCycles(usize),
}

impl Family {
    pub fn cycle_rank(self) -> usize {
        match self {
            Family::Cycles(k) | Family::HubCycles(k) => k,
        }
    }

    pub fn generate(self, n: usize, label: usize, rng: &mut impl Rng) -> Result<Graph> {
        let k = self.cycle_rank();
        let max_edges = n * n.saturating_sub(1) / 2;
        if n == 0 || n - 1 + k > max_edges {
            return Err(GflError::Config(format!(
                "{self:?} needs more than {n} vertices"
            )));
        }
        let mut edges = BTreeSet::new();
        let mut endpoints = Vec::with_capacity(2 * n);
        for v in 1..n {
            let parent = match self {
                Family::Cycles(_) => rng.random_range(0..v),
                // endpoint lists weight vertices by degree
                Family::HubCycles(_) => *endpoints.choose(rng).unwrap_or(&0),
            };
            edges.insert((parent, v));
            endpoints.extend([parent, v]);
        }
        while edges.len() < n - 1 + k {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a != b {
                edges.insert((a.min(b), a.max(b)));
            }
        }
        Graph::new(n, edges, None, label)
    }
}

impl FromStr for Family {
    type Err = GflError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let count = |rest: &str| {
            rest.parse::<usize>()
                .map_err(|e| GflError::Config(format!("family `{s}`: {e}")))
        };
        match s {
            "tree" => Ok(Family::Cycles(0)),
            "cycle" => Ok(Family::Cycles(1)),
            "hub_tree" => Ok(Family::HubCycles(0)),
            _ => {
                if let Some(rest) = s.strip_prefix("cycles:") {
                    Ok(Family::Cycles(count(rest)?))
                } else if let Some(rest) = s.strip_prefix("hub_cycles:") {
                    Ok(Family::HubCycles(count(rest)?))
                } else {
                    Err(GflError::Config(format!("unknown graph family `{s}`")))
                }
            }
        }
    }
}

/// One class per family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthSpec {
    pub name: String,
    pub families: Vec<Family>,
    pub n_per_class: usize,
    pub min_size: usize,
    pub max_size: usize,
    pub seed: u64,
}

impl SynthSpec {
    pub fn trees_vs_cycles(cycles: usize, n_per_class: usize, seed: u64) -> Self {
        SynthSpec {
            name: format!("TREES-VS-{cycles}CYCLES"),
            families: vec![Family::Cycles(0), Family::Cycles(cycles)],
            n_per_class,
            min_size: 10,
            max_size: 30,
            seed,
        }
    }

    /// Reads `name`, `families` (comma separated), `n_per_class`,
    /// `min_size`, `max_size` and `seed`.
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        kv.check_known(&[
            "name",
            "families",
            "n_per_class",
            "min_size",
            "max_size",
            "seed",
        ])?;
        let families = kv
            .get_str("families")
            .unwrap_or("")
            .split(',')
            .filter(|f| !f.trim().is_empty())
            .map(Family::from_str)
            .collect::<Result<Vec<_>>>()?;
        Ok(SynthSpec {
            name: kv.get_or("name", "SYNTH".to_owned())?,
            families,
            n_per_class: kv.get_or("n_per_class", 100)?,
            min_size: kv.get_or("min_size", 10)?,
            max_size: kv.get_or("max_size", 30)?,
            seed: kv.get_or("seed", 0)?,
        })
    }
}

/// Generates `n_per_class` graphs per family, interleaved by class.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<GraphDataset> {
    if spec.families.is_empty() {
        return Err(GflError::Config("no graph families given".into()));
    }
    if spec.min_size > spec.max_size || spec.min_size == 0 {
        return Err(GflError::Config(format!(
            "bad size range {}..={}",
            spec.min_size, spec.max_size
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut graphs = Vec::with_capacity(spec.n_per_class * spec.families.len());
    for _ in 0..spec.n_per_class {
        for (label, family) in spec.families.iter().enumerate() {
            let n = rng.random_range(spec.min_size..=spec.max_size);
            graphs.push(family.generate(n, label, &mut rng)?);
        }
    }
    GraphDataset::new(spec.name.clone(), graphs)
}

/// Erdős–Rényi graph `G(n, p)`.
pub fn random_graph(n: usize, p: f64, rng: &mut impl Rng) -> Graph {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p) {
                edges.push((a, b));
            }
        }
    }
    Graph::new(n, edges, None, 0).expect("valid by construction")
}

/// Graph with `n` vertices and up to `m` uniformly drawn edges, for sizes
/// where `G(n, p)` sampling is too slow.
pub fn random_sparse_graph(n: usize, m: usize, rng: &mut impl Rng) -> Graph {
    let edges = (0..if n > 1 { m } else { 0 }).filter_map(|_| {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        (a != b).then_some((a, b))
    });
    Graph::new(n, edges.collect::<Vec<_>>(), None, 0).expect("valid by construction")
}

/// Degree-preserving rewiring: `swaps` attempted double-edge swaps
/// `(a, b), (c, d) → (a, d), (c, b)`, skipping any that would create a
/// self-loop or a parallel edge.
pub fn rewire_edges(g: &Graph, swaps: usize, rng: &mut impl Rng) -> Graph {
    let mut edges: Vec<(usize, usize)> = g.edges().to_vec();
    let mut present: BTreeSet<(usize, usize)> = edges.iter().copied().collect();
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    for _ in 0..if edges.len() >= 2 { swaps } else { 0 } {
        let i = rng.random_range(0..edges.len());
        let j = rng.random_range(0..edges.len());
        let ((a, b), (mut c, mut d)) = (edges[i], edges[j]);
        if rng.random_bool(0.5) {
            std::mem::swap(&mut c, &mut d);
        }
        if a == d
            || c == b
            || a == c
            || b == d
            || present.contains(&key(a, d))
            || present.contains(&key(c, b))
        {
            continue;
        }
        present.remove(&key(a, b));
        present.remove(&key(c, d));
        edges[i] = key(a, d);
        edges[j] = key(c, b);
        present.insert(edges[i]);
        present.insert(edges[j]);
    }
    Graph::new(
        g.num_vertices(),
        edges,
        g.node_labels().map(<[usize]>::to_vec),
        g.label(),
    )
    .expect("rewiring keeps a simple graph")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trees_vs_cycles_contract() {
        let d = generate_synthetic(&SynthSpec::trees_vs_cycles(1, 100, 4)).unwrap();
        assert_eq!(d.len(), 200);
        assert_eq!(d.num_classes(), 2);
        for g in d.graphs() {
            assert!((10..=30).contains(&g.num_vertices()));
            assert_eq!(g.num_components(), 1);
            let rank = g.num_edges() + 1 - g.num_vertices();
            assert_eq!(rank, g.label());
        }
    }

    #[test]
    fn cyclomatic_identity_for_every_family() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for fam in [
            "tree",
            "cycle",
            "cycles:2",
            "cycles:5",
            "hub_tree",
            "hub_cycles:3",
        ] {
            let f: Family = fam.parse().unwrap();
            for n in [6, 17, 30] {
                let g = f.generate(n, 0, &mut rng).unwrap();
                let c = g.num_components();
                assert_eq!(
                    g.num_edges() + c - g.num_vertices(),
                    f.cycle_rank(),
                    "{fam}"
                );
            }
        }
    }

    #[test]
    fn hub_trees_are_degree_inhomogeneous() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut hub = 0;
        let mut uniform = 0;
        for _ in 0..50 {
            hub += Family::HubCycles(0)
                .generate(40, 0, &mut rng)
                .unwrap()
                .max_degree();
            uniform += Family::Cycles(0)
                .generate(40, 0, &mut rng)
                .unwrap()
                .max_degree();
        }
        assert!(hub > uniform, "{hub} vs {uniform}");
    }

    #[test]
    fn deterministic_and_validated() {
        let spec = SynthSpec::trees_vs_cycles(2, 10, 1);
        assert_eq!(
            generate_synthetic(&spec).unwrap(),
            generate_synthetic(&spec).unwrap()
        );
        let empty = SynthSpec {
            families: vec![],
            ..spec.clone()
        };
        assert!(matches!(
            generate_synthetic(&empty),
            Err(GflError::Config(_))
        ));
        assert!(Family::Cycles(10)
            .generate(3, 0, &mut ChaCha8Rng::seed_from_u64(0))
            .is_err());
        assert!("loops:3".parse::<Family>().is_err());
    }

    #[test]
    fn rewiring_keeps_degrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = random_graph(20, 0.3, &mut rng);
        let h = rewire_edges(&g, 200, &mut rng);
        assert_eq!(g.degrees(), h.degrees());
        assert_ne!(g.edges(), h.edges());
    }

    #[test]
    fn spec_from_key_values() {
        let kv = KeyValues::parse("families = tree, cycles:2\nn_per_class = 7\nseed = 3").unwrap();
        let spec = SynthSpec::from_kv(&kv).unwrap();
        assert_eq!(spec.families, vec![Family::Cycles(0), Family::Cycles(2)]);
        assert_eq!(spec.n_per_class, 7);
        assert_eq!((spec.min_size, spec.max_size), (10, 30));
    }
}
