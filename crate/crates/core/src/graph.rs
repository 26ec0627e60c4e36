//! Graphs, datasets, initial node features and cross-validation folds.
//!
//! A [`Graph`] doubles as a one-dimensional simplicial complex: its vertices
//! are the 0-simplices and its edges the 1-simplices.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GflError, Result};

/// Undirected simple graph with optional discrete vertex labels.
///
/// Edges are stored once as `(i, j)` with `i < j`, sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    num_vertices: usize,
    edges: Vec<(usize, usize)>,
    node_labels: Option<Vec<usize>>,
    label: usize,
}

impl Graph {
    /// Builds a graph, normalizing edge orientation and dropping duplicates.
    ///
    /// Self-loops, out-of-range endpoints and label vectors of the wrong
    /// length are rejected.
    pub fn new(
        num_vertices: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        node_labels: Option<Vec<usize>>,
        label: usize,
    ) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(GflError::Structure(format!("self-loop at vertex {a}")));
            }
            if a >= num_vertices || b >= num_vertices {
                return Err(GflError::Structure(format!(
                    "edge ({a}, {b}) out of range for {num_vertices} vertices"
                )));
            }
            set.insert((a.min(b), a.max(b)));
        }
        if let Some(labels) = &node_labels {
            if labels.len() != num_vertices {
                return Err(GflError::Structure(format!(
                    "{} node labels for {num_vertices} vertices",
                    labels.len()
                )));
            }
        }
        Ok(Graph {
            num_vertices,
            edges: set.into_iter().collect(),
            node_labels,
            label,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn node_labels(&self) -> Option<&[usize]> {
        self.node_labels.as_deref()
    }

    /// Class index of the graph.
    pub fn label(&self) -> usize {
        self.label
    }

    pub fn set_label(&mut self, label: usize) {
        self.label = label;
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_vertices];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    /// Number of connected components, counted with a plain DFS.
    pub fn num_components(&self) -> usize {
        let adj = self.adjacency();
        let mut seen = vec![false; self.num_vertices];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..self.num_vertices {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for &u in &adj[v] {
                    if !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
        }
        count
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_vertices];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    /// Returns the graph with vertex `v` renamed to `perm[v]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.num_vertices {
            return Err(GflError::Structure(format!(
                "permutation of length {} for {} vertices",
                perm.len(),
                self.num_vertices
            )));
        }
        let labels = self.node_labels.as_ref().map(|l| {
            let mut out = vec![0; l.len()];
            for (v, &lab) in l.iter().enumerate() {
                out[perm[v]] = lab;
            }
            out
        });
        Graph::new(
            self.num_vertices,
            self.edges.iter().map(|&(a, b)| (perm[a], perm[b])),
            labels,
            self.label,
        )
    }
}

/// A labelled collection of graphs together with dataset-wide statistics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphDataset {
    pub name: String,
    graphs: Vec<Graph>,
    num_classes: usize,
    max_degree: usize,
    num_node_labels: usize,
}

impl GraphDataset {
    /// Computes the statistics from `graphs`. Graph labels must already be
    /// dense class indices `0..num_classes`.
    pub fn new(name: impl Into<String>, graphs: Vec<Graph>) -> Result<Self> {
        let classes: BTreeSet<usize> = graphs.iter().map(Graph::label).collect();
        if let Some(&max) = classes.iter().next_back() {
            if max + 1 != classes.len() {
                return Err(GflError::Structure(format!(
                    "graph labels are not dense: {} distinct, max {max}",
                    classes.len()
                )));
            }
        }
        let max_degree = graphs.iter().map(Graph::max_degree).max().unwrap_or(0);
        let num_node_labels = graphs
            .iter()
            .filter_map(Graph::node_labels)
            .flat_map(|l| l.iter().copied())
            .max()
            .map_or(0, |m| m + 1);
        Ok(GraphDataset {
            name: name.into(),
            num_classes: classes.len(),
            graphs,
            max_degree,
            num_node_labels,
        })
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn num_node_labels(&self) -> usize {
        self.num_node_labels
    }

    pub fn has_node_labels(&self) -> bool {
        !self.graphs.is_empty() && self.graphs.iter().all(|g| g.node_labels.is_some())
    }

    /// Returns a copy with every graph's labels replaced. Used by the
    /// leakage tests.
    pub fn with_labels(&self, labels: &[usize]) -> Result<Self> {
        let mut graphs = self.graphs.clone();
        for (g, &l) in graphs.iter_mut().zip(labels) {
            g.label = l;
        }
        GraphDataset::new(self.name.clone(), graphs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    Degree,
    Uninformative,
    DegreeAndLabel,
}

impl std::str::FromStr for FeatureMode {
    type Err = GflError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "degree" => Ok(FeatureMode::Degree),
            "uninformative" => Ok(FeatureMode::Uninformative),
            "degree_and_label" => Ok(FeatureMode::DegreeAndLabel),
            other => Err(GflError::Config(format!("unknown feature mode `{other}`"))),
        }
    }
}

/// Per-vertex embedding indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeFeatures {
    pub degree: Vec<usize>,
    pub label: Option<Vec<usize>>,
}

impl NodeFeatures {
    pub fn len(&self) -> usize {
        self.degree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degree.is_empty()
    }

    /// `(deg, lab)` pairs, or `(deg, 0)` when no labels are attached.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        match &self.label {
            Some(l) => self.degree.iter().copied().zip(l.iter().copied()).collect(),
            None => self.degree.iter().map(|&d| (d, 0)).collect(),
        }
    }
}

/// Initial node representation: degree index, constant index, or degree
/// plus discrete label.
pub fn initial_features(g: &Graph, mode: FeatureMode) -> Result<NodeFeatures> {
    match mode {
        FeatureMode::Degree => Ok(NodeFeatures {
            degree: g.degrees(),
            label: None,
        }),
        FeatureMode::Uninformative => Ok(NodeFeatures {
            degree: vec![0; g.num_vertices()],
            label: None,
        }),
        FeatureMode::DegreeAndLabel => {
            let labels = g.node_labels().ok_or_else(|| {
                GflError::Config("degree_and_label features need node labels".into())
            })?;
            Ok(NodeFeatures {
                degree: g.degrees(),
                label: Some(labels.to_vec()),
            })
        }
    }
}

/// Splits dataset indices into `k` stratified folds.
///
/// Each class is shuffled with a seeded ChaCha8 stream and dealt
/// round-robin; the dealing cursor carries over between classes so fold
/// sizes differ by at most one.
pub fn stratified_folds(d: &GraphDataset, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(GflError::Stratification(format!("need k >= 2, got {k}")));
    }
    let mut by_class = vec![Vec::new(); d.num_classes()];
    for (i, g) in d.graphs().iter().enumerate() {
        by_class[g.label()].push(i);
    }
    for (c, members) in by_class.iter().enumerate() {
        if members.len() < k {
            return Err(GflError::Stratification(format!(
                "class {c} has {} members, fewer than {k} folds",
                members.len()
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut cursor = 0;
    for mut members in by_class {
        members.shuffle(&mut rng);
        for idx in members {
            folds[cursor % k].push(idx);
            cursor += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}
