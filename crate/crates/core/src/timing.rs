//! Runtime of the persistence stage against complex size.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Graph, GraphDataset};
use crate::nn::graph_barcodes;
use crate::synth::random_sparse_graph;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingRow {
    /// `|V| + |E|`.
    pub m: usize,
    /// Fastest of the repeats.
    pub seconds: f64,
}

/// Times sublevel plus superlevel persistence of every graph under a
/// random filter, sorted by `m`.
pub fn timing_benchmark(dataset: &GraphDataset, repeats: usize) -> Vec<TimingRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut rows: Vec<TimingRow> = dataset
        .graphs()
        .iter()
        .map(|g| {
            let f: Vec<f64> = (0..g.num_vertices()).map(|_| rng.random()).collect();
            TimingRow {
                m: g.num_vertices() + g.num_edges(),
                seconds: time_graph(g, &f, repeats),
            }
        })
        .collect();
    rows.sort_by(|a, b| a.m.cmp(&b.m).then(a.seconds.total_cmp(&b.seconds)));
    rows
}

fn time_graph(g: &Graph, f: &[f64], repeats: usize) -> f64 {
    (0..repeats.max(1))
        .map(|_| {
            let start = Instant::now();
            let b = graph_barcodes(g, f).expect("filter is valid");
            std::hint::black_box(b);
            start.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Random sparse graphs with `|E| ≈ 2|V|`, so `m ≈ 3|V|`, at `per_decade`
/// log-spaced sizes per decade of `m` in `[m_min, m_max]`.
pub fn timing_dataset(m_min: usize, m_max: usize, per_decade: usize, seed: u64) -> GraphDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = ((m_min.max(3) as f64).log10(), (m_max.max(3) as f64).log10());
    let steps = (((hi - lo) * per_decade as f64).round() as usize).max(1);
    let graphs = (0..=steps)
        .map(|i| {
            let m = 10f64.powf(lo + (hi - lo) * i as f64 / steps as f64);
            let n = (m / 3.0).round().max(1.0) as usize;
            random_sparse_graph(n, 2 * n, &mut rng)
        })
        .collect();
    GraphDataset::new("timing", graphs).expect("single class")
}

/// Least-squares slope of `log seconds` against `log m`, ignoring rows
/// with `m = 0` or non-positive time.
pub fn loglog_slope(rows: &[TimingRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.m > 0 && r.seconds > 0.0)
        .map(|r| ((r.m as f64).ln(), r.seconds.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn to_csv(rows: &[TimingRow]) -> String {
    let mut s = String::from("m,seconds\n");
    for r in rows {
        s.push_str(&format!("{},{:e}\n", r.m, r.seconds));
    }
    s
}
