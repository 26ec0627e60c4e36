//! End-to-end acceptance checks. Each test prints one `criterion N` line
//! to stderr (bypassing the test harness capture) before asserting.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use gfl_core::nn::gradcheck::{gradient_check, min_filter_gap, GradCheckOptions};
use gfl_core::nn::{
    forward_batch, loss_and_gradients, GraphInput, Mode, ModelConfig, ModelParams, Readout,
};
use gfl_core::oracle::oracle_barcode;
use gfl_core::synth::{random_graph, Family};
use gfl_core::timing::{loglog_slope, timing_benchmark, timing_dataset};
use gfl_core::train::Prepared;
use gfl_core::vectorize::{rational_hat, vectorize, StructureElement, VectorizationParams};
use gfl_core::{
    build_sublevel_filtration, initial_features, persistence_matrix_reduction,
    persistence_union_find, run_cv, BarcodePoint, BarcodeSet, DataSource, FeatureMode, Graph,
    NodeFeatures, SynthSpec, TrainConfig,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: u32, name: &str, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(
        std::io::stderr(),
        "criterion {n} [{name}]: {status} ({detail})"
    );
    assert!(pass, "criterion {n} failed: {detail}");
}

fn injective_filter(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut f: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    f.shuffle(rng);
    f
}

#[test]
fn criterion_1_engines_match_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0;
    for i in 0..1000 {
        let n = rng.random_range(1..=12);
        let p = [0.2, 0.5, 0.8][i % 3];
        let g = random_graph(n, p, &mut rng);
        let f = injective_filter(n, &mut rng);
        let flt = build_sublevel_filtration(&g, &f).unwrap();
        let uf = persistence_union_find(&flt).values();
        let red = persistence_matrix_reduction(&flt).values();
        let oracle = oracle_barcode(&flt);
        if uf != red || uf != oracle {
            mismatches += 1;
        }
    }
    report(
        1,
        "oracle equivalence",
        mismatches == 0,
        &format!(
            "1000 graphs, {mismatches} mismatches, {:.1}s",
            start.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_2_cardinality_identities() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = 0;
    for _ in 0..10_000 {
        let n = rng.random_range(0..=30);
        let g = random_graph(n, rng.random_range(0.0..0.6), &mut rng);
        let f: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0..5) as f64 / 4.0)
            .collect();
        let raw = persistence_union_find(&build_sublevel_filtration(&g, &f).unwrap());
        let c = g.num_components();
        let ok = raw.b0_essential.len() == c
            && raw.b1_essential.len() + n == g.num_edges() + c
            && raw.b0_finite.len() + c == n;
        failures += usize::from(!ok);
    }
    report(
        2,
        "cardinality identities",
        failures == 0,
        &format!(
            "10000 graphs, {failures} violations, {:.1}s",
            start.elapsed().as_secs_f64()
        ),
    );
}

fn labeled_connected_graph(rng: &mut impl Rng) -> (Graph, NodeFeatures) {
    let n = rng.random_range(4..=12);
    let g = Family::Cycles(rng.random_range(0..3))
        .generate(n, 0, rng)
        .unwrap();
    let labels = (0..n).map(|_| rng.random_range(0..32)).collect();
    let g = Graph::new(n, g.edges().to_vec(), Some(labels), 0).unwrap();
    let f = initial_features(&g, FeatureMode::DegreeAndLabel).unwrap();
    (g, f)
}

#[test]
fn criterion_3_end_to_end_gradient_check() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let config = ModelConfig {
        readout: Readout::Gfl,
        num_classes: 2,
        degree_vocab: 13,
        label_vocab: Some(32),
        hidden: 64,
        classifier_hidden: 64,
        elements: 100,
    };
    let params = ModelParams::init(config, 3);
    let mut data: Vec<_> = (0..200)
        .map(|_| labeled_connected_graph(&mut rng))
        .collect();
    let labels: Vec<usize> = (0..200).map(|_| rng.random_range(0..2)).collect();

    // Resample graphs until every graph's filter values are pairwise
    // distinct by a margin far above the step size. Batch statistics
    // couple the graphs, so recheck the whole batch each round.
    let gap = loop {
        let inputs: Vec<_> = data
            .iter()
            .map(|(graph, features)| GraphInput { graph, features })
            .collect();
        let out = forward_batch(&inputs, &params, Mode::Train).unwrap();
        let filters = out.tape.filter_values().unwrap();
        let close: Vec<usize> = filters
            .iter()
            .enumerate()
            .filter(|(_, f)| min_filter_gap(&[f]).unwrap_or(1.0) < 1e-4)
            .map(|(i, _)| i)
            .collect();
        if close.is_empty() {
            break min_filter_gap(&filters).unwrap();
        }
        for i in close {
            data[i] = labeled_connected_graph(&mut rng);
        }
    };
    let inputs: Vec<_> = data
        .iter()
        .map(|(graph, features)| GraphInput { graph, features })
        .collect();
    let check = gradient_check(
        &inputs,
        &labels,
        &params,
        Mode::Train,
        GradCheckOptions::default(),
    )
    .unwrap();
    let secs = start.elapsed().as_secs_f64();
    // entries whose ±h interval crosses an activation sign, a pairing change
    // or a hat kink are not differentiable there; keep them rare
    let straddling_ok = check.straddling.len() * 50 <= check.checked;
    report(
        3,
        "end-to-end gradient check",
        check.passed() && straddling_ok && secs < 600.0,
        &format!(
            "200 graphs, min filter gap {gap:.1e}, {} parameters, {} mismatches, \
             {} skipped across a nondifferentiable locus, max rel err {:.1e}, {secs:.0}s",
            check.checked,
            check.mismatches.len(),
            check.straddling.len(),
            check.max_rel_err
        ),
    );
}

fn random_barcode(rng: &mut impl Rng, n: usize) -> BarcodeSet {
    let mut bs = BarcodeSet::default();
    for _ in 0..n {
        let b: f64 = rng.random_range(0.0..1.0);
        let d: f64 = rng.random_range(0.0..1.0);
        bs.finite0.push(BarcodePoint {
            birth: b.min(d),
            death: b.max(d) + 1e-3,
            birth_attribution: 0,
            death_attribution: Some(1),
            zero_persistence: false,
        });
        bs.essential0
            .push(BarcodePoint::essential(rng.random_range(-1.0..1.0), 0));
        if rng.random_bool(0.5) {
            bs.essential1
                .push(BarcodePoint::essential(rng.random_range(-1.0..1.0), 0));
        }
    }
    bs
}

#[test]
fn criterion_4_vectorization_units() {
    let e = |c: &[f64], r: f64| StructureElement {
        center: c.to_vec(),
        radius: r,
    };
    let v1 = rational_hat(&[0.3, 0.7], &e(&[0.3, 0.7], 1.0)).unwrap();
    let v2 = rational_hat(&[0.5, 0.25], &e(&[0.25, 0.0], 0.5)).unwrap();
    let v3 = rational_hat(&[1.0, 0.0], &e(&[0.0, 0.0], 2.0)).unwrap();
    let values_ok =
        (v1 - 0.5).abs() < 1e-12 && (v2 - (1.0 / 1.5 - 1.0)).abs() < 1e-12 && v3.abs() < 1e-12;

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let vp = VectorizationParams::init(100, &mut rng);
    let mut additive = true;
    let mut invariant = true;
    for _ in 0..50 {
        let a = random_barcode(&mut rng, 6);
        let b = random_barcode(&mut rng, 4);
        let mut ab = a.clone();
        ab.finite0.extend(&b.finite0);
        ab.essential0.extend(&b.essential0);
        ab.essential1.extend(&b.essential1);
        let (va, vb, vab) = (
            vectorize(&a, &vp).unwrap(),
            vectorize(&b, &vp).unwrap(),
            vectorize(&ab, &vp).unwrap(),
        );
        // equal up to floating-point reassociation of the sums
        additive &= vab
            .iter()
            .zip(va.iter().zip(&vb))
            .all(|(s, (x, y))| (s - (x + y)).abs() < 1e-12);
        let mut shuffled = ab.clone();
        shuffled.finite0.reverse();
        shuffled.essential0.reverse();
        shuffled.essential1.reverse();
        let vs = vectorize(&shuffled, &vp).unwrap();
        invariant &= vs.iter().zip(&vab).all(|(x, y)| (x - y).abs() < 1e-12);
    }
    report(
        4,
        "vectorization units",
        values_ok && additive && invariant,
        &format!("hat values {v1}, {v2:.12}, {v3}; additivity {additive}; permutation invariance {invariant}"),
    );
}

#[test]
fn criterion_5_synthetic_separability() {
    let cfg = TrainConfig::new(DataSource::Synthetic(SynthSpec::trees_vs_cycles(2, 100, 5)));
    let m = run_cv(&cfg).unwrap();
    report(
        5,
        "trees vs two-cycles",
        m.mean_accuracy >= 0.95 && m.total_seconds < 900.0,
        &format!(
            "10-fold mean accuracy {:.3} ± {:.3}, {:.0}s",
            m.mean_accuracy, m.std_accuracy, m.total_seconds
        ),
    );
}

#[test]
fn criterion_6_imdb_binary() {
    let Some(dir) = std::env::var_os("GFL_IMDB_BINARY_DIR").map(PathBuf::from) else {
        let _ = writeln!(
            std::io::stderr(),
            "criterion 6 [IMDB-BINARY]: NOT RUN (set GFL_IMDB_BINARY_DIR to a TU-format IMDB-BINARY directory)"
        );
        return;
    };
    let cfg = TrainConfig::new(DataSource::Tu(dir));
    let m = run_cv(&cfg).unwrap();
    report(
        6,
        "IMDB-BINARY",
        m.mean_accuracy >= 0.66,
        &format!(
            "10-fold mean accuracy {:.3} ± {:.3}, {:.0}s",
            m.mean_accuracy, m.std_accuracy, m.total_seconds
        ),
    );
}

#[test]
fn criterion_7_quasi_linear_scaling() {
    let start = Instant::now();
    let d = timing_dataset(100, 100_000, 4, 7);
    let rows = timing_benchmark(&d, 5);
    let slope = loglog_slope(&rows).unwrap();
    let (lo, hi) = (rows.first().unwrap().m, rows.last().unwrap().m);
    report(
        7,
        "quasi-linear scaling",
        slope <= 1.3,
        &format!(
            "m in [{lo}, {hi}], {} sizes, log-log slope {slope:.3}, {:.1}s",
            rows.len(),
            start.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_8_tie_determinism() {
    // Degree features make structurally equivalent vertices tie exactly,
    // and the degree filter ties every vertex of equal degree.
    let spec = SynthSpec {
        n_per_class: 10,
        ..SynthSpec::trees_vs_cycles(2, 10, 8)
    };
    let data = Prepared::new(
        gfl_core::generate_synthetic(&spec).unwrap(),
        FeatureMode::Degree,
    )
    .unwrap();
    let all: Vec<usize> = (0..data.dataset.len()).collect();
    let labels = data.labels(&all);
    let mut ties = 0;
    let mut identical = true;
    for readout in [Readout::Gfl, Readout::PhOnly] {
        let config = ModelConfig {
            hidden: 16,
            elements: 20,
            ..ModelConfig::for_dataset(&data.dataset, readout, FeatureMode::Degree).unwrap()
        };
        let params = ModelParams::init(config, 8);
        let run = || {
            let out = forward_batch(&data.inputs(&all), &params, Mode::Train).unwrap();
            let (_, mut grads, _) =
                loss_and_gradients(&data.inputs(&all), &labels, &params, Mode::Train).unwrap();
            (out.tape.barcodes().to_vec(), grads.trainable_values())
        };
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let (b1, g1) = run();
        let (b2, g2) = single.install(run);
        let out = forward_batch(&data.inputs(&all), &params, Mode::Train).unwrap();
        ties += out
            .tape
            .filter_values()
            .unwrap()
            .iter()
            .filter(|f| min_filter_gap(&[f]) == Some(0.0))
            .count();
        let bits = |g: &[f64]| g.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        identical &= b1 == b2 && bits(&g1) == bits(&g2);
    }
    report(
        8,
        "tie determinism",
        identical && ties > 0,
        &format!("{ties} graph filters with exact ties; barcodes and gradients identical across runs: {identical}"),
    );
}
