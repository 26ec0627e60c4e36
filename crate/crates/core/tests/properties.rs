use gfl_core::nn::{vertex_filter_forward, Mode, ModelConfig, ModelParams, Readout};
use gfl_core::oracle::{multiplicities, oracle_barcode, BettiTable};
use gfl_core::tu::{parse_tu_dataset, to_tu_files};
use gfl_core::vectorize::{vectorize, VectorizationParams};
use gfl_core::{
    build_sublevel_filtration, initial_features, persistence_matrix_reduction,
    persistence_union_find, stratified_folds, BarcodePoint, BarcodeSet, FeatureMode, Graph,
    GraphDataset, RawBarcodes, Simplex,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Graph on up to `max_n` vertices with independent edges.
fn graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (0..=max_n)
        .prop_flat_map(|n| {
            let pairs = n * n.saturating_sub(1) / 2;
            (
                Just(n),
                proptest::collection::vec(any::<bool>(), pairs),
                0.1f64..0.9,
            )
        })
        .prop_map(|(n, bits, _)| {
            let mut edges = Vec::new();
            let mut k = 0;
            for a in 0..n {
                for b in a + 1..n {
                    if bits[k] {
                        edges.push((a, b));
                    }
                    k += 1;
                }
            }
            Graph::new(n, edges, None, 0).unwrap()
        })
}

/// Graph with an injective filter whose values sit on a grid with gap `1/n`.
fn graph_with_injective_filter(max_n: usize) -> impl Strategy<Value = (Graph, Vec<f64>)> {
    graph(max_n).prop_flat_map(|g| {
        let n = g.num_vertices();
        let order = Just((0..n).collect::<Vec<usize>>()).prop_shuffle();
        (Just(g), order).prop_map(move |(g, order)| {
            let f = order.iter().map(|&k| (k as f64 + 0.5) / n as f64).collect();
            (g, f)
        })
    })
}

/// Graph with a filter taking few distinct values, so ties are common.
fn graph_with_tied_filter(max_n: usize) -> impl Strategy<Value = (Graph, Vec<f64>)> {
    graph(max_n).prop_flat_map(|g| {
        let n = g.num_vertices();
        (Just(g), proptest::collection::vec(0u8..4, n))
            .prop_map(|(g, v)| (g, v.into_iter().map(|x| x as f64 / 3.0).collect()))
    })
}

fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<usize>>()).prop_shuffle()
}

fn barcodes(g: &Graph, f: &[f64]) -> RawBarcodes {
    persistence_union_find(&build_sublevel_filtration(g, f).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn handshake(g in graph(15)) {
        prop_assert_eq!(g.degrees().iter().sum::<usize>(), 2 * g.num_edges());
    }

    #[test]
    fn tu_round_trip(gs in proptest::collection::vec(graph(8), 1..6), labels in proptest::collection::vec(0usize..3, 6)) {
        let graphs: Vec<Graph> = gs
            .into_iter()
            .enumerate()
            .map(|(i, g)| {
                let node_labels = (0..g.num_vertices()).map(|v| (v * 7 + i) % 5).collect();
                Graph::new(g.num_vertices(), g.edges().to_vec(), Some(node_labels), labels[i]).unwrap()
            })
            .collect();
        // relabel classes densely so the dataset is valid
        let mut classes: Vec<usize> = graphs.iter().map(|g| g.label()).collect();
        classes.sort();
        classes.dedup();
        let graphs: Vec<Graph> = graphs
            .into_iter()
            .map(|mut g| {
                g.set_label(classes.binary_search(&g.label()).unwrap());
                g
            })
            .collect();
        // vertices of an isolated-vertex-only trailing graph still need an indicator line
        let d = GraphDataset::new("RT", graphs).unwrap();
        let files = to_tu_files(&d);
        let back = parse_tu_dataset("RT", files.sources()).unwrap();
        prop_assert_eq!(back.graphs(), d.graphs());
    }

    #[test]
    fn folds_partition_the_dataset(sizes in proptest::collection::vec(3usize..20, 2..4), k in 2usize..4, seed in any::<u64>()) {
        let mut graphs = Vec::new();
        for (c, &s) in sizes.iter().enumerate() {
            for _ in 0..s {
                graphs.push(Graph::new(1, [], None, c).unwrap());
            }
        }
        let d = GraphDataset::new("F", graphs).unwrap();
        let folds = stratified_folds(&d, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        prop_assert_eq!(all.len(), d.len());
        all.sort();
        all.dedup();
        prop_assert_eq!(all.len(), d.len());
        for f in &folds {
            for c in 0..sizes.len() {
                let in_fold = f.iter().filter(|&&i| d.graphs()[i].label() == c).count();
                prop_assert!(in_fold * k + k > sizes[c] && in_fold * k < sizes[c] + k);
            }
        }
    }

    #[test]
    fn faces_come_before_cofaces((g, f) in graph_with_tied_filter(12)) {
        let flt = build_sublevel_filtration(&g, &f).unwrap();
        let mut position = vec![usize::MAX; g.num_vertices()];
        for (p, e) in flt.entries().iter().enumerate() {
            match e.simplex {
                Simplex::Vertex(v) => position[v] = p,
                Simplex::Edge(a, b) => prop_assert!(position[a] < p && position[b] < p),
            }
        }
    }

    #[test]
    fn injective_vertex_order_follows_f((g, f) in graph_with_injective_filter(12)) {
        let flt = build_sublevel_filtration(&g, &f).unwrap();
        let order: Vec<usize> = flt
            .entries()
            .iter()
            .filter_map(|e| match e.simplex {
                Simplex::Vertex(v) => Some(v),
                _ => None,
            })
            .collect();
        prop_assert!(order.windows(2).all(|w| f[w[0]] < f[w[1]]));
    }

    #[test]
    fn engines_agree_with_attributions((g, f) in graph_with_tied_filter(12)) {
        let flt = build_sublevel_filtration(&g, &f).unwrap();
        let uf = persistence_union_find(&flt).canonical();
        let red = persistence_matrix_reduction(&flt).canonical();
        prop_assert_eq!(&uf, &red);
        prop_assert_eq!(uf.values(), oracle_barcode(&flt));
    }

    #[test]
    fn cardinality_identities((g, f) in graph_with_tied_filter(14)) {
        let raw = barcodes(&g, &f);
        let c = g.num_components();
        prop_assert_eq!(raw.b0_essential.len(), c);
        prop_assert_eq!(raw.b1_essential.len() + g.num_vertices(), g.num_edges() + c);
        prop_assert_eq!(raw.b0_finite.len() + c, g.num_vertices());
    }

    #[test]
    fn relabeling_preserves_barcodes(((g, f), perm) in graph_with_tied_filter(10).prop_flat_map(|(g, f)| {
        let n = g.num_vertices();
        (Just((g, f)), permutation(n))
    })) {
        let h = g.relabeled(&perm).unwrap();
        let mut fh = vec![0.0; f.len()];
        for (v, &pv) in perm.iter().enumerate() {
            fh[pv] = f[v];
        }
        prop_assert_eq!(barcodes(&g, &f).values(), barcodes(&h, &fh).values());
    }

    #[test]
    fn small_perturbations_keep_attributions(
        (g, f) in graph_with_injective_filter(10),
        noise in proptest::collection::vec(-0.49f64..0.49, 10),
    ) {
        let n = g.num_vertices();
        let gap = 1.0 / n.max(1) as f64;
        let moved: Vec<f64> = f.iter().zip(&noise).map(|(x, e)| x + e * gap).collect();
        let pairs = |raw: RawBarcodes| {
            let mut all: Vec<(usize, Option<usize>)> = raw
                .b0_finite
                .iter()
                .chain(&raw.b0_essential)
                .chain(&raw.b1_essential)
                .map(|p| (p.birth_attribution, p.death_attribution))
                .collect();
            all.sort();
            all
        };
        prop_assert_eq!(pairs(barcodes(&g, &f)), pairs(barcodes(&g, &moved)));
    }

    #[test]
    fn multiplicities_are_nonnegative_and_b1_ignores_death((g, f) in graph_with_tied_filter(9)) {
        let flt = build_sublevel_filtration(&g, &f).unwrap();
        let bt = BettiTable::compute(&flt);
        for k in 0..2 {
            let mu = multiplicities(&bt, k);
            prop_assert!(mu.finite.values().all(|&m| m >= 0));
            prop_assert!(mu.essential.values().all(|&m| m >= 0));
        }
        let m = bt.num_levels();
        for i in 1..=m {
            for j in i..=m {
                prop_assert_eq!(bt.get(1, i, j).unwrap(), bt.get(1, i, m).unwrap());
            }
        }
    }

    #[test]
    fn vectorization_is_additive_and_order_free(
        pts in proptest::collection::vec((0.0f64..1.0, 0.01f64..1.0, -1.0f64..1.0), 0..12),
        split in 0usize..12,
        seed in any::<u64>(),
    ) {
        let vp = VectorizationParams::init(10, &mut ChaCha8Rng::seed_from_u64(seed));
        let set = |pts: &[(f64, f64, f64)]| {
            let mut bs = BarcodeSet::default();
            for &(b, len, e) in pts {
                bs.finite0.push(BarcodePoint {
                    birth: b,
                    death: b + len,
                    birth_attribution: 0,
                    death_attribution: Some(0),
                    zero_persistence: false,
                });
                bs.essential0.push(BarcodePoint::essential(e, 0));
                bs.essential1.push(BarcodePoint::essential(-e, 0));
            }
            bs
        };
        let split = split.min(pts.len());
        let whole = vectorize(&set(&pts), &vp).unwrap();
        let a = vectorize(&set(&pts[..split]), &vp).unwrap();
        let b = vectorize(&set(&pts[split..]), &vp).unwrap();
        let mut rev = pts.clone();
        rev.reverse();
        let reversed = vectorize(&set(&rev), &vp).unwrap();
        for k in 0..whole.len() {
            prop_assert!((whole[k] - a[k] - b[k]).abs() < 1e-12);
            prop_assert!((whole[k] - reversed[k]).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn learned_filter_stays_in_open_unit_interval(g in graph(12), seed in any::<u64>()) {
        let config = ModelConfig {
            readout: Readout::Gfl,
            num_classes: 2,
            degree_vocab: 12,
            label_vocab: None,
            hidden: 16,
            classifier_hidden: 8,
            elements: 4,
        };
        let p = ModelParams::init(config, seed);
        let features = initial_features(&g, FeatureMode::Degree).unwrap();
        for mode in [Mode::Train, Mode::Eval] {
            let values = vertex_filter_forward(&g, &features, &p, mode).unwrap();
            prop_assert!(values.iter().all(|&v| v > 0.0 && v < 1.0));
        }
    }
}
