//! Forward and backward passes of the graph classifiers.
//!
//! A batch of graphs is processed as one block-diagonal graph so that
//! batch normalization sees every vertex of the batch. The [`Tape`]
//! records the intermediates of each stage; [`backward`] replays them in
//! reverse. Persistence itself is not differentiated: every processed
//! barcode coordinate equals the filter value of its attribution vertex, so
//! a coordinate's gradient is added to that vertex's filter gradient.

use ndarray::{Array1, Array2, Axis};
use rayon::prelude::*;

use crate::error::{GflError, Result};
use crate::filtration::{build_sublevel_filtration, negate_filter};
use crate::graph::{Graph, NodeFeatures};
use crate::persistence::{
    assemble_processed_barcodes, persistence_union_find, BarcodeSet, Channel,
};
use crate::vectorize::{vectorize, vectorize_backward};

use super::layers::{
    cross_entropy, leaky_relu, leaky_relu_backward, relu, relu_backward, sigmoid, BatchNormCache,
    BatchStats,
};
use super::params::{ModelParams, Readout};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// One graph and its initial node features.
#[derive(Debug, Clone, Copy)]
pub struct GraphInput<'a> {
    pub graph: &'a Graph,
    pub features: &'a NodeFeatures,
}

#[derive(Debug, Clone)]
struct GinTape {
    h0: Array2<f64>,
    z: Array2<f64>,
    bn: BatchNormCache,
    u2: Array2<f64>,
    u3: Array2<f64>,
    h1: Array2<f64>,
}

#[derive(Debug, Clone)]
struct FilterTape {
    bn: BatchNormCache,
    v2: Array2<f64>,
    v3: Array2<f64>,
}

/// Everything [`backward`] needs from a forward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    readout: Readout,
    offsets: Vec<usize>,
    edges: Vec<Vec<(usize, usize)>>,
    degree_idx: Vec<usize>,
    label_idx: Option<Vec<usize>>,
    gin: Option<GinTape>,
    filter: Option<FilterTape>,
    filter_values: Vec<f64>,
    barcodes: Vec<BarcodeSet>,
    readout_x: Array2<f64>,
    c1: Array2<f64>,
    c2: Array2<f64>,
}

impl Tape {
    /// Processed barcodes of each graph, with vertex attributions local to
    /// that graph.
    pub fn barcodes(&self) -> &[BarcodeSet] {
        &self.barcodes
    }

    /// Per-vertex filter values of each graph (learned or degree based).
    pub fn filter_values(&self) -> Option<Vec<&[f64]>> {
        self.readout.uses_persistence().then(|| {
            self.offsets
                .windows(2)
                .map(|w| &self.filter_values[w[0]..w[1]])
                .collect()
        })
    }

    /// Which side of every nondifferentiable locus the forward pass was
    /// on: activation signs, barcode pairings and hat-function kinks. Two
    /// parameter settings with equal signatures lie in one smooth piece.
    pub fn kink_signature(&self, params: &ModelParams) -> Vec<i8> {
        let mut sig = Vec::new();
        let signs = |a: &Array2<f64>, sig: &mut Vec<i8>| {
            sig.extend(a.iter().map(|&x| crate::vectorize::sgn(x) as i8))
        };
        if let Some(g) = &self.gin {
            signs(&g.u2, &mut sig);
        }
        if let Some(f) = &self.filter {
            signs(&f.v2, &mut sig);
        }
        signs(&self.c1, &mut sig);
        for bs in &self.barcodes {
            for c in Channel::ALL {
                for p in bs.channel(c) {
                    let d = p.death_attribution.map_or(-1, |v| v as i64);
                    sig.extend((p.birth_attribution as i64).to_le_bytes().map(|b| b as i8));
                    sig.extend(d.to_le_bytes().map(|b| b as i8));
                }
                sig.push(i8::MIN);
            }
            crate::vectorize::kink_signs(bs, &params.vectorization, &mut sig);
        }
        sig
    }

    /// The graph representation handed to the classifier.
    pub fn readout_representation(&self) -> &Array2<f64> {
        &self.readout_x
    }
}

/// Batch statistics observed by the batch-norm layers during training.
#[derive(Debug, Clone, Default)]
pub struct BnUpdates {
    pub gin: Option<BatchStats>,
    pub filter: Option<BatchStats>,
}

impl ModelParams {
    pub fn apply_bn_updates(&mut self, u: &BnUpdates) {
        if let Some(s) = &u.gin {
            self.gin_bn.update_running(s);
        }
        if let Some(s) = &u.filter {
            self.filter_bn.update_running(s);
        }
    }
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    /// `batch × classes`.
    pub logits: Array2<f64>,
    pub tape: Tape,
    pub bn_updates: BnUpdates,
}

fn gin_forward(
    params: &ModelParams,
    tape: &Tape,
    message_passing: bool,
    train: bool,
) -> (GinTape, Option<BatchStats>) {
    let n = *tape.offsets.last().unwrap_or(&0);
    let mut h0 = Array2::zeros((n, params.config.hidden));
    params
        .degree_embedding
        .lookup_add(&tape.degree_idx, &mut h0);
    if let (Some(e), Some(idx)) = (&params.label_embedding, &tape.label_idx) {
        e.lookup_add(idx, &mut h0);
    }
    let z = if message_passing {
        let mut z = &h0 * (1.0 + params.gin_eps[0]);
        for (g, edges) in tape.edges.iter().enumerate() {
            let o = tape.offsets[g];
            for &(a, b) in edges {
                let (ra, rb) = (h0.row(o + a).to_owned(), h0.row(o + b).to_owned());
                let mut za = z.row_mut(o + a);
                za += &rb;
                let mut zb = z.row_mut(o + b);
                zb += &ra;
            }
        }
        z
    } else {
        h0.clone()
    };
    let u1 = params.gin_fc1.forward(&z);
    let (u2, bn, stats) = params.gin_bn.forward(&u1, train);
    let u3 = leaky_relu(&u2);
    let h1 = params.gin_fc2.forward(&u3);
    (
        GinTape {
            h0,
            z,
            bn,
            u2,
            u3,
            h1,
        },
        stats,
    )
}

fn filter_forward(
    params: &ModelParams,
    h1: &Array2<f64>,
    train: bool,
) -> (FilterTape, Vec<f64>, Option<BatchStats>) {
    let v1 = params.filter_fc1.forward(h1);
    let (v2, bn, stats) = params.filter_bn.forward(&v1, train);
    let v3 = leaky_relu(&v2);
    let v4 = params.filter_fc2.forward(&v3);
    let values = v4.column(0).iter().map(|&x| sigmoid(x)).collect();
    (FilterTape { bn, v2, v3 }, values, stats)
}

/// Degree divided by the dataset's maximum degree, clamped to `[0, 1]`.
fn degree_filter(g: &Graph, max_degree: usize) -> Vec<f64> {
    g.degrees()
        .into_iter()
        .map(|d| {
            if max_degree == 0 {
                0.0
            } else {
                (d as f64 / max_degree as f64).min(1.0)
            }
        })
        .collect()
}

/// Processed barcodes of `g` under the vertex values `f`, using the
/// union-find engine on both `f` and `-f`.
pub fn graph_barcodes(g: &Graph, f: &[f64]) -> Result<BarcodeSet> {
    let sub = persistence_union_find(&build_sublevel_filtration(g, f)?);
    let sup = persistence_union_find(&build_sublevel_filtration(g, &negate_filter(f))?);
    assemble_processed_barcodes(&sub, &sup)
}

fn new_tape(inputs: &[GraphInput<'_>], readout: Readout) -> Result<Tape> {
    let mut offsets = Vec::with_capacity(inputs.len() + 1);
    offsets.push(0);
    let mut degree_idx = Vec::new();
    let with_labels = inputs.first().is_some_and(|i| i.features.label.is_some());
    let mut label_idx = with_labels.then(Vec::new);
    for inp in inputs {
        let n = inp.graph.num_vertices();
        if inp.features.len() != n {
            return Err(GflError::Index(format!(
                "{} feature rows for {n} vertices",
                inp.features.len()
            )));
        }
        degree_idx.extend_from_slice(&inp.features.degree);
        match (&mut label_idx, &inp.features.label) {
            (Some(l), Some(x)) => l.extend_from_slice(x),
            (None, None) => {}
            _ => {
                return Err(GflError::Config(
                    "mixed labelled and unlabelled features in one batch".into(),
                ))
            }
        }
        offsets.push(offsets.last().unwrap() + n);
    }
    Ok(Tape {
        readout,
        offsets,
        edges: inputs.iter().map(|i| i.graph.edges().to_vec()).collect(),
        degree_idx,
        label_idx,
        gin: None,
        filter: None,
        filter_values: Vec::new(),
        barcodes: Vec::new(),
        readout_x: Array2::zeros((0, 0)),
        c1: Array2::zeros((0, 0)),
        c2: Array2::zeros((0, 0)),
    })
}

/// Runs the model's readout on a batch and returns logits with the tape.
///
/// In [`Mode::Train`] batch normalization uses the statistics of the batch
/// and reports them in [`ForwardOutput::bn_updates`]; the parameters are
/// not modified.
pub fn forward_batch(
    inputs: &[GraphInput<'_>],
    params: &ModelParams,
    mode: Mode,
) -> Result<ForwardOutput> {
    let cfg = &params.config;
    let train = mode == Mode::Train;
    let mut tape = new_tape(inputs, cfg.readout)?;
    let mut bn_updates = BnUpdates::default();

    let readout_x = match cfg.readout {
        Readout::Gfl | Readout::PhOnly => {
            if cfg.readout == Readout::Gfl {
                let (gin, gin_stats) = gin_forward(params, &tape, true, train);
                let (filter, values, filter_stats) = filter_forward(params, &gin.h1, train);
                bn_updates.gin = gin_stats;
                bn_updates.filter = filter_stats;
                tape.gin = Some(gin);
                tape.filter = Some(filter);
                tape.filter_values = values;
            } else {
                tape.filter_values = inputs
                    .iter()
                    .flat_map(|i| degree_filter(i.graph, cfg.max_degree()))
                    .collect();
            }
            tape.barcodes = batch_barcodes(inputs, &tape.offsets, &tape.filter_values)?;
            vectorize_batch(&tape.barcodes, params)?
        }
        Readout::Sum | Readout::Baseline => {
            let (gin, stats) = gin_forward(params, &tape, cfg.readout == Readout::Sum, train);
            bn_updates.gin = stats;
            let mut x = Array2::zeros((inputs.len(), cfg.hidden));
            for (g, w) in tape.offsets.windows(2).enumerate() {
                let s = gin.h1.slice(ndarray::s![w[0]..w[1], ..]).sum_axis(Axis(0));
                x.row_mut(g).assign(&s);
            }
            tape.gin = Some(gin);
            x
        }
    };

    let (c1, c2, logits) = classifier_layers(params, &readout_x);
    tape.readout_x = readout_x;
    tape.c1 = c1;
    tape.c2 = c2;
    Ok(ForwardOutput {
        logits,
        tape,
        bn_updates,
    })
}

fn batch_barcodes(
    inputs: &[GraphInput<'_>],
    offsets: &[usize],
    values: &[f64],
) -> Result<Vec<BarcodeSet>> {
    let values: Vec<&[f64]> = offsets.windows(2).map(|w| &values[w[0]..w[1]]).collect();
    inputs
        .par_iter()
        .zip(values.par_iter())
        .map(|(inp, f)| graph_barcodes(inp.graph, f))
        .collect()
}

fn vectorize_batch(barcodes: &[BarcodeSet], params: &ModelParams) -> Result<Array2<f64>> {
    let mut x = Array2::zeros((barcodes.len(), 3 * params.config.elements));
    for (mut row, bs) in x.rows_mut().into_iter().zip(barcodes) {
        row.assign(&vectorize(bs, &params.vectorization)?);
    }
    Ok(x)
}

/// Where a partial forward pass may pick up from a recorded tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Resume {
    /// Recompute the filter MLP from the recorded GIN output.
    Filter,
    /// Re-vectorize the recorded barcodes.
    Vectorization,
    /// Reuse the recorded representation.
    Classifier,
}

/// Logits for `params`, recomputing only the stages from `from` on. The
/// caller guarantees the earlier stages' parameters match the tape. Gives
/// bitwise the same logits as [`forward_batch`].
pub(crate) fn resume_forward(
    tape: &Tape,
    inputs: &[GraphInput<'_>],
    params: &ModelParams,
    mode: Mode,
    from: Resume,
) -> Result<Array2<f64>> {
    let x = match from {
        Resume::Classifier => return Ok(classifier_forward(params, &tape.readout_x)),
        Resume::Vectorization => vectorize_batch(&tape.barcodes, params)?,
        Resume::Filter => {
            let gin = tape.gin.as_ref().ok_or_else(|| {
                GflError::Config("tape has no learned filter to resume from".into())
            })?;
            let (_, values, _) = filter_forward(params, &gin.h1, mode == Mode::Train);
            vectorize_batch(&batch_barcodes(inputs, &tape.offsets, &values)?, params)?
        }
    };
    Ok(classifier_forward(params, &x))
}

fn classifier_layers(
    params: &ModelParams,
    x: &Array2<f64>,
) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let c1 = params.cls_fc1.forward(x);
    let c2 = relu(&c1);
    let logits = params.cls_fc2.forward(&c2);
    (c1, c2, logits)
}

/// Logits from a precomputed graph representation (see
/// [`Tape::readout_representation`]).
pub fn classifier_forward(params: &ModelParams, x: &Array2<f64>) -> Array2<f64> {
    classifier_layers(params, x).2
}

fn gin_backward(
    params: &ModelParams,
    tape: &Tape,
    gin: &GinTape,
    g_h1: &Array2<f64>,
    grads: &mut ModelParams,
) {
    let g_u3 = params.gin_fc2.backward(&gin.u3, g_h1, &mut grads.gin_fc2);
    let g_u2 = leaky_relu_backward(&gin.u2, &g_u3);
    let g_u1 = params.gin_bn.backward(&gin.bn, &g_u2, &mut grads.gin_bn);
    let g_z = params.gin_fc1.backward(&gin.z, &g_u1, &mut grads.gin_fc1);
    let g_h0 = if tape.readout == Readout::Baseline {
        g_z
    } else {
        grads.gin_eps[0] += (&g_z * &gin.h0).sum();
        let mut g_h0 = &g_z * (1.0 + params.gin_eps[0]);
        for (g, edges) in tape.edges.iter().enumerate() {
            let o = tape.offsets[g];
            for &(a, b) in edges {
                let (ga, gb) = (g_z.row(o + a).to_owned(), g_z.row(o + b).to_owned());
                let mut ra = g_h0.row_mut(o + a);
                ra += &gb;
                let mut rb = g_h0.row_mut(o + b);
                rb += &ga;
            }
        }
        g_h0
    };
    params
        .degree_embedding
        .backward(&tape.degree_idx, &g_h0, &mut grads.degree_embedding);
    if let (Some(e), Some(idx), Some(ge)) = (
        &params.label_embedding,
        &tape.label_idx,
        grads.label_embedding.as_mut(),
    ) {
        e.backward(idx, &g_h0, ge);
    }
}

/// Reverse pass: gradients of the loss for every trainable parameter given
/// `grad_logits = ∂L/∂logits`.
pub fn backward(tape: &Tape, params: &ModelParams, grad_logits: &Array2<f64>) -> ModelParams {
    let mut grads = params.zeros_like();
    let g_c2 = params
        .cls_fc2
        .backward(&tape.c2, grad_logits, &mut grads.cls_fc2);
    let g_c1 = relu_backward(&tape.c1, &g_c2);
    let g_x = params
        .cls_fc1
        .backward(&tape.readout_x, &g_c1, &mut grads.cls_fc1);
    let n = *tape.offsets.last().unwrap_or(&0);

    match tape.readout {
        Readout::Gfl | Readout::PhOnly => {
            let mut g_f = vec![0.0; n];
            for (g, bs) in tape.barcodes.iter().enumerate() {
                let row = g_x.row(g);
                let pg = vectorize_backward(
                    bs,
                    &params.vectorization,
                    row.as_slice().expect("standard layout"),
                    &mut grads.vectorization,
                );
                let o = tape.offsets[g];
                for c in Channel::ALL {
                    for (p, d) in bs.channel(c).iter().zip(&pg.channels[c.index()]) {
                        g_f[o + p.birth_attribution] += d[0];
                        if let Some(v) = p.death_attribution {
                            g_f[o + v] += d[1];
                        }
                    }
                }
            }
            if tape.readout == Readout::Gfl {
                let filter = tape.filter.as_ref().expect("filter tape");
                let gin = tape.gin.as_ref().expect("gin tape");
                let g_v4 = Array2::from_shape_fn((n, 1), |(v, _)| {
                    let s = tape.filter_values[v];
                    g_f[v] * s * (1.0 - s)
                });
                let g_v3 = params
                    .filter_fc2
                    .backward(&filter.v3, &g_v4, &mut grads.filter_fc2);
                let g_v2 = leaky_relu_backward(&filter.v2, &g_v3);
                let g_v1 = params
                    .filter_bn
                    .backward(&filter.bn, &g_v2, &mut grads.filter_bn);
                let g_h1 = params
                    .filter_fc1
                    .backward(&gin.h1, &g_v1, &mut grads.filter_fc1);
                gin_backward(params, tape, gin, &g_h1, &mut grads);
            }
        }
        Readout::Sum | Readout::Baseline => {
            let gin = tape.gin.as_ref().expect("gin tape");
            let mut g_h1 = Array2::zeros((n, params.config.hidden));
            for (g, w) in tape.offsets.windows(2).enumerate() {
                for v in w[0]..w[1] {
                    g_h1.row_mut(v).assign(&g_x.row(g));
                }
            }
            gin_backward(params, tape, gin, &g_h1, &mut grads);
        }
    }
    grads
}

/// Learned vertex filter of one graph, values in `(0, 1)`.
pub fn vertex_filter_forward(
    g: &Graph,
    features: &NodeFeatures,
    params: &ModelParams,
    mode: Mode,
) -> Result<Vec<f64>> {
    let inputs = [GraphInput { graph: g, features }];
    let tape = new_tape(&inputs, Readout::Gfl)?;
    let (gin, _) = gin_forward(params, &tape, true, mode == Mode::Train);
    let (_, values, _) = filter_forward(params, &gin.h1, mode == Mode::Train);
    Ok(values)
}

/// Logits of a single graph under the model's configured readout.
pub fn full_forward(
    g: &Graph,
    features: &NodeFeatures,
    params: &ModelParams,
    mode: Mode,
) -> Result<ForwardOutput> {
    forward_batch(&[GraphInput { graph: g, features }], params, mode)
}

fn forward_with(
    readout: Readout,
    g: &Graph,
    features: &NodeFeatures,
    params: &ModelParams,
) -> Result<Array1<f64>> {
    if params.config.readout != readout {
        return Err(GflError::Config(format!(
            "parameters were built for {:?}, not {readout:?}",
            params.config.readout
        )));
    }
    let out = full_forward(g, features, params, Mode::Eval)?;
    Ok(out.logits.row(0).to_owned())
}

/// Deep-sets baseline: per-vertex MLP, sum, classifier.
pub fn baseline_forward(
    g: &Graph,
    features: &NodeFeatures,
    params: &ModelParams,
) -> Result<Array1<f64>> {
    forward_with(Readout::Baseline, g, features, params)
}

/// One GIN-ε layer followed by a sum readout and the classifier.
pub fn sum_readout_forward(
    g: &Graph,
    features: &NodeFeatures,
    params: &ModelParams,
) -> Result<Array1<f64>> {
    forward_with(Readout::Sum, g, features, params)
}

/// Mean cross-entropy of a batch and its gradients.
pub fn loss_and_gradients(
    inputs: &[GraphInput<'_>],
    labels: &[usize],
    params: &ModelParams,
    mode: Mode,
) -> Result<(f64, ModelParams, BnUpdates)> {
    let out = forward_batch(inputs, params, mode)?;
    let (loss, grad_logits) = cross_entropy(&out.logits, labels);
    let grads = backward(&out.tape, params, &grad_logits);
    Ok((loss, grads, out.bn_updates))
}

/// Mean cross-entropy of a batch.
pub fn loss(
    inputs: &[GraphInput<'_>],
    labels: &[usize],
    params: &ModelParams,
    mode: Mode,
) -> Result<f64> {
    let out = forward_batch(inputs, params, mode)?;
    Ok(cross_entropy(&out.logits, labels).0)
}
