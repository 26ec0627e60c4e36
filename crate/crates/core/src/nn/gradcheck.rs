//! Central finite-difference check of [`super::loss_and_gradients`].

use crate::error::Result;

use super::layers::cross_entropy;
use super::model::{forward_batch, loss, resume_forward, GraphInput, Mode, Resume};
use super::params::{ModelParams, Readout};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckOptions {
    pub step: f64,
    pub rel_tol: f64,
    /// Differences below this pass regardless of the relative error.
    pub abs_tol: f64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            step: 1e-6,
            rel_tol: 1e-4,
            abs_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradMismatch {
    pub tensor: &'static str,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    /// Entries whose difference quotient straddles a nondifferentiable
    /// locus (an activation sign, a barcode pairing or a hat kink differs
    /// between `θ+h` and `θ−h`). They are not compared.
    pub straddling: Vec<GradMismatch>,
    /// Largest relative error among compared entries outside the absolute
    /// tolerance.
    pub max_rel_err: f64,
    pub mismatches: Vec<GradMismatch>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Compares every trainable entry's analytic gradient with
/// `(L(θ+h) − L(θ−h)) / 2h`.
///
/// A perturbed entry only changes the stages at and after its own, so the
/// earlier stages are taken from the unperturbed forward pass (classifier
/// weights reuse the representation, hat parameters the barcodes, filter
/// MLP weights the GIN output).
pub fn gradient_check(
    inputs: &[GraphInput<'_>],
    labels: &[usize],
    params: &ModelParams,
    mode: Mode,
    opts: GradCheckOptions,
) -> Result<GradCheckReport> {
    let out = forward_batch(inputs, params, mode)?;
    let (_, grad_logits) = cross_entropy(&out.logits, labels);
    let mut grads = super::model::backward(&out.tape, params, &grad_logits);
    let analytic: Vec<(&'static str, Vec<f64>)> = grads
        .trainable_mut()
        .into_iter()
        .map(|t| (t.name, t.data.to_vec()))
        .collect();

    let mut p = params.clone();
    let mut report = GradCheckReport::default();
    for (ti, (name, values)) in analytic.iter().enumerate() {
        for (j, &a) in values.iter().enumerate() {
            let orig = p.trainable_mut()[ti].data[j];
            p.trainable_mut()[ti].data[j] = orig + opts.step;
            let eval = |p: &ModelParams| -> Result<f64> {
                let readout = p.config.readout;
                let from = if name.starts_with("classifier.") {
                    Resume::Classifier
                } else if name.starts_with("vectorization.") && readout.uses_persistence() {
                    Resume::Vectorization
                } else if name.starts_with("filter.") && readout == Readout::Gfl {
                    Resume::Filter
                } else {
                    return loss(inputs, labels, p, mode);
                };
                let logits = resume_forward(&out.tape, inputs, p, mode, from)?;
                Ok(cross_entropy(&logits, labels).0)
            };
            let up = eval(&p)?;
            p.trainable_mut()[ti].data[j] = orig - opts.step;
            let down = eval(&p)?;
            p.trainable_mut()[ti].data[j] = orig;

            let numeric = (up - down) / (2.0 * opts.step);
            report.checked += 1;
            if (a - numeric).abs() < opts.abs_tol {
                continue;
            }
            let rel = relative_error(a, numeric);
            if rel < opts.rel_tol {
                report.max_rel_err = report.max_rel_err.max(rel);
            } else {
                let entry = GradMismatch {
                    tensor: name,
                    index: j,
                    analytic: a,
                    numeric,
                };
                let signature = |p: &mut ModelParams, x: f64| -> Result<Vec<i8>> {
                    p.trainable_mut()[ti].data[j] = x;
                    let out = forward_batch(inputs, p, mode)?;
                    Ok(out.tape.kink_signature(p))
                };
                let up = signature(&mut p, orig + opts.step)?;
                let down = signature(&mut p, orig - opts.step)?;
                p.trainable_mut()[ti].data[j] = orig;
                if up != down {
                    report.straddling.push(entry);
                } else {
                    report.max_rel_err = report.max_rel_err.max(rel);
                    report.mismatches.push(entry);
                }
            }
        }
    }
    Ok(report)
}

/// Smallest gap between two filter values of the same graph, or `None`
/// when no graph has two vertices.
pub fn min_filter_gap(filters: &[&[f64]]) -> Option<f64> {
    filters
        .iter()
        .filter_map(|f| {
            let mut v = f.to_vec();
            v.sort_by(f64::total_cmp);
            v.windows(2).map(|w| w[1] - w[0]).min_by(f64::total_cmp)
        })
        .min_by(f64::total_cmp)
}
