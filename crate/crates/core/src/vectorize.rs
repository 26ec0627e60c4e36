//! Barcode coordinate functions built from rational hat structure elements.
//!
//! For a point `p`, center `c` and radius `r`,
//!
//! ```text
//! s(p) = 1 / (1 + |p - c|_1) - 1 / (1 + | |r| - |p - c|_1 |)
//! ```
//!
//! and a barcode is embedded by summing `s` over its points, once per
//! structure element. Essential barcodes hold births only and use the
//! one-dimensional form, where the 1-norm is an absolute value.
//!
//! Subgradients at the kinks of `|.|` use `sign(0) = 0`.

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::error::{GflError, Result};
use crate::persistence::{BarcodePoint, BarcodeSet, Channel};

/// Structure elements per barcode channel.
pub const ELEMENTS_PER_CHANNEL: usize = 100;
pub const INITIAL_RADIUS: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct StructureElement {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[inline]
pub(crate) fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[inline]
fn hat(p: &[f64], c: &[f64], r: f64) -> f64 {
    let d: f64 = p.iter().zip(c).map(|(a, b)| (a - b).abs()).sum();
    1.0 / (1.0 + d) - 1.0 / (1.0 + (r.abs() - d).abs())
}

/// Value and partial derivatives of one structure element at one point.
/// Only the first `p.len()` entries of `d_point` and `d_center` are used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HatGrad {
    pub value: f64,
    pub d_point: [f64; 2],
    pub d_center: [f64; 2],
    pub d_radius: f64,
}

#[inline]
fn hat_grad(p: &[f64], c: &[f64], r: f64) -> HatGrad {
    let mut signs = [0.0; 2];
    let mut d = 0.0;
    for (k, (a, b)) in p.iter().zip(c).enumerate() {
        d += (a - b).abs();
        signs[k] = sgn(a - b);
    }
    let t = r.abs() - d;
    let inner = 1.0 / (1.0 + d);
    let outer = 1.0 / (1.0 + t.abs());
    let ds_dd = -inner * inner - sgn(t) * outer * outer;
    let mut g = HatGrad {
        value: inner - outer,
        d_point: [0.0; 2],
        d_center: [0.0; 2],
        d_radius: sgn(t) * sgn(r) * outer * outer,
    };
    for k in 0..p.len() {
        g.d_point[k] = ds_dd * signs[k];
        g.d_center[k] = -ds_dd * signs[k];
    }
    g
}

/// Rational hat value at `p`.
pub fn rational_hat(p: &[f64], e: &StructureElement) -> Result<f64> {
    check_dim(p, e)?;
    Ok(hat(p, &e.center, e.radius))
}

/// Rational hat value and its partial derivatives at `p`.
pub fn rational_hat_grad(p: &[f64], e: &StructureElement) -> Result<HatGrad> {
    check_dim(p, e)?;
    Ok(hat_grad(p, &e.center, e.radius))
}

fn check_dim(p: &[f64], e: &StructureElement) -> Result<()> {
    if p.len() != e.center.len() || p.is_empty() || p.len() > 2 {
        return Err(GflError::Contract(format!(
            "point of dimension {} against center of dimension {}",
            p.len(),
            e.center.len()
        )));
    }
    Ok(())
}

/// Centers (`elements × point_dim`) and radii of one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    pub centers: Array2<f64>,
    pub radii: Array1<f64>,
}

impl ChannelParams {
    pub fn zeros(elements: usize, point_dim: usize) -> Self {
        ChannelParams {
            centers: Array2::zeros((elements, point_dim)),
            radii: Array1::zeros(elements),
        }
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn element(&self, k: usize) -> StructureElement {
        StructureElement {
            center: self.centers.row(k).to_vec(),
            radius: self.radii[k],
        }
    }
}

/// Learnable parameters of the three channels, in [`Channel::ALL`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorizationParams {
    pub channels: [ChannelParams; 3],
}

impl VectorizationParams {
    pub fn zeros(elements: usize) -> Self {
        VectorizationParams {
            channels: Channel::ALL.map(|c| ChannelParams::zeros(elements, c.point_dim())),
        }
    }

    /// Centers uniform in the unit square (or interval), radii at
    /// [`INITIAL_RADIUS`].
    pub fn init(elements: usize, rng: &mut impl Rng) -> Self {
        let mut vp = Self::zeros(elements);
        for ch in &mut vp.channels {
            ch.centers.mapv_inplace(|_| rng.random::<f64>());
            ch.radii.fill(INITIAL_RADIUS);
        }
        vp
    }

    pub fn elements_per_channel(&self) -> usize {
        self.channels[0].len()
    }

    /// Length of the vectorized representation.
    pub fn output_dim(&self) -> usize {
        self.channels.iter().map(ChannelParams::len).sum()
    }

    fn offset(&self, c: Channel) -> usize {
        self.channels[..c.index()]
            .iter()
            .map(ChannelParams::len)
            .sum()
    }
}

fn point_coords(c: Channel, p: &BarcodePoint) -> ([f64; 2], usize) {
    match c {
        Channel::Finite0 => ([p.birth, p.death], 2),
        _ => ([p.birth, 0.0], 1),
    }
}

fn check_off_diagonal(bs: &BarcodeSet) -> Result<()> {
    match bs.finite0.iter().find(|p| p.birth == p.death) {
        Some(p) => Err(GflError::Contract(format!(
            "diagonal point ({}, {}) reached the vectorization",
            p.birth, p.death
        ))),
        None => Ok(()),
    }
}

/// Sums every structure element over its channel's points. The output is
/// laid out channel by channel.
pub fn vectorize(bs: &BarcodeSet, vp: &VectorizationParams) -> Result<Array1<f64>> {
    check_off_diagonal(bs)?;
    let mut out = Array1::zeros(vp.output_dim());
    for c in Channel::ALL {
        let params = &vp.channels[c.index()];
        let base = vp.offset(c);
        for p in bs.channel(c) {
            let (coords, dim) = point_coords(c, p);
            for k in 0..params.len() {
                let center = params.centers.row(k);
                let center = center.as_slice().expect("standard layout");
                out[base + k] += hat(&coords[..dim], center, params.radii[k]);
            }
        }
    }
    Ok(out)
}

/// Side of every nondifferentiable locus of the hat functions, for each
/// point and element: the sign of each coordinate of `p − c`, of
/// `|r| − ‖p − c‖₁` and of `r`.
pub(crate) fn kink_signs(bs: &BarcodeSet, vp: &VectorizationParams, out: &mut Vec<i8>) {
    for c in Channel::ALL {
        let params = &vp.channels[c.index()];
        for p in bs.channel(c) {
            let (coords, dim) = point_coords(c, p);
            for k in 0..params.len() {
                let r = params.radii[k];
                let mut d = 0.0;
                for j in 0..dim {
                    let diff = coords[j] - params.centers[[k, j]];
                    out.push(sgn(diff) as i8);
                    d += diff.abs();
                }
                out.push(sgn(r.abs() - d) as i8);
                out.push(sgn(r) as i8);
            }
        }
    }
}

/// Gradients of a scalar objective with respect to the barcode points, in
/// channel order and in the order points are stored in the [`BarcodeSet`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointGrads {
    pub channels: [Vec<[f64; 2]>; 3],
}

/// Backward pass of [`vectorize`]: given `grad_out = ∂L/∂output`,
/// accumulates `∂L/∂params` into `grad_params` and returns `∂L/∂points`.
pub fn vectorize_backward(
    bs: &BarcodeSet,
    vp: &VectorizationParams,
    grad_out: &[f64],
    grad_params: &mut VectorizationParams,
) -> PointGrads {
    let mut out = PointGrads::default();
    for c in Channel::ALL {
        let i = c.index();
        let params = &vp.channels[i];
        let base = vp.offset(c);
        let gp = &mut grad_params.channels[i];
        let mut point_grads = Vec::with_capacity(bs.channel(c).len());
        for p in bs.channel(c) {
            let (coords, dim) = point_coords(c, p);
            let mut dp = [0.0; 2];
            for k in 0..params.len() {
                let w = grad_out[base + k];
                if w == 0.0 {
                    continue;
                }
                let center = params.centers.row(k);
                let g = hat_grad(
                    &coords[..dim],
                    center.as_slice().expect("standard layout"),
                    params.radii[k],
                );
                for j in 0..dim {
                    dp[j] += w * g.d_point[j];
                    gp.centers[[k, j]] += w * g.d_center[j];
                }
                gp.radii[k] += w * g.d_radius;
            }
            point_grads.push(dp);
        }
        out.channels[i] = point_grads;
    }
    out
}
