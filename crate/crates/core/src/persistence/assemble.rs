use crate::error::{GflError, Result};

use super::{BarcodePoint, RawBarcodes};

/// The three barcodes fed to the vectorization layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Finite0,
    Essential0,
    Essential1,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Finite0, Channel::Essential0, Channel::Essential1];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Dimension of the points in this channel: 2 for finite pairs, 1 for
    /// essential births.
    pub fn point_dim(self) -> usize {
        match self {
            Channel::Finite0 => 2,
            _ => 1,
        }
    }
}

/// Processed barcodes of a graph: the union of sublevel and mirrored
/// superlevel barcodes, with zero-persistence points removed.
///
/// Every stored coordinate equals `f(v)` for its attribution vertex `v`,
/// including the mirrored superlevel points.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BarcodeSet {
    pub finite0: Vec<BarcodePoint>,
    pub essential0: Vec<BarcodePoint>,
    pub essential1: Vec<BarcodePoint>,
}

impl BarcodeSet {
    pub fn channel(&self, c: Channel) -> &[BarcodePoint] {
        match c {
            Channel::Finite0 => &self.finite0,
            Channel::Essential0 => &self.essential0,
            Channel::Essential1 => &self.essential1,
        }
    }

    pub fn channel_mut(&mut self, c: Channel) -> &mut Vec<BarcodePoint> {
        match c {
            Channel::Finite0 => &mut self.finite0,
            Channel::Essential0 => &mut self.essential0,
            Channel::Essential1 => &mut self.essential1,
        }
    }

    pub fn canonicalize(&mut self) {
        for c in Channel::ALL {
            self.channel_mut(c).sort_by(BarcodePoint::canonical_cmp);
        }
    }

    pub fn len(&self) -> usize {
        self.finite0.len() + self.essential0.len() + self.essential1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn check_unit(x: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(GflError::Domain(format!("{what} {x} outside [0, 1]")))
    }
}

fn mirror_finite(p: &BarcodePoint) -> BarcodePoint {
    BarcodePoint {
        birth: -p.death,
        death: -p.birth,
        birth_attribution: p
            .death_attribution
            .expect("finite point carries a death attribution"),
        death_attribution: Some(p.birth_attribution),
        zero_persistence: p.zero_persistence,
    }
}

fn mirror_essential(p: &BarcodePoint) -> BarcodePoint {
    BarcodePoint::essential(-p.birth, p.birth_attribution)
}

/// Unites the barcodes of `f` (`sub`) and `-f` (`sup`).
///
/// Superlevel finite points `(b, d)` map to `(-d, -b)` and superlevel
/// essential births `b` to `-b`, landing in `[0, 1]` when `f` does.
/// Every vertex value shows up as a 0-dimensional birth, which is how the
/// `[0, 1]` precondition is checked.
pub fn assemble_processed_barcodes(sub: &RawBarcodes, sup: &RawBarcodes) -> Result<BarcodeSet> {
    for p in sub.b0_finite.iter().chain(&sub.b0_essential) {
        check_unit(p.birth, "filter value")?;
    }
    for p in sup.b0_finite.iter().chain(&sup.b0_essential) {
        check_unit(-p.birth, "filter value")?;
    }
    let keep = |p: &&BarcodePoint| !p.zero_persistence;
    let mut finite0: Vec<BarcodePoint> = sub.b0_finite.iter().filter(keep).copied().collect();
    finite0.extend(sup.b0_finite.iter().filter(keep).map(mirror_finite));
    let mut essential0 = sub.b0_essential.clone();
    essential0.extend(sup.b0_essential.iter().map(mirror_essential));
    let mut essential1 = sub.b1_essential.clone();
    essential1.extend(sup.b1_essential.iter().map(mirror_essential));
    Ok(BarcodeSet {
        finite0,
        essential0,
        essential1,
    })
}
