//! Persistence barcodes of graph filtrations.
//!
//! Two engines compute the same pairing: [`persistence_union_find`] tracks
//! components with a disjoint-set forest, [`persistence_matrix_reduction`]
//! runs the left-to-right column reduction of the boundary matrix over
//! GF(2). Both emit every point with the vertices whose filter values
//! realize its birth and death, which is what routes gradients back to the
//! vertex filter.
//!
//! Graphs have no 2-simplices, so every 1-cycle is essential and the finite
//! part of the 1-dimensional barcode is always empty.

mod assemble;
mod reduction;
mod text;
mod union_find;

pub use assemble::{assemble_processed_barcodes, BarcodeSet, Channel};
pub use reduction::persistence_matrix_reduction;
pub use text::{parse_barcode_text, write_barcode_text};
pub use union_find::persistence_union_find;

use std::cmp::Ordering;

/// One barcode point. Essential points have `death == f64::INFINITY` and
/// no death attribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarcodePoint {
    pub birth: f64,
    pub death: f64,
    pub birth_attribution: usize,
    pub death_attribution: Option<usize>,
    /// Birth and death fall on the same filtration level.
    pub zero_persistence: bool,
}

impl BarcodePoint {
    pub fn essential(birth: f64, birth_attribution: usize) -> Self {
        BarcodePoint {
            birth,
            death: f64::INFINITY,
            birth_attribution,
            death_attribution: None,
            zero_persistence: false,
        }
    }

    pub fn is_essential(&self) -> bool {
        self.death_attribution.is_none()
    }

    /// Total order used to compare multisets: values first, then attributions.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.birth
            .total_cmp(&other.birth)
            .then(self.death.total_cmp(&other.death))
            .then(self.birth_attribution.cmp(&other.birth_attribution))
            .then(self.death_attribution.cmp(&other.death_attribution))
            .then(self.zero_persistence.cmp(&other.zero_persistence))
    }
}

/// Unprocessed barcodes of one filtration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawBarcodes {
    /// Finite 0-dimensional points, zero-persistence ones included and flagged.
    pub b0_finite: Vec<BarcodePoint>,
    pub b0_essential: Vec<BarcodePoint>,
    pub b1_essential: Vec<BarcodePoint>,
}

impl RawBarcodes {
    /// Sorts every barcode so that equal multisets compare equal.
    pub fn canonicalize(&mut self) {
        for b in [
            &mut self.b0_finite,
            &mut self.b0_essential,
            &mut self.b1_essential,
        ] {
            b.sort_by(BarcodePoint::canonical_cmp);
        }
    }

    pub fn canonical(mut self) -> Self {
        self.canonicalize();
        self
    }

    /// The barcodes as plain value multisets, sorted, attributions dropped.
    pub fn values(&self) -> BarcodeValues {
        let mut b0_finite: Vec<(u64, u64, bool)> = self
            .b0_finite
            .iter()
            .map(|p| (p.birth.to_bits(), p.death.to_bits(), p.zero_persistence))
            .collect();
        let mut b0_essential: Vec<u64> = self
            .b0_essential
            .iter()
            .map(|p| p.birth.to_bits())
            .collect();
        let mut b1_essential: Vec<u64> = self
            .b1_essential
            .iter()
            .map(|p| p.birth.to_bits())
            .collect();
        let key = |x: &u64| f64::from_bits(*x);
        b0_finite.sort_by(|a, b| {
            key(&a.0)
                .total_cmp(&key(&b.0))
                .then(key(&a.1).total_cmp(&key(&b.1)))
                .then(a.2.cmp(&b.2))
        });
        b0_essential.sort_by(|a, b| key(a).total_cmp(&key(b)));
        b1_essential.sort_by(|a, b| key(a).total_cmp(&key(b)));
        BarcodeValues {
            b0_finite: b0_finite
                .into_iter()
                .map(|(b, d, z)| (f64::from_bits(b), f64::from_bits(d), z))
                .collect(),
            b0_essential: b0_essential.into_iter().map(f64::from_bits).collect(),
            b1_essential: b1_essential.into_iter().map(f64::from_bits).collect(),
        }
    }
}

/// Attribution-free view of [`RawBarcodes`]: sorted `(birth, death,
/// zero_persistence)` triples and sorted essential births.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BarcodeValues {
    pub b0_finite: Vec<(f64, f64, bool)>,
    pub b0_essential: Vec<f64>,
    pub b1_essential: Vec<f64>,
}
