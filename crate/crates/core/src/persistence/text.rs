//! Line-oriented barcode dump format.
//!
//! One point per line: `dim birth death birth_attr death_attr`, with `inf`
//! as the death of essential points and `-` as their death attribution.
//! Dimension 0 with a finite death belongs to the finite channel.

use std::fmt::Write as _;

use crate::error::{GflError, Result};

use super::{BarcodePoint, BarcodeSet, Channel};

pub fn write_barcode_text(bs: &BarcodeSet) -> String {
    let mut out = String::new();
    for c in Channel::ALL {
        let dim = if c == Channel::Essential1 { 1 } else { 0 };
        for p in bs.channel(c) {
            let _ = write!(out, "{dim} {} ", p.birth);
            match p.death_attribution {
                Some(d) => {
                    let _ = writeln!(out, "{} {} {d}", p.death, p.birth_attribution);
                }
                None => {
                    let _ = writeln!(out, "inf {} -", p.birth_attribution);
                }
            }
        }
    }
    out
}

pub fn parse_barcode_text(text: &str) -> Result<BarcodeSet> {
    let mut bs = BarcodeSet::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| GflError::Parse {
            file: "barcodes".into(),
            line: i + 1,
            msg,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [dim, birth, death, battr, dattr] = fields.as_slice() else {
            return Err(err(format!("expected 5 fields, found {}", fields.len())));
        };
        let num = |s: &str| s.parse::<f64>().map_err(|e| err(format!("`{s}`: {e}")));
        let idx = |s: &str| s.parse::<usize>().map_err(|e| err(format!("`{s}`: {e}")));
        let birth = num(birth)?;
        let birth_attribution = idx(battr)?;
        let point = if *death == "inf" {
            BarcodePoint::essential(birth, birth_attribution)
        } else {
            BarcodePoint {
                birth,
                death: num(death)?,
                birth_attribution,
                death_attribution: Some(idx(dattr)?),
                zero_persistence: false,
            }
        };
        let channel = match (*dim, point.is_essential()) {
            ("0", false) => Channel::Finite0,
            ("0", true) => Channel::Essential0,
            ("1", true) => Channel::Essential1,
            _ => return Err(err(format!("no barcode channel for `{line}`"))),
        };
        bs.channel_mut(channel).push(point);
    }
    Ok(bs)
}
