//! Parameter checkpoints.
//!
//! Layout:
//!
//! ```text
//! GFLCKPT 1\n
//! config <ModelConfig as one-line JSON>\n
//! section <name> <count>\n      one line per tensor, in ModelParams order
//! end\n
//! <f64 little-endian values of every section, concatenated in header order>
//! ```
//!
//! Batch-norm running statistics are stored alongside the trainable
//! tensors so that a loaded model evaluates identically.

use std::io::{BufRead, Read, Write};

use crate::error::{GflError, Result};

use super::params::{ModelConfig, ModelParams};

const MAGIC: &str = "GFLCKPT 1";

fn ckpt_err(msg: impl Into<String>) -> GflError {
    GflError::Checkpoint(msg.into())
}

pub fn write_checkpoint(params: &ModelParams, mut w: impl Write) -> Result<()> {
    let mut params = params.clone();
    let config = serde_json::to_string(&params.config).map_err(|e| ckpt_err(e.to_string()))?;
    let mut header = format!("{MAGIC}\nconfig {config}\n");
    let tensors = params.tensors_mut();
    for t in &tensors {
        header.push_str(&format!("section {} {}\n", t.name, t.data.len()));
    }
    header.push_str("end\n");
    let io = |e| ckpt_err(format!("write failed: {e}"));
    w.write_all(header.as_bytes()).map_err(io)?;
    for t in &tensors {
        for x in t.data.iter() {
            w.write_all(&x.to_le_bytes()).map_err(io)?;
        }
    }
    Ok(())
}

pub fn read_checkpoint(r: impl Read) -> Result<ModelParams> {
    let mut r = std::io::BufReader::new(r);
    let mut line = String::new();
    let mut next_line = |r: &mut std::io::BufReader<_>| -> Result<String> {
        line.clear();
        r.read_line(&mut line)
            .map_err(|e| ckpt_err(format!("read failed: {e}")))?;
        Ok(line.trim_end_matches('\n').to_owned())
    };
    if next_line(&mut r)? != MAGIC {
        return Err(ckpt_err("bad magic"));
    }
    let config_line = next_line(&mut r)?;
    let config: ModelConfig = config_line
        .strip_prefix("config ")
        .ok_or_else(|| ckpt_err("missing config line"))
        .and_then(|c| serde_json::from_str(c).map_err(|e| ckpt_err(e.to_string())))?;

    let mut sections = Vec::new();
    loop {
        let l = next_line(&mut r)?;
        if l == "end" {
            break;
        }
        let mut parts = l.split(' ');
        match (
            parts.next(),
            parts.next(),
            parts.next().map(str::parse::<usize>),
        ) {
            (Some("section"), Some(name), Some(Ok(len))) => sections.push((name.to_owned(), len)),
            _ => return Err(ckpt_err(format!("bad header line `{l}`"))),
        }
    }

    let mut params = ModelParams::zeros(config);
    let mut tensors = params.tensors_mut();
    if tensors.len() != sections.len() {
        return Err(ckpt_err(format!(
            "{} sections for {} tensors",
            sections.len(),
            tensors.len()
        )));
    }
    let mut buf = [0u8; 8];
    for (t, (name, len)) in tensors.iter_mut().zip(&sections) {
        if t.name != name || t.data.len() != *len {
            return Err(ckpt_err(format!(
                "section {name}[{len}] does not match {}[{}]",
                t.name,
                t.data.len()
            )));
        }
        for x in t.data.iter_mut() {
            r.read_exact(&mut buf)
                .map_err(|e| ckpt_err(format!("truncated section {name}: {e}")))?;
            *x = f64::from_le_bytes(buf);
        }
    }
    Ok(params)
}
