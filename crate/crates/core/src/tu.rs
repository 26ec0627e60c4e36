//! Reader and writer for the TU graph-classification text format.
//!
//! A dataset `DS` is a directory holding `DS_A.txt` (1-based directed edge
//! list, one `i, j` pair per line), `DS_graph_indicator.txt` (graph id of
//! each node), `DS_graph_labels.txt` (one class per graph) and optionally
//! `DS_node_labels.txt`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{GflError, Result};
use crate::graph::{Graph, GraphDataset};

/// Raw contents of the per-dataset files.
#[derive(Debug, Clone, Copy)]
pub struct TuSources<'a> {
    pub a: &'a [u8],
    pub graph_indicator: &'a [u8],
    pub graph_labels: &'a [u8],
    pub node_labels: Option<&'a [u8]>,
}

fn records<'a>(
    file: &'a str,
    bytes: &'a [u8],
) -> impl Iterator<Item = Result<(usize, Vec<i64>)>> + 'a {
    let text = String::from_utf8_lossy(bytes).into_owned();
    let lines: Vec<String> = text.lines().map(str::to_owned).collect();
    lines
        .into_iter()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(move |(i, line)| {
            let fields: std::result::Result<Vec<i64>, _> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(str::parse::<i64>)
                .collect();
            fields.map(|f| (i + 1, f)).map_err(|e| GflError::Parse {
                file: file.to_owned(),
                line: i + 1,
                msg: format!("`{}`: {e}", line.trim()),
            })
        })
}

fn single_column(file: &str, bytes: &[u8]) -> Result<Vec<i64>> {
    records(file, bytes)
        .map(|r| {
            let (line, f) = r?;
            match f.as_slice() {
                [x] => Ok(*x),
                _ => Err(GflError::Parse {
                    file: file.to_owned(),
                    line,
                    msg: format!("expected one integer, found {}", f.len()),
                }),
            }
        })
        .collect()
}

/// Parses a TU dataset from in-memory file contents.
pub fn parse_tu_dataset(name: &str, src: TuSources<'_>) -> Result<GraphDataset> {
    let indicator = single_column("graph_indicator", src.graph_indicator)?;
    let raw_labels = single_column("graph_labels", src.graph_labels)?;
    let num_graphs = raw_labels.len();

    // global node id (0-based) -> (graph, local id)
    let mut local = Vec::with_capacity(indicator.len());
    let mut sizes = vec![0usize; num_graphs];
    for (node, &gid) in indicator.iter().enumerate() {
        if gid < 1 || gid as usize > num_graphs {
            return Err(GflError::Parse {
                file: "graph_indicator".into(),
                line: node + 1,
                msg: format!("graph id {gid} outside 1..={num_graphs}"),
            });
        }
        let g = gid as usize - 1;
        local.push((g, sizes[g]));
        sizes[g] += 1;
    }

    let node_labels = match src.node_labels {
        Some(bytes) => {
            let l = single_column("node_labels", bytes)?;
            if l.len() != indicator.len() {
                return Err(GflError::Structure(format!(
                    "{} node labels for {} nodes",
                    l.len(),
                    indicator.len()
                )));
            }
            if let Some(pos) = l.iter().position(|&x| x < 0) {
                return Err(GflError::Parse {
                    file: "node_labels".into(),
                    line: pos + 1,
                    msg: format!("negative node label {}", l[pos]),
                });
            }
            Some(l)
        }
        None => None,
    };

    let mut edges = vec![Vec::new(); num_graphs];
    for rec in records("A", src.a) {
        let (line, f) = rec?;
        let [a, b] = f.as_slice() else {
            return Err(GflError::Parse {
                file: "A".into(),
                line,
                msg: format!("expected an edge pair, found {} fields", f.len()),
            });
        };
        let lookup = |x: i64| {
            if x < 1 || x as usize > local.len() {
                Err(GflError::Parse {
                    file: "A".into(),
                    line,
                    msg: format!("node id {x} outside 1..={}", local.len()),
                })
            } else {
                Ok(local[x as usize - 1])
            }
        };
        let (ga, la) = lookup(*a)?;
        let (gb, lb) = lookup(*b)?;
        if ga != gb {
            return Err(GflError::Structure(format!(
                "A line {line}: edge ({a}, {b}) spans graphs {} and {}",
                ga + 1,
                gb + 1
            )));
        }
        if la == lb {
            return Err(GflError::Structure(format!(
                "A line {line}: self-loop at node {a}"
            )));
        }
        edges[ga].push((la, lb));
    }

    let classes: BTreeMap<i64, usize> = raw_labels
        .iter()
        .copied()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, l)| (l, i))
        .collect();

    let mut per_graph_labels: Vec<Vec<usize>> = vec![Vec::new(); num_graphs];
    if let Some(l) = &node_labels {
        for (node, &(g, _)) in local.iter().enumerate() {
            per_graph_labels[g].push(l[node] as usize);
        }
    }

    let graphs = edges
        .into_iter()
        .enumerate()
        .map(|(g, e)| {
            let labels = node_labels
                .as_ref()
                .map(|_| std::mem::take(&mut per_graph_labels[g]));
            Graph::new(sizes[g], e, labels, classes[&raw_labels[g]])
        })
        .collect::<Result<Vec<_>>>()?;
    GraphDataset::new(name, graphs)
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| GflError::io(path, e))
}

/// Loads `<dir>/<DS>_*.txt`, where `DS` is the directory's base name.
pub fn load_tu_dir(dir: &Path) -> Result<GraphDataset> {
    let name = dir
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| GflError::Config(format!("bad dataset path {}", dir.display())))?
        .to_owned();
    let file = |suffix: &str| dir.join(format!("{name}_{suffix}.txt"));
    let a = read(&file("A"))?;
    let indicator = read(&file("graph_indicator"))?;
    let labels = read(&file("graph_labels"))?;
    let node_labels_path = file("node_labels");
    let node_labels = if node_labels_path.exists() {
        Some(read(&node_labels_path)?)
    } else {
        None
    };
    parse_tu_dataset(
        &name,
        TuSources {
            a: &a,
            graph_indicator: &indicator,
            graph_labels: &labels,
            node_labels: node_labels.as_deref(),
        },
    )
}

/// Serialized TU files, in-memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TuFiles {
    pub a: String,
    pub graph_indicator: String,
    pub graph_labels: String,
    pub node_labels: Option<String>,
}

impl TuFiles {
    pub fn sources(&self) -> TuSources<'_> {
        TuSources {
            a: self.a.as_bytes(),
            graph_indicator: self.graph_indicator.as_bytes(),
            graph_labels: self.graph_labels.as_bytes(),
            node_labels: self.node_labels.as_deref().map(str::as_bytes),
        }
    }
}

/// Serializes a dataset, writing both orientations of every edge.
pub fn to_tu_files(d: &GraphDataset) -> TuFiles {
    let mut out = TuFiles {
        a: String::new(),
        graph_indicator: String::new(),
        graph_labels: String::new(),
        node_labels: d.has_node_labels().then(String::new),
    };
    let mut offset = 0;
    for (gi, g) in d.graphs().iter().enumerate() {
        for v in 0..g.num_vertices() {
            let _ = writeln!(out.graph_indicator, "{}", gi + 1);
            if let (Some(buf), Some(l)) = (out.node_labels.as_mut(), g.node_labels()) {
                let _ = writeln!(buf, "{}", l[v]);
            }
        }
        for &(a, b) in g.edges() {
            let _ = writeln!(out.a, "{}, {}", offset + a + 1, offset + b + 1);
            let _ = writeln!(out.a, "{}, {}", offset + b + 1, offset + a + 1);
        }
        let _ = writeln!(out.graph_labels, "{}", g.label());
        offset += g.num_vertices();
    }
    out
}

/// Writes the dataset to `<dir>/<name>_*.txt`, creating `dir` if needed.
pub fn write_tu_dir(d: &GraphDataset, dir: &Path, name: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| GflError::io(dir, e))?;
    let files = to_tu_files(d);
    let write = |suffix: &str, body: &str| {
        let p = dir.join(format!("{name}_{suffix}.txt"));
        fs::write(&p, body).map_err(|e| GflError::io(p, e))
    };
    write("A", &files.a)?;
    write("graph_indicator", &files.graph_indicator)?;
    write("graph_labels", &files.graph_labels)?;
    if let Some(nl) = &files.node_labels {
        write("node_labels", nl)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn src<'a>(a: &'a str, ind: &'a str, lab: &'a str) -> TuSources<'a> {
        TuSources {
            a: a.as_bytes(),
            graph_indicator: ind.as_bytes(),
            graph_labels: lab.as_bytes(),
            node_labels: None,
        }
    }

    #[test]
    fn minimal_dataset() {
        let d = parse_tu_dataset("t", src("1 2\n2 1", "1\n1", "1")).unwrap();
        assert_eq!(d.len(), 1);
        let g = &d.graphs()[0];
        assert_eq!(g.num_vertices(), 2);
        assert_eq!(g.edges(), &[(0, 1)]);
        assert_eq!(g.label(), 0);
    }

    #[test]
    fn edge_across_graphs_is_structural_error() {
        let err = parse_tu_dataset("t", src("1 2\n2 1", "1\n2", "1\n1")).unwrap_err();
        assert!(matches!(err, GflError::Structure(_)), "{err}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_tu_dataset("t", src("1, 2\n2, x", "1\n1", "1")).unwrap_err();
        match err {
            GflError::Parse { line, file, .. } => {
                assert_eq!(line, 2);
                assert_eq!(file, "A");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn missing_twin_is_tolerated_and_labels_remapped() {
        let d = parse_tu_dataset("t", src("1, 2\n3, 4\n4, 3", "1\n1\n2\n2", "-1\n1")).unwrap();
        assert_eq!(d.graphs()[0].edges(), &[(0, 1)]);
        assert_eq!(d.graphs()[1].edges(), &[(0, 1)]);
        assert_eq!(d.graphs()[0].label(), 0);
        assert_eq!(d.graphs()[1].label(), 1);
        assert_eq!(d.num_classes(), 2);
    }

    #[test]
    fn node_labels_are_split_per_graph() {
        let s = TuSources {
            node_labels: Some(b"3\n0\n1"),
            ..src("1 2", "1\n1\n2", "0\n1")
        };
        let d = parse_tu_dataset("t", s).unwrap();
        assert_eq!(d.graphs()[0].node_labels(), Some(&[3, 0][..]));
        assert_eq!(d.graphs()[1].node_labels(), Some(&[1][..]));
        assert_eq!(d.num_node_labels(), 4);
    }
}
