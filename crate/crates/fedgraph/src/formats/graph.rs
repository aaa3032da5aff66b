//! Text graph and split files.
//!
//! ```text
//! graph <n> <d_x> <d_c>
//! node <id> <label|-> <f_1> ... <f_dx>
//! edge <u> <v>
//! ```
//!
//! Split files hold one `split <id> <train|val|test>` line per assigned node.

use std::fmt::Write as _;
use std::path::Path;

use fedgraph_core::graph::SplitKind;
use fedgraph_core::{Graph, Matrix, NodeSplit, SparseAdj};

use super::{fields, parse_num};
use crate::error::{read_text, write_text, Blame, CliError, Result};

const DATA: Blame = Blame::Data;

/// Writes each undirected edge once as `u < v`, nodes in id order, floats
/// in shortest round-trip form.
pub fn format_graph(g: &Graph) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "graph {} {} {}",
        g.node_count(),
        g.feature_dim(),
        g.num_classes()
    );
    for v in 0..g.node_count() {
        let _ = write!(out, "node {v} ");
        match g.label(v) {
            Some(c) => {
                let _ = write!(out, "{c}");
            }
            None => out.push('-'),
        }
        for x in g.features().row(v) {
            let _ = write!(out, " {x:?}");
        }
        out.push('\n');
    }
    for (u, v) in g.edges() {
        let _ = writeln!(out, "edge {u} {v}");
    }
    out
}

/// Parses a graph file. `path` only labels error messages.
///
/// Edges listed once with `u < v` are taken as undirected. If any line has
/// `u > v` the list is read as directed entries, and every entry then needs
/// its mirror.
pub fn parse_graph(text: &str, path: &str) -> Result<Graph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines
        .next()
        .ok_or_else(|| CliError::parse(DATA, path, 1, "empty graph file"))?;
    let h = fields(header);
    if h.len() != 4 || h[0] != "graph" {
        return Err(CliError::parse(
            DATA,
            path,
            hline,
            "expected header `graph <n> <d_x> <d_c>`",
        ));
    }
    let n: usize = parse_num(DATA, path, hline, h[1], "node count")?;
    let d_x: usize = parse_num(DATA, path, hline, h[2], "feature dim")?;
    let d_c: usize = parse_num(DATA, path, hline, h[3], "class count")?;

    let mut features = Matrix::zeros(n, d_x);
    let mut labels = vec![None; n];
    let mut seen = vec![false; n];
    let mut nodes_read = 0;
    let mut entries = Vec::new();
    let mut directed = false;

    for (line, raw) in lines {
        let f = fields(raw);
        match f[0] {
            "node" => {
                if !entries.is_empty() {
                    return Err(CliError::parse(DATA, path, line, "node line after edges"));
                }
                if f.len() != 3 + d_x {
                    return Err(CliError::parse(
                        DATA,
                        path,
                        line,
                        format!("node line needs 2 + {d_x} fields, found {}", f.len() - 1),
                    ));
                }
                let id: usize = parse_num(DATA, path, line, f[1], "node id")?;
                if id >= n {
                    return Err(CliError::parse(DATA, path, line, format!("node {id} >= {n}")));
                }
                if seen[id] {
                    return Err(CliError::parse(DATA, path, line, format!("node {id} repeated")));
                }
                seen[id] = true;
                nodes_read += 1;
                labels[id] = if f[2] == "-" {
                    None
                } else {
                    let c: usize = parse_num(DATA, path, line, f[2], "label")?;
                    if c >= d_c {
                        return Err(CliError::parse(
                            DATA,
                            path,
                            line,
                            format!("label {c} but only {d_c} classes"),
                        ));
                    }
                    Some(c)
                };
                for (dst, s) in features.row_mut(id).iter_mut().zip(&f[3..]) {
                    let x: f64 = parse_num(DATA, path, line, s, "feature")?;
                    if !x.is_finite() {
                        return Err(CliError::parse(DATA, path, line, "non-finite feature"));
                    }
                    *dst = x;
                }
            }
            "edge" => {
                if f.len() != 3 {
                    return Err(CliError::parse(DATA, path, line, "expected `edge <u> <v>`"));
                }
                let u: usize = parse_num(DATA, path, line, f[1], "edge endpoint")?;
                let v: usize = parse_num(DATA, path, line, f[2], "edge endpoint")?;
                if u >= n || v >= n {
                    return Err(CliError::parse(
                        DATA,
                        path,
                        line,
                        format!("edge ({u},{v}) outside {n} nodes"),
                    ));
                }
                if u == v {
                    return Err(CliError::parse(DATA, path, line, format!("self-loop on {u}")));
                }
                directed |= u > v;
                entries.push((u, v));
            }
            other => {
                return Err(CliError::parse(
                    DATA,
                    path,
                    line,
                    format!("unknown record `{other}`"),
                ))
            }
        }
    }
    if nodes_read != n {
        return Err(CliError::Validation(format!(
            "{path}: header declares {n} nodes, file lists {nodes_read}"
        )));
    }
    let adjacency = if directed {
        let t: Vec<(usize, usize, f64)> = entries.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        SparseAdj::from_triplets(n, &t)
    } else {
        SparseAdj::from_undirected_edges(n, &entries)
    }
    .map_err(|e| CliError::Validation(format!("{path}: {e}")))?;
    Graph::new(adjacency, features, labels, d_c)
        .map_err(|e| CliError::Validation(format!("{path}: {e}")))
}

pub fn load_graph(path: &Path) -> Result<Graph> {
    parse_graph(&read_text(path, DATA)?, &path.display().to_string())
}

pub fn save_graph(g: &Graph, path: &Path) -> Result<()> {
    write_text(path, &format_graph(g))
}

pub fn format_split(split: &NodeSplit) -> String {
    let mut rows: Vec<(usize, SplitKind)> = [SplitKind::Train, SplitKind::Val, SplitKind::Test]
        .into_iter()
        .flat_map(|k| split.nodes(k).iter().map(move |&v| (v, k)))
        .collect();
    rows.sort_unstable();
    let mut out = String::new();
    for (v, k) in rows {
        let _ = writeln!(out, "split {v} {}", k.name());
    }
    out
}

/// Parses a split file and checks it against `graph`.
pub fn parse_split(text: &str, path: &str, graph: &Graph) -> Result<NodeSplit> {
    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let f = fields(raw);
        if f.len() != 3 || f[0] != "split" {
            return Err(CliError::parse(
                DATA,
                path,
                line,
                "expected `split <id> <train|val|test>`",
            ));
        }
        let v: usize = parse_num(DATA, path, line, f[1], "node id")?;
        let kind = SplitKind::from_name(f[2]).ok_or_else(|| {
            CliError::parse(DATA, path, line, format!("unknown split `{}`", f[2]))
        })?;
        match kind {
            SplitKind::Train => train.push(v),
            SplitKind::Val => val.push(v),
            SplitKind::Test => test.push(v),
        }
    }
    let split = NodeSplit::new(train, val, test);
    split
        .validate(graph)
        .map_err(|e| CliError::Validation(format!("{path}: {e}")))?;
    Ok(split)
}

pub fn load_split(path: &Path, graph: &Graph) -> Result<NodeSplit> {
    parse_split(&read_text(path, DATA)?, &path.display().to_string(), graph)
}

pub fn save_split(split: &NodeSplit, path: &Path) -> Result<()> {
    write_text(path, &format_split(split))
}
