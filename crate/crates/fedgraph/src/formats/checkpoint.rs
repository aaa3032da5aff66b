//! Named parameter arrays as text:
//!
//! ```text
//! checkpoint <count>
//! tensor <name> <rows> <cols>
//! <cols values>        (repeated rows times)
//! ```

use std::fmt::Write as _;
use std::path::Path;

use fedgraph_core::models::ParamSet;
use fedgraph_core::Matrix;

use super::{fields, parse_num};
use crate::error::{read_text, write_text, Blame, CliError, Result};

const DATA: Blame = Blame::Data;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    entries: Vec<(String, Matrix)>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.0.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&Matrix> {
        self.entries.iter().find(|e| e.0 == name).map(|e| &e.1)
    }

    /// Names must be unique and free of whitespace.
    pub fn push(&mut self, name: impl Into<String>, value: Matrix) -> Result<()> {
        let name = name.into();
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(CliError::Config(format!("bad tensor name `{name}`")));
        }
        if self.get(&name).is_some() {
            return Err(CliError::Config(format!("tensor `{name}` stored twice")));
        }
        self.entries.push((name, value));
        Ok(())
    }

    /// Stores every tensor of `params` as `<prefix><name>`.
    pub fn push_params<P: ParamSet>(&mut self, prefix: &str, params: &P) -> Result<()> {
        for (name, t) in params.names().into_iter().zip(params.tensors()) {
            self.push(format!("{prefix}{name}"), t.clone())?;
        }
        Ok(())
    }

    /// Overwrites `params` from the tensors stored under `prefix`. Missing
    /// names and shape mismatches are validation errors.
    pub fn restore<P: ParamSet>(&self, prefix: &str, params: &mut P) -> Result<()> {
        let values = params
            .names()
            .into_iter()
            .map(|name| {
                let key = format!("{prefix}{name}");
                self.get(&key)
                    .cloned()
                    .ok_or_else(|| CliError::Validation(format!("checkpoint lacks `{key}`")))
            })
            .collect::<Result<Vec<Matrix>>>()?;
        params
            .assign(&values)
            .map_err(|e| CliError::Validation(format!("checkpoint under `{prefix}`: {e}")))
    }
}

pub fn format_checkpoint(ck: &Checkpoint) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "checkpoint {}", ck.entries.len());
    for (name, m) in &ck.entries {
        let _ = writeln!(out, "tensor {name} {} {}", m.rows(), m.cols());
        for r in 0..m.rows() {
            let row: Vec<String> = m.row(r).iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}

pub fn parse_checkpoint(text: &str, path: &str) -> Result<Checkpoint> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| CliError::parse(DATA, path, 0, format!("file ends before {what}")))
    };
    let (hline, header) = next("the header")?;
    let h = fields(header);
    if h.len() != 2 || h[0] != "checkpoint" {
        return Err(CliError::parse(DATA, path, hline, "expected `checkpoint <count>`"));
    }
    let count: usize = parse_num(DATA, path, hline, h[1], "tensor count")?;
    let mut ck = Checkpoint::new();
    for _ in 0..count {
        let (tline, t) = next("a tensor header")?;
        let f = fields(t);
        if f.len() != 4 || f[0] != "tensor" {
            return Err(CliError::parse(
                DATA,
                path,
                tline,
                "expected `tensor <name> <rows> <cols>`",
            ));
        }
        let rows: usize = parse_num(DATA, path, tline, f[2], "row count")?;
        let cols: usize = parse_num(DATA, path, tline, f[3], "column count")?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (line, raw) = next("the tensor rows")?;
            let vals = fields(raw);
            if vals.len() != cols {
                return Err(CliError::parse(
                    DATA,
                    path,
                    line,
                    format!("expected {cols} values, found {}", vals.len()),
                ));
            }
            for s in vals {
                let v: f64 = parse_num(DATA, path, line, s, "value")?;
                if !v.is_finite() {
                    return Err(CliError::parse(DATA, path, line, "non-finite value"));
                }
                data.push(v);
            }
        }
        let m = Matrix::from_vec(rows, cols, data)?;
        ck.push(f[1], m)
            .map_err(|e| CliError::parse(DATA, path, tline, e))?;
    }
    if let Some((line, extra)) = lines.find(|(_, l)| !l.is_empty()) {
        return Err(CliError::parse(
            DATA,
            path,
            line,
            format!("unexpected trailing content `{extra}`"),
        ));
    }
    Ok(ck)
}

pub fn save_checkpoint(ck: &Checkpoint, path: &Path) -> Result<()> {
    write_text(path, &format_checkpoint(ck))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    parse_checkpoint(&read_text(path, DATA)?, &path.display().to_string())
}
