//! On-disk formats. Everything is UTF-8 text; floats are written in Rust's
//! shortest round-trip form, so save-then-load is bitwise exact.

pub mod checkpoint;
pub mod config;
pub mod graph;

use std::str::FromStr;

use crate::error::{Blame, CliError, Result};

fn fields(line: &str) -> Vec<&str> {
    line.split_whitespace().collect()
}

fn parse_num<T: FromStr>(blame: Blame, path: &str, line: usize, s: &str, what: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.parse()
        .map_err(|e| CliError::parse(blame, path, line, format!("bad {what} `{s}`: {e}")))
}
