//! `key = value` configuration files. `#` starts a comment; lists are
//! comma-separated. Unknown or repeated keys are rejected.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use fedgraph_core::datagen::GenConfig;
use fedgraph_core::fed::{Method, RoundConfig};
use fedgraph_core::models::Backbone;

use super::parse_num;
use crate::error::{read_text, Blame, CliError, Result};

const CFG: Blame = Blame::Config;

/// Parsed entries awaiting typed extraction.
#[derive(Debug)]
pub struct KeyValues {
    path: String,
    entries: Vec<(String, String, usize)>,
}

impl KeyValues {
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let mut entries: Vec<(String, String, usize)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| CliError::parse(CFG, path, line, "expected `key = value`"))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(CliError::parse(CFG, path, line, "empty key or value"));
            }
            if let Some((_, _, first)) = entries.iter().find(|e| e.0 == k) {
                return Err(CliError::parse(
                    CFG,
                    path,
                    line,
                    format!("`{k}` already set on line {first}"),
                ));
            }
            entries.push((k.to_string(), v.to_string(), line));
        }
        Ok(Self {
            path: path.to_string(),
            entries,
        })
    }

    fn take_raw(&mut self, key: &str) -> Option<(String, usize)> {
        let pos = self.entries.iter().position(|e| e.0 == key)?;
        let (_, v, line) = self.entries.remove(pos);
        Some((v, line))
    }

    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.take_raw(key) {
            None => Ok(None),
            Some((v, line)) => parse_num(CFG, &self.path, line, &v, key).map(Some),
        }
    }

    pub fn take_list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        match self.take_raw(key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|s| parse_num(CFG, &self.path, line, s.trim(), key))
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    fn take_with<T>(&mut self, key: &str, f: impl Fn(&str) -> fedgraph_core::Result<T>) -> Result<Option<T>> {
        match self.take_raw(key) {
            None => Ok(None),
            Some((v, line)) => f(&v)
                .map(Some)
                .map_err(|e| CliError::parse(CFG, &self.path, line, e)),
        }
    }

    fn require<T>(&self, key: &str, v: Option<T>) -> Result<T> {
        v.ok_or_else(|| CliError::Config(format!("{}: missing key `{key}`", self.path)))
    }

    /// Fails on any key nobody asked for.
    pub fn finish(self) -> Result<()> {
        match self.entries.first() {
            None => Ok(()),
            Some((k, _, line)) => Err(CliError::parse(
                CFG,
                &self.path,
                *line,
                format!("unknown key `{k}`"),
            )),
        }
    }
}

/// A training configuration plus the seeds to run it under.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub round: RoundConfig,
    pub seeds: Vec<u64>,
}

/// Keys: `method backbone rounds local_epochs lr_gnn lr_encoder lr_proxy
/// lambda1 lambda2 hidden_dim proxy_dim seed`, plus `seeds` (a list, in
/// place of `seed`) and `zero_proxies` (true/false). Missing keys keep
/// their defaults.
pub fn parse_run_config(text: &str, path: &str) -> Result<RunSpec> {
    let mut kv = KeyValues::parse(text, path)?;
    let mut c = RoundConfig::default();
    if let Some(m) = kv.take_with("method", Method::from_name)? {
        c.method = m;
    }
    if let Some(b) = kv.take_with("backbone", Backbone::from_name)? {
        c.backbone = b;
    }
    macro_rules! set {
        ($($key:literal => $field:expr),* $(,)?) => {
            $(if let Some(v) = kv.take($key)? { $field = v; })*
        };
    }
    set! {
        "rounds" => c.rounds,
        "local_epochs" => c.local_epochs,
        "lr_gnn" => c.lr_gnn,
        "lr_encoder" => c.lr_encoder,
        "lr_proxy" => c.lr_proxy,
        "lambda1" => c.weights.lambda1,
        "lambda2" => c.weights.lambda2,
        "hidden_dim" => c.hidden_dim,
        "proxy_dim" => c.proxy_dim,
        "zero_proxies" => c.zero_proxies,
    }
    let seed: Option<u64> = kv.take("seed")?;
    let seeds: Option<Vec<u64>> = kv.take_list("seeds")?;
    kv.finish()?;
    let seeds = match (seed, seeds) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(format!(
                "{path}: set either `seed` or `seeds`, not both"
            )))
        }
        (Some(s), None) => vec![s],
        (None, Some(list)) => list,
        (None, None) => vec![c.seed],
    };
    if seeds.is_empty() {
        return Err(CliError::Config(format!("{path}: empty seed list")));
    }
    c.seed = seeds[0];
    c.validate()?;
    Ok(RunSpec { round: c, seeds })
}

pub fn format_run_config(spec: &RunSpec) -> String {
    let c = &spec.round;
    let mut out = String::new();
    let _ = writeln!(out, "method = {}", c.method.name());
    let _ = writeln!(out, "backbone = {}", c.backbone.name());
    let _ = writeln!(out, "rounds = {}", c.rounds);
    let _ = writeln!(out, "local_epochs = {}", c.local_epochs);
    let _ = writeln!(out, "lr_gnn = {:?}", c.lr_gnn);
    let _ = writeln!(out, "lr_encoder = {:?}", c.lr_encoder);
    let _ = writeln!(out, "lr_proxy = {:?}", c.lr_proxy);
    let _ = writeln!(out, "lambda1 = {:?}", c.weights.lambda1);
    let _ = writeln!(out, "lambda2 = {:?}", c.weights.lambda2);
    let _ = writeln!(out, "hidden_dim = {}", c.hidden_dim);
    let _ = writeln!(out, "proxy_dim = {}", c.proxy_dim);
    let _ = writeln!(out, "zero_proxies = {}", c.zero_proxies);
    let seeds: Vec<String> = spec.seeds.iter().map(u64::to_string).collect();
    let _ = writeln!(out, "seeds = {}", seeds.join(","));
    out
}

pub fn load_run_config(path: &Path) -> Result<RunSpec> {
    parse_run_config(&read_text(path, CFG)?, &path.display().to_string())
}

/// Generator parameters plus the seed for `generate` and `verify-prop1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub gen: GenConfig,
    pub seed: u64,
}

/// Keys: `mu1 mu2 p q majority` (lists), `nodes`, `mean_degree`, and
/// optionally `seed` (default 1).
pub fn parse_gen_config(text: &str, path: &str) -> Result<GenSpec> {
    let mut kv = KeyValues::parse(text, path)?;
    let mu1 = kv.take_list("mu1")?;
    let mu2 = kv.take_list("mu2")?;
    let p = kv.take_list("p")?;
    let q = kv.take_list("q")?;
    let majority = kv.take_list("majority")?;
    let nodes = kv.take("nodes")?;
    let mean_degree = kv.take("mean_degree")?;
    let seed = kv.take("seed")?.unwrap_or(1);
    let gen = GenConfig {
        mu1: kv.require("mu1", mu1)?,
        mu2: kv.require("mu2", mu2)?,
        p: kv.require("p", p)?,
        q: kv.require("q", q)?,
        majority: kv.require("majority", majority)?,
        nodes: kv.require("nodes", nodes)?,
        mean_degree: kv.require("mean_degree", mean_degree)?,
    };
    kv.finish()?;
    gen.validate()?;
    Ok(GenSpec { gen, seed })
}

pub fn format_gen_config(spec: &GenSpec) -> String {
    fn list<T: std::fmt::Debug>(v: &[T]) -> String {
        v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
    }
    let g = &spec.gen;
    let mut out = String::new();
    let _ = writeln!(out, "mu1 = {}", list(&g.mu1));
    let _ = writeln!(out, "mu2 = {}", list(&g.mu2));
    let _ = writeln!(out, "p = {}", list(&g.p));
    let _ = writeln!(out, "q = {}", list(&g.q));
    let _ = writeln!(out, "majority = {}", list(&g.majority));
    let _ = writeln!(out, "nodes = {}", g.nodes);
    let _ = writeln!(out, "mean_degree = {:?}", g.mean_degree);
    let _ = writeln!(out, "seed = {}", spec.seed);
    out
}

pub fn load_gen_config(path: &Path) -> Result<GenSpec> {
    parse_gen_config(&read_text(path, CFG)?, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_when_empty() {
        let spec = parse_run_config("# nothing\n", "r").unwrap();
        assert_eq!(spec.round, RoundConfig::default());
        assert_eq!(spec.seeds, [1]);
    }

    #[test]
    fn run_config_round_trip() {
        let text = "method = local\nbackbone = sage\nrounds = 7\nlr_gnn = 0.01 # faster\nlambda1 = 0\nseeds = 3, 4,5\n";
        let spec = parse_run_config(text, "r").unwrap();
        assert_eq!(spec.round.method, Method::Local);
        assert_eq!(spec.round.backbone, Backbone::Sage);
        assert_eq!(spec.round.rounds, 7);
        assert_eq!(spec.round.lr_gnn, 0.01);
        assert_eq!(spec.round.weights.lambda1, 0.0);
        assert_eq!(spec.seeds, [3, 4, 5]);
        assert_eq!(spec.round.seed, 3);
        assert_eq!(parse_run_config(&format_run_config(&spec), "r").unwrap(), spec);
    }

    #[test]
    fn run_config_errors() {
        let bad = [
            ("rounds = 0\n", None),
            ("rounds = many\n", Some(1)),
            ("colour = red\n", Some(1)),
            ("seed = 1\nseed = 2\n", Some(2)),
            ("method = fedprox\n", Some(1)),
            ("just words\n", Some(1)),
            ("seed = 1\nseeds = 1,2\n", None),
            ("lr_proxy = -1\n", None),
        ];
        for (text, line) in bad {
            let err = parse_run_config(text, "r").unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text:?}: {err}");
            if let Some(want) = line {
                assert!(matches!(err, CliError::Parse { line, .. } if line == want), "{text:?}: {err}");
            }
        }
    }

    #[test]
    fn gen_config_round_trip() {
        let text = "mu1 = 1,0\nmu2 = -1,0\np = 0.9,0.8\nq = 0.2,0.3\nmajority = 0,1\nnodes = 100\nmean_degree = 4\n";
        let spec = parse_gen_config(text, "g").unwrap();
        assert_eq!(spec.seed, 1);
        assert_eq!(spec.gen.majority, [0, 1]);
        assert_eq!(parse_gen_config(&format_gen_config(&spec), "g").unwrap(), spec);
    }

    #[test]
    fn gen_config_errors() {
        let base = "mu1 = 1,0\nmu2 = -1,0\np = 0.9\nq = 0.2\nmajority = 0\nnodes = 100\n";
        let err = parse_gen_config(base, "g").unwrap_err();
        assert!(err.to_string().contains("mean_degree"));
        let err = parse_gen_config(&format!("{base}mean_degree = 4\nq2 = 1\n"), "g").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let zero_q = format!("{base}mean_degree = 4\n").replace("q = 0.2", "q = 0");
        let err = parse_gen_config(&zero_q, "g").unwrap_err();
        assert!(matches!(err, CliError::Core(fedgraph_core::Error::Config(_))), "{err}");
    }
}
