use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::ConvexBody;
use crate::means::p_from_beta;
use crate::pde::{OperatorSpec, PucciMethod, SolveParams, SourceTerm, DEFAULT_FRAMES, DEFAULT_RELAXATION, DEFAULT_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Theorem41,
    Corollary42,
    Rearrangement65,
    TorsionUrysohn,
    GeometrySuite,
    AssumptionCheck,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Theorem41 => "theorem41",
            Experiment::Corollary42 => "corollary42",
            Experiment::Rearrangement65 => "rearrangement65",
            Experiment::TorsionUrysohn => "torsion_urysohn",
            Experiment::GeometrySuite => "geometry_suite",
            Experiment::AssumptionCheck => "assumption_check",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "theorem41" => Experiment::Theorem41,
            "corollary42" => Experiment::Corollary42,
            "rearrangement65" => Experiment::Rearrangement65,
            "torsion_urysohn" => Experiment::TorsionUrysohn,
            "geometry_suite" => Experiment::GeometrySuite,
            "assumption_check" => Experiment::AssumptionCheck,
            _ => return Err(Error::Config(format!("unknown experiment {s:?}"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorChoice {
    Poisson,
    Pucci,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PChoice {
    Value(f64),
    /// `β/(1+2β)` from the configured `beta`.
    AutoFromBeta,
}

/// One experiment run. Every field has a default, so a config file only
/// lists what differs.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Body literals: `square [a]`, `disc [cx cy] r`, `polygon ...`,
    /// `file PATH`, or `random N` (a seeded random N-gon).
    pub body0: String,
    pub body1: String,
    /// The single body of rearrangement65 and torsion_urysohn.
    pub body: String,
    pub operator: OperatorChoice,
    pub lambda: f64,
    pub big_lambda: f64,
    pub frames: usize,
    pub source: String,
    pub source0: Option<String>,
    pub source1: Option<String>,
    pub source_mu: Option<String>,
    pub p: PChoice,
    pub beta: f64,
    pub mu: f64,
    pub r_list: Vec<f64>,
    pub q_list: Vec<f64>,
    pub m: usize,
    pub h: f64,
    /// Overrides the computed slack budget.
    pub epsilon: Option<f64>,
    pub seed: u64,
    /// Nodes per axis of the coarsened pair subgrid of theorem41.
    pub pair_grid: usize,
    /// Random pairs for the geometry suite.
    pub pairs: usize,
    /// Random samples for the source and assumption checks.
    pub samples: usize,
    /// Run theorem41/corollary42 even when the source condition fails; the
    /// inequality records are then descriptive.
    pub waiver: bool,
    pub tol: f64,
    pub max_iters: usize,
    pub relaxation: f64,
    pub policy_relaxation: f64,
    pub dt_safety: f64,
    pub method: PucciMethod,
    pub exec: Exec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Theorem41,
            body0: "square 1".into(),
            body1: "disc 0 0 1".into(),
            body: "square 1".into(),
            operator: OperatorChoice::Poisson,
            lambda: 1.0,
            big_lambda: 1.0,
            frames: DEFAULT_FRAMES,
            source: "const 1".into(),
            source0: None,
            source1: None,
            source_mu: None,
            p: PChoice::Value(0.5),
            beta: f64::INFINITY,
            mu: 0.5,
            r_list: vec![1.0, 2.0, f64::INFINITY],
            q_list: vec![1.0, 2.0, f64::INFINITY],
            m: 8,
            h: 1.0 / 64.0,
            epsilon: None,
            seed: 1,
            pair_grid: 17,
            pairs: 200,
            samples: 2000,
            waiver: false,
            tol: DEFAULT_TOL,
            max_iters: 200_000,
            relaxation: DEFAULT_RELAXATION,
            policy_relaxation: 1.0,
            dt_safety: 0.9,
            method: PucciMethod::PolicyIteration,
            exec: Exec::Parallel,
        }
    }
}

fn cfg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

/// Decimal, `a/b`, or `inf`.
pub fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    match s {
        "inf" | "+inf" | "infinity" | "∞" => return Ok(f64::INFINITY),
        "-inf" => return Ok(f64::NEG_INFINITY),
        _ => {}
    }
    if let Some((a, b)) = s.split_once('/') {
        let (a, b) = (parse_number(a)?, parse_number(b)?);
        if b == 0.0 {
            return cfg_err(format!("zero denominator in {s:?}"));
        }
        return Ok(a / b);
    }
    s.parse::<f64>().map_err(|_| Error::Config(format!("bad number {s:?}")))
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(parse_number).collect()
}

fn parse_int(s: &str) -> Result<usize> {
    s.trim().parse::<usize>().map_err(|_| Error::Config(format!("bad integer {s:?}")))
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => cfg_err(format!("bad boolean {s:?}")),
    }
}

fn fmt_number(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else {
        format!("{x}")
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|&x| fmt_number(x)).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "experiment" => self.experiment = Experiment::parse(v)?,
            "body0" => self.body0 = v.into(),
            "body1" => self.body1 = v.into(),
            "body" => self.body = v.into(),
            "operator" => {
                self.operator = match v {
                    "poisson" => OperatorChoice::Poisson,
                    "pucci" | "pucci_minus" => OperatorChoice::Pucci,
                    _ => return cfg_err(format!("unknown operator {v:?}")),
                }
            }
            "lambda" => self.lambda = parse_number(v)?,
            "Lambda" => self.big_lambda = parse_number(v)?,
            "K" => self.frames = parse_int(v)?,
            "source" => self.source = v.into(),
            "source0" => self.source0 = Some(v.into()),
            "source1" => self.source1 = Some(v.into()),
            "source_mu" => self.source_mu = Some(v.into()),
            "p" => {
                self.p = if v == "auto-from-beta" {
                    PChoice::AutoFromBeta
                } else {
                    PChoice::Value(parse_number(v)?)
                }
            }
            "beta" => self.beta = parse_number(v)?,
            "mu" => self.mu = parse_number(v)?,
            "r_list" => self.r_list = parse_list(v)?,
            "q_list" => self.q_list = parse_list(v)?,
            "m" => self.m = parse_int(v)?,
            "h" => self.h = parse_number(v)?,
            "epsilon" => {
                self.epsilon = if v == "auto" { None } else { Some(parse_number(v)?) }
            }
            "seed" => {
                self.seed = v.parse::<u64>().map_err(|_| Error::Config(format!("bad seed {v:?}")))?
            }
            "pair_grid" => self.pair_grid = parse_int(v)?,
            "pairs" => self.pairs = parse_int(v)?,
            "samples" => self.samples = parse_int(v)?,
            "waiver" => self.waiver = parse_bool(v)?,
            "tol" => self.tol = parse_number(v)?,
            "max_iters" => self.max_iters = parse_int(v)?,
            "relaxation" => self.relaxation = parse_number(v)?,
            "policy_relaxation" => self.policy_relaxation = parse_number(v)?,
            "dt_safety" => self.dt_safety = parse_number(v)?,
            "method" => {
                self.method = match v {
                    "policy" => PucciMethod::PolicyIteration,
                    "pseudo_time" => PucciMethod::PseudoTime,
                    _ => return cfg_err(format!("unknown method {v:?}")),
                }
            }
            "exec" => {
                self.exec = match v {
                    "parallel" => Exec::Parallel,
                    "sequential" => Exec::Sequential,
                    _ => return cfg_err(format!("unknown exec {v:?}")),
                }
            }
            other => return cfg_err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// Plain `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            cfg.set(k, v).map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(e) = self.epsilon {
            if !(e > 0.0) {
                return cfg_err("epsilon must be positive");
            }
        }
        if !(self.h > 0.0) {
            return cfg_err("h must be positive");
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return cfg_err("mu must lie in (0,1)");
        }
        if self.pair_grid < 2 {
            return cfg_err("pair_grid must be at least 2");
        }
        for lit in [&self.body0, &self.body1, &self.body] {
            if let Some(path) = lit.strip_prefix("file ") {
                if !Path::new(path.trim()).exists() {
                    return cfg_err(format!("body file {:?} does not exist", path.trim()));
                }
            }
        }
        self.resolved_p()?;
        Ok(())
    }

    pub fn resolved_p(&self) -> Result<f64> {
        match self.p {
            PChoice::Value(p) => Ok(p),
            PChoice::AutoFromBeta => p_from_beta(self.beta).map_err(|e| Error::Config(e.to_string())),
        }
    }

    /// Body literal with the seeded `random N` extension.
    pub fn body_from(&self, literal: &str, salt: u64) -> Result<ConvexBody> {
        let lit = literal.trim();
        if let Some(n) = lit.strip_prefix("random") {
            let n = if n.trim().is_empty() { 7 } else { parse_int(n)? };
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(salt));
            return ConvexBody::random_polygon(&mut rng, n);
        }
        ConvexBody::parse(lit)
    }

    pub fn source_term(&self, which: Option<&String>) -> Result<SourceTerm> {
        SourceTerm::parse(which.unwrap_or(&self.source))
    }

    pub fn operator_with(&self, source: SourceTerm) -> Result<OperatorSpec> {
        match self.operator {
            OperatorChoice::Poisson => OperatorSpec::poisson(source),
            OperatorChoice::Pucci => OperatorSpec::pucci(self.lambda, self.big_lambda, source, self.frames),
        }
    }

    pub fn solve_params(&self, h: f64) -> SolveParams {
        let mut s = SolveParams::new(h);
        s.tol = self.tol;
        s.max_iters = self.max_iters;
        s.relaxation = self.relaxation;
        s.policy_relaxation = self.policy_relaxation;
        s.dt_safety = self.dt_safety;
        s.method = self.method;
        s
    }

    /// The resolved configuration as sorted strings, echoed into reports.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("experiment", self.experiment.name().into());
        put("body0", self.body0.clone());
        put("body1", self.body1.clone());
        put("body", self.body.clone());
        put(
            "operator",
            match self.operator {
                OperatorChoice::Poisson => "poisson".into(),
                OperatorChoice::Pucci => "pucci".into(),
            },
        );
        put("lambda", fmt_number(self.lambda));
        put("Lambda", fmt_number(self.big_lambda));
        put("K", self.frames.to_string());
        put("source", self.source.clone());
        put("source0", self.source0.clone().unwrap_or_else(|| self.source.clone()));
        put("source1", self.source1.clone().unwrap_or_else(|| self.source.clone()));
        put("source_mu", self.source_mu.clone().unwrap_or_else(|| self.source.clone()));
        put(
            "p",
            match self.p {
                PChoice::Value(p) => fmt_number(p),
                PChoice::AutoFromBeta => format!(
                    "auto-from-beta ({})",
                    self.resolved_p().map(fmt_number).unwrap_or_default()
                ),
            },
        );
        put("beta", fmt_number(self.beta));
        put("mu", fmt_number(self.mu));
        put("r_list", fmt_list(&self.r_list));
        put("q_list", fmt_list(&self.q_list));
        put("m", self.m.to_string());
        put("h", fmt_number(self.h));
        put("epsilon", self.epsilon.map_or("auto".into(), fmt_number));
        put("seed", self.seed.to_string());
        put("pair_grid", self.pair_grid.to_string());
        put("pairs", self.pairs.to_string());
        put("samples", self.samples.to_string());
        put("waiver", self.waiver.to_string());
        put("tol", fmt_number(self.tol));
        put("max_iters", self.max_iters.to_string());
        put("relaxation", fmt_number(self.relaxation));
        put("policy_relaxation", fmt_number(self.policy_relaxation));
        put("dt_safety", fmt_number(self.dt_safety));
        put(
            "method",
            match self.method {
                PucciMethod::PolicyIteration => "policy".into(),
                PucciMethod::PseudoTime => "pseudo_time".into(),
            },
        );
        m
    }
}

pub const PRESETS: &[&str] = &[
    "square-circle-torsion",
    "square-circle-corollary",
    "square-circle-adversarial",
    "beta-concave-source",
    "square-rearrangement",
    "pucci-urysohn",
    "torsion-urysohn",
    "torsion-urysohn-random",
    "geometry-suite",
    "assumption-check",
];

/// Shipped experiment presets.
pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let mut c = ExperimentConfig::default();
    let settings: &[(&str, &str)] = match name {
        "square-circle-torsion" => &[("experiment", "theorem41")],
        "square-circle-corollary" => &[("experiment", "corollary42")],
        // outside the guaranteed range for f ≡ 1; descriptive only
        "square-circle-adversarial" => &[("experiment", "theorem41"), ("p", "0.9"), ("waiver", "true")],
        "beta-concave-source" => &[
            ("experiment", "theorem41"),
            ("source", "beta 2 2"),
            ("beta", "2"),
            ("p", "auto-from-beta"),
        ],
        "square-rearrangement" => &[("experiment", "rearrangement65")],
        "pucci-urysohn" => &[
            ("experiment", "rearrangement65"),
            ("operator", "pucci"),
            ("lambda", "1"),
            ("Lambda", "2"),
        ],
        "torsion-urysohn" => &[("experiment", "torsion_urysohn")],
        "torsion-urysohn-random" => &[("experiment", "torsion_urysohn"), ("body", "random 7"), ("h", "1/32")],
        "geometry-suite" => &[("experiment", "geometry_suite")],
        "assumption-check" => &[
            ("experiment", "assumption_check"),
            ("source", "affine 1 0.2 0.1"),
            ("p", "1/3"),
        ],
        _ => return None,
    };
    for (k, v) in settings {
        c.set(k, v).expect("preset settings are valid");
    }
    Some(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_files_and_rejects_unknown_keys() {
        let c = ExperimentConfig::parse("experiment = corollary42\nh = 1/32 # comment\nr_list = 1, inf\n").unwrap();
        assert_eq!(c.experiment, Experiment::Corollary42);
        assert_eq!(c.h, 1.0 / 32.0);
        assert_eq!(c.r_list, vec![1.0, f64::INFINITY]);
        assert!(matches!(ExperimentConfig::parse("colour = red"), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::parse("epsilon = -1"), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::parse("body = file /no/such/file"), Err(Error::Config(_))));
    }

    #[test]
    fn presets_are_valid() {
        for name in PRESETS {
            preset(name).unwrap().validate().unwrap();
        }
        let b = preset("beta-concave-source").unwrap();
        assert!((b.resolved_p().unwrap() - 0.4).abs() < 1e-15);
        assert!(preset("nope").is_none());
    }
}
