//! Experiment harness: runs the inequality checks end to end and reports
//! every comparison with its slack against an explicit discretization
//! budget.

mod config;
mod experiments;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

pub use config::*;
pub use experiments::*;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    /// Violated by less than `2ε`: refine `h` before concluding anything.
    Inconclusive,
    Fail,
    /// Descriptive record outside the hypotheses; never affects the exit
    /// code.
    Info,
}

impl Verdict {
    fn of(slack: f64, eps: f64) -> Verdict {
        if slack >= -eps {
            Verdict::Pass
        } else if slack >= -2.0 * eps {
            Verdict::Inconclusive
        } else {
            Verdict::Fail
        }
    }
}

/// One comparison `lhs ≥ rhs`. Checks with their own tolerance fold it into
/// `lhs` or `rhs`, so `slack = lhs − rhs` is always what `ε` is held to.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub verdict: Verdict,
}

impl Check {
    pub fn ge(name: impl Into<String>, lhs: f64, rhs: f64, eps: f64) -> Check {
        let slack = lhs - rhs;
        Check {
            name: name.into(),
            lhs,
            rhs,
            slack,
            verdict: Verdict::of(slack, eps),
        }
    }

    /// `lhs = rhs`, with `slack = −|lhs − rhs|`.
    pub fn eq(name: impl Into<String>, lhs: f64, rhs: f64, eps: f64) -> Check {
        let slack = -(lhs - rhs).abs();
        Check {
            name: name.into(),
            lhs,
            rhs,
            slack,
            verdict: Verdict::of(slack, eps),
        }
    }

    pub fn into_info(mut self) -> Check {
        self.verdict = Verdict::Info;
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub check: String,
    pub point: Vec<f64>,
    pub note: String,
}

/// Components of `ε`. For the PDE experiments `ε` is their sum:
/// `solver` is twice the Richardson-style error estimate, `interpolation` is
/// `2·L·h`, `quadrature` bounds the cell-area quadrature defect.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct SlackBudget {
    pub solver: f64,
    pub interpolation: f64,
    pub quadrature: f64,
}

impl SlackBudget {
    pub fn total(&self) -> f64 {
        self.solver + self.interpolation + self.quadrature
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub experiment: String,
    pub config_echo: BTreeMap<String, String>,
    pub checks: Vec<Check>,
    pub min_slack: f64,
    pub slack_budget: SlackBudget,
    pub witnesses: Vec<Witness>,
    pub runtime_seconds: f64,
}

impl Report {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// The `ε` the verdicts were computed with.
    pub fn epsilon(&self) -> f64 {
        self.config_echo
            .get("epsilon_used")
            .and_then(|s| s.parse().ok())
            .unwrap_or_else(|| self.slack_budget.total())
    }

    /// 0 all pass, 1 any fail, 2 any inconclusive.
    pub fn exit_code(&self) -> i32 {
        if self.checks.iter().any(|c| c.verdict == Verdict::Fail) {
            1
        } else if self.checks.iter().any(|c| c.verdict == Verdict::Inconclusive) {
            2
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// JSON with the runtime zeroed, for byte comparisons.
    pub fn to_json_without_runtime(&self) -> String {
        let mut r = self.clone();
        r.runtime_seconds = 0.0;
        r.to_json()
    }

    /// `name,lhs,rhs,slack,verdict` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("name,lhs,rhs,slack,verdict\n");
        for c in &self.checks {
            let v = serde_json::to_value(c.verdict).expect("verdict serializes");
            let _ = writeln!(s, "{},{},{},{},{}", c.name, c.lhs, c.rhs, c.slack, v.as_str().unwrap_or(""));
        }
        s
    }
}

/// Collects checks for one run and assembles the report.
pub(crate) struct ReportBuilder {
    pub eps: f64,
    pub checks: Vec<Check>,
    pub witnesses: Vec<Witness>,
    descriptive: bool,
}

impl ReportBuilder {
    pub fn new(eps: f64) -> Self {
        Self {
            eps,
            checks: Vec::new(),
            witnesses: Vec::new(),
            descriptive: false,
        }
    }

    /// Every later inequality record is informational.
    pub fn descriptive(&mut self) {
        self.descriptive = true;
    }

    pub fn push(&mut self, c: Check) {
        let c = if self.descriptive { c.into_info() } else { c };
        self.checks.push(c);
    }

    pub fn ge(&mut self, name: &str, lhs: f64, rhs: f64) {
        self.push(Check::ge(name, lhs, rhs, self.eps));
    }

    pub fn eq(&mut self, name: &str, lhs: f64, rhs: f64) {
        self.push(Check::eq(name, lhs, rhs, self.eps));
    }

    /// Adds a witness when the latest check is not a clean pass.
    pub fn witness_if_short(&mut self, point: Vec<f64>, note: impl Into<String>) {
        if let Some(c) = self.checks.last() {
            if c.slack < -self.eps || c.verdict == Verdict::Fail || c.verdict == Verdict::Inconclusive {
                self.witnesses.push(Witness {
                    check: c.name.clone(),
                    point,
                    note: note.into(),
                });
            }
        }
    }

    pub fn finish(self, cfg: &ExperimentConfig, budget: SlackBudget, started: Instant) -> Report {
        let min_slack = self.checks.iter().map(|c| c.slack).fold(f64::INFINITY, f64::min);
        let mut echo = cfg.echo();
        echo.insert("epsilon_used".into(), format!("{}", self.eps));
        Report {
            experiment: cfg.experiment.name().into(),
            config_echo: echo,
            checks: self.checks,
            min_slack,
            slack_budget: budget,
            witnesses: self.witnesses,
            runtime_seconds: started.elapsed().as_secs_f64(),
        }
    }
}

/// Runs the configured experiment.
pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::Theorem41 => run_theorem41(cfg),
        Experiment::Corollary42 => run_corollary42(cfg),
        Experiment::Rearrangement65 => run_rearrangement65(cfg),
        Experiment::TorsionUrysohn => run_torsion_urysohn(cfg),
        Experiment::GeometrySuite => run_geometry_suite(cfg),
        Experiment::AssumptionCheck => run_assumption_check(cfg),
    }
}

/// A preset name or a config file path.
pub fn load(spec: &str) -> Result<ExperimentConfig> {
    if let Some(c) = preset(spec) {
        return Ok(c);
    }
    let path = std::path::Path::new(spec);
    if path.exists() {
        return ExperimentConfig::from_file(path);
    }
    Err(Error::Config(format!(
        "{spec:?} is neither a preset ({}) nor a config file",
        PRESETS.join(", ")
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_bands() {
        assert_eq!(Check::ge("a", 1.0, 1.05, 0.1).verdict, Verdict::Pass);
        assert_eq!(Check::ge("a", 1.0, 1.15, 0.1).verdict, Verdict::Inconclusive);
        assert_eq!(Check::ge("a", 1.0, 1.25, 0.1).verdict, Verdict::Fail);
        let e = Check::eq("e", 1.0, 1.05, 0.1);
        assert_eq!((e.slack, e.verdict), (-0.050000000000000044, Verdict::Pass));
    }
}
