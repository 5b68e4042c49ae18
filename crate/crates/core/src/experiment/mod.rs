//! Configuration-driven reproduction runs.
//!
//! Each experiment produces CSV tables, summary values and named checks.
//! [`run_all`] writes them to an output directory as `<table>.csv`,
//! `summary.txt` (`experiment.key = value` lines), `checks.csv` and a
//! human-readable `report.txt`. Every output byte is a function of the
//! configuration, the base seed and the crate version.

mod config;
mod runners;

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

pub use config::{Params, Profile, SuiteConfig};
pub use runners::{
    bipartite_transient, coupling_runs, degree_rule, BipartiteTransient, CouplingRun, RggSweepParams, SteadyWindow,
    CounterexampleParams, CouplingAuditParams, DiffusionParams, FluidParams, LoadEffectParams, SteadySweepParams,
    TopologyParams,
};

use crate::fluid::FluidError;
use crate::graph::GraphError;
use crate::rng::derive_seed;
use crate::sim::SimError;

/// Experiment names accepted in a suite, in report order.
pub const EXPERIMENTS: [&str; 8] = [
    "fig_fluid",
    "fig_diffusion",
    "fig_steady_sweep",
    "fig_topology_compare",
    "fig_load_effect",
    "fig_rgg_sweep",
    "counterexamples",
    "coupling_audit",
];

/// Offset of the seed index used for a retry.
const RETRY_SEED_INDEX: u64 = 1 << 32;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("unknown experiment '{0}'")]
    UnknownExperiment(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Fluid(#[from] FluidError),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    /// Human-readable acceptance rule, e.g. `<= 0.02`.
    pub tolerance: String,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, measured: f64, limit: f64) -> Self {
        Self { name: name.into(), measured, tolerance: format!("<= {limit}"), pass: measured <= limit }
    }

    pub fn at_least(name: &str, measured: f64, limit: f64) -> Self {
        Self { name: name.into(), measured, tolerance: format!(">= {limit}"), pass: measured >= limit }
    }

    /// A boolean property; `measured` is the quantity the rule was applied to.
    pub fn holds(name: &str, measured: f64, rule: &str, pass: bool) -> Self {
        Self { name: name.into(), measured, tolerance: rule.into(), pass }
    }
}

/// Everything one experiment reports.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentResult {
    pub name: String,
    pub seed: u64,
    /// 1, or 2 when the first attempt failed a check and was rerun.
    pub attempts: u32,
    /// Ordered `(key, value)` summary entries.
    pub summary: Vec<(String, String)>,
    pub checks: Vec<Check>,
    /// `(file stem, CSV text)` tables.
    pub tables: Vec<(String, String)>,
    /// Seeds, graph fingerprints and parameters.
    pub provenance: Vec<(String, String)>,
}

impl ExperimentResult {
    pub(crate) fn new(name: &str, seed: u64) -> Self {
        Self { name: name.into(), seed, attempts: 1, ..Self::default() }
    }

    pub(crate) fn value(&mut self, key: &str, v: impl std::fmt::Display) {
        self.summary.push((key.into(), v.to_string()));
    }

    pub(crate) fn note(&mut self, key: &str, v: impl std::fmt::Display) {
        self.provenance.push((key.into(), v.to_string()));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn summary_value(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Runs experiment `name` once with the given seed.
pub fn run_experiment(cfg: &SuiteConfig, name: &str, seed: u64) -> Result<ExperimentResult, ExperimentError> {
    match name {
        "fig_fluid" => runners::run_fig_fluid(&cfg.params(name)?, seed),
        "fig_diffusion" => runners::run_fig_diffusion(&cfg.params(name)?, seed),
        "fig_steady_sweep" => runners::run_fig_steady_sweep(name, &cfg.params(name)?, seed),
        "fig_topology_compare" => runners::run_fig_topology_compare(&cfg.params(name)?, seed),
        "fig_load_effect" => runners::run_fig_load_effect(&cfg.params(name)?, seed),
        "fig_rgg_sweep" => runners::run_fig_steady_sweep(name, &cfg.params::<runners::RggSweepParams>(name)?.0, seed),
        "counterexamples" => runners::run_counterexamples(&cfg.params(name)?, seed),
        "coupling_audit" => runners::run_coupling_audit(&cfg.params(name)?, seed),
        _ => Err(ExperimentError::UnknownExperiment(name.into())),
    }
}

/// Seed of experiment `index` in a suite with base seed `base`.
pub fn experiment_seed(base: u64, name: &str) -> u64 {
    let index = EXPERIMENTS.iter().position(|&e| e == name).unwrap_or(EXPERIMENTS.len()) as u64;
    derive_seed(base, index)
}

/// Runs an experiment, repeating it once with a fresh seed if a check fails.
pub fn run_with_retry(cfg: &SuiteConfig, name: &str) -> Result<ExperimentResult, ExperimentError> {
    let seed = experiment_seed(cfg.seed, name);
    let first = run_experiment(cfg, name, seed)?;
    if first.passed() {
        return Ok(first);
    }
    let mut second = run_experiment(cfg, name, derive_seed(seed, RETRY_SEED_INDEX))?;
    second.attempts = 2;
    let failed: Vec<&str> = first.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    second.note("first_attempt_seed", seed);
    second.note("first_attempt_failed", failed.join(" "));
    Ok(second)
}

/// Suite outcome.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub results: Vec<ExperimentResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(ExperimentResult::passed)
    }

    pub fn n_checks(&self) -> usize {
        self.results.iter().map(|r| r.checks.len()).sum()
    }

    pub fn n_failed(&self) -> usize {
        self.results.iter().flat_map(|r| &r.checks).filter(|c| !c.pass).count()
    }

    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            writeln!(out, "{}.seed = {}", r.name, r.seed).unwrap();
            writeln!(out, "{}.attempts = {}", r.name, r.attempts).unwrap();
            for (k, v) in &r.summary {
                writeln!(out, "{}.{k} = {v}", r.name).unwrap();
            }
            let passed = r.checks.iter().filter(|c| c.pass).count();
            writeln!(out, "{}.checks_passed = {passed}/{}", r.name, r.checks.len()).unwrap();
        }
        out
    }

    pub fn checks_csv(&self) -> String {
        let mut out = String::from("experiment,check,measured,tolerance,pass\n");
        for r in &self.results {
            for c in &r.checks {
                writeln!(out, "{},{},{},{},{}", r.name, c.name, c.measured, c.tolerance, c.pass).unwrap();
            }
        }
        out
    }

    pub fn report_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "graphlb experiment report (version {})", env!("CARGO_PKG_VERSION")).unwrap();
        writeln!(out, "checks: {} passed, {} failed", self.n_checks() - self.n_failed(), self.n_failed()).unwrap();
        for r in &self.results {
            writeln!(out).unwrap();
            let status = if r.passed() { "PASS" } else { "FAIL" };
            writeln!(out, "== {} [{status}] seed {} attempts {}", r.name, r.seed, r.attempts).unwrap();
            for c in &r.checks {
                let mark = if c.pass { "pass" } else { "FAIL" };
                writeln!(out, "  [{mark}] {}: measured {} (want {})", c.name, c.measured, c.tolerance).unwrap();
            }
            if !r.summary.is_empty() {
                writeln!(out, "  summary:").unwrap();
                for (k, v) in &r.summary {
                    writeln!(out, "    {k} = {v}").unwrap();
                }
            }
            if !r.provenance.is_empty() {
                writeln!(out, "  provenance:").unwrap();
                for (k, v) in &r.provenance {
                    writeln!(out, "    {k} = {v}").unwrap();
                }
            }
            for (stem, _) in &r.tables {
                writeln!(out, "  table: {stem}.csv").unwrap();
            }
        }
        out
    }

    /// Writes all tables plus `summary.txt`, `checks.csv` and `report.txt`.
    pub fn write_to(&self, dir: &Path) -> Result<(), ExperimentError> {
        let io = |path: &Path, source| ExperimentError::Io { path: path.display().to_string(), source };
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let mut files: Vec<(String, String)> = Vec::new();
        for r in &self.results {
            for (stem, csv) in &r.tables {
                files.push((format!("{stem}.csv"), csv.clone()));
            }
        }
        files.push(("summary.txt".into(), self.summary_text()));
        files.push(("checks.csv".into(), self.checks_csv()));
        files.push(("report.txt".into(), self.report_text()));
        for (name, text) in files {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| io(&path, e))?;
        }
        Ok(())
    }
}

/// Runs every experiment of the suite in order and writes the outputs.
/// Configuration errors for any listed experiment surface before the
/// first run starts.
pub fn run_all(cfg: &SuiteConfig, out_dir: &Path) -> Result<SuiteReport, ExperimentError> {
    validate(cfg)?;
    let mut results = Vec::with_capacity(cfg.experiments.len());
    for name in &cfg.experiments {
        results.push(run_with_retry(cfg, name)?);
    }
    let report = SuiteReport { results };
    report.write_to(out_dir)?;
    Ok(report)
}

/// Resolves the parameters of every listed experiment.
pub fn validate(cfg: &SuiteConfig) -> Result<(), ExperimentError> {
    for name in &cfg.experiments {
        match name.as_str() {
            "fig_fluid" => {
                cfg.params::<FluidParams>(name)?;
            }
            "fig_diffusion" => {
                cfg.params::<DiffusionParams>(name)?;
            }
            "fig_steady_sweep" => {
                cfg.params::<SteadySweepParams>(name)?;
            }
            "fig_topology_compare" => {
                cfg.params::<TopologyParams>(name)?;
            }
            "fig_load_effect" => {
                cfg.params::<LoadEffectParams>(name)?;
            }
            "fig_rgg_sweep" => {
                cfg.params::<runners::RggSweepParams>(name)?;
            }
            "counterexamples" => {
                cfg.params::<CounterexampleParams>(name)?;
            }
            "coupling_audit" => {
                cfg.params::<CouplingAuditParams>(name)?;
            }
            _ => return Err(ExperimentError::UnknownExperiment(name.clone())),
        }
    }
    Ok(())
}
