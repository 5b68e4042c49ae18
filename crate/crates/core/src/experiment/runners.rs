use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Params, Profile};
use super::{Check, ExperimentError, ExperimentResult};
use crate::fluid::{default_truncation, BipartiteFluid, DiffusionSeries, FluidIntegrator, FluidState};
use crate::graph::{
    gen_clique, gen_complete_bipartite, gen_erdos_renyi, gen_ring, gen_rgg_torus, gen_toric_grid, rgg_radius, Graph,
};
use crate::rng::derive_seed;
use crate::sim::{
    simulate, simulate_coupled, stationary_stats, InitialState, SimConfig, TieRule, Trace,
};
use crate::stats::{linear_fit, Estimate};

/// Average degree named by `rule` at size `n`: a number, `log` (ln N),
/// `sqrt` (√N), `sqrt_log` (⌈√N ln N⌉) or `sqrt_log2` (√N ln² N).
pub fn degree_rule(rule: &str, n: usize) -> Result<f64, ExperimentError> {
    let nf = n as f64;
    let d = match rule {
        "log" => nf.ln(),
        "sqrt" => nf.sqrt(),
        "sqrt_log" => (nf.sqrt() * nf.ln()).ceil(),
        "sqrt_log2" => nf.sqrt() * nf.ln().powi(2),
        _ => rule
            .parse::<f64>()
            .ok()
            .filter(|d| *d >= 0.0)
            .ok_or_else(|| ExperimentError::Config(format!("unknown degree rule '{rule}'")))?,
    };
    Ok(d)
}

/// ERRG with edge probability `min(1, c/N)`.
fn errg(n: usize, c: f64, seed: u64) -> Result<Graph, ExperimentError> {
    Ok(gen_erdos_renyi(n, (c / n as f64).min(1.0), seed)?)
}

fn rgg(n: usize, c: f64, seed: u64) -> Result<Graph, ExperimentError> {
    Ok(gen_rgg_torus(n, rgg_radius(n, c).min(0.5), seed)?)
}

fn check_positive(name: &str, v: f64) -> Result<(), ExperimentError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ExperimentError::Config(format!("{name} must be positive, got {v}")))
    }
}

/// Mean waiting time by Little's law, averaged over independent runs.
fn steady_wait(g: &Graph, lambda: f64, w: &SteadyWindow, seed: u64) -> Result<Estimate, ExperimentError> {
    let runs: Vec<Estimate> = (0..w.replications as u64)
        .into_par_iter()
        .map(|r| {
            let cfg = SimConfig::new(lambda, w.horizon).grid(w.grid).seed(derive_seed(seed, r));
            let tr = simulate(g, &cfg)?;
            Ok(stationary_stats(&tr, w.warmup)?.waiting_time())
        })
        .collect::<Result<_, ExperimentError>>()?;
    Ok(Estimate::average(&runs))
}

/// Horizon, warmup and grid of a stationary run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteadyWindow {
    pub horizon: f64,
    pub warmup: f64,
    pub grid: f64,
    pub replications: usize,
}

impl SteadyWindow {
    fn standard() -> Self {
        Self { horizon: 250.0, warmup: 50.0, grid: 0.5, replications: 1 }
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        check_positive("horizon", self.horizon)?;
        check_positive("grid", self.grid)?;
        if self.replications == 0 {
            return Err(ExperimentError::Config("replications must be at least 1".into()));
        }
        if !(self.warmup >= 0.0 && self.warmup < self.horizon) {
            return Err(ExperimentError::Config("warmup must lie in [0, horizon)".into()));
        }
        Ok(())
    }
}

fn mean_paths(traces: &[Trace], levels: usize) -> Vec<Vec<f64>> {
    let samples = traces[0].n_samples();
    (0..samples)
        .map(|j| {
            (1..=levels)
                .map(|i| traces.iter().map(|t| t.q(j, i)).sum::<f64>() / traces.len() as f64)
                .collect()
        })
        .collect()
}

// ---------------------------------------------------------------- fig_fluid

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidParams {
    pub n: usize,
    /// ERRG average degree rule; `sqrt` gives edge probability `1/√N`.
    pub degree_rule: String,
    pub lambda: f64,
    pub horizon: f64,
    pub grid: f64,
    pub dt: f64,
    /// Simulated paths averaged per topology.
    pub replications: usize,
    pub tolerance: f64,
    /// Allowed excess of the clique gap over the ERRG gap.
    pub clique_margin: f64,
}

impl Params for FluidParams {
    fn defaults(profile: Profile) -> Self {
        let (n, replications, tolerance) = match profile {
            Profile::Full => (10_000, 3, 0.02),
            Profile::Ci => (1_000, 10, 0.05),
        };
        Self {
            n,
            degree_rule: "sqrt".into(),
            lambda: 0.8,
            horizon: 10.0,
            grid: 0.05,
            dt: 1e-3,
            replications,
            tolerance,
            clique_margin: 0.01,
        }
    }
}

pub fn run_fig_fluid(p: &FluidParams, seed: u64) -> Result<ExperimentResult, ExperimentError> {
    check_positive("horizon", p.horizon)?;
    let mut res = ExperimentResult::new("fig_fluid", seed);
    let c = degree_rule(&p.degree_rule, p.n)?;
    let graphs = [("errg", errg(p.n, c, derive_seed(seed, 0))?), ("clique", gen_clique(p.n)?)];
    let fluid = FluidIntegrator::new(p.lambda, p.dt)?.integrate(
        &FluidState::empty(default_truncation(p.lambda)),
        p.horizon,
        p.grid,
    )?;
    let mut paths = Vec::new();
    for (k, (name, g)) in graphs.iter().enumerate() {
        res.note(&format!("{name}_fingerprint"), g.fingerprint());
        res.note(&format!("{name}_mean_degree"), g.mean_degree());
        let traces: Vec<Trace> = (0..p.replications as u64)
            .into_par_iter()
            .map(|r| {
                let cfg = SimConfig::new(p.lambda, p.horizon).grid(p.grid).seed(derive_seed(seed, 100 * (k as u64 + 1) + r));
                simulate(g, &cfg)
            })
            .collect::<Result<_, _>>()?;
        let mean = mean_paths(&traces, 2);
        let fluid = &fluid;
        let gap = mean
            .iter()
            .enumerate()
            .flat_map(|(j, q)| (0..2).map(move |i| (q[i] - fluid.q(j, i + 1)).abs()))
            .fold(0.0, f64::max);
        res.value(&format!("{name}_gap"), gap);
        paths.push((gap, mean));
    }
    let (errg_gap, clique_gap) = (paths[0].0, paths[1].0);
    res.checks.push(Check::at_most("errg_gap", errg_gap, p.tolerance));
    res.checks.push(Check::at_most("clique_gap", clique_gap, p.tolerance));
    res.checks.push(Check::holds(
        "clique_not_worse",
        clique_gap - errg_gap,
        &format!("clique gap - errg gap <= {}", p.clique_margin),
        clique_gap <= errg_gap + p.clique_margin,
    ));
    let mut csv = String::from("t,fluid_q1,fluid_q2,errg_q1,errg_q2,clique_q1,clique_q2\n");
    for j in 0..fluid.times.len() {
        writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            fluid.times[j],
            fluid.q(j, 1),
            fluid.q(j, 2),
            paths[0].1[j][0],
            paths[0].1[j][1],
            paths[1].1[j][0],
            paths[1].1[j][1]
        )
        .unwrap();
    }
    res.tables.push(("fig_fluid".into(), csv));
    Ok(res)
}

// ------------------------------------------------------------ fig_diffusion

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionParams {
    pub n: usize,
    /// ERRG average degree rule; `sqrt_log2` gives edge probability ln²N/√N.
    pub degree_rule: String,
    /// Total arrival rate is `N − β√N`.
    pub beta: f64,
    pub horizon: f64,
    pub grid: f64,
    /// Start with every server holding one task plus this many servers
    /// holding two.
    pub extra_tasks: usize,
    /// Independent paths on the same graph; the table shows the first.
    pub replications: usize,
    /// Time between the non-overlapping increments fed to the
    /// mean-reversion regression.
    pub increment_lag: f64,
    pub band: f64,
    pub q3_max: f64,
    pub slope_t_max: f64,
}

impl Params for DiffusionParams {
    fn defaults(profile: Profile) -> Self {
        let (n, extra) = match profile {
            Profile::Full => (10_000, 300),
            Profile::Ci => (2_500, 150),
        };
        Self {
            n,
            degree_rule: "sqrt_log2".into(),
            beta: 1.0,
            horizon: 20.0,
            grid: 0.01,
            extra_tasks: extra,
            replications: 8,
            increment_lag: 0.5,
            band: 15.0,
            q3_max: 0.5,
            slope_t_max: -2.0,
        }
    }
}

pub fn run_fig_diffusion(p: &DiffusionParams, seed: u64) -> Result<ExperimentResult, ExperimentError> {
    if p.extra_tasks > p.n {
        return Err(ExperimentError::Config("extra_tasks exceeds n".into()));
    }
    if p.replications == 0 {
        return Err(ExperimentError::Config("replications must be at least 1".into()));
    }
    let mut res = ExperimentResult::new("fig_diffusion", seed);
    let nf = p.n as f64;
    let g = errg(p.n, degree_rule(&p.degree_rule, p.n)?, derive_seed(seed, 0))?;
    res.note("graph_fingerprint", g.fingerprint());
    res.note("mean_degree", g.mean_degree());
    let lambda_n = nf - p.beta * nf.sqrt();
    let mut x = vec![1u32; p.n];
    for v in x.iter_mut().take(p.extra_tasks) {
        *v = 2;
    }
    if p.replications == 0 {
        return Err(ExperimentError::Config("replications must be at least 1".into()));
    }
    let lag = (p.increment_lag / p.grid).round().max(1.0) as usize;
    let series: Vec<DiffusionSeries> = (0..p.replications as u64)
        .into_par_iter()
        .map(|r| {
            let cfg = SimConfig::new(lambda_n / nf, p.horizon)
                .grid(p.grid)
                .seed(derive_seed(seed, 1 + r))
                .initial(InitialState::Given(x.clone()));
            let trace = simulate(&g, &cfg)?;
            Ok(DiffusionSeries::from_counts(&trace.times, &trace.counts, p.n, lambda_n)?)
        })
        .collect::<Result<_, ExperimentError>>()?;
    let level = |pt: &crate::fluid::DiffusionScaledPoint, i: usize| pt.qbar.get(i).copied().unwrap_or(0.0);
    let all_points = || series.iter().flat_map(|s| s.points.iter());
    let max_q1 = all_points().map(|pt| level(pt, 0).abs()).fold(0.0, f64::max);
    let max_q2 = all_points().map(|pt| level(pt, 1)).fold(0.0, f64::max);
    let max_q3 = all_points().map(|pt| level(pt, 2)).fold(0.0, f64::max);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for s in &series {
        for j in (0..s.points.len().saturating_sub(lag)).step_by(lag) {
            xs.push(level(&s.points[j], 1));
            ys.push(level(&s.points[j + lag], 1) - level(&s.points[j], 1));
        }
    }
    let fit = linear_fit(&xs, &ys);
    let t_stat = fit.map_or(f64::NAN, |f| f.t_stat());
    let series = &series[0];
    res.value("lambda_n", lambda_n);
    res.value("beta", series.beta);
    res.value("paths", p.replications);
    res.value("max_abs_qbar1", max_q1);
    res.value("max_qbar2", max_q2);
    res.value("max_qbar3", max_q3);
    res.value("increment_slope", fit.map_or(f64::NAN, |f| f.slope));
    res.value("increment_slope_t", t_stat);
    res.checks.push(Check::at_most("qbar1_band", max_q1, p.band));
    res.checks.push(Check::at_most("qbar2_band", max_q2, p.band));
    res.checks.push(Check::at_most("qbar3_vanishes", max_q3, p.q3_max));
    res.checks.push(Check::holds(
        "qbar2_mean_reversion",
        t_stat,
        &format!("slope t-stat <= {}", p.slope_t_max),
        t_stat <= p.slope_t_max,
    ));
    let mut csv = String::from("t,qbar1,qbar2,qbar3\n");
    for pt in &series.points {
        writeln!(csv, "{},{},{},{}", pt.t, level(pt, 0), level(pt, 1), level(pt, 2)).unwrap();
    }
    res.tables.push(("fig_diffusion".into(), csv));
    Ok(res)
}

// --------------------------------------------------------- steady sweeps

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteadySweepParams {
    /// `errg` or `rgg`.
    pub family: String,
    pub lambda: f64,
    pub ns: Vec<usize>,
    pub rules: Vec<String>,
    pub include_clique: bool,
    pub window: SteadyWindow,
    /// Size whose wait the largest size is compared with.
    pub reference_n: usize,
    /// `W_sqrt(N_max) < halving_factor · W_sqrt(reference_n)`.
    pub halving_factor: f64,
    /// `W_2(N_max) ≥ constant_floor`.
    pub constant_floor: f64,
    /// `W_clique(N_max) ≤ clique_ceiling`.
    pub clique_ceiling: f64,
}

impl Params for SteadySweepParams {
    fn defaults(profile: Profile) -> Self {
        let ns = match profile {
            Profile::Full => vec![50, 100, 200, 500, 1000, 2000, 5000, 10_000],
            Profile::Ci => vec![100, 500, 2000],
        };
        Self {
            family: "errg".into(),
            lambda: 0.9,
            ns,
            rules: vec!["2".into(), "3".into(), "log".into(), "sqrt".into()],
            include_clique: true,
            window: SteadyWindow::standard(),
            reference_n: 100,
            halving_factor: 0.5,
            constant_floor: 0.05,
            clique_ceiling: 0.02,
        }
    }
}

/// Steady sweep over random geometric graphs at a lower load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RggSweepParams(pub SteadySweepParams);

impl Params for RggSweepParams {
    fn defaults(profile: Profile) -> Self {
        let mut p = SteadySweepParams::defaults(profile);
        p.family = "rgg".into();
        p.lambda = 0.8;
        Self(p)
    }
}

pub fn run_fig_steady_sweep(name: &str, p: &SteadySweepParams, seed: u64) -> Result<ExperimentResult, ExperimentError> {
    p.window.validate()?;
    if p.ns.is_empty() {
        return Err(ExperimentError::Config("ns must not be empty".into()));
    }
    if !p.ns.contains(&p.reference_n) {
        return Err(ExperimentError::Config(format!("reference_n {} is not in ns", p.reference_n)));
    }
    let family = p.family.as_str();
    if family != "errg" && family != "rgg" {
        return Err(ExperimentError::Config(format!("unknown family '{family}' (errg, rgg)")));
    }
    let mut res = ExperimentResult::new(name, seed);
    let mut columns: Vec<String> = p.rules.clone();
    if p.include_clique {
        columns.push("clique".into());
    }
    // waits[column][size index]
    let mut waits: Vec<Vec<Estimate>> = vec![Vec::new(); columns.len()];
    let mut csv = String::from("N,rule,mean_degree,W,W_se\n");
    for (ni, &n) in p.ns.iter().enumerate() {
        for (ci, rule) in columns.iter().enumerate() {
            let gseed = derive_seed(seed, (ni * 64 + ci) as u64);
            let g = if rule == "clique" {
                gen_clique(n)?
            } else {
                let c = degree_rule(rule, n)?;
                if family == "errg" {
                    errg(n, c, gseed)?
                } else {
                    rgg(n, c, gseed)?
                }
            };
            let w = steady_wait(&g, p.lambda, &p.window, derive_seed(gseed, 1))?;
            writeln!(csv, "{n},{rule},{},{},{}", g.mean_degree(), w.mean, w.se).unwrap();
            res.value(&format!("W_{rule}_N{n}"), w.mean);
            waits[ci].push(w);
        }
    }
    res.tables.push((name.into(), csv));
    let last = p.ns.len() - 1;
    let n_max = p.ns[last];
    let reference = p.ns.iter().position(|&n| n == p.reference_n).unwrap();
    if let Some(ci) = columns.iter().position(|c| c == "sqrt") {
        let w = &waits[ci];
        let decreasing = w.windows(2).all(|x| x[1].mean < x[0].mean);
        let worst = w.windows(2).map(|x| x[1].mean - x[0].mean).fold(f64::NEG_INFINITY, f64::max);
        res.checks.push(Check::holds("sqrt_decreasing", worst, "max successive change < 0", decreasing || w.len() < 2));
        let ratio = w[last].mean / w[reference].mean;
        res.checks.push(Check::holds(
            "sqrt_vanishing",
            ratio,
            &format!("W(N={n_max}) / W(N={}) < {}", p.reference_n, p.halving_factor),
            ratio < p.halving_factor,
        ));
    }
    if let Some(ci) = columns.iter().position(|c| c == "2") {
        res.checks.push(Check::at_least("constant_degree_bounded", waits[ci][last].mean, p.constant_floor));
    }
    if let Some(ci) = columns.iter().position(|c| c == "clique") {
        res.checks.push(Check::at_most("clique_vanishing", waits[ci][last].mean, p.clique_ceiling));
    }
    res.note("family", family);
    res.note("lambda", p.lambda);
    Ok(res)
}

// --------------------------------------------------- fig_topology_compare

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyParams {
    /// Grid sides; each run uses `N = side²` for every topology.
    pub sides: Vec<usize>,
    pub lambda: f64,
    pub window: SteadyWindow,
    /// Required separation in combined standard errors.
    pub separation_se: f64,
}

impl Params for TopologyParams {
    fn defaults(profile: Profile) -> Self {
        let sides = match profile {
            Profile::Full => vec![10, 20, 30, 50, 70],
            Profile::Ci => vec![30],
        };
        Self { sides, lambda: 0.9, window: SteadyWindow::standard(), separation_se: 3.0 }
    }
}

/// Checks `a.mean − b.mean ≥ k` combined standard errors.
fn separated(name: &str, above: Estimate, below: Estimate, k: f64) -> Check {
    let z = (above.mean - below.mean) / above.combined_se(&below);
    Check::at_least(name, z, k)
}

pub fn run_fig_topology_compare(p: &TopologyParams, seed: u64) -> Result<ExperimentResult, ExperimentError> {
    p.window.validate()?;
    let mut res = ExperimentResult::new("fig_topology_compare", seed);
    let mut csv = String::from("N,family,topology,mean_degree,W,W_se\n");
    for (si, &side) in p.sides.iter().enumerate() {
        let n = side * side;
        let gs = |k: u64| derive_seed(seed, (si * 16) as u64 + k);
        let families = [
            ("deg2", [("ring", gen_ring(n)?), ("errg", errg(n, 2.0, gs(0))?), ("rgg", rgg(n, 2.0, gs(1))?)]),
            ("deg4", [("grid", gen_toric_grid(side, side)?), ("errg", errg(n, 4.0, gs(2))?), ("rgg", rgg(n, 4.0, gs(3))?)]),
        ];
        let mut k = 10;
        for (family, members) in &families {
            let mut w = Vec::new();
            for (name, g) in members {
                k += 1;
                let e = steady_wait(g, p.lambda, &p.window, gs(k))?;
                writeln!(csv, "{n},{family},{name},{},{},{}", g.mean_degree(), e.mean, e.se).unwrap();
                res.value(&format!("W_{family}_{name}_N{n}"), e.mean);
                w.push(e);
            }
            let lattice = members[0].0;
            if *family == "deg2" {
                res.checks.push(separated(&format!("ring_below_errg_N{n}"), w[1], w[0], p.separation_se));
                res.checks.push(separated(&format!("ring_below_rgg_N{n}"), w[2], w[0], p.separation_se));
            }
            res.checks.push(separated(&format!("rgg_above_errg_{family}_N{n}"), w[2], w[1], p.separation_se));
            res.checks.push(separated(&format!("rgg_above_{lattice}_N{n}"), w[2], w[0], p.separation_se));
            let min_z = w.iter().map(|e| e.mean / e.se).fold(f64::INFINITY, f64::min);
            res.checks.push(Check::at_least(&format!("positive_wait_{family}_N{n}"), min_z, p.separation_se));
        }
    }
    res.tables.push(("fig_topology_compare".into(), csv));
    Ok(res)
}

// -------------------------------------------------------- fig_load_effect

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadEffectParams {
    pub lambdas: Vec<f64>,
    pub ns: Vec<usize>,
    pub degree_rule: String,
    pub window: SteadyWindow,
    pub separation_se: f64,
    /// Lowest load converges fast: `W(N_max) ≤ fast_factor · W(N_min)` or
    /// `W(N_max) ≤ fast_absolute`.
    pub fast_factor: f64,
    pub fast_absolute: f64,
}

impl Params for LoadEffectParams {
    fn defaults(profile: Profile) -> Self {
        let ns = match profile {
            Profile::Full => vec![100, 200, 500, 1000, 2000, 5000, 10_000],
            Profile::Ci => vec![100, 500, 2000],
        };
        Self {
            lambdas: vec![0.65, 0.75, 0.9],
            ns,
            degree_rule: "log".into(),
            window: SteadyWindow::standard(),
            separation_se: 3.0,
            fast_factor: 0.5,
            fast_absolute: 0.02,
        }
    }
}

pub fn run_fig_load_effect(p: &LoadEffectParams, seed: u64) -> Result<ExperimentResult, ExperimentError> {
    p.window.validate()?;
    if p.ns.len() < 2 || p.lambdas.len() < 2 {
        return Err(ExperimentError::Config("need at least two sizes and two loads".into()));
    }
    if p.lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ExperimentError::Config("lambdas must be increasing".into()));
    }
    let mut res = ExperimentResult::new("fig_load_effect", seed);
    let mut csv = String::from("N,lambda,mean_degree,W,W_se\n");
    // waits[load][size]
    let mut waits = vec![Vec::new(); p.lambdas.len()];
    for (ni, &n) in p.ns.iter().enumerate() {
        let gseed = derive_seed(seed, ni as u64);
        let g = errg(n, degree_rule(&p.degree_rule, n)?, gseed)?;
        let mut row = Vec::new();
        for (li, &lambda) in p.lambdas.iter().enumerate() {
            let w = steady_wait(&g, lambda, &p.window, derive_seed(gseed, 1 + li as u64))?;
            writeln!(csv, "{n},{lambda},{},{},{}", g.mean_degree(), w.mean, w.se).unwrap();
            res.value(&format!("W_l{lambda}_N{n}"), w.mean);
            waits[li].push(w);
            row.push(w);
        }
        let min_z = row
            .windows(2)
            .map(|w| (w[1].mean - w[0].mean) / w[1].combined_se(&w[0]))
            .fold(f64::INFINITY, f64::min);
        res.checks.push(Check::at_least(&format!("monotone_in_load_N{n}"), min_z, p.separation_se));
    }
    res.tables.push(("fig_load_effect".into(), csv));
    let ratio = |li: usize| waits[li][p.ns.len() - 1].mean / waits[li][0].mean;
    let low = ratio(0);
    let w_low = waits[0][p.ns.len() - 1].mean;
    res.checks.push(Check::holds(
        "fast_convergence_low_load",
        low,
        &format!("W ratio <= {} or W <= {}", p.fast_factor, p.fast_absolute),
        low <= p.fast_factor || w_low <= p.fast_absolute,
    ));
    let high = ratio(p.lambdas.len() - 1);
    res.value("ratio_low_load", low);
    res.value("ratio_high_load", high);
    res.checks.push(Check::holds("slower_at_high_load", high - low, "high-load ratio - low-load ratio > 0", high > low));
    Ok(res)
}

// ------------------------------------------------------- counterexamples

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleParams {
    pub ring_n: usize,
    pub ring_lambda: f64,
    pub window: SteadyWindow,
    pub ring_floor: f64,
    pub bipartite_n: usize,
    pub c: f64,
    pub bipartite_lambda: f64,
    pub bipartite_horizon: f64,
    pub bipartite_grid: f64,
    pub q2_level: f64,
    pub fluid_tolerance: f64,
    pub hit_time_tolerance: f64,
    pub low_lambda: f64,
    pub low_q2_ceiling: f64,
}

impl Params for CounterexampleParams {
    fn defaults(_profile: Profile) -> Self {
        Self {
            ring_n: 2000,
            ring_lambda: 0.9,
            window: SteadyWindow::standard(),
            ring_floor: 0.05,
            bipartite_n: 2000,
            c: 0.3,
            bipartite_lambda: 0.9,
            bipartite_horizon: 20.0,
            bipartite_grid: 0.01,
            q2_level: 0.05,
            fluid_tolerance: 0.03,
            hit_time_tolerance: 0.1,
            low_lambda: 0.6,
            low_q2_ceiling: 0.01,
        }
    }
}

/// Transient bipartite run compared with its fluid ODE.
pub struct BipartiteTransient {
    pub trace: Trace,
    pub part_a: usize,
    /// Interpolated time at which the ODE's `q_{1,A}` reaches `c`.
    pub fluid_hit: Option<f64>,
    /// First sample at which every server of part A is busy.
    pub sim_hit: Option<f64>,
    /// Sup of `|q_{1,A}^sim − q_{1,A}^fluid|` over samples up to the fluid hit.
    pub fluid_gap: f64,
    /// First sample time with `q_2 > level`.
    pub q2_crossing: Option<f64>,
    pub csv: String,
}

pub fn bipartite_transient(
    n: usize,
    c: f64,
    lambda: f64,
    horizon: f64,
    grid: f64,
    q2_level: f64,
    seed: u64,
) -> Result<BipartiteTransient, ExperimentError> {
    let g = gen_complete_bipartite(n, c)?;
    let part_a = crate::stats::ceil_count(c * n as f64);
    let cfg = SimConfig::new(lambda, horizon).grid(grid).seed(seed).watch((0..part_a as u32).collect());
    let trace = simulate(&g, &cfg)?;
    let ode = BipartiteFluid::new(lambda, c)?;
    let run = ode.integrate(horizon, 1e-4)?;
    let fluid_at = |t: f64| -> Option<(f64, f64)> {
        let end = run.hit_time.unwrap_or(f64::INFINITY);
        if t > end {
            return None;
        }
        let j = run.times.partition_point(|&s| s <= t).clamp(1, run.times.len() - 1);
        let (t0, t1) = (run.times[j - 1], run.times[j]);
        let w = if t1 > t0 { ((t - t0) / (t1 - t0)).clamp(0.0, 1.0) } else { 0.0 };
        Some((run.q1a[j - 1] + w * (run.q1a[j] - run.q1a[j - 1]), run.q1b[j - 1] + w * (run.q1b[j] - run.q1b[j - 1])))
    };
    let watched = trace.watched.as_ref().expect("watched set requested");
    let nf = n as f64;
    let mut csv = String::from("t,q1A,q1B,q2,q2A,fluid_q1A,fluid_q1B\n");
    let (mut gap, mut sim_hit, mut q2_crossing) = (0.0f64, None, None);
    for j in 0..trace.n_samples() {
        let t = trace.times[j];
        let q1a_count = watched.counts[j].first().copied().unwrap_or(0);
        let q2a_count = watched.counts[j].get(1).copied().unwrap_or(0);
        let q1a = q1a_count as f64 / nf;
        let q1b = (trace.q_count(j, 1) - q1a_count) as f64 / nf;
        let q2 = trace.q(j, 2);
        if sim_hit.is_none() && q1a_count as usize == part_a {
            sim_hit = Some(t);
        }
        if q2_crossing.is_none() && q2 > q2_level {
            q2_crossing = Some(t);
        }
        write!(csv, "{t},{q1a},{q1b},{q2},{}", q2a_count as f64 / nf).unwrap();
        match fluid_at(t) {
            Some((fa, fb)) => {
                gap = gap.max((q1a - fa).abs());
                writeln!(csv, ",{fa},{fb}").unwrap();
            }
            None => csv.push_str(",,\n"),
        }
    }
    Ok(BipartiteTransient { trace, part_a, fluid_hit: run.hit_time, sim_hit, fluid_gap: gap, q2_crossing, csv })
}

pub fn run_counterexamples(p: &CounterexampleParams, seed: u64) -> Result<ExperimentResult, ExperimentError> {
    p.window.validate()?;
    let mut res = ExperimentResult::new("counterexamples", seed);
    let mut csv = String::from("case,N,lambda,q1,q1_se,q2,q2_se,tail2,tail2_se\n");
    let mut stationary = |case: &str, g: &Graph, lambda: f64, s: u64| -> Result<(Estimate, Estimate), ExperimentError> {
        let cfg = SimConfig::new(lambda, p.window.horizon).grid(p.window.grid).seed(s);
        let st = stationary_stats(&simulate(g, &cfg)?, p.window.warmup)?;
        let (q1, q2, tail) = (st.q(1), st.q(2), st.tail_sum(2));
        writeln!(
            csv,
            "{case},{},{lambda},{},{},{},{},{},{}",
            g.n_vertices(),
            q1.mean,
            q1.se,
            q2.mean,
            q2.se,
            tail.mean,
            tail.se
        )
        .unwrap();
        Ok((q2, tail))
    };
    let ring = gen_ring(p.ring_n)?;
    let (_, ring_tail) = stationary("ring", &ring, p.ring_lambda, derive_seed(seed, 0))?;
    let low_graph = gen_complete_bipartite(p.bipartite_n, p.c)?;
    let (low_q2, _) = stationary("bipartite_low_load", &low_graph, p.low_lambda, derive_seed(seed, 1))?;
    res.tables.push(("counterexamples_stationary".into(), csv));

    let bt = bipartite_transient(
        p.bipartite_n,
        p.c,
        p.bipartite_lambda,
        p.bipartite_horizon,
        p.bipartite_grid,
        p.q2_level,
        derive_seed(seed, 2),
    )?;
    let threshold = crate::fluid::suboptimality_threshold(p.c)?;
    res.value("lambda_c", threshold);
    res.value("ring_tail2", ring_tail.mean);
    res.value("bipartite_fluid_hit", bt.fluid_hit.map_or("none".into(), |t| t.to_string()));
    res.value("bipartite_sim_hit", bt.sim_hit.map_or("none".into(), |t| t.to_string()));
    res.value("bipartite_q2_crossing", bt.q2_crossing.map_or("none".into(), |t| t.to_string()));
    res.value("bipartite_low_load_q2", low_q2.mean);
    res.checks.push(Check::at_least("ring_tail2", ring_tail.mean, p.ring_floor));
    let crossing = bt.q2_crossing.unwrap_or(f64::INFINITY);
    res.checks.push(Check::at_most("bipartite_q2_crossing_time", crossing, p.bipartite_horizon));
    res.checks.push(Check::at_most("bipartite_fluid_gap", bt.fluid_gap, p.fluid_tolerance));
    let hit_error = match (bt.sim_hit, bt.fluid_hit) {
        (Some(a), Some(b)) => (a - b).abs(),
        _ => f64::INFINITY,
    };
    res.checks.push(Check::at_most("bipartite_hit_time_error", hit_error, p.hit_time_tolerance));
    res.checks.push(Check::at_most("bipartite_low_load_q2", low_q2.mean, p.low_q2_ceiling));
    res.tables.push(("counterexamples_bipartite".into(), bt.csv));
    Ok(res)
}

// --------------------------------------------------------- coupling_audit

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingAuditParams {
    pub ns: Vec<usize>,
    pub rules: Vec<String>,
    pub lambda: f64,
    pub horizon: f64,
    pub grid: f64,
    pub replications: usize,
    /// `earliest` or `id`.
    pub tie_rule: String,
    /// Rule whose `Δ(T)/N` must decrease strictly along `ns`.
    pub decreasing_rule: String,
    /// Rule whose `Δ(T)/N` must stay at or above `persistent_floor`.
    pub persistent_rule: String,
    pub persistent_floor: f64,
}

impl Params for CouplingAuditParams {
    fn defaults(_profile: Profile) -> Self {
        Self {
            ns: vec![200, 800, 3200],
            rules: vec!["2".into(), "log".into(), "sqrt_log".into()],
            lambda: 0.8,
            horizon: 10.0,
            grid: 0.5,
            replications: 5,
            tie_rule: "earliest".into(),
            decreasing_rule: "sqrt_log".into(),
            persistent_rule: "2".into(),
            persistent_floor: 0.02,
        }
    }
}

/// One coupled run of the audit grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingRun {
    pub n_servers: usize,
    pub degree: f64,
    pub n: usize,
    pub delta_over_n: f64,
    pub max_bound_gap: i64,
    pub violations: u64,
}

/// Coupled runs on ERRG(d(N)) with `n(N) = ⌈N/√d(N)⌉`, one graph per
/// replication.
pub fn coupling_runs(
    big_n: usize,
    rule: &str,
    lambda: f64,
    horizon: f64,
    grid: f64,
    replications: usize,
    tie_rule: TieRule,
    seed: u64,
) -> Result<Vec<CouplingRun>, ExperimentError> {
    let d = degree_rule(rule, big_n)?;
    let n = ((big_n as f64 / d.max(1.0).sqrt()).ceil() as usize).min(big_n - 1);
    (0..replications as u64)
        .into_par_iter()
        .map(|r| {
            let g = errg(big_n, d, derive_seed(seed, 2 * r))?;
            let cfg = SimConfig::new(lambda, horizon).grid(grid).seed(derive_seed(seed, 2 * r + 1));
            let ct = simulate_coupled(&g, &cfg, n, tie_rule)?;
            Ok(CouplingRun {
                n_servers: big_n,
                degree: d,
                n,
                delta_over_n: ct.final_delta() as f64 / big_n as f64,
                max_bound_gap: ct.max_bound_gap,
                violations: ct.violations,
            })
        })
        .collect()
}

pub fn run_coupling_audit(p: &CouplingAuditParams, seed: u64) -> Result<ExperimentResult, ExperimentError> {
    if p.replications == 0 || p.ns.is_empty() {
        return Err(ExperimentError::Config("need sizes and at least one replication".into()));
    }
    let tie_rule: TieRule = p.tie_rule.parse().map_err(ExperimentError::Config)?;
    let mut res = ExperimentResult::new("coupling_audit", seed);
    let mut csv = String::from("rule,N,d,n,replication,delta_over_N,max_bound_gap,violations\n");
    let mut worst_gap = i64::MIN;
    let mut means: Vec<(String, Vec<f64>)> = Vec::new();
    for (ri, rule) in p.rules.iter().enumerate() {
        let mut per_n = Vec::new();
        for (ni, &big_n) in p.ns.iter().enumerate() {
            let s = derive_seed(seed, (ri * 64 + ni) as u64);
            let runs = coupling_runs(big_n, rule, p.lambda, p.horizon, p.grid, p.replications, tie_rule, s)?;
            for (r, run) in runs.iter().enumerate() {
                writeln!(
                    csv,
                    "{rule},{big_n},{},{},{r},{},{},{}",
                    run.degree, run.n, run.delta_over_n, run.max_bound_gap, run.violations
                )
                .unwrap();
                worst_gap = worst_gap.max(run.max_bound_gap);
            }
            let mean = runs.iter().map(|r| r.delta_over_n).sum::<f64>() / runs.len() as f64;
            res.value(&format!("delta_over_N_{rule}_N{big_n}"), mean);
            per_n.push(mean);
        }
        means.push((rule.clone(), per_n));
    }
    res.tables.push(("coupling_audit".into(), csv));
    res.checks.push(Check::at_most("bound_residual", worst_gap as f64, 0.0));
    if let Some((_, m)) = means.iter().find(|(r, _)| *r == p.decreasing_rule) {
        let worst = m.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        let ok = m.windows(2).all(|w| w[1] < w[0]);
        res.checks.push(Check::holds(
            &format!("delta_decreasing_{}", p.decreasing_rule),
            worst,
            "max successive change < 0",
            ok,
        ));
    }
    if let Some((_, m)) = means.iter().find(|(r, _)| *r == p.persistent_rule) {
        let lowest = m.iter().copied().fold(f64::INFINITY, f64::min);
        res.checks.push(Check::at_least(&format!("delta_persistent_{}", p.persistent_rule), lowest, p.persistent_floor));
    }
    res.note("tie_rule", &p.tie_rule);
    Ok(res)
}
