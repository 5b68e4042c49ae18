use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use graphlb_core::experiment::{run_all, Profile, SuiteConfig};
use graphlb_core::fluid::{default_truncation, BipartiteFluid, DiffusionSeries, FluidIntegrator, FluidState};
use graphlb_core::graph::{load_edge_list, rgg_radius, save_edge_list, Graph, GraphSpec};
use graphlb_core::metrics::{dis_exact_with_budget, dis_heuristic, optimality_audit, Scale, DEFAULT_ENUMERATION_BUDGET};
use graphlb_core::sim::{
    default_warmup, simulate, simulate_coupled, stationary_stats, Buffer, Policy, SimConfig, TieRule,
};

#[derive(Parser)]
#[command(name = "graphlb", version, about = "Join-the-shortest-queue load balancing on graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph and write it as an edge list.
    Gen(GenArgs),
    /// Compute the well-connectedness measure of a graph.
    Dis(DisArgs),
    /// Report degree and connectivity diagnostics for several epsilons.
    Audit(AuditArgs),
    /// Simulate the occupancy process and write the sampled trace.
    Simulate(SimulateArgs),
    /// Run the graph system coupled with the hybrid CJSQ system.
    Couple(CoupleArgs),
    /// Integrate the fluid-limit ODE.
    Fluid(FluidArgs),
    /// Apply the Halfin–Whitt centering and scaling to a trace.
    Scale(ScaleArgs),
    /// Run an experiment suite.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Family {
    Clique,
    Ring,
    #[value(alias = "grid")]
    ToricGrid,
    #[value(alias = "errg")]
    ErdosRenyi,
    #[value(alias = "regular")]
    ErasedRegular,
    #[value(alias = "rgg")]
    RggTorus,
    #[value(alias = "bipartite")]
    CompleteBipartite,
    Isolated,
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Number of vertices (for a toric grid, used when width/height are absent: N must be a square).
    #[arg(long)]
    n: Option<usize>,
    /// Edge probability (erdos_renyi).
    #[arg(long)]
    p: Option<f64>,
    /// Degree (erased_regular).
    #[arg(long)]
    d: Option<usize>,
    /// Target average degree (rgg_torus) or part fraction (complete_bipartite).
    #[arg(long)]
    c: Option<f64>,
    /// Connection radius (rgg_torus).
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DisMode {
    Exact,
    Heuristic,
}

#[derive(clap::Args)]
struct DisArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    epsilon: f64,
    /// fluid (dis1) or diffusion (dis2).
    #[arg(long, default_value = "fluid")]
    scale: Scale,
    #[arg(long, value_enum, default_value_t = DisMode::Exact)]
    mode: DisMode,
    /// Random subsets tried by the heuristic.
    #[arg(long, default_value_t = 1000)]
    effort: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest number of subsets exact enumeration may visit.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
    budget: u64,
    /// Also write a key: value report to this file.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(clap::Args)]
struct AuditArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.2, 0.5])]
    epsilons: Vec<f64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Arrival rate per server.
    #[arg(long)]
    lambda: f64,
    /// Buffer per server: a positive integer or `inf`.
    #[arg(long = "b", default_value = "inf")]
    buffer: Buffer,
    /// Horizon.
    #[arg(long = "T")]
    horizon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sampling step (default: horizon / 100).
    #[arg(long)]
    grid: Option<f64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> SimConfig {
        let grid = self.grid.unwrap_or(self.horizon / 100.0);
        SimConfig::new(self.lambda, self.horizon).buffer(self.buffer).seed(self.seed).grid(grid)
    }
}

#[derive(clap::Args)]
struct SimulateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// graph_jsq, isolated or cjsq_<n>.
    #[arg(long, default_value = "graph_jsq")]
    policy: Policy,
    /// Warmup for the stationary summary (default: a fifth of the horizon).
    #[arg(long)]
    warmup: Option<f64>,
    /// Record FCFS waiting times and report their mean.
    #[arg(long)]
    waits: bool,
}

#[derive(clap::Args)]
struct CoupleArgs {
    #[command(flatten)]
    run: RunArgs,
    /// The hybrid system draws among the n + 1 shortest queues.
    #[arg(long)]
    n: usize,
    /// earliest or id.
    #[arg(long, default_value = "earliest")]
    tie_rule: TieRule,
}

#[derive(clap::Args)]
struct FluidArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long = "T")]
    horizon: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Sampling step of the output (default: horizon / 100).
    #[arg(long)]
    grid: Option<f64>,
    /// Number of levels kept (default 2⌈1/(1−λ)⌉ + 10, or b when finite).
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long = "b", default_value = "inf")]
    buffer: Buffer,
    /// Integrate the complete bipartite ODE with this part fraction instead.
    #[arg(long)]
    bipartite: Option<f64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ScaleArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long = "N")]
    n: usize,
    /// Total arrival rate λ(N).
    #[arg(long = "lambdaN")]
    lambda_n: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the profile named in the config.
    #[arg(long)]
    profile: Option<Profile>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_graph(path: &Path) -> Result<Graph> {
    load_edge_list(&read(path)?).with_context(|| format!("loading {}", path.display()))
}

/// Writes `text` to `path`, or to stdout without a path.
fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Status lines go to stderr when the payload goes to stdout.
fn status(to_stdout: bool, line: &str) {
    if to_stdout {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn need<T>(value: Option<T>, flag: &str, family: &str) -> Result<T> {
    value.with_context(|| format!("--{flag} is required for {family}"))
}

fn gen(a: &GenArgs) -> Result<()> {
    let n = || need(a.n, "n", "this family");
    let spec = match a.family {
        Family::Clique => GraphSpec::Clique { n: n()? },
        Family::Ring => GraphSpec::Ring { n: n()? },
        Family::Isolated => GraphSpec::Isolated { n: n()? },
        Family::ToricGrid => match (a.width, a.height, a.n) {
            (Some(width), Some(height), _) => GraphSpec::ToricGrid { width, height },
            (None, None, Some(n)) => {
                let side = (n as f64).sqrt().round() as usize;
                if side * side != n {
                    bail!("toric grid needs --width and --height, or a square --n");
                }
                GraphSpec::ToricGrid { width: side, height: side }
            }
            _ => bail!("toric grid needs --width and --height, or a square --n"),
        },
        Family::ErdosRenyi => GraphSpec::ErdosRenyi { n: n()?, p: need(a.p, "p", "erdos_renyi")? },
        Family::ErasedRegular => GraphSpec::ErasedRegular { n: n()?, d: need(a.d, "d", "erased_regular")? },
        Family::RggTorus => {
            let n = n()?;
            let radius = match (a.radius, a.c) {
                (Some(r), _) => r,
                (None, Some(c)) => rgg_radius(n, c),
                (None, None) => bail!("rgg_torus needs --radius or --c"),
            };
            GraphSpec::RggTorus { n, radius }
        }
        Family::CompleteBipartite => {
            GraphSpec::CompleteBipartite { n: n()?, fraction: need(a.c, "c", "complete_bipartite")? }
        }
    };
    let g = spec.generate(a.seed)?;
    emit(a.output.as_deref(), &save_edge_list(&g))?;
    status(
        a.output.is_some(),
        &format!(
            "{}: N={} M={} mean degree {} min degree {} fingerprint {}",
            g.label(),
            g.n_vertices(),
            g.edge_count(),
            g.mean_degree(),
            g.min_degree(),
            g.fingerprint()
        ),
    );
    Ok(())
}

fn dis(a: &DisArgs) -> Result<()> {
    let g = load_graph(&a.graph)?;
    let report = match a.mode {
        DisMode::Exact => dis_exact_with_budget(&g, a.epsilon, a.scale, a.budget)?,
        DisMode::Heuristic => dis_heuristic(&g, a.epsilon, a.scale, a.effort, a.seed)?,
    };
    println!("{}", report.summary_line());
    if let Some(path) = &a.report {
        emit(Some(path), &report.to_text())?;
    }
    Ok(())
}

fn audit(a: &AuditArgs) -> Result<()> {
    let g = load_graph(&a.graph)?;
    let report = optimality_audit(&g, &a.epsilons)?;
    emit(a.output.as_deref(), &report.to_text())
}

fn simulate_cmd(a: &SimulateArgs) -> Result<()> {
    let g = load_graph(&a.run.graph)?;
    let cfg = a.run.config().policy(a.policy).record_waits(a.waits);
    let trace = simulate(&g, &cfg)?;
    emit(a.run.output.as_deref(), &trace.to_csv())?;
    let to_stdout = a.run.output.is_some();
    let j = trace.n_samples() - 1;
    status(
        to_stdout,
        &format!(
            "arrivals {} departures {} discards {} in system {}",
            trace.arrivals[j],
            trace.departures[j],
            trace.discards[j],
            trace.in_system(j)
        ),
    );
    let warmup = a.warmup.unwrap_or(default_warmup(a.run.horizon));
    match stationary_stats(&trace, warmup) {
        Ok(s) => {
            let w = s.waiting_time();
            let mut line = format!(
                "window [{}, {}]: q1 {:.6} ± {:.6}, q2 {:.6} ± {:.6}, W (Little) {:.6} ± {:.6}",
                s.window.0,
                s.window.1,
                s.q(1).mean,
                s.q(1).se,
                s.q(2).mean,
                s.q(2).se,
                w.mean,
                w.se
            );
            if let Some(f) = s.fcfs_wait() {
                line += &format!(", W (FCFS) {:.6} ± {:.6}", f.mean, f.se);
            }
            status(to_stdout, &line);
        }
        Err(e) => status(to_stdout, &format!("no stationary summary: {e}")),
    }
    Ok(())
}

fn couple(a: &CoupleArgs) -> Result<()> {
    let g = load_graph(&a.run.graph)?;
    let ct = simulate_coupled(&g, &a.run.config(), a.n, a.tie_rule)?;
    emit(a.run.output.as_deref(), &ct.to_csv())?;
    status(
        a.run.output.is_some(),
        &format!(
            "delta {} ({} per server), max bound gap {}, violations {}",
            ct.final_delta(),
            ct.final_delta() as f64 / g.n_vertices() as f64,
            ct.max_bound_gap,
            ct.violations
        ),
    );
    Ok(())
}

fn fluid(a: &FluidArgs) -> Result<()> {
    if let Some(c) = a.bipartite {
        let bf = BipartiteFluid::new(a.lambda, c)?;
        let run = bf.integrate(a.horizon, a.dt)?;
        let mut csv = String::from("t,q1A,q1B\n");
        for j in 0..run.times.len() {
            csv += &format!("{},{},{}\n", run.times[j], run.q1a[j], run.q1b[j]);
        }
        emit(a.output.as_deref(), &csv)?;
        let hit = run.hit_time.map_or("none".to_string(), |t| t.to_string());
        status(a.output.is_some(), &format!("q1A reaches c at t = {hit}"));
        return Ok(());
    }
    let levels = match (a.levels, a.buffer) {
        (Some(k), _) => k,
        (None, Buffer::Finite(b)) => b as usize,
        (None, Buffer::Infinite) => default_truncation(a.lambda),
    };
    let grid = a.grid.unwrap_or(a.horizon / 100.0);
    let tr = FluidIntegrator::new(a.lambda, a.dt)?.integrate(&FluidState::empty(levels), a.horizon, grid)?;
    emit(a.output.as_deref(), &tr.to_csv())
}

fn scale(a: &ScaleArgs) -> Result<()> {
    let series = DiffusionSeries::from_trace_csv(&read(&a.trace)?, a.n, a.lambda_n)?;
    emit(a.output.as_deref(), &series.to_csv())?;
    status(a.output.is_some(), &format!("beta = {}", series.beta));
    Ok(())
}

fn experiment(a: &ExperimentArgs) -> Result<ExitCode> {
    let cfg = SuiteConfig::parse(&read(&a.config)?, a.profile)?;
    let start = Instant::now();
    let report = run_all(&cfg, &a.out)?;
    let elapsed = start.elapsed().as_secs_f64();
    for r in &report.results {
        let passed = r.checks.iter().filter(|c| c.pass).count();
        println!("{}: {passed}/{} checks passed (attempts {})", r.name, r.checks.len(), r.attempts);
        for c in r.checks.iter().filter(|c| !c.pass) {
            println!("  FAIL {}: measured {} (want {})", c.name, c.measured, c.tolerance);
        }
    }
    println!("profile {}, {:.1} s, outputs in {}", cfg.profile.name(), elapsed, a.out.display());
    let mut ok = report.passed();
    if let Some(budget) = cfg.budget_seconds {
        if elapsed > budget {
            println!("FAIL wall-clock budget: {elapsed:.1} s > {budget} s");
            ok = false;
        }
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Gen(a) => gen(a)?,
        Command::Dis(a) => dis(a)?,
        Command::Audit(a) => audit(a)?,
        Command::Simulate(a) => simulate_cmd(a)?,
        Command::Couple(a) => couple(a)?,
        Command::Fluid(a) => fluid(a)?,
        Command::Scale(a) => scale(a)?,
        Command::Experiment(a) => return experiment(a),
    }
    Ok(ExitCode::SUCCESS)
}
