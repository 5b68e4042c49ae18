//! Event-driven simulation of the occupancy process.
//!
//! The engine samples the embedded jump chain of the CTMC: with `B` busy
//! servers the next event comes after an `Exp(λN + B)` holding time and is
//! an arrival with probability `λN / (λN + B)`, otherwise a service
//! completion at a uniformly chosen busy server.

mod coupled;
mod policy;
mod state;
mod stationary;
mod trace;

use rand::Rng;
use rand_distr::Exp1;
use thiserror::Error;

pub use coupled::{simulate_coupled, CoupledTrace, TieRule};
pub use policy::{assign_cjsq, assign_graph_jsq, assign_isolated, Assignment};
pub use state::{Buffer, OccupancyState};
pub use stationary::{default_warmup, stationary_stats, stationary_stats_with, StationarySummary, DEFAULT_BATCHES};
pub use trace::{TaskWait, Trace, WatchedCounts};

use crate::graph::{Graph, Vertex};
use crate::rng::{stream, SimRng, Stream};
use trace::Recorder;

/// Events between full consistency recounts in debug builds.
const RECOUNT_INTERVAL: u64 = 10_000;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("initial state has {got} servers but the graph has {expected}")]
    InitialSize { expected: usize, got: usize },
    #[error("warmup {warmup} leaves {intervals} sample intervals, need at least {needed}")]
    ShortWindow { warmup: f64, intervals: usize, needed: usize },
    #[error("state invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// Shortest queue within the closed neighborhood of the arrival vertex.
    GraphJsq,
    /// Uniform among the `n + 1` globally shortest queues.
    Cjsq { n: usize },
    /// Every task stays at its arrival vertex.
    Isolated,
}

impl std::str::FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "graph_jsq" | "jsq" => Ok(Policy::GraphJsq),
            "isolated" => Ok(Policy::Isolated),
            _ => {
                let n = s
                    .strip_prefix("cjsq_")
                    .or_else(|| s.strip_prefix("cjsq:"))
                    .and_then(|n| n.parse().ok())
                    .ok_or_else(|| format!("unknown policy '{s}' (graph_jsq, isolated, cjsq_<n>)"))?;
                Ok(Policy::Cjsq { n })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitialState {
    AllEmpty,
    Given(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Arrival rate per server.
    pub lambda: f64,
    pub buffer: Buffer,
    pub horizon: f64,
    pub seed: u64,
    pub policy: Policy,
    pub sample_grid: f64,
    pub initial: InitialState,
    /// Keep per-task FCFS waiting times.
    pub record_waits: bool,
    /// Servers whose occupancy counts are recorded separately.
    pub watch: Option<Vec<Vertex>>,
}

impl SimConfig {
    /// Graph JSQ, infinite buffers, all empty, seed 0, a grid of `horizon / 100`.
    pub fn new(lambda: f64, horizon: f64) -> Self {
        Self {
            lambda,
            buffer: Buffer::Infinite,
            horizon,
            seed: 0,
            policy: Policy::GraphJsq,
            sample_grid: horizon / 100.0,
            initial: InitialState::AllEmpty,
            record_waits: false,
            watch: None,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn policy(mut self, policy: Policy) -> Self {
        self.policy = policy;
        self
    }

    pub fn buffer(mut self, buffer: Buffer) -> Self {
        self.buffer = buffer;
        self
    }

    pub fn grid(mut self, grid: f64) -> Self {
        self.sample_grid = grid;
        self
    }

    pub fn initial(mut self, initial: InitialState) -> Self {
        self.initial = initial;
        self
    }

    pub fn record_waits(mut self, on: bool) -> Self {
        self.record_waits = on;
        self
    }

    pub fn watch(mut self, servers: Vec<Vertex>) -> Self {
        self.watch = Some(servers);
        self
    }

    pub fn validate(&self, n_servers: usize) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be positive and finite, got {}", self.lambda));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive and finite, got {}", self.horizon));
        }
        if !(self.sample_grid > 0.0 && self.sample_grid.is_finite()) {
            return bad(format!("sample grid must be positive, got {}", self.sample_grid));
        }
        if self.horizon / self.sample_grid > 1e8 {
            return bad("sample grid too fine for the horizon".into());
        }
        if n_servers == 0 {
            return bad("graph has no vertices".into());
        }
        if let Buffer::Finite(0) = self.buffer {
            return bad("buffer must be at least 1".into());
        }
        if let Policy::Cjsq { n } = self.policy {
            if n >= n_servers {
                return bad(format!("cjsq needs n < N, got n={n}, N={n_servers}"));
            }
        }
        if let InitialState::Given(x) = &self.initial {
            if x.len() != n_servers {
                return Err(SimError::InitialSize { expected: n_servers, got: x.len() });
            }
        }
        if let Some(w) = &self.watch {
            if let Some(&v) = w.iter().find(|&&v| v as usize >= n_servers) {
                return bad(format!("watched server {v} out of range"));
            }
        }
        Ok(())
    }

    pub(crate) fn initial_state(&self, n_servers: usize) -> Result<OccupancyState, SimError> {
        match &self.initial {
            InitialState::AllEmpty => Ok(OccupancyState::new(n_servers, self.buffer)),
            InitialState::Given(x) => {
                OccupancyState::from_queue_lengths(x, self.buffer).map_err(SimError::InvalidConfig)
            }
        }
    }
}

pub(crate) fn exp_holding(rng: &mut SimRng, rate: f64) -> f64 {
    let e: f64 = rng.sample(Exp1);
    e / rate
}

pub(crate) fn debug_recount(state: &OccupancyState, events: u64) {
    if cfg!(debug_assertions) && events % RECOUNT_INTERVAL == 0 {
        if let Err(e) = state.check_consistency() {
            panic!("after {events} events: {e}");
        }
    }
}

/// Runs the CTMC on `g` up to the horizon and returns the sampled trace.
pub fn simulate(g: &Graph, cfg: &SimConfig) -> Result<Trace, SimError> {
    let n = g.n_vertices();
    cfg.validate(n)?;
    let mut state = cfg.initial_state(n)?;
    let mut rng = stream(cfg.seed, Stream::Simulation);
    let mut rec = Recorder::new(&state, cfg.lambda, cfg.sample_grid, cfg.horizon, cfg.watch.as_deref(), cfg.record_waits);
    let arrival_rate = cfg.lambda * n as f64;
    let mut t = 0.0;
    let mut events = 0u64;
    loop {
        let busy = state.busy();
        let rate = arrival_rate + busy as f64;
        t += exp_holding(&mut rng, rate);
        if t > cfg.horizon {
            break;
        }
        rec.advance(t, &state);
        if rng.random::<f64>() * rate < arrival_rate {
            let v = rng.random_range(0..n) as Vertex;
            let a = match cfg.policy {
                Policy::GraphJsq => assign_graph_jsq(g, &state, v, &mut rng),
                Policy::Cjsq { n } => assign_cjsq(&state, n, &mut rng),
                Policy::Isolated => assign_isolated(&state, v),
            };
            match a {
                Assignment::Server(s) => rec.arrive(&mut state, s, t),
                Assignment::Discard => rec.discard(),
            }
        } else {
            // busy servers occupy the last `busy` positions of the order
            let r = rng.random_range(1..=busy);
            let s = state.server_at_rank(n as u64 - busy + r);
            rec.depart(&mut state, s, t);
        }
        events += 1;
        debug_recount(&state, events);
    }
    Ok(rec.finish(&state))
}
