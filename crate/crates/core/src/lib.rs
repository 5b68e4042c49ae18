//! Join-the-shortest-queue load balancing on graph topologies.
//!
//! Tasks arrive at every server as independent Poisson streams and are
//! assigned to the least-loaded server in the closed neighborhood of the
//! arrival vertex. This crate provides:
//!
//! * [`graph`]: the topologies (cliques, rings, toric grids, Erdős–Rényi,
//!   erased random regular, random geometric on the torus, complete
//!   bipartite) and an edge-list file format.
//! * [`metrics`]: the non-coverage count `com(U)` and the well-connectedness
//!   measures `dis₁`/`dis₂`, exact and heuristic, plus an optimality audit.
//! * [`sim`]: an event-driven CTMC simulator of the occupancy process, the
//!   CJSQ(n) policy and the coupled graph/hybrid pair with its Δ counter.
//! * [`fluid`]: the clique fluid-limit ODE, the bipartite counterexample ODE,
//!   the sub-optimality threshold and the Halfin–Whitt scaling transform.
//! * [`experiment`]: configuration-driven reproduction runs with CSV output
//!   and pass/fail checks.

pub mod experiment;
mod fenwick;
pub mod fluid;
pub mod graph;
pub mod metrics;
pub mod rng;
pub mod sim;
pub mod stats;

pub use fluid::{
    bipartite_fluid_rhs, diffusion_scale, fluid_rhs, suboptimality_threshold, BipartiteFluid,
    DiffusionScaledPoint, DiffusionSeries, FluidError, FluidIntegrator, FluidState,
    FluidTrajectory,
};
pub use graph::{Graph, GraphError, GraphSpec};
pub use metrics::{com, dis_exact, dis_heuristic, optimality_audit, DisReport, MetricsError, Scale};
pub use sim::{
    simulate, simulate_coupled, stationary_stats, Buffer, CoupledTrace, InitialState,
    OccupancyState, Policy, SimConfig, SimError, StationarySummary, TieRule, Trace,
};
