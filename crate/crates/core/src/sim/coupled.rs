use std::fmt::Write as _;

use rand::Rng;

use super::policy::{assign_cjsq, jsq_argmin, Assignment};
use super::state::OccupancyState;
use super::trace::{Recorder, Trace};
use super::{debug_recount, exp_holding, Policy, SimConfig, SimError};
use crate::graph::{Graph, Vertex};
use crate::rng::{stream, Stream};

/// Where the server chosen in the graph system is placed when ranking it
/// among servers of equal queue length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieRule {
    /// Ahead of every server with the same queue length.
    #[default]
    EarliestPosition,
    /// By server id, like every other rank query.
    ServerId,
}

impl std::str::FromStr for TieRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "earliest" | "earliest_position" => Ok(TieRule::EarliestPosition),
            "id" | "server_id" => Ok(TieRule::ServerId),
            _ => Err(format!("unknown tie rule '{s}' (earliest, id)")),
        }
    }
}

/// Synchronized run of the graph system and the hybrid system `I(G, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledTrace {
    pub graph: Trace,
    pub hybrid: Trace,
    pub n: usize,
    pub tie_rule: TieRule,
    /// Cumulative count of arrivals whose graph-system server ranked
    /// beyond `n + 1`, at each sample.
    pub delta: Vec<u64>,
    /// `Σ_i |Q_i(G) − Q_i(I)| − 2Δ` at each sample.
    pub bound_gap: Vec<i64>,
    /// Largest value of the same gap over all event times.
    pub max_bound_gap: i64,
    /// Events after which the gap was positive.
    pub violations: u64,
}

impl CoupledTrace {
    pub fn final_delta(&self) -> u64 {
        *self.delta.last().expect("trace has samples")
    }

    /// `t, q1..qK, arrivals, departures, discards, delta, bound_gap,
    /// i_q1..i_qK`, where the `q` and counter columns describe the graph
    /// system and the `i_` columns the hybrid system.
    pub fn to_csv(&self) -> String {
        let levels = self.graph.max_level().max(self.hybrid.max_level()).max(1);
        let mut out = Trace::csv_header(levels);
        out.push_str(",delta,bound_gap");
        for i in 1..=levels {
            write!(out, ",i_q{i}").unwrap();
        }
        out.push('\n');
        for j in 0..self.graph.n_samples() {
            self.graph.write_row(&mut out, j, levels);
            write!(out, ",{},{}", self.delta[j], self.bound_gap[j]).unwrap();
            for i in 1..=levels {
                write!(out, ",{}", self.hybrid.q(j, i)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Maintains `D = Σ_i |Q_i(G) − Q_i(I)|` across single-level updates.
struct Discrepancy {
    value: i64,
    pending: [(usize, i64); 2],
    used: usize,
}

impl Discrepancy {
    fn diff(level: usize, g: &OccupancyState, h: &OccupancyState) -> i64 {
        (g.q_count(level) as i64 - h.q_count(level) as i64).abs()
    }

    /// Removes the contribution of `level` before it changes.
    fn open(&mut self, level: usize, g: &OccupancyState, h: &OccupancyState) {
        if self.pending[..self.used].iter().any(|&(l, _)| l == level) {
            return;
        }
        self.value -= Self::diff(level, g, h);
        self.pending[self.used] = (level, 0);
        self.used += 1;
    }

    fn close(&mut self, g: &OccupancyState, h: &OccupancyState) {
        for &(l, _) in &self.pending[..self.used] {
            self.value += Self::diff(l, g, h);
        }
        self.used = 0;
    }
}

/// Runs the graph system and `I(G, n)` on one event stream.
///
/// Arrivals are routed in the graph system by neighborhood JSQ to `v'`.
/// If `v'` takes position `k ≤ n + 1` in the graph system's order, the
/// hybrid system assigns to its own `k`-th ordered server; otherwise `Δ`
/// grows and the hybrid system assigns uniformly among its `n + 1`
/// shortest queues. Departures occur at rate `N` at an order position `k`
/// uniform over `1..=N`, in each system where that server is busy.
///
/// `cfg.policy` is ignored; watched sets and waits apply to both traces.
pub fn simulate_coupled(g: &Graph, cfg: &SimConfig, n: usize, tie_rule: TieRule) -> Result<CoupledTrace, SimError> {
    let big_n = g.n_vertices();
    cfg.clone().policy(Policy::Cjsq { n }).validate(big_n)?;
    let mut sg = cfg.initial_state(big_n)?;
    let mut sh = sg.clone();
    let mut rng = stream(cfg.seed, Stream::Simulation);
    let watch = cfg.watch.as_deref();
    let mut rec_g = Recorder::new(&sg, cfg.lambda, cfg.sample_grid, cfg.horizon, watch, cfg.record_waits);
    let mut rec_h = Recorder::new(&sh, cfg.lambda, cfg.sample_grid, cfg.horizon, watch, cfg.record_waits);
    let mut d = Discrepancy { value: 0, pending: [(0, 0); 2], used: 0 };
    let mut delta = 0u64;
    let mut delta_samples = vec![0u64];
    let mut gap_samples = vec![0i64];
    let mut max_gap = 0i64;
    let mut violations = 0u64;
    let arrival_rate = cfg.lambda * big_n as f64;
    let rate = arrival_rate + big_n as f64;
    let mut t = 0.0;
    let mut events = 0u64;
    loop {
        t += exp_holding(&mut rng, rate);
        let until = t.min(cfg.horizon);
        let taken = rec_g.advance(until, &sg);
        rec_h.advance(until, &sh);
        for _ in 0..taken {
            delta_samples.push(delta);
            gap_samples.push(d.value - 2 * delta as i64);
        }
        if t > cfg.horizon {
            break;
        }
        if rng.random::<f64>() * rate < arrival_rate {
            let v = rng.random_range(0..big_n) as Vertex;
            let chosen = jsq_argmin(g, &sg, v, &mut rng);
            let k = match tie_rule {
                TieRule::EarliestPosition => sg.earliest_rank_of_level(sg.queue_len(chosen)),
                TieRule::ServerId => sg.rank_by_id(chosen),
            };
            let hybrid_target = if k <= n as u64 + 1 {
                let s = sh.server_at_rank(k);
                if sh.buffer().admits(sh.queue_len(s)) {
                    Assignment::Server(s)
                } else {
                    Assignment::Discard
                }
            } else {
                delta += 1;
                assign_cjsq(&sh, n, &mut rng)
            };
            let graph_admits = sg.buffer().admits(sg.queue_len(chosen));
            if graph_admits {
                d.open(sg.level_after_add(chosen), &sg, &sh);
            }
            if let Assignment::Server(s) = hybrid_target {
                d.open(sh.level_after_add(s), &sg, &sh);
            }
            if graph_admits {
                rec_g.arrive(&mut sg, chosen, t);
            } else {
                rec_g.discard();
            }
            match hybrid_target {
                Assignment::Server(s) => rec_h.arrive(&mut sh, s, t),
                Assignment::Discard => rec_h.discard(),
            }
            d.close(&sg, &sh);
        } else {
            let k = rng.random_range(1..=big_n as u64);
            let a = sg.server_at_rank(k);
            let b = sh.server_at_rank(k);
            let a_busy = sg.queue_len(a) > 0;
            let b_busy = sh.queue_len(b) > 0;
            if a_busy {
                d.open(sg.level_before_remove(a), &sg, &sh);
            }
            if b_busy {
                d.open(sh.level_before_remove(b), &sg, &sh);
            }
            if a_busy {
                rec_g.depart(&mut sg, a, t);
            }
            if b_busy {
                rec_h.depart(&mut sh, b, t);
            }
            d.close(&sg, &sh);
        }
        let gap = d.value - 2 * delta as i64;
        max_gap = max_gap.max(gap);
        if gap > 0 {
            violations += 1;
        }
        events += 1;
        debug_recount(&sg, events);
        debug_recount(&sh, events);
        if cfg!(debug_assertions) && events % 10_000 == 0 {
            let direct: i64 = (1..=sg.q_counts().len().max(sh.q_counts().len()))
                .map(|i| Discrepancy::diff(i, &sg, &sh))
                .sum();
            assert_eq!(direct, d.value, "discrepancy out of sync");
        }
    }
    Ok(CoupledTrace {
        graph: rec_g.finish(&sg),
        hybrid: rec_h.finish(&sh),
        n,
        tie_rule,
        delta: delta_samples,
        bound_gap: gap_samples,
        max_bound_gap: max_gap,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_clique, gen_isolated, gen_ring};
    use crate::sim::Buffer;

    #[test]
    fn clique_never_violates() {
        let g = gen_clique(40).unwrap();
        for n in [0, 3, 39] {
            let ct = simulate_coupled(&g, &SimConfig::new(0.95, 40.0).seed(n as u64), n, TieRule::EarliestPosition).unwrap();
            assert_eq!(ct.final_delta(), 0);
            assert_eq!(ct.graph.counts, ct.hybrid.counts);
            assert_eq!(ct.max_bound_gap, 0);
        }
    }

    #[test]
    fn ring_bound_holds() {
        let g = gen_ring(50).unwrap();
        for rule in [TieRule::EarliestPosition, TieRule::ServerId] {
            for buffer in [Buffer::Infinite, Buffer::Finite(2)] {
                let cfg = SimConfig::new(0.9, 100.0).seed(7).buffer(buffer);
                let ct = simulate_coupled(&g, &cfg, 5, rule).unwrap();
                assert!(ct.max_bound_gap <= 0);
                assert_eq!(ct.violations, 0);
                assert!(ct.bound_gap.iter().all(|&x| x <= 0));
                assert!(ct.final_delta() > 0);
            }
        }
    }

    #[test]
    fn isolated_graph_violates_often() {
        let g = gen_isolated(20).unwrap();
        let ct = simulate_coupled(&g, &SimConfig::new(0.9, 200.0).seed(1), 0, TieRule::EarliestPosition).unwrap();
        let arrivals = *ct.graph.arrivals.last().unwrap();
        assert!(ct.final_delta() as f64 / arrivals as f64 > 0.1);
    }

    #[test]
    fn csv_has_coupling_columns() {
        let g = gen_ring(10).unwrap();
        let ct = simulate_coupled(&g, &SimConfig::new(0.5, 2.0).grid(1.0), 2, TieRule::EarliestPosition).unwrap();
        let csv = ct.to_csv();
        let header = csv.lines().next().unwrap();
        assert!(header.contains(",discards,delta,bound_gap,i_q1"));
        assert_eq!(csv.lines().count(), 4);
        assert_eq!(ct.delta.len(), ct.graph.n_samples());
    }
}
