use rand::Rng;

use super::state::OccupancyState;
use crate::graph::{Graph, Vertex};
use crate::rng::SimRng;

/// Outcome of routing one arriving task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assignment {
    Server(Vertex),
    Discard,
}

/// A shortest queue in `N[v]`, uniform among ties. Ignores the buffer.
pub(crate) fn jsq_argmin(g: &Graph, state: &OccupancyState, v: Vertex, rng: &mut SimRng) -> Vertex {
    let n = state.n_servers();
    if g.degree(v) + 1 == n {
        // N[v] is everything: pick uniformly among the global minima
        let level = state.min_level();
        let c = state.count_at_level(level);
        let j = if c > 1 { rng.random_range(1..=c) } else { 1 };
        return state.server_at_level(level, j);
    }
    let x = state.queue_lengths();
    let mut best = x[v as usize];
    let mut ties = 1u32;
    for &u in g.neighbors(v) {
        let q = x[u as usize];
        if q < best {
            best = q;
            ties = 1;
        } else if q == best {
            ties += 1;
        }
    }
    if ties == 1 && x[v as usize] == best {
        return v;
    }
    let mut pick = if ties > 1 { rng.random_range(0..ties) } else { 0 };
    for u in std::iter::once(v).chain(g.neighbors(v).iter().copied()) {
        if x[u as usize] == best {
            if pick == 0 {
                return u;
            }
            pick -= 1;
        }
    }
    unreachable!("tie count and scan disagree")
}

/// Join the shortest queue within the closed neighborhood of the arrival
/// vertex, uniform among ties; discard if that queue is full.
pub fn assign_graph_jsq(g: &Graph, state: &OccupancyState, v: Vertex, rng: &mut SimRng) -> Assignment {
    let s = jsq_argmin(g, state, v, rng);
    if state.buffer().admits(state.queue_len(s)) {
        Assignment::Server(s)
    } else {
        Assignment::Discard
    }
}

/// Uniform choice among the `n + 1` lowest servers of the nondecreasing
/// order (ties by id).
pub fn assign_cjsq(state: &OccupancyState, n: usize, rng: &mut SimRng) -> Assignment {
    let k = rng.random_range(1..=(n as u64 + 1));
    let s = state.server_at_rank(k);
    if state.buffer().admits(state.queue_len(s)) {
        Assignment::Server(s)
    } else {
        Assignment::Discard
    }
}

/// No forwarding: the task stays at its arrival server.
pub fn assign_isolated(state: &OccupancyState, v: Vertex) -> Assignment {
    if state.buffer().admits(state.queue_len(v)) {
        Assignment::Server(v)
    } else {
        Assignment::Discard
    }
}
