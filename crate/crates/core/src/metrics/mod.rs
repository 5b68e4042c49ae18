//! Non-coverage counts and the well-connectedness measures `dis₁`, `dis₂`.
//!
//! For a vertex set `U`, `com(U) = |V \ N[U]|` counts the vertices that are
//! neither in `U` nor adjacent to it. `dis(G, ε)` is the largest `com(U)`
//! over all `U` with at least a threshold number of vertices (`⌈εN⌉` on the
//! fluid scale, `⌈ε√N⌉` on the diffusion scale). Since `com` can only drop
//! when `U` grows, the supremum is attained at the threshold size, and only
//! those subsets are enumerated.

mod audit;

use rand::Rng;
use thiserror::Error;

use crate::graph::{Graph, Vertex};
use crate::rng::{stream, Stream};
use crate::stats::ceil_count;

pub use audit::{
    optimality_audit, optimality_audit_with, AuditConfig, AuditReport, Criterion, CriterionVerdict,
    Verdict,
};

/// Default cap on the number of subsets `dis_exact` will enumerate.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("vertex {vertex} out of range for {n} vertices")]
    InvalidVertex { vertex: Vertex, n: usize },
    #[error("vertex set must be nonempty")]
    EmptySet,
    #[error("epsilon {0} must be positive and finite")]
    InvalidEpsilon(f64),
    #[error("threshold size {k} is not in 1..={n}")]
    InvalidThreshold { k: usize, n: usize },
    #[error("C({n}, {k}) = {count:.3e} subsets exceeds the enumeration budget {budget}; use dis_heuristic")]
    BudgetExceeded { n: usize, k: usize, count: f64, budget: u64 },
}

/// Scale of the well-connectedness measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// `dis₁`: threshold `⌈εN⌉`.
    Fluid,
    /// `dis₂`: threshold `⌈ε√N⌉`.
    Diffusion,
}

impl Scale {
    pub fn name(&self) -> &'static str {
        match self {
            Scale::Fluid => "fluid",
            Scale::Diffusion => "diffusion",
        }
    }
}

impl std::str::FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fluid" | "dis1" => Ok(Scale::Fluid),
            "diffusion" | "dis2" => Ok(Scale::Diffusion),
            other => Err(format!("unknown scale '{other}' (expected fluid|diffusion)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exhaustive,
    Greedy,
    Sampled,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Exhaustive => "exhaustive",
            Method::Greedy => "greedy",
            Method::Sampled => "sampled",
        }
    }
}

/// Exact value or a lower bound found by search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisValue {
    Exact(usize),
    LowerBound(usize),
}

impl DisValue {
    pub fn count(&self) -> usize {
        match *self {
            DisValue::Exact(v) | DisValue::LowerBound(v) => v,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, DisValue::Exact(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisReport {
    pub epsilon: f64,
    pub scale: Scale,
    pub threshold_size: usize,
    pub value: DisValue,
    /// A set of `threshold_size` vertices attaining `value`.
    pub witness: Vec<Vertex>,
    pub method: Method,
}

impl DisReport {
    pub fn summary_line(&self) -> String {
        let (kind, v) = match self.value {
            DisValue::Exact(v) => ("=", v),
            DisValue::LowerBound(v) => (">=", v),
        };
        format!(
            "dis_{}(eps={}) {} {} (k={}, method={})",
            if self.scale == Scale::Fluid { 1 } else { 2 },
            self.epsilon,
            kind,
            v,
            self.threshold_size,
            self.method.name()
        )
    }

    /// `key: value` lines.
    pub fn to_text(&self) -> String {
        let witness: Vec<String> = self.witness.iter().map(u32::to_string).collect();
        format!(
            "epsilon: {}\nscale: {}\nthreshold_size: {}\nvalue: {}\nexact: {}\nmethod: {}\nwitness: {}\n",
            self.epsilon,
            self.scale.name(),
            self.threshold_size,
            self.value.count(),
            self.value.is_exact(),
            self.method.name(),
            witness.join(" ")
        )
    }
}

/// `|V \ N[U]|`. Repeated entries in `u_set` are treated as one.
pub fn com(g: &Graph, u_set: &[Vertex]) -> Result<usize, MetricsError> {
    if u_set.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let n = g.n_vertices();
    let mut covered = vec![false; n];
    for &u in u_set {
        if u as usize >= n {
            return Err(MetricsError::InvalidVertex { vertex: u, n });
        }
    }
    let mut count = 0;
    for &u in u_set {
        for w in std::iter::once(u).chain(g.neighbors(u).iter().copied()) {
            if !covered[w as usize] {
                covered[w as usize] = true;
                count += 1;
            }
        }
    }
    Ok(n - count)
}

/// `⌈εN⌉` (fluid) or `⌈ε√N⌉` (diffusion).
pub fn threshold_size(n: usize, epsilon: f64, scale: Scale) -> Result<usize, MetricsError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(MetricsError::InvalidEpsilon(epsilon));
    }
    let k = match scale {
        Scale::Fluid => ceil_count(epsilon * n as f64),
        Scale::Diffusion => ceil_count(epsilon * (n as f64).sqrt()),
    };
    if k == 0 || k > n {
        return Err(MetricsError::InvalidThreshold { k, n });
    }
    Ok(k)
}

/// `C(n, k)` as a float (saturates to infinity).
pub fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n.saturating_sub(k));
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn dis_exact(g: &Graph, epsilon: f64, scale: Scale) -> Result<DisReport, MetricsError> {
    dis_exact_with_budget(g, epsilon, scale, DEFAULT_ENUMERATION_BUDGET)
}

/// Exact `dis` by enumerating all threshold-size subsets in lexicographic
/// order; the witness is the lexicographically first maximizer.
pub fn dis_exact_with_budget(
    g: &Graph,
    epsilon: f64,
    scale: Scale,
    budget: u64,
) -> Result<DisReport, MetricsError> {
    let n = g.n_vertices();
    let k = threshold_size(n, epsilon, scale)?;
    let report = |value, witness| DisReport {
        epsilon,
        scale,
        threshold_size: k,
        value: DisValue::Exact(value),
        witness,
        method: Method::Exhaustive,
    };
    // A vertex w outside U stays uncovered only if U avoids N[w], which
    // needs n - 1 - deg(w) >= k. If no vertex allows it, every k-set dominates.
    if k + g.min_degree() >= n {
        return Ok(report(0, (0..k as Vertex).collect()));
    }
    let count = binomial(n, k);
    if count > budget as f64 {
        return Err(MetricsError::BudgetExceeded { n, k, count, budget });
    }
    let mut search = Enumeration {
        g,
        k,
        cover: vec![0u32; n],
        covered: 0,
        chosen: Vec::with_capacity(k),
        best: None,
        ceiling: n - k,
    };
    search.run(0);
    let (value, witness) = search.best.expect("at least one subset");
    Ok(report(value, witness))
}

struct Enumeration<'a> {
    g: &'a Graph,
    k: usize,
    cover: Vec<u32>,
    covered: usize,
    chosen: Vec<Vertex>,
    best: Option<(usize, Vec<Vertex>)>,
    ceiling: usize,
}

impl Enumeration<'_> {
    fn done(&self) -> bool {
        matches!(self.best, Some((v, _)) if v == self.ceiling)
    }

    fn push(&mut self, v: Vertex) {
        self.chosen.push(v);
        for w in std::iter::once(v).chain(self.g.neighbors(v).iter().copied()) {
            let c = &mut self.cover[w as usize];
            if *c == 0 {
                self.covered += 1;
            }
            *c += 1;
        }
    }

    fn pop(&mut self) {
        let v = self.chosen.pop().unwrap();
        for w in std::iter::once(v).chain(self.g.neighbors(v).iter().copied()) {
            let c = &mut self.cover[w as usize];
            *c -= 1;
            if *c == 0 {
                self.covered -= 1;
            }
        }
    }

    fn run(&mut self, start: usize) {
        let n = self.g.n_vertices();
        if self.chosen.len() == self.k {
            let value = n - self.covered;
            if self.best.as_ref().is_none_or(|(b, _)| value > *b) {
                self.best = Some((value, self.chosen.clone()));
            }
            return;
        }
        let need = self.k - self.chosen.len();
        for v in start..=(n - need) {
            self.push(v as Vertex);
            self.run(v + 1);
            self.pop();
            if self.done() {
                return;
            }
        }
    }
}

/// Lower bound on `dis` from a greedy construction plus `effort` uniformly
/// random threshold-size subsets.
///
/// Greedy repeatedly adds the vertex whose closed neighborhood covers the
/// fewest still-uncovered vertices (lowest id on ties).
pub fn dis_heuristic(
    g: &Graph,
    epsilon: f64,
    scale: Scale,
    effort: usize,
    seed: u64,
) -> Result<DisReport, MetricsError> {
    let n = g.n_vertices();
    let k = threshold_size(n, epsilon, scale)?;

    let (mut best, mut witness) = greedy_witness(g, k);
    let mut method = Method::Greedy;

    let mut rng = stream(seed, Stream::Heuristic);
    let mut pool: Vec<Vertex> = (0..n as Vertex).collect();
    let mut mark = vec![0u32; n];
    let mut epoch = 0u32;
    for _ in 0..effort {
        for i in 0..k {
            let j = rng.random_range(i..n);
            pool.swap(i, j);
        }
        epoch += 1;
        let mut covered = 0;
        for &u in &pool[..k] {
            for w in std::iter::once(u).chain(g.neighbors(u).iter().copied()) {
                if mark[w as usize] != epoch {
                    mark[w as usize] = epoch;
                    covered += 1;
                }
            }
        }
        if n - covered > best {
            best = n - covered;
            witness = pool[..k].to_vec();
            witness.sort_unstable();
            method = Method::Sampled;
        }
    }
    Ok(DisReport {
        epsilon,
        scale,
        threshold_size: k,
        value: DisValue::LowerBound(best),
        witness,
        method,
    })
}

fn greedy_witness(g: &Graph, k: usize) -> (usize, Vec<Vertex>) {
    let n = g.n_vertices();
    let mut gain: Vec<usize> = (0..n as Vertex).map(|v| g.degree(v) + 1).collect();
    let mut covered = vec![false; n];
    let mut chosen = vec![false; n];
    let mut n_covered = 0;
    let mut witness = Vec::with_capacity(k);
    for _ in 0..k {
        let v = (0..n)
            .filter(|&v| !chosen[v])
            .min_by_key(|&v| (gain[v], v))
            .expect("k <= n");
        chosen[v] = true;
        witness.push(v as Vertex);
        for w in std::iter::once(v as Vertex).chain(g.neighbors(v as Vertex).iter().copied()) {
            if !covered[w as usize] {
                covered[w as usize] = true;
                n_covered += 1;
                gain[w as usize] -= 1;
                for &u in g.neighbors(w) {
                    gain[u as usize] -= 1;
                }
            }
        }
    }
    witness.sort_unstable();
    (n - n_covered, witness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_clique, gen_isolated, gen_ring};

    fn two_cliques() -> Graph {
        let mut edges = Vec::new();
        for base in [0u32, 5] {
            for u in 0..5 {
                for v in (u + 1)..5 {
                    edges.push((base + u, base + v));
                }
            }
        }
        Graph::from_edges(10, edges, "two_cliques").unwrap()
    }

    #[test]
    fn com_examples() {
        assert_eq!(com(&gen_clique(10).unwrap(), &[3]).unwrap(), 0);
        assert_eq!(com(&gen_ring(5).unwrap(), &[0]).unwrap(), 2);
        assert_eq!(com(&gen_isolated(7).unwrap(), &[0, 1]).unwrap(), 5);
        assert_eq!(com(&gen_isolated(7).unwrap(), &[0, 0, 1]).unwrap(), 5);
        assert_eq!(com(&gen_ring(5).unwrap(), &[]), Err(MetricsError::EmptySet));
        assert!(matches!(com(&gen_ring(5).unwrap(), &[5]), Err(MetricsError::InvalidVertex { .. })));
    }

    #[test]
    fn dis_exact_path() {
        let path = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)], "path").unwrap();
        let r = dis_exact(&path, 0.25, Scale::Fluid).unwrap();
        assert_eq!(r.threshold_size, 1);
        assert_eq!(r.value, DisValue::Exact(2));
        assert_eq!(r.witness, vec![0]);
    }

    #[test]
    fn dis_exact_clique_and_two_cliques() {
        let c = gen_clique(8).unwrap();
        for eps in [0.1, 0.3, 0.9] {
            assert_eq!(dis_exact(&c, eps, Scale::Fluid).unwrap().value, DisValue::Exact(0));
        }
        let r = dis_exact(&two_cliques(), 0.5, Scale::Fluid).unwrap();
        assert_eq!(r.value, DisValue::Exact(5));
        assert_eq!(r.witness, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn dis_exact_refuses_over_budget() {
        let g = gen_ring(60).unwrap();
        let e = dis_exact_with_budget(&g, 0.5, Scale::Fluid, 1000).unwrap_err();
        assert!(matches!(e, MetricsError::BudgetExceeded { .. }));
    }

    #[test]
    fn threshold_sizes() {
        assert_eq!(threshold_size(100, 0.1, Scale::Fluid).unwrap(), 10);
        assert_eq!(threshold_size(100, 0.1, Scale::Diffusion).unwrap(), 1);
        assert_eq!(threshold_size(100, 0.25, Scale::Diffusion).unwrap(), 3);
        assert!(threshold_size(10, 2.0, Scale::Fluid).is_err());
        assert!(threshold_size(10, 0.0, Scale::Fluid).is_err());
    }

    #[test]
    fn heuristic_finds_two_cliques_witness() {
        let r = dis_heuristic(&two_cliques(), 0.5, Scale::Fluid, 1000, 3).unwrap();
        assert!(r.value.count() >= 5);
        assert!(!r.value.is_exact());
        assert_eq!(com(&two_cliques(), &r.witness).unwrap(), r.value.count());
    }

    #[test]
    fn greedy_prefers_low_coverage() {
        // star center 0 plus an isolated vertex 5: greedy picks 5 first
        let g = Graph::from_edges(6, [(0, 1), (0, 2), (0, 3), (0, 4)], "star").unwrap();
        let (v, w) = greedy_witness(&g, 1);
        assert_eq!(w, vec![5]);
        assert_eq!(v, 5);
    }
}
