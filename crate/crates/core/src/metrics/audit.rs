//! Finite-N diagnostics for the optimality criteria.
//!
//! Optimality is a property of graph sequences, so a single graph can only
//! show that a sufficient condition holds at this size, that a necessary
//! condition is visibly violated, or neither.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::{dis_exact_with_budget, dis_heuristic, DisReport, MetricsError, Scale};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    SufficientConditionMet,
    NecessaryConditionViolated,
    Inconclusive,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::SufficientConditionMet => "sufficient-condition-met",
            Verdict::NecessaryConditionViolated => "necessary-condition-violated",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// Every `⌈εN⌉`-set dominates the graph (`dis₁ = 0`) for all audited ε.
    FluidWellConnected,
    /// Same on the diffusion threshold `⌈ε√N⌉`.
    DiffusionWellConnected,
    /// Minimum degree within `slack·N` of `N − 1`.
    NearCompleteMinDegree,
    /// A fixed fraction of vertices has degree at most `M`.
    BoundedDegreeMass,
}

impl Criterion {
    pub fn name(&self) -> &'static str {
        match self {
            Criterion::FluidWellConnected => "fluid_well_connected",
            Criterion::DiffusionWellConnected => "diffusion_well_connected",
            Criterion::NearCompleteMinDegree => "near_complete_min_degree",
            Criterion::BoundedDegreeMass => "bounded_degree_mass",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionVerdict {
    pub criterion: Criterion,
    pub verdict: Verdict,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct AuditConfig {
    /// Subset budget before falling back to the heuristic.
    pub budget: u64,
    pub effort: usize,
    pub seed: u64,
    /// `M` in the bounded-degree count.
    pub bounded_degree: usize,
    /// Fraction of vertices with degree ≤ M that flags the bounded-degree pattern.
    pub bounded_fraction: f64,
    /// Allowed `(N − 1 − d_min) / N` for the near-complete criterion.
    pub min_degree_slack: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            budget: super::DEFAULT_ENUMERATION_BUDGET,
            effort: 1000,
            seed: 0,
            bounded_degree: 10,
            bounded_fraction: 0.05,
            min_degree_slack: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AuditReport {
    pub n_vertices: usize,
    pub edge_count: usize,
    pub min_degree: usize,
    pub max_degree: usize,
    pub mean_degree: f64,
    pub degree_histogram: BTreeMap<usize, usize>,
    /// `(M, #{v : d_v ≤ M})` for `M = 1..=10`.
    pub low_degree_counts: Vec<(usize, usize)>,
    pub dis: Vec<DisReport>,
    pub criteria: Vec<CriterionVerdict>,
    pub overall: Verdict,
}

impl AuditReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "n_vertices: {}", self.n_vertices).unwrap();
        writeln!(s, "edge_count: {}", self.edge_count).unwrap();
        writeln!(s, "min_degree: {}", self.min_degree).unwrap();
        writeln!(s, "max_degree: {}", self.max_degree).unwrap();
        writeln!(s, "mean_degree: {}", self.mean_degree).unwrap();
        let hist: Vec<String> = self.degree_histogram.iter().map(|(d, c)| format!("{d}:{c}")).collect();
        writeln!(s, "degree_histogram: {}", hist.join(" ")).unwrap();
        for (m, c) in &self.low_degree_counts {
            writeln!(s, "degree_at_most_{m}: {c}").unwrap();
        }
        for r in &self.dis {
            writeln!(s, "{}", r.summary_line()).unwrap();
        }
        for c in &self.criteria {
            writeln!(s, "criterion {}: {} ({})", c.criterion.name(), c.verdict.name(), c.detail).unwrap();
        }
        writeln!(s, "verdict: {}", self.overall.name()).unwrap();
        s
    }
}

pub fn optimality_audit(g: &Graph, epsilons: &[f64]) -> Result<AuditReport, MetricsError> {
    optimality_audit_with(g, epsilons, &AuditConfig::default())
}

pub fn optimality_audit_with(
    g: &Graph,
    epsilons: &[f64],
    cfg: &AuditConfig,
) -> Result<AuditReport, MetricsError> {
    let n = g.n_vertices();
    let hist = g.degree_histogram();
    let low_degree_counts: Vec<(usize, usize)> = (1..=10)
        .map(|m| (m, hist.range(..=m).map(|(_, c)| c).sum()))
        .collect();

    let mut dis = Vec::new();
    for &eps in epsilons {
        for scale in [Scale::Fluid, Scale::Diffusion] {
            let r = match dis_exact_with_budget(g, eps, scale, cfg.budget) {
                Ok(r) => r,
                Err(MetricsError::BudgetExceeded { .. }) => {
                    dis_heuristic(g, eps, scale, cfg.effort, cfg.seed)?
                }
                Err(e) => return Err(e),
            };
            dis.push(r);
        }
    }

    let mut criteria = Vec::new();
    for (criterion, scale) in [
        (Criterion::FluidWellConnected, Scale::Fluid),
        (Criterion::DiffusionWellConnected, Scale::Diffusion),
    ] {
        let reports: Vec<&DisReport> = dis.iter().filter(|r| r.scale == scale).collect();
        let all_zero = !reports.is_empty()
            && reports.iter().all(|r| r.value.is_exact() && r.value.count() == 0);
        let worst = reports.iter().map(|r| r.value.count()).max().unwrap_or(0);
        criteria.push(CriterionVerdict {
            criterion,
            verdict: if all_zero { Verdict::SufficientConditionMet } else { Verdict::Inconclusive },
            detail: format!("max reported com = {worst} over {} epsilon values", reports.len()),
        });
    }

    let d_min = g.min_degree();
    let deficit = (n - 1 - d_min) as f64 / n as f64;
    criteria.push(CriterionVerdict {
        criterion: Criterion::NearCompleteMinDegree,
        verdict: if deficit <= cfg.min_degree_slack {
            Verdict::SufficientConditionMet
        } else {
            Verdict::Inconclusive
        },
        detail: format!("d_min = {d_min}, (N-1-d_min)/N = {deficit:.4}"),
    });

    let low: usize = hist.range(..=cfg.bounded_degree).map(|(_, c)| c).sum();
    let frac = low as f64 / n as f64;
    criteria.push(CriterionVerdict {
        criterion: Criterion::BoundedDegreeMass,
        verdict: if frac >= cfg.bounded_fraction {
            Verdict::NecessaryConditionViolated
        } else {
            Verdict::Inconclusive
        },
        detail: format!("fraction with degree <= {} is {frac:.4}", cfg.bounded_degree),
    });

    let overall = if criteria.iter().any(|c| c.verdict == Verdict::NecessaryConditionViolated) {
        Verdict::NecessaryConditionViolated
    } else if criteria.iter().any(|c| c.verdict == Verdict::SufficientConditionMet) {
        Verdict::SufficientConditionMet
    } else {
        Verdict::Inconclusive
    };

    Ok(AuditReport {
        n_vertices: n,
        edge_count: g.edge_count(),
        min_degree: d_min,
        max_degree: g.max_degree(),
        mean_degree: g.mean_degree(),
        degree_histogram: hist,
        low_degree_counts,
        dis,
        criteria,
        overall,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_clique, gen_complete_bipartite, gen_ring};

    #[test]
    fn clique_meets_sufficient_condition() {
        let r = optimality_audit(&gen_clique(50).unwrap(), &[0.1, 0.2]).unwrap();
        assert_eq!(r.min_degree, 49);
        assert!(r.dis.iter().all(|d| d.value.is_exact() && d.value.count() == 0));
        assert_eq!(r.overall, Verdict::SufficientConditionMet);
    }

    #[test]
    fn ring_violates_bounded_degree() {
        let r = optimality_audit(&gen_ring(50).unwrap(), &[0.1]).unwrap();
        assert_eq!(r.low_degree_counts[1], (2, 50));
        assert_eq!(r.overall, Verdict::NecessaryConditionViolated);
    }

    #[test]
    fn bipartite_is_inconclusive() {
        let g = gen_complete_bipartite(100, 0.3).unwrap();
        let r = optimality_audit(&g, &[0.1]).unwrap();
        assert_eq!(r.min_degree, 30);
        assert_eq!(r.overall, Verdict::Inconclusive);
        assert!(r.to_text().contains("verdict: inconclusive"));
    }
}
