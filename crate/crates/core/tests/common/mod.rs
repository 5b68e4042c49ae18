//! Brute-force references used by the integration tests.

#![allow(dead_code)]

use graphlb_core::graph::Graph;
use graphlb_core::metrics::Scale;

/// Closed-neighborhood bitmask of every vertex, built from the edge list.
fn closed_masks(g: &Graph) -> Vec<u32> {
    let n = g.n_vertices();
    assert!(n <= 20, "oracle is for tiny graphs");
    let mut masks: Vec<u32> = (0..n).map(|v| 1 << v).collect();
    for (u, v) in g.edges() {
        masks[u as usize] |= 1 << v;
        masks[v as usize] |= 1 << u;
    }
    masks
}

/// Smallest integer m with m ≥ x, tolerating rounding noise in x.
pub fn ceil_tolerant(x: f64) -> usize {
    let mut m = 0usize;
    while (m as f64) < x - 1e-9 {
        m += 1;
    }
    m
}

pub fn oracle_threshold(n: usize, epsilon: f64, scale: Scale) -> usize {
    match scale {
        Scale::Fluid => ceil_tolerant(epsilon * n as f64),
        Scale::Diffusion => ceil_tolerant(epsilon * (n as f64).sqrt()),
    }
}

/// Number of vertices outside `N[U]` for the subset encoded by `mask`.
pub fn com_mask(masks: &[u32], mask: u32) -> usize {
    let covered = (0..masks.len()).filter(|&v| mask >> v & 1 == 1).fold(0u32, |acc, v| acc | masks[v]);
    masks.len() - covered.count_ones() as usize
}

/// Maximum of com over every subset of size at least k, and the
/// lexicographically smallest maximizer among subsets of size exactly k.
pub fn brute_force_dis(g: &Graph, k: usize) -> (usize, Vec<u32>) {
    let masks = closed_masks(g);
    let n = masks.len();
    let mut best = 0usize;
    let mut best_k: Option<(usize, Vec<u32>)> = None;
    for mask in 0u32..(1u32 << n) {
        let size = mask.count_ones() as usize;
        if size < k {
            continue;
        }
        let c = com_mask(&masks, mask);
        best = best.max(c);
        if size == k {
            let set: Vec<u32> = (0..n as u32).filter(|&v| mask >> v & 1 == 1).collect();
            let better = match &best_k {
                None => true,
                Some((bc, bs)) => c > *bc || (c == *bc && set < *bs),
            };
            if better {
                best_k = Some((c, set));
            }
        }
    }
    (best, best_k.map(|(_, s)| s).unwrap_or_default())
}

pub fn com_oracle(g: &Graph, u_set: &[u32]) -> usize {
    let masks = closed_masks(g);
    com_mask(&masks, u_set.iter().fold(0, |acc, &v| acc | 1 << v))
}
