use rand::Rng;

use super::{Graph, GraphError, Vertex};
use crate::fenwick::Fenwick;
use crate::rng::{stream, SimRng, Stream};
use crate::stats::ceil_count;

/// A topology family with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSpec {
    Clique { n: usize },
    Ring { n: usize },
    ToricGrid { width: usize, height: usize },
    ErdosRenyi { n: usize, p: f64 },
    ErasedRegular { n: usize, d: usize },
    RggTorus { n: usize, radius: f64 },
    CompleteBipartite { n: usize, fraction: f64 },
    Isolated { n: usize },
}

impl GraphSpec {
    /// Generates the graph. Deterministic in `(self, seed)`; the seed is
    /// ignored by the deterministic families.
    pub fn generate(&self, seed: u64) -> Result<Graph, GraphError> {
        match *self {
            GraphSpec::Clique { n } => gen_clique(n),
            GraphSpec::Ring { n } => gen_ring(n),
            GraphSpec::ToricGrid { width, height } => gen_toric_grid(width, height),
            GraphSpec::ErdosRenyi { n, p } => gen_erdos_renyi(n, p, seed),
            GraphSpec::ErasedRegular { n, d } => gen_erased_regular(n, d, seed),
            GraphSpec::RggTorus { n, radius } => gen_rgg_torus(n, radius, seed),
            GraphSpec::CompleteBipartite { n, fraction } => gen_complete_bipartite(n, fraction),
            GraphSpec::Isolated { n } => gen_isolated(n),
        }
    }

    pub fn n_vertices(&self) -> usize {
        match *self {
            GraphSpec::ToricGrid { width, height } => width * height,
            GraphSpec::Clique { n }
            | GraphSpec::Ring { n }
            | GraphSpec::ErdosRenyi { n, .. }
            | GraphSpec::ErasedRegular { n, .. }
            | GraphSpec::RggTorus { n, .. }
            | GraphSpec::CompleteBipartite { n, .. }
            | GraphSpec::Isolated { n } => n,
        }
    }
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<(), GraphError> {
    if cond {
        Ok(())
    } else {
        Err(GraphError::InvalidParameter(msg()))
    }
}

pub fn gen_clique(n: usize) -> Result<Graph, GraphError> {
    require(n >= 1, || "clique needs n >= 1".into())?;
    let adjacency = (0..n)
        .map(|u| (0..n as Vertex).filter(|&v| v as usize != u).collect())
        .collect();
    Ok(Graph::from_adjacency_unchecked(adjacency, format!("clique(n={n})")))
}

pub fn gen_isolated(n: usize) -> Result<Graph, GraphError> {
    require(n >= 1, || "isolated graph needs n >= 1".into())?;
    Ok(Graph::from_adjacency_unchecked(vec![Vec::new(); n], format!("isolated(n={n})")))
}

pub fn gen_ring(n: usize) -> Result<Graph, GraphError> {
    require(n >= 3, || format!("ring needs n >= 3, got {n}"))?;
    let adjacency = (0..n)
        .map(|u| {
            let mut l = vec![((u + n - 1) % n) as Vertex, ((u + 1) % n) as Vertex];
            l.sort_unstable();
            l
        })
        .collect();
    Ok(Graph::from_adjacency_unchecked(adjacency, format!("ring(n={n})")))
}

/// Periodic `width × height` lattice; vertex `(x, y)` has id `y·width + x`.
pub fn gen_toric_grid(width: usize, height: usize) -> Result<Graph, GraphError> {
    require(width >= 3 && height >= 3, || {
        format!("toric grid needs width, height >= 3, got {width}x{height}")
    })?;
    let id = |x: usize, y: usize| (y * width + x) as Vertex;
    let mut adjacency = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let mut l = vec![
                id((x + width - 1) % width, y),
                id((x + 1) % width, y),
                id(x, (y + height - 1) % height),
                id(x, (y + 1) % height),
            ];
            l.sort_unstable();
            adjacency.push(l);
        }
    }
    Ok(Graph::from_adjacency_unchecked(
        adjacency,
        format!("toric_grid(w={width},h={height})"),
    ))
}

/// G(n, p): every unordered pair independently with probability `p`.
///
/// Pairs are visited in row-major lower-triangular order with geometric
/// skips, so the cost is proportional to the number of edges.
pub fn gen_erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph, GraphError> {
    require(n >= 1, || "erdos_renyi needs n >= 1".into())?;
    require((0.0..=1.0).contains(&p), || format!("edge probability {p} outside [0,1]"))?;
    let label = format!("erdos_renyi(n={n},p={p})");
    if p == 1.0 {
        let g = gen_clique(n)?;
        return Ok(Graph::from_adjacency_unchecked(g.adjacency, label));
    }
    let mut adjacency: Vec<Vec<Vertex>> = vec![Vec::new(); n];
    if p > 0.0 && n > 1 {
        let mut rng = stream(seed, Stream::Graph);
        let log_q = (1.0 - p).ln();
        let mut v: usize = 1;
        let mut w: u64 = 0;
        let mut first = true;
        while v < n {
            let u: f64 = rng.random();
            let skip = ((1.0 - u).ln() / log_q).floor();
            let skip = if skip.is_finite() && skip < 1e15 { skip as u64 } else { u64::MAX / 4 };
            w = if first { skip } else { w.saturating_add(1 + skip) };
            first = false;
            while v < n && w >= v as u64 {
                w -= v as u64;
                v += 1;
            }
            if v < n {
                adjacency[v].push(w as Vertex);
                adjacency[w as usize].push(v as Vertex);
            }
        }
    }
    Ok(Graph::from_adjacency_unchecked(adjacency, label))
}

/// Erased random regular graph.
///
/// Every vertex gets `d` half-edges. Half-edges are processed in
/// vertex-major order: the first unpaired half-edge is paired with one
/// chosen uniformly among the remaining unpaired ones. Self-loops and
/// repeated edges of the resulting multigraph are then erased.
pub fn gen_erased_regular(n: usize, d: usize, seed: u64) -> Result<Graph, GraphError> {
    require(n >= 1, || "erased_regular needs n >= 1".into())?;
    require(d < n, || format!("degree {d} must be below n = {n}"))?;
    require((n * d) % 2 == 0, || format!("n·d = {} must be even", n * d))?;
    let total = n * d;
    let mut unpaired = Fenwick::ones(total);
    let mut rng = stream(seed, Stream::Graph);
    let mut adjacency: Vec<Vec<Vertex>> = vec![Vec::with_capacity(d); n];
    let mut remaining = total;
    while remaining > 0 {
        let first = unpaired.find_kth(1);
        unpaired.add(first, -1);
        remaining -= 1;
        let pick = rng.random_range(0..remaining) as i64 + 1;
        let partner = unpaired.find_kth(pick);
        unpaired.add(partner, -1);
        remaining -= 1;
        let (a, b) = (first / d, partner / d);
        if a != b {
            adjacency[a].push(b as Vertex);
            adjacency[b].push(a as Vertex);
        }
    }
    for list in &mut adjacency {
        list.sort_unstable();
        list.dedup();
    }
    Ok(Graph::from_adjacency_unchecked(adjacency, format!("erased_regular(n={n},d={d})")))
}

/// Radius giving expected degree ≈ `avg_degree` in a torus RGG on `n` points.
pub fn rgg_radius(n: usize, avg_degree: f64) -> f64 {
    (avg_degree / (std::f64::consts::PI * n as f64)).sqrt()
}

/// Random geometric graph on the unit torus: `n` uniform points, edge iff
/// the periodic distance is strictly below `radius`.
pub fn gen_rgg_torus(n: usize, radius: f64, seed: u64) -> Result<Graph, GraphError> {
    require(n >= 1, || "rgg_torus needs n >= 1".into())?;
    let mut rng: SimRng = stream(seed, Stream::Graph);
    let points: Vec<(f64, f64)> = (0..n).map(|_| (rng.random(), rng.random())).collect();
    let mut g = rgg_from_points(&points, radius)?;
    g.label = format!("rgg_torus(n={n},r={radius})");
    Ok(g)
}

fn torus_dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    let mut best = f64::INFINITY;
    for sx in [-1.0, 0.0, 1.0] {
        for sy in [-1.0, 0.0, 1.0] {
            let dx = a.0 - b.0 + sx;
            let dy = a.1 - b.1 + sy;
            best = best.min(dx * dx + dy * dy);
        }
    }
    best
}

/// Torus RGG over given points in `[0,1)²`.
pub fn rgg_from_points(points: &[(f64, f64)], radius: f64) -> Result<Graph, GraphError> {
    require((0.0..=0.5).contains(&radius), || format!("radius {radius} outside [0, 0.5]"))?;
    require(
        points.iter().all(|&(x, y)| (0.0..1.0).contains(&x) && (0.0..1.0).contains(&y)),
        || "points must lie in [0,1)^2".into(),
    )?;
    let n = points.len();
    let r2 = radius * radius;
    let mut adjacency: Vec<Vec<Vertex>> = vec![Vec::new(); n];
    let cells = if radius > 0.0 { (1.0 / radius).floor() as usize } else { 0 };
    if radius == 0.0 {
        // strict inequality: nothing is adjacent
    } else if cells < 3 {
        for u in 0..n {
            for v in (u + 1)..n {
                if torus_dist2(points[u], points[v]) < r2 {
                    adjacency[u].push(v as Vertex);
                    adjacency[v].push(u as Vertex);
                }
            }
        }
    } else {
        let cell_of = |c: f64| ((c * cells as f64) as usize).min(cells - 1);
        let mut buckets: Vec<Vec<Vertex>> = vec![Vec::new(); cells * cells];
        for (i, &(x, y)) in points.iter().enumerate() {
            buckets[cell_of(y) * cells + cell_of(x)].push(i as Vertex);
        }
        for (u, &(x, y)) in points.iter().enumerate() {
            let (cx, cy) = (cell_of(x), cell_of(y));
            for dy in [cells - 1, 0, 1] {
                for dx in [cells - 1, 0, 1] {
                    let b = ((cy + dy) % cells) * cells + (cx + dx) % cells;
                    for &v in &buckets[b] {
                        if v as usize != u && torus_dist2(points[u], points[v as usize]) < r2 {
                            adjacency[u].push(v);
                        }
                    }
                }
            }
            adjacency[u].sort_unstable();
        }
    }
    Ok(Graph::from_adjacency_unchecked(adjacency, format!("rgg_torus(n={n},r={radius})")))
}

/// Complete bipartite graph with part `A = 0..⌈c·n⌉` and `B` the rest.
pub fn gen_complete_bipartite(n: usize, fraction: f64) -> Result<Graph, GraphError> {
    require(fraction > 0.0 && fraction < 1.0, || format!("fraction {fraction} outside (0,1)"))?;
    let a = ceil_count(fraction * n as f64);
    require(a >= 1 && a < n, || format!("degenerate parts: |A| = {a}, n = {n}"))?;
    let adjacency = (0..n)
        .map(|u| {
            if u < a {
                (a as Vertex..n as Vertex).collect()
            } else {
                (0..a as Vertex).collect()
            }
        })
        .collect();
    Ok(Graph::from_adjacency_unchecked(
        adjacency,
        format!("complete_bipartite(n={n},c={fraction},A=0..{a})"),
    ))
}
