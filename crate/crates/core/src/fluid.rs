//! Deterministic reference dynamics: the clique fluid limit, the bipartite
//! counterexample ODE, and the Halfin–Whitt scaling of occupancy counts.

use std::fmt::Write as _;

use thiserror::Error;

use crate::sim::Trace;

#[derive(Debug, Error, PartialEq)]
pub enum FluidError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid fluid state: {0}")]
    InvalidState(String),
    #[error("trace line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Occupancy fractions `q_1..q_K` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub t: f64,
    pub q: Vec<f64>,
}

impl FluidState {
    pub fn empty(levels: usize) -> Self {
        Self { t: 0.0, q: vec![0.0; levels] }
    }

    /// Checks `1 ≥ q_1 ≥ … ≥ q_K ≥ 0`.
    pub fn new(q: Vec<f64>) -> Result<Self, FluidError> {
        if q.is_empty() {
            return Err(FluidError::InvalidState("need at least one level".into()));
        }
        if q.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(FluidError::InvalidState("fractions must lie in [0, 1]".into()));
        }
        if q.windows(2).any(|w| w[1] > w[0]) {
            return Err(FluidError::InvalidState("fractions must be non-increasing".into()));
        }
        Ok(Self { t: 0.0, q })
    }
}

/// Default number of levels kept for load `lambda < 1`: `2⌈1/(1−λ)⌉ + 10`.
pub fn default_truncation(lambda: f64) -> usize {
    if lambda < 1.0 {
        2 * (1.0 / (1.0 - lambda)).ceil() as usize + 10
    } else {
        50
    }
}

/// Fraction of arrivals joining a server with `i` tasks, for `i = 0..=K`.
/// Entry `K` is the discarded fraction when the buffer equals `K`.
pub fn assignment_fractions(q: &[f64], lambda: f64) -> Vec<f64> {
    let k = q.len();
    let at = |i: usize| if i == 0 { 1.0 } else { q.get(i - 1).copied().unwrap_or(0.0) };
    let m = (0..=k).find(|&i| at(i + 1) < 1.0).unwrap_or(k);
    let mut p = vec![0.0; k + 1];
    if m == 0 {
        p[0] = 1.0;
    } else {
        let lower = ((1.0 - at(m + 1)) / lambda).min(1.0);
        p[m - 1] = lower;
        p[m] = 1.0 - lower;
    }
    p
}

/// Right-hand side `dq_i/dt = λ p_{i−1}(q) − (q_i − q_{i+1})` of the JSQ
/// fluid limit, with `q_{K+1} = 0`.
pub fn fluid_rhs(q: &[f64], lambda: f64) -> Vec<f64> {
    let p = assignment_fractions(q, lambda);
    (0..q.len())
        .map(|i| lambda * p[i] - (q[i] - q.get(i + 1).copied().unwrap_or(0.0)))
        .collect()
}

fn clip(q: &mut [f64]) {
    let mut cap = 1.0f64;
    for x in q.iter_mut() {
        *x = x.clamp(0.0, cap);
        cap = *x;
    }
}

/// Sampled fluid path.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl FluidTrajectory {
    pub fn endpoint(&self) -> &[f64] {
        self.states.last().expect("trajectory has samples")
    }

    /// Fluid `q_i` at sample `j`.
    pub fn q(&self, j: usize, i: usize) -> f64 {
        self.states[j].get(i - 1).copied().unwrap_or(0.0)
    }

    /// Linear interpolation of `q_i` at time `t` within the sampled range.
    pub fn q_at(&self, t: f64, i: usize) -> f64 {
        let j = self.times.partition_point(|&s| s <= t);
        if j == 0 {
            return self.q(0, i);
        }
        if j == self.times.len() {
            return self.q(j - 1, i);
        }
        let (t0, t1) = (self.times[j - 1], self.times[j]);
        let w = (t - t0) / (t1 - t0);
        (1.0 - w) * self.q(j - 1, i) + w * self.q(j, i)
    }

    /// Columns `t, q1..qK`.
    pub fn to_csv(&self) -> String {
        let k = self.states.first().map_or(0, Vec::len);
        let mut out = String::from("t");
        for i in 1..=k {
            write!(out, ",q{i}").unwrap();
        }
        out.push('\n');
        for (t, q) in self.times.iter().zip(&self.states) {
            write!(out, "{t}").unwrap();
            for x in q {
                write!(out, ",{x}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Fixed-step RK4 for the fluid ODE, clipping to the invariant set after
/// every step.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidIntegrator {
    pub lambda: f64,
    pub dt: f64,
}

impl FluidIntegrator {
    pub fn new(lambda: f64, dt: f64) -> Result<Self, FluidError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(FluidError::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(FluidError::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        Ok(Self { lambda, dt })
    }

    pub fn step(&self, q: &mut [f64], h: f64) {
        let l = self.lambda;
        let k1 = fluid_rhs(q, l);
        let shift = |k: &[f64], s: f64| -> Vec<f64> { q.iter().zip(k).map(|(x, d)| x + s * d).collect() };
        let k2 = fluid_rhs(&shift(&k1, h / 2.0), l);
        let k3 = fluid_rhs(&shift(&k2, h / 2.0), l);
        let k4 = fluid_rhs(&shift(&k3, h), l);
        for i in 0..q.len() {
            q[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        clip(q);
    }

    /// Integrates from `start` over `[start.t, start.t + horizon]`, sampling
    /// every `grid` and at the end. Each sample interval is split into equal
    /// steps no longer than `dt`.
    pub fn integrate(&self, start: &FluidState, horizon: f64, grid: f64) -> Result<FluidTrajectory, FluidError> {
        if !(horizon >= 0.0 && horizon.is_finite()) || !(grid > 0.0) {
            return Err(FluidError::InvalidParameter("horizon must be non-negative and grid positive".into()));
        }
        let mut q = start.q.clone();
        clip(&mut q);
        let mut times = vec![start.t];
        let mut states = vec![q.clone()];
        let mut j = 1u64;
        loop {
            let prev = (j - 1) as f64 * grid;
            if prev >= horizon * (1.0 - 1e-12) {
                break;
            }
            let mut next = j as f64 * grid;
            if next >= horizon * (1.0 - 1e-12) {
                next = horizon;
            }
            let span = next - prev;
            let steps = (span / self.dt * (1.0 - 1e-12)).ceil().max(1.0) as u64;
            let h = span / steps as f64;
            for _ in 0..steps {
                self.step(&mut q, h);
            }
            times.push(start.t + next);
            states.push(q.clone());
            j += 1;
        }
        Ok(FluidTrajectory { times, states })
    }
}

/// Sub-optimality threshold `(c + √(c² + 4c)) / 2` of the complete
/// bipartite graph with part fraction `c`.
pub fn suboptimality_threshold(c: f64) -> Result<f64, FluidError> {
    if !(c > 0.0 && c < 0.5) {
        return Err(FluidError::InvalidParameter(format!("c must lie in (0, 1/2), got {c}")));
    }
    Ok((c + (c * c + 4.0 * c).sqrt()) / 2.0)
}

/// Derivatives of the busy fractions of the two parts of a complete
/// bipartite graph while the small part `A` is not saturated.
pub fn bipartite_fluid_rhs(q1a: f64, q1b: f64, lambda: f64, c: f64) -> (f64, f64) {
    (lambda * (1.0 - c) - q1a, lambda * c - q1b)
}

/// The bipartite counterexample ODE started from empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BipartiteFluid {
    pub lambda: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteRun {
    pub times: Vec<f64>,
    pub q1a: Vec<f64>,
    pub q1b: Vec<f64>,
    /// Interpolated time at which `q1a` reached `c`, if it did.
    pub hit_time: Option<f64>,
}

impl BipartiteFluid {
    pub fn new(lambda: f64, c: f64) -> Result<Self, FluidError> {
        if !(c > 0.0 && c < 0.5) {
            return Err(FluidError::InvalidParameter(format!("c must lie in (0, 1/2), got {c}")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(FluidError::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self { lambda, c })
    }

    /// Fixed point `(λ(1−c), λc)` of the unrestricted linear system.
    pub fn equilibrium(&self) -> (f64, f64) {
        (self.lambda * (1.0 - self.c), self.lambda * self.c)
    }

    /// `−ln(1 − c / (λ(1−c)))`, defined when `λ(1−c) > c`.
    pub fn closed_form_hit_time(&self) -> Option<f64> {
        let a = self.lambda * (1.0 - self.c);
        (a > self.c).then(|| -(1.0 - self.c / a).ln())
    }

    /// RK4 from `(0, 0)` until `horizon` or until `q1a` reaches `c`.
    pub fn integrate(&self, horizon: f64, dt: f64) -> Result<BipartiteRun, FluidError> {
        if !(dt > 0.0) || !(horizon > 0.0) {
            return Err(FluidError::InvalidParameter("horizon and dt must be positive".into()));
        }
        let f = |a: f64, b: f64| bipartite_fluid_rhs(a, b, self.lambda, self.c);
        let (mut t, mut a, mut b) = (0.0, 0.0, 0.0);
        let mut run = BipartiteRun { times: vec![0.0], q1a: vec![0.0], q1b: vec![0.0], hit_time: None };
        while t < horizon {
            let h = dt.min(horizon - t);
            let (a1, b1) = f(a, b);
            let (a2, b2) = f(a + h / 2.0 * a1, b + h / 2.0 * b1);
            let (a3, b3) = f(a + h / 2.0 * a2, b + h / 2.0 * b2);
            let (a4, b4) = f(a + h * a3, b + h * b3);
            let na = a + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
            let nb = b + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
            if na >= self.c {
                let w = (self.c - a) / (na - a);
                let th = t + w * h;
                run.times.push(th);
                run.q1a.push(self.c);
                run.q1b.push(b + w * (nb - b));
                run.hit_time = Some(th);
                break;
            }
            t += h;
            a = na;
            b = nb;
            run.times.push(t);
            run.q1a.push(a);
            run.q1b.push(b);
        }
        Ok(run)
    }
}

/// Centered and scaled occupancy at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionScaledPoint {
    pub t: f64,
    /// `qbar[0] = −(N − Q_1)/√N`, `qbar[i-1] = Q_i/√N` for `i ≥ 2`.
    pub qbar: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionSeries {
    pub n: usize,
    pub lambda_n: f64,
    /// `(N − λ(N)) / √N`.
    pub beta: f64,
    pub points: Vec<DiffusionScaledPoint>,
}

impl DiffusionSeries {
    /// Scales raw counts: `counts[j][i-1] = Q_i` at `times[j]`.
    pub fn from_counts(times: &[f64], counts: &[Vec<u64>], n: usize, lambda_n: f64) -> Result<Self, FluidError> {
        if n == 0 {
            return Err(FluidError::InvalidParameter("N must be positive".into()));
        }
        let levels = counts.iter().map(Vec::len).max().unwrap_or(0).max(1);
        let root = (n as f64).sqrt();
        let points = times
            .iter()
            .zip(counts)
            .map(|(&t, c)| {
                let at = |i: usize| c.get(i - 1).copied().unwrap_or(0) as f64;
                let mut qbar = vec![-(n as f64 - at(1)) / root];
                qbar.extend((2..=levels).map(|i| at(i) / root));
                DiffusionScaledPoint { t, qbar }
            })
            .collect();
        Ok(Self { n, lambda_n, beta: (n as f64 - lambda_n) / root, points })
    }

    /// Parses a trace CSV (`t, q1..qK, ...`) whose `q` columns hold
    /// fractions of `n` servers.
    pub fn from_trace_csv(text: &str, n: usize, lambda_n: f64) -> Result<Self, FluidError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(FluidError::Parse { line: 1, reason: "empty file".into() })?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.first() != Some(&"t") {
            return Err(FluidError::Parse { line: 1, reason: "first column must be t".into() });
        }
        let q_cols: Vec<usize> = (1..)
            .map_while(|i| cols.iter().position(|c| *c == format!("q{i}")))
            .collect();
        if q_cols.is_empty() {
            return Err(FluidError::Parse { line: 1, reason: "no q1 column".into() });
        }
        let mut times = Vec::new();
        let mut counts = Vec::new();
        for (idx, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let num = |c: usize| -> Result<f64, FluidError> {
                fields
                    .get(c)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or(FluidError::Parse { line: idx + 1, reason: format!("bad value in column {}", c + 1) })
            };
            times.push(num(0)?);
            let row = q_cols
                .iter()
                .map(|&c| num(c).map(|q| (q * n as f64).round().max(0.0) as u64))
                .collect::<Result<Vec<_>, _>>()?;
            counts.push(row);
        }
        Self::from_counts(&times, &counts, n, lambda_n)
    }

    /// Columns `t, qbar1..qbarK`.
    pub fn to_csv(&self) -> String {
        let k = self.points.iter().map(|p| p.qbar.len()).max().unwrap_or(1);
        let mut out = String::from("t");
        for i in 1..=k {
            write!(out, ",qbar{i}").unwrap();
        }
        out.push('\n');
        for p in &self.points {
            write!(out, "{}", p.t).unwrap();
            for i in 0..k {
                write!(out, ",{}", p.qbar.get(i).copied().unwrap_or(0.0)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Halfin–Whitt scaling of a simulated trace with `n` servers and total
/// arrival rate `lambda_n`.
pub fn diffusion_scale(trace: &Trace, n: usize, lambda_n: f64) -> Result<DiffusionSeries, FluidError> {
    if n != trace.n_servers {
        return Err(FluidError::InvalidParameter(format!(
            "trace has {} servers, N = {n} given",
            trace.n_servers
        )));
    }
    DiffusionSeries::from_counts(&trace.times, &trace.counts, n, lambda_n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn rhs_examples() {
        let d = fluid_rhs(&[0.8, 0.0, 0.0], 0.8);
        assert!(d.iter().all(|x| x.abs() < 1e-15));
        let d = fluid_rhs(&[0.0; 4], 0.8);
        assert_eq!(d, vec![0.8, 0.0, 0.0, 0.0]);
        let d = fluid_rhs(&[1.0, 0.3, 0.0], 0.9);
        assert!(close(d[0], 0.0, 1e-12) && close(d[1], -0.1, 1e-12) && close(d[2], 0.0, 1e-12));
        // below saturation everything goes to idle servers
        let p = assignment_fractions(&[0.99, 0.5, 0.1], 0.9);
        assert_eq!(p, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn full_buffer_discards() {
        // b = 1, all busy: departures free 1, overflow share is p_1
        let p = assignment_fractions(&[1.0], 1.5);
        assert!(close(p[0], 1.0 / 1.5, 1e-12) && close(p[1], 1.0 - 1.0 / 1.5, 1e-12));
    }

    #[test]
    fn integration_matches_closed_form() {
        let it = FluidIntegrator::new(0.8, 1e-3).unwrap();
        let tr = it.integrate(&FluidState::empty(default_truncation(0.8)), 10.0, 0.05).unwrap();
        let worst = tr
            .times
            .iter()
            .enumerate()
            .map(|(j, &t)| (tr.q(j, 1) - 0.8 * (1.0 - (-t).exp())).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst}");
        assert!(tr.states.iter().all(|q| q[1..].iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn converges_to_fixed_point() {
        for lambda in [0.3, 0.8, 0.95] {
            let it = FluidIntegrator::new(lambda, 1e-2).unwrap();
            let tr = it.integrate(&FluidState::empty(default_truncation(lambda)), 50.0, 1.0).unwrap();
            let end = tr.endpoint();
            assert!(close(end[0], lambda, 1e-4));
            assert!(end[1..].iter().all(|&x| x < 1e-4));
        }
    }

    #[test]
    fn step_halving_is_stable() {
        let start = FluidState::new(vec![1.0, 0.6, 0.2, 0.0]).unwrap();
        let run = |dt| FluidIntegrator::new(0.9, dt).unwrap().integrate(&start, 5.0, 5.0).unwrap();
        let (a, b) = (run(1e-2), run(5e-3));
        let diff = a.endpoint().iter().zip(b.endpoint()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-6, "{diff}");
        for q in &a.states {
            assert!(q.windows(2).all(|w| w[0] >= w[1]) && q.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }

    #[test]
    fn threshold_values() {
        assert!(close(suboptimality_threshold(0.3).unwrap(), 0.717_891, 1e-5));
        let t = suboptimality_threshold(0.49).unwrap();
        assert!(close(t, 0.986_637, 1e-5) && t < 1.0);
        assert!(suboptimality_threshold(1e-9).unwrap() < 1e-4);
        assert!(suboptimality_threshold(0.5).is_err());
        assert!(suboptimality_threshold(0.0).is_err());
    }

    #[test]
    fn bipartite_hit_time() {
        assert_eq!(bipartite_fluid_rhs(0.0, 0.0, 0.9, 0.3), (0.63, 0.27000000000000002));
        let bf = BipartiteFluid::new(0.9, 0.3).unwrap();
        let exact = bf.closed_form_hit_time().unwrap();
        assert!(close(exact, 0.6466, 1e-3));
        let run = bf.integrate(5.0, 1e-3).unwrap();
        assert!(close(run.hit_time.unwrap(), exact, 1e-3));
        // below the saturation condition A never fills up
        let calm = BipartiteFluid::new(0.4, 0.3).unwrap();
        assert!(calm.closed_form_hit_time().is_none());
        assert!(calm.integrate(30.0, 1e-2).unwrap().hit_time.is_none());
        let (a, b) = calm.equilibrium();
        assert!(close(a, 0.28, 1e-12) && close(b, 0.12, 1e-12));
    }

    #[test]
    fn diffusion_examples() {
        let s = DiffusionSeries::from_counts(&[0.0], &[vec![10_000, 300]], 10_000, 9_900.0).unwrap();
        assert_eq!(s.beta, 1.0);
        assert_eq!(s.points[0].qbar, vec![0.0, 3.0]);
        let s = DiffusionSeries::from_counts(&[0.0], &[vec![9_900]], 10_000, 9_900.0).unwrap();
        assert_eq!(s.points[0].qbar, vec![-1.0]);
        let csv = "t,q1,q2,arrivals,departures,discards\n0,1,0.03,0,0,0\n1,0.99,0,5,5,0\n";
        let s = DiffusionSeries::from_trace_csv(csv, 10_000, 9_900.0).unwrap();
        assert_eq!(s.points[0].qbar, vec![0.0, 3.0]);
        assert_eq!(s.points[1].qbar, vec![-1.0, 0.0]);
        assert!(s.to_csv().starts_with("t,qbar1,qbar2\n"));
    }
}
