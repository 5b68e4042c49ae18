use super::trace::Trace;
use super::SimError;
use crate::stats::{batch_estimate, Estimate};

pub const DEFAULT_BATCHES: usize = 20;

/// Default warmup: the first fifth of the horizon.
pub fn default_warmup(horizon: f64) -> f64 {
    0.2 * horizon
}

/// Time averages of a trace over a window, with batch-means errors.
#[derive(Debug, Clone, PartialEq)]
pub struct StationarySummary {
    pub window: (f64, f64),
    pub lambda: f64,
    /// `q_bar[i-1]` = time average of `q_i` over the window.
    pub q_bar: Vec<f64>,
    /// `batch_q[b][i-1]` = time average of `q_i` within batch `b`.
    pub batch_q: Vec<Vec<f64>>,
    /// Mean FCFS wait per batch of arrival times (batches without any
    /// completed wait are skipped), when waits were recorded.
    pub fcfs_batches: Option<Vec<f64>>,
    /// Mean of all FCFS waits of tasks arriving within the window.
    pub fcfs_mean: Option<f64>,
    pub fcfs_count: u64,
}

impl StationarySummary {
    pub fn n_batches(&self) -> usize {
        self.batch_q.len()
    }

    fn estimate_of(&self, f: impl Fn(&[f64]) -> f64) -> Estimate {
        let batches: Vec<f64> = self.batch_q.iter().map(|b| f(b)).collect();
        Estimate::new(f(&self.q_bar), batch_estimate(&batches).se)
    }

    /// Time-averaged `q_i` (`i ≥ 1`).
    pub fn q(&self, i: usize) -> Estimate {
        self.estimate_of(|q| q.get(i - 1).copied().unwrap_or(0.0))
    }

    /// `Σ_{i≥m} q̄_i`.
    pub fn tail_sum(&self, m: usize) -> Estimate {
        self.estimate_of(|q| q.iter().skip(m.saturating_sub(1)).sum::<f64>() + 0.0)
    }

    /// Mean waiting time by Little's law, `λ⁻¹ Σ_{i≥2} q̄_i`.
    pub fn waiting_time(&self) -> Estimate {
        let e = self.tail_sum(2);
        Estimate::new(e.mean / self.lambda, e.se / self.lambda)
    }

    /// Directly measured FCFS mean wait.
    pub fn fcfs_wait(&self) -> Option<Estimate> {
        let batches = self.fcfs_batches.as_ref()?;
        let mean = self.fcfs_mean?;
        (batches.len() >= 2).then(|| Estimate::new(mean, batch_estimate(batches).se))
    }
}

/// [`stationary_stats_with`] using [`DEFAULT_BATCHES`] batches.
pub fn stationary_stats(trace: &Trace, warmup: f64) -> Result<StationarySummary, SimError> {
    stationary_stats_with(trace, warmup, DEFAULT_BATCHES)
}

/// Time averages over `[t0, T]` where `t0` is the first sample time at or
/// after `warmup`. The sample intervals of the window are split into
/// `batches` contiguous groups for the standard errors.
pub fn stationary_stats_with(trace: &Trace, warmup: f64, batches: usize) -> Result<StationarySummary, SimError> {
    let horizon = trace.final_time();
    if !(warmup >= 0.0 && warmup < horizon) {
        return Err(SimError::InvalidConfig(format!("warmup {warmup} must lie in [0, {horizon})")));
    }
    let batches = batches.max(2);
    let tol = 1e-9 * horizon.max(1.0);
    let start = trace.times.iter().position(|&t| t >= warmup - tol).unwrap_or(trace.n_samples() - 1);
    let intervals = trace.n_samples() - 1 - start;
    if intervals < batches {
        return Err(SimError::ShortWindow { warmup, intervals, needed: batches });
    }
    let n = trace.n_servers as f64;
    let levels = trace.areas[start..].iter().map(Vec::len).max().unwrap_or(0);
    let bounds: Vec<usize> = (0..=batches).map(|b| start + b * intervals / batches).collect();
    let average = |from: usize, to: usize| -> Vec<f64> {
        let mut acc = vec![0.0; levels];
        for a in &trace.areas[from..to] {
            for (x, y) in acc.iter_mut().zip(a) {
                *x += y;
            }
        }
        let dt = trace.times[to] - trace.times[from];
        acc.iter().map(|x| x / dt / n).collect()
    };
    let q_bar = average(start, start + intervals);
    let batch_q: Vec<Vec<f64>> = bounds.windows(2).map(|w| average(w[0], w[1])).collect();

    let (mut fcfs_batches, mut fcfs_mean, mut fcfs_count) = (None, None, 0);
    if let Some(waits) = &trace.waits {
        let t0 = trace.times[start];
        let mut sums = vec![(0.0f64, 0u64); batches];
        for w in waits.iter().filter(|w| w.arrival >= t0) {
            let b = bounds[1..].partition_point(|&e| trace.times[e] <= w.arrival).min(batches - 1);
            sums[b].0 += w.wait;
            sums[b].1 += 1;
        }
        let total: f64 = sums.iter().map(|s| s.0).sum();
        fcfs_count = sums.iter().map(|s| s.1).sum();
        if fcfs_count > 0 {
            fcfs_mean = Some(total / fcfs_count as f64);
        }
        fcfs_batches = Some(sums.iter().filter(|s| s.1 > 0).map(|s| s.0 / s.1 as f64).collect());
    }
    Ok(StationarySummary {
        window: (trace.times[start], horizon),
        lambda: trace.lambda,
        q_bar,
        batch_q,
        fcfs_batches,
        fcfs_mean,
        fcfs_count,
    })
}
