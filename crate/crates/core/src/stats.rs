//! Small numeric helpers shared by the simulator and the experiment runner.

/// `⌈x⌉` tolerant to floating-point noise (`0.1 · 30` is `3`, not `4`).
pub fn ceil_count(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r.max(0.0) as usize
    } else {
        x.ceil().max(0.0) as usize
    }
}

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn new(mean: f64, se: f64) -> Self {
        Self { mean, se }
    }

    /// Standard error of `self - other` for independent estimates.
    pub fn combined_se(&self, other: &Estimate) -> f64 {
        (self.se * self.se + other.se * other.se).sqrt()
    }

    /// `|self - value| ≤ k·se`.
    pub fn within(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.se
    }

    /// Mean of independent estimates.
    pub fn average(items: &[Estimate]) -> Estimate {
        let n = items.len() as f64;
        let mean = items.iter().map(|e| e.mean).sum::<f64>() / n;
        let var = items.iter().map(|e| e.se * e.se).sum::<f64>() / (n * n);
        Estimate { mean, se: var.sqrt() }
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator).
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Mean of batch means with standard error `sd / √batches`.
pub fn batch_estimate(batch_means: &[f64]) -> Estimate {
    Estimate { mean: mean(batch_means), se: sample_sd(batch_means) / (batch_means.len() as f64).sqrt() }
}

/// Ordinary least squares `y = a + b·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub slope_se: f64,
}

impl LinearFit {
    pub fn t_stat(&self) -> f64 {
        self.slope / self.slope_se
    }
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 3 || n != y.len() {
        return None;
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let sigma2 = rss / (n - 2) as f64;
    Some(LinearFit { intercept, slope, slope_se: (sigma2 / sxx).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceil_count_ignores_rounding_noise() {
        assert_eq!(ceil_count(0.1 * 30.0), 3);
        assert_eq!(ceil_count(0.2 * 10.0), 2);
        assert_eq!(ceil_count(2.01), 3);
        assert_eq!(ceil_count(0.3 * 10.0), 3);
        assert_eq!(ceil_count(0.0), 0);
        assert_eq!(ceil_count(0.25 * 4.0), 1);
    }

    #[test]
    fn fit_recovers_line() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v + if (*v as i32) % 2 == 0 { 0.01 } else { -0.01 }).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-2);
        assert!(f.t_stat() < -10.0);
    }

    #[test]
    fn batch_estimate_basic() {
        let e = batch_estimate(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        assert!((e.se - (1.666_666_666_666_666_7f64).sqrt() / 2.0).abs() < 1e-12);
    }
}
