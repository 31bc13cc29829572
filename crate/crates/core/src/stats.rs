//! Small statistics helpers shared by the Monte Carlo estimators.

use serde::{Deserialize, Serialize};

/// Normal quantile for a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

/// A point estimate with a two-sided confidence interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Estimate {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn overlaps(&self, other: &Estimate) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson(successes: usize, trials: usize, z: f64) -> Estimate {
    if trials == 0 {
        return Estimate { value: 0.0, lo: 0.0, hi: 1.0 };
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Estimate {
        value: p,
        lo: if successes == 0 { 0.0 } else { (centre - half).max(0.0) },
        hi: if successes == trials { 1.0 } else { (centre + half).min(1.0) },
    }
}

/// Sample mean with a normal-approximation interval clamped to `[lo, hi]`.
pub fn mean_interval(samples: &[f64], z: f64, clamp: (f64, f64)) -> Estimate {
    let n = samples.len();
    if n == 0 {
        return Estimate { value: 0.0, lo: clamp.0, hi: clamp.1 };
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let half = z * (var / n as f64).sqrt();
    Estimate {
        value: mean,
        lo: (mean - half).max(clamp.0),
        hi: (mean + half).min(clamp.1),
    }
}

/// Neumaier-compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}
