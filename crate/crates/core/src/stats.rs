//! Binomial tails and Wilson score intervals.

use serde::Serialize;
use statrs::distribution::{Binomial, DiscreteCDF};

/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> Interval {
    assert!(trials > 0 && successes <= trials);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // the exact endpoints at 0 and n successes are 0 and 1; rounding must not move them inward
    Interval {
        lo: if successes == 0 { 0.0 } else { (center - half).max(0.0) },
        hi: if successes == trials { 1.0 } else { (center + half).min(1.0) },
    }
}

/// `Pr(Bin(n, p) >= m)`.
pub fn binomial_tail_ge(n: u64, p: f64, m: u64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    if m > n {
        return 0.0;
    }
    let dist = Binomial::new(p.clamp(0.0, 1.0), n).expect("probability clamped into [0, 1]");
    dist.sf(m - 1)
}

/// `Pr(Bin(n, p) < m)`.
pub fn binomial_cdf_lt(n: u64, p: f64, m: u64) -> f64 {
    if m == 0 {
        return 0.0;
    }
    if m > n {
        return 1.0;
    }
    let dist = Binomial::new(p.clamp(0.0, 1.0), n).expect("probability clamped into [0, 1]");
    dist.cdf(m - 1)
}
