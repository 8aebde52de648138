/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.959963984540054;

/// Wilson score interval for `successes` out of `trials` at 95%.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let m = trials as f64;
    let p = successes as f64 / m;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / m;
    let centre = (p + z2 / (2.0 * m)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / m + z2 / (4.0 * m * m)).sqrt() / denom;
    // keep the point estimate inside despite rounding at p = 0 or 1
    ((centre - half).max(0.0).min(p), (centre + half).min(1.0).max(p))
}

/// Fraction of samples above a threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exceedance {
    pub delta: f64,
    pub count: usize,
    pub total: usize,
    pub phat: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Exceedance {
    pub fn from_flags(delta: f64, flags: impl IntoIterator<Item = bool>) -> Self {
        let (mut count, mut total) = (0, 0);
        for f in flags {
            total += 1;
            count += f as usize;
        }
        let (lo, hi) = wilson_interval(count, total);
        Self {
            delta,
            count,
            total,
            phat: if total == 0 { 0.0 } else { count as f64 / total as f64 },
            lo,
            hi,
        }
    }
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Median (mean of the middle pair for even sizes); `NaN` when empty.
pub fn median(values: &[f64]) -> f64 {
    let v = sorted(values);
    match v.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => v[n / 2],
        n => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

/// Mean summed in ascending order, so the result does not depend on the
/// order of the input.
pub fn sorted_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    sorted(values).iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance, again independent of input order.
pub(crate) fn sorted_variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mean = sorted_mean(values);
    let sq: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    sorted(&sq).iter().sum::<f64>() / (values.len() - 1) as f64
}
