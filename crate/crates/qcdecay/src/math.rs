//! Small numeric helpers shared across the crate.

/// Neumaier-compensated accumulator. Summation order is fixed by the
/// caller, so totals are reproducible regardless of how inputs were
/// produced.
#[derive(Debug, Clone, Copy, Default)]
pub struct StableSum {
    sum: f64,
    compensation: f64,
}

impl StableSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Compensated sum of an iterator of terms.
pub fn stable_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = StableSum::new();
    for v in values {
        acc.add(v);
    }
    acc.total()
}

/// Trapezoid rule on an arbitrary strictly increasing grid.
pub fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    assert_eq!(grid.len(), values.len());
    let mut acc = StableSum::new();
    for i in 1..grid.len() {
        acc.add(0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]));
    }
    acc.total()
}

/// Uniform grid over `[lo, hi]` with step at most `max_step`, endpoints
/// included.
pub fn uniform_grid(lo: f64, hi: f64, max_step: f64) -> Vec<f64> {
    assert!(hi > lo && max_step > 0.0);
    let n = ((hi - lo) / max_step).ceil() as usize;
    let n = n.max(1);
    let h = (hi - lo) / n as f64;
    (0..=n).map(|i| lo + h * i as f64).collect()
}

/// Least-squares line `y = slope * x + intercept`; also reports the RMS
/// residual.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "linear fit needs at least two points");
    let n = xs.len() as f64;
    let mx = stable_sum(xs.iter().copied()) / n;
    let my = stable_sum(ys.iter().copied()) / n;
    let sxx = stable_sum(xs.iter().map(|&x| (x - mx) * (x - mx)));
    let sxy = stable_sum(xs.iter().zip(ys).map(|(&x, &y)| (x - mx) * (y - my)));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss = stable_sum(
        xs.iter()
            .zip(ys)
            .map(|(&x, &y)| (y - slope * x - intercept).powi(2)),
    );
    (slope, intercept, (ss / n).sqrt())
}

/// Sample mean and unbiased variance.
pub fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    assert!(values.len() >= 2);
    let n = values.len() as f64;
    let mean = stable_sum(values.iter().copied()) / n;
    let ss = stable_sum(values.iter().map(|&v| (v - mean) * (v - mean)));
    (mean, ss / (n - 1.0))
}

/// Median; averages the two central order statistics for even lengths.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}
