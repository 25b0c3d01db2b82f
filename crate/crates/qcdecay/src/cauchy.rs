//! The Cauchy (Lorentz) family: density, distribution, characteristic
//! function, convolution semigroup, tail-condition estimators, and the
//! scaled-average limit iteration whose fixed point the decay models
//! reproduce.
//!
//! Conventions: the line `f_C(x - a, Gamma)` has half-width `Gamma/2`,
//! `f_C(x, Gamma) = (Gamma/2pi) / (x^2 + Gamma^2/4)`, and the
//! characteristic function is `chi(t) = exp(-i a t - Gamma |t| / 2)`
//! with the `exp(-i x t)` Fourier sign used throughout the crate.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::math::StableSum;
use crate::model::RandomSeed;

#[derive(Debug, Error, PartialEq)]
pub enum CauchyError {
    #[error("width must be nonnegative")]
    NegativeWidth,
    #[error("step points must be strictly increasing")]
    UnorderedPoints,
    #[error("step masses must be nonnegative and sum to 1 within 1e-10 (got {sum})")]
    BadMass { sum: f64 },
    #[error("coupling too strong: v^2 must not exceed 3 omega^2 / pi^2")]
    MassBudgetExceeded,
    #[error("randomized occupation draw left negative weight at the origin")]
    NegativeOriginMass,
    #[error("k_max must be at least 1")]
    EmptyExample,
}

/// Center `a` and full width `Gamma` of a Cauchy line. `width == 0` is
/// allowed only as the degenerate step-function limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyParams {
    pub center: f64,
    pub width: f64,
}

impl CauchyParams {
    pub fn new(center: f64, width: f64) -> Result<Self, CauchyError> {
        if width < 0.0 {
            return Err(CauchyError::NegativeWidth);
        }
        Ok(Self { center, width })
    }
}

/// Density `(Gamma/2pi) / ((x-a)^2 + Gamma^2/4)`.
pub fn cauchy_pdf(x: f64, p: &CauchyParams) -> f64 {
    assert!(p.width > 0.0, "cauchy_pdf needs a positive width");
    let d = x - p.center;
    p.width / (2.0 * PI * (d * d + p.width * p.width / 4.0))
}

/// Distribution function `1/2 + (1/pi) arctan(2(y-a)/Gamma)`; the
/// degenerate `width == 0` case is the unit step at the center.
pub fn cauchy_cdf(y: f64, p: &CauchyParams) -> f64 {
    if p.width == 0.0 {
        return if y < p.center {
            0.0
        } else if y > p.center {
            1.0
        } else {
            0.5
        };
    }
    0.5 + (2.0 * (y - p.center) / p.width).atan() / PI
}

/// Characteristic function `exp(-i a t - Gamma |t| / 2)`.
pub fn cauchy_cf(t: f64, p: &CauchyParams) -> Complex64 {
    (Complex64::new(0.0, -p.center * t) - Complex64::new(p.width * t.abs() / 2.0, 0.0)).exp()
}

/// Convolution semigroup: parameters add.
pub fn convolve_cauchy(p1: &CauchyParams, p2: &CauchyParams) -> CauchyParams {
    CauchyParams {
        center: p1.center + p2.center,
        width: p1.width + p2.width,
    }
}

/// Discrete distribution with point masses; masses sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDistribution {
    points: Vec<f64>,
    masses: Vec<f64>,
    cumulative: Vec<f64>,
}

impl StepDistribution {
    pub fn new(points: Vec<f64>, masses: Vec<f64>) -> Result<Self, CauchyError> {
        if points.len() != masses.len() || points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CauchyError::UnorderedPoints);
        }
        if masses.iter().any(|&m| m < 0.0) {
            return Err(CauchyError::BadMass { sum: f64::NAN });
        }
        let sum: f64 = crate::math::stable_sum(masses.iter().copied());
        if (sum - 1.0).abs() > 1e-10 {
            return Err(CauchyError::BadMass { sum });
        }
        let (points, masses): (Vec<f64>, Vec<f64>) = points
            .into_iter()
            .zip(masses)
            .filter(|&(_, m)| m > 0.0)
            .unzip();
        let mut cumulative = Vec::with_capacity(masses.len());
        let mut acc = StableSum::new();
        for &m in &masses {
            acc.add(m);
            cumulative.push(acc.total());
        }
        Ok(Self {
            points,
            masses,
            cumulative,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Right-continuous distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        let idx = self.points.partition_point(|&p| p <= x);
        if idx == 0 {
            0.0
        } else {
            self.cumulative[idx - 1]
        }
    }

    /// Characteristic function `sum_k m_k exp(-i x_k t)`.
    pub fn cf(&self) -> CharacteristicFn {
        let points = Arc::new(self.points.clone());
        let masses = Arc::new(self.masses.clone());
        CharacteristicFn::from_fn("step distribution", move |t| {
            let mut re = StableSum::new();
            let mut im = StableSum::new();
            for (&x, &m) in points.iter().zip(masses.iter()) {
                let phase = -x * t;
                re.add(m * phase.cos());
                im.add(m * phase.sin());
            }
            Complex64::new(re.total(), im.total())
        })
    }

    /// Centering constant as a mass-weighted sum,
    /// `beta_k = gamma sum_j m_j sin(x_j / (k gamma))`.
    pub fn centering_constant(&self, k: u32, gamma_scale: f64) -> f64 {
        assert!(k >= 1 && gamma_scale > 0.0);
        let s = 1.0 / (k as f64 * gamma_scale);
        let mut acc = StableSum::new();
        for (&x, &m) in self.points.iter().zip(&self.masses) {
            acc.add(m * (x * s).sin());
        }
        gamma_scale * acc.total()
    }

    /// Interquartile range; equals `Gamma` exactly for a Cauchy law, a
    /// scale estimator robust to the missing moments.
    pub fn interquartile_width(&self) -> f64 {
        self.quantile(0.75) - self.quantile(0.25)
    }

    /// Smallest point with `cdf >= q`.
    pub fn quantile(&self, q: f64) -> f64 {
        assert!((0.0..=1.0).contains(&q));
        let idx = self.cumulative.partition_point(|&c| c < q);
        self.points[idx.min(self.points.len() - 1)]
    }
}

/// Lazily evaluated characteristic function.
#[derive(Clone)]
pub struct CharacteristicFn {
    eval: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
    description: String,
}

impl std::fmt::Debug for CharacteristicFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CharacteristicFn")
            .field("description", &self.description)
            .finish()
    }
}

impl CharacteristicFn {
    pub fn from_fn(
        description: impl Into<String>,
        eval: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            eval: Arc::new(eval),
            description: description.into(),
        }
    }

    pub fn cauchy(p: CauchyParams) -> Self {
        Self::from_fn(format!("cauchy(a={}, gamma={})", p.center, p.width), {
            move |t| cauchy_cf(t, &p)
        })
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        (self.eval)(t)
    }

    pub fn description(&self) -> &str {
        &self.description
    }
}

/// Centering constant from a characteristic function:
/// `beta_k = gamma Im chi(-1/(k gamma))`, exactly the sine integral
/// under the crate's `exp(-i x t)` sign convention.
pub fn centering_constant(chi: &CharacteristicFn, k: u32, gamma_scale: f64) -> f64 {
    assert!(k >= 1 && gamma_scale > 0.0);
    gamma_scale * chi.eval(-1.0 / (k as f64 * gamma_scale)).im
}

/// One step of the scaled-average iteration,
/// `t -> [chi(t/n) exp(i beta_n t)]^n` with `beta_n` computed from the
/// input. Centered Cauchy characteristic functions are fixed points;
/// for tail-condition distributions the iterates converge to
/// `exp(-Gamma |t| / 2)`.
pub fn iterate_cf_limit(chi: &CharacteristicFn, n: u32, gamma_scale: f64) -> CharacteristicFn {
    assert!(n >= 1);
    let beta = centering_constant(chi, n, gamma_scale);
    let inner = chi.clone();
    let description = format!("scaled average (n = {n}) of {}", chi.description());
    CharacteristicFn::from_fn(description, move |t| {
        let factor = inner.eval(t / n as f64) * Complex64::new(0.0, beta * t).exp();
        factor.powu(n)
    })
}

/// Tail products `(x [1 - F(x)], x F(-x))` at `x = x_probe`; both tend
/// to `Gamma / 2 pi` for distributions in the Cauchy domain.
pub fn tail_limit(f: &StepDistribution, x_probe: f64) -> (f64, f64) {
    (
        x_probe * (1.0 - f.cdf(x_probe)),
        x_probe * f.cdf(-x_probe),
    )
}

/// Second-order occupation numbers of a level ladder `E_k = k omega`
/// coupled to the origin: masses `v^2 / (k omega)^2` at `k omega` for
/// `0 < |k| <= k_max`, remainder at the origin. The randomized variant
/// replaces `v^2` by independent `|xi_k|^2` draws. Truncated tail mass
/// beyond `k_max` is parked on the outermost points so the masses stay
/// normalized.
pub fn example3_distribution(
    v: f64,
    omega: f64,
    k_max: u32,
    randomized: bool,
    seed: RandomSeed,
) -> Result<StepDistribution, CauchyError> {
    if k_max < 1 {
        return Err(CauchyError::EmptyExample);
    }
    let v2 = v * v;
    let omega2 = omega * omega;
    if v2 > 3.0 * omega2 / (PI * PI) {
        return Err(CauchyError::MassBudgetExceeded);
    }
    let k_max = k_max as usize;

    let mut partial = StableSum::new();
    for k in 1..=k_max {
        let kk = k as f64;
        partial.add(1.0 / (kk * kk));
    }
    // zeta(2) tail beyond k_max, per side
    let tail = (v2 / omega2) * (PI * PI / 6.0 - partial.total());

    let mut points = Vec::with_capacity(2 * k_max + 1);
    let mut masses = Vec::with_capacity(2 * k_max + 1);
    let mut rng = seed.rng();
    let mut mass_sum = StableSum::new();
    let scale = (v2 / 2.0).sqrt();
    let mut origin_index = 0;
    for k in -(k_max as i64)..=(k_max as i64) {
        if k == 0 {
            origin_index = points.len();
            points.push(0.0);
            masses.push(0.0);
            continue;
        }
        let kk = k as f64;
        let weight = if randomized {
            let (u, w) = crate::model::normal_pair(&mut rng);
            scale * scale * (u * u + w * w)
        } else {
            v2
        };
        let mut m = weight / (kk * kk * omega2);
        if k.unsigned_abs() as usize == k_max {
            m += tail;
        }
        points.push(kk * omega);
        masses.push(m);
        mass_sum.add(m);
    }

    let origin = 1.0 - mass_sum.total();
    if origin < 0.0 {
        return Err(CauchyError::NegativeOriginMass);
    }
    masses[origin_index] = origin;
    StepDistribution::new(points, masses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{stable_sum, trapezoid, uniform_grid};

    #[test]
    fn pdf_peak_and_half_width() {
        let p = CauchyParams::new(0.3, 1.41).unwrap();
        let peak = cauchy_pdf(0.3, &p);
        assert!((peak - 2.0 / (PI * 1.41)).abs() < 1e-15);
        for sign in [-1.0, 1.0] {
            let half = cauchy_pdf(0.3 + sign * 1.41 / 2.0, &p);
            assert!((half - peak / 2.0).abs() < 1e-15);
            assert!((half - 1.0 / (PI * 1.41)).abs() < 1e-15);
        }
    }

    #[test]
    fn pdf_normalizes_by_quadrature() {
        let p = CauchyParams::new(0.0, 2.0).unwrap();
        let grid = uniform_grid(-2e4, 2e4, 2.0 / 50.0);
        let vals: Vec<f64> = grid.iter().map(|&x| cauchy_pdf(x, &p)).collect();
        let integral = trapezoid(&grid, &vals);
        assert!((integral - 1.0).abs() < 1e-4, "integral = {integral}");
    }

    #[test]
    fn cdf_quartiles_and_degenerate_limit() {
        let p = CauchyParams::new(1.0, 0.8).unwrap();
        assert!((cauchy_cdf(1.0, &p) - 0.5).abs() < 1e-15);
        assert!((cauchy_cdf(1.4, &p) - 0.75).abs() < 1e-15);
        let step = CauchyParams::new(1.0, 0.0).unwrap();
        assert_eq!(cauchy_cdf(0.999, &step), 0.0);
        assert_eq!(cauchy_cdf(1.0, &step), 0.5);
        assert_eq!(cauchy_cdf(1.001, &step), 1.0);
    }

    #[test]
    fn cf_values_and_multiplicativity() {
        let p = CauchyParams::new(0.0, 2.0).unwrap();
        assert!((cauchy_cf(0.0, &p) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((cauchy_cf(1.0, &p).re - (-1.0f64).exp()).abs() < 1e-15);
        assert!(cauchy_cf(1.0, &p).im.abs() < 1e-15);
        let p1 = CauchyParams::new(0.7, 1.0).unwrap();
        let p2 = CauchyParams::new(-0.2, 2.5).unwrap();
        let sum = convolve_cauchy(&p1, &p2);
        for &t in &[-3.0, 0.4, 11.0] {
            let prod = cauchy_cf(t, &p1) * cauchy_cf(t, &p2);
            assert!((prod - cauchy_cf(t, &sum)).norm() < 1e-15);
        }
    }

    #[test]
    fn convolution_parameters_add() {
        let a = CauchyParams::new(0.0, 1.0).unwrap();
        let b = convolve_cauchy(&a, &a);
        assert_eq!((b.center, b.width), (0.0, 2.0));
        let c = convolve_cauchy(
            &CauchyParams::new(3.0, 1.0).unwrap(),
            &CauchyParams::new(-3.0, 2.0).unwrap(),
        );
        assert_eq!((c.center, c.width), (0.0, 3.0));
    }

    #[test]
    fn grid_convolution_matches_semigroup() {
        let p1 = CauchyParams::new(0.0, 1.0).unwrap();
        let p2 = CauchyParams::new(0.0, 1.0).unwrap();
        let target = convolve_cauchy(&p1, &p2);
        let gamma_min = p1.width.min(p2.width);
        let gamma_max = p1.width.max(p2.width);
        let grid = uniform_grid(-50.0 * gamma_max, 50.0 * gamma_max, gamma_min / 50.0);
        let f1: Vec<f64> = grid.iter().map(|&x| cauchy_pdf(x, &p1)).collect();
        let mut sup = 0.0f64;
        for (iy, &y) in grid.iter().enumerate().step_by(25) {
            let integrand: Vec<f64> = grid
                .iter()
                .zip(&f1)
                .map(|(&x, &f)| f * cauchy_pdf(y - x, &p2))
                .collect();
            let conv = trapezoid(&grid, &integrand);
            sup = sup.max((conv - cauchy_pdf(y, &target)).abs());
            let _ = iy;
        }
        assert!(sup <= 1e-3, "sup convolution error {sup}");
    }

    #[test]
    fn cf_matches_numeric_fourier_transform() {
        let p = CauchyParams::new(0.0, 1.3).unwrap();
        let grid = uniform_grid(-4000.0, 4000.0, 1.3 / 60.0);
        let pdf: Vec<f64> = grid.iter().map(|&x| cauchy_pdf(x, &p)).collect();
        for &t in &[0.5, 2.0, 7.0] {
            let re: Vec<f64> = grid
                .iter()
                .zip(&pdf)
                .map(|(&x, &f)| f * (x * t).cos())
                .collect();
            let im: Vec<f64> = grid
                .iter()
                .zip(&pdf)
                .map(|(&x, &f)| -f * (x * t).sin())
                .collect();
            let ft = Complex64::new(trapezoid(&grid, &re), trapezoid(&grid, &im));
            assert!((ft - cauchy_cf(t, &p)).norm() < 1e-3, "t = {t}");
        }
    }

    #[test]
    fn centering_constants() {
        let sym = StepDistribution::new(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
        assert!(sym.centering_constant(3, 1.0).abs() < 1e-15);
        // point mass at c: the total recentring k beta_k tends to c
        let point = StepDistribution::new(vec![2.5], vec![1.0]).unwrap();
        let beta = point.centering_constant(1000, 1.0);
        assert!((1000.0 * beta - 2.5).abs() < 1e-5);
        // the worked ladder example is centered
        let ex = example3_distribution(0.1, 1.0, 2000, false, 0.into()).unwrap();
        assert!(ex.centering_constant(8, 1.0).abs() < 1e-14);
        // CF route agrees with the mass-weighted sum
        let via_cf = centering_constant(&ex.cf(), 8, 1.0);
        assert!((via_cf - ex.centering_constant(8, 1.0)).abs() < 1e-12);
    }

    #[test]
    fn cauchy_cf_is_a_fixed_point() {
        let p = CauchyParams::new(0.0, 1.41).unwrap();
        let chi = CharacteristicFn::cauchy(p);
        for &n in &[1u32, 4, 64, 256] {
            let iterated = iterate_cf_limit(&chi, n, 1.0);
            for &t in &[-4.0, -0.3, 0.0, 0.9, 5.0] {
                let diff = (iterated.eval(t) - cauchy_cf(t, &p)).norm();
                assert!(diff < 1e-12, "n = {n}, t = {t}: {diff}");
            }
        }
    }

    #[test]
    fn single_iteration_recenters() {
        // n = 1 applies one centering factor and nothing else
        let d = StepDistribution::new(vec![0.0, 4.0], vec![0.25, 0.75]).unwrap();
        let chi = d.cf();
        let beta = centering_constant(&chi, 1, 1.0);
        let once = iterate_cf_limit(&chi, 1, 1.0);
        for &t in &[0.3, 1.1] {
            let expect = chi.eval(t) * Complex64::new(0.0, beta * t).exp();
            assert!((once.eval(t) - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn tail_limits_of_the_ladder_example() {
        let (v, omega) = (0.1, 1.0);
        let f = example3_distribution(v, omega, 1_000_000, false, 0.into()).unwrap();
        let expect = v * v / omega; // Gamma / 2 pi = rho v^2
        let (upper, lower) = tail_limit(&f, 100.0 * omega);
        assert!((upper - expect).abs() < 0.05 * expect, "upper = {upper}");
        assert!((lower - expect).abs() < 0.05 * expect, "lower = {lower}");
    }

    #[test]
    fn tail_limit_of_discretized_cauchy() {
        // step approximation of F_C truncated at +-1e6 Gamma
        let gamma = 1.0;
        let p = CauchyParams::new(0.0, gamma).unwrap();
        let n = 400_000usize;
        let lo = -1e6 * gamma;
        let hi = 1e6 * gamma;
        let h = (hi - lo) / n as f64;
        let points: Vec<f64> = (0..=n).map(|i| lo + h * i as f64).collect();
        let mut masses = vec![0.0; points.len()];
        masses[0] = cauchy_cdf(points[0], &p);
        for i in 1..points.len() {
            masses[i] = cauchy_cdf(points[i], &p) - cauchy_cdf(points[i - 1], &p);
        }
        let total: f64 = stable_sum(masses.iter().copied());
        masses[points.len() - 1] += 1.0 - total;
        let f = StepDistribution::new(points, masses).unwrap();
        let expect = gamma / (2.0 * PI);
        let (upper, lower) = tail_limit(&f, 1e3 * gamma);
        assert!((upper - expect).abs() < 0.02 * expect, "upper = {upper}");
        assert!((lower - expect).abs() < 0.02 * expect, "lower = {lower}");
        // beyond the support both tails are empty
        let (u2, l2) = tail_limit(&f, 2e6 * gamma);
        assert_eq!((u2, l2), (0.0, 0.0));
    }

    #[test]
    fn ladder_example_masses() {
        let (v, omega) = (0.1, 1.0);
        let f = example3_distribution(v, omega, 100_000, false, 0.into()).unwrap();
        let p1 = f.masses()[f.points().partition_point(|&x| x < omega)];
        assert!((p1 - 0.01).abs() < 1e-15);
        let p0 = f.masses()[f.points().partition_point(|&x| x < 0.0)];
        // zeta(2) oracle: p0 = 1 - (pi^2/3)(v/omega)^2
        let mut zeta2 = StableSum::new();
        for k in 1..=20_000_000u64 {
            zeta2.add(1.0 / (k as f64 * k as f64));
        }
        let oracle = 1.0 - 2.0 * (v / omega).powi(2) * zeta2.total();
        assert!((p0 - oracle).abs() < 1e-7, "p0 = {p0}, oracle = {oracle}");
        assert!((p0 - (1.0 - PI * PI / 3.0 * 0.01)).abs() < 1e-12);
    }

    #[test]
    fn ladder_example_rejects_strong_coupling() {
        let omega = 1.0;
        let v_limit = (3.0 / (PI * PI)).sqrt() * omega;
        assert!(example3_distribution(v_limit * 1.01, omega, 100, false, 0.into()).is_err());
        assert!(example3_distribution(v_limit * 0.99, omega, 100, false, 0.into()).is_ok());
    }

    #[test]
    fn randomized_ladder_tail_variance_decays_cubically() {
        let (v, omega) = (0.1, 1.0);
        let probes = [10.0, 20.0, 40.0, 80.0];
        let replicas = 300u64;
        let mut tails: Vec<Vec<f64>> = vec![Vec::new(); probes.len()];
        for r in 0..replicas {
            let f = example3_distribution(v, omega, 2000, true, (17, r).into()).unwrap();
            for (i, &x) in probes.iter().enumerate() {
                tails[i].push(1.0 - f.cdf(x));
            }
        }
        let log_x: Vec<f64> = probes.iter().map(|x| x.ln()).collect();
        let log_var: Vec<f64> = tails
            .iter()
            .map(|t| crate::math::mean_and_variance(t).1.ln())
            .collect();
        let (slope, _, _) = crate::math::linear_fit(&log_x, &log_var);
        assert!(
            (-3.6..=-2.4).contains(&slope),
            "variance decay exponent {slope}"
        );
        // the ensemble mean still satisfies the tail condition
        let mean_tail = crate::math::stable_sum(tails[2].iter().copied()) / replicas as f64;
        let expect = v * v / omega;
        assert!((probes[2] * mean_tail - expect).abs() < 0.1 * expect);
    }

    #[test]
    fn sample_mean_of_cauchy_draws_is_cauchy() {
        // n-sample averages of i.i.d. Cauchy draws keep the same law;
        // KS test at the 1% level against the parent parameters
        use rand::Rng;
        let p = CauchyParams::new(0.0, 1.0).unwrap();
        let mut rng = RandomSeed::new(5, 0).rng();
        let n = 1000;
        let replicas = 10_000;
        let mut means = Vec::with_capacity(replicas);
        for _ in 0..replicas {
            let mut acc = StableSum::new();
            for _ in 0..n {
                let u: f64 = rng.gen();
                acc.add((PI * (u - 0.5)).tan() * p.width / 2.0 + p.center);
            }
            means.push(acc.total() / n as f64);
        }
        means.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let m = means.len() as f64;
        let mut ks = 0.0f64;
        for (i, &x) in means.iter().enumerate() {
            let f = cauchy_cdf(x, &p);
            ks = ks.max((f - i as f64 / m).abs()).max(((i + 1) as f64 / m - f).abs());
        }
        // critical value c(0.01)/sqrt(M) = 1.628 / 100
        assert!(ks < 1.628 / m.sqrt(), "KS statistic {ks}");
    }

    #[test]
    fn step_distribution_validation() {
        assert!(StepDistribution::new(vec![0.0, 0.0], vec![0.5, 0.5]).is_err());
        assert!(StepDistribution::new(vec![0.0, 1.0], vec![0.6, 0.6]).is_err());
        assert!(StepDistribution::new(vec![0.0, 1.0], vec![0.5, 0.5]).is_ok());
    }
}
