//! Ensemble sweeps and fluctuation statistics: the variance law for
//! `Im H_eff`, the dimensionless fluctuation parameter `kappa`,
//! Chebyshev exceedance bounds, spectral/coupling uniformity
//! diagnostics, Kolmogorov-Smirnov distances, and decay-rate fits.

use rayon::prelude::*;
use thiserror::Error;

use crate::cauchy::{cauchy_cdf, CauchyParams, StepDistribution};
use crate::math::{mean_and_variance, StableSum};
use crate::model::{
    build_rank1_model, derived_params, make_spectrum, sample_couplings, DecayModel, DerivedParams,
    RandomSeed, SpectrumRecipe,
};
use crate::resolvent::{effective_hamiltonian, window_j};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("ensemble needs at least two members")]
    TooFewMembers,
    #[error("model construction failed: {0}")]
    Model(#[from] crate::model::ModelError),
    #[error("fit window must lie inside the sampled times")]
    WindowOutsideSamples,
    #[error("survival samples inside the fit window must be positive")]
    NonPositiveSample,
}

/// Parameters of a coupled-ensemble sweep: the spectrum is realized
/// once and couplings are redrawn per member, unless
/// `resample_spectrum` also redraws the reservoir each time.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub recipe: SpectrumRecipe,
    pub n_levels: usize,
    pub interval: (f64, f64),
    pub level_energy: f64,
    pub variance_v2: f64,
    pub resample_spectrum: bool,
}

impl EnsembleSpec {
    pub fn derived(&self) -> DerivedParams {
        let width = self.interval.1 - self.interval.0;
        let rho_b = self.n_levels as f64 / width;
        let gamma = 2.0 * std::f64::consts::PI * rho_b * self.variance_v2;
        DerivedParams {
            gamma,
            n_gamma: rho_b * gamma,
            omega_b: 1.0 / rho_b,
            rho_b,
        }
    }
}

/// Sample statistics of `Im H_eff(x - i eps)` over an ensemble, next to
/// the predicted mean `(Gamma/2) J(x, eps)` and predicted variance
/// `pi v^4 / (2 eps omega_B)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSummary {
    pub sample_mean: f64,
    pub sample_variance: f64,
    pub n_members: usize,
    pub predicted_mean: f64,
    pub predicted_variance: f64,
}

/// Stream layout inside a sweep: member k draws couplings on stream
/// `base + k`; resampled spectra live on streams offset by 2^32.
const SPECTRUM_STREAM_OFFSET: u64 = 1 << 32;

pub fn ensemble_imh_stats(
    spec: &EnsembleSpec,
    x: f64,
    epsilon: f64,
    n_members: usize,
    seed: RandomSeed,
) -> Result<EnsembleSummary, StatsError> {
    if n_members < 2 {
        return Err(StatsError::TooFewMembers);
    }
    assert!(epsilon > 0.0);
    let base_spectrum = make_spectrum(
        &spec.recipe,
        spec.n_levels,
        spec.interval,
        seed.with_stream(SPECTRUM_STREAM_OFFSET),
    )?;
    let values: Vec<f64> = (0..n_members)
        .into_par_iter()
        .map(|k| {
            let spectrum = if spec.resample_spectrum {
                make_spectrum(
                    &spec.recipe,
                    spec.n_levels,
                    spec.interval,
                    seed.with_stream(SPECTRUM_STREAM_OFFSET + 1 + k as u64),
                )
                .expect("member spectrum")
            } else {
                base_spectrum.clone()
            };
            let couplings = sample_couplings(
                spec.variance_v2,
                spec.n_levels,
                seed.with_stream(seed.stream + k as u64),
            )
            .expect("member couplings");
            let model = build_rank1_model(spec.level_energy, spectrum, couplings)
                .expect("member model");
            effective_hamiltonian(&model, x, epsilon).im
        })
        .collect();
    let (sample_mean, sample_variance) = mean_and_variance(&values);
    let dp = spec.derived();
    Ok(EnsembleSummary {
        sample_mean,
        sample_variance,
        n_members,
        predicted_mean: dp.gamma / 2.0 * window_j(x, epsilon, spec.interval),
        predicted_variance: std::f64::consts::PI * spec.variance_v2 * spec.variance_v2
            / (2.0 * epsilon * dp.omega_b),
    })
}

/// Relative fluctuation scale `kappa = 1 / sqrt(2 pi rho_B eps)`.
pub fn kappa(rho_b: f64, epsilon: f64) -> f64 {
    assert!(rho_b > 0.0 && epsilon > 0.0);
    1.0 / (2.0 * std::f64::consts::PI * rho_b * epsilon).sqrt()
}

/// Chebyshev bound on `P(|Im H_eff - <Im H_eff>| >= delta)`:
/// `min(1, (1/(2 pi N_eps)) (Gamma / 2 delta)^2)`.
pub fn chebyshev_bound(gamma: f64, n_epsilon: f64, delta: f64) -> f64 {
    assert!(gamma > 0.0 && n_epsilon > 0.0 && delta > 0.0);
    let bound = (gamma / (2.0 * delta)).powi(2) / (2.0 * std::f64::consts::PI * n_epsilon);
    bound.min(1.0)
}

/// Largest deviation of `(omega_B eps / pi) sum_j ((x-E_j)^2 + eps^2)^-1`
/// from unity over the probes; probes within `eps` of an endpoint are
/// skipped (the window correction dominates there).
pub fn uniformity_spectrum(
    spectrum: &crate::model::Spectrum,
    epsilon: f64,
    probes: &[f64],
) -> f64 {
    assert!(epsilon > 0.0);
    let (lo, hi) = spectrum.interval();
    let prefactor = spectrum.mean_spacing() * epsilon / std::f64::consts::PI;
    probes
        .iter()
        .filter(|&&x| x - lo >= epsilon && hi - x >= epsilon)
        .map(|&x| {
            let mut sum = StableSum::new();
            for &e in spectrum.energies() {
                let d = x - e;
                sum.add(1.0 / (d * d + epsilon * epsilon));
            }
            (prefactor * sum.total() - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Coupling-weighted uniformity,
/// `(omega_B eps / (pi v^2)) sum_j |xi_j|^2 ((x-E_j)^2 + eps^2)^-1`,
/// measured against unity as above.
pub fn uniformity_couplings(model: &DecayModel, epsilon: f64, probes: &[f64]) -> f64 {
    assert!(epsilon > 0.0);
    let spectrum = model.spectrum();
    let (lo, hi) = spectrum.interval();
    let prefactor = spectrum.mean_spacing() * epsilon
        / (std::f64::consts::PI * model.couplings().variance());
    probes
        .iter()
        .filter(|&&x| x - lo >= epsilon && hi - x >= epsilon)
        .map(|&x| {
            let mut sum = StableSum::new();
            for (&e, xi) in spectrum.energies().iter().zip(model.couplings().values()) {
                let d = x - e;
                sum.add(xi.norm_sqr() / (d * d + epsilon * epsilon));
            }
            (prefactor * sum.total() - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Exact sup distance between a step distribution and a Cauchy
/// distribution function over `range`. The supremum of the difference
/// against a monotone continuous function is attained at a step (from
/// either side) or at a range endpoint, so no grid is involved.
pub fn ks_distance(f: &StepDistribution, p: &CauchyParams, range: (f64, f64)) -> f64 {
    assert!(range.0 < range.1);
    let target = |x: f64| cauchy_cdf(x, p);
    let mut sup = (f.cdf(range.0) - target(range.0))
        .abs()
        .max((f.cdf(range.1) - target(range.1)).abs());
    for (i, &x) in f.points().iter().enumerate() {
        if x < range.0 || x > range.1 {
            continue;
        }
        let g = target(x);
        let after = f.cdf(x);
        let before = after - f.masses()[i];
        sup = sup.max((after - g).abs()).max((before - g).abs());
    }
    sup
}

/// Sup distance between two arbitrary curves sampled on a uniform grid.
pub fn ks_distance_fns(
    f: impl Fn(f64) -> f64,
    g: impl Fn(f64) -> f64,
    range: (f64, f64),
    n_grid: usize,
) -> f64 {
    assert!(range.0 < range.1 && n_grid >= 2);
    let h = (range.1 - range.0) / (n_grid - 1) as f64;
    (0..n_grid)
        .map(|i| {
            let x = range.0 + h * i as f64;
            (f(x) - g(x)).abs()
        })
        .fold(0.0, f64::max)
}

/// Least-squares exponential-rate fit of a survival series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    /// Decay rate (minus the log-linear slope).
    pub rate: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    pub residual_rms: f64,
}

/// Fit `log(survival_sq)` to a line over `window`; `rate` is the
/// negated slope.
pub fn fit_decay_rate(
    times: &[f64],
    survival_sq: &[f64],
    window: (f64, f64),
) -> Result<RateFit, StatsError> {
    assert_eq!(times.len(), survival_sq.len());
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &s) in times.iter().zip(survival_sq) {
        if t < window.0 || t > window.1 {
            continue;
        }
        if s <= 0.0 {
            return Err(StatsError::NonPositiveSample);
        }
        xs.push(t);
        ys.push(s.ln());
    }
    if xs.len() < 2 {
        return Err(StatsError::WindowOutsideSamples);
    }
    let (slope, intercept, residual_rms) = crate::math::linear_fit(&xs, &ys);
    Ok(RateFit {
        rate: -slope,
        intercept,
        window,
        residual_rms,
    })
}

/// Default golden-rule fit window: early times are cut at `3 / Delta_E`
/// (transient), late times at `min(2/Gamma, ln(N_Gamma)/Gamma)` (onset
/// of the ergodic plateau).
pub fn default_rate_window(dp: &DerivedParams, delta_e: f64) -> (f64, f64) {
    (
        3.0 / delta_e,
        (2.0 / dp.gamma).min(dp.n_gamma.ln() / dp.gamma),
    )
}

/// Survival probability series `|chi(t)|^2` on a uniform time grid of
/// `n` points over `[0, t_max]`.
pub fn survival_series(
    es: &crate::resolvent::Eigensystem,
    t_max: f64,
    n: usize,
) -> (Vec<f64>, Vec<f64>) {
    assert!(t_max > 0.0 && n >= 2);
    let times: Vec<f64> = (0..n)
        .map(|i| t_max * i as f64 / (n - 1) as f64)
        .collect();
    let values: Vec<f64> = times
        .par_iter()
        .map(|&t| crate::resolvent::survival_amplitude(es, t).norm_sqr())
        .collect();
    (times, values)
}
