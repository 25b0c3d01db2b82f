//! Renormalization-group transformations on decay models.
//!
//! Two forms, both leaving the golden-rule width invariant:
//!
//! * `scale_model`: the literal map `xi -> lambda xi`,
//!   `E_j -> lambda^2 E_j`, appropriate when the spectral interval is
//!   unconstrained (the interval shrinks with the reservoir);
//! * `double_model`: merge in an independent same-density reservoir on
//!   the same interval and rescale all couplings by `1/sqrt(2)` — the
//!   canonical flow at fixed interval, one step of `lambda = 1/sqrt(2)`.
//!
//! Iterating the doubling drives the eps -> 0 distribution toward the
//! Cauchy fixed point; `rg_flow` records that convergence.

use rand::Rng;
use thiserror::Error;

use crate::cauchy::CauchyParams;
use crate::math::StableSum;
use crate::model::{
    build_rank1_model, derived_params, make_spectrum, sample_couplings, Couplings, DecayModel,
    RandomSeed, Spectrum, SpectrumKind, SpectrumRecipe,
};
use crate::resolvent::{eigensystem, Eigensystem};
use crate::stats::{default_rate_window, fit_decay_rate, ks_distance, survival_series};

#[derive(Debug, Error)]
pub enum RgError {
    #[error("scale factor must lie in (0, 1]")]
    BadScale,
    #[error("flow would grow the reservoir to {levels} levels, beyond the cap of {cap}")]
    ResourceCap { levels: usize, cap: usize },
    #[error("model construction failed: {0}")]
    Model(#[from] crate::model::ModelError),
    #[error("eigensolver failed: {0}")]
    Resolvent(#[from] crate::resolvent::ResolventError),
    #[error("rate fit failed: {0}")]
    Stats(#[from] crate::stats::StatsError),
}

/// Apply `xi -> lambda xi`, `E_j -> lambda^2 E_j` (interval included);
/// the discrete level energy is kept fixed. The derived width
/// `Gamma = 2 pi rho v^2` is invariant because the density scales as
/// `lambda^-2` while `v^2` scales as `lambda^2`.
pub fn scale_model(model: &DecayModel, lambda: f64) -> Result<DecayModel, RgError> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(RgError::BadScale);
    }
    let l2 = lambda * lambda;
    let spectrum = model.spectrum();
    let energies: Vec<f64> = spectrum.energies().iter().map(|&e| l2 * e).collect();
    let interval = (l2 * spectrum.interval().0, l2 * spectrum.interval().1);
    let scaled_spectrum = Spectrum::from_parts(energies, interval, spectrum.kind())?;
    let values: Vec<_> = model
        .couplings()
        .values()
        .iter()
        .map(|&xi| xi * lambda)
        .collect();
    let couplings = Couplings::from_parts(values, l2 * model.couplings().variance());
    Ok(build_rank1_model(
        model.level_energy(),
        scaled_spectrum,
        couplings,
    )?)
}

/// Merge gaps closer than `1e-10 * Delta_E` by nudging the upper level;
/// returns how many nudges were applied.
fn separate_collisions(energies: &mut [f64], width: f64) -> usize {
    let min_gap = 1e-10 * width;
    let mut nudges = 0;
    for i in 1..energies.len() {
        if energies[i] - energies[i - 1] < min_gap {
            energies[i] = energies[i - 1] + min_gap;
            nudges += 1;
        }
    }
    nudges
}

/// One dimension-doubling step: the reservoir is merged with an
/// independent spectrum of the same density on the same interval
/// (Poisson for Poisson models, a uniformly shifted comb for
/// equidistant ones), old couplings are kept and new ones drawn, and
/// everything is multiplied by `1/sqrt(2)`. Returns the doubled model
/// and the number of near-collisions resolved by the minimal jitter.
pub fn double_model(model: &DecayModel, seed: RandomSeed) -> Result<(DecayModel, usize), RgError> {
    let spectrum = model.spectrum();
    let n = spectrum.len();
    let interval = spectrum.interval();
    let fresh = match spectrum.kind() {
        SpectrumKind::Equidistant => {
            // a comb shifted by a uniform offset stays inside the
            // interval and cannot collide with the midpoint comb
            let mut rng = seed.rng();
            let offset: f64 = rng.gen::<f64>() * spectrum.mean_spacing();
            let energies: Vec<f64> = (0..n)
                .map(|j| interval.0 + j as f64 * spectrum.mean_spacing() + offset)
                .collect();
            Spectrum::from_parts(energies, interval, SpectrumKind::Equidistant)?
        }
        _ => make_spectrum(&SpectrumRecipe::Poisson, n, interval, seed)?,
    };

    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let new_couplings = sample_couplings(
        model.couplings().variance(),
        n,
        seed.with_stream(seed.stream + 1),
    )?;
    let mut merged: Vec<(f64, num_complex::Complex64)> = spectrum
        .energies()
        .iter()
        .zip(model.couplings().values())
        .map(|(&e, &xi)| (e, xi * inv_sqrt2))
        .chain(
            fresh
                .energies()
                .iter()
                .zip(new_couplings.values())
                .map(|(&e, &xi)| (e, xi * inv_sqrt2)),
        )
        .collect();
    merged.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut energies: Vec<f64> = merged.iter().map(|&(e, _)| e).collect();
    let nudges = separate_collisions(&mut energies, spectrum.width());
    let values: Vec<_> = merged.into_iter().map(|(_, xi)| xi).collect();

    let doubled_spectrum = Spectrum::from_parts(energies, interval, spectrum.kind())?;
    let couplings = Couplings::from_parts(values, model.couplings().variance() / 2.0);
    Ok((
        build_rank1_model(model.level_energy(), doubled_spectrum, couplings)?,
        nudges,
    ))
}

/// Per-step record of an iterated doubling flow.
#[derive(Debug, Clone, PartialEq)]
pub struct RgFlowReport {
    pub steps: Vec<usize>,
    pub n_levels: Vec<usize>,
    /// KS distance of the eps -> 0 distribution to the Cauchy fixed
    /// point, on the central half of the interval.
    pub ks_distances: Vec<f64>,
    /// Decay rate fitted from the survival series on the golden-rule
    /// window.
    pub gamma_estimates: Vec<f64>,
    /// Near-collisions resolved while merging, per step.
    pub collisions_resolved: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct RgFlowOptions {
    /// Reservoir-size guard; flows that would exceed it abort with
    /// `RgError::ResourceCap`.
    pub max_levels: usize,
}

impl Default for RgFlowOptions {
    fn default() -> Self {
        Self { max_levels: 65_536 }
    }
}

/// Run `k_steps` doublings, evaluating the distribution and the fitted
/// rate at every stage (step 0 is the input model).
pub fn rg_flow(
    model: &DecayModel,
    k_steps: usize,
    seed: RandomSeed,
    options: RgFlowOptions,
) -> Result<RgFlowReport, RgError> {
    let final_levels = model
        .spectrum()
        .len()
        .checked_shl(k_steps as u32)
        .unwrap_or(usize::MAX);
    if final_levels > options.max_levels {
        return Err(RgError::ResourceCap {
            levels: final_levels,
            cap: options.max_levels,
        });
    }

    let mut report = RgFlowReport {
        steps: Vec::with_capacity(k_steps + 1),
        n_levels: Vec::with_capacity(k_steps + 1),
        ks_distances: Vec::with_capacity(k_steps + 1),
        gamma_estimates: Vec::with_capacity(k_steps + 1),
        collisions_resolved: Vec::with_capacity(k_steps + 1),
    };
    let mut current = model.clone();
    let mut collisions = 0;
    for step in 0..=k_steps {
        let dp = derived_params(&current);
        let es = eigensystem(&current)?;
        let interval = current.spectrum().interval();
        let center = 0.5 * (interval.0 + interval.1);
        let quarter = 0.25 * (interval.1 - interval.0);
        let target = CauchyParams::new(current.level_energy(), dp.gamma)
            .expect("positive width");
        let ks = ks_distance(
            &es.to_step_distribution(),
            &target,
            (center - quarter, center + quarter),
        );
        let window = default_rate_window(&dp, current.spectrum().width());
        let (times, values) = survival_series(&es, window.1, 400);
        let fit = fit_decay_rate(&times, &values, window)?;

        report.steps.push(step);
        report.n_levels.push(current.spectrum().len());
        report.ks_distances.push(ks);
        report.gamma_estimates.push(fit.rate);
        report.collisions_resolved.push(collisions);

        if step < k_steps {
            let (next, nudges) = double_model(&current, seed.with_stream(seed.stream + step as u64))?;
            current = next;
            collisions = nudges;
        }
    }
    Ok(report)
}

/// Tail function `T(x) = 1 - Phi_A(x, 0) = sum_{omega_nu > x} w_nu`.
pub fn tail_function(es: &Eigensystem, x: f64) -> f64 {
    let mut sum = StableSum::new();
    for (&omega, &w) in es.eigenvalues().iter().zip(es.weights()) {
        if omega > x {
            sum.add(w);
        }
    }
    sum.total()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_rank1_model;
    use std::f64::consts::PI;

    fn fig1_model(seed: u64) -> DecayModel {
        sample_rank1_model(
            &SpectrumRecipe::Equidistant,
            300,
            (-10.0, 10.0),
            0.0,
            1.41 / (2.0 * PI * 15.0),
            seed.into(),
        )
        .unwrap()
    }

    #[test]
    fn scaling_preserves_gamma_exactly() {
        let m = fig1_model(0);
        let g0 = derived_params(&m).gamma;
        for &lambda in &[0.5, 0.25] {
            let scaled = scale_model(&m, lambda).unwrap();
            assert_eq!(derived_params(&scaled).gamma, g0);
            assert_eq!(scaled.level_energy(), m.level_energy());
        }
    }

    #[test]
    fn scaling_is_a_semigroup() {
        let m = fig1_model(1);
        let a = scale_model(&scale_model(&m, 0.5).unwrap(), 0.25).unwrap();
        let b = scale_model(&m, 0.125).unwrap();
        // powers of two compose exactly in floating point
        assert_eq!(a, b);
        let c = scale_model(&m, 1.0).unwrap();
        assert_eq!(c, m);
        assert!(scale_model(&m, 0.0).is_err());
        assert!(scale_model(&m, 1.5).is_err());
    }

    #[test]
    fn doubling_halves_variance_and_keeps_gamma() {
        let m = fig1_model(2);
        let dp0 = derived_params(&m);
        let (d, _) = double_model(&m, 5.into()).unwrap();
        let dp1 = derived_params(&d);
        assert_eq!(d.spectrum().len(), 2 * m.spectrum().len());
        assert_eq!(d.couplings().variance(), m.couplings().variance() / 2.0);
        assert_eq!(dp1.gamma, dp0.gamma);
        assert!((dp1.rho_b - 2.0 * dp0.rho_b).abs() < 1e-12);
        assert!((dp1.n_gamma - 2.0 * dp0.n_gamma).abs() < 1e-9);
        // per-level coupling power halves on average as well
        let mean_sq = crate::math::stable_sum(d.couplings().values().iter().map(|z| z.norm_sqr()))
            / d.couplings().len() as f64;
        assert!((mean_sq / (m.couplings().variance() / 2.0) - 1.0).abs() < 0.2);
    }

    #[test]
    fn three_doublings_grow_n_gamma_eightfold() {
        let mut m = fig1_model(3);
        let n0 = derived_params(&m).n_gamma;
        for k in 0..3u64 {
            m = double_model(&m, (9, k).into()).unwrap().0;
        }
        assert!((derived_params(&m).n_gamma / n0 - 8.0).abs() < 1e-9);
    }

    #[test]
    fn flow_with_zero_steps_is_a_static_evaluation() {
        let m = fig1_model(4);
        let report = rg_flow(&m, 0, 11.into(), RgFlowOptions::default()).unwrap();
        assert_eq!(report.steps, vec![0]);
        assert_eq!(report.n_levels, vec![300]);
        assert_eq!(report.ks_distances.len(), 1);
        let dp = derived_params(&m);
        assert!((report.gamma_estimates[0] - dp.gamma).abs() / dp.gamma < 0.15);
    }

    #[test]
    fn flow_respects_resource_cap() {
        let m = fig1_model(5);
        let err = rg_flow(
            &m,
            4,
            0.into(),
            RgFlowOptions { max_levels: 1000 },
        )
        .unwrap_err();
        assert!(matches!(err, RgError::ResourceCap { levels: 4800, cap: 1000 }));
    }

    #[test]
    fn flow_converges_toward_the_cauchy_fixed_point() {
        // per-step medians over seeds; single realizations scatter by
        // +-20% in the fitted rate at N_Gamma = 21
        let mut ks_per_step: Vec<Vec<f64>> = vec![Vec::new(); 4];
        let mut gamma_per_step: Vec<Vec<f64>> = vec![Vec::new(); 4];
        for seed in 0..5u64 {
            let m = fig1_model(100 + seed);
            let report = rg_flow(&m, 3, (50, seed).into(), RgFlowOptions::default()).unwrap();
            for k in 0..4 {
                ks_per_step[k].push(report.ks_distances[k]);
                gamma_per_step[k].push(report.gamma_estimates[k]);
            }
        }
        let ks_medians: Vec<f64> = ks_per_step.iter().map(|v| crate::math::median(v)).collect();
        for k in 1..ks_medians.len() {
            assert!(
                ks_medians[k] < ks_medians[k - 1],
                "KS medians not decreasing: {ks_medians:?}"
            );
        }
        for (k, seeds) in gamma_per_step.iter().enumerate() {
            let g = crate::math::median(seeds);
            assert!(
                (g - 1.41).abs() / 1.41 <= 0.15,
                "step {k}: median gamma estimate {g}"
            );
        }
    }

    #[test]
    fn tail_function_limits_and_cauchy_tail() {
        let m = fig1_model(6);
        let es = eigensystem(&m).unwrap();
        assert!((tail_function(&es, -11.0) - 1.0).abs() < 1e-10);
        assert_eq!(tail_function(&es, 11.0), 0.0);

        // wide equidistant proxy of the perturbative ladder: x T(x)
        // approaches Gamma / 2 pi well inside the interval
        let (v, omega) = (0.1, 1.0);
        let k_half = 3000i64;
        let energies: Vec<f64> = (-k_half..=k_half)
            .filter(|&k| k != 0)
            .map(|k| k as f64 * omega)
            .collect();
        let n = energies.len();
        let interval = (-(k_half as f64) - 0.5, k_half as f64 + 0.5);
        let spectrum =
            make_spectrum(&SpectrumRecipe::Custom(energies), n, interval, 0.into()).unwrap();
        let model =
            build_rank1_model(0.0, spectrum, Couplings::constant(v, n)).unwrap();
        let es = eigensystem(&model).unwrap();
        let expect = v * v / omega; // Gamma / 2 pi
        for &x in &[50.0, 100.0, 200.0] {
            let t = x * tail_function(&es, x);
            assert!((t - expect).abs() <= 0.1 * expect, "x = {x}: x T = {t}");
        }
        // matches the probabilistic ladder's tail at the same parameters
        let ladder = crate::cauchy::example3_distribution(v, omega, 3000, false, 0.into()).unwrap();
        for &x in &[50.0, 100.0] {
            let quantum = x * tail_function(&es, x);
            let classical = x * (1.0 - ladder.cdf(x));
            assert!(
                (quantum - classical).abs() <= 0.1 * classical,
                "x = {x}: {quantum} vs {classical}"
            );
        }
    }
}
