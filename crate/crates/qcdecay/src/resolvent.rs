//! Resolvent machinery for rank-1 decay models.
//!
//! Two independent routes to the projected spectral density:
//!
//! * the Schur-complement route, evaluating the non-Hermitian effective
//!   Hamiltonian `H_eff(x - i eps)` directly from the model, and
//! * the eigen route, solving the arrowhead secular equation for the
//!   exact eigenvalues and overlap weights and smoothing the resulting
//!   point masses with a Lorentz kernel of half-width `eps`.
//!
//! The two agree to machine precision; that identity is exercised
//! relentlessly in the tests since everything else leans on it.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::cauchy::StepDistribution;
use crate::dense;
use crate::math::StableSum;
use crate::model::{derived_params, DecayModel};

/// Couplings below this squared modulus are exactly decoupled levels.
const DECOUPLED_THRESHOLD: f64 = 1e-300;

/// Reservoir gaps below `1e-10 * Delta_E` route the model to the dense
/// solver; the secular bracketing degenerates on such gaps.
const NEAR_DEGENERATE_GAP: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum ResolventError {
    #[error("epsilon must be positive here; use distribution_function for the eps = 0 limit")]
    NonPositiveEpsilon,
    #[error("dense eigensolver failed: {0}")]
    Dense(String),
    #[error("overlap weights sum to {sum}, expected 1 within 1e-10")]
    WeightNormalization { sum: f64 },
    #[error("density grid must be strictly increasing and match the value count")]
    BadCurveGrid,
    #[error("density values must be nonnegative with integral at most 1")]
    BadCurveValues,
}

/// Exact eigenvalues and overlap weights `w_nu = |<psi_s|omega_nu>|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigensystem {
    eigenvalues: Vec<f64>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Eigensystem {
    fn new(eigenvalues: Vec<f64>, weights: Vec<f64>) -> Self {
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = StableSum::new();
        for &w in &weights {
            acc.add(w);
            cumulative.push(acc.total());
        }
        Self {
            eigenvalues,
            weights,
            cumulative,
        }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// The eps -> 0 distribution as a step distribution (zero-weight
    /// decoupled levels dropped).
    pub fn to_step_distribution(&self) -> StepDistribution {
        let (points, masses): (Vec<f64>, Vec<f64>) = self
            .eigenvalues
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&e, &w)| (e, w))
            .unzip();
        StepDistribution::new(points, masses).expect("eigensystem weights form a distribution")
    }
}

/// Effective Hamiltonian `H_eff(x - i eps)` of a rank-1 model:
///
/// ```text
/// E_s + sum_j |xi_j|^2 (x - E_j) / ((x - E_j)^2 + eps^2)
///     + i eps sum_j |xi_j|^2 / ((x - E_j)^2 + eps^2)
/// ```
///
/// The imaginary part is strictly positive as soon as any coupling is
/// nonzero.
pub fn effective_hamiltonian(model: &DecayModel, x: f64, epsilon: f64) -> Complex64 {
    assert!(epsilon > 0.0, "effective_hamiltonian needs epsilon > 0");
    let mut re = StableSum::new();
    let mut im = StableSum::new();
    for (&e_j, xi) in model
        .spectrum()
        .energies()
        .iter()
        .zip(model.couplings().values())
    {
        let c = xi.norm_sqr();
        let d = x - e_j;
        let denom = d * d + epsilon * epsilon;
        re.add(c * d / denom);
        im.add(c / denom);
    }
    Complex64::new(model.level_energy() + re.total(), epsilon * im.total())
}

/// Spectral density via the Schur complement,
/// `(1/pi) (eps + Im H_eff) / ((x - Re H_eff)^2 + (eps + Im H_eff)^2)`.
pub fn spectral_density_schur(model: &DecayModel, x: f64, epsilon: f64) -> f64 {
    assert!(epsilon > 0.0, "spectral_density_schur needs epsilon > 0");
    let h = effective_hamiltonian(model, x, epsilon);
    let width = epsilon + h.im;
    let shift = x - h.re;
    width / (std::f64::consts::PI * (shift * shift + width * width))
}

/// Secular function `f(w) = w - E_s - sum_j c_j / (w - F_j)` of the
/// coupled subproblem.
struct Secular<'a> {
    level_energy: f64,
    poles: &'a [f64],
    strengths: &'a [f64],
}

impl Secular<'_> {
    fn eval(&self, w: f64) -> f64 {
        let mut sum = StableSum::new();
        for (&f, &c) in self.poles.iter().zip(self.strengths) {
            sum.add(c / (w - f));
        }
        w - self.level_energy - sum.total()
    }

    fn eval_with_derivative(&self, w: f64) -> (f64, f64) {
        let mut sum = StableSum::new();
        let mut dsum = StableSum::new();
        for (&f, &c) in self.poles.iter().zip(self.strengths) {
            let d = w - f;
            sum.add(c / d);
            dsum.add(c / (d * d));
        }
        (w - self.level_energy - sum.total(), 1.0 + dsum.total())
    }

    /// Overlap weight at a root, `[1 + sum_j c_j / (w - F_j)^2]^-1`.
    fn weight(&self, w: f64) -> f64 {
        let mut sum = StableSum::new();
        for (&f, &c) in self.poles.iter().zip(self.strengths) {
            let d = w - f;
            sum.add(c / (d * d));
        }
        1.0 / (1.0 + sum.total())
    }

    /// One root inside `(lo, hi)`; `f` runs from negative to positive
    /// across the bracket. Bisection to 1e-3 of the bracket, then
    /// safeguarded Newton to machine precision.
    fn solve(&self, mut lo: f64, mut hi: f64) -> f64 {
        let span0 = hi - lo;
        while hi - lo > 1e-3 * span0 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break; // bracket at floating-point resolution
            }
            if self.eval(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let mut w = 0.5 * (lo + hi);
        for _ in 0..60 {
            let (f, df) = self.eval_with_derivative(w);
            if f > 0.0 {
                hi = w;
            } else if f < 0.0 {
                lo = w;
            } else {
                return w;
            }
            let mut next = w - f / df;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if next == w || (next - w).abs() <= f64::EPSILON * (w.abs() + 1e-3 * span0) {
                return next;
            }
            w = next;
        }
        0.5 * (lo + hi)
    }
}

/// Solve the arrowhead eigenproblem of a rank-1 model.
///
/// One root per gap between consecutive coupled reservoir levels plus
/// the two exterior roots; exactly decoupled levels (`|xi|^2` below
/// 1e-300) are passed through as eigenpairs of weight zero. Models with
/// near-degenerate reservoir gaps fall back to a dense diagonalization
/// of the full bordered matrix.
pub fn eigensystem(model: &DecayModel) -> Result<Eigensystem, ResolventError> {
    let energies = model.spectrum().energies();
    let mut poles = Vec::with_capacity(energies.len());
    let mut strengths = Vec::with_capacity(energies.len());
    let mut decoupled = Vec::new();
    for (&e, xi) in energies.iter().zip(model.couplings().values()) {
        let c = xi.norm_sqr();
        if c < DECOUPLED_THRESHOLD {
            decoupled.push(e);
        } else {
            poles.push(e);
            strengths.push(c);
        }
    }

    if poles.is_empty() {
        // fully decoupled: the discrete level is itself an eigenstate
        let mut pairs: Vec<(f64, f64)> = decoupled.iter().map(|&e| (e, 0.0)).collect();
        pairs.push((model.level_energy(), 1.0));
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let (vals, weights) = pairs.into_iter().unzip();
        return Ok(Eigensystem::new(vals, weights));
    }

    let width = model.spectrum().width();
    let near_degenerate = poles
        .windows(2)
        .any(|w| w[1] - w[0] < NEAR_DEGENERATE_GAP * width);
    let (mut values, mut weights) = if near_degenerate {
        dense_eigensystem(model)?
    } else {
        secular_eigensystem(model.level_energy(), &poles, &strengths)
    };

    // re-insert decoupled levels as zero-weight eigenpairs
    if !decoupled.is_empty() {
        let mut pairs: Vec<(f64, f64)> = values.into_iter().zip(weights).collect();
        pairs.extend(decoupled.into_iter().map(|e| (e, 0.0)));
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let unzipped = pairs.into_iter().unzip();
        values = unzipped.0;
        weights = unzipped.1;
    }

    let es = Eigensystem::new(values, weights);
    let sum = es.weight_sum();
    if (sum - 1.0).abs() > 1e-10 {
        return Err(ResolventError::WeightNormalization { sum });
    }
    Ok(es)
}

fn secular_eigensystem(level_energy: f64, poles: &[f64], strengths: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let secular = Secular {
        level_energy,
        poles,
        strengths,
    };
    let m = poles.len();
    let coupling_norm = strengths.iter().sum::<f64>().sqrt();
    let scale = poles[m - 1] - poles[0] + coupling_norm + 1.0;

    // exterior bounds from the Weyl estimate; widen in the rare case
    // floating-point evaluation disagrees with the sign it implies
    let mut lower = level_energy.min(poles[0]) - coupling_norm - 1e-9 * scale;
    while secular.eval(lower) >= 0.0 {
        lower -= scale;
    }
    let mut upper = level_energy.max(poles[m - 1]) + coupling_norm + 1e-9 * scale;
    while secular.eval(upper) <= 0.0 {
        upper += scale;
    }

    let roots: Vec<f64> = (0..=m)
        .into_par_iter()
        .map(|i| {
            let lo = if i == 0 { lower } else { poles[i - 1] };
            let hi = if i == m { upper } else { poles[i] };
            secular.solve(lo, hi)
        })
        .collect();
    let weights = roots.iter().map(|&w| secular.weight(w)).collect();
    (roots, weights)
}

/// Dense fallback: diagonalize the full bordered matrix. A diagonal
/// phase rotation makes all couplings real without changing either the
/// eigenvalues or the head-component weights.
fn dense_eigensystem(model: &DecayModel) -> Result<(Vec<f64>, Vec<f64>), ResolventError> {
    let n = model.spectrum().len();
    let mut h = ndarray::Array2::<f64>::zeros((n + 1, n + 1));
    h[(0, 0)] = model.level_energy();
    for (j, (&e, xi)) in model
        .spectrum()
        .energies()
        .iter()
        .zip(model.couplings().values())
        .enumerate()
    {
        h[(j + 1, j + 1)] = e;
        let v = xi.norm();
        h[(0, j + 1)] = v;
        h[(j + 1, 0)] = v;
    }
    let (vals, vecs) = dense::eigh_real(&h).map_err(ResolventError::Dense)?;
    let weights = (0..=n).map(|k| vecs[(0, k)] * vecs[(0, k)]).collect();
    Ok((vals, weights))
}

/// Spectral density from an eigensystem:
/// `(eps/pi) sum_nu w_nu / ((x - omega_nu)^2 + eps^2)`.
pub fn spectral_density_eigen(
    es: &Eigensystem,
    x: f64,
    epsilon: f64,
) -> Result<f64, ResolventError> {
    if !(epsilon > 0.0) {
        return Err(ResolventError::NonPositiveEpsilon);
    }
    let mut sum = StableSum::new();
    for (&w, &omega) in es.weights().iter().zip(es.eigenvalues()) {
        let d = x - omega;
        sum.add(w / (d * d + epsilon * epsilon));
    }
    Ok(epsilon / std::f64::consts::PI * sum.total())
}

/// Right-continuous distribution function `sum_{omega_nu <= x} w_nu`.
pub fn distribution_function(es: &Eigensystem, x: f64) -> f64 {
    let idx = es.eigenvalues.partition_point(|&e| e <= x);
    if idx == 0 {
        0.0
    } else {
        es.cumulative[idx - 1]
    }
}

/// Survival amplitude `chi(t) = sum_nu w_nu exp(-i t omega_nu)`.
pub fn survival_amplitude(es: &Eigensystem, t: f64) -> Complex64 {
    let mut re = StableSum::new();
    let mut im = StableSum::new();
    for (&w, &omega) in es.weights().iter().zip(es.eigenvalues()) {
        let phase = -t * omega;
        re.add(w * phase.cos());
        im.add(w * phase.sin());
    }
    Complex64::new(re.total(), im.total())
}

/// Window function
/// `J(x, eps) = (1/pi) [arctan((E_+ - x)/eps) - arctan((E_- - x)/eps)]`,
/// tending to the indicator of the interval as `eps -> 0`.
pub fn window_j(x: f64, epsilon: f64, interval: (f64, f64)) -> f64 {
    assert!(epsilon > 0.0, "window_j needs epsilon > 0");
    (((interval.1 - x) / epsilon).atan() - ((interval.0 - x) / epsilon).atan())
        / std::f64::consts::PI
}

/// Level-shift window
/// `K(x, eps) = (1/4pi) ln[((E_+ - x)^2 + eps^2) / ((E_- - x)^2 + eps^2)]`.
///
/// At `eps = 0` with `x` exactly on an endpoint the logarithm is
/// singular; the IEEE infinity that comes back is the signal (the
/// density built from it degrades gracefully to zero). A doubly
/// infinite interval yields the centered limit `K = 0`.
pub fn window_k(x: f64, epsilon: f64, interval: (f64, f64)) -> f64 {
    let (lo, hi) = interval;
    if lo.is_infinite() && hi.is_infinite() {
        return 0.0;
    }
    let a = (hi - x) * (hi - x) + epsilon * epsilon;
    let b = (lo - x) * (lo - x) + epsilon * epsilon;
    (a / b).ln() / (4.0 * std::f64::consts::PI)
}

/// Closed-form ensemble-averaged density on a finite interval,
///
/// ```text
/// (1/2pi) (2 eps + Gamma J) /
///     [(x - E_s - Gamma K)^2 + (2 eps + Gamma J)^2 / 4]
/// ```
///
/// reducing to the pure Cauchy line `f_C(x - E_s, Gamma)` for the full
/// real line at `eps = 0`.
pub fn averaged_density(
    x: f64,
    epsilon: f64,
    level_energy: f64,
    gamma: f64,
    interval: (f64, f64),
) -> f64 {
    assert!(gamma > 0.0 && epsilon >= 0.0);
    let j = if epsilon > 0.0 {
        window_j(x, epsilon, interval)
    } else {
        // eps -> 0 limit of J: indicator with half-steps at endpoints
        match (x > interval.0, x < interval.1) {
            (true, true) => 1.0,
            (false, false) => 0.0,
            _ => {
                if x == interval.0 || x == interval.1 {
                    0.5
                } else {
                    0.0
                }
            }
        }
    };
    let k = window_k(x, epsilon, interval);
    let width = 2.0 * epsilon + gamma * j;
    let shift = x - level_energy - gamma * k;
    width / (2.0 * std::f64::consts::PI * (shift * shift + width * width / 4.0))
}

/// Ergodic plateau `sum_nu w_nu^2`: the long-time average of
/// `|chi(t)|^2` for a nondegenerate spectrum.
pub fn ergodic_plateau(es: &Eigensystem) -> f64 {
    let mut sum = StableSum::new();
    for &w in es.weights() {
        sum.add(w * w);
    }
    sum.total()
}

/// Default smoothing scale `eps = sqrt(omega_B * Gamma)`, the geometric
/// mean separating the level spacing from the resonance width.
pub fn default_epsilon(model: &DecayModel) -> f64 {
    let dp = derived_params(model);
    (dp.omega_b * dp.gamma).sqrt()
}

/// Evaluation grid with at least 8 points per `min(eps, gamma)` of
/// resolution across the requested range.
pub fn curve_grid(range: (f64, f64), epsilon: f64, gamma: f64) -> Vec<f64> {
    let step = epsilon.min(gamma) / 8.0;
    crate::math::uniform_grid(range.0, range.1, step)
}

/// Sampled density curve with its smoothing scale.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve {
    grid: Vec<f64>,
    values: Vec<f64>,
    epsilon: f64,
}

impl DensityCurve {
    /// Validates monotonicity of the grid, nonnegativity of the values
    /// and the normalization bound (trapezoid integral at most 1).
    pub fn new(grid: Vec<f64>, values: Vec<f64>, epsilon: f64) -> Result<Self, ResolventError> {
        if grid.len() != values.len() || grid.len() < 2 || grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ResolventError::BadCurveGrid);
        }
        if values.iter().any(|&v| v < 0.0) {
            return Err(ResolventError::BadCurveValues);
        }
        let integral = crate::math::trapezoid(&grid, &values);
        if !(0.0..=1.0 + 1e-6).contains(&integral) {
            return Err(ResolventError::BadCurveValues);
        }
        Ok(Self {
            grid,
            values,
            epsilon,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn integral(&self) -> f64 {
        crate::math::trapezoid(&self.grid, &self.values)
    }
}
