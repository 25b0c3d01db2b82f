//! Multilevel decaying subspaces and Fano lineshapes.
//!
//! An `N_A`-level block `H_A` couples to the reservoir through a
//! coupling matrix whose rows have covariance `gamma_jk`; the
//! golden-rule matrix is `Gamma_jk = 2 pi rho_B gamma_jk`. When `H_A`
//! and `Gamma` commute every eigenstate decays with its own Lorentz
//! line; when they do not, the resonance poles interfere and the
//! projected lineshape turns asymmetric.

use ndarray::{Array1, Array2};
use ndarray_linalg::Inverse;
use num_complex::Complex64;
use thiserror::Error;

use crate::dense;
use crate::math::StableSum;
use crate::model::{RandomSeed, Spectrum};
use crate::resolvent::DensityCurve;

#[derive(Debug, Error)]
pub enum FanoError {
    #[error("matrix must be Hermitian")]
    NonHermitian,
    #[error("covariance must be positive semidefinite (eigenvalue {eigenvalue})")]
    NotPositiveSemidefinite { eigenvalue: f64 },
    #[error("dimension mismatch: {0}")]
    Dimensions(String),
    #[error("state vector must be normalized")]
    NotNormalized,
    #[error("eigensolver failed: {0}")]
    Dense(String),
    #[error("resolvent inversion failed (epsilon too small?): {0}")]
    Inversion(String),
    #[error("curve construction failed: {0}")]
    Curve(#[from] crate::resolvent::ResolventError),
}

pub(crate) fn adjoint(a: &Array2<Complex64>) -> Array2<Complex64> {
    a.t().mapv(|z| z.conj())
}

fn hermitian_deviation(a: &Array2<Complex64>) -> f64 {
    let mut dev = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev
}

fn matrix_scale(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300)
}

pub(crate) fn is_hermitian(a: &Array2<Complex64>) -> bool {
    a.is_square() && hermitian_deviation(a) <= 1e-12 * matrix_scale(a)
}

/// Hermitian part `(A + A^dag) / 2`.
pub(crate) fn hermitian_part(a: &Array2<Complex64>) -> Array2<Complex64> {
    (a + &adjoint(a)).mapv(|z| z * 0.5)
}

/// Anti-Hermitian part as a Hermitian matrix, `(A - A^dag) / 2i`.
pub(crate) fn imaginary_part(a: &Array2<Complex64>) -> Array2<Complex64> {
    let diff = a - &adjoint(a);
    diff.mapv(|z| z / Complex64::new(0.0, 2.0))
}

/// Golden-rule matrix `Gamma = 2 pi rho_B gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldenRuleMatrix {
    matrix: Array2<Complex64>,
}

impl GoldenRuleMatrix {
    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }
}

pub fn golden_rule_matrix(
    gamma_cov: &Array2<Complex64>,
    rho_b: f64,
) -> Result<GoldenRuleMatrix, FanoError> {
    assert!(rho_b > 0.0);
    if !is_hermitian(gamma_cov) {
        return Err(FanoError::NonHermitian);
    }
    psd_sqrt(gamma_cov)?; // PSD validation
    Ok(GoldenRuleMatrix {
        matrix: gamma_cov.mapv(|z| z * 2.0 * std::f64::consts::PI * rho_b),
    })
}

/// PSD square root through the eigendecomposition; tiny negative
/// eigenvalues from rounding are clamped, genuinely indefinite input is
/// rejected.
fn psd_sqrt(a: &Array2<Complex64>) -> Result<Array2<Complex64>, FanoError> {
    let (vals, vecs) = dense::eigh_complex(a).map_err(FanoError::Dense)?;
    let scale = vals.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1e-300);
    if let Some(&bad) = vals.iter().find(|&&v| v < -1e-10 * scale) {
        return Err(FanoError::NotPositiveSemidefinite { eigenvalue: bad });
    }
    let n = a.nrows();
    let mut root = Array2::<Complex64>::zeros((n, n));
    for k in 0..n {
        let s = vals[k].max(0.0).sqrt();
        for i in 0..n {
            for j in 0..n {
                root[(i, j)] += vecs[(i, k)] * s * vecs[(j, k)].conj();
            }
        }
    }
    Ok(root)
}

/// Multilevel decay model: `N_A x N_A` block `H_A`, coupling-row
/// covariance `gamma_jk`, and the realized `N_A x N_B` coupling matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiModel {
    h_a: Array2<Complex64>,
    gamma_cov: Array2<Complex64>,
    spectrum: Spectrum,
    couplings: Array2<Complex64>,
}

impl MultiModel {
    pub fn new(
        h_a: Array2<Complex64>,
        gamma_cov: Array2<Complex64>,
        spectrum: Spectrum,
        couplings: Array2<Complex64>,
    ) -> Result<Self, FanoError> {
        if !is_hermitian(&h_a) || !is_hermitian(&gamma_cov) {
            return Err(FanoError::NonHermitian);
        }
        let n_a = h_a.nrows();
        if gamma_cov.nrows() != n_a
            || couplings.nrows() != n_a
            || couplings.ncols() != spectrum.len()
        {
            return Err(FanoError::Dimensions(format!(
                "H_A is {n_a}x{n_a}, gamma is {}x{}, couplings are {}x{}, reservoir has {} levels",
                gamma_cov.nrows(),
                gamma_cov.ncols(),
                couplings.nrows(),
                couplings.ncols(),
                spectrum.len()
            )));
        }
        Ok(Self {
            h_a,
            gamma_cov,
            spectrum,
            couplings,
        })
    }

    pub fn n_levels(&self) -> usize {
        self.h_a.nrows()
    }

    pub fn h_a(&self) -> &Array2<Complex64> {
        &self.h_a
    }

    pub fn gamma_cov(&self) -> &Array2<Complex64> {
        &self.gamma_cov
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn couplings(&self) -> &Array2<Complex64> {
        &self.couplings
    }

    /// Full `(N_A + N_B)`-dimensional Hamiltonian, for dense oracles.
    pub fn full_hamiltonian(&self) -> Array2<Complex64> {
        let n_a = self.n_levels();
        let n_b = self.spectrum.len();
        let n = n_a + n_b;
        let mut h = Array2::<Complex64>::zeros((n, n));
        for i in 0..n_a {
            for j in 0..n_a {
                h[(i, j)] = self.h_a[(i, j)];
            }
            for r in 0..n_b {
                h[(i, n_a + r)] = self.couplings[(i, r)];
                h[(n_a + r, i)] = self.couplings[(i, r)].conj();
            }
        }
        for (r, &e) in self.spectrum.energies().iter().enumerate() {
            h[(n_a + r, n_a + r)] = Complex64::new(e, 0.0);
        }
        h
    }
}

/// Draw a multilevel model: every reservoir column is an independent
/// complex normal `N_A`-vector with covariance `gamma`, realized
/// through the PSD square root.
pub fn sample_multimodel(
    h_a: Array2<Complex64>,
    gamma_cov: Array2<Complex64>,
    spectrum: Spectrum,
    seed: RandomSeed,
) -> Result<MultiModel, FanoError> {
    if !is_hermitian(&gamma_cov) {
        return Err(FanoError::NonHermitian);
    }
    let root = psd_sqrt(&gamma_cov)?;
    let n_a = gamma_cov.nrows();
    let n_b = spectrum.len();
    let mut rng = seed.rng();
    let mut couplings = Array2::<Complex64>::zeros((n_a, n_b));
    let mut z = Array1::<Complex64>::zeros(n_a);
    for r in 0..n_b {
        for i in 0..n_a {
            let (u, w) = crate::model::normal_pair(&mut rng);
            // unit-covariance complex normal component
            z[i] = Complex64::new(u / 2f64.sqrt(), w / 2f64.sqrt());
        }
        let col = root.dot(&z);
        for i in 0..n_a {
            couplings[(i, r)] = col[i];
        }
    }
    MultiModel::new(h_a, gamma_cov, spectrum, couplings)
}

/// Matrix effective Hamiltonian
/// `H_eff(x - i eps) = H_A + sum_r xi_r xi_r^dag / (x - E_r - i eps)`.
pub fn effective_hamiltonian_matrix(
    model: &MultiModel,
    x: f64,
    epsilon: f64,
) -> Array2<Complex64> {
    assert!(epsilon > 0.0);
    let n_a = model.n_levels();
    let mut h = model.h_a.clone();
    for (r, &e) in model.spectrum.energies().iter().enumerate() {
        let g = 1.0 / Complex64::new(x - e, -epsilon);
        for i in 0..n_a {
            for j in 0..n_a {
                h[(i, j)] += model.couplings[(i, r)] * model.couplings[(j, r)].conj() * g;
            }
        }
    }
    h
}

/// Matrix spectral density
/// `phi_A = (1/pi) R_A [eps + Im H_eff] R_A^dag`, Hermitian positive
/// semidefinite for every `eps > 0`.
pub fn multilevel_density(
    model: &MultiModel,
    x: f64,
    epsilon: f64,
) -> Result<Array2<Complex64>, FanoError> {
    assert!(epsilon > 0.0);
    let n_a = model.n_levels();
    let h_eff = effective_hamiltonian_matrix(model, x, epsilon);
    let mut shifted = h_eff.mapv(|z| -z);
    for i in 0..n_a {
        shifted[(i, i)] += Complex64::new(x, -epsilon);
    }
    let resolvent = shifted
        .inv()
        .map_err(|e| FanoError::Inversion(e.to_string()))?;
    let mut core = imaginary_part(&h_eff);
    for i in 0..n_a {
        core[(i, i)] += Complex64::new(epsilon, 0.0);
    }
    let phi = resolvent.dot(&core).dot(&adjoint(&resolvent));
    Ok(hermitian_part(&phi).mapv(|z| z / std::f64::consts::PI))
}

/// Lineshape of the prepared state `theta`:
/// `f(theta, x) = theta^dag phi_A(x, eps) theta` on the grid.
pub fn lineshape(
    model: &MultiModel,
    theta: &[Complex64],
    grid: &[f64],
    epsilon: f64,
) -> Result<DensityCurve, FanoError> {
    if theta.len() != model.n_levels() {
        return Err(FanoError::Dimensions(format!(
            "theta has {} components for an {}-level block",
            theta.len(),
            model.n_levels()
        )));
    }
    let norm: f64 = theta.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(FanoError::NotNormalized);
    }
    let values: Vec<f64> = grid
        .iter()
        .map(|&x| {
            let phi = multilevel_density(model, x, epsilon)?;
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..theta.len() {
                for j in 0..theta.len() {
                    acc += theta[i].conj() * phi[(i, j)] * theta[j];
                }
            }
            // rounding can leave a negative of order machine epsilon
            Ok(acc.re.max(0.0))
        })
        .collect::<Result<_, FanoError>>()?;
    Ok(DensityCurve::new(grid.to_vec(), values, epsilon)?)
}

/// Constant-`H_eff` decaying amplitude
/// `chi(t) = exp(-i t Re H_eff - |t| Im H_eff - |t| eps)`, evaluated by
/// scaling and squaring. The operator norm is nonincreasing in `|t|`.
pub fn matrix_cf(h_eff: &Array2<Complex64>, t: f64, epsilon: f64) -> Array2<Complex64> {
    assert!(epsilon >= 0.0);
    let re = hermitian_part(h_eff);
    let im = imaginary_part(h_eff);
    let n = h_eff.nrows();
    let mut generator = Array2::<Complex64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            generator[(i, j)] =
                Complex64::new(0.0, -t) * re[(i, j)] - t.abs() * im[(i, j)];
        }
        generator[(i, i)] -= Complex64::new(t.abs() * epsilon, 0.0);
    }
    matrix_exp(&generator)
}

/// Scaling-and-squaring matrix exponential (Taylor core). Ample for the
/// small decaying blocks this crate works with.
pub(crate) fn matrix_exp(a: &Array2<Complex64>) -> Array2<Complex64> {
    let n = a.nrows();
    let norm: f64 = a
        .rows()
        .into_iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.mapv(|z| z / 2f64.powi(squarings as i32));
    let mut result = Array2::<Complex64>::eye(n);
    let mut term = Array2::<Complex64>::eye(n);
    for k in 1..=24 {
        term = term.dot(&scaled).mapv(|z| z / k as f64);
        result = result + &term;
        if term.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

/// Operator (spectral) norm of a small complex matrix.
pub fn operator_norm(a: &Array2<Complex64>) -> f64 {
    let gram = adjoint(a).dot(a);
    match dense::eigh_complex(&gram) {
        Ok((vals, _)) => vals.iter().fold(0.0f64, |m, &v| m.max(v)).max(0.0).sqrt(),
        Err(_) => f64::NAN,
    }
}

/// Matrix-valued smoothed density from a dense eigendecomposition of
/// the full Hamiltonian: the oracle counterpart of
/// [`multilevel_density`].
pub fn multilevel_density_oracle(
    model: &MultiModel,
    x: f64,
    epsilon: f64,
) -> Result<Array2<Complex64>, FanoError> {
    let n_a = model.n_levels();
    let h = model.full_hamiltonian();
    let (vals, vecs) = dense::eigh_complex(&h).map_err(FanoError::Dense)?;
    let mut phi = Array2::<Complex64>::zeros((n_a, n_a));
    for (nu, &omega) in vals.iter().enumerate() {
        let d = x - omega;
        let kernel = epsilon / (std::f64::consts::PI * (d * d + epsilon * epsilon));
        for i in 0..n_a {
            for j in 0..n_a {
                phi[(i, j)] += vecs[(i, nu)] * vecs[(j, nu)].conj() * kernel;
            }
        }
    }
    Ok(phi)
}
