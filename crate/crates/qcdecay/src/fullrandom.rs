//! Dense random-interaction models: every basis state of a diagonal
//! `H_0` decays under a full complex-normal perturbation `V`, with a
//! spectral density close to the rank-1 Lorentz line at the same
//! golden-rule width, and a second independent perturbation doubles the
//! fitted width (the convolution property of the line).

use ndarray::Array2;
use num_complex::Complex64;
use thiserror::Error;

use crate::cauchy::StepDistribution;
use crate::dense;
use crate::model::{make_spectrum, RandomSeed, SpectrumRecipe};

/// Dense diagonalization guard; configurable per call site.
pub const DEFAULT_DENSE_CAP: usize = 2000;

#[derive(Debug, Error)]
pub enum FullRandomError {
    #[error("model needs at least two levels")]
    TooSmall,
    #[error("inputs must be positive")]
    BadParameters,
    #[error("dimension {n} exceeds the dense diagonalization cap {cap}")]
    DenseCap { n: usize, cap: usize },
    #[error("basis index {k} is within N_Gamma = {n_gamma:.1} levels of a spectral edge")]
    TooCloseToEdge { k: usize, n_gamma: f64 },
    #[error("eigensolver failed: {0}")]
    Dense(String),
    #[error("distribution assembly failed: {0}")]
    Distribution(#[from] crate::cauchy::CauchyError),
    #[error("spectrum construction failed: {0}")]
    Model(#[from] crate::model::ModelError),
}

/// Equidistant `H_0` plus a Hermitian complex-normal interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct FullModel {
    h0_energies: Vec<f64>,
    interaction: Array2<Complex64>,
    rho0: f64,
    v2: f64,
}

impl FullModel {
    pub fn len(&self) -> usize {
        self.h0_energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h0_energies.is_empty()
    }

    pub fn h0_energies(&self) -> &[f64] {
        &self.h0_energies
    }

    pub fn interaction(&self) -> &Array2<Complex64> {
        &self.interaction
    }

    pub fn density(&self) -> f64 {
        self.rho0
    }

    pub fn variance(&self) -> f64 {
        self.v2
    }

    /// Golden-rule width `Gamma = 2 pi rho_0 v^2`.
    pub fn gamma(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.rho0 * self.v2
    }

    /// Spectral range of `H_0`.
    pub fn delta_e(&self) -> f64 {
        self.len() as f64 / self.rho0
    }

    /// Number of levels under the resonance.
    pub fn n_gamma(&self) -> f64 {
        self.rho0 * self.gamma()
    }

    /// Whether the golden-rule regime `Gamma << Delta_E` holds; callers
    /// surface a warning when it does not.
    pub fn separation_ok(&self) -> bool {
        self.gamma() < self.delta_e()
    }

    /// `H_0 + V`.
    pub fn hamiltonian(&self) -> Array2<Complex64> {
        let n = self.len();
        let mut h = self.interaction.clone();
        for k in 0..n {
            h[(k, k)] += Complex64::new(self.h0_energies[k], 0.0);
        }
        h
    }
}

/// Build the model: `n` equidistant levels of density `rho0` centered
/// on zero, and a Hermitian `V` with independent complex normal
/// off-diagonal entries of variance `v2` and a real normal diagonal of
/// the same variance.
pub fn build_full_model(
    n: usize,
    rho0: f64,
    v2: f64,
    seed: RandomSeed,
) -> Result<FullModel, FullRandomError> {
    if n < 2 {
        return Err(FullRandomError::TooSmall);
    }
    if !(rho0 > 0.0 && v2 > 0.0) {
        return Err(FullRandomError::BadParameters);
    }
    let half_width = n as f64 / (2.0 * rho0);
    let spectrum = make_spectrum(
        &SpectrumRecipe::Equidistant,
        n,
        (-half_width, half_width),
        seed,
    )?;

    let mut rng = seed.rng();
    let mut v = Array2::<Complex64>::zeros((n, n));
    let off_scale = (v2 / 2.0).sqrt();
    let diag_scale = v2.sqrt();
    for i in 0..n {
        let (u, _) = crate::model::normal_pair(&mut rng);
        v[(i, i)] = Complex64::new(diag_scale * u, 0.0);
        for j in (i + 1)..n {
            let (re, im) = crate::model::normal_pair(&mut rng);
            let xi = Complex64::new(off_scale * re, off_scale * im);
            v[(i, j)] = xi;
            v[(j, i)] = xi.conj();
        }
    }
    Ok(FullModel {
        h0_energies: spectrum.energies().to_vec(),
        interaction: v,
        rho0,
        v2,
    })
}

fn eigen_masses_of_basis_state(
    h: &Array2<Complex64>,
    k: usize,
) -> Result<StepDistribution, FullRandomError> {
    let (vals, vecs) = dense::eigh_complex(h).map_err(FullRandomError::Dense)?;
    let masses: Vec<f64> = (0..vals.len()).map(|nu| vecs[(k, nu)].norm_sqr()).collect();
    Ok(StepDistribution::new(vals, masses)?)
}

fn check_interior(model: &FullModel, k: usize) -> Result<(), FullRandomError> {
    let n_gamma = model.n_gamma();
    let margin = n_gamma.ceil() as usize;
    if k < margin || k + margin >= model.len() {
        return Err(FullRandomError::TooCloseToEdge { k, n_gamma });
    }
    Ok(())
}

/// Occupation distribution `|<k|omega_nu>|^2` of basis state `k` over
/// the eigenstates of `H_0 + V`; `k` must sit at least `N_Gamma` levels
/// away from both spectral edges.
pub fn basis_state_distribution(
    model: &FullModel,
    k: usize,
) -> Result<StepDistribution, FullRandomError> {
    basis_state_distribution_capped(model, k, DEFAULT_DENSE_CAP)
}

pub fn basis_state_distribution_capped(
    model: &FullModel,
    k: usize,
    cap: usize,
) -> Result<StepDistribution, FullRandomError> {
    if model.len() > cap {
        return Err(FullRandomError::DenseCap {
            n: model.len(),
            cap,
        });
    }
    check_interior(model, k)?;
    eigen_masses_of_basis_state(&model.hamiltonian(), k)
}

/// Width fits from adding a second independent perturbation:
/// `H_2 = H_0 + V + V'`. All widths are interquartile-range estimates
/// of the Cauchy scale (IQR = Gamma for the pure line).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvolutionReport {
    /// Width of the `H_0 -> H_1` basis-state distribution.
    pub gamma1: f64,
    /// Width of the second step, `H_1 -> H_2`, seen from the `H_1`
    /// eigenstate nearest the probed level.
    pub gamma2: f64,
    /// Width of the combined `H_0 -> H_2` distribution, to be compared
    /// with `gamma1 + gamma2 ~ 2 Gamma`.
    pub gamma_sum_fit: f64,
}

/// Run the convolution check at basis state `k` with an independent
/// second draw.
pub fn added_interaction_convolution_check(
    model: &FullModel,
    k: usize,
    seed2: RandomSeed,
) -> Result<ConvolutionReport, FullRandomError> {
    check_interior(model, k)?;
    let n = model.len();
    let prime = build_full_model(n, model.rho0, model.v2, seed2)?;

    let h1 = model.hamiltonian();
    let mut h2 = h1.clone();
    for i in 0..n {
        for j in 0..n {
            h2[(i, j)] += prime.interaction[(i, j)];
        }
    }

    let dist1 = eigen_masses_of_basis_state(&h1, k)?;
    let gamma1 = dist1.interquartile_width();

    let dist02 = eigen_masses_of_basis_state(&h2, k)?;
    let gamma_sum_fit = dist02.interquartile_width();

    // second step in the H_1 eigenbasis: pick the eigenstate nearest
    // the unperturbed level and expand it over the H_2 eigenstates
    let (vals1, vecs1) = dense::eigh_complex(&h1).map_err(FullRandomError::Dense)?;
    let (vals2, vecs2) = dense::eigh_complex(&h2).map_err(FullRandomError::Dense)?;
    let e_k = model.h0_energies[k];
    let nearest = vals1
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1 - e_k)
                .abs()
                .partial_cmp(&(b.1 - e_k).abs())
                .unwrap()
        })
        .map(|(i, _)| i)
        .unwrap();
    let masses: Vec<f64> = (0..n)
        .map(|u| {
            let mut overlap = Complex64::new(0.0, 0.0);
            for i in 0..n {
                overlap += vecs1[(i, nearest)].conj() * vecs2[(i, u)];
            }
            overlap.norm_sqr()
        })
        .collect();
    let dist12 = StepDistribution::new(vals2, masses)?;
    let gamma2 = dist12.interquartile_width();

    Ok(ConvolutionReport {
        gamma1,
        gamma2,
        gamma_sum_fit,
    })
}
