//! Model construction: reservoir spectra, random couplings, and the
//! rank-1 decay model together with its derived scale parameters.
//!
//! The decay model is the bordered Hamiltonian
//!
//! ```text
//!     H = [ E_s   xi^T ]
//!         [ xi*   diag(E_j) ]
//! ```
//!
//! with a single discrete level `E_s` coupled to `N_B` reservoir levels
//! `E_j` on a finite interval. The couplings `xi_j` are complex normal
//! with `<|xi|^2> = v^2`, and the golden-rule width is
//! `Gamma = 2 pi rho_B v^2` with `rho_B = N_B / Delta_E`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("spectrum needs at least one level")]
    EmptySpectrum,
    #[error("interval must satisfy lo < hi")]
    EmptyInterval,
    #[error("custom energies must be strictly increasing")]
    NonIncreasingEnergies,
    #[error("custom energies must lie inside the interval")]
    EnergyOutsideInterval,
    #[error("custom spectrum carries {got} energies but {expected} were requested")]
    CustomCount { expected: usize, got: usize },
    #[error("coupling variance must be positive")]
    NonPositiveVariance,
    #[error("{couplings} couplings do not match {levels} reservoir levels")]
    LengthMismatch { couplings: usize, levels: usize },
}

/// Seed plus stream index for counter-based reproducible draws.
///
/// Identical `(seed, stream)` pairs reproduce identical draws; distinct
/// streams of the same seed are independent, so ensemble members can be
/// generated in any order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RandomSeed {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Same seed, different stream.
    pub fn with_stream(self, stream: u64) -> Self {
        Self {
            seed: self.seed,
            stream,
        }
    }

    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

impl From<u64> for RandomSeed {
    fn from(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }
}

impl From<(u64, u64)> for RandomSeed {
    fn from((seed, stream): (u64, u64)) -> Self {
        Self { seed, stream }
    }
}

/// Box-Muller pair of independent standard normals. Hand-rolled so that
/// sampled models stay bit-identical across dependency upgrades.
pub(crate) fn normal_pair(rng: &mut ChaCha12Rng) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let phi = 2.0 * std::f64::consts::PI * u2;
    (r * phi.cos(), r * phi.sin())
}

fn exponential_gap(rng: &mut ChaCha12Rng) -> f64 {
    let u: f64 = rng.gen();
    -(1.0 - u).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    Equidistant,
    Poisson,
    Custom,
}

/// How to generate a reservoir spectrum.
#[derive(Debug, Clone)]
pub enum SpectrumRecipe {
    /// Levels at the midpoints of a uniform partition of the interval.
    Equidistant,
    /// I.i.d. exponential gaps, affinely rescaled to fill the interval.
    Poisson,
    /// User-provided energies, validated against the interval.
    Custom(Vec<f64>),
}

impl SpectrumRecipe {
    pub fn kind(&self) -> SpectrumKind {
        match self {
            SpectrumRecipe::Equidistant => SpectrumKind::Equidistant,
            SpectrumRecipe::Poisson => SpectrumKind::Poisson,
            SpectrumRecipe::Custom(_) => SpectrumKind::Custom,
        }
    }
}

/// Strictly increasing reservoir energies on a finite interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    energies: Vec<f64>,
    interval: (f64, f64),
    kind: SpectrumKind,
}

impl Spectrum {
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    /// Number of reservoir levels `N_B`.
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Interval width `Delta_E`.
    pub fn width(&self) -> f64 {
        self.interval.1 - self.interval.0
    }

    /// Mean level spacing `omega_B = Delta_E / N_B`.
    pub fn mean_spacing(&self) -> f64 {
        self.width() / self.len() as f64
    }

    /// Mean density of states `rho_B = N_B / Delta_E`.
    pub fn density(&self) -> f64 {
        self.len() as f64 / self.width()
    }

    /// Validated spectrum from raw parts; used when a spectrum is
    /// derived from an existing one (rescaling, merging).
    pub(crate) fn from_parts(
        energies: Vec<f64>,
        interval: (f64, f64),
        kind: SpectrumKind,
    ) -> Result<Self, ModelError> {
        if energies.is_empty() {
            return Err(ModelError::EmptySpectrum);
        }
        if !(interval.0 < interval.1) {
            return Err(ModelError::EmptyInterval);
        }
        if energies.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ModelError::NonIncreasingEnergies);
        }
        if energies[0] < interval.0 || energies[energies.len() - 1] > interval.1 {
            return Err(ModelError::EnergyOutsideInterval);
        }
        Ok(Self {
            energies,
            interval,
            kind,
        })
    }
}

/// Generate a reservoir spectrum of `n_levels` levels on `interval`.
///
/// Degenerate (non-increasing) custom spectra are rejected: everything
/// downstream assumes a non-degenerate reservoir.
pub fn make_spectrum(
    recipe: &SpectrumRecipe,
    n_levels: usize,
    interval: (f64, f64),
    seed: RandomSeed,
) -> Result<Spectrum, ModelError> {
    if n_levels == 0 {
        return Err(ModelError::EmptySpectrum);
    }
    if !(interval.0 < interval.1) {
        return Err(ModelError::EmptyInterval);
    }
    let (lo, hi) = interval;
    let width = hi - lo;
    match recipe {
        SpectrumRecipe::Equidistant => {
            let h = width / n_levels as f64;
            let energies = (0..n_levels).map(|j| lo + (j as f64 + 0.5) * h).collect();
            Spectrum::from_parts(energies, interval, SpectrumKind::Equidistant)
        }
        SpectrumRecipe::Poisson => {
            // n+1 gaps keep every level strictly inside the interval;
            // the affine rescale makes rho_B = N_B / Delta_E exact.
            let mut rng = seed.rng();
            let gaps: Vec<f64> = (0..=n_levels).map(|_| exponential_gap(&mut rng)).collect();
            let total: f64 = gaps.iter().sum();
            let mut energies = Vec::with_capacity(n_levels);
            let mut cum = 0.0;
            for gap in gaps.iter().take(n_levels) {
                cum += gap;
                energies.push(lo + width * (cum / total));
            }
            Spectrum::from_parts(energies, interval, SpectrumKind::Poisson)
        }
        SpectrumRecipe::Custom(energies) => {
            if energies.len() != n_levels {
                return Err(ModelError::CustomCount {
                    expected: n_levels,
                    got: energies.len(),
                });
            }
            Spectrum::from_parts(energies.clone(), interval, SpectrumKind::Custom)
        }
    }
}

/// Coupling vector `xi_j` with its nominal per-level variance `v^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Couplings {
    values: Vec<Complex64>,
    variance_v2: f64,
}

impl Couplings {
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Nominal `v^2 = <|xi|^2>`.
    pub fn variance(&self) -> f64 {
        self.variance_v2
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Deterministic couplings, all equal to the real value `v`.
    pub fn constant(v: f64, n: usize) -> Self {
        Self {
            values: vec![Complex64::new(v, 0.0); n],
            variance_v2: v * v,
        }
    }

    pub(crate) fn from_parts(values: Vec<Complex64>, variance_v2: f64) -> Self {
        Self {
            values,
            variance_v2,
        }
    }
}

/// Draw `n` independent complex normal couplings with `<|xi|^2> = v^2`.
///
/// Real and imaginary parts are independent normals of variance
/// `v^2 / 2` each, so `<xi> = 0` and `<xi^2> = 0`.
pub fn sample_couplings(
    variance_v2: f64,
    n: usize,
    seed: RandomSeed,
) -> Result<Couplings, ModelError> {
    if !(variance_v2 > 0.0) {
        return Err(ModelError::NonPositiveVariance);
    }
    let mut rng = seed.rng();
    let scale = (variance_v2 / 2.0).sqrt();
    let values = (0..n)
        .map(|_| {
            let (u, w) = normal_pair(&mut rng);
            Complex64::new(scale * u, scale * w)
        })
        .collect();
    Ok(Couplings {
        values,
        variance_v2,
    })
}

/// Rank-1 decay model: one discrete level coupled to a reservoir.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayModel {
    level_energy: f64,
    spectrum: Spectrum,
    couplings: Couplings,
}

impl DecayModel {
    pub fn level_energy(&self) -> f64 {
        self.level_energy
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn couplings(&self) -> &Couplings {
        &self.couplings
    }
}

/// Assemble a rank-1 model; coupling and level counts must match.
pub fn build_rank1_model(
    level_energy: f64,
    spectrum: Spectrum,
    couplings: Couplings,
) -> Result<DecayModel, ModelError> {
    if couplings.len() != spectrum.len() {
        return Err(ModelError::LengthMismatch {
            couplings: couplings.len(),
            levels: spectrum.len(),
        });
    }
    Ok(DecayModel {
        level_energy,
        spectrum,
        couplings,
    })
}

/// Convenience constructor: spectrum from a recipe plus sampled
/// couplings, with the spectrum drawn on stream `seed.stream` and the
/// couplings on stream `seed.stream + 1`.
pub fn sample_rank1_model(
    recipe: &SpectrumRecipe,
    n_levels: usize,
    interval: (f64, f64),
    level_energy: f64,
    variance_v2: f64,
    seed: RandomSeed,
) -> Result<DecayModel, ModelError> {
    let spectrum = make_spectrum(recipe, n_levels, interval, seed)?;
    let couplings = sample_couplings(variance_v2, n_levels, seed.with_stream(seed.stream + 1))?;
    build_rank1_model(level_energy, spectrum, couplings)
}

/// Golden-rule scale parameters of a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    /// Golden-rule width `Gamma = 2 pi rho_B v^2`.
    pub gamma: f64,
    /// States under the resonance, `N_Gamma = rho_B * Gamma`.
    pub n_gamma: f64,
    /// Mean level spacing `omega_B`.
    pub omega_b: f64,
    /// Mean density of states `rho_B`.
    pub rho_b: f64,
}

pub fn derived_params(model: &DecayModel) -> DerivedParams {
    let rho_b = model.spectrum().density();
    let gamma = 2.0 * std::f64::consts::PI * rho_b * model.couplings().variance();
    DerivedParams {
        gamma,
        n_gamma: rho_b * gamma,
        omega_b: model.spectrum().mean_spacing(),
        rho_b,
    }
}
