//! Parametrized quadratic bosonic models.
//!
//! A model is a family `θ ↦ (ℍ_θ, 𝕙_θ, 𝕃_mon(θ), 𝕃_unm(θ))` describing the
//! Hamiltonian `Ĥ = ½ r̂ᵀℍr̂ + 𝕙ᵀΩr̂` and linear jump operators `Ĵ = 𝕃 r̂`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use core::fmt;

use crate::error::{Error, Result};
use crate::linalg::{max_asymmetry_real, omega};
use crate::{CMatrix, RMatrix, RVector, C64};

type RealMatrixMap = Arc<dyn Fn(f64) -> RMatrix + Send + Sync>;
type RealVectorMap = Arc<dyn Fn(f64) -> RVector + Send + Sync>;
type JumpMap = Arc<dyn Fn(f64) -> CMatrix + Send + Sync>;

/// Symmetric tolerance on the Hamiltonian matrix before it is symmetrized.
const SYMMETRY_TOL: f64 = 1e-12;

/// The symplectic form Ω for a fixed number of modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    pub n_modes: usize,
    pub matrix: RMatrix,
}

impl SymplecticForm {
    pub fn new(n_modes: usize) -> Self {
        Self { n_modes, matrix: omega(n_modes) }
    }
}

/// A model evaluated at one parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPoint {
    pub n_modes: usize,
    pub hamiltonian: RMatrix,
    pub drive: RVector,
    pub monitored: CMatrix,
    pub unmonitored: CMatrix,
}

impl ModelPoint {
    /// Monitored rows stacked on top of the unmonitored ones.
    pub fn all_jumps(&self) -> CMatrix {
        let dim = 2 * self.n_modes;
        let (nm, nu) = (self.monitored.nrows(), self.unmonitored.nrows());
        let mut out = CMatrix::zeros(nm + nu, dim);
        out.rows_mut(0, nm).copy_from(&self.monitored);
        out.rows_mut(nm, nu).copy_from(&self.unmonitored);
        out
    }

    /// Sum over channels of `ℓ·ℓ†`.
    pub fn total_rate(&self) -> f64 {
        let rate = |m: &CMatrix| m.iter().map(|z| z.norm_sqr()).sum::<f64>();
        rate(&self.monitored) + rate(&self.unmonitored)
    }
}

/// A parametrized quadratic model.
///
/// The evaluation maps must be pure; the model is immutable and cheap to
/// clone, so it can be shared between worker threads.
#[derive(Clone)]
pub struct QuadraticModel {
    name: String,
    n_modes: usize,
    hamiltonian: RealMatrixMap,
    drive: RealVectorMap,
    monitored: JumpMap,
    unmonitored: JumpMap,
}

impl fmt::Debug for QuadraticModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuadraticModel")
            .field("name", &self.name)
            .field("n_modes", &self.n_modes)
            .finish_non_exhaustive()
    }
}

impl QuadraticModel {
    /// Builds a model from its three evaluation maps (jumps split in two).
    ///
    /// The maps are probed at `θ = 0` so that inconsistent dimensions are
    /// reported at construction.
    pub fn new(
        name: impl Into<String>,
        n_modes: usize,
        hamiltonian: impl Fn(f64) -> RMatrix + Send + Sync + 'static,
        drive: impl Fn(f64) -> RVector + Send + Sync + 'static,
        monitored: impl Fn(f64) -> CMatrix + Send + Sync + 'static,
        unmonitored: impl Fn(f64) -> CMatrix + Send + Sync + 'static,
    ) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidParameter("n_modes must be positive".to_string()));
        }
        let model = Self {
            name: name.into(),
            n_modes,
            hamiltonian: Arc::new(hamiltonian),
            drive: Arc::new(drive),
            monitored: Arc::new(monitored),
            unmonitored: Arc::new(unmonitored),
        };
        model.at(0.0)?;
        Ok(model)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Evaluates the family at `θ`.
    pub fn at(&self, theta: f64) -> Result<ModelPoint> {
        let dim = 2 * self.n_modes;
        let mut h = (self.hamiltonian)(theta);
        let drive = (self.drive)(theta);
        let monitored = (self.monitored)(theta);
        let unmonitored = (self.unmonitored)(theta);
        if h.shape() != (dim, dim) {
            return Err(Error::DimensionMismatch(format!(
                "hamiltonian is {:?}, expected {dim}x{dim}",
                h.shape()
            )));
        }
        if drive.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "drive has length {}, expected {dim}",
                drive.len()
            )));
        }
        for (what, m) in [("monitored", &monitored), ("unmonitored", &unmonitored)] {
            if m.nrows() > 0 && m.ncols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "{what} jump rows have {} columns, expected {dim}",
                    m.ncols()
                )));
            }
        }
        let dev = max_asymmetry_real(&h);
        if dev > SYMMETRY_TOL {
            return Err(Error::AsymmetricHamiltonian(dev));
        }
        h = (&h + h.transpose()) * 0.5;
        let finite = h.iter().chain(drive.iter()).all(|x| x.is_finite())
            && monitored.iter().chain(unmonitored.iter()).all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite {
            return Err(Error::InvalidParameter(format!(
                "model '{}' is not finite at theta = {theta}",
                self.name
            )));
        }
        let fix = |m: CMatrix| if m.nrows() == 0 { CMatrix::zeros(0, dim) } else { m };
        Ok(ModelPoint {
            n_modes: self.n_modes,
            hamiltonian: h,
            drive,
            monitored: fix(monitored),
            unmonitored: fix(unmonitored),
        })
    }

    /// The deformation `Ĥ → (1+θ)Ĥ`, `Ĵ → √(1+θ)Ĵ` around `base_theta`.
    ///
    /// The returned model is parametrized by the deformation `θ` (defined for
    /// `θ > −1`); its value at `θ = 0` is this model at `base_theta`.
    pub fn tur_deformed(&self, base_theta: f64) -> QuadraticModel {
        let (h, d, m, u) = (
            self.hamiltonian.clone(),
            self.drive.clone(),
            self.monitored.clone(),
            self.unmonitored.clone(),
        );
        let scale = |th: f64| C64::new(libm::sqrt(1.0 + th), 0.0);
        QuadraticModel {
            name: format!("{}-tur-deformed", self.name),
            n_modes: self.n_modes,
            hamiltonian: Arc::new(move |th| h(base_theta) * (1.0 + th)),
            drive: Arc::new(move |th| d(base_theta) * (1.0 + th)),
            monitored: Arc::new(move |th| m(base_theta) * scale(th)),
            unmonitored: Arc::new(move |th| u(base_theta) * scale(th)),
        }
    }
}

/// The optical parametric oscillator `Ĥ = ω â†â − i(χ/2)(â² − â†²)`, decay `κ`
/// split into a monitored fraction `η` and an unmonitored remainder.
///
/// The parameter `θ` shifts the detuning: `ℍ(θ) = [[ω+θ, −χ], [−χ, ω+θ]]`.
/// With this sign of χ the Lindblad drift is
/// `[[−χ−κ/2, ω], [−ω, χ−κ/2]]` and the diffusion is `κ·𝟙`.
pub fn opo_model(omega: f64, chi: f64, kappa: f64, eta: f64) -> Result<QuadraticModel> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter(format!(
            "eta must lie in [0, 1], got {eta}"
        )));
    }
    if !omega.is_finite() || !chi.is_finite() {
        return Err(Error::InvalidParameter("omega and chi must be finite".to_string()));
    }
    // â = (x̂ + i p̂)/√2, so √γ â has row √(γ/2)·(1, i)
    let row = move |rate: f64| {
        let s = libm::sqrt(rate / 2.0);
        CMatrix::from_row_slice(1, 2, &[C64::new(s, 0.0), C64::new(0.0, s)])
    };
    let mon_rate = eta * kappa;
    let unm_rate = (1.0 - eta) * kappa;
    QuadraticModel::new(
        "opo",
        1,
        move |th| RMatrix::from_row_slice(2, 2, &[omega + th, -chi, -chi, omega + th]),
        |_| RVector::zeros(2),
        move |_| if mon_rate > 0.0 { row(mon_rate) } else { CMatrix::zeros(0, 2) },
        move |_| if unm_rate > 0.0 { row(unm_rate) } else { CMatrix::zeros(0, 2) },
    )
}
