//! Closed moment equations: right-hand side, time evolution and steady states.

mod integrator;
mod steady;

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrixView;

use crate::error::{Error, Result};
use crate::generator::MomentCoefficients;
use crate::linalg::{max_asymmetry, omega_c, sym, trace};
use crate::{CMatrix, CVector, C64};

pub(crate) use integrator::Dopri5;
pub use steady::{steady_state, steady_state_from, SteadyState, SteadyStateOptions};

/// The Gaussian ansatz `μ ∝ e^{−ξ}` with complex covariance `σ` and complex
/// first moments `d`; `Tr μ = e^{−ξ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMomentState {
    pub sigma: CMatrix,
    pub mean: CVector,
    pub xi: C64,
}

impl GaussianMomentState {
    pub fn new(sigma: CMatrix, mean: CVector, xi: C64) -> Result<Self> {
        let n = sigma.nrows();
        if n == 0 || n % 2 != 0 || sigma.ncols() != n || mean.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "state with sigma {:?} and mean of length {}",
                sigma.shape(),
                mean.len()
            )));
        }
        let dev = max_asymmetry(&sigma);
        if dev > 1e-10 * (1.0 + sigma.norm()) {
            return Err(Error::InvalidParameter(format!("sigma is not symmetric (deviation {dev:e})")));
        }
        Ok(Self { sigma: sym(&sigma), mean, xi })
    }

    /// Vacuum on `n_modes` modes: `σ = 𝟙`, `d = 0`, `ξ = 0`.
    pub fn vacuum(n_modes: usize) -> Self {
        Self {
            sigma: CMatrix::identity(2 * n_modes, 2 * n_modes),
            mean: CVector::zeros(2 * n_modes),
            xi: C64::new(0.0, 0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn n_modes(&self) -> usize {
        self.dim() / 2
    }

    /// `Tr μ = e^{−ξ}`.
    pub fn trace(&self) -> C64 {
        (-self.xi).exp()
    }

    fn to_flat(&self) -> Vec<C64> {
        let mut y = Vec::with_capacity(self.dim() * (self.dim() + 1) + 1);
        y.extend_from_slice(self.sigma.as_slice());
        y.extend_from_slice(self.mean.as_slice());
        y.push(self.xi);
        y
    }

    fn from_flat(y: &[C64], n: usize) -> (Self, f64) {
        let sigma = CMatrix::from_column_slice(n, n, &y[..n * n]);
        let dev = max_asymmetry(&sigma);
        let state = Self {
            sigma: sym(&sigma),
            mean: CVector::from_column_slice(&y[n * n..n * n + n]),
            xi: y[n * n + n],
        };
        (state, dev)
    }
}

/// Tolerances and limits of the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Any state entry above this modulus is treated as a finite-time escape.
    pub blowup_norm: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-12, max_step: f64::INFINITY, blowup_norm: 1e8 }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.max_step > 0.0 && self.blowup_norm > 0.0;
        if !ok || self.rel_tol.is_nan() || self.abs_tol.is_nan() {
            return Err(Error::InvalidParameter(
                "integrator tolerances, max_step and blowup_norm must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Coefficients preprocessed for repeated right-hand-side evaluations.
pub(crate) struct MomentFlow<'a> {
    co: &'a MomentCoefficients,
    omega_a: CVector,
    trace_term: C64,
    n: usize,
}

impl<'a> MomentFlow<'a> {
    pub(crate) fn new(co: &'a MomentCoefficients) -> Self {
        let n = co.dim();
        let om = omega_c(n / 2);
        let omega_a = &om * &co.anti_linear;
        let trace_term = trace(&(&co.trace_form * &om)) * 0.5;
        Self { co, omega_a, trace_term, n }
    }

    /// `σ̇ = P + Pᵀ + D` with `P = Aσ + ½σQσ`, exactly symmetric.
    pub(crate) fn sigma_dot(&self, sigma: DMatrixView<'_, C64>, out: &mut [C64]) -> CMatrix {
        let sq = sigma * &self.co.riccati;
        let p = &self.co.drift * sigma + (&sq * sigma) * C64::new(0.5, 0.0);
        let n = self.n;
        for j in 0..n {
            for i in 0..n {
                out[j * n + i] = p[(i, j)] + p[(j, i)] + self.co.diffusion[(i, j)];
            }
        }
        sq
    }

    pub(crate) fn flat(&self, y: &[C64], dy: &mut [C64]) {
        let n = self.n;
        let sigma = DMatrixView::from_slice(&y[..n * n], n, n);
        let d = nalgebra::DVectorView::from_slice(&y[n * n..n * n + n], n);
        let sq = self.sigma_dot(sigma, &mut dy[..n * n]);
        let qd = &self.co.riccati * d;
        let dd = &self.co.drift * d + &sq * d - sigma * &self.omega_a + &self.co.comm_linear * C64::new(0.0, 1.0);
        dy[n * n..n * n + n].copy_from_slice(dd.as_slice());
        let tr_sq = (0..n).map(|i| sq[(i, i)]).sum::<C64>();
        // −2aᵀΩd = +2(Ωa)ᵀd
        dy[n * n + n] =
            -d.dot(&qd) - tr_sq * 0.5 - self.trace_term + self.omega_a.dot(&d) * 2.0 + self.co.constant;
    }
}

/// Time derivatives `(σ̇, ḋ, ξ̇)` of the moment equations.
pub fn rhs(state: &GaussianMomentState, co: &MomentCoefficients) -> Result<(CMatrix, CVector, C64)> {
    let n = co.dim();
    if state.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "state has dimension {}, coefficients {}",
            state.dim(),
            n
        )));
    }
    let flow = MomentFlow::new(co);
    let y = state.to_flat();
    let mut dy = alloc::vec![C64::new(0.0, 0.0); y.len()];
    flow.flat(&y, &mut dy);
    Ok((
        CMatrix::from_column_slice(n, n, &dy[..n * n]),
        CVector::from_column_slice(&dy[n * n..n * n + n]),
        dy[n * n + n],
    ))
}

/// Sampled solution of the moment equations.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GaussianMomentState>,
    /// Largest `|σ − σᵀ|` entry seen before re-symmetrization.
    pub max_asymmetry: f64,
}

impl Trajectory {
    pub fn last(&self) -> &GaussianMomentState {
        self.states.last().expect("trajectory has at least one sample")
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("time grid is empty".into()));
    }
    if !grid.iter().all(|t| t.is_finite()) || grid[0] < 0.0 {
        return Err(Error::InvalidParameter("time grid must be finite and non-negative".into()));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("time grid must be sorted".into()));
    }
    Ok(())
}

/// Integrates from `t = 0` and samples the state at every grid time.
pub fn evolve(
    state0: &GaussianMomentState,
    co: &MomentCoefficients,
    t_grid: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    check_grid(t_grid)?;
    let n = co.dim();
    if state0.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial state has dimension {}, coefficients {}",
            state0.dim(),
            n
        )));
    }
    let flow = MomentFlow::new(co);
    let t_end = *t_grid.last().expect("grid is nonempty");
    let mut stepper = Dopri5::new(|y: &[C64], dy: &mut [C64]| flow.flat(y, dy), *cfg, 0.0, state0.to_flat());
    let mut buf = alloc::vec![C64::new(0.0, 0.0); state0.to_flat().len()];
    let mut times = Vec::with_capacity(t_grid.len());
    let mut states = Vec::with_capacity(t_grid.len());
    let mut worst = max_asymmetry(&state0.sigma);
    for &t in t_grid {
        while stepper.t() < t {
            stepper.advance(t_end)?;
            let sig = DMatrixView::from_slice(&stepper.y()[..n * n], n, n);
            worst = worst.max(max_asymmetry(&sig.into_owned()));
        }
        stepper.dense(t, &mut buf);
        let (s, dev) = GaussianMomentState::from_flat(&buf, n);
        worst = worst.max(dev);
        times.push(t);
        states.push(s);
    }
    Ok(Trajectory { times, states, max_asymmetry: worst })
}

/// State at a single time `t`.
pub fn evolve_to(
    state0: &GaussianMomentState,
    co: &MomentCoefficients,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<GaussianMomentState> {
    let traj = evolve(state0, co, &[t], cfg)?;
    Ok(traj.states.into_iter().next().expect("one sample"))
}
