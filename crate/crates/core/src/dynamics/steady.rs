//! Fixed points of the Riccati flow and the associated stationary `d`, `ξ̇`.

use alloc::format;

use nalgebra::DMatrixView;

use crate::error::{Error, Result};
use crate::generator::MomentCoefficients;
use crate::linalg::{omega_c, solve_checked, solve_sylvester_transpose, sym};
use crate::{CMatrix, CVector, C64};

use super::{Dopri5, GaussianMomentState, IntegratorConfig, MomentFlow};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateOptions {
    /// Integration hands over to Newton once `‖σ̇‖_F < handoff_tol·‖σ‖_F`.
    pub handoff_tol: f64,
    /// Longest integration time before giving up.
    pub max_time: f64,
    pub newton_max_iter: usize,
    /// Required bound on the algebraic Riccati residual.
    pub residual_tol: f64,
    pub integrator: IntegratorConfig,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self {
            handoff_tol: 1e-6,
            max_time: 1e4,
            newton_max_iter: 30,
            residual_tol: 1e-10,
            integrator: IntegratorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub sigma: CMatrix,
    pub mean: CVector,
    /// `ξ̇` at the fixed point.
    pub xi_rate: C64,
    /// `‖σQσ + Aσ + σAᵀ + D‖_F`.
    pub residual: f64,
}

impl SteadyState {
    pub fn state(&self, xi: C64) -> GaussianMomentState {
        GaussianMomentState { sigma: self.sigma.clone(), mean: self.mean.clone(), xi }
    }
}

fn residual(co: &MomentCoefficients, sigma: &CMatrix) -> CMatrix {
    let r = sigma * &co.riccati * sigma + &co.drift * sigma + sigma * co.drift.transpose() + &co.diffusion;
    sym(&r)
}

/// Steady state reached from the vacuum covariance.
pub fn steady_state(co: &MomentCoefficients, opts: &SteadyStateOptions) -> Result<SteadyState> {
    steady_state_from(co, &CMatrix::identity(co.dim(), co.dim()), opts)
}

/// Steady state reached by flowing from `sigma0` (a warm start), then
/// polishing with Newton iterations on the algebraic Riccati equation.
pub fn steady_state_from(
    co: &MomentCoefficients,
    sigma0: &CMatrix,
    opts: &SteadyStateOptions,
) -> Result<SteadyState> {
    opts.integrator.validate()?;
    let n = co.dim();
    if sigma0.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "initial covariance is {:?}, expected {n}x{n}",
            sigma0.shape()
        )));
    }
    let flow = MomentFlow::new(co);
    let settled = |s: &[C64], ds: &[C64], tol: f64| {
        let norm_s: f64 = s.iter().map(|z| z.norm_sqr()).sum();
        let norm_ds: f64 = ds.iter().map(|z| z.norm_sqr()).sum();
        libm::sqrt(norm_ds) < tol * libm::sqrt(norm_s)
    };
    let mut stepper = Dopri5::new(
        |y: &[C64], dy: &mut [C64]| {
            flow.sigma_dot(DMatrixView::from_slice(y, n, n), dy);
        },
        opts.integrator,
        0.0,
        sigma0.as_slice().to_vec(),
    );
    let mut tol = opts.handoff_tol;
    let (sigma, res) = loop {
        while !settled(stepper.y(), stepper.dy(), tol) {
            if stepper.t() >= opts.max_time {
                return Err(Error::NoSteadyState(format!(
                    "covariance did not settle within t = {}",
                    opts.max_time
                )));
            }
            stepper.advance(opts.max_time).map_err(|e| {
                Error::NoSteadyState(format!("integration towards the steady state failed: {e}"))
            })?;
        }
        let sigma = sym(&CMatrix::from_column_slice(n, n, stepper.y()));
        let (sigma, res) = newton_polish(co, sigma, opts.newton_max_iter);
        if res < opts.residual_tol {
            break (sigma, res);
        }
        if tol < 1e-9 {
            return Err(Error::NoSteadyState(format!("Riccati residual {res:e} above tolerance")));
        }
        tol *= 1e-2;
    };
    let om = omega_c(n / 2);
    let target = &sigma * (&om * &co.anti_linear) - &co.comm_linear * C64::new(0.0, 1.0);
    let mean = if target.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        CVector::zeros(n)
    } else {
        let m = &co.drift + &sigma * &co.riccati;
        solve_checked(&m, &target, "stationary first moments: A + σQ is singular")?
    };
    let state = GaussianMomentState { sigma, mean, xi: C64::new(0.0, 0.0) };
    let (_, _, xi_rate) = super::rhs(&state, co)?;
    Ok(SteadyState { sigma: state.sigma, mean: state.mean, xi_rate, residual: res })
}

fn newton_polish(co: &MomentCoefficients, mut sigma: CMatrix, max_iter: usize) -> (CMatrix, f64) {
    let mut r = residual(co, &sigma);
    let mut res = r.norm();
    for _ in 0..max_iter {
        if res == 0.0 {
            break;
        }
        let m = &co.drift + &sigma * &co.riccati;
        let step = match solve_sylvester_transpose(&m, &(-&r)) {
            Ok(x) => x,
            Err(_) => break,
        };
        let cand = sym(&(&sigma + step));
        let r_new = residual(co, &cand);
        let res_new = r_new.norm();
        if !(res_new < res) {
            break;
        }
        let small_gain = res_new > 0.5 * res;
        sigma = cand;
        r = r_new;
        res = res_new;
        if small_gain && res < 1e-13 * (1.0 + sigma.norm()) {
            break;
        }
    }
    (sigma, res)
}
