//! Overlaps, fidelities and quantum Fisher information from TSME states.
//!
//! The joint QFI of system and environment follows from the log-overlap
//! `ξ(θ, θ+ε)` of a two-sided master equation; the environment-only QFI
//! follows from the trace norm of the same Gaussian operator.

use alloc::vec;
use alloc::vec::Vec;

use crate::dynamics::{evolve, steady_state, GaussianMomentState, IntegratorConfig, SteadyStateOptions};
use crate::error::{Error, Result};
use crate::generator::tsme_generator;
use crate::linalg::{complexify, imag_part, omega, real_part, sqrtm_spd};
use crate::model::QuadraticModel;
use crate::{RMatrix, RVector, C64};

/// Finite-difference stencil for even second derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    ThreePoint,
    FivePoint,
}

/// Finite-difference settings.
///
/// The effective step is `step · max(1, |x|)` around the expansion point `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub step: f64,
    pub stencil: Stencil,
    /// Combine steps `h` and `h/2` to cancel the leading truncation error.
    pub richardson: bool,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self { step: 1e-3, stencil: Stencil::ThreePoint, richardson: false }
    }
}

impl FdConfig {
    pub fn with_step(step: f64) -> Self {
        Self { step, ..Self::default() }
    }

    pub fn effective_step(&self, at: f64) -> Result<f64> {
        if !self.step.is_finite() {
            return Err(Error::InvalidParameter("finite-difference step must be finite".into()));
        }
        let h = self.step * at.abs().max(1.0);
        if h == 0.0 {
            return Err(Error::ZeroStep);
        }
        if h < 0.0 {
            return Err(Error::InvalidParameter("finite-difference step must be positive".into()));
        }
        Ok(h)
    }
}

type Probe<'a> = dyn FnMut(f64) -> Result<Vec<f64>> + 'a;

fn pair(g: &mut Probe<'_>, h: f64) -> Result<Vec<f64>> {
    let a = g(h)?;
    let b = g(-h)?;
    Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect())
}

fn second(g: &mut Probe<'_>, h: f64, stencil: Stencil) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let s1 = pair(g, h)?;
    let three: Vec<f64> = s1.iter().map(|s| s / (h * h)).collect();
    match stencil {
        Stencil::ThreePoint => Ok((three, None)),
        Stencil::FivePoint => {
            let s2 = pair(g, 2.0 * h)?;
            let five = s1.iter().zip(&s2).map(|(a, b)| (16.0 * a - b) / (12.0 * h * h)).collect();
            Ok((five, Some(three)))
        }
    }
}

/// Second derivative at `0` of a function vanishing at `0`, from symmetric
/// probes `g(±h)` (and `g(±2h)` for the five-point stencil).
///
/// Probes are evaluated in a fixed order, so results are deterministic.
pub fn even_second_derivative(g: &mut Probe<'_>, h: f64, fd: &FdConfig) -> Result<Vec<f64>> {
    if h == 0.0 {
        return Err(Error::ZeroStep);
    }
    let (coarse, lower) = second(g, h, fd.stencil)?;
    let (value, reference) = if fd.richardson {
        let (fine, _) = second(g, h / 2.0, fd.stencil)?;
        let k = match fd.stencil {
            Stencil::ThreePoint => 4.0,
            Stencil::FivePoint => 16.0,
        };
        let extrapolated = fine.iter().zip(&coarse).map(|(f, c)| (k * f - c) / (k - 1.0)).collect();
        (extrapolated, Some(coarse))
    } else {
        (coarse, lower)
    };
    if let Some(reference) = reference {
        for (v, r) in value.iter().zip(&reference) {
            if (v - r).abs() > 0.01 * v.abs() && (v - r).abs() > 1e-12 {
                log::warn!("finite-difference step looks too large: stencil estimates {v:e} and {r:e} differ by more than 1%");
            }
        }
    }
    Ok(value)
}

fn single(v: Vec<f64>) -> f64 {
    v[0]
}

/// Symplectic eigenvalues `ν_k` of a real covariance matrix, ascending.
///
/// Computed from the spectrum of `(σ^{1/2} Ω σ^{1/2})ᵀ(σ^{1/2} Ω σ^{1/2})`,
/// whose eigenvalues are `ν_k²`, each twice. Values within `1e-9` below one
/// are clamped to one.
pub fn symplectic_eigenvalues(sigma: &RMatrix) -> Result<RVector> {
    let n2 = sigma.nrows();
    if n2 == 0 || n2 % 2 != 0 || sigma.ncols() != n2 {
        return Err(Error::DimensionMismatch("covariance must be 2n x 2n".into()));
    }
    if crate::linalg::max_asymmetry_real(sigma) > 1e-10 * (1.0 + sigma.norm()) {
        return Err(Error::InvalidParameter("covariance is not symmetric".into()));
    }
    let sigma = (sigma + sigma.transpose()) * 0.5;
    if crate::linalg::cholesky(&sigma).is_none() {
        return Err(Error::NotPositiveDefinite);
    }
    let s = sqrtm_spd(&sigma);
    let m = &s * omega(n2 / 2) * &s;
    let gram = m.transpose() * &m;
    let mut ev: Vec<f64> = nalgebra::SymmetricEigen::new(gram).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    let mut out = RVector::zeros(n2 / 2);
    for k in 0..n2 / 2 {
        let (a, b) = (ev[2 * k], ev[2 * k + 1]);
        let gap = (a - b).abs();
        if gap > 1e-8 * a.abs().max(b.abs()).max(1.0) {
            return Err(Error::UnpairedSpectrum { gap });
        }
        let mut nu = libm::sqrt((0.5 * (a + b)).max(0.0));
        if nu < 1.0 && nu > 1.0 - 1e-9 {
            nu = 1.0;
        }
        out[k] = nu;
    }
    Ok(out)
}

/// `arccosh ν_k` for the symplectic eigenvalues of
/// `σ_K = ½[σ_R + B σ_R⁻¹ Bᵀ]`, `B = Im σ + Ω`, ascending.
///
/// Uses `σ_K + iΩ = ½ V Vᴴ` with `V = σ_R^{1/2} + i B σ_R^{−1/2}`. With
/// `σ_K = L Lᵀ`, the singular values `s` of `L⁻¹V` satisfy
/// `s² / 2 ∈ {1 − 1/ν_k, 1 + 1/ν_k}`, so `arccosh ν_k` is linear in the small
/// ones and stays accurate for nearly pure `σ_K`.
fn kernel_rapidities(sr: &RMatrix, b: &RMatrix, sk: &RMatrix) -> Result<Vec<f64>> {
    let n = sr.nrows() / 2;
    let eig = nalgebra::SymmetricEigen::new(sr.clone());
    let u = &eig.eigenvectors;
    let root = u * RMatrix::from_diagonal(&eig.eigenvalues.map(libm::sqrt)) * u.transpose();
    let inv_root = u * RMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / libm::sqrt(v))) * u.transpose();
    let v = complexify(&root) + complexify(&(b * inv_root)) * C64::new(0.0, 1.0);
    let l = crate::linalg::cholesky(sk).ok_or(Error::InvalidCm { min: f64::NAN })?.l();
    let w = complexify(&l).solve_lower_triangular(&v).ok_or(Error::InvalidCm { min: f64::NAN })?;
    let mut sv: Vec<f64> = nalgebra::SVD::new(w, false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| a.total_cmp(b));
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let (small, large) = (sv[k], sv[2 * n - 1 - k]);
        let gap = (small * small + large * large - 4.0).abs();
        if gap > 1e-8 * 4.0 || small * small >= 2.0 {
            return Err(Error::UnpairedSpectrum { gap });
        }
        let half_sq = 0.5 * small * small;
        out.push(libm::log1p(small * libm::sqrt(1.0 - 0.25 * small * small)) - libm::log1p(-half_sq));
    }
    Ok(out)
}

/// `ln ‖μ‖₁` for a Gaussian operator with `Re σ ≻ 0`.
pub fn log_env_fidelity(state: &GaussianMomentState) -> Result<f64> {
    let n = state.n_modes();
    let sr = real_part(&state.sigma);
    let si = imag_part(&state.sigma);
    let di = state.mean.map(|z| z.im);
    let chol = crate::linalg::cholesky(&sr).ok_or(Error::ReSigmaNotPd)?;
    let b = &si + omega(n);
    let sk = (&sr + &b * chol.solve(&b.transpose())) * 0.5;
    let sk = (&sk + sk.transpose()) * 0.5;
    let rapidities = kernel_rapidities(&sr, &b, &sk)?;
    let quad = di.dot(&chol.solve(&di));
    let log_det: f64 = chol.l().diagonal().iter().map(|x| 2.0 * libm::log(*x)).sum();
    let spectral: f64 = rapidities.iter().sum();
    Ok(-state.xi.re + quad - 0.25 * log_det + 0.5 * spectral)
}

/// Trace norm `‖μ‖₁` of a Gaussian operator; for a TSME state this is the
/// fidelity of the two environment states.
pub fn env_fidelity(state: &GaussianMomentState) -> Result<f64> {
    Ok(libm::exp(log_env_fidelity(state)?))
}

fn tsme_trajectory(
    model: &QuadraticModel,
    theta: f64,
    shift: f64,
    times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<GaussianMomentState>> {
    let co = tsme_generator(model, theta, theta + shift)?.coefficients()?;
    let traj = evolve(&GaussianMomentState::vacuum(model.n_modes()), &co, times, cfg)?;
    Ok(traj.states)
}

fn check_qfi(values: &[f64]) -> Result<()> {
    for &v in values {
        if v < -1e-8 {
            return Err(Error::NegativeQfi(v));
        }
    }
    Ok(())
}

/// Joint system–environment QFI at each time, from `4 Re ∂²_ε ξ(θ, θ+ε, t)`.
pub fn joint_qfi_series(
    model: &QuadraticModel,
    theta: f64,
    times: &[f64],
    fd: &FdConfig,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    let h = fd.effective_step(theta)?;
    let mut probe = |e: f64| -> Result<Vec<f64>> {
        Ok(tsme_trajectory(model, theta, e, times, cfg)?.iter().map(|s| s.xi.re).collect())
    };
    let d2 = even_second_derivative(&mut probe, h, fd)?;
    let q: Vec<f64> = d2.iter().map(|v| 4.0 * v).collect();
    check_qfi(&q)?;
    Ok(q)
}

pub fn joint_qfi(model: &QuadraticModel, theta: f64, t: f64, fd: &FdConfig, cfg: &IntegratorConfig) -> Result<f64> {
    Ok(single(joint_qfi_series(model, theta, &[t], fd, cfg)?))
}

/// Environment-only QFI at each time, `−4 ∂²_ε ln F(θ, θ+ε, t)`.
pub fn env_qfi_series(
    model: &QuadraticModel,
    theta: f64,
    times: &[f64],
    fd: &FdConfig,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    let h = fd.effective_step(theta)?;
    let mut probe = |e: f64| -> Result<Vec<f64>> {
        tsme_trajectory(model, theta, e, times, cfg)?
            .iter()
            .map(|s| log_env_fidelity(s).map(|l| -l))
            .collect()
    };
    let d2 = even_second_derivative(&mut probe, h, fd)?;
    let q: Vec<f64> = d2.iter().map(|v| 4.0 * v).collect();
    check_qfi(&q)?;
    Ok(q)
}

pub fn env_qfi(model: &QuadraticModel, theta: f64, t: f64, fd: &FdConfig, cfg: &IntegratorConfig) -> Result<f64> {
    Ok(single(env_qfi_series(model, theta, &[t], fd, cfg)?))
}

/// Joint and environment QFI from shared TSME trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct QfiSeries {
    pub times: Vec<f64>,
    pub joint: Vec<f64>,
    pub env: Vec<f64>,
}

pub fn qfi_series(
    model: &QuadraticModel,
    theta: f64,
    times: &[f64],
    fd: &FdConfig,
    cfg: &IntegratorConfig,
) -> Result<QfiSeries> {
    let h = fd.effective_step(theta)?;
    let k = times.len();
    let mut probe = |e: f64| -> Result<Vec<f64>> {
        let states = tsme_trajectory(model, theta, e, times, cfg)?;
        let mut out = vec![0.0; 2 * k];
        for (i, s) in states.iter().enumerate() {
            out[i] = s.xi.re;
            out[k + i] = -log_env_fidelity(s)?;
        }
        Ok(out)
    };
    let d2 = even_second_derivative(&mut probe, h, fd)?;
    let q: Vec<f64> = d2.iter().map(|v| 4.0 * v).collect();
    check_qfi(&q)?;
    Ok(QfiSeries { times: times.to_vec(), joint: q[..k].to_vec(), env: q[k..].to_vec() })
}

/// Steady-state joint QFI rate, `4 Re ∂²_ε ξ̇_ss(θ, θ+ε)`.
pub fn joint_qfi_rate(model: &QuadraticModel, theta: f64, fd: &FdConfig, opts: &SteadyStateOptions) -> Result<f64> {
    let h = fd.effective_step(theta)?;
    let mut probe = |e: f64| -> Result<Vec<f64>> {
        let co = tsme_generator(model, theta, theta + e)?.coefficients()?;
        Ok(vec![steady_state(&co, opts)?.xi_rate.re])
    };
    let q = 4.0 * single(even_second_derivative(&mut probe, h, fd)?);
    check_qfi(&[q])?;
    Ok(q)
}

/// Bounds `(½(1 − √(1 − F²)), F/2)` on the minimal error probability of
/// discriminating two equiprobable states with fidelity `F`.
pub fn error_probability_bounds(fidelity: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&fidelity) {
        return Err(Error::InvalidParameter(alloc::format!("fidelity {fidelity} outside [0, 1]")));
    }
    let lower = 0.5 * (1.0 - libm::sqrt(1.0 - fidelity * fidelity));
    Ok((lower, 0.5 * fidelity))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{CMatrix, CVector, C64};

    fn real_state(sigma: RMatrix, mean: RVector) -> GaussianMomentState {
        GaussianMomentState {
            sigma: sigma.map(|x| C64::new(x, 0.0)),
            mean: mean.map(|x| C64::new(x, 0.0)),
            xi: C64::new(0.0, 0.0),
        }
    }

    #[test]
    fn symplectic_spectrum_examples() {
        let nu = symplectic_eigenvalues(&RMatrix::identity(4, 4)).unwrap();
        assert!(nu.iter().all(|v| (v - 1.0).abs() < 1e-14));
        let nu = symplectic_eigenvalues(&(RMatrix::identity(2, 2) * 3.0)).unwrap();
        assert!((nu[0] - 3.0).abs() < 1e-13);
        let nu = symplectic_eigenvalues(&RMatrix::from_diagonal(&RVector::from_vec(vec![2.0, 0.5]))).unwrap();
        assert!((nu[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn symplectic_rejects_indefinite() {
        let m = RMatrix::from_diagonal(&RVector::from_vec(vec![1.0, -1.0]));
        assert_eq!(symplectic_eigenvalues(&m), Err(Error::NotPositiveDefinite));
    }

    #[test]
    fn fidelity_of_physical_states_is_one() {
        let vac = GaussianMomentState::vacuum(1);
        assert!((env_fidelity(&vac).unwrap() - 1.0).abs() < 1e-14);
        let th = real_state(RMatrix::identity(2, 2) * 3.0, RVector::zeros(2));
        assert!((env_fidelity(&th).unwrap() - 1.0).abs() < 1e-12);
        let sigma = RMatrix::from_row_slice(4, 4, &[
            2.0, 0.3, 0.1, 0.0, 0.3, 1.5, 0.0, 0.2, 0.1, 0.0, 1.8, -0.4, 0.0, 0.2, -0.4, 2.2,
        ]);
        let disp = real_state(sigma, RVector::from_vec(vec![0.4, -1.2, 0.7, 0.1]));
        assert!((env_fidelity(&disp).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn fidelity_is_exact_for_nearly_pure_states() {
        // thermal squeezed state with ν = 1 + 1e-14
        let nu = 1.0 + 1e-14;
        let sigma = CMatrix::from_diagonal(&CVector::from_vec(vec![
            C64::new(nu * 3.0, 0.0),
            C64::new(nu / 3.0, 0.0),
        ]));
        let s = GaussianMomentState::new(sigma, CVector::zeros(2), C64::new(0.0, 0.0)).unwrap();
        assert!(log_env_fidelity(&s).unwrap().abs() < 1e-15);
    }

    #[test]
    fn fidelity_requires_positive_real_part() {
        let s = GaussianMomentState {
            sigma: CMatrix::identity(2, 2) * C64::new(-1.0, 0.0),
            mean: CVector::zeros(2),
            xi: C64::new(0.0, 0.0),
        };
        assert_eq!(env_fidelity(&s), Err(Error::ReSigmaNotPd));
    }

    #[test]
    fn error_bounds_examples() {
        assert_eq!(error_probability_bounds(1.0).unwrap(), (0.5, 0.5));
        assert_eq!(error_probability_bounds(0.0).unwrap(), (0.0, 0.0));
        let (lo, hi) = error_probability_bounds(0.6).unwrap();
        assert!((lo - 0.1).abs() < 1e-15 && (hi - 0.3).abs() < 1e-15);
        assert!(error_probability_bounds(1.5).is_err());
    }

    #[test]
    fn stencils_on_a_polynomial() {
        let mut g = |e: f64| -> Result<Vec<f64>> { Ok(vec![3.0 * e * e + 0.5 * e * e * e * e + e]) };
        let fd = FdConfig::with_step(1e-2);
        let d = even_second_derivative(&mut g, 1e-2, &fd).unwrap()[0];
        assert!((d - 6.0).abs() < 1e-3);
        let five = FdConfig { stencil: Stencil::FivePoint, ..fd };
        let d = even_second_derivative(&mut g, 1e-2, &five).unwrap()[0];
        assert!((d - 6.0).abs() < 1e-9);
        let rich = FdConfig { richardson: true, ..fd };
        let d = even_second_derivative(&mut g, 1e-2, &rich).unwrap()[0];
        assert!((d - 6.0).abs() < 1e-9);
        assert_eq!(even_second_derivative(&mut g, 0.0, &fd), Err(Error::ZeroStep));
    }
}
