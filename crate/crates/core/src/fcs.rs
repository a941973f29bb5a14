//! Full counting statistics of monitored jump channels.
//!
//! The characteristic function of the weighted count `N = Σ w_k N_k` is the
//! trace of the tilted master equation, `φ(λ, t) = e^{−ξ(λ, t)}`; its long-time
//! rate `C(λ) = −ξ̇_ss(λ)` is the scaled cumulant generating function.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::dynamics::{evolve, steady_state, steady_state_from, GaussianMomentState, IntegratorConfig, SteadyStateOptions};
use crate::error::{Error, Result};
use crate::generator::{tilted_jump_generator, CountingSpec};
use crate::metrology::{joint_qfi_rate, FdConfig, Stencil};
use crate::model::QuadraticModel;
use crate::{CMatrix, C64};

/// Largest λ increment between warm-started steady-state solves.
const CONTINUATION_STEP: f64 = 0.05;

fn check_counting(model: &QuadraticModel, theta: f64, counting: &CountingSpec) -> Result<()> {
    let n_mon = model.at(theta)?.monitored.nrows();
    if counting.weights.len() != n_mon {
        return Err(Error::DimensionMismatch(format!(
            "{} counting weights for {} monitored channels",
            counting.weights.len(),
            n_mon
        )));
    }
    if counting.weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidParameter("counting weights must be finite".into()));
    }
    Ok(())
}

fn tilted_steady(
    model: &QuadraticModel,
    theta: f64,
    counting: &CountingSpec,
    lambda: f64,
    warm: Option<&CMatrix>,
    opts: &SteadyStateOptions,
) -> Result<(C64, CMatrix)> {
    let co = tilted_jump_generator(model, theta, counting, lambda)?.coefficients()?;
    let ss = match warm {
        Some(s) => steady_state_from(&co, s, opts)?,
        None => steady_state(&co, opts)?,
    };
    Ok((-ss.xi_rate, ss.sigma))
}

/// SCGF on a grid of counting fields.
///
/// Steady states are continued from `λ = 0` outwards (separately for positive
/// and negative λ), each solve warm-started from the previous one; gaps wider
/// than a small increment get intermediate solves. A failed point does not
/// abort the sweep: later points restart from the last good solution.
pub fn scgf_sweep(
    model: &QuadraticModel,
    theta: f64,
    counting: &CountingSpec,
    lambdas: &[f64],
    opts: &SteadyStateOptions,
) -> Result<Vec<Result<C64>>> {
    check_counting(model, theta, counting)?;
    if lambdas.iter().any(|l| !l.is_finite()) {
        return Err(Error::InvalidParameter("counting fields must be finite".into()));
    }
    let (_, sigma0) = tilted_steady(model, theta, counting, 0.0, None, opts)?;
    let mut out: Vec<Option<Result<C64>>> = vec![None; lambdas.len()];
    for sign in [1.0, -1.0] {
        let mut idx: Vec<usize> = (0..lambdas.len())
            .filter(|&i| if sign > 0.0 { lambdas[i] >= 0.0 } else { lambdas[i] < 0.0 })
            .collect();
        idx.sort_by(|&a, &b| lambdas[a].abs().total_cmp(&lambdas[b].abs()));
        let mut warm = sigma0.clone();
        let mut at = 0.0f64;
        for i in idx {
            let target = lambdas[i];
            let n_sub = libm::ceil((target - at).abs() / CONTINUATION_STEP).max(1.0) as usize;
            let mut result = Err(Error::NoSteadyState("continuation did not start".into()));
            for k in 1..=n_sub {
                let lam = if k == n_sub { target } else { at + (target - at) * k as f64 / n_sub as f64 };
                match tilted_steady(model, theta, counting, lam, Some(&warm), opts) {
                    Ok((c, s)) => {
                        warm = s;
                        result = Ok(c);
                    }
                    Err(e) => {
                        result = Err(e);
                        break;
                    }
                }
            }
            if result.is_ok() {
                at = target;
            }
            out[i] = Some(result);
        }
    }
    Ok(out.into_iter().map(|r| r.expect("every grid point visited")).collect())
}

/// `C(λ) = −ξ̇_ss(λ)`, reached by continuation from `λ = 0`.
pub fn scgf(
    model: &QuadraticModel,
    theta: f64,
    counting: &CountingSpec,
    lambda: f64,
    opts: &SteadyStateOptions,
) -> Result<C64> {
    scgf_sweep(model, theta, counting, &[lambda], opts)?.pop().expect("one point")
}

/// Current, noise and skewness rates of the counted charge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulantReport {
    /// `J = −i C'(0)`.
    pub current: f64,
    /// `D = (−i)² C''(0)`.
    pub noise: f64,
    /// `S = (−i)³ C'''(0)`.
    pub skewness: f64,
    pub lambda_step: f64,
}

/// First three scaled cumulants from central differences of the SCGF at
/// `λ = 0`, using `C(0) = 0`.
pub fn cumulants(
    model: &QuadraticModel,
    theta: f64,
    counting: &CountingSpec,
    fd: &FdConfig,
    opts: &SteadyStateOptions,
) -> Result<CumulantReport> {
    let h = fd.effective_step(0.0)?;
    let report = |h: f64| -> Result<(CumulantReport, f64)> {
        let grid = [h, -h, 2.0 * h, -2.0 * h];
        let vals = scgf_sweep(model, theta, counting, &grid, opts)?
            .into_iter()
            .collect::<Result<Vec<C64>>>()?;
        let (p1, m1, p2, m2) = (vals[0], vals[1], vals[2], vals[3]);
        let d1 = (p1 - m1) / (2.0 * h);
        let d1_five = ((p1 - m1) * 8.0 - (p2 - m2)) / (12.0 * h);
        let d2 = (p1 + m1) / (h * h);
        let d3 = (p2 - p1 * 2.0 + m1 * 2.0 - m2) / (2.0 * h * h * h);
        let d2_five = ((p1 + m1) * 16.0 - (p2 + m2)) / (12.0 * h * h);
        let i = C64::new(0.0, 1.0);
        let (three, five) = ((-i * d1).re, (-i * d1_five).re);
        let (current, noise) = match fd.stencil {
            Stencil::ThreePoint => (three, (-d2).re),
            Stencil::FivePoint => (five, (-d2_five).re),
        };
        Ok((CumulantReport { current, noise, skewness: (i * d3).re, lambda_step: h }, (five - three).abs()))
    };
    let (coarse, spread) = report(h)?;
    if spread > 1e-3 * coarse.current.abs() {
        log::warn!("counting-field step {h:e} looks too large: current stencils differ by {spread:e}");
    }
    if !fd.richardson {
        return Ok(coarse);
    }
    let (fine, _) = report(h / 2.0)?;
    let rich = |k: f64, f: f64, c: f64| (k * f - c) / (k - 1.0);
    let k = match fd.stencil {
        Stencil::ThreePoint => 4.0,
        Stencil::FivePoint => 16.0,
    };
    Ok(CumulantReport {
        current: rich(k, fine.current, coarse.current),
        noise: rich(k, fine.noise, coarse.noise),
        skewness: rich(4.0, fine.skewness, coarse.skewness),
        lambda_step: h,
    })
}

/// Probability distribution of the counted charge at a finite time.
#[derive(Debug, Clone, PartialEq)]
pub struct CountDistribution {
    /// `P(0), …, P(n_max)`, clipped at zero.
    pub probabilities: Vec<f64>,
    /// `|1 − Σ_n P(n)|` over the reported range.
    pub normalization_defect: f64,
    /// Largest imaginary part met in the inversion.
    pub max_imaginary: f64,
}

impl CountDistribution {
    pub fn mean(&self) -> f64 {
        self.probabilities.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }
}

/// `P(n, t) = (1/M) Σ_j e^{−inλ_j} φ(λ_j, t)` on `M` uniform points of `[−π, π)`.
///
/// Needs integer weights. The grid is reported too coarse when `P(n_max)`
/// has not decayed below `1e-6`, or, for non-negative weights, when mass
/// shows up in the upper half of the period.
pub fn count_distribution(
    model: &QuadraticModel,
    theta: f64,
    counting: &CountingSpec,
    t: f64,
    n_max: usize,
    grid_points: usize,
    cfg: &IntegratorConfig,
) -> Result<CountDistribution> {
    check_counting(model, theta, counting)?;
    if !counting.is_integer() {
        return Err(Error::NonIntegerWeights);
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("time must be finite and non-negative, got {t}")));
    }
    let m = grid_points;
    if m < 2 || 2 * n_max >= m {
        return Err(Error::GridTooCoarse(format!(
            "{m} counting-field points cannot resolve counts up to {n_max}"
        )));
    }
    let vacuum = GaussianMomentState::vacuum(model.n_modes());
    let mut phi = Vec::with_capacity(m);
    for j in 0..m {
        let lambda = -PI + 2.0 * PI * j as f64 / m as f64;
        let co = tilted_jump_generator(model, theta, counting, lambda)?.coefficients()?;
        let traj = evolve(&vacuum, &co, &[t], cfg)?;
        phi.push((lambda, traj.last().trace()));
    }
    let coefficient = |n: i64| -> C64 {
        phi.iter().map(|&(l, f)| C64::from_polar(1.0, -(n as f64) * l) * f).sum::<C64>() / m as f64
    };
    let mut probabilities = Vec::with_capacity(n_max + 1);
    let mut max_imaginary = 0.0f64;
    for n in 0..=n_max {
        let p = coefficient(n as i64);
        max_imaginary = max_imaginary.max(p.im.abs());
        probabilities.push(p.re.max(0.0));
    }
    if max_imaginary > 1e-8 {
        return Err(Error::ImaginaryResidue { what: "count probability", value: max_imaginary });
    }
    if probabilities[n_max] > 1e-6 {
        return Err(Error::GridTooCoarse(format!(
            "P({n_max}) = {:e}; the distribution has not decayed by n_max",
            probabilities[n_max]
        )));
    }
    if counting.weights.iter().all(|w| *w >= 0.0) {
        let wrapped: f64 = (m / 2..m).map(|n| coefficient(n as i64).re.abs()).sum();
        if wrapped > 1e-6 {
            return Err(Error::GridTooCoarse(format!(
                "aliased probability mass {wrapped:e} with {m} counting-field points"
            )));
        }
    }
    let total: f64 = probabilities.iter().sum();
    Ok(CountDistribution { probabilities, normalization_defect: (1.0 - total).abs(), max_imaginary })
}

/// Joint QFI rate for the deformation `Ĥ → (1+θ)Ĥ`, `Ĵ → √(1+θ)Ĵ` around
/// `theta`; the right-hand side of the uncertainty relation is `1/f`.
pub fn tur_rate_f(model: &QuadraticModel, theta: f64, fd: &FdConfig, opts: &SteadyStateOptions) -> Result<f64> {
    joint_qfi_rate(&model.tur_deformed(theta), 0.0, fd, opts)
}

/// `D/J²` against `1/f` at one model point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurPoint {
    pub d_over_j2: f64,
    pub inv_f: f64,
    pub cumulants: CumulantReport,
    pub f: f64,
}

impl TurPoint {
    pub fn slack(&self) -> f64 {
        self.d_over_j2 - self.inv_f
    }

    pub fn holds(&self) -> bool {
        self.slack() >= -1e-8
    }
}

pub fn tur_point(
    model: &QuadraticModel,
    theta: f64,
    counting: &CountingSpec,
    lambda_fd: &FdConfig,
    theta_fd: &FdConfig,
    opts: &SteadyStateOptions,
) -> Result<TurPoint> {
    let c = cumulants(model, theta, counting, lambda_fd, opts)?;
    let f = tur_rate_f(model, theta, theta_fd, opts)?;
    Ok(TurPoint { d_over_j2: c.noise / (c.current * c.current), inv_f: 1.0 / f, cumulants: c, f })
}

/// One grid point of an uncertainty-relation scan.
#[derive(Debug, Clone, PartialEq)]
pub struct TurRow {
    pub parameter: f64,
    pub outcome: Result<TurPoint>,
}

/// Evaluates the uncertainty relation over a family of models; failed points
/// are kept as rows carrying their error.
pub fn tur_check<I>(
    family: I,
    counting: &CountingSpec,
    lambda_fd: &FdConfig,
    theta_fd: &FdConfig,
    opts: &SteadyStateOptions,
) -> Vec<TurRow>
where
    I: IntoIterator<Item = (f64, Result<QuadraticModel>)>,
{
    family
        .into_iter()
        .map(|(parameter, model)| TurRow {
            parameter,
            outcome: model.and_then(|m| tur_point(&m, 0.0, counting, lambda_fd, theta_fd, opts)),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::opo_model;

    fn opts() -> SteadyStateOptions {
        SteadyStateOptions::default()
    }

    #[test]
    fn scgf_vanishes_at_zero_and_pi() {
        let m = opo_model(0.0, 0.2, 1.0, 1.0).unwrap();
        let cs = CountingSpec::unit(1);
        assert!(scgf(&m, 0.0, &cs, 0.0, &opts()).unwrap().norm() < 1e-12);
        assert!(scgf(&m, 0.0, &cs, PI, &opts()).unwrap().norm() < 1e-10);
    }

    #[test]
    fn scgf_quarter_period_value() {
        // re-derived from the tilted steady state: C(π/2) = −¼(√(κ²+4iκχ+4χ²) + √(κ²−4iκχ+4χ²) − 2κ)
        let m = opo_model(0.0, 0.2, 1.0, 1.0).unwrap();
        let c = scgf(&m, 0.0, &CountingSpec::unit(1), PI / 2.0, &opts()).unwrap();
        assert!((c.re + 0.066691).abs() < 1e-4, "{c}");
        assert!(c.im.abs() < 1e-10);
    }

    #[test]
    fn cumulants_of_the_opo() {
        let (k, chi) = (1.0f64, 0.2f64);
        let m = opo_model(0.0, chi, k, 1.0).unwrap();
        let c = cumulants(&m, 0.0, &CountingSpec::unit(1), &FdConfig::default(), &opts()).unwrap();
        let j = 2.0 * k * chi * chi / (k * k - 4.0 * chi * chi);
        assert!((c.current - j).abs() < 1e-5 * j);
        assert!((c.current - 0.095238).abs() < 1e-5 * 0.095238);
        assert!((c.noise - 0.29500).abs() < 1e-4 * 0.295);
        assert!((c.skewness - 1.3029).abs() < 1e-3 * 1.3029);
    }

    #[test]
    fn silent_model_counts_nothing() {
        let m = opo_model(0.0, 0.0, 1.0, 1.0).unwrap();
        let d = count_distribution(&m, 0.0, &CountingSpec::unit(1), 2.0, 10, 64, &IntegratorConfig::default()).unwrap();
        assert!((d.probabilities[0] - 1.0).abs() < 1e-12);
        assert!(d.probabilities[1..].iter().all(|p| *p < 1e-12));
    }

    #[test]
    fn count_distribution_guards() {
        let m = opo_model(0.0, 0.2, 1.0, 1.0).unwrap();
        let cfg = IntegratorConfig::default();
        let half = CountingSpec::new(vec![0.5]);
        assert_eq!(count_distribution(&m, 0.0, &half, 1.0, 5, 64, &cfg), Err(Error::NonIntegerWeights));
        assert!(matches!(
            count_distribution(&m, 0.0, &CountingSpec::unit(1), 1.0, 40, 64, &cfg),
            Err(Error::GridTooCoarse(_))
        ));
    }

    #[test]
    fn tur_rate_of_the_opo() {
        let m = opo_model(0.0, 0.2, 1.0, 1.0).unwrap();
        let f = tur_rate_f(&m, 0.0, &FdConfig::default(), &opts()).unwrap();
        assert!((f - 0.08).abs() < 1e-5);
        let quiet = opo_model(0.0, 0.0, 1.0, 1.0).unwrap();
        assert!(tur_rate_f(&quiet, 0.0, &FdConfig::default(), &opts()).unwrap().abs() < 1e-9);
    }
}
