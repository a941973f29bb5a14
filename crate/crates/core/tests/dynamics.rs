use gaussgme_core::generator::{lindblad_at, tsme_generator};
use gaussgme_core::linalg::omega_c;
use gaussgme_core::{
    evolve, opo_model, rhs, steady_state, CMatrix, CVector, GaussianMomentState, GeneratorSpec, IntegratorConfig,
    SteadyStateOptions, C64,
};
use nalgebra::DMatrix;

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn diag(a: f64, b: f64) -> CMatrix {
    DMatrix::from_diagonal(&CVector::from_vec(vec![C64::new(a, 0.0), C64::new(b, 0.0)]))
}

#[test]
fn lindblad_fixed_point_is_stationary() {
    let g = lindblad_at(&opo_model(0.0, 0.2, 1.0, 1.0).unwrap().at(0.0).unwrap()).unwrap();
    let co = g.coefficients().unwrap();
    let s = GaussianMomentState::new(diag(1.0 / 1.4, 1.0 / 0.6), CVector::zeros(2), C64::new(0.0, 0.0)).unwrap();
    let (sd, dd, xd) = rhs(&s, &co).unwrap();
    assert!(max_abs(&sd) < 1e-14 && dd.norm() < 1e-15 && xd.norm() < 1e-15);
}

#[test]
fn lyapunov_limit_without_riccati_term() {
    let g = lindblad_at(&opo_model(0.3, 0.2, 1.0, 1.0).unwrap().at(0.0).unwrap()).unwrap();
    let co = g.coefficients().unwrap();
    assert!(max_abs(&co.riccati) == 0.0 && max_abs(&co.trace_form) == 0.0);
    let s = GaussianMomentState::vacuum(1);
    let (sd, _, xd) = rhs(&s, &co).unwrap();
    let lyap = &co.drift * &s.sigma + &s.sigma * co.drift.transpose() + &co.diffusion;
    assert!(max_abs(&(sd - lyap)) < 1e-15);
    assert_eq!(xd, C64::new(0.0, 0.0));
}

#[test]
fn tsme_rate_at_vacuum_is_imaginary() {
    let eps = 0.1;
    let co = tsme_generator(&opo_model(0.0, 0.2, 1.0, 1.0).unwrap(), 0.0, eps).unwrap().coefficients().unwrap();
    let (_, _, xd) = rhs(&GaussianMomentState::vacuum(1), &co).unwrap();
    assert!(xd.re.abs() < 1e-15);
    assert!((xd.im.abs() - eps / 2.0).abs() < 1e-14, "{xd}");
}

#[test]
fn lindblad_evolution_preserves_trace_and_relaxes() {
    let opo = opo_model(0.5, 0.2, 1.0, 1.0).unwrap();
    let co = lindblad_at(&opo.at(0.0).unwrap()).unwrap().coefficients().unwrap();
    let grid: Vec<f64> = (0..=200).map(|k| k as f64 * 0.1).collect();
    let traj = evolve(&GaussianMomentState::vacuum(1), &co, &grid, &IntegratorConfig::default()).unwrap();
    assert!(traj.states.iter().all(|s| s.xi.norm() < 1e-9));
    assert!(traj.max_asymmetry < 1e-10);

    let opo = opo_model(0.0, 0.2, 1.0, 1.0).unwrap();
    let co = lindblad_at(&opo.at(0.0).unwrap()).unwrap().coefficients().unwrap();
    let traj = evolve(&GaussianMomentState::vacuum(1), &co, &[5.0, 20.0, 40.0], &IntegratorConfig::default()).unwrap();
    // each quadrature relaxes exponentially at κ ± 2χ
    for (s, &t) in traj.states.iter().zip(&traj.times) {
        let exact = |rate: f64| 1.0 / rate + (1.0 - 1.0 / rate) * (-rate * t).exp();
        assert!(max_abs(&(&s.sigma - diag(exact(1.4), exact(0.6)))) < 1e-9, "t = {t}");
    }
    assert!(max_abs(&(&traj.last().sigma - diag(1.0 / 1.4, 1.0 / 0.6))) < 1e-8);
}

#[test]
fn trace_preserved_over_long_times() {
    let opo = opo_model(0.7, 0.3, 1.0, 0.6).unwrap();
    let co = lindblad_at(&opo.at(0.2).unwrap()).unwrap().coefficients().unwrap();
    let start = GaussianMomentState::new(diag(2.0, 0.8), CVector::from_vec(vec![C64::new(0.5, 0.0), C64::new(-1.0, 0.0)]), C64::new(0.0, 0.0)).unwrap();
    let grid: Vec<f64> = (1..=10).map(|k| k as f64 * 10.0).collect();
    let traj = evolve(&start, &co, &grid, &IntegratorConfig::default()).unwrap();
    assert!(traj.states.iter().all(|s| s.xi.norm() < 1e-9));
}

#[test]
fn physical_covariance_stays_bona_fide() {
    let opo = opo_model(0.4, 0.3, 1.0, 1.0).unwrap();
    let co = lindblad_at(&opo.at(0.0).unwrap()).unwrap().coefficients().unwrap();
    let grid: Vec<f64> = (0..=40).map(|k| k as f64 * 0.25).collect();
    let traj = evolve(&GaussianMomentState::vacuum(1), &co, &grid, &IntegratorConfig::default()).unwrap();
    let iom = omega_c(1) * C64::new(0.0, 1.0);
    for s in &traj.states {
        let h = &s.sigma + &iom;
        let min = h.symmetric_eigenvalues().min();
        assert!(min > -1e-9, "min eigenvalue {min}");
    }
}

#[test]
fn zero_generator_keeps_state() {
    let co = GeneratorSpec::zero(2).coefficients().unwrap();
    let s0 = GaussianMomentState::vacuum(2);
    let traj = evolve(&s0, &co, &[0.0, 1.0, 5.0], &IntegratorConfig::default()).unwrap();
    assert!(traj.states.iter().all(|s| *s == s0));
}

#[test]
fn tsme_information_grows_at_the_stationary_rate() {
    let opo = opo_model(0.0, 0.2, 1.0, 1.0).unwrap();
    let eps = 1e-3;
    let grid = [40.0, 50.0];
    let xi = |e: f64| {
        let co = tsme_generator(&opo, 0.0, e).unwrap().coefficients().unwrap();
        evolve(&GaussianMomentState::vacuum(1), &co, &grid, &IntegratorConfig::default()).unwrap()
    };
    let (plus, minus) = (xi(eps), xi(-eps));
    let q: Vec<f64> = (0..2).map(|k| 4.0 * ((plus.states[k].xi + minus.states[k].xi) / (eps * eps)).re).collect();
    let slope = (q[1] - q[0]) / 10.0;
    assert!((slope / 2.6131 - 1.0).abs() < 0.01, "slope {slope}");
    // Q(t) ≈ rate·t − offset with a positive offset, so Q/t approaches from below
    assert!(q[1] / 50.0 < 2.6131 && q[1] / 50.0 > q[0] / 40.0);
}

#[test]
fn steady_state_residual_is_certified() {
    for (omega, chi) in [(0.0, 0.2), (0.5, 0.3), (0.0, 0.45)] {
        let co = lindblad_at(&opo_model(omega, chi, 1.0, 1.0).unwrap().at(0.0).unwrap())
            .unwrap()
            .coefficients()
            .unwrap();
        let ss = steady_state(&co, &SteadyStateOptions::default()).unwrap();
        assert!(ss.residual < 1e-10);
        assert!(ss.xi_rate.norm() < 1e-12);
    }
}
