use std::f64::consts::PI;

use gaussgme_core::fcs::{count_distribution, cumulants, scgf_sweep, tur_check, tur_point, tur_rate_f};
use gaussgme_core::{opo_model, CountingSpec, FdConfig, IntegratorConfig, SteadyStateOptions, C64};

fn opts() -> SteadyStateOptions {
    SteadyStateOptions::default()
}

/// Closed-form branch obtained by solving the tilted stationary Riccati
/// equation by hand; `C(λ) = −¼(√(κ²+4κe^{iλ}χ+4χ²) + √(κ²−4κe^{iλ}χ+4χ²) − 2κ)`.
fn scgf_exact(kappa: f64, chi: f64, lambda: f64) -> C64 {
    let z = C64::from_polar(1.0, lambda);
    let base = C64::new(kappa * kappa + 4.0 * chi * chi, 0.0);
    let cross = z * (4.0 * kappa * chi);
    -((base + cross).sqrt() + (base - cross).sqrt() - 2.0 * kappa) * 0.25
}

#[test]
fn scgf_follows_the_stationary_branch() {
    let m = opo_model(0.0, 0.2, 1.0, 1.0).unwrap();
    let grid: Vec<f64> = (0..65).map(|k| -PI + 2.0 * PI * k as f64 / 64.0).collect();
    let sweep = scgf_sweep(&m, 0.0, &CountingSpec::unit(1), &grid, &opts()).unwrap();
    for (l, c) in grid.iter().zip(&sweep) {
        let c = *c.as_ref().unwrap();
        assert!((c - scgf_exact(1.0, 0.2, *l)).norm() < 1e-8, "λ {l}: {c}");
        assert!(c.re <= 1e-12);
    }
    assert!(sweep[32].as_ref().unwrap().norm() < 1e-12);
    assert!(sweep[0].as_ref().unwrap().norm() < 1e-10 && sweep[64].as_ref().unwrap().norm() < 1e-10);
}

#[test]
fn current_and_noise_across_pump_strengths() {
    for chi in [0.1, 0.2, 0.3, 0.4] {
        let m = opo_model(0.0, chi, 1.0, 1.0).unwrap();
        let c = cumulants(&m, 0.0, &CountingSpec::unit(1), &FdConfig { richardson: true, ..FdConfig::default() }, &opts()).unwrap();
        let (k2, c2) = (1.0f64, chi * chi);
        let j = 2.0 * c2 / (k2 - 4.0 * c2);
        let d = 4.0 * c2 * (1.0 + 2.0 * c2 + 8.0 * c2 * c2) / (k2 - 4.0 * c2).powi(3);
        assert!((c.current / j - 1.0).abs() < 1e-5, "chi {chi}: J {} vs {j}", c.current);
        assert!((c.noise / d - 1.0).abs() < 1e-4, "chi {chi}: D {} vs {d}", c.noise);
        assert!(c.noise >= 0.0);
    }
}

#[test]
fn short_times_emit_nothing() {
    let m = opo_model(0.0, 0.2, 1.0, 1.0).unwrap();
    let p = count_distribution(&m, 0.0, &CountingSpec::unit(1), 1e-4, 8, 256, &IntegratorConfig::default()).unwrap();
    assert!(p.probabilities[0] >= 0.999);
}

#[test]
fn unpumped_cavity_emits_nothing() {
    let m = opo_model(0.0, 0.0, 1.0, 1.0).unwrap();
    for t in [0.5, 5.0] {
        let p = count_distribution(&m, 0.0, &CountingSpec::unit(1), t, 10, 64, &IntegratorConfig::default()).unwrap();
        assert!((p.probabilities[0] - 1.0).abs() < 1e-12);
        assert!(p.probabilities[1..].iter().all(|q| *q < 1e-12));
    }
}

#[test]
fn count_distribution_is_normalized() {
    let m = opo_model(0.0, 0.2, 1.0, 1.0).unwrap();
    let p = count_distribution(&m, 0.0, &CountingSpec::unit(1), 2.0, 40, 256, &IntegratorConfig::default()).unwrap();
    assert!(p.normalization_defect < 1e-6);
    assert!(p.max_imaginary < 1e-8);
    // pairs are emitted together, but photons leak one by one
    assert!(p.probabilities[1] > 0.0);
}

#[test]
fn mean_count_grows_at_the_current() {
    let m = opo_model(0.0, 0.2, 1.0, 1.0).unwrap();
    let cfg = IntegratorConfig::default();
    let mean = |t: f64| count_distribution(&m, 0.0, &CountingSpec::unit(1), t, 100, 256, &cfg).unwrap().mean();
    let rate = (mean(30.0) - mean(20.0)) / 10.0;
    let j = 0.08 / (1.0 - 0.16);
    assert!((rate / j - 1.0).abs() < 0.02, "{rate} vs {j}");
}

#[test]
fn tur_rate_closed_form() {
    for (chi, f, tol) in [(0.2, 0.08, 1e-5), (0.4, 0.32, 1e-4)] {
        let m = opo_model(0.0, chi, 1.0, 1.0).unwrap();
        let got = tur_rate_f(&m, 0.0, &FdConfig::default(), &opts()).unwrap();
        assert!((got - f).abs() < tol, "chi {chi}: {got}");
    }
}

#[test]
fn uncertainty_relation_at_moderate_pumping() {
    let m = opo_model(0.0, 0.2, 1.0, 1.0).unwrap();
    let p = tur_point(&m, 0.0, &CountingSpec::unit(1), &FdConfig::default(), &FdConfig::default(), &opts()).unwrap();
    assert!((p.d_over_j2 - 32.52).abs() < 0.02, "{}", p.d_over_j2);
    assert!((p.inv_f - 12.5).abs() < 1e-3);
    assert!(p.slack() > 0.0 && p.holds());
}

#[test]
fn uncertainty_relation_limits_and_ordering() {
    let family = [0.02, 0.3, 0.45].map(|chi| (chi, opo_model(0.0, chi, 1.0, 1.0)));
    let rows = tur_check(family, &CountingSpec::unit(1), &FdConfig::default(), &FdConfig::default(), &opts());
    let points: Vec<_> = rows.iter().map(|r| r.outcome.clone().unwrap()).collect();
    assert!(((points[0].d_over_j2 / points[0].inv_f) - 2.0).abs() < 0.05);
    assert!(points[2].d_over_j2 > points[1].d_over_j2);
    assert!(points.iter().all(|p| p.holds()));
}

#[test]
fn failed_points_stay_in_the_table() {
    let family = [(0.2, opo_model(0.0, 0.2, 1.0, 1.0)), (0.6, opo_model(0.0, 0.6, 1.0, 1.0))];
    let rows = tur_check(family, &CountingSpec::unit(1), &FdConfig::default(), &FdConfig::default(), &opts());
    assert_eq!(rows.len(), 2);
    assert!(rows[0].outcome.is_ok());
    assert_eq!(rows[1].outcome.as_ref().unwrap_err().code(), "no_steady_state");
}

#[test]
fn five_point_cumulants_agree() {
    let m = opo_model(0.0, 0.3, 1.0, 1.0).unwrap();
    let fd = FdConfig { stencil: gaussgme_core::Stencil::FivePoint, ..FdConfig::default() };
    let c = cumulants(&m, 0.0, &CountingSpec::unit(1), &fd, &opts()).unwrap();
    assert!((c.current / 0.28125 - 1.0).abs() < 1e-6, "{}", c.current);
}
