use gaussgme_core::generator::{lindblad_at, tilted_jump_generator, tsme_generator};
use gaussgme_core::metrology::{env_fidelity, error_probability_bounds, symplectic_eigenvalues};
use gaussgme_core::replica::bargmann_invariant;
use gaussgme_core::{
    evolve, opo_model, CMatrix, CVector, CountingSpec, GaussianMomentState, IntegratorConfig, RMatrix,
    ReplicaAssignment, ReplicaSettings, C64,
};
use proptest::prelude::*;

fn rotation(phi: f64) -> RMatrix {
    RMatrix::from_row_slice(2, 2, &[phi.cos(), -phi.sin(), phi.sin(), phi.cos()])
}

/// Single-mode covariance `ν R(a) diag(e^{r}, e^{−r}) R(a)ᵀ`.
fn squeezed_thermal(nu: f64, r: f64, a: f64) -> RMatrix {
    let d = RMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![r.exp(), (-r).exp()]));
    rotation(a) * d * rotation(a).transpose() * nu
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lindblad_flow_preserves_trace(omega in -1.0..1.0f64, chi in 0.0..0.45f64, eta in 0.0..=1.0f64, t in 0.5..10.0f64) {
        let m = opo_model(omega, chi, 1.0, eta).unwrap();
        let co = lindblad_at(&m.at(0.0).unwrap()).unwrap().coefficients().unwrap();
        prop_assert!(max_abs(&co.riccati) < 1e-15 && max_abs(&co.trace_form) < 1e-15);
        let traj = evolve(&GaussianMomentState::vacuum(1), &co, &[t], &IntegratorConfig::default()).unwrap();
        prop_assert!(traj.last().xi.norm() < 1e-9);
        prop_assert!(traj.max_asymmetry < 1e-10);
    }

    #[test]
    fn diagonal_tsme_is_lindblad(omega in -1.0..1.0f64, chi in 0.0..0.45f64, theta in -0.5..0.5f64) {
        let m = opo_model(omega, chi, 1.0, 1.0).unwrap();
        let a = tsme_generator(&m, theta, theta).unwrap().coefficients().unwrap();
        let b = lindblad_at(&m.at(theta).unwrap()).unwrap().coefficients().unwrap();
        prop_assert!(max_abs(&(&a.drift - &b.drift)) < 1e-14);
        prop_assert!(max_abs(&(&a.diffusion - &b.diffusion)) < 1e-14);
        prop_assert!(max_abs(&(&a.riccati - &b.riccati)) < 1e-14);
        prop_assert!(max_abs(&(&a.trace_form - &b.trace_form)) < 1e-14);
    }

    #[test]
    fn counting_field_is_periodic(chi in 0.0..0.45f64, eta in 0.1..=1.0f64, lambda in -3.0..3.0f64, w in 1..4i32) {
        let m = opo_model(0.0, chi, 1.0, eta).unwrap();
        let spec = CountingSpec::new(vec![w as f64]);
        let zero = tilted_jump_generator(&m, 0.0, &spec, 0.0).unwrap();
        prop_assert_eq!(&zero, &lindblad_at(&m.at(0.0).unwrap()).unwrap());
        let a = tilted_jump_generator(&m, 0.0, &spec, lambda).unwrap().coefficients().unwrap();
        let b = tilted_jump_generator(&m, 0.0, &spec, lambda + 2.0 * std::f64::consts::PI).unwrap().coefficients().unwrap();
        prop_assert!(max_abs(&(&a.riccati - &b.riccati)) < 1e-12);
        prop_assert!(max_abs(&(&a.drift - &b.drift)) < 1e-12);
    }

    #[test]
    fn physical_states_have_unit_trace_norm(nu in 1.0..5.0f64, r in -1.0..1.0f64, a in 0.0..3.0f64, x in -2.0..2.0f64, p in -2.0..2.0f64) {
        let sigma = squeezed_thermal(nu, r, a).map(|v| C64::new(v, 0.0));
        let s = GaussianMomentState::new(sigma, CVector::from_vec(vec![C64::new(x, 0.0), C64::new(p, 0.0)]), C64::new(0.0, 0.0)).unwrap();
        prop_assert!((env_fidelity(&s).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bona_fide_spectra_are_at_least_one(nu1 in 1.0..4.0f64, nu2 in 1.0..4.0f64, r in -1.0..1.0f64, a in 0.0..3.0f64, mix in 0.0..1.5f64) {
        // two squeezed thermal modes mixed on a beam splitter
        let mut sigma = RMatrix::zeros(4, 4);
        sigma.view_mut((0, 0), (2, 2)).copy_from(&squeezed_thermal(nu1, r, a));
        sigma.view_mut((2, 2), (2, 2)).copy_from(&squeezed_thermal(nu2, -r, 0.3));
        let (c, s) = (mix.cos(), mix.sin());
        let bs = RMatrix::from_row_slice(4, 4, &[c, 0.0, s, 0.0, 0.0, c, 0.0, s, -s, 0.0, c, 0.0, 0.0, -s, 0.0, c]);
        let sigma = &bs * sigma * bs.transpose();
        let spec = symplectic_eigenvalues(&sigma).unwrap();
        prop_assert!(spec.iter().all(|v| *v >= 1.0 - 1e-9));
        let mut want = [nu1, nu2];
        want.sort_by(|a, b| a.total_cmp(b));
        prop_assert!((spec[0] - want[0]).abs() < 1e-8 && (spec[1] - want[1]).abs() < 1e-8);
    }

    #[test]
    fn fidelity_bounds_are_ordered(f in 0.0..=1.0f64) {
        let (lo, hi) = error_probability_bounds(f).unwrap();
        prop_assert!(lo <= hi + 1e-15 && lo >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn bargmann_invariants_are_cyclic(thetas in proptest::collection::vec(-0.5..0.5f64, 4), t in 0.2..2.0f64) {
        let m = opo_model(0.0, 0.2, 1.0, 0.6).unwrap();
        let a = ReplicaAssignment::new(thetas).unwrap();
        let s = ReplicaSettings::default();
        let base = bargmann_invariant(&m, &a, t, &s).unwrap();
        for k in 1..4 {
            let r = bargmann_invariant(&m, &a.rotated(k), t, &s).unwrap();
            prop_assert!((r - base).norm() < 1e-9);
        }
    }

    #[test]
    fn equal_replicas_give_real_overlaps(theta in -0.5..0.5f64, copies in 2..5usize, t in 0.2..2.0f64, eta in 0.2..=1.0f64) {
        let m = opo_model(0.0, 0.2, 1.0, eta).unwrap();
        let b = bargmann_invariant(&m, &ReplicaAssignment::new(vec![theta; copies]).unwrap(), t, &ReplicaSettings::default()).unwrap();
        prop_assert!(b.im.abs() < 1e-9);
        prop_assert!(b.re > 0.0 && b.re <= 1.0 + 1e-12);
    }
}
