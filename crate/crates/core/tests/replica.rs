use gaussgme_core::metrology::env_qfi;
use gaussgme_core::replica::{bargmann_invariant, lambda_purity, replica_qfi_series};
use gaussgme_core::{opo_model, FdConfig, IntegratorConfig, ReplicaAssignment, ReplicaSettings};

fn settings() -> ReplicaSettings {
    ReplicaSettings::default()
}

#[test]
fn two_replica_invariants_match_reference() {
    let m = opo_model(0.0, 0.2, 1.0, 0.5).unwrap();
    let b00 = bargmann_invariant(&m, &ReplicaAssignment::new(vec![0.0, 0.0]).unwrap(), 1.0, &settings()).unwrap();
    let b03 = bargmann_invariant(&m, &ReplicaAssignment::new(vec![0.0, 0.3]).unwrap(), 1.0, &settings()).unwrap();
    assert!((b00.re - 0.99329519134).abs() < 1e-8, "{b00}");
    assert!((b03.re - 0.99332965438).abs() < 1e-8, "{b03}");
    assert!(b00.im.abs() < 1e-12);
}

#[test]
fn invariants_are_cyclic() {
    let m = opo_model(0.1, 0.25, 1.0, 0.6).unwrap();
    let a = ReplicaAssignment::new(vec![0.0, 0.2, -0.1, 0.35]).unwrap();
    let base = bargmann_invariant(&m, &a, 1.5, &settings()).unwrap();
    for k in 1..4 {
        let r = bargmann_invariant(&m, &a.rotated(k), 1.5, &settings()).unwrap();
        assert!((r - base).norm() < 1e-9, "rotation {k}: {r} vs {base}");
    }
}

#[test]
fn purity_starts_at_one() {
    let m = opo_model(0.0, 0.2, 1.0, 1.0).unwrap();
    let lam = lambda_purity(&m, 0.0, 0.0, &settings()).unwrap();
    assert!((lam - 2.0).abs() < 1e-14);
}

#[test]
fn series_approaches_output_qfi_from_below() {
    let m = opo_model(0.0, 0.2, 1.0, 1.0).unwrap();
    let q = replica_qfi_series(&m, 0.0, 1.0, &[5, 10, 20], &settings()).unwrap();
    let env = env_qfi(&m, 0.0, 1.0, &FdConfig::default(), &IntegratorConfig::default()).unwrap();
    eprintln!("Q_N = {q:?}, env = {env}");
    assert!(q[0] < q[1] && q[1] < q[2] && q[2] <= env * (1.0 + 1e-6));
    assert!((q[0] - 0.0032251).abs() < 2e-6);
    assert!((q[2] - 0.0032792).abs() < 2e-6);
}
