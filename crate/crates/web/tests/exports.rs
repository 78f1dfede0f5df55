use roml_web::{block_learners, separation, tau_curve};

#[test]
fn tau_ratio_approaches_its_limit() {
    let c = tau_curve(1 << 16, 20).unwrap();
    let last = c[c.len() - 1];
    assert!((last - (2.0 * std::f64::consts::PI).sqrt() / 2.0).abs() < 0.01);
}

#[test]
fn adversarial_regret_exceeds_iid_regret() {
    let t = 4096;
    let v = separation(t, 9).unwrap();
    assert!(v[t - 1] > 10.0 * v[2 * t - 1]);
}

#[test]
fn same_seed_same_curves() {
    assert_eq!(block_learners(512, 2, 0.2, 8, 4).unwrap(), block_learners(512, 2, 0.2, 8, 4).unwrap());
}
