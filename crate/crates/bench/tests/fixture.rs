use dlstd_bench::{chain_fixture, lambda_at};

#[test]
fn fixture_has_requested_shape() {
    let fx = chain_fixture(10, 60, 4);
    assert_eq!(fx.samples.len(), 60);
    // five RBF features, the noise features and the intercept column
    assert_eq!(fx.system.dim(), fx.samples.num_features());
    assert!(fx.system.dim() >= 15);
    assert!(lambda_at(&fx.system, 0.5) > 0.0);
}

#[test]
fn fixture_is_deterministic() {
    let a = chain_fixture(5, 40, 9);
    let b = chain_fixture(5, 40, 9);
    assert_eq!(a.system.a, b.system.a);
    assert_eq!(a.system.b, b.system.b);
}
