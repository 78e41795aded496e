use matern_window::bounds::a_constant;
use matern_window::matern::{derive_params, f_func, radiation_residual, UnitMatern};
use matern_window::specfun::bessel_k;
use matern_window::spectral::{BoundarySpec, BoxDomain, SpectralCovariance, TruncationSpec};
use nalgebra::SymmetricEigen;
use proptest::prelude::*;

const SLACK: f64 = 1e-12;

/// Log-uniform on `[1e-3, 30]`.
fn log_uniform() -> impl Strategy<Value = f64> {
    (1e-3f64.ln()..30f64.ln()).prop_map(f64::exp)
}

fn m(nu: f64) -> UnitMatern {
    UnitMatern::new(nu).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn unit_matern_is_a_decreasing_correlation(
        nu in prop::sample::select(vec![0.25, 0.5, 1.0, 2.5, 10.0, 50.0]),
        t1 in 1e-6f64..30.0,
        gap in 1e-6f64..5.0,
    ) {
        let f = m(nu);
        let (a, b) = (f.eval(t1), f.eval(t1 + gap));
        prop_assert!(a > 0.0 && a < 1.0, "M({t1}) = {a}");
        prop_assert!(b < a || b == 0.0, "M({}) = {b} >= M({t1}) = {a}", t1 + gap);
    }

    #[test]
    fn smooth_kernels_dominate_the_exponential(nu in 0.5f64..10.0, t in log_uniform()) {
        prop_assert!(m(nu).eval(t) >= (-t).exp() * (1.0 - SLACK));
    }

    #[test]
    fn log_subadditivity_smooth(nu in 0.5f64..10.0, x in log_uniform(), y in log_uniform()) {
        let f = m(nu);
        prop_assert!(f.eval(x + y) <= f.eval(x) * f.eval(y) + SLACK);
    }

    #[test]
    fn log_subadditivity_rough(nu in 1e-3f64..=0.5, x in log_uniform(), y in log_uniform()) {
        prop_assert!(m(nu).eval(x + y) <= m(nu).eval(x) * m(0.5).eval(y) + SLACK);
    }

    #[test]
    fn laforgia_ratio(nu in 1e-3f64..=0.5, x in log_uniform(), gap in 0.0f64..30.0) {
        let y = x + gap;
        let lhs = bessel_k(nu, x).unwrap().log_value - bessel_k(nu, y).unwrap().log_value;
        let rhs = nu * (y / x).ln() + (y - x);
        prop_assert!(lhs >= rhs - SLACK * rhs.abs().max(1.0), "{lhs} < {rhs}");
    }

    #[test]
    fn geometric_chain(
        nu in 0.1f64..5.0,
        rho in 0.05f64..1.0,
        ell in 0.1f64..2.0,
        k in 1u32..=50,
    ) {
        let p = derive_params(1.3, rho, nu, 1).unwrap();
        let f = f_func(nu, p.kappa(), ell).unwrap();
        let lhs = p.cov_at_distance(f64::from(k) * ell);
        let rhs = p.cov_at_distance(ell) * f.powi(k as i32 - 1);
        prop_assert!(lhs <= rhs * (1.0 + SLACK) + 1e-300, "{lhs} > {rhs}");
    }

    #[test]
    fn gram_matrix_is_positive_semidefinite(
        bc in prop::sample::select(vec![
            BoundarySpec::Dirichlet, BoundarySpec::Neumann, BoundarySpec::Periodic, BoundarySpec::Robin { beta: 5.0 },
        ]),
        nu in prop::sample::select(vec![0.5, 1.0, 2.0]),
        pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..=20),
    ) {
        let p = derive_params(1.0, 0.2, nu, 2).unwrap();
        let bx = BoxDomain::cubic(0.2, 1.0, 2).unwrap();
        let spec = SpectralCovariance::new(&p, bc, &bx, TruncationSpec::IndexCap(40)).unwrap();
        let points: Vec<Vec<f64>> = pts.iter().map(|&(a, b)| vec![0.1 + a, 0.1 + b]).collect();
        let c = spec.cov_matrix(&points).unwrap();
        prop_assert!((&c - c.transpose()).abs().max() == 0.0);
        let min = SymmetricEigen::new(c).eigenvalues.min();
        prop_assert!(min >= -1e-8, "min eigenvalue {min}");
    }
}

#[test]
fn radiation_residual_vanishes_far_out() {
    for nu in [0.5, 1.0, 2.0] {
        let kappa = 3.0;
        let r = radiation_residual(nu, kappa, 40.0 / kappa).unwrap();
        assert!(r.abs() <= 1e-12, "nu = {nu}: {r}");
    }
}

#[test]
fn a_constant_decreases_to_its_limit() {
    for d in 1..=3 {
        for nu in [0.25, 1.0, 4.0] {
            let kappa = (2.0 * nu as f64).sqrt() / 0.3;
            let a = |ell: f64| a_constant(d, f_func(nu, kappa, ell).unwrap()).unwrap();
            let mut prev = f64::INFINITY;
            for i in 1..=60 {
                let cur = a(0.05 * f64::from(i));
                assert!(cur < prev, "d={d} nu={nu}: A not decreasing at step {i}");
                prev = cur;
            }
            let limit = f64::from((1u32 << d) - 1);
            assert!((a(60.0) - limit).abs() < 1e-12 * limit);
        }
    }
}
