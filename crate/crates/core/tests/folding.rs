use matern_window::folded::{
    cov_folded, cov_folded_dirichlet, cov_folded_neumann, cov_folded_periodic, default_radius, folded_error, radius_for,
    SignVector,
};
use matern_window::matern::derive_params;
use matern_window::spectral::{BoundarySpec, BoxDomain, SpectralCovariance, TruncationSpec};
use proptest::prelude::*;

fn folding_bc() -> impl Strategy<Value = BoundarySpec> {
    prop::sample::select(vec![BoundarySpec::Dirichlet, BoundarySpec::Neumann, BoundarySpec::Periodic])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn spectral_equals_folded_in_one_dimension(
        bc in folding_bc(),
        nu in prop::sample::select(vec![0.5, 1.0]),
        delta in 0.0f64..0.3,
        ts in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 5),
    ) {
        let p = derive_params(1.0, 0.1, nu, 1).unwrap();
        let bx = BoxDomain::cubic(delta, 1.0, 1).unwrap();
        let h = if nu == 0.5 { 1e-5 } else { 1e-4 };
        let spec = SpectralCovariance::new(&p, bc, &bx, TruncationSpec::Resolution(h)).unwrap();
        let r = default_radius(&p, bc, &bx).unwrap();
        for (a, b) in ts {
            let (x, y) = ([delta / 2.0 + a], [delta / 2.0 + b]);
            let s = spec.cov(&x, &y).unwrap();
            let f = cov_folded(&p, bc, &bx, &x, &y, r).unwrap();
            let tol = (s.tail_bound + f.tail_bound).max(1e-6);
            prop_assert!((s.value - f.value).abs() <= tol, "{bc:?} {x:?} {y:?}: {} vs {}", s.value, f.value);
        }
    }

    #[test]
    fn periodic_and_neumann_overestimate(
        bc in prop::sample::select(vec![BoundarySpec::Neumann, BoundarySpec::Periodic]),
        nu in prop::sample::select(vec![0.25, 1.0, 50.0]),
        d in 1usize..=3,
        delta in 0.0f64..1.0,
        a in prop::collection::vec(0.0f64..=1.0, 3),
        b in prop::collection::vec(0.0f64..=1.0, 3),
    ) {
        let p = derive_params(1.0, 0.3, nu, d).unwrap();
        let bx = BoxDomain::cubic(delta, 1.0, d).unwrap();
        let x: Vec<f64> = a[..d].iter().map(|v| delta / 2.0 + v).collect();
        let y: Vec<f64> = b[..d].iter().map(|v| delta / 2.0 + v).collect();
        let e = folded_error(&p, bc, &bx, &x, &y, 2).unwrap();
        prop_assert!(e.value > 0.0, "{bc:?}: C^L - C = {}", e.value);
    }

    #[test]
    fn reflected_families_resum_to_the_folded_covariance(
        nu in prop::sample::select(vec![0.5, 1.0, 3.0]),
        d in 1usize..=2,
        delta in 0.0f64..0.5,
        a in prop::collection::vec(0.0f64..=1.0, 2),
        b in prop::collection::vec(0.0f64..=1.0, 2),
        radius in 0u64..4,
    ) {
        let p = derive_params(1.0, 0.2, nu, d).unwrap();
        let bx = BoxDomain::cubic(delta, 1.0, d).unwrap();
        let doubled = bx.doubled();
        let x: Vec<f64> = a[..d].iter().map(|v| delta / 2.0 + v).collect();
        let y: Vec<f64> = b[..d].iter().map(|v| delta / 2.0 + v).collect();
        let (mut n_sum, mut d_sum) = (0.0, 0.0);
        for eps in SignVector::all(d) {
            let v = cov_folded_periodic(&p, &doubled, &x, &eps.apply(&y), radius).unwrap().value;
            n_sum += v;
            d_sum += f64::from(eps.parity()) * v;
        }
        let n_val = cov_folded_neumann(&p, &bx, &x, &y, radius).unwrap().value;
        let d_val = cov_folded_dirichlet(&p, &bx, &x, &y, radius).unwrap().value;
        prop_assert!((n_val - n_sum).abs() <= 1e-14, "{n_val} vs {n_sum}");
        prop_assert!((d_val - d_sum).abs() <= 1e-14, "{d_val} vs {d_sum}");
    }

    #[test]
    fn periodic_covariance_is_stationary(
        d in 1usize..=2,
        delta in 0.0f64..0.5,
        a in prop::collection::vec(0.0f64..=1.0, 2),
        b in prop::collection::vec(0.0f64..=1.0, 2),
        shift in prop::collection::vec(0.0f64..1.5, 2),
    ) {
        let p = derive_params(1.0, 0.2, 1.0, d).unwrap();
        let bx = BoxDomain::cubic(delta, 1.0, d).unwrap();
        let l = bx.lengths()[0];
        let x: Vec<f64> = a[..d].iter().map(|v| delta / 2.0 + v).collect();
        let y: Vec<f64> = b[..d].iter().map(|v| delta / 2.0 + v).collect();
        let wrap = |v: &[f64]| -> Vec<f64> { v.iter().zip(&shift).map(|(c, s)| (c + s).rem_euclid(l)).collect() };
        let (xs, ys) = (wrap(&x), wrap(&y));
        // Shifted pairs may straddle the wrap; bring y back within one period of x.
        let ys: Vec<f64> = ys.iter().zip(&xs).map(|(&yv, &xv)| {
            if yv - xv > l / 2.0 { yv - l } else if xv - yv > l / 2.0 { yv + l } else { yv }
        }).collect();
        let r = radius_for(&p, BoundarySpec::Periodic, &bx, 1e-14).unwrap();
        let base = cov_folded_periodic(&p, &bx, &x, &y, r).unwrap().value;
        let moved = cov_folded_periodic(&p, &bx, &xs, &ys, r).unwrap().value;
        prop_assert!((base - moved).abs() <= 1e-12, "{base} vs {moved}");
    }
}

#[test]
fn spectral_equals_folded_in_two_dimensions() {
    for bc in [BoundarySpec::Dirichlet, BoundarySpec::Neumann, BoundarySpec::Periodic] {
        for delta in [0.0, 0.2] {
            let p = derive_params(1.0, 0.1, 1.0, 2).unwrap();
            let bx = BoxDomain::cubic(delta, 1.0, 2).unwrap();
            let grid = bx.window_grid(4).unwrap();
            let spec = SpectralCovariance::new(&p, bc, &bx, TruncationSpec::IndexCap(1500)).unwrap();
            let c = spec.cov_matrix(&grid).unwrap();
            let r = default_radius(&p, bc, &bx).unwrap();
            for i in 0..grid.len() {
                for j in i..grid.len() {
                    let f = cov_folded(&p, bc, &bx, &grid[i], &grid[j], r).unwrap();
                    let tol = (spec.tail_bound() + f.tail_bound).max(1e-6);
                    assert!((c[(i, j)] - f.value).abs() <= tol, "{bc:?} δ={delta}: {} vs {}", c[(i, j)], f.value);
                }
            }
        }
    }
}
