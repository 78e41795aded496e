//! Modified Bessel functions and the unit Matérn correlation, including the
//! large-order regime that only survives in log space.

use matern_window::matern::{derive_params, UnitMatern};
use matern_window::specfun::{bessel_k, bessel_k_integral};

fn main() -> matern_window::Result<()> {
    println!("{:>6} {:>8} {:>24} {:>24} {:>10}", "nu", "x", "K_nu(x)", "ln K_nu(x)", "rel.err");
    for (nu, x) in [(0.25, 1e-6), (0.5, 1.0), (1.0, 2.5), (10.0, 5.0), (60.0, 50.0), (200.0, 3.0)] {
        let k = bessel_k(nu, x)?;
        let oracle = bessel_k_integral(nu, x)?;
        let rel = (k.log_value - oracle.log_value).exp_m1().abs();
        println!("{nu:>6} {x:>8.1e} {:>24.16e} {:>24.16e} {rel:>10.1e}", k.value, k.log_value);
    }

    println!("\nunit Matérn M_nu(t)");
    for nu in [0.25, 0.5, 1.0, 2.5, 50.0] {
        let m = UnitMatern::new(nu)?;
        let row: Vec<String> = [0.0, 0.5, 1.0, 2.0, 5.0].iter().map(|&t| format!("{:.6e}", m.eval(t))).collect();
        println!("nu = {nu:>5}: {}", row.join("  "));
    }

    let p = derive_params(1.0, 0.1, 1.0, 2)?;
    println!(
        "\nsigma2 = 1, rho = 0.1, nu = 1, d = 2: kappa = {:.6}, alpha = {}, eta^2 = {:.6e}",
        p.kappa(),
        p.alpha(),
        p.eta2()
    );
    println!("C((0.1, 0.1), (0.2, 0.3)) = {:.12}", p.cov(&[0.1, 0.1], &[0.2, 0.3])?);
    Ok(())
}
