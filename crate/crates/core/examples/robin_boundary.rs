//! Robin eigenpairs and the matched coefficient beta = kappa, which
//! reproduces the exponential kernel up to spectral truncation.

use matern_window::experiments::grid_error;
use matern_window::matern::derive_params;
use matern_window::spectral::{robin_eigen_1d, BoundarySpec};

fn main() -> matern_window::Result<()> {
    let p = derive_params(1.0, 0.1, 0.5, 1)?;
    let beta = p.kappa();
    let modes = robin_eigen_1d(beta, 1.2, 100_000)?;
    println!("first Robin frequencies on (0, 1.2) with beta = {beta}:");
    for i in [0, 1, 2, 10, 99_999] {
        println!(
            "  mode {i:>6}: alpha = {:.15e}, residual {:.1e}, norm^2 {:.12}",
            modes.alphas()[i],
            modes.residual(i),
            modes.norms()[i]
        );
    }
    println!("\nmax-norm error on a 15-point grid, delta = rho:");
    for h in [1e-3, 1e-4, 1e-5] {
        let robin = grid_error(&p, BoundarySpec::Robin { beta }, 0.1, 15, h)?;
        println!("  Robin h = {h:.0e}: {robin:.3e}");
    }
    let neumann = grid_error(&p, BoundarySpec::Neumann, 0.1, 15, 1e-4)?;
    println!("  Neumann (exact folding): {neumann:.3e}");
    Ok(())
}
