//! Measured max-norm window error against the lattice-sum and closed-form
//! bounds as the margin grows.

use matern_window::bounds::main_bound;
use matern_window::experiments::delta_grid;
use matern_window::folded::folded_grid_error;
use matern_window::matern::derive_params;
use matern_window::spectral::{BoundarySpec, BoxDomain};

fn main() -> matern_window::Result<()> {
    let p = derive_params(1.0, 0.1, 1.0, 1)?;
    println!("{:>10} {:>12} {:>12} {:>12} {:>12} {:>12}", "delta", "err_D", "err_N", "err_P", "corollary", "main");
    for delta in delta_grid(0.01, 0.6, 12) {
        let bx = BoxDomain::cubic(delta, 1.0, 1)?;
        let axis = bx.window_axis(15)?;
        let errs: Vec<f64> = [BoundarySpec::Dirichlet, BoundarySpec::Neumann, BoundarySpec::Periodic]
            .into_iter()
            .map(|bc| folded_grid_error(&p, bc, &bx, &axis, None).map(|e| e.max_error))
            .collect::<matern_window::Result<_>>()?;
        let b = main_bound(&p, delta, 1.0)?;
        println!(
            "{delta:>10.4} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            errs[0], errs[1], errs[2], b.corollary_bound, b.main_bound
        );
    }
    Ok(())
}
