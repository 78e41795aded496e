//! Gaussian field samples on a window grid and their empirical covariance.

use matern_window::matern::derive_params;
use matern_window::sampler::{empirical_cov, FieldSampler};
use matern_window::spectral::{BoundarySpec, BoxDomain, TruncationSpec};

fn main() -> matern_window::Result<()> {
    let p = derive_params(1.0, 0.1, 1.0, 1)?;
    let bx = BoxDomain::cubic(0.2, 1.0, 1)?;
    let grid = bx.window_grid(8)?;
    let sampler = FieldSampler::new(&p, BoundarySpec::Neumann, &bx, grid.clone(), TruncationSpec::Resolution(1e-3))?;
    println!("{} modes", sampler.n_modes());
    let one = sampler.sample(42);
    for (x, v) in grid.iter().zip(&one.values) {
        println!("u({:.4}) = {v:+.6}", x[0]);
    }
    let samples: Vec<_> = (0..4000).map(|s| sampler.sample(s)).collect();
    let emp = empirical_cov(&samples)?;
    let exact = sampler.covariance();
    let worst = (0..grid.len())
        .flat_map(|i| (0..grid.len()).map(move |j| (i, j)))
        .map(|(i, j)| (emp.matrix[(i, j)] - exact[(i, j)]).abs() / emp.std_error[(i, j)])
        .fold(0.0, f64::max);
    println!("4000 samples: worst |empirical - exact| = {worst:.2} standard errors");
    Ok(())
}
