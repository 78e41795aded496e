//! Runs the error-curve experiment from an inline config and prints CSV.

use matern_window::experiments::{run_error_curve, ExperimentConfig};

fn main() -> matern_window::Result<()> {
    let cfg: ExperimentConfig = "
        rho = 0.1
        nu = 0.5
        bc = D, N, P, R
        delta_list = 0.1, 0.2, 0.3, 0.4, 0.5
        trunc_h = 1e-4
    "
    .parse()?;
    print!("{}", run_error_curve(&cfg)?.to_table().to_csv());
    Ok(())
}
