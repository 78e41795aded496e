//! Anisotropic Matérn kernel with a rotated length metric and the matching
//! window bound driven by the largest principal length.

use matern_window::bounds::aniso_bound;
use matern_window::matern::{matern_cov_aniso, AnisoMetric};
use nalgebra::DMatrix;

fn main() -> matern_window::Result<()> {
    let angle = std::f64::consts::FRAC_PI_6;
    let (c, s) = (angle.cos(), angle.sin());
    let rotation = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
    let metric = AnisoMetric::from_factors(rotation, &[0.2, 0.05])?;
    println!("theta =\n{:.6}", metric.theta());
    let along = [0.2 * c, 0.2 * s];
    let across = [-0.2 * s, 0.2 * c];
    for (name, v) in [("along the long axis", along), ("across it", across)] {
        println!("C(0, {name}) = {:.6e}", matern_cov_aniso(1.0, 1.5, &metric, &[0.0, 0.0], &v)?);
    }
    for delta in [0.1, 0.4, 0.8] {
        println!("window bound at delta = {delta}: {:.6e}", aniso_bound(1.0, 1.5, &metric, delta, 1.0, 2)?);
    }
    Ok(())
}
