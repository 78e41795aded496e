//! Experiment runners behind the command-line verbs. Each produces a
//! [`Table`] written as CSV with a header row and 17 significant digits.

mod config;

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

pub use config::{default_delta_list, delta_grid, default_n_grid, default_trunc_h, BcKind, ExperimentConfig};

use crate::bounds::{eulerian, main_bound, polylog_partial, power_series_closed_form, BoundReport};
use crate::error::{Error, Result};
use crate::folded::{cov_folded, default_radius, folded_error, folded_grid_error};
use crate::matern::{MaternParams, UnitMatern};
use crate::sampler::{empirical_cov, FieldSampler};
use crate::specfun::{bessel_k, bessel_k_integral};
use crate::spectral::{robin_eigen_1d, BoundarySpec, BoxDomain, SpectralCovariance, TruncationSpec};

/// Window width used by every experiment.
pub const ELL: f64 = 1.0;

/// Points along the covariance slice.
pub const SLICE_POINTS: usize = 101;

/// Formats a number with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Header plus pre-formatted rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("table cells are UTF-8")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let io = |source| Error::Io { path: path.to_path_buf(), source };
        let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        self.write_csv(&mut file).map_err(io)?;
        file.flush().map_err(io)
    }

    /// Parses the numeric column `name` back out of the formatted rows.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        self.rows.iter().map(|r| r[j].parse().ok()).collect()
    }
}

fn bc_name(bc: BoundarySpec) -> &'static str {
    match bc {
        BoundarySpec::Dirichlet => "D",
        BoundarySpec::Neumann => "N",
        BoundarySpec::Periodic => "P",
        BoundarySpec::Robin { .. } => "R",
    }
}

/// `C^L_*(x₀, y)` along the diagonal from `x₀ = (δ/2, …)` across the window,
/// for every δ of the config.
///
/// Columns: `delta, t, C_matern, C_<bc>…` with `y = x₀ + t (1, …, 1)`.
pub fn run_cov_slice(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    let params = cfg.params()?;
    let bcs = cfg.boundaries()?;
    let mut header = vec!["delta".to_string(), "t".to_string(), "C_matern".to_string()];
    header.extend(bcs.iter().map(|bc| format!("C_{}", bc_name(*bc))));
    let blocks = cfg
        .delta_list
        .par_iter()
        .map(|&delta| slice_rows(&params, &bcs, delta, cfg.trunc_h))
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(header);
    table.rows = blocks.into_iter().flatten().collect();
    Ok(table)
}

fn slice_rows(params: &MaternParams, bcs: &[BoundarySpec], delta: f64, h: f64) -> Result<Vec<Vec<String>>> {
    let d = params.d();
    let bx = BoxDomain::cubic(delta, ELL, d)?;
    let x0 = vec![0.5 * delta; d];
    let ts = BoxDomain::cubic(0.0, ELL, 1)?.window_axis(SLICE_POINTS)?;
    let ys: Vec<Vec<f64>> = ts.iter().map(|t| x0.iter().map(|x| x + t).collect()).collect();
    let mut columns = Vec::with_capacity(bcs.len());
    for &bc in bcs {
        let col = match bc {
            BoundarySpec::Robin { .. } => {
                let spec = SpectralCovariance::new(params, bc, &bx, TruncationSpec::Resolution(h))?;
                let pairs: Vec<(&[f64], &[f64])> = ys.iter().map(|y| (x0.as_slice(), y.as_slice())).collect();
                spec.cov_pairs(&pairs)?
            }
            _ => {
                let r = default_radius(params, bc, &bx)?;
                ys.iter()
                    .map(|y| cov_folded(params, bc, &bx, &x0, y, r).map(|s| s.value))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        columns.push(col);
    }
    Ok(ts
        .iter()
        .zip(&ys)
        .enumerate()
        .map(|(i, (&t, y))| {
            let mut row = vec![num(delta), num(t), num(params.cov(&x0, y).expect("same dimension"))];
            row.extend(columns.iter().map(|c| num(c[i])));
            row
        })
        .collect())
}

/// One δ of an error curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub delta: f64,
    /// Max-norm error per boundary condition, in config order.
    pub errors: Vec<f64>,
    pub bounds: BoundReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    pub bcs: Vec<BoundarySpec>,
    pub rows: Vec<ErrorRow>,
}

impl ErrorCurve {
    pub fn to_table(&self) -> Table {
        let mut header = vec!["delta".to_string()];
        header.extend(self.bcs.iter().map(|bc| format!("err_{}", bc_name(*bc))));
        header.extend(["corollary_bound", "main_bound", "dirichlet_bound"].map(String::from));
        let mut table = Table::new(header);
        for r in &self.rows {
            let mut row = vec![num(r.delta)];
            row.extend(r.errors.iter().map(|e| num(*e)));
            row.extend([r.bounds.corollary_bound, r.bounds.main_bound, r.bounds.dirichlet_bound].map(num));
            table.rows.push(row);
        }
        table
    }
}

/// Max-norm error of one boundary condition over the `n^d` window grid.
///
/// Dirichlet, Neumann and periodic errors come from the image sums; Robin
/// errors from the spectral expansion truncated at resolution `h`.
pub fn grid_error(params: &MaternParams, bc: BoundarySpec, delta: f64, n: usize, h: f64) -> Result<f64> {
    let bx = BoxDomain::cubic(delta, ELL, params.d())?;
    match bc {
        BoundarySpec::Robin { .. } => {
            let grid = bx.window_grid(n)?;
            let spec = SpectralCovariance::new(params, bc, &bx, TruncationSpec::Resolution(h))?;
            let c = spec.cov_matrix(&grid)?;
            let mut worst: f64 = 0.0;
            for i in 0..grid.len() {
                for j in i..grid.len() {
                    worst = worst.max((c[(i, j)] - params.cov(&grid[i], &grid[j])?).abs());
                }
            }
            Ok(worst)
        }
        _ => Ok(folded_grid_error(params, bc, &bx, &bx.window_axis(n)?, None)?.max_error),
    }
}

/// Measured errors and bounds for every δ of the config.
pub fn run_error_curve(cfg: &ExperimentConfig) -> Result<ErrorCurve> {
    cfg.validate()?;
    if cfg.delta_list.is_empty() {
        return Err(Error::Config("delta_list is empty".to_string()));
    }
    let params = cfg.params()?;
    let bcs = cfg.boundaries()?;
    let rows = cfg
        .delta_list
        .par_iter()
        .map(|&delta| {
            let errors = bcs
                .iter()
                .map(|&bc| grid_error(&params, bc, delta, cfg.n_grid, cfg.trunc_h))
                .collect::<Result<Vec<_>>>()?;
            Ok(ErrorRow { delta, errors, bounds: main_bound(&params, delta, ELL)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorCurve { bcs, rows })
}

/// Bound table: `delta, corollary_bound, corollary_tail, main_bound, a_const,
/// f_ell, dirichlet_bound`.
pub fn run_bounds(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    let params = cfg.params()?;
    let mut table = Table::new(
        ["delta", "corollary_bound", "corollary_tail", "main_bound", "a_const", "f_ell", "dirichlet_bound"]
            .map(String::from)
            .to_vec(),
    );
    for &delta in &cfg.delta_list {
        let b = main_bound(&params, delta, ELL)?;
        table.rows.push(
            [b.delta, b.corollary_bound, b.corollary_tail, b.main_bound, b.a_const, b.f_ell, b.dirichlet_bound]
                .map(num)
                .to_vec(),
        );
    }
    Ok(table)
}

/// Empirical versus spectral covariance on the window grid at the first δ
/// of the config (`δ = 2ρ` if the list is empty).
///
/// Sample `j` uses seed `seed + j`. Columns: `bc, i, j, empirical, spectral,
/// abs_diff, std_error, mean_i, mean_bound_i` where the last is
/// `sqrt(Σ_ii / n)`.
pub fn run_sampler_check(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    if cfg.n_samples == 0 {
        return Err(Error::Usage("n_samples must be positive for a sampler check".to_string()));
    }
    let params = cfg.params()?;
    let delta = cfg.delta_list.first().copied().unwrap_or(2.0 * cfg.rho);
    let bx = BoxDomain::cubic(delta, ELL, cfg.d)?;
    let grid = bx.window_grid(cfg.n_grid)?;
    let trunc = TruncationSpec::Resolution(cfg.trunc_h);
    let mut table = Table::new(
        ["bc", "i", "j", "empirical", "spectral", "abs_diff", "std_error", "mean_i", "mean_bound_i"]
            .map(String::from)
            .to_vec(),
    );
    for bc in cfg.boundaries()? {
        let sampler = FieldSampler::new(&params, bc, &bx, grid.clone(), trunc)?;
        let samples: Vec<_> = (0..cfg.n_samples as u64)
            .into_par_iter()
            .map(|j| sampler.sample(cfg.seed.wrapping_add(j)))
            .collect();
        let emp = empirical_cov(&samples)?;
        let exact = SpectralCovariance::new(&params, bc, &bx, trunc)?.cov_matrix(&grid)?;
        for i in 0..grid.len() {
            for j in i..grid.len() {
                let (e, s) = (emp.matrix[(i, j)], exact[(i, j)]);
                table.rows.push(vec![
                    bc_name(bc).to_string(),
                    i.to_string(),
                    j.to_string(),
                    num(e),
                    num(s),
                    num((e - s).abs()),
                    num(emp.std_error[(i, j)]),
                    num(emp.mean[i]),
                    num((exact[(i, i)] / cfg.n_samples as f64).sqrt()),
                ]);
            }
        }
    }
    Ok(table)
}

/// One line of the identity suite.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    /// Observed discrepancy (or violation count).
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, passed: value <= tolerance }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["check", "value", "tolerance", "passed"].map(String::from).to_vec());
        for c in &self.checks {
            t.rows.push(vec![c.name.clone(), num(c.value), num(c.tolerance), c.passed.to_string()]);
        }
        t
    }
}

/// Identity suite at the config's parameters: spectral against folded
/// covariances, overestimation, bound domination, Robin root residuals,
/// Bessel oracle agreement, log-subadditivity and the combinatorial
/// identities behind the bounds.
pub fn run_verify(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let params = cfg.params()?;
    let d = cfg.d;
    let delta = 2.0 * cfg.rho;
    let bx = BoxDomain::cubic(delta, ELL, d)?;
    let n = cfg.n_grid.min(5);
    let grid = bx.window_grid(n)?;
    let mut checks = Vec::new();

    let trunc = TruncationSpec::Resolution(cfg.trunc_h);
    for bc in [BoundarySpec::Dirichlet, BoundarySpec::Neumann, BoundarySpec::Periodic] {
        let spec = SpectralCovariance::new(&params, bc, &bx, trunc)?;
        let c = spec.cov_matrix(&grid)?;
        let r = default_radius(&params, bc, &bx)?;
        let mut worst: f64 = 0.0;
        let mut slack: f64 = 0.0;
        let mut under = 0usize;
        for i in 0..grid.len() {
            for j in i..grid.len() {
                let f = cov_folded(&params, bc, &bx, &grid[i], &grid[j], r)?;
                worst = worst.max((c[(i, j)] - f.value).abs());
                slack = slack.max(f.tail_bound);
                if bc != BoundarySpec::Dirichlet && folded_error(&params, bc, &bx, &grid[i], &grid[j], r)?.value <= 0.0 {
                    under += 1;
                }
            }
        }
        let name = bc_name(bc);
        checks.push(Check::at_most(format!("spectral_vs_folded_{name}"), worst, 1e-6 + spec.tail_bound() + slack));
        if bc != BoundarySpec::Dirichlet {
            checks.push(Check::at_most(format!("overestimation_violations_{name}"), under as f64, 0.0));
        }
        let err = folded_grid_error(&params, bc, &bx, &bx.window_axis(n)?, None)?.max_error;
        checks.push(Check::at_most(format!("error_below_main_bound_{name}"), err, main_bound(&params, delta, ELL)?.main_bound));
    }

    let beta = cfg.robin_beta.unwrap_or(params.kappa());
    let robin = robin_eigen_1d(beta, bx.lengths()[0], 2000)?;
    let worst = (0..robin.len()).map(|i| robin.residual(i).abs()).fold(0.0, f64::max);
    checks.push(Check::at_most("robin_root_residual", worst, 1e-12));

    let mut worst: f64 = 0.0;
    for &nu in &[0.05, 0.5, 1.0, params.nu(), 20.0, 60.0] {
        for &x in &[1e-6, 0.01, 0.3, 1.0, 7.5, 50.0] {
            let a = bessel_k(nu, x)?.log_value;
            let b = bessel_k_integral(nu, x)?.log_value;
            worst = worst.max(((a - b).exp_m1()).abs());
        }
    }
    checks.push(Check::at_most("bessel_vs_integral_oracle", worst, 1e-10));

    let m = UnitMatern::new(params.nu())?;
    let half = UnitMatern::new(0.5)?;
    let mut violation: f64 = 0.0;
    for i in 1..=40 {
        for j in 1..=40 {
            let (x, y) = (0.05 * i as f64, 0.05 * j as f64);
            let rhs = if params.nu() >= 0.5 { m.eval(x) * m.eval(y) } else { m.eval(x) * half.eval(y) };
            violation = violation.max(m.eval(x + y) - rhs);
        }
    }
    checks.push(Check::at_most("log_subadditivity_excess", violation, 1e-12));

    let mut worst: f64 = 0.0;
    for row in 1..=8u32 {
        let sum: u64 = (0..row).map(|k| eulerian(row, k)).sum::<Result<u64>>()?;
        let fact: u64 = (1..=u64::from(row)).product();
        worst = worst.max((sum as f64 - fact as f64).abs());
    }
    checks.push(Check::at_most("eulerian_row_sums", worst, 0.0));

    let mut worst: f64 = 0.0;
    for d in 1..=3u32 {
        for &z in &[0.1, 0.5, 0.9] {
            let closed = power_series_closed_form(d, z)?;
            let partial = polylog_partial(1.0 - f64::from(d), z, 1_000_000)? / z;
            worst = worst.max(((closed - partial) / closed).abs());
        }
    }
    checks.push(Check::at_most("polylog_closed_form", worst, 1e-10));

    Ok(VerifyReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        "rho = 0.1\nnu = 1\nbc = D, N, P\ndelta_list = 0, 0.1, 0.2\nn_grid = 6\ntrunc_h = 1e-3\nn_samples = 200\nseed = 5"
            .parse()
            .unwrap()
    }

    #[test]
    fn cov_slice_periodic_column_is_the_folded_oracle() {
        let t = run_cov_slice(&small()).unwrap();
        assert_eq!(t.rows.len(), 3 * SLICE_POINTS);
        let p = small().params().unwrap();
        let row = &t.rows[SLICE_POINTS + 40];
        let (delta, tt): (f64, f64) = (row[0].parse().unwrap(), row[1].parse().unwrap());
        let bx = BoxDomain::cubic(delta, ELL, 1).unwrap();
        let r = default_radius(&p, BoundarySpec::Periodic, &bx).unwrap();
        let expected = cov_folded(&p, BoundarySpec::Periodic, &bx, &[delta / 2.0], &[delta / 2.0 + tt], r).unwrap();
        assert_eq!(row[5], num(expected.value));
    }

    #[test]
    fn error_curve_rows_are_dominated() {
        let curve = run_error_curve(&small()).unwrap();
        for r in &curve.rows {
            for e in &r.errors {
                assert!(*e <= r.bounds.main_bound);
            }
        }
        assert_eq!(curve.to_table().header.len(), 7);
    }

    #[test]
    fn sampler_check_needs_samples() {
        let mut cfg = small();
        cfg.n_samples = 0;
        assert!(matches!(run_sampler_check(&cfg), Err(Error::Usage(_))));
    }

    #[test]
    fn sampler_check_is_deterministic() {
        let mut cfg = small();
        cfg.bcs = vec![BcKind::Neumann];
        cfg.n_grid = 3;
        assert_eq!(run_sampler_check(&cfg).unwrap(), run_sampler_check(&cfg).unwrap());
    }

    #[test]
    fn verify_passes_at_defaults() {
        let report = run_verify(&small()).unwrap();
        for c in &report.checks {
            assert!(c.passed, "{c:?}");
        }
    }
}
