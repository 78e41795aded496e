//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comments run to end of line
//! sigma2 = 1
//! rho = 0.1
//! nu = 1
//! d = 1
//! bc = D, N, P, R
//! delta_list = 0, 0.05, 0.1
//! n_grid = 15
//! trunc_h = 1e-4
//! robin_beta = 14.142135623730951
//! n_samples = 10000
//! seed = 0
//! ```
//!
//! Every key is optional. Unknown or repeated keys are errors.

use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matern::{derive_params, MaternParams};
use crate::spectral::BoundarySpec;

/// Boundary condition letter from the `bc` key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcKind {
    Dirichlet,
    Neumann,
    Periodic,
    Robin,
}

impl BcKind {
    pub fn letter(self) -> char {
        match self {
            BcKind::Dirichlet => 'D',
            BcKind::Neumann => 'N',
            BcKind::Periodic => 'P',
            BcKind::Robin => 'R',
        }
    }
}

impl FromStr for BcKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "D" => Ok(BcKind::Dirichlet),
            "N" => Ok(BcKind::Neumann),
            "P" => Ok(BcKind::Periodic),
            "R" => Ok(BcKind::Robin),
            other => Err(Error::Config(format!("unknown boundary condition {other:?}; expected D, N, P or R"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub sigma2: f64,
    pub rho: f64,
    pub nu: f64,
    pub d: usize,
    pub bcs: Vec<BcKind>,
    pub delta_list: Vec<f64>,
    pub n_grid: usize,
    pub trunc_h: f64,
    /// `None` means `β = κ`.
    pub robin_beta: Option<f64>,
    pub n_samples: usize,
    pub seed: u64,
}

/// `n >= 2` geometrically spaced window sizes in `[lo, hi]`, rounded to
/// multiples of `2^-30` (endpoints inward) so that `δ/2`, `δ + ℓ` and the
/// window corners are exact in binary and corner images sit at exactly `δ`.
pub fn delta_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    const SCALE: f64 = (1u64 << 30) as f64;
    (0..n)
        .map(|i| {
            let x = lo * (hi / lo).powf(i as f64 / (n - 1) as f64) * SCALE;
            let x = if i == 0 { x.ceil() } else if i == n - 1 { x.floor() } else { x.round() };
            x / SCALE
        })
        .collect()
}

/// Window sizes used when `delta_list` is not given: `0` followed by 24
/// values of [`delta_grid`] over `[0.05ρ, 6ρ]`.
pub fn default_delta_list(rho: f64) -> Vec<f64> {
    std::iter::once(0.0).chain(delta_grid(0.05 * rho, 6.0 * rho, 24)).collect()
}

/// Points per axis: 15 / 10 in one dimension and 5 / 3 in two, the smaller
/// value for rough fields `ν < 1/2`.
pub fn default_n_grid(d: usize, nu: f64) -> usize {
    match (d, nu >= 0.5) {
        (1, true) => 15,
        (1, false) => 10,
        (2, true) => 5,
        _ => 3,
    }
}

/// Spectral resolution for Robin columns and the sampler.
pub fn default_trunc_h(d: usize) -> f64 {
    match d {
        1 => 1e-4,
        2 => 5e-3,
        _ => 2e-2,
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let (rho, nu, d) = (0.1, 1.0, 1);
        Self {
            sigma2: 1.0,
            rho,
            nu,
            d,
            bcs: vec![BcKind::Dirichlet, BcKind::Neumann, BcKind::Periodic],
            delta_list: default_delta_list(rho),
            n_grid: default_n_grid(d, nu),
            trunc_h: default_trunc_h(d),
            robin_beta: None,
            n_samples: 10_000,
            seed: 0,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {key} = {raw:?}")))
}

fn parse_list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>> {
    raw.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_value(key, s)).collect()
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        text.parse()
    }

    pub fn params(&self) -> Result<MaternParams> {
        derive_params(self.sigma2, self.rho, self.nu, self.d)
    }

    /// Resolves the `bc` letters, taking `β = κ` unless `robin_beta` is set.
    pub fn boundaries(&self) -> Result<Vec<BoundarySpec>> {
        let kappa = self.params()?.kappa();
        self.bcs
            .iter()
            .map(|bc| {
                Ok(match bc {
                    BcKind::Dirichlet => BoundarySpec::Dirichlet,
                    BcKind::Neumann => BoundarySpec::Neumann,
                    BcKind::Periodic => BoundarySpec::Periodic,
                    BcKind::Robin => BoundarySpec::robin(self.robin_beta.unwrap_or(kappa))?,
                })
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        if self.n_grid < 2 {
            return Err(Error::Config(format!("n_grid must be at least 2, got {}", self.n_grid)));
        }
        if let Some(bad) = self.delta_list.iter().find(|d| !(**d >= 0.0 && d.is_finite())) {
            return Err(Error::Config(format!("delta values must be finite and non-negative, got {bad}")));
        }
        if self.bcs.is_empty() {
            return Err(Error::Config("bc list is empty".to_string()));
        }
        if !(self.trunc_h > 0.0 && self.trunc_h.is_finite()) {
            return Err(Error::Config(format!("trunc_h must be positive, got {}", self.trunc_h)));
        }
        self.boundaries()?;
        Ok(())
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut seen: Vec<&str> = Vec::new();
        let mut cfg = ExperimentConfig::default();
        let (mut delta_list, mut n_grid, mut trunc_h) = (None, None, None);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            if seen.contains(&key) {
                return Err(Error::Config(format!("line {}: {key} given twice", lineno + 1)));
            }
            seen.push(key);
            match key {
                "sigma2" => cfg.sigma2 = parse_value(key, value)?,
                "rho" => cfg.rho = parse_value(key, value)?,
                "nu" => cfg.nu = parse_value(key, value)?,
                "d" => cfg.d = parse_value(key, value)?,
                "bc" => cfg.bcs = parse_list(key, value)?,
                "delta_list" => delta_list = Some(parse_list(key, value)?),
                "n_grid" => n_grid = Some(parse_value(key, value)?),
                "trunc_h" => trunc_h = Some(parse_value(key, value)?),
                "robin_beta" => cfg.robin_beta = Some(parse_value(key, value)?),
                "n_samples" => cfg.n_samples = parse_value(key, value)?,
                "seed" => cfg.seed = parse_value(key, value)?,
                other => return Err(Error::Config(format!("line {}: unknown key {other:?}", lineno + 1))),
            }
        }
        cfg.delta_list = delta_list.unwrap_or_else(|| default_delta_list(cfg.rho));
        cfg.n_grid = n_grid.unwrap_or_else(|| default_n_grid(cfg.d, cfg.nu));
        cfg.trunc_h = trunc_h.unwrap_or_else(|| default_trunc_h(cfg.d));
        cfg.validate()?;
        Ok(cfg)
    }
}
