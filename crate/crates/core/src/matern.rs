//! The Matérn kernel, its SPDE constants, and the anisotropic variant.

use std::f64::consts::{LN_2, PI};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{domain, Result};
use crate::specfun::{bessel_k, ln_bessel_k_with_ratio, ln_gamma_positive};

/// Matérn parameters together with the derived SPDE constants.
///
/// Construct with [`MaternParams::new`] (or [`derive_params`]); the derived
/// fields are never stale because the struct is immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct MaternParams {
    sigma2: f64,
    rho: f64,
    nu: f64,
    d: usize,
    kappa: f64,
    alpha: f64,
    eta2: f64,
    unit: UnitMatern,
}

impl MaternParams {
    pub fn new(sigma2: f64, rho: f64, nu: f64, d: usize) -> Result<Self> {
        for (name, v) in [("sigma2", sigma2), ("rho", rho), ("nu", nu)] {
            if !(v > 0.0) || !v.is_finite() {
                return domain(format!("{name} must be finite and positive, got {v}"));
            }
        }
        if !(1..=3).contains(&d) {
            return domain(format!("dimension must be 1, 2 or 3, got {d}"));
        }
        let kappa = (2.0 * nu).sqrt() / rho;
        let half_d = 0.5 * d as f64;
        let alpha = nu + half_d;
        let ln_eta2 = sigma2.ln() + half_d * (4.0 * PI).ln() + ln_gamma_positive(alpha)
            - d as f64 * kappa.ln()
            - ln_gamma_positive(nu);
        Ok(Self {
            sigma2,
            rho,
            nu,
            d,
            kappa,
            alpha,
            eta2: ln_eta2.exp(),
            unit: UnitMatern::new(nu)?,
        })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn d(&self) -> usize {
        self.d
    }
    /// `sqrt(2 nu) / rho`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    /// `nu + d/2`, the power of the SPDE operator.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    /// White-noise scaling that makes the marginal variance equal `sigma2`.
    pub fn eta2(&self) -> f64 {
        self.eta2
    }

    pub fn unit(&self) -> &UnitMatern {
        &self.unit
    }

    /// `sigma2 · M_nu(kappa r)`.
    pub fn cov_at_distance(&self, r: f64) -> f64 {
        self.sigma2 * self.unit.eval(self.kappa * r)
    }

    /// Covariance between two points of dimension `d`.
    pub fn cov(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != self.d || y.len() != self.d {
            return domain(format!(
                "points must have dimension {}, got {} and {}",
                self.d,
                x.len(),
                y.len()
            ));
        }
        let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(self.cov_at_distance(r2.sqrt()))
    }
}

/// Free-function form of [`MaternParams::new`].
pub fn derive_params(sigma2: f64, rho: f64, nu: f64, d: usize) -> Result<MaternParams> {
    MaternParams::new(sigma2, rho, nu, d)
}

/// `M_nu(t) = t^nu K_nu(t) / (2^(nu-1) Γ(nu))` with its normalizer cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitMatern {
    nu: f64,
    ln_norm: f64,
}

impl UnitMatern {
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return domain(format!("smoothness must be finite and positive, got {nu}"));
        }
        Ok(Self { nu, ln_norm: (nu - 1.0) * LN_2 + ln_gamma_positive(nu) })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `ln M_nu(t)` for `t >= 0`; `t = 0` gives 0.
    pub fn ln_eval(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        if t.is_infinite() {
            return f64::NEG_INFINITY;
        }
        let (ln_k, _) = ln_bessel_k_with_ratio(self.nu, t)
            .expect("Bessel recurrences converge for positive finite arguments");
        (self.nu * t.ln() + ln_k - self.ln_norm).min(0.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.ln_eval(t).exp()
    }
}

/// `M_nu(t)`, with the limit 1 at `t = 0`.
pub fn unit_matern(nu: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return domain(format!("unit_matern needs t >= 0, got {t}"));
    }
    Ok(UnitMatern::new(nu)?.eval(t))
}

/// Free-function form of [`MaternParams::cov`].
pub fn matern_cov(params: &MaternParams, x: &[f64], y: &[f64]) -> Result<f64> {
    params.cov(x, y)
}

/// Decay rate `f(x) = M_max(nu, 1/2)(kappa x)` from the window error bound.
pub fn f_func(nu: f64, kappa: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return domain(format!("f requires x > 0, got {x}"));
    }
    if !(kappa > 0.0) {
        return domain(format!("f requires kappa > 0, got {kappa}"));
    }
    Ok(UnitMatern::new(nu.max(0.5))?.eval(kappa * x))
}

/// `(kappa r)^(1/2) · kappa · (K_nu - K_(nu-1))(kappa r) / (2^(nu-1) Γ(nu))`.
///
/// This is `(kappa r)^(-nu+1/2) (d/dr + kappa) M_nu(kappa r)`; it decays
/// like `e^(-kappa r)`, which is what motivates the Robin coefficient
/// `beta = kappa`.
pub fn radiation_residual(nu: f64, kappa: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) || !(kappa > 0.0) {
        return domain(format!("radiation residual needs r, kappa > 0, got ({r}, {kappa})"));
    }
    let unit = UnitMatern::new(nu)?;
    let t = kappa * r;
    let k_nu = bessel_k(nu, t)?;
    let k_lower = bessel_k(nu - 1.0, t)?;
    let diff = 1.0 - (k_lower.log_value - k_nu.log_value).exp();
    let ln_scale = 0.5 * t.ln() + kappa.ln() + k_nu.log_value - unit.ln_norm;
    Ok(diff * ln_scale.exp())
}

/// Symmetric positive definite length metric `Θ = R D² Rᵀ`.
///
/// The factors `(R, D)` are authoritative; `theta` is kept for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct AnisoMetric {
    rotation: DMatrix<f64>,
    scales: DVector<f64>,
    theta: DMatrix<f64>,
}

impl AnisoMetric {
    /// Builds the metric from an orthogonal `rotation` and positive `scales`.
    pub fn from_factors(rotation: DMatrix<f64>, scales: &[f64]) -> Result<Self> {
        let d = scales.len();
        if rotation.nrows() != d || rotation.ncols() != d || d == 0 {
            return domain(format!(
                "rotation is {}x{} but {d} scales were given",
                rotation.nrows(),
                rotation.ncols()
            ));
        }
        if let Some(s) = scales.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
            return domain(format!("scales must be finite and positive, got {s}"));
        }
        let defect = (rotation.transpose() * &rotation - DMatrix::identity(d, d)).abs().max();
        if defect > 1e-12 {
            return domain(format!("rotation is not orthogonal (|RᵀR - I| = {defect:e})"));
        }
        let scales = DVector::from_column_slice(scales);
        let d2 = DMatrix::from_diagonal(&scales.component_mul(&scales));
        let theta = &rotation * d2 * rotation.transpose();
        Ok(Self { rotation, scales, theta })
    }

    /// Factorizes a symmetric positive definite `theta`.
    pub fn from_matrix(theta: DMatrix<f64>) -> Result<Self> {
        let d = theta.nrows();
        if d == 0 || theta.ncols() != d {
            return domain("theta must be a non-empty square matrix".to_string());
        }
        let scale = theta.abs().max();
        let asym = (&theta - theta.transpose()).abs().max();
        if asym > 1e-14 * scale {
            return domain(format!("theta is not symmetric (asymmetry {asym:e})"));
        }
        let eig = SymmetricEigen::new(theta.clone());
        if let Some(ev) = eig.eigenvalues.iter().find(|ev| !(**ev > 0.0)) {
            return domain(format!("theta is not positive definite (eigenvalue {ev:e})"));
        }
        let scales = eig.eigenvalues.map(f64::sqrt);
        Ok(Self { rotation: eig.eigenvectors, scales, theta })
    }

    /// `Θ = rho² I`.
    pub fn isotropic(rho: f64, d: usize) -> Result<Self> {
        Self::from_factors(DMatrix::identity(d, d), &vec![rho; d])
    }

    pub fn dim(&self) -> usize {
        self.scales.len()
    }
    pub fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }
    pub fn rotation(&self) -> &DMatrix<f64> {
        &self.rotation
    }
    pub fn scales(&self) -> &[f64] {
        self.scales.as_slice()
    }
    pub fn rho_max(&self) -> f64 {
        self.scales.max()
    }

    /// `‖v‖_{Θ⁻¹} = ‖D⁻¹ Rᵀ v‖₂`.
    pub fn norm_inv(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.dim() {
            return domain(format!("vector has dimension {}, metric {}", v.len(), self.dim()));
        }
        let w = self.rotation.transpose() * DVector::from_column_slice(v);
        Ok(w.component_div(&self.scales).norm())
    }
}

/// `sigma2 · M_nu(sqrt(2 nu) ‖x - y‖_{Θ⁻¹})`.
pub fn matern_cov_aniso(
    sigma2: f64,
    nu: f64,
    metric: &AnisoMetric,
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return domain(format!("sigma2 must be positive, got {sigma2}"));
    }
    if x.len() != y.len() {
        return domain(format!("point dimensions differ: {} vs {}", x.len(), y.len()));
    }
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let r = metric.norm_inv(&diff)?;
    Ok(sigma2 * UnitMatern::new(nu)?.eval((2.0 * nu).sqrt() * r))
}
