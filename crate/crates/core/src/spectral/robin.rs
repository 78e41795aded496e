//! One-dimensional Robin eigenpairs on `(0, ℓ)`.
//!
//! With `u'(0) = h u(0)` and `u'(ℓ) = -h u(ℓ)`, the eigenfunctions are
//! `u_n(x) = (α/H) cos(αx/ℓ) + sin(αx/ℓ)` with `H = hℓ`, and the
//! eigenvalues of `-d²/dx²` are `(α_n/ℓ)²`. Substituting into the right-hand
//! condition gives `(α² - H²) sin α = 2Hα cos α`, which in angle form reads
//! `α - 2·atan(H/α) = (n - 1)π`: exactly one root per interval
//! `((n-1)π, nπ)`.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::quad;

/// Modes whose closed-form norm is cross-checked by quadrature.
const NORM_CHECK_MODES: usize = 32;
const NORM_TOL: f64 = 1e-8;

/// The first `count` Robin eigenpairs on an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct RobinEigen1D {
    h: f64,
    ell_axis: f64,
    alphas: Vec<f64>,
    offsets: Vec<f64>,
    norms: Vec<f64>,
}

impl RobinEigen1D {
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn ell_axis(&self) -> f64 {
        self.ell_axis
    }
    /// Ascending roots `α_n`, `n = 1..=count`.
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }
    /// `θ_n = α_n - (n-1)π ∈ (0, π)`, stored separately because `α_n` alone
    /// cannot carry `θ_n` to full precision once `n` is large.
    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }
    /// `‖u_n‖²` over `(0, ℓ)`.
    pub fn norms(&self) -> &[f64] {
        &self.norms
    }
    pub fn len(&self) -> usize {
        self.alphas.len()
    }
    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    /// Eigenvalue of `-d²/dx²` for the mode with zero-based index `i`.
    pub fn laplace_eigenvalue(&self, i: usize) -> f64 {
        let w = self.alphas[i] / self.ell_axis;
        w * w
    }

    /// Normalized eigenfunction `u_n / ‖u_n‖` for zero-based index `i`.
    pub fn eval(&self, i: usize, x: f64) -> f64 {
        let (a, b, omega) = self.coefficients(i);
        a * (omega * x).cos() + b * (omega * x).sin()
    }

    /// `(a, b, ω)` with normalized mode `a cos(ωx) + b sin(ωx)`.
    pub fn coefficients(&self, i: usize) -> (f64, f64, f64) {
        let alpha = self.alphas[i];
        let big_h = self.h * self.ell_axis;
        let inv_norm = 1.0 / self.norms[i].sqrt();
        (alpha / big_h * inv_norm, inv_norm, alpha / self.ell_axis)
    }

    /// `sin(α - 2·atan(H/α))`, the eigenvalue equation divided by `α² + H²`,
    /// evaluated with the bracket offset removed so large `α` keep full
    /// precision.
    pub fn residual(&self, i: usize) -> f64 {
        let big_h = self.h * self.ell_axis;
        let base = i as f64 * PI;
        reduced_equation(self.offsets[i], base, big_h).sin()
    }

    /// Direct quadrature of `∫_0^ℓ u_n²` for zero-based index `i`.
    pub fn norm_by_quadrature(&self, i: usize) -> Result<f64> {
        quadrature_norm(self.alphas[i], self.h, self.ell_axis)
    }
}

/// `θ - 2·atan(H/α)` with `α = base + θ`; increasing in `θ`.
fn reduced_equation(theta: f64, base: f64, big_h: f64) -> f64 {
    theta - 2.0 * (big_h / (base + theta)).atan()
}

/// Footnote closed form `(α² + 2hℓ + h²ℓ²) / (2h²ℓ)`.
fn closed_form_norm(alpha: f64, h: f64, ell: f64) -> f64 {
    let big_h = h * ell;
    (alpha * alpha + 2.0 * big_h + big_h * big_h) / (2.0 * h * h * ell)
}

fn quadrature_norm(alpha: f64, h: f64, ell: f64) -> Result<f64> {
    let a = alpha / (h * ell);
    let omega = alpha / ell;
    let u2 = |x: f64| {
        let u = a * (omega * x).cos() + (omega * x).sin();
        u * u
    };
    // One panel per half oscillation keeps GK15 in its comfort zone.
    let panels = (alpha / PI).ceil().max(1.0) as usize * 2;
    let width = ell / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = p as f64 * width;
        total += quad::integrate(u2, lo, lo + width, 0.0, 1e-13, 200)?.value;
    }
    Ok(total)
}

/// Offset `θ` of the root `(n-1)π + θ` for zero-based `i = n - 1`.
fn find_root(i: usize, big_h: f64) -> Result<f64> {
    let base = i as f64 * PI;
    let g = |theta: f64| reduced_equation(theta, base, big_h);
    let (mut lo, mut hi) = (0.0f64, PI);
    // g(0+) < 0 and g(π) > 0; the n = 1 left end is the limit -π.
    if !(g(hi) > 0.0) {
        return Err(Error::Numerical {
            context: "robin_eigen_1d",
            detail: format!("no sign change on ({}π, {}π) for H = {big_h}", i, i + 1),
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    // Secant polish inside the final bracket.
    let mut theta = if g(lo).abs() < g(hi).abs() { lo } else { hi };
    let (mut a, mut b) = (lo, hi);
    let (mut ga, mut gb) = (g(a), g(b));
    for _ in 0..4 {
        if gb == ga {
            break;
        }
        let c = b - gb * (b - a) / (gb - ga);
        if !(c >= lo && c <= hi) {
            break;
        }
        let gc = g(c);
        if gc.abs() < g(theta).abs() {
            theta = c;
        }
        (a, ga, b, gb) = (b, gb, c, gc);
    }
    if !(theta > 0.0 && theta < PI) {
        return Err(Error::Numerical {
            context: "robin_eigen_1d",
            detail: format!("root left the bracket ({}π, {}π) for H = {big_h}", i, i + 1),
        });
    }
    Ok(theta)
}

/// First `count` Robin eigenpairs of `-d²/dx²` on `(0, ell_axis)` with
/// `u'·n + h u = 0` at both ends.
///
/// Norms use the closed form; the first few are re-derived by quadrature and
/// the quadrature value replaces the closed form if they ever disagree.
pub fn robin_eigen_1d(h: f64, ell_axis: f64, count: usize) -> Result<RobinEigen1D> {
    if !(h > 0.0) || !h.is_finite() {
        return domain(format!("Robin coefficient must be finite and positive, got {h}"));
    }
    if !(ell_axis > 0.0) || !ell_axis.is_finite() {
        return domain(format!("interval length must be finite and positive, got {ell_axis}"));
    }
    if count == 0 {
        return domain("robin_eigen_1d needs count >= 1".to_string());
    }
    let big_h = h * ell_axis;
    let mut alphas = Vec::with_capacity(count);
    let mut offsets = Vec::with_capacity(count);
    let mut norms = Vec::with_capacity(count);
    for i in 0..count {
        let theta = find_root(i, big_h)?;
        let alpha = i as f64 * PI + theta;
        let mut norm = closed_form_norm(alpha, h, ell_axis);
        if i < NORM_CHECK_MODES {
            let by_quad = quadrature_norm(alpha, h, ell_axis)?;
            if ((by_quad - norm) / by_quad).abs() > NORM_TOL {
                log::warn!(
                    "Robin norm mismatch for n = {}: closed form {norm:e}, quadrature {by_quad:e}",
                    i + 1
                );
                norm = by_quad;
            }
        }
        alphas.push(alpha);
        offsets.push(theta);
        norms.push(norm);
    }
    Ok(RobinEigen1D { h, ell_axis, alphas, offsets, norms })
}
