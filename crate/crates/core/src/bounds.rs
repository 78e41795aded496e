//! A-priori error bounds for the window technique and the series identities
//! behind them.
//!
//! Every infinite lattice sum here is split into an explicit partial sum and
//! a certified remainder. The remainder uses `M_ν(a + b) <= M_ν(a)·f(b)`
//! with `f = M_max(ν,1/2)`, which turns each tail into a polynomial times a
//! geometric series and is summed in closed form via Eulerian numbers.

use crate::error::{domain, Result};
use crate::matern::{f_func, AnisoMetric, MaternParams, UnitMatern};
use crate::spectral::BoxDomain;
use crate::sum::sum_descending;

/// Eulerian number `A(n, k)`: permutations of `n` items with `k` ascents.
pub fn eulerian(n: u32, k: u32) -> Result<u64> {
    if n == 0 {
        return if k == 0 { Ok(1) } else { domain(format!("A(0, {k}) is undefined")) };
    }
    if k >= n {
        return domain(format!("Eulerian A({n}, {k}) needs k <= n - 1"));
    }
    if n > 20 {
        return domain(format!("Eulerian numbers beyond n = 20 overflow u64 (n = {n})"));
    }
    // A(n, k) = (k + 1) A(n-1, k) + (n - k) A(n-1, k-1)
    let mut row = vec![1u64];
    for m in 2..=n as u64 {
        let mut next = vec![0u64; m as usize];
        for (j, slot) in next.iter_mut().enumerate() {
            let j64 = j as u64;
            let keep = if j < row.len() { (j64 + 1) * row[j] } else { 0 };
            let bump = if j > 0 { (m - j64) * row[j - 1] } else { 0 };
            *slot = keep + bump;
        }
        row = next;
    }
    Ok(row[k as usize])
}

/// `Σ_{k=1}^{terms} z^k / k^s`.
pub fn polylog_partial(s: f64, z: f64, terms: usize) -> Result<f64> {
    check_unit_disk(z)?;
    let mut acc = crate::sum::Neumaier::new();
    let mut zk = 1.0;
    for k in 1..=terms {
        zk *= z;
        acc.add(zk / (k as f64).powf(s));
    }
    Ok(acc.total())
}

/// `Li_{-p}(z) = z Σ_k A(p, k) z^k / (1 - z)^(p+1)` for `p >= 1`, and
/// `z / (1 - z)` for `p = 0`.
pub fn polylog_neg_int(p: u32, z: f64) -> Result<f64> {
    check_unit_disk(z)?;
    if p == 0 {
        return Ok(z / (1.0 - z));
    }
    let mut num = 0.0;
    for k in (0..p).rev() {
        num = num * z + eulerian(p, k)? as f64;
    }
    Ok(z * num / (1.0 - z).powi(p as i32 + 1))
}

/// Closed form of `Σ_{k>=1} k^(d-1) z^(k-1)`.
pub fn power_series_closed_form(d: u32, z: f64) -> Result<f64> {
    check_unit_disk(z)?;
    if d == 0 {
        return domain("power series needs d >= 1".to_string());
    }
    if d == 1 {
        return Ok(1.0 / (1.0 - z));
    }
    let mut num = 0.0;
    for j in (0..d - 1).rev() {
        num = num * z + eulerian(d - 1, j)? as f64;
    }
    Ok(num / (1.0 - z).powi(d as i32))
}

/// `(d-1)! / (1 - z)^d`, the bound used for the constant `A`.
pub fn power_series_bound(d: u32, z: f64) -> Result<f64> {
    check_unit_disk(z)?;
    let fact: f64 = (1..d).map(f64::from).product();
    Ok(fact / (1.0 - z).powi(d as i32))
}

fn check_unit_disk(z: f64) -> Result<()> {
    if !(z.abs() < 1.0) {
        return domain(format!("series argument must satisfy |z| < 1, got {z}"));
    }
    Ok(())
}

/// `Σ_{j>=0} j^p q^j`.
fn moment(p: u32, q: f64) -> f64 {
    if p == 0 {
        1.0 / (1.0 - q)
    } else {
        polylog_neg_int(p, q).expect("ratio below one")
    }
}

/// Which integer points a lattice sum runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Lattice {
    /// `ℤ^d`; shell `m` holds `(2m+1)^d - (2m-1)^d` points.
    Full,
    /// `ℕ₀^d`; shell `m` holds `(m+1)^d - m^d` points.
    Orthant,
}

impl Lattice {
    /// Coefficients (ascending powers of `m`) of the shell size.
    fn shell_poly(self, d: usize) -> Vec<f64> {
        let mut c = vec![0.0; d];
        let mut binom = 1.0;
        for j in 0..=d {
            if j > 0 {
                binom *= (d + 1 - j) as f64 / j as f64;
            }
            if j == d {
                break;
            }
            c[j] = match self {
                Lattice::Full if (d - j) % 2 == 1 => 2.0 * binom * 2f64.powi(j as i32),
                Lattice::Full => 0.0,
                Lattice::Orthant => binom,
            };
        }
        c
    }

    #[cfg(test)]
    fn shell_size(self, d: usize, m: u64) -> u64 {
        if m == 0 {
            return 1;
        }
        let d = d as u32;
        match self {
            Lattice::Full => (2 * m + 1).pow(d) - (2 * m - 1).pow(d),
            Lattice::Orthant => (m + 1).pow(d) - m.pow(d),
        }
    }
}

/// Certified bound on `Σ_{k ∈ lattice, ‖k‖_∞ > K} σ² M_ν(κ‖P.k‖)`.
pub(crate) fn lattice_tail(params: &MaternParams, periods: &[f64], radius: u64, lattice: Lattice) -> f64 {
    let d = periods.len();
    let p_min = periods.iter().copied().fold(f64::INFINITY, f64::min);
    let q = f_func(params.nu(), params.kappa(), p_min).expect("positive period");
    assert!(q < 1.0, "decay ratio f(P) = {q} must be below one");
    let m0 = (radius + 1) as f64;
    let lead = params.cov_at_distance(m0 * p_min);
    if lead == 0.0 {
        return 0.0;
    }
    // Σ_j N(m0 + j) q^j with N(m) = Σ_p c_p m^p, expanded in powers of j.
    let coeffs = lattice.shell_poly(d);
    let mut series = 0.0;
    for (p, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let mut binom = 1.0;
        for r in 0..=p {
            if r > 0 {
                binom *= (p + 1 - r) as f64 / r as f64;
            }
            series += c * binom * m0.powi((p - r) as i32) * moment(r as u32, q);
        }
    }
    lead * series
}

/// Partial sum of `C(‖P.k‖)` over `0 < ‖k‖_∞ <= K`, `k ∈ ℕ₀^d`, with its tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSum {
    pub radius: u64,
    pub value: f64,
    pub tail_bound: f64,
}

/// `Σ_{k ∈ ℕ₀^d \ {0}} C(‖L.k‖)` summed until the certified tail is below
/// `1e-14 σ²` (or relative `1e-14`).
pub fn orthant_lattice_sum(params: &MaternParams, bx: &BoxDomain) -> Result<LatticeSum> {
    if params.d() != bx.d() {
        return domain(format!("parameters are {}-d but the box is {}-d", params.d(), bx.d()));
    }
    let d = bx.d();
    let lengths = bx.lengths();
    let mut terms = Vec::new();
    let mut radius = 0u64;
    loop {
        radius += 1;
        // Shell ‖k‖_∞ = radius.
        let m = radius;
        let side = (m + 1) as usize;
        let mut k = vec![0u64; d];
        for flat in 0..side.pow(d as u32) {
            let mut rest = flat;
            for slot in k.iter_mut() {
                *slot = (rest % side) as u64;
                rest /= side;
            }
            if k.iter().copied().max() != Some(m) {
                continue;
            }
            let r2: f64 = k.iter().zip(lengths).map(|(&ki, &l)| (ki as f64 * l).powi(2)).sum();
            terms.push(params.cov_at_distance(r2.sqrt()));
        }
        let tail = lattice_tail(params, lengths, radius, Lattice::Orthant);
        let partial: f64 = terms.iter().sum();
        if tail <= 1e-14 * params.sigma2() || tail <= 1e-14 * partial || radius >= 2000 {
            let value = sum_descending(&mut terms);
            return Ok(LatticeSum { radius, value, tail_bound: tail });
        }
    }
}

/// Everything the window error analysis says about one `(δ, ℓ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub delta: f64,
    pub ell: f64,
    /// Lattice-sum bound, with the certified tail already added.
    pub corollary_bound: f64,
    /// Certified remainder included in `corollary_bound`.
    pub corollary_tail: f64,
    /// `A σ² M_ν(κδ)`.
    pub main_bound: f64,
    pub a_const: f64,
    pub f_ell: f64,
    pub dirichlet_bound: f64,
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return domain(format!("delta must be finite and non-negative, got {delta}"));
    }
    Ok(())
}

/// `(2^d - 1) C(δ) + 2^d Σ_{k ∈ ℕ₀^d \ {0}} C(‖L.k‖)`.
pub fn corollary_bound(params: &MaternParams, delta: f64, bx: &BoxDomain) -> Result<f64> {
    check_delta(delta)?;
    let s = orthant_lattice_sum(params, bx)?;
    let two_d = (1u32 << bx.d()) as f64;
    Ok((two_d - 1.0) * params.cov_at_distance(delta) + two_d * (s.value + s.tail_bound))
}

/// Dirichlet-only bound `2^(d-1) (C(δ) + Σ C(‖L.k‖))`.
pub fn dirichlet_bound(params: &MaternParams, delta: f64, bx: &BoxDomain) -> Result<f64> {
    check_delta(delta)?;
    let s = orthant_lattice_sum(params, bx)?;
    let half = (1u32 << (bx.d() - 1)) as f64;
    Ok(half * (params.cov_at_distance(delta) + s.value + s.tail_bound))
}

/// `A = (2^d - 1)(1 + 2^d d! f/(1 - f)^d)`.
pub fn a_constant(d: usize, f_ell: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&f_ell) {
        return domain(format!("f(ell) must lie in [0, 1), got {f_ell}"));
    }
    let two_d = (1u32 << d) as f64;
    let fact: f64 = (1..=d).map(|i| i as f64).product();
    Ok((two_d - 1.0) * (1.0 + two_d * fact * f_ell / (1.0 - f_ell).powi(d as i32)))
}

/// Closed-form bound `A σ² M_ν(κδ)` for the cubic box `L = δ + ℓ`, together
/// with the lattice-sum bounds for the same box.
pub fn main_bound(params: &MaternParams, delta: f64, ell: f64) -> Result<BoundReport> {
    check_delta(delta)?;
    if !(ell > 0.0) || !ell.is_finite() {
        return domain(format!("ell must be finite and positive, got {ell}"));
    }
    let d = params.d();
    let f_ell = f_func(params.nu(), params.kappa(), ell)?;
    if f_ell >= 1.0 {
        return domain(format!("f(ell) = {f_ell} is not below one"));
    }
    let a_const = a_constant(d, f_ell)?;
    let bx = BoxDomain::cubic(delta, ell, d)?;
    let s = orthant_lattice_sum(params, &bx)?;
    let c_delta = params.cov_at_distance(delta);
    let two_d = (1u32 << d) as f64;
    Ok(BoundReport {
        delta,
        ell,
        corollary_bound: (two_d - 1.0) * c_delta + two_d * (s.value + s.tail_bound),
        corollary_tail: two_d * s.tail_bound,
        main_bound: a_const * c_delta,
        a_const,
        f_ell,
        dirichlet_bound: 0.5 * two_d * (c_delta + s.value + s.tail_bound),
    })
}

/// Main bound for the anisotropic kernel, with `κ` taken from the largest
/// principal length `ρ_max`.
pub fn aniso_bound(
    sigma2: f64,
    nu: f64,
    metric: &AnisoMetric,
    delta: f64,
    ell: f64,
    d: usize,
) -> Result<f64> {
    if metric.dim() != d {
        return domain(format!("metric is {}-d but d = {d}", metric.dim()));
    }
    check_delta(delta)?;
    let rho_max = metric.rho_max();
    let kappa = (2.0 * nu).sqrt() / rho_max;
    let f_ell = f_func(nu, kappa, ell)?;
    let a = a_constant(d, f_ell)?;
    Ok(a * sigma2 * UnitMatern::new(nu)?.eval(kappa * delta))
}
