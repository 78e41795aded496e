//! Eigenpairs of `I - κ⁻²Δ` on a box and the truncated spectral covariance
//! `η² Σ λ_k^(-α) w_k(x) w_k(y)`.
//!
//! Every one-dimensional factor is of the form `a cos(ωx) + b sin(ωx)` and
//! contributes `ω²/κ²` to `λ_k - 1`, which is what lets all four boundary
//! conditions share one evaluation engine.

mod robin;

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{domain, Result};
use crate::matern::MaternParams;
use crate::sum::Neumaier;

pub use robin::{robin_eigen_1d, RobinEigen1D};

/// Window `D = [δ/2, δ/2 + ℓ]^d` inside the extended box `D_ext = Π (0, L_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    delta: f64,
    ell: f64,
    lengths: Vec<f64>,
}

impl BoxDomain {
    /// Cubic box with `L = δ + ℓ` on every axis.
    pub fn cubic(delta: f64, ell: f64, d: usize) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return domain(format!("dimension must be 1, 2 or 3, got {d}"));
        }
        Self::rectangular(delta, ell, vec![delta + ell; d])
    }

    /// Box with per-axis lengths; each must leave a margin of at least
    /// `δ/2` on both sides of the window.
    pub fn rectangular(delta: f64, ell: f64, lengths: Vec<f64>) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return domain(format!("delta must be finite and non-negative, got {delta}"));
        }
        if !(ell > 0.0) || !ell.is_finite() {
            return domain(format!("ell must be finite and positive, got {ell}"));
        }
        if !(1..=3).contains(&lengths.len()) {
            return domain(format!("dimension must be 1, 2 or 3, got {}", lengths.len()));
        }
        if let Some(l) = lengths.iter().find(|&&l| !(l >= delta + ell) || !l.is_finite()) {
            return domain(format!("axis length {l} does not contain the window (needs >= {})", delta + ell));
        }
        Ok(Self { delta, ell, lengths })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn ell(&self) -> f64 {
        self.ell
    }
    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }
    pub fn d(&self) -> usize {
        self.lengths.len()
    }
    pub fn min_length(&self) -> f64 {
        self.lengths.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Same window, every axis length doubled (the reflection period).
    pub fn doubled(&self) -> Self {
        Self {
            delta: self.delta,
            ell: self.ell,
            lengths: self.lengths.iter().map(|l| 2.0 * l).collect(),
        }
    }

    /// `n` equispaced points of `[δ/2, δ/2 + ℓ]`, endpoints included.
    pub fn window_axis(&self, n: usize) -> Result<Vec<f64>> {
        if n < 2 {
            return domain(format!("window grids need at least 2 points per axis, got {n}"));
        }
        let lo = 0.5 * self.delta;
        // Keep the far end at least δ/2 from every wall; `wall - hi` is exact.
        let wall = self.min_length();
        let mut hi = lo + self.ell;
        while wall - hi < lo {
            hi = hi.next_down();
        }
        let step = self.ell / (n - 1) as f64;
        Ok((0..n).map(|i| if i == n - 1 { hi } else { (lo + step * i as f64).min(hi) }).collect())
    }

    /// Tensor grid of the window with `n` points per axis; the last axis
    /// varies fastest.
    pub fn window_grid(&self, n: usize) -> Result<Vec<Vec<f64>>> {
        let axis = self.window_axis(n)?;
        let d = self.d();
        let total = n.pow(d as u32);
        Ok((0..total)
            .map(|mut flat| {
                let mut p = vec![0.0; d];
                for slot in p.iter_mut().rev() {
                    *slot = axis[flat % n];
                    flat /= n;
                }
                p
            })
            .collect())
    }

    /// Whether `x` lies in the closure of `D_ext`.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.d()
            && x.iter().zip(&self.lengths).all(|(&xi, &l)| xi >= -1e-12 * l && xi <= l * (1.0 + 1e-12))
    }

    pub(crate) fn check_point(&self, x: &[f64]) -> Result<()> {
        if !self.contains(x) {
            return domain(format!("point {x:?} is not in the closure of the box {:?}", self.lengths));
        }
        Ok(())
    }
}

/// Artificial boundary condition on `∂D_ext`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundarySpec {
    Dirichlet,
    Neumann,
    Periodic,
    /// `∇u·n + beta·u = 0`.
    Robin { beta: f64 },
}

impl BoundarySpec {
    pub fn robin(beta: f64) -> Result<Self> {
        let bc = BoundarySpec::Robin { beta };
        bc.validate()?;
        Ok(bc)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BoundarySpec::Robin { beta } if !(beta > 0.0) || !beta.is_finite() => {
                domain(format!("Robin coefficient must be finite and positive, got {beta}"))
            }
            _ => Ok(()),
        }
    }

    /// One-letter tag used in tables: `D`, `N`, `P` or `R`.
    pub fn tag(&self) -> &'static str {
        match self {
            BoundarySpec::Dirichlet => "D",
            BoundarySpec::Neumann => "N",
            BoundarySpec::Periodic => "P",
            BoundarySpec::Robin { .. } => "R",
        }
    }
}

/// Per-axis truncation of the eigen-expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationSpec {
    /// Resolution `h`; the per-axis cap is `⌈L/h⌉ + 1`.
    Resolution(f64),
    /// Fixed per-axis index cap.
    IndexCap(usize),
}

impl TruncationSpec {
    pub fn kmax(&self, length: f64) -> Result<usize> {
        match *self {
            TruncationSpec::Resolution(h) => {
                if !(h > 0.0) || !h.is_finite() {
                    return domain(format!("truncation resolution must be positive, got {h}"));
                }
                let k = (length / h).ceil() + 1.0;
                if k > 1e8 {
                    return domain(format!("resolution {h} asks for {k:e} modes per axis"));
                }
                Ok(k as usize)
            }
            TruncationSpec::IndexCap(k) => Ok(k),
        }
    }
}

/// One-dimensional normalized factor `a cos(ωx) + b sin(ωx)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisMode {
    pub a: f64,
    pub b: f64,
    pub omega: f64,
}

impl AxisMode {
    pub fn eval(&self, x: f64) -> f64 {
        let (s, c) = (self.omega * x).sin_cos();
        self.a * c + self.b * s
    }
}

fn dirichlet_mode(k: u64, length: f64) -> AxisMode {
    AxisMode { a: 0.0, b: (2.0 / length).sqrt(), omega: PI * k as f64 / length }
}

fn neumann_mode(k: u64, length: f64) -> AxisMode {
    let amp = if k == 0 { (1.0 / length).sqrt() } else { (2.0 / length).sqrt() };
    AxisMode { a: amp, b: 0.0, omega: PI * k as f64 / length }
}

/// `k > 0` is the cosine, `k < 0` the sine partner of `e^(2πikx/L)`.
fn periodic_mode(k: i64, length: f64) -> AxisMode {
    let omega = 2.0 * PI * k.unsigned_abs() as f64 / length;
    match k.signum() {
        0 => AxisMode { a: (1.0 / length).sqrt(), b: 0.0, omega },
        1 => AxisMode { a: (2.0 / length).sqrt(), b: 0.0, omega },
        _ => AxisMode { a: 0.0, b: (2.0 / length).sqrt(), omega },
    }
}

/// All modes of one axis with index up to `kmax`, ascending in `ω`.
pub fn axis_modes(bc: BoundarySpec, length: f64, kmax: usize) -> Result<Vec<AxisMode>> {
    bc.validate()?;
    let kmax64 = kmax as u64;
    Ok(match bc {
        BoundarySpec::Dirichlet => (1..=kmax64).map(|k| dirichlet_mode(k, length)).collect(),
        BoundarySpec::Neumann => (0..=kmax64).map(|k| neumann_mode(k, length)).collect(),
        BoundarySpec::Periodic => {
            let mut v = vec![periodic_mode(0, length)];
            for k in 1..=kmax as i64 {
                v.push(periodic_mode(k, length));
                v.push(periodic_mode(-k, length));
            }
            v
        }
        BoundarySpec::Robin { beta } => {
            if kmax == 0 {
                return Ok(Vec::new());
            }
            let eig = robin_eigen_1d(beta, length, kmax)?;
            (0..kmax)
                .map(|i| {
                    let (a, b, omega) = eig.coefficients(i);
                    AxisMode { a, b, omega }
                })
                .collect()
        }
    })
}

/// A single eigenpair `(λ_k, w_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub lambda: f64,
    pub factors: Vec<AxisMode>,
}

impl Eigenpair {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.factors.iter().zip(x).map(|(m, &xi)| m.eval(xi)).product()
    }
}

/// Eigenpair for the multi-index `k`.
///
/// Index sets: Dirichlet `k_i >= 1`, Neumann `k_i >= 0`, periodic any
/// integer (negative picks the sine partner), Robin `n_i >= 1`.
pub fn eigenpair(bc: BoundarySpec, k: &[i64], bx: &BoxDomain, kappa: f64) -> Result<Eigenpair> {
    bc.validate()?;
    if k.len() != bx.d() {
        return domain(format!("multi-index has {} entries, box has dimension {}", k.len(), bx.d()));
    }
    if !(kappa > 0.0) {
        return domain(format!("kappa must be positive, got {kappa}"));
    }
    let mut factors = Vec::with_capacity(k.len());
    for (&ki, &l) in k.iter().zip(bx.lengths()) {
        let mode = match bc {
            BoundarySpec::Dirichlet if ki >= 1 => dirichlet_mode(ki as u64, l),
            BoundarySpec::Neumann if ki >= 0 => neumann_mode(ki as u64, l),
            BoundarySpec::Periodic => periodic_mode(ki, l),
            BoundarySpec::Robin { beta } if ki >= 1 => {
                let eig = robin_eigen_1d(beta, l, ki as usize)?;
                let (a, b, omega) = eig.coefficients(ki as usize - 1);
                AxisMode { a, b, omega }
            }
            _ => return domain(format!("index {ki} is not valid for {bc:?} conditions")),
        };
        factors.push(mode);
    }
    let s: f64 = factors.iter().map(|m| m.omega * m.omega).sum();
    Ok(Eigenpair { lambda: 1.0 + s / (kappa * kappa), factors })
}

/// A truncated spectral covariance value and the certified bound on the
/// discarded tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralValue {
    pub value: f64,
    pub tail_bound: f64,
}

/// Modes of one axis grouped by eigenvalue (periodic cosine/sine partners
/// share one group).
#[derive(Debug, Clone)]
struct AxisBasis {
    modes: Vec<AxisMode>,
    /// `(start, end, ω²)` ranges into `modes`.
    groups: Vec<(usize, usize, f64)>,
}

impl AxisBasis {
    fn new(modes: Vec<AxisMode>) -> Self {
        let mut groups = Vec::new();
        let mut start = 0;
        for i in 1..=modes.len() {
            if i == modes.len() || modes[i].omega != modes[start].omega {
                let w = modes[start].omega;
                groups.push((start, i, w * w));
                start = i;
            }
        }
        Self { modes, groups }
    }
}

/// Coordinates of one axis, deduplicated, plus deduplicated coordinate pairs.
struct AxisPairs {
    coords: Vec<f64>,
    pairs: Vec<(usize, usize)>,
    pair_of: Vec<usize>,
}

impl AxisPairs {
    fn new(axis: usize, pairs: &[(&[f64], &[f64])]) -> Self {
        let mut coords: Vec<f64> = pairs.iter().flat_map(|(x, y)| [x[axis], y[axis]]).collect();
        coords.sort_by(f64::total_cmp);
        coords.dedup();
        let index = |v: f64| coords.binary_search_by(|c| c.total_cmp(&v)).expect("coordinate present");
        let mut seen = HashMap::new();
        let mut unique = Vec::new();
        let pair_of = pairs
            .iter()
            .map(|(x, y)| {
                let (i, j) = (index(x[axis]), index(y[axis]));
                let key = (i.min(j), i.max(j));
                *seen.entry(key).or_insert_with(|| {
                    unique.push(key);
                    unique.len() - 1
                })
            })
            .collect();
        Self { coords, pairs: unique, pair_of }
    }

    /// `B[g][q] = Σ_{m ∈ g} φ_m(x_q) φ_m(y_q)`, row-major by group.
    fn products(&self, basis: &AxisBasis) -> Vec<f64> {
        let nq = self.pairs.len();
        let mut out = vec![0.0; basis.groups.len() * nq];
        let mut vals = vec![0.0; self.coords.len()];
        for (g, &(s, e, _)) in basis.groups.iter().enumerate() {
            let row = &mut out[g * nq..(g + 1) * nq];
            for m in &basis.modes[s..e] {
                for (v, &c) in vals.iter_mut().zip(&self.coords) {
                    *v = m.eval(c);
                }
                for (r, &(i, j)) in row.iter_mut().zip(&self.pairs) {
                    *r += vals[i] * vals[j];
                }
            }
        }
        out
    }
}

/// Truncated spectral covariance with its tables prepared once.
#[derive(Debug, Clone)]
pub struct SpectralCovariance {
    bc: BoundarySpec,
    domain: BoxDomain,
    eta2: f64,
    alpha: f64,
    inv_kappa2: f64,
    kmax: Vec<usize>,
    axes: Vec<AxisBasis>,
    tail_bound: f64,
}

impl SpectralCovariance {
    pub fn new(
        params: &MaternParams,
        bc: BoundarySpec,
        bx: &BoxDomain,
        trunc: TruncationSpec,
    ) -> Result<Self> {
        bc.validate()?;
        if params.d() != bx.d() {
            return domain(format!("parameters are {}-d but the box is {}-d", params.d(), bx.d()));
        }
        let kmax = bx.lengths().iter().map(|&l| trunc.kmax(l)).collect::<Result<Vec<_>>>()?;
        let axes = bx
            .lengths()
            .iter()
            .zip(&kmax)
            .map(|(&l, &k)| axis_modes(bc, l, k).map(AxisBasis::new))
            .collect::<Result<Vec<_>>>()?;
        if axes.iter().any(|a| a.modes.is_empty()) {
            return domain(format!("truncation {trunc:?} leaves no {bc:?} modes"));
        }
        let tail_bound = spectral_tail_bound(params, bc, bx, &kmax);
        let kappa = params.kappa();
        Ok(Self {
            bc,
            domain: bx.clone(),
            eta2: params.eta2(),
            alpha: params.alpha(),
            inv_kappa2: 1.0 / (kappa * kappa),
            kmax,
            axes,
            tail_bound,
        })
    }

    pub fn bc(&self) -> BoundarySpec {
        self.bc
    }
    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }
    /// Per-axis index caps in use.
    pub fn kmax(&self) -> &[usize] {
        &self.kmax
    }
    /// Certified bound on `|omitted terms|` for any pair of points.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }
    pub fn mode_count(&self) -> usize {
        self.axes.iter().map(|a| a.modes.len()).product()
    }
    /// One-dimensional modes of axis `i`, ascending in `ω`.
    pub fn axis_modes(&self, i: usize) -> &[AxisMode] {
        &self.axes[i].modes
    }

    /// `η² λ^(-α)` for `λ = 1 + s/κ²`.
    pub fn weight(&self, s: f64) -> f64 {
        self.eta2 * (-self.alpha * (s * self.inv_kappa2).ln_1p()).exp()
    }

    pub fn cov(&self, x: &[f64], y: &[f64]) -> Result<SpectralValue> {
        let value = self.cov_pairs(&[(x, y)])?[0];
        Ok(SpectralValue { value, tail_bound: self.tail_bound })
    }

    /// Values for many point pairs, sharing per-axis tables.
    pub fn cov_pairs(&self, pairs: &[(&[f64], &[f64])]) -> Result<Vec<f64>> {
        for (x, y) in pairs {
            self.domain.check_point(x)?;
            self.domain.check_point(y)?;
        }
        if pairs.is_empty() {
            return Ok(Vec::new());
        }
        let axes: Vec<AxisPairs> = (0..self.domain.d()).map(|i| AxisPairs::new(i, pairs)).collect();
        let acc = if axes.len() == 1 { self.sum_1d(&axes[0]) } else { self.sum_nd(&axes) };
        Ok(acc)
    }

    /// Gram matrix over `points`.
    pub fn cov_matrix(&self, points: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        let n = points.len();
        let mut pairs = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                pairs.push((points[i].as_slice(), points[j].as_slice()));
            }
        }
        let vals = self.cov_pairs(&pairs)?;
        let mut m = DMatrix::zeros(n, n);
        let mut it = vals.into_iter();
        for i in 0..n {
            for j in i..n {
                let v = it.next().expect("one value per pair");
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(m)
    }

    fn sum_1d(&self, ax: &AxisPairs) -> Vec<f64> {
        let basis = &self.axes[0];
        let nq = ax.pairs.len();
        let mut acc = vec![Neumaier::new(); nq];
        let mut vals = vec![0.0; ax.coords.len()];
        let mut prod = vec![0.0; nq];
        for &(s, e, w2) in &basis.groups {
            prod.iter_mut().for_each(|p| *p = 0.0);
            for m in &basis.modes[s..e] {
                for (v, &c) in vals.iter_mut().zip(&ax.coords) {
                    *v = m.eval(c);
                }
                for (p, &(i, j)) in prod.iter_mut().zip(&ax.pairs) {
                    *p += vals[i] * vals[j];
                }
            }
            let w = self.weight(w2);
            for (a, p) in acc.iter_mut().zip(&prod) {
                a.add(w * p);
            }
        }
        ax.pair_of.iter().map(|&q| acc[q].total()).collect()
    }

    fn sum_nd(&self, axes: &[AxisPairs]) -> Vec<f64> {
        let d = axes.len();
        let tables: Vec<Vec<f64>> = axes.iter().zip(&self.axes).map(|(ax, b)| ax.products(b)).collect();
        let last = d - 1;
        let last_basis = &self.axes[last];
        let nq_last = axes[last].pairs.len();
        let n_pairs = axes[0].pair_of.len();
        let mut acc = vec![Neumaier::new(); n_pairs];
        let mut inner = vec![0.0; nq_last];
        let mut prefix = vec![0.0; n_pairs];
        let mut idx = vec![0usize; last];
        'outer: loop {
            let s_outer: f64 = idx.iter().zip(&self.axes).map(|(&g, b)| b.groups[g].2).sum();
            inner.iter_mut().for_each(|v| *v = 0.0);
            for (g, &(_, _, w2)) in last_basis.groups.iter().enumerate() {
                let w = self.weight(s_outer + w2);
                if w == 0.0 {
                    break;
                }
                let row = &tables[last][g * nq_last..(g + 1) * nq_last];
                for (t, r) in inner.iter_mut().zip(row) {
                    *t += w * r;
                }
            }
            prefix.iter_mut().for_each(|p| *p = 1.0);
            for (i, &g) in idx.iter().enumerate() {
                let nq = axes[i].pairs.len();
                let row = &tables[i][g * nq..(g + 1) * nq];
                for (p, &q) in prefix.iter_mut().zip(&axes[i].pair_of) {
                    *p *= row[q];
                }
            }
            for ((a, p), &q) in acc.iter_mut().zip(&prefix).zip(&axes[last].pair_of) {
                a.add(p * inner[q]);
            }
            // Odometer over the outer axes, last outer axis fastest.
            for i in (0..last).rev() {
                idx[i] += 1;
                if idx[i] < self.axes[i].groups.len() {
                    continue 'outer;
                }
                idx[i] = 0;
            }
            break;
        }
        acc.iter().map(Neumaier::total).collect()
    }
}

/// Truncated spectral covariance at a single pair of points.
pub fn cov_spectral(
    params: &MaternParams,
    bc: BoundarySpec,
    bx: &BoxDomain,
    x: &[f64],
    y: &[f64],
    trunc: TruncationSpec,
) -> Result<SpectralValue> {
    SpectralCovariance::new(params, bc, bx, trunc)?.cov(x, y)
}

/// Bound on `η² Σ_{k omitted} λ_k^(-α) sup|w_k|²`.
///
/// Each omitted index is mapped into `ℕ₀^d` with `‖j‖_∞ > K` and
/// `λ >= 1 + c‖j‖²`; the lattice sum is dominated by the radial integral
/// over the positive orthant shifted by the cell diagonal `√d`.
pub(crate) fn spectral_tail_bound(
    params: &MaternParams,
    bc: BoundarySpec,
    bx: &BoxDomain,
    kmax: &[usize],
) -> f64 {
    let d = bx.d();
    let kappa = params.kappa();
    let (freq, mult, shift) = match bc {
        BoundarySpec::Periodic => (2.0 * PI, (1u32 << d) as f64, 0.0),
        BoundarySpec::Robin { .. } => (PI, 1.0, 1.0),
        _ => (PI, 1.0, 0.0),
    };
    let c = bx
        .lengths()
        .iter()
        .map(|&l| (freq / (kappa * l)).powi(2))
        .fold(f64::INFINITY, f64::min);
    let k_eff = kmax.iter().copied().min().unwrap_or(0) as f64 - shift;
    let sup_w2: f64 = bx.lengths().iter().map(|l| 2.0 / l).product();
    let orthant = match d {
        1 => 1.0,
        _ => PI / 2.0,
    };
    let integral = shifted_radial_integral(d, k_eff + 1.0 - (d as f64).sqrt(), c, params.alpha());
    params.eta2() * sup_w2 * mult * orthant * integral
}

/// `∫_a^∞ (s + √d)^(d-1) g(max(s, 0)) ds` with `g(s) = (1 + c s²)^(-α)`,
/// bounded above using `g <= 1` below `1/√c` and `g <= (c s²)^(-α)` beyond.
fn shifted_radial_integral(d: usize, a: f64, c: f64, alpha: f64) -> f64 {
    let rd = (d as f64).sqrt();
    let df = d as f64;
    let mut total = 0.0;
    if a < 0.0 {
        total += (rd.powi(d as i32) - (a + rd).max(0.0).powi(d as i32)) / df;
    }
    let a0 = a.max(0.0);
    let b = a0.max(1.0 / c.sqrt());
    total += ((b + rd).powi(d as i32) - (a0 + rd).powi(d as i32)) / df;
    let ln_b = b.ln();
    let ln_c = c.ln();
    let mut binom = 1.0;
    for m in 0..d {
        if m > 0 {
            binom *= (d - m) as f64 / m as f64;
        }
        let expo = m as f64 + 1.0 - 2.0 * alpha;
        let coeff = binom * rd.powi((d - 1 - m) as i32);
        total += coeff * (-alpha * ln_c + expo * ln_b - (-expo).ln()).exp();
    }
    total
}
