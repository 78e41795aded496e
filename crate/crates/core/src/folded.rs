//! Folded covariances as lattice image sums.
//!
//! Periodic conditions fold the kernel over the lattice `L ℤ^d`; Neumann and
//! Dirichlet fold it over `2L ℤ^d` after reflecting `y` through every
//! coordinate hyperplane, with the reflection parity as sign for Dirichlet.

use crate::bounds::{lattice_tail, Lattice};
use crate::error::{domain, Result};
use crate::matern::MaternParams;
use crate::spectral::{BoundarySpec, BoxDomain};
use crate::sum::{sum_descending, Neumaier};

/// A truncated image sum and a certified bound on everything it omits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageSum {
    /// Images with `‖k‖_∞ <= radius` are included.
    pub radius: u64,
    pub value: f64,
    pub tail_bound: f64,
}

/// A reflection `ε ∈ {-1, +1}^d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignVector {
    eps: Vec<i8>,
}

impl SignVector {
    pub fn new(eps: Vec<i8>) -> Result<Self> {
        if eps.iter().any(|e| *e != 1 && *e != -1) {
            return domain(format!("sign vector entries must be ±1, got {eps:?}"));
        }
        Ok(Self { eps })
    }

    /// All `2^d` sign vectors; the identity comes first.
    pub fn all(d: usize) -> Vec<SignVector> {
        (0..1u32 << d)
            .map(|mask| SignVector {
                eps: (0..d).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect(),
            })
            .collect()
    }

    pub fn eps(&self) -> &[i8] {
        &self.eps
    }

    pub fn parity(&self) -> i8 {
        self.eps.iter().product()
    }

    pub fn is_identity(&self) -> bool {
        self.eps.iter().all(|e| *e == 1)
    }

    /// `ε.y`.
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.eps).map(|(v, &e)| f64::from(e) * v).collect()
    }
}

/// Certified bound on the `‖k‖_∞ <= K` truncation of the image lattice
/// `Σ_k C(‖P.k‖)` over `k ∈ ℤ^d` (no offset).
pub fn image_tail_bound(params: &MaternParams, bx: &BoxDomain, radius: u64) -> Result<f64> {
    if radius == 0 {
        return domain("image_tail_bound needs radius >= 1".to_string());
    }
    check_dims(params, bx)?;
    Ok(lattice_tail(params, bx.lengths(), radius, Lattice::Full))
}

/// Tail of one image family `Σ_k C(z + P.k)` with `|z_i| <= P_i`.
///
/// Omitted images satisfy `|z_i + P_i k_i| >= P_i (|k_i| - 1)_+`; the map
/// `k_i -> (|k_i| - 1)_+` is at most 3-to-1 onto 0 and 2-to-1 elsewhere,
/// which costs a factor `3^(d-1)` against the plain lattice tail.
fn offset_tail(params: &MaternParams, periods: &[f64], radius: u64) -> f64 {
    let d = periods.len() as i32;
    if radius == 0 {
        let whole = params.sigma2() + lattice_tail(params, periods, 0, Lattice::Full);
        return 3f64.powi(d) * whole;
    }
    3f64.powi(d - 1) * lattice_tail(params, periods, radius - 1, Lattice::Full)
}

/// Certified tail of the image sum for `bc` at `radius`.
pub fn folded_tail_bound(params: &MaternParams, bc: BoundarySpec, bx: &BoxDomain, radius: u64) -> Result<f64> {
    check_dims(params, bx)?;
    match bc {
        BoundarySpec::Periodic => Ok(offset_tail(params, bx.lengths(), radius)),
        BoundarySpec::Neumann | BoundarySpec::Dirichlet => {
            let doubled = bx.doubled();
            Ok((1u32 << bx.d()) as f64 * offset_tail(params, doubled.lengths(), radius))
        }
        BoundarySpec::Robin { .. } => domain("Robin conditions have no image-sum form".to_string()),
    }
}

/// Smallest radius whose certified tail is at most `1e-8 σ²`.
pub fn default_radius(params: &MaternParams, bc: BoundarySpec, bx: &BoxDomain) -> Result<u64> {
    radius_for(params, bc, bx, 1e-8 * params.sigma2())
}

/// Smallest radius whose certified tail is at most `target`.
pub fn radius_for(params: &MaternParams, bc: BoundarySpec, bx: &BoxDomain, target: f64) -> Result<u64> {
    for radius in 0..=10_000 {
        if folded_tail_bound(params, bc, bx, radius)? <= target {
            return Ok(radius);
        }
    }
    domain(format!("no image radius up to 10000 reaches tail {target:e}"))
}

fn check_dims(params: &MaternParams, bx: &BoxDomain) -> Result<()> {
    if params.d() != bx.d() {
        return domain(format!("parameters are {}-d but the box is {}-d", params.d(), bx.d()));
    }
    Ok(())
}

/// The periodic tail certificate only needs `|x_i - y_i| <= L_i`.
fn check_offsets(params: &MaternParams, bx: &BoxDomain, x: &[f64], y: &[f64]) -> Result<()> {
    check_dims(params, bx)?;
    if x.len() != bx.d() || y.len() != bx.d() {
        return domain(format!("points must have dimension {}", bx.d()));
    }
    for ((a, b), l) in x.iter().zip(y).zip(bx.lengths()) {
        if !((a - b).abs() <= l * (1.0 + 1e-12)) {
            return domain(format!("offset {} exceeds the period {l}", a - b));
        }
    }
    Ok(())
}

fn check_points(params: &MaternParams, bx: &BoxDomain, x: &[f64], y: &[f64]) -> Result<()> {
    check_dims(params, bx)?;
    bx.check_point(x)?;
    bx.check_point(y)
}

/// `|a - b + P k|` with a single rounding (up to compensation error), so
/// that an image at exactly the window margin lands on it bit for bit.
fn image_offset(a: f64, b: f64, period: f64, k: i64) -> f64 {
    let kf = k as f64;
    let p = period * kf;
    let mut acc = Neumaier::new();
    acc.extend([a, -b, p, period.mul_add(kf, -p)]);
    acc.total().abs()
}

/// Pushes `sign · C(‖x - y + P.k‖)` for every `‖k‖_∞ <= radius`, optionally
/// leaving out `k = 0`.
fn push_family(
    params: &MaternParams,
    periods: &[f64],
    x: &[f64],
    y: &[f64],
    radius: u64,
    sign: f64,
    skip_zero: bool,
    out: &mut Vec<f64>,
) {
    let d = x.len();
    let r = radius as i64;
    let mut k = vec![-r; d];
    loop {
        if !(skip_zero && k.iter().all(|&v| v == 0)) {
            let r2: f64 = (0..d).map(|i| image_offset(x[i], y[i], periods[i], k[i]).powi(2)).sum();
            out.push(sign * params.cov_at_distance(r2.sqrt()));
        }
        let mut i = 0;
        loop {
            if i == d {
                return;
            }
            k[i] += 1;
            if k[i] < r + 1 {
                break;
            }
            k[i] = -r;
            i += 1;
        }
    }
}

fn image_terms(
    params: &MaternParams,
    bc: BoundarySpec,
    bx: &BoxDomain,
    x: &[f64],
    y: &[f64],
    radius: u64,
    skip_identity: bool,
) -> Result<Vec<f64>> {
    let mut terms = Vec::new();
    match bc {
        BoundarySpec::Periodic => {
            push_family(params, bx.lengths(), x, y, radius, 1.0, skip_identity, &mut terms)
        }
        BoundarySpec::Neumann | BoundarySpec::Dirichlet => {
            let doubled = bx.doubled();
            for eps in SignVector::all(bx.d()) {
                let sign = if bc == BoundarySpec::Dirichlet { f64::from(eps.parity()) } else { 1.0 };
                let skip = skip_identity && eps.is_identity();
                push_family(params, doubled.lengths(), x, &eps.apply(y), radius, sign, skip, &mut terms);
            }
        }
        BoundarySpec::Robin { .. } => return domain("Robin conditions have no image-sum form".to_string()),
    }
    Ok(terms)
}

fn folded(
    params: &MaternParams,
    bc: BoundarySpec,
    bx: &BoxDomain,
    x: &[f64],
    y: &[f64],
    radius: u64,
) -> Result<ImageSum> {
    if bc == BoundarySpec::Periodic {
        check_offsets(params, bx, x, y)?;
    } else {
        check_points(params, bx, x, y)?;
    }
    let mut terms = image_terms(params, bc, bx, x, y, radius, false)?;
    Ok(ImageSum {
        radius,
        value: sum_descending(&mut terms),
        tail_bound: folded_tail_bound(params, bc, bx, radius)?,
    })
}

/// `C_P^L(x, y) = Σ_k C(x + L.k - y)`, for any `x, y` with `|x_i - y_i| <= L_i`.
pub fn cov_folded_periodic(params: &MaternParams, bx: &BoxDomain, x: &[f64], y: &[f64], radius: u64) -> Result<ImageSum> {
    folded(params, BoundarySpec::Periodic, bx, x, y, radius)
}

/// `C_N^L(x, y) = Σ_ε C_P^{2L}(x, ε.y)`.
pub fn cov_folded_neumann(params: &MaternParams, bx: &BoxDomain, x: &[f64], y: &[f64], radius: u64) -> Result<ImageSum> {
    folded(params, BoundarySpec::Neumann, bx, x, y, radius)
}

/// `C_D^L(x, y) = Σ_ε (Π ε_i) C_P^{2L}(x, ε.y)`.
pub fn cov_folded_dirichlet(params: &MaternParams, bx: &BoxDomain, x: &[f64], y: &[f64], radius: u64) -> Result<ImageSum> {
    folded(params, BoundarySpec::Dirichlet, bx, x, y, radius)
}

/// Folded covariance for any of `D`, `N`, `P`.
pub fn cov_folded(
    params: &MaternParams,
    bc: BoundarySpec,
    bx: &BoxDomain,
    x: &[f64],
    y: &[f64],
    radius: u64,
) -> Result<ImageSum> {
    folded(params, bc, bx, x, y, radius)
}

/// `C_*^L(x, y) - C(x, y)`, summed directly over the non-identity images so
/// that tiny errors keep their relative precision.
pub fn folded_error(
    params: &MaternParams,
    bc: BoundarySpec,
    bx: &BoxDomain,
    x: &[f64],
    y: &[f64],
    radius: u64,
) -> Result<ImageSum> {
    check_points(params, bx, x, y)?;
    let mut terms = image_terms(params, bc, bx, x, y, radius, true)?;
    Ok(ImageSum {
        radius,
        value: sum_descending(&mut terms),
        tail_bound: folded_tail_bound(params, bc, bx, radius)?,
    })
}

/// Maximum of `|C_*^L - C|` over all pairs of a tensor grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridError {
    pub max_error: f64,
    pub tail_bound: f64,
    pub radius: u64,
    pub argmax: (Vec<f64>, Vec<f64>),
}

/// Max-norm folding error over all pairs of the tensor grid `axis^d`.
///
/// With `radius = None` the radius is chosen so that the certified tail is
/// below `1e-6` of the error measured at radius 1.
pub fn folded_grid_error(
    params: &MaternParams,
    bc: BoundarySpec,
    bx: &BoxDomain,
    axis: &[f64],
    radius: Option<u64>,
) -> Result<GridError> {
    check_dims(params, bx)?;
    if axis.is_empty() {
        return domain("grid axis is empty".to_string());
    }
    for &a in axis {
        bx.check_point(&vec![a; bx.d()])?;
    }
    let radius = match radius {
        Some(r) => r,
        None => {
            let probe = grid_error_at(params, bc, bx, axis, 1)?;
            let target = (1e-6 * probe.max_error).max(1e-300);
            let mut r = 1;
            while r < 60 && folded_tail_bound(params, bc, bx, r)? > target {
                r += 1;
            }
            if r == 1 {
                return Ok(probe);
            }
            r
        }
    };
    grid_error_at(params, bc, bx, axis, radius)
}

/// Per-axis table of image offsets, deduplicated by absolute value.
struct OffsetAxis {
    /// Distinct `|a - ε b + P k|` values.
    values: Vec<f64>,
    /// `index[((s * n + a) * n + b) * side + (k + K)]` into `values`.
    index: Vec<u32>,
}

fn grid_error_at(
    params: &MaternParams,
    bc: BoundarySpec,
    bx: &BoxDomain,
    axis: &[f64],
    radius: u64,
) -> Result<GridError> {
    let d = bx.d();
    let n = axis.len();
    let (periods, signs): (Vec<f64>, Vec<SignVector>) = match bc {
        BoundarySpec::Periodic => (bx.lengths().to_vec(), vec![SignVector { eps: vec![1; d] }]),
        BoundarySpec::Neumann | BoundarySpec::Dirichlet => (bx.doubled().lengths().to_vec(), SignVector::all(d)),
        BoundarySpec::Robin { .. } => return domain("Robin conditions have no image-sum form".to_string()),
    };
    let r = radius as i64;
    let side = (2 * r + 1) as usize;

    let axes: Vec<OffsetAxis> = periods
        .iter()
        .map(|&p| {
            let mut raw = Vec::with_capacity(2 * n * n * side);
            for s in [1.0, -1.0] {
                for &a in axis {
                    for &b in axis {
                        for k in -r..=r {
                            raw.push(image_offset(a, s * b, p, k));
                        }
                    }
                }
            }
            let mut values = raw.clone();
            values.sort_by(f64::total_cmp);
            values.dedup();
            let index = raw
                .iter()
                .map(|v| values.binary_search_by(|c| c.total_cmp(v)).expect("present") as u32)
                .collect();
            OffsetAxis { values, index }
        })
        .collect();

    // Dense kernel table over combinations of per-axis offsets when small.
    let dims: Vec<usize> = axes.iter().map(|a| a.values.len()).collect();
    let table_len: usize = dims.iter().product();
    let kernel = |idx: &[u32]| {
        let r2: f64 = idx.iter().zip(&axes).map(|(&i, ax)| ax.values[i as usize].powi(2)).sum();
        params.cov_at_distance(r2.sqrt())
    };
    let table: Option<Vec<f64>> = (table_len <= 4_000_000).then(|| {
        let mut t = Vec::with_capacity(table_len);
        let mut idx = vec![0u32; d];
        for mut flat in 0..table_len {
            for (slot, &dim) in idx.iter_mut().zip(&dims).rev() {
                *slot = (flat % dim) as u32;
                flat /= dim;
            }
            t.push(kernel(&idx));
        }
        t
    });
    let lookup = |idx: &[u32]| match &table {
        Some(t) => {
            let mut flat = 0usize;
            for (&i, &dim) in idx.iter().zip(&dims) {
                flat = flat * dim + i as usize;
            }
            t[flat]
        }
        None => kernel(idx),
    };

    let mut best = (f64::NEG_INFINITY, 0usize, 0usize);
    let n_points = n.pow(d as u32);
    let mut terms = Vec::with_capacity(signs.len() * side.pow(d as u32));
    let mut xi = vec![0usize; d];
    let mut yi = vec![0usize; d];
    let mut idx = vec![0u32; d];
    let mut kk = vec![0usize; d];
    for px in 0..n_points {
        unflatten(px, n, &mut xi);
        for py in px..n_points {
            unflatten(py, n, &mut yi);
            terms.clear();
            for eps in &signs {
                let sign = if bc == BoundarySpec::Dirichlet { f64::from(eps.parity()) } else { 1.0 };
                kk.iter_mut().for_each(|v| *v = 0);
                loop {
                    let identity = eps.is_identity() && kk.iter().all(|&v| v == r as usize);
                    if !identity {
                        for i in 0..d {
                            let s = usize::from(eps.eps[i] < 0);
                            idx[i] = axes[i].index[((s * n + xi[i]) * n + yi[i]) * side + kk[i]];
                        }
                        terms.push(sign * lookup(&idx));
                    }
                    let mut i = 0;
                    while i < d {
                        kk[i] += 1;
                        if kk[i] < side {
                            break;
                        }
                        kk[i] = 0;
                        i += 1;
                    }
                    if i == d {
                        break;
                    }
                }
            }
            let err = sum_descending(&mut terms).abs();
            if err > best.0 {
                best = (err, px, py);
            }
        }
    }
    let point = |flat: usize| {
        let mut i = vec![0usize; d];
        unflatten(flat, n, &mut i);
        i.iter().map(|&j| axis[j]).collect::<Vec<f64>>()
    };
    Ok(GridError {
        max_error: best.0,
        tail_bound: folded_tail_bound(params, bc, bx, radius)?,
        radius,
        argmax: (point(best.1), point(best.2)),
    })
}

fn unflatten(mut flat: usize, n: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = flat % n;
        flat /= n;
    }
}
