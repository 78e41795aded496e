//! Gaussian fields by direct eigenfunction synthesis.
//!
//! A sample is `u(x) = Σ_k sqrt(η² λ_k^(-α)) ξ_k w_k(x)` over exactly the
//! modes kept by the truncation, so its covariance is the truncated spectral
//! covariance on the nose.
//!
//! Random numbers: `ChaCha20Rng::seed_from_u64(seed)` from `rand_chacha`;
//! mode `j` (modes ordered with the last axis fastest, each axis ascending
//! in frequency) consumes the `j`-th 64-bit output `w`, mapped to
//! `u = ((w >> 12) + 1/2) · 2^-52 ∈ (0, 1)` and then to `ξ = Φ⁻¹(u)` with
//! Wichura's AS 241 (PPND16) rational approximations.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{domain, Result};
use crate::matern::MaternParams;
use crate::spectral::{BoundarySpec, BoxDomain, SpectralCovariance, TruncationSpec};

/// One realization on a fixed grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub grid: Arc<Vec<Vec<f64>>>,
    pub values: Vec<f64>,
    pub seed: u64,
    pub bc: BoundarySpec,
    pub trunc: TruncationSpec,
}

/// Precomputed synthesis matrix for repeated sampling on one grid.
#[derive(Debug, Clone)]
pub struct FieldSampler {
    grid: Arc<Vec<Vec<f64>>>,
    bc: BoundarySpec,
    trunc: TruncationSpec,
    /// Row `j` holds `sqrt(η² λ_j^(-α)) w_j` at every grid point.
    synthesis: Vec<f64>,
    n_modes: usize,
}

impl FieldSampler {
    pub fn new(
        params: &MaternParams,
        bc: BoundarySpec,
        bx: &BoxDomain,
        grid: Vec<Vec<f64>>,
        trunc: TruncationSpec,
    ) -> Result<Self> {
        let spectral = SpectralCovariance::new(params, bc, bx, trunc)?;
        for x in &grid {
            bx.check_point(x)?;
        }
        let d = bx.d();
        let n_points = grid.len();
        // Per-axis mode values at every grid point.
        let tables: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                spectral
                    .axis_modes(i)
                    .iter()
                    .flat_map(|m| grid.iter().map(move |x| m.eval(x[i])))
                    .collect()
            })
            .collect();
        let counts: Vec<usize> = (0..d).map(|i| spectral.axis_modes(i).len()).collect();
        let n_modes: usize = counts.iter().product();
        let mut synthesis = Vec::with_capacity(n_modes * n_points);
        let mut idx = vec![0usize; d];
        for _ in 0..n_modes {
            let s: f64 = idx
                .iter()
                .enumerate()
                .map(|(i, &j)| spectral.axis_modes(i)[j].omega.powi(2))
                .sum();
            let amp = spectral.weight(s).sqrt();
            for p in 0..n_points {
                let mut v = amp;
                for (i, &j) in idx.iter().enumerate() {
                    v *= tables[i][j * n_points + p];
                }
                synthesis.push(v);
            }
            for i in (0..d).rev() {
                idx[i] += 1;
                if idx[i] < counts[i] {
                    break;
                }
                idx[i] = 0;
            }
        }
        Ok(Self { grid: Arc::new(grid), bc, trunc, synthesis, n_modes })
    }

    pub fn grid(&self) -> &[Vec<f64>] {
        &self.grid
    }
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// The exact covariance of the samples on the grid.
    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.grid.len();
        let mut c = DMatrix::zeros(n, n);
        for row in self.synthesis.chunks_exact(n) {
            for i in 0..n {
                for j in i..n {
                    c[(i, j)] += row[i] * row[j];
                }
            }
        }
        c.fill_lower_triangle_with_upper_triangle();
        c
    }

    pub fn sample(&self, seed: u64) -> FieldSample {
        let n = self.grid.len();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut values = vec![0.0; n];
        for row in self.synthesis.chunks_exact(n) {
            let xi = standard_normal(rng.next_u64());
            for (v, r) in values.iter_mut().zip(row) {
                *v += xi * r;
            }
        }
        FieldSample { grid: Arc::clone(&self.grid), values, seed, bc: self.bc, trunc: self.trunc }
    }
}

/// One sample; build a [`FieldSampler`] instead when drawing many.
pub fn sample_field(
    params: &MaternParams,
    bc: BoundarySpec,
    bx: &BoxDomain,
    grid: Vec<Vec<f64>>,
    trunc: TruncationSpec,
    seed: u64,
) -> Result<FieldSample> {
    Ok(FieldSampler::new(params, bc, bx, grid, trunc)?.sample(seed))
}

/// Maps a 64-bit word to a standard normal deviate.
pub fn standard_normal(word: u64) -> f64 {
    let u = ((word >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64);
    inverse_normal_cdf(u)
}

const PPND_A: [f64; 8] = [
    3.387_132_872_796_366_608,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
const PPND_B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561e3,
];
const PPND_C: [f64; 8] = [
    1.423_437_110_749_683_577_34,
    4.630_337_846_156_545_295_9,
    5.769_497_221_460_691_405_5,
    3.647_848_324_763_204_605_04,
    1.270_458_252_452_368_382_58,
    2.417_807_251_774_506_117_7e-1,
    2.272_384_498_926_918_458_33e-2,
    7.745_450_142_783_414_076_4e-4,
];
const PPND_D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87,
    1.676_384_830_183_803_849_4,
    6.897_673_349_851_000_045_5e-1,
    1.481_039_764_274_800_745_9e-1,
    1.519_866_656_361_645_719_66e-2,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
const PPND_E: [f64; 8] = [
    6.657_904_643_501_103_777_2,
    5.463_784_911_164_114_369_9,
    1.784_826_539_917_291_335_8,
    2.965_605_718_285_048_912_3e-1,
    2.653_218_952_657_612_309_3e-2,
    1.242_660_947_388_078_438_6e-3,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
const PPND_F: [f64; 8] = [
    1.0,
    5.998_322_065_558_879_376_9e-1,
    1.369_298_809_227_358_053_1e-1,
    1.487_536_129_085_061_485_25e-2,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];

fn horner(c: &[f64; 8], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

/// `Φ⁻¹(p)` for `p ∈ (0, 1)` (AS 241, about 1e-16 relative).
pub fn inverse_normal_cdf(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * horner(&PPND_A, r) / horner(&PPND_B, r);
    }
    let r = (-(p.min(1.0 - p)).ln()).sqrt();
    let v = if r <= 5.0 {
        let r = r - 1.6;
        horner(&PPND_C, r) / horner(&PPND_D, r)
    } else {
        let r = r - 5.0;
        horner(&PPND_E, r) / horner(&PPND_F, r)
    };
    if q < 0.0 {
        -v
    } else {
        v
    }
}

/// Sample covariance of a batch of fields on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCov {
    pub matrix: DMatrix<f64>,
    pub mean: Vec<f64>,
    pub n_samples: usize,
    /// Normal-theory standard error `sqrt((C_ii C_jj + C_ij²) / n)`.
    pub std_error: DMatrix<f64>,
}

/// Unbiased covariance estimate (mean removed, divisor `n - 1`).
pub fn empirical_cov(samples: &[FieldSample]) -> Result<EmpiricalCov> {
    let n = samples.len();
    if n < 2 {
        return domain(format!("empirical covariance needs at least 2 samples, got {n}"));
    }
    let grid = &samples[0].grid;
    let m = grid.len();
    if let Some(bad) = samples.iter().find(|s| !(Arc::ptr_eq(&s.grid, grid) || s.grid == *grid)) {
        return domain(format!("sample with seed {} lives on a different grid", bad.seed));
    }
    let mut mean = vec![0.0; m];
    for s in samples {
        for (a, v) in mean.iter_mut().zip(&s.values) {
            *a += v;
        }
    }
    mean.iter_mut().for_each(|a| *a /= n as f64);
    let mut matrix = DMatrix::zeros(m, m);
    let mut centered = vec![0.0; m];
    for s in samples {
        for ((c, v), mu) in centered.iter_mut().zip(&s.values).zip(&mean) {
            *c = v - mu;
        }
        for i in 0..m {
            for j in i..m {
                matrix[(i, j)] += centered[i] * centered[j];
            }
        }
    }
    matrix /= (n - 1) as f64;
    matrix.fill_lower_triangle_with_upper_triangle();
    let std_error = DMatrix::from_fn(m, m, |i, j| {
        ((matrix[(i, i)] * matrix[(j, j)] + matrix[(i, j)].powi(2)) / n as f64).sqrt()
    });
    Ok(EmpiricalCov { matrix, mean, n_samples: n, std_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matern::derive_params;

    #[test]
    fn inverse_cdf_reference_points() {
        assert_eq!(inverse_normal_cdf(0.5), 0.0);
        assert!((inverse_normal_cdf(0.975) - 1.959_963_984_540_054).abs() < 1e-15);
        assert!((inverse_normal_cdf(1e-10) + 6.361_340_902_404_056).abs() < 1e-13);
        assert!((inverse_normal_cdf(1e-300) + 37.047_096_299_361_2).abs() < 1e-11);
        let lo = standard_normal(0);
        let hi = standard_normal(u64::MAX);
        assert!(lo.is_finite() && hi.is_finite() && (lo + hi).abs() < 1e-12);
    }

    #[test]
    fn single_neumann_mode_is_constant() {
        let p = derive_params(1.0, 0.1, 1.0, 2).unwrap();
        let bx = BoxDomain::cubic(0.2, 1.0, 2).unwrap();
        let grid = bx.window_grid(3).unwrap();
        let s = FieldSampler::new(&p, BoundarySpec::Neumann, &bx, grid, TruncationSpec::IndexCap(0)).unwrap();
        assert_eq!(s.n_modes(), 1);
        let f = s.sample(7);
        let xi = standard_normal(ChaCha20Rng::seed_from_u64(7).next_u64());
        let expected = p.eta2().sqrt() / 1.2 * xi;
        for v in &f.values {
            assert!((v - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn same_seed_same_field() {
        let p = derive_params(1.0, 0.1, 1.0, 1).unwrap();
        let bx = BoxDomain::cubic(0.2, 1.0, 1).unwrap();
        let grid = bx.window_grid(6).unwrap();
        let a = sample_field(&p, BoundarySpec::Periodic, &bx, grid.clone(), TruncationSpec::IndexCap(50), 3).unwrap();
        let b = sample_field(&p, BoundarySpec::Periodic, &bx, grid, TruncationSpec::IndexCap(50), 3).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn synthesis_covariance_is_the_spectral_one() {
        let p = derive_params(1.0, 0.2, 1.0, 2).unwrap();
        let bx = BoxDomain::cubic(0.1, 1.0, 2).unwrap();
        let grid = bx.window_grid(3).unwrap();
        for bc in [BoundarySpec::Dirichlet, BoundarySpec::Periodic, BoundarySpec::Robin { beta: p.kappa() }] {
            let trunc = TruncationSpec::IndexCap(12);
            let s = FieldSampler::new(&p, bc, &bx, grid.clone(), trunc).unwrap();
            let spec = SpectralCovariance::new(&p, bc, &bx, trunc).unwrap().cov_matrix(&grid).unwrap();
            assert!((s.covariance() - spec).abs().max() < 1e-13, "{bc:?}");
        }
    }

    #[test]
    fn empirical_cov_edge_cases() {
        let grid = Arc::new(vec![vec![0.1], vec![0.5]]);
        let zero = |seed| FieldSample {
            grid: Arc::clone(&grid),
            values: vec![0.0, 0.0],
            seed,
            bc: BoundarySpec::Neumann,
            trunc: TruncationSpec::IndexCap(1),
        };
        let e = empirical_cov(&[zero(1), zero(2), zero(3)]).unwrap();
        assert_eq!(e.matrix, DMatrix::zeros(2, 2));
        assert!(empirical_cov(&[zero(1)]).is_err());
        let mut other = zero(4);
        other.grid = Arc::new(vec![vec![0.2], vec![0.5]]);
        assert!(empirical_cov(&[zero(1), other]).is_err());
    }
}
