//! Log-gamma and the modified Bessel function of the second kind.
//!
//! The production Bessel path works on orders reduced to `|mu| <= 1/2`:
//! Temme's series for `x < 2`, Steed's continued fraction otherwise, and
//! forward recurrence in the order. Everything is carried in log space so
//! that orders around 50 and arguments down to 1e-6 neither overflow nor
//! lose digits. [`bessel_k_integral`] is an independent evaluator based on
//! the integral representation, used to pin the production path in tests.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::quad;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_741_780_329_736_406;

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("ln_gamma requires a finite positive argument, got {x}"));
    }
    Ok(ln_gamma_positive(x))
}

pub(crate) fn ln_gamma_positive(x: f64) -> f64 {
    if x < 0.5 {
        // Γ(x) = Γ(x + 1) / x
        return ln_gamma_positive(x + 1.0) - x.ln();
    }
    let z = x - 1.0;
    let mut series = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        series += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + series.ln()
}

/// A single evaluation of `K_nu(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselEval {
    /// Order actually used (non-negative; `K_{-nu} = K_nu`).
    pub order: f64,
    pub argument: f64,
    /// `K_nu(x)`; may overflow to infinity for large orders and tiny
    /// arguments, in which case `log_value` is still finite.
    pub value: f64,
    pub log_value: f64,
}

/// Modified Bessel function of the second kind of real order.
///
/// Negative orders are folded onto `|nu|`.
pub fn bessel_k(nu: f64, x: f64) -> Result<BesselEval> {
    if !nu.is_finite() {
        return domain(format!("bessel_k order must be finite, got {nu}"));
    }
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("bessel_k argument must be finite and positive, got {x}"));
    }
    let order = nu.abs();
    let (log_value, _) = ln_bessel_k_with_ratio(order, x)?;
    Ok(BesselEval { order, argument: x, value: log_value.exp(), log_value })
}

/// `ln K_nu(x)` together with the ratio `K_{nu+1}(x) / K_nu(x)`.
///
/// Requires `nu >= 0` and `x > 0` (checked by callers).
pub(crate) fn ln_bessel_k_with_ratio(nu: f64, x: f64) -> Result<(f64, f64)> {
    let steps = (nu + 0.5).floor();
    let mu = nu - steps;
    let (ln_k_mu, mut ratio) = if x < 2.0 { temme(mu, x)? } else { steed(mu, x)? };

    // K_{m+1} = (2m/x) K_m + K_{m-1}, tracked as ratios r = K_{m+1}/K_m.
    let mut ln_k = ln_k_mu;
    let mut product = 1.0f64;
    let two_over_x = 2.0 / x;
    for i in 1..=(steps as u64) {
        product *= ratio;
        if product > 1e280 {
            ln_k += product.ln();
            product = 1.0;
        }
        ratio = (mu + i as f64) * two_over_x + 1.0 / ratio;
    }
    ln_k += product.ln();
    Ok((ln_k, ratio))
}

// Taylor coefficients of 1/Γ(z) about 0, starting at z¹.
const RGAMMA: [f64; 28] = [
    1.0,
    0.577_215_664_901_532_860_61,
    -0.655_878_071_520_253_881_08,
    -0.042_002_635_034_095_235_529,
    0.166_538_611_382_291_489_5,
    -0.042_197_734_555_544_336_748,
    -0.009_621_971_527_876_973_562_1,
    0.007_218_943_246_663_099_542_4,
    -0.001_165_167_591_859_065_112_1,
    -0.000_215_241_674_114_950_972_82,
    0.000_128_050_282_388_116_186_15,
    -0.000_020_134_854_780_788_238_656,
    -1.250_493_482_142_670_657_3e-6,
    1.133_027_231_981_695_882_4e-6,
    -2.056_338_416_977_607_103_5e-7,
    6.116_095_104_481_415_817_9e-9,
    5.002_007_644_469_222_930_1e-9,
    -1.181_274_570_487_020_144_6e-9,
    1.043_426_711_691_100_510_5e-10,
    7.782_263_439_905_071_254e-12,
    -3.696_805_618_642_205_708_2e-12,
    5.100_370_287_454_475_979e-13,
    -2.058_326_053_566_506_783_2e-14,
    -5.348_122_539_423_017_982_4e-15,
    1.226_778_628_238_260_790_2e-15,
    -1.181_259_301_697_458_769_5e-16,
    1.186_692_254_751_600_332_6e-18,
    1.412_380_655_318_031_781_6e-18,
];

/// Returns `(gam1, gam2, 1/Γ(1+mu), 1/Γ(1-mu))` for `|mu| <= 1/2`, where
/// `gam1 = (1/Γ(1-mu) - 1/Γ(1+mu)) / (2mu)` and
/// `gam2 = (1/Γ(1-mu) + 1/Γ(1+mu)) / 2`.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    // 1/Γ(1+mu) = Σ_k c_k mu^(k-1) with c_1 = RGAMMA[0].
    let mu2 = mu * mu;
    let mut even = 0.0; // Σ over odd k: c_k mu^(k-1)
    let mut odd = 0.0; // Σ over even k: c_k mu^(k-2)
    for (i, c) in RGAMMA.iter().enumerate().rev() {
        if i % 2 == 0 {
            even = even * mu2 + c;
        } else {
            odd = odd * mu2 + c;
        }
    }
    let gam1 = -odd;
    let gam2 = even;
    let plus = gam2 - mu * gam1;
    let minus = gam2 + mu * gam1;
    (gam1, gam2, plus, minus)
}

const MAX_ITER: usize = 100_000;

fn temme(mu: f64, x: f64) -> Result<(f64, f64)> {
    let half_x = 0.5 * x;
    let pimu = PI * mu;
    let fact = if pimu.abs() < f64::EPSILON { 1.0 } else { pimu / pimu.sin() };
    let d = -half_x.ln();
    let e = mu * d;
    let fact2 = if e.abs() < f64::EPSILON { 1.0 } else { e.sinh() / e };
    let (gam1, gam2, gampl, gammi) = temme_gammas(mu);
    let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
    let mut sum = ff;
    let ee = e.exp();
    let mut p = 0.5 * ee / gampl;
    let mut q = 0.5 / (ee * gammi);
    let mut c = 1.0;
    let dd = half_x * half_x;
    let mut sum1 = p;
    let mu2 = mu * mu;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - mu2);
        c *= dd / fi;
        p /= fi - mu;
        q /= fi + mu;
        let del = c * ff;
        sum += del;
        sum1 += c * (p - fi * ff);
        if del.abs() < sum.abs() * f64::EPSILON {
            return Ok((sum.ln(), sum1 * 2.0 / x / sum));
        }
    }
    Err(Error::Numerical {
        context: "bessel_k Temme series",
        detail: format!("no convergence for mu = {mu}, x = {x} after {MAX_ITER} terms"),
    })
}

fn steed(mu: f64, x: f64) -> Result<(f64, f64)> {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - mu * mu;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < f64::EPSILON {
            let ln_k = 0.5 * (PI / (2.0 * x)).ln() - x - s.ln();
            let ratio = (mu + x + 0.5 - a1 * h) / x;
            return Ok((ln_k, ratio));
        }
    }
    Err(Error::Numerical {
        context: "bessel_k Steed continued fraction",
        detail: format!("no convergence for mu = {mu}, x = {x} after {MAX_ITER} terms"),
    })
}

/// `K_nu(x)` from `K_nu(x) = ½ (x/2)^nu ∫_0^∞ exp(-t - x²/4t) t^(-nu-1) dt`,
/// integrated adaptively after the substitution `t = e^s`.
///
/// This is slow and serves as a reference: it shares nothing with
/// [`bessel_k`] beyond `f64` arithmetic. Valid for any real order, so it
/// also checks the reflection `K_{-nu} = K_nu` independently.
pub fn bessel_k_integral(nu: f64, x: f64) -> Result<BesselEval> {
    if !nu.is_finite() || !(x > 0.0) || !x.is_finite() {
        return domain(format!("bessel_k_integral needs finite nu and x > 0, got ({nu}, {x})"));
    }
    let quarter_x2 = 0.25 * x * x;
    let log_integrand = |s: f64| -s.exp() - quarter_x2 * (-s).exp() - nu * s;

    // The log-integrand is concave; its maximum sits at u = e^s solving
    // u² + nu·u - x²/4 = 0.
    let root = (nu * nu + x * x).sqrt();
    let u = if nu >= 0.0 { 0.5 * x * x / (nu + root) } else { 0.5 * (root - nu) };
    let s_peak = u.ln();
    let peak = log_integrand(s_peak);

    // Walk outward until the integrand has dropped by e^-80.
    let drop = 80.0;
    let mut width = 1.0;
    while peak - log_integrand(s_peak - width) < drop {
        width *= 2.0;
    }
    let lo = s_peak - width;
    let mut width = 1.0;
    while peak - log_integrand(s_peak + width) < drop {
        width *= 2.0;
    }
    let hi = s_peak + width;

    // Splitting at the peak keeps the flat-top case (nu ≈ 0, tiny x) cheap.
    let integrand = |s: f64| (log_integrand(s) - peak).exp();
    let left = quad::integrate(integrand, lo, s_peak, 0.0, 1e-14, 20_000)?;
    let right = quad::integrate(integrand, s_peak, hi, 0.0, 1e-14, 20_000)?;
    let log_value =
        (0.5f64).ln() + nu * (0.5 * x).ln() + peak + (left.value + right.value).ln();
    Ok(BesselEval { order: nu, argument: x, value: log_value.exp(), log_value })
}
