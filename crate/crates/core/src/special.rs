//! Special functions behind the closed-form throughput expressions.
//!
//! `E1` is evaluated with its power series below `x = 1` and with the
//! Legendre continued fraction (modified Lentz) above. The continued
//! fraction directly yields the scaled product `e^x E1(x)`, which is what
//! the throughput formulas need and which stays finite for any `x > 0`.
//!
//! The sum of `m` i.i.d. Rayleigh amplitudes is handled with the
//! small-argument approximation: for the normalized argument `t = z / sqrt(m)`
//! the density is `t^(2m-1) exp(-t^2/(2b)) / (2^(m-1) b^m (m-1)!)`, i.e.
//! `t^2` is Gamma distributed with shape `m` and scale `2b`.

use crate::error::{Error, Result};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;
const CF_MAX_ITER: usize = 10_000;

/// `(2m - 1)!! = (2m-1)(2m-3)...3.1`, exact in `u64`.
pub fn double_factorial_odd(m: u32) -> Result<u64> {
    if m == 0 {
        return Err(Error::domain("double_factorial_odd requires m >= 1"));
    }
    (1..=m as u64).try_fold(1u64, |acc, j| {
        acc.checked_mul(2 * j - 1)
            .ok_or_else(|| Error::Overflow(format!("(2*{m}-1)!! exceeds u64; use ln_double_factorial_odd")))
    })
}

/// Natural log of `(2m - 1)!!`, usable for any `m >= 1`.
pub fn ln_double_factorial_odd(m: u32) -> Result<f64> {
    if m == 0 {
        return Err(Error::domain("ln_double_factorial_odd requires m >= 1"));
    }
    Ok((1..=m as u64).map(|j| ((2 * j - 1) as f64).ln()).sum())
}

pub(crate) fn ln_factorial(n: u32) -> f64 {
    (2..=n as u64).map(|k| (k as f64).ln()).sum()
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0) || x.is_nan() {
        return Err(Error::Domain(format!("{name} requires x > 0, got {x}")));
    }
    Ok(())
}

/// `E1(x) + gamma + ln x` via the alternating power series, for `x < 1`.
fn e1_series_tail(x: f64) -> f64 {
    // -sum_{k>=1} (-x)^k / (k k!)
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..200 {
        term *= -x / k as f64;
        let contrib = term / k as f64;
        sum -= contrib;
        if contrib.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Continued fraction for `J_k(x) = x^k e^x Gamma(-k, x)`
/// `= integral_0^inf (u^k / k!) e^(-u) / (u + x) du`.
///
/// `k = 0` gives `e^x E1(x)`. Converges quickly for `x >= 1`; usable but
/// slow for smaller `x`.
pub(crate) fn scaled_gamma_tail_cf(k: u32, x: f64) -> f64 {
    let a = -(k as f64);
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / CF_TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..CF_MAX_ITER {
        let fi = i as f64;
        let an = -fi * (fi - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = b + an / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// Exponential integral `E1(x) = int_x^inf e^-t / t dt`, `x > 0`.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    check_positive("exp_integral_e1", x)?;
    if x < 1.0 {
        Ok(-EULER_GAMMA - x.ln() + e1_series_tail(x))
    } else if x.is_infinite() {
        Ok(0.0)
    } else {
        Ok((-x).exp() * scaled_gamma_tail_cf(0, x))
    }
}

/// `e^x E1(x)` without forming either factor for large `x`.
///
/// Always lies strictly between `1/(x+1)` and `1/x`.
pub fn scaled_exp_e1(x: f64) -> Result<f64> {
    check_positive("scaled_exp_e1", x)?;
    if x < 1.0 {
        Ok(x.exp() * (-EULER_GAMMA - x.ln() + e1_series_tail(x)))
    } else if x.is_infinite() {
        Ok(0.0)
    } else if x >= LARGE_X {
        Ok(scaled_e1_large(x))
    } else {
        Ok(scaled_gamma_tail_cf(0, x))
    }
}

/// Above this argument `e^x E1(x)` sits within a few ulps of `1/(x+1)` and
/// is evaluated with error-free transforms.
const LARGE_X: f64 = 1e4;

/// `e^x E1(x) = 1 / (x + 1 - eps)` with
/// `eps = 1 / (x + 3 - 4 / (x + 5 - 9 / (x + 7 - ...)))`.
///
/// `x + 1` is split exactly into `hi + lo` and the reciprocal is corrected
/// with an fma residual, which keeps the result within about half an ulp.
fn scaled_e1_large(x: f64) -> f64 {
    let mut tail = 0.0;
    for k in (1..=8u32).rev() {
        let kf = k as f64;
        tail = kf * kf / (x + 2.0 * kf + 1.0 - tail);
    }
    let hi = x + 1.0;
    let lo = 1.0 - (hi - x);
    let lo = lo - tail;
    let q = 1.0 / hi;
    let r = (-q).mul_add(hi, 1.0);
    let v = q + q * (r - lo * q);
    // The true value exceeds 1/(x+1) by about x^-3, below one ulp once x is
    // large; keep the result strictly above 1/(x+1).
    let e = 1.0 - (hi - x);
    let p = v * hi;
    let excess = (p - 1.0) + (v.mul_add(hi, -p) + v * e);
    if excess <= 0.0 {
        v.next_up()
    } else {
        v
    }
}

/// CDF of the minimum of `m` i.i.d. exponential powers of mean `2 sigma2`.
pub fn min_exponential_cdf(z: f64, m: u32, sigma2: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::domain("min_exponential_cdf requires m >= 1"));
    }
    check_positive("sigma2", sigma2)?;
    if !(z >= 0.0) {
        return Err(Error::Domain(format!("min_exponential_cdf requires z >= 0, got {z}")));
    }
    Ok(-(-(m as f64) * z / (2.0 * sigma2)).exp_m1())
}

/// Parameters of the small-argument approximation for a sum of `m`
/// Rayleigh amplitudes with variance parameter `sigma_h2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaaParams {
    m: u32,
    sigma_h2: f64,
    b: f64,
}

impl SaaParams {
    /// Above this group size `b` is assembled in the log domain.
    const DIRECT_MAX_M: u32 = 15;

    pub fn new(m: u32, sigma_h2: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::domain("SAA requires m >= 1"));
        }
        check_positive("sigma_h2", sigma_h2)?;
        let b = if m == 1 {
            sigma_h2
        } else if m <= Self::DIRECT_MAX_M {
            let df = double_factorial_odd(m)? as f64;
            sigma_h2 / m as f64 * df.powf(1.0 / m as f64)
        } else {
            (sigma_h2.ln() - (m as f64).ln() + ln_double_factorial_odd(m)? / m as f64).exp()
        };
        Ok(SaaParams { m, sigma_h2, b })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn sigma_h2(&self) -> f64 {
        self.sigma_h2
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("SAA argument must be >= 0, got {t}")));
    }
    Ok(())
}

/// Approximate density of the normalized Rayleigh sum `t = z / sqrt(m)`.
pub fn saa_pdf(t: f64, p: &SaaParams) -> Result<f64> {
    check_t(t)?;
    if t == 0.0 || t.is_infinite() {
        return Ok(0.0);
    }
    let m = p.m as f64;
    let ln_pdf = (2.0 * m - 1.0) * t.ln()
        - t * t / (2.0 * p.b)
        - (m - 1.0) * std::f64::consts::LN_2
        - m * p.b.ln()
        - ln_factorial(p.m - 1);
    Ok(ln_pdf.exp())
}

/// Approximate CDF `1 - exp(-y) sum_{k<m} y^k / k!` with `y = t^2 / (2b)`.
///
/// Below `y = m + 1` the regularized lower incomplete gamma series is used
/// so that small probabilities keep full relative precision.
pub fn saa_cdf(t: f64, p: &SaaParams) -> Result<f64> {
    check_t(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    if t.is_infinite() {
        return Ok(1.0);
    }
    let y = t * t / (2.0 * p.b);
    if y < p.m as f64 + 1.0 {
        Ok(gamma_p_series(p.m, y).min(1.0))
    } else {
        Ok((1.0 - gamma_q_finite_sum(p.m, y)).clamp(0.0, 1.0))
    }
}

/// Regularized lower incomplete gamma `P(m, y)` by its power series:
/// `y^m e^-y / m! * sum_n y^n / ((m+1)...(m+n))`.
fn gamma_p_series(m: u32, y: f64) -> f64 {
    let mf = m as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..1000 {
        term *= y / (mf + n as f64);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    (mf * y.ln() - y - ln_factorial(m)).exp() * sum
}

/// `Q(m, y) = e^-y sum_{k<m} y^k / k!` for integer `m`.
fn gamma_q_finite_sum(m: u32, y: f64) -> f64 {
    let ln_y = y.ln();
    (0..m).map(|k| (k as f64 * ln_y - y - ln_factorial(k)).exp()).sum()
}
