//! Approximate closed-form ADB throughput.
//!
//! Group 1 holds relays `1..=m`, group 2 the remaining `L - m`. Four link
//! expectations feed the result (all in bps/Hz):
//!
//! * `c11`, `c21`: source to group 1 / group 2, limited by the weakest
//!   relay, `E[log2(1 + P_S min_i |g_i|^2)]`. Exact.
//! * `c22`, `c12`: group 1 / group 2 beamforming to the destination,
//!   `E[log2(1 + P_R (sum_i |h_i|)^2)]`, evaluated under the
//!   small-argument approximation of the Rayleigh sum.
//!
//! and `C_ADB = min(c11, c22) / 2 + min(c21, c12) / 2`.
//!
//! The beamforming expectation reduces to `sum_{k<m} J_k(x0) / ln 2` with
//! `x0 = 1 / (2 b P_R m)` and `J_k(x) = int_0^inf (u^k/k!) e^-u / (u + x) du`.
//! The expanded form (one `e^x0 E1(x0)` factor times a polynomial plus a
//! rational double sum) alternates in sign and cancels badly once `x0` is
//! large; when the cancellation would cost more than three digits each
//! `J_k` is instead taken from its own continued fraction.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::special::{ln_factorial, scaled_exp_e1, scaled_gamma_tail_cf, SaaParams};

/// Group sizes up to this value are covered by the accuracy tests.
pub const MAX_SUPPORTED_GROUP: usize = 15;

/// Largest tolerated ratio between the magnitude sum of the expanded
/// terms and their signed total.
const MAX_CANCELLATION: f64 = 1e3;

static CLAMP_EVENTS: AtomicU64 = AtomicU64::new(0);

/// Number of times a roundoff-negative link rate was clamped to zero.
pub fn clamp_events() -> u64 {
    CLAMP_EVENTS.load(Ordering::Relaxed)
}

fn clamp_nonnegative(v: f64) -> f64 {
    if v < 0.0 {
        CLAMP_EVENTS.fetch_add(1, Ordering::Relaxed);
        log::warn!("negative link rate {v:e} from roundoff clamped to 0");
        0.0
    } else {
        v
    }
}

fn check_power(name: &str, p: f64) -> Result<()> {
    if !(p >= 0.0 && p.is_finite()) {
        return Err(Error::Domain(format!("{name} must be finite and >= 0, got {p}")));
    }
    Ok(())
}

fn check_group(m: usize) -> Result<u32> {
    if m == 0 {
        return Err(Error::domain("group size must be >= 1"));
    }
    u32::try_from(m).map_err(|_| Error::domain("group size too large"))
}

/// Neumaier-compensated running sum that also tracks `sum |x|`.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
    magnitude: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
        self.magnitude += x.abs();
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Which evaluation path produced a beamforming link rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamformingRoute {
    /// `p_r = 0`.
    Zero,
    /// The expanded closed form with compensated summation.
    Expanded,
    /// Per-term continued fractions (large `x0`).
    ContinuedFraction,
}

/// `E[log2(1 + p_s min of `group` exponential powers)]`, mean power `2 sigma_g2`.
fn source_link_rate(p_s: f64, group: usize, sigma_g2: f64) -> Result<f64> {
    check_power("p_s", p_s)?;
    let m = check_group(group)?;
    if !(sigma_g2 > 0.0 && sigma_g2.is_finite()) {
        return Err(Error::Domain(format!("sigma_g2 must be positive, got {sigma_g2}")));
    }
    if p_s == 0.0 {
        return Ok(0.0);
    }
    let x = m as f64 / (2.0 * sigma_g2 * p_s);
    Ok(scaled_exp_e1(x)? / std::f64::consts::LN_2)
}

/// Source to group-1 rate for a group of `m` relays.
pub fn c11_closed(p_s: f64, m: usize, sigma_g2: f64) -> Result<f64> {
    source_link_rate(p_s, m, sigma_g2)
}

/// Source to group-2 rate (group of `relays - m`).
pub fn c21_closed(p_s: f64, relays: usize, m: usize, sigma_g2: f64) -> Result<f64> {
    check_split(relays, m)?;
    source_link_rate(p_s, relays - m, sigma_g2)
}

/// Group-1 beamforming rate toward the destination.
pub fn c22_closed(p_r: f64, m: usize, sigma_h2: f64) -> Result<f64> {
    beamforming_link_rate(p_r, m, sigma_h2)
}

/// Group-2 beamforming rate toward the destination.
pub fn c12_closed(p_r: f64, relays: usize, m: usize, sigma_h2: f64) -> Result<f64> {
    check_split(relays, m)?;
    beamforming_link_rate(p_r, relays - m, sigma_h2)
}

fn check_split(relays: usize, m: usize) -> Result<()> {
    if m == 0 || m >= relays {
        return Err(Error::Domain(format!("group size m={m} must satisfy 1 <= m <= L-1 (L={relays})")));
    }
    Ok(())
}

/// `E[log2(1 + p_r (h_1 + ... + h_group)^2)]` under the SAA law.
pub fn beamforming_link_rate(p_r: f64, group: usize, sigma_h2: f64) -> Result<f64> {
    beamforming_link_rate_with_route(p_r, group, sigma_h2).map(|(v, _)| v)
}

pub fn beamforming_link_rate_with_route(
    p_r: f64,
    group: usize,
    sigma_h2: f64,
) -> Result<(f64, BeamformingRoute)> {
    check_power("p_r", p_r)?;
    let m = check_group(group)?;
    let saa = SaaParams::new(m, sigma_h2)?;
    if p_r == 0.0 {
        return Ok((0.0, BeamformingRoute::Zero));
    }
    let two_b = 2.0 * saa.b();
    let beta = 1.0 / (p_r * group as f64);
    let x0 = beta / two_b;
    let j0 = scaled_exp_e1(x0)?;

    let mut acc = CompensatedSum::default();
    // e^x0 E1(x0) * [1 + sum_{k=1}^{m-1} (-beta)^k / ((2b)^k k!)]
    let mut coef = 1.0;
    acc.add(j0);
    for k in 1..m {
        coef *= -x0 / k as f64;
        acc.add(j0 * coef);
    }
    // sum_{k=1}^{m-1} 1/((2b)^k k!) sum_{s=1}^{k} (s-1)! (-beta)^(k-s) (2b)^s;
    // beta and 2b only enter through their ratio x0.
    for k in 1..m {
        let ln_kf = ln_factorial(k);
        for s in 1..=k {
            let ratio = (ln_factorial(s - 1) - ln_kf).exp();
            acc.add(ratio * (-x0).powi((k - s) as i32));
        }
    }

    let expanded = acc.value();
    let (nats, route) = if expanded > 0.0 && acc.magnitude <= MAX_CANCELLATION * expanded {
        (expanded, BeamformingRoute::Expanded)
    } else {
        let mut stable = CompensatedSum::default();
        for k in 0..m {
            stable.add(scaled_gamma_tail_cf(k, x0));
        }
        (stable.value(), BeamformingRoute::ContinuedFraction)
    };
    Ok((clamp_nonnegative(nats / std::f64::consts::LN_2), route))
}

/// Inputs of the closed-form ADB throughput.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdbAnalyticConfig {
    pub relays: usize,
    pub group_size: usize,
    pub sigma_g2: f64,
    pub sigma_h2: f64,
    pub p_s: f64,
    pub p_r: f64,
}

impl AdbAnalyticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.relays < 2 {
            return Err(Error::config("relays", "ADB needs at least 2 relays"));
        }
        if self.group_size == 0 || self.group_size >= self.relays {
            return Err(Error::config(
                "group_size",
                format!("must satisfy 1 <= m <= L-1, got m={} L={}", self.group_size, self.relays),
            ));
        }
        check_power("p_s", self.p_s)?;
        check_power("p_r", self.p_r)?;
        for (name, v) in [("sigma_g2", self.sigma_g2), ("sigma_h2", self.sigma_h2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Which link limits each of the two flows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActiveCase {
    /// Both flows limited by their source-relay hop: `(c11 + c21) / 2`.
    SourceSource,
    /// Flow 1 by the source hop, flow 2 by beamforming: `(c11 + c12) / 2`.
    SourceRelay,
    /// Flow 1 by beamforming, flow 2 by the source hop: `(c22 + c21) / 2`.
    RelaySource,
    /// Both flows limited by beamforming: `(c22 + c12) / 2`.
    RelayRelay,
}

impl ActiveCase {
    /// Ties go to the source-relay hop; either choice gives the same value.
    pub fn classify(c11: f64, c12: f64, c21: f64, c22: f64) -> Self {
        match (c11 <= c22, c21 <= c12) {
            (true, true) => ActiveCase::SourceSource,
            (true, false) => ActiveCase::SourceRelay,
            (false, true) => ActiveCase::RelaySource,
            (false, false) => ActiveCase::RelayRelay,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdbAnalyticResult {
    pub c11: f64,
    pub c12: f64,
    pub c21: f64,
    pub c22: f64,
    pub c_adb: f64,
    pub active_case: ActiveCase,
}

pub fn adb_closed_form(cfg: &AdbAnalyticConfig) -> Result<AdbAnalyticResult> {
    cfg.validate()?;
    let (l, m) = (cfg.relays, cfg.group_size);
    let c11 = c11_closed(cfg.p_s, m, cfg.sigma_g2)?;
    let c21 = c21_closed(cfg.p_s, l, m, cfg.sigma_g2)?;
    let c22 = c22_closed(cfg.p_r, m, cfg.sigma_h2)?;
    let c12 = c12_closed(cfg.p_r, l, m, cfg.sigma_h2)?;
    let c_adb = 0.5 * c11.min(c22) + 0.5 * c21.min(c12);
    Ok(AdbAnalyticResult {
        c11,
        c12,
        c21,
        c22,
        c_adb,
        active_case: ActiveCase::classify(c11, c12, c21, c22),
    })
}
