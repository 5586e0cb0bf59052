//! Quick oracle checks behind the `selftest` subcommand.
//!
//! Each check compares a library routine against an independent route to
//! the same number (series, quadrature, or a bracketing identity).

use std::f64::consts::LN_2;

use crate::analytic::{beamforming_link_rate, c11_closed};
use crate::quad::{integrate, integrate_to_infinity};
use crate::special::{exp_integral_e1, saa_cdf, saa_pdf, scaled_exp_e1, SaaParams, EULER_GAMMA};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

fn outcome(name: &'static str, worst: f64, tol: f64) -> CheckOutcome {
    CheckOutcome { name, passed: worst <= tol, detail: format!("max error {worst:.3e} (tol {tol:.0e})") }
}

/// `E1(x) = -gamma - ln x - sum_k (-x)^k / (k k!)`, fine for `x <= 2`.
fn e1_series(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..200 {
        term *= -x / k as f64;
        sum += term / k as f64;
        if term.abs() < 1e-18 {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

/// `E1(x) = e^-x int_0^inf e^-u / (u + x) du`.
fn e1_quadrature(x: f64) -> f64 {
    (-x).exp() * integrate_to_infinity(|u| (-u).exp() / (u + x), 0.0, 1e-14)
}

fn check_e1() -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for i in 0..=200 {
        let x = 1e-6 * (5e7f64).powf(i as f64 / 200.0);
        let reference = if x <= 2.0 { e1_series(x) } else { e1_quadrature(x) };
        let got = exp_integral_e1(x).unwrap_or(f64::NAN);
        worst = worst.max((got - reference).abs());
    }
    outcome("exp_integral_e1", worst, 1e-10)
}

fn check_scaled_bracket() -> CheckOutcome {
    let mut bad = 0usize;
    for i in 0..1000 {
        let x = 1e-6 * (1e14f64).powf(i as f64 / 999.0);
        let v = scaled_exp_e1(x).unwrap_or(f64::NAN);
        if !(v < 1.0 / x && v * (x + 1.0) > 1.0 - 4.0 * f64::EPSILON) {
            bad += 1;
        }
    }
    CheckOutcome {
        name: "scaled_exp_e1 bracket",
        passed: bad == 0,
        detail: format!("{bad} of 1000 points outside (1/(x+1), 1/x)"),
    }
}

fn check_saa_cdf() -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for m in 1..=8u32 {
        let p = match SaaParams::new(m, 1.0) {
            Ok(p) => p,
            Err(_) => return outcome("SAA CDF vs integrated PDF", f64::INFINITY, 1e-8),
        };
        for &t in &[0.3, 1.0, 2.0, 4.0, 7.0] {
            let integral = integrate(|u| saa_pdf(u, &p).unwrap_or(f64::NAN), 0.0, t, 1e-13);
            let cdf = saa_cdf(t, &p).unwrap_or(f64::NAN);
            worst = worst.max((cdf - integral).abs());
        }
    }
    outcome("SAA CDF vs integrated PDF", worst, 1e-8)
}

fn check_beamforming() -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for m in 1..=5usize {
        let p = SaaParams::new(m as u32, 1.0).expect("valid SAA parameters");
        for &p_r in &[0.05, 1.0, 20.0, 500.0] {
            let f = |t: f64| (p_r * m as f64 * t * t).ln_1p() / LN_2 * saa_pdf(t, &p).unwrap_or(f64::NAN);
            let reference = integrate_to_infinity(f, 0.0, 1e-12);
            let got = beamforming_link_rate(p_r, m, 1.0).unwrap_or(f64::NAN);
            worst = worst.max((got - reference).abs());
        }
    }
    outcome("beamforming rate vs quadrature", worst, 1e-8)
}

fn check_source_link() -> CheckOutcome {
    // min of m exponentials with mean 2 is exponential with mean 2/m
    let mut worst: f64 = 0.0;
    for m in 1..=3usize {
        for &p_s in &[0.5, 4.0, 50.0] {
            let rate = 2.0 / m as f64;
            let f = |z: f64| (p_s * z).ln_1p() / LN_2 * (-z / rate).exp() / rate;
            let reference = integrate_to_infinity(f, 0.0, 1e-12);
            let got = c11_closed(p_s, m, 1.0).unwrap_or(f64::NAN);
            worst = worst.max((got - reference).abs());
        }
    }
    outcome("source link rate vs quadrature", worst, 1e-8)
}

/// Runs every check; the caller decides how to report failures.
pub fn run_all() -> Vec<CheckOutcome> {
    vec![check_e1(), check_scaled_bracket(), check_saa_cdf(), check_beamforming(), check_source_link()]
}
