//! Reference implementations used only by the tests. Nothing here calls
//! the routine it is used to check.
#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, LN_2};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn refine<G: Fn(f64) -> f64>(sum_at: G, tol: f64) -> f64 {
    let mut h = 0.125;
    let mut prev = sum_at(h);
    for _ in 0..8 {
        h *= 0.5;
        let next = sum_at(h);
        if (next - prev).abs() <= tol * next.abs().max(1e-300) {
            return next;
        }
        prev = next;
    }
    prev
}

/// Tanh-sinh quadrature on a finite interval.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    refine(
        |h| {
            let n = (4.0 / h) as i64;
            let mut s = 0.0;
            for k in -n..=n {
                let t = k as f64 * h;
                let u = FRAC_PI_2 * t.sinh();
                let w = FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
                let x = c + r * u.tanh();
                let v = f(x);
                if v.is_finite() && x > a && x < b {
                    s += w * v;
                }
            }
            r * h * s
        },
        1e-15,
    )
}

/// Exp-sinh quadrature of `int_a^inf f`.
pub fn exp_sinh<F: Fn(f64) -> f64>(f: F, a: f64) -> f64 {
    refine(
        |h| {
            let n = (4.5 / h) as i64;
            let mut s = 0.0;
            for k in -n..=n {
                let t = k as f64 * h;
                let e = (FRAC_PI_2 * t.sinh()).exp();
                let w = FRAC_PI_2 * t.cosh() * e;
                let v = f(a + e);
                if v.is_finite() && w.is_finite() {
                    s += w * v;
                }
            }
            h * s
        },
        1e-15,
    )
}

/// `E1(x)` from the alternating power series (x < 1) or from
/// `e^-x int_0^inf e^-u / (u + x) du` (x >= 1).
pub fn e1_oracle(x: f64) -> f64 {
    if x < 1.0 {
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..60 {
            term *= -x / k as f64;
            sum += term / k as f64;
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        (-x).exp() * exp_sinh(|u| (-u).exp() / (u + x), 0.0)
    }
}

/// Sign of `v * y - 1`, computed exactly for `y = x + c` with `c` in {0, 1}.
pub fn sign_of_product_minus_one(v: f64, x: f64, c: f64) -> f64 {
    // two-sum for y = x + c
    let y = x + c;
    let bb = y - x;
    let err = (x - (y - bb)) + (c - bb);
    let p = v * y;
    let pe = v.mul_add(y, -p);
    let r = (p - 1.0) + (pe + v * err);
    r.signum() * f64::from(r != 0.0)
}

/// `b = sigma^2 / m * ((2m-1)!!)^(1/m)` by direct product.
pub fn saa_b(m: u32, sigma2: f64) -> f64 {
    let mut ln_df = 0.0;
    for j in 1..=m {
        ln_df += ((2 * j - 1) as f64).ln();
    }
    sigma2 / m as f64 * (ln_df / m as f64).exp()
}

/// SAA density `2 t^(2m-1) exp(-t^2 / 2b) / ((2b)^m (m-1)!)`.
pub fn saa_pdf_oracle(t: f64, m: u32, sigma2: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let b = saa_b(m, sigma2);
    let mut fact = 1.0;
    for j in 1..m {
        fact *= j as f64;
    }
    2.0 * t.powi(2 * m as i32 - 1) * (-t * t / (2.0 * b)).exp() / ((2.0 * b).powi(m as i32) * fact)
}

/// `E[log2(1 + p m t^2)]` under the SAA law, by quadrature.
pub fn beamforming_rate_oracle(p_r: f64, m: u32, sigma2: f64) -> f64 {
    let b = saa_b(m, sigma2);
    // integrate in y = t^2 / 2b, where the density is Gamma(m, 1)
    let mut fact = 1.0;
    for j in 1..m {
        fact *= j as f64;
    }
    exp_sinh(
        |y| {
            let dens = y.powi(m as i32 - 1) * (-y).exp() / fact;
            (p_r * m as f64 * 2.0 * b * y).ln_1p() / LN_2 * dens
        },
        0.0,
    )
}

/// `E[log2(1 + p X)]` for `X ~ Exp(mean)`, by quadrature.
pub fn exp_rate_oracle(p: f64, mean: f64) -> f64 {
    exp_sinh(|z| (p * z).ln_1p() / LN_2 * (-z / mean).exp() / mean, 0.0)
}

/// Best weaker-hop SNR over all distinct `(rx, tx)` pairs, by exhaustion.
pub fn sfd_best_pair_value(g: &[f64], h: &[f64], p_s: f64, p_r: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for rx in 0..g.len() {
        for tx in 0..h.len() {
            if rx != tx {
                best = best.max((p_s * g[rx] * g[rx]).min(p_r * h[tx] * h[tx]));
            }
        }
    }
    best
}

/// Kolmogorov distance between sorted samples and a CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Welford mean and standard error.
#[derive(Default, Clone, Copy, Debug)]
pub struct Stats {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Stats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn std_error(&self) -> f64 {
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}
