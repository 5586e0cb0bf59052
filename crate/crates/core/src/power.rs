//! Total-power budgets per scheme and the search for the best power split.
//!
//! Budgets, with `P = snr_total` (linear):
//!
//! | scheme   | constraint                 |
//! |----------|----------------------------|
//! | ADB      | `p_s + (L/2) p_r <= P`     |
//! | SFD-MMRS | `p_s + L p_r <= P`         |
//! | CRS, DF  | `(p_s + L p_r) / 2 <= P`   |
//!
//! Throughput is nondecreasing in each power, so the search runs along the
//! budget-tight line, parametrized by `rho = p_s / p_s_cap` in `(0, 1)`.

use crate::error::{Error, Result};
use crate::sim::ProtocolKind;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBudget {
    pub snr_total: f64,
    pub scheme: ProtocolKind,
    pub relays: usize,
}

impl PowerBudget {
    pub fn new(snr_total: f64, scheme: ProtocolKind, relays: usize) -> Result<Self> {
        if !(snr_total > 0.0 && snr_total.is_finite()) {
            return Err(Error::config("snr", format!("total power must be positive, got {snr_total}")));
        }
        if relays == 0 {
            return Err(Error::config("relays", "relay count must be at least 1"));
        }
        Ok(PowerBudget { snr_total, scheme, relays })
    }

    /// Largest admissible source power (all power to the source).
    pub fn ps_cap(&self) -> f64 {
        match self.scheme {
            ProtocolKind::Adb | ProtocolKind::SfdMmrs => self.snr_total,
            ProtocolKind::Crs | ProtocolKind::Df => 2.0 * self.snr_total,
        }
    }

    /// Weight of `p_r` when the constraint is written as `p_s + w p_r <= ps_cap`.
    fn relay_weight(&self) -> f64 {
        match self.scheme {
            ProtocolKind::Adb => self.relays as f64 / 2.0,
            _ => self.relays as f64,
        }
    }

    /// Left-hand side of the scheme's constraint, comparable to `snr_total`.
    pub fn spent(&self, p_s: f64, p_r: f64) -> f64 {
        let l = self.relays as f64;
        match self.scheme {
            ProtocolKind::Adb => p_s + 0.5 * l * p_r,
            ProtocolKind::SfdMmrs => p_s + l * p_r,
            ProtocolKind::Crs | ProtocolKind::Df => 0.5 * (p_s + l * p_r),
        }
    }

    /// Budget satisfied, allowing `rel_tol` relative slack for rounding.
    pub fn admits(&self, p_s: f64, p_r: f64, rel_tol: f64) -> bool {
        p_s >= 0.0 && p_r >= 0.0 && self.spent(p_s, p_r) <= self.snr_total * (1.0 + rel_tol)
    }

    /// Budget holds with equality to within `rel_tol`.
    pub fn is_tight(&self, p_s: f64, p_r: f64, rel_tol: f64) -> bool {
        (self.spent(p_s, p_r) - self.snr_total).abs() <= rel_tol * self.snr_total
    }

    /// Relay power that exhausts the budget for a given source power.
    pub fn pr_from_ps(&self, p_s: f64) -> Result<f64> {
        let cap = self.ps_cap();
        if !(p_s >= 0.0 && p_s <= cap) {
            return Err(Error::Domain(format!("p_s={p_s} outside [0, {cap}] for {}", self.scheme)));
        }
        Ok(((cap - p_s) / self.relay_weight()).max(0.0))
    }

    /// Budget-tight `(p_s, p_r)` with `p_s / p_r = ratio`.
    pub fn split_for_ratio(&self, ratio: f64) -> Result<(f64, f64)> {
        if !(ratio > 0.0 && ratio.is_finite()) {
            return Err(Error::Domain(format!("power ratio must be positive and finite, got {ratio}")));
        }
        let p_r = self.ps_cap() / (ratio + self.relay_weight());
        Ok((ratio * p_r, p_r))
    }

    fn point(&self, rho: f64) -> Result<(f64, f64)> {
        let p_s = rho * self.ps_cap();
        Ok((p_s, self.pr_from_ps(p_s)?))
    }
}

/// One evaluator output. `std_error` is zero for exact evaluators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub throughput: f64,
    pub std_error: f64,
}

impl Evaluation {
    pub fn exact(throughput: f64) -> Self {
        Evaluation { throughput, std_error: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaximizeOptions {
    /// Coarse grid size over `rho`.
    pub grid_points: usize,
    /// Golden-section stops once the bracket in `rho` is this narrow.
    pub rho_tolerance: f64,
    /// Noisy evaluators: stop when the two probes differ by less than this
    /// many combined standard errors.
    pub noise_sigmas: f64,
    pub max_iterations: usize,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        MaximizeOptions { grid_points: 64, rho_tolerance: 1e-4, noise_sigmas: 2.0, max_iterations: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSolution {
    pub p_s: f64,
    pub p_r: f64,
    pub rho: f64,
    pub throughput: f64,
    pub std_error: f64,
    pub evaluations: usize,
    pub binding: bool,
}

#[derive(Clone, Copy)]
struct Probe {
    rho: f64,
    p_s: f64,
    p_r: f64,
    eval: Evaluation,
}

/// Maximizes `evaluator(p_s, p_r)` over the budget-tight line.
///
/// A coarse grid locates the best cell; golden-section search then refines
/// inside the two neighbouring cells. The best point seen anywhere is
/// returned. The objective is not assumed unimodal beyond that bracket.
pub fn maximize<F>(budget: &PowerBudget, mut evaluator: F, opts: &MaximizeOptions) -> Result<PowerSolution>
where
    F: FnMut(f64, f64) -> Result<Evaluation>,
{
    if opts.grid_points == 0 {
        return Err(Error::config("grid_points", "need at least one grid point"));
    }
    let mut evaluations = 0usize;
    let mut probe = |rho: f64| -> Result<Probe> {
        let (p_s, p_r) = budget.point(rho)?;
        let eval = evaluator(p_s, p_r)?;
        evaluations += 1;
        Ok(Probe { rho, p_s, p_r, eval })
    };

    let g = opts.grid_points;
    let step = 1.0 / (g + 1) as f64;
    let mut best: Option<Probe> = None;
    let mut best_idx = 0usize;
    for i in 1..=g {
        let p = probe(i as f64 * step)?;
        if best.as_ref().is_none_or(|b| p.eval.throughput > b.eval.throughput) {
            best = Some(p);
            best_idx = i;
        }
    }
    let mut best = best.expect("grid has at least one point");

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = ((best_idx - 1) as f64 * step, (best_idx + 1) as f64 * step);
    let mut c = probe(b - inv_phi * (b - a))?;
    let mut d = probe(a + inv_phi * (b - a))?;
    for _ in 0..opts.max_iterations {
        for p in [&c, &d] {
            if p.eval.throughput > best.eval.throughput {
                best = *p;
            }
        }
        if b - a <= opts.rho_tolerance {
            break;
        }
        let noise = (c.eval.std_error.powi(2) + d.eval.std_error.powi(2)).sqrt();
        if noise > 0.0 && (c.eval.throughput - d.eval.throughput).abs() < opts.noise_sigmas * noise {
            break;
        }
        if c.eval.throughput >= d.eval.throughput {
            b = d.rho;
            d = c;
            c = probe(b - inv_phi * (b - a))?;
        } else {
            a = c.rho;
            c = d;
            d = probe(a + inv_phi * (b - a))?;
        }
    }

    Ok(PowerSolution {
        p_s: best.p_s,
        p_r: best.p_r,
        rho: best.rho,
        throughput: best.eval.throughput,
        std_error: best.eval.std_error,
        evaluations,
        binding: budget.is_tight(best.p_s, best.p_r, 1e-12),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tight_line_examples() {
        let adb = PowerBudget::new(10.0, ProtocolKind::Adb, 4).unwrap();
        assert_eq!(adb.pr_from_ps(2.0).unwrap(), 4.0);
        let sfd = PowerBudget::new(10.0, ProtocolKind::SfdMmrs, 4).unwrap();
        assert_eq!(sfd.pr_from_ps(2.0).unwrap(), 2.0);
        let crs = PowerBudget::new(10.0, ProtocolKind::Crs, 4).unwrap();
        assert_eq!(crs.pr_from_ps(4.0).unwrap(), 4.0);
        assert!(adb.pr_from_ps(10.5).is_err());
        assert!(adb.pr_from_ps(-0.1).is_err());
        assert_eq!(crs.pr_from_ps(20.0).unwrap(), 0.0);
    }

    #[test]
    fn ratio_split_is_tight() {
        for scheme in ProtocolKind::ALL {
            let b = PowerBudget::new(10.0, scheme, 4).unwrap();
            let (ps, pr) = b.split_for_ratio(2.5).unwrap();
            assert!((ps / pr - 2.5).abs() < 1e-12);
            assert!(b.is_tight(ps, pr, 1e-12));
        }
        let b = PowerBudget::new(10.0, ProtocolKind::Adb, 4).unwrap();
        assert!(b.split_for_ratio(0.0).is_err());
    }

    #[test]
    fn min_objective_meets_at_equal_powers() {
        let b = PowerBudget::new(10.0, ProtocolKind::Adb, 4).unwrap();
        let sol = maximize(&b, |ps, pr| Ok(Evaluation::exact(ps.min(pr))), &MaximizeOptions::default()).unwrap();
        assert!((sol.p_s - 10.0 / 3.0).abs() < 1e-3, "{sol:?}");
        assert!((sol.throughput - 10.0 / 3.0).abs() < 1e-3);
        assert!(sol.binding);
    }

    #[test]
    fn constant_objective() {
        let b = PowerBudget::new(3.0, ProtocolKind::Df, 6).unwrap();
        let sol = maximize(&b, |_, _| Ok(Evaluation::exact(1.25)), &MaximizeOptions::default()).unwrap();
        assert_eq!(sol.throughput, 1.25);
        assert!(sol.binding);
    }

    #[test]
    fn evaluator_error_propagates() {
        let b = PowerBudget::new(3.0, ProtocolKind::Df, 6).unwrap();
        let r = maximize(&b, |_, _| Err(Error::domain("boom")), &MaximizeOptions::default());
        assert!(r.is_err());
    }

    #[test]
    fn noisy_evaluator_stops_early() {
        let b = PowerBudget::new(10.0, ProtocolKind::Adb, 4).unwrap();
        let opts = MaximizeOptions::default();
        let exact = maximize(&b, |ps, pr| Ok(Evaluation::exact(ps.min(pr))), &opts).unwrap();
        let noisy = maximize(&b, |ps, pr| Ok(Evaluation { throughput: ps.min(pr), std_error: 0.05 }), &opts).unwrap();
        assert!(noisy.evaluations < exact.evaluations);
    }
}
