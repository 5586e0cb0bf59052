//! Frozen values from validated runs (L=4, unit variances, SNR 10 dB).
//! Any change here means the random streams, kernels or optimizer moved.

use adb_relay::channel::{sample_slot, RngStream};
use adb_relay::*;

const SNR: f64 = 10.0;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs()
}

fn simulated_optimum(s: ProtocolKind) -> PowerSolution {
    let ch = ChannelParams::unit(4).unwrap();
    let budget = PowerBudget::new(SNR, s, 4).unwrap();
    maximize(
        &budget,
        |ps, pr| {
            let e = simulate(&SimConfig::new(s, ch, ps, pr).with_slots(200_000).with_seed(1))?;
            Ok(Evaluation { throughput: e.mean, std_error: e.std_error })
        },
        &MaximizeOptions::default(),
    )
    .unwrap()
}

fn adb_analytic(ps: f64, pr: f64) -> f64 {
    adb_closed_form(&AdbAnalyticConfig { relays: 4, group_size: 2, sigma_g2: 1.0, sigma_h2: 1.0, p_s: ps, p_r: pr })
        .unwrap()
        .c_adb
}

#[test]
fn sfd_mmrs_optimum() {
    let sol = simulated_optimum(ProtocolKind::SfdMmrs);
    assert!(close(sol.throughput, 2.9634142973877076), "{sol:?}");
    // hops are statistically identical, so the optimum balances the powers
    assert!((sol.p_s - sol.p_r).abs() < 0.05);
}

#[test]
fn df_optimum_and_direct_average() {
    let sol = simulated_optimum(ProtocolKind::Df);
    assert!(close(sol.throughput, 1.3041660972886997), "{sol:?}");

    // independent stream, formula written out
    let ch = ChannelParams::unit(4).unwrap();
    let stream = RngStream::new(77, 9);
    let n = 400_000u64;
    let (mut sum, mut sum2) = (0.0, 0.0);
    for i in 0..n {
        let s = sample_slot(ch, stream, i);
        let weakest = s.g.iter().map(|g| g * g).fold(f64::INFINITY, f64::min);
        let beam: f64 = s.h.iter().sum::<f64>().powi(2);
        let r = 0.5 * (1.0 + (sol.p_s * weakest).min(sol.p_r * beam)).log2();
        sum += r;
        sum2 += r * r;
    }
    let mean = sum / n as f64;
    let se = ((sum2 / n as f64 - mean * mean) / n as f64).sqrt();
    assert!((mean - sol.throughput).abs() < 4.0 * se.hypot(sol.std_error), "{mean} vs {}", sol.throughput);
}

#[test]
fn adb_analytic_optimum_is_interior() {
    let budget = PowerBudget::new(SNR, ProtocolKind::Adb, 4).unwrap();
    let sol = maximize(&budget, |ps, pr| Ok(Evaluation::exact(adb_analytic(ps, pr))), &MaximizeOptions::default()).unwrap();
    assert!(close(sol.throughput, 2.6667767560593965), "{sol:?}");
    assert!(sol.binding);
    let all_source = adb_analytic(SNR, 0.0);
    let all_relay = adb_analytic(0.0, budget.pr_from_ps(0.0).unwrap());
    assert!(sol.throughput > all_source && sol.throughput > all_relay);
}
