mod common;

use proptest::prelude::*;

use adb_relay::analytic::{adb_closed_form, beamforming_link_rate, c11_closed, AdbAnalyticConfig};
use adb_relay::channel::{sample_slot, ChannelParams, RngStream};
use adb_relay::power::PowerBudget;
use adb_relay::sim::{simulate, ProtocolKind, SimConfig};
use adb_relay::special::{exp_integral_e1, saa_cdf, scaled_exp_e1, SaaParams};

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

fn scheme() -> impl Strategy<Value = ProtocolKind> {
    prop_oneof![Just(ProtocolKind::Crs), Just(ProtocolKind::SfdMmrs), Just(ProtocolKind::Df), Just(ProtocolKind::Adb)]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn e1_matches_oracle(x in log_uniform(1e-6, 50.0)) {
        let got = exp_integral_e1(x).unwrap();
        prop_assert!((got - common::e1_oracle(x)).abs() <= 1e-10 * got.max(1.0));
    }

    #[test]
    fn e1_decreasing(x in log_uniform(1e-6, 600.0), k in 1.0001f64..3.0) {
        prop_assert!(exp_integral_e1(x * k).unwrap() < exp_integral_e1(x).unwrap());
    }

    #[test]
    fn scaled_e1_inside_bracket(x in log_uniform(1e-8, 1e12)) {
        let v = scaled_exp_e1(x).unwrap();
        prop_assert!(common::sign_of_product_minus_one(v, x, 1.0) > 0.0);
        prop_assert!(common::sign_of_product_minus_one(v, x, 0.0) < 0.0);
    }

    #[test]
    fn saa_cdf_monotone(m in 1u32..=20, t in 0.0f64..20.0, dt in 1e-6f64..1.0) {
        let p = SaaParams::new(m, 1.0).unwrap();
        let (a, b) = (saa_cdf(t, &p).unwrap(), saa_cdf(t + dt, &p).unwrap());
        prop_assert!((0.0..=1.0).contains(&a) && a <= b);
    }

    #[test]
    fn link_rates_match_quadrature(m in 1usize..=6, p in log_uniform(1e-3, 1e4)) {
        let source = c11_closed(p, m, 1.0).unwrap();
        prop_assert!((source - common::exp_rate_oracle(p, 2.0 / m as f64)).abs() <= 1e-9);
        let relay = beamforming_link_rate(p, m, 1.0).unwrap();
        prop_assert!((relay - common::beamforming_rate_oracle(p, m as u32, 1.0)).abs() <= 1e-8);
    }

    #[test]
    fn beamforming_beats_single_relay(m in 2usize..=12, p in log_uniform(1e-3, 1e4)) {
        // a group can only add amplitude
        prop_assert!(beamforming_link_rate(p, m, 1.0).unwrap() >= beamforming_link_rate(p, 1, 1.0).unwrap());
    }

    #[test]
    fn adb_bounded_by_links(l in 2usize..=12, pick in 0.0f64..1.0, ps in log_uniform(1e-2, 1e4), pr in log_uniform(1e-2, 1e4)) {
        let m = 1 + ((l - 1) as f64 * pick) as usize % (l - 1);
        let r = adb_closed_form(&AdbAnalyticConfig { relays: l, group_size: m, sigma_g2: 1.0, sigma_h2: 1.0, p_s: ps, p_r: pr }).unwrap();
        prop_assert!(r.c_adb >= 0.0);
        prop_assert!(r.c_adb <= 0.5 * (r.c11 + r.c21) + 1e-12);
        prop_assert!(r.c_adb <= 0.5 * (r.c22 + r.c12) + 1e-12);
    }

    #[test]
    fn ratio_split_tight(s in scheme(), l in 2usize..=16, snr in log_uniform(1e-2, 1e5), ratio in log_uniform(1e-3, 1e3)) {
        let b = PowerBudget::new(snr, s, l).unwrap();
        let (ps, pr) = b.split_for_ratio(ratio).unwrap();
        prop_assert!(b.is_tight(ps, pr, 1e-12));
        prop_assert!(b.admits(ps, pr, 1e-12));
    }

    #[test]
    fn slot_replay(seed in any::<u64>(), stream in 0u64..4, l in 1usize..=8, idx in 0u64..1_000_000) {
        let p = ChannelParams::unit(l).unwrap();
        let s = RngStream::new(seed, stream);
        prop_assert_eq!(sample_slot(p, s, idx), sample_slot(p, s, idx));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn simulation_independent_of_workers(s in scheme(), seed in any::<u64>(), workers in 2usize..=6) {
        let cfg = SimConfig::new(s, ChannelParams::unit(4).unwrap(), 3.0, 2.0).with_slots(40_000).with_seed(seed);
        prop_assert_eq!(simulate(&cfg).unwrap(), simulate(&cfg.with_workers(workers)).unwrap());
    }
}
