use adb_relay::experiments::{run, spec_from_parts, ExperimentKind, Overrides, ResultRow};
use adb_relay::power::PowerBudget;
use adb_relay::sim::ProtocolKind;

fn spec(kind: ExperimentKind, flags: Overrides) -> adb_relay::ExperimentSpec {
    spec_from_parts(kind, "", &flags).unwrap()
}

fn scheme_of(r: &ResultRow) -> ProtocolKind {
    r.scheme.parse().unwrap()
}

fn check_rows(rows: &[ResultRow]) {
    for r in rows {
        let budget = PowerBudget::new(r.snr_total, scheme_of(r), r.relays).unwrap();
        assert!(budget.admits(r.p_s, r.p_r, 1e-9), "{r:?}");
        match r.estimator.as_str() {
            "analytic" => assert!(r.std_error == 0.0 && r.n_slots == 0),
            "simulated" => assert!(r.std_error > 0.0 && r.n_slots > 0),
            e => panic!("unknown estimator {e}"),
        }
    }
}

#[test]
fn single_snr_single_scheme_is_binding() {
    let s = spec(
        ExperimentKind::SnrSweep,
        Overrides { grid: Some("10".into()), schemes: Some("sfd-mmrs".into()), slots: Some(4000), ..Default::default() },
    );
    let out = run(&s).unwrap();
    assert_eq!(out.rows.len(), 1);
    let r = &out.rows[0];
    let budget = PowerBudget::new(r.snr_total, ProtocolKind::SfdMmrs, 4).unwrap();
    assert!(budget.is_tight(r.p_s, r.p_r, 1e-12));
    check_rows(&out.rows);
}

#[test]
fn adb_cmax_nondecreasing_in_snr() {
    let s = spec(ExperimentKind::SnrSweep, Overrides { schemes: Some("adb".into()), analytic_only: true, ..Default::default() });
    let out = run(&s).unwrap();
    assert_eq!(out.rows.len(), 7);
    assert!(out.rows.windows(2).all(|w| w[1].throughput >= w[0].throughput));
}

#[test]
fn ratio_sweep_adb_is_unimodal() {
    let s = spec(ExperimentKind::RatioSweep, Overrides { schemes: Some("adb".into()), slots: Some(100_000), ..Default::default() });
    let out = run(&s).unwrap();
    check_rows(&out.rows);
    let sim: Vec<&ResultRow> = out.rows.iter().filter(|r| r.estimator == "simulated").collect();
    assert_eq!(sim.len(), 21);
    let peak = (0..sim.len()).max_by(|&a, &b| sim[a].throughput.total_cmp(&sim[b].throughput)).unwrap();
    assert!(peak > 0 && peak < 20, "peak at the boundary: {peak}");
    for (i, w) in sim.windows(2).enumerate() {
        let noise = 2.0 * w[0].std_error.hypot(w[1].std_error);
        if i < peak {
            assert!(w[1].throughput >= w[0].throughput - noise, "dip before the peak at {i}");
        } else {
            assert!(w[1].throughput <= w[0].throughput + noise, "rise after the peak at {i}");
        }
    }
}

#[test]
fn grouping_with_two_relays_has_one_row() {
    let s = spec(ExperimentKind::GroupingSweep, Overrides { relays: Some(2), analytic_only: true, ..Default::default() });
    let out = run(&s).unwrap();
    assert_eq!(out.rows.len(), 1);
    assert_eq!(out.rows[0].group_size, Some(1));
}

#[test]
fn grouping_is_symmetric_in_m() {
    let s = spec(ExperimentKind::GroupingSweep, Overrides { analytic_only: true, ..Default::default() });
    let v: Vec<f64> = run(&s).unwrap().rows.iter().map(|r| r.throughput).collect();
    assert_eq!(v.len(), 5);
    for m in 0..5 {
        assert!((v[m] - v[4 - m]).abs() <= 1e-12 * v[m]);
    }
}

#[test]
fn grouping_snr_axis() {
    let s = spec_from_parts(ExperimentKind::GroupingSweep, r#"{"snr_grid_db": [5, 15], "analytic_only": true}"#, &Overrides::default())
        .unwrap();
    let out = run(&s).unwrap();
    assert_eq!(out.rows.len(), 10);
    assert!(out.rows[..5].iter().all(|r| r.snr_total < out.rows[5].snr_total));
}

#[test]
fn relay_grid_of_two_gives_one_row_per_scheme() {
    let s = spec(ExperimentKind::RelayCountSweep, Overrides { grid: Some("2".into()), slots: Some(4000), ..Default::default() });
    let out = run(&s).unwrap();
    check_rows(&out.rows);
    let sim: Vec<&str> = out.rows.iter().filter(|r| r.estimator == "simulated").map(|r| r.scheme.as_str()).collect();
    assert_eq!(sim, ["CRS", "SFD-MMRS", "DF", "ADB"]);
    assert_eq!(out.rows.len(), 5);
}

#[test]
fn point_with_fixed_ratio() {
    let s = spec(ExperimentKind::SinglePoint, Overrides { ratio: Some(2.0), slots: Some(4000), ..Default::default() });
    let out = run(&s).unwrap();
    check_rows(&out.rows);
    for r in &out.rows {
        assert!((r.p_s / r.p_r - 2.0).abs() < 1e-12);
    }
}

#[test]
fn workers_do_not_change_rows() {
    let base = Overrides { grid: Some("0.5,1,2".into()), slots: Some(8000), ..Default::default() };
    let a = run(&spec(ExperimentKind::RatioSweep, base.clone())).unwrap();
    let b = run(&spec(ExperimentKind::RatioSweep, Overrides { workers: Some(3), ..base })).unwrap();
    assert_eq!(a, b);
}
