use std::path::Path;

use ablum::experiment::config::{load_config, ExperimentConfig, ScheduleSection, SweepParam, SweepSpec};
use ablum::experiment::run::{run_hysteresis, run_replicates, run_single, run_sweep};
use ablum::landscape::AftKind;
use proptest::prelude::*;

fn small(seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.name = "small".into();
    cfg.seed = seed;
    cfg.grid.width = 18;
    cfg.grid.height = 14;
    cfg.demand.demand_mat = 90.0;
    cfg.demand.demand_nm = 80.0;
    cfg
}

#[test]
fn every_preset_loads_and_builds() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("presets");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.build_state(cfg.seed).unwrap();
            if let Some(spec) = &cfg.sweep {
                spec.validate(&cfg).unwrap();
            }
            n += 1;
        }
    }
    assert!(n >= 8);
}

#[test]
fn regime_runs_settle_before_max_ticks() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("presets");
    let cfg = load_config(dir.join("regime_map.toml")).unwrap();
    let spec = SweepSpec {
        params: vec![
            SweepParam::parse("attitude_mean=-1:1:3").unwrap(),
            SweepParam::parse("norm_weight_w=0:1:3").unwrap(),
        ],
        replications: 20,
    };
    let result = run_sweep(&cfg, &spec, None).unwrap();
    let settled = result.records.iter().filter(|r| r.output.summary.stabilised_at.is_some()).count();
    assert!(settled as f64 >= 0.95 * result.records.len() as f64, "{settled} of {}", result.records.len());
}

#[test]
fn one_point_sweep_matches_single_run() {
    let cfg = small(9);
    let spec = SweepSpec {
        params: vec![SweepParam::parse("attitude_mean=0.2:0.2:1").unwrap()],
        replications: 2,
    };
    let result = run_sweep(&cfg, &spec, Some(2)).unwrap();
    assert_eq!(result.records.len(), 2);
    let mut point = cfg.clone();
    point.behaviour.attitude_mean = 0.2;
    for rec in &result.records {
        let single = run_single(&point, cfg.seed + rec.rep as u64, "x").unwrap();
        assert_eq!(rec.output.seed, cfg.seed + rec.rep as u64);
        assert_eq!(rec.output.trajectory, single.trajectory);
        assert_eq!(rec.output.grid, single.grid);
    }
}

#[test]
fn flat_schedule_matches_plain_run() {
    let mut cfg = small(2);
    cfg.behaviour.attitude_mean = -0.3;
    let plain = run_single(&cfg, 5, "p").unwrap();
    let window = cfg.run.window;
    cfg.schedule = Some(ScheduleSection {
        breakpoints: vec![(0, -0.3), (window, -0.3)],
    });
    let h = run_hysteresis(&cfg, 5, "h").unwrap();
    assert_eq!(h.run.trajectory.rows.len() as u64, window + 1);
    assert_eq!(&h.run.trajectory.rows[..], &plain.trajectory.rows[..=window as usize]);
    let csv = h.trajectory_csv();
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",-0.300000")));
}

#[test]
fn replicates_use_consecutive_seeds() {
    let mut cfg = small(40);
    cfg.replications = 3;
    let runs = run_replicates(&cfg, Some(3)).unwrap();
    let seeds: Vec<u64> = runs.iter().map(|r| r.seed).collect();
    assert_eq!(seeds, vec![40, 41, 42]);
    assert_eq!(runs[1].trajectory, run_single(&cfg, 41, "x").unwrap().trajectory);
}

#[test]
fn trajectory_rows_end_at_stabilisation() {
    for seed in 0..5 {
        let out = run_single(&small(seed), seed, "t").unwrap();
        match out.summary.stabilised_at {
            Some(t) => assert_eq!(out.trajectory.rows.len() as u64, t + 1),
            None => assert_eq!(out.trajectory.rows.len() as u64, out.summary.final_tick + 1),
        }
        assert_eq!(out.summary.final_shares, out.trajectory.rows.last().unwrap().shares);
    }
}

#[test]
fn gradient_mirror_is_a_reflection() {
    let mut cfg = small(3);
    cfg.capitals.layout = ablum::experiment::config::CapitalLayout::Gradient;
    let a = cfg.capital_fields(3).unwrap();
    let b = cfg.mirrored().capital_fields(3).unwrap();
    assert_eq!(a.c_prod, b.c_nat);
    assert_eq!(a.c_nat, b.c_prod);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mirrored_config_mirrors_initial_shares(c in 0.0f64..0.6, hi in 0.0f64..0.4) {
        let mut cfg = small(1);
        cfg.init.share_c = c;
        cfg.init.share_hi = hi;
        cfg.init.share_mi = 1.0 - c - hi;
        let m = cfg.mirrored().init.shares();
        prop_assert!((m.get(AftKind::Conservation) - hi).abs() < 1e-12);
        prop_assert!((m.get(AftKind::HighIntensity) - c).abs() < 1e-12);
        prop_assert!(cfg.mirrored().build_state(1).is_ok());
    }

    #[test]
    fn mirror_is_an_involution(a in -1.0f64..1.0, ci in 0.0f64..1.0, ce in 0.0f64..1.0, dm in 10.0f64..500.0) {
        let mut cfg = small(1);
        cfg.behaviour.attitude_mean = a;
        cfg.behaviour.cm_int = ci;
        cfg.behaviour.cm_ext = ce;
        cfg.demand.demand_mat = dm;
        let back = cfg.mirrored().mirrored();
        prop_assert_eq!(back.behaviour, cfg.behaviour);
        prop_assert_eq!(back.demand, cfg.demand);
        prop_assert_eq!(back.capitals, cfg.capitals);
    }

    #[test]
    fn final_shares_form_a_partition(seed in 0u64..500, a in -1.0f64..1.0, w in 0.0f64..1.0) {
        let mut cfg = small(seed);
        cfg.behaviour.attitude_mean = a;
        cfg.behaviour.norm_weight_w = w;
        let out = run_single(&cfg, seed, "p").unwrap();
        let s = out.summary.final_shares;
        prop_assert!((s.c() + s.mi() + s.hi() - 1.0).abs() < 1e-12);
        prop_assert!(out.mesh >= 1.0 && out.mesh <= (18 * 14) as f64);
    }
}
