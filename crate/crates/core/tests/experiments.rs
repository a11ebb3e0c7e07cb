mod common;

use memdie::array::CellAddress;
use memdie::experiments::{
    self, BerExperiment, Endurance, EnduranceSweep, Pattern, ProgrammingCondition, ProgressiveReset, Recipe,
};
use memdie::{Die, SimConfig};

use common::{parse_csv, small};

#[test]
fn csv_schemas() {
    let cfg = small(SimConfig::default(), 2, 2);
    let cases = [
        ("progressive-reset", vec!["n_pulses=300"], "pulse_index,resistance"),
        ("endurance", vec!["max_cycles=1000"], "cycle,r_lrs,r_hrs,ber_window"),
        ("endurance-sweep", vec!["devices=20"], "v_prog,t_prog,median_endurance"),
        ("ber", vec!["n_reads=2"], "addr,errors,trials,errors_1t1r"),
    ];
    for (name, sets, header) in cases {
        let r = experiments::configured_recipe(name, sets.iter().copied()).unwrap();
        let csv = r.run_csv(&cfg, 1).unwrap();
        assert_eq!(csv.lines().next(), Some(header), "{name}");
        assert!(csv.ends_with('\n'));
        let (_, rows) = parse_csv(&csv);
        assert!(!rows.is_empty());
    }
}

#[test]
fn forced_budget_collapses_within_a_decade() {
    // Spread 0 pins every budget at exactly 10^3 cycles.
    let mut cfg = small(SimConfig::default(), 1, 1);
    cfg.device.endurance.log10_endurance_at_vref = 3.0;
    cfg.device.endurance.spread_decades = 0.0;
    for seed in 0..5 {
        let mut die = Die::new(cfg, seed).unwrap();
        let rows = Endurance { max_cycles: 100_000, ..Default::default() }.run(&mut die).unwrap();
        let collapse = rows.iter().find(|r| r.r_hrs / r.r_lrs < 2.0).map(|r| r.cycle).unwrap();
        assert!((1_000..=10_000).contains(&collapse), "seed {seed}: collapse at {collapse}");
        assert!(rows.iter().filter(|r| r.cycle <= 1_000).all(|r| r.r_hrs / r.r_lrs > 5.0));
    }
}

#[test]
fn ber_column_non_decreasing_after_onset() {
    // Pool the probe errors of independent cells so that each checkpoint's
    // BER is a binomial estimate over many reads.
    let cfg = small(SimConfig::desk_endurance(), 1, 1);
    let recipe = Endurance { max_cycles: 10_000_000, ..Default::default() };
    let mut pooled: Vec<(u64, f64)> = Vec::new();
    let seeds = 30;
    for seed in 0..seeds {
        let mut die = Die::new(cfg, seed).unwrap();
        let rows = recipe.run(&mut die).unwrap();
        if pooled.is_empty() {
            pooled = rows.iter().map(|r| (r.cycle, 0.0)).collect();
        }
        for (p, r) in pooled.iter_mut().zip(&rows) {
            p.1 += r.ber_window / seeds as f64;
        }
    }
    let n = (seeds as usize * recipe.probe_reads) as f64;
    let onset = pooled.iter().position(|p| p.1 > 0.0).expect("no bit errors at all");
    for w in pooled[onset..].windows(2) {
        let (p0, p1) = (w[0].1, w[1].1);
        let sigma = (p0 * (1.0 - p0) / n + p1 * (1.0 - p1) / n).sqrt();
        assert!(p1 >= p0 - 2.0 * sigma, "BER fell from {p0} at {} to {p1} at {}", w[0].0, w[1].0);
    }
}

#[test]
fn sweep_orders_medians_by_overdrive() {
    let cfg = SimConfig::default();
    let profiles = vec![
        ProgrammingCondition { v_prog: 2.2, t_prog: 1e-6 },
        ProgrammingCondition { v_prog: 2.6, t_prog: 1e-6 },
    ];
    let rows = EnduranceSweep { profiles, devices_per_profile: 200 }.run(&cfg, 3).unwrap();
    assert!(cfg.device.endurance.endurance_voltage_slope < 0.0);
    assert!(rows[0].median_endurance > rows[1].median_endurance);

    // Direct sampling oracle: median of log10 budgets sits at the model mean.
    for r in &rows {
        let mut logs: Vec<f64> = r.limits.iter().map(|l| (*l as f64).log10()).collect();
        logs.sort_by(f64::total_cmp);
        let m = logs[logs.len() / 2];
        let expected = cfg.device.endurance.mean_log10(r.condition.v_prog);
        // Median standard error 1.2533 * 0.25 / sqrt(200) = 0.022 decades.
        assert!((m - expected).abs() < 0.1, "median log10 {m} vs {expected}");
    }
}

#[test]
fn identical_profiles_agree_within_sampling_noise() {
    let p = ProgrammingCondition { v_prog: 2.4, t_prog: 1e-6 };
    let rows = EnduranceSweep { profiles: vec![p, p], devices_per_profile: 2000 }
        .run(&SimConfig::default(), 11)
        .unwrap();
    assert_ne!(rows[0].limits, rows[1].limits, "profiles must draw independent devices");
    let diff = (rows[0].median_endurance.log10() - rows[1].median_endurance.log10()).abs();
    // 4 sigma of the difference of two medians: 4 * sqrt(2) * 1.2533 * 0.25 / sqrt(2000).
    assert!(diff < 0.04, "medians differ by {diff} decades");
}

#[test]
fn default_sweep_medians_within_endurance_bounds() {
    let rows = EnduranceSweep::default().run(&SimConfig::default(), 1).unwrap();
    for r in rows {
        assert!((1e3..=1e9).contains(&r.median_endurance), "{:?}", r.condition);
    }
}

#[test]
fn ber_noise_off_fresh_array_is_error_free() {
    let mut die = Die::new(small(SimConfig::noiseless(), 8, 8), 1).unwrap();
    let rows = BerExperiment { pattern: Pattern::Random, n_reads: 10 }.run(&mut die).unwrap();
    assert_eq!(rows.len(), 64);
    assert!(rows.iter().all(|r| r.errors == 0 && r.errors_1t1r == 0 && r.trials == 10));
}

#[test]
fn ber_forced_degradation_cell_flips_coins() {
    let mut die = Die::new(small(SimConfig::default(), 4, 4), 2).unwrap();
    let exp = BerExperiment { pattern: Pattern::Checkerboard, n_reads: 4000 };
    let bits = exp.prepare(&mut die).unwrap();
    let bad = CellAddress::new(2, 1);
    let cell = die.array_mut().cell_mut(bad).unwrap();
    cell.dev_bl.degradation = 1.0;
    cell.dev_blb.degradation = 1.0;
    let rows = exp.measure(&mut die, &bits).unwrap();
    for r in rows {
        if r.addr == bad {
            let p = r.errors as f64 / r.trials as f64;
            assert!((p - 0.5).abs() < 0.05, "degraded cell error rate {p}");
        } else {
            assert_eq!(r.errors, 0, "{}", r.addr);
        }
    }
}

#[test]
fn two_t_two_r_never_worse_than_reference_sensing() {
    let mut cfg = small(SimConfig::default(), 16, 16);
    cfg.device.sigma_d2d = 0.5;
    for seed in 0..4 {
        let mut die = Die::new(cfg, seed).unwrap();
        let rows = BerExperiment { pattern: Pattern::Random, n_reads: 40 }.run(&mut die).unwrap();
        let e2: u64 = rows.iter().map(|r| r.errors).sum();
        let e1: u64 = rows.iter().map(|r| r.errors_1t1r).sum();
        assert!(e2 <= e1, "seed {seed}: {e2} > {e1}");
    }
}

#[test]
fn progressive_reset_set_and_reset_trains() {
    let cfg = small(SimConfig::noiseless(), 2, 2);
    let mut r = ProgressiveReset { n_pulses: 400, read_every: 100, ..Default::default() };
    let csv = r.run_csv(&cfg, 1).unwrap();
    let (_, rows) = parse_csv(&csv);
    assert_eq!(rows.iter().map(|r| r[0]).collect::<Vec<_>>(), vec![0.0, 100.0, 200.0, 300.0, 400.0]);
    // A SET train on an LRS device keeps it at LRS.
    r.set("kind", "set").unwrap();
    r.set("amplitude", "2.0").unwrap();
    let (_, rows) = parse_csv(&r.run_csv(&cfg, 1).unwrap());
    assert!(rows.iter().all(|x| (x[1] - 1e4).abs() < 1.0), "{rows:?}");
}
