use beamsteer::experiments::{ConfigOverrides, SystemConfig};
use beamsteer::rate_engine::{evaluate_trial, mc_estimate, McOptions};

fn config(extra: &[&str]) -> SystemConfig {
    let mut o = ConfigOverrides::default();
    o.set_assignment("n_bs=16").unwrap();
    o.set_assignment("n_ue=4").unwrap();
    o.set_assignment("snr_grid_db=-20,0,10").unwrap();
    for a in extra {
        o.set_assignment(a).unwrap();
    }
    o.finish().unwrap()
}

#[test]
fn single_trial_equals_direct_evaluation() {
    let cfg = config(&["codebook_bs=32", "codebook_ue=8"]);
    let sc = cfg.scenario().unwrap();
    let res = mc_estimate(&sc, &cfg.snr_grid_db, 1, 42, McOptions::default()).unwrap();
    let budgets: Vec<_> = cfg
        .snr_grid_db
        .iter()
        .map(|&s| sc.budget_at_snr_db(s).unwrap())
        .collect();
    let direct = evaluate_trial(&sc, &budgets, 42, 0).unwrap();
    for (r, t) in res.iter().zip(&direct) {
        assert_eq!(r.rate_analog_inf.mean, t.infinite.rate_analog);
        assert_eq!(r.rate_digital.mean, t.infinite.rate_digital);
        assert_eq!(r.rate_analog_fin.as_ref().unwrap().mean, t.finite.unwrap().rate_analog);
        assert_eq!(r.rate_digital.stderr, 0.0);
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let cfg = config(&["codebook_bs=16"]);
    let sc = cfg.scenario().unwrap();
    let one = mc_estimate(&sc, &cfg.snr_grid_db, 300, 9, McOptions { workers: Some(1) }).unwrap();
    let many = mc_estimate(&sc, &cfg.snr_grid_db, 300, 9, McOptions { workers: Some(7) }).unwrap();
    // Debug output is exact for f64 and treats NaN (stderr of an infinite
    // condition-number column) as equal to itself
    assert_eq!(format!("{one:?}"), format!("{many:?}"));
    let again = mc_estimate(&sc, &cfg.snr_grid_db, 300, 9, McOptions::default()).unwrap();
    assert_eq!(format!("{one:?}"), format!("{again:?}"));
}

#[test]
fn different_seeds_differ() {
    let cfg = config(&[]);
    let sc = cfg.scenario().unwrap();
    let a = mc_estimate(&sc, &[0.0], 50, 1, McOptions::default()).unwrap();
    let b = mc_estimate(&sc, &[0.0], 50, 2, McOptions::default()).unwrap();
    assert_ne!(a[0].rate_analog_inf.mean, b[0].rate_analog_inf.mean);
}

#[test]
fn stderr_shrinks_with_square_root_of_trials() {
    let cfg = config(&[]);
    let sc = cfg.scenario().unwrap();
    let small = mc_estimate(&sc, &[0.0], 1000, 3, McOptions::default()).unwrap();
    let large = mc_estimate(&sc, &[0.0], 4000, 3, McOptions::default()).unwrap();
    let ratio = small[0].rate_digital.stderr / large[0].rate_digital.stderr;
    assert!((ratio - 2.0).abs() < 0.4, "ratio {ratio}");
}

#[test]
fn zero_trials_is_rejected() {
    let cfg = config(&[]);
    let sc = cfg.scenario().unwrap();
    assert!(mc_estimate(&sc, &[0.0], 0, 3, McOptions::default()).is_err());
}

#[test]
fn more_paths_than_antennas_is_rejected() {
    let mut o = ConfigOverrides::default();
    o.set_assignment("n_ue=2").unwrap();
    assert!(o.finish().and_then(|c| c.scenario()).is_err());
}

