use std::process::{Command, Output};

fn beamsteer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beamsteer"))
        .args(args)
        .output()
        .expect("binary runs")
}

const SMALL: &[&str] = &["--set", "n_trials=40", "--set", "snr_grid_db=-10,0"];

#[test]
fn preset_output_is_reproducible() {
    let args: Vec<&str> = ["preset", "fig2", "--seed", "7"].iter().chain(SMALL).copied().collect();
    let a = beamsteer(&args);
    let b = beamsteer(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("# "));
    assert!(text.contains("snr_db"));
}

#[test]
fn worker_count_does_not_change_output() {
    let mut base: Vec<&str> = vec!["preset", "fig4"];
    base.extend(SMALL);
    let one: Vec<&str> = base.iter().copied().chain(["--workers", "1"]).collect();
    let four: Vec<&str> = base.iter().copied().chain(["--workers", "4"]).collect();
    assert_eq!(beamsteer(&one).stdout, beamsteer(&four).stdout);
}

#[test]
fn json_output_parses() {
    let mut args = vec!["preset", "fig5", "--format", "json", "--set", "n_bs=16"];
    args.extend(SMALL);
    let out = beamsteer(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["columns"]["loss_closed_form"].is_array());
    assert!(v["provenance"]["master_seed"].is_string());
}

#[test]
fn simulate_and_analyze_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# small run\nn_bs = 16\nn_ue = 4\ncodebook_bs = 32\nsnr_grid_db = -10:10:10\nn_trials = 30\n",
    )
    .unwrap();
    let out = beamsteer(&["simulate", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4);

    let target = dir.path().join("loss.csv");
    let out = beamsteer(&["analyze", cfg.to_str().unwrap(), "--out", target.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(target.exists());
    assert!(dir.path().join("loss_2.csv").exists());
}

#[test]
fn config_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "n_bs = 16\nn_bs = 32\n").unwrap();
    let out = beamsteer(&["simulate", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_bs"));

    std::fs::write(&cfg, "antennas = 4\n").unwrap();
    let err = String::from_utf8(beamsteer(&["simulate", cfg.to_str().unwrap()]).stderr).unwrap();
    assert!(err.contains("antennas") && err.contains("n_bs"));

    std::fs::write(&cfg, "m_bs = 2\n").unwrap();
    let err = String::from_utf8(beamsteer(&["simulate", cfg.to_str().unwrap()]).stderr).unwrap();
    assert!(err.contains("M_BS = M_UE = L"));
}

#[test]
fn unknown_preset_is_a_usage_error() {
    let out = beamsteer(&["preset", "fig9"]);
    assert_eq!(out.status.code(), Some(2));
}
