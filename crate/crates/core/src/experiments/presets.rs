//! Experiment drivers behind the CLI subcommands and the figure presets.

use std::str::FromStr;

use super::config::{CodebookSize, ConfigOverrides, SystemConfig};
use super::table::{Provenance, ResultTable};
use crate::beamforming::dirichlet_gain;
use crate::closed_form::{min_codebook_size, rate_loss_predict};
use crate::error::{Error, Result};
use crate::rate_engine::{mc_estimate, McOptions, MetricSummary, MonteCarloResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Rate vs SNR: digital SVD, exact analog and the diagonal approximation.
    Fig2,
    /// Empirical CDF of effective-channel condition numbers.
    Fig3,
    /// Rate vs SNR for several codebook sizes.
    Fig4,
    /// Codebook loss vs array size, Monte Carlo against closed form.
    Fig5,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2" => Ok(Preset::Fig2),
            "fig3" => Ok(Preset::Fig3),
            "fig4" => Ok(Preset::Fig4),
            "fig5" => Ok(Preset::Fig5),
            other => Err(Error::Usage(format!(
                "unknown preset `{other}` (expected fig2, fig3, fig4 or fig5)"
            ))),
        }
    }
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
        }
    }

    /// Settings the preset applies before user overrides.
    pub fn base(&self) -> ConfigOverrides {
        let mut base = ConfigOverrides::default();
        match self {
            Preset::Fig2 | Preset::Fig3 => {}
            Preset::Fig4 => {
                base.snr_grid_db = Some((0..=8).map(|i| -40.0 + 5.0 * i as f64).collect());
            }
            Preset::Fig5 => {
                base.snr_grid_db = Some(vec![-10.0]);
                base.codebook_ue = Some(CodebookSize::Finite(16));
            }
        }
        base
    }
}

/// Thresholds of the condition-number CDF: four per decade from 1 to 1e6.
pub const DEFAULT_CDF_THRESHOLDS: [f64; 25] = [
    1.0, 1.778_279_410_038_923, 3.162_277_660_168_379_5, 5.623_413_251_903_491, 10.0,
    17.782_794_100_389_23, 31.622_776_601_683_79, 56.234_132_519_034_91, 100.0,
    177.827_941_003_892_3, 316.227_766_016_837_9, 562.341_325_190_349_1, 1e3,
    1_778.279_410_038_923, 3_162.277_660_168_379_5, 5_623.413_251_903_491, 1e4,
    17_782.794_100_389_23, 31_622.776_601_683_79, 56_234.132_519_034_91, 1e5,
    177_827.941_003_892_3, 316_227.766_016_837_9, 562_341.325_190_349_1, 1e6,
];

pub fn run_preset(
    preset: Preset,
    overrides: &ConfigOverrides,
    options: McOptions,
) -> Result<ResultTable> {
    let layered = preset.base().merge(overrides);
    let cfg = layered.finish()?;
    match preset {
        Preset::Fig2 => {
            let n_bs = overrides.n_bs.map_or(vec![8, 64], |n| vec![n]);
            fig2(&cfg, &n_bs, options)
        }
        Preset::Fig3 => {
            let n_bs = overrides.n_bs.map_or(vec![8, 64], |n| vec![n]);
            fig3(&cfg, &n_bs, &DEFAULT_CDF_THRESHOLDS, options)
        }
        Preset::Fig4 => {
            let pairs = if overrides.codebook_bs.is_some() || overrides.codebook_ue.is_some() {
                vec![(cfg.codebook_bs, cfg.codebook_ue)]
            } else {
                [(128, 16), (64, 8), (16, 4)]
                    .map(|(b, u)| (CodebookSize::Finite(b), CodebookSize::Finite(u)))
                    .to_vec()
            };
            fig4(&cfg, &pairs, options)
        }
        Preset::Fig5 => {
            let n_bs = overrides
                .n_bs
                .map_or_else(|| (3..=10).map(|q| 1usize << q).collect(), |n| vec![n]);
            fig5(&cfg, &n_bs, &[0.5, 1.0, 2.0], options)
        }
    }
}

fn provenance(command: &str, cfg: &SystemConfig) -> Provenance {
    Provenance::new(command, &cfg.digest(), cfg.master_seed)
}

fn run(cfg: &SystemConfig, options: McOptions) -> Result<Vec<MonteCarloResult>> {
    mc_estimate(
        &cfg.scenario()?,
        &cfg.snr_grid_db,
        cfg.n_trials,
        cfg.master_seed,
        options,
    )
}

fn finite_summary(r: &MonteCarloResult) -> Result<(&MetricSummary, MetricSummary)> {
    let fin = r
        .rate_analog_fin
        .as_ref()
        .ok_or_else(|| Error::config("scenario has no finite codebook"))?;
    Ok((fin, r.codebook_loss().expect("finite rates present")))
}

/// Rates for each array size in `n_bs_values` with exact steering.
pub fn fig2(cfg: &SystemConfig, n_bs_values: &[usize], options: McOptions) -> Result<ResultTable> {
    let mut prov = provenance("preset fig2", cfg);
    prov.push("n_bs_sweep", join(n_bs_values));
    let mut table = ResultTable::new(
        prov,
        &[
            "snr_db",
            "n_bs",
            "rate_digital_mean",
            "rate_digital_stderr",
            "rate_analog_inf_mean",
            "rate_analog_inf_stderr",
            "rate_diag_approx_mean",
            "rate_diag_approx_stderr",
            "n_trials",
        ],
    );
    for &n_bs in n_bs_values {
        let mut c = cfg.clone();
        c.n_bs = n_bs;
        c.codebook_bs = CodebookSize::Infinite;
        c.codebook_ue = CodebookSize::Infinite;
        c.validate()?;
        for r in run(&c, options)? {
            table.push_row(&[
                r.snr_db,
                n_bs as f64,
                r.rate_digital.mean,
                r.rate_digital.stderr,
                r.rate_analog_inf.mean,
                r.rate_analog_inf.stderr,
                r.rate_diag_inf.mean,
                r.rate_diag_inf.stderr,
                r.n_trials as f64,
            ])?;
        }
    }
    Ok(table)
}

/// Condition-number CDFs. `cdf_digital` refers to the last array size in the
/// sweep; digital CDFs of the other sizes follow as `cdf_digital_nbs<N>`.
pub fn fig3(
    cfg: &SystemConfig,
    n_bs_values: &[usize],
    thresholds: &[f64],
    options: McOptions,
) -> Result<ResultTable> {
    let Some((&last, others)) = n_bs_values.split_last() else {
        return Err(Error::config("fig3 needs at least one array size"));
    };
    let mut analog = Vec::new();
    let mut digital = Vec::new();
    for &n_bs in n_bs_values {
        let mut c = cfg.clone();
        c.n_bs = n_bs;
        c.codebook_bs = CodebookSize::Infinite;
        c.codebook_ue = CodebookSize::Infinite;
        // condition numbers do not depend on the SNR
        c.snr_grid_db = vec![cfg.snr_grid_db[0]];
        c.validate()?;
        let r = run(&c, options)?.remove(0);
        analog.push(r.cond_analog_inf);
        digital.push(r.cond_digital);
    }

    let mut names = vec!["threshold".to_string(), "cdf_digital".to_string()];
    names.extend(n_bs_values.iter().map(|n| format!("cdf_analog_nbs{n}")));
    names.extend(others.iter().map(|n| format!("cdf_digital_nbs{n}")));
    names.push("n_trials".into());
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut prov = provenance("preset fig3", cfg);
    prov.push("n_bs_sweep", join(n_bs_values));
    prov.push("cdf_digital_n_bs", last.to_string());
    prov.push("metric", "analog: cond(H_bar H_bar^H); digital: cond(Lambda_L Lambda_L^H)");
    let mut table = ResultTable::new(prov, &refs);

    for &t in thresholds {
        let mut row = vec![t, digital[digital.len() - 1].fraction_below(t)];
        row.extend(analog.iter().map(|a| a.fraction_below(t)));
        row.extend(digital[..others.len()].iter().map(|d| d.fraction_below(t)));
        row.push(cfg.n_trials as f64);
        table.push_row(&row)?;
    }
    Ok(table)
}

/// Rates for each `(C_bs, C_ue)` pair on a common set of channel draws.
pub fn fig4(
    cfg: &SystemConfig,
    pairs: &[(CodebookSize, CodebookSize)],
    options: McOptions,
) -> Result<ResultTable> {
    let mut prov = provenance("preset fig4", cfg);
    prov.push(
        "codebook_pairs",
        pairs
            .iter()
            .map(|(b, u)| format!("{b}/{u}"))
            .collect::<Vec<_>>()
            .join(" "),
    );
    let mut table = ResultTable::new(
        prov,
        &[
            "snr_db",
            "c_bs",
            "c_ue",
            "rate_digital_mean",
            "rate_analog_inf_mean",
            "rate_analog_fin_mean",
            "rate_digital_stderr",
            "rate_analog_inf_stderr",
            "rate_analog_fin_stderr",
            "loss_mc",
            "loss_mc_stderr",
            "n_trials",
        ],
    );
    for &(cb_bs, cb_ue) in pairs {
        let mut c = cfg.clone();
        c.codebook_bs = cb_bs;
        c.codebook_ue = cb_ue;
        c.validate()?;
        for r in run(&c, options)? {
            let (fin, loss) = finite_summary(&r)?;
            table.push_row(&[
                r.snr_db,
                codebook_value(cb_bs),
                codebook_value(cb_ue),
                r.rate_digital.mean,
                r.rate_analog_inf.mean,
                fin.mean,
                r.rate_digital.stderr,
                r.rate_analog_inf.stderr,
                fin.stderr,
                loss.mean,
                loss.stderr,
                r.n_trials as f64,
            ])?;
        }
    }
    Ok(table)
}

/// Codebook loss with `C_bs = N_bs / gamma` at the first SNR grid point.
pub fn fig5(
    cfg: &SystemConfig,
    n_bs_values: &[usize],
    gammas: &[f64],
    options: McOptions,
) -> Result<ResultTable> {
    let snr_db = cfg.snr_grid_db[0];
    let mut prov = provenance("preset fig5", cfg);
    prov.push("n_bs_sweep", join(n_bs_values));
    prov.push("gamma_sweep", join(gammas));
    prov.push("snr_db", super::table::format_number(snr_db));
    let mut table = ResultTable::new(
        prov,
        &[
            "n_bs",
            "gamma",
            "c_bs",
            "c_ue",
            "rate_analog_inf_mean",
            "rate_analog_fin_mean",
            "loss_mc",
            "loss_closed_form",
            "closed_form_valid",
            "rate_analog_inf_stderr",
            "rate_analog_fin_stderr",
            "loss_mc_stderr",
            "n_trials",
        ],
    );
    for &n_bs in n_bs_values {
        for &gamma in gammas {
            if !(gamma > 0.0) {
                return Err(Error::config(format!("gamma must be positive, got {gamma}")));
            }
            let c_bs = ((n_bs as f64 / gamma).round() as usize).max(1);
            let mut c = cfg.clone();
            c.n_bs = n_bs;
            c.codebook_bs = CodebookSize::Finite(c_bs);
            c.snr_grid_db = vec![snr_db];
            c.validate()?;
            let scenario = c.scenario()?;
            let r = mc_estimate(&scenario, &c.snr_grid_db, c.n_trials, c.master_seed, options)?
                .remove(0);
            let (fin, loss) = finite_summary(&r)?;
            let predicted = rate_loss_predict(&scenario, snr_db)?;
            table.push_row(&[
                n_bs as f64,
                gamma,
                c_bs as f64,
                codebook_value(c.codebook_ue),
                r.rate_analog_inf.mean,
                fin.mean,
                loss.mean,
                predicted.total_bits,
                if predicted.valid { 1.0 } else { 0.0 },
                r.rate_analog_inf.stderr,
                fin.stderr,
                loss.stderr,
                r.n_trials as f64,
            ])?;
        }
    }
    Ok(table)
}

/// Monte Carlo rates over the configured SNR grid.
pub fn simulate(cfg: &SystemConfig, options: McOptions) -> Result<ResultTable> {
    let scenario = cfg.scenario()?;
    let finite = scenario.has_codebooks();
    let mut names = vec![
        "snr_db",
        "rate_digital_mean",
        "rate_digital_stderr",
        "rate_analog_inf_mean",
        "rate_analog_inf_stderr",
        "rate_diag_approx_mean",
        "rate_diag_approx_stderr",
    ];
    if finite {
        names.extend([
            "rate_analog_fin_mean",
            "rate_analog_fin_stderr",
            "rate_diag_fin_mean",
            "rate_diag_fin_stderr",
            "loss_mc",
            "loss_mc_stderr",
            "loss_closed_form",
            "closed_form_valid",
        ]);
    }
    names.extend(["n_regularized", "n_trials"]);
    let mut table = ResultTable::new(provenance("simulate", cfg), &names);
    for r in mc_estimate(&scenario, &cfg.snr_grid_db, cfg.n_trials, cfg.master_seed, options)? {
        let mut row = vec![
            r.snr_db,
            r.rate_digital.mean,
            r.rate_digital.stderr,
            r.rate_analog_inf.mean,
            r.rate_analog_inf.stderr,
            r.rate_diag_inf.mean,
            r.rate_diag_inf.stderr,
        ];
        if finite {
            let (fin, loss) = finite_summary(&r)?;
            let diag = r.rate_diag_fin.as_ref().expect("finite diag rates");
            let predicted = rate_loss_predict(&scenario, r.snr_db)?;
            row.extend([
                fin.mean,
                fin.stderr,
                diag.mean,
                diag.stderr,
                loss.mean,
                loss.stderr,
                predicted.total_bits,
                if predicted.valid { 1.0 } else { 0.0 },
            ]);
        }
        row.extend([r.n_regularized as f64, r.n_trials as f64]);
        table.push_row(&row)?;
    }
    Ok(table)
}

/// Closed-form outputs: the per-SNR loss breakdown and the minimal codebook
/// size table.
pub fn analyze(cfg: &SystemConfig) -> Result<(ResultTable, ResultTable)> {
    let scenario = cfg.scenario()?;
    let l = scenario.n_paths();
    let mut names: Vec<String> = ["snr_db", "gamma_bs", "gamma_ue", "r1_upper"]
        .map(String::from)
        .to_vec();
    for i in 1..=l {
        names.push(format!("mean_path_snr_{i}"));
        names.push(format!("r0_{i}"));
    }
    names.extend(["loss_closed_form", "closed_form_valid", "clamped"].map(String::from));
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut loss = ResultTable::new(provenance("analyze", cfg), &refs);
    for &snr_db in &cfg.snr_grid_db {
        let p = rate_loss_predict(&scenario, snr_db)?;
        let mut row = vec![snr_db, p.gamma_bs, p.gamma_ue, p.per_path[0].r1];
        for t in &p.per_path {
            row.push(t.mean_path_snr);
            row.push(t.r0);
        }
        row.extend([
            p.total_bits,
            if p.valid { 1.0 } else { 0.0 },
            if p.clamped { 1.0 } else { 0.0 },
        ]);
        loss.push_row(&row)?;
    }

    let mut sizes: Vec<usize> = (1..=10).map(|q| 1usize << q).collect();
    sizes.extend([cfg.n_bs, cfg.n_ue].into_iter().filter(|&n| n >= 2));
    sizes.sort_unstable();
    sizes.dedup();
    let mut rule = ResultTable::new(
        provenance("analyze codebook-rule", cfg),
        &[
            "n",
            "d_over_lambda",
            "c_min",
            "c_min_over_n",
            "worst_case_power_at_c_min",
        ],
    );
    for n in sizes {
        let c = min_codebook_size(n, cfg.d_over_lambda)?;
        let worst = 2.0 * std::f64::consts::PI * cfg.d_over_lambda / c as f64;
        rule.push_row(&[
            n as f64,
            cfg.d_over_lambda,
            c as f64,
            c as f64 / n as f64,
            dirichlet_gain(n, worst).powi(2),
        ])?;
    }
    Ok((loss, rule))
}

fn codebook_value(c: CodebookSize) -> f64 {
    match c {
        CodebookSize::Infinite => f64::INFINITY,
        CodebookSize::Finite(n) => n as f64,
    }
}

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}
