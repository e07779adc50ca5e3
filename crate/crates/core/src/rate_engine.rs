//! Achievable rates, condition numbers and Monte Carlo expectations.
//!
//! Every trial draws its channel from [`trial_rng`]`(master_seed, trial)`, and
//! the same draw is reused across the whole SNR grid. Reductions run in trial
//! order with pairwise summation, so results are bit-identical for any
//! number of workers.

use std::f64::consts::LN_2;

use rayon::prelude::*;

use crate::array_channel::{
    assemble_channel, db_to_linear, resolve_link_budget, sample_paths, trial_rng, ArrayGeometry,
    BudgetSpec, LinkBudget, PathLoss,
};
use crate::beamforming::{
    analog_infinite, analog_quantized, dirichlet_gain, effective_channel, svd_reference,
    AnalogBeamformers, Codebook, CollisionPolicy,
};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_lower, diag_real, hermitian_eigen, hermitian_part, logdet_hpd, singular_values, ComplexMatrix};

/// Relative eigenvalue floor below which `W W^H` is treated as singular.
const GRAM_RCOND: f64 = 1e-10;

/// `sum_l log2(1 + c * sigma_l^2)`.
pub fn rate_digital(sigma_l: &[f64], ps_over_sigma_n2: f64) -> Result<f64> {
    check_ratio(ps_over_sigma_n2)?;
    if let Some(s) = sigma_l.iter().find(|s| !(**s >= 0.0)) {
        return Err(Error::Domain(format!("singular value {s} is negative")));
    }
    Ok(sigma_l
        .iter()
        .map(|s| (ps_over_sigma_n2 * s * s).ln_1p() / LN_2)
        .sum())
}

fn check_ratio(c: f64) -> Result<()> {
    if c >= 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("P_s/sigma_n^2 must be finite and >= 0, got {c}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalogRate {
    pub bits: f64,
    /// `W W^H` was numerically singular and a pseudo-inverse on its range was used.
    pub regularized: bool,
}

/// Whitened rate `log2 det(I + c * (W W^H)^-1 * H_bar * H_bar^H)`.
///
/// With `W W^H = L L^H` this equals `log2 det(I + c * M M^H)` for
/// `M = L^-1 H_bar`, which is Hermitian positive definite and is
/// evaluated through its Cholesky factor.
pub fn rate_analog(
    eff: &crate::beamforming::EffectiveChannel,
    ps_over_sigma_n2: f64,
) -> Result<AnalogRate> {
    check_ratio(ps_over_sigma_n2)?;
    let gram = hermitian_part(&eff.w_gram);
    let (values, vectors) = hermitian_eigen(&gram);
    let top = values.last().copied().unwrap_or(0.0);
    if !(top > 0.0) {
        return Err(Error::numeric("receive beamformer has zero Gram matrix"));
    }

    let factor = match values[0] > GRAM_RCOND * top {
        true => cholesky_lower(&gram).ok(),
        false => None,
    };
    let (whitened, regularized) = match factor {
        Some(l) => {
            let m = l
                .solve_lower_triangular(&eff.h_bar)
                .ok_or_else(|| Error::numeric("triangular solve failed"))?;
            (m, false)
        }
        None => {
            let keep: Vec<usize> = (0..values.len())
                .filter(|&i| values[i] > GRAM_RCOND * top)
                .collect();
            let proj = ComplexMatrix::from_fn(keep.len(), gram.ncols(), |r, c| {
                vectors[(c, keep[r])].conj() / values[keep[r]].sqrt()
            });
            (proj * &eff.h_bar, true)
        }
    };
    let k = whitened.nrows();
    let system = ComplexMatrix::identity(k, k) + (&whitened * whitened.adjoint()).scale(ps_over_sigma_n2);
    let bits = logdet_hpd(&system)? / LN_2;
    Ok(AnalogRate {
        bits: bits.max(0.0),
        regularized,
    })
}

/// `sum_l log2(1 + c * |D_bs,l|^2 * |D_ue,l|^2 * |g~_l|^2)`, gains defaulting to 1.
pub fn rate_diag_approx(
    gains_tilde: &[num_complex::Complex64],
    ps_over_sigma_n2: f64,
    deltas: Option<&[(f64, f64)]>,
) -> Result<f64> {
    check_ratio(ps_over_sigma_n2)?;
    if let Some(d) = deltas {
        if d.len() != gains_tilde.len() {
            return Err(Error::Dimension(format!(
                "{} gain pairs for {} paths",
                d.len(),
                gains_tilde.len()
            )));
        }
    }
    Ok(gains_tilde
        .iter()
        .enumerate()
        .map(|(l, g)| {
            let (bs, ue) = deltas.map_or((1.0, 1.0), |d| d[l]);
            (ps_over_sigma_n2 * bs * bs * ue * ue * g.norm_sqr()).ln_1p() / LN_2
        })
        .sum())
}

/// Ratio of extreme singular values; `+inf` for numerically singular input.
pub fn condition_number(m: &ComplexMatrix) -> Result<f64> {
    let sv = singular_values(m);
    let (max, min) = match (sv.first(), sv.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::Domain("empty matrix".into())),
    };
    if !(max > 0.0) {
        return Err(Error::Domain("condition number of an all-zero matrix".into()));
    }
    let floor = f64::EPSILON * max * m.nrows().max(m.ncols()) as f64;
    Ok(if min <= floor { f64::INFINITY } else { max / min })
}

/// Per-realization metrics for one beamformer family at one SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSample {
    pub rate_digital: f64,
    pub rate_analog: f64,
    pub rate_diag: f64,
    /// Condition number of `H_bar H_bar^H`.
    pub cond_analog: f64,
    /// Condition number of `Lambda_L Lambda_L^H`.
    pub cond_digital: f64,
    pub regularized: bool,
}

/// Everything a Monte Carlo trial needs besides the random draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub bs: ArrayGeometry,
    pub ue: ArrayGeometry,
    pub path_variances: Vec<f64>,
    pub tx_power_w: f64,
    pub path_loss: PathLoss,
    /// Codebooks per side; `None` steers that side exactly. The finite
    /// beamformer family is evaluated when either side has a codebook.
    pub codebook_bs: Option<Codebook>,
    pub codebook_ue: Option<Codebook>,
    pub collision_policy: CollisionPolicy,
}

impl Scenario {
    pub fn n_paths(&self) -> usize {
        self.path_variances.len()
    }

    pub fn has_codebooks(&self) -> bool {
        self.codebook_bs.is_some() || self.codebook_ue.is_some()
    }

    pub fn budget_at_snr_db(&self, snr_db: f64) -> Result<LinkBudget> {
        resolve_link_budget(&BudgetSpec {
            tx_power_w: self.tx_power_w,
            path_variance_sum: self.path_variances.iter().sum(),
            n_bs: self.bs.n_elements,
            n_ue: self.ue.n_elements,
            path_loss: self.path_loss,
            snr: Some(db_to_linear(snr_db)),
            noise_power: None,
        })
    }

    fn validate(&self) -> Result<()> {
        let l = self.n_paths();
        let k = self.bs.n_elements.min(self.ue.n_elements);
        if l == 0 || l > k {
            return Err(Error::config(format!(
                "{l} paths cannot be resolved with {} BS and {} UE antennas",
                self.bs.n_elements, self.ue.n_elements
            )));
        }
        Ok(())
    }
}

/// Metrics of one trial at one SNR point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSample {
    pub infinite: RateSample,
    pub finite: Option<RateSample>,
}

fn family_sample(
    bf: &AnalogBeamformers,
    h: &ComplexMatrix,
    gains: &[num_complex::Complex64],
    deltas: Option<&[(f64, f64)]>,
    c: f64,
    digital: (f64, f64),
) -> Result<RateSample> {
    let eff = effective_channel(&bf.w_a, h, &bf.f_a)?;
    let analog = rate_analog(&eff, c)?;
    let gram = &eff.h_bar * eff.h_bar.adjoint();
    let cond_analog = condition_number(&gram).unwrap_or(f64::INFINITY);
    Ok(RateSample {
        rate_digital: digital.0,
        rate_analog: analog.bits,
        rate_diag: rate_diag_approx(gains, c, deltas)?,
        cond_analog,
        cond_digital: digital.1,
        regularized: analog.regularized,
    })
}

/// Runs one trial over all budgets.
pub fn evaluate_trial(
    scenario: &Scenario,
    budgets: &[LinkBudget],
    master_seed: u64,
    trial: u64,
) -> Result<Vec<TrialSample>> {
    let mut rng = trial_rng(master_seed, trial);
    let paths = sample_paths(scenario.n_paths(), &scenario.path_variances, &mut rng)?;
    let Some(first) = budgets.first() else {
        return Ok(Vec::new());
    };
    // rho is common to all grid points
    let channel = assemble_channel(&paths, &scenario.bs, &scenario.ue, first);
    let svd = svd_reference(&channel.h, scenario.n_paths())?;
    let lambda_sq: Vec<f64> = svd.sigma_l.iter().map(|s| s * s).collect();
    let cond_digital = condition_number(&diag_real(&lambda_sq)).unwrap_or(f64::INFINITY);

    let exact = analog_infinite(&paths, &scenario.bs, &scenario.ue);
    let quantized = match scenario.has_codebooks() {
        true => {
            let bf = analog_quantized(
                &paths,
                &scenario.bs,
                &scenario.ue,
                scenario.codebook_bs.as_ref(),
                scenario.codebook_ue.as_ref(),
                scenario.collision_policy,
            )?;
            let rep = bf.quantization.as_ref().expect("finite beamformers carry a report");
            let deltas: Vec<(f64, f64)> = rep
                .psi_err_bs
                .iter()
                .zip(&rep.psi_err_ue)
                .map(|(&eb, &eu)| {
                    (
                        dirichlet_gain(scenario.bs.n_elements, eb),
                        dirichlet_gain(scenario.ue.n_elements, eu),
                    )
                })
                .collect();
            Some((bf, deltas))
        }
        false => None,
    };

    budgets
        .iter()
        .map(|budget| {
            let c = budget.ps_over_noise();
            let digital = (rate_digital(&svd.sigma_l, c)?, cond_digital);
            let infinite =
                family_sample(&exact, &channel.h, &channel.scaled_gains, None, c, digital)?;
            let finite = match &quantized {
                Some((bf, deltas)) => Some(family_sample(
                    bf,
                    &channel.h,
                    &channel.scaled_gains,
                    Some(deltas),
                    c,
                    digital,
                )?),
                None => None,
            };
            Ok(TrialSample { infinite, finite })
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.with_trial(trial, master_seed))
}

/// Pairwise (cascade) summation in slice order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`; zero for a single sample.
    pub stderr: f64,
    pub samples: Vec<f64>,
}

impl MetricSummary {
    pub fn from_samples(samples: Vec<f64>) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
                samples,
            };
        }
        let mean = pairwise_sum(&samples) / n as f64;
        let stderr = if n > 1 {
            let dev: Vec<f64> = samples.iter().map(|x| (x - mean).powi(2)).collect();
            (pairwise_sum(&dev) / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            stderr,
            samples,
        }
    }

    /// Fraction of samples strictly below `threshold`.
    pub fn fraction_below(&self, threshold: f64) -> f64 {
        let hits = self.samples.iter().filter(|&&x| x < threshold).count();
        hits as f64 / self.samples.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloResult {
    pub snr_db: f64,
    pub n_trials: usize,
    pub master_seed: u64,
    pub rate_digital: MetricSummary,
    pub rate_analog_inf: MetricSummary,
    pub rate_diag_inf: MetricSummary,
    pub rate_analog_fin: Option<MetricSummary>,
    pub rate_diag_fin: Option<MetricSummary>,
    pub cond_digital: MetricSummary,
    pub cond_analog_inf: MetricSummary,
    pub cond_analog_fin: Option<MetricSummary>,
    /// Trials whose whitening needed a pseudo-inverse (kept in the averages).
    pub n_regularized: usize,
}

impl MonteCarloResult {
    /// Per-trial rate loss `R_A - R^_A` of the codebook beamformer.
    pub fn codebook_loss(&self) -> Option<MetricSummary> {
        let fin = self.rate_analog_fin.as_ref()?;
        let diffs = self
            .rate_analog_inf
            .samples
            .iter()
            .zip(&fin.samples)
            .map(|(a, b)| a - b)
            .collect();
        Some(MetricSummary::from_samples(diffs))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct McOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

pub fn mc_estimate(
    scenario: &Scenario,
    snr_grid_db: &[f64],
    n_trials: usize,
    master_seed: u64,
    options: McOptions,
) -> Result<Vec<MonteCarloResult>> {
    if n_trials == 0 {
        return Err(Error::config("n_trials must be at least 1"));
    }
    scenario.validate()?;
    let budgets = snr_grid_db
        .iter()
        .map(|&s| scenario.budget_at_snr_db(s))
        .collect::<Result<Vec<_>>>()?;

    let run = || -> Result<Vec<Vec<TrialSample>>> {
        (0..n_trials as u64)
            .into_par_iter()
            .map(|t| evaluate_trial(scenario, &budgets, master_seed, t))
            .collect()
    };
    let trials = match options.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?
            .install(run)?,
        None => run()?,
    };

    let has_finite = scenario.has_codebooks();
    Ok(snr_grid_db
        .iter()
        .enumerate()
        .map(|(i, &snr_db)| {
            let column = |f: &dyn Fn(&TrialSample) -> f64| -> MetricSummary {
                MetricSummary::from_samples(trials.iter().map(|t| f(&t[i])).collect())
            };
            let finite = |f: &dyn Fn(&RateSample) -> f64| -> Option<MetricSummary> {
                has_finite.then(|| column(&|t| f(t.finite.as_ref().expect("finite sample"))))
            };
            MonteCarloResult {
                snr_db,
                n_trials,
                master_seed,
                rate_digital: column(&|t| t.infinite.rate_digital),
                rate_analog_inf: column(&|t| t.infinite.rate_analog),
                rate_diag_inf: column(&|t| t.infinite.rate_diag),
                rate_analog_fin: finite(&|s| s.rate_analog),
                rate_diag_fin: finite(&|s| s.rate_diag),
                cond_digital: column(&|t| t.infinite.cond_digital),
                cond_analog_inf: column(&|t| t.infinite.cond_analog),
                cond_analog_fin: finite(&|s| s.cond_analog),
                n_regularized: trials
                    .iter()
                    .filter(|t| {
                        t[i].infinite.regularized || t[i].finite.is_some_and(|f| f.regularized)
                    })
                    .count(),
            }
        })
        .collect())
}
