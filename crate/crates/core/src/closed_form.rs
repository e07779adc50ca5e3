//! Closed-form rate loss of codebook-quantized beamsteering.
//!
//! The loss of path `l` factors into an SNR term `R0` (expectation over the
//! Rayleigh path power) and a quantization term `R1` (expected Dirichlet
//! power loss over the steering error). Summed over paths and converted to
//! bits this gives the first-order loss prediction.

use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::rate_engine::Scenario;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Value of an approximation clamped to `[0, 1]`; `clamped` marks results
/// that left the interval before clamping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounded {
    pub value: f64,
    pub clamped: bool,
}

impl Bounded {
    fn unit(raw: f64) -> Self {
        let value = raw.clamp(0.0, 1.0);
        Self {
            value,
            clamped: value != raw,
        }
    }
}

/// Exponential integral `E1(x) = int_1^inf exp(-x t) / t dt`.
pub fn exp_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("E1 is defined for x > 0, got {x}")));
    }
    if x <= 1.0 {
        Ok(e1_series(x))
    } else {
        Ok((-x).exp() * e1_scaled_cf(x))
    }
}

/// `exp(x) * E1(x)`, finite for large `x` where `E1` alone underflows.
pub fn exp_scaled_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("E1 is defined for x > 0, got {x}")));
    }
    if x <= 1.0 {
        Ok(x.exp() * e1_series(x))
    } else {
        Ok(e1_scaled_cf(x))
    }
}

// -gamma - ln x - sum_{k>=1} (-x)^k / (k * k!)
fn e1_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        term *= -x / k as f64;
        let contrib = term / k as f64;
        sum += contrib;
        if contrib.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

// Modified Lentz evaluation of the continued fraction
// exp(x) E1(x) = 1/(x+1- 1/(x+3- 4/(x+5- ...)))
fn e1_scaled_cf(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Mean of `s*e / (s*e + 1)` for `e ~ Exp(1)`: `1 - (1/s) exp(1/s) E1(1/s)`.
pub fn r0_term(mean_path_snr: f64) -> Result<f64> {
    if !(mean_path_snr > 0.0) {
        return Err(Error::Domain(format!(
            "mean path SNR must be positive, got {mean_path_snr}"
        )));
    }
    let inv = 1.0 / mean_path_snr;
    Ok((1.0 - inv * exp_scaled_e1(inv)?).clamp(0.0, 1.0))
}

/// Small-error approximation of the squared Dirichlet gain,
/// `(1 - (n^2 - 1) * psi_err^2 / 24)^2`.
pub fn delta_sq_approx(n: usize, psi_err: f64) -> Bounded {
    let n2 = (n * n) as f64;
    let inner = 1.0 - (n2 - 1.0) * psi_err * psi_err / 24.0;
    // outside the validity regime the bracket turns negative
    let raw = if inner < 0.0 { -(inner * inner) } else { inner * inner };
    Bounded::unit(raw)
}

/// Smallest codebook size keeping the worst-case quantization power loss
/// under 3 dB: `C^2 >= 0.57 * pi^2 * (d/lambda)^2 * (n^2 - 1)`.
pub fn min_codebook_size(n: usize, d_over_lambda: f64) -> Result<usize> {
    if n < 2 {
        return Err(Error::Domain(format!("need at least 2 antennas, got {n}")));
    }
    if !(d_over_lambda > 0.0 && d_over_lambda.is_finite()) {
        return Err(Error::Domain(format!("d/lambda must be positive, got {d_over_lambda}")));
    }
    let bound = 0.57 * PI * PI * d_over_lambda * d_over_lambda * ((n * n) as f64 - 1.0);
    let mut c = bound.sqrt().ceil().max(1.0) as usize;
    while c > 1 && ((c - 1) * (c - 1)) as f64 >= bound {
        c -= 1;
    }
    while ((c * c) as f64) < bound {
        c += 1;
    }
    Ok(c)
}

/// Upper bound on `R1` from uniformly distributed steering errors, for
/// `gamma = N / C` on each side (0 for an exact codebook).
pub fn r1_upper_gamma(gamma_bs: f64, gamma_ue: f64, d_over_lambda: f64) -> Bounded {
    let a = (PI * d_over_lambda).powi(2) / 6.0;
    let side = |g: f64| 1.0 + g.powi(4) * a * a / 5.0 - 2.0 * g * g * a / 3.0;
    Bounded::unit(1.0 - side(gamma_bs) * side(gamma_ue))
}

pub fn r1_upper(n_bs: usize, c_bs: usize, n_ue: usize, c_ue: usize, d_over_lambda: f64) -> Bounded {
    r1_upper_gamma(
        n_bs as f64 / c_bs as f64,
        n_ue as f64 / c_ue as f64,
        d_over_lambda,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossTerms {
    pub mean_path_snr: f64,
    pub r0: f64,
    pub r1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossBreakdown {
    pub per_path: Vec<PathLossTerms>,
    /// Predicted loss in bits/s/Hz, `(1/ln 2) * sum_l r0_l * r1_l`.
    pub total_bits: f64,
    pub gamma_bs: f64,
    pub gamma_ue: f64,
    /// False when either side has `gamma > 1`, where the small-error
    /// expansion behind the prediction breaks down.
    pub valid: bool,
    /// An approximation left `[0, 1]` and was clamped.
    pub clamped: bool,
}

/// First-order rate-loss prediction at one SNR point.
pub fn rate_loss_predict(scenario: &Scenario, snr_db: f64) -> Result<LossBreakdown> {
    let budget = scenario.budget_at_snr_db(snr_db)?;
    let gamma_bs = scenario
        .codebook_bs
        .as_ref()
        .map_or(0.0, |cb| cb.gamma(scenario.bs.n_elements));
    let gamma_ue = scenario
        .codebook_ue
        .as_ref()
        .map_or(0.0, |cb| cb.gamma(scenario.ue.n_elements));
    let r1 = r1_upper_gamma(gamma_bs, gamma_ue, scenario.bs.d_over_lambda);
    let per_path = scenario
        .path_variances
        .iter()
        .map(|&v| {
            let s = budget.mean_path_snr(v);
            Ok(PathLossTerms {
                mean_path_snr: s,
                r0: r0_term(s)?,
                r1: r1.value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let total_bits = per_path.iter().map(|p| p.r0 * p.r1).sum::<f64>() / LN_2;
    Ok(LossBreakdown {
        per_path,
        total_bits,
        gamma_bs,
        gamma_ue,
        valid: gamma_bs <= 1.0 && gamma_ue <= 1.0,
        clamped: r1.clamped,
    })
}
