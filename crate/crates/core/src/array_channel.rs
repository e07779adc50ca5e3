//! Uniform linear arrays, geometric multipath channels and the link budget.
//!
//! A channel realization is `H = A_ue * diag(g~) * A_bs^H` where the columns of
//! `A_bs` / `A_ue` are unit-norm steering vectors toward each path's angle of
//! departure / arrival and `g~_l = sqrt(N_ue * N_bs / rho) * g_l`.
//!
//! Noise convention: every receive antenna sees noise variance `sigma_n^2`, so
//! a unit-norm combiner row yields per-stream noise power `sigma_n^2` and the
//! SNR is `chi = P_s * sum(sigma_l^2) / (rho * sigma_n^2)`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{diag, ComplexMatrix};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    pub n_elements: usize,
    pub d_over_lambda: f64,
}

impl ArrayGeometry {
    pub fn new(n_elements: usize, d_over_lambda: f64) -> Result<Self> {
        if n_elements == 0 {
            return Err(Error::config("array needs at least one element"));
        }
        if !(d_over_lambda > 0.0 && d_over_lambda.is_finite()) {
            return Err(Error::config(format!(
                "element spacing d/lambda must be positive, got {d_over_lambda}"
            )));
        }
        Ok(Self {
            n_elements,
            d_over_lambda,
        })
    }

    /// Half-wavelength spaced array.
    pub fn half_wavelength(n_elements: usize) -> Result<Self> {
        Self::new(n_elements, 0.5)
    }

    /// Phase increment per element for a plane wave at `angle` (radians from broadside).
    pub fn psi_from_angle(&self, angle: f64) -> f64 {
        2.0 * PI * self.d_over_lambda * angle.sin()
    }

    /// Half-width of the reachable psi interval, `2*pi*d/lambda`.
    pub fn psi_limit(&self) -> f64 {
        2.0 * PI * self.d_over_lambda
    }
}

/// Unit-norm ULA response: entry `k` is `exp(j*k*psi) / sqrt(n)`.
pub fn steering_vector(geom: &ArrayGeometry, psi: f64) -> ComplexMatrix {
    let n = geom.n_elements;
    let amp = 1.0 / (n as f64).sqrt();
    ComplexMatrix::from_fn(n, 1, |k, _| Complex64::from_polar(amp, k as f64 * psi))
}

/// Array response matrix with one steering vector per column.
pub fn response_matrix(geom: &ArrayGeometry, psis: &[f64]) -> ComplexMatrix {
    let n = geom.n_elements;
    let amp = 1.0 / (n as f64).sqrt();
    ComplexMatrix::from_fn(n, psis.len(), |k, l| {
        Complex64::from_polar(amp, k as f64 * psis[l])
    })
}

/// Angles and complex gains of the `L` propagation paths.
#[derive(Debug, Clone, PartialEq)]
pub struct PathParams {
    /// Angles of departure at the base station, radians.
    pub aod: Vec<f64>,
    /// Angles of arrival at the user equipment, radians.
    pub aoa: Vec<f64>,
    pub gains: Vec<Complex64>,
    pub path_variances: Vec<f64>,
}

impl PathParams {
    pub fn new(
        aod: Vec<f64>,
        aoa: Vec<f64>,
        gains: Vec<Complex64>,
        path_variances: Vec<f64>,
    ) -> Result<Self> {
        let l = gains.len();
        if l == 0 {
            return Err(Error::config("at least one path is required"));
        }
        if aod.len() != l || aoa.len() != l || path_variances.len() != l {
            return Err(Error::config(format!(
                "path parameter lengths differ: aod {}, aoa {}, gains {}, variances {}",
                aod.len(),
                aoa.len(),
                l,
                path_variances.len()
            )));
        }
        if let Some(a) = aod.iter().chain(&aoa).find(|a| !(a.abs() <= FRAC_PI_2)) {
            return Err(Error::config(format!("angle {a} outside [-pi/2, pi/2]")));
        }
        validate_variances(&path_variances)?;
        Ok(Self {
            aod,
            aoa,
            gains,
            path_variances,
        })
    }

    pub fn n_paths(&self) -> usize {
        self.gains.len()
    }

    pub fn psi_bs(&self, bs: &ArrayGeometry) -> Vec<f64> {
        self.aod.iter().map(|&a| bs.psi_from_angle(a)).collect()
    }

    pub fn psi_ue(&self, ue: &ArrayGeometry) -> Vec<f64> {
        self.aoa.iter().map(|&a| ue.psi_from_angle(a)).collect()
    }
}

fn validate_variances(variances: &[f64]) -> Result<()> {
    match variances.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        Some(v) => Err(Error::config(format!(
            "path variances must be positive and finite, got {v}"
        ))),
        None => Ok(()),
    }
}

/// Per-trial random stream. Every trial of a Monte Carlo run uses ChaCha8
/// keyed by `master_seed` on its own stream `trial_index`, so a trial can be
/// replayed in isolation and the result does not depend on scheduling.
pub fn trial_rng(master_seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index);
    rng
}

/// Draws `l` paths: AoDs, then AoAs, uniform on `[-pi/2, pi/2]`, then gains
/// `g_l ~ CN(0, sigma_l^2)`.
pub fn sample_paths<R: Rng + ?Sized>(
    l: usize,
    variances: &[f64],
    rng: &mut R,
) -> Result<PathParams> {
    if l == 0 {
        return Err(Error::config("at least one path is required"));
    }
    if variances.len() != l {
        return Err(Error::config(format!(
            "expected {l} path variances, got {}",
            variances.len()
        )));
    }
    validate_variances(variances)?;

    let aod: Vec<f64> = (0..l).map(|_| rng.random_range(-FRAC_PI_2..=FRAC_PI_2)).collect();
    let aoa: Vec<f64> = (0..l).map(|_| rng.random_range(-FRAC_PI_2..=FRAC_PI_2)).collect();
    let gains = variances
        .iter()
        .map(|&v| {
            let scale = (v / 2.0).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(scale * re, scale * im)
        })
        .collect();
    Ok(PathParams {
        aod,
        aoa,
        gains,
        path_variances: variances.to_vec(),
    })
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathLoss {
    /// `rho = 1`; the SNR is specified directly.
    Unity,
    /// `rho = (4*pi*distance/lambda)^exponent`.
    FreeSpace {
        distance_m: f64,
        carrier_freq_hz: f64,
        exponent: f64,
    },
}

impl PathLoss {
    pub fn linear(&self) -> f64 {
        match *self {
            PathLoss::Unity => 1.0,
            PathLoss::FreeSpace {
                distance_m,
                carrier_freq_hz,
                exponent,
            } => {
                let wavelength = SPEED_OF_LIGHT / carrier_freq_hz;
                (4.0 * PI * distance_m / wavelength).powf(exponent)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let PathLoss::FreeSpace {
            distance_m,
            carrier_freq_hz,
            exponent,
        } = *self
        {
            for (name, v) in [
                ("distance_m", distance_m),
                ("carrier_freq_hz", carrier_freq_hz),
                ("pathloss_exponent", exponent),
            ] {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::config_key(name, None, format!("must be positive, got {v}")));
                }
            }
        }
        Ok(())
    }
}

/// Inputs to [`resolve_link_budget`]. Exactly one of `snr` / `noise_power`
/// must be given; the other is solved from the SNR identity.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetSpec {
    pub tx_power_w: f64,
    pub path_variance_sum: f64,
    pub n_bs: usize,
    pub n_ue: usize,
    pub path_loss: PathLoss,
    /// Linear SNR `chi`.
    pub snr: Option<f64>,
    pub noise_power: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub tx_power: f64,
    pub noise_power: f64,
    pub path_loss: f64,
    pub snr: f64,
    /// `P_s * N_ue * N_bs / rho`.
    pub beta: f64,
}

impl LinkBudget {
    /// `P_s / sigma_n^2`, the factor multiplying `H H^H`-type terms in every rate.
    pub fn ps_over_noise(&self) -> f64 {
        self.tx_power / self.noise_power
    }

    /// Mean received SNR of a path with variance `sigma_l^2` after full array gain.
    pub fn mean_path_snr(&self, path_variance: f64) -> f64 {
        self.beta * path_variance / self.noise_power
    }

    pub fn array_gain_db(n_bs: usize, n_ue: usize) -> f64 {
        linear_to_db((n_bs * n_ue) as f64)
    }
}

pub fn resolve_link_budget(spec: &BudgetSpec) -> Result<LinkBudget> {
    spec.path_loss.validate()?;
    if !(spec.tx_power_w > 0.0 && spec.tx_power_w.is_finite()) {
        return Err(Error::config_key(
            "tx_power_dbm",
            None,
            "transmit power must be positive",
        ));
    }
    if !(spec.path_variance_sum > 0.0) {
        return Err(Error::config("sum of path variances must be positive"));
    }
    let path_loss = spec.path_loss.linear();
    let signal = spec.tx_power_w * spec.path_variance_sum / path_loss;
    let (snr, noise_power) = match (spec.snr, spec.noise_power) {
        (Some(snr), None) => {
            if !(snr > 0.0 && snr.is_finite()) {
                return Err(Error::config(format!("SNR must be positive, got {snr}")));
            }
            (snr, signal / snr)
        }
        (None, Some(noise)) => {
            if !(noise > 0.0 && noise.is_finite()) {
                return Err(Error::config(format!(
                    "noise power must be positive, got {noise}"
                )));
            }
            (signal / noise, noise)
        }
        (Some(_), Some(_)) => {
            return Err(Error::config(
                "link budget over-determined: give either SNR or noise power, not both",
            ))
        }
        (None, None) => {
            return Err(Error::config(
                "link budget under-determined: give either SNR or noise power",
            ))
        }
    };
    Ok(LinkBudget {
        tx_power: spec.tx_power_w,
        noise_power,
        path_loss,
        snr,
        beta: spec.tx_power_w * (spec.n_ue * spec.n_bs) as f64 / path_loss,
    })
}

/// One channel draw together with the gains actually entering `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub paths: PathParams,
    /// `g~_l = sqrt(N_ue * N_bs / rho) * g_l`.
    pub scaled_gains: Vec<Complex64>,
    /// `N_ue x N_bs` channel matrix.
    pub h: ComplexMatrix,
}

pub fn assemble_channel(
    paths: &PathParams,
    bs: &ArrayGeometry,
    ue: &ArrayGeometry,
    budget: &LinkBudget,
) -> ChannelRealization {
    let scale = ((ue.n_elements * bs.n_elements) as f64 / budget.path_loss).sqrt();
    let scaled_gains: Vec<Complex64> = paths.gains.iter().map(|g| g * scale).collect();
    let a_bs = response_matrix(bs, &paths.psi_bs(bs));
    let a_ue = response_matrix(ue, &paths.psi_ue(ue));
    let h = &a_ue * diag(&scaled_gains) * a_bs.adjoint();
    ChannelRealization {
        paths: paths.clone(),
        scaled_gains,
        h,
    }
}
