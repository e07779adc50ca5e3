//! Line-oriented `key = value` system configuration.
//!
//! Lists are comma separated; `snr_grid_db` also accepts `start:step:stop`.
//! Everything after `#` on a line is a comment. Unspecified keys take the
//! defaults of the 28 GHz reference scenario.

use std::fmt::Write as _;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::array_channel::{dbm_to_watts, ArrayGeometry, PathLoss};
use crate::beamforming::{build_codebook, CollisionPolicy};
use crate::error::{Error, Result};
use crate::rate_engine::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodebookSize {
    Infinite,
    Finite(usize),
}

impl std::fmt::Display for CodebookSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CodebookSize::Infinite => f.write_str("infinite"),
            CodebookSize::Finite(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub carrier_freq_hz: f64,
    pub n_paths: usize,
    pub path_variances: Vec<f64>,
    pub pathloss_exponent: f64,
    /// `None` sets the path loss to 1.
    pub distance_m: Option<f64>,
    pub tx_power_dbm: f64,
    pub n_bs: usize,
    pub n_ue: usize,
    pub m_bs: usize,
    pub m_ue: usize,
    pub d_over_lambda: f64,
    pub codebook_bs: CodebookSize,
    pub codebook_ue: CodebookSize,
    pub collision_policy: CollisionPolicy,
    pub snr_grid_db: Vec<f64>,
    pub n_trials: usize,
    pub master_seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        ConfigOverrides::default()
            .finish()
            .expect("default configuration is valid")
    }
}

/// Every recognized configuration key.
pub const KEYS: &[&str] = &[
    "carrier_freq_hz",
    "n_paths",
    "path_variances",
    "pathloss_exponent",
    "distance_m",
    "tx_power_dbm",
    "n_bs",
    "n_ue",
    "m_bs",
    "m_ue",
    "d_over_lambda",
    "codebook_bs",
    "codebook_ue",
    "collision_policy",
    "snr_grid_db",
    "n_trials",
    "master_seed",
];

/// Partially specified configuration. Keys left unset resolve to defaults in
/// [`ConfigOverrides::finish`], so path variances and transceiver counts
/// follow whatever `n_paths` ends up being.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub carrier_freq_hz: Option<f64>,
    pub n_paths: Option<usize>,
    pub path_variances: Option<Vec<f64>>,
    pub pathloss_exponent: Option<f64>,
    pub distance_m: Option<Option<f64>>,
    pub tx_power_dbm: Option<f64>,
    pub n_bs: Option<usize>,
    pub n_ue: Option<usize>,
    pub m_bs: Option<usize>,
    pub m_ue: Option<usize>,
    pub d_over_lambda: Option<f64>,
    pub codebook_bs: Option<CodebookSize>,
    pub codebook_ue: Option<CodebookSize>,
    pub collision_policy: Option<CollisionPolicy>,
    pub snr_grid_db: Option<Vec<f64>>,
    pub n_trials: Option<usize>,
    pub master_seed: Option<u64>,
}

fn parse_scalar<T: FromStr>(key: &str, value: &str, line: Option<usize>) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config_key(key, line, format!("malformed value `{}`", value.trim())))
}

fn parse_list(key: &str, value: &str, line: Option<usize>) -> Result<Vec<f64>> {
    let value = value.trim();
    if value.is_empty() {
        return Ok(Vec::new());
    }
    if key == "snr_grid_db" && value.contains(':') {
        let parts: Vec<f64> = value
            .split(':')
            .map(|p| parse_scalar(key, p, line))
            .collect::<Result<_>>()?;
        let [start, step, stop] = parts[..] else {
            return Err(Error::config_key(key, line, "range must be start:step:stop"));
        };
        if !(step > 0.0) || stop < start {
            return Err(Error::config_key(key, line, "range needs step > 0 and stop >= start"));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| start + step * i as f64).collect());
    }
    value.split(',').map(|p| parse_scalar(key, p, line)).collect()
}

fn parse_codebook(key: &str, value: &str, line: Option<usize>) -> Result<CodebookSize> {
    match value.trim() {
        "infinite" | "inf" => Ok(CodebookSize::Infinite),
        v => match parse_scalar::<usize>(key, v, line)? {
            0 => Err(Error::config_key(key, line, "codebook size must be at least 1")),
            c => Ok(CodebookSize::Finite(c)),
        },
    }
}

impl ConfigOverrides {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str, line: Option<usize>) -> Result<()> {
        let v = value;
        match key {
            "carrier_freq_hz" => self.carrier_freq_hz = Some(parse_scalar(key, v, line)?),
            "n_paths" => self.n_paths = Some(parse_scalar(key, v, line)?),
            "path_variances" => self.path_variances = Some(parse_list(key, v, line)?),
            "pathloss_exponent" => self.pathloss_exponent = Some(parse_scalar(key, v, line)?),
            "distance_m" => {
                self.distance_m = Some(match v.trim() {
                    "none" => None,
                    other => Some(parse_scalar(key, other, line)?),
                })
            }
            "tx_power_dbm" => self.tx_power_dbm = Some(parse_scalar(key, v, line)?),
            "n_bs" => self.n_bs = Some(parse_scalar(key, v, line)?),
            "n_ue" => self.n_ue = Some(parse_scalar(key, v, line)?),
            "m_bs" => self.m_bs = Some(parse_scalar(key, v, line)?),
            "m_ue" => self.m_ue = Some(parse_scalar(key, v, line)?),
            "d_over_lambda" => self.d_over_lambda = Some(parse_scalar(key, v, line)?),
            "codebook_bs" => self.codebook_bs = Some(parse_codebook(key, v, line)?),
            "codebook_ue" => self.codebook_ue = Some(parse_codebook(key, v, line)?),
            "collision_policy" => {
                self.collision_policy = Some(match v.trim() {
                    "allow" => CollisionPolicy::Allow,
                    "distinct" => CollisionPolicy::DistinctEntries,
                    other => {
                        return Err(Error::config_key(
                            key,
                            line,
                            format!("expected `allow` or `distinct`, got `{other}`"),
                        ))
                    }
                })
            }
            "snr_grid_db" => self.snr_grid_db = Some(parse_list(key, v, line)?),
            "n_trials" => self.n_trials = Some(parse_scalar(key, v, line)?),
            "master_seed" => self.master_seed = Some(parse_scalar(key, v, line)?),
            _ => {
                return Err(Error::config_key(
                    key,
                    line,
                    format!("unknown key; expected one of: {}", KEYS.join(", ")),
                ))
            }
        }
        Ok(())
    }

    /// Parses a `key=value` assignment as given to `--set`.
    pub fn set_assignment(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::config(format!("expected key=value, got `{assignment}`")))?;
        self.set(key.trim(), value, None)
    }

    /// Layers `other` on top of `self`; keys set in `other` win.
    pub fn merge(mut self, other: &ConfigOverrides) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f.clone(); } )* };
        }
        take!(
            carrier_freq_hz, n_paths, path_variances, pathloss_exponent, distance_m,
            tx_power_dbm, n_bs, n_ue, m_bs, m_ue, d_over_lambda, codebook_bs, codebook_ue,
            collision_policy, snr_grid_db, n_trials, master_seed
        );
        self
    }

    pub fn finish(&self) -> Result<SystemConfig> {
        let n_paths = self.n_paths.unwrap_or(3);
        let cfg = SystemConfig {
            carrier_freq_hz: self.carrier_freq_hz.unwrap_or(28e9),
            n_paths,
            path_variances: self
                .path_variances
                .clone()
                .unwrap_or_else(|| vec![1.0 / n_paths.max(1) as f64; n_paths]),
            pathloss_exponent: self.pathloss_exponent.unwrap_or(2.0),
            distance_m: self.distance_m.unwrap_or(Some(50.0)),
            tx_power_dbm: self.tx_power_dbm.unwrap_or(27.0),
            n_bs: self.n_bs.unwrap_or(64),
            n_ue: self.n_ue.unwrap_or(8),
            m_bs: self.m_bs.unwrap_or(n_paths),
            m_ue: self.m_ue.unwrap_or(n_paths),
            d_over_lambda: self.d_over_lambda.unwrap_or(0.5),
            codebook_bs: self.codebook_bs.unwrap_or(CodebookSize::Infinite),
            codebook_ue: self.codebook_ue.unwrap_or(CodebookSize::Infinite),
            collision_policy: self.collision_policy.unwrap_or_default(),
            snr_grid_db: self
                .snr_grid_db
                .clone()
                .unwrap_or_else(|| (0..=12).map(|i| -40.0 + 5.0 * i as f64).collect()),
            n_trials: self.n_trials.unwrap_or(2000),
            master_seed: self.master_seed.unwrap_or(1),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn parse_config(text: &str) -> Result<SystemConfig> {
    parse_overrides(text)?.finish()
}

impl ConfigOverrides {
    pub fn parse(text: &str) -> Result<Self> {
        parse_overrides(text)
    }
}

fn parse_overrides(text: &str) -> Result<ConfigOverrides> {
    let mut out = ConfigOverrides::default();
    let mut seen: Vec<String> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
            key: None,
            line: Some(line_no),
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        if seen.iter().any(|k| k == key) {
            return Err(Error::config_key(key, Some(line_no), "key given twice"));
        }
        out.set(key, value, Some(line_no))?;
        seen.push(key.to_string());
    }
    Ok(out)
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config_key(key, None, format!("must be positive, got {v}")))
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let l = self.n_paths;
        if l == 0 {
            return Err(Error::config_key("n_paths", None, "at least one path is required"));
        }
        if self.m_bs != l || self.m_ue != l {
            return Err(Error::config_key(
                if self.m_bs != l { "m_bs" } else { "m_ue" },
                None,
                format!(
                    "transceiver counts must equal the number of paths (M_BS = M_UE = L = {l}), got m_bs = {}, m_ue = {}",
                    self.m_bs, self.m_ue
                ),
            ));
        }
        if self.path_variances.len() != l {
            return Err(Error::config_key(
                "path_variances",
                None,
                format!("expected {l} values, got {}", self.path_variances.len()),
            ));
        }
        for &v in &self.path_variances {
            positive("path_variances", v)?;
        }
        if self.n_bs == 0 || self.n_ue == 0 {
            return Err(Error::config_key("n_bs", None, "arrays need at least one element"));
        }
        if l > self.n_bs.min(self.n_ue) {
            return Err(Error::config_key(
                "n_paths",
                None,
                format!("{l} paths exceed the smaller array ({} elements)", self.n_bs.min(self.n_ue)),
            ));
        }
        positive("carrier_freq_hz", self.carrier_freq_hz)?;
        positive("pathloss_exponent", self.pathloss_exponent)?;
        positive("d_over_lambda", self.d_over_lambda)?;
        if let Some(d) = self.distance_m {
            positive("distance_m", d)?;
        }
        if !self.tx_power_dbm.is_finite() {
            return Err(Error::config_key("tx_power_dbm", None, "must be finite"));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::config_key("snr_grid_db", None, "SNR grid must not be empty"));
        }
        if self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::config_key("snr_grid_db", None, "SNR values must be finite"));
        }
        if self.n_trials == 0 {
            return Err(Error::config_key("n_trials", None, "need at least one trial"));
        }
        Ok(())
    }

    pub fn path_loss(&self) -> PathLoss {
        match self.distance_m {
            Some(distance_m) => PathLoss::FreeSpace {
                distance_m,
                carrier_freq_hz: self.carrier_freq_hz,
                exponent: self.pathloss_exponent,
            },
            None => PathLoss::Unity,
        }
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let codebook = |size: CodebookSize| match size {
            CodebookSize::Infinite => Ok(None),
            CodebookSize::Finite(c) => build_codebook(c, self.d_over_lambda).map(Some),
        };
        Ok(Scenario {
            bs: ArrayGeometry::new(self.n_bs, self.d_over_lambda)?,
            ue: ArrayGeometry::new(self.n_ue, self.d_over_lambda)?,
            path_variances: self.path_variances.clone(),
            tx_power_w: dbm_to_watts(self.tx_power_dbm),
            path_loss: self.path_loss(),
            codebook_bs: codebook(self.codebook_bs)?,
            codebook_ue: codebook(self.codebook_ue)?,
            collision_policy: self.collision_policy,
        })
    }

    /// Canonical text form: every key, fixed order, values in round-trip form.
    pub fn to_text(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        let _ = writeln!(s, "carrier_freq_hz = {:?}", self.carrier_freq_hz);
        let _ = writeln!(s, "n_paths = {}", self.n_paths);
        let _ = writeln!(s, "path_variances = {}", list(&self.path_variances));
        let _ = writeln!(s, "pathloss_exponent = {:?}", self.pathloss_exponent);
        match self.distance_m {
            Some(d) => {
                let _ = writeln!(s, "distance_m = {d:?}");
            }
            None => s.push_str("distance_m = none\n"),
        }
        let _ = writeln!(s, "tx_power_dbm = {:?}", self.tx_power_dbm);
        let _ = writeln!(s, "n_bs = {}", self.n_bs);
        let _ = writeln!(s, "n_ue = {}", self.n_ue);
        let _ = writeln!(s, "m_bs = {}", self.m_bs);
        let _ = writeln!(s, "m_ue = {}", self.m_ue);
        let _ = writeln!(s, "d_over_lambda = {:?}", self.d_over_lambda);
        let _ = writeln!(s, "codebook_bs = {}", self.codebook_bs);
        let _ = writeln!(s, "codebook_ue = {}", self.codebook_ue);
        let policy = match self.collision_policy {
            CollisionPolicy::Allow => "allow",
            CollisionPolicy::DistinctEntries => "distinct",
        };
        let _ = writeln!(s, "collision_policy = {policy}");
        let _ = writeln!(s, "snr_grid_db = {}", list(&self.snr_grid_db));
        let _ = writeln!(s, "n_trials = {}", self.n_trials);
        let _ = writeln!(s, "master_seed = {}", self.master_seed);
        s
    }

    /// SHA-256 of [`SystemConfig::to_text`], hex encoded.
    pub fn digest(&self) -> String {
        Sha256::digest(self.to_text().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
