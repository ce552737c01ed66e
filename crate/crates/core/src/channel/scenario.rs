use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A static problem instance.
///
/// Stored on disk as TOML: flat scalar keys followed by the `gains`
/// matrix, one row per user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub num_users: usize,
    pub num_subchannels: usize,
    pub max_users_per_sc: usize,
    /// Total transmit budget in watts.
    pub p_max: f64,
    /// Circuit power per subchannel in watts.
    pub p_c: f64,
    /// Multiplies every SINR before the rate is taken; 1 means no gap.
    pub sinr_gap: f64,
    pub ftpa_alpha: f64,
    /// Noise power per subchannel.
    pub noise: Vec<f64>,
    /// Per-user minimum rates in bits/s/Hz.
    #[serde(default)]
    pub min_rates: Vec<f64>,
    /// `gains[m][n]`, linear power gain.
    pub gains: Vec<Vec<f64>>,
}

impl Scenario {
    /// Unit noise, no SINR gap, FTPA exponent -0.4.
    pub fn from_gains(gains: Vec<Vec<f64>>, max_users_per_sc: usize, p_max: f64, p_c: f64) -> Result<Self> {
        let m = gains.len();
        let n = gains.first().map_or(0, Vec::len);
        let s = Self {
            num_users: m,
            num_subchannels: n,
            max_users_per_sc,
            p_max,
            p_c,
            sinr_gap: 1.0,
            ftpa_alpha: -0.4,
            noise: vec![1.0; n],
            min_rates: vec![0.0; m],
            gains,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if self.gains.len() != self.num_users {
            return bad(format!("{} gain rows for {} users", self.gains.len(), self.num_users));
        }
        if let Some((m, row)) = self
            .gains
            .iter()
            .enumerate()
            .find(|(_, r)| r.len() != self.num_subchannels)
        {
            return bad(format!("gain row {m} has {} entries, expected {}", row.len(), self.num_subchannels));
        }
        if self.gains.iter().flatten().any(|g| !(*g > 0.0 && g.is_finite())) {
            return bad("gains must be positive and finite".into());
        }
        if self.noise.len() != self.num_subchannels || self.noise.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return bad("need one positive noise power per subchannel".into());
        }
        if !(self.p_max > 0.0 && self.p_max.is_finite()) {
            return bad(format!("p_max must be positive, got {}", self.p_max));
        }
        if !(self.p_c >= 0.0 && self.p_c.is_finite()) {
            return bad(format!("p_c must be non-negative, got {}", self.p_c));
        }
        if self.max_users_per_sc == 0 {
            return bad("max_users_per_sc must be at least 1".into());
        }
        if !(self.sinr_gap > 0.0 && self.sinr_gap <= 1.0) {
            return bad(format!("sinr_gap must lie in (0, 1], got {}", self.sinr_gap));
        }
        if !(self.ftpa_alpha <= 0.0) {
            return bad(format!("ftpa_alpha must be <= 0, got {}", self.ftpa_alpha));
        }
        if !self.min_rates.is_empty()
            && (self.min_rates.len() != self.num_users || self.min_rates.iter().any(|r| !(*r >= 0.0)))
        {
            return bad("min_rates must be empty or one non-negative value per user".into());
        }
        Ok(())
    }

    /// `g[m][n] / noise[n]`: SNR per watt of user `m` on subchannel `n`.
    #[inline]
    pub fn snr(&self, m: usize, n: usize) -> f64 {
        self.gains[m][n] / self.noise[n]
    }

    pub fn min_rate(&self, m: usize) -> f64 {
        self.min_rates.get(m).copied().unwrap_or(0.0)
    }

    /// Equal per-subchannel share of the budget.
    pub fn equal_share(&self) -> f64 {
        self.p_max / self.num_subchannels as f64
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario fields are always representable")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Parse {
            path: "<scenario>".into(),
            message: e.to_string(),
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Scenario::from_toml(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }
}
