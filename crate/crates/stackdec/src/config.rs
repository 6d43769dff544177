//! Run configuration: a named profile, optionally patched by a JSON file.

use std::path::Path;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use stackdec_core::ensemble::EnsembleConfig;
use stackdec_core::ortho::DEFAULT_PIVOT_TOL;
use stackdec_core::{SubNetworkConfig, TrainConfig};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Widths 256-128-64-32-8 with dropout, Adam at 1e-3, up to 2000 epochs.
    Paper,
    /// Widths 64-32-16-16-8 without dropout, batch 64, Adam at 3e-3 decaying
    /// by 0.3% per epoch.
    Ci,
}

pub const CI_WIDTHS: [usize; 5] = [64, 32, 16, 16, 8];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub subnet: SubNetworkConfig,
    pub train: TrainConfig,
    pub pivot_tol: f64,
}

impl RunConfig {
    pub fn profile(profile: Profile) -> Self {
        match profile {
            Profile::Paper => RunConfig {
                subnet: SubNetworkConfig::default(),
                train: TrainConfig::default(),
                pivot_tol: DEFAULT_PIVOT_TOL,
            },
            Profile::Ci => RunConfig {
                subnet: SubNetworkConfig::with_widths(&CI_WIDTHS).without_dropout(),
                train: TrainConfig {
                    learning_rate: 3e-3,
                    lr_decay: 0.997,
                    batch_size: 64,
                    ..TrainConfig::default()
                },
                pivot_tol: DEFAULT_PIVOT_TOL,
            },
        }
    }

    /// Applies a JSON object on top of this configuration; keys absent from
    /// the patch keep their current values.
    pub fn patched(&self, patch: &Value) -> std::result::Result<Self, String> {
        let mut base = serde_json::to_value(self).map_err(|e| e.to_string())?;
        merge(&mut base, patch);
        serde_json::from_value(base).map_err(|e| e.to_string())
    }

    pub fn load(profile: Profile, path: Option<&Path>) -> Result<Self> {
        let base = Self::profile(profile);
        let config = match path {
            None => base,
            Some(p) => {
                let patch: Value = crate::io::read_json(p)?;
                if !patch.is_object() {
                    return Err(Error::format(p, "configuration must be a JSON object"));
                }
                base.patched(&patch).map_err(|e| Error::format(p, e))?
            }
        };
        config.train.validate()?;
        config.subnet.validate()?;
        Ok(config)
    }

    pub fn ensemble(&self, members: usize, base_seed: u64, parallelism: usize) -> EnsembleConfig {
        EnsembleConfig {
            members,
            base_seed,
            train: self.train.clone(),
            subnet: self.subnet.clone(),
            parallelism,
            pivot_tol: self.pivot_tol,
            member_seeds: None,
        }
    }
}

fn merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, p) => *b = p.clone(),
    }
}

/// Thread count from the flag, then `STACKDEC_THREADS`, then the machine.
pub fn resolve_threads(flag: Option<usize>) -> Result<usize> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var("STACKDEC_THREADS") {
            Ok(s) => s
                .trim()
                .parse()
                .map_err(|_| Error::Usage(format!("STACKDEC_THREADS must be a positive integer, got '{s}'")))?,
            Err(_) => std::thread::available_parallelism().map_or(1, usize::from),
        },
    };
    if n == 0 {
        return Err(Error::Usage("thread count must be at least 1".into()));
    }
    Ok(n)
}
