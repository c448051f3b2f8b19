//! Link latency distributions and 5G NR numerology arithmetic.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_distr::Normal;
use serde::Serialize;

use crate::error::ConfigError;
use crate::rng::RngStream;
use crate::time::SimDuration;

/// Rejections tolerated by the truncated normal before clamping.
pub const MAX_REJECTIONS: u32 = 1000;

/// Distribution a link segment draws its one-way delay from. All
/// parameters are in microseconds.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LatencyModel {
    Constant {
        value: SimDuration,
    },
    Uniform {
        lo: SimDuration,
        hi: SimDuration,
    },
    TruncatedNormal {
        mean: SimDuration,
        stddev: SimDuration,
        lo: SimDuration,
        hi: SimDuration,
    },
    /// Point masses with relative weights.
    Empirical {
        bins: Vec<(SimDuration, f64)>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Draw {
    pub value: SimDuration,
    /// Rejection sampling gave up and the value was clamped into bounds.
    pub clamped: bool,
}

impl LatencyModel {
    pub fn constant_us(us: u64) -> Self {
        LatencyModel::Constant {
            value: SimDuration(us),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::InvalidLatencyModel(m));
        match self {
            LatencyModel::Constant { .. } => Ok(()),
            LatencyModel::Uniform { lo, hi } if lo > hi => {
                bad(format!("uniform lo {lo} > hi {hi}"))
            }
            LatencyModel::Uniform { .. } => Ok(()),
            LatencyModel::TruncatedNormal { lo, hi, .. } if lo > hi => {
                bad(format!("truncated normal lo {lo} > hi {hi}"))
            }
            LatencyModel::TruncatedNormal { .. } => Ok(()),
            LatencyModel::Empirical { bins } => {
                if bins.is_empty() {
                    return bad("empirical model has no bins".into());
                }
                if bins.iter().any(|(_, w)| !w.is_finite() || *w < 0.0) {
                    return bad("empirical weights must be finite and non-negative".into());
                }
                if bins.iter().map(|(_, w)| w).sum::<f64>() <= 0.0 {
                    return bad("empirical weights must have a positive sum".into());
                }
                Ok(())
            }
        }
    }

    /// Inclusive bounds every draw falls within.
    pub fn support(&self) -> (SimDuration, SimDuration) {
        match self {
            LatencyModel::Constant { value } => (*value, *value),
            LatencyModel::Uniform { lo, hi } | LatencyModel::TruncatedNormal { lo, hi, .. } => {
                (*lo, *hi)
            }
            LatencyModel::Empirical { bins } => {
                let live = bins.iter().filter(|(_, w)| *w > 0.0).map(|(v, _)| *v);
                let lo = live.clone().min().unwrap_or_default();
                let hi = live.max().unwrap_or_default();
                (lo, hi)
            }
        }
    }

    pub fn draw(&self, rng: &mut RngStream) -> Draw {
        let exact = |value| Draw {
            value,
            clamped: false,
        };
        match self {
            LatencyModel::Constant { value } => exact(*value),
            LatencyModel::Uniform { lo, hi } => {
                exact(SimDuration(rng.uniform_inclusive(lo.0, hi.0)))
            }
            LatencyModel::TruncatedNormal {
                mean,
                stddev,
                lo,
                hi,
            } => truncated_normal(mean.0 as f64, stddev.0 as f64, lo.0, hi.0, rng),
            LatencyModel::Empirical { bins } => {
                let idx = WeightedIndex::new(bins.iter().map(|(_, w)| *w))
                    .expect("validated weights")
                    .sample(rng);
                exact(bins[idx].0)
            }
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> SimDuration {
        self.draw(rng).value
    }
}

fn truncated_normal(mean: f64, stddev: f64, lo: u64, hi: u64, rng: &mut RngStream) -> Draw {
    let clamp = |x: f64| SimDuration(x.round().clamp(lo as f64, hi as f64) as u64);
    if stddev == 0.0 {
        let value = clamp(mean);
        return Draw {
            value,
            clamped: value.0 as f64 != mean,
        };
    }
    let normal = Normal::new(mean, stddev).expect("finite stddev");
    let (lo_f, hi_f) = (lo as f64, hi as f64);
    let mut last = mean;
    for _ in 0..MAX_REJECTIONS {
        let x = normal.sample(rng);
        if (lo_f..=hi_f).contains(&x) {
            return Draw {
                value: SimDuration(x.round() as u64),
                clamped: false,
            };
        }
        last = x;
    }
    Draw {
        value: clamp(last),
        clamped: true,
    }
}

/// Subcarrier spacings defined for NR numerologies 0..=4.
pub const ALLOWED_SCS_KHZ: [u32; 5] = [15, 30, 60, 120, 240];
/// Subcarriers in one resource block.
pub const SUBCARRIERS_PER_SYMBOL: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NumerologyConfig {
    pub scs_khz: u32,
    pub subcarriers_per_symbol: u32,
}

impl NumerologyConfig {
    pub fn new(scs_khz: u32) -> Result<Self, ConfigError> {
        let n = NumerologyConfig {
            scs_khz,
            subcarriers_per_symbol: SUBCARRIERS_PER_SYMBOL,
        };
        n.validate()?;
        Ok(n)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if ALLOWED_SCS_KHZ.contains(&self.scs_khz) {
            Ok(())
        } else {
            Err(ConfigError::UnsupportedScs(self.scs_khz))
        }
    }
}

/// Bandwidth covered by one 12-subcarrier block, in kHz.
pub fn symbol_bandwidth(n: &NumerologyConfig) -> Result<u32, ConfigError> {
    n.validate()?;
    Ok(n.scs_khz * SUBCARRIERS_PER_SYMBOL)
}

/// Factor by which a symbol under `n2` outlasts one under `n1`.
/// Symbol duration is inversely proportional to the spacing.
pub fn symbol_duration_scaling(n1: &NumerologyConfig, n2: &NumerologyConfig) -> f64 {
    n1.scs_khz as f64 / n2.scs_khz as f64
}

/// Descriptive link figures carried into reports. Not simulated.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct LinkBudgetMeta {
    pub downlink_mbps: Option<f64>,
    pub uplink_mbps: Option<f64>,
    pub rssi_floor_dbm: Option<f64>,
}

impl LinkBudgetMeta {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [
            ("downlink", self.downlink_mbps),
            ("uplink", self.uplink_mbps),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(ConfigError::InvalidLatencyModel(format!(
                        "{name} throughput {v} must be non-negative"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.downlink_mbps.is_none() && self.uplink_mbps.is_none() && self.rssi_floor_dbm.is_none()
    }
}
