//! Worst-case response time and minimum safety distance.

use serde::Serialize;

use crate::error::ConfigError;
use crate::time::SimDuration;

/// Default hand approach speed in m/s.
pub const DEFAULT_APPROACH_SPEED: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SafetyParams {
    pub approach_speed: f64,
    /// One entry per segment traversal on the safety path.
    pub segment_maxima: Vec<(String, SimDuration)>,
}

impl SafetyParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.approach_speed.is_finite() && self.approach_speed > 0.0) {
            return Err(ConfigError::InvalidSafety(format!(
                "approach speed {} must be positive",
                self.approach_speed
            )));
        }
        if self.segment_maxima.is_empty() {
            return Err(ConfigError::InvalidSafety("no segment maxima".into()));
        }
        Ok(())
    }
}

/// Sum of per-segment maxima. Upper-bounds any single response whose
/// segment delays never exceed their maxima.
pub fn worst_case_sfrt(params: &SafetyParams) -> SimDuration {
    params.segment_maxima.iter().map(|(_, d)| *d).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SafetyDistance {
    pub meters: f64,
    /// Rounded up to the next 0.1 m.
    pub presented_m: f64,
}

pub fn safety_distance(sfrt: SimDuration, speed_m_s: f64) -> SafetyDistance {
    let meters = speed_m_s * sfrt.0 as f64 / 1e6;
    // The epsilon absorbs representation error so exact decimeters
    // (0.1 m from 100 ms at 1 m/s) do not round up a step.
    let presented_m = ((meters * 10.0) - 1e-9).ceil().max(0.0) / 10.0;
    SafetyDistance {
        meters,
        presented_m,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(maxima: &[u64]) -> SafetyParams {
        SafetyParams {
            approach_speed: 2.0,
            segment_maxima: maxima
                .iter()
                .enumerate()
                .map(|(i, &m)| (format!("s{i}"), SimDuration(m)))
                .collect(),
        }
    }

    #[test]
    fn sums_maxima() {
        assert_eq!(
            worst_case_sfrt(&params(&[2000, 3000, 5000])),
            SimDuration(10_000)
        );
        assert_eq!(worst_case_sfrt(&params(&[4321])), SimDuration(4321));
    }

    #[test]
    fn distances() {
        let d = safety_distance(SimDuration(149_600), 2.0);
        assert!((d.meters - 0.2992).abs() < 1e-12);
        assert_eq!(d.presented_m, 0.3);
        assert_eq!(
            safety_distance(SimDuration(0), 2.0),
            SafetyDistance {
                meters: 0.0,
                presented_m: 0.0
            }
        );
        let d = safety_distance(SimDuration(100_000), 1.0);
        assert_eq!(d.meters, 0.1);
        assert_eq!(d.presented_m, 0.1);
        assert_eq!(safety_distance(SimDuration(100_001), 1.0).presented_m, 0.2);
    }

    #[test]
    fn validation() {
        assert!(params(&[1]).validate().is_ok());
        assert!(params(&[]).validate().is_err());
        assert!(SafetyParams {
            approach_speed: 0.0,
            ..params(&[1])
        }
        .validate()
        .is_err());
    }

    proptest! {
        #[test]
        fn linear_in_both_arguments(t in 0u64..1_000_000, v in 0.01f64..10.0, k in 1u64..5) {
            let base = safety_distance(SimDuration(t), v).meters;
            let scaled_t = safety_distance(SimDuration(t * k), v).meters;
            let scaled_v = safety_distance(SimDuration(t), v * k as f64).meters;
            prop_assert!((scaled_t - k as f64 * base).abs() <= 1e-12 * (1.0 + scaled_t));
            prop_assert!((scaled_v - k as f64 * base).abs() <= 1e-12 * (1.0 + scaled_v));
        }

        #[test]
        fn presentation_never_rounds_down(t in 0u64..2_000_000, v in 0.1f64..5.0) {
            let d = safety_distance(SimDuration(t), v);
            prop_assert!(d.presented_m + 1e-9 >= d.meters);
            prop_assert!(d.presented_m - d.meters < 0.1 + 1e-9);
        }
    }
}
