//! Mergeable latency accumulators.
//!
//! Samples land in right-closed bins `((i-1)·w, i·w]` so a bin is named by
//! its upper edge; a value that is an exact multiple of the width is its
//! own edge. Sums are exact integers, which keeps merges exact in any
//! order.

use serde::Serialize;

use crate::error::StatsError;
use crate::time::SimDuration;

/// Histogram bin width matching a 10 kS/s capture.
pub const DEFAULT_BIN_WIDTH: SimDuration = SimDuration(100);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LatencyStats {
    bin_width: u64,
    count: u64,
    sum: u128,
    min: u64,
    max: u64,
    bins: Vec<u64>,
    losses: u64,
}

impl Default for LatencyStats {
    fn default() -> Self {
        Self::new(DEFAULT_BIN_WIDTH)
    }
}

impl LatencyStats {
    pub fn new(bin_width: SimDuration) -> Self {
        assert!(bin_width.0 > 0, "bin width must be positive");
        LatencyStats {
            bin_width: bin_width.0,
            count: 0,
            sum: 0,
            min: u64::MAX,
            max: 0,
            bins: Vec::new(),
            losses: 0,
        }
    }

    pub fn from_samples<I: IntoIterator<Item = SimDuration>>(samples: I) -> Self {
        let mut s = Self::default();
        for x in samples {
            s.record(x);
        }
        s
    }

    fn bin_index(&self, v: u64) -> usize {
        v.div_ceil(self.bin_width) as usize
    }

    pub fn record(&mut self, v: SimDuration) {
        let idx = self.bin_index(v.0);
        if idx >= self.bins.len() {
            self.bins.resize(idx + 1, 0);
        }
        self.bins[idx] += 1;
        self.count += 1;
        self.sum += v.0 as u128;
        self.min = self.min.min(v.0);
        self.max = self.max.max(v.0);
    }

    pub fn record_loss(&mut self) {
        self.losses += 1;
    }

    pub fn merge(&mut self, other: &LatencyStats) {
        assert_eq!(
            self.bin_width, other.bin_width,
            "cannot merge different bin widths"
        );
        if other.bins.len() > self.bins.len() {
            self.bins.resize(other.bins.len(), 0);
        }
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            *a += b;
        }
        self.count += other.count;
        self.sum += other.sum;
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
        self.losses += other.losses;
    }

    pub fn merged(mut self, other: &LatencyStats) -> LatencyStats {
        self.merge(other);
        self
    }

    pub fn bin_width(&self) -> SimDuration {
        SimDuration(self.bin_width)
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn losses(&self) -> u64 {
        self.losses
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn sum(&self) -> u128 {
        self.sum
    }

    pub fn min(&self) -> Option<SimDuration> {
        (self.count > 0).then_some(SimDuration(self.min))
    }

    pub fn max(&self) -> Option<SimDuration> {
        (self.count > 0).then_some(SimDuration(self.max))
    }

    /// Mean in microseconds.
    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum as f64 / self.count as f64)
    }

    /// Smallest bin upper edge whose cumulative frequency reaches `p` percent.
    pub fn percentile(&self, p: f64) -> Result<SimDuration, StatsError> {
        if !(0.0..=100.0).contains(&p) {
            return Err(StatsError::PercentileOutOfRange(p.to_string()));
        }
        if self.count == 0 {
            return Err(StatsError::Empty);
        }
        let target = p * self.count as f64;
        let mut cum = 0u64;
        for (i, &n) in self.bins.iter().enumerate() {
            cum += n;
            if n > 0 && (cum as f64) * 100.0 >= target {
                return Ok(SimDuration(i as u64 * self.bin_width));
            }
        }
        unreachable!("cumulative count reaches the total")
    }

    /// Cumulative distribution at each occupied bin's upper edge.
    pub fn cdf(&self) -> Result<Vec<(SimDuration, f64)>, StatsError> {
        if self.count == 0 {
            return Err(StatsError::Empty);
        }
        let mut cum = 0u64;
        let mut out = Vec::new();
        for (i, &n) in self.bins.iter().enumerate() {
            if n == 0 {
                continue;
            }
            cum += n;
            out.push((
                SimDuration(i as u64 * self.bin_width),
                cum as f64 / self.count as f64,
            ));
        }
        Ok(out)
    }

    /// Fraction of samples at or below the bin containing `t`.
    pub fn cdf_at(&self, t: SimDuration) -> Result<f64, StatsError> {
        if self.count == 0 {
            return Err(StatsError::Empty);
        }
        let last = self.bin_index(t.0).min(self.bins.len().saturating_sub(1));
        let cum: u64 = self.bins[..=last].iter().sum();
        Ok(cum as f64 / self.count as f64)
    }

    /// Dense `(upper edge, count)` rows from the lowest to the highest
    /// occupied bin, empty bins included.
    pub fn histogram(&self) -> Vec<(SimDuration, u64)> {
        if self.count == 0 {
            return Vec::new();
        }
        let lo = self.bin_index(self.min);
        let hi = self.bin_index(self.max);
        (lo..=hi)
            .map(|i| (SimDuration(i as u64 * self.bin_width), self.bins[i]))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ms(v: u64) -> SimDuration {
        SimDuration::from_millis(v)
    }

    #[test]
    fn single_sample_percentile() {
        let s = LatencyStats::from_samples([ms(42)]);
        assert_eq!(s.percentile(50.0), Ok(ms(42)));
        assert_eq!(s.cdf().unwrap(), vec![(ms(42), 1.0)]);
    }

    #[test]
    fn off_edge_sample_rounds_up() {
        let s = LatencyStats::from_samples([SimDuration(42_001)]);
        assert_eq!(s.percentile(50.0), Ok(SimDuration(42_100)));
    }

    #[test]
    fn p99_of_one_per_ms() {
        let s = LatencyStats::from_samples((1..=100).map(ms));
        assert_eq!(s.percentile(99.0), Ok(ms(99)));
        assert_eq!(s.percentile(100.0), Ok(ms(100)));
        assert_eq!(s.percentile(0.0), Ok(ms(1)));
        assert_eq!(s.mean(), Some(50_500.0));
    }

    #[test]
    fn two_equal_samples_single_step() {
        let s = LatencyStats::from_samples([ms(7), ms(7)]);
        assert_eq!(s.cdf().unwrap(), vec![(ms(7), 1.0)]);
    }

    #[test]
    fn empty_stats_error() {
        let s = LatencyStats::default();
        assert_eq!(s.percentile(50.0), Err(StatsError::Empty));
        assert_eq!(s.cdf(), Err(StatsError::Empty));
        assert!(s.mean().is_none());
        assert!(matches!(
            LatencyStats::from_samples([ms(1)]).percentile(101.0),
            Err(StatsError::PercentileOutOfRange(_))
        ));
    }

    #[test]
    fn histogram_is_dense() {
        let s = LatencyStats::from_samples([SimDuration(150), SimDuration(420), SimDuration(400)]);
        assert_eq!(
            s.histogram(),
            vec![
                (SimDuration(200), 1),
                (SimDuration(300), 0),
                (SimDuration(400), 1),
                (SimDuration(500), 1)
            ]
        );
        assert_eq!(s.cdf_at(SimDuration(400)).unwrap(), 2.0 / 3.0);
    }

    #[test]
    fn zero_sample() {
        let s = LatencyStats::from_samples([SimDuration(0)]);
        assert_eq!(s.percentile(50.0), Ok(SimDuration(0)));
    }

    proptest! {
        #[test]
        fn percentile_monotone(
            xs in proptest::collection::vec(0u64..200_000, 1..500),
            p1 in 0.0f64..100.0,
            dp in 0.0f64..100.0,
        ) {
            let s = LatencyStats::from_samples(xs.iter().copied().map(SimDuration));
            let p2 = (p1 + dp).min(100.0);
            prop_assert!(s.percentile(p1).unwrap() <= s.percentile(p2).unwrap());
        }

        #[test]
        fn invariants_hold(xs in proptest::collection::vec(0u64..200_000, 1..500)) {
            let s = LatencyStats::from_samples(xs.iter().copied().map(SimDuration));
            let mean = s.mean().unwrap();
            prop_assert!(s.min().unwrap().0 as f64 <= mean && mean <= s.max().unwrap().0 as f64);
            prop_assert_eq!(s.histogram().iter().map(|(_, n)| n).sum::<u64>(), s.count());
            let cdf = s.cdf().unwrap();
            prop_assert!(cdf.windows(2).all(|w| w[0].1 <= w[1].1 && w[0].0 < w[1].0));
            prop_assert_eq!(cdf.last().unwrap().1, 1.0);
        }

        #[test]
        fn merge_commutes_and_associates(
            a in proptest::collection::vec(0u64..100_000, 0..100),
            b in proptest::collection::vec(0u64..100_000, 0..100),
            c in proptest::collection::vec(0u64..100_000, 0..100),
        ) {
            let sa = LatencyStats::from_samples(a.iter().copied().map(SimDuration));
            let sb = LatencyStats::from_samples(b.iter().copied().map(SimDuration));
            let sc = LatencyStats::from_samples(c.iter().copied().map(SimDuration));
            let left = sa.clone().merged(&sb).merged(&sc);
            let right = sa.clone().merged(&sb.clone().merged(&sc));
            let swapped = sc.clone().merged(&sa).merged(&sb);
            prop_assert_eq!(&left, &right);
            // Trailing zero bins can differ in length only if no sample
            // reached them, which cannot happen; full equality holds.
            prop_assert_eq!(&left, &swapped);
        }
    }
}
