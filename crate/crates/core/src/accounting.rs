//! Bit accounting: `TotalCom = UpCom + α·DownCom`.

use serde::{Deserialize, Serialize};

use crate::algorithm::RoundOutcome;
use crate::compressors::ceil_log2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UplinkPolicy {
    /// Every client's message counts.
    #[default]
    SumOverClients,
    /// Only the largest client message counts, as for parallel uploads.
    MaxOverClients,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// Downlink weight α.
    pub alpha: f64,
    #[serde(default = "default_true")]
    pub count_index_overhead: bool,
    #[serde(default)]
    pub uplink_policy: UplinkPolicy,
}

fn default_true() -> bool {
    true
}

impl Default for CostModel {
    fn default() -> Self {
        Self::with_alpha(1.0)
    }
}

impl CostModel {
    pub fn with_alpha(alpha: f64) -> Self {
        Self { alpha, count_index_overhead: true, uplink_policy: UplinkPolicy::SumOverClients }
    }

    /// Charged `(up, down)` bits of one round in dimension `d`.
    pub fn charge(&self, outcome: &RoundOutcome, d: usize) -> (u64, u64) {
        let strip = |bits: u64, support: usize| {
            if self.count_index_overhead || support == 0 || support >= d {
                bits
            } else {
                bits - support as u64 * ceil_log2(d) as u64
            }
        };
        let per_client = outcome.client_bits.iter().zip(&outcome.client_support).map(|(&b, &s)| strip(b, s));
        let up = match self.uplink_policy {
            UplinkPolicy::SumOverClients => per_client.sum(),
            UplinkPolicy::MaxOverClients => per_client.max().unwrap_or(0),
        };
        (up, strip(outcome.downlink_bits, outcome.downlink_support))
    }
}

/// `up + α·down`.
pub fn totalcom(up_bits: u64, down_bits: u64, model: &CostModel) -> f64 {
    up_bits as f64 + model.alpha * down_bits as f64
}

/// Charged bits of one iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: u64,
    pub communicated: bool,
    pub up_bits: u64,
    pub down_bits: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CumulativeSeries {
    pub up: Vec<u64>,
    pub down: Vec<u64>,
    pub total: Vec<f64>,
}

/// Prefix sums of the charged bits, one entry per round.
pub fn accumulate(rounds: &[RoundRecord], model: &CostModel) -> CumulativeSeries {
    let mut out = CumulativeSeries::default();
    let (mut up, mut down) = (0u64, 0u64);
    for r in rounds {
        up += r.up_bits;
        down += r.down_bits;
        out.up.push(up);
        out.down.push(down);
        out.total.push(totalcom(up, down, model));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn round(t: u64, up: u64, down: u64) -> RoundRecord {
        RoundRecord { t, communicated: up + down > 0, up_bits: up, down_bits: down }
    }

    #[test]
    fn totalcom_examples() {
        assert_eq!(totalcom(100, 40, &CostModel::with_alpha(0.0)), 100.0);
        assert_eq!(totalcom(100, 40, &CostModel::with_alpha(1.0)), 140.0);
        assert_eq!(totalcom(0, 64, &CostModel::with_alpha(0.5)), 32.0);
    }

    #[test]
    fn accumulate_examples() {
        let m = CostModel::with_alpha(1.0);
        let s = accumulate(&[round(1, 100, 40), round(2, 100, 40)], &m);
        assert_eq!(s.total, vec![140.0, 280.0]);
        let silent = accumulate(&[round(1, 0, 0), round(2, 0, 0), round(3, 0, 0)], &m);
        assert!(silent.total.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn charge_policies() {
        let outcome = RoundOutcome {
            communicated: true,
            omega_set: Some(vec![0, 3]),
            uplink_bits: 26 + 13,
            downlink_bits: 26,
            client_bits: vec![26, 13],
            client_support: vec![2, 1],
            downlink_support: 2,
        };
        let d = 8;
        assert_eq!(CostModel::default().charge(&outcome, d), (39, 26));
        let max = CostModel { uplink_policy: UplinkPolicy::MaxOverClients, ..CostModel::default() };
        assert_eq!(max.charge(&outcome, d), (26, 26));
        let no_index = CostModel { count_index_overhead: false, ..CostModel::default() };
        assert_eq!(no_index.charge(&outcome, d), (30, 20));
    }

    proptest! {
        #[test]
        fn series_monotone_and_linear(
            rounds in prop::collection::vec((0u64..10_000, 0u64..10_000), 0..50),
            alpha in 0.0f64..1.0,
        ) {
            let recs: Vec<_> = rounds.iter().enumerate().map(|(t, &(u, d))| round(t as u64 + 1, u, d)).collect();
            let s = accumulate(&recs, &CostModel::with_alpha(alpha));
            for w in s.total.windows(2) {
                prop_assert!(w[1] >= w[0]);
            }
            let up_only = accumulate(&recs, &CostModel::with_alpha(0.0));
            for (a, b) in up_only.total.iter().zip(&s.up) {
                prop_assert_eq!(*a, *b as f64);
            }
            for r in &recs {
                let sum = totalcom(r.up_bits, 0, &CostModel::with_alpha(alpha))
                    + totalcom(0, r.down_bits, &CostModel::with_alpha(alpha));
                prop_assert!((sum - totalcom(r.up_bits, r.down_bits, &CostModel::with_alpha(alpha))).abs() < 1e-9);
            }
        }
    }
}
