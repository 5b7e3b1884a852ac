use std::time::Duration;

use bicolor_core::algorithm::{RunTrace, StopMetric};
use bicolor_core::metrics::MetricRecord;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::Result;

#[derive(Clone, Debug)]
pub struct SeedTrace {
    pub seed: u64,
    pub gamma: f64,
    pub trace: RunTrace,
}

/// All runs of one experiment.
#[derive(Clone, Debug)]
pub struct TraceSet {
    /// SHA-256 of the canonical TOML form of the config.
    pub fingerprint: String,
    pub stop_metric: StopMetric,
    pub gamma: f64,
    pub wall_clock: Duration,
    pub traces: Vec<SeedTrace>,
}

pub fn fingerprint(cfg: &ExperimentConfig) -> Result<String> {
    let canonical = cfg.to_toml()?;
    Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
}

fn raw(r: &MetricRecord, metric: StopMetric) -> f64 {
    match metric {
        StopMetric::RelDist => r.dist_sq,
        StopMetric::RelSubopt => r.subopt,
        StopMetric::RelPsi => r.psi,
    }
}

/// The stopping metric of each record divided by its value at the first
/// record.
pub fn relative_metric(records: &[MetricRecord], metric: StopMetric) -> Vec<f64> {
    let Some(first) = records.first() else {
        return Vec::new();
    };
    let base = raw(first, metric);
    records.iter().map(|r| if base > 0.0 { raw(r, metric) / base } else { 0.0 }).collect()
}
