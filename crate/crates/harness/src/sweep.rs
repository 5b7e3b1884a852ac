use bicolor_core::algorithm::RunStatus;
use log::info;

use crate::error::{HarnessError, Result};
use crate::experiment::Experiment;
use crate::trace::relative_metric;

/// Runs whose metric exceeds this multiple of its initial value count as
/// divergent.
pub const DIVERGENCE_FACTOR: f64 = 1e3;

#[derive(Clone, Debug, PartialEq)]
pub struct SweepEntry {
    pub gamma: f64,
    /// Mean over seeds of the relative stopping metric at budget end.
    pub score: f64,
    pub diverged: bool,
    pub evidence: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutcome {
    pub best_gamma: f64,
    pub entries: Vec<SweepEntry>,
}

/// Runs every grid value on a short budget and keeps the γ with the
/// smallest mean stopping metric. Ties go to the earlier grid value.
pub fn sweep_gamma(exp: &Experiment, grid: &[f64]) -> Result<SweepOutcome> {
    if grid.is_empty() || grid.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
        return Err(HarnessError::Config("gamma grid must be nonempty and positive".into()));
    }
    let mut opts = exp.options.clone();
    opts.stop.max_iters = exp.config.sweep_iters.unwrap_or((exp.config.stop.max_iters / 10).max(1));
    opts.stop.target = None;
    opts.stop.bit_budget = None;
    opts.stop.divergence_factor = Some(DIVERGENCE_FACTOR);
    opts.record_every = 0;
    let metric = exp.config.stop.metric;

    let mut entries = Vec::with_capacity(grid.len());
    for &gamma in grid {
        let traces = exp.run_seeds(gamma, &opts)?;
        let mut diverged = false;
        let mut evidence = String::new();
        let mut total = 0.0;
        for t in &traces {
            let last = relative_metric(&t.trace.records, metric).last().copied().unwrap_or(f64::NAN);
            if t.trace.status == RunStatus::Diverged || !last.is_finite() || last > DIVERGENCE_FACTOR {
                diverged = true;
                evidence = format!(
                    "gamma = {gamma:.6e}: seed {} stopped at t = {} with relative metric {last:e}",
                    t.seed,
                    t.trace.iterations()
                );
                break;
            }
            total += last;
        }
        let score = if diverged { f64::INFINITY } else { total / traces.len() as f64 };
        info!("sweep gamma = {gamma:.6e}: score = {score:e}");
        entries.push(SweepEntry { gamma, score, diverged, evidence });
    }
    let best = entries.iter().filter(|e| !e.diverged).fold(None::<&SweepEntry>, |best, e| match best {
        Some(b) if b.score <= e.score => Some(b),
        _ => Some(e),
    });
    match best {
        Some(b) => Ok(SweepOutcome { best_gamma: b.gamma, entries }),
        None => Err(HarnessError::AllDiverged(
            entries.iter().map(|e| e.evidence.as_str()).collect::<Vec<_>>().join("\n"),
        )),
    }
}
