use serde::{Deserialize, Serialize};

use super::config::AlgoConfig;
use super::state::{AlgoState, InitMode};
use super::step::step;
use crate::accounting::{totalcom, CostModel, RoundRecord};
use crate::error::{Error, Result};
use crate::linalg::dist_sq;
use crate::metrics::{evaluate, lyapunov, MetricInputs, MetricRecord, ReferenceSolution};
use crate::problems::ProblemInstance;
use crate::rng::Streams;

/// Quantity tracked by stopping targets, relative to its value at `t = 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopMetric {
    /// `‖x̄ − x*‖² / ‖x̄⁰ − x*‖²`.
    #[default]
    RelDist,
    /// `(F(x̄) − F*) / (F(x̄⁰) − F*)`.
    RelSubopt,
    /// `Ψ^t / Ψ⁰`.
    RelPsi,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    pub max_iters: u64,
    /// Stop once the metric falls to this relative level.
    #[serde(default)]
    pub target: Option<(StopMetric, f64)>,
    /// Stop once cumulative TotalCom reaches this many bits.
    #[serde(default)]
    pub bit_budget: Option<f64>,
    /// Declare divergence when the tracked metric is non-finite or exceeds
    /// this multiple of its initial value.
    #[serde(default)]
    pub divergence_factor: Option<f64>,
}

impl StoppingRule {
    pub fn iterations(max_iters: u64) -> Self {
        Self { max_iters, target: None, bit_budget: None, divergence_factor: None }
    }

    fn tracked(&self) -> Option<StopMetric> {
        match (self.target, self.divergence_factor) {
            (Some((m, _)), _) => Some(m),
            (None, Some(_)) => Some(StopMetric::RelDist),
            (None, None) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub stop: StoppingRule,
    /// Record metrics every this many iterations; 0 records only the first
    /// and last iterate.
    pub record_every: u64,
    pub cost: CostModel,
    pub init: InitMode,
}

impl RunOptions {
    pub fn new(stop: StoppingRule) -> Self {
        Self { stop, record_every: 1, cost: CostModel::default(), init: InitMode::Zeros }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    MaxIters,
    TargetReached,
    BitBudget,
    Diverged,
}

#[derive(Clone, Debug)]
pub struct RunTrace {
    /// One entry per iteration `t = 1, 2, …`.
    pub rounds: Vec<RoundRecord>,
    /// Ordered by `t`, starting at `t = 0`.
    pub records: Vec<MetricRecord>,
    pub status: RunStatus,
    pub final_state: AlgoState,
}

impl RunTrace {
    pub fn iterations(&self) -> u64 {
        self.rounds.len() as u64
    }

    pub fn communication_rounds(&self) -> u64 {
        self.rounds.iter().filter(|r| r.communicated).count() as u64
    }

    pub fn total_bits(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.totalcom_bits)
    }
}

/// Probability used in the Lyapunov weight at iteration `t`: the constant
/// `p`, or `p_t` for decreasing schedules (diagnostic only there).
pub fn lyapunov_probability(config: &AlgoConfig, t: u64) -> f64 {
    config.schedule.prob(t.max(1))
}

fn stop_value(
    metric: StopMetric,
    state: &AlgoState,
    problem: &ProblemInstance,
    config: &AlgoConfig,
    reference: &ReferenceSolution,
) -> f64 {
    match metric {
        StopMetric::RelDist => dist_sq(&state.average_iterate(), &reference.x_star),
        StopMetric::RelSubopt => problem.full_value(&state.average_iterate()) - reference.f_star,
        StopMetric::RelPsi => lyapunov(
            state,
            reference,
            config.gamma,
            lyapunov_probability(config, state.t),
            config.k,
            state.dim(),
            config.eta,
        ),
    }
}

/// Runs the iteration from `opts.init` with all randomness derived from
/// `seed`.
pub fn run(
    problem: &ProblemInstance,
    config: &AlgoConfig,
    reference: &ReferenceSolution,
    seed: u64,
    opts: &RunOptions,
) -> Result<RunTrace> {
    let state = AlgoState::init(problem, &opts.init)?;
    let mut streams = Streams::new(seed, problem.n());
    run_from(state, problem, config, reference, &mut streams, opts)
}

pub fn run_from(
    mut state: AlgoState,
    problem: &ProblemInstance,
    config: &AlgoConfig,
    reference: &ReferenceSolution,
    streams: &mut Streams,
    opts: &RunOptions,
) -> Result<RunTrace> {
    config.validate(problem.n(), problem.dim())?;
    let d = problem.dim();
    let stop = &opts.stop;
    let (mut up, mut down) = (0u64, 0u64);
    let record = |state: &AlgoState, up: u64, down: u64| {
        let inputs = MetricInputs {
            reference,
            gamma: config.gamma,
            p: lyapunov_probability(config, state.t),
            k: config.k,
            eta: config.eta,
        };
        evaluate(state, problem, &inputs, up, down, totalcom(up, down, &opts.cost))
    };

    let mut records = vec![record(&state, 0, 0)?];
    let mut rounds = Vec::with_capacity(stop.max_iters.min(1 << 20) as usize);
    let tracked = stop.tracked();
    let initial = tracked.map(|m| stop_value(m, &state, problem, config, reference));
    let relative = |v: f64| match initial {
        Some(i) if i > 0.0 => v / i,
        _ => 0.0,
    };
    let mut status = RunStatus::MaxIters;

    if let (Some((_, level)), Some(i)) = (stop.target, initial) {
        if relative(i) <= level {
            status = RunStatus::TargetReached;
        }
    }

    while status == RunStatus::MaxIters && state.t < stop.max_iters {
        let outcome = match step(&mut state, problem, config, streams) {
            Ok(o) => o,
            // non-finite or out-of-range iterates under a divergence guard
            Err(Error::OutOfRange(_)) if stop.divergence_factor.is_some() => {
                status = RunStatus::Diverged;
                break;
            }
            Err(e) => return Err(e),
        };
        let (u, dn) = opts.cost.charge(&outcome, d);
        up += u;
        down += dn;
        rounds.push(RoundRecord {
            t: state.t,
            communicated: outcome.communicated,
            up_bits: u,
            down_bits: dn,
        });

        if let Some(m) = tracked {
            let rel = relative(stop_value(m, &state, problem, config, reference));
            if let Some(factor) = stop.divergence_factor {
                if !rel.is_finite() || rel > factor {
                    status = RunStatus::Diverged;
                }
            }
            if let Some((_, level)) = stop.target {
                if rel <= level {
                    status = RunStatus::TargetReached;
                }
            }
        }
        if status == RunStatus::MaxIters {
            if let Some(budget) = stop.bit_budget {
                if totalcom(up, down, &opts.cost) >= budget {
                    status = RunStatus::BitBudget;
                }
            }
        }

        if status != RunStatus::Diverged && opts.record_every > 0 && state.t % opts.record_every == 0 {
            records.push(record(&state, up, down)?);
        }
    }

    if status != RunStatus::Diverged && records.last().is_some_and(|r| r.t != state.t) {
        records.push(record(&state, up, down)?);
    }
    Ok(RunTrace { rounds, records, status, final_state: state })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithm::{PSchedule, Regime};
    use crate::compressors::CompressorSpec;
    use crate::metrics::{solve_reference, SolverOptions};
    use crate::problems::SyntheticQuadratic;

    fn identity_config(n: usize, d: usize, gamma: f64, schedule: PSchedule) -> AlgoConfig {
        AlgoConfig::with_defaults(
            gamma,
            d,
            schedule,
            (0..n).map(|_| CompressorSpec::identity(d).unwrap()).collect(),
            CompressorSpec::identity(d).unwrap(),
            Regime::StronglyConvex,
            None,
        )
        .unwrap()
    }

    #[test]
    fn zero_iterations_give_initial_record_only() {
        let inst = SyntheticQuadratic::new(2, 3, 10.0, 1).build().unwrap();
        let reference = ReferenceSolution::from_minimizer(&inst.problem, inst.x_star.clone());
        let cfg = identity_config(2, 3, 1.0, PSchedule::Constant { p: 1.0 });
        let trace =
            run(&inst.problem, &cfg, &reference, 0, &RunOptions::new(StoppingRule::iterations(0))).unwrap();
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.records[0].t, 0);
        assert!(trace.rounds.is_empty());
        assert_eq!(trace.status, RunStatus::MaxIters);
    }

    #[test]
    fn deterministic_descent() {
        let inst = SyntheticQuadratic::new(3, 5, 20.0, 2).build().unwrap();
        let reference = solve_reference(&inst.problem, &SolverOptions::default()).unwrap();
        let l = inst.problem.smoothness;
        let cfg = identity_config(3, 5, 1.0 / l, PSchedule::Constant { p: 1.0 });
        let trace =
            run(&inst.problem, &cfg, &reference, 7, &RunOptions::new(StoppingRule::iterations(300))).unwrap();
        let s: Vec<f64> = trace.records.iter().map(|r| r.subopt).collect();
        for w in s.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-15, "{} > {}", w[1], w[0]);
        }
        assert!(s.last().unwrap() < &(1e-6 * s[0]));
    }

    #[test]
    fn target_and_budget_stop() {
        let inst = SyntheticQuadratic::new(2, 4, 10.0, 3).build().unwrap();
        let reference = ReferenceSolution::from_minimizer(&inst.problem, inst.x_star.clone());
        let cfg = identity_config(2, 4, 1.0, PSchedule::Constant { p: 0.5 });
        let mut stop = StoppingRule::iterations(100_000);
        stop.target = Some((StopMetric::RelDist, 1e-8));
        let trace = run(&inst.problem, &cfg, &reference, 1, &RunOptions::new(stop)).unwrap();
        assert_eq!(trace.status, RunStatus::TargetReached);
        let last = trace.records.last().unwrap();
        assert!(last.dist_sq <= 1e-8 * trace.records[0].dist_sq);

        let mut stop = StoppingRule::iterations(100_000);
        stop.bit_budget = Some(10_000.0);
        let trace = run(&inst.problem, &cfg, &reference, 1, &RunOptions::new(stop)).unwrap();
        assert_eq!(trace.status, RunStatus::BitBudget);
        assert!(trace.total_bits() >= 10_000.0);
        // one round costs 3 messages of 4 floats
        assert!(trace.total_bits() < 10_000.0 + 3.0 * 128.0);
    }

    #[test]
    fn divergence_guard() {
        let inst = SyntheticQuadratic::new(2, 4, 10.0, 3).build().unwrap();
        let reference = ReferenceSolution::from_minimizer(&inst.problem, inst.x_star.clone());
        let cfg = identity_config(2, 4, 10.0, PSchedule::Constant { p: 0.5 });
        let mut stop = StoppingRule::iterations(10_000);
        stop.divergence_factor = Some(1e3);
        let trace = run(&inst.problem, &cfg, &reference, 1, &RunOptions::new(stop)).unwrap();
        assert_eq!(trace.status, RunStatus::Diverged);
    }

    #[test]
    fn decreasing_schedule_rounds_grow_like_sqrt() {
        let inst = SyntheticQuadratic::new(2, 3, 10.0, 4).build().unwrap();
        let reference = ReferenceSolution::from_minimizer(&inst.problem, inst.x_star.clone());
        let mut cfg = identity_config(2, 3, 1.0, PSchedule::Constant { p: 1.0 });
        cfg.schedule = PSchedule::decreasing_for_eta(cfg.eta);
        let mut opts = RunOptions::new(StoppingRule::iterations(4000));
        opts.record_every = 0;
        let mean_rounds: f64 = (0..20)
            .map(|s| run(&inst.problem, &cfg, &reference, s, &opts).unwrap().communication_rounds() as f64)
            .sum::<f64>()
            / 20.0;
        let expected = cfg.schedule.expected_rounds(4000);
        assert!((mean_rounds - expected).abs() < 0.1 * expected);
    }
}
