use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::time::Instant;

use bicolor_core::accounting::CostModel;
use bicolor_core::algorithm::{
    corollary_probability, corollary_sparsity, run, AlgoConfig, InitMode, PSchedule, Regime, RunOptions,
    RunStatus, SparsifyStrategy, StoppingRule,
};
use bicolor_core::compressors::{CompressorKind, CompressorSpec, Independence};
use bicolor_core::metrics::{solve_reference, ReferenceSolution, SolverOptions};
use bicolor_core::problems::{
    estimate_l, parse_libsvm, partition, scale_mu_for_kappa, ProblemInstance, SparseDataset,
    SyntheticQuadratic,
};
use bicolor_core::rng::substream;
use flate2::read::GzDecoder;
use log::{debug, info};
use rayon::prelude::*;

use crate::config::{DataSource, ExperimentConfig, GammaSpec, ScheduleSpec, Strategy};
use crate::error::{HarnessError, Result};
use crate::trace::{fingerprint, SeedTrace, TraceSet};

/// Environment variable holding the worker thread count.
pub const WORKERS_ENV: &str = "BICOLOR_WORKERS";

/// Everything needed to run an experiment, built from its config.
#[derive(Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub problem: ProblemInstance,
    /// Algorithm parameters with γ = 1/L; runs substitute the tuned γ.
    pub algo: AlgoConfig,
    pub reference: ReferenceSolution,
    pub options: RunOptions,
    pub smoothness: f64,
    pub mu: f64,
}

pub fn load_libsvm(path: &Path, dim: Option<usize>) -> Result<SparseDataset> {
    let file = File::open(path)?;
    let reader: Box<dyn BufRead> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(BufReader::new(GzDecoder::new(file)))
    } else {
        Box::new(BufReader::new(file))
    };
    Ok(parse_libsvm(reader, dim)?)
}

fn logistic_problem(cfg: &ExperimentConfig, data: SparseDataset) -> Result<(ProblemInstance, f64)> {
    let mut rng = substream(cfg.partition_seed, 0);
    let shards = partition(&data, cfg.n, &mut rng)?;
    let mu = match (cfg.mu, cfg.kappa) {
        (Some(mu), _) => mu,
        (None, Some(kappa)) => {
            let mut l_data = 0.0f64;
            for s in &shards {
                l_data = l_data.max(estimate_l(s, 0.0, 1e-10)?);
            }
            scale_mu_for_kappa(l_data, kappa)?
        }
        (None, None) => 0.0,
    };
    Ok((ProblemInstance::logistic(shards, mu, cfg.layout)?, mu))
}

fn compressors(
    cfg: &ExperimentConfig,
    d: usize,
    kappa: Option<f64>,
) -> Result<(usize, Vec<CompressorSpec>, CompressorSpec)> {
    let n = cfg.n;
    let need_kappa = || {
        kappa.ok_or_else(|| {
            HarnessError::Config("without strong convexity the sparsity level `k` must be given".into())
        })
    };
    Ok(match cfg.strategy {
        Strategy::SubsetKNatural => {
            let k = match cfg.k {
                Some(k) => k,
                None => corollary_sparsity(cfg.alpha, d, n, need_kappa()?, SparsifyStrategy::SubsetK)?.k,
            };
            let up = (0..n).map(|_| CompressorSpec::natural(d)).collect::<bicolor_core::Result<_>>()?;
            (k, up, CompressorSpec::natural(d)?)
        }
        Strategy::RandKNatural => {
            let (k_client, k_server) = match cfg.k {
                Some(k) => (k, k),
                None => {
                    let s = corollary_sparsity(cfg.alpha, d, n, need_kappa()?, SparsifyStrategy::RandK)?;
                    (s.k_client, s.k_server)
                }
            };
            let up = (0..n)
                .map(|_| CompressorSpec::rand_k_natural(d, k_client))
                .collect::<bicolor_core::Result<_>>()?;
            (d, up, CompressorSpec::rand_k_natural(d, k_server)?)
        }
        Strategy::Custom => {
            let c = cfg.custom.as_ref().expect("validated");
            let independence = if c.shared_randomness {
                Independence::SharedRandomness
            } else {
                Independence::MutuallyIndependent
            };
            let mk = |kind: &CompressorKind| {
                CompressorSpec::new(kind.clone(), d).map(|s| s.with_independence(independence))
            };
            let up = (0..n).map(|_| mk(&c.uplink)).collect::<bicolor_core::Result<_>>()?;
            (c.k, up, mk(&c.downlink)?)
        }
    })
}

pub fn build_experiment(cfg: &ExperimentConfig) -> Result<Experiment> {
    cfg.validate()?;
    let (problem, mu, x_star) = match &cfg.data {
        DataSource::Libsvm { path, dim } => {
            let data = load_libsvm(path, *dim)?;
            let (p, mu) = logistic_problem(cfg, data)?;
            (p, mu, None)
        }
        DataSource::SyntheticLogistic { rows, dim, label_noise, seed } => {
            let data = SparseDataset::synthetic_logistic(*rows, *dim, *label_noise, *seed);
            let (p, mu) = logistic_problem(cfg, data)?;
            (p, mu, None)
        }
        DataSource::SyntheticQuadratic { dim, seed } => {
            let kappa = cfg.kappa.expect("validated");
            let inst = SyntheticQuadratic::new(cfg.n, *dim, kappa, *seed).build()?;
            let mu = inst.problem.strong_convexity;
            (inst.problem, mu, Some(inst.x_star))
        }
    };
    let d = problem.dim();
    let smoothness = problem.smoothness;
    let kappa = problem.kappa();
    info!("problem: n = {}, d = {d}, L = {smoothness:.6e}, mu = {mu:.6e}", cfg.n);

    let (k, uplink, downlink) = compressors(cfg, d, kappa)?;
    let regime = cfg.regime.unwrap_or(if mu > 0.0 {
        Regime::StronglyConvex
    } else {
        Regime::GeneralConvex { c: 0.99 }
    });
    let mut algo = AlgoConfig::with_defaults(
        1.0 / smoothness,
        k,
        PSchedule::Constant { p: 1.0 },
        uplink,
        downlink,
        regime,
        cfg.omega_av_override,
    )?;
    let decreasing = PSchedule::decreasing_for_eta(algo.eta);
    algo.schedule = match cfg.schedule {
        ScheduleSpec::Theory => match kappa {
            Some(kappa) => PSchedule::Constant { p: corollary_probability(d, k, kappa, algo.eta) },
            None => decreasing,
        },
        ScheduleSpec::Constant { p } => PSchedule::Constant { p },
        ScheduleSpec::Decreasing { a, b } => PSchedule::Decreasing { a, b },
        ScheduleSpec::DecreasingTheory => decreasing,
        ScheduleSpec::MatchedConstant => decreasing.matched_constant(cfg.stop.max_iters),
    };
    algo.validate(cfg.n, d)?;
    info!("k = {k}, rho = {:.4e}, eta = {:.4e}, schedule = {:?}", algo.rho, algo.eta, algo.schedule);

    let reference = match x_star {
        Some(x) => ReferenceSolution::from_minimizer(&problem, x),
        None => solve_reference(&problem, &SolverOptions::default())?,
    };
    debug!("reference: F* = {:.12e}, |grad F| = {:.3e}", reference.f_star, reference.grad_norm);

    let options = RunOptions {
        stop: StoppingRule {
            max_iters: cfg.stop.max_iters,
            target: cfg.stop.target.map(|t| (cfg.stop.metric, t)),
            bit_budget: cfg.stop.bit_budget,
            divergence_factor: None,
        },
        record_every: cfg.record_every,
        cost: CostModel {
            alpha: cfg.alpha,
            count_index_overhead: cfg.count_index_overhead,
            uplink_policy: cfg.uplink_policy,
        },
        init: InitMode::Zeros,
    };
    Ok(Experiment { config: cfg.clone(), problem, algo, reference, options, smoothness, mu })
}

/// Runs `f` on a pool sized by [`WORKERS_ENV`] when set.
pub fn with_workers<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        Some(w) if w > 0 => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

impl Experiment {
    /// Candidate stepsizes, or `None` for a fixed γ.
    pub fn gamma_grid(&self) -> Option<Vec<f64>> {
        let inv_l = 1.0 / self.smoothness;
        match &self.config.gamma {
            GammaSpec::Theory | GammaSpec::Fixed { .. } => None,
            GammaSpec::Grid { factors } => Some(factors.iter().map(|f| f * inv_l).collect()),
            GammaSpec::DefaultGrid => Some(GammaSpec::default_factors().iter().map(|f| f * inv_l).collect()),
        }
    }

    pub fn fixed_gamma(&self) -> f64 {
        match self.config.gamma {
            GammaSpec::Fixed { value } => value,
            _ => 1.0 / self.smoothness,
        }
    }

    /// One run per seed at stepsize `gamma`, in parallel, returned in seed
    /// order.
    pub fn run_seeds(&self, gamma: f64, options: &RunOptions) -> Result<Vec<SeedTrace>> {
        let mut algo = self.algo.clone();
        algo.gamma = gamma;
        let seeds = &self.config.seeds;
        let results: Vec<Result<SeedTrace>> = with_workers(|| {
            seeds
                .par_iter()
                .map(|&seed| {
                    let trace = run(&self.problem, &algo, &self.reference, seed, options)?;
                    Ok(SeedTrace { seed, gamma, trace })
                })
                .collect()
        });
        results.into_iter().collect()
    }

    /// Tunes γ if a grid is configured, then runs every seed on the full
    /// budget.
    pub fn execute(&self) -> Result<TraceSet> {
        let start = Instant::now();
        let gamma = match self.gamma_grid() {
            Some(grid) => {
                let sweep = crate::sweep::sweep_gamma(self, &grid)?;
                info!("tuned gamma = {:.6e}", sweep.best_gamma);
                sweep.best_gamma
            }
            None => self.fixed_gamma(),
        };
        let traces = self.run_seeds(gamma, &self.options)?;
        for t in &traces {
            if t.trace.status == RunStatus::Diverged {
                log::warn!("seed {} diverged", t.seed);
            }
        }
        Ok(TraceSet {
            fingerprint: fingerprint(&self.config)?,
            stop_metric: self.config.stop.metric,
            gamma,
            wall_clock: start.elapsed(),
            traces,
        })
    }
}
