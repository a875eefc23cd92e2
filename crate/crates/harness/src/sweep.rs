//! Attack sweeps over trained models and the (method, trial) worker pool.
//!
//! Every random draw comes from a stream keyed by the base seed and the
//! job's coordinates, so results do not depend on thread scheduling.

use dflrb_core::attacks::{df_fgsm, pf_fgsm, AttackKind};
use dflrb_core::metrics::{abs_re, rre, Norm, RRE_DENOMINATOR_TOL};
use dflrb_core::nn::PredictiveModel;
use dflrb_core::problem::{Dataset, DecisionProblem};
use dflrb_core::rng::{derive_seed, seeded, tag};
use dflrb_core::surrogates::{Method, SolutionCache};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, MethodSettings};
use crate::data;
use crate::error::{HarnessError, Result};
use crate::train::{squared_error, train, EpochStats, TrainOptions};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "DFLRB_THREADS";

/// One (attack, ε, test instance) evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub attack: AttackKind,
    pub epsilon: f64,
    pub instance: usize,
    /// Seed of the noise stream used by a stochastic decision-focused attack.
    pub seed: u64,
    #[serde(flatten)]
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellOutcome {
    Ok(Box<CellMetrics>),
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub features_adv: Vec<f64>,
    pub prediction_clean: Vec<f64>,
    pub prediction_adv: Vec<f64>,
    pub decision_clean: Vec<f64>,
    pub decision_adv: Vec<f64>,
    /// `‖m(z+ε) − c‖_q`
    pub mae: f64,
    /// `‖m(z+ε) − m(z)‖_q`
    pub fe: f64,
    /// Per-component mean squared error.
    pub mse_clean: f64,
    pub mse_adv: f64,
    pub regret_clean: f64,
    pub regret_adv: f64,
    /// Absent when `|cᵀx*|` is too small to normalize by.
    pub rre_clean: Option<f64>,
    pub rre_adv: Option<f64>,
}

impl CellRecord {
    pub fn metrics(&self) -> Option<&CellMetrics> {
        match &self.outcome {
            CellOutcome::Ok(m) => Some(m),
            CellOutcome::Failed { .. } => None,
        }
    }
}

/// Everything one trained model produced under attack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub method: Method,
    pub trial: usize,
    pub seed: u64,
    pub cells: Vec<CellRecord>,
}

/// Attacks that apply to `method`: the two-stage learner has no decision
/// surrogate to ascend.
pub fn applicable_attacks(method: Method, attacks: &[AttackKind]) -> Vec<AttackKind> {
    attacks
        .iter()
        .copied()
        .filter(|&a| !(method == Method::TwoStageMse && a == AttackKind::DecisionFocused))
        .collect()
}

/// `{0} ∪ epsilons`, ascending and deduplicated.
pub fn epsilon_grid(epsilons: &[f64]) -> Vec<f64> {
    let mut e = epsilons.to_vec();
    e.push(0.0);
    e.sort_by(f64::total_cmp);
    e.dedup();
    e
}

pub struct AttackContext<'a> {
    pub problem: &'a DecisionProblem<f64>,
    pub settings: &'a MethodSettings,
    /// Ranking pool the model was trained with.
    pub cache: Option<&'a SolutionCache<f64>>,
    pub q: Norm,
}

struct Clean {
    prediction: Vec<f64>,
    decision: Vec<f64>,
    mse: f64,
    regret: f64,
    rre: Option<f64>,
}

fn clean_eval(
    ctx: &AttackContext<'_>,
    model: &PredictiveModel<f64>,
    z: &[f64],
    c: &[f64],
    x_star: &[f64],
) -> Result<Clean> {
    let prediction = model.forward(z)?;
    let decision = ctx.problem.solve(&prediction)?.decision;
    Ok(Clean {
        mse: squared_error(&prediction, c) / c.len() as f64,
        regret: abs_re(ctx.problem, c, &decision, x_star)?,
        rre: rre(ctx.problem, c, &decision, x_star, RRE_DENOMINATOR_TOL).ok(),
        prediction,
        decision,
    })
}

#[allow(clippy::too_many_arguments)]
fn attack_cell(
    ctx: &AttackContext<'_>,
    model: &PredictiveModel<f64>,
    clean: &Clean,
    attack: AttackKind,
    epsilon: f64,
    seed: u64,
    (z, c, x_star): (&[f64], &[f64], &[f64]),
) -> Result<CellMetrics> {
    let features_adv = if epsilon == 0.0 {
        z.to_vec()
    } else {
        match attack {
            AttackKind::PredictionFocused => pf_fgsm(model, z, c, epsilon)?,
            AttackKind::DecisionFocused => df_fgsm(
                model,
                ctx.problem,
                &ctx.settings.surrogate,
                ctx.cache,
                z,
                c,
                x_star,
                epsilon,
                None,
                &mut seeded(seed),
            )?,
        }
    };
    let (prediction_adv, decision_adv) = if features_adv == z {
        (clean.prediction.clone(), clean.decision.clone())
    } else {
        let p = model.forward(&features_adv)?;
        let d = ctx.problem.solve(&p)?.decision;
        (p, d)
    };
    let diff = |a: &[f64], b: &[f64]| ctx.q.apply(a.iter().zip(b).map(|(u, v)| u - v));
    Ok(CellMetrics {
        mae: diff(&prediction_adv, c),
        fe: diff(&prediction_adv, &clean.prediction),
        mse_clean: clean.mse,
        mse_adv: squared_error(&prediction_adv, c) / c.len() as f64,
        regret_clean: clean.regret,
        regret_adv: abs_re(ctx.problem, c, &decision_adv, x_star)?,
        rre_clean: clean.rre,
        rre_adv: rre(ctx.problem, c, &decision_adv, x_star, RRE_DENOMINATOR_TOL).ok(),
        features_adv,
        prediction_clean: clean.prediction.clone(),
        prediction_adv,
        decision_clean: clean.decision.clone(),
        decision_adv,
    })
}

/// Evaluates `model` on every (attack, ε, instance) cell, attack-major then
/// ε ascending then instance order. Failures are recorded per cell.
pub fn run_attack_sweep(
    model: &PredictiveModel<f64>,
    ctx: &AttackContext<'_>,
    test: &Dataset<f64>,
    epsilons: &[f64],
    attacks: &[AttackKind],
    trial: usize,
    seed: u64,
) -> AttackReport {
    let method = ctx.settings.method;
    let attacks = applicable_attacks(method, attacks);
    let grid = epsilon_grid(epsilons);
    let cleans: Vec<Result<Clean>> = test
        .instances
        .iter()
        .map(|i| clean_eval(ctx, model, &i.features, &i.true_cost, &i.oracle_solution))
        .collect();

    let mut cells = Vec::with_capacity(attacks.len() * grid.len() * test.len());
    for &attack in &attacks {
        for (e_idx, &epsilon) in grid.iter().enumerate() {
            for (n, inst) in test.instances.iter().enumerate() {
                let cell_seed = derive_seed(seed, &[tag(attack.name()), e_idx as u64, n as u64]);
                let res = cleans[n].as_ref().map_err(clone_err).and_then(|clean| {
                    attack_cell(
                        ctx,
                        model,
                        clean,
                        attack,
                        epsilon,
                        cell_seed,
                        (&inst.features, &inst.true_cost, &inst.oracle_solution),
                    )
                });
                cells.push(CellRecord {
                    attack,
                    epsilon,
                    instance: n,
                    seed: cell_seed,
                    outcome: match res {
                        Ok(m) => CellOutcome::Ok(Box::new(m)),
                        Err(e) => CellOutcome::Failed {
                            error: e.to_string(),
                        },
                    },
                });
            }
        }
    }
    AttackReport {
        method,
        trial,
        seed,
        cells,
    }
}

fn clone_err(e: &HarnessError) -> HarnessError {
    match e {
        HarnessError::Config(m) => HarnessError::Config(m.clone()),
        HarnessError::Numerical(m) => HarnessError::Numerical(m.clone()),
        HarnessError::Io(m) => HarnessError::Io(m.clone()),
    }
}

/// One trained and attacked model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub method: Method,
    pub trial: usize,
    pub seed: u64,
    pub settings: MethodSettings,
    pub best_epoch: usize,
    pub curve: Vec<EpochStats>,
    /// Set when training aborted; the report is then empty.
    pub error: Option<String>,
    pub report: AttackReport,
}

pub fn trial_seed(base: u64, method: Method, trial: usize) -> u64 {
    derive_seed(base, &[tag(method.name()), trial as u64])
}

fn run_trial(
    cfg: &ExperimentConfig,
    problem: &DecisionProblem<f64>,
    splits: &dflrb_core::datagen::Splits<f64>,
    settings: &MethodSettings,
    trial: usize,
) -> Result<TrialResult> {
    let method = settings.method;
    let seed = trial_seed(cfg.seed, method, trial);
    let model = data::initial_model(
        cfg.problem,
        splits.train.feature_dim(),
        splits.train.cost_dim(),
        seed,
    )?;
    let opts = TrainOptions {
        epochs: cfg.epochs,
        p_solve: cfg.p_solve,
        seed,
    };
    let empty = AttackReport {
        method,
        trial,
        seed,
        cells: Vec::new(),
    };
    let out = match train(settings, problem, &splits.train, &splits.validation, model, &opts) {
        Ok(out) => out,
        Err(e @ HarnessError::Numerical(_)) => {
            return Ok(TrialResult {
                method,
                trial,
                seed,
                settings: settings.clone(),
                best_epoch: 0,
                curve: Vec::new(),
                error: Some(e.to_string()),
                report: empty,
            })
        }
        Err(e) => return Err(e),
    };
    let ctx = AttackContext {
        problem,
        settings,
        cache: out.cache.as_ref(),
        q: cfg.q,
    };
    let report = run_attack_sweep(
        &out.model,
        &ctx,
        &splits.test,
        &cfg.epsilons,
        &cfg.attacks,
        trial,
        seed,
    );
    Ok(TrialResult {
        method,
        trial,
        seed,
        settings: settings.clone(),
        best_epoch: out.best_epoch,
        curve: out.curve,
        error: None,
        report,
    })
}

/// Worker count: `DFLRB_THREADS` when set to a positive integer, else all
/// available cores.
pub fn worker_threads() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(HarnessError::Config(format!(
                "{THREADS_ENV} must be a positive integer, got '{v}'"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Trains and attacks every (method, trial) pair. Results come back in
/// method order, then trial order, whatever the thread count.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    run_sweep_with_threads(cfg, worker_threads()?)
}

pub fn run_sweep_with_threads(cfg: &ExperimentConfig, threads: usize) -> Result<Vec<TrialResult>> {
    cfg.validate()?;
    let generated = data::generate(cfg)?;
    let splits = data::split(cfg, &generated)?;
    let problem = &generated.problem;
    let mut jobs = Vec::new();
    for method in cfg.sweep_methods() {
        let settings = cfg.settings_for(method)?;
        for trial in 0..cfg.trials {
            jobs.push((settings.clone(), trial));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        jobs.par_iter()
            .map(|(settings, trial)| run_trial(cfg, problem, &splits, settings, *trial))
            .collect()
    })
}
