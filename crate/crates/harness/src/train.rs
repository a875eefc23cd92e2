//! Per-instance stochastic training with Adam, a plateau scheduler on the
//! validation metric and best-validation checkpointing.

use dflrb_core::metrics::abs_re;
use dflrb_core::nn::{AdamState, PlateauScheduler, PredictiveModel};
use dflrb_core::problem::{Dataset, DecisionProblem};
use dflrb_core::rng::{stream, tag};
use dflrb_core::surrogates::{loss_and_grad, Method, SolutionCache};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::config::MethodSettings;
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Absent for the untrained entry.
    pub train_loss: Option<f64>,
    /// Mean validation regret, or mean validation MSE for the two-stage learner.
    pub val_metric: f64,
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: PredictiveModel<f64>,
    /// Final ranking pool; `None` for methods that do not use one.
    pub cache: Option<SolutionCache<f64>>,
    /// Entry 0 is the untrained model.
    pub curve: Vec<EpochStats>,
    pub best_epoch: usize,
}

/// Mean per-component squared error over a dataset.
pub fn mean_mse(model: &PredictiveModel<f64>, data: &Dataset<f64>) -> Result<f64> {
    let mut total = 0.0;
    for inst in &data.instances {
        let c_hat = model.forward(&inst.features)?;
        total += squared_error(&c_hat, &inst.true_cost) / c_hat.len() as f64;
    }
    Ok(total / data.len() as f64)
}

pub(crate) fn squared_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn mean_regret(
    model: &PredictiveModel<f64>,
    problem: &DecisionProblem<f64>,
    data: &Dataset<f64>,
) -> Result<f64> {
    let mut total = 0.0;
    for inst in &data.instances {
        let c_hat = model.forward(&inst.features)?;
        let x_hat = problem.solve(&c_hat)?.decision;
        total += abs_re(problem, &inst.true_cost, &x_hat, &inst.oracle_solution)?;
    }
    Ok(total / data.len() as f64)
}

fn validation_metric(
    method: Method,
    model: &PredictiveModel<f64>,
    problem: &DecisionProblem<f64>,
    val: &Dataset<f64>,
) -> Result<f64> {
    if method == Method::TwoStageMse {
        mean_mse(model, val)
    } else {
        mean_regret(model, problem, val)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub epochs: usize,
    pub p_solve: f64,
    /// Fixes shuffling, surrogate noise and cache growth.
    pub seed: u64,
}

fn at_step(e: HarnessError, method: Method, epoch: usize, i: usize) -> HarnessError {
    let ctx = |m: String| format!("{method} at epoch {epoch}, training instance {i}: {m}");
    match e {
        HarnessError::Config(m) => HarnessError::Config(ctx(m)),
        HarnessError::Numerical(m) => HarnessError::Numerical(ctx(m)),
        HarnessError::Io(m) => HarnessError::Io(ctx(m)),
    }
}

/// Trains from `model` and returns the best-validation state.
pub fn train(
    settings: &MethodSettings,
    problem: &DecisionProblem<f64>,
    train_set: &Dataset<f64>,
    val_set: &Dataset<f64>,
    model: PredictiveModel<f64>,
    opts: &TrainOptions,
) -> Result<TrainOutcome> {
    let TrainOptions {
        epochs,
        p_solve,
        seed,
    } = *opts;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(HarnessError::Config("training needs non-empty train and validation sets".into()));
    }
    let method = settings.method;
    let mut cache = if method.uses_cache() {
        let pool = train_set.instances.iter().map(|i| i.oracle_solution.as_slice());
        Some(SolutionCache::from_solutions(pool, p_solve)?)
    } else {
        None
    };
    let mut model = model;
    let mut params = model.params();
    let mut adam = AdamState::new(params.len(), settings.lr);
    let mut scheduler = PlateauScheduler::new(settings.lr);
    let mut noise = stream(seed, &[tag("surrogate")]);
    let mut growth = stream(seed, &[tag("cache")]);

    let initial = validation_metric(method, &model, problem, val_set)?;
    let mut curve = vec![EpochStats {
        epoch: 0,
        train_loss: None,
        val_metric: initial,
        lr: settings.lr,
    }];
    let (mut best_metric, mut best_params, mut best_epoch) = (initial, params.clone(), 0);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=epochs {
        order.shuffle(&mut stream(seed, &[tag("shuffle"), epoch as u64]));
        let mut loss_sum = 0.0;
        for &i in &order {
            let inst = &train_set.instances[i];
            let c_hat = model.forward(&inst.features)?;
            let lg = loss_and_grad(
                &settings.surrogate,
                problem,
                &c_hat,
                &inst.true_cost,
                &inst.oracle_solution,
                cache.as_ref(),
                &mut noise,
            )
            .map_err(|e| at_step(e.into(), method, epoch, i))?;
            if !lg.loss.is_finite() {
                return Err(HarnessError::Numerical(format!(
                    "{method} diverged at epoch {epoch}, training instance {i}: loss {}",
                    lg.loss
                )));
            }
            loss_sum += lg.loss;
            let grads = model.backward(&inst.features, &lg.grad)?.params;
            adam.step(&mut params, &grads).map_err(|e| {
                HarnessError::Numerical(format!(
                    "{method} diverged at epoch {epoch}, training instance {i}: {e}"
                ))
            })?;
            model.set_params(&params)?;
            if let Some(c) = cache.as_mut() {
                c.update(problem, &c_hat, &mut growth)?;
            }
        }
        let val_metric = validation_metric(method, &model, problem, val_set)?;
        adam.lr = scheduler.step(val_metric).map_err(|e| {
            HarnessError::Numerical(format!("{method} at epoch {epoch}: {e}"))
        })?;
        curve.push(EpochStats {
            epoch,
            train_loss: Some(loss_sum / train_set.len() as f64),
            val_metric,
            lr: adam.lr,
        });
        if val_metric < best_metric {
            best_metric = val_metric;
            best_params.clone_from(&params);
            best_epoch = epoch;
        }
    }
    model.set_params(&best_params)?;
    Ok(TrainOutcome {
        model,
        cache,
        curve,
        best_epoch,
    })
}
