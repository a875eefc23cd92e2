use dflrb_core::datagen::{
    gen_gridsp, gen_knapsack, gen_portfolio, Generated, GridSpGenConfig, KnapsackGenConfig,
    PortfolioGenConfig, Splits,
};
use dflrb_core::nn::{ModelKind, OutputActivation, PredictiveModel};
use dflrb_core::rng::{derive_seed, stream, tag};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::presets::ProblemPreset;

/// Generates the configured dataset. The dataset depends only on the
/// problem, its size and the seed, so every method and trial sees the same
/// instances.
pub fn generate(cfg: &ExperimentConfig) -> Result<Generated<f64>> {
    let seed = cfg.seed;
    let g = match cfg.problem {
        ProblemPreset::Knapsack60 | ProblemPreset::Knapsack120 => {
            let base = KnapsackGenConfig::default();
            gen_knapsack(&KnapsackGenConfig {
                n_days: cfg.n_instances.unwrap_or(base.n_days),
                capacity: if cfg.problem == ProblemPreset::Knapsack60 { 60 } else { 120 },
                seed,
                ..base
            })?
        }
        ProblemPreset::PortfolioDeg1 | ProblemPreset::PortfolioDeg16 => {
            let base = PortfolioGenConfig::default();
            gen_portfolio(&PortfolioGenConfig {
                n_samples: cfg.n_instances.unwrap_or(base.n_samples),
                deg: if cfg.problem == ProblemPreset::PortfolioDeg1 { 1 } else { 16 },
                seed,
                ..base
            })?
        }
        ProblemPreset::GridSp12 | ProblemPreset::GridSp24 => {
            let base = GridSpGenConfig::default();
            let side = if cfg.problem == ProblemPreset::GridSp12 { 12 } else { 24 };
            gen_gridsp(&GridSpGenConfig {
                n_samples: cfg.n_instances.unwrap_or(base.n_samples),
                side: cfg.grid_side.unwrap_or(side),
                seed,
                ..base
            })?
        }
    };
    Ok(g)
}

pub fn split(cfg: &ExperimentConfig, g: &Generated<f64>) -> Result<Splits<f64>> {
    Ok(g.split(cfg.split, derive_seed(cfg.seed, &[tag("split")]))?)
}

/// A dense linear map from features to costs. Shortest-path costs are
/// clamped at zero; knapsack values and asset returns are left signed.
pub fn initial_model(
    problem: ProblemPreset,
    feature_dim: usize,
    cost_dim: usize,
    seed: u64,
) -> Result<PredictiveModel<f64>> {
    let act = match problem {
        ProblemPreset::GridSp12 | ProblemPreset::GridSp24 => OutputActivation::Relu,
        _ => OutputActivation::None,
    };
    let mut rng = stream(seed, &[tag("init")]);
    Ok(PredictiveModel::new(
        ModelKind::Linear,
        feature_dim,
        cost_dim,
        act,
        &mut rng,
    )?)
}
