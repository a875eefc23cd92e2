//! Synthetic grid shortest-path data: per-cell Gaussian features mapped to
//! costs in `[0.8, 9.2]` through a shared affine map and a sigmoid.
//!
//! Draw order: map weights `a` (dim), bias, then per instance all cell
//! features (cell-major).

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Generated;
use crate::error::{Error, Result};
use crate::problem::{DecisionProblem, GridShortestPath, Instance};
use crate::scalar::Scalar;

pub const COST_MIN: f64 = 0.8;
pub const COST_MAX: f64 = 9.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpGenConfig {
    pub n_samples: usize,
    pub side: usize,
    pub feature_dim: usize,
    pub seed: u64,
}

impl Default for GridSpGenConfig {
    fn default() -> Self {
        Self {
            n_samples: 500,
            side: 12,
            feature_dim: 5,
            seed: 0,
        }
    }
}

/// `0.8 + 8.4 · σ(aᵀf + b)`
pub fn cell_cost(a: &[f64], bias: f64, f: &[f64]) -> f64 {
    let s: f64 = a.iter().zip(f).map(|(x, y)| x * y).sum::<f64>() + bias;
    COST_MIN + (COST_MAX - COST_MIN) / (1.0 + (-s).exp())
}

pub fn gen_gridsp<T: Scalar>(config: &GridSpGenConfig) -> Result<Generated<T>> {
    let GridSpGenConfig {
        n_samples,
        side,
        feature_dim: dim,
        seed,
    } = *config;
    if n_samples == 0 || dim == 0 {
        return Err(Error::InvalidConfig("gridsp sizes must be positive".into()));
    }
    let grid = GridShortestPath::new(side)?;
    let problem = DecisionProblem::ShortestPath(grid);
    let mut rng = crate::rng::seeded(seed);
    let scale = 2.0 / (dim as f64).sqrt();
    let a: Vec<f64> = (0..dim)
        .map(|_| {
            let n: f64 = StandardNormal.sample(&mut rng);
            scale * n
        })
        .collect();
    let bias: f64 = rng.random_range(-0.5..0.5);
    let cells = side * side;
    let mut instances = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let f: Vec<f64> = (0..cells * dim)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let cost: Vec<T> = f
            .chunks(dim)
            .map(|cell| T::of(cell_cost(&a, bias, cell)))
            .collect();
        instances.push(Instance::new(
            &problem,
            f.into_iter().map(T::of).collect(),
            cost,
        )?);
    }
    Ok(Generated { problem, instances })
}
