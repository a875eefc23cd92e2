//! Synthetic dataset generators and dataset file formats.
//!
//! Generated files are JSON lines, one instance per line:
//! `{"features":[...],"cost":[...]}`. Oracle decisions are recomputed on load.

pub mod gridsp;
pub mod knapsack;
pub mod portfolio;

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{Dataset, DecisionProblem, Instance, Split};
use crate::scalar::Scalar;

pub use gridsp::{gen_gridsp, GridSpGenConfig};
pub use knapsack::{gen_knapsack, KnapsackGenConfig, KnapsackSource};
pub use portfolio::{gen_portfolio, PortfolioGenConfig};

/// A problem together with all of its generated instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Generated<T> {
    pub problem: DecisionProblem<T>,
    pub instances: Vec<Instance<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splits<T> {
    pub train: Dataset<T>,
    pub validation: Dataset<T>,
    pub test: Dataset<T>,
}

impl<T: Scalar> Generated<T> {
    /// Shuffles with `seed` and cuts into train/validation/test by `ratios`
    /// (normalized). Every part receives at least one instance.
    pub fn split(&self, ratios: [f64; 3], seed: u64) -> Result<Splits<T>> {
        let n = self.instances.len();
        if n < 3 {
            return Err(Error::InvalidConfig(format!(
                "need at least 3 instances to split, got {n}"
            )));
        }
        if ratios.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::InvalidConfig("split ratios must be positive".into()));
        }
        let total: f64 = ratios.iter().sum();
        let n_train = ((ratios[0] / total * n as f64).round() as usize).clamp(1, n - 2);
        let n_val = ((ratios[1] / total * n as f64).round() as usize).clamp(1, n - 1 - n_train);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut crate::rng::seeded(seed));
        let take = |range: std::ops::Range<usize>, split| {
            Dataset::new(
                order[range]
                    .iter()
                    .map(|&i| self.instances[i].clone())
                    .collect(),
                split,
            )
        };
        Ok(Splits {
            train: take(0..n_train, Split::Train)?,
            validation: take(n_train..n_train + n_val, Split::Validation)?,
            test: take(n_train + n_val..n, Split::Test)?,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct Row<T> {
    features: Vec<T>,
    cost: Vec<T>,
}

pub fn write_jsonl<T: Scalar>(path: impl AsRef<Path>, instances: &[Instance<T>]) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    for inst in instances {
        let row = Row {
            features: inst.features.clone(),
            cost: inst.true_cost.clone(),
        };
        serde_json::to_writer(&mut out, &row).map_err(|e| Error::Io(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads instances for `problem`, recomputing oracle decisions. Blank lines
/// are skipped; errors carry 1-based line numbers.
pub fn read_jsonl<T: Scalar>(
    path: impl AsRef<Path>,
    problem: &DecisionProblem<T>,
) -> Result<Vec<Instance<T>>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Row<T> = serde_json::from_str(&line).map_err(|e| Error::Data {
            line: i + 1,
            message: e.to_string(),
        })?;
        let inst = Instance::new(problem, row.features, row.cost).map_err(|e| Error::Data {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(inst);
    }
    Ok(out)
}
