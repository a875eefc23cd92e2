//! Energy-scheduling knapsacks: one instance per day, one item per
//! half-hour slot.
//!
//! The synthetic source draws per-slot features as AR(1)-smoothed standard
//! normals and sets `price = max(0.1, 5 + βᵀf)`. Item values are
//! `price · w + N(0, 25)`.
//!
//! Draw order: weights (rejection-sampled until their sum is `5·items`), β,
//! then per day features (slot-major), then per day value noise. CSV input
//! skips the feature and β draws.

use std::path::PathBuf;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Generated;
use crate::error::{Error, Result};
use crate::problem::{DecisionProblem, Instance, Knapsack};
use crate::scalar::Scalar;

pub const WEIGHT_CHOICES: [u32; 3] = [3, 5, 7];
pub const VALUE_NOISE_SD: f64 = 5.0;
const AR_COEFF: f64 = 0.8;
const BASE_PRICE: f64 = 5.0;
const PRICE_FLOOR: f64 = 0.1;
const MAX_WEIGHT_DRAWS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "type", content = "path")]
pub enum KnapsackSource {
    #[default]
    SyntheticEnergy,
    CsvFile(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnapsackGenConfig {
    pub n_days: usize,
    pub items_per_day: usize,
    pub feature_dim: usize,
    pub capacity: u32,
    pub seed: u64,
    #[serde(default)]
    pub source: KnapsackSource,
}

impl Default for KnapsackGenConfig {
    fn default() -> Self {
        Self {
            n_days: 300,
            items_per_day: 48,
            feature_dim: 8,
            capacity: 120,
            seed: 0,
            source: KnapsackSource::SyntheticEnergy,
        }
    }
}

/// Weights from {3, 5, 7} summing to `5·n` (240 for 48 slots).
pub fn sample_weights<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Vec<u32>> {
    let target = 5 * n as u32;
    for _ in 0..MAX_WEIGHT_DRAWS {
        let w: Vec<u32> = (0..n)
            .map(|_| WEIGHT_CHOICES[rng.random_range(0..3)])
            .collect();
        if w.iter().sum::<u32>() == target {
            return Ok(w);
        }
    }
    Err(Error::InvalidConfig(format!(
        "could not draw {n} weights summing to {target}"
    )))
}

/// `value_i = price_i · w_i + noise_i`
pub fn item_values<T: Scalar>(prices: &[T], weights: &[u32], noise: &[T]) -> Vec<T> {
    prices
        .iter()
        .zip(weights)
        .zip(noise)
        .map(|((&p, &w), &e)| p * T::of(w as f64) + e)
        .collect()
}

/// `items × dim` AR(1) features with unit stationary variance, slot-major.
fn ar_features<R: Rng + ?Sized>(items: usize, dim: usize, rng: &mut R) -> Vec<f64> {
    let innovation = (1.0 - AR_COEFF * AR_COEFF).sqrt();
    let mut prev: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let mut out = Vec::with_capacity(items * dim);
    for t in 0..items {
        if t > 0 {
            for v in prev.iter_mut() {
                let e: f64 = StandardNormal.sample(rng);
                *v = AR_COEFF * *v + innovation * e;
            }
        }
        out.extend_from_slice(&prev);
    }
    out
}

/// Features and prices parsed from CSV: `feature_dim` feature columns then
/// price, one row per slot, a day every `items` rows. An optional
/// non-numeric header line is skipped.
pub fn read_energy_csv(
    path: &std::path::Path,
    items: usize,
    feature_dim: usize,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Io(e.to_string()))?;
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 1;
        let rec = rec.map_err(|e| Error::Data {
            line,
            message: e.to_string(),
        })?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let vals = match parsed {
            Ok(v) => v,
            Err(_) if line == 1 => continue,
            Err(e) => {
                return Err(Error::Data {
                    line,
                    message: e.to_string(),
                })
            }
        };
        if vals.len() != feature_dim + 1 {
            return Err(Error::Data {
                line,
                message: format!("expected {} columns, found {}", feature_dim + 1, vals.len()),
            });
        }
        if let Some(v) = vals.iter().find(|v| !v.is_finite()) {
            return Err(Error::Data {
                line,
                message: format!("non-finite value {v}"),
            });
        }
        rows.push((line, vals));
    }
    if rows.is_empty() || !rows.len().is_multiple_of(items) {
        let line = rows.last().map_or(0, |r| r.0);
        return Err(Error::Data {
            line,
            message: format!(
                "{} data rows do not form whole days of {items} slots",
                rows.len()
            ),
        });
    }
    Ok(rows
        .chunks(items)
        .map(|day| {
            let mut features = Vec::with_capacity(items * feature_dim);
            let mut prices = Vec::with_capacity(items);
            for (_, r) in day {
                features.extend_from_slice(&r[..feature_dim]);
                prices.push(r[feature_dim]);
            }
            (features, prices)
        })
        .collect())
}

pub fn gen_knapsack<T: Scalar>(config: &KnapsackGenConfig) -> Result<Generated<T>> {
    let KnapsackGenConfig {
        n_days,
        items_per_day: items,
        feature_dim: dim,
        capacity,
        seed,
        ..
    } = *config;
    if items == 0 || dim == 0 || capacity == 0 {
        return Err(Error::InvalidConfig(
            "knapsack sizes and capacity must be positive".into(),
        ));
    }
    let mut rng = crate::rng::seeded(seed);
    let weights = sample_weights(items, &mut rng)?;
    let problem = DecisionProblem::Knapsack(Knapsack::new(weights.clone(), capacity)?);
    let days: Vec<(Vec<f64>, Vec<f64>)> = match &config.source {
        KnapsackSource::SyntheticEnergy => {
            if n_days == 0 {
                return Err(Error::InvalidConfig("n_days must be positive".into()));
            }
            let beta: Vec<f64> = (0..dim).map(|_| rng.random_range(0.2..0.6)).collect();
            (0..n_days)
                .map(|_| {
                    let f = ar_features(items, dim, &mut rng);
                    let prices = f
                        .chunks(dim)
                        .map(|slot| {
                            let blend: f64 = slot.iter().zip(&beta).map(|(a, b)| a * b).sum();
                            (BASE_PRICE + blend).max(PRICE_FLOOR)
                        })
                        .collect();
                    (f, prices)
                })
                .collect()
        }
        KnapsackSource::CsvFile(path) => read_energy_csv(path, items, dim)?,
    };
    let noise = Normal::new(0.0, VALUE_NOISE_SD).expect("valid sd");
    let mut instances = Vec::with_capacity(days.len());
    for (features, prices) in days {
        let e: Vec<T> = (0..items).map(|_| T::of(noise.sample(&mut rng))).collect();
        let prices: Vec<T> = prices.into_iter().map(T::of).collect();
        let values = item_values(&prices, &weights, &e);
        instances.push(Instance::new(
            &problem,
            features.into_iter().map(T::of).collect(),
            values,
        )?);
    }
    Ok(Generated { problem, instances })
}
