#![allow(dead_code)]

use dflrb_core::linalg::Matrix;
use dflrb_core::problem::{DecisionProblem, GridShortestPath, Knapsack, Portfolio};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

pub fn random_spd(rng: &mut ChaCha8Rng, d: usize, ridge: f64) -> Matrix<f64> {
    let rows: Vec<Vec<f64>> = (0..d).map(|_| uniform_vec(rng, d, -1.0, 1.0)).collect();
    let l = Matrix::from_rows(&rows).unwrap();
    let mut s = l.matmul(&l.transpose());
    for i in 0..d {
        s[(i, i)] += ridge;
    }
    s
}

pub fn random_knapsack(rng: &mut ChaCha8Rng, n: usize) -> DecisionProblem<f64> {
    let w: Vec<u32> = (0..n).map(|_| [3, 5, 7][rng.random_range(0..3)]).collect();
    let total: u32 = w.iter().sum();
    let cap = rng.random_range(3..=(total / 2).max(4));
    DecisionProblem::Knapsack(Knapsack::new(w, cap).unwrap())
}

pub fn random_portfolio(rng: &mut ChaCha8Rng, d: usize) -> DecisionProblem<f64> {
    let sigma = random_spd(rng, d, 0.05);
    DecisionProblem::Portfolio(Portfolio::new(sigma, rng.random_range(0.05..0.5)).unwrap())
}

pub fn grid(side: usize) -> DecisionProblem<f64> {
    DecisionProblem::ShortestPath(GridShortestPath::new(side).unwrap())
}

/// One small instance of each problem kind.
pub fn all_kinds(rng: &mut ChaCha8Rng) -> Vec<DecisionProblem<f64>> {
    vec![random_knapsack(rng, 6), grid(3), random_portfolio(rng, 3)]
}

/// Positive costs in a range suited to each problem.
pub fn random_cost(rng: &mut ChaCha8Rng, p: &DecisionProblem<f64>) -> Vec<f64> {
    match p {
        DecisionProblem::Portfolio(_) => uniform_vec(rng, p.cost_dim(), -0.2, 1.0),
        _ => uniform_vec(rng, p.cost_dim(), 0.8, 9.2),
    }
}

/// Exhaustive optimum of a small knapsack under native (maximize) values.
pub fn enumerate_knapsack(values: &[f64], weights: &[u32], cap: u32) -> Vec<f64> {
    let n = values.len();
    let mut best = (0.0, vec![0.0; n]);
    for mask in 0u32..(1 << n) {
        let x: Vec<f64> = (0..n).map(|i| (mask >> i & 1) as f64).collect();
        let w: u32 = weights.iter().zip(&x).map(|(&w, &xi)| w * xi as u32).sum();
        let v = dot(values, &x);
        if w <= cap && v > best.0 {
            best = (v, x);
        }
    }
    best.1
}
