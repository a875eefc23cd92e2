//! Factor-model asset returns with a polynomial link of degree `deg`.
//!
//! Draw order per dataset: `B` (d×p Bernoulli, row-major), `L` (d×4
//! uniform, row-major), then per instance `z` (p), `f` (4), `ξ` (d).

use rand::Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Generated;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::problem::{DecisionProblem, Instance, Portfolio};
use crate::scalar::Scalar;

pub const NUM_FACTORS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioGenConfig {
    pub n_samples: usize,
    pub p: usize,
    pub d: usize,
    pub deg: u32,
    pub eta: f64,
    pub seed: u64,
}

impl Default for PortfolioGenConfig {
    fn default() -> Self {
        Self {
            n_samples: 400,
            p: 5,
            d: 20,
            deg: 1,
            eta: 1.0,
            seed: 0,
        }
    }
}

/// Dataset-level random factors.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioFactors<T> {
    /// `d × p`, entries in {0, 1}.
    pub b: Matrix<T>,
    /// `d × 4`
    pub l: Matrix<T>,
}

pub fn sample_factors<T: Scalar, R: Rng + ?Sized>(
    d: usize,
    p: usize,
    eta: f64,
    rng: &mut R,
) -> PortfolioFactors<T> {
    let coin = Bernoulli::new(0.5).expect("valid probability");
    let b = (0..d * p)
        .map(|_| {
            if coin.sample(rng) {
                T::one()
            } else {
                T::zero()
            }
        })
        .collect();
    let half = 0.0025 * eta;
    let l = (0..d * NUM_FACTORS)
        .map(|_| {
            T::of(if half > 0.0 {
                rng.random_range(-half..=half)
            } else {
                0.0
            })
        })
        .collect();
    PortfolioFactors {
        b: Matrix::from_row_major(d, p, b).expect("shape"),
        l: Matrix::from_row_major(d, NUM_FACTORS, l).expect("shape"),
    }
}

/// Conditional mean `c̄_j = ((0.05/√p)(Bz)_j + 0.1^(1/deg))^deg`.
pub fn conditional_mean<T: Scalar>(b: &Matrix<T>, z: &[T], deg: u32) -> Vec<T> {
    let p = T::of(b.cols() as f64);
    let shift = T::of(0.1f64.powf(1.0 / deg as f64));
    b.mul_vec(z)
        .into_iter()
        .map(|bz| (T::of(0.05) / p.sqrt() * bz + shift).powi(deg as i32))
        .collect()
}

/// Observed returns `c = c̄ + Lf + 0.01ηξ`.
pub fn observed_returns<T: Scalar>(
    c_bar: &[T],
    l: &Matrix<T>,
    f: &[T],
    xi: &[T],
    eta: f64,
) -> Vec<T> {
    let lf = l.mul_vec(f);
    let s = T::of(0.01 * eta);
    c_bar
        .iter()
        .zip(lf)
        .zip(xi)
        .map(|((&m, a), &x)| m + a + s * x)
        .collect()
}

/// `Σ = LLᵀ + (0.01η)²I`
pub fn covariance<T: Scalar>(l: &Matrix<T>, eta: f64) -> Matrix<T> {
    let mut s = l.matmul(&l.transpose());
    let ridge = T::of((0.01 * eta).powi(2));
    for i in 0..s.rows() {
        s[(i, i)] += ridge;
    }
    s
}

/// `λ = 2.25 eᵀΣe` with `e_j = 1/d`.
pub fn risk_bound<T: Scalar>(sigma: &Matrix<T>) -> T {
    let e = vec![T::one() / T::of(sigma.rows() as f64); sigma.rows()];
    T::of(2.25) * sigma.quad_form(&e)
}

fn normals<T: Scalar, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<T> {
    (0..n).map(|_| T::of(StandardNormal.sample(rng))).collect()
}

pub fn gen_portfolio<T: Scalar>(config: &PortfolioGenConfig) -> Result<Generated<T>> {
    let PortfolioGenConfig {
        n_samples,
        p,
        d,
        deg,
        eta,
        seed,
    } = *config;
    if n_samples == 0 || p == 0 || d == 0 || deg == 0 {
        return Err(Error::InvalidConfig(
            "portfolio sizes and degree must be positive".into(),
        ));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "portfolio noise magnitude must be > 0, got {eta}"
        )));
    }
    let mut rng = crate::rng::seeded(seed);
    let factors: PortfolioFactors<T> = sample_factors(d, p, eta, &mut rng);
    let sigma = covariance(&factors.l, eta);
    let lambda = risk_bound(&sigma);
    let problem = DecisionProblem::Portfolio(Portfolio::new(sigma, lambda)?);
    let mut instances = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let z: Vec<T> = normals(p, &mut rng);
        let f: Vec<T> = normals(NUM_FACTORS, &mut rng);
        let xi: Vec<T> = normals(d, &mut rng);
        let c = observed_returns(
            &conditional_mean(&factors.b, &z, deg),
            &factors.l,
            &f,
            &xi,
            eta,
        );
        instances.push(Instance::new(&problem, z, c)?);
    }
    Ok(Generated { problem, instances })
}
