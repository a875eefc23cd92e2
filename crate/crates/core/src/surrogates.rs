//! Decision-focused training losses and their gradients w.r.t. the predicted
//! cost `ĉ`.
//!
//! Every method is written once for minimization. Maximization problems are
//! mapped through `v ↦ −v` on both cost vectors, and the gradient is chained
//! back with the same sign. The loss value is sense-invariant.

use std::collections::HashSet;

use rand::Rng;
use rand_distr::{Distribution, Gumbel, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::problem::DecisionProblem;
use crate::scalar::{dot, Scalar};
use crate::solvers::{kkt_jacobian_vector_product, qp_regularized_solve};
use crate::solvers::portfolio::RESIDUAL_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "two_stage")]
    TwoStageMse,
    #[serde(rename = "spo")]
    SpoPlus,
    #[serde(rename = "dbb")]
    Dbb,
    #[serde(rename = "imle")]
    Imle,
    #[serde(rename = "fy")]
    Fy,
    #[serde(rename = "qptl")]
    Qptl,
    #[serde(rename = "map")]
    Map,
    #[serde(rename = "pairwise")]
    Pairwise,
    #[serde(rename = "pairwise_diff")]
    PairwiseDiff,
    #[serde(rename = "listwise")]
    Listwise,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::TwoStageMse,
        Method::SpoPlus,
        Method::Dbb,
        Method::Imle,
        Method::Fy,
        Method::Qptl,
        Method::Map,
        Method::Pairwise,
        Method::PairwiseDiff,
        Method::Listwise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::TwoStageMse => "two_stage",
            Method::SpoPlus => "spo",
            Method::Dbb => "dbb",
            Method::Imle => "imle",
            Method::Fy => "fy",
            Method::Qptl => "qptl",
            Method::Map => "map",
            Method::Pairwise => "pairwise",
            Method::PairwiseDiff => "pairwise_diff",
            Method::Listwise => "listwise",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .or(match key.as_str() {
                "mse" | "ts" | "two_stage_mse" | "twostage" => Some(Method::TwoStageMse),
                "spo+" | "spo_plus" => Some(Method::SpoPlus),
                "pairwisediff" => Some(Method::PairwiseDiff),
                _ => None,
            })
    }

    pub fn uses_cache(self) -> bool {
        matches!(
            self,
            Method::Pairwise | Method::PairwiseDiff | Method::Listwise
        )
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, Method::Imle | Method::Fy)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Hyperparameters for every method; only the fields of the selected method
/// are read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurrogateConfig {
    pub method: Method,
    pub dbb_lambda: f64,
    pub imle_lambda: f64,
    pub imle_eps: f64,
    pub imle_kappa: usize,
    pub fy_eps: f64,
    pub fy_samples: usize,
    pub qptl_mu: f64,
    pub listwise_tau: f64,
    pub pairwise_theta: f64,
    pub seed: u64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            method: Method::TwoStageMse,
            dbb_lambda: 1.0,
            imle_lambda: 1.0,
            imle_eps: 1.0,
            imle_kappa: 5,
            fy_eps: 1.0,
            fy_samples: 10,
            qptl_mu: 1.0,
            listwise_tau: 1.0,
            pairwise_theta: 0.0,
            seed: 0,
        }
    }
}

impl SurrogateConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        match self.method {
            Method::Dbb => positive("dbb_lambda", self.dbb_lambda),
            Method::Imle => {
                positive("imle_lambda", self.imle_lambda)?;
                positive("imle_eps", self.imle_eps)?;
                if self.imle_kappa == 0 {
                    return Err(Error::InvalidConfig("imle_kappa must be at least 1".into()));
                }
                Ok(())
            }
            Method::Fy => {
                positive("fy_eps", self.fy_eps)?;
                if self.fy_samples == 0 {
                    return Err(Error::InvalidConfig("fy_samples must be at least 1".into()));
                }
                Ok(())
            }
            Method::Qptl => positive("qptl_mu", self.qptl_mu),
            Method::Listwise => positive("listwise_tau", self.listwise_tau),
            Method::Pairwise if !(self.pairwise_theta >= 0.0) => {
                Err(Error::InvalidConfig(format!(
                    "pairwise_theta must be nonnegative, got {}",
                    self.pairwise_theta
                )))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad<T> {
    pub loss: T,
    /// `dL/dĉ` in the problem's native cost coordinates.
    pub grad: Vec<T>,
}

impl<T: Scalar> LossGrad<T> {
    fn chain(loss: T, grad_min: Vec<T>, sign: T) -> Self {
        Self {
            loss,
            grad: grad_min.into_iter().map(|g| sign * g).collect(),
        }
    }
}

/// Pool `Γ` of feasible decisions used by the ranking losses.
#[derive(Debug, Clone, Default)]
pub struct SolutionCache<T> {
    pool: Vec<Vec<T>>,
    keys: HashSet<Vec<u64>>,
    pub p_solve: f64,
}

pub const DEFAULT_P_SOLVE: f64 = 0.05;

impl<T: Scalar> SolutionCache<T> {
    pub fn new(p_solve: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_solve) {
            return Err(Error::InvalidConfig(format!(
                "p_solve must be in [0, 1], got {p_solve}"
            )));
        }
        Ok(Self {
            pool: Vec::new(),
            keys: HashSet::new(),
            p_solve,
        })
    }

    /// Cache seeded with the given optimal decisions.
    pub fn from_solutions<'a>(
        solutions: impl IntoIterator<Item = &'a [T]>,
        p_solve: f64,
    ) -> Result<Self> {
        let mut cache = Self::new(p_solve)?;
        for s in solutions {
            cache.insert(s.to_vec());
        }
        Ok(cache)
    }

    /// Inserts `x` unless an identical vector is already pooled.
    pub fn insert(&mut self, x: Vec<T>) -> bool {
        let key: Vec<u64> = x.iter().map(|v| v.as_f64().to_bits()).collect();
        if self.keys.insert(key) {
            self.pool.push(x);
            true
        } else {
            false
        }
    }

    pub fn len(&self) -> usize {
        self.pool.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pool.is_empty()
    }

    pub fn solutions(&self) -> &[Vec<T>] {
        &self.pool
    }

    /// With probability `p_solve`, adds `x*(ĉ)` to the pool.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        problem: &DecisionProblem<T>,
        cost_hat: &[T],
        rng: &mut R,
    ) -> Result<bool> {
        if self.p_solve <= 0.0 || !rng.random_bool(self.p_solve) {
            return Ok(false);
        }
        let x = problem.solve(cost_hat)?.decision;
        Ok(self.insert(x))
    }
}

/// Free-function form of [`SolutionCache::update`].
pub fn cache_update<T: Scalar, R: Rng + ?Sized>(
    cache: &mut SolutionCache<T>,
    problem: &DecisionProblem<T>,
    cost_hat: &[T],
    rng: &mut R,
) -> Result<bool> {
    cache.update(problem, cost_hat, rng)
}

/// Inputs of one surrogate evaluation translated to minimization coordinates.
struct MinView<'a, T> {
    problem: &'a DecisionProblem<T>,
    c_hat: Vec<T>,
    c: Vec<T>,
    x_star: &'a [T],
    sign: T,
}

impl<'a, T: Scalar> MinView<'a, T> {
    fn new(problem: &'a DecisionProblem<T>, c_hat: &[T], c: &[T], x_star: &'a [T]) -> Result<Self> {
        let k = problem.cost_dim();
        check_len("predicted cost", k, c_hat.len())?;
        check_len("true cost", k, c.len())?;
        check_len("optimal decision", k, x_star.len())?;
        if c_hat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("predicted cost"));
        }
        let sense = problem.sense();
        Ok(Self {
            problem,
            c_hat: sense.to_min(c_hat),
            c: sense.to_min(c),
            x_star,
            sign: sense.sign(),
        })
    }

    fn oracle(&self, v: &[T]) -> Result<Vec<T>> {
        self.problem.solve_min(v)
    }

    fn regret(&self, x: &[T]) -> T {
        dot(&self.c, x) - dot(&self.c, self.x_star)
    }
}

fn axpy<T: Scalar>(a: &[T], s: T, b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + s * y).collect()
}

fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn mse_loss<T: Scalar>(c_hat: &[T], c: &[T]) -> Result<LossGrad<T>> {
    check_len("mse", c.len(), c_hat.len())?;
    let diff = sub(c_hat, c);
    Ok(LossGrad {
        loss: dot(&diff, &diff),
        grad: diff.iter().map(|&d| T::of(2.0) * d).collect(),
    })
}

pub fn spo_plus<T: Scalar>(
    problem: &DecisionProblem<T>,
    c_hat: &[T],
    c: &[T],
    x_star: &[T],
) -> Result<LossGrad<T>> {
    let v = MinView::new(problem, c_hat, c, x_star)?;
    let two = T::of(2.0);
    let shifted: Vec<T> = v
        .c_hat
        .iter()
        .zip(&v.c)
        .map(|(&h, &t)| two * h - t)
        .collect();
    let x_spo = v.oracle(&shifted)?;
    // max_x (c − 2ĉ)ᵀx = −(2ĉ − c)ᵀx_spo
    let loss = -dot(&shifted, &x_spo) + two * dot(&v.c_hat, x_star) - dot(&v.c, x_star);
    let grad = x_star
        .iter()
        .zip(&x_spo)
        .map(|(&a, &b)| two * (a - b))
        .collect();
    Ok(LossGrad::chain(loss, grad, v.sign))
}

/// `(x*(ĉ + λc) − x*(ĉ)) / λ` for either sign of `λ`. For continuous
/// problems, moves below the oracle's accuracy count as no move at all.
fn interpolation_difference<T: Scalar>(
    v: &MinView<T>,
    base: &[T],
    x_base: &[T],
    lambda: T,
) -> Result<Vec<T>> {
    let x_lambda = v.oracle(&axpy(base, lambda, &v.c))?;
    if !v.problem.is_discrete() {
        let moved = x_lambda
            .iter()
            .zip(x_base)
            .any(|(&a, &b)| (a - b).abs() > T::of(RESIDUAL_TOL));
        if !moved {
            return Ok(vec![T::zero(); x_base.len()]);
        }
    }
    Ok(x_lambda
        .iter()
        .zip(x_base)
        .map(|(&a, &b)| (a - b) / lambda)
        .collect())
}

pub fn dbb_grad<T: Scalar>(
    problem: &DecisionProblem<T>,
    c_hat: &[T],
    c: &[T],
    x_star: &[T],
    lambda: T,
) -> Result<LossGrad<T>> {
    if !(lambda > T::zero()) {
        return Err(Error::InvalidConfig("dbb lambda must be positive".into()));
    }
    let v = MinView::new(problem, c_hat, c, x_star)?;
    let x_hat = v.oracle(&v.c_hat)?;
    let grad = interpolation_difference(&v, &v.c_hat, &x_hat, lambda)?;
    Ok(LossGrad::chain(v.regret(&x_hat), grad, v.sign))
}

/// IMLE with explicit per-sample perturbations `noise[s]` (already drawn,
/// before scaling by `eps`).
pub fn imle_grad_with_noise<T: Scalar>(
    problem: &DecisionProblem<T>,
    c_hat: &[T],
    c: &[T],
    x_star: &[T],
    lambda: T,
    eps: T,
    noise: &[Vec<T>],
) -> Result<LossGrad<T>> {
    if noise.is_empty() {
        return Err(Error::InvalidConfig(
            "imle needs at least one sample".into(),
        ));
    }
    let v = MinView::new(problem, c_hat, c, x_star)?;
    let k = c_hat.len();
    let mut grad = vec![T::zero(); k];
    for eta in noise {
        check_len("imle noise", k, eta.len())?;
        let perturbed = axpy(&v.c_hat, eps, eta);
        let x_p = v.oracle(&perturbed)?;
        // (x*(θ) − x*(θ − λc)) / λ
        let d = interpolation_difference(&v, &perturbed, &x_p, -lambda)?;
        for (g, di) in grad.iter_mut().zip(d) {
            *g += di;
        }
    }
    let kappa = T::of(noise.len() as f64);
    grad.iter_mut().for_each(|g| *g /= kappa);
    let x_hat = v.oracle(&v.c_hat)?;
    Ok(LossGrad::chain(v.regret(&x_hat), grad, v.sign))
}

fn draw<T: Scalar, D: Distribution<f64>, R: Rng + ?Sized>(
    dist: &D,
    samples: usize,
    k: usize,
    rng: &mut R,
) -> Vec<Vec<T>> {
    (0..samples)
        .map(|_| (0..k).map(|_| T::of(dist.sample(rng))).collect())
        .collect()
}

/// Gumbel perturb-and-MAP estimator with `kappa` samples.
#[allow(clippy::too_many_arguments)]
pub fn imle_grad<T: Scalar, R: Rng + ?Sized>(
    problem: &DecisionProblem<T>,
    c_hat: &[T],
    c: &[T],
    x_star: &[T],
    lambda: T,
    eps: T,
    kappa: usize,
    rng: &mut R,
) -> Result<LossGrad<T>> {
    let gumbel = Gumbel::new(0.0, 1.0).expect("unit Gumbel");
    let noise = draw(&gumbel, kappa, c_hat.len(), rng);
    imle_grad_with_noise(problem, c_hat, c, x_star, lambda, eps, &noise)
}

/// Fenchel–Young loss with explicit Gaussian samples `noise[s]`.
pub fn fy_grad_with_noise<T: Scalar>(
    problem: &DecisionProblem<T>,
    c_hat: &[T],
    c: &[T],
    x_star: &[T],
    eps: T,
    noise: &[Vec<T>],
) -> Result<LossGrad<T>> {
    if noise.is_empty() {
        return Err(Error::InvalidConfig("fy needs at least one sample".into()));
    }
    let v = MinView::new(problem, c_hat, c, x_star)?;
    let k = c_hat.len();
    let s = T::of(noise.len() as f64);
    let mut y_bar = vec![T::zero(); k];
    let mut max_value = T::zero();
    for (i, z) in noise.iter().enumerate() {
        check_len("fy noise", k, z.len())?;
        // θ = −ĉ; argmax (θ + εZ)ᵀx = argmin (ĉ − εZ)ᵀx
        let perturbed = axpy(&v.c_hat, -eps, z);
        let y = v.oracle(&perturbed)?;
        max_value -= dot(&perturbed, &y);
        // running mean: identical samples average to themselves exactly
        let n = T::of((i + 1) as f64);
        for (a, b) in y_bar.iter_mut().zip(&y) {
            *a += (*b - *a) / n;
        }
    }
    let loss = max_value / s + dot(&v.c_hat, x_star);
    Ok(LossGrad::chain(loss, sub(x_star, &y_bar), v.sign))
}

pub fn fy_grad<T: Scalar, R: Rng + ?Sized>(
    problem: &DecisionProblem<T>,
    c_hat: &[T],
    c: &[T],
    x_star: &[T],
    eps: T,
    samples: usize,
    rng: &mut R,
) -> Result<LossGrad<T>> {
    let noise = draw(&StandardNormal, samples, c_hat.len(), rng);
    fy_grad_with_noise(problem, c_hat, c, x_star, eps, &noise)
}

/// Regret of the regularized relaxation's decision, differentiated through
/// its KKT conditions.
pub fn qptl_grad<T: Scalar>(
    problem: &DecisionProblem<T>,
    c_hat: &[T],
    c: &[T],
    x_star: &[T],
    mu: T,
) -> Result<LossGrad<T>> {
    let v = MinView::new(problem, c_hat, c, x_star)?;
    let kkt = qp_regularized_solve(problem, c_hat, mu)?;
    let x_tilde = &kkt.x[..c.len()];
    let loss = v.regret(x_tilde);
    let grad = kkt_jacobian_vector_product(&kkt, problem, mu, &v.c)?;
    Ok(LossGrad { loss, grad })
}

pub fn map_contrastive<T: Scalar>(
    problem: &DecisionProblem<T>,
    c_hat: &[T],
    c: &[T],
    x_star: &[T],
) -> Result<LossGrad<T>> {
    let v = MinView::new(problem, c_hat, c, x_star)?;
    let x_hat = v.oracle(&v.c_hat)?;
    let loss = dot(&v.c_hat, x_star) - dot(&v.c_hat, &x_hat);
    Ok(LossGrad::chain(loss, sub(x_star, &x_hat), v.sign))
}

fn require_cache<T>(cache: &SolutionCache<T>) -> Result<()> {
    if cache.pool.is_empty() {
        Err(Error::InvalidConfig(
            "ranking losses need a non-empty solution cache".into(),
        ))
    } else {
        Ok(())
    }
}

pub fn pairwise_loss<T: Scalar>(
    problem: &DecisionProblem<T>,
    c_hat: &[T],
    c: &[T],
    x_star: &[T],
    theta: T,
    cache: &SolutionCache<T>,
) -> Result<LossGrad<T>> {
    require_cache(cache)?;
    let v = MinView::new(problem, c_hat, c, x_star)?;
    let star_value = dot(&v.c_hat, x_star);
    let mut loss = T::zero();
    let mut grad = vec![T::zero(); c.len()];
    for x in cache.solutions().iter().filter(|x| x.as_slice() != x_star) {
        let margin = theta + star_value - dot(&v.c_hat, x);
        if margin > T::zero() {
            loss += margin;
            for ((g, &a), &b) in grad.iter_mut().zip(x_star).zip(x) {
                *g += a - b;
            }
        }
    }
    Ok(LossGrad::chain(loss, grad, v.sign))
}

pub fn pairwise_diff_loss<T: Scalar>(
    problem: &DecisionProblem<T>,
    c_hat: &[T],
    c: &[T],
    x_star: &[T],
    cache: &SolutionCache<T>,
) -> Result<LossGrad<T>> {
    require_cache(cache)?;
    let v = MinView::new(problem, c_hat, c, x_star)?;
    let err = sub(&v.c_hat, &v.c);
    let mut loss = T::zero();
    let mut grad = vec![T::zero(); c.len()];
    for x in cache.solutions() {
        let d = sub(x_star, x);
        let r = dot(&err, &d);
        loss += r * r;
        for (g, &di) in grad.iter_mut().zip(&d) {
            *g += T::of(2.0) * r * di;
        }
    }
    Ok(LossGrad::chain(loss, grad, v.sign))
}

/// Log-softmax of `−vᵀx/τ` over the pool, shifted by the maximum logit so
/// tiny probabilities keep finite logs.
fn pool_log_distribution<T: Scalar>(v: &[T], pool: &[Vec<T>], tau: T) -> Vec<T> {
    let logits: Vec<T> = pool.iter().map(|x| -dot(v, x) / tau).collect();
    let top = logits.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let log_z = logits.iter().map(|&l| (l - top).exp()).sum::<T>().ln();
    logits.into_iter().map(|l| l - top - log_z).collect()
}

pub fn listwise_loss<T: Scalar>(
    problem: &DecisionProblem<T>,
    c_hat: &[T],
    c: &[T],
    x_star: &[T],
    tau: T,
    cache: &SolutionCache<T>,
) -> Result<LossGrad<T>> {
    require_cache(cache)?;
    let v = MinView::new(problem, c_hat, c, x_star)?;
    let pool = cache.solutions();
    let log_true = pool_log_distribution(&v.c, pool, tau);
    let log_hat = pool_log_distribution(&v.c_hat, pool, tau);
    let mut loss = T::zero();
    let mut grad = vec![T::zero(); c.len()];
    for ((x, &lt), &lh) in pool.iter().zip(&log_true).zip(&log_hat) {
        let (pt, ph) = (lt.exp(), lh.exp());
        if pt > T::zero() {
            loss -= pt * lh;
        }
        let w = (pt - ph) / tau;
        for (g, &xi) in grad.iter_mut().zip(x) {
            *g += w * xi;
        }
    }
    Ok(LossGrad::chain(loss, grad, v.sign))
}

/// Evaluates the configured method. Stochastic methods draw from `rng`;
/// ranking methods read `cache`.
pub fn loss_and_grad<T: Scalar, R: Rng + ?Sized>(
    config: &SurrogateConfig,
    problem: &DecisionProblem<T>,
    c_hat: &[T],
    c: &[T],
    x_star: &[T],
    cache: Option<&SolutionCache<T>>,
    rng: &mut R,
) -> Result<LossGrad<T>> {
    let need_cache = || {
        cache.ok_or_else(|| {
            Error::InvalidConfig(format!("{} needs a solution cache", config.method))
        })
    };
    match config.method {
        Method::TwoStageMse => mse_loss(c_hat, c),
        Method::SpoPlus => spo_plus(problem, c_hat, c, x_star),
        Method::Dbb => dbb_grad(problem, c_hat, c, x_star, T::of(config.dbb_lambda)),
        Method::Imle => imle_grad(
            problem,
            c_hat,
            c,
            x_star,
            T::of(config.imle_lambda),
            T::of(config.imle_eps),
            config.imle_kappa,
            rng,
        ),
        Method::Fy => fy_grad(
            problem,
            c_hat,
            c,
            x_star,
            T::of(config.fy_eps),
            config.fy_samples,
            rng,
        ),
        Method::Qptl => qptl_grad(problem, c_hat, c, x_star, T::of(config.qptl_mu)),
        Method::Map => map_contrastive(problem, c_hat, c, x_star),
        Method::Pairwise => pairwise_loss(
            problem,
            c_hat,
            c,
            x_star,
            T::of(config.pairwise_theta),
            need_cache()?,
        ),
        Method::PairwiseDiff => pairwise_diff_loss(problem, c_hat, c, x_star, need_cache()?),
        Method::Listwise => listwise_loss(
            problem,
            c_hat,
            c,
            x_star,
            T::of(config.listwise_tau),
            need_cache()?,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Knapsack;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_item() -> DecisionProblem<f64> {
        DecisionProblem::Knapsack(Knapsack::new(vec![3, 3], 3).unwrap())
    }

    #[test]
    fn mse_example() {
        let r = mse_loss(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!((r.loss, r.grad), (1.0, vec![2.0, 0.0]));
    }

    #[test]
    fn spo_example() {
        let p = two_item();
        let r = spo_plus(&p, &[3.0, 5.0], &[5.0, 3.0], &[1.0, 0.0]).unwrap();
        // [2, −2] in minimization coordinates, negated for the knapsack
        assert_eq!(r.grad, vec![-2.0, 2.0]);
        assert!(r.loss >= 2.0);
    }

    #[test]
    fn pairwise_diff_example() {
        let p = two_item();
        let cache = SolutionCache::from_solutions([[0.0, 1.0].as_slice()], 0.0).unwrap();
        // d = [1, −1]; min-sense ĉ − c = −[1, 0]
        let r = pairwise_diff_loss(&p, &[1.0, 0.0], &[0.0, 0.0], &[1.0, 0.0], &cache).unwrap();
        assert_eq!(r.loss, 1.0);
        assert_eq!(r.grad, vec![2.0, -2.0]);
    }

    #[test]
    fn cache_semantics() {
        let p = two_item();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut cache = SolutionCache::<f64>::new(0.0).unwrap();
        assert!(!cache.update(&p, &[1.0, 2.0], &mut rng).unwrap());
        assert!(cache.is_empty());
        cache.p_solve = 1.0;
        assert!(cache.update(&p, &[1.0, 2.0], &mut rng).unwrap());
        assert!(!cache.update(&p, &[1.0, 2.0], &mut rng).unwrap());
        assert_eq!(cache.len(), 1);
        assert!(SolutionCache::<f64>::new(1.5).is_err());
    }

    #[test]
    fn ranking_needs_cache() {
        let p = two_item();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = SurrogateConfig::new(Method::Listwise);
        assert!(loss_and_grad(
            &cfg,
            &p,
            &[1.0, 2.0],
            &[1.0, 2.0],
            &[0.0, 1.0],
            None,
            &mut rng
        )
        .is_err());
    }

    #[test]
    fn method_names_roundtrip() {
        for m in Method::ALL {
            assert_eq!(Method::parse(m.name()), Some(m));
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
        }
        assert_eq!(Method::parse("SPO+"), Some(Method::SpoPlus));
        assert_eq!(Method::parse("intopt"), None);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SurrogateConfig::new(Method::Imle);
        cfg.imle_kappa = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = SurrogateConfig::new(Method::Dbb);
        cfg.dbb_lambda = -1.0;
        assert!(cfg.validate().is_err());
        assert!(SurrogateConfig::new(Method::Map).validate().is_ok());
    }
}
