//! Log-barrier interior-point method for the risk-constrained portfolio
//! `max cᵀx s.t. xᵀΣx ≤ λ, 1ᵀx ≤ 1, x ≥ 0`.

use crate::error::{Error, Result};
use crate::linalg::{cholesky, Lu, Matrix};
use crate::scalar::{dot, norm_inf, Scalar};
use crate::solvers::KktSolution;

const T0: f64 = 1.0;
const T_GROWTH: f64 = 10.0;
const MAX_STAGES: usize = 24;
const MAX_NEWTON: usize = 100;
/// Stop once every complementarity product `1/t` drops below this.
const COMPLEMENTARITY_TARGET: f64 = 1e-9;
pub const RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct BarrierSolve<T> {
    pub kkt: KktSolution<T>,
    /// `cᵀx` at the end of every barrier stage.
    pub stage_objectives: Vec<T>,
    pub newton_iterations: usize,
}

impl<T> BarrierSolve<T> {
    pub fn decision(&self) -> &[T] {
        &self.kkt.x
    }
}

/// Constraint values `f_i(x)` in the order: risk, budget, `-x_j` for each asset.
fn constraint_values<T: Scalar>(x: &[T], sigma: &Matrix<T>, risk: T) -> Vec<T> {
    let mut f = Vec::with_capacity(x.len() + 2);
    f.push(sigma.quad_form(x) - risk);
    f.push(x.iter().copied().sum::<T>() - T::one());
    f.extend(x.iter().map(|&v| -v));
    f
}

/// Exact change of every constraint value along `delta`, without
/// re-evaluating `xᵀΣx − λ` (which cancels near the risk boundary).
fn constraint_changes<T: Scalar>(x: &[T], delta: &[T], sigma: &Matrix<T>) -> Vec<T> {
    let sd = sigma.mul_vec(delta);
    let mut df = Vec::with_capacity(x.len() + 2);
    df.push(T::of(2.0) * dot(x, &sd) + dot(delta, &sd));
    df.push(delta.iter().copied().sum::<T>());
    df.extend(delta.iter().map(|&v| -v));
    df
}

/// `φ(x + delta) − φ(x)` for `φ = −t cᵀx − Σ log(−f_i)`.
fn barrier_change<T: Scalar>(t: T, c: &[T], delta: &[T], f: &[T], df: &[T]) -> T {
    let mut change = -t * dot(c, delta);
    for (&a, &d) in f.iter().zip(df) {
        change -= (d / a).ln_1p();
    }
    change
}

/// Solves on returns rescaled to unit max-norm so the residual tolerances are
/// relative to the size of `returns`; multipliers are mapped back.
pub fn solve<T: Scalar>(returns: &[T], sigma: &Matrix<T>, risk: T) -> Result<BarrierSolve<T>> {
    let scale = norm_inf(returns);
    if !(scale > T::zero()) || !scale.is_finite() {
        return solve_scaled(returns, sigma, risk);
    }
    let scaled: Vec<T> = returns.iter().map(|&c| c / scale).collect();
    let mut out = solve_scaled(&scaled, sigma, risk)?;
    out.kkt.ineq_multipliers.iter_mut().for_each(|m| *m *= scale);
    out.kkt.stationarity *= scale;
    out.kkt.complementarity *= scale;
    out.stage_objectives.iter_mut().for_each(|o| *o *= scale);
    Ok(out)
}

fn solve_scaled<T: Scalar>(returns: &[T], sigma: &Matrix<T>, risk: T) -> Result<BarrierSolve<T>> {
    let d = returns.len();
    let zero_kkt = |x: Vec<T>| {
        let f = constraint_values(&x, sigma, risk);
        KktSolution {
            x,
            ineq_multipliers: vec![T::zero(); d + 2],
            eq_multipliers: Vec::new(),
            constraint_values: f,
            stationarity: T::zero(),
            primal: T::zero(),
            complementarity: T::zero(),
        }
    };
    if returns.iter().all(|&c| c <= T::zero()) {
        // Zero investment is optimal whenever no asset has a positive return.
        let mut kkt = zero_kkt(vec![T::zero(); d]);
        // multipliers on x_j >= 0 absorb -c_j
        for (j, &c) in returns.iter().enumerate() {
            kkt.ineq_multipliers[2 + j] = -c;
        }
        return Ok(BarrierSolve {
            kkt,
            stage_objectives: vec![T::zero()],
            newton_iterations: 0,
        });
    }

    let ones = vec![T::one(); d];
    let spread = sigma.quad_form(&ones).max(T::of(1e-300));
    let rho = T::of(0.5) * (T::one() / T::of(d as f64)).min((risk / spread).sqrt());
    let mut x = vec![rho; d];
    let mut t = T::of(T0);
    let mut stages = Vec::new();
    let mut newton_total = 0;

    for _stage in 0..MAX_STAGES {
        for _ in 0..MAX_NEWTON {
            let f = constraint_values(&x, sigma, risk);
            let sx = sigma.mul_vec(&x);
            // gradient of  -t cᵀx - Σ log(-f_i)
            let inv_risk = T::one() / -f[0];
            let inv_budget = T::one() / -f[1];
            let grad: Vec<T> = (0..d)
                .map(|j| {
                    -t * returns[j] + T::of(2.0) * sx[j] * inv_risk + inv_budget - T::one() / x[j]
                })
                .collect();
            let mut hess = Matrix::zeros(d, d);
            for i in 0..d {
                for j in 0..d {
                    let g2 = T::of(4.0) * sx[i] * sx[j] * inv_risk * inv_risk;
                    hess[(i, j)] =
                        T::of(2.0) * sigma[(i, j)] * inv_risk + g2 + inv_budget * inv_budget;
                }
                hess[(i, i)] += T::one() / (x[i] * x[i]);
            }
            let rhs: Vec<T> = grad.iter().map(|&g| -g).collect();
            let step = match cholesky(&hess) {
                Ok(l) => cholesky_solve(&l, &rhs),
                Err(_) => Lu::factor(hess)?.solve(&rhs),
            };
            let decrement = -dot(&grad, &step);
            newton_total += 1;
            if !(decrement > T::of(1e-20)) {
                break;
            }
            let mut s = T::one();
            let mut moved = false;
            for _ in 0..80 {
                let delta: Vec<T> = step.iter().map(|&b| s * b).collect();
                let df = constraint_changes(&x, &delta, sigma);
                // strict feasibility: every f_i + df_i < 0
                if f.iter().zip(&df).all(|(&a, &d)| d / a > -T::one())
                    && barrier_change(t, returns, &delta, &f, &df) <= -T::of(0.01) * s * decrement {
                        for (xi, di) in x.iter_mut().zip(&delta) {
                            *xi += *di;
                        }
                        moved = true;
                        break;
                    }
                s *= T::of(0.5);
            }
            if !moved || decrement < T::of(1e-18) {
                break;
            }
        }
        stages.push(dot(returns, &x));
        if T::one() / t <= T::of(COMPLEMENTARITY_TARGET) {
            break;
        }
        t *= T::of(T_GROWTH);
    }

    let f = constraint_values(&x, sigma, risk);
    let mu: Vec<T> = f.iter().map(|&fi| T::one() / (t * -fi)).collect();
    let sx = sigma.mul_vec(&x);
    let stat: Vec<T> = (0..d)
        .map(|j| -returns[j] + mu[0] * T::of(2.0) * sx[j] + mu[1] - mu[2 + j])
        .collect();
    let stationarity = norm_inf(&stat);
    let primal = f.iter().fold(T::zero(), |a, &v| a.max(v));
    let complementarity = mu
        .iter()
        .zip(&f)
        .fold(T::zero(), |a, (&u, &v)| a.max((u * v).abs()));
    let tol = T::of(RESIDUAL_TOL);
    if !(stationarity <= tol && primal <= tol && complementarity <= tol) {
        return Err(Error::NotConverged {
            iterations: newton_total,
            stationarity: stationarity.as_f64(),
            primal: primal.as_f64(),
            complementarity: complementarity.as_f64(),
        });
    }
    Ok(BarrierSolve {
        kkt: KktSolution {
            x,
            ineq_multipliers: mu,
            eq_multipliers: Vec::new(),
            constraint_values: f,
            stationarity,
            primal,
            complementarity,
        },
        stage_objectives: stages,
        newton_iterations: newton_total,
    })
}

pub(crate) fn cholesky_solve<T: Scalar>(l: &Matrix<T>, b: &[T]) -> Vec<T> {
    let n = b.len();
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    y
}
