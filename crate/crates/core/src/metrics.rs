//! Robustness metrics: prediction error under attack, prediction shift, and
//! (relative) regret under attack with its shift from the clean value.
//! All values are nonnegative; regret is normalized for the problem sense.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::problem::DecisionProblem;
use crate::scalar::{dot, Scalar};

pub const RRE_DENOMINATOR_TOL: f64 = 1e-9;
/// Regret this far below zero (relative to `1 + |cᵀx*|`) is solver noise and
/// reported as 0.
const REGRET_NOISE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Norm {
    #[default]
    #[serde(rename = "1")]
    L1,
    #[serde(rename = "2")]
    L2,
    #[serde(rename = "inf")]
    Inf,
}

impl Norm {
    pub fn apply<T: Scalar>(self, v: impl IntoIterator<Item = T>) -> T {
        let it = v.into_iter().map(|x| x.abs());
        match self {
            Norm::L1 => it.sum(),
            Norm::L2 => it.map(|x| x * x).sum::<T>().sqrt(),
            Norm::Inf => it.fold(T::zero(), T::max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsConfig {
    pub q: Norm,
    pub rre_denominator_tol: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            q: Norm::L1,
            rre_denominator_tol: RRE_DENOMINATOR_TOL,
        }
    }
}

fn mean_norm_diff<T: Scalar>(a: &[Vec<T>], b: &[Vec<T>], q: Norm) -> Result<T> {
    check_len("metric instance count", a.len(), b.len())?;
    if a.is_empty() {
        return Ok(T::zero());
    }
    let mut total = T::zero();
    for (x, y) in a.iter().zip(b) {
        check_len("metric vector", x.len(), y.len())?;
        total += q.apply(x.iter().zip(y).map(|(&u, &v)| u - v));
    }
    Ok(total / T::of(a.len() as f64))
}

/// Mean `‖m(z+ε) − c‖_q`.
pub fn mae<T: Scalar>(predictions_adv: &[Vec<T>], true_costs: &[Vec<T>], q: Norm) -> Result<T> {
    mean_norm_diff(predictions_adv, true_costs, q)
}

/// Mean `‖m(z+ε) − m(z)‖_q`.
pub fn fe<T: Scalar>(
    predictions_adv: &[Vec<T>],
    predictions_clean: &[Vec<T>],
    q: Norm,
) -> Result<T> {
    mean_norm_diff(predictions_adv, predictions_clean, q)
}

/// Sense-normalized regret `|cᵀx − cᵀx*|` of one decision.
pub fn abs_re<T: Scalar>(
    problem: &DecisionProblem<T>,
    c: &[T],
    decision: &[T],
    decision_star: &[T],
) -> Result<T> {
    let r = problem.regret(c, decision, decision_star)?;
    let slack = T::of(REGRET_NOISE) * (T::one() + dot(c, decision_star).abs());
    Ok(if r < T::zero() && r > -slack {
        T::zero()
    } else {
        r
    })
}

/// `regret / |cᵀx*(c)|`, or an error when the denominator vanishes.
pub fn rre<T: Scalar>(
    problem: &DecisionProblem<T>,
    c: &[T],
    decision: &[T],
    decision_star: &[T],
    denominator_tol: f64,
) -> Result<T> {
    let den = dot(c, decision_star).abs();
    if !(den.as_f64() > denominator_tol) {
        return Err(Error::UndefinedRelativeRegret {
            denominator: den.as_f64(),
        });
    }
    Ok(abs_re(problem, c, decision, decision_star)? / den)
}

/// `|RRE_adv − RRE_clean|`
pub fn frre<T: Scalar>(
    problem: &DecisionProblem<T>,
    c: &[T],
    decision_adv: &[T],
    decision_clean: &[T],
    decision_star: &[T],
    denominator_tol: f64,
) -> Result<T> {
    let adv = rre(problem, c, decision_adv, decision_star, denominator_tol)?;
    let clean = rre(problem, c, decision_clean, decision_star, denominator_tol)?;
    Ok((adv - clean).abs())
}

/// `|abs_re_adv − abs_re_clean|`
pub fn abs_fre<T: Scalar>(
    problem: &DecisionProblem<T>,
    c: &[T],
    decision_adv: &[T],
    decision_clean: &[T],
    decision_star: &[T],
) -> Result<T> {
    let adv = abs_re(problem, c, decision_adv, decision_star)?;
    let clean = abs_re(problem, c, decision_clean, decision_star)?;
    Ok((adv - clean).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::problem::{Knapsack, Portfolio};

    fn knap() -> DecisionProblem<f64> {
        DecisionProblem::Knapsack(Knapsack::new(vec![3, 3], 3).unwrap())
    }

    #[test]
    fn mae_examples() {
        assert_eq!(
            mae(&[vec![1.0, 3.0]], &[vec![0.0, 0.0]], Norm::L1).unwrap(),
            4.0
        );
        assert_eq!(
            mae(&[vec![3.0, 4.0]], &[vec![0.0, 0.0]], Norm::L2).unwrap(),
            5.0
        );
        assert_eq!(
            mae(&[vec![1.0, -3.0]], &[vec![0.0, 0.0]], Norm::Inf).unwrap(),
            3.0
        );
        let p = vec![vec![0.5, 2.0]];
        assert_eq!(mae(&p, &p, Norm::L1).unwrap(), 0.0);
        assert_eq!(fe(&p, &p, Norm::L2).unwrap(), 0.0);
    }

    #[test]
    fn regret_examples() {
        let p = knap();
        let c = [5.0, 3.0];
        assert_eq!(abs_re(&p, &c, &[0.0, 1.0], &[1.0, 0.0]).unwrap(), 2.0);
        assert_eq!(
            rre(&p, &c, &[0.0, 1.0], &[1.0, 0.0], RRE_DENOMINATOR_TOL).unwrap(),
            0.4
        );
        assert_eq!(
            rre(&p, &c, &[1.0, 0.0], &[1.0, 0.0], RRE_DENOMINATOR_TOL).unwrap(),
            0.0
        );
        assert_eq!(
            abs_fre(&p, &c, &[0.0, 1.0], &[0.0, 1.0], &[1.0, 0.0]).unwrap(),
            0.0
        );
    }

    #[test]
    fn frre_is_symmetric_difference() {
        let p = DecisionProblem::Knapsack(Knapsack::new(vec![1, 1, 1], 3).unwrap());
        let c2 = [6.0, 1.0, 3.0];
        let star = [1.0, 1.0, 1.0];
        // regrets 6 and 3 against an optimum of 10
        let adv = [0.0, 1.0, 1.0];
        let clean = [1.0, 1.0, 0.0];
        let a = frre(&p, &c2, &adv, &clean, &star, RRE_DENOMINATOR_TOL).unwrap();
        let b = frre(&p, &c2, &clean, &adv, &star, RRE_DENOMINATOR_TOL).unwrap();
        assert_eq!(a, b);
        assert!((a - 0.3f64).abs() < 1e-12);
    }

    #[test]
    fn zero_return_portfolio_has_undefined_rre() {
        let p = DecisionProblem::Portfolio(Portfolio::new(Matrix::identity(2), 1.0).unwrap());
        let c = [-1.0, -2.0];
        let star = p.solve(&c).unwrap().decision;
        assert!(matches!(
            rre(&p, &c, &star, &star, RRE_DENOMINATOR_TOL),
            Err(Error::UndefinedRelativeRegret { .. })
        ));
        assert_eq!(abs_re(&p, &c, &star, &star).unwrap(), 0.0);
    }
}
