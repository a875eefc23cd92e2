//! Single-step L∞ sign-gradient attacks on model inputs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::nn::PredictiveModel;
use crate::problem::DecisionProblem;
use crate::scalar::Scalar;
use crate::surrogates::{loss_and_grad, mse_loss, Method, SolutionCache, SurrogateConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttackKind {
    #[serde(rename = "pf")]
    PredictionFocused,
    #[serde(rename = "df")]
    DecisionFocused,
}

impl AttackKind {
    pub fn name(self) -> &'static str {
        match self {
            AttackKind::PredictionFocused => "pf",
            AttackKind::DecisionFocused => "df",
        }
    }
}

impl std::fmt::Display for AttackKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub kind: AttackKind,
    pub epsilon: f64,
    /// Optional per-feature `(lo, hi)` bounds applied after the step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamp_box: Option<Vec<(f64, f64)>>,
}

impl AttackConfig {
    pub fn new(kind: AttackKind, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be >= 0, got {epsilon}"
            )));
        }
        Ok(Self {
            kind,
            epsilon,
            clamp_box: None,
        })
    }
}

/// `sign` with `sign(0) = 0`.
fn sign<T: Scalar>(v: T) -> T {
    if v > T::zero() {
        T::one()
    } else if v < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// `z + ε·sign(g)`, optionally clamped into `bounds`.
pub fn fgsm_step<T: Scalar>(
    z: &[T],
    grad: &[T],
    epsilon: T,
    bounds: Option<&[(f64, f64)]>,
) -> Result<Vec<T>> {
    check_len("attack gradient", z.len(), grad.len())?;
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("attack gradient"));
    }
    let mut out: Vec<T> = z
        .iter()
        .zip(grad)
        .map(|(&zi, &g)| zi + epsilon * sign(g))
        .collect();
    if let Some(b) = bounds {
        check_len("attack clamp box", z.len(), b.len())?;
        for (v, &(lo, hi)) in out.iter_mut().zip(b) {
            *v = v.max(T::of(lo)).min(T::of(hi));
        }
    }
    Ok(out)
}

/// Prediction-focused attack: ascend the squared error of the prediction.
pub fn pf_fgsm<T: Scalar>(
    model: &PredictiveModel<T>,
    z: &[T],
    c: &[T],
    epsilon: T,
) -> Result<Vec<T>> {
    pf_fgsm_with(model, z, c, epsilon, None)
}

pub fn pf_fgsm_with<T: Scalar>(
    model: &PredictiveModel<T>,
    z: &[T],
    c: &[T],
    epsilon: T,
    bounds: Option<&[(f64, f64)]>,
) -> Result<Vec<T>> {
    let c_hat = model.forward(z)?;
    let upstream = mse_loss(&c_hat, c)?.grad;
    let g = model.backward(z, &upstream)?;
    fgsm_step(z, &g.input, epsilon, bounds)
}

/// Decision-focused attack: ascend the training surrogate of `surrogate`.
/// Stochastic surrogates draw their noise from `rng`.
#[allow(clippy::too_many_arguments)]
pub fn df_fgsm<T: Scalar, R: Rng + ?Sized>(
    model: &PredictiveModel<T>,
    problem: &DecisionProblem<T>,
    surrogate: &SurrogateConfig,
    cache: Option<&SolutionCache<T>>,
    z: &[T],
    c: &[T],
    x_star: &[T],
    epsilon: T,
    bounds: Option<&[(f64, f64)]>,
    rng: &mut R,
) -> Result<Vec<T>> {
    df_gradient(model, problem, surrogate, cache, z, c, x_star, rng)
        .and_then(|g| fgsm_step(z, &g, epsilon, bounds))
}

/// `∇_z` of the surrogate loss chained through the model.
#[allow(clippy::too_many_arguments)]
pub fn df_gradient<T: Scalar, R: Rng + ?Sized>(
    model: &PredictiveModel<T>,
    problem: &DecisionProblem<T>,
    surrogate: &SurrogateConfig,
    cache: Option<&SolutionCache<T>>,
    z: &[T],
    c: &[T],
    x_star: &[T],
    rng: &mut R,
) -> Result<Vec<T>> {
    if surrogate.method == Method::TwoStageMse {
        return Err(Error::InvalidConfig(
            "the decision-focused attack needs a decision-focused surrogate".into(),
        ));
    }
    let c_hat = model.forward(z)?;
    let upstream = loss_and_grad(surrogate, problem, &c_hat, c, x_star, cache, rng)?.grad;
    Ok(model.backward(z, &upstream)?.input)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::nn::OutputActivation;

    fn scalar_model(w: f64) -> PredictiveModel<f64> {
        PredictiveModel::linear(
            Matrix::from_rows(&[vec![w]]).unwrap(),
            vec![0.0],
            OutputActivation::None,
        )
        .unwrap()
    }

    #[test]
    fn zero_epsilon_is_identity() {
        assert_eq!(
            pf_fgsm(&scalar_model(2.0), &[1.5], &[0.0], 0.0).unwrap(),
            vec![1.5]
        );
    }

    #[test]
    fn linear_example_moves_up() {
        assert_eq!(
            pf_fgsm(&scalar_model(1.0), &[1.0], &[0.0], 0.1).unwrap(),
            vec![1.1]
        );
    }

    #[test]
    fn zero_gradient_feature_is_unchanged() {
        let w = Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let m = PredictiveModel::linear(w, vec![0.0], OutputActivation::None).unwrap();
        assert_eq!(
            pf_fgsm(&m, &[1.0, 7.0], &[0.0], 0.5).unwrap(),
            vec![1.5, 7.0]
        );
    }

    #[test]
    fn clamp_box_is_applied() {
        let z = fgsm_step(
            &[0.95, 0.0],
            &[1.0, -1.0],
            0.1,
            Some(&[(0.0, 1.0), (0.0, 1.0)]),
        )
        .unwrap();
        assert_eq!(z, vec![1.0, 0.0]);
    }

    #[test]
    fn negative_epsilon_rejected() {
        assert!(AttackConfig::new(AttackKind::PredictionFocused, -0.1).is_err());
    }
}
