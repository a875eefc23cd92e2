//! Decision-focused learning under adversarial feature attacks.
//!
//! The crate provides exact and interior-point oracles for knapsack, grid
//! shortest path and risk-constrained portfolio problems, small predictive
//! models with hand-written gradients, nine decision-focused surrogate
//! losses plus a two-stage MSE baseline, sign-gradient feature attacks,
//! synthetic data generators and robustness metrics.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the common double-precision choice.

pub mod attacks;
pub mod datagen;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod nn;
pub mod problem;
pub mod rng;
pub mod scalar;
pub mod solvers;
pub mod surrogates;

pub use attacks::{df_fgsm, pf_fgsm, AttackConfig, AttackKind};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use metrics::{abs_fre, abs_re, fe, frre, mae, rre, MetricsConfig, Norm};
pub use nn::{AdamState, ModelKind, OutputActivation, PlateauScheduler, PredictiveModel};
pub use problem::{
    regret, solve_oracle, Dataset, DecisionProblem, GridShortestPath, Instance, Knapsack,
    Portfolio, ProblemKind, ProblemSense, Solution, Split,
};
pub use scalar::Scalar;
pub use solvers::KktSolution;
pub use surrogates::{loss_and_grad, LossGrad, Method, SolutionCache, SurrogateConfig};

pub type Matrix64 = Matrix<f64>;
pub type Problem64 = DecisionProblem<f64>;
pub type Portfolio64 = Portfolio<f64>;
pub type Instance64 = Instance<f64>;
pub type Dataset64 = Dataset<f64>;
pub type Model64 = PredictiveModel<f64>;
pub type Adam64 = AdamState<f64>;
pub type Kkt64 = KktSolution<f64>;

pub type Matrix32 = Matrix<f32>;
pub type Problem32 = DecisionProblem<f32>;
pub type Model32 = PredictiveModel<f32>;
