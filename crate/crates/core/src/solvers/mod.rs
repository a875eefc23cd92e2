//! Oracles for the three decision problems plus the regularized quadratic
//! programs and KKT differentiation behind the QPTL surrogate.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

pub mod kkt;
pub mod knapsack;
pub mod portfolio;
pub mod qp;
pub mod shortest_path;

pub use kkt::kkt_jacobian_vector_product;
pub use qp::{qp_regularized_solve, RelaxedQp};

/// Primal/dual point of a convex program `min f0(x) s.t. f_i(x) ≤ 0, Ax = b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct KktSolution<T> {
    pub x: Vec<T>,
    /// One multiplier per inequality, in the solver's constraint order.
    pub ineq_multipliers: Vec<T>,
    pub eq_multipliers: Vec<T>,
    /// `f_i(x)` for every inequality (nonpositive when feasible).
    pub constraint_values: Vec<T>,
    pub stationarity: T,
    pub primal: T,
    pub complementarity: T,
}

impl<T: Scalar> KktSolution<T> {
    /// Inequalities whose value is within `tol` of the boundary.
    pub fn active(&self, tol: T) -> Vec<bool> {
        self.constraint_values.iter().map(|&f| f >= -tol).collect()
    }

    pub fn max_residual(&self) -> T {
        self.stationarity.max(self.primal).max(self.complementarity)
    }
}

/// Knapsack oracle over real-valued profits.
pub fn knapsack_solve<T: Scalar>(
    values: &[T],
    weights: &[u32],
    capacity: u32,
) -> crate::problem::Solution<T> {
    let decision = knapsack::solve(values, weights, capacity);
    let objective_value = crate::scalar::dot(values, &decision);
    crate::problem::Solution {
        decision,
        objective_value,
    }
}

/// Shortest-path oracle on a `side × side` grid (cell-indicator decision).
pub fn shortest_path_solve<T: Scalar>(
    node_costs: &[T],
    side: usize,
) -> crate::error::Result<crate::problem::Solution<T>> {
    let grid = crate::problem::GridShortestPath::new(side)?;
    crate::error::check_len("shortest-path cost", grid.num_cells(), node_costs.len())?;
    let decision = shortest_path::solve(&grid, node_costs);
    let objective_value = crate::scalar::dot(node_costs, &decision);
    Ok(crate::problem::Solution {
        decision,
        objective_value,
    })
}

/// Portfolio oracle (log-barrier interior point).
pub fn portfolio_solve<T: Scalar>(
    returns: &[T],
    covariance: &crate::linalg::Matrix<T>,
    risk_bound: T,
) -> crate::error::Result<crate::problem::Solution<T>> {
    let res = portfolio::solve(returns, covariance, risk_bound)?;
    let objective_value = crate::scalar::dot(returns, res.decision());
    Ok(crate::problem::Solution {
        decision: res.kkt.x,
        objective_value,
    })
}
