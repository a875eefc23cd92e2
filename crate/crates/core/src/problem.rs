//! Decision problems, instances and the deterministic-oracle contract.
//!
//! Every problem exposes `solve(cost)`, an exact (knapsack, shortest path) or
//! interior-point (portfolio) oracle returning the same decision vector for the
//! same cost vector on every call. Decision vectors always have the same length
//! as cost vectors, so `cᵀx` is the objective for every kind.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{cholesky, Matrix};
use crate::scalar::{dot, Scalar};
use crate::solvers;

/// Tolerance applied to continuous constraints (risk, budget, nonnegativity).
pub const FEAS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProblemSense {
    Minimize,
    Maximize,
}

impl ProblemSense {
    /// Maps a native-sense cost vector into minimization coordinates (and back:
    /// the map is an involution).
    pub fn to_min<T: Scalar>(self, v: &[T]) -> Vec<T> {
        match self {
            ProblemSense::Minimize => v.to_vec(),
            ProblemSense::Maximize => v.iter().map(|&x| -x).collect(),
        }
    }

    /// `+1` for minimization, `-1` for maximization.
    pub fn sign<T: Scalar>(self) -> T {
        match self {
            ProblemSense::Minimize => T::one(),
            ProblemSense::Maximize => -T::one(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Knapsack,
    ShortestPath,
    Portfolio,
}

/// 0/1 knapsack with integer weights: `max cᵀx s.t. wᵀx ≤ capacity, x ∈ {0,1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Knapsack {
    weights: Vec<u32>,
    capacity: u32,
}

impl Knapsack {
    pub fn new(weights: Vec<u32>, capacity: u32) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidProblem(
                "knapsack needs at least one item".into(),
            ));
        }
        if weights.contains(&0) {
            return Err(Error::InvalidProblem(
                "knapsack weights must be >= 1".into(),
            ));
        }
        if capacity == 0 {
            return Err(Error::InvalidProblem(
                "knapsack capacity must be > 0".into(),
            ));
        }
        Ok(Self { weights, capacity })
    }

    /// Builds a knapsack from real-valued weights, rejecting non-integers.
    pub fn from_real_weights(weights: &[f64], capacity: i64) -> Result<Self> {
        if capacity < 0 {
            return Err(Error::InvalidProblem(format!(
                "knapsack capacity must be nonnegative, got {capacity}"
            )));
        }
        let ws = weights
            .iter()
            .map(|&w| {
                if w.fract() != 0.0 || !(1.0..=u32::MAX as f64).contains(&w) {
                    Err(Error::InvalidProblem(format!(
                        "knapsack weight {w} is not a positive integer"
                    )))
                } else {
                    Ok(w as u32)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(ws, capacity as u32)
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Node-weighted shortest path on a `side × side` grid with 8-neighbour moves,
/// from the top-left to the bottom-right cell.
///
/// The node-split view doubles every cell `v` into `in(v) = v` and
/// `out(v) = side² + v`; the internal edge `in(v) → out(v)` carries the cell
/// cost and move edges `out(u) → in(v)` are free. Edge `v < side²` is the
/// internal edge of cell `v`; move edges follow in `(u, v)` index order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct GridShortestPath {
    side: usize,
    neighbours: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct GridSpec {
    side: usize,
}

impl TryFrom<GridSpec> for GridShortestPath {
    type Error = Error;
    fn try_from(spec: GridSpec) -> Result<Self> {
        Self::new(spec.side)
    }
}

impl From<GridShortestPath> for GridSpec {
    fn from(g: GridShortestPath) -> Self {
        GridSpec { side: g.side }
    }
}

impl GridShortestPath {
    pub fn new(side: usize) -> Result<Self> {
        if side < 2 {
            return Err(Error::InvalidProblem(format!(
                "grid side must be >= 2, got {side}"
            )));
        }
        let n = side * side;
        let mut neighbours = Vec::with_capacity(n);
        for v in 0..n {
            let (r, c) = ((v / side) as isize, (v % side) as isize);
            let mut nb = Vec::with_capacity(8);
            for dr in -1..=1isize {
                for dc in -1..=1isize {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let (rr, cc) = (r + dr, c + dc);
                    if rr >= 0 && cc >= 0 && rr < side as isize && cc < side as isize {
                        nb.push(rr as usize * side + cc as usize);
                    }
                }
            }
            nb.sort_unstable();
            neighbours.push(nb);
        }
        let mut edges: Vec<(usize, usize)> = (0..n).map(|v| (v, n + v)).collect();
        for (u, nb) in neighbours.iter().enumerate() {
            for &v in nb {
                edges.push((n + u, v));
            }
        }
        Ok(Self {
            side,
            neighbours,
            edges,
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn num_cells(&self) -> usize {
        self.side * self.side
    }

    pub fn source(&self) -> usize {
        0
    }

    pub fn sink(&self) -> usize {
        self.num_cells() - 1
    }

    /// Cell indices adjacent to `v`, ascending.
    pub fn neighbours(&self, v: usize) -> &[usize] {
        &self.neighbours[v]
    }

    /// Directed edges of the node-split graph as `(tail, head)` vertex pairs.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_split_vertices(&self) -> usize {
        2 * self.num_cells()
    }

    /// Incidence matrix `A` (`+1` at the tail, `-1` at the head of every edge)
    /// and supply vector `b` (`+1` at the source's in-vertex, `-1` at the
    /// sink's out-vertex) so that unit flows satisfy `Ax = b`.
    pub fn incidence<T: Scalar>(&self) -> (Matrix<T>, Vec<T>) {
        let nv = self.num_split_vertices();
        let mut a = Matrix::zeros(nv, self.edges.len());
        for (e, &(tail, head)) in self.edges.iter().enumerate() {
            a[(tail, e)] = T::one();
            a[(head, e)] = -T::one();
        }
        let mut b = vec![T::zero(); nv];
        b[self.source()] = T::one();
        b[self.num_cells() + self.sink()] = -T::one();
        (a, b)
    }

    /// Edge-indicator vector of a cell route produced by [`Self::route`].
    pub fn edge_indicator<T: Scalar>(&self, route: &[usize]) -> Vec<T> {
        let n = self.num_cells();
        let mut x = vec![T::zero(); self.edges.len()];
        for &v in route {
            x[v] = T::one();
        }
        for pair in route.windows(2) {
            if let Some(e) = self.edges[n..]
                .iter()
                .position(|&(t, h)| t == n + pair[0] && h == pair[1])
            {
                x[n + e] = T::one();
            }
        }
        x
    }

    /// Sequence of cells on the oracle path for `cost`.
    pub fn route<T: Scalar>(&self, cost: &[T]) -> Result<Vec<usize>> {
        check_len("shortest-path cost", self.num_cells(), cost.len())?;
        Ok(solvers::shortest_path::dijkstra_route(self, cost))
    }
}

/// Risk-constrained portfolio: `max cᵀx s.t. xᵀΣx ≤ λ, 1ᵀx ≤ 1, x ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Portfolio<T> {
    covariance: Matrix<T>,
    risk_bound: T,
}

impl<T: Scalar> Portfolio<T> {
    pub fn new(covariance: Matrix<T>, risk_bound: T) -> Result<Self> {
        let d = covariance.rows();
        if d == 0 || covariance.cols() != d {
            return Err(Error::InvalidProblem(
                "covariance must be square and non-empty".into(),
            ));
        }
        let scale = covariance.trace().abs().max(T::one());
        if !covariance.is_symmetric(T::of(1e-12) * scale) {
            return Err(Error::InvalidProblem("covariance must be symmetric".into()));
        }
        // PSD check: Σ + εI must admit a Cholesky factor.
        let mut shifted = covariance.clone();
        let jitter = T::of(1e-10) * scale;
        for i in 0..d {
            shifted[(i, i)] += jitter;
        }
        if cholesky(&shifted).is_err() {
            return Err(Error::InvalidProblem(
                "covariance must be positive semidefinite".into(),
            ));
        }
        if !(risk_bound > T::zero()) {
            return Err(Error::InvalidProblem("risk bound must be > 0".into()));
        }
        Ok(Self {
            covariance,
            risk_bound,
        })
    }

    pub fn covariance(&self) -> &Matrix<T> {
        &self.covariance
    }

    pub fn risk_bound(&self) -> T {
        self.risk_bound
    }

    pub fn num_assets(&self) -> usize {
        self.covariance.rows()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Scalar")]
pub enum DecisionProblem<T> {
    Knapsack(Knapsack),
    ShortestPath(GridShortestPath),
    Portfolio(Portfolio<T>),
}

/// A decision together with its objective under the cost it was solved for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Solution<T> {
    pub decision: Vec<T>,
    pub objective_value: T,
}

impl<T: Scalar> DecisionProblem<T> {
    pub fn kind(&self) -> ProblemKind {
        match self {
            DecisionProblem::Knapsack(_) => ProblemKind::Knapsack,
            DecisionProblem::ShortestPath(_) => ProblemKind::ShortestPath,
            DecisionProblem::Portfolio(_) => ProblemKind::Portfolio,
        }
    }

    pub fn sense(&self) -> ProblemSense {
        match self {
            DecisionProblem::ShortestPath(_) => ProblemSense::Minimize,
            DecisionProblem::Knapsack(_) | DecisionProblem::Portfolio(_) => ProblemSense::Maximize,
        }
    }

    /// Length `k` of cost vectors (and of decision vectors).
    pub fn cost_dim(&self) -> usize {
        match self {
            DecisionProblem::Knapsack(k) => k.len(),
            DecisionProblem::ShortestPath(g) => g.num_cells(),
            DecisionProblem::Portfolio(p) => p.num_assets(),
        }
    }

    pub fn is_discrete(&self) -> bool {
        !matches!(self, DecisionProblem::Portfolio(_))
    }

    /// Deterministic oracle `x*(cost)` in the problem's native sense.
    pub fn solve(&self, cost: &[T]) -> Result<Solution<T>> {
        check_len("oracle cost", self.cost_dim(), cost.len())?;
        if cost.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("oracle cost"));
        }
        let decision = match self {
            DecisionProblem::Knapsack(k) => {
                solvers::knapsack::solve(cost, k.weights(), k.capacity())
            }
            DecisionProblem::ShortestPath(g) => solvers::shortest_path::solve(g, cost),
            DecisionProblem::Portfolio(p) => {
                solvers::portfolio::solve(cost, p.covariance(), p.risk_bound())?
                    .kkt
                    .x
            }
        };
        let objective_value = dot(cost, &decision);
        Ok(Solution {
            decision,
            objective_value,
        })
    }

    /// Oracle for a cost vector expressed in minimization coordinates:
    /// returns `argmin vᵀx` over the feasible set.
    pub fn solve_min(&self, min_cost: &[T]) -> Result<Vec<T>> {
        let native = self.sense().to_min(min_cost);
        Ok(self.solve(&native)?.decision)
    }

    pub fn objective(&self, cost: &[T], decision: &[T]) -> T {
        dot(cost, decision)
    }

    /// Whether `x` satisfies the problem's constraints (exactly for discrete
    /// problems, within [`FEAS_TOL`] for the portfolio).
    pub fn is_feasible(&self, x: &[T]) -> bool {
        if x.len() != self.cost_dim() {
            return false;
        }
        let binary = || x.iter().all(|&v| v == T::zero() || v == T::one());
        match self {
            DecisionProblem::Knapsack(k) => {
                binary()
                    && k.weights()
                        .iter()
                        .zip(x)
                        .filter(|(_, &v)| v == T::one())
                        .map(|(&w, _)| w as u64)
                        .sum::<u64>()
                        <= k.capacity() as u64
            }
            DecisionProblem::ShortestPath(g) => binary() && grid_path_connected(g, x),
            DecisionProblem::Portfolio(p) => {
                let tol = T::of(FEAS_TOL);
                x.iter().all(|&v| v >= -tol)
                    && x.iter().copied().sum::<T>() <= T::one() + tol
                    && p.covariance().quad_form(x) <= p.risk_bound() + tol
            }
        }
    }

    /// Sense-normalized regret of `decision_hat` against the optimal
    /// `decision_star` under `true_cost`; nonnegative up to solver tolerance.
    pub fn regret(&self, true_cost: &[T], decision_hat: &[T], decision_star: &[T]) -> Result<T> {
        let k = self.cost_dim();
        check_len("regret cost", k, true_cost.len())?;
        check_len("regret decision", k, decision_hat.len())?;
        check_len("regret optimal decision", k, decision_star.len())?;
        let hat = dot(true_cost, decision_hat);
        let star = dot(true_cost, decision_star);
        Ok(match self.sense() {
            ProblemSense::Minimize => hat - star,
            ProblemSense::Maximize => star - hat,
        })
    }
}

fn grid_path_connected<T: Scalar>(g: &GridShortestPath, x: &[T]) -> bool {
    let on = |v: usize| x[v] == T::one();
    if !on(g.source()) || !on(g.sink()) {
        return false;
    }
    let mut seen = vec![false; g.num_cells()];
    let mut stack = vec![g.source()];
    seen[g.source()] = true;
    while let Some(u) = stack.pop() {
        for &v in g.neighbours(u) {
            if on(v) && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    (0..g.num_cells()).all(|v| !on(v) || seen[v])
}

/// Free-function form of [`DecisionProblem::solve`].
pub fn solve_oracle<T: Scalar>(problem: &DecisionProblem<T>, cost: &[T]) -> Result<Solution<T>> {
    problem.solve(cost)
}

/// Free-function form of [`DecisionProblem::regret`].
pub fn regret<T: Scalar>(
    problem: &DecisionProblem<T>,
    true_cost: &[T],
    decision_hat: &[T],
    decision_star: &[T],
) -> Result<T> {
    problem.regret(true_cost, decision_hat, decision_star)
}

/// One `(features, true cost)` observation with its cached oracle decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Instance<T> {
    pub features: Vec<T>,
    pub true_cost: Vec<T>,
    pub oracle_solution: Vec<T>,
}

impl<T: Scalar> Instance<T> {
    pub fn new(problem: &DecisionProblem<T>, features: Vec<T>, true_cost: Vec<T>) -> Result<Self> {
        let sol = problem.solve(&true_cost)?;
        Ok(Self {
            features,
            true_cost,
            oracle_solution: sol.decision,
        })
    }

    /// `cᵀx*(c)`
    pub fn optimal_objective(&self) -> T {
        dot(&self.true_cost, &self.oracle_solution)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Dataset<T> {
    pub instances: Vec<Instance<T>>,
    pub split: Split,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(instances: Vec<Instance<T>>, split: Split) -> Result<Self> {
        let first = instances
            .first()
            .ok_or_else(|| Error::InvalidProblem("dataset must be non-empty".into()))?;
        let (l, k) = (first.features.len(), first.true_cost.len());
        for inst in &instances {
            check_len("dataset feature length", l, inst.features.len())?;
            check_len("dataset cost length", k, inst.true_cost.len())?;
        }
        Ok(Self { instances, split })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.instances[0].features.len()
    }

    pub fn cost_dim(&self) -> usize {
        self.instances[0].true_cost.len()
    }
}
