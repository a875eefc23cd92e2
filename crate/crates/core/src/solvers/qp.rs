//! Quadratically regularized continuous relaxations and a primal-dual
//! interior-point solver for them.
//!
//! The relaxation of each problem is written in minimization form as
//!
//! ```text
//! min  ½ xᵀPx + qᵀx   s.t.  Gx ≤ h,  [xᵀQx ≤ r],  Ax = b
//! ```
//!
//! with `P = 2μI` and `q` the sense-adjusted predicted cost embedded into the
//! first `k` variables. Knapsack and portfolio use `x` directly; the shortest
//! path relaxation is an edge flow on the node-split graph whose first `k`
//! edges are the cell-internal ones, so the decision is always `x[..k]`.

use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix};
use crate::problem::{DecisionProblem, ProblemSense};
use crate::scalar::{dot, norm_inf, Scalar};
use crate::solvers::KktSolution;

const MAX_ITERS: usize = 120;
const FEAS_TOL: f64 = 1e-10;
const GAP_TOL: f64 = 1e-14;
const BARRIER_GROWTH: f64 = 10.0;
const LINE_SEARCH_ALPHA: f64 = 0.01;
pub const RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct RelaxedQp<T> {
    pub sense: ProblemSense,
    /// Length of the cost/decision vector embedded in the leading variables.
    pub cost_dim: usize,
    pub hessian: Matrix<T>,
    pub linear: Vec<T>,
    pub ineq: Matrix<T>,
    pub ineq_rhs: Vec<T>,
    /// Optional convex quadratic inequality `xᵀQx ≤ r`, ordered after `G`.
    pub quadratic: Option<(Matrix<T>, T)>,
    pub eq: Matrix<T>,
    pub eq_rhs: Vec<T>,
    /// Strictly feasible point for every inequality.
    pub start: Vec<T>,
    nonzeros: Vec<Vec<usize>>,
}

impl<T: Scalar> RelaxedQp<T> {
    /// Relaxation of `problem` with regularization weight `mu` and predicted
    /// (native-sense) cost `cost_hat`.
    pub fn new(problem: &DecisionProblem<T>, cost_hat: &[T], mu: T) -> Result<Self> {
        crate::error::check_len("QP cost", problem.cost_dim(), cost_hat.len())?;
        if !(mu > T::zero()) {
            return Err(Error::InvalidConfig("QP regularization must be > 0".into()));
        }
        let k = problem.cost_dim();
        let sense = problem.sense();
        let (n, ineq, ineq_rhs, quadratic, eq, eq_rhs, start) = match problem {
            DecisionProblem::Knapsack(kn) => {
                let mut g = Matrix::zeros(2 * k + 1, k);
                let mut h = vec![T::zero(); 2 * k + 1];
                for i in 0..k {
                    g[(i, i)] = -T::one();
                    g[(k + i, i)] = T::one();
                    h[k + i] = T::one();
                    g[(2 * k, i)] = T::of(kn.weights()[i] as f64);
                }
                h[2 * k] = T::of(kn.capacity() as f64);
                let total: f64 = kn.weights().iter().map(|&w| w as f64).sum();
                let rho = 0.5 * (kn.capacity() as f64 / total).min(1.0);
                (
                    k,
                    g,
                    h,
                    None,
                    Matrix::zeros(0, k),
                    Vec::new(),
                    vec![T::of(rho); k],
                )
            }
            DecisionProblem::ShortestPath(grid) => {
                let ne = grid.edges().len();
                let mut g = Matrix::zeros(ne, ne);
                for e in 0..ne {
                    g[(e, e)] = -T::one();
                }
                let (a, b) = grid.incidence::<T>();
                // The incidence rows sum to zero; drop the last one for full row rank.
                let rows = a.rows() - 1;
                let a = Matrix::from_row_major(rows, ne, a.as_slice()[..rows * ne].to_vec())?;
                let b = b[..rows].to_vec();
                (ne, g, vec![T::zero(); ne], None, a, b, vec![T::of(0.5); ne])
            }
            DecisionProblem::Portfolio(p) => {
                let mut g = Matrix::zeros(k + 1, k);
                let mut h = vec![T::zero(); k + 1];
                for i in 0..k {
                    g[(i, i)] = -T::one();
                    g[(k, i)] = T::one();
                }
                h[k] = T::one();
                let ones = vec![T::one(); k];
                let spread = p.covariance().quad_form(&ones).max(T::of(1e-300));
                let rho =
                    T::of(0.5) * (T::one() / T::of(k as f64)).min((p.risk_bound() / spread).sqrt());
                (
                    k,
                    g,
                    h,
                    Some((p.covariance().clone(), p.risk_bound())),
                    Matrix::zeros(0, k),
                    Vec::new(),
                    vec![rho; k],
                )
            }
        };
        let mut hessian = Matrix::zeros(n, n);
        for i in 0..n {
            hessian[(i, i)] = T::of(2.0) * mu;
        }
        let mut linear = vec![T::zero(); n];
        for (l, &c) in linear.iter_mut().zip(&sense.to_min(cost_hat)) {
            *l = c;
        }
        let nonzeros = (0..ineq.rows())
            .map(|i| {
                ineq.row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != T::zero())
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect();
        Ok(Self {
            sense,
            cost_dim: k,
            hessian,
            linear,
            ineq,
            ineq_rhs,
            quadratic,
            eq,
            eq_rhs,
            start,
            nonzeros,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.linear.len()
    }

    pub fn num_ineq(&self) -> usize {
        self.ineq.rows() + usize::from(self.quadratic.is_some())
    }

    pub fn num_eq(&self) -> usize {
        self.eq.rows()
    }

    pub fn constraint_values(&self, x: &[T]) -> Vec<T> {
        let mut f: Vec<T> = (0..self.ineq.rows())
            .map(|i| {
                let row = self.ineq.row(i);
                self.nonzeros[i]
                    .iter()
                    .fold(T::zero(), |a, &j| a + row[j] * x[j])
                    - self.ineq_rhs[i]
            })
            .collect();
        if let Some((q, r)) = &self.quadratic {
            f.push(q.quad_form(x) - *r);
        }
        f
    }

    /// Adds `scale · ∇f_i` to `out` for inequality `i`.
    fn add_constraint_gradient(&self, i: usize, x: &[T], scale: T, out: &mut [T]) {
        if i < self.ineq.rows() {
            let row = self.ineq.row(i);
            for &j in &self.nonzeros[i] {
                out[j] += scale * row[j];
            }
        } else if let Some((q, _)) = &self.quadratic {
            for (o, qx) in out.iter_mut().zip(q.mul_vec(x)) {
                *o += scale * T::of(2.0) * qx;
            }
        }
    }

    /// Dense Jacobian row `∇f_i(x)`.
    pub(crate) fn constraint_gradient(&self, i: usize, x: &[T]) -> Vec<T> {
        let mut g = vec![T::zero(); self.num_vars()];
        self.add_constraint_gradient(i, x, T::one(), &mut g);
        g
    }

    /// `∇²f0 + λ_q ∇²(xᵀQx)`
    pub(crate) fn lagrangian_hessian(&self, quad_multiplier: T) -> Matrix<T> {
        let mut h = self.hessian.clone();
        if let Some((q, _)) = &self.quadratic {
            for (hv, &qv) in h.as_mut_slice().iter_mut().zip(q.as_slice()) {
                *hv += T::of(2.0) * quad_multiplier * qv;
            }
        }
        h
    }

    fn dual_residual(&self, x: &[T], lambda: &[T], nu: &[T]) -> Vec<T> {
        let mut r = self.hessian.mul_vec(x);
        for (ri, &qi) in r.iter_mut().zip(&self.linear) {
            *ri += qi;
        }
        for (i, &l) in lambda.iter().enumerate() {
            self.add_constraint_gradient(i, x, l, &mut r);
        }
        if self.num_eq() > 0 {
            for (ri, v) in r.iter_mut().zip(self.eq.tr_mul_vec(nu)) {
                *ri += v;
            }
        }
        r
    }

    fn primal_residual(&self, x: &[T]) -> Vec<T> {
        self.eq
            .mul_vec(x)
            .into_iter()
            .zip(&self.eq_rhs)
            .map(|(a, &b)| a - b)
            .collect()
    }

    /// Primal-dual interior-point solve.
    pub fn solve(&self) -> Result<KktSolution<T>> {
        let n = self.num_vars();
        let m = self.num_ineq();
        let p = self.num_eq();
        let mut x = self.start.clone();
        let mut lambda = vec![T::one(); m];
        let mut nu = vec![T::zero(); p];
        let scale = T::one().max(norm_inf(&self.linear));
        let feas_tol = T::of(FEAS_TOL) * scale;
        let gap_tol = T::of(GAP_TOL) * scale;
        let mut f = self.constraint_values(&x);
        if f.iter().any(|&v| !(v < T::zero())) {
            return Err(Error::InvalidProblem(
                "QP start is not strictly feasible".into(),
            ));
        }

        let residual_norm = |rd: &[T], rc: &[T], rp: &[T]| -> T {
            rd.iter()
                .chain(rc)
                .chain(rp)
                .fold(T::zero(), |a, &v| a + v * v)
                .sqrt()
        };

        let mut iters = 0;
        loop {
            let gap = -dot(&f, &lambda);
            let r_dual = self.dual_residual(&x, &lambda, &nu);
            let r_pri = self.primal_residual(&x);
            if norm_inf(&r_dual) <= feas_tol && norm_inf(&r_pri) <= feas_tol && gap <= gap_tol {
                break;
            }
            if iters >= MAX_ITERS {
                break;
            }
            iters += 1;
            let t = T::of(BARRIER_GROWTH) * T::of(m as f64) / gap;
            let inv_t = T::one() / t;
            let r_cent: Vec<T> = lambda
                .iter()
                .zip(&f)
                .map(|(&l, &fi)| -l * fi - inv_t)
                .collect();

            // Reduced Newton system [H_pd Aᵀ; A 0].
            let quad_mult = if self.quadratic.is_some() {
                lambda[m - 1]
            } else {
                T::zero()
            };
            let h_lag = self.lagrangian_hessian(quad_mult);
            let dim = n + p;
            let mut kkt = Matrix::zeros(dim, dim);
            for i in 0..n {
                kkt.row_mut(i)[..n].copy_from_slice(h_lag.row(i));
            }
            let mut rhs = vec![T::zero(); dim];
            for (i, r) in r_dual.iter().enumerate() {
                rhs[i] = -*r;
            }
            for i in 0..m {
                let w = lambda[i] / -f[i];
                if i < self.ineq.rows() {
                    let row = self.ineq.row(i);
                    let nz = &self.nonzeros[i];
                    for &a in nz {
                        for &b in nz {
                            kkt[(a, b)] += w * row[a] * row[b];
                        }
                        rhs[a] -= row[a] * r_cent[i] / f[i];
                    }
                } else {
                    let g = self.constraint_gradient(i, &x);
                    for a in 0..n {
                        for b in 0..n {
                            kkt[(a, b)] += w * g[a] * g[b];
                        }
                        rhs[a] -= g[a] * r_cent[i] / f[i];
                    }
                }
            }
            for r in 0..p {
                for c in 0..n {
                    let v = self.eq[(r, c)];
                    kkt[(n + r, c)] = v;
                    kkt[(c, n + r)] = v;
                }
                rhs[n + r] = -r_pri[r];
            }
            // Near the optimum `λ/−f` swamps the regularizer and the reduced
            // matrix can lose rank in floating point; the final residual
            // check then decides whether the current iterate is good enough.
            let sol = match Lu::factor_ill_conditioned(kkt) {
                Ok(lu) => lu.solve(&rhs),
                Err(_) if iters > 1 => break,
                Err(e) => return Err(e),
            };
            let dx = &sol[..n];
            let dnu = &sol[n..];
            let dlambda: Vec<T> = (0..m)
                .map(|i| {
                    let gdx = self.constraint_gradient_dot(i, &x, dx);
                    (-lambda[i] * gdx + r_cent[i]) / f[i]
                })
                .collect();

            let mut s_max = T::one();
            for (&l, &dl) in lambda.iter().zip(&dlambda) {
                if dl < T::zero() {
                    s_max = s_max.min(-l / dl);
                }
            }
            let mut s = T::of(0.99) * s_max;
            let base = residual_norm(&r_dual, &r_cent, &r_pri);
            let mut accepted = false;
            for _ in 0..60 {
                let xn: Vec<T> = x.iter().zip(dx).map(|(&a, &b)| a + s * b).collect();
                let fn_ = self.constraint_values(&xn);
                if fn_.iter().all(|&v| v < T::zero()) {
                    let ln: Vec<T> = lambda
                        .iter()
                        .zip(&dlambda)
                        .map(|(&a, &b)| a + s * b)
                        .collect();
                    let nn: Vec<T> = nu.iter().zip(dnu).map(|(&a, &b)| a + s * b).collect();
                    let rd = self.dual_residual(&xn, &ln, &nn);
                    let rc: Vec<T> = ln
                        .iter()
                        .zip(&fn_)
                        .map(|(&l, &fi)| -l * fi - inv_t)
                        .collect();
                    let rp = self.primal_residual(&xn);
                    if residual_norm(&rd, &rc, &rp)
                        <= (T::one() - T::of(LINE_SEARCH_ALPHA) * s) * base
                    {
                        x = xn;
                        lambda = ln;
                        nu = nn;
                        f = fn_;
                        accepted = true;
                        break;
                    }
                }
                s *= T::of(0.5);
            }
            if !accepted {
                break;
            }
        }

        let r_dual = self.dual_residual(&x, &lambda, &nu);
        let r_pri = self.primal_residual(&x);
        let stationarity = norm_inf(&r_dual);
        let primal = f.iter().fold(norm_inf(&r_pri), |a, &v| a.max(v));
        let complementarity = lambda
            .iter()
            .zip(&f)
            .fold(T::zero(), |a, (&l, &fi)| a.max((l * fi).abs()));
        let tol = T::of(RESIDUAL_TOL);
        if !(stationarity <= tol && primal <= tol && complementarity <= tol) {
            return Err(Error::NotConverged {
                iterations: iters,
                stationarity: stationarity.as_f64(),
                primal: primal.as_f64(),
                complementarity: complementarity.as_f64(),
            });
        }
        Ok(KktSolution {
            x,
            ineq_multipliers: lambda,
            eq_multipliers: nu,
            constraint_values: f,
            stationarity,
            primal,
            complementarity,
        })
    }

    /// `∇f_i(x) · v`
    fn constraint_gradient_dot(&self, i: usize, x: &[T], v: &[T]) -> T {
        if i < self.ineq.rows() {
            let row = self.ineq.row(i);
            self.nonzeros[i]
                .iter()
                .fold(T::zero(), |a, &j| a + row[j] * v[j])
        } else if let Some((q, _)) = &self.quadratic {
            T::of(2.0) * dot(&q.mul_vec(x), v)
        } else {
            T::zero()
        }
    }

    /// Decision part `x[..k]` of a relaxation solution.
    pub fn decision<'a>(&self, kkt: &'a KktSolution<T>) -> &'a [T] {
        &kkt.x[..self.cost_dim]
    }
}

/// Solves the `mu`-regularized relaxation of `problem` for predicted cost
/// `cost_hat`; the decision is `kkt.x[..k]`.
pub fn qp_regularized_solve<T: Scalar>(
    problem: &DecisionProblem<T>,
    cost_hat: &[T],
    mu: T,
) -> Result<KktSolution<T>> {
    RelaxedQp::new(problem, cost_hat, mu)?.solve()
}
