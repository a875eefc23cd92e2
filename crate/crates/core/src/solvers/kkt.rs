//! Implicit differentiation of the regularized relaxation through its KKT
//! conditions.
//!
//! Differentiating stationarity, complementary slackness and primal
//! feasibility with respect to the linear term `q` gives
//!
//! ```text
//! ⎡ H        Jᵀ       Aᵀ ⎤ ⎡dx⎤   ⎡−dq⎤
//! ⎢ diag(λ)J diag(f)  0  ⎥ ⎢dλ⎥ = ⎢ 0 ⎥
//! ⎣ A        0        0  ⎦ ⎣dν⎦   ⎣ 0 ⎦
//! ```
//!
//! with `H = P + λ_q ∇²(xᵀQx)` and `J` the inequality Jacobian. A vector–Jacobian
//! product solves the transposed system once.

use crate::error::{check_len, Error, Result};
use crate::linalg::{Lu, Matrix};
use crate::problem::DecisionProblem;
use crate::scalar::Scalar;
use crate::solvers::qp::{RelaxedQp, RESIDUAL_TOL};
use crate::solvers::KktSolution;

/// Diagonal damping added before factorization: `+δ` on the primal block,
/// `−δ` on the complementarity and equality blocks (the signs of their
/// existing diagonals), so near-degenerate active sets stay factorable.
pub const KKT_DAMPING: f64 = 1e-10;

/// Returns `(∂x*/∂ĉ)ᵀ · downstream`, i.e. `dL/dĉ` given `dL/dx` for the
/// decision part `x[..k]` of the relaxation solution.
pub fn kkt_jacobian_vector_product<T: Scalar>(
    kkt: &KktSolution<T>,
    problem: &DecisionProblem<T>,
    mu: T,
    downstream: &[T],
) -> Result<Vec<T>> {
    let k = problem.cost_dim();
    check_len("KKT downstream gradient", k, downstream.len())?;
    if kkt.max_residual() > T::of(RESIDUAL_TOL) {
        return Err(Error::NotConverged {
            iterations: 0,
            stationarity: kkt.stationarity.as_f64(),
            primal: kkt.primal.as_f64(),
            complementarity: kkt.complementarity.as_f64(),
        });
    }
    if downstream.iter().all(|&v| v == T::zero()) {
        return Ok(vec![T::zero(); k]);
    }
    let qp = RelaxedQp::new(problem, &vec![T::zero(); k], mu)?;
    let (n, m, p) = (qp.num_vars(), qp.num_ineq(), qp.num_eq());
    check_len("KKT primal", n, kkt.x.len())?;
    check_len("KKT inequality multipliers", m, kkt.ineq_multipliers.len())?;

    let dim = n + m + p;
    let mut mat = Matrix::zeros(dim, dim);
    let quad_mult = if qp.quadratic.is_some() {
        kkt.ineq_multipliers[m - 1]
    } else {
        T::zero()
    };
    let h = qp.lagrangian_hessian(quad_mult);
    for i in 0..n {
        mat.row_mut(i)[..n].copy_from_slice(h.row(i));
    }
    for i in 0..m {
        let g = qp.constraint_gradient(i, &kkt.x);
        let lam = kkt.ineq_multipliers[i];
        for (j, &gj) in g.iter().enumerate() {
            if gj != T::zero() {
                mat[(j, n + i)] = gj;
                mat[(n + i, j)] = lam * gj;
            }
        }
        mat[(n + i, n + i)] = kkt.constraint_values[i];
    }
    for r in 0..p {
        for c in 0..n {
            let v = qp.eq[(r, c)];
            mat[(c, n + m + r)] = v;
            mat[(n + m + r, c)] = v;
        }
    }
    let delta = T::of(KKT_DAMPING);
    for i in 0..dim {
        if i < n {
            mat[(i, i)] += delta;
        } else {
            mat[(i, i)] -= delta;
        }
    }

    let mut rhs = vec![T::zero(); dim];
    rhs[..k].copy_from_slice(downstream);
    let y = Lu::factor_ill_conditioned(mat)
        .map_err(|_| Error::Singular("KKT system"))?
        .solve_transpose(&rhs);
    // dL/dq = −y_x; q = ±ĉ by sense.
    let sign: T = problem.sense().sign();
    Ok(y[..k].iter().map(|&v| -sign * v).collect())
}
