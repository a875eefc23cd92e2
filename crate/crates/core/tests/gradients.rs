//! Central finite-difference checks of every smooth analytic gradient.

mod common;

use common::*;
use dflrb_core::nn::{ModelKind, OutputActivation, PredictiveModel};
use dflrb_core::solvers::qp_regularized_solve;
use dflrb_core::surrogates::{listwise_loss, mse_loss, pairwise_diff_loss, qptl_grad, SolutionCache};
use dflrb_core::DecisionProblem;
use rand::Rng;

const PROBES: usize = 100;

/// Directional central difference of `f` at `x` along `v`.
fn directional(f: &dyn Fn(&[f64]) -> f64, x: &[f64], v: &[f64], h: f64) -> f64 {
    let xp: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + h * b).collect();
    let xm: Vec<f64> = x.iter().zip(v).map(|(a, b)| a - h * b).collect();
    (f(&xp) - f(&xm)) / (2.0 * h)
}

fn min_abs_preactivation(m: &PredictiveModel<f64>, z: &[f64]) -> f64 {
    let mut h = z.to_vec();
    let mut smallest = f64::INFINITY;
    for (i, layer) in m.layers.iter().enumerate() {
        let mut a = layer.weight.mul_vec(&h);
        for (ai, b) in a.iter_mut().zip(&layer.bias) {
            *ai += b;
        }
        let relu_here = i + 1 < m.layers.len() || m.output_activation == OutputActivation::Relu;
        if relu_here {
            smallest = a.iter().fold(smallest, |s, v| s.min(v.abs()));
        }
        h = a.iter().map(|v| v.max(0.0)).collect();
    }
    smallest
}

#[test]
fn model_gradients_match_finite_differences() {
    let mut rng = rng(21);
    let kinds = [
        (ModelKind::Linear, OutputActivation::None),
        (ModelKind::Linear, OutputActivation::Relu),
        (ModelKind::Mlp { hidden: 6 }, OutputActivation::None),
        (ModelKind::Mlp { hidden: 6 }, OutputActivation::Relu),
    ];
    let mut probes = 0;
    while probes < 4 * PROBES {
        let (kind, act) = kinds[probes % 4];
        let mut m = PredictiveModel::<f64>::new(kind, 4, 3, act, &mut rng).unwrap();
        let p = uniform_vec(&mut rng, m.num_params(), -1.0, 1.0);
        m.set_params(&p).unwrap();
        let z = uniform_vec(&mut rng, 4, -2.0, 2.0);
        if min_abs_preactivation(&m, &z) < 1e-4 {
            continue;
        }
        let u = uniform_vec(&mut rng, 3, -1.0, 1.0);
        let g = m.backward(&z, &u).unwrap();

        let dz = uniform_vec(&mut rng, 4, -1.0, 1.0);
        let f_in = |x: &[f64]| dot(&u, &m.forward(x).unwrap());
        let fd = directional(&f_in, &z, &dz, 1e-6);
        assert!(rel_err(fd, dot(&g.input, &dz), 1e-8) <= 1e-5, "input {fd} vs {}", dot(&g.input, &dz));

        let dp = uniform_vec(&mut rng, p.len(), -1.0, 1.0);
        let f_par = |q: &[f64]| {
            let mut mm = m.clone();
            mm.set_params(q).unwrap();
            dot(&u, &mm.forward(&z).unwrap())
        };
        let fd = directional(&f_par, &p, &dp, 1e-6);
        assert!(rel_err(fd, dot(&g.params, &dp), 1e-8) <= 1e-5);
        probes += 1;
    }
}

#[test]
fn linear_model_closed_forms_are_exact() {
    let mut rng = rng(22);
    for _ in 0..PROBES {
        let m = PredictiveModel::<f64>::new(ModelKind::Linear, 5, 3, OutputActivation::None, &mut rng).unwrap();
        let z = uniform_vec(&mut rng, 5, -1.0, 1.0);
        let u = uniform_vec(&mut rng, 3, -1.0, 1.0);
        let w = &m.layers[0].weight;
        let mut expect = w.mul_vec(&z);
        for (e, b) in expect.iter_mut().zip(&m.layers[0].bias) {
            *e += b;
        }
        assert_eq!(m.forward(&z).unwrap(), expect);
        assert_eq!(m.backward(&z, &u).unwrap().input, w.tr_mul_vec(&u));
    }
}

#[test]
fn mse_gradient_matches_finite_differences() {
    let mut rng = rng(23);
    for _ in 0..PROBES {
        let c = uniform_vec(&mut rng, 6, -3.0, 3.0);
        let c_hat = uniform_vec(&mut rng, 6, -3.0, 3.0);
        let v = uniform_vec(&mut rng, 6, -1.0, 1.0);
        let g = mse_loss(&c_hat, &c).unwrap().grad;
        let fd = directional(&|x| mse_loss(x, &c).unwrap().loss, &c_hat, &v, 1e-6);
        assert!(rel_err(fd, dot(&g, &v), 1e-8) <= 1e-6);
    }
}

fn cache_for(rng: &mut rand_chacha::ChaCha8Rng, p: &DecisionProblem<f64>, size: usize) -> SolutionCache<f64> {
    let mut cache = SolutionCache::new(0.0).unwrap();
    // small knapsacks may admit fewer distinct optima than requested
    for _ in 0..50 * size {
        if cache.len() >= size {
            break;
        }
        let c = random_cost(rng, p);
        cache.insert(p.solve(&c).unwrap().decision);
    }
    cache
}

#[test]
fn pairwise_diff_gradient_matches_finite_differences() {
    let mut rng = rng(24);
    for probe in 0..PROBES {
        let kinds = all_kinds(&mut rng);
        let p = &kinds[probe % 3];
        let cache = cache_for(&mut rng, p, 3);
        let c = random_cost(&mut rng, p);
        let x_star = p.solve(&c).unwrap().decision;
        let c_hat = random_cost(&mut rng, p);
        let v = uniform_vec(&mut rng, c.len(), -1.0, 1.0);
        let g = pairwise_diff_loss(p, &c_hat, &c, &x_star, &cache).unwrap().grad;
        let f = |x: &[f64]| pairwise_diff_loss(p, x, &c, &x_star, &cache).unwrap().loss;
        let fd = directional(&f, &c_hat, &v, 1e-6);
        assert!(rel_err(fd, dot(&g, &v), 1e-8) <= 1e-6, "{fd} vs {}", dot(&g, &v));
    }
}

#[test]
fn listwise_gradient_matches_finite_differences() {
    let mut rng = rng(25);
    for probe in 0..PROBES {
        let kinds = all_kinds(&mut rng);
        let p = &kinds[probe % 3];
        let cache = cache_for(&mut rng, p, 3);
        let c = random_cost(&mut rng, p);
        let x_star = p.solve(&c).unwrap().decision;
        let c_hat = random_cost(&mut rng, p);
        let tau = rng.random_range(0.5..5.0);
        let v = uniform_vec(&mut rng, c.len(), -1.0, 1.0);
        let g = listwise_loss(p, &c_hat, &c, &x_star, tau, &cache).unwrap().grad;
        let f = |x: &[f64]| listwise_loss(p, x, &c, &x_star, tau, &cache).unwrap().loss;
        let fd = directional(&f, &c_hat, &v, 1e-5);
        assert!(rel_err(fd, dot(&g, &v), 1e-4) <= 1e-5, "{fd} vs {}", dot(&g, &v));
    }
}

#[test]
fn qptl_gradient_matches_finite_differences_away_from_active_set_changes() {
    let mut rng = rng(26);
    let mut probes = 0;
    let mut attempts = 0;
    while probes < PROBES {
        attempts += 1;
        assert!(attempts < 20 * PROBES, "too many degenerate draws");
        let p = if probes % 2 == 0 { random_knapsack(&mut rng, 5) } else { random_portfolio(&mut rng, 3) };
        let c = random_cost(&mut rng, &p);
        let x_star = p.solve(&c).unwrap().decision;
        let c_hat = random_cost(&mut rng, &p);
        let mu = rng.random_range(0.2..2.0);
        let kkt = qp_regularized_solve(&p, &c_hat, mu).unwrap();
        let degenerate = kkt
            .constraint_values
            .iter()
            .zip(&kkt.ineq_multipliers)
            .any(|(f, l)| f.abs() < 1e-4 && l.abs() < 1e-4);
        if degenerate {
            continue;
        }
        let v = uniform_vec(&mut rng, c.len(), -1.0, 1.0);
        let g = qptl_grad(&p, &c_hat, &c, &x_star, mu).unwrap().grad;
        let f = |x: &[f64]| qptl_grad(&p, x, &c, &x_star, mu).unwrap().loss;
        let fd = directional(&f, &c_hat, &v, 1e-5);
        assert!(rel_err(fd, dot(&g, &v), 1e-4) <= 1e-3, "{fd} vs {}", dot(&g, &v));
        probes += 1;
    }
}
