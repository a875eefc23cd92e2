mod common;

use common::*;
use dflrb_core::attacks::pf_fgsm;
use dflrb_core::metrics::*;
use dflrb_core::nn::{ModelKind, OutputActivation, PredictiveModel};
use dflrb_core::problem::{DecisionProblem, Knapsack};
use dflrb_core::Error;
use proptest::prelude::*;

fn two_item() -> DecisionProblem<f64> {
    DecisionProblem::Knapsack(Knapsack::new(vec![3, 3], 3).unwrap())
}

#[test]
fn hand_values() {
    assert_eq!(mae(&[vec![1.0, 3.0]], &[vec![0.0, 0.0]], Norm::L1).unwrap(), 4.0);
    assert_eq!(mae(&[vec![1.0, 3.0]], &[vec![1.0, 3.0]], Norm::L1).unwrap(), 0.0);
    assert_eq!(fe(&[vec![1.0, 3.0]], &[vec![0.0, 0.0]], Norm::Inf).unwrap(), 3.0);
    assert_eq!(fe(&[vec![3.0, 4.0]], &[vec![0.0, 0.0]], Norm::L2).unwrap(), 5.0);

    // optimum picks the value-5 item; choosing the value-3 one loses 2
    let p = two_item();
    let (c, x_star, x_bad) = ([5.0, 3.0], [1.0, 0.0], [0.0, 1.0]);
    assert_eq!(abs_re(&p, &c, &x_bad, &x_star).unwrap(), 2.0);
    assert_eq!(abs_re(&p, &c, &x_star, &x_star).unwrap(), 0.0);
    assert_eq!(rre(&p, &c, &x_bad, &x_star, RRE_DENOMINATOR_TOL).unwrap(), 0.4);
    assert_eq!(rre(&p, &c, &x_star, &x_star, RRE_DENOMINATOR_TOL).unwrap(), 0.0);
    assert_eq!(frre(&p, &c, &x_bad, &x_star, &x_star, RRE_DENOMINATOR_TOL).unwrap(), 0.4);
    assert_eq!(abs_fre(&p, &c, &x_bad, &x_star, &x_star).unwrap(), 2.0);
}

#[test]
fn frre_hand_arithmetic_and_symmetry() {
    // values 10, 6, 9 with unit weights and room for one item
    let p = DecisionProblem::Knapsack(Knapsack::new(vec![1, 1, 1], 1).unwrap());
    let c = [10.0, 6.0, 9.0];
    let (star, adv, clean) = ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]);
    let f: f64 = frre(&p, &c, &adv, &clean, &star, RRE_DENOMINATOR_TOL).unwrap();
    assert!((f - 0.3).abs() < 1e-15);
    assert_eq!(f, frre(&p, &c, &clean, &adv, &star, RRE_DENOMINATOR_TOL).unwrap());
}

#[test]
fn zero_denominator_is_an_error() {
    let mut r = rng(61);
    let p = random_portfolio(&mut r, 3);
    let c = [-0.1, -0.2, -0.05];
    let x = p.solve(&c).unwrap().decision;
    assert!(x.iter().all(|&v| v == 0.0));
    assert!(matches!(
        rre(&p, &c, &x, &x, RRE_DENOMINATOR_TOL),
        Err(Error::UndefinedRelativeRegret { .. })
    ));
    assert_eq!(abs_re(&p, &c, &x, &x).unwrap(), 0.0);
}

/// `max_{s ∈ {±1}^n} ‖W s‖₁` by enumeration.
fn induced_inf_to_one(m: &PredictiveModel<f64>) -> f64 {
    let w = &m.layers[0].weight;
    let n = w.cols();
    (0u32..1 << n)
        .map(|mask| {
            let s: Vec<f64> = (0..n).map(|j| if mask >> j & 1 == 1 { 1.0 } else { -1.0 }).collect();
            w.mul_vec(&s).iter().map(|v| v.abs()).sum::<f64>()
        })
        .fold(0.0, f64::max)
}

#[test]
fn linear_fooling_error_is_bounded_by_the_operator_norm() {
    let mut r = rng(62);
    for _ in 0..50 {
        let m = PredictiveModel::<f64>::new(ModelKind::Linear, 6, 4, OutputActivation::None, &mut r).unwrap();
        let eps = 0.15;
        let zs: Vec<Vec<f64>> = (0..20).map(|_| uniform_vec(&mut r, 6, -1.0, 1.0)).collect();
        let cs: Vec<Vec<f64>> = (0..20).map(|_| uniform_vec(&mut r, 4, -1.0, 1.0)).collect();
        let clean: Vec<Vec<f64>> = zs.iter().map(|z| m.forward(z).unwrap()).collect();
        let adv: Vec<Vec<f64>> = zs
            .iter()
            .zip(&cs)
            .map(|(z, c)| m.forward(&pf_fgsm(&m, z, c, eps).unwrap()).unwrap())
            .collect();
        let bound = eps * induced_inf_to_one(&m);
        assert!(fe(&adv, &clean, Norm::L1).unwrap() <= bound * (1.0 + 1e-12));
    }
}

#[test]
fn zero_epsilon_gives_exactly_zero_fooling() {
    let mut r = rng(63);
    for p in all_kinds(&mut r) {
        let m = PredictiveModel::<f64>::new(ModelKind::Mlp { hidden: 4 }, 3, p.cost_dim(), OutputActivation::Relu, &mut r).unwrap();
        let z = uniform_vec(&mut r, 3, -1.0, 1.0);
        let c = random_cost(&mut r, &p);
        let x_star = p.solve(&c).unwrap().decision;
        let adv_z = pf_fgsm(&m, &z, &c, 0.0).unwrap();
        let (clean, adv) = (m.forward(&z).unwrap(), m.forward(&adv_z).unwrap());
        assert_eq!(fe(std::slice::from_ref(&adv), std::slice::from_ref(&clean), Norm::L1).unwrap(), 0.0);
        let x_clean = p.solve(&clean).unwrap().decision;
        let x_adv = p.solve(&adv).unwrap().decision;
        assert_eq!(frre(&p, &c, &x_adv, &x_clean, &x_star, RRE_DENOMINATOR_TOL).unwrap(), 0.0);
        assert_eq!(abs_fre(&p, &c, &x_adv, &x_clean, &x_star).unwrap(), 0.0);
    }
}

proptest! {
    #[test]
    fn relative_regret_times_denominator_is_absolute_regret(seed in any::<u64>(), kind in 0usize..3) {
        let mut r = rng(seed);
        let kinds = all_kinds(&mut r);
        let p = &kinds[kind];
        let c = random_cost(&mut r, p);
        let c_hat = random_cost(&mut r, p);
        let x_star = p.solve(&c).unwrap().decision;
        let x_hat = p.solve(&c_hat).unwrap().decision;
        let den = dot(&c, &x_star).abs();
        prop_assume!(den > RRE_DENOMINATOR_TOL);
        let a = abs_re(p, &c, &x_hat, &x_star).unwrap();
        let rel = rre(p, &c, &x_hat, &x_star, RRE_DENOMINATOR_TOL).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert!((rel * den - a).abs() <= 1e-12 * (1.0 + a));
    }

    #[test]
    fn norms_are_nonnegative_and_ordered(v in proptest::collection::vec(-10.0f64..10.0, 1..12)) {
        let (l1, l2, li) = (Norm::L1.apply(v.iter().copied()), Norm::L2.apply(v.iter().copied()), Norm::Inf.apply(v.iter().copied()));
        prop_assert!(li >= 0.0);
        prop_assert!(li <= l2 * (1.0 + 1e-12) && l2 <= l1 * (1.0 + 1e-12));
    }
}
