mod common;

use common::*;
use dflrb_core::attacks::{df_fgsm, fgsm_step, pf_fgsm, pf_fgsm_with, AttackConfig, AttackKind};
use dflrb_core::linalg::Matrix;
use dflrb_core::nn::{ModelKind, OutputActivation, PredictiveModel};
use dflrb_core::problem::{DecisionProblem, Knapsack};
use dflrb_core::surrogates::{mse_loss, Method, SurrogateConfig};
use proptest::prelude::*;

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn mse_input_grad(m: &PredictiveModel<f64>, z: &[f64], c: &[f64]) -> Vec<f64> {
    let up = mse_loss(&m.forward(z).unwrap(), c).unwrap().grad;
    m.backward(z, &up).unwrap().input
}

fn model_strategy() -> impl Strategy<Value = (u64, bool, bool)> {
    (any::<u64>(), any::<bool>(), any::<bool>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pf_shift_is_sign_of_gradient_times_epsilon(
        (seed, mlp, relu) in model_strategy(),
        eps in 0.0f64..0.5,
    ) {
        let mut r = rng(seed);
        let kind = if mlp { ModelKind::Mlp { hidden: 5 } } else { ModelKind::Linear };
        let act = if relu { OutputActivation::Relu } else { OutputActivation::None };
        let m = PredictiveModel::<f64>::new(kind, 4, 3, act, &mut r).unwrap();
        let z = uniform_vec(&mut r, 4, -2.0, 2.0);
        let c = uniform_vec(&mut r, 3, -2.0, 2.0);
        let adv = pf_fgsm(&m, &z, &c, eps).unwrap();
        let g = mse_input_grad(&m, &z, &c);
        for ((a, zi), gi) in adv.iter().zip(&z).zip(&g) {
            // the shift is exactly one of z − ε, z, z + ε
            prop_assert_eq!(*a, zi + eps * sign(*gi));
            prop_assert!((a - zi).abs() <= eps * (1.0 + 1e-15) + f64::EPSILON * zi.abs());
        }
    }

    #[test]
    fn fgsm_directions_do_not_depend_on_epsilon(
        seed in any::<u64>(),
        e1 in 1e-3f64..1.0,
        e2 in 1e-3f64..1.0,
    ) {
        let mut r = rng(seed);
        let z = uniform_vec(&mut r, 6, -1.0, 1.0);
        let mut g = uniform_vec(&mut r, 6, -1.0, 1.0);
        g[seed as usize % 6] = 0.0;
        let a = fgsm_step(&z, &g, e1, None).unwrap();
        let b = fgsm_step(&z, &g, e2, None).unwrap();
        for i in 0..6 {
            let da = (a[i] - z[i]) / e1;
            let db = (b[i] - z[i]) / e2;
            prop_assert!((da - db).abs() <= 1e-12 / e1.min(e2));
            prop_assert!(da == 0.0 || (da.abs() - 1.0).abs() < 1e-12 / e1);
        }
    }
}

#[test]
fn scalar_linear_example() {
    let m = PredictiveModel::linear(Matrix::from_rows(&[vec![1.0]]).unwrap(), vec![0.0], OutputActivation::None).unwrap();
    assert_eq!(mse_input_grad(&m, &[1.0], &[0.0]), vec![2.0]);
    for eps in [0.0, 0.01, 0.1, 0.15] {
        assert_eq!(pf_fgsm(&m, &[1.0], &[0.0], eps).unwrap(), vec![1.0 + eps]);
    }
}

#[test]
fn zero_weight_column_leaves_feature_unchanged() {
    let w = Matrix::from_rows(&[vec![1.0, 0.0, -2.0], vec![0.5, 0.0, 1.0]]).unwrap();
    let m = PredictiveModel::linear(w, vec![0.0; 2], OutputActivation::None).unwrap();
    let z = [0.3, 0.7, -0.2];
    let adv = pf_fgsm(&m, &z, &[1.0, -1.0], 0.1).unwrap();
    assert_eq!(adv[1], z[1]);
    assert_ne!(adv[0], z[0]);
}

#[test]
fn epsilon_sweep_is_colinear() {
    let mut r = rng(51);
    let m = PredictiveModel::<f64>::new(ModelKind::Mlp { hidden: 8 }, 5, 3, OutputActivation::None, &mut r).unwrap();
    let z = uniform_vec(&mut r, 5, -1.0, 1.0);
    let c = uniform_vec(&mut r, 3, -1.0, 1.0);
    let dirs: Vec<Vec<f64>> = [0.01, 0.1, 0.15]
        .iter()
        .map(|&e| pf_fgsm(&m, &z, &c, e).unwrap().iter().zip(&z).map(|(a, b)| ((a - b) / e).round()).collect())
        .collect();
    assert_eq!(dirs[0], dirs[1]);
    assert_eq!(dirs[1], dirs[2]);
}

#[test]
fn clamp_box_is_respected() {
    let m = PredictiveModel::linear(Matrix::from_rows(&[vec![1.0, -1.0]]).unwrap(), vec![0.0], OutputActivation::None).unwrap();
    let adv = pf_fgsm_with(&m, &[0.95, 0.02], &[0.0], 0.1, Some(&[(0.0, 1.0), (0.0, 1.0)])).unwrap();
    assert_eq!(adv, vec![1.0, 0.0]);
}

#[test]
fn attack_config_rejects_negative_epsilon() {
    assert!(AttackConfig::new(AttackKind::PredictionFocused, -0.1).is_err());
    assert!(AttackConfig::new(AttackKind::DecisionFocused, 0.0).is_ok());
}

#[test]
fn df_with_zero_surrogate_gradient_is_identity() {
    let mut r = rng(52);
    let p = random_knapsack(&mut r, 5);
    let m = PredictiveModel::<f64>::new(ModelKind::Linear, 4, 5, OutputActivation::None, &mut r).unwrap();
    let z = uniform_vec(&mut r, 4, -1.0, 1.0);
    // truth equal to the prediction makes MAP's gradient vanish
    let c = m.forward(&z).unwrap();
    let x_star = p.solve(&c).unwrap().decision;
    let cfg = SurrogateConfig::new(Method::Map);
    let adv = df_fgsm(&m, &p, &cfg, None, &z, &c, &x_star, 0.15, None, &mut r).unwrap();
    assert_eq!(adv, z);
}

#[test]
fn df_spo_matches_hand_composition() {
    let p = DecisionProblem::Knapsack(Knapsack::new(vec![3, 3], 3).unwrap());
    let w = Matrix::from_rows(&[vec![1.0, 2.0, -1.0], vec![2.0, -1.0, 0.5]]).unwrap();
    let m = PredictiveModel::linear(w.clone(), vec![0.0, 0.0], OutputActivation::None).unwrap();
    let z = [1.0, 1.0, 0.0];
    let c = [5.0, 3.0];
    // ĉ = Wz = [3, 1]; 2ĉ − c = [1, −1] picks item 0, so does c
    let c_hat = m.forward(&z).unwrap();
    assert_eq!(c_hat, vec![3.0, 1.0]);
    let x_star = enumerate_knapsack(&c, &[3, 3], 3);
    let shifted: Vec<f64> = c_hat.iter().zip(&c).map(|(h, t)| 2.0 * h - t).collect();
    let x_spo = enumerate_knapsack(&shifted, &[3, 3], 3);
    let g_hat: Vec<f64> = x_spo.iter().zip(&x_star).map(|(a, b)| 2.0 * (a - b)).collect();
    let g_z = w.tr_mul_vec(&g_hat);
    let expect: Vec<f64> = z.iter().zip(&g_z).map(|(zi, g)| zi + 0.1 * sign(*g)).collect();
    let cfg = SurrogateConfig::new(Method::SpoPlus);
    let got = df_fgsm(&m, &p, &cfg, None, &z, &c, &x_star, 0.1, None, &mut rng(0)).unwrap();
    assert_eq!(got, expect);

    // a prediction that ranks the items the wrong way gives a real push
    let z2 = [0.0, 0.0, 4.0];
    let c_hat2 = m.forward(&z2).unwrap();
    let shifted: Vec<f64> = c_hat2.iter().zip(&c).map(|(h, t)| 2.0 * h - t).collect();
    let x_spo = enumerate_knapsack(&shifted, &[3, 3], 3);
    let g_hat: Vec<f64> = x_spo.iter().zip(&x_star).map(|(a, b)| 2.0 * (a - b)).collect();
    assert!(g_hat.iter().any(|g| *g != 0.0));
    let g_z = w.tr_mul_vec(&g_hat);
    let expect: Vec<f64> = z2.iter().zip(&g_z).map(|(zi, g)| zi + 0.1 * sign(*g)).collect();
    let got = df_fgsm(&m, &p, &cfg, None, &z2, &c, &x_star, 0.1, None, &mut rng(0)).unwrap();
    assert_eq!(got, expect);
}

#[test]
fn df_is_rejected_for_two_stage() {
    let mut r = rng(53);
    let p = random_knapsack(&mut r, 3);
    let m = PredictiveModel::<f64>::new(ModelKind::Linear, 2, 3, OutputActivation::None, &mut r).unwrap();
    let cfg = SurrogateConfig::new(Method::TwoStageMse);
    let res = df_fgsm(&m, &p, &cfg, None, &[0.0, 0.0], &[1.0; 3], &[0.0; 3], 0.1, None, &mut r);
    assert!(res.is_err());
}

#[test]
fn first_order_damage_equals_epsilon_times_gradient_l1() {
    let mut r = rng(54);
    for _ in 0..100 {
        let m = PredictiveModel::<f64>::new(ModelKind::Linear, 5, 3, OutputActivation::None, &mut r).unwrap();
        let z = uniform_vec(&mut r, 5, -1.0, 1.0);
        let c = uniform_vec(&mut r, 3, -1.0, 1.0);
        let eps = 0.1;
        let adv = pf_fgsm(&m, &z, &c, eps).unwrap();
        let d: Vec<f64> = adv.iter().zip(&z).map(|(a, b)| a - b).collect();
        let g = mse_input_grad(&m, &z, &c);
        let loss = |t: f64| {
            let zt: Vec<f64> = z.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            mse_loss(&m.forward(&zt).unwrap(), &c).unwrap().loss
        };
        let h = 1e-5;
        let fd = (loss(h) - loss(-h)) / (2.0 * h);
        let l1: f64 = g.iter().map(|v| v.abs()).sum();
        assert!(fd >= 0.0);
        assert!(rel_err(fd, eps * l1, 1e-8) <= 1e-6, "{fd} vs {}", eps * l1);
    }
}
