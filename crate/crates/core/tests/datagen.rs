use dflrb_core::datagen::gridsp::{COST_MAX, COST_MIN};
use dflrb_core::datagen::knapsack::WEIGHT_CHOICES;
use dflrb_core::datagen::portfolio::{conditional_mean, covariance, sample_factors};
use dflrb_core::datagen::*;
use dflrb_core::problem::{DecisionProblem, Knapsack};
use nalgebra::DMatrix;

fn portfolio_parts(g: &Generated<f64>) -> (Vec<Vec<f64>>, usize) {
    match &g.problem {
        DecisionProblem::Portfolio(p) => {
            let s = p.covariance();
            let rows = (0..s.rows()).map(|i| s.row(i).to_vec()).collect();
            (rows, s.rows())
        }
        _ => unreachable!(),
    }
}

#[test]
fn portfolio_noise_covariance_matches_model() {
    let cfg = PortfolioGenConfig {
        n_samples: 10_000,
        seed: 11,
        ..Default::default()
    };
    let g = gen_portfolio::<f64>(&cfg).unwrap();
    // the factors are the first draws of the stream
    let factors = sample_factors::<f64, _>(cfg.d, cfg.p, cfg.eta, &mut dflrb_core::rng::seeded(cfg.seed));
    let expect = covariance(&factors.l, cfg.eta);
    let (sigma, d) = portfolio_parts(&g);
    for i in 0..d {
        assert_eq!(sigma[i], expect.row(i).to_vec());
    }

    let noise: Vec<Vec<f64>> = g
        .instances
        .iter()
        .map(|inst| {
            let mean = conditional_mean(&factors.b, &inst.features, cfg.deg);
            inst.true_cost.iter().zip(mean).map(|(c, m)| c - m).collect()
        })
        .collect();
    let n = noise.len() as f64;
    let mu: Vec<f64> = (0..d).map(|j| noise.iter().map(|v| v[j]).sum::<f64>() / n).collect();
    let mut err = 0.0;
    let mut norm = 0.0;
    for i in 0..d {
        for j in 0..d {
            let cov = noise.iter().map(|v| (v[i] - mu[i]) * (v[j] - mu[j])).sum::<f64>() / (n - 1.0);
            err += (cov - sigma[i][j]).powi(2);
            norm += sigma[i][j].powi(2);
        }
    }
    let rel = (err / norm).sqrt();
    assert!(rel <= 0.15, "Frobenius relative error {rel}");
}

#[test]
fn portfolio_covariance_is_well_conditioned() {
    for seed in 0..10 {
        for deg in [1, 16] {
            let cfg = PortfolioGenConfig { n_samples: 2, deg, seed, ..Default::default() };
            let g = gen_portfolio::<f64>(&cfg).unwrap();
            let (sigma, d) = portfolio_parts(&g);
            let m = DMatrix::from_fn(d, d, |i, j| sigma[i][j]);
            let min_eig = m.symmetric_eigenvalues().min();
            assert!(min_eig >= 1e-4 * (1.0 - 1e-9), "{min_eig}");
            if let DecisionProblem::Portfolio(p) = &g.problem {
                assert!(p.risk_bound() > 0.0);
            }
        }
    }
}

#[test]
fn portfolio_rejects_zero_noise() {
    let cfg = PortfolioGenConfig { eta: 0.0, ..Default::default() };
    assert!(gen_portfolio::<f64>(&cfg).is_err());
}

fn weights(g: &Generated<f64>) -> &Knapsack {
    match &g.problem {
        DecisionProblem::Knapsack(k) => k,
        _ => unreachable!(),
    }
}

#[test]
fn knapsack_weights_are_fixed_per_dataset() {
    for seed in 0..5 {
        let cfg = KnapsackGenConfig { n_days: 20, seed, ..Default::default() };
        let g = gen_knapsack::<f64>(&cfg).unwrap();
        let k = weights(&g);
        assert_eq!(k.len(), 48);
        assert_eq!(k.weights().iter().sum::<u32>(), 240);
        assert!(k.weights().iter().all(|w| WEIGHT_CHOICES.contains(w)));
        // instances carry no weights of their own; the same problem solves every day
        for cap in [60, 120] {
            let p = DecisionProblem::Knapsack(Knapsack::new(k.weights().to_vec(), cap).unwrap());
            for inst in &g.instances {
                let x = p.solve(&inst.true_cost).unwrap().decision;
                assert!(p.is_feasible(&x));
            }
        }
        let again = gen_knapsack::<f64>(&cfg).unwrap();
        assert_eq!(g, again);
    }
}

#[test]
fn knapsack_value_noise_has_variance_25() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flat.csv");
    let days = 210;
    let mut csv = String::from("f1,f2,f3,f4,f5,f6,f7,f8,price\n");
    for _ in 0..days * 48 {
        csv.push_str("0,0,0,0,0,0,0,0,1\n");
    }
    std::fs::write(&path, csv).unwrap();
    let cfg = KnapsackGenConfig {
        seed: 3,
        source: KnapsackSource::CsvFile(path),
        ..Default::default()
    };
    let g = gen_knapsack::<f64>(&cfg).unwrap();
    let w = weights(&g).weights().to_vec();
    // at unit price the noise is value − weight
    let noise: Vec<f64> = g
        .instances
        .iter()
        .flat_map(|inst| inst.true_cost.iter().zip(&w).map(|(v, &wi)| v - wi as f64).collect::<Vec<_>>())
        .collect();
    assert!(noise.len() >= 10_000);
    let n = noise.len() as f64;
    let mean = noise.iter().sum::<f64>() / n;
    let var = noise.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((var - 25.0).abs() <= 2.5, "variance {var}");
}

#[test]
fn gridsp_costs_stay_in_range_and_reproduce() {
    let cfg = GridSpGenConfig { n_samples: 50, side: 6, feature_dim: 5, seed: 4 };
    let g = gen_gridsp::<f64>(&cfg).unwrap();
    assert_eq!(g.instances.len(), 50);
    for inst in &g.instances {
        assert_eq!(inst.features.len(), 36 * 5);
        assert!(inst.true_cost.iter().all(|&c| (COST_MIN..=COST_MAX).contains(&c)));
    }
    assert_eq!(g, gen_gridsp::<f64>(&cfg).unwrap());
    let other = gen_gridsp::<f64>(&GridSpGenConfig { seed: 5, ..cfg }).unwrap();
    assert_ne!(g.instances[0].true_cost, other.instances[0].true_cost);
}

#[test]
fn equal_costs_give_the_tie_break_path() {
    let g = gen_gridsp::<f64>(&GridSpGenConfig { n_samples: 1, side: 5, feature_dim: 3, seed: 0 }).unwrap();
    let flat = vec![2.0; 25];
    let a = g.problem.solve(&flat).unwrap().decision;
    let b = g.problem.solve(&flat).unwrap().decision;
    assert_eq!(a, b);
    // with diagonal moves the straight diagonal is the unique cheapest route
    assert_eq!(a.iter().sum::<f64>(), 5.0);
}

#[test]
fn splits_partition_the_instances() {
    let g = gen_gridsp::<f64>(&GridSpGenConfig { n_samples: 40, side: 4, feature_dim: 2, seed: 1 }).unwrap();
    let s = g.split([0.6, 0.2, 0.2], 9).unwrap();
    assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (24, 8, 8));
    let mut seen: Vec<Vec<u64>> = s
        .train
        .instances
        .iter()
        .chain(&s.validation.instances)
        .chain(&s.test.instances)
        .map(|i| i.features.iter().map(|v| v.to_bits()).collect())
        .collect();
    seen.sort();
    seen.dedup();
    assert_eq!(seen.len(), 40);
}

#[test]
fn jsonl_round_trip_preserves_instances() {
    let g = gen_knapsack::<f64>(&KnapsackGenConfig { n_days: 3, seed: 2, ..Default::default() }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.jsonl");
    write_jsonl(&path, &g.instances).unwrap();
    let back = read_jsonl::<f64>(&path, &g.problem).unwrap();
    assert_eq!(back, g.instances);
}
