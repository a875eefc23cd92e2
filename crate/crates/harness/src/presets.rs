//! Tuned learning rates and surrogate hyperparameters per problem setting.
//!
//! A method is available on a problem exactly when the registry holds a row
//! for it; the shortest-path settings carry no QPTL row.

use std::fmt;
use std::str::FromStr;

use dflrb_core::surrogates::{Method, SurrogateConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProblemPreset {
    #[serde(rename = "knapsack-60")]
    Knapsack60,
    #[serde(rename = "knapsack-120")]
    Knapsack120,
    #[serde(rename = "portfolio-deg1")]
    PortfolioDeg1,
    #[serde(rename = "portfolio-deg16")]
    PortfolioDeg16,
    #[serde(rename = "gridsp-12")]
    GridSp12,
    #[serde(rename = "gridsp-24")]
    GridSp24,
}

impl ProblemPreset {
    pub const ALL: [ProblemPreset; 6] = [
        ProblemPreset::Knapsack60,
        ProblemPreset::Knapsack120,
        ProblemPreset::PortfolioDeg1,
        ProblemPreset::PortfolioDeg16,
        ProblemPreset::GridSp12,
        ProblemPreset::GridSp24,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemPreset::Knapsack60 => "knapsack-60",
            ProblemPreset::Knapsack120 => "knapsack-120",
            ProblemPreset::PortfolioDeg1 => "portfolio-deg1",
            ProblemPreset::PortfolioDeg16 => "portfolio-deg16",
            ProblemPreset::GridSp12 => "gridsp-12",
            ProblemPreset::GridSp24 => "gridsp-24",
        }
    }
}

impl fmt::Display for ProblemPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemPreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        ProblemPreset::ALL
            .into_iter()
            .find(|p| p.name() == key)
            .ok_or_else(|| {
                let names: Vec<_> = ProblemPreset::ALL.iter().map(|p| p.name()).collect();
                format!("unknown problem '{s}' (expected one of {})", names.join(", "))
            })
    }
}

/// One registry cell: learning rate plus the method's own parameters, in
/// the order the method lists them after `lr`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetRow {
    pub problem: ProblemPreset,
    pub method: Method,
    pub lr: f64,
    pub params: &'static [f64],
}

const fn row(problem: ProblemPreset, method: Method, lr: f64, params: &'static [f64]) -> PresetRow {
    PresetRow {
        problem,
        method,
        lr,
        params,
    }
}

use Method::*;
use ProblemPreset::*;

/// Parameter order: DBB (λ); IMLE (λ, ε, κ); FY (ε); QPTL (μ);
/// Listwise (τ); Pairwise (Θ).
pub const REGISTRY: &[PresetRow] = &[
    row(Knapsack60, TwoStageMse, 0.5, &[]),
    row(Knapsack60, SpoPlus, 0.5, &[]),
    row(Knapsack60, Dbb, 0.5, &[0.1]),
    row(Knapsack60, Imle, 0.5, &[0.1, 0.5, 5.0]),
    row(Knapsack60, Fy, 1.0, &[0.005]),
    row(Knapsack60, Qptl, 0.5, &[10.0]),
    row(Knapsack60, Listwise, 1.0, &[0.001]),
    row(Knapsack60, Pairwise, 0.5, &[10.0]),
    row(Knapsack60, PairwiseDiff, 1.0, &[]),
    row(Knapsack60, Map, 1.0, &[]),
    row(Knapsack120, TwoStageMse, 1.0, &[]),
    row(Knapsack120, SpoPlus, 1.0, &[]),
    row(Knapsack120, Dbb, 1.0, &[1.0]),
    row(Knapsack120, Imle, 0.5, &[0.1, 0.1, 5.0]),
    row(Knapsack120, Fy, 1.0, &[0.5]),
    row(Knapsack120, Qptl, 0.5, &[1.0]),
    row(Knapsack120, Listwise, 1.0, &[0.001]),
    row(Knapsack120, Pairwise, 0.5, &[10.0]),
    row(Knapsack120, PairwiseDiff, 1.0, &[]),
    row(Knapsack120, Map, 1.0, &[]),
    row(GridSp12, TwoStageMse, 0.001, &[]),
    row(GridSp12, SpoPlus, 0.005, &[]),
    row(GridSp12, Dbb, 0.001, &[10.0]),
    row(GridSp12, Imle, 0.001, &[10.0, 0.05, 50.0]),
    row(GridSp12, Fy, 0.01, &[0.01]),
    row(GridSp12, Listwise, 0.005, &[0.5]),
    row(GridSp12, Pairwise, 0.01, &[0.1]),
    row(GridSp12, PairwiseDiff, 0.005, &[]),
    row(GridSp12, Map, 0.005, &[]),
    row(GridSp24, TwoStageMse, 0.001, &[]),
    row(GridSp24, SpoPlus, 0.005, &[]),
    row(GridSp24, Dbb, 0.001, &[100.0]),
    row(GridSp24, Imle, 0.001, &[10.0, 0.05, 50.0]),
    row(GridSp24, Fy, 0.01, &[0.01]),
    row(GridSp24, Listwise, 0.005, &[0.5]),
    row(GridSp24, Pairwise, 0.01, &[0.1]),
    row(GridSp24, PairwiseDiff, 0.005, &[]),
    row(GridSp24, Map, 0.005, &[]),
    row(PortfolioDeg1, TwoStageMse, 0.01, &[]),
    row(PortfolioDeg1, SpoPlus, 0.5, &[]),
    row(PortfolioDeg1, Dbb, 1.0, &[0.1]),
    row(PortfolioDeg1, Imle, 0.5, &[0.1, 0.1, 5.0]),
    row(PortfolioDeg1, Fy, 0.1, &[0.01]),
    row(PortfolioDeg1, Qptl, 0.1, &[10.0]),
    row(PortfolioDeg1, Listwise, 0.1, &[0.01]),
    row(PortfolioDeg1, Pairwise, 0.01, &[0.01]),
    row(PortfolioDeg1, PairwiseDiff, 0.1, &[]),
    row(PortfolioDeg1, Map, 0.01, &[]),
    row(PortfolioDeg16, TwoStageMse, 0.05, &[]),
    row(PortfolioDeg16, SpoPlus, 0.5, &[]),
    row(PortfolioDeg16, Dbb, 1.0, &[0.1]),
    row(PortfolioDeg16, Imle, 0.5, &[0.1, 0.05, 5.0]),
    row(PortfolioDeg16, Fy, 1.0, &[2.0]),
    row(PortfolioDeg16, Qptl, 0.05, &[10.0]),
    row(PortfolioDeg16, Listwise, 0.05, &[0.005]),
    row(PortfolioDeg16, Pairwise, 0.1, &[0.05]),
    row(PortfolioDeg16, PairwiseDiff, 0.05, &[]),
    row(PortfolioDeg16, Map, 1.0, &[]),
];

pub fn lookup(problem: ProblemPreset, method: Method) -> Option<&'static PresetRow> {
    REGISTRY
        .iter()
        .find(|r| r.problem == problem && r.method == method)
}

/// Methods with a registry row for `problem`, in canonical method order.
pub fn available_methods(problem: ProblemPreset) -> Vec<Method> {
    Method::ALL
        .into_iter()
        .filter(|&m| lookup(problem, m).is_some())
        .collect()
}

impl PresetRow {
    /// Surrogate settings for this row; unspecified fields keep defaults.
    pub fn surrogate(&self) -> SurrogateConfig {
        let mut s = SurrogateConfig::new(self.method);
        let p = self.params;
        match self.method {
            Dbb => s.dbb_lambda = p[0],
            Imle => {
                s.imle_lambda = p[0];
                s.imle_eps = p[1];
                s.imle_kappa = p[2] as usize;
            }
            Fy => s.fy_eps = p[0],
            Qptl => s.qptl_mu = p[0],
            Listwise => s.listwise_tau = p[0],
            Pairwise => s.pairwise_theta = p[0],
            TwoStageMse | SpoPlus | Map | PairwiseDiff => {}
        }
        s
    }
}
