//! Aggregation of attack reports into per-trial rows, across-trial summaries
//! and the rank correlations between clean regret and attack damage.

use std::collections::BTreeMap;
use std::path::Path;

use dflrb_core::attacks::AttackKind;
use dflrb_core::surrogates::Method;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::presets::ProblemPreset;
use crate::sweep::TrialResult;

/// One aggregate over a trial's test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub problem: ProblemPreset,
    pub method: Method,
    pub attack: AttackKind,
    pub epsilon: f64,
    pub trial: usize,
    pub metric: String,
    pub value: f64,
}

/// Regret metric names: relative when every test instance has a usable
/// denominator, absolute otherwise.
pub fn regret_metric_names(relative: bool) -> (&'static str, &'static str) {
    if relative {
        ("rre", "frre")
    } else {
        ("abs_re", "abs_fre")
    }
}

/// Metric order within each (trial, attack, ε) group.
pub fn metric_names(relative: bool) -> [&'static str; 5] {
    let (r, f) = regret_metric_names(relative);
    ["mae", "fe", r, f, "mse"]
}

fn uses_relative_regret(trials: &[TrialResult]) -> bool {
    trials
        .iter()
        .flat_map(|t| &t.report.cells)
        .filter_map(|c| c.metrics())
        .all(|m| m.rre_clean.is_some() && m.rre_adv.is_some())
}

/// Per-trial means of each metric. Rows follow trial order, then attack,
/// then ε ascending, then the fixed metric order. Groups whose cells all
/// failed produce no rows.
pub fn trial_rows(problem: ProblemPreset, trials: &[TrialResult]) -> Vec<ResultRow> {
    let relative = uses_relative_regret(trials);
    let names = metric_names(relative);
    let mut rows = Vec::new();
    for t in trials {
        // cells are already attack-major, ε ascending
        let mut groups: Vec<((AttackKind, f64), Vec<[f64; 5]>)> = Vec::new();
        for cell in &t.report.cells {
            let Some(m) = cell.metrics() else { continue };
            let (reg, fool) = if relative {
                let (a, c) = (m.rre_adv.unwrap_or(f64::NAN), m.rre_clean.unwrap_or(f64::NAN));
                (a, (a - c).abs())
            } else {
                (m.regret_adv, (m.regret_adv - m.regret_clean).abs())
            };
            let v = [m.mae, m.fe, reg, fool, m.mse_adv];
            let key = (cell.attack, cell.epsilon);
            match groups.last_mut() {
                Some((k, vs)) if *k == key => vs.push(v),
                _ => groups.push((key, vec![v])),
            }
        }
        for ((attack, epsilon), vs) in groups {
            for (j, name) in names.iter().enumerate() {
                let value = vs.iter().map(|v| v[j]).sum::<f64>() / vs.len() as f64;
                rows.push(ResultRow {
                    problem,
                    method: t.method,
                    attack,
                    epsilon,
                    trial: t.trial,
                    metric: (*name).to_string(),
                    value,
                });
            }
        }
    }
    rows
}

pub fn write_rows(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Distribution of one metric across trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub problem: ProblemPreset,
    pub method: Method,
    pub attack: AttackKind,
    pub epsilon: f64,
    pub metric: String,
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single trial.
    pub std: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// (problem, method, attack, ε bits, metric rank)
type GroupKey = (ProblemPreset, usize, usize, u64, usize);

fn method_index(m: Method) -> usize {
    Method::ALL.iter().position(|&x| x == m).unwrap_or(usize::MAX)
}

fn attack_index(a: AttackKind) -> usize {
    match a {
        AttackKind::PredictionFocused => 0,
        AttackKind::DecisionFocused => 1,
    }
}

/// Summaries in problem, method, attack, ε and first-seen metric order.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut metric_rank: Vec<&str> = Vec::new();
    for r in rows {
        if !metric_rank.contains(&r.metric.as_str()) {
            metric_rank.push(&r.metric);
        }
    }
    let mut groups: BTreeMap<GroupKey, (&ResultRow, Vec<f64>)> = BTreeMap::new();
    for r in rows {
        let key: GroupKey = (
            r.problem,
            method_index(r.method),
            attack_index(r.attack),
            // ε ≥ 0, so bit order is numeric order
            r.epsilon.to_bits(),
            metric_rank.iter().position(|m| *m == r.metric).unwrap_or(0),
        );
        groups.entry(key).or_insert((r, Vec::new())).1.push(r.value);
    }
    groups
        .into_values()
        .map(|(r, mut v)| {
            let n = v.len();
            let mean = v.iter().sum::<f64>() / n as f64;
            let std = if n > 1 {
                (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            v.sort_by(f64::total_cmp);
            SummaryRow {
                problem: r.problem,
                method: r.method,
                attack: r.attack,
                epsilon: r.epsilon,
                metric: r.metric.clone(),
                n,
                mean,
                std,
                min: v[0],
                q1: quantile(&v, 0.25),
                median: quantile(&v, 0.5),
                q3: quantile(&v, 0.75),
                max: v[n - 1],
            }
        })
        .collect()
}

#[derive(Serialize)]
struct LineRow<'a> {
    problem: ProblemPreset,
    method: Method,
    attack: AttackKind,
    epsilon: f64,
    metric: &'a str,
    mean: f64,
    std: f64,
}

#[derive(Serialize)]
struct BoxRow<'a> {
    problem: ProblemPreset,
    method: Method,
    attack: AttackKind,
    epsilon: f64,
    metric: &'a str,
    n: usize,
    min: f64,
    q1: f64,
    median: f64,
    q3: f64,
    max: f64,
}

/// Metric-versus-ε means, one line per (method, attack, metric).
pub fn write_lineplot(path: &Path, summary: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for s in summary {
        w.serialize(LineRow {
            problem: s.problem,
            method: s.method,
            attack: s.attack,
            epsilon: s.epsilon,
            metric: &s.metric,
            mean: s.mean,
            std: s.std,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Five-number summaries of the per-trial distribution.
pub fn write_boxplot(path: &Path, summary: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for s in summary {
        w.serialize(BoxRow {
            problem: s.problem,
            method: s.method,
            attack: s.attack,
            epsilon: s.epsilon,
            metric: &s.metric,
            n: s.n,
            min: s.min,
            q1: s.q1,
            median: s.median,
            q3: s.q3,
            max: s.max,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Ranks with ties sharing their average rank, starting at 1.
fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's ρ: Pearson correlation of average ranks. `None` with fewer
/// than two points or a constant input.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Rank correlation, across methods, between clean regret and the regret
/// increase at the largest ε under one attack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationCorrelation {
    pub attack: AttackKind,
    pub metric: String,
    pub epsilon: f64,
    pub methods: Vec<Method>,
    pub clean: Vec<f64>,
    pub degradation: Vec<f64>,
    pub spearman: Option<f64>,
}

pub fn degradation_correlations(summary: &[SummaryRow]) -> Vec<DegradationCorrelation> {
    let regret = summary
        .iter()
        .map(|s| s.metric.as_str())
        .find(|m| *m == "rre" || *m == "abs_re");
    let Some(regret) = regret else { return Vec::new() };
    let mean_at = |m: Method, a: AttackKind, e: f64| {
        summary
            .iter()
            .find(|s| s.method == m && s.attack == a && s.epsilon == e && s.metric == regret)
            .map(|s| s.mean)
    };
    let mut out = Vec::new();
    for attack in [AttackKind::PredictionFocused, AttackKind::DecisionFocused] {
        let rows: Vec<&SummaryRow> = summary
            .iter()
            .filter(|s| s.attack == attack && s.metric == regret)
            .collect();
        let Some(eps) = rows.iter().map(|s| s.epsilon).max_by(f64::total_cmp) else {
            continue;
        };
        let mut methods = Vec::new();
        let (mut clean, mut degradation) = (Vec::new(), Vec::new());
        for m in Method::ALL {
            if let (Some(c), Some(d)) = (mean_at(m, attack, 0.0), mean_at(m, attack, eps)) {
                methods.push(m);
                clean.push(c);
                degradation.push(d - c);
            }
        }
        let spearman = spearman(&clean, &degradation);
        out.push(DegradationCorrelation {
            attack,
            metric: regret.to_string(),
            epsilon: eps,
            methods,
            clean,
            degradation,
            spearman,
        });
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FailureCounts {
    /// Trials whose training aborted.
    pub trials: usize,
    /// Attack cells that recorded an error.
    pub cells: usize,
    /// Distinct error messages with their counts.
    pub messages: BTreeMap<String, usize>,
}

pub fn failure_counts(trials: &[TrialResult]) -> FailureCounts {
    let mut f = FailureCounts::default();
    for t in trials {
        if let Some(e) = &t.error {
            f.trials += 1;
            *f.messages.entry(e.clone()).or_default() += 1;
        }
        for c in &t.report.cells {
            if let crate::sweep::CellOutcome::Failed { error } = &c.outcome {
                f.cells += 1;
                *f.messages.entry(error.clone()).or_default() += 1;
            }
        }
    }
    f
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub groups: Vec<SummaryRow>,
    pub correlations: Vec<DegradationCorrelation>,
    /// Absent when summarizing from a results file alone.
    pub failures: Option<FailureCounts>,
}

pub fn build_summary(rows: &[ResultRow], failures: Option<FailureCounts>) -> Summary {
    let groups = summarize(rows);
    let correlations = degradation_correlations(&groups);
    Summary {
        groups,
        correlations,
        failures,
    }
}

/// Writes every report artifact for `rows` into `dir`.
pub fn write_all(dir: &Path, rows: &[ResultRow], failures: Option<FailureCounts>) -> Result<Summary> {
    std::fs::create_dir_all(dir)?;
    write_rows(&dir.join("results.csv"), rows)?;
    let summary = build_summary(rows, failures);
    write_lineplot(&dir.join("lineplot.csv"), &summary.groups)?;
    write_boxplot(&dir.join("boxplot.csv"), &summary.groups)?;
    std::fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    crate::plot::write_line_plots(dir, &summary.groups)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: Method, attack: AttackKind, epsilon: f64, trial: usize, metric: &str, value: f64) -> ResultRow {
        ResultRow {
            problem: ProblemPreset::Knapsack120,
            method,
            attack,
            epsilon,
            trial,
            metric: metric.into(),
            value,
        }
    }

    #[test]
    fn summary_mean_matches_hand_average() {
        let pf = AttackKind::PredictionFocused;
        let rows: Vec<_> = [3.0, 1.0, 4.0, 1.0, 5.0]
            .iter()
            .enumerate()
            .map(|(t, &v)| row(Method::Dbb, pf, 0.1, t, "mae", v))
            .collect();
        let s = summarize(&rows);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].mean, 14.0 / 5.0);
        assert_eq!((s[0].min, s[0].q1, s[0].median, s[0].q3, s[0].max), (1.0, 1.0, 3.0, 4.0, 5.0));
        let var = [3.0f64, 1.0, 4.0, 1.0, 5.0].iter().map(|v| (v - 2.8).powi(2)).sum::<f64>() / 4.0;
        assert!((s[0].std - var.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn spearman_known_values() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        // d² = (0, 1, 1, 0) gives 1 − 6·2/(4·15) = 0.8
        let r = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.8).abs() < 1e-12);
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]), None);
        assert_eq!(average_ranks(&[5.0, 1.0, 5.0]), vec![2.5, 1.0, 2.5]);
    }

    #[test]
    fn summary_order_is_canonical() {
        let (pf, df) = (AttackKind::PredictionFocused, AttackKind::DecisionFocused);
        let rows = vec![
            row(Method::Map, df, 0.1, 0, "mae", 1.0),
            row(Method::SpoPlus, pf, 0.1, 0, "fe", 1.0),
            row(Method::SpoPlus, pf, 0.0, 0, "mae", 1.0),
            row(Method::SpoPlus, pf, 0.1, 0, "mae", 1.0),
        ];
        let s = summarize(&rows);
        let keys: Vec<_> = s.iter().map(|r| (r.method, r.attack, r.epsilon, r.metric.as_str())).collect();
        assert_eq!(
            keys,
            vec![
                (Method::SpoPlus, pf, 0.0, "mae"),
                (Method::SpoPlus, pf, 0.1, "mae"),
                (Method::SpoPlus, pf, 0.1, "fe"),
                (Method::Map, df, 0.1, "mae"),
            ]
        );
    }

    #[test]
    fn rows_round_trip_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let rows = vec![row(Method::Listwise, AttackKind::DecisionFocused, 0.15, 3, "abs_fre", 0.1 + 0.2)];
        write_rows(&p, &rows).unwrap();
        assert_eq!(read_rows(&p).unwrap(), rows);
        let header = std::fs::read_to_string(&p).unwrap();
        assert!(header.starts_with("problem,method,attack,epsilon,trial,metric,value\n"));
    }
}
