//! Command-line front end. Settings resolve as preset, then config file,
//! then flags.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use dflrb_core::datagen::write_jsonl;
use dflrb_core::nn::PredictiveModel;
use dflrb_core::surrogates::{Method, SolutionCache};
use serde::{Deserialize, Serialize};

use crate::config::{experiment_preset, overlay_file, preset_names, ExperimentConfig, MethodSettings};
use crate::data;
use crate::error::{HarnessError, Result};
use crate::presets::ProblemPreset;
use crate::report;
use crate::sweep::{self, AttackContext, TrialResult};
use crate::train::{train, EpochStats, TrainOptions};

#[derive(Debug, Parser)]
#[command(name = "dflrb", version, about = "Adversarial robustness sweeps for decision-focused learning")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct GlobalArgs {
    /// JSON file with ExperimentConfig fields
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Named starting configuration (see `dflrb presets`)
    #[arg(long, global = true, value_name = "NAME")]
    pub preset: Option<String>,
    #[arg(long, global = true, value_parser = parse_problem)]
    pub problem: Option<ProblemPreset>,
    #[arg(long, global = true, value_parser = parse_method)]
    pub method: Option<Method>,
    /// Attack budget; repeat for several
    #[arg(long = "epsilon", global = true, value_name = "EPS")]
    pub epsilons: Vec<f64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the dataset and write its splits as JSONL
    Gen,
    /// Train the configured method once and write its checkpoint
    Train,
    /// Attack a checkpoint written by `train`
    Attack {
        /// Checkpoint directory; defaults to the output directory
        #[arg(long, value_name = "DIR")]
        model: Option<PathBuf>,
    },
    /// Train and attack every method and trial
    Sweep {
        /// Also write every per-instance cell as JSONL
        #[arg(long)]
        cells: bool,
    },
    /// Rebuild summaries and plots from an existing results.csv
    Report,
    /// List preset names
    Presets,
}

fn parse_problem(s: &str) -> std::result::Result<ProblemPreset, String> {
    s.parse()
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    Method::parse(s).ok_or_else(|| {
        let names: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
        format!("unknown method '{s}' (expected one of {})", names.join(", "))
    })
}

/// Resolves preset, then file, then flags, and validates the result.
pub fn resolve_config(g: &GlobalArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &g.preset {
        Some(name) => experiment_preset(name).ok_or_else(|| {
            HarnessError::Config(format!(
                "unknown preset '{name}' (expected one of {})",
                preset_names().join(", ")
            ))
        })?,
        None => ExperimentConfig::default(),
    };
    if let Some(path) = &g.config {
        cfg = overlay_file(&cfg, path)?;
    }
    if let Some(p) = g.problem {
        cfg.problem = p;
    }
    if let Some(m) = g.method {
        cfg.method = m;
    }
    if !g.epsilons.is_empty() {
        cfg.epsilons = g.epsilons.clone();
    }
    if let Some(t) = g.trials {
        cfg.trials = t;
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(o) = &g.out {
        cfg.out = o.clone();
    }
    if let Some(e) = g.epochs {
        cfg.epochs = e;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Metadata stored next to `model.json` so `attack` can rebuild the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub config: ExperimentConfig,
    pub settings: MethodSettings,
    pub seed: u64,
    pub best_epoch: usize,
    /// Ranking pool at the end of training, for decision-focused attacks.
    pub cache: Option<Vec<Vec<f64>>>,
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(v)? + "\n")?;
    Ok(())
}

#[derive(Serialize)]
struct CurveRow {
    method: Method,
    trial: usize,
    epoch: usize,
    train_loss: Option<f64>,
    val_metric: f64,
    lr: f64,
}

fn write_curves(path: &Path, curves: &[(Method, usize, &[EpochStats])]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for &(method, trial, curve) in curves {
        for s in curve {
            w.serialize(CurveRow {
                method,
                trial,
                epoch: s.epoch,
                train_loss: s.train_loss,
                val_metric: s.val_metric,
                lr: s.lr,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_gen(cfg: &ExperimentConfig) -> Result<()> {
    let g = data::generate(cfg)?;
    let s = data::split(cfg, &g)?;
    let dir = cfg.out.join("data");
    std::fs::create_dir_all(&dir)?;
    write_json(&dir.join("problem.json"), &g.problem)?;
    write_jsonl(dir.join("train.jsonl"), &s.train.instances)?;
    write_jsonl(dir.join("validation.jsonl"), &s.validation.instances)?;
    write_jsonl(dir.join("test.jsonl"), &s.test.instances)?;
    eprintln!(
        "wrote {} / {} / {} instances to {}",
        s.train.len(),
        s.validation.len(),
        s.test.len(),
        dir.display()
    );
    Ok(())
}

fn cmd_train(cfg: &ExperimentConfig) -> Result<()> {
    let g = data::generate(cfg)?;
    let s = data::split(cfg, &g)?;
    let settings = cfg.settings_for(cfg.method)?;
    let seed = sweep::trial_seed(cfg.seed, cfg.method, 0);
    let model = data::initial_model(cfg.problem, s.train.feature_dim(), s.train.cost_dim(), seed)?;
    let opts = TrainOptions {
        epochs: cfg.epochs,
        p_solve: cfg.p_solve,
        seed,
    };
    let out = train(&settings, &g.problem, &s.train, &s.validation, model, &opts)?;
    std::fs::create_dir_all(&cfg.out)?;
    out.model.save_checkpoint(cfg.out.join("model.json"))?;
    write_json(
        &cfg.out.join("run.json"),
        &RunInfo {
            config: cfg.clone(),
            settings,
            seed,
            best_epoch: out.best_epoch,
            cache: out.cache.as_ref().map(|c| c.solutions().to_vec()),
        },
    )?;
    write_curves(&cfg.out.join("curve.csv"), &[(cfg.method, 0, &out.curve)])?;
    let best = &out.curve[out.best_epoch];
    eprintln!(
        "{}: best epoch {} with validation metric {}",
        cfg.method, out.best_epoch, best.val_metric
    );
    Ok(())
}

fn cmd_attack(cfg: &ExperimentConfig, model_dir: &Path) -> Result<()> {
    let info: RunInfo = serde_json::from_str(&std::fs::read_to_string(model_dir.join("run.json"))?)?;
    let model = PredictiveModel::<f64>::load_checkpoint(model_dir.join("model.json"))?;
    // the data must match the checkpoint; attack settings come from `cfg`
    let g = data::generate(&info.config)?;
    let s = data::split(&info.config, &g)?;
    let cache = match &info.cache {
        Some(pool) => Some(SolutionCache::from_solutions(
            pool.iter().map(Vec::as_slice),
            info.config.p_solve,
        )?),
        None => None,
    };
    let ctx = AttackContext {
        problem: &g.problem,
        settings: &info.settings,
        cache: cache.as_ref(),
        q: cfg.q,
    };
    let report = sweep::run_attack_sweep(&model, &ctx, &s.test, &cfg.epsilons, &cfg.attacks, 0, info.seed);
    let trial = TrialResult {
        method: info.settings.method,
        trial: 0,
        seed: info.seed,
        settings: info.settings.clone(),
        best_epoch: info.best_epoch,
        curve: Vec::new(),
        error: None,
        report,
    };
    std::fs::create_dir_all(&cfg.out)?;
    write_cells(&cfg.out.join("cells.jsonl"), std::slice::from_ref(&trial))?;
    let rows = report::trial_rows(info.config.problem, std::slice::from_ref(&trial));
    report::write_all(&cfg.out, &rows, Some(report::failure_counts(std::slice::from_ref(&trial))))?;
    eprintln!("wrote {} cells to {}", trial.report.cells.len(), cfg.out.display());
    Ok(())
}

#[derive(Serialize)]
struct CellLine<'a> {
    method: Method,
    trial: usize,
    #[serde(flatten)]
    cell: &'a sweep::CellRecord,
}

fn write_cells(path: &Path, trials: &[TrialResult]) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for t in trials {
        for cell in &t.report.cells {
            serde_json::to_writer(
                &mut out,
                &CellLine {
                    method: t.method,
                    trial: t.trial,
                    cell,
                },
            )?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Runs the sweep and writes every artifact into `cfg.out`.
pub fn sweep_to_dir(cfg: &ExperimentConfig, cells: bool) -> Result<(Vec<TrialResult>, report::Summary)> {
    let trials = sweep::run_sweep(cfg)?;
    std::fs::create_dir_all(&cfg.out)?;
    write_json(&cfg.out.join("config.json"), cfg)?;
    let curves: Vec<_> = trials
        .iter()
        .map(|t| (t.method, t.trial, t.curve.as_slice()))
        .collect();
    write_curves(&cfg.out.join("curves.csv"), &curves)?;
    if cells {
        write_cells(&cfg.out.join("cells.jsonl"), &trials)?;
    }
    let rows = report::trial_rows(cfg.problem, &trials);
    let summary = report::write_all(&cfg.out, &rows, Some(report::failure_counts(&trials)))?;
    Ok((trials, summary))
}

fn cmd_sweep(cfg: &ExperimentConfig, cells: bool) -> Result<()> {
    let (trials, summary) = sweep_to_dir(cfg, cells)?;
    if let Some(f) = &summary.failures {
        if f.trials + f.cells > 0 {
            eprintln!(
                "warning: {} trials and {} cells failed; see summary.json",
                f.trials, f.cells
            );
        }
    }
    for c in &summary.correlations {
        match c.spearman {
            Some(r) => eprintln!("{} attack: spearman(clean {}, degradation) = {r:.3}", c.attack, c.metric),
            None => eprintln!("{} attack: spearman undefined", c.attack),
        }
    }
    eprintln!("{} trials written to {}", trials.len(), cfg.out.display());
    Ok(())
}

fn cmd_report(cfg: &ExperimentConfig) -> Result<()> {
    let path = cfg.out.join("results.csv");
    let rows = report::read_rows(&path)
        .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
    // failure counts live only with the original sweep
    let old: Option<report::Summary> = std::fs::read_to_string(cfg.out.join("summary.json"))
        .ok()
        .and_then(|s| serde_json::from_str(&s).ok());
    report::write_all(&cfg.out, &rows, old.and_then(|s| s.failures))?;
    eprintln!("rebuilt reports for {} rows in {}", rows.len(), cfg.out.display());
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    if let Command::Presets = cli.command {
        for n in preset_names() {
            println!("{n}");
        }
        return Ok(());
    }
    let cfg = resolve_config(&cli.global)?;
    match cli.command {
        Command::Gen => cmd_gen(&cfg),
        Command::Train => cmd_train(&cfg),
        Command::Attack { model } => cmd_attack(&cfg, model.as_deref().unwrap_or(&cfg.out)),
        Command::Sweep { cells } => cmd_sweep(&cfg, cells),
        Command::Report => cmd_report(&cfg),
        Command::Presets => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("dflrb").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_file_and_preset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"trials": 3, "seed": 5}"#).unwrap();
        let p = path.to_str().unwrap();
        let cli = parse(&["sweep", "--preset", "smoke", "--config", p, "--seed", "9", "--epsilon", "0.2", "--epsilon", "0.3"]);
        let cfg = resolve_config(&cli.global).unwrap();
        assert_eq!((cfg.trials, cfg.seed, cfg.epochs), (3, 9, 2));
        assert_eq!(cfg.epsilons, vec![0.2, 0.3]);
    }

    #[test]
    fn bad_inputs_are_config_errors() {
        let cli = parse(&["gen", "--preset", "nope"]);
        assert_eq!(resolve_config(&cli.global).unwrap_err().exit_code(), 1);
        let cli = parse(&["gen", "--epsilon=-1"]);
        assert_eq!(resolve_config(&cli.global).unwrap_err().exit_code(), 1);
        assert!(Cli::try_parse_from(["dflrb", "train", "--method", "intopt"]).is_err());
    }

    #[test]
    fn train_then_attack_round_trips_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        for verb in ["train", "attack"] {
            let cli = parse(&[verb, "--preset", "smoke", "--method", "listwise", "--out", out]);
            run(cli).unwrap();
        }
        let rows = report::read_rows(&dir.path().join("results.csv")).unwrap();
        // one method, 4 ε values, 2 attacks, 1 trial, 5 metrics
        assert_eq!(rows.len(), 4 * 2 * 5);
        assert!(dir.path().join("plot-df-rre.svg").exists());
    }

    #[test]
    fn sweep_output_replays_byte_for_byte() {
        let read = |d: &Path| {
            ["results.csv", "lineplot.csv", "boxplot.csv", "summary.json", "curves.csv"]
                .map(|f| std::fs::read(d.join(f)).unwrap())
        };
        let mut outs = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::tempdir().unwrap();
            let cfg = ExperimentConfig {
                methods: vec![Method::SpoPlus, Method::TwoStageMse],
                out: dir.path().to_path_buf(),
                ..experiment_preset("smoke").unwrap()
            };
            sweep_to_dir(&cfg, false).unwrap();
            outs.push((read(dir.path()), dir));
        }
        assert!(outs[0].0 == outs[1].0);
        let rows = report::read_rows(&outs[0].1.path().join("results.csv")).unwrap();
        // (PF+DF for SPO+, PF for TS) × 4 ε × 2 trials × 5 metrics
        assert_eq!(rows.len(), 3 * 4 * 2 * 5);
    }
}
