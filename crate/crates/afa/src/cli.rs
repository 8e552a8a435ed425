//! Command-line front end: six subcommands covering data generation,
//! classifier and agent training, evaluation, cost sweeps, and pathway
//! extraction.
//!
//! Conventions shared by every command:
//! - settings come from one JSON run config (`--config`), with `--seed` and
//!   `--out` overriding its `seed` and `out_dir`;
//! - the fully-defaulted effective config is echoed into the output
//!   directory, and rerunning from that echo reproduces the run;
//! - all artifacts are deterministic given config + seed; wall-clock
//!   timestamps appear only in `run_meta.json`;
//! - failures print one machine-readable JSON line to stderr and exit
//!   nonzero.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::agent::{train_agent, AgentEpochStats, AgentPolicy, TrainedAgent};
use crate::classifier::{train_classifier, Classifier, EpochStats, TrainedClassifier};
use crate::config::{write_json_pretty, RunConfig};
use crate::dataset::{load_dataset, split_dataset, SplitDataset};
use crate::env::{write_episodes, EpisodeRecord, RewardSpec};
use crate::error::{Error, Result};
use crate::metrics::acquisition_stats;
use crate::pathway::build_pathway_tree;
use crate::study::{apply_mask, StudyRecord};
use crate::sweep::{
    curve_points_from_rows, evaluate_policy, evaluate_predictor_full, f1_vs_count_curve,
    lambda_sweep, random_mask_curve, write_curve_csv, write_sweep_csv, EvalReport, SweepPlan,
};
use crate::synth::generate;
use crate::util::thread_budget;

#[derive(Debug, Parser)]
#[command(
    name = "afa",
    version,
    about = "Cost-aware sequential view acquisition: generate studies, train the classifier and the acquisition agent, evaluate, sweep cost weights, and extract pathways"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset plus a sidecar of the generative model
    GenData(GenDataArgs),
    /// Train the mask-robust classifier on random acquisition subsets
    TrainClassifier(TrainClassifierArgs),
    /// Train the acquisition agent against a trained classifier
    TrainAgent(TrainAgentArgs),
    /// Evaluate the classifier alone (full acquisition) or an agent policy
    Eval(EvalArgs),
    /// Train one agent per (lambda, seed) pair and tabulate the trade-off
    Sweep(SweepArgs),
    /// Roll out a trained agent greedily and export its decision pathways
    Pathway(PathwayArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Run-config JSON; module defaults apply when omitted
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the config's seed (for gen-data, also the generator seed)
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,
    /// Overrides the config's out_dir
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenDataArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct TrainClassifierArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Dataset path, overriding the config's data.path
    #[arg(long, value_name = "PATH")]
    data: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainAgentArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Dataset path, overriding the config's data.path
    #[arg(long, value_name = "PATH")]
    data: Option<PathBuf>,
    /// Trained classifier checkpoint manifest
    #[arg(long, value_name = "PATH")]
    classifier_ckpt: PathBuf,
    /// Overrides the config's reward.lambda
    #[arg(long, value_name = "FLOAT")]
    lambda: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SplitName {
    Train,
    Val,
    Test,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Dataset path, overriding the config's data.path
    #[arg(long, value_name = "PATH")]
    data: Option<PathBuf>,
    /// Trained classifier checkpoint manifest
    #[arg(long, value_name = "PATH")]
    classifier_ckpt: PathBuf,
    /// Agent checkpoint; without it the classifier is scored on its own
    /// under full acquisition
    #[arg(long, value_name = "PATH")]
    agent_ckpt: Option<PathBuf>,
    /// Overrides the config's reward.lambda
    #[arg(long, value_name = "FLOAT")]
    lambda: Option<f64>,
    /// Which split of the dataset to score
    #[arg(long, value_enum, default_value_t = SplitName::Test)]
    split: SplitName,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Dataset path, overriding the config's data.path
    #[arg(long, value_name = "PATH")]
    data: Option<PathBuf>,
    /// Trained classifier checkpoint manifest
    #[arg(long, value_name = "PATH")]
    classifier_ckpt: PathBuf,
}

#[derive(Debug, Args)]
struct PathwayArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Dataset path, overriding the config's data.path
    #[arg(long, value_name = "PATH")]
    data: Option<PathBuf>,
    /// Trained classifier checkpoint manifest
    #[arg(long, value_name = "PATH")]
    classifier_ckpt: PathBuf,
    /// Agent checkpoint to roll out greedily
    #[arg(long, value_name = "PATH")]
    agent_ckpt: PathBuf,
    /// Which split of the dataset to roll out on
    #[arg(long, value_enum, default_value_t = SplitName::Test)]
    split: SplitName,
}

/// Entry point for the thin binary: parse, dispatch, map errors to a JSON
/// line on stderr and a nonzero exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = serde_json::json!({"error": "usage", "message": e.to_string()});
            eprintln!("{msg}");
            return 2;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            let msg = serde_json::json!({"error": e.kind(), "message": e.to_string()});
            eprintln!("{msg}");
            1
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData(args) => cmd_gen_data(args),
        Command::TrainClassifier(args) => cmd_train_classifier(args),
        Command::TrainAgent(args) => cmd_train_agent(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Pathway(args) => cmd_pathway(args),
    }
}

/// Load the config (or defaults) and fold in the shared overrides.
fn resolve_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Echo the effective config and write the run's metadata file — the only
/// artifact allowed to carry wall-clock time.
fn start_run(cfg: &RunConfig, command: &str) -> Result<()> {
    cfg.echo(&cfg.out_dir)?;
    let unix_time_secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = serde_json::json!({
        "command": command,
        "seed": cfg.seed,
        "threads": thread_budget(),
        "unix_time_secs": unix_time_secs,
    });
    write_json_pretty(cfg.out_dir.join("run_meta.json"), &meta)
}

fn load_split(cfg: &RunConfig, data_override: Option<&Path>) -> Result<SplitDataset> {
    let path = data_override
        .map(Path::to_path_buf)
        .or_else(|| cfg.data.path.clone())
        .ok_or_else(|| {
            Error::InvalidConfig("no dataset: set data.path in the config or pass --data".into())
        })?;
    let (studies, _) = load_dataset(&path, cfg.data.n_slots, None)?;
    let split_seed = cfg.data.split_seed.unwrap_or(cfg.seed);
    split_dataset(studies, cfg.data.val_frac, cfg.data.test_frac, split_seed)
}

fn pick_split(split: &SplitDataset, which: SplitName) -> &[StudyRecord] {
    match which {
        SplitName::Train => &split.train,
        SplitName::Val => &split.val,
        SplitName::Test => &split.test,
    }
}

fn load_classifier(path: &Path, cfg: &RunConfig) -> Result<Classifier<f32>> {
    let model = Classifier::<f32>::load(path)?;
    if model.n_slots != cfg.data.n_slots {
        return Err(Error::CheckpointMismatch(format!(
            "classifier was trained on {} slots, data has {}",
            model.n_slots, cfg.data.n_slots
        )));
    }
    Ok(model)
}

fn load_agent(path: &Path, cfg: &RunConfig, feature_dim: usize) -> Result<AgentPolicy> {
    let policy = AgentPolicy::load(path)?;
    if policy.n_slots() != cfg.data.n_slots || policy.feature_dim() != feature_dim {
        return Err(Error::CheckpointMismatch(format!(
            "agent expects {} slots of dimension {}, data has {} slots of dimension {}",
            policy.n_slots(),
            policy.feature_dim(),
            cfg.data.n_slots,
            feature_dim
        )));
    }
    Ok(policy)
}

fn feature_dim_of(studies: &[StudyRecord]) -> usize {
    studies.first().and_then(|s| s.feature_dim()).unwrap_or(0)
}

fn slot_names(studies: &[StudyRecord]) -> Vec<String> {
    studies
        .first()
        .map(|s| s.slots.iter().map(|slot| slot.view.clone()).collect())
        .unwrap_or_default()
}

fn write_text_file(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| Error::io(parent.display().to_string(), e))?;
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

fn cmd_gen_data(args: GenDataArgs) -> Result<()> {
    let mut cfg = resolve_config(&args.common)?;
    if let Some(seed) = args.common.seed {
        cfg.generator.seed = seed;
    }
    start_run(&cfg, "gen-data")?;

    let studies = generate(&cfg.generator)?;
    let data_path = cfg.out_dir.join("dataset.jsonl");
    crate::dataset::write_dataset(&data_path, &studies)?;
    cfg.generator.save(cfg.out_dir.join("generator_spec.json"))?;

    let mut label_counts = vec![0usize; crate::study::N_CLASSES];
    for s in &studies {
        label_counts[s.label as usize] += 1;
    }
    let summary = serde_json::json!({
        "n_studies": studies.len(),
        "n_slots": studies.first().map(|s| s.n_slots()).unwrap_or(0),
        "feature_dim": feature_dim_of(&studies),
        "label_counts": label_counts,
    });
    write_json_pretty(cfg.out_dir.join("dataset_summary.json"), &summary)?;
    println!("wrote {} studies to {}", studies.len(), data_path.display());
    Ok(())
}

fn classifier_log_csv(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch,train_loss,val_bacc,masked_fraction\n");
    for h in history {
        writeln!(
            out,
            "{},{},{},{}",
            h.epoch, h.train_loss, h.val_bacc, h.masked_fraction
        )
        .expect("string write");
    }
    out
}

fn cmd_train_classifier(args: TrainClassifierArgs) -> Result<()> {
    let cfg = resolve_config(&args.common)?;
    start_run(&cfg, "train-classifier")?;
    let split = load_split(&cfg, args.data.as_deref())?;

    let TrainedClassifier {
        model,
        history,
        best_epoch,
        best_val_bacc,
    } = train_classifier(&cfg.classifier, &split.train, &split.val, cfg.seed, |e| {
        println!(
            "epoch {:>3}  loss {:.4}  val_bacc {:.4}",
            e.epoch, e.train_loss, e.val_bacc
        );
    })?;

    model.save(cfg.out_dir.join("classifier.ckpt.json"))?;
    write_text_file(
        &cfg.out_dir.join("training_log.csv"),
        &classifier_log_csv(&history),
    )?;
    let summary = serde_json::json!({
        "best_epoch": best_epoch,
        "best_val_bacc": best_val_bacc,
        "epochs_run": history.len(),
        "n_train": split.train.len(),
        "n_val": split.val.len(),
    });
    write_json_pretty(cfg.out_dir.join("training_summary.json"), &summary)?;
    println!(
        "best epoch {best_epoch} with validation balanced accuracy {best_val_bacc:.4}; checkpoint in {}",
        cfg.out_dir.display()
    );
    Ok(())
}

fn agent_log_csv(history: &[AgentEpochStats]) -> String {
    let mut out = String::from("epoch,mean_reward,val_bacc,mean_acquired_count\n");
    for h in history {
        writeln!(
            out,
            "{},{},{},{}",
            h.epoch, h.mean_reward, h.val_bacc, h.mean_acquired_count
        )
        .expect("string write");
    }
    out
}

fn cmd_train_agent(args: TrainAgentArgs) -> Result<()> {
    let mut cfg = resolve_config(&args.common)?;
    if let Some(lambda) = args.lambda {
        cfg.reward = RewardSpec::new(lambda);
        cfg.reward.validate()?;
    }
    start_run(&cfg, "train-agent")?;
    let split = load_split(&cfg, args.data.as_deref())?;
    let classifier = load_classifier(&args.classifier_ckpt, &cfg)?;

    let TrainedAgent {
        policy,
        history,
        best_epoch,
        best_val_bacc,
    } = train_agent(
        &cfg.agent,
        &cfg.reward,
        &split.train,
        &split.val,
        &classifier,
        cfg.seed,
        |e| {
            println!(
                "epoch {:>3}  reward {:+.4}  val_bacc {:.4}  acquired {:.2}",
                e.epoch, e.mean_reward, e.val_bacc, e.mean_acquired_count
            );
        },
    )?;

    policy.save(cfg.out_dir.join("agent.ckpt.json"))?;
    write_text_file(&cfg.out_dir.join("training_log.csv"), &agent_log_csv(&history))?;
    let summary = serde_json::json!({
        "best_epoch": best_epoch,
        "best_val_bacc": best_val_bacc,
        "epochs_run": history.len(),
        "lambda": cfg.reward.lambda,
        "n_train": split.train.len(),
        "n_val": split.val.len(),
    });
    write_json_pretty(cfg.out_dir.join("training_summary.json"), &summary)?;
    println!(
        "best epoch {best_epoch} with validation balanced accuracy {best_val_bacc:.4}; checkpoint in {}",
        cfg.out_dir.display()
    );
    Ok(())
}

/// Score a predictor that always sees every slot, priced like an episode
/// that acquired everything.
fn full_acquisition_report(
    classifier: &Classifier<f32>,
    reward: &RewardSpec,
    studies: &[StudyRecord],
) -> Result<EvalReport> {
    let metrics = evaluate_predictor_full(classifier, studies)?;
    let n_slots = studies[0].n_slots();
    let full = vec![true; n_slots];
    let mut reward_sum = 0.0;
    for study in studies {
        let state = apply_mask(study, &full)?;
        let correct = classifier.predict_label(&state) == study.label;
        let cost: f64 = study.slots.iter().map(|s| s.cost as f64).sum();
        reward_sum += reward.terminal_reward(correct, cost);
    }
    let counts = vec![n_slots; studies.len()];
    Ok(EvalReport {
        n_studies: studies.len(),
        metrics,
        acquisition: acquisition_stats(&counts, n_slots),
        timeouts: 0,
        mean_reward: reward_sum / studies.len() as f64,
    })
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let mut cfg = resolve_config(&args.common)?;
    if let Some(lambda) = args.lambda {
        cfg.reward = RewardSpec::new(lambda);
        cfg.reward.validate()?;
    }
    start_run(&cfg, "eval")?;
    let split = load_split(&cfg, args.data.as_deref())?;
    let studies = pick_split(&split, args.split);
    if studies.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let classifier = load_classifier(&args.classifier_ckpt, &cfg)?;

    let report = match &args.agent_ckpt {
        Some(agent_path) => {
            let policy = load_agent(agent_path, &cfg, feature_dim_of(studies))?;
            let (report, episodes) =
                evaluate_policy(&policy, &cfg.reward, &classifier, studies)?;
            write_episodes(&cfg.out_dir.join("episodes.jsonl"), &episodes)?;
            report
        }
        None => full_acquisition_report(&classifier, &cfg.reward, studies)?,
    };
    write_json_pretty(cfg.out_dir.join("eval_report.json"), &report)?;
    println!(
        "balanced accuracy {:.4}, weighted F1 {:.4}, mean acquired {:.2} of {} slots over {} studies",
        report.metrics.balanced_accuracy,
        report.metrics.f1_weighted,
        report.acquisition.mean_count,
        report.acquisition.n_slots,
        report.n_studies
    );
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let cfg = resolve_config(&args.common)?;
    start_run(&cfg, "sweep")?;
    let split = load_split(&cfg, args.data.as_deref())?;
    let classifier = load_classifier(&args.classifier_ckpt, &cfg)?;

    let plan = SweepPlan {
        lambdas: cfg.eval.lambdas.clone(),
        seeds: cfg.eval.seeds.clone(),
        agent: cfg.agent.clone(),
    };
    let outcome = lambda_sweep(
        &plan,
        &split.train,
        &split.val,
        &split.test,
        &classifier,
        thread_budget(),
    )?;
    write_sweep_csv(&cfg.out_dir.join("sweep.csv"), &outcome.rows)?;
    write_json_pretty(cfg.out_dir.join("sweep_outcome.json"), &outcome)?;

    let rl_points = curve_points_from_rows(&outcome.rows);
    let budgets: Vec<f64> = rl_points.iter().map(|p| p.count).collect();
    let baseline = random_mask_curve(&classifier, &split.test, &budgets, &cfg.eval.baseline_seeds)?;
    let curve = f1_vs_count_curve(&rl_points, &baseline);
    write_curve_csv(&cfg.out_dir.join("curve.csv"), &curve)?;

    for row in &outcome.rows {
        println!("{}", row.csv_line());
        for failure in &row.failures {
            eprintln!("warning: {failure}");
        }
    }
    println!("sweep artifacts in {}", cfg.out_dir.display());
    Ok(())
}

fn cmd_pathway(args: PathwayArgs) -> Result<()> {
    let cfg = resolve_config(&args.common)?;
    start_run(&cfg, "pathway")?;
    let split = load_split(&cfg, args.data.as_deref())?;
    let studies = pick_split(&split, args.split);
    if studies.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let classifier = load_classifier(&args.classifier_ckpt, &cfg)?;
    let policy = load_agent(&args.agent_ckpt, &cfg, feature_dim_of(studies))?;

    let mut episodes: Vec<EpisodeRecord> = Vec::with_capacity(studies.len());
    for study in studies {
        episodes.push(policy.rollout(study, &cfg.reward, &classifier)?);
    }
    write_episodes(&cfg.out_dir.join("episodes.jsonl"), &episodes)?;

    let tree = build_pathway_tree(&episodes, cfg.data.n_slots)?;
    tree.check_conservation()?;
    let names = slot_names(studies);
    write_text_file(&cfg.out_dir.join("pathway.dot"), &tree.to_dot(&names))?;
    write_json_pretty(cfg.out_dir.join("pathway.json"), &tree.report(&names))?;
    println!(
        "{} episodes over {} distinct acquisition states; pathway artifacts in {}",
        tree.n_episodes(),
        tree.nodes().len(),
        cfg.out_dir.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_parses_every_subcommand() {
        Cli::try_parse_from(["afa", "gen-data", "--seed", "3", "--out", "d"]).unwrap();
        Cli::try_parse_from(["afa", "train-classifier", "--data", "x.jsonl"]).unwrap();
        Cli::try_parse_from([
            "afa",
            "train-agent",
            "--classifier-ckpt",
            "c.json",
            "--lambda",
            "0.1",
        ])
        .unwrap();
        Cli::try_parse_from([
            "afa",
            "eval",
            "--classifier-ckpt",
            "c.json",
            "--agent-ckpt",
            "a.json",
            "--split",
            "val",
        ])
        .unwrap();
        Cli::try_parse_from(["afa", "sweep", "--classifier-ckpt", "c.json"]).unwrap();
        Cli::try_parse_from([
            "afa",
            "pathway",
            "--classifier-ckpt",
            "c.json",
            "--agent-ckpt",
            "a.json",
        ])
        .unwrap();
    }

    #[test]
    fn train_agent_requires_classifier_ckpt() {
        assert!(Cli::try_parse_from(["afa", "train-agent"]).is_err());
        assert!(Cli::try_parse_from(["afa", "pathway", "--classifier-ckpt", "c"]).is_err());
    }

    #[test]
    fn seed_and_out_overrides_apply() {
        let dir = tempfile::tempdir().unwrap();
        let args = CommonArgs {
            config: None,
            seed: Some(77),
            out: Some(dir.path().join("here")),
        };
        let cfg = resolve_config(&args).unwrap();
        assert_eq!(cfg.seed, 77);
        assert_eq!(cfg.out_dir, dir.path().join("here"));
    }

    #[test]
    fn missing_config_file_is_io_error() {
        let args = CommonArgs {
            config: Some(PathBuf::from("/nonexistent/config.json")),
            seed: None,
            out: None,
        };
        assert!(matches!(resolve_config(&args), Err(Error::Io { .. })));
    }

    #[test]
    fn log_csv_headers_are_pinned() {
        assert!(classifier_log_csv(&[]).starts_with("epoch,train_loss,val_bacc,masked_fraction\n"));
        assert!(agent_log_csv(&[]).starts_with("epoch,mean_reward,val_bacc,mean_acquired_count\n"));
    }
}
