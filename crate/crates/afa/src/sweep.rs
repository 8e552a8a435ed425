//! Policy evaluation, cost-weight sweeps, and accuracy-versus-budget curves.
//!
//! A sweep trains one agent per (lambda, seed) pair against a fixed
//! classifier, evaluates each with greedy rollouts on a held-out split, and
//! aggregates per-lambda means and standard deviations into a fixed-header
//! CSV table. The matching no-policy baseline evaluates the same classifier
//! under uniform-random acquisition masks drawn at the same average budget,
//! which is what the accuracy-versus-budget curve compares against.

use std::io::Write as _;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::agent::{train_agent, AgentConfig, AgentPolicy};
use crate::env::{EpisodeRecord, Predictor, RewardSpec};
use crate::error::{Error, Result};
use crate::metrics::{acquisition_stats, classification_metrics, AcquisitionStats, ClassificationMetrics};
use crate::study::{apply_mask, Label, StudyRecord, N_CLASSES};
use crate::util::run_jobs;

/// Exact header of the sweep table CSV.
pub const SWEEP_CSV_HEADER: &str =
    "lambda,bacc_mean,bacc_std,f1_mean,f1_std,bmae_mean,bmae_std,ratio,count";

/// Exact header of the accuracy-versus-budget curve CSV.
pub const CURVE_CSV_HEADER: &str = "series,count,f1_mean,f1_std";

/// Everything measured about one policy on one evaluation split.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub n_studies: usize,
    pub metrics: ClassificationMetrics,
    pub acquisition: AcquisitionStats,
    /// Episodes that timed out instead of terminating (scored as errors).
    pub timeouts: usize,
    pub mean_reward: f64,
}

/// Greedy-rollout evaluation of a policy on every study in the split.
pub fn evaluate_policy<P: Predictor + ?Sized>(
    policy: &AgentPolicy,
    reward: &RewardSpec,
    predictor: &P,
    studies: &[StudyRecord],
) -> Result<(EvalReport, Vec<EpisodeRecord>)> {
    if studies.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut episodes = Vec::with_capacity(studies.len());
    for study in studies {
        episodes.push(policy.rollout(study, reward, predictor)?);
    }
    Ok((report_from_episodes(&episodes, policy.n_slots()), episodes))
}

/// Aggregate already-collected episodes into an evaluation report.
pub fn report_from_episodes(episodes: &[EpisodeRecord], n_slots: usize) -> EvalReport {
    let labels: Vec<Label> = episodes.iter().map(|e| e.label).collect();
    let preds: Vec<Label> = episodes.iter().map(|e| e.scored_prediction()).collect();
    let counts: Vec<usize> = episodes.iter().map(|e| e.acquired_count).collect();
    EvalReport {
        n_studies: episodes.len(),
        metrics: classification_metrics(&labels, &preds, N_CLASSES),
        acquisition: acquisition_stats(&counts, n_slots),
        timeouts: episodes.iter().filter(|e| e.timeout).count(),
        mean_reward: episodes.iter().map(|e| e.total_reward).sum::<f64>()
            / episodes.len() as f64,
    }
}

/// Metrics for any predictor when every slot is acquired.
pub fn evaluate_predictor_full<P: Predictor + ?Sized>(
    predictor: &P,
    studies: &[StudyRecord],
) -> Result<ClassificationMetrics> {
    if studies.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut labels = Vec::with_capacity(studies.len());
    let mut preds = Vec::with_capacity(studies.len());
    for study in studies {
        let full = vec![true; study.slots.len()];
        let state = apply_mask(study, &full)?;
        labels.push(study.label);
        preds.push(predictor.predict(&state));
    }
    Ok(classification_metrics(&labels, &preds, N_CLASSES))
}

/// One aggregated sweep table row.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub bacc_mean: f64,
    pub bacc_std: f64,
    pub f1_mean: f64,
    pub f1_std: f64,
    pub bmae_mean: f64,
    pub bmae_std: f64,
    /// Mean acquisition ratio across seeds.
    pub ratio: f64,
    /// Mean acquired-slot count across seeds.
    pub count: f64,
    /// Seeds whose training run completed.
    pub seeds_ok: usize,
    /// Error messages from seeds whose training run failed.
    pub failures: Vec<String>,
}

impl SweepRow {
    /// CSV cells in header order. Rows where every seed failed carry `nan`
    /// in each statistic column so the table stays parseable while clearly
    /// marking the failure.
    pub fn csv_line(&self) -> String {
        if self.seeds_ok == 0 {
            return format!("{},nan,nan,nan,nan,nan,nan,nan,nan", self.lambda);
        }
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.lambda,
            self.bacc_mean,
            self.bacc_std,
            self.f1_mean,
            self.f1_std,
            self.bmae_mean,
            self.bmae_std,
            self.ratio,
            self.count
        )
    }
}

/// Sweep-wide settings: the cost-weight grid, the seeds trained per weight,
/// and the agent template every run shares.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub lambdas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub agent: AgentConfig,
}

/// Per-seed evaluation of one trained agent, kept for curve building.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRun {
    pub lambda: f64,
    pub seed: u64,
    pub bacc: f64,
    pub f1: f64,
    pub bmae: f64,
    pub ratio: f64,
    pub count: f64,
}

/// Outcome of a whole sweep: aggregated rows (sorted by lambda) plus every
/// successful per-seed run.
#[derive(Debug, Clone, Serialize)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub runs: Vec<SweepRun>,
}

/// Train and evaluate one agent per (lambda, seed) pair, in parallel across
/// at most `threads` workers, and aggregate per lambda.
///
/// Failed training runs do not abort the sweep: their error strings land in
/// the row's `failures`, and the row aggregates whichever seeds succeeded.
pub fn lambda_sweep<P: Predictor + Sync + ?Sized>(
    plan: &SweepPlan,
    train: &[StudyRecord],
    val: &[StudyRecord],
    test: &[StudyRecord],
    predictor: &P,
    threads: usize,
) -> Result<SweepOutcome> {
    if plan.lambdas.is_empty() || plan.seeds.is_empty() {
        return Err(Error::InvalidConfig("sweep needs lambdas and seeds".into()));
    }
    plan.agent.validate()?;
    let mut lambdas = plan.lambdas.clone();
    lambdas.sort_by(|a, b| a.partial_cmp(b).expect("non-finite lambda"));

    let jobs: Vec<(f64, u64)> = lambdas
        .iter()
        .flat_map(|&l| plan.seeds.iter().map(move |&s| (l, s)))
        .collect();
    let results: Vec<std::result::Result<SweepRun, String>> =
        run_jobs(jobs.len(), threads, |i| {
            let (lambda, seed) = jobs[i];
            let reward = RewardSpec::new(lambda);
            train_agent(&plan.agent, &reward, train, val, predictor, seed, |_| {})
                .and_then(|trained| {
                    let (report, _) =
                        evaluate_policy(&trained.policy, &reward, predictor, test)?;
                    Ok(SweepRun {
                        lambda,
                        seed,
                        bacc: report.metrics.balanced_accuracy,
                        f1: report.metrics.f1_weighted,
                        bmae: report.metrics.balanced_mae,
                        ratio: report.acquisition.mean_ratio,
                        count: report.acquisition.mean_count,
                    })
                })
                .map_err(|e| format!("lambda {lambda} seed {seed}: {e}"))
        });

    let mut rows = Vec::with_capacity(lambdas.len());
    let mut runs = Vec::new();
    for (li, &lambda) in lambdas.iter().enumerate() {
        let chunk = &results[li * plan.seeds.len()..(li + 1) * plan.seeds.len()];
        let ok: Vec<&SweepRun> = chunk.iter().filter_map(|r| r.as_ref().ok()).collect();
        let failures: Vec<String> =
            chunk.iter().filter_map(|r| r.as_ref().err().cloned()).collect();
        let stat = |f: fn(&SweepRun) -> f64| -> (f64, f64) {
            crate::metrics::mean_std(&ok.iter().map(|r| f(r)).collect::<Vec<_>>())
        };
        let row = if ok.is_empty() {
            SweepRow {
                lambda,
                bacc_mean: f64::NAN,
                bacc_std: f64::NAN,
                f1_mean: f64::NAN,
                f1_std: f64::NAN,
                bmae_mean: f64::NAN,
                bmae_std: f64::NAN,
                ratio: f64::NAN,
                count: f64::NAN,
                seeds_ok: 0,
                failures,
            }
        } else {
            let (bacc_mean, bacc_std) = stat(|r| r.bacc);
            let (f1_mean, f1_std) = stat(|r| r.f1);
            let (bmae_mean, bmae_std) = stat(|r| r.bmae);
            let (ratio, _) = stat(|r| r.ratio);
            let (count, _) = stat(|r| r.count);
            SweepRow {
                lambda,
                bacc_mean,
                bacc_std,
                f1_mean,
                f1_std,
                bmae_mean,
                bmae_std,
                ratio,
                count,
                seeds_ok: ok.len(),
                failures,
            }
        };
        rows.push(row);
        runs.extend(ok.into_iter().cloned());
    }
    Ok(SweepOutcome { rows, runs })
}

/// Write the sweep table with its pinned header.
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    write_text(path, &out)
}

/// Evaluation of random acquisition masks at one average budget.
#[derive(Debug, Clone, Serialize)]
pub struct RandomMaskEval {
    /// Target mean number of acquired slots.
    pub budget: f64,
    pub metrics: ClassificationMetrics,
    /// Realized mean acquired count (approaches `budget` as studies grow).
    pub mean_count: f64,
}

/// Evaluate a predictor under uniform-random masks whose expected size is
/// `budget`: each study acquires floor(budget) slots, plus one more with
/// probability frac(budget), the subset chosen uniformly.
pub fn random_mask_eval<P: Predictor + ?Sized>(
    predictor: &P,
    studies: &[StudyRecord],
    budget: f64,
    seed: u64,
) -> Result<RandomMaskEval> {
    if studies.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = studies[0].slots.len();
    if !(0.0..=n as f64).contains(&budget) {
        return Err(Error::InvalidConfig(format!(
            "budget {budget} outside [0, {n}]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = budget.floor() as usize;
    let frac = budget - budget.floor();
    let mut labels = Vec::with_capacity(studies.len());
    let mut preds = Vec::with_capacity(studies.len());
    let mut total = 0usize;
    for study in studies {
        let k = (base + usize::from(frac > 0.0 && rng.random_bool(frac))).min(n);
        let mut mask = vec![false; n];
        for idx in rand::seq::index::sample(&mut rng, n, k) {
            mask[idx] = true;
        }
        let state = apply_mask(study, &mask)?;
        labels.push(study.label);
        preds.push(predictor.predict(&state));
        total += k;
    }
    Ok(RandomMaskEval {
        budget,
        metrics: classification_metrics(&labels, &preds, N_CLASSES),
        mean_count: total as f64 / studies.len() as f64,
    })
}

/// One point of an accuracy-versus-budget curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub count: f64,
    pub f1_mean: f64,
    pub f1_std: f64,
}

/// Policy curve and its random-mask baseline, both sorted by budget.
#[derive(Debug, Clone, Serialize)]
pub struct F1CountCurve {
    pub rl: Vec<CurvePoint>,
    pub random_mask: Vec<CurvePoint>,
}

/// Sort both series by (count, f1_mean) so re-running on its own output is
/// a no-op.
pub fn f1_vs_count_curve(rl: &[CurvePoint], random_mask: &[CurvePoint]) -> F1CountCurve {
    let sorted = |points: &[CurvePoint]| {
        let mut v = points.to_vec();
        v.sort_by(|a, b| {
            (a.count, a.f1_mean)
                .partial_cmp(&(b.count, b.f1_mean))
                .expect("non-finite curve point")
        });
        v
    };
    F1CountCurve { rl: sorted(rl), random_mask: sorted(random_mask) }
}

/// Curve points from a sweep's aggregated rows (failed rows are skipped).
pub fn curve_points_from_rows(rows: &[SweepRow]) -> Vec<CurvePoint> {
    rows.iter()
        .filter(|r| r.seeds_ok > 0)
        .map(|r| CurvePoint { count: r.count, f1_mean: r.f1_mean, f1_std: r.f1_std })
        .collect()
}

/// Random-mask baseline points at the given budgets, mean/std over seeds.
pub fn random_mask_curve<P: Predictor + ?Sized>(
    predictor: &P,
    studies: &[StudyRecord],
    budgets: &[f64],
    seeds: &[u64],
) -> Result<Vec<CurvePoint>> {
    let mut points = Vec::with_capacity(budgets.len());
    for &budget in budgets {
        let mut f1s = Vec::with_capacity(seeds.len());
        let mut counts = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let eval = random_mask_eval(predictor, studies, budget, seed)?;
            f1s.push(eval.metrics.f1_weighted);
            counts.push(eval.mean_count);
        }
        let (f1_mean, f1_std) = crate::metrics::mean_std(&f1s);
        let (count, _) = crate::metrics::mean_std(&counts);
        points.push(CurvePoint { count, f1_mean, f1_std });
    }
    Ok(points)
}

/// Write both curve series with the pinned header.
pub fn write_curve_csv(path: &Path, curve: &F1CountCurve) -> Result<()> {
    let mut out = String::from(CURVE_CSV_HEADER);
    out.push('\n');
    for (name, series) in [("rl", &curve.rl), ("random_mask", &curve.random_mask)] {
        for p in series {
            out.push_str(&format!("{},{},{},{}\n", name, p.count, p.f1_mean, p.f1_std));
        }
    }
    write_text(path, &out)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| Error::io(parent.display().to_string(), e))?;
        }
    }
    let mut file =
        std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    file.write_all(text.as_bytes())
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}
