use std::path::Path;
use std::time::Instant;

use afa::agent::{train_agent, AgentConfig};
use afa::classifier::{train_classifier, Classifier, ClassifierConfig};
use afa::dataset::split_dataset;
use afa::env::{EpisodeRecord, RewardSpec};
use afa::study::StudyRecord;
use afa::sweep::{evaluate_policy, evaluate_predictor_full};
use afa::synth::{generate, GeneratorSpec};

fn slot_energy(s: &StudyRecord, slot: usize) -> f64 {
    let f = &s.slots[slot].features;
    f.iter().map(|x| x.abs() as f64).sum::<f64>() / f.len() as f64
}

fn good_slot(s: &StudyRecord, family: usize) -> usize {
    let a = 2 * family;
    if slot_energy(s, a) >= slot_energy(s, a + 1) {
        a
    } else {
        a + 1
    }
}

fn bucket_report(studies: &[StudyRecord], episodes: &[EpisodeRecord]) {
    // Buckets: stop at 2 good+good, 2 with >=1 degraded pick, 3, 4, other.
    let mut stats: std::collections::BTreeMap<&str, (usize, usize)> = Default::default();
    for (s, e) in studies.iter().zip(episodes) {
        let picked: Vec<usize> = (0..4).filter(|&i| e.final_mask[i]).collect();
        let name = match picked.len() {
            2 => {
                let fams: Vec<usize> = picked.iter().map(|&i| i / 2).collect();
                if fams[0] == fams[1] {
                    "2 same-family"
                } else if picked.iter().all(|&i| i == good_slot(s, i / 2)) {
                    "2 good+good"
                } else if picked.iter().any(|&i| i == good_slot(s, i / 2)) {
                    "2 good+deg"
                } else {
                    "2 deg+deg"
                }
            }
            0 => "0",
            1 => "1",
            3 => "3",
            _ => "4",
        };
        let entry = stats.entry(name).or_insert((0, 0));
        entry.0 += 1;
        if e.prediction == Some(s.label) {
            entry.1 += 1;
        }
    }
    for (name, (n, correct)) in stats {
        println!(
            "    stop bucket {name:<14} n {:>4} ({:>4.1}%)  acc {:.3}",
            n,
            100.0 * n as f64 / episodes.len() as f64,
            correct as f64 / n as f64
        );
    }
}

fn main() -> afa::Result<()> {
    let spec = GeneratorSpec {
        n_studies: 2000,
        feature_dim: 16,
        noise_sigma: 0.3,
        seed: 1,
        ..GeneratorSpec::default()
    };
    let studies = generate(&spec)?;
    let split = split_dataset(studies, 0.25, 0.15, 1)?;

    let ckpt = Path::new("target/bench-clf.ckpt.json");
    let clf_model = if ckpt.exists() {
        println!("classifier: reusing {}", ckpt.display());
        Classifier::<f32>::load(ckpt)?
    } else {
        let clf_cfg = ClassifierConfig {
            epochs: 40,
            lr_min: Some(3e-5),
            ..ClassifierConfig::default()
        };
        let t0 = Instant::now();
        let clf = train_classifier(&clf_cfg, &split.train, &split.val, 1, |_| {})?;
        println!(
            "classifier: kept epoch {} ({:?})",
            clf.best_epoch,
            t0.elapsed()
        );
        clf.model.save(ckpt)?;
        clf.model
    };
    let full = evaluate_predictor_full(&clf_model, &split.test)?;
    println!("full-acq test bacc {:.4}", full.balanced_accuracy);

    for (name, seed, agent_cfg) in [
        (
            "E1: [32,32] 50 ep batch 64, seed 1",
            1u64,
            AgentConfig {
                hidden: vec![32, 32],
                epochs: 50,
                lr_min: Some(5e-5),
                append_mask: true,
                ..AgentConfig::default()
            },
        ),
        (
            "E2: same, seed 2",
            2,
            AgentConfig {
                hidden: vec![32, 32],
                epochs: 50,
                lr_min: Some(5e-5),
                append_mask: true,
                ..AgentConfig::default()
            },
        ),
        (
            "F: [32,32] 50 ep batch 128 lr->1e-4, seed 1",
            1,
            AgentConfig {
                hidden: vec![32, 32],
                epochs: 50,
                batch_size: 128,
                lr_min: Some(1e-4),
                append_mask: true,
                ..AgentConfig::default()
            },
        ),
    ] {
        println!("--- {name}");
        let reward = RewardSpec::new(0.05);
        let t0 = Instant::now();
        let trained = train_agent(
            &agent_cfg,
            &reward,
            &split.train,
            &split.val,
            &clf_model,
            seed,
            |e| {
                println!(
                    "  epoch {:>2} reward {:+.3} val_bacc {:.4} count {:.2} val_obj {:+.4} eps {:.2}",
                    e.epoch,
                    e.mean_reward,
                    e.val_bacc,
                    e.mean_acquired_count,
                    e.val_bacc - 0.05 * e.mean_acquired_count,
                    e.epsilon
                );
            },
        )?;
        println!(
            "agent: kept epoch {} ({:?})",
            trained.best_epoch,
            t0.elapsed()
        );
        let (report, episodes) =
            evaluate_policy(&trained.policy, &reward, &clf_model, &split.test)?;
        println!(
            "agent test: bacc {:.4} count {:.2} | need bacc >= {:.4} and count <= 2.4",
            report.metrics.balanced_accuracy,
            report.acquisition.mean_count,
            full.balanced_accuracy - 0.03
        );
        bucket_report(&split.test, &episodes);
    }
    Ok(())
}
