//! Verify every analytic gradient in the crate against central finite
//! differences, in 64-bit precision where the comparison is meaningful:
//! the full attention classifier (embeddings, attention, layer norms,
//! feed-forward, head) and the value network used by the agent.
//!
//!     cargo run --release -p afa --example grad_check

use afa::classifier::{Classifier, ClassifierConfig};
use afa::neural::gradcheck::{grad_check, GradCheckConfig, GradCheckReport};
use afa::neural::mlp::Mlp;
use afa::neural::ops::{cross_entropy, mse};
use afa::neural::zero_grads;
use afa::study::{apply_mask, StudyRecord, ViewSlot};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_study(seed: u64, n: usize, d: usize, label: u8) -> StudyRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    StudyRecord {
        study_id: format!("gc-{seed}"),
        label,
        slots: (0..n)
            .map(|i| ViewSlot {
                view: format!("V_{i}"),
                cost: 1.0,
                features: (0..d).map(|_| rng.random_range(-1.0..1.0)).collect(),
            })
            .collect(),
    }
}

fn show(name: &str, report: &GradCheckReport) {
    println!(
        "{name}: {} probes over {} tensors, max relative error {:.3e} -> {}",
        report.n_probes,
        report.n_tensors,
        report.max_rel_err,
        if report.passed() { "ok" } else { "FAILED" }
    );
    if let (false, Some(worst)) = (report.passed(), &report.worst) {
        println!(
            "  worst: {}[{}] analytic {:.6e} numeric {:.6e}",
            worst.tensor, worst.index, worst.analytic, worst.numeric
        );
    }
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);

    // Classifier: cross-entropy loss over a mixed batch of partial masks,
    // including one state with nothing acquired at all.
    let cfg = ClassifierConfig {
        model_dim: 16,
        n_layers: 2,
        n_heads: 2,
        ff_dim: 32,
        ..ClassifierConfig::default()
    };
    let mut model = Classifier::<f64>::new(cfg, 4, 6, &mut rng).unwrap();
    let studies = [
        random_study(1, 4, 6, 0),
        random_study(2, 4, 6, 1),
        random_study(3, 4, 6, 2),
    ];
    let states = vec![
        apply_mask(&studies[0], &[true, false, true, false]).unwrap(),
        apply_mask(&studies[1], &[true, true, true, true]).unwrap(),
        apply_mask(&studies[2], &[false, false, false, false]).unwrap(),
    ];
    let labels = [0u8, 1, 2];
    let report = grad_check(
        &mut model,
        |m| {
            zero_grads(m);
            let (logits, cache) = m.forward_batch(&states);
            let ce = cross_entropy(&logits, 3, 3, &labels);
            m.backward(&cache, &ce.dlogits);
            ce.loss
        },
        &GradCheckConfig {
            max_per_tensor: Some(32),
            seed: 5,
            ..GradCheckConfig::default()
        },
    );
    show("classifier / cross-entropy", &report);

    // Value network: squared error against fixed targets, every component.
    let mut qnet = Mlp::<f64>::new("qnet", &[12, 24, 24, 5], &mut rng);
    let x: Vec<f64> = (0..24).map(|i| (i as f64 * 0.37).sin()).collect();
    let target: Vec<f64> = (0..10).map(|i| (i as f64 * 0.61).cos()).collect();
    let report = grad_check(
        &mut qnet,
        |m| {
            zero_grads(m);
            let (y, cache) = m.forward(&x, 2);
            let (loss, dy) = mse(&y, &target);
            m.backward(&cache, &dy, 2);
            loss
        },
        &GradCheckConfig::default(),
    );
    show("value network / squared error", &report);
}
