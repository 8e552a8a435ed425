//! The whole pipeline at desk scale: generate studies, train the
//! mask-robust classifier, train an acquisition agent on top of it, then
//! compare the agent's selective acquisition against always acquiring
//! everything.
//!
//!     cargo run --release -p afa --example evaluate

use afa::agent::{train_agent, AgentConfig};
use afa::classifier::{train_classifier, ClassifierConfig};
use afa::dataset::split_dataset;
use afa::env::RewardSpec;
use afa::sweep::{evaluate_policy, evaluate_predictor_full};
use afa::synth::{generate, GeneratorSpec};

fn main() -> afa::Result<()> {
    let spec = GeneratorSpec {
        n_studies: 300,
        feature_dim: 8,
        noise_sigma: 0.2,
        seed: 29,
        ..GeneratorSpec::default()
    };
    let split = split_dataset(generate(&spec)?, 0.15, 0.15, 42)?;

    println!("training classifier...");
    let clf_cfg = ClassifierConfig {
        model_dim: 16,
        n_layers: 2,
        n_heads: 2,
        ff_dim: 32,
        epochs: 10,
        batch_size: 16,
        ..ClassifierConfig::default()
    };
    let classifier = train_classifier(&clf_cfg, &split.train, &split.val, 7, |_| {})?.model;

    println!("training agent...");
    let agent_cfg = AgentConfig {
        hidden: vec![32, 32],
        epochs: 10,
        batch_size: 32,
        replay_capacity: 5_000,
        target_sync: 200,
        ..AgentConfig::default()
    };
    let reward = RewardSpec::new(0.05);
    let agent = train_agent(
        &agent_cfg,
        &reward,
        &split.train,
        &split.val,
        &classifier,
        5,
        |_| {},
    )?;

    let full = evaluate_predictor_full(&classifier, &split.test)?;
    let (policy_report, _) = evaluate_policy(&agent.policy, &reward, &classifier, &split.test)?;

    println!("\n            {:>12} {:>12}", "all slots", "agent");
    println!(
        "bacc        {:>12.3} {:>12.3}",
        full.balanced_accuracy, policy_report.metrics.balanced_accuracy
    );
    println!(
        "weighted F1 {:>12.3} {:>12.3}",
        full.f1_weighted, policy_report.metrics.f1_weighted
    );
    println!(
        "acquired    {:>12.2} {:>12.2}",
        policy_report.acquisition.n_slots as f64, policy_report.acquisition.mean_count
    );
    println!(
        "\nthe agent acquired {:.0}% of the slots",
        100.0 * policy_report.acquisition.mean_ratio
    );
    Ok(())
}
