//! Train the acquisition agent against the closed-form reference
//! predictor. With the predictor held perfect, everything the agent learns
//! is about *which views to buy*: at a moderate cost weight it should stop
//! after one informative slot per view family instead of acquiring all
//! four.
//!
//!     cargo run --release -p afa --example train_agent

use afa::agent::{train_agent, AgentConfig};
use afa::dataset::split_dataset;
use afa::env::RewardSpec;
use afa::sweep::evaluate_policy;
use afa::synth::{generate, BayesOracle, GeneratorSpec};

fn main() -> afa::Result<()> {
    let spec = GeneratorSpec {
        n_studies: 300,
        feature_dim: 8,
        noise_sigma: 0.3,
        seed: 17,
        ..GeneratorSpec::default()
    };
    let oracle = BayesOracle::from_spec(&spec)?;
    let split = split_dataset(generate(&spec)?, 0.15, 0.15, 42)?;

    let cfg = AgentConfig {
        hidden: vec![32, 32],
        epochs: 12,
        batch_size: 32,
        replay_capacity: 5_000,
        target_sync: 200,
        ..AgentConfig::default()
    };
    let reward = RewardSpec::new(0.1);
    let trained = train_agent(
        &cfg,
        &reward,
        &split.train,
        &split.val,
        &oracle,
        5,
        |e| {
            println!(
                "epoch {:>2}  reward {:+.3}  val_bacc {:.3}  acquired {:.2}  eps {:.2}",
                e.epoch, e.mean_reward, e.val_bacc, e.mean_acquired_count, e.epsilon
            );
        },
    )?;
    println!("kept epoch {}", trained.best_epoch);

    let (report, episodes) = evaluate_policy(&trained.policy, &reward, &oracle, &split.test)?;
    println!(
        "\ntest: bacc {:.3}  mean acquired {:.2} of {} slots  mean reward {:+.3}",
        report.metrics.balanced_accuracy,
        report.acquisition.mean_count,
        report.acquisition.n_slots,
        report.mean_reward
    );
    println!("acquisition histogram {:?}", report.acquisition.histogram);

    // A few concrete trajectories, action 0 being "stop and diagnose".
    for ep in episodes.iter().take(5) {
        println!(
            "  {}: actions {:?} -> predicted {:?} (label {})",
            ep.study_id, ep.actions, ep.prediction, ep.label
        );
    }

    let out = std::path::Path::new("target/example-out/train_agent");
    std::fs::create_dir_all(out).ok();
    trained.policy.save(out.join("agent.ckpt.json"))?;
    println!("checkpoint written to {}", out.display());
    Ok(())
}
