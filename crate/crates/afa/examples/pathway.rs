//! Roll out a trained agent greedily and aggregate its decisions into a
//! pathway tree: nodes are sets of acquired views, edges are acquisitions,
//! and each node records how many episodes stopped there and how accurate
//! those stops were. The DOT output renders with graphviz:
//!
//!     cargo run --release -p afa --example pathway > /tmp/pathway.dot
//!     dot -Tsvg -o pathway.svg /tmp/pathway.dot   # stdout is pure DOT

use afa::agent::{train_agent, AgentConfig};
use afa::dataset::split_dataset;
use afa::env::RewardSpec;
use afa::pathway::build_pathway_tree;
use afa::synth::{generate, BayesOracle, GeneratorSpec};

fn main() -> afa::Result<()> {
    let spec = GeneratorSpec {
        n_studies: 300,
        feature_dim: 8,
        noise_sigma: 0.3,
        seed: 31,
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
    let trained = train_agent(&cfg, &reward, &split.train, &split.val, &oracle, 5, |_| {})?;

    let mut episodes = Vec::with_capacity(split.test.len());
    for study in &split.test {
        episodes.push(trained.policy.rollout(study, &reward, &oracle)?);
    }

    let n_slots = split.test[0].n_slots();
    let tree = build_pathway_tree(&episodes, n_slots)?;
    tree.check_conservation()?;

    let names: Vec<String> = split.test[0].slots.iter().map(|s| s.view.clone()).collect();
    eprintln!("pathway tree over {} episodes:", tree.n_episodes());
    for node in tree.nodes() {
        let label: Vec<&str> = (0..n_slots)
            .filter(|i| node.mask & (1 << i) != 0)
            .map(|i| names[i].as_str())
            .collect();
        let label = if label.is_empty() { "start".to_string() } else { label.join("+") };
        eprintln!(
            "  {:<22} visits {:>3}  stops {:>3}  stop accuracy {}",
            label,
            node.visits,
            node.terminations,
            node.stop_accuracy()
                .map(|a| format!("{a:.2}"))
                .unwrap_or_else(|| "-".into()),
        );
    }

    // DOT on stdout, everything else on stderr, so the output pipes clean.
    print!("{}", tree.to_dot(&names));
    Ok(())
}
