//! Sweep the cost weight and watch the accuracy/acquisition trade-off: as
//! lambda grows the agent buys fewer views, trading accuracy for cost.
//! Each (lambda, seed) pair trains its own agent; pairs run in parallel.
//! The random-mask baseline answers "what if we had just acquired that
//! many views at random?" at the same budgets.
//!
//!     cargo run --release -p afa --example lambda_sweep

use afa::agent::AgentConfig;
use afa::dataset::split_dataset;
use afa::sweep::{
    curve_points_from_rows, f1_vs_count_curve, lambda_sweep, random_mask_curve, SweepPlan,
    CURVE_CSV_HEADER, SWEEP_CSV_HEADER,
};
use afa::synth::{generate, BayesOracle, GeneratorSpec};
use afa::util::thread_budget;

fn main() -> afa::Result<()> {
    let spec = GeneratorSpec {
        n_studies: 240,
        feature_dim: 8,
        noise_sigma: 0.3,
        seed: 23,
        ..GeneratorSpec::default()
    };
    let oracle = BayesOracle::from_spec(&spec)?;
    let split = split_dataset(generate(&spec)?, 0.15, 0.15, 42)?;

    let plan = SweepPlan {
        lambdas: vec![0.0, 0.05, 0.25],
        seeds: vec![1, 2],
        agent: AgentConfig {
            hidden: vec![32, 32],
            epochs: 10,
            batch_size: 32,
            replay_capacity: 5_000,
            target_sync: 200,
            ..AgentConfig::default()
        },
    };
    println!(
        "training {} agents on {} threads...\n",
        plan.lambdas.len() * plan.seeds.len(),
        thread_budget()
    );
    let outcome = lambda_sweep(
        &plan,
        &split.train,
        &split.val,
        &split.test,
        &oracle,
        thread_budget(),
    )?;

    println!("{SWEEP_CSV_HEADER}");
    for row in &outcome.rows {
        println!("{}", row.csv_line());
    }

    let rl = curve_points_from_rows(&outcome.rows);
    let budgets: Vec<f64> = rl.iter().map(|p| p.count).collect();
    let baseline = random_mask_curve(&oracle, &split.test, &budgets, &[11, 12, 13])?;
    let curve = f1_vs_count_curve(&rl, &baseline);

    println!("\n{CURVE_CSV_HEADER}");
    for (series, points) in [("rl", &curve.rl), ("random_mask", &curve.random_mask)] {
        for p in points {
            println!("{series},{:.2},{:.3},{:.3}", p.count, p.f1_mean, p.f1_std);
        }
    }
    println!("\nat matched budgets the learned policy should sit above the random masks");
    Ok(())
}
