//! Warm-starts a critique policy, then trains it with KL-regularized PPO
//! against the simulated task model. Prints the learning curve and a final
//! comparison on held-out instances.
//!
//! cargo run --release --example train_ppo -- [total_steps] [lr]

use std::sync::Arc;
use std::time::Instant;

use critique_rl::alpha_env::{generate_dataset, DatasetConfig, Lexicon, TaskInstance};
use critique_rl::metrics::exact_match;
use critique_rl::policy::{train_warm_start, PolicyConfig, WarmStartConfig};
use critique_rl::ppo::{evaluate_policy, train_rl4f, DevInstance, PpoConfig};
use critique_rl::rng::stream;
use critique_rl::task_model::{Simulator, SimulatorParams, TaskBackend};

fn frozen(sim: &Simulator, insts: &[TaskInstance], seed: u64) -> Vec<DevInstance> {
    insts
        .iter()
        .enumerate()
        .map(|(i, inst)| DevInstance {
            x: inst.x.clone(),
            y: inst.y.clone(),
            y_hat: sim.predict(&inst.x, &mut stream(seed, &[i as u64])).expect("simulator"),
        })
        .collect()
}

fn main() {
    let mut args = std::env::args().skip(1);
    let total_steps = args.next().and_then(|a| a.parse().ok()).unwrap_or(40_000);
    let lr = args.next().and_then(|a| a.parse().ok()).unwrap_or(3e-4);

    let lexicon = Arc::new(Lexicon::bundled());
    let data = generate_dataset(&DatasetConfig::default(), &lexicon, 0).expect("dataset");
    let sim = Simulator::new(SimulatorParams::default(), lexicon).expect("simulator");
    let start = Instant::now();
    let (warm, _) = train_warm_start(
        PolicyConfig::default(),
        &WarmStartConfig::default(),
        &data.warm_start,
        &[],
        |_, _| {},
    );
    println!("warm start done in {:.0?}", start.elapsed());

    let train: Vec<TaskInstance> = data.train.iter().map(|r| r.instance()).collect();
    let dev = frozen(&sim, &data.dev.iter().map(|r| r.instance()).collect::<Vec<_>>(), 101);
    let test = frozen(&sim, &data.test.iter().map(|r| r.instance()).collect::<Vec<_>>(), 202);

    let config = PpoConfig {
        total_steps,
        lr,
        ..PpoConfig::default()
    };
    let out = train_rl4f(&config, &warm, &sim, &train, &dev, |r| {
        println!(
            "update {:3} steps {:6} reward {:.3} dev em {:.3} dev r {:.4} kl {:.3} beta {:.2e} ({:.0?})",
            r.update_index,
            r.env_steps,
            r.mean_reward.unwrap_or(f64::NAN),
            r.dev_exact_match,
            r.dev_reward,
            r.mean_kl.unwrap_or(f64::NAN),
            r.beta,
            start.elapsed()
        );
    })
    .expect("training");

    let unaided = test.iter().filter(|d| exact_match(&d.y_hat, &d.y)).count() as f64 / test.len() as f64;
    let ws = evaluate_policy(&warm, &test, &sim, 7);
    let rl = evaluate_policy(&out.best, &test, &sim, 7);
    println!("test exact match: unaided {unaided:.3}, warm start {:.3}, ppo {:.3} (best update {})",
        ws.exact_match, rl.exact_match, out.best_update);
}
