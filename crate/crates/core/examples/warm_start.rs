//! Generates the default synthetic dataset and warm-starts a critique policy
//! on it, printing loss per epoch and held-out critique accuracy.
//!
//! cargo run --release --example warm_start -- [epochs] [hidden]

use std::time::Instant;

use critique_rl::alpha_env::{generate_dataset, DatasetConfig, Lexicon};
use critique_rl::policy::{evaluate_critic, prepare_examples, train_warm_start, PolicyConfig, WarmStartConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let epochs = args.next().and_then(|a| a.parse().ok()).unwrap_or(6);
    let hidden = args.next().and_then(|a| a.parse().ok()).unwrap_or(64);

    let data = generate_dataset(&DatasetConfig::default(), &Lexicon::bundled(), 0).expect("dataset");
    let policy = PolicyConfig {
        hidden,
        ..PolicyConfig::default()
    };
    let config = WarmStartConfig {
        epochs,
        ..WarmStartConfig::default()
    };
    let start = Instant::now();
    let (params, report) = train_warm_start(policy, &config, &data.warm_start, &data.dev, |e, loss| {
        println!("epoch {e}: mean nll {loss:.4} ({:.0?})", start.elapsed());
    });
    let dev = report.dev.expect("dev split is non-empty");
    println!("dev: template {:.3}, full critique {:.3} (n={})", dev.template, dev.full, dev.n);
    let test = evaluate_critic(&params, &prepare_examples(&policy, &data.test).0);
    println!("test: template {:.3}, full critique {:.3}", test.template, test.full);
}
