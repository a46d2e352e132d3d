//! Samples instances, applies every distortion, renders its critique, and
//! checks that the corrective edit restores the sorted list. Then generates a
//! small dataset and prints a few JSONL records.
//!
//! cargo run --example dataset

use critique_rl::alpha_env::{
    apply_corrective_edit, distort, generate_dataset, parse_critique, render_critique, sample_instance,
    CritiqueKind, DatasetConfig, Lexicon,
};
use critique_rl::rng::stream;

fn main() {
    let lexicon = Lexicon::bundled();
    println!("bundled lexicon: {} words", lexicon.len());
    let inst = sample_instance(&lexicon, (5, 8), &mut stream(3, &[0])).expect("instance");
    println!("x = {}\ny = {}\n", inst.x.join(" "), inst.y.join(" "));
    for (k, kind) in CritiqueKind::ALL.into_iter().enumerate() {
        let (y_hat, critique) = distort(&inst, kind, &lexicon, &mut stream(3, &[1, k as u64])).expect("distortion");
        let text = render_critique(&critique);
        let repaired = apply_corrective_edit(&y_hat, &inst.x, &parse_critique(&text).expect("parses"));
        println!("{kind:?}\n  y_hat    {}\n  critique {text}\n  repaired {}", y_hat.join(" "), repaired == inst.y);
    }

    let config = DatasetConfig {
        warm_start: 200,
        train: 50,
        dev: 10,
        test: 10,
        ..DatasetConfig::default()
    };
    let data = generate_dataset(&config, &lexicon, 0).expect("dataset");
    println!();
    for r in data.warm_start.iter().take(3) {
        println!("{}", serde_json::to_string(r).expect("serializes"));
    }
}
