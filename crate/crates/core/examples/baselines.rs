//! Builds a MemPrompt critique memory from the warm-start split and compares
//! the comparison critique sources on a handful of simulated predictions.
//!
//! cargo run --release --example baselines

use std::sync::Arc;

use critique_rl::alpha_env::{generate_dataset, DatasetConfig, Lexicon};
use critique_rl::baselines::{gold_feedback, memprompt_ranking, memprompt_retrieve, self_refine_prompt, CritiqueMemory};
use critique_rl::rng::stream;
use critique_rl::task_model::{Simulator, SimulatorParams, TaskBackend, DIRECT_REFINE_CRITIQUE};

fn main() {
    let lexicon = Arc::new(Lexicon::bundled());
    let data = generate_dataset(&DatasetConfig::default(), &lexicon, 0).expect("dataset");
    let memory = CritiqueMemory::from_records(&data.warm_start);
    println!("memory: {} entries, mean key length {:.1} tokens", memory.len(), memory.avg_len());

    let sim = Simulator::new(SimulatorParams::default(), lexicon).expect("simulator");
    for (i, rec) in data.test.iter().take(4).enumerate() {
        let y_hat = sim.predict(&rec.x, &mut stream(5, &[i as u64])).expect("simulator");
        println!("\nx      {}\ny_hat  {}", rec.x.join(" "), y_hat.join(" "));
        println!("  gold       {}", gold_feedback(&rec.x, &y_hat, &rec.y));
        println!("  memprompt  {}", memprompt_retrieve(&memory, &rec.x, &y_hat, 1));
        let top = memprompt_ranking(&memory, &rec.x, &y_hat, 3);
        println!("  top-3 keys {:?}", top.iter().map(|&j| &memory.entries()[j].key).collect::<Vec<_>>());
        println!("  direct     {DIRECT_REFINE_CRITIQUE}");
    }
    println!("\nself-refine prompt:\n{}", self_refine_prompt(&["banana", "apple"]));
}
