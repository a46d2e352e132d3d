//! Measures the simulated task model's calibration: unaided exact match, one
//! refine round under gold critiques, and Direct-Refinement, plus the
//! Direct-Refinement trajectory over several rounds.
//!
//! cargo run --release --example simulated_task_model -- [instances]

use std::sync::Arc;

use critique_rl::alpha_env::{oracle_critique, render_critique, sample_instance, Lexicon};
use critique_rl::rng::stream;
use critique_rl::task_model::{Simulator, SimulatorParams, TaskBackend};

fn main() {
    let n: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10_000);
    let lexicon = Arc::new(Lexicon::bundled());
    let sim = Simulator::new(SimulatorParams::default(), lexicon.clone()).expect("valid params");
    let rounds = 5;
    let (mut unaided, mut gold) = (0, 0);
    let mut direct_rounds = vec![0usize; rounds];
    for i in 0..n {
        let inst = sample_instance(&lexicon, (3, 12), &mut stream(1, &[i])).expect("instance");
        let y_hat = sim.predict(&inst.x, &mut stream(2, &[i])).expect("simulator");
        unaided += usize::from(y_hat == inst.y);
        let critique = render_critique(&oracle_critique(&inst.x, &y_hat, &inst.y));
        let refined = sim.refine(&inst.x, &y_hat, &critique, &mut stream(3, &[i])).expect("simulator");
        gold += usize::from(refined == inst.y);
        let mut cur = y_hat.clone();
        for (t, solved) in direct_rounds.iter_mut().enumerate() {
            cur = sim.direct_refine(&inst.x, &cur, &mut stream(4, &[i, t as u64])).expect("simulator");
            *solved += usize::from(cur == inst.y);
        }
    }
    let pct = |c: usize| 100.0 * c as f64 / n as f64;
    println!("instances        {n}");
    println!("unaided          {:.1}%", pct(unaided));
    println!("gold feedback    {:.1}%", pct(gold));
    println!("direct refine    {:.1}%", pct(direct_rounds[0]));
    let series: Vec<String> = direct_rounds.iter().map(|&c| format!("{:.1}", pct(c))).collect();
    println!("direct by round  {}", series.join(" → "));
}
