//! Shows the prompts sent to a completions endpoint, and, when `LLM_API_KEY`
//! is set, runs PREDICT and one REFINE against it.
//!
//! LLM_API_KEY=... cargo run --example llm_backend -- [base_url] [model]

use critique_rl::alpha_env::{oracle_critique, render_critique, TaskInstance};
use critique_rl::rng::stream;
use critique_rl::task_model::{
    build_predict_prompt, build_refine_prompt, LlmBackend, LlmClient, LlmConfig, PromptExemplars, PromptTask,
    TaskBackend, API_KEY_ENV,
};

fn main() {
    let mut args = std::env::args().skip(1);
    let mut config = LlmConfig::default();
    if let Some(url) = args.next() {
        config.base_url = url;
    }
    if let Some(model) = args.next() {
        config.model_name = model;
    }
    let exemplars = PromptExemplars::alphabetization_default();
    let inst = TaskInstance::from_unsorted(
        "walnut cedar pepper amber kettle".split_whitespace().map(str::to_owned).collect(),
    );
    println!("--- predict prompt ---\n{}", build_predict_prompt(&exemplars, &inst.x));
    let y_hat: Vec<String> = "amber cedar kettle walnut pepper".split_whitespace().map(str::to_owned).collect();
    let critique = render_critique(&oracle_critique(&inst.x, &y_hat, &inst.y));
    println!(
        "--- refine prompt ---\n{}",
        build_refine_prompt(&exemplars, &inst.x, &y_hat, Some(&critique), PromptTask::Alphabetization)
    );

    let client = match LlmClient::from_env(config) {
        Ok(c) => c,
        Err(e) => {
            println!("({e}; set {API_KEY_ENV} to query the endpoint)");
            return;
        }
    };
    let backend = LlmBackend::new(client, exemplars, PromptTask::Alphabetization);
    let mut rng = stream(0, &[0]);
    match backend.predict(&inst.x, &mut rng) {
        Ok(p) => println!("predict: {}", p.join(" ")),
        Err(e) => println!("predict failed: {e}"),
    }
    match backend.refine(&inst.x, &y_hat, &critique, &mut rng) {
        Ok(r) => println!("refine:  {}", r.join(" ")),
        Err(e) => println!("refine failed: {e}"),
    }
}
