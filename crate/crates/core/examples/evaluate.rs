//! Runs the harness end to end in a temporary directory: dataset, warm start,
//! PPO, then one-round evaluation of every critique source and a five-round
//! iteration on multi-error instances.
//!
//! cargo run --release --example evaluate -- [total_steps]

use critique_rl::harness::{
    iterate_refine, render_table, run_eval, train_pipeline, CritiqueSource, ExperimentConfig, InstanceFilter,
};

fn main() {
    let steps = std::env::args().nth(1).unwrap_or_else(|| "10240".into());
    let dir = std::env::temp_dir().join("critique-rl-evaluate");
    let mut config = ExperimentConfig::from_toml_str(
        "",
        &[
            format!("data.dir='{}'", dir.join("data").display()),
            format!("output_dir='{}'", dir.join("run").display()),
            format!("ppo.total_steps={steps}"),
            "data.eval_limit=500".into(),
            "seeds=[0, 1, 2]".into(),
        ],
    )
    .expect("valid config");
    let artifacts = train_pipeline(&config, &mut |l| eprintln!("{l}")).expect("pipeline");
    println!("artifacts: {artifacts:?}\n");

    for source in [
        CritiqueSource::None,
        CritiqueSource::Direct,
        CritiqueSource::Memprompt,
        CritiqueSource::Supervised,
        CritiqueSource::Rl4f,
        CritiqueSource::Gold,
    ] {
        config.critique_source = source;
        print!("{}\n", render_table(&run_eval(&config).expect("eval")));
    }

    config.data.filter = InstanceFilter::MultiError;
    for source in [CritiqueSource::Rl4f, CritiqueSource::Direct] {
        config.critique_source = source;
        print!("{}\n", render_table(&iterate_refine(&config).expect("iterate")));
    }
}
