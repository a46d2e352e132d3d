use std::path::Path;
use std::sync::{Arc, Mutex};

use critique_rl::alpha_env::{Lexicon, TaskInstance};
use critique_rl::baselines::direct_refinement;
use critique_rl::harness::{
    generate_data, initial_predictions, iterate_refine, load_eval_instances, mean_std, run_eval, run_sweep,
    train_pipeline, write_report, Critic, CritiqueSource, EvalReport, ExperimentConfig, InstanceFilter,
};
use critique_rl::rng::{stream, Rng};
use critique_rl::task_model::{BackendError, Simulator, SimulatorParams, TaskBackend};

fn config(dir: &Path, extra: &[&str]) -> ExperimentConfig {
    let mut ov = vec![
        format!("data.dir='{}'", dir.join("data").display()),
        format!("output_dir='{}'", dir.join("out").display()),
        "data.generation.warm_start=3000".into(),
        "data.generation.train=400".into(),
        "data.generation.dev=100".into(),
        "data.generation.test=300".into(),
        "warm_start.epochs=2".into(),
        "ppo.total_steps=512".into(),
        "ppo.steps_per_update=256".into(),
        "ppo.minibatch_size=32".into(),
        "ppo.epochs=2".into(),
        "seeds=[0, 1, 2]".into(),
    ];
    ov.extend(extra.iter().map(|s| s.to_string()));
    ExperimentConfig::from_toml_str("", &ov).unwrap()
}

fn with_data(extra: &[&str]) -> (tempfile::TempDir, ExperimentConfig) {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), extra);
    generate_data(&c, &mut |_| {}).unwrap();
    (dir, c)
}

/// Wraps a simulator and records every critique and prediction it sees.
struct Recording {
    inner: Simulator,
    critiques: Mutex<Vec<String>>,
    predictions: Mutex<Vec<Vec<String>>>,
}

impl TaskBackend for Recording {
    fn predict(&self, x: &[String], rng: &mut Rng) -> Result<Vec<String>, BackendError> {
        let p = self.inner.predict(x, rng)?;
        self.predictions.lock().unwrap().push(p.clone());
        Ok(p)
    }
    fn refine(&self, x: &[String], y_hat: &[String], critique: &str, rng: &mut Rng) -> Result<Vec<String>, BackendError> {
        self.critiques.lock().unwrap().push(critique.to_owned());
        self.inner.refine(x, y_hat, critique, rng)
    }
}

fn recording() -> Recording {
    Recording {
        inner: Simulator::new(SimulatorParams::default(), Arc::new(Lexicon::bundled())).unwrap(),
        critiques: Mutex::new(Vec::new()),
        predictions: Mutex::new(Vec::new()),
    }
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_owned).collect()
}

#[test]
fn direct_refinement_sends_the_fixed_critique_bytes() {
    let rec = recording();
    let x = words("pear apple fig");
    direct_refinement(&rec, &x, &words("apple pear fig"), &mut stream(0, &[0])).unwrap();
    rec.direct_refine(&x, &words("apple pear fig"), &mut stream(0, &[1])).unwrap();
    let c = Critic::Direct.critique(&rec, &x, &words("apple pear fig"), &words("apple fig pear")).unwrap();
    rec.refine(&x, &words("apple pear fig"), &c, &mut stream(0, &[2])).unwrap();
    let seen = rec.critiques.lock().unwrap();
    assert_eq!(seen.len(), 3);
    for s in seen.iter() {
        assert_eq!(s.as_bytes(), b"Improve the answer.");
    }
}

#[test]
fn initial_predictions_are_frozen_per_seed() {
    let insts: Vec<TaskInstance> = (0..200)
        .map(|i| TaskInstance::from_unsorted(words(&format!("w{i} alpha zeta beta gamma"))))
        .collect();
    let rec = recording();
    let a: Vec<_> = initial_predictions(&rec, &insts, 4).into_iter().map(Result::unwrap).collect();
    let b: Vec<_> = initial_predictions(&rec, &insts, 4).into_iter().map(Result::unwrap).collect();
    let c: Vec<_> = initial_predictions(&rec, &insts, 5).into_iter().map(Result::unwrap).collect();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(rec.predictions.lock().unwrap().len(), 600);
}

#[test]
fn critique_sources_share_initial_predictions() {
    let (_d, mut c) = with_data(&[]);
    let mut initial = Vec::new();
    for source in [CritiqueSource::None, CritiqueSource::Direct, CritiqueSource::Gold, CritiqueSource::Memprompt] {
        c.critique_source = source;
        let r = run_eval(&c).unwrap();
        initial.push(r.per_seed.iter().map(|s| s.solved_per_round[0]).collect::<Vec<_>>());
    }
    assert!(initial.windows(2).all(|w| w[0] == w[1]), "{initial:?}");
}

#[test]
fn none_source_scores_initial_outputs() {
    let (_d, c) = with_data(&["critique_source=none"]);
    let r = run_eval(&c).unwrap();
    let rec = recording();
    let insts = load_eval_instances(&c).unwrap();
    for row in &r.per_seed {
        let preds = initial_predictions(&rec, &insts, row.seed);
        let solved = preds.iter().zip(&insts).filter(|(p, i)| p.as_ref().unwrap() == &i.y).count();
        assert_eq!(row.solved_per_round, vec![solved]);
        assert_eq!(row.exact_match, solved as f64 / insts.len() as f64);
    }
}

#[test]
fn gold_with_perfect_comprehension_solves_single_errors() {
    let (_d, c) = with_data(&[
        "critique_source=gold",
        "backend.simulator.comprehension=1.0",
        "backend.simulator.error_counts=[1.0, 0.0, 0.0]",
    ]);
    let r = run_eval(&c).unwrap();
    for row in &r.per_seed {
        assert_eq!(row.exact_match, 1.0, "seed {}", row.seed);
        assert_eq!(row.parse_failures, 0);
    }
}

#[test]
fn gold_with_perfect_comprehension_repairs_stacked_errors() {
    let (_d, c) = with_data(&[
        "critique_source=gold",
        "backend.simulator.comprehension=1.0",
        "rounds=5",
    ]);
    let r = iterate_refine(&c).unwrap();
    let rounds = r.rounds.unwrap();
    assert_eq!(rounds.len(), 6);
    // One distortion undone per round, except rare stacked moves whose
    // rank-based reinsertion needs an extra round.
    assert!(rounds[3].exact_match.mean >= 0.995, "{:?}", rounds[3]);
    assert_eq!(rounds[5].exact_match.mean, 1.0);
}

#[test]
fn gold_iteration_never_loses_solved_items() {
    let (_d, c) = with_data(&["critique_source=gold", "rounds=5"]);
    let r = iterate_refine(&c).unwrap();
    for row in &r.per_seed {
        assert!(row.solved_per_round.windows(2).all(|w| w[1] >= w[0]), "{:?}", row.solved_per_round);
    }
    assert!(r.rounds.unwrap().iter().all(|s| s.decreased_seeds.is_empty()));
}

#[test]
fn direct_iteration_decreases_are_reported() {
    let (_d, c) = with_data(&["critique_source=direct", "rounds=5", "seeds=[0, 1, 2, 3, 4]"]);
    let r = iterate_refine(&c).unwrap();
    let rounds = r.rounds.as_ref().unwrap();
    for (k, summary) in rounds.iter().enumerate().skip(1) {
        let expected: Vec<u64> = r
            .per_seed
            .iter()
            .filter(|row| row.solved_per_round[k] < row.solved_per_round[k - 1])
            .map(|row| row.seed)
            .collect();
        assert_eq!(summary.decreased_seeds, expected);
    }
    assert!(rounds.iter().any(|s| !s.decreased_seeds.is_empty()));
}

fn independent_mean_std(v: &[f64]) -> (f64, f64) {
    let mut sum = 0.0;
    for x in v {
        sum += x;
    }
    let mean = sum / v.len() as f64;
    let mut ss = 0.0;
    for x in v {
        ss += (x - mean) * (x - mean);
    }
    (mean, (ss / (v.len() as f64 - 1.0)).sqrt())
}

#[test]
fn aggregates_recompute_from_rows() {
    let (_d, c) = with_data(&["critique_source=direct"]);
    let r = run_eval(&c).unwrap();
    assert_eq!(r.per_seed.len(), 3);
    let cols: [(&str, fn(&critique_rl::harness::SeedRow) -> f64); 3] = [
        ("exact_match", |s| s.exact_match),
        ("inverse_levenshtein", |s| s.inverse_levenshtein),
        ("mean_rouge", |s| s.mean_rouge),
    ];
    for (name, f) in cols {
        let v: Vec<f64> = r.per_seed.iter().map(f).collect();
        let (m, s) = independent_mean_std(&v);
        let agg = r.aggregate[name];
        assert!((agg.mean - m).abs() < 1e-12 && (agg.std - s).abs() < 1e-12, "{name}");
    }
    assert_eq!(mean_std(&[2.0]).std, 0.0);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let (d, c) = with_data(&["critique_source=memprompt", "data.filter=incorrect"]);
    let a = write_report(&d.path().join("a"), "r", &iterate_refine(&c).unwrap()).unwrap();
    let b = write_report(&d.path().join("b"), "r", &iterate_refine(&c).unwrap()).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let parsed: EvalReport = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!(parsed.config_digest, c.digest());
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    for key in ["config_digest", "seeds", "per_seed", "aggregate", "rounds"] {
        assert!(json.get(key).is_some(), "{key}");
    }
}

#[test]
fn multi_error_filter_keeps_only_multi_error_items() {
    let (_d, c) = with_data(&["critique_source=none", "data.filter=multi_error"]);
    let r = run_eval(&c).unwrap();
    let (_d2, all) = with_data(&["critique_source=none"]);
    let r_all = run_eval(&all).unwrap();
    for (m, a) in r.per_seed.iter().zip(&r_all.per_seed) {
        assert_eq!(m.solved_per_round, vec![0]);
        assert!(m.instances > 0 && m.instances < a.instances - a.solved_per_round[0]);
    }
}

#[test]
fn missing_inputs_fail_with_data_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), &["critique_source=none"]);
    assert_eq!(run_eval(&c).unwrap_err().exit_code(), 3);
    generate_data(&c, &mut |_| {}).unwrap();
    for source in ["rl4f", "supervised"] {
        let c = config(dir.path(), &[&format!("critique_source={source}")]);
        assert_eq!(run_eval(&c).unwrap_err().exit_code(), 3, "{source}");
    }
    std::fs::write(dir.path().join("data/test.jsonl"), "{not json\n").unwrap();
    let c = config(dir.path(), &["critique_source=none"]);
    assert_eq!(run_eval(&c).unwrap_err().exit_code(), 3);
}

#[test]
fn pipeline_is_reproducible_and_honours_stage_flags() {
    let dir = tempfile::tempdir().unwrap();
    let a = config(&dir.path().join("a"), &[]);
    let b = config(&dir.path().join("b"), &[]);
    let art_a = train_pipeline(&a, &mut |_| {}).unwrap();
    let art_b = train_pipeline(&b, &mut |_| {}).unwrap();
    for (x, y) in [
        (&art_a.supervised, &art_b.supervised),
        (art_a.rl4f.as_ref().unwrap(), art_b.rl4f.as_ref().unwrap()),
        (art_a.curve.as_ref().unwrap(), art_b.curve.as_ref().unwrap()),
    ] {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{}", x.display());
    }
    let curve = std::fs::read_to_string(art_a.curve.unwrap()).unwrap();
    assert_eq!(curve.lines().count(), 1 + 1 + 2);

    // Warm start only, then RL alone from the saved warm start.
    let sup_only = config(&dir.path().join("c"), &["stages.rl=false"]);
    let art = train_pipeline(&sup_only, &mut |_| {}).unwrap();
    assert!(art.rl4f.is_none() && art.supervised.exists());
    let mut eval = sup_only.clone();
    eval.critique_source = CritiqueSource::Supervised;
    run_eval(&eval).unwrap();
    let rl_only = config(&dir.path().join("c"), &["stages.warm_start=false"]);
    let art = train_pipeline(&rl_only, &mut |_| {}).unwrap();
    assert_eq!(
        std::fs::read(art.rl4f.unwrap()).unwrap(),
        std::fs::read(art_a.rl4f.unwrap()).unwrap()
    );

    // A missing warm start names its stage.
    let missing = config(&dir.path().join("d"), &["stages.warm_start=false"]);
    let err = train_pipeline(&missing, &mut |_| {}).unwrap_err();
    assert!(err.to_string().starts_with("stage warm_start"), "{err}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn corrupt_dataset_is_rejected_on_load() {
    let (d, c) = with_data(&[]);
    let path = d.path().join("data/train.jsonl");
    let text = std::fs::read_to_string(&path).unwrap();
    let first = text.lines().next().unwrap();
    let mut rec: serde_json::Value = serde_json::from_str(first).unwrap();
    rec["critique"] = "gibberish".into();
    std::fs::write(&path, format!("{rec}\n{}", &text[first.len() + 1..])).unwrap();
    let err = train_pipeline(&c, &mut |_| {}).unwrap_err();
    assert!(err.to_string().starts_with("stage dataset"), "{err}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn sweep_reports_each_width() {
    let (_d, c) = with_data(&["sweep.hidden=[8, 24]", "ppo.total_steps=256"]);
    let r = run_sweep(&c, &mut |_| {}).unwrap();
    assert_eq!(r.rows.iter().map(|r| r.hidden).collect::<Vec<_>>(), vec![8, 24]);
    assert!(r.rows[0].parameters < r.rows[1].parameters);
    for row in &r.rows {
        assert!(row.best_dev_reward >= row.warm_start_dev_reward);
    }
    assert!(c.output_dir.join("sweep.json").exists());
    assert!(c.output_dir.join("sweep/h24/rl4f.json").exists());
}

#[test]
fn instance_filter_is_parsed() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), &["data.filter=multi_error"]);
    assert_eq!(c.data.filter, InstanceFilter::MultiError);
}
