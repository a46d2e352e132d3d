use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_critique-rl"))
        .current_dir(dir)
        .env_remove("LLM_API_KEY")
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const SMALL: &[&str] = &[
    "--set",
    "data.generation.warm_start=500",
    "--set",
    "data.generation.train=100",
    "--set",
    "data.generation.dev=20",
    "--set",
    "data.generation.test=50",
    "--set",
    "seeds=[0, 1]",
];

fn with(cmd: &str, extra: &[&str]) -> Vec<String> {
    std::iter::once(cmd)
        .chain(SMALL.iter().copied())
        .chain(extra.iter().copied())
        .map(str::to_owned)
        .collect()
}

fn run_with(dir: &Path, cmd: &str, extra: &[&str]) -> Output {
    let args = with(cmd, extra);
    run(dir, &args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["eval", "--set", "seeds=[]"])), 2);
    assert_eq!(code(&run(dir.path(), &["eval", "--set", "nonsense=1"])), 2);
    assert_eq!(code(&run(dir.path(), &["eval", "--config", "missing.toml"])), 2);
    assert_eq!(code(&run(dir.path(), &["frobnicate"])), 2);
    std::fs::write(dir.path().join("bad.toml"), "rounds = \"many\"\n").unwrap();
    assert_eq!(code(&run(dir.path(), &["iterate", "--config", "bad.toml"])), 2);
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with(dir.path(), "eval", &["--set", "critique_source=none"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(code(&run_with(dir.path(), "gen-data", &[])), 0);
    let o = run_with(dir.path(), "eval", &["--set", "critique_source=rl4f"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("rl4f.json"));
    assert_eq!(code(&run_with(dir.path(), "train-ppo", &[])), 3);
}

#[test]
fn backend_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_with(dir.path(), "gen-data", &[])), 0);
    let o = run_with(dir.path(), "eval", &["--set", "critique_source=direct", "--set", "backend.kind=llm"]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn eval_runs_and_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("exp.toml"),
        "critique_source = \"gold\"\nrounds = 3\n[data]\nfilter = \"incorrect\"\n",
    )
    .unwrap();
    assert_eq!(code(&run_with(dir.path(), "gen-data", &[])), 0);
    let first = run_with(dir.path(), "iterate", &["--config", "exp.toml"]);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    let report = dir.path().join("runs/default/iterate_gold.json");
    let a = std::fs::read(&report).unwrap();
    let second = run_with(dir.path(), "iterate", &["--config", "exp.toml"]);
    assert_eq!(code(&second), 0);
    assert_eq!(a, std::fs::read(&report).unwrap());
    assert_eq!(first.stdout, second.stdout);
    assert!(dir.path().join("runs/default/iterate_gold.txt").exists());
    let stdout = String::from_utf8_lossy(&first.stdout);
    assert!(stdout.contains("critique source: gold") && stdout.contains("decreased"));
}

#[test]
fn training_subcommands_write_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let ppo = ["--set", "ppo.total_steps=128", "--set", "ppo.steps_per_update=64", "--set", "warm_start.epochs=1"];
    assert_eq!(code(&run_with(dir.path(), "train-sup", &ppo)), 0);
    assert!(dir.path().join("runs/default/warm_start.json").exists());
    assert_eq!(code(&run_with(dir.path(), "train-ppo", &ppo)), 0);
    assert!(dir.path().join("runs/default/rl4f.json").exists());
    assert!(dir.path().join("runs/default/curve.csv").exists());
    let o = run_with(dir.path(), "eval", &["--set", "critique_source=rl4f"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut sweep = ppo.to_vec();
    sweep.extend(["--set", "sweep.hidden=[8]"]);
    assert_eq!(code(&run_with(dir.path(), "sweep", &sweep)), 0);
    assert!(dir.path().join("runs/default/sweep.json").exists());
}
