use std::path::PathBuf;
use std::process::Command;

use stardis::cli::parse_seeds;
use stardis::config::{parse_config, to_toml};
use stardis_core::engine::ScenarioConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stardis"))
}

fn repo_file(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("stardis-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn short_config(dir: &std::path::Path, horizon: u32) -> PathBuf {
    let mut c = ScenarioConfig::default();
    c.scenario.horizon = horizon;
    c.geometry.pass_slots = horizon;
    c.geometry.episode_slots = horizon;
    c.geometry.center_slot = horizon as f64 / 2.0;
    c.deception.prediction_slots = horizon.min(200);
    let path = dir.join("short.toml");
    std::fs::write(&path, to_toml(&c).unwrap()).unwrap();
    path
}

#[test]
fn shipped_config_is_the_reference_scenario() {
    let text = std::fs::read_to_string(repo_file("configs/default.toml")).unwrap();
    assert_eq!(parse_config(&text).unwrap(), ScenarioConfig::default());
}

#[test]
fn toml_round_trips() {
    let c = ScenarioConfig::default();
    assert_eq!(parse_config(&to_toml(&c).unwrap()).unwrap(), c);
}

#[test]
fn invalid_scenarios_exit_with_code_two() {
    let dir = scratch("invalid");
    let unknown = dir.join("unknown.toml");
    std::fs::write(&unknown, "bogus = 1\n").unwrap();
    let mut c = ScenarioConfig::default();
    c.deception.threshold = 1.5;
    let invalid = dir.join("invalid.toml");
    std::fs::write(&invalid, to_toml(&c).unwrap()).unwrap();
    for path in [&unknown, &invalid, &dir.join("missing.toml")] {
        let out = bin().args(["simulate", "--config"]).arg(path).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn simulate_traces_are_byte_identical_across_runs() {
    let dir = scratch("determinism");
    let cfg = short_config(&dir, 200);
    let run = |sub: &str| {
        let out = dir.join(sub);
        let s = bin().args(["simulate", "--seed", "4", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
        assert!(s.success());
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["slots.csv", "windows.csv", "metrics.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let slots = std::fs::read_to_string(a.join("slots.csv")).unwrap();
    assert!(slots.starts_with("t,x_scan,z,running,omega,signal,budget,snr_pred_db,delay_ms,arrival,snr_db,xi,belief,x_att,a,reward\n"));
    assert_eq!(slots.lines().count(), 201);
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["schema"], 1);
    assert!(manifest["build"].as_str().unwrap().starts_with(env!("CARGO_PKG_VERSION")));
    assert_eq!(manifest["config"]["scenario"]["horizon"], 200);
}

#[test]
fn benchmark_json_echoes_config_and_scheduler_report() {
    let dir = scratch("bench");
    let cfg = short_config(&dir, 150);
    let plans = dir.join("plans.json");
    let s = bin()
        .args(["benchmark", "--seeds", "0..2", "--policies", "fcfs,star", "--quality", "4", "--format", "json", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&dir)
        .arg("--write-plans")
        .arg(&plans)
        .output()
        .unwrap();
    assert!(s.status.success(), "{}", String::from_utf8_lossy(&s.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("benchmark.json")).unwrap()).unwrap();
    assert_eq!(doc["result"]["seeds"], serde_json::json!([0, 1]));
    assert_eq!(doc["result"]["summary"].as_array().unwrap().len(), 2);
    assert_eq!(doc["result"]["scheduler"]["compared"], 4);
    assert_eq!(doc["config"]["scenario"]["horizon"], 150);

    let replay = bin()
        .args(["benchmark", "--seeds", "0", "--policies", "star", "--quality", "0", "--config"])
        .arg(&cfg)
        .arg("--plans")
        .arg(&plans)
        .output()
        .unwrap();
    assert!(replay.status.success(), "{}", String::from_utf8_lossy(&replay.stderr));

    let mut tampered: serde_json::Value = serde_json::from_slice(&std::fs::read(&plans).unwrap()).unwrap();
    tampered[0]["greedy"]["x_scan"][0] = serde_json::json!(!tampered[0]["greedy"]["x_scan"][0].as_bool().unwrap());
    std::fs::write(&plans, tampered.to_string()).unwrap();
    let replay = bin().args(["benchmark", "--seeds", "0", "--policies", "star", "--quality", "0", "--config"]).arg(&cfg).arg("--plans").arg(&plans).output().unwrap();
    assert_eq!(replay.status.code(), Some(1));
}

#[test]
fn persuasion_solve_reads_a_game_file() {
    let dir = scratch("game");
    let game = dir.join("game.toml");
    std::fs::write(
        &game,
        "budget = 0.0\n[game]\nstates = [\"a\", \"b\"]\nactions = [\"wait\", \"attack\"]\npayoffs = [[0.0, 0.0], [1.0, -1.0]]\nprior = [0.5, 0.5]\nsignals = 4\n",
    )
    .unwrap();
    let out = bin().args(["persuasion-solve", "--game"]).arg(&game).output().unwrap();
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((doc["result"]["solution"]["objective"].as_f64().unwrap() - 0.5).abs() < 1e-9);

    let sweep = bin().args(["persuasion-solve", "--sweep", "--game"]).arg(&game).output().unwrap();
    let text = String::from_utf8(sweep.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("budget,objective,cost"));
    assert_eq!(text.lines().count(), 51);

    let bad = bin().args(["persuasion-solve", "--budget", "-1", "--game"]).arg(&game).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn channel_validate_emits_a_density_table() {
    let out = bin().args(["channel-validate", "--points", "50", "--draws", "5000"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("r,pdf,cdf"));
    assert_eq!(text.lines().count(), 51);
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((last[2] - 1.0).abs() < 1e-6);
}

#[test]
fn seed_ranges_parse() {
    assert_eq!(parse_seeds("0..20").unwrap(), 0..20);
    assert_eq!(parse_seeds("7").unwrap(), 7..8);
    assert!(parse_seeds("5..5").is_err());
    assert!(parse_seeds("a..b").is_err());
}
