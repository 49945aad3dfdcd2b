use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ctf_harness::parse_config;

const SMALL: &str = r#"
seeds = [4, 9]
profile = "BTRS"
opponent = "att_e"
log_episodes = 3

[field]
preset = "reduced"

[train]
episodes = 60
eval_every = 30
eval_episodes = 5
"#;

fn ctf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctf"))
        .args(args)
        .env_remove("CTF_OUT_ROOT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn train_twice_is_byte_identical_and_replays_clean() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = ctf(&["train", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (fa, fb) = (files(&a), files(&b));
    assert!(fa.iter().any(|(p, _)| p.ends_with("seed-9/policy.txt")));
    assert!(fa.iter().any(|(p, _)| p.ends_with("seed-4/logs/att_e-002.jsonl")));
    assert_eq!(fa, fb);

    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["seeds"], serde_json::json!([4, 9]));

    let o = ctf(&["replay", a.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).ends_with("6 logs, 0 mismatches\n"), "{}", stdout(&o));
}

#[test]
fn replay_flags_edits_and_field_changes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let out = tmp.path().join("run");
    assert!(ctf(&["train", "--config", cfg.to_str().unwrap(), "--seed", "1", "--out", out.to_str().unwrap()])
        .status
        .success());
    let log = out.join("seed-1/logs/att_e-000.jsonl");
    let text = fs::read_to_string(&log).unwrap();

    // Tamper with the defender reward of step 2 (line 3).
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut step: serde_json::Value = serde_json::from_str(&lines[2]).unwrap();
    let r = step["reward"]["defender"].as_f64().unwrap();
    step["reward"]["defender"] = serde_json::json!(r + 1.0);
    lines[2] = step.to_string();
    let edited = tmp.path().join("edited.jsonl");
    fs::write(&edited, lines.join("\n") + "\n").unwrap();
    let o = ctf(&["replay", edited.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let report = stdout(&o);
    assert!(report.contains("1 mismatches") && report.contains("step 2: reward"), "{report}");

    // A wider tag range changes which steps score.
    let wide = write_config(tmp.path(), "wide.toml", "[field]\npreset = \"reduced\"\ntag_range = 5.0\nthreat_range = 6.0\n");
    let all = out.join("seed-1/logs");
    let o = ctf(&["replay", all.to_str().unwrap(), "--config", wide.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));

    // Corrupt JSON is reported with its line number.
    lines[3] = "{\"step\": oops".into();
    let broken = tmp.path().join("broken.jsonl");
    fs::write(&broken, lines.join("\n")).unwrap();
    let o = ctf(&["replay", broken.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("broken.jsonl:4:"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn curriculum_curve_has_both_opponents_in_stage_two() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
seeds = [2]
regime = "curriculum"
log_episodes = 0
[[stages]]
opponent = "att_e"
episodes = 20
[[stages]]
opponent = "att_h"
episodes = 20
[field]
preset = "reduced"
[train]
eval_every = 10
eval_episodes = 3
"#;
    let cfg = write_config(tmp.path(), "cur.toml", text);
    let out = tmp.path().join("cur");
    let o = ctf(&["train", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("seed-2/curve.csv")).unwrap();
    let mut rows = csv.lines();
    assert_eq!(rows.next(), Some("stage,episode,score_vs_att_e,score_vs_att_h"));
    for row in rows {
        let cells: Vec<&str> = row.split(',').collect();
        match cells[0] {
            "0" => assert!(!cells[2].is_empty() && cells[3].is_empty(), "{row}"),
            "1" => assert!(!cells[2].is_empty() && !cells[3].is_empty(), "{row}"),
            _ => panic!("{row}"),
        }
    }
}

#[test]
fn heatmaps_from_logs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let out = tmp.path().join("run");
    assert!(ctf(&["train", "--config", cfg.to_str().unwrap(), "--seed", "3", "--out", out.to_str().unwrap()])
        .status
        .success());
    let logs = out.join("seed-3/logs");
    let steps: u64 = fs::read_dir(&logs)
        .unwrap()
        .map(|e| fs::read_to_string(e.unwrap().path()).unwrap().lines().count() as u64 - 1)
        .sum();
    for kind in ["position", "action"] {
        let o = ctf(&["heatmap", logs.to_str().unwrap(), "--kind", kind]);
        assert!(o.status.success());
        let text = stdout(&o);
        let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
        let col = header.iter().position(|h| *h == "count").unwrap();
        let total: u64 = text.lines().skip(1).map(|l| l.split(',').nth(col).unwrap().parse::<u64>().unwrap()).sum();
        assert_eq!(total, steps, "{kind}");
    }
}

#[test]
fn dump_config_reloads_equal() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let o = ctf(&["dump-config", "--config", cfg.to_str().unwrap(), "--profile", "2BTRS+EFF", "--gradient-scale", "3"]);
    assert!(o.status.success());
    let dumped = parse_config(&stdout(&o)).unwrap();
    assert_eq!(dumped.reward.gradient_scale, 3.0);
    assert!(dumped.reward.terms.energy);
    let again = write_config(tmp.path(), "again.toml", &stdout(&o));
    let o2 = ctf(&["dump-config", "--config", again.to_str().unwrap()]);
    assert_eq!(stdout(&o), stdout(&o2));

    let o = ctf(&["dump-config", "--json", "--opponent", "att_h"]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["opponent"]["kind"], "att_h");
}

#[test]
fn config_errors_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = write_config(tmp.path(), "empty.toml", "seeds = []\n");
    let o = ctf(&["train", "--config", empty.to_str().unwrap(), "--out", tmp.path().join("x").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("seeds"));
    let o = ctf(&["train", "--config", tmp.path().join("missing.toml").to_str().unwrap()]);
    assert!(!o.status.success());
    let bad = write_config(tmp.path(), "bad.toml", "seeds = [1]\nprofile = \"XRS\"\n");
    let o = ctf(&["dump-config", "--config", bad.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("XRS"));
}

#[test]
fn eval_untrained_and_trained() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let out = tmp.path().join("run");
    assert!(ctf(&["train", "--config", cfg.to_str().unwrap(), "--seed", "5", "--out", out.to_str().unwrap()])
        .status
        .success());
    let policy = out.join("seed-5/policy.txt");
    let ev = tmp.path().join("ev");
    let o = ctf(&[
        "eval", "--config", cfg.to_str().unwrap(), "--seed", "5",
        "--policy", policy.to_str().unwrap(), "--out", ev.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    // Same policy, same seed: the final training evaluation is reproduced.
    assert_eq!(
        fs::read(ev.join("seed-5/eval.csv")).unwrap(),
        fs::read(out.join("seed-5/eval.csv")).unwrap()
    );
    let o = ctf(&["eval", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("zero").to_str().unwrap()]);
    assert!(o.status.success());
}
