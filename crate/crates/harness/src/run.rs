//! Training and evaluation runs and the files they leave behind.
//!
//! ```text
//! OUT/
//!   manifest.json      config hash, versions, seeds, final scores
//!   config.toml        resolved config
//!   curves.csv         every evaluation of every seed (long form)
//!   summary.csv        final evaluation per seed and opponent
//!   seed-N/
//!     policy.txt       trained table
//!     curve.csv        one row per evaluation point, one score column per opponent
//!     curve_events.csv event counts behind each evaluation
//!     eval.csv         final evaluation
//!     logs/OPP-J.jsonl first `log_episodes` final-evaluation rounds
//! ```
//!
//! Nothing written depends on wall-clock time, so equal configs give
//! byte-identical directories.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ctf_core::engine::EventCounts;
use ctf_core::learning::{
    evaluate, run_curriculum, run_interleaved, train, CurvePoint, EvalReport, PolicySnapshot, SnapshotMeta,
    TrainOutput,
};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{dump_config, ExperimentConfig, Regime};
use crate::error::{Error, Result};

pub const OUT_ROOT_ENV: &str = "CTF_OUT_ROOT";
pub const DEFAULT_OUT_ROOT: &str = "runs";

/// Result of training one seed.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub output: TrainOutput<f64>,
    /// Final greedy evaluation against each opponent of the regime.
    pub final_evals: Vec<(String, EvalReport<f64>)>,
}

pub fn train_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedRun> {
    let setup = cfg.setup();
    let mut tc = cfg.train.clone();
    tc.seed = seed;
    let output = match &cfg.regime {
        Regime::Single { opponent } => train(&setup, &cfg.opponent(opponent)?, &tc)?,
        Regime::Interleaved { opponents } => {
            let specs = opponents.iter().map(|o| cfg.opponent(o)).collect::<Result<Vec<_>>>()?;
            run_interleaved(&setup, &specs, &tc)?
        }
        Regime::Curriculum { .. } => run_curriculum(&setup, &cfg.curriculum()?, &tc)?,
    };
    let final_evals = evaluate_all(cfg, &output.snapshot, seed)?;
    Ok(SeedRun {
        seed,
        output,
        final_evals,
    })
}

/// Greedy evaluation of `policy` against every opponent of the regime, with
/// the same episode seeds the learning curve uses.
pub fn evaluate_all(cfg: &ExperimentConfig, policy: &PolicySnapshot<f64>, seed: u64) -> Result<Vec<(String, EvalReport<f64>)>> {
    let setup = cfg.setup();
    let record = cfg.log_episodes > 0;
    cfg.regime
        .opponents()
        .into_iter()
        .map(|o| {
            let mut report = evaluate(policy, &setup, &cfg.opponent(&o)?, cfg.train.eval_episodes, seed, record)?;
            report.logs.truncate(cfg.log_episodes as usize);
            Ok((o, report))
        })
        .collect()
}

/// Untrained policy shaped for `cfg`.
pub fn zero_policy(cfg: &ExperimentConfig) -> PolicySnapshot<f64> {
    let meta = SnapshotMeta {
        episodes_trained: 0,
        opponents_seen: Vec::new(),
        reward_profile: cfg.profile.clone(),
        heading_sectors: cfg.field.heading_sectors,
    };
    PolicySnapshot::zero(cfg.discretizer.clone(), cfg.field.action_count(), meta)
}

pub fn load_policy(path: &Path) -> Result<PolicySnapshot<f64>> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    PolicySnapshot::from_text(&text).map_err(|e| match e {
        ctf_core::Error::Format { line, message } => Error::Parse {
            path: path.display().to_string(),
            line,
            message,
        },
        other => other.into(),
    })
}

/// Output directory: explicit path, then the config's `output`, then
/// `$CTF_OUT_ROOT/<name>`.
pub fn resolve_out(explicit: Option<&Path>, cfg: &ExperimentConfig, name: &str) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    if let Some(p) = &cfg.output {
        return p.clone();
    }
    let root = std::env::var_os(OUT_ROOT_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT), PathBuf::from);
    root.join(name)
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    Sha256::digest(dump_config(cfg).as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    protocol_version: &'static str,
    command: &'a str,
    config_sha256: String,
    config_file: &'static str,
    seeds: &'a [u64],
    runs: Vec<RunEntry>,
}

#[derive(Debug, Serialize)]
struct RunEntry {
    seed: u64,
    dir: String,
    final_scores: Vec<(String, f64)>,
}

/// Trains every seed (in parallel) and writes the artifact tree under `out`.
pub fn cmd_train(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<SeedRun>> {
    cfg.validate()?;
    prepare_dir(out)?;
    let runs: Vec<SeedRun> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .seeds
            .iter()
            .map(|&seed| {
                scope.spawn(move || -> Result<SeedRun> {
                    let run = train_seed(cfg, seed)?;
                    write_seed_dir(cfg, &run, &out.join(seed_dir(seed)))?;
                    Ok(run)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training worker panicked"))
            .collect::<Result<Vec<_>>>()
    })?;

    write_file(&out.join("config.toml"), dump_config(cfg).as_bytes())?;
    let mut curves = csv_writer();
    curves
        .write_record(["seed", "stage", "episode", "opponent", "mean_score"])
        .expect("in-memory CSV");
    for run in &runs {
        for p in &run.output.curve {
            curves
                .write_record([
                    run.seed.to_string(),
                    p.stage.to_string(),
                    p.episode.to_string(),
                    p.opponent.clone(),
                    p.mean_score.to_string(),
                ])
                .expect("in-memory CSV");
        }
    }
    write_file(&out.join("curves.csv"), &finish_csv(curves))?;
    let mut summary = csv_writer();
    summary
        .write_record(["seed", "opponent", "episodes", "mean_score"])
        .expect("in-memory CSV");
    for run in &runs {
        for (o, r) in &run.final_evals {
            summary
                .write_record([run.seed.to_string(), o.clone(), r.scores.len().to_string(), r.mean_score.to_string()])
                .expect("in-memory CSV");
        }
    }
    write_file(&out.join("summary.csv"), &finish_csv(summary))?;
    let entries = runs
        .iter()
        .map(|r| RunEntry {
            seed: r.seed,
            dir: seed_dir(r.seed),
            final_scores: r.final_evals.iter().map(|(o, e)| (o.clone(), e.mean_score)).collect(),
        })
        .collect();
    write_manifest(cfg, "train", entries, out)?;
    Ok(runs)
}

/// Evaluates `policy` (or the untrained table) for every seed of `cfg`.
pub fn cmd_eval(cfg: &ExperimentConfig, policy: Option<&PolicySnapshot<f64>>, out: &Path) -> Result<Vec<(u64, Vec<(String, EvalReport<f64>)>)>> {
    cfg.validate()?;
    let zero = zero_policy(cfg);
    let policy = policy.unwrap_or(&zero);
    if policy.q.n_actions() != cfg.field.action_count() || policy.meta.heading_sectors != cfg.field.heading_sectors {
        return Err(Error::Usage(format!(
            "policy has {} actions over {} heading sectors; the field defines {} over {}",
            policy.q.n_actions(),
            policy.meta.heading_sectors,
            cfg.field.action_count(),
            cfg.field.heading_sectors
        )));
    }
    prepare_dir(out)?;
    let mut results = Vec::new();
    let mut entries = Vec::new();
    for &seed in &cfg.seeds {
        let evals = evaluate_all(cfg, policy, seed)?;
        let dir = out.join(seed_dir(seed));
        prepare_dir(&dir)?;
        write_file(&dir.join("eval.csv"), &eval_csv(&evals))?;
        write_logs(&dir, &evals)?;
        entries.push(RunEntry {
            seed,
            dir: seed_dir(seed),
            final_scores: evals.iter().map(|(o, e)| (o.clone(), e.mean_score)).collect(),
        });
        results.push((seed, evals));
    }
    write_file(&out.join("config.toml"), dump_config(cfg).as_bytes())?;
    write_manifest(cfg, "eval", entries, out)?;
    Ok(results)
}

fn write_manifest(cfg: &ExperimentConfig, command: &str, runs: Vec<RunEntry>, out: &Path) -> Result<()> {
    let manifest = Manifest {
        tool: "ctf",
        version: env!("CARGO_PKG_VERSION"),
        protocol_version: ctf_envserver::PROTOCOL_VERSION,
        command,
        config_sha256: config_hash(cfg),
        config_file: "config.toml",
        seeds: &cfg.seeds,
        runs,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write_file(&out.join("manifest.json"), text.as_bytes())
}

pub fn seed_dir(seed: u64) -> String {
    format!("seed-{seed}")
}

fn write_seed_dir(cfg: &ExperimentConfig, run: &SeedRun, dir: &Path) -> Result<()> {
    prepare_dir(dir)?;
    write_file(&dir.join("policy.txt"), run.output.snapshot.to_text().as_bytes())?;
    write_file(&dir.join("curve.csv"), &curve_csv(&run.output.curve, &cfg.regime.opponents()))?;
    write_file(&dir.join("curve_events.csv"), &curve_events_csv(&run.output.curve))?;
    write_file(&dir.join("eval.csv"), &eval_csv(&run.final_evals))?;
    write_logs(dir, &run.final_evals)
}

fn write_logs(dir: &Path, evals: &[(String, EvalReport<f64>)]) -> Result<()> {
    if evals.iter().all(|(_, r)| r.logs.is_empty()) {
        return Ok(());
    }
    let logs = dir.join("logs");
    prepare_dir(&logs)?;
    for (o, r) in evals {
        for (j, log) in r.logs.iter().enumerate() {
            write_file(&logs.join(format!("{o}-{j:03}.jsonl")), log.to_jsonl_string().as_bytes())?;
        }
    }
    Ok(())
}

/// Wide learning curve: one row per (stage, episode), one score column per
/// opponent. Cells are empty where an opponent was not evaluated.
pub fn curve_csv(curve: &[CurvePoint], opponents: &[String]) -> Vec<u8> {
    let mut w = csv_writer();
    let mut header = vec!["stage".to_string(), "episode".to_string()];
    header.extend(opponents.iter().map(|o| format!("score_vs_{o}")));
    w.write_record(&header).expect("in-memory CSV");
    let mut i = 0;
    while i < curve.len() {
        let (stage, episode) = (curve[i].stage, curve[i].episode);
        let mut row = vec![String::new(); opponents.len()];
        while i < curve.len() && curve[i].stage == stage && curve[i].episode == episode {
            if let Some(k) = opponents.iter().position(|o| *o == curve[i].opponent) {
                row[k] = curve[i].mean_score.to_string();
            }
            i += 1;
        }
        let mut record = vec![stage.to_string(), episode.to_string()];
        record.extend(row);
        w.write_record(&record).expect("in-memory CSV");
    }
    finish_csv(w)
}

const COUNT_COLUMNS: [&str; 7] = [
    "tag",
    "retrieval_tag",
    "grab",
    "capture",
    "out_of_bounds_attacker",
    "out_of_bounds_defender",
    "defender_tagged",
];

fn counts_row(c: &EventCounts) -> [String; 7] {
    [
        c.tag,
        c.retrieval_tag,
        c.grab,
        c.capture,
        c.out_of_bounds_attacker,
        c.out_of_bounds_defender,
        c.defender_tagged,
    ]
    .map(|v| v.to_string())
}

fn curve_events_csv(curve: &[CurvePoint]) -> Vec<u8> {
    let mut w = csv_writer();
    let mut header = vec!["stage", "episode", "opponent", "mean_score"];
    header.extend(COUNT_COLUMNS);
    w.write_record(&header).expect("in-memory CSV");
    for p in curve {
        let mut row = vec![p.stage.to_string(), p.episode.to_string(), p.opponent.clone(), p.mean_score.to_string()];
        row.extend(counts_row(&p.counts));
        w.write_record(&row).expect("in-memory CSV");
    }
    finish_csv(w)
}

fn eval_csv(evals: &[(String, EvalReport<f64>)]) -> Vec<u8> {
    let mut w = csv_writer();
    let mut header = vec!["opponent", "episodes", "mean_score"];
    header.extend(COUNT_COLUMNS);
    w.write_record(&header).expect("in-memory CSV");
    for (o, r) in evals {
        let mut row = vec![o.clone(), r.scores.len().to_string(), r.mean_score.to_string()];
        row.extend(counts_row(&r.counts));
        w.write_record(&row).expect("in-memory CSV");
    }
    finish_csv(w)
}

pub(crate) fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

pub(crate) fn finish_csv(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("in-memory CSV")
}

pub(crate) fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::io(dir))?;
    let meta = fs::metadata(dir).map_err(Error::io(dir))?;
    if meta.permissions().readonly() {
        return Err(Error::Io {
            path: dir.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::PermissionDenied, "output directory is not writable"),
        });
    }
    Ok(())
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(Error::io(path))?;
    f.write_all(bytes).map_err(Error::io(path))
}
