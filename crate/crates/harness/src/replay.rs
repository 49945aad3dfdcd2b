use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use ctf_core::engine::FieldConfig;
use ctf_core::episode_log::{replay, EpisodeLog, ReplayReport};

use crate::error::{Error, Result};

pub fn read_log(path: &Path) -> Result<EpisodeLog<f64>> {
    let f = fs::File::open(path).map_err(Error::io(path))?;
    EpisodeLog::read_jsonl(BufReader::new(f)).map_err(|e| match e {
        ctf_core::Error::Format { line, message } => Error::Parse {
            path: path.display().to_string(),
            line,
            message,
        },
        other => other.into(),
    })
}

/// Expands directories into the `.jsonl` files below them, sorted.
pub fn collect_logs(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            walk(p, &mut out)?;
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(Error::io(dir))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()
        .map_err(Error::io(dir))?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            walk(&p, out)?;
        } else if p.extension().is_some_and(|e| e == "jsonl") {
            out.push(p);
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ReplaySummary {
    pub reports: Vec<(PathBuf, ReplayReport)>,
}

impl ReplaySummary {
    pub fn mismatches(&self) -> usize {
        self.reports
            .iter()
            .map(|(_, r)| r.mismatches.len() + usize::from(r.recomputed_score != r.logged_score))
            .sum()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (path, r) in &self.reports {
            let _ = writeln!(
                s,
                "{}: {} steps, score logged {} recomputed {}, {} mismatches",
                path.display(),
                r.steps,
                r.logged_score,
                r.recomputed_score,
                r.mismatches.len()
            );
            for m in &r.mismatches {
                let _ = writeln!(s, "  step {}: {}", m.step, m.fields.join(", "));
            }
        }
        let _ = writeln!(s, "{} logs, {} mismatches", self.reports.len(), self.mismatches());
        s
    }
}

/// Re-simulates every log, optionally under a different field.
pub fn cmd_replay(paths: &[PathBuf], field: Option<&FieldConfig<f64>>) -> Result<ReplaySummary> {
    let files = collect_logs(paths)?;
    if files.is_empty() {
        return Err(Error::Usage("no episode logs found".into()));
    }
    let reports = files
        .into_iter()
        .map(|p| {
            let log = read_log(&p)?;
            let report = replay(&log, field)?;
            Ok((p, report))
        })
        .collect::<Result<_>>()?;
    Ok(ReplaySummary { reports })
}
