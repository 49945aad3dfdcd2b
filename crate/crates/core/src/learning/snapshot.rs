//! Trained policy and its flat-file form.
//!
//! ```text
//! ctf-policy 1
//! discretizer_hash 5f0e...            FNV-1a 64 of the discretizer JSON
//! discretizer {"opponent_distance_edges":[...],...}
//! meta {"episodes_trained":5000,...}
//! shape 384 32
//! entries 117
//! 12 3 -0.25 41                       state action value visits
//! ...
//! ```
//!
//! Entries list every pair with a nonzero value or visit count in ascending
//! (state, action) order; values use the shortest round-trip decimal form.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::discretize::DiscretizerConfig;
use super::qtable::QTable;
use crate::engine::{Action, FeatureVector, GameState};
use crate::error::{Error, Result};
use crate::Scalar;

pub const SNAPSHOT_FORMAT: &str = "ctf-policy";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub episodes_trained: u64,
    /// Opponent labels in the order first met.
    pub opponents_seen: Vec<String>,
    pub reward_profile: String,
    pub heading_sectors: usize,
}

impl SnapshotMeta {
    pub fn record_opponent(&mut self, label: &str) {
        if !self.opponents_seen.iter().any(|o| o == label) {
            self.opponents_seen.push(label.to_string());
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicySnapshot<T> {
    pub q: QTable<T>,
    pub discretizer: DiscretizerConfig<T>,
    pub meta: SnapshotMeta,
}

impl<T: Scalar> PolicySnapshot<T> {
    /// Untrained snapshot: every value zero.
    pub fn zero(discretizer: DiscretizerConfig<T>, n_actions: usize, meta: SnapshotMeta) -> Self {
        Self {
            q: QTable::new(discretizer.state_count(), n_actions),
            discretizer,
            meta,
        }
    }

    pub fn state_index(&self, state: &GameState<T>, features: &FeatureVector<T>) -> Result<usize> {
        self.discretizer.discretize(features, state.flag_grabbed)
    }

    /// Greedy action.
    pub fn act(&self, state: &GameState<T>, features: &FeatureVector<T>) -> Result<Action> {
        let s = self.state_index(state, features)?;
        Ok(Action::from_index(self.q.argmax(s), self.meta.heading_sectors))
    }

    pub fn to_text(&self) -> String {
        let disc = serde_json::to_string(&self.discretizer).expect("discretizer serializes");
        let meta = serde_json::to_string(&self.meta).expect("meta serializes");
        let entries: Vec<_> = self.q.nonzero_entries().collect();
        let mut out = String::new();
        let _ = writeln!(out, "{SNAPSHOT_FORMAT} {SNAPSHOT_VERSION}");
        let _ = writeln!(out, "discretizer_hash {:016x}", fnv1a(disc.as_bytes()));
        let _ = writeln!(out, "discretizer {disc}");
        let _ = writeln!(out, "meta {meta}");
        let _ = writeln!(out, "shape {} {}", self.q.n_states(), self.q.n_actions());
        let _ = writeln!(out, "entries {}", entries.len());
        for (s, a, v, n) in entries {
            let _ = writeln!(out, "{s} {a} {v} {n}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut field = |key: &str| -> Result<(usize, String)> {
            let (n, line) = lines.next().ok_or(Error::Format {
                line: 0,
                message: format!("missing `{key}` line"),
            })?;
            let rest = line.strip_prefix(key).and_then(|r| r.strip_prefix(' '));
            rest.map(|r| (n, r.to_string())).ok_or(Error::Format {
                line: n,
                message: format!("expected `{key}`"),
            })
        };
        let (n, version) = field(SNAPSHOT_FORMAT)?;
        if version.trim() != SNAPSHOT_VERSION.to_string() {
            return Err(Error::Format {
                line: n,
                message: format!("unsupported snapshot version {version}"),
            });
        }
        let (_, hash) = field("discretizer_hash")?;
        let (n, disc_json) = field("discretizer")?;
        if format!("{:016x}", fnv1a(disc_json.as_bytes())) != hash.trim() {
            return Err(Error::Format {
                line: n,
                message: "discretizer does not match its hash".into(),
            });
        }
        let json_err = |n: usize| move |e: serde_json::Error| Error::Format {
            line: n,
            message: e.to_string(),
        };
        let discretizer: DiscretizerConfig<T> = serde_json::from_str(&disc_json).map_err(json_err(n))?;
        discretizer.validate()?;
        let (n, meta_json) = field("meta")?;
        let meta: SnapshotMeta = serde_json::from_str(&meta_json).map_err(json_err(n))?;
        let (n, shape) = field("shape")?;
        let dims: Vec<usize> = shape
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Format {
                line: n,
                message: "shape needs two integers".into(),
            })?;
        let [n_states, n_actions] = dims[..] else {
            return Err(Error::Format {
                line: n,
                message: "shape needs two integers".into(),
            });
        };
        if n_states != discretizer.state_count() {
            return Err(Error::Format {
                line: n,
                message: format!(
                    "shape has {n_states} states, discretizer defines {}",
                    discretizer.state_count()
                ),
            });
        }
        let (n, count) = field("entries")?;
        let count: usize = count.trim().parse().map_err(|_| Error::Format {
            line: n,
            message: "entry count must be an integer".into(),
        })?;
        let mut q = QTable::new(n_states, n_actions);
        let mut seen = 0;
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |m: &str| Error::Format {
                line: n,
                message: m.to_string(),
            };
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [s, a, v, visits] = parts[..] else {
                return Err(bad("entry needs `state action value visits`"));
            };
            let s: usize = s.parse().map_err(|_| bad("bad state index"))?;
            let a: usize = a.parse().map_err(|_| bad("bad action index"))?;
            let v: f64 = v.parse().map_err(|_| bad("bad value"))?;
            let visits: u64 = visits.parse().map_err(|_| bad("bad visit count"))?;
            if s >= n_states || a >= n_actions {
                return Err(bad("entry index out of range"));
            }
            if !v.is_finite() {
                return Err(bad("value must be finite"));
            }
            q.set(s, a, T::lit(v));
            q.set_visits(s, a, visits);
            seen += 1;
        }
        if seen != count {
            return Err(Error::Format {
                line: 0,
                message: format!("header announces {count} entries, found {seen}"),
            });
        }
        Ok(Self {
            q,
            discretizer,
            meta,
        })
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(*b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}
