//! Replayable per-step record of a round, serialized as JSON lines: one
//! header object followed by one object per step.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::engine::{
    trajectory_score, Action, EventCounts, EventKind, FieldConfig, GameState,
    PlayerState, Role, TerminalCause,
};
use crate::env::{CtfEnv, EnvConfig, EnvStep};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::rewards::RewardBreakdown;
use crate::Scalar;

pub const LOG_FORMAT: &str = "ctf-episode-log";
pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PlayerSummary<T> {
    pub position: Vec2<T>,
    pub heading: T,
    pub speed: T,
    pub has_flag: bool,
    pub returning_to_base: bool,
}

impl<T: Scalar> From<&PlayerState<T>> for PlayerSummary<T> {
    fn from(p: &PlayerState<T>) -> Self {
        Self {
            position: p.position,
            heading: p.heading,
            speed: p.speed,
            has_flag: p.has_flag,
            returning_to_base: p.returning_to_base,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct StateSummary<T> {
    pub attacker: PlayerSummary<T>,
    pub defender: PlayerSummary<T>,
    pub flag_grabbed: bool,
}

impl<T: Scalar> From<&GameState<T>> for StateSummary<T> {
    fn from(s: &GameState<T>) -> Self {
        Self {
            attacker: (&s.attacker).into(),
            defender: (&s.defender).into(),
            flag_grabbed: s.flag_grabbed,
        }
    }
}

/// First line of a log: everything needed to re-run the round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LogHeader<T> {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub learner: Role,
    pub config: EnvConfig<T>,
    pub initial: StateSummary<T>,
}

impl<T: Scalar> LogHeader<T> {
    pub fn new(seed: u64, config: &EnvConfig<T>, initial: &GameState<T>) -> Self {
        Self {
            format: LOG_FORMAT.to_string(),
            version: LOG_VERSION,
            seed,
            learner: Role::Defender,
            config: config.clone(),
            initial: initial.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RoleRewards<T> {
    pub attacker: T,
    pub defender: T,
}

/// One transition. `state` is the state after the step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct StepRecord<T> {
    pub step: u32,
    pub attacker_action: Action,
    pub defender_action: Action,
    pub state: StateSummary<T>,
    pub reward: RoleRewards<T>,
    pub breakdown: RewardBreakdown<T>,
    pub events: Vec<EventKind>,
    pub terminal: Option<TerminalCause>,
}

impl<T: Scalar> StepRecord<T> {
    pub fn new(after: &GameState<T>, defender_action: Action, out: &EnvStep<T>) -> Self {
        Self {
            step: after.step_count,
            attacker_action: out.attacker_action,
            defender_action,
            state: after.into(),
            reward: RoleRewards {
                attacker: out.attacker_reward,
                defender: out.reward.total(),
            },
            breakdown: out.reward,
            events: out.events.iter().map(|e| e.kind).collect(),
            terminal: out.terminal,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog<T> {
    pub header: LogHeader<T>,
    pub steps: Vec<StepRecord<T>>,
}

impl<T: Scalar> EpisodeLog<T> {
    pub fn terminal(&self) -> Option<TerminalCause> {
        self.steps.last().and_then(|s| s.terminal)
    }

    pub fn event_counts(&self) -> EventCounts {
        let mut counts = EventCounts::default();
        for step in &self.steps {
            for kind in &step.events {
                counts.record(*kind);
            }
        }
        counts
    }

    /// Trajectory score of `role` from the aggregated event counts.
    pub fn score(&self, role: Role) -> i64 {
        trajectory_score(&self.event_counts().for_role(role), role)
    }

    /// Sum of per-step event points of `role`.
    pub fn per_step_points(&self, role: Role) -> i64 {
        self.steps
            .iter()
            .map(|s| s.events.iter().map(|k| k.points_for(role)).sum::<i64>())
            .sum()
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let line = |e: serde_json::Error| Error::Io(e.into());
        serde_json::to_writer(&mut w, &self.header).map_err(line)?;
        w.write_all(b"\n")?;
        for step in &self.steps {
            serde_json::to_writer(&mut w, step).map_err(line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut header = None;
        let mut steps = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let err = |e: serde_json::Error| Error::Format {
                line: line_no,
                message: e.to_string(),
            };
            if header.is_none() {
                let h: LogHeader<T> = serde_json::from_str(&line).map_err(err)?;
                if h.format != LOG_FORMAT {
                    return Err(Error::Format {
                        line: line_no,
                        message: format!("not an episode log (format `{}`)", h.format),
                    });
                }
                header = Some(h);
            } else {
                steps.push(serde_json::from_str(&line).map_err(err)?);
            }
        }
        let header = header.ok_or(Error::Format {
            line: 1,
            message: "empty log".into(),
        })?;
        Ok(Self { header, steps })
    }
}

/// A step whose recorded data disagrees with the re-simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    /// 1-based step number; 0 refers to the initial state.
    pub step: u32,
    pub fields: Vec<&'static str>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub steps: usize,
    pub mismatches: Vec<Mismatch>,
    /// Defender trajectory score recomputed from re-simulated events.
    pub recomputed_score: i64,
    /// Defender trajectory score from the logged events.
    pub logged_score: i64,
}

impl ReplayReport {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty() && self.recomputed_score == self.logged_score
    }
}

/// Re-simulates `log` from its seed and logged defender actions, and
/// compares every step. `field_override` replays under a different field.
pub fn replay<T: Scalar>(log: &EpisodeLog<T>, field_override: Option<&FieldConfig<T>>) -> Result<ReplayReport> {
    let mut config = log.header.config.clone();
    if let Some(field) = field_override {
        config.field = field.clone();
    }
    let mut env = CtfEnv::new(config)?;
    let initial = env.reset(log.header.seed)?;
    let mut mismatches = Vec::new();
    if StateSummary::from(initial) != log.header.initial {
        mismatches.push(Mismatch {
            step: 0,
            fields: vec!["initial"],
        });
    }
    let mut counts = EventCounts::default();
    for record in &log.steps {
        if !env.in_episode() {
            mismatches.push(Mismatch {
                step: record.step,
                fields: vec!["terminal"],
            });
            break;
        }
        let out = env.step(record.defender_action)?;
        counts.record_all(&out.events);
        let replayed = StepRecord::new(env.state().expect("stepped"), record.defender_action, &out);
        let mut fields = Vec::new();
        if replayed.step != record.step {
            fields.push("step");
        }
        if replayed.attacker_action != record.attacker_action {
            fields.push("attacker_action");
        }
        if replayed.state != record.state {
            fields.push("state");
        }
        if replayed.events != record.events {
            fields.push("events");
        }
        if replayed.reward != record.reward {
            fields.push("reward");
        }
        if replayed.breakdown != record.breakdown {
            fields.push("breakdown");
        }
        if replayed.terminal != record.terminal {
            fields.push("terminal");
        }
        if !fields.is_empty() {
            mismatches.push(Mismatch {
                step: record.step,
                fields,
            });
        }
    }
    if env.in_episode() && !mismatches.iter().any(|m| m.fields.contains(&"terminal")) {
        mismatches.push(Mismatch {
            step: log.steps.last().map_or(0, |s| s.step),
            fields: vec!["truncated"],
        });
    }
    Ok(ReplayReport {
        steps: log.steps.len(),
        mismatches,
        recomputed_score: trajectory_score(&counts.for_role(Role::Defender), Role::Defender),
        logged_score: log.score(Role::Defender),
    })
}
