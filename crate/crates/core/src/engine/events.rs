use std::fmt;

use serde::{Deserialize, Serialize};

use crate::engine::{FieldConfig, GameState, Role};
use crate::geometry::Vec2;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// Defender tags the attacker in the defender's zone before a grab.
    Tag,
    /// Same geometry as `Tag`, after the flag has been grabbed.
    RetrievalTag,
    Grab,
    Capture,
    OutOfBoundsAttacker,
    OutOfBoundsDefender,
    /// Attacker tags the defender inside the attacker's zone.
    DefenderTagged,
}

impl EventKind {
    pub const ALL: [EventKind; 7] = [
        EventKind::Tag,
        EventKind::RetrievalTag,
        EventKind::Grab,
        EventKind::Capture,
        EventKind::OutOfBoundsAttacker,
        EventKind::OutOfBoundsDefender,
        EventKind::DefenderTagged,
    ];

    /// Points awarded to (attacker, defender).
    pub fn points(self) -> (i64, i64) {
        match self {
            EventKind::Tag | EventKind::OutOfBoundsAttacker => (-1, 2),
            EventKind::RetrievalTag => (-2, 1),
            EventKind::Grab => (1, -1),
            EventKind::Capture => (2, -2),
            EventKind::DefenderTagged | EventKind::OutOfBoundsDefender => (2, -2),
        }
    }

    pub fn points_for(self, role: Role) -> i64 {
        let (att, def) = self.points();
        match role {
            Role::Attacker => att,
            Role::Defender => def,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EventKind::Tag => "tag",
            EventKind::RetrievalTag => "retrieval_tag",
            EventKind::Grab => "grab",
            EventKind::Capture => "capture",
            EventKind::OutOfBoundsAttacker => "out_of_bounds_attacker",
            EventKind::OutOfBoundsDefender => "out_of_bounds_defender",
            EventKind::DefenderTagged => "defender_tagged",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GameEvent<T> {
    pub kind: EventKind,
    pub step: u32,
    pub attacker_position: Vec2<T>,
    pub defender_position: Vec2<T>,
}

/// Detects the scoring events of the transition `before -> after`.
///
/// Geometry is read from `after`; flag possession and the returning-to-base
/// flags from `before`, so a player that is already driving home can neither
/// tag, be tagged, grab, nor re-trigger out-of-bounds. Simultaneous attacker
/// events resolve by priority Capture > Tag/RetrievalTag > Grab >
/// OutOfBoundsAttacker; on the defender side DefenderTagged suppresses
/// OutOfBoundsDefender. Zones exclude out-of-bounds points, so the two tag
/// families can never fire together.
pub fn detect_events<T: Scalar>(
    before: &GameState<T>,
    after: &GameState<T>,
    config: &FieldConfig<T>,
) -> Vec<GameEvent<T>> {
    let att = after.attacker.position;
    let def = after.defender.position;
    let grabbed = before.flag_grabbed;
    let att_active = !before.attacker.returning_to_base;
    let def_active = !before.defender.returning_to_base;

    let in_range = att_active && def_active && att.distance(def) <= config.tag_range;
    let att_zone = config.zone_of(att);
    let def_zone = config.zone_of(def);
    let both_in = |zone: Role| att_zone == Some(zone) && def_zone == Some(zone);

    let attacker_event = if att_active && grabbed && att.distance(config.attacker_base) <= config.capture_range {
        Some(EventKind::Capture)
    } else if in_range && both_in(Role::Defender) {
        Some(if grabbed {
            EventKind::RetrievalTag
        } else {
            EventKind::Tag
        })
    } else if att_active && !grabbed && att.distance(config.defender_flag) <= config.grab_range {
        Some(EventKind::Grab)
    } else if att_active && !config.in_bounds(att) {
        Some(EventKind::OutOfBoundsAttacker)
    } else {
        None
    };

    let defender_event = if in_range && both_in(Role::Attacker) {
        Some(EventKind::DefenderTagged)
    } else if def_active && !config.in_bounds(def) {
        Some(EventKind::OutOfBoundsDefender)
    } else {
        None
    };

    attacker_event
        .into_iter()
        .chain(defender_event)
        .map(|kind| GameEvent {
            kind,
            step: after.step_count,
            attacker_position: att,
            defender_position: def,
        })
        .collect()
}

/// Sum of point values of `events` for `role`.
pub fn score_events<T>(events: &[GameEvent<T>], role: Role) -> i64 {
    events.iter().map(|e| e.kind.points_for(role)).sum()
}

/// Raw per-kind event tallies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EventCounts {
    pub tag: u64,
    pub retrieval_tag: u64,
    pub grab: u64,
    pub capture: u64,
    pub out_of_bounds_attacker: u64,
    pub out_of_bounds_defender: u64,
    pub defender_tagged: u64,
}

impl EventCounts {
    pub fn record(&mut self, kind: EventKind) {
        *self.slot(kind) += 1;
    }

    pub fn record_all<T>(&mut self, events: &[GameEvent<T>]) {
        for e in events {
            self.record(e.kind);
        }
    }

    pub fn get(&self, kind: EventKind) -> u64 {
        match kind {
            EventKind::Tag => self.tag,
            EventKind::RetrievalTag => self.retrieval_tag,
            EventKind::Grab => self.grab,
            EventKind::Capture => self.capture,
            EventKind::OutOfBoundsAttacker => self.out_of_bounds_attacker,
            EventKind::OutOfBoundsDefender => self.out_of_bounds_defender,
            EventKind::DefenderTagged => self.defender_tagged,
        }
    }

    fn slot(&mut self, kind: EventKind) -> &mut u64 {
        match kind {
            EventKind::Tag => &mut self.tag,
            EventKind::RetrievalTag => &mut self.retrieval_tag,
            EventKind::Grab => &mut self.grab,
            EventKind::Capture => &mut self.capture,
            EventKind::OutOfBoundsAttacker => &mut self.out_of_bounds_attacker,
            EventKind::OutOfBoundsDefender => &mut self.out_of_bounds_defender,
            EventKind::DefenderTagged => &mut self.defender_tagged,
        }
    }

    pub fn merge(&mut self, other: &EventCounts) {
        for kind in EventKind::ALL {
            *self.slot(kind) += other.get(kind);
        }
    }

    /// Groups the tallies into the five trajectory-score buckets as seen by
    /// `role`:
    ///
    /// * `n_tag`: the opponent was tagged before a grab, or left the field
    ///   (defender: Tag, OutOfBoundsAttacker; attacker: DefenderTagged,
    ///   OutOfBoundsDefender)
    /// * `n_oob`: the role itself was put back to base by the opponent or the
    ///   boundary (defender: OutOfBoundsDefender, DefenderTagged; attacker:
    ///   OutOfBoundsAttacker, Tag)
    /// * `n_ret`, `n_grb`, `n_cap`: retrieval tags, grabs, captures.
    pub fn for_role(&self, role: Role) -> TrajectoryCounts {
        let (n_tag, n_oob) = match role {
            Role::Defender => (
                self.tag + self.out_of_bounds_attacker,
                self.out_of_bounds_defender + self.defender_tagged,
            ),
            Role::Attacker => (
                self.defender_tagged + self.out_of_bounds_defender,
                self.out_of_bounds_attacker + self.tag,
            ),
        };
        TrajectoryCounts {
            n_tag,
            n_ret: self.retrieval_tag,
            n_oob,
            n_grb: self.grab,
            n_cap: self.capture,
        }
    }
}

/// Event counts entering the trajectory score, relative to one role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TrajectoryCounts {
    pub n_tag: u64,
    pub n_ret: u64,
    pub n_oob: u64,
    pub n_grb: u64,
    pub n_cap: u64,
}

/// Point value of each trajectory bucket for `role`, in the order
/// (tag, ret, oob, grb, cap).
pub fn bucket_points(role: Role) -> [i64; 5] {
    match role {
        Role::Defender => [2, 1, -2, -1, -2],
        Role::Attacker => [2, -2, -1, 1, 2],
    }
}

/// Trajectory score: event counts weighted by their point values.
pub fn trajectory_score(counts: &TrajectoryCounts, role: Role) -> i64 {
    let [c_tag, c_ret, c_oob, c_grb, c_cap] = bucket_points(role);
    c_tag * counts.n_tag as i64
        + c_ret * counts.n_ret as i64
        + c_oob * counts.n_oob as i64
        + c_grb * counts.n_grb as i64
        + c_cap * counts.n_cap as i64
}
