use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Attacker,
    Defender,
}

impl Role {
    pub fn opponent(self) -> Role {
        match self {
            Role::Attacker => Role::Defender,
            Role::Defender => Role::Attacker,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Attacker => "attacker",
            Role::Defender => "defender",
        })
    }
}

/// Discrete command: an index into the configured speed set and a compass
/// sector. Two actions are equal exactly when both indices match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Action {
    pub speed_index: usize,
    pub heading_bin: usize,
}

impl Action {
    pub fn new(speed_index: usize, heading_bin: usize) -> Self {
        Self {
            speed_index,
            heading_bin,
        }
    }

    /// Flat index `speed_index * sectors + heading_bin`.
    pub fn index(self, sectors: usize) -> usize {
        self.speed_index * sectors + self.heading_bin
    }

    pub fn from_index(index: usize, sectors: usize) -> Self {
        Self::new(index / sectors, index % sectors)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PlayerState<T> {
    pub role: Role,
    pub position: Vec2<T>,
    /// Radians in `[-pi, pi)`.
    pub heading: T,
    pub speed: T,
    pub has_flag: bool,
    /// Set after being tagged or leaving the field; the player drives home and
    /// ignores commands until it is back inside its base disk.
    pub returning_to_base: bool,
    pub last_action: Option<Action>,
}

impl<T: Scalar> PlayerState<T> {
    pub fn new(role: Role, position: Vec2<T>, heading: T) -> Self {
        Self {
            role,
            position,
            heading,
            speed: T::zero(),
            has_flag: false,
            returning_to_base: false,
            last_action: None,
        }
    }
}

/// Why a round ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalCause {
    Capture,
    TagPreGrab,
    TagPostGrab,
    TimeLimit,
}

impl fmt::Display for TerminalCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TerminalCause::Capture => "capture",
            TerminalCause::TagPreGrab => "tag_pre_grab",
            TerminalCause::TagPostGrab => "tag_post_grab",
            TerminalCause::TimeLimit => "time_limit",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Points {
    pub attacker: i64,
    pub defender: i64,
}

impl Points {
    pub fn get(&self, role: Role) -> i64 {
        match role {
            Role::Attacker => self.attacker,
            Role::Defender => self.defender,
        }
    }
}

/// Joint state of both players plus round bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GameState<T> {
    pub attacker: PlayerState<T>,
    pub defender: PlayerState<T>,
    pub flag_grabbed: bool,
    pub step_count: u32,
    pub round_index: u32,
    pub cumulative_points: Points,
    /// Seed the round was placed from. Transitions are deterministic, so this
    /// is the only source of randomness in a round.
    pub seed: u64,
    pub terminal: Option<TerminalCause>,
}

impl<T: Scalar> GameState<T> {
    pub fn player(&self, role: Role) -> &PlayerState<T> {
        match role {
            Role::Attacker => &self.attacker,
            Role::Defender => &self.defender,
        }
    }

    pub fn player_mut(&mut self, role: Role) -> &mut PlayerState<T> {
        match role {
            Role::Attacker => &mut self.attacker,
            Role::Defender => &mut self.defender,
        }
    }

    pub fn separation(&self) -> T {
        self.attacker.position.distance(self.defender.position)
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal.is_some()
    }
}
