//! Scripted attackers used as training and evaluation opponents.

mod att_e;
mod att_h;

pub use att_e::{att_e_action, AttEConfig};
pub use att_h::{att_h_action, att_h_goal, composite_potential, AttHConfig};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::engine::{Action, FieldConfig, GameState};
use crate::error::Result;
use crate::Scalar;

/// Which scripted attacker to play against, with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", tag = "kind", rename_all = "snake_case")]
pub enum OpponentSpec<T> {
    AttE(AttEConfig<T>),
    AttH(AttHConfig<T>),
}

impl<T: Scalar> OpponentSpec<T> {
    pub fn att_e() -> Self {
        OpponentSpec::AttE(AttEConfig::default())
    }

    pub fn att_h(field: &FieldConfig<T>) -> Self {
        OpponentSpec::AttH(AttHConfig::for_field(field))
    }

    /// Default spec by label (`att_e` or `att_h`).
    pub fn named(name: &str, field: &FieldConfig<T>) -> Option<Self> {
        match name {
            "att_e" => Some(Self::att_e()),
            "att_h" => Some(Self::att_h(field)),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            OpponentSpec::AttE(_) => "att_e",
            OpponentSpec::AttH(_) => "att_h",
        }
    }

    pub fn validate(&self, field: &FieldConfig<T>) -> Result<()> {
        match self {
            OpponentSpec::AttE(cfg) => cfg.validate(field),
            OpponentSpec::AttH(cfg) => cfg.validate(field),
        }
    }
}

impl<T: Scalar> fmt::Display for OpponentSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A scripted attacker bound to one episode. Holds the route cursor for
/// Att-E; Att-H is stateless.
#[derive(Debug, Clone)]
pub struct ScriptedAttacker<T> {
    spec: OpponentSpec<T>,
    waypoints: Vec<crate::geometry::Vec2<T>>,
    cursor: usize,
}

impl<T: Scalar> ScriptedAttacker<T> {
    pub fn new(spec: OpponentSpec<T>, field: &FieldConfig<T>) -> Result<Self> {
        spec.validate(field)?;
        let waypoints = match &spec {
            OpponentSpec::AttE(cfg) => cfg.resolved_waypoints(field),
            OpponentSpec::AttH(_) => Vec::new(),
        };
        Ok(Self {
            spec,
            waypoints,
            cursor: 0,
        })
    }

    pub fn spec(&self) -> &OpponentSpec<T> {
        &self.spec
    }

    pub fn reset(&mut self) {
        self.cursor = 0;
    }

    pub fn act(&mut self, state: &GameState<T>, field: &FieldConfig<T>) -> Action {
        match &self.spec {
            OpponentSpec::AttE(cfg) => {
                let (action, cursor) = att_e_action(
                    state.attacker.position,
                    &self.waypoints,
                    cfg,
                    self.cursor,
                    field.heading_sectors,
                );
                self.cursor = cursor;
                action
            }
            OpponentSpec::AttH(cfg) => att_h_action(state, cfg, field),
        }
    }
}
