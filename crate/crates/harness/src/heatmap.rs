//! Position and action heat maps over episode logs.

use ctf_core::engine::{Action, Role};
use ctf_core::episode_log::{EpisodeLog, StepRecord};

use crate::error::{Error, Result};
use crate::run::{csv_writer, finish_csv};

/// Default cell edge in meters.
pub const DEFAULT_CELL: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PositionHeatmap {
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
    /// `counts[iy * nx + ix]`.
    pub counts: Vec<u64>,
}

impl PositionHeatmap {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn get(&self, ix: usize, iy: usize) -> u64 {
        self.counts[iy * self.nx + ix]
    }

    /// Long-form CSV, one row per cell including empty ones.
    pub fn to_csv(&self, normalize: bool) -> Vec<u8> {
        let total = self.total();
        let mut w = csv_writer();
        let mut header = vec!["ix", "iy", "x_min", "x_max", "y_min", "y_max", "count"];
        if normalize {
            header.push("fraction");
        }
        w.write_record(&header).expect("in-memory CSV");
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let c = self.get(ix, iy);
                let mut row = vec![
                    ix.to_string(),
                    iy.to_string(),
                    (ix as f64 * self.cell).to_string(),
                    ((ix + 1) as f64 * self.cell).to_string(),
                    (iy as f64 * self.cell).to_string(),
                    ((iy + 1) as f64 * self.cell).to_string(),
                    c.to_string(),
                ];
                if normalize {
                    row.push(fraction(c, total));
                }
                w.write_record(&row).expect("in-memory CSV");
            }
        }
        finish_csv(w)
    }
}

fn fraction(c: u64, total: u64) -> String {
    if total == 0 {
        "0".into()
    } else {
        (c as f64 / total as f64).to_string()
    }
}

/// Occupancy of `role` after every logged step, on the first log's field.
/// Positions outside the field count toward the nearest edge cell, so the
/// grid total always equals the number of steps.
pub fn position_heatmap(logs: &[EpisodeLog<f64>], role: Role, cell: f64) -> Result<PositionHeatmap> {
    let first = logs.first().ok_or_else(|| Error::Usage("heat map needs at least one log".into()))?;
    if !(cell.is_finite() && cell > 0.0) {
        return Err(Error::config("cell", "cell size must be a positive number"));
    }
    let field = &first.header.config.field;
    let nx = ((field.width / cell).ceil() as usize).max(1);
    let ny = ((field.depth / cell).ceil() as usize).max(1);
    let mut counts = vec![0; nx * ny];
    let bin = |v: f64, n: usize| ((v / cell).floor().max(0.0) as usize).min(n - 1);
    for log in logs {
        for step in &log.steps {
            let p = match role {
                Role::Attacker => step.state.attacker.position,
                Role::Defender => step.state.defender.position,
            };
            counts[bin(p.y, ny) * nx + bin(p.x, nx)] += 1;
        }
    }
    Ok(PositionHeatmap { cell, nx, ny, counts })
}

/// Frequency of (speed, heading) commands. `held` counts the steps where the
/// command equals the previous one in the same round.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionHeatmap {
    pub speeds: Vec<f64>,
    pub heading_sectors: usize,
    /// `counts[speed_index * heading_sectors + heading_bin]`.
    pub counts: Vec<u64>,
    pub held: Vec<u64>,
}

impl ActionHeatmap {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn held_total(&self) -> u64 {
        self.held.iter().sum()
    }

    /// Share of steps that repeat the previous command.
    pub fn hold_fraction(&self) -> f64 {
        ratio(self.held_total(), self.total())
    }

    /// Share of steps that repeat a zero-speed command.
    pub fn stop_hold_fraction(&self) -> f64 {
        let stopped: u64 = self
            .speeds
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == 0.0)
            .map(|(i, _)| self.held[i * self.heading_sectors..(i + 1) * self.heading_sectors].iter().sum::<u64>())
            .sum();
        ratio(stopped, self.total())
    }

    pub fn to_csv(&self, normalize: bool) -> Vec<u8> {
        let total = self.total();
        let mut w = csv_writer();
        let mut header = vec!["speed_index", "speed", "heading_bin", "count", "held"];
        if normalize {
            header.push("fraction");
        }
        w.write_record(&header).expect("in-memory CSV");
        for (si, speed) in self.speeds.iter().enumerate() {
            for h in 0..self.heading_sectors {
                let k = si * self.heading_sectors + h;
                let mut row = vec![
                    si.to_string(),
                    speed.to_string(),
                    h.to_string(),
                    self.counts[k].to_string(),
                    self.held[k].to_string(),
                ];
                if normalize {
                    row.push(fraction(self.counts[k], total));
                }
                w.write_record(&row).expect("in-memory CSV");
            }
        }
        finish_csv(w)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn action_heatmap(logs: &[EpisodeLog<f64>], role: Role) -> Result<ActionHeatmap> {
    let first = logs.first().ok_or_else(|| Error::Usage("heat map needs at least one log".into()))?;
    let field = &first.header.config.field;
    let sectors = field.heading_sectors;
    let speeds = field.speeds.clone();
    let mut counts = vec![0; speeds.len() * sectors];
    let mut held = vec![0; speeds.len() * sectors];
    let pick = |s: &StepRecord<f64>| match role {
        Role::Attacker => s.attacker_action,
        Role::Defender => s.defender_action,
    };
    for log in logs {
        let mut prev: Option<Action> = None;
        for step in &log.steps {
            let a = pick(step);
            if a.speed_index >= speeds.len() || a.heading_bin >= sectors {
                return Err(Error::Usage(format!(
                    "step {} holds action ({}, {}) outside the first log's action set",
                    step.step, a.speed_index, a.heading_bin
                )));
            }
            let k = a.speed_index * sectors + a.heading_bin;
            counts[k] += 1;
            if prev == Some(a) {
                held[k] += 1;
            }
            prev = Some(a);
        }
    }
    Ok(ActionHeatmap {
        speeds,
        heading_sectors: sectors,
        counts,
        held,
    })
}
