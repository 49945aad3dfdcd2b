//! Event detection restated as plain set membership, one predicate per event
//! set, evaluated in `f64` on raw coordinates. Shares no helpers with
//! [`detect_events`](super::detect_events) so the two can check each other.

use super::{EventKind, FieldConfig, GameState};
use crate::Scalar;

struct Pt {
    x: f64,
    y: f64,
}

fn pt<T: Scalar>(p: crate::geometry::Vec2<T>) -> Pt {
    Pt {
        x: p.x.as_f64(),
        y: p.y.as_f64(),
    }
}

fn dist(a: &Pt, b: &Pt) -> f64 {
    ((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y)).sqrt()
}

/// Events of `before -> after` by direct predicate evaluation, attacker event
/// first.
pub fn reference_events<T: Scalar>(
    before: &GameState<T>,
    after: &GameState<T>,
    config: &FieldConfig<T>,
) -> Vec<EventKind> {
    let w = config.width.as_f64();
    let d = config.depth.as_f64();
    let att = pt(after.attacker.position);
    let def = pt(after.defender.position);
    let dflag = pt(config.defender_flag);
    let abase = pt(config.attacker_base);
    let grabbed = before.flag_grabbed;
    let att_on = !before.attacker.returning_to_base;
    let def_on = !before.defender.returning_to_base;

    let field = |p: &Pt| (0.0..=w).contains(&p.x) && (0.0..=d).contains(&p.y);
    let left = |p: &Pt| p.x < w / 2.0;
    let def_side_left = left(&dflag);
    let in_def_zone = |p: &Pt| field(p) && left(p) == def_side_left;
    let in_att_zone = |p: &Pt| field(p) && left(p) != def_side_left;
    let close = dist(&att, &def) <= config.tag_range.as_f64();

    let s_cap = att_on && grabbed && dist(&att, &abase) <= config.capture_range.as_f64();
    let s_tag = att_on && def_on && !grabbed && in_def_zone(&att) && in_def_zone(&def) && close;
    let s_ret = att_on && def_on && grabbed && in_def_zone(&att) && in_def_zone(&def) && close;
    let s_grb = att_on && !grabbed && dist(&att, &dflag) <= config.grab_range.as_f64();
    let s_oob_att = att_on && !field(&att);
    let s_def_tagged = att_on && def_on && in_att_zone(&att) && in_att_zone(&def) && close;
    let s_oob_def = def_on && !field(&def);

    let attacker = [
        (s_cap, EventKind::Capture),
        (s_tag, EventKind::Tag),
        (s_ret, EventKind::RetrievalTag),
        (s_grb, EventKind::Grab),
        (s_oob_att, EventKind::OutOfBoundsAttacker),
    ];
    let defender = [
        (s_def_tagged, EventKind::DefenderTagged),
        (s_oob_def, EventKind::OutOfBoundsDefender),
    ];
    let first = |set: &[(bool, EventKind)]| set.iter().find(|(hit, _)| *hit).map(|(_, k)| *k);
    first(&attacker).into_iter().chain(first(&defender)).collect()
}
