//! Deterministic game state machine: placement, kinematics, event detection,
//! scoring and round lifecycle.

mod config;
mod events;
mod features;
mod kinematics;
mod reference;
mod state;

pub use config::FieldConfig;
pub use events::{
    bucket_points, detect_events, score_events, trajectory_score, EventCounts, EventKind,
    GameEvent, TrajectoryCounts,
};
pub use features::{distance_to_nearest_boundary, extract_features, FeatureVector};
pub use kinematics::apply_kinematics;
pub use reference::reference_events;
pub use state::{Action, GameState, PlayerState, Points, Role, TerminalCause};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{nearest_sector, sector_center, Vec2};
use crate::Scalar;

fn sample_in_disk<T: Scalar>(rng: &mut ChaCha8Rng, center: Vec2<T>, radius: T) -> Vec2<T> {
    let u: f64 = rng.gen();
    let v: f64 = rng.gen();
    let r = radius * T::lit(u.sqrt());
    let theta = T::lit(std::f64::consts::TAU * v);
    center + Vec2::from_heading(theta).scale(r)
}

/// Places both players uniformly inside their base disks. The placement is a
/// pure function of `(config, seed)`; players start facing the sector that
/// points closest to the opponent's flag.
pub fn reset_round<T: Scalar>(config: &FieldConfig<T>, seed: u64) -> Result<GameState<T>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut place = |role: Role| {
        let position = sample_in_disk(&mut rng, config.base_center(role), config.base_radius);
        let bearing = (config.flag(role.opponent()) - position).heading();
        let heading = sector_center(
            nearest_sector(bearing, config.heading_sectors),
            config.heading_sectors,
        );
        PlayerState::new(role, position, heading)
    };
    let attacker = place(Role::Attacker);
    let defender = place(Role::Defender);
    Ok(GameState {
        attacker,
        defender,
        flag_grabbed: false,
        step_count: 0,
        round_index: 0,
        cumulative_points: Points::default(),
        seed,
        terminal: None,
    })
}

/// Result of one engine transition.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<T> {
    pub state: GameState<T>,
    pub events: Vec<GameEvent<T>>,
    pub terminal: Option<TerminalCause>,
}

/// Advances the game by one `dt`: kinematics for both players, event
/// detection, event side effects, scoring and the clock.
///
/// A tag or out-of-bounds sends the affected player home and drops any flag
/// it carries. The round ends on a capture, on the attacker being tagged, or
/// when the clock reaches `max_episode_steps`.
pub fn step<T: Scalar>(
    state: &GameState<T>,
    attacker_action: Action,
    defender_action: Action,
    config: &FieldConfig<T>,
) -> Result<StepOutcome<T>> {
    if let Some(cause) = state.terminal {
        return Err(Error::Usage(format!("round already ended ({cause}); reset first")));
    }
    let mut next = state.clone();
    next.attacker = apply_kinematics(&state.attacker, attacker_action, config.dt, config);
    next.defender = apply_kinematics(&state.defender, defender_action, config.dt, config);
    next.step_count += 1;

    let events = detect_events(state, &next, config);
    let mut terminal = None;
    for event in &events {
        match event.kind {
            EventKind::Grab => {
                next.attacker.has_flag = true;
                next.flag_grabbed = true;
            }
            EventKind::Capture => {
                next.attacker.has_flag = false;
                next.flag_grabbed = false;
                terminal = Some(TerminalCause::Capture);
            }
            EventKind::Tag => {
                next.attacker.returning_to_base = true;
                terminal = Some(TerminalCause::TagPreGrab);
            }
            EventKind::RetrievalTag => {
                send_home(&mut next, Role::Attacker);
                terminal = Some(TerminalCause::TagPostGrab);
            }
            EventKind::OutOfBoundsAttacker => send_home(&mut next, Role::Attacker),
            EventKind::DefenderTagged | EventKind::OutOfBoundsDefender => {
                send_home(&mut next, Role::Defender)
            }
        }
    }
    next.cumulative_points.attacker += score_events(&events, Role::Attacker);
    next.cumulative_points.defender += score_events(&events, Role::Defender);

    if terminal.is_none() && next.step_count >= config.max_episode_steps {
        terminal = Some(TerminalCause::TimeLimit);
    }
    next.terminal = terminal;
    Ok(StepOutcome {
        state: next,
        events,
        terminal,
    })
}

fn send_home<T: Scalar>(state: &mut GameState<T>, role: Role) {
    let player = state.player_mut(role);
    player.returning_to_base = true;
    if player.has_flag {
        player.has_flag = false;
        state.flag_grabbed = false;
    }
}

/// Owns a config and the live state of a game made of successive rounds.
#[derive(Debug, Clone)]
pub struct Engine<T> {
    config: FieldConfig<T>,
    state: GameState<T>,
}

impl<T: Scalar> Engine<T> {
    pub fn new(config: FieldConfig<T>, seed: u64) -> Result<Self> {
        let state = reset_round(&config, seed)?;
        Ok(Self { config, state })
    }

    pub fn config(&self) -> &FieldConfig<T> {
        &self.config
    }

    pub fn state(&self) -> &GameState<T> {
        &self.state
    }

    /// Starts a fresh round from `seed`, discarding all bookkeeping.
    pub fn reset(&mut self, seed: u64) -> Result<&GameState<T>> {
        self.state = reset_round(&self.config, seed)?;
        Ok(&self.state)
    }

    /// Starts the next round of the same game, carrying the cumulative points
    /// and bumping the round index.
    pub fn next_round(&mut self, seed: u64) -> Result<&GameState<T>> {
        let points = self.state.cumulative_points;
        let round = self.state.round_index + 1;
        self.state = reset_round(&self.config, seed)?;
        self.state.cumulative_points = points;
        self.state.round_index = round;
        Ok(&self.state)
    }

    pub fn step(
        &mut self,
        attacker_action: Action,
        defender_action: Action,
    ) -> Result<(Vec<GameEvent<T>>, Option<TerminalCause>)> {
        let outcome = step(&self.state, attacker_action, defender_action, &self.config)?;
        self.state = outcome.state;
        Ok((outcome.events, outcome.terminal))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idle() -> Action {
        Action::new(0, 0)
    }

    #[test]
    fn reset_places_players_in_bases() {
        let cfg = FieldConfig::<f64>::full();
        let s = reset_round(&cfg, 7).unwrap();
        assert!(s.attacker.position.distance(cfg.attacker_base) <= cfg.base_radius);
        assert!(s.defender.position.distance(cfg.defender_base) <= cfg.base_radius);
        assert_eq!(s.attacker.speed, 0.0);
        assert_eq!(s.defender.speed, 0.0);
        assert!(!s.flag_grabbed);
        assert_eq!(s.step_count, 0);
    }

    #[test]
    fn reset_is_deterministic() {
        let cfg = FieldConfig::<f64>::full();
        let a = reset_round(&cfg, 7).unwrap();
        let b = reset_round(&cfg, 7).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_ne!(a, reset_round(&cfg, 8).unwrap());
    }

    #[test]
    fn zero_radius_base_places_at_center() {
        let mut cfg = FieldConfig::<f64>::full();
        cfg.base_radius = 0.0;
        let s = reset_round(&cfg, 3).unwrap();
        assert_eq!(s.attacker.position, cfg.attacker_base);
        assert_eq!(s.defender.position, cfg.defender_base);
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = FieldConfig::<f64>::full();
        cfg.width = -1.0;
        assert!(matches!(reset_round(&cfg, 0), Err(Error::Config { .. })));
    }

    #[test]
    fn quiet_step_has_no_events() {
        let cfg = FieldConfig::<f64>::full();
        let s = reset_round(&cfg, 1).unwrap();
        let out = step(&s, idle(), idle(), &cfg).unwrap();
        assert!(out.events.is_empty());
        assert_eq!(out.terminal, None);
        assert_eq!(out.state.attacker.position, s.attacker.position);
        assert_eq!(out.state.step_count, 1);
    }

    #[test]
    fn capture_ends_round() {
        let cfg = FieldConfig::<f64>::full();
        let mut s = reset_round(&cfg, 1).unwrap();
        s.flag_grabbed = true;
        s.attacker.has_flag = true;
        s.attacker.position = Vec2::new(21.0, 40.0);
        s.attacker.heading = -std::f64::consts::PI;
        let out = step(&s, Action::new(3, 4), idle(), &cfg).unwrap();
        assert_eq!(out.events[0].kind, EventKind::Capture);
        assert_eq!(out.terminal, Some(TerminalCause::Capture));
        assert!(!out.state.flag_grabbed);
        assert_eq!(out.state.cumulative_points, Points { attacker: 2, defender: -2 });
    }

    #[test]
    fn pre_grab_tag_ends_round() {
        let cfg = FieldConfig::<f64>::full();
        let mut s = reset_round(&cfg, 1).unwrap();
        s.attacker.position = Vec2::new(120.0, 40.0);
        s.defender.position = Vec2::new(125.0, 40.0);
        let out = step(&s, idle(), idle(), &cfg).unwrap();
        assert_eq!(out.events.len(), 1);
        assert_eq!(out.events[0].kind, EventKind::Tag);
        assert_eq!(out.terminal, Some(TerminalCause::TagPreGrab));
        assert!(out.state.attacker.returning_to_base);
        assert!(step(&out.state, idle(), idle(), &cfg).is_err());
    }

    #[test]
    fn retrieval_tag_returns_flag() {
        let cfg = FieldConfig::<f64>::full();
        let mut s = reset_round(&cfg, 1).unwrap();
        s.flag_grabbed = true;
        s.attacker.has_flag = true;
        s.attacker.position = Vec2::new(120.0, 40.0);
        s.defender.position = Vec2::new(125.0, 40.0);
        let out = step(&s, idle(), idle(), &cfg).unwrap();
        assert_eq!(out.events[0].kind, EventKind::RetrievalTag);
        assert_eq!(out.terminal, Some(TerminalCause::TagPostGrab));
        assert!(!out.state.flag_grabbed && !out.state.attacker.has_flag);
    }

    #[test]
    fn defender_out_of_bounds_does_not_end_round() {
        let cfg = FieldConfig::<f64>::full();
        let mut s = reset_round(&cfg, 1).unwrap();
        s.defender.position = Vec2::new(159.5, 40.0);
        s.defender.heading = 0.0;
        let out = step(&s, idle(), Action::new(3, 0), &cfg).unwrap();
        assert_eq!(out.events[0].kind, EventKind::OutOfBoundsDefender);
        assert_eq!(out.terminal, None);
        assert!(out.state.defender.returning_to_base);
        // No repeat while driving home.
        let again = step(&out.state, idle(), Action::new(3, 0), &cfg).unwrap();
        assert!(again.events.is_empty());
    }

    #[test]
    fn time_limit_terminates() {
        let mut cfg = FieldConfig::<f64>::full();
        cfg.max_episode_steps = 3;
        let mut engine = Engine::new(cfg, 5).unwrap();
        assert_eq!(engine.step(idle(), idle()).unwrap().1, None);
        assert_eq!(engine.step(idle(), idle()).unwrap().1, None);
        assert_eq!(engine.step(idle(), idle()).unwrap().1, Some(TerminalCause::TimeLimit));
    }

    #[test]
    fn next_round_carries_points() {
        let cfg = FieldConfig::<f64>::full();
        let mut engine = Engine::new(cfg, 5).unwrap();
        let mut s = engine.state().clone();
        s.cumulative_points.defender = 4;
        engine.state = s;
        let next = engine.next_round(6).unwrap();
        assert_eq!(next.round_index, 1);
        assert_eq!(next.cumulative_points.defender, 4);
    }
}
