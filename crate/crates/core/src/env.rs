//! Single-learner environment: the defender is driven from outside, the
//! attacker by a scripted policy, and every transition is rewarded with a
//! [`RewardSpec`].

use serde::{Deserialize, Serialize};

use crate::agents::{OpponentSpec, ScriptedAttacker};
use crate::engine::{
    self, extract_features, Action, EventCounts, FeatureVector, FieldConfig, GameEvent, GameState,
    Role, TerminalCause,
};
use crate::episode_log::{EpisodeLog, LogHeader, StepRecord};
use crate::error::{Error, Result};
use crate::rewards::{reward_breakdown, sparse_reward, RewardBreakdown, RewardSpec, Transition};
use crate::Scalar;

/// Everything needed to build an environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EnvConfig<T> {
    pub field: FieldConfig<T>,
    pub opponent: OpponentSpec<T>,
    pub reward: RewardSpec<T>,
}

impl<T: Scalar> EnvConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.field.validate()?;
        self.opponent.validate(&self.field)?;
        self.reward.validate()
    }
}

/// Outcome of one defender step.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep<T> {
    pub attacker_action: Action,
    pub events: Vec<GameEvent<T>>,
    pub reward: RewardBreakdown<T>,
    pub attacker_reward: T,
    pub terminal: Option<TerminalCause>,
}

#[derive(Debug, Clone)]
pub struct CtfEnv<T> {
    config: EnvConfig<T>,
    attacker: ScriptedAttacker<T>,
    state: Option<GameState<T>>,
}

impl<T: Scalar> CtfEnv<T> {
    pub fn new(config: EnvConfig<T>) -> Result<Self> {
        config.validate()?;
        let attacker = ScriptedAttacker::new(config.opponent.clone(), &config.field)?;
        Ok(Self {
            config,
            attacker,
            state: None,
        })
    }

    pub fn config(&self) -> &EnvConfig<T> {
        &self.config
    }

    pub fn field(&self) -> &FieldConfig<T> {
        &self.config.field
    }

    pub fn state(&self) -> Option<&GameState<T>> {
        self.state.as_ref()
    }

    pub fn in_episode(&self) -> bool {
        self.state.as_ref().is_some_and(|s| !s.is_terminal())
    }

    pub fn reset(&mut self, seed: u64) -> Result<&GameState<T>> {
        self.attacker.reset();
        let state = engine::reset_round(&self.config.field, seed)?;
        Ok(self.state.insert(state))
    }

    /// Defender's view of the current state.
    pub fn observe(&self) -> Option<FeatureVector<T>> {
        self.state
            .as_ref()
            .map(|s| extract_features(s, Role::Defender, &self.config.field))
    }

    pub fn check_action(&self, action: Action) -> Result<()> {
        let field = &self.config.field;
        if action.speed_index >= field.speeds.len() || action.heading_bin >= field.heading_sectors {
            return Err(Error::Input(format!(
                "action ({}, {}) out of range: {} speeds, {} heading sectors",
                action.speed_index,
                action.heading_bin,
                field.speeds.len(),
                field.heading_sectors
            )));
        }
        Ok(())
    }

    pub fn step(&mut self, defender_action: Action) -> Result<EnvStep<T>> {
        self.check_action(defender_action)?;
        let field = &self.config.field;
        let prev = self
            .state
            .take()
            .ok_or_else(|| Error::Usage("step before reset".into()))?;
        if prev.is_terminal() {
            self.state = Some(prev);
            return Err(Error::Usage("episode is over; reset first".into()));
        }
        let attacker_action = self.attacker.act(&prev, field);
        let outcome = engine::step(&prev, attacker_action, defender_action, field)?;
        let transition = Transition {
            events: &outcome.events,
            prev_state: &prev,
            next_state: &outcome.state,
            prev_action: prev.defender.last_action,
            action: defender_action,
        };
        let reward = reward_breakdown(&transition, Role::Defender, &self.config.reward, field);
        let attacker_reward = sparse_reward(&outcome.events, Role::Attacker, self.config.reward.c_ext);
        self.state = Some(outcome.state);
        Ok(EnvStep {
            attacker_action,
            events: outcome.events,
            reward,
            attacker_reward,
            terminal: outcome.terminal,
        })
    }

    /// Plays one full round with `policy` choosing defender actions.
    pub fn run_episode<P>(&mut self, seed: u64, record: bool, mut policy: P) -> Result<EpisodeResult<T>>
    where
        P: FnMut(&GameState<T>, &FeatureVector<T>) -> Action,
    {
        self.reset(seed)?;
        let mut log = record.then(|| EpisodeLog {
            header: LogHeader::new(seed, &self.config, self.state.as_ref().expect("reset")),
            steps: Vec::new(),
        });
        let mut counts = EventCounts::default();
        let mut total_reward = T::zero();
        loop {
            let state = self.state.as_ref().expect("in episode");
            let features = extract_features(state, Role::Defender, &self.config.field);
            let action = policy(state, &features);
            let out = self.step(action)?;
            counts.record_all(&out.events);
            total_reward = total_reward + out.reward.total();
            if let Some(log) = log.as_mut() {
                let state = self.state.as_ref().expect("stepped");
                log.steps.push(StepRecord::new(state, action, &out));
            }
            if let Some(cause) = out.terminal {
                return Ok(EpisodeResult {
                    counts,
                    score: engine::trajectory_score(&counts.for_role(Role::Defender), Role::Defender),
                    total_reward,
                    terminal: cause,
                    steps: self.state.as_ref().expect("stepped").step_count,
                    log,
                });
            }
        }
    }
}

/// Summary of one played round.
#[derive(Debug, Clone)]
pub struct EpisodeResult<T> {
    pub counts: EventCounts,
    /// Defender trajectory score.
    pub score: i64,
    pub total_reward: T,
    pub terminal: TerminalCause,
    pub steps: u32,
    pub log: Option<EpisodeLog<T>>,
}
