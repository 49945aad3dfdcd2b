use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::curve::CurvePoint;
use super::discretize::DiscretizerConfig;
use super::qtable::{q_update, select_action};
use super::snapshot::{PolicySnapshot, SnapshotMeta};
use crate::agents::OpponentSpec;
use crate::engine::{Action, EventCounts, FieldConfig};
use crate::env::{CtfEnv, EnvConfig};
use crate::episode_log::EpisodeLog;
use crate::error::{Error, Result};
use crate::rewards::RewardSpec;
use crate::Scalar;

/// Linear epsilon decay from `start` to `end` over `decay_episodes`, then
/// flat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_episodes: u64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            start: 1.0,
            end: 0.05,
            decay_episodes: 2000,
        }
    }
}

impl EpsilonSchedule {
    pub fn at(&self, episode: u64) -> f64 {
        if self.decay_episodes == 0 || episode >= self.decay_episodes {
            return self.end;
        }
        let t = episode as f64 / self.decay_episodes as f64;
        self.start + (self.end - self.start) * t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", default)]
pub struct TrainConfig<T> {
    pub alpha: T,
    pub gamma: T,
    pub epsilon: EpsilonSchedule,
    pub episodes: u64,
    /// Evaluate after every this many episodes (and before the first and
    /// after the last). Zero disables intermediate evaluations.
    pub eval_every: u64,
    pub eval_episodes: u32,
    pub seed: u64,
}

impl<T: Scalar> Default for TrainConfig<T> {
    fn default() -> Self {
        Self {
            alpha: T::lit(0.1),
            gamma: T::lit(0.99),
            epsilon: EpsilonSchedule::default(),
            episodes: 5000,
            eval_every: 500,
            eval_episodes: 100,
            seed: 0,
        }
    }
}

impl<T: Scalar> TrainConfig<T> {
    /// Learning-rate profiles: `tabular` (0.1) or `neural` (0.0005, the rate
    /// used for network policies).
    pub fn with_alpha_profile(mut self, name: &str) -> Result<Self> {
        self.alpha = match name {
            "tabular" => T::lit(0.1),
            "neural" => T::lit(0.0005),
            _ => {
                return Err(Error::config(
                    "train.alpha_profile",
                    format!("unknown profile `{name}` (expected tabular or neural)"),
                ))
            }
        };
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > T::zero() && self.alpha <= T::one()) {
            return Err(Error::config("train.alpha", "must lie in (0, 1]"));
        }
        if !(self.gamma >= T::zero() && self.gamma <= T::one()) {
            return Err(Error::config("train.gamma", "must lie in [0, 1]"));
        }
        let e = self.epsilon;
        for (key, v) in [("train.epsilon.start", e.start), ("train.epsilon.end", e.end)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(key, "must lie in [0, 1]"));
            }
        }
        if self.eval_episodes == 0 {
            return Err(Error::config("train.eval_episodes", "must be at least 1"));
        }
        Ok(())
    }
}

/// Field, reward and state abstraction shared by every run in an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningSetup<T> {
    pub field: FieldConfig<T>,
    pub reward: RewardSpec<T>,
    /// Profile label recorded in snapshots.
    pub reward_label: String,
    pub discretizer: DiscretizerConfig<T>,
}

impl<T: Scalar> LearningSetup<T> {
    /// Reward built from a profile label, discretizer fitted to the field.
    pub fn new(field: FieldConfig<T>, profile: &str) -> Result<Self> {
        let reward = RewardSpec::named(profile, &field)?;
        Ok(Self {
            discretizer: DiscretizerConfig::for_field(&field),
            field,
            reward,
            reward_label: profile.to_string(),
        })
    }

    pub fn env(&self, opponent: &OpponentSpec<T>) -> Result<CtfEnv<T>> {
        CtfEnv::new(EnvConfig {
            field: self.field.clone(),
            opponent: opponent.clone(),
            reward: self.reward.clone(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.field.validate()?;
        self.reward.validate()?;
        self.discretizer.validate()
    }
}

// Independent random streams derived from one experiment seed.
const STREAM_TRAIN_EPISODE: u64 = 1;
const STREAM_EXPLORE: u64 = 2;
const STREAM_EVAL_EPISODE: u64 = 3;
const STREAM_OPPONENT: u64 = 4;

/// Mixes a base seed, a stream tag and an index into a new seed (splitmix64
/// finalizer).
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(index.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Result of a greedy evaluation.
#[derive(Debug, Clone)]
pub struct EvalReport<T> {
    pub mean_score: f64,
    pub scores: Vec<i64>,
    pub counts: EventCounts,
    pub logs: Vec<EpisodeLog<T>>,
}

/// Plays `n_episodes` greedy rounds of `policy` against `opponent`. Round `j`
/// starts from `derive_seed(seed, eval, j)`.
pub fn evaluate<T: Scalar>(
    policy: &PolicySnapshot<T>,
    setup: &LearningSetup<T>,
    opponent: &OpponentSpec<T>,
    n_episodes: u32,
    seed: u64,
    record: bool,
) -> Result<EvalReport<T>> {
    if n_episodes == 0 {
        return Err(Error::Usage("evaluation needs at least one episode".into()));
    }
    let mut env = setup.env(opponent)?;
    evaluate_in(policy, &mut env, n_episodes, seed, record)
}

fn evaluate_in<T: Scalar>(
    policy: &PolicySnapshot<T>,
    env: &mut CtfEnv<T>,
    n_episodes: u32,
    seed: u64,
    record: bool,
) -> Result<EvalReport<T>> {
    let mut scores = Vec::with_capacity(n_episodes as usize);
    let mut counts = EventCounts::default();
    let mut logs = Vec::new();
    for j in 0..n_episodes {
        let mut failure = None;
        let result = env.run_episode(derive_seed(seed, STREAM_EVAL_EPISODE, j.into()), record, |s, f| {
            policy.act(s, f).unwrap_or_else(|e| {
                failure.get_or_insert(e);
                Action::default()
            })
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
        scores.push(result.score);
        counts.merge(&result.counts);
        logs.extend(result.log);
    }
    Ok(EvalReport {
        mean_score: scores.iter().sum::<i64>() as f64 / scores.len() as f64,
        scores,
        counts,
        logs,
    })
}

/// Snapshot plus learning curve from one training run.
#[derive(Debug, Clone)]
pub struct TrainOutput<T> {
    pub snapshot: PolicySnapshot<T>,
    pub curve: Vec<CurvePoint>,
}

struct Learner<'a, T> {
    setup: &'a LearningSetup<T>,
    cfg: &'a TrainConfig<T>,
    snapshot: PolicySnapshot<T>,
    explore: ChaCha8Rng,
    curve: Vec<CurvePoint>,
    episodes_done: u64,
}

impl<'a, T: Scalar> Learner<'a, T> {
    fn new(setup: &'a LearningSetup<T>, cfg: &'a TrainConfig<T>) -> Result<Self> {
        setup.validate()?;
        cfg.validate()?;
        let meta = SnapshotMeta {
            episodes_trained: 0,
            opponents_seen: Vec::new(),
            reward_profile: setup.reward_label.clone(),
            heading_sectors: setup.field.heading_sectors,
        };
        Ok(Self {
            setup,
            cfg,
            snapshot: PolicySnapshot::zero(setup.discretizer.clone(), setup.field.action_count(), meta),
            explore: ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_EXPLORE, 0)),
            curve: Vec::new(),
            episodes_done: 0,
        })
    }

    fn train_episode(&mut self, env: &mut CtfEnv<T>, epsilon: f64) -> Result<()> {
        let seed = derive_seed(self.cfg.seed, STREAM_TRAIN_EPISODE, self.episodes_done);
        self.snapshot.meta.record_opponent(env.config().opponent.label());
        let sectors = self.setup.field.heading_sectors;
        let (alpha, gamma) = (self.cfg.alpha, self.cfg.gamma);
        let disc = &self.snapshot.discretizer;
        let flag = env.reset(seed)?.flag_grabbed;
        let mut s = disc.discretize(&env.observe().expect("reset"), flag)?;
        loop {
            let a = select_action(&self.snapshot.q, s, epsilon, &mut self.explore);
            let out = env.step(Action::from_index(a, sectors))?;
            let next = env.state().expect("stepped");
            let s_next = disc.discretize(&env.observe().expect("stepped"), next.flag_grabbed)?;
            let terminal = out.terminal.is_some();
            q_update(&mut self.snapshot.q, s, a, out.reward.total(), s_next, terminal, alpha, gamma);
            if terminal {
                break;
            }
            s = s_next;
        }
        self.episodes_done += 1;
        self.snapshot.meta.episodes_trained = self.episodes_done;
        Ok(())
    }

    fn evaluate_all(&mut self, stage: usize, envs: &mut [CtfEnv<T>]) -> Result<()> {
        for env in envs {
            let report = evaluate_in(&self.snapshot, env, self.cfg.eval_episodes, self.cfg.seed, false)?;
            self.curve.push(CurvePoint {
                stage,
                episode: self.episodes_done,
                opponent: env.config().opponent.label().to_string(),
                mean_score: report.mean_score,
                counts: report.counts,
            });
        }
        Ok(())
    }

    /// Trains `episodes` rounds, drawing the environment for each round with
    /// `pick`, and evaluates against every env in `eval_envs` on schedule.
    fn run_stage(
        &mut self,
        stage: usize,
        episodes: u64,
        envs: &mut [CtfEnv<T>],
        eval_envs: &mut [CtfEnv<T>],
        mut pick: impl FnMut() -> usize,
    ) -> Result<()> {
        if episodes == 0 {
            return Ok(());
        }
        self.evaluate_all(stage, eval_envs)?;
        for k in 0..episodes {
            let env = &mut envs[pick()];
            self.train_episode(env, self.cfg.epsilon.at(k))?;
            let done = k + 1;
            let due = self.cfg.eval_every > 0 && done % self.cfg.eval_every == 0;
            if due || done == episodes {
                self.evaluate_all(stage, eval_envs)?;
            }
        }
        Ok(())
    }

    fn finish(self) -> TrainOutput<T> {
        TrainOutput {
            snapshot: self.snapshot,
            curve: self.curve,
        }
    }
}

/// Trains a defender against one opponent.
pub fn train<T: Scalar>(
    setup: &LearningSetup<T>,
    opponent: &OpponentSpec<T>,
    cfg: &TrainConfig<T>,
) -> Result<TrainOutput<T>> {
    let mut learner = Learner::new(setup, cfg)?;
    let mut envs = [setup.env(opponent)?];
    let mut eval_envs = [setup.env(opponent)?];
    learner.run_stage(0, cfg.episodes, &mut envs, &mut eval_envs, || 0)?;
    Ok(learner.finish())
}

/// Trains against an opponent drawn uniformly from `opponents` at the start
/// of each round, evaluating against each opponent separately.
pub fn run_interleaved<T: Scalar>(
    setup: &LearningSetup<T>,
    opponents: &[OpponentSpec<T>],
    cfg: &TrainConfig<T>,
) -> Result<TrainOutput<T>> {
    if opponents.is_empty() {
        return Err(Error::config("opponents", "interleaved training needs at least one opponent"));
    }
    let mut learner = Learner::new(setup, cfg)?;
    let mut envs = opponents.iter().map(|o| setup.env(o)).collect::<Result<Vec<_>>>()?;
    let mut eval_envs = opponents.iter().map(|o| setup.env(o)).collect::<Result<Vec<_>>>()?;
    let mut draws = opponent_draws(cfg.seed, opponents.len());
    learner.run_stage(0, cfg.episodes, &mut envs, &mut eval_envs, &mut draws)?;
    Ok(learner.finish())
}

/// Seeded uniform opponent-index sequence used by interleaved training.
pub fn opponent_draws(seed: u64, n: usize) -> impl FnMut() -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_OPPONENT, 0));
    move || rng.gen_range(0..n)
}

/// One curriculum stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CurriculumStage<T> {
    pub opponent: OpponentSpec<T>,
    pub episodes: u64,
}

/// Trains through `stages` in order, each starting from the previous stage's
/// table. Evaluations cover every opponent met so far. `cfg.episodes` is
/// ignored in favor of the per-stage counts; the exploration schedule
/// restarts at each stage.
pub fn run_curriculum<T: Scalar>(
    setup: &LearningSetup<T>,
    stages: &[CurriculumStage<T>],
    cfg: &TrainConfig<T>,
) -> Result<TrainOutput<T>> {
    if stages.is_empty() {
        return Err(Error::config("stages", "curriculum needs at least one stage"));
    }
    let mut learner = Learner::new(setup, cfg)?;
    let mut seen: Vec<OpponentSpec<T>> = Vec::new();
    for (i, stage) in stages.iter().enumerate() {
        if !seen.contains(&stage.opponent) {
            seen.push(stage.opponent.clone());
        }
        let mut envs = [setup.env(&stage.opponent)?];
        let mut eval_envs = seen.iter().map(|o| setup.env(o)).collect::<Result<Vec<_>>>()?;
        learner.run_stage(i, stage.episodes, &mut envs, &mut eval_envs, || 0)?;
    }
    Ok(learner.finish())
}

/// Mean greedy-evaluation score of the untrained (all-zero) policy.
pub fn baseline_score<T: Scalar>(
    setup: &LearningSetup<T>,
    opponent: &OpponentSpec<T>,
    n_episodes: u32,
    seed: u64,
) -> Result<f64> {
    let meta = SnapshotMeta {
        episodes_trained: 0,
        opponents_seen: Vec::new(),
        reward_profile: setup.reward_label.clone(),
        heading_sectors: setup.field.heading_sectors,
    };
    let zero = PolicySnapshot::zero(setup.discretizer.clone(), setup.field.action_count(), meta);
    Ok(evaluate(&zero, setup, opponent, n_episodes, seed, false)?.mean_score)
}
