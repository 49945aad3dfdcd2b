//! Experiment configuration file (TOML).
//!
//! Every key is optional. Section tables override individual keys of their
//! defaults; unknown keys are rejected. `dump_config` writes the fully
//! resolved form, which loads back to an equal config.
//!
//! ```toml
//! seeds = [0, 1, 2]
//! profile = "BTRS"          # SR, TRS, BRS, BTRS, EFF, joined with +, optional gradient prefix
//! constants = "ppo"         # ppo | dqn shaping calibration
//! regime = "single"         # single | interleaved | curriculum
//! opponent = "att_e"        # single regime
//! opponents = ["att_e", "att_h"]   # interleaved regime
//! log_episodes = 10         # final-evaluation episodes written as JSONL
//! output = "runs/btrs"
//!
//! [[stages]]                # curriculum regime
//! opponent = "att_e"
//! episodes = 2000
//!
//! [field]
//! preset = "reduced"        # full | reduced, then per-key overrides
//! tag_range = 3.0
//!
//! [reward]                  # overrides of the profile's RewardSpec
//! mode = "direct_additive"
//!
//! [att_e]
//! [att_h]
//! [train]
//! [discretizer]
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use ctf_core::agents::{AttEConfig, AttHConfig, OpponentSpec};
use ctf_core::env::EnvConfig;
use ctf_core::learning::{CurriculumStage, DiscretizerConfig, LearningSetup, TrainConfig};
use ctf_core::rewards::{RewardProfile, RewardSpec, ShapingConstants};
use ctf_core::engine::FieldConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{Error, Result};

pub const OPPONENTS: [&str; 2] = ["att_e", "att_h"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    Single,
    Interleaved,
    Curriculum,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Regime {
    Single { opponent: String },
    Interleaved { opponents: Vec<String> },
    Curriculum { stages: Vec<(String, u64)> },
}

impl Regime {
    /// Opponent labels in first-met order.
    pub fn opponents(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let all: Vec<&String> = match self {
            Regime::Single { opponent } => vec![opponent],
            Regime::Interleaved { opponents } => opponents.iter().collect(),
            Regime::Curriculum { stages } => stages.iter().map(|(o, _)| o).collect(),
        };
        for o in all {
            if !out.contains(o) {
                out.push(o.clone());
            }
        }
        out
    }
}

/// Fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seeds: Vec<u64>,
    pub profile: String,
    pub constants: String,
    pub field_preset: String,
    pub field: FieldConfig<f64>,
    pub reward: RewardSpec<f64>,
    pub att_e: AttEConfig<f64>,
    pub att_h: AttHConfig<f64>,
    pub regime: Regime,
    pub train: TrainConfig<f64>,
    pub discretizer: DiscretizerConfig<f64>,
    pub log_episodes: u32,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        parse_config("").expect("empty config resolves")
    }
}

impl ExperimentConfig {
    pub fn opponent(&self, label: &str) -> Result<OpponentSpec<f64>> {
        match label {
            "att_e" => Ok(OpponentSpec::AttE(self.att_e.clone())),
            "att_h" => Ok(OpponentSpec::AttH(self.att_h.clone())),
            other => Err(Error::config("opponent", format!("unknown opponent `{other}` (expected att_e or att_h)"))),
        }
    }

    pub fn setup(&self) -> LearningSetup<f64> {
        LearningSetup {
            field: self.field.clone(),
            reward: self.reward.clone(),
            reward_label: self.profile.clone(),
            discretizer: self.discretizer.clone(),
        }
    }

    pub fn env_config(&self, opponent: &str) -> Result<EnvConfig<f64>> {
        Ok(EnvConfig {
            field: self.field.clone(),
            opponent: self.opponent(opponent)?,
            reward: self.reward.clone(),
        })
    }

    pub fn curriculum(&self) -> Result<Vec<CurriculumStage<f64>>> {
        let Regime::Curriculum { stages } = &self.regime else {
            return Err(Error::Usage("not a curriculum config".into()));
        };
        stages
            .iter()
            .map(|(o, n)| {
                Ok(CurriculumStage {
                    opponent: self.opponent(o)?,
                    episodes: *n,
                })
            })
            .collect()
    }

    /// Switches to the single regime against `opponent`.
    pub fn set_opponent(&mut self, opponent: &str) -> Result<()> {
        self.opponent(opponent)?;
        self.regime = Regime::Single {
            opponent: opponent.to_string(),
        };
        Ok(())
    }

    /// Replaces the profile, rebuilding the reward spec from the current
    /// constants. Reward overrides from the file are dropped.
    pub fn set_profile(&mut self, profile: &str) -> Result<()> {
        let p: RewardProfile = profile.parse()?;
        let constants = ShapingConstants::named(&self.constants).expect("validated constants");
        self.reward = RewardSpec::from_profile(&p, &constants, &self.field);
        self.profile = p.label().to_string();
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        let unique: BTreeSet<_> = self.seeds.iter().collect();
        if unique.len() != self.seeds.len() {
            return Err(Error::config("seeds", "seeds must be distinct"));
        }
        self.field.validate()?;
        self.reward.validate()?;
        self.train.validate()?;
        self.discretizer.validate()?;
        if self.reward.gamma != self.train.gamma {
            return Err(Error::config(
                "reward.gamma, train.gamma",
                format!(
                    "shaping discount ({}) must equal the learner's discount ({})",
                    self.reward.gamma, self.train.gamma
                ),
            ));
        }
        match &self.regime {
            Regime::Single { .. } => {}
            Regime::Interleaved { opponents } if opponents.is_empty() => {
                return Err(Error::config("opponents", "interleaved regime needs at least one opponent"))
            }
            Regime::Curriculum { stages } if stages.is_empty() => {
                return Err(Error::config("stages", "curriculum regime needs at least one stage"))
            }
            _ => {}
        }
        for o in self.regime.opponents() {
            self.opponent(&o)?.validate(&self.field)?;
        }
        Ok(())
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    parse_config(&text).map_err(|e| match e {
        Error::Parse { line, message, .. } => Error::Parse {
            path: path.display().to_string(),
            line,
            message,
        },
        other => other,
    })
}

const TOP_KEYS: [&str; 15] = [
    "seeds",
    "profile",
    "constants",
    "regime",
    "opponent",
    "opponents",
    "stages",
    "log_episodes",
    "output",
    "field",
    "reward",
    "att_e",
    "att_h",
    "train",
    "discretizer",
];

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut doc: Table = text.parse::<Table>().map_err(|e| {
        let line = e.span().map_or(0, |s| text[..s.start].matches('\n').count() + 1);
        Error::Parse {
            path: "<config>".into(),
            line,
            message: e.message().to_string(),
        }
    })?;
    if let Some(k) = doc.keys().find(|k| !TOP_KEYS.contains(&k.as_str())) {
        return Err(Error::config(k.clone(), "unknown key"));
    }

    let seeds: Vec<u64> = take(&mut doc, "seeds")?.unwrap_or_else(|| vec![0]);
    let profile: String = take(&mut doc, "profile")?.unwrap_or_else(|| "SR".into());
    let constants_name: String = take(&mut doc, "constants")?.unwrap_or_else(|| "ppo".into());
    let constants = ShapingConstants::named(&constants_name)
        .ok_or_else(|| Error::config("constants", format!("unknown constants `{constants_name}` (expected ppo or dqn)")))?;
    let parsed_profile: RewardProfile = profile.parse()?;

    let mut field_table = take_table(&mut doc, "field")?;
    let preset = match field_table.remove("preset") {
        None => "full".to_string(),
        Some(Value::String(s)) => s,
        Some(_) => return Err(Error::config("field.preset", "must be a string")),
    };
    let base_field = FieldConfig::preset(&preset)
        .ok_or_else(|| Error::config("field.preset", format!("unknown preset `{preset}` (expected full or reduced)")))?;
    let field: FieldConfig<f64> = merge(&base_field, field_table, "field")?;
    // Potentials are built from the ranges, so these must be sound first.
    field.validate()?;

    let base_reward = RewardSpec::from_profile(&parsed_profile, &constants, &field);
    let reward: RewardSpec<f64> = merge(&base_reward, take_table(&mut doc, "reward")?, "reward")?;
    let att_e: AttEConfig<f64> = merge(&AttEConfig::default(), take_table(&mut doc, "att_e")?, "att_e")?;
    let att_h: AttHConfig<f64> = merge(&AttHConfig::for_field(&field), take_table(&mut doc, "att_h")?, "att_h")?;

    let mut train_table = take_table(&mut doc, "train")?;
    let mut base_train = TrainConfig::<f64>::default();
    if let Some(v) = train_table.remove("alpha_profile") {
        let Value::String(name) = v else {
            return Err(Error::config("train.alpha_profile", "must be a string"));
        };
        base_train = base_train.with_alpha_profile(&name)?;
    }
    let train: TrainConfig<f64> = merge(&base_train, train_table, "train")?;
    let discretizer: DiscretizerConfig<f64> = merge(
        &DiscretizerConfig::for_field(&field),
        take_table(&mut doc, "discretizer")?,
        "discretizer",
    )?;

    let regime_kind: RegimeKind = take(&mut doc, "regime")?.unwrap_or(RegimeKind::Single);
    let opponent: Option<String> = take(&mut doc, "opponent")?;
    let opponents: Option<Vec<String>> = take(&mut doc, "opponents")?;
    let stages: Option<Vec<StageEntry>> = take(&mut doc, "stages")?;
    let regime = match regime_kind {
        RegimeKind::Single => {
            forbid(opponents.is_some(), "opponents", "single")?;
            forbid(stages.is_some(), "stages", "single")?;
            Regime::Single {
                opponent: opponent.unwrap_or_else(|| "att_e".into()),
            }
        }
        RegimeKind::Interleaved => {
            forbid(opponent.is_some(), "opponent", "interleaved")?;
            forbid(stages.is_some(), "stages", "interleaved")?;
            Regime::Interleaved {
                opponents: opponents.unwrap_or_else(|| OPPONENTS.map(String::from).to_vec()),
            }
        }
        RegimeKind::Curriculum => {
            forbid(opponent.is_some(), "opponent", "curriculum")?;
            forbid(opponents.is_some(), "opponents", "curriculum")?;
            let stages = stages.ok_or_else(|| Error::config("stages", "curriculum regime needs [[stages]]"))?;
            Regime::Curriculum {
                stages: stages.into_iter().map(|s| (s.opponent, s.episodes)).collect(),
            }
        }
    };
    for (i, o) in regime.opponents().iter().enumerate() {
        if !OPPONENTS.contains(&o.as_str()) {
            let key = match regime_kind {
                RegimeKind::Single => "opponent".to_string(),
                RegimeKind::Interleaved => format!("opponents[{i}]"),
                RegimeKind::Curriculum => "stages.opponent".to_string(),
            };
            return Err(Error::config(key, format!("unknown opponent `{o}` (expected att_e or att_h)")));
        }
    }

    let log_episodes: u32 = take(&mut doc, "log_episodes")?.unwrap_or(10);
    let output: Option<PathBuf> = take::<String>(&mut doc, "output")?.map(PathBuf::from);

    let cfg = ExperimentConfig {
        seeds,
        profile: parsed_profile.label().to_string(),
        constants: constants_name.to_ascii_lowercase(),
        field_preset: preset,
        field,
        reward,
        att_e,
        att_h,
        regime,
        train,
        discretizer,
        log_episodes,
        output,
    };
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StageEntry {
    opponent: String,
    episodes: u64,
}

fn forbid(present: bool, key: &str, regime: &str) -> Result<()> {
    if present {
        return Err(Error::config(key, format!("not used by the {regime} regime")));
    }
    Ok(())
}

fn take<T: DeserializeOwned>(doc: &mut Table, key: &str) -> Result<Option<T>> {
    doc.remove(key)
        .map(|v| {
            serde_path_to_error::deserialize(v).map_err(|e| {
                let path = e.path().to_string();
                let key = if path == "." { key.to_string() } else { format!("{key}.{path}") };
                Error::config(key, e.into_inner().message().to_string())
            })
        })
        .transpose()
}

fn take_table(doc: &mut Table, key: &str) -> Result<Table> {
    match doc.remove(key) {
        None => Ok(Table::new()),
        Some(Value::Table(t)) => Ok(t),
        Some(_) => Err(Error::config(key, "must be a table")),
    }
}

/// Overlays `overrides` onto the serialized `base` and deserializes the result.
fn merge<T: Serialize + DeserializeOwned>(base: &T, overrides: Table, section: &str) -> Result<T> {
    let mut merged = Table::try_from(base).expect("config types serialize to TOML tables");
    overlay(&mut merged, overrides, section)?;
    serde_path_to_error::deserialize(merged).map_err(|e| {
        let path = e.path().to_string();
        let key = if path == "." { section.to_string() } else { format!("{section}.{path}") };
        Error::config(key, e.into_inner().message().to_string())
    })
}

fn overlay(base: &mut Table, overrides: Table, prefix: &str) -> Result<()> {
    for (k, v) in overrides {
        let key = format!("{prefix}.{k}");
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => overlay(b, o, &key)?,
            (Some(slot), v) => *slot = v,
            (None, _) => return Err(Error::config(key, "unknown key")),
        }
    }
    Ok(())
}

/// Resolved config as TOML. Loading the output gives back an equal config.
pub fn dump_config(cfg: &ExperimentConfig) -> String {
    let mut doc = Table::new();
    let ints = |v: &[u64]| Value::Array(v.iter().map(|s| Value::Integer(*s as i64)).collect());
    doc.insert("seeds".into(), ints(&cfg.seeds));
    doc.insert("profile".into(), Value::String(cfg.profile.clone()));
    doc.insert("constants".into(), Value::String(cfg.constants.clone()));
    doc.insert("log_episodes".into(), Value::Integer(cfg.log_episodes.into()));
    if let Some(out) = &cfg.output {
        doc.insert("output".into(), Value::String(out.display().to_string()));
    }
    match &cfg.regime {
        Regime::Single { opponent } => {
            doc.insert("regime".into(), Value::String("single".into()));
            doc.insert("opponent".into(), Value::String(opponent.clone()));
        }
        Regime::Interleaved { opponents } => {
            doc.insert("regime".into(), Value::String("interleaved".into()));
            doc.insert(
                "opponents".into(),
                Value::Array(opponents.iter().cloned().map(Value::String).collect()),
            );
        }
        Regime::Curriculum { stages } => {
            doc.insert("regime".into(), Value::String("curriculum".into()));
            let arr = stages
                .iter()
                .map(|(o, n)| {
                    let mut t = Table::new();
                    t.insert("opponent".into(), Value::String(o.clone()));
                    t.insert("episodes".into(), Value::Integer(*n as i64));
                    Value::Table(t)
                })
                .collect();
            doc.insert("stages".into(), Value::Array(arr));
        }
    }
    let mut field = Table::try_from(&cfg.field).expect("field serializes");
    field.insert("preset".into(), Value::String(cfg.field_preset.clone()));
    doc.insert("field".into(), Value::Table(field));
    let table = |v: Table| Value::Table(v);
    doc.insert("reward".into(), table(Table::try_from(&cfg.reward).expect("reward serializes")));
    doc.insert("att_e".into(), table(Table::try_from(&cfg.att_e).expect("att_e serializes")));
    doc.insert("att_h".into(), table(Table::try_from(&cfg.att_h).expect("att_h serializes")));
    doc.insert("train".into(), table(Table::try_from(&cfg.train).expect("train serializes")));
    doc.insert(
        "discretizer".into(),
        table(Table::try_from(&cfg.discretizer).expect("discretizer serializes")),
    );
    toml::to_string_pretty(&doc).expect("table serializes")
}
