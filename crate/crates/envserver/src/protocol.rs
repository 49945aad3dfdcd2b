//! Message types and their one-line JSON encoding.

use ctf_core::engine::{extract_features, Action, GameEvent, GameState, Role, TerminalCause};
use ctf_core::env::EnvConfig;
use ctf_core::rewards::RewardBreakdown;
use ctf_core::{FeatureVector, FieldConfig, Vec2};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PROTOCOL_VERSION: &str = "1";

/// One protocol line. The JSON object carries a `type` tag naming the variant;
/// the remaining keys are the payload fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ProtocolMessage {
    Hello(Hello),
    Configure(Configure),
    Reset(Reset),
    Step(Step),
    Observation(ObservationMsg),
    Reward(RewardMsg),
    Done(Done),
    Info(Info),
    Error(ErrorMsg),
    Bye(Bye),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Hello {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<u64>,
    /// Version the client speaks. Informational.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configure {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<u64>,
    pub config: EnvConfig<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reset {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<u64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<u64>,
    pub action: Action,
}

/// Defender's view plus raw positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub step: u32,
    pub flag_grabbed: bool,
    pub attacker_position: Vec2,
    pub defender_position: Vec2,
    pub features: FeatureVector,
}

impl Observation {
    pub fn of(state: &GameState<f64>, field: &FieldConfig) -> Self {
        Self {
            step: state.step_count,
            flag_grabbed: state.flag_grabbed,
            attacker_position: state.attacker.position,
            defender_position: state.defender.position,
            features: extract_features(state, Role::Defender, field),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationMsg {
    pub session: u64,
    pub observation: Observation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardMsg {
    pub session: u64,
    /// Sum of the breakdown components.
    pub reward: f64,
    pub breakdown: RewardBreakdown<f64>,
    pub events: Vec<GameEvent<f64>>,
    pub observation: Observation,
}

/// Final step of an episode. Same payload as `reward` plus the cause.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Done {
    pub session: u64,
    pub cause: TerminalCause,
    pub reward: f64,
    pub breakdown: RewardBreakdown<f64>,
    pub events: Vec<GameEvent<f64>>,
    pub observation: Observation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Info {
    pub session: u64,
    pub version: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadMessage,
    ExpectedHello,
    UnexpectedMessage,
    BadConfig,
    BadAction,
    NotInEpisode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorMsg {
    pub session: u64,
    pub code: ErrorCode,
    /// Offending field for decode and config errors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Bye {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<u64>,
}

impl ProtocolMessage {
    pub fn type_name(&self) -> &'static str {
        match self {
            ProtocolMessage::Hello(_) => "hello",
            ProtocolMessage::Configure(_) => "configure",
            ProtocolMessage::Reset(_) => "reset",
            ProtocolMessage::Step(_) => "step",
            ProtocolMessage::Observation(_) => "observation",
            ProtocolMessage::Reward(_) => "reward",
            ProtocolMessage::Done(_) => "done",
            ProtocolMessage::Info(_) => "info",
            ProtocolMessage::Error(_) => "error",
            ProtocolMessage::Bye(_) => "bye",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}: {message}", field.as_deref().map_or("message".to_string(), |f| format!("field `{f}`")))]
pub struct DecodeError {
    /// Dotted path of the offending field, when one can be named.
    pub field: Option<String>,
    pub message: String,
}

impl DecodeError {
    fn new(field: Option<String>, message: impl Into<String>) -> Self {
        Self {
            field,
            message: message.into(),
        }
    }
}

/// Serializes `m` as one JSON object, without the trailing newline.
pub fn encode_message(m: &ProtocolMessage) -> String {
    serde_json::to_string(m).expect("protocol messages always serialize")
}

/// Parses one line. Unknown keys are dropped; unknown `type` values are
/// rejected.
pub fn decode_message(line: &str) -> Result<ProtocolMessage, DecodeError> {
    let line = line.trim_end_matches(['\n', '\r']);
    if line.trim().is_empty() {
        return Err(DecodeError::new(None, "empty line"));
    }
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| DecodeError::new(None, format!("malformed JSON: {e}")))?;
    let serde_json::Value::Object(mut obj) = value else {
        return Err(DecodeError::new(None, "expected a JSON object"));
    };
    let kind = match obj.remove("type") {
        Some(serde_json::Value::String(s)) => s,
        Some(_) => return Err(DecodeError::new(Some("type".into()), "must be a string")),
        None => return Err(DecodeError::new(Some("type".into()), "missing field")),
    };
    let body = serde_json::Value::Object(obj);
    Ok(match kind.as_str() {
        "hello" => ProtocolMessage::Hello(payload(body)?),
        "configure" => ProtocolMessage::Configure(payload(body)?),
        "reset" => ProtocolMessage::Reset(payload(body)?),
        "step" => ProtocolMessage::Step(payload(body)?),
        "observation" => ProtocolMessage::Observation(payload(body)?),
        "reward" => ProtocolMessage::Reward(payload(body)?),
        "done" => ProtocolMessage::Done(payload(body)?),
        "info" => ProtocolMessage::Info(payload(body)?),
        "error" => ProtocolMessage::Error(payload(body)?),
        "bye" => ProtocolMessage::Bye(payload(body)?),
        other => {
            return Err(DecodeError::new(
                Some("type".into()),
                format!("unknown message type `{other}`"),
            ))
        }
    })
}

fn payload<M: DeserializeOwned>(body: serde_json::Value) -> Result<M, DecodeError> {
    serde_path_to_error::deserialize(body).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner().to_string();
        // Missing keys are reported against their parent; append the key.
        let missing = inner
            .strip_prefix("missing field `")
            .and_then(|r| r.split('`').next())
            .map(str::to_string);
        let field = match (path.as_str(), missing) {
            (".", Some(m)) => Some(m),
            (".", None) => None,
            (p, Some(m)) => Some(format!("{p}.{m}")),
            (p, None) => Some(p.to_string()),
        };
        DecodeError::new(field, inner)
    })
}
