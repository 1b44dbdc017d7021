//! Wire messages. Each is one JSON object per line carrying a `type`
//! discriminator and a `seq` number; the remaining keys are the payload.

use std::fmt;
use std::marker::PhantomData;

use serde::de::value::MapAccessDeserializer;
use serde::de::{
    DeserializeOwned, DeserializeSeed, IgnoredAny, IntoDeserializer, MapAccess, Visitor,
};
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;

use super::{ProtocolError, PROTOCOL_VERSION};
use crate::agent::{AgentEvent, Transition};
use crate::gridworld::{Observation, SpaceDescriptor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionSpace {
    pub n: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationSpace {
    pub view: [u32; 3],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Handshake {
    pub version: u32,
    pub action_space: ActionSpace,
    pub observation_space: ObservationSpace,
    pub num_envs: usize,
    pub agent_seed: u64,
}

impl Handshake {
    pub fn new(num_envs: usize, agent_seed: u64) -> Self {
        let spaces = SpaceDescriptor::GRIDWORLD;
        Handshake {
            version: PROTOCOL_VERSION,
            action_space: ActionSpace {
                n: spaces.num_actions,
            },
            observation_space: ObservationSpace { view: spaces.view },
            num_envs,
            agent_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChooseActions {
    pub observations: Vec<Option<Observation>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiveTransitions {
    pub transitions: Vec<Option<Transition>>,
}

/// Harness to agent.
#[derive(Debug, Clone, PartialEq)]
pub enum ServerMessage {
    Handshake(Handshake),
    Event(AgentEvent),
    ChooseActions(ChooseActions),
    ReceiveTransitions(ReceiveTransitions),
    Shutdown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandshakeAck {
    pub agent_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Actions {
    pub actions: Vec<Option<u8>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentFailure {
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Empty {}

/// Agent to harness.
#[derive(Debug, Clone, PartialEq)]
pub enum AgentMessage {
    HandshakeAck(HandshakeAck),
    /// Reply to `event` and `receive_transitions`.
    Ack,
    Actions(Actions),
    /// The agent gave up; the message is shown to the operator.
    Error(AgentFailure),
}

impl ServerMessage {
    pub fn type_name(&self) -> &'static str {
        match self {
            ServerMessage::Handshake(_) => "handshake",
            ServerMessage::Event(_) => "event",
            ServerMessage::ChooseActions(_) => "choose_actions",
            ServerMessage::ReceiveTransitions(_) => "receive_transitions",
            ServerMessage::Shutdown => "shutdown",
        }
    }

    pub fn encode(&self, seq: u64) -> String {
        let kind = self.type_name();
        match self {
            ServerMessage::Handshake(m) => frame(kind, seq, m),
            ServerMessage::Event(m) => frame(kind, seq, m),
            ServerMessage::ChooseActions(m) => frame(kind, seq, m),
            ServerMessage::ReceiveTransitions(m) => frame(kind, seq, m),
            ServerMessage::Shutdown => frame(kind, seq, &Empty {}),
        }
    }

    pub fn decode(line: &str) -> Result<(u64, ServerMessage), ProtocolError> {
        let (kind, seq) = open_envelope(line)?;
        let msg = match kind.as_str() {
            "handshake" => ServerMessage::Handshake(payload(line)?),
            "event" => ServerMessage::Event(payload(line)?),
            "choose_actions" => ServerMessage::ChooseActions(payload(line)?),
            "receive_transitions" => ServerMessage::ReceiveTransitions(payload(line)?),
            "shutdown" => {
                payload::<Empty>(line)?;
                ServerMessage::Shutdown
            }
            other => return Err(malformed(line, format!("unknown message type {other:?}"))),
        };
        Ok((seq, msg))
    }
}

impl AgentMessage {
    pub fn type_name(&self) -> &'static str {
        match self {
            AgentMessage::HandshakeAck(_) => "handshake_ack",
            AgentMessage::Ack => "ack",
            AgentMessage::Actions(_) => "actions",
            AgentMessage::Error(_) => "error",
        }
    }

    pub fn encode(&self, seq: u64) -> String {
        let kind = self.type_name();
        match self {
            AgentMessage::HandshakeAck(m) => frame(kind, seq, m),
            AgentMessage::Ack => frame(kind, seq, &Empty {}),
            AgentMessage::Actions(m) => frame(kind, seq, m),
            AgentMessage::Error(m) => frame(kind, seq, m),
        }
    }

    pub fn decode(line: &str) -> Result<(u64, AgentMessage), ProtocolError> {
        let (kind, seq) = open_envelope(line)?;
        let msg = match kind.as_str() {
            "handshake_ack" => AgentMessage::HandshakeAck(payload(line)?),
            "ack" => {
                payload::<Empty>(line)?;
                AgentMessage::Ack
            }
            "actions" => AgentMessage::Actions(payload(line)?),
            "error" => AgentMessage::Error(payload(line)?),
            other => return Err(malformed(line, format!("unknown message type {other:?}"))),
        };
        Ok((seq, msg))
    }
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    #[serde(rename = "type")]
    kind: &'a str,
    seq: u64,
    #[serde(flatten)]
    payload: &'a T,
}

fn frame<T: Serialize>(kind: &str, seq: u64, payload: &T) -> String {
    serde_json::to_string(&Envelope { kind, seq, payload }).expect("message payloads serialize")
}

fn malformed(line: &str, message: String) -> ProtocolError {
    const SHOWN: usize = 200;
    let shown = match line.char_indices().nth(SHOWN) {
        Some((cut, _)) => format!("{}...", &line[..cut]),
        None => line.to_string(),
    };
    ProtocolError::Malformed {
        line: shown,
        message,
    }
}

/// Just the envelope keys; everything else is skipped unparsed.
#[derive(Deserialize)]
struct Header {
    #[serde(rename = "type")]
    kind: Option<Value>,
    seq: Option<Value>,
}

fn open_envelope(line: &str) -> Result<(String, u64), ProtocolError> {
    if !line.trim_start().starts_with('{') {
        let problem = match serde_json::from_str::<IgnoredAny>(line) {
            Ok(_) => "message is not a JSON object".to_string(),
            Err(e) => format!("invalid JSON: {e}"),
        };
        return Err(malformed(line, problem));
    }
    let header: Header =
        serde_json::from_str(line).map_err(|e| malformed(line, format!("invalid JSON: {e}")))?;
    let kind = match header.kind {
        Some(Value::String(s)) => s,
        Some(_) => return Err(malformed(line, "\"type\" is not a string".into())),
        None => return Err(malformed(line, "missing \"type\"".into())),
    };
    let seq = match header.seq {
        Some(v) => v
            .as_u64()
            .ok_or_else(|| malformed(line, "\"seq\" is not a non-negative integer".into()))?,
        None => return Err(malformed(line, "missing \"seq\"".into())),
    };
    Ok((kind, seq))
}

/// Parses the payload straight from the line, without an intermediate
/// `Value` tree; observations make messages large enough for that to matter.
fn payload<T: DeserializeOwned>(line: &str) -> Result<T, ProtocolError> {
    serde_json::from_str::<Body<T>>(line)
        .map(|b| b.0)
        .map_err(|e| malformed(line, e.to_string()))
}

/// A message object read as `T` with the envelope keys removed.
struct Body<T>(T);

impl<'de, T: Deserialize<'de>> Deserialize<'de> for Body<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct BodyVisitor<T>(PhantomData<T>);

        impl<'de, T: Deserialize<'de>> Visitor<'de> for BodyVisitor<T> {
            type Value = Body<T>;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a message object")
            }

            fn visit_map<A: MapAccess<'de>>(self, map: A) -> Result<Body<T>, A::Error> {
                T::deserialize(MapAccessDeserializer::new(WithoutEnvelope(map))).map(Body)
            }
        }

        deserializer.deserialize_map(BodyVisitor(PhantomData))
    }
}

struct WithoutEnvelope<A>(A);

impl<'de, A: MapAccess<'de>> MapAccess<'de> for WithoutEnvelope<A> {
    type Error = A::Error;

    fn next_key_seed<K: DeserializeSeed<'de>>(
        &mut self,
        seed: K,
    ) -> Result<Option<K::Value>, A::Error> {
        while let Some(key) = self.0.next_key::<String>()? {
            if key == "type" || key == "seq" {
                self.0.next_value::<IgnoredAny>()?;
                continue;
            }
            let key: serde::de::value::StringDeserializer<A::Error> = key.into_deserializer();
            return seed.deserialize(key).map(Some);
        }
        Ok(None)
    }

    fn next_value_seed<V: DeserializeSeed<'de>>(&mut self, seed: V) -> Result<V::Value, A::Error> {
        self.0.next_value_seed(seed)
    }
}
