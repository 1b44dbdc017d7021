use std::io::{BufRead, Write};

use super::message::{Actions, AgentFailure, AgentMessage, HandshakeAck, ServerMessage};
use super::{ProtocolError, PROTOCOL_VERSION};
use crate::agent::{Agent, AgentInit};
use crate::gridworld::SpaceDescriptor;

/// Serves one lifetime on the agent side: answers the handshake by
/// building an agent with `make`, then dispatches each request until
/// `shutdown`.
///
/// Agent failures are reported to the harness as an `error` message before
/// returning `Err`.
pub fn run_agent_loop<R, W, F>(reader: R, mut writer: W, make: F) -> Result<(), ProtocolError>
where
    R: BufRead,
    W: Write,
    F: FnOnce(&AgentInit) -> Box<dyn Agent>,
{
    let mut lines = reader.lines();
    let mut next_line = |waiting_for: &'static str| -> Result<String, ProtocolError> {
        match lines.next() {
            Some(Ok(line)) => Ok(line),
            Some(Err(e)) => Err(ProtocolError::Io(e)),
            None => Err(ProtocolError::Closed {
                status: Some(format!("end of input while waiting for {waiting_for}")),
            }),
        }
    };
    let mut reply = |seq: u64, msg: AgentMessage| -> Result<(), ProtocolError> {
        let mut line = msg.encode(seq);
        line.push('\n');
        writer.write_all(line.as_bytes())?;
        writer.flush()?;
        Ok(())
    };

    let (mut last_seq, hello) = ServerMessage::decode(&next_line("handshake")?)?;
    let ServerMessage::Handshake(hello) = hello else {
        return Err(ProtocolError::Unexpected {
            expected: "handshake",
            actual: hello.type_name().to_string(),
        });
    };
    if hello.version != PROTOCOL_VERSION {
        return Err(ProtocolError::VersionMismatch {
            expected: PROTOCOL_VERSION,
            actual: hello.version,
        });
    }
    let spaces = SpaceDescriptor::GRIDWORLD;
    if hello.action_space.n != spaces.num_actions || hello.observation_space.view != spaces.view {
        return Err(ProtocolError::SpaceMismatch(format!(
            "offered {} actions and view {:?}",
            hello.action_space.n, hello.observation_space.view
        )));
    }
    let mut agent = make(&AgentInit {
        agent_seed: hello.agent_seed,
        num_envs: hello.num_envs,
    });
    reply(
        last_seq,
        AgentMessage::HandshakeAck(HandshakeAck {
            agent_name: agent.name(),
            version: Some(PROTOCOL_VERSION),
        }),
    )?;

    loop {
        let (seq, msg) = ServerMessage::decode(&next_line("a request")?)?;
        if seq <= last_seq {
            return Err(ProtocolError::WrongSeq {
                expected: last_seq + 1,
                actual: seq,
            });
        }
        last_seq = seq;
        let outcome = match msg {
            ServerMessage::Handshake(_) => {
                return Err(ProtocolError::Unexpected {
                    expected: "a request",
                    actual: "handshake".into(),
                })
            }
            ServerMessage::Event(event) => agent.on_event(&event).map(|_| AgentMessage::Ack),
            ServerMessage::ChooseActions(req) => agent
                .choose_actions(&req.observations)
                .map(|actions| AgentMessage::Actions(Actions { actions })),
            ServerMessage::ReceiveTransitions(req) => agent
                .receive_transitions(&req.transitions)
                .map(|_| AgentMessage::Ack),
            ServerMessage::Shutdown => {
                return agent
                    .shutdown()
                    .map_err(|e| ProtocolError::AgentReported(e.to_string()))
            }
        };
        match outcome {
            Ok(msg) => reply(seq, msg)?,
            Err(e) => {
                let message = e.to_string();
                // Best effort: the harness may already be gone.
                let _ = reply(
                    seq,
                    AgentMessage::Error(AgentFailure {
                        message: message.clone(),
                    }),
                );
                return Err(ProtocolError::AgentReported(message));
            }
        }
    }
}
