use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use super::message::{AgentMessage, ChooseActions, Handshake, ReceiveTransitions, ServerMessage};
use super::transport::Connection;
use super::{ProtocolError, DEFAULT_TIMEOUT, PROTOCOL_VERSION};
use crate::agent::{Agent, AgentError, AgentEvent, AgentFactory, AgentInit, Transition};
use crate::gridworld::Observation;

/// How to reach an external agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transport {
    /// A shell command whose stdin/stdout carry the protocol.
    Exec(String),
    /// An agent listening on a TCP address; one connection per lifetime.
    Tcp(String),
}

impl FromStr for Transport {
    type Err = String;

    /// Parses `exec:<command>` or `tcp:<host:port>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(cmd) = s.strip_prefix("exec:") {
            if cmd.trim().is_empty() {
                return Err("exec: needs a command".into());
            }
            Ok(Transport::Exec(cmd.to_string()))
        } else if let Some(addr) = s.strip_prefix("tcp:") {
            if addr.is_empty() {
                return Err("tcp: needs an address".into());
            }
            Ok(Transport::Tcp(addr.to_string()))
        } else {
            Err(format!(
                "expected exec:<command> or tcp:<address>, got {s:?}"
            ))
        }
    }
}

impl fmt::Display for Transport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transport::Exec(cmd) => write!(f, "exec:{cmd}"),
            Transport::Tcp(addr) => write!(f, "tcp:{addr}"),
        }
    }
}

/// Agent handle that forwards every call as a request and waits for the
/// matching reply. Requests and replies strictly alternate.
pub struct ProtocolAgent {
    conn: Option<Connection>,
    next_seq: u64,
    agent_name: String,
}

impl ProtocolAgent {
    /// Performs the handshake over an established connection.
    pub fn handshake(conn: Connection, init: &AgentInit) -> Result<Self, ProtocolError> {
        let mut agent = ProtocolAgent {
            agent_name: conn.peer().to_string(),
            conn: Some(conn),
            next_seq: 1,
        };
        let hello = ServerMessage::Handshake(Handshake::new(init.num_envs, init.agent_seed));
        match agent.request(&hello, "handshake_ack")? {
            AgentMessage::HandshakeAck(ack) => {
                if let Some(version) = ack.version.filter(|&v| v != PROTOCOL_VERSION) {
                    return Err(ProtocolError::VersionMismatch {
                        expected: PROTOCOL_VERSION,
                        actual: version,
                    });
                }
                agent.agent_name = ack.agent_name;
                Ok(agent)
            }
            other => Err(unexpected("handshake_ack", &other)),
        }
    }

    fn conn(&mut self) -> Result<&mut Connection, ProtocolError> {
        self.conn
            .as_mut()
            .ok_or(ProtocolError::Closed { status: None })
    }

    fn send(&mut self, msg: &ServerMessage) -> Result<u64, ProtocolError> {
        let seq = self.next_seq;
        self.next_seq += 1;
        let line = msg.encode(seq);
        self.conn()?.send_line(&line)?;
        Ok(seq)
    }

    fn request(
        &mut self,
        msg: &ServerMessage,
        expect: &'static str,
    ) -> Result<AgentMessage, ProtocolError> {
        let seq = self.send(msg)?;
        let line = self.conn()?.recv_line(expect)?;
        let (actual, reply) = AgentMessage::decode(&line)?;
        if actual != seq {
            return Err(ProtocolError::WrongSeq {
                expected: seq,
                actual,
            });
        }
        if let AgentMessage::Error(failure) = reply {
            return Err(ProtocolError::AgentReported(failure.message));
        }
        Ok(reply)
    }

    fn expect_ack(&mut self, msg: &ServerMessage) -> Result<(), ProtocolError> {
        match self.request(msg, "ack")? {
            AgentMessage::Ack => Ok(()),
            other => Err(unexpected("ack", &other)),
        }
    }
}

fn unexpected(expected: &'static str, actual: &AgentMessage) -> ProtocolError {
    ProtocolError::Unexpected {
        expected,
        actual: actual.type_name().to_string(),
    }
}

impl Agent for ProtocolAgent {
    fn name(&self) -> String {
        self.agent_name.clone()
    }

    fn on_event(&mut self, event: &AgentEvent) -> Result<(), AgentError> {
        Ok(self.expect_ack(&ServerMessage::Event(event.clone()))?)
    }

    fn choose_actions(
        &mut self,
        observations: &[Option<Observation>],
    ) -> Result<Vec<Option<u8>>, AgentError> {
        let msg = ServerMessage::ChooseActions(ChooseActions {
            observations: observations.to_vec(),
        });
        match self.request(&msg, "actions")? {
            AgentMessage::Actions(a) => Ok(a.actions),
            other => Err(unexpected("actions", &other).into()),
        }
    }

    fn receive_transitions(
        &mut self,
        transitions: &[Option<Transition>],
    ) -> Result<(), AgentError> {
        let msg = ServerMessage::ReceiveTransitions(ReceiveTransitions {
            transitions: transitions.to_vec(),
        });
        Ok(self.expect_ack(&msg)?)
    }

    /// Sends `shutdown` and, for a spawned agent, requires a clean exit.
    fn shutdown(&mut self) -> Result<(), AgentError> {
        self.send(&ServerMessage::Shutdown)?;
        match self.conn.take() {
            Some(conn) => Ok(conn.finish()?),
            None => Ok(()),
        }
    }
}

/// Creates one protocol-backed agent per lifetime.
#[derive(Debug, Clone)]
pub struct ProtocolAgentFactory {
    pub transport: Transport,
    pub timeout: Duration,
}

impl ProtocolAgentFactory {
    pub fn new(transport: Transport) -> Self {
        ProtocolAgentFactory {
            transport,
            timeout: DEFAULT_TIMEOUT,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn serve(&self, init: &AgentInit) -> Result<ProtocolAgent, ProtocolError> {
        let conn = match &self.transport {
            Transport::Exec(cmd) => Connection::spawn(cmd, self.timeout)?,
            Transport::Tcp(addr) => Connection::connect(addr, self.timeout)?,
        };
        ProtocolAgent::handshake(conn, init)
    }
}

impl AgentFactory for ProtocolAgentFactory {
    fn name(&self) -> String {
        self.transport.to_string()
    }

    fn create(&self, init: &AgentInit) -> Result<Box<dyn Agent>, AgentError> {
        Ok(Box::new(self.serve(init)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transport_parsing() {
        assert_eq!(
            "exec:python agent.py".parse::<Transport>().unwrap(),
            Transport::Exec("python agent.py".into())
        );
        assert_eq!(
            "tcp:127.0.0.1:9000".parse::<Transport>().unwrap(),
            Transport::Tcp("127.0.0.1:9000".into())
        );
        assert!("exec:".parse::<Transport>().is_err());
        assert!("random".parse::<Transport>().is_err());
        assert_eq!(Transport::Tcp("h:1".into()).to_string(), "tcp:h:1");
    }
}
