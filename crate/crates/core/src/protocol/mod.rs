//! JSON-lines wire protocol for agents running in another process.
//!
//! The harness sends one request per line and waits for exactly one reply
//! (except after `shutdown`, which is answered by the agent process
//! exiting). Every request carries an increasing `seq` that the reply must
//! echo. Masked slots travel as JSON `null`.
//!
//! | request               | reply                   |
//! |-----------------------|-------------------------|
//! | `handshake`           | `handshake_ack`         |
//! | `event`               | `ack`                   |
//! | `choose_actions`      | `actions`               |
//! | `receive_transitions` | `ack`                   |
//! | `shutdown`            | (process exits 0)       |
//!
//! Any request may instead be answered with `error{message}`, which aborts
//! the lifetime.

mod client;
mod message;
mod server;
mod transport;

use std::time::Duration;

use thiserror::Error;

pub use client::run_agent_loop;
pub use message::{
    ActionSpace, Actions, AgentFailure, AgentMessage, ChooseActions, Handshake, HandshakeAck,
    ObservationSpace, ReceiveTransitions, ServerMessage,
};
pub use server::{ProtocolAgent, ProtocolAgentFactory, Transport};
pub use transport::Connection;

pub const PROTOCOL_VERSION: u32 = 1;

/// How long the harness waits for any single reply by default.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("protocol i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot launch agent `{command}`: {source}")]
    Spawn {
        command: String,
        source: std::io::Error,
    },
    #[error("cannot connect to agent at {addr}: {source}")]
    Connect {
        addr: String,
        source: std::io::Error,
    },
    #[error("no {waiting_for} within {timeout:?}")]
    Timeout {
        waiting_for: &'static str,
        timeout: Duration,
    },
    #[error("agent closed the connection{}", status.as_ref().map(|s| format!(" ({s})")).unwrap_or_default())]
    Closed { status: Option<String> },
    #[error("malformed message: {message}: {line}")]
    Malformed { line: String, message: String },
    #[error("reply out of sequence: expected seq {expected}, got {actual}")]
    WrongSeq { expected: u64, actual: u64 },
    #[error("expected {expected}, got {actual}")]
    Unexpected {
        expected: &'static str,
        actual: String,
    },
    #[error("protocol version mismatch: expected {expected}, got {actual}")]
    VersionMismatch { expected: u32, actual: u32 },
    #[error("unsupported spaces: {0}")]
    SpaceMismatch(String),
    #[error("agent reported an error: {0}")]
    AgentReported(String),
    #[error("agent process exited with {0}")]
    ExitStatus(String),
}
