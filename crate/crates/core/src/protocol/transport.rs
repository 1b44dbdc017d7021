use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use super::ProtocolError;

/// A line-oriented, bidirectional link to one external agent.
///
/// Incoming lines are read on a background thread so that every receive
/// can be bounded by a timeout.
pub struct Connection {
    peer: String,
    writer: Box<dyn Write + Send>,
    lines: Receiver<io::Result<String>>,
    child: Option<Child>,
    timeout: Duration,
}

impl Connection {
    /// Launches `command` through `sh -c` and talks over its stdin/stdout.
    /// The child's stderr is passed through.
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self, ProtocolError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| ProtocolError::Spawn {
                command: command.to_string(),
                source,
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut conn = Connection::from_streams(command, stdout, stdin, timeout);
        conn.child = Some(child);
        Ok(conn)
    }

    /// Connects to an agent listening on `addr`.
    pub fn connect(addr: &str, timeout: Duration) -> Result<Self, ProtocolError> {
        let connect_err = |source| ProtocolError::Connect {
            addr: addr.to_string(),
            source,
        };
        let stream = TcpStream::connect(addr).map_err(connect_err)?;
        stream.set_nodelay(true).map_err(connect_err)?;
        let reader = stream.try_clone().map_err(connect_err)?;
        Ok(Connection::from_streams(addr, reader, stream, timeout))
    }

    pub fn from_streams(
        peer: &str,
        reader: impl Read + Send + 'static,
        writer: impl Write + Send + 'static,
        timeout: Duration,
    ) -> Self {
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(reader).lines() {
                let failed = line.is_err();
                if tx.send(line).is_err() || failed {
                    break;
                }
            }
        });
        Connection {
            peer: peer.to_string(),
            writer: Box::new(writer),
            lines: rx,
            child: None,
            timeout,
        }
    }

    pub fn peer(&self) -> &str {
        &self.peer
    }

    pub fn send_line(&mut self, line: &str) -> Result<(), ProtocolError> {
        // One write per message keeps it in a single packet on sockets.
        let mut framed = Vec::with_capacity(line.len() + 1);
        framed.extend_from_slice(line.as_bytes());
        framed.push(b'\n');
        let result = self
            .writer
            .write_all(&framed)
            .and_then(|_| self.writer.flush());
        match result {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Err(self.closed()),
            Err(e) => Err(ProtocolError::Io(e)),
        }
    }

    /// The next line, waiting at most the configured timeout.
    pub fn recv_line(&mut self, waiting_for: &'static str) -> Result<String, ProtocolError> {
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(ProtocolError::Io(e)),
            Err(RecvTimeoutError::Timeout) => Err(ProtocolError::Timeout {
                waiting_for,
                timeout: self.timeout,
            }),
            Err(RecvTimeoutError::Disconnected) => Err(self.closed()),
        }
    }

    fn closed(&mut self) -> ProtocolError {
        let status = self
            .child
            .as_mut()
            .and_then(|c| wait_timeout(c, Duration::from_secs(1)))
            .map(|s| s.to_string());
        ProtocolError::Closed { status }
    }

    /// Closes our side and waits for a spawned agent to exit, which must be
    /// successful.
    pub fn finish(mut self) -> Result<(), ProtocolError> {
        // Dropping stdin signals end of input to the child.
        self.writer = Box::new(io::sink());
        let Some(mut child) = self.child.take() else {
            return Ok(());
        };
        match wait_timeout(&mut child, self.timeout) {
            Some(status) if status.success() => Ok(()),
            Some(status) => Err(ProtocolError::ExitStatus(status.to_string())),
            None => {
                let _ = child.kill();
                let _ = child.wait();
                Err(ProtocolError::Timeout {
                    waiting_for: "agent process exit",
                    timeout: self.timeout,
                })
            }
        }
    }
}

impl Drop for Connection {
    fn drop(&mut self) {
        if let Some(mut child) = self.child.take() {
            self.writer = Box::new(io::sink());
            if wait_timeout(&mut child, Duration::from_secs(2)).is_none() {
                let _ = child.kill();
                let _ = child.wait();
            }
        }
    }
}

fn wait_timeout(child: &mut Child, timeout: Duration) -> Option<std::process::ExitStatus> {
    let deadline = Instant::now() + timeout;
    loop {
        match child.try_wait() {
            Ok(Some(status)) => return Some(status),
            Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(5)),
            _ => return None,
        }
    }
}
