//! Generators living in another process, reached over a pipe or TCP.

use std::io::Write;
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use super::generator::{GenRequest, GenResponse, Generator};
use super::wire::{decode_response, encode_request, read_frame, write_frame, Frame};
use crate::error::{Error, ProtocolError, Result};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// One in-flight request at a time; a reader thread feeds responses through
/// a channel so every wait can time out.
pub struct ExternalGenerator {
    writer: Box<dyn Write + Send>,
    responses: Receiver<Result<Option<Frame>>>,
    child: Option<Child>,
    timeout: Duration,
    broken: bool,
}

impl ExternalGenerator {
    /// Spawns `program args...` and talks to it over stdin/stdout.
    pub fn spawn(program: &str, args: &[String], timeout: Duration) -> Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let mut stdout = child.stdout.take().expect("piped stdout");
        let responses = spawn_reader(move || read_frame(&mut stdout));
        Ok(Self {
            writer: Box::new(stdin),
            responses,
            child: Some(child),
            timeout,
            broken: false,
        })
    }

    pub fn connect(addr: &str, timeout: Duration) -> Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let mut reader = stream.try_clone()?;
        let responses = spawn_reader(move || read_frame(&mut reader));
        Ok(Self {
            writer: Box::new(stream),
            responses,
            child: None,
            timeout,
            broken: false,
        })
    }
}

fn spawn_reader(
    mut next: impl FnMut() -> Result<Option<Frame>> + Send + 'static,
) -> Receiver<Result<Option<Frame>>> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || loop {
        let item = next();
        let stop = !matches!(item, Ok(Some(_)));
        if tx.send(item).is_err() || stop {
            break;
        }
    });
    rx
}

impl Generator for ExternalGenerator {
    fn generate(&mut self, req: &GenRequest) -> Result<GenResponse> {
        if self.broken {
            return Err(Error::Peer(
                "connection unusable after an earlier failure".into(),
            ));
        }
        let bytes = encode_request(req)?;
        let outcome = write_frame(&mut self.writer, &bytes).and_then(|_| {
            match self.responses.recv_timeout(self.timeout) {
                Ok(Ok(Some(frame))) => decode_response(&frame, req.role, req.height(), req.width()),
                Ok(Ok(None)) | Err(RecvTimeoutError::Disconnected) => {
                    Err(Error::Peer("generator closed the connection".into()))
                }
                Ok(Err(e)) => Err(e),
                Err(RecvTimeoutError::Timeout) => Err(ProtocolError::Timeout.into()),
            }
        });
        // a peer-side generator failure leaves the stream in sync
        if outcome.is_err() && !matches!(outcome, Err(Error::Peer(_))) {
            self.broken = true;
        }
        outcome
    }
}

impl Drop for ExternalGenerator {
    fn drop(&mut self) {
        if let Some(mut child) = self.child.take() {
            // closing stdin lets a well-behaved peer exit on its own
            self.writer = Box::new(std::io::sink());
            for _ in 0..50 {
                if let Ok(Some(_)) = child.try_wait() {
                    return;
                }
                thread::sleep(Duration::from_millis(10));
            }
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}
