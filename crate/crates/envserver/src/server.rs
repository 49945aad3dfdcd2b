use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use ctf_core::engine::Action;
use ctf_core::env::{CtfEnv, EnvConfig};
use ctf_core::Error as CoreError;
use thiserror::Error;

use crate::protocol::{
    decode_message, encode_message, Done, ErrorCode, ErrorMsg, Info, Observation, ObservationMsg,
    ProtocolMessage, RewardMsg, PROTOCOL_VERSION,
};

pub const DEFAULT_BIND: &str = "127.0.0.1:7878";

/// Lines longer than this are answered with `bad_message` and discarded.
const MAX_LINE: usize = 1 << 20;

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("default config rejected: {0}")]
    Config(#[from] CoreError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub struct Server {
    listener: TcpListener,
    default_config: EnvConfig<f64>,
    next_session: Arc<AtomicU64>,
    stop: Arc<AtomicBool>,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs + std::fmt::Display, default_config: EnvConfig<f64>) -> Result<Self, ServerError> {
        default_config.validate()?;
        let listener = TcpListener::bind(&addr).map_err(|source| ServerError::Bind {
            addr: addr.to_string(),
            source,
        })?;
        Ok(Self {
            listener,
            default_config,
            next_session: Arc::new(AtomicU64::new(1)),
            stop: Arc::new(AtomicBool::new(false)),
        })
    }

    pub fn local_addr(&self) -> std::io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Accepts connections until shut down, one thread per session.
    pub fn run(self) -> Result<(), ServerError> {
        for conn in self.listener.incoming() {
            if self.stop.load(Ordering::SeqCst) {
                break;
            }
            let Ok(stream) = conn else { continue };
            let id = self.next_session.fetch_add(1, Ordering::SeqCst);
            let config = self.default_config.clone();
            std::thread::spawn(move || {
                let _ = serve_session(stream, id, config);
            });
        }
        Ok(())
    }

    /// Runs the accept loop on a background thread.
    pub fn spawn(self) -> Result<ServerHandle, ServerError> {
        let addr = self.local_addr()?;
        let stop = self.stop.clone();
        let thread = std::thread::spawn(move || self.run());
        Ok(ServerHandle {
            addr,
            stop,
            thread: Some(thread),
        })
    }
}

pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<Result<(), ServerError>>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting new sessions. Open sessions run until their client
    /// disconnects.
    pub fn shutdown(mut self) -> Result<(), ServerError> {
        self.stop_and_join()
    }

    fn stop_and_join(&mut self) -> Result<(), ServerError> {
        let Some(thread) = self.thread.take() else {
            return Ok(());
        };
        self.stop.store(true, Ordering::SeqCst);
        // Wake the blocking accept.
        let _ = TcpStream::connect(self.addr);
        thread.join().unwrap_or(Ok(()))
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        let _ = self.stop_and_join();
    }
}

/// Per-connection state machine.
pub struct Session {
    id: u64,
    greeted: bool,
    env: CtfEnv<f64>,
}

impl Session {
    pub fn new(id: u64, config: EnvConfig<f64>) -> Result<Self, CoreError> {
        Ok(Self {
            id,
            greeted: false,
            env: CtfEnv::new(config)?,
        })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    /// Answers one request line. The second value is true when the session
    /// should close.
    pub fn handle_line(&mut self, line: &str) -> (ProtocolMessage, bool) {
        match decode_message(line) {
            Ok(m) => self.handle(m),
            Err(e) => (self.error(ErrorCode::BadMessage, e.field, e.message), false),
        }
    }

    pub fn handle(&mut self, request: ProtocolMessage) -> (ProtocolMessage, bool) {
        let id = self.id;
        if !self.greeted && !matches!(request, ProtocolMessage::Hello(_) | ProtocolMessage::Bye(_)) {
            let msg = format!("send hello before `{}`", request.type_name());
            return (self.error(ErrorCode::ExpectedHello, None, msg), false);
        }
        let reply = match request {
            ProtocolMessage::Hello(_) => {
                self.greeted = true;
                self.info(format!("session {id} ready"))
            }
            ProtocolMessage::Configure(c) => match CtfEnv::new(c.config) {
                Ok(env) => {
                    self.env = env;
                    self.info("configured".into())
                }
                Err(CoreError::Config { key, message }) => {
                    self.error(ErrorCode::BadConfig, Some(format!("config.{key}")), message)
                }
                Err(e) => self.error(ErrorCode::BadConfig, None, e.to_string()),
            },
            ProtocolMessage::Reset(r) => match self.env.reset(r.seed).map(|s| s.clone()) {
                Ok(state) => ProtocolMessage::Observation(ObservationMsg {
                    session: id,
                    observation: Observation::of(&state, self.env.field()),
                }),
                Err(e) => self.error(ErrorCode::BadConfig, None, e.to_string()),
            },
            ProtocolMessage::Step(s) => self.step(s.action),
            ProtocolMessage::Bye(_) => {
                return (ProtocolMessage::Bye(crate::protocol::Bye { session: Some(id) }), true);
            }
            other => {
                let msg = format!("`{}` is a server message", other.type_name());
                self.error(ErrorCode::UnexpectedMessage, Some("type".into()), msg)
            }
        };
        (reply, false)
    }

    fn step(&mut self, action: Action) -> ProtocolMessage {
        if !self.env.in_episode() {
            return self.error(ErrorCode::NotInEpisode, None, "reset before stepping".into());
        }
        if let Err(e) = self.env.check_action(action) {
            return self.error(ErrorCode::BadAction, Some("action".into()), e.to_string());
        }
        let out = match self.env.step(action) {
            Ok(out) => out,
            Err(e) => return self.error(ErrorCode::BadAction, Some("action".into()), e.to_string()),
        };
        let state = self.env.state().expect("stepped");
        let observation = Observation::of(state, self.env.field());
        match out.terminal {
            Some(cause) => ProtocolMessage::Done(Done {
                session: self.id,
                cause,
                reward: out.reward.total(),
                breakdown: out.reward,
                events: out.events,
                observation,
            }),
            None => ProtocolMessage::Reward(RewardMsg {
                session: self.id,
                reward: out.reward.total(),
                breakdown: out.reward,
                events: out.events,
                observation,
            }),
        }
    }

    fn info(&self, message: String) -> ProtocolMessage {
        ProtocolMessage::Info(Info {
            session: self.id,
            version: PROTOCOL_VERSION.into(),
            message,
        })
    }

    fn error(&self, code: ErrorCode, field: Option<String>, message: String) -> ProtocolMessage {
        ProtocolMessage::Error(ErrorMsg {
            session: self.id,
            code,
            field,
            message,
        })
    }
}

fn serve_session(stream: TcpStream, id: u64, config: EnvConfig<f64>) -> std::io::Result<()> {
    stream.set_nodelay(true)?;
    let mut session = Session::new(id, config).map_err(std::io::Error::other)?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = stream;
    let mut buf = Vec::new();
    loop {
        buf.clear();
        let n = (&mut reader).take(MAX_LINE as u64 + 1).read_until(b'\n', &mut buf)?;
        if n == 0 {
            return Ok(());
        }
        let (reply, close) = if buf.len() > MAX_LINE && !buf.ends_with(b"\n") {
            // Drain the rest of the oversized line before answering.
            loop {
                let mut rest = Vec::new();
                let m = (&mut reader).take(MAX_LINE as u64).read_until(b'\n', &mut rest)?;
                if m == 0 || rest.ends_with(b"\n") {
                    break;
                }
            }
            (session.error(ErrorCode::BadMessage, None, format!("line exceeds {MAX_LINE} bytes")), false)
        } else {
            match std::str::from_utf8(&buf) {
                Ok(line) => session.handle_line(line),
                Err(_) => (session.error(ErrorCode::BadMessage, None, "line is not UTF-8".into()), false),
            }
        };
        let mut out = encode_message(&reply);
        out.push('\n');
        writer.write_all(out.as_bytes())?;
        writer.flush()?;
        if close {
            return Ok(());
        }
    }
}
