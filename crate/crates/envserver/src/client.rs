use std::io::{BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};

use ctf_core::engine::Action;
use ctf_core::env::EnvConfig;
use thiserror::Error;

use crate::protocol::{
    decode_message, encode_message, Bye, Configure, DecodeError, Hello, ProtocolMessage, Reset, Step,
    PROTOCOL_VERSION,
};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("undecodable reply: {0}")]
    Decode(#[from] DecodeError),
    #[error("server closed the connection")]
    Closed,
}

/// Blocking line client, one request in flight at a time.
pub struct Client {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl Client {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self, ClientError> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Self {
            reader: BufReader::new(stream.try_clone()?),
            writer: stream,
        })
    }

    /// Sends a raw line and decodes the reply.
    pub fn send_line(&mut self, line: &str) -> Result<ProtocolMessage, ClientError> {
        self.writer.write_all(line.as_bytes())?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;
        let mut reply = String::new();
        if self.reader.read_line(&mut reply)? == 0 {
            return Err(ClientError::Closed);
        }
        Ok(decode_message(&reply)?)
    }

    pub fn request(&mut self, m: &ProtocolMessage) -> Result<ProtocolMessage, ClientError> {
        self.send_line(&encode_message(m))
    }

    pub fn hello(&mut self) -> Result<ProtocolMessage, ClientError> {
        self.request(&ProtocolMessage::Hello(Hello {
            session: None,
            version: Some(PROTOCOL_VERSION.into()),
        }))
    }

    pub fn configure(&mut self, config: EnvConfig<f64>) -> Result<ProtocolMessage, ClientError> {
        self.request(&ProtocolMessage::Configure(Configure { session: None, config }))
    }

    pub fn reset(&mut self, seed: u64) -> Result<ProtocolMessage, ClientError> {
        self.request(&ProtocolMessage::Reset(Reset { session: None, seed }))
    }

    pub fn step(&mut self, action: Action) -> Result<ProtocolMessage, ClientError> {
        self.request(&ProtocolMessage::Step(Step { session: None, action }))
    }

    pub fn bye(&mut self) -> Result<ProtocolMessage, ClientError> {
        self.request(&ProtocolMessage::Bye(Bye::default()))
    }
}
