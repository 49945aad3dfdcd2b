//! Environment server: each TCP connection gets its own engine, driven by
//! newline-delimited JSON requests. See `PROTOCOL.md` for the schema.

mod client;
pub mod protocol;
mod server;

pub use client::{Client, ClientError};
pub use protocol::{decode_message, encode_message, DecodeError, ProtocolMessage, PROTOCOL_VERSION};
pub use server::{Server, ServerError, ServerHandle, Session, DEFAULT_BIND};
