//! Command protocol: binary framing, text commands, transports, server and client.

pub mod benchmark;
pub mod client;
pub mod codec;
pub mod command;
pub mod host;
pub mod server;
pub mod transport;

pub use benchmark::{fps_benchmark, FpsReport};
pub use client::{Client, ClientError};
pub use codec::{
    decode_request, decode_response, encode_request, encode_response, CodecError, Item, Request, Response, Status,
};
pub use command::{Command, CommandError, Verb};
pub use host::{parse_action, Host, SharedHost};
pub use server::{handle_request_bytes, serve, ServerError, ServerHandle};
pub use transport::Endpoint;
