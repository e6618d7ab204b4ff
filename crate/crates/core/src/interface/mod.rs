//! Command-line entry points and the line protocol used by UIs and scripted
//! clients.

pub mod cli;
pub mod protocol;
pub mod server;

pub use protocol::{
    event_body, Body, Conversation, ErrorKind, HostConfig, Message, PolicySpec, PROTOCOL_VERSION,
};
pub use server::{serve_stdio, serve_stream, Server, HEARTBEAT};
