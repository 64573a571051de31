//! The VAN as a network service: an HTTP API over [`edi_van::Van`], a
//! crash-safe data directory, a delivery loop for pushes, relays and
//! webhooks, and an async client.

mod api;
pub mod client;
pub mod config;
pub mod journal;
pub mod multipart;
mod runtime;
pub mod store;
pub mod wire;

use std::net::SocketAddr;

use thiserror::Error;

pub use client::{ClientError, DepositOutcome, MailboxItem, VanClient};
pub use config::{AdminConfig, PeerConfig, RouteConfig, Secret, ServiceConfig};
pub use runtime::{load, start, ServiceHandle};
pub use store::StoreError;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Store(#[from] StoreError),

    #[error(transparent)]
    Van(#[from] edi_van::VanError),

    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
}
