//! Remote graphs over HTTP.
//!
//! [`serve`] exposes every graph of a database at `POST /g/<path>`; the body
//! is a `;`-separated statement batch run as one transaction. [`HttpConnector`]
//! is the client side, plugged into a session so that `USE GRAPH (url)`
//! routes statements to a served graph.

mod client;
mod server;

pub use client::{HttpConnector, RemoteSession};
pub use server::{
    compute_etag, etag_for, handle_request, serve, Reply, RequestHeaders, ServeError, Server,
    ServerConfig,
};

/// Header carrying the caller's identity.
pub const USER_HEADER: &str = "X-GQL-User";
