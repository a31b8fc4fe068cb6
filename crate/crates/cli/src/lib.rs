//! Tile server library and command-line helpers.

pub mod demo;
pub mod server;

pub use server::{router, serve, AppState, COMPOSITE_LAYER_ID, DEFAULT_SESSION_TIMEOUT};
