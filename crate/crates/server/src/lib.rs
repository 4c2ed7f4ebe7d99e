//! The deployable service.
//!
//! [`api::router`] serves the JSON API and the chat socket over an [`App`];
//! [`cli::run`] is the `lore` command line. Configuration is a flat TOML file
//! with environment overrides ([`config::Config`]).

pub mod api;
pub mod app;
pub mod auth;
pub mod cli;
pub mod config;
pub mod error;
pub mod ws;

pub use app::{App, StartupError};
pub use auth::{AuthError, TokenStore};
pub use config::{Config, ConfigError};
pub use error::{codes, ApiError, ErrorBody};

/// JSON schema of the frames the chat socket sends.
pub const CHAT_EVENT_SCHEMA: &str = include_str!("../schema/chat_event.schema.json");
