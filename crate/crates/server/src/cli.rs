//! The `lore` command line.
//!
//! Exit status: 0 on success, 1 for usage errors, 2 for configuration
//! errors, 3 when the operation itself failed.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use lore_core::ingest::Source;
use lore_core::model::DocumentKind;
use lore_core::{CollectionId, PrincipalId};

use crate::app::{App, StartupError};
use crate::config::Config;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_FAILED: i32 = 3;

/// Config file read when `--config` and `LORE_CONFIG` are both absent, if it exists.
pub const DEFAULT_CONFIG: &str = "lore.toml";

#[derive(Debug, Parser)]
#[command(name = "lore", version, about = "Self-hosted document library with retrieval-augmented chat")]
pub struct Cli {
    /// Config file (flat TOML); LORE_<KEY> variables override its keys.
    #[arg(long, global = true, env = "LORE_CONFIG")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP and WebSocket server.
    Serve,
    /// Manage API tokens.
    Token {
        #[command(subcommand)]
        action: TokenAction,
    },
    /// Ingest a local file into a collection.
    Ingest {
        path: PathBuf,
        #[arg(long)]
        collection: CollectionId,
        /// pdf, tex, transcript or note
        #[arg(long)]
        kind: String,
        #[arg(long)]
        title: Option<String>,
        /// Acting user; defaults to the collection owner.
        #[arg(long)]
        user: Option<String>,
    },
    /// Import an arXiv paper by id.
    ImportArxiv {
        id: String,
        #[arg(long)]
        collection: CollectionId,
        /// Acting user; defaults to the collection owner.
        #[arg(long)]
        user: Option<String>,
    },
    /// Re-embed every chunk with the configured embedder.
    Reindex,
}

#[derive(Debug, Subcommand)]
pub enum TokenAction {
    /// Issue a token for a user, creating the user if needed. Prints the token.
    Create {
        #[arg(long)]
        user: String,
    },
}

struct Failure(i32, String);

impl From<StartupError> for Failure {
    fn from(e: StartupError) -> Self {
        let code = match e {
            StartupError::Script { .. } => EXIT_CONFIG,
            _ => EXIT_FAILED,
        };
        Failure(code, e.to_string())
    }
}

fn failed(e: impl std::fmt::Display) -> Failure {
    Failure(EXIT_FAILED, e.to_string())
}

/// Parses `args` (program name first) and runs the command.
pub async fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli, out, err).await {
        Ok(()) => 0,
        Err(Failure(code, message)) => {
            let _ = writeln!(err, "lore: {message}");
            code
        }
    }
}

fn load_config(path: Option<PathBuf>) -> Result<Config, Failure> {
    let path = path.or_else(|| {
        let p = PathBuf::from(DEFAULT_CONFIG);
        p.exists().then_some(p)
    });
    Config::load(path.as_deref()).map_err(|e| Failure(EXIT_CONFIG, e.to_string()))
}

fn acting_user(app: &App, collection: CollectionId, user: Option<&str>) -> Result<PrincipalId, Failure> {
    match user {
        Some(name) => Ok(app.model().principal_by_name(name).map_err(failed)?.id),
        None => Ok(app.model().collection(collection).map_err(failed)?.owner),
    }
}

async fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let config = load_config(cli.config)?;
    let app = App::from_config(&config)?;
    match cli.command {
        Command::Serve => serve(app, &config, err).await,
        Command::Token {
            action: TokenAction::Create { user },
        } => {
            let principal = app.model().ensure_principal(&user).map_err(failed)?;
            let token = app.tokens.create(principal.id).map_err(failed)?;
            writeln!(out, "{token}").map_err(failed)
        }
        Command::Ingest {
            path,
            collection,
            kind,
            title,
            user,
        } => {
            let kind: DocumentKind = kind.parse().map_err(|e| Failure(EXIT_USAGE, format!("{e}")))?;
            let bytes =
                std::fs::read(&path).map_err(|e| failed(format_args!("cannot read {}: {e}", path.display())))?;
            let caller = acting_user(&app, collection, user.as_deref())?;
            let title = title.or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()));
            let source = Source::Upload {
                bytes,
                kind,
                media_type: None,
            };
            let done = app
                .ingestor
                .ingest_document(source, collection, title, caller)
                .await
                .map_err(failed)?;
            writeln!(out, "document {} ({} chunks)", done.document.id, done.chunk_ids.len()).map_err(failed)
        }
        Command::ImportArxiv { id, collection, user } => {
            let caller = acting_user(&app, collection, user.as_deref())?;
            let done = app.ingestor.import_arxiv(&id, collection, caller).await.map_err(failed)?;
            writeln!(
                out,
                "document {} ({} chunks): {}",
                done.document.id,
                done.chunk_ids.len(),
                done.document.title
            )
            .map_err(failed)
        }
        Command::Reindex => {
            let report = app.index().reindex().await.map_err(failed)?;
            writeln!(out, "reindexed {} chunks with {}", report.chunks, report.embedder_id).map_err(failed)
        }
    }
}

async fn serve(app: App, config: &Config, err: &mut dyn Write) -> Result<(), Failure> {
    let listener = tokio::net::TcpListener::bind(config.bind)
        .await
        .map_err(|e| failed(format_args!("cannot bind {}: {e}", config.bind)))?;
    let addr = listener.local_addr().map_err(failed)?;
    let _ = writeln!(err, "lore: listening on http://{addr}");
    tracing::info!(%addr, "serving");
    axum::serve(listener, crate::api::router(app))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(failed)
}
