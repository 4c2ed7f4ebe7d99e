//! `GET /ws/chat`: one chat session per connection.
//!
//! The session is opened from the query string (`collection_ids=1,2`) and
//! authenticated by the `Authorization` header or a `token` query parameter,
//! since browsers cannot set headers on a socket. Text frames from the client
//! are [`ClientFrame`]s; every server frame is a [`ChatEvent`].

use std::borrow::Cow;
use std::collections::BTreeSet;
use std::sync::Arc;

use axum::extract::ws::{CloseFrame, Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Query, State};
use axum::http::{header, HeaderMap};
use axum::response::Response;
use lore_agent::{AgentError, ChatEvent, ChatSession};
use lore_core::{CollectionId, PrincipalId};
use serde::Deserialize;
use tokio::sync::mpsc;

use crate::app::App;
use crate::auth::bearer;
use crate::error::{codes, ApiError};

pub mod close {
    pub const BAD_PARAMS: u16 = 4400;
    pub const UNAUTHORIZED: u16 = 4401;
    pub const FORBIDDEN: u16 = 4403;
    pub const NOT_FOUND: u16 = 4404;
    pub const INTERNAL: u16 = 4500;
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientFrame {
    UserMessage {
        text: String,
        /// Replaces the session's selection before the turn starts.
        #[serde(default)]
        collection_ids: Option<BTreeSet<CollectionId>>,
    },
}

impl ClientFrame {
    pub fn parse(text: &str) -> Result<ClientFrame, String> {
        let frame: ClientFrame = serde_json::from_str(text).map_err(|e| e.to_string())?;
        match &frame {
            ClientFrame::UserMessage { text, .. } if text.trim().is_empty() => Err("text must not be empty".into()),
            _ => Ok(frame),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
pub struct ChatParams {
    #[serde(default)]
    collection_ids: Option<String>,
    #[serde(default)]
    token: Option<String>,
}

/// Comma-separated collection ids; empty means no selection.
pub fn parse_ids(raw: &str) -> Result<BTreeSet<CollectionId>, String> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| format!("bad collection id {s:?}")))
        .collect()
}

pub async fn chat(
    State(app): State<App>,
    headers: HeaderMap,
    params: Option<Query<ChatParams>>,
    upgrade: WebSocketUpgrade,
) -> Response {
    let Query(params) = params.unwrap_or_default();
    let token = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(bearer)
        .map(str::to_owned)
        .or(params.token);
    let principal = token.and_then(|t| app.tokens.authenticate(&t).ok());
    let selection = parse_ids(params.collection_ids.as_deref().unwrap_or(""));
    upgrade.on_upgrade(move |socket| serve(socket, app, principal, selection))
}

async fn shut(mut socket: WebSocket, code: u16, reason: String) {
    let _ = socket
        .send(Message::Close(Some(CloseFrame {
            code,
            reason: Cow::Owned(reason),
        })))
        .await;
}

async fn send(socket: &mut WebSocket, event: &ChatEvent) -> Result<(), axum::Error> {
    let text = serde_json::to_string(event).expect("events serialize");
    socket.send(Message::Text(text)).await
}

fn refusal(e: AgentError) -> ChatEvent {
    let api = ApiError::from(e);
    ChatEvent::error(api.code, api.message)
}

async fn serve(
    socket: WebSocket,
    app: App,
    principal: Option<PrincipalId>,
    selection: Result<BTreeSet<CollectionId>, String>,
) {
    let Some(principal) = principal else {
        return shut(socket, close::UNAUTHORIZED, "unauthorized".into()).await;
    };
    let selection = match selection {
        Ok(s) => s,
        Err(e) => return shut(socket, close::BAD_PARAMS, e).await,
    };
    let session = match app.agent.new_session(principal, selection, None) {
        Ok(s) => Arc::new(s),
        Err(e) => {
            let code = match e {
                AgentError::PermissionDenied(_) => close::FORBIDDEN,
                AgentError::CollectionNotFound(_) => close::NOT_FOUND,
                _ => close::INTERNAL,
            };
            return shut(socket, code, e.to_string()).await;
        }
    };
    run(socket, session).await;
}

async fn run(mut socket: WebSocket, session: Arc<ChatSession>) {
    let (tx, mut rx) = mpsc::channel::<ChatEvent>(64);
    let mut busy = false;
    let mut turn: Option<tokio::task::JoinHandle<()>> = None;
    loop {
        tokio::select! {
            incoming = socket.recv() => {
                let text = match incoming {
                    None | Some(Err(_)) | Some(Ok(Message::Close(_))) => break,
                    Some(Ok(Message::Text(t))) => t,
                    Some(Ok(Message::Binary(_))) => {
                        let e = ChatEvent::error(codes::BAD_FRAME, "binary frames are not accepted");
                        if send(&mut socket, &e).await.is_err() { break }
                        continue;
                    }
                    Some(Ok(_)) => continue,
                };
                let reply = match ClientFrame::parse(&text) {
                    Err(reason) => Some(ChatEvent::error(codes::BAD_FRAME, reason)),
                    Ok(_) if busy => Some(ChatEvent::error(codes::CONCURRENT_TURN, "a turn is already running")),
                    Ok(ClientFrame::UserMessage { text, collection_ids }) => {
                        match collection_ids.map(|ids| session.select_collections(ids)) {
                            Some(Err(e)) => Some(refusal(e)),
                            _ => {
                                busy = true;
                                let (s, tx) = (session.clone(), tx.clone());
                                turn = Some(tokio::spawn(async move {
                                    if let Err(e) = s.run_turn(&text, &tx).await {
                                        let _ = tx.send(refusal(e)).await;
                                    }
                                }));
                                None
                            }
                        }
                    }
                };
                if let Some(e) = reply {
                    if send(&mut socket, &e).await.is_err() { break }
                }
            }
            Some(event) = rx.recv() => {
                if event.is_terminal() {
                    busy = false;
                }
                if send(&mut socket, &event).await.is_err() { break }
            }
        }
    }
    if let Some(t) = turn {
        t.abort();
    }
}
