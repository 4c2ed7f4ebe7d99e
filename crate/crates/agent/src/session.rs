use std::collections::BTreeSet;
use std::sync::{Arc, Mutex as StdMutex};

use lore_core::index::{FusionWeights, Index, IndexError};
use lore_core::model::{ModelError, PermissionLevel};
use lore_core::{CollectionId, PrincipalId};
use lore_llm::{
    complete, CompletionError, Conversation, Message, ProviderAdapter, ProviderError, ToolDescriptor, ToolRegistry,
};
use serde_json::Value;
use thiserror::Error;
use tokio::sync::{mpsc, Mutex};

use crate::events::{codes, ChatEvent};
use crate::search::{chunk_refs, register_search, ToolContext};

pub const DEFAULT_MAX_TOOL_ROUNDS: usize = 8;

pub const DEFAULT_SYSTEM_PROMPT: &str = "You are a research assistant for a shared document library. \
Before answering a question, call the `search` tool to find relevant passages in the collections the user selected; \
search again with different wording when the first results are weak. \
Base your answer on the retrieved passages and cite each one you use as [document_id:chunk_id]. \
If the passages do not contain the answer, say so instead of guessing.";

pub const TOOL_LIMIT_APOLOGY: &str =
    "Sorry, I could not finish researching this within the allowed number of searches. \
Please narrow the question or ask again.";

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("permission denied on collection {0}")]
    PermissionDenied(CollectionId),
    #[error("collection {0} not found")]
    CollectionNotFound(CollectionId),
    #[error("another turn is already running in this session")]
    ConcurrentTurn,
    #[error("max_tool_rounds must be positive")]
    InvalidToolRounds,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Tools(#[from] lore_llm::RegistryError),
}

#[derive(Debug, Clone)]
pub struct AgentConfig {
    pub max_tool_rounds: usize,
    pub weights: FusionWeights,
    pub system_prompt: String,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            max_tool_rounds: DEFAULT_MAX_TOOL_ROUNDS,
            weights: FusionWeights::default(),
            system_prompt: DEFAULT_SYSTEM_PROMPT.to_owned(),
        }
    }
}

struct Shared {
    index: Index,
    provider: Arc<dyn ProviderAdapter>,
    tools: ToolRegistry<ToolContext>,
    descriptors: Vec<ToolDescriptor>,
    config: AgentConfig,
}

/// Builds chat sessions over one index and one provider. Cheap to clone.
#[derive(Clone)]
pub struct Agent {
    shared: Arc<Shared>,
}

impl std::fmt::Debug for Agent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Agent")
            .field("provider", &self.shared.provider.provider_id())
            .field("tools", &self.shared.tools)
            .finish()
    }
}

impl Agent {
    pub fn new(index: Index, provider: Arc<dyn ProviderAdapter>, config: AgentConfig) -> Result<Self, AgentError> {
        let mut tools = ToolRegistry::new();
        register_search(&mut tools)?;
        Self::with_tools(index, provider, config, tools)
    }

    /// Like [`Agent::new`] with a caller-built registry (which should include search).
    pub fn with_tools(
        index: Index,
        provider: Arc<dyn ProviderAdapter>,
        config: AgentConfig,
        tools: ToolRegistry<ToolContext>,
    ) -> Result<Self, AgentError> {
        if config.max_tool_rounds == 0 {
            return Err(AgentError::InvalidToolRounds);
        }
        config.weights.validate()?;
        let descriptors = tools.descriptors();
        Ok(Agent {
            shared: Arc::new(Shared {
                index,
                provider,
                tools,
                descriptors,
                config,
            }),
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.shared.config
    }

    pub fn tools(&self) -> &[ToolDescriptor] {
        &self.shared.descriptors
    }

    pub fn index(&self) -> &Index {
        &self.shared.index
    }

    /// Opens a session. The principal needs VIEW on every collection; an
    /// empty selection is allowed.
    pub fn new_session(
        &self,
        principal: PrincipalId,
        collections: BTreeSet<CollectionId>,
        system_prompt: Option<String>,
    ) -> Result<ChatSession, AgentError> {
        self.check_view(principal, &collections)?;
        let prompt = system_prompt.unwrap_or_else(|| self.shared.config.system_prompt.clone());
        Ok(ChatSession {
            id: uuid::Uuid::new_v4().to_string(),
            principal,
            max_tool_rounds: self.shared.config.max_tool_rounds,
            agent: self.clone(),
            selected: StdMutex::new(collections),
            conversation: Mutex::new(Conversation::new(prompt)),
        })
    }

    fn check_view(&self, principal: PrincipalId, collections: &BTreeSet<CollectionId>) -> Result<(), AgentError> {
        let model = self.shared.index.model();
        for &c in collections {
            match model.effective_permission(principal, c) {
                Ok(level) if level >= PermissionLevel::View => {}
                Ok(_) => return Err(AgentError::PermissionDenied(c)),
                Err(ModelError::CollectionNotFound(c)) => return Err(AgentError::CollectionNotFound(c)),
                Err(e) => return Err(e.into()),
            }
        }
        Ok(())
    }
}

/// What happened in one turn, besides the events.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TurnSummary {
    pub completions: usize,
    pub tool_rounds: usize,
    /// Error code when the turn ended with an error event.
    pub error: Option<String>,
}

/// One user's conversation with the model over a set of collections.
pub struct ChatSession {
    pub id: String,
    pub principal: PrincipalId,
    pub max_tool_rounds: usize,
    agent: Agent,
    selected: StdMutex<BTreeSet<CollectionId>>,
    conversation: Mutex<Conversation>,
}

impl std::fmt::Debug for ChatSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChatSession")
            .field("id", &self.id)
            .field("principal", &self.principal)
            .field("selected", &self.selected_collections())
            .finish()
    }
}

impl ChatSession {
    pub fn selected_collections(&self) -> BTreeSet<CollectionId> {
        self.selected.lock().unwrap_or_else(|p| p.into_inner()).clone()
    }

    /// Replaces the selection, checking VIEW on each collection first.
    pub fn select_collections(&self, collections: BTreeSet<CollectionId>) -> Result<(), AgentError> {
        self.agent.check_view(self.principal, &collections)?;
        *self.selected.lock().unwrap_or_else(|p| p.into_inner()) = collections;
        Ok(())
    }

    /// Snapshot of the conversation. Waits for a running turn to finish.
    pub async fn conversation(&self) -> Conversation {
        self.conversation.lock().await.clone()
    }

    pub fn set_max_tool_rounds(&mut self, rounds: usize) -> Result<(), AgentError> {
        if rounds == 0 {
            return Err(AgentError::InvalidToolRounds);
        }
        self.max_tool_rounds = rounds;
        Ok(())
    }

    fn tool_context(&self) -> ToolContext {
        ToolContext {
            index: self.agent.shared.index.clone(),
            principal: self.principal,
            selected: self.selected_collections(),
            weights: self.agent.shared.config.weights,
        }
    }

    /// Runs one user turn, sending its events to `events` in order. Sending
    /// waits when the channel is full. A second concurrent call fails with
    /// [`AgentError::ConcurrentTurn`].
    pub async fn run_turn(&self, user_text: &str, events: &mpsc::Sender<ChatEvent>) -> Result<TurnSummary, AgentError> {
        let mut conv = self.conversation.try_lock().map_err(|_| AgentError::ConcurrentTurn)?;
        let shared = &self.agent.shared;
        conv.push(Message::user(user_text));

        let emit = |e: ChatEvent| async move {
            // a vanished listener must not break the conversation state
            let _ = events.send(e).await;
        };
        let mut summary = TurnSummary {
            completions: 0,
            tool_rounds: 0,
            error: None,
        };
        loop {
            let buffer: StdMutex<Vec<String>> = StdMutex::new(Vec::new());
            let on_token = |t: &str| buffer.lock().unwrap_or_else(|p| p.into_inner()).push(t.to_owned());
            summary.completions += 1;
            let reply = match complete(&conv, &shared.descriptors, shared.provider.as_ref(), &on_token).await {
                Ok(m) => m,
                Err(e) => {
                    let code = match &e {
                        CompletionError::Provider(ProviderError::Timeout(_)) => codes::TIMEOUT,
                        CompletionError::Provider(_) => codes::PROVIDER_ERROR,
                        _ => codes::INTERNAL,
                    };
                    summary.error = Some(code.to_owned());
                    emit(ChatEvent::error(code, e.to_string())).await;
                    return Ok(summary);
                }
            };

            if reply.tool_calls.is_empty() {
                let pieces = buffer.into_inner().unwrap_or_else(|p| p.into_inner());
                if pieces.concat() == reply.content {
                    for text in pieces.into_iter().filter(|p| !p.is_empty()) {
                        emit(ChatEvent::Token { text }).await;
                    }
                } else if !reply.content.is_empty() {
                    emit(ChatEvent::Token {
                        text: reply.content.clone(),
                    })
                    .await;
                }
                let message_id = conv.push(reply);
                emit(ChatEvent::Final { message_id }).await;
                return Ok(summary);
            }

            if summary.tool_rounds >= self.max_tool_rounds {
                conv.push(Message::assistant(TOOL_LIMIT_APOLOGY));
                summary.error = Some(codes::TOOL_LIMIT.to_owned());
                emit(ChatEvent::error(
                    codes::TOOL_LIMIT,
                    format!("stopped after {} tool rounds", self.max_tool_rounds),
                ))
                .await;
                return Ok(summary);
            }

            summary.tool_rounds += 1;
            let calls = reply.tool_calls.clone();
            conv.push(reply);
            for call in &calls {
                let arguments = serde_json::from_str::<Value>(&call.raw_arguments)
                    .unwrap_or_else(|_| Value::String(call.raw_arguments.clone()));
                emit(ChatEvent::ToolCall {
                    name: call.name.clone(),
                    arguments,
                })
                .await;
                let outcome = shared.tools.invoke(self.tool_context(), call).await;
                let refs = outcome.result.as_ref().map(chunk_refs).unwrap_or_default();
                conv.push(outcome.message);
                emit(ChatEvent::ToolResult {
                    name: call.name.clone(),
                    chunk_refs: refs,
                })
                .await;
            }
        }
    }

    /// [`run_turn`](Self::run_turn) collecting the events into a list.
    pub async fn run_turn_collect(&self, user_text: &str) -> Result<(Vec<ChatEvent>, TurnSummary), AgentError> {
        let (tx, mut rx) = mpsc::channel(64);
        let turn = async move {
            let tx = tx;
            self.run_turn(user_text, &tx).await
        };
        let collect = async {
            let mut out = Vec::new();
            while let Some(e) = rx.recv().await {
                let done = e.is_terminal();
                out.push(e);
                if done {
                    break;
                }
            }
            out
        };
        let (summary, events) = tokio::join!(turn, collect);
        Ok((events, summary?))
    }
}
