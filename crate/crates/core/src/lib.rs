//! Core of the compiler-integrated debugging assistant.
//!
//! * [`capture`] wraps the C compiler and crashing programs, producing a
//!   cached [`ErrorContext`].
//! * [`prompt`] turns a context and conversation into chat messages.
//! * [`llm`] talks to a chat-completions backend (or a scripted mock).
//! * [`guardrails`] keeps code blocks out of every assistant reply.
//! * [`telemetry`] redacts, records and aggregates usage events.

pub mod capture;
pub mod conversation;
pub mod guardrails;
pub mod llm;
pub mod prompt;
pub mod telemetry;

pub use capture::{Diagnostic, ErrorContext, ErrorKind, Severity, SourceFile, StackFrame, VariableBinding};
pub use conversation::{Turn, TurnRole};
pub use guardrails::{apply_guardrails, contains_code_block, GuardrailOutcome, REWRITE_SYSTEM_PROMPT};
pub use llm::{BackendError, ChatBackend, CompletionRequest, CompletionResult, GenerationParams};
pub use prompt::{PromptBuilder, PromptMessage, Role};
