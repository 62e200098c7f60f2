//! Assembles the chat messages sent to the model.
//!
//! The output is a pure function of the inputs: the same context and history
//! always produce byte-identical messages.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::capture::{ErrorContext, ErrorKind, SourceFile};
use crate::conversation::{Turn, TurnRole};

pub const DEFAULT_SYSTEM_PROMPT: &str = include_str!("../prompts/system.txt");

/// Files longer than this are shown as a window around the first error.
pub const SOURCE_WINDOW_THRESHOLD: usize = 400;
pub const SOURCE_WINDOW_RADIUS: usize = 60;
/// Rough stand-in for a token budget, in characters over all messages.
pub const DEFAULT_CHAR_BUDGET: usize = 24_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PromptMessage {
    pub role: Role,
    pub content: String,
}

impl PromptMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self { role, content: content.into() }
    }
}

#[derive(Clone, Debug)]
pub struct PromptBuilder {
    system_prompt: String,
    char_budget: usize,
}

impl Default for PromptBuilder {
    fn default() -> Self {
        Self::new(DEFAULT_SYSTEM_PROMPT)
    }
}

impl PromptBuilder {
    pub fn new(system_prompt: impl Into<String>) -> Self {
        let system_prompt = system_prompt.into().trim_end().to_string();
        Self { system_prompt, char_budget: DEFAULT_CHAR_BUDGET }
    }

    /// Uses `<dir>/system.txt` when present, the built-in prompt otherwise.
    pub fn from_prompt_dir(dir: &Path) -> std::io::Result<Self> {
        match std::fs::read_to_string(dir.join("system.txt")) {
            Ok(text) if !text.trim().is_empty() => Ok(Self::new(text)),
            Ok(_) => Ok(Self::default()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(e),
        }
    }

    pub fn with_char_budget(mut self, budget: usize) -> Self {
        self.char_budget = budget;
        self
    }

    pub fn system_prompt(&self) -> &str {
        &self.system_prompt
    }

    pub fn build_initial(&self, ctx: &ErrorContext) -> Vec<PromptMessage> {
        vec![
            PromptMessage::new(Role::System, self.system_prompt.clone()),
            PromptMessage::new(Role::User, context_message(ctx)),
        ]
    }

    /// System prompt, the context message, the conversation so far and the
    /// new question.
    ///
    /// When the total exceeds the character budget, the oldest
    /// question/answer pairs after the first explanation are dropped. The
    /// system prompt, context message, first explanation and new question
    /// always survive.
    pub fn build_followup(&self, history: &[Turn], ctx: &ErrorContext, user_text: &str) -> Vec<PromptMessage> {
        let head = self.build_initial(ctx);
        let mapped: Vec<PromptMessage> = history
            .iter()
            .map(|t| {
                let role = match t.role {
                    TurnRole::Assistant => Role::Assistant,
                    TurnRole::User => Role::User,
                };
                PromptMessage::new(role, t.text.clone())
            })
            .collect();
        let question = PromptMessage::new(Role::User, user_text);

        let len = |ms: &[PromptMessage]| ms.iter().map(|m| m.content.len()).sum::<usize>();
        let fixed = len(&head) + question.content.len() + mapped.first().map_or(0, |m| m.content.len());
        let mut rest = if mapped.is_empty() { &[][..] } else { &mapped[1..] };
        while fixed + len(rest) > self.char_budget && rest.len() >= 2 {
            rest = &rest[2..];
        }

        let mut out = head;
        out.extend(mapped.first().cloned());
        out.extend(rest.iter().cloned());
        out.push(question);
        out
    }
}

/// The user message describing the failure: kind, verbatim error output,
/// numbered source, then (for crashes) stack and locals. Empty sections are
/// left out.
pub fn context_message(ctx: &ErrorContext) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "ERROR KIND: {} error", ctx.kind.label());
    if let Some(sig) = &ctx.runtime_signal {
        let _ = writeln!(out, "SIGNAL: {sig}");
    }

    if !ctx.diagnostics.is_empty() {
        out.push_str("\nERROR OUTPUT:\n");
        for d in &ctx.diagnostics {
            if !d.raw.contains(&d.message) {
                let _ = writeln!(out, "{}:{}:{}: {}: {}", d.file, d.line, d.column, d.severity.as_str(), d.message);
            }
            out.push_str(d.raw.trim_end());
            out.push('\n');
        }
    }

    for file in &ctx.source_files {
        let _ = writeln!(out, "\nSOURCE {}:", file.path);
        out.push_str(&numbered_source(file, ctx.first_error_line(&file.path)));
    }

    if ctx.kind == ErrorKind::RunTime && !ctx.stack.is_empty() {
        out.push_str("\nSTACK (innermost first):\n");
        for (i, f) in ctx.stack.iter().enumerate() {
            let _ = writeln!(out, "#{i} {} at {}:{}", f.function_name, f.file, f.line);
        }
    }

    if ctx.stack.iter().any(|f| !f.locals.is_empty()) {
        out.push_str("\nLOCALS:\n");
        for (i, f) in ctx.stack.iter().enumerate().filter(|(_, f)| !f.locals.is_empty()) {
            let _ = writeln!(out, "#{i} {}:", f.function_name);
            for v in &f.locals {
                if v.type_name.is_empty() {
                    let _ = writeln!(out, "  {} = {}", v.name, v.value_repr);
                } else {
                    let _ = writeln!(out, "  {} = {} ({})", v.name, v.value_repr, v.type_name);
                }
            }
        }
    }

    if let Some(stdin) = ctx.stdin_excerpt.as_deref().filter(|s| !s.is_empty()) {
        out.push_str("\nPROGRAM INPUT:\n");
        out.push_str(stdin.trim_end());
        out.push('\n');
    }
    out.trim_end().to_string()
}

fn numbered_source(file: &SourceFile, error_line: Option<u32>) -> String {
    let lines: Vec<&str> = file.text.lines().collect();
    let total = lines.len();
    let (start, end) = if total > SOURCE_WINDOW_THRESHOLD {
        let centre = error_line.map_or(1, |l| l as usize).clamp(1, total);
        (
            centre.saturating_sub(SOURCE_WINDOW_RADIUS).max(1),
            (centre + SOURCE_WINDOW_RADIUS).min(total),
        )
    } else {
        (1, total)
    };
    let width = total.max(1).to_string().len();
    let mut out = String::new();
    if start > 1 {
        let _ = writeln!(out, "{:>width$} | ... lines 1-{} omitted ...", "", start - 1);
    }
    for (i, line) in lines.iter().enumerate().take(end).skip(start - 1) {
        let _ = writeln!(out, "{:>width$} | {}", i + 1, line);
    }
    if end < total {
        let _ = writeln!(out, "{:>width$} | ... lines {}-{} omitted ...", "", end + 1, total);
    }
    out
}
