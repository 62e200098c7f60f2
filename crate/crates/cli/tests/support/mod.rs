#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{TimeZone, Utc};
use sidekick_core::capture::{Diagnostic, ErrorContext, ErrorKind, Severity, SourceFile, StackFrame, VariableBinding};
use sidekick_core::llm::MockBackend;
use sidekick_core::telemetry::StaffList;
use sidekick_server::{router, ServiceConfig, SessionService, Store, SystemClock};

pub fn program(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/programs").join(name)
}

pub fn have(tool: &str) -> bool {
    std::process::Command::new(tool).arg("--version").output().is_ok_and(|o| o.status.success())
}

pub fn compile_ctx() -> ErrorContext {
    ErrorContext {
        kind: ErrorKind::CompileTime,
        created_at: Utc.with_ymd_and_hms(2024, 3, 4, 10, 0, 0).unwrap(),
        source_files: vec![SourceFile {
            path: "count.c".into(),
            text: "int main(void) {\n    int count = 3\n    return count;\n}\n".into(),
        }],
        compiler_invocation: "gcc count.c -o count".into(),
        diagnostics: vec![Diagnostic {
            file: "count.c".into(),
            line: 2,
            column: 18,
            severity: Severity::Error,
            message: "expected ',' or ';' before 'return'".into(),
            raw: "count.c:2:18: error: expected ',' or ';' before 'return'".into(),
        }],
        runtime_signal: None,
        stack: vec![],
        stdin_excerpt: None,
        exit_status: 1,
    }
}

pub fn run_ctx() -> ErrorContext {
    let frame = |name: &str, line, locals: &[(&str, &str, &str)]| StackFrame {
        function_name: name.into(),
        file: "list.c".into(),
        line,
        locals: locals
            .iter()
            .map(|(n, t, v)| VariableBinding { name: (*n).into(), type_name: (*t).into(), value_repr: (*v).into() })
            .collect(),
    };
    ErrorContext {
        kind: ErrorKind::RunTime,
        created_at: Utc.with_ymd_and_hms(2024, 3, 4, 11, 0, 0).unwrap(),
        source_files: vec![SourceFile { path: "list.c".into(), text: "int main(void) { return 0; }\n".into() }],
        compiler_invocation: "gcc -g list.c".into(),
        diagnostics: vec![],
        runtime_signal: Some("SEGV on unknown address 0x000000000008 (null pointer)".into()),
        stack: vec![
            frame("last_value", 10, &[("list", "struct node *", "0x0"), ("steps", "int", "0")]),
            frame("main", 20, &[("head", "struct node *", "0x0"), ("expected", "int", "7")]),
        ],
        stdin_excerpt: None,
        exit_status: 1,
    }
}

pub struct Server {
    pub base: String,
    pub store: Arc<Store>,
    pub backend: Arc<MockBackend>,
}

/// A session server on an ephemeral local port.
pub async fn spawn_server(backend: MockBackend) -> Server {
    let backend = Arc::new(backend);
    let store = Arc::new(Store::open_in_memory(StaffList::default()).unwrap());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let config = ServiceConfig { public_url: base.clone(), ..ServiceConfig::default() };
    let service = Arc::new(SessionService::new(store.clone(), backend.clone(), Arc::new(SystemClock), config));
    let app = router(service);
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    Server { base, store, backend }
}
