mod support;

use serde_json::{json, Value};
use sidekick_core::llm::{MockBackend, MockReply};
use sidekick_core::telemetry::StaffList;
use sidekick_server::{router, ServiceConfig};

async fn spawn(backend: MockBackend) -> (String, support::Harness) {
    let config = ServiceConfig { public_url: "https://sidekick.example.edu".into(), ..ServiceConfig::default() };
    let h = support::harness_with(backend, config, StaffList::default());
    let app = router(h.service.clone());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (base, h)
}

fn create_body() -> Value {
    let mut body = serde_json::to_value(support::compile_ctx()).unwrap();
    body["owner_id"] = json!("z1234567");
    body
}

#[tokio::test]
async fn full_conversation_over_http() {
    let (base, _h) = spawn(MockBackend::scripted(["First explanation.", "Second answer."])).await;
    let http = reqwest::Client::new();

    let res = http.post(format!("{base}/api/sessions")).json(&create_body()).send().await.unwrap();
    assert_eq!(res.status(), 201);
    let created: Value = res.json().await.unwrap();
    let token = created["token"].as_str().unwrap().to_string();
    assert_eq!(created["url"], format!("https://sidekick.example.edu/session/{token}"));

    let view: Value = http.get(format!("{base}/api/sessions/{token}")).send().await.unwrap().json().await.unwrap();
    assert_eq!(view["kind"], "compile_time");
    assert_eq!(view["can_post"], true);
    assert_eq!(view["overuse_warning"], false);
    assert_eq!(view["turns"].as_array().unwrap().len(), 1);
    assert_eq!(view["turns"][0]["role"], "assistant");
    assert_eq!(view["turns"][0]["text"], "First explanation.");
    assert_eq!(view["diagnostics"][0]["line"], 5);
    assert!(view["source_files"][0]["text"].as_str().unwrap().contains("printf"));

    let res = http
        .post(format!("{base}/api/sessions/{token}/messages"))
        .json(&json!({"text": "why?"}))
        .send()
        .await
        .unwrap();
    assert_eq!(res.status(), 200);
    let turn: Value = res.json().await.unwrap();
    assert_eq!(turn["role"], "assistant");
    assert_eq!(turn["text"], "Second answer.");
    assert!(turn["created_at"].is_string());

    let view: Value = http.get(format!("{base}/api/sessions/{token}")).send().await.unwrap().json().await.unwrap();
    let roles: Vec<_> = view["turns"].as_array().unwrap().iter().map(|t| t["role"].clone()).collect();
    assert_eq!(roles, [json!("assistant"), json!("user"), json!("assistant")]);

    let share: Value =
        http.post(format!("{base}/api/sessions/{token}/share")).send().await.unwrap().json().await.unwrap();
    let share_token = share["share_token"].as_str().unwrap();
    assert_eq!(share["url"], format!("https://sidekick.example.edu/shared/{share_token}"));
    let shared: Value =
        http.get(format!("{base}/api/sessions/{share_token}")).send().await.unwrap().json().await.unwrap();
    assert_eq!(shared["can_post"], false);
    assert_eq!(shared["turns"], view["turns"]);
    let res = http
        .post(format!("{base}/api/sessions/{share_token}/messages"))
        .json(&json!({"text": "hi"}))
        .send()
        .await
        .unwrap();
    assert_eq!(res.status(), 403);
    // refused even with a body that would not parse
    let res = http.post(format!("{base}/api/sessions/{share_token}/messages")).body("nonsense").send().await.unwrap();
    assert_eq!(res.status(), 403);
    for path in ["share", "retry"] {
        let res = http.post(format!("{base}/api/sessions/{share_token}/{path}")).send().await.unwrap();
        assert_eq!(res.status(), 403, "{path}");
    }
}

#[tokio::test]
async fn error_statuses() {
    let (base, _h) = spawn(MockBackend::from_replies([
        MockReply::Text("First.".into()),
        MockReply::Fail("down".into()),
        MockReply::Text("Recovered.".into()),
    ]))
    .await;
    let http = reqwest::Client::new();

    assert_eq!(http.get(format!("{base}/api/sessions/missing")).send().await.unwrap().status(), 404);

    let mut bad = create_body();
    bad["diagnostics"] = json!([]);
    let res = http.post(format!("{base}/api/sessions")).json(&bad).send().await.unwrap();
    assert_eq!(res.status(), 422);
    let res = http.post(format!("{base}/api/sessions")).json(&json!({"owner_id": "x"})).send().await.unwrap();
    assert_eq!(res.status(), 422);

    let token = http.post(format!("{base}/api/sessions")).json(&create_body()).send().await.unwrap()
        .json::<Value>().await.unwrap()["token"].as_str().unwrap().to_string();
    let msg = |text: &str| {
        http.post(format!("{base}/api/sessions/{token}/messages")).json(&json!({ "text": text })).send()
    };
    assert_eq!(msg("too early").await.unwrap().status(), 409);
    http.get(format!("{base}/api/sessions/{token}")).send().await.unwrap();
    assert_eq!(msg("   ").await.unwrap().status(), 422);

    let res = msg("why?").await.unwrap();
    assert_eq!(res.status(), 503);
    let err: Value = res.json().await.unwrap();
    assert_eq!(err["retryable"], true);
    let view: Value = http.get(format!("{base}/api/sessions/{token}")).send().await.unwrap().json().await.unwrap();
    assert_eq!(view["explanation_pending"], true);
    assert_eq!(view["turns"].as_array().unwrap().len(), 2);

    let res = http.post(format!("{base}/api/sessions/{token}/retry")).send().await.unwrap();
    assert_eq!(res.status(), 200);
    assert_eq!(res.json::<Value>().await.unwrap()["text"], "Recovered.");
    let res = http.post(format!("{base}/api/sessions/{token}/retry")).send().await.unwrap();
    assert_eq!(res.status(), 409);
}

#[tokio::test]
async fn seed_explanation_is_accepted() {
    let (base, h) = spawn(MockBackend::canned()).await;
    let mut body = create_body();
    body["seed_explanation"] = json!("Missing semicolon on line 5.");
    let created: Value = reqwest::Client::new()
        .post(format!("{base}/api/sessions"))
        .json(&body)
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let view: Value = reqwest::get(format!("{base}/api/sessions/{}", created["token"].as_str().unwrap()))
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(view["turns"][0]["text"], "Missing semicolon on line 5.");
    assert_eq!(h.backend.call_count(), 0);
}
