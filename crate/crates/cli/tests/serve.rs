use std::path::Path;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use skillplan_cli::serve::{router, AppState, Defaults};
use tower::ServiceExt;

fn app() -> Router {
    router(AppState::new(Defaults::default()))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or(Body::empty(), |b| Body::from(b.to_string())))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, v)
}

async fn create(app: &Router, body: Value) -> String {
    let (status, v) = call(app, "POST", "/sessions", Some(body)).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    v["id"].as_str().unwrap().to_string()
}

async fn kinds(app: &Router, id: &str, since: usize) -> Vec<String> {
    let (_, v) = call(app, "GET", &format!("/sessions/{id}/events?since={since}"), None).await;
    v["events"].as_array().unwrap().iter().map(|e| e["kind"].as_str().unwrap().to_string()).collect()
}

#[tokio::test]
async fn task_events_arrive_in_protocol_order() {
    let app = app();
    let id = create(&app, json!({"scene": "grasp_mug"})).await;
    let (status, state) =
        call(&app, "POST", &format!("/sessions/{id}/task"), Some(json!({"task": "pick up the mug"}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(state["state"]["state"], "done");
    let k = kinds(&app, &id, 0).await;
    assert_eq!(&k[..4], ["task", "scene-description", "nl-plan", "code-plan"]);
    assert_eq!(k.last().unwrap(), "task-done");
    let tail = kinds(&app, &id, 3).await;
    assert_eq!(tail.len(), k.len() - 3);
    assert_eq!(tail[0], "code-plan");
}

#[tokio::test]
async fn error_statuses() {
    let app = app();
    let id = create(&app, json!({})).await;
    let (s, v) = call(&app, "POST", &format!("/sessions/{id}/feedback"), Some(json!({"text": "hi"}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["error"], "BadState");
    let (s, _) = call(&app, "POST", "/sessions/s999/task", Some(json!({"task": "x"}))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = call(&app, "GET", "/sessions/s999/state", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = call(&app, "POST", &format!("/sessions/{id}/task"), Some(json!({"tusk": "x"}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = call(&app, "POST", &format!("/sessions/{id}/task"), Some(json!({"task": " "}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = call(&app, "POST", "/sessions", Some(json!({"scene": "no_such_scene"}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = call(&app, "POST", &format!("/sessions/{id}/demo"), Some(json!({"keyframes": 3}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let demo = std::fs::read_to_string(demo_path("tilt_mug")).unwrap();
    let (s, _) = call(&app, "POST", &format!("/sessions/{id}/demo"), Some(serde_json::from_str(&demo).unwrap())).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, _) = call(&app, "DELETE", &format!("/sessions/{id}"), None).await;
    assert_eq!(s, StatusCode::NO_CONTENT);
    let (s, _) = call(&app, "GET", &format!("/sessions/{id}/state"), None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

fn demo_path(skill: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../core/fixtures/demos/{skill}.json"))
}

/// Continues through every per-step pause until the plan finishes.
async fn continue_to_end(app: &Router, id: &str) -> Value {
    loop {
        let (_, v) = call(app, "GET", &format!("/sessions/{id}/state"), None).await;
        match &v["state"] {
            s if s["state"] == "awaiting-feedback" && s["plan_finished"] == true => return v,
            s if s["state"] == "awaiting-feedback" => {
                let (st, _) = call(app, "POST", &format!("/sessions/{id}/feedback"), Some(json!({"text": ""}))).await;
                assert_eq!(st, StatusCode::OK);
            }
            _ => return v,
        }
    }
}

#[tokio::test]
async fn teaching_episode_over_http() {
    let app = app();
    let id = create(&app, json!({"scene": "grasp_mug"})).await;
    let body = json!({"task": "grasp the mug by the handle", "feedback_mode": "interactive"});
    let (s, v) = call(&app, "POST", &format!("/sessions/{id}/task"), Some(body)).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["state"]["state"], "awaiting-feedback");
    let v = continue_to_end(&app, &id).await;
    assert_eq!(v["state"]["plan_finished"], true);

    let text = json!({"text": "the mug was picked up by the rim"});
    call(&app, "POST", &format!("/sessions/{id}/feedback"), Some(text)).await;
    // step through the replanned code until it asks for the skill
    let mut v;
    loop {
        v = call(&app, "GET", &format!("/sessions/{id}/state"), None).await.1;
        if v["state"]["state"] != "awaiting-feedback" {
            break;
        }
        call(&app, "POST", &format!("/sessions/{id}/feedback"), Some(json!({"text": ""}))).await;
    }
    assert_eq!(v["state"]["state"], "teaching");
    assert_eq!(v["state"]["skill"], "pick_mug_by_handle");

    // single demonstrations, then finalize
    let file: Value = serde_json::from_str(&std::fs::read_to_string(demo_path("pick_mug_by_handle")).unwrap()).unwrap();
    let demos = file["demos"].as_array().unwrap();
    for (i, d) in demos.iter().enumerate() {
        let (s, v) = call(&app, "POST", &format!("/sessions/{id}/demo?finalize=false"), Some(d.clone())).await;
        assert_eq!(s, StatusCode::OK, "{v}");
        assert_eq!(v["state"]["demos"], i + 1);
    }
    let (s, v) = call(&app, "POST", &format!("/sessions/{id}/finalize"), None).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let v = continue_to_end(&app, &id).await;
    assert_eq!(v["state"]["plan_finished"], true);
    let (_, v) = call(&app, "POST", &format!("/sessions/{id}/feedback"), Some(json!({"text": ""}))).await;
    assert_eq!(v["state"]["state"], "done");
    assert!(v["library"].as_array().unwrap().iter().any(|r| r["name"] == "pick_mug_by_handle"));
    let k = kinds(&app, &id, 0).await;
    assert_eq!(k.iter().filter(|k| *k == "demo-recorded").count(), demos.len());
    assert!(k.contains(&"skill-finalized".to_string()));
}

#[tokio::test]
async fn sessions_are_isolated_unless_they_share_a_library() {
    let dir = tempfile::tempdir().unwrap();
    let demos = demo_path("x").parent().unwrap().to_path_buf();
    let lib = dir.path().join("lib.json");
    let app = app();
    let a = create(&app, json!({"scene": "grasp_mug", "demo_dir": demos, "skills": lib})).await;
    let b = create(&app, json!({"scene": "grasp_mug", "demo_dir": demos})).await;
    let task = json!({"task": "grasp the mug by the handle", "feedback_mode": "interactive"});
    for id in [&a, &b] {
        call(&app, "POST", &format!("/sessions/{id}/task"), Some(task.clone())).await;
        continue_to_end(&app, id).await;
    }
    call(&app, "POST", &format!("/sessions/{a}/feedback"), Some(json!({"text": "the mug was picked up by the rim"})))
        .await;
    let v = continue_to_end(&app, &a).await;
    assert!(v["library"].as_array().unwrap().iter().any(|r| r["name"] == "pick_mug_by_handle"));
    let (_, vb) = call(&app, "GET", &format!("/sessions/{b}/state"), None).await;
    assert!(!vb["library"].as_array().unwrap().iter().any(|r| r["name"] == "pick_mug_by_handle"));
    // a later session on the same library file sees the skill
    let c = create(&app, json!({"skills": lib})).await;
    let (_, vc) = call(&app, "GET", &format!("/sessions/{c}/state"), None).await;
    assert!(vc["library"].as_array().unwrap().iter().any(|r| r["name"] == "pick_mug_by_handle"));
}

#[tokio::test]
async fn event_stream_matches_polling_and_state() {
    let app = app();
    let id = create(&app, json!({"scene": "grasp_mug"})).await;
    call(&app, "POST", &format!("/sessions/{id}/task"), Some(json!({"task": "pick up the mug"}))).await;
    let polled = kinds(&app, &id, 0).await;
    let (_, state) = call(&app, "GET", &format!("/sessions/{id}/state"), None).await;
    assert_eq!(state["events"], polled.len());

    let req = Request::builder().uri(format!("/sessions/{id}/events")).body(Body::empty()).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    assert_eq!(res.headers()["content-type"], "text/event-stream");
    let mut body = res.into_body();
    let mut text = String::new();
    while !text.contains("event: task-done") {
        let frame = tokio::time::timeout(Duration::from_secs(5), body.frame()).await.unwrap().unwrap().unwrap();
        if let Ok(data) = frame.into_data() {
            text.push_str(std::str::from_utf8(&data).unwrap());
        }
    }
    let streamed: Vec<&str> = text.lines().filter_map(|l| l.strip_prefix("event: ")).collect();
    assert_eq!(streamed, polled);
    let ids: Vec<usize> = text.lines().filter_map(|l| l.strip_prefix("id: ")).map(|s| s.parse().unwrap()).collect();
    assert_eq!(ids, (0..polled.len()).collect::<Vec<_>>());

    // resuming after a known id skips what was seen
    let req = Request::builder()
        .uri(format!("/sessions/{id}/events"))
        .header("last-event-id", (polled.len() - 2).to_string())
        .body(Body::empty())
        .unwrap();
    let mut body = app.clone().oneshot(req).await.unwrap().into_body();
    let frame = tokio::time::timeout(Duration::from_secs(5), body.frame()).await.unwrap().unwrap().unwrap();
    let first = String::from_utf8(frame.into_data().unwrap().to_vec()).unwrap();
    assert!(first.contains("event: task-done"), "{first}");
}

#[tokio::test]
async fn live_stream_delivers_events_of_a_later_task() {
    let app = app();
    let id = create(&app, json!({"scene": "grasp_mug"})).await;
    let req = Request::builder().uri(format!("/sessions/{id}/events")).body(Body::empty()).unwrap();
    let mut body = app.clone().oneshot(req).await.unwrap().into_body();
    let poster = {
        let app = app.clone();
        let id = id.clone();
        tokio::spawn(async move {
            tokio::time::sleep(Duration::from_millis(50)).await;
            call(&app, "POST", &format!("/sessions/{id}/task"), Some(json!({"task": "pick up the mug"}))).await
        })
    };
    let mut text = String::new();
    while !text.contains("event: task-done") {
        let frame = tokio::time::timeout(Duration::from_secs(10), body.frame()).await.unwrap().unwrap().unwrap();
        if let Ok(data) = frame.into_data() {
            text.push_str(std::str::from_utf8(&data).unwrap());
        }
    }
    assert_eq!(poster.await.unwrap().0, StatusCode::OK);
    assert!(text.find("event: task\n").unwrap() < text.find("event: scene-description").unwrap());
}
