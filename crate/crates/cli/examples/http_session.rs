//! Host the session API on a local port and drive one teaching episode
//! over plain HTTP: start a task, report the rim grasp, upload
//! demonstrations, then poll the event log.

use std::path::Path;

use serde_json::{json, Value};
use skillplan_cli::serve::{router, AppState, Defaults};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};

async fn request(addr: &str, method: &str, path: &str, body: Option<&Value>) -> (u16, Value) {
    let body = body.map(Value::to_string).unwrap_or_default();
    let mut stream = TcpStream::connect(addr).await.unwrap();
    let head = format!(
        "{method} {path} HTTP/1.1\r\nhost: {addr}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n",
        body.len()
    );
    stream.write_all(head.as_bytes()).await.unwrap();
    stream.write_all(body.as_bytes()).await.unwrap();
    let mut raw = String::new();
    stream.read_to_string(&mut raw).await.unwrap();
    let (head, payload) = raw.split_once("\r\n\r\n").unwrap();
    let status = head.split_whitespace().nth(1).unwrap().parse().unwrap();
    (status, serde_json::from_str(payload).unwrap_or(Value::Null))
}

#[tokio::main]
async fn main() {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    tokio::spawn(async move { axum::serve(listener, router(AppState::new(Defaults::default()))).await.unwrap() });
    println!("serving on http://{addr}");

    let (_, v) = request(&addr, "POST", "/sessions", Some(&json!({"scene": "grasp_mug", "seed": 1}))).await;
    let id = v["id"].as_str().unwrap().to_string();
    let base = format!("/sessions/{id}");
    let task = json!({"task": "grasp the mug by the handle", "feedback_mode": "interactive"});
    let (_, mut v) = request(&addr, "POST", &format!("{base}/task"), Some(&task)).await;
    let demos = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/demos/pick_mug_by_handle.json");
    let demos: Value = serde_json::from_str(&std::fs::read_to_string(demos).unwrap()).unwrap();
    let mut reported = false;
    loop {
        let state = v["state"].clone();
        println!("state: {}", state["state"]);
        v = match state["state"].as_str().unwrap() {
            "awaiting-feedback" => {
                let text = if state["plan_finished"] == true && !reported { "the mug was picked up by the rim" } else { "" };
                reported |= !text.is_empty();
                request(&addr, "POST", &format!("{base}/feedback"), Some(&json!({"text": text}))).await.1
            }
            "teaching" => request(&addr, "POST", &format!("{base}/demo"), Some(&demos)).await.1,
            _ => break,
        };
    }

    let (_, log) = request(&addr, "GET", &format!("{base}/events?since=0"), None).await;
    let kinds: Vec<&str> = log["events"].as_array().unwrap().iter().map(|e| e["kind"].as_str().unwrap()).collect();
    println!("{} events: {}", kinds.len(), kinds.join(" "));
    let (status, _) = request(&addr, "POST", &format!("{base}/demo"), Some(&demos)).await;
    println!("demo outside teaching -> {status}");
}
