//! The HTTP backend against a scripted local server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use cultalign::http::{HttpBackend, HttpConfig};
use cultalign_core::{ChatBackend, ChatRequest, GatewayError};

struct Seen {
    head: String,
    body: String,
}

/// Serves `script` (status, body) one connection each, then stops.
fn serve(script: Vec<(u16, &'static str)>) -> (String, Arc<Mutex<Vec<Seen>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    thread::spawn(move || {
        for (status, body) in script {
            let Ok((stream, _)) = listener.accept() else { return };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut head = String::new();
            let mut len = 0;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap() == 0 || line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                head.push_str(&line);
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            log.lock().unwrap().push(Seen { head, body: String::from_utf8(buf).unwrap() });
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (url, seen)
}

const OK: &str = r#"{"choices":[{"index":0,"message":{"role":"assistant","content":"3"},"finish_reason":"stop"}]}"#;

fn backend(url: String, attempts: u32) -> HttpBackend {
    let cfg = HttpConfig {
        endpoint: url,
        model: "test-model".into(),
        api_key_env: "UNUSED".into(),
        timeout: Duration::from_secs(5),
        max_attempts: attempts,
        backoff: Duration::from_millis(5),
    };
    HttpBackend::new(cfg, "sk-test-123".into()).unwrap()
}

#[test]
fn retries_429_then_succeeds() {
    let (url, seen) = serve(vec![(429, r#"{"error":"slow down"}"#), (200, OK)]);
    let r = backend(url, 3).complete(&ChatRequest::new("sys", "pick one")).unwrap();
    assert_eq!(r.text, "3");
    assert_eq!(r.attempts, 2);
    assert!(!r.truncated);
    assert_eq!(r.backend_id, "http:test-model");
    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 2);
    assert!(seen[0].head.to_ascii_lowercase().contains("authorization: bearer sk-test-123"));
    let body: serde_json::Value = serde_json::from_str(&seen[1].body).unwrap();
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["messages"][0]["content"], "sys");
    assert_eq!(body["messages"][1]["content"], "pick one");
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["max_tokens"], 16);
}

#[test]
fn auth_failure_is_not_retried() {
    let (url, seen) = serve(vec![(401, r#"{"error":"bad key"}"#), (200, OK)]);
    let err = backend(url, 3).complete(&ChatRequest::new("", "q")).unwrap_err();
    assert!(matches!(err, GatewayError::Auth(_)), "{err:?}");
    assert_eq!(seen.lock().unwrap().len(), 1);
}

#[test]
fn server_errors_exhaust_attempts() {
    let (url, seen) = serve(vec![(500, "{}"), (503, "{}"), (502, "{}")]);
    let err = backend(url, 3).complete(&ChatRequest::new("", "q")).unwrap_err();
    assert!(matches!(err, GatewayError::Exhausted { attempts: 3, .. }), "{err:?}");
    assert_eq!(seen.lock().unwrap().len(), 3);
}

#[test]
fn client_error_is_not_retried() {
    let (url, seen) = serve(vec![(400, r#"{"error":"bad"}"#), (200, OK)]);
    let err = backend(url, 3).complete(&ChatRequest::new("", "q")).unwrap_err();
    assert!(matches!(err, GatewayError::Http { status: 400, .. }), "{err:?}");
    assert_eq!(seen.lock().unwrap().len(), 1);
}

#[test]
fn truncation_is_flagged() {
    let body = r#"{"choices":[{"message":{"content":"Well, I"},"finish_reason":"length"}]}"#;
    let (url, _) = serve(vec![(200, body)]);
    let r = backend(url, 1).complete(&ChatRequest::new("", "q")).unwrap();
    assert!(r.truncated);
    assert_eq!(r.text, "Well, I");
}

#[test]
fn connection_refused_is_transport_and_exhausts() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let err = backend(format!("http://127.0.0.1:{port}/x"), 2).complete(&ChatRequest::new("", "q")).unwrap_err();
    assert!(matches!(err, GatewayError::Exhausted { attempts: 2, .. }), "{err:?}");
}
