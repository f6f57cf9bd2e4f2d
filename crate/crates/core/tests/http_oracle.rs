//! HTTP oracle behavior against a minimal local endpoint.

use std::io::{Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use arithprobe::oracle::{
    HttpOracle, HttpOracleConfig, Oracle, OracleError, OracleQuery, QueryPurpose,
};

/// Serve canned HTTP responses; each connection consumes the next script
/// entry (status, body), repeating the last one.
fn serve_script(script: Vec<(u16, String)>) -> (String, Arc<AtomicUsize>, std::thread::JoinHandle<()>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    let handle = std::thread::spawn(move || {
        for stream in listener.incoming() {
            let mut stream = match stream {
                Ok(s) => s,
                Err(_) => break,
            };
            let n = counter.fetch_add(1, Ordering::SeqCst);
            let (status, body) = script[n.min(script.len() - 1)].clone();
            // Drain the request headers and body enough to respond.
            let mut buf = [0u8; 8192];
            let _ = stream.read(&mut buf);
            let reason = if status == 200 { "OK" } else { "Error" };
            let response = format!(
                "HTTP/1.1 {status} {reason}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
            let _ = stream.write_all(response.as_bytes());
            if n + 1 >= script.len() {
                break;
            }
        }
    });
    (url, hits, handle)
}

fn config(url: &str) -> HttpOracleConfig {
    let mut cfg = HttpOracleConfig::new(url);
    cfg.max_retries = 2;
    cfg.backoff_ms = 1;
    cfg
}

fn query() -> OracleQuery {
    OracleQuery::new("he scored 10 points and 7 assists\nhow many more?", QueryPurpose::Substitution)
}

#[test]
fn completes_and_reads_the_text_field() {
    let (url, hits, handle) = serve_script(vec![(200, r#"{"text": "The answer is 3."}"#.into())]);
    let oracle = HttpOracle::new(config(&url)).unwrap();
    let raw = oracle.complete(&query()).unwrap();
    assert_eq!(raw, "The answer is 3.");
    assert_eq!(hits.load(Ordering::SeqCst), 1);
    handle.join().unwrap();
}

#[test]
fn request_body_carries_the_default_decoding_settings() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let handle = std::thread::spawn(move || {
        let (mut stream, _) = listener.accept().unwrap();
        let mut request = Vec::new();
        let mut buf = [0u8; 4096];
        loop {
            let n = stream.read(&mut buf).unwrap();
            request.extend_from_slice(&buf[..n]);
            if n == 0 || request.windows(4).any(|w| w == b"\r\n\r\n") {
                // Headers complete; read any remaining body bytes once more.
                if let Ok(m) = stream.read(&mut buf) {
                    request.extend_from_slice(&buf[..m]);
                }
                break;
            }
        }
        let body = r#"{"text": "3"}"#;
        let response = format!(
            "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
            body.len()
        );
        stream.write_all(response.as_bytes()).unwrap();
        String::from_utf8_lossy(&request).to_string()
    });
    let mut cfg = config(&url);
    cfg.api_key = Some("sk-test".into());
    let oracle = HttpOracle::new(cfg).unwrap();
    let raw = oracle.complete(&query()).unwrap();
    assert_eq!(raw, "3");
    let request = handle.join().unwrap();
    let body_start = request.find("\r\n\r\n").unwrap() + 4;
    let body: serde_json::Value = serde_json::from_str(&request[body_start..]).unwrap();
    assert_eq!(body["max_tokens"], 128);
    assert_eq!(body["temperature"], 0.0);
    assert!(body["prompt"].as_str().unwrap().contains("10 points"));
    assert!(request.to_lowercase().contains("authorization: bearer sk-test"));
}

#[test]
fn retries_transient_errors_then_succeeds() {
    let (url, hits, handle) = serve_script(vec![
        (500, "oops".into()),
        (429, "slow down".into()),
        (200, r#"{"text": "7"}"#.into()),
    ]);
    let oracle = HttpOracle::new(config(&url)).unwrap();
    let raw = oracle.complete(&query()).unwrap();
    assert_eq!(raw, "7");
    assert_eq!(hits.load(Ordering::SeqCst), 3);
    handle.join().unwrap();
}

#[test]
fn exhausted_retries_surface_as_failure() {
    let (url, hits, handle) = serve_script(vec![
        (500, "oops".into()),
        (500, "oops".into()),
        (500, "oops".into()),
    ]);
    let oracle = HttpOracle::new(config(&url)).unwrap();
    let err = oracle.complete(&query()).unwrap_err();
    assert!(matches!(err, OracleError::Failure(_)), "got {err:?}");
    // One initial attempt plus two retries.
    assert_eq!(hits.load(Ordering::SeqCst), 3);
    handle.join().unwrap();
}

#[test]
fn client_errors_do_not_retry() {
    let (url, hits, handle) = serve_script(vec![(401, "no".into())]);
    let oracle = HttpOracle::new(config(&url)).unwrap();
    let err = oracle.complete(&query()).unwrap_err();
    assert!(matches!(err, OracleError::Failure(_)));
    assert_eq!(hits.load(Ordering::SeqCst), 1);
    handle.join().unwrap();
}

#[test]
fn nested_response_paths_are_followed() {
    let (url, _hits, handle) = serve_script(vec![(
        200,
        r#"{"choices": {"first": "42 points"}}"#.into(),
    )]);
    let mut cfg = config(&url);
    cfg.response_path = "choices.first".into();
    let oracle = HttpOracle::new(cfg).unwrap();
    assert_eq!(oracle.complete(&query()).unwrap(), "42 points");
    handle.join().unwrap();
}

#[test]
fn missing_response_field_is_fatal() {
    let (url, hits, handle) = serve_script(vec![(200, r#"{"answer": "3"}"#.into())]);
    let oracle = HttpOracle::new(config(&url)).unwrap();
    let err = oracle.complete(&query()).unwrap_err();
    assert!(matches!(err, OracleError::Failure(msg) if msg.contains("text")));
    assert_eq!(hits.load(Ordering::SeqCst), 1);
    handle.join().unwrap();
}
