use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use longrep::corpus::{llm_generate, GenerationConfig, RetryPolicy};
use longrep::Error;
use serde_json::{json, Value};

/// Minimal chat-completions server. Answers part k with "part k words" unless
/// k equals `fail_part`, which always gets HTTP 500.
fn spawn_stub(fail_part: Option<usize>) -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = Arc::clone(&hits);
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            counter.fetch_add(1, Ordering::SeqCst);
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0usize;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap() == 0 || line == "\r\n" {
                    break;
                }
                let lower = line.to_ascii_lowercase();
                if let Some(v) = lower.strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
            }
            let mut body = vec![0u8; length];
            reader.read_exact(&mut body).unwrap();
            let request: Value = serde_json::from_slice(&body).unwrap();
            let part = request["messages"].as_array().unwrap().len().div_ceil(2);
            let (status, payload) = if Some(part) == fail_part {
                ("500 Internal Server Error", json!({"error": "boom"}))
            } else {
                (
                    "200 OK",
                    json!({"choices": [{"message": {"role": "assistant", "content": format!("part {part} words")}}]}),
                )
            };
            let payload = payload.to_string();
            let _ = write!(
                stream,
                "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                payload.len()
            );
        }
    });
    (format!("http://{addr}/v1/chat/completions"), hits)
}

fn config(endpoint: String, parts: usize) -> GenerationConfig {
    GenerationConfig {
        endpoint,
        model: "stub".into(),
        num_parts: parts,
        api_key_env: None,
        timeout_secs: 5,
        retry: RetryPolicy {
            max_retries: 2,
            initial_delay_ms: 1,
            max_delay_ms: 5,
        },
        ..GenerationConfig::default()
    }
}

#[test]
fn parts_are_concatenated_in_order() {
    let (endpoint, hits) = spawn_stub(None);
    let tmp = tempfile::tempdir().unwrap();
    let generated = llm_generate(&config(endpoint, 4), "story", tmp.path()).unwrap();
    assert_eq!(generated.parts.len(), 4);
    assert_eq!(generated.text.as_string(), "part 1 words part 2 words part 3 words part 4 words");
    assert_eq!(hits.load(Ordering::SeqCst), 4);
    for k in 1..=4 {
        assert!(tmp.path().join(format!("story/part_{k:02}.json")).exists());
    }
}

#[test]
fn failing_part_keeps_earlier_archives() {
    let (endpoint, hits) = spawn_stub(Some(3));
    let tmp = tempfile::tempdir().unwrap();
    let err = llm_generate(&config(endpoint, 5), "story", tmp.path()).unwrap_err();
    match err {
        Error::Transport { attempts, .. } => assert_eq!(attempts, 3),
        other => panic!("unexpected error {other:?}"),
    }
    // 2 good parts plus 3 attempts at part 3
    assert_eq!(hits.load(Ordering::SeqCst), 5);
    let dir = tmp.path().join("story");
    assert!(dir.join("part_01.json").exists());
    assert!(dir.join("part_02.json").exists());
    assert!(!dir.join("part_03.json").exists());
    let saved: Value = serde_json::from_slice(&std::fs::read(dir.join("part_02.json")).unwrap()).unwrap();
    assert_eq!(saved["choices"][0]["message"]["content"], "part 2 words");
}
