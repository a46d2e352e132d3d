use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;

use critique_rl::baselines::self_refine_critique;
use critique_rl::rng::stream;
use critique_rl::task_model::{
    BackendError, LlmBackend, LlmClient, LlmConfig, LlmRequest, PromptExemplars, PromptTask, TaskBackend,
};
use serde_json::Value;

#[derive(Debug, Clone)]
struct Seen {
    auth: Option<String>,
    path: String,
    body: Value,
}

/// Serves one scripted `(status, body)` per connection, then keeps repeating
/// the last one. Records every request.
fn mock(script: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<Seen>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    thread::spawn(move || {
        for (i, conn) in listener.incoming().enumerate() {
            let Ok(mut conn) = conn else { break };
            let mut reader = BufReader::new(conn.try_clone().unwrap());
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            let path = line.split_whitespace().nth(1).unwrap_or("").to_owned();
            let (mut len, mut auth) = (0, None);
            loop {
                let mut h = String::new();
                reader.read_line(&mut h).unwrap();
                let h = h.trim_end();
                if h.is_empty() {
                    break;
                }
                let (k, v) = h.split_once(':').unwrap();
                match k.to_ascii_lowercase().as_str() {
                    "content-length" => len = v.trim().parse().unwrap(),
                    "authorization" => auth = Some(v.trim().to_owned()),
                    _ => {}
                }
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            log.lock().unwrap().push(Seen {
                auth,
                path,
                body: serde_json::from_slice(&body).unwrap_or(Value::Null),
            });
            let (status, text) = script[i.min(script.len() - 1)].clone();
            let _ = write!(
                conn,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                text.len()
            );
        }
    });
    (format!("http://{addr}/v1"), seen)
}

fn ok(text: &str) -> (u16, String) {
    (200, serde_json::json!({"choices": [{"text": text}]}).to_string())
}

fn client(url: &str, attempts: u32) -> LlmClient {
    LlmClient::with_api_key(
        LlmConfig {
            base_url: url.to_owned(),
            model_name: "test-model".into(),
            max_attempts: attempts,
            backoff_ms: 1,
            timeout_ms: 5_000,
            ..LlmConfig::default()
        },
        "secret".into(),
    )
    .unwrap()
}

fn request(stop: &[&str]) -> LlmRequest {
    LlmRequest {
        prompt: "p".into(),
        temperature: 0.0,
        max_tokens: 16,
        stop: stop.iter().map(|s| s.to_string()).collect(),
    }
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_owned).collect()
}

#[test]
fn retries_server_errors_then_succeeds() {
    let (url, seen) = mock(vec![(500, "oops".into()), (429, "slow".into()), ok("done")]);
    let text = client(&url, 3).complete(&request(&[])).unwrap();
    assert_eq!(text, "done");
    assert_eq!(seen.lock().unwrap().len(), 3);
}

#[test]
fn exhausted_retries_report_last_status() {
    let (url, seen) = mock(vec![(503, "down".into())]);
    let err = client(&url, 2).complete(&request(&[])).unwrap_err();
    assert!(matches!(err, BackendError::Status { status: 503, .. }), "{err}");
    assert_eq!(seen.lock().unwrap().len(), 2);
}

#[test]
fn client_errors_are_not_retried() {
    let (url, seen) = mock(vec![(401, "no".into()), ok("unreachable")]);
    let err = client(&url, 3).complete(&request(&[])).unwrap_err();
    assert!(matches!(err, BackendError::Status { status: 401, ref body } if body == "no"), "{err}");
    assert_eq!(seen.lock().unwrap().len(), 1);
}

#[test]
fn malformed_bodies_are_distinct_errors() {
    for body in ["not json", "{\"choices\": []}", "{\"other\": 1}"] {
        let (url, _) = mock(vec![(200, body.into())]);
        let err = client(&url, 3).complete(&request(&[])).unwrap_err();
        assert!(matches!(err, BackendError::Malformed(_)), "{body}: {err}");
    }
}

#[test]
fn unreachable_endpoint_is_a_network_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let err = client(&format!("http://127.0.0.1:{port}/v1"), 2)
        .complete(&request(&[]))
        .unwrap_err();
    assert!(matches!(err, BackendError::Network { attempts: 2, .. }), "{err}");
}

#[test]
fn completion_is_cut_at_stop_sequence() {
    let (url, seen) = mock(vec![ok("alpha beta\n\ngamma")]);
    let text = client(&url, 1).complete(&request(&["\n\n"])).unwrap();
    assert_eq!(text, "alpha beta");
    let s = &seen.lock().unwrap()[0];
    assert_eq!(s.path, "/v1/completions");
    assert_eq!(s.auth.as_deref(), Some("Bearer secret"));
    assert_eq!(s.body["model"], "test-model");
    assert_eq!(s.body["stop"], serde_json::json!(["\n\n"]));
    assert_eq!(s.body["max_tokens"], 16);
}

#[test]
fn backend_uses_task_temperatures_and_stops() {
    let (url, seen) = mock(vec![ok("Apple, banana cherry.\nextra"), ok("apple banana cherry\n\nnext")]);
    let backend = LlmBackend::new(client(&url, 1), PromptExemplars::alphabetization_default(), PromptTask::Alphabetization);
    let x = words("cherry apple banana");
    let mut rng = stream(0, &[0]);
    let y_hat = backend.predict(&x, &mut rng).unwrap();
    assert_eq!(y_hat, words("apple banana cherry"));
    let y = backend.refine(&x, &words("banana apple cherry"), "The word banana is placed in an incorrect position.", &mut rng).unwrap();
    assert_eq!(y, words("apple banana cherry"));

    let seen = seen.lock().unwrap();
    assert_eq!(seen[0].body["temperature"], 0.5);
    assert_eq!(seen[0].body["stop"], serde_json::json!(["\n"]));
    assert!(seen[0].body["prompt"].as_str().unwrap().ends_with("cherry apple banana |||"));
    assert_eq!(seen[1].body["temperature"], 0.0);
    assert_eq!(seen[1].body["stop"], serde_json::json!(["\n\n"]));
    let prompt = seen[1].body["prompt"].as_str().unwrap();
    assert!(prompt.contains("Feedback: The word banana is placed in an incorrect position.\nEdit:"));
}

#[test]
fn self_refine_critique_is_completed_at_zero_temperature() {
    let (url, seen) = mock(vec![ok("  The list is correctly sorted.\n\nOrdering: x")]);
    let backend = LlmBackend::new(client(&url, 1), PromptExemplars::empty(), PromptTask::Alphabetization);
    let c = self_refine_critique(&backend, &words("apple banana")).unwrap();
    assert_eq!(c, "The list is correctly sorted.");
    let seen = seen.lock().unwrap();
    assert_eq!(seen[0].body["temperature"], 0.0);
    assert!(seen[0].body["prompt"].as_str().unwrap().ends_with("Ordering: apple banana\nFeedback:"));
}
