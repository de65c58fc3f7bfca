use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use ctxed_prompt::{generate_all, HttpClient, HttpConfig, LlmClient, LlmError, PromptError, ResponseCache, StubClient};

/// Serves `statuses` in order (the last one repeats), counting requests.
fn serve(statuses: Vec<(u16, &'static str)>) -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                if line == "\r\n" {
                    break;
                }
            }
            let mut body = vec![0; len];
            let _ = reader.read_exact(&mut body);
            let n = counter.fetch_add(1, Ordering::SeqCst);
            let (status, text) = statuses[n.min(statuses.len() - 1)];
            let resp = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                text.len()
            );
            let _ = stream.write_all(resp.as_bytes());
        }
    });
    (format!("http://{addr}/v1"), hits)
}

fn client(base_url: String) -> HttpClient {
    HttpClient::new(HttpConfig {
        base_url,
        api_key: Some("k".into()),
        model: "m".into(),
        timeout: Duration::from_secs(5),
        max_attempts: 3,
        backoff: Duration::from_millis(1),
    })
}

const OK: &str = r#"{"choices":[{"message":{"role":"assistant","content":"[]"}}]}"#;

#[test]
fn rate_limit_gives_typed_error_after_three_attempts() {
    let (url, hits) = serve(vec![(429, "{}")]);
    let err = client(url).generate("p", 0.0).unwrap_err();
    assert_eq!(err, LlmError::RateLimited { attempts: 3 });
    assert_eq!(hits.load(Ordering::SeqCst), 3);
}

#[test]
fn transient_errors_are_retried() {
    let (url, hits) = serve(vec![(503, "busy"), (429, "{}"), (200, OK)]);
    assert_eq!(client(url).generate("p", 0.4).unwrap(), "[]");
    assert_eq!(hits.load(Ordering::SeqCst), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let (url, hits) = serve(vec![(401, "nope")]);
    let err = client(url).generate("p", 0.0).unwrap_err();
    assert!(matches!(err, LlmError::Http { status: 401, attempts: 1, .. }));
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[test]
fn malformed_success_body_is_bad_response() {
    let (url, _) = serve(vec![(200, "{\"choices\":[]}")]);
    assert!(matches!(client(url).generate("p", 0.0), Err(LlmError::BadResponse(_))));
}

#[test]
fn attempts_are_capped_at_three() {
    let (url, hits) = serve(vec![(500, "x")]);
    let c = HttpConfig {
        base_url: url,
        api_key: None,
        model: "m".into(),
        timeout: Duration::from_secs(5),
        max_attempts: 10,
        backoff: Duration::from_millis(1),
    };
    assert!(HttpClient::new(c).generate("p", 0.0).is_err());
    assert_eq!(hits.load(Ordering::SeqCst), 3);
}

struct Counting {
    inner: StubClient,
    calls: AtomicUsize,
}

impl LlmClient for Counting {
    fn generate(&self, prompt: &str, t: f64) -> Result<String, LlmError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.generate(prompt, t)
    }

    fn model(&self) -> &str {
        "stub"
    }
}

#[test]
fn generate_all_keeps_order_and_persists_responses() {
    let prompts: Vec<String> = (0..20).map(|i| format!("prompt {i}")).collect();
    let mut inner = StubClient::new();
    for (i, p) in prompts.iter().enumerate() {
        if i != 7 {
            inner.register(p, format!("resp {i}"));
        }
    }
    let client = Counting {
        inner,
        calls: AtomicUsize::new(0),
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cache.jsonl");
    let mut cache = ResponseCache::open(&path).unwrap();
    let out = generate_all(&client, &prompts, 0.4, &mut cache, 4);
    for (i, r) in out.iter().enumerate() {
        match r {
            Ok(s) => assert_eq!(s, &format!("resp {i}")),
            Err(e) => {
                assert_eq!(i, 7);
                assert!(matches!(e, PromptError::Llm(LlmError::NoFixture(_))));
            }
        }
    }
    assert_eq!(client.calls.load(Ordering::SeqCst), 20);

    let mut reopened = ResponseCache::open(&path).unwrap();
    assert_eq!(reopened.len(), 19);
    let again = generate_all(&client, &prompts, 0.4, &mut reopened, 2);
    assert_eq!(client.calls.load(Ordering::SeqCst), 21);
    assert_eq!(again.iter().filter(|r| r.is_ok()).count(), 19);
}
