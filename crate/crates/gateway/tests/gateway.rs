use std::collections::{BTreeMap, HashSet, VecDeque};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use mipw_core::{build_messages, default_template, ChatMessage, Role};
use mipw_gateway::*;
use serde_json::{json, Value};

#[derive(Default)]
struct Mock {
    script: Mutex<VecDeque<u16>>,
    calls: AtomicUsize,
    bodies: Mutex<Vec<Value>>,
    auth: Mutex<Vec<Option<String>>>,
    in_flight: AtomicUsize,
    peak: AtomicUsize,
    delay: Mutex<Duration>,
    malformed: Mutex<bool>,
}

async fn handler(State(mock): State<Arc<Mock>>, headers: HeaderMap, Json(body): Json<Value>) -> (StatusCode, Json<Value>) {
    mock.calls.fetch_add(1, Ordering::SeqCst);
    let now = mock.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    mock.peak.fetch_max(now, Ordering::SeqCst);
    let delay = *mock.delay.lock().unwrap();
    tokio::time::sleep(delay).await;
    mock.in_flight.fetch_sub(1, Ordering::SeqCst);

    mock.auth
        .lock()
        .unwrap()
        .push(headers.get("authorization").map(|v| v.to_str().unwrap().to_string()));
    mock.bodies.lock().unwrap().push(body.clone());
    let last = body["messages"].as_array().unwrap().last().unwrap()["content"]
        .as_str()
        .unwrap()
        .to_string();
    if last.contains("ALWAYS-FAIL") {
        return (StatusCode::INTERNAL_SERVER_ERROR, Json(json!({"error": "boom"})));
    }
    if let Some(code) = mock.script.lock().unwrap().pop_front() {
        if code != 200 {
            let status = StatusCode::from_u16(code).unwrap();
            return (status, Json(json!({"error": {"message": "scripted"}})));
        }
    }
    if *mock.malformed.lock().unwrap() {
        return (StatusCode::OK, Json(json!({"choices": []})));
    }
    let text = format!("echo {}", last.len());
    (
        StatusCode::OK,
        Json(json!({"choices": [{"message": {"role": "assistant", "content": text}, "finish_reason": "stop"}]})),
    )
}

async fn serve(mock: Arc<Mock>) -> String {
    let app = Router::new().route("/v1/chat/completions", post(handler)).with_state(mock);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("http://{addr}")
}

fn fast_config() -> ModelConfig {
    let mut c = ModelConfig::new("gpt-4o");
    c.backoff_base = Duration::from_millis(5);
    c.request_timeout = Duration::from_secs(10);
    c
}

fn user(text: &str) -> Vec<ChatMessage> {
    vec![
        ChatMessage {
            role: Role::System,
            content: "sys".into(),
        },
        ChatMessage {
            role: Role::User,
            content: text.into(),
        },
    ]
}

async fn setup(config: ModelConfig) -> (Arc<Mock>, Gateway) {
    let mock = Arc::new(Mock::default());
    let base = serve(mock.clone()).await;
    let backend = Arc::new(OpenAiBackend::new(base, Some("sk-test".into())));
    (mock, Gateway::new(backend, config).unwrap())
}

#[tokio::test]
async fn payload_carries_top_p_and_nothing_else() {
    let (mock, gw) = setup(fast_config()).await;
    let out = gw.complete(&gw.request(user("hello"))).await.unwrap();
    assert_eq!(out.attempts, 1);
    assert!(!out.from_cache);
    let body = mock.bodies.lock().unwrap()[0].clone();
    assert_eq!(body["top_p"], json!(0.1));
    assert_eq!(body["model"], json!("gpt-4o"));
    let mut keys: Vec<&str> = body.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort();
    assert_eq!(keys, vec!["messages", "model", "top_p"]);
    assert_eq!(mock.auth.lock().unwrap()[0].as_deref(), Some("Bearer sk-test"));
}

#[tokio::test]
async fn retries_through_rate_limits() {
    let (mock, gw) = setup(fast_config()).await;
    mock.script.lock().unwrap().extend([429, 429, 200]);
    let out = gw.complete(&gw.request(user("x"))).await.unwrap();
    assert_eq!(out.attempts, 3);
    assert_eq!(mock.calls.load(Ordering::SeqCst), 3);
}

#[tokio::test]
async fn auth_failure_is_not_retried() {
    let (mock, gw) = setup(fast_config()).await;
    mock.script.lock().unwrap().extend([401]);
    let err = gw.complete(&gw.request(user("x"))).await.unwrap_err();
    assert!(matches!(err, GatewayError::AuthFailed { status: 401, .. }), "{err}");
    assert_eq!(mock.calls.load(Ordering::SeqCst), 1);

    mock.script.lock().unwrap().extend([400]);
    let err = gw.complete(&gw.request(user("y"))).await.unwrap_err();
    assert!(matches!(err, GatewayError::Rejected { status: 400, .. }), "{err}");
}

#[tokio::test]
async fn server_errors_exhaust_attempts() {
    let (mock, gw) = setup(fast_config()).await;
    let err = gw.complete(&gw.request(user("ALWAYS-FAIL"))).await.unwrap_err();
    match err {
        GatewayError::RetriesExhausted { attempts, last } => {
            assert_eq!(attempts, 5);
            assert!(matches!(last, BackendError::ServerError { status: 500, .. }));
        }
        other => panic!("{other}"),
    }
    assert_eq!(mock.calls.load(Ordering::SeqCst), 5);
}

#[tokio::test]
async fn malformed_body_is_reported() {
    let (mock, gw) = setup(fast_config()).await;
    *mock.malformed.lock().unwrap() = true;
    let err = gw.complete(&gw.request(user("x"))).await.unwrap_err();
    assert!(matches!(err, GatewayError::MalformedResponse(_)), "{err}");
}

#[tokio::test]
async fn slow_server_times_out() {
    let mut cfg = fast_config();
    cfg.request_timeout = Duration::from_millis(50);
    cfg.max_attempts = 2;
    let (mock, gw) = setup(cfg).await;
    *mock.delay.lock().unwrap() = Duration::from_millis(500);
    let err = gw.complete(&gw.request(user("x"))).await.unwrap_err();
    assert!(
        matches!(err, GatewayError::RetriesExhausted { attempts: 2, last: BackendError::Timeout }),
        "{err}"
    );
}

#[tokio::test]
async fn warm_cache_skips_network() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = fast_config();
    cfg.cache_dir = Some(dir.path().to_path_buf());
    let (mock, gw) = setup(cfg).await;
    let first = gw.complete(&gw.request(user("cache me"))).await.unwrap();
    let calls = mock.calls.load(Ordering::SeqCst);
    let second = gw.complete(&gw.request(user("cache me"))).await.unwrap();
    assert_eq!(mock.calls.load(Ordering::SeqCst), calls);
    assert!(second.from_cache);
    assert_eq!(second.text, first.text);
    assert_eq!(second.digest, first.digest);

    let path = ResponseCache::new(dir.path()).path_for(&CacheKey::new("gpt-4o", 0.1, &user("cache me")));
    let entry: CacheEntry = serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap();
    assert_eq!(entry.text, first.text);
    assert_eq!(entry.messages, user("cache me"));
}

#[tokio::test]
async fn concurrency_is_bounded() {
    let mut cfg = fast_config();
    cfg.max_in_flight = 3;
    let (mock, gw) = setup(cfg).await;
    *mock.delay.lock().unwrap() = Duration::from_millis(30);
    let items: Vec<_> = (0..12).map(|i| (format!("s{i}"), user(&format!("sentence {i}")))).collect();
    let events = Mutex::new(Vec::new());
    let results = gw.run_batch(items, &|e| events.lock().unwrap().push(e.clone())).await;
    assert_eq!(results.len(), 12);
    assert!(results.values().all(|r| r.is_ok()));
    let peak = mock.peak.load(Ordering::SeqCst);
    assert!((2..=3).contains(&peak), "peak {peak}");
    let events = events.into_inner().unwrap();
    assert_eq!(events.len(), 12);
    assert_eq!(events.last().unwrap().done, 12);
}

#[tokio::test]
async fn batch_keeps_going_past_failures() {
    let (_mock, gw) = setup(fast_config()).await;
    let items = vec![
        ("a".to_string(), user("fine")),
        ("b".to_string(), user("ALWAYS-FAIL")),
        ("c".to_string(), user("also fine")),
    ];
    let results = gw.run_batch(items, &|_| {}).await;
    assert_eq!(results.len(), 3);
    assert!(results["a"].is_ok() && results["c"].is_ok());
    assert!(matches!(results["b"], Err(GatewayError::RetriesExhausted { attempts: 5, .. })));
}

fn playback_for(sentences: &[(&str, &str)], cfg: &ModelConfig) -> BTreeMap<String, String> {
    let template = default_template();
    sentences
        .iter()
        .map(|(id, s)| {
            let p = build_messages(&template, id, s).unwrap();
            let key = CacheKey::new(&cfg.model_id, cfg.top_p, &p.messages);
            (key.digest, format!("reply for {id}"))
        })
        .collect()
}

#[tokio::test]
async fn playback_batch_and_cached_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = fast_config();
    cfg.cache_dir = Some(dir.path().to_path_buf());
    let sentences = [("s1", "The river ran dry."), ("s2", "Time flies."), ("s3", "He grasped the idea.")];
    let backend = Arc::new(PlaybackBackend::new(playback_for(&sentences, &cfg)));
    let gw = Gateway::new(backend.clone(), cfg.clone()).unwrap();
    let template = default_template();
    let items: Vec<_> = sentences
        .iter()
        .map(|(id, s)| (id.to_string(), build_messages(&template, id, s).unwrap().messages))
        .collect();

    let first = gw.run_batch(items.clone(), &|_| {}).await;
    assert_eq!(first.len(), 3);
    assert_eq!(first["s2"].as_ref().unwrap().text, "reply for s2");
    assert_eq!(backend.calls(), 3);

    let second = gw.run_batch(items, &|_| {}).await;
    assert_eq!(backend.calls(), 3);
    for (id, r) in &second {
        let r = r.as_ref().unwrap();
        assert!(r.from_cache);
        assert_eq!(r.text, first[id].as_ref().unwrap().text);
    }
}

#[tokio::test]
async fn unscripted_request_names_digest() {
    let backend = Arc::new(PlaybackBackend::new(BTreeMap::new()));
    let gw = Gateway::new(backend, fast_config()).unwrap();
    let req = gw.request(user("unknown"));
    let err = gw.complete(&req).await.unwrap_err();
    match err {
        GatewayError::UnscriptedRequest { digest } => assert_eq!(digest, req.key().digest),
        other => panic!("{other}"),
    }
}

#[test]
fn no_digest_collisions_over_many_requests() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(99);
    let mut inputs = HashSet::new();
    let mut digests = HashSet::new();
    while inputs.len() < 100_000 {
        let model = ["gpt-3.5-turbo", "gpt-4-turbo", "gpt-4o"][rng.gen_range(0..3)];
        let top_p = [0.1, 0.2, 1.0][rng.gen_range(0..3)];
        let text: String = (0..rng.gen_range(1..12)).map(|_| rng.gen_range('a'..='e')).collect();
        if !inputs.insert((model, top_p.to_string(), text.clone())) {
            continue;
        }
        assert!(digests.insert(CacheKey::new(model, top_p, &user(&text)).digest));
    }
    assert_eq!(digests.len(), 100_000);
}
