use std::collections::BTreeSet;
use std::sync::Arc;

use agritrace::config::fixtures::olive_oil;
use agritrace::config::SupplyChainConfig;
use agritrace::contracts::Operation;
use agritrace::crypto::{hash, Address};
use agritrace::ledger::{read_chain_file, verify_chain_bytes, GasSchedule, LedgerError};
use agritrace::provenance::{QrPayload, TraceNode};
use agritrace::scenario::{fixture_chain, olive_oil_flow};
use agritrace_service::api::{router, AppState};
use agritrace_service::node::{init, Home, InitOptions};
use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Fixture {
    _dir: tempfile::TempDir,
    home: Home,
    state: Arc<AppState>,
    app: Router,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let home = Home::new(dir.path());
    let opts = InitOptions {
        chain_id: "olive-demo".into(),
        admin: "admin".into(),
        fund: 1000,
        seeded: true,
        register: true,
        demo: true,
        gas_schedule: GasSchedule::default(),
        passphrase: "pw".into(),
        kdf_iterations: 1000,
    };
    init(&home, olive_oil(), &opts).unwrap();
    let state = Arc::new(AppState::open(home.clone()).unwrap());
    let app = router(state.clone(), None);
    Fixture {
        _dir: dir,
        home,
        state,
        app,
    }
}

struct Reply {
    status: StatusCode,
    replayed: bool,
    content_type: String,
    bytes: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes).unwrap_or_else(|_| panic!("not json: {:?}", String::from_utf8_lossy(&self.bytes)))
    }

    fn error_code(&self) -> String {
        self.json()["error"]["code"].as_str().unwrap().to_string()
    }
}

async fn call(app: &Router, req: Request<Body>) -> Reply {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let replayed = res.headers().contains_key("idempotent-replayed");
    let content_type = res
        .headers()
        .get(header::CONTENT_TYPE)
        .map(|v| v.to_str().unwrap().to_string())
        .unwrap_or_default();
    let bytes = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply {
        status,
        replayed,
        content_type,
        bytes,
    }
}

async fn get(app: &Router, path: &str) -> Reply {
    call(app, Request::get(path).body(Body::empty()).unwrap()).await
}

async fn post(app: &Router, path: &str, token: Option<&str>, body: Value, idem: Option<&str>) -> Reply {
    let mut req = Request::builder()
        .method(Method::POST)
        .uri(path)
        .header(header::CONTENT_TYPE, "application/json");
    if let Some(t) = token {
        req = req.header(header::AUTHORIZATION, format!("Bearer {t}"));
    }
    if let Some(k) = idem {
        req = req.header("Idempotency-Key", k);
    }
    call(app, req.body(Body::from(body.to_string())).unwrap()).await
}

async fn login(app: &Router, actor: &str) -> String {
    let r = post(app, "/api/v1/session", None, json!({ "actor_id": actor, "passphrase": "pw" }), None).await;
    assert_eq!(r.status, StatusCode::OK, "{}", String::from_utf8_lossy(&r.bytes));
    r.json()["token"].as_str().unwrap().to_string()
}

async fn first_of(app: &Router, kind: &str) -> Address {
    let r = get(app, &format!("/api/v1/entities?kind={kind}&active=true")).await;
    r.json()[0]["address"].as_str().unwrap().parse().unwrap()
}

fn file_len(home: &Home) -> u64 {
    std::fs::metadata(home.chain_path()).unwrap().len()
}

#[tokio::test]
async fn config_is_the_validated_document() {
    let f = fixture();
    for path in ["/api/config", "/api/v1/config"] {
        let r = get(&f.app, path).await;
        assert_eq!(r.status, StatusCode::OK);
        let config: SupplyChainConfig = serde_json::from_slice(&r.bytes).unwrap();
        assert_eq!(config, olive_oil());
    }
}

#[tokio::test]
async fn unauthorized_event_is_forbidden_and_chain_does_not_grow() {
    let f = fixture();
    let grove = first_of(&f.app, "olive_grove").await;
    let token = login(&f.app, "miller").await;
    let (height, len) = (f.state.height(), file_len(&f.home));
    let body = json!({ "entity": grove, "event_kind_id": "treatment", "values": { "product": "copper", "dose": "2" } });
    let r = post(&f.app, "/api/events", Some(&token), body.clone(), None).await;
    assert_eq!(r.status, StatusCode::FORBIDDEN);
    assert_eq!(r.error_code(), "unauthorized");
    assert_eq!(f.state.height(), height);
    assert_eq!(file_len(&f.home), len);

    let r = post(&f.app, "/api/events", None, body.clone(), None).await;
    assert_eq!(r.status, StatusCode::UNAUTHORIZED);
    assert_eq!(r.error_code(), "unauthenticated");

    let farmer = login(&f.app, "farmer").await;
    let r = post(&f.app, "/api/events", Some(&farmer), body, None).await;
    assert_eq!(r.status, StatusCode::CREATED);
    assert_eq!(r.json()["height"], json!(height + 1));
    assert!(file_len(&f.home) > len);
}

#[tokio::test]
async fn bad_split_carries_the_contract_error_code() {
    let f = fixture();
    let bottle = first_of(&f.app, "bottled_oil").await;
    let quantities = vec![100u64, 100];

    // the engine's own verdict on the same operation
    let (mut chain, people) = fixture_chain();
    let flow = olive_oil_flow(&mut chain, &people).unwrap();
    let expected = match chain.execute(
        people.key("bottler"),
        Operation::Split {
            product: flow.bottles,
            quantities: quantities.clone(),
        },
    ) {
        Err(LedgerError::Rejected(e)) => e.code(),
        other => panic!("engine accepted a bad split: {other:?}"),
    };
    assert_eq!(flow.bottles, bottle);

    let token = login(&f.app, "bottler").await;
    let height = f.state.height();
    let r = post(
        &f.app,
        &format!("/api/v1/products/{bottle}/split"),
        Some(&token),
        json!({ "quantities": quantities }),
        None,
    )
    .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.error_code(), expected);
    assert_eq!(f.state.height(), height);

    let r = post(
        &f.app,
        &format!("/api/v1/products/{bottle}/split"),
        Some(&token),
        json!({ "quantities": [200, 300] }),
        None,
    )
    .await;
    assert_eq!(r.status, StatusCode::CREATED);
    assert_eq!(r.json()["created"].as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn idempotency_key_replays_the_original_receipt() {
    let f = fixture();
    let token = login(&f.app, "farmer").await;
    let body = json!({ "recipient": Address::from_digest(&hash(b"shop")), "amount": 7 });
    let height = f.state.height();
    let first = post(&f.app, "/api/pay", Some(&token), body.clone(), Some("k-1")).await;
    assert_eq!(first.status, StatusCode::CREATED);
    assert!(!first.replayed);
    let again = post(&f.app, "/api/pay", Some(&token), body.clone(), Some("k-1")).await;
    assert_eq!(again.status, StatusCode::OK);
    assert!(again.replayed);
    assert_eq!(again.json(), first.json());
    assert_eq!(f.state.height(), height + 1);

    let other = post(&f.app, "/api/pay", Some(&token), body.clone(), Some("k-2")).await;
    assert_eq!(other.status, StatusCode::CREATED);
    assert_ne!(other.json()["tx"], first.json()["tx"]);
    assert_eq!(f.state.height(), height + 2);

    // keys are scoped to the session
    let second = login(&f.app, "farmer").await;
    let r = post(&f.app, "/api/pay", Some(&second), body, Some("k-1")).await;
    assert_eq!(r.status, StatusCode::CREATED);
    assert_eq!(f.state.height(), height + 3);

    let balances = get(&f.app, "/api/tokens").await.json();
    let shop = Address::from_digest(&hash(b"shop")).to_string();
    assert_eq!(balances["balances"][shop], json!(21));
}

#[tokio::test]
async fn failed_request_is_not_remembered() {
    let f = fixture();
    let token = login(&f.app, "farmer").await;
    let to = Address::from_digest(&hash(b"x"));
    let r = post(&f.app, "/api/pay", Some(&token), json!({ "recipient": to, "amount": 5000 }), Some("k")).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.error_code(), "insufficient_funds");
    let r = post(&f.app, "/api/pay", Some(&token), json!({ "recipient": to, "amount": 5 }), Some("k")).await;
    assert_eq!(r.status, StatusCode::CREATED);
}

#[tokio::test]
async fn session_lifecycle_and_visible_event_kinds() {
    let f = fixture();
    let r = post(&f.app, "/api/session", None, json!({ "actor_id": "farmer", "passphrase": "nope" }), None).await;
    assert_eq!(r.status, StatusCode::UNAUTHORIZED);
    assert_eq!(r.error_code(), "invalid_credentials");

    let token = login(&f.app, "farmer").await;
    let who = call(
        &f.app,
        Request::get("/api/session")
            .header(header::AUTHORIZATION, format!("Bearer {token}"))
            .body(Body::empty())
            .unwrap(),
    )
    .await
    .json();
    let config = olive_oil();
    let expected: Vec<&str> = config.visible_event_kinds("farmer").iter().map(|e| e.id.as_str()).collect();
    let visible: Vec<&str> = who["visible_event_kinds"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(visible, expected);
    assert!(visible.contains(&"treatment") && visible.contains(&"harvest"));
    assert!(!visible.contains(&"bottling"));
    assert_eq!(who["admin"], json!(false));

    let admin = login(&f.app, "admin").await;
    let who = call(
        &f.app,
        Request::get("/api/session")
            .header(header::AUTHORIZATION, format!("Bearer {admin}"))
            .body(Body::empty())
            .unwrap(),
    )
    .await
    .json();
    assert_eq!(who["admin"], json!(true));

    let r = call(
        &f.app,
        Request::delete("/api/session")
            .header(header::AUTHORIZATION, format!("Bearer {token}"))
            .body(Body::empty())
            .unwrap(),
    )
    .await;
    assert_eq!(r.status, StatusCode::NO_CONTENT);
    let r = post(&f.app, "/api/pay", Some(&token), json!({ "recipient": Address::from_digest(&hash(b"y")), "amount": 1 }), None).await;
    assert_eq!(r.status, StatusCode::UNAUTHORIZED);
}

#[tokio::test]
async fn public_trace_and_qr() {
    let f = fixture();
    let bottle = first_of(&f.app, "bottled_oil").await;
    let r = get(&f.app, &format!("/api/v1/entities/{bottle}/trace?dir=back")).await;
    assert_eq!(r.status, StatusCode::OK);
    let tree: TraceNode = serde_json::from_slice(&r.bytes).unwrap();
    let groves: BTreeSet<Address> = get(&f.app, "/api/entities?kind=olive_grove")
        .await
        .json()
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["address"].as_str().unwrap().parse().unwrap())
        .collect();
    assert_eq!(groves.len(), 2);
    assert_eq!(tree.leaves(), groves);

    let grove = *groves.iter().next().unwrap();
    let forward = get(&f.app, &format!("/api/entities/{grove}/trace?dir=forward")).await.json();
    assert!(forward.as_array().unwrap().iter().any(|d| d["address"] == json!(bottle)));

    let qr = get(&f.app, &format!("/api/qr/{bottle}")).await.json();
    let payload: QrPayload = qr["payload"].as_str().unwrap().parse().unwrap();
    assert_eq!(payload.address, bottle);
    assert_eq!(payload.chain_id, "olive-demo");

    let missing = Address::from_digest(&hash(b"nothing"));
    assert_eq!(get(&f.app, &format!("/api/entities/{missing}")).await.status, StatusCode::NOT_FOUND);
    assert_eq!(get(&f.app, "/api/entities/zz").await.status, StatusCode::BAD_REQUEST);
    let r = get(&f.app, &format!("/api/entities/{bottle}/trace?dir=sideways")).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn schemas_cover_every_event_kind() {
    let f = fixture();
    let all = get(&f.app, "/api/v1/schemas").await.json();
    let ids: Vec<&str> = all.as_array().unwrap().iter().map(|s| s["event_kind_id"].as_str().unwrap()).collect();
    let config = olive_oil();
    assert_eq!(ids, config.event_kinds.keys().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(get(&f.app, "/api/schemas/harvest").await.json()["event_kind_id"], json!("harvest"));
    assert_eq!(get(&f.app, "/api/schemas/nope").await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn notarize_upload_then_fetch() {
    let f = fixture();
    let grove = first_of(&f.app, "olive_grove").await;
    let token = login(&f.app, "farmer").await;
    let doc = b"%PDF-1.4 soil analysis".to_vec();
    let boundary = "XyZ0boundary";
    let mut body = Vec::new();
    body.extend_from_slice(
        format!("--{boundary}\r\nContent-Disposition: form-data; name=\"entity\"\r\n\r\n{grove}\r\n").as_bytes(),
    );
    body.extend_from_slice(
        format!(
            "--{boundary}\r\nContent-Disposition: form-data; name=\"file\"; filename=\"a.pdf\"\r\nContent-Type: application/pdf\r\n\r\n"
        )
        .as_bytes(),
    );
    body.extend_from_slice(&doc);
    body.extend_from_slice(format!("\r\n--{boundary}--\r\n").as_bytes());
    let req = Request::post("/api/v1/notarize")
        .header(header::AUTHORIZATION, format!("Bearer {token}"))
        .header(header::CONTENT_TYPE, format!("multipart/form-data; boundary={boundary}"))
        .body(Body::from(body))
        .unwrap();
    let r = call(&f.app, req).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", String::from_utf8_lossy(&r.bytes));
    let id = hash(&doc);
    assert_eq!(r.json()["document"]["content_id"], json!(id));

    let fetched = get(&f.app, &format!("/api/docs/{id}")).await;
    assert_eq!(fetched.bytes, doc);
    assert_eq!(fetched.content_type, "application/pdf");

    let entity = get(&f.app, &format!("/api/entities/{grove}")).await.json();
    let last = entity["events"].as_array().unwrap().last().unwrap().clone();
    assert_eq!(last["body"]["digest"], json!(id));
}

#[tokio::test]
async fn malformed_body_uses_error_shape() {
    let f = fixture();
    let token = login(&f.app, "farmer").await;
    let r = post(&f.app, "/api/pay", Some(&token), json!({ "recipient": "0x12", "amount": 1 }), None).await;
    assert!(r.status.is_client_error());
    assert_eq!(r.error_code(), "bad_request");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_writes_are_serialized_and_persisted() {
    let f = fixture();
    let start = f.state.height();
    let mut tokens = Vec::new();
    for actor in ["farmer", "miller", "bottler", "retailer"] {
        tokens.push(login(&f.app, actor).await);
    }
    let mut tasks = Vec::new();
    for i in 0..24u64 {
        let app = f.app.clone();
        let token = tokens[i as usize % tokens.len()].clone();
        tasks.push(tokio::spawn(async move {
            let to = Address::from_digest(&hash(&i.to_be_bytes()));
            let r = post(&app, "/api/pay", Some(&token), json!({ "recipient": to, "amount": 1 }), None).await;
            let read = get(&app, "/api/chain").await;
            (r.status, read.status)
        }));
    }
    for t in tasks {
        assert_eq!(t.await.unwrap(), (StatusCode::CREATED, StatusCode::OK));
    }
    assert_eq!(f.state.height(), start + 24);
    let bytes = read_chain_file(&f.home.chain_path()).unwrap();
    let report = verify_chain_bytes(&bytes);
    assert!(report.failure.is_none(), "{:?}", report.failure);
    assert_eq!(report.blocks_verified, start + 25);
    assert_eq!(f.home.load_chain().unwrap().height(), start + 24);
}
