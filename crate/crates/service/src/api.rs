//! HTTP+JSON API, mounted at `/api/v1` and, as an alias, `/api`.
//!
//! Reads are public. Writes need `Authorization: Bearer <token>` from
//! `POST /session`; each one is signed with the session's key, sealed into
//! its own block and appended to the chain file before the response.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use agritrace::config::{Role, SupplyChainConfig};
use agritrace::contracts::{producer_address, ContractError, Operation, OutputSpec};
use agritrace::crypto::{Address, Hash, KeyPair, Signer};
use agritrace::docstore::{DocStore, DocStoreError};
use agritrace::generator::{generate_form_schema, generate_form_schemas};
use agritrace::ledger::{write_chain_file, Chain, LedgerError};
use agritrace::params::ParamTriple;
use agritrace::provenance::{trace_back, trace_forward, ProvenanceError, QrPayload};
use axum::extract::{DefaultBodyLimit, FromRequest, FromRequestParts, Multipart, Path, Query, Request, State};
use axum::http::request::Parts;
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use parking_lot::{Mutex, RwLock};
use rand::RngCore;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::services::ServeDir;

use crate::keystore::{Keystore, KeystoreError};
use crate::node::{execute_and_seal, persist, Home, NodeError};

pub const MAX_UPLOAD: usize = 32 << 20;
pub const IDEMPOTENCY_HEADER: &str = "idempotency-key";
pub const REPLAYED_HEADER: &str = "idempotent-replayed";

pub struct AppState {
    home: Home,
    chain: RwLock<Chain>,
    /// Held for the whole of a write: execute, seal, persist.
    writer: tokio::sync::Mutex<()>,
    /// Set when a sealed block could not be appended; the next write (or
    /// shutdown) rewrites the whole file.
    unsynced: AtomicBool,
    docs: DocStore,
    keys: Keystore,
    sessions: Mutex<HashMap<String, Arc<Session>>>,
}

pub struct Session {
    actor_id: String,
    key: KeyPair,
    /// Idempotency key → response body of the first successful request.
    replies: Mutex<HashMap<String, Value>>,
}

impl AppState {
    pub fn open(home: Home) -> Result<AppState, NodeError> {
        Ok(AppState {
            chain: RwLock::new(home.load_chain()?),
            writer: tokio::sync::Mutex::new(()),
            unsynced: AtomicBool::new(false),
            docs: home.docs()?,
            keys: home.keys()?,
            sessions: Mutex::new(HashMap::new()),
            home,
        })
    }

    pub fn height(&self) -> u64 {
        self.chain.read().height()
    }

    /// Rewrites the chain file if an earlier append failed.
    pub fn flush(&self) -> Result<(), NodeError> {
        if self.unsynced.load(Ordering::SeqCst) {
            let blocks = self.chain.read().blocks().to_vec();
            write_chain_file(&self.home.chain_path(), &blocks)?;
            self.unsynced.store(false, Ordering::SeqCst);
        }
        Ok(())
    }

    fn config(&self) -> Arc<SupplyChainConfig> {
        self.chain.read().state().config.clone()
    }
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl ToString) -> ApiError {
        ApiError {
            status,
            code: code.to_string(),
            message: message.to_string(),
        }
    }

    fn bad_request(message: impl ToString) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    fn not_found(message: impl ToString) -> ApiError {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    fn internal(message: impl ToString) -> ApiError {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code, "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}

impl From<ContractError> for ApiError {
    fn from(e: ContractError) -> ApiError {
        let status = if e.is_authorization() {
            StatusCode::FORBIDDEN
        } else if e.is_not_found() {
            StatusCode::NOT_FOUND
        } else {
            StatusCode::UNPROCESSABLE_ENTITY
        };
        ApiError::new(status, e.code(), &e)
    }
}

impl From<NodeError> for ApiError {
    fn from(e: NodeError) -> ApiError {
        match e {
            NodeError::Ledger(LedgerError::Rejected(c)) => c.into(),
            NodeError::Ledger(l) => ApiError::new(StatusCode::CONFLICT, "ledger", l),
            NodeError::DocStore(d) => d.into(),
            other => ApiError::internal(other),
        }
    }
}

impl From<DocStoreError> for ApiError {
    fn from(e: DocStoreError) -> ApiError {
        match e {
            DocStoreError::NotFound(_) => ApiError::not_found(e),
            DocStoreError::Empty => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "empty_document", e),
            DocStoreError::Integrity { .. } => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "integrity", e),
            other => ApiError::internal(other),
        }
    }
}

impl From<ProvenanceError> for ApiError {
    fn from(e: ProvenanceError) -> ApiError {
        match e {
            ProvenanceError::UnknownEntity(_) => ApiError::not_found(e),
            ProvenanceError::UnknownFormat(_) | ProvenanceError::BadPayload(_) => ApiError::bad_request(e),
            ProvenanceError::CorruptLog { .. } => ApiError::internal(e),
        }
    }
}

impl From<KeystoreError> for ApiError {
    fn from(e: KeystoreError) -> ApiError {
        match e {
            KeystoreError::NotFound(_) | KeystoreError::Decrypt(_) => {
                ApiError::new(StatusCode::UNAUTHORIZED, "invalid_credentials", "unknown key or wrong passphrase")
            }
            other => ApiError::internal(other),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// JSON body whose rejections use the API error shape.
pub struct Body<T>(pub T);

#[axum::async_trait]
impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Body(v)),
            Err(r) => Err(ApiError::new(r.status(), "bad_request", r.body_text())),
        }
    }
}

pub struct Auth(pub Arc<Session>);

#[axum::async_trait]
impl FromRequestParts<Arc<AppState>> for Auth {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &Arc<AppState>) -> Result<Self, ApiError> {
        let unauthorized = || ApiError::new(StatusCode::UNAUTHORIZED, "unauthenticated", "missing or expired session");
        let token = parts
            .headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .ok_or_else(unauthorized)?;
        let session = state.sessions.lock().get(token.trim()).cloned();
        session.map(Auth).ok_or_else(unauthorized)
    }
}

fn parse_address(s: &str) -> ApiResult<Address> {
    s.parse().map_err(|_| ApiError::bad_request(format!("invalid address `{s}`")))
}

pub fn router(state: Arc<AppState>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/session", post(login).get(whoami).delete(logout))
        .route("/config", get(config))
        .route("/schemas", get(schemas))
        .route("/schemas/:id", get(schema))
        .route("/entities", get(entities))
        .route("/entities/:addr", get(entity))
        .route("/entities/:addr/trace", get(trace))
        .route("/qr/:addr", get(qr))
        .route("/docs/:id", get(document))
        .route("/chain", get(chain_info))
        .route("/tokens", get(tokens))
        .route("/unlocks", get(unlocks))
        .route("/actors", get(actors).post(register_actor))
        .route("/resources", post(create_resource))
        .route("/events", post(record_event))
        .route("/products/:addr/split", post(split))
        .route("/products/:addr/merge", post(merge))
        .route("/transform", post(transform))
        .route("/notarize", post(notarize))
        .route("/asseverate", post(asseverate))
        .route("/unlock", post(request_unlock))
        .route("/unlock/:id/approve", post(approve_unlock))
        .route("/pay", post(pay))
        .with_state(state);
    let mut app = Router::new().nest("/api/v1", api.clone()).nest("/api", api);
    if let Some(dir) = static_dir {
        app = app.fallback_service(ServeDir::new(dir));
    }
    app.layer(DefaultBodyLimit::max(MAX_UPLOAD))
}

/// Binds `listen` and serves until ctrl-c.
pub async fn serve(state: Arc<AppState>, listen: &str, static_dir: Option<PathBuf>) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(listen).await?;
    tracing::info!(addr = %listener.local_addr()?, height = state.height(), "listening");
    axum::serve(listener, router(state.clone(), static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
            tracing::info!("shutting down");
        })
        .await?;
    state.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct Login {
    #[serde(default)]
    actor_id: Option<String>,
    #[serde(default)]
    address: Option<Address>,
    passphrase: String,
}

async fn login(State(s): State<Arc<AppState>>, Body(req): Body<Login>) -> ApiResult<Json<Value>> {
    let file = match (req.address, &req.actor_id) {
        (Some(a), _) => s.keys.file(&a)?,
        (None, Some(id)) => s.keys.for_actor(id)?,
        (None, None) => return Err(ApiError::bad_request("give `actor_id` or `address`")),
    };
    let keys = s.keys.clone();
    let actor_id = file.actor_id.clone();
    let key = tokio::task::spawn_blocking(move || keys.unlock(&file, &req.passphrase))
        .await
        .map_err(ApiError::internal)??;
    let mut raw = [0u8; 32];
    rand::thread_rng().fill_bytes(&mut raw);
    let token = hex::encode(raw);
    let address = key.address();
    let session = Arc::new(Session {
        actor_id: actor_id.clone(),
        key,
        replies: Mutex::new(HashMap::new()),
    });
    s.sessions.lock().insert(token.clone(), session);
    Ok(Json(json!({ "token": token, "actor_id": actor_id, "address": address })))
}

async fn whoami(State(s): State<Arc<AppState>>, Auth(session): Auth) -> Json<Value> {
    let address = session.key.address();
    let chain = s.chain.read();
    let state = chain.state();
    let entry = state.catalog_entry(&address);
    let actor_id = entry.map(|e| e.actor_id.as_str()).unwrap_or(&session.actor_id);
    let role = state.config.actor(actor_id).map(|a| a.role);
    let visible: Vec<&str> = state
        .config
        .visible_event_kinds(actor_id)
        .into_iter()
        .map(|e| e.id.as_str())
        .collect();
    Json(json!({
        "actor_id": actor_id,
        "address": address,
        "role": role,
        "registered": entry.is_some(),
        "enabled": entry.is_some_and(|e| e.enabled),
        "roles": entry.map(|e| e.roles.clone()).unwrap_or_default(),
        "admin": address == state.owner || role == Some(Role::Administrator),
        "visible_event_kinds": visible,
    }))
}

async fn logout(State(s): State<Arc<AppState>>, headers: HeaderMap) -> StatusCode {
    if let Some(token) = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
    {
        s.sessions.lock().remove(token.trim());
    }
    StatusCode::NO_CONTENT
}

async fn config(State(s): State<Arc<AppState>>) -> Json<SupplyChainConfig> {
    Json((*s.config()).clone())
}

async fn schemas(State(s): State<Arc<AppState>>) -> Json<Value> {
    Json(json!(generate_form_schemas(&s.config())))
}

async fn schema(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let schema = generate_form_schema(&s.config(), &id).map_err(ApiError::not_found)?;
    Ok(Json(json!(schema)))
}

#[derive(Deserialize)]
struct EntityFilter {
    kind: Option<String>,
    holder: Option<Address>,
    #[serde(default)]
    active: bool,
}

#[derive(Serialize)]
struct EntitySummary<'a> {
    address: Address,
    kind_id: &'a str,
    holder: Address,
    quantity: u64,
    unit: &'a str,
    active: bool,
    events: usize,
}

async fn entities(State(s): State<Arc<AppState>>, Query(f): Query<EntityFilter>) -> Json<Value> {
    let chain = s.chain.read();
    let list: Vec<EntitySummary> = chain
        .state()
        .entities
        .values()
        .filter(|e| f.kind.as_deref().is_none_or(|k| k == e.kind_id))
        .filter(|e| f.holder.is_none_or(|h| h == e.holder))
        .filter(|e| !f.active || e.is_active())
        .map(|e| EntitySummary {
            address: e.address,
            kind_id: &e.kind_id,
            holder: e.holder,
            quantity: e.quantity,
            unit: &e.unit,
            active: e.is_active(),
            events: e.events.len(),
        })
        .collect();
    Json(json!(list))
}

async fn entity(State(s): State<Arc<AppState>>, Path(addr): Path<String>) -> ApiResult<Json<Value>> {
    let a = parse_address(&addr)?;
    let chain = s.chain.read();
    let e = chain
        .state()
        .entity(&a)
        .ok_or_else(|| ApiError::not_found(format!("unknown entity {a}")))?;
    Ok(Json(json!(e)))
}

#[derive(Deserialize)]
struct TraceQuery {
    dir: Option<String>,
    depth: Option<usize>,
}

async fn trace(
    State(s): State<Arc<AppState>>,
    Path(addr): Path<String>,
    Query(q): Query<TraceQuery>,
) -> ApiResult<Json<Value>> {
    let a = parse_address(&addr)?;
    let chain = s.chain.read();
    match q.dir.as_deref().unwrap_or("back") {
        "back" => Ok(Json(json!(trace_back(&chain, a, q.depth)?))),
        "forward" => Ok(Json(json!(trace_forward(&chain, a)?))),
        other => Err(ApiError::bad_request(format!("dir must be `back` or `forward`, not `{other}`"))),
    }
}

async fn qr(State(s): State<Arc<AppState>>, Path(addr): Path<String>) -> ApiResult<Json<Value>> {
    let address = parse_address(&addr)?;
    let chain = s.chain.read();
    if chain.state().entity(&address).is_none() {
        return Err(ApiError::not_found(format!("unknown entity {address}")));
    }
    let payload = QrPayload {
        chain_id: chain.chain_id().to_string(),
        address,
    };
    Ok(Json(json!({ "payload": payload.to_string() })))
}

async fn document(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let id: Hash = id
        .parse()
        .map_err(|_| ApiError::bad_request(format!("invalid content id `{id}`")))?;
    let bytes = s.docs.get(&id)?;
    let media = s
        .docs
        .stat(&id)?
        .and_then(|o| o.media_type)
        .unwrap_or_else(|| "application/octet-stream".to_string());
    let media = HeaderValue::from_str(&media).unwrap_or(HeaderValue::from_static("application/octet-stream"));
    Ok(([(header::CONTENT_TYPE, media)], bytes).into_response())
}

async fn chain_info(State(s): State<Arc<AppState>>) -> Json<Value> {
    let chain = s.chain.read();
    let head = chain.head();
    Json(json!({
        "chain_id": chain.chain_id(),
        "height": head.height,
        "head": head.hash,
        "state_root": head.state_root,
        "timestamp": head.timestamp,
        "transactions": chain.blocks().iter().map(|b| b.transactions.len()).sum::<usize>(),
        "gas_schedule": chain.world().gas_schedule,
    }))
}

async fn tokens(State(s): State<Arc<AppState>>) -> Json<Value> {
    let chain = s.chain.read();
    let state = chain.state();
    let tokens: Vec<Value> = state
        .tokens
        .iter()
        .map(|(kind, holder, amount)| json!({ "kind_id": kind, "holder": holder, "amount": amount }))
        .collect();
    Json(json!({ "tokens": tokens, "balances": state.balances }))
}

async fn unlocks(State(s): State<Arc<AppState>>) -> Json<Value> {
    let chain = s.chain.read();
    Json(json!(chain.state().unlocks.values().collect::<Vec<_>>()))
}

async fn actors(State(s): State<Arc<AppState>>) -> Json<Value> {
    let chain = s.chain.read();
    let list: Vec<Value> = chain
        .state()
        .catalog
        .iter()
        .map(|(a, e)| json!({ "address": a, "actor_id": e.actor_id, "roles": e.roles, "enabled": e.enabled }))
        .collect();
    Json(json!(list))
}

fn idempotency_key(headers: &HeaderMap) -> ApiResult<Option<String>> {
    match headers.get(IDEMPOTENCY_HEADER) {
        None => Ok(None),
        Some(v) => {
            let k = v
                .to_str()
                .map_err(|_| ApiError::bad_request("Idempotency-Key must be visible ASCII"))?
                .trim();
            if k.is_empty() || k.len() > 255 {
                return Err(ApiError::bad_request("Idempotency-Key must be 1 to 255 characters"));
            }
            Ok(Some(k.to_string()))
        }
    }
}

/// Runs one operation as the session's key. `extra` is merged into the
/// receipt body. A repeated idempotency key returns the stored body.
async fn submit(
    s: &AppState,
    session: &Session,
    headers: &HeaderMap,
    op: Operation,
    extra: Option<Value>,
) -> ApiResult<Response> {
    let key = idempotency_key(headers)?;
    let _gate = s.writer.lock().await;
    if let Some(k) = &key {
        if let Some(body) = session.replies.lock().get(k) {
            return Ok((StatusCode::OK, [(REPLAYED_HEADER, "true")], Json(body.clone())).into_response());
        }
    }
    s.flush()?;
    let name = op.name();
    let (receipt, block) = execute_and_seal(&mut s.chain.write(), &session.key, op)?;
    if let Err(e) = persist(&s.home, &block) {
        s.unsynced.store(true, Ordering::SeqCst);
        tracing::error!(error = %e, "append failed; the chain file will be rewritten");
    }
    tracing::info!(op = name, actor = %session.actor_id, height = receipt.height, "sealed");
    let mut body = json!(receipt);
    if let (Some(Value::Object(extra)), Value::Object(map)) = (extra, &mut body) {
        map.extend(extra);
    }
    if let Some(k) = key {
        session.replies.lock().insert(k, body.clone());
    }
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegisterReq {
    address: Address,
    actor_id: String,
    #[serde(default)]
    roles: BTreeSet<Role>,
    #[serde(default = "enabled")]
    enabled: bool,
}

fn enabled() -> bool {
    true
}

async fn register_actor(
    State(s): State<Arc<AppState>>,
    Auth(session): Auth,
    headers: HeaderMap,
    Body(r): Body<RegisterReq>,
) -> ApiResult<Response> {
    let op = Operation::RegisterAddress {
        address: r.address,
        actor_id: r.actor_id,
        roles: r.roles,
        enabled: r.enabled,
    };
    submit(&s, &session, &headers, op, None).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ResourceReq {
    #[serde(default)]
    company: Option<String>,
    #[serde(default)]
    producer: Option<Address>,
    kind_id: String,
    #[serde(default)]
    description: String,
    size: u64,
    #[serde(default)]
    unit: String,
}

async fn create_resource(
    State(s): State<Arc<AppState>>,
    Auth(session): Auth,
    headers: HeaderMap,
    Body(r): Body<ResourceReq>,
) -> ApiResult<Response> {
    let producer = match (r.producer, &r.company) {
        (Some(p), _) => p,
        (None, Some(c)) => producer_address(s.chain.read().chain_id(), c),
        (None, None) => return Err(ApiError::bad_request("give `company` or `producer`")),
    };
    let op = Operation::CreateResource {
        producer,
        kind_id: r.kind_id,
        description: r.description,
        size: r.size,
        unit: r.unit,
    };
    submit(&s, &session, &headers, op, None).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EventReq {
    entity: Address,
    event_kind_id: String,
    #[serde(default)]
    values: BTreeMap<String, String>,
}

async fn record_event(
    State(s): State<Arc<AppState>>,
    Auth(session): Auth,
    headers: HeaderMap,
    Body(r): Body<EventReq>,
) -> ApiResult<Response> {
    let op = Operation::RecordEvent {
        entity: r.entity,
        event_kind_id: r.event_kind_id,
        values: r.values,
    };
    submit(&s, &session, &headers, op, None).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SplitReq {
    quantities: Vec<u64>,
}

async fn split(
    State(s): State<Arc<AppState>>,
    Auth(session): Auth,
    Path(addr): Path<String>,
    headers: HeaderMap,
    Body(r): Body<SplitReq>,
) -> ApiResult<Response> {
    let op = Operation::Split {
        product: parse_address(&addr)?,
        quantities: r.quantities,
    };
    submit(&s, &session, &headers, op, None).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MergeReq {
    /// Lots merged with the one in the path.
    with: Vec<Address>,
    quantities: Vec<u64>,
}

async fn merge(
    State(s): State<Arc<AppState>>,
    Auth(session): Auth,
    Path(addr): Path<String>,
    headers: HeaderMap,
    Body(r): Body<MergeReq>,
) -> ApiResult<Response> {
    let mut products = vec![parse_address(&addr)?];
    products.extend(r.with);
    let op = Operation::Merge {
        products,
        quantities: r.quantities,
    };
    submit(&s, &session, &headers, op, None).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TransformReq {
    inputs: Vec<Address>,
    event_kind_id: String,
    outputs: Vec<OutputSpec>,
    #[serde(default)]
    values: BTreeMap<String, String>,
}

async fn transform(
    State(s): State<Arc<AppState>>,
    Auth(session): Auth,
    headers: HeaderMap,
    Body(r): Body<TransformReq>,
) -> ApiResult<Response> {
    let op = Operation::Transform {
        inputs: r.inputs,
        event_kind_id: r.event_kind_id,
        outputs: r.outputs,
        values: r.values,
    };
    submit(&s, &session, &headers, op, None).await
}

/// Multipart fields: `entity`, `file`, optional `locator` and `metadata`
/// (a JSON list of parameter triples).
async fn notarize(
    State(s): State<Arc<AppState>>,
    Auth(session): Auth,
    headers: HeaderMap,
    mut form: Multipart,
) -> ApiResult<Response> {
    let mut entity = None;
    let mut locator = None;
    let mut metadata: Vec<ParamTriple> = Vec::new();
    let mut file: Option<(Vec<u8>, Option<String>)> = None;
    while let Some(field) = form.next_field().await.map_err(|e| ApiError::bad_request(e.body_text()))? {
        let name = field.name().unwrap_or_default().to_string();
        match name.as_str() {
            "file" => {
                let media = field.content_type().map(str::to_string);
                let bytes = field.bytes().await.map_err(|e| ApiError::bad_request(e.body_text()))?;
                file = Some((bytes.to_vec(), media));
            }
            "entity" | "locator" | "metadata" => {
                let text = field.text().await.map_err(|e| ApiError::bad_request(e.body_text()))?;
                match name.as_str() {
                    "entity" => entity = Some(parse_address(text.trim())?),
                    "locator" => locator = Some(text),
                    _ => {
                        metadata = serde_json::from_str(&text)
                            .map_err(|e| ApiError::bad_request(format!("metadata: {e}")))?
                    }
                }
            }
            other => return Err(ApiError::bad_request(format!("unexpected field `{other}`"))),
        }
    }
    let entity = entity.ok_or_else(|| ApiError::bad_request("missing `entity` field"))?;
    let (bytes, media) = file.ok_or_else(|| ApiError::bad_request("missing `file` field"))?;
    let stored = s.docs.put_with(&bytes, media.as_deref())?;
    let op = Operation::Notarize {
        entity,
        digest: stored.content_id,
        locator: locator.unwrap_or_else(|| stored.content_id.to_hex()),
        metadata,
    };
    submit(&s, &session, &headers, op, Some(json!({ "document": stored }))).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AsseverateReq {
    entity: Address,
    record: u32,
}

async fn asseverate(
    State(s): State<Arc<AppState>>,
    Auth(session): Auth,
    headers: HeaderMap,
    Body(r): Body<AsseverateReq>,
) -> ApiResult<Response> {
    let op = Operation::Asseverate {
        entity: r.entity,
        record: r.record,
    };
    submit(&s, &session, &headers, op, None).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UnlockReq {
    event_kind_id: String,
    target: Address,
}

async fn request_unlock(
    State(s): State<Arc<AppState>>,
    Auth(session): Auth,
    headers: HeaderMap,
    Body(r): Body<UnlockReq>,
) -> ApiResult<Response> {
    let op = Operation::RequestUnlock {
        event_kind_id: r.event_kind_id,
        target: r.target,
    };
    submit(&s, &session, &headers, op, None).await
}

async fn approve_unlock(
    State(s): State<Arc<AppState>>,
    Auth(session): Auth,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    let request = id
        .parse()
        .map_err(|_| ApiError::bad_request(format!("invalid request id `{id}`")))?;
    submit(&s, &session, &headers, Operation::ApproveUnlock { request }, None).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PayReq {
    recipient: Address,
    amount: u64,
}

async fn pay(
    State(s): State<Arc<AppState>>,
    Auth(session): Auth,
    headers: HeaderMap,
    Body(r): Body<PayReq>,
) -> ApiResult<Response> {
    let op = Operation::Pay {
        recipient: r.recipient,
        amount: r.amount,
    };
    submit(&s, &session, &headers, op, None).await
}
