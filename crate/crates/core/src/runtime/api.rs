//! Operator HTTP/WebSocket API.
//!
//! Every JSON body carries `"v": 1`. Errors are `{"v":1,"error":"..."}`
//! plus endpoint-specific fields.
//!
//! | Method | Path        | Body                                   | Reply                          |
//! |--------|-------------|----------------------------------------|--------------------------------|
//! | GET    | `/state`    |                                        | latest telemetry sample        |
//! | GET    | `/ivcurve`  |                                        | I-V/P-V curve at current env   |
//! | POST   | `/load`     | `{"p_setpoint": W, "power_factor": pf}`| 200, or 422 with `range`       |
//! | POST   | `/breaker`  | `{"action": "open"\|"close"\|"reset"}` | 200, or 409 on illegal moves   |
//! | POST   | `/fault`    | `{"action": "inject"\|"clear"}`        | 200                            |
//! | GET    | `/counters` |                                        | gateway ingest counters        |
//! | WS     | `/stream`   |                                        | one sample per emitted step    |

use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::rejection::JsonRejection;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::{broadcast, watch};

use super::{RuntimeError, TelemetryHub};
use crate::control::{BreakerCommand, FaultCommand};
use crate::plant::{CommandEnvelope, CommandError, LoadCommand, LoadError, PlantCommand, PlantLink};
use crate::pv::{array_current, iv_curve, mpp_bruteforce, EnvInput, MaxPowerPoint, PvModuleParams};
use crate::skt::IngestCounters;

pub const API_VERSION: u32 = 1;
/// `/ivcurve` is recomputed at most this often.
pub const IVCURVE_MIN_INTERVAL: Duration = Duration::from_millis(200);
const COMMAND_TIMEOUT: Duration = Duration::from_secs(2);

/// Payload wrapper adding the version field.
#[derive(Debug, Serialize)]
pub struct Versioned<T> {
    pub v: u32,
    #[serde(flatten)]
    pub body: T,
}

pub fn versioned<T>(body: T) -> Versioned<T> {
    Versioned { v: API_VERSION, body }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorBreakerAction {
    Open,
    Close,
    Reset,
}

impl From<OperatorBreakerAction> for BreakerCommand {
    fn from(a: OperatorBreakerAction) -> Self {
        match a {
            OperatorBreakerAction::Open => BreakerCommand::Open,
            OperatorBreakerAction::Close => BreakerCommand::Close,
            OperatorBreakerAction::Reset => BreakerCommand::Reset,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadRequest {
    pub p_setpoint: f64,
    #[serde(default = "unity")]
    pub power_factor: f64,
}

fn unity() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BreakerRequest {
    pub action: OperatorBreakerAction,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultRequest {
    pub action: FaultCommand,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub v: f64,
    pub i: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IvCurveBody {
    pub t_sim: f64,
    pub insolation: f64,
    pub temperature: f64,
    pub points: Vec<CurvePoint>,
    pub mpp: MaxPowerPoint,
    /// Present operating point of the array.
    pub operating_point: CurvePoint,
}

/// JSON error reply.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, body: json!({ "v": API_VERSION, "error": message.into() }) }
    }

    fn with(mut self, key: &str, value: Value) -> Self {
        self.body[key] = value;
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, r.body_text())
    }
}

/// Shared by all handlers. Reads come from the telemetry hub; writes go
/// through the plant command queue.
pub struct ApiState {
    hub: TelemetryHub,
    commands: Option<PlantLink>,
    counters: Arc<IngestCounters>,
    params: PvModuleParams,
    ivcurve_points: usize,
    load_range: (f64, f64),
    iv_cache: Mutex<Option<(Instant, Arc<IvCurveBody>)>>,
    shutdown: watch::Sender<bool>,
}

impl ApiState {
    /// `commands` is `None` for runs that do not accept operator commands.
    pub fn new(
        hub: TelemetryHub,
        commands: Option<PlantLink>,
        counters: Arc<IngestCounters>,
        params: PvModuleParams,
        ivcurve_points: usize,
        load_range: (f64, f64),
    ) -> Self {
        Self {
            hub,
            commands,
            counters,
            params,
            ivcurve_points,
            load_range,
            iv_cache: Mutex::new(None),
            shutdown: watch::channel(false).0,
        }
    }

    fn range_json(&self) -> Value {
        json!([self.load_range.0, self.load_range.1])
    }

    async fn submit(&self, command: PlantCommand) -> Result<(), ApiError> {
        let link = self
            .commands
            .as_ref()
            .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "commands are rejected during OFFLINE runs"))?;
        let (envelope, reply) = CommandEnvelope::with_reply(command);
        if !link.send_command(envelope) {
            return Err(ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "plant is not running"));
        }
        match tokio::time::timeout(COMMAND_TIMEOUT, reply).await {
            Ok(Ok(Ok(()))) => Ok(()),
            Ok(Ok(Err(e))) => Err(self.command_error(e)),
            Ok(Err(_)) => Err(ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "plant stopped before applying the command")),
            Err(_) => Err(ApiError::new(StatusCode::GATEWAY_TIMEOUT, "plant did not acknowledge the command")),
        }
    }

    fn command_error(&self, e: CommandError) -> ApiError {
        match e {
            CommandError::Load(le) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, le.to_string()).with("range", self.range_json())
            }
            CommandError::Breaker(ce) => ApiError::new(StatusCode::CONFLICT, ce.to_string()),
            CommandError::Rejected(msg) => ApiError::new(StatusCode::CONFLICT, msg),
        }
    }

    fn ivcurve(&self) -> Result<Arc<IvCurveBody>, ApiError> {
        let now = Instant::now();
        let mut cache = self.iv_cache.lock().expect("iv cache lock");
        if let Some((at, body)) = cache.as_ref() {
            if now.duration_since(*at) < IVCURVE_MIN_INTERVAL {
                return Ok(body.clone());
            }
        }
        let sample = self.hub.latest().ok_or_else(no_sample)?;
        let env = EnvInput::new(sample.insolation, sample.temperature);
        let internal = |e: crate::pv::PvError| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string());
        let curve = iv_curve(&env, &self.params, self.ivcurve_points).map_err(internal)?;
        let mpp = mpp_bruteforce(&env, &self.params).map_err(internal)?;
        let op_i = array_current(sample.pv_v, &env, &self.params).unwrap_or(sample.pv_i).max(0.0);
        let body = Arc::new(IvCurveBody {
            t_sim: sample.t_sim,
            insolation: env.insolation,
            temperature: env.temperature,
            points: curve.points.iter().map(|&(v, i)| CurvePoint { v, i, p: v * i }).collect(),
            mpp,
            operating_point: CurvePoint { v: sample.pv_v, i: op_i, p: sample.pv_v * op_i },
        });
        *cache = Some((now, body.clone()));
        Ok(body)
    }
}

fn no_sample() -> ApiError {
    ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "no telemetry published yet")
}

pub fn router(state: Arc<ApiState>) -> Router {
    Router::new()
        .route("/state", get(get_state))
        .route("/ivcurve", get(get_ivcurve))
        .route("/load", post(post_load))
        .route("/breaker", post(post_breaker))
        .route("/fault", post(post_fault))
        .route("/counters", get(get_counters))
        .route("/stream", get(stream))
        .with_state(state)
}

async fn get_state(State(s): State<Arc<ApiState>>) -> Result<Json<Value>, ApiError> {
    let sample = s.hub.latest().ok_or_else(no_sample)?;
    Ok(Json(serde_json::to_value(versioned(sample)).expect("sample serializes")))
}

async fn get_ivcurve(State(s): State<Arc<ApiState>>) -> Result<Json<Value>, ApiError> {
    let body = s.ivcurve()?;
    Ok(Json(serde_json::to_value(versioned(&*body)).expect("curve serializes")))
}

async fn get_counters(State(s): State<Arc<ApiState>>) -> Json<Value> {
    Json(serde_json::to_value(versioned(s.counters.snapshot(Instant::now()))).expect("counters serialize"))
}

async fn post_load(
    State(s): State<Arc<ApiState>>,
    body: Result<Json<LoadRequest>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let Json(req) = body?;
    let cmd = LoadCommand::new(req.p_setpoint, req.power_factor, s.load_range).map_err(|e| {
        let err = ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string());
        match e {
            LoadError::OutOfRange { .. } => err.with("range", s.range_json()),
            LoadError::PowerFactor(_) => err,
        }
    })?;
    s.submit(PlantCommand::SetLoad(cmd)).await?;
    Ok(Json(json!({ "v": API_VERSION, "accepted": true, "p_setpoint": cmd.p_setpoint, "power_factor": cmd.power_factor })))
}

async fn post_breaker(
    State(s): State<Arc<ApiState>>,
    body: Result<Json<BreakerRequest>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let Json(req) = body?;
    s.submit(PlantCommand::Breaker { action: req.action.into() }).await?;
    Ok(Json(json!({ "v": API_VERSION, "accepted": true, "action": req.action })))
}

async fn post_fault(
    State(s): State<Arc<ApiState>>,
    body: Result<Json<FaultRequest>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let Json(req) = body?;
    s.submit(PlantCommand::Fault { action: req.action }).await?;
    Ok(Json(json!({ "v": API_VERSION, "accepted": true, "action": req.action })))
}

async fn stream(ws: WebSocketUpgrade, State(s): State<Arc<ApiState>>) -> Response {
    let rx = s.hub.subscribe();
    let stop = s.shutdown.subscribe();
    ws.on_upgrade(move |socket| pump(socket, rx, stop))
}

async fn pump(
    mut socket: WebSocket,
    mut rx: broadcast::Receiver<crate::telemetry::TelemetrySample>,
    mut stop: watch::Receiver<bool>,
) {
    loop {
        tokio::select! {
            sample = rx.recv() => match sample {
                Ok(sample) => {
                    let text = serde_json::to_string(&versioned(sample)).expect("sample serializes");
                    if socket.send(Message::Text(text.into())).await.is_err() {
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(n)) => {
                    tracing::debug!(skipped = n, "stream subscriber lagging");
                }
                Err(broadcast::error::RecvError::Closed) => break,
            },
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => {}
            },
            _ = stop.changed() => break,
        }
    }
    let _ = socket.send(Message::Close(None)).await;
}

/// Running operator API.
pub struct ApiHandle {
    local_addr: SocketAddr,
    state: Arc<ApiState>,
    task: tokio::task::JoinHandle<()>,
}

impl ApiHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    pub async fn shutdown(self) {
        let _ = self.state.shutdown.send(true);
        let _ = self.task.await;
    }
}

/// Binds `bind` and serves the operator API on the current runtime.
pub async fn serve_operator_api(bind: SocketAddr, state: ApiState) -> Result<ApiHandle, RuntimeError> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    let local_addr = listener.local_addr()?;
    let state = Arc::new(state);
    let app = router(state.clone());
    let mut stop = state.shutdown.subscribe();
    let task = tokio::spawn(async move {
        let shutdown = async move {
            let _ = stop.changed().await;
        };
        if let Err(e) = axum::serve(listener, app).with_graceful_shutdown(shutdown).await {
            tracing::error!(error = %e, "operator API stopped");
        }
    });
    tracing::info!(%local_addr, "operator API listening");
    Ok(ApiHandle { local_addr, state, task })
}
