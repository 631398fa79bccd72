use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};

use retsim::service::{encode, LiveSession, ServiceConfig, SessionRegistry};
use retsim::task::TaskConfig;

use crate::CliError;

#[derive(Clone)]
struct AppState {
    config: Arc<ServiceConfig>,
    registry: Arc<SessionRegistry>,
}

/// Binds and serves until the process is stopped. Prints the bound address
/// as one JSON line on stdout once listening.
pub fn serve(bind: &str, port: u16, task: TaskConfig, log_dir: PathBuf) -> Result<(), CliError> {
    std::fs::create_dir_all(&log_dir)?;
    let state = AppState {
        config: Arc::new(ServiceConfig { task, log_dir: Some(log_dir) }),
        registry: Arc::new(SessionRegistry::new()),
    };
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind((bind, port))
            .await
            .map_err(|e| CliError::new("BindFailure", format!("{bind}:{port}: {e}")))?;
        let addr = listener.local_addr()?;
        println!("{}", serde_json::json!({ "listening": addr.to_string() }));
        let app = Router::new()
            .route("/ws", get(upgrade))
            .route("/health", get(|| async { "ok" }))
            .route("/sessions", get(sessions))
            .with_state(state);
        axum::serve(listener, app).await.map_err(CliError::from)
    })
}

async fn sessions(State(state): State<AppState>) -> impl IntoResponse {
    Json(state.registry.entries())
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<AppState>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| connection(socket, state))
}

/// One connection, one logical session context; messages are handled and
/// answered strictly in arrival order.
async fn connection(socket: WebSocket, state: AppState) {
    let (mut tx, mut rx) = socket.split();
    let mut live = LiveSession::new(state.config, state.registry);
    while let Some(Ok(msg)) = rx.next().await {
        let replies = match msg {
            Message::Text(text) => live.handle_text(text.as_str()),
            Message::Binary(bytes) => match std::str::from_utf8(&bytes) {
                Ok(text) => live.handle_text(text),
                Err(_) => live.handle_text(""),
            },
            Message::Close(_) => break,
            _ => continue,
        };
        for reply in replies {
            if tx.send(Message::Text(encode(&reply).into())).await.is_err() {
                live.disconnect();
                return;
            }
        }
    }
    live.disconnect();
}
