//! The quiz hub.
//!
//! One process, one port: `GET /ws` bridges floor and screen clients, the
//! `/api` routes serve the teacher tools, and an optional assets directory
//! is served at `/`. Teachers and the question bank persist to a single
//! JSON file.

mod api;
pub mod auth;
pub mod session;
pub mod store;
mod ws;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::http::StatusCode;
use axum::Json;
use serde_json::json;
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::sync::Mutex as AsyncMutex;
use tokio::task::JoinHandle;
use tower_http::services::ServeDir;
use tracing::info;

pub use auth::{PasswordPolicy, DEFAULT_PASSWORD_ROUNDS};
pub use session::{HubClock, SessionStatus};
pub use store::{load_store, persist_store, Store, StoreError};

pub const DEFAULT_LISTEN: &str = "0.0.0.0:8080";
pub const DEFAULT_HEARTBEAT: Duration = Duration::from_secs(15);
pub const DEFAULT_TOKEN_TTL: Duration = Duration::from_secs(12 * 60 * 60);

#[derive(Clone, Debug)]
pub struct HubConfig {
    pub listen: SocketAddr,
    pub store_path: PathBuf,
    pub assets_dir: Option<PathBuf>,
    pub token_ttl: Duration,
    pub password_rounds: u32,
    pub heartbeat: Duration,
}

impl HubConfig {
    pub fn new(listen: SocketAddr, store_path: impl Into<PathBuf>) -> Self {
        Self {
            listen,
            store_path: store_path.into(),
            assets_dir: None,
            token_ttl: DEFAULT_TOKEN_TTL,
            password_rounds: DEFAULT_PASSWORD_ROUNDS,
            heartbeat: DEFAULT_HEARTBEAT,
        }
    }
}

#[derive(Debug, Error)]
pub enum HubError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Serve(#[from] std::io::Error),
}

/// A hub accepting connections in the background.
pub struct RunningHub {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    task: JoinHandle<Result<(), HubError>>,
}

impl RunningHub {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn http_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn ws_url(&self) -> String {
        format!("ws://{}/ws", self.addr)
    }

    /// Runs until the server stops on its own.
    pub async fn wait(self) -> Result<(), HubError> {
        let _keep = self.shutdown;
        self.task.await.unwrap_or(Ok(()))
    }

    /// Stops accepting connections and waits for the server to wind down.
    pub async fn shutdown(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        let _ = tokio::time::timeout(Duration::from_secs(5), &mut self.task).await;
        self.task.abort();
    }

    /// Tears the server down immediately, as a crash would.
    pub fn kill(self) {
        self.task.abort();
    }
}

/// Loads the store, binds the listener and starts serving.
///
/// Fails without serving anything if the store is unreadable or corrupt.
pub async fn start(config: HubConfig) -> Result<RunningHub, HubError> {
    let store = load_store(&config.store_path)?;
    info!(
        event = "store_loaded",
        path = %config.store_path.display(),
        teachers = store.teachers.len(),
        questions = store.bank.len(),
        revision = store.bank.revision()
    );
    let listener = TcpListener::bind(config.listen)
        .await
        .map_err(|source| HubError::Bind {
            addr: config.listen,
            source,
        })?;
    let addr = listener.local_addr()?;

    let clock = HubClock::new();
    let state = Arc::new(api::AppState {
        store: AsyncMutex::new(store),
        store_path: config.store_path.clone(),
        tokens: Mutex::new(auth::TokenRegistry::new(config.token_ttl.as_millis() as u64)),
        passwords: PasswordPolicy {
            rounds: config.password_rounds,
        },
        session: session::SessionHandle::spawn(clock),
        clock,
        heartbeat: config.heartbeat,
    });

    let mut app = api::router(state);
    app = match &config.assets_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.fallback(|| async {
            (
                StatusCode::NOT_FOUND,
                Json(json!({ "error": "not_found", "detail": "no such route" })),
            )
        }),
    };

    let (shutdown_tx, shutdown_rx) = oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = shutdown_rx.await;
            })
            .await?;
        Ok(())
    });
    info!(event = "listening", addr = %addr);
    Ok(RunningHub {
        addr,
        shutdown: Some(shutdown_tx),
        task,
    })
}
