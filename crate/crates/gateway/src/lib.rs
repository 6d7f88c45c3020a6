//! Private gateway node serving the ledger indexation API over HTTP.
//!
//! Records are kept in memory and persisted to an append-only log in the
//! store directory. An attach is answered only after its log line is on
//! disk, so every acknowledged message id survives a crash. One gateway
//! at a time may own a store directory.
//!
//! ```no_run
//! use ott_gateway::{serve, GatewayConfig};
//!
//! let handle = serve(GatewayConfig::new("127.0.0.1:0", "/var/lib/ott")).unwrap();
//! println!("listening on {}", handle.local_addr());
//! handle.shutdown().unwrap();
//! ```

mod server;
pub mod store;

use std::net::{SocketAddr, TcpListener};
use std::path::PathBuf;
use std::sync::Arc;
use std::thread::JoinHandle;

use ott_core::ledger::{LatencyProfile, LatencySampler, LedgerError, MAX_PAYLOAD};
use ott_core::message::MAX_CREATE_LEN;
use parking_lot::{Mutex, RwLock};
use thiserror::Error;
use tokio::sync::oneshot;

pub use store::{LogStore, StoreError, LOCK_FILE, LOG_FILE};

/// Environment variable naming the default store directory.
pub const STORE_ENV: &str = "OTT_GATEWAY_STORE";

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("invalid gateway configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Latency(#[from] LedgerError),
    #[error("gateway runtime: {0}")]
    Runtime(std::io::Error),
}

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    /// `host:port`; port 0 picks a free one.
    pub listen: String,
    pub store_dir: PathBuf,
    pub latency: LatencyProfile,
    pub latency_seed: Option<u64>,
    pub max_payload: usize,
}

impl GatewayConfig {
    pub fn new(listen: impl Into<String>, store_dir: impl Into<PathBuf>) -> Self {
        Self {
            listen: listen.into(),
            store_dir: store_dir.into(),
            latency: LatencyProfile::NONE,
            latency_seed: None,
            max_payload: MAX_PAYLOAD,
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.max_payload < MAX_CREATE_LEN {
            return Err(GatewayError::InvalidConfig(format!(
                "max payload {} is below the largest create message ({MAX_CREATE_LEN} bytes)",
                self.max_payload
            )));
        }
        Ok(())
    }
}

/// A running gateway. Dropping it shuts the gateway down.
pub struct GatewayHandle {
    addr: SocketAddr,
    shared: Arc<server::Shared>,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<std::io::Result<()>>>,
}

impl GatewayHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// `http://<addr>`
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn record_count(&self) -> usize {
        self.shared.book.read().len()
    }

    /// Stops accepting connections, drains in-flight requests, syncs the log
    /// and releases the store lock.
    pub fn shutdown(mut self) -> Result<(), GatewayError> {
        self.stop_and_join()
    }

    fn stop_and_join(&mut self) -> Result<(), GatewayError> {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        if let Some(thread) = self.thread.take() {
            thread
                .join()
                .map_err(|_| {
                    GatewayError::Runtime(std::io::Error::other("server thread panicked"))
                })?
                .map_err(GatewayError::Runtime)?;
            self.shared.store.lock().flush()?;
        }
        Ok(())
    }
}

impl Drop for GatewayHandle {
    fn drop(&mut self) {
        if let Err(e) = self.stop_and_join() {
            log::error!("gateway shutdown: {e}");
        }
    }
}

/// Opens the store, binds the listener and starts serving on a background
/// runtime. Errors in any of those steps are returned before this returns.
pub fn serve(config: GatewayConfig) -> Result<GatewayHandle, GatewayError> {
    config.validate()?;
    let sampler = LatencySampler::new(config.latency, config.latency_seed)?;
    let (store, book) = LogStore::open(&config.store_dir)?;
    log::info!(
        "store {} replayed {} records",
        config.store_dir.display(),
        book.len()
    );

    let bind_err = |source| GatewayError::Bind {
        addr: config.listen.clone(),
        source,
    };
    let listener = TcpListener::bind(&config.listen).map_err(bind_err)?;
    listener.set_nonblocking(true).map_err(bind_err)?;
    let addr = listener.local_addr().map_err(bind_err)?;

    let shared = Arc::new(server::Shared {
        book: RwLock::new(book),
        store: Mutex::new(store),
        sampler,
        max_payload: config.max_payload,
    });
    let app = server::router(Arc::clone(&shared));
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .thread_name("ott-gateway")
        .build()
        .map_err(GatewayError::Runtime)?;

    let (stop, stopped) = oneshot::channel::<()>();
    let thread = std::thread::Builder::new()
        .name("ott-gateway".into())
        .spawn(move || {
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener)?;
                axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = stopped.await;
                    })
                    .await
            })
        })
        .map_err(GatewayError::Runtime)?;

    Ok(GatewayHandle {
        addr,
        shared,
        stop: Some(stop),
        thread: Some(thread),
    })
}
