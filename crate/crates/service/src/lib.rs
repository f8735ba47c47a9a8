//! Local HTTP service for interactive fault-localization sessions.
//!
//! Sessions live in a data directory as replayable logs (see [`store`]);
//! the routes are listed in [`api`].

pub mod api;
pub mod error;
pub mod store;
pub mod wire;

use std::net::SocketAddr;
use std::sync::Arc;

pub use api::router;
pub use error::ServiceError;
pub use store::SessionStore;

/// Serves `store` on `addr` until Ctrl-C. `on_bound` receives the actual
/// address, which differs from `addr` when port 0 was requested.
pub async fn serve(
    store: Arc<SessionStore>,
    addr: SocketAddr,
    on_bound: impl FnOnce(SocketAddr),
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
