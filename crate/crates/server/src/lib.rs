//! HTTP API over a calibrated model.
//!
//! | Method | Path | |
//! |---|---|---|
//! | GET | `/api/registry` | countries, products, processes, regions |
//! | POST | `/api/simulate` | relative losses for a shock |
//! | GET | `/api/exposure?country=&product=` | shocks ranked by the loss they cause in one cell |
//! | GET | `/api/sweep/loss?shock_country=&shock_product=` | losses of every cell for one shock |
//! | GET | `/api/metrics/layers` | trade network metrics per product |
//! | GET | `/api/decompose?shock_country=&input_product=` | cross- and within-layer losses |
//!
//! Errors carry `{code, message, detail}`. Floating-point values are
//! written with nine significant digits.

mod error;
mod num;
mod routes;
mod session;

use std::net::SocketAddr;
use std::sync::Arc;

pub use error::ApiError;
pub use num::Sig9;
pub use routes::router;
pub use session::{Limits, Session};

/// Shared handler state; `None` until a model is loaded.
#[derive(Debug, Clone, Default)]
pub struct AppState {
    pub session: Option<Arc<Session>>,
}

impl AppState {
    pub fn new(session: Session) -> Self {
        AppState {
            session: Some(Arc::new(session)),
        }
    }

    pub fn empty() -> Self {
        AppState::default()
    }
}

/// Serves the API until the process is stopped.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}
