//! HTTP API and command-line front end over `manuscriptor-core`.

pub mod cli;
pub mod error;
pub mod routes;
pub mod state;

pub use error::{ApiError, ErrorCode};
pub use routes::router;
pub use state::AppState;
