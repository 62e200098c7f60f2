//! The session service behind the browser dashboard: stores sessions for
//! captured errors, generates explanations on first visit, and answers
//! follow-up questions over a small JSON API.

pub mod api;
pub mod config;
pub mod service;
pub mod session;
pub mod store;

pub use api::router;
pub use config::ServerConfig;
pub use service::{Clock, ManualClock, ServiceConfig, ServiceError, SessionService, SystemClock};
pub use session::{OveruseStatus, Session, SessionView, TurnView};
pub use store::{Access, Store, StoreError};
