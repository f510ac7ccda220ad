//! HTTP service and command-line front end for the SQL hint engine.

pub mod cli;
pub mod config;
pub mod engine;
pub mod http;

pub use config::{final_score, Config, PenaltyTable};
pub use engine::{ApiError, Engine};
