//! Command-line interface and HTTP API over a node home directory.

pub mod api;
pub mod cli;
pub mod keystore;
pub mod node;
