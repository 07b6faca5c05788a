//! Command-line front end and HTTP experiment service.

pub mod commands;
pub mod service;
pub mod store;
