//! Command-line front end and HTTP service for graphlens.

pub mod cli;
pub mod dto;
pub mod server;
