//! File formats, HTTP backend, threaded runners and stage orchestration
//! for the `cultalign` command.

pub mod config;
pub mod corpus;
pub mod http;
pub mod io;
pub mod manifest;
pub mod runner;
pub mod stages;
