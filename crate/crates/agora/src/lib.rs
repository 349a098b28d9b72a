//! Collection, storage, graph files, sharing and the command-line front end.

pub mod cli;
pub mod config;
pub mod fixture;
pub mod graph_io;
pub mod ingest;
pub mod share;
pub mod store;
