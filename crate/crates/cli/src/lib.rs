//! Library side of the `evcon` binary: configuration, stage runners,
//! pipeline orchestration and the synthetic fixture generator. The binary
//! in `main.rs` is a thin argument-parsing layer over these.

pub mod config;
pub mod fixture;
pub mod pipeline;
pub mod stages;
