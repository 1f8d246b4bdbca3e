//! Plumbing for the `honor` binary: run configuration, manifests and plots.

pub mod config;
pub mod manifest;
pub mod plots;
