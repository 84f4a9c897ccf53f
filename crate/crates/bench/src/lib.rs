//! Benchmark-only crate; see `benches/engine.rs`.
//!
//! Run with `cargo bench -p fwdcheck-bench`.
