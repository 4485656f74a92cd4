//! Benchmark-only crate; see `benches/kljn.rs`.
