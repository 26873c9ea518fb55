//! Criterion benchmarks for the `dqd-core` hot paths; see `benches/models.rs`.
