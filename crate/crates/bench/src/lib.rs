//! Criterion benchmarks for `fireray-core`; see `benches/`.
