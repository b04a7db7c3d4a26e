//! Benchmarks for `srcox`; see `benches/`.
