//! Benchmarks for the mcvd pipeline live under `benches/`.
