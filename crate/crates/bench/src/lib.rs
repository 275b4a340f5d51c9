//! Criterion benchmarks for the fitting pipeline; see `benches/`.
