//! Benchmarks for the stccpm simulation kernels; see `benches/`.
