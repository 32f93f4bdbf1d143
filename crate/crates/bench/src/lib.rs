//! Benchmark-only crate; see `benches/sim_bench.rs`.
