//! Criterion benchmarks for assembly and the dense least-squares solve; see
//! `benches/solver.rs`.
