//! Criterion benchmarks for the simulation engine and the connectivity measures.
