//! Criterion benchmarks for the clustering and attention kernels live in `benches/`.
