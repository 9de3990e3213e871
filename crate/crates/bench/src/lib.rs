//! Bench-only crate: see `benches/hot_paths.rs`. The library target exists
//! solely so cargo accepts the package.
