//! A workbench for comparing merge-sort parallelization strategies.
//!
//! The crate provides four sorting families over 64-bit signed integers
//! (the kernels themselves are generic over any `Ord` element):
//!
//! - [`sort`] — sequential kernels: stable two-way merge, classic recursive
//!   merge sort, a cutoff hybrid that falls back to the platform sort for
//!   small subarrays, and deterministic input generation.
//! - [`pool`] — shared-memory worker-pool merge sort: chunk the input, sort
//!   chunks on a bounded pool of worker threads, merge the sorted chunks.
//! - [`transport`] — a rank-addressed message-passing layer with
//!   point-to-point send/recv and scatter/gather/broadcast collectives,
//!   over an in-process backend and a TCP socket backend.
//! - [`distributed`] — message-passing merge sort: scatter from rank 0,
//!   per-rank subsort, then a halving binary-tree merge that leaves the
//!   fully sorted array at rank 0.
//!
//! [`bench`] holds the measurement harness: a named stopwatch,
//! speedup/efficiency arithmetic, benchmark records, and CSV reports.

pub mod bench;
pub mod distributed;
pub mod pool;
pub mod sort;
pub mod transport;

/// The element type carried by the benchmark workloads and the transport.
pub type Element = i64;
