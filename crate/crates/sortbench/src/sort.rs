//! Sequential sorting kernels and deterministic input generation.
//!
//! All sorts here are pure: they take a slice and return a freshly
//! allocated sorted vector, never mutating their input. That keeps them
//! trivially safe to call from worker threads and rank threads.

use crate::Element;

/// Recursion cutoff below which [`mergesort_cutoff`] hands a subarray to
/// [`baseline_sort`] instead of splitting further.
///
/// Must be at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CutoffThreshold(usize);

impl CutoffThreshold {
    /// Creates a threshold. Returns `None` for 0.
    pub fn new(value: usize) -> Option<Self> {
        if value >= 1 {
            Some(CutoffThreshold(value))
        } else {
            None
        }
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl Default for CutoffThreshold {
    /// 32 elements — a conventional small-array cutoff.
    fn default() -> Self {
        CutoffThreshold(32)
    }
}

/// Merges two sorted runs into one sorted vector.
///
/// Stable: on equal keys the element from `left` comes first. Inputs must
/// each be sorted non-decreasing; empty inputs are fine.
pub fn merge<T: Ord + Clone>(left: &[T], right: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(left.len() + right.len());
    let mut l = 0;
    let mut r = 0;
    while l < left.len() && r < right.len() {
        // `<` (not `<=`) so ties are taken from the left run.
        if right[r] < left[l] {
            out.push(right[r].clone());
            r += 1;
        } else {
            out.push(left[l].clone());
            l += 1;
        }
    }
    out.extend_from_slice(&left[l..]);
    out.extend_from_slice(&right[r..]);
    out
}

/// Classic recursive merge sort: split at `len / 2`, sort both halves,
/// merge. Returns a sorted copy.
pub fn mergesort_classic<T: Ord + Clone>(values: &[T]) -> Vec<T> {
    if values.len() < 2 {
        return values.to_vec();
    }
    let mid = values.len() / 2;
    let left = mergesort_classic(&values[..mid]);
    let right = mergesort_classic(&values[mid..]);
    merge(&left, &right)
}

/// Merge sort that stops recursing once a subarray is shorter than
/// `threshold` and sorts it with [`baseline_sort`] instead.
///
/// Arrays shorter than two elements are returned as-is regardless of the
/// threshold; recursing on them would never shrink the right half.
pub fn mergesort_cutoff<T: Ord + Clone>(values: &[T], threshold: CutoffThreshold) -> Vec<T> {
    let n = values.len();
    if n < 2 || n < threshold.get() {
        return baseline_sort(values);
    }
    let mid = n / 2;
    let left = mergesort_cutoff(&values[..mid], threshold);
    let right = mergesort_cutoff(&values[mid..], threshold);
    merge(&left, &right)
}

/// The platform's native sort (Rust's stable driftsort) on a copy of the
/// input. Serves as the correctness oracle for every other sort here and
/// as the fast chunk sort inside the pool algorithm.
pub fn baseline_sort<T: Ord + Clone>(values: &[T]) -> Vec<T> {
    let mut out = values.to_vec();
    out.sort();
    out
}

/// True iff `values` is non-decreasing. Empty and singleton slices count
/// as sorted.
pub fn is_sorted<T: Ord>(values: &[T]) -> bool {
    values.windows(2).all(|w| w[0] <= w[1])
}

/// SplitMix64 — the 64-bit generator from Steele, Lea & Flood's
/// "Fast Splittable Pseudorandom Number Generators", also used as the
/// seeding generator of the xoshiro family. Small, fast, and stable
/// across platforms, which is what reproducible benchmark inputs need.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw from `[0, bound)` by rejection sampling, so every
    /// value is equally likely even when `bound` does not divide 2^64.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound >= 1, "bound must be positive");
        let zone = (u64::MAX / bound) * bound;
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % bound;
            }
        }
    }
}

/// Generates `n` elements drawn uniformly from `[0, n)`, seeded
/// deterministically: the same `(n, seed)` always yields the same array.
///
/// `n = 0` gives an empty array; `n = 1` gives `[0]`, the only value in
/// range.
pub fn generate_array(n: usize, seed: u64) -> Vec<Element> {
    if n == 0 {
        return Vec::new();
    }
    let mut rng = SplitMix64::new(seed);
    (0..n).map(|_| rng.next_below(n as u64) as Element).collect()
}
