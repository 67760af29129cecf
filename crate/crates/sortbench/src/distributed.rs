//! Message-passing merge sort over a rank tree.
//!
//! Rank 0 generates the input and scatters equal chunks to every rank.
//! Each rank sorts its chunk locally (the *subsort*), then the ranks
//! merge along a binary tree: each round, the upper half of the still
//! active ranks send their arrays to a partner in the lower half, which
//! merges. After log2(size) rounds rank 0 holds the whole sorted array.
//! Every round's sender/receiver pairs are a perfect matching, so the
//! whole merge costs exactly `size - 1` messages.

use thiserror::Error;

use crate::pool::{pool_mergesort, PoolError};
use crate::sort::{baseline_sort, generate_array, merge};
use crate::transport::{world_spawn, RankContext, TransportError, WorldConfig};
use crate::Element;

/// Tag used by the tree-merge rounds.
pub const TREE_MERGE_TAG: u32 = 0;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("world size {size} must be a power of two")]
    SizeNotPowerOfTwo { size: usize },
    #[error("array length {len} is not divisible by world size {size}")]
    LengthNotDivisible { len: usize, size: usize },
    #[error("received a chunk of {received} elements, expected {expected}")]
    ChunkLengthMismatch { received: usize, expected: usize },
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Pool(#[from] PoolError),
}

/// Which algorithm each rank applies to its scattered chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsortKind {
    /// The platform sort; yields the plain message-passing merge sort.
    Baseline,
    /// The worker-pool merge sort with this many workers per rank;
    /// yields the hybrid two-level sort.
    Pool { workers: usize },
}

impl SubsortKind {
    fn validate(self) -> Result<(), TreeError> {
        match self {
            SubsortKind::Pool { workers: 0 } => Err(TreeError::Pool(PoolError::ZeroWorkers)),
            _ => Ok(()),
        }
    }
}

/// Sorts one rank's chunk with the selected subsort.
pub fn local_subsort(chunk: &[Element], subsort: SubsortKind) -> Result<Vec<Element>, TreeError> {
    subsort.validate()?;
    match subsort {
        SubsortKind::Baseline => Ok(baseline_sort(chunk)),
        SubsortKind::Pool { workers } => Ok(pool_mergesort(chunk, workers)?),
    }
}

/// A rank's role in one round of the tree merge, determined purely by
/// `(rank, split)` where `split` halves every round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeRole {
    /// `rank < split`: receives from `rank + split` and merges.
    ParentOf { child: usize },
    /// `split <= rank < 2 * split`: sends to `rank - split`, then done.
    ChildOf { parent: usize },
    /// `rank >= 2 * split`: already merged away in an earlier round.
    Inactive,
}

pub fn tree_role(rank: usize, split: usize) -> TreeRole {
    if rank < split {
        TreeRole::ParentOf { child: rank + split }
    } else if rank < 2 * split {
        TreeRole::ChildOf { parent: rank - split }
    } else {
        TreeRole::Inactive
    }
}

/// One active round as seen by one rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeRound {
    pub split: usize,
    pub role: TreeRole,
}

/// What a rank is left holding after the tree merge: rank 0 holds the
/// fully merged array, everyone else holds nothing. `rounds` records the
/// rounds in which this rank actively sent or merged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeMergeOutcome {
    pub merged: Option<Vec<Element>>,
    pub rounds: Vec<TreeRound>,
}

/// Runs the halving merge loop. Every rank must enter with a sorted
/// chunk of the same length; the world size must be a power of two.
pub fn tree_merge(
    ctx: &mut RankContext,
    local: Vec<Element>,
) -> Result<TreeMergeOutcome, TreeError> {
    if !ctx.size().is_power_of_two() {
        return Err(TreeError::SizeNotPowerOfTwo { size: ctx.size() });
    }
    let mut local = local;
    let mut rounds = Vec::new();
    let mut split = ctx.size() / 2;
    while split >= 1 {
        let role = tree_role(ctx.rank(), split);
        match role {
            TreeRole::ChildOf { parent } => {
                ctx.send(&local, parent, TREE_MERGE_TAG)?;
                rounds.push(TreeRound { split, role });
                // Sent away; this rank stays inactive for all later rounds.
                break;
            }
            TreeRole::ParentOf { child } => {
                let received = ctx.recv(child, TREE_MERGE_TAG)?;
                if received.len() != local.len() {
                    return Err(TreeError::ChunkLengthMismatch {
                        received: received.len(),
                        expected: local.len(),
                    });
                }
                local = merge(&local, &received);
                rounds.push(TreeRound { split, role });
            }
            TreeRole::Inactive => {}
        }
        split /= 2;
    }
    Ok(TreeMergeOutcome {
        merged: (ctx.rank() == 0).then_some(local),
        rounds,
    })
}

/// End-to-end message-passing merge sort.
///
/// Rank 0 generates `n` elements from `seed`, scatters them, every rank
/// subsorts its chunk, and the tree merge brings the result back to
/// rank 0. Returns the sorted array. The world size must be a power of
/// two and `n` divisible by it.
pub fn mp_mergesort(
    config: &WorldConfig,
    n: usize,
    seed: u64,
    subsort: SubsortKind,
) -> Result<Vec<Element>, TreeError> {
    if !config.size.is_power_of_two() {
        return Err(TreeError::SizeNotPowerOfTwo { size: config.size });
    }
    if !n.is_multiple_of(config.size) {
        return Err(TreeError::LengthNotDivisible {
            len: n,
            size: config.size,
        });
    }
    subsort.validate()?;

    let results = world_spawn(config, move |ctx| {
        rank_entry(ctx, n, seed, subsort).map_err(|err| match err {
            TreeError::Transport(transport) => transport,
            other => TransportError::Other(other.to_string()),
        })
    })?;

    Ok(results
        .into_iter()
        .next()
        .flatten()
        .expect("rank 0 holds the merged array"))
}

fn rank_entry(
    ctx: &mut RankContext,
    n: usize,
    seed: u64,
    subsort: SubsortKind,
) -> Result<Option<Vec<Element>>, TreeError> {
    let root_data = (ctx.rank() == 0).then(|| generate_array(n, seed));
    let chunk = ctx.scatter(root_data.as_deref(), 0)?;
    let sorted = local_subsort(&chunk, subsort)?;
    Ok(tree_merge(ctx, sorted)?.merged)
}
