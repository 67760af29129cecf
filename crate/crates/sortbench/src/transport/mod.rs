//! Rank-addressed message passing.
//!
//! A *world* is a set of `size` ranks spawned together, each running the
//! same entry function on its own thread with exclusive ownership of a
//! [`RankContext`]. Ranks exchange arrays through blocking [`send`] and
//! [`recv`][RankContext::recv] plus three collectives (scatter, gather,
//! broadcast) built on top of them, with rank 0 as the conventional
//! root.
//!
//! Two interchangeable backends exist: an in-process backend where
//! delivery is a queue push, and a TCP socket backend (see
//! [`socket`](self)) that moves every envelope through the wire format
//! of [`wire`]. Any program that runs on one backend runs identically on
//! the other.
//!
//! Sends are eager: they complete once the message is buffered, so an
//! unmatched send never blocks. An unmatched receive, on the other hand,
//! would block forever; every world therefore carries a wall-clock
//! deadline (default 30 s) after which blocked operations fail and the
//! world aborts instead of hanging.
//!
//! [`send`]: RankContext::send

mod mailbox;
mod socket;
pub mod wire;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::mpsc;
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::Element;
use mailbox::Mailbox;
use socket::{SocketEndpoint, SocketWorld};
use wire::Envelope;

pub use wire::{decode_envelope, encode_envelope, ElementType};

/// Tags at or above this value are reserved for the collectives.
pub const RESERVED_TAG_BASE: u32 = 0xFFFF_FF00;
const SCATTER_TAG: u32 = RESERVED_TAG_BASE + 1;
const GATHER_TAG: u32 = RESERVED_TAG_BASE + 2;
const BCAST_TAG: u32 = RESERVED_TAG_BASE + 3;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("world must contain at least one rank")]
    EmptyWorld,
    #[error("rank {rank} is out of range for a world of size {size}")]
    InvalidRank { rank: usize, size: usize },
    #[error("rank {rank} attempted to message itself")]
    SelfMessage { rank: usize },
    #[error("tag {tag:#010x} is reserved for collectives")]
    ReservedTag { tag: u32 },
    #[error("rank {rank} timed out waiting for a message from rank {src} with tag {tag}")]
    Timeout { rank: usize, src: usize, tag: u32 },
    #[error("world deadline exceeded during socket I/O")]
    DeadlineExceeded,
    #[error("world was shut down while an operation was in progress")]
    WorldShutdown,
    #[error("rank {rank} failed: {source}")]
    RankFailed {
        rank: usize,
        #[source]
        source: Box<TransportError>,
    },
    #[error("rank {rank} panicked: {message}")]
    RankPanicked { rank: usize, message: String },
    #[error("scatter buffer of {len} elements does not divide evenly over {size} ranks")]
    NotDivisible { len: usize, size: usize },
    #[error("collective root {root} supplied no buffer")]
    MissingRootBuffer { root: usize },
    #[error("non-root rank {rank} must not supply a collective buffer")]
    UnexpectedBuffer { rank: usize },
    #[error("gather at root got {actual} elements from rank {rank}, expected {expected}")]
    GatherLengthMismatch {
        rank: usize,
        expected: usize,
        actual: usize,
    },
    #[error("bad frame magic {found:#010x}")]
    BadMagic { found: u32 },
    #[error("unsupported wire version {found}")]
    BadVersion { found: u8 },
    #[error("unsupported element type tag {found}")]
    BadElementType { found: u8 },
    #[error("frame payload of {length} elements exceeds the transport limit")]
    PayloadTooLarge { length: u64 },
    #[error("frame ended before the declared payload length")]
    TruncatedFrame,
    #[error("transport I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

/// Which delivery mechanism a world uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    InProcess,
    Socket,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::InProcess => "in-process",
            Backend::Socket => "socket",
        }
    }
}

impl std::str::FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "in-process" | "inprocess" | "in_process" => Ok(Backend::InProcess),
            "socket" => Ok(Backend::Socket),
            other => Err(format!("unknown backend `{other}`")),
        }
    }
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How to spawn a world: rank count, backend, wall-clock deadline, and
/// (for the socket backend) the rendezvous port, where 0 or `None`
/// picks an ephemeral port.
#[derive(Debug, Clone)]
pub struct WorldConfig {
    pub size: usize,
    pub backend: Backend,
    pub timeout: Duration,
    pub port: Option<u16>,
}

impl WorldConfig {
    pub fn new(size: usize, backend: Backend) -> Self {
        WorldConfig {
            size,
            backend,
            timeout: DEFAULT_TIMEOUT,
            port: None,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_port(mut self, port: u16) -> Self {
        self.port = Some(port);
        self
    }
}

enum Endpoint {
    InProc { mailboxes: Arc<Vec<Arc<Mailbox>>> },
    Socket(SocketEndpoint),
}

/// A rank's identity and its connection to the world.
///
/// Exactly one context exists per rank; the entry function owns it
/// exclusively, so all operations take `&mut self` and contexts never
/// cross threads.
pub struct RankContext {
    rank: usize,
    size: usize,
    deadline: Instant,
    sent_messages: usize,
    endpoint: Endpoint,
}

impl RankContext {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Point-to-point messages this rank has sent so far, collective
    /// traffic included.
    pub fn sent_messages(&self) -> usize {
        self.sent_messages
    }

    /// Sends `payload` to `dest`. Eager: returns once the message is
    /// buffered, without waiting for the matching receive.
    pub fn send(&mut self, payload: &[Element], dest: usize, tag: u32) -> Result<(), TransportError> {
        if tag >= RESERVED_TAG_BASE {
            return Err(TransportError::ReservedTag { tag });
        }
        self.send_internal(payload, dest, tag)
    }

    /// Blocks until a message from `source` with `tag` arrives. Messages
    /// for one (source, dest, tag) triple arrive in send order.
    pub fn recv(&mut self, source: usize, tag: u32) -> Result<Vec<Element>, TransportError> {
        if tag >= RESERVED_TAG_BASE {
            return Err(TransportError::ReservedTag { tag });
        }
        self.recv_internal(source, tag)
    }

    fn check_peer(&self, peer: usize) -> Result<(), TransportError> {
        if peer >= self.size {
            return Err(TransportError::InvalidRank {
                rank: peer,
                size: self.size,
            });
        }
        if peer == self.rank {
            return Err(TransportError::SelfMessage { rank: self.rank });
        }
        Ok(())
    }

    fn send_internal(
        &mut self,
        payload: &[Element],
        dest: usize,
        tag: u32,
    ) -> Result<(), TransportError> {
        self.check_peer(dest)?;
        let envelope = Envelope::new(payload.to_vec(), tag, self.rank as u32, dest as u32)?;
        match &mut self.endpoint {
            Endpoint::InProc { mailboxes } => mailboxes[dest].push(envelope),
            Endpoint::Socket(endpoint) => endpoint.send(&envelope)?,
        }
        self.sent_messages += 1;
        Ok(())
    }

    fn recv_internal(&mut self, source: usize, tag: u32) -> Result<Vec<Element>, TransportError> {
        self.check_peer(source)?;
        match &self.endpoint {
            Endpoint::InProc { mailboxes } => {
                mailboxes[self.rank].take_match(self.rank, source as u32, tag, self.deadline)
            }
            Endpoint::Socket(endpoint) => {
                endpoint.recv(self.rank, source as u32, tag, self.deadline)
            }
        }
    }

    /// Splits the root's buffer into `size` equal contiguous chunks and
    /// hands chunk `r` to rank `r`. The buffer length must be divisible
    /// by the world size; anything else fails at the root before a
    /// single message goes out. Non-root ranks pass `None`.
    pub fn scatter(
        &mut self,
        sendbuf: Option<&[Element]>,
        root: usize,
    ) -> Result<Vec<Element>, TransportError> {
        self.check_root(root)?;
        if self.rank == root {
            let buf = sendbuf.ok_or(TransportError::MissingRootBuffer { root })?;
            if buf.len() % self.size != 0 {
                return Err(TransportError::NotDivisible {
                    len: buf.len(),
                    size: self.size,
                });
            }
            let chunk = buf.len() / self.size;
            for dest in 0..self.size {
                if dest != root {
                    self.send_internal(&buf[dest * chunk..(dest + 1) * chunk], dest, SCATTER_TAG)?;
                }
            }
            Ok(buf[root * chunk..(root + 1) * chunk].to_vec())
        } else {
            if sendbuf.is_some() {
                return Err(TransportError::UnexpectedBuffer { rank: self.rank });
            }
            self.recv_internal(root, SCATTER_TAG)
        }
    }

    /// Collects equal-length buffers from every rank at the root, in
    /// rank order. The root gets the concatenation; everyone else gets
    /// `None`.
    pub fn gather(
        &mut self,
        sendbuf: &[Element],
        root: usize,
    ) -> Result<Option<Vec<Element>>, TransportError> {
        self.check_root(root)?;
        if self.rank == root {
            let expected = sendbuf.len();
            let mut out = Vec::with_capacity(expected * self.size);
            for source in 0..self.size {
                if source == root {
                    out.extend_from_slice(sendbuf);
                } else {
                    let part = self.recv_internal(source, GATHER_TAG)?;
                    if part.len() != expected {
                        return Err(TransportError::GatherLengthMismatch {
                            rank: source,
                            expected,
                            actual: part.len(),
                        });
                    }
                    out.extend_from_slice(&part);
                }
            }
            Ok(Some(out))
        } else {
            self.send_internal(sendbuf, root, GATHER_TAG)?;
            Ok(None)
        }
    }

    /// Copies the root's buffer to every rank.
    pub fn bcast(
        &mut self,
        data: Option<&[Element]>,
        root: usize,
    ) -> Result<Vec<Element>, TransportError> {
        self.check_root(root)?;
        if self.rank == root {
            let buf = data.ok_or(TransportError::MissingRootBuffer { root })?;
            for dest in 0..self.size {
                if dest != root {
                    self.send_internal(buf, dest, BCAST_TAG)?;
                }
            }
            Ok(buf.to_vec())
        } else {
            if data.is_some() {
                return Err(TransportError::UnexpectedBuffer { rank: self.rank });
            }
            self.recv_internal(root, BCAST_TAG)
        }
    }

    fn check_root(&self, root: usize) -> Result<(), TransportError> {
        if root >= self.size {
            return Err(TransportError::InvalidRank {
                rank: root,
                size: self.size,
            });
        }
        Ok(())
    }

    fn teardown(&mut self) {
        if let Endpoint::Socket(endpoint) = &mut self.endpoint {
            endpoint.teardown();
        }
    }
}

/// Runs `entry` once per rank, each on its own thread, and returns the
/// per-rank results in rank order.
///
/// The first rank that fails (error or panic) kills the world: blocked
/// peers wake with `WorldShutdown`, and the returned error names the
/// failing rank. A world that makes no progress at all dies at the
/// configured deadline instead of hanging.
pub fn world_spawn<R, F>(config: &WorldConfig, entry: F) -> Result<Vec<R>, TransportError>
where
    R: Send,
    F: Fn(&mut RankContext) -> Result<R, TransportError> + Send + Sync,
{
    if config.size == 0 {
        return Err(TransportError::EmptyWorld);
    }
    let deadline = Instant::now() + config.timeout;
    match config.backend {
        Backend::InProcess => {
            let mailboxes: Arc<Vec<Arc<Mailbox>>> =
                Arc::new((0..config.size).map(|_| Arc::new(Mailbox::new())).collect());
            let kill_mailboxes = Arc::clone(&mailboxes);
            run_ranks(
                config.size,
                deadline,
                |_, _| {
                    Ok(Endpoint::InProc {
                        mailboxes: Arc::clone(&mailboxes),
                    })
                },
                move || {
                    for mailbox in kill_mailboxes.iter() {
                        mailbox.kill();
                    }
                },
                &entry,
            )
        }
        Backend::Socket => {
            let world = SocketWorld::start(config.size, config.port.unwrap_or(0), deadline)?;
            let result = run_ranks(
                config.size,
                deadline,
                |rank, _| world.connect_rank(rank).map(Endpoint::Socket),
                || world.control.kill(),
                &entry,
            );
            world.shutdown();
            result
        }
    }
}

fn run_ranks<R, F, M, K>(
    size: usize,
    deadline: Instant,
    make_endpoint: M,
    kill_world: K,
    entry: &F,
) -> Result<Vec<R>, TransportError>
where
    R: Send,
    F: Fn(&mut RankContext) -> Result<R, TransportError> + Send + Sync,
    M: Fn(usize, Instant) -> Result<Endpoint, TransportError> + Send + Sync,
    K: Fn() + Send + Sync,
{
    let mut results: Vec<Option<R>> = (0..size).map(|_| None).collect();
    let mut first_failure: Option<(usize, TransportError)> = None;

    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel::<(usize, Result<R, TransportError>)>();
        for rank in 0..size {
            let tx = tx.clone();
            let make_endpoint = &make_endpoint;
            scope.spawn(move || {
                // The inner catch in run_one_rank covers the entry
                // function; this one covers endpoint setup, so a rank
                // thread always reports instead of poisoning the scope.
                let outcome = catch_unwind(AssertUnwindSafe(|| {
                    run_one_rank(rank, size, deadline, make_endpoint, entry)
                }))
                .unwrap_or_else(|payload| {
                    Err(TransportError::RankPanicked {
                        rank,
                        message: panic_message(payload),
                    })
                });
                let _ = tx.send((rank, outcome));
            });
        }
        drop(tx);
        for _ in 0..size {
            match rx.recv() {
                Ok((rank, Ok(value))) => results[rank] = Some(value),
                Ok((rank, Err(err))) => {
                    if first_failure.is_none() {
                        first_failure = Some((rank, err));
                        kill_world();
                    }
                }
                Err(_) => break,
            }
        }
    });

    match first_failure {
        Some((rank, source)) => Err(TransportError::RankFailed {
            rank,
            source: Box::new(source),
        }),
        None => Ok(results
            .into_iter()
            .map(|slot| slot.expect("every rank reported a result"))
            .collect()),
    }
}

fn run_one_rank<R, F, M>(
    rank: usize,
    size: usize,
    deadline: Instant,
    make_endpoint: &M,
    entry: &F,
) -> Result<R, TransportError>
where
    F: Fn(&mut RankContext) -> Result<R, TransportError> + Send + Sync,
    M: Fn(usize, Instant) -> Result<Endpoint, TransportError> + Send + Sync,
{
    let endpoint = make_endpoint(rank, deadline)?;
    let mut ctx = RankContext {
        rank,
        size,
        deadline,
        sent_messages: 0,
        endpoint,
    };
    let outcome = catch_unwind(AssertUnwindSafe(|| entry(&mut ctx)));
    ctx.teardown();
    match outcome {
        Ok(result) => result,
        Err(payload) => Err(TransportError::RankPanicked {
            rank,
            message: panic_message(payload),
        }),
    }
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(message) = payload.downcast_ref::<&str>() {
        (*message).to_string()
    } else if let Some(message) = payload.downcast_ref::<String>() {
        message.clone()
    } else {
        "opaque panic payload".to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn both_backends() -> [Backend; 2] {
        [Backend::InProcess, Backend::Socket]
    }

    fn quick_config(size: usize, backend: Backend) -> WorldConfig {
        WorldConfig::new(size, backend).with_timeout(Duration::from_secs(10))
    }

    #[test]
    fn world_returns_per_rank_results_in_rank_order() {
        for backend in both_backends() {
            let results =
                world_spawn(&quick_config(4, backend), |ctx| Ok(ctx.rank())).unwrap();
            assert_eq!(results, vec![0, 1, 2, 3], "{backend}");
        }
    }

    #[test]
    fn singleton_world_runs_entry_once() {
        for backend in both_backends() {
            let results = world_spawn(&quick_config(1, backend), |ctx| {
                Ok((ctx.rank(), ctx.size()))
            })
            .unwrap();
            assert_eq!(results, vec![(0, 1)], "{backend}");
        }
    }

    #[test]
    fn empty_world_is_rejected() {
        let err = world_spawn(&quick_config(0, Backend::InProcess), |_| Ok(())).unwrap_err();
        assert!(matches!(err, TransportError::EmptyWorld));
    }

    #[test]
    fn failing_rank_is_named() {
        for backend in both_backends() {
            let err = world_spawn(&quick_config(4, backend), |ctx| {
                if ctx.rank() == 2 {
                    Err(TransportError::Other("deliberate failure".into()))
                } else {
                    Ok(())
                }
            })
            .unwrap_err();
            match err {
                TransportError::RankFailed { rank, source } => {
                    assert_eq!(rank, 2, "{backend}");
                    assert!(matches!(*source, TransportError::Other(_)));
                }
                other => panic!("unexpected error on {backend}: {other}"),
            }
        }
    }

    #[test]
    fn panicking_rank_is_named() {
        let err = world_spawn(&quick_config(2, Backend::InProcess), |ctx| {
            if ctx.rank() == 1 {
                panic!("exploded");
            }
            Ok(())
        })
        .unwrap_err();
        match err {
            TransportError::RankFailed { rank, source } => {
                assert_eq!(rank, 1);
                assert!(
                    matches!(*source, TransportError::RankPanicked { rank: 1, ref message } if message == "exploded")
                );
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn send_recv_roundtrip() {
        for backend in both_backends() {
            let results = world_spawn(&quick_config(2, backend), |ctx| {
                if ctx.rank() == 0 {
                    ctx.send(&[4, 5, 6], 1, 3)?;
                    Ok(Vec::new())
                } else {
                    ctx.recv(0, 3)
                }
            })
            .unwrap();
            assert_eq!(results[1], vec![4, 5, 6], "{backend}");
        }
    }

    #[test]
    fn send_to_self_and_bad_ranks_are_rejected() {
        world_spawn(&quick_config(2, Backend::InProcess), |ctx| {
            if ctx.rank() == 0 {
                assert!(matches!(
                    ctx.send(&[1], 0, 0),
                    Err(TransportError::SelfMessage { rank: 0 })
                ));
                assert!(matches!(
                    ctx.send(&[1], 7, 0),
                    Err(TransportError::InvalidRank { rank: 7, size: 2 })
                ));
                assert!(matches!(
                    ctx.recv(0, 0),
                    Err(TransportError::SelfMessage { rank: 0 })
                ));
                assert!(matches!(
                    ctx.send(&[1], 1, RESERVED_TAG_BASE),
                    Err(TransportError::ReservedTag { .. })
                ));
            }
            Ok(())
        })
        .unwrap();
    }

    #[test]
    fn tag_matching_ignores_arrival_order() {
        for backend in both_backends() {
            let results = world_spawn(&quick_config(2, backend), |ctx| {
                if ctx.rank() == 1 {
                    ctx.send(&[10], 0, 0)?;
                    ctx.send(&[11], 0, 1)?;
                    Ok(Vec::new())
                } else {
                    let tagged_one = ctx.recv(1, 1)?;
                    let tagged_zero = ctx.recv(1, 0)?;
                    Ok(vec![tagged_one[0], tagged_zero[0]])
                }
            })
            .unwrap();
            assert_eq!(results[0], vec![11, 10], "{backend}");
        }
    }

    #[test]
    fn fifo_order_per_triple() {
        for backend in both_backends() {
            let results = world_spawn(&quick_config(2, backend), |ctx| {
                if ctx.rank() == 0 {
                    for i in 0..100 {
                        ctx.send(&[i], 1, 7)?;
                    }
                    Ok(Vec::new())
                } else {
                    let mut got = Vec::with_capacity(100);
                    for _ in 0..100 {
                        got.push(ctx.recv(0, 7)?[0]);
                    }
                    Ok(got)
                }
            })
            .unwrap();
            assert_eq!(results[1], (0..100).collect::<Vec<_>>(), "{backend}");
        }
    }

    #[test]
    fn unmatched_recv_times_out_not_hangs() {
        for backend in both_backends() {
            let timeout = Duration::from_millis(400);
            let config = WorldConfig::new(2, backend).with_timeout(timeout);
            let started = Instant::now();
            let err = world_spawn(&config, |ctx| {
                if ctx.rank() == 0 {
                    ctx.recv(1, 9).map(|_| ())
                } else {
                    Ok(())
                }
            })
            .unwrap_err();
            let elapsed = started.elapsed();
            match err {
                TransportError::RankFailed { rank: 0, source } => {
                    assert!(
                        matches!(*source, TransportError::Timeout { .. }),
                        "{backend}: {source}"
                    );
                }
                other => panic!("unexpected error on {backend}: {other}"),
            }
            assert!(
                elapsed < timeout * 2,
                "{backend}: abort took {elapsed:?}, deadline was {timeout:?}"
            );
        }
    }

    #[test]
    fn scatter_gives_each_rank_its_contiguous_chunk() {
        for backend in both_backends() {
            let results = world_spawn(&quick_config(4, backend), |ctx| {
                let root_buf = (ctx.rank() == 0).then(|| (1..=8).collect::<Vec<Element>>());
                ctx.scatter(root_buf.as_deref(), 0)
            })
            .unwrap();
            assert_eq!(
                results,
                vec![vec![1, 2], vec![3, 4], vec![5, 6], vec![7, 8]],
                "{backend}"
            );
        }
    }

    #[test]
    fn scatter_size_one_returns_whole_buffer() {
        let results = world_spawn(&quick_config(1, Backend::InProcess), |ctx| {
            ctx.scatter(Some(&[9, 8, 7]), 0)
        })
        .unwrap();
        assert_eq!(results, vec![vec![9, 8, 7]]);
    }

    #[test]
    fn scatter_rejects_non_divisible_length() {
        let err = world_spawn(&quick_config(3, Backend::InProcess), |ctx| {
            let root_buf = (ctx.rank() == 0).then(|| vec![0; 8]);
            ctx.scatter(root_buf.as_deref(), 0)
        })
        .unwrap_err();
        match err {
            TransportError::RankFailed { rank: 0, source } => {
                assert!(matches!(*source, TransportError::NotDivisible { len: 8, size: 3 }));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn gather_concatenates_in_rank_order() {
        for backend in both_backends() {
            let results = world_spawn(&quick_config(2, backend), |ctx| {
                ctx.gather(&[ctx.rank() as Element], 0)
            })
            .unwrap();
            assert_eq!(results[0], Some(vec![0, 1]), "{backend}");
            assert_eq!(results[1], None, "{backend}");
        }
    }

    #[test]
    fn gather_rejects_unequal_lengths() {
        let err = world_spawn(&quick_config(2, Backend::InProcess), |ctx| {
            if ctx.rank() == 0 {
                ctx.gather(&[0], 0)
            } else {
                ctx.gather(&[1, 2], 0)
            }
        })
        .unwrap_err();
        match err {
            TransportError::RankFailed { rank: 0, source } => {
                assert!(matches!(
                    *source,
                    TransportError::GatherLengthMismatch { rank: 1, expected: 1, actual: 2 }
                ));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn gather_inverts_scatter() {
        for backend in both_backends() {
            let original: Vec<Element> = (0..32).map(|i| 31 - i).collect();
            let expected = original.clone();
            let results = world_spawn(&quick_config(4, backend), move |ctx| {
                let root_buf = (ctx.rank() == 0).then(|| original.clone());
                let chunk = ctx.scatter(root_buf.as_deref(), 0)?;
                ctx.gather(&chunk, 0)
            })
            .unwrap();
            assert_eq!(results[0].as_deref(), Some(expected.as_slice()), "{backend}");
        }
    }

    #[test]
    fn bcast_copies_root_data_everywhere() {
        for backend in both_backends() {
            let results = world_spawn(&quick_config(4, backend), |ctx| {
                let data = (ctx.rank() == 0).then(|| vec![7, 7]);
                ctx.bcast(data.as_deref(), 0)
            })
            .unwrap();
            assert!(results.iter().all(|r| r == &vec![7, 7]), "{backend}");
        }
    }

    #[test]
    fn bcast_size_one_is_identity() {
        let results = world_spawn(&quick_config(1, Backend::InProcess), |ctx| {
            ctx.bcast(Some(&[1, 2, 3]), 0)
        })
        .unwrap();
        assert_eq!(results, vec![vec![1, 2, 3]]);
    }

    #[test]
    fn bcast_agrees_across_eight_ranks() {
        use crate::sort::generate_array;
        for backend in both_backends() {
            let payload = generate_array(512, 5);
            let expected = payload.clone();
            let results = world_spawn(&quick_config(8, backend), move |ctx| {
                let data = (ctx.rank() == 0).then(|| payload.clone());
                ctx.bcast(data.as_deref(), 0)
            })
            .unwrap();
            for got in &results {
                assert_eq!(got, &expected, "{backend}");
            }
        }
    }

    #[test]
    fn non_root_buffer_in_collective_is_rejected() {
        // Both ranks pass a buffer; only the non-root one is at fault.
        let err = world_spawn(&quick_config(2, Backend::InProcess), |ctx| {
            ctx.scatter(Some(&[1, 2]), 0)
        })
        .unwrap_err();
        match err {
            TransportError::RankFailed { rank: 1, source } => {
                assert!(matches!(*source, TransportError::UnexpectedBuffer { rank: 1 }));
            }
            other => panic!("unexpected error: {other}"),
        }
    }
}
