//! Per-rank mailbox with tag-filtered matching.
//!
//! Both backends deliver into one of these per rank. Matching removes the
//! earliest queued envelope for a `(source, tag)` pair, which together
//! with in-order delivery gives FIFO semantics per (source, dest, tag).

use std::collections::VecDeque;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use crate::transport::wire::Envelope;
use crate::transport::TransportError;
use crate::Element;

const WAIT_SLICE: Duration = Duration::from_millis(100);

#[derive(Default)]
struct Inner {
    queue: VecDeque<Envelope>,
    dead: bool,
}

pub(crate) struct Mailbox {
    inner: Mutex<Inner>,
    cvar: Condvar,
}

impl Mailbox {
    pub(crate) fn new() -> Self {
        Mailbox {
            inner: Mutex::new(Inner::default()),
            cvar: Condvar::new(),
        }
    }

    /// Queues an envelope for this rank. Delivery to a dead mailbox is
    /// dropped silently: the owning rank already finished or the world
    /// is shutting down, and an eager sender has nothing to wait for.
    pub(crate) fn push(&self, envelope: Envelope) {
        let mut inner = self.inner.lock().expect("mailbox poisoned");
        if !inner.dead {
            inner.queue.push_back(envelope);
            self.cvar.notify_all();
        }
    }

    /// Marks the mailbox dead and wakes every waiter, which then fails
    /// with `WorldShutdown`.
    pub(crate) fn kill(&self) {
        let mut inner = self.inner.lock().expect("mailbox poisoned");
        inner.dead = true;
        self.cvar.notify_all();
    }

    /// Blocks until an envelope from `source` with `tag` is available,
    /// removing and returning the earliest such envelope. Fails with
    /// `Timeout` at `deadline` and `WorldShutdown` if the mailbox dies.
    pub(crate) fn take_match(
        &self,
        rank: usize,
        source: u32,
        tag: u32,
        deadline: Instant,
    ) -> Result<Vec<Element>, TransportError> {
        let mut inner = self.inner.lock().expect("mailbox poisoned");
        loop {
            if let Some(index) = inner
                .queue
                .iter()
                .position(|e| e.source_rank == source && e.message_tag == tag)
            {
                let envelope = inner.queue.remove(index).expect("matched index valid");
                return Ok(envelope.payload);
            }
            if inner.dead {
                return Err(TransportError::WorldShutdown);
            }
            let now = Instant::now();
            if now >= deadline {
                return Err(TransportError::Timeout {
                    rank,
                    src: source as usize,
                    tag,
                });
            }
            let wait = (deadline - now).min(WAIT_SLICE);
            let (guard, _) = self
                .cvar
                .wait_timeout(inner, wait)
                .expect("mailbox poisoned");
            inner = guard;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn env(source: u32, tag: u32, payload: Vec<Element>) -> Envelope {
        Envelope::new(payload, tag, source, 99).unwrap()
    }

    #[test]
    fn matches_by_source_and_tag_in_arrival_order() {
        let mb = Mailbox::new();
        mb.push(env(1, 0, vec![10]));
        mb.push(env(1, 1, vec![11]));
        mb.push(env(2, 0, vec![20]));
        mb.push(env(1, 0, vec![12]));
        let deadline = Instant::now() + Duration::from_secs(1);
        assert_eq!(mb.take_match(9, 1, 1, deadline).unwrap(), vec![11]);
        assert_eq!(mb.take_match(9, 1, 0, deadline).unwrap(), vec![10]);
        assert_eq!(mb.take_match(9, 1, 0, deadline).unwrap(), vec![12]);
        assert_eq!(mb.take_match(9, 2, 0, deadline).unwrap(), vec![20]);
    }

    #[test]
    fn times_out_when_nothing_matches() {
        let mb = Mailbox::new();
        mb.push(env(1, 5, vec![1]));
        let started = Instant::now();
        let err = mb
            .take_match(3, 1, 6, started + Duration::from_millis(150))
            .unwrap_err();
        assert!(matches!(err, TransportError::Timeout { rank: 3, .. }));
        assert!(started.elapsed() >= Duration::from_millis(150));
    }

    #[test]
    fn kill_wakes_blocked_waiter() {
        let mb = Arc::new(Mailbox::new());
        let mb2 = Arc::clone(&mb);
        let waiter = std::thread::spawn(move || {
            mb2.take_match(0, 1, 0, Instant::now() + Duration::from_secs(30))
        });
        std::thread::sleep(Duration::from_millis(50));
        mb.kill();
        let err = waiter.join().unwrap().unwrap_err();
        assert!(matches!(err, TransportError::WorldShutdown));
    }

    #[test]
    fn queued_message_wins_over_pending_death() {
        let mb = Mailbox::new();
        mb.push(env(1, 0, vec![7]));
        mb.kill();
        // The queued envelope was accepted before death and is still
        // deliverable.
        let got = mb.take_match(0, 1, 0, Instant::now() + Duration::from_secs(1));
        assert_eq!(got.unwrap(), vec![7]);
    }
}
