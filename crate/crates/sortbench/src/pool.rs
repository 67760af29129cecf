//! Shared-memory worker-pool merge sort.
//!
//! [`WorkerPool`] provides a fixed number of independent execution lanes
//! (OS threads here; tasks share no mutable state, so the thread/process
//! distinction is invisible to callers). [`pool_mergesort`] is the sort
//! built on it: split the input into `ceil(n / workers)`-sized chunks,
//! sort the chunks in parallel with [`baseline_sort`], close the pool,
//! then merge the sorted chunks on the calling thread.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use thiserror::Error;

use crate::sort::{baseline_sort, merge};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PoolError {
    #[error("worker pool needs at least one worker")]
    ZeroWorkers,
    #[error("worker pool is closed")]
    PoolClosed,
    #[error("task for input {index} panicked")]
    TaskFailed { index: usize },
}

type Job = Box<dyn FnOnce() + Send + 'static>;

/// A bounded pool of worker threads with a submit/close lifecycle.
///
/// `map` and `map_async` fan tasks out to the workers; `close` drains
/// in-flight work, joins the threads, and rejects later submissions.
/// Safe to share across threads.
pub struct WorkerPool {
    worker_count: usize,
    sender: Mutex<Option<Sender<Job>>>,
    handles: Mutex<Vec<JoinHandle<()>>>,
}

impl WorkerPool {
    /// Starts `workers` worker threads. Rejects `workers == 0`.
    pub fn new(workers: usize) -> Result<Self, PoolError> {
        if workers == 0 {
            return Err(PoolError::ZeroWorkers);
        }
        let (sender, receiver) = channel::<Job>();
        let receiver = Arc::new(Mutex::new(receiver));
        let mut handles = Vec::with_capacity(workers);
        for _ in 0..workers {
            let receiver = Arc::clone(&receiver);
            handles.push(std::thread::spawn(move || loop {
                let job = receiver.lock().expect("pool queue poisoned").recv();
                match job {
                    Ok(job) => job(),
                    Err(_) => break, // all senders dropped and queue drained
                }
            }));
        }
        Ok(WorkerPool {
            worker_count: workers,
            sender: Mutex::new(Some(sender)),
            handles: Mutex::new(handles),
        })
    }

    pub fn worker_count(&self) -> usize {
        self.worker_count
    }

    pub fn is_closed(&self) -> bool {
        self.sender.lock().expect("pool sender poisoned").is_none()
    }

    /// Runs `task` over every input on the pool and blocks until all
    /// tasks finish. Results come back in input order no matter which
    /// worker finished first.
    ///
    /// The first task that panics aborts the batch; the error names the
    /// offending input index.
    pub fn map<T, F>(&self, task: F, inputs: Vec<Vec<T>>) -> Result<Vec<Vec<T>>, PoolError>
    where
        T: Send + 'static,
        F: Fn(Vec<T>) -> Vec<T> + Send + Sync + 'static,
    {
        self.submit(task, inputs)?.wait()
    }

    /// Like [`WorkerPool::map`] but returns immediately with an
    /// [`AsyncResult`]; submission errors surface at `get()`.
    pub fn map_async<T, F>(&self, task: F, inputs: Vec<Vec<T>>) -> AsyncResult<T>
    where
        T: Clone + Send + 'static,
        F: Fn(Vec<T>) -> Vec<T> + Send + Sync + 'static,
    {
        match self.submit(task, inputs) {
            Ok(batch) => AsyncResult {
                state: Mutex::new(AsyncState::Pending(batch)),
            },
            Err(err) => AsyncResult {
                state: Mutex::new(AsyncState::Ready(Err(err))),
            },
        }
    }

    fn submit<T, F>(&self, task: F, inputs: Vec<Vec<T>>) -> Result<PendingBatch<T>, PoolError>
    where
        T: Send + 'static,
        F: Fn(Vec<T>) -> Vec<T> + Send + Sync + 'static,
    {
        let sender = {
            let guard = self.sender.lock().expect("pool sender poisoned");
            guard.clone().ok_or(PoolError::PoolClosed)?
        };
        let task = Arc::new(task);
        let expected = inputs.len();
        let (result_tx, result_rx) = channel();
        for (index, input) in inputs.into_iter().enumerate() {
            let task = Arc::clone(&task);
            let result_tx = result_tx.clone();
            let job: Job = Box::new(move || {
                let outcome = catch_unwind(AssertUnwindSafe(|| task(input)));
                // The batch may have been abandoned; nobody to tell.
                let _ = result_tx.send((index, outcome.map_err(|_| index)));
            });
            sender.send(job).map_err(|_| PoolError::PoolClosed)?;
        }
        Ok(PendingBatch { result_rx, expected })
    }

    /// Closes the pool: in-flight tasks finish, worker threads are
    /// joined, and later submissions fail. Calling it twice is fine.
    pub fn close(&self) {
        self.sender.lock().expect("pool sender poisoned").take();
        let mut handles = self.handles.lock().expect("pool handles poisoned");
        for handle in handles.drain(..) {
            let _ = handle.join();
        }
    }
}

impl Drop for WorkerPool {
    fn drop(&mut self) {
        self.close();
    }
}

struct PendingBatch<T> {
    result_rx: Receiver<(usize, Result<Vec<T>, usize>)>,
    expected: usize,
}

impl<T> PendingBatch<T> {
    fn wait(self) -> Result<Vec<Vec<T>>, PoolError> {
        let mut slots: Vec<Option<Vec<T>>> = (0..self.expected).map(|_| None).collect();
        for _ in 0..self.expected {
            let (index, outcome) = self
                .result_rx
                .recv()
                .expect("worker dropped result channel before finishing batch");
            match outcome {
                Ok(value) => slots[index] = Some(value),
                Err(index) => return Err(PoolError::TaskFailed { index }),
            }
        }
        Ok(slots.into_iter().map(|s| s.expect("batch slot filled")).collect())
    }
}

enum AsyncState<T> {
    Pending(PendingBatch<T>),
    Ready(Result<Vec<Vec<T>>, PoolError>),
}

/// Handle to a batch submitted with [`WorkerPool::map_async`].
///
/// `get` blocks until the batch finishes and caches the outcome, so
/// calling it again returns the same results. Dropping the handle
/// without calling `get` abandons the results; the pool still drains.
pub struct AsyncResult<T> {
    state: Mutex<AsyncState<T>>,
}

impl<T: Clone> AsyncResult<T> {
    pub fn get(&self) -> Result<Vec<Vec<T>>, PoolError> {
        let mut state = self.state.lock().expect("async result poisoned");
        if let AsyncState::Pending(_) = &*state {
            let pending = std::mem::replace(
                &mut *state,
                AsyncState::Ready(Err(PoolError::PoolClosed)),
            );
            let AsyncState::Pending(batch) = pending else { unreachable!() };
            *state = AsyncState::Ready(batch.wait());
        }
        match &*state {
            AsyncState::Ready(result) => result.clone(),
            AsyncState::Pending(_) => unreachable!(),
        }
    }
}

/// How an input array was split for the pool: `ceil(total / workers)`
/// elements per chunk, empty trailing chunks omitted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkPlan<T> {
    pub total_length: usize,
    pub chunk_size: usize,
    pub chunks: Vec<Vec<T>>,
}

/// Splits `values` into at most `workers` chunks of `ceil(len / workers)`
/// elements; the last chunk may be shorter. Concatenating the chunks
/// reproduces the input exactly.
pub fn chunk_array<T: Clone>(values: &[T], workers: usize) -> ChunkPlan<T> {
    assert!(workers >= 1, "workers must be positive");
    let total_length = values.len();
    let chunk_size = total_length.div_ceil(workers);
    let chunks = if total_length == 0 {
        Vec::new()
    } else {
        values.chunks(chunk_size).map(<[T]>::to_vec).collect()
    };
    ChunkPlan {
        total_length,
        chunk_size,
        chunks,
    }
}

/// Merges sorted chunks into one sorted vector by pairwise reduction:
/// merge chunks 0+1, 2+3, ... and repeat on the halved list. That is
/// O(n log k) over k chunks and mirrors the rank-tree merge shape.
pub fn merge_chunks<T: Ord + Clone>(chunks: &[Vec<T>]) -> Vec<T> {
    match chunks.len() {
        0 => return Vec::new(),
        1 => return chunks[0].clone(),
        _ => {}
    }
    let mut runs: Vec<Vec<T>> = chunks.to_vec();
    while runs.len() > 1 {
        let mut next = Vec::with_capacity(runs.len().div_ceil(2));
        let mut iter = runs.chunks_exact(2);
        for pair in &mut iter {
            next.push(merge(&pair[0], &pair[1]));
        }
        if let [odd] = iter.remainder() {
            next.push(odd.clone());
        }
        runs = next;
    }
    runs.pop().unwrap()
}

/// Worker-pool merge sort: chunk, sort each chunk on the pool with
/// [`baseline_sort`], close the pool, merge the sorted chunks on the
/// caller's thread.
pub fn pool_mergesort<T>(values: &[T], workers: usize) -> Result<Vec<T>, PoolError>
where
    T: Ord + Clone + Send + 'static,
{
    let pool = WorkerPool::new(workers)?;
    let plan = chunk_array(values, workers);
    let sorted_chunks = pool.map(|chunk| baseline_sort(&chunk), plan.chunks);
    pool.close();
    Ok(merge_chunks(&sorted_chunks?))
}
