//! TCP socket backend.
//!
//! Worlds rendezvous at a loopback listener (the port comes from the
//! world config; 0 picks an ephemeral port). Each rank opens one
//! connection to the listener and announces itself with a 4-byte
//! little-endian rank id; after that, every frame it writes is an
//! envelope in the format of [`crate::transport::wire`]. A router thread
//! behind the listener forwards each envelope to the connection of its
//! destination rank, so ranks never dial each other directly.
//!
//! All blocking socket I/O is sliced with short OS timeouts so that the
//! world deadline and the kill switch are always honored; a wedged world
//! degrades into a `DeadlineExceeded`/`Timeout` error instead of a hang.

use std::collections::HashMap;
use std::io::{ErrorKind, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use crate::transport::mailbox::Mailbox;
use crate::transport::wire::{decode_header, decode_payload, encode_envelope, Envelope, HEADER_LEN};
use crate::transport::TransportError;

const POLL_SLICE: Duration = Duration::from_millis(20);

struct WriterEntry {
    /// Serializes frame writes to one destination.
    locked: Arc<Mutex<TcpStream>>,
    /// Lock-free duplicate handle used only to shut the socket down.
    raw: TcpStream,
}

pub(crate) struct SocketControl {
    killed: AtomicBool,
    deadline: Instant,
    writers: Mutex<HashMap<u32, WriterEntry>>,
    writers_cvar: Condvar,
    mailboxes: Mutex<Vec<Arc<Mailbox>>>,
}

impl SocketControl {
    fn new(deadline: Instant) -> Self {
        SocketControl {
            killed: AtomicBool::new(false),
            deadline,
            writers: Mutex::new(HashMap::new()),
            writers_cvar: Condvar::new(),
            mailboxes: Mutex::new(Vec::new()),
        }
    }

    fn is_killed(&self) -> bool {
        self.killed.load(Ordering::SeqCst)
    }

    pub(crate) fn kill(&self) {
        self.killed.store(true, Ordering::SeqCst);
        for mailbox in self.mailboxes.lock().expect("mailboxes poisoned").iter() {
            mailbox.kill();
        }
        let writers = self.writers.lock().expect("writers poisoned");
        for entry in writers.values() {
            let _ = entry.raw.shutdown(Shutdown::Both);
        }
        self.writers_cvar.notify_all();
    }

    fn register_writer(&self, rank: u32, stream: TcpStream, raw: TcpStream) {
        let mut writers = self.writers.lock().expect("writers poisoned");
        writers.insert(
            rank,
            WriterEntry {
                locked: Arc::new(Mutex::new(stream)),
                raw,
            },
        );
        self.writers_cvar.notify_all();
    }

    /// Blocks until the destination rank's connection is registered;
    /// early sends can race the destination's rendezvous.
    fn wait_writer(&self, rank: u32) -> Result<Arc<Mutex<TcpStream>>, TransportError> {
        let mut writers = self.writers.lock().expect("writers poisoned");
        loop {
            if let Some(entry) = writers.get(&rank) {
                return Ok(Arc::clone(&entry.locked));
            }
            if self.is_killed() {
                return Err(TransportError::WorldShutdown);
            }
            if Instant::now() >= self.deadline {
                return Err(TransportError::DeadlineExceeded);
            }
            let (guard, _) = self
                .writers_cvar
                .wait_timeout(writers, POLL_SLICE)
                .expect("writers poisoned");
            writers = guard;
        }
    }

    fn register_mailbox(&self, mailbox: Arc<Mailbox>) {
        self.mailboxes
            .lock()
            .expect("mailboxes poisoned")
            .push(mailbox);
    }
}

enum ReadStatus {
    Complete,
    CleanEof,
}

/// Reads exactly `buf.len()` bytes, tolerating OS-level read timeouts so
/// the kill switch and world deadline stay responsive. A clean EOF
/// before the first byte is reported, mid-buffer EOF is an error.
fn read_full(
    stream: &mut TcpStream,
    buf: &mut [u8],
    control: &SocketControl,
) -> Result<ReadStatus, TransportError> {
    let mut filled = 0;
    while filled < buf.len() {
        if control.is_killed() {
            return Err(TransportError::WorldShutdown);
        }
        if Instant::now() >= control.deadline {
            return Err(TransportError::DeadlineExceeded);
        }
        match stream.read(&mut buf[filled..]) {
            Ok(0) => {
                return if filled == 0 {
                    Ok(ReadStatus::CleanEof)
                } else {
                    Err(TransportError::TruncatedFrame)
                };
            }
            Ok(n) => filled += n,
            Err(e)
                if matches!(
                    e.kind(),
                    ErrorKind::WouldBlock | ErrorKind::TimedOut | ErrorKind::Interrupted
                ) => {}
            Err(e) if e.kind() == ErrorKind::ConnectionReset && filled == 0 => {
                return Ok(ReadStatus::CleanEof);
            }
            Err(e) => return Err(TransportError::Io(e)),
        }
    }
    Ok(ReadStatus::Complete)
}

fn write_full(
    stream: &mut TcpStream,
    buf: &[u8],
    control: &SocketControl,
) -> Result<(), TransportError> {
    let mut written = 0;
    while written < buf.len() {
        if control.is_killed() {
            return Err(TransportError::WorldShutdown);
        }
        if Instant::now() >= control.deadline {
            return Err(TransportError::DeadlineExceeded);
        }
        match stream.write(&buf[written..]) {
            Ok(0) => {
                return Err(TransportError::Io(std::io::Error::new(
                    ErrorKind::WriteZero,
                    "socket closed mid-frame",
                )))
            }
            Ok(n) => written += n,
            Err(e)
                if matches!(
                    e.kind(),
                    ErrorKind::WouldBlock | ErrorKind::TimedOut | ErrorKind::Interrupted
                ) => {}
            Err(e) => return Err(TransportError::Io(e)),
        }
    }
    Ok(())
}

/// Reads one full envelope frame; `None` means the peer closed between
/// frames.
fn read_envelope_frame(
    stream: &mut TcpStream,
    control: &SocketControl,
) -> Result<Option<Envelope>, TransportError> {
    let mut header_bytes = [0u8; HEADER_LEN];
    match read_full(stream, &mut header_bytes, control)? {
        ReadStatus::CleanEof => return Ok(None),
        ReadStatus::Complete => {}
    }
    let header = decode_header(&header_bytes)?;
    let mut payload_bytes = vec![0u8; (header.length * 8) as usize];
    match read_full(stream, &mut payload_bytes, control)? {
        ReadStatus::CleanEof => return Err(TransportError::TruncatedFrame),
        ReadStatus::Complete => {}
    }
    let payload = decode_payload(&header, &payload_bytes)?;
    if header.source_rank == header.dest_rank {
        return Err(TransportError::SelfMessage {
            rank: header.source_rank as usize,
        });
    }
    Ok(Some(Envelope {
        payload,
        element_type: header.element_type,
        message_tag: header.message_tag,
        source_rank: header.source_rank,
        dest_rank: header.dest_rank,
    }))
}

fn configure_stream(stream: &TcpStream) -> Result<(), TransportError> {
    stream.set_nodelay(true)?;
    stream.set_read_timeout(Some(POLL_SLICE))?;
    stream.set_write_timeout(Some(POLL_SLICE))?;
    Ok(())
}

/// The routing hub plus the threads it owns.
pub(crate) struct SocketWorld {
    addr: SocketAddr,
    pub(crate) control: Arc<SocketControl>,
    threads: Arc<Mutex<Vec<JoinHandle<()>>>>,
}

impl SocketWorld {
    pub(crate) fn start(
        size: usize,
        port: u16,
        deadline: Instant,
    ) -> Result<SocketWorld, TransportError> {
        let listener = TcpListener::bind(("127.0.0.1", port))?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let control = Arc::new(SocketControl::new(deadline));
        let threads = Arc::new(Mutex::new(Vec::new()));

        let accept_control = Arc::clone(&control);
        let accept_threads = Arc::clone(&threads);
        let accept_handle = std::thread::spawn(move || {
            accept_loop(listener, size, accept_control, accept_threads);
        });
        threads
            .lock()
            .expect("router threads poisoned")
            .push(accept_handle);

        Ok(SocketWorld {
            addr,
            control,
            threads,
        })
    }

    /// Dials the hub from a rank thread and starts the rank's reader.
    pub(crate) fn connect_rank(&self, rank: usize) -> Result<SocketEndpoint, TransportError> {
        let mut stream = connect_with_retry(self.addr, &self.control)?;
        configure_stream(&stream)?;
        write_full(&mut stream, &(rank as u32).to_le_bytes(), &self.control)?;

        let mailbox = Arc::new(Mailbox::new());
        self.control.register_mailbox(Arc::clone(&mailbox));

        let reader_stream = stream.try_clone()?;
        let reader_mailbox = Arc::clone(&mailbox);
        let reader_control = Arc::clone(&self.control);
        let reader = std::thread::spawn(move || {
            rank_reader_loop(reader_stream, reader_mailbox, reader_control);
        });

        Ok(SocketEndpoint {
            stream,
            mailbox,
            reader: Some(reader),
            control: Arc::clone(&self.control),
        })
    }

    /// Stops the hub and joins every router thread. Idempotent; called
    /// after all rank threads have finished.
    pub(crate) fn shutdown(&self) {
        self.control.kill();
        let handles: Vec<JoinHandle<()>> = {
            let mut threads = self.threads.lock().expect("router threads poisoned");
            threads.drain(..).collect()
        };
        for handle in handles {
            let _ = handle.join();
        }
    }
}

fn connect_with_retry(
    addr: SocketAddr,
    control: &SocketControl,
) -> Result<TcpStream, TransportError> {
    loop {
        if control.is_killed() {
            return Err(TransportError::WorldShutdown);
        }
        if Instant::now() >= control.deadline {
            return Err(TransportError::DeadlineExceeded);
        }
        match TcpStream::connect_timeout(&addr, POLL_SLICE) {
            Ok(stream) => return Ok(stream),
            Err(_) => std::thread::sleep(Duration::from_millis(5)),
        }
    }
}

fn accept_loop(
    listener: TcpListener,
    size: usize,
    control: Arc<SocketControl>,
    threads: Arc<Mutex<Vec<JoinHandle<()>>>>,
) {
    let mut accepted = 0;
    while accepted < size {
        if control.is_killed() || Instant::now() >= control.deadline {
            return;
        }
        match listener.accept() {
            Ok((stream, _)) => {
                if configure_stream(&stream).is_err() {
                    continue;
                }
                let mut hello_stream = stream;
                let mut hello = [0u8; 4];
                match read_full(&mut hello_stream, &mut hello, &control) {
                    Ok(ReadStatus::Complete) => {}
                    _ => continue, // rank died mid-rendezvous
                }
                let rank = u32::from_le_bytes(hello);
                let (write_clone, raw_clone) =
                    match (hello_stream.try_clone(), hello_stream.try_clone()) {
                        (Ok(a), Ok(b)) => (a, b),
                        _ => continue,
                    };
                control.register_writer(rank, write_clone, raw_clone);
                let forward_control = Arc::clone(&control);
                let handle = std::thread::spawn(move || {
                    forward_loop(hello_stream, forward_control);
                });
                threads
                    .lock()
                    .expect("router threads poisoned")
                    .push(handle);
                accepted += 1;
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => {
                std::thread::sleep(Duration::from_millis(2));
            }
            Err(_) => {
                control.kill();
                return;
            }
        }
    }
}

/// Reads envelopes arriving from one rank and relays each to the
/// connection of its destination. Undeliverable frames (destination
/// already exited) are dropped, matching the in-process backend where a
/// message for a finished rank simply goes unread.
fn forward_loop(mut stream: TcpStream, control: Arc<SocketControl>) {
    loop {
        match read_envelope_frame(&mut stream, &control) {
            Ok(Some(envelope)) => {
                let writer = match control.wait_writer(envelope.dest_rank) {
                    Ok(writer) => writer,
                    Err(_) => return,
                };
                let bytes = encode_envelope(&envelope);
                let mut guard = writer.lock().expect("writer poisoned");
                if write_full(&mut guard, &bytes, &control).is_err() {
                    continue;
                }
            }
            Ok(None) | Err(_) => return,
        }
    }
}

fn rank_reader_loop(mut stream: TcpStream, mailbox: Arc<Mailbox>, control: Arc<SocketControl>) {
    loop {
        match read_envelope_frame(&mut stream, &control) {
            Ok(Some(envelope)) => mailbox.push(envelope),
            Ok(None) | Err(_) => {
                mailbox.kill();
                return;
            }
        }
    }
}

/// One rank's connection to the hub plus its delivery mailbox.
pub(crate) struct SocketEndpoint {
    stream: TcpStream,
    mailbox: Arc<Mailbox>,
    reader: Option<JoinHandle<()>>,
    control: Arc<SocketControl>,
}

impl SocketEndpoint {
    pub(crate) fn send(&mut self, envelope: &Envelope) -> Result<(), TransportError> {
        let bytes = encode_envelope(envelope);
        write_full(&mut self.stream, &bytes, &self.control)
    }

    pub(crate) fn recv(
        &self,
        rank: usize,
        source: u32,
        tag: u32,
        deadline: Instant,
    ) -> Result<Vec<crate::Element>, TransportError> {
        self.mailbox.take_match(rank, source, tag, deadline)
    }

    pub(crate) fn teardown(&mut self) {
        let _ = self.stream.shutdown(Shutdown::Both);
        if let Some(reader) = self.reader.take() {
            let _ = reader.join();
        }
    }
}

impl Drop for SocketEndpoint {
    fn drop(&mut self) {
        self.teardown();
    }
}
