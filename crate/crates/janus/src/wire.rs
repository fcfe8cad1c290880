//! UDP event protocol.
//!
//! Instrumented external processes report their state to the monitor as
//! single-datagram events. The payload is exactly four bytes: the state
//! code as a big-endian signed 32-bit integer. There are no acknowledgements
//! and no retries; loss surfaces as staleness at the reflective-variable
//! layer.

use std::fmt;
use std::io;
use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use thiserror::Error;

use crate::time::Clock;

/// Default monitor port.
pub const DEFAULT_PORT: u16 = 20000;

/// Payload length of every event datagram.
pub const EVENT_PAYLOAD_LEN: usize = 4;

/// State codes reported by a monitored process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(i32)]
pub enum ProcessEvent {
    /// The process finished its work item.
    Stop = 1,
    /// The process is running but struggling.
    Slow = 2,
    /// The process has been paused.
    Paused = 3,
    /// The process has been launched.
    Start = 4,
    /// The process caught an exception and is about to exit abnormally.
    Signal = 5,
}

impl ProcessEvent {
    pub const ALL: [ProcessEvent; 5] = [
        ProcessEvent::Stop,
        ProcessEvent::Slow,
        ProcessEvent::Paused,
        ProcessEvent::Start,
        ProcessEvent::Signal,
    ];

    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn from_code(code: i32) -> Option<Self> {
        match code {
            1 => Some(ProcessEvent::Stop),
            2 => Some(ProcessEvent::Slow),
            3 => Some(ProcessEvent::Paused),
            4 => Some(ProcessEvent::Start),
            5 => Some(ProcessEvent::Signal),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProcessEvent::Stop => "stop",
            ProcessEvent::Slow => "slow",
            ProcessEvent::Paused => "paused",
            ProcessEvent::Start => "start",
            ProcessEvent::Signal => "signal",
        }
    }
}

impl fmt::Display for ProcessEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A decoded event together with who sent it and when it arrived, by the
/// monitor's clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventEnvelope {
    pub source: SocketAddr,
    pub event: ProcessEvent,
    pub received_at: f64,
}

#[derive(Debug, Error)]
pub enum WireError {
    #[error("payload is {len} bytes, events are exactly {EVENT_PAYLOAD_LEN}")]
    BadLength { len: usize },
    #[error("code {code} is not a known event")]
    UnknownCode { code: i32 },
    #[error("failed to bind {addr}: {source}")]
    BindFailure {
        addr: String,
        #[source]
        source: io::Error,
    },
    #[error("failed to send event: {0}")]
    SendFailure(#[source] io::Error),
}

/// Encodes an event as its 4-byte datagram payload.
pub fn encode_event(event: ProcessEvent) -> [u8; EVENT_PAYLOAD_LEN] {
    event.code().to_be_bytes()
}

/// Decodes a datagram payload. Wrong length and unknown codes are distinct
/// errors so the server can count them separately; neither is ever fatal.
pub fn decode_event(payload: &[u8]) -> Result<ProcessEvent, WireError> {
    let bytes: [u8; EVENT_PAYLOAD_LEN] = payload
        .try_into()
        .map_err(|_| WireError::BadLength { len: payload.len() })?;
    let code = i32::from_be_bytes(bytes);
    ProcessEvent::from_code(code).ok_or(WireError::UnknownCode { code })
}

/// Malformed-datagram counters kept by a running server.
#[derive(Debug, Default)]
pub struct ServerCounters {
    pub received: AtomicU64,
    pub delivered: AtomicU64,
    pub bad_length: AtomicU64,
    pub unknown_code: AtomicU64,
}

/// Handle to a running event server. Dropping the handle shuts the server
/// down; `shutdown` is idempotent.
pub struct ServerHandle {
    local_addr: SocketAddr,
    stop: Arc<AtomicBool>,
    counters: Arc<ServerCounters>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    pub fn counters(&self) -> &ServerCounters {
        &self.counters
    }

    pub fn counters_arc(&self) -> Arc<ServerCounters> {
        Arc::clone(&self.counters)
    }

    /// Stops the receive loop and releases the socket. Safe to call twice.
    pub fn shutdown(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(thread) = self.thread.take() {
            let _ = thread.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.shutdown();
    }
}

/// Binds `addr` and delivers every well-formed event to `sink` from a
/// dedicated receive thread. Malformed datagrams bump a counter and are
/// dropped; they never terminate the server.
pub fn serve(
    addr: impl ToSocketAddrs,
    clock: Arc<dyn Clock>,
    sink: impl FnMut(EventEnvelope) + Send + 'static,
) -> Result<ServerHandle, WireError> {
    let socket = bind(addr)?;
    socket
        .set_read_timeout(Some(Duration::from_millis(25)))
        .expect("set_read_timeout(Some) cannot fail");
    let local_addr = socket.local_addr().map_err(WireError::SendFailure)?;
    let stop = Arc::new(AtomicBool::new(false));
    let counters = Arc::new(ServerCounters::default());

    let thread_stop = Arc::clone(&stop);
    let thread_counters = Arc::clone(&counters);
    let mut sink = sink;
    let thread = std::thread::Builder::new()
        .name(format!("janus-udp-{}", local_addr.port()))
        .spawn(move || {
            let mut buf = [0u8; 64];
            while !thread_stop.load(Ordering::SeqCst) {
                let (len, source) = match socket.recv_from(&mut buf) {
                    Ok(ok) => ok,
                    Err(e)
                        if e.kind() == io::ErrorKind::WouldBlock
                            || e.kind() == io::ErrorKind::TimedOut =>
                    {
                        continue;
                    }
                    Err(_) => continue,
                };
                thread_counters.received.fetch_add(1, Ordering::Relaxed);
                match decode_event(&buf[..len]) {
                    Ok(event) => {
                        thread_counters.delivered.fetch_add(1, Ordering::Relaxed);
                        sink(EventEnvelope {
                            source,
                            event,
                            received_at: clock.now(),
                        });
                    }
                    Err(WireError::BadLength { .. }) => {
                        thread_counters.bad_length.fetch_add(1, Ordering::Relaxed);
                    }
                    Err(_) => {
                        thread_counters.unknown_code.fetch_add(1, Ordering::Relaxed);
                    }
                }
            }
        })
        .expect("spawning the receive thread");

    Ok(ServerHandle {
        local_addr,
        stop,
        counters,
        thread: Some(thread),
    })
}

fn bind(addr: impl ToSocketAddrs) -> Result<UdpSocket, WireError> {
    let addrs: Vec<SocketAddr> = addr
        .to_socket_addrs()
        .map_err(|e| WireError::BindFailure {
            addr: "<unresolvable>".to_string(),
            source: e,
        })?
        .collect();
    UdpSocket::bind(&addrs[..]).map_err(|e| WireError::BindFailure {
        addr: addrs
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(","),
        source: e,
    })
}

/// Fire-and-forget reporter for instrumented processes. Holds one ephemeral
/// socket; `send` is cheap enough for bursts.
pub struct Reporter {
    socket: UdpSocket,
    dest: SocketAddr,
}

impl Reporter {
    pub fn new(dest: SocketAddr) -> Result<Self, WireError> {
        let bind_addr = if dest.is_ipv4() { "0.0.0.0:0" } else { "[::]:0" };
        let socket = UdpSocket::bind(bind_addr).map_err(|e| WireError::BindFailure {
            addr: bind_addr.to_string(),
            source: e,
        })?;
        Ok(Self { socket, dest })
    }

    /// Sends one event datagram. UDP semantics: local send success says
    /// nothing about delivery.
    pub fn send(&self, event: ProcessEvent) -> Result<(), WireError> {
        self.socket
            .send_to(&encode_event(event), self.dest)
            .map_err(WireError::SendFailure)?;
        Ok(())
    }
}

/// One-shot convenience around [`Reporter`].
pub fn report(server_addr: SocketAddr, event: ProcessEvent) -> Result<(), WireError> {
    Reporter::new(server_addr)?.send(event)
}
