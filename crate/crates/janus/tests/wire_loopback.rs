//! Loopback integration of the UDP event protocol: a real server socket,
//! real reporter sockets, and the sink seeing exactly the decoded events.

use std::sync::atomic::Ordering;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use janus::time::VirtualClock;
use janus::wire::{encode_event, report, serve, EventEnvelope, ProcessEvent, Reporter};

fn collecting_server() -> (janus::wire::ServerHandle, Arc<Mutex<Vec<EventEnvelope>>>) {
    let clock = VirtualClock::new();
    clock.set(1.0);
    let seen = Arc::new(Mutex::new(Vec::new()));
    let sink_seen = Arc::clone(&seen);
    let server = serve("127.0.0.1:0", clock, move |envelope| {
        sink_seen.lock().unwrap().push(envelope);
    })
    .unwrap();
    (server, seen)
}

fn wait_until(deadline: Duration, mut done: impl FnMut() -> bool) -> bool {
    let start = Instant::now();
    while start.elapsed() < deadline {
        if done() {
            return true;
        }
        std::thread::sleep(Duration::from_millis(5));
    }
    done()
}

#[test]
fn single_event_roundtrip() {
    let (mut server, seen) = collecting_server();
    report(server.local_addr(), ProcessEvent::Start).unwrap();
    assert!(wait_until(Duration::from_secs(5), || !seen
        .lock()
        .unwrap()
        .is_empty()));
    let envelopes = seen.lock().unwrap();
    assert_eq!(envelopes.len(), 1);
    assert_eq!(envelopes[0].event, ProcessEvent::Start);
    assert_eq!(envelopes[0].received_at, 1.0);
    server.shutdown();
}

#[test]
fn alternating_events_arrive_in_order() {
    let (mut server, seen) = collecting_server();
    let reporter = Reporter::new(server.local_addr()).unwrap();
    let expected: Vec<ProcessEvent> = (0..100)
        .map(|k| {
            if k % 2 == 0 {
                ProcessEvent::Paused
            } else {
                ProcessEvent::Start
            }
        })
        .collect();
    for event in &expected {
        reporter.send(*event).unwrap();
    }
    // Loopback UDP from a single socket preserves order; losses would show
    // up as a shorter prefix, which still must be in order.
    assert!(wait_until(Duration::from_secs(5), || seen.lock().unwrap().len()
        >= expected.len()));
    let envelopes = seen.lock().unwrap();
    let received: Vec<ProcessEvent> = envelopes.iter().map(|e| e.event).collect();
    assert_eq!(received, expected);
    server.shutdown();
}

#[test]
fn garbage_is_counted_not_delivered() {
    let (mut server, seen) = collecting_server();
    let socket = std::net::UdpSocket::bind("127.0.0.1:0").unwrap();
    socket.send_to(b"abc", server.local_addr()).unwrap();
    socket.send_to(&[0, 0, 0, 99], server.local_addr()).unwrap();
    socket
        .send_to(&encode_event(ProcessEvent::Slow), server.local_addr())
        .unwrap();
    assert!(wait_until(Duration::from_secs(5), || !seen
        .lock()
        .unwrap()
        .is_empty()));
    let counters = server.counters();
    assert!(wait_until(Duration::from_secs(5), || {
        counters.received.load(Ordering::Relaxed) == 3
    }));
    assert_eq!(counters.bad_length.load(Ordering::Relaxed), 1);
    assert_eq!(counters.unknown_code.load(Ordering::Relaxed), 1);
    assert_eq!(counters.delivered.load(Ordering::Relaxed), 1);
    assert_eq!(seen.lock().unwrap().len(), 1);
    server.shutdown();
}

#[test]
fn burst_of_reports_yields_only_valid_envelopes() {
    let (mut server, seen) = collecting_server();
    let reporter = Reporter::new(server.local_addr()).unwrap();
    for k in 0..1000 {
        let event = ProcessEvent::ALL[k % ProcessEvent::ALL.len()];
        reporter.send(event).unwrap();
    }
    // UDP may drop under burst; whatever arrives must decode cleanly.
    wait_until(Duration::from_secs(5), || {
        seen.lock().unwrap().len() >= 1000
    });
    let envelopes = seen.lock().unwrap();
    assert!(envelopes.len() <= 1000);
    assert!(!envelopes.is_empty());
    for envelope in envelopes.iter() {
        assert!(ProcessEvent::ALL.contains(&envelope.event));
    }
    assert_eq!(server.counters().bad_length.load(Ordering::Relaxed), 0);
    assert_eq!(server.counters().unknown_code.load(Ordering::Relaxed), 0);
    server.shutdown();
}

#[test]
fn shutdown_is_idempotent_and_releases_the_port() {
    let (mut server, _seen) = collecting_server();
    let addr = server.local_addr();
    server.shutdown();
    server.shutdown();
    drop(server);
    // The port is free again.
    std::net::UdpSocket::bind(addr).unwrap();
}

#[test]
fn report_to_unreachable_address_is_fire_and_forget() {
    // Nothing listens here; UDP send still succeeds locally.
    let addr: std::net::SocketAddr = "127.0.0.1:9".parse().unwrap();
    report(addr, ProcessEvent::Stop).unwrap();
}

#[test]
fn source_address_identifies_the_peer() {
    let (mut server, seen) = collecting_server();
    let a = Reporter::new(server.local_addr()).unwrap();
    let b = Reporter::new(server.local_addr()).unwrap();
    a.send(ProcessEvent::Start).unwrap();
    b.send(ProcessEvent::Stop).unwrap();
    assert!(wait_until(Duration::from_secs(5), || seen.lock().unwrap().len() >= 2));
    let envelopes = seen.lock().unwrap();
    let sources: std::collections::HashSet<_> = envelopes.iter().map(|e| e.source).collect();
    assert_eq!(sources.len(), 2);
    server.shutdown();
}
