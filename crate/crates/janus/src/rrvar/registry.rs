//! The reflective-variable registry: cells, handles, commits and snapshot
//! reads.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use super::cell::SnapshotCell;
use super::sampler::{SamplerKind, SamplerSpec};
use super::RegistryError;
use crate::model::{Quale, QualiaClassId};
use crate::time::Clock;

/// Declaration of one reflective variable.
#[derive(Debug, Clone)]
pub struct RrVarDescriptor {
    /// Unique key in the registry, e.g. "cpu", "mplayer", "ui".
    pub name: String,
    pub class_id: QualiaClassId,
    pub sampler: SamplerSpec,
    /// Refresh period in milliseconds, at least 10.
    pub period_ms: u64,
    /// A snapshot older than this is flagged stale on read.
    pub staleness_limit_s: f64,
}

pub const MIN_PERIOD_MS: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
struct CellSnap {
    value: f64,
    timestamp: f64,
    seq: u64,
}

struct RrVarCell {
    name: String,
    class_id: QualiaClassId,
    kind: SamplerKind,
    staleness_limit_s: f64,
    registered_at: f64,
    /// Serializes committers; readers never take it.
    writer: Mutex<()>,
    snap: SnapshotCell<CellSnap>,
    rejected_commits: AtomicU64,
}

/// Shareable reference to one registered variable.
#[derive(Clone)]
pub struct RrVarHandle {
    cell: Arc<RrVarCell>,
    clock: Arc<dyn Clock>,
}

impl std::fmt::Debug for RrVarHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RrVarHandle")
            .field("name", &self.cell.name)
            .field("kind", &self.cell.kind)
            .finish()
    }
}

/// Whether a snapshot is within its staleness limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Freshness {
    Fresh,
    /// Age of the snapshot in seconds; the stale quale is still delivered.
    Stale { age: f64 },
}

impl Freshness {
    pub fn is_stale(&self) -> bool {
        matches!(self, Freshness::Stale { .. })
    }
}

/// A consistent (value, timestamp, seq) snapshot with its freshness flag.
/// `seq == 0` means no sampler has committed yet and the quale is a
/// placeholder carrying the registration time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot {
    pub quale: Quale,
    pub freshness: Freshness,
}

impl Snapshot {
    pub fn has_committed(&self) -> bool {
        self.quale.seq > 0
    }
}

impl RrVarHandle {
    pub fn name(&self) -> &str {
        &self.cell.name
    }

    pub fn class_id(&self) -> QualiaClassId {
        self.cell.class_id
    }

    pub fn kind(&self) -> SamplerKind {
        self.cell.kind
    }

    /// Latest committed quale, never blocking and never torn. Before the
    /// first commit this returns the seq-0 placeholder, flagged stale.
    pub fn read(&self) -> Snapshot {
        let snap = self.cell.snap.read();
        let quale = Quale {
            class_id: self.cell.class_id,
            value: snap.value,
            timestamp: snap.timestamp,
            seq: snap.seq,
        };
        let age = self.staleness();
        let freshness = if snap.seq == 0 || age > self.cell.staleness_limit_s {
            Freshness::Stale { age }
        } else {
            Freshness::Fresh
        };
        Snapshot { quale, freshness }
    }

    /// Commits (value, t) as one atomic snapshot with the next seq.
    ///
    /// Only the sampler bound to the variable should call this; concurrent
    /// misuse is serialized by the writer lock, so readers stay consistent
    /// either way. Range validation is sampler-kind specific and rejected
    /// values are counted, not clamped.
    pub fn commit(&self, value: f64, t: f64) -> Result<(), RegistryError> {
        let _writer = self.cell.writer.lock().unwrap();
        let last = self.cell.snap.read();
        if last.seq > 0 && t < last.timestamp {
            self.cell.rejected_commits.fetch_add(1, Ordering::Relaxed);
            return Err(RegistryError::NonMonotonicTime {
                prev: last.timestamp,
                next: t,
            });
        }
        if let Err(e) = self.cell.kind.validate(value) {
            self.cell.rejected_commits.fetch_add(1, Ordering::Relaxed);
            return Err(e);
        }
        self.cell.snap.write(CellSnap {
            value,
            timestamp: t,
            seq: last.seq + 1,
        });
        Ok(())
    }

    /// Seconds since the last commit, or since registration if nothing has
    /// been committed yet. Never negative.
    pub fn staleness(&self) -> f64 {
        self.staleness_at(self.clock.now())
    }

    pub fn staleness_at(&self, now: f64) -> f64 {
        let snap = self.cell.snap.read();
        let reference = if snap.seq == 0 {
            self.cell.registered_at
        } else {
            snap.timestamp
        };
        (now - reference).max(0.0)
    }

    /// Number of commits rejected by validation.
    pub fn rejected_commits(&self) -> u64 {
        self.cell.rejected_commits.load(Ordering::Relaxed)
    }

    pub fn commit_count(&self) -> u64 {
        self.cell.snap.read().seq
    }
}

/// Registry of reflective variables sharing one clock.
pub struct Registry {
    clock: Arc<dyn Clock>,
    vars: RwLock<HashMap<String, (Arc<RrVarCell>, RrVarDescriptor)>>,
}

impl Registry {
    pub fn new(clock: Arc<dyn Clock>) -> Self {
        Self {
            clock,
            vars: RwLock::new(HashMap::new()),
        }
    }

    pub fn clock(&self) -> Arc<dyn Clock> {
        Arc::clone(&self.clock)
    }

    /// Creates the cell for `descriptor` and returns its handle. The cell
    /// starts with the seq-0 placeholder; sampler tasks are spawned by the
    /// monitor layer (live mode) or driven manually (simulate/replay).
    pub fn register(&self, descriptor: RrVarDescriptor) -> Result<RrVarHandle, RegistryError> {
        if descriptor.period_ms < MIN_PERIOD_MS {
            return Err(RegistryError::InvalidPeriod(descriptor.period_ms));
        }
        let mut vars = self.vars.write().unwrap();
        if vars.contains_key(&descriptor.name) {
            return Err(RegistryError::DuplicateName(descriptor.name));
        }
        let now = self.clock.now();
        let cell = Arc::new(RrVarCell {
            name: descriptor.name.clone(),
            class_id: descriptor.class_id,
            kind: descriptor.sampler.kind(),
            staleness_limit_s: descriptor.staleness_limit_s,
            registered_at: now,
            writer: Mutex::new(()),
            snap: SnapshotCell::new(CellSnap {
                value: 0.0,
                timestamp: now,
                seq: 0,
            }),
            rejected_commits: AtomicU64::new(0),
        });
        vars.insert(descriptor.name.clone(), (Arc::clone(&cell), descriptor));
        Ok(RrVarHandle {
            cell,
            clock: Arc::clone(&self.clock),
        })
    }

    pub fn lookup(&self, name: &str) -> Result<RrVarHandle, RegistryError> {
        let vars = self.vars.read().unwrap();
        vars.get(name)
            .map(|(cell, _)| RrVarHandle {
                cell: Arc::clone(cell),
                clock: Arc::clone(&self.clock),
            })
            .ok_or_else(|| RegistryError::UnknownName(name.to_string()))
    }

    pub fn descriptor(&self, name: &str) -> Result<RrVarDescriptor, RegistryError> {
        let vars = self.vars.read().unwrap();
        vars.get(name)
            .map(|(_, d)| d.clone())
            .ok_or_else(|| RegistryError::UnknownName(name.to_string()))
    }

    pub fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.vars.read().unwrap().keys().cloned().collect();
        names.sort();
        names
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::VirtualClock;

    fn descriptor(name: &str, spec: SamplerSpec) -> RrVarDescriptor {
        RrVarDescriptor {
            name: name.to_string(),
            class_id: QualiaClassId::new(1),
            sampler: spec,
            period_ms: 500,
            staleness_limit_s: 2.0,
        }
    }

    fn cpu_registry() -> (Arc<VirtualClock>, Registry, RrVarHandle) {
        let clock = VirtualClock::new();
        let registry = Registry::new(clock.clone());
        let handle = registry
            .register(descriptor("cpu", SamplerSpec::CpuPercentHost))
            .unwrap();
        (clock, registry, handle)
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let (_clock, registry, _handle) = cpu_registry();
        let err = registry
            .register(descriptor("cpu", SamplerSpec::CpuPercentHost))
            .unwrap_err();
        assert_eq!(err, RegistryError::DuplicateName("cpu".to_string()));
    }

    #[test]
    fn too_small_period_is_rejected() {
        let clock = VirtualClock::new();
        let registry = Registry::new(clock);
        let mut d = descriptor("cpu", SamplerSpec::CpuPercentHost);
        d.period_ms = 9;
        assert_eq!(
            registry.register(d).unwrap_err(),
            RegistryError::InvalidPeriod(9)
        );
    }

    #[test]
    fn read_returns_latest_committed_quale() {
        let (clock, _registry, handle) = cpu_registry();
        clock.set(1.0);
        handle.commit(42.0, 1.0).unwrap();
        let snap = handle.read();
        assert_eq!(snap.quale.value, 42.0);
        assert_eq!(snap.quale.seq, 1);
        assert_eq!(snap.freshness, Freshness::Fresh);

        handle.commit(43.0, 1.2).unwrap();
        let snap = handle.read();
        assert_eq!(snap.quale.value, 43.0);
        assert_eq!(snap.quale.seq, 2);

        // No intervening commit: identical snapshot.
        assert_eq!(handle.read(), handle.read());
    }

    #[test]
    fn cpu_range_is_enforced_and_counted() {
        let (_clock, _registry, handle) = cpu_registry();
        assert_eq!(
            handle.commit(105.0, 0.1).unwrap_err(),
            RegistryError::OutOfRange {
                value: 105.0,
                kind: "cpu-percent",
            }
        );
        assert!(handle.commit(47.5, 0.1).is_err(), "cpu must be integral");
        handle.commit(0.0, 0.1).unwrap();
        handle.commit(100.0, 0.2).unwrap();
        assert_eq!(handle.rejected_commits(), 2);
        assert_eq!(handle.commit_count(), 2);
    }

    #[test]
    fn commits_must_not_go_back_in_time() {
        let (_clock, _registry, handle) = cpu_registry();
        handle.commit(10.0, 5.0).unwrap();
        assert_eq!(
            handle.commit(11.0, 4.0).unwrap_err(),
            RegistryError::NonMonotonicTime {
                prev: 5.0,
                next: 4.0,
            }
        );
        // Equal timestamps are allowed; seq still advances.
        handle.commit(11.0, 5.0).unwrap();
        assert_eq!(handle.read().quale.seq, 2);
    }

    #[test]
    fn staleness_tracks_the_clock() {
        let (clock, _registry, handle) = cpu_registry();
        clock.set(1.0);
        handle.commit(1.0, 1.0).unwrap();
        assert_eq!(handle.staleness(), 0.0);
        clock.set(3.0);
        assert_eq!(handle.staleness(), 2.0);
        assert_eq!(handle.read().freshness, Freshness::Fresh);
        clock.set(3.5);
        assert_eq!(handle.read().freshness, Freshness::Stale { age: 2.5 });
    }

    #[test]
    fn never_committed_cell_reads_stale_placeholder() {
        let (clock, _registry, handle) = cpu_registry();
        clock.set(4.0);
        let snap = handle.read();
        assert!(!snap.has_committed());
        assert_eq!(snap.quale.seq, 0);
        assert_eq!(snap.freshness, Freshness::Stale { age: 4.0 });
        assert_eq!(handle.staleness_at(4.0), 4.0);
    }

    #[test]
    fn lookup_finds_registered_vars() {
        let (_clock, registry, _handle) = cpu_registry();
        assert!(registry.lookup("cpu").is_ok());
        assert_eq!(
            registry.lookup("nope").unwrap_err(),
            RegistryError::UnknownName("nope".to_string())
        );
    }

    #[test]
    fn single_writer_many_readers_stress() {
        let (clock, _registry, handle) = cpu_registry();
        let stop = Arc::new(std::sync::atomic::AtomicBool::new(false));
        let readers: Vec<_> = (0..3)
            .map(|_| {
                let handle = handle.clone();
                let stop = Arc::clone(&stop);
                std::thread::spawn(move || {
                    let mut last_seq = 0;
                    while !stop.load(Ordering::Relaxed) {
                        let snap = handle.read();
                        // value and timestamp are committed in lockstep.
                        assert_eq!(snap.quale.value, (snap.quale.seq % 101) as f64);
                        assert_eq!(snap.quale.timestamp, snap.quale.seq as f64 * 0.001);
                        assert!(snap.quale.seq >= last_seq);
                        last_seq = snap.quale.seq;
                    }
                })
            })
            .collect();

        for k in 1..=50_000u64 {
            clock.set(k as f64 * 0.001);
            handle.commit((k % 101) as f64, k as f64 * 0.001).unwrap();
        }
        stop.store(true, Ordering::Relaxed);
        for r in readers {
            r.join().unwrap();
        }
    }
}
