//! Janus: a trust monitor built on fidelity drift.
//!
//! The library watches the agreement between raw facts in the physical/user
//! domain and their cyber representations (qualia), quantifies the drift of
//! that agreement over time, and drives a Monitor-Analyze-Plan-Execute loop
//! that classifies the system on a four-state resilience scale and executes
//! safety actions.
//!
//! Layers, bottom up:
//!
//! * [`model`] — qualia, reflective maps, homomorphism checks, drift series
//!   and drift-class classification.
//! * [`rrvar`] — reflective variables: named cells refreshed asynchronously
//!   by samplers and read without blocking.
//! * [`wire`] — the UDP protocol by which instrumented processes report
//!   their state codes.
//! * [`behavior`] — user-behavior profiling and anomaly detection over
//!   event streams.
//! * [`trust`] — fidelity scores, the resilience scale, action planning and
//!   auditable execution.
//! * [`app`] — configuration, the monitoring daemon, scenario simulation
//!   and trace replay.

pub mod app;
pub mod behavior;
pub mod model;
pub mod rrvar;
pub mod time;
pub mod trust;
pub mod wire;
