//! Cycle-level simulator for a 2D-mesh network-on-chip with permanently
//! faulty links, fault-tolerant lookahead routing, a packet-dropping Trojan
//! in the route-computation path, and a runtime shield that detects the
//! drops and shuffles traffic onto clean buffers.
//!
//! The crate exposes the simulation engine as a library; the `nocsim` binary
//! wraps it in a CLI for single runs, sweeps, and trace analysis.

pub mod analyze;
pub mod config;
pub mod metrics;
pub mod router;
pub mod routing;
pub mod sefar;
pub mod sim;
pub mod sweep;
pub mod topology;
pub mod traffic;
pub mod trojan;
