//! Event records, the abstract energy model, per-run metrics, and the
//! Trojan-insertion planner that ranks buffers by observed traffic share.

use crate::topology::{NodeId, Port};

/// Kinds of logged simulation events.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Inject,
    Hop,
    Drop,
    Eject,
    AuFlag,
    CuShift,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Inject => "inject",
            EventKind::Hop => "hop",
            EventKind::Drop => "drop",
            EventKind::Eject => "eject",
            EventKind::AuFlag => "au_flag",
            EventKind::CuShift => "cu_shift",
        }
    }
}

/// Header for event CSV output.
pub const EVENT_HEADER: &str = "cycle,event,packet_id,router,detail";

/// One logged event. Events are buffered during the run and stable-sorted by
/// cycle at the end, so effects scheduled for future cycles (drops, ejects)
/// appear in order.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub cycle: u64,
    pub kind: EventKind,
    /// Absent for router-level events (au_flag, cu_shift).
    pub packet: Option<u64>,
    pub router: Option<NodeId>,
    /// Space-separated `key=value` extras; never contains commas.
    pub detail: String,
}

impl Event {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.cycle,
            self.kind.name(),
            self.packet.map(|p| p.to_string()).unwrap_or_default(),
            self.router.map(|r| r.to_string()).unwrap_or_default(),
            self.detail
        )
    }
}

/// Per-event energy coefficients in arbitrary units. Absolute values carry no
/// meaning; only orderings and trends across runs do.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel {
    /// Per flit written into any input buffer.
    pub e_buffer_write: f64,
    /// Per route computation latched.
    pub e_route: f64,
    /// Per switch-allocator grant (crossbar traversal).
    pub e_xbar: f64,
    /// Per flit traversing a healthy inter-router link.
    pub e_link: f64,
    /// Static draw per router per cycle of the measurement window.
    pub p_static: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel {
            e_buffer_write: 1.0,
            e_route: 0.2,
            e_xbar: 0.6,
            e_link: 1.0,
            p_static: 2.0,
        }
    }
}

/// Aggregated results of one run. Packet counts and latency cover packets
/// created inside the measurement window; throughput and energy cover
/// activity whose cycle falls inside the window.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub config: String,
    pub seed: u64,
    pub pir: f64,
    pub injected: u64,
    pub delivered: u64,
    pub dropped: u64,
    /// Average packet latency in cycles over delivered packets.
    pub apl: f64,
    /// Ejected flits per node per cycle.
    pub throughput: f64,
    pub energy: f64,
    /// Energy rate times APL (power-latency product), trend-level only.
    pub plp: f64,
    /// Share of all measured flit-hops per directed link, percent.
    pub link_util: Vec<(NodeId, Port, f64)>,
    /// Per router: (injected + ejected) / (2 * injected total), percent.
    pub router_injeject: Vec<f64>,
    /// Measured head-flit arrivals per router per input buffer (N,E,S,W,L).
    pub port_traffic: Vec<[u64; 5]>,
}

impl MetricsReport {
    pub fn drop_ratio(&self) -> f64 {
        if self.injected == 0 {
            0.0
        } else {
            self.dropped as f64 / self.injected as f64
        }
    }

    pub fn csv_header() -> &'static str {
        "config,seed,pir,injected,delivered,dropped,drop_ratio,apl,throughput,energy,plp"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.6},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.config,
            self.seed,
            self.pir,
            self.injected,
            self.delivered,
            self.dropped,
            self.drop_ratio(),
            self.apl,
            self.throughput,
            self.energy,
            self.plp
        )
    }
}

/// A ranked Trojan insertion candidate: the estimate is the fraction of all
/// injected packets whose head traversed this input buffer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub router: NodeId,
    /// Input-buffer index 1..=5 (N,E,S,W,Local).
    pub buffer: usize,
    pub estimate: f64,
}

/// Ranks (router, buffer) insertion points by traversal count, descending;
/// ties resolve to the lower (router, buffer). Returns at most `k` entries.
pub fn plan_attack(port_traffic: &[[u64; 5]], injected: u64, k: usize) -> Vec<Placement> {
    let mut rows: Vec<(u64, NodeId, usize)> = Vec::with_capacity(port_traffic.len() * 5);
    for (router, counts) in port_traffic.iter().enumerate() {
        for (i, &count) in counts.iter().enumerate() {
            rows.push((count, router, i + 1));
        }
    }
    rows.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    rows.truncate(k);
    rows.into_iter()
        .map(|(count, router, buffer)| Placement {
            router,
            buffer,
            estimate: if injected == 0 {
                0.0
            } else {
                count as f64 / injected as f64
            },
        })
        .collect()
}
