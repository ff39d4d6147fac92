//! Per-router microarchitectural state: virtual-channel input lanes, credit
//! counters toward each neighbor, round-robin allocator pointers, and the
//! per-router mitigation block.
//!
//! Lane indexing is port-major: lane `(buffer_index(port) - 1) * vcs + vc`,
//! with ports in buffer order N, E, S, W, Local.

use std::collections::VecDeque;

use crate::sefar::SefarRouter;
use crate::topology::{NodeId, Port};

/// Flit position within a packet. Single-flit packets carry `HeadTail`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlitKind {
    Head,
    Body,
    Tail,
    HeadTail,
}

impl FlitKind {
    pub fn is_head(self) -> bool {
        matches!(self, FlitKind::Head | FlitKind::HeadTail)
    }

    pub fn is_tail(self) -> bool {
        matches!(self, FlitKind::Tail | FlitKind::HeadTail)
    }
}

/// Kind of the `i`-th flit (0-based) of a packet with `length` flits.
pub fn flit_kind(i: u32, length: u32) -> FlitKind {
    debug_assert!(i < length && length > 0);
    if length == 1 {
        FlitKind::HeadTail
    } else if i == 0 {
        FlitKind::Head
    } else if i == length - 1 {
        FlitKind::Tail
    } else {
        FlitKind::Body
    }
}

/// One flow-control unit moving through the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Flit {
    pub kind: FlitKind,
    pub packet: u64,
    pub dst: NodeId,
    /// Cycle this flit was written into its current buffer.
    pub arrived_at: u64,
}

/// Whole-run bookkeeping for one packet.
#[derive(Debug, Clone)]
pub struct Packet {
    pub id: u64,
    pub src: NodeId,
    pub dst: NodeId,
    pub length: u32,
    /// Creation cycle; the first flit enters the source lane one cycle later.
    pub inject_cycle: u64,
    /// Cycle the tail flit left the destination's Local port.
    pub eject_cycle: Option<u64>,
    pub dropped: bool,
    /// Remaining non-minimal hops.
    pub misroute_left: u32,
    /// Livelock guard: distance-to-go plus twice the remaining budget, must
    /// strictly decrease on every hop.
    pub potential: usize,
    /// Created inside the measurement window.
    pub measured: bool,
}

impl Packet {
    pub fn resolved(&self) -> bool {
        self.dropped || self.eject_cycle.is_some()
    }
}

/// One virtual-channel FIFO with its pipeline state. A lane holds flits of at
/// most one packet at a time (upstream allocation requires a fully drained
/// buffer), so the stream fields are unambiguous.
#[derive(Debug, Clone)]
pub struct Lane {
    pub fifo: VecDeque<Flit>,
    /// Serving buffer group 1..=5 stamped when a head flit is written (the
    /// shuffler steers at write time); selects the routing-unit instance.
    pub group: usize,
    /// Routed output port for the current head, after any Trojan diversion.
    pub out: Option<Port>,
    /// The latched route was minimal (no misroute budget spent).
    pub minimal: bool,
    /// Downstream VC granted by VC allocation.
    pub out_vc: Option<usize>,
    /// Head flit has won switch allocation; body flits follow unchecked.
    pub head_granted: bool,
    /// This lane holds the downstream VC reservation (released at tail).
    pub held_set: bool,
    /// Packet whose stream currently owns this lane.
    pub cur_packet: Option<u64>,
    /// Earliest cycle the head may request VC allocation (arrival + 1).
    pub va_eligible_at: u64,
}

impl Lane {
    fn new(group: usize) -> Lane {
        Lane {
            fifo: VecDeque::new(),
            group,
            out: None,
            minimal: true,
            out_vc: None,
            head_granted: false,
            held_set: false,
            cur_packet: None,
            va_eligible_at: 0,
        }
    }

    /// No stream in progress and nothing buffered.
    pub fn idle(&self) -> bool {
        self.fifo.is_empty() && !self.head_granted && self.out.is_none()
    }

    /// Clears all per-stream state after the tail leaves (or the stream is
    /// abandoned). The group stamp stays until the next head is written.
    pub fn reset_stream(&mut self) {
        self.out = None;
        self.minimal = true;
        self.out_vc = None;
        self.head_granted = false;
        self.held_set = false;
        self.cur_packet = None;
    }
}

/// Full state of one router.
#[derive(Debug, Clone)]
pub struct RouterState {
    pub lanes: Vec<Lane>,
    /// Credits toward each neighbor, per direction per downstream VC.
    pub credits: [Vec<u32>; 4],
    /// Downstream VC currently reserved by one of this router's lanes.
    pub held: [Vec<bool>; 4],
    /// Per input port: round-robin pointer over its VCs.
    pub in_rr: [usize; 5],
    /// Per output port (buffer order): round-robin pointer over input ports.
    pub out_rr: [usize; 5],
    pub sefar: SefarRouter,
}

impl RouterState {
    pub fn new(vcs: usize, buffer_depth: u32) -> RouterState {
        let mut lanes = Vec::with_capacity(5 * vcs);
        for port in Port::ALL {
            for _ in 0..vcs {
                lanes.push(Lane::new(port.buffer_index()));
            }
        }
        RouterState {
            lanes,
            credits: std::array::from_fn(|_| vec![buffer_depth; vcs]),
            held: std::array::from_fn(|_| vec![false; vcs]),
            in_rr: [0; 5],
            out_rr: [0; 5],
            sefar: SefarRouter::new(),
        }
    }

    /// Port-major lane index.
    pub fn lane_index(port: Port, vc: usize, vcs: usize) -> usize {
        (port.buffer_index() - 1) * vcs + vc
    }

    /// Inverse of [`RouterState::lane_index`].
    pub fn lane_port(lane: usize, vcs: usize) -> (Port, usize) {
        let port = Port::from_buffer_index(lane / vcs + 1).expect("lane index in range");
        (port, lane % vcs)
    }
}
