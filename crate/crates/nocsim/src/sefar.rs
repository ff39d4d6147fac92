//! Runtime mitigation stack: an authentication unit (AU) that flags port
//! codes targeting faulty links, per-port control-unit (CU) counters that
//! move traffic to uncompromised buffers, and the induced buffer-shuffler
//! permutation, plus allocator quarantine of compromised buffers.
//!
//! Buffer identities ("serving groups") 1..=5 extend the port codes with
//! 101 for the Local buffer, so a CU state is a value in 1..=5 rendered as a
//! 3-bit code. Physical flit storage never moves; the group label on a lane
//! selects which routing-unit instance serves it, which is where Trojan
//! infection binds.

use crate::topology::{Port, PortCode};

/// Authentication check: F=1 iff the code selects a port whose own outbound
/// link is faulty. Local (000) never flags; there is no local link.
pub fn au_check(own_bits: [bool; 4], a: PortCode) -> bool {
    match a.bits() {
        0b001 => own_bits[0],
        0b010 => own_bits[1],
        0b011 => own_bits[2],
        0b100 => own_bits[3],
        _ => false,
    }
}

/// One per-port control unit: a modulo-5 counter seeded with the home buffer
/// index, enabled by the first warning flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CuState {
    /// Home buffer index 1..=5 (the port's own buffer).
    pub seed: usize,
    /// Current output state, a buffer index 1..=5.
    pub z: usize,
    pub enabled: bool,
}

impl CuState {
    pub fn new(seed: usize) -> CuState {
        debug_assert!((1..=5).contains(&seed));
        CuState {
            seed,
            z: seed,
            enabled: false,
        }
    }

    /// The 3-bit rendering of a buffer index (001..101).
    pub fn code_of(z: usize) -> String {
        format!("{z:03b}")
    }
}

fn succ(z: usize) -> usize {
    z % 5 + 1
}

/// Advances one control unit by one cycle. `busy` is indexed by buffer-1 and
/// must already reflect other CUs' claims and compromised buffers (the CU's
/// own claim masked out). Returns the new state and whether the all-busy
/// alarm fired this step.
///
/// The scan lands on the next free state in one step (walking through busy
/// states one cycle at a time would transiently collide two enabled CUs on
/// one state). When every other buffer is busy the CU holds and alarms; on
/// the enable step it also stays disabled, so enabled CUs always sit on
/// pairwise-distinct claims.
pub fn cu_step(cu: CuState, f: bool, busy: [bool; 5]) -> (CuState, bool) {
    if !cu.enabled && !f {
        return (cu, false);
    }
    if cu.enabled && !busy[cu.z - 1] {
        // Settled on a free buffer: hold.
        return (cu, false);
    }
    // Vacating the current state: first flag, or the claimed buffer became
    // busy underneath us.
    let mut candidate = succ(cu.z);
    for _ in 0..4 {
        if !busy[candidate - 1] {
            return (
                CuState {
                    z: candidate,
                    enabled: true,
                    ..cu
                },
                false,
            );
        }
        candidate = succ(candidate);
    }
    (cu, true)
}

/// Why a buffer is busy, for the controller's bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BusyFlags(pub [bool; 5]);

/// Per-router mitigation state: latched warning flags, five CUs, compromise
/// and quarantine marks per buffer, and the induced port->buffer mapping.
#[derive(Debug, Clone)]
pub struct SefarRouter {
    /// Latched warning flag per input port (buffer order N,E,S,W,L).
    pub f_latched: [bool; 5],
    /// Flags raised at switch allocation this cycle; CUs see them next cycle.
    pending_f: [bool; 5],
    /// One CU per port, seeded with the port's buffer index.
    pub cus: [CuState; 5],
    /// Buffer confirmed compromised (AU fired on a packet it served).
    pub compromised: [bool; 5],
    /// Buffer masked from switch allocation.
    pub quarantined: [bool; 5],
    /// Induced permutation: port (buffer order) -> serving buffer index 1..=5.
    pub mapping: [usize; 5],
    /// All-busy alarm count, for observability.
    pub alarms: u64,
}

/// A state change produced by the controller, for event logging.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CuShift {
    pub port: Port,
    pub old_z: usize,
    pub new_z: usize,
}

impl Default for SefarRouter {
    fn default() -> Self {
        SefarRouter::new()
    }
}

impl SefarRouter {
    pub fn new() -> SefarRouter {
        SefarRouter {
            f_latched: [false; 5],
            pending_f: [false; 5],
            cus: [
                CuState::new(1),
                CuState::new(2),
                CuState::new(3),
                CuState::new(4),
                CuState::new(5),
            ],
            compromised: [false; 5],
            quarantined: [false; 5],
            mapping: [1, 2, 3, 4, 5],
            alarms: 0,
        }
    }

    /// The serving buffer for packets arriving at `port`.
    pub fn group_for(&self, port: Port) -> usize {
        self.mapping[port.buffer_index() - 1]
    }

    /// Records an AU violation for a packet that arrived at `port` and is
    /// served by buffer `group`. Returns true when this is the port's first
    /// flag (the au_flag event should be logged once per port).
    pub fn raise(&mut self, port: Port, group: usize) -> bool {
        self.compromised[group - 1] = true;
        self.quarantined[group - 1] = true;
        let idx = port.buffer_index() - 1;
        let first = !self.f_latched[idx] && !self.pending_f[idx];
        self.pending_f[idx] = true;
        first
    }

    /// Busy view for the CU at `viewer` (ports in buffer order): compromised
    /// buffers plus buffers claimed by other enabled CUs. The viewer's own
    /// claim is masked so a settled CU holds its state.
    fn busy_for(&self, viewer: usize) -> [bool; 5] {
        let mut busy = self.compromised;
        for (i, cu) in self.cus.iter().enumerate() {
            if i != viewer && cu.enabled {
                busy[cu.z - 1] = true;
            }
        }
        busy
    }

    /// One controller cycle: merge pending flags, step each CU in port order,
    /// and rebuild the induced mapping. Returns the state changes.
    pub fn control_step(&mut self) -> Vec<CuShift> {
        let mut shifts = Vec::new();
        for i in 0..5 {
            if self.pending_f[i] {
                self.f_latched[i] = true;
                self.pending_f[i] = false;
            }
            let busy = self.busy_for(i);
            let (next, alarm) = cu_step(self.cus[i], self.f_latched[i], busy);
            if alarm {
                self.alarms += 1;
            }
            if next.z != self.cus[i].z {
                shifts.push(CuShift {
                    port: Port::from_buffer_index(i + 1).unwrap(),
                    old_z: self.cus[i].z,
                    new_z: next.z,
                });
            }
            self.cus[i] = next;
        }
        if !shifts.is_empty() {
            self.rebuild_mapping();
        }
        shifts
    }

    /// Induced bijection: enabled CUs take their claimed buffer; disabled CUs
    /// keep their home unless claimed, and displaced homes receive the
    /// leftover buffers in port order.
    fn rebuild_mapping(&mut self) {
        let mut taken = [false; 5];
        let mut mapping = [0usize; 5];
        for (i, cu) in self.cus.iter().enumerate() {
            if cu.enabled {
                debug_assert!(!taken[cu.z - 1], "two enabled CUs share a state");
                mapping[i] = cu.z;
                taken[cu.z - 1] = true;
            }
        }
        for (i, cu) in self.cus.iter().enumerate() {
            if !cu.enabled && !taken[cu.seed - 1] {
                mapping[i] = cu.seed;
                taken[cu.seed - 1] = true;
            }
        }
        for i in 0..5 {
            if mapping[i] == 0 {
                let g = taken
                    .iter()
                    .position(|&t| !t)
                    .expect("five buffers for five ports")
                    + 1;
                mapping[i] = g;
                taken[g - 1] = true;
            }
        }
        self.mapping = mapping;
    }

    /// Pairwise-distinct z values over enabled CUs, and the mapping is a
    /// bijection. Audit hook.
    pub fn check_invariants(&self) {
        let mut seen = [false; 5];
        for cu in &self.cus {
            if cu.enabled {
                assert!(!seen[cu.z - 1], "enabled CU states collide");
                seen[cu.z - 1] = true;
            }
        }
        let mut hit = [false; 5];
        for &g in &self.mapping {
            assert!((1..=5).contains(&g));
            assert!(!hit[g - 1], "mapping is not a bijection");
            hit[g - 1] = true;
        }
    }

    /// Lowest-index non-quarantined buffer, if any.
    pub fn lowest_clean_group(&self) -> Option<usize> {
        (1..=5).find(|&g| !self.quarantined[g - 1])
    }
}
