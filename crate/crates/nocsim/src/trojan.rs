//! Hardware-Trojan model: a link-to-port decoder (DEC) as the trigger and
//! three multiplexers as the payload, overwriting the routing unit's
//! port-select code so packets are diverted onto a faulty output link.
//!
//! The Trojan instance binds to an input buffer (a routing-unit instance),
//! not a physical port, and carries an external kill-switch schedule (EN).

use crate::topology::{NodeId, Port, PortCode};
use std::fmt;

/// Decoder output: divert code D2D1D0 plus select bit S.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecOutput {
    pub d: PortCode,
    pub s: bool,
}

/// Link-to-port decoder. Inputs are the enable bit and the router's own
/// link-fault bits (LN, LE, LS, LW; 1 = faulty). With multiple faults the
/// highest-priority port in order N > E > S > W is selected.
pub fn dec(en: bool, ln: bool, le: bool, ls: bool, lw: bool) -> DecOutput {
    let transparent = DecOutput {
        d: PortCode::new(0b000).unwrap(),
        s: false,
    };
    if !en {
        return transparent;
    }
    let code = if ln {
        0b001
    } else if le {
        0b010
    } else if ls {
        0b011
    } else if lw {
        0b100
    } else {
        return transparent;
    };
    DecOutput {
        d: PortCode::new(code).unwrap(),
        s: true,
    }
}

/// The mux payload: transparent when S=0, otherwise replaces the routing
/// unit's code with the decoder's divert code.
pub fn ht_mux(p: PortCode, dec: DecOutput) -> PortCode {
    if dec.s {
        dec.d
    } else {
        p
    }
}

/// Observable condition of a Trojan instance at some cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriggerState {
    /// All own links healthy: the decoder never selects.
    Dormant,
    /// A link is faulty but the kill switch is off; mux stays transparent.
    Armed,
    /// Faulty link and EN high: diversion in effect.
    Active,
}

/// Cycle ranges (half-open, optionally unbounded) during which EN is high.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EnableSchedule {
    ranges: Vec<(u64, Option<u64>)>,
}

impl EnableSchedule {
    pub fn never() -> EnableSchedule {
        EnableSchedule { ranges: Vec::new() }
    }

    pub fn always() -> EnableSchedule {
        EnableSchedule {
            ranges: vec![(0, None)],
        }
    }

    pub fn from_ranges(ranges: Vec<(u64, Option<u64>)>) -> EnableSchedule {
        EnableSchedule { ranges }
    }

    /// Parses `start..end[,start..end...]`; an omitted end means unbounded.
    pub fn parse(text: &str) -> Result<EnableSchedule, String> {
        let mut ranges = Vec::new();
        for part in text.split(',') {
            let part = part.trim();
            let (a, b) = part
                .split_once("..")
                .ok_or_else(|| format!("enable range '{part}' is not of the form start..end"))?;
            let start: u64 = a
                .trim()
                .parse()
                .map_err(|_| format!("bad range start '{a}'"))?;
            let end = if b.trim().is_empty() {
                None
            } else {
                let e: u64 = b
                    .trim()
                    .parse()
                    .map_err(|_| format!("bad range end '{b}'"))?;
                if e <= start {
                    return Err(format!("empty enable range '{part}'"));
                }
                Some(e)
            };
            ranges.push((start, end));
        }
        if ranges.is_empty() {
            return Err("empty enable schedule".to_string());
        }
        Ok(EnableSchedule { ranges })
    }

    pub fn active(&self, cycle: u64) -> bool {
        self.ranges
            .iter()
            .any(|&(s, e)| cycle >= s && e.map_or(true, |e| cycle < e))
    }

    pub fn is_never(&self) -> bool {
        self.ranges.is_empty()
    }
}

impl fmt::Display for EnableSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ranges.is_empty() {
            return write!(f, "never");
        }
        for (i, (s, e)) in self.ranges.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            match e {
                Some(e) => write!(f, "{s}..{e}")?,
                None => write!(f, "{s}..")?,
            }
        }
        Ok(())
    }
}

/// One Trojan: infected (router, input buffer) plus its kill-switch schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrojanInstance {
    pub router: NodeId,
    /// Input-buffer index 1..=5 (N,E,S,W,Local).
    pub buffer: usize,
    pub enable: EnableSchedule,
}

impl TrojanInstance {
    pub fn home_port(&self) -> Port {
        Port::from_buffer_index(self.buffer).expect("buffer index validated at config time")
    }

    pub fn trigger_state(&self, own_bits: [bool; 4], cycle: u64) -> TriggerState {
        trigger_state(own_bits, self.enable.active(cycle))
    }
}

/// Trigger condition from the router's own link bits and the EN level.
pub fn trigger_state(own_bits: [bool; 4], en: bool) -> TriggerState {
    let any_fault = own_bits.iter().any(|&b| b);
    match (any_fault, en) {
        (false, _) => TriggerState::Dormant,
        (true, false) => TriggerState::Armed,
        (true, true) => TriggerState::Active,
    }
}
