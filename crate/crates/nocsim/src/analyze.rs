//! Offline event-log analysis: reconstructs per-router, per-buffer head-flit
//! arrival counts from an event CSV and ranks input buffers as Trojan
//! placement candidates — the attack-planning view of a traffic profile.

use crate::metrics::{plan_attack, Placement, EVENT_HEADER};
use crate::topology::Port;

/// Replays an event CSV into `(per-router [N,E,S,W,Local] head arrivals,
/// injected packet count)`. Injections count as Local arrivals; hop events
/// count at the downstream router's receiving buffer.
pub fn replay_port_traffic(log: &str) -> Result<(Vec<[u64; 5]>, u64), String> {
    let mut traffic: Vec<[u64; 5]> = Vec::new();
    let mut injected = 0u64;
    let grow = |t: &mut Vec<[u64; 5]>, router: usize| {
        if t.len() <= router {
            t.resize(router + 1, [0; 5]);
        }
    };
    for (ln, line) in log.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line == EVENT_HEADER {
            continue;
        }
        let fields: Vec<&str> = line.splitn(5, ',').collect();
        if fields.len() != 5 {
            return Err(format!("line {}: expected 5 fields", ln + 1));
        }
        let event = fields[1];
        let router: usize = fields[3]
            .parse()
            .map_err(|_| format!("line {}: bad router '{}'", ln + 1, fields[3]))?;
        match event {
            "inject" => {
                grow(&mut traffic, router);
                traffic[router][4] += 1;
                injected += 1;
            }
            "hop" => {
                let detail = fields[4];
                let mut out = None;
                let mut next = None;
                for part in detail.split_whitespace() {
                    if let Some(v) = part.strip_prefix("out=") {
                        out = v.chars().next().and_then(Port::from_letter);
                    } else if let Some(v) = part.strip_prefix("next=") {
                        next = v.parse::<usize>().ok();
                    }
                }
                let (out, next) = match (out, next) {
                    (Some(o), Some(n)) => (o, n),
                    _ => return Err(format!("line {}: bad hop detail '{detail}'", ln + 1)),
                };
                grow(&mut traffic, next);
                traffic[next][out.opposite().buffer_index() - 1] += 1;
            }
            _ => {}
        }
    }
    Ok((traffic, injected))
}

/// Ranks the `k` busiest input buffers from an event log.
pub fn plan_attack_from_log(log: &str, k: usize) -> Result<Vec<Placement>, String> {
    let (traffic, injected) = replay_port_traffic(log)?;
    Ok(plan_attack(&traffic, injected, k))
}
