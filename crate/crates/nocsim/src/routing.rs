//! Fault-aware adaptive XY route computation with two-hop lookahead.
//!
//! The algorithm prefers minimal ports (X dimension first), never selects an
//! output whose own link is faulty, and uses the two-hop link-status view to
//! skip minimal ports whose every minimal continuation at the neighbor is
//! dead. When all minimal ports are excluded it spends from a per-packet
//! misroute budget on non-minimal hops (u-turn only as a last resort), and
//! stalls once the budget is gone.
//!
//! Two entry points share the rules: [`compute_route`] applies them verbatim
//! and drives the zero-load walker, while [`compute_route_guarded`] — used by
//! the live router, whose congestion tie-breaks can wander off the zero-load
//! path — additionally refuses any misroute from which the remaining budget
//! no longer suffices to finish the walk. A packet injected on a pair whose
//! full-budget walk succeeds therefore always retains a routable output, no
//! matter how congestion reorders its detours.

use crate::topology::{port_code, LsrView, Mesh, NodeId, Port, PortCode};

/// Inputs to one route computation.
pub struct RouteRequest<'a> {
    pub current: NodeId,
    pub dst: NodeId,
    /// Physical arrival port of the packet (Local for injected packets).
    pub in_port: Port,
    pub lsr: LsrView<'a>,
    /// Available credits per direction (N,E,S,W), used only as a tie-break.
    pub credits: [u32; 4],
    /// Remaining non-minimal hops this packet may take.
    pub misroute_left: u32,
}

/// A granted route. `code` always encodes `port`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RouteDecision {
    pub port: Port,
    pub minimal: bool,
}

impl RouteDecision {
    pub fn code(&self) -> PortCode {
        port_code(self.port)
    }
}

/// Minimal directions from `from` toward `dst`: X first, then Y. Empty when
/// already there.
pub fn minimal_dirs(mesh: &Mesh, from: NodeId, dst: NodeId) -> Vec<Port> {
    let (fx, fy) = mesh.coord(from);
    let (dx, dy) = mesh.coord(dst);
    let mut dirs = Vec::with_capacity(2);
    if dx > fx {
        dirs.push(Port::East);
    } else if dx < fx {
        dirs.push(Port::West);
    }
    if dy > fy {
        dirs.push(Port::South);
    } else if dy < fy {
        dirs.push(Port::North);
    }
    dirs
}

/// True when, within this router's two-hop view, every minimal continuation
/// from `next` toward `dst` is faulty or leads only into routers whose own
/// minimal continuations are all faulty. `next` must be a neighbor of the
/// viewing router; the recursion depth keeps all queried links inside the
/// register's distance-2 coverage.
fn dead_end_ahead(mesh: &Mesh, lsr: &LsrView<'_>, next: NodeId, dst: NodeId, depth: u32) -> bool {
    if next == dst {
        return false;
    }
    minimal_dirs(mesh, next, dst).into_iter().all(|d| {
        if lsr.link_faulty(next, d) {
            return true;
        }
        if depth <= 1 {
            return false;
        }
        let hop = mesh.neighbor(next, d).expect("minimal dir stays on the mesh");
        dead_end_ahead(mesh, lsr, hop, dst, depth - 1)
    })
}

/// Computes the output port for a packet at `current` heading to `dst`.
/// Returns None when no permitted healthy port exists this cycle (stall).
pub fn compute_route(mesh: &Mesh, req: &RouteRequest<'_>) -> Option<RouteDecision> {
    route_with_guard(mesh, req, |_, _| true)
}

/// [`compute_route`] with the deliverability guard on misroutes: a
/// non-minimal candidate (the u-turn included) survives only if the
/// zero-load walk from the neighbor it leads to, on the budget left after
/// paying for the hop, still reaches the destination. Minimal hops need no
/// guard — they coincide with the walk's own choices.
pub fn compute_route_guarded(
    topo: &crate::topology::Topology,
    req: &RouteRequest<'_>,
    cycle: u64,
) -> Option<RouteDecision> {
    route_with_guard(topo.mesh(), req, |d, next| {
        walk_route_from(topo, next, d.opposite(), req.dst, cycle, req.misroute_left - 1).is_some()
    })
}

/// Shared rule body; `permit` vets non-minimal candidates only.
fn route_with_guard(
    mesh: &Mesh,
    req: &RouteRequest<'_>,
    permit: impl Fn(Port, NodeId) -> bool,
) -> Option<RouteDecision> {
    if req.current == req.dst {
        return Some(RouteDecision {
            port: Port::Local,
            minimal: true,
        });
    }

    let usable = |d: Port| -> Option<NodeId> {
        let next = mesh.neighbor(req.current, d)?;
        if req.lsr.own_faulty(d) {
            return None;
        }
        Some(next)
    };

    // Minimal candidates in X-first order; the first that survives the
    // lookahead filter wins (X-first is the primary tie-break and minimal
    // candidates never share a dimension, so credits cannot decide here).
    let minimal = minimal_dirs(mesh, req.current, req.dst);
    for &d in &minimal {
        if let Some(next) = usable(d) {
            if !dead_end_ahead(mesh, &req.lsr, next, req.dst, 2) {
                return Some(RouteDecision {
                    port: d,
                    minimal: true,
                });
            }
        }
    }

    if req.misroute_left == 0 {
        return None;
    }

    // Non-minimal candidates: healthy, not minimal, not the u-turn (a flit
    // that arrived through the East buffer came from the East neighbor, so
    // the u-turn is `in_port` itself), not a known dead end. Most credits
    // first, then fixed port order N<E<S<W.
    let back = if req.in_port.is_directional() {
        Some(req.in_port)
    } else {
        None
    };
    let mut best: Option<(u32, Port)> = None;
    for d in Port::DIRECTIONS {
        if minimal.contains(&d) || back == Some(d) {
            continue;
        }
        if let Some(next) = usable(d) {
            if dead_end_ahead(mesh, &req.lsr, next, req.dst, 2) || !permit(d, next) {
                continue;
            }
            let credits = req.credits[d.dir_index()];
            let better = match best {
                None => true,
                Some((bc, _)) => credits > bc,
            };
            if better {
                best = Some((credits, d));
            }
        }
    }
    if let Some((_, d)) = best {
        return Some(RouteDecision {
            port: d,
            minimal: false,
        });
    }

    // Last resort: turn back where we came from, skipping the lookahead
    // filter (a dead end ahead may still beat waiting forever).
    if let Some(r) = back {
        if let Some(next) = usable(r) {
            if permit(r, next) {
                return Some(RouteDecision {
                    port: r,
                    minimal: false,
                });
            }
        }
    }

    None
}

/// Walks the deterministic full-credit route from `src` to `dst` and returns
/// the visited (router, in_port) sequence including both endpoints, or None
/// if the walk stalls or exhausts its budget. Used for zero-load analysis.
pub fn walk_route(
    topo: &crate::topology::Topology,
    src: NodeId,
    dst: NodeId,
    cycle: u64,
    misroute_budget: u32,
) -> Option<Vec<(NodeId, Port)>> {
    walk_route_from(topo, src, Port::Local, dst, cycle, misroute_budget)
}

/// [`walk_route`] starting mid-network: the packet sits at `at`, arrived
/// through `in_port`, with `misroute_budget` non-minimal hops left.
pub fn walk_route_from(
    topo: &crate::topology::Topology,
    at: NodeId,
    in_port: Port,
    dst: NodeId,
    cycle: u64,
    misroute_budget: u32,
) -> Option<Vec<(NodeId, Port)>> {
    let mesh = *topo.mesh();
    let mut at = at;
    let mut in_port = in_port;
    let mut budget = misroute_budget;
    let mut path = vec![(at, in_port)];
    // Strictly decreasing potential bounds the walk.
    let mut potential = mesh.manhattan(at, dst) + 2 * budget as usize;
    loop {
        if at == dst {
            return Some(path);
        }
        let req = RouteRequest {
            current: at,
            dst,
            in_port,
            lsr: topo.lsr(at, cycle),
            credits: [u32::MAX; 4],
            misroute_left: budget,
        };
        let dec = compute_route(&mesh, &req)?;
        if !dec.minimal {
            budget -= 1;
        }
        let next = mesh.neighbor(at, dec.port).expect("routed into a boundary");
        in_port = dec.port.opposite();
        at = next;
        path.push((at, in_port));
        let new_potential = mesh.manhattan(at, dst) + 2 * budget as usize;
        assert!(new_potential < potential, "route potential must decrease");
        potential = new_potential;
    }
}

/// Checks that every ordered traffic pair has a healthy path once all faults
/// are installed (health evaluated at the latest fault cycle). Returns the
/// unreachable pairs.
pub fn validate_reachability(
    topo: &crate::topology::Topology,
    pairs: &[(NodeId, NodeId)],
) -> Vec<(NodeId, NodeId)> {
    let mesh = topo.mesh();
    let horizon = topo
        .faults()
        .iter()
        .map(|&(_, _, c)| c)
        .max()
        .unwrap_or(0);
    // BFS reachable-set per distinct source.
    let mut srcs: Vec<NodeId> = pairs.iter().map(|&(s, _)| s).collect();
    srcs.sort_unstable();
    srcs.dedup();
    let mut reach: std::collections::BTreeMap<NodeId, Vec<bool>> = Default::default();
    for &s in &srcs {
        let mut seen = vec![false; mesh.len()];
        let mut queue = std::collections::VecDeque::new();
        seen[s] = true;
        queue.push_back(s);
        while let Some(n) = queue.pop_front() {
            for d in Port::DIRECTIONS {
                if let Some(m) = mesh.neighbor(n, d) {
                    if !seen[m] && topo.link_alive_at(n, d, horizon) {
                        seen[m] = true;
                        queue.push_back(m);
                    }
                }
            }
        }
        reach.insert(s, seen);
    }
    pairs
        .iter()
        .copied()
        .filter(|&(s, d)| !reach[&s][d])
        .collect()
}
