//! Cycle-level engine: a five-stage wormhole pipeline (buffer write, route
//! computation, VC allocation, switch allocation, link traversal) with
//! credit-based flow control, runtime link faults, Trojan diversion of
//! routed heads into dead links, and the runtime mitigation stack.
//!
//! Cycle structure. Phase A applies arrivals scheduled by earlier cycles:
//! ejections and link deliveries, credit returns, source streaming (one flit
//! per node per cycle), then packet creation. Phase B steps every router:
//! mitigation controller, switch allocation, VC allocation, route
//! computation. Phase C reclaims lanes orphaned by drops and, in debug
//! builds, audits credit conservation per healthy link.
//!
//! Timing: a flit written at cycle t may win switch allocation at t+2 and is
//! written downstream at t+5, so a router hop costs five cycles and zero-load
//! packet latency is 5*routers + length - 1 measured from creation (the first
//! flit enters the source lane one cycle after creation).

use std::collections::VecDeque;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{ConfigError, ScenarioConfig};
use crate::metrics::{Event, EventKind, MetricsReport};
use crate::router::{flit_kind, Flit, Packet, RouterState};
use crate::routing::{compute_route_guarded, RouteRequest};
use crate::sefar::{au_check, CuState};
use crate::topology::{port_code, NodeId, Port, Topology};
use crate::traffic::{pattern_dst, TrafficSpec};
use crate::trojan::{dec, ht_mux, trigger_state, TriggerState};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Validation(#[from] ConfigError),
    #[error(
        "watchdog: no flit movement for {window} cycles (cycle {cycle}, {in_flight} packets in flight)"
    )]
    Watchdog {
        cycle: u64,
        window: u64,
        in_flight: u64,
    },
}

/// An in-flight stream from a node's source queue into a Local lane.
#[derive(Debug, Clone, Copy)]
struct Stream {
    packet: u64,
    lane: usize,
    sent: u32,
}

#[derive(Debug, Default)]
struct Source {
    queue: VecDeque<u64>,
    active: Option<Stream>,
}

/// One simulation run over a scenario. Build, optionally enable event
/// logging, call [`Engine::run`], then read [`Engine::report`].
pub struct Engine {
    cfg: ScenarioConfig,
    topo: Topology,
    routers: Vec<RouterState>,
    packets: Vec<Packet>,
    sources: Vec<Source>,
    /// Flits in flight per directed link `node*4 + dir`: (arrival, flit, vc).
    link_flits: Vec<VecDeque<(u64, Flit, usize)>>,
    /// Credits returning upstream per directed link: (arrival, vc).
    link_credits: Vec<VecDeque<(u64, usize)>>,
    /// Flits between crossbar and sink per node: (arrival, flit).
    eject_pipe: Vec<VecDeque<(u64, Flit)>>,
    /// Trojan index bound to (router, serving buffer - 1), if any.
    trojan_at: Vec<[Option<usize>; 5]>,
    rng: ChaCha8Rng,
    cycle: u64,
    in_flight: u64,
    trace_pos: usize,
    injected: u64,
    delivered: u64,
    dropped: u64,
    latency_sum: u64,
    flits_ejected: u64,
    energy_dyn: f64,
    /// Measured-window flit traversals per directed link.
    link_hops: Vec<u64>,
    /// Measured head-flit arrivals per router per buffer (N,E,S,W,L).
    port_traffic: Vec<[u64; 5]>,
    inj_count: Vec<u64>,
    ej_count: Vec<u64>,
    events: Vec<Event>,
    log_events: bool,
    moved: bool,
    last_movement: u64,
}

impl Engine {
    /// Validates the scenario and builds a ready-to-run engine.
    pub fn new(cfg: ScenarioConfig) -> Result<Engine, SimError> {
        cfg.validate()?;
        let topo = cfg.build_topology()?;
        let n = topo.mesh().len();
        let mut trojan_at = vec![[None; 5]; n];
        for (i, t) in cfg.trojans.iter().enumerate() {
            trojan_at[t.router][t.buffer - 1] = Some(i);
        }
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Ok(Engine {
            routers: (0..n)
                .map(|_| RouterState::new(cfg.vcs, cfg.buffer_depth))
                .collect(),
            packets: Vec::new(),
            sources: (0..n).map(|_| Source::default()).collect(),
            link_flits: (0..n * 4).map(|_| VecDeque::new()).collect(),
            link_credits: (0..n * 4).map(|_| VecDeque::new()).collect(),
            eject_pipe: (0..n).map(|_| VecDeque::new()).collect(),
            trojan_at,
            rng,
            cycle: 0,
            in_flight: 0,
            trace_pos: 0,
            injected: 0,
            delivered: 0,
            dropped: 0,
            latency_sum: 0,
            flits_ejected: 0,
            energy_dyn: 0.0,
            link_hops: vec![0; n * 4],
            port_traffic: vec![[0; 5]; n],
            inj_count: vec![0; n],
            ej_count: vec![0; n],
            events: Vec::new(),
            log_events: false,
            moved: false,
            last_movement: 0,
            topo,
            cfg,
        })
    }

    /// Turns per-packet event logging on (off by default; counters always run).
    pub fn set_event_log(&mut self, on: bool) {
        self.log_events = on;
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn packets(&self) -> &[Packet] {
        &self.packets
    }

    /// Events sorted by cycle; populated only when logging is enabled.
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn cycles_run(&self) -> u64 {
        self.cycle
    }

    /// Current port->buffer mapping at one router.
    pub fn sefar_mapping(&self, router: NodeId) -> [usize; 5] {
        self.routers[router].sefar.mapping
    }

    /// Total all-busy controller alarms across routers.
    pub fn sefar_alarms(&self) -> u64 {
        self.routers.iter().map(|r| r.sefar.alarms).sum()
    }

    fn horizon(&self) -> u64 {
        self.cfg.warmup + self.cfg.measure
    }

    fn in_window(&self, cycle: u64) -> bool {
        cycle >= self.cfg.warmup && cycle < self.horizon()
    }

    /// Runs to completion: traffic stops at the measurement horizon and the
    /// run drains until every created packet is delivered or dropped.
    pub fn run(&mut self) -> Result<(), SimError> {
        loop {
            let traffic_pending = match &self.cfg.traffic {
                TrafficSpec::Pattern(_) => self.cycle < self.horizon(),
                TrafficSpec::Trace(records) => self.trace_pos < records.len(),
            };
            if !traffic_pending && self.in_flight == 0 {
                break;
            }
            self.step()?;
        }
        self.events.sort_by_key(|e| e.cycle);
        Ok(())
    }

    fn step(&mut self) -> Result<(), SimError> {
        let now = self.cycle;
        self.moved = false;
        self.deliver(now);
        self.commit_credits(now);
        self.stream_sources(now);
        self.create_traffic(now);
        for r in 0..self.topo.mesh().len() {
            self.router_cycle(r, now);
        }
        self.sweep_orphans(now);
        #[cfg(debug_assertions)]
        self.audit(now);
        if self.moved || self.in_flight == 0 {
            self.last_movement = now;
        } else if now - self.last_movement >= self.cfg.watchdog {
            return Err(SimError::Watchdog {
                cycle: now,
                window: self.cfg.watchdog,
                in_flight: self.in_flight,
            });
        }
        self.cycle = now + 1;
        Ok(())
    }

    /// Phase A1: sink arrivals and link arrivals scheduled for this cycle.
    fn deliver(&mut self, now: u64) {
        let n = self.topo.mesh().len();
        let vcs = self.cfg.vcs;
        for node in 0..n {
            while let Some(&(t, _)) = self.eject_pipe[node].front() {
                if t != now {
                    debug_assert!(t > now);
                    break;
                }
                let (_, flit) = self.eject_pipe[node].pop_front().unwrap();
                self.moved = true;
                let pid = flit.packet as usize;
                if self.packets[pid].dropped {
                    // Severed-stream remnant; the packet already resolved.
                    continue;
                }
                if self.in_window(now) {
                    self.flits_ejected += 1;
                }
                if flit.kind.is_tail() {
                    self.packets[pid].eject_cycle = Some(now);
                    self.in_flight -= 1;
                    let (src, lat, measured) = {
                        let p = &self.packets[pid];
                        (p.src, now - p.inject_cycle, p.measured)
                    };
                    if measured {
                        self.delivered += 1;
                        self.latency_sum += lat;
                        self.ej_count[node] += 1;
                    }
                    if self.log_events {
                        self.events.push(Event {
                            cycle: now,
                            kind: EventKind::Eject,
                            packet: Some(flit.packet),
                            router: Some(node),
                            detail: format!("src={src} lat={lat}"),
                        });
                    }
                }
            }
            for dir in Port::DIRECTIONS {
                let pipe = node * 4 + dir.dir_index();
                loop {
                    let Some(&(t, flit, dvc)) = self.link_flits[pipe].front() else {
                        break;
                    };
                    if t != now {
                        debug_assert!(t > now);
                        break;
                    }
                    self.link_flits[pipe].pop_front();
                    self.moved = true;
                    let pid = flit.packet as usize;
                    if self.packets[pid].dropped {
                        // Discard and free the buffer slot reserved upstream.
                        self.link_credits[pipe].push_back((now + 2, dvc));
                        continue;
                    }
                    let dst_node = self.topo.mesh().neighbor(node, dir).unwrap();
                    let in_port = dir.opposite();
                    let li = RouterState::lane_index(in_port, dvc, vcs);
                    let group = if self.cfg.sefar {
                        self.routers[dst_node].sefar.group_for(in_port)
                    } else {
                        in_port.buffer_index()
                    };
                    let measured = self.packets[pid].measured;
                    let mut f = flit;
                    f.arrived_at = now;
                    let lane = &mut self.routers[dst_node].lanes[li];
                    if f.kind.is_head() {
                        debug_assert!(
                            lane.fifo.is_empty() && !lane.head_granted,
                            "head written into a busy lane"
                        );
                        lane.group = group;
                        lane.va_eligible_at = now + 1;
                        lane.cur_packet = Some(f.packet);
                        if measured {
                            self.port_traffic[dst_node][in_port.buffer_index() - 1] += 1;
                        }
                    } else {
                        debug_assert_eq!(lane.cur_packet, Some(f.packet));
                    }
                    lane.fifo.push_back(f);
                    if self.in_window(now) {
                        self.energy_dyn += self.cfg.energy.e_buffer_write;
                    }
                }
            }
        }
    }

    /// Phase A2: credit returns scheduled for this cycle.
    fn commit_credits(&mut self, now: u64) {
        let n = self.topo.mesh().len();
        for node in 0..n {
            for dir in Port::DIRECTIONS {
                let pipe = node * 4 + dir.dir_index();
                while let Some(&(t, vc)) = self.link_credits[pipe].front() {
                    if t != now {
                        debug_assert!(t > now);
                        break;
                    }
                    self.link_credits[pipe].pop_front();
                    let c = &mut self.routers[node].credits[dir.dir_index()][vc];
                    *c += 1;
                    debug_assert!(*c <= self.cfg.buffer_depth);
                }
            }
        }
    }

    /// Phase A3: each node pushes at most one flit of its current packet into
    /// its Local lane.
    fn stream_sources(&mut self, now: u64) {
        let n = self.topo.mesh().len();
        let vcs = self.cfg.vcs;
        let depth = self.cfg.buffer_depth;
        for node in 0..n {
            if self.sources[node].active.is_none() {
                if let Some(&pid) = self.sources[node].queue.front() {
                    let free = (0..vcs).find(|&vc| {
                        self.routers[node].lanes[RouterState::lane_index(Port::Local, vc, vcs)]
                            .idle()
                    });
                    if let Some(vc) = free {
                        self.sources[node].queue.pop_front();
                        self.sources[node].active = Some(Stream {
                            packet: pid,
                            lane: RouterState::lane_index(Port::Local, vc, vcs),
                            sent: 0,
                        });
                    }
                }
            }
            let Some(st) = self.sources[node].active else {
                continue;
            };
            if self.routers[node].lanes[st.lane].fifo.len() as u32 >= depth {
                continue;
            }
            let (dst, length, measured) = {
                let p = &self.packets[st.packet as usize];
                (p.dst, p.length, p.measured)
            };
            let kind = flit_kind(st.sent, length);
            let group = if self.cfg.sefar {
                self.routers[node].sefar.group_for(Port::Local)
            } else {
                Port::Local.buffer_index()
            };
            let lane = &mut self.routers[node].lanes[st.lane];
            if kind.is_head() {
                debug_assert!(lane.fifo.is_empty() && !lane.head_granted);
                lane.group = group;
                lane.va_eligible_at = now + 1;
                lane.cur_packet = Some(st.packet);
                if measured {
                    self.port_traffic[node][Port::Local.buffer_index() - 1] += 1;
                    self.inj_count[node] += 1;
                }
            }
            lane.fifo.push_back(Flit {
                kind,
                packet: st.packet,
                dst,
                arrived_at: now,
            });
            self.moved = true;
            if self.in_window(now) {
                self.energy_dyn += self.cfg.energy.e_buffer_write;
            }
            let st = self.sources[node].active.as_mut().unwrap();
            st.sent += 1;
            if st.sent == length {
                self.sources[node].active = None;
            }
        }
    }

    /// Phase A4: Bernoulli pattern creation or trace replay at this cycle.
    fn create_traffic(&mut self, now: u64) {
        match &self.cfg.traffic {
            TrafficSpec::Pattern(p) => {
                let p = *p;
                if now >= self.horizon() {
                    return;
                }
                let prob = self.cfg.pir / self.cfg.packet_length as f64;
                if prob <= 0.0 {
                    return;
                }
                let length = self.cfg.packet_length;
                for src in 0..self.topo.mesh().len() {
                    if self.rng.gen_bool(prob) {
                        let dst = pattern_dst(p, self.topo.mesh(), src, &mut self.rng);
                        self.create_packet(src, dst, length, now);
                    }
                }
            }
            TrafficSpec::Trace(_) => loop {
                let rec = match &self.cfg.traffic {
                    TrafficSpec::Trace(rs)
                        if self.trace_pos < rs.len() && rs[self.trace_pos].cycle == now =>
                    {
                        rs[self.trace_pos]
                    }
                    _ => break,
                };
                self.trace_pos += 1;
                self.create_packet(rec.src, rec.dst, rec.length, now);
            },
        }
    }

    fn create_packet(&mut self, src: NodeId, dst: NodeId, length: u32, now: u64) {
        let id = self.packets.len() as u64;
        let measured = self.in_window(now);
        let budget = self.cfg.misroute_budget;
        self.packets.push(Packet {
            id,
            src,
            dst,
            length,
            inject_cycle: now,
            eject_cycle: None,
            dropped: false,
            misroute_left: budget,
            potential: self.topo.mesh().manhattan(src, dst) + 2 * budget as usize,
            measured,
        });
        if measured {
            self.injected += 1;
        }
        self.in_flight += 1;
        self.sources[src].queue.push_back(id);
        if self.log_events {
            self.events.push(Event {
                cycle: now,
                kind: EventKind::Inject,
                packet: Some(id),
                router: Some(src),
                detail: format!("dst={dst} len={length}"),
            });
        }
    }

    /// Phase B for one router: controller, switch allocation, VC allocation,
    /// route computation. Later stages see earlier stages' results only next
    /// cycle because each acts on state the earlier stage has not yet set.
    fn router_cycle(&mut self, r: NodeId, now: u64) {
        if self.cfg.sefar {
            let shifts = self.routers[r].sefar.control_step();
            if self.log_events {
                for s in shifts {
                    self.events.push(Event {
                        cycle: now,
                        kind: EventKind::CuShift,
                        packet: None,
                        router: Some(r),
                        detail: format!(
                            "port={} {}->{}",
                            s.port.letter(),
                            CuState::code_of(s.old_z),
                            CuState::code_of(s.new_z)
                        ),
                    });
                }
            }
            self.rescue_one_lane(r);
        }
        self.switch_alloc(r, now);
        self.vc_alloc(r, now);
        self.route_compute(r, now);
    }

    /// Re-steers at most one waiting stream per cycle whose serving buffer is
    /// quarantined, onto the buffer its port currently maps to — or, when the
    /// mapped buffer is itself quarantined (every clean buffer already claimed
    /// by another port), onto the lowest uncompromised buffer. The shuffler
    /// keeps hunting until the packets sit under a clean routing unit, even if
    /// that unit's buffer nominally belongs to a neighbour port. Streams past
    /// switch allocation keep draining on their granted path.
    fn rescue_one_lane(&mut self, r: NodeId) {
        let vcs = self.cfg.vcs;
        for li in 0..self.routers[r].lanes.len() {
            let (port, _) = RouterState::lane_port(li, vcs);
            let lane = &self.routers[r].lanes[li];
            if lane.head_granted || lane.fifo.is_empty() {
                continue;
            }
            if !self.routers[r].sefar.quarantined[lane.group - 1] {
                continue;
            }
            let mapped = self.routers[r].sefar.group_for(port);
            let new_group = if !self.routers[r].sefar.quarantined[mapped - 1] {
                mapped
            } else if let Some(g) = self.routers[r].sefar.lowest_clean_group() {
                g
            } else {
                // Every routing unit compromised: nothing safe to steer to.
                continue;
            };
            if new_group == lane.group {
                continue;
            }
            if lane.held_set {
                let out = lane.out.expect("held implies a routed output");
                let vc = lane.out_vc.expect("held implies an allocated VC");
                self.routers[r].held[out.dir_index()][vc] = false;
            }
            let lane = &mut self.routers[r].lanes[li];
            lane.group = new_group;
            lane.out = None;
            lane.out_vc = None;
            lane.minimal = true;
            lane.held_set = false;
            return;
        }
    }

    /// A switch request this lane would present this cycle, if any. Raises
    /// the authentication flag (and suppresses the request) when the routed
    /// code targets a faulty link.
    fn sa_request(&mut self, r: NodeId, li: usize, now: u64) -> Option<SaCand> {
        let lane = &self.routers[r].lanes[li];
        let out = lane.out?;
        let out_vc = lane.out_vc?;
        let front = *lane.fifo.front()?;
        if front.arrived_at + 2 > now {
            return None;
        }
        let head_phase = !lane.head_granted;
        let group = lane.group;
        debug_assert!(!head_phase || front.kind.is_head());
        if head_phase && self.cfg.sefar {
            let own = self.topo.lsr(r, now).own_bits();
            if au_check(own, port_code(out)) {
                let (port, _) = RouterState::lane_port(li, self.cfg.vcs);
                if self.routers[r].sefar.raise(port, group) && self.log_events {
                    self.events.push(Event {
                        cycle: now,
                        kind: EventKind::AuFlag,
                        packet: None,
                        router: Some(r),
                        detail: format!("port={}", port.letter()),
                    });
                }
                return None;
            }
        }
        let will_drop = out.is_directional() && !self.topo.link_alive_at(r, out, now + 2);
        if out.is_directional()
            && !will_drop
            && self.routers[r].credits[out.dir_index()][out_vc] == 0
        {
            return None;
        }
        Some(SaCand {
            lane: li,
            out,
            out_vc,
            will_drop,
        })
    }

    /// Separable input-first switch allocation: each input port nominates one
    /// VC (round-robin), each output port grants one input port (round-robin).
    /// Pointers advance past a requester only on grant.
    fn switch_alloc(&mut self, r: NodeId, now: u64) {
        let vcs = self.cfg.vcs;
        let mut cands: [Option<SaCand>; 5] = [None; 5];
        for pi in 0..5 {
            let port = Port::from_buffer_index(pi + 1).unwrap();
            let start = self.routers[r].in_rr[pi];
            for k in 0..vcs {
                let vc = (start + k) % vcs;
                let li = RouterState::lane_index(port, vc, vcs);
                if let Some(c) = self.sa_request(r, li, now) {
                    cands[pi] = Some(c);
                    break;
                }
            }
        }
        for oi in 0..5 {
            let out_port = Port::from_buffer_index(oi + 1).unwrap();
            let start = self.routers[r].out_rr[oi];
            for k in 0..5 {
                let pi = (start + k) % 5;
                let matches = cands[pi].map_or(false, |c| c.out == out_port);
                if matches {
                    let c = cands[pi].take().unwrap();
                    let (_, vc) = RouterState::lane_port(c.lane, vcs);
                    self.grant(r, c, now);
                    self.routers[r].in_rr[pi] = (vc + 1) % vcs;
                    self.routers[r].out_rr[oi] = (pi + 1) % 5;
                    break;
                }
            }
        }
    }

    /// Applies one switch grant: dequeue, credit return upstream, energy and
    /// bookkeeping, then hand the flit to the sink, the dead link (drop), or
    /// the downstream link pipe.
    fn grant(&mut self, r: NodeId, c: SaCand, now: u64) {
        let vcs = self.cfg.vcs;
        let flit = self.routers[r].lanes[c.lane].fifo.pop_front().unwrap();
        self.moved = true;
        let (in_port, in_vc) = RouterState::lane_port(c.lane, vcs);
        let pid = flit.packet as usize;
        if !self.routers[r].lanes[c.lane].head_granted {
            self.routers[r].lanes[c.lane].head_granted = true;
            if !self.routers[r].lanes[c.lane].minimal && c.out.is_directional() {
                self.packets[pid].misroute_left -= 1;
            }
            if c.out.is_directional() && !c.will_drop {
                let next = self.topo.mesh().neighbor(r, c.out).unwrap();
                let potential = self.topo.mesh().manhattan(next, flit.dst)
                    + 2 * self.packets[pid].misroute_left as usize;
                debug_assert!(
                    potential < self.packets[pid].potential,
                    "hop must strictly reduce the livelock potential"
                );
                self.packets[pid].potential = potential;
                if self.log_events {
                    self.events.push(Event {
                        cycle: now + 2,
                        kind: EventKind::Hop,
                        packet: Some(flit.packet),
                        router: Some(r),
                        detail: format!("out={} next={next} vc={}", c.out.letter(), c.out_vc),
                    });
                }
            }
        }
        if self.in_window(now) {
            self.energy_dyn += self.cfg.energy.e_xbar;
            if c.out.is_directional() && !c.will_drop {
                self.energy_dyn += self.cfg.energy.e_link;
            }
        }
        if c.out.is_directional() && !c.will_drop && self.in_window(now) {
            self.link_hops[r * 4 + c.out.dir_index()] += 1;
        }
        if in_port.is_directional() {
            // Free the slot this flit used; the upstream router owns the
            // counter for the reverse-direction link.
            let upstream = self.topo.mesh().neighbor(r, in_port).unwrap();
            let back = in_port.opposite();
            self.link_credits[upstream * 4 + back.dir_index()].push_back((now + 2, in_vc));
        }
        if c.out == Port::Local {
            self.eject_pipe[r].push_back((now + 2, flit));
        } else if c.will_drop {
            // The flit dies on the dead link; resolve the packet once.
            if !self.packets[pid].dropped {
                self.packets[pid].dropped = true;
                if self.packets[pid].measured {
                    self.dropped += 1;
                }
                self.in_flight -= 1;
                if self.log_events {
                    self.events.push(Event {
                        cycle: now + 2,
                        kind: EventKind::Drop,
                        packet: Some(flit.packet),
                        router: Some(r),
                        detail: format!("out={}", c.out.letter()),
                    });
                }
            }
        } else {
            let d = c.out.dir_index();
            debug_assert!(self.routers[r].credits[d][c.out_vc] > 0);
            self.routers[r].credits[d][c.out_vc] -= 1;
            self.link_flits[r * 4 + d].push_back((now + 3, flit, c.out_vc));
        }
        if flit.kind.is_tail() {
            if self.routers[r].lanes[c.lane].held_set {
                self.routers[r].held[c.out.dir_index()][c.out_vc] = false;
            }
            self.routers[r].lanes[c.lane].reset_stream();
        }
    }

    /// Conservative VC allocation: a routed head gets the lowest downstream
    /// VC that is unreserved and fully credited, so a lane only ever holds
    /// one packet's flits. Ejection and dead directions need no downstream
    /// buffer and grant VC 0 freely.
    fn vc_alloc(&mut self, r: NodeId, now: u64) {
        let depth = self.cfg.buffer_depth;
        let vcs = self.cfg.vcs;
        for li in 0..self.routers[r].lanes.len() {
            let lane = &self.routers[r].lanes[li];
            if lane.out_vc.is_some() || lane.head_granted || lane.fifo.is_empty() {
                continue;
            }
            let Some(out) = lane.out else { continue };
            if lane.va_eligible_at > now {
                continue;
            }
            if out == Port::Local || !self.topo.link_alive_at(r, out, now) {
                self.routers[r].lanes[li].out_vc = Some(0);
                continue;
            }
            let d = out.dir_index();
            for vc in 0..vcs {
                if !self.routers[r].held[d][vc] && self.routers[r].credits[d][vc] == depth {
                    self.routers[r].held[d][vc] = true;
                    let lane = &mut self.routers[r].lanes[li];
                    lane.out_vc = Some(vc);
                    lane.held_set = true;
                    break;
                }
            }
        }
    }

    /// Route computation for lanes holding an unrouted head, through the
    /// routing-unit instance selected by the lane's serving buffer — which is
    /// where an active Trojan rewrites the output code.
    fn route_compute(&mut self, r: NodeId, now: u64) {
        let vcs = self.cfg.vcs;
        for li in 0..self.routers[r].lanes.len() {
            let lane = &self.routers[r].lanes[li];
            if lane.out.is_some() || lane.head_granted || lane.fifo.is_empty() {
                continue;
            }
            let front = *lane.fifo.front().unwrap();
            debug_assert!(front.kind.is_head());
            let group = lane.group;
            let (in_port, _) = RouterState::lane_port(li, vcs);
            let lsr = self.topo.lsr(r, now);
            let credits = std::array::from_fn(|d| self.routers[r].credits[d].iter().sum());
            let pid = front.packet as usize;
            let req = RouteRequest {
                current: r,
                dst: front.dst,
                in_port,
                lsr,
                credits,
                misroute_left: self.packets[pid].misroute_left,
            };
            let Some(decision) = compute_route_guarded(&self.topo, &req, now) else {
                continue; // no safe output yet; retry next cycle
            };
            let (mut out, mut minimal) = (decision.port, decision.minimal);
            if let Some(ti) = self.trojan_at[r][group - 1] {
                let t = &self.cfg.trojans[ti];
                let en = t.enable.active(now);
                let own = lsr.own_bits();
                if trigger_state(own, en) == TriggerState::Active {
                    let diverted = dec(en, own[0], own[1], own[2], own[3]);
                    let code = ht_mux(decision.code(), diverted);
                    if diverted.s {
                        out = code.port();
                        minimal = true; // no budget spent on a doomed hop
                    }
                }
            }
            let lane = &mut self.routers[r].lanes[li];
            lane.out = Some(out);
            lane.minimal = minimal;
            if self.in_window(now) {
                self.energy_dyn += self.cfg.energy.e_route;
            }
        }
    }

    /// Phase C: reclaims lanes owned by dropped packets. A granted stream is
    /// reclaimed once drained; a stream whose head never left is discarded
    /// outright with its buffer slots credited back upstream.
    fn sweep_orphans(&mut self, now: u64) {
        let n = self.topo.mesh().len();
        let vcs = self.cfg.vcs;
        for r in 0..n {
            for li in 0..self.routers[r].lanes.len() {
                let lane = &self.routers[r].lanes[li];
                let Some(pid) = lane.cur_packet else { continue };
                if !self.packets[pid as usize].dropped {
                    continue;
                }
                // The source may still be streaming this packet's flits in.
                if self.sources[r]
                    .active
                    .map_or(false, |st| st.lane == li && st.packet == pid)
                {
                    continue;
                }
                if lane.head_granted {
                    if !lane.fifo.is_empty() {
                        continue; // still draining through the granted path
                    }
                } else {
                    let (in_port, in_vc) = RouterState::lane_port(li, vcs);
                    let pending = self.routers[r].lanes[li].fifo.len();
                    if pending > 0 {
                        self.moved = true;
                        if in_port.is_directional() {
                            let upstream = self.topo.mesh().neighbor(r, in_port).unwrap();
                            let back = in_port.opposite();
                            for _ in 0..pending {
                                self.link_credits[upstream * 4 + back.dir_index()]
                                    .push_back((now + 2, in_vc));
                            }
                        }
                    }
                    self.routers[r].lanes[li].fifo.clear();
                }
                let lane = &self.routers[r].lanes[li];
                if lane.held_set {
                    let out = lane.out.expect("held implies a routed output");
                    let vc = lane.out_vc.expect("held implies an allocated VC");
                    self.routers[r].held[out.dir_index()][vc] = false;
                }
                self.routers[r].lanes[li].reset_stream();
            }
        }
    }

    /// Debug audit: per healthy directed link and VC, credits plus occupancy
    /// plus in-flight flits and returning credits equal the buffer depth; the
    /// mitigation state stays a bijection.
    #[cfg(debug_assertions)]
    fn audit(&self, now: u64) {
        let vcs = self.cfg.vcs;
        let depth = self.cfg.buffer_depth as usize;
        let mesh = self.topo.mesh();
        for (node, dir) in mesh.links() {
            // Links at or past their fault transition are exempt: flow
            // control intentionally stops balancing across a dead wire.
            if self
                .topo
                .fault_cycle(node, dir)
                .map_or(false, |fc| fc <= now + 3)
            {
                continue;
            }
            let neighbor = mesh.neighbor(node, dir).unwrap();
            let pipe = node * 4 + dir.dir_index();
            for vc in 0..vcs {
                let li = RouterState::lane_index(dir.opposite(), vc, vcs);
                let fifo = self.routers[neighbor].lanes[li].fifo.len();
                let in_flight = self.link_flits[pipe].iter().filter(|f| f.2 == vc).count();
                let returning = self.link_credits[pipe].iter().filter(|c| c.1 == vc).count();
                let credits = self.routers[node].credits[dir.dir_index()][vc] as usize;
                assert_eq!(
                    credits + fifo + in_flight + returning,
                    depth,
                    "credit conservation violated on {node}->{dir:?} vc{vc} at cycle {now}"
                );
            }
        }
        if self.cfg.sefar {
            for r in &self.routers {
                r.sefar.check_invariants();
            }
        }
    }

    /// Aggregated run results.
    pub fn report(&self) -> MetricsReport {
        let n = self.topo.mesh().len() as f64;
        let measure = self.cfg.measure as f64;
        let apl = if self.delivered > 0 {
            self.latency_sum as f64 / self.delivered as f64
        } else {
            0.0
        };
        let energy = self.energy_dyn + self.cfg.energy.p_static * measure * n;
        let total_hops: u64 = self.link_hops.iter().sum();
        let link_util = self
            .topo
            .mesh()
            .links()
            .map(|(node, dir)| {
                let hops = self.link_hops[node * 4 + dir.dir_index()];
                let share = if total_hops == 0 {
                    0.0
                } else {
                    hops as f64 / total_hops as f64 * 100.0
                };
                (node, dir, share)
            })
            .collect();
        let router_injeject = (0..self.topo.mesh().len())
            .map(|r| {
                if self.injected == 0 {
                    0.0
                } else {
                    (self.inj_count[r] + self.ej_count[r]) as f64
                        / (2.0 * self.injected as f64)
                        * 100.0
                }
            })
            .collect();
        MetricsReport {
            config: self.cfg.name.clone(),
            seed: self.cfg.seed,
            pir: self.cfg.pir,
            injected: self.injected,
            delivered: self.delivered,
            dropped: self.dropped,
            apl,
            throughput: self.flits_ejected as f64 / (measure * n),
            energy,
            plp: (energy / measure) * apl,
            link_util,
            router_injeject,
            port_traffic: self.port_traffic.clone(),
        }
    }
}

/// One input port's nominated switch request.
#[derive(Debug, Clone, Copy)]
struct SaCand {
    lane: usize,
    out: Port,
    out_vc: usize,
    will_drop: bool,
}
