//! Acceptance gate: one test per acceptance criterion, each ending with a
//! printed `[PASS] criterion N` line. Every expected value is produced by an
//! oracle written independently of the code path it checks: truth-table
//! expansion for the decoder and authentication unit, full-credit route
//! enumeration for drop ratios, and re-execution for determinism.

use std::collections::HashMap;
use std::sync::OnceLock;

use nocsim::config::{PlanConfig, ScenarioConfig};
use nocsim::metrics::{plan_attack, EventKind};
use nocsim::routing::walk_route;
use nocsim::sefar::{au_check, cu_step, CuState};
use nocsim::sim::Engine;
use nocsim::sweep::{place_trojans, run_sweep, sample_fault_set, splitmix64, SweepOutput};
use nocsim::topology::{Mesh, NodeId, Port, PortCode, Topology};
use nocsim::traffic::{Pattern, TraceRecord, TrafficSpec};
use nocsim::trojan::{dec, EnableSchedule, TrojanInstance};

/// Evaluation cycle late enough that every installed fault is visible.
const WALK_CYCLE: u64 = 1 << 20;

fn trace_scenario(width: usize, height: usize, records: Vec<TraceRecord>) -> ScenarioConfig {
    ScenarioConfig {
        width,
        height,
        warmup: 0,
        measure: 10_000,
        traffic: TrafficSpec::Trace(records),
        pir: 0.0,
        ..ScenarioConfig::default()
    }
}

fn rec(cycle: u64, src: NodeId, dst: NodeId) -> TraceRecord {
    TraceRecord {
        cycle,
        src,
        dst,
        length: 4,
    }
}

fn run_engine(cfg: ScenarioConfig, log: bool) -> Engine {
    let mut eng = Engine::new(cfg).expect("scenario validates");
    eng.set_event_log(log);
    eng.run().expect("run completes without watchdog");
    eng
}

fn faulted_topology(mesh: Mesh, faults: &[(NodeId, Port, u64)]) -> Topology {
    let mut topo = Topology::new(mesh);
    for &(node, dir, cycle) in faults {
        topo.inject_fault(node, dir, cycle).expect("fault on a real link");
    }
    topo
}

fn all_pairs_walkable(topo: &Topology, budget: u32) -> bool {
    let n = topo.mesh().len();
    (0..n).all(|s| {
        (0..n).all(|d| s == d || walk_route(topo, s, d, WALK_CYCLE, budget).is_some())
    })
}

/// Detail strings are space-separated `key=value` pairs.
fn detail_field<'a>(detail: &'a str, key: &str) -> Option<&'a str> {
    detail
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix(key).and_then(|rest| rest.strip_prefix('=')))
}

// --- criterion 1 -----------------------------------------------------------

/// Priority expansion of the decoder table: highest-priority faulty link wins
/// (N over E over S over W), disabled or fault-free decodes to idle.
fn dec_oracle(en: bool, ln: bool, le: bool, ls: bool, lw: bool) -> (u8, bool) {
    if !en {
        return (0b000, false);
    }
    for (faulty, bits) in [(ln, 0b001u8), (le, 0b010), (ls, 0b011), (lw, 0b100)] {
        if faulty {
            return (bits, true);
        }
    }
    (0b000, false)
}

#[test]
fn c01_link_decoder_matches_priority_oracle() {
    // The six specified table rows, verbatim.
    for bits in 0..16u8 {
        let out = dec(false, bits & 8 != 0, bits & 4 != 0, bits & 2 != 0, bits & 1 != 0);
        assert_eq!((out.d.bits(), out.s), (0b000, false), "disabled row {bits:04b}");
    }
    let pinned = [
        ((false, false, false, false), (0b000, false)),
        ((false, false, false, true), (0b100, true)),
        ((false, false, true, false), (0b011, true)),
        ((false, true, false, false), (0b010, true)),
        ((true, false, false, false), (0b001, true)),
    ];
    for ((ln, le, ls, lw), want) in pinned {
        let out = dec(true, ln, le, ls, lw);
        assert_eq!((out.d.bits(), out.s), want, "enabled row {ln}{le}{ls}{lw}");
    }
    // All 32 inputs against the independent priority expansion.
    let mut cases = 0;
    for en in [false, true] {
        for bits in 0..16u8 {
            let (ln, le, ls, lw) = (bits & 8 != 0, bits & 4 != 0, bits & 2 != 0, bits & 1 != 0);
            let out = dec(en, ln, le, ls, lw);
            assert_eq!(
                (out.d.bits(), out.s),
                dec_oracle(en, ln, le, ls, lw),
                "dec(en={en}, {bits:04b})"
            );
            cases += 1;
        }
    }
    assert_eq!(cases, 32);
    println!("[PASS] criterion 1: link decoder matches the priority-expansion oracle on all 32 inputs");
}

// --- criterion 2 -----------------------------------------------------------

#[test]
fn c02_authentication_matches_fault_table() {
    // Specified rows: all-healthy never flags; each single fault flags
    // exactly the code addressing it.
    for bits in [0b000u8, 0b001, 0b010, 0b011, 0b100] {
        assert!(!au_check([false; 4], PortCode::new(bits).unwrap()));
    }
    let singles = [
        ([true, false, false, false], 0b001u8),
        ([false, true, false, false], 0b010),
        ([false, false, true, false], 0b011),
        ([false, false, false, true], 0b100),
    ];
    for (own, code) in singles {
        assert!(au_check(own, PortCode::new(code).unwrap()), "single fault {code:03b}");
    }
    // All 16 fault vectors x 5 codes against an independent membership oracle:
    // flag exactly when the code addresses a faulty directional link.
    let mut cases = 0;
    for vector in 0..16u8 {
        let own = [vector & 1 != 0, vector & 2 != 0, vector & 4 != 0, vector & 8 != 0];
        let faulty_codes: Vec<u8> = own
            .iter()
            .enumerate()
            .filter(|&(_, &f)| f)
            .map(|(i, _)| i as u8 + 1)
            .collect();
        for bits in [0b000u8, 0b001, 0b010, 0b011, 0b100] {
            let want = faulty_codes.contains(&bits);
            assert_eq!(
                au_check(own, PortCode::new(bits).unwrap()),
                want,
                "own={own:?} code={bits:03b}"
            );
            cases += 1;
        }
    }
    assert_eq!(cases, 80);
    println!("[PASS] criterion 2: authentication unit flags exactly the codes targeting faulty links (80 cases)");
}

// --- criterion 3 -----------------------------------------------------------

#[test]
fn c03_control_unit_walks_to_next_free_buffer() {
    // Stimulus: the flag rises with the home buffer's busy bit; buffer 2 is
    // initially free and later becomes busy.
    let mut cu = CuState::new(1);
    assert_eq!(CuState::code_of(cu.z), "001");
    assert!(!cu.enabled);

    // Idle cycle before the flag: state holds at the seed.
    let (held, alarm) = cu_step(cu, false, [false; 5]);
    assert_eq!((held.z, alarm), (1, false));

    // Flag rises, home buffer reads busy: one cycle later the state is 010.
    let (next, alarm) = cu_step(cu, true, [true, false, false, false, false]);
    assert!(!alarm);
    assert_eq!(CuState::code_of(next.z), "010");
    assert!(next.enabled);
    cu = next;

    // Holds 010 for as long as buffer 2 stays free.
    for _ in 0..3 {
        let (same, alarm) = cu_step(cu, true, [true, false, false, false, false]);
        assert_eq!((same.z, alarm), (2, false));
        cu = same;
    }

    // Buffer 2 goes busy: the state advances to the next free buffer, 011.
    let (next, alarm) = cu_step(cu, true, [true, true, false, false, false]);
    assert!(!alarm);
    assert_eq!(CuState::code_of(next.z), "011");
    println!("[PASS] criterion 3: control unit reproduces the 001 -> 010 -> next-free walk cycle-aligned");
}

// --- criteria 4 and 5 ------------------------------------------------------

/// 4x4 scenario: dead link 9->10 (plus a second dead link 2->3 elsewhere in
/// the mesh), Trojan in router 9's west-arrival buffer. Sources at 8 send
/// both through-9 traffic (to 5) and traffic that detours around 9 (to 11).
fn attack_scenario(sefar: bool) -> ScenarioConfig {
    let mut records = Vec::new();
    for k in 0..6u64 {
        records.push(rec(60 * k, 8, 5));
        records.push(rec(60 * k + 30, 8, 11));
    }
    let mut cfg = trace_scenario(4, 4, records);
    cfg.faults.push((9, Port::East, 0));
    cfg.faults.push((2, Port::East, 0));
    cfg.trojans.push(TrojanInstance {
        router: 9,
        buffer: Port::West.buffer_index(),
        enable: EnableSchedule::always(),
    });
    cfg.sefar = sefar;
    cfg
}

#[test]
fn c04_active_trojan_drops_traffic_through_dead_link() {
    let eng = run_engine(attack_scenario(false), true);
    let report = eng.report();
    assert_eq!(report.injected, 12);

    // Every 8->5 packet funnels through router 9 and is forced onto the dead
    // east link; every 8->11 packet detours around router 9 and survives.
    let mut hops_by_packet: HashMap<u64, Vec<(NodeId, &str)>> = HashMap::new();
    for e in eng.events() {
        if e.kind == EventKind::Hop {
            hops_by_packet
                .entry(e.packet.unwrap())
                .or_default()
                .push((e.router.unwrap(), detail_field(&e.detail, "next").unwrap()));
        }
    }
    for p in eng.packets() {
        if p.dst == 5 {
            assert!(p.dropped, "packet {} to 5 must drop", p.id);
        } else {
            assert_eq!(p.dst, 11);
            assert!(p.eject_cycle.is_some() && !p.dropped, "packet {} to 11 must deliver", p.id);
            let visited = &hops_by_packet[&p.id];
            assert!(
                visited.iter().all(|&(router, _)| router != 9),
                "packet {} may not pass router 9",
                p.id
            );
        }
    }
    assert_eq!(report.dropped, 6);
    assert_eq!(report.delivered, 6);

    let drops: Vec<_> = eng.events().iter().filter(|e| e.kind == EventKind::Drop).collect();
    assert_eq!(drops.len(), 6);
    for d in &drops {
        assert_eq!(d.router, Some(9));
        assert_eq!(d.detail, "out=E");
    }
    // The dead link itself never carries a packet.
    for hops in hops_by_packet.values() {
        assert!(hops.iter().all(|&(router, next)| !(router == 9 && next == "10")));
    }
    println!("[PASS] criterion 4: active Trojan drops 100% of through-9 traffic; detouring traffic survives");
}

#[test]
fn c05_mitigation_restores_delivery_and_remaps_buffer() {
    let eng = run_engine(attack_scenario(true), true);
    let report = eng.report();
    assert_eq!(report.injected, 12);
    assert_eq!(report.delivered, 12);
    assert_eq!(report.dropped, 0);
    assert!(eng.events().iter().all(|e| e.kind != EventKind::Drop));

    // One warning flag on the west port, then one controller shift, after
    // which west arrivals are served by the uncompromised local buffer.
    let flags: Vec<_> = eng.events().iter().filter(|e| e.kind == EventKind::AuFlag).collect();
    let shifts: Vec<_> = eng.events().iter().filter(|e| e.kind == EventKind::CuShift).collect();
    assert_eq!(flags.len(), 1);
    assert_eq!(shifts.len(), 1);
    assert_eq!(flags[0].router, Some(9));
    assert_eq!(flags[0].detail, "port=W");
    assert_eq!(shifts[0].router, Some(9));
    assert_eq!(shifts[0].detail, "port=W 100->101");
    assert!(flags[0].cycle < shifts[0].cycle);
    assert_eq!(eng.sefar_mapping(9), [1, 2, 3, 5, 4]);

    // Rescued packets leave router 9 northward to their destination.
    let north_exits = eng
        .events()
        .iter()
        .filter(|e| {
            e.kind == EventKind::Hop
                && e.router == Some(9)
                && detail_field(&e.detail, "out") == Some("N")
        })
        .count();
    assert_eq!(north_exits, 6);
    println!("[PASS] criterion 5: mitigation delivers everything, flags the west port, and remaps it to a clean buffer");
}

// --- criterion 6 -----------------------------------------------------------

/// Fraction of ordered pairs whose full-credit route enters an infected
/// buffer, by walking every pair on the faulted topology.
fn enumerated_drop_fraction(
    topo: &Topology,
    budget: u32,
    infected: impl Fn(NodeId, Port) -> bool,
) -> f64 {
    let n = topo.mesh().len();
    let mut pairs = 0u64;
    let mut doomed = 0u64;
    for s in 0..n {
        for d in 0..n {
            if s == d {
                continue;
            }
            let path = walk_route(topo, s, d, WALK_CYCLE, budget).expect("pair is routable");
            pairs += 1;
            if path[1..].iter().any(|&(router, in_port)| infected(router, in_port)) {
                doomed += 1;
            }
        }
    }
    doomed as f64 / pairs as f64
}

#[test]
fn c06_drop_ratio_matches_route_enumeration() {
    // One dead westbound link at interior router 27; a single infected
    // buffer, then four infected buffers, at the same router.
    let faults = vec![(27usize, Port::West, 0u64)];
    let base = ScenarioConfig {
        warmup: 0,
        measure: 1_300_000,
        pir: 0.005,
        seed: 61,
        faults: faults.clone(),
        ..ScenarioConfig::default()
    };
    let topo = faulted_topology(Mesh::new(8, 8).unwrap(), &faults);
    assert!(all_pairs_walkable(&topo, base.misroute_budget), "fault must strand nothing");

    let cases: [(&str, Vec<usize>, Box<dyn Fn(NodeId, Port) -> bool>); 2] = [
        (
            "one infected buffer",
            vec![Port::West.buffer_index()],
            Box::new(|router, in_port| router == 27 && in_port == Port::West),
        ),
        (
            "four infected buffers",
            Port::DIRECTIONS.iter().map(|d| d.buffer_index()).collect(),
            Box::new(|router, in_port| router == 27 && in_port != Port::Local),
        ),
    ];
    for (label, buffers, infected) in cases {
        let mut cfg = base.clone();
        for buffer in buffers {
            cfg.trojans.push(TrojanInstance {
                router: 27,
                buffer,
                enable: EnableSchedule::always(),
            });
        }
        let expected = enumerated_drop_fraction(&topo, cfg.misroute_budget, infected);
        let eng = run_engine(cfg, false);
        let report = eng.report();
        assert!(report.injected >= 100_000, "{label}: only {} packets", report.injected);
        let measured = report.drop_ratio();
        assert!(
            (measured - expected).abs() <= 0.005,
            "{label}: measured {measured:.4} vs enumerated {expected:.4}"
        );
        println!(
            "  {label}: measured {measured:.4}, enumerated {expected:.4}, packets {}",
            report.injected
        );
    }
    println!("[PASS] criterion 6: measured drop ratios match route enumeration within 0.5 percentage points");
}

// --- criteria 7 and 10 -----------------------------------------------------

fn sweep_plan() -> PlanConfig {
    PlanConfig {
        name: "acceptance".into(),
        width: 8,
        height: 8,
        warmup: 400,
        measure: 2000,
        seed: 9,
        pirs: vec![0.002, 0.005, 0.01, 0.02, 0.03],
        reps: 2,
        fault_rates: vec![5.0, 10.0],
        patterns: vec![Pattern::Uniform, Pattern::Shuffle],
        ..PlanConfig::default()
    }
}

static SWEEP: OnceLock<SweepOutput> = OnceLock::new();

fn sweep_once() -> &'static SweepOutput {
    SWEEP.get_or_init(|| run_sweep(&sweep_plan()).expect("sweep completes"))
}

fn series_points(out: &SweepOutput, file: &str) -> Vec<(f64, f64)> {
    let (_, body) = out
        .series
        .iter()
        .find(|(name, _)| name == file)
        .unwrap_or_else(|| panic!("missing series {file}"));
    body.lines()
        .map(|line| {
            let mut it = line.split_whitespace();
            let pir: f64 = it.next().unwrap().parse().unwrap();
            let value: f64 = it.next().unwrap().parse().unwrap();
            (pir, value)
        })
        .collect()
}

#[test]
fn c07_latency_orderings_across_fault_and_attack_sweeps() {
    let out = sweep_once();
    // Two patterns x (fault-free + two rates x {dormant, active}) x five
    // injection rates x two repetitions.
    assert!(out.aborts.is_empty(), "aborted runs: {:?}", out.aborts);
    assert_eq!(out.runs, 100);

    // Numerical-noise allowance on the <= comparisons; the 15% cap is the
    // acceptance bound itself.
    const EPS: f64 = 2e-3;
    for pattern in ["uniform", "shuffle"] {
        for metric in ["apl", "plp"] {
            let ff = series_points(out, &format!("{metric}_{pattern}-ff.dat"));
            assert_eq!(ff.len(), 5);
            for rate in ["5", "10"] {
                let dormant =
                    series_points(out, &format!("{metric}_{pattern}-faulty{rate}-dormant.dat"));
                let active =
                    series_points(out, &format!("{metric}_{pattern}-faulty{rate}-active.dat"));
                for i in 0..ff.len() {
                    let (pir, f) = ff[i];
                    let (dp, d) = dormant[i];
                    let (ap, a) = active[i];
                    assert_eq!(pir, dp);
                    assert_eq!(pir, ap);
                    assert!(
                        f <= d * (1.0 + EPS),
                        "{metric} {pattern} {rate}% pir {pir}: fault-free {f:.3} > dormant {d:.3}"
                    );
                    assert!(
                        d <= a * (1.0 + EPS),
                        "{metric} {pattern} {rate}% pir {pir}: dormant {d:.3} > active {a:.3}"
                    );
                    assert!(
                        a <= d * 1.15,
                        "{metric} {pattern} {rate}% pir {pir}: active {a:.3} exceeds dormant {d:.3} by >15%"
                    );
                }
            }
        }
    }
    println!("[PASS] criterion 7: fault-free <= dormant <= active orderings hold with <=15% active overhead (APL and PLP)");
}

#[test]
fn c10_sweep_reruns_are_byte_identical() {
    let first = sweep_once();
    let second = run_sweep(&sweep_plan()).expect("sweep completes");
    assert_eq!(first.metrics_csv, second.metrics_csv);
    assert_eq!(first.series, second.series);
    assert_eq!(first.aborts, second.aborts);
    assert_eq!(first.runs, second.runs);
    println!("[PASS] criterion 10: repeating the sweep yields byte-identical metrics and series");
}

// --- criterion 8 -----------------------------------------------------------

#[test]
fn c08_mitigation_never_drops_across_randomized_scenarios() {
    let mesh = Mesh::new(6, 6).unwrap();
    let rates = [2.5, 5.0, 7.5, 10.0];
    let pirs = [0.02, 0.04, 0.08];
    for i in 0..100usize {
        let scenario_seed = splitmix64(0xACCE55 + i as u64);
        let rate = rates[i % rates.len()];
        let faults = sample_fault_set(&mesh, rate, scenario_seed, 8)
            .unwrap_or_else(|e| panic!("scenario {i}: {e}"));
        let mut trojans = place_trojans(&faults, &EnableSchedule::always());
        // Up to two extra placements anywhere (dormant ones included).
        let mut salt = scenario_seed;
        for _ in 0..(i % 3) {
            salt = splitmix64(salt);
            let router = (salt % mesh.len() as u64) as usize;
            let buffer = ((salt >> 8) % 5) as usize + 1;
            if !trojans.iter().any(|t| t.router == router && t.buffer == buffer) {
                trojans.push(TrojanInstance {
                    router,
                    buffer,
                    enable: EnableSchedule::always(),
                });
            }
        }
        let cfg = ScenarioConfig {
            width: 6,
            height: 6,
            sefar: true,
            warmup: 0,
            measure: 600,
            pir: pirs[i % pirs.len()],
            seed: splitmix64(scenario_seed ^ 0x7EAF),
            faults,
            trojans,
            ..ScenarioConfig::default()
        };
        let mut eng = Engine::new(cfg).expect("scenario validates");
        eng.set_event_log(true);
        eng.run().unwrap_or_else(|e| panic!("scenario {i} stalled: {e}"));
        let report = eng.report();
        assert!(
            eng.events().iter().all(|e| e.kind != EventKind::Drop),
            "scenario {i} recorded a drop event"
        );
        assert_eq!(report.dropped, 0, "scenario {i}");
        assert_eq!(report.injected, report.delivered, "scenario {i} stranded packets");
    }
    println!("[PASS] criterion 8: 100 randomized mitigated scenarios drained with zero drops");
}

// --- criterion 9 -----------------------------------------------------------

#[test]
fn c09_flow_audits_armed_and_zero_load_formula_exact() {
    // The credit, conservation, and wormhole-contiguity audits are
    // debug-assertions inside the engine; they must be armed for every run in
    // this suite.
    assert!(
        cfg!(debug_assertions),
        "acceptance must run with debug assertions enabled"
    );

    // Heavier mixed run under the armed audits: faults, Trojans, mitigation.
    let faults = sample_fault_set(&Mesh::new(8, 8).unwrap(), 5.0, splitmix64(0x05), 8)
        .expect("routable fault set");
    let trojans = place_trojans(&faults, &EnableSchedule::always());
    let cfg = ScenarioConfig {
        sefar: true,
        warmup: 100,
        measure: 2000,
        pir: 0.06,
        seed: 42,
        faults,
        trojans,
        ..ScenarioConfig::default()
    };
    let eng = run_engine(cfg, false);
    let report = eng.report();
    assert!(report.injected > 500);
    assert_eq!(report.dropped, 0);
    assert_eq!(report.injected, report.delivered);

    // Zero-load latency: 5 cycles per router plus serialization, exact for
    // packets that fit in one buffer.
    for (w, h, src, dst, length) in [
        (4usize, 4usize, 0usize, 15usize, 4u32),
        (4, 4, 8, 5, 1),
        (8, 8, 0, 63, 4),
        (8, 8, 9, 54, 2),
        (5, 3, 0, 14, 3),
    ] {
        let mesh = Mesh::new(w, h).unwrap();
        let mut records = vec![rec(0, src, dst)];
        records[0].length = length;
        let eng = run_engine(trace_scenario(w, h, records), false);
        let report = eng.report();
        let hops = mesh.manhattan(src, dst) + 1;
        let expected = (5 * hops) as f64 + f64::from(length) - 1.0;
        assert_eq!(report.apl, expected, "{w}x{h} {src}->{dst} len {length}");
    }
    println!("[PASS] criterion 9: flow audits armed on every run; zero-load latency formula exact");
}

// --- criterion 11 ----------------------------------------------------------

/// Directed-link usage counts over all-pairs full-credit routes.
fn walk_usage(topo: &Topology, budget: u32) -> HashMap<(NodeId, Port), u64> {
    let n = topo.mesh().len();
    let mut usage = HashMap::new();
    for s in 0..n {
        for d in 0..n {
            if s == d {
                continue;
            }
            let path = walk_route(topo, s, d, WALK_CYCLE, budget).expect("routable");
            for pair in path.windows(2) {
                let (from, _) = pair[0];
                let (_, in_port) = pair[1];
                *usage.entry((from, in_port.opposite())).or_insert(0) += 1;
            }
        }
    }
    usage
}

#[test]
fn c11_planner_estimate_matches_instantiated_attack() {
    let mesh = Mesh::new(8, 8).unwrap();
    for pattern in [Pattern::Uniform, Pattern::Transpose] {
        let base = ScenarioConfig {
            traffic: TrafficSpec::Pattern(pattern),
            pir: 0.005,
            warmup: 500,
            measure: 150_000,
            seed: 7301,
            ..ScenarioConfig::default()
        };

        // Profile a healthy network and take the planner's top placement.
        let eng = run_engine(base.clone(), false);
        let profile = eng.report();
        let top = plan_attack(&profile.port_traffic, profile.injected, 1)
            .into_iter()
            .next()
            .expect("planner returns a placement");
        assert!(top.estimate > 0.01, "top estimate {:.4}", top.estimate);

        // Arm the placement: give its router a dead link so the Trojan
        // triggers, choosing the least-used direction that strands no pair.
        let healthy = Topology::new(mesh);
        let usage = walk_usage(&healthy, base.misroute_budget);
        let mut candidates: Vec<(u64, Port)> = Port::DIRECTIONS
            .iter()
            .filter(|&&d| mesh.neighbor(top.router, d).is_some())
            .map(|&d| (usage.get(&(top.router, d)).copied().unwrap_or(0), d))
            .collect();
        candidates.sort_by_key(|&(count, d)| (count, d.dir_index()));
        let fault_dir = candidates
            .iter()
            .map(|&(_, d)| d)
            .find(|&d| {
                let topo = faulted_topology(mesh, &[(top.router, d, 0)]);
                all_pairs_walkable(&topo, base.misroute_budget)
            })
            .expect("some direction keeps every pair routable");

        let mut attack = base.clone();
        attack.faults.push((top.router, fault_dir, 0));
        attack.trojans.push(TrojanInstance {
            router: top.router,
            buffer: top.buffer,
            enable: EnableSchedule::always(),
        });
        let eng = run_engine(attack, false);
        let measured = eng.report().drop_ratio();
        assert!(
            (measured - top.estimate).abs() <= 0.02,
            "{}: measured {measured:.4} vs estimate {:.4} at router {} buffer {}",
            pattern.name(),
            top.estimate,
            top.router,
            top.buffer
        );
        println!(
            "  {}: router {} buffer {} estimate {:.4} measured {measured:.4}",
            pattern.name(),
            top.router,
            top.buffer,
            top.estimate
        );
    }
    println!("[PASS] criterion 11: instantiated top-ranked Trojan matches the planner estimate within 2 percentage points");
}
