//! Experiment-plan execution: for each traffic pattern, a fault-free
//! baseline plus faulty-dormant (Trojans armed, mitigation off) and
//! faulty-active (kill switch on, mitigation on) configurations, swept over
//! injection rates with repetitions.
//!
//! Corresponding cells across configurations share per-(rate index, rep)
//! seeds, so they see identical traffic and differences are attributable to
//! the configuration alone.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{ConfigError, PlanConfig};
use crate::metrics::MetricsReport;
use crate::routing::walk_route;
use crate::sim::{Engine, SimError};
use crate::topology::{Mesh, NodeId, Port, Topology};
use crate::traffic::TrafficSpec;
use crate::trojan::{EnableSchedule, TrojanInstance};

/// SplitMix64 mixing step; used to derive independent stream seeds.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-cell run seed. Deliberately independent of the configuration, so the
/// fault-free, dormant, and active runs of one cell are paired.
pub fn cell_seed(base: u64, pir_idx: usize, rep: u32) -> u64 {
    splitmix64(splitmix64(base ^ pir_idx as u64) ^ rep as u64)
}

fn all_pairs_routable(topo: &Topology, budget: u32) -> bool {
    let mesh = topo.mesh();
    for s in mesh.nodes() {
        for d in mesh.nodes() {
            if s != d && walk_route(topo, s, d, 0, budget).is_none() {
                return false;
            }
        }
    }
    true
}

/// Samples `round(rate% of directed links)` distinct permanent link faults
/// under which the runtime routing function still delivers every ordered
/// node pair. Graph connectivity is not enough — deterministic fault
/// avoidance can live-lock on a connected mesh until the misroute budget
/// runs out — and blind rejection virtually never finds a fully routable
/// multi-fault set, so the set is grown greedily: walk candidate links in a
/// seeded random order and keep each one only if every pair still routes.
pub fn sample_fault_set(
    mesh: &Mesh,
    rate: f64,
    seed: u64,
    budget: u32,
) -> Result<Vec<(NodeId, Port, u64)>, ConfigError> {
    let links: Vec<(NodeId, Port)> = mesh.links().collect();
    let count = (rate / 100.0 * links.len() as f64).round() as usize;
    if count == 0 {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..50 {
        let mut pool = links.clone();
        for i in (1..pool.len()).rev() {
            let j = rng.gen_range(0..=i);
            pool.swap(i, j);
        }
        let mut chosen: Vec<(NodeId, Port, u64)> = Vec::with_capacity(count);
        for &(n, p) in &pool {
            let mut topo = Topology::new(*mesh);
            for &(cn, cp, cc) in &chosen {
                topo.inject_fault(cn, cp, cc).expect("chosen links exist");
            }
            topo.inject_fault(n, p, 0).expect("pool links exist");
            if all_pairs_routable(&topo, budget) {
                chosen.push((n, p, 0));
                if chosen.len() == count {
                    return Ok(chosen);
                }
            }
        }
    }
    Err(ConfigError::Invalid(format!(
        "no routable fault set of {count} links found at {rate}%"
    )))
}

/// One Trojan per fault-adjacent router, infecting the input buffer opposite
/// the router's lowest-index dead direction — the port whose traffic most
/// plausibly wants to cross that link.
pub fn place_trojans(
    faults: &[(NodeId, Port, u64)],
    enable: &EnableSchedule,
) -> Vec<TrojanInstance> {
    let mut lowest: std::collections::BTreeMap<NodeId, Port> = std::collections::BTreeMap::new();
    for &(node, dir, _) in faults {
        lowest
            .entry(node)
            .and_modify(|d| {
                if dir.dir_index() < d.dir_index() {
                    *d = dir;
                }
            })
            .or_insert(dir);
    }
    lowest
        .into_iter()
        .map(|(router, dir)| TrojanInstance {
            router,
            buffer: dir.opposite().buffer_index(),
            enable: enable.clone(),
        })
        .collect()
}

struct Variant {
    suffix: String,
    sefar: bool,
    faults: Vec<(NodeId, Port, u64)>,
    trojans: Vec<TrojanInstance>,
}

fn format_rate(rate: f64) -> String {
    if rate.fract() == 0.0 {
        format!("{}", rate as u64)
    } else {
        format!("{rate}")
    }
}

fn build_variants(plan: &PlanConfig, mesh: &Mesh) -> Result<Vec<Variant>, ConfigError> {
    let mut variants = vec![Variant {
        suffix: "ff".into(),
        sefar: false,
        faults: Vec::new(),
        trojans: Vec::new(),
    }];
    for &rate in &plan.fault_rates {
        let seed = splitmix64(plan.seed ^ rate.to_bits());
        let faults = sample_fault_set(mesh, rate, seed, plan.misroute_budget)?;
        let label = format_rate(rate);
        variants.push(Variant {
            suffix: format!("faulty{label}-dormant"),
            sefar: false,
            faults: faults.clone(),
            trojans: place_trojans(&faults, &EnableSchedule::never()),
        });
        variants.push(Variant {
            suffix: format!("faulty{label}-active"),
            sefar: true,
            faults: faults.clone(),
            trojans: place_trojans(&faults, &EnableSchedule::always()),
        });
    }
    Ok(variants)
}

/// Everything a sweep produces, ready to be written out.
#[derive(Debug)]
pub struct SweepOutput {
    /// All per-run rows under the standard metrics header.
    pub metrics_csv: String,
    /// `(file name, contents)` per series: `apl_<label>.dat` and
    /// `plp_<label>.dat` with one `pir mean` line per injection rate.
    pub series: Vec<(String, String)>,
    /// Human-readable notes for runs aborted by the watchdog.
    pub aborts: Vec<String>,
    /// Total runs attempted.
    pub runs: usize,
}

/// Runs the whole plan. Scenario-construction problems are fatal; watchdog
/// aborts are recorded per cell and excluded from the series means.
pub fn run_sweep(plan: &PlanConfig) -> Result<SweepOutput, SimError> {
    plan.validate()?;
    let mesh = Mesh::new(plan.width, plan.height).map_err(ConfigError::Invalid)?;
    let variants = build_variants(plan, &mesh)?;
    let mut metrics_csv = String::from(MetricsReport::csv_header());
    metrics_csv.push('\n');
    let mut series = Vec::new();
    let mut aborts = Vec::new();
    let mut runs = 0;
    for pattern in &plan.patterns {
        for var in &variants {
            let label = format!("{}-{}", pattern.name(), var.suffix);
            let mut apl_lines = String::new();
            let mut plp_lines = String::new();
            for (pi, &pir) in plan.pirs.iter().enumerate() {
                let mut apls = Vec::new();
                let mut plps = Vec::new();
                for rep in 0..plan.reps {
                    let seed = cell_seed(plan.seed, pi, rep);
                    let mut cfg = plan.base_scenario();
                    cfg.name = label.clone();
                    cfg.seed = seed;
                    cfg.pir = pir;
                    cfg.traffic = TrafficSpec::Pattern(*pattern);
                    cfg.sefar = var.sefar;
                    cfg.faults = var.faults.clone();
                    cfg.trojans = var.trojans.clone();
                    let mut eng = Engine::new(cfg)?;
                    runs += 1;
                    match eng.run() {
                        Ok(()) => {
                            let report = eng.report();
                            metrics_csv.push_str(&report.csv_row());
                            metrics_csv.push('\n');
                            apls.push(report.apl);
                            plps.push(report.plp);
                        }
                        Err(e @ SimError::Watchdog { .. }) => {
                            aborts.push(format!("{label} pir={pir} rep={rep} seed={seed}: {e}"));
                        }
                        Err(e) => return Err(e),
                    }
                }
                if !apls.is_empty() {
                    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
                    apl_lines.push_str(&format!("{pir} {:.6}\n", mean(&apls)));
                    plp_lines.push_str(&format!("{pir} {:.6}\n", mean(&plps)));
                }
            }
            series.push((format!("apl_{label}.dat"), apl_lines));
            series.push((format!("plp_{label}.dat"), plp_lines));
        }
    }
    Ok(SweepOutput {
        metrics_csv,
        series,
        aborts,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic::Pattern;

    #[test]
    fn splitmix_reference_value() {
        // First output of the reference SplitMix64 stream from seed 0.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_ne!(splitmix64(1), splitmix64(2));
    }

    #[test]
    fn cell_seeds_differ_across_cells_not_configs() {
        let a = cell_seed(42, 0, 0);
        assert_eq!(a, cell_seed(42, 0, 0), "deterministic");
        assert_ne!(a, cell_seed(42, 0, 1));
        assert_ne!(a, cell_seed(42, 1, 0));
        assert_ne!(a, cell_seed(43, 0, 0));
    }

    #[test]
    fn fault_sets_are_distinct_routable_and_sized() {
        let mesh = Mesh::new(4, 4).unwrap();
        // 48 directed links; 10% rounds to 5.
        let faults = sample_fault_set(&mesh, 10.0, 7, 8).unwrap();
        assert_eq!(faults.len(), 5);
        let mut seen = std::collections::BTreeSet::new();
        for &(n, p, c) in &faults {
            assert_eq!(c, 0);
            assert!(seen.insert((n, p)), "duplicate fault");
        }
        // Same seed, same set.
        assert_eq!(faults, sample_fault_set(&mesh, 10.0, 7, 8).unwrap());
        // Every pair stays routable under the sampled faults.
        let mut topo = Topology::new(mesh);
        for &(n, p, c) in &faults {
            topo.inject_fault(n, p, c).unwrap();
        }
        for s in mesh.nodes() {
            for d in mesh.nodes() {
                if s != d {
                    assert!(walk_route(&topo, s, d, 0, 8).is_some(), "{s}->{d}");
                }
            }
        }
    }

    #[test]
    fn trojans_sit_opposite_the_lowest_dead_direction() {
        let faults = vec![
            (9, Port::South, 0),
            (9, Port::East, 0),
            (2, Port::West, 0),
        ];
        let trojans = place_trojans(&faults, &EnableSchedule::always());
        assert_eq!(trojans.len(), 2);
        assert_eq!((trojans[0].router, trojans[0].buffer), (2, 2), "opposite W is E");
        assert_eq!((trojans[1].router, trojans[1].buffer), (9, 4), "E beats S; opposite is W");
    }

    #[test]
    fn mini_sweep_produces_paired_rows_and_series() {
        let plan = PlanConfig {
            width: 4,
            height: 4,
            pirs: vec![0.01],
            reps: 2,
            fault_rates: vec![5.0],
            patterns: vec![Pattern::Uniform],
            warmup: 100,
            measure: 500,
            seed: 5,
            ..PlanConfig::default()
        };
        let out = run_sweep(&plan).unwrap();
        assert_eq!(out.runs, 6, "3 variants x 1 pir x 2 reps");
        assert!(out.aborts.is_empty(), "aborts: {:?}", out.aborts);
        let lines: Vec<&str> = out.metrics_csv.lines().collect();
        assert_eq!(lines[0], MetricsReport::csv_header());
        assert_eq!(lines.len(), 7);
        // Same (pir, rep) cell shares its seed across configurations.
        let seed_of = |label: &str, idx: usize| -> String {
            lines[1..]
                .iter()
                .filter(|l| l.starts_with(label))
                .nth(idx)
                .unwrap()
                .split(',')
                .nth(1)
                .unwrap()
                .to_string()
        };
        assert_eq!(seed_of("uniform-ff", 0), seed_of("uniform-faulty5-dormant", 0));
        assert_eq!(seed_of("uniform-ff", 1), seed_of("uniform-faulty5-active", 1));
        assert_ne!(seed_of("uniform-ff", 0), seed_of("uniform-ff", 1));
        // Series files exist for every configuration, one line per rate.
        assert_eq!(out.series.len(), 6);
        let names: Vec<&str> = out.series.iter().map(|(n, _)| n.as_str()).collect();
        assert!(names.contains(&"apl_uniform-faulty5-active.dat"));
        assert!(names.contains(&"plp_uniform-ff.dat"));
        for (_, content) in &out.series {
            assert_eq!(content.lines().count(), 1);
            assert!(content.starts_with("0.01 "));
        }
        // Nothing drops here: faults are avoided and Trojans stay dormant or
        // are mitigated.
        for line in &lines[1..] {
            let dropped: u64 = line.split(',').nth(5).unwrap().parse().unwrap();
            assert_eq!(dropped, 0, "{line}");
        }
    }
}
