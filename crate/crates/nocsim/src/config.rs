//! Plain-text scenario and experiment-plan files.
//!
//! Both formats are `key = value` lines with `#` comments. Scenario files
//! additionally take repeated `fault = <router> <N|E|S|W> [@cycle]` and
//! `trojan = <router> <buffer 1..5> [en=<start..end[,start..end]>]` lines;
//! an `en` range with an empty end is unbounded, and omitting `en` leaves the
//! kill switch off.

use std::path::Path;

use thiserror::Error;

use crate::metrics::EnergyModel;
use crate::routing::validate_reachability;
use crate::topology::{Mesh, NodeId, Port, Topology};
use crate::traffic::{parse_trace, Pattern, TrafficSpec};
use crate::trojan::{EnableSchedule, TrojanInstance};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error("{}", format_unreachable(.0))]
    Unreachable(Vec<(NodeId, NodeId)>),
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

fn format_unreachable(pairs: &[(NodeId, NodeId)]) -> String {
    let shown: Vec<String> = pairs
        .iter()
        .take(8)
        .map(|&(s, d)| format!("{s}->{d}"))
        .collect();
    let suffix = if pairs.len() > 8 {
        format!(" and {} more", pairs.len() - 8)
    } else {
        String::new()
    };
    format!(
        "{} traffic pair(s) unreachable under the configured faults: {}{}",
        pairs.len(),
        shown.join(", "),
        suffix
    )
}

/// Everything one simulation run needs.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub vcs: usize,
    pub buffer_depth: u32,
    pub packet_length: u32,
    pub routing: String,
    pub sefar: bool,
    pub traffic: TrafficSpec,
    /// Injection rate in flits per cycle per node (pattern traffic only).
    pub pir: f64,
    pub warmup: u64,
    pub measure: u64,
    pub seed: u64,
    /// Abort after this many cycles without flit movement while packets are
    /// in flight.
    pub watchdog: u64,
    /// Cycles before a new fault becomes visible in link-status views.
    pub lsr_delay: u64,
    pub misroute_budget: u32,
    pub energy: EnergyModel,
    pub faults: Vec<(NodeId, Port, u64)>,
    pub trojans: Vec<TrojanInstance>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: "scenario".into(),
            width: 8,
            height: 8,
            vcs: 2,
            buffer_depth: 4,
            packet_length: 4,
            routing: "ftxy-lookahead".into(),
            sefar: false,
            traffic: TrafficSpec::Pattern(Pattern::Uniform),
            pir: 0.01,
            warmup: 1000,
            measure: 10000,
            seed: 1,
            watchdog: 10000,
            lsr_delay: 0,
            misroute_budget: 8,
            energy: EnergyModel::default(),
            faults: Vec::new(),
            trojans: Vec::new(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(value: &str, line: usize, key: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Parse {
        line,
        msg: format!("bad value `{value}` for {key}"),
    })
}

impl ScenarioConfig {
    /// Parses scenario text. `trace_base` resolves relative trace paths.
    pub fn parse(text: &str, trace_base: &Path) -> Result<ScenarioConfig, ConfigError> {
        let mut cfg = ScenarioConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| ConfigError::Parse {
                line,
                msg: format!("expected `key = value`, got `{body}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "name" => cfg.name = value.to_string(),
                "mesh" => {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    if parts.len() != 2 {
                        return Err(ConfigError::Parse {
                            line,
                            msg: format!("mesh takes `width height`, got `{value}`"),
                        });
                    }
                    cfg.width = parse_num(parts[0], line, "mesh width")?;
                    cfg.height = parse_num(parts[1], line, "mesh height")?;
                }
                "vcs" => cfg.vcs = parse_num(value, line, key)?,
                "buffer_depth" => cfg.buffer_depth = parse_num(value, line, key)?,
                "packet_length" => cfg.packet_length = parse_num(value, line, key)?,
                "routing" => cfg.routing = value.to_string(),
                "sefar" => {
                    cfg.sefar = match value {
                        "on" => true,
                        "off" => false,
                        _ => {
                            return Err(ConfigError::Parse {
                                line,
                                msg: format!("sefar takes on|off, got `{value}`"),
                            })
                        }
                    }
                }
                "traffic" => cfg.traffic = parse_traffic(value, line, trace_base)?,
                "pir" => cfg.pir = parse_num(value, line, key)?,
                "warmup" => cfg.warmup = parse_num(value, line, key)?,
                "measure" => cfg.measure = parse_num(value, line, key)?,
                "seed" => cfg.seed = parse_num(value, line, key)?,
                "watchdog" => cfg.watchdog = parse_num(value, line, key)?,
                "lsr_delay" => cfg.lsr_delay = parse_num(value, line, key)?,
                "misroute_budget" => cfg.misroute_budget = parse_num(value, line, key)?,
                "e_buffer_write" => cfg.energy.e_buffer_write = parse_num(value, line, key)?,
                "e_route" => cfg.energy.e_route = parse_num(value, line, key)?,
                "e_xbar" => cfg.energy.e_xbar = parse_num(value, line, key)?,
                "e_link" => cfg.energy.e_link = parse_num(value, line, key)?,
                "p_static" => cfg.energy.p_static = parse_num(value, line, key)?,
                "fault" => cfg.faults.push(parse_fault(value, line)?),
                "trojan" => cfg.trojans.push(parse_trojan(value, line)?),
                _ => {
                    return Err(ConfigError::Parse {
                        line,
                        msg: format!("unknown key `{key}`"),
                    })
                }
            }
        }
        Ok(cfg)
    }

    /// Reads and parses a scenario file; trace paths resolve relative to it.
    pub fn load(path: &Path) -> Result<ScenarioConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        ScenarioConfig::parse(&text, base)
    }

    /// Builds the faulted topology without the reachability check.
    pub fn build_topology(&self) -> Result<Topology, ConfigError> {
        let mesh = Mesh::new(self.width, self.height)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let mut topo = Topology::new(mesh).with_lsr_delay(self.lsr_delay);
        for &(node, port, cycle) in &self.faults {
            topo.inject_fault(node, port, cycle)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(topo)
    }

    /// The ordered (src, dst) pairs this scenario's traffic can produce.
    pub fn endpoint_pairs(&self, mesh: &Mesh) -> Vec<(NodeId, NodeId)> {
        match &self.traffic {
            TrafficSpec::Pattern(_) => {
                // Every pattern can fall back to uniform draws, so all
                // ordered pairs must be reachable.
                let mut pairs = Vec::with_capacity(mesh.len() * (mesh.len() - 1));
                for s in mesh.nodes() {
                    for d in mesh.nodes() {
                        if s != d {
                            pairs.push((s, d));
                        }
                    }
                }
                pairs
            }
            TrafficSpec::Trace(records) => {
                let mut pairs: Vec<(NodeId, NodeId)> =
                    records.iter().map(|r| (r.src, r.dst)).collect();
                pairs.sort_unstable();
                pairs.dedup();
                pairs
            }
        }
    }

    /// Full validation: parameter ranges, fault/trojan placement, pattern
    /// applicability, and reachability of every traffic pair.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        if self.vcs == 0 {
            return invalid("vcs must be at least 1".into());
        }
        if self.buffer_depth == 0 {
            return invalid("buffer_depth must be at least 1".into());
        }
        if self.packet_length == 0 {
            return invalid("packet_length must be at least 1".into());
        }
        if self.measure == 0 {
            return invalid("measure must be at least 1".into());
        }
        if self.watchdog == 0 {
            return invalid("watchdog must be at least 1".into());
        }
        if self.routing != "ftxy-lookahead" {
            return invalid(format!(
                "unknown routing policy `{}` (known: ftxy-lookahead)",
                self.routing
            ));
        }
        if !(self.pir >= 0.0) || self.pir / self.packet_length as f64 > 1.0 {
            return invalid(format!(
                "pir {} is not a valid flit rate for length {}",
                self.pir, self.packet_length
            ));
        }
        let topo = self.build_topology()?;
        let mesh = topo.mesh();
        if let TrafficSpec::Pattern(p) = &self.traffic {
            p.supported_on(mesh).map_err(ConfigError::Invalid)?;
        }
        if let TrafficSpec::Trace(records) = &self.traffic {
            for r in records {
                if r.src >= mesh.len() || r.dst >= mesh.len() {
                    return invalid(format!(
                        "trace record {} -> {} outside the {}x{} mesh",
                        r.src,
                        r.dst,
                        mesh.width(),
                        mesh.height()
                    ));
                }
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for t in &self.trojans {
            if t.router >= mesh.len() {
                return invalid(format!("trojan router {} outside the mesh", t.router));
            }
            if !(1..=5).contains(&t.buffer) {
                return invalid(format!("trojan buffer {} outside 1..=5", t.buffer));
            }
            if !seen.insert((t.router, t.buffer)) {
                return invalid(format!(
                    "duplicate trojan at router {} buffer {}",
                    t.router, t.buffer
                ));
            }
        }
        let pairs = self.endpoint_pairs(mesh);
        let bad = validate_reachability(&topo, &pairs);
        if !bad.is_empty() {
            return Err(ConfigError::Unreachable(bad));
        }
        Ok(())
    }
}

fn parse_traffic(value: &str, line: usize, base: &Path) -> Result<TrafficSpec, ConfigError> {
    if let Some(p) = Pattern::from_name(value) {
        return Ok(TrafficSpec::Pattern(p));
    }
    if let Some(path) = value.strip_prefix("trace") {
        let path = path.trim();
        if path.is_empty() {
            return Err(ConfigError::Parse {
                line,
                msg: "traffic trace takes a file path".into(),
            });
        }
        let full = base.join(path);
        let text = std::fs::read_to_string(&full).map_err(|e| ConfigError::Io {
            path: full.display().to_string(),
            msg: e.to_string(),
        })?;
        let records = parse_trace(&text).map_err(|e| ConfigError::Parse {
            line,
            msg: e.to_string(),
        })?;
        return Ok(TrafficSpec::Trace(records));
    }
    Err(ConfigError::Parse {
        line,
        msg: format!("unknown traffic `{value}` (uniform|transpose|shuffle|trace <path>)"),
    })
}

fn parse_fault(value: &str, line: usize) -> Result<(NodeId, Port, u64), ConfigError> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() != 2 && parts.len() != 3 {
        return Err(ConfigError::Parse {
            line,
            msg: format!("fault takes `<router> <N|E|S|W> [@cycle]`, got `{value}`"),
        });
    }
    let router: NodeId = parse_num(parts[0], line, "fault router")?;
    let port = parts[1]
        .chars()
        .next()
        .and_then(Port::from_letter)
        .filter(|p| p.is_directional() && parts[1].len() == 1)
        .ok_or_else(|| ConfigError::Parse {
            line,
            msg: format!("bad fault direction `{}`", parts[1]),
        })?;
    let cycle = match parts.get(2) {
        None => 0,
        Some(s) => {
            let s = s.strip_prefix('@').ok_or_else(|| ConfigError::Parse {
                line,
                msg: format!("fault cycle must look like `@250`, got `{s}`"),
            })?;
            parse_num(s, line, "fault cycle")?
        }
    };
    Ok((router, port, cycle))
}

fn parse_trojan(value: &str, line: usize) -> Result<TrojanInstance, ConfigError> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() != 2 && parts.len() != 3 {
        return Err(ConfigError::Parse {
            line,
            msg: format!("trojan takes `<router> <buffer> [en=<ranges>]`, got `{value}`"),
        });
    }
    let router: NodeId = parse_num(parts[0], line, "trojan router")?;
    let buffer: usize = parse_num(parts[1], line, "trojan buffer")?;
    if !(1..=5).contains(&buffer) {
        return Err(ConfigError::Parse {
            line,
            msg: format!("trojan buffer {buffer} outside 1..=5"),
        });
    }
    let enable = match parts.get(2) {
        None => EnableSchedule::never(),
        Some(s) => {
            let ranges = s.strip_prefix("en=").ok_or_else(|| ConfigError::Parse {
                line,
                msg: format!("expected `en=<ranges>`, got `{s}`"),
            })?;
            EnableSchedule::parse(ranges).map_err(|msg| ConfigError::Parse { line, msg })?
        }
    };
    Ok(TrojanInstance {
        router,
        buffer,
        enable,
    })
}

/// An experiment plan: a base scenario shape swept over injection rates for
/// the fault-free, faulty-dormant, and faulty-active configurations.
#[derive(Debug, Clone)]
pub struct PlanConfig {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub vcs: usize,
    pub buffer_depth: u32,
    pub packet_length: u32,
    pub warmup: u64,
    pub measure: u64,
    pub watchdog: u64,
    pub lsr_delay: u64,
    pub misroute_budget: u32,
    pub energy: EnergyModel,
    pub seed: u64,
    pub pirs: Vec<f64>,
    pub reps: u32,
    /// Percent of mesh links to make faulty in the faulty configurations.
    pub fault_rates: Vec<f64>,
    pub patterns: Vec<Pattern>,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            name: "sweep".into(),
            width: 8,
            height: 8,
            vcs: 2,
            buffer_depth: 4,
            packet_length: 4,
            warmup: 1000,
            measure: 10000,
            watchdog: 10000,
            lsr_delay: 0,
            misroute_budget: 8,
            energy: EnergyModel::default(),
            seed: 1,
            pirs: Vec::new(),
            reps: 3,
            fault_rates: vec![5.0, 10.0],
            patterns: vec![Pattern::Uniform],
        }
    }
}

impl PlanConfig {
    pub fn parse(text: &str) -> Result<PlanConfig, ConfigError> {
        let mut plan = PlanConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| ConfigError::Parse {
                line,
                msg: format!("expected `key = value`, got `{body}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let list = || value.split_whitespace();
            match key {
                "name" => plan.name = value.to_string(),
                "mesh" => {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    if parts.len() != 2 {
                        return Err(ConfigError::Parse {
                            line,
                            msg: format!("mesh takes `width height`, got `{value}`"),
                        });
                    }
                    plan.width = parse_num(parts[0], line, "mesh width")?;
                    plan.height = parse_num(parts[1], line, "mesh height")?;
                }
                "vcs" => plan.vcs = parse_num(value, line, key)?,
                "buffer_depth" => plan.buffer_depth = parse_num(value, line, key)?,
                "packet_length" => plan.packet_length = parse_num(value, line, key)?,
                "warmup" => plan.warmup = parse_num(value, line, key)?,
                "measure" => plan.measure = parse_num(value, line, key)?,
                "watchdog" => plan.watchdog = parse_num(value, line, key)?,
                "lsr_delay" => plan.lsr_delay = parse_num(value, line, key)?,
                "misroute_budget" => plan.misroute_budget = parse_num(value, line, key)?,
                "e_buffer_write" => plan.energy.e_buffer_write = parse_num(value, line, key)?,
                "e_route" => plan.energy.e_route = parse_num(value, line, key)?,
                "e_xbar" => plan.energy.e_xbar = parse_num(value, line, key)?,
                "e_link" => plan.energy.e_link = parse_num(value, line, key)?,
                "p_static" => plan.energy.p_static = parse_num(value, line, key)?,
                "seed" => plan.seed = parse_num(value, line, key)?,
                "reps" => plan.reps = parse_num(value, line, key)?,
                "pirs" => {
                    plan.pirs = list()
                        .map(|v| parse_num(v, line, "pir"))
                        .collect::<Result<_, _>>()?;
                }
                "fault_rates" => {
                    plan.fault_rates = list()
                        .map(|v| parse_num(v, line, "fault rate"))
                        .collect::<Result<_, _>>()?;
                }
                "patterns" => {
                    plan.patterns = list()
                        .map(|v| {
                            Pattern::from_name(v).ok_or_else(|| ConfigError::Parse {
                                line,
                                msg: format!("unknown pattern `{v}`"),
                            })
                        })
                        .collect::<Result<_, _>>()?;
                }
                _ => {
                    return Err(ConfigError::Parse {
                        line,
                        msg: format!("unknown key `{key}`"),
                    })
                }
            }
        }
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<PlanConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        PlanConfig::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        let mesh = Mesh::new(self.width, self.height)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.pirs.is_empty() {
            return invalid("pirs must list at least one injection rate".into());
        }
        if self.reps == 0 {
            return invalid("reps must be at least 1".into());
        }
        if self.patterns.is_empty() {
            return invalid("patterns must list at least one pattern".into());
        }
        for p in &self.patterns {
            p.supported_on(&mesh).map_err(ConfigError::Invalid)?;
        }
        for &pir in &self.pirs {
            if !(pir >= 0.0) || pir / self.packet_length as f64 > 1.0 {
                return invalid(format!("pir {pir} is not a valid flit rate"));
            }
        }
        for &rate in &self.fault_rates {
            if !(0.0..=50.0).contains(&rate) {
                return invalid(format!("fault rate {rate}% outside 0..=50"));
            }
        }
        if self.measure == 0 || self.watchdog == 0 {
            return invalid("measure and watchdog must be at least 1".into());
        }
        Ok(())
    }

    /// The scenario shape shared by every sweep cell.
    pub fn base_scenario(&self) -> ScenarioConfig {
        ScenarioConfig {
            name: self.name.clone(),
            width: self.width,
            height: self.height,
            vcs: self.vcs,
            buffer_depth: self.buffer_depth,
            packet_length: self.packet_length,
            warmup: self.warmup,
            measure: self.measure,
            watchdog: self.watchdog,
            lsr_delay: self.lsr_delay,
            misroute_budget: self.misroute_budget,
            energy: self.energy,
            seed: self.seed,
            ..ScenarioConfig::default()
        }
    }
}
