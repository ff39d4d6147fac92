//! Traffic generation: synthetic destination patterns driven by a Bernoulli
//! packet-creation process, and plain-text trace replay.
//!
//! The injection rate is given in flits per cycle per node; each node creates
//! a packet with probability rate/length per cycle so the flit rate matches.

use crate::topology::{Mesh, NodeId};
use rand::Rng;
use thiserror::Error;

/// Synthetic destination patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    /// Uniform random destination, redrawn until it differs from the source.
    Uniform,
    /// (x, y) -> (y, x); diagonal nodes fall back to a uniform draw.
    Transpose,
    /// One-bit left rotation of the node index; fixed points fall back to a
    /// uniform draw.
    Shuffle,
}

impl Pattern {
    pub fn name(self) -> &'static str {
        match self {
            Pattern::Uniform => "uniform",
            Pattern::Transpose => "transpose",
            Pattern::Shuffle => "shuffle",
        }
    }

    pub fn from_name(name: &str) -> Option<Pattern> {
        match name {
            "uniform" => Some(Pattern::Uniform),
            "transpose" => Some(Pattern::Transpose),
            "shuffle" => Some(Pattern::Shuffle),
            _ => None,
        }
    }

    /// Mesh-shape requirements: transpose needs a square mesh, shuffle a
    /// power-of-two node count.
    pub fn supported_on(self, mesh: &Mesh) -> Result<(), String> {
        match self {
            Pattern::Uniform => Ok(()),
            Pattern::Transpose => {
                if mesh.width() == mesh.height() {
                    Ok(())
                } else {
                    Err(format!(
                        "transpose traffic needs a square mesh, got {}x{}",
                        mesh.width(),
                        mesh.height()
                    ))
                }
            }
            Pattern::Shuffle => {
                if mesh.len().is_power_of_two() {
                    Ok(())
                } else {
                    Err(format!(
                        "shuffle traffic needs a power-of-two node count, got {}",
                        mesh.len()
                    ))
                }
            }
        }
    }
}

/// What drives packet creation for a run.
#[derive(Debug, Clone, PartialEq)]
pub enum TrafficSpec {
    Pattern(Pattern),
    Trace(Vec<TraceRecord>),
}

/// One trace-file record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub cycle: u64,
    pub src: NodeId,
    pub dst: NodeId,
    pub length: u32,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TrafficError {
    #[error("trace line {line}: {msg}")]
    Trace { line: usize, msg: String },
}

/// Parses a trace: one `cycle src dst length` record per line, `#` comments,
/// cycles non-decreasing, src != dst, length >= 1.
pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>, TrafficError> {
    let mut records = Vec::new();
    let mut last_cycle = 0u64;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(TrafficError::Trace {
                line,
                msg: format!("expected `cycle src dst length`, got {} fields", fields.len()),
            });
        }
        let parse = |s: &str, what: &str| -> Result<u64, TrafficError> {
            s.parse().map_err(|_| TrafficError::Trace {
                line,
                msg: format!("bad {what} `{s}`"),
            })
        };
        let cycle = parse(fields[0], "cycle")?;
        let src = parse(fields[1], "src")? as NodeId;
        let dst = parse(fields[2], "dst")? as NodeId;
        let length = parse(fields[3], "length")? as u32;
        if cycle < last_cycle {
            return Err(TrafficError::Trace {
                line,
                msg: format!("cycle {cycle} out of order (previous {last_cycle})"),
            });
        }
        if src == dst {
            return Err(TrafficError::Trace {
                line,
                msg: format!("src equals dst ({src})"),
            });
        }
        if length == 0 {
            return Err(TrafficError::Trace {
                line,
                msg: "length must be at least 1".into(),
            });
        }
        last_cycle = cycle;
        records.push(TraceRecord {
            cycle,
            src,
            dst,
            length,
        });
    }
    Ok(records)
}

fn uniform_dst<R: Rng>(n: usize, src: NodeId, rng: &mut R) -> NodeId {
    loop {
        let d = rng.gen_range(0..n);
        if d != src {
            return d;
        }
    }
}

/// Destination for a packet injected at `src`. Pattern applicability must be
/// checked beforehand with [`Pattern::supported_on`].
pub fn pattern_dst<R: Rng>(pattern: Pattern, mesh: &Mesh, src: NodeId, rng: &mut R) -> NodeId {
    let n = mesh.len();
    let mapped = match pattern {
        Pattern::Uniform => None,
        Pattern::Transpose => {
            let (x, y) = mesh.coord(src);
            Some(mesh.node_at(y, x))
        }
        Pattern::Shuffle => {
            let bits = n.trailing_zeros();
            Some(((src << 1) | (src >> (bits - 1))) & (n - 1))
        }
    };
    match mapped {
        Some(d) if d != src => d,
        _ => uniform_dst(n, src, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mesh8() -> Mesh {
        Mesh::new(8, 8).unwrap()
    }

    #[test]
    fn trace_parses_records_and_comments() {
        let text = "# flows\n0 8 5 4\n0 8 11 4  # trailing\n\n7 3 0 1\n";
        let records = parse_trace(text).unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(
            records[0],
            TraceRecord {
                cycle: 0,
                src: 8,
                dst: 5,
                length: 4
            }
        );
        assert_eq!(records[2].cycle, 7);
        assert_eq!(records[2].length, 1);
    }

    #[test]
    fn trace_rejects_bad_lines() {
        assert!(matches!(
            parse_trace("0 1 2"),
            Err(TrafficError::Trace { line: 1, .. })
        ));
        assert!(parse_trace("5 1 2 4\n3 1 2 4").is_err(), "cycle order");
        assert!(parse_trace("0 3 3 4").is_err(), "self pair");
        assert!(parse_trace("0 1 2 0").is_err(), "zero length");
        assert!(parse_trace("0 x 2 4").is_err(), "bad field");
    }

    #[test]
    fn uniform_never_self() {
        let mesh = mesh8();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for src in mesh.nodes() {
            for _ in 0..50 {
                assert_ne!(pattern_dst(Pattern::Uniform, &mesh, src, &mut rng), src);
            }
        }
    }

    #[test]
    fn transpose_maps_coordinates() {
        let mesh = mesh8();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        // (x=3, y=1) = node 11 -> (1, 3) = node 25.
        assert_eq!(pattern_dst(Pattern::Transpose, &mesh, 11, &mut rng), 25);
        // Diagonal node falls back to uniform but never itself.
        let diag = mesh.node_at(4, 4);
        for _ in 0..50 {
            assert_ne!(pattern_dst(Pattern::Transpose, &mesh, diag, &mut rng), diag);
        }
    }

    #[test]
    fn transpose_needs_square() {
        let mesh = Mesh::new(4, 2).unwrap();
        assert!(Pattern::Transpose.supported_on(&mesh).is_err());
        assert!(Pattern::Uniform.supported_on(&mesh).is_ok());
    }

    #[test]
    fn shuffle_rotates_index_bits() {
        let mesh = mesh8();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // 64 nodes, 6 bits: 0b000101 (5) -> 0b001010 (10).
        assert_eq!(pattern_dst(Pattern::Shuffle, &mesh, 5, &mut rng), 10);
        // Top bit wraps: 0b100000 (32) -> 0b000001 (1).
        assert_eq!(pattern_dst(Pattern::Shuffle, &mesh, 32, &mut rng), 1);
        // Fixed points 0 and 63 fall back to uniform.
        for src in [0, 63] {
            for _ in 0..50 {
                assert_ne!(pattern_dst(Pattern::Shuffle, &mesh, src, &mut rng), src);
            }
        }
    }

    #[test]
    fn shuffle_needs_power_of_two() {
        let mesh = Mesh::new(6, 6).unwrap();
        assert!(Pattern::Shuffle.supported_on(&mesh).is_err());
        let mesh = Mesh::new(4, 4).unwrap();
        assert!(Pattern::Shuffle.supported_on(&mesh).is_ok());
    }

    #[test]
    fn pattern_names_round_trip() {
        for p in [Pattern::Uniform, Pattern::Transpose, Pattern::Shuffle] {
            assert_eq!(Pattern::from_name(p.name()), Some(p));
        }
        assert_eq!(Pattern::from_name("tornado"), None);
    }
}
