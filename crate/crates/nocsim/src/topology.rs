//! 2D-mesh geometry, directed link health, and per-router link-status views.
//!
//! Routers are numbered row-major with y increasing downward, so North means
//! toward row y-1. Inter-router links are directed; a fault on one direction
//! of a channel leaves the opposite direction usable. Each router sees the
//! health of every link whose source lies within two hops (its LSR), after a
//! configurable propagation delay.

use std::fmt;

/// Router index in `[0, width*height)`, row-major.
pub type NodeId = usize;

/// The five router ports. Discriminants equal the 3-bit port-select codes
/// (P2P1P0): Local=000, N=001, E=010, S=011, W=100.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Port {
    Local = 0,
    North = 1,
    East = 2,
    South = 3,
    West = 4,
}

impl Port {
    /// The four directional ports in fixed arbitration order.
    pub const DIRECTIONS: [Port; 4] = [Port::North, Port::East, Port::South, Port::West];

    /// All five ports in fixed order (directions first, Local last is not
    /// wanted here; buffer index order is N,E,S,W,Local).
    pub const ALL: [Port; 5] = [
        Port::North,
        Port::East,
        Port::South,
        Port::West,
        Port::Local,
    ];

    /// Index into direction-sized arrays; panics on Local.
    pub fn dir_index(self) -> usize {
        match self {
            Port::North => 0,
            Port::East => 1,
            Port::South => 2,
            Port::West => 3,
            Port::Local => panic!("Local port has no direction index"),
        }
    }

    pub fn from_dir_index(i: usize) -> Port {
        Port::DIRECTIONS[i]
    }

    /// Input-buffer index 1..=5 (N,E,S,W,Local), as used in config files and
    /// the control unit's state space.
    pub fn buffer_index(self) -> usize {
        match self {
            Port::North => 1,
            Port::East => 2,
            Port::South => 3,
            Port::West => 4,
            Port::Local => 5,
        }
    }

    pub fn from_buffer_index(i: usize) -> Option<Port> {
        match i {
            1 => Some(Port::North),
            2 => Some(Port::East),
            3 => Some(Port::South),
            4 => Some(Port::West),
            5 => Some(Port::Local),
            _ => None,
        }
    }

    pub fn opposite(self) -> Port {
        match self {
            Port::North => Port::South,
            Port::East => Port::West,
            Port::South => Port::North,
            Port::West => Port::East,
            Port::Local => Port::Local,
        }
    }

    pub fn is_directional(self) -> bool {
        self != Port::Local
    }

    pub fn letter(self) -> char {
        match self {
            Port::Local => 'L',
            Port::North => 'N',
            Port::East => 'E',
            Port::South => 'S',
            Port::West => 'W',
        }
    }

    pub fn from_letter(c: char) -> Option<Port> {
        match c.to_ascii_uppercase() {
            'L' => Some(Port::Local),
            'N' => Some(Port::North),
            'E' => Some(Port::East),
            'S' => Some(Port::South),
            'W' => Some(Port::West),
            _ => None,
        }
    }
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Validated 3-bit port-select code. Only 000..=100 are representable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PortCode(u8);

impl PortCode {
    pub fn new(bits: u8) -> Option<PortCode> {
        if bits <= 0b100 {
            Some(PortCode(bits))
        } else {
            None
        }
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn port(self) -> Port {
        code_port(self)
    }
}

impl fmt::Display for PortCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:03b}", self.0)
    }
}

/// Port -> 3-bit select code (N=001, E=010, S=011, W=100, Local=000).
pub fn port_code(port: Port) -> PortCode {
    PortCode(port as u8)
}

/// Select code -> port; total on valid codes by construction.
pub fn code_port(code: PortCode) -> Port {
    match code.0 {
        0 => Port::Local,
        1 => Port::North,
        2 => Port::East,
        3 => Port::South,
        4 => Port::West,
        _ => unreachable!("PortCode invariant"),
    }
}

/// Mesh geometry: coordinates, neighbors, distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mesh {
    width: usize,
    height: usize,
}

impl Mesh {
    /// Builds a width x height mesh; both dimensions must be at least 2.
    pub fn new(width: usize, height: usize) -> Result<Mesh, String> {
        if width < 2 || height < 2 {
            return Err(format!(
                "mesh dimensions must be at least 2x2, got {width}x{height}"
            ));
        }
        Ok(Mesh { width, height })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node < self.len()
    }

    pub fn coord(&self, node: NodeId) -> (usize, usize) {
        debug_assert!(self.contains(node));
        (node % self.width, node / self.width)
    }

    pub fn node_at(&self, x: usize, y: usize) -> NodeId {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        0..self.len()
    }

    /// Adjacent node in a compass direction; None at the boundary.
    pub fn neighbor(&self, node: NodeId, port: Port) -> Option<NodeId> {
        let (x, y) = self.coord(node);
        match port {
            Port::Local => None,
            Port::North => (y > 0).then(|| self.node_at(x, y - 1)),
            Port::South => (y + 1 < self.height).then(|| self.node_at(x, y + 1)),
            Port::East => (x + 1 < self.width).then(|| self.node_at(x + 1, y)),
            Port::West => (x > 0).then(|| self.node_at(x - 1, y)),
        }
    }

    pub fn manhattan(&self, a: NodeId, b: NodeId) -> usize {
        let (ax, ay) = self.coord(a);
        let (bx, by) = self.coord(b);
        ax.abs_diff(bx) + ay.abs_diff(by)
    }

    /// Directed links as (source, direction) pairs, in node-then-direction order.
    pub fn links(&self) -> impl Iterator<Item = (NodeId, Port)> + '_ {
        self.nodes().flat_map(move |n| {
            Port::DIRECTIONS
                .into_iter()
                .filter_map(move |d| self.neighbor(n, d).map(|_| (n, d)))
        })
    }
}

/// Error from fault installation.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FaultError {
    #[error("router {0} is outside the mesh")]
    UnknownRouter(NodeId),
    #[error("router {node} has no {dir} link (mesh boundary)")]
    MissingLink { node: NodeId, dir: Port },
    #[error("link {node} {dir} is already faulty (from cycle {since})")]
    AlreadyFaulty { node: NodeId, dir: Port, since: u64 },
}

/// Mesh plus permanent directed-link faults and the LSR propagation delay.
#[derive(Debug, Clone)]
pub struct Topology {
    mesh: Mesh,
    /// Per node, per direction: cycle at which the outbound link fails.
    fault_at: Vec<[Option<u64>; 4]>,
    /// Cycles between a fault and its appearance in LSR views.
    lsr_delay: u64,
}

impl Topology {
    pub fn new(mesh: Mesh) -> Topology {
        Topology {
            mesh,
            fault_at: vec![[None; 4]; mesh.len()],
            lsr_delay: 0,
        }
    }

    pub fn with_lsr_delay(mut self, delay: u64) -> Topology {
        self.lsr_delay = delay;
        self
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn lsr_delay(&self) -> u64 {
        self.lsr_delay
    }

    /// Marks the outbound link of `node` in `dir` permanently faulty from
    /// `cycle` onward.
    pub fn inject_fault(&mut self, node: NodeId, dir: Port, cycle: u64) -> Result<(), FaultError> {
        if !self.mesh.contains(node) {
            return Err(FaultError::UnknownRouter(node));
        }
        if !dir.is_directional() || self.mesh.neighbor(node, dir).is_none() {
            return Err(FaultError::MissingLink { node, dir });
        }
        let slot = &mut self.fault_at[node][dir.dir_index()];
        if let Some(since) = *slot {
            return Err(FaultError::AlreadyFaulty { node, dir, since });
        }
        *slot = Some(cycle);
        Ok(())
    }

    pub fn link_exists(&self, node: NodeId, dir: Port) -> bool {
        dir.is_directional() && self.mesh.neighbor(node, dir).is_some()
    }

    /// Physical health at `cycle`: a link drops flits from its fault cycle on.
    pub fn link_alive_at(&self, node: NodeId, dir: Port, cycle: u64) -> bool {
        debug_assert!(self.link_exists(node, dir));
        match self.fault_at[node][dir.dir_index()] {
            Some(c) => cycle < c,
            None => true,
        }
    }

    pub fn fault_cycle(&self, node: NodeId, dir: Port) -> Option<u64> {
        self.fault_at[node][dir.dir_index()]
    }

    /// All installed faults in deterministic (node, direction) order.
    pub fn faults(&self) -> Vec<(NodeId, Port, u64)> {
        let mut out = Vec::new();
        for n in self.mesh.nodes() {
            for d in Port::DIRECTIONS {
                if let Some(c) = self.fault_at[n][d.dir_index()] {
                    out.push((n, d, c));
                }
            }
        }
        out
    }

    /// The link-status view of `node` at `cycle` (faults visible after the
    /// propagation delay).
    pub fn lsr(&self, node: NodeId, cycle: u64) -> LsrView<'_> {
        LsrView {
            topo: self,
            node,
            cycle,
        }
    }
}

/// A router's link-status register: its own outbound links plus every link
/// whose source router is within Manhattan distance 2.
#[derive(Clone, Copy)]
pub struct LsrView<'a> {
    topo: &'a Topology,
    node: NodeId,
    cycle: u64,
}

impl<'a> LsrView<'a> {
    pub fn node(&self) -> NodeId {
        self.node
    }

    fn visible(&self, fault: Option<u64>) -> bool {
        match fault {
            Some(c) => self.cycle >= c.saturating_add(self.topo.lsr_delay),
            None => false,
        }
    }

    /// True when this router's own outbound link in `dir` is known faulty
    /// (the SS bits of the router datapath).
    pub fn own_faulty(&self, dir: Port) -> bool {
        if !self.topo.link_exists(self.node, dir) {
            return false;
        }
        self.visible(self.topo.fault_at[self.node][dir.dir_index()])
    }

    /// Own-link bits (LN, LE, LS, LW), 1 = faulty.
    pub fn own_bits(&self) -> [bool; 4] {
        [
            self.own_faulty(Port::North),
            self.own_faulty(Port::East),
            self.own_faulty(Port::South),
            self.own_faulty(Port::West),
        ]
    }

    /// Whether any own outbound link is faulty.
    pub fn any_own_faulty(&self) -> bool {
        self.own_bits().iter().any(|&b| b)
    }

    /// Health of the link `src` -> `dir`, as known to this router. Only
    /// sources within two hops are covered by the register.
    pub fn link_faulty(&self, src: NodeId, dir: Port) -> bool {
        debug_assert!(
            self.topo.mesh.manhattan(self.node, src) <= 2,
            "LSR query outside the 2-hop neighborhood"
        );
        if !self.topo.link_exists(src, dir) {
            return false;
        }
        self.visible(self.topo.fault_at[src][dir.dir_index()])
    }

    /// Routers covered by this register (Manhattan distance <= 2), for audits.
    pub fn covered_sources(&self) -> Vec<NodeId> {
        self.topo
            .mesh
            .nodes()
            .filter(|&n| self.topo.mesh.manhattan(self.node, n) <= 2)
            .collect()
    }
}
