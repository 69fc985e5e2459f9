//! Walk graphs: adjacency with subnode (color) labels, generators for the
//! named families, and edge-list / DOT text I/O.
//!
//! A node `x` of degree `d_x` carries `d_x` color slots, one per incident
//! edge, ordered by the sorted neighbor list `G[x]`. The subnode label
//! `S[x][i]` is the color under which node `x` appears from the far side of
//! its `i`-th edge: the index of `x` inside `G[y]` for `y = G[x][i]`. The
//! cumulative degree offsets `sD[x] = Σ_{x'<x} d_{x'}` enumerate the color
//! slots of all nodes and anchor the packed Hilbert-space basis.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum attempts for randomized generators before giving up.
const MAX_GENERATOR_ATTEMPTS: usize = 1000;

/// Errors from graph construction, generation, and I/O.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("node label {label} out of range for {n_nodes} nodes")]
    NodeOutOfRange { label: usize, n_nodes: usize },
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("node {0} is isolated (degree 0); particle motion is undefined there")]
    IsolatedNode(usize),
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("generator gave up after {0} attempts without a valid graph")]
    GeneratorExhausted(usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Immutable undirected graph with the labeling conventions used by the walk.
///
/// Construction derives and caches everything the walk needs: sorted
/// adjacency, degrees, subnode labels, and packed-basis offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    subnodes: Vec<Vec<usize>>,
    degrees: Vec<usize>,
    offsets: Vec<usize>,
    max_degree: usize,
}

impl Graph {
    /// Builds a graph from an undirected edge list.
    ///
    /// Edges may be given in either orientation; they are normalized to
    /// `(min, max)` and sorted. Rejects self-loops, duplicate edges,
    /// out-of-range labels, and isolated nodes.
    pub fn from_edges(n_nodes: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        if n_nodes < 2 {
            return Err(GraphError::TooFewNodes(n_nodes));
        }
        let mut normalized: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n_nodes {
                return Err(GraphError::NodeOutOfRange { label: a, n_nodes });
            }
            if b >= n_nodes {
                return Err(GraphError::NodeOutOfRange { label: b, n_nodes });
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            normalized.push((a.min(b), a.max(b)));
        }
        normalized.sort_unstable();
        for w in normalized.windows(2) {
            if w[0] == w[1] {
                return Err(GraphError::DuplicateEdge(w[0].0, w[0].1));
            }
        }

        let mut adjacency = vec![Vec::new(); n_nodes];
        for &(x, y) in &normalized {
            adjacency[x].push(y);
            adjacency[y].push(x);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        if let Some(x) = adjacency.iter().position(|l| l.is_empty()) {
            return Err(GraphError::IsolatedNode(x));
        }

        let degrees: Vec<usize> = adjacency.iter().map(|l| l.len()).collect();
        let max_degree = *degrees.iter().max().expect("n_nodes >= 2");
        let mut offsets = Vec::with_capacity(n_nodes);
        let mut acc = 0;
        for &d in &degrees {
            offsets.push(acc);
            acc += d;
        }
        // S[x][i] = index of x within G[y] for y = G[x][i]; G[y] is sorted, so
        // a binary search gives the position directly.
        let subnodes: Vec<Vec<usize>> = (0..n_nodes)
            .map(|x| {
                adjacency[x]
                    .iter()
                    .map(|&y| {
                        adjacency[y]
                            .binary_search(&x)
                            .expect("adjacency is symmetric by construction")
                    })
                    .collect()
            })
            .collect();

        Ok(Self {
            n_nodes,
            edges: normalized,
            adjacency,
            subnodes,
            degrees,
            offsets,
            max_degree,
        })
    }

    /// Number of nodes N.
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Number of undirected edges |E|.
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(x, y)` with `x < y`, lexicographically sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted neighbor list `G[x]`.
    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.adjacency[x]
    }

    /// Degree `d_x`.
    pub fn degree(&self, x: usize) -> usize {
        self.degrees[x]
    }

    /// All degrees, indexed by node.
    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Subnode labels `S[x]`: `S[x][i]` is the index of `x` in `G[G[x][i]]`.
    pub fn subnodes(&self, x: usize) -> &[usize] {
        &self.subnodes[x]
    }

    /// Packed-basis offset `sD[x] = Σ_{x'<x} d_{x'}`.
    pub fn offset(&self, x: usize) -> usize {
        self.offsets[x]
    }

    /// Largest degree d (the padded color dimension).
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Total degree `Σ_x d_x = 2|E|`, the number of packed color slots.
    pub fn total_degree(&self) -> usize {
        2 * self.edges.len()
    }

    /// Inverse of the slot enumeration: the node owning packed color slot
    /// `slot ∈ [0, Σd)`, i.e. the x with `sD[x] <= slot < sD[x] + d_x`.
    pub fn node_of_slot(&self, slot: usize) -> usize {
        debug_assert!(slot < self.total_degree());
        match self.offsets.binary_search(&slot) {
            Ok(x) => x,
            Err(ins) => ins - 1,
        }
    }

    /// Serializes to the edge-list text format: first line `N <edge count>`,
    /// then one `x y` line per edge.
    pub fn to_edge_list_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.n_nodes, self.edges.len());
        for &(x, y) in &self.edges {
            let _ = writeln!(out, "{x} {y}");
        }
        out
    }

    /// Parses the edge-list text format produced by [`Self::to_edge_list_text`].
    ///
    /// Blank lines and lines starting with `#` are ignored. Errors carry the
    /// 1-based line number.
    pub fn from_edge_list_text(text: &str) -> Result<Self, GraphError> {
        let mut header: Option<(usize, usize)> = None;
        let mut edges: Vec<(usize, usize)> = Vec::new();
        let mut last_line = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            last_line = line_no;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(GraphError::Parse {
                    line: line_no,
                    msg: format!("expected two integers, got {:?}", line),
                });
            }
            let a: usize = fields[0].parse().map_err(|e| GraphError::Parse {
                line: line_no,
                msg: format!("bad integer {:?}: {e}", fields[0]),
            })?;
            let b: usize = fields[1].parse().map_err(|e| GraphError::Parse {
                line: line_no,
                msg: format!("bad integer {:?}: {e}", fields[1]),
            })?;
            match header {
                None => header = Some((a, b)),
                Some(_) => edges.push((a, b)),
            }
        }
        let (n_nodes, n_edges) = header.ok_or(GraphError::Parse {
            line: 1,
            msg: "missing header line `N <edge count>`".into(),
        })?;
        if edges.len() != n_edges {
            return Err(GraphError::Parse {
                line: last_line,
                msg: format!("header announced {n_edges} edges, found {}", edges.len()),
            });
        }
        Self::from_edges(n_nodes, &edges)
    }

    /// Loads a graph from an edge-list text file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_edge_list_text(&text)
    }

    /// Writes the edge-list text format to a file.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), GraphError> {
        std::fs::write(path, self.to_edge_list_text())?;
        Ok(())
    }

    /// Graphviz DOT rendering listing every node and undirected edge.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph walk {\n");
        for x in 0..self.n_nodes {
            let _ = writeln!(out, "  {x};");
        }
        for &(x, y) in &self.edges {
            let _ = writeln!(out, "  {x} -- {y};");
        }
        out.push_str("}\n");
        out
    }
}

/// The named graph families.
///
/// Serialized form tags the variant by `family`, e.g.
/// `{"family": "cycle", "n": 9}` or
/// `{"family": "erdos_renyi", "nodes": 8, "edges": 12, "seed": 7}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// Cycle C_n, n >= 3; 2-regular.
    Cycle { n: usize },
    /// Path P_n, n >= 2.
    Path { n: usize },
    /// Ladder P_rungs x P_2: 2*rungs nodes, 3*rungs - 2 edges.
    Ladder { rungs: usize },
    /// Circular ladder C_rungs x P_2: 2*rungs nodes, 3-regular; rungs = 4 is
    /// the cube. Nodes 0..rungs are the outer cycle, rungs..2*rungs the inner
    /// cycle, with spokes i -- rungs+i.
    CircularLadder { rungs: usize },
    /// Moebius ladder on n nodes (n even >= 4): cycle C_n plus the n/2
    /// antipodal chords i -- i + n/2; 3-regular, non-bipartite.
    MoebiusLadder { n: usize },
    /// Complete graph K_n.
    Complete { n: usize },
    /// The 5-node bull graph.
    Bull,
    /// K5 (nodes 0..5) and K3 (nodes 5..8) joined by the bridge 4 -- 5.
    Kite,
    /// Simple d-regular random graph via the pairing model, retried until
    /// simple. Deterministic for a given seed.
    RandomRegular { degree: usize, nodes: usize, seed: u64 },
    /// Erdos-Renyi G(nodes, edges): a uniform random set of `edges` distinct
    /// pairs, retried until no node is isolated. Deterministic for a given
    /// seed.
    ErdosRenyi { nodes: usize, edges: usize, seed: u64 },
}

impl Family {
    /// Replaces the seed of a randomized family; no-op for deterministic ones.
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            Family::RandomRegular { degree, nodes, .. } => {
                Family::RandomRegular { degree, nodes, seed }
            }
            Family::ErdosRenyi { nodes, edges, .. } => Family::ErdosRenyi { nodes, edges, seed },
            other => other,
        }
    }
}

impl FromStr for Family {
    type Err = GraphError;

    /// Parses compact forms like `bull`, `cycle(9)`, `ladder(4)`,
    /// `random_regular(3,8,7)` (degree, nodes, seed) and
    /// `erdos_renyi(8,12,7)` (nodes, edges, seed).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = |msg: String| GraphError::InvalidParams(msg);
        let (name, args): (&str, Vec<u64>) = match s.find('(') {
            None => (s, Vec::new()),
            Some(open) => {
                let close = s
                    .rfind(')')
                    .ok_or_else(|| bad(format!("missing `)` in {s:?}")))?;
                let args = s[open + 1..close]
                    .split(',')
                    .map(|a| {
                        a.trim()
                            .parse::<u64>()
                            .map_err(|e| bad(format!("bad number {:?}: {e}", a.trim())))
                    })
                    .collect::<Result<Vec<u64>, _>>()?;
                (&s[..open], args)
            }
        };
        let arity = |want: usize| -> Result<(), GraphError> {
            if args.len() == want {
                Ok(())
            } else {
                Err(bad(format!(
                    "{name} takes {want} parameter(s), got {}",
                    args.len()
                )))
            }
        };
        match name {
            "cycle" => {
                arity(1)?;
                Ok(Family::Cycle { n: args[0] as usize })
            }
            "path" => {
                arity(1)?;
                Ok(Family::Path { n: args[0] as usize })
            }
            "ladder" => {
                arity(1)?;
                Ok(Family::Ladder { rungs: args[0] as usize })
            }
            "circular_ladder" => {
                arity(1)?;
                Ok(Family::CircularLadder { rungs: args[0] as usize })
            }
            "moebius_ladder" => {
                arity(1)?;
                Ok(Family::MoebiusLadder { n: args[0] as usize })
            }
            "complete" => {
                arity(1)?;
                Ok(Family::Complete { n: args[0] as usize })
            }
            "bull" => {
                arity(0)?;
                Ok(Family::Bull)
            }
            "kite" => {
                arity(0)?;
                Ok(Family::Kite)
            }
            "random_regular" => {
                arity(3)?;
                Ok(Family::RandomRegular {
                    degree: args[0] as usize,
                    nodes: args[1] as usize,
                    seed: args[2],
                })
            }
            "erdos_renyi" => {
                arity(3)?;
                Ok(Family::ErdosRenyi {
                    nodes: args[0] as usize,
                    edges: args[1] as usize,
                    seed: args[2],
                })
            }
            other => Err(bad(format!("unknown family {other:?}"))),
        }
    }
}

/// Generates a graph of the given family.
pub fn generate(family: &Family) -> Result<Graph, GraphError> {
    match *family {
        Family::Cycle { n } => {
            if n < 3 {
                return Err(GraphError::InvalidParams(format!("cycle needs n >= 3, got {n}")));
            }
            let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
            Graph::from_edges(n, &edges)
        }
        Family::Path { n } => {
            if n < 2 {
                return Err(GraphError::InvalidParams(format!("path needs n >= 2, got {n}")));
            }
            let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
            Graph::from_edges(n, &edges)
        }
        Family::Ladder { rungs } => {
            if rungs < 2 {
                return Err(GraphError::InvalidParams(format!(
                    "ladder needs rungs >= 2, got {rungs}"
                )));
            }
            let mut edges = Vec::new();
            for i in 0..rungs - 1 {
                edges.push((i, i + 1));
                edges.push((rungs + i, rungs + i + 1));
            }
            for i in 0..rungs {
                edges.push((i, rungs + i));
            }
            Graph::from_edges(2 * rungs, &edges)
        }
        Family::CircularLadder { rungs } => {
            if rungs < 3 {
                return Err(GraphError::InvalidParams(format!(
                    "circular_ladder needs rungs >= 3, got {rungs}"
                )));
            }
            let mut edges = Vec::new();
            for i in 0..rungs {
                edges.push((i, (i + 1) % rungs));
                edges.push((rungs + i, rungs + (i + 1) % rungs));
                edges.push((i, rungs + i));
            }
            Graph::from_edges(2 * rungs, &edges)
        }
        Family::MoebiusLadder { n } => {
            if n < 4 || n % 2 != 0 {
                return Err(GraphError::InvalidParams(format!(
                    "moebius_ladder needs even n >= 4, got {n}"
                )));
            }
            let mut edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
            for i in 0..n / 2 {
                edges.push((i, i + n / 2));
            }
            Graph::from_edges(n, &edges)
        }
        Family::Complete { n } => {
            if n < 2 {
                return Err(GraphError::InvalidParams(format!("complete needs n >= 2, got {n}")));
            }
            let mut edges = Vec::new();
            for x in 0..n {
                for y in x + 1..n {
                    edges.push((x, y));
                }
            }
            Graph::from_edges(n, &edges)
        }
        Family::Bull => Graph::from_edges(5, &[(0, 1), (0, 3), (0, 4), (2, 4), (3, 4)]),
        Family::Kite => {
            let mut edges = Vec::new();
            for x in 0..5 {
                for y in x + 1..5 {
                    edges.push((x, y));
                }
            }
            edges.push((4, 5));
            edges.extend_from_slice(&[(5, 6), (5, 7), (6, 7)]);
            Graph::from_edges(8, &edges)
        }
        Family::RandomRegular { degree, nodes, seed } => random_regular(degree, nodes, seed),
        Family::ErdosRenyi { nodes, edges, seed } => erdos_renyi(nodes, edges, seed),
    }
}

/// Pairing-model d-regular random graph, retried until simple.
fn random_regular(degree: usize, nodes: usize, seed: u64) -> Result<Graph, GraphError> {
    if degree == 0 || degree >= nodes {
        return Err(GraphError::InvalidParams(format!(
            "random_regular needs 0 < degree < nodes, got degree {degree}, nodes {nodes}"
        )));
    }
    if !(degree * nodes).is_multiple_of(2) {
        return Err(GraphError::InvalidParams(format!(
            "random_regular needs degree*nodes even, got {degree}*{nodes}"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut stems: Vec<usize> = (0..nodes).flat_map(|x| std::iter::repeat_n(x, degree)).collect();
    'attempt: for _ in 0..MAX_GENERATOR_ATTEMPTS {
        stems.shuffle(&mut rng);
        let mut edges = Vec::with_capacity(stems.len() / 2);
        for pair in stems.chunks_exact(2) {
            let (a, b) = (pair[0], pair[1]);
            if a == b {
                continue 'attempt;
            }
            edges.push((a.min(b), a.max(b)));
        }
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            continue 'attempt;
        }
        return Graph::from_edges(nodes, &edges);
    }
    Err(GraphError::GeneratorExhausted(MAX_GENERATOR_ATTEMPTS))
}

/// G(n, m): m distinct edges drawn uniformly, retried until no node is
/// isolated.
fn erdos_renyi(nodes: usize, m: usize, seed: u64) -> Result<Graph, GraphError> {
    if nodes < 2 {
        return Err(GraphError::InvalidParams(format!(
            "erdos_renyi needs nodes >= 2, got {nodes}"
        )));
    }
    let max_edges = nodes * (nodes - 1) / 2;
    if m == 0 || m > max_edges {
        return Err(GraphError::InvalidParams(format!(
            "erdos_renyi needs 1 <= edges <= {max_edges}, got {m}"
        )));
    }
    if 2 * m < nodes {
        // Fewer than N/2 edges always leaves some node isolated.
        return Err(GraphError::InvalidParams(format!(
            "erdos_renyi with {m} edges cannot cover {nodes} nodes"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(max_edges);
    for x in 0..nodes {
        for y in x + 1..nodes {
            pairs.push((x, y));
        }
    }
    for _ in 0..MAX_GENERATOR_ATTEMPTS {
        // Partial Fisher-Yates: after the loop, pairs[..m] is a uniform
        // m-subset of all node pairs.
        for i in 0..m {
            let j = rng.random_range(i..pairs.len());
            pairs.swap(i, j);
        }
        let mut covered = vec![false; nodes];
        for &(x, y) in &pairs[..m] {
            covered[x] = true;
            covered[y] = true;
        }
        if covered.iter().all(|&c| c) {
            return Graph::from_edges(nodes, &pairs[..m]);
        }
    }
    Err(GraphError::GeneratorExhausted(MAX_GENERATOR_ATTEMPTS))
}
