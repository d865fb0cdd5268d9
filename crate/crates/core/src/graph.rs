//! Finite (q+1)-regular graphs with directed-edge bookkeeping.
//!
//! Undirected edge `i` with endpoints `(u, v)` yields the directed edges
//! `2i = (u, v)` and `2i + 1 = (v, u)`, so the opposite-edge involution is a
//! flip of the low bit.

use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Index of a directed edge.
pub type EdgeId = usize;
/// Index of a vertex.
pub type VertexId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph has no vertices")]
    Empty,
    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("loop at vertex {0}")]
    HasLoop(VertexId),
    #[error("multiple edges between {0} and {1}")]
    HasMultiEdge(VertexId, VertexId),
    #[error("graph is not regular: vertex {vertex} has degree {degree}, expected {expected}")]
    NotRegular {
        vertex: VertexId,
        degree: usize,
        expected: usize,
    },
    #[error("degree {0} too small; need at least 2")]
    DegreeTooSmall(usize),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("unknown graph name `{0}`")]
    UnknownName(String),
    #[error("parameter out of range for `{name}`: {detail}")]
    ParamOutOfRange { name: String, detail: String },
    #[error("n * degree = {n} * {degree} is odd")]
    ParityViolation { n: usize, degree: usize },
    #[error("random regular generation exceeded {0} attempts")]
    GenerationTimeout(usize),
    #[error("edge list format error at line {line}: {msg}")]
    Format { line: usize, msg: String },
}

/// Finite connected simple graph in which every vertex has `q + 1` neighbours.
///
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegularGraph {
    n_vertices: usize,
    q: usize,
    edges: Vec<(VertexId, VertexId)>,
    out_edges: Vec<Vec<EdgeId>>,
    in_edges: Vec<Vec<EdgeId>>,
    succ: Vec<Vec<EdgeId>>,
    pred: Vec<Vec<EdgeId>>,
}

impl RegularGraph {
    /// Builds the graph from a list of undirected vertex pairs.
    ///
    /// The degree is inferred and `q = degree - 1`.
    pub fn from_undirected_edges(n: usize, pairs: &[(VertexId, VertexId)]) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut seen = HashSet::with_capacity(pairs.len());
        let mut degree = vec![0usize; n];
        for &(u, v) in pairs {
            for w in [u, v] {
                if w >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(GraphError::HasLoop(u));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(GraphError::HasMultiEdge(u.min(v), u.max(v)));
            }
            degree[u] += 1;
            degree[v] += 1;
        }
        let expected = degree[0];
        if let Some((vertex, &d)) = degree.iter().enumerate().find(|(_, &d)| d != expected) {
            return Err(GraphError::NotRegular {
                vertex,
                degree: d,
                expected,
            });
        }
        if expected < 2 {
            return Err(GraphError::DegreeTooSmall(expected));
        }

        let mut edges = Vec::with_capacity(2 * pairs.len());
        for &(u, v) in pairs {
            edges.push((u, v));
            edges.push((v, u));
        }
        let mut out_edges = vec![Vec::with_capacity(expected); n];
        let mut in_edges = vec![Vec::with_capacity(expected); n];
        for (e, &(a, b)) in edges.iter().enumerate() {
            out_edges[a].push(e);
            in_edges[b].push(e);
        }

        let mut g = RegularGraph {
            n_vertices: n,
            q: expected - 1,
            edges,
            out_edges,
            in_edges,
            succ: Vec::new(),
            pred: Vec::new(),
        };
        if !g.is_connected() {
            return Err(GraphError::Disconnected);
        }
        g.succ = (0..g.n_directed())
            .map(|e| {
                let op = g.op(e);
                g.out_edges[g.tau(e)].iter().copied().filter(|&f| f != op).collect()
            })
            .collect();
        g.pred = (0..g.n_directed())
            .map(|e| {
                let op = g.op(e);
                g.in_edges[g.iota(e)].iter().copied().filter(|&f| f != op).collect()
            })
            .collect();
        Ok(g)
    }

    fn is_connected(&self) -> bool {
        let mut visited = vec![false; self.n_vertices];
        let mut queue = VecDeque::from([0]);
        visited[0] = true;
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for &e in &self.out_edges[x] {
                let y = self.tau(e);
                if !visited[y] {
                    visited[y] = true;
                    count += 1;
                    queue.push_back(y);
                }
            }
        }
        count == self.n_vertices
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// Number of undirected edges `m`.
    pub fn n_undirected(&self) -> usize {
        self.edges.len() / 2
    }

    /// Number of directed edges `2m`.
    pub fn n_directed(&self) -> usize {
        self.edges.len()
    }

    /// Branching number; every vertex has degree `q + 1`.
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn degree(&self) -> usize {
        self.q + 1
    }

    /// Initial vertex of a directed edge.
    pub fn iota(&self, e: EdgeId) -> VertexId {
        self.edges[e].0
    }

    /// Terminal vertex of a directed edge.
    pub fn tau(&self, e: EdgeId) -> VertexId {
        self.edges[e].1
    }

    /// Opposite edge.
    #[inline]
    pub fn op(&self, e: EdgeId) -> EdgeId {
        e ^ 1
    }

    pub fn directed_edges(&self) -> &[(VertexId, VertexId)] {
        &self.edges
    }

    /// Undirected pairs in construction order (the `2i` orientation).
    pub fn undirected_pairs(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.edges.iter().step_by(2).copied()
    }

    /// Directed edges leaving `x`.
    pub fn out_edges(&self, x: VertexId) -> &[EdgeId] {
        &self.out_edges[x]
    }

    /// Directed edges entering `x`.
    pub fn in_edges(&self, x: VertexId) -> &[EdgeId] {
        &self.in_edges[x]
    }

    /// Non-backtracking continuations of `e`: edges `e'` with `τ(e) = ι(e')`
    /// and `e' ≠ op(e)`. Always `q` of them.
    pub fn successors(&self, e: EdgeId) -> &[EdgeId] {
        &self.succ[e]
    }

    /// Edges `e'` having `e` among their successors.
    pub fn predecessors(&self, e: EdgeId) -> &[EdgeId] {
        &self.pred[e]
    }

    /// Directed edge from `u` to `v`, if present.
    pub fn edge_between(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        self.out_edges.get(u)?.iter().copied().find(|&e| self.tau(e) == v)
    }

    /// Dense 0/1 vertex adjacency matrix, row-major.
    pub fn adjacency(&self) -> Vec<Vec<u8>> {
        let mut a = vec![vec![0u8; self.n_vertices]; self.n_vertices];
        for &(u, v) in &self.edges {
            a[u][v] = 1;
        }
        a
    }

    /// Writes the edge-list text format. Edges are emitted as `min max`,
    /// sorted lexicographically.
    pub fn to_edge_list(&self) -> String {
        let mut pairs: Vec<_> = self.undirected_pairs().map(|(u, v)| (u.min(v), u.max(v))).collect();
        pairs.sort_unstable();
        let mut out = format!("{} {}\n", self.n_vertices, pairs.len());
        for (u, v) in pairs {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    /// Parses the edge-list text format: a header `n m` followed by `m` lines
    /// `u v`. Blank lines and `#` comments are ignored.
    pub fn from_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut lines = text.lines().enumerate().filter_map(|(i, raw)| {
            let body = raw.split('#').next().unwrap_or("").trim();
            (!body.is_empty()).then_some((i + 1, body))
        });
        let (hline, header) = lines.next().ok_or(GraphError::Format {
            line: 0,
            msg: "missing header".into(),
        })?;
        let [n, m] = parse_two(hline, header)?;
        let mut pairs = Vec::with_capacity(m);
        for (line, body) in lines {
            if pairs.len() == m {
                return Err(GraphError::Format {
                    line,
                    msg: format!("more than the declared {m} edges"),
                });
            }
            let [u, v] = parse_two(line, body)?;
            pairs.push((u, v));
        }
        if pairs.len() != m {
            return Err(GraphError::Format {
                line: 0,
                msg: format!("declared {m} edges, found {}", pairs.len()),
            });
        }
        Self::from_undirected_edges(n, &pairs)
    }
}

fn parse_two(line: usize, body: &str) -> Result<[usize; 2], GraphError> {
    let toks: Vec<&str> = body.split_whitespace().collect();
    if toks.len() != 2 {
        return Err(GraphError::Format {
            line,
            msg: format!("expected two integers, got `{body}`"),
        });
    }
    let p = |t: &str| {
        t.parse::<usize>().map_err(|_| GraphError::Format {
            line,
            msg: format!("not a non-negative integer: `{t}`"),
        })
    };
    Ok([p(toks[0])?, p(toks[1])?])
}

/// Standard graphs addressable by name, e.g. on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedGraph {
    /// Complete graph `K_n`, `q = n - 2`.
    Complete(usize),
    /// Cycle `C_n`, `q = 1`.
    Cycle(usize),
    /// Complete bipartite `K_{n,n}`, `q = n - 1`.
    CompleteBipartite(usize),
    Petersen,
    /// 3-dimensional cube graph.
    Hypercube3,
}

impl NamedGraph {
    pub fn build(self) -> Result<RegularGraph, GraphError> {
        let out_of_range = |name: &str, detail: &str| GraphError::ParamOutOfRange {
            name: name.into(),
            detail: detail.into(),
        };
        match self {
            NamedGraph::Complete(n) => {
                if n < 3 {
                    return Err(out_of_range("complete", "need n >= 3"));
                }
                let pairs: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
                RegularGraph::from_undirected_edges(n, &pairs)
            }
            NamedGraph::Cycle(n) => {
                if n < 3 {
                    return Err(out_of_range("cycle", "need n >= 3"));
                }
                let pairs: Vec<_> = (0..n).map(|u| (u, (u + 1) % n)).collect();
                RegularGraph::from_undirected_edges(n, &pairs)
            }
            NamedGraph::CompleteBipartite(n) => {
                if n < 2 {
                    return Err(out_of_range("complete_bipartite", "need n >= 2"));
                }
                let pairs: Vec<_> = (0..n).flat_map(|u| (0..n).map(move |v| (u, n + v))).collect();
                RegularGraph::from_undirected_edges(2 * n, &pairs)
            }
            NamedGraph::Petersen => {
                let mut pairs = Vec::with_capacity(15);
                for i in 0..5 {
                    pairs.push((i, (i + 1) % 5));
                    pairs.push((i, i + 5));
                    pairs.push((5 + i, 5 + (i + 2) % 5));
                }
                RegularGraph::from_undirected_edges(10, &pairs)
            }
            NamedGraph::Hypercube3 => {
                let mut pairs = Vec::with_capacity(12);
                for u in 0..8usize {
                    for bit in 0..3 {
                        let v = u ^ (1 << bit);
                        if u < v {
                            pairs.push((u, v));
                        }
                    }
                }
                RegularGraph::from_undirected_edges(8, &pairs)
            }
        }
    }
}

impl fmt::Display for NamedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NamedGraph::Complete(n) => write!(f, "complete:{n}"),
            NamedGraph::Cycle(n) => write!(f, "cycle:{n}"),
            NamedGraph::CompleteBipartite(n) => write!(f, "complete_bipartite:{n}"),
            NamedGraph::Petersen => write!(f, "petersen"),
            NamedGraph::Hypercube3 => write!(f, "hypercube3"),
        }
    }
}

impl FromStr for NamedGraph {
    type Err = GraphError;

    /// Accepts `complete:N`, `cycle:N`, `complete_bipartite:N`, `petersen`
    /// and `hypercube3`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, param) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let need = |p: Option<&str>| -> Result<usize, GraphError> {
            let p = p.ok_or_else(|| GraphError::ParamOutOfRange {
                name: name.into(),
                detail: "missing size parameter".into(),
            })?;
            p.parse().map_err(|_| GraphError::ParamOutOfRange {
                name: name.into(),
                detail: format!("bad size `{p}`"),
            })
        };
        match name {
            "complete" => Ok(NamedGraph::Complete(need(param)?)),
            "cycle" => Ok(NamedGraph::Cycle(need(param)?)),
            "complete_bipartite" => Ok(NamedGraph::CompleteBipartite(need(param)?)),
            "petersen" if param.is_none() => Ok(NamedGraph::Petersen),
            "hypercube3" if param.is_none() => Ok(NamedGraph::Hypercube3),
            _ => Err(GraphError::UnknownName(s.into())),
        }
    }
}

/// Builds a named graph from its textual spec.
pub fn generate_named(spec: &str) -> Result<RegularGraph, GraphError> {
    spec.parse::<NamedGraph>()?.build()
}

/// Default rejection budget of the configuration-model generator.
pub const DEFAULT_GENERATION_BUDGET: usize = 10_000;

/// Random simple connected `degree`-regular graph on `n` vertices.
///
/// Configuration model: stubs are shuffled and paired, and the whole matching
/// is rejected if it produces a loop, a multi-edge, or a disconnected graph.
/// Deterministic for a given seed.
pub fn generate_random_regular(
    n: usize,
    degree: usize,
    seed: u64,
    budget: usize,
) -> Result<RegularGraph, GraphError> {
    if (n * degree) % 2 == 1 {
        return Err(GraphError::ParityViolation { n, degree });
    }
    if degree < 2 || degree >= n {
        return Err(GraphError::ParamOutOfRange {
            name: "random_regular".into(),
            detail: format!("need 2 <= degree < n, got degree {degree}, n {n}"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<VertexId> = (0..n).flat_map(|v| std::iter::repeat_n(v, degree)).collect();
    'attempt: for _ in 0..budget {
        stubs.shuffle(&mut rng);
        let mut seen = HashSet::with_capacity(stubs.len() / 2);
        let mut pairs = Vec::with_capacity(stubs.len() / 2);
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v || !seen.insert((u.min(v), u.max(v))) {
                continue 'attempt;
            }
            pairs.push((u.min(v), u.max(v)));
        }
        pairs.sort_unstable();
        match RegularGraph::from_undirected_edges(n, &pairs) {
            Ok(g) => return Ok(g),
            Err(GraphError::Disconnected) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(GraphError::GenerationTimeout(budget))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k4_pairs() -> Vec<(usize, usize)> {
        vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    }

    pub(crate) fn assert_invariants(g: &RegularGraph) {
        let mut seen = HashSet::new();
        for e in 0..g.n_directed() {
            assert_eq!(g.op(g.op(e)), e);
            assert_ne!(g.op(e), e);
            assert_eq!(g.iota(g.op(e)), g.tau(e));
            assert_eq!(g.tau(g.op(e)), g.iota(e));
            assert_ne!(g.iota(e), g.tau(e));
            assert!(seen.insert((g.iota(e), g.tau(e))));
            assert_eq!(g.successors(e).len(), g.q());
            assert_eq!(g.predecessors(e).len(), g.q());
        }
        for x in 0..g.n_vertices() {
            assert_eq!(g.out_edges(x).len(), g.q() + 1);
        }
        assert!(g.is_connected());
    }

    #[test]
    fn complete_four() {
        let g = RegularGraph::from_undirected_edges(4, &k4_pairs()).unwrap();
        assert_eq!(g.q(), 2);
        assert_eq!(g.n_directed(), 12);
        assert_invariants(&g);
        assert_eq!(g, NamedGraph::Complete(4).build().unwrap());
    }

    #[test]
    fn triangle() {
        let g = RegularGraph::from_undirected_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        assert_eq!(g.q(), 1);
        assert_eq!(g.n_directed(), 6);
        for e in 0..6 {
            let s = g.successors(e);
            assert_eq!(s.len(), 1);
            assert_eq!(g.iota(s[0]), g.tau(e));
            assert_ne!(g.tau(s[0]), g.iota(e));
        }
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            RegularGraph::from_undirected_edges(4, &[(0, 1), (1, 2), (2, 3)]),
            Err(GraphError::NotRegular { .. })
        ));
        assert_eq!(
            RegularGraph::from_undirected_edges(3, &[(0, 0), (1, 2)]),
            Err(GraphError::HasLoop(0))
        );
        assert_eq!(
            RegularGraph::from_undirected_edges(3, &[(0, 1), (1, 0)]),
            Err(GraphError::HasMultiEdge(0, 1))
        );
        // two disjoint triangles
        let two = [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)];
        assert_eq!(
            RegularGraph::from_undirected_edges(6, &two),
            Err(GraphError::Disconnected)
        );
        assert!(matches!(
            RegularGraph::from_undirected_edges(2, &[(0, 5)]),
            Err(GraphError::VertexOutOfRange { vertex: 5, .. })
        ));
    }

    #[test]
    fn named_graphs() {
        let p = generate_named("petersen").unwrap();
        assert_eq!((p.n_vertices(), p.q(), p.n_directed()), (10, 2, 30));
        assert_invariants(&p);
        let c = generate_named("cycle:5").unwrap();
        assert_eq!((c.q(), c.n_directed()), (1, 10));
        let h = generate_named("hypercube3").unwrap();
        assert_eq!((h.n_vertices(), h.q()), (8, 2));
        let b = generate_named("complete_bipartite:3").unwrap();
        assert_eq!((b.n_vertices(), b.q(), b.n_directed()), (6, 2, 18));
        assert_eq!(generate_named("complete:6").unwrap().q(), 4);
        assert!(matches!(generate_named("dodecahedron"), Err(GraphError::UnknownName(_))));
        assert!(matches!(generate_named("complete:2"), Err(GraphError::ParamOutOfRange { .. })));
        assert!(matches!(generate_named("complete"), Err(GraphError::ParamOutOfRange { .. })));
    }

    #[test]
    fn petersen_edge_count_by_enumeration() {
        // Petersen as the Kneser graph K(5,2): 2-subsets adjacent when disjoint.
        let subsets: Vec<(usize, usize)> = (0..5).flat_map(|a| (a + 1..5).map(move |b| (a, b))).collect();
        let disjoint = |s: (usize, usize), t: (usize, usize)| s.0 != t.0 && s.0 != t.1 && s.1 != t.0 && s.1 != t.1;
        let mut count = 0;
        for i in 0..subsets.len() {
            for j in 0..subsets.len() {
                if i != j && disjoint(subsets[i], subsets[j]) {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 30);
        assert_eq!(NamedGraph::Petersen.build().unwrap().n_directed(), count);
    }

    #[test]
    fn random_regular() {
        let g = generate_random_regular(10, 3, 1, DEFAULT_GENERATION_BUDGET).unwrap();
        assert_invariants(&g);
        assert_eq!(
            generate_random_regular(5, 3, 7, DEFAULT_GENERATION_BUDGET),
            Err(GraphError::ParityViolation { n: 5, degree: 3 })
        );
        for s in 0..20 {
            let g = generate_random_regular(12, 3, s, DEFAULT_GENERATION_BUDGET).unwrap();
            assert_invariants(&g);
            assert_eq!(g, generate_random_regular(12, 3, s, DEFAULT_GENERATION_BUDGET).unwrap());
        }
        assert_eq!(generate_random_regular(12, 3, 0, 0), Err(GraphError::GenerationTimeout(0)));
    }

    #[test]
    fn successor_duality_and_count() {
        for g in [generate_named("petersen").unwrap(), generate_named("complete:5").unwrap()] {
            let total: usize = (0..g.n_directed()).map(|e| g.successors(e).len()).sum();
            assert_eq!(total, g.n_directed() * g.q());
            for e in 0..g.n_directed() {
                for e2 in 0..g.n_directed() {
                    assert_eq!(
                        g.successors(e).contains(&e2),
                        g.successors(g.op(e2)).contains(&g.op(e))
                    );
                }
            }
        }
    }

    #[test]
    fn edge_list_round_trip() {
        let g = generate_named("petersen").unwrap();
        let text = g.to_edge_list();
        let back = RegularGraph::from_edge_list(&text).unwrap();
        assert_eq!(back.to_edge_list(), text);
        let commented = "# K4\n4 6\n0 1\n0 2 # tail\n\n0 3\n1 2\n1 3\n2 3\n";
        assert_eq!(RegularGraph::from_edge_list(commented).unwrap().q(), 2);
        assert!(matches!(
            RegularGraph::from_edge_list("4 6\n0 1\n"),
            Err(GraphError::Format { .. })
        ));
        assert!(matches!(
            RegularGraph::from_edge_list("4 x\n"),
            Err(GraphError::Format { line: 1, .. })
        ));
    }
}
