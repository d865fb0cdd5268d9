//! Depth-truncated universal cover of a regular graph.
//!
//! Nodes are the non-backtracking edge paths of length `≤ D` starting at a
//! base vertex, numbered breadth-first, so node `0` is the root and the
//! numbering of a depth-`D` cover is a prefix of the depth-`D+1` one. Every
//! non-root node `c` owns two tree edges: `2(c−1)` from its parent to `c`
//! (pointing away from the root) and `2(c−1)+1` back. Flipping a tree edge is
//! therefore `ẽ ^ 1`, as on the base graph.
//!
//! The boundary is seen at frontier resolution: a frontier node `c` at depth
//! `D` stands for the cylinder of boundary points behind the tree edge into
//! `c`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{EdgeId, RegularGraph, VertexId};
use crate::pairings::{EdgeFunction, VertexFunction};
use crate::scalar::{cpowi, czero, inf_norm, Real, C};
use crate::shift::{Orientation, ResonantState};

pub type NodeId = usize;
pub type TreeEdgeId = usize;

/// Hard cap on the number of nodes `unfold` will build.
pub const MAX_NODES: usize = 1 << 22;
/// Relative tolerance for the additivity check in [`measure_from_state`].
pub const ADDITIVITY_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoverError {
    #[error("truncation depth {0} is below the minimum of 2")]
    DepthTooSmall(usize),
    #[error("cover would have {0} nodes, more than the supported maximum")]
    TooLarge(usize),
    #[error("base vertex {vertex} out of range for a graph with {n} vertices")]
    VertexOutOfRange { vertex: VertexId, n: usize },
    #[error("node {0} is not in the truncated cover")]
    NodeOutOfRange(NodeId),
    #[error("tree edge {0} does not point away from the root")]
    NotAwayEdge(TreeEdgeId),
    #[error("node {0} does not project to the root's base vertex")]
    InvalidTarget(NodeId),
    #[error("bracket of node {node} with the cylinder below {head} depends on the boundary point")]
    BracketNotConstant { node: NodeId, head: NodeId },
    #[error("boundary cylinders overlap")]
    OverlappingCylinders,
    #[error("geodesic position of node {0} is not resolved by the truncation")]
    GeodesicLeavesTruncation(NodeId),
    #[error("node is within distance {distance} of the geodesic, not beyond {n}")]
    InsideSn { distance: usize, n: usize },
    #[error("resonance must be non-zero")]
    ZeroEigenvalue,
    #[error("expected a {expected} state, got {got}")]
    OrientationMismatch { expected: Orientation, got: Orientation },
    #[error("state has {got} edge values, graph has {want} directed edges")]
    GraphMismatch { got: usize, want: usize },
    #[error("boundary measure is not additive (relative residual {0:e}); the state is not resonant")]
    AdditivityViolated(f64),
    #[error("measure has {got} frontier values, cover has {want}")]
    MeasureMismatch { got: usize, want: usize },
    #[error("cover invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone)]
struct Node {
    parent: Option<NodeId>,
    in_edge: Option<EdgeId>,
    depth: usize,
    vertex: VertexId,
    children: Vec<NodeId>,
    /// Frontier descendants, as a half-open node range.
    leaves: (NodeId, NodeId),
}

#[derive(Debug, Clone)]
pub struct TruncatedCover<'g> {
    graph: &'g RegularGraph,
    depth: usize,
    nodes: Vec<Node>,
    first_frontier: NodeId,
}

/// Boundary cylinder `∂₊ẽ` of an away-from-root tree edge, identified by its
/// head node `τ(ẽ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoundaryCylinder {
    head: NodeId,
}

impl BoundaryCylinder {
    pub fn head(&self) -> NodeId {
        self.head
    }

    pub fn edge(&self) -> TreeEdgeId {
        2 * (self.head - 1)
    }
}

/// Finitely additive measure on the boundary, stored on frontier cylinders
/// in frontier order.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteBoundaryMeasure<T> {
    values: Vec<C<T>>,
}

/// Node expected count `1 + (q+1)(q^D − 1)/(q − 1)`, or `1 + 2D` for `q = 1`.
pub fn expected_node_count(q: usize, depth: usize) -> Option<usize> {
    let mut total: usize = 1;
    let mut level: usize = q + 1;
    for _ in 0..depth {
        total = total.checked_add(level)?;
        level = level.checked_mul(q)?;
    }
    Some(total)
}

impl<'g> TruncatedCover<'g> {
    /// Builds the cover of `g` rooted over `base_vertex`, truncated at depth `D`.
    pub fn unfold(g: &'g RegularGraph, base_vertex: VertexId, depth: usize) -> Result<Self, CoverError> {
        if depth < 2 {
            return Err(CoverError::DepthTooSmall(depth));
        }
        if base_vertex >= g.n_vertices() {
            return Err(CoverError::VertexOutOfRange {
                vertex: base_vertex,
                n: g.n_vertices(),
            });
        }
        let count = expected_node_count(g.q(), depth).unwrap_or(usize::MAX);
        if count > MAX_NODES {
            return Err(CoverError::TooLarge(count));
        }
        let mut nodes = Vec::with_capacity(count);
        nodes.push(Node {
            parent: None,
            in_edge: None,
            depth: 0,
            vertex: base_vertex,
            children: Vec::new(),
            leaves: (0, 0),
        });
        let mut first_frontier = 0;
        let mut i = 0;
        while i < nodes.len() {
            let d = nodes[i].depth;
            if d == depth {
                if first_frontier == 0 {
                    first_frontier = i;
                }
                i += 1;
                continue;
            }
            let next: &[EdgeId] = match nodes[i].in_edge {
                None => g.out_edges(nodes[i].vertex),
                Some(e) => g.successors(e),
            };
            let start = nodes.len();
            for &e in next {
                nodes.push(Node {
                    parent: Some(i),
                    in_edge: Some(e),
                    depth: d + 1,
                    vertex: g.tau(e),
                    children: Vec::new(),
                    leaves: (0, 0),
                });
            }
            nodes[i].children = (start..nodes.len()).collect();
            i += 1;
        }
        for i in (0..nodes.len()).rev() {
            nodes[i].leaves = match (nodes[i].children.first(), nodes[i].children.last()) {
                (Some(&a), Some(&b)) => (nodes[a].leaves.0, nodes[b].leaves.1),
                _ => (i, i + 1),
            };
        }
        Ok(TruncatedCover {
            graph: g,
            depth,
            nodes,
            first_frontier,
        })
    }

    pub fn graph(&self) -> &'g RegularGraph {
        self.graph
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_tree_edges(&self) -> usize {
        2 * (self.nodes.len() - 1)
    }

    /// Nodes of depth `< D`; they form the prefix `0..n_interior()`.
    pub fn n_interior(&self) -> usize {
        self.first_frontier
    }

    pub fn frontier(&self) -> std::ops::Range<NodeId> {
        self.first_frontier..self.nodes.len()
    }

    pub fn n_frontier(&self) -> usize {
        self.nodes.len() - self.first_frontier
    }

    fn node(&self, x: NodeId) -> Result<&Node, CoverError> {
        self.nodes.get(x).ok_or(CoverError::NodeOutOfRange(x))
    }

    pub fn node_depth(&self, x: NodeId) -> usize {
        self.nodes[x].depth
    }

    pub fn parent(&self, x: NodeId) -> Option<NodeId> {
        self.nodes[x].parent
    }

    pub fn children(&self, x: NodeId) -> &[NodeId] {
        &self.nodes[x].children
    }

    pub fn is_interior(&self, x: NodeId) -> bool {
        x < self.first_frontier
    }

    /// Tree neighbours: children first, then the parent.
    pub fn neighbors(&self, x: NodeId) -> Vec<NodeId> {
        let n = &self.nodes[x];
        n.children.iter().copied().chain(n.parent).collect()
    }

    /// `π_𝔛`.
    pub fn project_node(&self, x: NodeId) -> VertexId {
        self.nodes[x].vertex
    }

    /// `π_𝔈`.
    pub fn project_edge(&self, e: TreeEdgeId) -> EdgeId {
        let base = self.nodes[e / 2 + 1].in_edge.expect("non-root node");
        if e.is_multiple_of(2) {
            base
        } else {
            self.graph.op(base)
        }
    }

    pub fn is_away(&self, e: TreeEdgeId) -> bool {
        e.is_multiple_of(2)
    }

    pub fn tree_iota(&self, e: TreeEdgeId) -> NodeId {
        let c = e / 2 + 1;
        if e.is_multiple_of(2) {
            self.nodes[c].parent.expect("non-root node")
        } else {
            c
        }
    }

    pub fn tree_tau(&self, e: TreeEdgeId) -> NodeId {
        self.tree_iota(e ^ 1)
    }

    pub fn tree_op(&self, e: TreeEdgeId) -> TreeEdgeId {
        e ^ 1
    }

    /// Tree edge from `a` to the adjacent node `b`.
    pub fn edge_between(&self, a: NodeId, b: NodeId) -> Option<TreeEdgeId> {
        if b > 0 && self.nodes[b].parent == Some(a) {
            Some(2 * (b - 1))
        } else if a > 0 && self.nodes[a].parent == Some(b) {
            Some(2 * (a - 1) + 1)
        } else {
            None
        }
    }

    /// Tree edges leaving `x`.
    pub fn out_tree_edges(&self, x: NodeId) -> Vec<TreeEdgeId> {
        let n = &self.nodes[x];
        n.children
            .iter()
            .map(|&c| 2 * (c - 1))
            .chain(n.parent.map(|_| 2 * (x - 1) + 1))
            .collect()
    }

    /// Base edge path from the root to `x`.
    pub fn base_path(&self, x: NodeId) -> Vec<EdgeId> {
        let mut path = Vec::with_capacity(self.nodes[x].depth);
        let mut a = x;
        while let Some(e) = self.nodes[a].in_edge {
            path.push(e);
            a = self.nodes[a].parent.expect("non-root node");
        }
        path.reverse();
        path
    }

    /// Node reached from the root along a non-backtracking base path, if
    /// the path is short enough to lie in the truncation.
    pub fn node_at(&self, path: &[EdgeId]) -> Option<NodeId> {
        let mut x = 0;
        for &e in path {
            x = *self.nodes[x].children.iter().find(|&&c| self.nodes[c].in_edge == Some(e))?;
        }
        Some(x)
    }

    pub fn is_descendant(&self, x: NodeId, ancestor: NodeId) -> bool {
        let (a, b) = self.nodes[ancestor].leaves;
        let (c, _) = self.nodes[x].leaves;
        self.nodes[x].depth >= self.nodes[ancestor].depth && a <= c && c < b
    }

    pub fn lca(&self, mut x: NodeId, mut y: NodeId) -> NodeId {
        while self.nodes[x].depth > self.nodes[y].depth {
            x = self.nodes[x].parent.expect("non-root node");
        }
        while self.nodes[y].depth > self.nodes[x].depth {
            y = self.nodes[y].parent.expect("non-root node");
        }
        while x != y {
            x = self.nodes[x].parent.expect("non-root node");
            y = self.nodes[y].parent.expect("non-root node");
        }
        x
    }

    pub fn distance(&self, x: NodeId, y: NodeId) -> usize {
        self.nodes[x].depth + self.nodes[y].depth - 2 * self.nodes[self.lca(x, y)].depth
    }

    /// Tree edges of the geodesic from `x` to `y`.
    pub fn path_edges(&self, x: NodeId, y: NodeId) -> Vec<TreeEdgeId> {
        let l = self.lca(x, y);
        let mut up = Vec::new();
        let mut a = x;
        while a != l {
            up.push(2 * (a - 1) + 1);
            a = self.nodes[a].parent.expect("non-root node");
        }
        let mut down = Vec::new();
        let mut b = y;
        while b != l {
            down.push(2 * (b - 1));
            b = self.nodes[b].parent.expect("non-root node");
        }
        up.extend(down.into_iter().rev());
        up
    }

    /// All non-backtracking tree chains of `len` edges starting at `x`.
    pub fn chains_from(&self, x: NodeId, len: usize) -> Vec<Vec<TreeEdgeId>> {
        let mut out = Vec::new();
        let mut stack: Vec<Vec<TreeEdgeId>> = vec![Vec::new()];
        while let Some(chain) = stack.pop() {
            if chain.len() == len {
                out.push(chain);
                continue;
            }
            let at = chain.last().map_or(x, |&e| self.tree_tau(e));
            for e in self.out_tree_edges(at) {
                if chain.last().is_none_or(|&p| e != p ^ 1) {
                    let mut next = chain.clone();
                    next.push(e);
                    stack.push(next);
                }
            }
        }
        out.sort();
        out
    }

    /// Checks the structural invariants: branching, projections intertwining
    /// `ι`, `τ` and `op`, and the node count.
    pub fn check_invariants(&self) -> Result<(), CoverError> {
        let g = self.graph;
        let fail = |m: String| Err(CoverError::Invariant(m));
        if Some(self.nodes.len()) != expected_node_count(g.q(), self.depth) {
            return fail(format!("{} nodes", self.nodes.len()));
        }
        for x in 0..self.nodes.len() {
            let want = if self.is_interior(x) { g.q() + 1 } else { 1 };
            if self.neighbors(x).len() != want {
                return fail(format!("node {x} has {} neighbours", self.neighbors(x).len()));
            }
        }
        for e in 0..self.n_tree_edges() {
            let b = self.project_edge(e);
            if g.iota(b) != self.project_node(self.tree_iota(e)) || g.tau(b) != self.project_node(self.tree_tau(e)) {
                return fail(format!("tree edge {e} endpoints"));
            }
            if self.project_edge(self.tree_op(e)) != g.op(b) {
                return fail(format!("tree edge {e} reversal"));
            }
        }
        for x in 0..self.n_interior() {
            let mut images: Vec<EdgeId> = self.out_tree_edges(x).iter().map(|&e| self.project_edge(e)).collect();
            images.sort_unstable();
            if images != g.out_edges(self.project_node(x)) {
                return fail(format!("node {x} is not a local bijection"));
            }
        }
        Ok(())
    }

    // ----- boundary cylinders -------------------------------------------

    /// Cylinder behind an away-from-root tree edge.
    pub fn cylinder(&self, e: TreeEdgeId) -> Result<BoundaryCylinder, CoverError> {
        if e >= self.n_tree_edges() {
            return Err(CoverError::NodeOutOfRange(e / 2 + 1));
        }
        if !self.is_away(e) {
            return Err(CoverError::NotAwayEdge(e));
        }
        Ok(BoundaryCylinder { head: e / 2 + 1 })
    }

    /// Cylinder behind the tree edge into `head`.
    pub fn cylinder_at(&self, head: NodeId) -> Result<BoundaryCylinder, CoverError> {
        if head == 0 {
            return Err(CoverError::NotAwayEdge(usize::MAX));
        }
        self.node(head)?;
        Ok(BoundaryCylinder { head })
    }

    /// The `q` cylinders refining `ω`; empty at frontier resolution.
    pub fn refine(&self, w: &BoundaryCylinder) -> Vec<BoundaryCylinder> {
        self.nodes[w.head].children.iter().map(|&head| BoundaryCylinder { head }).collect()
    }

    /// Frontier nodes whose cylinders make up `ω`.
    pub fn support(&self, w: &BoundaryCylinder) -> std::ops::Range<NodeId> {
        let (a, b) = self.nodes[w.head].leaves;
        a..b
    }

    pub fn cylinders_disjoint(&self, a: &BoundaryCylinder, b: &BoundaryCylinder) -> bool {
        !self.is_descendant(a.head, b.head) && !self.is_descendant(b.head, a.head)
    }

    /// Whether `∂₊ẽ ⊇ ω` for an arbitrary tree edge `ẽ`.
    pub fn edge_boundary_contains(&self, e: TreeEdgeId, w: &BoundaryCylinder) -> bool {
        let c = e / 2 + 1;
        if self.is_away(e) {
            self.is_descendant(w.head, c)
        } else {
            self.cylinders_disjoint(w, &BoundaryCylinder { head: c })
        }
    }

    // ----- horocycle brackets -------------------------------------------

    /// `⟨x, c⟩` for a frontier node `c`: `2·depth(x ∧ c) − depth(x)`.
    pub fn frontier_bracket(&self, x: NodeId, c: NodeId) -> i64 {
        2 * self.nodes[self.lca(x, c)].depth as i64 - self.nodes[x].depth as i64
    }

    /// `⟨x, ω⟩ = d(o, y) − d(x, y)` with `y` the point where the rays from
    /// the root and from `x` towards `ω` merge.
    ///
    /// Fails when `x` lies strictly inside the subtree of a non-frontier
    /// cylinder head, where the bracket varies across `ω`.
    pub fn horocycle_bracket(&self, x: NodeId, w: &BoundaryCylinder) -> Result<i64, CoverError> {
        self.node(x)?;
        if x != w.head && self.is_descendant(x, w.head) {
            return Err(CoverError::BracketNotConstant { node: x, head: w.head });
        }
        Ok(self.frontier_bracket(x, w.head))
    }

    /// `z^{⟨x, ω⟩}`.
    pub fn poisson_kernel<T: Real>(&self, z: C<T>, x: NodeId, w: &BoundaryCylinder) -> Result<C<T>, CoverError> {
        if z == czero() {
            return Err(CoverError::ZeroEigenvalue);
        }
        Ok(cpowi(z, self.horocycle_bracket(x, w)?))
    }

    // ----- geodesics between boundary cylinders -------------------------

    fn check_pair(&self, x: NodeId, w1: &BoundaryCylinder, w2: &BoundaryCylinder) -> Result<(), CoverError> {
        self.node(x)?;
        if !self.cylinders_disjoint(w1, w2) {
            return Err(CoverError::OverlappingCylinders);
        }
        for w in [w1, w2] {
            if x != w.head && self.is_descendant(x, w.head) {
                return Err(CoverError::GeodesicLeavesTruncation(x));
            }
        }
        Ok(())
    }

    /// Distance from `x` to the geodesic `]ω₁, ω₂[`.
    pub fn distance_to_geodesic(
        &self,
        x: NodeId,
        w1: &BoundaryCylinder,
        w2: &BoundaryCylinder,
    ) -> Result<usize, CoverError> {
        self.check_pair(x, w1, w2)?;
        let (h1, h2) = (w1.head, w2.head);
        Ok((self.distance(x, h1) + self.distance(x, h2) - self.distance(h1, h2)) / 2)
    }

    /// Membership of `(x, ω₁, ω₂)` in the cutoff set `S_n`.
    pub fn s_n_contains(
        &self,
        x: NodeId,
        w1: &BoundaryCylinder,
        w2: &BoundaryCylinder,
        n: usize,
    ) -> Result<bool, CoverError> {
        Ok(self.distance_to_geodesic(x, w1, w2)? <= n)
    }

    /// The `n + 1` first steps from `x` towards `]ω₁, ω₂[`: the unique
    /// non-backtracking chain of that length whose last edge sees both
    /// cylinders ahead of it.
    pub fn unique_path(
        &self,
        x: NodeId,
        w1: &BoundaryCylinder,
        w2: &BoundaryCylinder,
        n: usize,
    ) -> Result<Vec<TreeEdgeId>, CoverError> {
        let distance = self.distance_to_geodesic(x, w1, w2)?;
        if distance <= n {
            return Err(CoverError::InsideSn { distance, n });
        }
        let mut p = self.path_edges(x, w1.head);
        p.truncate(n + 1);
        Ok(p)
    }

    /// Whether the last edge of `chain` has both cylinders in its boundary.
    pub fn chain_sees_both(&self, chain: &[TreeEdgeId], w1: &BoundaryCylinder, w2: &BoundaryCylinder) -> bool {
        chain
            .last()
            .is_some_and(|&e| self.edge_boundary_contains(e, w1) && self.edge_boundary_contains(e, w2))
    }

    // ----- automorphisms ------------------------------------------------

    /// Deck transformation sending the root to `target`: a node with base
    /// path `P` goes to the node whose path is `T·P` with backtracking at
    /// the junction cancelled. Defined where the image stays within depth
    /// `D`.
    pub fn deck_transform(&self, target: NodeId) -> Result<TreeMap, CoverError> {
        self.node(target)?;
        if self.nodes[target].vertex != self.nodes[0].vertex {
            return Err(CoverError::InvalidTarget(target));
        }
        let t = self.base_path(target);
        let g = self.graph;
        let image = (0..self.nodes.len())
            .map(|x| {
                let p = self.base_path(x);
                let mut head = t.clone();
                let mut k = 0;
                while k < p.len() && head.last().is_some_and(|&e| g.op(e) == p[k]) {
                    head.pop();
                    k += 1;
                }
                head.extend_from_slice(&p[k..]);
                if head.len() > self.depth {
                    None
                } else {
                    self.node_at(&head)
                }
            })
            .collect();
        Ok(TreeMap { image })
    }

    /// Random root-fixing automorphism: an independent permutation of the
    /// children below every node.
    pub fn root_automorphism(&self, seed: u64) -> TreeMap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut image = vec![None; self.nodes.len()];
        image[0] = Some(0);
        for x in 0..self.nodes.len() {
            let y = image[x].expect("parents are visited first");
            let mut targets = self.nodes[y].children.clone();
            targets.shuffle(&mut rng);
            for (&c, t) in self.nodes[x].children.iter().zip(targets) {
                image[c] = Some(t);
            }
        }
        TreeMap { image }
    }

    pub fn identity_map(&self) -> TreeMap {
        TreeMap {
            image: (0..self.nodes.len()).map(Some).collect(),
        }
    }

    // ----- measures and Poisson transforms ------------------------------

    /// Measure with the given frontier values, in frontier order.
    pub fn measure<T: Real>(&self, values: Vec<C<T>>) -> Result<FiniteBoundaryMeasure<T>, CoverError> {
        if values.len() != self.n_frontier() {
            return Err(CoverError::MeasureMismatch {
                got: values.len(),
                want: self.n_frontier(),
            });
        }
        Ok(FiniteBoundaryMeasure { values })
    }

    fn prefix<T: Real>(&self, mu: &FiniteBoundaryMeasure<T>) -> Vec<C<T>> {
        let mut acc = Vec::with_capacity(mu.values.len() + 1);
        acc.push(czero());
        let mut s = czero();
        for v in &mu.values {
            s += *v;
            acc.push(s);
        }
        acc
    }

    fn range_mass<T: Real>(&self, prefix: &[C<T>], x: NodeId) -> C<T> {
        let (a, b) = self.nodes[x].leaves;
        prefix[b - self.first_frontier] - prefix[a - self.first_frontier]
    }

    fn check_measure<T: Real>(&self, mu: &FiniteBoundaryMeasure<T>) -> Result<(), CoverError> {
        if mu.values.len() != self.n_frontier() {
            return Err(CoverError::MeasureMismatch {
                got: mu.values.len(),
                want: self.n_frontier(),
            });
        }
        Ok(())
    }

    /// `𝒫_z μ(x) = Σ_c z^{⟨x, c⟩} μ(c)` at every interior node.
    ///
    /// The sum is grouped by the meeting point of `x` with `c`.
    pub fn poisson_transform<T: Real>(
        &self,
        z: C<T>,
        mu: &FiniteBoundaryMeasure<T>,
    ) -> Result<VertexFunction<T>, CoverError> {
        if z == czero() {
            return Err(CoverError::ZeroEigenvalue);
        }
        self.check_measure(mu)?;
        let pre = self.prefix(mu);
        Ok(VertexFunction(
            (0..self.n_interior())
                .map(|x| {
                    let dx = self.nodes[x].depth as i64;
                    let mut total = czero();
                    let mut below = czero();
                    let mut a = Some(x);
                    while let Some(y) = a {
                        let mass = self.range_mass(&pre, y);
                        let da = self.nodes[y].depth as i64;
                        total += cpowi(z, 2 * da - dx) * (mass - below);
                        below = mass;
                        a = self.nodes[y].parent;
                    }
                    total
                })
                .collect(),
        ))
    }

    /// `𝒫^e_z μ(ẽ) = Σ_{c ⊆ ∂₊ẽ} z^{⟨ι(ẽ), c⟩} μ(c)` on every tree edge.
    /// Only edges with interior `ι(ẽ)` are truncation independent.
    pub fn edge_poisson_transform<T: Real>(
        &self,
        z: C<T>,
        mu: &FiniteBoundaryMeasure<T>,
    ) -> Result<EdgeFunction<T>, CoverError> {
        if z == czero() {
            return Err(CoverError::ZeroEigenvalue);
        }
        self.check_measure(mu)?;
        let pre = self.prefix(mu);
        Ok(EdgeFunction(
            (0..self.n_tree_edges())
                .map(|e| {
                    let c = e / 2 + 1;
                    let dc = self.nodes[c].depth as i64;
                    if self.is_away(e) {
                        cpowi(z, dc - 1) * self.range_mass(&pre, c)
                    } else {
                        let mut total = czero();
                        let mut below = self.range_mass(&pre, c);
                        let mut a = self.nodes[c].parent;
                        while let Some(y) = a {
                            let mass = self.range_mass(&pre, y);
                            let da = self.nodes[y].depth as i64;
                            total += cpowi(z, 2 * da - dc) * (mass - below);
                            below = mass;
                            a = self.nodes[y].parent;
                        }
                        total
                    }
                })
                .collect(),
        ))
    }

    fn check_state<T: Real>(&self, u: &ResonantState<T>) -> Result<(), CoverError> {
        if u.edge_values().len() != self.graph.n_directed() {
            return Err(CoverError::GraphMismatch {
                got: u.edge_values().len(),
                want: self.graph.n_directed(),
            });
        }
        Ok(())
    }

    /// `f̃ = f ∘ π_𝔈` on every tree edge.
    pub fn lift_state<T: Real>(&self, u: &ResonantState<T>) -> Result<EdgeFunction<T>, CoverError> {
        self.check_state(u)?;
        let f = u.edge_values();
        Ok(EdgeFunction((0..self.n_tree_edges()).map(|e| f[self.project_edge(e)]).collect()))
    }

    /// Relative residual of the tree eigen-recursion for a lifted state,
    /// over the edges whose successors (resp. predecessors) all exist.
    pub fn lift_residual<T: Real>(&self, u: &ResonantState<T>, lifted: &EdgeFunction<T>) -> T {
        let z = u.z();
        let norm = inf_norm(&lifted.0).max(T::min_positive_value());
        let mut worst = T::zero();
        for e in 0..self.n_tree_edges() {
            let (at, plus) = match u.orientation() {
                Orientation::Plus => (self.tree_tau(e), true),
                Orientation::Minus => (self.tree_iota(e), false),
            };
            if !self.is_interior(at) {
                continue;
            }
            let s = self
                .out_tree_edges(at)
                .into_iter()
                .filter(|&n| n != e ^ 1)
                .map(|n| if plus { n } else { n ^ 1 })
                .fold(czero::<T>(), |acc, n| acc + lifted.0[n]);
            worst = worst.max((z * lifted.0[e] - s).norm());
        }
        worst / ((T::one() + z.norm()) * norm)
    }

    /// Boundary measure of a resonant state:
    /// `μ(c) = z^{−(D−1)} f(π_𝔈(edge into c))` on frontier cylinders.
    ///
    /// Additivity on coarser cylinders, `μ(∂₊ẽ) = z^{−depth ι(ẽ)} f(π_𝔈 ẽ)`,
    /// holds exactly when `f` satisfies the eigen-recursion and is checked
    /// to relative tolerance [`ADDITIVITY_TOL`].
    pub fn measure_from_state<T: Real>(&self, u: &ResonantState<T>) -> Result<FiniteBoundaryMeasure<T>, CoverError> {
        if u.orientation() != Orientation::Plus {
            return Err(CoverError::OrientationMismatch {
                expected: Orientation::Plus,
                got: u.orientation(),
            });
        }
        self.check_state(u)?;
        let z = u.z();
        if z == czero() {
            return Err(CoverError::ZeroEigenvalue);
        }
        let f = u.edge_values();
        let w = cpowi(z, -(self.depth as i64 - 1));
        let mu = FiniteBoundaryMeasure {
            values: self
                .frontier()
                .map(|c| w * f[self.nodes[c].in_edge.expect("frontier node")])
                .collect(),
        };
        let r = self.additivity_residual(u, &mu);
        if !(r <= T::lit(ADDITIVITY_TOL)) {
            return Err(CoverError::AdditivityViolated(r.as_f64()));
        }
        Ok(mu)
    }

    /// `max |μ(∂₊ẽ) − z^{−depth ι(ẽ)} f(π_𝔈 ẽ)| / Σ|μ(c)|` over the
    /// non-frontier away edges.
    pub fn additivity_residual<T: Real>(&self, u: &ResonantState<T>, mu: &FiniteBoundaryMeasure<T>) -> T {
        let pre = self.prefix(mu);
        let f = u.edge_values();
        let scale: T = mu.values.iter().map(|v| v.norm()).sum::<T>().max(T::min_positive_value());
        let mut worst = T::zero();
        for c in 1..self.first_frontier {
            let want = cpowi(u.z(), -(self.nodes[c].depth as i64 - 1)) * f[self.nodes[c].in_edge.expect("non-root")];
            worst = worst.max((self.range_mass(&pre, c) - want).norm());
        }
        worst / scale
    }

    /// Residual of `Σ_{y∼x} F(y) = (z + q/z) F(x)` over interior nodes
    /// whose neighbours are all interior, divided by `(1 + |z + q/z|)·scale`.
    ///
    /// `F` may vanish identically (e.g. at `z = ±1`), so the caller supplies
    /// the scale, typically `(q+1)‖f‖∞` for the state behind `F`.
    pub fn adjacency_residual<T: Real>(&self, z: C<T>, values: &VertexFunction<T>, scale: T) -> T {
        let lam = z + C::new(T::from_count(self.graph.q()), T::zero()) / z;
        let norm = scale.max(T::min_positive_value());
        let mut worst = T::zero();
        for x in 0..self.n_interior() {
            if self.nodes[x].depth + 1 >= self.depth {
                continue;
            }
            let s = self.neighbors(x).iter().fold(czero::<T>(), |a, &y| a + values.0[y]);
            worst = worst.max((s - lam * values.0[x]).norm());
        }
        worst / ((T::one() + lam.norm()) * norm)
    }
}

impl<T: Real> FiniteBoundaryMeasure<T> {
    pub fn values(&self) -> &[C<T>] {
        &self.values
    }

    pub fn total(&self) -> C<T> {
        self.values.iter().fold(czero(), |a, v| a + *v)
    }

    /// `μ(ω)`, summed over the frontier cylinders inside `ω`.
    pub fn mass(&self, cover: &TruncatedCover<'_>, w: &BoundaryCylinder) -> C<T> {
        let off = cover.first_frontier;
        cover.support(w).fold(czero(), |a, c| a + self.values[c - off])
    }

    pub fn scaled(&self, k: C<T>) -> Self {
        FiniteBoundaryMeasure {
            values: self.values.iter().map(|v| *v * k).collect(),
        }
    }
}

/// Node map of a (partial) tree automorphism; `None` outside its domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeMap {
    image: Vec<Option<NodeId>>,
}

impl TreeMap {
    pub fn apply(&self, x: NodeId) -> Option<NodeId> {
        self.image.get(x).copied().flatten()
    }

    pub fn domain(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.image.iter().enumerate().filter_map(|(x, y)| y.map(|_| x))
    }

    pub fn is_total(&self) -> bool {
        self.image.iter().all(Option::is_some)
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(x, y)| *y == Some(x))
    }

    /// Image of a tree edge whose endpoints are both in the domain.
    pub fn apply_edge(&self, cover: &TruncatedCover<'_>, e: TreeEdgeId) -> Option<TreeEdgeId> {
        let a = self.apply(cover.tree_iota(e))?;
        let b = self.apply(cover.tree_tau(e))?;
        cover.edge_between(a, b)
    }

    /// Image of a cylinder, when its edge maps to an away-from-root edge.
    pub fn apply_cylinder(&self, cover: &TruncatedCover<'_>, w: &BoundaryCylinder) -> Option<BoundaryCylinder> {
        let e = self.apply_edge(cover, w.edge())?;
        cover.cylinder(e).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_named;
    use crate::pairings::vertex_pushforward;

    fn ones(g: &RegularGraph, z: f64) -> ResonantState<f64> {
        ResonantState::new(Orientation::Plus, C::new(z, 0.0), vec![C::new(1.0, 0.0); g.n_directed()]).unwrap()
    }

    #[test]
    fn node_counts() {
        let k4 = generate_named("complete:4").unwrap();
        let t = TruncatedCover::unfold(&k4, 0, 3).unwrap();
        assert_eq!(t.n_nodes(), 22);
        assert_eq!(t.n_frontier(), 12);
        t.check_invariants().unwrap();
        let c3 = generate_named("cycle:3").unwrap();
        let t = TruncatedCover::unfold(&c3, 1, 4).unwrap();
        assert_eq!(t.n_nodes(), 9);
        t.check_invariants().unwrap();
        for name in ["petersen", "complete:5", "complete_bipartite:3", "hypercube3"] {
            let g = generate_named(name).unwrap();
            let t = TruncatedCover::unfold(&g, g.n_vertices() - 1, 2).unwrap();
            t.check_invariants().unwrap();
            assert!(t.frontier().all(|c| t.node_depth(c) == 2));
        }
        assert_eq!(TruncatedCover::unfold(&k4, 0, 1).unwrap_err(), CoverError::DepthTooSmall(1));
        assert!(matches!(
            TruncatedCover::unfold(&k4, 4, 3),
            Err(CoverError::VertexOutOfRange { .. })
        ));
        assert!(matches!(TruncatedCover::unfold(&k4, 0, 60), Err(CoverError::TooLarge(_))));
    }

    #[test]
    fn numbering_is_a_prefix_across_depths() {
        let g = generate_named("petersen").unwrap();
        let a = TruncatedCover::unfold(&g, 3, 3).unwrap();
        let b = TruncatedCover::unfold(&g, 3, 4).unwrap();
        for x in 0..a.n_nodes() {
            assert_eq!(a.base_path(x), b.base_path(x));
            assert_eq!(b.node_at(&a.base_path(x)), Some(x));
        }
    }

    #[test]
    fn cylinder_refinement_partitions() {
        let g = generate_named("complete:4").unwrap();
        let t = TruncatedCover::unfold(&g, 0, 4).unwrap();
        for head in 1..t.n_nodes() {
            let w = t.cylinder_at(head).unwrap();
            let parts = t.refine(&w);
            if t.is_interior(head) {
                assert_eq!(parts.len(), 2);
                let joined: Vec<_> = parts.iter().flat_map(|p| t.support(p)).collect();
                assert_eq!(joined, t.support(&w).collect::<Vec<_>>());
            } else {
                assert!(parts.is_empty());
                assert_eq!(t.support(&w).len(), 1);
            }
        }
        assert_eq!(t.cylinder(1), Err(CoverError::NotAwayEdge(1)));
    }

    #[test]
    fn partition_at_every_interior_node() {
        let g = generate_named("complete:4").unwrap();
        let t = TruncatedCover::unfold(&g, 0, 4).unwrap();
        for x in 0..t.n_interior() {
            let mut count = vec![0usize; t.n_frontier()];
            for e in t.out_tree_edges(x) {
                for c in t.frontier() {
                    if t.edge_boundary_contains(e, &t.cylinder_at(c).unwrap()) {
                        count[c - t.n_interior()] += 1;
                    }
                }
            }
            assert!(count.iter().all(|&k| k == 1), "node {x}");
        }
    }

    #[test]
    fn brackets_and_kernels() {
        let g = generate_named("complete:4").unwrap();
        let t = TruncatedCover::unfold(&g, 0, 5).unwrap();
        let deep = t.frontier().start;
        let ray: Vec<NodeId> = {
            let mut v = vec![deep];
            while let Some(p) = t.parent(*v.last().unwrap()) {
                v.push(p);
            }
            v.reverse();
            v
        };
        let w = t.cylinder_at(ray[4]).unwrap();
        assert_eq!(t.horocycle_bracket(0, &w), Ok(0));
        for (k, &x) in ray.iter().enumerate().take(5) {
            assert_eq!(t.horocycle_bracket(x, &w), Ok(k as i64));
        }
        let off = *t.children(0).iter().find(|&&c| c != ray[1]).unwrap();
        assert_eq!(t.horocycle_bracket(off, &w), Ok(-1));
        let z = C::new(2.0, 0.0);
        assert_eq!(t.poisson_kernel(z, 0, &w), Ok(C::new(1.0, 0.0)));
        assert_eq!(t.poisson_kernel(z, ray[3], &w), Ok(C::new(8.0, 0.0)));
        assert_eq!(t.poisson_kernel(z, off, &w), Ok(C::new(0.5, 0.0)));
        let w1 = t.cylinder_at(ray[1]).unwrap();
        assert_eq!(
            t.horocycle_bracket(ray[2], &w1),
            Err(CoverError::BracketNotConstant { node: ray[2], head: ray[1] })
        );
        // constancy across the frontier points of the cylinder
        for x in 0..t.n_nodes() {
            for h in 1..t.n_nodes() {
                let w = t.cylinder_at(h).unwrap();
                if let Ok(b) = t.horocycle_bracket(x, &w) {
                    assert!(t.support(&w).all(|c| t.frontier_bracket(x, c) == b));
                }
            }
        }
    }

    #[test]
    fn k4_measure_values() {
        let g = generate_named("complete:4").unwrap();
        let t = TruncatedCover::unfold(&g, 0, 3).unwrap();
        let mu = t.measure_from_state(&ones(&g, 2.0)).unwrap();
        assert!(mu.values().iter().all(|v| *v == C::new(0.25, 0.0)));
        let w = t.cylinder_at(t.children(0)[0]).unwrap();
        let mid = t.refine(&w)[0];
        assert_eq!(mu.mass(&t, &mid), C::new(0.5, 0.0));
        let k = C::new(0.0, 3.0);
        let mu3 = t.measure_from_state(&ones(&g, 2.0).scaled(k)).unwrap();
        assert_eq!(mu3, mu.scaled(k));
        let bad = ResonantState::new(Orientation::Plus, C::new(3.0, 0.0), vec![C::new(1.0, 0.0); 12]).unwrap();
        assert!(matches!(t.measure_from_state(&bad), Err(CoverError::AdditivityViolated(_))));
        let minus = ResonantState::new(Orientation::Minus, C::new(2.0, 0.0), vec![C::new(1.0, 0.0); 12]).unwrap();
        assert!(matches!(t.measure_from_state(&minus), Err(CoverError::OrientationMismatch { .. })));
    }

    #[test]
    fn poisson_transform_of_constant_state() {
        let g = generate_named("complete:4").unwrap();
        let t = TruncatedCover::unfold(&g, 0, 4).unwrap();
        let u = ones(&g, 2.0);
        let mu = t.measure_from_state(&u).unwrap();
        let p = t.poisson_transform(u.z(), &mu).unwrap();
        assert!((p.0[0] - C::new(3.0, 0.0)).norm() < 1e-13);
        let push = vertex_pushforward(&g, &u).unwrap();
        for x in 0..t.n_interior() {
            assert!((p.0[x] - push.0[t.project_node(x)]).norm() < 1e-12);
        }
        assert!(t.adjacency_residual(u.z(), &p, 3.0) < 1e-13);
        assert_eq!(t.poisson_transform(C::new(0.0, 0.0), &mu), Err(CoverError::ZeroEigenvalue));
    }

    #[test]
    fn grouped_sums_match_the_definition() {
        let g = generate_named("complete:5").unwrap();
        let t = TruncatedCover::unfold(&g, 2, 3).unwrap();
        let values: Vec<C<f64>> = (0..t.n_frontier()).map(|i| C::new(i as f64 * 0.1, 1.0 - i as f64 * 0.03)).collect();
        let mu = FiniteBoundaryMeasure { values };
        let z = C::new(0.7, -1.3);
        let p = t.poisson_transform(z, &mu).unwrap();
        let pe = t.edge_poisson_transform(z, &mu).unwrap();
        let off = t.n_interior();
        for x in 0..t.n_interior() {
            let direct = t.frontier().fold(C::new(0.0, 0.0), |a, c| {
                a + z.powi(t.frontier_bracket(x, c) as i32) * mu.values()[c - off]
            });
            assert!((p.0[x] - direct).norm() < 1e-12);
            let split = t.out_tree_edges(x).iter().fold(C::new(0.0, 0.0), |a, &e| a + pe.0[e]);
            assert!((p.0[x] - split).norm() < 1e-12);
        }
        for e in 0..t.n_tree_edges() {
            let x = t.tree_iota(e);
            let direct = t.frontier().fold(C::new(0.0, 0.0), |a, c| {
                if t.edge_boundary_contains(e, &t.cylinder_at(c).unwrap()) {
                    a + z.powi(t.frontier_bracket(x, c) as i32) * mu.values()[c - off]
                } else {
                    a
                }
            });
            assert!((pe.0[e] - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn deck_transforms() {
        let g = generate_named("complete:4").unwrap();
        let t = TruncatedCover::unfold(&g, 0, 5).unwrap();
        assert!(t.deck_transform(0).unwrap().is_identity());
        let bad = t.children(0)[0];
        assert_eq!(t.deck_transform(bad), Err(CoverError::InvalidTarget(bad)));
        let u = ones(&g, 2.0);
        let lifted = t.lift_state(&u).unwrap();
        for target in (0..t.n_nodes()).filter(|&x| t.project_node(x) == 0 && t.node_depth(x) <= 3) {
            let d = t.deck_transform(target).unwrap();
            assert_eq!(d.apply(0), Some(target));
            for x in d.domain() {
                assert_eq!(t.project_node(d.apply(x).unwrap()), t.project_node(x));
            }
            for e in 0..t.n_tree_edges() {
                if let Some(e2) = d.apply_edge(&t, e) {
                    assert_eq!(t.project_edge(e2), t.project_edge(e));
                    assert_eq!(lifted.0[e2], lifted.0[e]);
                }
            }
        }
    }

    #[test]
    fn root_automorphisms_preserve_brackets() {
        let g = generate_named("petersen").unwrap();
        let t = TruncatedCover::unfold(&g, 0, 3).unwrap();
        for seed in 0..20 {
            let k = t.root_automorphism(seed);
            assert!(k.is_total());
            assert_eq!(k.apply(0), Some(0));
            for x in 0..t.n_nodes() {
                for h in 1..t.n_nodes() {
                    let w = t.cylinder_at(h).unwrap();
                    let gw = k.apply_cylinder(&t, &w).unwrap();
                    let gx = k.apply(x).unwrap();
                    assert_eq!(t.horocycle_bracket(gx, &gw).ok(), t.horocycle_bracket(x, &w).ok());
                }
            }
        }
    }

    #[test]
    fn geodesic_geometry() {
        let g = generate_named("complete:4").unwrap();
        let t = TruncatedCover::unfold(&g, 0, 5).unwrap();
        let a = t.children(0)[0];
        let b = t.children(0)[1];
        let w1 = t.cylinder_at(t.children(a)[0]).unwrap();
        let w2 = t.cylinder_at(t.children(b)[1]).unwrap();
        for x in [0, a, b, w1.head(), w2.head()] {
            assert_eq!(t.distance_to_geodesic(x, &w1, &w2), Ok(0));
            for n in 0..4 {
                assert_eq!(t.s_n_contains(x, &w1, &w2, n), Ok(true));
                assert!(matches!(t.unique_path(x, &w1, &w2, n), Err(CoverError::InsideSn { .. })));
            }
        }
        assert_eq!(t.distance_to_geodesic(0, &w1, &w1), Err(CoverError::OverlappingCylinders));
        let inside = t.children(w1.head())[0];
        assert_eq!(
            t.distance_to_geodesic(inside, &w1, &w2),
            Err(CoverError::GeodesicLeavesTruncation(inside))
        );
        for x in 0..t.n_nodes() {
            let Ok(d) = t.distance_to_geodesic(x, &w1, &w2) else { continue };
            for n in 0..d {
                let p = t.unique_path(x, &w1, &w2, n).unwrap();
                assert_eq!(p.len(), n + 1);
                let all: Vec<_> = t
                    .chains_from(x, n + 1)
                    .into_iter()
                    .filter(|c| t.chain_sees_both(c, &w1, &w2))
                    .collect();
                assert_eq!(all, vec![p], "x={x} n={n}");
            }
        }
    }
}
