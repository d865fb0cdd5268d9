//! Cylinder sets of the one-sided shift spaces of non-backtracking chains,
//! locally constant functions on them, the transfer operators, and
//! (co)resonant states represented by their edge values.
//!
//! Chains are always stored in forward reading order (`τ(e_j) = ι(e_{j+1})`).
//! A forward cylinder `[e_1, ..., e_k]` is the set of forward-infinite chains
//! beginning with those edges; a backward cylinder `[e_1, ..., e_k]` is the set
//! of backward-infinite chains ending with them. The "deepest" edge of a
//! cylinder is the one closest to the infinite end: `e_k` forward, `e_1`
//! backward.
//!
//! A transfer-operator eigendistribution `u` with eigenvalue `z ≠ 0` is fixed
//! by its values on depth-one cylinders, and a depth-`k` cylinder with deepest
//! edge `e` carries the value `z^{1-k} u(e)`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::graph::{EdgeId, RegularGraph};
use crate::scalar::{cpowi, czero, inf_norm, Real, C};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ShiftError {
    #[error("orientation mismatch")]
    OrientationMismatch,
    #[error("empty chain")]
    EmptyChain,
    #[error("edge {0} out of range")]
    EdgeOutOfRange(EdgeId),
    #[error("edges {0} and {1} are not a non-backtracking continuation")]
    NotAChain(EdgeId, EdgeId),
    #[error("state has {got} edge values, graph has {want} directed edges")]
    GraphMismatch { got: usize, want: usize },
    #[error("resonance must be non-zero")]
    ZeroEigenvalue,
    #[error("terms of different depths; use the refining constructor")]
    MixedDepth,
}

/// Direction of the infinite end of the chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub enum Orientation {
    /// Forward chains `(e_1, e_2, ...)`, resonant states.
    Plus,
    /// Backward chains `(..., e_2, e_1)`, coresonant states.
    Minus,
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Plus => "+",
            Orientation::Minus => "-",
        })
    }
}

/// Basic open set of a shift space.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cylinder {
    orientation: Orientation,
    chain: Vec<EdgeId>,
}

impl Cylinder {
    pub fn new(g: &RegularGraph, orientation: Orientation, chain: Vec<EdgeId>) -> Result<Self, ShiftError> {
        if chain.is_empty() {
            return Err(ShiftError::EmptyChain);
        }
        if let Some(&e) = chain.iter().find(|&&e| e >= g.n_directed()) {
            return Err(ShiftError::EdgeOutOfRange(e));
        }
        for w in chain.windows(2) {
            if !g.successors(w[0]).contains(&w[1]) {
                return Err(ShiftError::NotAChain(w[0], w[1]));
            }
        }
        Ok(Cylinder { orientation, chain })
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn chain(&self) -> &[EdgeId] {
        &self.chain
    }

    pub fn depth(&self) -> usize {
        self.chain.len()
    }

    /// Edge closest to the infinite end.
    pub fn deepest_edge(&self) -> EdgeId {
        match self.orientation {
            Orientation::Plus => *self.chain.last().expect("non-empty"),
            Orientation::Minus => self.chain[0],
        }
    }

    /// The `q` one-step refinements, extending toward the infinite end.
    pub fn refine(&self, g: &RegularGraph) -> Vec<Cylinder> {
        match self.orientation {
            Orientation::Plus => g
                .successors(self.deepest_edge())
                .iter()
                .map(|&e| {
                    let mut chain = self.chain.clone();
                    chain.push(e);
                    Cylinder {
                        orientation: self.orientation,
                        chain,
                    }
                })
                .collect(),
            Orientation::Minus => g
                .predecessors(self.deepest_edge())
                .iter()
                .map(|&e| {
                    let mut chain = Vec::with_capacity(self.chain.len() + 1);
                    chain.push(e);
                    chain.extend_from_slice(&self.chain);
                    Cylinder {
                        orientation: self.orientation,
                        chain,
                    }
                })
                .collect(),
        }
    }

    /// All cylinders of the given depth, `2m q^{depth-1}` of them.
    pub fn enumerate(g: &RegularGraph, orientation: Orientation, depth: usize) -> Vec<Cylinder> {
        let mut level: Vec<Cylinder> = (0..g.n_directed())
            .map(|e| Cylinder {
                orientation,
                chain: vec![e],
            })
            .collect();
        for _ in 1..depth {
            level = level.iter().flat_map(|c| c.refine(g)).collect();
        }
        level
    }
}

/// Locally constant function with compact support: a finite combination of
/// cylinder indicators, all of a common depth.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderFunction<T> {
    orientation: Orientation,
    depth: usize,
    terms: BTreeMap<Cylinder, C<T>>,
}

impl<T: Real> CylinderFunction<T> {
    pub fn zero(orientation: Orientation) -> Self {
        CylinderFunction {
            orientation,
            depth: 1,
            terms: BTreeMap::new(),
        }
    }

    pub fn indicator(c: Cylinder) -> Self {
        Self::from_terms(c.orientation, vec![(c, C::new(T::one(), T::zero()))])
            .expect("single term has its own orientation")
    }

    /// Builds the function from terms of one common depth, merging
    /// coefficients of repeated cylinders.
    pub fn from_terms(
        orientation: Orientation,
        terms: impl IntoIterator<Item = (Cylinder, C<T>)>,
    ) -> Result<Self, ShiftError> {
        let terms: Vec<_> = terms.into_iter().collect();
        if terms.iter().any(|(c, _)| c.orientation != orientation) {
            return Err(ShiftError::OrientationMismatch);
        }
        let depth = terms.iter().map(|(c, _)| c.depth()).max().unwrap_or(1);
        if terms.iter().any(|(c, _)| c.depth() != depth) {
            return Err(ShiftError::MixedDepth);
        }
        let mut f = CylinderFunction {
            orientation,
            depth,
            terms: BTreeMap::new(),
        };
        for (c, a) in terms {
            f.add_term(c, a);
        }
        Ok(f)
    }

    // Caller guarantees `c.depth() <= self.depth`; uses chain structure only.
    fn add_term_with(&mut self, g: Option<&RegularGraph>, c: Cylinder, a: C<T>) {
        if c.depth() == self.depth {
            let slot = self.terms.entry(c).or_insert_with(czero);
            *slot += a;
            if *slot == czero() {
                // keep coefficients non-zero
                self.terms.retain(|_, v| *v != czero());
            }
            return;
        }
        let g = g.expect("refinement below the common depth needs the graph");
        for child in c.refine(g) {
            self.add_term_with(Some(g), child, a);
        }
    }

    fn add_term(&mut self, c: Cylinder, a: C<T>) {
        self.add_term_with(None, c, a);
    }

    /// Mixed-depth construction: every term is normalised to the maximal depth
    /// by refining it into its descendants.
    pub fn from_terms_refined(
        g: &RegularGraph,
        orientation: Orientation,
        terms: impl IntoIterator<Item = (Cylinder, C<T>)>,
    ) -> Result<Self, ShiftError> {
        let terms: Vec<_> = terms.into_iter().collect();
        if terms.iter().any(|(c, _)| c.orientation != orientation) {
            return Err(ShiftError::OrientationMismatch);
        }
        let depth = terms.iter().map(|(c, _)| c.depth()).max().unwrap_or(1);
        let mut f = CylinderFunction {
            orientation,
            depth,
            terms: BTreeMap::new(),
        };
        for (c, a) in terms {
            f.add_term_with(Some(g), c, a);
        }
        Ok(f)
    }

    /// Same function expressed with cylinders of depth `depth` (no-op when
    /// already at least that deep).
    pub fn refined_to(&self, g: &RegularGraph, depth: usize) -> Self {
        let mut f = CylinderFunction {
            orientation: self.orientation,
            depth: depth.max(self.depth),
            terms: BTreeMap::new(),
        };
        for (c, a) in &self.terms {
            f.add_term_with(Some(g), c.clone(), *a);
        }
        f
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Cylinder, &C<T>)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Pointwise value on a chain, given by at least `depth` leading edges
    /// (forward) or trailing edges (backward) in forward reading order.
    pub fn value_at(&self, chain: &[EdgeId]) -> C<T> {
        self.terms
            .iter()
            .filter(|(c, _)| match self.orientation {
                Orientation::Plus => chain.starts_with(c.chain()),
                Orientation::Minus => chain.ends_with(c.chain()),
            })
            .fold(czero(), |acc, (_, a)| acc + *a)
    }
}

/// Transfer operator on cylinder functions.
///
/// Forward: `L 1_[e_1..e_k] = 1_[e_2..e_k]` for `k >= 2` and
/// `L 1_[e] = Σ_{e' ∈ succ(e)} 1_[e']`. Backward strips or extends at the
/// terminal end instead.
pub fn apply_transfer<T: Real>(g: &RegularGraph, f: &CylinderFunction<T>) -> CylinderFunction<T> {
    let o = f.orientation;
    let mut out: Vec<(Cylinder, C<T>)> = Vec::new();
    for (c, &a) in &f.terms {
        if c.depth() >= 2 {
            let chain = match o {
                Orientation::Plus => c.chain[1..].to_vec(),
                Orientation::Minus => c.chain[..c.depth() - 1].to_vec(),
            };
            out.push((
                Cylinder {
                    orientation: o,
                    chain,
                },
                a,
            ));
        } else {
            let e = c.chain[0];
            let next = match o {
                Orientation::Plus => g.successors(e),
                Orientation::Minus => g.predecessors(e),
            };
            for &e2 in next {
                out.push((
                    Cylinder {
                        orientation: o,
                        chain: vec![e2],
                    },
                    a,
                ));
            }
        }
    }
    CylinderFunction::from_terms(o, out).expect("orientation preserved")
}

/// Resonant (`Plus`) or coresonant (`Minus`) state at resonance `z`, stored
/// as its values on depth-one cylinders.
///
/// The eigen-equation `z f = S f` (resp. `z g = Sᵀ g`) is not enforced at
/// construction; see [`check_resonant`] and [`ResonantState::eigen_residual`].
#[derive(Debug, Clone, PartialEq)]
pub struct ResonantState<T> {
    orientation: Orientation,
    z: C<T>,
    values: Vec<C<T>>,
}

impl<T: Real> ResonantState<T> {
    pub fn new(orientation: Orientation, z: C<T>, values: Vec<C<T>>) -> Result<Self, ShiftError> {
        if z == czero() {
            return Err(ShiftError::ZeroEigenvalue);
        }
        Ok(ResonantState { orientation, z, values })
    }

    /// Constructor that also checks the vector length against `g`.
    pub fn for_graph(
        g: &RegularGraph,
        orientation: Orientation,
        z: C<T>,
        values: Vec<C<T>>,
    ) -> Result<Self, ShiftError> {
        if values.len() != g.n_directed() {
            return Err(ShiftError::GraphMismatch {
                got: values.len(),
                want: g.n_directed(),
            });
        }
        Self::new(orientation, z, values)
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn z(&self) -> C<T> {
        self.z
    }

    pub fn edge_values(&self) -> &[C<T>] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == czero())
    }

    pub fn scaled(&self, c: C<T>) -> Self {
        ResonantState {
            orientation: self.orientation,
            z: self.z,
            values: self.values.iter().map(|v| *v * c).collect(),
        }
    }

    /// Value on a single cylinder: `z^{1-k}` times the deepest edge value.
    pub fn cylinder_value(&self, c: &Cylinder) -> Result<C<T>, ShiftError> {
        if c.orientation != self.orientation {
            return Err(ShiftError::OrientationMismatch);
        }
        let k = c.depth() as i64;
        Ok(cpowi(self.z, 1 - k) * self.values[c.deepest_edge()])
    }

    /// `max_e |z u(e) − Σ_{next} u(e')| / ((1 + |z|) ‖u‖∞)`, the relative
    /// residual of the edge eigen-recursion.
    pub fn eigen_residual(&self, g: &RegularGraph) -> T {
        let norm = inf_norm(&self.values);
        if norm == T::zero() {
            return T::infinity();
        }
        let mut worst = T::zero();
        for e in 0..g.n_directed() {
            let next = match self.orientation {
                Orientation::Plus => g.successors(e),
                Orientation::Minus => g.predecessors(e),
            };
            let s = next.iter().fold(czero::<T>(), |acc, &f| acc + self.values[f]);
            worst = worst.max((self.z * self.values[e] - s).norm());
        }
        worst / ((T::one() + self.z.norm()) * norm)
    }
}

/// Pairing of a state with a cylinder function.
pub fn evaluate<T: Real>(u: &ResonantState<T>, f: &CylinderFunction<T>) -> Result<C<T>, ShiftError> {
    if u.orientation != f.orientation {
        return Err(ShiftError::OrientationMismatch);
    }
    f.terms.iter().try_fold(czero(), |acc, (c, a)| Ok(acc + *a * u.cylinder_value(c)?))
}

/// Outcome of [`check_resonant`].
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceCheck<T> {
    /// Largest `|⟨u, L 1_C⟩ − z ⟨u, 1_C⟩|` over the tested cylinders.
    pub max_residual: T,
    /// The residual divided by `(1 + |z|) ‖u‖∞`.
    pub relative_residual: T,
    pub worst_cylinder: Option<Cylinder>,
    pub cylinders_checked: usize,
    pub pass: bool,
}

/// Checks `⟨u, L 1_C⟩ = z ⟨u, 1_C⟩` on every cylinder of depth `1..=depth`,
/// with tolerance `tol (1 + |z|) ‖u‖∞`. A zero state never passes.
pub fn check_resonant<T: Real>(
    g: &RegularGraph,
    u: &ResonantState<T>,
    depth: usize,
    tol: T,
) -> Result<ResonanceCheck<T>, ShiftError> {
    if u.values.len() != g.n_directed() {
        return Err(ShiftError::GraphMismatch {
            got: u.values.len(),
            want: g.n_directed(),
        });
    }
    let mut worst = T::zero();
    let mut worst_cylinder = None;
    let mut count = 0;
    for k in 1..=depth.max(1) {
        for c in Cylinder::enumerate(g, u.orientation, k) {
            let lhs = evaluate(u, &apply_transfer(g, &CylinderFunction::indicator(c.clone())))?;
            let rhs = u.z * u.cylinder_value(&c)?;
            let r = (lhs - rhs).norm();
            if r > worst || worst_cylinder.is_none() {
                worst = r;
                worst_cylinder = Some(c);
            }
            count += 1;
        }
    }
    let norm = inf_norm(&u.values);
    let bound = tol * (T::one() + u.z.norm()) * norm;
    let relative = if norm == T::zero() {
        T::infinity()
    } else {
        worst / ((T::one() + u.z.norm()) * norm)
    };
    Ok(ResonanceCheck {
        max_residual: worst,
        relative_residual: relative,
        worst_cylinder,
        cylinders_checked: count,
        pass: norm > T::zero() && worst <= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_named;

    type Cf = CylinderFunction<f64>;

    fn c(re: f64) -> C<f64> {
        C::new(re, 0.0)
    }

    fn ones(g: &RegularGraph, o: Orientation, z: f64) -> ResonantState<f64> {
        ResonantState::new(o, c(z), vec![c(1.0); g.n_directed()]).unwrap()
    }

    #[test]
    fn cylinder_counts() {
        let g = generate_named("complete:4").unwrap();
        for o in [Orientation::Plus, Orientation::Minus] {
            for k in 1..=4 {
                assert_eq!(Cylinder::enumerate(&g, o, k).len(), 12 * 2usize.pow(k as u32 - 1));
            }
        }
    }

    #[test]
    fn cylinder_validation() {
        let g = generate_named("complete:4").unwrap();
        assert_eq!(Cylinder::new(&g, Orientation::Plus, vec![]), Err(ShiftError::EmptyChain));
        assert_eq!(Cylinder::new(&g, Orientation::Plus, vec![0, 1]), Err(ShiftError::NotAChain(0, 1)));
        assert_eq!(Cylinder::new(&g, Orientation::Plus, vec![99]), Err(ShiftError::EdgeOutOfRange(99)));
    }

    #[test]
    fn transfer_of_zero_is_zero() {
        let g = generate_named("complete:4").unwrap();
        assert!(apply_transfer(&g, &Cf::zero(Orientation::Plus)).is_zero());
    }

    #[test]
    fn transfer_on_depth_one_and_two() {
        let g = generate_named("complete:4").unwrap();
        let e = 0;
        let one = Cylinder::new(&g, Orientation::Plus, vec![e]).unwrap();
        let lf = apply_transfer(&g, &Cf::indicator(one));
        let keys: Vec<_> = lf.terms().map(|(c, _)| c.chain().to_vec()).collect();
        let mut want: Vec<_> = g.successors(e).iter().map(|&s| vec![s]).collect();
        want.sort();
        assert_eq!(keys, want);

        let e2 = g.successors(e)[0];
        let two = Cylinder::new(&g, Orientation::Plus, vec![e, e2]).unwrap();
        let lf = apply_transfer(&g, &Cf::indicator(two));
        let keys: Vec<_> = lf.terms().map(|(c, a)| (c.chain().to_vec(), *a)).collect();
        assert_eq!(keys, vec![(vec![e2], c(1.0))]);
    }

    #[test]
    fn transfer_matches_shift_preimages() {
        // (L F)(x) = Σ over one-step extensions, checked pointwise on chains.
        let g = generate_named("complete:4").unwrap();
        for o in [Orientation::Plus, Orientation::Minus] {
            let cyls = Cylinder::enumerate(&g, o, 2);
            let f = Cf::from_terms(o, cyls.iter().take(7).cloned().enumerate().map(|(i, c)| (c, C::new(i as f64 + 1.0, 0.5)))).unwrap();
            let lf = apply_transfer(&g, &f);
            for x in Cylinder::enumerate(&g, o, 3) {
                let ext: Vec<Vec<EdgeId>> = match o {
                    Orientation::Plus => g.predecessors(x.chain()[0]).iter().map(|&p| {
                        let mut v = vec![p];
                        v.extend_from_slice(x.chain());
                        v
                    }).collect(),
                    Orientation::Minus => g.successors(*x.chain().last().unwrap()).iter().map(|&s| {
                        let mut v = x.chain().to_vec();
                        v.push(s);
                        v
                    }).collect(),
                };
                let want = ext.iter().fold(c(0.0), |acc, ch| acc + f.value_at(ch));
                assert!((lf.value_at(x.chain()) - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn evaluate_examples() {
        let g = generate_named("complete:4").unwrap();
        let u = ones(&g, Orientation::Plus, 2.0);
        let e = 3;
        let one = Cylinder::new(&g, Orientation::Plus, vec![e]).unwrap();
        assert_eq!(evaluate(&u, &Cf::indicator(one.clone())).unwrap(), c(1.0));
        let deep = &one.refine(&g)[0].refine(&g)[1];
        assert_eq!(deep.depth(), 3);
        assert!((evaluate(&u, &Cf::indicator(deep.clone())).unwrap() - c(0.25)).norm() < 1e-15);
        let wrong = ones(&g, Orientation::Minus, 2.0);
        assert_eq!(evaluate(&wrong, &Cf::indicator(one)), Err(ShiftError::OrientationMismatch));
    }

    #[test]
    fn refinement_preserves_evaluation() {
        let g = generate_named("petersen").unwrap();
        let u = ones(&g, Orientation::Minus, 2.0);
        let cyls = Cylinder::enumerate(&g, Orientation::Minus, 2);
        let f = Cf::from_terms(Orientation::Minus, cyls.into_iter().step_by(5).map(|c| (c, C::new(1.0, -2.0)))).unwrap();
        let base = evaluate(&u, &f).unwrap();
        for k in 3..=5 {
            let r = f.refined_to(&g, k);
            assert_eq!(r.depth(), k);
            assert!((evaluate(&u, &r).unwrap() - base).norm() <= 1e-12 * base.norm());
        }
    }

    #[test]
    fn mixed_depth_terms_are_refined() {
        let g = generate_named("complete:4").unwrap();
        let a = Cylinder::new(&g, Orientation::Plus, vec![0]).unwrap();
        let b = a.refine(&g)[0].clone();
        let f = Cf::from_terms_refined(&g, Orientation::Plus, vec![(a, c(1.0)), (b.clone(), c(-1.0))]).unwrap();
        assert_eq!(f.depth(), 2);
        // [0] splits into two depth-2 cylinders; one of them is cancelled
        assert_eq!(f.terms().count(), 1);
        assert!(f.terms().all(|(k, _)| *k != b));
    }

    #[test]
    fn check_resonant_examples() {
        let c3 = generate_named("cycle:3").unwrap();
        let r = check_resonant(&c3, &ones(&c3, Orientation::Plus, 1.0), 3, 1e-12).unwrap();
        assert!(r.pass);
        assert_eq!(r.max_residual, 0.0);

        let k4 = generate_named("complete:4").unwrap();
        let r = check_resonant(&k4, &ones(&k4, Orientation::Plus, 2.0), 4, 1e-12).unwrap();
        assert!(r.pass && r.max_residual <= 1e-12);
        assert_eq!(r.cylinders_checked, 12 * (1 + 2 + 4 + 8));

        let mut v = vec![c(1.0); 12];
        v[5] += c(1e-3);
        let u = ResonantState::new(Orientation::Plus, c(2.0), v).unwrap();
        let r = check_resonant(&k4, &u, 1, 1e-12).unwrap();
        assert!(!r.pass);
        // worst cylinder: z*(1+1e-3) − 2, or the predecessors' sums shifted by 1e-3
        assert!((r.max_residual - 2e-3).abs() < 1e-12, "{}", r.max_residual);
    }

    #[test]
    fn zero_state_fails_check() {
        let g = generate_named("complete:4").unwrap();
        let u = ResonantState::new(Orientation::Plus, c(2.0), vec![c(0.0); 12]).unwrap();
        assert!(u.is_zero());
        assert!(!check_resonant(&g, &u, 2, 1e-8).unwrap().pass);
        assert_eq!(ResonantState::new(Orientation::Plus, c(0.0), vec![]), Err(ShiftError::ZeroEigenvalue));
    }
}
