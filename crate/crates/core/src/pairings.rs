//! Push-forwards of (co)resonant states to vertices and edges, and the
//! bilinear pairings between a resonant state `u₊` (edge values `f`) and a
//! coresonant state `u₋` (edge values `g`).

use thiserror::Error;

use crate::graph::RegularGraph;
use crate::scalar::{czero, inf_norm, Real, C};
use crate::shift::{Orientation, ResonantState};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PairingError {
    #[error("expected a {expected} state, got {got}")]
    OrientationMismatch { expected: Orientation, got: Orientation },
    #[error("state has {got} edge values, graph has {want} directed edges")]
    GraphMismatch { got: usize, want: usize },
}

/// Complex function on vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexFunction<T>(pub Vec<C<T>>);

/// Complex function on directed edges.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFunction<T>(pub Vec<C<T>>);

fn check<T: Real>(g: &RegularGraph, u: &ResonantState<T>, expected: Orientation) -> Result<(), PairingError> {
    if u.orientation() != expected {
        return Err(PairingError::OrientationMismatch {
            expected,
            got: u.orientation(),
        });
    }
    if u.edge_values().len() != g.n_directed() {
        return Err(PairingError::GraphMismatch {
            got: u.edge_values().len(),
            want: g.n_directed(),
        });
    }
    Ok(())
}

fn check_pair<T: Real>(g: &RegularGraph, up: &ResonantState<T>, um: &ResonantState<T>) -> Result<(), PairingError> {
    check(g, up, Orientation::Plus)?;
    check(g, um, Orientation::Minus)
}

/// Sum over chains starting (resonant) or ending (coresonant) at each vertex.
pub fn vertex_pushforward<T: Real>(g: &RegularGraph, u: &ResonantState<T>) -> Result<VertexFunction<T>, PairingError> {
    if u.edge_values().len() != g.n_directed() {
        return Err(PairingError::GraphMismatch {
            got: u.edge_values().len(),
            want: g.n_directed(),
        });
    }
    let v = u.edge_values();
    Ok(VertexFunction(
        (0..g.n_vertices())
            .map(|x| {
                let edges = match u.orientation() {
                    Orientation::Plus => g.out_edges(x),
                    Orientation::Minus => g.in_edges(x),
                };
                edges.iter().fold(czero(), |acc, &e| acc + v[e])
            })
            .collect(),
    ))
}

/// Push-forward to directed edges; the depth-one cylinder values themselves.
pub fn edge_pushforward<T: Real>(u: &ResonantState<T>) -> EdgeFunction<T> {
    EdgeFunction(u.edge_values().to_vec())
}

/// `Σ_x (π₊ u₊)(x) (π₋ u₋)(x)`.
pub fn vertex_pairing<T: Real>(g: &RegularGraph, up: &ResonantState<T>, um: &ResonantState<T>) -> Result<C<T>, PairingError> {
    check_pair(g, up, um)?;
    let a = vertex_pushforward(g, up)?;
    let b = vertex_pushforward(g, um)?;
    Ok(a.0.iter().zip(&b.0).fold(czero(), |acc, (x, y)| acc + *x * *y))
}

/// `Σ_e f(e) g(e)`.
pub fn edge_pairing<T: Real>(g: &RegularGraph, up: &ResonantState<T>, um: &ResonantState<T>) -> Result<C<T>, PairingError> {
    check_pair(g, up, um)?;
    let (f, h) = (up.edge_values(), um.edge_values());
    Ok((0..g.n_directed()).fold(czero(), |acc, e| acc + f[e] * h[e]))
}

/// `Σ_e f(op e) g(e)`.
pub fn modified_edge_pairing<T: Real>(
    g: &RegularGraph,
    up: &ResonantState<T>,
    um: &ResonantState<T>,
) -> Result<C<T>, PairingError> {
    check_pair(g, up, um)?;
    let (f, h) = (up.edge_values(), um.edge_values());
    Ok((0..g.n_directed()).fold(czero(), |acc, e| acc + f[g.op(e)] * h[e]))
}

/// Geodesic pairing as vertex pairing minus modified edge pairing.
pub fn geodesic_pairing_formula<T: Real>(
    g: &RegularGraph,
    up: &ResonantState<T>,
    um: &ResonantState<T>,
) -> Result<C<T>, PairingError> {
    Ok(vertex_pairing(g, up, um)? - modified_edge_pairing(g, up, um)?)
}

// Σ_x Σ_{τ(e₋)=x} Σ_{ι(e₊)=x} g(e₋) f(e₊), optionally skipping e₊ = op(e₋).
fn joined_sum<T: Real>(g: &RegularGraph, up: &ResonantState<T>, um: &ResonantState<T>, exclude_backtrack: bool) -> C<T> {
    let (f, h) = (up.edge_values(), um.edge_values());
    let mut total = czero();
    for x in 0..g.n_vertices() {
        for &em in g.in_edges(x) {
            for &ep in g.out_edges(x) {
                if exclude_backtrack && ep == g.op(em) {
                    continue;
                }
                total += h[em] * f[ep];
            }
        }
    }
    total
}

/// Tensor product `u₊ ⊗ u₋` integrated over pairs of chains that join into a
/// bi-infinite non-backtracking path, evaluated on depth-one cylinders.
pub fn geodesic_pairing_direct<T: Real>(
    g: &RegularGraph,
    up: &ResonantState<T>,
    um: &ResonantState<T>,
) -> Result<C<T>, PairingError> {
    check_pair(g, up, um)?;
    Ok(joined_sum(g, up, um, true))
}

/// Tensor product integrated over all pairs of chains meeting at a vertex,
/// backtracking allowed.
pub fn p2_pairing<T: Real>(g: &RegularGraph, up: &ResonantState<T>, um: &ResonantState<T>) -> Result<C<T>, PairingError> {
    check_pair(g, up, um)?;
    Ok(joined_sum(g, up, um, false))
}

/// Normalisation `‖f‖∞ ‖g‖∞ 2m` for pairings of states at distinct
/// resonances.
pub fn orthogonality_scale<T: Real>(g: &RegularGraph, up: &ResonantState<T>, um: &ResonantState<T>) -> T {
    inf_norm(up.edge_values()) * inf_norm(um.edge_values()) * T::from_count(g.n_directed())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_named;
    use crate::spectra::{eigensolve, hashimoto};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C<f64> {
        C::new(re, im)
    }

    fn constant(g: &RegularGraph, o: Orientation, z: f64) -> ResonantState<f64> {
        ResonantState::new(o, c(z, 0.0), vec![c(1.0, 0.0); g.n_directed()]).unwrap()
    }

    #[test]
    fn k4_all_ones() {
        let g = generate_named("complete:4").unwrap();
        let up = constant(&g, Orientation::Plus, 2.0);
        let um = constant(&g, Orientation::Minus, 2.0);
        assert_eq!(vertex_pushforward(&g, &up).unwrap().0, vec![c(3.0, 0.0); 4]);
        assert_eq!(edge_pushforward(&up).0, vec![c(1.0, 0.0); 12]);
        assert_eq!(vertex_pairing(&g, &up, &um).unwrap(), c(36.0, 0.0));
        assert_eq!(edge_pairing(&g, &up, &um).unwrap(), c(12.0, 0.0));
        assert_eq!(modified_edge_pairing(&g, &up, &um).unwrap(), c(12.0, 0.0));
        assert_eq!(geodesic_pairing_formula(&g, &up, &um).unwrap(), c(24.0, 0.0));
        assert_eq!(geodesic_pairing_direct(&g, &up, &um).unwrap(), c(24.0, 0.0));
        assert_eq!(p2_pairing(&g, &up, &um).unwrap(), c(36.0, 0.0));
    }

    #[test]
    fn triangle_pairings() {
        let g = generate_named("cycle:3").unwrap();
        let up = constant(&g, Orientation::Plus, 1.0);
        let um = constant(&g, Orientation::Minus, 1.0);
        assert_eq!(vertex_pushforward(&g, &um).unwrap().0, vec![c(2.0, 0.0); 3]);
        assert_eq!(geodesic_pairing_direct(&g, &up, &um).unwrap(), c(6.0, 0.0));
    }

    #[test]
    fn single_edge_supports() {
        let g = generate_named("complete:4").unwrap();
        let e0 = 4;
        let mut f = vec![c(0.0, 0.0); 12];
        f[e0] = c(2.0, 1.0);
        let mut h = vec![c(0.0, 0.0); 12];
        h[g.op(e0)] = c(-3.0, 0.5);
        let up = ResonantState::new(Orientation::Plus, c(2.0, 0.0), f).unwrap();
        let um = ResonantState::new(Orientation::Minus, c(2.0, 0.0), h).unwrap();
        assert_eq!(edge_pairing(&g, &up, &um).unwrap(), c(0.0, 0.0));
        assert_eq!(modified_edge_pairing(&g, &up, &um).unwrap(), c(2.0, 1.0) * c(-3.0, 0.5));
    }

    #[test]
    fn zero_state_pairs_to_zero() {
        let g = generate_named("complete:4").unwrap();
        let zero = ResonantState::new(Orientation::Plus, c(2.0, 0.0), vec![c(0.0, 0.0); 12]).unwrap();
        let um = constant(&g, Orientation::Minus, 2.0);
        assert_eq!(vertex_pairing(&g, &zero, &um).unwrap(), c(0.0, 0.0));
        assert_eq!(geodesic_pairing_formula(&g, &zero, &um).unwrap(), c(0.0, 0.0));
        assert_eq!(p2_pairing(&g, &zero, &um).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn errors() {
        let g = generate_named("complete:4").unwrap();
        let up = constant(&g, Orientation::Plus, 2.0);
        assert!(matches!(vertex_pairing(&g, &up, &up), Err(PairingError::OrientationMismatch { .. })));
        let p = generate_named("petersen").unwrap();
        let um = constant(&p, Orientation::Minus, 2.0);
        assert!(matches!(vertex_pairing(&g, &up, &um), Err(PairingError::GraphMismatch { .. })));
    }

    #[test]
    fn direct_and_formula_agree_on_eigenpairs() {
        let g = generate_named("petersen").unwrap();
        let spec = eigensolve(&hashimoto::<f64>(&g), 1e-8).unwrap();
        let mut tested = 0;
        for a in &spec {
            for b in &spec {
                for up in a.resonant_states() {
                    for um in b.coresonant_states() {
                        let d = geodesic_pairing_direct(&g, &up, &um).unwrap();
                        let f = geodesic_pairing_formula(&g, &up, &um).unwrap();
                        let v = vertex_pairing(&g, &up, &um).unwrap();
                        let p = p2_pairing(&g, &up, &um).unwrap();
                        let s = orthogonality_scale(&g, &up, &um);
                        assert!((d - f).norm() <= 1e-12 * s);
                        assert!((v - p).norm() <= 1e-12 * s);
                        tested += 1;
                    }
                }
            }
        }
        assert!(tested >= 100);
    }

    fn arb_c() -> impl Strategy<Value = C<f64>> {
        (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b)| C::new(a, b))
    }

    proptest! {
        #[test]
        fn pairings_are_bilinear(f in prop::collection::vec(arb_c(), 12), h in prop::collection::vec(arb_c(), 12), k in arb_c()) {
            let g = generate_named("complete:4").unwrap();
            let up = ResonantState::new(Orientation::Plus, c(2.0, 0.0), f).unwrap();
            let um = ResonantState::new(Orientation::Minus, c(2.0, 0.0), h).unwrap();
            let upk = up.scaled(k);
            let umk = um.scaled(k);
            type P = fn(&RegularGraph, &ResonantState<f64>, &ResonantState<f64>) -> Result<C<f64>, PairingError>;
            let all: [P; 6] = [vertex_pairing, edge_pairing, modified_edge_pairing, geodesic_pairing_formula, geodesic_pairing_direct, p2_pairing];
            for p in all {
                let base = p(&g, &up, &um).unwrap();
                let tol = 1e-12 * (1.0 + base.norm()) * (1.0 + k.norm()) * 100.0;
                prop_assert!((p(&g, &upk, &um).unwrap() - k * base).norm() <= tol);
                prop_assert!((p(&g, &up, &umk).unwrap() - k * base).norm() <= tol);
            }
            // the p2 and direct sums differ exactly by the modified edge pairing
            let diff = p2_pairing(&g, &up, &um).unwrap() - geodesic_pairing_direct(&g, &up, &um).unwrap();
            prop_assert!((diff - modified_edge_pairing(&g, &up, &um).unwrap()).norm() <= 1e-10);
        }
    }
}
