//! Spectrum of the non-backtracking (Hashimoto) matrix and the Ihara–Bass
//! determinant identity used to cross-check it.
//!
//! Eigenvalues come from Hessenberg + shifted QR. Eigenspaces are then
//! extracted per eigenvalue cluster as numerical null spaces of `S − zI` and
//! `Sᵀ − zI`, computed independently by Jacobi SVD.

use thiserror::Error;

use crate::graph::RegularGraph;
use crate::linalg::{jacobi_svd, qrcp_null_space, CMatrix, LinalgError};
use crate::scalar::{cone, creal, czero, inf_norm, Real, C};
use crate::shift::{Orientation, ResonantState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("{0} is not a resonance within tolerance")]
    NotAResonance(String),
}

/// Default relative clustering tolerance for eigenvalues.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;

/// Relative singular-value threshold below which a direction counts as null.
pub const NULL_SPACE_TOL: f64 = 1e-6;

/// Smallest admissible singular value of the (normalised) left–right Gram
/// matrix of a cluster before it is flagged defective.
pub const GRAM_SINGULAR_TOL: f64 = 1e-6;

/// Dense `2m × 2m` 0/1 matrix of the successor relation, `S[e][e'] = 1` iff
/// `e'` is a non-backtracking continuation of `e`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonBacktrackingMatrix<T> {
    matrix: CMatrix<T>,
}

impl<T: Real> NonBacktrackingMatrix<T> {
    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

pub fn hashimoto<T: Real>(g: &RegularGraph) -> NonBacktrackingMatrix<T> {
    let mut m = CMatrix::zeros(g.n_directed());
    for e in 0..g.n_directed() {
        for &f in g.successors(e) {
            m[(e, f)] = cone();
        }
    }
    NonBacktrackingMatrix { matrix: m }
}

/// One eigenvalue cluster with its right and left eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEntry<T> {
    /// Cluster mean.
    pub z: C<T>,
    /// Algebraic multiplicity (cluster size).
    pub multiplicity: usize,
    /// `S v = z v`, each normalised so the largest component is `1`.
    pub right_basis: Vec<Vec<C<T>>>,
    /// `Sᵀ w = z w`, bi-orthogonal to `right_basis` (`Wᵀ V` diagonal).
    pub left_basis: Vec<Vec<C<T>>>,
    /// `max ‖S v − z v‖∞ / ‖v‖∞` over both bases.
    pub residual: T,
    /// Geometric multiplicity below algebraic, or singular left–right Gram
    /// matrix. Such clusters carry no usable eigendistribution pairing.
    pub defect_flag: bool,
}

impl<T: Real> SpectrumEntry<T> {
    pub fn resonant_states(&self) -> Vec<ResonantState<T>> {
        self.right_basis
            .iter()
            .filter_map(|v| ResonantState::new(Orientation::Plus, self.z, v.clone()).ok())
            .collect()
    }

    pub fn coresonant_states(&self) -> Vec<ResonantState<T>> {
        self.left_basis
            .iter()
            .filter_map(|v| ResonantState::new(Orientation::Minus, self.z, v.clone()).ok())
            .collect()
    }
}

/// Full spectrum, clustered and ordered by `(Re, Im)`.
pub fn eigensolve<T: Real>(
    m: &NonBacktrackingMatrix<T>,
    tol_cluster: T,
) -> Result<Vec<SpectrumEntry<T>>, SpectralError> {
    let values = m.matrix.eigenvalues()?;
    let norm = m.matrix.norm_inf().max(T::one());
    let clusters = cluster(values, tol_cluster * norm);
    let transposed = m.matrix.transpose();
    Ok(clusters
        .into_iter()
        .map(|(z, k)| eigen_entry(&m.matrix, &transposed, z, k))
        .collect())
}

/// Sorts by `(Re, Im)` and groups values closer than `gap` (single linkage
/// along the sorted order). Returns `(mean, size)` per cluster.
fn cluster<T: Real>(mut values: Vec<C<T>>, gap: T) -> Vec<(C<T>, usize)> {
    let cmp = |a: &C<T>, b: &C<T>| {
        if (a.re - b.re).abs() <= gap {
            a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal)
        } else {
            a.re.partial_cmp(&b.re).unwrap_or(std::cmp::Ordering::Equal)
        }
    };
    values.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap_or(std::cmp::Ordering::Equal));
    let mut groups: Vec<Vec<C<T>>> = Vec::new();
    let mut used = vec![false; values.len()];
    for i in 0..values.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut group = vec![values[i]];
        let mut grew = true;
        while grew {
            grew = false;
            for j in 0..values.len() {
                if !used[j] && group.iter().any(|g| (*g - values[j]).norm() <= gap) {
                    used[j] = true;
                    group.push(values[j]);
                    grew = true;
                }
            }
        }
        groups.push(group);
    }
    let mut out: Vec<(C<T>, usize)> = groups
        .into_iter()
        .map(|g| {
            let k = g.len();
            let sum = g.into_iter().fold(czero::<T>(), |a, b| a + b);
            (sum / creal(T::from_count(k)), k)
        })
        .collect();
    out.sort_by(|a, b| cmp(&a.0, &b.0));
    out
}

fn null_space<T: Real>(m: &CMatrix<T>, z: C<T>, k: usize) -> (Vec<Vec<C<T>>>, usize) {
    let b = m.shifted(z);
    let scale = b.norm_inf().max(T::one());
    let basis = qrcp_null_space(&b, k);
    let geometric = basis
        .diagonal
        .iter()
        .rev()
        .take_while(|d| **d <= T::lit(NULL_SPACE_TOL) * scale)
        .count();
    let vecs = basis.vectors;
    (vecs, geometric)
}

fn residual<T: Real>(m: &CMatrix<T>, z: C<T>, v: &[C<T>]) -> T {
    let sv = m.mul_vec(v);
    let r: Vec<C<T>> = sv.iter().zip(v).map(|(a, b)| *a - z * *b).collect();
    inf_norm(&r) / inf_norm(v).max(T::min_positive_value())
}

/// Scales so the first component of (numerically) maximal modulus is `1`.
pub fn normalize_max<T: Real>(v: &mut [C<T>]) {
    let max = inf_norm(v);
    if max == T::zero() {
        return;
    }
    let pivot = v
        .iter()
        .copied()
        .find(|x| x.norm() >= max * (T::one() - T::lit(1e-10)))
        .expect("max exists");
    for x in v.iter_mut() {
        *x /= pivot;
    }
}

fn bilinear<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    a.iter().zip(b).fold(czero(), |acc, (x, y)| acc + *x * *y)
}

/// Solves `A x = b` for small dense `A` (Gaussian elimination, partial
/// pivoting). `None` if singular.
fn solve_small<T: Real>(a: &CMatrix<T>, b: &[C<T>]) -> Option<Vec<C<T>>> {
    let n = a.dim();
    let mut m: Vec<Vec<C<T>>> = (0..n)
        .map(|i| {
            let mut r = a.row(i).to_vec();
            r.push(b[i]);
            r
        })
        .collect();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i][k].norm().partial_cmp(&m[j][k].norm()).unwrap())?;
        if m[p][k].norm() == T::zero() {
            return None;
        }
        m.swap(k, p);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..=n {
                let t = m[k][j];
                m[i][j] -= f * t;
            }
        }
    }
    let mut x = vec![czero(); n];
    for i in (0..n).rev() {
        let s = (i + 1..n).fold(m[i][n], |acc, j| acc - m[i][j] * x[j]);
        x[i] = s / m[i][i];
    }
    Some(x)
}

fn eigen_entry<T: Real>(s: &CMatrix<T>, st: &CMatrix<T>, z: C<T>, k: usize) -> SpectrumEntry<T> {
    let (mut right, geo_r) = null_space(s, z, k);
    let (mut left, geo_l) = null_space(st, z, k);

    // Gram matrix G[i][j] = w_i · v_j (bilinear), normalised by vector norms.
    let gram = CMatrix::from_fn(k, |i, j| bilinear(&left[i], &right[j]));
    let gram_svd = jacobi_svd(&gram);
    let smallest = gram_svd.singular_values.first().copied().unwrap_or(T::zero());
    let mut defect = geo_r < k || geo_l < k || smallest < T::lit(GRAM_SINGULAR_TOL);

    if !defect && k > 1 {
        // W <- W G^{-T}, so that Wᵀ V = I.
        let mut new_left = vec![vec![czero(); s.dim()]; k];
        for e in 0..s.dim() {
            let rhs: Vec<C<T>> = (0..k).map(|i| left[i][e]).collect();
            // row e of W G^{-T} solves G y = (row e of W)
            match solve_small(&gram, &rhs) {
                Some(y) => {
                    for i in 0..k {
                        new_left[i][e] = y[i];
                    }
                }
                None => {
                    defect = true;
                    break;
                }
            }
        }
        if !defect {
            left = new_left;
        }
    }
    for v in right.iter_mut().chain(left.iter_mut()) {
        normalize_max(v);
    }
    let res = right
        .iter()
        .map(|v| residual(s, z, v))
        .chain(left.iter().map(|w| residual(st, z, w)))
        .fold(T::zero(), T::max);
    SpectrumEntry {
        z,
        multiplicity: k,
        right_basis: right,
        left_basis: left,
        residual: res,
        defect_flag: defect,
    }
}

/// Resonances with multiplicity, i.e. the eigenvalues of the Hashimoto
/// matrix.
pub fn resonances<T: Real>(g: &RegularGraph) -> Result<Vec<C<T>>, SpectralError> {
    let spectrum = eigensolve(&hashimoto::<T>(g), T::lit(DEFAULT_CLUSTER_TOL))?;
    Ok(spectrum
        .iter()
        .flat_map(|e| std::iter::repeat_n(e.z, e.multiplicity))
        .collect())
}

/// Right and left eigenspaces at the computed resonance nearest to `z`.
pub fn eigenspace<T: Real>(
    g: &RegularGraph,
    z: C<T>,
    tol: T,
) -> Result<(Vec<Vec<C<T>>>, Vec<Vec<C<T>>>), SpectralError> {
    let m = hashimoto::<T>(g);
    let spectrum = eigensolve(&m, T::lit(DEFAULT_CLUSTER_TOL))?;
    let scale = m.matrix.norm_inf().max(T::one());
    spectrum
        .into_iter()
        .find(|e| (e.z - z).norm() <= tol * scale)
        .map(|e| (e.right_basis, e.left_basis))
        .ok_or_else(|| SpectralError::NotAResonance(format!("{z}")))
}

/// Both sides of the Ihara–Bass identity
/// `det(I − uS) = (1 − u²)^{m−n} det(I − uA + q u² I)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BassCheck<T> {
    pub u: C<T>,
    pub edge_side: C<T>,
    pub vertex_side: C<T>,
    /// `|edge_side − vertex_side|`.
    pub residual: T,
    /// `residual / max(|edge_side|, |vertex_side|, 1)`.
    pub relative: T,
}

pub fn bass_check<T: Real>(g: &RegularGraph, u: C<T>) -> BassCheck<T> {
    let s = hashimoto::<T>(g);
    let n2 = s.dim();
    let lhs = CMatrix::from_fn(n2, |i, j| {
        let id: C<T> = if i == j { cone() } else { czero() };
        id - u * s.matrix[(i, j)]
    })
    .determinant();

    let adj = g.adjacency();
    let n = g.n_vertices();
    let qu2 = u * u * creal(T::from_count(g.q()));
    let vertex = CMatrix::from_fn(n, |i, j| {
        let id = if i == j { cone::<T>() + qu2 } else { czero() };
        id - u * creal(T::from_count(adj[i][j] as usize))
    })
    .determinant();
    let excess = g.n_undirected() as i64 - n as i64;
    let factor = crate::scalar::cpowi(cone::<T>() - u * u, excess);
    let rhs = factor * vertex;
    let residual: T = (lhs - rhs).norm();
    let denom = lhs.norm().max(rhs.norm()).max(T::one());
    BassCheck {
        u,
        edge_side: lhs,
        vertex_side: rhs,
        residual,
        relative: residual / denom,
    }
}
