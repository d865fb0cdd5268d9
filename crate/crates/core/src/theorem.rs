//! Verification of the pairing formula
//! `(z² − q) ⟨u₊,u₋⟩_X = (z² − 1) ⟨u₊,u₋⟩_geod` for matched (co)resonant
//! states, of its cutoff decomposition `X = I_c(n) + I_r(n)` at every level
//! `n`, and of the c-function restatement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::graph::RegularGraph;
use crate::pairings::{self, PairingError};
use crate::scalar::{cone, cpowi, creal, czero, Real, C};
use crate::shift::{Orientation, ResonantState};
use crate::spectra::SpectrumEntry;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoremError {
    #[error("resonance must be non-zero")]
    ZeroEigenvalue,
    #[error("c-function has a pole at z^2 = 1")]
    PoleAtZSquaredOne,
    #[error("{orientation} state fails the eigen-recursion: relative residual {residual:e}")]
    EigenResidualTooLarge { orientation: Orientation, residual: f64 },
    #[error("resonant and coresonant states belong to different resonances")]
    ResonanceMismatch,
    #[error(transparent)]
    Pairing(#[from] PairingError),
}

pub const DEFAULT_N_MAX: usize = 12;
pub const DEFAULT_TOL: f64 = 1e-8;
/// Random eigenspace combinations drawn per side for each resonance.
pub const COMBINATIONS_PER_RESONANCE: usize = 5;
/// Inputs whose relative eigen-recursion residual exceeds this are rejected
/// before any pairing is formed.
pub const EIGEN_GATE_TOL: f64 = 1e-6;

fn ratio<T: Real>(z: C<T>, q: usize) -> Result<C<T>, TheoremError> {
    if z == czero() {
        return Err(TheoremError::ZeroEigenvalue);
    }
    Ok(creal::<T>(T::from_count(q)) / (z * z))
}

/// `(1 − z⁻²) Σ_{j<n} (q/z²)^j + (q/z²)^n`.
pub fn b_integral_closed_form<T: Real>(z: C<T>, q: usize, n: usize) -> Result<C<T>, TheoremError> {
    let r = ratio(z, q)?;
    let mut sum = czero::<T>();
    let mut power = cone::<T>();
    for _ in 0..n {
        sum += power;
        power *= r;
    }
    Ok((cone::<T>() - cone::<T>() / (z * z)) * sum + power)
}

/// `(z² − 1)/(z² − q)`, the `n → ∞` limit of [`b_integral_closed_form`]
/// when `|z| > √q`.
pub fn b_integral_limit<T: Real>(z: C<T>, q: usize) -> C<T> {
    let z2 = z * z;
    (z2 - cone::<T>()) / (z2 - creal::<T>(T::from_count(q)))
}

/// Cutoff part `I_c(n) = geod · b(z, q, n)`.
pub fn ic_gamma<T: Real>(geod: C<T>, z: C<T>, q: usize, n: usize) -> Result<C<T>, TheoremError> {
    Ok(geod * b_integral_closed_form(z, q, n)?)
}

/// Remainder part `I_r(n) = (q/z²)^n · opE`.
pub fn ir_gamma<T: Real>(op_edge: C<T>, z: C<T>, q: usize, n: usize) -> Result<C<T>, TheoremError> {
    Ok(cpowi(ratio(z, q)?, n as i64) * op_edge)
}

/// `c(z) = (q+1)⁻¹ (z⁻² − q)/(z⁻² − 1)`.
pub fn c_function<T: Real>(z: C<T>, q: usize) -> Result<C<T>, TheoremError> {
    if z == czero() {
        return Err(TheoremError::ZeroEigenvalue);
    }
    let w = cone::<T>() / (z * z);
    let den = w - cone::<T>();
    if den.norm() <= T::lit(16.0) * T::epsilon() {
        return Err(TheoremError::PoleAtZSquaredOne);
    }
    let qq = creal::<T>(T::from_count(q));
    Ok((w - qq) / den / creal(T::from_count(q + 1)))
}

/// Residual normalisation `(1 + |z|²)(q + 1) max(|X|, |geod|, 1)`.
pub fn theorem_scale<T: Real>(z: C<T>, q: usize, vertex: C<T>, geod: C<T>) -> T {
    (T::one() + z.norm_sqr()) * T::from_count(q + 1) * vertex.norm().max(geod.norm()).max(T::one())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Generic,
    /// `z² ≈ q`; the formula forces the geodesic pairing to vanish.
    ZSquaredEqualsQ,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionRow<T> {
    pub n: usize,
    pub ic: C<T>,
    pub ir: C<T>,
    /// `|X − (I_c + I_r)| / scale`.
    pub sum_residual: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremReport<T> {
    pub z: C<T>,
    pub q: usize,
    pub vertex_pairing: C<T>,
    pub geodesic_pairing: C<T>,
    pub modified_edge_pairing: C<T>,
    pub scale: T,
    /// `|(z² − q) X − (z² − 1) geod| / scale`, or `|geod| / scale` on the
    /// `z² ≈ q` branch.
    pub theorem_residual: T,
    pub branch: Branch,
    pub decomposition_rows: Vec<DecompositionRow<T>>,
    /// `|(q+1) c(1/z) X − geod| / scale`; `None` when `z² ≈ 1`.
    pub c_function_residual: Option<T>,
    pub tol: T,
}

impl<T: Real> TheoremReport<T> {
    pub fn max_decomposition_residual(&self) -> T {
        self.decomposition_rows.iter().map(|r| r.sum_residual).fold(T::zero(), T::max)
    }

    pub fn theorem_pass(&self) -> bool {
        self.theorem_residual <= self.tol
    }

    pub fn decomposition_pass(&self) -> bool {
        self.max_decomposition_residual() <= self.tol
    }

    pub fn c_function_pass(&self) -> bool {
        self.c_function_residual.is_none_or(|r| r <= self.tol)
    }

    pub fn pass(&self) -> bool {
        self.theorem_pass() && self.decomposition_pass() && self.c_function_pass()
    }
}

/// Evaluates the pairings of a matched eigen-pair and checks the pairing
/// formula, the decomposition rows `n = 0..=n_max`, and the c-function form.
/// Pass/fail in the report uses `tol`; the inputs must already satisfy the
/// eigen-recursion to [`EIGEN_GATE_TOL`].
pub fn verify_theorem<T: Real>(
    g: &RegularGraph,
    up: &ResonantState<T>,
    um: &ResonantState<T>,
    n_max: usize,
    tol: T,
) -> Result<TheoremReport<T>, TheoremError> {
    let z = up.z();
    if z == czero() {
        return Err(TheoremError::ZeroEigenvalue);
    }
    if (um.z() - z).norm() > tol * (T::one() + z.norm()) {
        return Err(TheoremError::ResonanceMismatch);
    }
    for u in [up, um] {
        let r = u.eigen_residual(g);
        if !(r <= T::lit(EIGEN_GATE_TOL)) {
            return Err(TheoremError::EigenResidualTooLarge {
                orientation: u.orientation(),
                residual: r.as_f64(),
            });
        }
    }
    let q = g.q();
    let x = pairings::vertex_pairing(g, up, um)?;
    let op_e = pairings::modified_edge_pairing(g, up, um)?;
    let geod = pairings::geodesic_pairing_formula(g, up, um)?;
    let scale = theorem_scale(z, q, x, geod);
    let qq = creal::<T>(T::from_count(q));
    let z2 = z * z;

    // For q = 1 both factors vanish together and nothing is asserted.
    let (branch, theorem_residual) = if q > 1 && (z2 - qq).norm() <= tol * T::from_count(q) {
        (Branch::ZSquaredEqualsQ, geod.norm() / scale)
    } else {
        let lhs = (z2 - qq) * x;
        let rhs = (z2 - cone::<T>()) * geod;
        (Branch::Generic, (lhs - rhs).norm() / scale)
    };

    let mut rows = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let ic = ic_gamma(geod, z, q, n)?;
        let ir = ir_gamma(op_e, z, q, n)?;
        rows.push(DecompositionRow {
            n,
            ic,
            ir,
            sum_residual: (x - ic - ir).norm() / scale,
        });
    }

    let c_function_residual = match c_function(cone::<T>() / z, q) {
        Ok(c) if (z2 - cone::<T>()).norm() > tol => {
            Some((creal::<T>(T::from_count(q + 1)) * c * x - geod).norm() / scale)
        }
        _ => None,
    };

    Ok(TheoremReport {
        z,
        q,
        vertex_pairing: x,
        geodesic_pairing: geod,
        modified_edge_pairing: op_e,
        scale,
        theorem_residual,
        branch,
        decomposition_rows: rows,
        c_function_residual,
        tol,
    })
}

fn combine<T: Real>(basis: &[Vec<C<T>>], rng: &mut ChaCha8Rng) -> Vec<C<T>> {
    let dim = basis.first().map_or(0, |v| v.len());
    let mut out = vec![czero::<T>(); dim];
    for v in basis {
        let a = C::new(T::lit(rng.gen_range(-1.0..1.0)), T::lit(rng.gen_range(-1.0..1.0)));
        for (o, x) in out.iter_mut().zip(v) {
            *o += a * *x;
        }
    }
    out
}

/// `count` seeded random pairs (resonant, coresonant) of linear combinations
/// of the right and left eigenspace bases of one spectrum entry.
pub fn sample_eigen_pairs<T: Real>(
    entry: &SpectrumEntry<T>,
    count: usize,
    seed: u64,
) -> Vec<(ResonantState<T>, ResonantState<T>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .filter_map(|_| {
            let f = combine(&entry.right_basis, &mut rng);
            let h = combine(&entry.left_basis, &mut rng);
            let up = ResonantState::new(Orientation::Plus, entry.z, f).ok()?;
            let um = ResonantState::new(Orientation::Minus, entry.z, h).ok()?;
            Some((up, um))
        })
        .collect()
}
