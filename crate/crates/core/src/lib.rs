//! Resonances of the non-backtracking transfer operator on finite regular
//! graphs, the pairings of resonant with coresonant states, and numerical
//! verification of the identity
//!
//! ```text
//! (z² − q) ⟨u₊, u₋⟩_vertex = (z² − 1) ⟨u₊, u₋⟩_geodesic
//! ```
//!
//! together with its finite-level decomposition and a truncated universal
//! cover carrying horocycle brackets, Poisson kernels and boundary measures.
//!
//! Numerical code is generic over [`Real`]; the aliases below fix `f64`,
//! which is what the command-line tool and the tolerances are tuned for.

pub mod cover;
pub mod graph;
pub mod linalg;
pub mod pairings;
pub mod report;
pub mod scalar;
pub mod shift;
pub mod spectra;
pub mod theorem;

pub use graph::{generate_named, generate_random_regular, GraphError, NamedGraph, RegularGraph};
pub use scalar::{Real, C};
pub use shift::{Cylinder, Orientation};

pub type Complex64 = C<f64>;
pub type ResonantState64 = shift::ResonantState<f64>;
pub type CylinderFunction64 = shift::CylinderFunction<f64>;
pub type SpectrumEntry64 = spectra::SpectrumEntry<f64>;
pub type ResonantState32 = shift::ResonantState<f32>;
pub type SpectrumEntry32 = spectra::SpectrumEntry<f32>;
pub type TheoremReport64 = theorem::TheoremReport<f64>;
