//! End-to-end analysis of one graph and the machine-readable report.
//!
//! Everything here is `f64`. The JSON writer prints every float with 17
//! significant digits so identical runs give byte-identical output.

use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cover::{CoverError, TruncatedCover};
use crate::graph::{generate_named, generate_random_regular, GraphError, RegularGraph, DEFAULT_GENERATION_BUDGET};
use crate::pairings::{self, PairingError};
use crate::scalar::{inf_norm, C};
use crate::shift::{check_resonant, ResonantState, ShiftError};
use crate::spectra::{bass_check, eigensolve, hashimoto, BassCheck, SpectralError, SpectrumEntry};
use crate::theorem::{self, Branch, TheoremError, TheoremReport};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Theorem(#[from] TheoremError),
    #[error(transparent)]
    Pairing(#[from] PairingError),
    #[error(transparent)]
    Shift(#[from] ShiftError),
    #[error(transparent)]
    Cover(#[from] CoverError),
}

/// Knobs of an analysis run; echoed verbatim in the report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisConfig {
    /// Pairing formula, decomposition, c-function, orthogonality, spectrum
    /// and Bass checks.
    pub tol: f64,
    /// Direct-vs-formula and `p2`-vs-vertex agreement.
    pub oracle_tol: f64,
    /// Cylinder-level eigen-check.
    pub cylinder_tol: f64,
    /// Poisson factorisation, round trip, lift consistency, additivity,
    /// truncation stability and deck invariance.
    pub cover_tol: f64,
    pub adjacency_tol: f64,
    pub tol_cluster: f64,
    pub n_max: usize,
    pub seed: u64,
    /// `0` skips the cover checks.
    pub depth: usize,
    pub combinations: usize,
    pub cylinder_depth: usize,
    pub bass_samples: usize,
    pub automorphism_draws: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            tol: theorem::DEFAULT_TOL,
            oracle_tol: 1e-10,
            cylinder_tol: 1e-9,
            cover_tol: 1e-10,
            adjacency_tol: 1e-9,
            tol_cluster: crate::spectra::DEFAULT_CLUSTER_TOL,
            n_max: theorem::DEFAULT_N_MAX,
            seed: 0,
            depth: 0,
            combinations: theorem::COMBINATIONS_PER_RESONANCE,
            cylinder_depth: 4,
            bass_samples: 20,
            automorphism_draws: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cx {
    pub re: f64,
    pub im: f64,
}

impl From<C<f64>> for Cx {
    fn from(z: C<f64>) -> Self {
        Cx { re: z.re, im: z.im }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphSummary {
    pub n: usize,
    pub m: usize,
    pub q: usize,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResonanceRow {
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
    pub eigen_residual: f64,
    pub defect_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionEntry {
    pub n: usize,
    pub ic: Cx,
    pub ir: Cx,
    pub sum_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremRow {
    pub resonance: usize,
    pub sample: usize,
    pub z: Cx,
    pub branch: Branch,
    pub vertex_pairing: Cx,
    pub geodesic_pairing: Cx,
    pub modified_edge_pairing: Cx,
    pub scale: f64,
    pub theorem_residual: f64,
    pub decomposition_max: f64,
    pub c_function_residual: Option<f64>,
    pub pass: bool,
    pub decomposition: Vec<DecompositionEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSection {
    pub bass_residual_max: f64,
    pub direct_vs_formula_geodesic_max: f64,
    pub p2_vs_vertex_max: f64,
    pub orthogonality_max: f64,
    pub cylinder_check_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverSection {
    pub depth: usize,
    pub poisson_factorization_max: f64,
    pub round_trip_max: f64,
    pub adjacency_relation_max: f64,
    pub lift_consistency_max: f64,
    pub additivity_max: f64,
    pub truncation_stability_max: f64,
    pub deck_invariance_max: f64,
    pub horocycle_invariance_max: f64,
    pub unique_path_mismatches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassFlags {
    pub spectrum: bool,
    pub bass: bool,
    pub theorem: bool,
    pub decomposition: bool,
    pub c_function: bool,
    pub oracles: bool,
    pub orthogonality: bool,
    pub cylinder: bool,
    pub cover: Option<bool>,
    pub all: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub graph: GraphSummary,
    pub resonances: Vec<ResonanceRow>,
    pub theorems: Vec<TheoremRow>,
    pub oracles: OracleSection,
    pub cover: Option<CoverSection>,
    pub config: AnalysisConfig,
    pub pass: PassFlags,
}

fn rel_dev(a: C<f64>, b: C<f64>, scale: f64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(scale).max(f64::MIN_POSITIVE)
}

/// A resonance whose eigenspaces enter the pairing checks.
fn usable(e: &SpectrumEntry<f64>) -> bool {
    !e.defect_flag && e.z.norm() > 0.0
}

/// Deterministic seed for the combinations drawn at resonance `index`.
pub fn sample_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64)
}

/// Seeded `u` values for the Bass oracle: `0` first, then points of the open
/// unit disc.
pub fn bass_samples(count: usize, seed: u64) -> Vec<C<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            if i == 0 {
                C::new(0.0, 0.0)
            } else {
                C::from_polar(rng.gen_range(0.0..0.95), rng.gen_range(0.0..std::f64::consts::TAU))
            }
        })
        .collect()
}

pub fn zeta_table(g: &RegularGraph, samples: usize, seed: u64) -> Vec<BassCheck<f64>> {
    bass_samples(samples, seed).into_iter().map(|u| bass_check(g, u)).collect()
}

/// Runs spectra, pairings, the pairing formula and, when `config.depth > 0`,
/// the cover checks on `g`.
pub fn analyze(g: &RegularGraph, source: &str, config: &AnalysisConfig) -> Result<AnalysisReport, AnalysisError> {
    let spectrum = eigensolve(&hashimoto::<f64>(g), config.tol_cluster)?;
    analyze_with_spectrum(g, source, config, &spectrum)
}

/// As [`analyze`], reusing an already computed spectrum.
pub fn analyze_with_spectrum(
    g: &RegularGraph,
    source: &str,
    config: &AnalysisConfig,
    spectrum: &[SpectrumEntry<f64>],
) -> Result<AnalysisReport, AnalysisError> {
    let resonances: Vec<ResonanceRow> = spectrum
        .iter()
        .map(|e| ResonanceRow {
            re: e.z.re,
            im: e.z.im,
            multiplicity: e.multiplicity,
            eigen_residual: e.residual,
            defect_flag: e.defect_flag,
        })
        .collect();

    let samples: Vec<(usize, Vec<(ResonantState<f64>, ResonantState<f64>)>)> = spectrum
        .iter()
        .enumerate()
        .filter(|(_, e)| usable(e))
        .map(|(i, e)| (i, theorem::sample_eigen_pairs(e, config.combinations, sample_seed(config.seed, i))))
        .collect();

    let per_resonance: Vec<Result<ResonanceChecks, AnalysisError>> = samples
        .par_iter()
        .map(|(i, pairs)| resonance_checks(g, *i, pairs, config))
        .collect();
    let mut theorems = Vec::new();
    let mut direct_max = 0.0f64;
    let mut p2_max = 0.0f64;
    let mut cylinder_max = 0.0f64;
    for r in per_resonance {
        let r = r?;
        theorems.extend(r.rows);
        direct_max = direct_max.max(r.direct);
        p2_max = p2_max.max(r.p2);
        cylinder_max = cylinder_max.max(r.cylinder);
    }

    let orthogonality_max = orthogonality(g, spectrum, &samples, config)?;
    let bass_residual_max = zeta_table(g, config.bass_samples, config.seed)
        .iter()
        .map(|b| b.relative)
        .fold(0.0, f64::max);

    let cover = if config.depth > 0 {
        Some(cover_checks(g, &samples, config)?)
    } else {
        None
    };

    let tol = config.tol;
    let spectrum_pass = resonances
        .iter()
        .filter(|r| !r.defect_flag)
        .all(|r| r.eigen_residual <= tol);
    let theorem_pass = theorems.iter().all(|t| t.theorem_residual <= tol);
    let decomposition_pass = theorems.iter().all(|t| t.decomposition_max <= tol);
    let c_function_pass = theorems.iter().all(|t| t.c_function_residual.is_none_or(|r| r <= tol));
    let oracles_pass = direct_max <= config.oracle_tol && p2_max <= config.oracle_tol;
    let cover_pass = cover.as_ref().map(|c| {
        let t = config.cover_tol;
        c.poisson_factorization_max <= t
            && c.round_trip_max <= t
            && c.lift_consistency_max <= t
            && c.additivity_max <= t
            && c.truncation_stability_max <= t
            && c.deck_invariance_max <= t
            && c.adjacency_relation_max <= config.adjacency_tol
            && c.horocycle_invariance_max == 0.0
            && c.unique_path_mismatches == 0
    });
    let mut pass = PassFlags {
        spectrum: spectrum_pass,
        bass: bass_residual_max <= tol,
        theorem: theorem_pass,
        decomposition: decomposition_pass,
        c_function: c_function_pass,
        oracles: oracles_pass,
        orthogonality: orthogonality_max <= tol,
        cylinder: cylinder_max <= config.cylinder_tol,
        cover: cover_pass,
        all: false,
    };
    pass.all = pass.spectrum
        && pass.bass
        && pass.theorem
        && pass.decomposition
        && pass.c_function
        && pass.oracles
        && pass.orthogonality
        && pass.cylinder
        && pass.cover.unwrap_or(true);

    Ok(AnalysisReport {
        graph: GraphSummary {
            n: g.n_vertices(),
            m: g.n_undirected(),
            q: g.q(),
            source: source.to_string(),
        },
        resonances,
        theorems,
        oracles: OracleSection {
            bass_residual_max,
            direct_vs_formula_geodesic_max: direct_max,
            p2_vs_vertex_max: p2_max,
            orthogonality_max,
            cylinder_check_max: cylinder_max,
        },
        cover,
        config: config.clone(),
        pass,
    })
}

struct ResonanceChecks {
    rows: Vec<TheoremRow>,
    direct: f64,
    p2: f64,
    cylinder: f64,
}

fn theorem_row(index: usize, sample: usize, r: &TheoremReport<f64>) -> TheoremRow {
    TheoremRow {
        resonance: index,
        sample,
        z: r.z.into(),
        branch: r.branch,
        vertex_pairing: r.vertex_pairing.into(),
        geodesic_pairing: r.geodesic_pairing.into(),
        modified_edge_pairing: r.modified_edge_pairing.into(),
        scale: r.scale,
        theorem_residual: r.theorem_residual,
        decomposition_max: r.max_decomposition_residual(),
        c_function_residual: r.c_function_residual,
        pass: r.pass(),
        decomposition: r
            .decomposition_rows
            .iter()
            .map(|d| DecompositionEntry {
                n: d.n,
                ic: d.ic.into(),
                ir: d.ir.into(),
                sum_residual: d.sum_residual,
            })
            .collect(),
    }
}

fn resonance_checks(
    g: &RegularGraph,
    index: usize,
    pairs: &[(ResonantState<f64>, ResonantState<f64>)],
    config: &AnalysisConfig,
) -> Result<ResonanceChecks, AnalysisError> {
    let mut out = ResonanceChecks {
        rows: Vec::with_capacity(pairs.len()),
        direct: 0.0,
        p2: 0.0,
        cylinder: 0.0,
    };
    for (k, (up, um)) in pairs.iter().enumerate() {
        let r = theorem::verify_theorem(g, up, um, config.n_max, config.tol)?;
        out.rows.push(theorem_row(index, k, &r));
        let s = pairings::orthogonality_scale(g, up, um);
        let direct = pairings::geodesic_pairing_direct(g, up, um)?;
        out.direct = out.direct.max(rel_dev(direct, r.geodesic_pairing, s));
        let p2 = pairings::p2_pairing(g, up, um)?;
        out.p2 = out.p2.max(rel_dev(p2, r.vertex_pairing, s));
        for u in [up, um] {
            let c = check_resonant(g, u, config.cylinder_depth, config.cylinder_tol)?;
            out.cylinder = out.cylinder.max(c.relative_residual);
        }
    }
    Ok(out)
}

/// `max |geod(u₊(z₁), u₋(z₂))| / (‖f‖∞ ‖g‖∞ 2m)` over resonances
/// `z₁ ≠ z₂` more than `10·tol_cluster` apart.
fn orthogonality(
    g: &RegularGraph,
    spectrum: &[SpectrumEntry<f64>],
    samples: &[(usize, Vec<(ResonantState<f64>, ResonantState<f64>)>)],
    config: &AnalysisConfig,
) -> Result<f64, AnalysisError> {
    let firsts: Vec<(usize, &ResonantState<f64>, &ResonantState<f64>)> = samples
        .iter()
        .filter_map(|(i, p)| p.first().map(|(a, b)| (*i, a, b)))
        .collect();
    let mut worst = 0.0f64;
    for &(i, up, _) in &firsts {
        for &(j, _, um) in &firsts {
            if (spectrum[i].z - spectrum[j].z).norm() <= 10.0 * config.tol_cluster {
                continue;
            }
            let geod = pairings::geodesic_pairing_formula(g, up, um)?;
            worst = worst.max(geod.norm() / pairings::orthogonality_scale(g, up, um));
        }
    }
    Ok(worst)
}

fn cover_checks(
    g: &RegularGraph,
    samples: &[(usize, Vec<(ResonantState<f64>, ResonantState<f64>)>)],
    config: &AnalysisConfig,
) -> Result<CoverSection, AnalysisError> {
    let t = TruncatedCover::unfold(g, 0, config.depth)?;
    let t_next = TruncatedCover::unfold(g, 0, config.depth + 1)?;
    let q = g.q() as f64;
    let mut sec = CoverSection {
        depth: config.depth,
        poisson_factorization_max: 0.0,
        round_trip_max: 0.0,
        adjacency_relation_max: 0.0,
        lift_consistency_max: 0.0,
        additivity_max: 0.0,
        truncation_stability_max: 0.0,
        deck_invariance_max: 0.0,
        horocycle_invariance_max: 0.0,
        unique_path_mismatches: 0,
    };
    let deck_targets: Vec<usize> = (1..t.n_nodes())
        .filter(|&x| t.project_node(x) == t.project_node(0) && t.node_depth(x) + 2 <= config.depth)
        .take(4)
        .collect();
    let decks = deck_targets
        .iter()
        .map(|&x| t.deck_transform(x))
        .collect::<Result<Vec<_>, _>>()?;

    for (_, pairs) in samples {
        let Some((u, _)) = pairs.first() else { continue };
        let z = u.z();
        let fnorm = inf_norm(u.edge_values()).max(f64::MIN_POSITIVE);
        let mu = t.measure_from_state(u)?;
        sec.additivity_max = sec.additivity_max.max(t.additivity_residual(u, &mu));
        let p = t.poisson_transform(z, &mu)?;
        let pe = t.edge_poisson_transform(z, &mu)?;
        let lifted = t.lift_state(u)?;
        let push = pairings::vertex_pushforward(g, u)?;
        let pscale = inf_norm(&p.0).max(fnorm);
        for x in 0..t.n_interior() {
            let out = t.out_tree_edges(x);
            let split = out.iter().fold(C::new(0.0, 0.0), |a, &e| a + pe.0[e]);
            sec.poisson_factorization_max = sec.poisson_factorization_max.max((p.0[x] - split).norm() / pscale);
            let lift_sum = out.iter().fold(C::new(0.0, 0.0), |a, &e| a + lifted.0[e]);
            sec.lift_consistency_max = sec
                .lift_consistency_max
                .max((push.0[t.project_node(x)] - lift_sum).norm() / ((q + 1.0) * fnorm));
            for &e in &out {
                sec.round_trip_max = sec.round_trip_max.max((pe.0[e] - lifted.0[e]).norm() / fnorm);
            }
        }
        sec.adjacency_relation_max = sec.adjacency_relation_max.max(t.adjacency_residual(z, &p, (q + 1.0) * fnorm));

        let mu2 = t_next.measure_from_state(u)?;
        let p2 = t_next.poisson_transform(z, &mu2)?;
        let pe2 = t_next.edge_poisson_transform(z, &mu2)?;
        for x in 0..t.n_interior() {
            sec.truncation_stability_max = sec.truncation_stability_max.max((p.0[x] - p2.0[x]).norm() / pscale);
            for e in t.out_tree_edges(x) {
                sec.truncation_stability_max = sec.truncation_stability_max.max((pe.0[e] - pe2.0[e]).norm() / fnorm);
            }
        }

        for d in &decks {
            for e in 0..t.n_tree_edges() {
                if let Some(e2) = d.apply_edge(&t, e) {
                    sec.deck_invariance_max = sec.deck_invariance_max.max((lifted.0[e2] - lifted.0[e]).norm() / fnorm);
                }
            }
        }
    }

    sec.horocycle_invariance_max = horocycle_invariance(&t, config.automorphism_draws, config.seed);
    sec.unique_path_mismatches = unique_path_mismatches(&t, 3)?;
    Ok(sec)
}

/// Largest `|⟨kx, kω⟩ − ⟨x, ω⟩|` over seeded root-fixing automorphisms `k`,
/// all nodes `x` and all cylinders `ω`; a change in definedness counts as
/// infinite.
pub fn horocycle_invariance(t: &TruncatedCover<'_>, draws: usize, seed: u64) -> f64 {
    (0..draws as u64)
        .into_par_iter()
        .map(|s| {
            let k = t.root_automorphism(seed.wrapping_add(s));
            let mut worst = 0.0f64;
            for h in 1..t.n_nodes() {
                let w = t.cylinder_at(h).expect("non-root node");
                let Some(kw) = k.apply_cylinder(t, &w) else {
                    return f64::INFINITY;
                };
                for x in 0..t.n_nodes() {
                    let kx = k.apply(x).expect("total map");
                    match (t.horocycle_bracket(x, &w), t.horocycle_bracket(kx, &kw)) {
                        (Ok(a), Ok(b)) => worst = worst.max((a - b).abs() as f64),
                        (Err(_), Err(_)) => {}
                        _ => return f64::INFINITY,
                    }
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

/// Number of `(x, n)` with `n ≤ n_max` for which the first steps towards a
/// fixed geodesic disagree with exhaustive search over all chains from `x`.
pub fn unique_path_mismatches(t: &TruncatedCover<'_>, n_max: usize) -> Result<usize, CoverError> {
    let a = t.children(0)[0];
    let b = t.children(0)[1];
    let w1 = t.cylinder_at(t.children(a)[0])?;
    let w2 = t.cylinder_at(t.children(b)[0])?;
    let mut bad = 0;
    for x in 0..t.n_nodes() {
        let Ok(d) = t.distance_to_geodesic(x, &w1, &w2) else { continue };
        for n in 0..=n_max.min(d.saturating_sub(1)) {
            if d <= n {
                break;
            }
            let path = t.unique_path(x, &w1, &w2, n)?;
            let found: Vec<_> = t
                .chains_from(x, n + 1)
                .into_iter()
                .filter(|c| t.chain_sees_both(c, &w1, &w2))
                .collect();
            if found != vec![path] {
                bad += 1;
            }
        }
    }
    Ok(bad)
}

// ----- suites ------------------------------------------------------------

/// Named graphs of the default verification suite.
pub const NAMED_SUITE: [&str; 5] = ["complete:4", "complete:5", "petersen", "complete_bipartite:3", "hypercube3"];

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub include_named: bool,
    pub seed_count: usize,
    /// Fixed vertex count; `None` cycles through `10, 12, …, 20`.
    pub n: Option<usize>,
    pub degree: usize,
    pub analysis: AnalysisConfig,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            include_named: true,
            seed_count: 20,
            n: None,
            degree: 3,
            analysis: AnalysisConfig {
                depth: 5,
                ..AnalysisConfig::default()
            },
        }
    }
}

/// Vertex count used for the random graph with seed `s` when none is fixed.
pub fn default_suite_n(s: u64) -> usize {
    10 + 2 * (s % 6) as usize
}

pub fn random_source(n: usize, degree: usize, seed: u64) -> String {
    format!("random:n={n},degree={degree},seed={seed}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteRow {
    pub graph: String,
    pub check: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// One row per check of a report.
pub fn suite_rows(r: &AnalysisReport) -> Vec<SuiteRow> {
    let c = &r.config;
    let max = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0f64, f64::max);
    let row = |check: &str, max_residual: f64, tolerance: f64| SuiteRow {
        graph: r.graph.source.clone(),
        check: check.to_string(),
        max_residual,
        tolerance,
        pass: max_residual <= tolerance,
    };
    let mut rows = vec![
        row(
            "spectrum",
            max(&mut r.resonances.iter().filter(|x| !x.defect_flag).map(|x| x.eigen_residual)),
            c.tol,
        ),
        row("bass", r.oracles.bass_residual_max, c.tol),
        row("theorem", max(&mut r.theorems.iter().map(|x| x.theorem_residual)), c.tol),
        row("decomposition", max(&mut r.theorems.iter().map(|x| x.decomposition_max)), c.tol),
        row(
            "c_function",
            max(&mut r.theorems.iter().filter_map(|x| x.c_function_residual)),
            c.tol,
        ),
        row("direct_vs_formula", r.oracles.direct_vs_formula_geodesic_max, c.oracle_tol),
        row("p2_vs_vertex", r.oracles.p2_vs_vertex_max, c.oracle_tol),
        row("orthogonality", r.oracles.orthogonality_max, c.tol),
        row("cylinder", r.oracles.cylinder_check_max, c.cylinder_tol),
    ];
    if let Some(cv) = &r.cover {
        rows.extend([
            row("poisson_factorization", cv.poisson_factorization_max, c.cover_tol),
            row("round_trip", cv.round_trip_max, c.cover_tol),
            row("adjacency_relation", cv.adjacency_relation_max, c.adjacency_tol),
            row("lift_consistency", cv.lift_consistency_max, c.cover_tol),
            row("additivity", cv.additivity_max, c.cover_tol),
            row("truncation_stability", cv.truncation_stability_max, c.cover_tol),
            row("deck_invariance", cv.deck_invariance_max, c.cover_tol),
            row("horocycle_invariance", cv.horocycle_invariance_max, 0.0),
            row("unique_path", cv.unique_path_mismatches as f64, 0.0),
        ]);
    }
    rows
}

/// `(source, graph)` pairs of a suite, in report order.
pub fn suite_graphs(cfg: &SuiteConfig) -> Result<Vec<(String, RegularGraph)>, GraphError> {
    let mut out = Vec::new();
    if cfg.include_named {
        for name in NAMED_SUITE {
            out.push((format!("named:{name}"), generate_named(name)?));
        }
    }
    for s in 0..cfg.seed_count as u64 {
        let n = cfg.n.unwrap_or_else(|| default_suite_n(s));
        let g = generate_random_regular(n, cfg.degree, s, DEFAULT_GENERATION_BUDGET)?;
        out.push((random_source(n, cfg.degree, s), g));
    }
    Ok(out)
}

/// Analyses every suite graph in parallel; reports come back in suite order.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Vec<AnalysisReport>, AnalysisError> {
    let graphs = suite_graphs(cfg)?;
    graphs
        .par_iter()
        .map(|(src, g)| analyze(g, src, &cfg.analysis))
        .collect()
}

// ----- serialisation -----------------------------------------------------

struct SciFormatter<'a>(serde_json::ser::PrettyFormatter<'a>);

impl serde_json::ser::Formatter for SciFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty JSON with every float as `d.dddddddddddddddde±x`; non-finite
/// floats become `null`.
pub fn to_json<S: Serialize>(value: &S) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter(serde_json::ser::PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory serialisation");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

fn f(v: f64) -> String {
    format!("{v:.16e}")
}

/// Resonance table then theorem table, each with a header line.
pub fn to_csv(r: &AnalysisReport) -> String {
    let mut s = String::from("# resonances\nre,im,multiplicity,eigen_residual,defect_flag\n");
    for x in &r.resonances {
        s += &format!("{},{},{},{},{}\n", f(x.re), f(x.im), x.multiplicity, f(x.eigen_residual), x.defect_flag);
    }
    s += "\n# theorems\nresonance,sample,z_re,z_im,branch,vertex_re,vertex_im,geodesic_re,geodesic_im,\
          modified_edge_re,modified_edge_im,scale,theorem_residual,decomposition_max,c_function_residual,pass\n";
    for t in &r.theorems {
        let branch = match t.branch {
            Branch::Generic => "generic",
            Branch::ZSquaredEqualsQ => "z_squared_equals_q",
        };
        s += &format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            t.resonance,
            t.sample,
            f(t.z.re),
            f(t.z.im),
            branch,
            f(t.vertex_pairing.re),
            f(t.vertex_pairing.im),
            f(t.geodesic_pairing.re),
            f(t.geodesic_pairing.im),
            f(t.modified_edge_pairing.re),
            f(t.modified_edge_pairing.im),
            f(t.scale),
            f(t.theorem_residual),
            f(t.decomposition_max),
            t.c_function_residual.map(f).unwrap_or_default(),
            t.pass
        );
    }
    s
}

pub fn suite_table(rows: &[SuiteRow]) -> String {
    let width = rows.iter().map(|r| r.graph.len()).max().unwrap_or(5).max(5);
    let mut s = format!("{:<width$}  {:<22}  {:>24}  {:>10}  result\n", "graph", "check", "max_residual", "tolerance");
    for r in rows {
        s += &format!(
            "{:<width$}  {:<22}  {:>24}  {:>10.1e}  {}\n",
            r.graph,
            r.check,
            f(r.max_residual),
            r.tolerance,
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    s
}

pub fn zeta_csv(rows: &[BassCheck<f64>]) -> String {
    let mut s = String::from("u_re,u_im,edge_side_re,edge_side_im,vertex_side_re,vertex_side_im,relative_residual\n");
    for b in rows {
        s += &format!(
            "{},{},{},{},{},{},{}\n",
            f(b.u.re),
            f(b.u.im),
            f(b.edge_side.re),
            f(b.edge_side.im),
            f(b.vertex_side.re),
            f(b.vertex_side.im),
            f(b.relative)
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k4_report() {
        let g = generate_named("complete:4").unwrap();
        let cfg = AnalysisConfig {
            depth: 3,
            automorphism_draws: 5,
            ..AnalysisConfig::default()
        };
        let r = analyze(&g, "named:complete:4", &cfg).unwrap();
        assert_eq!(r.resonances.iter().map(|x| x.multiplicity).sum::<usize>(), 12);
        assert_eq!(r.theorems.len(), 5 * 5);
        assert!(r.pass.all, "{:?} {:?}", r.pass, r.cover);
        let rows = suite_rows(&r);
        assert!(rows.iter().all(|x| x.pass));
        assert_eq!(to_json(&r), to_json(&analyze(&g, "named:complete:4", &cfg).unwrap()));
    }

    #[test]
    fn float_format() {
        let s = to_json(&vec![36.0, -0.5, f64::NAN, 1e-300]);
        assert_eq!(s.split_whitespace().collect::<String>(), "[3.6000000000000000e1,-5.0000000000000000e-1,null,1.0000000000000000e-300]");
        let back: Vec<Option<f64>> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![Some(36.0), Some(-0.5), None, Some(1e-300)]);
    }

    #[test]
    fn tight_tolerance_fails() {
        let g = generate_named("petersen").unwrap();
        let cfg = AnalysisConfig {
            tol: 1e-17,
            ..AnalysisConfig::default()
        };
        let r = analyze(&g, "named:petersen", &cfg).unwrap();
        assert!(!r.pass.all);
        assert!(suite_rows(&r).iter().any(|x| !x.pass));
    }

    #[test]
    fn bass_sample_points() {
        let u = bass_samples(20, 3);
        assert_eq!(u[0], C::new(0.0, 0.0));
        assert!(u.iter().all(|z| z.norm() < 0.95));
        assert_eq!(u, bass_samples(20, 3));
    }
}
