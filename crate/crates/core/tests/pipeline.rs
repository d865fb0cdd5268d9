use respair::report::{self, AnalysisConfig};
use respair::spectra::{eigensolve, hashimoto};
use respair::theorem::{sample_eigen_pairs, verify_theorem};
use respair::{generate_random_regular, RegularGraph};

fn torus_prism() -> RegularGraph {
    // K2 x C3 x C6, 5-regular on 36 vertices
    let idx = |a: usize, b: usize, c: usize| a * 18 + b * 6 + c;
    let mut pairs = Vec::new();
    for a in 0..2 {
        for b in 0..3 {
            for c in 0..6 {
                let v = idx(a, b, c);
                if a == 0 {
                    pairs.push((v, idx(1, b, c)));
                }
                pairs.push((v, idx(a, (b + 1) % 3, c)));
                pairs.push((v, idx(a, b, (c + 1) % 6)));
            }
        }
    }
    RegularGraph::from_undirected_edges(36, &pairs).unwrap()
}

#[test]
fn random_graphs_satisfy_the_pairing_formula() {
    for (seed, n, d) in [(1u64, 10usize, 3usize), (2, 14, 3), (3, 9, 4), (4, 12, 5)] {
        let g = generate_random_regular(n, d, seed, 1000).unwrap();
        let spectrum = eigensolve(&hashimoto::<f64>(&g), 1e-8).unwrap();
        assert_eq!(spectrum.iter().map(|e| e.multiplicity).sum::<usize>(), g.n_directed());
        for (i, entry) in spectrum.iter().enumerate().filter(|(_, e)| !e.defect_flag) {
            for (up, um) in sample_eigen_pairs(entry, 3, seed * 100 + i as u64) {
                let r = verify_theorem(&g, &up, &um, 8, 1e-8).unwrap();
                assert!(r.pass(), "seed {seed} z {}", entry.z);
            }
        }
    }
}

#[test]
fn jordan_blocks_are_flagged_and_skipped() {
    let g = torus_prism();
    let spectrum = eigensolve(&hashimoto::<f64>(&g), 1e-8).unwrap();
    assert_eq!(spectrum.iter().map(|e| e.multiplicity).sum::<usize>(), 180);
    let defective: Vec<_> = spectrum.iter().filter(|e| e.defect_flag).collect();
    assert!(!defective.is_empty());
    assert!(defective.iter().all(|e| (e.z.norm() - 2.0).abs() < 1e-6));
    let r = report::analyze(&g, "torus_prism", &AnalysisConfig::default()).unwrap();
    assert!(r.pass.all);
}
