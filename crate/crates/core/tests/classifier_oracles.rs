//! Independent oracles for the classifiers: a naive inverse-square mixture
//! and a full-grid brute-force prototype search.

use loshot_core::classifiers::{
    fit_prototypes_with, manifold_distribution, prototype_predict, FitOptions, ModelKind,
};
use loshot_core::config::StimulusConfig;
use loshot_core::soft_labels::{SlpCatalog, SoftLabelPair};

/// Naive distance-weighted mixture of one-hot class prototypes.
fn oracle_mix(protos: [f64; 3], x: f64) -> [f64; 3] {
    let d: Vec<f64> = protos.iter().map(|p| (p - x).abs()).collect();
    if d.contains(&0.0) {
        let hits: Vec<usize> = (0..3).filter(|&k| d[k] == 0.0).collect();
        let mut out = [0.0; 3];
        for &k in &hits {
            out[k] += 1.0 / hits.len() as f64;
        }
        return out;
    }
    let w: Vec<f64> = d.iter().map(|v| 1.0 / (v * v)).collect();
    let total: f64 = w.iter().sum();
    [w[0] / total, w[1] / total, w[2] / total]
}

fn oracle_objective(protos: [f64; 3], slp: &SoftLabelPair, t1: f64, t2: f64) -> f64 {
    let mut total = 0.0;
    for (x, label) in [(t1, slp.d1), (t2, slp.d2)] {
        let pred = oracle_mix(protos, x);
        for k in 0..3 {
            let e = pred[k] - label.probs()[k];
            total += e * e;
        }
    }
    total
}

/// Exhaustive search over the 201^3 grid on [-0.5, 1.5] at step 0.01, keeping
/// the first strict minimum in lexicographic order.
fn brute_force(slp: &SoftLabelPair, t1: f64, t2: f64) -> ([f64; 3], f64) {
    let grid: Vec<f64> = (0..=200).map(|i| (i as f64 - 50.0) / 100.0).collect();
    let mut best = ([0.0; 3], f64::INFINITY);
    for &a in &grid {
        for &b in &grid {
            for &c in &grid {
                let obj = oracle_objective([a, b, c], slp, t1, t2);
                if obj < best.1 {
                    best = ([a, b, c], obj);
                }
            }
        }
    }
    best
}

#[test]
fn prototype_fit_matches_brute_force_grid() {
    let catalog = SlpCatalog::builtin();
    for id in [13, 1, 16, 4] {
        let slp = catalog.get(id).unwrap();
        let (oracle_positions, oracle_min) = brute_force(slp, 0.25, 0.75);
        let fit = fit_prototypes_with(slp, 0.25, 0.75, |a, b| (a - b).abs(), &FitOptions::default()).unwrap();
        assert_eq!(fit.grid_positions, oracle_positions, "SLP {id} grid stage");
        assert!(
            (fit.grid_objective - oracle_min).abs() < 1e-12,
            "SLP {id}: {} vs {oracle_min}",
            fit.grid_objective
        );
        let refined = oracle_objective(fit.prototypes.positions(), slp, 0.25, 0.75);
        assert!(
            refined <= oracle_min + 1e-12,
            "SLP {id}: refined {refined} > grid {oracle_min}"
        );
        for (p, g) in fit.prototypes.positions().iter().zip(&fit.grid_positions) {
            assert!((-0.5..=1.5).contains(p));
            // Refinement walks from the grid optimum; it stays in its basin.
            assert!((p - g).abs() <= 0.1, "SLP {id}: {p} drifted from {g}");
        }
    }
}

#[test]
fn prototype_distribution_matches_direct_reevaluation() {
    let catalog = SlpCatalog::builtin();
    let config = StimulusConfig::builtin();
    let slp = catalog.get(13).unwrap();
    let manifold = &config.manifolds[0];
    let rows = manifold_distribution(ModelKind::Prototype, slp, 0.25, 0.75, manifold).unwrap();
    let fit = fit_prototypes_with(slp, 0.25, 0.75, |a, b| (a - b).abs(), &FitOptions::default()).unwrap();
    for (row, &t) in rows.iter().zip(manifold.positions()) {
        let expected = oracle_mix(fit.prototypes.positions(), t);
        let via_api = prototype_predict(&fit.prototypes, t, |a, b| (a - b).abs()).unwrap();
        for k in 0..3 {
            assert!((row.probs()[k] - expected[k]).abs() < 1e-12);
            assert!((via_api.probs()[k] - expected[k]).abs() < 1e-12);
        }
    }
}
