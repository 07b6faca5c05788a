use loshot_core::classifiers::manifold_distribution;
use loshot_core::simulation::{simulate_population, ResponsePolicy};
use loshot_core::{Dataset, ExportFormat, ModelKind, SlpCatalog, StimulusConfig};

#[test]
fn sampled_population_converges_to_model_distribution() {
    let catalog = SlpCatalog::builtin();
    let cfg = StimulusConfig::builtin();
    let [t1, t2] = cfg.labeled_positions;
    let policy = ResponsePolicy::sample(ModelKind::Prototype);
    let ds = simulate_population(&catalog, &cfg, 200, &policy, 11).unwrap();
    let mut tv_sum = 0.0;
    let mut cells = 0;
    for slp in catalog.entries() {
        let model = manifold_distribution(ModelKind::Prototype, slp, t1, t2, &cfg.manifolds[0]).unwrap();
        let counts = ds.distribution_by_position(slp.id, &catalog).unwrap();
        for (row, p) in counts.iter().zip(&model) {
            let n: u64 = row.iter().sum();
            assert_eq!(n, 400);
            let tv: f64 = (0..3)
                .map(|k| (row[k] as f64 / n as f64 - p.probs()[k]).abs())
                .sum::<f64>()
                / 2.0;
            tv_sum += tv;
            cells += 1;
        }
    }
    let mean_tv = tv_sum / cells as f64;
    assert!(mean_tv < 0.05, "mean total-variation distance {mean_tv}");
}

#[test]
fn position_counts_sum_to_condition_totals() {
    let catalog = SlpCatalog::builtin();
    let cfg = StimulusConfig::builtin();
    let ds = simulate_population(&catalog, &cfg, 5, &ResponsePolicy::uniform_random(), 3).unwrap();
    let agg = ds.aggregate_by_slp(&catalog);
    for (slp, total) in catalog.entries().iter().zip(&agg) {
        let rows = ds.distribution_by_position(slp.id, &catalog).unwrap();
        assert_eq!(rows.len(), 20);
        let mut sum = [0u64; 3];
        for r in &rows {
            assert_eq!(r.iter().sum::<u64>(), 10);
            for k in 0..3 {
                sum[k] += r[k];
            }
        }
        assert_eq!(&sum, total);
    }
    assert_eq!(agg.iter().flatten().sum::<u64>(), 2800);
}

#[test]
fn seventy_session_population_round_trips_in_both_formats() {
    let catalog = SlpCatalog::builtin();
    let cfg = StimulusConfig::builtin();
    let ds = simulate_population(&catalog, &cfg, 5, &ResponsePolicy::default(), 2024).unwrap();
    assert_eq!(ds.sessions().len(), 70);

    let jsonl = ds.export(ExportFormat::Jsonl);
    let back = Dataset::load(&jsonl).unwrap();
    assert_eq!(back, ds);
    assert_eq!(back.export(ExportFormat::Jsonl), jsonl);

    let csv = ds.export(ExportFormat::Csv);
    let back = Dataset::load(&csv).unwrap();
    assert_eq!(back.records(), ds.records());
    assert_eq!(back.export(ExportFormat::Csv), csv);
    assert_eq!(back.participants(), ds.participants());
}
