use loshot_core::stimulus::{embedded_distance, figure_svg, scale_to_unit, N_FEATURES};
use loshot_core::{Manifold, StimulusConfig};
use proptest::prelude::*;

const GOLDEN: &str = "tests/golden/manifold1_anchor_a.svg";

/// Set `LOSHOT_BLESS=1` to rewrite the golden file after an intended rendering change.
#[test]
fn default_anchor_matches_golden_svg() {
    let cfg = StimulusConfig::builtin();
    let svg = figure_svg(cfg.manifolds[0].anchor_a(), &cfg.schema).unwrap();
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join(GOLDEN);
    if std::env::var_os("LOSHOT_BLESS").is_some() {
        std::fs::write(&path, &svg).unwrap();
    }
    let golden = std::fs::read_to_string(&path).unwrap();
    assert_eq!(svg, golden);
}

fn anchors() -> impl Strategy<Value = ([f64; N_FEATURES], [f64; N_FEATURES])> {
    let cfg = StimulusConfig::builtin();
    let one = cfg
        .schema
        .features()
        .iter()
        .map(|f| f.min..=f.max)
        .collect::<Vec<_>>();
    (one.clone(), one).prop_map(|(a, b)| {
        let mut x = [0.0; N_FEATURES];
        let mut y = [0.0; N_FEATURES];
        x.copy_from_slice(&a);
        y.copy_from_slice(&b);
        (x, y)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn generated_manifolds_are_straight_and_evenly_spaced((a, b) in anchors(), t1 in 0.0..=1.0f64, t2 in 0.0..=1.0f64) {
        let cfg = StimulusConfig::builtin();
        let schema = &cfg.schema;
        let (a, b) = (schema.vector(a).unwrap(), schema.vector(b).unwrap());
        let m = Manifold::generate("p", a, b, 20).unwrap();
        prop_assert_eq!(m.n_points(), 20);
        prop_assert_eq!(m.points()[0].values(), a.values());
        prop_assert_eq!(m.points()[19].values(), b.values());
        let (ua, ub) = (scale_to_unit(&a, schema).unwrap(), scale_to_unit(&b, schema).unwrap());
        for (i, (t, p)) in m.positions().iter().zip(m.points()).enumerate() {
            prop_assert_eq!(*t, i as f64 / 19.0);
            let up = scale_to_unit(p, schema).unwrap();
            for k in 0..N_FEATURES {
                prop_assert!((up[k] - ua[k] - t * (ub[k] - ua[k])).abs() <= 1e-9);
            }
        }
        let full = embedded_distance(&m, 0.0, 1.0, schema).unwrap();
        let d = embedded_distance(&m, t1, t2, schema).unwrap();
        prop_assert!((d - (t1 - t2).abs() * full).abs() <= 1e-9);
    }
}
