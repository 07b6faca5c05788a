//! χ² tail probabilities checked against direct quadrature of the density.

use loshot_core::stats::special::chi2_sf;
use loshot_core::stats::{chi_squared_test, ContingencyTable};

/// Γ(df / 2) by the recurrence Γ(x + 1) = xΓ(x) from Γ(1) = 1 or Γ(1/2) = √π.
fn gamma_half_integer(df: u32) -> f64 {
    let (mut x, mut g) = if df.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (0.5, std::f64::consts::PI.sqrt())
    };
    while x < df as f64 / 2.0 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Upper tail ∫_x^∞ f(s) ds of the χ² density. Substituting s = u² removes
/// the s^(df/2 − 1) singularity at zero, leaving the smooth integrand
/// 2u^(df−1)e^(−u²/2) / (2^(df/2)Γ(df/2)), integrated by composite Simpson.
fn oracle_sf(x: f64, df: u32) -> f64 {
    let norm = 2f64.powf(df as f64 / 2.0) * gamma_half_integer(df);
    let f = |u: f64| 2.0 * u.powi(df as i32 - 1) * (-u * u / 2.0).exp() / norm;
    let lo = x.sqrt();
    let hi = lo.max((df as f64).sqrt()) + 40.0;
    let panels = 200_000;
    let h = (hi - lo) / panels as f64;
    let mut sum = f(lo) + f(hi);
    for i in 1..panels {
        let u = lo + i as f64 * h;
        sum += if i % 2 == 1 { 4.0 * f(u) } else { 2.0 * f(u) };
    }
    sum * h / 3.0
}

#[test]
fn oracle_sanity() {
    // df = 2 has the closed form e^{-x/2}.
    for x in [0.0, 0.5, 3.0, 20.0] {
        assert!((oracle_sf(x, 2) - (-x / 2.0f64).exp()).abs() < 1e-12);
    }
}

#[test]
fn chi2_sf_matches_quadrature() {
    let mut worst = 0.0f64;
    for df in [1u32, 2, 26, 38] {
        let mut x = 0.0;
        while x <= 200.0 {
            let diff = (chi2_sf(x, df as f64) - oracle_sf(x, df)).abs();
            worst = worst.max(diff);
            assert!(diff < 1e-8, "df {df} x {x}: {diff}");
            x += if x < 60.0 { 0.5 } else { 5.0 };
        }
    }
    eprintln!("worst chi2 deviation {worst:e}");
}

#[test]
fn diagonal_table_p_value() {
    let t = ContingencyTable::new(vec![vec![10, 0], vec![0, 10]]).unwrap();
    let r = chi_squared_test(&t).unwrap();
    assert!((r.p_value - oracle_sf(20.0, 1)).abs() < 1e-10);
    assert!((r.p_value - 7.74e-6).abs() < 1e-8);
}
