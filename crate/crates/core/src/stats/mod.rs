//! Hypothesis tests, agreement measures, correlation, and fit metrics.

pub mod special;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
}

impl ContingencyTable {
    pub fn new(counts: Vec<Vec<u64>>) -> Result<Self> {
        let cols = counts.first().map_or(0, Vec::len);
        if counts.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument("ragged contingency table".into()));
        }
        let row_labels = (1..=counts.len()).map(|i| i.to_string()).collect();
        let col_labels = (1..=cols).map(|i| i.to_string()).collect();
        Ok(Self {
            counts,
            row_labels,
            col_labels,
        })
    }

    pub fn with_labels(mut self, rows: Vec<String>, cols: Vec<String>) -> Result<Self> {
        if rows.len() != self.n_rows() || cols.len() != self.n_cols() {
            return Err(Error::InvalidArgument(
                "label count does not match table shape".into(),
            ));
        }
        self.row_labels = rows;
        self.col_labels = cols;
        Ok(self)
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn n_rows(&self) -> usize {
        self.counts.len()
    }

    pub fn n_cols(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.n_cols())
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.row_sums().iter().sum()
    }

    /// Copy without all-zero rows and columns.
    pub fn drop_empty(&self) -> Self {
        let rows = self.row_sums();
        let cols = self.col_sums();
        let keep_r: Vec<usize> = (0..rows.len()).filter(|&i| rows[i] > 0).collect();
        let keep_c: Vec<usize> = (0..cols.len()).filter(|&j| cols[j] > 0).collect();
        Self {
            counts: keep_r
                .iter()
                .map(|&i| keep_c.iter().map(|&j| self.counts[i][j]).collect())
                .collect(),
            row_labels: keep_r.iter().map(|&i| self.row_labels[i].clone()).collect(),
            col_labels: keep_c.iter().map(|&j| self.col_labels[j].clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
    pub corrected_p: Option<f64>,
    /// Set when any expected count is below 5.
    pub low_expected: bool,
}

/// Pearson's χ² test of independence.
pub fn chi_squared_test(table: &ContingencyTable) -> Result<TestResult> {
    let (r, c) = (table.n_rows(), table.n_cols());
    if r < 2 || c < 2 {
        return Err(Error::DegenerateTable(format!("need at least 2x2, got {r}x{c}")));
    }
    let rows = table.row_sums();
    let cols = table.col_sums();
    if let Some(i) = rows.iter().position(|&s| s == 0) {
        return Err(Error::DegenerateTable(format!(
            "row `{}` has no observations",
            table.row_labels[i]
        )));
    }
    if let Some(j) = cols.iter().position(|&s| s == 0) {
        return Err(Error::DegenerateTable(format!(
            "column `{}` has no observations",
            table.col_labels[j]
        )));
    }
    let n = table.total() as f64;
    let mut statistic = 0.0;
    let mut low_expected = false;
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            let e = rows[i] as f64 * cols[j] as f64 / n;
            low_expected |= e < 5.0;
            let diff = o as f64 - e;
            statistic += diff * diff / e;
        }
    }
    let df = ((r - 1) * (c - 1)) as u32;
    Ok(TestResult {
        statistic,
        df,
        p_value: special::chi2_sf(statistic, f64::from(df)),
        corrected_p: None,
        low_expected,
    })
}

/// `min(1, p·m)` for each p.
pub fn bonferroni(p_values: &[f64], m: usize) -> Result<Vec<f64>> {
    if m < p_values.len() {
        return Err(Error::InvalidArgument(format!(
            "m = {m} is smaller than the {} p-values",
            p_values.len()
        )));
    }
    Ok(p_values.iter().map(|p| (p * m as f64).min(1.0)).collect())
}

fn ln_choose(n: u64, k: u64) -> f64 {
    use special::ln_gamma;
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// One-sided binomial test: P(X ≥ successes) for X ~ Binomial(n, p0),
/// summed in log space.
pub fn binomial_test_greater(successes: u64, n: u64, p0: f64) -> Result<f64> {
    if successes > n {
        return Err(Error::InvalidArgument(format!(
            "{successes} successes out of {n}"
        )));
    }
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::InvalidArgument(format!("p0 = {p0} not in (0, 1)")));
    }
    if successes == 0 {
        return Ok(1.0);
    }
    let (lp, lq) = (p0.ln(), (1.0 - p0).ln());
    let terms: Vec<f64> = (successes..=n)
        .map(|k| ln_choose(n, k) + k as f64 * lp + (n - k) as f64 * lq)
        .collect();
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    Ok((max + sum.ln()).exp().min(1.0))
}

/// Fraction of aligned positions with the same response.
pub fn agreement(a: &[u8], b: &[u8]) -> Result<f64> {
    let (same, n) = agreement_counts(a, b)?;
    Ok(same as f64 / n as f64)
}

fn agreement_counts(a: &[u8], b: &[u8]) -> Result<(u64, u64)> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "response sequences differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::InvalidArgument("empty response sequences".into()));
    }
    let same = a.iter().zip(b).filter(|(x, y)| x == y).count() as u64;
    Ok((same, a.len() as u64))
}

/// Within-subject agreement between a participant's two manifolds, aligned by
/// manifold position.
pub fn wsa(responses_m1: &[u8], responses_m2: &[u8]) -> Result<f64> {
    agreement(responses_m1, responses_m2)
}

/// One participant's responses, indexed by manifold position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantResponses {
    pub id: String,
    pub slp_id: u32,
    pub manifold1: Vec<u8>,
    pub manifold2: Vec<u8>,
}

impl ParticipantResponses {
    /// Manifold 1 positions followed by Manifold 2 positions.
    pub fn all(&self) -> Vec<u8> {
        let mut v = self.manifold1.clone();
        v.extend_from_slice(&self.manifold2);
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub participant_ids: Vec<String>,
    pub wsa_per_participant: Vec<f64>,
    pub mean_wsa: f64,
    pub wsa_matches: u64,
    pub wsa_trials: u64,
    /// Pairwise agreement over all aligned trials, every participant pair.
    pub bsa_matrix: Vec<Vec<f64>>,
    /// Mean over pairs that share an SLP.
    pub mean_bsa: f64,
    pub bsa_matches: u64,
    pub bsa_trials: u64,
    pub within_slp_pairs: usize,
    /// Mean over every off-diagonal pair, regardless of SLP.
    pub mean_bsa_all_pairs: f64,
}

/// WSA for every participant and BSA for every pair.
pub fn agreement_report(participants: &[ParticipantResponses]) -> Result<AgreementReport> {
    if participants.len() < 2 {
        return Err(Error::InvalidArgument("need at least two participants".into()));
    }
    let mut wsa_per_participant = Vec::with_capacity(participants.len());
    let (mut wsa_matches, mut wsa_trials) = (0, 0);
    for p in participants {
        let (s, n) = agreement_counts(&p.manifold1, &p.manifold2)?;
        wsa_matches += s;
        wsa_trials += n;
        wsa_per_participant.push(s as f64 / n as f64);
    }

    let all: Vec<Vec<u8>> = participants.iter().map(ParticipantResponses::all).collect();
    let n = participants.len();
    let mut bsa_matrix = vec![vec![1.0; n]; n];
    let (mut bsa_matches, mut bsa_trials, mut within) = (0, 0, 0usize);
    let mut within_sum = 0.0;
    let mut all_sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let (s, t) = agreement_counts(&all[i], &all[j])?;
            let a = s as f64 / t as f64;
            bsa_matrix[i][j] = a;
            bsa_matrix[j][i] = a;
            all_sum += a;
            if participants[i].slp_id == participants[j].slp_id {
                within += 1;
                within_sum += a;
                bsa_matches += s;
                bsa_trials += t;
            }
        }
    }
    if within == 0 {
        return Err(Error::InvalidArgument(
            "no SLP has two or more participants".into(),
        ));
    }
    let mean_wsa = wsa_per_participant.iter().sum::<f64>() / n as f64;
    Ok(AgreementReport {
        participant_ids: participants.iter().map(|p| p.id.clone()).collect(),
        wsa_per_participant,
        mean_wsa,
        wsa_matches,
        wsa_trials,
        bsa_matrix,
        mean_bsa: within_sum / within as f64,
        bsa_matches,
        bsa_trials,
        within_slp_pairs: within,
        mean_bsa_all_pairs: all_sum / (n * (n - 1) / 2) as f64,
    })
}

/// Strict upper triangle, row-major.
pub fn upper_triangular(matrix: &[Vec<f64>]) -> Vec<f64> {
    let mut out = Vec::new();
    for (i, row) in matrix.iter().enumerate() {
        out.extend_from_slice(&row[i + 1..]);
    }
    out
}

/// Product-moment correlation and the number of pairs.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<(f64, usize)> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 pairs, got {n}")));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    Ok(((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0), n))
}

/// Mean squared error over every cell, and the variance-weighted mean of the
/// per-column R². Columns with zero variance carry zero weight.
pub fn mse_and_r2<R: AsRef<[f64]>>(predicted: &[R], empirical: &[R]) -> Result<(f64, f64)> {
    if predicted.len() != empirical.len() {
        return Err(Error::InvalidArgument("row counts differ".into()));
    }
    let n = empirical.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 rows, got {n}")));
    }
    let cols = empirical[0].as_ref().len();
    if cols == 0
        || predicted
            .iter()
            .zip(empirical)
            .any(|(p, e)| p.as_ref().len() != cols || e.as_ref().len() != cols)
    {
        return Err(Error::InvalidArgument("inconsistent column counts".into()));
    }

    let mut sq_err = 0.0;
    let mut weighted = 0.0;
    let mut weight_total = 0.0;
    for j in 0..cols {
        let mean = empirical.iter().map(|r| r.as_ref()[j]).sum::<f64>() / n as f64;
        let (mut ss_res, mut ss_tot) = (0.0, 0.0);
        for (p, e) in predicted.iter().zip(empirical) {
            let (p, e) = (p.as_ref()[j], e.as_ref()[j]);
            ss_res += (e - p) * (e - p);
            ss_tot += (e - mean) * (e - mean);
        }
        sq_err += ss_res;
        if ss_tot > 0.0 {
            // Var_j · R²_j with Var_j = ss_tot / n.
            let var = ss_tot / n as f64;
            weighted += var * (1.0 - ss_res / ss_tot);
            weight_total += var;
        }
    }
    if weight_total == 0.0 {
        return Err(Error::UndefinedR2);
    }
    Ok((sq_err / (n * cols) as f64, weighted / weight_total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn chi2_diagonal_table() {
        let t = ContingencyTable::new(vec![vec![10, 0], vec![0, 10]]).unwrap();
        let r = chi_squared_test(&t).unwrap();
        assert_eq!(r.statistic, 20.0);
        assert_eq!(r.df, 1);
        assert!((r.p_value - 7.744e-6).abs() < 1e-8);
    }

    #[test]
    fn chi2_proportional_rows() {
        let t = ContingencyTable::new(vec![vec![2, 4, 6], vec![1, 2, 3], vec![3, 6, 9]]).unwrap();
        let r = chi_squared_test(&t).unwrap();
        assert!(r.statistic.abs() < 1e-12);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        assert_eq!(r.df, 4);
    }

    #[test]
    fn chi2_degrees_of_freedom() {
        let t = ContingencyTable::new(vec![vec![3, 4, 5]; 20]).unwrap();
        assert_eq!(chi_squared_test(&t).unwrap().df, 38);
        let t = ContingencyTable::new(vec![vec![3, 4, 5]; 14]).unwrap();
        assert_eq!(chi_squared_test(&t).unwrap().df, 26);
    }

    #[test]
    fn chi2_degenerate() {
        let t = ContingencyTable::new(vec![vec![3, 0], vec![4, 0]]).unwrap();
        assert!(matches!(chi_squared_test(&t), Err(Error::DegenerateTable(_))));
        let t = ContingencyTable::new(vec![vec![3, 1]]).unwrap();
        assert!(matches!(chi_squared_test(&t), Err(Error::DegenerateTable(_))));
        assert!(ContingencyTable::new(vec![vec![1, 2], vec![3]]).is_err());
        let t = ContingencyTable::new(vec![vec![3, 0, 1], vec![0, 0, 0], vec![4, 0, 2]]).unwrap();
        let d = t.drop_empty();
        assert_eq!(d.counts(), &[vec![3, 1], vec![4, 2]]);
        assert_eq!(d.row_labels, vec!["1", "3"]);
        assert_eq!(d.col_labels, vec!["1", "3"]);
    }

    #[test]
    fn chi2_low_expected_flag() {
        let t = ContingencyTable::new(vec![vec![1, 2], vec![2, 1]]).unwrap();
        assert!(chi_squared_test(&t).unwrap().low_expected);
        let t = ContingencyTable::new(vec![vec![10, 20], vec![20, 10]]).unwrap();
        assert!(!chi_squared_test(&t).unwrap().low_expected);
    }

    #[test]
    fn bonferroni_cases() {
        let out = bonferroni(&[0.01, 0.2, 0.0], 14).unwrap();
        assert!((out[0] - 0.14).abs() < 1e-15);
        assert_eq!(out[1], 1.0);
        assert_eq!(out[2], 0.0);
        assert!(bonferroni(&[0.1, 0.1], 1).is_err());
    }

    #[test]
    fn binomial_cases() {
        assert_eq!(binomial_test_greater(0, 10, 0.3).unwrap(), 1.0);
        let p = binomial_test_greater(5, 5, 1.0 / 3.0).unwrap();
        assert!((p - (1.0f64 / 3.0).powi(5)).abs() < 1e-12);
        let p = binomial_test_greater(7, 7, 0.4).unwrap();
        assert!((p - 0.4f64.powi(7)).abs() < 1e-12);
        // P(X >= 1) = 1 - q^n
        let p = binomial_test_greater(1, 4, 0.5).unwrap();
        assert!((p - 0.9375).abs() < 1e-12);
        assert!(binomial_test_greater(6, 5, 0.5).is_err());
        assert!(binomial_test_greater(1, 5, 1.0).is_err());
    }

    #[test]
    fn binomial_large_n() {
        let n = 1_000_000;
        let p = binomial_test_greater(n / 3 + 2000, n, 1.0 / 3.0).unwrap();
        assert!(p > 0.0 && p < 1e-4, "{p}");
        let p = binomial_test_greater(n / 3 - 2000, n, 1.0 / 3.0).unwrap();
        assert!(p > 0.9999, "{p}");
    }

    #[test]
    fn wsa_cases() {
        assert_eq!(wsa(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(wsa(&[1, 1, 1], &[2, 3, 2]).unwrap(), 0.0);
        assert!(wsa(&[1, 2], &[1]).is_err());
    }

    fn participant(id: &str, slp: u32, all: Vec<u8>) -> ParticipantResponses {
        ParticipantResponses {
            id: id.into(),
            slp_id: slp,
            manifold1: all[..20].to_vec(),
            manifold2: all[20..].to_vec(),
        }
    }

    #[test]
    fn bsa_hand_built() {
        // B agrees with A on 30 trials, C agrees with A on 20, and C agrees
        // with B on 10: mean (30 + 20 + 10) / 3 / 40 = 0.5.
        let a = vec![1u8; 40];
        let mut b = vec![1u8; 30];
        b.extend(vec![2u8; 10]);
        let mut c = vec![1u8; 10];
        c.extend(vec![3u8; 20]);
        c.extend(vec![1u8; 10]);
        let ps = [
            participant("a", 1, a),
            participant("b", 1, b),
            participant("c", 1, c),
        ];
        let r = agreement_report(&ps).unwrap();
        assert_eq!(r.bsa_matrix[0][1], 0.75);
        assert_eq!(r.bsa_matrix[0][2], 0.5);
        assert_eq!(r.bsa_matrix[1][2], 0.25);
        assert!((r.mean_bsa - 0.5).abs() < 1e-15);
        for i in 0..3 {
            assert_eq!(r.bsa_matrix[i][i], 1.0);
        }
        assert_eq!(r.within_slp_pairs, 3);
        assert_eq!(r.bsa_matches, 60);
        assert_eq!(r.bsa_trials, 120);
    }

    #[test]
    fn bsa_skips_cross_slp_pairs_in_mean() {
        let ps = [
            participant("a", 1, vec![1; 40]),
            participant("b", 1, vec![1; 40]),
            participant("c", 2, vec![2; 40]),
        ];
        let r = agreement_report(&ps).unwrap();
        assert_eq!(r.mean_bsa, 1.0);
        assert!((r.mean_bsa_all_pairs - 1.0 / 3.0).abs() < 1e-15);
        let lonely = [participant("a", 1, vec![1; 40]), participant("c", 2, vec![2; 40])];
        assert!(agreement_report(&lonely).is_err());
    }

    #[test]
    fn pearson_cases() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson_r(&x, &y).unwrap().0 - 1.0).abs() < 1e-15);
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson_r(&x, &y).unwrap().0 + 1.0).abs() < 1e-15);
        let (r, n) = pearson_r(&[1.0, 2.0, 3.0], &[1.0, 2.0, 2.0]).unwrap();
        assert!((r - 3f64.sqrt() / 2.0).abs() < 1e-12);
        assert_eq!(n, 3);
        assert!(matches!(
            pearson_r(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::UndefinedCorrelation)
        ));
        assert!(pearson_r(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn upper_triangle_order() {
        let m = vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 3.0], vec![2.0, 3.0, 0.0]];
        assert_eq!(upper_triangular(&m), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn mse_r2_cases() {
        let e = vec![vec![0.2, 0.3, 0.5], vec![0.6, 0.1, 0.3], vec![0.1, 0.8, 0.1]];
        let (mse, r2) = mse_and_r2(&e, &e).unwrap();
        assert_eq!(mse, 0.0);
        assert_eq!(r2, 1.0);
        let means: Vec<Vec<f64>> = vec![vec![0.3, 0.4, 0.3]; 3];
        let (_, r2) = mse_and_r2(&means, &e).unwrap();
        assert!(r2.abs() < 1e-12);
        let (mse, r2) = mse_and_r2(&[[0.5], [0.5]], &[[0.0], [1.0]]).unwrap();
        assert_eq!(mse, 0.25);
        assert_eq!(r2, 0.0);
        assert!(matches!(
            mse_and_r2(&[[0.5], [0.5]], &[[1.0], [1.0]]),
            Err(Error::UndefinedR2)
        ));
    }

    proptest! {
        #[test]
        fn chi2_permutation_invariant(
            counts in proptest::collection::vec(proptest::collection::vec(1u64..50, 3), 4),
            rot in 0usize..4,
        ) {
            let t = ContingencyTable::new(counts.clone()).unwrap();
            let mut permuted = counts.clone();
            permuted.rotate_left(rot);
            let permuted: Vec<Vec<u64>> = permuted.into_iter().map(|r| vec![r[2], r[0], r[1]]).collect();
            let a = chi_squared_test(&t).unwrap();
            let b = chi_squared_test(&ContingencyTable::new(permuted).unwrap()).unwrap();
            prop_assert!((a.statistic - b.statistic).abs() < 1e-9 * (1.0 + a.statistic));
        }

        #[test]
        fn chi2_p_monotone(x in 0.0f64..150.0, dx in 0.01f64..10.0, df in 1u32..40) {
            let a = special::chi2_sf(x, f64::from(df));
            let b = special::chi2_sf(x + dx, f64::from(df));
            prop_assert!(b <= a);
        }

        #[test]
        fn binomial_monotone_in_successes(k in 0u64..200, n in 200u64..400) {
            let a = binomial_test_greater(k, n, 1.0 / 3.0).unwrap();
            let b = binomial_test_greater(k + 1, n, 1.0 / 3.0).unwrap();
            prop_assert!(b <= a + 1e-15);
        }

        #[test]
        fn agreement_symmetric_and_order_invariant(
            pairs in proptest::collection::vec((1u8..=3, 1u8..=3), 1..40),
            seed in any::<u64>(),
        ) {
            let (a, b): (Vec<u8>, Vec<u8>) = pairs.iter().cloned().unzip();
            prop_assert_eq!(wsa(&a, &b).unwrap(), wsa(&b, &a).unwrap());
            let mut idx: Vec<usize> = (0..a.len()).collect();
            let rot = (seed % a.len() as u64) as usize;
            idx.rotate_left(rot);
            let pa: Vec<u8> = idx.iter().map(|&i| a[i]).collect();
            let pb: Vec<u8> = idx.iter().map(|&i| b[i]).collect();
            prop_assert_eq!(wsa(&a, &b).unwrap(), wsa(&pa, &pb).unwrap());
        }

        #[test]
        fn r2_at_most_one(
            rows in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0), 3..20),
        ) {
            let e: Vec<[f64; 2]> = rows.iter().map(|r| [r.0, r.1]).collect();
            let p: Vec<[f64; 2]> = rows.iter().map(|r| [r.2, r.3]).collect();
            if let Ok((_, r2)) = mse_and_r2(&p, &e) {
                prop_assert!(r2 <= 1.0);
            }
        }
    }

    #[test]
    fn r2_equal_variances_is_mean_of_columns() {
        // Both columns have the same variance, so the weighting is uniform.
        let e = [[0.0, 1.0], [1.0, 0.0], [0.5, 0.5]];
        let p = [[0.1, 0.8], [0.7, 0.1], [0.5, 0.6]];
        let (_, r2) = mse_and_r2(&p, &e).unwrap();
        let col = |j: usize| {
            let m = e.iter().map(|r| r[j]).sum::<f64>() / 3.0;
            let res: f64 = e.iter().zip(&p).map(|(a, b)| (a[j] - b[j]).powi(2)).sum();
            let tot: f64 = e.iter().map(|a| (a[j] - m).powi(2)).sum();
            1.0 - res / tot
        };
        assert!((r2 - (col(0) + col(1)) / 2.0).abs() < 1e-12);
    }
}
