//! End-to-end statistical analysis of a response dataset.
//!
//! Runs, in order: a 20×3 χ² test per SLP with Bonferroni correction, a 14×3
//! χ² test across SLPs, within- and between-subject agreement with one-sided
//! binomial tests against chance, the correlation between participant
//! agreement and SLP label similarity, and per-SLP model comparison (MSE and
//! variance-weighted R² of each model against the empirical distribution).
//!
//! Tables are stripped of empty rows and columns before testing, so a
//! condition where a species was never chosen is tested with fewer degrees of
//! freedom rather than rejected.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::classifiers::{ConditionModel, ModelKind};
use crate::config::StimulusConfig;
use crate::error::{Error, Result};
use crate::response_data::{counts_table, Dataset, TRIALS_PER_MANIFOLD};
use crate::soft_labels::{cosine_similarity, slp_similarity_matrix, SlpCatalog, N_CLASSES};
use crate::stats::{
    agreement_report, binomial_test_greater, bonferroni, chi_squared_test, mse_and_r2, pearson_r,
    upper_triangular, AgreementReport, ContingencyTable, TestResult,
};

pub const CHANCE: f64 = 1.0 / N_CLASSES as f64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlpTest {
    pub slp_id: u32,
    pub n_trials: u64,
    /// Position × species counts after dropping empty rows and columns.
    pub table: ContingencyTable,
    pub result: Option<TestResult>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinomialSummary {
    pub matches: u64,
    pub trials: u64,
    pub p0: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub model: ModelKind,
    pub mse: f64,
    pub r2_vw: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub slp_id: u32,
    pub scores: Vec<ModelScore>,
    /// Lowest MSE, earliest model on ties.
    pub best: ModelKind,
}

impl ModelComparison {
    pub fn mse(&self, model: ModelKind) -> Option<f64> {
        self.scores.iter().find(|s| s.model == model).map(|s| s.mse)
    }

    /// True when `model` has strictly lower MSE than every other model.
    pub fn strictly_best(&self, model: ModelKind) -> bool {
        let Some(m) = self.mse(model) else { return false };
        self.scores.iter().all(|s| s.model == model || m < s.mse)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub n_sessions: usize,
    pub n_complete_sessions: usize,
    pub n_records: usize,
    pub per_slp: Vec<SlpTest>,
    pub bonferroni_m: usize,
    pub across_slps: Option<TestResult>,
    pub across_slps_note: Option<String>,
    pub agreement: Option<AgreementReport>,
    pub agreement_note: Option<String>,
    pub wsa_binomial: Option<BinomialSummary>,
    pub bsa_binomial: Option<BinomialSummary>,
    pub slp_ids: Vec<u32>,
    pub slp_similarity: Vec<Vec<f64>>,
    /// Cosine similarity of each participant pair's SLPs.
    pub participant_similarity: Vec<Vec<f64>>,
    pub similarity_vs_bsa: Option<Correlation>,
    pub model_comparison: Vec<ModelComparison>,
    pub prototype_strictly_best: usize,
}

fn describe(e: &Error) -> String {
    e.to_string()
}

pub fn analyze(dataset: &Dataset, catalog: &SlpCatalog, stimuli: &StimulusConfig) -> Result<AnalysisReport> {
    if dataset.records().is_empty() {
        return Err(Error::InvalidArgument("dataset has no trials".into()));
    }
    let position_labels: Vec<String> = (0..TRIALS_PER_MANIFOLD).map(|i| format!("pos{i:02}")).collect();
    let [t_d1, t_d2] = stimuli.labeled_positions;
    let positions: Vec<f64> = (0..TRIALS_PER_MANIFOLD)
        .map(|i| i as f64 / (TRIALS_PER_MANIFOLD - 1) as f64)
        .collect();

    let mut per_slp = Vec::new();
    let mut model_comparison = Vec::new();
    for slp in catalog.entries() {
        let counts = match dataset.distribution_by_position(slp.id, catalog) {
            Ok(c) => c,
            Err(Error::NotFound(_)) => continue,
            Err(e) => return Err(e),
        };
        let table = counts_table(&counts, position_labels.clone())?.drop_empty();
        let (result, note) = match chi_squared_test(&table) {
            Ok(r) => (Some(r), None),
            Err(e @ Error::DegenerateTable(_)) => (None, Some(describe(&e))),
            Err(e) => return Err(e),
        };
        per_slp.push(SlpTest {
            slp_id: slp.id,
            n_trials: table.total(),
            table,
            result,
            note,
        });

        let observed: Vec<usize> = (0..TRIALS_PER_MANIFOLD)
            .filter(|&i| counts[i].iter().sum::<u64>() > 0)
            .collect();
        let empirical: Vec<[f64; N_CLASSES]> = observed
            .iter()
            .map(|&i| {
                let n = counts[i].iter().sum::<u64>() as f64;
                counts[i].map(|c| c as f64 / n)
            })
            .collect();
        let mut scores = Vec::new();
        for kind in ModelKind::ALL {
            let model = ConditionModel::fit(kind, slp, t_d1, t_d2)?;
            let predicted: Vec<[f64; N_CLASSES]> = observed
                .iter()
                .map(|&i| model.predict(positions[i]).map(|p| *p.probs()))
                .collect::<Result<_>>()?;
            let (mse, r2_vw) = match mse_and_r2(&predicted, &empirical) {
                Ok((m, r)) => (m, Some(r)),
                Err(Error::UndefinedR2) => {
                    let sq: f64 = predicted
                        .iter()
                        .zip(&empirical)
                        .flat_map(|(p, e)| p.iter().zip(e).map(|(a, b)| (a - b) * (a - b)))
                        .sum();
                    (sq / (predicted.len() * N_CLASSES) as f64, None)
                }
                Err(Error::InvalidArgument(_)) => continue,
                Err(e) => return Err(e),
            };
            scores.push(ModelScore {
                model: kind,
                mse,
                r2_vw,
            });
        }
        if let Some(best) = scores
            .iter()
            .fold(None::<&ModelScore>, |b, s| match b {
                Some(b) if b.mse <= s.mse => Some(b),
                _ => Some(s),
            })
            .map(|s| s.model)
        {
            model_comparison.push(ModelComparison {
                slp_id: slp.id,
                scores,
                best,
            });
        }
    }

    let tested: Vec<usize> = (0..per_slp.len())
        .filter(|&i| per_slp[i].result.is_some())
        .collect();
    let ps: Vec<f64> = tested
        .iter()
        .map(|&i| per_slp[i].result.as_ref().unwrap().p_value)
        .collect();
    let corrected = bonferroni(&ps, ps.len())?;
    for (&i, c) in tested.iter().zip(corrected) {
        per_slp[i].result.as_mut().unwrap().corrected_p = Some(c);
    }

    let slp_labels: Vec<String> = catalog.ids().map(|id| format!("slp{id}")).collect();
    let across = counts_table(&dataset.aggregate_by_slp(catalog), slp_labels)?.drop_empty();
    let (across_slps, across_slps_note) = match chi_squared_test(&across) {
        Ok(r) => (Some(r), None),
        Err(e @ Error::DegenerateTable(_)) => (None, Some(describe(&e))),
        Err(e) => return Err(e),
    };

    let participants = dataset.participants();
    let (agreement, agreement_note) = match agreement_report(&participants) {
        Ok(r) => (Some(r), None),
        Err(e @ Error::InvalidArgument(_)) => (None, Some(describe(&e))),
        Err(e) => return Err(e),
    };
    let binomial = |matches: u64, trials: u64| -> Result<Option<BinomialSummary>> {
        if trials == 0 {
            return Ok(None);
        }
        Ok(Some(BinomialSummary {
            matches,
            trials,
            p0: CHANCE,
            p_value: binomial_test_greater(matches, trials, CHANCE)?,
        }))
    };
    let (wsa_binomial, bsa_binomial) = match &agreement {
        Some(a) => (
            binomial(a.wsa_matches, a.wsa_trials)?,
            binomial(a.bsa_matches, a.bsa_trials)?,
        ),
        None => (None, None),
    };

    let slp_similarity = slp_similarity_matrix(catalog, 1)?;
    let flat: Vec<[f64; 6]> = participants
        .iter()
        .map(|p| catalog.get(p.slp_id).map(|s| s.flatten()))
        .collect::<Result<_>>()?;
    let participant_similarity: Vec<Vec<f64>> = (0..flat.len())
        .map(|i| {
            (0..flat.len())
                .map(|j| {
                    if i == j {
                        Ok(1.0)
                    } else {
                        cosine_similarity(&flat[i], &flat[j])
                    }
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let similarity_vs_bsa = agreement.as_ref().and_then(|a| {
        let x = upper_triangular(&participant_similarity);
        let y = upper_triangular(&a.bsa_matrix);
        pearson_r(&x, &y).ok().map(|(r, n)| Correlation { r, n })
    });

    let prototype_strictly_best = model_comparison
        .iter()
        .filter(|c| c.strictly_best(ModelKind::Prototype))
        .count();

    Ok(AnalysisReport {
        n_sessions: dataset.sessions().len(),
        n_complete_sessions: participants.len(),
        n_records: dataset.records().len(),
        bonferroni_m: ps.len(),
        per_slp,
        across_slps,
        across_slps_note,
        agreement,
        agreement_note,
        wsa_binomial,
        bsa_binomial,
        slp_ids: catalog.ids().collect(),
        slp_similarity,
        participant_similarity,
        similarity_vs_bsa,
        model_comparison,
        prototype_strictly_best,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"))
}

fn opt_e(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6e}"))
}

impl AnalysisReport {
    /// `key: value` lines, one fact per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let w = &mut s;
        let _ = writeln!(w, "sessions: {}", self.n_sessions);
        let _ = writeln!(w, "complete_sessions: {}", self.n_complete_sessions);
        let _ = writeln!(w, "trials: {}", self.n_records);
        let _ = writeln!(w, "bonferroni_m: {}", self.bonferroni_m);
        for t in &self.per_slp {
            match &t.result {
                Some(r) => {
                    let _ = writeln!(
                        w,
                        "slp.{}.chi2: statistic={:.4} df={} p={:.6e} p_bonferroni={} low_expected={} n={}",
                        t.slp_id,
                        r.statistic,
                        r.df,
                        r.p_value,
                        opt_e(r.corrected_p),
                        r.low_expected,
                        t.n_trials
                    );
                }
                None => {
                    let _ = writeln!(
                        w,
                        "slp.{}.chi2: untestable ({}) n={}",
                        t.slp_id,
                        t.note.as_deref().unwrap_or(""),
                        t.n_trials
                    );
                }
            }
        }
        match &self.across_slps {
            Some(r) => {
                let _ = writeln!(
                    w,
                    "across_slps.chi2: statistic={:.4} df={} p={:.6e} low_expected={}",
                    r.statistic, r.df, r.p_value, r.low_expected
                );
            }
            None => {
                let _ = writeln!(
                    w,
                    "across_slps.chi2: untestable ({})",
                    self.across_slps_note.as_deref().unwrap_or("")
                );
            }
        }
        match &self.agreement {
            Some(a) => {
                let _ = writeln!(w, "wsa.mean: {:.6}", a.mean_wsa);
                let _ = writeln!(w, "wsa.matches: {}/{}", a.wsa_matches, a.wsa_trials);
                let _ = writeln!(w, "bsa.mean_within_slp: {:.6}", a.mean_bsa);
                let _ = writeln!(w, "bsa.within_slp_pairs: {}", a.within_slp_pairs);
                let _ = writeln!(w, "bsa.matches: {}/{}", a.bsa_matches, a.bsa_trials);
                let _ = writeln!(w, "bsa.mean_all_pairs: {:.6}", a.mean_bsa_all_pairs);
            }
            None => {
                let _ = writeln!(
                    w,
                    "agreement: unavailable ({})",
                    self.agreement_note.as_deref().unwrap_or("")
                );
            }
        }
        if let Some(b) = &self.wsa_binomial {
            let _ = writeln!(w, "wsa.binomial_p: {:.6e}", b.p_value);
        }
        if let Some(b) = &self.bsa_binomial {
            let _ = writeln!(w, "bsa.binomial_p: {:.6e}", b.p_value);
        }
        match &self.similarity_vs_bsa {
            Some(c) => {
                let _ = writeln!(w, "similarity_vs_bsa.pearson_r: {:.6}", c.r);
                let _ = writeln!(w, "similarity_vs_bsa.n: {}", c.n);
            }
            None => {
                let _ = writeln!(w, "similarity_vs_bsa.pearson_r: NA");
            }
        }
        for c in &self.model_comparison {
            for sc in &c.scores {
                let _ = writeln!(
                    w,
                    "slp.{}.model.{}: mse={:.6} r2_vw={}",
                    c.slp_id,
                    sc.model.short_name(),
                    sc.mse,
                    opt(sc.r2_vw)
                );
            }
            let _ = writeln!(w, "slp.{}.best_model: {}", c.slp_id, c.best.short_name());
        }
        for kind in ModelKind::ALL {
            let m: Vec<f64> = self.model_comparison.iter().filter_map(|c| c.mse(kind)).collect();
            if !m.is_empty() {
                let _ = writeln!(
                    w,
                    "model.{}.mean_mse: {:.6}",
                    kind.short_name(),
                    m.iter().sum::<f64>() / m.len() as f64
                );
            }
        }
        let _ = writeln!(
            w,
            "prototype_strictly_best: {}/{}",
            self.prototype_strictly_best,
            self.model_comparison.len()
        );
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Participant BSA matrix as CSV with a header row of session ids.
    pub fn bsa_matrix_csv(&self) -> Option<String> {
        let a = self.agreement.as_ref()?;
        Some(matrix_csv(&a.participant_ids, &a.bsa_matrix))
    }

    pub fn participant_similarity_csv(&self) -> Option<String> {
        let a = self.agreement.as_ref()?;
        Some(matrix_csv(&a.participant_ids, &self.participant_similarity))
    }

    pub fn slp_similarity_csv(&self) -> String {
        let ids: Vec<String> = self.slp_ids.iter().map(|i| format!("slp{i}")).collect();
        matrix_csv(&ids, &self.slp_similarity)
    }
}

fn matrix_csv(labels: &[String], m: &[Vec<f64>]) -> String {
    let mut s = String::from("id");
    for l in labels {
        s.push(',');
        s.push_str(l);
    }
    s.push('\n');
    for (l, row) in labels.iter().zip(m) {
        s.push_str(l);
        for v in row {
            let _ = write!(s, ",{v:.6}");
        }
        s.push('\n');
    }
    s
}
