//! Soft labels, the soft-label pair (SLP) catalog, and SLP similarity.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const N_CLASSES: usize = 3;

const SUM_TOLERANCE: f64 = 1e-9;

pub const CATALOG_TOML: &str = include_str!("../data/slp_catalog.toml");

/// A probability distribution over the three species.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct SoftLabel([f64; N_CLASSES]);

impl SoftLabel {
    pub fn new(probs: [f64; N_CLASSES]) -> Result<Self> {
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidSoftLabel(format!(
                "{probs:?} has a component outside [0, 1]"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidSoftLabel(format!("{probs:?} sums to {sum}")));
        }
        Ok(Self(probs))
    }

    /// One-hot label for a 0-based class index.
    pub fn one_hot(class: usize) -> Self {
        let mut p = [0.0; N_CLASSES];
        p[class] = 1.0;
        Self(p)
    }

    /// Only for values that are distributions by construction.
    pub(crate) fn from_parts(probs: [f64; N_CLASSES]) -> Self {
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-6, "{probs:?}");
        Self(probs)
    }

    pub fn probs(&self) -> &[f64; N_CLASSES] {
        &self.0
    }

    /// 0-based index of the largest probability, lowest index on ties.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }

    /// Probabilities rounded to whole percentages.
    pub fn percentages(&self) -> [u32; N_CLASSES] {
        self.0.map(|p| (p * 100.0).round() as u32)
    }
}

impl TryFrom<[f64; 3]> for SoftLabel {
    type Error = Error;

    fn try_from(p: [f64; 3]) -> Result<Self> {
        Self::new(p)
    }
}

impl From<SoftLabel> for [f64; 3] {
    fn from(s: SoftLabel) -> Self {
        s.0
    }
}

impl fmt::Display for SoftLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.0;
        write!(f, "[{a:.2}, {b:.2}, {c:.2}]")
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Sets the largest probability to 1 and the rest to 0.
pub fn to_hard_label(s: &SoftLabel) -> SoftLabel {
    SoftLabel::one_hot(s.argmax())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftLabelPair {
    pub id: u32,
    pub d1: SoftLabel,
    pub d2: SoftLabel,
}

impl SoftLabelPair {
    /// `[d1.probs, d2.probs]`.
    pub fn flatten(&self) -> [f64; 2 * N_CLASSES] {
        let mut out = [0.0; 2 * N_CLASSES];
        out[..N_CLASSES].copy_from_slice(&self.d1.0);
        out[N_CLASSES..].copy_from_slice(&self.d2.0);
        out
    }

    pub fn labels(&self) -> [SoftLabel; 2] {
        [self.d1, self.d2]
    }
}

// (id, Dinosaur 1 %, Dinosaur 2 %)
const TABLE: [(u32, [u32; 3], [u32; 3]); 14] = [
    (1, [0, 0, 100], [25, 50, 25]),
    (2, [0, 0, 100], [25, 75, 0]),
    (4, [0, 25, 75], [25, 0, 75]),
    (5, [0, 25, 75], [25, 25, 50]),
    (6, [0, 25, 75], [25, 50, 25]),
    (7, [0, 25, 75], [25, 75, 0]),
    (8, [0, 25, 75], [50, 0, 50]),
    (9, [0, 25, 75], [50, 25, 25]),
    (10, [0, 25, 75], [50, 50, 0]),
    (11, [0, 25, 75], [75, 25, 0]),
    (12, [0, 50, 50], [25, 25, 50]),
    (13, [0, 50, 50], [50, 0, 50]),
    (14, [0, 50, 50], [50, 25, 25]),
    (16, [25, 25, 50], [25, 50, 25]),
];

fn from_percent(p: [u32; 3]) -> Result<SoftLabel> {
    if p.iter().sum::<u32>() != 100 {
        return Err(Error::InvalidSoftLabel(format!("{p:?} does not sum to 100%")));
    }
    SoftLabel::new(p.map(|x| f64::from(x) / 100.0))
}

/// The fourteen experimental conditions, keyed by their published ids.
#[derive(Debug, Clone, PartialEq)]
pub struct SlpCatalog {
    entries: Vec<SoftLabelPair>,
}

#[derive(Deserialize)]
struct CatalogFile {
    slp: Vec<CatalogRow>,
}

#[derive(Deserialize)]
struct CatalogRow {
    id: u32,
    dinosaur1: [u32; 3],
    dinosaur2: [u32; 3],
}

impl SlpCatalog {
    pub fn builtin() -> Self {
        let entries = TABLE
            .iter()
            .map(|&(id, a, b)| SoftLabelPair {
                id,
                d1: from_percent(a).expect("table rows are distributions"),
                d2: from_percent(b).expect("table rows are distributions"),
            })
            .collect();
        Self { entries }
    }

    /// Parses a catalog file and checks it against the built-in table.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: CatalogFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut entries = Vec::with_capacity(file.slp.len());
        for row in file.slp {
            if entries.iter().any(|e: &SoftLabelPair| e.id == row.id) {
                return Err(Error::Config(format!("duplicate SLP id {}", row.id)));
            }
            entries.push(SoftLabelPair {
                id: row.id,
                d1: from_percent(row.dinosaur1)?,
                d2: from_percent(row.dinosaur2)?,
            });
        }
        let catalog = Self { entries };
        if catalog != Self::builtin() {
            return Err(Error::Config(
                "catalog file does not match the built-in soft-label pairs".into(),
            ));
        }
        Ok(catalog)
    }

    pub fn entries(&self) -> &[SoftLabelPair] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|e| e.id)
    }

    pub fn get(&self, id: u32) -> Result<&SoftLabelPair> {
        self.entries
            .iter()
            .find(|e| e.id == id)
            .ok_or_else(|| Error::NotFound(format!("SLP {id}")))
    }

    /// Row index of an id in catalog order.
    pub fn index_of(&self, id: u32) -> Option<usize> {
        self.entries.iter().position(|e| e.id == id)
    }
}

/// `u·v / (‖u‖‖v‖)`.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::InvalidArgument(format!(
            "vector lengths differ: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::UndefinedSimilarity);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Pairwise cosine similarity of flattened SLPs raised to `exponent`, in
/// catalog order. Symmetric with a unit diagonal.
pub fn slp_similarity_matrix(catalog: &SlpCatalog, exponent: u32) -> Result<Vec<Vec<f64>>> {
    if exponent == 0 {
        return Err(Error::InvalidArgument("exponent must be at least 1".into()));
    }
    let flat: Vec<_> = catalog.entries.iter().map(SoftLabelPair::flatten).collect();
    let n = flat.len();
    let mut m = vec![vec![1.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let s = cosine_similarity(&flat[i], &flat[j])?.powi(exponent as i32);
            m[i][j] = s;
            m[j][i] = s;
        }
    }
    Ok(m)
}
