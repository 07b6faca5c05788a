//! Random-forest prediction of trial responses from condition features.
//!
//! Each trial becomes a 9-vector `[t_d1, t_d2, d1 probs ×3, d2 probs ×3,
//! t_target]` with manifold coordinates normalized to `[0, 1]`. Trees split on
//! Gini impurity over all nine features at every node, grow until leaves are
//! pure or hold fewer than two samples, and train on a bootstrap resample of
//! the data. Forest probabilities are leaf class frequencies averaged across
//! trees.
//!
//! Training collapses identical (features, class) rows into weighted rows.
//! Split scores, thresholds, and leaf frequencies depend only on those
//! weights, so the result equals training on the expanded sample.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::response_data::{position_index, Dataset, TrialRecord, TRIALS_PER_MANIFOLD};
use crate::soft_labels::{argmax, SlpCatalog, SoftLabel, SoftLabelPair, N_CLASSES};
use crate::stats::mse_and_r2;

pub const N_TRIAL_FEATURES: usize = 9;
pub const DEFAULT_TREES: usize = 20;
pub const MODEL_FORMAT: &str = "loshot-forest";
pub const MODEL_VERSION: u32 = 1;

pub type TrialFeatureVector = [f64; N_TRIAL_FEATURES];

/// A feature vector and its 1-based class.
pub type Example = (TrialFeatureVector, u8);

pub fn featurize_trial(record: &TrialRecord, slp: &SoftLabelPair) -> Result<TrialFeatureVector> {
    if record.slp_id != slp.id {
        return Err(Error::InvalidArgument(format!(
            "record is for SLP {} but SLP {} was given",
            record.slp_id, slp.id
        )));
    }
    let labels = slp.flatten();
    let mut x = [0.0; N_TRIAL_FEATURES];
    x[0] = record.t_d1;
    x[1] = record.t_d2;
    x[2..8].copy_from_slice(&labels);
    x[8] = record.t_target;
    Ok(x)
}

/// Featurized examples for every record in the dataset.
pub fn examples(dataset: &Dataset, catalog: &SlpCatalog) -> Result<Vec<Example>> {
    dataset
        .records()
        .iter()
        .map(|r| Ok((featurize_trial(r, catalog.get(r.slp_id)?)?, r.response)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: [u64; N_CLASSES],
    },
}

/// Nodes stored in preorder; the root is node 0. Samples with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

struct WeightedRow {
    x: TrialFeatureVector,
    class: usize,
    weight: u64,
}

impl DecisionTree {
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        let tree = Self { nodes };
        tree.validate()?;
        Ok(tree)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::InvalidArgument("tree has no nodes".into()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            match *node {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if feature >= N_TRIAL_FEATURES
                        || !threshold.is_finite()
                        || left <= i
                        || right <= i
                        || left >= self.nodes.len()
                        || right >= self.nodes.len()
                    {
                        return Err(Error::InvalidArgument(format!("malformed split node {i}")));
                    }
                }
                Node::Leaf { counts } => {
                    if counts.iter().sum::<u64>() == 0 {
                        return Err(Error::InvalidArgument(format!("empty leaf {i}")));
                    }
                }
            }
        }
        Ok(())
    }

    fn fit(rows: &[WeightedRow]) -> Self {
        let mut nodes = Vec::new();
        let mut idx: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].weight > 0).collect();
        grow(rows, &mut idx, &mut nodes);
        Self { nodes }
    }

    fn leaf(&self, x: &TrialFeatureVector) -> &[u64; N_CLASSES] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
                Node::Leaf { counts } => return counts,
            }
        }
    }

    pub fn predict_proba(&self, x: &TrialFeatureVector) -> [f64; N_CLASSES] {
        let counts = self.leaf(x);
        let total = counts.iter().sum::<u64>() as f64;
        counts.map(|c| c as f64 / total)
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
                Node::Leaf { .. } => 0,
            }
        }
        go(&self.nodes, 0)
    }
}

fn class_counts(rows: &[WeightedRow], idx: &[usize]) -> [u64; N_CLASSES] {
    let mut c = [0u64; N_CLASSES];
    for &i in idx {
        c[rows[i].class] += rows[i].weight;
    }
    c
}

/// Total weight times Gini impurity: w − Σ c²/w.
fn weighted_gini(counts: &[u64; N_CLASSES]) -> f64 {
    let w: u64 = counts.iter().sum();
    if w == 0 {
        return 0.0;
    }
    let sq: f64 = counts.iter().map(|&c| (c as f64) * (c as f64)).sum();
    w as f64 - sq / w as f64
}

struct Split {
    feature: usize,
    threshold: f64,
    score: f64,
}

// Lowest score wins; ties go to the lower feature, then the lower threshold.
fn best_split(rows: &[WeightedRow], idx: &mut [usize], total: &[u64; N_CLASSES]) -> Option<Split> {
    let mut best: Option<Split> = None;
    for f in 0..N_TRIAL_FEATURES {
        idx.sort_by(|&a, &b| rows[a].x[f].total_cmp(&rows[b].x[f]));
        let mut left = [0u64; N_CLASSES];
        for k in 0..idx.len() - 1 {
            let r = &rows[idx[k]];
            left[r.class] += r.weight;
            let (lo, hi) = (r.x[f], rows[idx[k + 1]].x[f]);
            if lo == hi {
                continue;
            }
            let right = std::array::from_fn(|c| total[c] - left[c]);
            let score = weighted_gini(&left) + weighted_gini(&right);
            if best.as_ref().is_none_or(|b| score < b.score) {
                best = Some(Split {
                    feature: f,
                    threshold: lo + (hi - lo) / 2.0,
                    score,
                });
            }
        }
    }
    best
}

fn grow(rows: &[WeightedRow], idx: &mut [usize], nodes: &mut Vec<Node>) -> usize {
    let me = nodes.len();
    let counts = class_counts(rows, idx);
    let weight: u64 = counts.iter().sum();
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    let split = if pure || weight < 2 {
        None
    } else {
        best_split(rows, idx, &counts)
    };
    let Some(split) = split else {
        nodes.push(Node::Leaf { counts });
        return me;
    };
    nodes.push(Node::Leaf { counts }); // placeholder
    let (mut l, mut r): (Vec<usize>, Vec<usize>) = idx
        .iter()
        .partition(|&&i| rows[i].x[split.feature] <= split.threshold);
    let left = grow(rows, &mut l, nodes);
    let right = grow(rows, &mut r, nodes);
    nodes[me] = Node::Split {
        feature: split.feature,
        threshold: split.threshold,
        left,
        right,
    };
    me
}

/// Multiplicity of each row in tree `tree_index`'s bootstrap resample.
pub fn bootstrap_counts(seed: u64, tree_index: usize, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree_index as u64);
    let mut counts = vec![0u64; n];
    for _ in 0..n {
        counts[rng.gen_range(0..n)] += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    seed: u64,
    trees: Vec<DecisionTree>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    #[serde(flatten)]
    forest: Forest,
}

pub fn train_forest(data: &[Example], n_trees: usize, seed: u64) -> Result<Forest> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("no training examples".into()));
    }
    if n_trees == 0 {
        return Err(Error::InvalidArgument("forest needs at least one tree".into()));
    }
    if let Some((_, c)) = data.iter().find(|(_, c)| !(1..=N_CLASSES as u8).contains(c)) {
        return Err(Error::InvalidArgument(format!("class {c} is not in 1-3")));
    }

    // Collapse identical rows; `owner[i]` maps example i to its unique row.
    let mut unique: BTreeMap<([u64; N_TRIAL_FEATURES], u8), usize> = BTreeMap::new();
    let mut rows: Vec<WeightedRow> = Vec::new();
    let mut owner = Vec::with_capacity(data.len());
    for (x, c) in data {
        let key = (x.map(f64::to_bits), *c);
        let id = *unique.entry(key).or_insert_with(|| {
            rows.push(WeightedRow {
                x: *x,
                class: usize::from(c - 1),
                weight: 0,
            });
            rows.len() - 1
        });
        owner.push(id);
    }

    let trees = (0..n_trees)
        .map(|t| {
            for r in rows.iter_mut() {
                r.weight = 0;
            }
            for (i, m) in bootstrap_counts(seed, t, data.len()).into_iter().enumerate() {
                rows[owner[i]].weight += m;
            }
            DecisionTree::fit(&rows)
        })
        .collect();
    Ok(Forest { seed, trees })
}

impl Forest {
    pub fn from_trees(trees: Vec<DecisionTree>, seed: u64) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::InvalidArgument("forest needs at least one tree".into()));
        }
        Ok(Self { seed, trees })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn predict_proba(&self, x: &TrialFeatureVector) -> SoftLabel {
        let mut p = [0.0; N_CLASSES];
        for tree in &self.trees {
            for (acc, v) in p.iter_mut().zip(tree.predict_proba(x)) {
                *acc += v;
            }
        }
        let n = self.trees.len() as f64;
        SoftLabel::from_parts(p.map(|v| v / n))
    }

    /// 1-based class with the highest probability, lowest index on ties.
    pub fn predict_class(&self, x: &TrialFeatureVector) -> u8 {
        argmax(self.predict_proba(x).probs()) as u8 + 1
    }

    pub fn accuracy(&self, data: &[Example]) -> f64 {
        let hits = data.iter().filter(|(x, c)| self.predict_class(x) == *c).count();
        hits as f64 / data.len() as f64
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            forest: self.clone(),
        };
        serde_json::to_string_pretty(&file).expect("forests serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::Parse {
                line: 1,
                message: format!(
                    "unsupported model format {} v{} (expected {MODEL_FORMAT} v{MODEL_VERSION})",
                    file.format, file.version
                ),
            });
        }
        for t in &file.forest.trees {
            t.validate()?;
        }
        Self::from_trees(file.forest.trees, file.forest.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub held_out_slp_id: u32,
    pub n_train: usize,
    pub n_test: usize,
    pub accuracy: f64,
    pub mse: f64,
    /// `None` when the held-out distribution has no variance.
    pub r2_vw: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub n_trees: usize,
    pub seed: u64,
    pub per_fold: Vec<FoldResult>,
    /// Catalog SLPs with no trials in the dataset.
    pub skipped_slp_ids: Vec<u32>,
    pub mean_accuracy: f64,
    pub mean_mse: f64,
    pub mean_r2_vw: Option<f64>,
}

impl CvReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Leave-one-SLP-out cross-validation. Every fold trains a forest with the
/// same seed on all trials of the other SLPs.
pub fn loo_cv_over_slps(
    dataset: &Dataset,
    catalog: &SlpCatalog,
    n_trees: usize,
    seed: u64,
) -> Result<CvReport> {
    let mut by_slp: Vec<(u32, Vec<Example>, Vec<&TrialRecord>)> = Vec::new();
    let mut skipped = Vec::new();
    for slp in catalog.entries() {
        let records: Vec<&TrialRecord> = dataset.records().iter().filter(|r| r.slp_id == slp.id).collect();
        if records.is_empty() {
            skipped.push(slp.id);
            continue;
        }
        let ex = records
            .iter()
            .map(|r| Ok((featurize_trial(r, slp)?, r.response)))
            .collect::<Result<Vec<_>>>()?;
        by_slp.push((slp.id, ex, records));
    }
    if by_slp.len() < 2 {
        return Err(Error::InvalidArgument(
            "cross-validation needs trials from at least two SLPs".into(),
        ));
    }

    let mut per_fold = Vec::with_capacity(by_slp.len());
    for (k, (slp_id, test, records)) in by_slp.iter().enumerate() {
        let train: Vec<Example> = by_slp
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .flat_map(|(_, (_, ex, _))| ex.iter().copied())
            .collect();
        let forest = train_forest(&train, n_trees, seed)?;
        let accuracy = forest.accuracy(test);

        let mut predicted = vec![[0.0; N_CLASSES]; TRIALS_PER_MANIFOLD];
        let mut empirical = vec![[0.0; N_CLASSES]; TRIALS_PER_MANIFOLD];
        let mut n_at = [0usize; TRIALS_PER_MANIFOLD];
        for ((x, c), r) in test.iter().zip(records) {
            let pos = position_index(r.t_target).expect("validated on insert");
            for (acc, v) in predicted[pos].iter_mut().zip(forest.predict_proba(x).probs()) {
                *acc += v;
            }
            empirical[pos][usize::from(c - 1)] += 1.0;
            n_at[pos] += 1;
        }
        let (mut pred_rows, mut emp_rows) = (Vec::new(), Vec::new());
        for pos in (0..TRIALS_PER_MANIFOLD).filter(|&p| n_at[p] > 0) {
            let n = n_at[pos] as f64;
            pred_rows.push(predicted[pos].map(|v| v / n));
            emp_rows.push(empirical[pos].map(|v| v / n));
        }
        let (mse, r2_vw) = match mse_and_r2(&pred_rows, &emp_rows) {
            Ok((m, r)) => (m, Some(r)),
            Err(Error::UndefinedR2) => (mse_only(&pred_rows, &emp_rows), None),
            Err(e) => return Err(e),
        };
        per_fold.push(FoldResult {
            held_out_slp_id: *slp_id,
            n_train: train.len(),
            n_test: test.len(),
            accuracy,
            mse,
            r2_vw,
        });
    }

    let n = per_fold.len() as f64;
    let r2s: Vec<f64> = per_fold.iter().filter_map(|f| f.r2_vw).collect();
    Ok(CvReport {
        n_trees,
        seed,
        mean_accuracy: per_fold.iter().map(|f| f.accuracy).sum::<f64>() / n,
        mean_mse: per_fold.iter().map(|f| f.mse).sum::<f64>() / n,
        mean_r2_vw: (!r2s.is_empty()).then(|| r2s.iter().sum::<f64>() / r2s.len() as f64),
        per_fold,
        skipped_slp_ids: skipped,
    })
}

fn mse_only(pred: &[[f64; N_CLASSES]], emp: &[[f64; N_CLASSES]]) -> f64 {
    let sq: f64 = pred
        .iter()
        .zip(emp)
        .flat_map(|(p, e)| p.iter().zip(e).map(|(a, b)| (a - b) * (a - b)))
        .sum();
    sq / (pred.len() * N_CLASSES) as f64
}
