//! Parameter-free categorization models over manifold coordinates.
//!
//! All three models are distance-weighted nearest-neighbour rules: a label's
//! weight is the inverse square of its distance to the target, and the
//! weighted sum is normalized to a distribution. A target that coincides with
//! one or more labeled points takes the mean of those labels instead.
//!
//! * [`ModelKind::Exemplar1NN`] copies the nearest labeled figure.
//! * [`ModelKind::Exemplar2NN`] mixes both labeled figures.
//! * [`ModelKind::Prototype`] fits one hard-label prototype per class on the
//!   manifold line, then mixes the three prototypes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::soft_labels::{SoftLabel, SoftLabelPair, N_CLASSES};
use crate::stimulus::Manifold;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledExemplar {
    pub t: f64,
    pub label: SoftLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    Prototype,
    Exemplar1NN,
    Exemplar2NN,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [
        ModelKind::Prototype,
        ModelKind::Exemplar1NN,
        ModelKind::Exemplar2NN,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            ModelKind::Prototype => "proto",
            ModelKind::Exemplar1NN => "1nn",
            ModelKind::Exemplar2NN => "2nn",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proto" | "prototype" => Ok(ModelKind::Prototype),
            "1nn" => Ok(ModelKind::Exemplar1NN),
            "2nn" => Ok(ModelKind::Exemplar2NN),
            _ => Err(Error::InvalidArgument(format!(
                "unknown model `{s}` (expected proto, 1nn, or 2nn)"
            ))),
        }
    }
}

/// Distance on the manifold coordinate. Range-scaled Euclidean distance
/// between manifold stimuli is this times a constant, and the normalized
/// inverse-square weights do not see the constant.
pub fn coordinate_distance(a: f64, b: f64) -> f64 {
    (a - b).abs()
}

fn checked_distance(distance: &impl Fn(f64, f64) -> f64, a: f64, b: f64) -> Result<f64> {
    let d = distance(a, b);
    if d.is_finite() && d >= 0.0 {
        Ok(d)
    } else {
        Err(Error::InvalidArgument(format!("distance({a}, {b}) = {d}")))
    }
}

fn mean_label<'a>(labels: impl Iterator<Item = &'a SoftLabel>) -> SoftLabel {
    let mut sum = [0.0; N_CLASSES];
    let mut n = 0usize;
    for l in labels {
        for (s, p) in sum.iter_mut().zip(l.probs()) {
            *s += p;
        }
        n += 1;
    }
    SoftLabel::from_parts(sum.map(|s| s / n as f64))
}

/// Normalized inverse-square-distance mixture of the `k` nearest labels.
/// Distance ties at the k-th place go to the earlier exemplar.
pub fn weighted_knn_predict(
    exemplars: &[LabeledExemplar],
    t_target: f64,
    k: usize,
    distance: impl Fn(f64, f64) -> f64,
) -> Result<SoftLabel> {
    if exemplars.is_empty() {
        return Err(Error::InvalidArgument("no exemplars".into()));
    }
    if k == 0 || k > exemplars.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} with {} exemplars",
            exemplars.len()
        )));
    }
    let mut ranked = Vec::with_capacity(exemplars.len());
    for (i, e) in exemplars.iter().enumerate() {
        ranked.push((checked_distance(&distance, e.t, t_target)?, i));
    }
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    if ranked[0].0 == 0.0 {
        return Ok(mean_label(
            ranked
                .iter()
                .take_while(|(d, _)| *d == 0.0)
                .map(|&(_, i)| &exemplars[i].label),
        ));
    }

    let mut mix = [0.0; N_CLASSES];
    let mut total = 0.0;
    for &(d, i) in &ranked[..k] {
        let w = 1.0 / (d * d);
        total += w;
        for (m, p) in mix.iter_mut().zip(exemplars[i].label.probs()) {
            *m += w * p;
        }
    }
    Ok(SoftLabel::from_parts(mix.map(|m| m / total)))
}

/// Copies the nearest exemplar's label; exact distance ties are averaged.
pub fn exemplar_1nn_predict(
    exemplars: &[LabeledExemplar],
    t_target: f64,
    distance: impl Fn(f64, f64) -> f64,
) -> Result<SoftLabel> {
    if exemplars.is_empty() {
        return Err(Error::InvalidArgument("no exemplars".into()));
    }
    let mut dists = Vec::with_capacity(exemplars.len());
    for e in exemplars {
        dists.push(checked_distance(&distance, e.t, t_target)?);
    }
    let nearest = dists.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(mean_label(
        exemplars
            .iter()
            .zip(&dists)
            .filter(|(_, &d)| d == nearest)
            .map(|(e, _)| &e.label),
    ))
}

/// One hard-label prototype per class; prototype `k` carries one-hot `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrototypeSet {
    positions: [f64; N_CLASSES],
}

impl PrototypeSet {
    pub fn new(positions: [f64; N_CLASSES]) -> Result<Self> {
        if positions.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "prototype positions {positions:?} must be finite"
            )));
        }
        Ok(Self { positions })
    }

    pub fn positions(&self) -> [f64; N_CLASSES] {
        self.positions
    }

    pub fn labels(&self) -> [SoftLabel; N_CLASSES] {
        [0, 1, 2].map(SoftLabel::one_hot)
    }

    pub fn exemplars(&self) -> [LabeledExemplar; N_CLASSES] {
        [0, 1, 2].map(|k| LabeledExemplar {
            t: self.positions[k],
            label: SoftLabel::one_hot(k),
        })
    }
}

/// Distance-weighted 3-NN over the prototypes.
pub fn prototype_predict(
    protos: &PrototypeSet,
    t_target: f64,
    distance: impl Fn(f64, f64) -> f64,
) -> Result<SoftLabel> {
    weighted_knn_predict(&protos.exemplars(), t_target, N_CLASSES, distance)
}

/// Search settings for [`fit_prototypes_with`]. Positions live on a lattice of
/// `1 / resolution`; the coarse grid and the refinement steps are multiples of it.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub resolution: i64,
    pub lower: i64,
    pub upper: i64,
    pub grid_step: i64,
    pub refine_steps: Vec<i64>,
}

impl Default for FitOptions {
    /// Range [-0.5, 1.5], grid step 0.01, refinement at 0.001 then 0.0001.
    fn default() -> Self {
        Self {
            resolution: 10_000,
            lower: -5_000,
            upper: 15_000,
            grid_step: 100,
            refine_steps: vec![10, 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeFit {
    pub prototypes: PrototypeSet,
    pub objective: f64,
    /// Best point of the coarse grid, before refinement.
    pub grid_positions: [f64; N_CLASSES],
    pub grid_objective: f64,
}

/// Fits prototypes with the default search; see [`fit_prototypes_with`].
pub fn fit_prototypes(
    slp: &SoftLabelPair,
    t_d1: f64,
    t_d2: f64,
    distance: impl Fn(f64, f64) -> f64,
) -> Result<PrototypeSet> {
    Ok(fit_prototypes_with(slp, t_d1, t_d2, distance, &FitOptions::default())?.prototypes)
}

/// Least-squares prototype placement.
///
/// Minimizes the squared error between the prototypes' 3-NN prediction and the
/// given soft label at both labeled points. The search is exhaustive over the
/// coarse grid (first strict minimum in lexicographic order of positions),
/// followed by best-improvement coordinate descent at each refinement step.
///
/// A class with zero probability in both labels is pinned to whichever range
/// boundary is farthest from the labeled points and is not searched.
pub fn fit_prototypes_with(
    slp: &SoftLabelPair,
    t_d1: f64,
    t_d2: f64,
    distance: impl Fn(f64, f64) -> f64,
    options: &FitOptions,
) -> Result<PrototypeFit> {
    if !(t_d1.is_finite() && t_d2.is_finite()) {
        return Err(Error::InvalidArgument("labeled positions must be finite".into()));
    }
    let separation = checked_distance(&distance, t_d1, t_d2)?;
    if separation == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "labeled positions {t_d1} and {t_d2} coincide"
        )));
    }
    if options.resolution <= 0
        || options.grid_step <= 0
        || options.lower >= options.upper
        || options.refine_steps.iter().any(|&s| s <= 0)
    {
        return Err(Error::InvalidArgument(format!("bad fit options {options:?}")));
    }

    let res = options.resolution as f64;
    let to_pos = |u: i64| u as f64 / res;
    let points = [t_d1, t_d2];
    let targets = [*slp.d1.probs(), *slp.d2.probs()];

    // Candidate lattice coordinates per class.
    let pinned: [Option<i64>; N_CLASSES] = std::array::from_fn(|k| {
        (targets[0][k] == 0.0 && targets[1][k] == 0.0).then(|| {
            let gap = |u: i64| {
                let p = to_pos(u);
                distance(p, t_d1).min(distance(p, t_d2))
            };
            if gap(options.upper) > gap(options.lower) {
                options.upper
            } else {
                options.lower
            }
        })
    });
    let grid: Vec<i64> = (options.lower..=options.upper)
        .step_by(options.grid_step as usize)
        .collect();
    let candidates: [Vec<i64>; N_CLASSES] =
        std::array::from_fn(|k| pinned[k].map_or_else(|| grid.clone(), |u| vec![u]));

    // dist[k][j][i]: distance from candidate i of class k to labeled point j.
    let mut dist: [[Vec<f64>; 2]; N_CLASSES] = Default::default();
    for k in 0..N_CLASSES {
        for j in 0..2 {
            let mut row = Vec::with_capacity(candidates[k].len());
            for &u in &candidates[k] {
                row.push(checked_distance(&distance, to_pos(u), points[j])?);
            }
            dist[k][j] = row;
        }
    }

    let mut best = ([0usize; N_CLASSES], f64::INFINITY);
    for a in 0..candidates[0].len() {
        for b in 0..candidates[1].len() {
            for c in 0..candidates[2].len() {
                let d = [
                    [dist[0][0][a], dist[1][0][b], dist[2][0][c]],
                    [dist[0][1][a], dist[1][1][b], dist[2][1][c]],
                ];
                let obj = score(&d, &targets);
                if obj < best.1 {
                    best = ([a, b, c], obj);
                }
            }
        }
    }
    let grid_units: [i64; N_CLASSES] = std::array::from_fn(|k| candidates[k][best.0[k]]);
    let grid_objective = best.1;

    let evaluate = |units: &[i64; N_CLASSES]| -> Result<f64> {
        let mut d = [[0.0; N_CLASSES]; 2];
        for (j, row) in d.iter_mut().enumerate() {
            for (k, v) in row.iter_mut().enumerate() {
                *v = checked_distance(&distance, to_pos(units[k]), points[j])?;
            }
        }
        Ok(score(&d, &targets))
    };

    let mut units = grid_units;
    let mut current = evaluate(&units)?;
    for &step in &options.refine_steps {
        loop {
            let mut best_move: Option<([i64; N_CLASSES], f64)> = None;
            for k in (0..N_CLASSES).filter(|&k| pinned[k].is_none()) {
                for delta in [-step, step] {
                    let u = units[k] + delta;
                    if u < options.lower || u > options.upper {
                        continue;
                    }
                    let mut trial = units;
                    trial[k] = u;
                    let obj = evaluate(&trial)?;
                    if obj < best_move.map_or(current, |m| m.1) {
                        best_move = Some((trial, obj));
                    }
                }
            }
            match best_move {
                Some((next, obj)) => {
                    units = next;
                    current = obj;
                }
                None => break,
            }
        }
    }

    Ok(PrototypeFit {
        prototypes: PrototypeSet::new(units.map(to_pos))?,
        objective: current,
        grid_positions: grid_units.map(to_pos),
        grid_objective,
    })
}

/// Squared error of the prototype mixture at both labeled points.
/// `d[j][k]` is the distance from prototype `k` to labeled point `j`.
fn score(d: &[[f64; N_CLASSES]; 2], targets: &[[f64; N_CLASSES]; 2]) -> f64 {
    let mut total = 0.0;
    for j in 0..2 {
        let pred = mix_one_hots(&d[j]);
        for k in 0..N_CLASSES {
            let e = pred[k] - targets[j][k];
            total += e * e;
        }
    }
    total
}

fn mix_one_hots(d: &[f64; N_CLASSES]) -> [f64; N_CLASSES] {
    if d.contains(&0.0) {
        let hits = d.iter().filter(|&&v| v == 0.0).count() as f64;
        return d.map(|v| if v == 0.0 { 1.0 / hits } else { 0.0 });
    }
    let w = d.map(|v| 1.0 / (v * v));
    let total = w[0] + w[1] + w[2];
    w.map(|x| x / total)
}

/// A model bound to one condition, ready to predict anywhere on the manifold.
#[derive(Debug, Clone, PartialEq)]
pub enum ConditionModel {
    Prototype(PrototypeSet),
    Exemplar1NN([LabeledExemplar; 2]),
    Exemplar2NN([LabeledExemplar; 2]),
}

impl ConditionModel {
    pub fn fit(kind: ModelKind, slp: &SoftLabelPair, t_d1: f64, t_d2: f64) -> Result<Self> {
        let exemplars = [
            LabeledExemplar {
                t: t_d1,
                label: slp.d1,
            },
            LabeledExemplar {
                t: t_d2,
                label: slp.d2,
            },
        ];
        Ok(match kind {
            ModelKind::Prototype => {
                ConditionModel::Prototype(fit_prototypes(slp, t_d1, t_d2, coordinate_distance)?)
            }
            ModelKind::Exemplar1NN => ConditionModel::Exemplar1NN(exemplars),
            ModelKind::Exemplar2NN => ConditionModel::Exemplar2NN(exemplars),
        })
    }

    pub fn predict(&self, t: f64) -> Result<SoftLabel> {
        match self {
            ConditionModel::Prototype(p) => prototype_predict(p, t, coordinate_distance),
            ConditionModel::Exemplar1NN(e) => exemplar_1nn_predict(e, t, coordinate_distance),
            ConditionModel::Exemplar2NN(e) => weighted_knn_predict(e, t, 2, coordinate_distance),
        }
    }

    pub fn distribution(&self, positions: &[f64]) -> Result<Vec<SoftLabel>> {
        positions.iter().map(|&t| self.predict(t)).collect()
    }
}

/// The model's predicted label at every manifold position.
pub fn manifold_distribution(
    model: ModelKind,
    slp: &SoftLabelPair,
    t_d1: f64,
    t_d2: f64,
    manifold: &Manifold,
) -> Result<Vec<SoftLabel>> {
    ConditionModel::fit(model, slp, t_d1, t_d2)?.distribution(manifold.positions())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soft_labels::SlpCatalog;
    use proptest::prelude::*;

    fn slp1_exemplars() -> [LabeledExemplar; 2] {
        let slp = *SlpCatalog::builtin().get(1).unwrap();
        [
            LabeledExemplar {
                t: 0.0,
                label: slp.d1,
            },
            LabeledExemplar {
                t: 1.0,
                label: slp.d2,
            },
        ]
    }

    fn close(a: &SoftLabel, b: [f64; 3], tol: f64) -> bool {
        a.probs().iter().zip(&b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn weighted_knn_hand_cases() {
        let ex = slp1_exemplars();
        let mid = weighted_knn_predict(&ex, 0.5, 2, coordinate_distance).unwrap();
        assert!(close(&mid, [0.125, 0.25, 0.625], 1e-12));
        let quarter = weighted_knn_predict(&ex, 0.25, 2, coordinate_distance).unwrap();
        assert!(close(&quarter, [0.025, 0.05, 0.925], 1e-12));
        let exact = weighted_knn_predict(&ex, 1.0, 2, coordinate_distance).unwrap();
        assert_eq!(exact, ex[1].label);
    }

    #[test]
    fn weighted_knn_errors() {
        assert!(weighted_knn_predict(&[], 0.5, 1, coordinate_distance).is_err());
        let ex = slp1_exemplars();
        assert!(weighted_knn_predict(&ex, 0.5, 3, coordinate_distance).is_err());
        assert!(weighted_knn_predict(&ex, 0.5, 0, coordinate_distance).is_err());
        assert!(weighted_knn_predict(&ex, 0.5, 2, |_, _| f64::NAN).is_err());
    }

    #[test]
    fn knn_uses_only_k_nearest() {
        let ex = [
            LabeledExemplar {
                t: 0.0,
                label: SoftLabel::one_hot(0),
            },
            LabeledExemplar {
                t: 0.1,
                label: SoftLabel::one_hot(1),
            },
            LabeledExemplar {
                t: 0.9,
                label: SoftLabel::one_hot(2),
            },
        ];
        let p = weighted_knn_predict(&ex, 0.05, 2, coordinate_distance).unwrap();
        assert_eq!(p.probs()[2], 0.0);
        assert!((p.probs()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn one_nn_copies_and_averages_ties() {
        let ex = slp1_exemplars();
        assert_eq!(
            exemplar_1nn_predict(&ex, 0.2, coordinate_distance).unwrap(),
            ex[0].label
        );
        assert_eq!(
            exemplar_1nn_predict(&ex, 1.0, coordinate_distance).unwrap(),
            ex[1].label
        );
        let tie = exemplar_1nn_predict(&ex, 0.5, coordinate_distance).unwrap();
        assert!(close(&tie, [0.125, 0.25, 0.625], 1e-15));
        assert!(exemplar_1nn_predict(&[], 0.5, coordinate_distance).is_err());
    }

    #[test]
    fn prototype_predict_cases() {
        let protos = PrototypeSet::new([0.0, 0.5, 1.0]).unwrap();
        // Inverse-square weights 16, 16, 16/9 normalize to 9/19, 9/19, 1/19.
        let p = prototype_predict(&protos, 0.25, coordinate_distance).unwrap();
        assert!(close(&p, [9.0 / 19.0, 9.0 / 19.0, 1.0 / 19.0], 1e-12));
        assert_eq!(p.probs()[0], p.probs()[1]);
        let at = prototype_predict(&protos, 0.5, coordinate_distance).unwrap();
        assert_eq!(at, SoftLabel::one_hot(1));
    }

    #[test]
    fn equal_distances_give_mean_label() {
        let ex = [
            LabeledExemplar {
                t: 0.0,
                label: SoftLabel::new([0.5, 0.5, 0.0]).unwrap(),
            },
            LabeledExemplar {
                t: 1.0,
                label: SoftLabel::new([0.0, 0.25, 0.75]).unwrap(),
            },
        ];
        let p = weighted_knn_predict(&ex, 0.5, 2, coordinate_distance).unwrap();
        assert!(close(&p, [0.25, 0.375, 0.375], 1e-15));
    }

    #[test]
    fn limit_at_exemplar() {
        let ex = slp1_exemplars();
        let near = weighted_knn_predict(&ex, 1e-6, 2, coordinate_distance).unwrap();
        assert!(close(&near, *ex[0].label.probs(), 1e-10));
    }

    #[test]
    fn fit_rejects_coincident_points() {
        let slp = SlpCatalog::builtin().get(1).unwrap().to_owned();
        assert!(matches!(
            fit_prototypes(&slp, 0.4, 0.4, coordinate_distance),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn zero_mass_class_pinned_to_far_boundary() {
        let slp = SoftLabelPair {
            id: 0,
            d1: SoftLabel::new([0.0, 0.25, 0.75]).unwrap(),
            d2: SoftLabel::new([0.0, 0.75, 0.25]).unwrap(),
        };
        let fit = fit_prototypes(&slp, 0.25, 0.75, coordinate_distance).unwrap();
        // Both boundaries are 0.75 from the nearer point; the lower one wins the tie.
        assert_eq!(fit.positions()[0], -0.5);
        let fit = fit_prototypes(&slp, 0.1, 0.3, coordinate_distance).unwrap();
        assert_eq!(fit.positions()[0], 1.5);
    }

    #[test]
    fn class_swap_permutes_positions() {
        let catalog = SlpCatalog::builtin();
        let slp = *catalog.get(9).unwrap();
        let swap = |l: SoftLabel| {
            let p = l.probs();
            SoftLabel::new([p[1], p[0], p[2]]).unwrap()
        };
        let swapped = SoftLabelPair {
            id: 0,
            d1: swap(slp.d1),
            d2: swap(slp.d2),
        };
        let opts = FitOptions::default();
        let a = fit_prototypes_with(&slp, 0.25, 0.75, coordinate_distance, &opts).unwrap();
        let b = fit_prototypes_with(&swapped, 0.25, 0.75, coordinate_distance, &opts).unwrap();
        let pa = a.prototypes.positions();
        let pb = b.prototypes.positions();
        assert_eq!([pa[1], pa[0], pa[2]], pb);
        assert!((a.objective - b.objective).abs() < 1e-15);
    }

    #[test]
    fn exemplar_rows_at_labeled_points_equal_labels() {
        let catalog = SlpCatalog::builtin();
        let slp = catalog.get(5).unwrap();
        let m = ConditionModel::fit(ModelKind::Exemplar1NN, slp, 0.25, 0.75).unwrap();
        assert_eq!(m.predict(0.25).unwrap(), slp.d1);
        assert_eq!(m.predict(0.75).unwrap(), slp.d2);
    }

    #[test]
    fn model_names_parse() {
        for kind in ModelKind::ALL {
            assert_eq!(kind.short_name().parse::<ModelKind>().unwrap(), kind);
        }
        assert!("3nn".parse::<ModelKind>().is_err());
    }

    fn soft_label() -> impl Strategy<Value = SoftLabel> {
        (0u32..=4, 0u32..=4).prop_filter_map("sum", |(a, b)| {
            (a + b <= 4)
                .then(|| SoftLabel::new([a as f64 / 4.0, b as f64 / 4.0, (4 - a - b) as f64 / 4.0]).unwrap())
        })
    }

    proptest! {
        #[test]
        fn outputs_are_distributions(
            l1 in soft_label(), l2 in soft_label(),
            t1 in 0.0f64..1.0, t2 in 0.0f64..1.0, target in 0.0f64..1.0,
        ) {
            let ex = [LabeledExemplar { t: t1, label: l1 }, LabeledExemplar { t: t2, label: l2 }];
            for p in [
                weighted_knn_predict(&ex, target, 2, coordinate_distance).unwrap(),
                weighted_knn_predict(&ex, target, 1, coordinate_distance).unwrap(),
                exemplar_1nn_predict(&ex, target, coordinate_distance).unwrap(),
            ] {
                prop_assert!(p.probs().iter().all(|&x| x >= 0.0));
                prop_assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn mirror_symmetry(
            l1 in soft_label(), l2 in soft_label(),
            t1 in 0.0f64..1.0, t2 in 0.0f64..1.0, target in 0.0f64..1.0,
        ) {
            let ex = [LabeledExemplar { t: t1, label: l1 }, LabeledExemplar { t: t2, label: l2 }];
            let mirrored = ex.map(|e| LabeledExemplar { t: 1.0 - e.t, ..e });
            let a = weighted_knn_predict(&ex, target, 2, coordinate_distance).unwrap();
            let b = weighted_knn_predict(&mirrored, 1.0 - target, 2, coordinate_distance).unwrap();
            for k in 0..3 {
                prop_assert!((a.probs()[k] - b.probs()[k]).abs() < 1e-6);
            }
        }
    }
}
