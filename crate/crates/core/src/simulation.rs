//! Synthetic participants answering from a model's predicted distribution.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifiers::{ConditionModel, ModelKind};
use crate::config::StimulusConfig;
use crate::error::{Error, Result};
use crate::response_data::{trial_at, Dataset, PresentationOrder, Session, TRIALS_PER_SESSION};
use crate::soft_labels::{SlpCatalog, SoftLabel, N_CLASSES};

pub const DEFAULT_N_PER_SLP: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicyKind {
    ArgmaxWithLapse,
    Sample,
    UniformRandom,
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "argmax" | "argmaxwithlapse" => Ok(PolicyKind::ArgmaxWithLapse),
            "sample" => Ok(PolicyKind::Sample),
            "uniform" | "uniformrandom" => Ok(PolicyKind::UniformRandom),
            _ => Err(Error::InvalidArgument(format!("unknown policy `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponsePolicy {
    pub kind: PolicyKind,
    /// Probability of answering one of the two non-argmax classes.
    pub lapse_rate: f64,
    pub model: ModelKind,
}

impl ResponsePolicy {
    pub fn new(kind: PolicyKind, lapse_rate: f64, model: ModelKind) -> Result<Self> {
        if !(0.0..=1.0).contains(&lapse_rate) {
            return Err(Error::InvalidArgument(format!(
                "lapse rate {lapse_rate} outside [0, 1]"
            )));
        }
        Ok(Self {
            kind,
            lapse_rate,
            model,
        })
    }

    pub fn argmax_with_lapse(lapse_rate: f64, model: ModelKind) -> Result<Self> {
        Self::new(PolicyKind::ArgmaxWithLapse, lapse_rate, model)
    }

    pub fn sample(model: ModelKind) -> Self {
        Self {
            kind: PolicyKind::Sample,
            lapse_rate: 0.0,
            model,
        }
    }

    pub fn uniform_random() -> Self {
        Self {
            kind: PolicyKind::UniformRandom,
            lapse_rate: 0.0,
            model: ModelKind::Prototype,
        }
    }
}

impl Default for ResponsePolicy {
    fn default() -> Self {
        Self::sample(ModelKind::Prototype)
    }
}

/// A 1-based class drawn according to the policy.
pub fn simulate_response<R: Rng + ?Sized>(policy: &ResponsePolicy, dist: &SoftLabel, rng: &mut R) -> u8 {
    let class = match policy.kind {
        PolicyKind::ArgmaxWithLapse => {
            let best = dist.argmax();
            if policy.lapse_rate > 0.0 && rng.gen_bool(policy.lapse_rate) {
                (best + rng.gen_range(1..N_CLASSES)) % N_CLASSES
            } else {
                best
            }
        }
        PolicyKind::Sample => {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut pick = None;
            for (k, &p) in dist.probs().iter().enumerate() {
                acc += p;
                if p > 0.0 && u < acc {
                    pick = Some(k);
                    break;
                }
            }
            // Rounding can leave u above the final sum; fall back to the last class with mass.
            pick.unwrap_or_else(|| {
                dist.probs()
                    .iter()
                    .rposition(|&p| p > 0.0)
                    .expect("distributions have mass")
            })
        }
        PolicyKind::UniformRandom => rng.gen_range(0..N_CLASSES),
    };
    class as u8 + 1
}

/// `n_per_slp` complete sessions for every catalog SLP, in catalog order.
/// Session ids are `sim-<slp>-<index>`.
pub fn simulate_population(
    catalog: &SlpCatalog,
    stimuli: &StimulusConfig,
    n_per_slp: usize,
    policy: &ResponsePolicy,
    seed: u64,
) -> Result<Dataset> {
    let [t_d1, t_d2] = stimuli.labeled_positions;
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut dataset = Dataset::new();
    for slp in catalog.entries() {
        // Uniform responses ignore the model, so skip the fit.
        let model = match policy.kind {
            PolicyKind::UniformRandom => None,
            _ => Some(ConditionModel::fit(policy.model, slp, t_d1, t_d2)?),
        };
        for j in 0..n_per_slp {
            let session_seed = master.next_u64();
            let order = if session_seed & 1 == 0 { [1, 2] } else { [2, 1] };
            let id = format!("sim-{:02}-{j:03}", slp.id);
            let session = Session::new(id.clone(), slp.id, order, 0, session_seed);
            let presentation = PresentationOrder::for_session(&session);
            dataset.add_session(session.clone())?;

            let mut rng = ChaCha8Rng::seed_from_u64(session_seed);
            rng.set_stream(2);
            for i in 0..TRIALS_PER_SESSION {
                let trial = trial_at(&session, i, stimuli, &presentation)?;
                let dist = match &model {
                    Some(m) => m.predict(trial.t_target)?,
                    None => slp.d1,
                };
                let response = simulate_response(policy, &dist, &mut rng);
                dataset.record_response(trial.record(&id, response, 0))?;
            }
        }
    }
    Ok(dataset)
}
