//! Stimulus configuration: feature schema, manifold anchors, and the
//! coordinates of the two labeled figures.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::stimulus::{FeatureDescriptor, FeatureSchema, FeatureVector, Manifold, N_FEATURES};

pub const DEFAULT_CONFIG_TOML: &str = include_str!("../data/default_config.toml");

#[derive(Debug, Deserialize)]
struct RawConfig {
    #[serde(default = "default_n_points")]
    n_points: usize,
    labeled_positions: [f64; 2],
    features: Vec<FeatureDescriptor>,
    anchors: RawAnchors,
}

fn default_n_points() -> usize {
    crate::response_data::TRIALS_PER_MANIFOLD
}

#[derive(Debug, Deserialize)]
struct RawAnchors {
    manifold1: RawPair,
    manifold2: RawPair,
}

#[derive(Debug, Deserialize)]
struct RawPair {
    a: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StimulusConfig {
    pub schema: FeatureSchema,
    /// Manifold 1 and Manifold 2, in that order.
    pub manifolds: [Manifold; 2],
    /// Coordinates of Dinosaur 1 and Dinosaur 2 on every manifold.
    pub labeled_positions: [f64; 2],
}

impl StimulusConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let schema = FeatureSchema::new(raw.features)?;
        let [d1, d2] = raw.labeled_positions;
        if !(0.0..=1.0).contains(&d1) || !(0.0..=1.0).contains(&d2) || d1 == d2 {
            return Err(Error::Config(format!(
                "labeled positions must be distinct values in [0, 1], got {d1} and {d2}"
            )));
        }
        let vector = |name: &str, values: &[f64]| -> Result<FeatureVector> {
            let values: [f64; N_FEATURES] = values.try_into().map_err(|_| {
                Error::Config(format!(
                    "anchor {name} needs {N_FEATURES} values, got {}",
                    values.len()
                ))
            })?;
            schema.vector(values)
        };
        let m1 = Manifold::generate(
            "1",
            vector("manifold1.a", &raw.anchors.manifold1.a)?,
            vector("manifold1.b", &raw.anchors.manifold1.b)?,
            raw.n_points,
        )?;
        let m2 = Manifold::generate(
            "2",
            vector("manifold2.a", &raw.anchors.manifold2.a)?,
            vector("manifold2.b", &raw.anchors.manifold2.b)?,
            raw.n_points,
        )?;
        Ok(Self {
            schema,
            manifolds: [m1, m2],
            labeled_positions: raw.labeled_positions,
        })
    }

    /// The configuration shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_toml_str(DEFAULT_CONFIG_TOML).expect("bundled configuration is valid")
    }

    /// Looks up a manifold by its 1-based id.
    pub fn manifold(&self, id: u8) -> Result<&Manifold> {
        match id {
            1 | 2 => Ok(&self.manifolds[usize::from(id - 1)]),
            _ => Err(Error::NotFound(format!("manifold {id}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_parses() {
        let c = StimulusConfig::builtin();
        assert_eq!(c.manifolds[0].n_points(), 20);
        assert_eq!(c.manifolds[1].n_points(), 20);
        assert_eq!(c.labeled_positions, [0.25, 0.75]);
        assert_eq!(c.schema.features()[1].min, 0.0);
        assert!(c.manifold(3).is_err());
    }

    #[test]
    fn rejects_bad_anchor_length() {
        let text = DEFAULT_CONFIG_TOML.replace(
            "a = [70.0, 20.0, 20.0, 20.0, -10.0, 90.0, 10.0, 35.0, 8.0]",
            "a = [70.0, 20.0]",
        );
        assert!(matches!(
            StimulusConfig::from_toml_str(&text),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn rejects_out_of_range_anchor() {
        let text = DEFAULT_CONFIG_TOML.replace(
            "a = [70.0, 20.0, 20.0, 20.0, -10.0, 90.0, 10.0, 35.0, 8.0]",
            "a = [70.0, 20.0, 20.0, 20.0, -10.0, 190.0, 10.0, 35.0, 8.0]",
        );
        assert!(matches!(
            StimulusConfig::from_toml_str(&text),
            Err(Error::RangeViolation { .. })
        ));
    }
}
