//! Stick-figure stimulus space.
//!
//! Stimuli are points in a nine-feature space. A [`Manifold`] is the line of
//! stimuli obtained by interpolating two anchor figures, so every stimulus is
//! addressed by a single coordinate `t` in `[0, 1]`. Figures render to a fixed
//! 400x300 SVG canvas.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const N_FEATURES: usize = 9;

pub const CANVAS_WIDTH: f64 = 400.0;
pub const CANVAS_HEIGHT: f64 = 300.0;

/// Canonical feature roles, in schema order. Geometry reads features by index.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "body_length",
    "neck_length",
    "neck_angle",
    "head_length",
    "head_angle",
    "tail_length",
    "tail_angle",
    "leg_length",
    "foot_length",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Length,
    Degrees,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub unit: Unit,
}

/// Identity of a schema, derived from its contents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SchemaId(u64);

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSchema {
    features: Vec<FeatureDescriptor>,
    id: SchemaId,
}

impl FeatureSchema {
    pub fn new(features: Vec<FeatureDescriptor>) -> Result<Self> {
        if features.len() != N_FEATURES {
            return Err(Error::InvalidSchema(format!(
                "expected {N_FEATURES} features, got {}",
                features.len()
            )));
        }
        for (i, f) in features.iter().enumerate() {
            if !(f.min.is_finite() && f.max.is_finite()) || f.min >= f.max {
                return Err(Error::InvalidSchema(format!(
                    "feature `{}` needs finite min < max",
                    f.name
                )));
            }
            if features[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::InvalidSchema(format!("duplicate feature `{}`", f.name)));
            }
        }
        let id = SchemaId(fingerprint(&features));
        Ok(Self { features, id })
    }

    pub fn features(&self) -> &[FeatureDescriptor] {
        &self.features
    }

    pub fn id(&self) -> SchemaId {
        self.id
    }

    /// Builds a vector after checking every value against its range.
    pub fn vector(&self, values: [f64; N_FEATURES]) -> Result<FeatureVector> {
        self.check(&values)?;
        Ok(FeatureVector {
            values,
            schema: self.id,
        })
    }

    fn check(&self, values: &[f64; N_FEATURES]) -> Result<()> {
        for (f, &v) in self.features.iter().zip(values) {
            if !(v >= f.min && v <= f.max) {
                return Err(Error::RangeViolation {
                    feature: f.name.clone(),
                    value: v,
                    min: f.min,
                    max: f.max,
                });
            }
        }
        Ok(())
    }
}

// FNV-1a over names and the bit patterns of the ranges.
fn fingerprint(features: &[FeatureDescriptor]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for b in bytes {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    for f in features {
        eat(f.name.as_bytes());
        eat(&[0xff]);
        eat(&f.min.to_bits().to_le_bytes());
        eat(&f.max.to_bits().to_le_bytes());
        eat(&[f.unit as u8]);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    values: [f64; N_FEATURES],
    schema: SchemaId,
}

impl FeatureVector {
    pub fn values(&self) -> &[f64; N_FEATURES] {
        &self.values
    }

    pub fn schema_id(&self) -> SchemaId {
        self.schema
    }
}

/// Maps each feature onto `[0, 1]` by its range.
pub fn scale_to_unit(v: &FeatureVector, schema: &FeatureSchema) -> Result<[f64; N_FEATURES]> {
    if v.schema != schema.id {
        return Err(Error::SchemaMismatch);
    }
    schema.check(&v.values)?;
    let mut out = [0.0; N_FEATURES];
    for (o, (f, &x)) in out.iter_mut().zip(schema.features.iter().zip(&v.values)) {
        *o = (x - f.min) / (f.max - f.min);
    }
    Ok(out)
}

/// `a + t·(b − a)`, pinned to `b` at `t = 1` and clamped to the segment so
/// rounding never leaves the anchors' range.
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    if t == 1.0 {
        return b;
    }
    (a + t * (b - a)).clamp(a.min(b), a.max(b))
}

fn interpolate(a: &FeatureVector, b: &FeatureVector, t: f64) -> FeatureVector {
    let mut values = [0.0; N_FEATURES];
    for (i, v) in values.iter_mut().enumerate() {
        *v = lerp(a.values[i], b.values[i], t);
    }
    FeatureVector {
        values,
        schema: a.schema,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifold {
    pub id: String,
    anchor_a: FeatureVector,
    anchor_b: FeatureVector,
    positions: Vec<f64>,
    points: Vec<FeatureVector>,
}

impl Manifold {
    /// Generates `n_points` uniformly spaced stimuli with `t_i = i / (n_points − 1)`.
    pub fn generate(
        id: impl Into<String>,
        anchor_a: FeatureVector,
        anchor_b: FeatureVector,
        n_points: usize,
    ) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::InvalidArgument(format!(
                "a manifold needs at least 2 points, got {n_points}"
            )));
        }
        if anchor_a.schema != anchor_b.schema {
            return Err(Error::SchemaMismatch);
        }
        let last = (n_points - 1) as f64;
        let positions: Vec<f64> = (0..n_points).map(|i| i as f64 / last).collect();
        let points = positions
            .iter()
            .map(|&t| interpolate(&anchor_a, &anchor_b, t))
            .collect();
        Ok(Self {
            id: id.into(),
            anchor_a,
            anchor_b,
            positions,
            points,
        })
    }

    pub fn n_points(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn points(&self) -> &[FeatureVector] {
        &self.points
    }

    pub fn anchor_a(&self) -> &FeatureVector {
        &self.anchor_a
    }

    pub fn anchor_b(&self) -> &FeatureVector {
        &self.anchor_b
    }

    /// The stimulus at an arbitrary coordinate in `[0, 1]`.
    pub fn point_at(&self, t: f64) -> Result<FeatureVector> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidArgument(format!(
                "manifold coordinate {t} outside [0, 1]"
            )));
        }
        Ok(interpolate(&self.anchor_a, &self.anchor_b, t))
    }
}

/// Euclidean distance between two manifold stimuli after range scaling.
pub fn embedded_distance(m: &Manifold, t1: f64, t2: f64, schema: &FeatureSchema) -> Result<f64> {
    let a = scale_to_unit(&m.point_at(t1)?, schema)?;
    let b = scale_to_unit(&m.point_at(t2)?, schema)?;
    Ok(a.iter()
        .zip(&b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Body,
    Neck,
    Head,
    Tail,
    FrontLegNear,
    FrontLegFar,
    BackLegNear,
    BackLegFar,
    FrontFootNear,
    FrontFootFar,
    BackFootNear,
    BackFootFar,
}

impl Part {
    pub fn name(self) -> &'static str {
        match self {
            Part::Body => "body",
            Part::Neck => "neck",
            Part::Head => "head",
            Part::Tail => "tail",
            Part::FrontLegNear => "front-leg-near",
            Part::FrontLegFar => "front-leg-far",
            Part::BackLegNear => "back-leg-near",
            Part::BackLegFar => "back-leg-far",
            Part::FrontFootNear => "front-foot-near",
            Part::FrontFootFar => "front-foot-far",
            Part::BackFootNear => "back-foot-near",
            Part::BackFootFar => "back-foot-far",
        }
    }
}

/// Which end of the parent segment a child attaches to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Joint {
    Start,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub part: Part,
    pub start: (f64, f64),
    pub end: (f64, f64),
    /// Index of the parent segment and the joint this segment hangs from.
    pub parent: Option<(usize, Joint)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureGeometry {
    pub segments: Vec<Segment>,
}

const BODY_Y: f64 = 130.0;
const LEG_SPLAY_DEG: f64 = 10.0;

/// Lays out the figure in canvas coordinates (y grows downward). The body is a
/// horizontal segment from the back (hip) joint to the front (shoulder) joint.
/// Angles are in degrees above the horizontal: the neck and head point forward,
/// the tail points backward.
pub fn figure_geometry(v: &FeatureVector, schema: &FeatureSchema) -> Result<FigureGeometry> {
    if v.schema != schema.id {
        return Err(Error::SchemaMismatch);
    }
    schema.check(&v.values)?;
    let [body, neck, neck_angle, head, head_angle, tail, tail_angle, leg, foot] = v.values;

    let cx = CANVAS_WIDTH / 2.0;
    let hip = (cx - body / 2.0, BODY_Y);
    let shoulder = (cx + body / 2.0, BODY_Y);
    let toward = |from: (f64, f64), len: f64, deg: f64, dir: f64| {
        let r = deg.to_radians();
        (from.0 + dir * len * r.cos(), from.1 - len * r.sin())
    };

    let mut segments = Vec::with_capacity(12);
    let mut push = |part, start, end, parent| {
        segments.push(Segment {
            part,
            start,
            end,
            parent,
        });
        segments.len() - 1
    };

    let body_ix = push(Part::Body, hip, shoulder, None);
    let neck_end = toward(shoulder, neck, neck_angle, 1.0);
    let neck_ix = push(Part::Neck, shoulder, neck_end, Some((body_ix, Joint::End)));
    push(
        Part::Head,
        neck_end,
        toward(neck_end, head, head_angle, 1.0),
        Some((neck_ix, Joint::End)),
    );
    push(
        Part::Tail,
        hip,
        toward(hip, tail, tail_angle, -1.0),
        Some((body_ix, Joint::Start)),
    );

    let splay = LEG_SPLAY_DEG.to_radians();
    let legs = [
        (Part::FrontLegNear, Part::FrontFootNear, shoulder, Joint::End, 1.0),
        (Part::FrontLegFar, Part::FrontFootFar, shoulder, Joint::End, -1.0),
        (Part::BackLegNear, Part::BackFootNear, hip, Joint::Start, 1.0),
        (Part::BackLegFar, Part::BackFootFar, hip, Joint::Start, -1.0),
    ];
    for (leg_part, foot_part, root, joint, side) in legs {
        let knee = (root.0 + side * leg * splay.sin(), root.1 + leg * splay.cos());
        let leg_ix = push(leg_part, root, knee, Some((body_ix, joint)));
        push(
            foot_part,
            knee,
            (knee.0 + foot, knee.1),
            Some((leg_ix, Joint::End)),
        );
    }

    Ok(FigureGeometry { segments })
}

fn coord(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

/// Renders a figure as a stroke-only SVG 1.1 document. Output is a pure
/// function of the input: coordinates are printed with two fixed decimals.
pub fn figure_svg(v: &FeatureVector, schema: &FeatureSchema) -> Result<String> {
    let geometry = figure_geometry(v, schema)?;
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"400\" height=\"300\" viewBox=\"0 0 400 300\">\n",
    );
    out.push_str(
        "<g fill=\"none\" stroke=\"#1f2a33\" stroke-width=\"4\" \
         stroke-linecap=\"round\" stroke-linejoin=\"round\">\n",
    );
    for s in &geometry.segments {
        let _ = writeln!(
            out,
            "<path id=\"{}\" d=\"M{} {} L{} {}\"/>",
            s.part.name(),
            coord(s.start.0),
            coord(s.start.1),
            coord(s.end.0),
            coord(s.end.1)
        );
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}
