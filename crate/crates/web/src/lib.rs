//! Browser demo bindings over the built-in stimuli and condition catalog.
//!
//! The plain functions return flat `Vec<f64>` buffers (row-major) so the
//! JavaScript side receives `Float64Array`s; the `js` module wraps them for
//! `wasm-bindgen`.

use loshot_core::classifiers::{manifold_distribution, ModelKind};
use loshot_core::soft_labels::slp_similarity_matrix;
use loshot_core::stimulus::figure_svg;
use loshot_core::{SlpCatalog, StimulusConfig};

fn parse_model(name: &str) -> Result<ModelKind, String> {
    match name {
        "proto" | "prototype" => Ok(ModelKind::Prototype),
        "1nn" => Ok(ModelKind::Exemplar1NN),
        "2nn" => Ok(ModelKind::Exemplar2NN),
        other => Err(format!("unknown model {other:?}")),
    }
}

fn manifold_index(id: u8) -> Result<usize, String> {
    match id {
        1 | 2 => Ok(usize::from(id - 1)),
        _ => Err(format!("manifold id must be 1 or 2, got {id}")),
    }
}

/// Stick figure at position `t` in [0, 1] on manifold 1 or 2.
pub fn stimulus_svg(manifold_id: u8, t: f64) -> Result<String, String> {
    let cfg = StimulusConfig::builtin();
    let m = &cfg.manifolds[manifold_index(manifold_id)?];
    let v = m.point_at(t).map_err(|e| e.to_string())?;
    figure_svg(&v, &cfg.schema).map_err(|e| e.to_string())
}

pub fn slp_ids() -> Vec<u32> {
    SlpCatalog::builtin().ids().collect()
}

/// Dinosaur 1 then Dinosaur 2 probabilities.
pub fn slp_labels(slp_id: u32) -> Result<Vec<f64>, String> {
    let catalog = SlpCatalog::builtin();
    Ok(catalog.get(slp_id).map_err(|e| e.to_string())?.flatten().to_vec())
}

/// 20×3 predicted distribution over the manifold positions.
pub fn model_distribution(model: &str, slp_id: u32) -> Result<Vec<f64>, String> {
    let cfg = StimulusConfig::builtin();
    let catalog = SlpCatalog::builtin();
    let slp = catalog.get(slp_id).map_err(|e| e.to_string())?;
    let [t1, t2] = cfg.labeled_positions;
    let rows = manifold_distribution(parse_model(model)?, slp, t1, t2, &cfg.manifolds[0])
        .map_err(|e| e.to_string())?;
    Ok(rows.iter().flat_map(|r| *r.probs()).collect())
}

/// 14×14 cosine similarity between conditions, raised to `exponent`.
pub fn slp_similarity(exponent: u32) -> Result<Vec<f64>, String> {
    let m = slp_similarity_matrix(&SlpCatalog::builtin(), exponent).map_err(|e| e.to_string())?;
    Ok(m.into_iter().flatten().collect())
}

pub mod js {
    use wasm_bindgen::prelude::*;

    fn err(e: String) -> JsError {
        JsError::new(&e)
    }

    #[wasm_bindgen(js_name = stimulusSvg)]
    pub fn stimulus_svg(manifold_id: u8, t: f64) -> Result<String, JsError> {
        super::stimulus_svg(manifold_id, t).map_err(err)
    }

    #[wasm_bindgen(js_name = slpIds)]
    pub fn slp_ids() -> Vec<u32> {
        super::slp_ids()
    }

    #[wasm_bindgen(js_name = slpLabels)]
    pub fn slp_labels(slp_id: u32) -> Result<Vec<f64>, JsError> {
        super::slp_labels(slp_id).map_err(err)
    }

    #[wasm_bindgen(js_name = modelDistribution)]
    pub fn model_distribution(model: &str, slp_id: u32) -> Result<Vec<f64>, JsError> {
        super::model_distribution(model, slp_id).map_err(err)
    }

    #[wasm_bindgen(js_name = slpSimilarity)]
    pub fn slp_similarity(exponent: u32) -> Result<Vec<f64>, JsError> {
        super::slp_similarity(exponent).map_err(err)
    }
}
