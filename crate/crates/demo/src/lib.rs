//! Browser bindings for the demo page: appearance map triangulation and
//! query, Poisson blending of RGBA buffers, and landmark heatmaps.

use fsg_core::appearance::{prune_views, AppearanceMap, MapView, ViewCandidate};
use fsg_core::heatmaps::{encode_landmarks, Kernel};
use fsg_core::io::{from_u8, to_u8};
use fsg_core::poisson::{blend, BlendProblem, SolverOptions};
use fsg_core::pose::PlanePoint;
use fsg_core::{Image, LandmarkSet};
use wasm_bindgen::prelude::*;

fn js(e: fsg_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Triangulated appearance map over `(yaw, pitch)` points.
#[wasm_bindgen]
pub struct MapDemo {
    map: AppearanceMap,
}

#[wasm_bindgen]
impl MapDemo {
    /// `points` holds `yaw, pitch` pairs in degrees. Points closer than
    /// `radius` to an earlier kept point are pruned.
    #[wasm_bindgen(constructor)]
    pub fn new(points: &[f64], radius: f64) -> Result<MapDemo, JsError> {
        if !points.len().is_multiple_of(2) {
            return Err(JsError::new("points must be yaw, pitch pairs"));
        }
        let cands: Vec<ViewCandidate> = points
            .chunks_exact(2)
            .map(|p| ViewCandidate {
                point: PlanePoint::new(p[0], p[1]),
                roll: 0.0,
                blur: None,
            })
            .collect();
        let views = prune_views(&cands, radius, None)
            .into_iter()
            .map(|i| MapView {
                point: cands[i].point,
                id: i as u32,
                flipped: false,
            })
            .collect();
        Ok(MapDemo {
            map: AppearanceMap::build(views).map_err(js)?,
        })
    }

    /// Input indices of the views that survived pruning, in vertex order.
    pub fn kept(&self) -> Vec<u32> {
        self.map.views().iter().map(|v| v.id).collect()
    }

    /// `yaw, pitch` of every vertex: the kept views, then the four corners.
    pub fn vertices(&self) -> Vec<f64> {
        (0..self.map.vertex_count())
            .flat_map(|i| self.map.vertex(i))
            .collect()
    }

    /// Vertex index triples.
    pub fn triangles(&self) -> Vec<u32> {
        self.map
            .triangles()
            .iter()
            .flatten()
            .map(|&v| v as u32)
            .collect()
    }

    /// `[v0, v1, v2, w0, w1, w2]`: the enclosing triangle and its view
    /// weights (zero on corners).
    pub fn query(&self, yaw: f64, pitch: f64) -> Result<Vec<f64>, JsError> {
        let q = self
            .map
            .query_point(PlanePoint::new(yaw, pitch))
            .map_err(js)?;
        Ok(q.triangle
            .iter()
            .map(|&v| v as f64)
            .chain(q.weights)
            .collect())
    }
}

fn rgba_to_image(width: usize, height: usize, rgba: &[u8]) -> Result<Image, JsError> {
    if rgba.len() != width * height * 4 {
        return Err(JsError::new(
            "buffer size does not match width × height × 4",
        ));
    }
    let data = rgba
        .chunks_exact(4)
        .flat_map(|p| [from_u8(p[0]), from_u8(p[1]), from_u8(p[2])])
        .collect();
    Image::new(height, width, 3, data).map_err(js)
}

/// Seamlessly clones `source` into `target` where `mask` is non-zero.
/// Buffers are RGBA; the result is RGBA with full alpha.
#[wasm_bindgen]
pub fn poisson_blend(
    width: usize,
    height: usize,
    target: &[u8],
    source: &[u8],
    mask: &[u8],
) -> Result<Vec<u8>, JsError> {
    if mask.len() != width * height {
        return Err(JsError::new("mask needs one byte per pixel"));
    }
    let t = rgba_to_image(width, height, target)?;
    let s = rgba_to_image(width, height, source)?;
    let free = mask.iter().map(|&m| m != 0).collect();
    let problem = BlendProblem::new(t, s, free).map_err(js)?;
    let (img, _) = blend(&problem, &SolverOptions::default()).map_err(js)?;
    Ok(img
        .data()
        .chunks_exact(3)
        .flat_map(|p| [to_u8(p[0]), to_u8(p[1]), to_u8(p[2]), 255])
        .collect())
}

/// Max over the landmark channels of the Gaussian heatmap, as RGBA.
/// `points` holds `x, y` pairs in pixels.
#[wasm_bindgen]
pub fn render_heatmap(
    width: usize,
    height: usize,
    points: &[f64],
    sigma: f64,
) -> Result<Vec<u8>, JsError> {
    let pts: Vec<[f64; 2]> = points.chunks_exact(2).map(|p| [p[0], p[1]]).collect();
    let lms = LandmarkSet::new(pts).map_err(js)?;
    let hm = encode_landmarks(&lms, height, width, Kernel::Gaussian { sigma }).map_err(js)?;
    let mut out = Vec::with_capacity(width * height * 4);
    for i in 0..width * height {
        let v = (0..hm.channels())
            .map(|k| hm.channel(k)[i])
            .fold(0.0f32, f32::max);
        let b = to_u8(v);
        out.extend([b, b / 2, 255 - b, 255]);
    }
    Ok(out)
}
