//! Face-view interpolation over an appearance map and one-sided map fill-in.

use std::collections::HashMap;

use super::map::AppearanceMap;
use crate::error::{Error, Result};
use crate::heatmaps::{encode_landmarks, Kernel};
use crate::image::{Image, Label, SegMask};
use crate::landmarks::LandmarkSet;
use crate::pipeline::{Conditioning, GenRequest, GenResponse, GeneratorHandle, Role};
use crate::pose::{pose_to_plane, EulerPose, PlanePoint};
use crate::reenact::{plan_linear, reenact_sequence, StepCount};

/// A source face view before pruning and triangulation.
#[derive(Clone, Debug, PartialEq)]
pub struct ViewInput {
    pub id: u32,
    pub pose: EulerPose,
    pub image: Image,
    pub landmarks: LandmarkSet,
    pub flipped: bool,
}

impl ViewInput {
    pub fn point(&self) -> PlanePoint {
        pose_to_plane(&self.pose)
    }
}

/// When every non-frontal view looks to the same side, appends the
/// horizontal mirror of each non-frontal view: yaw and roll negated, image
/// flipped, landmarks mirrored and reordered by `symmetry`. Two-sided inputs
/// are returned unchanged.
pub fn flip_augment(views: Vec<ViewInput>, symmetry: Option<&[usize]>) -> Result<Vec<ViewInput>> {
    let any_left = views.iter().any(|v| v.pose.yaw < 0.0);
    let any_right = views.iter().any(|v| v.pose.yaw > 0.0);
    if any_left == any_right {
        return Ok(views);
    }
    let perm = symmetry.ok_or_else(|| {
        Error::invalid("one-sided views need a landmark symmetry permutation to mirror")
    })?;
    let mut out = views.clone();
    for v in views.iter().filter(|v| v.pose.yaw != 0.0) {
        out.push(ViewInput {
            id: v.id,
            pose: EulerPose {
                yaw: -v.pose.yaw,
                pitch: v.pose.pitch,
                roll: -v.pose.roll,
            },
            image: v.image.flip_horizontal(),
            landmarks: v.landmarks.mirrored(v.image.width(), perm)?,
            flipped: !v.flipped,
        });
    }
    Ok(out)
}

/// Weighted combination of reenacted views, kept in double precision.
#[derive(Clone, Debug, PartialEq)]
pub struct ViewBlend {
    pub height: usize,
    pub width: usize,
    /// Interleaved RGB samples.
    pub data: Vec<f64>,
    pub mask: SegMask,
    /// `(view index, weight)` for every view that contributed.
    pub contributions: Vec<(usize, f64)>,
}

impl ViewBlend {
    pub fn to_image(&self) -> Image {
        Image::from_fn(self.height, self.width, 3, |r, c, ch| {
            self.data[(r * self.width + c) * 3 + ch] as f32
        })
        .expect("convex combination of valid images")
    }
}

/// Reenacts each view of the triangle containing `pose` to the landmarks
/// `target`, then blends the results pixelwise with the barycentric weights
/// (boundary corners excluded). The mask is the weighted per-pixel vote of
/// the generator masks, ties going to the lower class.
pub fn interpolate_views(
    map: &AppearanceMap,
    pose: &EulerPose,
    target: &LandmarkSet,
    images: &HashMap<u32, Image>,
    gen: &GeneratorHandle,
    kernel: Option<Kernel>,
) -> Result<ViewBlend> {
    let query = map.query(pose)?;
    let contributions = contributing(&query.triangle, &query.weights);
    let mut inputs = Vec::with_capacity(contributions.len());
    for &(v, _) in &contributions {
        let view = map.views()[v];
        let img = images
            .get(&view.id)
            .ok_or_else(|| Error::invalid(format!("no image for view id {}", view.id)))?;
        inputs.push(if view.flipped {
            img.flip_horizontal()
        } else {
            img.clone()
        });
    }
    let (h, w) = common_size(&inputs)?;
    let heatmap = encode_landmarks(
        target,
        h,
        w,
        kernel.unwrap_or_else(|| Kernel::default_for(h, w)),
    )?;
    let mut responses = Vec::with_capacity(inputs.len());
    for input in inputs {
        responses.push(gen.call(&GenRequest::new(
            Role::Reenact,
            input,
            Conditioning::Heatmap(heatmap.clone()),
        )?)?);
    }
    accumulate(h, w, &responses, contributions)
}

/// Like [`interpolate_views`], but each contributing view is reenacted in
/// several small steps from its own landmarks and pose (see
/// [`plan_linear`]). `views` holds one input per map view, in map order,
/// already oriented (as returned by `build_from_inputs`).
pub fn interpolate_views_stepwise(
    map: &AppearanceMap,
    pose: &EulerPose,
    target: &LandmarkSet,
    views: &[ViewInput],
    gen: &GeneratorHandle,
    kernel: Option<Kernel>,
    count: StepCount,
) -> Result<ViewBlend> {
    if views.len() != map.views().len() {
        return Err(Error::invalid(format!(
            "{} view inputs for a map of {} views",
            views.len(),
            map.views().len()
        )));
    }
    let query = map.query(pose)?;
    let contributions = contributing(&query.triangle, &query.weights);
    let inputs: Vec<Image> = contributions
        .iter()
        .map(|&(v, _)| views[v].image.clone())
        .collect();
    let (h, w) = common_size(&inputs)?;
    let mut responses = Vec::with_capacity(inputs.len());
    for (&(v, _), input) in contributions.iter().zip(inputs) {
        let plan = plan_linear(&views[v].landmarks, &views[v].pose, target, pose, count)?;
        let (image, mask) = reenact_sequence(&input, &plan, gen, kernel)?;
        responses.push(GenResponse { image, mask });
    }
    accumulate(h, w, &responses, contributions)
}

fn contributing(triangle: &[usize; 3], weights: &[f64; 3]) -> Vec<(usize, f64)> {
    (0..3)
        .filter(|&k| weights[k] > 0.0)
        .map(|k| (triangle[k], weights[k]))
        .collect()
}

fn common_size(inputs: &[Image]) -> Result<(usize, usize)> {
    let first = inputs.first().ok_or(Error::NoView)?;
    let size = (first.height(), first.width());
    if inputs.iter().any(|i| (i.height(), i.width()) != size) {
        return Err(Error::invalid("view images differ in size"));
    }
    Ok(size)
}

fn accumulate(
    h: usize,
    w: usize,
    responses: &[GenResponse],
    contributions: Vec<(usize, f64)>,
) -> Result<ViewBlend> {
    let mut data = vec![0.0f64; h * w * 3];
    let mut votes = vec![[0.0f64; 3]; h * w];
    for (resp, &(_, weight)) in responses.iter().zip(&contributions) {
        for (acc, &v) in data.iter_mut().zip(resp.image.data()) {
            *acc += weight * v as f64;
        }
        for (vote, &l) in votes.iter_mut().zip(resp.mask.labels()) {
            vote[l as usize] += weight;
        }
    }
    let labels = votes
        .iter()
        .map(|v| {
            let best = (0..3).fold(0, |b, k| if v[k] > v[b] { k } else { b });
            Label::ALL[best]
        })
        .collect();
    Ok(ViewBlend {
        height: h,
        width: w,
        data,
        mask: SegMask::new(h, w, labels)?,
        contributions,
    })
}
