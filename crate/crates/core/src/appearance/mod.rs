//! Pose-space appearance maps: pruning of face views in the (yaw, pitch)
//! plane, Delaunay triangulation against four boundary corners, barycentric
//! view queries and interpolation of reenacted views.

mod delaunay;
mod interpolate;
mod map;
mod prune;

pub use delaunay::{in_circle, orient, triangle_area, triangulate_in_square};
pub use interpolate::{
    flip_augment, interpolate_views, interpolate_views_stepwise, ViewBlend, ViewInput,
};
pub use map::{
    exclude_boundary, AppearanceMap, MapView, ViewQuery, BOUNDARY_EXTENT, FSAM_MAGIC, FSAM_VERSION,
};
pub use prune::{blur_score, prune_views, ViewCandidate, DEFAULT_PRUNE_RADIUS};

use crate::error::Result;

/// Mirrors one-sided inputs, prunes them, and triangulates the survivors.
/// Returns the map together with the retained inputs, in map view order.
pub fn build_from_inputs(
    inputs: Vec<ViewInput>,
    symmetry: Option<&[usize]>,
    radius: f64,
    blur_threshold: Option<f64>,
) -> Result<(AppearanceMap, Vec<ViewInput>)> {
    let inputs = flip_augment(inputs, symmetry)?;
    let candidates: Vec<ViewCandidate> = inputs
        .iter()
        .map(|v| ViewCandidate {
            point: v.point(),
            roll: v.pose.roll,
            blur: blur_threshold.map(|_| blur_score(&v.image)),
        })
        .collect();
    let keep = prune_views(&candidates, radius, blur_threshold);
    let kept: Vec<ViewInput> = keep.into_iter().map(|i| inputs[i].clone()).collect();
    let views = kept
        .iter()
        .map(|v| MapView {
            point: v.point(),
            id: v.id,
            flipped: v.flipped,
        })
        .collect();
    Ok((AppearanceMap::build(views)?, kept))
}
