//! Stepwise reenactment planning, the recursive generator drive, and
//! mouth-landmark expression transfer.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::heatmaps::{encode_landmarks, Kernel};
use crate::image::{Image, SegMask};
use crate::landmarks::{Landmark3DSet, LandmarkSet};
use crate::pipeline::{Conditioning, GenRequest, GeneratorHandle, Role};
use crate::pose::{
    angular_distance, mat_vec, pose_to_plane, transpose, wrap_degrees, EulerPose, PlanePoint,
};

/// Default per-step pose budget for automatic step counts, in degrees.
pub const DEFAULT_STEP_BUDGET: f64 = 15.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepCount {
    Fixed(usize),
    /// `max(1, ceil(planar gap / budget))` steps.
    Auto {
        budget: f64,
    },
}

impl Default for StepCount {
    fn default() -> Self {
        StepCount::Auto {
            budget: DEFAULT_STEP_BUDGET,
        }
    }
}

impl StepCount {
    pub fn resolve(&self, source: &EulerPose, target: &EulerPose) -> Result<usize> {
        match *self {
            StepCount::Fixed(0) => Err(Error::invalid("step count must be at least 1")),
            StepCount::Fixed(n) => Ok(n),
            StepCount::Auto { budget } if !(budget > 0.0 && budget.is_finite()) => Err(
                Error::invalid(format!("step budget must be positive, got {budget}")),
            ),
            StepCount::Auto { budget } => {
                let d = pose_delta(source, target);
                let gap = angular_distance(PlanePoint::new(0.0, 0.0), pose_to_plane(&d));
                Ok(((gap / budget).ceil() as usize).max(1))
            }
        }
    }
}

/// Intermediate landmark targets `p_1 .. p_n` leading from a source pose to a
/// target pose.
#[derive(Clone, Debug, PartialEq)]
pub struct ReenactPlan {
    pub source_pose: EulerPose,
    pub target_pose: EulerPose,
    /// Projection of the unmodified source landmarks (`p_0`).
    pub start: LandmarkSet,
    pub steps: Vec<LandmarkSet>,
    pub poses: Vec<EulerPose>,
    /// Interpolated 3D centroids, one per step.
    pub centroids: Vec<[f64; 3]>,
}

impl ReenactPlan {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last(&self) -> &LandmarkSet {
        self.steps.last().expect("plans have at least one step")
    }
}

/// Per-angle difference `target - source` along the shorter arc.
fn pose_delta(source: &EulerPose, target: &EulerPose) -> EulerPose {
    EulerPose {
        yaw: wrap_degrees(target.yaw - source.yaw),
        pitch: wrap_degrees(target.pitch - source.pitch),
        roll: wrap_degrees(target.roll - source.roll),
    }
}

/// Plans `n` reenactment steps. At step `j` (with `t = j / n`) the Euler
/// angles and the 3D centroid are linearly interpolated between source and
/// target; the rigid source shape is re-posed accordingly and projected
/// orthographically. When `final_landmarks` is given it replaces the
/// projection of the last step.
pub fn plan_steps(
    source: &Landmark3DSet,
    source_pose: &EulerPose,
    target: &Landmark3DSet,
    target_pose: &EulerPose,
    count: StepCount,
    final_landmarks: Option<&LandmarkSet>,
) -> Result<ReenactPlan> {
    if source.len() != target.len() {
        return Err(Error::invalid(format!(
            "landmark counts differ: {} vs {}",
            source.len(),
            target.len()
        )));
    }
    if let Some(f) = final_landmarks {
        if f.len() != source.len() {
            return Err(Error::invalid("final landmark count differs from source"));
        }
    }
    source_pose.validate()?;
    target_pose.validate()?;
    let n = count.resolve(source_pose, target_pose)?;

    let c_s = source.centroid();
    let c_t = target.centroid();
    let inv = transpose(&source_pose.rotation());
    // source shape in its own head frame
    let shape: Vec<[f64; 3]> = source
        .points()
        .iter()
        .map(|p| mat_vec(&inv, [p[0] - c_s[0], p[1] - c_s[1], p[2] - c_s[2]]))
        .collect();
    let delta = pose_delta(source_pose, target_pose);

    let mut plan = ReenactPlan {
        source_pose: *source_pose,
        target_pose: *target_pose,
        start: source.project(),
        steps: Vec::with_capacity(n),
        poses: Vec::with_capacity(n),
        centroids: Vec::with_capacity(n),
    };
    for j in 1..=n {
        let (pose, centroid) = if j == n {
            (*target_pose, c_t)
        } else {
            let t = j as f64 / n as f64;
            let pose = EulerPose {
                yaw: source_pose.yaw + t * delta.yaw,
                pitch: source_pose.pitch + t * delta.pitch,
                roll: source_pose.roll + t * delta.roll,
            };
            (pose, [0, 1, 2].map(|i| c_s[i] + t * (c_t[i] - c_s[i])))
        };
        let rot = pose.rotation();
        let points = shape
            .iter()
            .map(|u| {
                let v = mat_vec(&rot, *u);
                [v[0] + centroid[0], v[1] + centroid[1]]
            })
            .collect();
        let projected = match (j == n, final_landmarks) {
            (true, Some(f)) => f.clone(),
            _ => LandmarkSet::new(points)?,
        };
        plan.steps.push(projected);
        plan.poses.push(pose);
        plan.centroids.push(centroid);
    }
    Ok(plan)
}

/// Plans `n` steps from 2D landmarks alone: step `j` targets the linear
/// blend `(1 - t)·start + t·target` with `t = j / n`, and the pose follows
/// the shorter arc. The last step is `target` exactly.
pub fn plan_linear(
    start: &LandmarkSet,
    source_pose: &EulerPose,
    target: &LandmarkSet,
    target_pose: &EulerPose,
    count: StepCount,
) -> Result<ReenactPlan> {
    if start.len() != target.len() {
        return Err(Error::invalid(format!(
            "landmark counts differ: {} vs {}",
            start.len(),
            target.len()
        )));
    }
    source_pose.validate()?;
    target_pose.validate()?;
    let n = count.resolve(source_pose, target_pose)?;
    let delta = pose_delta(source_pose, target_pose);
    let mut plan = ReenactPlan {
        source_pose: *source_pose,
        target_pose: *target_pose,
        start: start.clone(),
        steps: Vec::with_capacity(n),
        poses: Vec::with_capacity(n),
        centroids: Vec::with_capacity(n),
    };
    for j in 1..=n {
        let (points, pose) = if j == n {
            (target.clone(), *target_pose)
        } else {
            let t = j as f64 / n as f64;
            let pts = start
                .points()
                .iter()
                .zip(target.points())
                .map(|(a, b)| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            let pose = EulerPose {
                yaw: source_pose.yaw + t * delta.yaw,
                pitch: source_pose.pitch + t * delta.pitch,
                roll: source_pose.roll + t * delta.roll,
            };
            (LandmarkSet::new(pts.collect())?, pose)
        };
        let c = points.centroid();
        plan.centroids.push([c[0], c[1], 0.0]);
        plan.steps.push(points);
        plan.poses.push(pose);
    }
    Ok(plan)
}

/// Runs the reenactment recursion: `I_0 = source`, and step `j` feeds the
/// previous output and the heatmap of `p_j` to the generator. Returns the
/// final image and mask.
pub fn reenact_sequence(
    source: &Image,
    plan: &ReenactPlan,
    gen: &GeneratorHandle,
    kernel: Option<Kernel>,
) -> Result<(Image, SegMask)> {
    if plan.is_empty() {
        return Err(Error::invalid("empty reenactment plan"));
    }
    let (h, w) = (source.height(), source.width());
    let kernel = kernel.unwrap_or_else(|| Kernel::default_for(h, w));
    let n = plan.len();
    let mut current = source.to_rgb();
    let mut mask = None;
    for (j, p) in plan.steps.iter().enumerate() {
        let stage = format!("reenactment step {}/{n}", j + 1);
        let step = || -> Result<_> {
            let heatmap = encode_landmarks(p, h, w, kernel)?;
            gen.call(&GenRequest::new(
                Role::Reenact,
                current.clone(),
                Conditioning::Heatmap(heatmap),
            )?)
        };
        let resp = step().map_err(|e| e.at_stage(stage))?;
        current = resp.image;
        mask = Some(resp.mask);
    }
    Ok((current, mask.expect("at least one step ran")))
}

/// Which landmark indices form the mouth, and which two of them anchor the
/// similarity alignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MouthLayout {
    pub range: Range<usize>,
    pub left_corner: usize,
    pub right_corner: usize,
}

impl Default for MouthLayout {
    /// Indices 48..=67 with corners 48 and 54, as in the common 68-point scheme.
    fn default() -> Self {
        Self {
            range: 48..68,
            left_corner: 48,
            right_corner: 54,
        }
    }
}

/// Replaces the mouth of `target` with the mouth of `source`, mapped by the
/// similarity transform that takes the source mouth corners onto the target
/// mouth corners. All other points are copied from `target` unchanged.
pub fn transfer_expression(
    target: &LandmarkSet,
    source: &LandmarkSet,
    layout: &MouthLayout,
) -> Result<LandmarkSet> {
    let n = target.len();
    if source.len() != n {
        return Err(Error::invalid(format!(
            "landmark counts differ: {n} vs {}",
            source.len()
        )));
    }
    let MouthLayout {
        range,
        left_corner: a,
        right_corner: b,
    } = layout;
    if range.is_empty() || range.end > n {
        return Err(Error::invalid(format!(
            "mouth range {range:?} invalid for {n} landmarks"
        )));
    }
    if !range.contains(a) || !range.contains(b) || a == b {
        return Err(Error::invalid(
            "mouth corners must be two distinct indices inside the mouth range",
        ));
    }
    let (sa, sb) = (source.points()[*a], source.points()[*b]);
    let (ta, tb) = (target.points()[*a], target.points()[*b]);
    let ds = [sb[0] - sa[0], sb[1] - sa[1]];
    let dt = [tb[0] - ta[0], tb[1] - ta[1]];
    let norm = ds[0] * ds[0] + ds[1] * ds[1];
    if norm == 0.0 {
        return Err(Error::invalid("source mouth corners coincide"));
    }
    // complex ratio dt / ds
    let alpha = [
        (dt[0] * ds[0] + dt[1] * ds[1]) / norm,
        (dt[1] * ds[0] - dt[0] * ds[1]) / norm,
    ];
    let map = |p: [f64; 2]| {
        let q = [p[0] - sa[0], p[1] - sa[1]];
        [
            alpha[0] * q[0] - alpha[1] * q[1] + ta[0],
            alpha[1] * q[0] + alpha[0] * q[1] + ta[1],
        ]
    };
    let points = target
        .points()
        .iter()
        .enumerate()
        .map(|(k, &p)| match k {
            // anchors land on the target corners by construction
            k if k == *a || k == *b => p,
            k if range.contains(&k) => map(source.points()[k]),
            _ => p,
        })
        .collect();
    LandmarkSet::new(points)
}
