//! Face swap orchestration: view interpolation, target segmentation,
//! inpainting and blending.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::generator::{Conditioning, GenRequest, GeneratorHandle, Role};
use crate::appearance::{
    build_from_inputs, interpolate_views_stepwise, AppearanceMap, ViewInput, DEFAULT_PRUNE_RADIUS,
};
use crate::error::{Error, Result};
use crate::heatmaps::Kernel;
use crate::image::{Image, Label, SegMask};
use crate::landmarks::LandmarkSet;
use crate::masks::remove_background;
use crate::poisson::{
    blend, free_labels, BlendProblem, Method, SolverOptions, SolverReport, DEFAULT_TOL,
};
use crate::pose::{pose_to_plane, EulerPose};
use crate::reenact::{plan_linear, reenact_sequence, StepCount, DEFAULT_STEP_BUDGET};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapConfig {
    /// Degrees of pose change per reenactment step.
    pub step_budget: f64,
    /// Fixed step count; overrides `step_budget` when set.
    pub steps: Option<usize>,
    pub prune_radius: f64,
    pub blur_threshold: Option<f64>,
    pub tol: f64,
    /// Treat target hair as part of the blended region.
    pub hair_free: bool,
    /// Landmark mirror permutation for one-sided source views.
    pub symmetry: Option<Vec<usize>>,
}

impl Default for SwapConfig {
    fn default() -> Self {
        Self {
            step_budget: DEFAULT_STEP_BUDGET,
            steps: None,
            prune_radius: DEFAULT_PRUNE_RADIUS,
            blur_threshold: None,
            tol: DEFAULT_TOL,
            hair_free: false,
            symmetry: None,
        }
    }
}

impl SwapConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.step_budget)
            || !pos(self.prune_radius)
            || !pos(self.tol)
            || self.steps == Some(0)
        {
            return Err(Error::invalid(format!(
                "swap config fields must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    pub fn step_count(&self) -> StepCount {
        match self.steps {
            Some(n) => StepCount::Fixed(n),
            None => StepCount::Auto {
                budget: self.step_budget,
            },
        }
    }
}

/// One handle per generator role. Without a blending generator the Poisson
/// solve does the blending.
#[derive(Debug)]
pub struct Generators {
    pub reenact: GeneratorHandle,
    pub segment: GeneratorHandle,
    pub inpaint: GeneratorHandle,
    pub blend: Option<GeneratorHandle>,
}

/// A source subject's appearance map and the views it indexes.
#[derive(Clone, Debug)]
pub struct SourceFace {
    pub map: AppearanceMap,
    /// One oriented input per map view, in map order.
    pub views: Vec<ViewInput>,
}

impl SourceFace {
    pub fn build(inputs: Vec<ViewInput>, cfg: &SwapConfig) -> Result<Self> {
        cfg.validate()?;
        let (map, views) = build_from_inputs(
            inputs,
            cfg.symmetry.as_deref(),
            cfg.prune_radius,
            cfg.blur_threshold,
        )?;
        Ok(Self { map, views })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TargetFrame {
    pub image: Image,
    pub landmarks: LandmarkSet,
    pub pose: EulerPose,
}

/// The composited frame and the intermediate rasters that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct SwapOutput {
    pub image: Image,
    pub reenacted: Image,
    pub reenacted_mask: SegMask,
    pub target_mask: SegMask,
    pub completed: Image,
    /// Present when the Poisson solver did the blending.
    pub report: Option<SolverReport>,
}

/// Swaps the source face into one target frame.
pub fn swap(
    source: &SourceFace,
    frame: &TargetFrame,
    cfg: &SwapConfig,
    gens: &Generators,
    kernel: Option<Kernel>,
) -> Result<SwapOutput> {
    cfg.validate()?;
    // out-of-map poses surface as-is rather than as a stage failure
    source.map.query(&frame.pose)?;
    let target = frame.image.to_rgb();
    let (h, w) = (target.height(), target.width());

    let blend_views = interpolate_views_stepwise(
        &source.map,
        &frame.pose,
        &frame.landmarks,
        &source.views,
        &gens.reenact,
        kernel,
        cfg.step_count(),
    )
    .map_err(|e| e.at_stage("view interpolation"))?;
    if (blend_views.height, blend_views.width) != (h, w) {
        return Err(Error::invalid(format!(
            "source views are {}x{} but the target frame is {h}x{w}",
            blend_views.height, blend_views.width
        )));
    }
    let reenacted = blend_views.to_image();
    let s_r = blend_views.mask;

    let s_t = gens
        .segment
        .call(&GenRequest::new(
            Role::Segment,
            target.clone(),
            Conditioning::None,
        )?)
        .map_err(|e| e.at_stage("segmentation"))?
        .mask;

    // known pixels: face in both the reenacted and the target segmentation;
    // the inpainting target shape is the target's face region
    let known = SegMask::from_fn(h, w, |r, c| {
        if s_r.get(r, c) == Label::Face && s_t.get(r, c) == Label::Face {
            Label::Face
        } else {
            Label::Background
        }
    })?;
    let shape = SegMask::from_fn(h, w, |r, c| {
        if s_t.get(r, c) == Label::Face {
            Label::Face
        } else {
            Label::Background
        }
    })?;
    let stripped = remove_background(&reenacted, &known, &BTreeSet::from([Label::Face]))?;
    let completed = gens
        .inpaint
        .call(&GenRequest::new(
            Role::Inpaint,
            stripped,
            Conditioning::Mask(shape),
        )?)
        .map_err(|e| e.at_stage("inpainting"))?
        .image;

    // transfer: the completed face pasted over the target frame
    let transferred = Image::from_fn(h, w, 3, |r, c, k| {
        if s_t.get(r, c) == Label::Face {
            completed.get(r, c, k)
        } else {
            target.get(r, c, k)
        }
    })?;
    let free = free_labels(&s_t, cfg.hair_free);
    let (image, report) = match &gens.blend {
        Some(gb) => {
            let out = gb
                .call(&GenRequest::new(
                    Role::Blend,
                    transferred.clone(),
                    Conditioning::Blend {
                        target: target.clone(),
                        mask: s_t.clone(),
                    },
                )?)
                .map_err(|e| e.at_stage("blending"))?
                .image;
            let composed = Image::from_fn(h, w, 3, |r, c, k| {
                if free[r * w + c] {
                    out.get(r, c, k)
                } else {
                    target.get(r, c, k)
                }
            })?;
            (composed, None)
        }
        None => {
            let problem = BlendProblem::new(target.clone(), transferred, free)?;
            if problem.free_count() == 0 {
                (target.clone(), None)
            } else {
                let opts = SolverOptions {
                    tol: cfg.tol,
                    max_iter: None,
                    method: Method::Auto,
                };
                let (img, report) = blend(&problem, &opts).map_err(|e| e.at_stage("blending"))?;
                (img, Some(report))
            }
        }
    };
    Ok(SwapOutput {
        image,
        reenacted,
        reenacted_mask: s_r,
        target_mask: s_t,
        completed,
        report,
    })
}

/// Swaps every frame in order. Failures name the frame.
pub fn swap_sequence(
    source: &SourceFace,
    frames: &[TargetFrame],
    cfg: &SwapConfig,
    gens: &Generators,
    kernel: Option<Kernel>,
) -> Result<Vec<SwapOutput>> {
    frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            swap(source, f, cfg, gens, kernel).map_err(|e| match e {
                Error::OutOfRange(_) => e,
                other => other.at_stage(format!("frame {i}")),
            })
        })
        .collect()
}

/// Synthesizes a new face view at `pose` by stepwise reenactment of the
/// nearest existing view towards `landmarks`.
pub fn densify(
    source: &SourceFace,
    id: u32,
    pose: &EulerPose,
    landmarks: &LandmarkSet,
    gen: &GeneratorHandle,
    cfg: &SwapConfig,
    kernel: Option<Kernel>,
) -> Result<ViewInput> {
    cfg.validate()?;
    let near = &source.views[source.map.nearest_view(pose_to_plane(pose))];
    let plan = plan_linear(
        &near.landmarks,
        &near.pose,
        landmarks,
        pose,
        cfg.step_count(),
    )?;
    let (image, _) = reenact_sequence(&near.image, &plan, gen, kernel)?;
    Ok(ViewInput {
        id,
        pose: *pose,
        image,
        landmarks: landmarks.clone(),
        flipped: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::mocks::{EchoGenerator, FailingGenerator, MaskRule, MeanFillGenerator};

    fn face_rule() -> MaskRule {
        MaskRule::Ellipse {
            cx: 0.5,
            cy: 0.5,
            rx: 0.3,
            ry: 0.35,
            hair: 0.2,
        }
    }

    fn frame_image(shift: f32) -> Image {
        Image::from_fn(16, 16, 3, |r, c, k| {
            (0.2 + 0.03 * r as f32 + 0.01 * c as f32 + 0.05 * k as f32 + shift).min(1.0)
        })
        .unwrap()
    }

    fn lms() -> LandmarkSet {
        LandmarkSet::new(vec![[5.0, 6.0], [10.0, 6.0], [7.5, 11.0]]).unwrap()
    }

    fn source(img: &Image) -> SourceFace {
        let views = [(-20.0, -10.0), (20.0, -10.0), (0.0, 20.0)]
            .iter()
            .enumerate()
            .map(|(i, &(y, p))| ViewInput {
                id: i as u32,
                pose: EulerPose::new(y, p, 0.0).unwrap(),
                image: img.clone(),
                landmarks: lms(),
                flipped: false,
            })
            .collect();
        SourceFace::build(views, &SwapConfig::default()).unwrap()
    }

    fn echo_gens() -> Generators {
        Generators {
            reenact: GeneratorHandle::mock("echo", EchoGenerator::new(MaskRule::Full)),
            segment: GeneratorHandle::mock("echo", EchoGenerator::new(face_rule())),
            inpaint: GeneratorHandle::mock("fill", MeanFillGenerator),
            blend: None,
        }
    }

    #[test]
    fn identity_pipeline_is_a_fixed_point() {
        let t = frame_image(0.0);
        let src = source(&t);
        let frame = TargetFrame {
            image: t.clone(),
            landmarks: lms(),
            pose: EulerPose::new(1.0, 2.0, 0.0).unwrap(),
        };
        let out = swap(&src, &frame, &SwapConfig::default(), &echo_gens(), None).unwrap();
        let worst = out
            .image
            .data()
            .iter()
            .zip(t.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f32, f32::max);
        assert!(worst < 1e-4, "max deviation {worst}");
    }

    #[test]
    fn outside_face_is_target() {
        let t = frame_image(0.0);
        let src = source(&frame_image(0.2));
        let frame = TargetFrame {
            image: t.clone(),
            landmarks: lms(),
            pose: EulerPose::new(0.0, 0.0, 0.0).unwrap(),
        };
        let out = swap(&src, &frame, &SwapConfig::default(), &echo_gens(), None).unwrap();
        let s_t = face_rule().render(16, 16);
        for r in 0..16 {
            for c in 0..16 {
                if s_t.get(r, c) != Label::Face {
                    for k in 0..3 {
                        assert_eq!(out.image.get(r, c, k).to_bits(), t.get(r, c, k).to_bits());
                    }
                }
            }
        }
        assert!(out.report.is_some());
    }

    #[test]
    fn errors_name_the_stage() {
        let t = frame_image(0.0);
        let src = source(&t);
        let frame = TargetFrame {
            image: t.clone(),
            landmarks: lms(),
            pose: EulerPose::new(0.0, 0.0, 0.0).unwrap(),
        };
        let mut gens = echo_gens();
        gens.inpaint = GeneratorHandle::mock("failing", FailingGenerator::after(0));
        let err = swap(&src, &frame, &SwapConfig::default(), &gens, None).unwrap_err();
        assert!(
            matches!(&err, Error::Pipeline { stage, .. } if stage == "inpainting"),
            "{err}"
        );
        let far = TargetFrame {
            pose: EulerPose::new(80.0, 0.0, 0.0).unwrap(),
            ..frame
        };
        assert!(matches!(
            swap(&src, &far, &SwapConfig::default(), &echo_gens(), None),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn densify_reenacts_nearest_view() {
        let t = frame_image(0.0);
        let src = source(&t);
        let gen = GeneratorHandle::mock("echo", EchoGenerator::new(MaskRule::Full));
        let v = densify(
            &src,
            99,
            &EulerPose::new(-40.0, -10.0, 0.0).unwrap(),
            &lms(),
            &gen,
            &SwapConfig::default(),
            None,
        )
        .unwrap();
        assert_eq!(v.image, t);
        assert_eq!(gen.calls(), 2);
    }
}
