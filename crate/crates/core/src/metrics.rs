//! Evaluation metrics and per-video aggregation in the "mean ± std" layout.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::landmarks::LandmarkSet;
use crate::pose::{pose_distance, EulerPose};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

fn gray64(img: &Image) -> Vec<f64> {
    match img.channels() {
        1 => img.data().iter().map(|&v| v as f64).collect(),
        _ => img
            .data()
            .chunks_exact(3)
            .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
            .collect(),
    }
}

fn gaussian_window() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as f64;
    let g: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| (-((i as f64 - half).powi(2)) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|v| v / s).collect()
}

/// Mean SSIM over all fully-contained 11×11 Gaussian windows (σ = 1.5),
/// dynamic range 1. Colour inputs are converted to luma first.
pub fn ssim(x: &Image, y: &Image) -> Result<f64> {
    if x.height() != y.height() || x.width() != y.width() {
        return Err(Error::invalid("SSIM operands differ in size"));
    }
    let (h, w) = (x.height(), x.width());
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::invalid(format!(
            "SSIM needs at least {SSIM_WINDOW}×{SSIM_WINDOW} pixels, got {h}×{w}"
        )));
    }
    let (a, b) = (gray64(x), gray64(y));
    let g = gaussian_window();
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let mut total = 0.0;
    for r in 0..=h - SSIM_WINDOW {
        for c in 0..=w - SSIM_WINDOW {
            let (mut mx, mut my, mut xx, mut yy, mut xy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for i in 0..SSIM_WINDOW {
                for j in 0..SSIM_WINDOW {
                    let wt = g[i] * g[j];
                    let k = (r + i) * w + c + j;
                    let (p, q) = (a[k], b[k]);
                    mx += wt * p;
                    my += wt * q;
                    xx += wt * p * p;
                    yy += wt * q * q;
                    xy += wt * (p * q);
                }
            }
            let vx = xx - mx * mx;
            let vy = yy - my * my;
            let cov = xy - mx * my;
            total += ((2.0 * (mx * my) + c1) * (2.0 * cov + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
        }
    }
    Ok(total / ((h - SSIM_WINDOW + 1) * (w - SSIM_WINDOW + 1)) as f64)
}

/// Euclidean distance over yaw, pitch and roll, in degrees.
pub fn pose_error(a: &EulerPose, b: &EulerPose) -> f64 {
    pose_distance(a, b)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum LandmarkReduction {
    /// Norm of the flattened difference vector.
    #[default]
    Flattened,
    /// Mean per-point Euclidean distance.
    MeanPerPoint,
}

pub fn landmark_error(
    a: &LandmarkSet,
    b: &LandmarkSet,
    reduction: LandmarkReduction,
) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "landmark counts differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let d = a
        .points()
        .iter()
        .zip(b.points())
        .map(|(p, q)| (p[0] - q[0], p[1] - q[1]));
    Ok(match reduction {
        LandmarkReduction::Flattened => d.map(|(x, y)| x * x + y * y).sum::<f64>().sqrt(),
        LandmarkReduction::MeanPerPoint => d.map(|(x, y)| x.hypot(y)).sum::<f64>() / a.len() as f64,
    })
}

/// Index of the reference pose closest to `query` over all three angles.
/// Ties resolve to the lower index.
pub fn nearest_pose(references: &[EulerPose], query: &EulerPose) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in references.iter().enumerate() {
        let d = pose_distance(p, query);
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

/// Metrics for one result frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SwapEval {
    /// Pre-computed identity verification distance, if supplied.
    pub verification: Option<f64>,
    pub ssim: f64,
    pub euler_err: f64,
    pub landmark_err: f64,
}

impl SwapEval {
    pub fn validate(&self) -> Result<()> {
        let ok = (-1.0..=1.0).contains(&self.ssim)
            && self.euler_err >= 0.0
            && self.landmark_err >= 0.0
            && self.euler_err.is_finite()
            && self.landmark_err.is_finite()
            && self.verification.is_none_or(f64::is_finite);
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "invalid evaluation record {self:?}"
            )))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    /// Population standard deviation across videos.
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Result<Stat> {
        if values.is_empty() {
            return Err(Error::invalid("no values to aggregate"));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Ok(Stat {
            mean,
            std: var.sqrt(),
        })
    }
}

impl fmt::Display for Stat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} ± {:.2}", self.mean, self.std)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub videos: usize,
    pub frames: usize,
    pub verification: Option<Stat>,
    pub ssim: Stat,
    pub euler: Stat,
    pub landmarks: Stat,
}

pub const TABLE_HEADER: &str = "method,verification,ssim,euler,landmarks";

impl Summary {
    /// One CSV row under [`TABLE_HEADER`]. Missing verification is `-`.
    pub fn csv_row(&self, method: &str) -> String {
        let ver = self
            .verification
            .map_or_else(|| "-".to_string(), |s| s.to_string());
        format!(
            "{method},{ver},{},{},{}",
            self.ssim, self.euler, self.landmarks
        )
    }
}

/// Per-video means, then mean and population std of those means.
/// Verification is aggregated only when every frame carries it.
pub fn aggregate(videos: &[Vec<SwapEval>]) -> Result<Summary> {
    if videos.is_empty() || videos.iter().any(|v| v.is_empty()) {
        return Err(Error::invalid(
            "aggregation needs at least one frame per video",
        ));
    }
    let frames: Vec<&SwapEval> = videos.iter().flatten().collect();
    for e in &frames {
        e.validate()?;
    }
    let with_ver = frames.iter().filter(|e| e.verification.is_some()).count();
    if with_ver != 0 && with_ver != frames.len() {
        return Err(Error::invalid(
            "verification scores present for only some frames",
        ));
    }
    let per_video = |f: &dyn Fn(&SwapEval) -> f64| -> Vec<f64> {
        videos
            .iter()
            .map(|v| v.iter().map(f).sum::<f64>() / v.len() as f64)
            .collect()
    };
    Ok(Summary {
        videos: videos.len(),
        frames: frames.len(),
        verification: if with_ver > 0 {
            Some(Stat::of(&per_video(&|e| e.verification.unwrap_or(0.0)))?)
        } else {
            None
        },
        ssim: Stat::of(&per_video(&|e| e.ssim))?,
        euler: Stat::of(&per_video(&|e| e.euler_err))?,
        landmarks: Stat::of(&per_video(&|e| e.landmark_err))?,
    })
}
