//! Per-subject frame curation: coverage and blur filtering, angular
//! pruning, and a landmark-dispersion cap.

use crate::appearance::{prune_views, ViewCandidate};
use crate::error::{Error, Result};
use crate::landmarks::LandmarkSet;
use crate::pose::PlanePoint;

/// Frames whose face coverage is below this fraction are dropped.
pub const DEFAULT_COVERAGE_MIN: f64 = 0.15;
/// Frames kept per subject.
pub const DEFAULT_FRAME_CAP: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct FrameRecord {
    pub id: String,
    pub point: PlanePoint,
    pub roll: f64,
    /// Larger is blurrier.
    pub blur: Option<f64>,
    /// Fraction of the face bounding box labelled face.
    pub coverage: f64,
    pub landmarks: LandmarkSet,
}

impl FrameRecord {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.coverage) {
            return Err(Error::OutOfRange(format!(
                "frame {}: coverage {} outside [0, 1]",
                self.id, self.coverage
            )));
        }
        if !self.point.is_finite() || !self.roll.is_finite() {
            return Err(Error::invalid(format!(
                "frame {}: non-finite pose",
                self.id
            )));
        }
        Ok(())
    }
}

/// Drops frames with coverage strictly below `coverage_min`, then frames
/// whose blur exceeds `blur_threshold`, then prunes the survivors in the
/// angular domain. Retained frames keep their input order.
pub fn prune_frames(
    frames: &[FrameRecord],
    coverage_min: f64,
    prune_radius: f64,
    blur_threshold: Option<f64>,
) -> Result<Vec<FrameRecord>> {
    if !(0.0..=1.0).contains(&coverage_min) {
        return Err(Error::OutOfRange(format!(
            "coverage threshold {coverage_min} outside [0, 1]"
        )));
    }
    if !(prune_radius.is_finite() && prune_radius > 0.0) {
        return Err(Error::invalid(format!(
            "prune radius must be positive, got {prune_radius}"
        )));
    }
    for f in frames {
        f.validate()?;
    }
    let covered: Vec<&FrameRecord> = frames
        .iter()
        .filter(|f| f.coverage >= coverage_min)
        .collect();
    let cands: Vec<ViewCandidate> = covered
        .iter()
        .map(|f| ViewCandidate {
            point: f.point,
            roll: f.roll,
            blur: f.blur,
        })
        .collect();
    let kept = prune_views(&cands, prune_radius, blur_threshold);
    log::debug!(
        "curation: {} frames, {} covered, {} kept",
        frames.len(),
        covered.len(),
        kept.len()
    );
    Ok(kept.into_iter().map(|i| covered[i].clone()).collect())
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Indices (ascending) of at most `cap` frames with spread-out landmarks.
///
/// Greedy farthest-point selection on the flattened landmark vectors,
/// seeded from the farthest pair. Ties go to the lower index. This is a
/// 2-approximation of max-min dispersion, exact for some inputs (e.g. any
/// `cap <= 2`, or three picks on collinear vectors).
pub fn select_max_variance(frames: &[FrameRecord], cap: usize) -> Result<Vec<usize>> {
    if cap == 0 {
        return Err(Error::invalid("frame cap must be at least 1"));
    }
    let n = frames.len();
    if n <= cap {
        return Ok((0..n).collect());
    }
    let vecs: Vec<Vec<f64>> = frames.iter().map(|f| f.landmarks.flatten()).collect();
    if vecs.iter().any(|v| v.len() != vecs[0].len()) {
        return Err(Error::invalid("frames have differing landmark counts"));
    }
    let (mut bi, mut bj, mut best) = (0, 1, f64::NEG_INFINITY);
    for i in 0..n {
        for j in i + 1..n {
            let d = dist(&vecs[i], &vecs[j]);
            if d > best {
                (bi, bj, best) = (i, j, d);
            }
        }
    }
    let mut chosen = vec![false; n];
    let mut picked = vec![bi];
    chosen[bi] = true;
    if cap >= 2 {
        picked.push(bj);
        chosen[bj] = true;
    }
    let mut near: Vec<f64> = (0..n)
        .map(|k| {
            picked
                .iter()
                .map(|&p| dist(&vecs[k], &vecs[p]))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    while picked.len() < cap {
        let mut next = None;
        for k in (0..n).filter(|&k| !chosen[k]) {
            if next.is_none_or(|b: usize| near[k] > near[b]) {
                next = Some(k);
            }
        }
        let k = next.expect("cap < n leaves candidates");
        chosen[k] = true;
        picked.push(k);
        for m in 0..n {
            near[m] = near[m].min(dist(&vecs[m], &vecs[k]));
        }
    }
    picked.sort_unstable();
    Ok(picked)
}

/// Minimum pairwise landmark distance over a selection.
pub fn dispersion(frames: &[FrameRecord], selection: &[usize]) -> f64 {
    let mut best = f64::INFINITY;
    for (a, &i) in selection.iter().enumerate() {
        for &j in &selection[a + 1..] {
            best = best.min(dist(
                &frames[i].landmarks.flatten(),
                &frames[j].landmarks.flatten(),
            ));
        }
    }
    best
}

/// Coverage/blur/angular pruning followed by the landmark cap.
pub fn curate(
    frames: &[FrameRecord],
    coverage_min: f64,
    prune_radius: f64,
    blur_threshold: Option<f64>,
    cap: usize,
) -> Result<Vec<FrameRecord>> {
    let pruned = prune_frames(frames, coverage_min, prune_radius, blur_threshold)?;
    let keep = select_max_variance(&pruned, cap)?;
    Ok(keep.into_iter().map(|i| pruned[i].clone()).collect())
}
