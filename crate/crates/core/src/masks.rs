//! Segmentation-mask utilities: coverage, background removal, and random
//! elliptical occlusion of the face border.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{Image, Label, SegMask};

/// Half-open pixel rectangle `[row0, row1) × [col0, col1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub row0: usize,
    pub col0: usize,
    pub row1: usize,
    pub col1: usize,
}

impl Rect {
    pub fn area(&self) -> usize {
        self.row1.saturating_sub(self.row0) * self.col1.saturating_sub(self.col0)
    }
}

/// Fraction of pixels inside `bbox` carrying `label`.
pub fn coverage_ratio(mask: &SegMask, bbox: Rect, label: Label) -> Result<f64> {
    if bbox.area() == 0 {
        return Err(Error::invalid("empty bounding box"));
    }
    if bbox.row1 > mask.height() || bbox.col1 > mask.width() {
        return Err(Error::invalid(format!(
            "bounding box {bbox:?} exceeds the {}x{} mask",
            mask.height(),
            mask.width()
        )));
    }
    let count = (bbox.row0..bbox.row1)
        .flat_map(|r| (bbox.col0..bbox.col1).map(move |c| (r, c)))
        .filter(|&(r, c)| mask.get(r, c) == label)
        .count();
    Ok(count as f64 / bbox.area() as f64)
}

/// Tight bounding box of all pixels with `label`, if any.
pub fn label_bbox(mask: &SegMask, label: Label) -> Option<Rect> {
    let mut bbox: Option<Rect> = None;
    for r in 0..mask.height() {
        for c in 0..mask.width() {
            if mask.get(r, c) == label {
                let b = bbox.get_or_insert(Rect {
                    row0: r,
                    col0: c,
                    row1: r + 1,
                    col1: c + 1,
                });
                b.row0 = b.row0.min(r);
                b.col0 = b.col0.min(c);
                b.row1 = b.row1.max(r + 1);
                b.col1 = b.col1.max(c + 1);
            }
        }
    }
    bbox
}

/// Copies pixels whose label is in `keep` and zeroes the rest.
pub fn remove_background(img: &Image, mask: &SegMask, keep: &BTreeSet<Label>) -> Result<Image> {
    if !mask.matches(img) {
        return Err(Error::invalid("mask and image sizes differ"));
    }
    Image::from_fn(img.height(), img.width(), img.channels(), |r, c, k| {
        if keep.contains(&mask.get(r, c)) {
            img.get(r, c, k)
        } else {
            0.0
        }
    })
}

/// Parameters of the random border occlusion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OcclusionSpec {
    /// Inclusive range of ellipse counts.
    pub count: (usize, usize),
    /// Semi-major axis range as a fraction of the face bounding box's longer side.
    pub semi_axis: (f64, f64),
    /// Minor/major axis ratio range.
    pub aspect: (f64, f64),
    pub seed: u64,
}

impl Default for OcclusionSpec {
    fn default() -> Self {
        Self {
            count: (1, 3),
            semi_axis: (0.05, 0.25),
            aspect: (0.3, 1.0),
            seed: 0,
        }
    }
}

impl OcclusionSpec {
    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.count;
        let range_ok = |(a, b): (f64, f64)| a > 0.0 && a <= b && b.is_finite();
        if lo > hi || !range_ok(self.semi_axis) || !range_ok(self.aspect) || self.aspect.1 > 1.0 {
            return Err(Error::invalid(format!("invalid occlusion spec {self:?}")));
        }
        Ok(())
    }
}

/// Rotated ellipse in pixel coordinates (`x` = column, `y` = row).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub a: f64,
    pub b: f64,
    /// Rotation of the `a` axis from the x axis, radians.
    pub theta: f64,
}

impl Ellipse {
    /// Pixel centers on or inside the ellipse count as covered.
    pub fn contains(&self, row: usize, col: usize) -> bool {
        let (dx, dy) = (col as f64 - self.cx, row as f64 - self.cy);
        let (s, c) = self.theta.sin_cos();
        let u = (dx * c + dy * s) / self.a;
        let v = (-dx * s + dy * c) / self.b;
        u * u + v * v <= 1.0
    }
}

/// Face pixels with a 4-neighbour outside the face class (or on the frame edge).
pub fn face_boundary(mask: &SegMask) -> Vec<(usize, usize)> {
    let (h, w) = (mask.height(), mask.width());
    let mut out = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if mask.get(r, c) != Label::Face {
                continue;
            }
            let edge = r == 0 || c == 0 || r + 1 == h || c + 1 == w;
            if edge
                || mask.get(r - 1, c) != Label::Face
                || mask.get(r + 1, c) != Label::Face
                || mask.get(r, c - 1) != Label::Face
                || mask.get(r, c + 1) != Label::Face
            {
                out.push((r, c));
            }
        }
    }
    out
}

/// Samples the ellipses of one occlusion draw.
pub fn sample_occluders(mask: &SegMask, spec: &OcclusionSpec) -> Result<Vec<Ellipse>> {
    spec.validate()?;
    let boundary = face_boundary(mask);
    let bbox = label_bbox(mask, Label::Face)
        .ok_or_else(|| Error::invalid("mask has no face pixels to occlude"))?;
    let side = (bbox.row1 - bbox.row0).max(bbox.col1 - bbox.col0) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let k = rng.gen_range(spec.count.0..=spec.count.1);
    Ok((0..k)
        .map(|_| {
            let (row, col) = boundary[rng.gen_range(0..boundary.len())];
            let a = side * rng.gen_range(spec.semi_axis.0..=spec.semi_axis.1);
            let b = a * rng.gen_range(spec.aspect.0..=spec.aspect.1);
            let theta = rng.gen_range(0.0..std::f64::consts::PI);
            Ellipse {
                cx: col as f64,
                cy: row as f64,
                a,
                b,
                theta,
            }
        })
        .collect())
}

/// Sets every pixel covered by `ellipses` to background.
pub fn apply_occluders(mask: &SegMask, ellipses: &[Ellipse]) -> SegMask {
    let mut out = mask.clone();
    for e in ellipses {
        let r0 = (e.cy - e.a).floor().max(0.0) as usize;
        let r1 = ((e.cy + e.a).ceil().max(0.0) as usize + 1).min(mask.height());
        let c0 = (e.cx - e.a).floor().max(0.0) as usize;
        let c1 = ((e.cx + e.a).ceil().max(0.0) as usize + 1).min(mask.width());
        for r in r0..r1 {
            for c in c0..c1 {
                if e.contains(r, c) {
                    out.set(r, c, Label::Background);
                }
            }
        }
    }
    out
}

/// Removes randomly sized and rotated ellipses centered on the face border.
/// Deterministic for a fixed `spec.seed`.
pub fn occlude_border(mask: &SegMask, spec: &OcclusionSpec) -> Result<SegMask> {
    Ok(apply_occluders(mask, &sample_occluders(mask, spec)?))
}
