use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default landmark count of the face model.
pub const DEFAULT_LANDMARKS: usize = 70;

/// Ordered 2D landmark positions in pixel coordinates (`x` = column, `y` = row).
/// Points may lie outside the image frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandmarkSet {
    points: Vec<[f64; 2]>,
}

impl LandmarkSet {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::invalid(format!(
                "need at least 3 landmarks, got {}",
                points.len()
            )));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite landmark coordinate"));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> [f64; 2] {
        let n = self.points.len() as f64;
        let (sx, sy) = self
            .points
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p[0], sy + p[1]));
        [sx / n, sy / n]
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            points: self.points.iter().map(|p| [p[0] + dx, p[1] + dy]).collect(),
        }
    }

    /// Mirrors across the vertical center line of a `width`-pixel frame and
    /// reorders so that index `k` of the result is the mirror of `perm[k]`.
    pub fn mirrored(&self, width: usize, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.len())?;
        let w = width as f64 - 1.0;
        let points = perm
            .iter()
            .map(|&k| [w - self.points[k][0], self.points[k][1]])
            .collect();
        Ok(Self { points })
    }

    /// Flattened `[x0, y0, x1, y1, ...]`.
    pub fn flatten(&self) -> Vec<f64> {
        self.points.iter().flatten().copied().collect()
    }
}

/// Ordered 3D landmarks in a camera-aligned frame (x right, y down, z away
/// from the camera), consistent with the 2D landmark pixel frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Landmark3DSet {
    points: Vec<[f64; 3]>,
}

impl Landmark3DSet {
    pub fn new(points: Vec<[f64; 3]>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::invalid(format!(
                "need at least 3 landmarks, got {}",
                points.len()
            )));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite landmark coordinate"));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> [f64; 3] {
        let n = self.points.len() as f64;
        let mut c = [0.0; 3];
        for p in &self.points {
            for i in 0..3 {
                c[i] += p[i];
            }
        }
        c.map(|v| v / n)
    }

    /// Orthographic projection (drops z).
    pub fn project(&self) -> LandmarkSet {
        LandmarkSet {
            points: self.points.iter().map(|p| [p[0], p[1]]).collect(),
        }
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::invalid(format!(
            "symmetry permutation has {} entries for {n} landmarks",
            perm.len()
        )));
    }
    let mut seen = vec![false; n];
    for &k in perm {
        if k >= n || std::mem::replace(&mut seen[k], true) {
            return Err(Error::invalid("symmetry permutation is not a permutation"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn needs_three_finite_points() {
        assert!(LandmarkSet::new(vec![[0.0, 0.0]; 2]).is_err());
        assert!(LandmarkSet::new(vec![[0.0, 0.0], [1.0, f64::NAN], [2.0, 2.0]]).is_err());
        assert!(LandmarkSet::new(vec![[-5.0, 1e4]; 3]).is_ok());
    }

    #[test]
    fn mirror_reorders() {
        let p = LandmarkSet::new(vec![[1.0, 2.0], [8.0, 2.0], [4.5, 6.0]]).unwrap();
        let m = p.mirrored(10, &[1, 0, 2]).unwrap();
        assert_eq!(m.points(), &[[1.0, 2.0], [8.0, 2.0], [4.5, 6.0]]);
        assert!(p.mirrored(10, &[0, 0, 2]).is_err());
        assert!(p.mirrored(10, &[0, 1]).is_err());
    }
}
