//! Landmark heatmap rendering.

use crate::error::{Error, Result};
use crate::landmarks::LandmarkSet;

/// Per-landmark response kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kernel {
    /// Unnormalized Gaussian, peak 1 at the landmark.
    Gaussian { sigma: f64 },
    /// Binary disk of the given radius.
    Disk { radius: f64 },
}

impl Kernel {
    /// Gaussian with `sigma = max(height, width) / 64`.
    pub fn default_for(height: usize, width: usize) -> Self {
        Kernel::Gaussian {
            sigma: height.max(width) as f64 / 64.0,
        }
    }
}

/// One channel per landmark, each `height × width`, values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl Heatmap {
    pub fn from_planes(
        channels: usize,
        height: usize,
        width: usize,
        data: Vec<f32>,
    ) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::invalid("heatmap data length mismatch"));
        }
        if data
            .iter()
            .any(|v| !(v.is_finite() && (0.0..=1.0).contains(v)))
        {
            return Err(Error::invalid("heatmap values must lie in [0,1]"));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Channel-major samples: channel `k` occupies `k*H*W .. (k+1)*H*W`.
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn channel(&self, k: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.data[k * n..(k + 1) * n]
    }

    #[inline]
    pub fn get(&self, k: usize, row: usize, col: usize) -> f32 {
        self.data[(k * self.height + row) * self.width + col]
    }

    /// Sub-pixel peak of channel `k`. Fits a parabola to the log response
    /// through the arg-max pixel and its axis neighbours, which recovers the
    /// center of a Gaussian exactly; falls back to the 3×3 centroid when the
    /// neighbourhood has zero samples.
    pub fn peak(&self, k: usize) -> [f64; 2] {
        let ch = self.channel(k);
        let (best, _) =
            ch.iter().enumerate().fold(
                (0, f32::MIN),
                |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
            );
        let (r0, c0) = (best / self.width, best % self.width);
        let at = |r: usize, c: usize| ch[r * self.width + c] as f64;
        let vertex = |l: f64, m: f64, r: f64| -> Option<f64> {
            if l <= 0.0 || m <= 0.0 || r <= 0.0 {
                return None;
            }
            let (l, m, r) = (l.ln(), m.ln(), r.ln());
            let denom = l - 2.0 * m + r;
            (denom < 0.0).then(|| 0.5 * (l - r) / denom)
        };
        let dx = if c0 > 0 && c0 + 1 < self.width {
            vertex(at(r0, c0 - 1), at(r0, c0), at(r0, c0 + 1))
        } else {
            Some(0.0)
        };
        let dy = if r0 > 0 && r0 + 1 < self.height {
            vertex(at(r0 - 1, c0), at(r0, c0), at(r0 + 1, c0))
        } else {
            Some(0.0)
        };
        if let (Some(dx), Some(dy)) = (dx, dy) {
            return [c0 as f64 + dx, r0 as f64 + dy];
        }
        let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
        for r in r0.saturating_sub(1)..(r0 + 2).min(self.height) {
            for c in c0.saturating_sub(1)..(c0 + 2).min(self.width) {
                let w = at(r, c);
                sx += w * c as f64;
                sy += w * r as f64;
                sw += w;
            }
        }
        [sx / sw, sy / sw]
    }
}

/// Renders `landmarks` into an `N × height × width` heatmap, evaluating the
/// kernel at pixel centers (pixel `(row, col)` sits at `x = col, y = row`).
/// Off-frame landmarks still contribute their kernel tail.
pub fn encode_landmarks(
    landmarks: &LandmarkSet,
    height: usize,
    width: usize,
    kernel: Kernel,
) -> Result<Heatmap> {
    if height == 0 || width == 0 {
        return Err(Error::invalid("heatmap dimensions must be positive"));
    }
    match kernel {
        Kernel::Gaussian { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
            return Err(Error::invalid(format!(
                "gaussian sigma must be positive, got {sigma}"
            )))
        }
        Kernel::Disk { radius } if !(radius > 0.0 && radius.is_finite()) => {
            return Err(Error::invalid(format!(
                "disk radius must be positive, got {radius}"
            )))
        }
        _ => {}
    }
    let n = landmarks.len();
    let mut data = vec![0.0f32; n * height * width];
    for (k, p) in landmarks.points().iter().enumerate() {
        let plane = &mut data[k * height * width..(k + 1) * height * width];
        for r in 0..height {
            let dy = r as f64 - p[1];
            for c in 0..width {
                let dx = c as f64 - p[0];
                let d2 = dx * dx + dy * dy;
                plane[r * width + c] = match kernel {
                    Kernel::Gaussian { sigma } => (-d2 / (2.0 * sigma * sigma)).exp() as f32,
                    Kernel::Disk { radius } => (d2 <= radius * radius) as u8 as f32,
                };
            }
        }
    }
    Ok(Heatmap {
        channels: n,
        height,
        width,
        data,
    })
}
