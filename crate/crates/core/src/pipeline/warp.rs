//! Thin-plate spline mapping and backward image warping.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::linalg::solve_dense;

/// `f(x) = a0 + a1 x + a2 y + Σ w_i φ(|x - c_i|)` per output coordinate,
/// with `φ(r) = r² log r`. Interpolates its control points exactly.
#[derive(Clone, Debug)]
pub struct ThinPlateSpline {
    centers: Vec<[f64; 2]>,
    weights: Vec<[f64; 2]>,
    affine: [[f64; 2]; 3],
}

fn phi(r2: f64) -> f64 {
    if r2 <= 0.0 {
        0.0
    } else {
        0.5 * r2 * r2.ln()
    }
}

impl ThinPlateSpline {
    /// Fits the spline taking each `from[i]` to `to[i]`.
    pub fn fit(from: &[[f64; 2]], to: &[[f64; 2]]) -> Result<Self> {
        let n = from.len();
        if n != to.len() || n < 3 {
            return Err(Error::invalid(
                "thin-plate spline needs at least 3 matching control points",
            ));
        }
        let m = n + 3;
        let mut a = vec![0.0; m * m];
        for i in 0..n {
            for j in 0..n {
                let (dx, dy) = (from[i][0] - from[j][0], from[i][1] - from[j][1]);
                a[i * m + j] = phi(dx * dx + dy * dy);
            }
            let row = [1.0, from[i][0], from[i][1]];
            for k in 0..3 {
                a[i * m + n + k] = row[k];
                a[(n + k) * m + i] = row[k];
            }
        }
        let solve = |axis: usize| {
            let mut b = vec![0.0; m];
            for i in 0..n {
                b[i] = to[i][axis];
            }
            solve_dense(a.clone(), b)
                .ok_or_else(|| Error::invalid("degenerate thin-plate spline control points"))
        };
        let (sx, sy) = (solve(0)?, solve(1)?);
        Ok(Self {
            centers: from.to_vec(),
            weights: (0..n).map(|i| [sx[i], sy[i]]).collect(),
            affine: [0, 1, 2].map(|k| [sx[n + k], sy[n + k]]),
        })
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let mut out = [
            self.affine[0][0] + self.affine[1][0] * p[0] + self.affine[2][0] * p[1],
            self.affine[0][1] + self.affine[1][1] * p[0] + self.affine[2][1] * p[1],
        ];
        for (c, w) in self.centers.iter().zip(&self.weights) {
            let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
            let u = phi(dx * dx + dy * dy);
            out[0] += w[0] * u;
            out[1] += w[1] * u;
        }
        out
    }
}

/// Bilinear sample at `(x, y)` with coordinates clamped to the frame.
pub fn sample_bilinear(img: &Image, x: f64, y: f64, channel: usize) -> f32 {
    let x = x.clamp(0.0, (img.width() - 1) as f64);
    let y = y.clamp(0.0, (img.height() - 1) as f64);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = (
        (x0 + 1).min(img.width() - 1),
        (y0 + 1).min(img.height() - 1),
    );
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let v = |r, c| img.get(r, c, channel) as f64;
    let top = v(y0, x0) * (1.0 - fx) + v(y0, x1) * fx;
    let bottom = v(y1, x0) * (1.0 - fx) + v(y1, x1) * fx;
    (top * (1.0 - fy) + bottom * fy) as f32
}

/// Warps `img` so that content at `from[i]` moves to `to[i]`.
pub fn warp_image(img: &Image, from: &[[f64; 2]], to: &[[f64; 2]]) -> Result<Image> {
    // backward map: output position -> input position
    let tps = ThinPlateSpline::fit(to, from)?;
    let (h, w, ch) = (img.height(), img.width(), img.channels());
    let mut data = Vec::with_capacity(h * w * ch);
    for r in 0..h {
        for c in 0..w {
            let [x, y] = tps.apply([c as f64, r as f64]);
            data.extend((0..ch).map(|k| sample_bilinear(img, x, y, k)));
        }
    }
    Image::new(h, w, ch, data)
}
