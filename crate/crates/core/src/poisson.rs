//! Gradient-domain blending: find `f` minimizing `‖∇f − ∇s‖²` subject to
//! `f = t` on constrained pixels, where `s` is the transferred source and
//! `t` the target frame.
//!
//! The minimizer satisfies, at every free pixel `p`,
//! `Σ_{q ∈ N(p)} (f_p − f_q) = Σ_{q ∈ N(p)} (s_p − s_q)` over the in-frame
//! 4-neighbours `N(p)`, with constrained neighbours contributing known
//! values. Free regions with no constrained neighbour are only determined up
//! to a constant; those are set to the source shifted to match the target
//! mean over the region.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{Image, Label, SegMask};

pub const DEFAULT_TOL: f64 = 1e-6;
/// Free-pixel count below which [`Method::Auto`] solves directly.
pub const DIRECT_LIMIT: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Auto,
    Direct,
    ConjugateGradient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    /// Largest iteration count over the channels (1 for direct solves).
    pub iterations: usize,
    /// Largest per-channel L2 norm of the linear-system residual.
    pub residual: f64,
    pub method: Method,
    pub free_pixels: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    /// Defaults to `10·√(free pixels) + 1000`.
    pub max_iter: Option<usize>,
    pub method: Method,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: None,
            method: Method::Auto,
        }
    }
}

/// Target frame, transferred source, and which pixels are free.
#[derive(Clone, Debug, PartialEq)]
pub struct BlendProblem {
    target: Image,
    source: Image,
    free: Vec<bool>,
}

impl BlendProblem {
    pub fn new(target: Image, source: Image, free: Vec<bool>) -> Result<Self> {
        if !target.same_shape(&source) {
            return Err(Error::invalid("target and source rasters differ in shape"));
        }
        if free.len() != target.height() * target.width() {
            return Err(Error::invalid(
                "transfer mask size differs from the rasters",
            ));
        }
        Ok(Self {
            target,
            source,
            free,
        })
    }

    /// Face pixels (and hair pixels when `hair_free`) are free.
    pub fn from_segmask(
        target: Image,
        source: Image,
        mask: &SegMask,
        hair_free: bool,
    ) -> Result<Self> {
        if !mask.matches(&target) {
            return Err(Error::invalid("mask size differs from the rasters"));
        }
        Self::new(target, source, free_labels(mask, hair_free))
    }

    pub fn target(&self) -> &Image {
        &self.target
    }

    pub fn source(&self) -> &Image {
        &self.source
    }

    pub fn free(&self) -> &[bool] {
        &self.free
    }

    pub fn free_count(&self) -> usize {
        self.free.iter().filter(|&&f| f).count()
    }
}

pub fn free_labels(mask: &SegMask, hair_free: bool) -> Vec<bool> {
    mask.labels()
        .iter()
        .map(|&l| l == Label::Face || (hair_free && l == Label::Hair))
        .collect()
}

/// Forward differences per channel, interleaved like the image.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    /// `I(i, j+1) − I(i, j)`, zero on the last column.
    pub gx: Vec<f64>,
    /// `I(i+1, j) − I(i, j)`, zero on the last row.
    pub gy: Vec<f64>,
}

pub fn discrete_gradient(img: &Image) -> Result<GradientField> {
    let (h, w, ch) = (img.height(), img.width(), img.channels());
    if h < 2 || w < 2 {
        return Err(Error::invalid(format!(
            "gradient needs at least 2x2 pixels, got {h}x{w}"
        )));
    }
    let mut gx = vec![0.0; h * w * ch];
    let mut gy = vec![0.0; h * w * ch];
    for r in 0..h {
        for c in 0..w {
            for k in 0..ch {
                let i = (r * w + c) * ch + k;
                let v = img.get(r, c, k) as f64;
                if c + 1 < w {
                    gx[i] = img.get(r, c + 1, k) as f64 - v;
                }
                if r + 1 < h {
                    gy[i] = img.get(r + 1, c, k) as f64 - v;
                }
            }
        }
    }
    Ok(GradientField {
        height: h,
        width: w,
        channels: ch,
        gx,
        gy,
    })
}

/// `Σ (∇f − ∇s)²` over all forward-difference pairs of one plane.
pub fn gradient_energy(f: &[f64], s: &[f64], height: usize, width: usize) -> f64 {
    let mut e = 0.0;
    for r in 0..height {
        for c in 0..width {
            let i = r * width + c;
            if c + 1 < width {
                e += ((f[i + 1] - f[i]) - (s[i + 1] - s[i])).powi(2);
            }
            if r + 1 < height {
                e += ((f[i + width] - f[i]) - (s[i + width] - s[i])).powi(2);
            }
        }
    }
    e
}

/// 4-neighbour Laplacian of one plane at an interior pixel.
pub fn laplacian_at(plane: &[f64], width: usize, r: usize, c: usize) -> f64 {
    let i = r * width + c;
    plane[i - 1] + plane[i + 1] + plane[i - width] + plane[i + width] - 4.0 * plane[i]
}

/// Unclamped solution planes, row-major, one per channel.
#[derive(Clone, Debug, PartialEq)]
pub struct BlendSolution {
    pub height: usize,
    pub width: usize,
    pub planes: Vec<Vec<f64>>,
    pub report: SolverReport,
}

impl BlendSolution {
    /// Clamps into `[0, 1]`; constrained pixels carry the target samples.
    pub fn to_image(&self, problem: &BlendProblem) -> Image {
        let t = &problem.target;
        Image::from_fn(self.height, self.width, self.planes.len(), |r, c, k| {
            let i = r * self.width + c;
            if problem.free[i] {
                self.planes[k][i] as f32
            } else {
                t.get(r, c, k)
            }
        })
        .expect("clamped samples")
    }
}

/// Free-pixel structure shared by all channels.
struct System {
    height: usize,
    width: usize,
    /// pixel -> unknown index, for free pixels in anchored regions
    unknown: Vec<Option<usize>>,
    pixels: Vec<usize>,
    degree: Vec<f64>,
    /// free pixels of regions without any constrained neighbour
    floating: Vec<Vec<usize>>,
}

fn neighbours(i: usize, h: usize, w: usize) -> impl Iterator<Item = usize> {
    let (r, c) = (i / w, i % w);
    [
        (r > 0).then(|| i - w),
        (c > 0).then(|| i - 1),
        (c + 1 < w).then(|| i + 1),
        (r + 1 < h).then(|| i + w),
    ]
    .into_iter()
    .flatten()
}

impl System {
    fn new(free: &[bool], h: usize, w: usize) -> Self {
        // label 4-connected free regions
        let mut region = vec![usize::MAX; h * w];
        let mut regions: Vec<(Vec<usize>, bool)> = Vec::new();
        for start in 0..h * w {
            if !free[start] || region[start] != usize::MAX {
                continue;
            }
            let id = regions.len();
            let mut members = Vec::new();
            let mut anchored = false;
            let mut stack = vec![start];
            region[start] = id;
            while let Some(p) = stack.pop() {
                members.push(p);
                for q in neighbours(p, h, w) {
                    if !free[q] {
                        anchored = true;
                    } else if region[q] == usize::MAX {
                        region[q] = id;
                        stack.push(q);
                    }
                }
            }
            members.sort_unstable();
            regions.push((members, anchored));
        }
        let mut unknown = vec![None; h * w];
        let mut pixels = Vec::new();
        for i in 0..h * w {
            if free[i] && regions[region[i]].1 {
                unknown[i] = Some(pixels.len());
                pixels.push(i);
            }
        }
        let degree = pixels
            .iter()
            .map(|&p| neighbours(p, h, w).count() as f64)
            .collect();
        let floating = regions
            .into_iter()
            .filter(|(_, a)| !a)
            .map(|(m, _)| m)
            .collect();
        Self {
            height: h,
            width: w,
            unknown,
            pixels,
            degree,
            floating,
        }
    }

    fn n(&self) -> usize {
        self.pixels.len()
    }

    fn rhs(&self, s: &[f64], t: &[f64]) -> Vec<f64> {
        self.pixels
            .iter()
            .map(|&p| {
                neighbours(p, self.height, self.width)
                    .map(|q| (s[p] - s[q]) + if self.unknown[q].is_none() { t[q] } else { 0.0 })
                    .sum()
            })
            .collect()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (k, &p) in self.pixels.iter().enumerate() {
            let mut v = self.degree[k] * x[k];
            for q in neighbours(p, self.height, self.width) {
                if let Some(j) = self.unknown[q] {
                    v -= x[j];
                }
            }
            out[k] = v;
        }
    }

    fn residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let mut ax = vec![0.0; x.len()];
        self.apply(x, &mut ax);
        ax.iter()
            .zip(b)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    /// Jacobi-preconditioned conjugate gradient from `x`.
    fn pcg(&self, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> (usize, f64) {
        let n = self.n();
        let mut ax = vec![0.0; n];
        self.apply(x, &mut ax);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let mut z: Vec<f64> = r.iter().zip(&self.degree).map(|(r, d)| r / d).collect();
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut ap = vec![0.0; n];
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut it = 0;
        while it < max_iter && norm(&r) > tol {
            self.apply(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if pap <= 0.0 {
                break;
            }
            let alpha = rz / pap;
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            for k in 0..n {
                z[k] = r[k] / self.degree[k];
            }
            let rz_next: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_next / rz;
            rz = rz_next;
            for k in 0..n {
                p[k] = z[k] + beta * p[k];
            }
            it += 1;
        }
        (it, self.residual(x, b))
    }

    /// Banded Cholesky factorization of the system matrix.
    fn factor(&self) -> Result<BandedCholesky> {
        let n = self.n();
        let mut bw = 0;
        for (k, &p) in self.pixels.iter().enumerate() {
            for q in neighbours(p, self.height, self.width) {
                if let Some(j) = self.unknown[q] {
                    bw = bw.max(k.abs_diff(j));
                }
            }
        }
        // lower band: band[i * (bw + 1) + (i - j)] = L[i][j] for i - bw <= j <= i
        let stride = bw + 1;
        let mut band = vec![0.0; n * stride];
        for (k, &p) in self.pixels.iter().enumerate() {
            band[k * stride] = self.degree[k];
            for q in neighbours(p, self.height, self.width) {
                if let Some(j) = self.unknown[q] {
                    if j < k {
                        band[k * stride + (k - j)] = -1.0;
                    }
                }
            }
        }
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut sum = band[i * stride + (i - j)];
                let klo = lo.max(j.saturating_sub(bw));
                for k in klo..j {
                    sum -= band[i * stride + (i - k)] * band[j * stride + (j - k)];
                }
                if i == j {
                    if sum <= 0.0 {
                        return Err(Error::invalid("blend system is not positive definite"));
                    }
                    band[i * stride] = sum.sqrt();
                } else {
                    band[i * stride + (i - j)] = sum / band[j * stride];
                }
            }
        }
        Ok(BandedCholesky { n, bw, band })
    }
}

struct BandedCholesky {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl BandedCholesky {
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw, stride) = (self.n, self.bw, self.bw + 1);
        let mut y = b.to_vec();
        for i in 0..n {
            for k in i.saturating_sub(bw)..i {
                y[i] -= self.band[i * stride + (i - k)] * y[k];
            }
            y[i] /= self.band[i * stride];
        }
        for i in (0..n).rev() {
            for k in i + 1..(i + bw + 1).min(n) {
                y[i] -= self.band[k * stride + (k - i)] * y[k];
            }
            y[i] /= self.band[i * stride];
        }
        y
    }
}

/// Solves every channel and returns the unclamped solution.
pub fn solve(problem: &BlendProblem, opts: &SolverOptions) -> Result<BlendSolution> {
    if !(opts.tol > 0.0 && opts.tol.is_finite()) {
        return Err(Error::invalid(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let (h, w) = (problem.target.height(), problem.target.width());
    let system = System::new(&problem.free, h, w);
    let n = system.n();
    let method = match opts.method {
        Method::Auto if n < DIRECT_LIMIT => Method::Direct,
        Method::Auto => Method::ConjugateGradient,
        m => m,
    };
    let max_iter = opts
        .max_iter
        .unwrap_or(10 * (problem.free_count() as f64).sqrt() as usize + 1000);
    let factor = match method {
        Method::Direct if n > 0 => Some(system.factor()?),
        _ => None,
    };
    let mut report = SolverReport {
        iterations: 0,
        residual: 0.0,
        method,
        free_pixels: problem.free_count(),
    };
    let mut planes = Vec::with_capacity(problem.target.channels());
    for ch in 0..problem.target.channels() {
        let t: Vec<f64> = problem
            .target
            .plane(ch)
            .into_iter()
            .map(f64::from)
            .collect();
        let s: Vec<f64> = problem
            .source
            .plane(ch)
            .into_iter()
            .map(f64::from)
            .collect();
        let mut f = t.clone();
        for members in &system.floating {
            let shift = members.iter().map(|&p| t[p] - s[p]).sum::<f64>() / members.len() as f64;
            for &p in members {
                f[p] = s[p] + shift;
            }
        }
        if n > 0 {
            let b = system.rhs(&s, &t);
            let (x, iterations, residual) = match &factor {
                Some(chol) => {
                    let x = chol.solve(&b);
                    let res = system.residual(&x, &b);
                    (x, 1, res)
                }
                None => {
                    let mut x: Vec<f64> = system.pixels.iter().map(|&p| s[p]).collect();
                    let (it, res) = system.pcg(&b, &mut x, opts.tol, max_iter);
                    (x, it, res)
                }
            };
            report.iterations = report.iterations.max(iterations);
            report.residual = report.residual.max(residual);
            for (k, &p) in system.pixels.iter().enumerate() {
                f[p] = x[k];
            }
        }
        planes.push(f);
    }
    if report.residual > opts.tol {
        return Err(Error::Convergence(report));
    }
    log::debug!("poisson solve: {:?}", report);
    Ok(BlendSolution {
        height: h,
        width: w,
        planes,
        report,
    })
}

/// Solves and clamps into an image. The report's residual is measured
/// before clamping.
pub fn blend(problem: &BlendProblem, opts: &SolverOptions) -> Result<(Image, SolverReport)> {
    let solution = solve(problem, opts)?;
    Ok((solution.to_image(problem), solution.report))
}
