//! Training-loss formulas over caller-supplied tensors: perceptual, pixel,
//! reconstruction, multi-scale adversarial, and the per-generator composite
//! objectives. Each differentiable loss has its analytic (sub)gradient
//! alongside.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{Image, SegMask};

/// Scores are clamped into `[EPS, 1 - EPS]` before taking logs.
pub const SCORE_EPS: f64 = 1e-7;

/// Activations of one network layer, `C × H × W`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    pub layer: usize,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(
        layer: usize,
        channels: usize,
        height: usize,
        width: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::invalid("feature map dimensions must be positive"));
        }
        if data.len() != channels * height * width {
            return Err(Error::invalid("feature map data length mismatch"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("feature map holds non-finite values"));
        }
        Ok(Self {
            layer,
            channels,
            height,
            width,
            data,
        })
    }

    fn dims(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }
}

/// One discriminator scale's per-patch probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMap {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl ScoreMap {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height * width == 0 || data.len() != height * width {
            return Err(Error::invalid("score map dimensions mismatch"));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    fn clamped(&self) -> Result<Vec<f64>> {
        self.data
            .iter()
            .map(|&v| {
                if (0.0..=1.0).contains(&v) {
                    Ok(v.clamp(SCORE_EPS, 1.0 - SCORE_EPS))
                } else {
                    Err(Error::invalid(format!(
                        "discriminator score {v} is not a probability"
                    )))
                }
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub perc: f64,
    pub pixel: f64,
    pub adv: f64,
    pub seg: f64,
    pub rec: f64,
    pub stepwise: f64,
    /// Ramped from 0 to 1 during segmentation training; see [`reenactment_weight`].
    pub reenactment: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            perc: 1.0,
            pixel: 0.1,
            adv: 0.001,
            seg: 0.1,
            rec: 1.0,
            stepwise: 1.0,
            reenactment: 0.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.perc,
            self.pixel,
            self.adv,
            self.seg,
            self.rec,
            self.stepwise,
            self.reenactment,
        ];
        if all.iter().all(|w| w.is_finite() && *w >= 0.0) {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "loss weights must be finite and non-negative: {self:?}"
            )))
        }
    }
}

/// Linear ramp of the segmentation guidance weight over training progress in `[0, 1]`.
pub fn reenactment_weight(progress: f64) -> f64 {
    progress.clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Reduction {
    #[default]
    Sum,
    Mean,
}

fn check_layers(fx: &[FeatureMap], fy: &[FeatureMap]) -> Result<()> {
    if fx.len() != fy.len() {
        return Err(Error::invalid(format!(
            "{} vs {} feature layers",
            fx.len(),
            fy.len()
        )));
    }
    for (a, b) in fx.iter().zip(fy) {
        if a.dims() != b.dims() {
            return Err(Error::invalid(format!(
                "layer {} dims {:?} vs {:?}",
                a.layer,
                a.dims(),
                b.dims()
            )));
        }
    }
    Ok(())
}

/// `Σ_i ‖F_i(x) − F_i(y)‖₁ / (C_i H_i W_i)`.
pub fn perceptual_loss(fx: &[FeatureMap], fy: &[FeatureMap]) -> Result<f64> {
    check_layers(fx, fy)?;
    Ok(fx
        .iter()
        .zip(fy)
        .map(|(a, b)| {
            a.data
                .iter()
                .zip(&b.data)
                .map(|(p, q)| (p - q).abs())
                .sum::<f64>()
                / a.data.len() as f64
        })
        .sum())
}

/// Subgradient of [`perceptual_loss`] with respect to `fx`, per layer.
pub fn perceptual_grad(fx: &[FeatureMap], fy: &[FeatureMap]) -> Result<Vec<Vec<f64>>> {
    check_layers(fx, fy)?;
    Ok(fx
        .iter()
        .zip(fy)
        .map(|(a, b)| {
            let n = a.data.len() as f64;
            a.data
                .iter()
                .zip(&b.data)
                .map(|(p, q)| sign(p - q) / n)
                .collect()
        })
        .collect())
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// L1 distance of two sample vectors.
pub fn l1(x: &[f64], y: &[f64], reduction: Reduction) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::invalid(format!(
            "L1 operands differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let sum: f64 = x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
    Ok(match reduction {
        Reduction::Sum => sum,
        Reduction::Mean => sum / x.len() as f64,
    })
}

pub fn l1_grad(x: &[f64], y: &[f64], reduction: Reduction) -> Result<Vec<f64>> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::invalid("L1 operands differ in length"));
    }
    let scale = match reduction {
        Reduction::Sum => 1.0,
        Reduction::Mean => 1.0 / x.len() as f64,
    };
    Ok(x.iter().zip(y).map(|(a, b)| scale * sign(a - b)).collect())
}

fn samples(img: &Image) -> Vec<f64> {
    img.data().iter().map(|&v| v as f64).collect()
}

/// Pixelwise `‖x − y‖₁`, summed unless `reduction` says otherwise.
pub fn pixel_loss(x: &Image, y: &Image, reduction: Reduction) -> Result<f64> {
    if !x.same_shape(y) {
        return Err(Error::invalid("pixel loss operands differ in shape"));
    }
    l1(&samples(x), &samples(y), reduction)
}

/// `λ_perc · L_perc + λ_pixel · L_pixel`.
pub fn reconstruction_loss(
    x: &Image,
    y: &Image,
    fx: &[FeatureMap],
    fy: &[FeatureMap],
    w: &LossWeights,
) -> Result<f64> {
    w.validate()?;
    Ok(w.perc * perceptual_loss(fx, fy)? + w.pixel * pixel_loss(x, y, Reduction::Sum)?)
}

/// Gradient of the reconstruction loss with respect to the samples of `x`
/// and the features of `x`.
pub fn reconstruction_grad(
    x: &[f64],
    y: &[f64],
    fx: &[FeatureMap],
    fy: &[FeatureMap],
    w: &LossWeights,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let gx = l1_grad(x, y, Reduction::Sum)?
        .into_iter()
        .map(|g| w.pixel * g)
        .collect();
    let gf = perceptual_grad(fx, fy)?
        .into_iter()
        .map(|l| l.into_iter().map(|g| w.perc * g).collect())
        .collect();
    Ok((gx, gf))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Generator,
    Discriminator,
}

/// Which generator objective the adversarial term uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GanReading {
    /// `−E[log D(x, G(x))]`.
    #[default]
    NonSaturating,
    /// `E[log(1 − D(x, G(x)))]`, the literal min-max term.
    MinMax,
}

fn mean_log(v: &[f64]) -> f64 {
    v.iter().map(|p| p.ln()).sum::<f64>() / v.len() as f64
}

fn mean_log1m(v: &[f64]) -> f64 {
    v.iter().map(|p| (1.0 - p).ln()).sum::<f64>() / v.len() as f64
}

/// Multi-scale adversarial loss. The discriminator side returns
/// `Σ_i E[log D_i(real)] + E[log(1 − D_i(fake))]` (the value it maximizes);
/// the generator side returns the term the generator minimizes.
pub fn gan_loss(
    real: &[ScoreMap],
    fake: &[ScoreMap],
    side: Side,
    reading: GanReading,
) -> Result<f64> {
    if fake.is_empty() {
        return Err(Error::invalid("no discriminator scales"));
    }
    match side {
        Side::Discriminator => {
            if real.len() != fake.len() {
                return Err(Error::invalid(
                    "real and fake score lists differ in scale count",
                ));
            }
            real.iter().zip(fake).try_fold(0.0, |acc, (r, f)| {
                Ok(acc + mean_log(&r.clamped()?) + mean_log1m(&f.clamped()?))
            })
        }
        Side::Generator => fake.iter().try_fold(0.0, |acc, f| {
            let f = f.clamped()?;
            Ok(acc
                + match reading {
                    GanReading::NonSaturating => -mean_log(&f),
                    GanReading::MinMax => mean_log1m(&f),
                })
        }),
    }
}

/// One gradient vector per discriminator scale.
pub type ScaleGrads = Vec<Vec<f64>>;

/// Gradients of [`gan_loss`] with respect to the real and fake scores
/// (the real gradient is empty on the generator side). Valid away from the
/// clamp limits.
pub fn gan_grad(
    real: &[ScoreMap],
    fake: &[ScoreMap],
    side: Side,
    reading: GanReading,
) -> Result<(ScaleGrads, ScaleGrads)> {
    gan_loss(real, fake, side, reading)?;
    let per = |m: &ScoreMap, f: fn(f64) -> f64| -> Vec<f64> {
        let n = m.data.len() as f64;
        m.data.iter().map(|&p| f(p) / n).collect()
    };
    Ok(match (side, reading) {
        (Side::Discriminator, _) => (
            real.iter().map(|m| per(m, |p| 1.0 / p)).collect(),
            fake.iter().map(|m| per(m, |p| -1.0 / (1.0 - p))).collect(),
        ),
        (Side::Generator, GanReading::NonSaturating) => {
            (vec![], fake.iter().map(|m| per(m, |p| -1.0 / p)).collect())
        }
        (Side::Generator, GanReading::MinMax) => (
            vec![],
            fake.iter().map(|m| per(m, |p| -1.0 / (1.0 - p))).collect(),
        ),
    })
}

/// Pixelwise L1 between one-hot encodings of two label rasters (summed):
/// every disagreeing pixel contributes 2.
pub fn segmentation_pixel_loss(a: &SegMask, b: &SegMask) -> Result<f64> {
    if a.height() != b.height() || a.width() != b.width() {
        return Err(Error::invalid("segmentation masks differ in size"));
    }
    Ok(2.0
        * a.labels()
            .iter()
            .zip(b.labels())
            .filter(|(x, y)| x != y)
            .count() as f64)
}

fn required(v: Option<f64>, name: &str) -> Result<f64> {
    match v {
        Some(v) if v.is_finite() => Ok(v),
        Some(v) => Err(Error::invalid(format!("{name} is not finite: {v}"))),
        None => Err(Error::invalid(format!("missing loss term {name}"))),
    }
}

/// Sub-losses of the reenactment generator objective.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ReenactmentTerms {
    /// Reconstruction loss of the n-step result against the target.
    pub stepwise_rec: Option<f64>,
    /// Reconstruction loss of the single-step result against the target.
    pub rec: Option<f64>,
    pub adv: Option<f64>,
    /// Pixel loss between predicted and target segmentation.
    pub seg: Option<f64>,
}

/// `λ_stepwise·L_rec(n-step) + λ_rec·L_rec + λ_adv·L_adv + λ_seg·L_pixel(S_r, S_t)`.
pub fn reenactment_objective(t: &ReenactmentTerms, w: &LossWeights) -> Result<f64> {
    w.validate()?;
    Ok(
        w.stepwise * required(t.stepwise_rec, "stepwise reconstruction")?
            + w.rec * required(t.rec, "reconstruction")?
            + w.adv * required(t.adv, "adversarial")?
            + w.seg * required(t.seg, "segmentation")?,
    )
}

/// `L_ce + λ_reenactment · L_pixel(S_t, S_r^t)`.
pub fn segmentation_objective(
    cross_entropy: f64,
    target: &SegMask,
    reenacted: &SegMask,
    lambda_reenactment: f64,
) -> Result<f64> {
    if !(lambda_reenactment.is_finite() && lambda_reenactment >= 0.0) {
        return Err(Error::invalid(
            "λ_reenactment must be finite and non-negative",
        ));
    }
    Ok(required(Some(cross_entropy), "cross-entropy")?
        + lambda_reenactment * segmentation_pixel_loss(target, reenacted)?)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct InpaintingTerms {
    /// Reconstruction loss of the completed face against the target.
    pub rec: Option<f64>,
    pub adv: Option<f64>,
}

/// `λ_rec · L_rec(I_c, Ĩ_t) + λ_adv · L_adv`.
pub fn inpainting_objective(t: &InpaintingTerms, w: &LossWeights) -> Result<f64> {
    w.validate()?;
    Ok(w.rec * required(t.rec, "reconstruction")? + w.adv * required(t.adv, "adversarial")?)
}

/// Blending objective: reconstruction of the blender output against the
/// Poisson solution `poisson_target`, plus the adversarial term.
pub fn blending_objective(
    output: &Image,
    poisson_target: Option<&Image>,
    f_output: &[FeatureMap],
    f_target: &[FeatureMap],
    adv: f64,
    w: &LossWeights,
) -> Result<f64> {
    let target = poisson_target
        .ok_or_else(|| Error::invalid("blending objective needs the Poisson blending target"))?;
    Ok(
        w.rec * reconstruction_loss(output, target, f_output, f_target, w)?
            + w.adv * required(Some(adv), "adversarial")?,
    )
}
