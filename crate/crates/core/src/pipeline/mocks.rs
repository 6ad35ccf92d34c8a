//! Built-in generators standing in for trained networks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::generator::{Conditioning, GenRequest, GenResponse, Generator};
use super::warp::warp_image;
use crate::error::{Error, Result};
use crate::heatmaps::Heatmap;
use crate::image::{Image, Label, SegMask};

/// How mock generators label their output mask.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MaskRule {
    /// Every pixel is face.
    Full,
    /// Axis-aligned ellipse of face pixels, center and radii given as
    /// fractions of the frame (`cx`, `rx` of the width; `cy`, `ry` of the
    /// height), optionally ringed by a hair band of relative thickness
    /// `hair` outside the face ellipse.
    Ellipse {
        cx: f64,
        cy: f64,
        rx: f64,
        ry: f64,
        hair: f64,
    },
}

impl MaskRule {
    pub fn render(&self, height: usize, width: usize) -> SegMask {
        match *self {
            MaskRule::Full => SegMask::filled(height, width, Label::Face),
            MaskRule::Ellipse {
                cx,
                cy,
                rx,
                ry,
                hair,
            } => SegMask::from_fn(height, width, |r, c| {
                let dx = (c as f64 - cx * width as f64) / (rx * width as f64);
                let dy = (r as f64 - cy * height as f64) / (ry * height as f64);
                let d = (dx * dx + dy * dy).sqrt();
                if d <= 1.0 {
                    Label::Face
                } else if d <= 1.0 + hair {
                    Label::Hair
                } else {
                    Label::Background
                }
            }),
        }
        .expect("non-empty frame")
    }

    /// Parses `full` or `ellipse:cx,cy,rx,ry[,hair]`.
    pub fn parse(s: &str) -> Result<Self> {
        if s == "full" {
            return Ok(MaskRule::Full);
        }
        let body = s
            .strip_prefix("ellipse:")
            .ok_or_else(|| Error::invalid(format!("unknown mask rule {s:?}")))?;
        let vals = body
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::invalid(format!("bad mask rule number {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        match vals[..] {
            [cx, cy, rx, ry] => Ok(MaskRule::Ellipse {
                cx,
                cy,
                rx,
                ry,
                hair: 0.0,
            }),
            [cx, cy, rx, ry, hair] => Ok(MaskRule::Ellipse {
                cx,
                cy,
                rx,
                ry,
                hair,
            }),
            _ => Err(Error::invalid(format!(
                "mask rule {s:?} needs 4 or 5 numbers"
            ))),
        }
    }

    pub fn spec(&self) -> String {
        match self {
            MaskRule::Full => "full".into(),
            MaskRule::Ellipse {
                cx,
                cy,
                rx,
                ry,
                hair,
            } => format!("ellipse:{cx},{cy},{rx},{ry},{hair}"),
        }
    }
}

/// Returns the request image unchanged.
#[derive(Clone, Debug)]
pub struct EchoGenerator {
    rule: MaskRule,
}

impl EchoGenerator {
    pub fn new(rule: MaskRule) -> Self {
        Self { rule }
    }
}

impl Generator for EchoGenerator {
    fn generate(&mut self, req: &GenRequest) -> Result<GenResponse> {
        Ok(GenResponse {
            image: req.image.clone(),
            mask: self.rule.render(req.height(), req.width()),
        })
    }
}

/// Returns a constant image holding the per-channel mean of the input.
#[derive(Clone, Debug)]
pub struct ConstantGenerator;

impl Generator for ConstantGenerator {
    fn generate(&mut self, req: &GenRequest) -> Result<GenResponse> {
        let img = &req.image;
        let n = (img.height() * img.width()) as f64;
        let means: Vec<f64> = (0..3)
            .map(|c| img.plane(c).iter().map(|&v| v as f64).sum::<f64>() / n)
            .collect();
        let image = Image::from_fn(img.height(), img.width(), 3, |_, _, c| means[c] as f32)?;
        Ok(GenResponse {
            image,
            mask: MaskRule::Full.render(img.height(), img.width()),
        })
    }
}

/// Adds a fixed increment to every sample (clamped), one call at a time.
#[derive(Clone, Debug)]
pub struct CountingGenerator {
    increment: f32,
}

impl CountingGenerator {
    pub fn new(increment: f32) -> Self {
        Self { increment }
    }
}

impl Generator for CountingGenerator {
    fn generate(&mut self, req: &GenRequest) -> Result<GenResponse> {
        let img = &req.image;
        let image = Image::from_fn(img.height(), img.width(), 3, |r, c, ch| {
            img.get(r, c, ch) + self.increment
        })?;
        Ok(GenResponse {
            image,
            mask: MaskRule::Full.render(img.height(), img.width()),
        })
    }
}

/// Echoes successfully `ok_calls` times, then fails every call.
#[derive(Clone, Debug)]
pub struct FailingGenerator {
    remaining: usize,
}

impl FailingGenerator {
    pub fn after(ok_calls: usize) -> Self {
        Self {
            remaining: ok_calls,
        }
    }
}

impl Generator for FailingGenerator {
    fn generate(&mut self, req: &GenRequest) -> Result<GenResponse> {
        if self.remaining == 0 {
            return Err(Error::Peer("mock failure".into()));
        }
        self.remaining -= 1;
        EchoGenerator::new(MaskRule::Full).generate(req)
    }
}

/// Echo plus seeded uniform noise of amplitude `amplitude`; the stream
/// advances per call, so a fresh generator with the same seed replays the
/// same outputs.
#[derive(Clone, Debug)]
pub struct NoiseGenerator {
    rng: ChaCha8Rng,
    amplitude: f32,
    rule: MaskRule,
}

impl NoiseGenerator {
    pub fn new(seed: u64, amplitude: f32, rule: MaskRule) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            amplitude,
            rule,
        }
    }
}

impl Generator for NoiseGenerator {
    fn generate(&mut self, req: &GenRequest) -> Result<GenResponse> {
        let img = &req.image;
        let a = self.amplitude;
        let rng = &mut self.rng;
        let image = Image::from_fn(img.height(), img.width(), 3, |r, c, ch| {
            img.get(r, c, ch) + rng.gen_range(-a..=a)
        })?;
        Ok(GenResponse {
            image,
            mask: self.rule.render(img.height(), img.width()),
        })
    }
}

/// Decodes target landmarks from a heatmap, one per channel.
pub fn decode_heatmap(hm: &Heatmap) -> Vec<[f64; 2]> {
    (0..hm.channels()).map(|k| hm.peak(k)).collect()
}

/// Reenactment stand-in that moves landmarks exactly: it remembers the
/// landmarks of the face it last produced (initially the source face) and
/// thin-plate warps each input so those landmarks land on the positions
/// decoded from the request heatmap.
#[derive(Clone, Debug)]
pub struct WarpGenerator {
    current: Vec<[f64; 2]>,
    initial: Vec<[f64; 2]>,
    rule: MaskRule,
}

impl WarpGenerator {
    pub fn new(source_landmarks: Vec<[f64; 2]>, rule: MaskRule) -> Self {
        Self {
            initial: source_landmarks.clone(),
            current: source_landmarks,
            rule,
        }
    }

    /// Forgets previous outputs so the next call starts from the source face.
    pub fn reset(&mut self) {
        self.current = self.initial.clone();
    }
}

impl Generator for WarpGenerator {
    fn generate(&mut self, req: &GenRequest) -> Result<GenResponse> {
        let Conditioning::Heatmap(hm) = &req.conditioning else {
            return Err(Error::invalid("warp generator needs a landmark heatmap"));
        };
        let target = decode_heatmap(hm);
        if target.len() != self.current.len() {
            return Err(Error::invalid(
                "heatmap channel count differs from tracked landmarks",
            ));
        }
        let image = warp_image(&req.image, &self.current, &target)?;
        self.current = target;
        Ok(GenResponse {
            image,
            mask: self.rule.render(req.height(), req.width()),
        })
    }
}

/// Inpainting stand-in: pixels inside the requested target shape whose
/// samples are all zero are filled with the mean color of the known pixels
/// of the shape.
#[derive(Clone, Debug)]
pub struct MeanFillGenerator;

impl Generator for MeanFillGenerator {
    fn generate(&mut self, req: &GenRequest) -> Result<GenResponse> {
        let Conditioning::Mask(shape) = &req.conditioning else {
            return Err(Error::invalid(
                "mean-fill generator needs an inpainting mask",
            ));
        };
        let img = &req.image;
        let known = |r: usize, c: usize| (0..3).any(|ch| img.get(r, c, ch) != 0.0);
        let (mut sum, mut n) = ([0.0f64; 3], 0usize);
        for r in 0..img.height() {
            for c in 0..img.width() {
                if shape.get(r, c) == Label::Face && known(r, c) {
                    for (ch, acc) in sum.iter_mut().enumerate() {
                        *acc += img.get(r, c, ch) as f64;
                    }
                    n += 1;
                }
            }
        }
        let fill = sum.map(|s| if n > 0 { (s / n as f64) as f32 } else { 0.0 });
        let image = Image::from_fn(img.height(), img.width(), 3, |r, c, ch| {
            if shape.get(r, c) == Label::Face && !known(r, c) {
                fill[ch]
            } else {
                img.get(r, c, ch)
            }
        })?;
        Ok(GenResponse {
            image,
            mask: shape.clone(),
        })
    }
}
