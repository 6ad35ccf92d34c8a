//! Text formats for landmarks and poses, the raw `FSIM` raster format, and
//! 8-bit sample conversion.
//!
//! Landmark files hold one face per line: a count `N` followed by `N`
//! whitespace-separated `x y` pairs. Pose files hold `yaw pitch roll` per
//! line. Blank lines and lines starting with `#` are ignored in both.
//!
//! `FSIM` files are `b"FSIM"`, then little-endian `u32` height, width and
//! channel count, then `f32` samples stored plane by plane (all of channel 0
//! in row-major order, then channel 1, ...).

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::landmarks::LandmarkSet;
use crate::pose::EulerPose;

pub const FSIM_MAGIC: &[u8; 4] = b"FSIM";

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| Error::invalid(format!("line {line}: cannot parse number {tok:?}")))
}

pub fn parse_landmarks(text: &str) -> Result<Vec<LandmarkSet>> {
    content_lines(text)
        .map(|(line, l)| {
            let mut toks = l.split_whitespace();
            let n: usize = toks
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::invalid(format!("line {line}: missing landmark count")))?;
            let vals = toks
                .map(|t| parse_f64(t, line))
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != 2 * n {
                return Err(Error::invalid(format!(
                    "line {line}: expected {} coordinates, found {}",
                    2 * n,
                    vals.len()
                )));
            }
            LandmarkSet::new(vals.chunks_exact(2).map(|c| [c[0], c[1]]).collect())
        })
        .collect()
}

pub fn format_landmarks(sets: &[LandmarkSet]) -> String {
    let mut out = String::new();
    for s in sets {
        out.push_str(&s.len().to_string());
        for p in s.points() {
            out.push_str(&format!(" {} {}", p[0], p[1]));
        }
        out.push('\n');
    }
    out
}

pub fn parse_poses(text: &str) -> Result<Vec<EulerPose>> {
    content_lines(text)
        .map(|(line, l)| {
            let vals = l
                .split_whitespace()
                .map(|t| parse_f64(t, line))
                .collect::<Result<Vec<_>>>()?;
            match vals[..] {
                [y, p, r] => EulerPose::new(y, p, r),
                _ => Err(Error::invalid(format!(
                    "line {line}: expected `yaw pitch roll`"
                ))),
            }
        })
        .collect()
}

pub fn format_poses(poses: &[EulerPose]) -> String {
    poses
        .iter()
        .map(|p| format!("{} {} {}\n", p.yaw, p.pitch, p.roll))
        .collect()
}

pub fn write_fsim(img: &Image, mut w: impl Write) -> Result<()> {
    let mut buf = Vec::with_capacity(16 + 4 * img.data().len());
    buf.extend_from_slice(FSIM_MAGIC);
    for d in [img.height(), img.width(), img.channels()] {
        buf.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for c in 0..img.channels() {
        for v in img.plane(c) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_fsim(mut r: impl Read) -> Result<Image> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[..4] != FSIM_MAGIC {
        return Err(Error::invalid("not an FSIM raster"));
    }
    let dim =
        |i: usize| u32::from_le_bytes(header[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    let (h, w, c) = (dim(0), dim(1), dim(2));
    let n = h
        .checked_mul(w)
        .and_then(|v| v.checked_mul(c))
        .filter(|&n| n <= 1 << 28);
    let n = n.ok_or_else(|| Error::invalid("FSIM dimensions too large"))?;
    let mut bytes = vec![0u8; 4 * n];
    r.read_exact(&mut bytes)?;
    let samples: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let planes: Vec<Vec<f32>> = samples.chunks(h * w).map(|p| p.to_vec()).collect();
    Image::from_planes(h, w, &planes)
}

pub fn from_u8(v: u8) -> f32 {
    v as f32 / 255.0
}

/// Quantizes a `[0, 1]` sample to 8 bits, rounding half to even.
pub fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) as f64 * 255.0).round_ties_even() as u8
}
