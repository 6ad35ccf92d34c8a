//! PNG and FSIM raster files.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use anyhow::{Context, Result};
use fsg_core::io::{from_u8, read_fsim, to_u8, write_fsim};
use fsg_core::{Image, SegMask};

use crate::Invalid;

fn is_fsim(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("fsim"))
}

/// Reads `.fsim` losslessly; anything else is decoded as an 8-bit image.
pub fn load_image(path: &Path) -> Result<Image> {
    if is_fsim(path) {
        let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        return read_fsim(BufReader::new(f)).with_context(|| format!("reading {}", path.display()));
    }
    let img = image::open(path).with_context(|| format!("reading {}", path.display()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let out = if img.color().has_color() {
        Image::new(
            h,
            w,
            3,
            img.to_rgb8().into_raw().into_iter().map(from_u8).collect(),
        )
    } else {
        Image::new(
            h,
            w,
            1,
            img.to_luma8().into_raw().into_iter().map(from_u8).collect(),
        )
    };
    Ok(out?)
}

pub fn save_image(img: &Image, path: &Path) -> Result<()> {
    if is_fsim(path) {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        return write_fsim(img, BufWriter::new(f))
            .with_context(|| format!("writing {}", path.display()));
    }
    let bytes: Vec<u8> = img.data().iter().map(|&v| to_u8(v)).collect();
    let color = if img.channels() == 3 {
        image::ExtendedColorType::Rgb8
    } else {
        image::ExtendedColorType::L8
    };
    image::save_buffer(path, &bytes, img.width() as u32, img.height() as u32, color)
        .with_context(|| format!("writing {}", path.display()))
}

/// Label masks are 8-bit grayscale PNGs holding 0 (background), 1 (face)
/// or 2 (hair) per pixel.
pub fn load_mask(path: &Path) -> Result<SegMask> {
    let img = image::open(path)
        .with_context(|| format!("reading mask {}", path.display()))?
        .to_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    SegMask::from_bytes(h, w, img.as_raw())
        .map_err(|e| Invalid(format!("mask {}: {e}", path.display())).into())
}

pub fn save_mask(mask: &SegMask, path: &Path) -> Result<()> {
    image::save_buffer(
        path,
        &mask.to_bytes(),
        mask.width() as u32,
        mask.height() as u32,
        image::ExtendedColorType::L8,
    )
    .with_context(|| format!("writing mask {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use fsg_core::Label;

    #[test]
    fn round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let img = Image::from_fn(3, 4, 3, |r, c, k| ((r * 4 + c) * 3 + k) as f32 / 35.0).unwrap();
        let f = dir.path().join("a.fsim");
        save_image(&img, &f).unwrap();
        assert_eq!(load_image(&f).unwrap(), img);
        let p = dir.path().join("a.png");
        save_image(&img, &p).unwrap();
        let back = load_image(&p).unwrap();
        assert!(back
            .data()
            .iter()
            .zip(img.data())
            .all(|(a, b)| (a - b).abs() <= 0.5 / 255.0 + 1e-6));
        let mask = SegMask::from_fn(3, 4, |r, c| Label::ALL[(r + c) % 3]).unwrap();
        let m = dir.path().join("m.png");
        save_mask(&mask, &m).unwrap();
        assert_eq!(load_mask(&m).unwrap(), mask);
    }
}
