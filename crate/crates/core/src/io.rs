//! 8-bit PNG / PGM / PPM loading and saving.

use std::path::Path;

use image::{ColorType, DynamicImage, GrayImage, RgbImage};

use crate::color::MultiChannelImage;
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::visualize::{render, RenderMode};

fn image_error(path: &Path, reason: impl ToString) -> Error {
    Error::Image {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

/// Loads an 8-bit image scaled to `[0, 1]`. Grayscale files give one channel,
/// colour files three (alpha is dropped).
pub fn load_image(path: impl AsRef<Path>) -> Result<MultiChannelImage> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|e| image_error(path, e))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let scale = |b: u8| b as f64 / 255.0;
    match img.color() {
        ColorType::L8 | ColorType::La8 => {
            let gray = img.to_luma8();
            let data = gray.as_raw().iter().map(|&b| scale(b)).collect();
            Ok(MultiChannelImage::gray(ScalarField::new(w, h, data)?))
        }
        ColorType::Rgb8 | ColorType::Rgba8 => {
            let rgb = img.to_rgb8();
            let raw = rgb.as_raw();
            let channels = (0..3)
                .map(|c| {
                    let data = raw.iter().skip(c).step_by(3).map(|&b| scale(b)).collect();
                    ScalarField::new(w, h, data)
                })
                .collect::<Result<Vec<_>>>()?;
            MultiChannelImage::new(channels)
        }
        other => Err(image_error(
            path,
            format!("unsupported pixel format {other:?}; only 8-bit images are accepted"),
        )),
    }
}

fn write(img: DynamicImage, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| image_error(path, e))?;
    }
    img.save(path).map_err(|e| image_error(path, e))
}

/// Writes a single field as an 8-bit grayscale image.
pub fn save_component(field: &ScalarField, path: impl AsRef<Path>, mode: RenderMode) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = field.dims();
    let buf = GrayImage::from_raw(w as u32, h as u32, render(field, mode))
        .ok_or_else(|| image_error(path, "buffer size mismatch"))?;
    write(DynamicImage::ImageLuma8(buf), path)
}

/// Writes a one- or three-channel image; every channel uses the same mode.
/// With `Rescale { range: None }` the joint range of all channels is used.
pub fn save_image(img: &MultiChannelImage, path: impl AsRef<Path>, mode: RenderMode) -> Result<()> {
    let path = path.as_ref();
    if img.channel_count() == 1 {
        return save_component(&img.channels()[0], path, mode);
    }
    if img.channel_count() != 3 {
        return Err(Error::ChannelCount {
            expected: 3,
            found: img.channel_count(),
        });
    }
    let mode = match mode {
        RenderMode::Rescale { range: None } => {
            let lo = img.channels().iter().map(ScalarField::min).fold(f64::INFINITY, f64::min);
            let hi = img.channels().iter().map(ScalarField::max).fold(f64::NEG_INFINITY, f64::max);
            RenderMode::Rescale {
                range: Some((lo, hi)),
            }
        }
        m => m,
    };
    let planes: Vec<Vec<u8>> = img.channels().iter().map(|c| render(c, mode)).collect();
    let (w, h) = img.dims();
    let mut raw = Vec::with_capacity(w * h * 3);
    for i in 0..w * h {
        raw.extend(planes.iter().map(|p| p[i]));
    }
    let buf = RgbImage::from_raw(w as u32, h as u32, raw)
        .ok_or_else(|| image_error(path, "buffer size mismatch"))?;
    write(DynamicImage::ImageRgb8(buf), path)
}
