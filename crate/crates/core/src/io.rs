//! Image file I/O and small helpers shared by the CSV formats.
//!
//! 8-bit grayscale is the interchange format: byte `b` reads as `b/255` and a
//! value `v` writes as `round(255·clamp(v, 0, 1))`. Colour inputs are
//! converted with luma weights `0.299 R + 0.587 G + 0.114 B`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, GrayImage, ImageEncoder};

use crate::error::{FsiError, Result};
use crate::field::{RealField, SceneImage};

const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Grayscale intensities of a decoded image, in `[0, 1]`.
pub fn luma_field(image: &DynamicImage) -> RealField {
    let (w, h) = (image.width() as usize, image.height() as usize);
    let data: Vec<f64> = match image {
        DynamicImage::ImageLuma8(_) | DynamicImage::ImageLumaA8(_) => image
            .to_luma8()
            .into_raw()
            .into_iter()
            .map(|b| b as f64 / 255.0)
            .collect(),
        DynamicImage::ImageLuma16(_) | DynamicImage::ImageLumaA16(_) => image
            .to_luma16()
            .into_raw()
            .into_iter()
            .map(|b| b as f64 / 65535.0)
            .collect(),
        DynamicImage::ImageRgb16(_) | DynamicImage::ImageRgba16(_) => image
            .to_rgb16()
            .into_raw()
            .chunks_exact(3)
            .map(|c| luma(c[0] as f64, c[1] as f64, c[2] as f64) / 65535.0)
            .collect(),
        DynamicImage::ImageRgb32F(_) | DynamicImage::ImageRgba32F(_) => image
            .to_rgb32f()
            .into_raw()
            .chunks_exact(3)
            .map(|c| luma(c[0] as f64, c[1] as f64, c[2] as f64).clamp(0.0, 1.0))
            .collect(),
        _ => image
            .to_rgb8()
            .into_raw()
            .chunks_exact(3)
            .map(|c| luma(c[0] as f64, c[1] as f64, c[2] as f64) / 255.0)
            .collect(),
    };
    RealField::new(w, h, data).expect("decoder produced w*h pixels")
}

fn luma(r: f64, g: f64, b: f64) -> f64 {
    LUMA[0] * r + LUMA[1] * g + LUMA[2] * b
}

pub fn load_luma_bytes(bytes: &[u8]) -> Result<RealField> {
    Ok(luma_field(&image::load_from_memory(bytes)?))
}

pub fn load_luma(path: &Path) -> Result<RealField> {
    Ok(luma_field(&image::open(path)?))
}

/// Reads a PGM/PNG (or any decodable) file as a validated scene.
pub fn read_scene(path: &Path) -> Result<SceneImage> {
    SceneImage::from_field(load_luma(path)?)
}

/// 8-bit quantization used for every written image.
pub fn quantize(v: f64) -> u8 {
    (255.0 * v.clamp(0.0, 1.0)).round() as u8
}

pub fn to_gray8(field: &RealField) -> GrayImage {
    let raw = field.data().iter().map(|&v| quantize(v)).collect();
    GrayImage::from_raw(field.width() as u32, field.height() as u32, raw)
        .expect("buffer sized to the field")
}

/// Writes a field as 8-bit grayscale. `.pgm` produces binary P5; anything else
/// is written as PNG.
pub fn write_gray(path: &Path, field: &RealField) -> Result<()> {
    write_gray8(path, &to_gray8(field))
}

pub fn write_gray8(path: &Path, img: &GrayImage) -> Result<()> {
    let is_pgm = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("pgm"))
        .unwrap_or(false);
    let out = BufWriter::new(File::create(path)?);
    if is_pgm {
        PnmEncoder::new(out)
            .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
            .write_image(
                img.as_raw(),
                img.width(),
                img.height(),
                ExtendedColorType::L8,
            )?;
    } else {
        image::codecs::png::PngEncoder::new(out).write_image(
            img.as_raw(),
            img.width(),
            img.height(),
            ExtendedColorType::L8,
        )?;
    }
    Ok(())
}

/// Parses a `# <tag> v1 key=value ...` comment line.
pub fn parse_header_fields(line: &str, tag: &str) -> Result<BTreeMap<String, String>> {
    let line = line.trim();
    let rest = line
        .strip_prefix('#')
        .map(str::trim)
        .ok_or_else(|| FsiError::parse(tag, "missing leading '#' header line"))?;
    let mut words = rest.split_whitespace();
    if words.next() != Some(tag) {
        return Err(FsiError::parse(
            tag,
            format!("header does not start with '{tag}'"),
        ));
    }
    Ok(words
        .filter_map(|w| w.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect())
}
