//! Robustness corruptions: additive noise, JPEG round trip, resize cycle.

use jpeg_encoder::{ColorType, Encoder, SamplingFactor};
use rand_distr::{Distribution, Normal};

use crate::error::{PerturbError, Result};
use crate::image::{quantize, ImageBuffer, CHANNELS};
use crate::spatial::rng;

/// Adds i.i.d. `N(0, (sigma_255 / 255)^2)` to every sample; no clamping.
pub fn gaussian_noise_raw(img: &ImageBuffer, sigma_255: f64, seed: u64) -> Result<ImageBuffer> {
    if !(sigma_255 >= 0.0 && sigma_255.is_finite()) {
        return Err(PerturbError::InvalidParam(format!(
            "noise sigma must be finite and non-negative, got {sigma_255}"
        )));
    }
    let mut out = img.clone();
    if sigma_255 == 0.0 {
        return Ok(out);
    }
    let noise = Normal::new(0.0, sigma_255 / 255.0).expect("validated sigma");
    let mut rng = rng(seed);
    for c in 0..CHANNELS {
        for v in out.plane_mut(c) {
            *v += noise.sample(&mut rng);
        }
    }
    Ok(out)
}

pub fn gaussian_noise(img: &ImageBuffer, sigma_255: f64, seed: u64) -> Result<ImageBuffer> {
    Ok(gaussian_noise_raw(img, sigma_255, seed)?.clamped())
}

fn check_quality(quality: u8) -> Result<()> {
    if (1..=100).contains(&quality) {
        Ok(())
    } else {
        Err(PerturbError::InvalidParam(format!(
            "jpeg quality must lie in [1, 100], got {quality}"
        )))
    }
}

/// Baseline JPEG with 4:2:0 chroma subsampling.
pub fn encode_jpeg(img: &ImageBuffer, quality: u8) -> Result<Vec<u8>> {
    check_quality(quality)?;
    let (w, h) = (img.width(), img.height());
    let dims = |v: usize| {
        u16::try_from(v).map_err(|_| PerturbError::Codec(format!("{w}x{h} too large for jpeg")))
    };
    let (w16, h16) = (dims(w)?, dims(h)?);
    let mut rgb = Vec::with_capacity(w * h * CHANNELS);
    for y in 0..h {
        for x in 0..w {
            for c in 0..CHANNELS {
                rgb.push(quantize(img.get(x, y, c)));
            }
        }
    }
    let mut bytes = Vec::new();
    let mut encoder = Encoder::new(&mut bytes, quality);
    encoder.set_sampling_factor(SamplingFactor::R_4_2_0);
    encoder
        .encode(&rgb, w16, h16, ColorType::Rgb)
        .map_err(|e| PerturbError::Codec(e.to_string()))?;
    Ok(bytes)
}

pub fn decode_jpeg(bytes: &[u8]) -> Result<ImageBuffer> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Jpeg)
        .map_err(|e| PerturbError::Codec(e.to_string()))?;
    Ok(ImageBuffer::from_rgb8(&img.to_rgb8()))
}

pub fn jpeg_compress(img: &ImageBuffer, quality: u8) -> Result<ImageBuffer> {
    decode_jpeg(&encode_jpeg(img, quality)?)
}

/// Bilinear resampling with half-pixel centres and edge clamping. Equal
/// sizes reproduce the input exactly.
pub fn resize_bilinear(img: &ImageBuffer, width: usize, height: usize) -> Result<ImageBuffer> {
    let sx = img.width() as f64 / width as f64;
    let sy = img.height() as f64 / height as f64;
    let taps = |dst: usize, scale: f64, src_len: usize| {
        let pos = ((dst as f64 + 0.5) * scale - 0.5).max(0.0);
        let i0 = (pos.floor() as usize).min(src_len - 1);
        let i1 = (i0 + 1).min(src_len - 1);
        (i0, i1, pos - i0 as f64)
    };
    ImageBuffer::from_fn(width, height, |x, y, c| {
        let (x0, x1, fx) = taps(x, sx, img.width());
        let (y0, y1, fy) = taps(y, sy, img.height());
        let top = img.get(x0, y0, c) * (1.0 - fx) + img.get(x1, y0, c) * fx;
        let bottom = img.get(x0, y1, c) * (1.0 - fx) + img.get(x1, y1, c) * fx;
        top * (1.0 - fy) + bottom * fy
    })
}

/// Downsamples by `factor`, then upsamples back to the original size.
pub fn resize_cycle(img: &ImageBuffer, factor: f64) -> Result<ImageBuffer> {
    if !(factor > 0.0 && factor <= 1.0) {
        return Err(PerturbError::InvalidParam(format!(
            "resize factor must lie in (0, 1], got {factor}"
        )));
    }
    let small_w = ((img.width() as f64 * factor).round() as usize).max(1);
    let small_h = ((img.height() as f64 * factor).round() as usize).max(1);
    let small = resize_bilinear(img, small_w, small_h)?;
    Ok(resize_bilinear(&small, img.width(), img.height())?.clamped())
}
