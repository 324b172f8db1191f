//! Ideal radial low/high-pass filters.
//!
//! The passband radius is `r` times the distance from DC to the corner of the
//! centred spectrum, so `r = 1` keeps every bin and the filter is the
//! identity. DC always sits in the low-pass band; the high-pass band is the
//! strict complement.

use crate::error::{PerturbError, Result};
use crate::fft;
use crate::image::{ImageBuffer, CHANNELS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    Low,
    High,
}

pub(crate) fn check_ratio(r: f64) -> Result<()> {
    if r > 0.0 && r <= 1.0 {
        Ok(())
    } else {
        Err(PerturbError::InvalidParam(format!(
            "cutoff ratio must lie in (0, 1], got {r}"
        )))
    }
}

/// Passband mask in unshifted DFT order.
pub fn band_mask(height: usize, width: usize, r: f64, band: Band) -> Vec<bool> {
    let radius = r * fft::max_radius(height, width);
    let mut mask = Vec::with_capacity(height * width);
    for ky in 0..height {
        for kx in 0..width {
            let inside = fft::radial_distance(ky, kx, height, width) <= radius;
            mask.push(match band {
                Band::Low => inside,
                Band::High => !inside,
            });
        }
    }
    mask
}

fn filter_plane(plane: &[f64], height: usize, width: usize, mask: &[bool]) -> Vec<f64> {
    let mut spec = fft::forward(plane, height, width);
    for (bin, &keep) in spec.iter_mut().zip(mask) {
        if !keep {
            *bin = Default::default();
        }
    }
    fft::inverse_real(spec, height, width)
}

/// Filters every channel; no clamping.
pub fn band_filter_raw(img: &ImageBuffer, r: f64, band: Band) -> Result<ImageBuffer> {
    check_ratio(r)?;
    let (w, h) = (img.width(), img.height());
    let mask = band_mask(h, w, r, band);
    let mut out = img.clone();
    for c in 0..CHANNELS {
        let filtered = filter_plane(img.plane(c), h, w, &mask);
        out.plane_mut(c).copy_from_slice(&filtered);
    }
    Ok(out)
}

pub fn lowpass_raw(img: &ImageBuffer, r: f64) -> Result<ImageBuffer> {
    band_filter_raw(img, r, Band::Low)
}

pub fn highpass_raw(img: &ImageBuffer, r: f64) -> Result<ImageBuffer> {
    band_filter_raw(img, r, Band::High)
}

pub fn lowpass(img: &ImageBuffer, r: f64) -> Result<ImageBuffer> {
    Ok(lowpass_raw(img, r)?.clamped())
}

pub fn highpass(img: &ImageBuffer, r: f64) -> Result<ImageBuffer> {
    Ok(highpass_raw(img, r)?.clamped())
}

/// Low-pass applied independently to each `block x block` tile. Edge tiles
/// are smaller when the block does not divide the image. No clamping.
pub fn block_lowpass_raw(img: &ImageBuffer, r: f64, block: usize) -> Result<ImageBuffer> {
    check_ratio(r)?;
    if block == 0 {
        return Err(PerturbError::InvalidParam("block size must be positive".into()));
    }
    let (w, h) = (img.width(), img.height());
    let mut out = img.clone();
    for y0 in (0..h).step_by(block) {
        for x0 in (0..w).step_by(block) {
            let bh = block.min(h - y0);
            let bw = block.min(w - x0);
            let mask = band_mask(bh, bw, r, Band::Low);
            for c in 0..CHANNELS {
                let tile: Vec<f64> = (0..bh)
                    .flat_map(|y| (0..bw).map(move |x| (x0 + x, y0 + y)))
                    .map(|(x, y)| img.get(x, y, c))
                    .collect();
                let filtered = filter_plane(&tile, bh, bw, &mask);
                for y in 0..bh {
                    for x in 0..bw {
                        out.set(x0 + x, y0 + y, c, filtered[y * bw + x]);
                    }
                }
            }
        }
    }
    Ok(out)
}
