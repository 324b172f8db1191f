//! Joint frequency/spatial conditions. The `_raw` variants skip the final
//! clamp.

use crate::error::Result;
use crate::filter::{block_lowpass_raw, lowpass_raw};
use crate::image::ImageBuffer;
use crate::spatial::{block_groups, full_shuffle, permute_groups};

pub const DEFAULT_BLOCK: usize = 56;

/// Global low-pass, then every patch shuffled across the whole grid.
pub fn condition_a_raw(img: &ImageBuffer, r: f64, seed: u64) -> Result<ImageBuffer> {
    full_shuffle(&lowpass_raw(img, r)?, seed)
}

/// Block-wise low-pass, then patches shuffled within the block holding
/// their centre.
pub fn condition_b_raw(img: &ImageBuffer, r: f64, block: usize, seed: u64) -> Result<ImageBuffer> {
    let groups = block_groups(img, block)?;
    permute_groups(&block_lowpass_raw(img, r, block)?, &groups, seed)
}

/// Block-wise low-pass only.
pub fn condition_c_raw(img: &ImageBuffer, r: f64, block: usize) -> Result<ImageBuffer> {
    block_lowpass_raw(img, r, block)
}

pub fn condition_a(img: &ImageBuffer, r: f64, seed: u64) -> Result<ImageBuffer> {
    Ok(condition_a_raw(img, r, seed)?.clamped())
}

pub fn condition_b(img: &ImageBuffer, r: f64, block: usize, seed: u64) -> Result<ImageBuffer> {
    Ok(condition_b_raw(img, r, block, seed)?.clamped())
}

pub fn condition_c(img: &ImageBuffer, r: f64, block: usize) -> Result<ImageBuffer> {
    Ok(condition_c_raw(img, r, block)?.clamped())
}
