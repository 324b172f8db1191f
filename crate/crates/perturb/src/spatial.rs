//! Patch-level spatial operations on the 16-pixel token grid.

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{PerturbError, Result};
use crate::image::{ImageBuffer, CHANNELS};

/// Side of one ViT-16 patch in pixels.
pub const PATCH: usize = 16;
pub const DEFAULT_WINDOW: usize = 4;

/// Patch grid of an image as (rows, cols).
pub fn patch_grid(img: &ImageBuffer) -> Result<(usize, usize)> {
    for (what, size) in [("image width", img.width()), ("image height", img.height())] {
        if size % PATCH != 0 {
            return Err(PerturbError::NonDivisible {
                what,
                size,
                by: PATCH,
            });
        }
    }
    Ok((img.height() / PATCH, img.width() / PATCH))
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn patch_means(img: &ImageBuffer, py: usize, px: usize) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (c, m) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for y in py * PATCH..(py + 1) * PATCH {
            for x in px * PATCH..(px + 1) * PATCH {
                s += img.get(x, y, c);
            }
        }
        *m = s / (PATCH * PATCH) as f64;
    }
    out
}

/// Indices (row-major over the patch grid) that `random_mask` flattens.
pub fn masked_patches(n_patches: usize, fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(PerturbError::InvalidParam(format!(
            "mask fraction must lie in [0, 1], got {fraction}"
        )));
    }
    let n = (fraction * n_patches as f64).round() as usize;
    let mut picked = index::sample(&mut rng(seed), n_patches, n).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// Replaces `round(fraction * n_patches)` randomly chosen patches with their
/// own per-channel mean.
pub fn random_mask(img: &ImageBuffer, fraction: f64, seed: u64) -> Result<ImageBuffer> {
    let (gh, gw) = patch_grid(img)?;
    let mut out = img.clone();
    for p in masked_patches(gh * gw, fraction, seed)? {
        let (py, px) = (p / gw, p % gw);
        let means = patch_means(img, py, px);
        for (c, &m) in means.iter().enumerate() {
            for y in py * PATCH..(py + 1) * PATCH {
                for x in px * PATCH..(px + 1) * PATCH {
                    out.set(x, y, c, m);
                }
            }
        }
    }
    Ok(out)
}

fn copy_patch(src: &ImageBuffer, from: (usize, usize), dst: &mut ImageBuffer, to: (usize, usize)) {
    for c in 0..CHANNELS {
        for dy in 0..PATCH {
            for dx in 0..PATCH {
                let v = src.get(from.1 * PATCH + dx, from.0 * PATCH + dy, c);
                dst.set(to.1 * PATCH + dx, to.0 * PATCH + dy, c, v);
            }
        }
    }
}

/// Shuffles patches within each group. Groups hold row-major patch indices
/// and are processed in the given order, one RNG stream for all of them.
pub fn permute_groups(img: &ImageBuffer, groups: &[Vec<usize>], seed: u64) -> Result<ImageBuffer> {
    let (_, gw) = patch_grid(img)?;
    let mut rng = rng(seed);
    let mut out = img.clone();
    for group in groups {
        let mut sources = group.clone();
        sources.shuffle(&mut rng);
        for (&dst, &src) in group.iter().zip(&sources) {
            copy_patch(img, (src / gw, src % gw), &mut out, (dst / gw, dst % gw));
        }
    }
    Ok(out)
}

/// Tiles the patch grid into `window x window` neighbourhoods, row-major.
/// Edge tiles are smaller when `window` does not divide the grid.
pub fn window_groups(grid: (usize, usize), window: usize) -> Vec<Vec<usize>> {
    let (gh, gw) = grid;
    let mut groups = Vec::new();
    for ty in (0..gh).step_by(window) {
        for tx in (0..gw).step_by(window) {
            let mut g = Vec::new();
            for py in ty..(ty + window).min(gh) {
                for px in tx..(tx + window).min(gw) {
                    g.push(py * gw + px);
                }
            }
            groups.push(g);
        }
    }
    groups
}

/// Permutes patch positions inside each local neighbourhood; pixels inside
/// a patch are untouched.
pub fn local_shuffle(img: &ImageBuffer, window: usize, seed: u64) -> Result<ImageBuffer> {
    if window == 0 {
        return Err(PerturbError::InvalidParam("shuffle window must be positive".into()));
    }
    let grid = patch_grid(img)?;
    permute_groups(img, &window_groups(grid, window), seed)
}

/// Shuffle over the whole grid.
pub fn full_shuffle(img: &ImageBuffer, seed: u64) -> Result<ImageBuffer> {
    let (gh, gw) = patch_grid(img)?;
    local_shuffle(img, gh.max(gw), seed)
}

/// Groups patches by the `block x block` pixel tile containing the patch
/// centre, tiles in row-major order.
pub fn block_groups(img: &ImageBuffer, block: usize) -> Result<Vec<Vec<usize>>> {
    if block == 0 {
        return Err(PerturbError::InvalidParam("block size must be positive".into()));
    }
    let (gh, gw) = patch_grid(img)?;
    let tiles_x = img.width().div_ceil(block);
    let tiles_y = img.height().div_ceil(block);
    let mut groups = vec![Vec::new(); tiles_x * tiles_y];
    for py in 0..gh {
        for px in 0..gw {
            let cy = (py * PATCH + PATCH / 2) / block;
            let cx = (px * PATCH + PATCH / 2) / block;
            groups[cy * tiles_x + cx].push(py * gw + px);
        }
    }
    groups.retain(|g| !g.is_empty());
    Ok(groups)
}
