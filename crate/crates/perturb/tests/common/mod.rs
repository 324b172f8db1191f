#![allow(dead_code)]

use fgts_perturb::ImageBuffer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_image(width: usize, height: usize, seed: u64) -> ImageBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ImageBuffer::from_fn(width, height, |_, _, _| rng.random::<f64>()).unwrap()
}

/// Smooth image with structure at several scales, so filters have visible
/// effect at every cutoff.
pub fn textured_image(size: usize, seed: u64) -> ImageBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases: Vec<f64> = (0..9).map(|_| rng.random::<f64>() * 6.283).collect();
    let n = size as f64;
    ImageBuffer::from_fn(size, size, |x, y, c| {
        let (x, y) = (x as f64 / n, y as f64 / n);
        let mut v = 0.5;
        for (i, f) in [2.0, 9.0, 31.0].iter().enumerate() {
            v += 0.15 * (6.283 * f * (x + 0.3 * y) + phases[3 * c + i]).sin();
        }
        v
    })
    .unwrap()
}

/// Direct O(N^4) ideal filter: DFT sum, mask by signed-frequency radius
/// against `cutoff`, inverse DFT sum. Independent of the FFT path.
pub fn naive_radial_filter(img: &ImageBuffer, cutoff: f64, keep_low: bool) -> ImageBuffer {
    let (w, h) = (img.width(), img.height());
    let signed = |k: usize, n: usize| {
        let k = k as f64;
        let n = n as f64;
        if k <= (n - 1.0) / 2.0 { k } else { k - n }
    };
    let tau = std::f64::consts::TAU;
    let mut out = img.clone();
    for c in 0..3 {
        let mut spec = vec![(0.0f64, 0.0f64); w * h];
        for ky in 0..h {
            for kx in 0..w {
                let dist = signed(ky, h).hypot(signed(kx, w));
                if (dist <= cutoff) != keep_low {
                    continue;
                }
                let (mut re, mut im) = (0.0, 0.0);
                for y in 0..h {
                    for x in 0..w {
                        let a = -tau * ((ky * y) as f64 / h as f64 + (kx * x) as f64 / w as f64);
                        re += img.get(x, y, c) * a.cos();
                        im += img.get(x, y, c) * a.sin();
                    }
                }
                spec[ky * w + kx] = (re, im);
            }
        }
        for y in 0..h {
            for x in 0..w {
                let mut v = 0.0;
                for ky in 0..h {
                    for kx in 0..w {
                        let a = tau * ((ky * y) as f64 / h as f64 + (kx * x) as f64 / w as f64);
                        let (re, im) = spec[ky * w + kx];
                        v += re * a.cos() - im * a.sin();
                    }
                }
                out.set(x, y, c, v / (w * h) as f64);
            }
        }
    }
    out
}

/// Sorted bit patterns of every sample; equal iff the pixel multisets match.
pub fn sample_multiset(img: &ImageBuffer) -> Vec<u64> {
    let mut v: Vec<u64> = img.data().iter().map(|x| x.to_bits()).collect();
    v.sort_unstable();
    v
}

/// Sorted 16x16 patches, each flattened as bit patterns over all channels.
pub fn patch_multiset(img: &ImageBuffer) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    for py in 0..img.height() / 16 {
        for px in 0..img.width() / 16 {
            let mut p = Vec::new();
            for c in 0..3 {
                for y in 0..16 {
                    for x in 0..16 {
                        p.push(img.get(px * 16 + x, py * 16 + y, c).to_bits());
                    }
                }
            }
            out.push(p);
        }
    }
    out.sort();
    out
}

pub fn is_flat_patch(img: &ImageBuffer, py: usize, px: usize) -> bool {
    (0..3).all(|c| {
        let v = img.get(px * 16, py * 16, c);
        (0..16).all(|y| (0..16).all(|x| img.get(px * 16 + x, py * 16 + y, c) == v))
    })
}
