mod common;

use common::{is_flat_patch, patch_multiset, random_image, sample_multiset, textured_image};
use fgts_perturb::conditions::{condition_a_raw, condition_b_raw, condition_c_raw};
use fgts_perturb::filter::{block_lowpass_raw, lowpass_raw};
use fgts_perturb::spatial::{block_groups, full_shuffle, permute_groups};
use fgts_perturb::{condition_a, local_shuffle, lowpass, random_mask, ImageBuffer, PerturbSpec};
use proptest::prelude::*;

#[test]
fn half_mask_counts_and_means() {
    let img = random_image(224, 224, 11);
    let out = random_mask(&img, 0.5, 42).unwrap();
    let flat = (0..14)
        .flat_map(|py| (0..14).map(move |px| (py, px)))
        .filter(|&(py, px)| is_flat_patch(&out, py, px))
        .count();
    assert_eq!(flat, 98);
    let (a, b) = (img.channel_means(), out.channel_means());
    for c in 0..3 {
        assert!((a[c] - b[c]).abs() < 1e-6);
    }
}

#[test]
fn mask_extremes() {
    let img = random_image(64, 32, 12);
    assert_eq!(random_mask(&img, 0.0, 1).unwrap(), img);
    let all = random_mask(&img, 1.0, 1).unwrap();
    for py in 0..2 {
        for px in 0..4 {
            assert!(is_flat_patch(&all, py, px));
            for c in 0..3 {
                let mean = |im: &ImageBuffer| {
                    (0..16)
                        .flat_map(|y| (0..16).map(move |x| (x, y)))
                        .map(|(x, y)| im.get(px * 16 + x, py * 16 + y, c))
                        .sum::<f64>()
                        / 256.0
                };
                assert!((mean(&img) - mean(&all)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn window_one_is_identity() {
    let img = random_image(64, 64, 13);
    assert_eq!(local_shuffle(&img, 1, 9).unwrap(), img);
}

#[test]
fn shuffle_keeps_patches_whole() {
    let img = random_image(224, 224, 14);
    let out = local_shuffle(&img, 4, 3).unwrap();
    assert_ne!(out, img);
    assert_eq!(patch_multiset(&out), patch_multiset(&img));
}

#[test]
fn shuffle_stays_inside_neighbourhood() {
    // encode each patch's grid position in its pixels
    let img = ImageBuffer::from_fn(224, 224, |x, y, c| ((y / 16) * 14 + x / 16 + c) as f64).unwrap();
    let out = local_shuffle(&img, 4, 5).unwrap();
    for py in 0..14 {
        for px in 0..14 {
            let src = out.get(px * 16, py * 16, 0) as usize;
            assert_eq!((src / 14 / 4, src % 14 / 4), (py / 4, px / 4));
        }
    }
}

#[test]
fn condition_a_is_lowpass_then_full_shuffle() {
    let img = textured_image(224, 15);
    let composed = full_shuffle(&lowpass(&img, 0.3).unwrap(), 8).unwrap();
    assert_eq!(condition_a(&img, 0.3, 8).unwrap(), composed);
    let composed_raw = full_shuffle(&lowpass_raw(&img, 0.3).unwrap(), 8).unwrap();
    assert_eq!(condition_a_raw(&img, 0.3, 8).unwrap(), composed_raw);
}

#[test]
fn condition_c_with_one_block_is_global_lowpass() {
    let img = textured_image(224, 16);
    let c = condition_c_raw(&img, 0.2, 224).unwrap();
    assert!(c.max_abs_diff(&lowpass_raw(&img, 0.2).unwrap()) < 1e-6);
}

#[test]
fn condition_b_full_passband_is_block_shuffle() {
    let img = textured_image(224, 17);
    let b = condition_b_raw(&img, 1.0, 56, 4).unwrap();
    let groups = block_groups(&img, 56).unwrap();
    let shuffled = permute_groups(&img, &groups, 4).unwrap();
    assert!(b.max_abs_diff(&shuffled) < 1e-9);
}

#[test]
fn condition_b_shuffles_filtered_blocks() {
    let img = textured_image(224, 18);
    let b = condition_b_raw(&img, 0.3, 56, 2).unwrap();
    let filtered = block_lowpass_raw(&img, 0.3, 56).unwrap();
    assert_eq!(patch_multiset(&b), patch_multiset(&filtered));
}

#[test]
fn seeded_ops_are_reproducible() {
    let img = textured_image(224, 19);
    for s in ["mask:0.5", "shuffle:4", "cond_a:0.5", "cond_b:0.5,56", "gaussian:5"] {
        let spec: PerturbSpec = s.parse().unwrap();
        assert_eq!(spec.apply(&img, 77).unwrap(), spec.apply(&img, 77).unwrap(), "{s}");
        assert_ne!(spec.apply(&img, 77).unwrap(), spec.apply(&img, 78).unwrap(), "{s}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn shuffle_preserves_pixel_multiset(seed in any::<u64>(), window in 1usize..=6, gw in 1usize..6, gh in 1usize..6) {
        let img = random_image(gw * 16, gh * 16, seed);
        let out = local_shuffle(&img, window, seed).unwrap();
        prop_assert_eq!(sample_multiset(&out), sample_multiset(&img));
    }

    #[test]
    fn mask_preserves_global_means(seed in any::<u64>(), fraction in 0.0f64..=1.0) {
        let img = random_image(64, 48, seed);
        let out = random_mask(&img, fraction, seed).unwrap();
        let (a, b) = (img.channel_means(), out.channel_means());
        for c in 0..3 {
            prop_assert!((a[c] - b[c]).abs() < 1e-6);
        }
    }
}
