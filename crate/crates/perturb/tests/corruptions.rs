mod common;

use common::textured_image;
use fgts_perturb::corrupt::{decode_jpeg, gaussian_noise_raw};
use fgts_perturb::{gaussian_noise, jpeg_compress, resize_cycle, PerturbSpec};

#[test]
fn zero_sigma_is_identity() {
    let img = textured_image(64, 1).clamped();
    assert_eq!(gaussian_noise(&img, 0.0, 3).unwrap(), img);
}

#[test]
fn noise_std_matches_sigma() {
    let img = textured_image(224, 2);
    let noisy = gaussian_noise_raw(&img, 5.0, 0).unwrap();
    let target = 5.0 / 255.0;
    for c in 0..3 {
        let d: Vec<f64> = noisy.plane(c).iter().zip(img.plane(c)).map(|(a, b)| a - b).collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (d.len() - 1) as f64;
        let rel = (var.sqrt() - target).abs() / target;
        assert!(rel < 0.05, "channel {c}: {rel}");
    }
}

#[test]
fn unit_resize_is_identity() {
    let img = textured_image(224, 3).clamped();
    assert!(resize_cycle(&img, 1.0).unwrap().max_abs_diff(&img) < 1e-6);
}

#[test]
fn resize_half_loses_detail_but_keeps_size() {
    let img = textured_image(224, 4).clamped();
    let out = resize_cycle(&img, 0.5).unwrap();
    assert_eq!((out.width(), out.height()), (224, 224));
    let diff = out.max_abs_diff(&img);
    assert!(diff > 1e-3 && diff < 0.5, "{diff}");
}

#[test]
fn jpeg_quality_orders_error() {
    let img = textured_image(224, 5).clamped();
    let err = |q| {
        let out = jpeg_compress(&img, q).unwrap();
        out.data().iter().zip(img.data()).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
    };
    assert!(err(30) > err(70));
    assert!(err(70) > err(95));
}

#[test]
fn jpeg_spec_writes_a_single_compression() {
    let img = textured_image(64, 6).clamped();
    let spec: PerturbSpec = "jpeg:70".parse().unwrap();
    let bytes = spec.encode_output(&img, 0).unwrap();
    assert_eq!(decode_jpeg(&bytes).unwrap(), spec.apply(&img, 0).unwrap());
    assert_eq!(spec.output_format().extension(), "jpg");
}
