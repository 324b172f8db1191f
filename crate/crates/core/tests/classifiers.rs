use fgts_core::classify::{
    fit_centroids, fit_probe, Classifier, LinearProbe, ProbeConfig, ProtocolRegistry,
};
use fgts_core::synthetic::separable_embeddings;
use fgts_core::{Embedding, Label};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn accuracy(model: &dyn Classifier, data: &[(Label, Embedding)]) -> f64 {
    data.iter()
        .filter(|(l, z)| model.predict(z).unwrap().label == *l)
        .count() as f64
        / data.len() as f64
}

fn gaussian_blobs(n: usize, dim: usize, sigma: f64, seed: u64) -> Vec<(Label, Embedding)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut out = Vec::new();
    for (label, sign) in [(Label::Real, 1.0), (Label::Fake, -1.0)] {
        for _ in 0..n {
            let mut z: Vec<f64> = (0..dim).map(|_| noise.sample(&mut rng)).collect();
            z[0] += sign;
            out.push((label, Embedding(z)));
        }
    }
    out
}

#[test]
fn centroid_separates_gaussian_blobs() {
    let reference = gaussian_blobs(1000, 8, 0.1, 0);
    let held_out = gaussian_blobs(1000, 8, 0.1, 1);
    let model = fit_centroids(&reference, &[]).unwrap();
    assert_eq!(accuracy(&model, &held_out), 1.0);
}

#[test]
fn probe_fits_separable_data() {
    let (train, _) = separable_embeddings(500, 2, 1.0, 0, 0);
    let (test, _) = separable_embeddings(500, 2, 1.0, 0, 1);
    let probe = fit_probe(&train, &ProbeConfig::default(), &[]).unwrap();
    assert!(accuracy(&probe, &train) >= 0.99);
    assert!(accuracy(&probe, &test) >= 0.99);
}

fn full_batch(n: usize) -> ProbeConfig {
    let mut cfg = ProbeConfig::default();
    cfg.meta.batch_size = n;
    cfg
}

#[test]
fn full_batch_loss_is_non_increasing() {
    let (train, _) = separable_embeddings(300, 16, 1.0, 3, 3);
    let probe = fit_probe(&train, &full_batch(train.len()), &[]).unwrap();
    for w in probe.loss_history.windows(2) {
        assert!(w[1] <= w[0] + 1e-4, "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn duplicating_the_data_keeps_the_boundary() {
    let (train, _) = separable_embeddings(200, 8, 1.0, 5, 5);
    let doubled: Vec<_> = train.iter().chain(&train).cloned().collect();
    let a = fit_probe(&train, &full_batch(train.len()), &[]).unwrap();
    let b = fit_probe(&doubled, &full_batch(doubled.len()), &[]).unwrap();
    let unit = |v: Vec<f64>| {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / n).collect::<Vec<_>>()
    };
    for (x, y) in unit(a.direction()).iter().zip(unit(b.direction())) {
        assert!((x - y).abs() < 1e-6, "{x} vs {y}");
    }
}

#[test]
fn probe_training_is_bit_reproducible() {
    let (train, _) = separable_embeddings(100, 8, 1.0, 9, 9);
    let a = fit_probe(&train, &ProbeConfig::default(), &[1]).unwrap();
    let b = fit_probe(&train, &ProbeConfig::default(), &[1]).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_artifact(), b.to_artifact());
}

#[test]
fn probe_artifact_roundtrip() {
    let (train, _) = separable_embeddings(50, 4, 1.0, 2, 2);
    let probe = fit_probe(&train, &ProbeConfig::default(), &[7, 9]).unwrap();
    let loaded = LinearProbe::from_artifact(&probe.to_artifact()).unwrap();
    assert_eq!(loaded, probe);
    let via_registry = ProtocolRegistry::default().load(&probe.to_artifact()).unwrap();
    for (_, z) in &train {
        assert_eq!(via_registry.predict(z).unwrap(), probe.predict(z).unwrap());
    }
}

proptest! {
    #[test]
    fn centroid_scale_invariance(z in prop::collection::vec(-3.0f64..3.0, 4), c in 0.01f64..100.0) {
        prop_assume!(z.iter().any(|v| v.abs() > 1e-3));
        let reference = gaussian_blobs(20, 4, 0.5, 4);
        let model = fit_centroids(&reference, &[]).unwrap();
        let a = model.score(&z).unwrap();
        let scaled: Vec<f64> = z.iter().map(|v| v * c).collect();
        prop_assert!((a - model.score(&scaled).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn centroid_label_swap_negates(z in prop::collection::vec(-3.0f64..3.0, 4), seed in 0u64..50) {
        prop_assume!(z.iter().any(|v| v.abs() > 1e-3));
        let reference = gaussian_blobs(10, 4, 0.5, seed);
        let swapped: Vec<_> = reference.iter().map(|(l, e)| (l.swapped(), e.clone())).collect();
        let a = fit_centroids(&reference, &[]).unwrap().score(&z).unwrap();
        let b = fit_centroids(&swapped, &[]).unwrap().score(&z).unwrap();
        prop_assert_eq!(a, -b);
    }
}
