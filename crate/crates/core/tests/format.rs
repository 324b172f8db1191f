use fgts_core::format::{decode, encode};
use fgts_core::validate::validate;
use fgts_core::{
    load_manifest, read_feature_file, write_feature_file, Error, FeatureTensor, Label,
    SampleManifest, SampleRecord, Split, TokenLayout,
};
use proptest::prelude::*;

fn tensor() -> impl Strategy<Value = FeatureTensor> {
    (0usize..3, 0usize..5, 1usize..5, 1usize..5, 1usize..6).prop_flat_map(|(c, r, h, w, d)| {
        let layout = TokenLayout::new(c, r, h, w).unwrap();
        prop::collection::vec(
            any::<f32>().prop_filter("finite", |v| v.is_finite()),
            layout.n_tokens() * d,
        )
        .prop_map(move |data| FeatureTensor::new(layout, d, data).unwrap())
    })
}

proptest! {
    #[test]
    fn roundtrip_is_bit_exact(t in tensor()) {
        let back = decode(&encode(&t).unwrap()).unwrap();
        let a: Vec<u32> = t.data().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u32> = back.data().iter().map(|v| v.to_bits()).collect();
        prop_assert_eq!(a, b);
        prop_assert_eq!(back.layout(), t.layout());
    }

    #[test]
    fn any_truncation_is_rejected(t in tensor(), cut in 1usize..64) {
        let bytes = encode(&t).unwrap();
        let cut = cut.min(bytes.len());
        prop_assert!(decode(&bytes[..bytes.len() - cut]).is_err());
    }
}

#[test]
fn file_roundtrip_and_validate() {
    let dir = tempfile::tempdir().unwrap();
    let layout = TokenLayout::REFERENCE;
    let mut records = Vec::new();
    for (i, label) in [Label::Real, Label::Fake].into_iter().enumerate() {
        let t = FeatureTensor::from_fn(layout, 8, |tok, d| (tok + d + i) as f32).unwrap();
        let name = format!("s{i}.fgts");
        write_feature_file(&t, dir.path().join(&name)).unwrap();
        assert_eq!(read_feature_file(dir.path().join(&name)).unwrap(), t);
        records.push(SampleRecord {
            sample_id: format!("s{i}"),
            image_path: None,
            feature_path: name.into(),
            label,
            generator: if label == Label::Real { "-".into() } else { "ldm".into() },
            split: Split::Reference,
        });
    }
    let manifest = SampleManifest::new(layout, 8, ["ldm".to_string()], [], records).unwrap();
    let path = dir.path().join("m.jsonl");
    manifest.write(&path).unwrap();
    let loaded = load_manifest(&path).unwrap();
    assert_eq!(loaded.records, manifest.records);

    let report = validate(&loaded, None);
    assert!(report.is_ok(), "{:?}", report.errors);
    assert!(report.warnings.is_empty(), "{:?}", report.warnings);

    // A file written with a different layout is flagged.
    let other = FeatureTensor::zeros(TokenLayout::patches(14, 14).unwrap(), 8).unwrap();
    write_feature_file(&other, dir.path().join("s1.fgts")).unwrap();
    let report = validate(&loaded, None);
    assert_eq!(report.errors.len(), 1);
    assert!(report.errors[0].contains("layout mismatch"), "{}", report.errors[0]);
}

#[test]
fn missing_file_is_io_error() {
    assert!(matches!(
        read_feature_file("/nonexistent/x.fgts"),
        Err(Error::Io { .. })
    ));
}
