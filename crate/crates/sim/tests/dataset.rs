use std::fs;
use std::path::Path;

use viko_sim::{generate_dataset, DatasetProtocol};

fn files(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for sub in ["frames", "labels"] {
        for e in fs::read_dir(root.join(sub)).unwrap() {
            let p = e.unwrap().path();
            out.push((format!("{sub}/{}", p.file_name().unwrap().to_string_lossy()), fs::read(&p).unwrap()));
        }
    }
    out.push(("manifest.json".into(), fs::read(root.join("manifest.json")).unwrap()));
    out.sort();
    out
}

#[test]
fn same_seed_same_bytes() {
    let p = DatasetProtocol { frames_per_shape: 5, ..Default::default() };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    generate_dataset(&p, a.path()).unwrap();
    generate_dataset(&p, b.path()).unwrap();
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert_eq!(fa.len(), 20 * 3 + 1);
    assert_eq!(fa, fb);

    let c = tempfile::tempdir().unwrap();
    generate_dataset(&DatasetProtocol { seed: p.seed + 1, ..p }, c.path()).unwrap();
    assert_ne!(files(c.path()), fa);
}

#[test]
fn labels_round_trip() {
    let p = DatasetProtocol { frames_per_shape: 2, ..Default::default() };
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate_dataset(&p, dir.path()).unwrap();
    assert_eq!(manifest.count, 8);
    for i in 0..8 {
        let mask = viko_core::imaging::io::load_mask_png(&dir.path().join(format!("labels/{i:05}.png"))).unwrap();
        let side: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join(format!("labels/{i:05}.json"))).unwrap()).unwrap();
        let area = 100.0 * mask.count() as f64 / (460.0 * 460.0);
        assert!((side["area_fraction"].as_f64().unwrap() - area).abs() < 1e-9);
        assert_eq!(side["markers"].as_array().unwrap().len(), 100);
    }
}

#[test]
fn unwritable_root_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("occupied");
    fs::write(&file, b"x").unwrap();
    let err = generate_dataset(&DatasetProtocol { frames_per_shape: 1, ..Default::default() }, &file).unwrap_err();
    assert!(matches!(err, viko_sim::SimError::Io(_)), "{err}");
}
