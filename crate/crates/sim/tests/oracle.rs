//! Rendered frames checked against their exact ground truth through the
//! core imaging, tracking and slip stages.

use viko_core::imaging::{extract_markers, BlobConfig, MarkerMorphology, ThresholdConfig};
use viko_core::segmentation::{segment_heuristic, HeuristicConfig};
use viko_core::slip::evaluate_slip;
use viko_core::tracking::match_markers;
use viko_core::{ContactMask, MarkerSet, Point2, Roi};
use viko_sim::render::{contact_mask, render_frame};
use viko_sim::{Contact, SceneSpec, SensorModel, Shape, SlipPatch};

fn markers(frame: &viko_core::Frame) -> MarkerSet {
    extract_markers(frame, &ThresholdConfig::default(), &MarkerMorphology::default(), &BlobConfig::default()).unwrap()
}

fn circle(radius_mm: f64, depth_mm: f64) -> Contact {
    Contact { shape: Shape::Circle { radius_mm }, center_mm: [0.0, 0.0], rotation_rad: 0.0, depth_mm }
}

#[test]
fn rest_grid_recovered_within_half_pixel() {
    let model = SensorModel::default();
    for seed in 0..5 {
        let (frame, gt) = render_frame(&model, &SceneSpec::empty(seed)).unwrap();
        let found = markers(&frame);
        assert_eq!(found.len(), 100);
        let mut rest = gt.rest.clone();
        rest.sort_by(|a, b| a.cmp_yx(b));
        for (c, r) in found.centroids.iter().zip(&rest) {
            assert!(c.distance(*r) <= 0.5, "{c:?} vs {r:?}");
        }
    }
}

#[test]
fn displaced_markers_match_truth() {
    let model = SensorModel::default();
    let (ref_frame, _) = render_frame(&model, &SceneSpec::empty(1)).unwrap();
    let b0 = markers(&ref_frame);
    let scene = SceneSpec { contact: Some(circle(9.0, 0.5)), shear_mm: [0.4, -0.3], seed: 2, ..Default::default() };
    let (frame, gt) = render_frame(&model, &scene).unwrap();
    let field = match_markers(&b0, &markers(&frame), 12.0);
    assert_eq!(field.len(), 100);
    for pair in &field.pairs {
        let k = gt.rest.iter().position(|r| r.distance(pair.origin) < 1.0).unwrap();
        assert!(pair.vector.distance(gt.displacement[k]) <= 0.7);
    }
}

#[test]
fn heuristic_iou_on_circle() {
    let model = SensorModel::default();
    let (reference, _) = render_frame(&model, &SceneSpec::empty(10)).unwrap();
    for (i, depth) in [0.1, 0.5, 1.0].into_iter().enumerate() {
        let scene = SceneSpec { contact: Some(circle(7.0, depth)), shear_mm: [0.2, 0.1], seed: 20 + i as u64, ..Default::default() };
        let (frame, gt) = render_frame(&model, &scene).unwrap();
        let c = segment_heuristic(&frame, &reference, &HeuristicConfig::default(), &ThresholdConfig::default(), &model.roi()).unwrap();
        let iou = c.mask.iou(&gt.mask);
        assert!(iou >= 0.9, "depth {depth}: iou {iou}");
    }
}

#[test]
fn full_roi_press_covers_sensing_area() {
    let model = SensorModel::default();
    let (reference, _) = render_frame(&model, &SceneSpec::empty(3)).unwrap();
    let side = 460.0 / model.px_per_mm;
    let off = -0.5 / model.px_per_mm;
    let contact = Contact { shape: Shape::Rectangle { width_mm: side, height_mm: side }, center_mm: [off, off], rotation_rad: 0.0, depth_mm: 0.3 };
    let (frame, gt) = render_frame(&model, &SceneSpec { contact: Some(contact), seed: 4, ..Default::default() }).unwrap();
    assert!((gt.area_fraction - 100.0).abs() < 1e-9);
    let c = segment_heuristic(&frame, &reference, &HeuristicConfig::default(), &ThresholdConfig::default(), &model.roi()).unwrap();
    assert!(c.area_fraction >= 95.0, "{}", c.area_fraction);
}

#[test]
fn area_matches_geometry() {
    let model = SensorModel::default();
    let scene = SceneSpec { contact: Some(circle(8.0, 0.5)), ..Default::default() };
    let brute = (0..480u32)
        .flat_map(|y| (0..480u32).map(move |x| (x, y)))
        .filter(|&(x, y)| Roi::inset(480, 480, 10).contains(x, y))
        .filter(|&(x, y)| (x as f64 - 240.0).powi(2) + (y as f64 - 240.0).powi(2) <= (8.0f64 * 9.6).powi(2))
        .count();
    let mask = contact_mask(&model, &scene);
    assert_eq!(mask.count(), brute);
}

fn slip_scene(radius_mm: f64) -> SceneSpec {
    // off-grid center at (234, 229) px: the 6th and 7th nearest rest
    // positions are 30.02 and 30.80 px away, the 8th 37.8
    SceneSpec {
        contact: Some(circle(12.0, 0.6)),
        shear_mm: [0.1, 0.1],
        slip_patch: Some(SlipPatch { center_mm: [-6.0 / 9.6, -11.0 / 9.6], radius_mm, extra_mm: [5.0 / 9.6, 0.0] }),
        seed: 77,
    }
}

#[test]
fn slip_patch_of_seven_detected_six_not() {
    let model = SensorModel::default();
    let (ref_frame, _) = render_frame(&model, &SceneSpec::empty(5)).unwrap();
    let b0 = markers(&ref_frame);
    for (radius_px, expected_count, expected_slip) in [(33.0, 7, true), (30.4, 6, false)] {
        let scene = slip_scene(radius_px / 9.6);
        let (frame, gt) = render_frame(&model, &scene).unwrap();
        assert_eq!(gt.slipping.len(), expected_count);
        assert_eq!(gt.slip, expected_slip);
        let field = match_markers(&b0, &markers(&frame), 12.0);
        let contact = ContactMask::from_mask(gt.mask.clone(), model.roi()).unwrap();
        let report = evaluate_slip(&contact, &field, &Default::default());
        assert_eq!(report.slip, expected_slip);
        assert_eq!(report.outlier_count, expected_count);
        let expected: Vec<Point2> = gt.slipping.iter().map(|&i| gt.rest[i]).collect();
        for idx in &report.outlier_indices {
            assert!(expected.iter().any(|p| p.distance(b0.centroids[*idx]) < 1.0));
        }
    }
}
