use viko_core::PipelineConfig;
use viko_sim::grasp::{run_demo, GraspPolicy, GraspScenario, GraspState};

fn run(s: &GraspScenario) -> viko_sim::grasp::DemoOutcome {
    run_demo(s, &GraspPolicy::default(), &PipelineConfig::default()).unwrap()
}

#[test]
fn egg_demo_passes_with_one_adjust() {
    let out = run(&GraspScenario::egg());
    let s = &out.summary;
    assert!(s.pass);
    assert_eq!(s.adjusts, 1);
    assert_eq!(s.tightens, 1);
    assert!((s.approach_areas[0] - 18.0).abs() <= 2.0);
    assert!((s.approach_areas[1] - 22.0).abs() <= 2.0);
    assert!(s.slip_frames_inside_window > 0);
    assert_eq!(s.slip_frames_outside_window, 0);
    assert!(s.post_release_shear < 0.05);

    let samples = &out.trace.samples;
    for w in samples.windows(2) {
        assert!(w[1].state.can_follow(w[0].state), "{:?} -> {:?}", w[0].state, w[1].state);
        assert!(w[1].t > w[0].t);
        if w[1].state == GraspState::Tighten {
            assert!(w[0].slip);
        }
        if matches!(w[0].state, GraspState::Lift | GraspState::Tighten) {
            assert!(w[1].grip_force >= w[0].grip_force);
        }
    }
}

#[test]
fn never_enough_area_fails() {
    let s = GraspScenario { area_by_angle: vec![[0.0, 10.0], [30.0, 15.0]], ..GraspScenario::egg() };
    let out = run(&s);
    assert_eq!(out.summary.terminal, GraspState::GraspFailed);
    assert!(!out.summary.pass);
    assert_eq!(out.summary.adjusts, 3);
    let last = out.trace.samples.last().unwrap();
    assert_eq!(last.action, viko_sim::Action::None);
}

#[test]
fn no_disturbance_no_tighten() {
    let s = GraspScenario { disturbance: None, ..GraspScenario::egg() };
    let out = run(&s);
    assert!(out.summary.pass);
    assert_eq!(out.trace.count_state(GraspState::Tighten), 0);
    assert!(out.trace.samples.iter().all(|x| !x.slip));
}

#[test]
fn trace_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&GraspScenario { disturbance: None, place_after_frames: 10, ..GraspScenario::egg() });
    out.write(dir.path()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(csv.starts_with("t,state,area_pct,shear_mag,slip,grip_force\n"));
    assert_eq!(csv.lines().count(), out.trace.samples.len() + 1);
    let back: viko_sim::GraspTrace = serde_json::from_str(&std::fs::read_to_string(dir.path().join("trace.json")).unwrap()).unwrap();
    assert_eq!(back, out.trace);
}
