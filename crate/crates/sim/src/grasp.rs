//! Closed-loop grasp demo: approach, check the contact area, adjust the
//! contact angle and re-approach if it is too small, lift, tighten on
//! incipient slip, release on the place command.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use viko_core::{ContactReport, Pipeline, PipelineConfig};

use crate::error::{SimError, SimResult};
use crate::model::SensorModel;
use crate::render::render_frame;
use crate::scenario::mix_seed;
use crate::scene::{Contact, SceneSpec, Shape, SlipPatch};

/// Rendered frames per second of simulated time.
pub const FRAME_RATE: f64 = 24.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GraspState {
    Approach,
    Adjust,
    Lift,
    Tighten,
    Release,
    GraspFailed,
}

impl GraspState {
    pub fn is_terminal(self) -> bool {
        matches!(self, GraspState::Release | GraspState::GraspFailed)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GraspState::Approach => "APPROACH",
            GraspState::Adjust => "ADJUST",
            GraspState::Lift => "LIFT",
            GraspState::Tighten => "TIGHTEN",
            GraspState::Release => "RELEASE",
            GraspState::GraspFailed => "GRASP_FAILED",
        }
    }

    /// Legal edges of the state graph, self-loops included.
    pub fn can_follow(self, prev: GraspState) -> bool {
        use GraspState::*;
        matches!(
            (prev, self),
            (Approach, Adjust | Lift | GraspFailed)
                | (Adjust, Approach)
                | (Lift, Lift | Tighten | Release)
                | (Tighten, Lift)
                | (Release, Release)
                | (GraspFailed, GraspFailed)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    None,
    /// Back off so the angle can change.
    Retract,
    /// Re-approach at a contact angle larger by the policy step.
    IncreaseAngle,
    Lift,
    Hold,
    /// Raise grip force by the policy increment.
    Tighten,
    Open,
    Abort,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraspPolicy {
    /// Minimum contact area to accept a grasp, percent.
    pub area_accept_threshold: f64,
    pub max_reapproach: u32,
    pub angle_step_deg: f64,
    pub grip_increment: f64,
    pub initial_grip: f64,
}

impl Default for GraspPolicy {
    fn default() -> Self {
        Self { area_accept_threshold: 20.0, max_reapproach: 3, angle_step_deg: 5.0, grip_increment: 0.5, initial_grip: 1.0 }
    }
}

impl GraspPolicy {
    pub fn validate(&self) -> SimResult<()> {
        let ok = self.area_accept_threshold > 0.0
            && self.max_reapproach >= 1
            && self.angle_step_deg > 0.0
            && self.grip_increment > 0.0
            && self.initial_grip >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(SimError::Scenario("policy thresholds must be positive and max_reapproach at least 1".into()))
        }
    }
}

/// Mutable controller state carried between reports.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyContext {
    pub reapproaches: u32,
    pub grip: f64,
}

impl PolicyContext {
    pub fn new(policy: &GraspPolicy) -> Self {
        Self { reapproaches: 0, grip: policy.initial_grip }
    }
}

/// One controller step. Terminal states emit no action and stay put.
pub fn step_policy(
    report: &ContactReport,
    state: GraspState,
    ctx: &mut PolicyContext,
    policy: &GraspPolicy,
    place_command: bool,
) -> (Action, GraspState) {
    use GraspState::*;
    match state {
        Approach if report.area_fraction >= policy.area_accept_threshold => (Action::Lift, Lift),
        Approach if ctx.reapproaches < policy.max_reapproach => (Action::Retract, Adjust),
        Approach => (Action::Abort, GraspFailed),
        Adjust => {
            ctx.reapproaches += 1;
            (Action::IncreaseAngle, Approach)
        }
        Lift if report.slip.slip => {
            ctx.grip += policy.grip_increment;
            (Action::Tighten, Tighten)
        }
        Lift if place_command => (Action::Open, Release),
        Lift | Tighten => (Action::Hold, Lift),
        Release | GraspFailed => (Action::None, state),
    }
}

/// External push during lift, modelled as a local slip patch that stops
/// once grip reaches `arrest_grip`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disturbance {
    /// Lift frame at which the push begins.
    pub start_frame: usize,
    /// Longest the push lasts if never arrested.
    pub max_frames: usize,
    pub patch: SlipPatch,
    pub arrest_grip: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraspScenario {
    pub object: String,
    pub model: SensorModel,
    pub seed: u64,
    pub initial_angle_deg: f64,
    /// `(angle_deg, area_pct)` pairs, linearly interpolated and clamped.
    pub area_by_angle: Vec<[f64; 2]>,
    pub contact_center_mm: [f64; 2],
    pub depth_mm: f64,
    pub reference_frames: usize,
    pub lift_shear_mm: [f64; 2],
    pub lift_ramp_frames: usize,
    /// Lift frames before the place command is given.
    pub place_after_frames: usize,
    /// Frames over which shear unloads after opening, contact kept.
    pub release_frames: usize,
    /// Frames without contact recorded after release.
    pub settle_frames: usize,
    pub disturbance: Option<Disturbance>,
    pub max_frames: usize,
}

impl Default for GraspScenario {
    fn default() -> Self {
        Self::egg()
    }
}

impl GraspScenario {
    /// 18% contact at the first angle, 22% one step later; a push during
    /// lift that one grip increment arrests.
    pub fn egg() -> Self {
        Self {
            object: "egg".into(),
            model: SensorModel::default(),
            seed: 6,
            initial_angle_deg: 0.0,
            area_by_angle: vec![[0.0, 18.0], [5.0, 22.0], [10.0, 25.0]],
            contact_center_mm: [0.0, 0.0],
            depth_mm: 0.6,
            reference_frames: 5,
            lift_shear_mm: [0.0, 0.25],
            lift_ramp_frames: 12,
            place_after_frames: 72,
            release_frames: 12,
            settle_frames: 12,
            disturbance: Some(Disturbance {
                start_frame: 30,
                max_frames: 24,
                patch: SlipPatch { center_mm: [3.75, 1.25], radius_mm: 3.6, extra_mm: [0.0, 0.6] },
                arrest_grip: 1.5,
            }),
            max_frames: 1000,
        }
    }

    pub fn load(path: &Path) -> SimResult<Self> {
        let s: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> SimResult<()> {
        self.model.validate()?;
        let bad = |m: &str| Err(SimError::Scenario(m.to_string()));
        if self.area_by_angle.is_empty() {
            return bad("area_by_angle is empty");
        }
        if self.area_by_angle.windows(2).any(|w| w[1][0] <= w[0][0]) {
            return bad("area_by_angle angles must increase");
        }
        if self.area_by_angle.iter().any(|a| !(a[1] > 0.0 && a[1] < 100.0)) {
            return bad("areas must lie in (0, 100)");
        }
        if self.reference_frames == 0 || self.lift_ramp_frames == 0 {
            return bad("reference_frames and lift_ramp_frames must be positive");
        }
        Ok(())
    }

    /// Target area at `angle_deg`.
    pub fn area_at(&self, angle_deg: f64) -> f64 {
        let t = &self.area_by_angle;
        if angle_deg <= t[0][0] {
            return t[0][1];
        }
        for w in t.windows(2) {
            if angle_deg <= w[1][0] {
                let u = (angle_deg - w[0][0]) / (w[1][0] - w[0][0]);
                return w[0][1] + u * (w[1][1] - w[0][1]);
            }
        }
        t[t.len() - 1][1]
    }

    /// Circular contact covering `area_pct` of the sensing area.
    pub fn contact_at(&self, angle_deg: f64) -> Contact {
        let roi_px = self.model.roi().area() as f64;
        let r_px = (self.area_at(angle_deg) / 100.0 * roi_px / std::f64::consts::PI).sqrt();
        Contact {
            shape: Shape::Circle { radius_mm: r_px / self.model.px_per_mm },
            center_mm: self.contact_center_mm,
            rotation_rad: 0.0,
            depth_mm: self.depth_mm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspSample {
    pub tick: usize,
    pub t: f64,
    pub state: GraspState,
    pub action: Action,
    pub area_pct: f64,
    pub shear_mag: f64,
    pub slip: bool,
    pub grip_force: f64,
    pub angle_deg: f64,
    pub disturbance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspTrace {
    pub object: String,
    pub samples: Vec<GraspSample>,
}

impl GraspTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,state,area_pct,shear_mag,slip,grip_force\n");
        for x in &self.samples {
            let _ = writeln!(
                s,
                "{:.4},{},{:.3},{:.4},{},{:.3}",
                x.t,
                x.state.as_str(),
                x.area_pct,
                x.shear_mag,
                u8::from(x.slip),
                x.grip_force
            );
        }
        s
    }

    pub fn count_state(&self, state: GraspState) -> usize {
        self.samples.iter().filter(|s| s.state == state).count()
    }

    /// Tick range `[start, end)` during which the push was applied.
    pub fn disturbance_window(&self) -> Option<(usize, usize)> {
        let first = self.samples.iter().find(|s| s.disturbance)?.tick;
        let last = self.samples.iter().rev().find(|s| s.disturbance)?.tick;
        Some((first, last + 1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoSummary {
    pub pass: bool,
    pub terminal: GraspState,
    pub approach_areas: Vec<f64>,
    pub adjusts: usize,
    pub tightens: usize,
    pub disturbance_window: Option<(usize, usize)>,
    pub slip_frames_inside_window: usize,
    pub slip_frames_outside_window: usize,
    pub peak_shear: f64,
    /// Largest shear magnitude once contact is gone after release.
    pub post_release_shear: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoOutcome {
    pub trace: GraspTrace,
    pub summary: DemoSummary,
}

impl DemoOutcome {
    /// `trace.csv`, `trace.json` and `summary.json` under `dir`.
    pub fn write(&self, dir: &Path) -> SimResult<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("trace.csv"), self.trace.to_csv())?;
        fs::write(dir.join("trace.json"), serde_json::to_string_pretty(&self.trace)? + "\n")?;
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&self.summary)? + "\n")?;
        Ok(())
    }
}

/// Runs the scenario through the pipeline and the policy until a terminal
/// state is reached and the release has settled.
pub fn run_demo(scenario: &GraspScenario, policy: &GraspPolicy, cfg: &PipelineConfig) -> SimResult<DemoOutcome> {
    scenario.validate()?;
    policy.validate()?;
    let model = &scenario.model;
    let mut seq = 0u64;
    let mut next_seed = || {
        seq += 1;
        mix_seed(scenario.seed, seq)
    };

    let refs = (0..scenario.reference_frames)
        .map(|i| render_frame(model, &SceneSpec::empty(next_seed())).map(|(f, _)| f.with_index(i as u64)))
        .collect::<SimResult<Vec<_>>>()?;
    let mut pipeline = Pipeline::new(cfg.clone(), &refs)?;

    let mut ctx = PolicyContext::new(policy);
    let mut state = GraspState::Approach;
    let mut angle = scenario.initial_angle_deg;
    let mut lift_frames = 0usize;
    let mut release_frames = 0usize;
    let mut samples = Vec::new();
    let mut approach_areas = Vec::new();

    for tick in 0..scenario.max_frames {
        let contact = scenario.contact_at(angle);
        let lift_shear = |k: usize| {
            let u = ((k + 1) as f64 / scenario.lift_ramp_frames as f64).min(1.0);
            scenario.lift_shear_mm.map(|v| v * u)
        };
        let mut disturbing = false;
        let scene = match state {
            GraspState::Approach => SceneSpec { contact: Some(contact), ..SceneSpec::empty(next_seed()) },
            GraspState::Adjust | GraspState::GraspFailed => SceneSpec::empty(next_seed()),
            GraspState::Lift | GraspState::Tighten => {
                let patch = scenario.disturbance.as_ref().and_then(|d| {
                    let active = lift_frames >= d.start_frame
                        && lift_frames < d.start_frame + d.max_frames
                        && ctx.grip < d.arrest_grip;
                    active.then(|| d.patch.clone())
                });
                disturbing = patch.is_some();
                SceneSpec { contact: Some(contact), shear_mm: lift_shear(lift_frames), slip_patch: patch, seed: next_seed() }
            }
            GraspState::Release => {
                if release_frames < scenario.release_frames {
                    let u = 1.0 - (release_frames + 1) as f64 / scenario.release_frames as f64;
                    let shear = scenario.lift_shear_mm.map(|v| v * u);
                    SceneSpec { contact: Some(contact), shear_mm: shear, ..SceneSpec::empty(next_seed()) }
                } else {
                    SceneSpec::empty(next_seed())
                }
            }
        };
        let (frame, _) = render_frame(model, &scene)?;
        let report = pipeline.process_frame(&frame.with_index(tick as u64));
        if state == GraspState::Approach {
            approach_areas.push(report.area_fraction);
        }
        let place = lift_frames >= scenario.place_after_frames;
        let (action, next) = step_policy(&report, state, &mut ctx, policy, place);
        samples.push(GraspSample {
            tick,
            t: tick as f64 / FRAME_RATE,
            state,
            action,
            area_pct: report.area_fraction,
            shear_mag: report.shear.magnitude,
            slip: report.slip.slip,
            grip_force: ctx.grip,
            angle_deg: angle,
            disturbance: disturbing,
        });
        if action == Action::IncreaseAngle {
            angle += policy.angle_step_deg;
        }
        match state {
            GraspState::Lift | GraspState::Tighten => lift_frames += 1,
            GraspState::Release => release_frames += 1,
            _ => {}
        }
        let done = match state {
            GraspState::GraspFailed => true,
            GraspState::Release => release_frames >= scenario.release_frames + scenario.settle_frames,
            _ => false,
        };
        if done {
            break;
        }
        state = next;
    }

    let trace = GraspTrace { object: scenario.object.clone(), samples };
    let summary = summarize(&trace, approach_areas, scenario);
    Ok(DemoOutcome { trace, summary })
}

fn summarize(trace: &GraspTrace, approach_areas: Vec<f64>, scenario: &GraspScenario) -> DemoSummary {
    let terminal = trace.samples.last().map_or(GraspState::Approach, |s| s.state);
    let window = trace.disturbance_window();
    let inside = |tick: usize| window.is_some_and(|(a, b)| (a..b).contains(&tick));
    let slip_in = trace.samples.iter().filter(|s| s.slip && inside(s.tick)).count();
    let slip_out = trace.samples.iter().filter(|s| s.slip && !inside(s.tick)).count();
    let settled_from = trace
        .samples
        .iter()
        .position(|s| s.state == GraspState::Release)
        .map(|i| i + scenario.release_frames);
    let post_release_shear = settled_from
        .map(|i| trace.samples[i.min(trace.samples.len())..].iter().map(|s| s.shear_mag).fold(0.0, f64::max))
        .unwrap_or(f64::NAN);
    DemoSummary {
        pass: terminal == GraspState::Release,
        terminal,
        approach_areas,
        adjusts: trace.count_state(GraspState::Adjust),
        tightens: trace.count_state(GraspState::Tighten),
        disturbance_window: window,
        slip_frames_inside_window: slip_in,
        slip_frames_outside_window: slip_out,
        peak_shear: trace.samples.iter().map(|s| s.shear_mag).fold(0.0, f64::max),
        post_release_shear,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use viko_core::shear::ShearEstimate;
    use viko_core::slip::SlipReport;

    fn report(area: f64, slip: bool) -> ContactReport {
        ContactReport {
            frame_index: 0,
            area_fraction: area,
            contours: Vec::new(),
            shear: ShearEstimate::zero(),
            slip: SlipReport { slip, ..SlipReport::none() },
            field: Default::default(),
            markers_found: 100,
            timing: Default::default(),
            flags: Default::default(),
        }
    }

    #[test]
    fn approach_transitions() {
        let p = GraspPolicy::default();
        let mut ctx = PolicyContext::new(&p);
        assert_eq!(step_policy(&report(18.0, false), GraspState::Approach, &mut ctx, &p, false), (Action::Retract, GraspState::Adjust));
        assert_eq!(step_policy(&report(0.0, false), GraspState::Adjust, &mut ctx, &p, false), (Action::IncreaseAngle, GraspState::Approach));
        assert_eq!(ctx.reapproaches, 1);
        assert_eq!(step_policy(&report(22.0, false), GraspState::Approach, &mut ctx, &p, false), (Action::Lift, GraspState::Lift));
    }

    #[test]
    fn reapproach_budget() {
        let p = GraspPolicy::default();
        let mut ctx = PolicyContext { reapproaches: 3, grip: 1.0 };
        assert_eq!(step_policy(&report(5.0, false), GraspState::Approach, &mut ctx, &p, false), (Action::Abort, GraspState::GraspFailed));
    }

    #[test]
    fn slip_tightens_once_per_report() {
        let p = GraspPolicy::default();
        let mut ctx = PolicyContext::new(&p);
        assert_eq!(step_policy(&report(22.0, true), GraspState::Lift, &mut ctx, &p, true), (Action::Tighten, GraspState::Tighten));
        assert_eq!(ctx.grip, 1.5);
        assert_eq!(step_policy(&report(22.0, true), GraspState::Tighten, &mut ctx, &p, false), (Action::Hold, GraspState::Lift));
        assert_eq!(ctx.grip, 1.5);
        assert_eq!(step_policy(&report(22.0, false), GraspState::Lift, &mut ctx, &p, true), (Action::Open, GraspState::Release));
    }

    #[test]
    fn terminal_states_are_inert() {
        let p = GraspPolicy::default();
        let mut ctx = PolicyContext::new(&p);
        for s in [GraspState::Release, GraspState::GraspFailed] {
            for slip in [false, true] {
                assert_eq!(step_policy(&report(50.0, slip), s, &mut ctx, &p, true), (Action::None, s));
            }
        }
        assert_eq!(ctx, PolicyContext::new(&p));
    }

    #[test]
    fn area_table_and_radius() {
        let s = GraspScenario::egg();
        assert_eq!(s.area_at(-3.0), 18.0);
        assert_eq!(s.area_at(2.5), 20.0);
        assert_eq!(s.area_at(40.0), 25.0);
        let Shape::Circle { radius_mm } = s.contact_at(5.0).shape else { panic!() };
        let r_px = radius_mm * 9.6;
        assert!((std::f64::consts::PI * r_px * r_px / (460.0 * 460.0) - 0.22).abs() < 1e-12);
    }

    #[test]
    fn csv_header() {
        let t = GraspTrace { object: "egg".into(), samples: vec![] };
        assert_eq!(t.to_csv(), "t,state,area_pct,shear_mag,slip,grip_force\n");
    }
}
