//! Human agents: the rest/leisure/workout activity hierarchy, its reward and
//! leave-penalty curves, the two reward variants and the named profiles.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::comfort::{discomfort, ComfortEnv, ComfortProfile};
use crate::error::{Error, Result};
use crate::hrl::{Hierarchy, LearnerConfig, NodeId, NodeKind, Table, TaskGraph, ROOT};
use crate::thermo::{AmbientState, ThAction};

pub const N_ACTIVITIES: usize = 3;
pub const ACTIVITY_NAMES: [&str; N_ACTIVITIES] = ["rest", "leisure", "workout"];
const ALL_DONE: u8 = 0b111;
/// Scope value used in keys of the root subroutine.
const ROOT_SCOPE: u8 = N_ACTIVITIES as u8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RewardVariant {
    /// Leaving costs the leave penalty only.
    R1,
    /// Leaving an uncomfortable activity refunds the discomfort.
    R2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResumeMode {
    /// Re-enter at the last reached subtask boundary.
    Resume,
    /// Re-enter from scratch.
    Restart,
    /// Re-enter exactly where the activity was left.
    Keep,
}

/// Per-activity reward shapes and leave penalties. Breakpoints are given as
/// fractions of `n_act`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActivityCurves {
    pub n_act: u32,
    pub subtask_len: u32,
    pub r_min: f64,
    pub r_max: f64,
    pub rest_peak_at: f64,
    pub rest_end: f64,
    pub workout_peak_at: f64,
    pub workout_fatigue_at: f64,
    pub workout_fatigue: f64,
    pub workout_late: f64,
    pub c_max: [f64; 3],
    pub completion_bonus: f64,
    pub resume: ResumeMode,
}

impl Default for ActivityCurves {
    fn default() -> Self {
        ActivityCurves {
            n_act: 20,
            subtask_len: 5,
            r_min: 0.2,
            r_max: 2.0,
            rest_peak_at: 0.5,
            rest_end: 1.0,
            workout_peak_at: 0.6,
            workout_fatigue_at: 0.9,
            workout_fatigue: 0.8,
            workout_late: 3.0,
            c_max: [1.5, 1.0, 2.0],
            completion_bonus: 5.0,
            resume: ResumeMode::Resume,
        }
    }
}

fn lerp(x: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

impl ActivityCurves {
    pub fn validate(&self) -> Result<()> {
        if self.n_act == 0 || self.subtask_len == 0 || !self.n_act.is_multiple_of(self.subtask_len) {
            return Err(Error::Config(format!(
                "subtask length {} must divide activity length {}",
                self.subtask_len, self.n_act
            )));
        }
        if self.n_act > 200 {
            return Err(Error::Config("activity length above 200 is not supported".into()));
        }
        let fracs = [self.rest_peak_at, self.workout_peak_at, self.workout_fatigue_at];
        if fracs.iter().any(|f| !(*f > 0.0 && *f < 1.0)) || self.workout_peak_at >= self.workout_fatigue_at {
            return Err(Error::Config("curve breakpoints must satisfy 0 < peak < fatigue < 1".into()));
        }
        let values = [
            self.r_min,
            self.r_max,
            self.rest_end,
            self.workout_fatigue,
            self.workout_late,
            self.completion_bonus,
        ];
        if values.iter().chain(&self.c_max).any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config("curve amplitudes must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub(crate) fn check(&self, p: u32) -> Result<()> {
        if p > self.n_act {
            return Err(Error::ProgressOutOfRange {
                progress: p,
                max: self.n_act,
            });
        }
        Ok(())
    }

    /// Task reward for reaching progress `p` in `activity`.
    pub fn activity_reward(&self, activity: usize, p: u32) -> Result<f64> {
        self.check(p)?;
        let x = p as f64 / self.n_act as f64;
        Ok(match activity {
            0 if x <= self.rest_peak_at => lerp(x, 0.0, self.rest_peak_at, self.r_min, self.r_max),
            0 => lerp(x, self.rest_peak_at, 1.0, self.r_max, self.rest_end),
            1 => lerp(x, 0.0, 1.0, self.r_max, self.r_min),
            _ if x <= self.workout_peak_at => lerp(x, 0.0, self.workout_peak_at, self.r_min, self.r_max),
            _ if x <= self.workout_fatigue_at => lerp(
                x,
                self.workout_peak_at,
                self.workout_fatigue_at,
                self.r_max,
                self.workout_fatigue,
            ),
            _ => self.workout_late,
        })
    }

    /// Cost of abandoning `activity` at progress `p`: a sawtooth that
    /// vanishes at every subtask boundary.
    pub fn leave_penalty(&self, activity: usize, p: u32) -> Result<f64> {
        self.check(p)?;
        let rem = p % self.subtask_len;
        if rem == 0 {
            return Ok(0.0);
        }
        Ok(self.c_max[activity] * (self.subtask_len - rem) as f64 / self.subtask_len as f64)
    }

    /// Progress kept when an activity is left at `p`.
    pub fn resume_point(&self, p: u32) -> u32 {
        match self.resume {
            ResumeMode::Resume => p / self.subtask_len * self.subtask_len,
            ResumeMode::Restart => 0,
            ResumeMode::Keep => p,
        }
    }

    /// Largest value any activity reward can take.
    pub fn peak_reward(&self) -> f64 {
        [self.r_min, self.r_max, self.rest_end, self.workout_fatigue, self.workout_late]
            .into_iter()
            .fold(0.0, f64::max)
    }

    pub fn max_leave_penalty(&self) -> f64 {
        self.c_max.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumanModelSpec {
    pub name: String,
    pub met: [f64; 3],
    pub variant: RewardVariant,
    pub band_halfwidth: f64,
    #[serde(default)]
    pub learner: LearnerConfig,
}

impl HumanModelSpec {
    fn new(name: &str, met: [f64; 3], variant: RewardVariant, band: f64) -> Self {
        HumanModelSpec {
            name: name.into(),
            met,
            variant,
            band_halfwidth: band,
            learner: LearnerConfig::default(),
        }
    }

    pub fn validate(&self, env: &ComfortEnv) -> Result<()> {
        self.learner.validate()?;
        env.profile(self.met, self.band_halfwidth).validate()
    }
}

pub const PROFILE_NAMES: [&str; 5] = ["H_A", "H_B", "H_C", "H_C_prime", "H_D"];

/// One of the shipped human profiles.
pub fn profile(name: &str) -> Result<HumanModelSpec> {
    use RewardVariant::*;
    Ok(match name {
        "H_A" => HumanModelSpec::new(name, [1.0, 1.3, 1.8], R1, 0.5),
        "H_B" => HumanModelSpec::new(name, [1.10, 1.35, 1.75], R1, 0.5),
        "H_C" => HumanModelSpec::new(name, [1.80, 1.35, 1.15], R2, 0.25),
        "H_C_prime" => HumanModelSpec::new(name, [1.75, 1.30, 1.15], R2, 0.25),
        "H_D" => HumanModelSpec::new(name, [1.15, 1.25, 1.85], R2, 0.25),
        _ => return Err(Error::Config(format!("unknown human profile `{name}`"))),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrimKind {
    Continue,
    Leave,
    Th(ThAction),
}

impl PrimKind {
    pub const ALL: [PrimKind; 6] = [
        PrimKind::Continue,
        PrimKind::Leave,
        PrimKind::Th(ThAction::TempUp),
        PrimKind::Th(ThAction::TempDown),
        PrimKind::Th(ThAction::HumUp),
        PrimKind::Th(ThAction::HumDown),
    ];

    pub fn name(self) -> &'static str {
        match self {
            PrimKind::Continue => "continue",
            PrimKind::Leave => "leave",
            PrimKind::Th(a) => a.name(),
        }
    }

    fn index(self) -> usize {
        PrimKind::ALL.iter().position(|k| *k == self).unwrap_or(0)
    }
}

/// What a human knows about itself plus the shared grid observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HumanState {
    /// Activity in progress, `None` while choosing at the root.
    pub current: Option<u8>,
    /// Progress of every activity; for inactive ones, where it resumes.
    pub progress: [u8; 3],
    /// Highest progress ever reached in each activity. Steps that only
    /// recover lost progress earn no task reward.
    pub best: [u8; 3],
    /// Progress of the current activity when it was (re)entered.
    pub entry: u8,
    /// Bit mask of completed activities.
    pub completed: u8,
    pub t_idx: u8,
    pub rh_idx: u8,
}

impl HumanState {
    pub fn new(ambient: &AmbientState) -> Self {
        HumanState {
            current: None,
            progress: [0; 3],
            best: [0; 3],
            entry: 0,
            completed: 0,
            t_idx: ambient.t_idx as u8,
            rh_idx: ambient.rh_idx as u8,
        }
    }

    pub fn observe(&mut self, ambient: &AmbientState) {
        self.t_idx = ambient.t_idx as u8;
        self.rh_idx = ambient.rh_idx as u8;
    }

    pub fn is_completed(&self, activity: usize) -> bool {
        self.completed & (1 << activity) != 0
    }

    pub fn all_done(&self) -> bool {
        self.completed == ALL_DONE
    }

    pub fn enter(&mut self, activity: usize) {
        if self.current != Some(activity as u8) {
            self.current = Some(activity as u8);
            self.entry = self.progress[activity];
        }
    }

    /// True if `activity` is not running or has made no progress since it
    /// was entered.
    fn fresh(&self, activity: usize) -> bool {
        self.current != Some(activity as u8) || self.progress[activity] == self.entry
    }

    /// True if the next step of `activity` only recovers lost progress.
    pub fn replaying(&self, activity: usize) -> bool {
        self.progress[activity] < self.best[activity]
    }
}

/// Abstracted state key shared by the three tables. Fields a table does not
/// depend on are zeroed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HumanKey {
    pub scope: u8,
    pub progress: u8,
    pub fresh: bool,
    pub replay: bool,
    pub mask: u8,
    pub t_idx: u8,
    pub rh_idx: u8,
}

impl fmt::Display for HumanKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scope == ROOT_SCOPE {
            write!(f, "root/m{}/t{}/h{}", self.mask, self.t_idx, self.rh_idx)
        } else {
            write!(
                f,
                "a{}/p{}{}{}/m{}/t{}/h{}",
                self.scope,
                self.progress,
                if self.fresh { "f" } else { "" },
                if self.replay { "r" } else { "" },
                self.mask,
                self.t_idx,
                self.rh_idx
            )
        }
    }
}

/// Outcome of one human primitive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HumanStep {
    pub reward: f64,
    pub pmv: f64,
    pub th: Option<ThAction>,
    pub left: bool,
    pub finished_activity: bool,
}

/// A human model: task graph, curves and comfort, ready to learn.
#[derive(Debug, Clone)]
pub struct HumanModel {
    pub spec: HumanModelSpec,
    pub curves: ActivityCurves,
    pub comfort: ComfortProfile,
    graph: TaskGraph,
}

impl HumanModel {
    pub fn new(spec: HumanModelSpec, curves: ActivityCurves, env: &ComfortEnv) -> Result<Self> {
        spec.validate(env)?;
        curves.validate()?;
        let comfort = env.profile(spec.met, spec.band_halfwidth);
        Ok(HumanModel {
            graph: build_hierarchy()?,
            spec,
            curves,
            comfort,
        })
    }

    pub fn graph(&self) -> &TaskGraph {
        &self.graph
    }

    pub fn activity_node(activity: usize) -> NodeId {
        1 + activity
    }

    pub fn primitive_node(activity: usize, kind: PrimKind) -> NodeId {
        1 + N_ACTIVITIES + PrimKind::ALL.len() * activity + kind.index()
    }

    /// Activity a non-root node belongs to.
    pub fn activity_of(node: NodeId) -> Option<usize> {
        match node {
            ROOT => None,
            n if n <= N_ACTIVITIES => Some(n - 1),
            n => Some((n - 1 - N_ACTIVITIES) / PrimKind::ALL.len()),
        }
    }

    pub fn primitive_kind(node: NodeId) -> Option<PrimKind> {
        (node > N_ACTIVITIES).then(|| PrimKind::ALL[(node - 1 - N_ACTIVITIES) % PrimKind::ALL.len()])
    }

    /// PMV felt in `activity` at the ambient, and the resulting discomfort.
    pub fn sensation(&self, activity: usize, ambient: &AmbientState) -> Result<(f64, f64)> {
        let v = self.comfort.pmv_for(activity, ambient.temp, ambient.rh)?;
        Ok((v, discomfort(v, self.spec.band_halfwidth)))
    }

    /// Reward of `kind` taken in `activity` at `state`, given PMV.
    pub fn reward(&self, state: &HumanState, activity: usize, kind: PrimKind, pmv: f64) -> Result<f64> {
        let d = discomfort(pmv, self.spec.band_halfwidth);
        let p = state.progress[activity] as u32;
        Ok(match kind {
            PrimKind::Continue => {
                let next = p + 1;
                if state.replaying(activity) {
                    self.curves.check(next)?;
                    return Ok(-d);
                }
                let mut r = self.curves.activity_reward(activity, next)? - d;
                if next == self.curves.n_act {
                    r += self.curves.completion_bonus;
                }
                r
            }
            // The leave penalty also stands in for the root's penalty on the
            // interrupted task, so it is charged once.
            PrimKind::Leave => {
                let c = self.curves.leave_penalty(activity, p)?;
                match self.spec.variant {
                    RewardVariant::R1 => -c,
                    RewardVariant::R2 => -c + d,
                }
            }
            PrimKind::Th(_) => -d,
        })
    }

    /// Executes primitive `node` for `state` (entering its activity if
    /// needed). The ambient is not modified; a TH change is reported in the
    /// returned step for the caller to apply.
    pub fn step(&self, state: &mut HumanState, node: NodeId, ambient: &AmbientState) -> Result<HumanStep> {
        let (Some(activity), Some(kind)) = (Self::activity_of(node), Self::primitive_kind(node)) else {
            return Err(Error::Graph(format!("node {node} is not a human primitive")));
        };
        state.enter(activity);
        let (pmv, _) = self.sensation(activity, ambient)?;
        let reward = self.reward(state, activity, kind, pmv)?;
        let mut out = HumanStep {
            reward,
            pmv,
            th: None,
            left: false,
            finished_activity: false,
        };
        match kind {
            PrimKind::Continue => {
                let p = state.progress[activity] as u32 + 1;
                state.progress[activity] = p as u8;
                state.best[activity] = state.best[activity].max(p as u8);
                if p == self.curves.n_act {
                    state.completed |= 1 << activity;
                    state.current = None;
                    out.finished_activity = true;
                }
            }
            PrimKind::Leave => {
                let p = state.progress[activity] as u32;
                state.progress[activity] = self.curves.resume_point(p) as u8;
                state.current = None;
                out.left = true;
            }
            PrimKind::Th(a) => out.th = Some(a),
        }
        Ok(out)
    }

    /// Bounds every reward this model can emit.
    pub fn reward_bounds(&self) -> (f64, f64) {
        let max_d = crate::comfort::PMV_LIMIT;
        (
            -(self.curves.max_leave_penalty() + max_d),
            self.curves.peak_reward() + self.curves.completion_bonus,
        )
    }
}

/// Root over three activities, each with the six primitives.
pub fn build_hierarchy() -> Result<TaskGraph> {
    let mut spec = vec![(
        "root".to_string(),
        NodeKind::Composite,
        (1..=N_ACTIVITIES).collect::<Vec<_>>(),
    )];
    for (a, name) in ACTIVITY_NAMES.iter().enumerate() {
        let children = PrimKind::ALL.iter().map(|k| HumanModel::primitive_node(a, *k)).collect();
        spec.push((name.to_string(), NodeKind::Composite, children));
    }
    for name in ACTIVITY_NAMES {
        for k in PrimKind::ALL {
            spec.push((format!("{name}.{}", k.name()), NodeKind::Primitive, vec![]));
        }
    }
    TaskGraph::new(spec)
}

impl Hierarchy for HumanModel {
    type State = HumanState;
    type Key = HumanKey;

    fn graph(&self) -> &TaskGraph {
        &self.graph
    }

    fn key(&self, table: Table, node: NodeId, s: &HumanState) -> HumanKey {
        let Some(a) = Self::activity_of(node) else {
            return HumanKey {
                scope: ROOT_SCOPE,
                progress: 0,
                fresh: false,
                replay: false,
                mask: s.completed,
                t_idx: s.t_idx,
                rh_idx: s.rh_idx,
            };
        };
        let mut key = HumanKey {
            scope: a as u8,
            progress: s.progress[a],
            fresh: false,
            replay: s.replaying(a),
            mask: 0,
            t_idx: s.t_idx,
            rh_idx: s.rh_idx,
        };
        match table {
            // A primitive's reward only depends on part of the state.
            Table::Reward => match Self::primitive_kind(node) {
                Some(PrimKind::Th(_)) => {
                    key.progress = 0;
                    key.replay = false;
                }
                Some(PrimKind::Leave) => {
                    key.replay = false;
                    if self.spec.variant == RewardVariant::R1 {
                        key.t_idx = 0;
                        key.rh_idx = 0;
                    }
                }
                _ => {}
            },
            Table::Completion => key.fresh = s.fresh(a),
            Table::Exit => {
                key.fresh = s.fresh(a);
                key.mask = s.completed;
            }
        }
        key
    }

    fn admissible(&self, node: NodeId, s: &HumanState, out: &mut Vec<NodeId>) {
        out.clear();
        match Self::activity_of(node) {
            None => out.extend((0..N_ACTIVITIES).filter(|a| !s.is_completed(*a)).map(Self::activity_node)),
            Some(a) => {
                // Leaving is only possible once some progress was made since
                // entering; otherwise enter/leave at a subtask boundary
                // would be a free loop.
                for k in PrimKind::ALL {
                    if k == PrimKind::Leave && s.fresh(a) {
                        continue;
                    }
                    out.push(Self::primitive_node(a, k));
                }
            }
        }
    }

    fn is_terminated(&self, node: NodeId, s: &HumanState) -> bool {
        match Self::activity_of(node) {
            None => s.all_done(),
            Some(a) if node <= N_ACTIVITIES => s.current != Some(a as u8),
            Some(_) => true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::ThermalGrid;

    fn model(name: &str) -> HumanModel {
        HumanModel::new(profile(name).unwrap(), ActivityCurves::default(), &ComfortEnv::default()).unwrap()
    }

    #[test]
    fn curve_values() {
        let c = ActivityCurves::default();
        assert!((c.activity_reward(0, 0).unwrap() - 0.2).abs() < 1e-12);
        assert!((c.activity_reward(0, 10).unwrap() - 2.0).abs() < 1e-12);
        assert!((c.activity_reward(0, 20).unwrap() - 1.0).abs() < 1e-12);
        assert!((c.activity_reward(2, 12).unwrap() - 2.0).abs() < 1e-12);
        assert!((c.activity_reward(2, 18).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(c.activity_reward(2, 19).unwrap(), 3.0);
        assert_eq!(c.activity_reward(2, 20).unwrap(), 3.0);
        for p in 0..20 {
            assert!(c.activity_reward(1, p + 1).unwrap() <= c.activity_reward(1, p).unwrap());
        }
        assert!(matches!(c.activity_reward(0, 21), Err(Error::ProgressOutOfRange { progress: 21, max: 20 })));
    }

    #[test]
    fn penalty_sawtooth() {
        let c = ActivityCurves::default();
        assert_eq!(c.leave_penalty(0, 0).unwrap(), 0.0);
        assert_eq!(c.leave_penalty(1, 5).unwrap(), 0.0);
        assert!((c.leave_penalty(0, 1).unwrap() - 1.2).abs() < 1e-12);
        for a in 0..3 {
            for p in 0..=15 {
                assert_eq!(c.leave_penalty(a, p).unwrap(), c.leave_penalty(a, p + 5).unwrap());
            }
        }
        assert!(c.leave_penalty(0, 30).is_err());
    }

    #[test]
    fn curves_validation() {
        assert!(ActivityCurves { subtask_len: 3, ..Default::default() }.validate().is_err());
        assert!(ActivityCurves { c_max: [1.0, -1.0, 1.0], ..Default::default() }.validate().is_err());
        assert!(ActivityCurves::default().validate().is_ok());
    }

    #[test]
    fn shipped_profiles() {
        assert_eq!(profile("H_A").unwrap().met, [1.0, 1.3, 1.8]);
        assert_eq!(profile("H_C_prime").unwrap().met, [1.75, 1.30, 1.15]);
        let d = profile("H_D").unwrap();
        assert_eq!((d.variant, d.band_halfwidth), (RewardVariant::R2, 0.25));
        assert!(profile("H_Z").is_err());
    }

    #[test]
    fn hierarchy_shape() {
        let g = build_hierarchy().unwrap();
        let composites = g.nodes().iter().filter(|n| n.kind == NodeKind::Composite).count();
        assert_eq!(composites, 4);
        let kinds: std::collections::BTreeSet<_> =
            (0..g.len()).filter_map(HumanModel::primitive_kind).collect();
        assert_eq!(kinds.len(), 6);
        assert_eq!(g.children(ROOT), &[1, 2, 3]);
        for n in 4..g.len() {
            assert_eq!(HumanModel::activity_of(n), Some((n - 4) / 6));
            let a = HumanModel::activity_of(n).unwrap();
            assert_eq!(g.parent(n), Some(HumanModel::activity_node(a)));
        }
    }

    fn ambient() -> AmbientState {
        AmbientState::at_grid_point(&ThermalGrid::default(), 5, 4)
    }

    #[test]
    fn reward_substitution() {
        let mut m = model("H_A");
        let mut s = HumanState::new(&ambient());
        s.enter(0);
        s.progress[0] = 9; // continue reaches the rest peak of 2.0
        assert!((m.reward(&s, 0, PrimKind::Continue, 0.8).unwrap() - 1.2).abs() < 1e-12);
        m.spec.variant = RewardVariant::R2;
        s.progress[0] = 1;
        assert!((m.reward(&s, 0, PrimKind::Leave, 0.8).unwrap() + 0.4).abs() < 1e-12);
    }

    #[test]
    fn variants_agree_inside_band() {
        let a = model("H_A");
        let mut b = a.clone();
        b.spec.variant = RewardVariant::R2;
        let mut s = HumanState::new(&ambient());
        for act in 0..3 {
            s.enter(act);
            for p in 0..20u8 {
                s.progress[act] = p;
                for k in PrimKind::ALL {
                    assert_eq!(a.reward(&s, act, k, 0.3).unwrap(), b.reward(&s, act, k, 0.3).unwrap());
                }
            }
        }
    }

    #[test]
    fn leave_and_resume() {
        let m = model("H_A");
        let amb = ambient();
        let mut s = HumanState::new(&amb);
        let cont = HumanModel::primitive_node(1, PrimKind::Continue);
        let leave = HumanModel::primitive_node(1, PrimKind::Leave);
        let mut buf = Vec::new();
        m.admissible(HumanModel::activity_node(1), &s, &mut buf);
        assert!(!buf.contains(&leave));
        for _ in 0..7 {
            m.step(&mut s, cont, &amb).unwrap();
        }
        m.admissible(HumanModel::activity_node(1), &s, &mut buf);
        assert!(buf.contains(&leave));
        let out = m.step(&mut s, leave, &amb).unwrap();
        assert!(out.left);
        assert_eq!(s.current, None);
        assert_eq!(s.progress[1], 5);
        assert!(m.is_terminated(HumanModel::activity_node(1), &s));
    }

    #[test]
    fn completing_everything_ends_root() {
        let m = model("H_A");
        let amb = ambient();
        let mut s = HumanState::new(&amb);
        for a in 0..3 {
            for _ in 0..20 {
                m.step(&mut s, HumanModel::primitive_node(a, PrimKind::Continue), &amb).unwrap();
            }
        }
        assert!(s.all_done());
        let mut buf = Vec::new();
        m.admissible(ROOT, &s, &mut buf);
        assert!(buf.is_empty());
        assert!(m.is_terminated(ROOT, &s));
    }
}
