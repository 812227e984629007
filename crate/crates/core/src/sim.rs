//! Episode loop and the two-phase training protocol.
//!
//! Turn order within a tick: every unfinished human takes one primitive
//! (human 0 first), the zone relaxes one step, the smart home is credited
//! for its previous action and acts, and the zone relaxes again. The
//! relaxation steps happen with or without a smart home so the dynamics
//! are identical across conditions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comfort::ComfortEnv;
use crate::error::{Error, Result};
use crate::hrl::{update_from_trajectory, DecomposedQ, Executor, Hierarchy, Table};
use crate::human::{ActivityCurves, HumanKey, HumanModel, HumanModelSpec, HumanState, PrimKind, N_ACTIVITIES};
use crate::shs::{shs_reward, ShsAction, ShsConfig, ShsObservation, ShsQTable};
use crate::thermo::{apply_th_action, tick, AmbientState, ThermalGrid};

pub const MAX_HUMANS: usize = 2;

/// A complete, self-describing experiment configuration.
/// Absent fields take the defaults of [`Scenario::new`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub repetitions: u32,
    pub phase1_episodes: u32,
    pub phase2_episodes: u32,
    pub eval_episodes: u32,
    pub max_ticks: u32,
    pub shs_enabled: bool,
    /// Whether humans keep learning while the smart home trains.
    pub humans_learn_in_phase2: bool,
    /// Two humans share one zone; otherwise each runs in a home of its own.
    pub shared_home: bool,
    pub grid: ThermalGrid,
    pub curves: ActivityCurves,
    pub comfort: ComfortEnv,
    pub shs: ShsConfig,
    pub humans: Vec<HumanModelSpec>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario::new("custom", Vec::new())
    }
}

impl Scenario {
    pub fn new(name: &str, humans: Vec<HumanModelSpec>) -> Self {
        Scenario {
            name: name.into(),
            seed: 1,
            repetitions: 50,
            phase1_episodes: 350,
            phase2_episodes: 150,
            eval_episodes: 50,
            max_ticks: 300,
            shs_enabled: true,
            humans_learn_in_phase2: true,
            shared_home: true,
            grid: ThermalGrid::default(),
            curves: ActivityCurves::default(),
            comfort: ComfortEnv::default(),
            shs: ShsConfig::default(),
            humans,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.humans.is_empty() || self.humans.len() > MAX_HUMANS {
            return Err(Error::Config(format!("a scenario needs 1 or 2 humans, got {}", self.humans.len())));
        }
        if self.repetitions == 0 || self.phase1_episodes == 0 || self.eval_episodes == 0 || self.max_ticks == 0 {
            return Err(Error::Config(
                "repetitions, phase1_episodes, eval_episodes and max_ticks must be at least 1".into(),
            ));
        }
        self.grid.validate()?;
        self.curves.validate()?;
        self.shs.validate()?;
        for h in &self.humans {
            h.validate(&self.comfort)?;
        }
        Ok(())
    }

    /// Groups of human indices that share a zone.
    pub fn homes(&self) -> Vec<Vec<usize>> {
        if self.shared_home {
            vec![(0..self.humans.len()).collect()]
        } else {
            (0..self.humans.len()).map(|i| vec![i]).collect()
        }
    }

    pub fn conditions(&self) -> Vec<Condition> {
        if self.shs_enabled {
            vec![Condition::WithoutShs, Condition::WithShs]
        } else {
            vec![Condition::WithoutShs]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    WithoutShs,
    WithShs,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::WithoutShs => "without_shs",
            Condition::WithShs => "with_shs",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "without_shs" => Some(Condition::WithoutShs),
            "with_shs" => Some(Condition::WithShs),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Learning,
    /// Only the smart home learns; humans act as in evaluation.
    ShsLearning,
    Evaluation,
}

impl Mode {
    fn humans_learn(self) -> bool {
        self == Mode::Learning
    }

    fn shs_learns(self) -> bool {
        self != Mode::Evaluation
    }
}

#[derive(Debug, Clone)]
pub struct HumanAgent {
    pub model: HumanModel,
    pub q: DecomposedQ<HumanKey>,
    pub episodes: u32,
}

impl HumanAgent {
    pub fn new(spec: HumanModelSpec, curves: ActivityCurves, comfort: &ComfortEnv) -> Result<Self> {
        Ok(HumanAgent {
            model: HumanModel::new(spec, curves, comfort)?,
            q: DecomposedQ::new(),
            episodes: 0,
        })
    }

    fn epsilon(&self, mode: Mode) -> f64 {
        let l = &self.model.spec.learner;
        if mode.humans_learn() {
            l.epsilon(self.episodes)
        } else {
            l.epsilon_end
        }
    }

    /// Mean stored `Q_c` and `Q_e` per activity node, with entry counts.
    pub fn q_stats(&self) -> [QStats; N_ACTIVITIES] {
        std::array::from_fn(|a| {
            let node = HumanModel::activity_node(a);
            QStats::from_values(&self.q.completion_values(node), &self.q.exit_values(node))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QStats {
    pub mean_qc: f64,
    pub mean_qe: f64,
    pub n_qc: usize,
    pub n_qe: usize,
}

impl QStats {
    pub fn from_values(qc: &[f64], qe: &[f64]) -> Self {
        let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
        QStats {
            mean_qc: mean(qc),
            mean_qe: mean(qe),
            n_qc: qc.len(),
            n_qe: qe.len(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShsAgent {
    pub config: ShsConfig,
    pub q: ShsQTable,
    pub episodes: u32,
}

impl ShsAgent {
    pub fn new(config: ShsConfig) -> Self {
        ShsAgent {
            config,
            q: ShsQTable::new(),
            episodes: 0,
        }
    }

    fn epsilon(&self, mode: Mode) -> f64 {
        if mode.shs_learns() {
            self.config.learner.epsilon(self.episodes)
        } else {
            self.config.learner.epsilon_end
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HumanTick {
    pub activity: Option<u8>,
    pub progress: u8,
    pub action: Option<PrimKind>,
    pub reward: f64,
    pub pmv: f64,
    pub q_c: f64,
    pub q_e: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShsTick {
    pub observation: ShsObservation,
    pub action: ShsAction,
    /// Credit received this tick for the previous action.
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub tick: u32,
    pub humans: Vec<HumanTick>,
    pub temp: f64,
    pub rh: f64,
    pub temp_setpoint: f64,
    pub rh_setpoint: f64,
    pub shs: Option<ShsTick>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HumanSummary {
    pub total_reward: f64,
    pub th_changes: u32,
    pub switches: u32,
    pub activities_completed: u32,
    pub completed: bool,
    pub active_ticks: u32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeLog {
    pub ticks: Vec<TickRecord>,
    pub humans: Vec<HumanSummary>,
    pub shs_reward: f64,
    pub length: u32,
    /// Ticks where two humans were both inside an activity.
    pub both_active_ticks: u32,
    /// Of those, ticks where the second human's activity was the one with
    /// the metabolic rate closest to the first human's current one.
    pub matched_ticks: u32,
}

fn closest_activity(met: &[f64; 3], target: f64) -> usize {
    let mut best = 0;
    for a in 1..met.len() {
        if (met[a] - target).abs() < (met[best] - target).abs() {
            best = a;
        }
    }
    best
}

/// Initial zone state: a uniformly drawn grid point at rest.
pub fn random_ambient<R: Rng + ?Sized>(grid: &ThermalGrid, rng: &mut R) -> AmbientState {
    let t = rng.gen_range(0..grid.n_temp());
    let h = rng.gen_range(0..grid.n_rh());
    AmbientState::at_grid_point(grid, t, h)
}

/// Runs one episode. In evaluation mode exploration is pinned to each
/// agent's final rate and no table is touched.
pub fn run_episode<R: Rng>(
    scenario: &Scenario,
    humans: &mut [HumanAgent],
    mut shs: Option<&mut ShsAgent>,
    mode: Mode,
    init: AmbientState,
    rng: &mut R,
    record: bool,
) -> Result<EpisodeLog> {
    let grid = &scenario.grid;
    let n = humans.len();
    let eps_h: Vec<f64> = humans.iter().map(|h| h.epsilon(mode)).collect();
    let eps_s = shs.as_ref().map_or(0.0, |s| s.epsilon(mode));
    let mut ambient = init;
    let mut states: Vec<HumanState> = (0..n).map(|_| HumanState::new(&ambient)).collect();
    let mut execs: Vec<Executor<HumanState>> = (0..n).map(|_| Executor::new()).collect();
    let mut log = EpisodeLog {
        humans: vec![HumanSummary::default(); n],
        ..Default::default()
    };
    let mut prev_shs: Option<(ShsObservation, ShsAction)> = None;

    let mut t = 0;
    while t < scenario.max_ticks && !execs.iter().all(|e| e.is_finished()) {
        let mut th_changes = 0;
        let mut human_ticks = Vec::with_capacity(if record { n } else { 0 });
        for i in 0..n {
            let agent = &humans[i];
            let model = &agent.model;
            let state = &mut states[i];
            let mut rec = HumanTick {
                activity: None,
                progress: 0,
                action: None,
                reward: 0.0,
                pmv: 0.0,
                q_c: 0.0,
                q_e: 0.0,
            };
            let choice = if execs[i].is_finished() {
                None
            } else {
                state.observe(&ambient);
                execs[i].next_primitive(model, &agent.q, state, eps_h[i], rng)?
            };
            if let Some(prim) = choice {
                let kind = HumanModel::primitive_kind(prim).expect("executor returns primitives");
                let activity = HumanModel::activity_of(prim).expect("primitive inside an activity");
                let node = HumanModel::activity_node(activity);
                if record {
                    rec.q_c = agent.q.completion(node, &model.key(Table::Completion, node, state), prim);
                    rec.q_e = agent.q.exit(node, &model.key(Table::Exit, node, state), prim);
                    rec.progress = state.progress[activity];
                }
                let step = model.step(state, prim, &ambient)?;
                execs[i].record_reward(step.reward);
                if let Some(th) = step.th {
                    ambient = apply_th_action(ambient, th, grid);
                    th_changes += 1;
                }
                let summary = &mut log.humans[i];
                summary.total_reward += step.reward;
                summary.active_ticks += 1;
                summary.th_changes += u32::from(step.th.is_some());
                summary.switches += u32::from(step.left);
                summary.activities_completed += u32::from(step.finished_activity);
                if state.all_done() {
                    summary.completed = true;
                    execs[i].observe(model, state);
                }
                rec.activity = Some(activity as u8);
                rec.action = Some(kind);
                rec.reward = step.reward;
                rec.pmv = step.pmv;
            }
            if record {
                human_ticks.push(rec);
            }
        }
        if n == 2 {
            if let (Some(a), Some(b)) = (states[0].current, states[1].current) {
                log.both_active_ticks += 1;
                let target = humans[0].model.spec.met[a as usize];
                if closest_activity(&humans[1].model.spec.met, target) == b as usize {
                    log.matched_ticks += 1;
                }
            }
        }

        ambient = tick(ambient, grid);

        let mut shs_tick = None;
        if let Some(agent) = shs.as_deref_mut() {
            let currents: Vec<Option<u8>> = states.iter().map(|s| s.current).collect();
            let obs = ShsObservation::new(&ambient, &currents);
            let reward = shs_reward(th_changes, agent.config.penalty);
            if let Some((po, pa)) = prev_shs {
                if mode.shs_learns() {
                    agent.q.learn(po, pa, reward, Some(&obs), &agent.config.learner)?;
                }
                log.shs_reward += reward;
            }
            let action = agent.q.act(&obs, eps_s, rng);
            ambient = action.apply(ambient, grid);
            prev_shs = Some((obs, action));
            shs_tick = Some(ShsTick {
                observation: obs,
                action,
                reward,
            });
        }

        ambient = tick(ambient, grid);
        if record {
            log.ticks.push(TickRecord {
                tick: t,
                humans: human_ticks,
                temp: ambient.temp,
                rh: ambient.rh,
                temp_setpoint: ambient.temp_setpoint,
                rh_setpoint: ambient.rh_setpoint,
                shs: shs_tick,
            });
        }
        t += 1;
    }
    log.length = t;

    for (i, exec) in execs.iter_mut().enumerate() {
        if !exec.is_finished() {
            states[i].observe(&ambient);
            exec.observe(&humans[i].model, &states[i]);
        }
    }
    if mode.humans_learn() {
        for (agent, exec) in humans.iter_mut().zip(&mut execs) {
            let traj = exec.take_trajectory();
            update_from_trajectory(&agent.model, &mut agent.q, &traj, &agent.model.spec.learner);
            agent.episodes += 1;
        }
    }
    if mode.shs_learns() {
        if let Some(agent) = shs {
            if let Some((po, pa)) = prev_shs {
                let l = &agent.config.learner;
                let done = states.iter().all(|s| s.all_done());
                let currents: Vec<Option<u8>> = states.iter().map(|s| s.current).collect();
                let obs = ShsObservation::new(&ambient, &currents);
                agent.q.learn(po, pa, 0.0, (!done).then_some(&obs), l)?;
            }
            agent.episodes += 1;
        }
    }
    Ok(log)
}

/// Streams of the per-repetition random generators.
#[derive(Debug, Clone, Copy)]
enum Stream {
    Phase1 = 0,
    Phase1Init = 1,
    Phase2 = 2,
    Phase2Init = 3,
    Eval = 4,
    EvalInit = 5,
}

fn rng_for(seed: u64, rep: u32, home: usize, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((rep as u64) << 16) | ((home as u64) << 8) | stream as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Keep per-tick records of evaluation episodes.
    pub record_ticks: bool,
    /// Keep sorted-text snapshots of every table after each phase.
    pub keep_snapshots: bool,
}

/// Evaluation output of one home under one condition.
#[derive(Debug, Clone)]
pub struct ConditionResult {
    pub condition: Condition,
    /// Scenario indices of the humans in this home.
    pub humans: Vec<usize>,
    pub episodes: Vec<EpisodeLog>,
    pub q_stats: Vec<[QStats; N_ACTIVITIES]>,
    pub human_snapshots: Vec<String>,
    pub shs_snapshot: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RepetitionResult {
    pub rep: u32,
    pub results: Vec<ConditionResult>,
}

fn evaluate(
    scenario: &Scenario,
    home: usize,
    rep: u32,
    humans: &mut [HumanAgent],
    mut shs: Option<&mut ShsAgent>,
    opts: RunOptions,
) -> Result<Vec<EpisodeLog>> {
    let mut rng = rng_for(scenario.seed, rep, home, Stream::Eval);
    let mut init_rng = rng_for(scenario.seed, rep, home, Stream::EvalInit);
    (0..scenario.eval_episodes)
        .map(|_| {
            let init = random_ambient(&scenario.grid, &mut init_rng);
            run_episode(scenario, humans, shs.as_deref_mut(), Mode::Evaluation, init, &mut rng, opts.record_ticks)
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn train(
    scenario: &Scenario,
    mode: Mode,
    episodes: u32,
    rng: &mut ChaCha8Rng,
    init_rng: &mut ChaCha8Rng,
    humans: &mut [HumanAgent],
    mut shs: Option<&mut ShsAgent>,
) -> Result<()> {
    for _ in 0..episodes {
        let init = random_ambient(&scenario.grid, init_rng);
        run_episode(scenario, humans, shs.as_deref_mut(), mode, init, rng, false)?;
    }
    Ok(())
}

fn condition_result(
    condition: Condition,
    members: &[usize],
    humans: &[HumanAgent],
    shs: Option<&ShsAgent>,
    episodes: Vec<EpisodeLog>,
    opts: RunOptions,
) -> ConditionResult {
    ConditionResult {
        condition,
        humans: members.to_vec(),
        episodes,
        q_stats: humans.iter().map(HumanAgent::q_stats).collect(),
        human_snapshots: if opts.keep_snapshots { humans.iter().map(|h| h.q.snapshot()).collect() } else { Vec::new() },
        shs_snapshot: shs.filter(|_| opts.keep_snapshots).map(|s| s.q.snapshot()),
    }
}

/// Full protocol for one home in one repetition: humans train alone,
/// are evaluated, then (optionally) train further alongside a fresh smart
/// home and are evaluated again.
pub fn run_home(scenario: &Scenario, rep: u32, home: usize, members: &[usize], opts: RunOptions) -> Result<Vec<ConditionResult>> {
    let mut humans = members
        .iter()
        .map(|&i| HumanAgent::new(scenario.humans[i].clone(), scenario.curves.clone(), &scenario.comfort))
        .collect::<Result<Vec<_>>>()?;

    let mut rng = rng_for(scenario.seed, rep, home, Stream::Phase1);
    let mut init_rng = rng_for(scenario.seed, rep, home, Stream::Phase1Init);
    train(scenario, Mode::Learning, scenario.phase1_episodes, &mut rng, &mut init_rng, &mut humans, None)?;

    let logs = evaluate(scenario, home, rep, &mut humans, None, opts)?;
    let mut out = vec![condition_result(Condition::WithoutShs, members, &humans, None, logs, opts)];

    if scenario.shs_enabled {
        let mut shs = ShsAgent::new(scenario.shs.clone());
        let mut rng = rng_for(scenario.seed, rep, home, Stream::Phase2);
        let mut init_rng = rng_for(scenario.seed, rep, home, Stream::Phase2Init);
        let mode = if scenario.humans_learn_in_phase2 { Mode::Learning } else { Mode::ShsLearning };
        train(scenario, mode, scenario.phase2_episodes, &mut rng, &mut init_rng, &mut humans, Some(&mut shs))?;
        let logs = evaluate(scenario, home, rep, &mut humans, Some(&mut shs), opts)?;
        out.push(condition_result(Condition::WithShs, members, &humans, Some(&shs), logs, opts));
    }
    Ok(out)
}

pub fn run_repetition(scenario: &Scenario, rep: u32, opts: RunOptions) -> Result<RepetitionResult> {
    let mut results = Vec::new();
    for (home, members) in scenario.homes().iter().enumerate() {
        results.extend(run_home(scenario, rep, home, members, opts)?);
    }
    Ok(RepetitionResult { rep, results })
}

/// Runs every repetition, in parallel on the current rayon pool. Results
/// are ordered by repetition regardless of scheduling.
pub fn run_scenario(scenario: &Scenario, opts: RunOptions) -> Result<Vec<RepetitionResult>> {
    scenario.validate()?;
    (0..scenario.repetitions)
        .into_par_iter()
        .map(|rep| run_repetition(scenario, rep, opts))
        .collect()
}
