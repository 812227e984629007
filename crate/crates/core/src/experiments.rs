//! The named experiments and the metrics computed from their evaluation
//! runs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::human::{profile, HumanModelSpec, N_ACTIVITIES};
use crate::sim::{Condition, HumanSummary, QStats, RepetitionResult, Scenario};

pub const SCENARIO_NAMES: [&str; 8] = ["exp1", "exp2", "exp3", "exp4", "exp5", "exp5_tight", "exp6", "exp7"];

pub fn scenario_description(name: &str) -> Option<&'static str> {
    Some(match name {
        "exp1" => "H_A alone (baseline)",
        "exp2" => "H_B alone (control)",
        "exp3" => "H_C and H_D, each alone in its own home",
        "exp4" => "H_A and H_B sharing a home",
        "exp5" => "H_A and H_C sharing a home",
        "exp5_tight" => "H_A and H_C sharing a home, both with band 0.25",
        "exp6" => "H_C and H_C' sharing a home",
        "exp7" => "H_A and H_D sharing a home",
        _ => return None,
    })
}

fn humans(names: &[&str]) -> Result<Vec<HumanModelSpec>> {
    names.iter().map(|n| profile(n)).collect()
}

/// A fully populated experiment configuration.
pub fn scenario(name: &str) -> Result<Scenario> {
    let (members, shared): (&[&str], bool) = match name {
        "exp1" => (&["H_A"], true),
        "exp2" => (&["H_B"], true),
        "exp3" => (&["H_C", "H_D"], false),
        "exp4" => (&["H_A", "H_B"], true),
        "exp5" | "exp5_tight" => (&["H_A", "H_C"], true),
        "exp6" => (&["H_C", "H_C_prime"], true),
        "exp7" => (&["H_A", "H_D"], true),
        _ => return Err(Error::UnknownScenario(name.into())),
    };
    let mut list = humans(members)?;
    if name == "exp5_tight" {
        for h in &mut list {
            h.band_halfwidth = 0.25;
        }
    }
    let mut s = Scenario::new(name, list);
    s.shared_home = shared;
    Ok(s)
}

/// Per-episode statistics for one human.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeStats {
    pub mts: f64,
    pub mr: f64,
    pub mr_std: f64,
    pub switches: f64,
    pub completion: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population standard deviation.
fn pop_std(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Mean TH changes, mean ± std of total reward, mean switches and the
/// completion rate over a set of episodes.
pub fn episode_stats(episodes: &[HumanSummary]) -> Result<EpisodeStats> {
    if episodes.is_empty() {
        return Err(Error::EmptyInput);
    }
    let th: Vec<f64> = episodes.iter().map(|e| e.th_changes as f64).collect();
    let rewards: Vec<f64> = episodes.iter().map(|e| e.total_reward).collect();
    let sw: Vec<f64> = episodes.iter().map(|e| e.switches as f64).collect();
    let done: Vec<f64> = episodes.iter().map(|e| f64::from(u8::from(e.completed))).collect();
    Ok(EpisodeStats {
        mts: mean(&th),
        mr: mean(&rewards),
        mr_std: pop_std(&rewards),
        switches: mean(&sw),
        completion: mean(&done),
    })
}

/// Flat evaluation record of one human in one episode; the unit persisted
/// to `episodes.csv` and the input of [`compute_metrics`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub rep: u32,
    pub condition: Condition,
    pub episode: u32,
    pub human: usize,
    pub model: String,
    pub total_reward: f64,
    pub th_changes: u32,
    pub switches: u32,
    pub activities_completed: u32,
    pub completed: bool,
    pub active_ticks: u32,
    pub length: u32,
    pub both_active_ticks: u32,
    pub matched_ticks: u32,
}

/// Table diagnostics of one human and activity after a phase; persisted to
/// `q_stats.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QStatsRow {
    pub rep: u32,
    pub condition: Condition,
    pub human: usize,
    pub activity: usize,
    pub mean_qc: f64,
    pub mean_qe: f64,
    pub n_qc: usize,
    pub n_qe: usize,
}

pub fn flatten(scenario: &Scenario, reps: &[RepetitionResult]) -> (Vec<EpisodeRow>, Vec<QStatsRow>) {
    let mut episodes = Vec::new();
    let mut qstats = Vec::new();
    for rep in reps {
        for res in &rep.results {
            for (e, log) in res.episodes.iter().enumerate() {
                for (slot, &h) in res.humans.iter().enumerate() {
                    let s = &log.humans[slot];
                    episodes.push(EpisodeRow {
                        rep: rep.rep,
                        condition: res.condition,
                        episode: e as u32,
                        human: h,
                        model: scenario.humans[h].name.clone(),
                        total_reward: s.total_reward,
                        th_changes: s.th_changes,
                        switches: s.switches,
                        activities_completed: s.activities_completed,
                        completed: s.completed,
                        active_ticks: s.active_ticks,
                        length: log.length,
                        both_active_ticks: log.both_active_ticks,
                        matched_ticks: log.matched_ticks,
                    });
                }
            }
            for (slot, &h) in res.humans.iter().enumerate() {
                for (a, q) in res.q_stats[slot].iter().enumerate() {
                    qstats.push(QStatsRow {
                        rep: rep.rep,
                        condition: res.condition,
                        human: h,
                        activity: a,
                        mean_qc: q.mean_qc,
                        mean_qe: q.mean_qe,
                        n_qc: q.n_qc,
                        n_qe: q.n_qe,
                    });
                }
            }
        }
    }
    (episodes, qstats)
}

/// Aggregate metrics of one human (or of all humans of a shared home,
/// `human = None`) under one condition. Medians and means are taken over
/// per-repetition statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub scenario: String,
    pub human: Option<usize>,
    pub model: String,
    pub condition: Condition,
    pub reps: usize,
    pub mts_median: f64,
    pub mts_mean: f64,
    pub mr_median: f64,
    pub mr_mean: f64,
    pub mr_std_median: f64,
    pub switches_median: f64,
    pub switches_mean: f64,
    pub completion_median: f64,
    pub completion_mean: f64,
    pub qc_rest: f64,
    pub qc_leisure: f64,
    pub qc_workout: f64,
    pub qe_rest: f64,
    pub qe_leisure: f64,
    pub qe_workout: f64,
    pub pairing: Option<f64>,
}

impl MetricsRow {
    pub fn qc(&self) -> [f64; N_ACTIVITIES] {
        [self.qc_rest, self.qc_leisure, self.qc_workout]
    }

    pub fn qe(&self) -> [f64; N_ACTIVITIES] {
        [self.qe_rest, self.qe_leisure, self.qe_workout]
    }
}

/// Per-repetition statistics behind a [`MetricsRow`].
#[derive(Debug, Clone, PartialEq)]
pub struct RepStats {
    pub rep: u32,
    pub stats: EpisodeStats,
    pub q: [QStats; N_ACTIVITIES],
    pub pairing: Option<f64>,
}

fn group_reps<'a>(rows: &[&'a EpisodeRow]) -> Vec<(u32, Vec<&'a EpisodeRow>)> {
    let mut reps: Vec<u32> = rows.iter().map(|r| r.rep).collect();
    reps.sort_unstable();
    reps.dedup();
    reps.into_iter()
        .map(|rep| (rep, rows.iter().copied().filter(|r| r.rep == rep).collect()))
        .collect()
}

fn summary(r: &EpisodeRow) -> HumanSummary {
    HumanSummary {
        total_reward: r.total_reward,
        th_changes: r.th_changes,
        switches: r.switches,
        activities_completed: r.activities_completed,
        completed: r.completed,
        active_ticks: r.active_ticks,
    }
}

fn pairing_fraction(rows: &[&EpisodeRow]) -> Option<f64> {
    let both: u32 = rows.iter().map(|r| r.both_active_ticks).sum();
    let matched: u32 = rows.iter().map(|r| r.matched_ticks).sum();
    (both > 0).then(|| matched as f64 / both as f64)
}

/// Per-repetition statistics of `human` under `condition`.
pub fn rep_stats(
    episodes: &[EpisodeRow],
    qstats: &[QStatsRow],
    human: usize,
    condition: Condition,
    shared_pair: bool,
) -> Result<Vec<RepStats>> {
    let rows: Vec<&EpisodeRow> =
        episodes.iter().filter(|r| r.human == human && r.condition == condition).collect();
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    group_reps(&rows)
        .into_iter()
        .map(|(rep, rs)| {
            let sums: Vec<HumanSummary> = rs.iter().map(|r| summary(r)).collect();
            let mut q = [QStats::default(); N_ACTIVITIES];
            for row in qstats {
                if row.rep == rep && row.human == human && row.condition == condition && row.activity < N_ACTIVITIES {
                    q[row.activity] = QStats {
                        mean_qc: row.mean_qc,
                        mean_qe: row.mean_qe,
                        n_qc: row.n_qc,
                        n_qe: row.n_qe,
                    };
                }
            }
            Ok(RepStats {
                rep,
                stats: episode_stats(&sums)?,
                q,
                pairing: if shared_pair { pairing_fraction(&rs) } else { None },
            })
        })
        .collect()
}

fn aggregate(scenario: &str, human: Option<usize>, model: String, condition: Condition, reps: &[RepStats]) -> MetricsRow {
    let col = |f: &dyn Fn(&RepStats) -> f64| reps.iter().map(f).collect::<Vec<f64>>();
    let mts = col(&|r| r.stats.mts);
    let mr = col(&|r| r.stats.mr);
    let sw = col(&|r| r.stats.switches);
    let comp = col(&|r| r.stats.completion);
    let qc: Vec<f64> = (0..N_ACTIVITIES).map(|a| median(&col(&|r| r.q[a].mean_qc))).collect();
    let qe: Vec<f64> = (0..N_ACTIVITIES).map(|a| median(&col(&|r| r.q[a].mean_qe))).collect();
    let pairing: Vec<f64> = reps.iter().filter_map(|r| r.pairing).collect();
    MetricsRow {
        scenario: scenario.into(),
        human,
        model,
        condition,
        reps: reps.len(),
        mts_median: median(&mts),
        mts_mean: mean(&mts),
        mr_median: median(&mr),
        mr_mean: mean(&mr),
        mr_std_median: median(&col(&|r| r.stats.mr_std)),
        switches_median: median(&sw),
        switches_mean: mean(&sw),
        completion_median: median(&comp),
        completion_mean: mean(&comp),
        qc_rest: qc[0],
        qc_leisure: qc[1],
        qc_workout: qc[2],
        qe_rest: qe[0],
        qe_leisure: qe[1],
        qe_workout: qe[2],
        pairing: (!pairing.is_empty()).then(|| median(&pairing)),
    }
}

/// Metrics rows for every human and condition present in the records, plus
/// a combined row per condition for a shared two-human home.
pub fn compute_metrics(scenario: &Scenario, episodes: &[EpisodeRow], qstats: &[QStatsRow]) -> Result<Vec<MetricsRow>> {
    if episodes.is_empty() {
        return Err(Error::EmptyInput);
    }
    let pair = scenario.shared_home && scenario.humans.len() == 2;
    let mut out = Vec::new();
    for cond in [Condition::WithoutShs, Condition::WithShs] {
        if !episodes.iter().any(|r| r.condition == cond) {
            continue;
        }
        let mut per_human = Vec::new();
        for (h, spec) in scenario.humans.iter().enumerate() {
            let reps = rep_stats(episodes, qstats, h, cond, pair)?;
            out.push(aggregate(&scenario.name, Some(h), spec.name.clone(), cond, &reps));
            per_human.push(reps);
        }
        if pair {
            let combined: Vec<RepStats> = per_human[0]
                .iter()
                .zip(&per_human[1])
                .map(|(a, b)| RepStats {
                    rep: a.rep,
                    stats: EpisodeStats {
                        mts: a.stats.mts + b.stats.mts,
                        mr: a.stats.mr + b.stats.mr,
                        mr_std: a.stats.mr_std + b.stats.mr_std,
                        switches: a.stats.switches + b.stats.switches,
                        completion: a.stats.completion.min(b.stats.completion),
                    },
                    q: [QStats::default(); N_ACTIVITIES],
                    pairing: a.pairing,
                })
                .collect();
            let model = format!("{}+{}", scenario.humans[0].name, scenario.humans[1].name);
            out.push(aggregate(&scenario.name, None, model, cond, &combined));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(total_reward: f64, th: u32) -> HumanSummary {
        HumanSummary { total_reward, th_changes: th, ..Default::default() }
    }

    #[test]
    fn stats_substitution() {
        let st = episode_stats(&[s(100.0, 7)]).unwrap();
        assert_eq!((st.mts, st.mr, st.mr_std), (7.0, 100.0, 0.0));
        let st = episode_stats(&[s(90.0, 1), s(110.0, 3)]).unwrap();
        assert_eq!((st.mr, st.mr_std), (100.0, 10.0));
        assert!(matches!(episode_stats(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn registry() {
        let e1 = scenario("exp1").unwrap();
        assert_eq!(e1.humans.len(), 1);
        assert_eq!(e1.humans[0].met, [1.0, 1.3, 1.8]);
        assert_eq!((e1.phase1_episodes, e1.phase2_episodes, e1.repetitions), (350, 150, 50));
        let e6 = scenario("exp6").unwrap();
        assert_eq!(e6.humans[1].met, [1.75, 1.30, 1.15]);
        assert!(e6.humans.iter().all(|h| h.band_halfwidth == 0.25));
        let tight = scenario("exp5_tight").unwrap();
        assert!(tight.humans.iter().all(|h| h.band_halfwidth == 0.25));
        assert_eq!(scenario("exp5").unwrap().humans[0].band_halfwidth, 0.5);
        assert!(matches!(scenario("exp9"), Err(Error::UnknownScenario(_))));
        for n in SCENARIO_NAMES {
            assert!(scenario(n).unwrap().validate().is_ok());
            assert!(scenario_description(n).is_some());
        }
    }

    #[test]
    fn median_cases() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
