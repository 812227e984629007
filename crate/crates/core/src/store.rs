//! Run directories: scenario configs, the manifest, CSV logs and table
//! snapshots, and recomputation of metrics from what was written.
//!
//! Layout of a run directory:
//!
//! ```text
//! manifest.toml             resolved scenario, seeds, artifact list, timing
//! episodes.csv              one row per human and evaluation episode
//! q_stats.csv               table diagnostics per human, activity, condition
//! metrics.csv               aggregated metrics
//! episode_logs/rep007_with_shs.csv   per-tick trace of evaluation episodes
//! qtables/rep007_with_shs_h0_H_C.txt sorted table snapshots
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{compute_metrics, flatten, EpisodeRow, MetricsRow, QStatsRow};
use crate::sim::{run_repetition, Condition, RepetitionResult, RunOptions, Scenario};

pub const MANIFEST: &str = "manifest.toml";
pub const EPISODES_CSV: &str = "episodes.csv";
pub const QSTATS_CSV: &str = "q_stats.csv";
pub const METRICS_CSV: &str = "metrics.csv";
pub const LOG_DIR: &str = "episode_logs";
pub const TABLE_DIR: &str = "qtables";

pub fn scenario_from_toml(text: &str) -> Result<Scenario> {
    let s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    s.validate()?;
    Ok(s)
}

pub fn scenario_to_toml(s: &Scenario) -> Result<String> {
    toml::to_string(s).map_err(|e| Error::Config(e.to_string()))
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    scenario_from_toml(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub scenario_name: String,
    pub seed: u64,
    /// Repetition indices; each owns the generator streams derived from
    /// `(seed, rep, home)`.
    pub repetitions: Vec<u32>,
    pub started_unix: u64,
    pub wall_clock_secs: f64,
    /// Every file written, relative to the run directory.
    pub artifacts: Vec<String>,
    pub scenario: Scenario,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        toml::from_str(&text).map_err(|e| Error::Corrupt {
            line: e.span().map_or(0, |s| text[..s.start].lines().count().max(1)),
            path,
            detail: e.message().to_string(),
        })
    }
}

/// One human in one tick of an evaluation episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRow {
    pub rep: u32,
    pub condition: Condition,
    pub episode: u32,
    pub tick: u32,
    pub human: usize,
    pub model: String,
    pub activity: Option<u8>,
    pub progress: u8,
    pub action: Option<String>,
    pub reward: f64,
    pub pmv: f64,
    pub q_c: f64,
    pub q_e: f64,
    pub temp: f64,
    pub rh: f64,
    pub temp_setpoint: f64,
    pub rh_setpoint: f64,
    pub shs_observation: Option<String>,
    pub shs_action: Option<String>,
    pub shs_reward: Option<f64>,
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::File::create(path)
        .and_then(|mut f| f.write_all(bytes))
        .map_err(|e| Error::io(path, e))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let csv_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::domain("csv", format!("{other:?}")),
    };
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file);
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a headed CSV file; malformed records are reported with their line.
pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::io(path, io),
                kind => Error::Corrupt {
                    path: path.to_path_buf(),
                    line,
                    detail: match kind {
                        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                        other => format!("{other:?}"),
                    },
                },
            }
        })?);
    }
    Ok(out)
}

fn tick_rows(scenario: &Scenario, rep: &RepetitionResult) -> Vec<(String, Vec<TickRow>)> {
    let mut files: Vec<(String, Vec<TickRow>)> = Vec::new();
    for res in &rep.results {
        let name = format!("{LOG_DIR}/rep{:03}_{}.csv", rep.rep, res.condition.name());
        let mut rows = match files.iter().position(|(n, _)| *n == name) {
            Some(i) => files.remove(i).1,
            None => Vec::new(),
        };
        for (e, log) in res.episodes.iter().enumerate() {
            for t in &log.ticks {
                for (slot, h) in t.humans.iter().enumerate() {
                    let human = res.humans[slot];
                    rows.push(TickRow {
                        rep: rep.rep,
                        condition: res.condition,
                        episode: e as u32,
                        tick: t.tick,
                        human,
                        model: scenario.humans[human].name.clone(),
                        activity: h.activity,
                        progress: h.progress,
                        action: h.action.map(|a| a.name().to_string()),
                        reward: h.reward,
                        pmv: h.pmv,
                        q_c: h.q_c,
                        q_e: h.q_e,
                        temp: t.temp,
                        rh: t.rh,
                        temp_setpoint: t.temp_setpoint,
                        rh_setpoint: t.rh_setpoint,
                        shs_observation: t.shs.as_ref().map(|s| s.observation.to_string()),
                        shs_action: t.shs.as_ref().map(|s| s.action.name().to_string()),
                        shs_reward: t.shs.as_ref().map(|s| s.reward),
                    });
                }
            }
        }
        files.push((name, rows));
    }
    files
}

/// Writes the per-tick logs and table snapshots of one repetition and
/// returns their relative paths.
fn write_repetition(dir: &Path, scenario: &Scenario, rep: &RepetitionResult) -> Result<Vec<String>> {
    let mut written = Vec::new();
    for (name, rows) in tick_rows(scenario, rep) {
        write_csv(&dir.join(&name), &rows)?;
        written.push(name);
    }
    for res in &rep.results {
        let stem = format!("{TABLE_DIR}/rep{:03}_{}", rep.rep, res.condition.name());
        for (slot, snap) in res.human_snapshots.iter().enumerate() {
            let h = res.humans[slot];
            let name = format!("{stem}_h{h}_{}.txt", scenario.humans[h].name);
            write_file(&dir.join(&name), snap.as_bytes())?;
            written.push(name);
        }
        if let Some(snap) = &res.shs_snapshot {
            let home = res.humans[0];
            let name = format!("{stem}_shs_home{home}.txt");
            write_file(&dir.join(&name), snap.as_bytes())?;
            written.push(name);
        }
    }
    Ok(written)
}

/// Runs `scenario` and persists everything under `dir`. Repetitions run in
/// parallel on the current rayon pool, each writing its own files as soon
/// as it finishes; per-tick records are dropped after they are written.
pub fn run_to_dir(scenario: &Scenario, dir: &Path) -> Result<(Manifest, Vec<MetricsRow>)> {
    scenario.validate()?;
    let started = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    for sub in [dir.to_path_buf(), dir.join(LOG_DIR), dir.join(TABLE_DIR)] {
        create_dir(&sub)?;
    }
    let opts = RunOptions {
        record_ticks: true,
        keep_snapshots: true,
    };
    let reps: Vec<(RepetitionResult, Vec<String>)> = (0..scenario.repetitions)
        .into_par_iter()
        .map(|r| {
            let mut rep = run_repetition(scenario, r, opts)?;
            let files = write_repetition(dir, scenario, &rep)?;
            for res in &mut rep.results {
                res.human_snapshots.clear();
                res.shs_snapshot = None;
                for log in &mut res.episodes {
                    log.ticks = Vec::new();
                }
            }
            Ok((rep, files))
        })
        .collect::<Result<_>>()?;

    let mut artifacts = vec![
        MANIFEST.to_string(),
        EPISODES_CSV.to_string(),
        QSTATS_CSV.to_string(),
        METRICS_CSV.to_string(),
    ];
    let mut results = Vec::with_capacity(reps.len());
    for (rep, files) in reps {
        artifacts.extend(files);
        results.push(rep);
    }
    let (episodes, qstats) = flatten(scenario, &results);
    let metrics = compute_metrics(scenario, &episodes, &qstats)?;
    write_csv(&dir.join(EPISODES_CSV), &episodes)?;
    write_csv(&dir.join(QSTATS_CSV), &qstats)?;
    write_csv(&dir.join(METRICS_CSV), &metrics)?;

    let manifest = Manifest {
        tool: format!("cohabitat {}", env!("CARGO_PKG_VERSION")),
        scenario_name: scenario.name.clone(),
        seed: scenario.seed,
        repetitions: (0..scenario.repetitions).collect(),
        started_unix,
        wall_clock_secs: started.elapsed().as_secs_f64(),
        artifacts,
        scenario: scenario.clone(),
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    write_file(&dir.join(MANIFEST), text.as_bytes())?;
    Ok((manifest, metrics))
}

/// Recomputes the metrics of a run directory from its persisted records.
pub fn recompute(dir: &Path) -> Result<(Manifest, Vec<MetricsRow>)> {
    let manifest = Manifest::load(dir)?;
    let episodes: Vec<EpisodeRow> = read_csv(&dir.join(EPISODES_CSV))?;
    let qstats: Vec<QStatsRow> = read_csv(&dir.join(QSTATS_CSV))?;
    let metrics = compute_metrics(&manifest.scenario, &episodes, &qstats)?;
    Ok((manifest, metrics))
}

pub fn load_metrics(dir: &Path) -> Result<Vec<MetricsRow>> {
    read_csv(&dir.join(METRICS_CSV))
}

/// Metrics laid out like the published tables: one line per model and
/// condition.
pub fn render_metrics(rows: &[MetricsRow]) -> String {
    let mut out = String::new();
    let header = [
        "model", "condition", "reps", "MTS", "MR", "MR std", "switches", "completion", "Qc rest", "Qc leis",
        "Qc work", "Qe rest", "Qe leis", "Qe work", "pairing",
    ];
    let mut lines: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for r in rows {
        let mut l = vec![
            r.model.clone(),
            r.condition.name().to_string(),
            r.reps.to_string(),
            format!("{:.2}", r.mts_median),
            format!("{:.2}", r.mr_median),
            format!("{:.2}", r.mr_std_median),
            format!("{:.2}", r.switches_median),
            format!("{:.3}", r.completion_median),
        ];
        l.extend(r.qc().iter().chain(r.qe().iter()).map(|v| format!("{v:.4}")));
        l.push(r.pairing.map_or("-".into(), |p| format!("{p:.3}")));
        lines.push(l);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0))
        .collect();
    for l in lines {
        let cells: Vec<String> = l
            .iter()
            .enumerate()
            .map(|(c, s)| if c < 2 { format!("{s:<w$}", w = widths[c]) } else { format!("{s:>w$}", w = widths[c]) })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}
