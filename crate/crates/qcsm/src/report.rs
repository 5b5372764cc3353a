//! Artifact writers. Every numeric field is written in Rust's shortest
//! round-trip float form, so identical runs produce identical bytes.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use qcsm_core::engine::{Action, NetworkState, QTable};
use qcsm_core::ServiceId;
use serde::Serialize;
use serde_json::{json, Value};

use crate::harness::{ExperimentResult, MetricsRecord, RewardTrace};
use crate::stats::window_means;

pub const RESULTS_HEADER: [&str; 10] = [
    "experiment",
    "method",
    "services",
    "n_sensors",
    "metric",
    "value",
    "ci_low",
    "ci_high",
    "unit",
    "seed_count",
];

fn csv_error(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => io::Error::other(format!("{other:?}")),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_results_csv(path: &Path, rows: &[MetricsRecord]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(RESULTS_HEADER).map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.experiment.clone(),
            r.method.clone(),
            r.services.to_string(),
            r.n_sensors.to_string(),
            r.metric.clone(),
            r.value.to_string(),
            opt(r.ci_low),
            opt(r.ci_high),
            r.unit.clone(),
            r.seed_count.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()
}

/// Per-episode trace of one training run.
pub fn write_reward_trace(path: &Path, trace: &RewardTrace) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(["episode", "cumulative_reward", "epsilon", "lr", "seed"]).map_err(csv_error)?;
    for (i, (c, e)) in trace.cumulative.iter().zip(&trace.epsilons).enumerate() {
        w.write_record([i.to_string(), c.to_string(), e.to_string(), trace.lr.to_string(), trace.seed.to_string()])
            .map_err(csv_error)?;
    }
    w.flush()
}

/// One row per learning rate, seed and aggregation window.
pub fn write_reward_windows(path: &Path, traces: &[RewardTrace], window: usize) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(["lr", "seed", "window", "last_episode", "cumulative_reward", "window_mean_reward"])
        .map_err(csv_error)?;
    for t in traces {
        for (i, mean) in window_means(&t.episode_rewards, window).into_iter().enumerate() {
            let last = ((i + 1) * window).min(t.cumulative.len()) - 1;
            w.write_record([
                t.lr.to_string(),
                t.seed.to_string(),
                i.to_string(),
                last.to_string(),
                t.cumulative[last].to_string(),
                mean.to_string(),
            ])
            .map_err(csv_error)?;
        }
    }
    w.flush()
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> io::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(io::Error::other)?;
    bytes.push(b'\n');
    fs::write(path, bytes)
}

/// Means, intervals and QCSM-versus-baseline gaps of one experiment.
pub fn summary_json(result: &ExperimentResult) -> Value {
    json!({
        "experiment": result.experiment,
        "config_hash": result.config_hash,
        "seeds": result.seeds,
        "rows": result.rows,
        "gaps": result.gaps,
    })
}

pub fn qtable_json(
    q: &QTable,
    services: &[ServiceId],
    config_hash: &str,
    lr: f64,
    gamma: f64,
    episodes: u64,
    seed: u64,
) -> Value {
    let k = services.len();
    let states: Vec<String> = (0..q.states()).map(|s| NetworkState::from_index(s, k).label(services)).collect();
    let actions: Vec<String> = (0..q.actions()).map(|a| Action::from_index(a, k).label(services)).collect();
    let values: Vec<&[f64]> = (0..q.states()).map(|s| q.row(s)).collect();
    let visits: Vec<Vec<u64>> = (0..q.states())
        .map(|s| (0..q.actions()).map(|a| q.visits(s, a)).collect())
        .collect();
    json!({
        "config_hash": config_hash,
        "lr": lr,
        "gamma": gamma,
        "episodes": episodes,
        "seed": seed,
        "states": states,
        "actions": actions,
        "values": values,
        "visits": visits,
    })
}

/// Written once at the end of every invocation, successful or not.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub config_hash: String,
    pub config_source: Option<String>,
    pub seeds: Vec<u64>,
    pub artifacts: Vec<PathBuf>,
    pub tool_version: String,
    pub wall_clock_seconds: f64,
    pub complete: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let row = MetricsRecord {
            experiment: "response".into(),
            method: "QCSM".into(),
            services: 2,
            n_sensors: 10,
            metric: "response_time".into(),
            value: 1.25,
            ci_low: None,
            ci_high: None,
            unit: "ms".into(),
            seed_count: 1,
        };
        write_results_csv(&path, &[row]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "experiment,method,services,n_sensors,metric,value,ci_low,ci_high,unit,seed_count\n\
             response,QCSM,2,10,response_time,1.25,,,ms,1\n"
        );
    }

    #[test]
    fn trace_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let t = RewardTrace {
            lr: 0.07,
            seed: 3,
            cumulative: vec![1.0, 0.5],
            episode_rewards: vec![1.0, -0.5],
            epsilons: vec![1.0, 0.05],
        };
        write_reward_trace(&path, &t).unwrap();
        assert_eq!(
            fs::read_to_string(&path).unwrap(),
            "episode,cumulative_reward,epsilon,lr,seed\n0,1,1,0.07,3\n1,0.5,0.05,0.07,3\n"
        );
        write_reward_windows(&path, &[t], 1).unwrap();
        assert_eq!(
            fs::read_to_string(&path).unwrap(),
            "lr,seed,window,last_episode,cumulative_reward,window_mean_reward\n0.07,3,0,0,1,1\n0.07,3,1,1,0.5,-0.5\n"
        );
    }
}
