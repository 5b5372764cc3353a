//! End-to-end experiments comparing the cognitive manager against the
//! non-cognitive baseline: query response time against fleet size, battery
//! lifetime under the learned class assignment, and cumulative reward
//! against learning rate.

use qcsm_core::engine::{run_training, FleetEnvironment, NetworkState, TrainingConfig};
use qcsm_core::gateway::GatewayMode;
use qcsm_core::sim::Simulation;
use qcsm_core::{EngineError, QosClassId, ScenarioConfig, ServiceId};
use serde::Serialize;

use crate::stats::{relative_gap_percent, summarize, Summary};

pub const SENSOR_COUNTS: [u32; 4] = [10, 50, 98, 150];
pub const LEARNING_RATES: [f64; 3] = [0.7, 0.07, 0.007];
pub const DEFAULT_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
pub const DEFAULT_GAMMA: f64 = 0.99;
pub const DEFAULT_EPISODES: u64 = 10_000;

/// The 2-service pair and the full 3-service set.
pub fn service_sets() -> [Vec<ServiceId>; 2] {
    [
        vec![ServiceId::WindTurbine, ServiceId::Transportation],
        ServiceId::ALL.to_vec(),
    ]
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub experiment: String,
    pub method: String,
    pub services: usize,
    pub n_sensors: u32,
    pub metric: String,
    pub value: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub unit: String,
    pub seed_count: usize,
}

impl MetricsRecord {
    fn from_summary(
        experiment: &str,
        method: &str,
        services: usize,
        n_sensors: u32,
        metric: &str,
        unit: &str,
        s: Summary,
    ) -> Self {
        MetricsRecord {
            experiment: experiment.to_owned(),
            method: method.to_owned(),
            services,
            n_sensors,
            metric: metric.to_owned(),
            value: s.mean,
            ci_low: s.ci.map(|c| c.0),
            ci_high: s.ci.map(|c| c.1),
            unit: unit.to_owned(),
            seed_count: s.count,
        }
    }
}

/// How much better the cognitive manager did than the baseline in one cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRecord {
    pub services: usize,
    pub n_sensors: u32,
    pub metric: String,
    pub baseline: f64,
    pub qcsm: f64,
    /// Response time: how much faster. Lifetime: how much longer.
    pub gap_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RewardTrace {
    pub lr: f64,
    pub seed: u64,
    pub cumulative: Vec<f64>,
    pub episode_rewards: Vec<f64>,
    pub epsilons: Vec<f64>,
}

impl RewardTrace {
    /// Mean per-episode reward over the pure-exploration tenth of the run.
    pub fn exploration_mean(&self) -> f64 {
        let end = self.phase_len();
        self.episode_rewards[..end].iter().sum::<f64>() / end as f64
    }

    /// Mean per-episode reward over the last tenth of the run.
    pub fn converged_mean(&self) -> f64 {
        let len = self.phase_len();
        let tail = &self.episode_rewards[self.episode_rewards.len() - len..];
        tail.iter().sum::<f64>() / len as f64
    }

    pub fn terminal(&self) -> f64 {
        *self.cumulative.last().expect("traces are never empty")
    }

    fn phase_len(&self) -> usize {
        self.episode_rewards.len().div_ceil(10)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub experiment: String,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub rows: Vec<MetricsRecord>,
    pub gaps: Vec<GapRecord>,
    #[serde(skip)]
    pub traces: Vec<RewardTrace>,
}

impl ExperimentResult {
    pub fn row(&self, method: &str, services: usize, n_sensors: u32, metric: &str) -> Option<&MetricsRecord> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.services == services && r.n_sensors == n_sensors && r.metric == metric)
    }

    pub fn gap(&self, services: usize, n_sensors: u32, metric: &str) -> Option<&GapRecord> {
        self.gaps
            .iter()
            .find(|g| g.services == services && g.n_sensors == n_sensors && g.metric == metric)
    }
}

/// The non-cognitive comparator: every service pinned to the
/// delay-sensitive class and payloads stored in their wire encoding.
#[derive(Debug, Clone)]
pub struct BaselineManager {
    config: ScenarioConfig,
}

impl BaselineManager {
    pub fn new(config: &ScenarioConfig) -> Self {
        BaselineManager { config: config.clone() }
    }

    pub fn mode(&self) -> GatewayMode {
        GatewayMode::Baseline
    }

    pub fn assignment(&self) -> NetworkState {
        NetworkState::all_sensitive(self.config.services.len())
    }

    pub fn simulation(&self) -> Simulation {
        let mut sim = Simulation::new(&self.config, &[self.mode()]);
        sim.set_state(self.assignment());
        sim
    }
}

fn gaps_for(rows: &[MetricsRecord], metric: &str, lower_is_better: bool) -> Vec<GapRecord> {
    rows.iter()
        .filter(|r| r.method == "Baseline" && r.metric == metric)
        .filter_map(|b| {
            let q = rows.iter().find(|r| {
                r.method == "QCSM" && r.metric == metric && r.services == b.services && r.n_sensors == b.n_sensors
            })?;
            let gap = if lower_is_better {
                relative_gap_percent(b.value, q.value)
            } else {
                -relative_gap_percent(b.value, q.value)
            };
            Some(GapRecord {
                services: b.services,
                n_sensors: b.n_sensors,
                metric: metric.to_owned(),
                baseline: b.value,
                qcsm: q.value,
                gap_percent: gap,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseOptions {
    pub warmup_cycles: u64,
    /// Queries issued, one per cycle, each over that cycle's records.
    pub query_cycles: u64,
}

impl Default for ResponseOptions {
    fn default() -> Self {
        ResponseOptions {
            warmup_cycles: 20,
            query_cycles: 20,
        }
    }
}

/// Mean query response time of both gateways fed identical traffic from the
/// baseline-assigned fleet: `(qcsm, baseline)`.
pub fn response_times(config: &ScenarioConfig, opts: ResponseOptions) -> (f64, f64) {
    let mut sim = Simulation::new(config, &[GatewayMode::Qcsm, GatewayMode::Baseline]);
    sim.set_state(BaselineManager::new(config).assignment());
    sim.run(opts.warmup_cycles);
    let mut totals = [0.0; 2];
    for _ in 0..opts.query_cycles {
        sim.step();
        let cycle = sim.cycle() - 1;
        for (total, gw) in totals.iter_mut().zip(sim.gateways()) {
            let answer = gw.query(None, cycle..cycle + 1).expect("the pool holds only decodable records");
            *total += answer.response_time_ms;
        }
    }
    let queries = opts.query_cycles.max(1) as f64;
    (totals[0] / queries, totals[1] / queries)
}

pub fn run_response_time_experiment(
    base: &ScenarioConfig,
    config_hash: &str,
    seeds: &[u64],
    opts: ResponseOptions,
) -> ExperimentResult {
    let mut rows = Vec::new();
    for services in service_sets() {
        for n in SENSOR_COUNTS {
            let mut qcsm = Vec::new();
            let mut baseline = Vec::new();
            for &seed in seeds {
                let cfg = base.with_services(&services).with_sensors(n).with_seed(seed);
                let (q, b) = response_times(&cfg, opts);
                qcsm.push(q);
                baseline.push(b);
            }
            for (method, values) in [("QCSM", &qcsm), ("Baseline", &baseline)] {
                rows.push(MetricsRecord::from_summary(
                    "response",
                    method,
                    services.len(),
                    n,
                    "response_time",
                    "ms",
                    summarize(values),
                ));
            }
        }
    }
    ExperimentResult {
        experiment: "response".into(),
        config_hash: config_hash.into(),
        seeds: seeds.to_vec(),
        gaps: gaps_for(&rows, "response_time", true),
        rows,
        traces: Vec::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifetimeOptions {
    pub n_sensors: u32,
    pub cycles: u64,
    pub training_episodes: u64,
    pub lr: f64,
    pub gamma: f64,
}

impl LifetimeOptions {
    pub fn for_config(config: &ScenarioConfig) -> Self {
        LifetimeOptions {
            n_sensors: 50,
            cycles: config.sim_cycles,
            training_episodes: 50_000,
            lr: 0.07,
            gamma: DEFAULT_GAMMA,
        }
    }
}

struct LifetimeSample {
    overall: f64,
    per_class: [Option<f64>; 2],
}

fn lifetime_sample(sim: &Simulation) -> LifetimeSample {
    let nodes = sim.fleet().nodes();
    LifetimeSample {
        overall: nodes.iter().map(|n| n.lifetime_fraction).sum::<f64>() / nodes.len() as f64,
        per_class: QosClassId::ALL.map(|c| sim.mean_lifetime_fraction(c)),
    }
}

/// Battery left after the run, averaged over all nodes and over the nodes of
/// each KPI-required class, normalized by the ten-year maximum.
pub fn run_lifetime_experiment(
    base: &ScenarioConfig,
    config_hash: &str,
    seeds: &[u64],
    opts: LifetimeOptions,
) -> Result<ExperimentResult, EngineError> {
    let mut rows = Vec::new();
    for services in service_sets() {
        let mut samples: [Vec<LifetimeSample>; 2] = [Vec::new(), Vec::new()];
        for &seed in seeds {
            let cfg = base.with_services(&services).with_sensors(opts.n_sensors).with_seed(seed);
            let mut baseline = BaselineManager::new(&cfg).simulation();
            baseline.run(opts.cycles);
            let trained = run_training(
                &mut FleetEnvironment::new(&cfg),
                &TrainingConfig::new(opts.training_episodes, opts.lr, opts.gamma, seed),
            )?;
            let mut qcsm = Simulation::new(&cfg, &[GatewayMode::Qcsm]);
            qcsm.run_with_policy(&trained.candidate, opts.cycles)?;
            samples[0].push(lifetime_sample(&qcsm));
            samples[1].push(lifetime_sample(&baseline));
        }
        for (method, values) in ["QCSM", "Baseline"].into_iter().zip(&samples) {
            let overall: Vec<f64> = values.iter().map(|s| s.overall).collect();
            let row = |metric: &str, unit: &str, v: &[f64]| {
                MetricsRecord::from_summary("lifetime", method, services.len(), opts.n_sensors, metric, unit, summarize(v))
            };
            rows.push(row("normalized_lifetime", "fraction", &overall));
            let years: Vec<f64> = overall.iter().map(|f| f * qcsm_core::fleet::MAX_LIFETIME_YEARS).collect();
            rows.push(row("remaining_lifetime", "years", &years));
            for class in QosClassId::ALL {
                let per: Vec<f64> = values.iter().filter_map(|s| s.per_class[class.slot()]).collect();
                if !per.is_empty() {
                    rows.push(row(&format!("normalized_lifetime_{}", class.name()), "fraction", &per));
                }
            }
        }
    }
    let mut gaps = gaps_for(&rows, "normalized_lifetime", false);
    for class in QosClassId::ALL {
        gaps.extend(gaps_for(&rows, &format!("normalized_lifetime_{}", class.name()), false));
    }
    Ok(ExperimentResult {
        experiment: "lifetime".into(),
        config_hash: config_hash.into(),
        seeds: seeds.to_vec(),
        rows,
        gaps,
        traces: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardOptions {
    pub lrs: Vec<f64>,
    pub episodes: u64,
    pub gamma: f64,
}

impl Default for RewardOptions {
    fn default() -> Self {
        RewardOptions {
            lrs: LEARNING_RATES.to_vec(),
            episodes: DEFAULT_EPISODES,
            gamma: DEFAULT_GAMMA,
        }
    }
}

/// One full training run per learning rate and seed on the base scenario.
pub fn run_reward_experiment(
    base: &ScenarioConfig,
    config_hash: &str,
    seeds: &[u64],
    opts: &RewardOptions,
) -> Result<ExperimentResult, EngineError> {
    let mut rows = Vec::new();
    let mut traces = Vec::new();
    for &lr in &opts.lrs {
        let mut per_lr = Vec::new();
        for &seed in seeds {
            let cfg = base.with_seed(seed);
            let out = run_training(
                &mut FleetEnvironment::new(&cfg),
                &TrainingConfig::new(opts.episodes, lr, opts.gamma, seed),
            )?;
            per_lr.push(RewardTrace {
                lr,
                seed,
                cumulative: out.reward_trace,
                episode_rewards: out.episode_rewards,
                epsilons: out.epsilons,
            });
        }
        let method = format!("QCSM(lr={lr})");
        let n = base.num_sensors;
        let k = base.services.len();
        let metric = |name: &str, f: fn(&RewardTrace) -> f64| {
            let values: Vec<f64> = per_lr.iter().map(f).collect();
            MetricsRecord::from_summary("reward", &method, k, n, name, "reward", summarize(&values))
        };
        rows.push(metric("terminal_cumulative_reward", RewardTrace::terminal));
        rows.push(metric("exploration_mean_reward", RewardTrace::exploration_mean));
        rows.push(metric("converged_mean_reward", RewardTrace::converged_mean));
        traces.extend(per_lr);
    }
    Ok(ExperimentResult {
        experiment: "reward".into(),
        config_hash: config_hash.into(),
        seeds: seeds.to_vec(),
        rows,
        gaps: Vec::new(),
        traces,
    })
}
