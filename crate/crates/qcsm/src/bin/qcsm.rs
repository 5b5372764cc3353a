use std::fs;
use std::io::{BufWriter, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qcsm::config::{load_config, load_or_default, LoadError, LoadedConfig};
use qcsm::harness::{
    self, LifetimeOptions, ResponseOptions, RewardOptions, RewardTrace, DEFAULT_EPISODES, DEFAULT_GAMMA,
    DEFAULT_SEEDS,
};
use qcsm::report::{self, RunManifest};
use qcsm::serve::serve_dump;
use qcsm_core::engine::{run_training, FleetEnvironment, TrainingConfig};
use qcsm_core::gateway::GatewayMode;
use qcsm_core::sim::Simulation;
use qcsm_core::QosClassId;
use serde_json::json;

#[derive(Parser)]
#[command(name = "qcsm", version, about = "Q-learning cognitive service manager simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one Q-table and export it with its reward trace.
    Train(TrainArgs),
    /// Run one of the comparison experiments against the baseline.
    Experiment(ExperimentArgs),
    /// Check a scenario file and list every violation.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the full simulation once and dump the data pool.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct OutArgs {
    /// Artifact directory. QCSM_OUT takes precedence when set.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0.07)]
    lr: f64,
    #[arg(long, default_value_t = DEFAULT_EPISODES)]
    episodes: u64,
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    gamma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Figure {
    Response,
    Lifetime,
    Reward,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, value_enum)]
    figure: Figure,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SEEDS)]
    seeds: Vec<u64>,
    /// Training episodes per run of the reward experiment.
    #[arg(long, default_value_t = DEFAULT_EPISODES)]
    episodes: u64,
    /// Training episodes behind the policy of the lifetime experiment.
    #[arg(long)]
    lifetime_episodes: Option<u64>,
    /// Simulated cycles of the lifetime experiment (default: sim_cycles).
    #[arg(long)]
    cycles: Option<u64>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Qcsm,
    Baseline,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    cycles: Option<u64>,
    #[arg(long, value_enum, default_value = "qcsm")]
    mode: Mode,
    /// Write one JSON fleet snapshot per cycle to fleet.ndjson.
    #[arg(long)]
    dump_fleet: bool,
    /// After the run, serve the pool dump over HTTP at this address.
    #[arg(long)]
    serve: Option<String>,
    /// Stop serving after this many requests.
    #[arg(long)]
    max_requests: Option<u64>,
    #[command(flatten)]
    out: OutArgs,
}

enum Failure {
    Config(anyhow::Error),
    Io(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Invalid(violations) => {
                let lines: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
                Failure::Config(anyhow!("invalid config:\n  {}", lines.join("\n  ")))
            }
            other => Failure::Config(other.into()),
        }
    }
}

fn io_failure(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Io(e.into())
}

/// Collects artifact paths and writes the manifest exactly once.
struct Run {
    out: PathBuf,
    started: Instant,
    artifacts: Vec<PathBuf>,
    config_hash: String,
    config_source: Option<String>,
    seeds: Vec<u64>,
}

impl Run {
    fn start(out: PathBuf) -> Result<Self, Failure> {
        let out = std::env::var_os("QCSM_OUT").map(PathBuf::from).unwrap_or(out);
        fs::create_dir_all(&out)
            .with_context(|| format!("cannot create output directory {}", out.display()))
            .map_err(io_failure)?;
        Ok(Run {
            out,
            started: Instant::now(),
            artifacts: Vec::new(),
            config_hash: String::new(),
            config_source: None,
            seeds: Vec::new(),
        })
    }

    fn use_config(&mut self, loaded: &LoadedConfig) {
        self.config_hash = loaded.hash.clone();
        self.config_source = loaded.source.clone();
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.out.join(name);
        self.artifacts.push(p.clone());
        p
    }

    fn write<F>(&mut self, name: &str, f: F) -> Result<(), Failure>
    where
        F: FnOnce(&Path) -> std::io::Result<()>,
    {
        let p = self.path(name);
        f(&p).with_context(|| format!("cannot write {}", p.display())).map_err(io_failure)?;
        println!("wrote {}", p.display());
        Ok(())
    }

    fn finish(self, complete: bool) -> Result<(), Failure> {
        let manifest = RunManifest {
            command_line: std::env::args().collect(),
            config_hash: self.config_hash,
            config_source: self.config_source,
            seeds: self.seeds,
            artifacts: self.artifacts,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            complete,
        };
        let path = self.out.join("manifest.json");
        report::write_json(&path, &manifest)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(io_failure)
    }
}

/// Runs `body`, then records the manifest whether or not it succeeded.
fn with_run<F>(out: PathBuf, body: F) -> Result<(), Failure>
where
    F: FnOnce(&mut Run) -> Result<(), Failure>,
{
    let mut run = Run::start(out)?;
    match body(&mut run) {
        Ok(()) => run.finish(true),
        Err(e) => {
            let _ = run.finish(false);
            Err(e)
        }
    }
}

fn train(args: TrainArgs) -> Result<(), Failure> {
    if args.episodes == 0 {
        return Err(Failure::Config(anyhow!("--episodes must be at least 1")));
    }
    if !(0.0..=1.0).contains(&args.lr) || !(0.0..1.0).contains(&args.gamma) {
        return Err(Failure::Config(anyhow!("--lr must lie in [0, 1] and --gamma in [0, 1)")));
    }
    let loaded = load_or_default(args.config.as_deref())?;
    let config = loaded.config.with_seed(args.seed);
    with_run(args.out.out, |run| {
        run.use_config(&loaded);
        run.seeds = vec![args.seed];
        println!(
            "training {} episodes on {} sensors, lr {}, gamma {}",
            args.episodes, config.num_sensors, args.lr, args.gamma
        );
        let out = run_training(
            &mut FleetEnvironment::new(&config),
            &TrainingConfig::new(args.episodes, args.lr, args.gamma, args.seed),
        )
        .map_err(|e| Failure::Config(e.into()))?;
        let services = config.service_ids();
        let table = report::qtable_json(&out.qtable, &services, &loaded.hash, args.lr, args.gamma, args.episodes, args.seed);
        run.write("qtable.json", |p| report::write_json(p, &table))?;
        let trace = RewardTrace {
            lr: args.lr,
            seed: args.seed,
            cumulative: out.reward_trace,
            episode_rewards: out.episode_rewards,
            epsilons: out.epsilons,
        };
        run.write("reward_trace.csv", |p| report::write_reward_trace(p, &trace))?;
        println!("final cumulative reward {}", trace.terminal());
        Ok(())
    })
}

fn experiment(args: ExperimentArgs) -> Result<(), Failure> {
    if args.seeds.is_empty() {
        return Err(Failure::Config(anyhow!("--seeds must list at least one seed")));
    }
    if args.seeds.len() < 2 {
        eprintln!("warning: fewer than two seeds, confidence intervals left empty");
    }
    let loaded = load_or_default(args.config.as_deref())?;
    let base = loaded.config.clone();
    if matches!(args.figure, Figure::Reward) {
        base.validate_for_experiment().map_err(|e| Failure::Config(e.into()))?;
        if args.episodes == 0 {
            return Err(Failure::Config(anyhow!("--episodes must be at least 1")));
        }
    }
    with_run(args.out.out, |run| {
        run.use_config(&loaded);
        run.seeds = args.seeds.clone();
        let config_err = |e: qcsm_core::EngineError| Failure::Config(e.into());
        let (result, figure_file) = match args.figure {
            Figure::Response => {
                println!("response time: {} cells x {} seeds", 16, args.seeds.len());
                let r = harness::run_response_time_experiment(&base, &loaded.hash, &args.seeds, ResponseOptions::default());
                (r, "fig3_response.csv")
            }
            Figure::Lifetime => {
                let mut opts = LifetimeOptions::for_config(&base);
                opts.cycles = args.cycles.unwrap_or(opts.cycles);
                opts.training_episodes = args.lifetime_episodes.unwrap_or(opts.training_episodes);
                if opts.training_episodes == 0 {
                    return Err(Failure::Config(anyhow!("--lifetime-episodes must be at least 1")));
                }
                println!("lifetime: {} cycles, policy trained for {} episodes", opts.cycles, opts.training_episodes);
                let r = harness::run_lifetime_experiment(&base, &loaded.hash, &args.seeds, opts).map_err(config_err)?;
                (r, "fig4_lifetime.csv")
            }
            Figure::Reward => {
                let opts = RewardOptions {
                    episodes: args.episodes,
                    ..RewardOptions::default()
                };
                println!("reward: {} learning rates x {} seeds x {} episodes", opts.lrs.len(), args.seeds.len(), opts.episodes);
                let r = harness::run_reward_experiment(&base, &loaded.hash, &args.seeds, &opts).map_err(config_err)?;
                (r, "fig5_reward.csv")
            }
        };
        if result.experiment == "reward" {
            let window = base.batch_size as usize;
            run.write(figure_file, |p| report::write_reward_windows(p, &result.traces, window))?;
        } else {
            run.write(figure_file, |p| report::write_results_csv(p, &result.rows))?;
        }
        run.write("results.csv", |p| report::write_results_csv(p, &result.rows))?;
        run.write("summary.json", |p| report::write_json(p, &report::summary_json(&result)))?;
        for g in &result.gaps {
            println!("{}-service n={} {}: gap {:.1}%", g.services, g.n_sensors, g.metric, g.gap_percent);
        }
        Ok(())
    })
}

fn validate(config: &Path) -> Result<(), Failure> {
    let loaded = load_config(config)?;
    println!(
        "{}: valid ({} services, {} sensors, sha256 {})",
        config.display(),
        loaded.config.services.len(),
        loaded.config.num_sensors,
        loaded.hash
    );
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let loaded = load_or_default(args.config.as_deref())?;
    let config = loaded.config.clone();
    let cycles = args.cycles.unwrap_or(config.sim_cycles);
    let mode = match args.mode {
        Mode::Qcsm => GatewayMode::Qcsm,
        Mode::Baseline => GatewayMode::Baseline,
    };
    let listener = match &args.serve {
        Some(addr) => Some(
            TcpListener::bind(addr)
                .with_context(|| format!("cannot listen on {addr}"))
                .map_err(io_failure)?,
        ),
        None => None,
    };
    let mut dump = String::new();
    with_run(args.out.out, |run| {
        run.use_config(&loaded);
        run.seeds = vec![config.seed];
        let mut sim = Simulation::new(&config, &[mode]);
        let mut fleet_out = if args.dump_fleet {
            let p = run.path("fleet.ndjson");
            let f = fs::File::create(&p)
                .with_context(|| format!("cannot write {}", p.display()))
                .map_err(io_failure)?;
            Some(BufWriter::new(f))
        } else {
            None
        };
        for _ in 0..cycles {
            sim.step();
            if let Some(w) = fleet_out.as_mut() {
                let line = json!({ "cycle": sim.cycle() - 1, "nodes": sim.fleet().nodes() });
                writeln!(w, "{line}").map_err(io_failure)?;
            }
        }
        if let Some(mut w) = fleet_out {
            w.flush().map_err(io_failure)?;
        }
        let gw = &sim.gateways()[0];
        dump = gw.pool().dump_ndjson().map_err(|e| Failure::Io(e.into()))?;
        run.write("pool.ndjson", |p| fs::write(p, &dump))?;
        let summary = json!({
            "cycles": cycles,
            "mode": mode.name(),
            "pool_records": gw.pool().len(),
            "rejected": gw.rejected(),
            "ingest_time_ms": gw.ingest_time_ms(),
            "active_nodes": sim.fleet().active_count(),
            "mean_lifetime_fraction": QosClassId::ALL
                .map(|c| (c.name(), sim.mean_lifetime_fraction(c)))
                .into_iter()
                .collect::<std::collections::BTreeMap<_, _>>(),
        });
        run.write("simulation.json", |p| report::write_json(p, &summary))?;
        Ok(())
    })?;
    if let Some(listener) = listener {
        let addr = listener.local_addr().map_err(io_failure)?;
        println!("serving pool dump on http://{addr}/");
        serve_dump(listener, &dump, args.max_requests).map_err(io_failure)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Experiment(a) => experiment(a),
        Command::Validate { config } => validate(&config),
        Command::Simulate(a) => simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let code = f.code();
            let (Failure::Config(e) | Failure::Io(e)) = f;
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
