use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cabsim::cab::bounds::{
    alg_regret_bound, etc_regret_bound, generic_ucb_tail_bound, lower_bound_curve, LOWER_BOUND_PRESET_C,
};
use cabsim::cab::default_checkpoints;
use cabsim::engine::{
    assert_checks, export, run_batch_timed, to_csv_string, to_json_string, AggregateResult, Experiment,
    ExperimentConfig, ExperimentKind, ExportFormat, ModelPair, Outcome,
};
use cabsim::zerogap::ZeroGapReward;
use cabsim::{CabInstance, Error, Policy, RewardModel, Theta};

#[derive(Parser)]
#[command(name = "cabsim", version, about = "Countable-armed bandit simulation lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Explore-then-commit regret batch.
    RunEtc(EtcArgs),
    /// Adaptive epoch algorithm regret batch.
    RunAlg(AlgArgs),
    /// Equal-means two-armed experiment: share of plays of arm 1.
    Zerogap(ZerogapArgs),
    /// Monte-Carlo survival constant for one pair or a gap grid.
    EstimateBeta(BetaArgs),
    /// Adaptive versus i.i.d. paired stopping times on shared streams.
    CheckLemma1(PairArgs),
    /// Single-epoch termination times on a forced pair.
    EpochStats(EpochArgs),
    /// Reference bound curves over the checkpoints of n.
    Bounds(BoundsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for ExportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ExportFormat::Csv,
            Format::Json => ExportFormat::Json,
        }
    }
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment config; other flags override its seed, reps and n.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    n: Option<u64>,
    /// Worker threads (default: available cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Evaluate the experiment's checks; exit 3 if any fail.
    #[arg(long)]
    assert: bool,
    /// Use full-size replication counts and grids.
    #[arg(long)]
    full_scale: bool,
    /// Print the resolved config and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(long, default_value_t = 0.9)]
    mu1: f64,
    #[arg(long, default_value_t = 0.5)]
    mu2: f64,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
}

impl InstanceArgs {
    fn instance(&self) -> anyhow::Result<CabInstance> {
        Ok(CabInstance::bernoulli(self.mu1, self.mu2, self.alpha)?)
    }
}

#[derive(Args)]
struct ScheduleArgs {
    #[arg(long)]
    m0: Option<u64>,
    #[arg(long, default_value_t = 2.1)]
    gamma: f64,
}

impl ScheduleArgs {
    fn schedule(&self, default_m0: u64) -> anyhow::Result<Theta> {
        Ok(Theta::new(self.m0.unwrap_or(default_m0), self.gamma)?)
    }
}

#[derive(Args)]
struct EtcArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    instance: InstanceArgs,
    /// Calibration gap of the separation test.
    #[arg(long, default_value_t = 0.3)]
    delta: f64,
}

#[derive(Args)]
struct AlgArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value = "ucb1")]
    policy: String,
    #[command(flatten)]
    schedule: ScheduleArgs,
    /// Survival constant for the upper-bound overlay.
    #[arg(long)]
    reference_beta: Option<f64>,
    #[arg(long)]
    reference_c2: Option<f64>,
}

#[derive(Args)]
struct ZerogapArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "ucb1")]
    policy: String,
    /// bernoulli:P, beta:A:B, uniform, trunc-gauss:MU:SIGMA, gaussian:MU:SIGMA or constant:V.
    #[arg(long, default_value = "bernoulli:0.5")]
    reward: String,
    /// Second arm's reward (defaults to --reward).
    #[arg(long)]
    reward2: Option<String>,
    #[arg(long, default_value_t = 100)]
    bins: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0.40, 0.45, 0.48])]
    epsilons: Vec<f64>,
}

#[derive(Args)]
struct BetaArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 0.9)]
    p1: f64,
    #[arg(long, default_value_t = 0.5)]
    p2: f64,
    /// Symmetric Bernoulli pairs `(1 +- delta)/2` for each gap.
    #[arg(long, value_delimiter = ',')]
    delta_grid: Option<Vec<f64>>,
    #[command(flatten)]
    schedule: ScheduleArgs,
    /// Allow equal means.
    #[arg(long)]
    diagnostic: bool,
}

#[derive(Args)]
struct PairArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 0.9)]
    p1: f64,
    #[arg(long, default_value_t = 0.5)]
    p2: f64,
    #[command(flatten)]
    schedule: ScheduleArgs,
}

#[derive(Args)]
struct EpochArgs {
    #[command(flatten)]
    pair: PairArgs,
    #[arg(long, default_value = "ucb1")]
    policy: String,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, default_value_t = 10_000)]
    n: u64,
    #[arg(long, default_value_t = 0.4)]
    gap: f64,
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Survival constant; enables the adaptive-algorithm curve together with --c2.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    #[arg(long, default_value_t = LOWER_BOUND_PRESET_C)]
    lower_c: f64,
    #[arg(long, default_value_t = 0.45)]
    epsilon: f64,
    #[arg(long, default_value_t = 2.0)]
    rho: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

/// Failures mapped to exit codes.
enum Failure {
    Config(anyhow::Error),
    Assert,
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let is_config = e.chain().any(|c| {
            matches!(
                c.downcast_ref::<Error>(),
                Some(
                    Error::Config(_)
                        | Error::InvalidModel(_)
                        | Error::InvalidInstance(_)
                        | Error::InvalidSchedule(_)
                        | Error::Domain(_)
                        | Error::UnknownPolicy(_)
                        | Error::RewardOutOfRange(_)
                )
            )
        });
        if is_config {
            Failure::Config(e)
        } else {
            Failure::Other(e)
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::from(anyhow::Error::from(e))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Assert) => ExitCode::from(3),
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn parse_policy(id: &str) -> Result<Policy, Failure> {
    Ok(id.parse::<Policy>()?)
}

fn number(s: &str) -> anyhow::Result<f64> {
    s.parse::<f64>().map_err(|_| Error::Config(format!("bad number {s:?}")).into())
}

fn parse_reward(spec: &str) -> anyhow::Result<ZeroGapReward> {
    let parts: Vec<&str> = spec.split(':').collect();
    let model = |m: cabsim::Result<RewardModel>| -> anyhow::Result<ZeroGapReward> { Ok(ZeroGapReward::model(m?)) };
    match parts.as_slice() {
        ["bernoulli", p] => model(RewardModel::bernoulli(number(p)?)),
        ["beta", a, b] => model(RewardModel::beta(number(a)?, number(b)?)),
        ["uniform"] => model(Ok(RewardModel::uniform())),
        ["trunc-gauss", mu, sigma] => model(RewardModel::trunc_gauss(number(mu)?, number(sigma)?)),
        ["gaussian", mu, sigma] => Ok(ZeroGapReward::Gaussian { mu: number(mu)?, sigma: number(sigma)? }),
        ["constant", v] => Ok(ZeroGapReward::Constant { value: number(v)? }),
        _ => Err(Error::Config(format!("unrecognized reward spec {spec:?}")).into()),
    }
}

/// Loads `--config` when given (checking its kind); otherwise builds the
/// config from flags. Seed, reps and n flags override either way.
fn resolve(
    common: &Common,
    kind: ExperimentKind,
    defaults: (u64, u64),
    build: impl FnOnce() -> Result<Experiment, Failure>,
) -> Result<ExperimentConfig, Failure> {
    let mut config = match &common.config {
        Some(path) => {
            let c = ExperimentConfig::load(path)?;
            if c.kind() != kind {
                return Err(Failure::Config(anyhow!(
                    "config {} describes a {:?} experiment, not {:?}",
                    path.display(),
                    c.kind(),
                    kind
                )));
            }
            c
        }
        None => ExperimentConfig::new(build()?, defaults.0, defaults.1, 0),
    };
    if let Some(seed) = common.seed {
        config.master_seed = seed;
    }
    if let Some(reps) = common.reps {
        config.reps = reps;
    }
    if let Some(n) = common.n {
        config.n = n;
    }
    if let Some(out) = &common.out {
        config.output.path = Some(out.clone());
    }
    if let Some(f) = common.format {
        config.output.format = Some(f.into());
    }
    config.validate()?;
    Ok(config)
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::RunEtc(a) => {
            let config = resolve(&a.common, ExperimentKind::EtcRegret, (10_000, 1000), || {
                Ok(Experiment::EtcRegret { instance: a.instance.instance()?, delta: a.delta })
            })?;
            execute(&a.common, config)
        }
        Command::RunAlg(a) => {
            let config = resolve(&a.common, ExperimentKind::AlgRegret, (10_000, 500), || {
                Ok(Experiment::AlgRegret {
                    instance: a.instance.instance()?,
                    policy: parse_policy(&a.policy)?,
                    schedule: a.schedule.schedule(11)?,
                    reference_beta: a.reference_beta,
                    reference_c2: a.reference_c2,
                })
            })?;
            execute(&a.common, config)
        }
        Command::Zerogap(a) => {
            let reps = if a.common.full_scale { 20_000 } else { 2000 };
            let config = resolve(&a.common, ExperimentKind::Zerogap, (10_000, reps), || {
                let reward1 = parse_reward(&a.reward)?;
                let reward2 = match &a.reward2 {
                    Some(s) => parse_reward(s)?,
                    None => reward1,
                };
                Ok(Experiment::Zerogap {
                    policy: parse_policy(&a.policy)?,
                    reward1,
                    reward2,
                    bins: a.bins,
                    epsilons: a.epsilons.clone(),
                })
            })?;
            execute(&a.common, config)
        }
        Command::EstimateBeta(a) => {
            let config = resolve(&a.common, ExperimentKind::Beta, (100_000, 10_000), || {
                let grid = match (&a.delta_grid, a.common.full_scale) {
                    (Some(g), _) => Some(g.clone()),
                    (None, true) => Some((1..20).map(|k| k as f64 * 0.05).collect()),
                    (None, false) => None,
                };
                let pairs = match grid {
                    Some(g) => g
                        .iter()
                        .map(|&d| ModelPair::symmetric_bernoulli(d))
                        .collect::<cabsim::Result<Vec<_>>>()?,
                    None => vec![ModelPair::new(RewardModel::bernoulli(a.p1)?, RewardModel::bernoulli(a.p2)?)],
                };
                Ok(Experiment::Beta { pairs, schedule: a.schedule.schedule(4000)?, diagnostic: a.diagnostic })
            })?;
            execute(&a.common, config)
        }
        Command::CheckLemma1(a) => {
            let config = resolve(&a.common, ExperimentKind::Lemma1, (100_000, 500), || {
                Ok(Experiment::Lemma1 {
                    model1: RewardModel::bernoulli(a.p1)?,
                    model2: RewardModel::bernoulli(a.p2)?,
                    schedule: a.schedule.schedule(11)?,
                })
            })?;
            execute(&a.common, config)
        }
        Command::EpochStats(a) => {
            let p = &a.pair;
            let config = resolve(&p.common, ExperimentKind::EpochStats, (100_000, 1000), || {
                Ok(Experiment::EpochStats {
                    model1: RewardModel::bernoulli(p.p1)?,
                    model2: RewardModel::bernoulli(p.p2)?,
                    schedule: p.schedule.schedule(11)?,
                    policy: parse_policy(&a.policy)?,
                })
            })?;
            execute(&p.common, config)
        }
        Command::Bounds(a) => bounds(&a),
    }
}

fn execute(common: &Common, config: ExperimentConfig) -> Result<(), Failure> {
    if common.print_config {
        println!("{}", config.to_json());
        return Ok(());
    }
    let workers = common.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let (result, stats) = run_batch_timed(&config, workers)?;
    eprintln!("{}", summary_line(&result));
    eprintln!("config {} | {} workers | {:.2}s", result.config_hash, stats.workers, stats.wall_time_secs);

    let out = config.output.path.clone();
    let format = config.output.format.unwrap_or_else(|| infer_format(out.as_deref()));
    match &out {
        Some(path) => {
            if let Err(e) = export(&result, format, path) {
                // Salvage the finished batch rather than losing it.
                println!("{}", to_json_string(&result));
                return Err(Failure::Other(anyhow!(e).context(format!("writing {}", path.display()))));
            }
        }
        None => {
            let text = match format {
                ExportFormat::Json => to_json_string(&result),
                ExportFormat::Csv => to_csv_string(&result)?,
            };
            std::io::stdout().write_all(text.as_bytes()).context("writing stdout")?;
        }
    }

    if common.assert {
        let checks = assert_checks(&result);
        let mut failed = false;
        for c in &checks {
            eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            failed |= !c.passed;
        }
        if failed {
            return Err(Failure::Assert);
        }
    }
    Ok(())
}

fn infer_format(path: Option<&Path>) -> ExportFormat {
    match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some("csv") => ExportFormat::Csv,
        _ => ExportFormat::Json,
    }
}

fn summary_line(result: &AggregateResult) -> String {
    match &result.outcome {
        Outcome::Regret(agg) => match agg.final_stat() {
            Some(s) => format!("{}: mean regret at {} = {:.3} (se {:.3})", agg.algo, s.checkpoint, s.mean, s.std_error),
            None => format!("{}: no checkpoints", agg.algo),
        },
        Outcome::Zerogap(z) => format!(
            "{}: mean N1/n = {:.4}, std {:.4} over {} reps",
            z.policy, z.summary.mean, z.summary.std, z.reps
        ),
        Outcome::Beta { estimates } => estimates
            .iter()
            .map(|e| format!("delta {}: beta_hat = {:.4} (se {:.4})", e.delta, e.estimate, e.std_error))
            .collect::<Vec<_>>()
            .join("\n"),
        Outcome::Lemma1(l) => format!("{}/{} paths equal", l.equal, result.reps),
        Outcome::EpochStats(s) => format!(
            "mean tau = {:.3}, censored fraction {:.4}",
            s.stats.mean_tau, s.stats.censored_fraction
        ),
    }
}

fn bounds(a: &BoundsArgs) -> Result<(), Failure> {
    if a.n == 0 {
        return Err(Failure::Config(anyhow!("n must be positive")));
    }
    if a.beta.is_some() != a.c2.is_some() {
        return Err(Failure::Config(anyhow!("--beta and --c2 go together")));
    }
    let mut rows = Vec::new();
    for n in default_checkpoints(a.n) {
        let etc = if n >= 2 { Some(etc_regret_bound::<f64>(n, a.delta, a.gap, a.alpha)?) } else { None };
        let alg = match (a.beta, a.c2) {
            (Some(b), Some(c2)) => Some(alg_regret_bound::<f64>(n, a.gap, a.alpha, b, c2)?),
            _ => None,
        };
        let tail = generic_ucb_tail_bound::<f64>(n, a.epsilon, a.rho)?;
        rows.push(serde_json::json!({
            "n": n,
            "lower_bound": lower_bound_curve::<f64>(n, a.gap, a.lower_c)?,
            "etc_bound": etc.map(|e| e.value),
            "etc_f_defined": etc.map(|e| e.f_defined),
            "alg_bound": alg,
            "tail_bound": tail.value,
            "tail_exponent": tail.exponent,
            "tail_vacuous": tail.vacuous,
        }));
    }
    let text = match a.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&serde_json::json!({
                "gap": a.gap, "delta": a.delta, "alpha": a.alpha, "beta": a.beta, "c2": a.c2,
                "lower_c": a.lower_c, "epsilon": a.epsilon, "rho": a.rho, "rows": rows,
            }))
            .context("serializing bounds")?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let cols =
                ["n", "lower_bound", "etc_bound", "etc_f_defined", "alg_bound", "tail_bound", "tail_exponent", "tail_vacuous"];
            let mut s = cols.join(",");
            s.push('\n');
            for r in &rows {
                let cells: Vec<String> = cols
                    .iter()
                    .map(|c| match &r[*c] {
                        serde_json::Value::Null => String::new(),
                        v => v.to_string(),
                    })
                    .collect();
                s.push_str(&cells.join(","));
                s.push('\n');
            }
            s
        }
    };
    match &a.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(text.as_bytes()).context("writing stdout")?,
    }
    Ok(())
}
