use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dlstd_core::benchmarks::{
    CorruptedChainSpec, ErrorMetric, ExperimentConfig, LambdaPolicy, MuMode, CV_TABLE_ROWS,
};
use dlstd_core::estimators::{FitConfig, Method};
use dlstd_core::selection::make_grid;
use dlstd_core::verification::{Suite, VerifyConfig};
use dlstd_core::SolverConfig;
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(name = "dlstd", version, about = "Sparse LSTD experiments and verification suites")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Regularization paths on the two-state chain, with closed-form references.
    TwoState(TwoStateArgs),
    /// Experiments on the corrupted 20-state chain.
    Chain(ChainArgs),
    /// Randomized checks of the estimators' guarantees and of the LP solver.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChainKind {
    OnPolicy,
    OffPolicy,
    Cv,
}

impl ChainKind {
    fn name(self) -> &'static str {
        match self {
            ChainKind::OnPolicy => "on-policy",
            ChainKind::OffPolicy => "off-policy",
            ChainKind::Cv => "cv",
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML file with settings; command-line flags take precedence.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Interior-point feasibility tolerance.
    #[arg(long)]
    pub feas_tol: Option<f64>,
    /// Interior-point relative duality-gap tolerance.
    #[arg(long)]
    pub gap_tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TwoStateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// on-policy, off-policy or both.
    #[arg(long)]
    pub mode: Option<String>,
    /// Log-spaced grid `lo:hi:count`; lambda = 0 is always appended.
    #[arg(long, value_name = "LO:HI:COUNT")]
    pub grid: Option<String>,
    /// Comma-separated methods.
    #[arg(long)]
    pub methods: Option<String>,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    #[arg(value_enum)]
    pub kind: ChainKind,
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Number of noise features; a comma-separated list sweeps on-policy runs.
    #[arg(long)]
    pub sbar: Option<String>,
    /// Training transitions per run.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub runs: Option<usize>,
    /// Cross-validation folds.
    #[arg(long)]
    pub k: Option<usize>,
    /// Trajectory length for on-policy sampling.
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub test_points: Option<usize>,
    /// Comma-separated off-policy mixing levels in [0, 0.5].
    #[arg(long)]
    pub alphas: Option<String>,
    #[arg(long, value_name = "LO:HI:COUNT")]
    pub grid: Option<String>,
    #[arg(long)]
    pub methods: Option<String>,
    /// oracle, j1 or j2.
    #[arg(long)]
    pub lambda_policy: Option<String>,
    /// rmse or mae.
    #[arg(long)]
    pub metric: Option<String>,
    /// Also write two-column `.dat` files, one per curve.
    #[arg(long)]
    pub emit_gnuplot: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated suites: theorem1, prop2, theorem3, lp.
    #[arg(long)]
    pub suite: Option<String>,
    /// Trials per suite.
    #[arg(long)]
    pub trials: Option<usize>,
}

/// Settings read from `--config`. Every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub gamma: Option<f64>,
    pub mode: Option<String>,
    pub sbar: Option<Vec<usize>>,
    pub n: Option<usize>,
    pub runs: Option<usize>,
    pub k: Option<usize>,
    pub horizon: Option<usize>,
    pub test_points: Option<usize>,
    pub alphas: Option<Vec<f64>>,
    pub grid: Option<String>,
    pub methods: Option<Vec<String>>,
    pub lambda_policy: Option<String>,
    pub metric: Option<String>,
    pub emit_gnuplot: Option<bool>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub feas_tol: Option<f64>,
    pub gap_tol: Option<f64>,
    pub suite: Option<Vec<String>>,
    pub trials: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        ensure!(parts.len() == 3, "grid must look like lo:hi:count, got {s:?}");
        let lo: f64 = parts[0].trim().parse().with_context(|| format!("grid lower end {:?}", parts[0]))?;
        let hi: f64 = parts[1].trim().parse().with_context(|| format!("grid upper end {:?}", parts[1]))?;
        let count: usize = parts[2].trim().parse().with_context(|| format!("grid count {:?}", parts[2]))?;
        ensure!(lo > 0.0 && lo < hi && hi.is_finite(), "grid needs 0 < lo < hi, got {lo}:{hi}");
        ensure!(count >= 2, "grid needs at least 2 points");
        Ok(Self { lo, hi, count })
    }

    /// Decreasing values from `hi` to `lo`.
    pub fn values(&self) -> Result<Vec<f64>> {
        Ok(make_grid(self.lo, self.hi, self.count)?.values().to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    TwoState,
    Chain(ChainKind),
    Verify,
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: CommandKind,
    pub gamma: f64,
    pub modes: Vec<MuMode>,
    pub s_bars: Vec<usize>,
    pub n: usize,
    pub runs: usize,
    pub k: usize,
    pub horizon: usize,
    pub test_points: usize,
    pub alphas: Vec<f64>,
    pub grid: GridSpec,
    pub methods: Vec<Method>,
    /// `(method, policy)` rows; chain commands only.
    pub rows: Vec<(Method, LambdaPolicy)>,
    pub metric: ErrorMetric,
    pub emit_gnuplot: bool,
    pub seed: u64,
    pub jobs: usize,
    pub out: Option<PathBuf>,
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub suites: Vec<Suite>,
    pub trials: usize,
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()
}

fn parse_methods(names: &[String]) -> Result<Vec<Method>> {
    let mut out = Vec::new();
    for name in names {
        let m: Method = name.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    ensure!(!out.is_empty(), "no methods given");
    Ok(out)
}

fn parse_modes(s: &str) -> Result<Vec<MuMode>> {
    if s.trim().eq_ignore_ascii_case("both") {
        return Ok(vec![MuMode::OnPolicy, MuMode::OffPolicyUniform]);
    }
    Ok(vec![s.parse()?])
}

fn parse_numbers<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    split_list(s)
        .iter()
        .map(|x| x.parse::<T>().with_context(|| format!("bad {what} value {x:?}")))
        .collect()
}

impl RunConfig {
    pub fn resolve(command: &Command) -> Result<Self> {
        let common = match command {
            Command::TwoState(a) => &a.common,
            Command::Chain(a) => &a.common,
            Command::Verify(a) => &a.common,
        };
        let file = match &common.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let solver = SolverConfig::default();
        let chain = CorruptedChainSpec::default();
        let experiment = ExperimentConfig::default();
        let mut cfg = RunConfig {
            command: CommandKind::Verify,
            gamma: file.gamma.unwrap_or(chain.gamma),
            modes: vec![MuMode::OnPolicy, MuMode::OffPolicyUniform],
            s_bars: file.sbar.clone().unwrap_or_else(|| vec![chain.s_bar]),
            n: file.n.unwrap_or(experiment.n),
            runs: file.runs.unwrap_or(experiment.runs),
            k: file.k.unwrap_or(experiment.k),
            horizon: file.horizon.unwrap_or(experiment.horizon),
            test_points: file.test_points.unwrap_or(experiment.test_points),
            alphas: file.alphas.clone().unwrap_or_else(|| vec![0.0, 0.125, 0.25, 0.375, 0.5]),
            grid: GridSpec { lo: 1e-3, hi: 10.0, count: 30 },
            methods: Vec::new(),
            rows: Vec::new(),
            metric: ErrorMetric::default(),
            emit_gnuplot: file.emit_gnuplot.unwrap_or(false),
            seed: common.seed.or(file.seed).unwrap_or(0),
            jobs: common
                .jobs
                .or(file.jobs)
                .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
            out: common.out.clone().or(file.out.clone()),
            feas_tol: common.feas_tol.or(file.feas_tol).unwrap_or(solver.feas_tol),
            gap_tol: common.gap_tol.or(file.gap_tol).unwrap_or(solver.gap_tol),
            suites: Suite::ALL.to_vec(),
            trials: file.trials.unwrap_or(VerifyConfig::default().trials),
        };
        if let Some(g) = &file.grid {
            cfg.grid = GridSpec::parse(g)?;
        }
        if let Some(m) = &file.metric {
            cfg.metric = m.parse()?;
        }
        let file_methods = file.methods.as_deref().map(parse_methods).transpose()?;
        let file_policy = file.lambda_policy.as_deref().map(str::parse::<LambdaPolicy>).transpose()?;

        match command {
            Command::TwoState(a) => {
                cfg.command = CommandKind::TwoState;
                cfg.gamma = a.gamma.unwrap_or(cfg.gamma);
                if let Some(m) = a.mode.as_deref().or(file.mode.as_deref()) {
                    cfg.modes = parse_modes(m)?;
                }
                cfg.grid = match (&a.grid, &file.grid) {
                    (Some(g), _) => GridSpec::parse(g)?,
                    (None, Some(_)) => cfg.grid,
                    (None, None) => GridSpec { lo: 1e-3, hi: 4.0, count: 60 },
                };
                cfg.methods = match &a.methods {
                    Some(m) => parse_methods(&split_list(m))?,
                    None => file_methods.unwrap_or_else(|| vec![Method::Dantzig, Method::L1Lstd, Method::LassoTd]),
                };
                cfg.out.get_or_insert_with(|| PathBuf::from("results"));
            }
            Command::Chain(a) => {
                cfg.command = CommandKind::Chain(a.kind);
                cfg.gamma = a.gamma.unwrap_or(cfg.gamma);
                if let Some(s) = &a.sbar {
                    cfg.s_bars = parse_numbers(s, "sbar")?;
                }
                cfg.n = a.n.unwrap_or(cfg.n);
                cfg.runs = a.runs.unwrap_or(cfg.runs);
                cfg.k = a.k.unwrap_or(cfg.k);
                cfg.horizon = a.horizon.unwrap_or(cfg.horizon);
                cfg.test_points = a.test_points.unwrap_or(cfg.test_points);
                if let Some(s) = &a.alphas {
                    cfg.alphas = parse_numbers(s, "alpha")?;
                }
                if let Some(g) = &a.grid {
                    cfg.grid = GridSpec::parse(g)?;
                }
                if let Some(m) = &a.metric {
                    cfg.metric = m.parse()?;
                }
                cfg.emit_gnuplot |= a.emit_gnuplot;
                let methods = a
                    .methods
                    .as_deref()
                    .map(|m| parse_methods(&split_list(m)))
                    .transpose()?
                    .or(file_methods);
                let policy = a.lambda_policy.as_deref().map(str::parse::<LambdaPolicy>).transpose()?.or(file_policy);
                cfg.resolve_rows(a.kind, methods, policy)?;
                cfg.out.get_or_insert_with(|| PathBuf::from("results"));
            }
            Command::Verify(a) => {
                cfg.command = CommandKind::Verify;
                cfg.trials = a.trials.unwrap_or(cfg.trials);
                let names = match (&a.suite, &file.suite) {
                    (Some(s), _) => Some(split_list(s)),
                    (None, Some(s)) => Some(s.clone()),
                    (None, None) => None,
                };
                if let Some(names) = names {
                    let mut suites = Vec::new();
                    for n in &names {
                        let s: Suite = n.parse()?;
                        if !suites.contains(&s) {
                            suites.push(s);
                        }
                    }
                    ensure!(!suites.is_empty(), "no suites given");
                    cfg.suites = suites;
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_rows(&mut self, kind: ChainKind, methods: Option<Vec<Method>>, policy: Option<LambdaPolicy>) -> Result<()> {
        let default_methods = vec![Method::Ridge, Method::Dantzig, Method::L1Lstd, Method::LassoTd];
        match kind {
            ChainKind::OnPolicy => {
                self.methods = methods.unwrap_or(default_methods);
                let policy = policy.unwrap_or(LambdaPolicy::Oracle);
                self.rows = self.methods.iter().map(|&m| (m, policy)).collect();
            }
            ChainKind::OffPolicy => {
                if let Some(p) = policy {
                    ensure!(
                        p == LambdaPolicy::Oracle,
                        "off-policy runs select lambda by training-set error against the true values; --lambda-policy must be oracle"
                    );
                }
                self.methods = methods.unwrap_or(default_methods);
                self.rows = self.methods.iter().map(|&m| (m, LambdaPolicy::Oracle)).collect();
            }
            ChainKind::Cv => {
                self.rows = match (methods, policy) {
                    (None, None) => CV_TABLE_ROWS.to_vec(),
                    (methods, policy) => {
                        let methods = methods.unwrap_or(default_methods);
                        let policies = match policy {
                            Some(p) => vec![p],
                            None => vec![LambdaPolicy::J1, LambdaPolicy::J2],
                        };
                        let mut rows = Vec::new();
                        for &m in &methods {
                            for &p in &policies {
                                rows.push((m, if m.is_regularized() { p } else { LambdaPolicy::Oracle }));
                            }
                        }
                        rows.dedup();
                        rows
                    }
                };
                self.methods = Vec::new();
                for &(m, _) in &self.rows {
                    if !self.methods.contains(&m) {
                        self.methods.push(m);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        ensure!((0.0..1.0).contains(&self.gamma), "gamma must lie in [0, 1), got {}", self.gamma);
        ensure!(self.jobs >= 1, "--jobs must be at least 1");
        ensure!(
            self.feas_tol > 0.0 && self.gap_tol > 0.0 && self.feas_tol.is_finite() && self.gap_tol.is_finite(),
            "solver tolerances must be positive"
        );
        self.grid.values()?;
        match self.command {
            CommandKind::TwoState => {
                ensure!(!self.modes.is_empty(), "no sampling mode");
            }
            CommandKind::Chain(kind) => {
                ensure!(!self.s_bars.is_empty(), "no sbar given");
                if kind != ChainKind::OnPolicy {
                    ensure!(self.s_bars.len() == 1, "{} runs take a single sbar", kind.name());
                }
                ensure!(!self.alphas.is_empty(), "no alphas given");
                for &a in &self.alphas {
                    ensure!((0.0..=0.5).contains(&a), "alpha must lie in [0, 0.5], got {a}");
                }
                self.experiment(self.s_bars[0])?.validate()?;
            }
            CommandKind::Verify => {
                ensure!(self.trials >= 1, "--trials must be at least 1");
            }
        }
        Ok(())
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            feas_tol: self.feas_tol,
            gap_tol: self.gap_tol,
            ..SolverConfig::default()
        }
    }

    pub fn fit(&self) -> FitConfig {
        FitConfig {
            lp: self.solver(),
            ..FitConfig::default()
        }
    }

    pub fn experiment(&self, s_bar: usize) -> Result<ExperimentConfig> {
        Ok(ExperimentConfig {
            chain: CorruptedChainSpec {
                s_bar,
                gamma: self.gamma,
                ..CorruptedChainSpec::default()
            },
            n: self.n,
            horizon: self.horizon,
            runs: self.runs,
            seed: self.seed,
            grid: self.grid.values()?,
            fit: self.fit(),
            k: self.k,
            test_points: self.test_points,
            metric: self.metric,
            ..ExperimentConfig::default()
        })
    }

    pub fn verify(&self) -> VerifyConfig {
        VerifyConfig {
            trials: self.trials,
            seed: self.seed,
            lp: self.solver(),
        }
    }

    /// One line with every setting that affects the output.
    pub fn describe(&self) -> String {
        let mut s = String::from("dlstd ");
        let join = |v: Vec<String>| v.join(",");
        match self.command {
            CommandKind::TwoState => {
                let modes = join(self.modes.iter().map(|m| m.to_string()).collect());
                let _ = write!(s, "two-state gamma={:?} mode={modes}", self.gamma);
            }
            CommandKind::Chain(kind) => {
                let _ = write!(
                    s,
                    "chain {} gamma={:?} sbar={} n={} runs={} k={} horizon={} test_points={} metric={}",
                    kind.name(),
                    self.gamma,
                    join(self.s_bars.iter().map(|x| x.to_string()).collect()),
                    self.n,
                    self.runs,
                    self.k,
                    self.horizon,
                    self.test_points,
                    self.metric
                );
                if kind == ChainKind::OffPolicy {
                    let _ = write!(s, " alphas={}", join(self.alphas.iter().map(|a| format!("{a:?}")).collect()));
                }
                let rows = join(self.rows.iter().map(|(m, p)| format!("{m}/{p}")).collect());
                let _ = write!(s, " rows={rows}");
            }
            CommandKind::Verify => {
                let suites = join(self.suites.iter().map(|x| x.to_string()).collect());
                let _ = write!(s, "verify suites={suites} trials={}", self.trials);
            }
        }
        if self.command != CommandKind::Verify {
            let methods = join(self.methods.iter().map(|m| m.to_string()).collect());
            let _ = write!(
                s,
                " grid={:?}:{:?}:{} methods={methods}",
                self.grid.lo, self.grid.hi, self.grid.count
            );
        }
        let _ = write!(s, " feas_tol={:?} gap_tol={:?} seed={}", self.feas_tol, self.gap_tol, self.seed);
        s
    }
}
