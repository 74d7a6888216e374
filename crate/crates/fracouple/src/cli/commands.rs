use super::config::{parse_config, ParsedConfig};
use super::manifest::{Constants, RunManifest};
use crate::coupling_engine::run_coupling;
use crate::error::{Error, Result};
use crate::experiments::{
    estimate_coupling_tail, prepare_setup, tv_bound, validate_suite, ExperimentConfig, ValidateOpts,
};
use crate::fractional_kernels::{
    alpha_h, alpha_h_by_quadrature, continuation_constant, fit_continuation_constant, mvn_map, read_path_csv,
    sample_fgn, write_path_csv, FbmPath, KernelParams, UniformGrid, WienerPath,
};
use crate::rng::stream;
use crate::sde_models::integrate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

/// Overrides the configured worker count.
pub const WORKERS_ENV: &str = "FRACOUPLE_WORKERS";
pub const ERROR_PREFIX: &str = "fracouple:error:";

#[derive(Debug, Parser)]
#[command(name = "fracouple", version, about = "Asymptotic coupling of SDEs driven by fractional Brownian motion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Configuration file (TOML).
    #[arg(short, long)]
    pub config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Override a config key, e.g. `--set seed=7` or `--set tail.t_min=2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Method {
    /// Exact stationary fGn by circulant embedding.
    Fgn,
    /// Truncated Mandelbrot–Van Ness map of a Wiener path.
    Mvn,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a fractional Brownian path and write `fbm.csv`.
    Fbm {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "fgn")]
        method: Method,
        #[arg(long, default_value_t = 10.0)]
        horizon: f64,
    },
    /// Integrate the configured model from `x1` and write `trajectory.csv`.
    Integrate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10.0)]
        horizon: f64,
        /// Drive the model with a noise CSV instead of fresh noise.
        #[arg(long)]
        noise: Option<PathBuf>,
    },
    /// Run one coupling from `(x1, x2)` and write `trials.csv`.
    Couple {
        #[command(flatten)]
        common: Common,
        /// Replica index, i.e. the random substream.
        #[arg(long, default_value_t = 0)]
        replica: u64,
    },
    /// Estimate the merge-time survival curve and write `survival.csv`.
    Tail {
        #[command(flatten)]
        common: Common,
    },
    /// Run the validation suite and write `validate.csv`; exit 2 on any failure.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Reduced sample sizes.
        #[arg(long)]
        quick: bool,
        /// Scale the MVN normalisation constant; anything but 1 should fail.
        #[arg(long, default_value_t = 1.0)]
        alpha_h_scale: f64,
    },
    /// Measure `C_K` and the kernel constants and write `constants.toml`.
    Calibrate {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Fbm { common, .. }
            | Command::Integrate { common, .. }
            | Command::Couple { common, .. }
            | Command::Tail { common }
            | Command::Validate { common, .. }
            | Command::Calibrate { common } => common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Fbm { .. } => "fbm",
            Command::Integrate { .. } => "integrate",
            Command::Couple { .. } => "couple",
            Command::Tail { .. } => "tail",
            Command::Validate { .. } => "validate",
            Command::Calibrate { .. } => "calibrate",
        }
    }
}

/// What a subcommand produced.
pub enum Outcome {
    Done,
    /// Ran to completion but a validation item failed.
    Failed,
}

struct Ctx {
    cfg: ParsedConfig,
    out: PathBuf,
    manifest: RunManifest,
}

impl Ctx {
    fn new(cmd: &Command) -> Result<Self> {
        let c = cmd.common();
        let mut cfg = parse_config(&c.config, &c.overrides)?;
        if let Ok(w) = std::env::var(WORKERS_ENV) {
            cfg.experiment.workers =
                w.trim().parse().map_err(|_| Error::Config(format!("{WORKERS_ENV} must be a worker count, got '{w}'")))?;
        }
        let out = c.out.clone().unwrap_or_else(|| cfg.experiment.out_dir.clone());
        std::fs::create_dir_all(&out)?;
        let manifest = RunManifest::new(cmd.name(), &cfg);
        Ok(Self { cfg, out, manifest })
    }

    fn exp(&self) -> &ExperimentConfig {
        &self.cfg.experiment
    }

    /// Creates an output file, refusing to overwrite the inputs.
    fn create(&self, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
        let path = self.out.join(name);
        let inputs = self.cfg.path.iter().chain(self.cfg.constants.iter().map(|(p, _)| p));
        for input in inputs {
            if same_file(input, &path) {
                return Err(Error::Config(format!("output {} would overwrite an input", path.display())));
            }
        }
        Ok((path.clone(), BufWriter::new(File::create(&path)?)))
    }

    fn emit(&mut self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<PathBuf> {
        let (path, mut w) = self.create(name)?;
        body(&mut w)?;
        w.flush()?;
        drop(w);
        self.manifest.record(&path)?;
        Ok(path)
    }

    fn finish(mut self) -> Result<()> {
        let path = self.out.join("manifest.toml");
        self.manifest.write(&path)
    }
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

fn noise(exp: &ExperimentConfig, method: Method, horizon: f64, d: usize) -> Result<FbmPath> {
    let c = &exp.coupling;
    let params = KernelParams::new(c.hurst, c.theta, c.t_hist)?;
    let n = (horizon / c.dt).round() as usize;
    let mut rng = stream(exp.seed, 0);
    match method {
        Method::Fgn => sample_fgn(&params, UniformGrid::new(0.0, c.dt, n)?, d, &mut rng),
        Method::Mvn => {
            let m = params.lags(c.dt);
            let w = WienerPath::sample(UniformGrid::new(-(m as f64) * c.dt, c.dt, m + n)?, d, &mut rng);
            mvn_map(&w, &params)
        }
    }
}

fn run_command(cmd: &Command) -> Result<Outcome> {
    let mut ctx = Ctx::new(cmd)?;
    let mut outcome = Outcome::Done;
    match cmd {
        Command::Fbm { method, horizon, .. } => {
            let d = ctx.exp().model_spec()?.dim();
            let path = noise(ctx.exp(), *method, *horizon, d)?;
            let p = ctx.emit("fbm.csv", |w| write_path_csv(&path, w))?;
            println!("wrote {}", p.display());
        }
        Command::Integrate { horizon, noise: src, .. } => {
            let model = ctx.exp().model_spec()?;
            let fbm = match src {
                Some(p) => read_path_csv(BufReader::new(File::open(p)?), ctx.exp().coupling.hurst)?,
                None => noise(ctx.exp(), Method::Fgn, *horizon, model.dim())?,
            };
            let traj = integrate(model.as_ref(), &ctx.exp().x1, &fbm)?;
            let p = ctx.emit("trajectory.csv", |w| {
                let cols: Vec<String> = (0..traj.d).map(|c| format!("x_{c}")).collect();
                writeln!(w, "t,{}", cols.join(","))?;
                for i in 0..=traj.grid.n {
                    write!(w, "{:.16e}", traj.grid.time(i))?;
                    for v in traj.state(i) {
                        write!(w, ",{v:.16e}")?;
                    }
                    writeln!(w)?;
                }
                Ok(())
            })?;
            println!("wrote {}", p.display());
        }
        Command::Couple { replica, .. } => {
            let exp = ctx.exp().clone();
            let (setup, _) = prepare_setup(&exp)?;
            let run = run_coupling(&setup, &exp.x1, &exp.x2, exp.t_max, &mut stream(exp.seed, *replica))?;
            let p = ctx.emit("trials.csv", |w| run.write_trials(w))?;
            match run.tau_inf {
                Some(t) => println!("merged at t = {t} after {} trials; wrote {}", run.trials.len(), p.display()),
                None => println!("censored at t_max = {} after {} trials; wrote {}", exp.t_max, run.trials.len(), p.display()),
            }
        }
        Command::Tail { .. } => {
            let exp = ctx.exp().clone();
            let run = estimate_coupling_tail(&exp)?;
            ctx.emit("survival.csv", |w| run.tail.write_csv(w))?;
            let grid: Vec<f64> = run.tail.t.clone();
            let tv = tv_bound(&run.tail, &grid);
            ctx.emit("tv_bound.csv", |w| {
                writeln!(w, "t,survival,bound")?;
                for i in 0..tv.t.len() {
                    writeln!(w, "{:?},{:?},{:?}", tv.t[i], tv.survival[i], tv.bound[i])?;
                }
                Ok(())
            })?;
            let summary = toml::to_string(&run.rate).map_err(|e| Error::Invalid(e.to_string()))?;
            ctx.emit("rate_fit.toml", |w| {
                writeln!(w, "ck = {:?}\nc2 = {:?}\nn_replicas = {}\nn_censored = {}", run.ck, run.c2, run.tail.n_replicas, run.tail.n_censored)?;
                w.write_all(summary.as_bytes())
            })?;
            println!(
                "{} of {} replicas merged by t = {}; slope {:?}; {:?}",
                run.tail.n_replicas - run.tail.n_censored,
                run.tail.n_replicas,
                exp.t_max,
                run.rate.slope,
                run.rate.consistency
            );
        }
        Command::Validate { quick, alpha_h_scale, .. } => {
            let base = if *quick { ValidateOpts::quick() } else { ValidateOpts::default() };
            let opts = ValidateOpts { alpha_h_scale: *alpha_h_scale, ..base };
            let report = validate_suite(ctx.exp(), &opts)?;
            ctx.emit("validate.csv", |w| report.write(w))?;
            report.write(&mut std::io::stdout().lock())?;
            if !report.all_pass() {
                outcome = Outcome::Failed;
            }
        }
        Command::Calibrate { .. } => {
            let exp = ctx.exp().clone();
            let mut fresh = exp.clone();
            fresh.ck = None;
            let (setup, est) = prepare_setup(&fresh)?;
            let est = est.expect("C_K is measured when not fixed");
            let h = exp.coupling.hurst;
            let params = KernelParams::new(h, exp.coupling.theta, exp.coupling.t_hist.max(64.0))?;
            let (fit, _) = fit_continuation_constant(&params, 1.0 / 64.0, 8.0);
            let k = Constants {
                version: env!("CARGO_PKG_VERSION").to_string(),
                hurst: h,
                alpha_h: alpha_h(h),
                alpha_h_quadrature: alpha_h_by_quadrature(h),
                continuation_constant: continuation_constant(h),
                continuation_fit: fit,
                ck: est.ck,
                ck_max_integral: est.max_integral,
                ck_runs: est.n_runs,
                ck_successes: est.n_success,
                c2: setup.config.c2,
                config_digest: ctx.cfg.digest.clone(),
            };
            let text = toml::to_string(&k).map_err(|e| Error::Invalid(e.to_string()))?;
            let p = ctx.emit("constants.toml", |w| w.write_all(text.as_bytes()))?;
            let digest = super::manifest::file_digest(&p)?;
            println!("C_K = {} (c2 = {}); wrote {}", k.ck, k.c2, p.display());
            println!("pin with:\n[constants]\npath = \"{}\"\ndigest = \"{digest}\"", p.display());
        }
    }
    ctx.finish()?;
    Ok(outcome)
}

fn report(e: &Error) {
    eprintln!("{ERROR_PREFIX} {e}");
    if let Error::Run { dump: Some(p), .. } = e {
        eprintln!("{ERROR_PREFIX} state dumped to {}", p.display());
    }
}

/// Parses arguments and runs a subcommand; returns the process exit code
/// (0 success, 2 validation failure, 1 error).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            eprintln!("{ERROR_PREFIX} {}", e.to_string().trim_start_matches("error: ").trim_end());
            return 1;
        }
    };
    match run_command(&cli.command) {
        Ok(Outcome::Done) => 0,
        Ok(Outcome::Failed) => 2,
        Err(e) => {
            report(&e);
            1
        }
    }
}
