//! `plisskit` command-line front end.

mod config;
mod diff;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use plisskit_core::cocycle::{ftle, oseledets_directions, LyapunovEstimate};
use plisskit_core::cp::{s_interval, schedule_constants, CPConstants, SchedulerInput};
use plisskit_core::experiment::{run_scan, sample_points, write_report, ScanConfig};
use plisskit_core::maps::MapDescriptor;
use plisskit_core::pliss::{density_bound, pliss_times, PlissParams};
use plisskit_core::Error;

const EXIT_RED_FLAG: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_DOMAIN: u8 = 3;
const EXIT_SCHEDULER: u8 = 4;
const EXIT_IO: u8 = 5;

const CONFIG_ECHO: &str = "config.txt";

/// Numerical hyperbolicity experiments on torus maps.
///
/// Every subcommand accepts `--config <path>`, a flat `key = value` file
/// whose keys are long flag names. Flags on the command line override the
/// config file, which overrides built-in defaults.
#[derive(Parser)]
#[command(name = "plisskit", version, args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Finite-time Lyapunov exponents of sampled orbits.
    Exponents(ExponentsArgs),
    /// Pliss times of a real sequence.
    Pliss(PlissArgs),
    /// Scheduled constants for a map and a value of t.
    Constants(ConstantsArgs),
    /// Full orbit scan: Birkhoff frequencies, clustering, report files.
    CpScan(ScanArgs),
    /// Compare two report.json files.
    ReportDiff(DiffArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MapKind {
    Cat,
    Pcat,
    Std,
}

#[derive(Args)]
struct MapArgs {
    #[arg(long, value_enum)]
    map: MapKind,
    /// Perturbation size for `pcat`.
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<f64>,
    /// Kick strength for `std`.
    #[arg(long = "K", allow_negative_numbers = true)]
    k: Option<f64>,
    /// Iterate used as the base map.
    #[arg(long = "N", default_value_t = 1)]
    iterate: u32,
}

impl MapArgs {
    fn descriptor(&self) -> Result<MapDescriptor, Failure> {
        let base = match self.map {
            MapKind::Cat => MapDescriptor::cat(),
            MapKind::Pcat => {
                let eps = self
                    .eps
                    .ok_or_else(|| Failure::usage("--map pcat requires --eps"))?;
                MapDescriptor::perturbed_cat(eps)?
            }
            MapKind::Std => {
                let k = self
                    .k
                    .ok_or_else(|| Failure::usage("--map std requires --K"))?;
                MapDescriptor::standard(k)?
            }
        };
        Ok(base.with_iterate(self.iterate)?)
    }

    fn echo(&self, out: &mut String) {
        let name = match self.map {
            MapKind::Cat => "cat",
            MapKind::Pcat => "pcat",
            MapKind::Std => "std",
        };
        let _ = writeln!(out, "map = {name}");
        match self.map {
            MapKind::Pcat => echo_opt(out, "eps", self.eps),
            MapKind::Std => echo_opt(out, "K", self.k),
            MapKind::Cat => {}
        }
        let _ = writeln!(out, "N = {}", self.iterate);
    }
}

fn echo_opt(out: &mut String, key: &str, value: Option<f64>) {
    if let Some(v) = value {
        let _ = writeln!(out, "{key} = {v}");
    }
}

#[derive(Args)]
struct ThreadArgs {
    /// Worker threads; falls back to PLISSKIT_THREADS, then all cores.
    #[arg(long)]
    threads: Option<usize>,
}

impl ThreadArgs {
    fn pool(&self) -> Result<rayon::ThreadPool, Failure> {
        let threads = match self.threads {
            Some(n) => n,
            None => match std::env::var("PLISSKIT_THREADS") {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| Failure::usage(format!("PLISSKIT_THREADS: bad value `{v}`")))?,
                Err(_) => 0,
            },
        };
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Failure::usage(e.to_string()))
    }
}

#[derive(Args)]
struct ExponentsArgs {
    #[command(flatten)]
    map: MapArgs,
    /// Orbit length per sample.
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Window used for the splitting check.
    #[arg(long, default_value_t = plisskit_core::cocycle::DEFAULT_WINDOW)]
    window: usize,
    /// Also write the table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    threads: ThreadArgs,
}

#[derive(Args)]
struct PlissArgs {
    /// Comma or whitespace separated values.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "input")]
    seq: Option<String>,
    /// File of values, separated by commas, whitespace or newlines.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    alpha3: f64,
    /// With --alpha2, also print the density bound.
    #[arg(long, allow_negative_numbers = true, requires = "alpha2")]
    alpha1: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires = "alpha1")]
    alpha2: Option<f64>,
}

#[derive(Args)]
struct ConstantsArgs {
    #[command(flatten)]
    map: MapArgs,
    #[arg(long, default_value_t = 0.96)]
    t: f64,
    /// Defaults to the midpoint of the admissible interval.
    #[arg(long)]
    s: Option<f64>,
    /// Grid density for the derivative bounds.
    #[arg(long, default_value_t = 512)]
    grid: usize,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    map: MapArgs,
    #[arg(long, default_value_t = 0.96)]
    t: f64,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Orbit length per sample.
    #[arg(long, default_value_t = 10_000)]
    orbit: usize,
    #[arg(long, default_value_t = plisskit_core::cocycle::DEFAULT_WINDOW)]
    window: usize,
    /// Horizon of the finite-time conditions.
    #[arg(long = "H", default_value_t = plisskit_core::cp::DEFAULT_HORIZON)]
    horizon: usize,
    /// Clustering distance.
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 512)]
    grid: usize,
    /// Run directory.
    #[arg(long, default_value = "cp-scan-out")]
    out: PathBuf,
    #[command(flatten)]
    threads: ThreadArgs,
}

impl ScanArgs {
    fn echo(&self) -> String {
        let mut out = String::new();
        self.map.echo(&mut out);
        let _ = writeln!(out, "t = {}", self.t);
        echo_opt(&mut out, "s", self.s);
        let _ = writeln!(out, "samples = {}", self.samples);
        let _ = writeln!(out, "orbit = {}", self.orbit);
        let _ = writeln!(out, "window = {}", self.window);
        let _ = writeln!(out, "H = {}", self.horizon);
        let _ = writeln!(out, "delta = {}", self.delta);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "grid = {}", self.grid);
        out
    }
}

#[derive(Args)]
struct DiffArgs {
    /// Report file or run directory.
    a: PathBuf,
    b: PathBuf,
    /// Absolute tolerance for numbers.
    #[arg(long, default_value_t = 0.0)]
    tol: f64,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Self {
            code: EXIT_IO,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::TTooSmall(_)
            | Error::TTooLarge(_)
            | Error::SOutOfRange { .. }
            | Error::SideConditionViolated { .. }
            | Error::DegenerateAngleBound(_) => EXIT_SCHEDULER,
            Error::Io { .. } | Error::Json { .. } | Error::Csv { .. } => EXIT_IO,
            Error::InvalidArgument(_) | Error::OrbitTooShort { .. } => EXIT_USAGE,
            _ => EXIT_DOMAIN,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let args = match config::expand(std::env::args_os().collect()) {
        Ok(args) => args,
        Err(config::ConfigError::Io(msg)) => return fail(EXIT_IO, &msg),
        Err(config::ConfigError::Syntax(msg)) => return fail(EXIT_USAGE, &msg),
    };
    let cli = Cli::parse_from(args);
    let result = match cli.command {
        Command::Exponents(a) => exponents(a),
        Command::Pliss(a) => pliss(a),
        Command::Constants(a) => constants(a),
        Command::CpScan(a) => cp_scan(a),
        Command::ReportDiff(a) => report_diff(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => fail(f.code, &f.message),
    }
}

fn fail(code: u8, message: &str) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

struct ExponentRow {
    x0: f64,
    y0: f64,
    est: LyapunovEstimate,
    splitting: &'static str,
}

fn exponents(args: ExponentsArgs) -> Result<u8, Failure> {
    let map = args.map.descriptor()?;
    if args.samples == 0 {
        return Err(Failure::usage("--samples must be positive"));
    }
    if args.n < 2 {
        return Err(Failure::usage("--n must be at least 2"));
    }
    let pool = args.threads.pool()?;
    let points = sample_points(args.samples, args.seed);
    let rows = pool.install(|| {
        points
            .par_iter()
            .map(|&p| -> Result<ExponentRow, Error> {
                let est = ftle(&map, p, args.n)?;
                let splitting = match oseledets_directions(&map, p, args.window) {
                    Ok(_) => "ok",
                    Err(Error::DegenerateSplitting { .. }) => "DegenerateSplitting",
                    Err(e) => return Err(e),
                };
                Ok(ExponentRow {
                    x0: p.x,
                    y0: p.y,
                    est,
                    splitting,
                })
            })
            .collect::<Result<Vec<_>, _>>()
    })?;

    println!(
        "{:>6} {:>12} {:>12} {:>14} {:>14} {:>12}  splitting",
        "sample", "x0", "y0", "lambda_u", "lambda_s", "residual"
    );
    for (i, r) in rows.iter().enumerate() {
        println!(
            "{:>6} {:>12.10} {:>12.10} {:>14.10} {:>14.10} {:>12.3e}  {}",
            i, r.x0, r.y0, r.est.lambda_u, r.est.lambda_s, r.est.residual, r.splitting
        );
    }
    let count = rows.len() as f64;
    let mean = |f: fn(&ExponentRow) -> f64| rows.iter().map(f).sum::<f64>() / count;
    println!(
        "mean lambda_u={:.10} lambda_s={:.10} residual={:.3e}",
        mean(|r| r.est.lambda_u),
        mean(|r| r.est.lambda_s),
        mean(|r| r.est.residual)
    );

    if let Some(path) = &args.csv {
        let mut text = String::from("sample_id,x0,y0,lambda_u,lambda_s,residual,splitting\n");
        for (i, r) in rows.iter().enumerate() {
            let _ = writeln!(
                text,
                "{i},{},{},{},{},{},{}",
                r.x0, r.y0, r.est.lambda_u, r.est.lambda_s, r.est.residual, r.splitting
            );
        }
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| Failure::io(parent, e))?;
        }
        fs::write(path, text).map_err(|e| Failure::io(path, e))?;
    }
    Ok(0)
}

fn parse_sequence(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Failure::usage(format!("not a number: `{s}`")))
        })
        .collect()
}

fn pliss(args: PlissArgs) -> Result<u8, Failure> {
    let seq = match (&args.seq, &args.input) {
        (Some(s), None) => parse_sequence(s)?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
            parse_sequence(&text)?
        }
        _ => return Err(Failure::usage("give exactly one of --seq or --input")),
    };
    let times = pliss_times(&seq, args.alpha3)?;
    let list: Vec<String> = times.iter().map(usize::to_string).collect();
    println!("times={}", list.join(","));
    println!(
        "count={} length={} density={:.10}",
        times.len(),
        seq.len(),
        times.len() as f64 / seq.len() as f64
    );
    if let (Some(a1), Some(a2)) = (args.alpha1, args.alpha2) {
        let bound = density_bound(&PlissParams::new(a1, a2, args.alpha3)?)?;
        println!("bound={bound:.10}");
    }
    Ok(0)
}

fn scheduled(
    map: &MapDescriptor,
    t: f64,
    s: Option<f64>,
    grid: usize,
) -> Result<CPConstants, Failure> {
    let bounds = map.estimate_bounds(grid)?;
    Ok(schedule_constants(&SchedulerInput {
        t,
        s,
        bounds,
        iterate: map.iterate,
    })?)
}

fn constants(args: ConstantsArgs) -> Result<u8, Failure> {
    let map = args.map.descriptor()?;
    let c = scheduled(&map, args.t, args.s, args.grid)?;
    let (lo, hi) = s_interval(args.t);
    let b = c.provenance.bounds;
    if args.json {
        let value = serde_json::json!({
            "map": map,
            "bounds": b,
            "s_interval": [lo, hi],
            "t": args.t,
            "s": c.s,
            "delta_t": c.delta_t,
            "sigma": c.sigma,
            "rho": c.rho,
            "sigma_t1": c.sigma_t1,
            "sigma_t2": c.sigma_t2,
            "rho_t1": c.rho_t1,
            "rho_t2": c.rho_t2,
            "eta": c.eta,
            "side_margins": c.side_margins,
            "pliss_lower_bound": c.pliss_lower_bound(),
        });
        println!(
            "{}",
            serde_json::to_string_pretty(&value).expect("json value")
        );
        return Ok(0);
    }
    println!("map        {}", map.label());
    println!(
        "bounds     alpha={:.10} beta={:.10} r={:.10} grid={}",
        b.alpha, b.beta, b.r_estimate, b.grid_density
    );
    println!("t          {}", args.t);
    println!("s          {:.10}  interval ({lo:.5}, {hi:.5})", c.s);
    println!("delta_t    {:.10}", c.delta_t);
    println!("sigma      {:.10}", c.sigma);
    println!("rho        {:.10}", c.rho);
    println!("sigma_t1   {:.10}", c.sigma_t1);
    println!("sigma_t2   {:.10}", c.sigma_t2);
    println!("rho_t1     {:.10}", c.rho_t1);
    println!("rho_t2     {:.10}", c.rho_t2);
    println!("eta        {:.10}", c.eta);
    println!(
        "margins    {:.10} {:.10}",
        c.side_margins[0], c.side_margins[1]
    );
    println!("bound      {:.10}", c.pliss_lower_bound());
    Ok(0)
}

fn cp_scan(args: ScanArgs) -> Result<u8, Failure> {
    let map = args.map.descriptor()?;
    let config = ScanConfig {
        map,
        samples: args.samples,
        orbit_length: args.orbit,
        window: args.window,
        horizon: args.horizon,
        t: args.t,
        s: args.s,
        delta: args.delta,
        seed: args.seed,
        grid_density: args.grid,
    };
    let pool = args.threads.pool()?;
    let report = pool.install(|| run_scan(&config))?;
    write_report(&report, &args.out)?;
    let echo_path = args.out.join(CONFIG_ECHO);
    fs::write(&echo_path, args.echo()).map_err(|e| Failure::io(&echo_path, e))?;

    let d = &report.diagnostics;
    let mut diag = format!(
        "diagnostics evaluated={} cp_points={} angle_checks={} angle_violations={}",
        d.evaluated, d.cp_points, d.angle_checks, d.angle_violations
    );
    if let Some(l) = d.lyapunov {
        let _ = write!(
            diag,
            " lambda_u={} lambda_s={} residual={}",
            l.lambda_u, l.lambda_s, l.residual
        );
    }
    eprintln!("{diag}");

    let hypothesis = if report.hypothesis_ok { "ok" } else { "fail" };
    println!(
        "mu_cp={:?} bound={:?} hypothesis={} clusters={}",
        report.mu_cp, report.paper_lower_bound, hypothesis, report.cluster_count
    );
    if report.hypothesis_ok && report.mu_cp == 0.0 {
        eprintln!("warning: hypothesis holds but no CP points were found");
        return Ok(EXIT_RED_FLAG);
    }
    Ok(0)
}

fn report_diff(args: DiffArgs) -> Result<u8, Failure> {
    let a = diff::load(&args.a).map_err(|(code, msg)| Failure { code, message: msg })?;
    let b = diff::load(&args.b).map_err(|(code, msg)| Failure { code, message: msg })?;
    let differences = diff::compare(&a, &b, args.tol);
    if differences.is_empty() {
        println!("identical");
        return Ok(0);
    }
    for d in &differences {
        println!("{d}");
    }
    println!("{} difference(s)", differences.len());
    Ok(EXIT_RED_FLAG)
}
