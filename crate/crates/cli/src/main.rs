use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use summa_core::battery::{self, ExperimentConfig};
use summa_core::ergodic::{self, Observable, SystemSpec};
use summa_core::fourier::{self, CircleGrid, SampledCircleFunction};
use summa_core::maximal::{self, GridFunction};
use summa_core::metric::{self, UltrametricSpace};
use summa_core::operator::{self, NormPairing, OperatorMatrix};
use summa_core::series::{self, AbelConfig, Method, SeriesSpec, SummabilityReport};
use summa_core::{Check, Error, Execution, Report, RunResult};

const AFTER_HELP: &str = "\
Exit status: 0 all checks passed, 1 a check failed, 2 usage or config error, 3 I/O error.

Output: with --out DIR the run writes DIR/report.json (deterministic for a
given config and seed) and DIR/metadata.json (timestamp, wall clock). Without
--out the report JSON goes to stdout. --csv also writes one DIR/<report>.csv
per report that has traces, columns in alphabetical order, floats with 17
significant digits.";

#[derive(Parser)]
#[command(name = "summa", version, about = "Summability, maximal-function and ergodic-average experiments", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON input file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for randomized trials; overrides the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for report.json, metadata.json and CSV traces.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Also write CSV traces (requires --out).
    #[arg(long)]
    csv: bool,
    /// Print nothing on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Classical, Cesàro and Abel sums of a series.
    ///
    /// Config: {"series": {"kind": "geometric", "a": [-1, 0]}, "method": "cesaro",
    /// "n": 1000, "tol": 1e-6, "r_grid": [0.9, 0.99, 0.999], "n_terms": 200000}.
    /// "method" may be omitted to try all three.
    /// CSV sum-<method>.csv: im, k, re (partial sums, Cesàro means or Abel evaluations).
    Sum(Common),
    /// Gelfand spectral-radius estimate of a matrix.
    ///
    /// Config: {"matrix": [[[re, im], ...], ...], "n_max": 256,
    /// "pairing": {"domain": "inf", "codomain": "inf"}}.
    /// CSV spectral.csv: k, gelfand.
    Spectral(Common),
    /// Weak-type and L^p checks for the discrete maximal function.
    ///
    /// Config: {"function": {"lo": 0, "values": [[1, 0], [0.5, 0]]},
    /// "lambdas": [0.1, 0.5], "ps": [1.5, 2, 3]}.
    /// CSV weak-type.csv: bound, lambda, level_set_size; maximal.csv: f_star, j.
    Maximal(Common),
    /// Fejér means of a sampled function on the circle.
    ///
    /// Config: {"m": 2048, "function": "abs-sin" | "square" | "sawtooth",
    /// "values": [..m reals..], "ns": [16, 64, 256], "tol": 0.02}.
    /// Either "function" or "values" is required.
    /// CSV fejer.csv: n, sup_error.
    Fourier(Common),
    /// Birkhoff averages and the weighted power-tail check.
    ///
    /// Config: {"system": <shift or finite system>, "observable": <cylinder or table>,
    /// "n": 1000, "points": 100, "p": 2}.
    /// CSV birkhoff.csv: deviation.
    Ergodic(Common),
    /// Box-counting dimension and ball structure of a sequence space.
    ///
    /// Config: {"space": {"alphabet": 2, "rho": 0.5, "depth": 17},
    /// "a": 1.0, "depths": [8, 16], "tol": 0.05, "trials": 200}.
    /// CSV box-dimension.csv: log_inv_r, log_n.
    Metric(Common),
    /// Named experiment batteries.
    #[command(subcommand)]
    Battery(BatteryCommand),
}

#[derive(Subcommand)]
enum BatteryCommand {
    /// Run a battery by name or from a config {"battery", "seed", "params", "out"}.
    ///
    /// CSV columns per battery are listed by `battery list --csv-columns`.
    Run {
        /// Battery name; may come from the config instead.
        name: Option<String>,
        /// Run trials on one thread.
        #[arg(long)]
        sequential: bool,
        #[command(flatten)]
        common: Common,
    },
    /// List batteries whose name or module starts with PREFIX.
    List {
        prefix: Option<String>,
        /// Also show the CSV files and columns each battery writes.
        #[arg(long)]
        csv_columns: bool,
    },
}

enum Failure {
    Usage(String),
    Io(String),
    Compute(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Consistency { .. } | Error::NonConvergence(_) => Failure::Compute(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Io(m)) => {
            eprintln!("I/O error: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Compute(m)) => {
            eprintln!("computation failed: {m}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode, Failure> {
    match cmd {
        Command::Battery(BatteryCommand::List {
            prefix,
            csv_columns,
        }) => {
            let mut out = String::new();
            for b in battery::list_batteries(prefix.as_deref().unwrap_or("")) {
                out.push_str(&format!("{:<20} {:<9} {}\n", b.name, b.module, b.summary));
                if csv_columns {
                    out.push_str(&format!("{:<20} csv: {}\n", "", b.csv));
                }
            }
            print!("{out}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Battery(BatteryCommand::Run {
            name,
            sequential,
            common,
        }) => run_battery(name, sequential, &common),
        Command::Sum(c) => single(&c, "sum", sum),
        Command::Spectral(c) => single(&c, "spectral", spectral),
        Command::Maximal(c) => single(&c, "maximal", maximal_cmd),
        Command::Fourier(c) => single(&c, "fourier", fourier_cmd),
        Command::Ergodic(c) => single(&c, "ergodic", ergodic_cmd),
        Command::Metric(c) => single(&c, "metric", metric_cmd),
    }
}

fn read_config(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn run_battery(
    name: Option<String>,
    sequential: bool,
    common: &Common,
) -> Result<ExitCode, Failure> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::from_json(&read_config(path)?)?,
        None => {
            let name = name
                .clone()
                .ok_or_else(|| Failure::Usage("battery name or --config required".into()))?;
            ExperimentConfig::new(name)
        }
    };
    if let Some(n) = name {
        if common.config.is_some() && n != cfg.battery {
            return Err(Failure::Usage(format!(
                "name `{n}` disagrees with config battery `{}`",
                cfg.battery
            )));
        }
        cfg.battery = n;
    }
    cfg.validate()?;
    let out = common.out.clone().or(cfg.out.clone());
    check_out(common, out.as_deref())?;
    let seed = common.seed.or(cfg.seed).unwrap_or(battery::DEFAULT_SEED);
    let exec = if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let started = Instant::now();
    let result = battery::run_with(&cfg.battery, &cfg.params, seed, exec)?;
    finish(common, out.as_deref(), &result, started, exec)
}

fn check_out(common: &Common, out: Option<&Path>) -> Result<(), Failure> {
    if common.csv && out.is_none() {
        return Err(Failure::Usage(
            "--csv needs an output directory (--out)".into(),
        ));
    }
    Ok(())
}

/// Parse a subcommand config, naming the offending field on failure.
fn parse<T: DeserializeOwned>(text: &str) -> Result<T, Failure> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Failure::Usage(format!("invalid config at `{path}`: {}", e.into_inner()))
    })
}

type Single = fn(&str, u64) -> Result<(Value, Vec<Report>), Failure>;

fn single(common: &Common, name: &str, body: Single) -> Result<ExitCode, Failure> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Failure::Usage(format!("`{name}` needs --config <path.json>")))?;
    let text = read_config(path)?;
    check_out(common, common.out.as_deref())?;
    let seed = common.seed.unwrap_or(battery::DEFAULT_SEED);
    let started = Instant::now();
    let (params, reports) = body(&text, seed)?;
    let result = RunResult::new(name, seed, reports).with_params(params);
    finish(
        common,
        common.out.as_deref(),
        &result,
        started,
        Execution::default(),
    )
}

fn finish(
    common: &Common,
    out: Option<&Path>,
    result: &RunResult,
    started: Instant,
    exec: Execution,
) -> Result<ExitCode, Failure> {
    let elapsed = started.elapsed().as_secs_f64();
    let report = serde_json::to_string_pretty(result).expect("reports serialize") + "\n";
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            write_atomic(&dir.join("report.json"), &report)?;
            let stamp = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            let meta = json!({
                "battery": result.battery,
                "seed": result.seed,
                "started_unix": stamp,
                "wall_clock_seconds": elapsed,
                "execution": if exec.is_parallel() { "parallel" } else { "sequential" },
                "version": env!("CARGO_PKG_VERSION"),
            });
            write_atomic(
                &dir.join("metadata.json"),
                &(serde_json::to_string_pretty(&meta).unwrap() + "\n"),
            )?;
            if common.csv {
                for r in result.reports.iter().filter(|r| !r.traces.is_empty()) {
                    write_atomic(&dir.join(format!("{}.csv", r.name)), &r.traces_csv())?;
                }
            }
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(report.as_bytes())
                .map_err(|e| Failure::Io(format!("stdout: {e}")))?;
        }
    }
    if !common.quiet {
        summarize(result, elapsed);
    }
    Ok(if result.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn summarize(result: &RunResult, elapsed: f64) {
    let mut err = io::stderr().lock();
    for r in &result.reports {
        for c in &r.checks {
            let _ = writeln!(
                err,
                "{} {}/{}: observed {:.16e}, claimed {:.16e}",
                if c.pass { "PASS" } else { "FAIL" },
                r.name,
                c.name,
                c.observed,
                c.claimed
            );
        }
    }
    let failures = result.failures().len();
    let _ = writeln!(
        err,
        "{}: {} checks, {} failed, seed {}, {:.2}s",
        result.battery,
        result.checks().count(),
        failures,
        result.seed,
        elapsed
    );
}

/// Write to a temporary file in the target directory, then rename over the
/// destination so readers never see a partial file.
fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(dir, e))?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| io_err(path, e))?;
    tmp.as_file().sync_all().map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

fn to_value<T: serde::Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("serializable")
}

fn trace_rows(rep: &SummabilityReport) -> Report {
    let mut r = Report::new(format!(
        "sum-{}",
        to_value(&rep.method).as_str().unwrap_or("method")
    ));
    let vals = &rep.trace.values;
    r.trace("k", (0..vals.len()).map(|k| k as f64).collect())
        .trace("re", vals.iter().map(|z| z.re).collect())
        .trace("im", vals.iter().map(|z| z.im).collect());
    if let Some(e) = rep.estimate {
        r.value("estimate_re", e.re).value("estimate_im", e.im);
    }
    r.value("divergent", if rep.divergent() { 1.0 } else { 0.0 });
    for (k, v) in &rep.values {
        r.value(k.clone(), *v);
    }
    r
}

#[derive(Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields)]
struct SumInput {
    series: SeriesSpec,
    #[serde(default)]
    method: Option<Method>,
    #[serde(default = "default_n")]
    n: usize,
    #[serde(default = "default_tol")]
    tol: f64,
    #[serde(default = "default_r_grid")]
    r_grid: Vec<f64>,
    #[serde(default = "default_n_terms")]
    n_terms: usize,
}

fn default_n() -> usize {
    1000
}
fn default_tol() -> f64 {
    1e-6
}
fn default_r_grid() -> Vec<f64> {
    vec![0.9, 0.99, 0.999]
}
fn default_n_terms() -> usize {
    200_000
}

fn sum(text: &str, _seed: u64) -> Result<(Value, Vec<Report>), Failure> {
    let input: SumInput = parse(text)?;
    let methods = match input.method {
        Some(m) => vec![m],
        None => vec![Method::Classical, Method::Cesaro, Method::Abel],
    };
    let mut reports = Vec::new();
    for m in methods {
        let rep = match m {
            Method::Classical => series::classical_sum(&input.series, input.n, input.tol),
            Method::Cesaro => series::cesaro_sum(&input.series, input.n, input.tol),
            Method::Abel => series::abel_sum(
                &input.series,
                &AbelConfig::new(&input.r_grid, input.n_terms),
            ),
        };
        match rep {
            Ok(rep) => reports.push(trace_rows(&rep)),
            // A single requested method that cannot run is the caller's problem;
            // when trying all three, record why one was skipped.
            Err(e) if input.method.is_none() => {
                let mut r =
                    Report::new(format!("sum-{}", to_value(&m).as_str().unwrap_or("method")));
                r.note(e.to_string());
                reports.push(r);
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok((to_value(&input), reports))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpectralInput {
    matrix: OperatorMatrix,
    #[serde(default = "default_n_max")]
    n_max: usize,
    #[serde(default)]
    pairing: NormPairing,
}

fn default_n_max() -> usize {
    256
}

fn spectral(text: &str, _seed: u64) -> Result<(Value, Vec<Report>), Failure> {
    let input: SpectralInput = parse(text)?;
    let rep = operator::spectral_radius_with(&input.matrix, input.n_max, input.pairing)?;
    let mut r = Report::new("spectral");
    r.check(Check::holds(
        "gelfand estimate within tolerance of eigenvalue radius",
        rep.consistent,
        rep.gelfand_estimate,
    ))
    .check(Check::at_most(
        "submultiplicativity excess",
        rep.submultiplicative_excess,
        1e-10,
    ))
    .value("gelfand_estimate", rep.gelfand_estimate)
    .value("eigen_radius", rep.eigen_radius)
    .value("fekete_inf", rep.fekete_inf)
    .value("tolerance", rep.tolerance)
    .trace("gelfand", rep.gelfand_trace.clone())
    .trace(
        "k",
        (1..=rep.gelfand_trace.len()).map(|k| k as f64).collect(),
    );
    let params = json!({"dim": input.matrix.dim(), "n_max": input.n_max, "pairing": to_value(&input.pairing)});
    Ok((params, vec![r]))
}

#[derive(Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields)]
struct MaximalInput {
    function: GridFunction,
    #[serde(default)]
    lambdas: Option<Vec<f64>>,
    #[serde(default = "default_ps")]
    ps: Vec<f64>,
}

fn default_ps() -> Vec<f64> {
    vec![1.5, 2.0, 3.0]
}

fn maximal_cmd(text: &str, _seed: u64) -> Result<(Value, Vec<Report>), Failure> {
    let input: MaximalInput = parse(text)?;
    let f = GridFunction::new(input.function.lo, input.function.values.clone())?;
    let lambdas = match &input.lambdas {
        Some(l) => l.clone(),
        None => {
            let top = f.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
            maximal::log_grid(top / 1000.0, top, 20)
        }
    };
    let mut reports = vec![maximal::weak_type_report(&f, &lambdas)?];
    for &p in &input.ps {
        let mut r = maximal::lp_bound_report(&f, p)?;
        r.name = format!("lp-bound-p{p}");
        reports.push(r);
    }
    let oracle = maximal::MaximalOracle::new(&f);
    let mut m = Report::new("maximal");
    let js: Vec<i64> = (f.lo..=f.hi()).collect();
    m.trace("j", js.iter().map(|&j| j as f64).collect())
        .trace("f_star", js.iter().map(|&j| oracle.value(j)).collect());
    reports.push(m);
    Ok((to_value(&input), reports))
}

#[derive(Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields)]
struct FourierInput {
    #[serde(default = "default_m")]
    m: usize,
    #[serde(default)]
    function: Option<String>,
    #[serde(default)]
    values: Option<Vec<f64>>,
    #[serde(default = "default_ns")]
    ns: Vec<usize>,
    #[serde(default = "default_fejer_tol")]
    tol: f64,
}

fn default_m() -> usize {
    2048
}
fn default_ns() -> Vec<usize> {
    vec![16, 64, 256]
}
fn default_fejer_tol() -> f64 {
    0.02
}

fn fourier_cmd(text: &str, _seed: u64) -> Result<(Value, Vec<Report>), Failure> {
    let input: FourierInput = parse(text)?;
    let grid = CircleGrid::new(input.m)?;
    let f = match (&input.function, &input.values) {
        (Some(name), None) => {
            let g: fn(f64) -> f64 = match name.as_str() {
                "abs-sin" => |t| t.sin().abs(),
                "square" => |t| if t < std::f64::consts::PI { 1.0 } else { -1.0 },
                "sawtooth" => |t| t / std::f64::consts::PI - 1.0,
                other => {
                    return Err(Failure::Usage(format!(
                        "invalid config at `function`: unknown preset `{other}` (abs-sin, square, sawtooth)"
                    )))
                }
            };
            SampledCircleFunction::from_real(grid, g)
        }
        (None, Some(v)) => SampledCircleFunction::new(grid, v.iter().map(|&x| x.into()).collect())?,
        _ => {
            return Err(Failure::Usage(
                "invalid config at `function`: give exactly one of `function` or `values`".into(),
            ))
        }
    };
    let rep = fourier::fejer_report(&f, &input.ns, input.tol)?;
    Ok((to_value(&input), vec![rep]))
}

#[derive(Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields)]
struct ErgodicInput {
    system: SystemSpec,
    observable: Observable,
    #[serde(default = "default_n")]
    n: usize,
    #[serde(default = "default_points")]
    points: usize,
    #[serde(default = "default_p")]
    p: f64,
}

fn default_points() -> usize {
    100
}
fn default_p() -> f64 {
    2.0
}

fn ergodic_cmd(text: &str, seed: u64) -> Result<(Value, Vec<Report>), Failure> {
    let input: ErgodicInput = parse(text)?;
    let birkhoff = match (&input.system, &input.observable) {
        (SystemSpec::Shift(sys), Observable::Cylinder(f)) => {
            let pts = ergodic::sample_points(sys, input.points, seed);
            ergodic::birkhoff_shift(sys, f, input.n, &pts)?
        }
        (SystemSpec::Finite(sys), Observable::Table(f)) => ergodic::birkhoff_finite(sys, f, input.n)?,
        _ => {
            return Err(Failure::Usage(
                "invalid config at `observable`: shift systems take cylinder functions, finite systems take tables".into(),
            ))
        }
    };
    let tail = ergodic::power_tail_check(&input.system, &input.observable, input.p, input.n, seed)?;
    Ok((to_value(&input), vec![birkhoff.report, tail]))
}

#[derive(Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields)]
struct MetricInput {
    space: UltrametricSpace,
    #[serde(default = "default_a")]
    a: f64,
    #[serde(default)]
    depths: Option<(usize, usize)>,
    #[serde(default = "default_dim_tol")]
    tol: f64,
    #[serde(default = "default_trials")]
    trials: usize,
}

fn default_a() -> f64 {
    1.0
}
fn default_dim_tol() -> f64 {
    0.05
}
fn default_trials() -> usize {
    200
}

fn metric_cmd(text: &str, seed: u64) -> Result<(Value, Vec<Report>), Failure> {
    let input: MetricInput = parse(text)?;
    let (lo, hi) = input
        .depths
        .unwrap_or((1, input.space.depth.saturating_sub(1)));
    let mut reports = vec![metric::dimension_report(
        &input.space,
        input.a,
        lo..=hi,
        input.tol,
    )?];
    reports.push(metric::ball_trichotomy_check(
        &input.space,
        input.trials,
        seed,
    ));
    reports.push(metric::doubling_constant(&input.space, input.trials, seed));
    Ok((to_value(&input), reports))
}
