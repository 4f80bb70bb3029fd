//! Named experiment batteries.
//!
//! A battery is a fixed experiment with a small parameter struct. Parameters
//! arrive as JSON, are validated before anything runs, and are echoed back
//! in the [`RunResult`] with defaults filled in. Independent trials draw from
//! [`trial_rng`] so results do not depend on the execution strategy.

use std::path::PathBuf;

use nalgebra::DMatrix;
use rand::Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::complex::{cis, lenient, trial_rng, I, ONE};
use crate::ergodic::{self, ShiftSystem, TRANSFERENCE_PS};
use crate::fourier::{self, CircleGrid, SampledCircleFunction};
use crate::linalg::Vector;
use crate::maximal::{self, Ball, Line, Plane};
use crate::metric::{self, UltrametricSpace};
use crate::operator::{self, NormPairing, OperatorMatrix};
use crate::series::{self, AbelConfig, SeriesSpec};
use crate::{Check, Error, Execution, Report, Result, RunResult, C64};

/// Registry entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BatteryInfo {
    pub name: &'static str,
    pub module: &'static str,
    pub summary: &'static str,
    /// CSV files written with `--csv`, one per report; columns are in
    /// alphabetical order.
    pub csv: &'static str,
}

/// Every battery, sorted by name.
pub const BATTERIES: &[BatteryInfo] = &[
    BatteryInfo {
        name: "abel-extrapolation",
        module: "series",
        summary: "Abel sums of (-1)^j, (j+1)(-1)^j and 2^-j by extrapolation in 1 - r",
        csv: "abel.csv: r, value_geometric_minus_one",
    },
    BatteryInfo {
        name: "birkhoff-bernoulli",
        module: "ergodic",
        summary: "Birkhoff averages of the coordinate function on the Bernoulli(1/2) shift",
        csv: "birkhoff.csv: deviation (one row per sampled point)",
    },
    BatteryInfo {
        name: "box-dimension",
        module: "metric",
        summary: "box-counting dimension of binary sequence space, plain and snowflaked",
        csv: "box-dimension.csv, box-dimension-snowflake.csv: log_inv_r, log_n",
    },
    BatteryInfo {
        name: "cauchy-abel",
        module: "series",
        summary: "Abel sum of a Cauchy product equals the product of the Abel sums",
        csv: "cauchy-abel.csv: error (one row per random pair)",
    },
    BatteryInfo {
        name: "cesaro-geometric",
        module: "series",
        summary: "Cesaro means of sum a^j against 1/(1-a) and the rate 4/((n+1)|1-a|^2)",
        csv: "cesaro-geometric.csv: bound_a<k>, error_a<k> for each a, one row per n",
    },
    BatteryInfo {
        name: "counting-shift",
        module: "ergodic",
        summary: "shift averages of a point mass under counting measure keep L1 mass 1",
        csv: "counting-shift.csv: l1_mass, n, sup_norm",
    },
    BatteryInfo {
        name: "covering",
        module: "maximal",
        summary:
            "multiplicity-two interval subcovers and Vitali selections on line, plane, ultrametric",
        csv: "intervals.csv: kept, multiplicity; vitali-*.csv: selected",
    },
    BatteryInfo {
        name: "fejer",
        module: "fourier",
        summary: "Fejer means of |sin| converge uniformly; Fejer mean of z is (n/(n+1))z",
        csv: "fejer.csv: n, sup_error",
    },
    BatteryInfo {
        name: "krylov-bogolyubov",
        module: "ergodic",
        summary:
            "averaged push-forwards of a measure are nearly invariant, exactly so on full periods",
        csv: "krylov-bogolyubov.csv: bound, defect, n",
    },
    BatteryInfo {
        name: "lp-bound",
        module: "maximal",
        summary: "sum f*^p <= 4p 2^(p-1)/(p-1) sum |f|^p on grid functions and the Bernoulli shift",
        csv: "lp-bound.csv: observed_ratio_p<p>, upper_ratio_p<p> for each p, one row per input",
    },
    BatteryInfo {
        name: "mean-ergodic",
        module: "operator",
        summary:
            "averages of cyclic permutations converge to the orbit mean at rate 2|v| size/(n+1)",
        csv: "mean-ergodic.csv: bound, error, n, size",
    },
    BatteryInfo {
        name: "neumann",
        module: "operator",
        summary:
            "Neumann-series inverses of I - a with residual and tail bound, nilpotent a exactly",
        csv: "neumann.csv: dim, error, n_terms, residual, tail_bound",
    },
    BatteryInfo {
        name: "operator-average",
        module: "operator",
        summary: "|A_n| <= 2|(I-x)^-1|/(n+1) for unitary x, double averages tend to (I-x)^-1",
        csv: "operator-average.csv: envelope, n, worst_average_ratio, worst_double_ratio",
    },
    BatteryInfo {
        name: "spectral-radius",
        module: "operator",
        summary: "Gelfand estimate |x^n|^(1/n) against the largest eigenvalue modulus",
        csv: "spectral-radius.csv: dim, eigen_radius, gelfand_estimate",
    },
    BatteryInfo {
        name: "ultrametric-balls",
        module: "metric",
        summary: "ball trichotomy, doubling constants and snowflake distances in sequence space",
        csv: "no traces",
    },
    BatteryInfo {
        name: "weak-type",
        module: "maximal",
        summary: "|{f* > lambda}| lambda <= 2 sum |f| on grid functions and the Bernoulli shift",
        csv: "weak-type.csv: worst_ratio (one row per input)",
    },
];

/// Batteries whose name or module starts with `prefix`, sorted by name.
pub fn list_batteries(prefix: &str) -> Vec<&'static BatteryInfo> {
    BATTERIES
        .iter()
        .filter(|b| b.name.starts_with(prefix) || b.module.starts_with(prefix))
        .collect()
}

pub fn lookup(name: &str) -> Result<&'static BatteryInfo> {
    BATTERIES
        .iter()
        .find(|b| b.name == name)
        .ok_or_else(|| Error::UnknownBattery(name.to_string()))
}

/// A battery run as read from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub battery: String,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Battery parameters; missing fields take their defaults.
    #[serde(default)]
    pub params: Value,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(battery: impl Into<String>) -> Self {
        ExperimentConfig {
            battery: battery.into(),
            seed: None,
            params: Value::Null,
            out: None,
        }
    }

    /// Parse and validate, including the battery's own parameters.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig =
            serde_path_to_error::deserialize(de).map_err(|e| schema_error("", e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        dispatch(&self.battery, &self.params, 0, Execution::Sequential, false).map(|_| ())
    }
}

pub const DEFAULT_SEED: u64 = 0;

/// Run a battery with the default execution strategy.
pub fn run(name: &str, params: &Value, seed: u64) -> Result<RunResult> {
    run_with(name, params, seed, Execution::default())
}

pub fn run_with(name: &str, params: &Value, seed: u64, exec: Execution) -> Result<RunResult> {
    let (resolved, reports) = dispatch(name, params, seed, exec, true)?.expect("run requested");
    Ok(RunResult::new(name, seed, reports).with_params(resolved))
}

type Body<P> = fn(&P, u64, Execution) -> Result<Vec<Report>>;

fn dispatch(
    name: &str,
    params: &Value,
    seed: u64,
    exec: Execution,
    go: bool,
) -> Result<Option<(Value, Vec<Report>)>> {
    lookup(name)?;
    match name {
        "abel-extrapolation" => drive(params, seed, exec, go, abel_extrapolation),
        "birkhoff-bernoulli" => drive(params, seed, exec, go, birkhoff_bernoulli),
        "box-dimension" => drive(params, seed, exec, go, box_dimension),
        "cauchy-abel" => drive(params, seed, exec, go, cauchy_abel),
        "cesaro-geometric" => drive(params, seed, exec, go, cesaro_geometric),
        "counting-shift" => drive(params, seed, exec, go, counting_shift),
        "covering" => drive(params, seed, exec, go, covering),
        "fejer" => drive(params, seed, exec, go, fejer),
        "krylov-bogolyubov" => drive(params, seed, exec, go, krylov_bogolyubov),
        "lp-bound" => drive(params, seed, exec, go, lp_bound),
        "mean-ergodic" => drive(params, seed, exec, go, mean_ergodic),
        "neumann" => drive(params, seed, exec, go, neumann),
        "operator-average" => drive(params, seed, exec, go, operator_average),
        "spectral-radius" => drive(params, seed, exec, go, spectral_radius),
        "ultrametric-balls" => drive(params, seed, exec, go, ultrametric_balls),
        "weak-type" => drive(params, seed, exec, go, weak_type),
        _ => unreachable!("registry and dispatch disagree on {name}"),
    }
}

trait Params: Serialize + DeserializeOwned + Default {
    fn check(&self) -> Result<()>;
}

fn drive<P: Params>(
    params: &Value,
    seed: u64,
    exec: Execution,
    go: bool,
    body: Body<P>,
) -> Result<Option<(Value, Vec<Report>)>> {
    let p: P = if params.is_null() {
        P::default()
    } else {
        serde_path_to_error::deserialize(params).map_err(|e| schema_error("params", e))?
    };
    p.check()?;
    if !go {
        return Ok(None);
    }
    let resolved = serde_json::to_value(&p).expect("parameters serialize");
    Ok(Some((resolved, body(&p, seed, exec)?)))
}

fn schema_error(root: &str, e: serde_path_to_error::Error<serde_json::Error>) -> Error {
    let path = e.path().to_string();
    let field = match (root.is_empty(), path.as_str()) {
        (true, p) => p.to_string(),
        (false, ".") => root.to_string(),
        (false, p) => format!("{root}.{p}"),
    };
    Error::Schema {
        field,
        message: e.into_inner().to_string(),
    }
}

fn bad(field: &str, message: impl Into<String>) -> Error {
    Error::Schema {
        field: format!("params.{field}"),
        message: message.into(),
    }
}

fn at_least_one(field: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(bad(field, "must be at least 1"));
    }
    Ok(())
}

fn collect<T>(items: Vec<Result<T>>) -> Result<Vec<T>> {
    items.into_iter().collect()
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn svd_norm(x: &DMatrix<C64>) -> f64 {
    x.clone().singular_values().max()
}

/// Complex number accepting `{"re", "im"}`, `[re, im]` or a bare real.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Complex(#[serde(with = "lenient")] pub C64);

// ---------------------------------------------------------------- series

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CesaroParams {
    a: Vec<Complex>,
    n: usize,
}

impl Default for CesaroParams {
    fn default() -> Self {
        CesaroParams {
            a: vec![
                Complex(C64::new(-1.0, 0.0)),
                Complex(I),
                Complex(cis(std::f64::consts::TAU / 7.0)),
            ],
            n: 10_000,
        }
    }
}

impl Params for CesaroParams {
    fn check(&self) -> Result<()> {
        at_least_one("n", self.n)?;
        if self.n < series::MIN_TRACE_LEN {
            return Err(bad(
                "n",
                format!("must be at least {}", series::MIN_TRACE_LEN),
            ));
        }
        if self.a.is_empty() {
            return Err(bad("a", "needs at least one ratio"));
        }
        for (k, a) in self.a.iter().enumerate() {
            if a.0.norm() > 1.0 || a.0 == ONE {
                return Err(bad(
                    &format!("a[{k}]"),
                    "ratio must satisfy |a| <= 1 and a != 1",
                ));
            }
        }
        Ok(())
    }
}

/// `|beta_k - 1/(1-a)| = |a (1 - a^{k+1})| / ((k+1) |1-a|^2)`, checked at
/// every `k <= n` against `4/((k+1)|1-a|^2)`.
fn cesaro_geometric(p: &CesaroParams, _seed: u64, exec: Execution) -> Result<Vec<Report>> {
    let runs = collect(exec.map_slice(&p.a, |a| {
        let a = a.0;
        let rep = series::cesaro_sum(&SeriesSpec::geometric(a), p.n, 1e-3)?;
        let target = (ONE - a).inv();
        let gap2 = (ONE - a).norm_sqr();
        let errors: Vec<f64> = rep
            .trace
            .values
            .iter()
            .map(|b| (b - target).norm())
            .collect();
        let bounds: Vec<f64> = (0..=p.n).map(|k| 4.0 / ((k + 1) as f64 * gap2)).collect();
        Ok((a, rep.trace.values[p.n], errors, bounds))
    }))?;
    let mut report = Report::new("cesaro-geometric");
    for (k, (a, beta, errors, bounds)) in runs.into_iter().enumerate() {
        let a = format!("{}{:+}i", a.re, a.im);
        let worst = max_of(errors.iter().zip(&bounds).map(|(e, b)| e / b));
        report
            .check(Check::at_most(
                format!("a = {a}: |beta_n - 1/(1-a)| at n"),
                errors[p.n],
                bounds[p.n],
            ))
            .check(Check::at_most(
                format!("a = {a}: max_k error_k / bound_k"),
                worst,
                1.0,
            ))
            .value(format!("estimate_re_a{k}"), beta.re)
            .value(format!("estimate_im_a{k}"), beta.im)
            .trace(format!("error_a{k}"), errors)
            .trace(format!("bound_a{k}"), bounds);
    }
    Ok(vec![report])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AbelParams {
    n_terms: usize,
}

impl Default for AbelParams {
    fn default() -> Self {
        AbelParams { n_terms: 200_000 }
    }
}

impl Params for AbelParams {
    fn check(&self) -> Result<()> {
        at_least_one("n_terms", self.n_terms)
    }
}

fn abel_extrapolation(p: &AbelParams, _seed: u64, _exec: Execution) -> Result<Vec<Report>> {
    let wide = AbelConfig::new(&[0.9, 0.99, 0.999], p.n_terms);
    // A convergent series has no singularity to straddle, so the grid can
    // hug r = 1 and the extrapolation error shrinks with it.
    let near = AbelConfig::new(&[0.999, 0.9999, 0.99999], p.n_terms.min(20_000));
    let cases = [
        ("(-1)^j", SeriesSpec::geometric(-ONE), &wide, 0.5, 1e-6),
        (
            "(j+1)(-1)^j",
            SeriesSpec::weighted_geometric(-ONE, 1),
            &wide,
            0.25,
            1e-5,
        ),
        (
            "2^-j",
            SeriesSpec::geometric(C64::new(0.5, 0.0)),
            &near,
            2.0,
            1e-9,
        ),
    ];
    let mut report = Report::new("abel");
    for (label, s, cfg, want, tol) in cases {
        let rep = series::abel_sum(&s, cfg)?;
        let est = rep.estimate.expect("abel always reports an estimate");
        report
            .check(Check::close(
                format!("Abel sum of {label}"),
                est.re,
                want,
                tol,
            ))
            .check(Check::at_most(
                format!("imaginary part for {label}"),
                est.im.abs(),
                tol,
            ))
            .value(format!("estimate {label}"), est.re);
        if label == "(-1)^j" {
            report.trace("r", cfg.r_grid.clone());
            report.trace(
                "value_geometric_minus_one",
                rep.trace.values.iter().map(|z| z.re).collect(),
            );
        }
    }
    Ok(vec![report])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CauchyParams {
    pairs: usize,
    max_len: usize,
}

impl Default for CauchyParams {
    fn default() -> Self {
        CauchyParams {
            pairs: 100,
            max_len: 16,
        }
    }
}

impl Params for CauchyParams {
    fn check(&self) -> Result<()> {
        at_least_one("pairs", self.pairs)?;
        at_least_one("max_len", self.max_len)
    }
}

fn random_list(max_len: usize, rng: &mut impl Rng) -> SeriesSpec {
    let len = rng.random_range(1..=max_len);
    SeriesSpec::list(
        (0..len).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))),
    )
}

fn cauchy_abel(p: &CauchyParams, seed: u64, exec: Execution) -> Result<Vec<Report>> {
    let grid = [0.999, 0.9999, 0.99999];
    let errors = collect(exec.map_range(p.pairs, |i| {
        let mut rng = trial_rng(seed, i);
        let a = random_list(p.max_len, &mut rng);
        let b = random_list(p.max_len, &mut rng);
        let n = a.finite_len().unwrap() + b.finite_len().unwrap();
        let cfg = AbelConfig::new(&grid, n);
        let c = series::cauchy_product(&a, &b, n)?;
        let sum = |s: &SeriesSpec| -> Result<C64> {
            Ok(series::abel_sum(s, &cfg)?.estimate.expect("abel estimate"))
        };
        Ok((sum(&c)? - sum(&a)? * sum(&b)?).norm())
    }))?;
    let g = SeriesSpec::geometric(-ONE);
    let single = series::abel_sum(&g, &AbelConfig::new(&[0.9, 0.99, 0.999], 200_000))?
        .estimate
        .expect("abel estimate");
    let square = series::cauchy_product(&g, &g, 8000)?;
    let product = series::abel_sum(&square, &AbelConfig::new(&[0.95, 0.98, 0.99], 8000))?
        .estimate
        .expect("abel estimate");
    let geo_err = (product - single * single).norm();
    let mut report = Report::new("cauchy-abel");
    report
        .check(Check::at_most(
            "random lists: |Abel(c) - Abel(a) Abel(b)|",
            max_of(errors.iter().copied()),
            1e-5,
        ))
        .check(Check::at_most(
            "(-1)^j squared: |Abel(c) - Abel(a)^2|",
            geo_err,
            1e-5,
        ))
        .value("geometric_product_estimate", product.re)
        .trace("error", errors);
    Ok(vec![report])
}

// -------------------------------------------------------------- operator

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct NeumannParams {
    trials: usize,
    max_dim: usize,
    norm: f64,
    tol: f64,
    nilpotent: usize,
}

impl Default for NeumannParams {
    fn default() -> Self {
        NeumannParams {
            trials: 200,
            max_dim: 8,
            norm: 0.9,
            tol: 1e-10,
            nilpotent: 50,
        }
    }
}

impl Params for NeumannParams {
    fn check(&self) -> Result<()> {
        at_least_one("trials", self.trials)?;
        at_least_one("max_dim", self.max_dim)?;
        if !(self.norm > 0.0 && self.norm < 1.0) {
            return Err(bad("norm", "must lie in (0, 1)"));
        }
        if !(self.tol > 0.0) {
            return Err(bad("tol", "must be positive"));
        }
        Ok(())
    }
}

fn neumann(p: &NeumannParams, seed: u64, exec: Execution) -> Result<Vec<Report>> {
    let pairing = NormPairing::INF_INF;
    let rows = collect(exec.map_range(p.trials, |i| {
        let mut rng = trial_rng(seed, i);
        let n = rng.random_range(1..=p.max_dim);
        let a = operator::random::with_norm(n, p.norm, pairing, &mut rng);
        let res = operator::neumann_inverse(&a, pairing, p.tol)?;
        let direct = operator::inverse(&OperatorMatrix::identity(n).sub(&a)).expect("|a| < 1");
        let err = operator::operator_norm(&res.inverse.sub(&direct), pairing)?;
        Ok([
            n as f64,
            res.n_terms as f64,
            res.residual,
            err,
            res.tail_bound,
        ])
    }))?;
    // Strictly upper triangular with integer entries: every product is exact,
    // so the series stops with residual exactly zero.
    let nil = collect(exec.map_range(p.nilpotent, |i| {
        let mut rng = trial_rng(seed ^ 0x6e69_6c70, i);
        let n = rng.random_range(2..=p.max_dim.max(2));
        let rows: Vec<Vec<C64>> = (0..n)
            .map(|r| {
                (0..n)
                    .map(|c| {
                        if c > r {
                            C64::new(rng.random_range(-3..=3) as f64, 0.0)
                        } else {
                            C64::new(0.0, 0.0)
                        }
                    })
                    .collect()
            })
            .collect();
        let a = OperatorMatrix::from_rows(&rows)?;
        let index = (1..=n)
            .find(|&k| a.pow(k).matrix().iter().all(|z| *z == C64::new(0.0, 0.0)))
            .expect("nilpotent");
        let res = operator::neumann_inverse(&a, pairing, f64::MIN_POSITIVE)?;
        Ok((res.residual == 0.0 && res.n_terms < index, res.n_terms))
    }))?;
    let worst_resid = max_of(rows.iter().map(|r| r[2]));
    let worst_excess = max_of(rows.iter().map(|r| r[3] - r[4]));
    let exact = nil.iter().filter(|(ok, _)| *ok).count();
    let mut report = Report::new("neumann");
    report
        .check(Check::at_most("|(I - a) S_n - I|", worst_resid, p.tol))
        .check(Check::at_most(
            "|(I - a)^-1 - S_n| - tail bound",
            worst_excess.max(0.0),
            0.0,
        ))
        .check(Check::holds(
            "nilpotent: exact zero residual before the nilpotency index",
            exact == nil.len(),
            exact as f64,
        ))
        .value("max_terms", max_of(rows.iter().map(|r| r[1])))
        .value(
            "nilpotent_max_terms",
            max_of(nil.iter().map(|r| r.1 as f64)).max(0.0),
        );
    for (k, col) in ["dim", "n_terms", "residual", "error", "tail_bound"]
        .iter()
        .enumerate()
    {
        report.trace(*col, rows.iter().map(|r| r[k]).collect());
    }
    Ok(vec![report])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SpectralParams {
    trials: usize,
    max_dim: usize,
    n_max: usize,
    normal_trials: usize,
    normal_n_max: usize,
}

impl Default for SpectralParams {
    fn default() -> Self {
        SpectralParams {
            trials: 100,
            max_dim: 16,
            n_max: 512,
            normal_trials: 20,
            normal_n_max: 64,
        }
    }
}

impl Params for SpectralParams {
    fn check(&self) -> Result<()> {
        at_least_one("trials", self.trials)?;
        at_least_one("max_dim", self.max_dim)?;
        if self.max_dim > operator::MAX_EIGEN_DIM {
            return Err(bad(
                "max_dim",
                format!(
                    "eigenvalues are computed up to dimension {}",
                    operator::MAX_EIGEN_DIM
                ),
            ));
        }
        for (field, v) in [("n_max", self.n_max), ("normal_n_max", self.normal_n_max)] {
            if v < 8 {
                return Err(bad(field, "must be at least 8"));
            }
        }
        Ok(())
    }
}

/// Relative agreement demanded of `|x^k|^{1/k}` and the spectral radius for
/// normal matrices in the `(2, 2)` norm, where they are equal.
const NORMAL_EQUALITY_TOL: f64 = 1e-9;

fn spectral_radius(p: &SpectralParams, seed: u64, exec: Execution) -> Result<Vec<Report>> {
    let tol = (5.0 / p.n_max as f64).max(1e-2);
    let rows = collect(exec.map_range(p.trials, |i| {
        let mut rng = trial_rng(seed, i);
        let n = rng.random_range(1..=p.max_dim);
        let x = operator::random::gaussian(n, &mut rng);
        let rep = operator::spectral_radius(&x, p.n_max)?;
        Ok([
            n as f64,
            rep.gelfand_estimate,
            rep.eigen_radius,
            rep.submultiplicative_excess,
        ])
    }))?;
    let normal = collect(exec.map_range(p.normal_trials, |i| {
        let mut rng = trial_rng(seed ^ 0x6e6f_726d, i);
        let n = rng.random_range(1..=p.max_dim);
        let radius = rng.random_range(0.5..2.0);
        let x = operator::random::normal(n, radius, &mut rng);
        let rep = operator::spectral_radius_with(&x, p.normal_n_max, NormPairing::TWO_TWO)?;
        Ok(max_of(
            rep.gelfand_trace
                .iter()
                .map(|g| (g - rep.eigen_radius).abs() / rep.eigen_radius),
        ))
    }))?;
    let mut report = Report::new("spectral-radius");
    report
        .check(Check::at_most(
            "|gelfand estimate - eigenvalue radius|",
            max_of(rows.iter().map(|r| (r[1] - r[2]).abs())),
            tol,
        ))
        .check(Check::at_most(
            "submultiplicativity excess",
            max_of(rows.iter().map(|r| r[3])),
            1e-10,
        ))
        .check(Check::at_most(
            "normal matrices: max_k ||x^k|^(1/k) - rho| / rho",
            max_of(normal.iter().copied()).max(0.0),
            NORMAL_EQUALITY_TOL,
        ))
        .value("tolerance", tol);
    for (k, col) in ["dim", "gelfand_estimate", "eigen_radius"]
        .iter()
        .enumerate()
    {
        report.trace(*col, rows.iter().map(|r| r[k]).collect());
    }
    Ok(vec![report])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AverageParams {
    trials: usize,
    max_dim: usize,
    n_max: usize,
    /// Smallest admissible `|1 - lambda|` over the eigenvalues.
    min_gap: f64,
}

impl Default for AverageParams {
    fn default() -> Self {
        AverageParams {
            trials: 50,
            max_dim: 8,
            n_max: 1000,
            min_gap: 1e-2,
        }
    }
}

impl Params for AverageParams {
    fn check(&self) -> Result<()> {
        at_least_one("trials", self.trials)?;
        at_least_one("max_dim", self.max_dim)?;
        at_least_one("n_max", self.n_max)?;
        if !(self.min_gap > 0.0 && self.min_gap < 1.0) {
            return Err(bad("min_gap", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

struct AverageRun {
    average_ratio: Vec<f64>,
    double_ratio: Vec<f64>,
    envelope: Vec<f64>,
    burn_in: usize,
}

/// For unitary `x` with `R = (I - x)^{-1}`: `A_n = (I - x^{n+1}) R/(n+1)` and
/// `D_n - R = -x (I - x^{n+1}) R^2/(n+1)`, so `|A_n| <= 2|R|/(n+1)` and
/// `|D_n - R| <= 2|R|^2/(n+1)` in the 2-norm. The error of `D_n`
/// oscillates; its suffix maximum is the monotone envelope, and the burn-in
/// is the first `n` where that envelope falls below its starting value.
fn average_run(u: &OperatorMatrix, n_max: usize) -> AverageRun {
    let d = u.dim();
    let r = operator::inverse(&OperatorMatrix::identity(d).sub(u)).expect("gap checked");
    let rn = svd_norm(r.matrix());
    let mut average_ratio = Vec::with_capacity(n_max + 1);
    let mut double_ratio = Vec::with_capacity(n_max + 1);
    let mut errors = Vec::with_capacity(n_max + 1);
    operator::walk_operator_averages(u, n_max, |k, avg, dbl| {
        let m = (k + 1) as f64;
        average_ratio.push(svd_norm(avg.matrix()) / (2.0 * rn / m));
        let e = svd_norm(dbl.sub(&r).matrix());
        double_ratio.push(e / (2.0 * rn * rn / m));
        errors.push(e);
    });
    let mut envelope = errors.clone();
    for k in (0..n_max).rev() {
        envelope[k] = envelope[k].max(envelope[k + 1]);
    }
    let burn_in = envelope
        .iter()
        .position(|&e| e < envelope[0])
        .unwrap_or(n_max);
    AverageRun {
        average_ratio,
        double_ratio,
        envelope,
        burn_in,
    }
}

fn gapped_unitary(n: usize, min_gap: f64, rng: &mut impl Rng) -> Result<OperatorMatrix> {
    for _ in 0..1000 {
        let u = operator::random::unitary(n, rng);
        let spec = operator::spectrum_eigenvalues(&u)?;
        if spec.values.iter().all(|z| (ONE - z).norm() >= min_gap) {
            return Ok(u);
        }
    }
    Err(Error::NonConvergence(format!(
        "no unitary with |1 - lambda| >= {min_gap} in 1000 draws"
    )))
}

fn operator_average(p: &AverageParams, seed: u64, exec: Execution) -> Result<Vec<Report>> {
    let runs = collect(exec.map_range(p.trials, |i| {
        let mut rng = trial_rng(seed, i);
        let n = rng.random_range(1..=p.max_dim);
        let u = gapped_unitary(n, p.min_gap, &mut rng)?;
        Ok(average_run(&u, p.n_max))
    }))?;
    let per_n = |f: &dyn Fn(&AverageRun) -> &Vec<f64>| -> Vec<f64> {
        (0..=p.n_max)
            .map(|k| max_of(runs.iter().map(|r| f(r)[k])))
            .collect()
    };
    let avg = per_n(&|r| &r.average_ratio);
    let dbl = per_n(&|r| &r.double_ratio);
    let env = per_n(&|r| &r.envelope);
    let monotone = runs
        .iter()
        .all(|r| r.envelope.windows(2).all(|w| w[1] <= w[0]));
    let final_env = max_of(
        runs.iter()
            .map(|r| r.envelope[p.n_max] / r.envelope[0].max(f64::MIN_POSITIVE)),
    );
    let mut burn: Vec<f64> = runs.iter().map(|r| r.burn_in as f64).collect();
    burn.sort_by(f64::total_cmp);
    let mut report = Report::new("operator-average");
    report
        .check(Check::at_most(
            "max_n |A_n| (n+1) / (2 |(I-x)^-1|)",
            max_of(avg.iter().copied()),
            1.0,
        ))
        .check(Check::at_most(
            "max_n |D_n - (I-x)^-1| (n+1) / (2 |(I-x)^-1|^2)",
            max_of(dbl.iter().copied()),
            1.0,
        ))
        .check(Check::holds(
            "error envelope nonincreasing",
            monotone,
            runs.len() as f64,
        ))
        .check(Check::at_most(
            "envelope at n_max relative to n = 0",
            final_env,
            1.0,
        ))
        .value("burn_in_median", burn[burn.len() / 2])
        .value("burn_in_max", *burn.last().unwrap())
        .trace("n", (0..=p.n_max).map(|k| k as f64).collect())
        .trace("worst_average_ratio", avg)
        .trace("worst_double_ratio", dbl)
        .trace("envelope", env);
    Ok(vec![report])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct MeanErgodicParams {
    max_size: usize,
    ns: Vec<usize>,
    vectors: usize,
}

impl Default for MeanErgodicParams {
    fn default() -> Self {
        MeanErgodicParams {
            max_size: 12,
            ns: vec![100, 1000, 10_000],
            vectors: 4,
        }
    }
}

impl Params for MeanErgodicParams {
    fn check(&self) -> Result<()> {
        at_least_one("max_size", self.max_size)?;
        at_least_one("vectors", self.vectors)?;
        if self.ns.is_empty() {
            return Err(bad("ns", "needs at least one n"));
        }
        Ok(())
    }
}

fn mean_ergodic(p: &MeanErgodicParams, seed: u64, exec: Execution) -> Result<Vec<Report>> {
    let cases: Vec<(usize, usize)> = (1..=p.max_size)
        .flat_map(|k| (0..p.vectors).map(move |j| (k, j)))
        .collect();
    let rows = collect(exec.map_range(cases.len(), |i| {
        let (k, _) = cases[i];
        let mut rng = trial_rng(seed, i);
        let v = Vector::new(
            (0..k)
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        )?;
        let mean = v.entries().iter().sum::<C64>() / k as f64;
        let u = OperatorMatrix::cyclic_permutation(k);
        let mut out = Vec::new();
        for &n in &p.ns {
            let me = operator::mean_ergodic_projection(&u, &v, n)?;
            let off = max_of(me.predicted.entries().iter().map(|z| (z - mean).norm()));
            let bound = 2.0 * v.norm2() * k as f64 / (n + 1) as f64;
            out.push([k as f64, n as f64, me.error, bound, off]);
        }
        Ok(out)
    }))?;
    let rows: Vec<[f64; 5]> = rows.into_iter().flatten().collect();
    let mut report = Report::new("mean-ergodic");
    report
        .check(Check::at_most(
            "max |average_n v - orbit mean| / (2|v| size/(n+1))",
            max_of(rows.iter().map(|r| r[2] / r[3])),
            1.0,
        ))
        .check(Check::at_most(
            "|predicted limit - orbit mean|",
            max_of(rows.iter().map(|r| r[4])),
            1e-10,
        ));
    for (k, col) in ["size", "n", "error", "bound"].iter().enumerate() {
        report.trace(*col, rows.iter().map(|r| r[k]).collect());
    }
    Ok(vec![report])
}

// --------------------------------------------------------------- maximal

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct WeakParams {
    inputs: usize,
    levels: usize,
    max_len: usize,
    /// Largest averaging length for the exhaustive Bernoulli-shift variant.
    transference_n: usize,
    /// Random cylinder functions per averaging length.
    cylinders: usize,
}

impl Default for WeakParams {
    fn default() -> Self {
        WeakParams {
            inputs: 500,
            levels: 20,
            max_len: 64,
            transference_n: 8,
            cylinders: 2,
        }
    }
}

impl Params for WeakParams {
    fn check(&self) -> Result<()> {
        at_least_one("inputs", self.inputs)?;
        at_least_one("levels", self.levels)?;
        at_least_one("max_len", self.max_len)?;
        if self.transference_n > 12 {
            return Err(bad(
                "transference_n",
                "exhaustive enumeration is limited to n <= 12",
            ));
        }
        Ok(())
    }
}

fn levels_for(f: &maximal::GridFunction, k: usize) -> Vec<f64> {
    let top = f.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let bottom = f
        .values
        .iter()
        .map(|z| z.norm())
        .filter(|&x| x > 0.0)
        .fold(f64::INFINITY, f64::min);
    maximal::log_grid(bottom / 4.0, top, k)
}

/// Exhaustive transference reports for `n = 1..=n_max` on Bernoulli(1/2).
fn shift_transference(
    n_max: usize,
    per_n: usize,
    ps: &[f64],
    seed: u64,
    exec: Execution,
) -> Result<Vec<Report>> {
    let sys = ShiftSystem::bernoulli_half(0);
    let cases: Vec<usize> = (1..=n_max)
        .flat_map(|n| std::iter::repeat_n(n, per_n))
        .collect();
    collect(exec.map_range(cases.len(), |i| {
        let mut rng = trial_rng(seed ^ 0x7472_616e, i);
        let f = ergodic::random::cylinder(2, &mut rng);
        ergodic::transference_shift_exhaustive(&sys, &f, cases[i], ps)
    }))
}

fn weak_type(p: &WeakParams, seed: u64, exec: Execution) -> Result<Vec<Report>> {
    let reports = collect(exec.map_range(p.inputs, |i| {
        let f = maximal::random::grid_function(p.max_len, &mut trial_rng(seed, i));
        maximal::weak_type_report(&f, &levels_for(&f, p.levels))
    }))?;
    let ratios: Vec<f64> = reports.iter().map(|r| r.values["worst_ratio"]).collect();
    let shift = shift_transference(p.transference_n, p.cylinders, &[], seed, exec)?;
    let shift_worst = max_of(shift.iter().map(|r| r.values["worst_weak_ratio"])).max(0.0);
    let mut report = Report::new("weak-type");
    report
        .check(Check::at_most(
            "grid functions: |{f* > lambda}| lambda / sum |f|",
            max_of(ratios.iter().copied()),
            maximal::WEAK_CONSTANT,
        ))
        .check(Check::at_most(
            "Bernoulli shift: mu(A* > lambda) lambda / integral |f|",
            shift_worst,
            maximal::WEAK_CONSTANT,
        ))
        .check(Check::holds(
            "every per-input check passes",
            reports.iter().chain(&shift).all(Report::pass),
            (reports.len() + shift.len()) as f64,
        ))
        .value("worst_ratio", max_of(ratios.iter().copied()))
        .value("shift_worst_ratio", shift_worst)
        .trace("worst_ratio", ratios);
    Ok(vec![report])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct LpParams {
    inputs: usize,
    max_len: usize,
    ps: Vec<f64>,
    transference_n: usize,
    cylinders: usize,
}

impl Default for LpParams {
    fn default() -> Self {
        LpParams {
            inputs: 500,
            max_len: 64,
            ps: TRANSFERENCE_PS.to_vec(),
            transference_n: 8,
            cylinders: 2,
        }
    }
}

impl Params for LpParams {
    fn check(&self) -> Result<()> {
        at_least_one("inputs", self.inputs)?;
        at_least_one("max_len", self.max_len)?;
        if self.ps.is_empty() {
            return Err(bad("ps", "needs at least one exponent"));
        }
        for (k, &q) in self.ps.iter().enumerate() {
            if !(q > 1.0 && q.is_finite()) {
                return Err(bad(&format!("ps[{k}]"), "exponents must exceed 1"));
            }
        }
        if self.transference_n > 12 {
            return Err(bad(
                "transference_n",
                "exhaustive enumeration is limited to n <= 12",
            ));
        }
        Ok(())
    }
}

fn lp_bound(p: &LpParams, seed: u64, exec: Execution) -> Result<Vec<Report>> {
    let reports = collect(exec.map_range(p.inputs, |i| {
        let f = maximal::random::grid_function(p.max_len, &mut trial_rng(seed, i));
        p.ps.iter()
            .map(|&q| maximal::lp_bound_report(&f, q))
            .collect::<Result<Vec<_>>>()
    }))?;
    let shift = shift_transference(p.transference_n, p.cylinders, &p.ps, seed, exec)?;
    let mut report = Report::new("lp-bound");
    let mut witness = 0.0f64;
    for (k, &q) in p.ps.iter().enumerate() {
        let observed: Vec<f64> = reports
            .iter()
            .map(|r| r[k].values["observed_ratio"])
            .collect();
        let upper: Vec<f64> = reports.iter().map(|r| r[k].values["upper_ratio"]).collect();
        let shift_ratio = max_of(shift.iter().map(|r| r.values[&format!("lp_ratio_p{q}")]));
        let c = maximal::lp_constant(q);
        witness = witness.max(max_of(observed.iter().copied()));
        report
            .check(Check::at_most(
                format!("p = {q}: grid sum f*^p / sum |f|^p (with tail)"),
                max_of(upper.iter().copied()),
                c,
            ))
            .check(Check::at_most(
                format!("p = {q}: Bernoulli shift integral ratio"),
                shift_ratio,
                c,
            ))
            .value(
                format!("worst_observed_ratio_p{q}"),
                max_of(observed.iter().copied()),
            )
            .value(format!("shift_ratio_p{q}"), shift_ratio)
            .value(format!("constant_p{q}"), c)
            .trace(format!("observed_ratio_p{q}"), observed)
            .trace(format!("upper_ratio_p{q}"), upper);
    }
    report
        .check(Check::holds(
            "non-vacuous: some sum f*^p / sum |f|^p exceeds 1",
            witness > 1.0,
            witness,
        ))
        .check(Check::holds(
            "every per-input check passes",
            reports.iter().flatten().chain(&shift).all(Report::pass),
            (reports.len() * p.ps.len() + shift.len()) as f64,
        ))
        .value("witness_ratio", witness);
    Ok(vec![report])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CoveringParams {
    families: usize,
    max_intervals: usize,
    ball_families: usize,
    max_balls: usize,
    ultrametric_depth: usize,
}

impl Default for CoveringParams {
    fn default() -> Self {
        CoveringParams {
            families: 200,
            max_intervals: 30,
            ball_families: 200,
            max_balls: 40,
            ultrametric_depth: 12,
        }
    }
}

impl Params for CoveringParams {
    fn check(&self) -> Result<()> {
        at_least_one("families", self.families)?;
        at_least_one("max_intervals", self.max_intervals)?;
        at_least_one("ball_families", self.ball_families)?;
        at_least_one("max_balls", self.max_balls)?;
        at_least_one("ultrametric_depth", self.ultrametric_depth)
    }
}

/// Independent sweep over open intervals: endpoints sorted with closings
/// before openings at ties, since `(a, b)` and `(b, c)` share no point.
/// Returns the maximum overlap and the union as maximal open intervals.
fn sweep(intervals: &[(f64, f64)]) -> (usize, Vec<(f64, f64)>) {
    let mut events: Vec<(f64, i32)> = intervals
        .iter()
        .flat_map(|&(a, b)| [(a, 1), (b, -1)])
        .collect();
    events.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let (mut depth, mut best) = (0i32, 0i32);
    let mut union = Vec::new();
    let mut start = 0.0;
    for (x, d) in events {
        if depth == 0 && d > 0 {
            start = x;
        }
        depth += d;
        best = best.max(depth);
        if depth == 0 {
            union.push((start, x));
        }
    }
    (best as usize, union)
}

fn covering(p: &CoveringParams, seed: u64, exec: Execution) -> Result<Vec<Report>> {
    let intervals = exec.map_range(p.families, |i| {
        let fam = maximal::random::interval_family(p.max_intervals, &mut trial_rng(seed, i));
        let red = maximal::covering_reduce_multiplicity(&fam);
        let kept: Vec<(f64, f64)> = red.kept.iter().map(|&k| fam.intervals()[k]).collect();
        let (mult, union) = sweep(&kept);
        let (_, original) = sweep(fam.intervals());
        (
            mult,
            union == original,
            red.multiplicity == mult && red.union_preserved,
            kept.len(),
        )
    });
    let mut ireport = Report::new("intervals");
    ireport
        .check(Check::at_most(
            "multiplicity (sweep)",
            intervals.iter().map(|r| r.0).max().unwrap_or(0) as f64,
            2.0,
        ))
        .check(Check::holds(
            "union preserved exactly (sweep)",
            intervals.iter().all(|r| r.1),
            intervals.len() as f64,
        ))
        .check(Check::holds(
            "library and sweep agree",
            intervals.iter().all(|r| r.2),
            intervals.len() as f64,
        ))
        .trace("kept", intervals.iter().map(|r| r.3 as f64).collect())
        .trace(
            "multiplicity",
            intervals.iter().map(|r| r.0 as f64).collect(),
        );

    let line = collect(exec.map_range(p.ball_families, |i| {
        let mut rng = trial_rng(seed ^ 0x6c69_6e65, i);
        let balls: Vec<Ball<f64>> = (0..rng.random_range(1..=p.max_balls))
            .map(|_| Ball {
                center: rng.random_range(0.0..20.0),
                radius: rng.random_range(0.05..3.0),
            })
            .collect();
        let sel = maximal::vitali_select(&Line, &balls)?;
        Ok(maximal::vitali_report(&Line, &balls, &sel))
    }))?;
    let plane = collect(exec.map_range(p.ball_families, |i| {
        let mut rng = trial_rng(seed ^ 0x706c_616e, i);
        let balls: Vec<Ball<[f64; 2]>> = (0..rng.random_range(1..=p.max_balls))
            .map(|_| Ball {
                center: [rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)],
                radius: rng.random_range(0.05..2.0),
            })
            .collect();
        let sel = maximal::vitali_select(&Plane, &balls)?;
        Ok(maximal::vitali_report(&Plane, &balls, &sel))
    }))?;
    let space = UltrametricSpace::uniform(2, 0.5, p.ultrametric_depth)?;
    let ultra = collect(exec.map_range(p.ball_families, |i| {
        let mut rng = trial_rng(seed ^ 0x756c_7472, i);
        let balls: Vec<Ball<Vec<u8>>> = (0..rng.random_range(1..=p.max_balls))
            .map(|_| {
                let k = rng.random_range(0..=space.depth) as i32;
                // Radii straddle the distance levels rho^k, some exactly on them.
                let t = if rng.random_bool(0.2) {
                    1.0
                } else {
                    1.0 + rng.random::<f64>()
                };
                Ball {
                    center: space.random_point(&mut rng),
                    radius: space.rho.powi(k) * t,
                }
            })
            .collect();
        let sel = maximal::vitali_select(&space, &balls)?;
        Ok(maximal::vitali_report(&space, &balls, &sel))
    }))?;
    let mut out = vec![ireport];
    for (name, reps) in [
        ("vitali-line", line),
        ("vitali-plane", plane),
        ("vitali-ultrametric", ultra),
    ] {
        let mut r = Report::new(name);
        let overlap = max_of(reps.iter().map(|x| x.checks[0].observed));
        let excess = max_of(reps.iter().map(|x| x.checks[1].observed));
        r.check(Check::at_most(
            "pairwise overlap r_i + r_j - d",
            overlap,
            0.0,
        ))
        .check(Check::at_most("(d + r_i) / (3 r_j)", excess, 1.0))
        .trace(
            "selected",
            reps.iter().map(|x| x.values["selected"]).collect(),
        );
        out.push(r);
    }
    Ok(out)
}

// --------------------------------------------------------------- fourier

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FejerParams {
    m: usize,
    ns: Vec<usize>,
    tol: f64,
    z_n: usize,
}

impl Default for FejerParams {
    fn default() -> Self {
        FejerParams {
            m: 2048,
            ns: vec![16, 256],
            tol: 0.02,
            z_n: 9,
        }
    }
}

impl Params for FejerParams {
    fn check(&self) -> Result<()> {
        if self.m < 4 {
            return Err(bad("m", "grid needs at least 4 points"));
        }
        if self.ns.is_empty() {
            return Err(bad("ns", "needs at least one n"));
        }
        for (k, &n) in self.ns.iter().chain([&self.z_n]).enumerate() {
            if 2 * n >= self.m {
                let field = if k < self.ns.len() {
                    format!("ns[{k}]")
                } else {
                    "z_n".into()
                };
                return Err(bad(
                    &field,
                    format!("degree {n} aliases on {} points", self.m),
                ));
            }
        }
        if !(self.tol > 0.0) {
            return Err(bad("tol", "must be positive"));
        }
        Ok(())
    }
}

fn fejer(p: &FejerParams, _seed: u64, _exec: Execution) -> Result<Vec<Report>> {
    let grid = CircleGrid::new(p.m)?;
    let f = SampledCircleFunction::from_real(grid, |t| t.sin().abs());
    let mut report = fourier::fejer_report(&f, &p.ns, p.tol)?;
    let z = SampledCircleFunction::monomial(grid, 1);
    let mean = fourier::fejer_mean(&z, p.z_n, p.z_n)?.function;
    let scale = p.z_n as f64 / (p.z_n + 1) as f64;
    let want = SampledCircleFunction::new(grid, z.values().iter().map(|v| v * scale).collect())?;
    report.check(Check::at_most(
        format!("Fejer mean of z at n = {} minus (n/(n+1)) z", p.z_n),
        mean.sup_distance(&want)?,
        1e-12,
    ));
    Ok(vec![report])
}

// --------------------------------------------------------------- ergodic

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct KbParams {
    systems: usize,
    max_points: usize,
    max_n: usize,
    periodic: usize,
}

impl Default for KbParams {
    fn default() -> Self {
        KbParams {
            systems: 100,
            max_points: 60,
            max_n: 200,
            periodic: 50,
        }
    }
}

impl Params for KbParams {
    fn check(&self) -> Result<()> {
        at_least_one("systems", self.systems)?;
        at_least_one("max_points", self.max_points)
    }
}

fn krylov_bogolyubov(p: &KbParams, seed: u64, exec: Execution) -> Result<Vec<Report>> {
    let rows = collect(exec.map_range(p.systems, |i| {
        let mut rng = trial_rng(seed, i);
        let m = rng.random_range(1..=p.max_points);
        let sys = ergodic::random::finite_system(m, &mut rng);
        let start = ergodic::random::probability(m, &mut rng);
        let n = rng.random_range(0..=p.max_n);
        let kb = ergodic::krylov_bogolyubov(&sys, &start, n)?;
        Ok([n as f64, kb.defect, kb.bound, (kb.mass - 1.0).abs()])
    }))?;
    // A point mass on an orbit of length q, averaged over a whole number of
    // periods, spreads evenly over the orbit.
    let periodic = collect(exec.map_range(p.periodic, |i| {
        let mut rng = trial_rng(seed ^ 0x7065_7269, i);
        let m = rng.random_range(1..=p.max_points);
        let sys = ergodic::random::finite_system(m, &mut rng);
        let x = rng.random_range(0..m);
        let q = sys
            .orbits()
            .into_iter()
            .find(|o| o.contains(&x))
            .expect("x lies on an orbit")
            .len();
        let mut start = vec![0.0; m];
        start[x] = 1.0;
        let n = q * rng.random_range(1..=10) - 1;
        Ok(ergodic::krylov_bogolyubov(&sys, &start, n)?.defect)
    }))?;
    let mut report = Report::new("krylov-bogolyubov");
    report
        .check(Check::at_most(
            "|T* lambda_n - lambda_n| (n+1) / (2 |lambda|)",
            max_of(rows.iter().map(|r| r[1] / r[2])),
            1.0,
        ))
        .check(Check::at_most(
            "|mass - 1|",
            max_of(rows.iter().map(|r| r[3])),
            1e-12,
        ))
        .check(Check::at_most(
            "periodic starts over whole periods: defect",
            max_of(periodic.iter().copied()).max(0.0),
            0.0,
        ));
    for (k, col) in ["n", "defect", "bound"].iter().enumerate() {
        report.trace(*col, rows.iter().map(|r| r[k]).collect());
    }
    Ok(vec![report])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CountingParams {
    n_max: usize,
}

impl Default for CountingParams {
    fn default() -> Self {
        CountingParams { n_max: 1000 }
    }
}

impl Params for CountingParams {
    fn check(&self) -> Result<()> {
        Ok(())
    }
}

fn counting_shift(p: &CountingParams, _seed: u64, exec: Execution) -> Result<Vec<Report>> {
    let rows = exec.map_range(p.n_max + 1, |n| {
        let avg = ergodic::counting_shift_average(0, &[1.0], n);
        [n as f64, avg.l1_mass(), avg.sup_norm()]
    });
    let mass_off = rows.iter().filter(|r| r[1] != 1.0).count();
    let sup_off = rows.iter().filter(|r| r[2] != 1.0 / (r[0] + 1.0)).count();
    let mut report = Report::new("counting-shift");
    report
        .check(Check::at_most("n with L1 mass != 1", mass_off as f64, 0.0))
        .check(Check::at_most(
            "n with sup norm != 1/(n+1)",
            sup_off as f64,
            0.0,
        ))
        .value("final_sup_norm", rows.last().expect("n = 0 present")[2]);
    for (k, col) in ["n", "l1_mass", "sup_norm"].iter().enumerate() {
        report.trace(*col, rows.iter().map(|r| r[k]).collect());
    }
    Ok(vec![report])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BirkhoffParams {
    n: usize,
    points: usize,
    /// Allowed probability that the Hoeffding envelope is exceeded.
    failure_probability: f64,
}

impl Default for BirkhoffParams {
    fn default() -> Self {
        BirkhoffParams {
            n: 1000,
            points: 200,
            failure_probability: 1e-9,
        }
    }
}

impl Params for BirkhoffParams {
    fn check(&self) -> Result<()> {
        at_least_one("points", self.points)?;
        if !(self.failure_probability > 0.0 && self.failure_probability < 1.0) {
            return Err(bad("failure_probability", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

fn birkhoff_bernoulli(p: &BirkhoffParams, seed: u64, _exec: Execution) -> Result<Vec<Report>> {
    let sys = ShiftSystem::bernoulli_half(p.n + 1);
    let points = ergodic::sample_points(&sys, p.points, seed);
    let res = ergodic::birkhoff_shift(
        &sys,
        &ergodic::CylinderFunction::coordinate(2),
        p.n,
        &points,
    )?;
    // Hoeffding with a union bound over the sampled points.
    let envelope =
        ((2.0 * p.points as f64 / p.failure_probability).ln() / (2.0 * (p.n + 1) as f64)).sqrt();
    let mut report = res.report;
    let worst = report.values["deviation_max"];
    report
        .check(
            Check::at_most("max |average - 1/2|", worst, envelope)
                .with_detail("Hoeffding envelope"),
        )
        .value("envelope", envelope);
    Ok(vec![report])
}

// ---------------------------------------------------------------- metric

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DimensionParams {
    alphabet: usize,
    rho: f64,
    depth_lo: usize,
    depth_hi: usize,
    tol: f64,
    snowflake: f64,
    snowflake_tol: f64,
}

impl Default for DimensionParams {
    fn default() -> Self {
        DimensionParams {
            alphabet: 2,
            rho: 0.5,
            depth_lo: 8,
            depth_hi: 16,
            tol: 0.05,
            snowflake: 0.5,
            snowflake_tol: 0.10,
        }
    }
}

impl Params for DimensionParams {
    fn check(&self) -> Result<()> {
        if self.depth_hi < self.depth_lo + 3 {
            return Err(bad("depth_hi", "need at least 4 scales"));
        }
        if !(self.snowflake > 0.0 && self.snowflake <= 1.0) {
            return Err(bad("snowflake", "exponent must lie in (0, 1]"));
        }
        UltrametricSpace::uniform(self.alphabet, self.rho, 1)
            .map_err(|e| bad("alphabet", e.to_string()))?;
        Ok(())
    }
}

fn box_dimension(p: &DimensionParams, _seed: u64, _exec: Execution) -> Result<Vec<Report>> {
    let space = UltrametricSpace::uniform(p.alphabet, p.rho, p.depth_hi + 1)?;
    let plain = metric::dimension_report(&space, 1.0, p.depth_lo..=p.depth_hi, p.tol)?;
    let mut flake = metric::dimension_report(
        &space,
        p.snowflake,
        p.depth_lo..=p.depth_hi,
        p.snowflake_tol,
    )?;
    flake.name = "box-dimension-snowflake".into();
    Ok(vec![plain, flake])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct UltraParams {
    alphabet: usize,
    rho: f64,
    depth: usize,
    trials: usize,
    snowflake: f64,
}

impl Default for UltraParams {
    fn default() -> Self {
        UltraParams {
            alphabet: 2,
            rho: 0.5,
            depth: 10,
            trials: 200,
            snowflake: 0.5,
        }
    }
}

impl Params for UltraParams {
    fn check(&self) -> Result<()> {
        at_least_one("trials", self.trials)?;
        UltrametricSpace::uniform(self.alphabet, self.rho, self.depth)
            .map_err(|e| bad("alphabet", e.to_string()))?;
        if !(self.snowflake > 0.0 && self.snowflake <= 1.0) {
            return Err(bad("snowflake", "exponent must lie in (0, 1]"));
        }
        Ok(())
    }
}

fn ultrametric_balls(p: &UltraParams, seed: u64, _exec: Execution) -> Result<Vec<Report>> {
    let space = UltrametricSpace::uniform(p.alphabet, p.rho, p.depth)?;
    Ok(vec![
        metric::ball_trichotomy_check(&space, p.trials, seed),
        metric::doubling_constant(&space, p.trials, seed),
        metric::snowflake_space_check(&space, p.snowflake, p.trials, seed)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn registry_is_sorted_and_dispatchable() {
        let names: Vec<&str> = BATTERIES.iter().map(|b| b.name).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
        for b in BATTERIES {
            ExperimentConfig::new(b.name).validate().unwrap();
        }
    }

    #[test]
    fn listing_filters_by_prefix() {
        let maximal: Vec<&str> = list_batteries("maximal").iter().map(|b| b.name).collect();
        assert_eq!(maximal, ["covering", "lp-bound", "weak-type"]);
        assert_eq!(list_batteries("").len(), BATTERIES.len());
        assert!(list_batteries("zzz").is_empty());
    }

    #[test]
    fn unknown_battery_rejected_before_parsing() {
        assert!(matches!(
            run("nope", &json!({"n": "x"}), 0),
            Err(Error::UnknownBattery(_))
        ));
    }

    #[test]
    fn schema_errors_name_the_field() {
        let err = run("cesaro-geometric", &json!({"n": "many"}), 0).unwrap_err();
        assert!(
            matches!(&err, Error::Schema { field, .. } if field == "params.n"),
            "{err}"
        );
        let err = run("cesaro-geometric", &json!({"a": [[0.5, 0.0], "x"]}), 0).unwrap_err();
        assert!(
            matches!(&err, Error::Schema { field, .. } if field == "params.a[1]"),
            "{err}"
        );
        let err = run("cesaro-geometric", &json!({"a": [1.0]}), 0).unwrap_err();
        assert!(
            matches!(&err, Error::Schema { field, .. } if field == "params.a[0]"),
            "{err}"
        );
        let err = run("fejer", &json!({"bogus": 1}), 0).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        let err = ExperimentConfig::from_json(r#"{"battery": "fejer", "seed": -1}"#).unwrap_err();
        assert!(
            matches!(&err, Error::Schema { field, .. } if field == "seed"),
            "{err}"
        );
    }

    #[test]
    fn cesaro_minus_one_estimates_one_half() {
        let r = run("cesaro-geometric", &json!({"a": [-1.0], "n": 1000}), 0).unwrap();
        assert!(r.pass);
        let est = r.reports[0].values["estimate_re_a0"];
        assert!((est - 0.5).abs() <= 1.0 / 1001.0);
        assert_eq!(r.params["n"], json!(1000));
    }

    #[test]
    fn sweep_matches_hand_cases() {
        assert_eq!(
            sweep(&[(0.0, 1.0), (1.0, 2.0)]),
            (1, vec![(0.0, 1.0), (1.0, 2.0)])
        );
        assert_eq!(
            sweep(&[(0.0, 2.0), (1.0, 3.0), (1.5, 2.5)]),
            (3, vec![(0.0, 3.0)])
        );
    }

    #[test]
    fn execution_strategy_does_not_change_results() {
        let params = json!({"inputs": 20, "transference_n": 2, "cylinders": 1});
        let a = run_with("weak-type", &params, 5, Execution::Sequential).unwrap();
        let b = run_with("weak-type", &params, 5, Execution::Parallel).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
}
