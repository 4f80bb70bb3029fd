//! Measure-preserving systems small enough to compute with exactly.
//!
//! Two models: the two-sided shift on `A^Z` with a Bernoulli measure,
//! materialized on coordinates `-D..=D`, and permutations of a finite set
//! with weights constant on orbits. Functions on the shift are cylinder
//! functions, so integrals are finite weighted sums.

use serde::{Deserialize, Serialize};

use crate::complex::{KahanSum, Rng};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::maximal::{log_grid, lp_constant, WEAK_CONSTANT};
use crate::report::{Check, Report};

/// Bernoulli shift on `A^Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawShift")]
pub struct ShiftSystem {
    pub alphabet: usize,
    pub weights: Vec<f64>,
    pub depth: usize,
}

#[derive(Deserialize)]
struct RawShift {
    alphabet: usize,
    weights: Vec<f64>,
    depth: usize,
}

impl TryFrom<RawShift> for ShiftSystem {
    type Error = Error;
    fn try_from(r: RawShift) -> Result<Self> {
        ShiftSystem::new(r.alphabet, r.weights, r.depth)
    }
}

impl ShiftSystem {
    pub fn new(alphabet: usize, weights: Vec<f64>, depth: usize) -> Result<Self> {
        if !(2..=256).contains(&alphabet) {
            return Err(Error::Input(format!(
                "alphabet size must be in 2..=256, got {alphabet}"
            )));
        }
        if weights.len() != alphabet {
            return Err(Error::DimensionMismatch {
                left: alphabet,
                right: weights.len(),
            });
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::Input("symbol weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Input(format!(
                "symbol weights sum to {total}, not 1"
            )));
        }
        Ok(ShiftSystem {
            alphabet,
            weights,
            depth,
        })
    }

    /// Fair coin flips.
    pub fn bernoulli_half(depth: usize) -> Self {
        ShiftSystem::new(2, vec![0.5, 0.5], depth).expect("valid")
    }

    fn symbol(&self, rng: &mut Rng) -> u8 {
        use rand::Rng as _;
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (s, &w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return s as u8;
            }
        }
        (self.alphabet - 1) as u8
    }

    /// A `mu`-random point with coordinates `-D..=D`.
    pub fn sample_point(&self, rng: &mut Rng) -> ShiftPoint {
        ShiftPoint {
            offset: self.depth as i64,
            symbols: (0..2 * self.depth + 1).map(|_| self.symbol(rng)).collect(),
        }
    }

    /// `mu` of a cylinder pattern.
    pub fn pattern_weight(&self, symbols: &[u8]) -> f64 {
        symbols.iter().map(|&s| self.weights[s as usize]).product()
    }

    fn require_depth(&self, reach: i64) -> Result<()> {
        if reach > self.depth as i64 {
            return Err(Error::Depth {
                needed: reach as usize,
                available: self.depth,
            });
        }
        Ok(())
    }
}

/// Finitely many coordinates of a point of `A^Z`: `x_j = symbols[j + offset]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftPoint {
    pub offset: i64,
    pub symbols: Vec<u8>,
}

impl ShiftPoint {
    pub fn get(&self, j: i64) -> Option<u8> {
        let k = j + self.offset;
        if k < 0 {
            return None;
        }
        self.symbols.get(k as usize).copied()
    }

    /// `phi^k x`, with `(phi x)_j = x_{j+1}`.
    pub fn shifted(&self, k: i64) -> ShiftPoint {
        ShiftPoint {
            offset: self.offset + k,
            symbols: self.symbols.clone(),
        }
    }

    fn shifted_ref(&self, k: i64) -> ShiftView<'_> {
        ShiftView { point: self, by: k }
    }
}

#[derive(Clone, Copy)]
struct ShiftView<'a> {
    point: &'a ShiftPoint,
    by: i64,
}

impl ShiftView<'_> {
    fn get(&self, j: i64) -> Option<u8> {
        self.point.get(j + self.by)
    }
}

/// A real function of finitely many coordinates.
///
/// `table` is indexed by the symbols at `coords`, first coordinate most
/// significant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCylinder")]
pub struct CylinderFunction {
    alphabet: usize,
    coords: Vec<i64>,
    table: Vec<f64>,
}

#[derive(Deserialize)]
struct RawCylinder {
    alphabet: usize,
    coords: Vec<i64>,
    table: Vec<f64>,
}

impl TryFrom<RawCylinder> for CylinderFunction {
    type Error = Error;
    fn try_from(r: RawCylinder) -> Result<Self> {
        CylinderFunction::new(r.alphabet, r.coords, r.table)
    }
}

impl CylinderFunction {
    pub fn new(alphabet: usize, coords: Vec<i64>, table: Vec<f64>) -> Result<Self> {
        let mut sorted = coords.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != coords.len() {
            return Err(Error::Input("cylinder coordinates must be distinct".into()));
        }
        let want = alphabet
            .checked_pow(coords.len() as u32)
            .ok_or_else(|| Error::Input("cylinder table too large".into()))?;
        if table.len() != want {
            return Err(Error::DimensionMismatch {
                left: want,
                right: table.len(),
            });
        }
        if table.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("cylinder values must be finite".into()));
        }
        Ok(CylinderFunction {
            alphabet,
            coords,
            table,
        })
    }

    pub fn constant(alphabet: usize, c: f64) -> Self {
        CylinderFunction {
            alphabet,
            coords: Vec::new(),
            table: vec![c],
        }
    }

    /// `x -> x_0` on symbols `0, 1, ...`.
    pub fn coordinate(alphabet: usize) -> Self {
        CylinderFunction {
            alphabet,
            coords: vec![0],
            table: (0..alphabet).map(|s| s as f64).collect(),
        }
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// `T^k f = f o phi^k`, which reads coordinates shifted by `k`.
    pub fn shift(&self, k: i64) -> CylinderFunction {
        CylinderFunction {
            alphabet: self.alphabet,
            coords: self.coords.iter().map(|c| c + k).collect(),
            table: self.table.clone(),
        }
    }

    pub fn map(&self, g: impl Fn(f64) -> f64) -> CylinderFunction {
        CylinderFunction {
            alphabet: self.alphabet,
            coords: self.coords.clone(),
            table: self.table.iter().map(|&v| g(v)).collect(),
        }
    }

    /// Smallest and largest coordinate read, `(0, 0)` for constants.
    pub fn reach(&self) -> (i64, i64) {
        (
            self.coords.iter().copied().min().unwrap_or(0),
            self.coords.iter().copied().max().unwrap_or(0),
        )
    }

    fn index_with(&self, get: impl Fn(i64) -> Option<u8>) -> Option<usize> {
        let mut idx = 0usize;
        for &c in &self.coords {
            idx = idx * self.alphabet + get(c)? as usize;
        }
        Some(idx)
    }

    pub fn eval(&self, x: &ShiftPoint) -> Option<f64> {
        Some(self.table[self.index_with(|c| x.get(c))?])
    }

    fn eval_view(&self, x: ShiftView<'_>) -> Option<f64> {
        Some(self.table[self.index_with(|c| x.get(c))?])
    }

    /// `integral g(f) d mu`, summed over the table with pattern weights.
    pub fn integral_of(&self, sys: &ShiftSystem, g: impl Fn(f64) -> f64) -> f64 {
        let k = self.coords.len();
        let mut digits = vec![0u8; k];
        let mut acc = KahanSum::new();
        for (idx, &v) in self.table.iter().enumerate() {
            let mut r = idx;
            for d in digits.iter_mut().rev() {
                *d = (r % self.alphabet) as u8;
                r /= self.alphabet;
            }
            acc.add(g(v) * sys.pattern_weight(&digits));
        }
        acc.value()
    }

    pub fn integral(&self, sys: &ShiftSystem) -> f64 {
        self.integral_of(sys, |v| v)
    }
}

/// A permutation of `0..m` with point weights constant along orbits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFinite")]
pub struct FiniteSystem {
    pub permutation: Vec<usize>,
    pub weights: Vec<f64>,
}

#[derive(Deserialize)]
struct RawFinite {
    permutation: Vec<usize>,
    weights: Option<Vec<f64>>,
}

impl TryFrom<RawFinite> for FiniteSystem {
    type Error = Error;
    fn try_from(r: RawFinite) -> Result<Self> {
        let m = r.permutation.len();
        let w = r.weights.unwrap_or_else(|| vec![1.0 / m.max(1) as f64; m]);
        FiniteSystem::new(r.permutation, w)
    }
}

impl FiniteSystem {
    pub fn new(permutation: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        let m = permutation.len();
        if m == 0 {
            return Err(Error::Input(
                "finite system needs at least one point".into(),
            ));
        }
        if weights.len() != m {
            return Err(Error::DimensionMismatch {
                left: m,
                right: weights.len(),
            });
        }
        let mut seen = vec![false; m];
        for &p in &permutation {
            if p >= m || seen[p] {
                return Err(Error::Input("map is not a bijection of 0..m".into()));
            }
            seen[p] = true;
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::Input("point weights must be positive".into()));
        }
        for x in 0..m {
            let (a, b) = (weights[x], weights[permutation[x]]);
            if (a - b).abs() > 1e-12 * a.max(b) {
                return Err(Error::Input(format!(
                    "weights are not preserved: mu({x}) = {a}, mu(pi({x})) = {b}"
                )));
            }
        }
        Ok(FiniteSystem {
            permutation,
            weights,
        })
    }

    pub fn identity(m: usize) -> Self {
        FiniteSystem::new((0..m).collect(), vec![1.0 / m as f64; m]).expect("valid")
    }

    /// `x -> x + 1 mod m` with uniform weights.
    pub fn cycle(m: usize) -> Self {
        Self::rotation(m, 1)
    }

    /// Rotation of an `m`-point circle grid by `s` steps, uniform weights.
    pub fn rotation(m: usize, s: usize) -> Self {
        FiniteSystem::new(
            (0..m).map(|x| (x + s) % m).collect(),
            vec![1.0 / m as f64; m],
        )
        .expect("valid")
    }

    pub fn len(&self) -> usize {
        self.permutation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutation.is_empty()
    }

    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.len()];
        for (x, &p) in self.permutation.iter().enumerate() {
            inv[p] = x;
        }
        inv
    }

    /// Orbits, each listed as `x, pi(x), pi^2(x), ...`.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            let mut orbit = Vec::new();
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                orbit.push(x);
                x = self.permutation[x];
            }
            out.push(orbit);
        }
        out
    }

    /// `T f = f o pi`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.permutation.iter().map(|&p| f[p]).collect()
    }

    pub fn integral(&self, f: &[f64]) -> f64 {
        f.iter()
            .zip(&self.weights)
            .map(|(v, w)| v * w)
            .collect::<KahanSum>()
            .value()
    }

    /// `(integral |f|^p d mu)^{1/p}`.
    pub fn lp_norm(&self, f: &[f64], p: f64) -> f64 {
        self.integral(&f.iter().map(|v| v.abs().powf(p)).collect::<Vec<_>>())
            .powf(1.0 / p)
    }

    fn check_table(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::DimensionMismatch {
                left: self.len(),
                right: f.len(),
            });
        }
        Ok(())
    }

    /// `pi^k(x)` for `k` of either sign.
    fn iterate(&self, inverse: &[usize], x: usize, k: i64) -> usize {
        let (map, steps) = if k >= 0 {
            (&self.permutation[..], k)
        } else {
            (inverse, -k)
        };
        (0..steps).fold(x, |y, _| map[y])
    }
}

/// Either model, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemSpec {
    Shift(ShiftSystem),
    Finite(FiniteSystem),
}

/// Birkhoff averages with their comparison to the target mean.
#[derive(Debug, Clone, PartialEq)]
pub struct BirkhoffResult {
    pub averages: Vec<f64>,
    pub report: Report,
}

fn deviation_report(name: &str, averages: &[f64], targets: &[f64]) -> Report {
    let mut devs: Vec<f64> = averages
        .iter()
        .zip(targets)
        .map(|(a, t)| (a - t).abs())
        .collect();
    let trace = devs.clone();
    devs.sort_by(f64::total_cmp);
    let q = |t: f64| devs[((devs.len() - 1) as f64 * t).round() as usize];
    let mut report = Report::new(name);
    if !devs.is_empty() {
        report
            .value("deviation_median", q(0.5))
            .value("deviation_q95", q(0.95))
            .value("deviation_max", q(1.0));
    }
    report.trace("deviation", trace);
    report
}

/// `(1/(n+1)) sum_{j<=n} f(phi^j x)` at each point.
pub fn birkhoff_shift(
    sys: &ShiftSystem,
    f: &CylinderFunction,
    n: usize,
    points: &[ShiftPoint],
) -> Result<BirkhoffResult> {
    let (lo, hi) = f.reach();
    sys.require_depth((n as i64 + hi).max(-lo))?;
    let averages = Execution::default().map_slice(points, |x| {
        let mut acc = KahanSum::new();
        for j in 0..=n as i64 {
            acc.add(f.eval_view(x.shifted_ref(j)).expect("depth checked"));
        }
        acc.value() / (n + 1) as f64
    });
    let mean = f.integral(sys);
    let mut report = deviation_report("birkhoff", &averages, &vec![mean; averages.len()]);
    report.value("space_mean", mean).value("n", n as f64);
    Ok(BirkhoffResult { averages, report })
}

/// Seeded sample of `k` points.
pub fn sample_points(sys: &ShiftSystem, k: usize, seed: u64) -> Vec<ShiftPoint> {
    (0..k)
        .map(|i| sys.sample_point(&mut crate::complex::trial_rng(seed, i)))
        .collect()
}

/// Birkhoff averages on a finite system, compared with the orbit means.
pub fn birkhoff_finite(sys: &FiniteSystem, f: &[f64], n: usize) -> Result<BirkhoffResult> {
    sys.check_table(f)?;
    let averages = Execution::default().map_range(sys.len(), |x| {
        let mut acc = KahanSum::new();
        let mut y = x;
        for _ in 0..=n {
            acc.add(f[y]);
            y = sys.permutation[y];
        }
        acc.value() / (n + 1) as f64
    });
    let (invariant, _, _) = coboundary_parts(sys, f);
    let mut report = deviation_report("birkhoff", &averages, &invariant);
    report.value("n", n as f64);
    Ok(BirkhoffResult { averages, report })
}

/// `f = a + (T b - b)` with `T a = a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coboundary {
    pub invariant: Vec<f64>,
    pub potential: Vec<f64>,
    /// `|a + (T b - b) - f|_2` in `L^2(mu)`.
    pub residual: f64,
}

fn coboundary_parts(sys: &FiniteSystem, f: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<Vec<usize>>) {
    let m = sys.len();
    let mut a = vec![0.0; m];
    let mut b = vec![0.0; m];
    let orbits = sys.orbits();
    for orbit in &orbits {
        // Weights are constant along an orbit, so the weighted mean is the plain mean.
        let mean = orbit.iter().map(|&x| f[x]).collect::<KahanSum>().value() / orbit.len() as f64;
        let mut level = KahanSum::new();
        let mut pot = Vec::with_capacity(orbit.len());
        for &x in orbit {
            pot.push(level.value());
            level.add(f[x] - mean);
        }
        let shift = pot.iter().copied().collect::<KahanSum>().value() / orbit.len() as f64;
        for (&x, p) in orbit.iter().zip(pot) {
            a[x] = mean;
            b[x] = p - shift;
        }
    }
    (a, b, orbits)
}

/// Orbit means and a mean-zero potential solving `b(pi x) - b(x) = f(x) - a(x)`
/// along each orbit by cumulative sums.
pub fn coboundary_decompose(sys: &FiniteSystem, f: &[f64]) -> Result<Coboundary> {
    sys.check_table(f)?;
    let (a, b, _) = coboundary_parts(sys, f);
    let tb = sys.apply(&b);
    let diff: Vec<f64> = (0..sys.len()).map(|x| a[x] + tb[x] - b[x] - f[x]).collect();
    let residual = sys.lp_norm(&diff, 2.0);
    Ok(Coboundary {
        invariant: a,
        potential: b,
        residual,
    })
}

/// `max_{a <= center <= b} mean(values[a..=b])`.
///
/// Window sums are split as `left(a) + right(b)`, each accumulated outward
/// from the center, so a window's value does not depend on how far the
/// array extends; that keeps `A_n* <= A_{n+1}*` exact in floating point.
pub fn window_maximal(values: &[f64], center: usize) -> f64 {
    let mut left = Vec::with_capacity(center + 1);
    let mut acc = 0.0;
    left.push(0.0);
    for &v in values[..center].iter().rev() {
        acc += v;
        left.push(acc);
    }
    let mut right = Vec::with_capacity(values.len() - center);
    acc = 0.0;
    for &v in &values[center..] {
        acc += v;
        right.push(acc);
    }
    let mut best = values[center];
    for (k, l) in left.iter().enumerate() {
        for (r, s) in right.iter().enumerate() {
            best = best.max((l + s) / (k + r + 1) as f64);
        }
    }
    best
}

/// `A_n*(f)(x) = max_{0 <= k, l <= n} (1/(k+l+1)) sum_{j=-k}^{l} |f(pi^j x)|`
/// at every point.
pub fn transference_finite(sys: &FiniteSystem, f: &[f64], n: usize) -> Result<Vec<f64>> {
    sys.check_table(f)?;
    let inv = sys.inverse();
    Ok(Execution::default().map_range(sys.len(), |x| {
        let start = sys.iterate(&inv, x, -(n as i64));
        let mut vals = Vec::with_capacity(2 * n + 1);
        let mut y = start;
        for _ in 0..=2 * n {
            vals.push(f[y].abs());
            y = sys.permutation[y];
        }
        window_maximal(&vals, n)
    }))
}

fn shift_transference_view(f: &CylinderFunction, x: ShiftView<'_>, n: usize) -> Option<f64> {
    let n = n as i64;
    let vals: Option<Vec<f64>> = (-n..=n)
        .map(|j| {
            f.eval_view(ShiftView {
                point: x.point,
                by: x.by + j,
            })
            .map(f64::abs)
        })
        .collect();
    Some(window_maximal(&vals?, n as usize))
}

/// `A_n*(f)(x)` on the shift.
pub fn transference_shift(f: &CylinderFunction, x: &ShiftPoint, n: usize) -> Option<f64> {
    shift_transference_view(f, x.shifted_ref(0), n)
}

/// Default levels and exponents for transference reports.
pub const TRANSFERENCE_PS: [f64; 3] = [1.5, 2.0, 3.0];

fn inequality_checks(
    report: &mut Report,
    samples: &[(f64, f64)],
    abs_integral: f64,
    abs_p_integral: impl Fn(f64) -> f64,
    lambdas: &[f64],
    ps: &[f64],
) {
    let mut worst = 0.0f64;
    let mut measures = Vec::with_capacity(lambdas.len());
    for &lam in lambdas {
        let mu: f64 = samples
            .iter()
            .filter(|(v, _)| *v > lam)
            .map(|(_, w)| *w)
            .collect::<KahanSum>()
            .value();
        worst = worst.max(mu * lam / abs_integral);
        measures.push(mu);
    }
    report
        .check(Check::at_most(
            "mu(A* > lambda) lambda / integral |f|",
            worst,
            WEAK_CONSTANT,
        ))
        .value("worst_weak_ratio", worst)
        .trace("lambda", lambdas.to_vec())
        .trace("level_measure", measures);
    for &p in ps {
        let lhs = samples
            .iter()
            .map(|(v, w)| v.powf(p) * w)
            .collect::<KahanSum>()
            .value();
        let ratio = lhs / abs_p_integral(p);
        report
            .check(Check::at_most(
                format!("integral A*^p / integral |f|^p, p = {p}"),
                ratio,
                lp_constant(p),
            ))
            .value(format!("lp_ratio_p{p}"), ratio);
    }
}

fn default_levels(values: &[f64]) -> Vec<f64> {
    let top = values.iter().copied().fold(0.0, f64::max);
    let bottom = values
        .iter()
        .copied()
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !bottom.is_finite() {
        return vec![1.0];
    }
    log_grid(bottom / 2.0, top, 20)
}

/// Transference inequalities on a finite system, plus `A_n* <= A_{n+1}*`
/// and `A_n*(T f) = T(A_n* f)`.
pub fn transference_finite_report(
    sys: &FiniteSystem,
    f: &[f64],
    n: usize,
    ps: &[f64],
) -> Result<Report> {
    let a_n = transference_finite(sys, f, n)?;
    let a_next = transference_finite(sys, f, n + 1)?;
    let a_tf = transference_finite(sys, &sys.apply(f), n)?;
    let t_a = sys.apply(&a_n);
    let abs_integral = sys.integral(&f.iter().map(|v| v.abs()).collect::<Vec<_>>());
    if abs_integral == 0.0 {
        return Err(Error::Input(
            "transference report needs a nonzero function".into(),
        ));
    }
    let samples: Vec<(f64, f64)> = a_n
        .iter()
        .copied()
        .zip(sys.weights.iter().copied())
        .collect();
    let mut report = Report::new("transference");
    inequality_checks(
        &mut report,
        &samples,
        abs_integral,
        |p| sys.integral(&f.iter().map(|v| v.abs().powf(p)).collect::<Vec<_>>()),
        &default_levels(&a_n),
        ps,
    );
    let mono = a_n
        .iter()
        .zip(&a_next)
        .map(|(a, b)| a - b)
        .fold(f64::NEG_INFINITY, f64::max);
    let comm = a_tf
        .iter()
        .zip(&t_a)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    report
        .check(Check::at_most("A_n* - A_{n+1}*", mono, 0.0))
        .check(Check::at_most("|A_n*(T f) - T(A_n* f)|", comm, 0.0));
    Ok(report)
}

/// Largest enumeration the exhaustive shift report will attempt.
pub const MAX_STATES: usize = 1 << 22;

/// Transference inequalities on the shift, with exact expectations over
/// every cylinder pattern on the coordinates `A_n*`, `A_{n+1}*` and the
/// commutation check read.
pub fn transference_shift_exhaustive(
    sys: &ShiftSystem,
    f: &CylinderFunction,
    n: usize,
    ps: &[f64],
) -> Result<Report> {
    let (c0, c1) = f.reach();
    let (lo, hi) = (c0 - n as i64 - 1, c1 + n as i64 + 1);
    let span = (hi - lo + 1) as usize;
    let states = sys
        .alphabet
        .checked_pow(span as u32)
        .filter(|&s| s <= MAX_STATES)
        .ok_or_else(|| {
            Error::Input(format!(
                "{}^{span} cylinder states exceed the {MAX_STATES} limit",
                sys.alphabet
            ))
        })?;
    let tf = f.shift(1);
    let rows = Execution::default().map_range(states, |idx| {
        let mut symbols = vec![0u8; span];
        let mut r = idx;
        for s in symbols.iter_mut().rev() {
            *s = (r % sys.alphabet) as u8;
            r /= sys.alphabet;
        }
        let point = ShiftPoint {
            offset: -lo,
            symbols,
        };
        let weight = sys.pattern_weight(&point.symbols);
        let a_n = transference_shift(f, &point, n).expect("span covers window");
        let a_next = transference_shift(f, &point, n + 1).expect("span covers window");
        let a_tf = transference_shift(&tf, &point, n).expect("span covers window");
        let t_a = shift_transference_view(f, point.shifted_ref(1), n).expect("span covers window");
        (a_n, weight, a_n - a_next, (a_tf - t_a).abs())
    });
    let samples: Vec<(f64, f64)> = rows.iter().map(|r| (r.0, r.1)).collect();
    let abs_integral = f.integral_of(sys, f64::abs);
    if abs_integral == 0.0 {
        return Err(Error::Input(
            "transference report needs a nonzero function".into(),
        ));
    }
    let mut report = Report::new("transference-shift");
    let values: Vec<f64> = rows.iter().map(|r| r.0).collect();
    inequality_checks(
        &mut report,
        &samples,
        abs_integral,
        |p| f.integral_of(sys, |v| v.abs().powf(p)),
        &default_levels(&values),
        ps,
    );
    let mono = rows.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max);
    let comm = rows.iter().map(|r| r.3).fold(0.0, f64::max);
    let total_weight = samples.iter().map(|s| s.1).collect::<KahanSum>().value();
    report
        .check(Check::at_most("A_n* - A_{n+1}*", mono, 0.0))
        .check(Check::at_most("|A_n*(T f) - T(A_n* f)|", comm, 0.0))
        .check(Check::close(
            "total cylinder mass",
            total_weight,
            1.0,
            1e-12,
        ))
        .value("states", states as f64)
        .value("n", n as f64);
    Ok(report)
}

/// Exact pieces of `sum_{n <= n_max} integral |T^n f|^p / (n+1)^p` and the
/// pointwise decay `|T^n f(x)| / (n+1) <= sup|f| / (n+1)` along sampled orbits.
pub fn power_tail_check(
    sys: &SystemSpec,
    f: &Observable,
    p: f64,
    n_max: usize,
    seed: u64,
) -> Result<Report> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("tail check needs p > 1, got {p}")));
    }
    let weights_sum: f64 = (0..=n_max)
        .map(|n| ((n + 1) as f64).powf(-p))
        .collect::<KahanSum>()
        .value();
    let mut lhs = KahanSum::new();
    let (base, sup, orbits): (f64, f64, Vec<Vec<f64>>) = match (sys, f) {
        (SystemSpec::Finite(s), Observable::Table(t)) => {
            s.check_table(t)?;
            let abs_p =
                |g: &[f64]| s.integral(&g.iter().map(|v| v.abs().powf(p)).collect::<Vec<_>>());
            let mut g = t.clone();
            for n in 0..=n_max {
                lhs.add(abs_p(&g) / ((n + 1) as f64).powf(p));
                g = s.apply(&g);
            }
            let orbits = (0..s.len().min(16))
                .map(|x| {
                    let mut y = x;
                    (0..=n_max)
                        .map(|_| {
                            let v = t[y];
                            y = s.permutation[y];
                            v
                        })
                        .collect()
                })
                .collect();
            (
                abs_p(t),
                t.iter().fold(0.0f64, |m, v| m.max(v.abs())),
                orbits,
            )
        }
        (SystemSpec::Shift(s), Observable::Cylinder(c)) => {
            let (lo, hi) = c.reach();
            s.require_depth((n_max as i64 + hi).max(-lo))?;
            for n in 0..=n_max {
                lhs.add(
                    c.shift(n as i64).integral_of(s, |v| v.abs().powf(p))
                        / ((n + 1) as f64).powf(p),
                );
            }
            let orbits = sample_points(s, 16, seed)
                .iter()
                .map(|x| {
                    (0..=n_max as i64)
                        .map(|n| c.eval_view(x.shifted_ref(n)).expect("depth checked"))
                        .collect()
                })
                .collect();
            (
                c.integral_of(s, |v| v.abs().powf(p)),
                c.table().iter().fold(0.0f64, |m, v| m.max(v.abs())),
                orbits,
            )
        }
        _ => return Err(Error::Input("observable does not match the system".into())),
    };
    let lhs = lhs.value();
    let exact = weights_sum * base;
    let mut decay_excess = f64::NEG_INFINITY;
    let mut last = 0.0f64;
    for orbit in &orbits {
        for (n, v) in orbit.iter().enumerate() {
            let scaled = v.abs() / (n + 1) as f64;
            decay_excess = decay_excess.max(scaled - sup / (n + 1) as f64);
        }
        last = last.max(
            orbit
                .last()
                .map(|v| v.abs() / (n_max + 1) as f64)
                .unwrap_or(0.0),
        );
    }
    let zeta_tail = base * ((n_max + 1) as f64).powf(1.0 - p) / (p - 1.0);
    let mut report = Report::new("power-tail");
    report
        .check(Check::close(
            "sum integral |T^n f|^p / (n+1)^p",
            lhs,
            exact,
            1e-12 * exact.max(f64::MIN_POSITIVE),
        ))
        .check(Check::at_most(
            "|T^n f(x)|/(n+1) - sup|f|/(n+1)",
            decay_excess.max(0.0),
            0.0,
        ))
        .value("weighted_sum", lhs)
        .value("zeta_tail_bound", zeta_tail)
        .value("last_scaled_value", last)
        .value("p", p);
    Ok(report)
}

/// A function on either model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Observable {
    Cylinder(CylinderFunction),
    Table(Vec<f64>),
}

/// Result of [`krylov_bogolyubov`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantMeasure {
    /// `lambda_n` as point weights.
    pub measure: Vec<f64>,
    /// `|T* lambda_n - lambda_n|`, total variation.
    pub defect: f64,
    /// `2 |lambda| / (n+1)`.
    pub bound: f64,
    pub mass: f64,
}

/// `lambda_n = (1/(n+1)) sum_{j<=n} (T*)^j lambda`, where
/// `(T* lambda)(f) = lambda(f o pi)` moves the weight at `x` to `pi(x)`.
pub fn krylov_bogolyubov(sys: &FiniteSystem, start: &[f64], n: usize) -> Result<InvariantMeasure> {
    sys.check_table(start)?;
    let m = sys.len();
    let push = |mu: &[f64]| {
        let mut out = vec![0.0; m];
        for (x, &w) in mu.iter().enumerate() {
            out[sys.permutation[x]] += w;
        }
        out
    };
    let mut acc: Vec<KahanSum> = vec![KahanSum::new(); m];
    let mut cur = start.to_vec();
    for _ in 0..=n {
        for (a, w) in acc.iter_mut().zip(&cur) {
            a.add(*w);
        }
        cur = push(&cur);
    }
    let measure: Vec<f64> = acc.iter().map(|a| a.value() / (n + 1) as f64).collect();
    let pushed = push(&measure);
    let defect = pushed
        .iter()
        .zip(&measure)
        .map(|(a, b)| (a - b).abs())
        .collect::<KahanSum>()
        .value();
    let norm = start.iter().map(|w| w.abs()).collect::<KahanSum>().value();
    Ok(InvariantMeasure {
        mass: measure.iter().copied().collect::<KahanSum>().value(),
        measure,
        defect,
        bound: 2.0 * norm / (n + 1) as f64,
    })
}

/// Averages of the integer shift `T f(x) = f(x + 1)` on `Z` with counting
/// measure, kept as integer-valued numerators over `n + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingAverage {
    /// Point of the first numerator.
    pub lo: i64,
    pub numerators: Vec<f64>,
    pub denominator: f64,
}

impl CountingAverage {
    pub fn l1_mass(&self) -> f64 {
        self.numerators
            .iter()
            .map(|v| v.abs())
            .collect::<KahanSum>()
            .value()
            / self.denominator
    }

    pub fn sup_norm(&self) -> f64 {
        self.numerators.iter().fold(0.0f64, |m, v| m.max(v.abs())) / self.denominator
    }
}

/// `(1/(n+1)) sum_{j<=n} f(x + j)` for `f` supported on `lo..lo+len`.
/// For integer-valued `f` the numerators are exact.
pub fn counting_shift_average(lo: i64, f: &[f64], n: usize) -> CountingAverage {
    let len = f.len();
    let out_lo = lo - n as i64;
    let numerators = (0..len + n)
        .map(|k| {
            let x = out_lo + k as i64;
            (0..=n as i64)
                .filter_map(|j| {
                    let idx = x + j - lo;
                    (idx >= 0 && (idx as usize) < len).then(|| f[idx as usize])
                })
                .sum()
        })
        .collect();
    CountingAverage {
        lo: out_lo,
        numerators,
        denominator: (n + 1) as f64,
    }
}

/// Random finite systems and functions.
pub mod random {
    use rand::seq::SliceRandom;
    use rand::Rng;

    use super::*;

    /// Uniform random permutation with random orbit weights of total mass 1.
    pub fn finite_system(m: usize, rng: &mut impl Rng) -> FiniteSystem {
        let mut perm: Vec<usize> = (0..m).collect();
        perm.shuffle(rng);
        let mut sys = FiniteSystem {
            permutation: perm,
            weights: vec![0.0; m],
        };
        let orbits = sys.orbits();
        let raw: Vec<f64> = orbits.iter().map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = orbits
            .iter()
            .zip(&raw)
            .map(|(o, r)| o.len() as f64 * r)
            .sum();
        for (o, r) in orbits.iter().zip(&raw) {
            for &x in o {
                sys.weights[x] = r / total;
            }
        }
        FiniteSystem::new(sys.permutation, sys.weights).expect("orbit-constant weights")
    }

    /// Nonnegative probability weights on `m` points.
    pub fn probability(m: usize, rng: &mut impl Rng) -> Vec<f64> {
        let raw: Vec<f64> = (0..m)
            .map(|_| {
                if rng.random_bool(0.3) {
                    0.0
                } else {
                    rng.random()
                }
            })
            .collect();
        let total: f64 = raw.iter().sum();
        if total == 0.0 {
            let mut v = vec![0.0; m];
            v[0] = 1.0;
            return v;
        }
        raw.iter().map(|w| w / total).collect()
    }

    /// Cylinder function on one or two coordinates among `0, 1`, nonnegative
    /// or signed.
    pub fn cylinder(alphabet: usize, rng: &mut impl Rng) -> CylinderFunction {
        let coords = if rng.random_bool(0.5) {
            vec![0]
        } else {
            vec![0, 1]
        };
        let signed = rng.random_bool(0.3);
        let size = alphabet.pow(coords.len() as u32);
        let mut table: Vec<f64> = (0..size)
            .map(|_| {
                if signed {
                    rng.random_range(-1.0..1.0)
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        if table.iter().all(|&v| v == 0.0) {
            table[0] = 1.0;
        }
        CylinderFunction::new(alphabet, coords, table).expect("sized")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::rng;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn system_json() {
        let s: SystemSpec =
            serde_json::from_str(r#"{"alphabet":2,"weights":[0.5,0.5],"depth":12}"#).unwrap();
        assert_eq!(s, SystemSpec::Shift(ShiftSystem::bernoulli_half(12)));
        let s: SystemSpec =
            serde_json::from_str(r#"{"permutation":[1,2,0],"weights":[0.2,0.2,0.2]}"#).unwrap();
        assert!(matches!(s, SystemSpec::Finite(_)));
        assert!(serde_json::from_str::<SystemSpec>(r#"{"permutation":[1,1,0]}"#).is_err());
        assert!(serde_json::from_str::<SystemSpec>(
            r#"{"alphabet":2,"weights":[0.5,0.4],"depth":3}"#
        )
        .is_err());
        assert!(FiniteSystem::new(vec![1, 0], vec![0.3, 0.7]).is_err());
    }

    #[test]
    fn invariant_function_average_is_itself() {
        let sys = ShiftSystem::bernoulli_half(50);
        let f = CylinderFunction::constant(2, 0.7);
        let pts = sample_points(&sys, 5, 1);
        for n in [0, 3, 40] {
            let r = birkhoff_shift(&sys, &f, n, &pts).unwrap();
            assert!(r.averages.iter().all(|&a| (a - 0.7).abs() < 1e-15));
        }
    }

    #[test]
    fn coboundary_average_telescopes() {
        let sys = ShiftSystem::bernoulli_half(200);
        let b = CylinderFunction::new(2, vec![0, 2], vec![0.3, -1.0, 2.0, 0.5]).unwrap();
        // f = T b - b reads coordinates {0, 1, 2, 3}.
        let coords = vec![0, 1, 2, 3];
        let mut table = Vec::new();
        for idx in 0..16usize {
            let s: Vec<u8> = (0..4).map(|k| ((idx >> (3 - k)) & 1) as u8).collect();
            let x = ShiftPoint {
                offset: 0,
                symbols: s,
            };
            table.push(b.eval(&x.shifted(1)).unwrap() - b.eval(&x).unwrap());
        }
        let f = CylinderFunction::new(2, coords, table).unwrap();
        let pts = sample_points(&sys, 20, 3);
        let n = 100;
        let r = birkhoff_shift(&sys, &f, n, &pts).unwrap();
        for (x, a) in pts.iter().zip(&r.averages) {
            let want =
                (b.eval(&x.shifted(n as i64 + 1)).unwrap() - b.eval(x).unwrap()) / (n + 1) as f64;
            assert!((a - want).abs() < 1e-14);
            assert!(a.abs() <= 2.0 * 2.0 / (n + 1) as f64 + 1e-15);
        }
    }

    #[test]
    fn bernoulli_coordinate_average_concentrates() {
        let n = 10_000;
        let sys = ShiftSystem::bernoulli_half(n);
        let f = CylinderFunction::coordinate(2);
        let pts = sample_points(&sys, 200, 17);
        let r = birkhoff_shift(&sys, &f, n, &pts).unwrap();
        let within = r
            .averages
            .iter()
            .filter(|a| (*a - 0.5).abs() <= 0.05)
            .count();
        assert!(within >= 190, "{within}");
        assert_eq!(r.report.values["space_mean"], 0.5);
    }

    #[test]
    fn depth_error_names_requirement() {
        let sys = ShiftSystem::bernoulli_half(10);
        let f = CylinderFunction::coordinate(2).shift(3);
        let pts = sample_points(&sys, 1, 0);
        match birkhoff_shift(&sys, &f, 20, &pts) {
            Err(Error::Depth { needed, available }) => {
                assert_eq!(needed, 23);
                assert_eq!(available, 10);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn coboundary_three_cycle() {
        let sys = FiniteSystem::cycle(3);
        let c = coboundary_decompose(&sys, &[1.0, 0.0, -1.0]).unwrap();
        assert_eq!(c.invariant, vec![0.0; 3]);
        let tb = sys.apply(&c.potential);
        for x in 0..3 {
            assert_abs_diff_eq!(tb[x] - c.potential[x], [1.0, 0.0, -1.0][x], epsilon = 1e-15);
        }
        // Linear-solve oracle: b = (-2/3, 1/3, 1/3) is the mean-zero solution.
        for (got, want) in c.potential.iter().zip([-2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }

        let inv = coboundary_decompose(&FiniteSystem::identity(4), &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(inv.invariant, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(inv.potential, vec![0.0; 4]);
    }

    #[test]
    fn coboundary_random() {
        let mut r = rng(8);
        for _ in 0..100 {
            let m = r.random_range(1..=100);
            let sys = random::finite_system(m, &mut r);
            let f: Vec<f64> = (0..m).map(|_| r.random_range(-3.0..3.0)).collect();
            let c = coboundary_decompose(&sys, &f).unwrap();
            assert!(c.residual <= 1e-10);
            assert_eq!(sys.apply(&c.invariant), c.invariant);
        }
    }

    #[test]
    fn transference_delta_on_cycle() {
        let m = 41;
        let sys = FiniteSystem::cycle(m);
        let mut f = vec![0.0; m];
        f[20] = 1.0;
        let n = 10;
        let a = transference_finite(&sys, &f, n).unwrap();
        for (x, &got) in a.iter().enumerate() {
            let dist = (x as i64 - 20).unsigned_abs() as usize;
            let want = if dist <= n {
                1.0 / (dist + 1) as f64
            } else {
                0.0
            };
            assert_abs_diff_eq!(got, want, epsilon = 1e-15);
        }
        let rep = transference_finite_report(&sys, &f, n, &TRANSFERENCE_PS).unwrap();
        assert!(rep.pass(), "{:?}", rep.checks);
    }

    #[test]
    fn transference_invariant_function() {
        let sys = FiniteSystem::identity(5);
        let f = [0.5, 1.0, 2.0, 0.0, 3.0];
        for n in [0, 2, 7] {
            assert_eq!(transference_finite(&sys, &f, n).unwrap(), f.to_vec());
        }
    }

    #[test]
    fn transference_exhaustive_bernoulli() {
        let sys = ShiftSystem::bernoulli_half(0);
        let mut r = rng(91);
        for n in [1, 4, 7] {
            let f = random::cylinder(2, &mut r);
            let rep = transference_shift_exhaustive(&sys, &f, n, &TRANSFERENCE_PS).unwrap();
            assert!(rep.pass(), "{:?}", rep.checks);
        }
    }

    #[test]
    fn power_tail() {
        let mut r = rng(4);
        let sys = random::finite_system(30, &mut r);
        let f: Vec<f64> = (0..30).map(|_| r.random_range(-2.0..2.0)).collect();
        let rep = power_tail_check(
            &SystemSpec::Finite(sys.clone()),
            &Observable::Table(f),
            2.0,
            1000,
            0,
        )
        .unwrap();
        assert!(rep.pass(), "{:?}", rep.checks);
        let zero = power_tail_check(
            &SystemSpec::Finite(sys),
            &Observable::Table(vec![0.0; 30]),
            2.0,
            10,
            0,
        )
        .unwrap();
        assert_eq!(zero.values["weighted_sum"], 0.0);

        let shift = ShiftSystem::bernoulli_half(1001);
        let f = CylinderFunction::coordinate(2);
        let rep = power_tail_check(
            &SystemSpec::Shift(shift),
            &Observable::Cylinder(f),
            2.0,
            1000,
            3,
        )
        .unwrap();
        assert!(rep.pass(), "{:?}", rep.checks);
        // integral x_0^2 = 1/2; the sum approaches (pi^2/6)/2 within the zeta tail.
        let zeta = std::f64::consts::PI.powi(2) / 6.0;
        assert!((rep.values["weighted_sum"] - zeta / 2.0).abs() <= rep.values["zeta_tail_bound"]);
        assert!(rep.values["last_scaled_value"] <= 1.0 / 1001.0);
    }

    #[test]
    fn krylov_bogolyubov_examples() {
        let id = FiniteSystem::identity(4);
        let kb = krylov_bogolyubov(&id, &[0.0, 1.0, 0.0, 0.0], 9).unwrap();
        assert_eq!(kb.measure, vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(kb.defect, 0.0);

        let cyc = FiniteSystem::cycle(5);
        let kb = krylov_bogolyubov(&cyc, &[1.0, 0.0, 0.0, 0.0, 0.0], 14).unwrap();
        for w in &kb.measure {
            assert_abs_diff_eq!(*w, 0.2, epsilon = 1e-15);
        }
        assert_eq!(kb.defect, 0.0);

        let mut r = rng(10);
        for _ in 0..100 {
            let m = r.random_range(1..60);
            let sys = random::finite_system(m, &mut r);
            let start = random::probability(m, &mut r);
            let n = r.random_range(0..200);
            let kb = krylov_bogolyubov(&sys, &start, n).unwrap();
            assert!(kb.defect <= kb.bound * (1.0 + 1e-12));
            assert!((kb.mass - 1.0).abs() < 1e-12);
            assert!(kb.measure.iter().all(|&w| w >= 0.0));
        }
    }

    #[test]
    fn counting_counterexample() {
        for n in [0usize, 1, 7, 100, 1000] {
            let avg = counting_shift_average(0, &[1.0], n);
            assert_eq!(avg.l1_mass(), 1.0);
            assert_eq!(avg.sup_norm(), 1.0 / (n + 1) as f64);
        }
    }

    fn finite_case() -> impl Strategy<Value = (FiniteSystem, Vec<f64>)> {
        (1usize..40, any::<u64>()).prop_map(|(m, seed)| {
            let mut r = rng(seed);
            let sys = random::finite_system(m, &mut r);
            let f = (0..m).map(|_| r.random_range(-5.0..5.0)).collect();
            (sys, f)
        })
    }

    proptest! {
        #[test]
        fn measure_preservation_and_isometry((sys, f) in finite_case(), p in 1.0..4.0f64) {
            let tf = sys.apply(&f);
            prop_assert!((sys.integral(&tf) - sys.integral(&f)).abs() <= 1e-12 * (1.0 + sys.lp_norm(&f, 1.0)));
            let (a, b) = (sys.lp_norm(&tf, p), sys.lp_norm(&f, p));
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0));
        }

        #[test]
        fn averages_contract((sys, f) in finite_case(), p in 1.0..4.0f64, n in 0usize..50) {
            let avg = birkhoff_finite(&sys, &f, n).unwrap().averages;
            prop_assert!(sys.lp_norm(&avg, p) <= sys.lp_norm(&f, p) * (1.0 + 1e-12));
        }

        #[test]
        fn cylinder_integral_is_shift_invariant(seed in any::<u64>(), k in -5i64..5) {
            let mut r = rng(seed);
            let sys = ShiftSystem::new(3, vec![0.2, 0.3, 0.5], 10).unwrap();
            let f = random::cylinder(3, &mut r);
            prop_assert_eq!(f.shift(k).integral(&sys), f.integral(&sys));
        }
    }
}
