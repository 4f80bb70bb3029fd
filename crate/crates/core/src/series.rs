//! Partial sums, Cesàro and Abel summation, admissibility and Cauchy products.
//!
//! Everything is indexed from 0: `b_l = a_0 + ... + a_l` and the Cesàro mean
//! of a sequence is `(z_0 + ... + z_m) / (m + 1)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::complex::{lenient, ComplexSum, C64, ZERO};
use crate::error::{Error, Result};

/// Fewest trace entries the stabilization test accepts.
pub const MIN_TRACE_LEN: usize = 16;

/// A rule `j -> a_j` generating the terms of a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SeriesSpec {
    /// Finitely many terms; zero beyond the last index.
    #[serde(alias = "explicit-list")]
    List { terms: Vec<C64> },
    /// `a_j = a^j`.
    Geometric {
        #[serde(with = "lenient")]
        a: C64,
    },
    /// `a_j = (j + 1)^degree * a^j`.
    WeightedGeometric {
        #[serde(with = "lenient")]
        a: C64,
        degree: u32,
    },
    /// A named rule from [`CUSTOM_RULES`].
    Custom { rule: String },
}

/// Named term rules accepted by [`SeriesSpec::Custom`].
pub const CUSTOM_RULES: &[(&str, &str)] = &[
    ("alternating", "(-1)^j"),
    ("harmonic", "1/(j+1)"),
    ("inverse-squares", "1/(j+1)^2"),
    ("linear", "j+1"),
    ("ones", "1"),
    ("powers-of-two", "2^j"),
];

impl SeriesSpec {
    pub fn list(terms: impl IntoIterator<Item = C64>) -> Self {
        SeriesSpec::List {
            terms: terms.into_iter().collect(),
        }
    }

    pub fn real_list(terms: &[f64]) -> Self {
        Self::list(terms.iter().map(|&x| C64::new(x, 0.0)))
    }

    pub fn geometric(a: C64) -> Self {
        SeriesSpec::Geometric { a }
    }

    pub fn weighted_geometric(a: C64, degree: u32) -> Self {
        SeriesSpec::WeightedGeometric { a, degree }
    }

    pub fn custom(rule: &str) -> Self {
        SeriesSpec::Custom {
            rule: rule.to_string(),
        }
    }

    /// The `j`-th term.
    pub fn term(&self, j: usize) -> Result<C64> {
        Ok(match self {
            SeriesSpec::List { terms } => terms.get(j).copied().unwrap_or(ZERO),
            SeriesSpec::Geometric { a } => pow(*a, j),
            SeriesSpec::WeightedGeometric { a, degree } => {
                ((j + 1) as f64).powi(*degree as i32) * pow(*a, j)
            }
            SeriesSpec::Custom { rule } => {
                let jf = j as f64;
                let re = match rule.as_str() {
                    "alternating" => {
                        if j.is_multiple_of(2) {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                    "harmonic" => 1.0 / (jf + 1.0),
                    "inverse-squares" => 1.0 / ((jf + 1.0) * (jf + 1.0)),
                    "linear" => jf + 1.0,
                    "ones" => 1.0,
                    "powers-of-two" => 2f64.powi(j.min(i32::MAX as usize) as i32),
                    other => {
                        return Err(Error::Input(format!("unknown series rule '{other}'")));
                    }
                };
                C64::new(re, 0.0)
            }
        })
    }

    /// Terms `a_0 ..= a_n`.
    pub fn terms(&self, n: usize) -> Result<Vec<C64>> {
        (0..=n).map(|j| self.term(j)).collect()
    }

    /// Index of the last possibly nonzero term, if the series is finite.
    pub fn finite_len(&self) -> Option<usize> {
        match self {
            SeriesSpec::List { terms } => Some(terms.len()),
            _ => None,
        }
    }
}

fn pow(a: C64, j: usize) -> C64 {
    // Repeated squaring keeps roots of unity like -1 and i exact.
    a.powu(j as u32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceKind {
    PartialSums,
    CesaroMeansOfSequence,
    CesaroMeansOfSeries,
    AbelEvaluations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialSumTrace {
    pub kind: TraceKind,
    pub values: Vec<C64>,
}

/// `b_l = a_0 + ... + a_l` for `0 <= l <= n`.
pub fn partial_sums(s: &SeriesSpec, n: usize) -> Result<PartialSumTrace> {
    let terms = s.terms(n)?;
    Ok(PartialSumTrace {
        kind: TraceKind::PartialSums,
        values: running_sums(&terms),
    })
}

fn running_sums(terms: &[C64]) -> Vec<C64> {
    let mut acc = ComplexSum::new();
    terms
        .iter()
        .map(|&a| {
            acc.add(a);
            acc.value()
        })
        .collect()
}

/// Running averages `(z_0 + ... + z_m) / (m + 1)` for `0 <= m <= n`.
pub fn cesaro_means(seq: &[C64], n: usize) -> Result<PartialSumTrace> {
    if seq.len() <= n {
        return Err(Error::Input(format!(
            "sequence has {} entries, need index {n}",
            seq.len()
        )));
    }
    let values = running_sums(&seq[..=n])
        .into_iter()
        .enumerate()
        .map(|(m, s)| s / (m + 1) as f64)
        .collect();
    Ok(PartialSumTrace {
        kind: TraceKind::CesaroMeansOfSequence,
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Classical,
    Cesaro,
    Abel,
}

/// Outcome of a summation attempt. Divergence is a value: `estimate` is
/// `None` exactly when the convergence test failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummabilityReport {
    pub method: Method,
    pub estimate: Option<C64>,
    pub trace: PartialSumTrace,
    /// Per-step residuals: route disagreement for Cesàro, truncation tail
    /// bound per grid point for Abel, deviation from the last value otherwise.
    pub diagnostics: Vec<f64>,
    #[serde(default)]
    pub values: BTreeMap<String, f64>,
}

impl SummabilityReport {
    pub fn divergent(&self) -> bool {
        self.estimate.is_none()
    }
}

/// Spread of the trailing quarter of `values` around the final entry, or
/// `None` if the trace is shorter than [`MIN_TRACE_LEN`].
pub fn trailing_spread(values: &[C64]) -> Option<f64> {
    if values.len() < MIN_TRACE_LEN {
        return None;
    }
    let last = *values.last()?;
    let start = values.len() - values.len() / 4;
    Some(
        values[start..]
            .iter()
            .map(|v| (v - last).norm())
            .fold(0.0, f64::max),
    )
}

/// Classical summation: partial sums with the trailing-quarter stabilization test.
pub fn classical_sum(s: &SeriesSpec, n: usize, tol: f64) -> Result<SummabilityReport> {
    check_tol(tol)?;
    let trace = partial_sums(s, n)?;
    let last = *trace.values.last().expect("n >= 0 gives one entry");
    let diagnostics = trace.values.iter().map(|v| (v - last).norm()).collect();
    let spread = trailing_spread(&trace.values);
    let mut values = BTreeMap::new();
    if let Some(sp) = spread {
        values.insert("trailing_spread".into(), sp);
    }
    Ok(SummabilityReport {
        method: Method::Classical,
        estimate: spread.filter(|&sp| sp <= tol).map(|_| last),
        trace,
        diagnostics,
        values,
    })
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::Input(format!(
            "tolerance must be positive, got {tol}"
        )))
    }
}

/// Cesàro summation of `s` from the means `beta_0 ..= beta_n`.
///
/// The means are computed by averaging partial sums and, independently, from
/// the weighted form `sum_j (m + 1 - j)/(m + 1) a_j`, rearranged as
/// `sum_j a_j - (sum_j j a_j)/(m + 1)`. The two must agree to rounding.
///
/// `values["necessary_ratio"]` is `|a_n|/(n + 1)`; whenever an estimate is
/// reported it is at most `3 * tol`.
pub fn cesaro_sum(s: &SeriesSpec, n: usize, tol: f64) -> Result<SummabilityReport> {
    if n < 1 {
        return Err(Error::Input("cesaro_sum needs n >= 1".into()));
    }
    check_tol(tol)?;
    let terms = s.terms(n)?;
    let sums = running_sums(&terms);
    let averaged = cesaro_means(&sums, n)?.values;

    let mut plain = ComplexSum::new();
    let mut moment = ComplexSum::new();
    let mut abs_plain = 0.0;
    let mut abs_moment = 0.0;
    let mut diagnostics = Vec::with_capacity(n + 1);
    let mut worst = 0.0f64;
    for (m, (&a, &avg)) in terms.iter().zip(&averaged).enumerate() {
        plain.add(a);
        moment.add(a * m as f64);
        abs_plain += a.norm();
        abs_moment += a.norm() * m as f64;
        let weighted = plain.value() - moment.value() / (m + 1) as f64;
        let gap = (weighted - avg).norm();
        let scale = 1.0 + abs_plain + abs_moment / (m + 1) as f64;
        worst = worst.max(gap / scale);
        diagnostics.push(gap);
    }
    if worst > 1e-10 {
        return Err(Error::Consistency {
            what: "averaged partial sums vs weighted formula".into(),
            discrepancy: worst,
        });
    }

    // Too short a trace gives no stabilization test and hence no estimate.
    let spread = trailing_spread(&averaged);
    let last = averaged[n];
    let mut values = BTreeMap::new();
    if let Some(sp) = spread {
        values.insert("trailing_spread".into(), sp);
    }
    values.insert("route_discrepancy".into(), worst);
    values.insert("necessary_ratio".into(), terms[n].norm() / (n + 1) as f64);
    Ok(SummabilityReport {
        method: Method::Cesaro,
        estimate: spread.filter(|&sp| sp <= tol).map(|_| last),
        trace: PartialSumTrace {
            kind: TraceKind::CesaroMeansOfSeries,
            values: averaged,
        },
        diagnostics,
        values,
    })
}

/// Probe used by [`is_admissible`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityProbe {
    pub t_values: Vec<f64>,
    pub n_probe: usize,
    /// Radius slack: admissible needs an estimated radius `>= 1 - eps_radius`.
    pub eps_radius: f64,
}

impl Default for AdmissibilityProbe {
    fn default() -> Self {
        AdmissibilityProbe {
            t_values: vec![0.5, 0.75, 0.9],
            n_probe: 256,
            eps_radius: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdmissibilityClass {
    Admissible,
    NotAdmissible,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub class: AdmissibilityClass,
    /// Root-test radius estimate; `f64::INFINITY` when the probe window ends in zeros.
    pub radius: f64,
    /// Whether `|a_j| t^j` looked bounded at each probe `t`.
    pub bounded_at: Vec<bool>,
}

/// Whether the window `u_0..u_n` peaks before its last quarter.
fn peaks_early(u: &[f64]) -> bool {
    let cut = u.len() - u.len() / 4;
    let head = u[..cut].iter().copied().fold(0.0, f64::max);
    let tail = u[cut..].iter().copied().fold(0.0, f64::max);
    tail <= head
}

/// Least-squares slope of `ln|a_j|` over the trailing half of the window.
fn log_slope(terms: &[C64]) -> Option<f64> {
    let start = terms.len() / 2;
    let pts: Vec<(f64, f64)> = terms[start..]
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm() > 0.0)
        .map(|(i, a)| ((start + i) as f64, a.norm().ln()))
        .collect();
    if pts.is_empty() {
        return None;
    }
    if pts.len() == 1 {
        return Some(0.0);
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

/// Classify whether `sum a_j z^j` has radius of convergence at least 1.
///
/// Combines boundedness of `{a_j t^j}` at each probe `t` with a root-test
/// radius estimate fitted over the probe window.
pub fn is_admissible(s: &SeriesSpec, probe: &AdmissibilityProbe) -> Result<Admissibility> {
    if probe.n_probe < 16 {
        return Err(Error::Input(
            "admissibility probe needs n_probe >= 16".into(),
        ));
    }
    if probe.t_values.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return Err(Error::Input("probe t values must lie in (0,1)".into()));
    }
    let terms = s.terms(probe.n_probe)?;
    let bounded_at: Vec<bool> = probe
        .t_values
        .iter()
        .map(|&t| {
            let u: Vec<f64> = terms
                .iter()
                .enumerate()
                .map(|(j, a)| a.norm() * t.powi(j as i32))
                .collect();
            peaks_early(&u)
        })
        .collect();
    let radius = match log_slope(&terms) {
        None => f64::INFINITY,
        Some(slope) => (-slope).exp(),
    };
    let class = if radius < 1.0 - probe.eps_radius {
        AdmissibilityClass::NotAdmissible
    } else if bounded_at.iter().all(|&b| b) {
        AdmissibilityClass::Admissible
    } else {
        AdmissibilityClass::Undetermined
    };
    Ok(Admissibility {
        class,
        radius,
        bounded_at,
    })
}

/// Parameters for [`abel_sum`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbelConfig {
    /// Increasing radii in (0,1).
    pub r_grid: Vec<f64>,
    /// Power series are truncated after this many terms.
    pub n_terms: usize,
    /// Largest acceptable truncation bound at the largest radius.
    pub tol: f64,
}

impl AbelConfig {
    pub fn new(r_grid: &[f64], n_terms: usize) -> Self {
        AbelConfig {
            r_grid: r_grid.to_vec(),
            n_terms,
            tol: 1e-10,
        }
    }
}

/// Truncated evaluation of `sum_{j <= n} a_j r^j` with a bound on the tail.
///
/// The tail bound uses the comparison `|a_j| r^j <= M (r/t)^j` with
/// `M = max_j |a_j| t^j`, trying several `t > r` and keeping the smallest
/// bound whose maximum is attained well inside the window. Returns
/// `f64::INFINITY` as the bound when no comparison is certified.
pub fn power_series_at(terms: &[C64], r: f64, radius: f64) -> (C64, f64) {
    let mut acc = ComplexSum::new();
    for (j, &a) in terms.iter().enumerate() {
        if a != ZERO {
            acc.add(a * r.powi(j as i32));
        }
    }
    let n = terms.len() - 1;
    let mut candidates = vec![r.sqrt(), r.powf(0.25), 1.0];
    if radius.is_finite() && radius > 1.0 {
        candidates.push((1.0 + radius) / 2.0);
    } else if radius.is_infinite() {
        candidates.push(2.0);
    }
    let mut best = f64::INFINITY;
    if terms.iter().rev().take_while(|a| **a == ZERO).count() == terms.len() {
        best = 0.0;
    }
    for t in candidates {
        if t <= r {
            continue;
        }
        let u: Vec<f64> = terms
            .iter()
            .enumerate()
            .map(|(j, a)| a.norm() * t.powi(j as i32))
            .collect();
        let cut = (u.len() * 9) / 10;
        let head = u[..cut.max(1)].iter().copied().fold(0.0, f64::max);
        let tail = u[cut.max(1)..].iter().copied().fold(0.0, f64::max);
        if tail > head {
            continue;
        }
        let q = r / t;
        let bound = head * q.powi((n + 1) as i32) / (1.0 - q);
        best = best.min(bound);
    }
    (acc.value(), best)
}

/// Polynomial extrapolation to `h = 0` through the given `(h, value)` points
/// by repeated linear (Richardson/Neville) steps.
pub fn extrapolate_to_zero(points: &[(f64, C64)]) -> C64 {
    let h: Vec<f64> = points.iter().map(|p| p.0).collect();
    let mut p: Vec<C64> = points.iter().map(|p| p.1).collect();
    let k = p.len();
    for level in 1..k {
        for i in 0..k - level {
            let (hi, hj) = (h[i], h[i + level]);
            p[i] = (p[i + 1] * hi - p[i] * hj) / (hi - hj);
        }
    }
    p[0]
}

/// Abel summation: evaluate `f(r) = sum a_j r^j` on the grid and extrapolate
/// in `1 - r` through the last three grid points.
///
/// `diagnostics` holds the truncation tail bound at each grid point.
pub fn abel_sum(s: &SeriesSpec, cfg: &AbelConfig) -> Result<SummabilityReport> {
    if cfg.r_grid.is_empty() {
        return Err(Error::Input("empty r grid".into()));
    }
    if cfg.r_grid.iter().any(|&r| !(r > 0.0 && r < 1.0))
        || cfg.r_grid.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::Input(
            "r grid must be increasing inside (0,1)".into(),
        ));
    }
    check_tol(cfg.tol)?;
    let adm = is_admissible(s, &AdmissibilityProbe::default())?;
    if adm.class == AdmissibilityClass::NotAdmissible {
        return Err(Error::Domain(format!(
            "series is not admissible (estimated radius {:.4})",
            adm.radius
        )));
    }
    let n_terms = match s.finite_len() {
        Some(len) => cfg.n_terms.min(len.max(1) - 1),
        None => cfg.n_terms,
    };
    let terms = s.terms(n_terms)?;
    let radius = match s.finite_len() {
        Some(len) if len <= n_terms + 1 => f64::INFINITY,
        _ => adm.radius,
    };
    let mut evals = Vec::with_capacity(cfg.r_grid.len());
    let mut bounds = Vec::with_capacity(cfg.r_grid.len());
    for &r in &cfg.r_grid {
        let (v, mut b) = power_series_at(&terms, r, radius);
        if s.finite_len().is_some_and(|len| len <= n_terms + 1) {
            b = 0.0;
        }
        evals.push(v);
        bounds.push(b);
    }
    let last_bound = *bounds.last().expect("nonempty grid");
    if last_bound > cfg.tol {
        return Err(Error::Resolution(format!(
            "truncation tail bound {last_bound:e} at r = {} exceeds {:e}; raise n_terms (now {n_terms})",
            cfg.r_grid.last().unwrap(),
            cfg.tol
        )));
    }
    let k = cfg.r_grid.len();
    let tail_pts: Vec<(f64, C64)> = (k.saturating_sub(3)..k)
        .map(|i| (1.0 - cfg.r_grid[i], evals[i]))
        .collect();
    let estimate = extrapolate_to_zero(&tail_pts);
    let mut values = BTreeMap::new();
    values.insert("radius_estimate".into(), adm.radius);
    values.insert("n_terms".into(), n_terms as f64);
    Ok(SummabilityReport {
        method: Method::Abel,
        estimate: Some(estimate),
        trace: PartialSumTrace {
            kind: TraceKind::AbelEvaluations,
            values: evals,
        },
        diagnostics: bounds,
        values,
    })
}

/// Coefficients `c_k = sum_{j <= k} a_j b_{k-j}` for `0 <= k <= n`.
pub fn cauchy_product(a: &SeriesSpec, b: &SeriesSpec, n: usize) -> Result<SeriesSpec> {
    let ta = a.terms(n)?;
    let tb = b.terms(n)?;
    let terms = (0..=n)
        .map(|k| {
            let mut acc = ComplexSum::new();
            for j in 0..=k {
                acc.add(ta[j] * tb[k - j]);
            }
            acc.value()
        })
        .collect();
    Ok(SeriesSpec::List { terms })
}

/// `|sum_{j<=n} a_j z^j - ((1 - z) sum_{j<n} b_j z^j + b_n z^n)|` where
/// `b_j` are the partial sums.
pub fn summation_by_parts_residual(s: &SeriesSpec, z: C64, n: usize) -> Result<f64> {
    if z.norm() >= 1.0 {
        return Err(Error::Domain(format!(
            "need |z| < 1, got |z| = {}",
            z.norm()
        )));
    }
    let terms = s.terms(n)?;
    let sums = running_sums(&terms);
    let mut lhs = ComplexSum::new();
    let mut inner = ComplexSum::new();
    let mut zj = C64::new(1.0, 0.0);
    for j in 0..=n {
        lhs.add(terms[j] * zj);
        if j < n {
            inner.add(sums[j] * zj);
        }
        if j < n {
            zj *= z;
        }
    }
    let rhs = (C64::new(1.0, 0.0) - z) * inner.value() + sums[n] * zj;
    Ok((lhs.value() - rhs).norm())
}
