//! Hardy–Littlewood maximal functions on the integers.
//!
//! `f*(l) = sup_{a <= l <= b} (1/(b - a + 1)) sum_{j=a}^b |f(j)|`.
//!
//! Inside the support hull the supremum is searched exactly over all windows
//! in the hull: extending a window past the hull only adds zeros, which can
//! only lower the average. Outside the hull, at distance `d`, the best window
//! runs from some `a` in the hull to `l` itself, and `f*(l) <= S/(d+1)` with
//! `S = sum |f|`; that decay bound makes every superlevel set finite and
//! gives certified tails for `sum f*^p`.

use serde::{Deserialize, Serialize};

use crate::complex::{KahanSum, C64};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::report::{fmt17, Check, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpretation {
    /// Values at integer points.
    #[default]
    OnZ,
    /// `f(x) = f(j)` on `[j, j + 1)`.
    PiecewiseConstant,
}

/// A function on the integers supported in `[lo, lo + len - 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub lo: i64,
    pub values: Vec<C64>,
    #[serde(default)]
    pub interpretation: Interpretation,
}

impl GridFunction {
    pub fn new(lo: i64, values: Vec<C64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Input("grid function window is empty".into()));
        }
        if values
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::Input("grid function values must be finite".into()));
        }
        Ok(GridFunction {
            lo,
            values,
            interpretation: Interpretation::OnZ,
        })
    }

    pub fn from_real(lo: i64, values: &[f64]) -> Result<Self> {
        Self::new(lo, values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// `1` at `at`, zero elsewhere.
    pub fn delta(at: i64) -> Self {
        Self::from_real(at, &[1.0]).expect("nonempty")
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64 - 1
    }

    pub fn get(&self, j: i64) -> C64 {
        if j < self.lo || j > self.hi() {
            C64::new(0.0, 0.0)
        } else {
            self.values[(j - self.lo) as usize]
        }
    }

    /// `sum |f|^p`.
    pub fn lp_sum(&self, p: f64) -> f64 {
        self.values
            .iter()
            .map(|z| z.norm().powf(p))
            .collect::<KahanSum>()
            .value()
    }

    pub fn l1(&self) -> f64 {
        self.values
            .iter()
            .map(|z| z.norm())
            .collect::<KahanSum>()
            .value()
    }

    /// Smallest window holding every nonzero value.
    pub fn support_hull(&self) -> Option<(i64, i64)> {
        let first = self.values.iter().position(|z| z.norm() > 0.0)?;
        let last = self.values.iter().rposition(|z| z.norm() > 0.0)?;
        Some((self.lo + first as i64, self.lo + last as i64))
    }

    /// Keep values with `keep(|f(j)|)`, zero the rest.
    pub fn filter(&self, keep: impl Fn(f64) -> bool) -> GridFunction {
        GridFunction {
            lo: self.lo,
            values: self
                .values
                .iter()
                .map(|z| {
                    if keep(z.norm()) {
                        *z
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
                .collect(),
            interpretation: self.interpretation,
        }
    }

    /// Rows `j,re,im` with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,re,im\n");
        for (k, z) in self.values.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                self.lo + k as i64,
                fmt17(z.re),
                fmt17(z.im)
            ));
        }
        out
    }
}

/// Evaluates `f*` anywhere on the integers.
#[derive(Debug, Clone)]
pub struct MaximalOracle {
    hull: Option<(i64, i64)>,
    /// Prefix sums of `|f|` over the hull.
    prefix: Vec<f64>,
    abs: Vec<f64>,
    inside: Vec<f64>,
    inside_witness: Vec<(i64, i64)>,
}

impl MaximalOracle {
    pub fn new(f: &GridFunction) -> Self {
        let Some((h0, h1)) = f.support_hull() else {
            return MaximalOracle {
                hull: None,
                prefix: vec![0.0],
                abs: Vec::new(),
                inside: Vec::new(),
                inside_witness: Vec::new(),
            };
        };
        let n = (h1 - h0 + 1) as usize;
        let mut prefix = Vec::with_capacity(n + 1);
        let abs: Vec<f64> = (h0..=h1).map(|j| f.get(j).norm()).collect();
        let mut acc = KahanSum::new();
        prefix.push(0.0);
        for &x in &abs {
            acc.add(x);
            prefix.push(acc.value());
        }
        let mut oracle = MaximalOracle {
            hull: Some((h0, h1)),
            prefix,
            abs,
            inside: vec![f64::NEG_INFINITY; n],
            inside_witness: vec![(0, 0); n],
        };
        // For each start a, sweep b downward keeping max_{b' >= b} A(a, b');
        // that is the best window starting at a that contains l = b.
        for a in 0..n {
            let mut best = f64::NEG_INFINITY;
            let mut best_b = a;
            for b in (a..n).rev() {
                let avg = oracle.avg(a, b);
                if avg > best {
                    best = avg;
                    best_b = b;
                }
                if best > oracle.inside[b] {
                    oracle.inside[b] = best;
                    oracle.inside_witness[b] = (h0 + a as i64, h0 + best_b as i64);
                }
            }
        }
        oracle
    }

    /// Average of `|f|` over hull offsets `a..=b`; singletons are exact.
    fn avg(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return self.abs[a];
        }
        (self.prefix[b + 1] - self.prefix[a]) / (b - a + 1) as f64
    }

    pub fn hull(&self) -> Option<(i64, i64)> {
        self.hull
    }

    /// `sum |f|`.
    pub fn mass(&self) -> f64 {
        *self.prefix.last().expect("prefix has a leading zero")
    }

    /// Average of `|f|` over `[a, b]` computed the same way as every value
    /// the oracle reports.
    pub fn window_average(&self, a: i64, b: i64) -> f64 {
        assert!(a <= b, "empty window");
        let Some((h0, h1)) = self.hull else {
            return 0.0;
        };
        let (lo, hi) = (a.max(h0), b.min(h1));
        if lo > hi {
            return 0.0;
        }
        let (lo, hi) = ((lo - h0) as usize, (hi - h0) as usize);
        if a == b {
            return self.abs[lo];
        }
        (self.prefix[hi + 1] - self.prefix[lo]) / (b - a + 1) as f64
    }

    /// `f*(l)` and a window achieving it.
    pub fn at(&self, l: i64) -> (f64, (i64, i64)) {
        let Some((h0, h1)) = self.hull else {
            return (0.0, (l, l));
        };
        let n = (h1 - h0 + 1) as usize;
        if l >= h0 && l <= h1 {
            let k = (l - h0) as usize;
            return (self.inside[k], self.inside_witness[k]);
        }
        let mut best = 0.0;
        let mut wit = (l, l);
        if l > h1 {
            for a in 0..n {
                let s = self.prefix[n] - self.prefix[a];
                let a_abs = h0 + a as i64;
                let v = s / (l - a_abs + 1) as f64;
                if v > best {
                    best = v;
                    wit = (a_abs, l);
                }
            }
        } else {
            for b in 0..n {
                let s = self.prefix[b + 1];
                let b_abs = h0 + b as i64;
                let v = s / (b_abs - l + 1) as f64;
                if v > best {
                    best = v;
                    wit = (l, b_abs);
                }
            }
        }
        (best, wit)
    }

    pub fn value(&self, l: i64) -> f64 {
        self.at(l).0
    }

    /// `{l : f*(l) > lambda}` relative to `frame`, which must contain the hull.
    pub fn level_set(&self, frame: (i64, i64), lambda: f64) -> LevelSet {
        assert!(lambda > 0.0, "level must be positive");
        if let Some((h0, h1)) = self.hull {
            assert!(
                frame.0 <= h0 && frame.1 >= h1,
                "frame must contain the hull"
            );
        }
        let inside = (frame.0..=frame.1)
            .map(|l| self.value(l) > lambda)
            .collect();
        // Outside the frame f* is monotone in the distance and f*(l) <= S/(d+1)
        // at distance d from the hull, so nothing is above lambda past d = S/lambda.
        let reach = (self.mass() / lambda).ceil() as i64 + 1;
        let extent = |dir: i64| {
            let edge = if dir > 0 { frame.1 } else { frame.0 };
            let (mut lo, mut hi) = (0i64, reach);
            while lo < hi {
                let mid = lo + (hi - lo + 1) / 2;
                if self.value(edge + dir * mid) > lambda {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
            lo as usize
        };
        LevelSet {
            frame,
            inside,
            left: extent(-1),
            right: extent(1),
        }
    }
}

/// A superlevel set: marked frame points plus runs just outside the frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSet {
    pub frame: (i64, i64),
    pub inside: Vec<bool>,
    /// Points `frame.0 - left ..= frame.0 - 1`.
    pub left: usize,
    /// Points `frame.1 + 1 ..= frame.1 + right`.
    pub right: usize,
}

impl LevelSet {
    pub fn size(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count() + self.left + self.right
    }

    pub fn contains(&self, l: i64) -> bool {
        if l < self.frame.0 {
            self.frame.0 - l <= self.left as i64
        } else if l > self.frame.1 {
            l - self.frame.1 <= self.right as i64
        } else {
            self.inside[(l - self.frame.0) as usize]
        }
    }

    /// Whether `self` is a subset of `other`; both must share a frame.
    pub fn subset_of(&self, other: &LevelSet) -> bool {
        assert_eq!(self.frame, other.frame);
        self.left <= other.left
            && self.right <= other.right
            && self
                .inside
                .iter()
                .zip(&other.inside)
                .all(|(&a, &b)| !a || b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalProfile {
    pub lo: i64,
    pub values: Vec<f64>,
    /// Window `[a, b]` achieving each value.
    pub witness: Vec<(i64, i64)>,
}

/// `f*` on the window of `f`, with witnesses.
pub fn discrete_maximal(f: &GridFunction) -> MaximalProfile {
    let oracle = MaximalOracle::new(f);
    let (values, witness) = (f.lo..=f.hi()).map(|l| oracle.at(l)).unzip();
    MaximalProfile {
        lo: f.lo,
        values,
        witness,
    }
}

/// Weak type constant.
pub const WEAK_CONSTANT: f64 = 2.0;

/// `4 p 2^{p-1} / (p - 1)`.
pub fn lp_constant(p: f64) -> f64 {
    4.0 * p * 2f64.powf(p - 1.0) / (p - 1.0)
}

fn frame_of(f: &GridFunction, oracle: &MaximalOracle) -> (i64, i64) {
    oracle.hull().unwrap_or((f.lo, f.lo))
}

/// `|{f* > lambda}| <= (2/lambda) sum |f|` at each level.
///
/// Traces `lambda`, `level_set_size` and `bound`; the `worst_ratio` value is
/// `max |{f* > lambda}| lambda / sum |f|`.
pub fn weak_type_report(f: &GridFunction, lambdas: &[f64]) -> Result<Report> {
    let oracle = MaximalOracle::new(f);
    let mass = oracle.mass();
    if mass == 0.0 {
        return Err(Error::Input(
            "weak-type report needs a nonzero function".into(),
        ));
    }
    if lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::Input("levels must be positive and finite".into()));
    }
    let frame = frame_of(f, &oracle);
    let sizes = Execution::default().map_slice(lambdas, |&lam| oracle.level_set(frame, lam).size());
    let mut report = Report::new("weak-type");
    let mut worst = 0.0f64;
    let mut bounds = Vec::with_capacity(lambdas.len());
    for (&lam, &size) in lambdas.iter().zip(&sizes) {
        let bound = WEAK_CONSTANT * mass / lam;
        worst = worst.max(size as f64 * lam / mass);
        bounds.push(bound);
    }
    report
        .check(Check::at_most(
            "level set * lambda / mass",
            worst,
            WEAK_CONSTANT,
        ))
        .value("worst_ratio", worst)
        .value("mass", mass)
        .trace("lambda", lambdas.to_vec())
        .trace("level_set_size", sizes.iter().map(|&s| s as f64).collect())
        .trace("bound", bounds);
    Ok(report)
}

/// Points on each side of the hull where `f*^p` is summed exactly.
pub const LP_EXTENSION: usize = 4096;

/// `sum f*^p <= C_p sum |f|^p` with `C_p = 4 p 2^{p-1}/(p-1)`.
///
/// The left side is summed exactly over the hull and `LP_EXTENSION` points
/// on either side; the rest is bounded by `2 S^p (D+1)^{1-p} / (p - 1)`.
/// The proof's chain is also checked at a grid of levels: with
/// `f = f_lambda + f^lambda` split at `|f| <= lambda/2`,
/// `f_lambda* <= lambda/2`, `{f* > lambda}` lies inside
/// `{(f^lambda)* > lambda/2}`, and `|{f* > lambda}| <= (4/lambda) sum |f^lambda|`.
pub fn lp_bound_report(f: &GridFunction, p: f64) -> Result<Report> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::Domain(format!(
            "L^p bound needs p > 1 (f* is generally not summable at p = 1), got {p}"
        )));
    }
    let oracle = MaximalOracle::new(f);
    let mass = oracle.mass();
    let rhs = f.lp_sum(p);
    let constant = lp_constant(p);
    let mut report = Report::new("lp-bound");
    report.value("p", p).value("constant", constant);
    let Some((h0, h1)) = oracle.hull() else {
        report
            .check(Check::at_most("sum f*^p", 0.0, 0.0))
            .value("observed_ratio", 0.0);
        return Ok(report);
    };
    let mut lhs = KahanSum::new();
    for l in h0..=h1 {
        lhs.add(oracle.value(l).powf(p));
    }
    let ext = LP_EXTENSION as i64;
    let outside = Execution::default().map_range(2 * LP_EXTENSION, |k| {
        let k = k as i64;
        let l = if k < ext {
            h0 - 1 - k
        } else {
            h1 + 1 + (k - ext)
        };
        oracle.value(l).powf(p)
    });
    for v in outside {
        lhs.add(v);
    }
    let computed = lhs.value();
    let tail = 2.0 * mass.powf(p) * ((LP_EXTENSION + 1) as f64).powf(1.0 - p) / (p - 1.0);
    let upper = computed + tail;
    report
        .check(Check::at_most(
            "sum f*^p upper estimate / sum |f|^p",
            upper / rhs,
            constant,
        ))
        .value("observed_ratio", computed / rhs)
        .value("upper_ratio", upper / rhs)
        .value("tail_bound", tail)
        .value("slack", constant - upper / rhs);

    // Levels between the smallest nonzero |f| and max f*.
    let top = (h0..=h1).map(|l| oracle.value(l)).fold(0.0, f64::max);
    let bottom = f
        .values
        .iter()
        .map(|z| z.norm())
        .filter(|&x| x > 0.0)
        .fold(f64::INFINITY, f64::min);
    let levels = log_grid(bottom / 2.0, top, 12);
    let frame = (h0, h1);
    let chain = Execution::default().map_slice(&levels, |&lam| {
        let low = f.filter(|x| x <= lam / 2.0);
        let high = f.filter(|x| x > lam / 2.0);
        let low_sup = MaximalOracle::new(&low)
            .inside
            .iter()
            .copied()
            .fold(0.0, f64::max);
        let high_oracle = MaximalOracle::new(&high);
        let level = oracle.level_set(frame, lam);
        let contained = if high_oracle.mass() == 0.0 {
            level.size() == 0
        } else {
            level.subset_of(&high_oracle.level_set(frame, lam / 2.0))
        };
        let ratio = level.size() as f64 * lam / (4.0 * high_oracle.mass()).max(f64::MIN_POSITIVE);
        (
            low_sup / (lam / 2.0),
            contained,
            ratio.min(if level.size() == 0 {
                0.0
            } else {
                f64::INFINITY
            }),
        )
    });
    let worst_low = chain.iter().map(|c| c.0).fold(0.0, f64::max);
    let all_contained = chain.iter().all(|c| c.1);
    let worst_split = chain.iter().map(|c| c.2).fold(0.0, f64::max);
    report
        .check(Check::at_most(
            "truncated part: sup f_lambda* / (lambda/2)",
            worst_low,
            1.0,
        ))
        .check(Check::holds(
            "level set inside large part's level set at lambda/2",
            all_contained,
            0.0,
        ))
        .check(Check::at_most(
            "level set * lambda / (4 sum |f^lambda|)",
            worst_split,
            1.0,
        ));
    Ok(report)
}

/// `k` points spaced geometrically from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 || lo == hi {
        return vec![hi; k.min(1).max(k)];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..k)
        .map(|i| (a + (b - a) * i as f64 / (k - 1) as f64).exp())
        .collect()
}

/// Continuous maximal function of the piecewise-constant embedding at `x`.
///
/// The average over `[u, v]` is monotone in each endpoint between breakpoints,
/// so only integer endpoints and `x` itself need to be tried.
pub fn continuous_maximal_at(f: &GridFunction, x: f64) -> f64 {
    let (lo, hi) = match f.support_hull() {
        Some(h) => h,
        None => return 0.0,
    };
    let integral = |a: f64, b: f64| -> f64 {
        let mut acc = KahanSum::new();
        for j in lo..=hi {
            let (s, e) = ((j as f64).max(a), ((j + 1) as f64).min(b));
            if e > s {
                acc.add(f.get(j).norm() * (e - s));
            }
        }
        acc.value()
    };
    let mut lefts: Vec<f64> = (lo..=hi + 1)
        .map(|j| j as f64)
        .filter(|&u| u <= x)
        .collect();
    lefts.push(x);
    let mut rights: Vec<f64> = (lo..=hi + 1)
        .map(|j| j as f64)
        .filter(|&v| v >= x)
        .collect();
    rights.push(x);
    let mut best = 0.0f64;
    for &u in &lefts {
        for &v in &rights {
            if v > u {
                best = best.max(integral(u, v) / (v - u));
            }
        }
    }
    best
}

/// A finite family of open intervals `(a, b)` with `a < b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct IntervalFamily(Vec<(f64, f64)>);

impl TryFrom<Vec<(f64, f64)>> for IntervalFamily {
    type Error = Error;
    fn try_from(v: Vec<(f64, f64)>) -> Result<Self> {
        IntervalFamily::new(v)
    }
}

impl From<IntervalFamily> for Vec<(f64, f64)> {
    fn from(f: IntervalFamily) -> Self {
        f.0
    }
}

impl IntervalFamily {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        if let Some(bad) = intervals
            .iter()
            .find(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite())
        {
            return Err(Error::Input(format!(
                "interval ({}, {}) is not a finite a < b",
                bad.0, bad.1
            )));
        }
        Ok(IntervalFamily(intervals))
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.0
    }

    /// Sorted distinct endpoints.
    fn endpoints(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.0.iter().flat_map(|&(a, b)| [a, b]).collect();
        e.sort_by(f64::total_cmp);
        e.dedup();
        e
    }

    /// Sample points: midpoints between consecutive endpoints. Every open
    /// interval contains a neighborhood of each of its points, so the
    /// multiplicity is maximized on these cells.
    fn cell_points(&self) -> Vec<f64> {
        self.endpoints()
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }

    fn members_at(&self, x: f64) -> Vec<usize> {
        (0..self.0.len())
            .filter(|&i| self.0[i].0 < x && x < self.0[i].1)
            .collect()
    }

    /// Largest number of intervals sharing a point, by endpoint sweep.
    pub fn max_multiplicity(&self) -> usize {
        let mut events: Vec<(f64, i32)> = self
            .0
            .iter()
            .flat_map(|&(a, b)| [(a, 1), (b, -1)])
            .collect();
        // Closings before openings at a shared endpoint: open intervals
        // (0, 1) and (1, 2) never overlap.
        events.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let (mut cur, mut best) = (0i32, 0i32);
        for (_, d) in events {
            cur += d;
            best = best.max(cur);
        }
        best as usize
    }

    /// The union as disjoint open intervals; touching intervals stay apart
    /// since their shared endpoint is not covered.
    pub fn union(&self) -> Vec<(f64, f64)> {
        let mut v = self.0.clone();
        v.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (a, b) in v {
            match out.last_mut() {
                Some(last) if a < last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        out
    }
}

/// Sub-family with the same union and multiplicity at most 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverReduction {
    /// Indices into the input, ascending.
    pub kept: Vec<usize>,
    pub family: IntervalFamily,
    pub multiplicity: usize,
    pub union_preserved: bool,
}

/// Repeatedly find a point in three or more intervals; among those, the one
/// reaching furthest left and the one reaching furthest right cover every
/// other one there, so a third can be deleted.
pub fn covering_reduce_multiplicity(family: &IntervalFamily) -> CoverReduction {
    let mut kept: Vec<usize> = (0..family.0.len()).collect();
    loop {
        let current = IntervalFamily(kept.iter().map(|&i| family.0[i]).collect());
        let crowded = current
            .cell_points()
            .into_iter()
            .map(|x| current.members_at(x))
            .find(|m| m.len() >= 3);
        let Some(members) = crowded else {
            let multiplicity = current.max_multiplicity();
            let union_preserved = current.union() == family.union();
            return CoverReduction {
                kept,
                family: current,
                multiplicity,
                union_preserved,
            };
        };
        let iv = &current.0;
        let left = *members
            .iter()
            .min_by(|&&x, &&y| {
                iv[x]
                    .0
                    .total_cmp(&iv[y].0)
                    .then(iv[y].1.total_cmp(&iv[x].1))
            })
            .expect("nonempty");
        let right = *members
            .iter()
            .filter(|&&x| x != left)
            .max_by(|&&x, &&y| iv[x].1.total_cmp(&iv[y].1))
            .expect("at least three members");
        let victim = *members
            .iter()
            .find(|&&x| x != left && x != right)
            .expect("at least three members");
        debug_assert!(iv[left].0 <= iv[victim].0 && iv[victim].1 <= iv[right].1.max(iv[left].1));
        kept.remove(victim);
    }
}

/// A distance function for covering arguments.
pub trait Metric {
    type Point: Clone;
    fn distance(&self, a: &Self::Point, b: &Self::Point) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Line;

impl Metric for Line {
    type Point = f64;
    fn distance(&self, a: &f64, b: &f64) -> f64 {
        (a - b).abs()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Plane;

impl Metric for Plane {
    type Point = [f64; 2];
    fn distance(&self, a: &[f64; 2], b: &[f64; 2]) -> f64 {
        (a[0] - b[0]).hypot(a[1] - b[1])
    }
}

/// Open ball `B(center, radius)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball<P> {
    pub center: P,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VitaliSelection {
    /// Indices of selected balls, in selection order.
    pub selected: Vec<usize>,
    /// For every input ball, a selected ball `j` with `d(c_i, c_j) + r_i <= 3 r_j`.
    pub cover: Vec<usize>,
}

/// Greedy selection by decreasing radius.
///
/// A ball is taken when `d(c, c_j) >= r + r_j` for every ball taken so far,
/// which certifies disjointness in any metric. A rejected ball meets some
/// earlier `j` with `r_j >= r`, so `d + r < r_j + 2 r <= 3 r_j`.
pub fn vitali_select<M: Metric>(metric: &M, balls: &[Ball<M::Point>]) -> Result<VitaliSelection> {
    if let Some(b) = balls
        .iter()
        .find(|b| !(b.radius > 0.0 && b.radius.is_finite()))
    {
        return Err(Error::Input(format!(
            "ball radius must be positive, got {}",
            b.radius
        )));
    }
    let mut order: Vec<usize> = (0..balls.len()).collect();
    order.sort_by(|&x, &y| balls[y].radius.total_cmp(&balls[x].radius).then(x.cmp(&y)));
    let mut selected: Vec<usize> = Vec::new();
    let mut cover = vec![usize::MAX; balls.len()];
    for i in order {
        let b = &balls[i];
        let hit = selected
            .iter()
            .copied()
            .find(|&j| metric.distance(&b.center, &balls[j].center) < b.radius + balls[j].radius);
        match hit {
            Some(j) => cover[i] = j,
            None => {
                selected.push(i);
                cover[i] = i;
            }
        }
    }
    Ok(VitaliSelection { selected, cover })
}

/// Checks for a Vitali selection: pairwise disjoint (`d >= r_i + r_j`) and
/// `d(c_i, c_j) + r_i <= 3 r_j` for the recorded cover.
pub fn vitali_report<M: Metric>(
    metric: &M,
    balls: &[Ball<M::Point>],
    sel: &VitaliSelection,
) -> Report {
    let mut overlap = 0.0f64;
    for (k, &i) in sel.selected.iter().enumerate() {
        for &j in &sel.selected[k + 1..] {
            let d = metric.distance(&balls[i].center, &balls[j].center);
            overlap = overlap.max(balls[i].radius + balls[j].radius - d);
        }
    }
    let mut excess = f64::NEG_INFINITY;
    for (i, &j) in sel.cover.iter().enumerate() {
        let d = metric.distance(&balls[i].center, &balls[j].center);
        excess = excess.max((d + balls[i].radius) / (3.0 * balls[j].radius));
    }
    let mut report = Report::new("vitali");
    report
        .check(Check::at_most(
            "pairwise overlap r_i + r_j - d",
            overlap,
            0.0,
        ))
        .check(Check::at_most("(d + r_i) / (3 r_j)", excess.max(0.0), 1.0))
        .value("selected", sel.selected.len() as f64);
    report
}

/// Rows `f(x, .)` sharing one window, with positive weights `mu_x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductGridFunction {
    pub rows: Vec<GridFunction>,
    pub weights: Vec<f64>,
}

impl ProductGridFunction {
    pub fn new(rows: Vec<GridFunction>, weights: Vec<f64>) -> Result<Self> {
        if rows.is_empty() || rows.len() != weights.len() {
            return Err(Error::Input(
                "need one positive weight per row and at least one row".into(),
            ));
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::Input("row weights must be positive".into()));
        }
        let (lo, len) = (rows[0].lo, rows[0].values.len());
        if rows.iter().any(|r| r.lo != lo || r.values.len() != len) {
            return Err(Error::Input("rows must share one window".into()));
        }
        Ok(ProductGridFunction { rows, weights })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductMaximal {
    pub profiles: Vec<MaximalProfile>,
    pub report: Report,
}

/// Row-wise maximal functions with the weighted weak-type and `L^p` bounds.
pub fn product_maximal(
    f: &ProductGridFunction,
    lambdas: &[f64],
    ps: &[f64],
) -> Result<ProductMaximal> {
    if ps.iter().any(|&p| !(p > 1.0)) {
        return Err(Error::Domain("L^p bound needs p > 1".into()));
    }
    let exec = Execution::default();
    let profiles = exec.map_slice(&f.rows, discrete_maximal);
    let oracles = exec.map_slice(&f.rows, MaximalOracle::new);
    let total_mass: f64 = f.rows.iter().zip(&f.weights).map(|(r, w)| w * r.l1()).sum();
    let mut report = Report::new("product-maximal");
    if total_mass == 0.0 {
        return Err(Error::Input(
            "product maximal report needs a nonzero function".into(),
        ));
    }
    let mut worst = 0.0f64;
    let mut measures = Vec::with_capacity(lambdas.len());
    for &lam in lambdas {
        let measure: f64 = oracles
            .iter()
            .zip(&f.rows)
            .zip(&f.weights)
            .map(|((o, row), w)| match o.hull() {
                Some(h) => w * o.level_set(h, lam).size() as f64,
                None => {
                    let _ = row;
                    0.0
                }
            })
            .sum();
        worst = worst.max(measure * lam / total_mass);
        measures.push(measure);
    }
    report
        .check(Check::at_most(
            "weighted level measure * lambda / weighted mass",
            worst,
            WEAK_CONSTANT,
        ))
        .value("worst_weak_ratio", worst)
        .trace("lambda", lambdas.to_vec())
        .trace("level_measure", measures);
    for &p in ps {
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for (row, w) in f.rows.iter().zip(&f.weights) {
            let r = lp_bound_report(row, p)?;
            let row_rhs = row.lp_sum(p);
            lhs += w * r.values["upper_ratio"] * row_rhs;
            rhs += w * row_rhs;
        }
        let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
        report
            .check(Check::at_most(
                format!("weighted sum f*^p / sum |f|^p, p = {p}"),
                ratio,
                lp_constant(p),
            ))
            .value(format!("lp_ratio_p{p}"), ratio);
    }
    Ok(ProductMaximal { profiles, report })
}

/// Random inputs for experiments.
pub mod random {
    use rand::Rng;

    use super::*;

    /// Nonnegative values on `[0, len)` with `len <= max_len`, roughly a
    /// third of them zero, occasionally spiky.
    pub fn grid_function(max_len: usize, rng: &mut impl Rng) -> GridFunction {
        let len = rng.random_range(1..=max_len);
        let spiky = rng.random_bool(0.3);
        let mut values: Vec<f64> = (0..len)
            .map(|_| {
                if rng.random_bool(0.35) {
                    0.0
                } else if spiky {
                    rng.random::<f64>().powi(4) * 10.0
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        if values.iter().all(|&v| v == 0.0) {
            values[rng.random_range(0..len)] = 1.0;
        }
        GridFunction::from_real(rng.random_range(-20..20), &values).expect("nonempty")
    }

    /// Up to `max_n` intervals with endpoints on a coarse grid in `[0, 20]`,
    /// so shared endpoints occur.
    pub fn interval_family(max_n: usize, rng: &mut impl Rng) -> IntervalFamily {
        let n = rng.random_range(1..=max_n);
        let v = (0..n)
            .map(|_| {
                let a = rng.random_range(0..40) as f64 * 0.5;
                let len = rng.random_range(1..12) as f64 * 0.5;
                (a, a + len)
            })
            .collect();
        IntervalFamily::new(v).expect("positive lengths")
    }
}
