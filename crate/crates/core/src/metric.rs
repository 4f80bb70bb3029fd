//! Ultrametric sequence spaces.
//!
//! Points are strings of length `D` over an alphabet `A`, with
//! `d(x, y) = rho^n` where `n` is the length of the common prefix. Open
//! balls are cylinders: with `k = min{k : rho^k < r}`, `B(x, r)` is the set of
//! strings sharing the first `min(k, D)` symbols of `x`. Every count and
//! measure below is therefore exact.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::complex::{trial_rng, KahanSum, Rng};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::maximal::Metric;
use crate::report::{fmt17, Check, Report};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpace")]
pub struct UltrametricSpace {
    pub alphabet: usize,
    pub rho: f64,
    pub depth: usize,
    pub weights: Vec<f64>,
    #[serde(skip)]
    powers: Vec<f64>,
}

#[derive(Deserialize)]
struct RawSpace {
    alphabet: usize,
    rho: f64,
    depth: usize,
    weights: Option<Vec<f64>>,
}

impl TryFrom<RawSpace> for UltrametricSpace {
    type Error = Error;
    fn try_from(r: RawSpace) -> Result<Self> {
        let w = r
            .weights
            .unwrap_or_else(|| vec![1.0 / r.alphabet.max(1) as f64; r.alphabet]);
        UltrametricSpace::new(r.alphabet, r.rho, r.depth, w)
    }
}

impl UltrametricSpace {
    pub fn new(alphabet: usize, rho: f64, depth: usize, weights: Vec<f64>) -> Result<Self> {
        if !(2..=256).contains(&alphabet) {
            return Err(Error::Input(format!(
                "alphabet size must be in 2..=256, got {alphabet}"
            )));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::Input(format!(
                "scale rho must lie in (0, 1), got {rho}"
            )));
        }
        if depth == 0 {
            return Err(Error::Input("depth must be at least 1".into()));
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
        let powers = (0..=depth).map(|k| rho.powi(k as i32)).collect();
        Ok(UltrametricSpace {
            alphabet,
            rho,
            depth,
            weights,
            powers,
        })
    }

    pub fn uniform(alphabet: usize, rho: f64, depth: usize) -> Result<Self> {
        Self::new(alphabet, rho, depth, vec![1.0 / alphabet as f64; alphabet])
    }

    /// The same strings under `d^a`, which is the ultrametric with scale `rho^a`.
    pub fn snowflake(&self, a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Domain(format!(
                "snowflake exponent must be positive, got {a}"
            )));
        }
        Self::new(
            self.alphabet,
            self.rho.powf(a),
            self.depth,
            self.weights.clone(),
        )
    }

    pub fn point_count(&self) -> Option<usize> {
        self.alphabet.checked_pow(self.depth as u32)
    }

    fn check_point(&self, x: &[u8]) -> Result<()> {
        if x.len() != self.depth {
            return Err(Error::DimensionMismatch {
                left: self.depth,
                right: x.len(),
            });
        }
        if x.iter().any(|&s| s as usize >= self.alphabet) {
            return Err(Error::Input("symbol outside the alphabet".into()));
        }
        Ok(())
    }

    /// `rho^n` with `n` the length of the common prefix; zero for equal strings.
    pub fn distance(&self, x: &[u8], y: &[u8]) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.dist_unchecked(x, y))
    }

    fn dist_unchecked(&self, x: &[u8], y: &[u8]) -> f64 {
        let n = common_prefix(x, y);
        if n == self.depth {
            0.0
        } else {
            self.powers[n]
        }
    }

    /// Cylinder level of the open ball of radius `r`: the least `k` with
    /// `rho^k < r`, capped at `D`.
    pub fn open_level(&self, r: f64) -> usize {
        self.powers
            .iter()
            .position(|&p| p < r)
            .unwrap_or(self.depth)
            .min(self.depth)
    }

    /// Cylinder level of the closed ball of radius `r`: the least `k` with
    /// `rho^k <= r`, capped at `D`.
    pub fn closed_level(&self, r: f64) -> usize {
        self.powers
            .iter()
            .position(|&p| p <= r)
            .unwrap_or(self.depth)
            .min(self.depth)
    }

    /// The open ball `B(x, r)` as a cylinder.
    pub fn ball(&self, x: &[u8], r: f64) -> Cylinder {
        Cylinder(x[..self.open_level(r)].to_vec())
    }

    /// `mu` of a cylinder, the product of symbol weights along its prefix.
    pub fn measure(&self, c: &Cylinder) -> f64 {
        c.0.iter().map(|&s| self.weights[s as usize]).product()
    }

    pub fn random_point(&self, rng: &mut Rng) -> Vec<u8> {
        (0..self.depth)
            .map(|_| rng.random_range(0..self.alphabet) as u8)
            .collect()
    }

    /// A point agreeing with `x` on exactly its first `n` symbols (all of
    /// them when `n >= D`).
    pub fn point_near(&self, x: &[u8], n: usize, rng: &mut Rng) -> Vec<u8> {
        let mut y = self.random_point(rng);
        let n = n.min(self.depth);
        y[..n].copy_from_slice(&x[..n]);
        if n < self.depth {
            let shift = rng.random_range(1..self.alphabet) as u8;
            y[n] = (x[n] + shift) % self.alphabet as u8;
        }
        y
    }

    /// Every point, in lexicographic order.
    pub fn all_points(&self) -> Result<Vec<Vec<u8>>> {
        let count = self
            .point_count()
            .filter(|&c| c <= 1 << 20)
            .ok_or_else(|| Error::Input("space too large to enumerate".into()))?;
        Ok((0..count)
            .map(|mut idx| {
                let mut p = vec![0u8; self.depth];
                for s in p.iter_mut().rev() {
                    *s = (idx % self.alphabet) as u8;
                    idx /= self.alphabet;
                }
                p
            })
            .collect())
    }
}

impl Metric for UltrametricSpace {
    type Point = Vec<u8>;
    fn distance(&self, a: &Vec<u8>, b: &Vec<u8>) -> f64 {
        self.dist_unchecked(a, b)
    }
}

fn common_prefix(x: &[u8], y: &[u8]) -> usize {
    x.iter().zip(y).take_while(|(a, b)| a == b).count()
}

/// The strings starting with a given prefix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cylinder(pub Vec<u8>);

impl Cylinder {
    pub fn contains_point(&self, x: &[u8]) -> bool {
        x.starts_with(&self.0)
    }

    pub fn contains(&self, other: &Cylinder) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn disjoint(&self, other: &Cylinder) -> bool {
        !self.contains(other) && !other.contains(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BallRelation {
    Equal,
    FirstInSecond,
    SecondInFirst,
    Disjoint,
    /// Overlapping with neither inside the other; impossible in an ultrametric.
    Crossing,
}

/// Relation of two point sets given by membership flags.
pub fn relation_from_members(a: &[bool], b: &[bool]) -> BallRelation {
    let a_in_b = a.iter().zip(b).all(|(&x, &y)| !x || y);
    let b_in_a = a.iter().zip(b).all(|(&x, &y)| !y || x);
    let meet = a.iter().zip(b).any(|(&x, &y)| x && y);
    match (a_in_b, b_in_a, meet) {
        (true, true, _) => BallRelation::Equal,
        (true, false, _) => BallRelation::FirstInSecond,
        (false, true, _) => BallRelation::SecondInFirst,
        (false, false, false) => BallRelation::Disjoint,
        (false, false, true) => BallRelation::Crossing,
    }
}

/// Membership by distance, over every point when the space has at most
/// `2^12` of them and otherwise over the centers plus 256 sampled points.
fn membership_universe(space: &UltrametricSpace, seed: u64) -> Vec<Vec<u8>> {
    match space.point_count() {
        Some(c) if c <= 1 << 12 => space.all_points().expect("small"),
        _ => {
            let mut r = trial_rng(seed, usize::MAX);
            (0..256).map(|_| space.random_point(&mut r)).collect()
        }
    }
}

fn random_radius(space: &UltrametricSpace, rng: &mut Rng) -> f64 {
    // Scales between rho^D and 1.5, with some hits exactly on rho^k.
    let k = rng.random_range(0..=space.depth);
    if rng.random_bool(0.2) {
        space.powers[k]
    } else {
        space.powers[k]
            * (1.0 + rng.random::<f64>() * (1.0 / space.rho - 1.0)).min(1.5 / space.powers[k])
    }
}

/// Random pairs of balls: the relation from distance-based membership must
/// be nesting or disjointness, and must match the cylinder comparison.
pub fn ball_trichotomy_check(space: &UltrametricSpace, trials: usize, seed: u64) -> Report {
    let universe = membership_universe(space, seed);
    let outcomes = Execution::default().map_range(trials, |i| {
        let mut rng = trial_rng(seed, i);
        let x = space.random_point(&mut rng);
        let near = rng.random_range(0..=space.depth);
        let y = space.point_near(&x, near, &mut rng);
        let (r, t) = (
            random_radius(space, &mut rng),
            random_radius(space, &mut rng),
        );
        let member = |c: &[u8], rad: f64, pts: &[Vec<u8>]| -> Vec<bool> {
            pts.iter()
                .map(|p| space.dist_unchecked(c, p) < rad)
                .collect()
        };
        let mut pts = universe.clone();
        pts.push(x.clone());
        pts.push(y.clone());
        let rel = relation_from_members(&member(&x, r, &pts), &member(&y, t, &pts));
        let (bx, by) = (space.ball(&x, r), space.ball(&y, t));
        let cyl_rel = match (bx.contains(&by), by.contains(&bx)) {
            (true, true) => BallRelation::Equal,
            (false, true) => BallRelation::FirstInSecond,
            (true, false) => BallRelation::SecondInFirst,
            (false, false) => BallRelation::Disjoint,
        };
        // With a sampled universe, a strict nesting can look like equality.
        let consistent = rel == cyl_rel
            || (universe.len() < space.point_count().unwrap_or(usize::MAX)
                && rel == BallRelation::Equal
                && matches!(
                    cyl_rel,
                    BallRelation::FirstInSecond | BallRelation::SecondInFirst
                ));
        // r, t below d(x, y) forces disjointness.
        let d = space.dist_unchecked(&x, &y);
        let forced = !(r <= d && t <= d) || rel == BallRelation::Disjoint;
        (rel == BallRelation::Crossing, consistent, forced)
    });
    let crossings = outcomes.iter().filter(|o| o.0).count();
    let mismatches = outcomes.iter().filter(|o| !o.1).count();
    let unforced = outcomes.iter().filter(|o| !o.2).count();
    let mut report = Report::new("ball-trichotomy");
    report
        .check(Check::at_most("crossing ball pairs", crossings as f64, 0.0))
        .check(Check::at_most(
            "membership disagrees with cylinder comparison",
            mismatches as f64,
            0.0,
        ))
        .check(Check::at_most(
            "small radii not disjoint",
            unforced as f64,
            0.0,
        ))
        .value("trials", trials as f64)
        .value("seed", seed as f64);
    report
}

/// Whether `B(x, r)` is the cylinder of length `min(k, D)` for the least `k`
/// with `rho^k < r`, checked point by point over a small space.
pub fn ball_is_cylinder(space: &UltrametricSpace, x: &[u8], r: f64) -> Result<bool> {
    let c = space.ball(x, r);
    Ok(space
        .all_points()?
        .iter()
        .all(|p| (space.dist_unchecked(x, p) < r) == c.contains_point(p)))
}

/// Space and measure doubling constants over sampled balls.
///
/// Space: radius-`r/2` open balls are level-`open_level(r/2)` cylinders and
/// partition each ball, so the minimal cover of `B(x, r)` has
/// `|A|^{level(r/2) - level(r)}` members. Measure: `mu(B(x, 2r)) / mu(B(x, r))`
/// exactly from symbol weights.
pub fn doubling_constant(space: &UltrametricSpace, samples: usize, seed: u64) -> Report {
    let rows = Execution::default().map_range(samples, |i| {
        let mut rng = trial_rng(seed, i);
        let x = space.random_point(&mut rng);
        // Scales at or above rho^{D-1}.
        let k = rng.random_range(0..space.depth);
        let r = space.powers[k] * (1.0 + rng.random::<f64>() * (1.0 / space.rho - 1.0));
        let (l, half) = (space.open_level(r), space.open_level(r / 2.0));
        let cover = (space.alphabet as f64).powi((half - l) as i32);
        let b = space.ball(&x, r);
        let l2 = space.open_level(2.0 * r);
        // mu(2B)/mu(B) is the reciprocal weight of the symbols between the levels.
        let ratio = 1.0 / space.measure(&Cylinder(x[l2..l].to_vec()));
        (cover, ratio, space.measure(&b))
    });
    let space_c = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let min_measure = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    let measure_c = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    // Doubling the radius climbs at most ceil(log 2 / log(1/rho)) levels.
    let climb = (2f64.ln() / (1.0 / space.rho).ln()).ceil() as i32;
    let w_min = space.weights.iter().copied().fold(f64::INFINITY, f64::min);
    let mut report = Report::new("doubling");
    report
        .check(Check::at_most(
            "space constant",
            space_c,
            (space.alphabet as f64).powi(climb),
        ))
        .check(Check::at_most(
            "measure constant",
            measure_c,
            w_min.powi(-climb),
        ))
        .check(Check::holds(
            "all ball measures positive",
            min_measure > 0.0,
            min_measure,
        ))
        .value("space_constant", space_c)
        .value("measure_constant", measure_c)
        .value("seed", seed as f64);
    report
}

/// `(x + y)^a <= x^a + y^a` for nonnegative pairs, `0 < a <= 1`.
pub fn snowflake_scalar_check(pairs: &[(f64, f64)], a: f64) -> Result<Report> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::Domain(format!(
            "snowflake of a general metric needs 0 < a <= 1, got {a}"
        )));
    }
    if pairs.iter().any(|&(x, y)| !(x >= 0.0 && y >= 0.0)) {
        return Err(Error::Input("snowflake pairs must be nonnegative".into()));
    }
    let worst = pairs
        .iter()
        .map(|&(x, y)| (x + y).powf(a) - (x.powf(a) + y.powf(a)))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut report = Report::new("snowflake-scalar");
    report
        .check(Check::at_most("(x+y)^a - x^a - y^a", worst.max(0.0), 0.0))
        .value("a", a)
        .value("worst", worst);
    Ok(report)
}

/// `d^a` on an ultrametric: still an ultrametric for any `a > 0`, and
/// `B_d(p, r) = B_{d^a}(p, r^a)` as cylinders.
pub fn snowflake_space_check(
    space: &UltrametricSpace,
    a: f64,
    trials: usize,
    seed: u64,
) -> Result<Report> {
    let flake = space.snowflake(a)?;
    let rows = Execution::default().map_range(trials, |i| {
        let mut rng = trial_rng(seed, i);
        let x = space.random_point(&mut rng);
        let y = space.point_near(&x, rng.random_range(0..=space.depth), &mut rng);
        let z = space.point_near(&x, rng.random_range(0..=space.depth), &mut rng);
        let d = |p: &[u8], q: &[u8]| space.dist_unchecked(p, q).powf(a);
        let ultra = d(&x, &z) - d(&x, &y).max(d(&y, &z));
        let r = random_radius(space, &mut rng);
        let same_ball = space.ball(&x, r) == flake.ball(&x, r.powf(a));
        // Distances in the snowflaked space agree with d^a up to rounding of powers.
        let agree = (flake.dist_unchecked(&x, &y) - d(&x, &y)).abs() <= 1e-12;
        (ultra, same_ball, agree)
    });
    let worst = rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let balls = rows.iter().filter(|r| !r.1).count();
    let agree = rows.iter().filter(|r| !r.2).count();
    let mut report = Report::new("snowflake-space");
    report
        .check(Check::at_most(
            "d^a(x,z) - max(d^a(x,y), d^a(y,z))",
            worst.max(0.0),
            0.0,
        ))
        .check(Check::at_most(
            "balls not identified under r -> r^a",
            balls as f64,
            0.0,
        ))
        .check(Check::at_most(
            "d^a differs from the rescaled space",
            agree as f64,
            0.0,
        ))
        .value("a", a)
        .value("seed", seed as f64);
    Ok(report)
}

/// Inclusion-maximal cylinders of a collection (duplicates kept once).
pub fn maximal_balls(balls: &[Cylinder]) -> Vec<Cylinder> {
    let mut out: Vec<Cylinder> = Vec::new();
    for b in balls {
        if balls.iter().any(|c| c != b && c.contains(b)) || out.contains(b) {
            continue;
        }
        out.push(b.clone());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    /// Levels `k`; radii are `rho'^k` with `rho' = rho^a`.
    pub levels: Vec<usize>,
    pub log_inv_radius: Vec<f64>,
    /// Minimal number of closed radius-`r` balls covering the space.
    pub counts: Vec<f64>,
    pub slope: f64,
    pub std_error: f64,
    /// Approximate 95% interval `slope +- 1.96 se`.
    pub interval: (f64, f64),
    /// Box-counting dimension; it agrees with the Hausdorff dimension on
    /// these self-similar spaces but is what is actually measured here.
    pub estimator: String,
}

impl DimensionEstimate {
    /// Rows `log_inv_r,log_n`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("log_inv_r,log_n\n");
        for (x, n) in self.log_inv_radius.iter().zip(&self.counts) {
            out.push_str(&format!("{},{}\n", fmt17(*x), fmt17(n.ln())));
        }
        out
    }
}

/// Minimal cover by closed balls of radius `rho^k`: those balls are the
/// level-`k` cylinders, which partition the space, so the count is
/// `|A|^{min(k, D)}`.
pub fn covering_count(space: &UltrametricSpace, k: usize) -> f64 {
    (space.alphabet as f64).powi(k.min(space.depth) as i32)
}

/// Box-counting dimension of the space under `d^a` from levels in `depths`.
pub fn box_dimension(
    space: &UltrametricSpace,
    a: f64,
    depths: std::ops::RangeInclusive<usize>,
) -> Result<DimensionEstimate> {
    let flake = space.snowflake(a)?;
    let levels: Vec<usize> = depths.collect();
    if levels.len() < 4 {
        return Err(Error::Input("box dimension needs at least 4 scales".into()));
    }
    let deepest = *levels.last().expect("nonempty");
    if deepest + 1 > space.depth {
        return Err(Error::Depth {
            needed: deepest + 1,
            available: space.depth,
        });
    }
    let rows = Execution::default().map_slice(&levels, |&k| {
        let r = flake.powers[k];
        // Closed radius-r balls are level-k cylinders under the snowflaked metric.
        debug_assert_eq!(flake.closed_level(r), k);
        (-r.ln(), covering_count(&flake, flake.closed_level(r)))
    });
    let xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let counts: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let ys: Vec<f64> = counts.iter().map(|n| n.ln()).collect();
    let (slope, std_error) = least_squares_slope(&xs, &ys);
    Ok(DimensionEstimate {
        levels,
        log_inv_radius: xs,
        counts,
        slope,
        std_error,
        interval: (slope - 1.96 * std_error, slope + 1.96 * std_error),
        estimator: "box-counting".into(),
    })
}

/// Least-squares slope and its standard error.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs
        .iter()
        .map(|x| (x - mx).powi(2))
        .collect::<KahanSum>()
        .value();
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .collect::<KahanSum>()
        .value();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .collect::<KahanSum>()
        .value();
    let se = if xs.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    (slope, se)
}

/// Box-dimension report checking the estimate against
/// `log|A| / (a log(1/rho))` within `tol`.
pub fn dimension_report(
    space: &UltrametricSpace,
    a: f64,
    depths: std::ops::RangeInclusive<usize>,
    tol: f64,
) -> Result<Report> {
    let est = box_dimension(space, a, depths)?;
    let target = (space.alphabet as f64).ln() / (a * (1.0 / space.rho).ln());
    let mut report = Report::new("box-dimension");
    report
        .check(Check::close("box dimension", est.slope, target, tol))
        .value("slope", est.slope)
        .value("std_error", est.std_error)
        .value("a", a)
        .trace("log_inv_r", est.log_inv_radius.clone())
        .trace("log_n", est.counts.iter().map(|n| n.ln()).collect());
    Ok(report)
}
