//! Functions on an equispaced circle grid.
//!
//! Coefficients come from the trapezoid rule, which is exact for
//! trigonometric polynomials of degree below `m/2`. Fejér and Abel–Poisson
//! means scale coefficients and resynthesize; rotations by grid angles act as
//! exact permutations of the samples.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::complex::{ComplexSum, C64, I, ONE};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::report::{fmt17, Check, Report};

/// Truncation target for Abel–Poisson means, relative to the sup norm.
pub const ABEL_POISSON_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct CircleGrid {
    m: usize,
}

impl TryFrom<usize> for CircleGrid {
    type Error = Error;
    fn try_from(m: usize) -> Result<Self> {
        CircleGrid::new(m)
    }
}

impl From<CircleGrid> for usize {
    fn from(g: CircleGrid) -> usize {
        g.m
    }
}

impl CircleGrid {
    pub fn new(m: usize) -> Result<Self> {
        if m < 4 {
            return Err(Error::Input(format!("circle grid needs m >= 4, got {m}")));
        }
        Ok(CircleGrid { m })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn theta(&self, k: usize) -> f64 {
        TAU * (k % self.m) as f64 / self.m as f64
    }

    /// `exp(2 pi i k / m)`, exact at multiples of a quarter turn.
    pub fn root(&self, k: usize) -> C64 {
        let m = self.m as i64;
        let k = (k % self.m) as i64;
        let q = (4 * k + m / 2).div_euclid(m);
        let angle = TAU * (4 * k - q * m) as f64 / (4 * m) as f64;
        let (s, c) = angle.sin_cos();
        let z = C64::new(c, s);
        match q.rem_euclid(4) {
            0 => z,
            1 => z * I,
            2 => -z,
            _ => -z * I,
        }
    }

    /// `exp(2 pi i k / m)` for every `k`.
    pub fn roots(&self) -> Vec<C64> {
        (0..self.m).map(|k| self.root(k)).collect()
    }

    /// Alias-free contract: `m > 2 degree`.
    pub fn check_degree(&self, degree: usize) -> Result<()> {
        if self.m > 2 * degree {
            Ok(())
        } else {
            Err(Error::Aliasing { m: self.m, degree })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSampled")]
pub struct SampledCircleFunction {
    grid: CircleGrid,
    values: Vec<C64>,
}

#[derive(Deserialize)]
struct RawSampled {
    grid: CircleGrid,
    values: Vec<C64>,
}

impl TryFrom<RawSampled> for SampledCircleFunction {
    type Error = Error;
    fn try_from(r: RawSampled) -> Result<Self> {
        SampledCircleFunction::new(r.grid, r.values)
    }
}

impl SampledCircleFunction {
    pub fn new(grid: CircleGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.m {
            return Err(Error::DimensionMismatch {
                left: grid.m,
                right: values.len(),
            });
        }
        if values
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::Input("sample values must be finite".into()));
        }
        Ok(SampledCircleFunction { grid, values })
    }

    /// Sample `f(theta)` at the nodes.
    pub fn from_angle(grid: CircleGrid, f: impl Fn(f64) -> C64) -> Self {
        let values = (0..grid.m).map(|k| f(grid.theta(k))).collect();
        SampledCircleFunction { grid, values }
    }

    /// Sample a real `f(theta)`.
    pub fn from_real(grid: CircleGrid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_angle(grid, |t| C64::new(f(t), 0.0))
    }

    /// `z^l` on the grid.
    pub fn monomial(grid: CircleGrid, l: i64) -> Self {
        let m = grid.m as i64;
        let values = (0..m)
            .map(|k| grid.root((l * k).rem_euclid(m) as usize))
            .collect();
        SampledCircleFunction { grid, values }
    }

    pub fn constant(grid: CircleGrid, c: C64) -> Self {
        SampledCircleFunction {
            grid,
            values: vec![c; grid.m],
        }
    }

    pub fn grid(&self) -> CircleGrid {
        self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max_k |f_k - g_k|`.
    pub fn sup_distance(&self, other: &SampledCircleFunction) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::DimensionMismatch {
                left: self.grid.m,
                right: other.grid.m,
            });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// `(2 pi / m) sum f_k`, the grid version of `integral f |dz|`.
    pub fn integral(&self) -> C64 {
        self.mean() * TAU
    }

    pub fn mean(&self) -> C64 {
        let mut acc = ComplexSum::new();
        for z in &self.values {
            acc.add(*z);
        }
        acc.value() / self.grid.m as f64
    }

    /// Rows `theta,re,im` with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,re,im\n");
        for (k, z) in self.values.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                fmt17(self.grid.theta(k)),
                fmt17(z.re),
                fmt17(z.im)
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierCoeffs {
    degree: usize,
    /// `c_{-N}, ..., c_N`.
    coeffs: Vec<C64>,
}

impl FourierCoeffs {
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `c_j`, zero outside `-N..=N`.
    pub fn get(&self, j: i64) -> C64 {
        if j.unsigned_abs() as usize > self.degree {
            return C64::new(0.0, 0.0);
        }
        self.coeffs[(j + self.degree as i64) as usize]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.coeffs
    }

    /// `sum_j |c_j|^2`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// `c_j = (1/m) sum_k f_k w^{-jk}` for `|j| <= N`.
pub fn fourier_coefficients(f: &SampledCircleFunction, degree: usize) -> Result<FourierCoeffs> {
    let grid = f.grid;
    grid.check_degree(degree)?;
    let m = grid.m as i64;
    let roots = grid.roots();
    let coeffs = (-(degree as i64)..=degree as i64)
        .map(|j| {
            let mut acc = ComplexSum::new();
            for (k, v) in f.values.iter().enumerate() {
                acc.add(v * roots[(-j * k as i64).rem_euclid(m) as usize]);
            }
            acc.value() / grid.m as f64
        })
        .collect();
    Ok(FourierCoeffs { degree, coeffs })
}

/// `sum_{|j| <= d} weight(j) c_j z^j` on the grid.
pub fn synthesize(
    coeffs: &FourierCoeffs,
    grid: CircleGrid,
    weight: impl Fn(i64) -> f64 + Sync,
    exec: Execution,
) -> Result<SampledCircleFunction> {
    grid.check_degree(coeffs.degree)?;
    let m = grid.m as i64;
    let d = coeffs.degree as i64;
    let roots = grid.roots();
    let scaled: Vec<(i64, C64)> = (-d..=d)
        .map(|j| (j, coeffs.get(j) * weight(j)))
        .filter(|(_, c)| *c != C64::new(0.0, 0.0))
        .collect();
    let values = exec.map_range(grid.m, |k| {
        let mut acc = ComplexSum::new();
        for &(j, c) in &scaled {
            acc.add(c * roots[(j * k as i64).rem_euclid(m) as usize]);
        }
        acc.value()
    });
    SampledCircleFunction::new(grid, values)
}

/// A summation mean together with its error report.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleMean {
    pub function: SampledCircleFunction,
    pub report: Report,
}

/// Cesàro mean of the symmetric partial sums, `sum (1 - |j|/(n+1)) c_j z^j`,
/// using coefficients up to degree `min(n, N)`.
pub fn fejer_mean(f: &SampledCircleFunction, n: usize, degree: usize) -> Result<CircleMean> {
    f.grid.check_degree(n.max(degree))?;
    let d = n.min(degree);
    let coeffs = fourier_coefficients(f, d)?;
    let scale = (n + 1) as f64;
    let function = synthesize(
        &coeffs,
        f.grid,
        |j| 1.0 - j.unsigned_abs() as f64 / scale,
        Execution::default(),
    )?;
    let mut report = Report::new("fejer-mean");
    report
        .value("n", n as f64)
        .value("degree", d as f64)
        .value("sup_error", function.sup_distance(f)?);
    Ok(CircleMean { function, report })
}

/// Smallest `N` with `2 r^{N+1} / (1 - r) <= 1e-12`.
pub fn abel_poisson_degree(r: f64) -> Result<usize> {
    check_radius(r)?;
    let target = ABEL_POISSON_TOL * (1.0 - r) / 2.0;
    let n = (target.ln() / r.ln()).ceil() - 1.0;
    let mut n = n.max(0.0) as usize;
    while 2.0 * r.powi(n as i32 + 1) / (1.0 - r) > ABEL_POISSON_TOL {
        n += 1;
    }
    Ok(n)
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "Abel-Poisson radius must lie in (0, 1), got {r}"
        )))
    }
}

/// `sum_{|j| <= N} c_j r^{|j|} z^j`.
///
/// Since `|c_j| <= |f|_sup`, the omitted tail is at most
/// `2 |f|_sup r^{N+1} / (1 - r)`; that must be below `1e-12 |f|_sup`.
pub fn abel_poisson_mean(f: &SampledCircleFunction, r: f64, degree: usize) -> Result<CircleMean> {
    check_radius(r)?;
    let needed = abel_poisson_degree(r)?;
    if degree < needed {
        let max_alias_free = (f.grid.m - 1) / 2;
        return Err(Error::Resolution(if needed > max_alias_free {
            format!(
                "r = {r} needs degree {needed} but a grid of {} points allows at most {max_alias_free}",
                f.grid.m
            )
        } else {
            format!("r = {r} needs degree {needed}, got {degree}")
        }));
    }
    f.grid.check_degree(degree)?;
    let coeffs = fourier_coefficients(f, degree)?;
    let function = synthesize(
        &coeffs,
        f.grid,
        |j| r.powi(j.abs() as i32),
        Execution::default(),
    )?;
    let mut report = Report::new("abel-poisson-mean");
    report
        .value("r", r)
        .value("degree", degree as f64)
        .value(
            "truncation_bound",
            2.0 * f.sup_norm() * r.powi(degree as i32 + 1) / (1.0 - r),
        )
        .value("sup_error", function.sup_distance(f)?);
    Ok(CircleMean { function, report })
}

/// Grid shift `s` with `alpha = exp(2 pi i s / m)`, and `|alpha - w^s|`.
pub fn nearest_grid_rotation(grid: CircleGrid, alpha: C64) -> (usize, f64) {
    let m = grid.m as f64;
    let s = (alpha.arg() / TAU * m).round().rem_euclid(m) as usize % grid.m;
    (s, (alpha - grid.root(s)).norm())
}

/// The grid shift of `alpha`, or a domain error naming the nearest grid angle.
pub fn rotation_shift(grid: CircleGrid, alpha: C64) -> Result<usize> {
    let (s, dist) = nearest_grid_rotation(grid, alpha);
    if dist <= 1e-12 {
        Ok(s)
    } else {
        Err(Error::Domain(format!(
            "rotation {alpha} is not on the {}-point grid; nearest is exp(2 pi i {s}/{}) at distance {dist:e}",
            grid.m, grid.m
        )))
    }
}

/// `R_alpha f (z) = f(alpha z)` for `alpha = w^s`.
pub fn rotate(f: &SampledCircleFunction, s: usize) -> SampledCircleFunction {
    let m = f.grid.m;
    let values = (0..m).map(|k| f.values[(k + s) % m]).collect();
    SampledCircleFunction {
        grid: f.grid,
        values,
    }
}

/// `(1/(n+1)) sum_{j <= n} z^j`.
pub fn power_mean(z: C64, n: usize) -> C64 {
    let mut acc = ComplexSum::new();
    let mut p = ONE;
    for _ in 0..=n {
        acc.add(p);
        p *= z;
    }
    acc.value() / (n + 1) as f64
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `(1/(n+1)) sum_{j <= n} R_alpha^j f`.
///
/// Each node's orbit under the shift has period `p = m / gcd(s, m)`; the sum
/// is assembled from whole periods plus a remainder.
pub fn rotation_cesaro(
    f: &SampledCircleFunction,
    alpha: C64,
    n: usize,
) -> Result<SampledCircleFunction> {
    let grid = f.grid;
    let m = grid.m;
    let s = rotation_shift(grid, alpha)?;
    let period = m / gcd(s, m);
    let total = n + 1;
    let (full, rem) = (total / period, total % period);
    let values = Execution::default().map_range(m, |k| {
        let mut orbit = ComplexSum::new();
        let mut head = ComplexSum::new();
        for j in 0..period {
            let v = f.values[(k + j * s) % m];
            orbit.add(v);
            if j < rem {
                head.add(v);
            }
        }
        (orbit.value() * full as f64 + head.value()) / total as f64
    });
    SampledCircleFunction::new(grid, values)
}

/// Fejér means along `ns`, with sup-error trace and the checks that the
/// error sequence ends no worse than it starts and that the last error
/// meets `tol`.
pub fn fejer_report(f: &SampledCircleFunction, ns: &[usize], tol: f64) -> Result<Report> {
    let mut errors = Vec::with_capacity(ns.len());
    for &n in ns {
        errors.push(fejer_mean(f, n, n)?.report.values["sup_error"]);
    }
    let mut report = Report::new("fejer");
    if let (Some(&first), Some(&last)) = (errors.first(), errors.last()) {
        report
            .check(Check::at_most("last error <= first error", last, first))
            .check(Check::at_most("last sup error", last, tol));
    }
    report
        .trace("n", ns.iter().map(|&n| n as f64).collect())
        .trace("sup_error", errors);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn grid(m: usize) -> CircleGrid {
        CircleGrid::new(m).unwrap()
    }

    #[test]
    fn roots_are_exact_at_quarters() {
        let g = grid(16);
        assert_eq!(g.root(0), ONE);
        assert_eq!(g.root(4), I);
        assert_eq!(g.root(8), -ONE);
        assert_eq!(g.root(12), -I);
        for k in 0..16 {
            assert!((g.root(k) - crate::complex::cis(g.theta(k))).norm() < 1e-15);
        }
        assert!(CircleGrid::new(3).is_err());
    }

    #[test]
    fn monomial_coefficients_are_kronecker() {
        let g = grid(16);
        let c = fourier_coefficients(&SampledCircleFunction::monomial(g, 2), 3).unwrap();
        for j in -3..=3 {
            let want = if j == 2 { 1.0 } else { 0.0 };
            assert!((c.get(j) - want).norm() < 1e-12, "j = {j}");
        }
        for l in -7i64..=7 {
            let c = fourier_coefficients(&SampledCircleFunction::monomial(g, l), 7).unwrap();
            for j in -7..=7 {
                let want = if j == l { 1.0 } else { 0.0 };
                assert!((c.get(j) - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn simple_coefficients() {
        let g = grid(32);
        let c = fourier_coefficients(&SampledCircleFunction::constant(g, C64::new(5.0, 0.0)), 4)
            .unwrap();
        assert!((c.get(0) - 5.0).norm() < 1e-12);
        assert!((-4..=4)
            .filter(|&j| j != 0)
            .all(|j| c.get(j).norm() < 1e-12));

        // cos t = (z + 1/z) / 2.
        let c = fourier_coefficients(&SampledCircleFunction::from_real(g, f64::cos), 5).unwrap();
        assert!((c.get(1) - 0.5).norm() < 1e-12);
        assert!((c.get(-1) - 0.5).norm() < 1e-12);
        assert!(c.get(0).norm() < 1e-12);
    }

    #[test]
    fn aliasing_is_rejected() {
        let f = SampledCircleFunction::monomial(grid(16), 1);
        assert!(matches!(
            fourier_coefficients(&f, 8),
            Err(Error::Aliasing { m: 16, degree: 8 })
        ));
        assert!(fourier_coefficients(&f, 7).is_ok());
        assert!(matches!(fejer_mean(&f, 8, 2), Err(Error::Aliasing { .. })));
    }

    #[test]
    fn fejer_of_z() {
        let g = grid(32);
        let z = SampledCircleFunction::monomial(g, 1);
        let out = fejer_mean(&z, 9, 9).unwrap().function;
        for (a, b) in out.values().iter().zip(z.values()) {
            assert!((a - b * 0.9).norm() < 1e-12);
        }
        let c = SampledCircleFunction::constant(g, C64::new(-1.5, 2.0));
        for n in [0, 3, 15] {
            assert!(
                fejer_mean(&c, n, n)
                    .unwrap()
                    .function
                    .sup_distance(&c)
                    .unwrap()
                    < 1e-12
            );
        }
    }

    #[test]
    fn fejer_of_trig_polynomial_is_weighted() {
        let g = grid(64);
        let mut r = rng(2);
        let cs: Vec<C64> = (0..11)
            .map(|_| C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
            .collect();
        let f = SampledCircleFunction::from_angle(g, |t| {
            (-5i64..=5)
                .map(|j| cs[(j + 5) as usize] * crate::complex::cis(j as f64 * t))
                .sum()
        });
        let n = 7;
        let out = fejer_mean(&f, n, n).unwrap().function;
        let want = SampledCircleFunction::from_angle(g, |t| {
            (-5i64..=5)
                .map(|j| {
                    cs[(j + 5) as usize]
                        * (1.0 - j.abs() as f64 / 8.0)
                        * crate::complex::cis(j as f64 * t)
                })
                .sum()
        });
        assert!(out.sup_distance(&want).unwrap() < 1e-12);
    }

    #[test]
    fn fejer_abs_sin() {
        let f = SampledCircleFunction::from_real(grid(2048), |t| t.sin().abs());
        let rep = fejer_report(&f, &[16, 64, 256], 0.02).unwrap();
        assert!(rep.pass(), "{rep:?}");
    }

    #[test]
    fn abel_poisson_examples() {
        let g = grid(256);
        let z3 = SampledCircleFunction::monomial(g, 3);
        let n = abel_poisson_degree(0.5).unwrap();
        let out = abel_poisson_mean(&z3, 0.5, n).unwrap();
        for (a, b) in out.function.values().iter().zip(z3.values()) {
            assert!((a - b * 0.125).norm() < 1e-12);
        }
        let c = SampledCircleFunction::constant(g, C64::new(3.0, 0.0));
        assert!(
            abel_poisson_mean(&c, 0.5, n)
                .unwrap()
                .function
                .sup_distance(&c)
                .unwrap()
                < 1e-12
        );
        assert!(matches!(
            abel_poisson_mean(&c, 1.0, n),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            abel_poisson_mean(&c, 0.9, 10),
            Err(Error::Resolution(_))
        ));
        assert!(matches!(
            abel_poisson_mean(&c, 0.99, 127),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn abel_poisson_degree_is_minimal() {
        for r in [0.1, 0.5, 0.9, 0.99] {
            let n = abel_poisson_degree(r).unwrap();
            assert!(2.0 * r.powi(n as i32 + 1) / (1.0 - r) <= ABEL_POISSON_TOL);
            if n > 0 {
                assert!(2.0 * r.powi(n as i32) / (1.0 - r) > ABEL_POISSON_TOL);
            }
        }
    }

    #[test]
    fn abel_poisson_smoothed_step_improves() {
        let g = grid(8192);
        let f = SampledCircleFunction::from_real(g, |t| (8.0 * t.sin()).tanh());
        let mut last = f64::INFINITY;
        for r in [0.9, 0.99] {
            let out = abel_poisson_mean(&f, r, abel_poisson_degree(r).unwrap()).unwrap();
            let err = out.report.values["sup_error"];
            assert!(err < last);
            last = err;
        }
    }

    #[test]
    fn rotation_of_monomials() {
        let m = 64;
        let g = grid(m);
        for l in [1i64, 3, 5] {
            let alpha = g.root(5);
            let al = g.root((5 * l as usize) % m);
            let f = SampledCircleFunction::monomial(g, l);
            for n in [10, 100, 1000] {
                let out = rotation_cesaro(&f, alpha, n).unwrap();
                assert!(out.sup_norm() <= 2.0 / ((n + 1) as f64 * (ONE - al).norm()) + 1e-12);
                let zeta = power_mean(al, n);
                for (a, b) in out.values().iter().zip(f.values()) {
                    assert!((a - zeta * b).norm() < 1e-12);
                }
            }
        }
        // alpha^l = 1: fixed.
        let f = SampledCircleFunction::monomial(g, 8);
        let out = rotation_cesaro(&f, g.root(8), 37).unwrap();
        assert!(out.sup_distance(&f).unwrap() < 1e-12);
    }

    #[test]
    fn rotation_orbit_average() {
        let g = grid(8);
        let mut r = rng(9);
        let vals: Vec<C64> = (0..8).map(|_| C64::new(r.random(), r.random())).collect();
        let f = SampledCircleFunction::new(g, vals.clone()).unwrap();
        let out = rotation_cesaro(&f, g.root(1), 7).unwrap();
        let mean = vals.iter().sum::<C64>() / 8.0;
        for v in out.values() {
            assert!((v - mean).norm() < 1e-15);
        }
        // Shift 2 has period 4: two orbits.
        let out = rotation_cesaro(&f, g.root(2), 11).unwrap();
        for k in 0..8 {
            let want = (0..4).map(|j| vals[(k + 2 * j) % 8]).sum::<C64>() / 4.0;
            assert!((out.values()[k] - want).norm() < 1e-15);
        }
    }

    #[test]
    fn off_grid_rotation_reports_nearest() {
        let g = grid(16);
        let alpha = crate::complex::cis(1.0);
        let (s, d) = nearest_grid_rotation(g, alpha);
        assert_eq!(s, 3);
        assert!(d > 0.0);
        let err = rotation_cesaro(&SampledCircleFunction::monomial(g, 1), alpha, 3).unwrap_err();
        assert!(matches!(err, Error::Domain(ref msg) if msg.contains("nearest")));
    }

    #[test]
    fn csv_rows() {
        let f = SampledCircleFunction::monomial(grid(4), 1);
        let csv = f.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "theta,re,im");
        let fields: Vec<f64> = lines[2].split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(fields, vec![std::f64::consts::FRAC_PI_2, 0.0, 1.0]);
    }

    #[test]
    fn json_round_trip() {
        let f = SampledCircleFunction::monomial(grid(4), 1);
        let s = serde_json::to_string(&f).unwrap();
        let back: SampledCircleFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        assert!(
            serde_json::from_str::<SampledCircleFunction>(r#"{"grid":4,"values":[[1,0]]}"#)
                .is_err()
        );
        assert!(serde_json::from_str::<SampledCircleFunction>(
            r#"{"grid":2,"values":[[1,0],[1,0]]}"#
        )
        .is_err());
    }

    fn sampled(m: usize) -> impl Strategy<Value = SampledCircleFunction> {
        prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), m).prop_map(move |v| {
            SampledCircleFunction::new(
                grid(m),
                v.into_iter().map(|(a, b)| C64::new(a, b)).collect(),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn rotation_is_isometric_and_preserves_integral(f in sampled(24), s in 0usize..24) {
            let g = rotate(&f, s);
            prop_assert_eq!(g.sup_norm(), f.sup_norm());
            prop_assert!((g.integral() - f.integral()).norm() <= 1e-12 * (1.0 + f.sup_norm()));
        }

        #[test]
        fn fejer_is_positive(v in prop::collection::vec(0.0..5.0f64, 32), n in 0usize..16) {
            let f = SampledCircleFunction::new(grid(32), v.into_iter().map(|x| C64::new(x, 0.0)).collect()).unwrap();
            let out = fejer_mean(&f, n, n).unwrap().function;
            for z in out.values() {
                prop_assert!(z.re >= -1e-12);
                prop_assert!(z.im.abs() <= 1e-12);
            }
        }

        #[test]
        fn parseval_bound(f in sampled(20), n in 0usize..10) {
            let c = fourier_coefficients(&f, n).unwrap();
            let mean_sq = f.values().iter().map(|z| z.norm_sqr()).sum::<f64>() / 20.0;
            prop_assert!(c.energy() <= mean_sq + 1e-10);
        }
    }
}
