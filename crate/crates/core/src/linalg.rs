//! Finite-dimensional vectors: p-norms, inner products, projections.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::complex::{ComplexSum, KahanSum, C64, ZERO};
use crate::error::{Error, Result};
use crate::report::{Check, Report};

/// A nonempty complex vector. Serializes as `[[re, im], ...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<C64>);

impl Vector {
    pub fn new(entries: Vec<C64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Input("vector dimension must be at least 1".into()));
        }
        Ok(Vector(entries))
    }

    pub fn from_real(entries: &[f64]) -> Result<Self> {
        Self::new(entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(n: usize) -> Self {
        Vector(vec![ZERO; n.max(1)])
    }

    /// The `j`-th standard basis vector of dimension `n`.
    pub fn basis(n: usize, j: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[j] = C64::new(1.0, 0.0);
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[C64] {
        &self.0
    }

    pub fn into_entries(self) -> Vec<C64> {
        self.0
    }

    pub fn scale(&self, t: C64) -> Vector {
        Vector(self.0.iter().map(|x| x * t).collect())
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        same_dim(self, other)?;
        Ok(Vector(
            self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        same_dim(self, other)?;
        Ok(Vector(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    /// Euclidean norm.
    pub fn norm2(&self) -> f64 {
        p_norm(self, NormTag::P(2.0)).expect("p = 2 is valid")
    }
}

fn same_dim(a: &Vector, b: &Vector) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(())
}

/// The exponent of an `l^p` norm, `p` in `[1, inf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormTag {
    P(f64),
    Infinity,
}

impl NormTag {
    pub const ONE: NormTag = NormTag::P(1.0);
    pub const TWO: NormTag = NormTag::P(2.0);

    pub fn validate(self) -> Result<Self> {
        match self {
            NormTag::P(p) if !(p >= 1.0) || p.is_nan() => Err(Error::Domain(format!(
                "norm exponent must be >= 1, got {p}"
            ))),
            NormTag::P(p) if p.is_infinite() => Ok(NormTag::Infinity),
            t => Ok(t),
        }
    }

    /// `1/p`, with `1/inf = 0`.
    pub fn reciprocal(self) -> f64 {
        match self {
            NormTag::P(p) => 1.0 / p,
            NormTag::Infinity => 0.0,
        }
    }

    pub fn exponent(self) -> f64 {
        match self {
            NormTag::P(p) => p,
            NormTag::Infinity => f64::INFINITY,
        }
    }
}

impl fmt::Display for NormTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormTag::P(p) => write!(f, "{p}"),
            NormTag::Infinity => write!(f, "inf"),
        }
    }
}

impl Serialize for NormTag {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            NormTag::P(p) => s.serialize_f64(*p),
            NormTag::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for NormTag {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        let tag = match Repr::deserialize(d)? {
            Repr::Num(p) => NormTag::P(p),
            Repr::Str(s) if matches!(s.as_str(), "inf" | "infinity" | "Infinity") => {
                NormTag::Infinity
            }
            Repr::Str(s) => {
                return Err(serde::de::Error::custom(format!("bad norm tag '{s}'")));
            }
        };
        tag.validate().map_err(serde::de::Error::custom)
    }
}

/// `(sum |v_j|^p)^{1/p}`, or `max |v_j|` for `p = inf`.
///
/// Entries are rescaled by the largest modulus first, and the `p = 1, 2`
/// accumulations are compensated.
pub fn p_norm(v: &Vector, t: NormTag) -> Result<f64> {
    p_norm_slice(v.entries(), t)
}

pub(crate) fn p_norm_slice(v: &[C64], t: NormTag) -> Result<f64> {
    let t = t.validate()?;
    let max = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if max == 0.0 || !max.is_finite() {
        return Ok(max);
    }
    Ok(match t {
        NormTag::Infinity => max,
        NormTag::P(1.0) => v.iter().map(|x| x.norm()).collect::<KahanSum>().value(),
        NormTag::P(2.0) => {
            let s: KahanSum = v.iter().map(|x| (x.norm() / max).powi(2)).collect();
            max * s.value().sqrt()
        }
        NormTag::P(p) => {
            let s: KahanSum = v.iter().map(|x| (x.norm() / max).powf(p)).collect();
            max * s.value().powf(1.0 / p)
        }
    })
}

/// Check `|v|_q <= |v|_p <= n^{1/p - 1/q} |v|_q` for `p < q`, and
/// `|v|_2^2 <= |v|_1 |v|_inf` when `{p, q} = {1, 2}`.
///
/// Each check passes when it holds up to `1e-12` relative.
pub fn norm_inequality_report(v: &Vector, p: NormTag, q: NormTag) -> Result<Report> {
    let (p, q) = (p.validate()?, q.validate()?);
    if p.exponent() >= q.exponent() {
        return Err(Error::Input(format!("need p < q, got p = {p}, q = {q}")));
    }
    let n = v.dim() as f64;
    let np = p_norm(v, p)?;
    let nq = p_norm(v, q)?;
    let rel = 1.0 + 1e-12;
    let mut r = Report::new(format!("norm inequalities p={p} q={q}"));
    r.value("norm_p", np).value("norm_q", nq).value("dim", n);
    r.check(Check::at_most("q-norm <= p-norm", nq, np * rel));
    let factor = n.powf(p.reciprocal() - q.reciprocal());
    r.check(Check::at_most(
        "p-norm <= n^(1/p-1/q) q-norm",
        np,
        factor * nq * rel,
    ));
    r.value("slack_monotone", np - nq)
        .value("slack_dimension", factor * nq - np);
    if p == NormTag::ONE && q == NormTag::TWO {
        let ninf = p_norm(v, NormTag::Infinity)?;
        r.check(Check::at_most(
            "|v|_2^2 <= |v|_1 |v|_inf",
            nq * nq,
            np * ninf * rel,
        ));
        r.value("slack_interpolation", np * ninf - nq * nq);
    }
    Ok(r)
}

/// `<v, w> = sum v_j conj(w_j)`.
pub fn inner_product(v: &Vector, w: &Vector) -> Result<C64> {
    same_dim(v, w)?;
    Ok(inner_slice(v.entries(), w.entries()))
}

pub(crate) fn inner_slice(v: &[C64], w: &[C64]) -> C64 {
    let mut acc = ComplexSum::new();
    for (a, b) in v.iter().zip(w) {
        acc.add(a * b.conj());
    }
    acc.value()
}

/// `|v| |w| - |<v, w>|`.
pub fn cauchy_schwarz_gap(v: &Vector, w: &Vector) -> Result<f64> {
    let ip = inner_product(v, w)?;
    Ok(v.norm2() * w.norm2() - ip.norm())
}

/// `|(|a-b|^2 + |a+b|^2) - (2|a|^2 + 2|b|^2)|`.
pub fn parallelogram_residual(a: &Vector, b: &Vector) -> Result<f64> {
    let d = a.sub(b)?.norm2();
    let s = a.add(b)?.norm2();
    Ok(((d * d + s * s) - 2.0 * (a.norm2().powi(2) + b.norm2().powi(2))).abs())
}

/// A closed convex set with a computable nearest-point map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ConvexSpec {
    /// Span of linearly independent vectors.
    Subspace { basis: Vec<Vector> },
    /// Real box `lower <= x <= upper` (imaginary parts constrained to 0).
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Closed Euclidean ball.
    Ball { center: Vector, radius: f64 },
}

impl ConvexSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            ConvexSpec::Subspace { basis } => {
                for b in basis {
                    if b.dim() != dim {
                        return Err(Error::DimensionMismatch {
                            left: dim,
                            right: b.dim(),
                        });
                    }
                }
                Ok(())
            }
            ConvexSpec::Box { lower, upper } => {
                if lower.len() != dim || upper.len() != dim {
                    return Err(Error::DimensionMismatch {
                        left: dim,
                        right: lower.len().max(upper.len()),
                    });
                }
                if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
                    return Err(Error::Input("box needs lower <= upper".into()));
                }
                Ok(())
            }
            ConvexSpec::Ball { center, radius } => {
                if center.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        left: dim,
                        right: center.dim(),
                    });
                }
                if !(*radius >= 0.0) {
                    return Err(Error::Input("ball radius must be nonnegative".into()));
                }
                Ok(())
            }
        }
    }

    /// Membership up to `tol`.
    pub fn contains(&self, v: &Vector, tol: f64) -> Result<bool> {
        self.validate(v.dim())?;
        Ok(match self {
            ConvexSpec::Subspace { .. } => project(v, self)?.sub(v)?.norm2() <= tol,
            ConvexSpec::Box { lower, upper } => v
                .entries()
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(x, (l, u))| x.re >= l - tol && x.re <= u + tol && x.im.abs() <= tol),
            ConvexSpec::Ball { center, radius } => v.sub(center)?.norm2() <= radius + tol,
        })
    }
}

/// Solve the square system `a x = b` by Gaussian elimination with complete
/// pivoting. Fails when a pivot falls below `rank_tol * max_diag`, where
/// `max_diag` is the largest diagonal modulus of `a`.
pub(crate) fn solve_pivoted(
    mut a: Vec<Vec<C64>>,
    mut b: Vec<C64>,
    rank_tol: f64,
) -> Result<Vec<C64>> {
    let n = b.len();
    let max_diag = (0..n).map(|i| a[i][i].norm()).fold(0.0, f64::max);
    let threshold = rank_tol * max_diag;
    let mut col_perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (mut pr, mut pc, mut best) = (k, k, -1.0);
        for (i, row) in a.iter().enumerate().skip(k) {
            for (j, x) in row.iter().enumerate().skip(k) {
                if x.norm() > best {
                    best = x.norm();
                    pr = i;
                    pc = j;
                }
            }
        }
        if best <= threshold || best == 0.0 {
            return Err(Error::DegenerateBasis(format!(
                "pivot {best:e} at step {k} below rank tolerance {threshold:e}"
            )));
        }
        a.swap(k, pr);
        b.swap(k, pr);
        if pc != k {
            for row in a.iter_mut() {
                row.swap(k, pc);
            }
            col_perm.swap(k, pc);
        }
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f == ZERO {
                continue;
            }
            let (top, rest) = a.split_at_mut(i);
            for (x, &y) in rest[0][k..n].iter_mut().zip(&top[k][k..n]) {
                *x -= f * y;
            }
            let bk = b[k];
            b[i] -= f * bk;
        }
    }
    let mut y = vec![ZERO; n];
    for k in (0..n).rev() {
        let mut acc = b[k];
        for j in k + 1..n {
            acc -= a[k][j] * y[j];
        }
        y[k] = acc / a[k][k];
    }
    let mut x = vec![ZERO; n];
    for (k, &c) in col_perm.iter().enumerate() {
        x[c] = y[k];
    }
    Ok(x)
}

/// Coefficients of the orthogonal projection of `v` onto `span(basis)`.
fn gram_coefficients(v: &Vector, basis: &[Vector]) -> Result<Vec<C64>> {
    let k = basis.len();
    let gram: Vec<Vec<C64>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| inner_slice(basis[j].entries(), basis[i].entries()))
                .collect()
        })
        .collect();
    let rhs: Vec<C64> = basis
        .iter()
        .map(|b| inner_slice(v.entries(), b.entries()))
        .collect();
    solve_pivoted(gram, rhs, 1e-10)
}

/// Nearest point of `c` to `v`.
///
/// Subspaces solve the Gram system for the orthogonal projection; boxes clamp
/// coordinatewise; balls pull radially toward the center.
pub fn project(v: &Vector, c: &ConvexSpec) -> Result<Vector> {
    c.validate(v.dim())?;
    match c {
        ConvexSpec::Subspace { basis } => {
            if basis.is_empty() {
                return Ok(Vector::zeros(v.dim()));
            }
            let alpha = gram_coefficients(v, basis)?;
            let mut w = vec![ZERO; v.dim()];
            for (a, b) in alpha.iter().zip(basis) {
                for (wi, bi) in w.iter_mut().zip(b.entries()) {
                    *wi += a * bi;
                }
            }
            Vector::new(w)
        }
        ConvexSpec::Box { lower, upper } => Vector::new(
            v.entries()
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(x, (l, u))| C64::new(x.re.clamp(*l, *u), 0.0))
                .collect(),
        ),
        ConvexSpec::Ball { center, radius } => {
            let d = v.sub(center)?;
            let dist = d.norm2();
            if dist <= *radius {
                Ok(v.clone())
            } else {
                center.add(&d.scale(C64::new(radius / dist, 0.0)))
            }
        }
    }
}

/// Split `v = w + y` with `w` in `span(basis)` and `y` orthogonal to it.
pub fn orthogonal_complement_decompose(v: &Vector, basis: &[Vector]) -> Result<(Vector, Vector)> {
    let w = project(
        v,
        &ConvexSpec::Subspace {
            basis: basis.to_vec(),
        },
    )?;
    let y = v.sub(&w)?;
    Ok((w, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{rng, I};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn v(x: &[f64]) -> Vector {
        Vector::from_real(x).unwrap()
    }

    fn gaussian(r: &mut impl Rng, n: usize) -> Vector {
        Vector::new(
            (0..n)
                .map(|_| C64::new(r.sample(StandardNormal), r.sample(StandardNormal)))
                .collect(),
        )
        .unwrap()
    }

    const TAGS: [NormTag; 5] = [
        NormTag::P(1.0),
        NormTag::P(1.5),
        NormTag::P(2.0),
        NormTag::P(3.0),
        NormTag::Infinity,
    ];

    #[test]
    fn norm_examples() {
        assert_abs_diff_eq!(p_norm(&v(&[3.0, 4.0]), NormTag::TWO).unwrap(), 5.0);
        assert_abs_diff_eq!(p_norm(&v(&[3.0, 4.0]), NormTag::ONE).unwrap(), 7.0);
        assert_abs_diff_eq!(p_norm(&v(&[3.0, 4.0]), NormTag::Infinity).unwrap(), 4.0);
        let ones = v(&[1.0; 9]);
        for t in TAGS {
            let want = 9f64.powf(t.reciprocal());
            assert_abs_diff_eq!(p_norm(&ones, t).unwrap(), want, epsilon = 1e-14);
        }
        assert!(matches!(
            p_norm(&ones, NormTag::P(0.5)),
            Err(Error::Domain(_))
        ));
        assert!(Vector::new(vec![]).is_err());
    }

    #[test]
    fn norm_tag_json() {
        let t: NormTag = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(t, NormTag::Infinity);
        let t: NormTag = serde_json::from_str("1.5").unwrap();
        assert_eq!(t, NormTag::P(1.5));
        assert!(serde_json::from_str::<NormTag>("0.5").is_err());
    }

    #[test]
    fn inequality_report_examples() {
        let r = norm_inequality_report(&v(&[1.0, 1.0]), NormTag::ONE, NormTag::TWO).unwrap();
        assert!(r.pass());
        assert_abs_diff_eq!(r.values["norm_q"], 2f64.sqrt(), epsilon = 1e-15);
        assert!(r.values["slack_dimension"].abs() < 1e-12);

        let e1 = v(&[1.0, 0.0, 0.0, 0.0]);
        for (p, q) in [
            (NormTag::ONE, NormTag::Infinity),
            (NormTag::P(1.5), NormTag::P(3.0)),
        ] {
            let r = norm_inequality_report(&e1, p, q).unwrap();
            assert!(r.pass());
            assert_eq!(r.values["norm_p"], 1.0);
            assert_eq!(r.values["norm_q"], 1.0);
        }
        assert!(norm_inequality_report(&e1, NormTag::TWO, NormTag::ONE).is_err());
    }

    #[test]
    fn inequality_report_on_random_gaussians() {
        let mut r = rng(11);
        for _ in 0..1000 {
            let n = r.random_range(1..=16);
            let x = gaussian(&mut r, n);
            for (i, &p) in TAGS.iter().enumerate() {
                for &q in &TAGS[i + 1..] {
                    let rep = norm_inequality_report(&x, p, q).unwrap();
                    assert!(rep.pass(), "{rep:?}");
                }
            }
        }
    }

    #[test]
    fn inner_product_examples() {
        let a = Vector::new(vec![C64::new(1.0, 0.0), I]).unwrap();
        assert_eq!(inner_product(&a, &a).unwrap(), C64::new(2.0, 0.0));
        assert_eq!(
            inner_product(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(),
            ZERO
        );
        assert!(matches!(
            inner_product(&v(&[1.0]), &v(&[1.0, 2.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cauchy_schwarz_examples() {
        assert_abs_diff_eq!(
            cauchy_schwarz_gap(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(),
            1.0
        );
        let x = v(&[0.3, -2.0, 1.5]);
        let gap = cauchy_schwarz_gap(&x, &x.scale(C64::new(3.0, 0.0))).unwrap();
        assert!(gap.abs() < 1e-12);
        let mut r = rng(5);
        for _ in 0..500 {
            let n = r.random_range(1..=32);
            let (a, b) = (gaussian(&mut r, n), gaussian(&mut r, n));
            assert!(cauchy_schwarz_gap(&a, &b).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn parallelogram_examples() {
        assert!(parallelogram_residual(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap() < 1e-14);
        let a = v(&[1.0, 2.0, -3.0]);
        assert!(parallelogram_residual(&a, &a).unwrap() < 1e-12);
        let mut r = rng(9);
        for _ in 0..500 {
            let n = r.random_range(1..=32);
            let (a, b) = (gaussian(&mut r, n), gaussian(&mut r, n));
            let scale = a.norm2().powi(2) + b.norm2().powi(2);
            assert!(parallelogram_residual(&a, &b).unwrap() < 1e-10 * scale);
        }
    }

    #[test]
    fn projection_examples() {
        let sub = ConvexSpec::Subspace {
            basis: vec![v(&[1.0, 0.0])],
        };
        assert_eq!(project(&v(&[1.0, 1.0]), &sub).unwrap(), v(&[1.0, 0.0]));

        let ball = ConvexSpec::Ball {
            center: v(&[0.0, 0.0]),
            radius: 1.0,
        };
        let p = project(&v(&[3.0, 4.0]), &ball).unwrap();
        assert_abs_diff_eq!(p.entries()[0].re, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(p.entries()[1].re, 0.8, epsilon = 1e-15);
        let inside = v(&[0.1, -0.2]);
        assert_eq!(project(&inside, &ball).unwrap(), inside);

        let bx = ConvexSpec::Box {
            lower: vec![-1.0, 0.0],
            upper: vec![1.0, 2.0],
        };
        assert_eq!(project(&v(&[5.0, -3.0]), &bx).unwrap(), v(&[1.0, 0.0]));
        assert_eq!(project(&v(&[0.5, 1.0]), &bx).unwrap(), v(&[0.5, 1.0]));
    }

    #[test]
    fn ball_projection_beats_sphere_grid_search() {
        // Oracle: brute-force the nearest of 20000 points on the unit circle.
        let target = v(&[3.0, 4.0]);
        let best = (0..20_000)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / 20_000.0;
                let u = v(&[t.cos(), t.sin()]);
                (target.sub(&u).unwrap().norm2(), u)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap();
        let ball = ConvexSpec::Ball {
            center: v(&[0.0, 0.0]),
            radius: 1.0,
        };
        let p = project(&target, &ball).unwrap();
        assert!(p.sub(&best.1).unwrap().norm2() < 1e-3);
        assert!(target.sub(&p).unwrap().norm2() <= best.0 + 1e-12);
    }

    #[test]
    fn projection_is_nearest_among_samples() {
        let mut r = rng(21);
        for _ in 0..100 {
            let x = gaussian(&mut r, 4);
            let sets = [
                ConvexSpec::Subspace {
                    basis: vec![gaussian(&mut r, 4), gaussian(&mut r, 4)],
                },
                ConvexSpec::Ball {
                    center: gaussian(&mut r, 4),
                    radius: 0.7,
                },
            ];
            for c in &sets {
                let p = project(&x, c).unwrap();
                let d = x.sub(&p).unwrap().norm2();
                for _ in 0..50 {
                    let u = match c {
                        ConvexSpec::Subspace { basis } => basis[0]
                            .scale(C64::new(r.sample(StandardNormal), r.sample(StandardNormal)))
                            .add(&basis[1].scale(C64::new(r.sample(StandardNormal), 0.0)))
                            .unwrap(),
                        ConvexSpec::Ball { .. } => project(&gaussian(&mut r, 4), c).unwrap(),
                        ConvexSpec::Box { .. } => unreachable!(),
                    };
                    assert!(d <= x.sub(&u).unwrap().norm2() + 1e-9);
                }
            }
        }
    }

    #[test]
    fn subspace_projection_is_orthogonal() {
        let mut r = rng(2);
        for _ in 0..100 {
            let x = gaussian(&mut r, 6);
            let basis: Vec<Vector> = (0..3).map(|_| gaussian(&mut r, 6)).collect();
            let w = project(
                &x,
                &ConvexSpec::Subspace {
                    basis: basis.clone(),
                },
            )
            .unwrap();
            let res = x.sub(&w).unwrap();
            for b in &basis {
                assert!(inner_product(&res, b).unwrap().norm() <= 1e-10 * x.norm2());
            }
        }
    }

    #[test]
    fn degenerate_basis_rejected() {
        let basis = vec![v(&[1.0, 2.0]), v(&[2.0, 4.0])];
        assert!(matches!(
            project(&v(&[1.0, 1.0]), &ConvexSpec::Subspace { basis }),
            Err(Error::DegenerateBasis(_))
        ));
        let bad_box = ConvexSpec::Box {
            lower: vec![1.0],
            upper: vec![0.0],
        };
        assert!(project(&v(&[0.0]), &bad_box).is_err());
    }

    #[test]
    fn decomposition_examples() {
        let (w, y) = orthogonal_complement_decompose(
            &v(&[1.0, 2.0, 3.0]),
            &[Vector::basis(3, 0), Vector::basis(3, 1)],
        )
        .unwrap();
        assert_eq!(w, v(&[1.0, 2.0, 0.0]));
        assert_eq!(y, v(&[0.0, 0.0, 3.0]));

        let full: Vec<Vector> = (0..3).map(|j| Vector::basis(3, j)).collect();
        let (_, y) = orthogonal_complement_decompose(&v(&[1.0, -2.0, 0.5]), &full).unwrap();
        assert!(y.norm2() < 1e-15);
    }

    #[test]
    fn decomposition_pythagoras_and_double_complement() {
        let mut r = rng(77);
        for _ in 0..200 {
            let x = gaussian(&mut r, 5);
            let basis = vec![gaussian(&mut r, 5), gaussian(&mut r, 5)];
            let (w, y) = orthogonal_complement_decompose(&x, &basis).unwrap();
            assert!(w.add(&y).unwrap().sub(&x).unwrap().norm2() <= 1e-12 * x.norm2().max(1.0));
            let lhs = x.norm2().powi(2);
            let rhs = w.norm2().powi(2) + y.norm2().powi(2);
            assert!((lhs - rhs).abs() <= 1e-10 * lhs);
            let (w2, _) = orthogonal_complement_decompose(&y, &basis).unwrap();
            assert!(w2.norm2() <= 1e-10 * x.norm2());
        }
    }

    fn vec_strategy(n: usize) -> impl Strategy<Value = Vector> {
        proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), n).prop_map(|e| {
            Vector::new(e.into_iter().map(|(a, b)| C64::new(a, b)).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn norm_axioms(a in vec_strategy(6), b in vec_strategy(6), t in -5.0f64..5.0) {
            for tag in TAGS {
                let na = p_norm(&a, tag).unwrap();
                let nb = p_norm(&b, tag).unwrap();
                let nt = p_norm(&a.scale(C64::new(t, 0.0)), tag).unwrap();
                prop_assert!((nt - t.abs() * na).abs() <= 1e-12 * (1.0 + t.abs() * na));
                let ns = p_norm(&a.add(&b).unwrap(), tag).unwrap();
                prop_assert!(ns <= na + nb + 1e-12 * (1.0 + na + nb));
            }
        }

        #[test]
        fn unit_balls_are_convex(a in vec_strategy(5), b in vec_strategy(5), t in 0.0f64..1.0) {
            for tag in TAGS {
                let u = a.scale(C64::new(1.0 / p_norm(&a, tag).unwrap().max(1e-300), 0.0));
                let w = b.scale(C64::new(1.0 / p_norm(&b, tag).unwrap().max(1e-300), 0.0));
                let mix = u.scale(C64::new(t, 0.0)).add(&w.scale(C64::new(1.0 - t, 0.0))).unwrap();
                prop_assert!(p_norm(&mix, tag).unwrap() <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn projection_is_idempotent(x in vec_strategy(4), c in vec_strategy(4), rad in 0.1f64..5.0,
                                    b1 in vec_strategy(4), b2 in vec_strategy(4)) {
            let sets = [
                ConvexSpec::Ball { center: c, radius: rad },
                ConvexSpec::Box { lower: vec![-1.0, -2.0, 0.0, 3.0], upper: vec![1.0, 2.0, 0.5, 4.0] },
                ConvexSpec::Subspace { basis: vec![b1, b2] },
            ];
            for s in &sets {
                let Ok(p) = project(&x, s) else { continue };
                let pp = project(&p, s).unwrap();
                prop_assert!(pp.sub(&p).unwrap().norm2() <= 1e-10 * (1.0 + p.norm2()));
            }
        }

        #[test]
        fn conjugate_symmetry(a in vec_strategy(7), b in vec_strategy(7)) {
            let ab = inner_product(&a, &b).unwrap();
            let ba = inner_product(&b, &a).unwrap();
            prop_assert!((ba - ab.conj()).norm() <= 1e-12 * (1.0 + ab.norm()));
            let aa = inner_product(&a, &a).unwrap();
            prop_assert!(aa.im == 0.0);
            prop_assert!((aa.re - a.norm2().powi(2)).abs() <= 1e-10 * (1.0 + aa.re));
        }
    }
}
