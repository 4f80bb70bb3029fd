//! Square matrices as bounded operators.
//!
//! Operator norms under `l^p` pairings, Neumann-series inversion with
//! certified tails, spectral radius from the submultiplicative limit of
//! `|x^n|^{1/n}`, eigenvalues and resolvents, Cesàro averages of powers, the
//! mean ergodic theorem for unitary matrices, and diagonal multiplication
//! operators.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::complex::{ComplexSum, C64, ONE, ZERO};
use crate::error::{Error, Result};
use crate::linalg::{orthogonal_complement_decompose, p_norm_slice, NormTag, Vector};

/// A dense square complex matrix. JSON form is row-major `[[[re, im], ...], ...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix(DMatrix<C64>);

impl OperatorMatrix {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Input(format!(
                "operator must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::Input("operator must have dimension >= 1".into()));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Input("operator entries must be finite".into()));
        }
        Ok(OperatorMatrix(m))
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Input(
                "rows must all have length equal to the row count".into(),
            ));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn identity(n: usize) -> Self {
        OperatorMatrix(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        OperatorMatrix(DMatrix::zeros(n, n))
    }

    pub fn diagonal(d: &[C64]) -> Self {
        OperatorMatrix(DMatrix::from_diagonal(
            &nalgebra::DVector::from_column_slice(d),
        ))
    }

    /// Rotation of the plane by `theta`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::from_real_rows(&[&[c, -s], &[s, c]]).expect("2x2")
    }

    /// Cyclic shift `e_j -> e_{j+1 mod k}`.
    pub fn cyclic_permutation(k: usize) -> Self {
        let mut m = DMatrix::zeros(k, k);
        for j in 0..k {
            m[((j + 1) % k, j)] = ONE;
        }
        OperatorMatrix(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn mul(&self, other: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix(&self.0 * &other.0)
    }

    pub fn add(&self, other: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix(&self.0 - &other.0)
    }

    pub fn scale(&self, t: C64) -> OperatorMatrix {
        OperatorMatrix(&self.0 * t)
    }

    pub fn adjoint(&self) -> OperatorMatrix {
        OperatorMatrix(self.0.adjoint())
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut acc = ComplexSum::new();
                for (j, x) in v.iter().enumerate() {
                    acc.add(self.0[(i, j)] * x);
                }
                acc.value()
            })
            .collect()
    }

    pub fn pow(&self, k: usize) -> OperatorMatrix {
        let mut result = Self::identity(self.dim());
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        result
    }
}

impl Serialize for OperatorMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.dim();
        let rows: Vec<Vec<C64>> = (0..n)
            .map(|i| (0..n).map(|j| self.0[(i, j)]).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for OperatorMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<C64>>::deserialize(d)?;
        OperatorMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Domain and codomain norms for an operator norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormPairing {
    pub domain: NormTag,
    pub codomain: NormTag,
}

impl NormPairing {
    pub const INF_INF: NormPairing = NormPairing {
        domain: NormTag::Infinity,
        codomain: NormTag::Infinity,
    };
    pub const TWO_TWO: NormPairing = NormPairing {
        domain: NormTag::TWO,
        codomain: NormTag::TWO,
    };
    pub const ONE_ONE: NormPairing = NormPairing {
        domain: NormTag::ONE,
        codomain: NormTag::ONE,
    };

    pub fn new(domain: NormTag, codomain: NormTag) -> Result<Self> {
        Ok(NormPairing {
            domain: domain.validate()?,
            codomain: codomain.validate()?,
        })
    }
}

impl Default for NormPairing {
    fn default() -> Self {
        NormPairing::INF_INF
    }
}

/// Largest singular value with a witness vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralNorm {
    pub value: f64,
    /// Unit vector with `|T v| = value`, so `value` is a certified lower bound.
    pub witness: Vec<C64>,
    pub iterations: usize,
}

const POWER_ITER_MAX: usize = 100_000;

/// Power iteration on `T* T`, stopped once the estimate stops moving in
/// relative terms (`1e-15`) for three consecutive steps.
pub fn spectral_norm(t: &OperatorMatrix) -> SpectralNorm {
    let n = t.dim();
    let m = t.matrix();
    // Start from the heaviest column's basis vector plus a small generic tilt.
    let heavy = (0..n)
        .max_by(|&a, &b| m.column(a).norm().total_cmp(&m.column(b).norm()))
        .unwrap_or(0);
    let mut v: Vec<C64> = (0..n)
        .map(|j| {
            C64::new(
                1e-3 * (1.0 + 0.37 * j as f64),
                1e-3 * (0.5 - 0.11 * j as f64),
            )
        })
        .collect();
    v[heavy] += ONE;
    normalize(&mut v);
    let adj = t.adjoint();
    let mut est = 0.0;
    let mut calm = 0;
    let mut iterations = 0;
    for k in 0..POWER_ITER_MAX {
        iterations = k + 1;
        let tv = t.apply(&v);
        let cur = p_norm_slice(&tv, NormTag::TWO).unwrap();
        if cur == 0.0 {
            return SpectralNorm {
                value: 0.0,
                witness: v,
                iterations,
            };
        }
        let mut w = adj.apply(&tv);
        normalize(&mut w);
        if (cur - est).abs() <= 1e-15 * cur {
            calm += 1;
        } else {
            calm = 0;
        }
        est = cur;
        if calm >= 3 {
            break;
        }
        v = w;
    }
    // Report exactly what the final witness achieves.
    let value = p_norm_slice(&t.apply(&v), NormTag::TWO).unwrap();
    SpectralNorm {
        value,
        witness: v,
        iterations,
    }
}

fn normalize(v: &mut [C64]) {
    let n = p_norm_slice(v, NormTag::TWO).unwrap();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

/// Operator norm `sup |T v|_codomain / |v|_domain`.
///
/// Exact for domain `l^1` (largest column norm) and for `(inf, inf)` (largest
/// absolute row sum); power iteration for `(2, 2)`. Other pairings are
/// rejected.
pub fn operator_norm(t: &OperatorMatrix, pairing: NormPairing) -> Result<f64> {
    let m = t.matrix();
    let n = t.dim();
    match (pairing.domain.validate()?, pairing.codomain.validate()?) {
        (NormTag::P(1.0), q) => {
            let mut best = 0.0f64;
            for j in 0..n {
                let col: Vec<C64> = m.column(j).iter().copied().collect();
                best = best.max(p_norm_slice(&col, q)?);
            }
            Ok(best)
        }
        (NormTag::Infinity, NormTag::Infinity) => {
            let mut best = 0.0f64;
            for i in 0..n {
                let row: Vec<C64> = m.row(i).iter().copied().collect();
                best = best.max(p_norm_slice(&row, NormTag::ONE)?);
            }
            Ok(best)
        }
        (NormTag::P(p), NormTag::P(q)) if p == 2.0 && q == 2.0 => Ok(spectral_norm(t).value),
        (d, c) => Err(Error::UnsupportedPairing {
            domain: d.to_string(),
            codomain: c.to_string(),
        }),
    }
}

/// `log |x^k|` for `k = 1..=n_max`, computed on normalized iterates so the
/// powers never overflow: `x^k = K_k Q_k` with `|Q_k| = 1` and `log K_k`
/// accumulated. Zero powers give `-inf`.
pub fn log_power_norms(x: &OperatorMatrix, n_max: usize, pairing: NormPairing) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n_max);
    let mut q = OperatorMatrix::identity(x.dim());
    let mut log_k = 0.0;
    for _ in 0..n_max {
        let next = x.mul(&q);
        let nrm = operator_norm(&next, pairing)?;
        if !nrm.is_finite() {
            return Err(Error::NonConvergence(
                "power norm is not finite after rescaling".into(),
            ));
        }
        if nrm == 0.0 {
            out.resize(n_max, f64::NEG_INFINITY);
            return Ok(out);
        }
        log_k += nrm.ln();
        out.push(log_k);
        q = next.scale(C64::new(1.0 / nrm, 0.0));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    /// `|x^n|^{1/n}` for `n = 1..=n_max`.
    pub gelfand_trace: Vec<f64>,
    /// Last trace entry.
    pub gelfand_estimate: f64,
    /// Minimum of the trace; an upper bound on the spectral radius.
    pub fekete_inf: f64,
    pub eigen_radius: f64,
    /// `|gelfand_estimate - eigen_radius| <= tolerance`.
    pub consistent: bool,
    pub tolerance: f64,
    /// Largest `log|x^{j+l}| - log|x^j| - log|x^l|` over `j + l <= n_max`.
    pub submultiplicative_excess: f64,
    pub pairing: NormPairing,
}

/// Spectral radius in the default `(inf, inf)` pairing.
pub fn spectral_radius(x: &OperatorMatrix, n_max: usize) -> Result<SpectralReport> {
    spectral_radius_with(x, n_max, NormPairing::INF_INF)
}

pub fn spectral_radius_with(
    x: &OperatorMatrix,
    n_max: usize,
    pairing: NormPairing,
) -> Result<SpectralReport> {
    if n_max < 8 {
        return Err(Error::Input("spectral_radius needs n_max >= 8".into()));
    }
    let logs = log_power_norms(x, n_max, pairing)?;
    let gelfand_trace: Vec<f64> = logs
        .iter()
        .enumerate()
        .map(|(k, &l)| (l / (k + 1) as f64).exp())
        .collect();
    let gelfand_estimate = *gelfand_trace.last().expect("n_max >= 8");
    let fekete_inf = gelfand_trace.iter().copied().fold(f64::INFINITY, f64::min);
    let mut excess = f64::NEG_INFINITY;
    for j in 1..=n_max {
        for l in j..=n_max - j {
            let (a, b, c) = (logs[j + l - 1], logs[j - 1], logs[l - 1]);
            if a == f64::NEG_INFINITY {
                continue;
            }
            excess = excess.max(a - b - c);
        }
    }
    let eigen_radius = spectrum_eigenvalues(x)?
        .values
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let tolerance = (1e-2f64).max(5.0 / n_max as f64);
    Ok(SpectralReport {
        consistent: (gelfand_estimate - eigen_radius).abs() <= tolerance,
        gelfand_trace,
        gelfand_estimate,
        fekete_inf,
        eigen_radius,
        tolerance,
        submultiplicative_excess: excess,
        pairing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Eigenvalues sorted by decreasing modulus, then argument.
    pub values: Vec<C64>,
    /// Smallest singular value of `lambda I - x` for each eigenvalue.
    pub residuals: Vec<f64>,
    /// Whether every residual met `1e-6 |x|`.
    pub complete: bool,
}

pub const MAX_EIGEN_DIM: usize = 64;

/// Eigenvalues from a complex Schur decomposition.
///
/// Values whose `lambda I - x` is not numerically singular (`sigma_min >
/// 1e-6 |x|`) are dropped and `complete` is cleared.
pub fn spectrum_eigenvalues(x: &OperatorMatrix) -> Result<Spectrum> {
    let n = x.dim();
    if n > MAX_EIGEN_DIM {
        return Err(Error::Domain(format!(
            "eigenvalues supported up to dimension {MAX_EIGEN_DIM}, got {n}"
        )));
    }
    let schur = nalgebra::linalg::Schur::try_new(x.matrix().clone(), 1e-15, 100_000)
        .ok_or_else(|| Error::NonConvergence("Schur iteration did not converge".into()))?;
    let (_, tri) = schur.unpack();
    let mut values: Vec<C64> = (0..n).map(|i| tri[(i, i)]).collect();
    values.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(a.arg().total_cmp(&b.arg()))
    });
    let scale = operator_norm(x, NormPairing::INF_INF)?.max(f64::MIN_POSITIVE);
    let mut kept = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    let mut complete = true;
    for lambda in values {
        let shifted = OperatorMatrix::identity(n).scale(lambda).sub(x);
        let smin = shifted
            .matrix()
            .clone()
            .singular_values()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if smin <= 1e-6 * scale {
            kept.push(lambda);
            residuals.push(smin);
        } else {
            complete = false;
        }
    }
    Ok(Spectrum {
        values: kept,
        residuals,
        complete,
    })
}

/// Inverse by LU elimination, or `None` when singular.
pub fn inverse(x: &OperatorMatrix) -> Option<OperatorMatrix> {
    x.matrix().clone().lu().try_inverse().map(OperatorMatrix)
}

/// `(lambda I - x)^{-1}`.
pub fn resolvent(x: &OperatorMatrix, lambda: C64) -> Result<OperatorMatrix> {
    let spectrum = spectrum_eigenvalues(x)?;
    if let Some(nearest) = spectrum
        .values
        .iter()
        .copied()
        .min_by(|a, b| (a - lambda).norm().total_cmp(&(b - lambda).norm()))
    {
        let distance = (nearest - lambda).norm();
        if distance <= 1e-8 {
            return Err(Error::Singular {
                lambda,
                nearest,
                distance,
            });
        }
    }
    let shifted = OperatorMatrix::identity(x.dim()).scale(lambda).sub(x);
    let r = inverse(&shifted).ok_or(Error::Singular {
        lambda,
        nearest: lambda,
        distance: 0.0,
    })?;
    let residual = operator_norm(
        &shifted.mul(&r).sub(&OperatorMatrix::identity(x.dim())),
        NormPairing::INF_INF,
    )?;
    if residual > 1e-8 {
        return Err(Error::Consistency {
            what: "resolvent residual".into(),
            discrepancy: residual,
        });
    }
    Ok(r)
}

/// Result of [`neumann_inverse`].
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannInverse {
    /// `S_n = I + a + ... + a^n`.
    pub inverse: OperatorMatrix,
    /// The `n` of `S_n`.
    pub n_terms: usize,
    /// Smallest `m` with `|a^m| < 1`.
    pub contraction_power: usize,
    pub contraction_norm: f64,
    /// `C = sum_{r < m} |a^r|`.
    pub block_constant: f64,
    /// `|(I - a)^{-1} - S_n| <= |a^m|^{floor((n+1)/m)} C / (1 - |a^m|)`.
    pub tail_bound: f64,
    /// `|(I - a) S_n - I|`.
    pub residual: f64,
}

const NEUMANN_MAX_POWER: usize = 64;
const NEUMANN_MAX_TERMS: usize = 1_000_000;

/// Invert `I - a` by its Neumann series.
///
/// Requires some power `a^m`, `m <= 64`, with norm below 1 in the pairing;
/// otherwise refuses with [`Error::NotProvablyInvertible`]. Sums terms until
/// `|(I - a) S_n - I| <= tol`.
pub fn neumann_inverse(
    a: &OperatorMatrix,
    pairing: NormPairing,
    tol: f64,
) -> Result<NeumannInverse> {
    if !(tol > 0.0) {
        return Err(Error::Input("tolerance must be positive".into()));
    }
    let n = a.dim();
    let id = OperatorMatrix::identity(n);
    let mut power_norms = vec![1.0];
    let mut p = id.clone();
    let mut contraction = None;
    for m in 1..=NEUMANN_MAX_POWER {
        p = p.mul(a);
        let nrm = operator_norm(&p, pairing)?;
        if nrm < 1.0 {
            contraction = Some((m, nrm));
            break;
        }
        power_norms.push(nrm);
    }
    let (m, am) = contraction.ok_or(Error::NotProvablyInvertible {
        max_power: NEUMANN_MAX_POWER,
    })?;
    let block_constant: f64 = power_norms.iter().take(m).sum();
    let one_minus_a = id.sub(a);

    let mut sum = id.clone();
    let mut term = id.clone();
    for k in 0..NEUMANN_MAX_TERMS {
        let residual = operator_norm(&one_minus_a.mul(&sum).sub(&id), pairing)?;
        if residual <= tol {
            let tail_bound = am.powi(((k + 1) / m) as i32) * block_constant / (1.0 - am);
            return Ok(NeumannInverse {
                inverse: sum,
                n_terms: k,
                contraction_power: m,
                contraction_norm: am,
                block_constant,
                tail_bound,
                residual,
            });
        }
        term = term.mul(a);
        sum = sum.add(&term);
    }
    Err(Error::NonConvergence(format!(
        "Neumann residual above {tol:e} after {NEUMANN_MAX_TERMS} terms"
    )))
}

/// `A_n = (1/(n+1)) sum_{j<=n} x^j` and the average of the partial sums,
/// `D_n = (1/(n+1)) sum_{l<=n} sum_{j<=l} x^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorAverages {
    pub average: OperatorMatrix,
    pub double_average: OperatorMatrix,
}

pub fn cesaro_operator_average(x: &OperatorMatrix, n: usize) -> Result<OperatorAverages> {
    if n < 1 {
        return Err(Error::Input("cesaro_operator_average needs n >= 1".into()));
    }
    let mut out = None;
    walk_operator_averages(x, n, |k, avg, dbl| {
        if k == n {
            out = Some(OperatorAverages {
                average: avg.clone(),
                double_average: dbl.clone(),
            });
        }
    });
    Ok(out.expect("walk reaches n"))
}

/// Call `visit(k, A_k, D_k)` for `k = 0..=n_max`.
pub fn walk_operator_averages(
    x: &OperatorMatrix,
    n_max: usize,
    mut visit: impl FnMut(usize, &OperatorMatrix, &OperatorMatrix),
) {
    let d = x.dim();
    let mut power = OperatorMatrix::identity(d);
    let mut partial = OperatorMatrix::zeros(d);
    let mut cumulative = OperatorMatrix::zeros(d);
    for k in 0..=n_max {
        partial = partial.add(&power);
        cumulative = cumulative.add(&partial);
        let inv = C64::new(1.0 / (k + 1) as f64, 0.0);
        visit(k, &partial.scale(inv), &cumulative.scale(inv));
        power = power.mul(x);
    }
}

/// Per-step norms of the operator averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageTrace {
    /// `|A_n|` for `n = 0..=n_max`.
    pub average_norms: Vec<f64>,
    /// `|D_n - (I - x)^{-1}|`, when `I - x` is invertible.
    pub double_average_errors: Option<Vec<f64>>,
    /// `|(I - x)^{-1}|`.
    pub inverse_norm: Option<f64>,
}

pub fn operator_average_trace(
    x: &OperatorMatrix,
    n_max: usize,
    pairing: NormPairing,
) -> Result<AverageTrace> {
    let d = x.dim();
    let inv = inverse(&OperatorMatrix::identity(d).sub(x));
    let inverse_norm = inv
        .as_ref()
        .map(|r| operator_norm(r, pairing))
        .transpose()?;
    let mut average_norms = Vec::with_capacity(n_max + 1);
    let mut errors = inv.as_ref().map(|_| Vec::with_capacity(n_max + 1));
    let mut failure = None;
    walk_operator_averages(x, n_max, |_, avg, dbl| {
        match operator_norm(avg, pairing) {
            Ok(v) => average_norms.push(v),
            Err(e) => failure = Some(e),
        }
        if let (Some(r), Some(errs)) = (inv.as_ref(), errors.as_mut()) {
            match operator_norm(&dbl.sub(r), pairing) {
                Ok(v) => errs.push(v),
                Err(e) => failure = Some(e),
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(AverageTrace {
        average_norms,
        double_average_errors: errors,
        inverse_norm,
    })
}

/// Result of [`mean_ergodic_projection`].
#[derive(Debug, Clone, PartialEq)]
pub struct MeanErgodic {
    /// `(1/(n+1)) sum_{j<=n} U^j v`.
    pub average: Vector,
    /// Projection of `v` onto `{y : U y = y}`.
    pub predicted: Vector,
    /// Dimension of the fixed space.
    pub fixed_dim: usize,
    /// `C = 2 |b|` where `v - predicted = U b - b`; `|average - predicted| <= C/(n+1)`.
    pub constant: f64,
    pub error: f64,
}

/// Singular values below this count as zero when extracting fixed spaces.
const NULL_TOL: f64 = 1e-8;

pub fn unitarity_defect(u: &OperatorMatrix) -> f64 {
    let d = u.dim();
    operator_norm(
        &u.adjoint().mul(u).sub(&OperatorMatrix::identity(d)),
        NormPairing::INF_INF,
    )
    .expect("(inf, inf) is supported")
}

/// Cesàro average of `U^j v` and its predicted limit, the projection onto
/// the fixed space of `U`.
pub fn mean_ergodic_projection(u: &OperatorMatrix, v: &Vector, n: usize) -> Result<MeanErgodic> {
    let d = u.dim();
    if v.dim() != d {
        return Err(Error::DimensionMismatch {
            left: d,
            right: v.dim(),
        });
    }
    let defect = unitarity_defect(u);
    if defect > 1e-10 {
        return Err(Error::Domain(format!(
            "operator is not unitary (|U*U - I| = {defect:e})"
        )));
    }
    let shifted = u.sub(&OperatorMatrix::identity(d));
    let svd = shifted.matrix().clone().svd(true, true);
    let (left, right_h) = (
        svd.u.as_ref().expect("requested"),
        svd.v_t.as_ref().expect("requested"),
    );
    let mut fixed_basis = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= NULL_TOL {
            let col: Vec<C64> = right_h.row(k).iter().map(|z| z.conj()).collect();
            fixed_basis.push(Vector::new(col)?);
        }
    }
    let (predicted, coboundary) = if fixed_basis.is_empty() {
        (Vector::zeros(d), v.clone())
    } else {
        orthogonal_complement_decompose(v, &fixed_basis)?
    };
    // Minimum-norm potential b with (U - I) b = coboundary.
    let mut b = vec![ZERO; d];
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > NULL_TOL {
            let mut coef = ComplexSum::new();
            for i in 0..d {
                coef.add(left[(i, k)].conj() * coboundary.entries()[i]);
            }
            let c = coef.value() / s;
            for (j, bj) in b.iter_mut().enumerate() {
                *bj += c * right_h[(k, j)].conj();
            }
        }
    }
    let constant = 2.0 * p_norm_slice(&b, NormTag::TWO)?;

    let mut acc: Vec<ComplexSum> = vec![ComplexSum::new(); d];
    let mut cur = v.entries().to_vec();
    for j in 0..=n {
        for (a, x) in acc.iter_mut().zip(&cur) {
            a.add(*x);
        }
        if j < n {
            cur = u.apply(&cur);
        }
    }
    let scale = 1.0 / (n + 1) as f64;
    let average = Vector::new(acc.iter().map(|a| a.value() * scale).collect())?;
    let error = average.sub(&predicted)?.norm2();
    Ok(MeanErgodic {
        average,
        predicted,
        fixed_dim: fixed_basis.len(),
        constant,
        error,
    })
}

/// `a_n[k] = (1/(n+1)) sum_{j<=n} b_k^j` for a contraction `|b|_inf <= 1`.
pub fn multiplication_average(b: &Vector, n: usize) -> Result<Vector> {
    if let Some(bad) = b.entries().iter().find(|z| z.norm() > 1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "multiplier entry {bad} has modulus > 1"
        )));
    }
    let scale = 1.0 / (n + 1) as f64;
    let entries = b
        .entries()
        .iter()
        .map(|&bk| {
            if bk == ONE {
                return ONE;
            }
            let mut acc = ComplexSum::new();
            let mut p = ONE;
            for _ in 0..=n {
                acc.add(p);
                p *= bk;
            }
            acc.value() * scale
        })
        .collect();
    Vector::new(entries)
}

/// Random matrices for experiments.
pub mod random {
    use super::*;

    /// Complex Gaussian entries with variance `1/n` each, so the spectral
    /// radius is near 1.
    pub fn gaussian(n: usize, rng: &mut impl Rng) -> OperatorMatrix {
        let s = (1.0 / (2.0 * n as f64)).sqrt();
        OperatorMatrix(DMatrix::from_fn(n, n, |_, _| {
            C64::new(
                rng.sample::<f64, _>(StandardNormal) * s,
                rng.sample::<f64, _>(StandardNormal) * s,
            )
        }))
    }

    /// Gaussian matrix rescaled so its norm in `pairing` equals `target`.
    pub fn with_norm(
        n: usize,
        target: f64,
        pairing: NormPairing,
        rng: &mut impl Rng,
    ) -> OperatorMatrix {
        let g = gaussian(n, rng);
        let nrm = operator_norm(&g, pairing).expect("supported pairing");
        g.scale(C64::new(target / nrm, 0.0))
    }

    /// Haar-distributed unitary from the QR factorization of a Gaussian matrix.
    pub fn unitary(n: usize, rng: &mut impl Rng) -> OperatorMatrix {
        let g = gaussian(n, rng);
        let qr = g.0.qr();
        let (q, r) = (qr.q(), qr.r());
        let phases: Vec<C64> = (0..n)
            .map(|i| {
                let d = r[(i, i)];
                if d.norm() > 0.0 {
                    d / d.norm()
                } else {
                    ONE
                }
            })
            .collect();
        OperatorMatrix(DMatrix::from_fn(n, n, |i, j| q[(i, j)] * phases[j]))
    }

    /// Normal matrix `V diag(d) V*` with eigenvalues of modulus up to `radius`.
    pub fn normal(n: usize, radius: f64, rng: &mut impl Rng) -> OperatorMatrix {
        let v = unitary(n, rng);
        let d: Vec<C64> = (0..n)
            .map(|_| {
                C64::from_polar(
                    radius * rng.random::<f64>().sqrt(),
                    rng.random::<f64>() * std::f64::consts::TAU,
                )
            })
            .collect();
        v.mul(&OperatorMatrix::diagonal(&d)).mul(&v.adjoint())
    }
}
