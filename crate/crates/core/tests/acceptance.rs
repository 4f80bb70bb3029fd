//! Acceptance criteria, one line each. Runs as a plain binary so the lines
//! are printed even when everything passes.

use std::f64::consts::TAU;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use summa_core::complex::{cis, trial_rng, I, ONE};
use summa_core::ergodic::{self, FiniteSystem, ShiftSystem, TRANSFERENCE_PS};
use summa_core::fourier::{self, CircleGrid, SampledCircleFunction};
use summa_core::linalg::Vector;
use summa_core::maximal::{self, Ball, GridFunction, Line, Metric, Plane};
use summa_core::metric::{self, UltrametricSpace};
use summa_core::operator::{self, NormPairing, OperatorMatrix};
use summa_core::series::{self, AbelConfig, SeriesSpec};
use summa_core::{Execution, Result, C64};

const SEED: u64 = 20_240_601;

type Verdict = Result<(bool, String)>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn par<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    Execution::default().map_range(n, f)
}

fn all_ok<T>(v: Vec<Result<T>>) -> Result<Vec<T>> {
    v.into_iter().collect()
}

fn cesaro_geometric() -> Verdict {
    let n = 10_000usize;
    let mut worst = 0.0f64;
    let mut closed_gap = 0.0f64;
    let mut estimates = Vec::new();
    for a in [C64::new(-1.0, 0.0), I, cis(TAU / 7.0)] {
        let rep = series::cesaro_sum(&SeriesSpec::geometric(a), n, 1e-3)?;
        let beta = rep.trace.values[n];
        let limit = (ONE - a).inv();
        // sum_{k<=n} s_k = (n+1)/(1-a) - a(1 - a^{n+1})/(1-a)^2
        let m = (n + 1) as f64;
        let closed = limit - a * (ONE - a.powu(n as u32 + 1)) / (m * (ONE - a).powi(2));
        closed_gap = closed_gap.max((beta - closed).norm());
        worst = worst.max((beta - limit).norm() / (4.0 / (m * (ONE - a).norm_sqr())));
        estimates.push(format!("{:.6}{:+.6}i", beta.re, beta.im));
    }
    Ok((
        worst <= 1.0 && closed_gap <= 1e-12,
        format!(
            "max error/bound {worst:.4}, closed-form gap {closed_gap:.1e}, beta_n = {}",
            estimates.join(", ")
        ),
    ))
}

fn abel_extrapolation() -> Verdict {
    let wide = AbelConfig::new(&[0.9, 0.99, 0.999], 200_000);
    let near = AbelConfig::new(&[0.999, 0.9999, 0.99999], 20_000);
    let cases = [
        (SeriesSpec::geometric(-ONE), &wide, 0.5, 1e-6),
        (SeriesSpec::weighted_geometric(-ONE, 1), &wide, 0.25, 1e-5),
        (SeriesSpec::geometric(C64::new(0.5, 0.0)), &near, 2.0, 1e-9),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (s, cfg, want, tol) in cases {
        let est = series::abel_sum(&s, cfg)?.estimate.expect("estimate");
        let err = (est - want).norm();
        pass &= err <= tol;
        parts.push(format!("{want}: err {err:.1e} (tol {tol:.0e})"));
    }
    Ok((pass, parts.join("; ")))
}

fn cauchy_multiplicativity() -> Verdict {
    let grid = [0.999, 0.9999, 0.99999];
    let rows = all_ok(par(100, |i| {
        let mut rng = trial_rng(SEED, i);
        let mut list = || {
            let len = rng.random_range(1..=16);
            let t: Vec<C64> = (0..len)
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            t
        };
        let (ta, tb) = (list(), list());
        let (a, b) = (SeriesSpec::list(ta.clone()), SeriesSpec::list(tb.clone()));
        let n = ta.len() + tb.len();
        let cfg = AbelConfig::new(&grid, n);
        let c = series::cauchy_product(&a, &b, n)?;
        let abel = |s: &SeriesSpec| -> Result<C64> {
            Ok(series::abel_sum(s, &cfg)?.estimate.expect("estimate"))
        };
        let (sa, sb, sc) = (abel(&a)?, abel(&b)?, abel(&c)?);
        // A finite list is Abel summable to its plain sum.
        let plain = (sa - ta.iter().sum::<C64>())
            .norm()
            .max((sb - tb.iter().sum::<C64>()).norm());
        Ok(((sc - sa * sb).norm(), plain))
    }))?;
    let g = SeriesSpec::geometric(-ONE);
    let single = series::abel_sum(&g, &AbelConfig::new(&[0.9, 0.99, 0.999], 200_000))?
        .estimate
        .unwrap();
    let square = series::cauchy_product(&g, &g, 8000)?;
    let product = series::abel_sum(&square, &AbelConfig::new(&[0.95, 0.98, 0.99], 8000))?
        .estimate
        .unwrap();
    let geo = (product - single * single).norm();
    let worst = max_of(rows.iter().map(|r| r.0));
    let plain = max_of(rows.iter().map(|r| r.1));
    Ok((
        worst <= 1e-5 && geo <= 1e-5 && plain <= 1e-6,
        format!("100 pairs max {worst:.1e}, geometric(-1) pair {geo:.1e}, list-vs-plain-sum {plain:.1e}"),
    ))
}

fn neumann_inversion() -> Verdict {
    let pairing = NormPairing::INF_INF;
    let rows = all_ok(par(200, |i| {
        let mut rng = trial_rng(SEED + 1, i);
        let n = rng.random_range(1..=8);
        let t = if i % 2 == 0 {
            0.9
        } else {
            rng.random_range(0.05..0.9)
        };
        let a = operator::random::with_norm(n, t, pairing, &mut rng);
        let norm = operator::operator_norm(&a, pairing)?;
        let res = operator::neumann_inverse(&a, pairing, 1e-10)?;
        let id = OperatorMatrix::identity(n);
        let direct = operator::inverse(&id.sub(&a)).expect("invertible");
        let err = operator::operator_norm(&res.inverse.sub(&direct), pairing)?;
        let resid = operator::operator_norm(&id.sub(&a).mul(&res.inverse).sub(&id), pairing)?;
        Ok((norm, resid, err - res.tail_bound))
    }))?;
    let nil = all_ok(par(50, |i| {
        let mut rng = trial_rng(SEED + 2, i);
        let n = rng.random_range(2..=8);
        let rows: Vec<Vec<C64>> = (0..n)
            .map(|r| {
                (0..n)
                    .map(|c| {
                        C64::new(
                            if c > r {
                                rng.random_range(-3..=3) as f64
                            } else {
                                0.0
                            },
                            0.0,
                        )
                    })
                    .collect()
            })
            .collect();
        let a = OperatorMatrix::from_rows(&rows)?;
        let res = operator::neumann_inverse(&a, pairing, f64::MIN_POSITIVE)?;
        Ok(res.residual == 0.0 && res.n_terms < n)
    }))?;
    let max_norm = max_of(rows.iter().map(|r| r.0));
    let resid = max_of(rows.iter().map(|r| r.1));
    let excess = max_of(rows.iter().map(|r| r.2));
    let exact = nil.iter().filter(|&&ok| ok).count();
    Ok((
        max_norm <= 0.9 + 1e-15 && resid <= 1e-10 && excess <= 0.0 && exact == nil.len(),
        format!("max |a| {max_norm:.3}, residual {resid:.1e}, error - tail bound {excess:.1e}, nilpotent exact {exact}/50"),
    ))
}

fn spectral_radius() -> Verdict {
    let n_max = 512;
    let tol = (5.0 / n_max as f64).max(1e-2);
    let gaps = all_ok(par(100, |i| {
        let mut rng = trial_rng(SEED + 3, i);
        let n = rng.random_range(1..=16);
        let rep = operator::spectral_radius(&operator::random::gaussian(n, &mut rng), n_max)?;
        Ok((rep.gelfand_estimate - rep.eigen_radius).abs())
    }))?;
    let normal = all_ok(par(20, |i| {
        let mut rng = trial_rng(SEED + 4, i);
        let n = rng.random_range(1..=16);
        let x = operator::random::normal(n, rng.random_range(0.5..2.0), &mut rng);
        let rep = operator::spectral_radius_with(&x, 64, NormPairing::TWO_TWO)?;
        Ok(max_of(
            rep.gelfand_trace
                .iter()
                .map(|g| (g - rep.eigen_radius).abs() / rep.eigen_radius),
        ))
    }))?;
    let worst = max_of(gaps);
    let normal_worst = max_of(normal);
    Ok((
        worst <= tol && normal_worst <= 1e-9,
        format!("max gap {worst:.2e} (tol {tol:.0e}), normal (2,2) max relative gap over all powers {normal_worst:.1e}"),
    ))
}

fn svd_norm(x: &OperatorMatrix) -> f64 {
    x.matrix().clone().singular_values().max()
}

fn operator_average() -> Verdict {
    let n_max = 1000;
    let runs = all_ok(par(50, |i| {
        let mut rng = trial_rng(SEED + 5, i);
        let d = rng.random_range(1..=8);
        let u = loop {
            let u = operator::random::unitary(d, &mut rng);
            let spec = operator::spectrum_eigenvalues(&u)?;
            if spec.values.iter().all(|z| (ONE - z).norm() >= 1e-2) {
                break u;
            }
        };
        let r =
            operator::inverse(&OperatorMatrix::identity(d).sub(&u)).expect("1 not an eigenvalue");
        let rn = svd_norm(&r);
        let mut avg_ratio = 0.0f64;
        let mut dbl_ratio = 0.0f64;
        let mut errors = Vec::with_capacity(n_max + 1);
        operator::walk_operator_averages(&u, n_max, |k, avg, dbl| {
            let m = (k + 1) as f64;
            avg_ratio = avg_ratio.max(svd_norm(avg) * m / (2.0 * rn));
            let e = svd_norm(&dbl.sub(&r));
            dbl_ratio = dbl_ratio.max(e * m / (2.0 * rn * rn));
            errors.push(e);
        });
        // Suffix maxima: the monotone envelope of the oscillating error.
        let mut env = errors.clone();
        for k in (0..n_max).rev() {
            env[k] = env[k].max(env[k + 1]);
        }
        let burn_in = env.iter().position(|&e| e < env[0]).unwrap_or(n_max);
        Ok((avg_ratio, dbl_ratio, env[n_max] < env[0], burn_in))
    }))?;
    let avg = max_of(runs.iter().map(|r| r.0));
    let dbl = max_of(runs.iter().map(|r| r.1));
    let mono = runs.iter().filter(|r| r.2).count();
    let burn = runs.iter().map(|r| r.3).max().unwrap_or(0);
    Ok((
        avg <= 1.0 && dbl <= 1.0 && mono == runs.len(),
        format!("max |A_n|(n+1)/(2|R|) {avg:.12}, max |D_n - R|(n+1)/(2|R|^2) {dbl:?}, envelope decays {mono}/50, burn-in <= {burn}"),
    ))
}

fn mean_ergodic() -> Verdict {
    let cases: Vec<usize> = (1..=12).flat_map(|k| [k, k, k]).collect();
    let rows = all_ok(par(cases.len(), |i| {
        let k = cases[i];
        let mut rng = trial_rng(SEED + 6, i);
        let v = Vector::new(
            (0..k)
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        )?;
        let mean = v.entries().iter().sum::<C64>() / k as f64;
        let u = OperatorMatrix::cyclic_permutation(k);
        let mut worst = 0.0f64;
        let mut limit_gap = 0.0f64;
        for n in [100, 1000, 10_000] {
            let me = operator::mean_ergodic_projection(&u, &v, n)?;
            let err = me.average.sub(&Vector::new(vec![mean; k])?)?.norm2();
            worst = worst.max(err / (2.0 * v.norm2() * k as f64 / (n + 1) as f64));
            limit_gap = limit_gap.max(max_of(
                me.predicted.entries().iter().map(|z| (z - mean).norm()),
            ));
        }
        Ok((worst, limit_gap))
    }))?;
    let worst = max_of(rows.iter().map(|r| r.0));
    let gap = max_of(rows.iter().map(|r| r.1));
    Ok((
        worst <= 1.0 && gap <= 1e-10,
        format!("max error/bound {worst:.4}, |projection - orbit mean| {gap:.1e}"),
    ))
}

fn random_inputs() -> Vec<GridFunction> {
    par(500, |i| {
        maximal::random::grid_function(64, &mut trial_rng(SEED + 7, i))
    })
}

fn levels(f: &GridFunction) -> Vec<f64> {
    let mags: Vec<f64> = f.values.iter().map(|z| z.norm()).collect();
    let top = max_of(mags.iter().copied());
    let bottom = mags
        .iter()
        .copied()
        .filter(|&x| x > 0.0)
        .fold(f64::INFINITY, f64::min);
    maximal::log_grid(bottom / 4.0, top, 20)
}

/// `|{f* > lambda}|` by brute force: windows with endpoints in the hull or at
/// the point itself. Past the hull `f*` decreases, so each tail is measured
/// by a doubling-then-bisection search.
fn brute_level_size(f: &GridFunction, lambda: f64) -> usize {
    let (h0, h1) = f.support_hull().expect("nonzero");
    let abs = |j: i64| f.get(j).norm();
    // Window sums are accumulated left to right so that a one-point window
    // is exactly |f(l)|; prefix differences would round at the top level.
    let star = |l: i64| {
        let mut best = 0.0f64;
        for a in (h0..=h1).chain([l]).filter(|&a| a <= l) {
            let mut s = 0.0;
            // Zeros left of the hull add nothing; start the sum at h0.
            for b in a.max(h0)..=h1.max(a) {
                s += abs(b);
                if b >= l {
                    best = best.max(s / (b - a + 1) as f64);
                }
            }
            if l > h1.max(a) {
                best = best.max(s / (l - a + 1) as f64);
            }
        }
        best
    };
    let tail = |edge: i64, dir: i64| -> usize {
        // Largest t >= 0 with star(edge + dir t) > lambda, plus one; 0 if none.
        if star(edge + dir) <= lambda {
            return 0;
        }
        let (mut lo, mut hi) = (1i64, 2i64);
        while star(edge + dir * hi) > lambda {
            lo = hi;
            hi *= 2;
        }
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if star(edge + dir * mid) > lambda {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo as usize
    };
    (h0..=h1).filter(|&l| star(l) > lambda).count() + tail(h0, -1) + tail(h1, 1)
}

fn bernoulli_transference(ps: &[f64]) -> Result<Vec<summa_core::Report>> {
    let sys = ShiftSystem::bernoulli_half(0);
    let cases: Vec<usize> = (1..=8).flat_map(|n| [n, n]).collect();
    all_ok(par(cases.len(), |i| {
        let f = ergodic::random::cylinder(2, &mut trial_rng(SEED + 8, i));
        ergodic::transference_shift_exhaustive(&sys, &f, cases[i], ps)
    }))
}

fn weak_type(inputs: &[GridFunction]) -> Verdict {
    let rows = all_ok(Execution::default().map_slice(inputs, |f| {
        let lams = levels(f);
        let rep = maximal::weak_type_report(f, &lams)?;
        let sizes = &rep.traces["level_set_size"];
        // Cross-check the level sets against brute force on short inputs.
        let agree = f.values.len() > 24
            || lams
                .iter()
                .zip(sizes)
                .all(|(&l, &s)| brute_level_size(f, l) == s as usize);
        Ok((rep.values["worst_ratio"], agree))
    }))?;
    let worst = max_of(rows.iter().map(|r| r.0));
    let agree = rows.iter().filter(|r| r.1).count();
    let shift = bernoulli_transference(&[])?;
    let shift_worst = max_of(shift.iter().map(|r| r.values["worst_weak_ratio"]));
    Ok((
        worst <= 2.0 && shift_worst <= 2.0 && agree == rows.len(),
        format!("grid worst {worst:?}, Bernoulli n <= 8 worst {shift_worst:.4}, brute-force level sets agree {agree}/500"),
    ))
}

fn lp_bound(inputs: &[GridFunction]) -> Verdict {
    let ps = TRANSFERENCE_PS;
    let rows = all_ok(Execution::default().map_slice(inputs, |f| {
        ps.iter()
            .map(|&p| {
                maximal::lp_bound_report(f, p)
                    .map(|r| (r.values["upper_ratio"], r.values["observed_ratio"]))
            })
            .collect::<Result<Vec<_>>>()
    }))?;
    let shift = bernoulli_transference(&ps)?;
    let mut pass = true;
    let mut parts = Vec::new();
    let mut witness = 0.0f64;
    for (k, &p) in ps.iter().enumerate() {
        let c = 4.0 * p * 2f64.powf(p - 1.0) / (p - 1.0);
        let grid = max_of(rows.iter().map(|r| r[k].0));
        let sh = max_of(shift.iter().map(|r| r.values[&format!("lp_ratio_p{p}")]));
        witness = witness.max(max_of(rows.iter().map(|r| r[k].1)));
        pass &= grid <= c && sh <= c;
        parts.push(format!("p={p}: {grid:.3}/{sh:.3} <= {c:.3}"));
    }
    Ok((
        pass && witness > 1.0,
        format!("{}; witness ratio {witness:.3}", parts.join(", ")),
    ))
}

fn sweep(intervals: &[(f64, f64)]) -> (usize, Vec<(f64, f64)>) {
    let mut ev: Vec<(f64, i32)> = intervals
        .iter()
        .flat_map(|&(a, b)| [(a, 1), (b, -1)])
        .collect();
    ev.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let (mut depth, mut best, mut start) = (0i32, 0i32, 0.0);
    let mut union = Vec::new();
    for (x, d) in ev {
        if depth == 0 {
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

fn vitali_ok<M: Metric + Sync>(m: &M, balls: &[Ball<M::Point>]) -> Result<bool> {
    let sel = maximal::vitali_select(m, balls)?;
    let s = &sel.selected;
    let disjoint = s.iter().enumerate().all(|(k, &i)| {
        s[k + 1..].iter().all(|&j| {
            m.distance(&balls[i].center, &balls[j].center) >= balls[i].radius + balls[j].radius
        })
    });
    let covered = balls.iter().all(|b| {
        s.iter()
            .any(|&j| m.distance(&b.center, &balls[j].center) + b.radius <= 3.0 * balls[j].radius)
    });
    Ok(disjoint && covered)
}

fn covering() -> Verdict {
    let fams = par(200, |i| {
        let fam = maximal::random::interval_family(30, &mut trial_rng(SEED + 9, i));
        let red = maximal::covering_reduce_multiplicity(&fam);
        let kept: Vec<(f64, f64)> = red.kept.iter().map(|&k| fam.intervals()[k]).collect();
        let (mult, union) = sweep(&kept);
        (mult <= 2, union == sweep(fam.intervals()).1)
    });
    let mult_ok = fams.iter().filter(|r| r.0).count();
    let union_ok = fams.iter().filter(|r| r.1).count();
    let line = all_ok(par(200, |i| {
        let mut rng = trial_rng(SEED + 10, i);
        let balls: Vec<Ball<f64>> = (0..rng.random_range(1..=40))
            .map(|_| Ball {
                center: rng.random_range(0.0..20.0),
                radius: rng.random_range(0.05..3.0),
            })
            .collect();
        vitali_ok(&Line, &balls)
    }))?;
    let plane = all_ok(par(200, |i| {
        let mut rng = trial_rng(SEED + 11, i);
        let balls: Vec<Ball<[f64; 2]>> = (0..rng.random_range(1..=40))
            .map(|_| Ball {
                center: [rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)],
                radius: rng.random_range(0.05..2.0),
            })
            .collect();
        vitali_ok(&Plane, &balls)
    }))?;
    let space = UltrametricSpace::uniform(2, 0.5, 12)?;
    let ultra = all_ok(par(200, |i| {
        let mut rng = trial_rng(SEED + 12, i);
        let balls: Vec<Ball<Vec<u8>>> = (0..rng.random_range(1..=40))
            .map(|_| {
                let k = rng.random_range(0..=12);
                let t = if rng.random_bool(0.2) {
                    1.0
                } else {
                    1.0 + rng.random::<f64>()
                };
                Ball {
                    center: space.random_point(&mut rng),
                    radius: 0.5f64.powi(k) * t,
                }
            })
            .collect();
        vitali_ok(&space, &balls)
    }))?;
    let count = |v: &[bool]| v.iter().filter(|&&b| b).count();
    let (l, p, u) = (count(&line), count(&plane), count(&ultra));
    Ok((
        mult_ok == 200 && union_ok == 200 && l == 200 && p == 200 && u == 200,
        format!("intervals: multiplicity <= 2 {mult_ok}/200, union exact {union_ok}/200; Vitali line {l}/200, plane {p}/200, ultrametric {u}/200"),
    ))
}

fn fejer() -> Verdict {
    let grid = CircleGrid::new(2048)?;
    let f = SampledCircleFunction::from_real(grid, |t| t.sin().abs());
    let err =
        |n: usize| -> Result<f64> { fourier::fejer_mean(&f, n, n)?.function.sup_distance(&f) };
    let (e16, e256) = (err(16)?, err(256)?);
    let z = SampledCircleFunction::monomial(grid, 1);
    let mean = fourier::fejer_mean(&z, 9, 9)?.function;
    let zgap = max_of(
        mean.values()
            .iter()
            .zip(z.values())
            .map(|(m, v)| (m - v * 0.9).norm()),
    );
    Ok((
        e256 <= 0.02 && e256 <= e16 && zgap <= 1e-12,
        format!("sup error n=16 {e16:.4}, n=256 {e256:.4}; z at n=9 gap {zgap:.1e}"),
    ))
}

/// Total variation between `mu` pushed through the permutation and `mu`.
fn push_defect(sys: &FiniteSystem, mu: &[f64]) -> f64 {
    let mut pushed = vec![0.0; mu.len()];
    for (x, &w) in mu.iter().enumerate() {
        pushed[sys.permutation[x]] += w;
    }
    pushed.iter().zip(mu).map(|(a, b)| (a - b).abs()).sum()
}

fn krylov_bogolyubov() -> Verdict {
    let rows = all_ok(par(100, |i| {
        let mut rng = trial_rng(SEED + 13, i);
        let m = rng.random_range(1..=60);
        let sys = ergodic::random::finite_system(m, &mut rng);
        let start = ergodic::random::probability(m, &mut rng);
        let n = rng.random_range(0..=200);
        let kb = ergodic::krylov_bogolyubov(&sys, &start, n)?;
        let bound = 2.0 / (n + 1) as f64;
        Ok((kb.defect / bound, push_defect(&sys, &kb.measure) / bound))
    }))?;
    let periodic = all_ok(par(50, |i| {
        let mut rng = trial_rng(SEED + 14, i);
        let m = rng.random_range(1..=60);
        let sys = ergodic::random::finite_system(m, &mut rng);
        let x = rng.random_range(0..m);
        let q = sys
            .orbits()
            .into_iter()
            .find(|o| o.contains(&x))
            .unwrap()
            .len();
        let mut start = vec![0.0; m];
        start[x] = 1.0;
        let n = q * rng.random_range(1..=10) - 1;
        Ok(ergodic::krylov_bogolyubov(&sys, &start, n)?.defect)
    }))?;
    let worst = max_of(rows.iter().map(|r| r.0));
    let oracle = max_of(rows.iter().map(|r| r.1));
    let per = max_of(periodic);
    Ok((
        worst <= 1.0 && oracle <= 1.0 && per == 0.0,
        format!(
            "max defect/(2/(n+1)) {worst:.16} (recomputed {oracle:.16}), periodic defect {per:e}"
        ),
    ))
}

fn dimension() -> Verdict {
    let space = UltrametricSpace::uniform(2, 0.5, 17)?;
    let plain = metric::box_dimension(&space, 1.0, 8..=16)?;
    let flake = metric::box_dimension(&space, 0.5, 8..=16)?;
    let counts_exact = plain
        .levels
        .iter()
        .zip(&plain.counts)
        .all(|(&k, &c)| c == 2f64.powi(k as i32));
    Ok((
        (plain.slope - 1.0).abs() <= 0.05 && (flake.slope - 2.0).abs() <= 0.10 && counts_exact,
        format!(
            "plain {:.4}, snowflake a=1/2 {:.4}",
            plain.slope, flake.slope
        ),
    ))
}

fn counting() -> Verdict {
    let bad = par(1001, |n| {
        let avg = ergodic::counting_shift_average(0, &[1.0], n);
        let numerators_ok =
            avg.numerators.len() == n + 1 && avg.numerators.iter().all(|&v| v == 1.0);
        !(numerators_ok && avg.l1_mass() == 1.0 && avg.sup_norm() == 1.0 / (n + 1) as f64)
    })
    .into_iter()
    .filter(|&b| b)
    .count();
    Ok((
        bad == 0,
        format!("n = 0..=1000: {bad} violations of mass 1 and sup 1/(n+1)"),
    ))
}

fn main() -> ExitCode {
    let started = Instant::now();
    let inputs = random_inputs();
    let criteria: Vec<Criterion> = vec![
        ("cesaro geometric", Box::new(cesaro_geometric)),
        ("abel extrapolation", Box::new(abel_extrapolation)),
        (
            "cauchy-product abel multiplicativity",
            Box::new(cauchy_multiplicativity),
        ),
        ("neumann inversion", Box::new(neumann_inversion)),
        ("spectral radius consistency", Box::new(spectral_radius)),
        ("operator-average bound", Box::new(operator_average)),
        ("mean ergodic", Box::new(mean_ergodic)),
        ("weak-type constant", Box::new(|| weak_type(&inputs))),
        ("L^p constant", Box::new(|| lp_bound(&inputs))),
        ("covering lemmas", Box::new(covering)),
        ("fejer uniform convergence", Box::new(fejer)),
        ("krylov-bogolyubov defect", Box::new(krylov_bogolyubov)),
        ("dimension scaling", Box::new(dimension)),
        ("counting-measure counterexample", Box::new(counting)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let t = Instant::now();
        let (pass, detail) = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(Ok(v)) => v,
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".into()),
        };
        failed += usize::from(!pass);
        println!(
            "{} {name}: {detail} ({:.2}s)",
            if pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
