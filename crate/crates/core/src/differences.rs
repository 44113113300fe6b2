//! Finite and divided differences, k-monotonicity certification, the
//! Taylor truncation `T_{k-1}` with a left `(k-1)`-st derivative, and the
//! split of a k-monotone function into two pieces vanishing on `[-1, 0]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chebyshev::ChebyshevPoly;
use crate::error::{Error, Result};
use crate::function::{CertificateSource, FunctionDescriptor};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Symmetric,
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferenceSpec {
    pub k: usize,
    pub h: f64,
    pub direction: Direction,
    pub domain: (f64, f64),
}

impl DifferenceSpec {
    pub fn new(k: usize, h: f64, direction: Direction) -> Self {
        DifferenceSpec {
            k,
            h,
            direction,
            domain: (-1.0, 1.0),
        }
    }

    pub fn on(mut self, a: f64, b: f64) -> Self {
        self.domain = (a, b);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::param("k", 0.0, "order must be >= 1"));
        }
        if !(self.h > 0.0) {
            return Err(Error::param("h", self.h, "step must be positive"));
        }
        if !(self.domain.0 < self.domain.1) {
            return Err(Error::Spec("difference domain must satisfy a < b".into()));
        }
        Ok(())
    }
}

/// Signed binomial weights `C(k,i)(-1)^{k-i}`, `i = 0..=k`.
pub fn difference_weights(k: usize) -> Vec<f64> {
    let mut c = vec![1.0; k + 1];
    for i in 1..=k {
        c[i] = c[i - 1] * (k - i + 1) as f64 / i as f64;
    }
    for (i, v) in c.iter_mut().enumerate() {
        if (k - i) % 2 == 1 {
            *v = -*v;
        }
    }
    c
}

/// `sum_i weights[i] f(lo + i h)` without domain checks.
#[inline]
pub fn stencil_sum<F: Fn(f64) -> f64>(f: F, weights: &[f64], lo: f64, h: f64) -> f64 {
    weights
        .iter()
        .enumerate()
        .map(|(i, c)| c * f(lo + i as f64 * h))
        .sum()
}

/// Left end of the stencil of a difference centred according to `dir`.
#[inline]
pub fn stencil_start(dir: Direction, k: usize, h: f64, x: f64) -> f64 {
    match dir {
        Direction::Symmetric => x - 0.5 * k as f64 * h,
        Direction::Forward => x,
        Direction::Backward => x - k as f64 * h,
    }
}

/// The k-th symmetric, forward or backward difference of `f` at `x`; zero
/// when the stencil leaves the domain.
pub fn difference(f: &FunctionDescriptor, spec: &DifferenceSpec, x: f64) -> Result<f64> {
    spec.validate()?;
    let (a, b) = spec.domain;
    let kf = spec.k as f64;
    let (lo, hi) = match spec.direction {
        Direction::Symmetric => (x - 0.5 * kf * spec.h, x + 0.5 * kf * spec.h),
        Direction::Forward => (x, x + kf * spec.h),
        Direction::Backward => (x - kf * spec.h, x),
    };
    if lo < a || hi > b {
        return Ok(0.0);
    }
    let w = difference_weights(spec.k);
    let mut s = 0.0;
    for (i, c) in w.iter().enumerate() {
        let t = if i == spec.k { hi } else { lo + i as f64 * spec.h };
        s += c * f.try_eval(t)?;
    }
    Ok(s)
}

const NODE_TOL: f64 = 1e-13;

/// Newton-form divided difference `[x_0, ..., x_k; f]`.
pub fn divided_difference(points: &[f64], f: &FunctionDescriptor) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Spec("divided difference needs at least one point".into()));
    }
    let mut xs = points.to_vec();
    xs.sort_by(f64::total_cmp);
    for w in xs.windows(2) {
        if w[1] - w[0] < NODE_TOL {
            return Err(Error::DegenerateNodes {
                a: w[0],
                b: w[1],
                tol: NODE_TOL,
            });
        }
    }
    if xs[0] <= -1.0 || xs[xs.len() - 1] >= 1.0 {
        return Err(Error::Spec("divided difference nodes must lie in (-1, 1)".into()));
    }
    let vals: Vec<f64> = xs.iter().map(|&x| f.try_eval(x)).collect::<Result<_>>()?;
    Ok(newton_table(&xs, vals))
}

fn newton_table(xs: &[f64], mut d: Vec<f64>) -> f64 {
    let n = xs.len();
    for level in 1..n {
        for i in (level..n).rev() {
            d[i] = (d[i] - d[i - 1]) / (xs[i] - xs[i - level]);
        }
    }
    d[n - 1]
}

/// Rounding scale `sum |f_i| / prod_{j != i} |x_i - x_j|` of a divided difference.
fn rounding_scale(xs: &[f64], vals: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..xs.len() {
        let mut p = 1.0;
        for j in 0..xs.len() {
            if j != i {
                p *= (xs[i] - xs[j]).abs();
            }
        }
        s += vals[i].abs() / p;
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Verdict {
    Certified { subsets: usize, trials: usize },
    Refuted { witness: Vec<f64>, value: f64 },
}

impl Verdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, Verdict::Certified { .. })
    }
}

/// Default absolute tolerance on divided-difference values.
pub const MONOTONE_TOL: f64 = 1e-9;
const CERT_GRID: usize = 40;
const CERT_MARGIN: f64 = 1e-6;

/// The 40 Chebyshev points on `[-1 + 1e-6, 1 - 1e-6]`, ascending.
pub fn certification_grid() -> Vec<f64> {
    let s = 1.0 - CERT_MARGIN;
    let n = CERT_GRID as f64;
    (0..CERT_GRID)
        .rev()
        .map(|j| s * (std::f64::consts::PI * (2 * j + 1) as f64 / (2.0 * n)).cos())
        .collect()
}

fn refutes(xs: &[f64], vals: &[f64], k: usize, tol: f64) -> Option<f64> {
    let dd = newton_table(xs, vals.to_vec());
    let slack = tol + 16.0 * (k + 1) as f64 * f64::EPSILON * rounding_scale(xs, vals);
    (dd < -slack || dd.is_nan()).then_some(dd)
}

/// Advances `idx` to the next k-subset of `0..n` in lexicographic order.
fn next_subset(idx: &mut [usize], n: usize) -> bool {
    let m = idx.len();
    let mut i = m;
    while i > 0 {
        i -= 1;
        if idx[i] < n - m + i {
            idx[i] += 1;
            for j in i + 1..m {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Statistical certificate that all k-th divided differences of `f` are
/// nonnegative: every (k+1)-subset of a 40-point Chebyshev grid plus
/// `trials` seeded random node sets.
pub fn certify_k_monotone(
    f: &FunctionDescriptor,
    k: usize,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<Verdict> {
    if k == 0 {
        return Err(Error::param("k", 0.0, "order must be >= 1"));
    }
    if trials == 0 {
        return Err(Error::param("trials", 0.0, "need at least one trial"));
    }
    let grid = certification_grid();
    let vals: Vec<f64> = grid.iter().map(|&x| f.try_eval(x)).collect::<Result<_>>()?;
    let m = k + 1;
    if m > CERT_GRID {
        return Err(Error::param("k", k as f64, "order exceeds certification grid"));
    }
    // parallel over the first index; the earliest failing subset wins
    let firsts: Vec<usize> = (0..=CERT_GRID - m).collect();
    let found = par::map(&firsts, |&i0| {
        let mut rest: Vec<usize> = (i0 + 1..i0 + m).collect();
        let mut xs = vec![0.0; m];
        let mut vs = vec![0.0; m];
        let mut count = 0usize;
        loop {
            xs[0] = grid[i0];
            vs[0] = vals[i0];
            for (j, &r) in rest.iter().enumerate() {
                xs[j + 1] = grid[r];
                vs[j + 1] = vals[r];
            }
            count += 1;
            if let Some(dd) = refutes(&xs, &vs, k, tol) {
                return (count, Some((xs.clone(), dd)));
            }
            if rest.is_empty() || !next_subset_above(&mut rest, i0 + 1, CERT_GRID) {
                return (count, None);
            }
        }
    });
    let mut subsets = 0;
    for (count, hit) in found {
        subsets += count;
        if let Some((witness, value)) = hit {
            return Ok(Verdict::Refuted { witness, value });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = -1.0 + CERT_MARGIN;
    let hi = 1.0 - CERT_MARGIN;
    let mut xs = vec![0.0; m];
    for _ in 0..trials {
        loop {
            if rng.random_bool(0.5) {
                for x in xs.iter_mut() {
                    *x = rng.random_range(lo..hi);
                }
            } else {
                let c: f64 = rng.random_range(lo..hi);
                let spread = 10f64.powf(-rng.random_range(0.0..4.0));
                for x in xs.iter_mut() {
                    *x = (c + spread * rng.random_range(-1.0..1.0)).clamp(lo, hi);
                }
            }
            xs.sort_by(f64::total_cmp);
            if xs.windows(2).all(|w| w[1] - w[0] >= 1e-10) {
                break;
            }
        }
        let vs: Vec<f64> = xs.iter().map(|&x| f.try_eval(x)).collect::<Result<_>>()?;
        if let Some(dd) = refutes(&xs, &vs, k, tol) {
            return Ok(Verdict::Refuted {
                witness: xs.clone(),
                value: dd,
            });
        }
    }
    Ok(Verdict::Certified { subsets, trials })
}

/// Next subset of `base..n` with `idx.len()` elements.
fn next_subset_above(idx: &mut [usize], base: usize, n: usize) -> bool {
    let mut shifted: Vec<usize> = idx.iter().map(|i| i - base).collect();
    let ok = next_subset(&mut shifted, n - base);
    if ok {
        for (d, s) in idx.iter_mut().zip(shifted) {
            *d = s + base;
        }
    }
    ok
}

const DERIV_STEP: f64 = 1e-3;
const DERIV_LEVELS: usize = 7;
const DERIV_REL_TOL: f64 = 1e-6;
const DERIV_ABS_TOL: f64 = 1e-8;

/// Numeric `f^{(r)}(0)`: backward (left) or symmetric differences on steps
/// `s 2^{-j}`, `j = 0..6`, with Richardson extrapolation.
fn numeric_derivative_at_zero(f: &FunctionDescriptor, r: usize, left: bool) -> Result<f64> {
    let w = difference_weights(r);
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(DERIV_LEVELS);
    // one-sided errors expand in powers of s, symmetric ones in s^2
    let base: f64 = if left { 2.0 } else { 4.0 };
    for j in 0..DERIV_LEVELS {
        let s = DERIV_STEP / (1u64 << j) as f64;
        let lo = if left { -(r as f64) * s } else { -0.5 * r as f64 * s };
        let mut v = 0.0;
        for (i, c) in w.iter().enumerate() {
            let x = if left && i == r { 0.0 } else { lo + i as f64 * s };
            v += c * f.try_eval(x)?;
        }
        let mut row = vec![v / s.powi(r as i32)];
        for m in 1..=j {
            let fac = base.powi(m as i32);
            let prev = &table[j - 1];
            let cur = row[m - 1] + (row[m - 1] - prev[m - 1]) / (fac - 1.0);
            row.push(cur);
        }
        table.push(row);
    }
    let last = table[DERIV_LEVELS - 1][DERIV_LEVELS - 1];
    let prev = table[DERIV_LEVELS - 2][DERIV_LEVELS - 2];
    if (last - prev).abs() <= DERIV_REL_TOL * last.abs() + DERIV_ABS_TOL && last.is_finite() {
        Ok(last)
    } else {
        Err(Error::DerivativeUnavailable {
            order: r,
            x: 0.0,
            reason: format!("extrapolated estimates {prev} and {last} disagree"),
        })
    }
}

/// `T_{k-1}(f)`: Taylor polynomial at 0 whose top coefficient uses the left
/// derivative `f_-^{(k-1)}(0)`.
pub fn taylor_truncation(f: &FunctionDescriptor, k: usize) -> Result<ChebyshevPoly> {
    if k == 0 {
        return Err(Error::param("k", 0.0, "order must be >= 1"));
    }
    let mut mono = vec![0.0; k];
    let mut fact = 1.0;
    for r in 0..k {
        if r > 0 {
            fact *= r as f64;
        }
        let top = r == k - 1;
        let d = if r == 0 {
            if top {
                f.try_eval(-f64::MIN_POSITIVE)?
            } else {
                f.try_eval(0.0)?
            }
        } else if f.has_derivative(r) {
            let x = if top { -f64::MIN_POSITIVE } else { 0.0 };
            f.eval_derivative(r, x)?
        } else {
            numeric_derivative_at_zero(f, r, top)?
        };
        mono[r] = d / fact;
    }
    let mut p = ChebyshevPoly::from_monomial(&mono);
    p.degree_bound = k - 1;
    Ok(p)
}

/// Splits `f ∈ M^k` into `f_1 = (f - T_{k-1} f) χ_(0,1]` and
/// `f~_2(x) = (-1)^k (f - T_{k-1} f)(-x) χ_(0,1](x)`, both in `M^k_+`.
pub fn mplus_split(f: &FunctionDescriptor, k: usize) -> Result<(FunctionDescriptor, FunctionDescriptor)> {
    let declared = f.monotone_order.is_some_and(|m| m.k == k);
    let source = if declared {
        f.monotone_order.unwrap().source
    } else {
        match certify_k_monotone(f, k, 500, 42, MONOTONE_TOL)? {
            Verdict::Certified { .. } => CertificateSource::Checked,
            Verdict::Refuted { witness, value } => {
                return Err(Error::Spec(format!(
                    "`{}` is not {k}-monotone: divided difference {value:e} at {witness:?}",
                    f.name
                )))
            }
        }
    };
    let t = taylor_truncation(f, k)?;
    let g = f.minus_poly(&t);
    let mut f1 = g.restricted_half_open(0.0, 1.0);
    f1.name = format!("{}_1", f.name);
    f1.monotone_order = None;
    let mut f2 = g.reflected(k).restricted_half_open(0.0, 1.0);
    f2.name = format!("{}_2", f.name);
    f2.monotone_order = None;
    Ok((f1.with_monotone(k, source), f2.with_monotone(k, source)))
}
