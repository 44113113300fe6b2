//! Best weighted polynomial approximation `E_n(f)_{w,q}` and the
//! Remez-type norm ratio.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chebyshev::{chebyshev_t_values, ChebyshevPoly};
use crate::error::{Error, Result};
use crate::function::FunctionDescriptor;
use crate::lp::{self, LinearProgram};
use crate::quadrature::{gauss_legendre, graded_mesh, weighted_norm, QuadratureConfig};
use crate::weight::{JacobiWeight, NormOrder};

pub const IRLS_MAX_ITER: usize = 50;
pub const IRLS_TOL: f64 = 1e-9;
pub const EXCHANGE_MAX_ITER: usize = 100;
/// Objective change below which a repeated reference set counts as a stall.
pub const EXCHANGE_STALL: f64 = 1e-14;
/// Values below this are treated as zero when counting sign changes.
pub const SIGN_ZERO: f64 = 1e-12;
const LP_MAX_ITER: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    LeastSquares,
    LinearProgram,
    Exchange,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub grid_size: usize,
    /// Objective of the discrete problem at the returned polynomial.
    pub discrete_objective: f64,
    /// Alternating extrema of the weighted residual on the grid whose
    /// magnitude is within 1% of the discrete maximum.
    pub alternations: usize,
    /// `(primal - dual) / primal` of the linear program, when one was solved.
    pub duality_gap: Option<f64>,
    /// Set when the zero polynomial beat the solver's candidate.
    pub zero_fallback: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApproxResult {
    pub poly: ChebyshevPoly,
    pub error: f64,
    pub solver: Solver,
    pub iterations: usize,
    pub residual_stats: ResidualStats,
}

/// `max(20(n+1), 512)`.
pub fn default_grid_size(n: usize) -> usize {
    (20 * (n + 1)).max(512)
}

/// Discretization of `[-1, 1]`: nodes, quadrature weights (zero for pure
/// sample points), `w(x_j)` and `f(x_j)`.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub x: Vec<f64>,
    pub omega: Vec<f64>,
    pub w: Vec<f64>,
    pub f: Vec<f64>,
}

fn near_end_points(f: &FunctionDescriptor, w: JacobiWeight, first_gap: f64, quad: &QuadratureConfig) -> Vec<f64> {
    let exps = (w.alpha + f.exponent_at_minus_one(), w.beta + f.exponent_at_plus_one());
    graded_mesh((-1.0, 1.0), exps, quad)
        .into_iter()
        .filter(|x| 1.0 - x.abs() < first_gap)
        .collect()
}

fn clip_sort(mut v: Vec<f64>, clip: f64) -> Vec<f64> {
    for x in v.iter_mut() {
        *x = x.clamp(-1.0 + clip, 1.0 - clip);
    }
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);
    v
}

fn finish(f: &FunctionDescriptor, w: JacobiWeight, x: Vec<f64>, omega: Vec<f64>) -> Result<Discretization> {
    let mut fv = Vec::with_capacity(x.len());
    let mut wv = Vec::with_capacity(x.len());
    for &t in &x {
        fv.push(f.try_eval(t)?);
        let wt = w.eval(t);
        if !wt.is_finite() {
            return Err(Error::Singularity {
                x: t,
                value: wt,
                context: "weight".into(),
            });
        }
        wv.push(wt);
    }
    Ok(Discretization { x, omega, w: wv, f: fv })
}

/// Composite Gauss–Legendre rule with about `m` nodes on panels bounded by
/// `cos(jπ/P)`, graded toward `±1` and split at the kinks of `f`.
pub fn quadrature_grid(
    f: &FunctionDescriptor,
    w: JacobiWeight,
    m: usize,
    quad: &QuadratureConfig,
) -> Result<Discretization> {
    let g = quad.nodes_per_panel;
    let panels = m.div_ceil(g).max(2);
    let mut bounds: Vec<f64> = (0..=panels).map(|j| (j as f64 * PI / panels as f64).cos()).collect();
    bounds.extend(near_end_points(f, w, 1.0 - (PI / panels as f64).cos(), quad));
    bounds.extend(f.kinks());
    let bounds = clip_sort(bounds, quad.clip_epsilon);
    let (nodes, weights) = gauss_legendre(g);
    let mut x = Vec::with_capacity(bounds.len() * g);
    let mut omega = Vec::with_capacity(bounds.len() * g);
    for pair in bounds.windows(2) {
        let half = 0.5 * (pair[1] - pair[0]);
        if half <= 0.0 {
            continue;
        }
        let mid = 0.5 * (pair[0] + pair[1]);
        for (t, wt) in nodes.iter().zip(&weights) {
            x.push(mid + half * t);
            omega.push(half * wt);
        }
    }
    finish(f, w, x, omega)
}

/// Sample set for the uniform norm: `m` Chebyshev-angle points, the graded
/// points near `±1`, the kinks of `f` and the clip ends.
pub fn sample_grid(f: &FunctionDescriptor, w: JacobiWeight, m: usize, quad: &QuadratureConfig) -> Result<Discretization> {
    let mut x: Vec<f64> = (0..m).map(|j| ((j as f64 + 0.5) * PI / m as f64).cos()).collect();
    x.extend(near_end_points(f, w, 1.0 - (0.5 * PI / m as f64).cos(), quad));
    x.extend(f.kinks());
    x.push(-1.0);
    x.push(1.0);
    let x = clip_sort(x, quad.clip_epsilon);
    let omega = vec![0.0; x.len()];
    finish(f, w, x, omega)
}

/// Row-major matrix of `T_a(x_j)`, `a = 0..=n`.
fn basis_matrix(x: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len() * (n + 1)];
    for (j, &t) in x.iter().enumerate() {
        chebyshev_t_values(t, n, &mut out[j * (n + 1)..(j + 1) * (n + 1)]);
    }
    out
}

fn eval_rows(tm: &[f64], n: usize, c: &[f64]) -> Vec<f64> {
    tm.chunks(n + 1)
        .map(|row| row.iter().zip(c).map(|(a, b)| a * b).sum())
        .collect()
}

/// Weighted least squares `min Σ s_j (f_j - P(x_j))²` by the normal
/// equations (Cholesky, with an SVD fallback).
fn weighted_lsq(tm: &[f64], n: usize, s: &[f64], fv: &[f64]) -> Result<Vec<f64>> {
    let d = n + 1;
    let mut g = DMatrix::<f64>::zeros(d, d);
    let mut rhs = DVector::<f64>::zeros(d);
    for (j, row) in tm.chunks(d).enumerate() {
        let sj = s[j];
        if sj == 0.0 {
            continue;
        }
        for a in 0..d {
            let ra = sj * row[a];
            rhs[a] += ra * fv[j];
            for b in 0..=a {
                g[(a, b)] += ra * row[b];
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            g[(b, a)] = g[(a, b)];
        }
    }
    if let Some(ch) = g.clone().cholesky() {
        return Ok(ch.solve(&rhs).iter().copied().collect());
    }
    let svd = g.svd(true, true);
    let sol = svd
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::SolverStall(format!("least squares: {e}")))?;
    Ok(sol.iter().copied().collect())
}

fn lq_objective(r: &[f64], u: &[f64], q: f64) -> f64 {
    r.iter().zip(u).map(|(r, u)| u * r.abs().powf(q)).sum()
}

/// Counts alternating extrema of `r` whose magnitude is within 1% of
/// `max |r|`.
pub fn alternation_count(r: &[f64]) -> usize {
    let top = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if top == 0.0 {
        return 0;
    }
    let mut count = 0;
    let mut last = 0.0;
    for &v in r {
        if v.abs() >= 0.99 * top && v.signum() != last {
            count += 1;
            last = v.signum();
        }
    }
    count
}

struct Prepared<'a> {
    f: &'a FunctionDescriptor,
    n: usize,
    w: JacobiWeight,
    q: NormOrder,
    quad: &'a QuadratureConfig,
    zero_norm: f64,
}

fn prepare<'a>(
    f: &'a FunctionDescriptor,
    n: usize,
    w: JacobiWeight,
    q: NormOrder,
    m: usize,
    quad: &'a QuadratureConfig,
) -> Result<Prepared<'a>> {
    if m < 8 * (n + 1) {
        return Err(Error::param("m", m as f64, format!("grid size must be at least 8(n+1) = {}", 8 * (n + 1))));
    }
    if n > 200 {
        return Err(Error::param("n", n as f64, "degrees above 200 are not supported"));
    }
    quad.validate()?;
    let zero_norm = weighted_norm(f, w, q, (-1.0, 1.0), quad)?;
    Ok(Prepared {
        f,
        n,
        w,
        q,
        quad,
        zero_norm,
    })
}

impl Prepared<'_> {
    /// Continuous error of `poly`; falls back to the zero polynomial when it
    /// does better.
    fn finish(&self, coeffs: Vec<f64>, solver: Solver, iterations: usize, mut stats: ResidualStats) -> Result<ApproxResult> {
        let poly = ChebyshevPoly::new(coeffs, self.n);
        let resid = self.f.minus_poly(&poly);
        let err = weighted_norm(&resid, self.w, self.q, (-1.0, 1.0), self.quad)?;
        if err > self.zero_norm {
            stats.zero_fallback = true;
            return Ok(ApproxResult {
                poly: ChebyshevPoly::zero(self.n),
                error: self.zero_norm,
                solver,
                iterations,
                residual_stats: stats,
            });
        }
        Ok(ApproxResult {
            poly,
            error: err,
            solver,
            iterations,
            residual_stats: stats,
        })
    }

    fn exact(&self) -> Option<ApproxResult> {
        match self.f.polynomial_degree {
            Some(d) if d <= self.n => None.or_else(|| {
                // interpolate at Chebyshev points of the first kind
                let k = self.n + 1;
                let pts: Vec<f64> = (0..k).map(|j| ((j as f64 + 0.5) * PI / k as f64).cos()).collect();
                let vals: Vec<f64> = pts.iter().map(|&x| self.f.eval(x)).collect();
                let mut c = vec![0.0; k];
                let mut t = vec![0.0; k];
                for (x, v) in pts.iter().zip(&vals) {
                    chebyshev_t_values(*x, self.n, &mut t);
                    for a in 0..k {
                        c[a] += 2.0 / k as f64 * v * t[a];
                    }
                }
                c[0] *= 0.5;
                let poly = ChebyshevPoly::new(c, self.n);
                Some(ApproxResult {
                    poly,
                    error: 0.0,
                    solver: Solver::LeastSquares,
                    iterations: 0,
                    residual_stats: ResidualStats::default(),
                })
            }),
            _ => None,
        }
    }
}

/// `E_n(f)_{w,q}` and a near-best polynomial. `m` is the discretization
/// size (at least `8(n+1)`; see [`default_grid_size`]).
pub fn best_approx(f: &FunctionDescriptor, n: usize, w: JacobiWeight, q: NormOrder, m: usize) -> Result<ApproxResult> {
    best_approx_with(f, n, w, q, m, &QuadratureConfig::default())
}

pub fn best_approx_with(
    f: &FunctionDescriptor,
    n: usize,
    w: JacobiWeight,
    q: NormOrder,
    m: usize,
    quad: &QuadratureConfig,
) -> Result<ApproxResult> {
    let prep = prepare(f, n, w, q, m, quad)?;
    if let Some(r) = prep.exact() {
        return Ok(r);
    }
    if q.is_infinite() {
        let grid = sample_grid(f, w, m, quad)?;
        match exchange(f, w, &grid, n) {
            Ok((c, iters, stats)) => prep.finish(c, Solver::Exchange, iters, stats),
            Err(Error::SolverStall(_)) => {
                let (c, iters, stats) = minimax_lp(&grid, n)?;
                prep.finish(c, Solver::LinearProgram, iters, stats)
            }
            Err(e) => Err(e),
        }
    } else if q.value() == 1.0 {
        let grid = quadrature_grid(f, w, m, quad)?;
        let (c, iters, stats) = l1_lp(&grid, n)?;
        prep.finish(c, Solver::LinearProgram, iters, stats)
    } else {
        let grid = quadrature_grid(f, w, m, quad)?;
        let (c, iters, stats) = irls_on(&grid, n, q.value(), None)?;
        prep.finish(c, Solver::LeastSquares, iters, stats)
    }
}

/// Iteratively reweighted least squares for `1 < q < ∞` started from
/// `init` (the unweighted least-squares fit when `None`).
pub fn irls(
    f: &FunctionDescriptor,
    n: usize,
    w: JacobiWeight,
    q: NormOrder,
    m: usize,
    quad: &QuadratureConfig,
    init: Option<&ChebyshevPoly>,
) -> Result<ApproxResult> {
    if q.is_infinite() || q.value() <= 1.0 {
        return Err(Error::param("q", q.value(), "IRLS needs 1 < q < inf"));
    }
    let prep = prepare(f, n, w, q, m, quad)?;
    let grid = quadrature_grid(f, w, m, quad)?;
    let init: Option<Vec<f64>> = init.map(|p| {
        let mut c = p.coeffs.clone();
        c.resize(n + 1, 0.0);
        c
    });
    let (c, iters, stats) = irls_on(&grid, n, q.value(), init)?;
    prep.finish(c, Solver::LeastSquares, iters, stats)
}

fn irls_on(grid: &Discretization, n: usize, q: f64, init: Option<Vec<f64>>) -> Result<(Vec<f64>, usize, ResidualStats)> {
    let tm = basis_matrix(&grid.x, n);
    let u: Vec<f64> = grid.omega.iter().zip(&grid.w).map(|(o, w)| o * w.powf(q)).collect();
    let mut c = match init {
        Some(c) => c,
        None => {
            let s: Vec<f64> = grid.omega.iter().zip(&grid.w).map(|(o, w)| o * w * w).collect();
            weighted_lsq(&tm, n, &s, &grid.f)?
        }
    };
    let resid = |c: &[f64]| -> Vec<f64> {
        eval_rows(&tm, n, c)
            .iter()
            .zip(&grid.f)
            .map(|(p, f)| f - p)
            .collect()
    };
    let step0 = if q > 2.0 { 1.0 / (q - 1.0) } else { 1.0 };
    let mut r = resid(&c);
    let mut obj = lq_objective(&r, &u, q);
    let mut iterations = 0;
    let mut converged = false;
    for it in 1..=IRLS_MAX_ITER {
        iterations = it;
        let top = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if top == 0.0 {
            converged = true;
            break;
        }
        let floor = 1e-10 * top;
        let s: Vec<f64> = r.iter().zip(&u).map(|(r, u)| u * r.abs().max(floor).powf(q - 2.0)).collect();
        let target = weighted_lsq(&tm, n, &s, &grid.f)?;
        let dir: Vec<f64> = target.iter().zip(&c).map(|(t, c)| t - c).collect();
        // backtracking on the true objective, from the Newton-length step
        let mut step = if q < 2.0 { 1.0 / (q - 1.0) } else { step0 };
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = c.iter().zip(&dir).map(|(c, d)| c + step * d).collect();
            let tr = resid(&trial);
            let to = lq_objective(&tr, &u, q);
            if to <= obj {
                accepted = Some((trial, tr, to));
                break;
            }
            step *= 0.5;
        }
        let Some((nc, nr, no)) = accepted else {
            converged = true;
            break;
        };
        let dn = nc.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let cn = nc.iter().map(|a| a * a).sum::<f64>().sqrt();
        c = nc;
        r = nr;
        obj = no;
        if dn <= IRLS_TOL * cn.max(1e-300) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SolverStall(format!(
            "IRLS did not reach relative change {IRLS_TOL:e} in {IRLS_MAX_ITER} iterations (q = {q})"
        )));
    }
    let wr: Vec<f64> = r.iter().zip(&grid.w).map(|(r, w)| r * w).collect();
    Ok((
        c,
        iterations,
        ResidualStats {
            grid_size: grid.x.len(),
            discrete_objective: obj.powf(1.0 / q),
            alternations: alternation_count(&wr),
            duality_gap: None,
            zero_fallback: false,
        },
    ))
}

const GOLDEN_ITERS: usize = 60;

/// Maximizes `g` on `[a, b]` by golden section, keeping the best of the
/// probes and the seed `x0`.
fn golden_max<G: Fn(f64) -> f64>(g: G, a: f64, b: f64, x0: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (a, b);
    let mut best = (x0, g(x0));
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..GOLDEN_ITERS {
        if gc.max(gd) > best.1 {
            best = if gc > gd { (c, gc) } else { (d, gd) };
        }
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
    }
    if gc.max(gd) > best.1 {
        best = if gc > gd { (c, gc) } else { (d, gd) };
    }
    best
}

/// Weighted minimax by exchange: one extremum per sign run of the residual
/// on the sample grid, each polished by golden section between its grid
/// neighbours.
fn exchange(
    f: &FunctionDescriptor,
    w: JacobiWeight,
    grid: &Discretization,
    n: usize,
) -> Result<(Vec<f64>, usize, ResidualStats)> {
    let pts: Vec<usize> = (0..grid.x.len()).filter(|&j| grid.w[j] > 0.0).collect();
    if pts.len() < n + 2 {
        return Err(Error::SolverStall("fewer grid points than reference size".into()));
    }
    let x: Vec<f64> = pts.iter().map(|&j| grid.x[j]).collect();
    let wv: Vec<f64> = pts.iter().map(|&j| grid.w[j]).collect();
    let fv: Vec<f64> = pts.iter().map(|&j| grid.f[j]).collect();
    let tm = basis_matrix(&x, n);
    let d = n + 1;
    // Chebyshev extrema of order n+1, snapped to distinct grid points
    let mut idx: Vec<usize> = Vec::with_capacity(n + 2);
    for i in 0..n + 2 {
        let target = -(i as f64 * PI / (n + 1) as f64).cos();
        let mut j = x.partition_point(|&v| v < target).min(x.len() - 1);
        if j > 0 && (x[j - 1] - target).abs() < (x[j] - target).abs() {
            j -= 1;
        }
        if let Some(&prev) = idx.last() {
            j = j.max(prev + 1);
        }
        idx.push(j);
    }
    let overflow = idx.last().copied().unwrap_or(0) + 1;
    if overflow > x.len() {
        let shift = overflow - x.len();
        for (i, r) in idx.iter_mut().enumerate() {
            *r = (*r).saturating_sub(shift).max(i);
        }
    }
    let mut refs: Vec<(f64, f64, f64)> = idx.iter().map(|&j| (x[j], wv[j], fv[j])).collect();
    let mut t = vec![0.0; d];
    let mut last_level = 0.0;
    let mut flat = 0;
    for it in 1..=EXCHANGE_MAX_ITER {
        let mut a = DMatrix::<f64>::zeros(n + 2, n + 2);
        let mut b = DVector::<f64>::zeros(n + 2);
        for (i, &(xi, wi, fi)) in refs.iter().enumerate() {
            chebyshev_t_values(xi, n, &mut t);
            for k in 0..d {
                a[(i, k)] = t[k];
            }
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            a[(i, d)] = s / wi;
            b[i] = fi;
        }
        let sol = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::SolverStall("singular exchange system".into()))?;
        let c: Vec<f64> = sol.iter().take(d).copied().collect();
        let level = sol[d].abs();
        let poly = ChebyshevPoly::new(c.clone(), n);
        let p = eval_rows(&tm, n, &c);
        let r: Vec<f64> = (0..x.len()).map(|j| wv[j] * (fv[j] - p[j])).collect();
        let grid_top = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if grid_top == 0.0 {
            return Ok((c, it, ResidualStats { grid_size: x.len(), ..Default::default() }));
        }
        // one extremum per maximal run of constant sign
        let mut runs: Vec<usize> = Vec::new();
        let mut run_sign = 0.0;
        for (j, &v) in r.iter().enumerate() {
            if v.abs() <= SIGN_ZERO * grid_top {
                continue;
            }
            let s = v.signum();
            if s != run_sign {
                runs.push(j);
                run_sign = s;
            } else if let Some(last) = runs.last_mut() {
                if v.abs() > r[*last].abs() {
                    *last = j;
                }
            }
        }
        let resid = |xx: f64| w.eval(xx) * (f.eval(xx) - poly.eval(xx));
        let mut cand: Vec<(f64, f64)> = runs
            .iter()
            .map(|&j| {
                let s = r[j].signum();
                let lo = if j > 0 { x[j - 1] } else { x[j] };
                let hi = if j + 1 < x.len() { x[j + 1] } else { x[j] };
                let (xb, gb) = golden_max(|xx| s * resid(xx), lo, hi, x[j]);
                (xb, s * gb)
            })
            .collect();
        while cand.len() > n + 2 {
            if cand[0].1.abs() < cand[cand.len() - 1].1.abs() {
                cand.remove(0);
            } else {
                cand.pop();
            }
        }
        let top = cand.iter().fold(grid_top, |m, v| m.max(v.1.abs()));
        let stats = || ResidualStats {
            grid_size: x.len(),
            discrete_objective: top,
            alternations: alternation_count(&r),
            duality_gap: None,
            zero_fallback: false,
        };
        if top <= level * (1.0 + 1e-12) {
            return Ok((c, it, stats()));
        }
        if cand.len() < n + 2 {
            // too few sign runs (for instance an interpolating reference):
            // swap the worst point into the nearest reference position
            let (xb, _) = cand
                .iter()
                .copied()
                .fold((0.0, -1.0), |b, v| if v.1.abs() > b.1 { (v.0, v.1.abs()) } else { b });
            let near = refs
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 .0 - xb).abs().total_cmp(&(b.1 .0 - xb).abs()))
                .map(|(i, _)| i)
                .unwrap_or(0);
            if (refs[near].0 - xb).abs() <= 1e-15 {
                return Err(Error::SolverStall("residual lost alternation".into()));
            }
            refs[near] = (xb, w.eval(xb), f.eval(xb));
            continue;
        }
        if level <= last_level * (1.0 + EXCHANGE_STALL) {
            flat += 1;
            if top - level <= 1e-9 * top {
                return Ok((c, it, stats()));
            }
            if flat >= 3 {
                return Err(Error::SolverStall("levelled error stopped increasing".into()));
            }
        } else {
            flat = 0;
        }
        last_level = last_level.max(level);
        refs = cand
            .iter()
            .map(|&(xx, _)| (xx, w.eval(xx), f.eval(xx)))
            .collect();
    }
    Err(Error::SolverStall(format!("exchange exceeded {EXCHANGE_MAX_ITER} iterations")))
}

/// Minimax on the grid as the dual linear program
/// `max Σ w_j f_j (y⁺_j - y⁻_j)`, `Σ w_j T(x_j)(y⁺_j - y⁻_j) = 0`,
/// `Σ (y⁺_j + y⁻_j) = 1`.
fn minimax_lp(grid: &Discretization, n: usize) -> Result<(Vec<f64>, usize, ResidualStats)> {
    let d = n + 1;
    let tm = basis_matrix(&grid.x, n);
    let mut prog = LinearProgram::new(d + 1);
    prog.rhs[d] = 1.0;
    let mut col = vec![0.0; d + 1];
    for (j, row) in tm.chunks(d).enumerate() {
        let wj = grid.w[j];
        if wj <= 0.0 {
            continue;
        }
        for s in [1.0, -1.0] {
            for k in 0..d {
                col[k] = s * wj * row[k];
            }
            col[d] = 1.0;
            prog.push_column(&col, s * wj * grid.f[j], 0.0, 1.0);
        }
    }
    let sol = lp::solve(&prog, LP_MAX_ITER)?;
    let c: Vec<f64> = sol.duals[..d].to_vec();
    let p = eval_rows(&tm, n, &c);
    let r: Vec<f64> = (0..grid.x.len()).map(|j| grid.w[j] * (grid.f[j] - p[j])).collect();
    let top = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok((
        c,
        sol.iterations,
        ResidualStats {
            grid_size: grid.x.len(),
            discrete_objective: top,
            alternations: alternation_count(&r),
            duality_gap: Some(gap(top, sol.objective)),
            zero_fallback: false,
        },
    ))
}

fn gap(primal: f64, dual: f64) -> f64 {
    if primal == 0.0 {
        0.0
    } else {
        (primal - dual) / primal
    }
}

/// Weighted L1 on the quadrature grid as the dual linear program
/// `max Σ u_j f_j y_j`, `Σ u_j T(x_j) y_j = 0`, `-1 ≤ y_j ≤ 1`.
fn l1_lp(grid: &Discretization, n: usize) -> Result<(Vec<f64>, usize, ResidualStats)> {
    let d = n + 1;
    let tm = basis_matrix(&grid.x, n);
    let u: Vec<f64> = grid.omega.iter().zip(&grid.w).map(|(o, w)| o * w).collect();
    let mut prog = LinearProgram::new(d);
    let mut col = vec![0.0; d];
    for (j, row) in tm.chunks(d).enumerate() {
        for k in 0..d {
            col[k] = u[j] * row[k];
        }
        prog.push_column(&col, u[j] * grid.f[j], -1.0, 1.0);
    }
    // start from the residual signs of the least-squares fit
    let s2: Vec<f64> = grid.omega.iter().zip(&grid.w).map(|(o, w)| o * w * w).collect();
    let ls = weighted_lsq(&tm, n, &s2, &grid.f)?;
    let start: Vec<bool> = eval_rows(&tm, n, &ls)
        .iter()
        .zip(&grid.f)
        .map(|(p, f)| f > p)
        .collect();
    let sol = lp::solve_from(&prog, Some(&start), LP_MAX_ITER)?;
    let c: Vec<f64> = sol.duals.clone();
    let p = eval_rows(&tm, n, &c);
    let r: Vec<f64> = (0..grid.x.len()).map(|j| grid.f[j] - p[j]).collect();
    let primal = lq_objective(&r, &u, 1.0);
    let wr: Vec<f64> = r.iter().zip(&grid.w).map(|(r, w)| r * w).collect();
    Ok((
        c,
        sol.iterations,
        ResidualStats {
            grid_size: grid.x.len(),
            discrete_objective: primal,
            alternations: alternation_count(&wr),
            duality_gap: Some(gap(primal, sol.objective)),
            zero_fallback: false,
        },
    ))
}

/// Minimax on `grid` through the linear program only (cross-check of the
/// exchange iteration).
pub fn best_approx_lp_minimax(
    f: &FunctionDescriptor,
    n: usize,
    w: JacobiWeight,
    m: usize,
    quad: &QuadratureConfig,
) -> Result<ApproxResult> {
    let prep = prepare(f, n, w, NormOrder::INF, m, quad)?;
    let grid = sample_grid(f, w, m, quad)?;
    let (c, iters, stats) = minimax_lp(&grid, n)?;
    prep.finish(c, Solver::LinearProgram, iters, stats)
}

/// Number of strict sign alternations of `f` over `grid`; values below
/// `1e-12` in magnitude are skipped.
pub fn sign_changes<F: Fn(f64) -> f64>(f: F, grid: &[f64]) -> usize {
    let mut last = 0.0;
    let mut count = 0;
    for &x in grid {
        let v = f(x);
        if v.abs() < SIGN_ZERO || !v.is_finite() {
            continue;
        }
        let s = v.signum();
        if last != 0.0 && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemezRatio {
    pub ratio: f64,
    /// `∫_E (1-x²)^{-1/2} dx`.
    pub capacity: f64,
}

/// `‖p w‖_{L_q[-1,1]} / ‖p w‖_{L_q([-1,1] \ E)}`; `None` stands for `E = ∅`.
pub fn remez_ratio(
    p: &ChebyshevPoly,
    e: Option<(f64, f64)>,
    w: JacobiWeight,
    q: NormOrder,
    quad: &QuadratureConfig,
) -> Result<RemezRatio> {
    let Some((a, b)) = e else {
        return Ok(RemezRatio { ratio: 1.0, capacity: 0.0 });
    };
    if !(a <= b) || a < -1.0 || b > 1.0 {
        return Err(Error::Spec(format!("E = [{a}, {b}] is not a subinterval of [-1, 1]")));
    }
    let capacity = b.asin() - a.asin();
    let f = FunctionDescriptor::from_poly("p", p);
    let full = weighted_norm(&f, w, q, (-1.0, 1.0), quad)?;
    let mut parts = Vec::new();
    if a > -1.0 {
        parts.push(weighted_norm(&f, w, q, (-1.0, a), quad)?);
    }
    if b < 1.0 {
        parts.push(weighted_norm(&f, w, q, (b, 1.0), quad)?);
    }
    let rest = if q.is_infinite() {
        parts.iter().fold(0.0f64, |m, v| m.max(*v))
    } else {
        parts.iter().map(|v| v.powf(q.value())).sum::<f64>().powf(q.recip())
    };
    if !(rest > 1e-300) || rest < 1e-14 * full {
        return Err(Error::Division(format!(
            "norm off E = [{a}, {b}] is {rest:e} against {full:e} on [-1, 1]"
        )));
    }
    Ok(RemezRatio {
        ratio: full / rest,
        capacity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extremals::{heaviside, truncated_power_origin};

    fn mono(a: &[f64]) -> FunctionDescriptor {
        FunctionDescriptor::from_poly("p", &ChebyshevPoly::from_monomial(a))
    }

    fn plain(name: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> FunctionDescriptor {
        FunctionDescriptor::new(name, f)
    }

    #[test]
    fn polynomials_are_reproduced() {
        let f = mono(&[0.5, -1.0, 0.0, 2.0]);
        for q in [NormOrder::ONE, NormOrder::TWO, NormOrder::INF] {
            let r = best_approx(&f, 3, JacobiWeight::UNIT, q, 512).unwrap();
            assert!(r.error < 1e-10, "{q}: {}", r.error);
            for x in [-0.9, 0.1, 0.7] {
                assert!((r.poly.eval(x) - f.eval(x)).abs() < 1e-12);
            }
        }
        // same function without the polynomial tag goes through the solvers
        let g = plain("cubic", |x| 0.5 - x + 2.0 * x * x * x);
        for q in [NormOrder::ONE, NormOrder::TWO, NormOrder::INF, NormOrder::new(3.0).unwrap()] {
            let r = best_approx(&g, 3, JacobiWeight::UNIT, q, 512).unwrap();
            assert!(r.error < 1e-10, "{q}: {}", r.error);
        }
    }

    #[test]
    fn odd_function_by_constant() {
        let f = plain("x", |x| x);
        let r = best_approx(&f, 0, JacobiWeight::UNIT, NormOrder::INF, 512).unwrap();
        assert!((r.error - 1.0).abs() < 1e-10, "{}", r.error);
        assert!(r.poly.eval(0.3).abs() < 1e-10);
    }

    #[test]
    fn square_by_line() {
        let f = plain("x^2", |x| x * x);
        let r = best_approx(&f, 1, JacobiWeight::UNIT, NormOrder::INF, 512).unwrap();
        // brute force over the constant term of the even best line a + 0x
        let brute = (0..=2000)
            .map(|i| {
                let a = i as f64 / 2000.0;
                (0..=400)
                    .map(|j| {
                        let x = -1.0 + j as f64 / 200.0;
                        (x * x - a).abs()
                    })
                    .fold(0.0f64, f64::max)
            })
            .fold(f64::INFINITY, f64::min);
        assert!((r.error - 0.5).abs() < 1e-10, "{}", r.error);
        assert!((brute - 0.5).abs() < 1e-3);
        assert!(r.residual_stats.alternations >= 3);
    }

    #[test]
    fn exchange_and_lp_agree() {
        let f = truncated_power_origin(2);
        let quad = QuadratureConfig::default();
        let a = best_approx(&f, 6, JacobiWeight::UNIT, NormOrder::INF, 512).unwrap();
        let b = best_approx_lp_minimax(&f, 6, JacobiWeight::UNIT, 512, &quad).unwrap();
        assert_eq!(a.solver, Solver::Exchange);
        // the polished exchange can only do better than the grid optimum
        assert!(a.error <= b.error * (1.0 + 1e-9) && a.error > b.error * (1.0 - 1e-3), "{} {}", a.error, b.error);
        assert!(b.residual_stats.duality_gap.unwrap().abs() < 1e-9);
        assert!(a.residual_stats.alternations >= 8);
        // weighted problem
        let w = JacobiWeight::new(0.5, 1.0);
        let a = best_approx(&f, 5, w, NormOrder::INF, 512).unwrap();
        let b = best_approx_lp_minimax(&f, 5, w, 512, &quad).unwrap();
        assert!(a.error <= b.error * (1.0 + 1e-9) && a.error > b.error * (1.0 - 1e-3), "{} {}", a.error, b.error);
    }

    #[test]
    fn l1_certificate() {
        let f = truncated_power_origin(2);
        let r = best_approx(&f, 8, JacobiWeight::UNIT, NormOrder::ONE, 512).unwrap();
        assert_eq!(r.solver, Solver::LinearProgram);
        assert!(r.residual_stats.duality_gap.unwrap().abs() < 1e-9, "{:?}", r.residual_stats);
        assert!((r.error / r.residual_stats.discrete_objective - 1.0).abs() < 1e-3);
    }

    #[test]
    fn irls_from_zero_matches_least_squares() {
        let f = heaviside();
        let quad = QuadratureConfig::default();
        let ls = best_approx(&f, 7, JacobiWeight::UNIT, NormOrder::TWO, 512).unwrap();
        let z = ChebyshevPoly::zero(7);
        let ir = irls(&f, 7, JacobiWeight::UNIT, NormOrder::TWO, 512, &quad, Some(&z)).unwrap();
        assert!((ir.error / ls.error - 1.0).abs() < 1e-9);
    }

    #[test]
    fn irls_general_q_between_neighbours() {
        let f = truncated_power_origin(2);
        let e = |q: f64| {
            best_approx(&f, 6, JacobiWeight::UNIT, NormOrder::new(q).unwrap(), 512)
                .unwrap()
                .error
        };
        let (e2, e3, e4) = (e(2.0), e(3.0), e(4.0));
        // ‖·‖_q on [-1,1] satisfies ‖g‖_q ≤ 2^{1/q-1/r}‖g‖_r, and E_n is
        // monotone under these comparisons
        assert!(e2 <= 2f64.powf(0.5 - 1.0 / 3.0) * e3 * (1.0 + 1e-9));
        assert!(e3 <= 2f64.powf(1.0 / 3.0 - 0.25) * e4 * (1.0 + 1e-9));
        let e15 = e(1.5);
        assert!(e15 > 0.0);
    }

    #[test]
    fn error_bounded_by_zero_candidate() {
        let f = heaviside();
        let norm = weighted_norm(&f, JacobiWeight::UNIT, NormOrder::INF, (-1.0, 1.0), &QuadratureConfig::default()).unwrap();
        let r = best_approx(&f, 4, JacobiWeight::UNIT, NormOrder::INF, 512).unwrap();
        assert!(r.error <= norm + 1e-10);
        // jump of size one
        assert!((r.error - 0.5).abs() < 1e-3, "{}", r.error);
    }

    #[test]
    fn grid_precondition() {
        let f = heaviside();
        assert!(matches!(
            best_approx(&f, 10, JacobiWeight::UNIT, NormOrder::TWO, 80),
            Err(Error::ParamRange { .. })
        ));
    }

    #[test]
    fn sign_change_examples() {
        let grid: Vec<f64> = (0..=100).map(|i| -1.0 + i as f64 / 50.0).collect();
        assert_eq!(sign_changes(|_| 1.0, &grid), 0);
        assert_eq!(sign_changes(|x| x, &grid), 1);
        assert_eq!(sign_changes(|x| (3.0 * x).sin(), &grid), 1);
    }

    #[test]
    fn remez_examples() {
        let one = ChebyshevPoly::new(vec![1.0], 0);
        let quad = QuadratureConfig::default();
        let r = remez_ratio(&one, None, JacobiWeight::UNIT, NormOrder::ONE, &quad).unwrap();
        assert_eq!(r.ratio, 1.0);
        let r = remez_ratio(&one, Some((0.0, 0.1)), JacobiWeight::UNIT, NormOrder::ONE, &quad).unwrap();
        assert!((r.ratio - 2.0 / 1.9).abs() < 1e-12, "{}", r.ratio);
        assert!((r.capacity - 0.1f64.asin()).abs() < 1e-15);
        assert!(matches!(
            remez_ratio(&one, Some((-1.0, 1.0)), JacobiWeight::UNIT, NormOrder::ONE, &quad),
            Err(Error::Division(_))
        ));
    }
}
