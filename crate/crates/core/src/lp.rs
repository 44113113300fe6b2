//! Dense bounded-variable revised simplex for
//! `max cᵀx  s.t.  A x = b,  lo ≤ x ≤ hi` with finite `lo`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Column-major problem data.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub rows: usize,
    /// `cols * rows` entries, column `j` at `a[j*rows..(j+1)*rows]`.
    pub a: Vec<f64>,
    pub cost: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    /// Simplex multipliers `π = c_Bᵀ B⁻¹` of the equality rows.
    pub duals: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LinearProgram {
    pub fn new(rows: usize) -> Self {
        LinearProgram {
            rows,
            a: Vec::new(),
            cost: Vec::new(),
            lo: Vec::new(),
            hi: Vec::new(),
            rhs: vec![0.0; rows],
        }
    }

    pub fn cols(&self) -> usize {
        self.cost.len()
    }

    pub fn push_column(&mut self, col: &[f64], cost: f64, lo: f64, hi: f64) {
        assert_eq!(col.len(), self.rows);
        self.a.extend_from_slice(col);
        self.cost.push(cost);
        self.lo.push(lo);
        self.hi.push(hi);
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.a[j * self.rows..(j + 1) * self.rows]
    }
}

const REFACTOR_EVERY: usize = 64;
const DEGENERATE_RUN: usize = 30;

struct State<'a> {
    lp: &'a LinearProgram,
    r: usize,
    /// Artificial columns `sign_i e_i` live after the structural ones.
    art_sign: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    pos: Vec<Option<usize>>,
    binv: Vec<f64>,
    iterations: usize,
    bland: bool,
}

impl State<'_> {
    fn total(&self) -> usize {
        self.lp.cols() + self.r
    }

    fn column(&self, j: usize, out: &mut [f64]) {
        let n = self.lp.cols();
        if j < n {
            out.copy_from_slice(self.lp.col(j));
        } else {
            out.fill(0.0);
            out[j - n] = self.art_sign[j - n];
        }
    }

    /// `π_k A_jk` summed, plus the sum of absolute terms.
    fn dot_col(&self, j: usize, pi: &[f64]) -> (f64, f64) {
        let n = self.lp.cols();
        if j < n {
            let c = self.lp.col(j);
            let mut s = 0.0;
            let mut a = 0.0;
            for k in 0..self.r {
                let t = pi[k] * c[k];
                s += t;
                a += t.abs();
            }
            (s, a)
        } else {
            let t = pi[j - n] * self.art_sign[j - n];
            (t, t.abs())
        }
    }

    fn refactor(&mut self) -> Result<()> {
        let r = self.r;
        let mut b = DMatrix::<f64>::zeros(r, r);
        let mut col = vec![0.0; r];
        for (i, &j) in self.basis.iter().enumerate() {
            self.column(j, &mut col);
            for k in 0..r {
                b[(k, i)] = col[k];
            }
        }
        let inv = b
            .try_inverse()
            .ok_or_else(|| Error::SolverStall("singular simplex basis".into()))?;
        for i in 0..r {
            for k in 0..r {
                self.binv[i * r + k] = inv[(i, k)];
            }
        }
        // x_B = B⁻¹ (b - A_N x_N)
        let mut rho = self.lp.rhs.clone();
        for j in 0..self.total() {
            if self.pos[j].is_none() && self.x[j] != 0.0 {
                self.column(j, &mut col);
                for k in 0..r {
                    rho[k] -= col[k] * self.x[j];
                }
            }
        }
        for i in 0..r {
            let v: f64 = (0..r).map(|k| self.binv[i * r + k] * rho[k]).sum();
            self.x[self.basis[i]] = v;
        }
        Ok(())
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let r = self.r;
        let mut pi = vec![0.0; r];
        for i in 0..r {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for k in 0..r {
                    pi[k] += cb * self.binv[i * r + k];
                }
            }
        }
        pi
    }

    fn run(&mut self, cost: &[f64], max_iter: usize) -> Result<()> {
        let r = self.r;
        let mut alpha = vec![0.0; r];
        let mut col = vec![0.0; r];
        let mut degenerate = 0usize;
        let mut since_refactor = 0usize;
        loop {
            if self.iterations >= max_iter {
                return Err(Error::SolverStall(format!(
                    "simplex exceeded {max_iter} iterations"
                )));
            }
            if since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
                since_refactor = 0;
            }
            let pi = self.duals(cost);
            // pricing
            let mut enter: Option<(usize, f64, f64)> = None;
            for j in 0..self.total() {
                if self.pos[j].is_some() || self.hi[j] <= self.lo[j] {
                    continue;
                }
                let (s, abs) = self.dot_col(j, &pi);
                let d = cost[j] - s;
                let tol = 1e-11 * (cost[j].abs() + abs).max(1e-300);
                let at_lower = self.x[j] <= self.lo[j];
                let dir = if at_lower && d > tol {
                    1.0
                } else if !at_lower && d < -tol {
                    -1.0
                } else {
                    continue;
                };
                if self.bland {
                    enter = Some((j, d, dir));
                    break;
                }
                if enter.is_none_or(|(_, db, _)| d.abs() > db.abs()) {
                    enter = Some((j, d, dir));
                }
            }
            let Some((j, _, s)) = enter else {
                return Ok(());
            };
            self.iterations += 1;
            since_refactor += 1;
            self.column(j, &mut col);
            for i in 0..r {
                alpha[i] = (0..r).map(|k| self.binv[i * r + k] * col[k]).sum();
            }
            let amax = alpha.iter().fold(0.0f64, |m, a| m.max(a.abs()));
            let piv_tol = 1e-9 * amax.max(1e-300);
            // ratio test; x_B(θ) = x_B - s θ α
            let mut theta = self.hi[j] - self.lo[j];
            let mut leave: Option<(usize, bool)> = None;
            let mut best_piv = 0.0;
            for i in 0..r {
                let a = s * alpha[i];
                let b = self.basis[i];
                let (lim, to_upper) = if a > piv_tol {
                    (((self.x[b] - self.lo[b]) / a).max(0.0), false)
                } else if a < -piv_tol && self.hi[b].is_finite() {
                    (((self.hi[b] - self.x[b]) / -a).max(0.0), true)
                } else {
                    continue;
                };
                let near = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
                let better = match leave {
                    None => lim < theta,
                    Some((li, _)) if self.bland => lim < theta || (lim == theta && b < self.basis[li]),
                    Some(_) => (lim < theta && !near(lim, theta)) || (near(lim, theta) && a.abs() > best_piv),
                };
                if better {
                    theta = lim;
                    leave = Some((i, to_upper));
                    best_piv = a.abs();
                }
            }
            if !theta.is_finite() {
                return Err(Error::SolverStall("linear program is unbounded".into()));
            }
            degenerate = if theta <= 1e-14 { degenerate + 1 } else { 0 };
            if degenerate > DEGENERATE_RUN {
                self.bland = true;
            }
            self.x[j] += s * theta;
            for i in 0..r {
                let b = self.basis[i];
                self.x[b] -= s * theta * alpha[i];
            }
            match leave {
                None => {
                    // bound flip
                    self.x[j] = if s > 0.0 { self.hi[j] } else { self.lo[j] };
                }
                Some((i0, to_upper)) => {
                    let out = self.basis[i0];
                    self.x[out] = if to_upper { self.hi[out] } else { self.lo[out] };
                    let p = alpha[i0];
                    for k in 0..r {
                        self.binv[i0 * r + k] /= p;
                    }
                    for i in 0..r {
                        if i != i0 && alpha[i] != 0.0 {
                            let f = alpha[i];
                            for k in 0..r {
                                self.binv[i * r + k] -= f * self.binv[i0 * r + k];
                            }
                        }
                    }
                    self.pos[out] = None;
                    self.pos[j] = Some(i0);
                    self.basis[i0] = j;
                }
            }
        }
    }
}

/// Two-phase solve. Nonbasic variables start at `hi` when their cost is
/// positive and `hi` is finite, else at `lo`.
pub fn solve(lp: &LinearProgram, max_iter: usize) -> Result<LpSolution> {
    solve_from(lp, None, max_iter)
}

/// As [`solve`], with `start[j]` choosing the upper (`true`) or lower bound
/// as the initial value of column `j`.
pub fn solve_from(lp: &LinearProgram, start: Option<&[bool]>, max_iter: usize) -> Result<LpSolution> {
    let r = lp.rows;
    let n = lp.cols();
    if lp.a.len() != n * r || lp.lo.len() != n || lp.hi.len() != n || lp.rhs.len() != r {
        return Err(Error::Spec("inconsistent linear program dimensions".into()));
    }
    if lp.lo.iter().any(|l| !l.is_finite()) {
        return Err(Error::Spec("lower bounds must be finite".into()));
    }
    if start.is_some_and(|s| s.len() != n) {
        return Err(Error::Spec("start vector has the wrong length".into()));
    }
    let mut x: Vec<f64> = (0..n)
        .map(|j| {
            let up = match start {
                Some(s) => s[j],
                None => lp.cost[j] > 0.0,
            };
            if up && lp.hi[j].is_finite() {
                lp.hi[j]
            } else {
                lp.lo[j]
            }
        })
        .collect();
    let mut rho = lp.rhs.clone();
    for j in 0..n {
        if x[j] != 0.0 {
            for (k, a) in lp.col(j).iter().enumerate() {
                rho[k] -= a * x[j];
            }
        }
    }
    let art_sign: Vec<f64> = rho.iter().map(|v| if *v < 0.0 { -1.0 } else { 1.0 }).collect();
    x.extend(rho.iter().map(|v| v.abs()));
    let mut lo = lp.lo.clone();
    lo.extend(std::iter::repeat_n(0.0, r));
    let mut hi = lp.hi.clone();
    hi.extend(std::iter::repeat_n(f64::INFINITY, r));
    let mut pos = vec![None; n + r];
    let basis: Vec<usize> = (n..n + r).collect();
    for (i, &b) in basis.iter().enumerate() {
        pos[b] = Some(i);
    }
    let mut binv = vec![0.0; r * r];
    for i in 0..r {
        binv[i * r + i] = art_sign[i];
    }
    let mut st = State {
        lp,
        r,
        art_sign,
        lo,
        hi,
        x,
        basis,
        pos,
        binv,
        iterations: 0,
        bland: false,
    };
    let scale = lp.rhs.iter().chain(rho.iter()).fold(1.0f64, |m, v| m.max(v.abs()));
    let mut phase1 = vec![0.0; n + r];
    for c in phase1.iter_mut().skip(n) {
        *c = -1.0;
    }
    st.run(&phase1, max_iter)?;
    st.refactor()?;
    let infeas: f64 = (n..n + r).map(|j| st.x[j].abs()).sum();
    if infeas > 1e-9 * scale {
        return Err(Error::SolverStall(format!(
            "linear program infeasible (residual {infeas:e})"
        )));
    }
    for j in n..n + r {
        st.hi[j] = 0.0;
        if st.pos[j].is_none() {
            st.x[j] = 0.0;
        }
    }
    st.bland = false;
    let mut cost = lp.cost.clone();
    cost.extend(std::iter::repeat_n(0.0, r));
    st.run(&cost, max_iter)?;
    st.refactor()?;
    let duals = st.duals(&cost);
    let xs: Vec<f64> = st.x[..n]
        .iter()
        .zip(lp.lo.iter().zip(&lp.hi))
        .map(|(v, (l, h))| v.clamp(*l, *h))
        .collect();
    let objective = xs.iter().zip(&lp.cost).map(|(a, b)| a * b).sum();
    Ok(LpSolution {
        x: xs,
        duals,
        objective,
        iterations: st.iterations,
    })
}
