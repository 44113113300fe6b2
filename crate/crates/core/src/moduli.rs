//! Weighted Ditzian–Totik modulus: main part `Ω`, boundary parts `→Ω` at
//! -1 and `←Ω` at +1, and their sum `ω`.

use serde::{Deserialize, Serialize};

use crate::differences::difference_weights;
use crate::error::{Error, Result};
use crate::function::FunctionDescriptor;
use crate::kernels::{phi, psi};
use crate::par;
use crate::quadrature::{lq_norm, Domain, QuadratureConfig};
use crate::weight::{JacobiWeight, NormOrder};

/// Values below this are reported as exact zeros.
pub const VANISHING: f64 = 1e-13;
const GOLDEN_ITERS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusRequest {
    pub k: usize,
    pub delta: f64,
    pub weight: JacobiWeight,
    pub q: NormOrder,
    pub h_samples: usize,
    pub quad: QuadratureConfig,
    /// Extra steps to evaluate besides the uniform grid (ignored when out
    /// of range for a component).
    #[serde(default)]
    pub h_hints: Vec<f64>,
}

impl ModulusRequest {
    pub fn new(k: usize, delta: f64, weight: JacobiWeight, q: NormOrder) -> Self {
        ModulusRequest {
            k,
            delta,
            weight,
            q,
            h_samples: 64,
            quad: QuadratureConfig::default(),
            h_hints: Vec::new(),
        }
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        ModulusRequest {
            delta,
            ..self.clone()
        }
    }

    /// Doubled quadrature panels and h-samples.
    pub fn refined(&self) -> Self {
        ModulusRequest {
            h_samples: 2 * self.h_samples,
            quad: self.quad.refined(),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::param("k", 0.0, "order must be >= 1"));
        }
        let dmax = 1.0 / (2.0 * self.k as f64);
        if !(self.delta > 0.0 && self.delta <= dmax) {
            return Err(Error::param("delta", self.delta, format!("must lie in (0, {dmax}]")));
        }
        if self.h_samples < 8 {
            return Err(Error::param("h_samples", self.h_samples as f64, "must be >= 8"));
        }
        self.quad.validate()
    }

    /// Width `2k²δ²` of the boundary strips.
    pub fn strip_width(&self) -> f64 {
        let k = self.k as f64;
        2.0 * k * k * self.delta * self.delta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusArgmax {
    pub main: f64,
    pub forward: f64,
    pub backward: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusResult {
    pub main: f64,
    pub forward: f64,
    pub backward: f64,
    pub total: f64,
    pub argmax_h: ModulusArgmax,
}

impl ModulusResult {
    pub fn from_parts(main: (f64, f64), forward: (f64, f64), backward: (f64, f64)) -> Self {
        ModulusResult {
            main: main.0,
            forward: forward.0,
            backward: backward.0,
            total: main.0 + forward.0 + backward.0,
            argmax_h: ModulusArgmax {
                main: main.1,
                forward: forward.1,
                backward: backward.1,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundarySide {
    ForwardAtMinusOne,
    BackwardAtPlusOne,
}

/// `‖w Δ^k_{hφ} f‖_{L_q[-1+2k²h², 1-2k²h²]}` for one step `h`.
pub fn main_part_norm(
    f: &FunctionDescriptor,
    k: usize,
    h: f64,
    w: JacobiWeight,
    q: NormOrder,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let kf = k as f64;
    let eta = 2.0 * kf * kf * h * h;
    let (a, b) = (-1.0 + eta, 1.0 - eta);
    if a >= b {
        return Ok(0.0);
    }
    let c = difference_weights(k);
    let lambdas: Vec<f64> = (0..=k).map(|i| (i as f64 - 0.5 * kf) * h).collect();
    let anchors: Vec<f64> = f
        .kinks()
        .iter()
        .flat_map(|&y| lambdas.iter().map(move |&l| psi(l, y)))
        .collect();
    let exps = (
        w.alpha + f.exponent_at_minus_one().min(0.0),
        w.beta + f.exponent_at_plus_one().min(0.0),
    );
    let dom = Domain::new(a, b, exps).with_anchors(anchors).anchored();
    let half = 0.5 * kf * h;
    lq_norm(
        |x| {
            let ph = phi(x);
            if x - half * ph < -1.0 || x + half * ph > 1.0 {
                return 0.0;
            }
            let s: f64 = c
                .iter()
                .zip(&lambdas)
                .map(|(ci, l)| ci * f.eval(x + l * ph))
                .sum();
            w.eval(x) * s
        },
        &dom,
        q,
        quad,
    )
}

/// Norm of the one-sided difference with step `h` over the boundary strip
/// of width `2k²δ²`.
#[allow(clippy::too_many_arguments)]
pub fn boundary_norm(
    f: &FunctionDescriptor,
    k: usize,
    h: f64,
    delta: f64,
    w: JacobiWeight,
    q: NormOrder,
    quad: &QuadratureConfig,
    side: BoundarySide,
) -> Result<f64> {
    let kf = k as f64;
    let width = 2.0 * kf * kf * delta * delta;
    let c = difference_weights(k);
    let kinks = f.kinks();
    match side {
        BoundarySide::BackwardAtPlusOne => {
            let anchors = kinks
                .iter()
                .flat_map(|&y| (0..=k).map(move |j| y + j as f64 * h))
                .collect();
            let dom = Domain::new(1.0 - width, 1.0, (f64::INFINITY, w.beta + f.exponent_at_plus_one().min(0.0)))
                .with_anchors(anchors);
            lq_norm(
                |x| {
                    let lo = x - kf * h;
                    if lo < -1.0 {
                        return 0.0;
                    }
                    let s: f64 = c
                        .iter()
                        .enumerate()
                        .map(|(i, ci)| ci * f.eval(if i == k { x } else { lo + i as f64 * h }))
                        .sum();
                    w.eval(x) * s
                },
                &dom,
                q,
                quad,
            )
        }
        BoundarySide::ForwardAtMinusOne => {
            let anchors = kinks
                .iter()
                .flat_map(|&y| (0..=k).map(move |j| y - j as f64 * h))
                .collect();
            let dom = Domain::new(-1.0, -1.0 + width, (w.alpha + f.exponent_at_minus_one().min(0.0), f64::INFINITY))
                .with_anchors(anchors);
            lq_norm(
                |x| {
                    if x + kf * h > 1.0 {
                        return 0.0;
                    }
                    let s: f64 = c
                        .iter()
                        .enumerate()
                        .map(|(i, ci)| ci * f.eval(if i == 0 { x } else { x + i as f64 * h }))
                        .sum();
                    w.eval(x) * s
                },
                &dom,
                q,
                quad,
            )
        }
    }
}

/// Supremum of `eval` over `(0, hmax]`: uniform grid, golden-section
/// refinement around the grid argmax, plus hints. Returns (value, argmax).
fn sup_over_h<F>(eval: F, hmax: f64, n: usize, hints: &[f64]) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64> + Sync + Send,
{
    let grid: Vec<f64> = (1..=n).map(|j| hmax * j as f64 / n as f64).collect();
    let vals = par::try_map(&grid, |&h| eval(h))?;
    let mut j_best = n - 1;
    let mut best = (vals[n - 1], hmax);
    for (j, (&h, &v)) in grid.iter().zip(&vals).enumerate() {
        if v > best.0 {
            best = (v, h);
            j_best = j;
        }
    }
    if best.0 > 0.0 {
        let mut a = if j_best == 0 { 0.5 * grid[0] } else { grid[j_best - 1] };
        let mut b = grid[(j_best + 1).min(n - 1)];
        let r = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let mut fc = eval(c)?;
        let mut fd = eval(d)?;
        for _ in 0..GOLDEN_ITERS {
            if fc > best.0 {
                best = (fc, c);
            }
            if fd > best.0 {
                best = (fd, d);
            }
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - r * (b - a);
                fc = eval(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + r * (b - a);
                fd = eval(d)?;
            }
        }
        for (v, h) in [(fc, c), (fd, d)] {
            if v > best.0 {
                best = (v, h);
            }
        }
    }
    for &h in hints {
        if h > 0.0 && h <= hmax {
            let v = eval(h)?;
            if v > best.0 {
                best = (v, h);
            }
        }
    }
    if best.0 < VANISHING {
        best.0 = 0.0;
    }
    Ok(best)
}

/// `Ω = sup_{0<h≤δ} ‖w Δ^k_{hφ} f‖_{L_q[-1+2k²h², 1-2k²h²]}`.
pub fn main_part_modulus(f: &FunctionDescriptor, req: &ModulusRequest) -> Result<(f64, f64)> {
    req.validate()?;
    sup_over_h(
        |h| main_part_norm(f, req.k, h, req.weight, req.q, &req.quad),
        req.delta,
        req.h_samples,
        &req.h_hints,
    )
}

/// `→Ω` (at -1) or `←Ω` (at +1): supremum over `0 < h ≤ 2k²δ²`.
pub fn boundary_modulus(f: &FunctionDescriptor, req: &ModulusRequest, side: BoundarySide) -> Result<(f64, f64)> {
    req.validate()?;
    sup_over_h(
        |h| boundary_norm(f, req.k, h, req.delta, req.weight, req.q, &req.quad, side),
        req.strip_width(),
        req.h_samples,
        &req.h_hints,
    )
}

/// `ω = Ω + →Ω + ←Ω`.
pub fn dt_modulus(f: &FunctionDescriptor, req: &ModulusRequest) -> Result<ModulusResult> {
    let main = main_part_modulus(f, req)?;
    let fwd = boundary_modulus(f, req, BoundarySide::ForwardAtMinusOne)?;
    let bwd = boundary_modulus(f, req, BoundarySide::BackwardAtPlusOne)?;
    Ok(ModulusResult::from_parts(main, fwd, bwd))
}

/// `dt_modulus` over several `δ`. Cells run in parallel; afterwards each
/// cell is re-evaluated at the maximizing steps of all smaller `δ`, which
/// keeps the computed sup nondecreasing in `δ`.
pub fn dt_modulus_sweep(f: &FunctionDescriptor, base: &ModulusRequest, deltas: &[f64]) -> Result<Vec<ModulusResult>> {
    let first = par::try_map(deltas, |&d| dt_modulus(f, &base.with_delta(d)))?;
    let idx: Vec<usize> = (0..deltas.len()).collect();
    par::try_map(&idx, |&i| {
        let req = base.with_delta(deltas[i]);
        let mut r = first[i];
        let smaller: Vec<&ModulusResult> = (0..deltas.len())
            .filter(|&j| deltas[j] < deltas[i])
            .map(|j| &first[j])
            .collect();
        let upd = |val: &mut f64, arg: &mut f64, h: f64, v: f64| {
            if v > *val && v >= VANISHING {
                *val = v;
                *arg = h;
            }
        };
        for s in &smaller {
            let h = s.argmax_h.main;
            if h > 0.0 && h <= req.delta && s.main > 0.0 {
                let v = main_part_norm(f, req.k, h, req.weight, req.q, &req.quad)?;
                upd(&mut r.main, &mut r.argmax_h.main, h, v);
            }
            for (side, hv, sv) in [
                (BoundarySide::ForwardAtMinusOne, s.argmax_h.forward, s.forward),
                (BoundarySide::BackwardAtPlusOne, s.argmax_h.backward, s.backward),
            ] {
                if hv > 0.0 && hv <= req.strip_width() && sv > 0.0 {
                    let v = boundary_norm(f, req.k, hv, req.delta, req.weight, req.q, &req.quad, side)?;
                    match side {
                        BoundarySide::ForwardAtMinusOne => upd(&mut r.forward, &mut r.argmax_h.forward, hv, v),
                        BoundarySide::BackwardAtPlusOne => upd(&mut r.backward, &mut r.argmax_h.backward, hv, v),
                    }
                }
            }
        }
        r.total = r.main + r.forward + r.backward;
        Ok(r)
    })
}
