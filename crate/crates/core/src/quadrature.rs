//! Composite Gauss–Legendre quadrature on meshes graded toward `±1`, and
//! the weighted `L_q` norms built on it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::FunctionDescriptor;
use crate::weight::{JacobiWeight, NormOrder};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub panels_per_side: usize,
    pub nodes_per_panel: usize,
    pub grading_exponent: f64,
    pub clip_epsilon: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            panels_per_side: 48,
            nodes_per_panel: 8,
            grading_exponent: 2.0,
            clip_epsilon: 1e-12,
        }
    }
}

/// Extra samples added to every sup-norm evaluation.
pub const SUP_EXTRA_SAMPLES: usize = 512;
const SUP_REFINE_CANDIDATES: usize = 8;
const SUP_REFINE_ITERS: usize = 40;

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.panels_per_side == 0 || self.nodes_per_panel == 0 {
            return Err(Error::Spec("quadrature counts must be >= 1".into()));
        }
        if !(self.grading_exponent >= 1.0) {
            return Err(Error::param(
                "grading_exponent",
                self.grading_exponent,
                "must be >= 1",
            ));
        }
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon <= 1e-6) {
            return Err(Error::param("clip_epsilon", self.clip_epsilon, "must lie in (0, 1e-6]"));
        }
        Ok(())
    }

    /// Same rule with twice as many panels.
    pub fn refined(&self) -> Self {
        QuadratureConfig {
            panels_per_side: 2 * self.panels_per_side,
            ..*self
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn graded_side(len: f64, clip: f64, n: usize, gamma: f64) -> Vec<f64> {
    // distances d_j from the endpoint, d_0 = clip, d_n = len
    let ratio = (clip / len).ln();
    (0..=n)
        .map(|j| {
            let s = (n - j) as f64 / n as f64;
            len * (ratio * s.powf(gamma)).exp()
        })
        .collect()
}

/// Panel boundaries on `interval`, graded geometrically toward any endpoint
/// equal to `±1` whose exponent is finite; the outermost boundaries sit at
/// distance `clip_epsilon` from `±1`.
pub fn graded_mesh(interval: (f64, f64), exponents: (f64, f64), quad: &QuadratureConfig) -> Vec<f64> {
    let clip = quad.clip_epsilon;
    let n = quad.panels_per_side.max(1);
    let gamma = quad.grading_exponent;
    let lo = interval.0.max(-1.0 + clip);
    let hi = interval.1.min(1.0 - clip);
    if hi <= lo {
        return vec![lo, lo];
    }
    let grade_lo = interval.0 <= -1.0 + clip && exponents.0.is_finite();
    let grade_hi = interval.1 >= 1.0 - clip && exponents.1.is_finite();
    let mut pts = match (grade_lo, grade_hi) {
        (false, false) => (0..=n)
            .map(|j| lo + (hi - lo) * j as f64 / n as f64)
            .collect::<Vec<_>>(),
        (true, false) => {
            let len = hi + 1.0;
            let mut v: Vec<f64> = graded_side(len, clip, n, gamma).iter().map(|d| -1.0 + d).collect();
            *v.last_mut().unwrap() = hi;
            v
        }
        (false, true) => {
            let len = 1.0 - lo;
            let mut v: Vec<f64> = graded_side(len, clip, n, gamma)
                .iter()
                .rev()
                .map(|d| 1.0 - d)
                .collect();
            v[0] = lo;
            v
        }
        (true, true) => {
            let mid = 0.5 * (interval.0.max(-1.0) + interval.1.min(1.0));
            let mut v: Vec<f64> = graded_side(mid + 1.0, clip, n, gamma)
                .iter()
                .map(|d| -1.0 + d)
                .collect();
            v.pop();
            v.push(mid);
            v.extend(
                graded_side(1.0 - mid, clip, n, gamma)
                    .iter()
                    .rev()
                    .skip(1)
                    .map(|d| 1.0 - d),
            );
            v
        }
    };
    pts.dedup();
    pts
}

/// Integration domain for [`lq_norm`].
#[derive(Debug, Clone)]
pub struct Domain {
    pub a: f64,
    pub b: f64,
    /// Exponents of the integrand itself at `-1` and `+1`.
    pub exponents: (f64, f64),
    /// Points where the integrand may jump or kink.
    pub anchors: Vec<f64>,
    /// Use the graded mesh of `[-1, 1]` restricted to `[a, b]` instead of
    /// grading `[a, b]` on its own.
    pub anchored: bool,
}

impl Domain {
    pub fn new(a: f64, b: f64, exponents: (f64, f64)) -> Self {
        Domain {
            a,
            b,
            exponents,
            anchors: Vec::new(),
            anchored: false,
        }
    }

    pub fn with_anchors(mut self, anchors: Vec<f64>) -> Self {
        self.anchors = anchors;
        self
    }

    pub fn anchored(mut self) -> Self {
        self.anchored = true;
        self
    }

    fn touches_lo(&self, clip: f64) -> bool {
        self.a <= -1.0 + clip
    }

    fn touches_hi(&self, clip: f64) -> bool {
        self.b >= 1.0 - clip
    }

    /// Sorted panel boundaries.
    pub fn mesh(&self, quad: &QuadratureConfig) -> Vec<f64> {
        let clip = quad.clip_epsilon;
        let lo = self.a.max(-1.0 + clip);
        let hi = self.b.min(1.0 - clip);
        let mut pts = if self.anchored {
            let full = graded_mesh((-1.0, 1.0), (0.0, 0.0), quad);
            let mut v: Vec<f64> = full.into_iter().filter(|&x| x > lo && x < hi).collect();
            v.push(lo);
            v.push(hi);
            // keep at least a uniform resolution across short strips
            let n = quad.panels_per_side;
            for j in 1..n {
                v.push(lo + (hi - lo) * j as f64 / n as f64);
            }
            v
        } else {
            graded_mesh((self.a, self.b), self.exponents, quad)
        };
        pts.extend(self.anchors.iter().copied().filter(|&x| x > lo && x < hi));
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * y.abs().max(1e-300));
        pts
    }
}

/// Integrability of `|x -> (distance)^e|^q` near an endpoint.
pub fn check_integrable(endpoint: f64, exponent: f64, q: NormOrder) -> Result<()> {
    if exponent.is_infinite() && exponent > 0.0 {
        return Ok(());
    }
    let ok = if q.is_infinite() {
        exponent >= 0.0
    } else {
        q.value() * exponent > -1.0
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Integrability {
            endpoint,
            exponent,
            bound: -q.recip(),
        })
    }
}

fn finite(x: f64, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Singularity {
            x,
            value: v,
            context: "integrand".into(),
        })
    }
}

#[inline]
fn pow_q(v: f64, q: f64) -> f64 {
    let a = v.abs();
    if q == 1.0 {
        a
    } else if q == 2.0 {
        a * a
    } else {
        a.powf(q)
    }
}

/// `(∫_a^b |g|^q)^{1/q}`, or the sampled supremum of `|g|` for `q = inf`.
pub fn lq_norm<G>(g: G, dom: &Domain, q: NormOrder, quad: &QuadratureConfig) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    let clip = quad.clip_epsilon;
    if dom.touches_lo(clip) {
        check_integrable(-1.0, dom.exponents.0, q)?;
    }
    if dom.touches_hi(clip) {
        check_integrable(1.0, dom.exponents.1, q)?;
    }
    let lo = dom.a.max(-1.0 + clip);
    let hi = dom.b.min(1.0 - clip);
    if !(hi > lo) {
        return Ok(0.0);
    }
    let mesh = dom.mesh(quad);
    if q.is_infinite() {
        return sup_norm(&g, &mesh, dom, quad);
    }
    let qv = q.value();
    let (nodes, weights) = gauss_legendre(quad.nodes_per_panel);
    let mut total = 0.0;
    for pair in mesh.windows(2) {
        let (p0, p1) = (pair[0], pair[1]);
        let half = 0.5 * (p1 - p0);
        if half <= 0.0 {
            continue;
        }
        let mid = 0.5 * (p0 + p1);
        let mut s = 0.0;
        for (t, wt) in nodes.iter().zip(&weights) {
            let x = mid + half * t;
            s += wt * pow_q(finite(x, g(x))?, qv);
        }
        total += half * s;
    }
    for (touch, x, e) in [
        (dom.touches_lo(clip), lo, dom.exponents.0),
        (dom.touches_hi(clip), hi, dom.exponents.1),
    ] {
        if touch && e.is_finite() {
            total += pow_q(finite(x, g(x))?, qv) * clip / (qv * e + 1.0);
        }
    }
    Ok(total.powf(1.0 / qv))
}

fn sup_norm<G: Fn(f64) -> f64>(g: &G, mesh: &[f64], dom: &Domain, quad: &QuadratureConfig) -> Result<f64> {
    let (nodes, _) = gauss_legendre(quad.nodes_per_panel);
    let mut xs: Vec<f64> = Vec::with_capacity(mesh.len() * (nodes.len() + 2) + SUP_EXTRA_SAMPLES + 2);
    for pair in mesh.windows(2) {
        let (p0, p1) = (pair[0], pair[1]);
        if p1 <= p0 {
            continue;
        }
        let half = 0.5 * (p1 - p0);
        let mid = 0.5 * (p0 + p1);
        xs.extend(nodes.iter().map(|t| mid + half * t));
        let nudge = (1e-13 * (p1 - p0)).max(f64::EPSILON * p0.abs().max(p1.abs()) * 4.0);
        if p1 - p0 > 4.0 * nudge {
            xs.push(p0 + nudge);
            xs.push(p1 - nudge);
        }
    }
    xs.push(mesh[0]);
    xs.push(*mesh.last().unwrap());
    let extra = QuadratureConfig {
        panels_per_side: SUP_EXTRA_SAMPLES / 2,
        ..*quad
    };
    xs.extend(graded_mesh((dom.a, dom.b), (0.0, 0.0), &extra));
    let lo = mesh[0];
    let hi = *mesh.last().unwrap();
    xs.retain(|&x| x >= lo && x <= hi);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let vals: Vec<f64> = xs
        .iter()
        .map(|&x| finite(x, g(x)).map(f64::abs))
        .collect::<Result<_>>()?;
    let mut best = vals.iter().copied().fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]).then(i.cmp(&j)));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    for &i in order.iter().take(SUP_REFINE_CANDIDATES) {
        if vals[i] == 0.0 {
            break;
        }
        let mut a = xs[i.saturating_sub(1)];
        let mut b = xs[(i + 1).min(xs.len() - 1)];
        if b <= a {
            continue;
        }
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let mut fc = finite(c, g(c))?.abs();
        let mut fd = finite(d, g(d))?.abs();
        for _ in 0..SUP_REFINE_ITERS {
            best = best.max(fc).max(fd);
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = finite(c, g(c))?.abs();
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = finite(d, g(d))?.abs();
            }
        }
        best = best.max(fc).max(fd);
    }
    Ok(best)
}

/// `∫_a^b g` on the mesh of `dom` (signed, no tail correction).
pub fn integrate<G: Fn(f64) -> f64>(g: G, dom: &Domain, quad: &QuadratureConfig) -> Result<f64> {
    let mesh = dom.mesh(quad);
    let (nodes, weights) = gauss_legendre(quad.nodes_per_panel);
    let mut total = 0.0;
    for pair in mesh.windows(2) {
        let half = 0.5 * (pair[1] - pair[0]);
        if half <= 0.0 {
            continue;
        }
        let mid = 0.5 * (pair[0] + pair[1]);
        let mut s = 0.0;
        for (t, wt) in nodes.iter().zip(&weights) {
            let x = mid + half * t;
            s += wt * finite(x, g(x))?;
        }
        total += half * s;
    }
    Ok(total)
}

/// `‖w f‖_{L_q(interval)}`.
pub fn weighted_norm(
    f: &FunctionDescriptor,
    w: JacobiWeight,
    q: NormOrder,
    interval: (f64, f64),
    quad: &QuadratureConfig,
) -> Result<f64> {
    quad.validate()?;
    if !(interval.0 < interval.1) || interval.0 < -1.0 || interval.1 > 1.0 {
        return Err(Error::Spec(format!("bad interval [{}, {}]", interval.0, interval.1)));
    }
    let dom = Domain::new(
        interval.0,
        interval.1,
        (
            w.alpha + f.exponent_at_minus_one(),
            w.beta + f.exponent_at_plus_one(),
        ),
    )
    .with_anchors(f.breakpoints.clone());
    lq_norm(|x| w.eval(x) * f.eval(x), &dom, q, quad)
}
