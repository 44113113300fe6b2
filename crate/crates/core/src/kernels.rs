//! The change of variable `y = x + λφ(x)` and its inverse `ψ(λ, y)`, the
//! kernel `g_y(t)` and the difference `A_k(y, h) = Δ^k_{h/ϑ}(g_y, 0)`.

use serde::{Deserialize, Serialize};

use crate::differences::difference_weights;
use crate::error::{Error, Result};
use crate::par;
use crate::quadrature::{integrate, Domain, QuadratureConfig};

#[inline]
pub fn phi(x: f64) -> f64 {
    (1.0 - x * x).max(0.0).sqrt()
}

/// `ψ(λ, y) = (y - λ sqrt(1 - y² + λ²)) / (1 + λ²)`, the inverse of
/// `x ↦ x + λφ(x)`.
#[inline]
pub fn psi(lambda: f64, y: f64) -> f64 {
    (y - lambda * (1.0 - y * y + lambda * lambda).sqrt()) / (1.0 + lambda * lambda)
}

const PSI_DEGENERATE: f64 = 1e-14;

/// `∂ψ/∂y`.
pub fn psi_derivative(lambda: f64, y: f64) -> Result<f64> {
    let s2 = 1.0 - y * y + lambda * lambda;
    if s2 <= PSI_DEGENERATE {
        return Err(Error::Degenerate(format!(
            "1 - y^2 + lambda^2 = {s2:e} at lambda = {lambda}, y = {y}"
        )));
    }
    let s = s2.sqrt();
    Ok((lambda * y + s) / ((1.0 + lambda * lambda) * s))
}

/// `g_y(t) = ϑ^{2β} (1+t²)^{-β-1} (1 - t y / sqrt(1+t²))^{-2β-1}`.
#[inline]
pub fn g_kernel(beta: f64, theta: f64, y: f64, t: f64) -> f64 {
    let r = (1.0 + t * t).sqrt();
    theta.powf(2.0 * beta) * (1.0 + t * t).powf(-beta - 1.0) * (1.0 - t * y / r).powf(-2.0 * beta - 1.0)
}

/// `G_y(t) = (g_y(t) + (-1)^k g_y(-t)) / 2`.
pub fn g_symmetrized(beta: f64, theta: f64, y: f64, t: f64, k: usize) -> f64 {
    let s = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    0.5 * (g_kernel(beta, theta, y, t) + s * g_kernel(beta, theta, y, -t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelPoint {
    pub y: f64,
    pub theta: f64,
    pub beta: f64,
    pub k: usize,
    pub h: f64,
}

impl KernelPoint {
    pub fn new(y: f64, beta: f64, k: usize, h: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("k", 0.0, "order must be >= 1"));
        }
        if !(h > 0.0) {
            return Err(Error::param("h", h, "step must be positive"));
        }
        let top = 1.0 - 2.0 * (k * k) as f64 * h * h;
        if !(0.0..=top).contains(&y) {
            return Err(Error::param("y", y, format!("must lie in [0, {top}]")));
        }
        Ok(KernelPoint {
            y,
            theta: phi(y),
            beta,
            k,
            h,
        })
    }

    /// `λ_i = (i - k/2) h`.
    pub fn lambda(&self, i: usize) -> f64 {
        (i as f64 - 0.5 * self.k as f64) * self.h
    }
}

/// `A_k(y, h)` as the k-th symmetric difference of `g_y` at 0 with step `h/ϑ`.
pub fn a_kernel(p: &KernelPoint) -> f64 {
    let w = difference_weights(p.k);
    w.iter()
        .enumerate()
        .map(|(i, c)| c * g_kernel(p.beta, p.theta, p.y, p.lambda(i) / p.theta))
        .sum()
}

/// `A_k(y, h)` from its defining sum `Σ c_i w_{β,β}(ψ(λ_i, y)) ∂ψ/∂y(λ_i, y)`.
pub fn a_kernel_direct(p: &KernelPoint) -> Result<f64> {
    let w = difference_weights(p.k);
    let mut s = 0.0;
    for (i, c) in w.iter().enumerate() {
        let l = p.lambda(i);
        let x = psi(l, p.y);
        s += c * phi(x).powf(2.0 * p.beta) * psi_derivative(l, p.y)?;
    }
    Ok(s)
}

/// `|A_k(y,h)| / (h^k ϑ^{2β-k})`.
pub fn kernel_bound_ratio(p: &KernelPoint) -> f64 {
    a_kernel(p).abs() / (p.h.powi(p.k as i32) * p.theta.powf(2.0 * p.beta - p.k as f64))
}

/// y-grid on `[0, 1 - 2k²h²]`: uniform in the bulk, geometric toward the top.
pub fn kernel_y_grid(k: usize, h: f64, n: usize) -> Vec<f64> {
    let top = 1.0 - 2.0 * (k * k) as f64 * h * h;
    let gap = 1.0 - top;
    let mut ys: Vec<f64> = (0..=n).map(|j| top * j as f64 / n as f64).collect();
    for j in 0..=n {
        // 1 - y from 1 down to the gap, geometrically
        let d = gap.powf(j as f64 / n as f64);
        ys.push((1.0 - d).clamp(0.0, top));
    }
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    ys
}

/// Supremum of [`kernel_bound_ratio`] over [`kernel_y_grid`]; returns the
/// value and the maximizing `y`.
pub fn kernel_bound_sup(k: usize, beta: f64, h: f64, n: usize) -> Result<(f64, f64)> {
    let ys = kernel_y_grid(k, h, n);
    let vals = par::try_map(&ys, |&y| KernelPoint::new(y, beta, k, h).map(|p| kernel_bound_ratio(&p)))?;
    let mut best = (0.0, 0.0);
    for (y, v) in ys.iter().zip(vals) {
        if v > best.0 {
            best = (v, *y);
        }
    }
    Ok(best)
}

/// Largest `|ψ(λ, x + λφ(x)) - x|` over an `nx × nl` grid of
/// `x ∈ [-1+η, 1-η]`, `|λ| ≤ sqrt(2η)`.
pub fn inverse_roundtrip_error(eta: f64, nx: usize, nl: usize) -> f64 {
    let lmax = (2.0 * eta).sqrt();
    let mut worst: f64 = 0.0;
    for i in 0..nx {
        let x = -1.0 + eta + (2.0 - 2.0 * eta) * i as f64 / (nx - 1) as f64;
        for j in 0..nl {
            let l = -lmax + 2.0 * lmax * j as f64 / (nl - 1) as f64;
            worst = worst.max((psi(l, x + l * phi(x)) - x).abs());
        }
    }
    worst
}

/// Range of `∂ψ/∂y` over `|λ| ≤ sqrt(η/2)` and
/// `y ∈ [-1+η+λ sqrt(2η-η²), 1-η+λ sqrt(2η-η²)]`.
pub fn psi_derivative_range(eta: f64, ny: usize, nl: usize) -> Result<(f64, f64)> {
    let lmax = (eta / 2.0).sqrt();
    let shift = (2.0 * eta - eta * eta).sqrt();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for j in 0..nl {
        let l = -lmax + 2.0 * lmax * j as f64 / (nl - 1) as f64;
        let a = -1.0 + eta + l * shift;
        let b = 1.0 - eta + l * shift;
        for i in 0..ny {
            let y = a + (b - a) * i as f64 / (ny - 1) as f64;
            let d = psi_derivative(l, y)?;
            lo = lo.min(d);
            hi = hi.max(d);
        }
    }
    Ok((lo, hi))
}

/// Largest `φ(x) - sqrt(2/η)(1-|x|)` over `|x| ≤ 1-η` (nonpositive when
/// the bound holds).
pub fn phi_bound_excess(eta: f64, n: usize) -> f64 {
    let c = (2.0 / eta).sqrt();
    (0..n)
        .map(|i| {
            let x = -(1.0 - eta) + 2.0 * (1.0 - eta) * i as f64 / (n - 1) as f64;
            phi(x) - c * (1.0 - x.abs())
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest relative violation of `(1∓x)/4 ≤ 1∓x+λφ(x) ≤ 2(1∓x)` over
/// `|λ| ≤ sqrt(η)/2`, `|x| ≤ 1-η` (nonpositive when both hold).
pub fn shifted_distance_excess(eta: f64, nx: usize, nl: usize) -> f64 {
    let lmax = eta.sqrt() / 2.0;
    let mut worst = f64::NEG_INFINITY;
    for i in 0..nx {
        let x = -(1.0 - eta) + 2.0 * (1.0 - eta) * i as f64 / (nx - 1) as f64;
        for j in 0..nl {
            let l = -lmax + 2.0 * lmax * j as f64 / (nl - 1) as f64;
            for d in [1.0 - x, 1.0 + x] {
                let v = d + l * phi(x);
                worst = worst.max((d / 4.0 - v) / d).max((v - 2.0 * d) / d);
            }
        }
    }
    worst
}

/// Both sides of `∫_{-1+η}^{1-η} g(x) f(x+λφ(x)) dx = ∫ f(y) g(ψ(λ,y)) ∂ψ/∂y dy`
/// where the right integral runs over the shifted window. `breaks` lists
/// jumps of `f`.
pub fn change_of_variable_sides<F, G>(
    f: F,
    g: G,
    breaks: &[f64],
    eta: f64,
    lambda: f64,
    quad: &QuadratureConfig,
) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let a = -1.0 + eta;
    let b = 1.0 - eta;
    let lhs_dom = Domain::new(a, b, (0.0, 0.0))
        .with_anchors(breaks.iter().map(|&y| psi(lambda, y)).collect())
        .anchored();
    let lhs = integrate(|x| g(x) * f(x + lambda * phi(x)), &lhs_dom, quad)?;
    let shift = lambda * (2.0 * eta - eta * eta).sqrt();
    let rhs_dom = Domain::new(a + shift, b + shift, (0.0, 0.0))
        .with_anchors(breaks.to_vec())
        .anchored();
    let rhs = integrate(
        |y| f(y) * g(psi(lambda, y)) * psi_derivative(lambda, y).unwrap_or(f64::NAN),
        &rhs_dom,
        quad,
    )?;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_examples() {
        assert_eq!(psi(0.0, 0.7), 0.7);
        assert!((psi(1.0, 0.0) + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let x: f64 = 0.3;
        let l = 0.2;
        assert!((psi(l, x + l * phi(x)) - x).abs() < 1e-12);
    }

    #[test]
    fn psi_derivative_examples() {
        assert_eq!(psi_derivative(0.0, 0.5).unwrap(), 1.0);
        let s = 1e-6;
        let fd = (psi(0.1, 0.5 + s) - psi(0.1, 0.5 - s)) / (2.0 * s);
        assert!((psi_derivative(0.1, 0.5).unwrap() - fd).abs() < 1e-8);
        assert!(psi_derivative(0.0, 1.0).is_err());
        let (lo, hi) = psi_derivative_range(0.08, 200, 21).unwrap();
        assert!(lo >= 0.5 && hi <= 2.0, "{lo} {hi}");
    }

    #[test]
    fn g_kernel_examples() {
        assert!((g_kernel(0.7, 0.6, 0.8, 0.0) - 0.6f64.powf(1.4)).abs() < 1e-15);
        let y: f64 = 0.6;
        let th = phi(y);
        for i in 0..50 {
            let t = -2.0 + 4.0 * i as f64 / 49.0;
            let g = g_symmetrized(0.0, th, y, t, 2);
            assert!((g - 1.0 / (1.0 + t * t * th * th)).abs() < 1e-12);
            assert!(g_symmetrized(-0.5, th, y, t, 3).abs() < 1e-12);
        }
    }

    #[test]
    fn a_kernel_examples() {
        let p = KernelPoint::new(0.5, -0.5, 1, 0.05).unwrap();
        assert!(a_kernel(&p).abs() < 1e-11);
        let p = KernelPoint::new(0.5, 0.0, 2, 0.05).unwrap();
        let mu = p.h / p.theta;
        let g = |t: f64| 1.0 / (1.0 + t * t * p.theta * p.theta);
        let cross = g(-mu) - 2.0 * g(0.0) + g(mu);
        assert!((a_kernel(&p) - cross).abs() < 1e-11);
        let r1 = kernel_bound_ratio(&KernelPoint::new(0.9, 0.3, 2, 0.02).unwrap());
        let r2 = kernel_bound_ratio(&KernelPoint::new(0.9, 0.3, 2, 0.01).unwrap());
        assert!((r1 / r2 - 1.0).abs() < 0.05, "{r1} {r2}");
        assert!(KernelPoint::new(0.999, 0.0, 2, 0.05).is_err());
    }

    #[test]
    fn both_forms_of_a_kernel_agree() {
        for &(y, beta, k, h) in &[(0.2, 0.3, 1, 0.05), (0.7, -0.25, 2, 0.03), (0.9, 1.0, 3, 0.01)] {
            let p = KernelPoint::new(y, beta, k, h).unwrap();
            let a = a_kernel(&p);
            let b = a_kernel_direct(&p).unwrap();
            assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()), "{a} {b}");
        }
    }

    #[test]
    fn proposition_windows() {
        for &eta in &[0.01, 0.08, 0.3] {
            assert!(inverse_roundtrip_error(eta, 100, 20) < 1e-10);
        }
        for &eta in &[0.01, 0.1] {
            assert!(phi_bound_excess(eta, 2001) <= 0.0);
            assert!(shifted_distance_excess(eta, 401, 21) <= 0.0);
        }
    }

    #[test]
    fn change_of_variable_with_closed_form() {
        let (eta, l) = (0.08, 0.1);
        let f = |y: f64| if (0.0..=1.0).contains(&y) { 1.0 } else { 0.0 };
        let (lhs, rhs) = change_of_variable_sides(f, phi, &[0.0, 1.0], eta, l, &QuadratureConfig::default()).unwrap();
        let prim = |x: f64| 0.5 * (x * phi(x) + x.asin());
        let exact = prim(1.0 - eta) - prim(-l / (1.0f64 + l * l).sqrt());
        assert!((lhs / exact - 1.0).abs() < 1e-9, "{lhs} {exact}");
        assert!((rhs / lhs - 1.0).abs() < 1e-3, "{lhs} {rhs}");
    }
}
