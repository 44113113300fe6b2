use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chebyshev::ChebyshevPoly;
use crate::error::{Error, Result};

pub type EvalFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Where a k-monotonicity declaration comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificateSource {
    Analytic,
    Checked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonotoneOrder {
    pub k: usize,
    pub source: CertificateSource,
}

/// A real function on `(-1, 1)` together with the metadata the quadrature
/// and difference routines rely on.
#[derive(Clone)]
pub struct FunctionDescriptor {
    pub name: String,
    eval: EvalFn,
    derivatives: Vec<EvalFn>,
    /// `(e-, e+)` with `|f| = O((1+x)^{e-})` at -1 and `O((1-x)^{e+})` at +1.
    pub endpoint_exponents: (f64, f64),
    /// `f` vanishes outside this closed interval.
    pub support: Option<(f64, f64)>,
    /// Jumps or kinks of `f` (or of a low derivative) inside `(-1, 1)`.
    pub breakpoints: Vec<f64>,
    pub monotone_order: Option<MonotoneOrder>,
    /// Set when `f` is known to be a polynomial of at most this degree.
    pub polynomial_degree: Option<usize>,
}

impl fmt::Debug for FunctionDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionDescriptor")
            .field("name", &self.name)
            .field("derivatives", &self.derivatives.len())
            .field("endpoint_exponents", &self.endpoint_exponents)
            .field("support", &self.support)
            .field("breakpoints", &self.breakpoints.len())
            .field("monotone_order", &self.monotone_order)
            .finish()
    }
}

fn smooth_exponent_after(e: f64, r: usize) -> f64 {
    if e >= 0.0 && e.fract() == 0.0 {
        (e - r as f64).max(0.0)
    } else {
        e - r as f64
    }
}

impl FunctionDescriptor {
    pub fn new(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        FunctionDescriptor {
            name: name.into(),
            eval: Arc::new(f),
            derivatives: Vec::new(),
            endpoint_exponents: (0.0, 0.0),
            support: None,
            breakpoints: Vec::new(),
            monotone_order: None,
            polynomial_degree: None,
        }
    }

    /// Appends the next exact derivative (first call gives `f'`).
    pub fn with_derivative(mut self, d: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.derivatives.push(Arc::new(d));
        self
    }

    pub fn with_exponents(mut self, lo: f64, hi: f64) -> Self {
        self.endpoint_exponents = (lo, hi);
        self
    }

    pub fn with_support(mut self, a: f64, b: f64) -> Self {
        self.support = Some((a, b));
        self
    }

    pub fn with_breakpoints(mut self, mut pts: Vec<f64>) -> Self {
        pts.retain(|x| x.abs() < 1.0);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        self.breakpoints = pts;
        self
    }

    pub fn with_monotone(mut self, k: usize, source: CertificateSource) -> Self {
        self.monotone_order = Some(MonotoneOrder { k, source });
        self
    }

    pub fn with_polynomial_degree(mut self, n: usize) -> Self {
        self.polynomial_degree = Some(n);
        self
    }

    pub fn from_poly(name: impl Into<String>, p: &ChebyshevPoly) -> Self {
        let deg = p.degree();
        let mut out = {
            let p = p.clone();
            FunctionDescriptor::new(name, move |x| p.eval(x))
        };
        let mut d = p.clone();
        for _ in 0..=deg {
            d = d.derivative();
            let dd = d.clone();
            out = out.with_derivative(move |x| dd.eval(x));
        }
        out.with_polynomial_degree(deg)
    }

    /// Evaluates `f`, returning exactly 0 outside the declared support.
    pub fn eval(&self, x: f64) -> f64 {
        if let Some((a, b)) = self.support {
            if x < a || x > b {
                return 0.0;
            }
        }
        (self.eval)(x)
    }

    /// Evaluates `f` and rejects non-finite values.
    pub fn try_eval(&self, x: f64) -> Result<f64> {
        let v = self.eval(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Singularity {
                x,
                value: v,
                context: self.name.clone(),
            })
        }
    }

    pub fn derivative_count(&self) -> usize {
        if self.polynomial_degree.is_some() {
            usize::MAX
        } else {
            self.derivatives.len()
        }
    }

    pub fn has_derivative(&self, r: usize) -> bool {
        r == 0 || r <= self.derivatives.len() || self.polynomial_degree.is_some_and(|d| r > d)
    }

    /// Exact value of `f^{(r)}(x)` when declared.
    pub fn eval_derivative(&self, r: usize, x: f64) -> Result<f64> {
        if r == 0 {
            return Ok(self.eval(x));
        }
        if let Some((a, b)) = self.support {
            if x < a || x > b {
                return Ok(0.0);
            }
        }
        match self.derivatives.get(r - 1) {
            Some(d) => Ok(d(x)),
            None if self.polynomial_degree.is_some_and(|d| r > d) => Ok(0.0),
            None => Err(Error::DerivativeUnavailable {
                order: r,
                x,
                reason: format!("`{}` declares {} derivatives", self.name, self.derivatives.len()),
            }),
        }
    }

    /// `f^{(r)}` as a descriptor of its own.
    pub fn derivative(&self, r: usize) -> Result<FunctionDescriptor> {
        if r == 0 {
            return Ok(self.clone());
        }
        if !self.has_derivative(r) {
            return Err(Error::DerivativeUnavailable {
                order: r,
                x: 0.0,
                reason: format!("`{}` declares {} derivatives", self.name, self.derivatives.len()),
            });
        }
        let (lo, hi) = self.endpoint_exponents;
        let mut out = match self.derivatives.get(r - 1) {
            Some(d) => {
                let d = d.clone();
                FunctionDescriptor::new(format!("{}^({r})", self.name), move |x| d(x))
            }
            None => FunctionDescriptor::new(format!("{}^({r})", self.name), |_| 0.0),
        };
        for d in self.derivatives.iter().skip(r) {
            let d = d.clone();
            out.derivatives.push(Arc::new(move |x| d(x)));
        }
        out.endpoint_exponents = (smooth_exponent_after(lo, r), smooth_exponent_after(hi, r));
        out.support = self.support;
        out.breakpoints = self.breakpoints.clone();
        out.polynomial_degree = self.polynomial_degree.map(|d| d.saturating_sub(r));
        out.monotone_order = self.monotone_order.and_then(|m| {
            (m.k > r).then_some(MonotoneOrder {
                k: m.k - r,
                source: m.source,
            })
        });
        Ok(out)
    }

    /// `c f`.
    pub fn scaled(&self, c: f64) -> FunctionDescriptor {
        let mut out = self.clone();
        let f = self.eval.clone();
        out.eval = Arc::new(move |x| c * f(x));
        out.derivatives = self
            .derivatives
            .iter()
            .map(|d| {
                let d = d.clone();
                Arc::new(move |x: f64| c * d(x)) as EvalFn
            })
            .collect();
        if c < 0.0 {
            out.monotone_order = None;
        }
        if c == 0.0 {
            out.polynomial_degree = Some(0);
        }
        out
    }

    /// `(-1)^k f(-x)`, which maps `M^k` onto itself.
    pub fn reflected(&self, k: usize) -> FunctionDescriptor {
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        let f = self.eval.clone();
        let mut out = FunctionDescriptor::new(format!("refl({})", self.name), move |x| sign * f(-x));
        for (i, d) in self.derivatives.iter().enumerate() {
            let d = d.clone();
            let s = if (i + 1) % 2 == 0 { sign } else { -sign };
            out.derivatives.push(Arc::new(move |x| s * d(-x)));
        }
        out.endpoint_exponents = (self.endpoint_exponents.1, self.endpoint_exponents.0);
        out.support = self.support.map(|(a, b)| (-b, -a));
        out.breakpoints = self.breakpoints.iter().rev().map(|x| -x).collect();
        out.polynomial_degree = self.polynomial_degree;
        out.monotone_order = self.monotone_order.filter(|m| m.k == k);
        out
    }

    /// `f + g`.
    pub fn sum(&self, g: &FunctionDescriptor) -> FunctionDescriptor {
        let (f1, g1) = (self.eval.clone(), g.eval.clone());
        let (sf, sg) = (self.support, g.support);
        let inside = |s: Option<(f64, f64)>, x: f64| s.is_none_or(|(a, b)| x >= a && x <= b);
        let mut out = FunctionDescriptor::new(format!("{}+{}", self.name, g.name), move |x| {
            let a = if inside(sf, x) { f1(x) } else { 0.0 };
            let b = if inside(sg, x) { g1(x) } else { 0.0 };
            a + b
        });
        let nd = self.derivatives.len().min(g.derivatives.len());
        for i in 0..nd {
            let (d1, d2) = (self.derivatives[i].clone(), g.derivatives[i].clone());
            out.derivatives.push(Arc::new(move |x| {
                let a = if inside(sf, x) { d1(x) } else { 0.0 };
                let b = if inside(sg, x) { d2(x) } else { 0.0 };
                a + b
            }));
        }
        out.endpoint_exponents = (
            self.endpoint_exponents.0.min(g.endpoint_exponents.0),
            self.endpoint_exponents.1.min(g.endpoint_exponents.1),
        );
        out.support = match (sf, sg) {
            (Some((a1, b1)), Some((a2, b2))) => Some((a1.min(a2), b1.max(b2))),
            _ => None,
        };
        let mut bp = self.breakpoints.clone();
        bp.extend_from_slice(&g.breakpoints);
        out = out.with_breakpoints(bp);
        out.monotone_order = match (self.monotone_order, g.monotone_order) {
            (Some(a), Some(b)) if a.k == b.k => Some(MonotoneOrder {
                k: a.k,
                source: if a.source == CertificateSource::Analytic
                    && b.source == CertificateSource::Analytic
                {
                    CertificateSource::Analytic
                } else {
                    CertificateSource::Checked
                },
            }),
            _ => None,
        };
        out.polynomial_degree = match (self.polynomial_degree, g.polynomial_degree) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        };
        out
    }

    /// `f - p` for a polynomial `p`.
    pub fn minus_poly(&self, p: &ChebyshevPoly) -> FunctionDescriptor {
        let mut neg = FunctionDescriptor::from_poly("p", &p.scaled(-1.0));
        neg.monotone_order = None;
        let mut out = self.sum(&neg);
        out.name = self.name.clone();
        out.monotone_order = self.monotone_order.filter(|m| p.degree() < m.k);
        out
    }

    /// `f` multiplied by the indicator of `(a, b]`.
    pub fn restricted_half_open(&self, a: f64, b: f64) -> FunctionDescriptor {
        let f = self.eval.clone();
        let mut out = FunctionDescriptor::new(self.name.clone(), move |x| {
            if x > a && x <= b {
                f(x)
            } else {
                0.0
            }
        });
        for d in &self.derivatives {
            let d = d.clone();
            out.derivatives.push(Arc::new(move |x| if x > a && x <= b { d(x) } else { 0.0 }));
        }
        out.endpoint_exponents = (
            if a > -1.0 { f64::INFINITY } else { self.endpoint_exponents.0 },
            if b < 1.0 { f64::INFINITY } else { self.endpoint_exponents.1 },
        );
        out.support = Some((a, b));
        let mut bp = self.breakpoints.clone();
        bp.push(a);
        bp.push(b);
        out.with_breakpoints(bp)
    }

    /// Breakpoints together with support endpoints inside `(-1, 1)`.
    pub fn kinks(&self) -> Vec<f64> {
        let mut v = self.breakpoints.clone();
        if let Some((a, b)) = self.support {
            v.push(a);
            v.push(b);
        }
        v.retain(|x| x.abs() < 1.0);
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Effective exponent at -1, `+inf` when the support stays away from it.
    pub fn exponent_at_minus_one(&self) -> f64 {
        match self.support {
            Some((a, _)) if a > -1.0 => f64::INFINITY,
            _ => self.endpoint_exponents.0,
        }
    }

    /// Effective exponent at +1, `+inf` when the support stays away from it.
    pub fn exponent_at_plus_one(&self) -> f64 {
        match self.support {
            Some((_, b)) if b < 1.0 => f64::INFINITY,
            _ => self.endpoint_exponents.1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> FunctionDescriptor {
        FunctionDescriptor::new("x^2", |x| x * x)
            .with_derivative(|x| 2.0 * x)
            .with_derivative(|_| 2.0)
            .with_monotone(2, CertificateSource::Analytic)
    }

    #[test]
    fn support_is_enforced() {
        let f = FunctionDescriptor::new("one", |_| 1.0).with_support(0.0, 1.0);
        assert_eq!(f.eval(-0.1), 0.0);
        assert_eq!(f.eval(0.5), 1.0);
    }

    #[test]
    fn reflection_of_square() {
        let f = square().reflected(2);
        assert_eq!(f.eval(0.3), 0.09);
        assert!((f.eval_derivative(1, 0.3).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(f.monotone_order.unwrap().k, 2);
        let g = FunctionDescriptor::new("x", |x| x).reflected(1);
        assert_eq!(g.eval(0.4), 0.4);
    }

    #[test]
    fn derivative_descriptor() {
        let d = square().derivative(1).unwrap();
        assert_eq!(d.eval(0.25), 0.5);
        assert_eq!(d.monotone_order.unwrap().k, 1);
        assert!(square().derivative(3).is_err());
    }

    #[test]
    fn polynomial_has_all_derivatives() {
        let p = FunctionDescriptor::from_poly("p", &ChebyshevPoly::from_monomial(&[0.0, 0.0, 1.0]));
        assert!((p.eval_derivative(2, 0.1).unwrap() - 2.0).abs() < 1e-13);
        assert_eq!(p.eval_derivative(5, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn sum_and_minus_poly() {
        let f = square().minus_poly(&ChebyshevPoly::from_monomial(&[1.0]));
        assert!((f.eval(0.5) + 0.75).abs() < 1e-15);
        assert_eq!(f.monotone_order.unwrap().k, 2);
    }

    #[test]
    fn singular_values_rejected() {
        let f = FunctionDescriptor::new("inv", |x| 1.0 / (1.0 - x));
        assert!(f.try_eval(1.0).is_err());
        assert!(f.try_eval(0.0).is_ok());
    }
}
