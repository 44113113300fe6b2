use serde::{Deserialize, Serialize};

/// Polynomial `sum c_j T_j(x)` with a declared degree bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevPoly {
    pub coeffs: Vec<f64>,
    pub degree_bound: usize,
}

impl ChebyshevPoly {
    pub fn new(coeffs: Vec<f64>, degree_bound: usize) -> Self {
        let mut coeffs = coeffs;
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        let degree_bound = degree_bound.max(coeffs.len() - 1);
        ChebyshevPoly {
            coeffs,
            degree_bound,
        }
    }

    pub fn zero(degree_bound: usize) -> Self {
        ChebyshevPoly::new(vec![0.0], degree_bound)
    }

    /// Converts monomial coefficients `a_0 + a_1 x + ...` to Chebyshev form.
    pub fn from_monomial(a: &[f64]) -> Self {
        let n = a.len().max(1);
        let mut out = vec![0.0; n];
        // power holds the Chebyshev coefficients of x^j
        let mut power = vec![0.0; n + 1];
        power[0] = 1.0;
        for (j, &aj) in a.iter().enumerate() {
            if j > 0 {
                let mut next = vec![0.0; n + 1];
                for (m, &c) in power.iter().enumerate().take(j) {
                    if c == 0.0 {
                        continue;
                    }
                    if m == 0 {
                        next[1] += c;
                    } else {
                        next[m + 1] += 0.5 * c;
                        next[m - 1] += 0.5 * c;
                    }
                }
                power = next;
            }
            for m in 0..=j {
                out[m] += aj * power[m];
            }
        }
        ChebyshevPoly::new(out, n - 1)
    }

    pub fn degree(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|&c| c != 0.0)
            .unwrap_or(0)
    }

    /// Clenshaw backward recurrence.
    pub fn eval(&self, x: f64) -> f64 {
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * x * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        x * b1 - b2 + self.coeffs[0]
    }

    pub fn derivative(&self) -> ChebyshevPoly {
        let n = self.coeffs.len() - 1;
        if n == 0 {
            return ChebyshevPoly::zero(self.degree_bound.saturating_sub(1));
        }
        let mut d = vec![0.0; n + 1];
        for j in (0..n).rev() {
            let next = if j + 2 <= n { d[j + 2] } else { 0.0 };
            d[j] = next + 2.0 * (j + 1) as f64 * self.coeffs[j + 1];
        }
        d[0] *= 0.5;
        d.truncate(n);
        ChebyshevPoly::new(d, self.degree_bound.saturating_sub(1))
    }

    /// Drops trailing coefficients below `tol`; the degree bound is kept.
    pub fn trimmed(&self, tol: f64) -> ChebyshevPoly {
        let mut c = self.coeffs.clone();
        while c.len() > 1 && c.last().is_some_and(|v| v.abs() < tol) {
            c.pop();
        }
        ChebyshevPoly {
            coeffs: c,
            degree_bound: self.degree_bound,
        }
    }

    pub fn scaled(&self, s: f64) -> ChebyshevPoly {
        ChebyshevPoly {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            degree_bound: self.degree_bound,
        }
    }
}

/// `T_j(x)` for `j = 0..=n` by the three-term recurrence.
pub fn chebyshev_t_values(x: f64, n: usize, out: &mut [f64]) {
    out[0] = 1.0;
    if n >= 1 {
        out[1] = x;
    }
    for j in 2..=n {
        out[j] = 2.0 * x * out[j - 1] - out[j - 2];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clenshaw_matches_cosine_form() {
        let p = ChebyshevPoly::new(vec![0.0, 0.0, 0.0, 1.0], 3);
        for &x in &[-0.9, -0.2, 0.0, 0.4, 0.99] {
            let t3 = (3.0 * f64::acos(x)).cos();
            assert!((p.eval(x) - t3).abs() < 1e-14);
        }
    }

    #[test]
    fn monomial_conversion() {
        // 1 - 2x + 3x^2 + x^3
        let p = ChebyshevPoly::from_monomial(&[1.0, -2.0, 3.0, 1.0]);
        for &x in &[-1.0, -0.3, 0.5, 1.0] {
            let v = 1.0 - 2.0 * x + 3.0 * x * x + x * x * x;
            assert!((p.eval(x) - v).abs() < 1e-13);
        }
        assert_eq!(p.degree(), 3);
    }

    #[test]
    fn derivative_of_cubic() {
        let p = ChebyshevPoly::from_monomial(&[1.0, -2.0, 3.0, 1.0]);
        let d = p.derivative();
        for &x in &[-0.7, 0.0, 0.8] {
            let v = -2.0 + 6.0 * x + 3.0 * x * x;
            assert!((d.eval(x) - v).abs() < 1e-13);
        }
        let dd = d.derivative().derivative();
        assert!((dd.eval(0.3) - 6.0).abs() < 1e-13);
        assert!(dd.derivative().eval(0.1).abs() < 1e-14);
    }

    #[test]
    fn trimming_keeps_bound() {
        let p = ChebyshevPoly::new(vec![1.0, 2.0, 1e-16, 0.0], 5);
        let t = p.trimmed(1e-14);
        assert_eq!(t.coeffs.len(), 2);
        assert_eq!(t.degree_bound, 5);
    }
}
