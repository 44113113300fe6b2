use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Jacobi weight `(1+x)^alpha (1-x)^beta` on `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobiWeight {
    pub alpha: f64,
    pub beta: f64,
}

impl JacobiWeight {
    pub const UNIT: JacobiWeight = JacobiWeight {
        alpha: 0.0,
        beta: 0.0,
    };

    pub fn new(alpha: f64, beta: f64) -> Self {
        JacobiWeight { alpha, beta }
    }

    /// `phi(x) = sqrt(1 - x^2)`.
    pub fn phi() -> Self {
        JacobiWeight::new(0.5, 0.5)
    }

    /// Weight with the exponents swapped, i.e. `w(-x)`.
    pub fn reflected(self) -> Self {
        JacobiWeight::new(self.beta, self.alpha)
    }

    /// `w * phi^r`.
    pub fn times_phi_pow(self, r: f64) -> Self {
        JacobiWeight::new(self.alpha + r / 2.0, self.beta + r / 2.0)
    }

    pub fn is_unit(&self) -> bool {
        self.alpha == 0.0 && self.beta == 0.0
    }

    /// Evaluates the weight; at `x = ±1` returns 0, 1 or +inf according to
    /// the sign of the corresponding exponent.
    pub fn eval(&self, x: f64) -> f64 {
        endpoint_pow(1.0 + x, self.alpha) * endpoint_pow(1.0 - x, self.beta)
    }

    /// Checks that `alpha, beta` lie in `J_p`: `> -1/p` for finite `p`,
    /// `>= 0` for `p = inf`.
    pub fn check_in_jp(&self, p: NormOrder) -> Result<()> {
        for (endpoint, e) in [(-1.0, self.alpha), (1.0, self.beta)] {
            let ok = if p.is_infinite() {
                e >= 0.0
            } else {
                e * p.value() > -1.0
            };
            if !ok {
                return Err(Error::Integrability {
                    endpoint,
                    exponent: e,
                    bound: if p.is_infinite() { 0.0 } else { -1.0 / p.value() },
                });
            }
        }
        Ok(())
    }
}

impl Default for JacobiWeight {
    fn default() -> Self {
        JacobiWeight::UNIT
    }
}

fn endpoint_pow(base: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if base <= 0.0 {
        if e > 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        base.powf(e)
    }
}

/// Norm order `q` in `[1, inf]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct NormOrder(f64);

impl NormOrder {
    pub const ONE: NormOrder = NormOrder(1.0);
    pub const TWO: NormOrder = NormOrder(2.0);
    pub const INF: NormOrder = NormOrder(f64::INFINITY);

    pub fn new(q: f64) -> Result<Self> {
        if q.is_nan() || q < 1.0 {
            return Err(Error::param("q", q, "norm order must be >= 1"));
        }
        Ok(NormOrder(q))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// `1/q`, zero for `q = inf`.
    pub fn recip(self) -> f64 {
        if self.is_infinite() {
            0.0
        } else {
            1.0 / self.0
        }
    }
}

impl fmt::Display for NormOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for NormOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
            return Ok(NormOrder::INF);
        }
        let q: f64 = t
            .parse()
            .map_err(|_| Error::Spec(format!("cannot parse norm order `{s}`")))?;
        NormOrder::new(q)
    }
}

impl Serialize for NormOrder {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for NormOrder {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(q) => NormOrder::new(q).map_err(serde::de::Error::custom),
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}
