//! Catalog of extremal functions for the lower estimates, and the Chebyshev
//! partition `t_i = cos(iπ/n)` with the intervals `D_i(h)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{CertificateSource, FunctionDescriptor};
use crate::kernels::phi;
use crate::weight::{JacobiWeight, NormOrder};

/// Default `λ > 1` of the zeta spline.
pub const ZETA_DEFAULT_LAMBDA: f64 = 1.5;

/// Clip used by `inverse_power` near `+1`.
pub const INVERSE_POWER_CLIP: f64 = 1e-12;

/// The rate a catalog member witnesses, as a function of `(k, q, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateLaw {
    /// The modulus stays bounded below by a constant.
    Constant,
    /// `ω ~ δ^{1/q}`.
    InverseQ,
    /// `ω ≥ c δ^{2/q-2/p}`.
    TwoOverQMinusTwoOverP,
    /// `Ω ≥ c δ² |ln δ|`.
    SquareLog,
    /// `Ω ≥ c δ^{1/q} |ln δ|^{1/(2q)} / |ln|ln δ||^{λ/(2q)}`.
    InverseQHalfLog,
    /// `E_n ≥ c n^{-k+1-1/q}`.
    PolyOrigin,
    /// `E_n(f_n) / ‖w f_n^{(r)}‖_p ≥ c n^{-r-2/q+2/p}`.
    PolyMoving,
    /// Identically zero modulus.
    Zero,
}

impl RateLaw {
    /// `(a, b)` with the rate `t^a |ln t|^b`, `t = δ` or `t = 1/n`.
    pub fn exponents(self, k: usize, q: NormOrder, p: NormOrder) -> (f64, f64) {
        let (iq, ip) = (q.recip(), p.recip());
        match self {
            RateLaw::Constant | RateLaw::Zero => (0.0, 0.0),
            RateLaw::InverseQ => (iq, 0.0),
            RateLaw::TwoOverQMinusTwoOverP => (2.0 * iq - 2.0 * ip, 0.0),
            RateLaw::SquareLog => (2.0, 1.0),
            RateLaw::InverseQHalfLog => (iq, 0.5 * iq),
            RateLaw::PolyOrigin => (k as f64 - 1.0 + iq, 0.0),
            RateLaw::PolyMoving => (2.0 * iq - 2.0 * ip, 0.0),
        }
    }
}

/// Rate claim attached to a catalog member.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClaimedRate {
    pub law: RateLaw,
    /// Name of the lower-estimate construction the member comes from.
    pub construction: String,
}

/// One instantiated catalog member.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub descriptor: FunctionDescriptor,
    pub claimed_rate: ClaimedRate,
    /// `(w, p)` in which the construction is normalized to `‖w f‖_p ~ 1`.
    pub natural_norm: Option<(JacobiWeight, NormOrder)>,
}

/// Static description of a catalog name for listings.
#[derive(Debug, Clone, Serialize)]
pub struct CatalogInfo {
    pub name: &'static str,
    /// Parameter names with their defaults (`None` = required).
    pub params: Vec<(&'static str, Option<f64>)>,
    pub construction: &'static str,
    pub law: RateLaw,
}

pub fn catalog_list() -> Vec<CatalogInfo> {
    use RateLaw::*;
    vec![
        CatalogInfo {
            name: "oscillating_step",
            params: vec![("k", Some(1.0)), ("delta", None)],
            construction: "alternating unit steps on [k delta i, k delta (i+1/2)]",
            law: Constant,
        },
        CatalogInfo {
            name: "heaviside",
            params: vec![],
            construction: "indicator of [0,1]",
            law: InverseQ,
        },
        CatalogInfo {
            name: "truncated_power",
            params: vec![("k", None), ("eps", None), ("beta", Some(0.0)), ("p", None)],
            construction: "lambda (x-1+eps)_+^(k-1), lambda = eps^(-k-beta-1/p+1)",
            law: TwoOverQMinusTwoOverP,
        },
        CatalogInfo {
            name: "inverse_power",
            params: vec![("beta", None)],
            construction: "(1-x)^(-beta) in the weight w_(0,beta), p = inf",
            law: SquareLog,
        },
        CatalogInfo {
            name: "zeta_spline",
            params: vec![
                ("m", None),
                ("lambda", Some(ZETA_DEFAULT_LAMBDA)),
                ("beta", Some(0.0)),
                ("p", Some(2.0)),
            ],
            construction: "step spline on the Chebyshev partition with zeta_j = (j+2)^-1 ln(j+2)^-lambda",
            law: InverseQHalfLog,
        },
        CatalogInfo {
            name: "truncated_power_origin",
            params: vec![("k", None)],
            construction: "x_+^(k-1)",
            law: PolyOrigin,
        },
        CatalogInfo {
            name: "moving_truncated_power",
            params: vec![("k", None), ("n", None)],
            construction: "(x - xi_n)_+^(k-1), xi_n = 1 - 2k^2/n^2",
            law: PolyMoving,
        },
        CatalogInfo {
            name: "constant",
            params: vec![("c", Some(1.0)), ("k", Some(1.0))],
            construction: "constant function",
            law: Zero,
        },
    ]
}

/// Looks up `name` and builds the member. Unknown parameter keys are
/// rejected; `zeta_spline` also accepts `delta` in place of `m`.
pub fn catalog_get(name: &str, params: &BTreeMap<String, f64>) -> Result<CatalogEntry> {
    let info = catalog_list()
        .into_iter()
        .find(|c| c.name == name)
        .ok_or_else(|| Error::UnknownEntry(name.to_string()))?;
    let mut allowed: Vec<&str> = info.params.iter().map(|(n, _)| *n).collect();
    if name == "zeta_spline" {
        allowed.push("delta");
    }
    for key in params.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(Error::Spec(format!("`{name}` takes no parameter `{key}`")));
        }
    }
    let mut full = BTreeMap::new();
    for (n, d) in &info.params {
        if let Some(v) = params.get(*n).copied().or(*d) {
            full.insert(n.to_string(), v);
        }
    }
    if let Some(&d) = params.get("delta") {
        full.insert("delta".into(), d);
    }
    if name == "zeta_spline" {
        let m = match (params.get("m"), params.get("delta")) {
            (Some(_), Some(_)) => return Err(Error::Spec("give either `m` or `delta`, not both".into())),
            (Some(&m), None) => count("m", m)?,
            (None, Some(&d)) => zeta_level_for_delta(d)?,
            (None, None) => return Err(Error::Spec("`zeta_spline` requires `m` or `delta`".into())),
        };
        full.insert("m".into(), m as f64);
    }
    let get = |n: &str| {
        full.get(n)
            .copied()
            .ok_or_else(|| Error::Spec(format!("`{name}` requires parameter `{n}`")))
    };
    let claimed = |law| ClaimedRate {
        law,
        construction: info.construction.to_string(),
    };
    let (descriptor, natural_norm) = match name {
        "oscillating_step" => {
            let k = order(get("k")?)?;
            let delta = get("delta")?;
            (oscillating_step(k, delta)?, Some((JacobiWeight::UNIT, NormOrder::TWO)))
        }
        "heaviside" => (heaviside(), Some((JacobiWeight::UNIT, NormOrder::INF))),
        "truncated_power" => {
            let k = order(get("k")?)?;
            let (eps, beta) = (get("eps")?, get("beta")?);
            let p = NormOrder::new(get("p")?)?;
            (
                truncated_power(k, eps, beta, p)?,
                Some((JacobiWeight::new(0.0, beta), p)),
            )
        }
        "inverse_power" => {
            let beta = get("beta")?;
            (
                inverse_power(beta)?,
                Some((JacobiWeight::new(0.0, beta), NormOrder::INF)),
            )
        }
        "zeta_spline" => {
            let m = count("m", get("m")?)?;
            let (lambda, beta) = (get("lambda")?, get("beta")?);
            let p = NormOrder::new(get("p")?)?;
            (
                zeta_spline(m, lambda, beta, p)?,
                Some((JacobiWeight::new(0.0, beta), p)),
            )
        }
        "truncated_power_origin" => {
            let k = order(get("k")?)?;
            (truncated_power_origin(k), Some((JacobiWeight::UNIT, NormOrder::INF)))
        }
        "moving_truncated_power" => {
            let k = order(get("k")?)?;
            let n = count("n", get("n")?)?;
            (moving_truncated_power(k, n)?, None)
        }
        "constant" => {
            let c = get("c")?;
            let k = order(get("k")?)?;
            (constant(c, k)?, Some((JacobiWeight::UNIT, NormOrder::INF)))
        }
        _ => unreachable!(),
    };
    Ok(CatalogEntry {
        name: name.to_string(),
        params: full,
        descriptor,
        claimed_rate: claimed(info.law),
        natural_norm,
    })
}

fn count(name: &str, v: f64) -> Result<usize> {
    if v.fract() != 0.0 || !(v >= 1.0) || v > 1e9 {
        return Err(Error::param(name, v, "must be a positive integer"));
    }
    Ok(v as usize)
}

fn order(v: f64) -> Result<usize> {
    let k = count("k", v)?;
    if k > 12 {
        return Err(Error::param("k", v, "orders above 12 are not supported"));
    }
    Ok(k)
}

fn factorial_ratio(k: usize, r: usize) -> f64 {
    // (k-1)! / (k-1-r)!
    ((k - r)..k).map(|j| j as f64).product()
}

/// `scale (x - xi)_+^{k-1}` with exact derivatives up to order `k-1`.
fn truncated(name: String, k: usize, xi: f64, scale: f64) -> FunctionDescriptor {
    let base = move |x: f64, e: usize| {
        if x < xi || (x == xi && e > 0) {
            0.0
        } else {
            (x - xi).powi(e as i32)
        }
    };
    let mut f = FunctionDescriptor::new(name, move |x| scale * base(x, k - 1));
    for r in 1..k {
        let c = scale * factorial_ratio(k, r);
        f = f.with_derivative(move |x| c * base(x, k - 1 - r));
    }
    let hi = if xi < 1.0 { 0.0 } else { f64::INFINITY };
    f.with_exponents(f64::INFINITY, hi)
        .with_support(xi, 1.0)
        .with_breakpoints(vec![xi])
        .with_monotone(k, CertificateSource::Analytic)
}

/// `f_δ = (-1)^i` on `J_i = [kδi, kδ(i+1/2)]`, `0 ≤ i ≤ ⌊1/(2kδ)⌋`.
pub fn oscillating_step(k: usize, delta: f64) -> Result<FunctionDescriptor> {
    let kd = k as f64;
    if !(delta > 0.0 && delta <= 0.5 / kd) {
        return Err(Error::param("delta", delta, format!("must lie in (0, 1/(2k)] = (0, {}]", 0.5 / kd)));
    }
    let last = (1.0 / (2.0 * kd * delta)).floor() as usize;
    if last > 1 << 20 {
        return Err(Error::param("delta", delta, "too many steps"));
    }
    let step = kd * delta;
    let eval = move |x: f64| {
        if x < 0.0 {
            return 0.0;
        }
        let guess = (x / step).floor() as usize;
        // rounding may push the guess one interval too far
        for i in [guess.saturating_sub(1), guess] {
            if i <= last && x >= step * i as f64 && x <= step * (i as f64 + 0.5) {
                return if i % 2 == 0 { 1.0 } else { -1.0 };
            }
        }
        0.0
    };
    let mut bp = Vec::with_capacity(2 * last + 2);
    for i in 0..=last {
        bp.push(step * i as f64);
        bp.push(step * (i as f64 + 0.5));
    }
    let end = step * (last as f64 + 0.5);
    Ok(FunctionDescriptor::new(format!("oscillating_step(k={k},delta={delta})"), eval)
        .with_derivative(|_| 0.0)
        .with_support(0.0, end)
        .with_breakpoints(bp))
}

/// `χ_[0,1]`.
pub fn heaviside() -> FunctionDescriptor {
    FunctionDescriptor::new("heaviside", |x| if x >= 0.0 { 1.0 } else { 0.0 })
        .with_derivative(|_| 0.0)
        .with_exponents(f64::INFINITY, 0.0)
        .with_support(0.0, 1.0)
        .with_breakpoints(vec![0.0])
        .with_monotone(1, CertificateSource::Analytic)
}

/// `λ (x-1+ε)_+^{k-1}` with `λ = ε^{-k-β-1/p+1}`, so that
/// `‖w_{α,β} f‖_p ~ 1`.
pub fn truncated_power(k: usize, eps: f64, beta: f64, p: NormOrder) -> Result<FunctionDescriptor> {
    if !(eps > 0.0 && eps < 2.0) {
        return Err(Error::param("eps", eps, "must lie in (0, 2)"));
    }
    JacobiWeight::new(0.0, beta).check_in_jp(p)?;
    let lambda = eps.powf(-(k as f64) - beta - p.recip() + 1.0);
    if !lambda.is_finite() {
        return Err(Error::param("eps", eps, "normalization overflows"));
    }
    Ok(truncated(
        format!("truncated_power(k={k},eps={eps},beta={beta},p={p})"),
        k,
        1.0 - eps,
        lambda,
    ))
}

/// `(1-x)^{-β}`, clipped at `1 - 1e-12`.
pub fn inverse_power(beta: f64) -> Result<FunctionDescriptor> {
    if !(beta > 0.0 && beta < 1e3) {
        return Err(Error::param("beta", beta, "must be positive"));
    }
    let d = |x: f64| 1.0 - x.min(1.0 - INVERSE_POWER_CLIP);
    Ok(
        FunctionDescriptor::new(format!("inverse_power(beta={beta})"), move |x| d(x).powf(-beta))
            .with_derivative(move |x| beta * d(x).powf(-beta - 1.0))
            .with_derivative(move |x| beta * (beta + 1.0) * d(x).powf(-beta - 2.0))
            .with_exponents(0.0, -beta)
            .with_monotone(2, CertificateSource::Analytic),
    )
}

/// `m = ⌊log₂(1/δ)⌋ + 1`, so that `1/n < δ ≤ 2/n` with `n = 2^m`.
pub fn zeta_level_for_delta(delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::param("delta", delta, "must lie in (0, 1/2)"));
    }
    let mut m = (1.0 / delta).log2().floor() as i64 + 1;
    // guard the floor against rounding at exact powers of two
    let n = |m: i64| (2.0f64).powi(m as i32);
    while 1.0 / n(m) >= delta {
        m += 1;
    }
    while m > 1 && delta > 2.0 / n(m) {
        m -= 1;
    }
    Ok(m as usize)
}

/// `ζ_j = (j+2)^{-1} (ln(j+2))^{-λ}`.
pub fn zeta(j: usize, lambda: f64) -> f64 {
    let t = j as f64 + 2.0;
    1.0 / (t * t.ln().powf(lambda))
}

/// Levels `f_1..f_n` of the zeta spline (index 0 unused).
pub fn zeta_levels(m: usize, lambda: f64, beta: f64, p: NormOrder) -> Vec<f64> {
    let n = 1usize << m;
    let ip = p.recip();
    let mut levels = vec![0.0; n + 1];
    for j in 0..m.saturating_sub(1) {
        let v = 2f64.powf((2.0 * beta + 2.0 * ip) * (m - j) as f64) * zeta(j, lambda).powf(ip);
        for l in levels.iter_mut().take((1 << (j + 1)).min(n + 1)).skip(1 << j) {
            *l = v;
        }
    }
    levels
}

/// The step spline equal to `f_i` on `(t_i, t_{i-1}]` of the Chebyshev
/// partition with `n = 2^m`; `f_i = 0` for `i ≥ 2^{m-1}`.
pub fn zeta_spline(m: usize, lambda: f64, beta: f64, p: NormOrder) -> Result<FunctionDescriptor> {
    if !(2..=24).contains(&m) {
        return Err(Error::param("m", m as f64, "must lie in 2..=24"));
    }
    if !(lambda > 1.0) {
        return Err(Error::param("lambda", lambda, "must exceed 1"));
    }
    if !(beta > -p.recip()) && !(p.is_infinite() && beta >= 0.0) {
        return Err(Error::param("beta", beta, "must lie in J_p"));
    }
    let part = chebyshev_partition(1 << m)?;
    let levels = zeta_levels(m, lambda, beta, p);
    let half = 1usize << (m - 1);
    let knots = part.knots.clone();
    let eval = move |x: f64| {
        if x <= knots[half - 1] {
            return 0.0;
        }
        levels[locate(&knots, x)]
    };
    let bp = part.knots[1..half].to_vec();
    Ok(FunctionDescriptor::new(
        format!("zeta_spline(m={m},lambda={lambda},beta={beta},p={p})"),
        eval,
    )
    .with_derivative(|_| 0.0)
    .with_exponents(f64::INFINITY, 0.0)
    .with_support(part.knots[half - 1], 1.0)
    .with_breakpoints(bp)
    .with_monotone(1, CertificateSource::Analytic))
}

/// Index `i ∈ 1..=n` with `t_i < x ≤ t_{i-1}` (`x` in `(-1, 1]`).
fn locate(knots: &[f64], x: f64) -> usize {
    let n = knots.len() - 1;
    let mut i = ((x.clamp(-1.0, 1.0).acos() * n as f64 / PI).ceil() as usize).clamp(1, n);
    while i > 1 && x > knots[i - 1] {
        i -= 1;
    }
    while i < n && x <= knots[i] {
        i += 1;
    }
    i
}

/// `x_+^{k-1}`.
pub fn truncated_power_origin(k: usize) -> FunctionDescriptor {
    truncated(format!("truncated_power_origin(k={k})"), k, 0.0, 1.0)
}

/// `(x - ξ_n)_+^{k-1}` with `ξ_n = 1 - 2k²/n²` for `n ≥ 2k`, and `ξ_n = 0`
/// below that.
pub fn moving_truncated_power(k: usize, n: usize) -> Result<FunctionDescriptor> {
    Ok(truncated(
        format!("moving_truncated_power(k={k},n={n})"),
        k,
        moving_knot(k, n),
        1.0,
    ))
}

pub fn moving_knot(k: usize, n: usize) -> f64 {
    if n >= 2 * k {
        1.0 - 2.0 * (k * k) as f64 / (n * n) as f64
    } else {
        0.0
    }
}

/// The constant `c`, declared k-monotone.
pub fn constant(c: f64, k: usize) -> Result<FunctionDescriptor> {
    if !c.is_finite() {
        return Err(Error::param("c", c, "must be finite"));
    }
    let mut f = FunctionDescriptor::new(format!("constant(c={c})"), move |_| c)
        .with_derivative(|_| 0.0)
        .with_polynomial_degree(0);
    f = f.with_monotone(k, CertificateSource::Analytic);
    Ok(f)
}

/// Knots `t_i = cos(iπ/n)`, `i = 0..n`, and intervals `I_i = [t_i, t_{i-1}]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChebyshevPartition {
    pub n: usize,
    pub knots: Vec<f64>,
}

pub fn chebyshev_partition(n: usize) -> Result<ChebyshevPartition> {
    if n < 2 {
        return Err(Error::param("n", n as f64, "partition needs n >= 2"));
    }
    let mut knots: Vec<f64> = (0..=n).map(|i| (i as f64 * PI / n as f64).cos()).collect();
    knots[0] = 1.0;
    knots[n] = -1.0;
    if n.is_multiple_of(2) {
        knots[n / 2] = 0.0;
    }
    // exact symmetry
    for i in 0..n / 2 {
        knots[n - i] = -knots[i];
    }
    let part = ChebyshevPartition { n, knots };
    if let Some(i) = part.ratio_violation() {
        return Err(Error::Degenerate(format!(
            "interval lengths |I_{i}| and |I_{}| differ by more than a factor 3",
            i - 1
        )));
    }
    Ok(part)
}

impl ChebyshevPartition {
    /// `I_i = [t_i, t_{i-1}]`, `1 ≤ i ≤ n`.
    pub fn interval(&self, i: usize) -> (f64, f64) {
        (self.knots[i], self.knots[i - 1])
    }

    pub fn len(&self, i: usize) -> f64 {
        self.knots[i - 1] - self.knots[i]
    }

    /// First `i` with `|I_i|` outside `[|I_{i-1}|/3, 3|I_{i-1}|]`.
    pub fn ratio_violation(&self) -> Option<usize> {
        (2..=self.n).find(|&i| {
            let (a, b) = (self.len(i), self.len(i - 1));
            !(a >= b / 3.0 && a <= 3.0 * b)
        })
    }

    /// Largest violation of `2φ(x)/n ≤ |I_i| ≤ 5φ(x)/n` over `samples`
    /// points of each `I_i`, `2 ≤ i ≤ n-1`, as a relative excess
    /// (nonpositive when the bounds hold).
    pub fn length_bound_excess(&self, samples: usize) -> f64 {
        let n = self.n as f64;
        let mut worst = f64::NEG_INFINITY;
        for i in 2..self.n {
            let (a, b) = self.interval(i);
            let len = self.len(i);
            for s in 0..samples {
                let x = a + (b - a) * s as f64 / (samples - 1).max(1) as f64;
                let f = phi(x);
                worst = worst.max((2.0 * f / n - len) / len).max((len - 5.0 * f / n) / len);
            }
        }
        worst
    }

    /// Largest relative excess of `ρ_n(x) = φ(x)/n + 1/n²` over `|I_i|` at
    /// sample points of every interval.
    pub fn rho_excess(&self, samples: usize) -> f64 {
        let n = self.n as f64;
        let mut worst = f64::NEG_INFINITY;
        for i in 1..=self.n {
            let (a, b) = self.interval(i);
            let len = self.len(i);
            for s in 0..samples {
                let x = a + (b - a) * s as f64 / (samples - 1).max(1) as f64;
                worst = worst.max((phi(x) / n + 1.0 / (n * n) - len) / len);
            }
        }
        worst
    }
}

/// `D_i(h) = [(t_i ∓ (h/2) sqrt(1 - t_i² + h²/4)) / (1 + h²/4)]`.
pub fn d_interval(part: &ChebyshevPartition, i: usize, h: f64) -> Result<(f64, f64)> {
    if i == 0 || i >= part.n {
        return Err(Error::param("i", i as f64, format!("must lie in 1..={}", part.n - 1)));
    }
    if !(h > 0.0) {
        return Err(Error::param("h", h, "must be positive"));
    }
    Ok(d_interval_at(part.knots[i], h))
}

pub fn d_interval_at(t: f64, h: f64) -> (f64, f64) {
    let q = 1.0 + h * h / 4.0;
    let r = 0.5 * h * (1.0 - t * t + h * h / 4.0).sqrt();
    ((t - r) / q, (t + r) / q)
}

/// Which of the three `D_i(h)` properties hold for all `1 ≤ i ≤ n-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DIntervalReport {
    /// `D_i(h) ∩ D_{i-1}(h) = ∅` for `2 ≤ i ≤ n-1`.
    pub disjoint: bool,
    /// `D_i(h) ⊂ [-1+2h², 1-2h²]`.
    pub contained: bool,
    /// `|D_i(h)| ≥ h φ(t_i) / 2`.
    pub long_enough: bool,
}

pub fn d_interval_report(part: &ChebyshevPartition, h: f64) -> Result<DIntervalReport> {
    let mut rep = DIntervalReport {
        disjoint: true,
        contained: true,
        long_enough: true,
    };
    let mut prev: Option<(f64, f64)> = None;
    for i in 1..part.n {
        let d = d_interval(part, i, h)?;
        if let Some(p) = prev {
            // D_{i-1} lies to the right of D_i
            if d.1 >= p.0 {
                rep.disjoint = false;
            }
        }
        if d.0 < -1.0 + 2.0 * h * h || d.1 > 1.0 - 2.0 * h * h {
            rep.contained = false;
        }
        if d.1 - d.0 < h * phi(part.knots[i]) / 2.0 * (1.0 - 1e-12) {
            rep.long_enough = false;
        }
        prev = Some(d);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::differences::{certify_k_monotone, MONOTONE_TOL};
    use crate::quadrature::{weighted_norm, QuadratureConfig};

    fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn heaviside_entry() {
        let e = catalog_get("heaviside", &BTreeMap::new()).unwrap();
        assert_eq!(e.descriptor.support, Some((0.0, 1.0)));
        assert_eq!(e.descriptor.monotone_order.unwrap().k, 1);
        assert_eq!(e.descriptor.eval(0.5), 1.0);
        assert_eq!(e.descriptor.eval(-0.5), 0.0);
    }

    #[test]
    fn truncated_power_normalization() {
        let e = catalog_get(
            "truncated_power",
            &params(&[("k", 2.0), ("eps", 0.08), ("beta", 0.0), ("p", f64::INFINITY)]),
        )
        .unwrap();
        assert!((e.descriptor.eval(1.0) - 1.0).abs() < 1e-12);
        assert!((e.descriptor.eval_derivative(1, 0.99).unwrap() - 12.5).abs() < 1e-12);
        assert_eq!(e.descriptor.eval(0.9), 0.0);
    }

    #[test]
    fn oscillating_step_norms() {
        let f = oscillating_step(1, 1.0 / 16.0).unwrap();
        let quad = QuadratureConfig::default();
        let sup = weighted_norm(&f, JacobiWeight::UNIT, NormOrder::INF, (-1.0, 1.0), &quad).unwrap();
        let l1 = weighted_norm(&f, JacobiWeight::UNIT, NormOrder::ONE, (-1.0, 1.0), &quad).unwrap();
        assert_eq!(sup, 1.0);
        assert!((0.2..=0.6).contains(&l1), "{l1}");
        // nine intervals of length 1/32
        assert!((l1 - 9.0 / 32.0).abs() < 1e-10, "{l1}");
        // closed intervals, ties at the ends
        assert_eq!(f.eval(1.0 / 16.0), -1.0);
        assert_eq!(f.eval(1.5 / 16.0), -1.0);
        assert_eq!(f.eval(1.6 / 16.0), 0.0);
        assert_eq!(f.eval(8.5 / 16.0), 1.0);
        assert_eq!(f.eval(8.6 / 16.0), 0.0);
    }

    #[test]
    fn unknown_and_out_of_range() {
        assert!(matches!(catalog_get("nope", &BTreeMap::new()), Err(Error::UnknownEntry(_))));
        assert!(matches!(
            catalog_get("oscillating_step", &params(&[("delta", 0.9)])),
            Err(Error::ParamRange { .. })
        ));
        assert!(matches!(
            catalog_get("inverse_power", &params(&[("beta", -1.0)])),
            Err(Error::ParamRange { .. })
        ));
        assert!(catalog_get("heaviside", &params(&[("k", 1.0)])).is_err());
    }

    #[test]
    fn partition_knots() {
        let p = chebyshev_partition(2).unwrap();
        assert_eq!(p.knots, vec![1.0, 0.0, -1.0]);
        let p = chebyshev_partition(4).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for (a, b) in p.knots.iter().zip([1.0, r, 0.0, -r, -1.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        let p = chebyshev_partition(100).unwrap();
        assert!(p.ratio_violation().is_none());
        assert!(p.length_bound_excess(11) <= 0.0);
        assert!(p.rho_excess(11) <= 0.0);
        assert!(chebyshev_partition(1).is_err());
    }

    #[test]
    fn d_intervals() {
        let (a, b) = d_interval_at(0.0, 0.2);
        let want = 0.1 * 1.01f64.sqrt() / 1.01;
        assert!((b - want).abs() < 1e-15 && (a + want).abs() < 1e-15);
        assert!((want - 0.09951).abs() < 1e-5);
        let p = chebyshev_partition(64).unwrap();
        assert!(d_interval_report(&p, 1.0 / 64.0).unwrap().disjoint);
        let r = d_interval_report(&p, 1.0 / 128.0).unwrap();
        assert!(r.long_enough && r.contained && r.disjoint);
        assert!(d_interval(&p, 0, 0.1).is_err());
        assert!(d_interval(&p, 64, 0.1).is_err());
    }

    #[test]
    fn zeta_spline_shape() {
        let f = zeta_spline(5, 1.5, 0.0, NormOrder::TWO).unwrap();
        let n = 32;
        let part = chebyshev_partition(n).unwrap();
        let levels = zeta_levels(5, 1.5, 0.0, NormOrder::TWO);
        for i in 1..=n {
            let (a, b) = part.interval(i);
            // value on (t_i, t_{i-1}]
            assert_eq!(f.eval(b), levels[i], "i = {i}");
            assert_eq!(f.eval(0.5 * (a + b)), levels[i]);
        }
        let mut last = 0.0;
        for s in 0..=2000 {
            let x = -1.0 + 2.0 * s as f64 / 2000.0;
            let v = f.eval(x);
            assert!(v >= last);
            if x <= 0.0 {
                assert_eq!(v, 0.0);
            }
            last = v;
        }
        assert_eq!(zeta_level_for_delta(1.0 / 16.0).unwrap(), 5);
        assert_eq!(zeta_level_for_delta(0.1).unwrap(), 4);
    }

    #[test]
    fn moving_knot_values() {
        assert_eq!(moving_knot(2, 10), 1.0 - 8.0 / 100.0);
        assert_eq!(moving_knot(2, 3), 0.0);
        let f = moving_truncated_power(3, 20).unwrap();
        let xi = moving_knot(3, 20);
        assert!((f.eval(1.0) - (1.0 - xi).powi(2)).abs() < 1e-15);
        assert!((f.eval_derivative(2, 0.99).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn members_certify() {
        let cases: Vec<(&str, BTreeMap<String, f64>)> = vec![
            ("heaviside", BTreeMap::new()),
            ("truncated_power", params(&[("k", 3.0), ("eps", 0.1), ("beta", 0.5), ("p", 2.0)])),
            ("inverse_power", params(&[("beta", 0.5)])),
            ("zeta_spline", params(&[("m", 6.0)])),
            ("truncated_power_origin", params(&[("k", 2.0)])),
            ("moving_truncated_power", params(&[("k", 2.0), ("n", 16.0)])),
            ("constant", params(&[("c", 3.0), ("k", 4.0)])),
        ];
        for (name, p) in cases {
            let e = catalog_get(name, &p).unwrap();
            let k = e.descriptor.monotone_order.unwrap().k;
            let v = certify_k_monotone(&e.descriptor, k, 500, 42, MONOTONE_TOL).unwrap();
            assert!(v.is_certified(), "{name}: {v:?}");
        }
    }
}
