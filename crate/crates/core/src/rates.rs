//! Sharp-rate tables `Υ_δ(k,q,p)` and the polynomial rates, log–log rate
//! fitting, sweeps over δ and n, and the ratio checks for the Jackson,
//! inverse, derivative-transfer and embedding inequalities.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::approx::{best_approx, default_grid_size};
use crate::differences::{certify_k_monotone, MONOTONE_TOL};
use crate::error::{Error, Result};
use crate::extremals::CatalogEntry;
use crate::function::FunctionDescriptor;
use crate::moduli::{dt_modulus, dt_modulus_sweep, ModulusRequest, ModulusResult};
use crate::par;
use crate::quadrature::{weighted_norm, QuadratureConfig};
use crate::weight::{JacobiWeight, NormOrder};

/// Fewest points accepted by [`fit_rate`].
pub const MIN_FIT_POINTS: usize = 5;
/// `power_log` is preferred only if its `residual_max` is at most this
/// fraction of the `pure_power` one.
pub const LOG_PREFERENCE: f64 = 0.75;
/// Relative singular-value cutoff for a rank-deficient design.
pub const FIT_RANK_TOL: f64 = 1e-10;
/// Ratio checks pass when `max/median` stays below this.
pub const MAX_OVER_MEDIAN: f64 = 20.0;
/// and the log–log trend slope of the ratios lies in `[-TREND_BOUND, TREND_BOUND]`.
pub const TREND_BOUND: f64 = 0.3;
/// Random node sets per certification of a family member.
pub const CERT_TRIALS: usize = 200;
pub const DEFAULT_SEED: u64 = 42;

/// `δ = 2^{-j}`, `j = 3..=10`.
pub fn default_deltas() -> Vec<f64> {
    dyadic_deltas(3, 10)
}

/// `2^{-j}` for `j = from..=to`, decreasing.
pub fn dyadic_deltas(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|j| 2f64.powi(-j)).collect()
}

/// Dyadic `δ ≤ 1/(4k)` down to `2^{-to}`, the range used by the ratio
/// checks; near the largest admissible `δ = 1/(2k)` the boundary strips
/// cover a third of the interval and the constants are not yet settled.
pub fn check_deltas(k: usize, to: i32) -> Vec<f64> {
    let from = (4.0 * k as f64).log2().ceil() as i32;
    dyadic_deltas(from, to.max(from))
}

pub const DEFAULT_NS: [usize; 9] = [4, 6, 8, 12, 16, 24, 32, 48, 64];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpsilonSpec {
    pub k: usize,
    pub q: NormOrder,
    pub p: NormOrder,
    pub alpha: f64,
    pub beta: f64,
}

/// Which branch of `Υ` (and of the polynomial rate) applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpsilonCase {
    /// `k ≥ 2`, `(k,q,p) ≠ (2,1,∞)`: `δ^{2/q-2/p}`.
    Power,
    /// `(2,1,∞)`, `(α,β) ≠ (0,0)`: `δ²|ln δ|`.
    SquareLog,
    /// `(2,1,∞)`, `(α,β) = (0,0)`: `δ²`.
    Square,
    /// `k = 1`, `p < 2q`: `δ^{2/q-2/p}`.
    FirstPower,
    /// `k = 1`, `p = 2q`: `δ^{1/q}|ln δ|^{1/(2q)}`.
    FirstLog,
    /// `k = 1`, `p > 2q`: `δ^{1/q}`.
    FirstInverseQ,
}

impl UpsilonSpec {
    pub fn new(k: usize, q: NormOrder, p: NormOrder, alpha: f64, beta: f64) -> Result<Self> {
        let s = UpsilonSpec { k, q, p, alpha, beta };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Spec("k must be >= 1".into()));
        }
        if !(self.q.value() < self.p.value()) {
            return Err(Error::Spec(format!("need q < p, got q = {}, p = {}", self.q, self.p)));
        }
        if !(self.alpha.is_finite() && self.beta.is_finite()) {
            return Err(Error::Spec("alpha and beta must be finite".into()));
        }
        Ok(())
    }

    pub fn case(&self) -> UpsilonCase {
        let (q, p) = (self.q.value(), self.p.value());
        if self.k == 1 {
            if p < 2.0 * q {
                UpsilonCase::FirstPower
            } else if p == 2.0 * q {
                UpsilonCase::FirstLog
            } else {
                UpsilonCase::FirstInverseQ
            }
        } else if self.k == 2 && q == 1.0 && self.p.is_infinite() {
            if self.alpha == 0.0 && self.beta == 0.0 {
                UpsilonCase::Square
            } else {
                UpsilonCase::SquareLog
            }
        } else {
            UpsilonCase::Power
        }
    }

    /// `(a, b)` with `Υ_δ = δ^a |ln δ|^b`.
    pub fn exponents(&self) -> (f64, f64) {
        let (q, p) = (self.q.value(), self.p.value());
        match self.case() {
            UpsilonCase::Power | UpsilonCase::FirstPower => (2.0 / q - 2.0 / p, 0.0),
            UpsilonCase::SquareLog => (2.0, 1.0),
            UpsilonCase::Square => (2.0, 0.0),
            UpsilonCase::FirstLog => (1.0 / q, 1.0 / (2.0 * q)),
            UpsilonCase::FirstInverseQ => (1.0 / q, 0.0),
        }
    }
}

/// `Υ_δ^{α,β}(k,q,p)` for `0 < δ < 1/4`.
pub fn upsilon(spec: &UpsilonSpec, delta: f64) -> Result<f64> {
    spec.validate()?;
    if !(delta > 0.0 && delta < 0.25) {
        return Err(Error::param("delta", delta, "must lie in (0, 1/4)"));
    }
    let (q, p) = (spec.q.value(), spec.p.value());
    Ok(match spec.case() {
        UpsilonCase::Power | UpsilonCase::FirstPower => delta.powf(2.0 / q - 2.0 / p),
        UpsilonCase::SquareLog => delta.powi(2) * delta.ln().abs(),
        UpsilonCase::Square => delta.powi(2),
        UpsilonCase::FirstLog => delta.powf(1.0 / q) * delta.ln().abs().powf(1.0 / (2.0 * q)),
        UpsilonCase::FirstInverseQ => delta.powf(1.0 / q),
    })
}

/// Rate of the best approximation of the unit-sphere class by `Π_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolyRate {
    Exact { value: f64 },
    /// Lower and upper rates where a log factor is not known to be sharp.
    Bracket { lower: f64, upper: f64 },
}

impl PolyRate {
    pub fn lower(&self) -> f64 {
        match *self {
            PolyRate::Exact { value } => value,
            PolyRate::Bracket { lower, .. } => lower,
        }
    }

    pub fn upper(&self) -> f64 {
        match *self {
            PolyRate::Exact { value } => value,
            PolyRate::Bracket { upper, .. } => upper,
        }
    }
}

pub fn mpoly_rate(spec: &UpsilonSpec, n: usize) -> Result<PolyRate> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Spec("n must be >= 1".into()));
    }
    if spec.alpha < 0.0 || spec.beta < 0.0 {
        return Err(Error::Spec("the polynomial rates need alpha, beta >= 0".into()));
    }
    let nf = n as f64;
    let (q, p) = (spec.q.value(), spec.p.value());
    let ln = (nf + 1.0).ln();
    Ok(match spec.case() {
        UpsilonCase::Power | UpsilonCase::FirstPower => PolyRate::Exact {
            value: nf.powf(-2.0 / q + 2.0 / p),
        },
        UpsilonCase::Square => PolyRate::Exact { value: nf.powi(-2) },
        UpsilonCase::SquareLog => PolyRate::Bracket {
            lower: nf.powi(-2),
            upper: nf.powi(-2) * ln,
        },
        UpsilonCase::FirstLog => PolyRate::Bracket {
            lower: nf.powf(-1.0 / q),
            upper: nf.powf(-1.0 / q) * ln.powf(1.0 / (2.0 * q)),
        },
        UpsilonCase::FirstInverseQ => PolyRate::Exact {
            value: nf.powf(-1.0 / q),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub module: String,
    pub op: String,
    pub request_hash: String,
}

impl Provenance {
    /// Hash of a canonical textual rendering of the request.
    pub fn new(op: &str, request: &str) -> Self {
        let digest = Sha256::digest(format!("rates/{op}/{request}").as_bytes());
        let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        Provenance {
            module: "rates".into(),
            op: op.into(),
            request_hash: hex,
        }
    }
}

/// Ordered `(abscissa, value)` pairs; abscissae are `δ` or `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<(f64, f64)>,
    pub provenance: Provenance,
}

impl SweepResult {
    pub fn new(points: Vec<(f64, f64)>, provenance: Provenance) -> Result<Self> {
        let s = SweepResult { points, provenance };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let inc = self.points.windows(2).all(|w| w[0].0 < w[1].0);
        let dec = self.points.windows(2).all(|w| w[0].0 > w[1].0);
        if !(inc || dec) {
            return Err(Error::Spec("sweep abscissae must be strictly monotone".into()));
        }
        if let Some(&(x, v)) = self.points.iter().find(|(_, v)| !(*v >= 0.0)) {
            return Err(Error::Spec(format!("negative or NaN sweep value {v} at {x}")));
        }
        Ok(())
    }

    pub fn abscissae(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateModel {
    PurePower,
    PowerLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Coefficient of `ln t`.
    pub exponent: f64,
    /// Coefficient of `ln|ln t|`.
    pub log_power: f64,
    pub constant: f64,
    pub r_squared: f64,
    /// Largest absolute residual in `ln v`.
    pub residual_max: f64,
    pub model: RateModel,
}

/// Least squares of `ln v` on `{1, ln t}` or `{1, ln t, ln|ln t|}`.
pub fn fit_rate(sweep: &SweepResult, model: RateModel) -> Result<RateFit> {
    fit_points(&sweep.points, model)
}

pub fn fit_points(points: &[(f64, f64)], model: RateModel) -> Result<RateFit> {
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::DegenerateFit(format!(
            "{} points, need at least {MIN_FIT_POINTS}",
            points.len()
        )));
    }
    let cols = match model {
        RateModel::PurePower => 2,
        RateModel::PowerLog => 3,
    };
    let m = points.len();
    let mut a = DMatrix::<f64>::zeros(m, cols);
    let mut y = DVector::<f64>::zeros(m);
    for (i, &(t, v)) in points.iter().enumerate() {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::DegenerateFit(format!("abscissa {t} is not positive")));
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::DegenerateFit(format!("value {v} at {t} is not positive")));
        }
        let lt = t.ln();
        a[(i, 0)] = 1.0;
        a[(i, 1)] = lt;
        if cols == 3 {
            if lt == 0.0 {
                return Err(Error::DegenerateFit("abscissa 1 has no log factor".into()));
            }
            a[(i, 2)] = lt.abs().ln();
        }
        y[i] = v.ln();
    }
    // scale columns so the rank test is unit free
    let norms: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    if norms.contains(&0.0) {
        return Err(Error::DegenerateFit("zero column in design".into()));
    }
    let mut s = a.clone();
    for (j, &n) in norms.iter().enumerate() {
        s.column_mut(j).scale_mut(1.0 / n);
    }
    let svd = s.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > FIT_RANK_TOL * smax) {
        return Err(Error::DegenerateFit(format!(
            "design matrix is rank deficient (singular values {smin:e} / {smax:e})"
        )));
    }
    let z = svd
        .solve(&y, 0.0)
        .map_err(|e| Error::DegenerateFit(e.to_string()))?;
    let coef: Vec<f64> = (0..cols).map(|j| z[j] / norms[j]).collect();
    let fitted = &a * DVector::from_vec(coef.clone());
    let resid = &y - &fitted;
    let mean = y.mean();
    let ss_res = resid.norm_squared();
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(RateFit {
        exponent: coef[1],
        log_power: if cols == 3 { coef[2] } else { 0.0 },
        constant: coef[0].exp(),
        r_squared,
        residual_max: resid.amax(),
        model,
    })
}

/// Fits both models and keeps `power_log` only when it cuts
/// `residual_max` to at most [`LOG_PREFERENCE`] of the pure power fit.
pub fn fit_rate_auto(sweep: &SweepResult) -> Result<RateFit> {
    let pure = fit_rate(sweep, RateModel::PurePower)?;
    match fit_rate(sweep, RateModel::PowerLog) {
        Ok(log) if log.residual_max <= LOG_PREFERENCE * pure.residual_max => Ok(log),
        _ => Ok(pure),
    }
}

/// `v_j / (C r_j)` with `C` fixed on the first point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub constant: f64,
    pub ratios: Vec<f64>,
    /// `max_j ratio_j - 1`: how far the sweep climbs above the calibration.
    pub upward_drift: f64,
    /// `1 - min_j ratio_j`: how far it falls below.
    pub downward_drift: f64,
    /// `min_j ratio_j / max_j ratio_j`.
    pub spread: f64,
}

pub fn calibrate(values: &[f64], rates: &[f64]) -> Result<Calibration> {
    if values.is_empty() || values.len() != rates.len() {
        return Err(Error::Spec("calibration needs matching nonempty lists".into()));
    }
    if !(rates.iter().all(|&r| r > 0.0 && r.is_finite())) || !(values[0] > 0.0) {
        return Err(Error::Division("calibration against a vanishing rate".into()));
    }
    let c = values[0] / rates[0];
    let ratios: Vec<f64> = values.iter().zip(rates).map(|(v, r)| v / (c * r)).collect();
    let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(Calibration {
        constant: c,
        upward_drift: max - 1.0,
        downward_drift: 1.0 - min,
        spread: min / max,
        ratios,
    })
}

/// What a family sweep measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub k: usize,
    pub weight: JacobiWeight,
    pub q: NormOrder,
    /// Members are normalized to unit `‖w f‖_p`.
    pub p: NormOrder,
    pub h_samples: usize,
    pub quad: QuadratureConfig,
}

impl SweepSpec {
    pub fn new(k: usize, weight: JacobiWeight, q: NormOrder, p: NormOrder) -> Self {
        let base = ModulusRequest::new(k, 0.0, weight, q);
        SweepSpec {
            k,
            weight,
            q,
            p,
            h_samples: base.h_samples,
            quad: base.quad,
        }
    }

    pub fn refined(&self) -> Self {
        let r = self.request(0.0).refined();
        SweepSpec {
            h_samples: r.h_samples,
            quad: r.quad,
            ..self.clone()
        }
    }

    pub fn request(&self, delta: f64) -> ModulusRequest {
        ModulusRequest {
            h_samples: self.h_samples,
            quad: self.quad,
            ..ModulusRequest::new(self.k, delta, self.weight, self.q)
        }
    }
}

/// A family sweep with the per-cell modulus components and norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySweep {
    /// `δ ↦ ω(f_δ/‖w f_δ‖_p, δ)`.
    pub result: SweepResult,
    pub moduli: Vec<ModulusResult>,
    pub norms: Vec<f64>,
}

impl FamilySweep {
    /// The same sweep restricted to the main part `Ω`.
    pub fn main_part(&self) -> SweepResult {
        SweepResult {
            points: self
                .result
                .points
                .iter()
                .zip(&self.moduli)
                .map(|(&(d, _), m)| (d, m.main))
                .collect(),
            provenance: self.result.provenance.clone(),
        }
    }
}

/// For each `δ`: build the `δ`-indexed member, certify it at its declared
/// order, normalize to unit `‖w f‖_p`, and measure `dt_modulus`.
pub fn family_sup_sweep<F>(name: &str, family: F, spec: &SweepSpec, deltas: &[f64]) -> Result<FamilySweep>
where
    F: Fn(f64) -> Result<CatalogEntry> + Sync + Send,
{
    let cells = par::try_map(deltas, |&d| {
        let entry = family(d)?;
        let f = &entry.descriptor;
        if let Some(m) = f.monotone_order {
            let v = certify_k_monotone(f, m.k, CERT_TRIALS, DEFAULT_SEED, MONOTONE_TOL)?;
            if !v.is_certified() {
                return Err(Error::Spec(format!(
                    "k-monotone class membership: `{}` at delta = {d} is not {}-monotone ({v:?})",
                    entry.name, m.k
                )));
            }
        }
        let norm = weighted_norm(f, spec.weight, spec.p, (-1.0, 1.0), &spec.quad)?;
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Division(format!("‖w f‖_p = {norm} for `{}`", entry.name)));
        }
        let m = dt_modulus(&f.scaled(1.0 / norm), &spec.request(d))?;
        Ok((m, norm))
    })?;
    let points = deltas.iter().zip(&cells).map(|(&d, c)| (d, c.0.total)).collect();
    let request = format!("{name}|{spec:?}|{deltas:?}");
    Ok(FamilySweep {
        result: SweepResult::new(points, Provenance::new("family_sup_sweep", &request))?,
        moduli: cells.iter().map(|c| c.0).collect(),
        norms: cells.iter().map(|c| c.1).collect(),
    })
}

/// `δ ↦ ω(f, δ)` for a fixed function.
pub fn modulus_sweep(f: &FunctionDescriptor, base: &ModulusRequest, deltas: &[f64]) -> Result<(SweepResult, Vec<ModulusResult>)> {
    let moduli = dt_modulus_sweep(f, base, deltas)?;
    let points = deltas.iter().zip(&moduli).map(|(&d, m)| (d, m.total)).collect();
    let request = format!("{}|{base:?}|{deltas:?}", f.name);
    Ok((SweepResult::new(points, Provenance::new("modulus_sweep", &request))?, moduli))
}

/// `n ↦ E_n(f)_{w,q}` on the default grids.
pub fn approx_sweep(f: &FunctionDescriptor, w: JacobiWeight, q: NormOrder, ns: &[usize]) -> Result<SweepResult> {
    let errs = best_errors(f, w, q, ns)?;
    let points = ns.iter().zip(errs).map(|(&n, e)| (n as f64, e)).collect();
    let request = format!("{}|{w:?}|{q}|{ns:?}", f.name);
    SweepResult::new(points, Provenance::new("approx_sweep", &request))
}

fn best_errors(f: &FunctionDescriptor, w: JacobiWeight, q: NormOrder, ns: &[usize]) -> Result<Vec<f64>> {
    par::try_map(ns, |&n| best_approx(f, n, w, q, default_grid_size(n)).map(|r| r.error))
}

/// `n ↦ E_n(f_n)_{w,q} / (‖w f_n‖_p n^{-2/q+2/p})` for the moving truncated
/// powers `f_n`, calibrated on the first `n`.
pub fn moving_power_lower_bound(
    k: usize,
    w: JacobiWeight,
    q: NormOrder,
    p: NormOrder,
    ns: &[usize],
) -> Result<Calibration> {
    check_weight(w)?;
    UpsilonSpec::new(k, q, p, w.alpha, w.beta)?;
    let quad = QuadratureConfig::default();
    let cells = par::try_map(ns, |&n| {
        let f = crate::extremals::moving_truncated_power(k, n)?;
        let e = best_approx(&f, n, w, q, default_grid_size(n))?.error;
        let norm = weighted_norm(&f, w, p, (-1.0, 1.0), &quad)?;
        Ok::<_, Error>((e / norm, (n as f64).powf(-2.0 * q.recip() + 2.0 * p.recip())))
    })?;
    let values: Vec<f64> = cells.iter().map(|c| c.0).collect();
    let rates: Vec<f64> = cells.iter().map(|c| c.1).collect();
    calibrate(&values, &rates)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub max_over_median: f64,
    /// Slope of `ln ratio` against `ln abscissa`.
    pub trend_slope: f64,
    pub pass: bool,
}

/// Ratios of the two sides of an inequality along a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub check: String,
    /// `(abscissa, lhs, rhs)`; the ratio is `lhs / rhs`.
    pub sides: Vec<(f64, f64, f64)>,
    pub ratios: Vec<(f64, f64)>,
    /// `None` when the list is empty (both sides vanish identically).
    pub summary: Option<RatioSummary>,
}

impl RatioReport {
    fn new(check: &str, sides: Vec<(f64, f64, f64)>) -> Self {
        let ratios: Vec<(f64, f64)> = sides
            .iter()
            .map(|&(t, l, r)| (t, if l == 0.0 && r == 0.0 { 0.0 } else { l / r }))
            .collect();
        let summary = summarize(&ratios);
        RatioReport {
            check: check.into(),
            sides,
            ratios,
            summary,
        }
    }

    pub fn empty(check: &str) -> Self {
        RatioReport {
            check: check.into(),
            sides: Vec::new(),
            ratios: Vec::new(),
            summary: None,
        }
    }

    /// Empty reports pass vacuously.
    pub fn passed(&self) -> bool {
        self.summary.is_none_or(|s| s.pass)
    }
}

/// Boundedness summary of `(abscissa, ratio)` pairs.
pub fn summarize(ratios: &[(f64, f64)]) -> Option<RatioSummary> {
    if ratios.is_empty() {
        return None;
    }
    let mut r: Vec<f64> = ratios.iter().map(|p| p.1).collect();
    let finite = r.iter().all(|v| v.is_finite() && *v >= 0.0);
    r.sort_by(|a, b| a.total_cmp(b));
    let mid = r.len() / 2;
    let median = if r.len() % 2 == 1 {
        r[mid]
    } else {
        0.5 * (r[mid - 1] + r[mid])
    };
    let max = r[r.len() - 1];
    let max_over_median = if max == 0.0 { 1.0 } else { max / median };
    let pos: Vec<(f64, f64)> = ratios
        .iter()
        .filter(|p| p.1 > 0.0 && p.1.is_finite())
        .map(|p| (p.0.ln(), p.1.ln()))
        .collect();
    let trend_slope = if pos.len() >= 2 { slope(&pos) } else { 0.0 };
    let pass = finite && max_over_median <= MAX_OVER_MEDIAN && trend_slope.abs() <= TREND_BOUND;
    Some(RatioSummary {
        max_over_median,
        trend_slope,
        pass,
    })
}

/// Ordinary least-squares slope.
pub fn slope(xy: &[(f64, f64)]) -> f64 {
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

fn in_low_polys(f: &FunctionDescriptor, k: usize) -> bool {
    f.polynomial_degree.is_some_and(|d| d < k)
}

fn check_weight(w: JacobiWeight) -> Result<()> {
    if w.alpha < 0.0 || w.beta < 0.0 {
        return Err(Error::Spec(format!(
            "the ratio checks need alpha, beta >= 0, got ({}, {})",
            w.alpha, w.beta
        )));
    }
    Ok(())
}

/// `E_n(f) / ω^k(f, 1/n)` for the `n ≥ 4k` of `ns` (see [`check_deltas`]).
pub fn jackson_check(f: &FunctionDescriptor, k: usize, w: JacobiWeight, q: NormOrder, ns: &[usize]) -> Result<RatioReport> {
    check_weight(w)?;
    if in_low_polys(f, k) {
        return Ok(RatioReport::empty("jackson"));
    }
    let ns: Vec<usize> = ns.iter().copied().filter(|&n| n >= 4 * k).collect();
    let deltas: Vec<f64> = ns.iter().map(|&n| 1.0 / n as f64).collect();
    let moduli = dt_modulus_sweep(f, &ModulusRequest::new(k, 0.5 / k as f64, w, q), &deltas)?;
    let errs = best_errors(f, w, q, &ns)?;
    let sides = ns
        .iter()
        .zip(errs)
        .zip(&moduli)
        .map(|((&n, e), m)| (n as f64, e, m.total))
        .collect();
    Ok(RatioReport::new("jackson", sides))
}

/// `ω^k(f, δ) / (δ^k Σ_{0≤i<1/δ} (i+1)^{k-1} E_i(f))`.
pub fn inverse_check(f: &FunctionDescriptor, k: usize, w: JacobiWeight, q: NormOrder, deltas: &[f64]) -> Result<RatioReport> {
    check_weight(w)?;
    if in_low_polys(f, k) {
        return Ok(RatioReport::empty("inverse"));
    }
    let count = |d: f64| (1.0 / d).ceil() as usize;
    let top = deltas.iter().map(|&d| count(d)).max().unwrap_or(0);
    if top > 201 {
        return Err(Error::Spec("inverse_check needs E_i beyond degree 200".into()));
    }
    let is: Vec<usize> = (0..top).collect();
    let errs = best_errors(f, w, q, &is)?;
    let moduli = dt_modulus_sweep(f, &ModulusRequest::new(k, 0.5 / k as f64, w, q), deltas)?;
    let sides = deltas
        .iter()
        .zip(&moduli)
        .map(|(&d, m)| {
            let s: f64 = (0..count(d)).map(|i| ((i + 1) as f64).powi(k as i32 - 1) * errs[i]).sum();
            (d, m.total, d.powi(k as i32) * s)
        })
        .collect();
    Ok(RatioReport::new("inverse", sides))
}

/// `ω^k(f, δ)_{w,q} / (δ^r ω^{k-r}(f^{(r)}, δ)_{wφ^r,q})`.
pub fn derivative_transfer_check(
    f: &FunctionDescriptor,
    k: usize,
    r: usize,
    w: JacobiWeight,
    q: NormOrder,
    deltas: &[f64],
) -> Result<RatioReport> {
    check_weight(w)?;
    if !(r > 0 && r < k) {
        return Err(Error::Spec(format!("need 0 < r < k, got r = {r}, k = {k}")));
    }
    if in_low_polys(f, k) {
        return Ok(RatioReport::empty("derivative_transfer"));
    }
    let fr = f.derivative(r)?;
    let lhs = dt_modulus_sweep(f, &ModulusRequest::new(k, 0.5 / k as f64, w, q), deltas)?;
    let wr = w.times_phi_pow(r as f64);
    let rhs = dt_modulus_sweep(&fr, &ModulusRequest::new(k - r, 0.5 / k as f64, wr, q), deltas)?;
    let sides = deltas
        .iter()
        .zip(lhs.iter().zip(&rhs))
        .map(|(&d, (a, b))| (d, a.total, d.powi(r as i32) * b.total))
        .collect();
    Ok(RatioReport::new("derivative_transfer", sides))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub numerator: f64,
    pub denominator: f64,
    /// `None` for the vacuous `0/0`.
    pub ratio: Option<f64>,
    pub vacuous: bool,
}

/// `‖w_{α-γ,β-γ} g‖_p / ‖w_{α,β} f^{(r+1)}‖_p` with `g = f^{(r)} - f^{(r)}(0)`.
pub fn embedding_check(f: &FunctionDescriptor, r: usize, alpha: f64, beta: f64, gamma: f64, p: NormOrder) -> Result<EmbeddingReport> {
    if !(gamma < 1.0) {
        return Err(Error::param("gamma", gamma, "must be < 1"));
    }
    let wg = JacobiWeight::new(alpha - gamma, beta - gamma);
    wg.check_in_jp(p)?;
    let w = JacobiWeight::new(alpha, beta);
    w.check_in_jp(p)?;
    let fr = f.derivative(r)?;
    let fr1 = f.derivative(r + 1)?;
    let c0 = fr.eval(0.0);
    let g = fr.minus_poly(&crate::ChebyshevPoly::new(vec![c0], 0));
    let quad = QuadratureConfig::default();
    let num = weighted_norm(&g, wg, p, (-1.0, 1.0), &quad)?;
    let den = weighted_norm(&fr1, w, p, (-1.0, 1.0), &quad)?;
    const ZERO: f64 = 1e-14;
    if den <= ZERO {
        if num <= ZERO {
            return Ok(EmbeddingReport {
                numerator: num,
                denominator: den,
                ratio: None,
                vacuous: true,
            });
        }
        return Err(Error::Division(format!("‖w f^({})‖_p vanishes but the left side is {num}", r + 1)));
    }
    Ok(EmbeddingReport {
        numerator: num,
        denominator: den,
        ratio: Some(num / den),
        vacuous: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extremals::{catalog_get, heaviside, truncated_power, truncated_power_origin};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn spec(k: usize, q: f64, p: f64, a: f64, b: f64) -> UpsilonSpec {
        UpsilonSpec::new(k, NormOrder::new(q).unwrap(), NormOrder::new(p).unwrap(), a, b).unwrap()
    }

    #[test]
    fn upsilon_examples() {
        assert!((upsilon(&spec(2, 1.0, f64::INFINITY, 0.0, 0.0), 0.1).unwrap() - 0.01).abs() < 1e-15);
        assert!((upsilon(&spec(1, 1.0, 4.0, 0.0, 0.0), 0.1).unwrap() - 0.1).abs() < 1e-15);
        let d = (-4f64).exp();
        let want = (-2f64).exp() * 4f64.powf(0.25);
        assert!((upsilon(&spec(1, 2.0, 4.0, 0.0, 0.0), d).unwrap() - want).abs() < 1e-14);
        assert!((want - 0.19139).abs() < 1e-5);
    }

    #[test]
    fn upsilon_rejects_q_not_below_p() {
        let s = UpsilonSpec {
            k: 2,
            q: NormOrder::TWO,
            p: NormOrder::TWO,
            alpha: 0.0,
            beta: 0.0,
        };
        assert!(matches!(upsilon(&s, 0.1), Err(Error::Spec(_))));
        assert!(UpsilonSpec::new(1, NormOrder::INF, NormOrder::INF, 0.0, 0.0).is_err());
        assert!(upsilon(&spec(1, 1.0, 2.0, 0.0, 0.0), 0.25).is_err());
    }

    #[test]
    fn log_branch_differs_by_log_factor() {
        let a = spec(2, 1.0, f64::INFINITY, 0.0, 0.0);
        let b = spec(2, 1.0, f64::INFINITY, 0.0, 0.5);
        for d in [0.2, 0.05, 1e-3] {
            let r = upsilon(&b, d).unwrap() / upsilon(&a, d).unwrap();
            assert!((r / d.ln().abs() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn mpoly_examples() {
        let r = mpoly_rate(&spec(3, 1.0, 2.0, 0.0, 0.0), 10).unwrap();
        assert_eq!(r, PolyRate::Exact { value: 10f64.powf(-1.0) });
        let r = mpoly_rate(&spec(2, 1.0, f64::INFINITY, 0.0, 0.0), 10).unwrap();
        assert!((r.upper() - 0.01).abs() < 1e-16);
        let r = mpoly_rate(&spec(1, 1.0, 2.0, 0.0, 0.0), 10).unwrap();
        assert!((r.lower() - 0.1).abs() < 1e-16);
        assert!((r.upper() - 0.1 * 11f64.ln().sqrt()).abs() < 1e-15);
        assert!(mpoly_rate(&spec(2, 1.0, 2.0, -0.5, 0.0), 10).is_err());
    }

    fn synthetic(mut v: impl FnMut(f64) -> f64) -> SweepResult {
        let pts = default_deltas().into_iter().map(|d| (d, v(d))).collect();
        SweepResult::new(pts, Provenance::new("test", "synthetic")).unwrap()
    }

    #[test]
    fn fit_pure_power() {
        let fit = fit_rate(&synthetic(|d| d.powf(1.5)), RateModel::PurePower).unwrap();
        assert!((fit.exponent - 1.5).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-10);
        assert!((fit.constant - 1.0).abs() < 1e-10);
        let auto = fit_rate_auto(&synthetic(|d| 3.0 * d.powf(1.5))).unwrap();
        assert_eq!(auto.model, RateModel::PurePower);
    }

    #[test]
    fn fit_power_log() {
        let s = synthetic(|d| d * d * d.ln().abs());
        let fit = fit_rate(&s, RateModel::PowerLog).unwrap();
        assert!((fit.exponent - 2.0).abs() < 1e-8);
        assert!((fit.log_power - 1.0).abs() < 1e-8);
        assert_eq!(fit_rate_auto(&s).unwrap().model, RateModel::PowerLog);
    }

    #[test]
    fn fit_noisy_linear() {
        // 2% multiplicative noise over two decades moves the slope by ~0.01
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let s = synthetic(|d| d * (1.0 + 0.02 * rng.random_range(-1.0..1.0)));
        let fit = fit_rate(&s, RateModel::PurePower).unwrap();
        assert!((fit.exponent - 1.0).abs() < 0.03, "{fit:?}");
    }

    #[test]
    fn fit_degenerate() {
        let pts: Vec<(f64, f64)> = (0..6).map(|_| (0.1, 1.0)).collect();
        assert!(matches!(fit_points(&pts, RateModel::PurePower), Err(Error::DegenerateFit(_))));
        let few: Vec<(f64, f64)> = (1..5).map(|j| (2f64.powi(-j), 1.0)).collect();
        assert!(matches!(fit_points(&few, RateModel::PurePower), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn sweep_validation() {
        let p = Provenance::new("t", "x");
        assert!(SweepResult::new(vec![(0.1, 1.0), (0.1, 2.0)], p.clone()).is_err());
        assert!(SweepResult::new(vec![(0.1, -1.0)], p.clone()).is_err());
        assert!(SweepResult::new(vec![(0.2, 1.0), (0.1, 0.0)], p).is_ok());
        assert_eq!(Provenance::new("a", "b"), Provenance::new("a", "b"));
        assert_ne!(Provenance::new("a", "b").request_hash, Provenance::new("a", "c").request_hash);
    }

    #[test]
    fn constant_family_sweep_is_zero() {
        let spec = SweepSpec::new(2, JacobiWeight::UNIT, NormOrder::ONE, NormOrder::TWO);
        let fam = |_d: f64| {
            let mut p = BTreeMap::new();
            p.insert("c".to_string(), 1.0);
            p.insert("k".to_string(), 2.0);
            catalog_get("constant", &p)
        };
        let s = family_sup_sweep("constant", fam, &spec, &dyadic_deltas(3, 6)).unwrap();
        assert!(s.result.values().iter().all(|&v| v == 0.0));
        assert!((s.norms[0] - 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn truncated_power_family_rate() {
        // (k,q,p) = (2,1,2): exponent 2/q - 2/p = 1
        let (k, p) = (2usize, NormOrder::TWO);
        let spec = SweepSpec::new(k, JacobiWeight::UNIT, NormOrder::ONE, p);
        let fam = |d: f64| {
            let mut m = BTreeMap::new();
            m.insert("k".to_string(), k as f64);
            m.insert("eps".to_string(), 2.0 * (k * k) as f64 * d * d);
            m.insert("beta".to_string(), 0.0);
            m.insert("p".to_string(), p.value());
            catalog_get("truncated_power", &m)
        };
        let s = family_sup_sweep("truncated_power", fam, &spec, &default_deltas()).unwrap();
        let fit = fit_rate(&s.result, RateModel::PurePower).unwrap();
        assert!((fit.exponent - 1.0).abs() < 0.15, "{fit:?}");
    }

    #[test]
    fn ratio_checks_are_empty_on_low_polynomials() {
        let f = FunctionDescriptor::new("lin", |x| 1.0 + x).with_polynomial_degree(1);
        let w = JacobiWeight::UNIT;
        assert!(jackson_check(&f, 2, w, NormOrder::TWO, &DEFAULT_NS).unwrap().ratios.is_empty());
        assert!(inverse_check(&f, 2, w, NormOrder::ONE, &[0.25, 0.125]).unwrap().ratios.is_empty());
        assert!(derivative_transfer_check(&f, 2, 1, w, NormOrder::ONE, &[0.25]).unwrap().ratios.is_empty());
    }

    #[test]
    fn jackson_heaviside_bounded() {
        let ns = [4, 8, 16, 32, 64];
        let rep = jackson_check(&heaviside(), 1, JacobiWeight::UNIT, NormOrder::ONE, &ns).unwrap();
        assert_eq!(rep.ratios.len(), 5);
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn jackson_truncated_power_l2() {
        let rep = jackson_check(&truncated_power_origin(2), 2, JacobiWeight::UNIT, NormOrder::TWO, &DEFAULT_NS).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }

    // In L_1, E_i ~ i^{-k} makes the inverse sum pick up a factor ln(1/δ)
    // that the modulus does not have, so the ratio decays like 1/ln(1/δ).
    // It stays bounded and never grows as δ shrinks.
    fn assert_inverse_bounded(rep: &RatioReport) {
        let s = rep.summary.unwrap();
        assert!(s.max_over_median <= MAX_OVER_MEDIAN, "{rep:?}");
        assert!(s.trend_slope >= -TREND_BOUND, "{rep:?}");
        assert!(rep.ratios.iter().all(|r| r.1.is_finite() && r.1 > 0.0));
    }

    #[test]
    fn inverse_heaviside_l1() {
        let rep = inverse_check(&heaviside(), 1, JacobiWeight::UNIT, NormOrder::ONE, &check_deltas(1, 6)).unwrap();
        assert_inverse_bounded(&rep);
    }

    #[test]
    fn inverse_truncated_power_l1() {
        let f = truncated_power_origin(2);
        let rep = inverse_check(&f, 2, JacobiWeight::UNIT, NormOrder::ONE, &check_deltas(2, 6)).unwrap();
        assert_inverse_bounded(&rep);
    }

    #[test]
    fn inverse_heaviside_l2_flat() {
        let rep = inverse_check(&heaviside(), 1, JacobiWeight::UNIT, NormOrder::TWO, &check_deltas(1, 6)).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn zeta_family_above_log_rate() {
        let spec = SweepSpec::new(1, JacobiWeight::UNIT, NormOrder::ONE, NormOrder::TWO);
        let fam = |d: f64| {
            let mut m = BTreeMap::new();
            m.insert("delta".to_string(), d);
            m.insert("lambda".to_string(), 1.5);
            catalog_get("zeta_spline", &m)
        };
        let ds = dyadic_deltas(4, 9);
        let s = family_sup_sweep("zeta_spline", fam, &spec, &ds).unwrap();
        let rate: Vec<f64> = ds
            .iter()
            .map(|&d| d * d.ln().abs().sqrt() / d.ln().abs().ln().abs().powf(0.75))
            .collect();
        let c = calibrate(&s.main_part().values(), &rate).unwrap();
        assert!(c.downward_drift < 0.05, "{c:?}");
    }

    #[test]
    fn moving_power_bounded_below() {
        let c = moving_power_lower_bound(3, JacobiWeight::UNIT, NormOrder::TWO, NormOrder::INF, &[8, 16, 32, 64]).unwrap();
        assert!(c.downward_drift < 0.2, "{c:?}");
    }

    #[test]
    fn derivative_transfer_truncated_power() {
        let f = truncated_power(3, 0.5, 0.0, NormOrder::INF).unwrap();
        let rep = derivative_transfer_check(&f, 3, 2, JacobiWeight::UNIT, NormOrder::ONE, &check_deltas(3, 8)).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn derivative_transfer_square() {
        let f = truncated_power_origin(3);
        let rep = derivative_transfer_check(&f, 3, 1, JacobiWeight::UNIT, NormOrder::ONE, &check_deltas(3, 8)).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn embedding_closed_form() {
        // ‖φ·2x‖_2² = 16/15, ‖φ²·2‖_2² = 64/15
        let f = FunctionDescriptor::new("x2", |x| x * x)
            .with_derivative(|x| 2.0 * x)
            .with_derivative(|_| 2.0)
            .with_polynomial_degree(2);
        let rep = embedding_check(&f, 1, 1.0, 1.0, 0.5, NormOrder::TWO).unwrap();
        assert!((rep.ratio.unwrap() - 0.5).abs() < 1e-10, "{rep:?}");
    }

    #[test]
    fn embedding_vacuous_and_inadmissible() {
        let f = FunctionDescriptor::new("x", |x| x)
            .with_derivative(|_| 1.0)
            .with_polynomial_degree(1);
        let rep = embedding_check(&f, 1, 0.0, 0.0, 0.25, NormOrder::TWO).unwrap();
        assert!(rep.vacuous && rep.ratio.is_none());
        // α - γ = -0.9 is not in J_∞
        let cube = truncated_power(4, 1.0, 0.0, NormOrder::INF).unwrap();
        assert!(matches!(
            embedding_check(&cube, 1, 0.0, 0.0, 0.9, NormOrder::INF),
            Err(Error::Integrability { .. })
        ));
    }
}
