//! Runnable invariant suites, one per module. Each check records what was
//! measured, the bound it was held to, the invariant it instantiates and
//! the construction it was run on.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::approx::{best_approx, default_grid_size, irls, Solver};
use crate::chebyshev::ChebyshevPoly;
use crate::differences::{
    certify_k_monotone, difference, divided_difference, mplus_split, taylor_truncation, DifferenceSpec, Direction,
    MONOTONE_TOL,
};
use crate::error::{Error, Result};
use crate::extremals::{
    catalog_get, chebyshev_partition, d_interval_report, heaviside, inverse_power, truncated_power,
    truncated_power_origin, zeta_spline, CatalogEntry,
};
use crate::function::FunctionDescriptor;
use crate::kernels::{
    a_kernel, change_of_variable_sides, inverse_roundtrip_error, kernel_bound_sup, kernel_y_grid, phi,
    phi_bound_excess, shifted_distance_excess, KernelPoint,
};
use crate::moduli::{boundary_modulus, dt_modulus, dt_modulus_sweep, BoundarySide, ModulusRequest};
use crate::quadrature::{weighted_norm, QuadratureConfig};
use crate::rates::{
    calibrate, default_deltas, dyadic_deltas, family_sup_sweep, fit_rate_auto, moving_power_lower_bound, upsilon,
    FamilySweep, SweepSpec, UpsilonCase, UpsilonSpec,
};
use crate::weight::{JacobiWeight, NormOrder};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Core,
    Differences,
    Moduli,
    Kernels,
    Extremals,
    Approx,
    Rates,
    All,
}

impl Suite {
    pub const MODULES: [Suite; 7] = [
        Suite::Core,
        Suite::Differences,
        Suite::Moduli,
        Suite::Kernels,
        Suite::Extremals,
        Suite::Approx,
        Suite::Rates,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Core => "core",
            Suite::Differences => "differences",
            Suite::Moduli => "moduli",
            Suite::Kernels => "kernels",
            Suite::Extremals => "extremals",
            Suite::Approx => "approx",
            Suite::Rates => "rates",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::MODULES
            .into_iter()
            .chain([Suite::All])
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Spec(format!("unknown suite `{s}`")))
    }
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    pub invariant: String,
    pub construction: String,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    /// One-line failure message naming the invariant and the construction.
    pub fn message(&self) -> String {
        format!(
            "[{}] {} FAILED: {} (invariant: {}; construction: {}; measured {:e}, bound {:e})",
            self.suite, self.name, self.detail, self.invariant, self.construction, self.measured, self.bound
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Result of a check body: measured value, bound, verdict, detail.
struct Measure {
    measured: f64,
    bound: f64,
    pass: bool,
    detail: String,
}

fn at_most(measured: f64, bound: f64, detail: impl Into<String>) -> Measure {
    Measure {
        measured,
        bound,
        pass: measured <= bound,
        detail: detail.into(),
    }
}

fn at_least(measured: f64, bound: f64, detail: impl Into<String>) -> Measure {
    Measure {
        measured,
        bound,
        pass: measured >= bound,
        detail: detail.into(),
    }
}

struct Runner {
    suite: Suite,
    seed: u64,
    checks: Vec<Check>,
}

impl Runner {
    fn run(&mut self, name: &str, invariant: &str, construction: &str, body: impl FnOnce(u64) -> Result<Measure>) {
        let (measured, bound, pass, detail) = match body(self.seed) {
            Ok(m) => (m.measured, m.bound, m.pass && !m.measured.is_nan(), m.detail),
            Err(e) => (f64::NAN, f64::NAN, false, format!("error: {e}")),
        };
        self.checks.push(Check {
            suite: self.suite,
            name: name.into(),
            invariant: invariant.into(),
            construction: construction.into(),
            measured,
            bound,
            pass,
            detail,
        });
    }
}

/// Runs one suite (or every suite for [`Suite::All`]).
pub fn run_suite(suite: Suite, seed: u64) -> Vec<SuiteReport> {
    let suites: Vec<Suite> = if suite == Suite::All {
        Suite::MODULES.to_vec()
    } else {
        vec![suite]
    };
    suites
        .into_iter()
        .map(|s| {
            let mut r = Runner {
                suite: s,
                seed,
                checks: Vec::new(),
            };
            match s {
                Suite::Core => core_suite(&mut r),
                Suite::Differences => differences_suite(&mut r),
                Suite::Moduli => moduli_suite(&mut r),
                Suite::Kernels => kernels_suite(&mut r),
                Suite::Extremals => extremals_suite(&mut r),
                Suite::Approx => approx_suite(&mut r),
                Suite::Rates => rates_suite(&mut r),
                Suite::All => unreachable!(),
            }
            SuiteReport {
                suite: s,
                seed,
                checks: r.checks,
            }
        })
        .collect()
}

fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn entry(name: &str, kv: &[(&str, f64)]) -> Result<CatalogEntry> {
    catalog_get(name, &params(kv))
}

fn norm(f: &FunctionDescriptor, w: JacobiWeight, q: NormOrder) -> Result<f64> {
    weighted_norm(f, w, q, (-1.0, 1.0), &QuadratureConfig::default())
}

fn random_poly(rng: &mut ChaCha8Rng, degree: usize) -> ChebyshevPoly {
    let c: Vec<f64> = (0..=degree).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    ChebyshevPoly::new(c, degree)
}

fn q(v: f64) -> NormOrder {
    NormOrder::new(v).expect("norm order literal")
}

const INF: NormOrder = NormOrder::INF;

fn core_suite(r: &mut Runner) {
    r.run(
        "weight_reciprocal",
        "w_{a,b}(x) w_{-a,-b}(x) = 1 on (-1,1) to 1e-14 relative",
        "200 seeded (alpha, beta, x)",
        |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst: f64 = 0.0;
            for _ in 0..200 {
                let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                let x: f64 = rng.random_range(-0.999..0.999);
                let v = JacobiWeight::new(a, b).eval(x) * JacobiWeight::new(-a, -b).eval(x);
                worst = worst.max((v - 1.0).abs());
            }
            Ok(at_most(worst, 1e-14, "largest |w w^-1 - 1|"))
        },
    );
    r.run(
        "norm_monotone",
        "|f| <= |g| pointwise implies ||w f||_q <= ||w g||_q + 1e-12",
        "f = x sin(3x), g = 1 + x^2 over q in {1, 2, 3, inf} and three weights",
        |_| {
            let f = FunctionDescriptor::new("x sin 3x", |x: f64| x * (3.0 * x).sin());
            let g = FunctionDescriptor::new("1+x^2", |x: f64| 1.0 + x * x);
            let mut worst = f64::NEG_INFINITY;
            for w in [JacobiWeight::UNIT, JacobiWeight::new(0.5, 1.0), JacobiWeight::new(-0.3, 0.2)] {
                for qq in [q(1.0), q(2.0), q(3.0), INF] {
                    if w.check_in_jp(qq).is_err() {
                        continue;
                    }
                    worst = worst.max(norm(&f, w, qq)? - norm(&g, w, qq)?);
                }
            }
            Ok(at_most(worst, 1e-12, "largest ||w f|| - ||w g||"))
        },
    );
    r.run(
        "sup_norm_matches_dense_grid",
        "q = inf, w = 1: weighted_norm of a polynomial equals the dense-grid max to 1e-10 relative",
        "20 seeded Chebyshev series of degree 12; 20001-point grid with golden refinement",
        |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst: f64 = 0.0;
            for _ in 0..20 {
                let p = random_poly(&mut rng, 12);
                let f = FunctionDescriptor::from_poly("p", &p);
                let got = norm(&f, JacobiWeight::UNIT, INF)?;
                let want = dense_sup(|x| p.eval(x).abs(), 20001);
                worst = worst.max((got / want - 1.0).abs());
            }
            Ok(at_most(worst, 1e-10, "largest relative gap"))
        },
    );
    r.run(
        "norm_reflection",
        "||w_{a,b} f(x)||_q = ||w_{b,a} f(-x)||_q",
        "heaviside, x_+^2, (1-x)^{-1/4} with w = (0.5, 1) and (1, 0.3), q in {1, 2, inf}",
        |_| {
            let fs = [heaviside(), truncated_power_origin(3), inverse_power(0.25)?];
            let mut worst: f64 = 0.0;
            for f in &fs {
                for w in [JacobiWeight::new(0.5, 1.0), JacobiWeight::new(1.0, 0.3)] {
                    for qq in [q(1.0), q(2.0), INF] {
                        let a = norm(f, w, qq)?;
                        let b = norm(&f.reflected(0), w.reflected(), qq)?;
                        worst = worst.max((a / b - 1.0).abs());
                    }
                }
            }
            Ok(at_most(worst, 1e-8, "largest relative gap"))
        },
    );
}

/// Max of `g` on a uniform grid, refined by golden section around the
/// best grid points.
fn dense_sup(g: impl Fn(f64) -> f64, n: usize) -> f64 {
    let xs: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let mut best = vals[idx[0]];
    for &i in idx.iter().take(8) {
        let (mut a, mut b) = (xs[i.saturating_sub(1)], xs[(i + 1).min(n - 1)]);
        let gr = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let c = b - gr * (b - a);
            let d = a + gr * (b - a);
            if g(c) > g(d) {
                b = d;
            } else {
                a = c;
            }
        }
        best = best.max(g(0.5 * (a + b)));
    }
    best
}

fn differences_suite(r: &mut Runner) {
    r.run(
        "annihilates_low_polynomials",
        "Delta^k_h p = 0 within 1e-11 for deg p <= k-1",
        "seeded Chebyshev series, k = 1..5, 200 interior points, symmetric differences",
        |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst: f64 = 0.0;
            for k in 1..=5 {
                let p = random_poly(&mut rng, k - 1);
                let f = FunctionDescriptor::from_poly("p", &p);
                let h = 0.05;
                let spec = DifferenceSpec::new(k, h, Direction::Symmetric);
                for i in 0..200 {
                    let x = -0.8 + 1.6 * i as f64 / 199.0;
                    worst = worst.max(difference(&f, &spec, x)?.abs());
                }
            }
            Ok(at_most(worst, 1e-11, "largest |Delta^k p|"))
        },
    );
    r.run(
        "mean_value_form",
        "Delta^k_h f(x) / h^k lies between min and max of f^(k) on the stencil (+-1e-6)",
        "f = exp, k = 1..4, h in {0.1, 0.01}, 50 interior points",
        |_| {
            let f = FunctionDescriptor::new("exp", f64::exp);
            let mut worst = f64::NEG_INFINITY;
            for k in 1..=4 {
                for h in [0.1, 0.01] {
                    let spec = DifferenceSpec::new(k, h, Direction::Symmetric);
                    for i in 0..50 {
                        let x = -0.5 + i as f64 / 49.0;
                        let v = difference(&f, &spec, x)? / h.powi(k as i32);
                        let half = 0.5 * k as f64 * h;
                        let (lo, hi) = ((x - half).exp(), (x + half).exp());
                        worst = worst.max(lo - v).max(v - hi);
                    }
                }
            }
            Ok(at_most(worst, 1e-6, "largest excursion outside [min f^(k), max f^(k)]"))
        },
    );
    r.run(
        "divided_difference_permutation",
        "divided differences are symmetric in their nodes to 1e-12 relative",
        "100 seeded shuffles of 6 nodes for exp",
        |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = FunctionDescriptor::new("exp", f64::exp);
            let mut nodes: Vec<f64> = vec![-0.9, -0.4, -0.1, 0.2, 0.55, 0.8];
            let base = divided_difference(&nodes, &f)?;
            let mut worst: f64 = 0.0;
            for _ in 0..100 {
                nodes.shuffle(&mut rng);
                worst = worst.max((divided_difference(&nodes, &f)? / base - 1.0).abs());
            }
            Ok(at_most(worst, 1e-12, "largest relative change"))
        },
    );
    r.run(
        "mplus_split_members",
        "both parts of the M^k_+ split certify k-monotone and vanish on [-1,0]",
        "heaviside (k=1), x_+ and (1-x)^{-1/2} (k=2), x_+^2 (k=3)",
        |seed| {
            let cases = [
                (heaviside(), 1),
                (truncated_power_origin(2), 2),
                (inverse_power(0.5)?, 2),
                (truncated_power_origin(3), 3),
            ];
            let mut failures = 0.0;
            for (f, k) in &cases {
                let (f1, f2) = mplus_split(f, *k)?;
                for g in [&f1, &f2] {
                    let ok = certify_k_monotone(g, *k, 500, seed, MONOTONE_TOL)?.is_certified()
                        && (0..=200).all(|i| g.eval(-1.0 + i as f64 / 200.0) == 0.0);
                    if !ok {
                        failures += 1.0;
                    }
                }
            }
            Ok(at_most(failures, 0.0, "parts failing certification or support"))
        },
    );
    r.run(
        "taylor_norm_bound",
        "||w T_{k-1} f||_p / ||w f||_p is finite and does not grow as the family parameter shrinks",
        "inverse_power beta in {0.25, 0.5, 0.75} (w = (0,beta), p = inf); truncated_power k=2 eps = 2k^2 delta^2; zeta_spline",
        |_| {
            let mut worst: f64 = 0.0;
            for b in [0.25, 0.5, 0.75] {
                let f = inverse_power(b)?;
                let w = JacobiWeight::new(0.0, b);
                let t = FunctionDescriptor::from_poly("T", &taylor_truncation(&f, 2)?);
                let ratio = norm(&t, w, INF)? / norm(&f, w, INF)?;
                if !ratio.is_finite() {
                    return Ok(at_most(f64::INFINITY, 1.2, format!("beta = {b}")));
                }
            }
            for (name, kv) in [
                ("truncated_power", vec![("k", 2.0), ("beta", 0.0), ("p", 2.0)]),
                ("zeta_spline", vec![]),
            ] {
                let mut ratios = Vec::new();
                for d in dyadic_deltas(3, 8) {
                    let mut kv = kv.clone();
                    if name == "truncated_power" {
                        kv.push(("eps", 8.0 * d * d));
                    } else {
                        kv.push(("delta", d));
                    }
                    let e = entry(name, &kv)?;
                    let (w, p) = e.natural_norm.unwrap_or((JacobiWeight::UNIT, INF));
                    let k = e.descriptor.monotone_order.map_or(1, |m| m.k);
                    let t = FunctionDescriptor::from_poly("T", &taylor_truncation(&e.descriptor, k)?);
                    ratios.push(norm(&t, w, p)? / norm(&e.descriptor, w, p)?);
                }
                for v in &ratios {
                    worst = worst.max(v - 1.2 * ratios[0] - 1e-12);
                }
            }
            Ok(at_most(worst, 0.0, "largest growth over 1.2x the first ratio"))
        },
    );
}

fn moduli_members() -> Result<Vec<(FunctionDescriptor, usize, JacobiWeight, NormOrder)>> {
    Ok(vec![
        (heaviside(), 1, JacobiWeight::UNIT, q(1.0)),
        (truncated_power_origin(2), 2, JacobiWeight::UNIT, q(2.0)),
        (truncated_power_origin(3), 3, JacobiWeight::new(0.5, 0.5), q(1.0)),
        (inverse_power(0.5)?, 2, JacobiWeight::new(0.0, 0.5), q(1.0)),
        (zeta_spline(5, 1.5, 0.0, q(2.0))?, 1, JacobiWeight::UNIT, INF),
    ])
}

fn moduli_suite(r: &mut Runner) {
    const MEMBERS: &str = "heaviside, x_+, x_+^2, (1-x)^{-1/2}, zeta_spline(m=5)";
    r.run(
        "monotone_in_delta",
        "omega(f, delta) is nondecreasing in delta (1e-12)",
        MEMBERS,
        |_| {
            let mut worst = f64::NEG_INFINITY;
            for (f, k, w, qq) in moduli_members()? {
                let ds = dyadic_deltas((2.0 * k as f64).log2().ceil() as i32, 9);
                let res = dt_modulus_sweep(&f, &ModulusRequest::new(k, 0.1, w, qq), &ds)?;
                // ds is decreasing
                for p in res.windows(2) {
                    worst = worst.max(p[1].total - p[0].total - 1e-12 * p[0].total);
                }
            }
            Ok(at_most(worst, 0.0, "largest increase as delta halves"))
        },
    );
    r.run(
        "homogeneity",
        "omega(c f) = |c| omega(f) to 1e-12 relative",
        "same members, c in {-3.5, 0.25}, delta = 1/16",
        |_| {
            let mut worst: f64 = 0.0;
            for (f, k, w, qq) in moduli_members()? {
                let req = ModulusRequest::new(k, 1.0 / 16.0, w, qq);
                let base = dt_modulus(&f, &req)?.total;
                for c in [-3.5f64, 0.25] {
                    let v = dt_modulus(&f.scaled(c), &req)?.total;
                    worst = worst.max((v / (c.abs() * base) - 1.0).abs());
                }
            }
            Ok(at_most(worst, 1e-12, "largest relative deviation"))
        },
    );
    r.run(
        "reflection",
        "omega of f with w_{a,b} equals omega of (-1)^k f(-x) with w_{b,a} within 2%",
        "same members with their weights swapped, delta in {1/8, 1/32}",
        |_| {
            let mut worst: f64 = 0.0;
            for (f, k, w, qq) in moduli_members()? {
                for d in [1.0 / 8.0, 1.0 / 32.0] {
                    if d > 0.5 / k as f64 {
                        continue;
                    }
                    let a = dt_modulus(&f, &ModulusRequest::new(k, d, w, qq))?.total;
                    let b = dt_modulus(&f.reflected(k), &ModulusRequest::new(k, d, w.reflected(), qq))?.total;
                    worst = worst.max((a / b - 1.0).abs());
                }
            }
            Ok(at_most(worst, 0.02, "largest relative gap"))
        },
    );
    r.run(
        "subadditivity",
        "omega(f+g) <= omega(f) + omega(g) + 1e-10",
        "(heaviside, zeta_spline) k=1 q=1; (x_+, x_+^2) k=2 q=2; (x_+^2, (1-x)^{-1/2}) k=2 q=1 w=(0,1/2)",
        |_| {
            let pairs = [
                (heaviside(), zeta_spline(5, 1.5, 0.0, q(2.0))?, 1, JacobiWeight::UNIT, q(1.0)),
                (truncated_power_origin(2), truncated_power_origin(3), 2, JacobiWeight::UNIT, q(2.0)),
                (truncated_power_origin(3), inverse_power(0.5)?, 2, JacobiWeight::new(0.0, 0.5), q(1.0)),
            ];
            let mut worst = f64::NEG_INFINITY;
            for (f, g, k, w, qq) in &pairs {
                for d in [1.0 / 8.0, 1.0 / 64.0] {
                    if d > 0.5 / *k as f64 {
                        continue;
                    }
                    let req = ModulusRequest::new(*k, d, *w, *qq);
                    let s = dt_modulus(&f.sum(g), &req)?;
                    // the sum's maximizing steps are admissible for both parts
                    let hinted = ModulusRequest {
                        h_hints: vec![s.argmax_h.main, s.argmax_h.forward, s.argmax_h.backward],
                        ..req
                    };
                    let a = dt_modulus(f, &hinted)?.total;
                    let b = dt_modulus(g, &hinted)?.total;
                    worst = worst.max(s.total - a - b);
                }
            }
            Ok(at_most(worst, 1e-10, "largest omega(f+g) - omega(f) - omega(g)"))
        },
    );
    r.run(
        "bounded_by_norm",
        "alpha, beta >= 0: omega(f, delta)_{w,q} <= 2^{k+1} ||w f||_q",
        "same members, dyadic delta down to 2^-9",
        |_| {
            let mut worst: f64 = 0.0;
            for (f, k, w, qq) in moduli_members()? {
                if w.alpha < 0.0 || w.beta < 0.0 {
                    continue;
                }
                let n = norm(&f, w, qq)?;
                let ds = dyadic_deltas((2.0 * k as f64).log2().ceil() as i32, 9);
                for m in dt_modulus_sweep(&f, &ModulusRequest::new(k, 0.1, w, qq), &ds)? {
                    worst = worst.max(m.total / (2f64.powi(k as i32 + 1) * n));
                }
            }
            Ok(at_most(worst, 1.0, "largest omega / (2^{k+1} ||w f||)"))
        },
    );
    r.run(
        "boundary_part_by_strip_norm",
        "f in M^k_+: backward boundary part <= C ||w f||_{L_q[1-2k^2 delta^2, 1]}, C calibrated at delta = 2^-3 and stable within 20% under halving",
        "heaviside (k=1), x_+ (k=2), x_+^2 (k=3) with w = (0.5, 0.5), q in {1, 2}",
        |_| {
            let mut worst: f64 = 0.0;
            for (f, k) in [(heaviside(), 1usize), (truncated_power_origin(2), 2), (truncated_power_origin(3), 3)] {
                for qq in [q(1.0), q(2.0)] {
                    let w = JacobiWeight::new(0.5, 0.5);
                    let mut ratios = Vec::new();
                    let from = (4.0 * k as f64).log2().ceil() as i32;
                    for d in dyadic_deltas(from, from + 5) {
                        let req = ModulusRequest::new(k, d, w, qq);
                        let b = boundary_modulus(&f, &req, BoundarySide::BackwardAtPlusOne)?.0;
                        let s = weighted_norm(&f, w, qq, (1.0 - req.strip_width(), 1.0), &req.quad)?;
                        ratios.push(b / s);
                    }
                    for v in &ratios {
                        worst = worst.max(v / ratios[0] - 1.0);
                    }
                }
            }
            Ok(at_most(worst, 0.2, "largest upward drift of the calibrated ratio"))
        },
    );
}

fn kernels_suite(r: &mut Runner) {
    r.run(
        "psi_inverse",
        "psi(lambda, x + lambda phi(x)) = x within 1e-10 on its window",
        "100 x 20 grid, eta in {0.01, 0.08, 0.3}",
        |_| {
            let worst = [0.01, 0.08, 0.3]
                .iter()
                .map(|&e| inverse_roundtrip_error(e, 100, 20))
                .fold(0.0, f64::max);
            Ok(at_most(worst, 1e-10, "largest roundtrip error"))
        },
    );
    r.run(
        "psi_derivative_window",
        "1/2 <= d psi / dy <= 2 on its window",
        "200 x 21 grid, eta in {0.01, 0.08, 0.3}",
        |_| {
            let mut worst: f64 = 0.0;
            for e in [0.01, 0.08, 0.3] {
                let (lo, hi) = crate::kernels::psi_derivative_range(e, 200, 21)?;
                worst = worst.max(0.5 - lo).max(hi - 2.0);
            }
            Ok(at_most(worst, 0.0, "largest excursion outside [1/2, 2]"))
        },
    );
    r.run(
        "phi_linear_bound",
        "phi(x) <= sqrt(2/eta)(1-|x|) for |x| <= 1-eta",
        "2001 points, eta in {0.01, 0.1}",
        |_| {
            let worst = [0.01, 0.1].iter().map(|&e| phi_bound_excess(e, 2001)).fold(f64::NEG_INFINITY, f64::max);
            Ok(at_most(worst, 0.0, "largest excess"))
        },
    );
    r.run(
        "shifted_distance",
        "(1-x)/4 <= 1-x+lambda phi(x) <= 2(1-x) on its window (both endpoints)",
        "401 x 21 grid, eta in {0.01, 0.1}",
        |_| {
            let worst = [0.01, 0.1]
                .iter()
                .map(|&e| shifted_distance_excess(e, 401, 21))
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(at_most(worst, 0.0, "largest relative excess"))
        },
    );
    r.run(
        "kernel_bound",
        "sup_y |A_k(y,h)| / (h^k theta^{2 beta - k}) is bounded and changes < 10% between h = 2^-9 and 2^-10",
        "(k, beta) in {1,2,3} x {-0.25, 0, 0.5, 1}, h in 2^-4..2^-10",
        |_| {
            let mut worst: f64 = 0.0;
            for k in 1..=3 {
                for b in [-0.25, 0.0, 0.5, 1.0] {
                    let sups: Vec<f64> = (4..=10)
                        .map(|j| kernel_bound_sup(k, b, 2f64.powi(-j), 200).map(|s| s.0))
                        .collect::<Result<_>>()?;
                    if sups.iter().any(|s| !s.is_finite()) {
                        return Ok(at_most(f64::INFINITY, 0.1, format!("k = {k}, beta = {b}")));
                    }
                    worst = worst.max((sups[6] / sups[5] - 1.0).abs());
                }
            }
            Ok(at_most(worst, 0.1, "largest relative change between the finest levels"))
        },
    );
    r.run(
        "kernel_vanishes_odd",
        "beta = -1/2, k odd: A_k vanishes (|A_k| <= 1e-10)",
        "k in {1, 3}, h in 2^-4..2^-10, y on the kernel grid",
        |_| {
            let mut worst: f64 = 0.0;
            for k in [1, 3] {
                for j in 4..=10 {
                    let h = 2f64.powi(-j);
                    for y in kernel_y_grid(k, h, 100) {
                        worst = worst.max(a_kernel(&KernelPoint::new(y, -0.5, k, h)?).abs());
                    }
                }
            }
            Ok(at_most(worst, 1e-10, "largest |A_k|"))
        },
    );
    r.run(
        "kernel_even_theta_free",
        "beta = 0, k even: |A_k| <= C h^k with C independent of theta (sup over y stable within 10% across h)",
        "k in {2}, h in 2^-4..2^-10",
        |_| {
            let sups: Vec<f64> = (4..=10)
                .map(|j| {
                    let h = 2f64.powi(-j);
                    kernel_y_grid(2, h, 200)
                        .into_iter()
                        .map(|y| KernelPoint::new(y, 0.0, 2, h).map(|p| a_kernel(&p).abs() / h.powi(2)))
                        .try_fold(0.0f64, |m, v| v.map(|v| m.max(v)))
                })
                .collect::<Result<_>>()?;
            let max = sups.iter().cloned().fold(0.0, f64::max);
            let min = sups.iter().cloned().fold(f64::INFINITY, f64::min);
            Ok(at_most(max / min - 1.0, 0.1, "spread of sup |A_2| / h^2 across h"))
        },
    );
    r.run(
        "change_of_variable",
        "int g(x) f(x + lambda phi(x)) dx equals the substituted integral to 0.1%",
        "f = indicator of [0,1], g = phi, eta = 0.08, lambda = 0.1",
        |_| {
            let f = |y: f64| if (0.0..=1.0).contains(&y) { 1.0 } else { 0.0 };
            let (a, b) = change_of_variable_sides(f, phi, &[0.0, 1.0], 0.08, 0.1, &QuadratureConfig::default())?;
            Ok(at_most((a / b - 1.0).abs(), 1e-3, "relative gap"))
        },
    );
}

fn extremals_suite(r: &mut Runner) {
    r.run(
        "members_certify",
        "every catalog member certifies k-monotone at its declared order",
        "each catalog name at representative parameters, 500 seeded trials",
        |seed| {
            let cases: Vec<(&str, Vec<(&str, f64)>)> = vec![
                ("heaviside", vec![]),
                ("truncated_power", vec![("k", 3.0), ("eps", 0.1), ("beta", 0.5), ("p", 2.0)]),
                ("truncated_power", vec![("k", 2.0), ("eps", 0.02), ("beta", 0.0), ("p", 1.0)]),
                ("inverse_power", vec![("beta", 0.5)]),
                ("zeta_spline", vec![("m", 6.0)]),
                ("truncated_power_origin", vec![("k", 4.0)]),
                ("moving_truncated_power", vec![("k", 2.0), ("n", 16.0)]),
                ("constant", vec![("c", 3.0), ("k", 4.0)]),
            ];
            let mut failed = 0.0;
            let mut names = Vec::new();
            for (name, kv) in cases {
                let e = entry(name, &kv)?;
                let Some(m) = e.descriptor.monotone_order else {
                    continue;
                };
                if !certify_k_monotone(&e.descriptor, m.k, 500, seed, MONOTONE_TOL)?.is_certified() {
                    failed += 1.0;
                    names.push(name);
                }
            }
            Ok(at_most(failed, 0.0, format!("refuted: {names:?}")))
        },
    );
    r.run(
        "normalization",
        "||w f||_p in [1/4, 4] in the construction's own (w, p), drifting < 10% across the parameter sweep",
        "truncated_power (k,beta,p) in {(2,0,2), (3,0,inf), (2,0.5,1)} with eps = 2k^2 delta^2, delta = 2^-3..2^-10; zeta_spline (p = 2, delta = 2^-4..2^-9, normalized by its measured norm); oscillating_step (k = 1, delta = 2^-4..2^-9)",
        |_| {
            let mut worst: f64 = 0.0;
            let mut range_bad = 0.0;
            let mut detail = String::new();
            let ds = default_deltas();
            let mut families: Vec<Vec<CatalogEntry>> = Vec::new();
            for (k, b, p) in [(2.0, 0.0, 2.0), (3.0, 0.0, f64::INFINITY), (2.0, 0.5, 1.0)] {
                families.push(
                    ds.iter()
                        .map(|&d| entry("truncated_power", &[("k", k), ("beta", b), ("p", p), ("eps", 2.0 * k * k * d * d)]))
                        .collect::<Result<_>>()?,
                );
            }
            // the zeta construction is normalized by dividing through by its norm
            let zeta: Vec<CatalogEntry> = dyadic_deltas(4, 9)
                .iter()
                .map(|&d| {
                    let mut e = entry("zeta_spline", &[("delta", d)])?;
                    let (w, p) = e.natural_norm.expect("normalized member");
                    e.descriptor = e.descriptor.scaled(norm(&e.descriptor, w, p)?.recip());
                    Ok(e)
                })
                .collect::<Result<_>>()?;
            families.push(zeta);
            families.push(
                dyadic_deltas(4, 9)
                    .iter()
                    .map(|&d| entry("oscillating_step", &[("k", 1.0), ("delta", d)]))
                    .collect::<Result<_>>()?,
            );
            for fam in &families {
                let norms: Vec<f64> = fam
                    .iter()
                    .map(|e| {
                        let (w, p) = e.natural_norm.expect("normalized member");
                        norm(&e.descriptor, w, p)
                    })
                    .collect::<Result<_>>()?;
                for v in &norms {
                    if !(0.25..=4.0).contains(v) {
                        range_bad += 1.0;
                    }
                    let drift = (v / norms[0] - 1.0).abs();
                    if drift > worst {
                        worst = drift;
                        detail = format!("{}: norms {norms:.4?}", fam[0].descriptor.name);
                    }
                }
            }
            if range_bad > 0.0 {
                return Ok(at_most(range_bad, 0.0, "norms outside [1/4, 4]"));
            }
            Ok(at_most(worst, 0.1, detail))
        },
    );
    r.run(
        "zeta_shape",
        "zeta_spline is nondecreasing and vanishes on [-1, 0]",
        "m in 3..=8, lambda = 1.5, beta in {0, 0.5}, p in {1, 2}",
        |_| {
            let mut bad = 0.0;
            for m in 3..=8 {
                for b in [0.0, 0.5] {
                    for p in [q(1.0), q(2.0)] {
                        let f = zeta_spline(m, 1.5, b, p)?;
                        let mut last = f64::NEG_INFINITY;
                        for s in 0..=4000 {
                            let x = -1.0 + 2.0 * s as f64 / 4000.0;
                            let v = f.eval(x);
                            if v < last || (x <= 0.0 && v != 0.0) {
                                bad += 1.0;
                                break;
                            }
                            last = v;
                        }
                    }
                }
            }
            Ok(at_most(bad, 0.0, "members violating shape"))
        },
    );
    r.run(
        "d_intervals_contained",
        "h <= 1/(2n): D_i(h) lies in [-1+2h^2, 1-2h^2]",
        "n in {8, 16, 64, 256}, h in {1/(2n), 1/(4n)}",
        |_| {
            let mut bad = 0.0;
            for n in [8, 16, 64, 256] {
                let part = chebyshev_partition(n)?;
                for h in [0.5 / n as f64, 0.25 / n as f64] {
                    if !d_interval_report(&part, h)?.contained {
                        bad += 1.0;
                    }
                }
            }
            Ok(at_most(bad, 0.0, "(n, h) pairs violating containment"))
        },
    );
    r.run(
        "rho_bound",
        "phi(x)/n + 1/n^2 <= |I_i| for x in I_i",
        "n in {4, 16, 64, 256}, 11 samples per interval",
        |_| {
            let mut worst = f64::NEG_INFINITY;
            for n in [4, 16, 64, 256] {
                worst = worst.max(chebyshev_partition(n)?.rho_excess(11));
            }
            Ok(at_most(worst, 0.0, "largest relative excess"))
        },
    );
}

fn approx_suite(r: &mut Runner) {
    r.run(
        "equioscillation",
        "q = inf, unweighted: >= n+2 alternating extrema within 1% of the error; weighted: >= n+2 alternations",
        "x_+ and x_+^2 for n in {4, 8, 16}; weighted case w = (0.5, 1)",
        |_| {
            let mut worst = f64::INFINITY;
            for f in [truncated_power_origin(2), truncated_power_origin(3)] {
                for n in [4usize, 8, 16] {
                    for w in [JacobiWeight::UNIT, JacobiWeight::new(0.5, 1.0)] {
                        let res = best_approx(&f, n, w, INF, default_grid_size(n))?;
                        let alt = if w.is_unit() {
                            dense_alternations(&f, &res.poly, res.error, 20001)
                        } else {
                            res.residual_stats.alternations
                        };
                        worst = worst.min(alt as f64 - (n + 2) as f64);
                    }
                }
            }
            Ok(at_least(worst, 0.0, "smallest alternation surplus over n+2"))
        },
    );
    r.run(
        "monotone_in_n",
        "E_n(f)_{w,2} is nonincreasing in n (1e-10 relative)",
        "heaviside, x_+ (w = 1) and (1-x)^{-1/2} (w = (0, 1/2)), n = 2..32",
        |_| {
            let cases = [
                (heaviside(), JacobiWeight::UNIT),
                (truncated_power_origin(2), JacobiWeight::UNIT),
                (inverse_power(0.5)?, JacobiWeight::new(0.0, 0.5)),
            ];
            let mut worst = f64::NEG_INFINITY;
            for (f, w) in &cases {
                let ns: Vec<usize> = (2..=32).collect();
                let errs = crate::par::try_map(&ns, |&n| best_approx(f, n, *w, q(2.0), default_grid_size(n)).map(|r| r.error))?;
                for p in errs.windows(2) {
                    worst = worst.max((p[1] - p[0]) / p[0]);
                }
            }
            Ok(at_most(worst, 1e-10, "largest relative increase"))
        },
    );
    r.run(
        "irls_matches_least_squares",
        "q = 2: IRLS started from zero reproduces the least-squares error to 1e-9 relative",
        "heaviside and x_+^2, n in {4, 16}",
        |_| {
            let mut worst: f64 = 0.0;
            for f in [heaviside(), truncated_power_origin(3)] {
                for n in [4usize, 16] {
                    let m = default_grid_size(n);
                    let ls = best_approx(&f, n, JacobiWeight::UNIT, q(2.0), m)?;
                    if ls.solver != Solver::LeastSquares {
                        return Ok(at_most(f64::INFINITY, 1e-9, "q = 2 did not use least squares"));
                    }
                    let it = irls(&f, n, JacobiWeight::UNIT, q(2.0), m, &QuadratureConfig::default(), None)?;
                    worst = worst.max((it.error / ls.error - 1.0).abs());
                }
            }
            Ok(at_most(worst, 1e-9, "largest relative gap"))
        },
    );
    r.run(
        "grid_refinement",
        "doubling the grid changes E_n by < 0.5%",
        "x_+^{k-1}, (k, q) in {(2, inf), (2, 2), (3, 1)}, n in {8, 12, 16, 24, 32, 48, 64}",
        |_| {
            let mut worst: f64 = 0.0;
            for (k, qq) in [(2usize, INF), (2, q(2.0)), (3, q(1.0))] {
                let f = truncated_power_origin(k);
                let ns = [8usize, 12, 16, 24, 32, 48, 64];
                let gaps = crate::par::try_map(&ns, |&n| {
                    let m = default_grid_size(n);
                    let a = best_approx(&f, n, JacobiWeight::UNIT, qq, m)?.error;
                    let b = best_approx(&f, n, JacobiWeight::UNIT, qq, 2 * m)?.error;
                    Ok::<_, Error>((b / a - 1.0).abs())
                })?;
                worst = gaps.into_iter().fold(worst, f64::max);
            }
            Ok(at_most(worst, 0.005, "largest relative change"))
        },
    );
    r.run(
        "origin_lower_bound",
        "f = x_+^{k-1}, q = inf: E_n >= C n^{-k+1} with C calibrated at n = 8, downward drift < 20%",
        "k in {1, 2}, n in {8, 12, 16, 24, 32, 48, 64}",
        |_| {
            let mut worst: f64 = 0.0;
            let ns = [8usize, 12, 16, 24, 32, 48, 64];
            for k in [1usize, 2] {
                let f = truncated_power_origin(k);
                let errs = crate::par::try_map(&ns, |&n| {
                    best_approx(&f, n, JacobiWeight::UNIT, INF, default_grid_size(n)).map(|r| r.error)
                })?;
                let rates: Vec<f64> = ns.iter().map(|&n| (n as f64).powi(1 - k as i32)).collect();
                worst = worst.max(calibrate(&errs, &rates)?.downward_drift);
            }
            Ok(at_most(worst, 0.2, "largest downward drift"))
        },
    );
    r.run(
        "truncated_power_norms",
        "||w_{a,b} ((x-xi)_+^{k-1})^(r)||_p ~ (1-xi)^{b+k-r-1+1/p}: calibrated ratio within 15% across xi",
        "w = (0.5, 0.5); (k, r, p) in {(3,0,2), (3,1,1), (2,1,inf), (4,2,2)}; 1-xi = 2^-3..2^-10",
        |_| {
            let w = JacobiWeight::new(0.5, 0.5);
            let mut worst: f64 = 0.0;
            for (k, rr, p) in [(3usize, 0usize, q(2.0)), (3, 1, q(1.0)), (2, 1, INF), (4, 2, q(2.0))] {
                let mut vals = Vec::new();
                let mut rates = Vec::new();
                for j in 3..=10 {
                    let eps = 2f64.powi(-j);
                    // undo the normalization: lambda = eps^{-(k-1+1/p)} at beta = 0
                    let f = truncated_power(k, eps, 0.0, p)?.scaled(eps.powf(k as f64 - 1.0 + p.recip()));
                    let d = f.derivative(rr)?;
                    vals.push(norm(&d, w, p)?);
                    rates.push(eps.powf(w.beta + (k - rr) as f64 - 1.0 + p.recip()));
                }
                let c = calibrate(&vals, &rates)?;
                worst = worst.max(c.upward_drift).max(c.downward_drift);
            }
            Ok(at_most(worst, 0.15, "largest calibrated drift"))
        },
    );
}

/// Alternations of `f - p` on a dense Chebyshev-angle grid, counting only
/// extrema within 1% of `error`, plus the check that nothing exceeds it by
/// more than 1%.
fn dense_alternations(f: &FunctionDescriptor, p: &ChebyshevPoly, error: f64, n: usize) -> usize {
    let r: Vec<f64> = (0..n)
        .map(|j| {
            let x = (std::f64::consts::PI * (n - 1 - j) as f64 / (n - 1) as f64).cos();
            f.eval(x) - p.eval(x)
        })
        .collect();
    if r.iter().any(|v| v.abs() > 1.01 * error) {
        return 0;
    }
    let mut count = 0;
    let mut last = 0.0;
    for &v in &r {
        if v.abs() >= 0.99 * error && v.signum() != last {
            count += 1;
            last = v.signum();
        }
    }
    count
}

fn truncated_family(k: usize, p: NormOrder) -> impl Fn(f64) -> Result<CatalogEntry> + Sync + Send {
    move |d: f64| {
        let kf = k as f64;
        entry(
            "truncated_power",
            &[("k", kf), ("eps", 2.0 * kf * kf * d * d), ("beta", 0.0), ("p", p.value())],
        )
    }
}

fn rates_suite(r: &mut Runner) {
    r.run(
        "upsilon_total_and_continuous",
        "upsilon is defined for every admissible (k,q,p,alpha,beta), continuous in delta within a case, and the (2,1,inf) branches differ by exactly |ln delta|",
        "k in 1..=4, q in {1, 1.5, 2, 3}, p in {q..inf}, (alpha, beta) in {(0,0), (0.5,0), (0,1)}, 64 deltas",
        |_| {
            let ps = [1.5, 2.0, 3.0, 4.0, 6.0, f64::INFINITY];
            let mut worst: f64 = 0.0;
            for k in 1..=4 {
                for qv in [1.0, 1.5, 2.0, 3.0] {
                    for &pv in ps.iter().filter(|&&p| p > qv) {
                        for (a, b) in [(0.0, 0.0), (0.5, 0.0), (0.0, 1.0)] {
                            let s = UpsilonSpec::new(k, q(qv), q(pv), a, b)?;
                            for j in 0..64 {
                                let d = 0.24 * 0.9f64.powi(j);
                                let u = upsilon(&s, d)?;
                                let v = upsilon(&s, d * (1.0 + 1e-9))?;
                                if !(u > 0.0 && u.is_finite()) {
                                    return Ok(at_most(f64::INFINITY, 1e-6, format!("{s:?} at {d}")));
                                }
                                worst = worst.max((v / u - 1.0).abs());
                            }
                        }
                    }
                }
            }
            let zero = UpsilonSpec::new(2, q(1.0), INF, 0.0, 0.0)?;
            let log = UpsilonSpec::new(2, q(1.0), INF, 0.0, 0.5)?;
            if zero.case() != UpsilonCase::Square || log.case() != UpsilonCase::SquareLog {
                return Ok(at_most(f64::INFINITY, 1e-6, "(2,1,inf) branches misclassified"));
            }
            for d in [0.2, 0.01, 1e-5] {
                let ratio = upsilon(&log, d)? / upsilon(&zero, d)?;
                worst = worst.max((ratio / d.ln().abs() - 1.0).abs());
            }
            Ok(at_most(worst, 1e-6, "largest relative jump for a 1e-9 change of delta"))
        },
    );
    r.run(
        "family_exponents",
        "family sweeps fit upsilon's exponent within 0.15 and its log-power within 0.5 (measured: worst gap / tolerance)",
        "truncated_power eps = 2k^2 delta^2 for (k,q,p) in {(2,1,2), (3,1,inf), (2,2,inf)}; heaviside (1,q,inf), q in {1, 2}; (1-x)^{-1/2} at (2,1,inf), w = (0,1/2); zeta_spline (1,1,2)",
        |_| {
            let ds = default_deltas();
            let mut runs: Vec<(String, SweepSpec, FamilySweep)> = Vec::new();
            for (k, qv, pv) in [(2usize, 1.0, 2.0), (3, 1.0, f64::INFINITY), (2, 2.0, f64::INFINITY)] {
                let spec = SweepSpec::new(k, JacobiWeight::UNIT, q(qv), q(pv));
                let s = family_sup_sweep("truncated_power", truncated_family(k, q(pv)), &spec, &ds)?;
                runs.push((format!("truncated_power ({k},{qv},{pv})"), spec, s));
            }
            for qv in [1.0, 2.0] {
                let spec = SweepSpec::new(1, JacobiWeight::UNIT, q(qv), INF);
                let s = family_sup_sweep("heaviside", |_| entry("heaviside", &[]), &spec, &ds)?;
                runs.push((format!("heaviside (1,{qv},inf)"), spec, s));
            }
            let spec = SweepSpec::new(2, JacobiWeight::new(0.0, 0.5), q(1.0), INF);
            let s = family_sup_sweep("inverse_power", |_| entry("inverse_power", &[("beta", 0.5)]), &spec, &ds)?;
            runs.push(("inverse_power (2,1,inf)".into(), spec, s));
            let spec = SweepSpec::new(1, JacobiWeight::UNIT, q(1.0), q(2.0));
            let s = family_sup_sweep("zeta_spline", |d| entry("zeta_spline", &[("delta", d)]), &spec, &ds)?;
            runs.push(("zeta_spline (1,1,2)".into(), spec, s));

            let mut worst: f64 = 0.0;
            let mut detail = String::new();
            for (label, spec, s) in &runs {
                let ups = UpsilonSpec::new(spec.k, spec.q, spec.p, spec.weight.alpha, spec.weight.beta)?;
                let (a, b) = ups.exponents();
                let fit = fit_rate_auto(&s.result)?;
                let score = ((fit.exponent - a).abs() / 0.15).max((fit.log_power - b).abs() / 0.5);
                if score >= worst {
                    worst = score;
                    detail = format!(
                        "{label}: fitted ({:.4}, {:.4}), upsilon ({a}, {b})",
                        fit.exponent, fit.log_power
                    );
                }
            }
            Ok(at_most(worst, 1.0, detail))
        },
    );
    r.run(
        "upper_bound_by_upsilon",
        "normalized members: omega(f, delta) / upsilon_delta is bounded, with upward drift < 20% from its value at delta = 2^-3",
        "heaviside (1,1,inf); x_+ (2,1,inf); x_+^2 (3,2,inf); (1-x)^{-1/2} (2,1,inf) w = (0,1/2); zeta_spline m = 6 (1,1,2)",
        |_| {
            let ds = default_deltas();
            let cases: Vec<(FunctionDescriptor, usize, JacobiWeight, f64, f64)> = vec![
                (heaviside(), 1, JacobiWeight::UNIT, 1.0, f64::INFINITY),
                (truncated_power_origin(2), 2, JacobiWeight::UNIT, 1.0, f64::INFINITY),
                (truncated_power_origin(3), 3, JacobiWeight::UNIT, 2.0, f64::INFINITY),
                (inverse_power(0.5)?, 2, JacobiWeight::new(0.0, 0.5), 1.0, f64::INFINITY),
                (zeta_spline(6, 1.5, 0.0, q(2.0))?, 1, JacobiWeight::UNIT, 1.0, 2.0),
            ];
            let mut worst: f64 = 0.0;
            let mut detail = String::new();
            for (f, k, w, qv, pv) in &cases {
                let spec = UpsilonSpec::new(*k, q(*qv), q(*pv), w.alpha, w.beta)?;
                let nrm = norm(f, *w, q(*pv))?;
                let ds: Vec<f64> = ds.iter().copied().filter(|&d| d <= 0.5 / *k as f64).collect();
                let ms = dt_modulus_sweep(f, &ModulusRequest::new(*k, 0.1, *w, q(*qv)), &ds)?;
                let vals: Vec<f64> = ms.iter().map(|m| m.total / nrm).collect();
                let ups: Vec<f64> = ds.iter().map(|&d| upsilon(&spec, d)).collect::<Result<_>>()?;
                let c = calibrate(&vals, &ups)?;
                if c.upward_drift > worst {
                    worst = c.upward_drift;
                    detail = format!("{} at {spec:?}", f.name);
                }
            }
            Ok(at_most(worst, 0.2, detail))
        },
    );
    r.run(
        "polynomial_lower_bound",
        "E_n(f_n) / (||w f_n||_p n^{-2/q+2/p}) for the moving truncated powers is bounded below, downward drift < 20% from n = 8",
        "(k, q, p) in {(2, 1, inf), (3, 2, inf), (2, 1, 2)}, n in {8, 12, 16, 24, 32, 48, 64}",
        |_| {
            let ns = [8usize, 12, 16, 24, 32, 48, 64];
            let mut worst: f64 = 0.0;
            for (k, qv, pv) in [(2usize, 1.0, f64::INFINITY), (3, 2.0, f64::INFINITY), (2, 1.0, 2.0)] {
                let c = moving_power_lower_bound(k, JacobiWeight::UNIT, q(qv), q(pv), &ns)?;
                worst = worst.max(c.downward_drift);
            }
            Ok(at_most(worst, 0.2, "largest downward drift"))
        },
    );
}
