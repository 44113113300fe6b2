//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line to stderr
//! (uncaptured) and then asserts.

use std::collections::BTreeMap;
use std::io::Write;

use modulus_lab::approx::{best_approx_with, default_grid_size, remez_ratio};
use modulus_lab::extremals::{catalog_get, heaviside, truncated_power_origin, CatalogEntry};
use modulus_lab::kernels::{
    a_kernel, change_of_variable_sides, inverse_roundtrip_error, kernel_bound_sup, kernel_y_grid, phi,
    psi_derivative_range, KernelPoint,
};
use modulus_lab::moduli::ModulusRequest;
use modulus_lab::rates::{
    calibrate, check_deltas, default_deltas, dyadic_deltas, family_sup_sweep, fit_points, fit_rate, inverse_check,
    jackson_check, modulus_sweep, upsilon, FamilySweep, RateModel, SweepSpec, UpsilonSpec, DEFAULT_NS,
};
use modulus_lab::verify::{run_suite, Suite};
use modulus_lab::{ChebyshevPoly, JacobiWeight, NormOrder, QuadratureConfig, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const SEED: u64 = 42;

fn report(id: u32, title: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "{tag} criterion {id:>2} ({title}): {detail}");
    assert!(pass, "criterion {id} ({title}) failed: {detail}");
}

fn q(v: f64) -> NormOrder {
    NormOrder::new(v).unwrap()
}

fn entry(name: &str, kv: &[(&str, f64)]) -> Result<CatalogEntry> {
    let params: BTreeMap<String, f64> = kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    catalog_get(name, &params)
}

// ---------------------------------------------------------------- runs

fn heaviside_request(qv: f64, w: JacobiWeight) -> ModulusRequest {
    ModulusRequest::new(1, 0.1, w, q(qv))
}

const HEAVISIDE_RUNS: [(f64, (f64, f64)); 4] = [(1.0, (0.0, 0.0)), (1.0, (0.5, 0.5)), (2.0, (0.0, 0.0)), (2.0, (0.5, 0.5))];

fn heaviside_values(refined: bool) -> Result<Vec<Vec<f64>>> {
    HEAVISIDE_RUNS
        .iter()
        .map(|&(qv, (a, b))| {
            let mut req = heaviside_request(qv, JacobiWeight::new(a, b));
            if refined {
                req = req.refined();
            }
            Ok(modulus_sweep(&heaviside(), &req, &default_deltas())?.0.values())
        })
        .collect()
}

const TRUNCATED_RUNS: [(usize, f64, f64); 3] = [(2, 1.0, 2.0), (3, 1.0, f64::INFINITY), (2, 2.0, f64::INFINITY)];

fn truncated_sweep(k: usize, qv: f64, pv: f64, refined: bool) -> Result<FamilySweep> {
    let mut spec = SweepSpec::new(k, JacobiWeight::UNIT, q(qv), q(pv));
    if refined {
        spec = spec.refined();
    }
    let kf = k as f64;
    family_sup_sweep(
        "truncated_power",
        move |d| entry("truncated_power", &[("k", kf), ("eps", 2.0 * kf * kf * d * d), ("beta", 0.0), ("p", pv)]),
        &spec,
        &default_deltas(),
    )
}

fn log_case_sweep(refined: bool) -> Result<FamilySweep> {
    let mut spec = SweepSpec::new(2, JacobiWeight::new(0.0, 0.5), q(1.0), NormOrder::INF);
    if refined {
        spec = spec.refined();
    }
    family_sup_sweep("inverse_power", |_| entry("inverse_power", &[("beta", 0.5)]), &spec, &default_deltas())
}

fn zeta_deltas() -> Vec<f64> {
    dyadic_deltas(4, 9)
}

fn zeta_sweep(refined: bool) -> Result<FamilySweep> {
    let mut spec = SweepSpec::new(1, JacobiWeight::UNIT, q(1.0), q(2.0));
    if refined {
        spec = spec.refined();
    }
    family_sup_sweep(
        "zeta_spline",
        |d| entry("zeta_spline", &[("delta", d), ("lambda", 1.5)]),
        &spec,
        &zeta_deltas(),
    )
}

const APPROX_RUNS: [(usize, f64); 3] = [(2, f64::INFINITY), (2, 2.0), (3, 1.0)];
const APPROX_NS: [usize; 7] = [8, 12, 16, 24, 32, 48, 64];

fn approx_errors(k: usize, qv: f64, refined: bool) -> Result<Vec<f64>> {
    let f = truncated_power_origin(k);
    let quad = if refined {
        QuadratureConfig::default().refined()
    } else {
        QuadratureConfig::default()
    };
    modulus_lab::par::try_map(&APPROX_NS, |&n| {
        let m = default_grid_size(n) * if refined { 2 } else { 1 };
        best_approx_with(&f, n, JacobiWeight::UNIT, q(qv), m, &quad).map(|r| r.error)
    })
}

// ---------------------------------------------------------------- 1

/// Upsilon from the six-case table, written out independently.
fn upsilon_table(k: usize, qv: f64, pv: f64, alpha: f64, beta: f64, delta: f64) -> f64 {
    if k >= 2 && !(k == 2 && qv == 1.0 && pv == f64::INFINITY) {
        delta.powf(2.0 / qv - 2.0 / pv)
    } else if k == 2 && (alpha != 0.0 || beta != 0.0) {
        delta.powi(2) * delta.ln().abs()
    } else if k == 2 {
        delta.powi(2)
    } else if pv < 2.0 * qv {
        delta.powf(2.0 / qv - 2.0 / pv)
    } else if pv == 2.0 * qv {
        delta.powf(1.0 / qv) * delta.ln().abs().powf(1.0 / (2.0 * qv))
    } else {
        delta.powf(1.0 / qv)
    }
}

#[test]
fn criterion_01_upsilon_dispatch() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let qs = [1.0, 1.5, 2.0, 3.0];
    let mut mismatches = 0;
    let mut cases = std::collections::BTreeSet::new();
    let mut total = 0;
    // every (k, q, p) corner of the table, then seeded fill to 200
    let mut matrix: Vec<(usize, f64, f64, f64, f64)> = vec![
        (2, 1.0, f64::INFINITY, 0.0, 0.0),
        (2, 1.0, f64::INFINITY, 0.5, 0.0),
        (2, 1.0, f64::INFINITY, 0.0, 1.0),
        (1, 1.0, 1.5, 0.0, 0.0),
        (1, 1.0, 2.0, 0.0, 0.0),
        (1, 1.5, 3.0, 1.0, 1.0),
        (1, 1.0, f64::INFINITY, 0.0, 0.0),
        (3, 2.0, 4.0, 0.5, 0.5),
    ];
    while matrix.len() < 200 {
        let k = rng.random_range(1..=4usize);
        let qv = qs[rng.random_range(0..qs.len())];
        let pv = match rng.random_range(0..4) {
            0 => f64::INFINITY,
            1 => 2.0 * qv,
            _ => qv * rng.random_range(1.01..4.0),
        };
        let (a, b) = match rng.random_range(0..3) {
            0 => (0.0, 0.0),
            _ => (rng.random_range(0.0..2.0), rng.random_range(0.0..2.0)),
        };
        matrix.push((k, qv, pv, a, b));
    }
    for (k, qv, pv, a, b) in matrix {
        let spec = UpsilonSpec::new(k, q(qv), q(pv), a, b).unwrap();
        cases.insert(format!("{:?}", spec.case()));
        let delta = rng.random_range(1e-6..0.249);
        total += 1;
        let got = upsilon(&spec, delta).unwrap();
        if got.to_bits() != upsilon_table(k, qv, pv, a, b, delta).to_bits() {
            mismatches += 1;
        }
    }
    report(
        1,
        "upsilon dispatch",
        mismatches == 0 && cases.len() == 6,
        &format!("{mismatches} of {total} bitwise mismatches; {} of 6 cases exercised", cases.len()),
    );
}

// ---------------------------------------------------------------- 2

#[test]
fn criterion_02_heaviside_rate() {
    let values = heaviside_values(false).unwrap();
    let ds = default_deltas();
    let mut pass = true;
    let mut parts = Vec::new();
    for (&(qv, (a, b)), vals) in HEAVISIDE_RUNS.iter().zip(&values) {
        let pts: Vec<(f64, f64)> = ds.iter().copied().zip(vals.iter().copied()).collect();
        let fit = fit_points(&pts, RateModel::PurePower).unwrap();
        pass &= (fit.exponent - 1.0 / qv).abs() <= 0.1;
        parts.push(format!("q={qv} w=({a},{b}) slope {:.4}", fit.exponent));
    }
    report(2, "heaviside rate 1/q +- 0.1", pass, &parts.join("; "));
}

// ---------------------------------------------------------------- 3

#[test]
fn criterion_03_truncated_power_rate() {
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, qv, pv) in TRUNCATED_RUNS {
        let s = truncated_sweep(k, qv, pv, false).unwrap();
        let fit = fit_rate(&s.result, RateModel::PurePower).unwrap();
        let want = 2.0 / qv - 2.0 / pv;
        let spec = UpsilonSpec::new(k, q(qv), q(pv), 0.0, 0.0).unwrap();
        let ups: Vec<f64> = s.result.abscissae().iter().map(|&d| upsilon(&spec, d).unwrap()).collect();
        let cal = calibrate(&s.result.values(), &ups).unwrap();
        pass &= (fit.exponent - want).abs() <= 0.15 && cal.upward_drift < 0.2;
        parts.push(format!(
            "({k},{qv},{pv}) slope {:.4} (want {want}), drift {:.1}%",
            fit.exponent,
            100.0 * cal.upward_drift
        ));
    }
    report(3, "truncated power rate +- 0.15, drift < 20%", pass, &parts.join("; "));
}

// ---------------------------------------------------------------- 4

/// Ordinary least squares of y on x: (slope, r^2).
fn linear(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    (sxy / sxx, sxy * sxy / (sxx * syy))
}

#[test]
fn criterion_04_log_factor_case() {
    let main = log_case_sweep(false).unwrap().main_part();
    let xs: Vec<f64> = main.abscissae().iter().map(|d| (1.0 / d).ln()).collect();
    let ys: Vec<f64> = main.points.iter().map(|(d, v)| v / (d * d)).collect();
    let (slope, r2) = linear(&xs, &ys);
    report(
        4,
        "Omega/delta^2 linear in ln(1/delta), r^2 >= 0.95",
        slope > 0.0 && r2 >= 0.95,
        &format!("slope {slope:.4}, r^2 {r2:.6}, Omega/delta^2 from {:.3} to {:.3}", ys[0], ys[ys.len() - 1]),
    );
}

// ---------------------------------------------------------------- 5

#[test]
fn criterion_05_zeta_lower_bound() {
    let main = zeta_sweep(false).unwrap().main_part();
    let ratios: Vec<f64> = main
        .points
        .iter()
        .map(|&(d, v)| {
            let l = d.ln().abs();
            v / (d * l.sqrt() / l.ln().abs().powf(0.75))
        })
        .collect();
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    report(
        5,
        "zeta spline min/max >= 0.5",
        min / max >= 0.5,
        &format!("min/max {:.4}, ratios {ratios:.4?}", min / max),
    );
}

// ---------------------------------------------------------------- 6

#[test]
fn criterion_06_kernel_bound() {
    let mut worst_change: f64 = 0.0;
    for k in 1..=3 {
        for b in [-0.25, 0.0, 0.5, 1.0] {
            let s9 = kernel_bound_sup(k, b, 2f64.powi(-9), 200).unwrap().0;
            let s10 = kernel_bound_sup(k, b, 2f64.powi(-10), 200).unwrap().0;
            assert!(s9.is_finite() && s10.is_finite());
            worst_change = worst_change.max((s10 / s9 - 1.0).abs());
        }
    }
    let mut odd_max: f64 = 0.0;
    for k in [1, 3] {
        for j in 4..=10 {
            let h = 2f64.powi(-j);
            for y in kernel_y_grid(k, h, 200) {
                odd_max = odd_max.max(a_kernel(&KernelPoint::new(y, -0.5, k, h).unwrap()).abs());
            }
        }
    }
    // beta = 0, k even: sup_y |A_k| / h^k over h, and over the theta band
    let mut consts = Vec::new();
    for j in 4..=10 {
        let h = 2f64.powi(-j);
        let ys = kernel_y_grid(2, h, 200);
        let c = ys
            .iter()
            .map(|&y| a_kernel(&KernelPoint::new(y, 0.0, 2, h).unwrap()).abs() / (h * h))
            .fold(0.0, f64::max);
        consts.push(c);
    }
    let cmax = consts.iter().cloned().fold(0.0, f64::max);
    let cmin = consts.iter().cloned().fold(f64::INFINITY, f64::min);
    let even_spread = cmax / cmin - 1.0;
    report(
        6,
        "kernel bound",
        worst_change < 0.1 && odd_max <= 1e-10 && even_spread < 0.1,
        &format!(
            "largest change 2^-9 -> 2^-10 {:.3}%; beta=-1/2 odd k max |A| {odd_max:.2e}; beta=0 k=2 calibration {cmin:.4}..{cmax:.4}",
            100.0 * worst_change
        ),
    );
}

// ---------------------------------------------------------------- 7

#[test]
fn criterion_07_psi_machinery() {
    let round = [0.01, 0.08, 0.3].iter().map(|&e| inverse_roundtrip_error(e, 100, 20)).fold(0.0, f64::max);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for e in [0.01, 0.08, 0.3] {
        let (a, b) = psi_derivative_range(e, 200, 21).unwrap();
        lo = lo.min(a);
        hi = hi.max(b);
    }
    let f = |y: f64| if (0.0..=1.0).contains(&y) { 1.0 } else { 0.0 };
    let (l, r) = change_of_variable_sides(f, phi, &[0.0, 1.0], 0.08, 0.1, &QuadratureConfig::default()).unwrap();
    let gap = (l / r - 1.0).abs();
    report(
        7,
        "psi machinery",
        round <= 1e-10 && lo >= 0.5 && hi <= 2.0 && gap <= 1e-3,
        &format!("roundtrip {round:.2e}; psi' in [{lo:.4}, {hi:.4}]; change of variable gap {gap:.2e}"),
    );
}

// ---------------------------------------------------------------- 8

#[test]
fn criterion_08_best_approximation_rates() {
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, qv) in APPROX_RUNS {
        let errs = approx_errors(k, qv, false).unwrap();
        let pts: Vec<(f64, f64)> = APPROX_NS.iter().map(|&n| n as f64).zip(errs).collect();
        let slope = fit_points(&pts, RateModel::PurePower).unwrap().exponent;
        let want = -(k as f64 - 1.0 + 1.0 / qv);
        pass &= (slope - want).abs() <= 0.15;
        parts.push(format!("(k={k}, q={qv}) slope {slope:.4} (want {want:.4})"));
    }
    report(8, "E_n slopes +- 0.15", pass, &parts.join("; "));
}

// ---------------------------------------------------------------- 9

#[test]
fn criterion_09_jackson_inverse() {
    let w = JacobiWeight::UNIT;
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, f, k) in [
        ("heaviside", heaviside(), 1usize),
        ("x_+", truncated_power_origin(2), 2),
        ("x_+^2", truncated_power_origin(3), 3),
    ] {
        let ns: Vec<usize> = DEFAULT_NS.iter().copied().filter(|&n| n >= 4 * k).collect();
        let j = jackson_check(&f, k, w, q(2.0), &ns).unwrap();
        let i = inverse_check(&f, k, w, q(2.0), &check_deltas(k, 7)).unwrap();
        pass &= j.passed() && i.passed();
        for (label, rep) in [("jackson", &j), ("inverse", &i)] {
            let s = rep.summary.as_ref().expect("non-empty report");
            parts.push(format!(
                "{name} {label}: max/median {:.3}, trend {:.3}",
                s.max_over_median, s.trend_slope
            ));
        }
    }
    report(9, "Jackson and inverse ratios", pass, &parts.join("; "));
}

// ---------------------------------------------------------------- 10

fn remez_max(trials: usize, qv: NormOrder, w: JacobiWeight) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let quad = QuadratureConfig::default();
    let cap = 1.0 / 32.0;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let c: Vec<f64> = (0..=32).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let p = ChebyshevPoly::new(c, 32);
        // interval of arcsine capacity 1/32 centred at a random angle
        let t = rng.random_range(-std::f64::consts::FRAC_PI_2 + cap / 2.0..std::f64::consts::FRAC_PI_2 - cap / 2.0);
        let e = ((t - cap / 2.0).sin(), (t + cap / 2.0).sin());
        let r = remez_ratio(&p, Some(e), w, qv, &quad).unwrap();
        assert!((r.capacity - cap).abs() < 1e-12);
        worst = worst.max(r.ratio);
    }
    worst
}

#[test]
fn criterion_10_remez() {
    let mut pass = true;
    let mut parts = Vec::new();
    for qv in [q(1.0), q(2.0), NormOrder::INF] {
        for w in [JacobiWeight::UNIT, JacobiWeight::new(0.5, 1.0)] {
            let a = remez_max(100, qv, w);
            let b = remez_max(200, qv, w);
            let change = b / a - 1.0;
            pass &= a.is_finite() && change < 0.1;
            parts.push(format!("q={qv} w=({},{}) max {a:.4} -> {b:.4}", w.alpha, w.beta));
        }
    }
    report(10, "Remez ratio finite, stable under doubled trials", pass, &parts.join("; "));
}

// ---------------------------------------------------------------- 11

fn worst_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (y / x - 1.0).abs()).fold(0.0, f64::max)
}

#[test]
fn criterion_11_oracle_equivalence() {
    let mut parts = Vec::new();
    let mut worst: f64 = 0.0;
    let mut note = |label: String, g: f64| {
        worst = worst.max(g);
        parts.push(format!("{label} {g:.1e}"));
    };
    let base = heaviside_values(false).unwrap();
    let fine = heaviside_values(true).unwrap();
    note("heaviside".into(), base.iter().zip(&fine).map(|(a, b)| worst_gap(a, b)).fold(0.0, f64::max));
    for (k, qv, pv) in TRUNCATED_RUNS {
        let a = truncated_sweep(k, qv, pv, false).unwrap().result.values();
        let b = truncated_sweep(k, qv, pv, true).unwrap().result.values();
        note(format!("truncated_power ({k},{qv},{pv})"), worst_gap(&a, &b));
    }
    let a = log_case_sweep(false).unwrap().main_part().values();
    let b = log_case_sweep(true).unwrap().main_part().values();
    note("inverse_power".into(), worst_gap(&a, &b));
    let a = zeta_sweep(false).unwrap().main_part().values();
    let b = zeta_sweep(true).unwrap().main_part().values();
    note("zeta_spline".into(), worst_gap(&a, &b));
    for (k, qv) in APPROX_RUNS {
        let a = approx_errors(k, qv, false).unwrap();
        let b = approx_errors(k, qv, true).unwrap();
        note(format!("E_n (k={k}, q={qv})"), worst_gap(&a, &b));
    }
    report(11, "refined recomputation within 2%", worst < 0.02, &parts.join("; "));
}

// ---------------------------------------------------------------- 12

#[test]
fn criterion_12_property_suites() {
    let reports = run_suite(Suite::All, SEED);
    let total: usize = reports.iter().map(|r| r.checks.len()).sum();
    let failures: Vec<String> = reports.iter().flat_map(|r| r.failures().map(|c| c.message())).collect();
    report(
        12,
        "verify --suite all",
        failures.is_empty(),
        &format!("{} of {total} checks passed{}", total - failures.len(), if failures.is_empty() {
            String::new()
        } else {
            format!("; {}", failures.join(" | "))
        }),
    );
}
