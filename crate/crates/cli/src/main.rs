mod record;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use modulus_lab::approx::{best_approx, default_grid_size};
use modulus_lab::extremals::{catalog_get, catalog_list, CatalogEntry, CatalogInfo};
use modulus_lab::moduli::{dt_modulus_sweep, ModulusRequest};
use modulus_lab::rates::{
    default_deltas, family_sup_sweep, fit_points, fit_rate_auto, upsilon, RateFit, RateModel, SweepSpec,
    UpsilonSpec, DEFAULT_NS,
};
use modulus_lab::verify::{run_suite, Suite};
use modulus_lab::{Error, JacobiWeight, NormOrder};
use serde_json::{json, Value};

use record::{Format, Row, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "modulus-lab", version, about = "Weighted DT moduli and best weighted polynomial approximation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Order of the difference / modulus.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Norm order of the modulus or of E_n (`inf` allowed).
    #[arg(long, global = true)]
    q: Option<NormOrder>,
    /// Norm order of the normalization (`inf` allowed).
    #[arg(long, global = true)]
    p: Option<NormOrder>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// One step bound or a comma-separated list.
    #[arg(long, global = true, value_delimiter = ',')]
    delta: Option<Vec<f64>>,
    /// One degree or a comma-separated list.
    #[arg(long, global = true, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Catalog member, optionally with parameters: `name(key=value,...)`.
    #[arg(long = "fn", global = true)]
    function: Option<String>,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Directory for result files; without it only the summary is printed.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Also write one two-column `.dat` file per curve.
    #[arg(long, global = true)]
    plot_data: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Weighted DT modulus of a catalog member.
    Modulus,
    /// Degree-n best weighted approximation error.
    Approx,
    /// Rate functions, family sweeps and fits.
    Rates {
        #[command(subcommand)]
        op: RatesOp,
    },
    /// Run invariant suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: Suite,
    },
    /// List the extremal catalog.
    Catalog {
        #[arg(long)]
        name: Option<String>,
    },
}

#[derive(Subcommand, Debug)]
enum RatesOp {
    /// Upsilon_delta^{alpha,beta}(k, q, p).
    Upsilon,
    /// Family supremum sweep with a rate fit.
    Sweep,
    /// Fit a rate to a sweep: a CSV written by this tool, or a fresh
    /// modulus (`--delta`) or E_n (`--n`) sweep of `--fn`.
    Fit {
        input: Option<PathBuf>,
        /// Curve to fit from the CSV (default: `total`, else the first).
        #[arg(long)]
        component: Option<String>,
    },
}

/// Failure classes with their exit codes.
enum Failure {
    Usage(String),
    Numerical(Error),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownEntry(_) => Failure::Usage(e.to_string()),
            other => Failure::Numerical(other),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// What a command produced.
struct Output {
    rows: Vec<Row>,
    payload: Value,
    summary: String,
    verify_failed: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Ok(v) = std::env::var("MODULUS_LAB_WORKERS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                modulus_lab::par::set_worker_cap(n);
            }
            _ => {
                eprintln!("error: MODULUS_LAB_WORKERS must be a positive integer, got `{v}`");
                return ExitCode::from(1);
            }
        }
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Io(e)) => {
            eprintln!("i/o failure: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let cfg = config(cli);
    if cli.plot_data && cli.out.is_none() {
        return Err(usage("--plot-data needs --out"));
    }
    let out = match &cli.command {
        Command::Modulus => modulus(cli)?,
        Command::Approx => approx(cli)?,
        Command::Rates { op: RatesOp::Upsilon } => rates_upsilon(cli)?,
        Command::Rates { op: RatesOp::Sweep } => rates_sweep(cli)?,
        Command::Rates {
            op: RatesOp::Fit { input, component },
        } => rates_fit(cli, input.as_ref(), component.as_deref())?,
        Command::Verify { suite } => verify(*suite, cli.seed),
        Command::Catalog { name } => catalog(name.as_deref())?,
    };
    match (&cfg.output_dir, cfg.format) {
        (Some(dir), _) => {
            print!("{}", out.summary);
            for path in record::write_outputs(&cfg, dir, &out.payload, &out.rows, cli.plot_data)? {
                println!("wrote {}", path.display());
            }
        }
        (None, Format::Json) => print!("{}", record::record_json(&cfg, &out.payload, Some(&out.rows))),
        (None, Format::Csv) => print!("{}", out.summary),
    }
    Ok(if out.verify_failed { 3 } else { 0 })
}

fn config(cli: &Cli) -> RunConfig {
    let mut parameters = BTreeMap::new();
    let mut put = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            parameters.insert(k.to_string(), v);
        }
    };
    let list = |xs: &[f64]| xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
    put("k", cli.k.map(|v| v.to_string()));
    put("q", cli.q.map(|v| v.to_string()));
    put("p", cli.p.map(|v| v.to_string()));
    put("alpha", cli.alpha.map(|v| format!("{v:?}")));
    put("beta", cli.beta.map(|v| format!("{v:?}")));
    put("delta", cli.delta.as_deref().map(list));
    put(
        "n",
        cli.n.as_ref().map(|ns| ns.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")),
    );
    put("fn", cli.function.as_ref().map(|s| s.replace(' ', "")));
    let command = match &cli.command {
        Command::Modulus => "modulus".to_string(),
        Command::Approx => "approx".to_string(),
        Command::Rates { op } => {
            if let RatesOp::Fit { input, component } = op {
                put("input", input.as_ref().map(|p| p.display().to_string()));
                put("component", component.clone());
            }
            match op {
                RatesOp::Upsilon => "rates upsilon",
                RatesOp::Sweep => "rates sweep",
                RatesOp::Fit { .. } => "rates fit",
            }
            .to_string()
        }
        Command::Verify { suite } => {
            put("suite", Some(suite.to_string()));
            "verify".to_string()
        }
        Command::Catalog { name } => {
            put("name", name.clone());
            "catalog".to_string()
        }
    };
    RunConfig {
        command,
        parameters,
        seed: cli.seed,
        output_dir: cli.out.clone(),
        format: cli.format,
    }
}

// ------------------------------------------------------------------ inputs

fn need<T: Copy>(v: Option<T>, flag: &str) -> Result<T, Failure> {
    v.ok_or_else(|| usage(format!("missing --{flag}")))
}

fn weight(cli: &Cli) -> Result<JacobiWeight, Failure> {
    let (a, b) = (cli.alpha.unwrap_or(0.0), cli.beta.unwrap_or(0.0));
    if !(a.is_finite() && b.is_finite()) {
        return Err(usage("--alpha and --beta must be finite"));
    }
    Ok(JacobiWeight::new(a, b))
}

/// `name` or `name(key=value,...)`.
fn parse_fn(spec: &str) -> Result<(String, BTreeMap<String, f64>), Failure> {
    let spec = spec.trim();
    let (name, rest) = match spec.find('(') {
        Some(i) if spec.ends_with(')') => (&spec[..i], &spec[i + 1..spec.len() - 1]),
        Some(_) => return Err(usage(format!("malformed --fn `{spec}`"))),
        None => (spec, ""),
    };
    let mut params = BTreeMap::new();
    for kv in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| usage(format!("expected key=value in --fn, got `{kv}`")))?;
        let v: f64 = match v.trim() {
            "inf" => f64::INFINITY,
            t => t.parse().map_err(|_| usage(format!("bad number `{t}` for `{k}` in --fn")))?,
        };
        if params.insert(k.trim().to_string(), v).is_some() {
            return Err(usage(format!("duplicate key `{k}` in --fn")));
        }
    }
    Ok((name.trim().to_string(), params))
}

fn info(name: &str) -> Result<CatalogInfo, Failure> {
    catalog_list()
        .into_iter()
        .find(|c| c.name == name)
        .ok_or_else(|| usage(format!("unknown catalog entry `{name}` (see `catalog`)")))
}

/// Fills the parameters the member takes but `--fn` left out from the
/// global flags: `k`, `p`, the normalization `beta`, and the delta-indexed
/// ones (`delta`, and `eps = 2k^2 delta^2` for truncated powers).
fn member(cli: &Cli, name: &str, given: &BTreeMap<String, f64>, delta: Option<f64>) -> Result<CatalogEntry, Failure> {
    let info = info(name)?;
    let takes = |key: &str| info.params.iter().any(|(n, _)| *n == key) || (name == "zeta_spline" && key == "delta");
    let mut params = given.clone();
    let mut fill = |key: &str, v: Option<f64>| {
        if takes(key) && !params.contains_key(key) {
            if let Some(v) = v {
                params.insert(key.to_string(), v);
            }
        }
    };
    fill("k", cli.k.map(|k| k as f64));
    fill("p", cli.p.map(|p| p.value()));
    if name == "truncated_power" {
        fill("beta", cli.beta);
        let k = given.get("k").copied().or(cli.k.map(|k| k as f64));
        fill("eps", delta.zip(k).map(|(d, k)| 2.0 * k * k * d * d));
    }
    if !(name == "zeta_spline" && given.contains_key("m")) {
        fill("delta", delta);
    }
    Ok(catalog_get(name, &params)?)
}

fn deltas(cli: &Cli) -> Result<Vec<f64>, Failure> {
    let ds = cli.delta.clone().unwrap_or_else(default_deltas);
    if ds.is_empty() || ds.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(usage("--delta values must be positive"));
    }
    Ok(ds)
}

// ------------------------------------------------------------------ tables

fn table(head: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = head.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| if c.parse::<f64>().is_ok() { format!("{c:>w$}") } else { format!("{c:<w$}") })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(head.to_vec(), &mut out);
    for r in rows {
        line(r.iter().map(String::as_str).collect(), &mut out);
    }
    out
}

/// Shortest decimal that agrees with `x` to 15 significant digits.
fn short(x: f64) -> String {
    format!("{x:.14e}").parse::<f64>().map_or_else(|_| x.to_string(), |v| v.to_string())
}

fn g(x: f64) -> String {
    format!("{x:.6e}")
}

fn fit_line(fit: &RateFit) -> String {
    format!(
        "fit ({:?}): exponent {:.4}, log-power {:.4}, constant {:.4e}, r^2 {:.6}, residual max {:.3e}\n",
        fit.model, fit.exponent, fit.log_power, fit.constant, fit.r_squared, fit.residual_max
    )
}

// ------------------------------------------------------------------ commands

fn modulus(cli: &Cli) -> Result<Output, Failure> {
    let spec = cli.function.as_deref().ok_or_else(|| usage("missing --fn"))?;
    let (name, given) = parse_fn(spec)?;
    let k = need(cli.k, "k")?;
    let q = need(cli.q, "q")?;
    let w = weight(cli)?;
    let ds = deltas(cli)?;
    let dmax = ds.iter().cloned().fold(0.0, f64::max);
    let entry = member(cli, &name, &given, Some(dmax))?;
    let results = dt_modulus_sweep(&entry.descriptor, &ModulusRequest::new(k, dmax, w, q), &ds)?;
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for (d, m) in ds.iter().zip(&results) {
        for (c, v) in [("main", m.main), ("forward", m.forward), ("backward", m.backward), ("total", m.total)] {
            rows.push(Row::new(*d, v, c));
        }
        cells.push(vec![g(*d), g(m.main), g(m.forward), g(m.backward), g(m.total)]);
    }
    let summary = format!(
        "modulus of {} (k = {k}, q = {q}, w = ({}, {}))\n{}",
        entry.descriptor.name,
        w.alpha,
        w.beta,
        table(&["delta", "main", "forward", "backward", "total"], &cells)
    );
    let payload = json!({
        "function": entry.descriptor.name,
        "params": entry.params,
        "k": k, "q": q, "weight": w,
        "results": ds.iter().zip(&results).map(|(d, m)| json!({"delta": d, "modulus": m})).collect::<Vec<_>>(),
    });
    Ok(Output {
        rows,
        payload,
        summary,
        verify_failed: false,
    })
}

fn approx(cli: &Cli) -> Result<Output, Failure> {
    let spec = cli.function.as_deref().ok_or_else(|| usage("missing --fn"))?;
    let (name, given) = parse_fn(spec)?;
    let q = need(cli.q, "q")?;
    let w = weight(cli)?;
    let ns = cli.n.clone().unwrap_or_else(|| DEFAULT_NS.to_vec());
    let entry = member(cli, &name, &given, cli.delta.as_ref().and_then(|d| d.first().copied()))?;
    let f = &entry.descriptor;
    let results = modulus_lab::par::try_map(&ns, |&n| best_approx(f, n, w, q, default_grid_size(n)))?;
    let rows = ns.iter().zip(&results).map(|(&n, r)| Row::new(n as f64, r.error, "error")).collect();
    let cells: Vec<Vec<String>> = ns
        .iter()
        .zip(&results)
        .map(|(n, r)| vec![n.to_string(), g(r.error), format!("{:?}", r.solver), r.iterations.to_string()])
        .collect();
    let summary = format!(
        "E_n of {} (q = {q}, w = ({}, {}))\n{}",
        f.name,
        w.alpha,
        w.beta,
        table(&["n", "error", "solver", "iterations"], &cells)
    );
    let payload = json!({
        "function": f.name,
        "params": entry.params,
        "q": q, "weight": w,
        "results": ns.iter().zip(&results).map(|(n, r)| json!({"n": n, "result": r})).collect::<Vec<_>>(),
    });
    Ok(Output {
        rows,
        payload,
        summary,
        verify_failed: false,
    })
}

fn upsilon_spec(cli: &Cli) -> Result<UpsilonSpec, Failure> {
    let w = weight(cli)?;
    Ok(UpsilonSpec::new(need(cli.k, "k")?, need(cli.q, "q")?, need(cli.p, "p")?, w.alpha, w.beta)?)
}

fn rates_upsilon(cli: &Cli) -> Result<Output, Failure> {
    let spec = upsilon_spec(cli)?;
    let ds = deltas(cli)?;
    let vals = ds.iter().map(|&d| upsilon(&spec, d)).collect::<Result<Vec<_>, _>>()?;
    let rows = ds.iter().zip(&vals).map(|(&d, &v)| Row::new(d, v, "upsilon")).collect();
    let (a, b) = spec.exponents();
    let mut summary = String::new();
    if cli.delta.as_ref().is_some_and(|d| d.len() == 1) {
        let _ = writeln!(summary, "{}", short(vals[0]));
    } else {
        let _ = writeln!(summary, "upsilon case {:?}: delta^{a} |ln delta|^{b}", spec.case());
        let cells: Vec<Vec<String>> = ds.iter().zip(&vals).map(|(d, v)| vec![g(*d), short(*v)]).collect();
        summary.push_str(&table(&["delta", "upsilon"], &cells));
    }
    let payload = json!({
        "spec": spec, "case": spec.case(), "exponent": a, "log_power": b,
        "values": ds.iter().zip(&vals).map(|(d, v)| json!({"delta": d, "upsilon": v})).collect::<Vec<_>>(),
    });
    Ok(Output {
        rows,
        payload,
        summary,
        verify_failed: false,
    })
}

fn rates_sweep(cli: &Cli) -> Result<Output, Failure> {
    let spec_str = cli.function.as_deref().ok_or_else(|| usage("missing --fn"))?;
    let (name, given) = parse_fn(spec_str)?;
    let ups = upsilon_spec(cli)?;
    let sweep_spec = SweepSpec::new(ups.k, weight(cli)?, ups.q, ups.p);
    let ds = deltas(cli)?;
    info(&name)?;
    let family = |d: f64| {
        member(cli, &name, &given, Some(d)).map_err(|f| match f {
            Failure::Numerical(e) => e,
            Failure::Usage(m) => Error::Spec(m),
            Failure::Io(e) => Error::Spec(e.to_string()),
        })
    };
    let sweep = family_sup_sweep(&name, family, &sweep_spec, &ds)?;
    let fit = fit_rate_auto(&sweep.result)?;
    let (a, b) = ups.exponents();
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for ((&(d, total), m), norm) in sweep.result.points.iter().zip(&sweep.moduli).zip(&sweep.norms) {
        for (c, v) in [("main", m.main), ("forward", m.forward), ("backward", m.backward), ("total", total)] {
            rows.push(Row::new(d, v, c));
        }
        rows.push(Row::new(d, upsilon(&ups, d).unwrap_or(f64::NAN), "upsilon"));
        cells.push(vec![g(d), g(*norm), g(m.main), g(total)]);
    }
    let mut summary = format!(
        "family sweep of {name} (k = {}, q = {}, p = {}, w = ({}, {}))\n",
        ups.k, ups.q, ups.p, ups.alpha, ups.beta
    );
    summary.push_str(&table(&["delta", "norm", "main", "total"], &cells));
    summary.push_str(&fit_line(&fit));
    let _ = writeln!(summary, "upsilon: exponent {a}, log-power {b}");
    let payload = json!({
        "family": name, "params": given, "spec": sweep_spec,
        "sweep": sweep, "fit": fit,
        "upsilon": {"case": ups.case(), "exponent": a, "log_power": b},
    });
    Ok(Output {
        rows,
        payload,
        summary,
        verify_failed: false,
    })
}

fn rates_fit(cli: &Cli, input: Option<&PathBuf>, component: Option<&str>) -> Result<Output, Failure> {
    let (label, points) = match input {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let rows = record::parse_csv(&text).map_err(usage)?;
            let wanted = match component {
                Some(c) => c.to_string(),
                None if rows.iter().any(|r| r.component == "total") => "total".into(),
                None => rows.first().map(|r| r.component.clone()).ok_or_else(|| usage("empty CSV"))?,
            };
            let pts: Vec<(f64, f64)> =
                rows.iter().filter(|r| r.component == wanted).map(|r| (r.abscissa, r.value)).collect();
            if pts.is_empty() {
                return Err(usage(format!("no rows with component `{wanted}`")));
            }
            (format!("{} [{wanted}]", path.display()), pts)
        }
        None => {
            let out = if cli.n.is_some() { approx(cli)? } else { modulus(cli)? };
            let c = if cli.n.is_some() { "error" } else { "total" };
            let pts = out.rows.iter().filter(|r| r.component == c).map(|r| (r.abscissa, r.value)).collect();
            (format!("{} [{c}]", cli.function.as_deref().unwrap_or_default()), pts)
        }
    };
    let mut pts = points;
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let pure = fit_points(&pts, RateModel::PurePower)?;
    let log = fit_points(&pts, RateModel::PowerLog)?;
    let chosen = if log.residual_max <= modulus_lab::rates::LOG_PREFERENCE * pure.residual_max {
        log
    } else {
        pure
    };
    let mut summary = format!("rate fit of {label} over {} points\n", pts.len());
    summary.push_str(&fit_line(&pure));
    summary.push_str(&fit_line(&log));
    let _ = writeln!(summary, "chosen: {:?}", chosen.model);
    let rows = pts
        .iter()
        .map(|&(x, _)| Row::new(x, chosen.constant * x.powf(chosen.exponent) * x.ln().abs().powf(chosen.log_power), "fit"))
        .chain(pts.iter().map(|&(x, y)| Row::new(x, y, "data")))
        .collect();
    let payload = json!({"source": label, "pure_power": pure, "power_log": log, "chosen": chosen});
    Ok(Output {
        rows,
        payload,
        summary,
        verify_failed: false,
    })
}

fn verify(suite: Suite, seed: u64) -> Output {
    let reports = run_suite(suite, seed);
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    let mut failed = false;
    for rep in &reports {
        for (i, c) in rep.checks.iter().enumerate() {
            rows.push(Row::new(i as f64, c.measured, &format!("{}.{}", c.suite, c.name)));
            cells.push(vec![
                if c.pass { "PASS" } else { "FAIL" }.to_string(),
                c.suite.to_string(),
                c.name.clone(),
                g(c.measured),
                g(c.bound),
            ]);
            if !c.pass {
                failed = true;
                eprintln!("{}", c.message());
            }
        }
    }
    let total = cells.len();
    let passed = cells.iter().filter(|c| c[0] == "PASS").count();
    let mut summary = table(&["verdict", "suite", "check", "measured", "bound"], &cells);
    let _ = writeln!(summary, "{passed} of {total} checks passed (seed {seed})");
    Output {
        rows,
        payload: json!({ "reports": reports }),
        summary,
        verify_failed: failed,
    }
}

fn catalog(name: Option<&str>) -> Result<Output, Failure> {
    let list: Vec<CatalogInfo> = match name {
        Some(n) => vec![info(n)?],
        None => catalog_list(),
    };
    let cells: Vec<Vec<String>> = list
        .iter()
        .map(|c| {
            let params = c
                .params
                .iter()
                .map(|(n, d)| match d {
                    Some(v) => format!("{n}={v}"),
                    None => n.to_string(),
                })
                .collect::<Vec<_>>()
                .join(",");
            vec![c.name.to_string(), params, format!("{:?}", c.law), c.construction.to_string()]
        })
        .collect();
    Ok(Output {
        rows: Vec::new(),
        payload: json!({ "entries": list }),
        summary: table(&["name", "params", "law", "construction"], &cells),
        verify_failed: false,
    })
}
