//! `twwc`: rate regions, exponent bounds, codebook simulation and Fourier-Motzkin elimination
//! for two-way wiretap channels.
//!
//! Exit codes: 0 success, 2 input error, 3 sizing guard, 1 anything else.

mod io;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use num_rational::BigRational;
use serde_json::{json, Value};
use twwc::exponents::{bounds_additive, bounds_constant_composition, bounds_iid, default_s_grid_cc, default_s_grid_iid};
use twwc::regions::{
    fourier_motzkin, grid_laws, region_additive, region_for, region_gaussian_inner, region_gaussian_inner_hull,
    region_gaussian_outer, region_time_share, region_union, AdditiveFlavor, Scalar, TimeSharingPlan, DEFAULT_GRID,
};
use twwc::simulator::{exact_leakage, generate_codebook, run_error_trials, verify_gallager, verify_resolvability};
use twwc::{CodebookParams, CostSpec, FactorMode, InputMode, LinearSystem, RateRegion2D, SecrecyFlavor, VerifyMethod, VerifyReport};

use io::{input_mode, parse_json, Arithmetic, Channel, ExponentSpec, GallagerSpec, RegionSpec, ResolvabilitySpec, SimulateSpec, SystemJson};
use output::{cell, write_atomic, Artifact};

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_TRIALS: usize = 10_000;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Sizing(String),
    #[error("{0}")]
    Other(String),
}

impl From<twwc::Error> for CliError {
    fn from(e: twwc::Error) -> Self {
        match e {
            twwc::Error::Sizing(_) => CliError::Sizing(e.to_string()),
            twwc::Error::NonConvergence { .. } => CliError::Other(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Sizing(_) => 3,
            CliError::Other(_) => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Region,
    Exponent,
    Simulate,
    VerifyResolvability,
    VerifyGallager,
    Fm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FactorModeArg {
    Exact,
    Bound,
}

/// Two-way wiretap channel laboratory. All quantities are in nats unless --bits is given.
#[derive(Debug, Parser)]
#[command(name = "twwc", version)]
pub struct RunConfig {
    pub command: Command,
    /// Input spec (JSON); `-` reads stdin.
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Output file, written atomically; stdout when absent.
    #[arg(long = "out", value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Master seed (simulate, verify-*).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Order grid: a count K (points k/K, or k/(K+1) where s = 1 is excluded) or a comma list.
    #[arg(long = "s-grid", value_name = "K|LIST")]
    pub s_grid: Option<String>,
    /// Law lattice step 1/K for unions, power grid for Gaussian hulls (region).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Monte Carlo trials (simulate).
    #[arg(long)]
    pub trials: Option<usize>,
    /// Type-counting factors of constant-composition bounds (exponent).
    #[arg(long = "factor-mode", value_enum, default_value = "exact")]
    pub factor_mode: FactorModeArg,
    /// joint | individual | outer (region).
    #[arg(long)]
    pub flavor: Option<String>,
    /// Cost spec as a JSON file path or inline JSON (region).
    #[arg(long)]
    pub cost: Option<String>,
    /// Report rates and leakages in bits.
    #[arg(long)]
    pub bits: bool,
}

fn read_input(path: &PathBuf) -> Result<String, CliError> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s).map_err(|e| CliError::Input(format!("stdin: {e}")))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("reading {}: {e}", path.display())))
}

fn s_grid(cfg: &RunConfig, allow_one: bool) -> Result<Vec<f64>, CliError> {
    let Some(text) = &cfg.s_grid else {
        return Ok(if allow_one { default_s_grid_iid() } else { default_s_grid_cc() });
    };
    if let Ok(k) = text.trim().parse::<usize>() {
        if k == 0 {
            return Err(CliError::Input("--s-grid count must be positive".into()));
        }
        let d = if allow_one { k } else { k + 1 } as f64;
        return Ok((1..=k).map(|j| j as f64 / d).collect());
    }
    text.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| CliError::Input(format!("bad --s-grid entry {p:?}"))))
        .collect()
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Other(e.to_string()))
}

fn named<T: serde::de::DeserializeOwned>(name: &str, what: &str) -> Result<T, CliError> {
    serde_json::from_value(json!(name)).map_err(|_| CliError::Input(format!("unknown {what} {name:?}")))
}

fn load_cost(arg: &str) -> Result<CostSpec, CliError> {
    let text = if arg.trim_start().starts_with('{') { arg.to_string() } else { read_input(&PathBuf::from(arg))? };
    parse_json(&text, "cost spec")
}

fn cmd_region(cfg: &RunConfig, text: &str) -> Result<Artifact, CliError> {
    let spec: RegionSpec = parse_json(text, "region spec")?;
    let flavor = cfg.flavor.clone().or(spec.flavor.clone()).unwrap_or_else(|| "joint".into());
    let grid = cfg.grid.or(spec.grid).unwrap_or(DEFAULT_GRID);
    let cost = match &cfg.cost {
        Some(c) => Some(load_cost(c)?),
        None => spec.cost.clone(),
    };
    let region = match spec.channel.build()? {
        Channel::Additive(a) => region_additive(&a, named::<AdditiveFlavor>(&flavor, "flavor")?)?,
        Channel::Gaussian(g) => {
            let budgets = spec.budgets;
            match (flavor.as_str(), spec.powers, budgets) {
                ("outer", _, Some([c1, c2])) => region_gaussian_outer(&g, c1, c2)?,
                ("outer", _, None) => return Err(CliError::Input("outer Gaussian region needs \"budgets\"".into())),
                (f, Some([p1, p2]), _) => region_gaussian_inner(&g, p1, p2, named(f, "flavor")?)?,
                (f, None, Some([c1, c2])) => region_gaussian_inner_hull(&g, c1, c2, grid, named(f, "flavor")?)?,
                _ => return Err(CliError::Input("Gaussian region needs \"powers\" or \"budgets\"".into())),
            }
        }
        Channel::Tensor(t) => {
            let f: SecrecyFlavor = named(&flavor, "flavor")?;
            let [nx1, nx2, ..] = t.sizes();
            if let Some(ts) = &spec.time_sharing {
                let c = cost.ok_or_else(|| CliError::Input("time sharing needs a cost spec".into()))?;
                let plan = TimeSharingPlan::new(ts.weights()?, ts.budgets.clone(), ts.total)?;
                let laws = match &spec.laws {
                    Some(ls) => ls.iter().map(|l| l.build()).collect::<Result<Vec<_>, _>>()?,
                    None => grid_laws(nx1, nx2, grid)?,
                };
                let segments = plan
                    .budgets
                    .iter()
                    .map(|b| {
                        let seg = CostSpec { g1: c.g1.clone(), g2: c.g2.clone(), c1: b[0], c2: b[1] };
                        region_union(&t, &laws, Some(&seg), f)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                region_time_share(&plan, &segments)?
            } else if let Some(l) = &spec.law {
                region_for(&t, &l.build()?, f)?
            } else {
                let laws = match &spec.laws {
                    Some(ls) => ls.iter().map(|l| l.build()).collect::<Result<Vec<_>, _>>()?,
                    None => grid_laws(nx1, nx2, grid)?,
                };
                region_union(&t, &laws, cost.as_ref(), f)?
            }
        }
    };
    region_artifact(region, cfg.bits)
}

fn region_artifact(mut region: RateRegion2D, bits: bool) -> Result<Artifact, CliError> {
    let unit = if bits { "bits" } else { "nats" };
    if bits {
        let l2 = 2f64.ln();
        region.halfspaces.iter_mut().for_each(|h| h[2] /= l2);
        region.vertices.iter_mut().for_each(|v| *v = [v[0] / l2, v[1] / l2]);
    }
    region = region.with_meta("unit", unit);
    let rows = region.vertices.iter().map(|v| vec![cell(v[0]), cell(v[1])]).collect();
    let header = [format!("R1_{unit}"), format!("R2_{unit}")];
    Ok(Artifact::new(to_value(&region)?, &[&header[0], &header[1]], rows))
}

fn cmd_exponent(cfg: &RunConfig, text: &str) -> Result<Artifact, CliError> {
    let spec: ExponentSpec = parse_json(text, "exponent spec")?;
    let ch = spec.channel.build()?;
    let report = match (&ch, &spec.law, &spec.types) {
        (Channel::Additive(a), None, None) => bounds_additive(a, spec.rates, spec.n, &s_grid(cfg, true)?)?,
        _ => {
            let t = ch.tensor()?;
            match input_mode(&spec.law, &spec.types, &t)? {
                InputMode::Iid(law) => bounds_iid(&t, &law, spec.rates, spec.n, &s_grid(cfg, true)?)?,
                InputMode::ConstantComposition { t1, t2 } => {
                    let mode = match cfg.factor_mode {
                        FactorModeArg::Exact => FactorMode::Exact,
                        FactorModeArg::Bound => FactorMode::Bound,
                    };
                    bounds_constant_composition(&t, &t1, &t2, spec.rates, spec.n, &s_grid(cfg, false)?, mode)?
                }
            }
        }
    };
    let rows = report
        .rows
        .iter()
        .map(|r| vec![cell(r.s), cell(r.err), cell(r.leak_joint), cell(r.leak_m1), cell(r.leak_m2), r.vacuous.to_string()])
        .collect();
    Ok(Artifact::new(to_value(&report)?, &["s", "err", "leak_joint", "leak_m1", "leak_m2", "vacuous"], rows))
}

fn cmd_simulate(cfg: &RunConfig, text: &str) -> Result<Artifact, CliError> {
    let spec: SimulateSpec = parse_json(text, "simulate spec")?;
    let t = spec.channel.build()?.tensor()?;
    let mode = input_mode(&spec.law, &spec.types, &t)?;
    let (m, l) = spec.counts()?;
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let label = mode.label();
    let cb = generate_codebook(CodebookParams { n: spec.n, m, l, mode }, seed)?;
    let trials = cfg.trials.or(spec.trials).unwrap_or(DEFAULT_TRIALS);
    let mut res = run_error_trials(&t, &cb, trials, seed)?;
    if spec.leakage.unwrap_or(true) {
        res.leakage = Some(exact_leakage(&t, &cb)?);
    }
    let unit = if cfg.bits { "bits" } else { "nats" };
    if let Some(lk) = res.leakage.as_mut() {
        if cfg.bits {
            let l2 = 2f64.ln();
            lk.joint /= l2;
            lk.m1 /= l2;
            lk.m2 /= l2;
        }
    }
    let mut json = to_value(&res)?;
    let obj = json.as_object_mut().expect("struct serializes to an object");
    obj.insert("n".into(), json!(spec.n));
    obj.insert("M".into(), json!(m));
    obj.insert("L".into(), json!(l));
    obj.insert("mode".into(), json!(label));
    obj.insert("seed".into(), json!(seed));
    obj.insert("unit".into(), json!(unit));
    let leak = |f: fn(&twwc::Leakage) -> f64| res.leakage.as_ref().map_or(String::new(), |lk| cell(f(lk)));
    let row = vec![
        res.trials.to_string(),
        res.errors.to_string(),
        cell(res.error_rate),
        cell(res.wilson[0]),
        cell(res.wilson[1]),
        leak(|l| l.joint),
        leak(|l| l.m1),
        leak(|l| l.m2),
    ];
    let h: Vec<String> = ["leak_joint", "leak_m1", "leak_m2"].iter().map(|k| format!("{k}_{unit}")).collect();
    Ok(Artifact::new(
        json,
        &["trials", "errors", "error_rate", "wilson_lo", "wilson_hi", &h[0], &h[1], &h[2]],
        vec![row],
    ))
}

fn method(realizations: Option<usize>) -> VerifyMethod {
    match realizations {
        Some(r) => VerifyMethod::Sampled { realizations: r },
        None => VerifyMethod::Enumerate,
    }
}

fn verify_artifact(report: &VerifyReport, seed: u64) -> Result<Artifact, CliError> {
    let mut json = to_value(report)?;
    json.as_object_mut().expect("struct serializes to an object").insert("seed".into(), json!(seed));
    let rows = report
        .rows
        .iter()
        .map(|r| {
            vec![
                cell(r.s),
                cell(r.lhs),
                cell(r.expectation),
                cell(r.rhs),
                cell(r.slack),
                r.ci_half_width.map(cell).unwrap_or_default(),
                r.holds.to_string(),
            ]
        })
        .collect();
    Ok(Artifact::new(json, &["s", "lhs", "expectation", "rhs", "slack", "ci_half_width", "holds"], rows))
}

fn cmd_verify_resolvability(cfg: &RunConfig, text: &str) -> Result<Artifact, CliError> {
    let spec: ResolvabilitySpec = parse_json(text, "resolvability spec")?;
    let t = spec.channel.build()?.tensor()?;
    let mode = input_mode(&spec.law, &spec.types, &t)?;
    let grid = s_grid(cfg, matches!(mode, InputMode::Iid(_)))?;
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let r = verify_resolvability(&t, &mode, spec.randomization, spec.n, &grid, method(spec.realizations), seed)?;
    verify_artifact(&r, seed)
}

fn cmd_verify_gallager(cfg: &RunConfig, text: &str) -> Result<Artifact, CliError> {
    let spec: GallagerSpec = parse_json(text, "gallager spec")?;
    let t = spec.channel.build()?.tensor()?;
    let mode = input_mode(&spec.law, &spec.types, &t)?;
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let r = verify_gallager(
        &t,
        &mode,
        spec.user.unwrap_or(2),
        spec.codewords,
        spec.n,
        &s_grid(cfg, true)?,
        method(spec.realizations),
        seed,
    )?;
    verify_artifact(&r, seed)
}

fn system_artifact<T: Scalar>(
    sys: &LinearSystem<T>,
    eliminated: &[String],
    arithmetic: Arithmetic,
    num: impl Fn(&T) -> Value,
    csv: impl Fn(&T) -> String,
) -> Artifact {
    let inequalities: Vec<Value> = sys
        .inequalities
        .iter()
        .map(|h| json!({ "coeffs": h.coeffs.iter().map(&num).collect::<Vec<_>>(), "sense": h.sense.as_str(), "rhs": num(&h.rhs) }))
        .collect();
    let text: Vec<String> = sys.to_string().lines().map(str::to_string).collect();
    let json = json!({
        "arithmetic": arithmetic,
        "eliminated": eliminated,
        "variables": sys.variables,
        "inequalities": inequalities,
        "text": text,
    });
    let mut header: Vec<&str> = sys.variables.iter().map(String::as_str).collect();
    header.extend(["sense", "rhs"]);
    let rows = sys
        .inequalities
        .iter()
        .map(|h| {
            let mut r: Vec<String> = h.coeffs.iter().map(&csv).collect();
            r.push(h.sense.as_str().into());
            r.push(csv(&h.rhs));
            r
        })
        .collect();
    Artifact::new(json, &header, rows)
}

fn cmd_fm(text: &str) -> Result<Artifact, CliError> {
    let spec: SystemJson = parse_json(text, "linear system")?;
    let names: Vec<&str> = spec.eliminate.iter().map(String::as_str).collect();
    Ok(match spec.arithmetic {
        Arithmetic::Rational => {
            let p = fourier_motzkin(&spec.rational()?, &names)?;
            system_artifact(&p, &spec.eliminate, spec.arithmetic, |q: &BigRational| json!(q.to_string()), BigRational::to_string)
        }
        Arithmetic::Float => {
            let p = fourier_motzkin(&spec.float()?, &names)?;
            system_artifact(&p, &spec.eliminate, spec.arithmetic, |x: &f64| json!(x), |x: &f64| cell(*x))
        }
    })
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("TWWC_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("TWWC_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Other(e.to_string()))
}

fn run(cfg: &RunConfig) -> Result<(), CliError> {
    configure_threads()?;
    let text = read_input(&cfg.input)?;
    let artifact = match cfg.command {
        Command::Region => cmd_region(cfg, &text)?,
        Command::Exponent => cmd_exponent(cfg, &text)?,
        Command::Simulate => cmd_simulate(cfg, &text)?,
        Command::VerifyResolvability => cmd_verify_resolvability(cfg, &text)?,
        Command::VerifyGallager => cmd_verify_gallager(cfg, &text)?,
        Command::Fm => cmd_fm(&text)?,
    };
    let bytes = artifact.render(cfg.format == Format::Csv)?;
    match &cfg.output {
        Some(p) => write_atomic(p, &bytes),
        None => std::io::Write::write_all(&mut std::io::stdout(), &bytes).map_err(|e| CliError::Other(e.to_string())),
    }
}

fn main() -> ExitCode {
    let cfg = RunConfig::parse();
    match run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("twwc: {e}");
            ExitCode::from(e.code())
        }
    }
}
