//! `gabor`: frame-region scans, `M` values, certificates and numeric checks.
//!
//! Every subcommand prints a one-line JSON summary on stdout. Exit status is
//! 0 on success, 2 for invalid input and 3 when a numeric check fails.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gabor_core::certify::{self, parse_rational, Case, RationalPoly, Q};
use gabor_core::frameset::{self, Direction, ScanOpts, BOUNDS_PAIRING_NOTE};
use gabor_core::lattice::{self, analyze};
use gabor_core::sampling::{self, SamplingSet};
use gabor_core::special::{self, LimitKind};
use gabor_core::{Error, LatticeOpts, Side, Window};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "gabor", version, about = "Sufficient Gabor frame regions and exact certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan the (alpha, beta) plane and write a verdict CSV plus JSON metadata.
    Region(RegionArgs),
    /// Evaluate M for one lattice spacing; with --alpha and --beta also Δ and frame bounds.
    Mvalue(MvalueArgs),
    /// Budan-Fourier and Sturm certificates for the case polynomials or a given polynomial.
    Certify(CertifyArgs),
    /// Reproduce both sign tables with their Sturm resolutions.
    Tables(TablesArgs),
    /// Theta function, ratio profiles, monotone chains and dilation limits.
    Special(SpecialArgs),
    /// Bernstein and weighted sampling inequalities on random splines.
    SamplingCheck(SamplingArgs),
    /// Geometric dilation sweep for a frame-certifying gamma.
    GammaSearch(GammaArgs),
}

#[derive(Args, Clone)]
struct LatticeArgs {
    /// Grid intervals on [0, 1/h].
    #[arg(long, default_value_t = 4096)]
    grid: usize,
    /// Relative tail tolerance of the lattice sums.
    #[arg(long, default_value_t = 1e-13)]
    tol: f64,
}

impl LatticeArgs {
    fn opts(&self) -> LatticeOpts {
        LatticeOpts { grid_size: self.grid, tol: self.tol, ..LatticeOpts::default() }
    }
}

#[derive(Args)]
struct RegionArgs {
    /// Inline spec (e.g. bspline:2, gaussian@0.5) or a JSON object.
    #[arg(long)]
    window: String,
    /// Cells per axis.
    #[arg(long, default_value_t = 200)]
    res: usize,
    #[arg(long, value_parser = parse_range, default_value = "0,2")]
    alpha_range: (f64, f64),
    #[arg(long, value_parser = parse_range, default_value = "0,2")]
    beta_range: (f64, f64),
    #[command(flatten)]
    lattice: LatticeArgs,
    /// CSV path; metadata goes next to it with a `.meta.json` suffix.
    #[arg(long, short, default_value = "region.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct MvalueArgs {
    #[arg(long)]
    window: String,
    /// Primal spacing h = 1/beta.
    #[arg(long)]
    beta: Option<f64>,
    /// Dual spacing h = 1/alpha.
    #[arg(long)]
    alpha: Option<f64>,
    /// Explicit spacing; needs --side.
    #[arg(long, conflicts_with_all = ["beta", "alpha"])]
    h: Option<f64>,
    #[arg(long, value_enum, default_value_t = SideArg::Primal)]
    side: SideArg,
    #[command(flatten)]
    lattice: LatticeArgs,
    /// Also write the sampled periodization profile as CSV.
    #[arg(long)]
    profile: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Primal,
    Dual,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Side {
        match s {
            SideArg::Primal => Side::Primal,
            SideArg::Dual => Side::Dual,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Method {
    Sturm,
    BudanFourier,
    Both,
}

#[derive(Args)]
struct CertifyArgs {
    /// 2 for P_beta on [1, 3/2], 3 for K_beta on [3/2, 2].
    #[arg(long, required_unless_present = "poly", conflicts_with = "poly")]
    case: Option<u8>,
    /// Exact beta as p/q.
    #[arg(long, requires = "case")]
    beta: Option<String>,
    /// Coefficients c0,c1,... (ascending), each p/q or an integer.
    #[arg(long, allow_hyphen_values = true)]
    poly: Option<String>,
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_hyphen_values = true)]
    interval: Option<Vec<String>>,
    #[arg(long, value_enum, default_value_t = Method::Both)]
    method: Method,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TablesArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Machine-readable JSON of all rows.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpecialArgs {
    #[command(subcommand)]
    command: SpecialCommand,
}

#[derive(Subcommand)]
enum SpecialCommand {
    /// Theta(w; t), Q(w; t) and the bounds A(t), B(t).
    Theta {
        #[arg(long)]
        w: f64,
        #[arg(long)]
        t: f64,
    },
    /// F, H, G ratio profile for one family.
    Profile {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        rho: f64,
        /// Two-pole parameters a,b.
        #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
        poles: Option<(f64, f64)>,
        #[arg(long, default_value_t = 4096)]
        grid: usize,
        /// CSV path; the JSON sidecar gets a `.meta.json` suffix.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Monotone chain over a growing factor list.
    Monotonicity {
        /// gaussian, two-sided-exp or two-pole:a,b
        #[arg(long)]
        base: String,
        /// Comma-separated factors v_j.
        #[arg(long, allow_hyphen_values = true, default_value = "")]
        factors: String,
        #[arg(long, default_value_t = 1.0)]
        h: f64,
        #[arg(long, default_value_t = 1024)]
        grid: usize,
    },
    /// M along a dilation sweep versus its limit param^2/4.
    Limit {
        #[arg(long, value_enum)]
        kind: LimitArg,
        #[arg(long)]
        window: String,
        /// beta for type1-gamma-to-zero, alpha for type2-gamma-to-inf.
        #[arg(long)]
        param: f64,
        /// Comma-separated dilations, sorted in the limit direction.
        #[arg(long)]
        gammas: String,
        #[command(flatten)]
        lattice: LatticeArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Gauss,
    Exp,
    Twopole,
}

#[derive(Clone, Copy, ValueEnum)]
enum LimitArg {
    Type1GammaToZero,
    Type2GammaToInf,
}

#[derive(Args)]
struct SamplingArgs {
    #[arg(long)]
    window: String,
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    /// Number of random instances.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Coefficients per instance.
    #[arg(long, default_value_t = 16)]
    count: usize,
    /// Sampling step; defaults to half the admissible gap.
    #[arg(long)]
    step: Option<f64>,
    /// Jitter as a fraction of the step, below 1/2.
    #[arg(long, default_value_t = 0.25)]
    jitter: f64,
    /// JSON report with one record per instance.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GammaArgs {
    #[arg(long)]
    window: String,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    #[arg(long, value_enum, default_value_t = DirectionArg::ToZero)]
    direction: DirectionArg,
    #[arg(long, default_value_t = 60)]
    budget: u32,
    #[command(flatten)]
    lattice: LatticeArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    ToZero,
    ToInfinity,
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"))).collect()
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    match parse_list(s)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(format!("expected two comma-separated numbers, got {s:?}")),
    }
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: if e.is_validation() { 2 } else { 3 }, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: 3, message: format!("i/o: {e}") }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

type Outcome = std::result::Result<Value, Failure>;

/// Temp file in the target directory, then rename.
fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn pretty(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s.into_bytes()
}

fn window(spec: &str) -> std::result::Result<Window, Failure> {
    Ok(spec.parse::<Window>()?)
}

fn run_region(a: &RegionArgs) -> Outcome {
    let w = window(&a.window)?;
    let opts = ScanOpts {
        alpha_range: a.alpha_range,
        beta_range: a.beta_range,
        n_alpha: a.res,
        n_beta: a.res,
        lattice: a.lattice.opts(),
    };
    let grid = frameset::scan(&w, &opts)?;
    let mut meta = grid.meta_json();
    meta["bounds_pairing"] = json!(BOUNDS_PAIRING_NOTE);
    let meta_path = sidecar_path(&a.out);
    write_atomic(&a.out, grid.to_csv().as_bytes())?;
    write_atomic(&meta_path, &pretty(&meta))?;
    Ok(json!({
        "command": "region",
        "window": w,
        "cells": grid.cells.len(),
        "csv": a.out,
        "meta": meta_path,
        "verdict_counts": grid.verdict_counts(),
    }))
}

fn run_mvalue(a: &MvalueArgs) -> Outcome {
    let w = window(&a.window)?;
    let opts = a.lattice.opts();
    let (side, h) = match (a.h, a.beta, a.alpha) {
        (Some(h), _, _) => (Side::from(a.side), h),
        (None, Some(b), _) => (Side::Primal, 1.0 / b),
        (None, None, Some(al)) => (Side::Dual, 1.0 / al),
        _ => return Err(invalid("one of --beta, --alpha or --h is required")),
    };
    let an = analyze(&w, side, h, &opts)?;
    let mut out = json!({
        "command": "mvalue",
        "window": w,
        "side": side,
        "h": h,
        "m": an.m.m,
        "argmax_w": an.m.argmax_w,
        "grid_max": an.m.grid_max,
        "stability": an.stability,
    });
    if let (Some(al), Some(b)) = (a.alpha, a.beta) {
        let delta = 2.0 * al * an.m.m.sqrt();
        out["delta_primal"] = json!(delta);
        match frameset::frame_bounds(&w, al, b, &opts) {
            Ok(fb) => {
                out["frame_bounds"] = json!(fb);
                out["bounds_pairing"] = json!(BOUNDS_PAIRING_NOTE);
            }
            Err(Error::ConditionNotMet { .. }) => out["frame_bounds"] = Value::Null,
            Err(e) => return Err(e.into()),
        }
    }
    if let Some(path) = &a.profile {
        let prof = lattice::periodize_side(&w, side, h, &opts)?;
        write_atomic(path, prof.to_csv().as_bytes())?;
        out["profile"] = json!(path);
    }
    Ok(out)
}

fn rational(s: &str) -> std::result::Result<Q, Failure> {
    parse_rational(s).ok_or_else(|| invalid(format!("not a rational: {s:?}")))
}

fn run_certify(a: &CertifyArgs) -> std::result::Result<(Value, Option<String>), Failure> {
    let (poly, default_interval) = match (&a.poly, a.case) {
        (Some(p), _) => {
            let coeffs = p.split(',').map(rational).collect::<std::result::Result<Vec<_>, _>>()?;
            (RationalPoly::new(coeffs), None)
        }
        (None, Some(c)) => {
            let case = match c {
                2 => Case::Case2,
                3 => Case::Case3,
                other => return Err(invalid(format!("unknown case {other}; expected 2 or 3"))),
            };
            let beta = rational(a.beta.as_deref().ok_or_else(|| invalid("--case needs --beta"))?)?;
            (certify::case_polys(case, &beta)?, Some((certify::qi(-1), certify::qi(1))))
        }
        (None, None) => return Err(invalid("give --case with --beta, or --poly")),
    };
    let (lo, hi) = match &a.interval {
        Some(v) => (rational(&v[0])?, rational(&v[1])?),
        None => default_interval.ok_or_else(|| invalid("--poly needs --interval"))?,
    };
    let mut certs = Vec::new();
    if matches!(a.method, Method::BudanFourier | Method::Both) {
        certs.push(certify::budan_fourier(&poly, &lo, &hi)?);
    }
    if matches!(a.method, Method::Sturm | Method::Both) {
        certs.push(certify::sturm(&poly, &lo, &hi)?);
    }
    let text = (a.format == Format::Text)
        .then(|| certs.iter().map(|c| c.to_layout()).collect::<Vec<_>>().join("\n"));
    let body = json!({ "command": "certify", "certificates": certs });
    if let Some(path) = &a.out {
        write_atomic(path, &pretty(&body))?;
    }
    let summary = json!({
        "command": "certify",
        "zero_counts": certs.iter().map(|c| json!({ "kind": c.kind, "n": c.zero_count_bound })).collect::<Vec<_>>(),
        "out": a.out,
    });
    Ok((if text.is_some() { summary } else { body }, text))
}

fn tables_text(rows: &[certify::TableRow]) -> String {
    let mut out = String::new();
    for r in rows {
        out.push_str(&format!("Table {} | {} | {}\n", r.table, r.name, r.relation));
        out.push_str(&r.budan_fourier.to_layout());
        out.push_str(&format!("claim: {:?}\n", r.claim));
        if let Some(s) = &r.sturm {
            out.push_str("Sturm resolution:\n");
            for (j, p) in s.sequence.iter().enumerate() {
                out.push_str(&format!("  f{j}(x) = {p}\n"));
            }
            out.push_str(&s.to_layout());
        }
        out.push('\n');
    }
    out
}

fn run_tables(a: &TablesArgs) -> std::result::Result<(Value, Option<String>), Failure> {
    let rows = certify::reproduce_tables();
    let body = json!({ "command": "tables", "rows": rows });
    if let Some(path) = &a.out {
        write_atomic(path, &pretty(&body))?;
    }
    let summary = json!({
        "command": "tables",
        "rows": rows.len(),
        "sturm_resolved": rows.iter().filter(|r| r.sturm.is_some()).count(),
        "out": a.out,
    });
    let text = (a.format == Format::Text).then(|| tables_text(&rows));
    Ok((if a.format == Format::Json { body } else { summary }, text))
}

fn run_special(a: &SpecialArgs) -> Outcome {
    match &a.command {
        SpecialCommand::Theta { w, t } => {
            let ev = special::theta_eval(*w, *t)?;
            Ok(json!({ "command": "special theta", "result": ev }))
        }
        SpecialCommand::Profile { family, rho, poles, grid, out } => {
            let prof = match family {
                FamilyArg::Gauss => special::gauss_profile(*rho, *grid)?,
                FamilyArg::Exp => special::exp_profile(*rho, *grid)?,
                FamilyArg::Twopole => {
                    let (pa, pb) = poles.ok_or_else(|| invalid("--family twopole needs --poles a,b"))?;
                    special::twopole_profile(pa, pb, *rho, *grid)?
                }
            };
            if let Some(path) = out {
                write_atomic(path, prof.to_csv().as_bytes())?;
                write_atomic(&sidecar_path(path), &pretty(&prof.sidecar()))?;
            }
            Ok(json!({
                "command": "special profile",
                "family": prof.family,
                "rho": prof.rho,
                "argmax": prof.argmax(),
                "max_decrease_on_half": prof.max_decrease_on_half(),
                "cross_check": prof.cross_check,
                "in_proven_range": prof.in_proven_range,
                "out": out,
            }))
        }
        SpecialCommand::Monotonicity { base, factors, h, grid } => {
            let factors = parse_list(factors).map_err(invalid)?;
            let rep = special::tp_monotonicity_check(&window(base)?, &factors, *h, *grid)?;
            if !rep.monotone {
                return Err(Failure {
                    code: 3,
                    message: format!("chain not monotone: max violation {}", rep.max_violation),
                });
            }
            Ok(json!({ "command": "special monotonicity", "report": rep }))
        }
        SpecialCommand::Limit { kind, window: spec, param, gammas, lattice } => {
            let kind = match kind {
                LimitArg::Type1GammaToZero => LimitKind::TypeIGammaToZero,
                LimitArg::Type2GammaToInf => LimitKind::TypeIIGammaToInf,
            };
            let gammas = parse_list(gammas).map_err(invalid)?;
            let rep = special::dilation_limit_check(kind, &window(spec)?, *param, &gammas, &lattice.opts())?;
            Ok(json!({ "command": "special limit", "report": rep }))
        }
    }
}

fn run_sampling(a: &SamplingArgs) -> Outcome {
    let w = window(&a.window)?;
    let m = lattice::m_value(&w, a.h, &LatticeOpts::default())?;
    let limit = 1.0 / (2.0 * m.sqrt());
    let step = a.step.unwrap_or(0.5 * limit / (1.0 + 2.0 * a.jitter));
    let mut records = Vec::new();
    let (mut bernstein_ok, mut sampling_ok) = (0u64, 0u64);
    for seed in a.seed..a.seed + a.seeds {
        let f = sampling::synth(&w, a.h, a.count, seed)?;
        let ratio = sampling::bernstein_ratio(&f)?;
        let b_ok = ratio <= m.sqrt() * (1.0 + 1e-8);
        let s = SamplingSet::covering(&f, step, a.jitter, seed)?;
        let rep = sampling::sampling_bounds_check_with_m(&f, &s, m)?;
        bernstein_ok += b_ok as u64;
        sampling_ok += (rep.lower_ok && rep.upper_ok) as u64;
        records.push(json!({ "seed": seed, "bernstein_ratio": ratio, "bernstein_ok": b_ok, "sampling": rep }));
    }
    if let Some(path) = &a.out {
        write_atomic(path, &pretty(&json!({ "window": w, "h": a.h, "m": m, "records": records })))?;
    }
    let summary = json!({
        "command": "sampling-check",
        "window": w,
        "h": a.h,
        "m": m,
        "step": step,
        "instances": a.seeds,
        "bernstein_ok": bernstein_ok,
        "sampling_ok": sampling_ok,
        "out": a.out,
    });
    if bernstein_ok < a.seeds || sampling_ok < a.seeds {
        return Err(Failure { code: 3, message: format!("inequality violated: {summary}") });
    }
    Ok(summary)
}

fn run_gamma(a: &GammaArgs) -> Outcome {
    let w = window(&a.window)?;
    let dir = match a.direction {
        DirectionArg::ToZero => Direction::ToZero,
        DirectionArg::ToInfinity => Direction::ToInfinity,
    };
    let r = frameset::gamma_search(&w, a.alpha, a.beta, dir, a.budget, &a.lattice.opts())?;
    Ok(json!({
        "command": "gamma-search",
        "window": w,
        "found": r.gamma.is_some(),
        "gamma": r.gamma,
        "side": r.side,
        "delta": r.delta,
        "steps": r.steps.len(),
    }))
}

fn configure_threads() -> std::result::Result<(), Failure> {
    if let Ok(v) = std::env::var("GABOR_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| invalid(format!("GABOR_THREADS={v:?} is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure { code: 3, message: e.to_string() })?;
    }
    Ok(())
}

fn run(cli: &Cli) -> std::result::Result<(Value, Option<String>), Failure> {
    configure_threads()?;
    match &cli.command {
        Command::Region(a) => run_region(a).map(|v| (v, None)),
        Command::Mvalue(a) => run_mvalue(a).map(|v| (v, None)),
        Command::Certify(a) => run_certify(a),
        Command::Tables(a) => run_tables(a),
        Command::Special(a) => run_special(a).map(|v| (v, None)),
        Command::SamplingCheck(a) => run_sampling(a).map(|v| (v, None)),
        Command::GammaSearch(a) => run_gamma(a).map(|v| (v, None)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok((summary, text)) => {
            if let Some(t) = text {
                print!("{t}");
            }
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
