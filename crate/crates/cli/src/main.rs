use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::Rng as _;

use qapprox::calib::Calibration;
use qapprox::dyadic::cell_count;
use qapprox::funcspace::{sweep_bump, Quadrature, TestFunction};
use qapprox::pipeline::{
    approximate, family_level, measure_error, rate_sweep, RateReport, RunParams, SweepBackend,
    SweepConfig, CSV_HEADER,
};
use qapprox::qsim::BackendKind;
use qapprox::rng::{stream, task};
use qapprox::schedule::{classify_regime, theory_exponents};
use qapprox::{serde_norm, Error};

#[derive(Parser)]
#[command(
    name = "qapprox",
    version,
    about = "Multilevel L_q approximation of Sobolev functions with query accounting"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Approximate one input and emit the run report as JSON.
    Run(RunArgs),
    /// Rate sweep over budgets; writes <out>.csv and <out>.json.
    Sweep(SweepArgs),
    /// Theoretical exponents, optionally next to measured slopes.
    Table(TableArgs),
    /// Measure the constants and store them.
    Calibrate(CalibrateArgs),
    /// Run the quick invariant suite.
    Selftest(SelftestArgs),
}

#[derive(Args, Clone)]
struct Problem {
    #[arg(long, value_parser = parse_index)]
    p: f64,
    #[arg(long, value_parser = parse_index)]
    q: f64,
    #[arg(long)]
    r: usize,
    #[arg(long)]
    d: usize,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    prob: Problem,
    #[arg(long)]
    n: u64,
    #[arg(long, default_value = "quantum", value_parser = parse_backend)]
    backend: BackendKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Input: `bump` (a random cell of the sweep family) or `trig`.
    #[arg(long, default_value = "bump")]
    input: String,
    /// Quadrature level for the error measurement (default: two below l*).
    #[arg(long)]
    quad_level: Option<u32>,
    /// Report path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the output summands as piecewise-polynomial dumps.
    #[arg(long)]
    dump: Option<PathBuf>,
    #[arg(long)]
    calib: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    prob: Problem,
    /// Comma-separated budgets.
    #[arg(long, value_delimiter = ',', required = true)]
    nlist: Vec<u64>,
    #[arg(long, default_value_t = 10)]
    trials: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated: deterministic, exact, classical, quantum.
    #[arg(long, value_delimiter = ',', default_value = "deterministic,classical,quantum", value_parser = parse_sweep_backend)]
    backend: Vec<SweepBackend>,
    /// Output prefix.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    calib: Option<PathBuf>,
    /// Omit the timestamp line of the CSV.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Args)]
struct TableArgs {
    #[command(flatten)]
    prob: Problem,
    /// A rate report written by `sweep`.
    #[arg(long)]
    sweep: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    calib: Option<PathBuf>,
}

fn parse_index(s: &str) -> Result<f64, String> {
    match serde_norm::parse(s) {
        Some(v) if v >= 1.0 => Ok(v),
        _ => Err(format!("expected a norm index in [1, inf], got {s:?}")),
    }
}

fn parse_backend(s: &str) -> Result<BackendKind, String> {
    BackendKind::parse(s)
        .ok_or_else(|| format!("unknown backend {s:?} (exact, classical, quantum)"))
}

fn parse_sweep_backend(s: &str) -> Result<SweepBackend, String> {
    SweepBackend::parse(s)
        .ok_or_else(|| format!("unknown backend {s:?} (deterministic, exact, classical, quantum)"))
}

/// A failure with its exit status.
struct Fail(u8, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parameter(_) | Error::Domain(_) | Error::Config(_) => 2,
            _ => 1,
        };
        Fail(code, e.to_string())
    }
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Fail(1, e.to_string())
    }
}

impl From<serde_json::Error> for Fail {
    fn from(e: serde_json::Error) -> Self {
        Fail(1, e.to_string())
    }
}

fn load_calib(path: &Option<PathBuf>) -> Result<Calibration, Fail> {
    match path {
        None => Ok(Calibration::frozen()),
        Some(p) if !p.exists() => Err(Fail(
            2,
            format!(
                "no calibration store at {}; run `qapprox calibrate --out {}` first",
                p.display(),
                p.display()
            ),
        )),
        Some(p) => Ok(Calibration::load(p)?),
    }
}

fn write_out(path: &Option<PathBuf>, text: &str) -> Result<(), Fail> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_run(a: RunArgs) -> Result<(), Fail> {
    let Problem { p, q, r, d } = a.prob;
    let regime = classify_regime(p, q, r, d)?;
    let calib = load_calib(&a.calib)?;
    let input = match a.input.as_str() {
        "bump" => {
            let k = family_level(a.n, regime, d);
            let cell = stream(a.seed, task::INSTANCE, 0).gen_range(0..cell_count(k, d)?);
            sweep_bump(p, r, d, k, cell)?
        }
        "trig" => TestFunction::trig(1.0, vec![1.0; d], vec![0.25; d])?,
        other => return Err(Fail(2, format!("unknown input {other:?} (bump, trig)"))),
    };
    let f = input.to_evalfn();
    let params = RunParams::new(p, q, r, d, a.n, a.backend, a.seed, &calib)?;
    let res = approximate(&f, &params)?;
    let mut quad = Quadrature::for_run(res.schedule.l_star, r);
    if let Some(l) = a.quad_level {
        quad.level = l;
    }
    let error = measure_error(&f, &res, q, &quad)?;
    let out = serde_json::json!({ "input": input, "error": error, "report": res.report() });
    write_out(&a.out, &(serde_json::to_string_pretty(&out)? + "\n"))?;
    if let Some(path) = &a.dump {
        fs::write(path, serde_json::to_string(&res.dumps())? + "\n")?;
    }
    Ok(())
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

fn cmd_sweep(a: SweepArgs) -> Result<(), Fail> {
    let Problem { p, q, r, d } = a.prob;
    classify_regime(p, q, r, d)?;
    let calib = load_calib(&a.calib)?;
    let cfg = SweepConfig {
        p,
        q,
        r,
        d,
        n_list: a.nlist,
        trials: a.trials,
        seed: a.seed,
        backends: a.backend,
    };
    let (report, rows) = rate_sweep(&cfg, &calib)?;
    let mut csv = String::new();
    if !a.no_timestamp {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        csv.push_str(&format!("# generated-at-unix {secs}\n"));
    }
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.to_csv());
        csv.push('\n');
    }
    fs::write(with_ext(&a.out, ".csv"), csv)?;
    fs::write(
        with_ext(&a.out, ".json"),
        serde_json::to_string_pretty(&report)? + "\n",
    )?;
    for b in &report.backends {
        match &b.fit {
            Some(f) => eprintln!(
                "{:<14} slope {:+.3} ± {:.3}  (theory {:+.3})",
                b.backend, f.slope, f.ci_half_width, b.theory_exponent
            ),
            None => eprintln!(
                "{:<14} no fit: {}",
                b.backend,
                b.diagnostic.as_deref().unwrap_or("")
            ),
        }
    }
    Ok(())
}

fn cmd_table(a: TableArgs) -> Result<(), Fail> {
    let Problem { p, q, r, d } = a.prob;
    let regime = classify_regime(p, q, r, d)?;
    let ex = theory_exponents(p, q, r, d)?;
    let report: Option<RateReport> = match &a.sweep {
        Some(path) => Some(serde_json::from_str(&fs::read_to_string(path)?)?),
        None => None,
    };
    let measured = |name: &str| -> String {
        report
            .as_ref()
            .and_then(|rep| rep.backend(name))
            .and_then(|b| b.fit)
            .map(|f| format!("{:+.3} ± {:.3}", f.slope, f.ci_half_width))
            .unwrap_or_else(|| "-".into())
    };
    println!(
        "p={} q={} r={r} d={d}  regime: {}",
        serde_norm::format(p),
        serde_norm::format(q),
        regime.name()
    );
    println!("{:<15}{:>10}   measured", "setting", "theory");
    println!(
        "{:<15}{:>+10.4}   {}",
        "deterministic",
        ex.deterministic,
        measured("deterministic")
    );
    println!(
        "{:<15}{:>+10.4}   {}",
        "random",
        ex.random,
        measured("classical")
    );
    println!(
        "{:<15}{:>+10.4}   {}",
        "quantum",
        ex.quantum,
        measured("quantum")
    );
    Ok(())
}

fn cmd_calibrate(a: CalibrateArgs) -> Result<(), Fail> {
    let c = Calibration::measure(a.seed)?;
    c.save(&a.out)?;
    eprintln!("wrote {}", a.out.display());
    Ok(())
}

fn cmd_selftest(a: SelftestArgs) -> Result<(), Fail> {
    let calib = load_calib(&a.calib)?;
    let checks = qapprox::selftest::run(a.seed, &calib);
    let mut failed = 0;
    for c in &checks {
        println!(
            "{} {:<26} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        return Err(Fail(
            1,
            format!("{failed} of {} checks failed", checks.len()),
        ));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Sweep(a) => cmd_sweep(a),
        Cmd::Table(a) => cmd_table(a),
        Cmd::Calibrate(a) => cmd_calibrate(a),
        Cmd::Selftest(a) => cmd_selftest(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
