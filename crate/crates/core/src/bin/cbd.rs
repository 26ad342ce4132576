use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cbd::generators::{sample_trials, GeneratorSpec};
use cbd::ingest::{accumulate, normalize, read_trials_csv, write_trials_csv};
use cbd::report::{bootstrap_summary, read_system_json, AnalysisReport, SystemDoc};
use cbd::verify::run_verification;
use cbd::{generate, run_analysis, AnalysisOptions, Error};

const EXIT_INPUT: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(
    name = "cbd",
    version,
    about = "Contextuality-by-Default analysis of CHSH-type systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze trial data or a system of context tables.
    Analyze(AnalyzeArgs),
    /// Write a reference or random system (or trials sampled from it).
    Generate(GenerateArgs),
    /// Randomized sweep of the closed-form, Fine and BDK equivalences.
    Verify {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Trial CSV with header `context_i,context_j,a,b`.
    #[arg(long, conflicts_with = "system", required_unless_present = "system")]
    trials: Option<PathBuf>,
    /// System JSON with four context tables keyed `pp,pm,mp,mm`.
    #[arg(long)]
    system: Option<PathBuf>,
    /// Number of bootstrap replicates (trial input only).
    #[arg(long)]
    bootstrap: Option<usize>,
    /// Seed for bootstrap resampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tolerance for the no-signaling verdict.
    #[arg(long, default_value_t = cbd::types::DEFAULT_TOL)]
    tol: f64,
    /// Include the 256 weights of the optimal coupling.
    #[arg(long)]
    witness: bool,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// pr_box, tsirelson, classical_deterministic, random, signaling_injection
    #[arg(long)]
    kind: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Kind-specific `key=value` pairs: `no_signaling=1` for random;
    /// `da1, da2, db1, db2` and `base=<kind>` for signaling_injection.
    #[arg(long, value_delimiter = ',')]
    params: Vec<String>,
    /// Emit this many sampled trials per context as CSV instead of a system.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn input_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_INPUT)
}

fn exit_for(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    match err {
        Error::SolverFailure { .. } => ExitCode::from(EXIT_SOLVER),
        _ => ExitCode::from(EXIT_INPUT),
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn summary_line(r: &AnalysisReport) -> String {
    format!(
        "delta0={:.6} s_max={:.6} delta_chsh={:.6} delta_min={:.6} genuine={:.6} bdk={} jpd={} degenerate={}\nverdict: {}",
        r.signaling.delta0,
        r.chsh.s_max,
        r.chsh.delta_chsh,
        r.delta_min_lp,
        r.genuine,
        r.bdk_satisfied,
        r.jpd_exists,
        r.degenerate_coupling,
        r.verdict
    )
}

fn analyze(args: AnalyzeArgs) -> ExitCode {
    let read = |p: &Path| fs::read_to_string(p).map_err(Error::from);
    let (system, counts) = match (&args.trials, &args.system) {
        (Some(path), _) => {
            let counts = read(path)
                .and_then(|t| read_trials_csv(t.as_bytes()))
                .map(|recs| accumulate(&recs));
            match counts.and_then(|c| Ok((normalize(&c)?, Some(c)))) {
                Ok(v) => v,
                Err(e) => return exit_for(&e),
            }
        }
        (None, Some(path)) => match read(path).and_then(|t| read_system_json(&t)) {
            Ok(s) => (s, None),
            Err(e) => return exit_for(&e),
        },
        (None, None) => return input_error("one of --trials or --system is required"),
    };
    if !(args.tol >= 0.0 && args.tol.is_finite()) {
        return input_error("--tol must be a nonnegative number");
    }
    let options = AnalysisOptions {
        tol: args.tol,
        include_witness: args.witness,
    };
    let mut report = match run_analysis(&system, options) {
        Ok(r) => r,
        Err(failure) => {
            let text = failure.partial.to_json();
            let _ = write_output(args.report.as_deref(), &text);
            return exit_for(&failure.error);
        }
    };
    if let Some(n) = args.bootstrap {
        let Some(counts) = counts else {
            return input_error("--bootstrap needs trial data (--trials)");
        };
        match bootstrap_summary(&counts, args.seed, n) {
            Ok(b) => report.bootstrap = Some(b),
            Err(e) => return exit_for(&e),
        }
    }
    if let Err(e) = write_output(args.report.as_deref(), &report.to_json()) {
        return exit_for(&e);
    }
    let summary = summary_line(&report);
    if args.report.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    ExitCode::SUCCESS
}

fn parse_spec(args: &GenerateArgs) -> Result<GeneratorSpec, String> {
    let mut params = std::collections::BTreeMap::new();
    for p in &args.params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| format!("parameter {p:?} is not key=value"))?;
        params.insert(k.trim().to_string(), v.trim().to_string());
    }
    let num = |key: &str| -> Result<f64, String> {
        params.get(key).map_or(Ok(0.0), |v| {
            v.parse().map_err(|_| format!("{key}: not a number"))
        })
    };
    let simple = |kind: &str| -> Result<GeneratorSpec, String> {
        match kind {
            "pr_box" => Ok(GeneratorSpec::PrBox),
            "tsirelson" => Ok(GeneratorSpec::Tsirelson),
            "classical_deterministic" => Ok(GeneratorSpec::ClassicalDeterministic),
            "random" => Ok(GeneratorSpec::Random {
                seed: args.seed,
                no_signaling: matches!(
                    params.get("no_signaling").map(String::as_str),
                    Some("1" | "true")
                ),
            }),
            other => Err(format!("unknown generator kind {other:?}")),
        }
    };
    match args.kind.as_str() {
        "signaling_injection" => {
            let base = match params.get("base").map(String::as_str) {
                None | Some("uniform") => None,
                Some(k) => Some(Box::new(simple(k)?)),
            };
            Ok(GeneratorSpec::SignalingInjection {
                base,
                delta_a: [num("da1")?, num("da2")?],
                delta_b: [num("db1")?, num("db2")?],
            })
        }
        kind => simple(kind),
    }
}

fn generate_cmd(args: GenerateArgs) -> ExitCode {
    let spec = match parse_spec(&args) {
        Ok(s) => s,
        Err(msg) => return input_error(msg),
    };
    let system = match generate(&spec) {
        Ok(s) => s,
        Err(e) => return exit_for(&e),
    };
    let text = match args.trials {
        Some(n) => {
            let mut buf = Vec::new();
            if let Err(e) = write_trials_csv(&mut buf, &sample_trials(&system, n, args.seed)) {
                return exit_for(&e);
            }
            String::from_utf8(buf).expect("csv output is utf-8")
        }
        None => SystemDoc::from_system(&system, Some(spec)).to_json(),
    };
    match write_output(args.out.as_deref(), &text) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => exit_for(&e),
    }
}

fn verify_cmd(samples: usize, seed: u64) -> ExitCode {
    let summary = match run_verification(samples, seed) {
        Ok(s) => s,
        Err(e) => return exit_for(&e),
    };
    let line = |name: &str, t: &cbd::verify::Tally| {
        println!(
            "{name:<12} pass={:<6} fail={:<6} {}",
            t.pass,
            t.fail,
            if t.all_pass() { "PASS" } else { "FAIL" }
        )
    };
    line("closed_form", &summary.closed_form);
    line("fine", &summary.fine);
    line("bdk", &summary.bdk);
    line("lower_bound", &summary.lower_bound);
    println!("max closed-form gap: {:.3e}", summary.closed_form.max_error);
    if summary.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Analyze(args) => analyze(args),
        Command::Generate(args) => generate_cmd(args),
        Command::Verify { samples, seed } => verify_cmd(samples, seed),
    }
}
