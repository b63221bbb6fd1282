use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{error::ErrorKind, Parser, ValueEnum};
use kolycheck::bigint_serde;
use kolycheck::cohomology::{run_suite, DEFAULT_ENUMERATION_CAP, DEFAULT_SEED};
use kolycheck::hypotheses::ExternalInputs;
use kolycheck::report::{
    parse_batch, render_batch_text, render_text, run_batch, run_job, to_canonical_json, JobInput, JobOptions,
};
use kolycheck::sieves::DEFAULT_SIEVE_BOUND;
use kolycheck::tate_period::DEFAULT_PRECISION;
use num_bigint::BigInt;

const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

/// Hypothesis checker for Kolyvagin-system nonvanishing over imaginary
/// quadratic fields.
#[derive(Debug, Parser)]
#[command(name = "kolycheck", version)]
struct Cli {
    /// Weierstrass coefficients a1,a2,a3,a4,a6.
    #[arg(long, allow_hyphen_values = true)]
    curve: Option<String>,
    /// Prime p >= 5.
    #[arg(long)]
    p: Option<u64>,
    /// D > 0 for the field of discriminant -D (a negative value is taken as the discriminant).
    #[arg(long, allow_hyphen_values = true)]
    disc: Option<String>,
    /// Batch file: JSON array of jobs or CSV with header a1,a2,a3,a4,a6,p,D.
    #[arg(long, conflicts_with_all = ["curve", "p", "disc"])]
    input: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long, default_value_t = DEFAULT_SIEVE_BOUND)]
    sieve_bound: u64,
    /// Absolute p-adic precision of the Tate period.
    #[arg(long, default_value_t = DEFAULT_PRECISION)]
    precision: i64,
    /// Good primes tried for an irreducibility witness.
    #[arg(long, default_value_t = kolycheck::galois::DEFAULT_WITNESS_BOUND)]
    witness_bound: usize,
    /// Do not count p among the exact divisors of N+ in the third ♠ clause.
    #[arg(long)]
    spade3_exclude_p: bool,
    /// Run the finite-module cohomology property suite and exit.
    #[arg(long, conflicts_with_all = ["curve", "p", "disc", "input"])]
    selftest: bool,
    /// Seed for --selftest.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Random modules checked by --selftest.
    #[arg(long, default_value_t = 200)]
    modules: usize,
    /// Worker threads for batch runs.
    #[arg(long)]
    threads: Option<usize>,

    /// Z_p-corank of the p-power Selmer group over Q (assumed, not computed).
    #[arg(long)]
    selmer_corank: Option<i64>,
    /// Order of vanishing of L(E, s) at s = 1 (assumed, not computed).
    #[arg(long)]
    analytic_rank: Option<i64>,
    /// Corank r+ of the plus Selmer group (assumed, not computed).
    #[arg(long)]
    r_plus: Option<i64>,
    /// Corank r- of the minus Selmer group (assumed, not computed).
    #[arg(long)]
    r_minus: Option<i64>,
    /// ord_p of L'(E,1)/(Ω·Reg) (assumed, not computed).
    #[arg(long)]
    lhs_valuation: Option<i64>,
    /// ord_p of #Sha(E/Q) (assumed, not computed).
    #[arg(long)]
    sha_valuation: Option<i64>,
    /// Whether E has a rational p-isogeny (assumed, not computed).
    #[arg(long)]
    rational_p_isogeny: Option<bool>,
}

enum Failure {
    Usage(String),
    Data(String),
}

impl Cli {
    fn options(&self) -> JobOptions {
        JobOptions {
            sieve_bound: self.sieve_bound,
            precision: self.precision,
            spade3_exclude_p: self.spade3_exclude_p,
            witness_bound: self.witness_bound,
        }
    }

    fn external(&self) -> ExternalInputs {
        ExternalInputs {
            selmer_corank: self.selmer_corank,
            analytic_rank: self.analytic_rank,
            r_plus: self.r_plus,
            r_minus: self.r_minus,
            lhs_valuation: self.lhs_valuation,
            sha_valuation: self.sha_valuation,
            rational_p_isogeny: self.rational_p_isogeny,
        }
    }
}

fn parse_curve(s: &str) -> Result<Vec<BigInt>, String> {
    let inner = s.trim().trim_start_matches('[').trim_end_matches(']');
    let coeffs = inner
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(bigint_serde::parse)
        .collect::<Result<Vec<_>, _>>()?;
    if coeffs.len() != 5 {
        return Err(format!("--curve needs 5 coefficients, got {}", coeffs.len()));
    }
    Ok(coeffs)
}

fn run(cli: &Cli) -> Result<(String, bool), Failure> {
    if cli.selftest {
        let report = run_suite(cli.seed, cli.modules, DEFAULT_ENUMERATION_CAP);
        let ok = report.passed();
        let out = match cli.format {
            Format::Json => to_canonical_json(&report),
            Format::Text => format!(
                "seed {}  modules {}  cap {}\nHerbrand failures {}\nadditivity failures {}\nSmith/enumeration mismatches {}\n{}\n",
                report.seed,
                report.modules,
                report.cap,
                report.herbrand_failures,
                report.additivity_failures,
                report.smith_mismatches,
                if ok { "PASS" } else { "FAIL" }
            ),
        };
        return Ok((out, ok));
    }
    if let Some(path) = &cli.input {
        if cli.external() != ExternalInputs::default() {
            return Err(Failure::Usage("external inputs go in the batch file, not on the command line".into()));
        }
        let text = fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
        let rows = parse_batch(&text, &cli.options()).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
        let summary = run_batch(rows, cli.threads);
        let out = match cli.format {
            Format::Json => to_canonical_json(&summary),
            Format::Text => render_batch_text(&summary),
        };
        return Ok((out, true));
    }
    let (Some(curve), Some(p), Some(disc)) = (&cli.curve, cli.p, &cli.disc) else {
        return Err(Failure::Usage("give --curve, --p and --disc, or --input, or --selftest".into()));
    };
    let job = JobInput {
        curve: parse_curve(curve).map_err(Failure::Data)?,
        p,
        d: bigint_serde::parse(disc).map_err(|e| Failure::Data(format!("--disc: {e}")))?,
        external: cli.external(),
        options: cli.options(),
    };
    let report = run_job(&job);
    let out = match cli.format {
        Format::Json => to_canonical_json(&report),
        Format::Text => render_text(&report),
    };
    Ok((out, true))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    if cli.threads == Some(0) {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(EXIT_USAGE);
    }
    let (out, ok) = match run(&cli) {
        Ok(r) => r,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(EXIT_USAGE);
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(EXIT_DATA);
        }
    };
    let written = match &cli.output {
        Some(path) => fs::write(path, &out),
        None => io::stdout().lock().write_all(out.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(74);
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
