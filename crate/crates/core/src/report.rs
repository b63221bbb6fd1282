//! Job orchestration, batch ingestion and canonical report rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::arith::is_prime_u64;
use crate::bigint_serde;
use crate::cohomology::DEFAULT_SEED;
use crate::ec::{conductor_and_global_data, GlobalData, TraceCache, WeierstrassCurve, DEFAULT_POINT_COUNT_CAP};
use crate::error::Error;
use crate::galois::{
    irreducibility_witness, residual_certificate, Irreducibility, IrreducibilityStatus, ResidualCertificate,
    DEFAULT_WITNESS_BOUND,
};
use crate::hypotheses::{evaluate_all, ExternalInputs, InvariantBundle, TheoremReport, Verdict};
use crate::quadfield::{from_factored, PermissibleFactorization, QuadraticField};
use crate::sieves::{sieve_admissible, sieve_kolyvagin, SieveContext, SieveSummary, DEFAULT_SIEVE_BOUND};
use crate::tate_period::{compute_tate_period, TatePeriodData, DEFAULT_PRECISION};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exact CSV header for batch files.
pub const CSV_HEADER: [&str; 7] = ["a1", "a2", "a3", "a4", "a6", "p", "D"];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobOptions {
    pub sieve_bound: u64,
    pub precision: i64,
    pub spade3_exclude_p: bool,
    pub witness_bound: usize,
}

impl Default for JobOptions {
    fn default() -> Self {
        JobOptions {
            sieve_bound: DEFAULT_SIEVE_BOUND,
            precision: DEFAULT_PRECISION,
            spade3_exclude_p: false,
            witness_bound: DEFAULT_WITNESS_BOUND,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobInput {
    /// `[a1, a2, a3, a4, a6]`.
    #[serde(with = "bigint_serde::vec")]
    pub curve: Vec<BigInt>,
    pub p: u64,
    /// The field has discriminant `-D`; a negative value is read as the
    /// discriminant itself.
    #[serde(rename = "D", with = "bigint_serde")]
    pub d: BigInt,
    #[serde(default)]
    pub external: ExternalInputs,
    #[serde(default)]
    pub options: JobOptions,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportError {
    pub stage: String,
    pub code: String,
    pub message: String,
    /// A fatal error stops the pipeline; later sections are absent.
    pub fatal: bool,
}

impl ReportError {
    fn new(stage: &str, e: &Error, fatal: bool) -> Self {
        ReportError {
            stage: stage.to_string(),
            code: e.code().to_string(),
            message: e.to_string(),
            fatal,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobReport {
    pub input: JobInput,
    /// External data echoed separately: assumed, not computed.
    pub assumed_not_computed: ExternalInputs,
    pub tool_version: String,
    pub seed: u64,
    pub global: Option<GlobalData>,
    pub field: Option<QuadraticField>,
    /// Absent when N has an inert square or a ramified prime.
    pub factorization: Option<PermissibleFactorization>,
    pub tate_period: Option<TatePeriodData>,
    pub certificate: Option<ResidualCertificate>,
    pub sieves: Option<SieveSummary>,
    pub theorems: Vec<TheoremReport>,
    pub errors: Vec<ReportError>,
}

impl JobReport {
    fn empty(input: &JobInput) -> Self {
        JobReport {
            input: input.clone(),
            assumed_not_computed: input.external.clone(),
            tool_version: TOOL_VERSION.to_string(),
            seed: DEFAULT_SEED,
            global: None,
            field: None,
            factorization: None,
            tate_period: None,
            certificate: None,
            sieves: None,
            theorems: Vec::new(),
            errors: Vec::new(),
        }
    }

    pub fn is_fatal(&self) -> bool {
        self.errors.iter().any(|e| e.fatal)
    }

    pub fn theorem(&self, id: crate::hypotheses::TheoremId) -> Option<&TheoremReport> {
        self.theorems.iter().find(|t| t.theorem_id == id)
    }
}

fn field_from(d: &BigInt) -> crate::Result<QuadraticField> {
    if d.is_positive() {
        QuadraticField::new(d)
    } else {
        QuadraticField::from_discriminant(d)
    }
}

/// Runs the full pipeline. Never fails: errors become report entries.
pub fn run_job(input: &JobInput) -> JobReport {
    let mut report = JobReport::empty(input);
    let fatal = |report: &mut JobReport, stage: &str, e: Error| {
        report.errors.push(ReportError::new(stage, &e, true));
    };

    let opts = &input.options;
    let curve = if input.curve.len() == 5 {
        WeierstrassCurve::from_slice(&input.curve)
    } else {
        Err(Error::InvalidInput(format!("curve needs 5 coefficients, got {}", input.curve.len())))
    };
    let curve = match curve {
        Ok(c) => c,
        Err(e) => {
            fatal(&mut report, "input", e);
            return report;
        }
    };
    let p = input.p;
    if p < 5 || !is_prime_u64(p) {
        fatal(&mut report, "input", Error::BadResidueCharacteristic(p));
        return report;
    }
    if opts.precision < 1 {
        fatal(&mut report, "input", Error::BadPrecision(opts.precision));
        return report;
    }
    if let Err(e) = input.external.validate() {
        fatal(&mut report, "input", e);
        return report;
    }
    let field = match field_from(&input.d) {
        Ok(k) => k,
        Err(e) => {
            fatal(&mut report, "input", e);
            return report;
        }
    };
    report.field = Some(field.clone());

    let global = match conductor_and_global_data(&curve) {
        Ok(g) => g,
        Err(e) => {
            fatal(&mut report, "global", e);
            return report;
        }
    };
    report.global = Some(global.clone());
    let g = global.conductor.gcd(&field.d());
    if !g.is_one() {
        fatal(&mut report, "field", Error::DiscNotCoprime { gcd: g });
        return report;
    }

    let factors: Vec<(BigInt, u32)> =
        global.local.iter().map(|d| (d.prime.clone(), d.conductor_exponent)).collect();
    report.factorization = from_factored(&factors, &field);

    let bp = BigInt::from(p);
    let multiplicative_at_p = global
        .local_at(&bp)
        .is_some_and(|d| d.reduction_class.is_multiplicative());
    let mut tate_error = None;
    if multiplicative_at_p {
        match compute_tate_period(&global.minimal_model, p, opts.precision) {
            Ok(t) => report.tate_period = Some(t),
            Err(e) => {
                report.errors.push(ReportError::new("tate_period", &e, false));
                tate_error = Some(e);
            }
        }
    }

    let traces = TraceCache::new(global.minimal_model.clone(), DEFAULT_POINT_COUNT_CAP);
    let irreducibility = match irreducibility_witness(
        &traces,
        &global.conductor,
        p,
        opts.witness_bound,
        input.external.rational_p_isogeny,
    ) {
        Ok(i) => i,
        Err(e) => {
            report.errors.push(ReportError::new("galois", &e, false));
            Irreducibility {
                status: IrreducibilityStatus::Inconclusive,
                witness: None,
                witness_trace: None,
                examined: 0,
            }
        }
    };
    let certificate = residual_certificate(irreducibility, &global.local, report.tate_period.as_ref(), p);
    report.certificate = Some(certificate.clone());

    let ctx = SieveContext { traces: &traces, conductor: &global.conductor, field: &field, p };
    let sieved = sieve_kolyvagin(&ctx, opts.sieve_bound)
        .and_then(|k| Ok((k, sieve_admissible(&ctx, opts.sieve_bound)?)));
    match sieved {
        Ok((k, a)) => report.sieves = Some(SieveSummary::new(opts.sieve_bound, &k, &a)),
        Err(e) => report.errors.push(ReportError::new("sieves", &e, false)),
    }

    let bundle = InvariantBundle {
        p,
        field,
        conductor: global.conductor.clone(),
        local: global.local.clone(),
        tate: report.tate_period.clone(),
        tate_error,
        certificate,
        external: input.external.clone(),
        spade3_exclude_p: opts.spade3_exclude_p,
    };
    match evaluate_all(&bundle) {
        Ok(t) => report.theorems = t,
        Err(e) => report.errors.push(ReportError::new("gates", &e, false)),
    }
    report
}

/// Sorted keys, integers in plain decimal, trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("report types serialize to JSON");
    let mut s = serde_json::to_string_pretty(&v).expect("JSON values render");
    s.push('\n');
    s
}

/// A batch row that could not be read as a job.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub applies: usize,
    pub does_not_apply: usize,
    pub inconclusive: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub reports: Vec<JobReport>,
    pub row_errors: Vec<RowError>,
    /// Verdict counts per theorem over all reports.
    pub aggregate: BTreeMap<String, VerdictCounts>,
}

/// Whole-file problems: not a JSON array, or a CSV with the wrong header.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct BatchFormatError(pub String);

/// Rows of a batch file, each either a job or a row error. JSON arrays and
/// CSV are told apart by the first non-blank character.
pub fn parse_batch(text: &str, defaults: &JobOptions) -> Result<Vec<Result<JobInput, RowError>>, BatchFormatError> {
    if text.trim_start().starts_with('[') {
        parse_json_batch(text, defaults)
    } else {
        parse_csv_batch(text, defaults)
    }
}

fn parse_json_batch(text: &str, defaults: &JobOptions) -> Result<Vec<Result<JobInput, RowError>>, BatchFormatError> {
    let rows: Vec<Value> =
        serde_json::from_str(text).map_err(|e| BatchFormatError(format!("not a JSON array of jobs: {e}")))?;
    let lines = element_lines(text);
    debug_assert_eq!(lines.len(), rows.len());
    Ok(rows
        .into_iter()
        .zip(lines)
        .map(|(row, line)| job_from_value(row, defaults).map_err(|message| RowError { line, message }))
        .collect())
}

/// Reads one JSON job, filling absent options from `defaults`.
pub fn job_from_value(mut row: Value, defaults: &JobOptions) -> Result<JobInput, String> {
    let obj = row.as_object_mut().ok_or("job must be a JSON object")?;
    let mut opts = serde_json::to_value(defaults).expect("options serialize");
    if let Some(given) = obj.remove("options") {
        let given = given.as_object().ok_or("options must be an object")?.clone();
        let target = opts.as_object_mut().expect("options are an object");
        for (k, v) in given {
            target.insert(k, v);
        }
    }
    obj.insert("options".into(), opts);
    let job: JobInput = serde_json::from_value(row).map_err(|e| e.to_string())?;
    if job.curve.len() != 5 {
        return Err(format!("curve needs 5 coefficients, got {}", job.curve.len()));
    }
    Ok(job)
}

/// 1-based line of each top-level element of a JSON array.
fn element_lines(text: &str) -> Vec<usize> {
    let mut out = Vec::new();
    let (mut depth, mut line) = (0usize, 1usize);
    let (mut in_str, mut escaped, mut expect) = (false, false, false);
    for ch in text.chars() {
        if ch == '\n' {
            line += 1;
        }
        if in_str {
            match (escaped, ch) {
                (true, _) => escaped = false,
                (false, '\\') => escaped = true,
                (false, '"') => in_str = false,
                _ => {}
            }
            continue;
        }
        if ch.is_whitespace() {
            continue;
        }
        if expect && depth == 1 && ch != ']' {
            out.push(line);
            expect = false;
        }
        match ch {
            '"' => in_str = true,
            '[' | '{' => {
                depth += 1;
                if depth == 1 {
                    expect = true;
                }
            }
            ']' | '}' => depth -= 1,
            ',' if depth == 1 => expect = true,
            _ => {}
        }
    }
    out
}

fn parse_csv_batch(text: &str, defaults: &JobOptions) -> Result<Vec<Result<JobInput, RowError>>, BatchFormatError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| BatchFormatError(format!("unreadable CSV header: {e}")))?
        .clone();
    if header.iter().map(str::trim).ne(CSV_HEADER) {
        return Err(BatchFormatError(format!(
            "CSV header must be {}, got {}",
            CSV_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let row = match record {
            Ok(r) => {
                let line = r.position().map_or(0, |pos| pos.line() as usize);
                csv_row(&r, defaults).map_err(|message| RowError { line, message })
            }
            Err(e) => {
                let line = e.position().map_or(0, |pos| pos.line() as usize);
                Err(RowError { line, message: e.to_string() })
            }
        };
        out.push(row);
    }
    Ok(out)
}

fn csv_row(r: &csv::StringRecord, defaults: &JobOptions) -> Result<JobInput, String> {
    if r.len() != CSV_HEADER.len() {
        return Err(format!("expected {} fields, got {}", CSV_HEADER.len(), r.len()));
    }
    let field = |i: usize| bigint_serde::parse(&r[i]).map_err(|e| format!("{}: {e}", CSV_HEADER[i]));
    let curve = (0..5).map(field).collect::<Result<Vec<_>, _>>()?;
    let p = r[5].trim().parse::<u64>().map_err(|e| format!("p: {e}"))?;
    Ok(JobInput {
        curve,
        p,
        d: field(6)?,
        external: ExternalInputs::default(),
        options: defaults.clone(),
    })
}

/// Runs the jobs on `threads` workers (rayon's default when `None`);
/// reports come back in input order.
pub fn run_batch(rows: Vec<Result<JobInput, RowError>>, threads: Option<usize>) -> BatchSummary {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().expect("thread pool");
    let mut row_errors = Vec::new();
    let mut jobs = Vec::new();
    for row in rows {
        match row {
            Ok(j) => jobs.push(j),
            Err(e) => row_errors.push(e),
        }
    }
    let reports: Vec<JobReport> = pool.install(|| jobs.par_iter().map(run_job).collect());
    let mut aggregate: BTreeMap<String, VerdictCounts> = BTreeMap::new();
    for t in reports.iter().flat_map(|r| &r.theorems) {
        let c = aggregate.entry(t.theorem_id.to_string()).or_default();
        match t.verdict {
            Verdict::Applies => c.applies += 1,
            Verdict::DoesNotApply => c.does_not_apply += 1,
            Verdict::Inconclusive => c.inconclusive += 1,
        }
    }
    BatchSummary { reports, row_errors, aggregate }
}

fn one_line(v: &Value) -> String {
    serde_json::to_string(v).expect("JSON values render")
}

/// Human-readable rendering, one clause per line.
pub fn render_text(r: &JobReport) -> String {
    let mut s = String::new();
    let curve: Vec<String> = r.input.curve.iter().map(|c| c.to_string()).collect();
    let _ = writeln!(s, "curve [{}]  p = {}  D = {}", curve.join(", "), r.input.p, r.input.d);
    let _ = writeln!(s, "tool {}  seed {}", r.tool_version, r.seed);
    if let Some(g) = &r.global {
        let min: Vec<String> = g.minimal_model.coeffs().iter().map(|c| c.to_string()).collect();
        let _ = writeln!(s, "minimal model [{}]  N = {}", min.join(", "), g.conductor);
        for d in &g.local {
            let _ = writeln!(
                s,
                "  {:>8}  {:<6} {:<26} c = {:<3} f = {}  ord(Δ) = {}",
                d.prime,
                d.kodaira_type.to_string(),
                d.reduction_class.to_string(),
                d.tamagawa,
                d.conductor_exponent,
                d.ord_delta_min
            );
        }
    }
    if let Some(k) = &r.field {
        let _ = writeln!(s, "field {k}");
    }
    if r.global.is_some() && r.field.is_some() && !r.is_fatal() {
        match &r.factorization {
            Some(f) => {
                let _ = writeln!(s, "N+ = {}  N- = {}  ν(N-) = {}", f.n_plus, f.n_minus, f.nu_minus);
            }
            None => {
                let _ = writeln!(s, "N has no permissible factorization");
            }
        }
    }
    if let Some(t) = &r.tate_period {
        let _ = writeln!(
            s,
            "Tate period: ord(q) = {}  {}  not finite at p: {}  ord(log q) = 1: {}",
            t.ord_q,
            if t.split { "split" } else { "nonsplit" },
            t.not_finite_at_p,
            t.hyp_l_holds
        );
        let _ = writeln!(s, "  q = {}", t.q);
        let _ = writeln!(s, "  L = {}", t.l_invariant);
    }
    if let Some(c) = &r.certificate {
        let i = &c.irreducibility;
        let witness = match (i.witness, i.witness_trace) {
            (Some(l), Some(a)) => format!(" (ℓ = {l}, a = {a})"),
            _ => String::new(),
        };
        let ram: Vec<String> = c.ram_set.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(s, "irreducibility: {}{witness} after {} primes", i.status, i.examined);
        let _ = writeln!(s, "Ram = {{{}}}  large image: {:?} ({})", ram.join(", "), c.clubs.status, c.clubs.note);
    }
    if let Some(sv) = &r.sieves {
        let kol: Vec<String> = sv.kolyvagin_first.iter().map(|k| format!("{}:{}", k.ell, k.index)).collect();
        let adm: Vec<String> = sv.admissible_first.iter().map(|a| a.q.to_string()).collect();
        let _ = writeln!(s, "sieves up to {}: {} Kolyvagin, {} admissible", sv.bound, sv.kolyvagin_count, sv.admissible_count);
        let _ = writeln!(s, "  Kolyvagin (ℓ:index) {}", kol.join(" "));
        let _ = writeln!(s, "  admissible {}", adm.join(" "));
    }
    for t in &r.theorems {
        let _ = writeln!(s, "{}: {}", t.theorem_id, t.verdict);
        for c in &t.clauses {
            let _ = writeln!(s, "  {:<13} {:<24} {}  {}", c.status.to_string(), c.clause_id, c.description, one_line(&c.evidence));
        }
        for c in &t.consistency_checks {
            let _ = writeln!(s, "  check {:<12} {:<24} {}  {}", c.status.to_string(), c.clause_id, c.description, one_line(&c.evidence));
        }
        for c in &t.conclusions {
            let _ = writeln!(s, "  => {}", c.text);
        }
        let assumed: Vec<String> = t
            .external_inputs_used
            .iter()
            .map(|(k, v)| format!("{k} = {}", v.map_or("-".to_string(), |x| x.to_string())))
            .collect();
        if !assumed.is_empty() {
            let _ = writeln!(s, "  assumed, not computed: {}", assumed.join(", "));
        }
        for n in &t.notes {
            let _ = writeln!(s, "  note: {n}");
        }
    }
    for e in &r.errors {
        let _ = writeln!(s, "{} {} [{}]: {}", if e.fatal { "fatal" } else { "error" }, e.code, e.stage, e.message);
    }
    s
}

pub fn render_batch_text(b: &BatchSummary) -> String {
    let mut s = String::new();
    for (i, r) in b.reports.iter().enumerate() {
        let _ = writeln!(s, "--- job {} ---", i + 1);
        s.push_str(&render_text(r));
    }
    for e in &b.row_errors {
        let _ = writeln!(s, "row error at line {}: {}", e.line, e.message);
    }
    let _ = writeln!(s, "--- summary: {} reports, {} row errors ---", b.reports.len(), b.row_errors.len());
    let _ = writeln!(s, "{:<10} {:>8} {:>14} {:>13}", "theorem", "Applies", "DoesNotApply", "Inconclusive");
    for (id, c) in &b.aggregate {
        let _ = writeln!(s, "{:<10} {:>8} {:>14} {:>13}", id, c.applies, c.does_not_apply, c.inconclusive);
    }
    s
}

/// Whether the reduction at p is multiplicative, from a finished report.
pub fn multiplicative_at(r: &JobReport, p: u64) -> bool {
    r.global
        .as_ref()
        .and_then(|g| g.local_at_u64(p))
        .is_some_and(|d| d.reduction_class.is_multiplicative())
}
