//! Theorem gates: each hypothesis clause is evaluated to Holds, Fails or
//! Inconclusive over a bundle of precomputed invariants, and the conclusions
//! are licensed only when every clause holds.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::arith::{mod_u64, valuation_u64};
use crate::ec::{LocalReductionData, ReductionClass};
use crate::error::{Error, Result};
use crate::galois::{IrreducibilityStatus, ResidualCertificate};
use crate::quadfield::{self, QuadraticField, SplittingType};
use crate::tate_period::TatePeriodData;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Holds,
    Fails,
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Holds => "holds",
            Status::Fails => "fails",
            Status::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Applies,
    DoesNotApply,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Applies => "applies",
            Verdict::DoesNotApply => "does not apply",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TheoremId {
    ThmEQ,
    ThmEBSD,
    ThmEMain,
    ThmERank,
    Parity,
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TheoremId::ThmEQ => "ThmEQ",
            TheoremId::ThmEBSD => "ThmEBSD",
            TheoremId::ThmEMain => "ThmEMain",
            TheoremId::ThmERank => "ThmERank",
            TheoremId::Parity => "Parity",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseVerdict {
    pub clause_id: String,
    pub description: String,
    pub status: Status,
    /// Primes, valuations and witnesses behind the verdict; an inconclusive
    /// verdict names what blocked it under `blocked_by`.
    pub evidence: Value,
}

impl ClauseVerdict {
    pub(crate) fn new(id: &str, description: &str, status: Status, evidence: Value) -> Self {
        debug_assert!(evidence.as_object().is_some_and(|m| !m.is_empty()));
        ClauseVerdict {
            clause_id: id.to_string(),
            description: description.to_string(),
            status,
            evidence,
        }
    }

    fn from_bool(id: &str, description: &str, ok: bool, evidence: Value) -> Self {
        Self::new(id, description, if ok { Status::Holds } else { Status::Fails }, evidence)
    }

    pub(crate) fn blocked(id: &str, description: &str, why: impl Into<String>) -> Self {
        Self::new(id, description, Status::Inconclusive, json!({ "blocked_by": why.into() }))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conclusion {
    pub id: String,
    pub text: String,
}

impl Conclusion {
    fn new(id: &str, text: impl Into<String>) -> Self {
        Conclusion { id: id.to_string(), text: text.into() }
    }
}

/// Quantities that are never computed here and enter only as assumptions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalInputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selmer_corank: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic_rank: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_plus: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_minus: Option<i64>,
    /// `ord_p(L'(E,1) / (Ω_E Reg(E/Q)))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lhs_valuation: Option<i64>,
    /// `ord_p(#Sha(E/Q))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sha_valuation: Option<i64>,
    /// Whether E admits a rational p-isogeny, if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rational_p_isogeny: Option<bool>,
}

impl ExternalInputs {
    pub fn validate(&self) -> Result<()> {
        let ranks = [self.selmer_corank, self.analytic_rank, self.r_plus, self.r_minus];
        if ranks.iter().flatten().any(|&r| r < 0) {
            return Err(Error::NegativeCorank);
        }
        let vals = [self.lhs_valuation, self.sha_valuation];
        if vals.iter().flatten().any(|&v| v < 0) {
            return Err(Error::InvalidInput("negative valuation among external inputs".into()));
        }
        Ok(())
    }

    fn pick(&self, names: &[&str]) -> BTreeMap<String, Option<i64>> {
        names
            .iter()
            .map(|&n| {
                let v = match n {
                    "selmer_corank" => self.selmer_corank,
                    "analytic_rank" => self.analytic_rank,
                    "r_plus" => self.r_plus,
                    "r_minus" => self.r_minus,
                    "lhs_valuation" => self.lhs_valuation,
                    "sha_valuation" => self.sha_valuation,
                    _ => unreachable!("unknown external input {n}"),
                };
                (n.to_string(), v)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub theorem_id: TheoremId,
    pub clauses: Vec<ClauseVerdict>,
    pub verdict: Verdict,
    pub conclusions: Vec<Conclusion>,
    /// External values consulted, echoed as assumed rather than computed.
    pub external_inputs_used: BTreeMap<String, Option<i64>>,
    /// Cross-checks of supplied external data against the theorem; they never
    /// affect the verdict.
    pub consistency_checks: Vec<ClauseVerdict>,
    pub notes: Vec<String>,
}

impl TheoremReport {
    fn assemble(theorem_id: TheoremId, clauses: Vec<ClauseVerdict>) -> Self {
        TheoremReport {
            theorem_id,
            verdict: combine(&clauses),
            clauses,
            conclusions: Vec::new(),
            external_inputs_used: BTreeMap::new(),
            consistency_checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn clause(&self, id: &str) -> Option<&ClauseVerdict> {
        self.clauses.iter().find(|c| c.clause_id == id)
    }
}

/// Applies iff every clause holds; any failure means the theorem does not apply.
pub fn combine(clauses: &[ClauseVerdict]) -> Verdict {
    if clauses.iter().any(|c| c.status == Status::Fails) {
        Verdict::DoesNotApply
    } else if clauses.iter().all(|c| c.status == Status::Holds) {
        Verdict::Applies
    } else {
        Verdict::Inconclusive
    }
}

/// Everything the gates read. Built by the job pipeline from a curve, or by
/// hand for testing the gate logic in isolation.
#[derive(Clone, Debug)]
pub struct InvariantBundle {
    pub p: u64,
    pub field: QuadraticField,
    pub conductor: BigInt,
    /// Local data at every prime dividing N.
    pub local: Vec<LocalReductionData>,
    pub tate: Option<TatePeriodData>,
    /// Why `tate` is absent, when it is.
    pub tate_error: Option<Error>,
    pub certificate: ResidualCertificate,
    pub external: ExternalInputs,
    pub spade3_exclude_p: bool,
}

impl InvariantBundle {
    fn local_at_p(&self) -> Option<&LocalReductionData> {
        let bp = BigInt::from(self.p);
        self.local.iter().find(|d| d.prime == bp)
    }

    fn check_coprime(&self) -> Result<()> {
        let g = self.conductor.gcd(&self.field.d());
        if g.is_one() {
            Ok(())
        } else {
            Err(Error::DiscNotCoprime { gcd: g })
        }
    }

    /// ℓ || N with p ∤ ord_ℓ(Δ_min), including ℓ = p.
    fn unramified_exact_divisors(&self) -> Vec<&LocalReductionData> {
        self.local
            .iter()
            .filter(|d| d.conductor_exponent == 1 && !(d.ord_delta_min as u64).is_multiple_of(self.p))
            .collect()
    }

    fn tate_blocker(&self) -> String {
        match (&self.tate_error, self.local_at_p()) {
            (Some(e), _) => format!("Tate period unavailable: {e}"),
            (None, Some(d)) => format!("reduction at p is {}", d.reduction_class),
            (None, None) => "good reduction at p".to_string(),
        }
    }
}

fn big_list(v: &[&BigInt]) -> Value {
    Value::Array(v.iter().map(|b| num_value(b)).collect())
}

fn num_value(b: &BigInt) -> Value {
    match b.to_i64() {
        Some(n) => json!(n),
        None => Value::String(b.to_string()),
    }
}

fn is_pm_one(ell: &BigInt, p: u64) -> bool {
    let r = mod_u64(ell, p);
    r == 1 || r == p - 1
}

/// N split into split and inert prime powers relative to K.
struct Routing<'a> {
    plus: Vec<&'a LocalReductionData>,
    minus: Vec<&'a LocalReductionData>,
}

fn route<'a>(local: &'a [LocalReductionData], field: &QuadraticField) -> Routing<'a> {
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for d in local.iter().filter(|d| d.conductor_exponent > 0) {
        match field.splitting_type(&d.prime) {
            SplittingType::Split => plus.push(d),
            SplittingType::Inert => minus.push(d),
            SplittingType::Ramified => {}
        }
    }
    Routing { plus, minus }
}

const SPADE1: &str = "N- is squarefree";
const SPADE2: &str = "Ram contains every l != p with l || N+ and every l | N- with l = +-1 mod p";
const SPADE3: &str = "Ram is nonempty and meets N-, or at least two primes exactly divide N+";

/// The three clauses of the hypothesis on ramification at primes of
/// multiplicative reduction, relative to the split/inert routing of N.
pub fn check_spade(
    local: &[LocalReductionData],
    field: &QuadraticField,
    p: u64,
    ram: &[BigInt],
    spade3_exclude_p: bool,
) -> Vec<ClauseVerdict> {
    let routing = route(local, field);
    let bp = BigInt::from(p);
    let in_ram = |l: &BigInt| ram.contains(l);

    let squares: Vec<&BigInt> = routing
        .minus
        .iter()
        .filter(|d| d.conductor_exponent > 1)
        .map(|d| &d.prime)
        .collect();
    let minus_primes: Vec<&BigInt> = routing.minus.iter().map(|d| &d.prime).collect();
    let c1 = ClauseVerdict::from_bool(
        "spade.1",
        SPADE1,
        squares.is_empty(),
        json!({ "n_minus_primes": big_list(&minus_primes), "repeated_inert_primes": big_list(&squares) }),
    );

    let plus_exact: Vec<&BigInt> = routing
        .plus
        .iter()
        .filter(|d| d.conductor_exponent == 1)
        .map(|d| &d.prime)
        .collect();
    let mut required: Vec<&BigInt> = plus_exact.iter().copied().filter(|l| **l != bp).collect();
    required.extend(minus_primes.iter().copied().filter(|l| is_pm_one(l, p)));
    let missing: Vec<Value> = required
        .iter()
        .filter(|l| !in_ram(l))
        .map(|l| json!({ "prime": num_value(l), "mod_p": mod_u64(l, p) }))
        .collect();
    let c2 = ClauseVerdict::from_bool(
        "spade.2",
        SPADE2,
        missing.is_empty(),
        json!({ "required_in_ram": big_list(&required), "missing": missing }),
    );

    let counted: Vec<&BigInt> = plus_exact
        .iter()
        .copied()
        .filter(|l| !(spade3_exclude_p && **l == bp))
        .collect();
    let ram_minus: Vec<&BigInt> = minus_primes.iter().copied().filter(|l| in_ram(l)).collect();
    let ram_refs: Vec<&BigInt> = ram.iter().collect();
    let ok3 = !ram.is_empty() && (!ram_minus.is_empty() || counted.len() >= 2);
    let c3 = ClauseVerdict::from_bool(
        "spade.3",
        SPADE3,
        ok3,
        json!({
            "ram": big_list(&ram_refs),
            "ram_in_n_minus": big_list(&ram_minus),
            "exact_n_plus_primes_counted": big_list(&counted),
            "counts_p": !spade3_exclude_p,
        }),
    );
    vec![c1, c2, c3]
}

/// The four-part variant phrased through the permissible factorization;
/// for elliptic curves with p >= 5 its fourth part is automatic and it must
/// agree with [`check_spade`].
pub fn check_heart(
    local: &[LocalReductionData],
    field: &QuadraticField,
    p: u64,
    ram: &[BigInt],
    spade3_exclude_p: bool,
) -> Vec<ClauseVerdict> {
    let factors: Vec<(BigInt, u32)> = local
        .iter()
        .filter(|d| d.conductor_exponent > 0)
        .map(|d| (d.prime.clone(), d.conductor_exponent))
        .collect();
    let bp = BigInt::from(p);
    let mut out = Vec::with_capacity(4);
    match quadfield::from_factored(&factors, field) {
        None => {
            out.push(ClauseVerdict::new(
                "heart.1",
                "a permissible factorization exists",
                Status::Fails,
                json!({ "factorization": null }),
            ));
            for id in ["heart.2", "heart.3"] {
                out.push(ClauseVerdict::blocked(id, "", "no permissible factorization"));
            }
        }
        Some(f) => {
            out.push(ClauseVerdict::new(
                "heart.1",
                "a permissible factorization exists",
                Status::Holds,
                json!({ "n_plus": num_value(&f.n_plus), "n_minus": num_value(&f.n_minus) }),
            ));
            let exact: Vec<&BigInt> = f.plus_exact_primes().collect();
            let ok2 = exact.iter().all(|l| **l == bp || ram.contains(l))
                && f
                    .minus_primes
                    .iter()
                    .all(|l| !is_pm_one(l, p) || ram.contains(l));
            out.push(ClauseVerdict::from_bool("heart.2", SPADE2, ok2, json!({ "ram_size": ram.len() })));
            let meets_minus = f.minus_primes.iter().any(|l| ram.contains(l));
            let count = exact.iter().filter(|l| !(spade3_exclude_p && ***l == bp)).count();
            let ok3 = !ram.is_empty() && (meets_minus || count >= 2);
            out.push(ClauseVerdict::from_bool("heart.3", SPADE3, ok3, json!({ "exact_n_plus_count": count })));
        }
    }
    out.push(if p >= 5 {
        ClauseVerdict::new(
            "heart.4",
            "local invariants vanish at l with l^2 | N+",
            Status::Holds,
            json!({ "automatic": "elliptic curve with p >= 5" }),
        )
    } else {
        ClauseVerdict::blocked("heart.4", "local invariants vanish at l with l^2 | N+", "p < 5")
    });
    out
}

fn irreducibility_clause(id: &str, cert: &ResidualCertificate) -> ClauseVerdict {
    const DESC: &str = "the mod-p representation is irreducible";
    let irr = &cert.irreducibility;
    match irr.status {
        IrreducibilityStatus::CertifiedIrreducible => ClauseVerdict::new(
            id,
            DESC,
            Status::Holds,
            json!({ "witness": irr.witness, "a_witness": irr.witness_trace }),
        ),
        IrreducibilityStatus::CertifiedReducible => ClauseVerdict::new(
            id,
            DESC,
            Status::Fails,
            json!({ "rational_p_isogeny": true }),
        ),
        IrreducibilityStatus::Inconclusive => ClauseVerdict::blocked(
            id,
            DESC,
            format!("no witness among the first {} good primes", irr.examined),
        ),
    }
}

fn p_exactly_divides(b: &InvariantBundle, id: &str) -> ClauseVerdict {
    const DESC: &str = "p || N (multiplicative reduction at p)";
    match b.local_at_p() {
        Some(d) => ClauseVerdict::from_bool(
            id,
            DESC,
            d.conductor_exponent == 1,
            json!({ "reduction": d.reduction_class, "conductor_exponent": d.conductor_exponent }),
        ),
        None => ClauseVerdict::new(id, DESC, Status::Fails, json!({ "reduction": ReductionClass::Good })),
    }
}

/// Nonvanishing of the Kolyvagin system attached to (E, p, K).
pub fn gate_thm_main(b: &InvariantBundle) -> Result<TheoremReport> {
    b.check_coprime()?;
    let mut clauses = vec![p_exactly_divides(b, "ThmEMain.pN")];

    let p_split = b.field.splitting_type_u64(b.p);
    clauses.push(ClauseVerdict::from_bool(
        "ThmEMain.a",
        "p >= 5 and p splits in K",
        b.p >= 5 && p_split == SplittingType::Split,
        json!({ "p": b.p, "splitting": p_split }),
    ));

    clauses.push(irreducibility_clause("ThmEMain.b", &b.certificate));

    const DESC_C: &str = "not finite at p, and log_p(q) in pZ_p^x if split";
    clauses.push(match &b.tate {
        Some(t) => {
            let ok = t.not_finite_at_p && (!t.split || t.hyp_l_holds);
            ClauseVerdict::from_bool(
                "ThmEMain.c",
                DESC_C,
                ok,
                json!({
                    "ord_q": t.ord_q,
                    "not_finite_at_p": t.not_finite_at_p,
                    "split": t.split,
                    "ord_log_q": t.log_q.valuation(),
                }),
            )
        }
        None => ClauseVerdict::blocked("ThmEMain.c", DESC_C, b.tate_blocker()),
    });

    let ram = &b.certificate.ram_set;
    let spade = check_spade(&b.local, &b.field, b.p, ram, b.spade3_exclude_p);
    let heart = check_heart(&b.local, &b.field, b.p, ram, b.spade3_exclude_p);
    clauses.extend(spade.iter().cloned());

    let routing = route(&b.local, &b.field);
    let nu: u32 = routing.minus.iter().map(|d| d.conductor_exponent).sum();
    clauses.push(ClauseVerdict::from_bool(
        "ThmEMain.d_parity",
        "N- has an even number of prime factors",
        nu.is_multiple_of(2),
        json!({ "nu_minus": nu }),
    ));

    let mut report = TheoremReport::assemble(TheoremId::ThmEMain, clauses);
    let spade_ok = spade.iter().all(|c| c.status == Status::Holds);
    let heart_ok = heart.iter().all(|c| c.status == Status::Holds);
    if b.p >= 5 {
        debug_assert_eq!(spade_ok, heart_ok, "ramification hypotheses disagree");
        if spade_ok != heart_ok {
            report.notes.push("internal: the two ramification checkers disagree".into());
        }
    }
    report.notes.push(format!(
        "spade.3 counts p among primes exactly dividing N+: {}",
        !b.spade3_exclude_p
    ));
    if report.verdict == Verdict::Applies {
        report.conclusions = vec![
            Conclusion::new("kappa_nonzero", "the mod-p Kolyvagin system κ is nonzero"),
            Conclusion::new("kappa_infinity_nonzero", "the p-adic Kolyvagin system κ∞ is nonzero"),
            Conclusion::new("m_infinity_zero", "M∞ = 0"),
        ];
    }
    Ok(report)
}

/// The five local clauses shared by the rank-one and BSD gates.
fn rank_one_local_clauses(b: &InvariantBundle, prefix: &str) -> Vec<ClauseVerdict> {
    let id = |s: &str| format!("{prefix}.{s}");
    let mut clauses = vec![p_exactly_divides(b, &id("a"))];

    const DESC_B: &str = "p ∤ ord_p(Δ), and log_p(q) in pZ_p^x if split";
    let ord_p = b.local_at_p().map_or(0, |d| d.ord_delta_min);
    let split = b
        .local_at_p()
        .is_some_and(|d| d.reduction_class == ReductionClass::SplitMultiplicative);
    clauses.push(if (ord_p as u64).is_multiple_of(b.p) {
        ClauseVerdict::new(&id("b"), DESC_B, Status::Fails, json!({ "ord_p_delta": ord_p }))
    } else if !split {
        ClauseVerdict::new(&id("b"), DESC_B, Status::Holds, json!({ "ord_p_delta": ord_p, "split": false }))
    } else {
        match &b.tate {
            Some(t) => ClauseVerdict::from_bool(
                &id("b"),
                DESC_B,
                t.hyp_l_holds,
                json!({ "ord_p_delta": ord_p, "split": true, "ord_log_q": t.log_q.valuation() }),
            ),
            None => ClauseVerdict::blocked(&id("b"), DESC_B, b.tate_blocker()),
        }
    });

    clauses.push(irreducibility_clause(&id("c"), &b.certificate));

    let offenders: Vec<Value> = b
        .local
        .iter()
        .filter(|d| d.conductor_exponent == 1 && is_pm_one(&d.prime, b.p))
        .filter(|d| (d.ord_delta_min as u64).is_multiple_of(b.p))
        .map(|d| json!({ "prime": num_value(&d.prime), "ord_delta": d.ord_delta_min }))
        .collect();
    clauses.push(ClauseVerdict::from_bool(
        &id("d"),
        "p ∤ ord_l(Δ) for every l || N with l = +-1 mod p",
        offenders.is_empty(),
        json!({ "offenders": offenders }),
    ));

    let good: Vec<&BigInt> = b.unramified_exact_divisors().iter().map(|d| &d.prime).collect();
    clauses.push(ClauseVerdict::from_bool(
        &id("e"),
        "at least two l || N with p ∤ ord_l(Δ)",
        good.len() >= 2,
        json!({ "primes": big_list(&good) }),
    ));
    clauses
}

fn p_at_least_five(b: &InvariantBundle, prefix: &str) -> ClauseVerdict {
    ClauseVerdict::from_bool(&format!("{prefix}.p"), "p >= 5", b.p >= 5, json!({ "p": b.p }))
}

/// Rank one and finiteness of Sha over Q.
pub fn gate_thm_eq(b: &InvariantBundle) -> Result<TheoremReport> {
    b.external.validate()?;
    let mut clauses = vec![p_at_least_five(b, "ThmEQ")];
    clauses.extend(rank_one_local_clauses(b, "ThmEQ"));
    const DESC_F: &str = "Sel_{p^∞}(E/Q) has Z_p-corank one";
    clauses.push(match b.external.selmer_corank {
        Some(r) => ClauseVerdict::from_bool("ThmEQ.f", DESC_F, r == 1, json!({ "selmer_corank": r })),
        None => ClauseVerdict::blocked("ThmEQ.f", DESC_F, "selmer_corank not supplied"),
    });
    let mut report = TheoremReport::assemble(TheoremId::ThmEQ, clauses);
    report.external_inputs_used = b.external.pick(&["selmer_corank"]);
    if report.verdict == Verdict::Applies {
        report.conclusions = vec![
            Conclusion::new("rank_one", "rank E(Q) = 1"),
            Conclusion::new("analytic_rank_one", "ord_{s=1} L(E,s) = 1"),
            Conclusion::new("sha_finite", "Sha(E/Q) is finite"),
        ];
    }
    Ok(report)
}

/// `ord_p` of the product of the Tamagawa numbers in the table.
pub fn tamagawa_valuation(local: &[LocalReductionData], p: u64) -> u32 {
    local
        .iter()
        .map(|d| valuation_u64(&BigInt::from(d.tamagawa), p).expect("Tamagawa numbers are positive"))
        .sum()
}

/// p-part of the BSD formula in analytic rank one.
pub fn gate_bsd(b: &InvariantBundle) -> Result<TheoremReport> {
    b.external.validate()?;
    let mut clauses = vec![p_at_least_five(b, "ThmEBSD")];
    clauses.extend(rank_one_local_clauses(b, "ThmEBSD"));
    const DESC_R: &str = "ord_{s=1} L(E,s) = 1";
    clauses.push(match b.external.analytic_rank {
        Some(r) => ClauseVerdict::from_bool("ThmEBSD.analytic_rank", DESC_R, r == 1, json!({ "analytic_rank": r })),
        None => ClauseVerdict::blocked("ThmEBSD.analytic_rank", DESC_R, "analytic_rank not supplied"),
    });
    let mut report = TheoremReport::assemble(TheoremId::ThmEBSD, clauses);
    report.external_inputs_used = b.external.pick(&["analytic_rank", "lhs_valuation", "sha_valuation"]);
    let tam = tamagawa_valuation(&b.local, b.p);
    if report.verdict == Verdict::Applies {
        report.conclusions = vec![Conclusion::new(
            "bsd_p_part",
            format!("ord_p(L'(E,1)/(Ω_E Reg(E/Q))) = ord_p(#Sha(E/Q)) + {tam}"),
        )];
    }
    if let (Some(lhs), Some(sha)) = (b.external.lhs_valuation, b.external.sha_valuation) {
        report.consistency_checks.push(ClauseVerdict::from_bool(
            "ThmEBSD.consistency",
            "supplied valuations satisfy lhs = sha + ord_p(Π c_l)",
            lhs == sha + tam as i64,
            json!({ "lhs_valuation": lhs, "sha_valuation": sha, "tamagawa_valuation": tam }),
        ));
    }
    report.notes.push(format!("ord_p of the Tamagawa product: {tam}"));
    if let Some(t) = &b.tate {
        if t.not_finite_at_p {
            report.notes.push("Tamagawa contribution above p vanishes (not finite at p)".into());
        }
    }
    Ok(report)
}

fn inherited_clause(main: &TheoremReport, id: &str) -> ClauseVerdict {
    let status = match main.verdict {
        Verdict::Applies => Status::Holds,
        Verdict::DoesNotApply => Status::Fails,
        Verdict::Inconclusive => Status::Inconclusive,
    };
    let failing: Vec<&str> = main
        .clauses
        .iter()
        .filter(|c| c.status != Status::Holds)
        .map(|c| c.clause_id.as_str())
        .collect();
    let evidence = if status == Status::Inconclusive {
        json!({ "blocked_by": failing })
    } else {
        json!({ "main_verdict": main.verdict, "not_holding": failing })
    };
    ClauseVerdict::new(id, "hypotheses of the Kolyvagin-system nonvanishing gate", status, evidence)
}

/// Order of vanishing of κ∞ and parity of the Selmer corank over K, both
/// under the hypotheses of [`gate_thm_main`].
pub fn gate_rank_and_parity(main: &TheoremReport, external: &ExternalInputs) -> Result<(TheoremReport, TheoremReport)> {
    external.validate()?;
    let mut rank_clauses = vec![inherited_clause(main, "ThmERank.hypotheses")];
    const DESC_R: &str = "Selmer coranks r+ and r- over K supplied";
    rank_clauses.push(match (external.r_plus, external.r_minus) {
        (Some(rp), Some(rm)) => ClauseVerdict::new(
            "ThmERank.coranks",
            DESC_R,
            Status::Holds,
            json!({ "r_plus": rp, "r_minus": rm }),
        ),
        _ => ClauseVerdict::blocked("ThmERank.coranks", DESC_R, "r_plus and r_minus not both supplied"),
    });
    let mut rank = TheoremReport::assemble(TheoremId::ThmERank, rank_clauses);
    rank.external_inputs_used = external.pick(&["r_plus", "r_minus"]);
    if rank.verdict == Verdict::Applies {
        let (rp, rm) = (external.r_plus.unwrap_or(0), external.r_minus.unwrap_or(0));
        let ord = rp.min(rm) - 1;
        rank.conclusions.push(Conclusion::new(
            "ord_kappa_infinity",
            format!("ord(κ∞) = min(r+, r-) - 1 = {ord}"),
        ));
        rank.consistency_checks.push(ClauseVerdict::from_bool(
            "ThmERank.nonnegative",
            "min(r+, r-) - 1 is a possible order (>= 0)",
            ord >= 0,
            json!({ "ord_kappa_infinity": ord }),
        ));
    }

    let mut parity = TheoremReport::assemble(
        TheoremId::Parity,
        vec![inherited_clause(main, "Parity.hypotheses")],
    );
    parity.external_inputs_used = external.pick(&["r_plus", "r_minus"]);
    if parity.verdict == Verdict::Applies {
        parity.conclusions = vec![
            Conclusion::new("selmer_dim_odd", "dim_{F_p} Sel_p(E/K) is odd"),
            Conclusion::new("selmer_corank_odd", "the Z_p-corank of Sel_{p^∞}(E/K) is odd"),
        ];
        if let (Some(rp), Some(rm)) = (external.r_plus, external.r_minus) {
            parity.consistency_checks.push(ClauseVerdict::from_bool(
                "Parity.supplied_coranks",
                "r+ + r- is odd",
                (rp + rm) % 2 == 1,
                json!({ "total_corank": rp + rm }),
            ));
        }
    }
    Ok((rank, parity))
}

/// All five reports in a fixed order.
pub fn evaluate_all(b: &InvariantBundle) -> Result<Vec<TheoremReport>> {
    let main = gate_thm_main(b)?;
    let eq = gate_thm_eq(b)?;
    let bsd = gate_bsd(b)?;
    let (rank, parity) = gate_rank_and_parity(&main, &b.external)?;
    Ok(vec![eq, bsd, main, rank, parity])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ec::KodairaType;
    use crate::galois::{derive_clubs, Irreducibility};
    use crate::padic::PadicNumber;

    fn mult(prime: i64, ord: u32, split: bool) -> LocalReductionData {
        LocalReductionData {
            prime: BigInt::from(prime),
            kodaira_type: KodairaType::I(ord),
            reduction_class: if split {
                ReductionClass::SplitMultiplicative
            } else {
                ReductionClass::NonsplitMultiplicative
            },
            tamagawa: if split { ord as u64 } else { 2 - (ord as u64 % 2) },
            ord_delta_min: ord,
            conductor_exponent: 1,
            scaling_valuation: 0,
            non_minimal_input: false,
        }
    }

    fn cert(ram: &[i64]) -> ResidualCertificate {
        let ram: Vec<BigInt> = ram.iter().map(|&l| BigInt::from(l)).collect();
        let irreducibility = Irreducibility {
            status: IrreducibilityStatus::CertifiedIrreducible,
            witness: Some(3),
            witness_trace: Some(0),
            examined: 1,
        };
        ResidualCertificate {
            clubs: derive_clubs(irreducibility.status, &ram, 5),
            irreducibility,
            ram_set: ram,
            finite_at_p: Some(false),
            heart4_automatic: true,
        }
    }

    fn field() -> QuadraticField {
        QuadraticField::new(&BigInt::from(19)).unwrap()
    }

    /// N = 5 * 7 * 13 * 29 and K = Q(sqrt(-19)): 5 and 7 split, 13 and 29
    /// are inert, 29 ≡ -1 mod 5. Every clause of the main gate holds.
    fn bundle() -> InvariantBundle {
        let field = field();
        for (ell, t) in [(5, SplittingType::Split), (7, SplittingType::Split), (13, SplittingType::Inert), (29, SplittingType::Inert)] {
            assert_eq!(field.splitting_type_u64(ell), t);
        }
        let q = PadicNumber::from_integer(&BigInt::from(30), 5, 20).unwrap();
        InvariantBundle {
            p: 5,
            field,
            conductor: BigInt::from(5 * 7 * 13 * 29),
            local: vec![mult(5, 1, true), mult(7, 1, true), mult(13, 5, false), mult(29, 1, false)],
            tate: Some(TatePeriodData::from_period(q, true).unwrap()),
            tate_error: None,
            certificate: cert(&[7, 29]),
            external: ExternalInputs::default(),
            spade3_exclude_p: false,
        }
    }

    #[test]
    fn spade_examples() {
        // N = 5 * 7 * 13, N+ = 35, N- = 13, Ram = {7}.
        let local = [mult(5, 1, true), mult(7, 1, true), mult(13, 5, false)];
        let seven = [BigInt::from(7)];
        let v = check_spade(&local, &field(), 5, &seven, false);
        assert!(v.iter().all(|c| c.status == Status::Holds), "{v:?}");
        let v = check_spade(&local, &field(), 5, &[], false);
        assert_eq!(v[2].status, Status::Fails);
        let v = check_spade(&local, &field(), 5, &seven, true);
        assert_eq!(v[2].status, Status::Fails);
        let h = check_heart(&local, &field(), 5, &seven, false);
        assert!(h.iter().all(|c| c.status == Status::Holds), "{h:?}");
    }

    #[test]
    fn spade_two_reports_offender() {
        let b = bundle();
        let v = check_spade(&b.local, &b.field, 5, &[BigInt::from(7)], false);
        assert_eq!(v[1].status, Status::Fails);
        assert_eq!(v[1].evidence["missing"][0]["prime"], json!(29));
        assert_eq!(v[1].evidence["missing"][0]["mod_p"], json!(4));
    }

    #[test]
    fn main_gate_applies() {
        let b = bundle();
        let r = gate_thm_main(&b).unwrap();
        assert_eq!(r.verdict, Verdict::Applies, "{:#?}", r.clauses);
        let ids: Vec<&str> = r.conclusions.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, ["kappa_nonzero", "kappa_infinity_nonzero", "m_infinity_zero"]);

        let mut b = bundle();
        b.local.pop();
        b.conductor = BigInt::from(5 * 7 * 13);
        b.certificate = cert(&[7]);
        let r = gate_thm_main(&b).unwrap();
        assert_eq!(r.clause("ThmEMain.d_parity").unwrap().status, Status::Fails);
        assert_eq!(r.verdict, Verdict::DoesNotApply);
        assert!(r.conclusions.is_empty());
    }

    #[test]
    fn split_with_large_log_fails() {
        let mut b = bundle();
        // log_5(1 + 25) has valuation 2.
        let q = PadicNumber::from_integer(&BigInt::from(5 * 26), 5, 20).unwrap();
        b.tate = Some(TatePeriodData::from_period(q, true).unwrap());
        let r = gate_thm_main(&b).unwrap();
        assert_eq!(r.clause("ThmEMain.c").unwrap().status, Status::Fails);
        assert_eq!(r.verdict, Verdict::DoesNotApply);
    }

    #[test]
    fn inconclusive_irreducibility_propagates() {
        let mut b = bundle();
        b.certificate.irreducibility.status = IrreducibilityStatus::Inconclusive;
        b.certificate.irreducibility.witness = None;
        let r = gate_thm_main(&b).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn bsd_tamagawa_and_consistency() {
        let mut local = vec![mult(5, 1, true), mult(7, 5, true), mult(11, 2, false)];
        assert_eq!(tamagawa_valuation(&local, 5), 1);
        local[0].tamagawa = 1;
        let mut b = bundle();
        b.external = ExternalInputs {
            analytic_rank: Some(1),
            lhs_valuation: Some(3),
            sha_valuation: Some(2),
            ..Default::default()
        };
        b.local = local;
        let r = gate_bsd(&b).unwrap();
        assert_eq!(r.consistency_checks[0].status, Status::Holds);
        b.external.analytic_rank = Some(0);
        assert_eq!(gate_bsd(&b).unwrap().verdict, Verdict::DoesNotApply);
    }

    #[test]
    fn thm_eq_needs_selmer() {
        let b = bundle();
        let r = gate_thm_eq(&b).unwrap();
        let f = r.clause("ThmEQ.f").unwrap();
        assert_eq!(f.status, Status::Inconclusive);
        assert_eq!(f.evidence["blocked_by"], json!("selmer_corank not supplied"));
    }

    #[test]
    fn thm_eq_clause_d() {
        // 11 ≡ 1 mod 5 with ord = 5.
        let mut b = bundle();
        b.local.push(mult(11, 5, true));
        let r = gate_thm_eq(&b).unwrap();
        assert_eq!(r.clause("ThmEQ.d").unwrap().status, Status::Fails);
    }

    #[test]
    fn rank_formula() {
        let main = gate_thm_main(&bundle()).unwrap();
        for ((rp, rm), ord) in [((2, 1), 0), ((3, 2), 1), ((1, 0), -1)] {
            let ext = ExternalInputs { r_plus: Some(rp), r_minus: Some(rm), ..Default::default() };
            let (rank, parity) = gate_rank_and_parity(&main, &ext).unwrap();
            assert!(rank.conclusions[0].text.ends_with(&format!("= {ord}")));
            assert_eq!(rank.consistency_checks[0].status == Status::Holds, ord >= 0);
            assert_eq!(parity.consistency_checks[0].status, Status::Holds);
        }
        let ext = ExternalInputs { r_plus: Some(-1), r_minus: Some(0), ..Default::default() };
        assert_eq!(gate_rank_and_parity(&main, &ext), Err(Error::NegativeCorank));
    }

    #[test]
    fn coprimality_is_enforced() {
        let mut b = bundle();
        b.conductor = BigInt::from(5 * 7 * 13 * 29 * 19);
        assert!(matches!(gate_thm_main(&b), Err(Error::DiscNotCoprime { .. })));
    }
}
