//! Kolyvagin primes with their indices, admissible primes, and the squarefree
//! products built from them.

use itertools::Itertools;
use num_bigint::BigInt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{mod_u64, primes_up_to};
use crate::ec::TraceCache;
use crate::error::{Error, Result};
use crate::padic::{padic_valuation_of_integer, ExtInt};
use crate::quadfield::{QuadraticField, SplittingType};

pub const DEFAULT_SIEVE_BOUND: u64 = 10_000;

/// Number of primes of each family listed in a [`SieveSummary`].
pub const SUMMARY_PREFIX: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KolyvaginPrime {
    pub ell: u64,
    pub a_ell: i64,
    pub index: ExtInt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissiblePrime {
    pub q: u64,
    pub a_q: i64,
}

/// Sign `(-1)^ν(m)` of a squarefree product of admissible primes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParityClass {
    Plus,
    Minus,
}

/// `min(ord_p(ℓ + 1), ord_p(a))`, with `ord_p(0) = +inf`.
pub fn kolyvagin_index(ell: u64, a_ell: i64, p: u64) -> ExtInt {
    let first = padic_valuation_of_integer(&(BigInt::from(ell) + 1), p);
    let second = padic_valuation_of_integer(&BigInt::from(a_ell), p);
    first.min(second)
}

/// Everything the sieves need to know about one (E, p, K).
pub struct SieveContext<'a> {
    pub traces: &'a TraceCache,
    pub conductor: &'a BigInt,
    pub field: &'a QuadraticField,
    pub p: u64,
}

impl SieveContext<'_> {
    /// ℓ ∤ N D p and ℓ inert in K (inert already excludes ℓ | D).
    fn inert_and_coprime(&self, ell: u64) -> bool {
        ell != self.p
            && mod_u64(self.conductor, ell) != 0
            && self.field.splitting_type_u64(ell) == SplittingType::Inert
    }
}

/// All Kolyvagin primes up to `bound`, ascending.
pub fn sieve_kolyvagin(ctx: &SieveContext, bound: u64) -> Result<Vec<KolyvaginPrime>> {
    let p = ctx.p;
    let candidates: Vec<u64> = primes_up_to(bound)
        .into_iter()
        .filter(|&ell| ctx.inert_and_coprime(ell) && (ell + 1) % p == 0)
        .collect();
    let found = candidates
        .par_iter()
        .map(|&ell| {
            let a = ctx.traces.trace(ell)?;
            let index = kolyvagin_index(ell, a, p);
            Ok((index >= ExtInt::Finite(1)).then_some(KolyvaginPrime { ell, a_ell: a, index }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(found.into_iter().flatten().collect())
}

/// All admissible primes up to `bound`, ascending.
pub fn sieve_admissible(ctx: &SieveContext, bound: u64) -> Result<Vec<AdmissiblePrime>> {
    let p = ctx.p;
    let candidates: Vec<u64> = primes_up_to(bound)
        .into_iter()
        .filter(|&q| {
            let r = q % p;
            ctx.inert_and_coprime(q) && r != 1 && r != p - 1
        })
        .collect();
    let found = candidates
        .par_iter()
        .map(|&q| {
            let a = ctx.traces.trace(q)?;
            let q1 = BigInt::from(q) + 1;
            let a = BigInt::from(a);
            let admissible = mod_u64(&(&q1 * &q1 - &a * &a), p) == 0;
            Ok(admissible.then(|| AdmissiblePrime {
                q,
                a_q: i64::try_from(&a).expect("trace fits i64"),
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(found.into_iter().flatten().collect())
}

/// `M(n) = min M(ℓ)` over the primes of a squarefree `n`; `+inf` for `n = 1`.
pub fn index_of_product(primes: &[KolyvaginPrime]) -> Result<ExtInt> {
    let mut seen: Vec<u64> = primes.iter().map(|k| k.ell).collect();
    seen.sort_unstable();
    if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::RepeatedPrime(w[0]));
    }
    Ok(primes.iter().map(|k| k.index).min().unwrap_or(ExtInt::Infinity))
}

pub fn parity_class(m: &[AdmissiblePrime]) -> ParityClass {
    parity_of(m.len())
}

fn parity_of(nu: usize) -> ParityClass {
    if nu.is_multiple_of(2) {
        ParityClass::Plus
    } else {
        ParityClass::Minus
    }
}

/// Squarefree products of the given primes, by increasing number of factors
/// (starting with the empty product), stopping after `cap` products.
pub fn squarefree_products<T>(primes: &[T], cap: usize) -> impl Iterator<Item = Vec<&T>> {
    (0..=primes.len())
        .flat_map(move |k| primes.iter().combinations(k))
        .take(cap)
}

/// Squarefree products of admissible primes tagged with their class in Λ′±.
pub fn classify_admissible_products(
    primes: &[AdmissiblePrime],
    cap: usize,
) -> impl Iterator<Item = (Vec<u64>, ParityClass)> + '_ {
    squarefree_products(primes, cap).map(|m| (m.iter().map(|a| a.q).collect(), parity_of(m.len())))
}

/// Counts and leading entries of both prime families.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SieveSummary {
    pub bound: u64,
    pub kolyvagin_count: usize,
    pub admissible_count: usize,
    pub kolyvagin_first: Vec<KolyvaginPrime>,
    pub admissible_first: Vec<AdmissiblePrime>,
}

impl SieveSummary {
    pub fn new(bound: u64, kolyvagin: &[KolyvaginPrime], admissible: &[AdmissiblePrime]) -> Self {
        SieveSummary {
            bound,
            kolyvagin_count: kolyvagin.len(),
            admissible_count: admissible.len(),
            kolyvagin_first: kolyvagin.iter().take(SUMMARY_PREFIX).copied().collect(),
            admissible_first: admissible.iter().take(SUMMARY_PREFIX).copied().collect(),
        }
    }
}
