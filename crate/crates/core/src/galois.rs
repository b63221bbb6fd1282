//! Predicates on the mod-p representation read off local data: an
//! irreducibility certificate from Frobenius traces, the ramification set at
//! primes of multiplicative reduction, finiteness at p, and large image.

use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::arith::{legendre_u64, mod_u64, primes_up_to};
use crate::ec::{LocalReductionData, TraceCache};
use crate::error::Result;
use crate::tate_period::TatePeriodData;

pub const DEFAULT_WITNESS_BOUND: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IrreducibilityStatus {
    CertifiedIrreducible,
    CertifiedReducible,
    Inconclusive,
}

impl fmt::Display for IrreducibilityStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IrreducibilityStatus::CertifiedIrreducible => "certified irreducible",
            IrreducibilityStatus::CertifiedReducible => "certified reducible",
            IrreducibilityStatus::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImageVerdict {
    Certified,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Irreducibility {
    pub status: IrreducibilityStatus,
    /// Good prime ℓ whose Frobenius polynomial has no root mod p.
    pub witness: Option<u64>,
    /// `a(ℓ)` at the witness.
    pub witness_trace: Option<i64>,
    /// Good primes examined.
    pub examined: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClubsVerdict {
    pub status: ImageVerdict,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidualCertificate {
    pub irreducibility: Irreducibility,
    /// Primes ℓ ≠ p with ℓ || N and p ∤ ord_ℓ(Δ_min).
    #[serde(with = "crate::bigint_serde::vec")]
    pub ram_set: Vec<BigInt>,
    /// `None` unless the reduction at p is multiplicative.
    pub finite_at_p: Option<bool>,
    pub clubs: ClubsVerdict,
    /// Local vanishing at primes ℓ with ℓ^2 | N⁺, automatic for elliptic curves with p >= 5.
    pub heart4_automatic: bool,
}

/// Scan the first `witness_bound` primes ℓ ≠ p of good reduction for one with
/// `a(ℓ)^2 - 4ℓ` a nonresidue mod p. Such an ℓ makes `x^2 - a(ℓ)x + ℓ`
/// irreducible over F_p, so Frob_ℓ fixes no line. A known rational p-isogeny
/// (supplied by the caller) certifies reducibility instead.
pub fn irreducibility_witness(
    traces: &TraceCache,
    conductor: &BigInt,
    p: u64,
    witness_bound: usize,
    rational_p_isogeny: Option<bool>,
) -> Result<Irreducibility> {
    if rational_p_isogeny == Some(true) {
        return Ok(Irreducibility {
            status: IrreducibilityStatus::CertifiedReducible,
            witness: None,
            witness_trace: None,
            examined: 0,
        });
    }
    let mut examined = 0;
    let mut limit = 2048u64;
    let mut start = 0u64;
    while examined < witness_bound {
        for ell in primes_up_to(limit).into_iter().filter(|&l| l > start) {
            if examined == witness_bound {
                break;
            }
            if ell == p || mod_u64(conductor, ell) == 0 {
                continue;
            }
            examined += 1;
            let a = traces.trace(ell)?;
            if witnesses_irreducibility(a, ell, p) {
                return Ok(Irreducibility {
                    status: IrreducibilityStatus::CertifiedIrreducible,
                    witness: Some(ell),
                    witness_trace: Some(a),
                    examined,
                });
            }
        }
        start = limit;
        limit *= 2;
    }
    Ok(Irreducibility {
        status: IrreducibilityStatus::Inconclusive,
        witness: None,
        witness_trace: None,
        examined,
    })
}

/// `a^2 - 4ℓ` is a quadratic nonresidue mod p.
pub fn witnesses_irreducibility(a: i64, ell: u64, p: u64) -> bool {
    let p_i = p as i128;
    let disc = ((a as i128 * a as i128 - 4 * ell as i128) % p_i + p_i) % p_i;
    legendre_u64(disc as i64, p) == -1
}

/// ℓ ≠ p with ℓ || N and p ∤ ord_ℓ(Δ_min), ascending.
pub fn ramification_set(local: &[LocalReductionData], p: u64) -> Vec<BigInt> {
    let bp = BigInt::from(p);
    let mut out: Vec<BigInt> = local
        .iter()
        .filter(|d| d.conductor_exponent == 1 && d.prime != bp && !(d.ord_delta_min as u64).is_multiple_of(p))
        .map(|d| d.prime.clone())
        .collect();
    out.sort();
    out
}

/// `p | ord_p(q)`.
pub fn finite_at_p(data: &TatePeriodData) -> bool {
    data.finite_at_p()
}

/// Large image from an irreducibility certificate and a ramified prime of
/// multiplicative reduction: the inertia there contributes a transvection, so
/// the image contains SL_2(F_p) once it is irreducible and p >= 5.
pub fn derive_clubs(status: IrreducibilityStatus, ram_set: &[BigInt], p: u64) -> ClubsVerdict {
    let missing: Vec<&str> = [
        (status != IrreducibilityStatus::CertifiedIrreducible, "irreducibility not certified"),
        (ram_set.is_empty(), "no ramified prime of multiplicative reduction"),
        (p < 5, "p < 5"),
    ]
    .into_iter()
    .filter_map(|(bad, why)| bad.then_some(why))
    .collect();
    if missing.is_empty() {
        ClubsVerdict {
            status: ImageVerdict::Certified,
            note: format!(
                "irreducible with transvection from inertia at {}; image contains SL_2(F_{p})",
                ram_set[0]
            ),
        }
    } else {
        ClubsVerdict {
            status: ImageVerdict::Inconclusive,
            note: missing.join("; "),
        }
    }
}

pub fn residual_certificate(
    irreducibility: Irreducibility,
    local: &[LocalReductionData],
    tate: Option<&TatePeriodData>,
    p: u64,
) -> ResidualCertificate {
    let ram_set = ramification_set(local, p);
    let clubs = derive_clubs(irreducibility.status, &ram_set, p);
    ResidualCertificate {
        irreducibility,
        ram_set,
        finite_at_p: tate.map(finite_at_p),
        clubs,
        heart4_automatic: p >= 5,
    }
}
