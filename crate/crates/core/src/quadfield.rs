//! Imaginary quadratic fields given by their discriminant, prime splitting,
//! and the split/inert factorization of a conductor.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{factor, kronecker, mod_u64};
use crate::error::{Error, Result};

/// Imaginary quadratic field of fundamental discriminant `-D`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawField", into = "RawField")]
pub struct QuadraticField {
    disc: BigInt,
}

#[derive(Serialize, Deserialize)]
struct RawField {
    #[serde(with = "crate::bigint_serde")]
    disc: BigInt,
}

impl TryFrom<RawField> for QuadraticField {
    type Error = Error;
    fn try_from(raw: RawField) -> Result<Self> {
        QuadraticField::from_discriminant(&raw.disc)
    }
}

impl From<QuadraticField> for RawField {
    fn from(k: QuadraticField) -> Self {
        RawField { disc: k.disc }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SplittingType {
    Split,
    Inert,
    Ramified,
}

impl fmt::Display for SplittingType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplittingType::Split => "split",
            SplittingType::Inert => "inert",
            SplittingType::Ramified => "ramified",
        })
    }
}

fn is_squarefree(n: &BigInt) -> Result<bool> {
    Ok(factor(n)?.iter().all(|&(_, e)| e == 1))
}

impl QuadraticField {
    /// The field of discriminant `-d`, for `d > 0`.
    pub fn new(d: &BigInt) -> Result<Self> {
        Self::from_discriminant(&-d)
    }

    /// Accepts a negative fundamental discriminant; anything else is rejected
    /// rather than reduced to its fundamental part.
    pub fn from_discriminant(disc: &BigInt) -> Result<Self> {
        let bad = || Error::NotFundamental(disc.clone());
        if !disc.is_negative() {
            return Err(bad());
        }
        let d = -disc;
        let ok = match mod_u64(disc, 4) {
            0 => matches!(mod_u64(&(disc / 4), 4), 2 | 3) && is_squarefree(&(&d / 4))?,
            1 => !d.is_one() && is_squarefree(&d)?,
            _ => false,
        };
        if ok {
            Ok(QuadraticField { disc: disc.clone() })
        } else {
            Err(bad())
        }
    }

    /// The (negative) discriminant `-D`.
    pub fn disc(&self) -> &BigInt {
        &self.disc
    }

    /// `D = -disc`.
    pub fn d(&self) -> BigInt {
        -&self.disc
    }

    /// Ramified iff ℓ divides the discriminant; otherwise the Kronecker
    /// symbol `(disc / ℓ)` decides (at ℓ = 2 this reads disc mod 8).
    pub fn splitting_type(&self, ell: &BigInt) -> SplittingType {
        match kronecker(&self.disc, ell) {
            0 => SplittingType::Ramified,
            1 => SplittingType::Split,
            _ => SplittingType::Inert,
        }
    }

    pub fn splitting_type_u64(&self, ell: u64) -> SplittingType {
        self.splitting_type(&BigInt::from(ell))
    }
}

impl fmt::Display for QuadraticField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q(sqrt({}))", self.disc)
    }
}

/// `N = n_plus * n_minus` with every prime of `n_plus` split and `n_minus` a
/// squarefree product of inert primes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermissibleFactorization {
    #[serde(with = "crate::bigint_serde")]
    pub n_plus: BigInt,
    #[serde(with = "crate::bigint_serde")]
    pub n_minus: BigInt,
    /// Number of prime factors of `n_minus`.
    pub nu_minus: u32,
    /// Primes of `n_plus` with exponents, ascending.
    pub plus_factors: Vec<PrimePower>,
    /// Primes of `n_minus`, ascending.
    #[serde(with = "crate::bigint_serde::vec")]
    pub minus_primes: Vec<BigInt>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimePower {
    #[serde(with = "crate::bigint_serde")]
    pub prime: BigInt,
    pub exponent: u32,
}

impl PermissibleFactorization {
    /// Primes ℓ with ℓ || n_plus.
    pub fn plus_exact_primes(&self) -> impl Iterator<Item = &BigInt> {
        self.plus_factors
            .iter()
            .filter(|pp| pp.exponent == 1)
            .map(|pp| &pp.prime)
    }
}

/// The permissible factorization of `n` relative to `k`, or `None` when an
/// inert prime divides `n` more than once or a prime of `n` ramifies.
pub fn permissible_factorization(
    n: &BigInt,
    k: &QuadraticField,
) -> Result<Option<PermissibleFactorization>> {
    if !n.is_positive() {
        return Err(Error::InvalidInput(format!("conductor must be positive, got {n}")));
    }
    let g = n.gcd(&k.d());
    if !g.is_one() {
        return Err(Error::DiscNotCoprime { gcd: g });
    }
    Ok(from_factored(&factor(n)?, k))
}

/// Same as [`permissible_factorization`] for an already factored `N`
/// (coprimality with D is the caller's responsibility).
pub fn from_factored(factors: &[(BigInt, u32)], k: &QuadraticField) -> Option<PermissibleFactorization> {
    let mut factors = factors.to_vec();
    factors.sort();
    let mut out = PermissibleFactorization {
        n_plus: BigInt::one(),
        n_minus: BigInt::one(),
        nu_minus: 0,
        plus_factors: Vec::new(),
        minus_primes: Vec::new(),
    };
    for (ell, e) in factors {
        if e == 0 {
            continue;
        }
        match k.splitting_type(&ell) {
            SplittingType::Split => {
                out.n_plus *= num_traits::pow(ell.clone(), e as usize);
                out.plus_factors.push(PrimePower { prime: ell, exponent: e });
            }
            SplittingType::Inert if e == 1 => {
                out.n_minus *= &ell;
                out.nu_minus += 1;
                out.minus_primes.push(ell);
            }
            _ => return None,
        }
    }
    debug_assert!(!out.n_plus.is_zero());
    Some(out)
}
