//! p-adic Tate period of a curve with multiplicative reduction at p.
//!
//! The period q is the root in pZ_p of `j(q) = j(E)`, where
//! `j(q) = 1/q + 744 + 196884 q + ...`. Writing `j(q) = F(q)/q` with
//! `F = E4^3 / Π(1 - q^n)^24`, the equation becomes `q - t F(q) = 0` with
//! `t = 1/j(E) = Δ / c4^3`, whose derivative `1 - t F'(q)` is a unit, so
//! Newton's method from `q = t` converges quadratically.

use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{is_prime_u64, mod_inverse};
use crate::ec::{local_minimal_model, tate_algorithm, ReductionClass, WeierstrassCurve};
use crate::error::{Error, Result};
use crate::padic::{ExtInt, PadicNumber};

pub const DEFAULT_PRECISION: i64 = 20;

/// Tate period at p and the quantities read off it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TatePeriodData {
    pub prime: u64,
    /// `ord_p(q) = ord_p(Δ_min) = -ord_p(j)`.
    pub ord_q: u32,
    pub q: PadicNumber,
    pub log_q: PadicNumber,
    /// `log_p(q) / ord_p(q)`.
    pub l_invariant: PadicNumber,
    /// `p ∤ ord_p(q)`.
    pub not_finite_at_p: bool,
    /// `ord_p(log_p q) = 1`.
    pub hyp_l_holds: bool,
    pub split: bool,
}

impl TatePeriodData {
    /// Assemble the derived fields from a given period. `q` must have
    /// positive valuation.
    pub fn from_period(q: PadicNumber, split: bool) -> Result<Self> {
        let ord_q = match q.valuation() {
            ExtInt::Finite(v) if v >= 1 => v as u32,
            _ => {
                return Err(Error::InvalidInput(format!(
                    "Tate period must have positive valuation, got {}",
                    q.valuation()
                )))
            }
        };
        let log_q = q.log_iwasawa()?;
        let l_inv = l_invariant(&log_q, ord_q)?;
        let hyp_l_holds = log_q.valuation() == ExtInt::Finite(1);
        Ok(TatePeriodData {
            prime: q.prime(),
            ord_q,
            not_finite_at_p: !(ord_q as u64).is_multiple_of(q.prime()),
            hyp_l_holds,
            split,
            l_invariant: l_inv,
            log_q,
            q,
        })
    }

    pub fn finite_at_p(&self) -> bool {
        !self.not_finite_at_p
    }
}

/// `log_q / ord_q`, refusing to answer when `log_q` is zero at its precision.
pub fn l_invariant(log_q: &PadicNumber, ord_q: u32) -> Result<PadicNumber> {
    if log_q.is_zero() {
        return Err(Error::PrecisionExhausted {
            what: "log_p(q)",
            precision: log_q.abs_precision(),
        });
    }
    log_q.div_integer(&BigInt::from(ord_q))
}

/// Tate period of `curve` at `p`, with j(q) agreeing with j(E) to
/// valuation at least `precision`.
pub fn compute_tate_period(curve: &WeierstrassCurve, p: u64, precision: i64) -> Result<TatePeriodData> {
    if !is_prime_u64(p) {
        return Err(Error::NotPrime(BigInt::from(p)));
    }
    if precision < 1 {
        return Err(Error::BadPrecision(precision));
    }
    let bp = BigInt::from(p);
    let (model, _) = local_minimal_model(curve, &bp)?;
    let local = tate_algorithm(&model, &bp)?;
    if !local.reduction_class.is_multiplicative() {
        return Err(Error::NotMultiplicative {
            prime: p,
            found: local.reduction_class.to_string(),
        });
    }
    let n = local.ord_delta_min as i64;
    // An error of p^W in q moves j(q) by p^(W - 2n).
    let work = precision + 2 * n;
    let modulus = num_traits::pow(bp.clone(), work as usize);
    let c4_cubed = model.c4().pow(3);
    let inv = mod_inverse(&c4_cubed, &modulus).expect("c4 is a unit at multiplicative p");
    let t = (model.discriminant() * inv).mod_floor(&modulus);

    let terms = (work as usize).div_ceil(n as usize) + 2;
    let coeffs = j_coefficients(terms);
    let coeffs: Vec<BigInt> = coeffs[..terms].iter().map(|c| c.mod_floor(&modulus)).collect();

    let mut q = t.clone();
    let mut converged = false;
    for _ in 0..(2 * work + 8) {
        let (f, df) = eval_with_derivative(&coeffs, &q, &modulus);
        let phi = (&q - &t * f).mod_floor(&modulus);
        if phi.is_zero() {
            converged = true;
            break;
        }
        let dphi = (BigInt::one() - &t * df).mod_floor(&modulus);
        let dinv = mod_inverse(&dphi, &modulus).expect("derivative is a unit");
        q = (&q - phi * dinv).mod_floor(&modulus);
    }
    if !converged {
        return Err(Error::PrecisionExhausted {
            what: "Tate period",
            precision,
        });
    }
    let q = PadicNumber::from_integer(&q, p, work)?;
    debug_assert_eq!(q.valuation(), ExtInt::Finite(n));
    TatePeriodData::from_period(q, local.reduction_class == ReductionClass::SplitMultiplicative)
}

/// `F(q)` and `F'(q)` modulo `modulus` by Horner's rule.
fn eval_with_derivative(coeffs: &[BigInt], q: &BigInt, modulus: &BigInt) -> (BigInt, BigInt) {
    let mut f = BigInt::zero();
    let mut df = BigInt::zero();
    for c in coeffs.iter().rev() {
        df = (df * q + &f).mod_floor(modulus);
        f = (f * q + c).mod_floor(modulus);
    }
    (f, df)
}

fn j_table() -> &'static RwLock<Arc<Vec<BigInt>>> {
    static TABLE: OnceLock<RwLock<Arc<Vec<BigInt>>>> = OnceLock::new();
    TABLE.get_or_init(|| RwLock::new(Arc::new(q_times_j(64))))
}

/// At least `count` coefficients of `q j(q) = 1 + 744 q + 196884 q^2 + ...`.
///
/// Shared process-wide; the table is extended (doubling) when a longer
/// prefix is requested.
pub fn j_coefficients(count: usize) -> Arc<Vec<BigInt>> {
    {
        let table = j_table().read().expect("j table poisoned");
        if table.len() >= count {
            return Arc::clone(&table);
        }
    }
    let mut table = j_table().write().expect("j table poisoned");
    if table.len() < count {
        let len = count.max(2 * table.len());
        *table = Arc::new(q_times_j(len));
    }
    Arc::clone(&table)
}

/// First `len` coefficients of `E4^3 / Π(1 - q^n)^24`.
fn q_times_j(len: usize) -> Vec<BigInt> {
    let mut e4 = vec![BigInt::zero(); len];
    e4[0] = BigInt::one();
    for n in 1..len {
        let sigma3: u128 = (1..=n as u128).filter(|d| (n as u128).is_multiple_of(*d)).map(|d| d * d * d).sum();
        e4[n] = BigInt::from(240u32) * BigInt::from(sigma3);
    }
    let e4_cubed = series_mul(&series_mul(&e4, &e4, len), &e4, len);

    // Euler's pentagonal number theorem for Π(1 - q^n).
    let mut eta = vec![BigInt::zero(); len];
    for k in 0i64.. {
        let g1 = (k * (3 * k - 1) / 2) as usize;
        if g1 >= len {
            break;
        }
        let sign = if k % 2 == 0 { 1 } else { -1 };
        eta[g1] += sign;
        if k > 0 {
            let g2 = (k * (3 * k + 1) / 2) as usize;
            if g2 < len {
                eta[g2] += sign;
            }
        }
    }
    let eta2 = series_mul(&eta, &eta, len);
    let eta4 = series_mul(&eta2, &eta2, len);
    let eta8 = series_mul(&eta4, &eta4, len);
    let eta16 = series_mul(&eta8, &eta8, len);
    let eta24 = series_mul(&eta16, &eta8, len);

    // eta24 has constant term 1, so the quotient stays integral.
    let mut out: Vec<BigInt> = Vec::with_capacity(len);
    for k in 0..len {
        let mut acc = e4_cubed[k].clone();
        for i in 1..=k {
            acc -= &eta24[i] * &out[k - i];
        }
        out.push(acc);
    }
    out
}

fn series_mul(a: &[BigInt], b: &[BigInt], len: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); len];
    for (i, x) in a.iter().enumerate().take(len) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}
