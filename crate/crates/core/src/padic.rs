//! Capped-precision p-adic numbers and the Iwasawa logarithm.
//!
//! A [`PadicNumber`] is `p^v * u + O(p^N)` with `u` a unit known modulo
//! `p^(N - v)`. The unit is kept as little-endian base-p digits and every
//! constructor goes through a single normalizer, so the representation is
//! canonical: equal values at equal precision compare equal.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::arith::{is_prime_u64, mod_inverse};
use crate::error::{Error, Result};

/// An integer or `+inf`. Used for valuations and Kolyvagin indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExtInt {
    Finite(i64),
    Infinity,
}

impl ExtInt {
    pub fn finite(self) -> Option<i64> {
        match self {
            ExtInt::Finite(v) => Some(v),
            ExtInt::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        self == ExtInt::Infinity
    }
}

impl PartialOrd for ExtInt {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtInt {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtInt::Finite(a), ExtInt::Finite(b)) => a.cmp(b),
            (ExtInt::Finite(_), ExtInt::Infinity) => Ordering::Less,
            (ExtInt::Infinity, ExtInt::Finite(_)) => Ordering::Greater,
            (ExtInt::Infinity, ExtInt::Infinity) => Ordering::Equal,
        }
    }
}

impl From<i64> for ExtInt {
    fn from(v: i64) -> Self {
        ExtInt::Finite(v)
    }
}

impl fmt::Display for ExtInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtInt::Finite(v) => write!(f, "{v}"),
            ExtInt::Infinity => f.write_str("+inf"),
        }
    }
}

impl Serialize for ExtInt {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtInt::Finite(v) => s.serialize_i64(*v),
            ExtInt::Infinity => s.serialize_str("+inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtInt {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct ExtVisitor;
        impl Visitor<'_> for ExtVisitor {
            type Value = ExtInt;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an integer or \"+inf\"")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ExtInt, E> {
                Ok(ExtInt::Finite(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ExtInt, E> {
                i64::try_from(v).map(ExtInt::Finite).map_err(E::custom)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ExtInt, E> {
                match v {
                    "+inf" | "inf" => Ok(ExtInt::Infinity),
                    other => other.parse().map(ExtInt::Finite).map_err(E::custom),
                }
            }
        }
        d.deserialize_any(ExtVisitor)
    }
}

/// Exact p-adic valuation of an integer, `+inf` for zero.
pub fn padic_valuation_of_integer(n: &BigInt, p: u64) -> ExtInt {
    match crate::arith::valuation_u64(n, p) {
        Some(v) => ExtInt::Finite(v as i64),
        None => ExtInt::Infinity,
    }
}

fn pow(p: u64, k: i64) -> BigInt {
    debug_assert!(k >= 0);
    num_traits::pow(BigInt::from(p), k as usize)
}

/// Capped-precision element of Q_p.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPadic")]
pub struct PadicNumber {
    prime: u64,
    valuation: ExtInt,
    unit_digits: Vec<u64>,
    abs_precision: i64,
}

#[derive(Deserialize)]
struct RawPadic {
    prime: u64,
    valuation: ExtInt,
    unit_digits: Vec<u64>,
    abs_precision: i64,
}

impl TryFrom<RawPadic> for PadicNumber {
    type Error = String;

    fn try_from(raw: RawPadic) -> std::result::Result<Self, String> {
        if !is_prime_u64(raw.prime) {
            return Err(format!("{} is not prime", raw.prime));
        }
        if raw.unit_digits.iter().any(|&d| d >= raw.prime) {
            return Err("digit out of range".into());
        }
        match raw.valuation {
            ExtInt::Infinity if raw.unit_digits.is_empty() => {}
            ExtInt::Finite(v)
                if raw.unit_digits.first().is_some_and(|&d| d != 0)
                    && raw.unit_digits.len() as i64 == raw.abs_precision - v => {}
            _ => return Err("non-canonical p-adic representation".into()),
        }
        Ok(PadicNumber {
            prime: raw.prime,
            valuation: raw.valuation,
            unit_digits: raw.unit_digits,
            abs_precision: raw.abs_precision,
        })
    }
}

impl PadicNumber {
    /// The value 0 known modulo `p^abs_precision`.
    pub fn zero(prime: u64, abs_precision: i64) -> Self {
        PadicNumber {
            prime,
            valuation: ExtInt::Infinity,
            unit_digits: Vec::new(),
            abs_precision,
        }
    }

    /// `num / den` to absolute precision `p^abs_precision`.
    pub fn from_rational(num: &BigInt, den: &BigInt, p: u64, abs_precision: i64) -> Result<Self> {
        if !is_prime_u64(p) {
            return Err(Error::NotPrime(BigInt::from(p)));
        }
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if abs_precision < 1 {
            return Err(Error::BadPrecision(abs_precision));
        }
        if num.is_zero() {
            return Ok(Self::zero(p, abs_precision));
        }
        let (vn, un) = split_p(num, p);
        let (vd, ud) = split_p(den, p);
        let v = vn - vd;
        if abs_precision <= v {
            return Ok(Self::zero(p, abs_precision));
        }
        let modulus = pow(p, abs_precision - v);
        let inv = mod_inverse(&ud, &modulus).expect("p-free denominator is invertible");
        Ok(Self::normalize(p, v, un * inv, abs_precision))
    }

    pub fn from_integer(n: &BigInt, p: u64, abs_precision: i64) -> Result<Self> {
        Self::from_rational(n, &BigInt::one(), p, abs_precision)
    }

    /// Canonical form of `p^v * unit + O(p^abs_precision)`; `unit` may carry
    /// further factors of p, which are absorbed into the valuation.
    pub(crate) fn normalize(p: u64, v: i64, unit: BigInt, abs_precision: i64) -> Self {
        if abs_precision <= v {
            return Self::zero(p, abs_precision);
        }
        let bp = BigInt::from(p);
        let mut u = unit.mod_floor(&pow(p, abs_precision - v));
        if u.is_zero() {
            return Self::zero(p, abs_precision);
        }
        let mut v = v;
        loop {
            let (q, r) = u.div_rem(&bp);
            if !r.is_zero() {
                break;
            }
            u = q;
            v += 1;
        }
        let rel = abs_precision - v;
        let u = u.mod_floor(&pow(p, rel));
        let mut digits = Vec::with_capacity(rel as usize);
        let mut rest = u;
        for _ in 0..rel {
            let (q, r) = rest.div_rem(&bp);
            digits.push(r.to_u64().expect("digit < p"));
            rest = q;
        }
        PadicNumber {
            prime: p,
            valuation: ExtInt::Finite(v),
            unit_digits: digits,
            abs_precision,
        }
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn valuation(&self) -> ExtInt {
        self.valuation
    }

    pub fn abs_precision(&self) -> i64 {
        self.abs_precision
    }

    pub fn unit_digits(&self) -> &[u64] {
        &self.unit_digits
    }

    pub fn is_zero(&self) -> bool {
        self.valuation.is_infinite()
    }

    /// Number of known unit digits, `None` for zero.
    pub fn relative_precision(&self) -> Option<i64> {
        self.valuation.finite().map(|v| self.abs_precision - v)
    }

    /// The unit part as an integer in `[0, p^(N - v))`.
    pub fn unit(&self) -> BigInt {
        let bp = BigInt::from(self.prime);
        self.unit_digits
            .iter()
            .rev()
            .fold(BigInt::zero(), |acc, &d| acc * &bp + BigInt::from(d))
    }

    /// Representative of an integral value in `[0, p^N)`.
    pub fn residue(&self) -> Option<BigInt> {
        match self.valuation {
            ExtInt::Infinity => Some(BigInt::zero()),
            ExtInt::Finite(v) if v >= 0 => Some(self.unit() * pow(self.prime, v)),
            ExtInt::Finite(_) => None,
        }
    }

    /// Drop precision to `abs_precision` (no-op if already lower).
    pub fn with_precision(&self, abs_precision: i64) -> Self {
        let n = abs_precision.min(self.abs_precision);
        match self.valuation {
            ExtInt::Infinity => Self::zero(self.prime, n),
            ExtInt::Finite(v) => Self::normalize(self.prime, v, self.unit(), n),
        }
    }

    fn check_prime(&self, other: &Self) {
        assert_eq!(
            self.prime, other.prime,
            "p-adic operands over different primes"
        );
    }

    /// Quotient; errors when the divisor is zero at its precision.
    pub fn div(&self, other: &Self) -> Result<Self> {
        if self.prime != other.prime {
            return Err(Error::PrimeMismatch(self.prime, other.prime));
        }
        let (v2, r2) = match (other.valuation, other.relative_precision()) {
            (ExtInt::Finite(v), Some(r)) => (v, r),
            _ => return Err(Error::DivisionByZero),
        };
        let ExtInt::Finite(v1) = self.valuation else {
            return Ok(Self::zero(self.prime, self.abs_precision - v2));
        };
        let r = (self.abs_precision - v1).min(r2);
        let modulus = pow(self.prime, r);
        let inv = mod_inverse(&other.unit(), &modulus).expect("unit is invertible");
        Ok(Self::normalize(self.prime, v1 - v2, self.unit() * inv, v1 - v2 + r))
    }

    /// Division by an exact nonzero integer.
    pub fn div_integer(&self, n: &BigInt) -> Result<Self> {
        if n.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let (a, m) = split_p(n, self.prime);
        match self.valuation {
            ExtInt::Infinity => Ok(Self::zero(self.prime, self.abs_precision - a)),
            ExtInt::Finite(v) => {
                let r = self.abs_precision - v;
                let inv = mod_inverse(&m, &pow(self.prime, r)).expect("p-free integer");
                Ok(Self::normalize(
                    self.prime,
                    v - a,
                    self.unit() * inv,
                    self.abs_precision - a,
                ))
            }
        }
    }

    /// Teichmüller representative of a unit: the (p-1)-th root of unity
    /// congruent to it mod p, found as the fixed point of `x -> x^p`.
    pub fn teichmuller(&self) -> Result<Self> {
        match self.valuation {
            ExtInt::Finite(0) => {}
            _ => return Err(Error::InvalidInput("Teichmüller lift of a non-unit".into())),
        }
        let n = self.abs_precision;
        let modulus = pow(self.prime, n);
        let bp = BigInt::from(self.prime);
        let mut y = self.unit();
        // Each step fixes one more digit, so n steps suffice.
        for _ in 0..=n {
            let next = y.modpow(&bp, &modulus);
            if next == y {
                break;
            }
            y = next;
        }
        Ok(Self::normalize(self.prime, 0, y, n))
    }

    /// Iwasawa branch of the p-adic logarithm (`log_p p = 0`).
    ///
    /// Writes `x = p^v * ω * <x>` and sums the series for `log <x>`. The
    /// result is known modulo `p^(N - v)`, the relative precision of `x`.
    pub fn log_iwasawa(&self) -> Result<Self> {
        let ExtInt::Finite(v) = self.valuation else {
            return Err(Error::LogOfZero);
        };
        let p = self.prime;
        let r = self.abs_precision - v;
        let unit = Self::normalize(p, 0, self.unit(), r);
        let omega = unit.teichmuller()?;
        let modulus = pow(p, r);
        let omega_inv = mod_inverse(&omega.unit(), &modulus).expect("root of unity");
        let z = (unit.unit() * omega_inv - BigInt::one()).mod_floor(&modulus);
        if z.is_zero() {
            return Ok(Self::zero(p, r));
        }
        let terms = log_series_terms(p, r);
        let guard = floor_log(p, terms);
        let work = pow(p, r + guard);
        let mut power = BigInt::one();
        let mut sum = BigInt::zero();
        for k in 1..=terms {
            power = (&power * &z).mod_floor(&work);
            let (a, m) = split_p(&BigInt::from(k), p);
            // power is divisible by p^k and k > a, so the shift is exact
            let shifted = &power / pow(p, a);
            let inv = mod_inverse(&m, &modulus).expect("p-free index");
            let term = (shifted * inv).mod_floor(&modulus);
            if k % 2 == 1 {
                sum += term;
            } else {
                sum -= term;
            }
        }
        Ok(Self::normalize(p, 0, sum, r))
    }
}

/// Smallest K with `K - floor(log_p K) >= precision`; every series term past K
/// has valuation at least `precision`.
pub fn log_series_terms(p: u64, precision: i64) -> u64 {
    let mut k = 1u64;
    while (k as i64) - floor_log(p, k) < precision {
        k += 1;
    }
    k
}

fn floor_log(p: u64, k: u64) -> i64 {
    let mut e = 0;
    let mut acc = p;
    while acc <= k {
        e += 1;
        acc = match acc.checked_mul(p) {
            Some(a) => a,
            None => break,
        };
    }
    e
}

/// Split `n = p^a * m` with `p ∤ m`; `n` nonzero.
fn split_p(n: &BigInt, p: u64) -> (i64, BigInt) {
    let bp = BigInt::from(p);
    let mut m = n.clone();
    let mut a = 0;
    loop {
        let (q, r) = m.div_rem(&bp);
        if !r.is_zero() {
            return (a, m);
        }
        m = q;
        a += 1;
    }
}

impl Add for &PadicNumber {
    type Output = PadicNumber;

    fn add(self, other: &PadicNumber) -> PadicNumber {
        self.check_prime(other);
        let n = self.abs_precision.min(other.abs_precision);
        match (self.valuation, other.valuation) {
            (ExtInt::Infinity, _) => other.with_precision(n),
            (_, ExtInt::Infinity) => self.with_precision(n),
            (ExtInt::Finite(v1), ExtInt::Finite(v2)) => {
                let v = v1.min(v2);
                let u = self.unit() * pow(self.prime, v1 - v) + other.unit() * pow(self.prime, v2 - v);
                PadicNumber::normalize(self.prime, v, u, n)
            }
        }
    }
}

impl Neg for &PadicNumber {
    type Output = PadicNumber;

    fn neg(self) -> PadicNumber {
        match self.valuation {
            ExtInt::Infinity => self.clone(),
            ExtInt::Finite(v) => PadicNumber::normalize(self.prime, v, -self.unit(), self.abs_precision),
        }
    }
}

impl Sub for &PadicNumber {
    type Output = PadicNumber;

    fn sub(self, other: &PadicNumber) -> PadicNumber {
        self + &(-other)
    }
}

impl Mul for &PadicNumber {
    type Output = PadicNumber;

    fn mul(self, other: &PadicNumber) -> PadicNumber {
        self.check_prime(other);
        let p = self.prime;
        match (self.valuation, other.valuation) {
            (ExtInt::Infinity, ExtInt::Infinity) => {
                PadicNumber::zero(p, self.abs_precision + other.abs_precision)
            }
            (ExtInt::Infinity, ExtInt::Finite(v)) => PadicNumber::zero(p, self.abs_precision + v),
            (ExtInt::Finite(v), ExtInt::Infinity) => PadicNumber::zero(p, other.abs_precision + v),
            (ExtInt::Finite(v1), ExtInt::Finite(v2)) => {
                let r = (self.abs_precision - v1).min(other.abs_precision - v2);
                PadicNumber::normalize(p, v1 + v2, self.unit() * other.unit(), v1 + v2 + r)
            }
        }
    }
}

impl fmt::Display for PadicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.valuation {
            ExtInt::Infinity => write!(f, "O({}^{})", self.prime, self.abs_precision),
            ExtInt::Finite(v) => write!(
                f,
                "{}^{} * {} + O({}^{})",
                self.prime,
                v,
                self.unit(),
                self.prime,
                self.abs_precision
            ),
        }
    }
}
