use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Integral Weierstrass model `y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6`
/// together with its standard invariants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeierstrassCurve {
    a: [BigInt; 5],
    b2: BigInt,
    b4: BigInt,
    b6: BigInt,
    b8: BigInt,
    c4: BigInt,
    c6: BigInt,
    discriminant: BigInt,
}

impl WeierstrassCurve {
    pub fn new(a1: BigInt, a2: BigInt, a3: BigInt, a4: BigInt, a6: BigInt) -> Result<Self> {
        let b2 = &a1 * &a1 + 4 * &a2;
        let b4 = 2 * &a4 + &a1 * &a3;
        let b6 = &a3 * &a3 + 4 * &a6;
        let b8 = &a1 * &a1 * &a6 + 4 * &a2 * &a6 - &a1 * &a3 * &a4 + &a2 * &a3 * &a3 - &a4 * &a4;
        let c4 = &b2 * &b2 - 24 * &b4;
        let c6 = 36 * &b2 * &b4 - &b2 * &b2 * &b2 - 216 * &b6;
        let discriminant: BigInt =
            9 * &b2 * &b4 * &b6 - &b2 * &b2 * &b8 - 8 * &b4 * &b4 * &b4 - 27 * &b6 * &b6;
        if discriminant.is_zero() {
            return Err(Error::SingularCurve);
        }
        Ok(WeierstrassCurve {
            a: [a1, a2, a3, a4, a6],
            b2,
            b4,
            b6,
            b8,
            c4,
            c6,
            discriminant,
        })
    }

    pub fn from_coeffs(coeffs: [i64; 5]) -> Result<Self> {
        let [a1, a2, a3, a4, a6] = coeffs.map(BigInt::from);
        Self::new(a1, a2, a3, a4, a6)
    }

    pub fn from_slice(coeffs: &[BigInt]) -> Result<Self> {
        match coeffs {
            [a1, a2, a3, a4, a6] => {
                Self::new(a1.clone(), a2.clone(), a3.clone(), a4.clone(), a6.clone())
            }
            _ => Err(Error::InvalidInput(format!(
                "expected 5 coefficients, got {}",
                coeffs.len()
            ))),
        }
    }

    /// `[a1, a2, a3, a4, a6]`.
    pub fn coeffs(&self) -> &[BigInt; 5] {
        &self.a
    }

    pub fn a1(&self) -> &BigInt {
        &self.a[0]
    }
    pub fn a2(&self) -> &BigInt {
        &self.a[1]
    }
    pub fn a3(&self) -> &BigInt {
        &self.a[2]
    }
    pub fn a4(&self) -> &BigInt {
        &self.a[3]
    }
    pub fn a6(&self) -> &BigInt {
        &self.a[4]
    }
    pub fn b2(&self) -> &BigInt {
        &self.b2
    }
    pub fn b4(&self) -> &BigInt {
        &self.b4
    }
    pub fn b6(&self) -> &BigInt {
        &self.b6
    }
    pub fn b8(&self) -> &BigInt {
        &self.b8
    }
    pub fn c4(&self) -> &BigInt {
        &self.c4
    }
    pub fn c6(&self) -> &BigInt {
        &self.c6
    }
    pub fn discriminant(&self) -> &BigInt {
        &self.discriminant
    }

    /// j-invariant as a reduced fraction `(numerator, denominator)` with
    /// positive denominator.
    pub fn j_invariant(&self) -> (BigInt, BigInt) {
        let num = &self.c4 * &self.c4 * &self.c4;
        let den = self.discriminant.clone();
        let g = num.gcd(&den);
        let (mut n, mut d) = (num / &g, den / &g);
        if d < BigInt::zero() {
            n = -n;
            d = -d;
        }
        (n, d)
    }

    /// Translation `x = x' + r`, `y = y' + s x' + t` (u = 1).
    pub fn rst_transform(&self, r: &BigInt, s: &BigInt, t: &BigInt) -> Self {
        let [a1, a2, a3, a4, a6] = &self.a;
        let na1 = a1 + 2 * s;
        let na2 = a2 - s * a1 + 3 * r - s * s;
        let na3 = a3 + r * a1 + 2 * t;
        let na4 = a4 - s * a3 + 2 * r * a2 - (t + r * s) * a1 + 3 * r * r - 2 * s * t;
        let na6 = a6 + r * a4 + r * r * a2 + r * r * r - t * a3 - t * t - r * t * a1;
        Self::new(na1, na2, na3, na4, na6).expect("isomorphic model is nonsingular")
    }

    /// Divide `a_i` by `u^i`; `None` unless every division is exact.
    pub fn scale_down(&self, u: &BigInt) -> Option<Self> {
        let mut out = Vec::with_capacity(5);
        for (ai, w) in self.a.iter().zip([1usize, 2, 3, 4, 6]) {
            let (q, r) = ai.div_rem(&num_traits::pow(u.clone(), w));
            if !r.is_zero() {
                return None;
            }
            out.push(q);
        }
        Self::from_slice(&out).ok()
    }

    /// Multiply `a_i` by `u^i` (the inverse of [`scale_down`](Self::scale_down)).
    pub fn scale_up(&self, u: &BigInt) -> Self {
        let out: Vec<BigInt> = self
            .a
            .iter()
            .zip([1usize, 2, 3, 4, 6])
            .map(|(ai, w)| ai * num_traits::pow(u.clone(), w))
            .collect();
        Self::from_slice(&out).expect("scaling preserves nonsingularity")
    }
}

impl fmt::Display for WeierstrassCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a1, a2, a3, a4, a6] = &self.a;
        write!(f, "[{a1},{a2},{a3},{a4},{a6}]")
    }
}

impl Serialize for WeierstrassCurve {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        crate::bigint_serde::vec::serialize(&self.a, s)
    }
}

impl<'de> Deserialize<'de> for WeierstrassCurve {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let coeffs = crate::bigint_serde::vec::deserialize(d)?;
        WeierstrassCurve::from_slice(&coeffs).map_err(serde::de::Error::custom)
    }
}
