//! Tate's algorithm: Kodaira symbol, Tamagawa number, conductor exponent and
//! local minimal model at a single prime.
//!
//! Follows the classical presentation (Tate, "Algorithm for determining the
//! type of a singular fiber"), with the coordinate changes for residue
//! characteristic 2 and 3 written out separately. Every step moves the
//! singular point to the origin and tests divisibility of the coefficients;
//! when the equation turns out non-minimal the coefficients are divided by
//! `ℓ^i` and the loop restarts.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::curve::WeierstrassCurve;
use crate::arith::{is_prime, mod_inverse};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KodairaType {
    /// `I_n`; `I(0)` is good reduction.
    I(u32),
    II,
    III,
    IV,
    /// `I_n^*`; `IStar(0)` is `I_0^*`.
    IStar(u32),
    IVStar,
    IIIStar,
    IIStar,
}

impl fmt::Display for KodairaType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KodairaType::I(n) => write!(f, "I{n}"),
            KodairaType::II => f.write_str("II"),
            KodairaType::III => f.write_str("III"),
            KodairaType::IV => f.write_str("IV"),
            KodairaType::IStar(n) => write!(f, "I{n}*"),
            KodairaType::IVStar => f.write_str("IV*"),
            KodairaType::IIIStar => f.write_str("III*"),
            KodairaType::IIStar => f.write_str("II*"),
        }
    }
}

impl FromStr for KodairaType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "II" => KodairaType::II,
            "III" => KodairaType::III,
            "IV" => KodairaType::IV,
            "IV*" => KodairaType::IVStar,
            "III*" => KodairaType::IIIStar,
            "II*" => KodairaType::IIStar,
            _ => {
                let body = s
                    .strip_prefix('I')
                    .ok_or_else(|| format!("unknown Kodaira symbol {s:?}"))?;
                match body.strip_suffix('*') {
                    Some(n) => KodairaType::IStar(n.parse().map_err(|_| format!("bad symbol {s:?}"))?),
                    None => KodairaType::I(body.parse().map_err(|_| format!("bad symbol {s:?}"))?),
                }
            }
        })
    }
}

impl Serialize for KodairaType {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for KodairaType {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReductionClass {
    Good,
    SplitMultiplicative,
    NonsplitMultiplicative,
    Additive,
}

impl ReductionClass {
    pub fn is_multiplicative(self) -> bool {
        matches!(
            self,
            ReductionClass::SplitMultiplicative | ReductionClass::NonsplitMultiplicative
        )
    }
}

impl fmt::Display for ReductionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReductionClass::Good => "good",
            ReductionClass::SplitMultiplicative => "split multiplicative",
            ReductionClass::NonsplitMultiplicative => "nonsplit multiplicative",
            ReductionClass::Additive => "additive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalReductionData {
    #[serde(with = "crate::bigint_serde")]
    pub prime: BigInt,
    pub kodaira_type: KodairaType,
    pub reduction_class: ReductionClass,
    pub tamagawa: u64,
    pub ord_delta_min: u32,
    pub conductor_exponent: u32,
    /// Number of `u = ℓ` rescalings needed to reach a minimal model.
    pub scaling_valuation: u32,
    /// Set when the input equation was not ℓ-minimal.
    pub non_minimal_input: bool,
}

impl LocalReductionData {
    pub fn prime_u64(&self) -> Option<u64> {
        self.prime.to_u64()
    }
}

/// Arithmetic in F_ℓ on integer representatives.
struct ResidueField<'a> {
    p: &'a BigInt,
}

impl ResidueField<'_> {
    fn reduce(&self, x: &BigInt) -> BigInt {
        x.mod_floor(self.p)
    }

    fn divides(&self, x: &BigInt) -> bool {
        (x % self.p).is_zero()
    }

    fn inv(&self, x: &BigInt) -> BigInt {
        mod_inverse(x, self.p).expect("inverting a unit mod ℓ")
    }

    fn val(&self, x: &BigInt) -> u32 {
        crate::arith::valuation(x, self.p).unwrap_or(u32::MAX)
    }

    fn is_two(&self) -> bool {
        *self.p == BigInt::from(2)
    }

    fn is_square(&self, x: &BigInt) -> bool {
        let r = self.reduce(x);
        if r.is_zero() || self.is_two() {
            return true;
        }
        let e = (self.p - 1u32) / 2u32;
        r.modpow(&e, self.p).is_one()
    }

    /// Whether `a x^2 + b x + c` has a root mod ℓ.
    fn quadratic_has_root(&self, a: &BigInt, b: &BigInt, c: &BigInt) -> bool {
        if self.divides(a) {
            return !self.divides(b) || self.divides(c);
        }
        if self.is_two() {
            let (a, b, c) = (self.reduce(a), self.reduce(b), self.reduce(c));
            return c.is_zero() || (a + b + c).is_even();
        }
        self.is_square(&(b * b - 4 * a * c))
    }

    /// Number of distinct roots of the monic cubic `x^3 + b x^2 + c x + d`.
    fn cubic_distinct_roots(&self, b: &BigInt, c: &BigInt, d: &BigInt) -> u64 {
        let f = [self.reduce(d), self.reduce(c), self.reduce(b), BigInt::one()];
        if let Some(small) = self.p.to_u64().filter(|&q| q < 100_000) {
            return (0..small)
                .filter(|&x| {
                    let x = BigInt::from(x);
                    (((&x + &f[2]) * &x + &f[1]) * &x + &f[0]).mod_floor(self.p).is_zero()
                })
                .count() as u64;
        }
        // deg gcd(x^ℓ - x, f) counts distinct roots in F_ℓ.
        let xp = self.pow_x_mod(&f);
        let mut g = xp;
        g[1] = self.reduce(&(&g[1] - 1));
        poly_gcd_degree(self, f.to_vec(), g.to_vec()) as u64
    }

    /// `x^ℓ mod f` for monic cubic `f`, as coefficients of degree < 3.
    fn pow_x_mod(&self, f: &[BigInt; 4]) -> [BigInt; 3] {
        let mul = |u: &[BigInt; 3], v: &[BigInt; 3]| -> [BigInt; 3] {
            let mut prod = vec![BigInt::zero(); 5];
            for i in 0..3 {
                for j in 0..3 {
                    prod[i + j] += &u[i] * &v[j];
                }
            }
            for k in (3..5).rev() {
                let lead = std::mem::take(&mut prod[k]);
                for i in 0..3 {
                    prod[k - 3 + i] -= &lead * &f[i];
                }
            }
            [self.reduce(&prod[0]), self.reduce(&prod[1]), self.reduce(&prod[2])]
        };
        let mut result = [BigInt::one(), BigInt::zero(), BigInt::zero()];
        let mut base = [BigInt::zero(), BigInt::one(), BigInt::zero()];
        let mut e = self.p.clone();
        while !e.is_zero() {
            if e.is_odd() {
                result = mul(&result, &base);
            }
            base = mul(&base, &base);
            e >>= 1;
        }
        result
    }
}

fn trim(f: &mut Vec<BigInt>) {
    while f.last().is_some_and(|c| c.is_zero()) {
        f.pop();
    }
}

fn poly_gcd_degree(k: &ResidueField, a: Vec<BigInt>, b: Vec<BigInt>) -> usize {
    let (mut a, mut b) = (a, b);
    trim(&mut a);
    trim(&mut b);
    while !b.is_empty() {
        let inv_lead = k.inv(b.last().unwrap());
        while a.len() >= b.len() {
            let shift = a.len() - b.len();
            let factor = k.reduce(&(a.last().unwrap() * &inv_lead));
            for (i, coeff) in b.iter().enumerate() {
                a[shift + i] = k.reduce(&(&a[shift + i] - &factor * coeff));
            }
            trim(&mut a);
            if a.is_empty() {
                break;
            }
        }
        std::mem::swap(&mut a, &mut b);
    }
    a.len().saturating_sub(1)
}

/// Outcome of one run of the algorithm: the data plus the ℓ-minimal model the
/// classification was read from (singular point moved to the origin).
pub(crate) struct TateOutcome {
    pub data: LocalReductionData,
    pub model: WeierstrassCurve,
}

pub(crate) fn run(curve: &WeierstrassCurve, ell: &BigInt) -> Result<TateOutcome> {
    if !is_prime(ell) {
        return Err(Error::NotPrime(ell.clone()));
    }
    let k = ResidueField { p: ell };
    let p = ell;
    let two = BigInt::from(2);
    let three = BigInt::from(3);
    let p_is_2 = *p == two;
    let p_is_3 = *p == three;
    let half = if p_is_2 { BigInt::zero() } else { k.inv(&two) };
    let pi2 = p * p;
    let pi3 = &pi2 * p;
    let pi4 = &pi3 * p;
    let zero = BigInt::zero();

    let mut c = curve.clone();
    let mut scalings = 0u32;

    let finish = |c: WeierstrassCurve,
                  kodaira: KodairaType,
                  class: ReductionClass,
                  tamagawa: u64,
                  vpd: u32,
                  fp: u32,
                  scalings: u32| TateOutcome {
        data: LocalReductionData {
            prime: p.clone(),
            kodaira_type: kodaira,
            reduction_class: class,
            tamagawa,
            ord_delta_min: vpd,
            conductor_exponent: fp,
            scaling_valuation: scalings,
            non_minimal_input: scalings > 0,
        },
        model: c,
    };

    loop {
        let vpd = k.val(c.discriminant());
        if vpd == 0 {
            return Ok(finish(c, KodairaType::I(0), ReductionClass::Good, 1, 0, 0, scalings));
        }

        // Move the singular point to (0, 0) mod ℓ so that ℓ | a3, a4, a6.
        let (r, t) = {
            let (a1, a2, a3, a4, a6) = (c.a1(), c.a2(), c.a3(), c.a4(), c.a6());
            let (b2, b4, b6) = (c.b2(), c.b4(), c.b6());
            if p_is_2 {
                if k.divides(b2) {
                    let r = k.reduce(a4);
                    let t = k.reduce(&(((&r + a2) * &r + a4) * &r + a6));
                    (r, t)
                } else {
                    let inv_a1 = k.inv(a1);
                    let r = k.reduce(&(&inv_a1 * a3));
                    let t = k.reduce(&(&inv_a1 * (a4 + &r * &r)));
                    (r, t)
                }
            } else if p_is_3 {
                let r = if k.divides(b2) {
                    k.reduce(&(-b6))
                } else {
                    k.reduce(&(-k.inv(b2) * b4))
                };
                let t = k.reduce(&(a1 * &r + a3));
                (r, t)
            } else {
                let (c4, c6) = (c.c4(), c.c6());
                let r = if k.divides(c4) {
                    k.reduce(&(-k.inv(&BigInt::from(12)) * b2))
                } else {
                    k.reduce(&(-k.inv(&(12 * c4)) * (c6 + b2 * c4)))
                };
                let t = k.reduce(&(-&half * (a1 * &r + a3)));
                (r, t)
            }
        };
        c = c.rst_transform(&r, &zero, &t);
        debug_assert!(k.divides(c.a3()) && k.divides(c.a4()) && k.divides(c.a6()));

        if !k.divides(c.c4()) {
            // Multiplicative: split iff the tangent cone y^2 + a1 xy - a2 x^2
            // at the node splits over F_ℓ.
            let split = k.quadratic_has_root(&BigInt::one(), c.a1(), &(-c.a2()));
            let (class, cp) = if split {
                (ReductionClass::SplitMultiplicative, vpd as u64)
            } else if vpd.is_multiple_of(2) {
                (ReductionClass::NonsplitMultiplicative, 2)
            } else {
                (ReductionClass::NonsplitMultiplicative, 1)
            };
            return Ok(finish(c, KodairaType::I(vpd), class, cp, vpd, 1, scalings));
        }

        if k.val(c.a6()) < 2 {
            return Ok(finish(c, KodairaType::II, ReductionClass::Additive, 1, vpd, vpd, scalings));
        }
        if k.val(c.b8()) < 3 {
            return Ok(finish(c, KodairaType::III, ReductionClass::Additive, 2, vpd, vpd - 1, scalings));
        }
        if k.val(c.b6()) < 3 {
            let cp = if k.quadratic_has_root(&BigInt::one(), &(c.a3() / p), &(-(c.a6() / &pi2))) {
                3
            } else {
                1
            };
            return Ok(finish(c, KodairaType::IV, ReductionClass::Additive, cp, vpd, vpd - 2, scalings));
        }

        // Arrange ℓ | a1, a2; ℓ^2 | a3, a4; ℓ^3 | a6.
        let (s, t) = if p_is_2 {
            (k.reduce(c.a2()), p * k.reduce(&(c.a6() / &pi2)))
        } else if p_is_3 {
            (c.a1().clone(), c.a3().clone())
        } else {
            (-c.a1() * &half, -c.a3() * &half)
        };
        c = c.rst_transform(&zero, &s, &t);

        // Cubic T^3 + b T^2 + cc T + d with b = a2/ℓ, cc = a4/ℓ^2, d = a6/ℓ^3.
        let b = c.a2() / p;
        let cc = c.a4() / &pi2;
        let d = c.a6() / &pi3;
        let w = 27 * &d * &d - &b * &b * &cc * &cc + 4 * &b * &b * &b * &d - 18 * &b * &cc * &d
            + 4 * &cc * &cc * &cc;
        let x = 3 * &cc - &b * &b;

        if !k.divides(&w) {
            // Distinct roots: I0*.
            let cp = 1 + k.cubic_distinct_roots(&b, &cc, &d);
            return Ok(finish(c, KodairaType::IStar(0), ReductionClass::Additive, cp, vpd, vpd - 4, scalings));
        }

        if !k.divides(&x) {
            // One double root: I_m*. Move the double root to T = 0.
            let r = if p_is_2 {
                k.reduce(&cc)
            } else if p_is_3 {
                k.reduce(&(&cc * k.inv(&b)))
            } else {
                k.reduce(&((&b * &cc - 9 * &d) * k.inv(&(2 * &x))))
            };
            c = c.rst_transform(&(p * r), &zero, &zero);

            let mut ix = 3u32;
            let mut iy = 3u32;
            let mut mx = pi2.clone();
            let mut my = pi2.clone();
            let cp;
            loop {
                let a2t = c.a2() / p;
                let a3t = c.a3() / &my;
                let a6t = c.a6() / (&mx * &my);
                if k.divides(&(&a3t * &a3t + 4 * &a6t)) {
                    let t = if p_is_2 {
                        &my * k.reduce(&a6t)
                    } else {
                        &my * k.reduce(&(-&a3t * &half))
                    };
                    c = c.rst_transform(&zero, &zero, &t);
                    my = &my * p;
                    iy += 1;
                    let a2t = c.a2() / p;
                    let a4t = c.a4() / (p * &mx);
                    let a6t = c.a6() / (&mx * &my);
                    if k.divides(&(&a4t * &a4t - 4 * &a6t * &a2t)) {
                        let r = if p_is_2 {
                            &mx * k.reduce(&(&a6t * k.inv(&a2t)))
                        } else {
                            &mx * k.reduce(&(-&a4t * k.inv(&(2 * &a2t))))
                        };
                        c = c.rst_transform(&r, &zero, &zero);
                        mx = &mx * p;
                        ix += 1;
                    } else {
                        cp = if k.quadratic_has_root(&a2t, &a4t, &a6t) { 4 } else { 2 };
                        break;
                    }
                } else {
                    let _ = a2t;
                    cp = if k.quadratic_has_root(&BigInt::one(), &a3t, &(-&a6t)) { 4 } else { 2 };
                    break;
                }
            }
            let m = ix + iy - 5;
            return Ok(finish(
                c,
                KodairaType::IStar(m),
                ReductionClass::Additive,
                cp,
                vpd,
                vpd + 1 - ix - iy,
                scalings,
            ));
        }

        // Triple root: move it to T = 0.
        let r = if p_is_2 {
            k.reduce(&b)
        } else if p_is_3 {
            k.reduce(&(-&d))
        } else {
            k.reduce(&(-&b * k.inv(&three)))
        };
        c = c.rst_transform(&(p * r), &zero, &zero);

        let a3t = c.a3() / &pi2;
        let a6t = c.a6() / &pi4;
        if !k.divides(&(&a3t * &a3t + 4 * &a6t)) {
            let cp = if k.quadratic_has_root(&BigInt::one(), &a3t, &(-&a6t)) { 3 } else { 1 };
            return Ok(finish(c, KodairaType::IVStar, ReductionClass::Additive, cp, vpd, vpd - 6, scalings));
        }

        // Arrange ℓ^3 | a3, ℓ^5 | a6.
        let t = if p_is_2 {
            -&pi2 * k.reduce(&a6t)
        } else {
            &pi2 * k.reduce(&(-&a3t * &half))
        };
        c = c.rst_transform(&zero, &zero, &t);

        if k.val(c.a4()) < 4 {
            return Ok(finish(c, KodairaType::IIIStar, ReductionClass::Additive, 2, vpd, vpd - 7, scalings));
        }
        if k.val(c.a6()) < 6 {
            return Ok(finish(c, KodairaType::IIStar, ReductionClass::Additive, 1, vpd, vpd - 8, scalings));
        }

        // Non-minimal: divide out u = ℓ and start over.
        c = c.scale_down(p).expect("non-minimal model divides exactly");
        scalings += 1;
    }
}

/// Local minimal model at ℓ and the number of `u = ℓ` scalings used.
///
/// An equation that is already ℓ-minimal is returned unchanged.
pub fn local_minimal_model(curve: &WeierstrassCurve, ell: &BigInt) -> Result<(WeierstrassCurve, u32)> {
    if !is_prime(ell) {
        return Err(Error::NotPrime(ell.clone()));
    }
    if !obviously_non_minimal_candidate(curve, ell) {
        return Ok((curve.clone(), 0));
    }
    let outcome = run(curve, ell)?;
    let v = outcome.data.scaling_valuation;
    if v == 0 {
        Ok((curve.clone(), 0))
    } else {
        Ok((outcome.model, v))
    }
}

/// A scaling by `u = ℓ` divides Δ by ℓ^12 and c4 by ℓ^4, so a model failing
/// either divisibility is already minimal.
fn obviously_non_minimal_candidate(curve: &WeierstrassCurve, ell: &BigInt) -> bool {
    let vd = crate::arith::valuation(curve.discriminant(), ell).unwrap_or(u32::MAX);
    let vc4 = crate::arith::valuation(curve.c4(), ell).unwrap_or(u32::MAX);
    vd >= 12 && vc4 >= 4
}

/// Local reduction data at ℓ. Non-minimal input is minimalized internally and
/// flagged through `non_minimal_input`.
pub fn tate_algorithm(curve: &WeierstrassCurve, ell: &BigInt) -> Result<LocalReductionData> {
    if ell.is_negative() {
        return Err(Error::NotPrime(ell.clone()));
    }
    Ok(run(curve, ell)?.data)
}
