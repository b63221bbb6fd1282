use std::collections::HashMap;
use std::sync::RwLock;

use num_bigint::BigInt;

use super::curve::WeierstrassCurve;
use super::tate::{self, ReductionClass};
use crate::arith::{is_prime_u64, mod_u64};
use crate::error::{Error, Result};

/// Largest ℓ for which points are counted by default.
pub const DEFAULT_POINT_COUNT_CAP: u64 = 1_000_000;

/// `#E(F_ℓ)` including the point at infinity, for a model with good reduction at ℓ.
///
/// Naive O(ℓ): for odd ℓ the number of y over each x is `1 + (disc(x) / ℓ)`
/// with `disc(x) = 4x^3 + b2 x^2 + 2 b4 x + b6`, read off a table of squares.
pub fn count_points(curve: &WeierstrassCurve, ell: u64) -> u64 {
    if ell == 2 {
        let a: Vec<u64> = curve.coeffs().iter().map(|c| mod_u64(c, 2)).collect();
        let mut count = 1;
        for x in 0..2u64 {
            for y in 0..2u64 {
                let lhs = y * y + a[0] * x * y + a[2] * y;
                let rhs = x * x * x + a[1] * x * x + a[3] * x + a[4];
                if (lhs + rhs).is_multiple_of(2) {
                    count += 1;
                }
            }
        }
        return count;
    }
    let l = ell as usize;
    let mut chi = vec![-1i8; l];
    chi[0] = 0;
    for y in 1..=l / 2 {
        chi[(y * y) % l] = 1;
    }
    let b2 = mod_u64(curve.b2(), ell);
    let b4 = mod_u64(curve.b4(), ell);
    let b6 = mod_u64(curve.b6(), ell);
    let m = ell as u128;
    let mut total: i64 = 0;
    for x in 0..ell {
        let x = x as u128;
        let d = ((((4 * x + b2 as u128) % m * x + 2 * b4 as u128) % m) * x + b6 as u128) % m;
        total += chi[d as usize] as i64;
    }
    (ell as i64 + 1 + total) as u64
}

/// Trace of Frobenius `a(ℓ)`.
///
/// Good reduction: `ℓ + 1 - #E(F_ℓ)`. Split multiplicative `+1`, nonsplit
/// `-1`, additive `0`. The model should be ℓ-minimal; otherwise it is
/// minimalized first.
pub fn trace_of_frobenius(curve: &WeierstrassCurve, ell: u64, cap: u64) -> Result<i64> {
    if !is_prime_u64(ell) {
        return Err(Error::NotPrime(BigInt::from(ell)));
    }
    if ell > cap {
        return Err(Error::PointCountBudget { prime: ell, cap });
    }
    if mod_u64(curve.discriminant(), ell) != 0 {
        return Ok(ell as i64 + 1 - count_points(curve, ell) as i64);
    }
    let outcome = tate::run(curve, &BigInt::from(ell))?;
    Ok(match outcome.data.reduction_class {
        ReductionClass::Good => ell as i64 + 1 - count_points(&outcome.model, ell) as i64,
        ReductionClass::SplitMultiplicative => 1,
        ReductionClass::NonsplitMultiplicative => -1,
        ReductionClass::Additive => 0,
    })
}

/// Memo of `a(ℓ)` for one curve, shared between the sieves and the
/// irreducibility search. Concurrent writers store identical values.
#[derive(Debug)]
pub struct TraceCache {
    curve: WeierstrassCurve,
    cap: u64,
    values: RwLock<HashMap<u64, i64>>,
}

impl TraceCache {
    pub fn new(curve: WeierstrassCurve, cap: u64) -> Self {
        TraceCache {
            curve,
            cap,
            values: RwLock::new(HashMap::new()),
        }
    }

    pub fn curve(&self) -> &WeierstrassCurve {
        &self.curve
    }

    pub fn trace(&self, ell: u64) -> Result<i64> {
        if let Some(&a) = self.values.read().expect("trace cache poisoned").get(&ell) {
            return Ok(a);
        }
        let a = trace_of_frobenius(&self.curve, ell, self.cap)?;
        self.values
            .write()
            .expect("trace cache poisoned")
            .insert(ell, a);
        Ok(a)
    }

    pub fn len(&self) -> usize {
        self.values.read().expect("trace cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
