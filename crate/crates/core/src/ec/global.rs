use num_bigint::BigInt;
use num_traits::{One, Signed};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::curve::WeierstrassCurve;
use super::tate::{self, LocalReductionData};
use crate::arith::{factor, valuation};
use crate::error::{Error, Result};

/// Conductor, global minimal model and the table of local data at every bad prime.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalData {
    pub minimal_model: WeierstrassCurve,
    #[serde(with = "crate::bigint_serde")]
    pub conductor: BigInt,
    #[serde(with = "crate::bigint_serde")]
    pub minimal_discriminant: BigInt,
    /// Sorted by prime.
    pub local: Vec<LocalReductionData>,
}

impl GlobalData {
    pub fn local_at(&self, ell: &BigInt) -> Option<&LocalReductionData> {
        self.local
            .binary_search_by(|d| d.prime.cmp(ell))
            .ok()
            .map(|i| &self.local[i])
    }

    pub fn local_at_u64(&self, ell: u64) -> Option<&LocalReductionData> {
        self.local_at(&BigInt::from(ell))
    }

    pub fn bad_primes(&self) -> impl Iterator<Item = &BigInt> {
        self.local.iter().map(|d| &d.prime)
    }

    /// ℓ with ℓ || N.
    pub fn multiplicative_primes(&self) -> impl Iterator<Item = &LocalReductionData> {
        self.local.iter().filter(|d| d.conductor_exponent == 1)
    }
}

/// Minimal model at every prime, obtained by minimalizing one prime at a time.
/// Each step uses integral translations and `u = ℓ`, so it preserves
/// integrality and minimality at the other primes.
pub fn global_minimal_model(curve: &WeierstrassCurve) -> Result<WeierstrassCurve> {
    let g = num_integer::Integer::gcd(curve.discriminant(), &curve.c4().pow(3));
    let mut current = curve.clone();
    if g.abs().is_one() {
        return Ok(current);
    }
    for (ell, _) in factor(&g)? {
        let (model, v) = tate::local_minimal_model(&current, &ell)?;
        if v > 0 {
            current = model;
        }
    }
    Ok(current)
}

/// Conductor `N = Π ℓ^f_ℓ` over the primes dividing the minimal discriminant,
/// and the local data at each of them.
pub fn conductor_and_global_data(curve: &WeierstrassCurve) -> Result<GlobalData> {
    let minimal = global_minimal_model(curve)?;
    let primes: Vec<BigInt> = factor(minimal.discriminant())?
        .into_iter()
        .map(|(p, _)| p)
        .collect();
    let local = primes
        .par_iter()
        .map(|ell| tate::tate_algorithm(&minimal, ell))
        .collect::<Result<Vec<_>>>()?;
    let mut conductor = BigInt::one();
    for d in &local {
        debug_assert_eq!(Some(d.ord_delta_min), valuation(minimal.discriminant(), &d.prime));
        conductor *= num_traits::pow(d.prime.clone(), d.conductor_exponent as usize);
    }
    if conductor.is_one() {
        return Err(Error::ConductorOne);
    }
    Ok(GlobalData {
        minimal_discriminant: minimal.discriminant().clone(),
        minimal_model: minimal,
        conductor,
        local,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ec::tate::{KodairaType, ReductionClass};

    fn curve(a: [i64; 5]) -> WeierstrassCurve {
        WeierstrassCurve::from_coeffs(a).unwrap()
    }

    #[test]
    fn bad_primes_of_small_curves() {
        let g = conductor_and_global_data(&curve([0, 0, 0, 1, 1])).unwrap();
        let primes: Vec<_> = g.bad_primes().cloned().collect();
        assert_eq!(primes, vec![BigInt::from(2), BigInt::from(31)]);
        let g = conductor_and_global_data(&curve([0, 1, 0, -1, 0])).unwrap();
        let primes: Vec<_> = g.bad_primes().cloned().collect();
        assert_eq!(primes, vec![BigInt::from(2), BigInt::from(5)]);
        let five = g.local_at_u64(5).unwrap();
        assert_eq!(five.reduction_class, ReductionClass::NonsplitMultiplicative);
        assert_eq!(g.local_at_u64(2).unwrap().reduction_class, ReductionClass::Additive);
    }

    #[test]
    fn known_conductors() {
        // 11a1, 37a1, 27a1 (y^2 + y = x^3 - 7), and y^2 = x^3 + 1 (conductor 36).
        let cases: [([i64; 5], i64); 4] = [
            ([0, -1, 1, -10, -20], 11),
            ([0, 0, 1, -1, 0], 37),
            ([0, 0, 1, 0, -7], 27),
            ([0, 0, 0, 0, 1], 36),
        ];
        for (a, n) in cases {
            let g = conductor_and_global_data(&curve(a)).unwrap();
            assert_eq!(g.conductor, BigInt::from(n), "{a:?}");
        }
        let g = conductor_and_global_data(&curve([0, -1, 1, -10, -20])).unwrap();
        let d = g.local_at_u64(11).unwrap();
        assert_eq!(d.kodaira_type, KodairaType::I(5));
        assert_eq!(d.tamagawa, 5);
    }

    #[test]
    fn scaled_model_is_reminimalized() {
        let e = curve([0, -1, 1, -10, -20]);
        let scaled = e.scale_up(&BigInt::from(6));
        let g = conductor_and_global_data(&scaled).unwrap();
        assert_eq!(g.minimal_discriminant, *e.discriminant());
        assert_eq!(g.conductor, BigInt::from(11));
        assert_eq!(g.local.len(), 1);
    }
}
