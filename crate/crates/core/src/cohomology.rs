//! Finite Z_p-modules `M = ⊕ Z/p^{e_i}` with an automorphism F, standing in
//! for a procyclic unramified Galois action. H^0 and H^1 are the kernel and
//! cokernel of F - 1, computed by enumeration or through Smith normal forms.

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::arith::is_prime_u64;
use crate::error::{Error, Result};
use crate::hypotheses::{ClauseVerdict, Status};
use crate::tate_period::TatePeriodData;

/// Largest module order handled by enumeration.
pub const DEFAULT_ENUMERATION_CAP: u128 = 15_625;

/// Seed of the built-in random suite.
pub const DEFAULT_SEED: u64 = 0x6b6f_6c79;

/// Largest `p^max(e_i)` accepted (keeps products inside i128).
const MAX_MODULUS: i128 = 1_000_000_000_000_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteFrobeniusModule {
    p: u64,
    exponents: Vec<u32>,
    /// Row-major; F acts on column vectors.
    frobenius: Vec<Vec<i64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Enumeration,
    Smith,
}

fn ipow(p: u64, e: u32) -> i128 {
    (p as i128).pow(e)
}

fn val(x: i128, p: u64) -> Option<u32> {
    if x == 0 {
        return None;
    }
    let mut x = x.abs();
    let mut v = 0;
    while x % p as i128 == 0 {
        x /= p as i128;
        v += 1;
    }
    Some(v)
}

impl FiniteFrobeniusModule {
    /// Validates the presentation: p prime, exponents descending and
    /// positive, F square of the right size, well defined on M (p^(e_i - e_j)
    /// divides F_ij) and invertible (det F is a unit mod p).
    pub fn new(p: u64, exponents: Vec<u32>, frobenius: Vec<Vec<i64>>) -> Result<Self> {
        if !is_prime_u64(p) {
            return Err(Error::NotPrime(p.into()));
        }
        let r = exponents.len();
        if r == 0 || exponents.contains(&0) || exponents.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidModule("exponents must be positive and descending".into()));
        }
        if ipow(p, exponents[0]) > MAX_MODULUS {
            return Err(Error::InvalidModule("exponent too large".into()));
        }
        if frobenius.len() != r || frobenius.iter().any(|row| row.len() != r) {
            return Err(Error::InvalidModule(format!("Frobenius must be {r} x {r}")));
        }
        for i in 0..r {
            for j in 0..r {
                if exponents[i] > exponents[j] {
                    let need = exponents[i] - exponents[j];
                    if val(frobenius[i][j] as i128, p).is_some_and(|v| v < need) {
                        return Err(Error::InvalidModule(format!(
                            "entry ({i},{j}) is not divisible by p^{need}"
                        )));
                    }
                }
            }
        }
        let m = FiniteFrobeniusModule { p, exponents, frobenius };
        if det_mod_p(&m.frobenius, p) == 0 {
            return Err(Error::InvalidModule("Frobenius is not invertible".into()));
        }
        Ok(m)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn frobenius(&self) -> &[Vec<i64>] {
        &self.frobenius
    }

    pub fn rank(&self) -> usize {
        self.exponents.len()
    }

    /// p-length of M.
    pub fn length(&self) -> u32 {
        self.exponents.iter().sum()
    }

    pub fn order(&self) -> u128 {
        (self.p as u128).pow(self.length())
    }

    /// F shifted by a multiple of the identity and scaled: `s F + c`.
    fn affine(&self, s: i64, c: i64) -> Vec<Vec<i128>> {
        let r = self.rank();
        (0..r)
            .map(|i| {
                (0..r)
                    .map(|j| s as i128 * self.frobenius[i][j] as i128 + if i == j { c as i128 } else { 0 })
                    .collect()
            })
            .collect()
    }

    fn squared_minus_one(&self) -> Vec<Vec<i128>> {
        let r = self.rank();
        let f = self.affine(1, 0);
        let e0 = ipow(self.p, self.exponents[0]);
        (0..r)
            .map(|i| {
                (0..r)
                    .map(|j| {
                        let s: i128 = (0..r).map(|k| f[i][k] * f[k][j] % e0).sum::<i128>() % e0;
                        s - if i == j { 1 } else { 0 }
                    })
                    .collect()
            })
            .collect()
    }

    fn method(&self, cap: u128) -> Method {
        if self.order() <= cap {
            Method::Enumeration
        } else {
            Method::Smith
        }
    }

    /// `lg ker(F - 1)`.
    pub fn h0_length(&self, cap: u128) -> u32 {
        self.kernel_length(&self.affine(1, -1), self.method(cap))
    }

    /// `lg coker(F - 1)`.
    pub fn h1_length(&self, cap: u128) -> u32 {
        self.cokernel_length(&self.affine(1, -1), self.method(cap))
    }

    pub fn h0_length_by(&self, method: Method) -> u32 {
        self.kernel_length(&self.affine(1, -1), method)
    }

    pub fn h1_length_by(&self, method: Method) -> u32 {
        self.cokernel_length(&self.affine(1, -1), method)
    }

    fn kernel_length(&self, a: &[Vec<i128>], method: Method) -> u32 {
        match method {
            Method::Enumeration => {
                let zero_count = self.elements().filter(|x| self.apply(a, x).iter().all(|&c| c == 0)).count();
                log_p(zero_count as u128, self.p)
            }
            // Pontryagin duality: ker A is dual to coker of the adjoint.
            Method::Smith => smith_cokernel_length(&self.adjoint(a), &self.exponents, self.p),
        }
    }

    fn cokernel_length(&self, a: &[Vec<i128>], method: Method) -> u32 {
        match method {
            Method::Enumeration => {
                let image: HashSet<Vec<i128>> = self.elements().map(|x| self.apply(a, &x)).collect();
                self.length() - log_p(image.len() as u128, self.p)
            }
            Method::Smith => smith_cokernel_length(a, &self.exponents, self.p),
        }
    }

    /// Matrix of the dual map on `⊕ Z/p^{e_i}` under the pairing
    /// `<x, y> = Σ x_i y_i / p^{e_i}`: entry (j, i) is `A_ij p^(e_j - e_i)`.
    fn adjoint(&self, a: &[Vec<i128>]) -> Vec<Vec<i128>> {
        let r = self.rank();
        let e = &self.exponents;
        (0..r)
            .map(|j| {
                (0..r)
                    .map(|i| {
                        if e[j] >= e[i] {
                            a[i][j] * ipow(self.p, e[j] - e[i])
                        } else {
                            a[i][j] / ipow(self.p, e[i] - e[j])
                        }
                    })
                    .collect()
            })
            .collect()
    }

    fn apply(&self, a: &[Vec<i128>], x: &[i128]) -> Vec<i128> {
        a.iter()
            .zip(&self.exponents)
            .map(|(row, &e)| {
                let m = ipow(self.p, e);
                row.iter().zip(x).map(|(c, xi)| c * xi % m).sum::<i128>().rem_euclid(m)
            })
            .collect()
    }

    fn elements(&self) -> impl Iterator<Item = Vec<i128>> + '_ {
        let moduli: Vec<i128> = self.exponents.iter().map(|&e| ipow(self.p, e)).collect();
        let total = self.order();
        (0..total).map(move |mut n| {
            moduli
                .iter()
                .map(|&m| {
                    let d = (n % m as u128) as i128;
                    n /= m as u128;
                    d
                })
                .collect()
        })
    }
}

fn log_p(n: u128, p: u64) -> u32 {
    let mut n = n;
    let mut k = 0;
    while n > 1 {
        debug_assert_eq!(n % p as u128, 0, "group order is a power of p");
        n /= p as u128;
        k += 1;
    }
    k
}

fn det_mod_p(f: &[Vec<i64>], p: u64) -> u64 {
    let p = p as i128;
    let mut m: Vec<Vec<i128>> = f.iter().map(|r| r.iter().map(|&x| (x as i128).rem_euclid(p)).collect()).collect();
    let n = m.len();
    let mut det = 1i128;
    for c in 0..n {
        let Some(piv) = (c..n).find(|&r| m[r][c] != 0) else {
            return 0;
        };
        if piv != c {
            m.swap(piv, c);
            det = (p - det) % p;
        }
        det = det * m[c][c] % p;
        let inv = modinv(m[c][c], p);
        for r in c + 1..n {
            let factor = m[r][c] * inv % p;
            for k in c..n {
                m[r][k] = (m[r][k] - factor * m[c][k]).rem_euclid(p);
            }
        }
    }
    det as u64
}

fn modinv(a: i128, m: i128) -> i128 {
    let (mut old_r, mut r) = (a.rem_euclid(m), m);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    old_s.rem_euclid(m)
}

/// Length of `Z^r / (A Z^r + diag(p^{e_i}) Z^r)` from the Smith form of
/// `[A | diag(p^{e_i})]` over `Z/p^E`, `E = max e_i`.
fn smith_cokernel_length(a: &[Vec<i128>], exponents: &[u32], p: u64) -> u32 {
    let r = exponents.len();
    let top = exponents[0];
    let modulus = ipow(p, top);
    let mut m: Vec<Vec<i128>> = (0..r)
        .map(|i| {
            let mut row: Vec<i128> = a[i].iter().map(|x| x.rem_euclid(modulus)).collect();
            row.extend((0..r).map(|j| if i == j { ipow(p, exponents[i]) % modulus } else { 0 }));
            row
        })
        .collect();
    let cols = 2 * r;
    let mut length = 0;
    for k in 0..r {
        let mut best: Option<(u32, usize, usize)> = None;
        for i in k..r {
            for j in k..cols {
                if let Some(v) = val(m[i][j], p) {
                    if best.is_none_or(|(bv, _, _)| v < bv) {
                        best = Some((v, i, j));
                    }
                }
            }
        }
        let Some((v, bi, bj)) = best else {
            length += top * (r - k) as u32;
            break;
        };
        m.swap(k, bi);
        for row in m.iter_mut() {
            row.swap(k, bj);
        }
        length += v.min(top);
        let pv = ipow(p, v);
        let unit_inv = modinv(m[k][k] / pv, modulus);
        for i in k + 1..r {
            let factor = (m[i][k] / pv) * unit_inv % modulus;
            for j in k..cols {
                m[i][j] = (m[i][j] - factor * m[k][j] % modulus).rem_euclid(modulus);
            }
        }
        for j in k + 1..cols {
            let factor = (m[k][j] / pv) * unit_inv % modulus;
            for row in m.iter_mut().take(r).skip(k) {
                row[j] = (row[j] - factor * row[k] % modulus).rem_euclid(modulus);
            }
        }
    }
    length
}

/// Both sides of `lg coker(F^2 - 1) = lg coker(F - 1) + lg coker(-F - 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Additivity {
    pub lhs: u32,
    pub rhs_plus: u32,
    pub rhs_minus: u32,
}

impl Additivity {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs_plus + self.rhs_minus
    }
}

/// The unramified quadratic restriction model: F over the base, F^2 over the
/// quadratic extension and -F on the twist.
pub fn verify_restriction_additivity(m: &FiniteFrobeniusModule, cap: u128) -> Additivity {
    let method = m.method(cap);
    Additivity {
        lhs: m.cokernel_length(&m.squared_minus_one(), method),
        rhs_plus: m.cokernel_length(&m.affine(1, -1), method),
        rhs_minus: m.cokernel_length(&m.affine(-1, -1), method),
    }
}

/// Tamagawa factors above p vanish when the mod-p representation is not
/// finite at p; nothing is claimed otherwise.
pub fn tam_p_zero_check(tate: &TatePeriodData) -> ClauseVerdict {
    const DESC: &str = "Tamagawa factors above p vanish";
    if tate.not_finite_at_p {
        ClauseVerdict::new(
            "tam_p_zero",
            DESC,
            Status::Holds,
            json!({ "ord_q": tate.ord_q, "not_finite_at_p": true }),
        )
    } else {
        ClauseVerdict::blocked("tam_p_zero", DESC, format!("finite at p (p | ord_q = {})", tate.ord_q))
    }
}

/// Random module over p ∈ {3, 5, 7} of order at most `cap`, with a random
/// well-defined invertible Frobenius.
pub fn random_module<R: Rng>(rng: &mut R, cap: u128) -> FiniteFrobeniusModule {
    let p = [3u64, 5, 7][rng.gen_range(0..3)];
    let max_len = log_p_floor(cap, p).max(1);
    let total = rng.gen_range(1..=max_len);
    let rank = rng.gen_range(1..=total.min(3)) as usize;
    // Split `total` into `rank` positive parts, then sort descending.
    let mut exponents = vec![1u32; rank];
    for _ in rank as u32..total {
        exponents[rng.gen_range(0..rank)] += 1;
    }
    exponents.sort_unstable_by(|a, b| b.cmp(a));
    loop {
        let f: Vec<Vec<i64>> = (0..rank)
            .map(|i| {
                (0..rank)
                    .map(|j| {
                        let shift = exponents[i].saturating_sub(exponents[j]);
                        let range = ipow(p, exponents[i] - shift) as i64;
                        ipow(p, shift) as i64 * rng.gen_range(0..range)
                    })
                    .collect()
            })
            .collect();
        if let Ok(m) = FiniteFrobeniusModule::new(p, exponents.clone(), f) {
            return m;
        }
    }
}

fn log_p_floor(n: u128, p: u64) -> u32 {
    let mut k = 0;
    let mut acc = 1u128;
    while acc * p as u128 <= n {
        acc *= p as u128;
        k += 1;
    }
    k
}

/// Outcome of [`run_suite`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub modules: usize,
    pub cap: u128,
    pub herbrand_failures: usize,
    pub additivity_failures: usize,
    pub smith_mismatches: usize,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.herbrand_failures == 0 && self.additivity_failures == 0 && self.smith_mismatches == 0
    }
}

/// Herbrand equality, additivity and Smith/enumeration agreement on `count`
/// seeded random modules.
pub fn run_suite(seed: u64, count: usize, cap: u128) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport {
        seed,
        modules: count,
        cap,
        herbrand_failures: 0,
        additivity_failures: 0,
        smith_mismatches: 0,
    };
    for _ in 0..count {
        let m = random_module(&mut rng, cap);
        if m.h0_length(cap) != m.h1_length(cap) {
            report.herbrand_failures += 1;
        }
        if !verify_restriction_additivity(&m, cap).holds() {
            report.additivity_failures += 1;
        }
        let enumerated = (m.h0_length_by(Method::Enumeration), m.h1_length_by(Method::Enumeration));
        let smith = (m.h0_length_by(Method::Smith), m.h1_length_by(Method::Smith));
        if enumerated != smith {
            report.smith_mismatches += 1;
        }
    }
    report
}
