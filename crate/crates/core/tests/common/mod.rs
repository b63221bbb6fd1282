//! Independent oracles used by the integration tests. Nothing here calls
//! into the library's arithmetic.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

pub fn primes_below(n: u64) -> Vec<u64> {
    (2..=n).filter(|&k| (2..).take_while(|d| d * d <= k).all(|d| k % d != 0)).collect()
}

pub fn reduce(a: &BigInt, m: u64) -> u64 {
    a.mod_floor(&BigInt::from(m)).to_u64().unwrap()
}

pub fn powmod(b: u64, mut e: u64, m: u64) -> u64 {
    let (mut acc, mut b) = (1u128, b as u128 % m as u128);
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m as u128;
        }
        b = b * b % m as u128;
        e >>= 1;
    }
    acc as u64
}

/// Legendre symbol by Euler's criterion, odd prime `p`.
pub fn euler(a: u64, p: u64) -> i64 {
    let a = a % p;
    if a == 0 {
        return 0;
    }
    if powmod(a, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

/// `#E(F_ell)` by trying every pair (x, y), plus the point at infinity.
pub fn count_pairs(coeffs: &[BigInt], ell: u64) -> u64 {
    let a: Vec<u64> = coeffs.iter().map(|c| reduce(c, ell)).collect();
    let m = ell as u128;
    let mut n = 1;
    for x in 0..ell as u128 {
        let rhs = (x * x % m * x + a[1] as u128 * x % m * x + a[3] as u128 * x + a[4] as u128) % m;
        for y in 0..ell as u128 {
            let lhs = (y * y + a[0] as u128 * x % m * y + a[2] as u128 * y) % m;
            if lhs == rhs {
                n += 1;
            }
        }
    }
    n
}

/// `a(ell)` by completing the square and summing Euler symbols; brute
/// force at 2.
pub fn trace_by_euler(coeffs: &[BigInt], ell: u64) -> i64 {
    if ell == 2 {
        return 3 - count_pairs(coeffs, 2) as i64;
    }
    let a: Vec<u64> = coeffs.iter().map(|c| reduce(c, ell)).collect();
    let m = ell as u128;
    let (a1, a2, a3, a4, a6) = (a[0] as u128, a[1] as u128, a[2] as u128, a[3] as u128, a[4] as u128);
    let b2 = (a1 * a1 + 4 * a2) % m;
    let b4 = (a1 * a3 + 2 * a4) % m;
    let b6 = (a3 * a3 + 4 * a6) % m;
    let mut s = 0i64;
    for x in 0..m {
        let v = (4 * x % m * x % m * x + b2 * x % m * x + 2 * b4 * x + b6) % m;
        s += euler(v as u64, ell);
    }
    -s
}

pub fn vp(n: &BigInt, p: u64) -> Option<u32> {
    if n.is_zero() {
        return None;
    }
    let bp = BigInt::from(p);
    let mut n = n.clone();
    let mut v = 0;
    while n.is_multiple_of(&bp) {
        n /= &bp;
        v += 1;
    }
    Some(v)
}

/// Whether ell is inert in the field of discriminant `-d` (d > 0).
pub fn inert(d: u64, ell: u64) -> bool {
    if d.is_multiple_of(ell) {
        return false;
    }
    if ell == 2 {
        // -d ≡ 5 mod 8.
        return (8 - d % 8) % 8 == 5;
    }
    euler(ell - d % ell, ell) == -1
}

pub fn split(d: u64, ell: u64) -> bool {
    !d.is_multiple_of(ell) && !inert(d, ell)
}

/// `-d` is a fundamental discriminant.
pub fn fundamental(d: u64) -> bool {
    let squarefree = |n: u64| (2..).take_while(|k| k * k <= n).all(|k| !n.is_multiple_of(k * k));
    match (8 - d % 8) % 4 {
        1 => d > 1 && squarefree(d),
        0 => matches!((d / 4) % 4, 1 | 2) && squarefree(d / 4),
        _ => false,
    }
}
