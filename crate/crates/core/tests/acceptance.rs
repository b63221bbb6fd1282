//! Acceptance suite. Runs each criterion in turn and prints one PASS/FAIL
//! line per criterion; exits nonzero if any fails.

mod common;

use std::collections::HashSet;
use std::panic;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use kolycheck::cohomology::{random_module, verify_restriction_additivity, FiniteFrobeniusModule, Method};
use kolycheck::ec::{
    conductor_and_global_data, local_minimal_model, tate_algorithm, trace_of_frobenius, KodairaType,
    LocalReductionData, ReductionClass, TraceCache, WeierstrassCurve, DEFAULT_POINT_COUNT_CAP,
};
use kolycheck::galois::{derive_clubs, ramification_set, Irreducibility, IrreducibilityStatus, ResidualCertificate};
use kolycheck::hypotheses::{gate_thm_main, ExternalInputs, InvariantBundle, Status, Verdict};
use kolycheck::padic::{ExtInt, PadicNumber};
use kolycheck::quadfield::QuadraticField;
use kolycheck::report::{parse_batch, run_batch, to_canonical_json, JobOptions};
use kolycheck::sieves::{sieve_admissible, sieve_kolyvagin, SieveContext};
use kolycheck::tate_period::{compute_tate_period, TatePeriodData, DEFAULT_PRECISION};

use common::*;

const MODULE_CAP: u128 = 15_625;
const SEED: u64 = 20_240_601;

fn big(n: i64) -> BigInt {
    BigInt::from(n)
}

fn within(start: Instant, budget_secs: u64) {
    let t = start.elapsed();
    assert!(t < Duration::from_secs(budget_secs), "took {t:?}, budget {budget_secs}s");
}

// Brute-force kernel and image sizes of a matrix acting on ⊕ Z/p^{e_i}.

fn elements(p: u64, e: &[u32]) -> Vec<Vec<i128>> {
    let mut out = vec![vec![]];
    for &ei in e {
        let m = (p as i128).pow(ei);
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..m).map(move |x| {
                    let mut w = v.clone();
                    w.push(x);
                    w
                })
            })
            .collect();
    }
    out
}

fn apply(a: &[Vec<i128>], x: &[i128], p: u64, e: &[u32]) -> Vec<i128> {
    (0..e.len())
        .map(|i| {
            let m = (p as i128).pow(e[i]);
            (0..e.len()).map(|j| a[i][j] * x[j]).sum::<i128>().rem_euclid(m)
        })
        .collect()
}

fn lg(n: usize, p: u64) -> u32 {
    let (mut n, mut k) = (n as u64, 0);
    while n > 1 {
        assert_eq!(n % p, 0);
        n /= p;
        k += 1;
    }
    k
}

/// `(lg ker A, lg coker A)`.
fn brute_ker_coker(a: &[Vec<i128>], p: u64, e: &[u32]) -> (u32, u32) {
    let all = elements(p, e);
    let mut kernel = 0;
    let mut image = HashSet::new();
    for x in &all {
        let y = apply(a, x, p, e);
        if y.iter().all(|&c| c == 0) {
            kernel += 1;
        }
        image.insert(y);
    }
    (lg(kernel, p), e.iter().sum::<u32>() - lg(image.len(), p))
}

fn affine(m: &FiniteFrobeniusModule, s: i128, c: i128) -> Vec<Vec<i128>> {
    let f = m.frobenius();
    (0..f.len())
        .map(|i| (0..f.len()).map(|j| s * f[i][j] as i128 + if i == j { c } else { 0 }).collect())
        .collect()
}

fn square_minus_one(m: &FiniteFrobeniusModule) -> Vec<Vec<i128>> {
    let f = affine(m, 1, 0);
    let r = f.len();
    (0..r)
        .map(|i| {
            (0..r)
                .map(|j| (0..r).map(|k| f[i][k] * f[k][j]).sum::<i128>() - if i == j { 1 } else { 0 })
                .collect()
        })
        .collect()
}

fn criterion_1() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for n in 0..200 {
        let m = random_module(&mut rng, MODULE_CAP);
        assert!(m.order() <= MODULE_CAP);
        let (h0, h1) = (m.h0_length(MODULE_CAP), m.h1_length(MODULE_CAP));
        assert_eq!(h0, h1, "module {n}: {m:?}");
        let oracle = brute_ker_coker(&affine(&m, 1, -1), m.p(), m.exponents());
        assert_eq!((h0, h1), oracle, "module {n}: {m:?}");
        assert_eq!((m.h0_length_by(Method::Smith), m.h1_length_by(Method::Smith)), oracle);
    }
    within(start, 10);
}

fn criterion_2() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    for n in 0..200 {
        let m = random_module(&mut rng, MODULE_CAP);
        let a = verify_restriction_additivity(&m, MODULE_CAP);
        assert!(a.holds(), "module {n}: {a:?}");
        let (p, e) = (m.p(), m.exponents());
        assert_eq!(a.lhs, brute_ker_coker(&square_minus_one(&m), p, e).1);
        assert_eq!(a.rhs_plus, brute_ker_coker(&affine(&m, 1, -1), p, e).1);
        assert_eq!(a.rhs_minus, brute_ker_coker(&affine(&m, -1, -1), p, e).1);
    }
    within(start, 10);
}

fn components(k: KodairaType) -> u32 {
    match k {
        KodairaType::I(0) => 1,
        KodairaType::I(n) => n,
        KodairaType::II => 1,
        KodairaType::III => 2,
        KodairaType::IV => 3,
        KodairaType::IStar(n) => 5 + n,
        KodairaType::IVStar => 7,
        KodairaType::IIIStar => 8,
        KodairaType::IIStar => 9,
    }
}

fn same_local(a: &LocalReductionData, b: &LocalReductionData) -> bool {
    (a.kodaira_type, a.tamagawa, a.conductor_exponent, a.ord_delta_min, a.reduction_class)
        == (b.kodaira_type, b.tamagawa, b.conductor_exponent, b.ord_delta_min, b.reduction_class)
}

fn check_local(curve: &WeierstrassCurve, ell: u64, d: &LocalReductionData) {
    let n = d.ord_delta_min;
    // Ogg's formula.
    assert_eq!(n, d.conductor_exponent + components(d.kodaira_type) - 1, "{curve} at {ell}: {d:?}");
    let (model, _) = local_minimal_model(curve, &big(ell as i64)).unwrap();
    assert_eq!(vp(model.discriminant(), ell), Some(n));
    match d.reduction_class {
        ReductionClass::Good => assert_eq!((n, d.conductor_exponent, d.tamagawa), (0, 0, 1)),
        ReductionClass::SplitMultiplicative | ReductionClass::NonsplitMultiplicative => {
            assert_eq!(d.kodaira_type, KodairaType::I(n));
            assert_eq!(d.conductor_exponent, 1);
            // a(ℓ) = ±1 distinguishes the two on the minimal model.
            let a = ell as i64 + 1 - count_pairs(model.coeffs(), ell) as i64;
            if d.reduction_class == ReductionClass::SplitMultiplicative {
                assert_eq!(a, 1, "{curve} at {ell}");
                assert_eq!(d.tamagawa, n as u64);
            } else {
                assert_eq!(a, -1, "{curve} at {ell}");
                assert_eq!(d.tamagawa, n.gcd(&2) as u64);
            }
        }
        ReductionClass::Additive => assert!(d.conductor_exponent >= 2),
    }
}

fn criterion_3() {
    let start = Instant::now();
    let range = -2i64..=2;
    let curves: Vec<[i64; 5]> = itertools::iproduct!(range.clone(), range.clone(), range.clone(), range.clone(), range)
        .map(|(a1, a2, a3, a4, a6)| [a1, a2, a3, a4, a6])
        .collect();
    assert_eq!(curves.len(), 3125);
    let checked: usize = curves
        .par_iter()
        .enumerate()
        .map(|(i, &a)| {
            let Ok(curve) = WeierstrassCurve::from_coeffs(a) else { return 0 };
            let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ i as u64);
            for ell in [2u64, 3, 5, 7] {
                let d = tate_algorithm(&curve, &big(ell as i64)).unwrap();
                check_local(&curve, ell, &d);
                for _ in 0..20 {
                    let [r, s, t] = [0; 3].map(|_| big(rng.gen_range(-6..=6)));
                    let u = big([1, 1, 2, 3, ell as i64][rng.gen_range(0..5)]);
                    let other = curve.rst_transform(&r, &s, &t).scale_up(&u);
                    let e = tate_algorithm(&other, &big(ell as i64)).unwrap();
                    assert!(same_local(&d, &e), "{curve} vs {other} at {ell}: {d:?} {e:?}");
                }
            }
            1
        })
        .sum();
    assert!(checked > 3000, "only {checked} nonsingular curves");
    within(start, 60);
}

fn criterion_4() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let mut curves = Vec::new();
    while curves.len() < 50 {
        let a = [
            rng.gen_range(0..=1),
            rng.gen_range(-1..=1),
            rng.gen_range(0..=1),
            rng.gen_range(-200..=200),
            rng.gen_range(-500..=500),
        ];
        if let Ok(c) = WeierstrassCurve::from_coeffs(a) {
            curves.push(c);
        }
    }
    let mut checked = 0;
    for c in &curves {
        for ell in primes_below(100) {
            if c.discriminant().is_multiple_of(&big(ell as i64)) {
                continue;
            }
            let a = trace_of_frobenius(c, ell, DEFAULT_POINT_COUNT_CAP).unwrap();
            assert_eq!(a, ell as i64 + 1 - count_pairs(c.coeffs(), ell) as i64, "{c} at {ell}");
            assert!(a * a <= 4 * ell as i64, "Hasse bound fails for {c} at {ell}");
            checked += 1;
        }
    }
    assert!(checked > 1000);
    within(start, 60);
}

/// Coefficients of `q j(q) = E4^3 / Π(1 - q^n)^24` by direct series
/// multiplication and inversion.
fn q_times_j(len: usize) -> Vec<BigInt> {
    let mul = |a: &[BigInt], b: &[BigInt]| -> Vec<BigInt> {
        let mut c = vec![BigInt::zero(); len];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate().take(len - i) {
                c[i + j] += x * y;
            }
        }
        c
    };
    let mut e4 = vec![BigInt::zero(); len];
    e4[0] = BigInt::one();
    for (n, c) in e4.iter_mut().enumerate().skip(1) {
        let sigma3: i64 = (1..=n as i64).filter(|d| n as i64 % d == 0).map(|d| d * d * d).sum();
        *c = big(240 * sigma3);
    }
    let mut prod = vec![BigInt::zero(); len];
    prod[0] = BigInt::one();
    for n in 1..len {
        let mut factor = vec![BigInt::zero(); len];
        factor[0] = BigInt::one();
        factor[n] = big(-1);
        for _ in 0..24 {
            prod = mul(&prod, &factor);
        }
    }
    let mut inv = vec![BigInt::zero(); len];
    inv[0] = BigInt::one();
    for k in 1..len {
        let s: BigInt = (1..=k).map(|i| &prod[i] * &inv[k - i]).sum();
        inv[k] = -s;
    }
    let e4_cubed = mul(&mul(&e4, &e4), &e4);
    mul(&e4_cubed, &inv)
}

fn criterion_5() {
    let start = Instant::now();
    let series = q_times_j(64);
    assert_eq!(series[1], big(744));
    assert_eq!(series[2], big(196_884));
    let mut instances = Vec::new();
    for p in [5u64, 7] {
        let mut found = 0;
        'search: for a4 in -12i64..=12 {
            for a6 in -12i64..=12 {
                for a in [[0, 0, 1, a4, a6], [1, -1, 0, a4, a6], [0, 1, 1, a4, a6]] {
                    let Ok(c) = WeierstrassCurve::from_coeffs(a) else { continue };
                    let d = tate_algorithm(&c, &big(p as i64)).unwrap();
                    if d.reduction_class.is_multiplicative() {
                        instances.push((c, p));
                        found += 1;
                        if found == 10 {
                            break 'search;
                        }
                    }
                }
            }
        }
    }
    assert_eq!(instances.len(), 20);
    for (c, p) in &instances {
        let p = *p;
        let t = compute_tate_period(c, p, DEFAULT_PRECISION).unwrap();
        let bp = BigInt::from(p);
        // -ord_p(j) from the input model, not the library's minimal model.
        let num = c.c4().pow(3);
        let minus_vj = vp(c.discriminant(), p).unwrap() as i64 - vp(&num, p).unwrap_or(0) as i64;
        assert_eq!(t.q.valuation(), ExtInt::Finite(minus_vj), "{c} at {p}");
        assert_eq!(t.ord_q as i64, minus_vj);
        let q = t.q.unit() * bp.pow(t.ord_q);
        // ord(F(q) Δ - q c4^3) >= 20 + ord(q) + ord(Δ) is ord(j(q) - j(E)) >= 20.
        let vdelta = vp(c.discriminant(), p).unwrap();
        let target = DEFAULT_PRECISION as u32 + t.ord_q + vdelta;
        let modulus = bp.pow(target + 1);
        assert!((series.len() as u32) * t.ord_q > target + 1);
        let mut fq = BigInt::zero();
        let mut power = BigInt::one();
        for b in &series {
            fq = (fq + b * &power).mod_floor(&modulus);
            power = (power * &q).mod_floor(&modulus);
        }
        let diff = (fq * c.discriminant() - &q * &num).mod_floor(&modulus);
        let v = vp(&diff, p).unwrap_or(target + 1);
        assert!(v >= target, "{c} at {p}: ord(j(q) - j) = {}", v as i64 - (t.ord_q + vdelta) as i64);
    }
    within(start, 60);
}

fn criterion_6() {
    let start = Instant::now();
    // log(1 + 5) = Σ (-1)^(k+1) 5^k / k modulo 5^4.
    let m = 625i64;
    let mut oracle = 0i64;
    for k in 1..40i64 {
        let (mut v, mut kk) = (0u32, k);
        while kk % 5 == 0 {
            kk /= 5;
            v += 1;
        }
        let shift = k as u32 - v;
        if shift >= 4 {
            continue;
        }
        let inv = (1..m).find(|x| (x * kk).rem_euclid(m) == 1).unwrap();
        let term = 5i64.pow(shift) * inv % m;
        oracle += if k % 2 == 1 { term } else { -term };
    }
    assert_eq!(oracle.rem_euclid(m), 555);
    let six = PadicNumber::from_integer(&big(6), 5, 20).unwrap();
    let log6 = six.log_iwasawa().unwrap();
    assert_eq!((log6.unit() * BigInt::from(5).pow(log6.valuation().finite().unwrap() as u32)).mod_floor(&big(m)), big(555));

    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    for p in [5u64, 7, 11] {
        let pp = PadicNumber::from_integer(&big(p as i64), p, 20).unwrap();
        assert!(pp.log_iwasawa().unwrap().is_zero());
        for a in 1..p {
            let w = PadicNumber::from_integer(&big(a as i64), p, 20).unwrap().teichmuller().unwrap();
            // ω^(p-1) = 1 independently of the log.
            let mut pow = w.clone();
            for _ in 1..p - 1 {
                pow = &pow * &w;
            }
            assert!((&pow - &PadicNumber::from_integer(&big(1), p, 20).unwrap()).is_zero());
            assert!(w.log_iwasawa().unwrap().is_zero(), "log ω({a}) at {p}");
        }
    }
    let modulus = BigInt::from(5u64).pow(40);
    for _ in 0..100 {
        let p = [5u64, 7, 11][rng.gen_range(0..3)];
        let draw = |rng: &mut ChaCha8Rng| loop {
            let x = BigInt::from(rng.gen::<u128>()).mod_floor(&modulus);
            if !x.is_multiple_of(&big(p as i64)) {
                return PadicNumber::from_integer(&x, p, 20).unwrap();
            }
        };
        let (x, y) = (draw(&mut rng), draw(&mut rng));
        let lhs = (&x * &y).log_iwasawa().unwrap();
        let rhs = &x.log_iwasawa().unwrap() + &y.log_iwasawa().unwrap();
        assert!((&lhs - &rhs).is_zero(), "log(xy) != log x + log y at {p}");
        assert!((&lhs - &rhs).abs_precision() >= 20);
    }
    within(start, 30);
}

fn criterion_7() {
    let start = Instant::now();
    let bound = 2000u64;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let discs: Vec<u64> = (3..200).filter(|&d| fundamental(d)).collect();
    let primes = primes_below(bound);
    let (mut total_k, mut total_a, mut triples) = (0, 0, 0);
    while triples < 10 {
        let a = [
            rng.gen_range(0..=1),
            rng.gen_range(-1..=1),
            rng.gen_range(0..=1),
            rng.gen_range(-50..=50),
            rng.gen_range(-50..=50),
        ];
        let Ok(curve) = WeierstrassCurve::from_coeffs(a) else { continue };
        let g = conductor_and_global_data(&curve).unwrap();
        let d = discs[rng.gen_range(0..discs.len())];
        let p = [5u64, 7, 11, 13][rng.gen_range(0..4)];
        if !g.conductor.gcd(&big(d as i64)).is_one() {
            continue;
        }
        triples += 1;
        let field = QuadraticField::new(&big(d as i64)).unwrap();
        let traces = TraceCache::new(g.minimal_model.clone(), DEFAULT_POINT_COUNT_CAP);
        let ctx = SieveContext { traces: &traces, conductor: &g.conductor, field: &field, p };
        let kol: Vec<(u64, i64, ExtInt)> =
            sieve_kolyvagin(&ctx, bound).unwrap().into_iter().map(|k| (k.ell, k.a_ell, k.index)).collect();
        let adm: Vec<(u64, i64)> = sieve_admissible(&ctx, bound).unwrap().into_iter().map(|a| (a.q, a.a_q)).collect();

        let mut want_k = Vec::new();
        let mut want_a = Vec::new();
        for &ell in &primes {
            if ell == p || d.is_multiple_of(ell) || g.conductor.is_multiple_of(&big(ell as i64)) || !inert(d, ell) {
                continue;
            }
            let a_ell = trace_by_euler(g.minimal_model.coeffs(), ell);
            let ord = |n: i64| if n == 0 { ExtInt::Infinity } else { ExtInt::Finite(vp(&big(n), p).unwrap() as i64) };
            if (ell + 1) % p == 0 && a_ell % p as i64 == 0 {
                want_k.push((ell, a_ell, ord(ell as i64 + 1).min(ord(a_ell))));
            }
            let q = ell as i64;
            if (q * q - 1) % p as i64 != 0 && ((q + 1) * (q + 1) - a_ell * a_ell) % p as i64 == 0 {
                want_a.push((ell, a_ell));
            }
        }
        assert_eq!(kol, want_k, "Kolyvagin primes for {curve}, p = {p}, D = {d}");
        assert_eq!(adm, want_a, "admissible primes for {curve}, p = {p}, D = {d}");
        total_k += kol.len();
        total_a += adm.len();
    }
    assert!(total_k > 0 && total_a > 0);
    within(start, 60);
}

fn mult(prime: i64, ord: u32, split: bool) -> LocalReductionData {
    LocalReductionData {
        prime: big(prime),
        kodaira_type: KodairaType::I(ord),
        reduction_class: if split {
            ReductionClass::SplitMultiplicative
        } else {
            ReductionClass::NonsplitMultiplicative
        },
        tamagawa: if split { ord as u64 } else { 2 - (ord as u64 % 2) },
        ord_delta_min: ord,
        conductor_exponent: 1,
        scaling_valuation: 0,
        non_minimal_input: false,
    }
}

fn additive(prime: i64) -> LocalReductionData {
    LocalReductionData {
        prime: big(prime),
        kodaira_type: KodairaType::II,
        reduction_class: ReductionClass::Additive,
        tamagawa: 1,
        ord_delta_min: 2,
        conductor_exponent: 2,
        scaling_valuation: 0,
        non_minimal_input: false,
    }
}

/// Primary inputs of the synthetic main-gate bundle; Ram is derived from
/// the local table as the pipeline does.
#[derive(Clone)]
struct Inputs {
    d: u64,
    local: Vec<LocalReductionData>,
    tate: Option<TatePeriodData>,
    irreducibility: IrreducibilityStatus,
    spade3_exclude_p: bool,
}

impl Inputs {
    fn bundle(&self) -> InvariantBundle {
        let p = 5;
        let ram = ramification_set(&self.local, p);
        let irreducibility = Irreducibility {
            status: self.irreducibility,
            witness: None,
            witness_trace: None,
            examined: 1,
        };
        let conductor = self
            .local
            .iter()
            .map(|l| l.prime.pow(l.conductor_exponent))
            .product();
        InvariantBundle {
            p,
            field: QuadraticField::new(&big(self.d as i64)).unwrap(),
            conductor,
            certificate: ResidualCertificate {
                clubs: derive_clubs(irreducibility.status, &ram, p),
                irreducibility,
                ram_set: ram,
                finite_at_p: self.tate.as_ref().map(|t| t.finite_at_p()),
                heart4_automatic: true,
            },
            local: self.local.clone(),
            tate: self.tate.clone(),
            tate_error: None,
            external: ExternalInputs::default(),
            spade3_exclude_p: self.spade3_exclude_p,
        }
    }
}

fn find_disc(split: &[u64], inert_at: &[u64]) -> u64 {
    (3..100_000)
        .find(|&d| {
            fundamental(d)
                && split.iter().all(|&l| common::split(d, l))
                && inert_at.iter().all(|&l| inert(d, l))
        })
        .expect("a discriminant with the required splitting")
}

fn tate(q: i64) -> TatePeriodData {
    TatePeriodData::from_period(PadicNumber::from_integer(&big(q), 5, 20).unwrap(), true).unwrap()
}

fn criterion_8() {
    let start = Instant::now();
    // p = 5, N+ = 5 * 7 * 11 (split), N- = 13 * 17 (inert, 5 | ord), Ram = {7, 11}.
    // 3 is an extra inert prime used to add N- factors.
    let base = Inputs {
        d: find_disc(&[5, 7, 11], &[13, 17, 3]),
        local: vec![mult(5, 1, true), mult(7, 1, true), mult(11, 1, true), mult(13, 5, false), mult(17, 10, false)],
        tate: Some(tate(30)),
        irreducibility: IrreducibilityStatus::CertifiedIrreducible,
        spade3_exclude_p: true,
    };
    let report = gate_thm_main(&base.bundle()).unwrap();
    assert_eq!(report.verdict, Verdict::Applies, "{:#?}", report.clauses);
    let ids: HashSet<&str> = report.conclusions.iter().map(|c| c.id.as_str()).collect();
    assert_eq!(ids, HashSet::from(["kappa_nonzero", "kappa_infinity_nonzero", "m_infinity_zero"]));
    let clause_ids: Vec<String> = report.clauses.iter().map(|c| c.clause_id.clone()).collect();

    let mutate = |f: &dyn Fn(&mut Inputs)| {
        let mut m = base.clone();
        f(&mut m);
        m
    };
    let matrix: Vec<(&str, Inputs, Status)> = vec![
        ("ThmEMain.pN", mutate(&|m| m.local[0] = additive(5)), Status::Fails),
        // 5 and 7 inert, 11 split: ν(N-) stays even and Ram still meets N-.
        ("ThmEMain.a", mutate(&|m| m.d = find_disc(&[11], &[5, 7, 13, 17])), Status::Fails),
        ("ThmEMain.b", mutate(&|m| m.irreducibility = IrreducibilityStatus::CertifiedReducible), Status::Fails),
        ("ThmEMain.b", mutate(&|m| m.irreducibility = IrreducibilityStatus::Inconclusive), Status::Inconclusive),
        // log_5(130 / 5) has valuation 2.
        ("ThmEMain.c", mutate(&|m| m.tate = Some(tate(130))), Status::Fails),
        ("ThmEMain.c", mutate(&|m| m.tate = None), Status::Inconclusive),
        ("spade.1", mutate(&|m| m.local.push(additive(3))), Status::Fails),
        ("spade.2", mutate(&|m| m.local[1] = mult(7, 5, true)), Status::Fails),
        ("spade.3", mutate(&|m| m.local[2] = additive(11)), Status::Fails),
        ("ThmEMain.d_parity", mutate(&|m| m.local.push(mult(3, 5, false))), Status::Fails),
    ];
    let covered: HashSet<&str> = matrix.iter().map(|(id, _, _)| *id).collect();
    assert_eq!(covered.len(), clause_ids.len(), "every clause has a mutation");

    for (target, inputs, want) in &matrix {
        let r = gate_thm_main(&inputs.bundle()).unwrap();
        for (before, after) in report.clauses.iter().zip(&r.clauses) {
            assert_eq!(before.clause_id, after.clause_id);
            if after.clause_id == *target {
                assert_eq!(after.status, *want, "{target}: {after:?}");
            } else {
                assert_eq!(after.status, Status::Holds, "mutating {target} moved {}: {after:?}", after.clause_id);
            }
        }
        let verdict = if *want == Status::Fails { Verdict::DoesNotApply } else { Verdict::Inconclusive };
        assert_eq!(r.verdict, verdict, "{target}");
        assert!(r.conclusions.is_empty());
    }
    within(start, 10);
}

fn batch_file() -> String {
    let curves: [[i64; 5]; 10] = [
        [0, -1, 1, -10, -20],
        [0, 0, 1, -1, 0],
        [1, 0, 1, 4, -6],
        [0, 1, 1, -2, 0],
        [1, -1, 0, -4, 4],
        [0, -1, 1, 0, 0],
        [1, 0, 0, -1, 0],
        [0, 0, 1, 0, -7],
        [1, 1, 1, -5, 2],
        [0, 1, 0, -1, 0],
    ];
    let mut jobs = Vec::new();
    for (i, c) in curves.iter().enumerate() {
        for (j, (p, d)) in [(5, 7), (7, 3), (5, 19), (11, 4), (13, 8)].iter().enumerate() {
            let external = if (i + j) % 3 == 0 {
                r#", "external": {"selmer_corank": 1, "analytic_rank": 1, "r_plus": 2, "r_minus": 1}"#
            } else {
                ""
            };
            jobs.push(format!(
                r#"  {{"curve": [{}], "p": {p}, "D": {d}, "options": {{"sieve_bound": 1500}}{external}}}"#,
                c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
            ));
        }
    }
    format!("[\n{}\n]\n", jobs.join(",\n"))
}

fn criterion_9() {
    let start = Instant::now();
    let text = batch_file();
    let run = |threads| {
        let rows = parse_batch(&text, &JobOptions::default()).unwrap();
        assert_eq!(rows.len(), 50);
        to_canonical_json(&run_batch(rows, Some(threads)))
    };
    let one = run(1);
    assert_eq!(one, run(1), "two single-thread runs differ");
    let many = run(8);
    assert_eq!(one, many, "1-thread and 8-thread runs differ");
    let parsed: serde_json::Value = serde_json::from_str(&one).unwrap();
    assert_eq!(parsed["reports"].as_array().unwrap().len(), 50);
    within(start, 120);
}

fn main() {
    let criteria: [(&str, fn()); 9] = [
        ("Herbrand suite: 200 random modules, h0 = h1", criterion_1),
        ("restriction additivity on 200 random modules", criterion_2),
        ("Tate algorithm on 3125 curves at 2, 3, 5, 7", criterion_3),
        ("point counts against brute force on 50 curves", criterion_4),
        ("Tate period reproduces j(E) on 20 instances", criterion_5),
        ("p-adic logarithm", criterion_6),
        ("sieves against a definitional filter", criterion_7),
        ("main gate clause isolation", criterion_8),
        ("determinism of batch reports", criterion_9),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(f);
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("PASS  {}. {name} ({secs:.2}s)", i + 1),
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("FAIL  {}. {name} ({secs:.2}s): {msg}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
