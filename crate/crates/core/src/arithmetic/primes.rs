//! Primality testing and the smallest-prime-factor sieve.
//!
//! Below 2^64 the Miller-Rabin test uses fixed witness sets that are known
//! to be deterministic for the whole range. Above 2^64 we run Baillie-PSW
//! (a strong base-2 test followed by a strong Lucas test with Selfridge
//! parameters). No Baillie-PSW pseudoprime is known, but none has been
//! ruled out either, so results above 2^64 are probable primes.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::natural::Natural;

/// Smallest-prime-factor table together with the list of primes it covers.
#[derive(Debug)]
pub struct Sieve {
    limit: u32,
    spf: Vec<u32>,
    primes: Vec<u32>,
}

impl Sieve {
    /// Builds the table for `0..=limit`.
    pub fn new(limit: u32) -> Self {
        let limit = limit.max(2);
        let mut spf = vec![0u32; limit as usize + 1];
        let mut primes = Vec::new();
        for i in 2..=limit as usize {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u32);
            }
            let p_i = spf[i];
            for &p in &primes {
                if p > p_i {
                    break;
                }
                let composite = i * p as usize;
                if composite > limit as usize {
                    break;
                }
                spf[composite] = p;
            }
        }
        Sieve { limit, spf, primes }
    }

    pub fn limit(&self) -> u32 {
        self.limit
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    /// Smallest prime factor of `n`, for `2 <= n <= limit`.
    #[inline]
    pub fn smallest_factor(&self, n: u32) -> u32 {
        self.spf[n as usize]
    }

    #[inline]
    pub fn covers(&self, n: u64) -> bool {
        n <= self.limit as u64
    }

    pub fn is_prime(&self, n: u32) -> bool {
        n >= 2 && self.spf[n as usize] == n
    }
}

#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    if m <= u32::MAX as u64 {
        a * b % m
    } else {
        ((a as u128 * b as u128) % m as u128) as u64
    }
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

const WITNESSES_32: [u64; 3] = [2, 7, 61];
// Deterministic for all n < 2^64 (Sinclair's set).
const WITNESSES_64: [u64; 7] = [2, 325, 9375, 28178, 450775, 9780504, 1795265022];

fn strong_probable_prime(n: u64, d: u64, s: u32, a: u64) -> bool {
    let a = a % n;
    if a == 0 {
        return true;
    }
    let mut x = pow_mod(a, d, n);
    if x == 1 || x == n - 1 {
        return true;
    }
    for _ in 1..s {
        x = mul_mod(x, x, n);
        if x == n - 1 {
            return true;
        }
    }
    false
}

/// Deterministic primality test for word-sized values.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    if n < 41 * 41 {
        return true;
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    let witnesses: &[u64] = if n <= u32::MAX as u64 { &WITNESSES_32 } else { &WITNESSES_64 };
    witnesses.iter().all(|&a| strong_probable_prime(n, d, s, a))
}

/// Primality of an arbitrary natural number.
pub fn is_prime(n: &Natural) -> bool {
    match n.to_u64() {
        Some(v) => is_prime_u64(v),
        None => baillie_psw(&n.to_biguint()),
    }
}

/// Baillie-PSW probable-prime test.
pub fn baillie_psw(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    if let Some(small) = n.to_u64() {
        if small < 1 << 20 {
            return is_prime_u64(small);
        }
    }
    for p in [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47] {
        if (n % p).is_zero() {
            return *n == BigUint::from(p);
        }
    }
    strong_base2(n) && strong_lucas(n)
}

fn strong_base2(n: &BigUint) -> bool {
    let one = BigUint::one();
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    let mut x = BigUint::from(2u32).modpow(&d, n);
    if x == one || x == n_minus_1 {
        return true;
    }
    for _ in 1..s {
        x = &x * &x % n;
        if x == n_minus_1 {
            return true;
        }
    }
    false
}

/// Jacobi symbol (a / n) for odd positive n.
pub(crate) fn jacobi(a: &BigUint, n: &BigUint) -> i32 {
    debug_assert!(n.is_odd());
    let mut a = a % n;
    let mut n = n.clone();
    let mut result = 1;
    while !a.is_zero() {
        let tz = a.trailing_zeros().unwrap_or(0);
        if tz % 2 == 1 {
            let r = (&n % 8u32).to_u32().unwrap();
            if r == 3 || r == 5 {
                result = -result;
            }
        }
        a >>= tz;
        if (&a % 4u32).to_u32() == Some(3) && (&n % 4u32).to_u32() == Some(3) {
            result = -result;
        }
        std::mem::swap(&mut a, &mut n);
        a %= &n;
    }
    if n.is_one() {
        result
    } else {
        0
    }
}

fn half_mod(x: BigUint, n: &BigUint) -> BigUint {
    if x.is_odd() {
        (x + n) >> 1
    } else {
        x >> 1
    }
}

/// Strong Lucas probable-prime test with Selfridge's method A parameters.
fn strong_lucas(n: &BigUint) -> bool {
    if n.sqrt().pow(2) == *n {
        return false;
    }
    // Find D in 5, -7, 9, -11, ... with (D / n) = -1.
    let mut magnitude = 5u64;
    let mut positive = true;
    let d_mod = loop {
        let d_abs = BigUint::from(magnitude);
        let d_mod = if positive { &d_abs % n } else { (n - (&d_abs % n)) % n };
        match jacobi(&d_mod, n) {
            -1 => break d_mod,
            0 if d_abs % n != BigUint::zero() => return false,
            _ => {}
        }
        magnitude += 2;
        positive = !positive;
    };
    // Q = (1 - D) / 4, taken modulo n.
    let d_signed: i128 = if positive { magnitude as i128 } else { -(magnitude as i128) };
    let q_signed = (1 - d_signed) / 4;
    let q_mod = if q_signed >= 0 {
        BigUint::from(q_signed as u128) % n
    } else {
        (n - (BigUint::from((-q_signed) as u128) % n)) % n
    };

    let n_plus_1 = n + 1u32;
    let s = n_plus_1.trailing_zeros().unwrap_or(0);
    let d = &n_plus_1 >> s;

    // P = 1 throughout.
    let mut u = BigUint::one();
    let mut v = BigUint::one();
    let mut qk = q_mod.clone();
    let bits = d.bits();
    for i in (0..bits - 1).rev() {
        u = &u * &v % n;
        v = (&v * &v + n * 2u32 - (&qk << 1) % n) % n;
        qk = &qk * &qk % n;
        if d.bit(i) {
            let new_u = half_mod((&u + &v) % n, n);
            let new_v = half_mod((&d_mod * &u + &v) % n, n);
            u = new_u;
            v = new_v;
            qk = &qk * &q_mod % n;
        }
    }
    if u.is_zero() || v.is_zero() {
        return true;
    }
    for _ in 1..s {
        v = (&v * &v + n * 2u32 - (&qk << 1) % n) % n;
        if v.is_zero() {
            return true;
        }
        qk = &qk * &qk % n;
    }
    false
}
