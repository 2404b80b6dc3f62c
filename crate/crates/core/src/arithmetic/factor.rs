//! Budgeted integer factorization.
//!
//! Pipeline: strip powers of two, finish through the smallest-prime-factor
//! table whenever the cofactor falls inside the sieve, trial-divide by the
//! sieved primes, and split whatever composite remains with Brent's variant
//! of Pollard rho. The rho seed is derived from the number being split, so
//! the whole procedure is a deterministic function of `(n, budget)`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::primes::{baillie_psw, is_prime, is_prime_u64, mul_mod, Sieve};
use crate::error::{Error, Result};
use crate::natural::Natural;

/// Limits on the effort spent factoring a single value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FactorBudget {
    /// Sieve limit; primes up to this bound are used for trial division.
    pub trial_division_bound: u32,
    /// Rho iterations allowed for each composite cofactor.
    pub rho_iteration_cap: u64,
    /// Inputs with more decimal digits than this are refused.
    pub max_digits: u32,
}

impl Default for FactorBudget {
    fn default() -> Self {
        FactorBudget {
            trial_division_bound: 1_000_000,
            rho_iteration_cap: 10_000_000,
            max_digits: 110,
        }
    }
}

impl FactorBudget {
    pub fn validate(&self) -> Result<()> {
        if self.trial_division_bound < 2 {
            return Err(Error::InvalidBudget("trial_division_bound must be at least 2".into()));
        }
        if self.rho_iteration_cap == 0 {
            return Err(Error::InvalidBudget("rho_iteration_cap must be positive".into()));
        }
        if self.max_digits == 0 {
            return Err(Error::InvalidBudget("max_digits must be positive".into()));
        }
        Ok(())
    }
}

/// A value together with its prime-power decomposition, primes ascending.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Factorization {
    value: Natural,
    factors: Vec<(Natural, u32)>,
}

impl Factorization {
    /// Builds a factorization from prime powers in any order, merging repeats.
    /// The primes are trusted; use [`Factorization::is_valid`] to check them.
    pub fn from_prime_powers(mut factors: Vec<(Natural, u32)>) -> Self {
        factors.retain(|(_, e)| *e > 0);
        factors.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(Natural, u32)> = Vec::with_capacity(factors.len());
        for (p, e) in factors {
            match merged.last_mut() {
                Some((q, f)) if *q == p => *f += e,
                _ => merged.push((p, e)),
            }
        }
        let value = merged.iter().fold(Natural::ONE, |acc, (p, e)| &acc * &p.pow(*e));
        Factorization { value, factors: merged }
    }

    pub fn one() -> Self {
        Factorization { value: Natural::ONE, factors: Vec::new() }
    }

    pub fn value(&self) -> &Natural {
        &self.value
    }

    pub fn factors(&self) -> &[(Natural, u32)] {
        &self.factors
    }

    /// Primes strictly increasing, each prime, product equal to the value.
    pub fn is_valid(&self) -> bool {
        let increasing = self.factors.windows(2).all(|w| w[0].0 < w[1].0);
        let primes = self.factors.iter().all(|(p, e)| *e > 0 && is_prime(p));
        let product = self.factors.iter().fold(Natural::ONE, |acc, (p, e)| &acc * &p.pow(*e));
        increasing && primes && product == self.value
    }

    /// Sum of all divisors, as the product of `1 + p + ... + p^e`.
    pub fn sigma(&self) -> Natural {
        let mut small: Option<u128> = Some(1);
        for (p, e) in &self.factors {
            small = small.and_then(|acc| {
                let p = p.to_u64()? as u128;
                acc.checked_mul(geometric_sum_u128(p, *e)?)
            });
            if small.is_none() {
                break;
            }
        }
        if let Some(v) = small {
            return Natural::from_u128(v);
        }
        let mut acc = BigUint::one();
        for (p, e) in &self.factors {
            let p = p.to_biguint();
            let mut term = BigUint::one();
            let mut power = BigUint::one();
            for _ in 0..*e {
                power *= &p;
                term += &power;
            }
            acc *= term;
        }
        Natural::from_biguint(acc)
    }
}

fn geometric_sum_u128(p: u128, e: u32) -> Option<u128> {
    let mut term: u128 = 1;
    let mut power: u128 = 1;
    for _ in 0..e {
        power = power.checked_mul(p)?;
        term = term.checked_add(power)?;
    }
    Some(term)
}

impl fmt::Display for Factorization {
    /// `p^e·p^e·…` with exponent 1 left implicit; `1` for the empty product.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        for (i, (p, e)) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, "·")?;
            }
            if *e == 1 {
                write!(f, "{p}")?;
            } else {
                write!(f, "{p}^{e}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for Factorization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "1" {
            return Ok(Factorization::one());
        }
        let factors = s
            .split('·')
            .map(|part| match part.split_once('^') {
                Some((p, e)) => Ok((
                    p.parse()?,
                    e.parse().map_err(|_| Error::Parse(format!("bad exponent in {part:?}")))?,
                )),
                None => Ok((part.parse()?, 1)),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Factorization::from_prime_powers(factors))
    }
}

/// Trial division below this prime is cheap enough for word-sized values;
/// beyond it, a primality test plus rho beats continuing through the sieve.
const WORD_TRIAL_CUTOFF: u32 = 1 << 9;

fn shared_sieve(limit: u32) -> Arc<Sieve> {
    static SIEVES: OnceLock<Mutex<HashMap<u32, Arc<Sieve>>>> = OnceLock::new();
    let mut cache = SIEVES.get_or_init(Default::default).lock().expect("sieve cache poisoned");
    cache.entry(limit).or_insert_with(|| Arc::new(Sieve::new(limit))).clone()
}

/// Factorization under a fixed [`FactorBudget`], sharing one immutable sieve.
#[derive(Clone, Debug)]
pub struct Factorizer {
    budget: FactorBudget,
    sieve: Arc<Sieve>,
}

impl Factorizer {
    pub fn new(budget: FactorBudget) -> Result<Self> {
        budget.validate()?;
        Ok(Factorizer { sieve: shared_sieve(budget.trial_division_bound), budget })
    }

    pub fn budget(&self) -> &FactorBudget {
        &self.budget
    }

    pub fn sieve(&self) -> &Sieve {
        &self.sieve
    }

    fn check_size(&self, n: &Natural) -> Result<()> {
        if n.to_u64().is_some() && self.budget.max_digits >= 20 {
            return Ok(());
        }
        let digits = n.decimal_digits();
        if digits > self.budget.max_digits {
            return Err(Error::OversizeInput { digits, max_digits: self.budget.max_digits });
        }
        Ok(())
    }

    /// Complete factorization of `n >= 1`; `factorize(1)` is the empty product.
    pub fn factorize(&self, n: &Natural) -> Result<Factorization> {
        if n.is_zero() {
            return Err(Error::InvalidInput("cannot factor 0".into()));
        }
        self.check_size(n)?;
        let mut out = Vec::new();
        match n.to_u64() {
            Some(v) => {
                let mut words = Vec::new();
                self.factor_word(v, &mut words)?;
                out.extend(words.into_iter().map(|(p, e)| (Natural::from_u64(p), e)));
            }
            None => self.factor_big(n.to_biguint(), &mut out)?,
        }
        Ok(Factorization::from_prime_powers(out))
    }

    /// `s(n) = sigma(n) - n` for `n >= 2`.
    pub fn aliquot_step(&self, n: &Natural) -> Result<Natural> {
        if *n <= 1u64 {
            return Err(Error::InvalidInput(format!("aliquot step needs n >= 2, got {n}")));
        }
        if let Some(v) = n.to_u64() {
            if self.budget.max_digits < 20 {
                self.check_size(n)?;
            }
            return self.aliquot_step_word(v).map(Natural::from_u128);
        }
        let f = self.factorize(n)?;
        Ok(&f.sigma() - n)
    }

    /// Allocation-light step for word-sized inputs; the result can exceed 2^64.
    fn aliquot_step_word(&self, n: u64) -> Result<u128> {
        let mut factors: Vec<(u64, u32)> = Vec::with_capacity(12);
        self.factor_word(n, &mut factors)?;
        let mut sigma: u128 = 1;
        for &(p, e) in &factors {
            // sigma(n) < 8n for n < 2^64, so none of these overflow.
            sigma *= geometric_sum_u128(p as u128, e).expect("prime power below 2^64");
        }
        Ok(sigma - n as u128)
    }

    /// Pushes prime powers of `n` (unsorted, primes may repeat) onto `out`.
    pub(crate) fn factor_word(&self, mut n: u64, out: &mut Vec<(u64, u32)>) -> Result<()> {
        if n <= 1 {
            return Ok(());
        }
        let twos = n.trailing_zeros();
        if twos > 0 {
            out.push((2, twos));
            n >>= twos;
        }
        if n == 1 {
            return Ok(());
        }
        if self.sieve.covers(n) {
            self.factor_sieved(n as u32, out);
            return Ok(());
        }
        let cutoff = WORD_TRIAL_CUTOFF.min(self.sieve.limit());
        for &p in &self.sieve.primes()[1..] {
            if p > cutoff {
                break;
            }
            let p = p as u64;
            if p * p > n {
                out.push((n, 1));
                return Ok(());
            }
            if n % p == 0 {
                let mut e = 0;
                while n % p == 0 {
                    n /= p;
                    e += 1;
                }
                out.push((p, e));
                if n == 1 {
                    return Ok(());
                }
                if self.sieve.covers(n) {
                    self.factor_sieved(n as u32, out);
                    return Ok(());
                }
            }
        }
        self.split_word(n, out)
    }

    fn factor_sieved(&self, mut n: u32, out: &mut Vec<(u64, u32)>) {
        while n > 1 {
            let p = self.sieve.smallest_factor(n);
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p as u64, e));
        }
    }

    /// Factors a cofactor with no prime factors below the trial cutoff.
    fn split_word(&self, n: u64, out: &mut Vec<(u64, u32)>) -> Result<()> {
        if n == 1 {
            return Ok(());
        }
        if self.sieve.covers(n) {
            self.factor_sieved(n as u32, out);
            return Ok(());
        }
        if is_prime_u64(n) {
            out.push((n, 1));
            return Ok(());
        }
        let root = n.isqrt();
        if root * root == n {
            let mut inner = Vec::new();
            self.split_word(root, &mut inner)?;
            out.extend(inner.into_iter().map(|(p, e)| (p, 2 * e)));
            return Ok(());
        }
        match rho_word(n, self.budget.rho_iteration_cap) {
            Some(d) => {
                self.split_word(d, out)?;
                self.split_word(n / d, out)
            }
            None => Err(Error::FactorFailure { remaining_composite: Natural::from_u64(n) }),
        }
    }

    fn factor_big(&self, mut n: BigUint, out: &mut Vec<(Natural, u32)>) -> Result<()> {
        let twos = n.trailing_zeros().unwrap_or(0);
        if twos > 0 {
            out.push((Natural::from_u64(2), twos as u32));
            n >>= twos;
        }
        for &p in &self.sieve.primes()[1..] {
            if let Some(word) = n.to_u64() {
                let mut words = Vec::new();
                self.factor_word(word, &mut words)?;
                out.extend(words.into_iter().map(|(q, e)| (Natural::from_u64(q), e)));
                return Ok(());
            }
            if (&n % p).is_zero() {
                let mut e = 0;
                while (&n % p).is_zero() {
                    n /= p;
                    e += 1;
                }
                out.push((Natural::from(p), e));
            }
        }
        self.split_big(n, out)
    }

    fn split_big(&self, n: BigUint, out: &mut Vec<(Natural, u32)>) -> Result<()> {
        if let Some(word) = n.to_u64() {
            let mut words = Vec::new();
            self.split_word(word, &mut words)?;
            out.extend(words.into_iter().map(|(q, e)| (Natural::from_u64(q), e)));
            return Ok(());
        }
        if baillie_psw(&n) {
            out.push((Natural::from_biguint(n), 1));
            return Ok(());
        }
        match rho_big(&n, self.budget.rho_iteration_cap) {
            Some(d) => {
                let rest = &n / &d;
                self.split_big(d, out)?;
                self.split_big(rest, out)
            }
            None => Err(Error::FactorFailure { remaining_composite: Natural::from_biguint(n) }),
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

const RHO_BATCH: u64 = 128;

/// Brent's rho on a composite word; returns a proper factor or `None` once
/// `cap` iterations of the polynomial have been spent.
fn rho_word(n: u64, cap: u64) -> Option<u64> {
    let mut spent = 0u64;
    let mut salt = 0u64;
    while spent < cap {
        let seed = splitmix64(n ^ salt.wrapping_mul(0xD6E8_FEB8_6659_FD93));
        let c = 1 + seed % (n - 1);
        let f = |x: u64| {
            let sq = mul_mod(x, x, n);
            let s = sq as u128 + c as u128;
            (s % n as u128) as u64
        };
        let mut y = splitmix64(seed) % n;
        let (mut x, mut ys) = (y, y);
        let mut q = 1u64;
        let mut g = 1u64;
        let mut r = 1u64;
        'outer: while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            spent += r;
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                let batch = RHO_BATCH.min(r - k);
                for _ in 0..batch {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                spent += batch;
                g = q.gcd(&n);
                k += batch;
                if spent >= cap && g == 1 {
                    break 'outer;
                }
            }
            r *= 2;
        }
        if g == n || g == 0 {
            // The batch overshot: walk back one step at a time.
            loop {
                ys = f(ys);
                spent += 1;
                g = x.abs_diff(ys).gcd(&n);
                if g != 1 || spent >= cap {
                    break;
                }
            }
        }
        if g != 1 && g != n && g != 0 {
            return Some(g);
        }
        salt += 1;
    }
    None
}

fn rho_big(n: &BigUint, cap: u64) -> Option<BigUint> {
    let one = BigUint::one();
    let mut spent = 0u64;
    let mut salt = 0u64;
    let low = (n % u64::MAX).to_u64().unwrap_or(0);
    while spent < cap {
        let seed = splitmix64(low ^ salt.wrapping_mul(0xD6E8_FEB8_6659_FD93));
        let c = BigUint::from(seed) % n;
        let f = |x: &BigUint| (x * x + &c) % n;
        let mut y = BigUint::from(splitmix64(seed)) % n;
        let mut x = y.clone();
        let mut ys = y.clone();
        let mut q = one.clone();
        let mut g = one.clone();
        let mut r = 1u64;
        'outer: while g == one {
            x = y.clone();
            for _ in 0..r {
                y = f(&y);
            }
            spent += r;
            let mut k = 0;
            while k < r && g == one {
                ys = y.clone();
                let batch = RHO_BATCH.min(r - k);
                for _ in 0..batch {
                    y = f(&y);
                    let diff = if x > y { &x - &y } else { &y - &x };
                    q = q * diff % n;
                }
                spent += batch;
                g = q.gcd(n);
                k += batch;
                if spent >= cap && g == one {
                    break 'outer;
                }
            }
            r *= 2;
        }
        if g == *n || g.is_zero() {
            loop {
                ys = f(&ys);
                spent += 1;
                let diff = if x > ys { &x - &ys } else { &ys - &x };
                g = diff.gcd(n);
                if g != one || spent >= cap {
                    break;
                }
            }
        }
        if g != one && g != *n && !g.is_zero() {
            return Some(g);
        }
        salt += 1;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nat(v: u64) -> Natural {
        Natural::from_u64(v)
    }

    fn powers(f: &Factorization) -> Vec<(u64, u32)> {
        f.factors().iter().map(|(p, e)| (p.to_u64().unwrap(), *e)).collect()
    }

    fn default_factorizer() -> Factorizer {
        Factorizer::new(FactorBudget::default()).unwrap()
    }

    #[test]
    fn factorize_listed_examples() {
        let fz = default_factorizer();
        assert_eq!(powers(&fz.factorize(&nat(229441)).unwrap()), vec![(479, 2)]);
        assert_eq!(
            powers(&fz.factorize(&nat(38745)).unwrap()),
            vec![(3, 3), (5, 1), (7, 1), (41, 1)]
        );
        let one = fz.factorize(&Natural::ONE).unwrap();
        assert!(one.factors().is_empty());
        assert_eq!(one.sigma(), Natural::ONE);
    }

    #[test]
    fn sigma_examples() {
        let fz = default_factorizer();
        assert_eq!(fz.factorize(&nat(8)).unwrap().sigma(), nat(15));
        assert_eq!(fz.factorize(&nat(12)).unwrap().sigma(), nat(28));
    }

    #[test]
    fn aliquot_step_examples() {
        let fz = default_factorizer();
        assert_eq!(fz.aliquot_step(&nat(6)).unwrap(), nat(6));
        assert_eq!(fz.aliquot_step(&nat(220)).unwrap(), nat(284));
        assert_eq!(fz.aliquot_step(&nat(284)).unwrap(), nat(220));
        assert_eq!(fz.aliquot_step(&nat(12)).unwrap(), nat(16));
        assert!(matches!(fz.aliquot_step(&Natural::ONE), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn words_beyond_the_sieve() {
        let fz = default_factorizer();
        let cases: [(u64, Vec<(u64, u32)>); 4] = [
            (600851475143, vec![(71, 1), (839, 1), (1471, 1), (6857, 1)]),
            (1_000_003u64 * 1_000_033, vec![(1_000_003, 1), (1_000_033, 1)]),
            (4294967291u64 * 4294967279, vec![(4294967279, 1), (4294967291, 1)]),
            (1u64 << 63, vec![(2, 63)]),
        ];
        for (n, expect) in cases {
            let f = fz.factorize(&nat(n)).unwrap();
            assert_eq!(powers(&f), expect, "{n}");
            assert!(f.is_valid());
        }
    }

    #[test]
    fn big_values() {
        let fz = default_factorizer();
        // 2^67 - 1 = 193707721 * 761838257287
        let m67 = Natural::from_biguint((BigUint::one() << 67u32) - 1u32);
        let f = fz.factorize(&m67).unwrap();
        assert_eq!(powers(&f), vec![(193707721, 1), (761838257287, 1)]);
        // product of a sieve prime, a square and a 20-digit prime
        let p20: Natural = "18446744073709551629".parse().unwrap();
        let n = &(&nat(997) * &nat(1_000_003 * 1_000_003)) * &p20;
        let f = fz.factorize(&n).unwrap();
        assert!(f.is_valid());
        assert_eq!(f.factors().len(), 3);
        assert_eq!(f.factors()[2], (p20, 1));
        assert_eq!(f.factors()[1], (nat(1_000_003), 2));
    }

    #[test]
    fn budget_exhaustion_reports_the_cofactor() {
        let budget = FactorBudget { trial_division_bound: 2, rho_iteration_cap: 1, max_digits: 40 };
        let fz = Factorizer::new(budget).unwrap();
        let n = nat(4294967291u64 * 4294967279);
        match fz.factorize(&n) {
            Err(Error::FactorFailure { remaining_composite }) => assert_eq!(remaining_composite, n),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn oversize_inputs_are_refused() {
        let budget = FactorBudget { max_digits: 5, ..FactorBudget::default() };
        let fz = Factorizer::new(budget).unwrap();
        assert!(fz.factorize(&nat(99999)).is_ok());
        assert!(matches!(
            fz.factorize(&nat(100000)),
            Err(Error::OversizeInput { digits: 6, max_digits: 5 })
        ));
        assert!(matches!(fz.aliquot_step(&nat(123456)), Err(Error::OversizeInput { .. })));
    }

    #[test]
    fn invalid_budgets() {
        let bad = FactorBudget { trial_division_bound: 1, ..FactorBudget::default() };
        assert!(matches!(Factorizer::new(bad), Err(Error::InvalidBudget(_))));
        let bad = FactorBudget { rho_iteration_cap: 0, ..FactorBudget::default() };
        assert!(Factorizer::new(bad).is_err());
    }

    #[test]
    fn display_and_parse() {
        let fz = default_factorizer();
        let f = fz.factorize(&nat(38745)).unwrap();
        assert_eq!(f.to_string(), "3^3·5·7·41");
        assert_eq!("3^3·5·7·41".parse::<Factorization>().unwrap(), f);
        assert_eq!(Factorization::one().to_string(), "1");
    }

    #[test]
    fn small_sieve_still_factors_everything() {
        let budget = FactorBudget { trial_division_bound: 100, ..FactorBudget::default() };
        let small = Factorizer::new(budget).unwrap();
        let full = default_factorizer();
        for n in (1u64..20_000).chain(999_000_000..999_002_000) {
            assert_eq!(small.factorize(&nat(n)).unwrap(), full.factorize(&nat(n)).unwrap(), "{n}");
        }
    }
}
