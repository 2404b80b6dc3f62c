//! Drivers of even numbers.
//!
//! A driver of even `n` is a divisor `2^k·m` with `2^k ∥ n`, `m` odd,
//! `m | gcd(n, 2^(k+1) - 1)` and `2^(k-1) | sigma(m)`.

use super::factor::{Factorization, Factorizer};
use crate::error::{Error, Result};
use crate::natural::Natural;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Driver {
    pub driver: Natural,
    pub k: u32,
    pub m: Natural,
}

impl Factorizer {
    /// The driver of `n` with the largest odd part, if any.
    pub fn find_driver(&self, n: &Natural) -> Result<Option<Driver>> {
        Ok(self.qualifying_drivers(n)?.pop())
    }

    /// Every driver of `n`, ordered by increasing odd part.
    pub fn qualifying_drivers(&self, n: &Natural) -> Result<Vec<Driver>> {
        if n.is_odd() || n.is_zero() {
            return Err(Error::InvalidInput(format!("drivers need an even n >= 2, got {n}")));
        }
        let f = self.factorize(n)?;
        let k = f.factors()[0].1;
        let two_k = Natural::from_u64(2).pow(k);
        // m ranges over odd divisors of n that also divide 2^(k+1) - 1.
        let mersenne = &Natural::from_u64(2).pow(k + 1) - &Natural::ONE;
        let mut shared = Vec::new();
        for (p, e) in &f.factors()[1..] {
            let mut exp = 0;
            let mut power = p.clone();
            while exp < *e && divides(&power, &mersenne) {
                exp += 1;
                power = &power * p;
            }
            if exp > 0 {
                shared.push((p.clone(), exp));
            }
        }
        let required = Natural::from_u64(2).pow(k - 1);
        let mut drivers: Vec<Driver> = divisors(&shared)
            .into_iter()
            .filter_map(|m| {
                let sigma_m = self.factorize(&m).ok()?.sigma();
                divides(&required, &sigma_m).then(|| Driver { driver: &two_k * &m, k, m })
            })
            .collect();
        drivers.sort_by(|a, b| a.m.cmp(&b.m));
        Ok(drivers)
    }
}

fn divides(d: &Natural, n: &Natural) -> bool {
    match (d.to_u64(), n.to_u64()) {
        (Some(d), Some(n)) => n % d == 0,
        _ => {
            let (d, n) = (d.to_biguint(), n.to_biguint());
            (n % d) == num_bigint::BigUint::ZERO
        }
    }
}

/// All divisors of the number with the given prime-power decomposition.
pub fn divisors(prime_powers: &[(Natural, u32)]) -> Vec<Natural> {
    let mut out = vec![Natural::ONE];
    for (p, e) in prime_powers {
        let current = out.clone();
        let mut power = Natural::ONE;
        for _ in 0..*e {
            power = &power * p;
            out.extend(current.iter().map(|d| d * &power));
        }
    }
    out.sort();
    out
}

/// Divisors of a factored value, ascending.
pub fn divisors_of(f: &Factorization) -> Vec<Natural> {
    divisors(f.factors())
}
