//! Exact arithmetic for aliquot sequences: primality, budgeted
//! factorization, the divisor sums `sigma` and `s`, and drivers.

mod driver;
mod factor;
mod primes;

pub use driver::{divisors, divisors_of, Driver};
pub use factor::{FactorBudget, Factorization, Factorizer};
pub use primes::{baillie_psw, is_prime, is_prime_u64, Sieve};

use crate::error::{Error, Result};
use crate::natural::Natural;

/// Largest input accepted by [`aliquot_brute`].
pub const BRUTE_LIMIT: u64 = 10_000_000;

/// `s(n)` by direct enumeration of the divisor pairs `(d, n/d)` with
/// `d <= sqrt(n)`. Independent of the factorization path; test use only.
pub fn aliquot_brute(n: u64) -> Result<u64> {
    if !(2..=BRUTE_LIMIT).contains(&n) {
        return Err(Error::InvalidInput(format!("brute-force oracle needs 2 <= n <= 10^7, got {n}")));
    }
    let mut sum = 1u64;
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            sum += d;
            let q = n / d;
            if q != d {
                sum += q;
            }
        }
        d += 1;
    }
    Ok(sum)
}

/// `sigma` of a factored value.
pub fn sigma(f: &Factorization) -> Natural {
    f.sigma()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fz() -> Factorizer {
        Factorizer::new(FactorBudget::default()).unwrap()
    }

    #[test]
    fn brute_examples() {
        assert_eq!(aliquot_brute(6).unwrap(), 6);
        assert_eq!(aliquot_brute(100771).unwrap(), 9173);
        assert_eq!(aliquot_brute(12).unwrap(), 16);
        assert_eq!(aliquot_brute(2).unwrap(), 1);
        assert_eq!(aliquot_brute(4).unwrap(), 3);
        assert!(aliquot_brute(1).is_err());
        assert!(aliquot_brute(BRUTE_LIMIT + 1).is_err());
    }

    #[test]
    fn step_matches_brute_on_a_prefix() {
        let fz = fz();
        for n in 2..50_000u64 {
            assert_eq!(fz.aliquot_step(&Natural::from_u64(n)).unwrap(), aliquot_brute(n).unwrap());
        }
    }

    proptest! {
        #[test]
        fn sigma_is_multiplicative(a in 1u64..=10_000, b in 1u64..=10_000) {
            prop_assume!(num_integer::gcd(a, b) == 1);
            let fz = fz();
            let sab = fz.factorize(&Natural::from_u64(a * b)).unwrap().sigma();
            let sa = fz.factorize(&Natural::from_u64(a)).unwrap().sigma();
            let sb = fz.factorize(&Natural::from_u64(b)).unwrap().sigma();
            prop_assert_eq!(sab, &sa * &sb);
        }

        #[test]
        fn factorization_round_trips(n in 1u64..u64::MAX) {
            let f = fz().factorize(&Natural::from_u64(n)).unwrap();
            prop_assert!(f.is_valid());
            prop_assert_eq!(f.value(), &Natural::from_u64(n));
        }

        #[test]
        fn factorization_is_deterministic(n in 2u64..u64::MAX) {
            let a = fz().factorize(&Natural::from_u64(n)).unwrap();
            let b = fz().factorize(&Natural::from_u64(n)).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn step_matches_brute(n in 2u64..=BRUTE_LIMIT) {
            prop_assert_eq!(fz().aliquot_step(&Natural::from_u64(n)).unwrap(), aliquot_brute(n).unwrap());
        }
    }
}
