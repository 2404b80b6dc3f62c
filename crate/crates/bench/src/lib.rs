//! Benchmark inputs shared by the criterion targets.

use aliquot_core::Natural;

/// Word-sized values of assorted shapes: smooth, semiprime, prime.
pub const WORD_INPUTS: [u64; 4] = [2_147_483_648 * 3 * 5 * 7, 1_000_000_007 * 998_244_353, 18_446_744_073_709_551_557, 56_365_247_896_588];

/// A 20-digit product of two 10-digit primes.
pub fn semiprime_20() -> Natural {
    &Natural::from_u64(9_999_999_967) * &Natural::from_u64(9_999_999_943)
}
