//! Prime-field scalar arithmetic: deterministic 64-bit primality testing, a
//! fixed table of 62-bit primes for CRT work, and Montgomery multiplication
//! for the dense elimination hot loops.

use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

pub fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub fn addmod(a: u64, b: u64, p: u64) -> u64 {
    let s = a + b; // a, b < p < 2^63: no overflow
    if s >= p {
        s - p
    } else {
        s
    }
}

pub fn submod(a: u64, b: u64, p: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + p - b
    }
}

pub fn powmod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, p);
        }
        base = mulmod(base, base, p);
        exp >>= 1;
    }
    acc
}

/// Modular inverse for prime `p` (Fermat).
pub fn invmod(a: u64, p: u64) -> Result<u64> {
    let a = a % p;
    if a == 0 {
        return Err(Error::BadPrime { p, reason: "division by zero residue".into() });
    }
    Ok(powmod(a, p - 2, p))
}

/// Deterministic Miller-Rabin, valid for all u64.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub const PRIME_TABLE_LEN: usize = 256;

/// Fixed table: the first 256 primes above 2^61, ascending. Large enough for
/// every Hadamard bound this crate meets (256 * 61 > 15000 bits).
pub fn prime_table() -> &'static [u64] {
    static TABLE: OnceLock<Vec<u64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut primes = Vec::with_capacity(PRIME_TABLE_LEN);
        let mut cand = (1u64 << 61) + 1;
        while primes.len() < PRIME_TABLE_LEN {
            if is_prime_u64(cand) {
                primes.push(cand);
            }
            cand += 2;
        }
        primes
    })
}

/// Draw `count` distinct primes from the fixed table, order determined by
/// `seed`. The drawn list is what certificates record.
pub fn draw_primes(seed: u64, count: usize) -> Result<Vec<u64>> {
    if count > PRIME_TABLE_LEN {
        return Err(Error::NeedMorePrimes(format!(
            "{count} primes requested, table holds {PRIME_TABLE_LEN}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table: Vec<u64> = prime_table().to_vec();
    table.shuffle(&mut rng);
    table.truncate(count);
    Ok(table)
}

/// Montgomery context for odd modulus `p < 2^62`.
#[derive(Clone, Copy, Debug)]
pub struct Montgomery {
    pub p: u64,
    /// -p^{-1} mod 2^64
    ninv: u64,
    /// 2^128 mod p, to enter the Montgomery domain
    r2: u64,
}

impl Montgomery {
    pub fn new(p: u64) -> Result<Self> {
        if p < 3 || p % 2 == 0 || p >= (1 << 62) {
            return Err(Error::BadPrime { p, reason: "Montgomery arithmetic needs an odd modulus below 2^62".into() });
        }
        // Newton iteration doubles the number of correct low bits each round.
        let mut inv: u64 = p;
        for _ in 0..5 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(p.wrapping_mul(inv)));
        }
        debug_assert_eq!(p.wrapping_mul(inv), 1);
        let r = ((1u128 << 64) % p as u128) as u64;
        let r2 = mulmod(r, r, p);
        Ok(Montgomery { p, ninv: inv.wrapping_neg(), r2 })
    }

    #[inline]
    fn redc(&self, t: u128) -> u64 {
        let m = (t as u64).wrapping_mul(self.ninv);
        let t = ((t + m as u128 * self.p as u128) >> 64) as u64;
        if t >= self.p {
            t - self.p
        } else {
            t
        }
    }

    #[inline]
    pub fn to_mont(&self, a: u64) -> u64 {
        debug_assert!(a < self.p);
        self.redc(a as u128 * self.r2 as u128)
    }

    #[inline]
    pub fn from_mont(&self, a: u64) -> u64 {
        self.redc(a as u128)
    }

    /// Product of two Montgomery-domain values, in the Montgomery domain.
    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.redc(a as u128 * b as u128)
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        submod(a, b, self.p)
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        addmod(a, b, self.p)
    }

    /// Inverse of a Montgomery-domain value, in the Montgomery domain.
    pub fn inv(&self, a: u64) -> Result<u64> {
        let plain = self.from_mont(a);
        Ok(self.to_mont(invmod(plain, self.p)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality_spot_checks() {
        assert!(is_prime_u64(2));
        assert!(is_prime_u64(1000003));
        assert!(is_prime_u64((1 << 61) - 1)); // Mersenne
        assert!(!is_prime_u64(1));
        assert!(!is_prime_u64(1000001)); // 101 * 9901
        assert!(!is_prime_u64((1 << 61) + 1)); // 3 * 768614336404564651
    }

    #[test]
    fn prime_table_is_62_bit_and_sorted() {
        let t = prime_table();
        assert_eq!(t.len(), PRIME_TABLE_LEN);
        assert!(t.windows(2).all(|w| w[0] < w[1]));
        for &p in t {
            assert!(p > (1 << 61) && p < (1 << 62));
            assert!(is_prime_u64(p));
        }
    }

    #[test]
    fn draw_primes_is_seeded_and_distinct() {
        let a = draw_primes(42, 10).unwrap();
        let b = draw_primes(42, 10).unwrap();
        assert_eq!(a, b);
        let c = draw_primes(43, 10).unwrap();
        assert_ne!(a, c);
        let mut sorted = a.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 10);
        assert!(draw_primes(0, 10_000).is_err());
    }

    #[test]
    fn montgomery_matches_plain_arithmetic() {
        for &p in &[3u64, 5, 1000003, prime_table()[0]] {
            let mont = Montgomery::new(p).unwrap();
            let xs = [0u64, 1, 2, p / 2, p - 2, p - 1];
            for &a in &xs {
                for &b in &xs {
                    let am = mont.to_mont(a);
                    let bm = mont.to_mont(b);
                    assert_eq!(mont.from_mont(mont.mul(am, bm)), mulmod(a, b, p));
                    assert_eq!(mont.from_mont(mont.add(am, bm)), addmod(a, b, p));
                    assert_eq!(mont.from_mont(mont.sub(am, bm)), submod(a, b, p));
                }
            }
            for a in 1..20u64.min(p) {
                let inv = mont.inv(mont.to_mont(a)).unwrap();
                assert_eq!(mont.from_mont(mont.mul(inv, mont.to_mont(a))), 1);
            }
        }
        assert!(Montgomery::new(4).is_err());
        assert!(Montgomery::new(1 << 62).is_err());
    }
}
