//! Shared text conventions: exact rationals as `num/den`, and a factored
//! display for integers whose prime factors are all small.

use num::bigint::Sign;
use num::{BigInt, BigRational, One, Signed, Zero};

use crate::{Error, Result};

/// `num/den` with `/den` omitted when the denominator is one.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let parse_int = |t: &str| -> Result<BigInt> {
        t.parse::<BigInt>()
            .map_err(|e| Error::Parse(format!("bad rational '{s}': {e}")))
    };
    match s.split_once('/') {
        None => Ok(BigRational::from_integer(parse_int(s)?)),
        Some((num, den)) => {
            let den = parse_int(den)?;
            if den.is_zero() {
                return Err(Error::Parse(format!("bad rational '{s}': zero denominator")));
            }
            Ok(BigRational::new(parse_int(num)?, den))
        }
    }
}

/// Factor `n` over the primes below 1000. Returns `None` if a cofactor
/// remains, otherwise the sorted list of `(prime, exponent)` pairs.
pub fn factor_small(n: &BigInt) -> Option<Vec<(u64, u32)>> {
    if n.is_zero() {
        return None;
    }
    let mut rem = n.abs();
    let mut factors = Vec::new();
    for p in 2u64..1000 {
        if !small_prime(p) {
            continue;
        }
        let bp = BigInt::from(p);
        let mut e = 0u32;
        while (&rem % &bp).is_zero() {
            rem /= &bp;
            e += 1;
        }
        if e > 0 {
            factors.push((p, e));
        }
        if rem.is_one() {
            return Some(factors);
        }
    }
    None
}

fn small_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Display an integer in factored form (`-2^1600 * 3^25`) when it factors
/// completely over the primes below 1000, decimal otherwise.
pub fn format_factored(n: &BigInt) -> String {
    if n.is_zero() {
        return "0".into();
    }
    match factor_small(n) {
        Some(factors) => {
            let sign = if n.sign() == Sign::Minus { "-" } else { "" };
            if factors.is_empty() {
                return format!("{sign}1");
            }
            let body = factors
                .iter()
                .map(|&(p, e)| if e == 1 { p.to_string() } else { format!("{p}^{e}") })
                .collect::<Vec<_>>()
                .join(" * ");
            format!("{sign}{body}")
        }
        None => n.to_string(),
    }
}

/// Parse the output of [`format_factored`] back into an integer.
pub fn parse_factored(s: &str) -> Result<BigInt> {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest.trim()),
        None => (false, s),
    };
    let mut acc = BigInt::one();
    if body.chars().any(|c| c == '*' || c == '^') {
        for part in body.split('*') {
            let part = part.trim();
            let (base, exp) = match part.split_once('^') {
                Some((b, e)) => (
                    b.trim()
                        .parse::<BigInt>()
                        .map_err(|e| Error::Parse(format!("bad factor '{part}': {e}")))?,
                    e.trim()
                        .parse::<u32>()
                        .map_err(|e| Error::Parse(format!("bad exponent '{part}': {e}")))?,
                ),
                None => (
                    part.parse::<BigInt>()
                        .map_err(|e| Error::Parse(format!("bad factor '{part}': {e}")))?,
                    1,
                ),
            };
            acc *= base.pow(exp);
        }
    } else {
        acc = body
            .parse::<BigInt>()
            .map_err(|e| Error::Parse(format!("bad integer '{s}': {e}")))?;
    }
    Ok(if neg { -acc } else { acc })
}
