//! Exact rank and determinant computation over the rationals.
//!
//! Small determinants use fraction-free Bareiss elimination. Large integer
//! determinants are rebuilt from residues: compute mod enough 62-bit primes
//! to exceed twice the Hadamard bound, then lift by the Chinese remainder
//! theorem with a symmetric (signed) representative. Rank over Q uses
//! fraction-free elimination with column skipping, which keeps every
//! intermediate value an integer.

use num::{BigInt, BigRational, Integer, One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::flattening::SparseMatrix;
use crate::linalg::modp::{det_mod_p, PrimeFieldMatrix};
use crate::linalg::primes::{draw_primes, invmod, mulmod, PRIME_TABLE_LEN};
use crate::{Error, Result};

/// Largest square matrix accepted by [`det_bareiss`]; beyond this the
/// intermediate integer growth makes the residue route the right tool.
pub const DET_BAREISS_CAP: u64 = 600;

/// Largest dimension accepted by [`rank_rational`].
pub const RANK_RATIONAL_CAP: u64 = 4000;

/// Clear denominators row by row. Returns the integer matrix and the product
/// of the per-row scale factors (det of the original = det(scaled) / product).
fn scale_rows_to_integers(m: &SparseMatrix) -> (Vec<Vec<BigInt>>, BigInt) {
    let (nr, nc) = (m.nrows() as usize, m.ncols() as usize);
    let mut rows: Vec<Vec<(usize, BigRational)>> = vec![Vec::new(); nr];
    for (r, c, v) in m.iter() {
        rows[r as usize].push((c as usize, v.clone()));
    }
    let mut dense = vec![vec![BigInt::zero(); nc]; nr];
    let mut scale = BigInt::one();
    for (r, row) in rows.into_iter().enumerate() {
        let mut lcm = BigInt::one();
        for (_, v) in &row {
            lcm = lcm.lcm(v.denom());
        }
        for (c, v) in row {
            dense[r][c] = (v * BigRational::from_integer(lcm.clone())).to_integer();
        }
        scale *= lcm;
    }
    (dense, scale)
}

/// Exact determinant by fraction-free (Bareiss) elimination. Intended for
/// matrices up to [`DET_BAREISS_CAP`]; rational entries are handled by
/// clearing denominators per row first.
pub fn det_bareiss(m: &SparseMatrix) -> Result<BigRational> {
    if m.nrows() != m.ncols() {
        return Err(Error::ShapeMismatch(format!("determinant of {}x{} matrix", m.nrows(), m.ncols())));
    }
    if m.nrows() > DET_BAREISS_CAP {
        return Err(Error::TooLarge(format!(
            "fraction-free determinant capped at {DET_BAREISS_CAP}, got {}",
            m.nrows()
        )));
    }
    let n = m.nrows() as usize;
    if n == 0 {
        return Ok(BigRational::one());
    }
    let (mut a, scale) = scale_rows_to_integers(m);
    let mut sign = 1i32;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        let Some(pr) = (k..n).find(|&r| !a[r][k].is_zero()) else {
            return Ok(BigRational::zero());
        };
        if pr != k {
            a.swap(pr, k);
            sign = -sign;
        }
        let (top, below) = a.split_at_mut(k + 1);
        let pivot_row = &top[k];
        let piv = pivot_row[k].clone();
        let prev_ref = &prev;
        let update = |row: &mut Vec<BigInt>| {
            let lead = std::mem::take(&mut row[k]);
            if lead.is_zero() && row[k + 1..].iter().all(Zero::is_zero) {
                return;
            }
            for j in k + 1..n {
                let t = &piv * &row[j] - &lead * &pivot_row[j];
                row[j] = t / prev_ref;
            }
        };
        if below.len() >= 16 {
            below.par_iter_mut().for_each(update);
        } else {
            below.iter_mut().for_each(update);
        }
        prev = piv;
    }
    let mut det = a[n - 1][n - 1].clone();
    if sign < 0 {
        det = -det;
    }
    Ok(BigRational::new(det, scale))
}

/// Exact rank over Q via fraction-free elimination with column skipping.
pub fn rank_rational(m: &SparseMatrix) -> Result<u64> {
    if m.nrows() > RANK_RATIONAL_CAP || m.ncols() > RANK_RATIONAL_CAP {
        return Err(Error::TooLarge(format!(
            "exact rank capped at {RANK_RATIONAL_CAP} per side, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let (nr, nc) = (m.nrows() as usize, m.ncols() as usize);
    let (mut a, _) = scale_rows_to_integers(m);
    let mut rank = 0usize;
    let mut prev = BigInt::one();
    for col in 0..nc {
        if rank == nr {
            break;
        }
        let Some(pr) = (rank..nr).find(|&r| !a[r][col].is_zero()) else { continue };
        a.swap(pr, rank);
        let (top, below) = a.split_at_mut(rank + 1);
        let pivot_row = &top[rank];
        let piv = pivot_row[col].clone();
        let prev_ref = &prev;
        let update = |row: &mut Vec<BigInt>| {
            let lead = std::mem::take(&mut row[col]);
            if lead.is_zero() && row[col + 1..].iter().all(Zero::is_zero) {
                return;
            }
            for j in col + 1..nc {
                let t = &piv * &row[j] - &lead * &pivot_row[j];
                row[j] = t / prev_ref;
            }
        };
        if below.len() >= 16 {
            below.par_iter_mut().for_each(update);
        } else {
            below.iter_mut().for_each(update);
        }
        prev = piv;
        rank += 1;
    }
    Ok(rank as u64)
}

/// Hadamard bound on |det| for an integer matrix: the integer square root
/// (rounded up) of the product over rows of the squared row norms.
pub fn hadamard_bound(m: &SparseMatrix) -> Result<BigInt> {
    if m.nrows() != m.ncols() {
        return Err(Error::ShapeMismatch(format!("Hadamard bound of {}x{} matrix", m.nrows(), m.ncols())));
    }
    if !m.is_integer() {
        return Err(Error::InvalidArgument("Hadamard bound needs integer entries".into()));
    }
    let mut row_sumsq = vec![BigInt::zero(); m.nrows() as usize];
    for (r, _, v) in m.iter() {
        let n = v.numer();
        row_sumsq[r as usize] += n * n;
    }
    let mut prod = BigInt::one();
    for s in row_sumsq {
        if s.is_zero() {
            return Ok(BigInt::zero()); // a zero row forces det = 0
        }
        prod *= s;
    }
    let root = prod.sqrt();
    Ok(if &root * &root < prod { root + 1 } else { root })
}

/// Residues of an integer determinant at each prime, computed in parallel.
fn det_residues(m: &SparseMatrix, primes: &[u64]) -> Result<Vec<u64>> {
    primes.par_iter().map(|&p| det_mod_p(m, p)).collect()
}

/// Lift `x ≡ residues[i] (mod primes[i])` to the symmetric range
/// `(-P/2, P/2]` where `P` is the product of the primes.
pub fn crt_lift_symmetric(residues: &[u64], primes: &[u64]) -> Result<BigInt> {
    if residues.len() != primes.len() {
        return Err(Error::InvalidArgument("residue/prime count mismatch".into()));
    }
    let mut acc = BigInt::zero();
    let mut modulus = BigInt::one();
    for (&r, &p) in residues.iter().zip(primes) {
        let pb = BigInt::from(p);
        let acc_mod_p = acc.mod_floor(&pb).to_u64().expect("residue fits u64");
        let m_mod_p = modulus.mod_floor(&pb).to_u64().expect("residue fits u64");
        let diff = submod_u64(r, acc_mod_p, p);
        let t = mulmod(diff, invmod(m_mod_p, p)?, p);
        acc += &modulus * BigInt::from(t);
        modulus *= BigInt::from(p);
    }
    let half = &modulus >> 1;
    if acc > half {
        acc -= &modulus;
    }
    Ok(acc)
}

fn submod_u64(a: u64, b: u64, p: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + (p - b)
    }
}

/// Result of a residue-based determinant: the signed value and the primes
/// that witnessed it.
#[derive(Clone, Debug)]
pub struct CrtDet {
    pub det: BigInt,
    pub primes: Vec<u64>,
}

/// Exact determinant of an integer matrix from modular residues. Primes are
/// drawn in the order fixed by `seed` until their product exceeds twice the
/// Hadamard bound, which pins the symmetric lift to the true value.
pub fn det_crt(m: &SparseMatrix, seed: u64) -> Result<CrtDet> {
    if !m.is_integer() {
        return Err(Error::InvalidArgument("residue determinant needs integer entries".into()));
    }
    let bound = hadamard_bound(m)?;
    if bound.is_zero() {
        return Ok(CrtDet { det: BigInt::zero(), primes: Vec::new() });
    }
    let target: BigInt = bound << 1;
    let pool = draw_primes(seed, PRIME_TABLE_LEN)?;
    let mut primes = Vec::new();
    let mut prod = BigInt::one();
    for &p in &pool {
        primes.push(p);
        prod *= BigInt::from(p);
        if prod > target {
            break;
        }
    }
    if prod <= target {
        return Err(Error::NeedMorePrimes(format!(
            "need product of primes > 2 * Hadamard bound ({} bits), table supplies only {} bits",
            target.bits(),
            prod.bits()
        )));
    }
    let residues = det_residues(m, &primes)?;
    let det = crt_lift_symmetric(&residues, &primes)?;
    Ok(CrtDet { det, primes })
}

/// Recompute a residue determinant with a fixed prime list (certificate
/// replay). Fails if the primes cannot pin the value.
pub fn det_crt_with_primes(m: &SparseMatrix, primes: &[u64]) -> Result<BigInt> {
    if !m.is_integer() {
        return Err(Error::InvalidArgument("residue determinant needs integer entries".into()));
    }
    let bound = hadamard_bound(m)?;
    if bound.is_zero() {
        return Ok(BigInt::zero());
    }
    let target: BigInt = bound << 1;
    let mut prod = BigInt::one();
    for &p in primes {
        prod *= BigInt::from(p);
    }
    // The product must strictly exceed twice the bound to pin the lift.
    if prod <= target {
        return Err(Error::NeedMorePrimes(format!(
            "{} primes cover {} bits, need more than {} bits",
            primes.len(),
            prod.bits(),
            target.bits()
        )));
    }
    let residues = det_residues(m, primes)?;
    crt_lift_symmetric(&residues, primes)
}

/// Determinant residue mod one prime together with the rank seen during
/// elimination — used when a caller only needs a probabilistic check.
pub fn det_single_prime(m: &SparseMatrix, p: u64) -> Result<u64> {
    PrimeFieldMatrix::from_sparse(m, p)?.det()
}
