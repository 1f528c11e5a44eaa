//! Search for square submatrices with a prescribed determinant.
//!
//! All searches run randomized elimination and exploit one fact: every row
//! operation adds a multiple of a pivot row to a later row, so the minor on
//! the chosen rows and columns equals the product of the pivots times the
//! sign of sorting them. Restricting which entries may pivot restricts what
//! the minor can be:
//!
//! - pivots of absolute value one certify a minor of exactly ±1;
//! - pivots that are signed powers of two (units of the dyadic rationals
//!   ℤ[1/2], the smallest ring containing the integers where such pivoting
//!   is closed) certify a minor of exactly ±2^k, with `k` the sum of the
//!   pivot exponents — a steering rule biases pivot choice so the sum lands
//!   on a requested exponent;
//! - unrestricted pivoting over F_p reaches minors with any attainable
//!   residue mod p; because the pivot products of a sparse matrix tend to
//!   cluster in few residue classes, a found minor is additionally rescaled
//!   toward the target by single row or column swaps priced with Cramer's
//!   rule.

use std::collections::{BTreeMap, BTreeSet};

use num::{BigInt, Signed, ToPrimitive};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::flattening::SparseMatrix;
use crate::linalg::exact::{det_crt, CrtDet};
use crate::linalg::modp::{det_mod_p, PrimeFieldMatrix};
use crate::linalg::primes::{addmod, invmod, mulmod, submod};
use crate::{Error, Result};

/// What the determinant of the sought submatrix must satisfy.
#[derive(Clone, Debug)]
pub enum DetTarget {
    /// Determinant ±1 over the integers.
    UnitAbs,
    /// Determinant exactly ±2^`exponent` over the integers.
    PowerOfTwoAbs { exponent: u32 },
    /// Determinant mod `p` contained in `residues` (nonzero values).
    ResidueIn { p: u64, residues: Vec<u64> },
    /// Any nonzero determinant mod `p`.
    NonzeroModP { p: u64 },
}

/// A located submatrix, rows and columns ascending.
#[derive(Clone, Debug)]
pub struct SubmatrixFound {
    pub rows: Vec<u64>,
    pub cols: Vec<u64>,
    /// Determinant of the submatrix mod `p` (mod-p searches).
    pub residue: Option<u64>,
    /// Exact determinant, independently recomputed (integer searches).
    pub exact_det: Option<BigInt>,
}

/// Sign of the permutation that sorts `seq` (entries distinct), via
/// inversion count.
fn sort_sign<T: Ord>(seq: &[T]) -> i64 {
    let mut inversions = 0u64;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

struct SparseRows<V: Copy> {
    rows: Vec<BTreeMap<u32, V>>,
    cols: Vec<BTreeSet<u32>>,
    nnz: usize,
}

impl<V: Copy> SparseRows<V> {
    fn new(nrows: usize, ncols: usize, triplets: impl Iterator<Item = (u32, u32, V)>) -> Self {
        let mut rows: Vec<BTreeMap<u32, V>> = vec![BTreeMap::new(); nrows];
        let mut cols: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); ncols];
        let mut nnz = 0;
        for (r, c, v) in triplets {
            rows[r as usize].insert(c, v);
            cols[c as usize].insert(r);
            nnz += 1;
        }
        SparseRows { rows, cols, nnz }
    }

    /// Columns with the smallest population, up to `k` of them.
    fn lightest_cols(&self, k: usize) -> Vec<u32> {
        let mut best: Vec<(usize, u32)> = Vec::with_capacity(k);
        for (c, set) in self.cols.iter().enumerate() {
            if set.is_empty() {
                continue;
            }
            let key = (set.len(), c as u32);
            if best.len() < k {
                best.push(key);
                best.sort();
            } else if key < best[k - 1] {
                best[k - 1] = key;
                best.sort();
            }
        }
        best.into_iter().map(|(_, c)| c).collect()
    }

    fn markowitz_score(&self, r: u32, c: u32) -> u64 {
        (self.rows[r as usize].len() as u64 - 1) * (self.cols[c as usize].len() as u64 - 1)
    }
}

/// One randomized unit-pivot elimination attempt over the integers.
/// Returns the pivot (row, col) sequence or None when stuck or overflowing.
fn unit_attempt(
    init: &[Vec<(u32, i128)>],
    ncols: usize,
    size: usize,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<(u32, u32)>> {
    let mut s = SparseRows::new(
        init.len(),
        ncols,
        init.iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r as u32, c, v))),
    );
    let mut pivots: Vec<(u32, u32)> = Vec::with_capacity(size);
    while pivots.len() < size {
        if s.nnz == 0 {
            return None;
        }
        // Unit entries in the lightest columns; widen to the whole matrix
        // if none of those carry a ±1.
        let mut candidates: Vec<(u32, u32)> = Vec::new();
        for wide in [false, true] {
            let cols: Vec<u32> = if wide {
                (0..s.cols.len() as u32).filter(|&c| !s.cols[c as usize].is_empty()).collect()
            } else {
                s.lightest_cols(12)
            };
            for c in cols {
                for &r in &s.cols[c as usize] {
                    if s.rows[r as usize][&c].unsigned_abs() == 1 {
                        candidates.push((r, c));
                    }
                }
            }
            if !candidates.is_empty() {
                break;
            }
        }
        if candidates.is_empty() {
            return None; // no unit pivot reachable from this state
        }
        let min_score = candidates.iter().map(|&(r, c)| s.markowitz_score(r, c)).min().unwrap();
        candidates.retain(|&(r, c)| s.markowitz_score(r, c) == min_score);
        let &(pr, pc) = candidates.choose(rng).expect("nonempty candidate set");
        let piv = s.rows[pr as usize][&pc]; // ±1
        let prow: Vec<(u32, i128)> = s.rows[pr as usize].iter().map(|(&c, &v)| (c, v)).collect();
        let targets: Vec<u32> = s.cols[pc as usize].iter().copied().filter(|&r| r != pr).collect();
        for r in targets {
            let f = s.rows[r as usize][&pc] * piv; // division by ±1
            for &(c, w) in &prow {
                let delta = f.checked_mul(w)?;
                match s.rows[r as usize].entry(c) {
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(delta.checked_neg()?);
                        s.cols[c as usize].insert(r);
                        s.nnz += 1;
                    }
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        let nv = e.get().checked_sub(delta)?;
                        if nv == 0 {
                            e.remove();
                            s.cols[c as usize].remove(&r);
                            s.nnz -= 1;
                        } else {
                            *e.get_mut() = nv;
                        }
                    }
                }
            }
        }
        for (&c, _) in &s.rows[pr as usize] {
            s.cols[c as usize].remove(&pr);
            s.nnz -= 1;
        }
        s.rows[pr as usize].clear();
        pivots.push((pr, pc));
    }
    Some(pivots)
}

/// A dyadic rational `m · 2^e` with `m` odd (never zero). Closed under the
/// row operations of an elimination whose pivots are all `±2^e`.
type Dyadic = (i128, i32);

/// Strip factors of two from `m`; None when the value is zero.
fn dy_norm(m: i128, e: i32) -> Option<Dyadic> {
    if m == 0 {
        return None;
    }
    let tz = m.trailing_zeros() as i32; // equals the 2-adic valuation, any sign
    Some((m >> tz, e + tz))
}

/// `a - b`, or `Some(None)` for zero; `None` signals mantissa overflow.
fn dy_sub(a: Dyadic, b: Dyadic) -> Option<Option<Dyadic>> {
    let (ma, ea) = a;
    let (mb, eb) = b;
    let e = ea.min(eb);
    let shift = |m: i128, d: i32| -> Option<i128> {
        if d == 0 {
            return Some(m);
        }
        if d >= 127 {
            return None;
        }
        m.checked_mul(1i128 << d)
    };
    let ma = shift(ma, ea - e)?;
    let mb = shift(mb, eb - e)?;
    Some(dy_norm(ma.checked_sub(mb)?, e))
}

/// One randomized elimination attempt over ℤ[1/2] pivoting only on entries
/// `±2^e`, steered so that the pivot exponents sum to `target_exp`. Returns
/// the pivot sequence when the steering succeeds.
fn dyadic_attempt(
    init: &[Vec<(u32, Dyadic)>],
    ncols: usize,
    size: usize,
    target_exp: i64,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<(u32, u32)>> {
    let mut s = SparseRows::new(
        init.len(),
        ncols,
        init.iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r as u32, c, v))),
    );
    let mut pivots: Vec<(u32, u32)> = Vec::with_capacity(size);
    let mut sum_exp: i64 = 0;
    while pivots.len() < size {
        if s.nnz == 0 {
            return None;
        }
        let mut candidates: Vec<(u32, u32, i32)> = Vec::new();
        for wide in [false, true] {
            let cols: Vec<u32> = if wide {
                (0..s.cols.len() as u32).filter(|&c| !s.cols[c as usize].is_empty()).collect()
            } else {
                s.lightest_cols(12)
            };
            for c in cols {
                for &r in &s.cols[c as usize] {
                    let (m, e) = s.rows[r as usize][&c];
                    if m.unsigned_abs() == 1 {
                        candidates.push((r, c, e));
                    }
                }
            }
            if !candidates.is_empty() {
                break;
            }
        }
        if candidates.is_empty() {
            return None; // no power-of-two pivot reachable from this state
        }
        // Steering: while the exponent budget is unmet, prefer pivots that
        // move the sum toward the target without overshooting; once met,
        // prefer exponent-neutral pivots. Fall back to anything otherwise.
        let deficit = target_exp - sum_exp;
        let preferred: Vec<&(u32, u32, i32)> = candidates
            .iter()
            .filter(|&&(_, _, e)| {
                let e = e as i64;
                if deficit > 0 {
                    e > 0 && e <= deficit
                } else if deficit < 0 {
                    e < 0 && e >= deficit
                } else {
                    e == 0
                }
            })
            .collect();
        let pool: Vec<(u32, u32, i32)> = if preferred.is_empty() {
            candidates.clone()
        } else {
            preferred.into_iter().copied().collect()
        };
        let min_score = pool.iter().map(|&(r, c, _)| s.markowitz_score(r, c)).min().unwrap();
        let pool: Vec<(u32, u32, i32)> =
            pool.into_iter().filter(|&(r, c, _)| s.markowitz_score(r, c) == min_score).collect();
        let &(pr, pc, pe) = pool.choose(rng).expect("nonempty candidate set");
        sum_exp += pe as i64;
        let (pm, _) = s.rows[pr as usize][&pc]; // ±1 mantissa
        let prow: Vec<(u32, Dyadic)> = s.rows[pr as usize].iter().map(|(&c, &v)| (c, v)).collect();
        let targets: Vec<u32> = s.cols[pc as usize].iter().copied().filter(|&r| r != pr).collect();
        for r in targets {
            let (em, ee) = s.rows[r as usize][&pc];
            let f: Dyadic = (em * pm, ee - pe); // entry / pivot, a dyadic unit multiple
            for &(c, (wm, we)) in &prow {
                let delta: Dyadic = (f.0.checked_mul(wm)?, f.1 + we);
                match s.rows[r as usize].entry(c) {
                    std::collections::btree_map::Entry::Vacant(en) => {
                        en.insert((delta.0.checked_neg()?, delta.1));
                        s.cols[c as usize].insert(r);
                        s.nnz += 1;
                    }
                    std::collections::btree_map::Entry::Occupied(mut en) => match dy_sub(*en.get(), delta)? {
                        Some(nv) => {
                            *en.get_mut() = nv;
                        }
                        None => {
                            en.remove();
                            s.cols[c as usize].remove(&r);
                            s.nnz -= 1;
                        }
                    },
                }
            }
        }
        for (&c, _) in &s.rows[pr as usize] {
            s.cols[c as usize].remove(&pr);
            s.nnz -= 1;
        }
        s.rows[pr as usize].clear();
        pivots.push((pr, pc));
    }
    if sum_exp == target_exp {
        Some(pivots)
    } else {
        None
    }
}

/// One randomized elimination attempt over F_p, taking the first `size`
/// pivots. Returns the pivot sequence and the running pivot product, or
/// None when the matrix runs out of entries first — which proves the rank
/// is below `size` regardless of pivot order.
fn modp_attempt(
    init: &[Vec<(u32, u64)>],
    ncols: usize,
    size: usize,
    p: u64,
    rng: &mut ChaCha8Rng,
) -> Option<(Vec<(u32, u32)>, u64)> {
    let mut s = SparseRows::new(
        init.len(),
        ncols,
        init.iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r as u32, c, v))),
    );
    let mut pivots: Vec<(u32, u32)> = Vec::with_capacity(size);
    let mut prod = 1u64;
    while pivots.len() < size {
        if s.nnz == 0 {
            return None;
        }
        let mut candidates: Vec<(u32, u32)> = Vec::new();
        for c in s.lightest_cols(12) {
            for &r in &s.cols[c as usize] {
                candidates.push((r, c));
            }
        }
        let min_score = candidates.iter().map(|&(r, c)| s.markowitz_score(r, c)).min().unwrap();
        candidates.retain(|&(r, c)| s.markowitz_score(r, c) == min_score);
        let &(pr, pc) = candidates.choose(rng).expect("nonempty candidate set");
        let piv = s.rows[pr as usize][&pc];
        prod = mulmod(prod, piv, p);
        let pinv = invmod(piv, p).expect("pivot nonzero");
        let prow: Vec<(u32, u64)> = s.rows[pr as usize].iter().map(|(&c, &v)| (c, v)).collect();
        let targets: Vec<u32> = s.cols[pc as usize].iter().copied().filter(|&r| r != pr).collect();
        for r in targets {
            let f = mulmod(s.rows[r as usize][&pc], pinv, p);
            for &(c, w) in &prow {
                let delta = mulmod(f, w, p);
                match s.rows[r as usize].entry(c) {
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(submod(0, delta, p));
                        s.cols[c as usize].insert(r);
                        s.nnz += 1;
                    }
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        let nv = submod(*e.get(), delta, p);
                        if nv == 0 {
                            e.remove();
                            s.cols[c as usize].remove(&r);
                            s.nnz -= 1;
                        } else {
                            *e.get_mut() = nv;
                        }
                    }
                }
            }
        }
        for (&c, _) in &s.rows[pr as usize] {
            s.cols[c as usize].remove(&pr);
            s.nnz -= 1;
        }
        s.rows[pr as usize].clear();
        pivots.push((pr, pc));
    }
    Some((pivots, prod))
}

/// Turn a pivot sequence into a sorted submatrix description with the
/// determinant sign corrected for the sorting permutations.
fn finish(pivots: Vec<(u32, u32)>) -> (Vec<u64>, Vec<u64>, i64) {
    let rows_seq: Vec<u32> = pivots.iter().map(|&(r, _)| r).collect();
    let cols_seq: Vec<u32> = pivots.iter().map(|&(_, c)| c).collect();
    let sign = sort_sign(&rows_seq) * sort_sign(&cols_seq);
    let mut rows: Vec<u64> = rows_seq.into_iter().map(u64::from).collect();
    let mut cols: Vec<u64> = cols_seq.into_iter().map(u64::from).collect();
    rows.sort_unstable();
    cols.sort_unstable();
    (rows, cols, sign)
}

/// Find a `size x size` submatrix whose determinant satisfies `target`.
/// Randomized with restarts; deterministic for a fixed `seed`.
pub fn find_det_submatrix(
    m: &SparseMatrix,
    size: u64,
    target: &DetTarget,
    seed: u64,
    max_attempts: u32,
) -> Result<SubmatrixFound> {
    if size > m.nrows() || size > m.ncols() {
        return Err(Error::InvalidArgument(format!(
            "requested {size} pivots in a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() > u32::MAX as u64 || m.ncols() > u32::MAX as u64 {
        return Err(Error::TooLarge("matrix exceeds the index range of the search".into()));
    }
    let size = size as usize;
    match target {
        DetTarget::UnitAbs => {
            if !m.is_integer() {
                return Err(Error::InvalidArgument("unit submatrix search needs integer entries".into()));
            }
            let mut rows: Vec<Vec<(u32, i128)>> = vec![Vec::new(); m.nrows() as usize];
            for (r, c, v) in m.iter() {
                let val = v.numer().to_i128().ok_or_else(|| {
                    Error::TooLarge(format!("entry at ({r}, {c}) exceeds the 128-bit search range"))
                })?;
                rows[r as usize].push((c as u32, val));
            }
            for attempt in 0..max_attempts {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt as u64));
                if let Some(pivots) = unit_attempt(&rows, m.ncols() as usize, size, &mut rng) {
                    // The pivots guarantee |det| = 1; recompute the signed
                    // value independently rather than trusting the invariant.
                    let (rows_s, cols_s, _) = finish(pivots);
                    let sub = m.submatrix(&rows_s, &cols_s)?;
                    let exact = det_crt(&sub, seed)?.det;
                    if exact.abs() != BigInt::from(1) {
                        return Err(Error::Internal(
                            "unit-pivot elimination produced a non-unit minor".into(),
                        ));
                    }
                    return Ok(SubmatrixFound {
                        rows: rows_s,
                        cols: cols_s,
                        residue: None,
                        exact_det: Some(exact),
                    });
                }
            }
            Err(Error::SearchExhausted {
                attempts: max_attempts as u64,
                context: format!("no {size} unit pivots found in a {}x{} matrix", m.nrows(), m.ncols()),
            })
        }
        DetTarget::PowerOfTwoAbs { exponent } => {
            if !m.is_integer() {
                return Err(Error::InvalidArgument(
                    "power-of-two submatrix search needs integer entries".into(),
                ));
            }
            let mut rows: Vec<Vec<(u32, Dyadic)>> = vec![Vec::new(); m.nrows() as usize];
            for (r, c, v) in m.iter() {
                let val = v.numer().to_i128().ok_or_else(|| {
                    Error::TooLarge(format!("entry at ({r}, {c}) exceeds the 128-bit search range"))
                })?;
                rows[r as usize].push((c as u32, dy_norm(val, 0).expect("stored entries are nonzero")));
            }
            for attempt in 0..max_attempts {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt as u64));
                if let Some(pivots) =
                    dyadic_attempt(&rows, m.ncols() as usize, size, *exponent as i64, &mut rng)
                {
                    // The pivots guarantee |det| = 2^exponent; recompute the
                    // signed value independently rather than trusting it.
                    let (rows_s, cols_s, _) = finish(pivots);
                    let sub = m.submatrix(&rows_s, &cols_s)?;
                    let exact = det_crt(&sub, seed)?.det;
                    if exact.abs() != BigInt::from(1) << *exponent {
                        return Err(Error::Internal(
                            "dyadic-pivot elimination produced a minor off the 2^k target".into(),
                        ));
                    }
                    return Ok(SubmatrixFound {
                        rows: rows_s,
                        cols: cols_s,
                        residue: None,
                        exact_det: Some(exact),
                    });
                }
            }
            Err(Error::SearchExhausted {
                attempts: max_attempts as u64,
                context: format!(
                    "no {size}x{size} minor of exactly ±2^{exponent} found in a {}x{} matrix",
                    m.nrows(),
                    m.ncols()
                ),
            })
        }
        DetTarget::ResidueIn { p, residues } => {
            if residues.iter().any(|&r| r == 0 || r >= *p) {
                return Err(Error::InvalidArgument("target residues must be nonzero and reduced".into()));
            }
            search_modp(m, size, *p, Some(residues), seed, max_attempts)
        }
        DetTarget::NonzeroModP { p } => search_modp(m, size, *p, None, seed, max_attempts),
    }
}

fn search_modp(
    m: &SparseMatrix,
    size: usize,
    p: u64,
    residues: Option<&Vec<u64>>,
    seed: u64,
    max_attempts: u32,
) -> Result<SubmatrixFound> {
    let reduced = PrimeFieldMatrix::from_sparse(m, p)?;
    let sparse = reduced.to_sparse();
    let mut rows: Vec<Vec<(u32, u64)>> = vec![Vec::new(); m.nrows() as usize];
    for (r, c, v) in sparse.iter() {
        rows[r as usize].push((c as u32, v.numer().to_u64().expect("reduced residue")));
    }
    for attempt in 0..max_attempts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt as u64));
        let Some((pivots, prod)) = modp_attempt(&rows, m.ncols() as usize, size, p, &mut rng) else {
            return Err(Error::SearchExhausted {
                attempts: attempt as u64 + 1,
                context: format!("matrix rank mod {p} is below the requested size {size}"),
            });
        };
        let (rows_s, cols_s, sign) = finish(pivots);
        let det = if sign == 1 { prod } else { submod(0, prod, p) };
        let ok = match residues {
            Some(set) => set.contains(&det),
            None => det != 0,
        };
        if ok {
            return Ok(SubmatrixFound { rows: rows_s, cols: cols_s, residue: Some(det), exact_det: None });
        }
        // The pivot product missed the target class; before restarting, try
        // to rescale the minor by swapping in one unused row or column.
        if let Some(set) = residues {
            for (r2, c2) in swap_adjust(&rows, m.ncols(), &rows_s, &cols_s, det, p, set) {
                let true_det = det_mod_p(&m.submatrix(&r2, &c2)?, p)?;
                if set.contains(&true_det) {
                    return Ok(SubmatrixFound {
                        rows: r2,
                        cols: c2,
                        residue: Some(true_det),
                        exact_det: None,
                    });
                }
            }
        }
    }
    Err(Error::SearchExhausted {
        attempts: max_attempts as u64,
        context: format!("no {size}-pivot submatrix hit the target residues mod {p}"),
    })
}

/// Dense Gauss-Jordan inverse mod `p`; None when singular.
fn dense_inverse_mod_p(w: &[Vec<u64>], p: u64) -> Option<Vec<Vec<u64>>> {
    let n = w.len();
    let mut a = w.to_vec();
    let mut inv: Vec<Vec<u64>> = (0..n)
        .map(|i| {
            let mut row = vec![0u64; n];
            row[i] = 1;
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| a[r][col] != 0)?;
        a.swap(col, piv);
        inv.swap(col, piv);
        let pinv = invmod(a[col][col], p).expect("nonzero pivot");
        for x in 0..n {
            a[col][x] = mulmod(a[col][x], pinv, p);
            inv[col][x] = mulmod(inv[col][x], pinv, p);
        }
        for r in 0..n {
            if r == col || a[r][col] == 0 {
                continue;
            }
            let f = a[r][col];
            for x in 0..n {
                a[r][x] = submod(a[r][x], mulmod(f, a[col][x], p), p);
                inv[r][x] = submod(inv[r][x], mulmod(f, inv[col][x], p), p);
            }
        }
    }
    Some(inv)
}

/// Candidate single-swap repairs of a nonsingular base minor whose
/// determinant `base_det` missed the target residues. By Cramer's rule,
/// replacing column `i` of the base submatrix `W` with an unused column `m`
/// multiplies the determinant by `(W^{-1} m)_i`, and replacing row `i` with
/// an unused row multiplies it by `(m^T W^{-1})_i`; scanning those factors
/// reaches residue classes the pivot products never visit. Index sorting
/// flips only the sign of the swapped minor, so candidates are emitted when
/// they hit the targets up to sign and the caller re-checks the exact value.
fn swap_adjust(
    rows: &[Vec<(u32, u64)>],
    ncols: u64,
    base_rows: &[u64],
    base_cols: &[u64],
    base_det: u64,
    p: u64,
    residues: &[u64],
) -> Vec<(Vec<u64>, Vec<u64>)> {
    let s = base_rows.len();
    let col_pos: BTreeMap<u64, usize> = base_cols.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let row_set: BTreeSet<u64> = base_rows.iter().copied().collect();
    let mut w = vec![vec![0u64; s]; s];
    let out_cols: Vec<u64> = (0..ncols).filter(|c| !col_pos.contains_key(c)).collect();
    let out_pos: BTreeMap<u64, usize> = out_cols.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut out_col_vecs = vec![vec![0u64; s]; out_cols.len()];
    for (wi, &r) in base_rows.iter().enumerate() {
        for &(c, v) in &rows[r as usize] {
            if let Some(&wj) = col_pos.get(&(c as u64)) {
                w[wi][wj] = v;
            } else if let Some(&oj) = out_pos.get(&(c as u64)) {
                out_col_vecs[oj][wi] = v;
            }
        }
    }
    let Some(winv) = dense_inverse_mod_p(&w, p) else {
        return Vec::new();
    };
    let hits = |d: u64| residues.contains(&d) || residues.contains(&submod(0, d, p));
    let mut found = Vec::new();
    for (oj, mj) in out_col_vecs.iter().enumerate() {
        for i in 0..s {
            let mut factor = 0u64;
            for k in 0..s {
                factor = addmod(factor, mulmod(winv[i][k], mj[k], p), p);
            }
            if factor != 0 && hits(mulmod(base_det, factor, p)) {
                let mut cols = base_cols.to_vec();
                cols[i] = out_cols[oj];
                cols.sort_unstable();
                found.push((base_rows.to_vec(), cols));
            }
        }
    }
    for k in 0..rows.len() as u64 {
        if row_set.contains(&k) {
            continue;
        }
        let mut mk = vec![0u64; s];
        for &(c, v) in &rows[k as usize] {
            if let Some(&wj) = col_pos.get(&(c as u64)) {
                mk[wj] = v;
            }
        }
        for i in 0..s {
            let mut factor = 0u64;
            for t in 0..s {
                factor = addmod(factor, mulmod(mk[t], winv[t][i], p), p);
            }
            if factor != 0 && hits(mulmod(base_det, factor, p)) {
                let mut new_rows = base_rows.to_vec();
                new_rows[i] = k;
                new_rows.sort_unstable();
                found.push((new_rows, base_cols.to_vec()));
            }
        }
    }
    found
}

/// Exact determinant of the submatrix on `rows x cols` via residue
/// reconstruction (integer matrices).
pub fn submatrix_det_exact(m: &SparseMatrix, rows: &[u64], cols: &[u64], seed: u64) -> Result<CrtDet> {
    det_crt(&m.submatrix(rows, cols)?, seed)
}

/// Determinant of the submatrix on `rows x cols` mod `p`.
pub fn submatrix_det_mod_p(m: &SparseMatrix, rows: &[u64], cols: &[u64], p: u64) -> Result<u64> {
    det_mod_p(&m.submatrix(rows, cols)?, p)
}
