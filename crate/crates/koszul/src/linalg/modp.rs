//! Sparse and dense elimination over a prime field F_p.
//!
//! Ranks use sparse Gaussian elimination with approximate-Markowitz
//! pivoting (candidates drawn from the lowest-population columns, ties
//! broken by lowest column then row index), switching to a dense kernel
//! when fill-in makes that cheaper. Determinants go straight to the dense
//! kernel with Montgomery arithmetic.

use std::collections::{BTreeMap, BTreeSet};

use num::{BigInt, Integer, ToPrimitive};
use rayon::prelude::*;

use crate::flattening::SparseMatrix;
use crate::linalg::primes::{invmod, is_prime_u64, mulmod, submod, Montgomery};
use crate::{Error, Result};

/// A matrix over F_p, rows stored sparsely with ascending column indices
/// and values reduced to `1..p`.
#[derive(Clone, Debug)]
pub struct PrimeFieldMatrix {
    nrows: usize,
    ncols: usize,
    p: u64,
    rows: Vec<Vec<(u32, u64)>>,
}

fn check_modulus(p: u64) -> Result<()> {
    if p < 3 || p >= (1 << 62) || !is_prime_u64(p) {
        return Err(Error::BadPrime { p, reason: "need an odd prime below 2^62".into() });
    }
    Ok(())
}

pub fn bigint_mod_p(n: &BigInt, p: u64) -> u64 {
    n.mod_floor(&BigInt::from(p)).to_u64().expect("residue fits u64")
}

impl PrimeFieldMatrix {
    /// Reduce an exact rational matrix mod `p`. Fails if any denominator
    /// vanishes mod `p`.
    pub fn from_sparse(m: &SparseMatrix, p: u64) -> Result<Self> {
        check_modulus(p)?;
        if m.nrows() > u32::MAX as u64 || m.ncols() > u32::MAX as u64 {
            return Err(Error::TooLarge(format!("{}x{} exceeds the index range", m.nrows(), m.ncols())));
        }
        let mut rows: Vec<Vec<(u32, u64)>> = vec![Vec::new(); m.nrows() as usize];
        for (r, c, v) in m.iter() {
            let den = bigint_mod_p(v.denom(), p);
            if den == 0 {
                return Err(Error::BadPrime { p, reason: format!("entry ({r}, {c}) has denominator divisible by {p}") });
            }
            let num = bigint_mod_p(v.numer(), p);
            let res = mulmod(num, invmod(den, p)?, p);
            if res != 0 {
                rows[r as usize].push((c as u32, res));
            }
        }
        Ok(PrimeFieldMatrix { nrows: m.nrows() as usize, ncols: m.ncols() as usize, p, rows })
    }

    /// Build from signed integer triplets (deduplicated positions expected).
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        p: u64,
        triplets: impl IntoIterator<Item = (u32, u32, i64)>,
    ) -> Result<Self> {
        check_modulus(p)?;
        let mut rows: Vec<Vec<(u32, u64)>> = vec![Vec::new(); nrows];
        for (r, c, v) in triplets {
            if r as usize >= nrows || c as usize >= ncols {
                return Err(Error::InvalidArgument(format!("triplet ({r}, {c}) out of range")));
            }
            let res = v.rem_euclid(p as i64) as u64;
            if res != 0 {
                rows[r as usize].push((c, res));
            }
        }
        for row in &mut rows {
            row.sort_by_key(|&(c, _)| c);
            for w in row.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::InvalidArgument(format!("duplicate position in column {}", w[0].0)));
                }
            }
        }
        Ok(PrimeFieldMatrix { nrows, ncols, p, rows })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        let mut m = SparseMatrix::new(self.nrows as u64, self.ncols as u64);
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                m.set(r as u64, c as u64, num::BigRational::from_integer(BigInt::from(v))).unwrap();
            }
        }
        m
    }

    pub fn rank(&self) -> usize {
        sparse_rank(self.nrows, self.ncols, self.p, self.rows.clone())
    }

    /// Determinant via dense elimination; requires a square matrix.
    pub fn det(&self) -> Result<u64> {
        if self.nrows != self.ncols {
            return Err(Error::ShapeMismatch(format!("determinant of {}x{} matrix", self.nrows, self.ncols)));
        }
        const DENSE_CAP: usize = 30_000_000;
        if self.nrows * self.ncols > DENSE_CAP {
            return Err(Error::TooLarge(format!(
                "dense determinant of {}x{} exceeds the {DENSE_CAP}-cell cap",
                self.nrows, self.ncols
            )));
        }
        if self.nrows == 0 {
            return Ok(1 % self.p);
        }
        let mont = Montgomery::new(self.p)?;
        let mut dense: Vec<Vec<u64>> = vec![vec![0; self.ncols]; self.nrows];
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                dense[r][c as usize] = mont.to_mont(v);
            }
        }
        let (det, _) = dense_eliminate(&mut dense, mont, true)?;
        Ok(det)
    }
}

/// Dense row echelon over F_p in the Montgomery domain. Returns
/// `(det, rank)`; `det` is only meaningful when `need_det` (square input,
/// elimination aborts with 0 on rank deficiency).
fn dense_eliminate(a: &mut [Vec<u64>], mont: Montgomery, need_det: bool) -> Result<(u64, usize)> {
    let nrows = a.len();
    let ncols = if nrows == 0 { 0 } else { a[0].len() };
    let mut det = mont.to_mont(1);
    let mut negate = false;
    let mut rank = 0;
    for col in 0..ncols {
        if rank == nrows {
            break;
        }
        let Some(pivot_row) = (rank..nrows).find(|&r| a[r][col] != 0) else {
            if need_det {
                return Ok((0, rank));
            }
            continue;
        };
        if pivot_row != rank {
            a.swap(pivot_row, rank);
            negate = !negate;
        }
        let piv = a[rank][col];
        if need_det {
            det = mont.mul(det, piv);
        }
        let inv = mont.inv(piv)?;
        let (done, rest) = a.split_at_mut(rank + 1);
        let prow = &done[rank];
        let update = |row: &mut Vec<u64>| {
            let lead = row[col];
            if lead == 0 {
                return;
            }
            let f = mont.mul(lead, inv);
            for j in col..ncols {
                if prow[j] != 0 {
                    row[j] = mont.sub(row[j], mont.mul(f, prow[j]));
                }
            }
        };
        if rest.len() >= 128 {
            rest.par_iter_mut().for_each(update);
        } else {
            rest.iter_mut().for_each(update);
        }
        rank += 1;
    }
    let det = if negate { submod(0, det, mont.p) } else { det };
    Ok((mont.from_mont(det), rank))
}

/// Sparse elimination with approximate Markowitz pivoting. Consumes the row
/// data. Deterministic: candidate pivots come from the lowest-population
/// columns, ties broken by (column, row) index.
fn sparse_rank(nrows: usize, ncols: usize, p: u64, init: Vec<Vec<(u32, u64)>>) -> usize {
    let mut rows: Vec<BTreeMap<u32, u64>> = init
        .into_iter()
        .map(|r| r.into_iter().collect())
        .collect();
    let mut cols: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); ncols];
    let mut nnz: usize = 0;
    for (r, row) in rows.iter().enumerate() {
        for (&c, _) in row {
            cols[c as usize].insert(r as u32);
            nnz += 1;
        }
    }
    let mut rank = 0;
    let mut active_rows = rows.iter().filter(|r| !r.is_empty()).count();
    let mut active_cols = cols.iter().filter(|c| !c.is_empty()).count();
    loop {
        if nnz == 0 {
            return rank;
        }
        // Densify when fill-in has made the remaining block crowded.
        const DENSE_CELL_CAP: usize = 20_000_000;
        if active_rows * active_cols <= DENSE_CELL_CAP
            && nnz * 5 >= active_rows * active_cols
            && active_rows.min(active_cols) > 4
        {
            return rank + densify_and_finish(p, &rows, &cols);
        }
        // Candidate pivots from the 8 lowest-population nonempty columns.
        let mut cand: Vec<(usize, u32)> = Vec::with_capacity(8);
        for (c, set) in cols.iter().enumerate() {
            if set.is_empty() {
                continue;
            }
            let key = (set.len(), c as u32);
            if cand.len() < 8 {
                cand.push(key);
                cand.sort();
            } else if key < cand[7] {
                cand[7] = key;
                cand.sort();
            }
        }
        let mut best: Option<(u64, u32, u32)> = None; // (score, col, row)
        for &(clen, c) in &cand {
            for &r in &cols[c as usize] {
                let rlen = rows[r as usize].len();
                let score = (rlen as u64 - 1) * (clen as u64 - 1);
                let key = (score, c, r);
                if best.map_or(true, |b| key < b) {
                    best = Some(key);
                }
            }
        }
        let (_, pc, pr) = best.expect("nnz > 0 guarantees a pivot");
        // Eliminate column pc from every other row carrying it.
        let piv = rows[pr as usize][&pc];
        let pinv = invmod(piv, p).expect("pivot is a nonzero residue");
        let prow: Vec<(u32, u64)> = rows[pr as usize].iter().map(|(&c, &v)| (c, v)).collect();
        let targets: Vec<u32> = cols[pc as usize].iter().copied().filter(|&r| r != pr).collect();
        for r in targets {
            let lead = rows[r as usize][&pc];
            let f = mulmod(lead, pinv, p);
            for &(c, w) in &prow {
                let delta = mulmod(f, w, p);
                match rows[r as usize].entry(c) {
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(submod(0, delta, p));
                        cols[c as usize].insert(r);
                        nnz += 1;
                    }
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        let nv = submod(*e.get(), delta, p);
                        if nv == 0 {
                            e.remove();
                            cols[c as usize].remove(&r);
                            nnz -= 1;
                        } else {
                            *e.get_mut() = nv;
                        }
                    }
                }
            }
            if rows[r as usize].is_empty() {
                active_rows -= 1;
            }
        }
        // Retire the pivot row and column.
        for (&c, _) in &rows[pr as usize] {
            cols[c as usize].remove(&pr);
            nnz -= 1;
            if cols[c as usize].is_empty() {
                active_cols -= 1;
            }
        }
        rows[pr as usize].clear();
        active_rows -= 1;
        rank += 1;
        let _ = nrows;
    }
}

fn densify_and_finish(p: u64, rows: &[BTreeMap<u32, u64>], cols: &[BTreeSet<u32>]) -> usize {
    let live_rows: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.is_empty())
        .map(|(i, _)| i)
        .collect();
    let live_cols: Vec<u32> = cols
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_empty())
        .map(|(i, _)| i as u32)
        .collect();
    let col_pos: BTreeMap<u32, usize> = live_cols.iter().enumerate().map(|(j, &c)| (c, j)).collect();
    let mont = Montgomery::new(p).expect("modulus validated on construction");
    let mut dense: Vec<Vec<u64>> = vec![vec![0; live_cols.len()]; live_rows.len()];
    for (i, &r) in live_rows.iter().enumerate() {
        for (&c, &v) in &rows[r] {
            dense[i][col_pos[&c]] = mont.to_mont(v);
        }
    }
    let (_, rank) = dense_eliminate(&mut dense, mont, false).expect("dense rank cannot fail");
    rank
}

/// Rank of an exact matrix reduced mod `p`.
pub fn rank_mod_p(m: &SparseMatrix, p: u64) -> Result<usize> {
    Ok(PrimeFieldMatrix::from_sparse(m, p)?.rank())
}

/// Determinant of an exact square matrix reduced mod `p`.
pub fn det_mod_p(m: &SparseMatrix, p: u64) -> Result<u64> {
    PrimeFieldMatrix::from_sparse(m, p)?.det()
}
