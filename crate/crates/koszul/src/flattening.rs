//! Recursive Koszul flattenings: from a tensor `T` in `V_1 ⊗ … ⊗ V_d` and a
//! plan assigning each mode a role, build the sparse matrix of the map
//!
//! ```text
//! T^∧ : Λ^{p_1}V_{m_1} ⊗ … ⊗ Λ^{p_s}V_{m_s} ⊗ V_c^*
//!         → Λ^{p_1+1}V_{m_1} ⊗ … ⊗ Λ^{p_s+1}V_{m_s} ⊗ (passthrough modes) ⊗ V_out
//! ```
//!
//! which sends `w_1 ⊗ … ⊗ w_s ⊗ a*` to the sum over tensor entries
//! `T[t] ≠ 0` with `t_c` hit by `a*` of `(e_{t_{m_1}} ∧ w_1) ⊗ … ⊗ e_{t_out}`
//! scaled by `T[t]`. Rank-one tensors flatten to rank exactly
//! `∏ C(dim V_{m_i} - 1, p_i)`, so `rank(T^∧)` divided by that product
//! (rounded up) lower bounds the border rank of `T`.
//!
//! Bases on both sides are ordered lexicographically on concatenated index
//! tuples as in [`crate::exterior`]; the columns of the matrix are the
//! domain basis, rows the codomain basis, both 0-based internally.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num::{BigRational, Zero};
use rayon::prelude::*;

use crate::exterior::{
    binomial, lambda_basis, product_index, product_unindex, wedge_insert, BasisElement, Factor,
    ProductShape, WedgeIndex,
};
use crate::tensor::Tensor;
use crate::textio::{format_rational, parse_rational};
use crate::{Error, Result};

/// Per-mode roles for one flattening. Modes are 1-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatteningPlan {
    /// `(mode, p)` pairs: modes carrying a Koszul factor `Λ^p V → Λ^{p+1} V`.
    pub koszul: Vec<(usize, u32)>,
    /// Mode contracted against the dual space (the matrix domain).
    pub contraction: usize,
    /// Mode kept as the plain output factor, ordered last among the rows.
    pub output: usize,
}

impl FlatteningPlan {
    pub fn new(koszul: Vec<(usize, u32)>, contraction: usize, output: usize, dims: &[u32]) -> Result<Self> {
        let plan = FlatteningPlan { koszul, contraction, output };
        plan.validate_for(dims)?;
        Ok(plan)
    }

    /// The plan used for the order-`d` determinant and permanent tensors:
    /// Koszul factors `p_i = i` on modes `1..=d-2`, contraction on mode
    /// `d-1`, output on mode `d`.
    pub fn default_for(dims: &[u32]) -> Result<Self> {
        let d = dims.len();
        if d < 2 {
            return Err(Error::InvalidArgument("flattening needs order >= 2".into()));
        }
        let koszul = (1..=d.saturating_sub(2)).map(|i| (i, i as u32)).collect();
        FlatteningPlan::new(koszul, d - 1, d, dims)
    }

    pub fn validate_for(&self, dims: &[u32]) -> Result<()> {
        let d = dims.len();
        if d < 2 {
            return Err(Error::InvalidArgument("flattening needs order >= 2".into()));
        }
        let in_range = |m: usize| (1..=d).contains(&m);
        if !in_range(self.contraction) || !in_range(self.output) || self.contraction == self.output {
            return Err(Error::InvalidArgument(format!(
                "contraction mode {} and output mode {} must be distinct modes of an order-{d} tensor",
                self.contraction, self.output
            )));
        }
        let mut seen = vec![false; d + 1];
        seen[self.contraction] = true;
        seen[self.output] = true;
        for &(m, p) in &self.koszul {
            if !in_range(m) {
                return Err(Error::InvalidArgument(format!("Koszul mode {m} out of range 1..={d}")));
            }
            if seen[m] {
                return Err(Error::InvalidArgument(format!("mode {m} assigned twice")));
            }
            seen[m] = true;
            let dim = dims[m - 1];
            if p < 1 || p >= dim {
                return Err(Error::InvalidArgument(format!(
                    "Koszul exponent {p} on mode {m} must satisfy 1 <= p <= {}",
                    dim.saturating_sub(1)
                )));
            }
        }
        Ok(())
    }

    /// Modes that are neither Koszul, contraction nor output, ascending.
    pub fn passthrough(&self, d: usize) -> Vec<usize> {
        (1..=d)
            .filter(|&m| m != self.contraction && m != self.output && !self.koszul.iter().any(|&(k, _)| k == m))
            .collect()
    }

    /// `∏ C(dim V_{m_i} - 1, p_i)`: the flattening rank of a rank-one tensor.
    pub fn divisor(&self, dims: &[u32]) -> u64 {
        self.koszul
            .iter()
            .map(|&(m, p)| binomial(dims[m - 1] as u64 - 1, p as u64))
            .product()
    }

    /// Domain basis: `Λ^{p_1}V_{m_1} ⊗ … ⊗ Λ^{p_s}V_{m_s} ⊗ V_c^*`.
    pub fn column_shape(&self, dims: &[u32]) -> ProductShape {
        let mut factors: Vec<Factor> = self
            .koszul
            .iter()
            .map(|&(m, p)| Factor::Wedge { dim: dims[m - 1], power: p })
            .collect();
        factors.push(Factor::Plain { dim: dims[self.contraction - 1] });
        ProductShape::new(factors)
    }

    /// Codomain basis: `Λ^{p_i+1}` factors in plan order, then passthrough
    /// modes ascending, then the output mode.
    pub fn row_shape(&self, dims: &[u32]) -> ProductShape {
        let mut factors: Vec<Factor> = self
            .koszul
            .iter()
            .map(|&(m, p)| Factor::Wedge { dim: dims[m - 1], power: p + 1 })
            .collect();
        for m in self.passthrough(dims.len()) {
            factors.push(Factor::Plain { dim: dims[m - 1] });
        }
        factors.push(Factor::Plain { dim: dims[self.output - 1] });
        ProductShape::new(factors)
    }
}

/// `ceil(rank / divisor)`: the border-rank lower bound certified by a
/// flattening of the given rank.
pub fn border_bound(rank: u64, divisor: u64) -> u64 {
    assert!(divisor > 0, "divisor must be positive");
    rank.div_ceil(divisor)
}

/// Field tag for matrix serialization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixField {
    Rational,
    Prime(u64),
}

/// Sparse exact matrix in canonical form: no explicit zeros, entries keyed
/// `(row, col)` 0-based, iterated row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseMatrix {
    nrows: u64,
    ncols: u64,
    entries: BTreeMap<(u64, u64), BigRational>,
    /// Basis bookkeeping for matrices built by [`rkf_matrix`]; positional
    /// labels are recovered on demand via [`product_unindex`].
    pub col_shape: Option<ProductShape>,
    pub row_shape: Option<ProductShape>,
}

impl SparseMatrix {
    pub fn new(nrows: u64, ncols: u64) -> Self {
        SparseMatrix { nrows, ncols, entries: BTreeMap::new(), col_shape: None, row_shape: None }
    }

    pub fn nrows(&self) -> u64 {
        self.nrows
    }

    pub fn ncols(&self) -> u64 {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    fn check_pos(&self, r: u64, c: u64) -> Result<()> {
        if r >= self.nrows || c >= self.ncols {
            return Err(Error::InvalidArgument(format!(
                "position ({r}, {c}) outside {}x{} matrix",
                self.nrows, self.ncols
            )));
        }
        Ok(())
    }

    pub fn get(&self, r: u64, c: u64) -> BigRational {
        self.entries.get(&(r, c)).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn set(&mut self, r: u64, c: u64, val: BigRational) -> Result<()> {
        self.check_pos(r, c)?;
        if val.is_zero() {
            self.entries.remove(&(r, c));
        } else {
            self.entries.insert((r, c), val);
        }
        Ok(())
    }

    pub fn add_to(&mut self, r: u64, c: u64, val: &BigRational) -> Result<()> {
        self.check_pos(r, c)?;
        if val.is_zero() {
            return Ok(());
        }
        let slot = self.entries.entry((r, c)).or_insert_with(BigRational::zero);
        *slot += val;
        if slot.is_zero() {
            self.entries.remove(&(r, c));
        }
        Ok(())
    }

    /// Row-major iteration over nonzero entries.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64, &BigRational)> {
        self.entries.iter().map(|(&(r, c), v)| (r, c, v))
    }

    pub fn is_integer(&self) -> bool {
        self.entries.values().all(|v| num::One::is_one(v.denom()))
    }

    /// The submatrix on the given 0-based row and column positions, in the
    /// given order. Positions must be distinct.
    pub fn submatrix(&self, rows: &[u64], cols: &[u64]) -> Result<SparseMatrix> {
        let mut row_pos = BTreeMap::new();
        for (i, &r) in rows.iter().enumerate() {
            self.check_pos(r, 0)?;
            if row_pos.insert(r, i as u64).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate row {r}")));
            }
        }
        let mut col_pos = BTreeMap::new();
        for (j, &c) in cols.iter().enumerate() {
            self.check_pos(0, c)?;
            if col_pos.insert(c, j as u64).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate column {c}")));
            }
        }
        let mut out = SparseMatrix::new(rows.len() as u64, cols.len() as u64);
        for (&(r, c), v) in &self.entries {
            if let (Some(&i), Some(&j)) = (row_pos.get(&r), col_pos.get(&c)) {
                out.entries.insert((i, j), v.clone());
            }
        }
        Ok(out)
    }

    /// Serialize: `%%smat <rows> <cols> <nnz> <field>` header with `field`
    /// either `Q` or `Fp:<p>`, then 1-based `row col value` lines in
    /// row-major order.
    pub fn to_smat(&self, field: MatrixField) -> Result<String> {
        let field_str = match field {
            MatrixField::Rational => "Q".to_string(),
            MatrixField::Prime(p) => {
                for (r, c, v) in self.iter() {
                    let ok = num::One::is_one(v.denom())
                        && v.numer().sign() != num::bigint::Sign::Minus
                        && v.numer() < &num::BigInt::from(p);
                    if !ok {
                        return Err(Error::InvalidArgument(format!(
                            "entry ({r}, {c}) = {v} is not a reduced residue mod {p}"
                        )));
                    }
                }
                format!("Fp:{p}")
            }
        };
        let mut s = format!("%%smat {} {} {} {field_str}\n", self.nrows, self.ncols, self.nnz());
        for (r, c, v) in self.iter() {
            writeln!(s, "{} {} {}", r + 1, c + 1, format_rational(v)).unwrap();
        }
        Ok(s)
    }

    pub fn from_smat(text: &str) -> Result<(SparseMatrix, MatrixField)> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty matrix file".into()))?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        if toks.len() != 5 || toks[0] != "%%smat" {
            return Err(Error::Parse("matrix file must start with '%%smat rows cols nnz field'".into()));
        }
        let nrows: u64 = toks[1].parse().map_err(|e| Error::Parse(format!("bad row count: {e}")))?;
        let ncols: u64 = toks[2].parse().map_err(|e| Error::Parse(format!("bad col count: {e}")))?;
        let nnz: usize = toks[3].parse().map_err(|e| Error::Parse(format!("bad nnz: {e}")))?;
        let field = match toks[4] {
            "Q" => MatrixField::Rational,
            f => match f.strip_prefix("Fp:") {
                Some(p) => MatrixField::Prime(
                    p.parse().map_err(|e| Error::Parse(format!("bad field prime: {e}")))?,
                ),
                None => return Err(Error::Parse(format!("unknown field '{f}'"))),
            },
        };
        let mut m = SparseMatrix::new(nrows, ncols);
        for line in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(Error::Parse(format!("entry line has {} tokens, expected 3", toks.len())));
            }
            let r: u64 = toks[0].parse().map_err(|e| Error::Parse(format!("bad row: {e}")))?;
            let c: u64 = toks[1].parse().map_err(|e| Error::Parse(format!("bad col: {e}")))?;
            if r < 1 || c < 1 {
                return Err(Error::Parse("matrix entries are 1-based".into()));
            }
            let v = parse_rational(toks[2])?;
            if v.is_zero() {
                return Err(Error::Parse(format!("explicit zero at ({r}, {c})")));
            }
            if m.entries.insert((r - 1, c - 1), v).is_some() {
                return Err(Error::Parse(format!("duplicate entry at ({r}, {c})")));
            }
            m.check_pos(r - 1, c - 1)?;
        }
        if m.nnz() != nnz {
            return Err(Error::Parse(format!("header declares {nnz} entries, found {}", m.nnz())));
        }
        Ok((m, field))
    }
}

/// Tensor entries grouped by their contraction-mode index (1-based), the
/// layout used to stream matrix columns.
fn group_by_contraction<'t>(t: &'t Tensor, plan: &FlatteningPlan) -> Vec<Vec<(&'t [u32], &'t BigRational)>> {
    let dim_c = t.dims()[plan.contraction - 1] as usize;
    let mut groups: Vec<Vec<(&[u32], &BigRational)>> = vec![Vec::new(); dim_c];
    for (idx, val) in t.iter() {
        groups[idx[plan.contraction - 1] as usize - 1].push((idx.as_slice(), val));
    }
    groups
}

fn column_of(
    plan: &FlatteningPlan,
    passthrough: &[usize],
    row_shape: &ProductShape,
    groups: &[Vec<(&[u32], &BigRational)>],
    col_elem: &BasisElement,
) -> Result<Vec<(u64, BigRational)>> {
    let dual = col_elem.plains[0] as usize;
    let mut acc: BTreeMap<u64, BigRational> = BTreeMap::new();
    'entries: for &(idx, val) in &groups[dual - 1] {
        let mut sign = 1i64;
        let mut row_wedges = Vec::with_capacity(plan.koszul.len());
        for (k, &(m, _)) in plan.koszul.iter().enumerate() {
            match wedge_insert(idx[m - 1], &col_elem.wedges[k])? {
                None => continue 'entries,
                Some((s, u)) => {
                    sign *= s;
                    row_wedges.push(u);
                }
            }
        }
        let mut row_plains: Vec<u32> = passthrough.iter().map(|&m| idx[m - 1]).collect();
        row_plains.push(idx[plan.output - 1]);
        let row = product_index(row_shape, &BasisElement { wedges: row_wedges, plains: row_plains })?;
        let slot = acc.entry(row).or_insert_with(BigRational::zero);
        if sign < 0 {
            *slot -= val;
        } else {
            *slot += val;
        }
        if slot.is_zero() {
            acc.remove(&row);
        }
    }
    Ok(acc.into_iter().collect())
}

/// Entry-count guard: every tensor entry touches exactly `divisor` columns,
/// so the construction cost (and worst-case nnz) is `nnz(T) * divisor`.
const MAX_BUILD_ENTRIES: u128 = 250_000_000;

/// Build the full flattening matrix of `t` under `plan`.
///
/// Columns are generated independently (in parallel) and merged in order,
/// so the result is identical to a sequential build.
pub fn rkf_matrix(t: &Tensor, plan: &FlatteningPlan) -> Result<SparseMatrix> {
    plan.validate_for(t.dims())?;
    let cost = t.nnz() as u128 * plan.divisor(t.dims()) as u128;
    if cost > MAX_BUILD_ENTRIES {
        return Err(Error::TooLarge(format!(
            "explicit flattening would stream {cost} entries (limit {MAX_BUILD_ENTRIES}); \
             use the symmetry-based path for this size"
        )));
    }
    let col_shape = plan.column_shape(t.dims());
    let row_shape = plan.row_shape(t.dims());
    let passthrough = plan.passthrough(t.dims().len());
    let groups = group_by_contraction(t, plan);
    let ncols = col_shape.size();
    let columns: Vec<Vec<(u64, BigRational)>> = (0..ncols)
        .into_par_iter()
        .map(|c| {
            let elem = product_unindex(&col_shape, c)?;
            column_of(plan, &passthrough, &row_shape, &groups, &elem)
        })
        .collect::<Result<_>>()?;
    let mut m = SparseMatrix::new(row_shape.size(), ncols);
    for (c, col) in columns.into_iter().enumerate() {
        for (r, v) in col {
            m.entries.insert((r, c as u64), v);
        }
    }
    m.col_shape = Some(col_shape);
    m.row_shape = Some(row_shape);
    Ok(m)
}

/// A partially applied flattening: the classical flattening of a tensor with
/// some modes already upgraded to Koszul factors. Entries are kept as a map
/// keyed by the evolving domain/codomain labels; [`KoszulState::to_matrix`]
/// materializes the current matrix.
#[derive(Clone, Debug)]
pub struct KoszulState {
    dims: Vec<u32>,
    contraction: usize,
    output: usize,
    /// Koszul factors in application order.
    applied: Vec<(usize, u32)>,
    /// Remaining plain modes: ascending, output last.
    plain_modes: Vec<usize>,
    entries: BTreeMap<StateKey, BigRational>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct StateKey {
    col_wedges: Vec<Vec<u32>>,
    dual: u32,
    row_wedges: Vec<Vec<u32>>,
    plains: Vec<u32>,
}

impl KoszulState {
    /// The classical flattening `V_c^* → ⊗_{j≠c} V_j` of `t`, the zero-step
    /// starting point of the recursion.
    pub fn classical(t: &Tensor, contraction: usize, output: usize) -> Result<Self> {
        let d = t.dims().len();
        let probe = FlatteningPlan { koszul: Vec::new(), contraction, output };
        probe.validate_for(t.dims())?;
        let mut plain_modes: Vec<usize> =
            (1..=d).filter(|&m| m != contraction && m != output).collect();
        plain_modes.push(output);
        let mut entries = BTreeMap::new();
        for (idx, val) in t.iter() {
            let key = StateKey {
                col_wedges: Vec::new(),
                dual: idx[contraction - 1],
                row_wedges: Vec::new(),
                plains: plain_modes.iter().map(|&m| idx[m - 1]).collect(),
            };
            entries.insert(key, val.clone());
        }
        Ok(KoszulState { dims: t.dims().to_vec(), contraction, output, applied: Vec::new(), plain_modes, entries })
    }

    pub fn applied(&self) -> &[(usize, u32)] {
        &self.applied
    }

    /// Apply one Koszul factor `Λ^p V_mode → Λ^{p+1} V_mode` to a mode that
    /// is still plain (and is not the output mode).
    pub fn step(&self, mode: usize, p: u32) -> Result<KoszulState> {
        if mode == self.output {
            return Err(Error::InvalidArgument("cannot apply a Koszul factor to the output mode".into()));
        }
        let pos = self
            .plain_modes
            .iter()
            .position(|&m| m == mode)
            .ok_or_else(|| Error::InvalidArgument(format!("mode {mode} is not available for a Koszul step")))?;
        let dim = self.dims[mode - 1];
        if p < 1 || p >= dim {
            return Err(Error::InvalidArgument(format!(
                "Koszul exponent {p} on mode {mode} must satisfy 1 <= p <= {}",
                dim - 1
            )));
        }
        let basis = lambda_basis(dim, p)?;
        let cost = self.entries.len() as u128 * basis.len() as u128;
        if cost > MAX_BUILD_ENTRIES {
            return Err(Error::TooLarge(format!("Koszul step would stream {cost} entries")));
        }
        let mut entries: BTreeMap<StateKey, BigRational> = BTreeMap::new();
        for (key, val) in &self.entries {
            let t_m = key.plains[pos];
            for w in &basis {
                let Some((sign, u)) = wedge_insert(t_m, w)? else { continue };
                let mut col_wedges = key.col_wedges.clone();
                col_wedges.push(w.support().to_vec());
                let mut row_wedges = key.row_wedges.clone();
                row_wedges.push(u.support().to_vec());
                let mut plains = key.plains.clone();
                plains.remove(pos);
                let new_key = StateKey { col_wedges, dual: key.dual, row_wedges, plains };
                let add = if sign < 0 { -val.clone() } else { val.clone() };
                match entries.entry(new_key) {
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(add);
                    }
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        *e.get_mut() += add;
                        if e.get().is_zero() {
                            e.remove();
                        }
                    }
                }
            }
        }
        let mut plain_modes = self.plain_modes.clone();
        plain_modes.remove(pos);
        let mut applied = self.applied.clone();
        applied.push((mode, p));
        Ok(KoszulState {
            dims: self.dims.clone(),
            contraction: self.contraction,
            output: self.output,
            applied,
            plain_modes,
            entries,
        })
    }

    pub fn column_shape(&self) -> ProductShape {
        let mut factors: Vec<Factor> = self
            .applied
            .iter()
            .map(|&(m, p)| Factor::Wedge { dim: self.dims[m - 1], power: p })
            .collect();
        factors.push(Factor::Plain { dim: self.dims[self.contraction - 1] });
        ProductShape::new(factors)
    }

    pub fn row_shape(&self) -> ProductShape {
        let mut factors: Vec<Factor> = self
            .applied
            .iter()
            .map(|&(m, p)| Factor::Wedge { dim: self.dims[m - 1], power: p + 1 })
            .collect();
        for &m in &self.plain_modes {
            factors.push(Factor::Plain { dim: self.dims[m - 1] });
        }
        ProductShape::new(factors)
    }

    /// Materialize the current matrix.
    pub fn to_matrix(&self) -> Result<SparseMatrix> {
        let col_shape = self.column_shape();
        let row_shape = self.row_shape();
        let dims = &self.dims;
        let mut m = SparseMatrix::new(row_shape.size(), col_shape.size());
        for (key, val) in &self.entries {
            let col_elem = BasisElement {
                wedges: key
                    .col_wedges
                    .iter()
                    .zip(&self.applied)
                    .map(|(s, &(mode, _))| WedgeIndex::new(dims[mode - 1], s.clone()))
                    .collect::<Result<_>>()?,
                plains: vec![key.dual],
            };
            let row_elem = BasisElement {
                wedges: key
                    .row_wedges
                    .iter()
                    .zip(&self.applied)
                    .map(|(s, &(mode, _))| WedgeIndex::new(dims[mode - 1], s.clone()))
                    .collect::<Result<_>>()?,
                plains: key.plains.clone(),
            };
            let r = product_index(&row_shape, &row_elem)?;
            let c = product_index(&col_shape, &col_elem)?;
            m.set(r, c, val.clone())?;
        }
        m.col_shape = Some(col_shape);
        m.row_shape = Some(row_shape);
        Ok(m)
    }
}
