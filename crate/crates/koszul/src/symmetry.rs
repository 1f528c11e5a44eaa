//! Symmetric-group structure of determinant/permanent flattening matrices.
//!
//! Relabeling the ambient basis vectors `e_1, …, e_n` by a permutation σ
//! sends each flattening-basis element to ± another basis element (wedge
//! factors must be re-sorted, which costs a sign). The permanent flattening
//! commutes with that action and the determinant flattening commutes up to
//! the sign of σ, so the flattening matrix splits into connected components
//! that the action permutes in whole blocks. The rank of the full matrix is
//! then `Σ (n!/|H_a|) · rank(component_a)` over one representative `a` per
//! orbit, where `H_a` is the stabilizer of the component — which lets the
//! big ranks be computed without ever materializing the full matrix.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::PathBuf;
use std::time::Instant;

use num::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::exterior::{product_index, product_unindex, BasisElement, ProductShape, WedgeIndex};
use crate::flattening::{rkf_matrix, FlatteningPlan, SparseMatrix};
use crate::linalg::modp::PrimeFieldMatrix;
use crate::linalg::primes::is_prime_u64;
use crate::tensor::{det_tensor, perm_tensor, Tensor};
use crate::{Error, Result};

/// A permutation of `{1, …, n}`, stored as the image tuple.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Permutation {
    images: Vec<u32>,
}

impl Permutation {
    pub fn identity(n: u32) -> Self {
        Permutation { images: (1..=n).collect() }
    }

    /// Build from the image tuple `(σ(1), …, σ(n))`; must be a bijection.
    pub fn from_images(images: Vec<u32>) -> Result<Self> {
        let n = images.len() as u32;
        let mut seen = vec![false; n as usize];
        for &v in &images {
            if v < 1 || v > n || seen[(v - 1) as usize] {
                return Err(Error::InvalidArgument(format!(
                    "images {images:?} are not a bijection on 1..={n}"
                )));
            }
            seen[(v - 1) as usize] = true;
        }
        Ok(Permutation { images })
    }

    /// The transposition swapping `a` and `b`.
    pub fn transposition(n: u32, a: u32, b: u32) -> Result<Self> {
        if a < 1 || b < 1 || a > n || b > n || a == b {
            return Err(Error::InvalidArgument(format!("invalid transposition ({a} {b}) on 1..={n}")));
        }
        let mut images: Vec<u32> = (1..=n).collect();
        images.swap((a - 1) as usize, (b - 1) as usize);
        Ok(Permutation { images })
    }

    pub fn n(&self) -> u32 {
        self.images.len() as u32
    }

    pub fn images(&self) -> &[u32] {
        &self.images
    }

    /// σ(i), 1-based.
    pub fn apply(&self, i: u32) -> u32 {
        self.images[(i - 1) as usize]
    }

    /// (self ∘ other)(i) = self(other(i)).
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation {
            images: (1..=self.n()).map(|i| self.apply(other.apply(i))).collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut images = vec![0u32; self.images.len()];
        for (i, &v) in self.images.iter().enumerate() {
            images[(v - 1) as usize] = i as u32 + 1;
        }
        Permutation { images }
    }

    /// +1 for even permutations, −1 for odd, via inversion count.
    pub fn sign(&self) -> i32 {
        let mut inversions = 0u32;
        for i in 0..self.images.len() {
            for j in i + 1..self.images.len() {
                if self.images[i] > self.images[j] {
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

    /// All of S_n in lexicographic order of image tuples; `n ≤ 8`.
    pub fn enumerate_all(n: u32) -> Result<Vec<Permutation>> {
        if n == 0 || n > 8 {
            return Err(Error::InvalidArgument(format!(
                "symmetric group enumeration supported for 1 <= n <= 8, got {n}"
            )));
        }
        let mut out = Vec::new();
        let mut current: Vec<u32> = (1..=n).collect();
        loop {
            out.push(Permutation { images: current.clone() });
            // next_permutation in lex order
            let Some(i) = (0..current.len() - 1).rev().find(|&i| current[i] < current[i + 1]) else {
                break;
            };
            let j = (i + 1..current.len()).rev().find(|&j| current[j] > current[i]).unwrap();
            current.swap(i, j);
            current[i + 1..].reverse();
        }
        Ok(out)
    }
}

/// Sort `values` ascending by insertion sort, returning the sign of the
/// sorting permutation. Values must be distinct.
fn sort_with_sign(values: &mut [u32]) -> i64 {
    let mut sign = 1i64;
    for i in 1..values.len() {
        let mut j = i;
        while j > 0 && values[j - 1] > values[j] {
            values.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    sign
}

/// Apply σ to every index of a flattening-basis element. Wedge supports are
/// re-sorted into canonical order; the returned sign collects the wedge
/// reorderings (±1).
pub fn act(sigma: &Permutation, x: &BasisElement) -> Result<(i64, BasisElement)> {
    let mut sign = 1i64;
    let mut wedges = Vec::with_capacity(x.wedges.len());
    for w in &x.wedges {
        if w.n() != sigma.n() {
            return Err(Error::ShapeMismatch(format!(
                "permutation on 1..={} applied to a wedge over 1..={}",
                sigma.n(),
                w.n()
            )));
        }
        let mut mapped: Vec<u32> = w.support().iter().map(|&i| sigma.apply(i)).collect();
        sign *= sort_with_sign(&mut mapped);
        wedges.push(WedgeIndex::new(w.n(), mapped)?);
    }
    let plains: Vec<u32> = x.plains.iter().map(|&i| sigma.apply(i)).collect();
    Ok((sign, BasisElement { wedges, plains }))
}

/// How a flattening transforms under the basis relabeling: the permanent
/// flattening commutes plainly; the determinant flattening picks up sgn(σ).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Twist {
    Plain,
    Sign,
}

impl Twist {
    pub fn factor(self, sigma: &Permutation) -> i64 {
        match self {
            Twist::Plain => 1,
            Twist::Sign => sigma.sign() as i64,
        }
    }
}

/// Columns checked exhaustively when the matrix has at most this many;
/// larger matrices are strided down to roughly this many samples.
const EQUIVARIANCE_FULL_LIMIT: u64 = 20_000;

/// Check the intertwining identity column by column: writing Φ for the
/// flattening map and s(x) for the sign with σ(x) = s(x)·|σ(x)|, the matrix
/// must satisfy `M[|σ(b)|, |σ(a)|] · s(a) · s(b) = twist(σ) · M[b, a]` for
/// every entry, and column |σ(a)| must contain nothing else.
pub fn equivariance_check(
    t: &Tensor,
    plan: &FlatteningPlan,
    sigma: &Permutation,
    twist: Twist,
) -> Result<bool> {
    let m = rkf_matrix(t, plan)?;
    let col_shape = m.col_shape.clone().expect("flattening matrices carry shapes");
    let row_shape = m.row_shape.clone().expect("flattening matrices carry shapes");
    let mut columns: BTreeMap<u64, Vec<(u64, BigRational)>> = BTreeMap::new();
    for (r, c, v) in m.iter() {
        columns.entry(c).or_default().push((r, v.clone()));
    }
    let stride = (m.ncols() / EQUIVARIANCE_FULL_LIMIT).max(1);
    let twist_factor = twist.factor(sigma);
    for a in (0..m.ncols()).step_by(stride as usize) {
        let elem_a = product_unindex(&col_shape, a)?;
        let (sign_a, image_a) = act(sigma, &elem_a)?;
        let ca = product_index(&col_shape, &image_a)?;
        let mut expected: BTreeMap<u64, BigRational> = BTreeMap::new();
        if let Some(entries) = columns.get(&a) {
            for (b, v) in entries {
                let elem_b = product_unindex(&row_shape, *b)?;
                let (sign_b, image_b) = act(sigma, &elem_b)?;
                let rb = product_index(&row_shape, &image_b)?;
                let factor = BigRational::from_integer((twist_factor * sign_a * sign_b).into());
                expected.insert(rb, v * factor);
            }
        }
        let actual: BTreeMap<u64, BigRational> = columns
            .get(&ca)
            .map(|es| es.iter().cloned().collect())
            .unwrap_or_default();
        if expected != actual {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One connected block of a matrix under the bipartite adjacency of its
/// nonzero entries.
#[derive(Clone, Debug)]
pub struct Component {
    /// Global row indices, ascending.
    pub rows: Vec<u64>,
    /// Global column indices, ascending.
    pub cols: Vec<u64>,
    /// The extracted `rows.len() x cols.len()` block.
    pub matrix: SparseMatrix,
}

/// A matrix split into connected components plus the rows/columns that
/// carry no entries at all.
#[derive(Clone, Debug)]
pub struct ComponentDecomposition {
    /// Components ordered by smallest column index.
    pub components: Vec<Component>,
    pub orphan_cols: Vec<u64>,
    pub zero_rows: Vec<u64>,
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// Split `m` into connected components: columns and rows are nodes, every
/// nonzero entry an edge.
pub fn connected_components(m: &SparseMatrix) -> Result<ComponentDecomposition> {
    let (ncols, nrows) = (m.ncols(), m.nrows());
    if ncols + nrows > 50_000_000 {
        return Err(Error::TooLarge(format!(
            "component decomposition on {nrows}x{ncols} exceeds the node cap"
        )));
    }
    let mut uf = UnionFind::new((ncols + nrows) as usize);
    let mut col_used = vec![false; ncols as usize];
    let mut row_used = vec![false; nrows as usize];
    for (r, c, _) in m.iter() {
        uf.union(c as usize, (ncols + r) as usize);
        col_used[c as usize] = true;
        row_used[r as usize] = true;
    }
    let mut groups: BTreeMap<usize, (Vec<u64>, Vec<u64>)> = BTreeMap::new();
    for c in 0..ncols {
        if col_used[c as usize] {
            groups.entry(uf.find(c as usize)).or_default().1.push(c);
        }
    }
    for r in 0..nrows {
        if row_used[r as usize] {
            groups.entry(uf.find((ncols + r) as usize)).or_default().0.push(r);
        }
    }
    let mut components: Vec<Component> = Vec::with_capacity(groups.len());
    for (_, (rows, cols)) in groups {
        let matrix = m.submatrix(&rows, &cols)?;
        components.push(Component { rows, cols, matrix });
    }
    components.sort_by_key(|c| c.cols.first().copied().unwrap_or(u64::MAX));
    let total_nnz: usize = components.iter().map(|c| c.matrix.nnz()).sum();
    if total_nnz != m.nnz() {
        return Err(Error::Internal("components do not account for every entry".into()));
    }
    Ok(ComponentDecomposition {
        components,
        orphan_cols: (0..ncols).filter(|&c| !col_used[c as usize]).collect(),
        zero_rows: (0..nrows).filter(|&r| !row_used[r as usize]).collect(),
    })
}

/// An orbit of components under the basis-relabeling action.
#[derive(Clone, Debug)]
pub struct OrbitClass {
    /// Index of the representative component in the decomposition.
    pub component: usize,
    /// Smallest column of the representative component (0-based).
    pub representative_col: u64,
    /// |H_a|: permutations mapping the component onto itself.
    pub stabilizer_size: u64,
    /// Number of distinct components in the orbit, `n! / |H_a|`.
    pub class_size: u64,
    /// All component indices in the orbit (representative included).
    pub members: Vec<usize>,
}

/// Group the components of a flattening matrix into orbits under the
/// relabeling action, with stabilizer sizes verified against the
/// orbit-stabilizer identity and a subgroup-closure check.
pub fn orbit_classes(m: &SparseMatrix, n: u32) -> Result<(ComponentDecomposition, Vec<OrbitClass>)> {
    let col_shape = m
        .col_shape
        .clone()
        .ok_or_else(|| Error::InvalidArgument("matrix carries no basis labels for the action".into()))?;
    let decomp = connected_components(m)?;
    let mut col_to_comp: BTreeMap<u64, usize> = BTreeMap::new();
    for (i, comp) in decomp.components.iter().enumerate() {
        for &c in &comp.cols {
            col_to_comp.insert(c, i);
        }
    }
    let perms = Permutation::enumerate_all(n)?;
    let factorial = perms.len() as u64;
    let mut classed: Vec<Option<usize>> = vec![None; decomp.components.len()];
    let mut classes: Vec<OrbitClass> = Vec::new();
    for rep in 0..decomp.components.len() {
        if classed[rep].is_some() {
            continue;
        }
        let rep_col = decomp.components[rep].cols[0];
        let elem = product_unindex(&col_shape, rep_col)?;
        let mut stabilizer: Vec<&Permutation> = Vec::new();
        let mut members: BTreeSet<usize> = BTreeSet::new();
        for sigma in &perms {
            let (_, image) = act(sigma, &elem)?;
            let target_col = product_index(&col_shape, &image)?;
            let &target = col_to_comp.get(&target_col).ok_or_else(|| {
                Error::EquivarianceViolation(format!(
                    "column {target_col} is an image of column {rep_col} but belongs to no component"
                ))
            })?;
            if target == rep {
                stabilizer.push(sigma);
            }
            members.insert(target);
        }
        let class_size = members.len() as u64;
        let stab_size = stabilizer.len() as u64;
        if stab_size * class_size != factorial {
            return Err(Error::EquivarianceViolation(format!(
                "orbit of column {rep_col}: |H| = {stab_size} and {class_size} members do not multiply to {n}! = {factorial}"
            )));
        }
        // The stabilizer must be closed under composition (it is a subgroup
        // when the matrix really is equivariant).
        let stab_set: BTreeSet<&[u32]> = stabilizer.iter().map(|s| s.images()).collect();
        for s in &stabilizer {
            for t in &stabilizer {
                if !stab_set.contains(s.compose(t).images()) {
                    return Err(Error::EquivarianceViolation(format!(
                        "stabilizer of column {rep_col} is not closed under composition"
                    )));
                }
            }
        }
        let (rep_r, rep_c) = (decomp.components[rep].rows.len(), decomp.components[rep].cols.len());
        for &mem in &members {
            let comp = &decomp.components[mem];
            if comp.rows.len() != rep_r || comp.cols.len() != rep_c {
                return Err(Error::EquivarianceViolation(format!(
                    "orbit of column {rep_col} mixes components of different shapes"
                )));
            }
        }
        for &mem in &members {
            classed[mem] = Some(classes.len());
        }
        classes.push(OrbitClass {
            component: rep,
            representative_col: rep_col,
            stabilizer_size: stab_size,
            class_size,
            members: members.into_iter().collect(),
        });
    }
    Ok((decomp, classes))
}

/// Which of the two supported tensor families a matrix column oracle
/// describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyKind {
    Det,
    Perm,
}

/// Generates individual columns, rows, and relabeled columns of the default
/// flattening matrix of `det_n` or `perm_n` without materializing it.
///
/// Columns are indexed by `(w_1 ∈ Λ^1, …, w_{n-2} ∈ Λ^{n-2}, dual ∈ [n])`
/// and rows by `(u_1 ∈ Λ^2, …, u_{n-2} ∈ Λ^{n-1}, out ∈ [n])`. The entry at
/// `(row, col)` is determined by the unique permutation σ with
/// `σ(n−1) = dual`, `σ(n) = out`, and `u_i = w_i ∪ {σ(i)}`; its value is the
/// wedge-insertion sign times sgn(σ) for the determinant (1 for the
/// permanent).
pub struct FamilyOracle {
    kind: FamilyKind,
    n: u32,
    col_shape: ProductShape,
    row_shape: ProductShape,
}

impl FamilyOracle {
    pub fn new(kind: FamilyKind, n: u32) -> Result<Self> {
        if !(3..=8).contains(&n) {
            return Err(Error::InvalidArgument(format!(
                "column oracle supported for 3 <= n <= 8, got {n}"
            )));
        }
        let dims = vec![n; n as usize];
        let plan = FlatteningPlan::default_for(&dims)?;
        Ok(FamilyOracle {
            kind,
            n,
            col_shape: plan.column_shape(&dims),
            row_shape: plan.row_shape(&dims),
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn ncols(&self) -> u64 {
        self.col_shape.size()
    }

    pub fn nrows(&self) -> u64 {
        self.row_shape.size()
    }

    pub fn col_shape(&self) -> &ProductShape {
        &self.col_shape
    }

    fn value_sign(&self, sigma_images: &[u32]) -> i64 {
        match self.kind {
            FamilyKind::Perm => 1,
            FamilyKind::Det => {
                let mut inversions = 0u32;
                for i in 0..sigma_images.len() {
                    for j in i + 1..sigma_images.len() {
                        if sigma_images[i] > sigma_images[j] {
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
        }
    }

    /// All nonzero entries of one column, as ascending `(row, value)` pairs.
    pub fn column(&self, col: u64) -> Result<Vec<(u64, i64)>> {
        let elem = product_unindex(&self.col_shape, col)?;
        let n = self.n as usize;
        let dual = elem.plains[0];
        // Walk positions 1..=n-2 then n, assigning distinct values; position
        // n-1 is pinned to `dual`. σ(i) must avoid w_i or the wedge dies.
        let mut sigma = vec![0u32; n];
        sigma[n - 2] = dual;
        let mut used = vec![false; n + 1];
        used[dual as usize] = true;
        let mut out: Vec<(u64, i64)> = Vec::new();
        self.column_walk(&elem, &mut sigma, &mut used, 0, 1, Vec::new(), &mut out)?;
        out.sort_unstable_by_key(|&(r, _)| r);
        for pair in out.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::Internal("two permutations produced one matrix position".into()));
            }
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn column_walk(
        &self,
        elem: &BasisElement,
        sigma: &mut Vec<u32>,
        used: &mut Vec<bool>,
        pos: usize, // 0-based position among 1..=n-2, then n
        wedge_sign: i64,
        row_wedges: Vec<WedgeIndex>,
        out: &mut Vec<(u64, i64)>,
    ) -> Result<()> {
        let n = self.n as usize;
        if pos == n - 2 {
            // Choose σ(n) = the output index; `sigma` is then the complete
            // image tuple (σ(1), …, σ(n-2) filled by recursion, σ(n-1) = dual
            // pinned up front, σ(n) = v).
            for v in 1..=self.n {
                if used[v as usize] {
                    continue;
                }
                sigma[n - 1] = v;
                let row_elem = BasisElement { wedges: row_wedges.clone(), plains: vec![v] };
                let row = product_index(&self.row_shape, &row_elem)?;
                let value = wedge_sign * self.value_sign(sigma);
                out.push((row, value));
            }
            return Ok(());
        }
        let w = &elem.wedges[pos];
        for v in 1..=self.n {
            if used[v as usize] || w.contains(v) {
                continue;
            }
            if let Some((s, u)) = crate::exterior::wedge_insert(v, w)? {
                sigma[pos] = v;
                used[v as usize] = true;
                let mut next = row_wedges.clone();
                next.push(u);
                self.column_walk(elem, sigma, used, pos + 1, wedge_sign * s, next, out)?;
                used[v as usize] = false;
            }
        }
        Ok(())
    }

    /// All columns adjacent to a row: one for each way of deleting an index
    /// of each row wedge consistently with some permutation.
    pub fn adjacent_cols(&self, row: u64) -> Result<Vec<u64>> {
        let elem = product_unindex(&self.row_shape, row)?;
        let n = self.n as usize;
        let out_val = elem.plains[0];
        let mut used = vec![false; n + 1];
        used[out_val as usize] = true;
        let mut cols = Vec::new();
        self.adjacent_walk(&elem, &mut used, 0, Vec::new(), &mut cols)?;
        cols.sort_unstable();
        cols.dedup();
        Ok(cols)
    }

    fn adjacent_walk(
        &self,
        elem: &BasisElement,
        used: &mut Vec<bool>,
        pos: usize,
        col_wedges: Vec<WedgeIndex>,
        cols: &mut Vec<u64>,
    ) -> Result<()> {
        let n = self.n as usize;
        if pos == n - 2 {
            // σ(1..n-2) chosen, σ(n) = out; the single remaining value is
            // σ(n-1) = the dual index of the column.
            let dual = (1..=self.n).find(|&v| !used[v as usize]).expect("one value left");
            let col_elem = BasisElement { wedges: col_wedges, plains: vec![dual] };
            cols.push(product_index(&self.col_shape, &col_elem)?);
            return Ok(());
        }
        let u = &elem.wedges[pos];
        for &v in u.support() {
            if used[v as usize] {
                continue;
            }
            let reduced: Vec<u32> = u.support().iter().copied().filter(|&x| x != v).collect();
            let w = WedgeIndex::new(u.n(), reduced)?;
            used[v as usize] = true;
            let mut next = col_wedges.clone();
            next.push(w);
            self.adjacent_walk(elem, used, pos + 1, next, cols)?;
            used[v as usize] = false;
        }
        Ok(())
    }

    /// Index of the column obtained by relabeling column `col` with σ and
    /// dropping the sign.
    pub fn transport_col(&self, sigma: &Permutation, col: u64) -> Result<u64> {
        let elem = product_unindex(&self.col_shape, col)?;
        let (_, image) = act(sigma, &elem)?;
        product_index(&self.col_shape, &image)
    }

    /// Assemble the whole matrix column by column (small `n` only); used to
    /// cross-check the oracle against the direct construction.
    pub fn full_matrix(&self) -> Result<SparseMatrix> {
        let ncols = self.ncols();
        if ncols > 200_000 {
            return Err(Error::TooLarge(format!("refusing to assemble {ncols} columns explicitly")));
        }
        let mut m = SparseMatrix::new(self.nrows(), ncols);
        for c in 0..ncols {
            for (r, v) in self.column(c)? {
                m.set(r, c, BigRational::from_integer(v.into()))?;
            }
        }
        m.col_shape = Some(self.col_shape.clone());
        m.row_shape = Some(self.row_shape.clone());
        Ok(m)
    }
}

/// Fixed-size bit set over `0..len`.
struct BitVec {
    words: Vec<u64>,
    len: u64,
}

impl BitVec {
    fn new(len: u64) -> Self {
        BitVec { words: vec![0; len.div_ceil(64) as usize], len }
    }

    /// Set bit `i`; returns true when it was previously clear.
    fn set(&mut self, i: u64) -> bool {
        let (w, b) = ((i / 64) as usize, i % 64);
        let mask = 1u64 << b;
        let fresh = self.words[w] & mask == 0;
        self.words[w] |= mask;
        fresh
    }

    /// Smallest clear bit at or after `from`, if any.
    fn next_clear(&self, from: u64) -> Option<u64> {
        if from >= self.len {
            return None;
        }
        let mut w = (from / 64) as usize;
        let mut masked = !self.words[w] & (!0u64 << (from % 64));
        loop {
            if masked != 0 {
                let bit = w as u64 * 64 + masked.trailing_zeros() as u64;
                return (bit < self.len).then_some(bit);
            }
            w += 1;
            if w >= self.words.len() {
                return None;
            }
            masked = !self.words[w];
        }
    }
}

/// Options for the orbit-based rank computation.
#[derive(Clone, Debug, Default)]
pub struct SymmetricOptions {
    /// Stop discovering new classes after this instant; the report is then
    /// marked incomplete (its rank is still a valid lower bound).
    pub deadline: Option<Instant>,
    /// Persist finished classes here; an existing file for the same `n` and
    /// prime lets a rerun skip the rank computations already done.
    pub checkpoint: Option<PathBuf>,
}

/// Everything recorded about one orbit class.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ClassReport {
    /// Representative column, 1-based (the convention of the matrix files).
    pub representative_col: u64,
    pub rows: u64,
    pub cols: u64,
    pub nnz: u64,
    pub stabilizer_size: u64,
    pub class_size: u64,
    pub rank: u64,
    /// `class_size * rank`: this orbit's share of the total rank.
    pub contribution: u64,
}

/// Result of the orbit-based rank computation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymmetricRankReport {
    pub n: u32,
    pub prime: u64,
    pub nrows: u64,
    pub ncols: u64,
    pub classes: Vec<ClassReport>,
    pub orphan_cols: u64,
    /// Columns accounted for by all classes (`Σ class_size · cols`).
    pub covered_cols: u64,
    pub total_rank: u64,
    /// False when a deadline cut discovery short; the recorded classes and
    /// their rank sum remain valid.
    pub complete: bool,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    n: u32,
    prime: u64,
    kind: String,
    classes: Vec<ClassReport>,
}

struct PendingClass {
    report: ClassReport,
    nrows: u32,
    ncols: u32,
    triplets: Vec<(u32, u32, i64)>,
}

fn detect_family(t: &Tensor) -> Result<(FamilyKind, u32)> {
    let dims = t.dims();
    let n = *dims.first().ok_or_else(|| Error::InvalidArgument("empty tensor".into()))?;
    if dims.len() != n as usize || dims.iter().any(|&d| d != n) {
        return Err(Error::InvalidArgument(
            "orbit-based rank needs an order-n tensor with all dimensions n".into(),
        ));
    }
    for (kind, reference) in [(FamilyKind::Det, det_tensor(n)?), (FamilyKind::Perm, perm_tensor(n)?)] {
        if t.nnz() == reference.nnz()
            && t.iter().zip(reference.iter()).all(|((i, v), (ri, rv))| i == ri && v == rv)
        {
            return Ok((kind, n));
        }
    }
    Err(Error::InvalidArgument(
        "orbit-based rank is implemented for the determinant and permanent tensors only".into(),
    ))
}

fn load_checkpoint(path: &PathBuf, n: u32, p: u64, kind: FamilyKind) -> Result<BTreeMap<u64, ClassReport>> {
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    let text = std::fs::read_to_string(path)?;
    let file: CheckpointFile = serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("checkpoint {path:?}: {e}")))?;
    if file.n != n || file.prime != p || file.kind != format!("{kind:?}") {
        return Err(Error::InvalidArgument(format!(
            "checkpoint {path:?} was written for n={}, p={}, {}; refusing to mix",
            file.n, file.prime, file.kind
        )));
    }
    Ok(file.classes.into_iter().map(|c| (c.representative_col, c)).collect())
}

fn write_checkpoint(path: &PathBuf, n: u32, p: u64, kind: FamilyKind, classes: &[ClassReport]) -> Result<()> {
    let file = CheckpointFile { n, prime: p, kind: format!("{kind:?}"), classes: classes.to_vec() };
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, serde_json::to_string_pretty(&file).expect("serializable"))?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Rank of the default flattening matrix of `det_n`/`perm_n` mod `p`,
/// computed from one representative component per orbit: discover a
/// component by breadth-first closure from the smallest uncovered column,
/// mark its whole orbit as covered, and add `class_size · rank(component)`.
pub fn symmetric_rank(
    t: &Tensor,
    plan: &FlatteningPlan,
    p: u64,
    opts: &SymmetricOptions,
) -> Result<SymmetricRankReport> {
    let (kind, n) = detect_family(t)?;
    let default = FlatteningPlan::default_for(t.dims())?;
    if plan.koszul != default.koszul || plan.contraction != default.contraction || plan.output != default.output {
        return Err(Error::InvalidArgument(
            "orbit-based rank supports the default flattening plan only".into(),
        ));
    }
    if !is_prime_u64(p) || p < 3 || p >= (1 << 62) {
        return Err(Error::BadPrime { p, reason: "need an odd prime below 2^62".into() });
    }
    let oracle = FamilyOracle::new(kind, n)?;
    let perms = Permutation::enumerate_all(n)?;
    let factorial = perms.len() as u64;
    let done: BTreeMap<u64, ClassReport> = match &opts.checkpoint {
        Some(path) => load_checkpoint(path, n, p, kind)?,
        None => BTreeMap::new(),
    };

    let ncols = oracle.ncols();
    let mut bits = BitVec::new(ncols);
    let mut classes: Vec<ClassReport> = Vec::new();
    let mut pending: Vec<PendingClass> = Vec::new();
    let mut orphans = 0u64;
    let mut covered = 0u64;
    let mut complete = true;
    let batch_size = rayon::current_num_threads().max(1) * 2;

    let flush = |pending: &mut Vec<PendingClass>, classes: &mut Vec<ClassReport>| -> Result<()> {
        if pending.is_empty() {
            return Ok(());
        }
        let finished: Vec<ClassReport> = pending
            .par_drain(..)
            .map(|job| {
                let m = PrimeFieldMatrix::from_triplets(
                    job.nrows as usize,
                    job.ncols as usize,
                    p,
                    job.triplets,
                )?;
                let rank = m.rank() as u64;
                let mut report = job.report;
                report.rank = rank;
                report.contribution = report.class_size * rank;
                Ok(report)
            })
            .collect::<Result<_>>()?;
        classes.extend(finished);
        if let Some(path) = &opts.checkpoint {
            write_checkpoint(path, n, p, kind, classes)?;
        }
        Ok(())
    };

    let mut cursor = 0u64;
    while let Some(seed) = bits.next_clear(cursor) {
        cursor = seed;
        if opts.deadline.is_some_and(|d| Instant::now() > d) {
            complete = false;
            break;
        }
        let seed_entries = oracle.column(seed)?;
        if seed_entries.is_empty() {
            bits.set(seed);
            orphans += 1;
            continue;
        }
        // Breadth-first closure over the bipartite adjacency.
        let mut col_entries: BTreeMap<u64, Vec<(u64, i64)>> = BTreeMap::new();
        let mut rows_seen: BTreeSet<u64> = BTreeSet::new();
        let mut queue: VecDeque<u64> = VecDeque::new();
        col_entries.insert(seed, seed_entries);
        queue.push_back(seed);
        while let Some(col) = queue.pop_front() {
            let entries = col_entries[&col].clone();
            for (row, _) in entries {
                if rows_seen.insert(row) {
                    for c in oracle.adjacent_cols(row)? {
                        if let std::collections::btree_map::Entry::Vacant(e) = col_entries.entry(c) {
                            e.insert(oracle.column(c)?);
                            queue.push_back(c);
                        }
                    }
                }
            }
        }
        let comp_cols: Vec<u64> = col_entries.keys().copied().collect();
        debug_assert_eq!(comp_cols[0], seed, "scan order makes the seed the smallest column");
        // Saturate the orbit: mark every relabeled copy of the component.
        let col_elems: Vec<BasisElement> = comp_cols
            .iter()
            .map(|&c| product_unindex(oracle.col_shape(), c))
            .collect::<Result<_>>()?;
        let mut stab_size = 0u64;
        let mut distinct_mins: BTreeSet<u64> = BTreeSet::new();
        let mut new_bits = 0u64;
        for sigma in &perms {
            let mut min_image = u64::MAX;
            for elem in &col_elems {
                let (_, image) = act(sigma, elem)?;
                let idx = product_index(oracle.col_shape(), &image)?;
                if bits.set(idx) {
                    new_bits += 1;
                }
                min_image = min_image.min(idx);
            }
            if min_image == seed {
                stab_size += 1;
            }
            distinct_mins.insert(min_image);
        }
        let class_size = distinct_mins.len() as u64;
        if stab_size * class_size != factorial {
            return Err(Error::EquivarianceViolation(format!(
                "component at column {seed}: |H| = {stab_size}, {class_size} copies, n! = {factorial}"
            )));
        }
        if new_bits != class_size * comp_cols.len() as u64 {
            return Err(Error::EquivarianceViolation(format!(
                "component at column {seed}: orbit copies overlap ({new_bits} fresh columns, expected {})",
                class_size * comp_cols.len() as u64
            )));
        }
        covered += new_bits;

        let comp_rows: Vec<u64> = rows_seen.into_iter().collect();
        let row_pos: BTreeMap<u64, u32> =
            comp_rows.iter().enumerate().map(|(i, &r)| (r, i as u32)).collect();
        let nnz: u64 = col_entries.values().map(|v| v.len() as u64).sum();
        let report = ClassReport {
            representative_col: seed + 1,
            rows: comp_rows.len() as u64,
            cols: comp_cols.len() as u64,
            nnz,
            stabilizer_size: stab_size,
            class_size,
            rank: 0,
            contribution: 0,
        };
        if let Some(prev) = done.get(&report.representative_col) {
            // Same class discovered before: reuse its rank, re-validate the
            // structural fields.
            if (prev.rows, prev.cols, prev.nnz, prev.stabilizer_size, prev.class_size)
                != (report.rows, report.cols, report.nnz, report.stabilizer_size, report.class_size)
            {
                return Err(Error::VerificationFailed(format!(
                    "checkpointed class at column {} does not match the rediscovered component",
                    report.representative_col
                )));
            }
            classes.push(prev.clone());
        } else {
            let mut triplets: Vec<(u32, u32, i64)> = Vec::with_capacity(nnz as usize);
            for (ci, (_, entries)) in col_entries.iter().enumerate() {
                for (row, v) in entries {
                    triplets.push((row_pos[row], ci as u32, *v));
                }
            }
            pending.push(PendingClass {
                report,
                nrows: comp_rows.len() as u32,
                ncols: comp_cols.len() as u32,
                triplets,
            });
            if pending.len() >= batch_size {
                flush(&mut pending, &mut classes)?;
            }
        }
    }
    flush(&mut pending, &mut classes)?;
    // Resumed classes are appended out of band; restore discovery order.
    classes.sort_by_key(|c| c.representative_col);

    if complete && covered + orphans != ncols {
        return Err(Error::Internal(format!(
            "orbit sweep covered {covered} columns plus {orphans} orphans out of {ncols}"
        )));
    }
    let total_rank = classes.iter().map(|c| c.contribution).sum();
    Ok(SymmetricRankReport {
        n,
        prime: p,
        nrows: oracle.nrows(),
        ncols,
        classes,
        orphan_cols: orphans,
        covered_cols: covered,
        total_rank,
        complete,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::exact::rank_rational;
    use crate::linalg::modp::rank_mod_p;
    use num::{BigInt, One};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(v: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(v))
    }

    #[test]
    fn permutation_basics() {
        let all3 = Permutation::enumerate_all(3).unwrap();
        let images: Vec<Vec<u32>> = all3.iter().map(|p| p.images().to_vec()).collect();
        assert_eq!(
            images,
            vec![
                vec![1, 2, 3],
                vec![1, 3, 2],
                vec![2, 1, 3],
                vec![2, 3, 1],
                vec![3, 1, 2],
                vec![3, 2, 1]
            ]
        );
        assert_eq!(Permutation::identity(4).sign(), 1);
        assert_eq!(Permutation::transposition(4, 1, 3).unwrap().sign(), -1);
        assert!(Permutation::from_images(vec![1, 1, 3]).is_err());
        assert!(Permutation::from_images(vec![0, 1, 2]).is_err());
        let s = Permutation::from_images(vec![2, 3, 1]).unwrap();
        assert_eq!(s.apply(1), 2);
        assert_eq!(s.inverse().apply(2), 1);
        assert_eq!(s.compose(&s.inverse()), Permutation::identity(3));
    }

    #[test]
    fn group_laws_exhaustive_small() {
        for n in [3u32, 4] {
            let all = Permutation::enumerate_all(n).unwrap();
            for a in &all {
                assert_eq!(a.compose(&a.inverse()), Permutation::identity(n));
                for b in &all {
                    // Sign is a homomorphism.
                    assert_eq!(a.compose(b).sign(), a.sign() * b.sign());
                }
            }
            // Associativity on a deterministic slice of triples.
            for (i, a) in all.iter().enumerate() {
                let b = &all[(i * 7 + 1) % all.len()];
                let c = &all[(i * 13 + 2) % all.len()];
                assert_eq!(a.compose(b).compose(c), a.compose(&b.compose(c)));
            }
        }
    }

    #[test]
    fn action_on_basis_elements() {
        // Swapping 1 and 2 on e1 ⊗ (e1∧e2) ⊗ e3*: the wedge reorders once.
        let x = BasisElement {
            wedges: vec![
                WedgeIndex::new(4, vec![1]).unwrap(),
                WedgeIndex::new(4, vec![1, 2]).unwrap(),
            ],
            plains: vec![3],
        };
        let swap = Permutation::transposition(4, 1, 2).unwrap();
        let (sign, image) = act(&swap, &x).unwrap();
        assert_eq!(sign, -1);
        assert_eq!(image.wedges[0].support(), &[2]);
        assert_eq!(image.wedges[1].support(), &[1, 2]);
        assert_eq!(image.plains, vec![3]);

        let id = Permutation::identity(4);
        let (s0, x0) = act(&id, &x).unwrap();
        assert_eq!(s0, 1);
        assert_eq!(x0, x);
    }

    #[test]
    fn action_law_with_signs() {
        // act(σ, act(τ, x)) = act(στ, x), signs multiplying, on random data.
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let all = Permutation::enumerate_all(5).unwrap();
        for _ in 0..100 {
            let sigma = &all[rng.gen_range(0..all.len())];
            let tau = &all[rng.gen_range(0..all.len())];
            // Random column-like element of the n=5 domain basis.
            let mut wedges = Vec::new();
            for p in 1..=3u32 {
                let mut support: Vec<u32> = (1..=5).collect();
                for i in (1..support.len()).rev() {
                    support.swap(i, rng.gen_range(0..=i));
                }
                support.truncate(p as usize);
                support.sort_unstable();
                wedges.push(WedgeIndex::new(5, support).unwrap());
            }
            let x = BasisElement { wedges, plains: vec![rng.gen_range(1..=5)] };
            let (s1, y) = act(tau, &x).unwrap();
            let (s2, z) = act(sigma, &y).unwrap();
            let (s3, w) = act(&sigma.compose(tau), &x).unwrap();
            assert_eq!(z, w);
            assert_eq!(s1 * s2, s3);
        }
    }

    #[test]
    fn equivariance_of_small_flattenings() {
        let dims = vec![4u32; 4];
        let plan = FlatteningPlan::default_for(&dims).unwrap();
        let perm = perm_tensor(4).unwrap();
        let det = det_tensor(4).unwrap();
        let swap = Permutation::transposition(4, 1, 2).unwrap();
        let cycle = Permutation::from_images(vec![2, 3, 1, 4]).unwrap();
        assert!(equivariance_check(&perm, &plan, &swap, Twist::Plain).unwrap());
        assert!(equivariance_check(&perm, &plan, &cycle, Twist::Plain).unwrap());
        assert!(equivariance_check(&det, &plan, &swap, Twist::Sign).unwrap());
        assert!(equivariance_check(&det, &plan, &cycle, Twist::Sign).unwrap());
        // The determinant flattening does NOT commute plainly with an odd σ.
        assert!(!equivariance_check(&det, &plan, &swap, Twist::Plain).unwrap());
    }

    /// The 6×7 matrix used throughout as the decomposition example.
    fn example_matrix() -> SparseMatrix {
        let mut m = SparseMatrix::new(6, 7);
        for (r, c, v) in [
            (0, 0, 1),
            (0, 3, 2),
            (1, 1, 3),
            (1, 6, 4),
            (2, 3, 5),
            (2, 5, 6),
            (4, 4, 7),
            (4, 6, 8),
            (5, 5, 9),
        ] {
            m.set(r, c, q(v)).unwrap();
        }
        m
    }

    #[test]
    fn component_decomposition_example() {
        let m = example_matrix();
        let d = connected_components(&m).unwrap();
        assert_eq!(d.components.len(), 2);
        assert_eq!(d.components[0].cols, vec![0, 3, 5]);
        assert_eq!(d.components[0].rows, vec![0, 2, 5]);
        assert_eq!(d.components[1].cols, vec![1, 4, 6]);
        assert_eq!(d.components[1].rows, vec![1, 4]);
        assert_eq!(d.orphan_cols, vec![2]);
        assert_eq!(d.zero_rows, vec![3]);
        // Rank is additive over components: 3 + 2 = 5.
        let total: u64 = d
            .components
            .iter()
            .map(|c| rank_rational(&c.matrix).unwrap())
            .sum();
        assert_eq!(total, 5);
        assert_eq!(rank_rational(&m).unwrap(), 5);
    }

    #[test]
    fn component_edge_cases() {
        let mut diag = SparseMatrix::new(3, 3);
        for i in 0..3 {
            diag.set(i, i, q(1)).unwrap();
        }
        let d = connected_components(&diag).unwrap();
        assert_eq!(d.components.len(), 3);
        assert!(d.orphan_cols.is_empty());

        let zero = SparseMatrix::new(2, 4);
        let z = connected_components(&zero).unwrap();
        assert!(z.components.is_empty());
        assert_eq!(z.orphan_cols, vec![0, 1, 2, 3]);
        assert_eq!(z.zero_rows, vec![0, 1]);
    }

    #[test]
    fn oracle_matches_direct_construction() {
        for (kind, t) in [
            (FamilyKind::Det, det_tensor(4).unwrap()),
            (FamilyKind::Perm, perm_tensor(4).unwrap()),
        ] {
            let oracle = FamilyOracle::new(kind, 4).unwrap();
            let direct = rkf_matrix(&t, &FlatteningPlan::default_for(t.dims()).unwrap()).unwrap();
            let assembled = oracle.full_matrix().unwrap();
            assert_eq!(assembled, direct, "{kind:?} oracle must reproduce every signed entry");
        }
    }

    #[test]
    fn oracle_adjacency_is_consistent() {
        let oracle = FamilyOracle::new(FamilyKind::Perm, 4).unwrap();
        let m = oracle.full_matrix().unwrap();
        // adjacent_cols(row) must list exactly the columns with an entry in
        // that row.
        let mut by_row: BTreeMap<u64, BTreeSet<u64>> = BTreeMap::new();
        for (r, c, _) in m.iter() {
            by_row.entry(r).or_default().insert(c);
        }
        for r in 0..oracle.nrows() {
            let expected: Vec<u64> =
                by_row.get(&r).map(|s| s.iter().copied().collect()).unwrap_or_default();
            assert_eq!(oracle.adjacent_cols(r).unwrap(), expected, "row {r}");
        }
    }

    #[test]
    fn orbit_classes_cover_all_columns() {
        let t = perm_tensor(4).unwrap();
        let m = rkf_matrix(&t, &FlatteningPlan::default_for(t.dims()).unwrap()).unwrap();
        let (decomp, classes) = orbit_classes(&m, 4).unwrap();
        let covered: u64 = classes
            .iter()
            .map(|cl| cl.class_size * decomp.components[cl.component].cols.len() as u64)
            .sum();
        assert_eq!(covered + decomp.orphan_cols.len() as u64, 96);
        for cl in &classes {
            assert_eq!(24 % cl.stabilizer_size, 0, "|H| must divide n!");
        }
    }

    #[test]
    fn transported_components_keep_rank() {
        let t = perm_tensor(4).unwrap();
        let m = rkf_matrix(&t, &FlatteningPlan::default_for(t.dims()).unwrap()).unwrap();
        let (decomp, classes) = orbit_classes(&m, 4).unwrap();
        let col_shape = m.col_shape.clone().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let all = Permutation::enumerate_all(4).unwrap();
        for cl in &classes {
            let rep = &decomp.components[cl.component];
            let rep_rank = rank_mod_p(&rep.matrix, 1000003).unwrap();
            for _ in 0..10 {
                let sigma = &all[rng.gen_range(0..all.len())];
                // Transport the whole column set and find the landed component.
                let image_col = {
                    let elem = product_unindex(&col_shape, rep.cols[0]).unwrap();
                    let (_, image) = act(sigma, &elem).unwrap();
                    product_index(&col_shape, &image).unwrap()
                };
                let target = decomp
                    .components
                    .iter()
                    .find(|c| c.cols.binary_search(&image_col).is_ok())
                    .expect("image lands in a component");
                assert_eq!(rank_mod_p(&target.matrix, 1000003).unwrap(), rep_rank);
            }
        }
    }

    #[test]
    fn symmetric_rank_cross_validates_at_n4() {
        let p = 1_000_003u64;
        let dims = vec![4u32; 4];
        let plan = FlatteningPlan::default_for(&dims).unwrap();

        let perm = perm_tensor(4).unwrap();
        let report = symmetric_rank(&perm, &plan, p, &SymmetricOptions::default()).unwrap();
        assert!(report.complete);
        assert_eq!(report.ncols, 96);
        assert_eq!(report.total_rank, 70);
        let direct = rank_mod_p(&rkf_matrix(&perm, &plan).unwrap(), p).unwrap() as u64;
        assert_eq!(report.total_rank, direct);

        let det = det_tensor(4).unwrap();
        let det_report = symmetric_rank(&det, &plan, p, &SymmetricOptions::default()).unwrap();
        assert_eq!(det_report.total_rank, 96);
        assert_eq!(
            rank_rational(&rkf_matrix(&det, &plan).unwrap()).unwrap(),
            det_report.total_rank
        );
    }

    #[test]
    fn symmetric_rank_respects_checkpoints() {
        let p = 1_000_003u64;
        let dims = vec![4u32; 4];
        let plan = FlatteningPlan::default_for(&dims).unwrap();
        let perm = perm_tensor(4).unwrap();
        let dir = std::env::temp_dir().join(format!("koszul-ckpt-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("perm4.json");
        let opts = SymmetricOptions { deadline: None, checkpoint: Some(path.clone()) };
        let first = symmetric_rank(&perm, &plan, p, &opts).unwrap();
        assert!(path.exists());
        let second = symmetric_rank(&perm, &plan, p, &opts).unwrap();
        assert_eq!(first.classes, second.classes);
        assert_eq!(second.total_rank, 70);
        // A checkpoint for different parameters is rejected.
        let err = symmetric_rank(&perm, &plan, 1_000_033, &opts).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn symmetric_rank_deadline_gives_partial_report() {
        let dims = vec![5u32; 5];
        let plan = FlatteningPlan::default_for(&dims).unwrap();
        let perm = perm_tensor(5).unwrap();
        let opts = SymmetricOptions {
            deadline: Some(Instant::now() - std::time::Duration::from_secs(1)),
            checkpoint: None,
        };
        let report = symmetric_rank(&perm, &plan, 1_000_003, &opts).unwrap();
        assert!(!report.complete);
        assert!(report.classes.is_empty());
        assert_eq!(report.total_rank, 0);
    }

    #[test]
    fn symmetric_rank_rejects_other_tensors() {
        let dims = vec![4u32; 4];
        let plan = FlatteningPlan::default_for(&dims).unwrap();
        let mut t = Tensor::new(dims.clone()).unwrap();
        t.set(&[1, 2, 3, 4], BigRational::one()).unwrap();
        assert!(symmetric_rank(&t, &plan, 1_000_003, &SymmetricOptions::default()).is_err());
    }
}
