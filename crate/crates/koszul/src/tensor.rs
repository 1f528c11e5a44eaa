//! Tensors of arbitrary order with exact rational entries.
//!
//! Entries are stored sparsely in canonical form: explicit zeros are never
//! kept, indices are 1-based, iteration is in lexicographic index order.
//! Two tensors are equal iff their canonical entry maps are equal.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num::{BigRational, One, Zero};

use crate::symmetry::Permutation;
use crate::textio::{format_rational, parse_rational};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tensor {
    dims: Vec<u32>,
    entries: BTreeMap<Vec<u32>, BigRational>,
}

impl Tensor {
    pub fn new(dims: Vec<u32>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidArgument("tensor must have order >= 1".into()));
        }
        if dims.iter().any(|&m| m == 0) {
            return Err(Error::InvalidArgument("tensor dimensions must be positive".into()));
        }
        Ok(Tensor { dims, entries: BTreeMap::new() })
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[u32] {
        &self.dims
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    fn check_index(&self, idx: &[u32]) -> Result<()> {
        if idx.len() != self.dims.len() {
            return Err(Error::ShapeMismatch(format!(
                "index of length {} for order-{} tensor",
                idx.len(),
                self.dims.len()
            )));
        }
        for (pos, (&i, &m)) in idx.iter().zip(&self.dims).enumerate() {
            if i < 1 || i > m {
                return Err(Error::InvalidArgument(format!(
                    "index {i} out of range 1..={m} in mode {}",
                    pos + 1
                )));
            }
        }
        Ok(())
    }

    /// Entry at `idx`, zero when absent.
    pub fn get(&self, idx: &[u32]) -> BigRational {
        self.entries.get(idx).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Accumulate `val` into the entry at `idx`, dropping it if the sum is zero.
    pub fn add_to(&mut self, idx: &[u32], val: &BigRational) -> Result<()> {
        self.check_index(idx)?;
        if val.is_zero() {
            return Ok(());
        }
        let slot = self.entries.entry(idx.to_vec()).or_insert_with(BigRational::zero);
        *slot += val;
        if slot.is_zero() {
            self.entries.remove(idx);
        }
        Ok(())
    }

    pub fn set(&mut self, idx: &[u32], val: BigRational) -> Result<()> {
        self.check_index(idx)?;
        if val.is_zero() {
            self.entries.remove(idx);
        } else {
            self.entries.insert(idx.to_vec(), val);
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<u32>, &BigRational)> {
        self.entries.iter()
    }

    /// Text form: a `tensor d m_1 … m_d` header, then one `i_1 … i_d value`
    /// line per nonzero entry in lexicographic index order. The value is
    /// `num/den` with `/den` omitted when the denominator is one.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        write!(s, "tensor {}", self.dims.len()).unwrap();
        for m in &self.dims {
            write!(s, " {m}").unwrap();
        }
        s.push('\n');
        for (idx, val) in &self.entries {
            for i in idx {
                write!(s, "{i} ").unwrap();
            }
            writeln!(s, "{}", format_rational(val)).unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Tensor> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty tensor file".into()))?;
        let mut toks = header.split_whitespace();
        if toks.next() != Some("tensor") {
            return Err(Error::Parse("tensor file must start with 'tensor'".into()));
        }
        let d: usize = toks
            .next()
            .ok_or_else(|| Error::Parse("missing tensor order".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("bad tensor order: {e}")))?;
        let dims: Vec<u32> = toks
            .map(|t| t.parse().map_err(|e| Error::Parse(format!("bad dimension: {e}"))))
            .collect::<Result<_>>()?;
        if dims.len() != d {
            return Err(Error::Parse(format!(
                "header declares order {d} but lists {} dimensions",
                dims.len()
            )));
        }
        let mut t = Tensor::new(dims)?;
        for line in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != d + 1 {
                return Err(Error::Parse(format!("entry line has {} tokens, expected {}", toks.len(), d + 1)));
            }
            let idx: Vec<u32> = toks[..d]
                .iter()
                .map(|t| t.parse().map_err(|e| Error::Parse(format!("bad index: {e}"))))
                .collect::<Result<_>>()?;
            let val = parse_rational(toks[d])?;
            if t.entries.contains_key(&idx) {
                return Err(Error::Parse(format!("duplicate entry at {idx:?}")));
            }
            t.set(&idx, val)?;
        }
        Ok(t)
    }
}

/// The determinant tensor: `n!` entries, `(σ(1), …, σ(n)) ↦ sgn(σ)`.
pub fn det_tensor(n: u32) -> Result<Tensor> {
    signed_permutation_tensor(n, true)
}

/// The permanent tensor: `n!` entries, `(σ(1), …, σ(n)) ↦ 1`.
pub fn perm_tensor(n: u32) -> Result<Tensor> {
    signed_permutation_tensor(n, false)
}

fn signed_permutation_tensor(n: u32, signed: bool) -> Result<Tensor> {
    if !(2..=8).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "determinant/permanent tensors supported for 2 <= n <= 8, got {n}"
        )));
    }
    let mut t = Tensor::new(vec![n; n as usize])?;
    for sigma in Permutation::enumerate_all(n)? {
        let idx: Vec<u32> = (1..=n).map(|i| sigma.apply(i)).collect();
        let val = if signed && sigma.sign() < 0 {
            -BigRational::one()
        } else {
            BigRational::one()
        };
        t.set(&idx, val)?;
    }
    Ok(t)
}

/// A rank-one tensor `v_1 ⊗ … ⊗ v_d`, each `v_i` nonzero, scalars folded
/// into the coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankOneTerm {
    vectors: Vec<Vec<BigRational>>,
}

impl RankOneTerm {
    pub fn new(vectors: Vec<Vec<BigRational>>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::InvalidArgument("rank-one term must have order >= 1".into()));
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.is_empty() {
                return Err(Error::InvalidArgument(format!("vector {} is empty", i + 1)));
            }
            if v.iter().all(Zero::is_zero) {
                return Err(Error::InvalidArgument(format!(
                    "vector {} of rank-one term is zero",
                    i + 1
                )));
            }
        }
        Ok(RankOneTerm { vectors })
    }

    pub fn order(&self) -> usize {
        self.vectors.len()
    }

    pub fn dims(&self) -> Vec<u32> {
        self.vectors.iter().map(|v| v.len() as u32).collect()
    }

    pub fn vectors(&self) -> &[Vec<BigRational>] {
        &self.vectors
    }
}

/// Expand a rank-one term into an explicit tensor.
pub fn expand_rank_one(term: &RankOneTerm) -> Tensor {
    let dims = term.dims();
    let mut t = Tensor::new(dims).expect("validated by RankOneTerm::new");
    // Walk the product of the supports of the factor vectors.
    let supports: Vec<Vec<(u32, &BigRational)>> = term
        .vectors
        .iter()
        .map(|v| {
            v.iter()
                .enumerate()
                .filter(|(_, x)| !x.is_zero())
                .map(|(i, x)| (i as u32 + 1, x))
                .collect()
        })
        .collect();
    let mut cursor = vec![0usize; supports.len()];
    'outer: loop {
        let mut idx = Vec::with_capacity(supports.len());
        let mut val = BigRational::one();
        for (mode, &c) in cursor.iter().enumerate() {
            let (i, x) = supports[mode][c];
            idx.push(i);
            val *= x;
        }
        t.set(&idx, val).unwrap();
        for mode in (0..cursor.len()).rev() {
            cursor[mode] += 1;
            if cursor[mode] < supports[mode].len() {
                continue 'outer;
            }
            cursor[mode] = 0;
        }
        break;
    }
    t
}

/// Exact linear combination `a·t1 + b·t2` of two same-shape tensors.
pub fn linear_combine(a: &BigRational, t1: &Tensor, b: &BigRational, t2: &Tensor) -> Result<Tensor> {
    if t1.dims != t2.dims {
        return Err(Error::ShapeMismatch(format!(
            "cannot combine tensors of shapes {:?} and {:?}",
            t1.dims, t2.dims
        )));
    }
    let mut out = Tensor::new(t1.dims.clone())?;
    for (idx, v) in &t1.entries {
        out.add_to(idx, &(a * v))?;
    }
    for (idx, v) in &t2.entries {
        out.add_to(idx, &(b * v))?;
    }
    Ok(out)
}

/// Check whether `Σ terms = t` exactly.
pub fn verify_decomposition(t: &Tensor, terms: &[RankOneTerm]) -> Result<bool> {
    let mut sum = Tensor::new(t.dims.clone())?;
    for term in terms {
        if term.dims() != t.dims {
            return Err(Error::ShapeMismatch(format!(
                "term of shape {:?} against tensor of shape {:?}",
                term.dims(),
                t.dims
            )));
        }
        let expanded = expand_rank_one(term);
        for (idx, v) in &expanded.entries {
            sum.add_to(idx, v)?;
        }
    }
    Ok(sum == *t)
}

/// Text form of a decomposition: a `decomposition d r` header, then `r`
/// blocks each introduced by a `term` line and holding `d` lines of vector
/// coordinates (rationals, whitespace-separated).
pub fn decomposition_to_text(terms: &[RankOneTerm]) -> Result<String> {
    let first = terms
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty decomposition".into()))?;
    let mut s = format!("decomposition {} {}\n", first.order(), terms.len());
    for term in terms {
        s.push_str("term\n");
        for v in term.vectors() {
            let coords: Vec<String> = v.iter().map(format_rational).collect();
            writeln!(s, "{}", coords.join(" ")).unwrap();
        }
    }
    Ok(s)
}

pub fn decomposition_from_text(text: &str) -> Result<Vec<RankOneTerm>> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty decomposition file".into()))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 3 || toks[0] != "decomposition" {
        return Err(Error::Parse(
            "decomposition file must start with 'decomposition <order> <terms>'".into(),
        ));
    }
    let d: usize = toks[1].parse().map_err(|e| Error::Parse(format!("bad order: {e}")))?;
    let r: usize = toks[2].parse().map_err(|e| Error::Parse(format!("bad term count: {e}")))?;
    let mut terms = Vec::with_capacity(r);
    for k in 0..r {
        match lines.next() {
            Some("term") => {}
            other => {
                return Err(Error::Parse(format!(
                    "expected 'term' before block {}, found {other:?}",
                    k + 1
                )))
            }
        }
        let mut vectors = Vec::with_capacity(d);
        for mode in 0..d {
            let line = lines.next().ok_or_else(|| {
                Error::Parse(format!("term {} is missing vector {}", k + 1, mode + 1))
            })?;
            let v: Vec<BigRational> =
                line.split_whitespace().map(parse_rational).collect::<Result<_>>()?;
            vectors.push(v);
        }
        terms.push(RankOneTerm::new(vectors)?);
    }
    if lines.next().is_some() {
        return Err(Error::Parse(format!("trailing content after {r} terms")));
    }
    Ok(terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigInt;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    fn q2(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn det_perm_small() {
        let d2 = det_tensor(2).unwrap();
        assert_eq!(d2.nnz(), 2);
        assert_eq!(d2.get(&[1, 2]), q(1));
        assert_eq!(d2.get(&[2, 1]), q(-1));
        assert_eq!(d2.get(&[1, 1]), q(0));

        let p3 = perm_tensor(3).unwrap();
        assert_eq!(p3.nnz(), 6);
        assert!(p3.iter().all(|(_, v)| *v == q(1)));

        let d3 = det_tensor(3).unwrap();
        assert_eq!(d3.get(&[2, 3, 1]), q(1));
        assert_eq!(d3.get(&[2, 1, 3]), q(-1));
    }

    #[test]
    fn det_sign_product() {
        // Product of all n! signs is (-1)^(n!/2): half of the permutations are odd.
        for n in 2..=4u32 {
            let t = det_tensor(n).unwrap();
            assert_eq!(t.nnz() as u64, (1..=n as u64).product::<u64>());
            let prod = t
                .iter()
                .fold(BigRational::one(), |acc, (_, v)| acc * v);
            let expected = if (t.nnz() / 2) % 2 == 0 { q(1) } else { q(-1) };
            assert_eq!(prod, expected);
        }
    }

    #[test]
    fn perm2_two_term_decomposition() {
        // perm_2 = 1/2 (e1+e2)⊗(e1+e2) - 1/2 (e1-e2)⊗(e1-e2).
        let t1 = RankOneTerm::new(vec![vec![q2(1, 2), q2(1, 2)], vec![q(1), q(1)]]).unwrap();
        let t2 = RankOneTerm::new(vec![vec![q2(-1, 2), q2(1, 2)], vec![q(1), q(-1)]]).unwrap();
        assert!(verify_decomposition(&perm_tensor(2).unwrap(), &[t1.clone(), t2.clone()]).unwrap());
        // Dropping a term must fail.
        assert!(!verify_decomposition(&perm_tensor(2).unwrap(), &[t1]).unwrap());
    }

    #[test]
    fn expand_rank_one_matches_products() {
        let term = RankOneTerm::new(vec![vec![q(2), q(0)], vec![q(1), q(-3)], vec![q(0), q2(1, 2)]]).unwrap();
        let t = expand_rank_one(&term);
        assert_eq!(t.get(&[1, 1, 2]), q(1));
        assert_eq!(t.get(&[1, 2, 2]), q(-3));
        assert_eq!(t.get(&[2, 1, 2]), q(0));
        assert_eq!(t.nnz(), 2);
    }

    #[test]
    fn rank_one_rejects_zero_vector() {
        assert!(RankOneTerm::new(vec![vec![q(1)], vec![q(0), q(0)]]).is_err());
    }

    #[test]
    fn linear_combine_exact() {
        let a = det_tensor(2).unwrap();
        let b = perm_tensor(2).unwrap();
        // det_2 + perm_2 = 2 e1⊗e2: the e2⊗e1 entries cancel exactly.
        let s = linear_combine(&q(1), &a, &q(1), &b).unwrap();
        assert_eq!(s.get(&[1, 2]), q(2));
        assert_eq!(s.get(&[2, 1]), q(0));
        assert_eq!(s.nnz(), 1);
    }

    #[test]
    fn text_roundtrip_is_bit_exact() {
        let mut t = Tensor::new(vec![2, 3]).unwrap();
        t.set(&[1, 3], q2(-7, 3)).unwrap();
        t.set(&[2, 1], q(5)).unwrap();
        let text = t.to_text();
        assert_eq!(text, "tensor 2 2 3\n1 3 -7/3\n2 1 5\n");
        let back = Tensor::from_text(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_text(), text);

        let d3 = det_tensor(3).unwrap();
        assert_eq!(Tensor::from_text(&d3.to_text()).unwrap(), d3);
    }

    #[test]
    fn text_rejects_duplicates() {
        assert!(Tensor::from_text("tensor 1 2\n1 1\n1 2\n").is_err());
    }

    #[test]
    fn decomposition_text_roundtrip() {
        // det_2 = (e1 ⊗ e2 − e2 ⊗ e1) written with two rank-one terms.
        let terms = vec![
            RankOneTerm::new(vec![vec![q(1), q(0)], vec![q(0), q(1)]]).unwrap(),
            RankOneTerm::new(vec![vec![q(0), q(-1)], vec![q(1), q(0)]]).unwrap(),
        ];
        let text = decomposition_to_text(&terms).unwrap();
        assert_eq!(text, "decomposition 2 2\nterm\n1 0\n0 1\nterm\n0 -1\n1 0\n");
        let back = decomposition_from_text(&text).unwrap();
        assert_eq!(back, terms);
        assert!(verify_decomposition(&det_tensor(2).unwrap(), &back).unwrap());

        assert!(decomposition_from_text("decomposition 2 1\nterm\n1 0\n").is_err());
        assert!(decomposition_from_text("decomposition 2 1\nterm\n1 0\n0 0\n").is_err());
    }
}
