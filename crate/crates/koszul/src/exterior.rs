//! Ordered bases of exterior powers `Λ^p V` and of tensor products of such
//! factors, with signed wedge insertion.
//!
//! A basis vector of `Λ^p V` for `dim V = n` is a strictly increasing
//! 1-based index tuple (its *support*). Supports are ordered
//! lexicographically and ranked 0-based; products of factors are ranked in
//! mixed radix with the leftmost factor most significant, which agrees with
//! lexicographic order on the concatenated index tuples.

use crate::{Error, Result};

/// Binomial coefficient, with `C(n, k) = 0` for `k > n`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k {
        // Exact at every step: acc * (n-k+i) is divisible by i. The product
        // can exceed u64 (e.g. C(64, 32)), so accumulate in u128.
        acc = acc * (n - k + i) as u128 / i as u128;
    }
    u64::try_from(acc).expect("binomial coefficient exceeds u64")
}

/// Basis vector `e_{c_1} ∧ … ∧ e_{c_p}` of `Λ^p V`, `dim V = n`, stored as
/// the strictly increasing support `c_1 < … < c_p` (1-based).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WedgeIndex {
    n: u32,
    support: Vec<u32>,
}

impl WedgeIndex {
    pub fn new(n: u32, support: Vec<u32>) -> Result<Self> {
        if support.len() as u64 > n as u64 {
            return Err(Error::InvalidArgument(format!(
                "wedge power {} exceeds dimension {n}",
                support.len()
            )));
        }
        for (i, &c) in support.iter().enumerate() {
            if c < 1 || c > n {
                return Err(Error::InvalidArgument(format!(
                    "wedge index {c} out of range 1..={n}"
                )));
            }
            if i > 0 && support[i - 1] >= c {
                return Err(Error::InvalidArgument(format!(
                    "wedge support not strictly increasing: {support:?}"
                )));
            }
        }
        Ok(WedgeIndex { n, support })
    }

    /// The empty wedge, the basis vector of `Λ^0 V ≅ K`.
    pub fn empty(n: u32) -> Self {
        WedgeIndex { n, support: Vec::new() }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn power(&self) -> u32 {
        self.support.len() as u32
    }

    pub fn support(&self) -> &[u32] {
        &self.support
    }

    pub fn contains(&self, i: u32) -> bool {
        self.support.binary_search(&i).is_ok()
    }
}

/// All basis vectors of `Λ^p V` in lexicographic order of supports.
pub fn lambda_basis(n: u32, p: u32) -> Result<Vec<WedgeIndex>> {
    if p > n {
        return Err(Error::InvalidArgument(format!(
            "Λ^{p} of a {n}-dimensional space is zero"
        )));
    }
    let size = binomial(n as u64, p as u64);
    let mut out = Vec::with_capacity(size as usize);
    let mut cur: Vec<u32> = (1..=p).collect();
    loop {
        out.push(WedgeIndex { n, support: cur.clone() });
        // Advance to the next p-subset of [n] in lexicographic order.
        let p = p as usize;
        let mut i = p;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if cur[i] < n - (p - 1 - i) as u32 {
                cur[i] += 1;
                for j in i + 1..p {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// 0-based rank of a wedge in the lexicographic order of `lambda_basis`.
pub fn subset_rank(w: &WedgeIndex) -> u64 {
    let n = w.n as u64;
    let p = w.support.len() as u64;
    let mut rank = 0u64;
    let mut prev = 0u64;
    for (i, &c) in w.support.iter().enumerate() {
        let c = c as u64;
        // Count subsets that agree on the first i entries and branch lower here.
        for cand in prev + 1..c {
            rank += binomial(n - cand, p - i as u64 - 1);
        }
        prev = c;
    }
    rank
}

/// Inverse of [`subset_rank`]: the wedge of `Λ^p V` at 0-based rank `r`.
pub fn subset_unrank(n: u32, p: u32, r: u64) -> Result<WedgeIndex> {
    let total = binomial(n as u64, p as u64);
    if p > n || r >= total {
        return Err(Error::InvalidArgument(format!(
            "rank {r} out of range for C({n},{p}) = {total}"
        )));
    }
    let mut support = Vec::with_capacity(p as usize);
    let mut r = r;
    let mut cand = 1u64;
    for i in 0..p as u64 {
        loop {
            let below = binomial(n as u64 - cand, p as u64 - i - 1);
            if r < below {
                support.push(cand as u32);
                cand += 1;
                break;
            }
            r -= below;
            cand += 1;
        }
    }
    Ok(WedgeIndex { n, support })
}

/// Left wedge insertion `e_i ∧ w`. Returns `None` if `i` already lies in the
/// support (the product vanishes), otherwise the sign `(-1)^{#{j ∈ supp : j < i}}`
/// together with the sorted result.
pub fn wedge_insert(i: u32, w: &WedgeIndex) -> Result<Option<(i64, WedgeIndex)>> {
    if i < 1 || i > w.n {
        return Err(Error::InvalidArgument(format!(
            "wedge index {i} out of range 1..={}",
            w.n
        )));
    }
    match w.support.binary_search(&i) {
        Ok(_) => Ok(None),
        Err(pos) => {
            let sign = if pos % 2 == 0 { 1 } else { -1 };
            let mut support = w.support.clone();
            support.insert(pos, i);
            Ok(Some((sign, WedgeIndex { n: w.n, support })))
        }
    }
}

/// One factor of a product basis: an exterior power or a plain vector space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Factor {
    Wedge { dim: u32, power: u32 },
    Plain { dim: u32 },
}

impl Factor {
    pub fn size(&self) -> u64 {
        match *self {
            Factor::Wedge { dim, power } => binomial(dim as u64, power as u64),
            Factor::Plain { dim } => dim as u64,
        }
    }
}

/// Ordered basis of a product of wedge and plain factors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductShape {
    pub factors: Vec<Factor>,
}

impl ProductShape {
    pub fn new(factors: Vec<Factor>) -> Self {
        ProductShape { factors }
    }

    pub fn size(&self) -> u64 {
        self.factors.iter().map(Factor::size).product()
    }
}

/// A basis vector of a [`ProductShape`]: one [`WedgeIndex`] per wedge factor
/// (in factor order) and one 1-based index per plain factor (in factor order).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasisElement {
    pub wedges: Vec<WedgeIndex>,
    pub plains: Vec<u32>,
}

fn factor_rank(factor: &Factor, wedges: &[WedgeIndex], plains: &[u32], wi: &mut usize, pi: &mut usize) -> Result<u64> {
    match *factor {
        Factor::Wedge { dim, power } => {
            let w = wedges.get(*wi).ok_or_else(|| {
                Error::ShapeMismatch("element has fewer wedges than shape".into())
            })?;
            *wi += 1;
            if w.n() != dim || w.power() != power {
                return Err(Error::ShapeMismatch(format!(
                    "wedge Λ^{}[{}] does not fit factor Λ^{power}[{dim}]",
                    w.power(),
                    w.n()
                )));
            }
            Ok(subset_rank(w))
        }
        Factor::Plain { dim } => {
            let &i = plains.get(*pi).ok_or_else(|| {
                Error::ShapeMismatch("element has fewer plain indices than shape".into())
            })?;
            *pi += 1;
            if i < 1 || i > dim {
                return Err(Error::ShapeMismatch(format!(
                    "plain index {i} out of range 1..={dim}"
                )));
            }
            Ok((i - 1) as u64)
        }
    }
}

/// Mixed-radix rank of an element, leftmost factor most significant.
pub fn product_index(shape: &ProductShape, elem: &BasisElement) -> Result<u64> {
    let mut idx = 0u64;
    let (mut wi, mut pi) = (0usize, 0usize);
    for factor in &shape.factors {
        let r = factor_rank(factor, &elem.wedges, &elem.plains, &mut wi, &mut pi)?;
        idx = idx * factor.size() + r;
    }
    if wi != elem.wedges.len() || pi != elem.plains.len() {
        return Err(Error::ShapeMismatch("element has more components than shape".into()));
    }
    Ok(idx)
}

/// Inverse of [`product_index`].
pub fn product_unindex(shape: &ProductShape, r: u64) -> Result<BasisElement> {
    if r >= shape.size() {
        return Err(Error::InvalidArgument(format!(
            "index {r} out of range for product of size {}",
            shape.size()
        )));
    }
    let mut digits = Vec::with_capacity(shape.factors.len());
    let mut rem = r;
    for factor in shape.factors.iter().rev() {
        let s = factor.size();
        digits.push(rem % s);
        rem /= s;
    }
    digits.reverse();
    let mut wedges = Vec::new();
    let mut plains = Vec::new();
    for (factor, d) in shape.factors.iter().zip(digits) {
        match *factor {
            Factor::Wedge { dim, power } => wedges.push(subset_unrank(dim, power, d)?),
            Factor::Plain { .. } => plains.push(d as u32 + 1),
        }
    }
    Ok(BasisElement { wedges, plains })
}
