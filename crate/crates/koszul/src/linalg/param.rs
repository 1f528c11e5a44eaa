//! Matrices whose entries are multilinear polynomials in a few parameters,
//! plus exact univariate determinant recovery by interpolation and
//! grid-based verification that a parametric determinant is constant.
//!
//! The degree of `det M(x)` in a parameter is at most the number of columns
//! whose entries mention that parameter, so evaluating on an integer grid
//! with one more point per axis than that bound decides any identity about
//! the determinant exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::{BigInt, BigRational, One, Signed, Zero};
use rayon::prelude::*;

use crate::flattening::SparseMatrix;
use crate::linalg::exact::{det_bareiss, det_crt};
use crate::{Error, Result};

/// Hard cap on the number of evaluation points a full grid check may visit.
pub const MAX_GRID_POINTS: u64 = 50_000_000;

/// A polynomial of degree at most one in each of up to 32 variables, stored
/// as a map from variable bitmask to coefficient.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MultiPoly {
    terms: BTreeMap<u32, BigRational>,
}

impl MultiPoly {
    pub fn zero() -> Self {
        MultiPoly::default()
    }

    pub fn constant(c: BigRational) -> Self {
        let mut p = MultiPoly::default();
        p.add_term(0, &c);
        p
    }

    /// Add `c` times the monomial given by `mask` (bit v set = variable v).
    pub fn add_term(&mut self, mask: u32, c: &BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(mask) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c.clone());
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn uses_var(&self, var: u32) -> bool {
        self.terms.keys().any(|m| m & (1 << var) != 0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &BigRational)> {
        self.terms.iter().map(|(&m, c)| (m, c))
    }

    pub fn eval(&self, point: &[BigInt]) -> BigRational {
        let mut acc = BigRational::zero();
        for (&mask, c) in &self.terms {
            let mut mono = BigInt::one();
            let mut bits = mask;
            while bits != 0 {
                let v = bits.trailing_zeros() as usize;
                mono *= &point[v];
                bits &= bits - 1;
            }
            acc += c * BigRational::from_integer(mono);
        }
        acc
    }
}

/// A sparse matrix with multilinear polynomial entries.
#[derive(Clone, Debug)]
pub struct ParamMatrix {
    nrows: u64,
    ncols: u64,
    vars: Vec<String>,
    entries: BTreeMap<(u64, u64), MultiPoly>,
}

impl ParamMatrix {
    /// Assemble from monomial slices: the matrix is the sum over `parts` of
    /// each sparse matrix times its monomial. All parts share one shape, and
    /// every mask must stay within `vars`.
    pub fn from_parts(vars: Vec<String>, parts: Vec<(u32, SparseMatrix)>) -> Result<Self> {
        if vars.len() > 32 {
            return Err(Error::TooLarge("at most 32 parameters supported".into()));
        }
        let Some((_, first)) = parts.first() else {
            return Err(Error::InvalidArgument("no parts given".into()));
        };
        let (nrows, ncols) = (first.nrows(), first.ncols());
        let mut entries: BTreeMap<(u64, u64), MultiPoly> = BTreeMap::new();
        for (mask, m) in &parts {
            if vars.len() < 32 && (mask >> vars.len()) != 0 {
                return Err(Error::InvalidArgument(format!(
                    "monomial mask {mask:#b} mentions a variable beyond the {} declared",
                    vars.len()
                )));
            }
            if m.nrows() != nrows || m.ncols() != ncols {
                return Err(Error::ShapeMismatch(format!(
                    "part is {}x{}, expected {}x{}",
                    m.nrows(),
                    m.ncols(),
                    nrows,
                    ncols
                )));
            }
            for (r, c, v) in m.iter() {
                entries.entry((r, c)).or_default().add_term(*mask, v);
            }
        }
        entries.retain(|_, p| !p.is_zero());
        Ok(ParamMatrix { nrows, ncols, vars, entries })
    }

    pub fn nrows(&self) -> u64 {
        self.nrows
    }

    pub fn ncols(&self) -> u64 {
        self.ncols
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// Number of columns containing an entry that mentions `var`; this
    /// bounds the degree of the determinant in that variable.
    pub fn cols_touching(&self, var: u32) -> u64 {
        let cols: BTreeSet<u64> = self
            .entries
            .iter()
            .filter(|(_, p)| p.uses_var(var))
            .map(|(&(_, c), _)| c)
            .collect();
        cols.len() as u64
    }

    /// Evaluate at an integer point.
    pub fn eval_int(&self, point: &[i64]) -> Result<SparseMatrix> {
        if point.len() != self.vars.len() {
            return Err(Error::InvalidArgument(format!(
                "point has {} coordinates, matrix has {} parameters",
                point.len(),
                self.vars.len()
            )));
        }
        let big: Vec<BigInt> = point.iter().map(|&x| BigInt::from(x)).collect();
        let mut m = SparseMatrix::new(self.nrows, self.ncols);
        for (&(r, c), p) in &self.entries {
            let v = p.eval(&big);
            if !v.is_zero() {
                m.set(r, c, v)?;
            }
        }
        Ok(m)
    }
}

/// Exact determinant of one evaluated matrix: residue reconstruction for
/// integer matrices, fraction-free elimination otherwise.
pub fn det_exact(m: &SparseMatrix, seed: u64) -> Result<BigRational> {
    if m.is_integer() {
        Ok(BigRational::from_integer(det_crt(m, seed)?.det))
    } else {
        det_bareiss(m)
    }
}

/// A univariate polynomial with exact rational coefficients, ascending by
/// degree with no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polynomial {
    coeffs: Vec<BigRational>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Polynomial { coeffs: vec![BigRational::one()] }
    }

    pub fn constant(c: BigRational) -> Self {
        Polynomial::new(vec![c])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_int(&self, x: i64) -> BigRational {
        self.eval(&BigRational::from_integer(BigInt::from(x)))
    }

    /// Multiply by the linear factor `(X - root)`.
    pub fn mul_linear(&self, root: &BigRational) -> Polynomial {
        if self.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i + 1] += c;
            out[i] -= c * root;
        }
        Polynomial::new(out)
    }

    pub fn scale(&self, c: &BigRational) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![BigRational::zero(); n];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            out[i] += c;
        }
        Polynomial::new(out)
    }

    pub fn neg(&self) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            match i {
                0 => write!(f, "{mag}")?,
                _ => {
                    if !mag.is_one() {
                        write!(f, "{mag}*")?;
                    }
                    if i == 1 {
                        write!(f, "x")?;
                    } else {
                        write!(f, "x^{i}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Unique polynomial of degree < points.len() through the given points.
pub fn lagrange_interpolate(points: &[(BigRational, BigRational)]) -> Result<Polynomial> {
    for (i, (xi, _)) in points.iter().enumerate() {
        for (xj, _) in &points[..i] {
            if xi == xj {
                return Err(Error::InvalidArgument(format!("repeated interpolation node {xi}")));
            }
        }
    }
    let mut result = Polynomial::zero();
    for (i, (xi, yi)) in points.iter().enumerate() {
        if yi.is_zero() {
            continue;
        }
        let mut basis = Polynomial::one();
        let mut denom = BigRational::one();
        for (j, (xj, _)) in points.iter().enumerate() {
            if j != i {
                basis = basis.mul_linear(xj);
                denom *= xi - xj;
            }
        }
        result = result.add(&basis.scale(&(yi / denom)));
    }
    Ok(result)
}

/// Recover `det M(x)` for a one-parameter matrix exactly: evaluate the
/// determinant at `0..=degree_bound` where the bound is the number of
/// columns mentioning the parameter, interpolate, then confirm on two
/// fresh points.
pub fn det_univariate(pm: &ParamMatrix, seed: u64) -> Result<Polynomial> {
    if pm.nvars() != 1 {
        return Err(Error::InvalidArgument(format!(
            "univariate determinant needs exactly one parameter, matrix has {}",
            pm.nvars()
        )));
    }
    if pm.nrows() != pm.ncols() {
        return Err(Error::ShapeMismatch(format!("determinant of {}x{} matrix", pm.nrows(), pm.ncols())));
    }
    let bound = pm.cols_touching(0) as i64;
    let values: Vec<(i64, BigRational)> = (0..=bound + 2)
        .into_par_iter()
        .map(|x| Ok((x, det_exact(&pm.eval_int(&[x])?, seed)?)))
        .collect::<Result<_>>()?;
    let nodes: Vec<(BigRational, BigRational)> = values[..=bound as usize]
        .iter()
        .map(|(x, y)| (BigRational::from_integer(BigInt::from(*x)), y.clone()))
        .collect();
    let poly = lagrange_interpolate(&nodes)?;
    for (x, y) in &values[bound as usize + 1..] {
        if &poly.eval_int(*x) != y {
            return Err(Error::Internal(format!(
                "interpolated determinant disagrees with a fresh evaluation at x = {x}"
            )));
        }
    }
    Ok(poly)
}

/// Outcome of checking that a parametric determinant is identically equal
/// to a constant (up to a global sign fixed by the first evaluation).
#[derive(Clone, Debug)]
pub struct GridCheck {
    /// Per-parameter degree bounds; the full grid uses `bound + 1` points per axis.
    pub bounds: Vec<u64>,
    /// Constant actually matched, `claimed` or its negative.
    pub resolved: BigInt,
    /// Grid points evaluated (the whole grid when the check passes).
    pub grid_points: u64,
    /// Extra random points evaluated.
    pub random_points: u64,
    /// First failing point, with the determinant found there.
    pub counterexample: Option<(Vec<i64>, BigRational)>,
    /// True only when the full grid was covered with no counterexample;
    /// random-only runs leave this false however many points pass.
    pub proved: bool,
}

fn decode_grid_point(index: u64, axes: &[u64]) -> Vec<i64> {
    let mut rem = index;
    let mut point = vec![0i64; axes.len()];
    for (v, &len) in axes.iter().enumerate().rev() {
        point[v] = (rem % len) as i64;
        rem /= len;
    }
    point
}

/// Decide whether `det M(x) = ±claimed` for every parameter value. With
/// `full_grid` the whole degree-bound grid is evaluated, which is a proof;
/// otherwise only `random_trials` sampled points are checked.
pub fn det_constant_check(
    pm: &ParamMatrix,
    claimed: &BigInt,
    full_grid: bool,
    random_trials: u64,
    seed: u64,
) -> Result<GridCheck> {
    use rand::{Rng, SeedableRng};
    if pm.nrows() != pm.ncols() {
        return Err(Error::ShapeMismatch(format!("determinant of {}x{} matrix", pm.nrows(), pm.ncols())));
    }
    let bounds: Vec<u64> = (0..pm.nvars() as u32).map(|v| pm.cols_touching(v)).collect();
    let axes: Vec<u64> = bounds.iter().map(|b| b + 1).collect();
    let total: u64 = axes.iter().try_fold(1u64, |acc, &a| acc.checked_mul(a)).unwrap_or(u64::MAX);
    if full_grid && total > MAX_GRID_POINTS {
        return Err(Error::TooLarge(format!(
            "full grid has {total} points, cap is {MAX_GRID_POINTS}"
        )));
    }

    // Fix the sign on the first grid point (origin).
    let origin = vec![0i64; pm.nvars()];
    let d0 = det_exact(&pm.eval_int(&origin)?, seed)?;
    let claim_q = BigRational::from_integer(claimed.clone());
    let resolved = if d0 == claim_q {
        claimed.clone()
    } else if d0 == -&claim_q {
        -claimed
    } else {
        return Ok(GridCheck {
            bounds,
            resolved: claimed.clone(),
            grid_points: 1,
            random_points: 0,
            counterexample: Some((origin, d0)),
            proved: false,
        });
    };
    let resolved_q = BigRational::from_integer(resolved.clone());

    let mut grid_points = 1u64; // origin already checked
    let mut counterexample = None;
    if full_grid {
        let failing = (1..total)
            .into_par_iter()
            .find_first(|&idx| {
                let point = decode_grid_point(idx, &axes);
                match pm.eval_int(&point).and_then(|m| det_exact(&m, seed)) {
                    Ok(d) => d != resolved_q,
                    Err(_) => true,
                }
            });
        match failing {
            None => grid_points = total,
            Some(idx) => {
                let point = decode_grid_point(idx, &axes);
                let d = det_exact(&pm.eval_int(&point)?, seed)?;
                grid_points = idx + 1;
                counterexample = Some((point, d));
            }
        }
    }

    let mut random_points = 0u64;
    if counterexample.is_none() && random_trials > 0 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
        let pts: Vec<Vec<i64>> = (0..random_trials)
            .map(|_| (0..pm.nvars()).map(|_| rng.gen_range(-(1 << 20)..=1 << 20)).collect())
            .collect();
        let failing = pts.par_iter().find_first(|point| {
            match pm.eval_int(point).and_then(|m| det_exact(&m, seed)) {
                Ok(d) => d != resolved_q,
                Err(_) => true,
            }
        });
        match failing {
            None => random_points = random_trials,
            Some(point) => {
                let d = det_exact(&pm.eval_int(point)?, seed)?;
                counterexample = Some((point.clone(), d));
            }
        }
    }

    let proved = full_grid && counterexample.is_none();
    Ok(GridCheck { bounds, resolved, grid_points, random_points, counterexample, proved })
}
