//! Machine-checkable certificates for flattening-rank and border-rank claims.
//!
//! Each certificate records its inputs (tensor family, flattening plan,
//! seed, primes, flags), the facts that were computed (ranks, determinants,
//! witness submatrices, grid sweeps), and a verdict:
//!
//! * `PROVED` — every step was exact over the integers or rationals;
//! * `PROVED-MOD-P` — the rank was computed modulo a prime, which still
//!   proves the characteristic-zero lower bound because reduction can only
//!   lose rank;
//! * `PROBABILISTIC` — the facts were sampled (random evaluation points or
//!   residues modulo a few random primes) and could in principle be wrong;
//! * `FAILED` — the computation finished but contradicted the claim, or a
//!   search was exhausted. Failed certificates are still written out.
//!
//! Certificates serialize to JSON and can be replayed: verification re-runs
//! the computation from the stored inputs (or re-checks stored witnesses
//! directly) and compares every fact.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::exterior::{product_index, product_unindex};
use crate::flattening::{border_bound, rkf_matrix, FlatteningPlan, SparseMatrix};
use crate::linalg::exact::{det_bareiss, det_crt, det_crt_with_primes, rank_rational};
use crate::linalg::modp::{bigint_mod_p, det_mod_p, rank_mod_p};
use crate::linalg::param::{det_constant_check, det_univariate, ParamMatrix, Polynomial};
use crate::linalg::primes::{draw_primes, is_prime_u64, powmod};
use crate::linalg::submatrix::{find_det_submatrix, submatrix_det_mod_p, DetTarget};
use crate::symmetry::{act, orbit_classes, symmetric_rank, ClassReport, Permutation, SymmetricOptions};
use crate::tensor::{det_tensor, perm_tensor, Tensor};
use crate::textio::format_factored;
use crate::{Error, Result};

/// How strongly the recorded facts support the claim.
#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    #[serde(rename = "PROVED")]
    Proved,
    #[serde(rename = "PROVED-MOD-P")]
    ProvedModP,
    #[serde(rename = "PROBABILISTIC")]
    Probabilistic,
    #[serde(rename = "FAILED")]
    Failed,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Proved => "PROVED",
            Verdict::ProvedModP => "PROVED-MOD-P",
            Verdict::Probabilistic => "PROBABILISTIC",
            Verdict::Failed => "FAILED",
        };
        write!(f, "{s}")
    }
}

/// A flattening plan in serializable form.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct PlanSpec {
    pub koszul: Vec<(usize, u32)>,
    pub contraction: usize,
    pub output: usize,
}

impl PlanSpec {
    pub fn of(plan: &FlatteningPlan) -> Self {
        PlanSpec {
            koszul: plan.koszul.clone(),
            contraction: plan.contraction,
            output: plan.output,
        }
    }
}

/// One modular spot-check of a determinant value.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct ResidueCheck {
    pub prime: u64,
    pub computed: u64,
    pub expected_plus: u64,
    pub expected_minus: u64,
    /// +1 when `computed == expected_plus`, −1 for the negative, 0 neither.
    pub matched_sign: i8,
}

/// Facts behind a `det_n` border-rank lower bound (n = 3, 4, 5).
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct DetLowerBody {
    pub n: u32,
    pub plan: PlanSpec,
    pub seed: u64,
    /// `Some(p)`: rank computed mod `p` instead of the rational facts.
    pub prime: Option<u64>,
    /// n = 5 only: full CRT determinant instead of sampled congruences.
    pub exhaustive: bool,
    pub rows: u64,
    pub cols: u64,
    pub nnz: u64,
    pub divisor: u64,
    pub rank: u64,
    pub det_decimal: Option<String>,
    pub det_factored: Option<String>,
    pub crt_primes: Vec<u64>,
    pub residue_checks: Vec<ResidueCheck>,
    pub bound: u64,
}

/// The four normal forms a rank-one tensor on a 4-dimensional space reduces
/// to, by the dimension of the span of its factors.
#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum CaseFamily {
    SpanFour,
    SpanThree,
    SpanTwo,
    SpanOne,
}

impl CaseFamily {
    pub fn description(self) -> &'static str {
        match self {
            CaseFamily::SpanFour => "S = x * e1 % e2 % e3 % e4 (independent factors)",
            CaseFamily::SpanThree => "S = e1 % e2 % e3 % (x e1 + y e2 + z e3)",
            CaseFamily::SpanTwo => "S = e1 % e2 % (x e1 + y e2) % (z e1 + w e2)",
            CaseFamily::SpanOne => "S = x * e1 % e1 % e1 % e1",
        }
    }
}

/// Rank of the perturbed flattening at one root of its determinant.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct RootRank {
    pub x: i64,
    pub rank: u64,
    /// True when `rank` is the exact rational rank; false when it is a
    /// lower bound witnessed by a nonsingular submatrix mod p.
    pub exact: bool,
    /// Witness submatrix (1-based indices), present in the mod-p mode.
    pub witness_rows: Vec<u64>,
    pub witness_cols: Vec<u64>,
    pub witness_residue: Option<u64>,
    /// Exact integer determinant of the witness minor in factored form,
    /// when the search certified one; such a witness is valid in every
    /// odd characteristic at once.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness_det: Option<String>,
}

/// Per-family facts of the rank-12 certificate.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(tag = "shape")]
pub enum CaseFacts {
    /// One free parameter; the determinant is recovered as an exact
    /// polynomial and compared against the reference factorization.
    #[serde(rename = "univariate")]
    Univariate {
        polynomial: String,
        coefficients: Vec<String>,
        reference: String,
        /// Our determinant equals `sign` times the reference polynomial.
        sign: i8,
        matches: bool,
        generic_rank: u64,
        root_ranks: Vec<RootRank>,
        min_rank: u64,
    },
    /// Several parameters over which the determinant is a nonzero constant;
    /// checked on the full degree-bound grid (a proof) or random samples.
    #[serde(rename = "constant-grid")]
    ConstantGrid {
        vars: Vec<String>,
        degree_bounds: Vec<u64>,
        resolved_det: String,
        full_grid: bool,
        grid_points: u64,
        random_points: u64,
        counterexample: Option<String>,
        proved_identity: bool,
        /// The constant reduced mod p (mod-p mode only; must be nonzero).
        residue_mod_p: Option<u64>,
        rank: u64,
    },
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct Det4Case {
    pub family: CaseFamily,
    pub description: String,
    pub facts: CaseFacts,
    /// Smallest rank of the perturbed flattening over the family.
    pub case_rank: u64,
    /// `ceil(case_rank / 9)`.
    pub flattening_bound: u64,
}

/// Facts behind `R(det_4) >= 12`.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct Det4Body {
    pub seed: u64,
    /// 0 for the rational run, an odd prime for characteristic p.
    pub characteristic: u64,
    /// Downgrades the grid sweeps to random samples.
    pub fast: bool,
    pub divisor: u64,
    pub cases: Vec<Det4Case>,
    /// `min(flattening_bound over cases) + 1`.
    pub lower_bound: u64,
    pub upper_bound_cited: u64,
    pub dependencies: Vec<String>,
}

/// Facts behind a `perm_n` border-rank lower bound from the orbit sweep.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct PermTableBody {
    pub n: u32,
    pub prime: u64,
    pub seed: u64,
    pub rows: u64,
    pub cols: u64,
    pub divisor: u64,
    pub orphan_cols: u64,
    pub covered_cols: u64,
    pub classes: Vec<ClassReport>,
    pub total_rank: u64,
    pub complete: bool,
    pub bound: u64,
}

/// The unit minor found inside one orbit-class representative.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct ClassMinor {
    /// 1-based smallest column of the representative component.
    pub representative_col: u64,
    pub size: u64,
    pub class_size: u64,
    pub det: i64,
}

/// Facts behind a field-independent `perm_n` rank bound: a square submatrix
/// with determinant ±1, which stays invertible after reduction mod any p.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct PermFiniteCharBody {
    pub n: u32,
    pub seed: u64,
    pub size: u64,
    pub divisor: u64,
    pub bound: u64,
    /// 1-based global indices of the witness submatrix.
    pub rows: Vec<u64>,
    pub cols: Vec<u64>,
    pub det: String,
    pub crt_primes: Vec<u64>,
    pub class_minors: Vec<ClassMinor>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(tag = "kind")]
pub enum CertificateBody {
    #[serde(rename = "det-lower")]
    DetLower(DetLowerBody),
    #[serde(rename = "det4-rank12")]
    Det4Rank12(Det4Body),
    #[serde(rename = "perm-table")]
    PermTable(PermTableBody),
    #[serde(rename = "perm-finite-char")]
    PermFiniteChar(PermFiniteCharBody),
}

/// A complete, replayable certificate.
#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct Certificate {
    pub format_version: u32,
    pub claim: String,
    pub verdict: Verdict,
    pub runtime_seconds: f64,
    #[serde(flatten)]
    pub body: CertificateBody,
}

const FORMAT_VERSION: u32 = 1;

fn square_dims(n: u32) -> Vec<u32> {
    vec![n; n as usize]
}

fn finish(claim: String, verdict: Verdict, started: Instant, body: CertificateBody) -> Certificate {
    Certificate {
        format_version: FORMAT_VERSION,
        claim,
        verdict,
        runtime_seconds: started.elapsed().as_secs_f64(),
        body,
    }
}

// ---------------------------------------------------------------------------
// det_n lower bounds (n = 3, 4, 5)
// ---------------------------------------------------------------------------

/// Border-rank lower bound for `det_n` from the rank of its recursive
/// Koszul flattening. Rational mode establishes the expected exact facts
/// (n = 3: rank 9; n = 4: |det| = 2^32; n = 5: det = ±2^1600·3^25, either
/// sampled modulo three random primes or, with `exhaustive`, recovered
/// exactly by CRT). Mod-p mode computes the rank over F_p, which is a valid
/// characteristic-zero bound because reduction cannot increase rank.
pub fn certify_det_lower(n: u32, prime: Option<u64>, exhaustive: bool, seed: u64) -> Result<Certificate> {
    let started = Instant::now();
    if !(3..=5).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "det lower-bound certificates cover n = 3, 4, 5; got {n}"
        )));
    }
    let dims = square_dims(n);
    let plan = FlatteningPlan::default_for(&dims)?;
    let t = det_tensor(n)?;
    let m = rkf_matrix(&t, &plan)?;
    let divisor = plan.divisor(&dims);
    let mut body = DetLowerBody {
        n,
        plan: PlanSpec::of(&plan),
        seed,
        prime,
        exhaustive,
        rows: m.nrows(),
        cols: m.ncols(),
        nnz: m.nnz() as u64,
        divisor,
        rank: 0,
        det_decimal: None,
        det_factored: None,
        crt_primes: Vec::new(),
        residue_checks: Vec::new(),
        bound: 0,
    };

    let verdict;
    let detail;
    match prime {
        Some(p) => {
            body.rank = rank_mod_p(&m, p)? as u64;
            detail = format!("rank {} modulo {p}", body.rank);
            verdict = Verdict::ProvedModP;
        }
        None => match n {
            3 => {
                body.rank = rank_rational(&m)?;
                detail = format!("rational rank {}", body.rank);
                verdict = if body.rank == 9 { Verdict::Proved } else { Verdict::Failed };
            }
            4 => {
                let det = det_bareiss(&m)?.to_integer();
                body.det_decimal = Some(det.to_string());
                body.det_factored = Some(format_factored(&det));
                body.rank = if det.is_zero() { 0 } else { m.ncols() };
                detail = format!("det = {}", body.det_factored.as_deref().unwrap_or("0"));
                let expected: BigInt = BigInt::one() << 32;
                verdict = if det.abs() == expected { Verdict::Proved } else { Verdict::Failed };
            }
            5 => {
                let expected: BigInt = (BigInt::one() << 1600) * BigInt::from(3).pow(25u32);
                if exhaustive {
                    let crt = det_crt(&m, seed)?;
                    body.crt_primes = crt.primes.clone();
                    body.det_decimal = Some(crt.det.to_string());
                    body.det_factored = Some(format_factored(&crt.det));
                    body.rank = if crt.det.is_zero() { 0 } else { m.ncols() };
                    detail = format!(
                        "det = {} via CRT over {} primes",
                        body.det_factored.as_deref().unwrap_or("0"),
                        crt.primes.len()
                    );
                    verdict = if crt.det.abs() == expected { Verdict::Proved } else { Verdict::Failed };
                } else {
                    let ps = draw_primes(seed, 3)?;
                    let checks: Vec<ResidueCheck> = ps
                        .par_iter()
                        .map(|&p| {
                            let computed = det_mod_p(&m, p)?;
                            let plus = bigint_mod_p(&expected, p);
                            let minus = (p - plus) % p;
                            let matched_sign = if computed == plus {
                                1
                            } else if computed == minus {
                                -1
                            } else {
                                0
                            };
                            Ok(ResidueCheck { prime: p, computed, expected_plus: plus, expected_minus: minus, matched_sign })
                        })
                        .collect::<Result<_>>()?;
                    let signs: BTreeSet<i8> = checks.iter().map(|c| c.matched_sign).collect();
                    let consistent = signs.len() == 1 && !signs.contains(&0);
                    // Any nonzero residue proves det != 0 over the integers.
                    body.rank = if checks.iter().any(|c| c.computed != 0) { m.ncols() } else { 0 };
                    detail = format!(
                        "det congruent to {}2^1600 * 3^25 modulo {} independent primes",
                        match signs.iter().next() {
                            Some(1) => "+",
                            Some(-1) => "-",
                            _ => "±",
                        },
                        checks.len()
                    );
                    body.residue_checks = checks;
                    verdict = if consistent { Verdict::Probabilistic } else { Verdict::Failed };
                }
            }
            _ => unreachable!(),
        },
    }
    body.bound = border_bound(body.rank, divisor);
    let claim = if verdict == Verdict::Failed {
        format!(
            "FAILED: the {}x{} flattening of det_{n} did not produce the expected facts ({detail})",
            body.rows, body.cols
        )
    } else {
        format!(
            "the {}x{} recursive Koszul flattening of det_{n} has rank {} ({detail}); border rank of det_{n} >= {}",
            body.rows, body.cols, body.rank, body.bound
        )
    };
    Ok(finish(claim, verdict, started, CertificateBody::DetLower(body)))
}

// ---------------------------------------------------------------------------
// R(det_4) >= 12
// ---------------------------------------------------------------------------

fn q(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Flattening of the single basis tensor `e_{i1} % e_{i2} % e_{i3} % e_{i4}`.
fn elementary_flattening(plan: &FlatteningPlan, idx: [u32; 4]) -> Result<SparseMatrix> {
    let mut t = Tensor::new(vec![4; 4])?;
    t.set(&idx, BigRational::one())?;
    rkf_matrix(&t, plan)
}

fn negated(m: &SparseMatrix) -> Result<SparseMatrix> {
    let mut out = SparseMatrix::new(m.nrows(), m.ncols());
    for (r, c, v) in m.iter() {
        out.set(r, c, -v.clone())?;
    }
    Ok(out)
}

/// Parametrized flattening of `det_4 - S` where `S` expands to the given
/// monomial-masked basis tensors.
fn det4_family(vars: &[&str], terms: &[(u32, [u32; 4])]) -> Result<ParamMatrix> {
    let dims = square_dims(4);
    let plan = FlatteningPlan::default_for(&dims)?;
    let base = rkf_matrix(&det_tensor(4)?, &plan)?;
    let mut parts = vec![(0u32, base)];
    for &(mask, idx) in terms {
        parts.push((mask, negated(&elementary_flattening(&plan, idx)?)?));
    }
    ParamMatrix::from_parts(vars.iter().map(|s| s.to_string()).collect(), parts)
}

fn det4_case_family(family: CaseFamily) -> Result<ParamMatrix> {
    match family {
        CaseFamily::SpanFour => det4_family(&["x"], &[(1, [1, 2, 3, 4])]),
        CaseFamily::SpanThree => det4_family(
            &["x", "y", "z"],
            &[(1, [1, 2, 3, 1]), (2, [1, 2, 3, 2]), (4, [1, 2, 3, 3])],
        ),
        CaseFamily::SpanTwo => det4_family(
            &["x", "y", "z", "w"],
            &[
                (0b0101, [1, 2, 1, 1]), // x*z
                (0b1001, [1, 2, 1, 2]), // x*w
                (0b0110, [1, 2, 2, 1]), // y*z
                (0b1010, [1, 2, 2, 2]), // y*w
            ],
        ),
        CaseFamily::SpanOne => det4_family(&["x"], &[(1, [1, 1, 1, 1])]),
    }
}

/// `-2^20 (x-1) (x-2)^4 (x-4)^4`, the reference determinant of the
/// span-four family.
fn span_four_reference() -> Polynomial {
    let lead: BigInt = -(BigInt::one() << 20u32);
    let mut p = Polynomial::constant(BigRational::from_integer(lead));
    p = p.mul_linear(&q(1));
    for _ in 0..4 {
        p = p.mul_linear(&q(2));
    }
    for _ in 0..4 {
        p = p.mul_linear(&q(4));
    }
    p
}

const SPAN_FOUR_REFERENCE_DISPLAY: &str = "-2^20 * (x - 1) * (x - 2)^4 * (x - 4)^4";

/// Roots of the span-four determinant with the claimed witness exponent:
/// the sought 91x91 minor reduces to ±2^k mod p. 4 collapses onto 1 in
/// characteristic 3.
fn span_four_root_exponents(p: u64) -> Vec<(i64, u32)> {
    if p == 3 {
        vec![(1, 20), (2, 23)]
    } else {
        vec![(1, 20), (2, 23), (4, 20)]
    }
}

const DET4_WITNESS_SIZE: u64 = 91;
const DET4_SEARCH_ATTEMPTS: u32 = 50_000;
/// Attempt budget for the exact power-of-two pre-pass: cheap, and when it
/// lands (it does at x = 1) the witness is independent of p.
const DET4_DYADIC_ATTEMPTS: u32 = 2_000;

/// Certify `R(det_4) >= 12` by Koszul-flattening every normal form of a
/// rank-one perturbation: for each family, the flattening of `det_4 - S`
/// keeps rank at least 91, so every `det_4 - S` has border rank at least 11,
/// and subtracting one more rank-one term yields the bound 12.
///
/// `characteristic` 0 runs over the rationals; an odd prime p switches the
/// root-rank facts to explicit nonsingular 91x91 witnesses mod p (the
/// polynomial and grid identities are integer identities, so they reduce).
/// `fast` downgrades the grid sweeps to random samples.
pub fn certify_det4_rank12(characteristic: u64, fast: bool, seed: u64) -> Result<Certificate> {
    let started = Instant::now();
    if characteristic != 0 && (characteristic < 3 || characteristic >= (1 << 62) || !is_prime_u64(characteristic)) {
        return Err(Error::BadPrime {
            p: characteristic,
            reason: "characteristic must be 0 or an odd prime below 2^62".into(),
        });
    }
    let claimed_constant: BigInt = BigInt::one() << 32;
    let mut cases = Vec::new();
    let mut failures: Vec<String> = Vec::new();

    // Span-four family: exact determinant polynomial plus ranks at its roots.
    {
        let pm = det4_case_family(CaseFamily::SpanFour)?;
        let poly = det_univariate(&pm, seed)?;
        let reference = span_four_reference();
        let (sign, matches) = if poly == reference {
            (1i8, true)
        } else if poly == reference.neg() {
            (-1i8, true)
        } else {
            (0i8, false)
        };
        if !matches {
            failures.push(format!(
                "span-four determinant is {poly}, not ±({SPAN_FOUR_REFERENCE_DISPLAY})"
            ));
        }
        let mut root_ranks = Vec::new();
        if matches {
            if characteristic == 0 {
                for x in [1i64, 2, 4] {
                    let at = pm.eval_int(&[x])?;
                    let rank = rank_rational(&at)?;
                    root_ranks.push(RootRank {
                        x,
                        rank,
                        exact: true,
                        witness_rows: Vec::new(),
                        witness_cols: Vec::new(),
                        witness_residue: None,
                        witness_det: None,
                    });
                }
            } else {
                let p = characteristic;
                for (x, exponent) in span_four_root_exponents(p) {
                    let at = pm.eval_int(&[x])?;
                    let root_seed = seed ^ (x as u64).wrapping_mul(0x9e37);
                    let target = powmod(2, exponent as u64, p);
                    let mut residues = vec![target, (p - target) % p];
                    residues.dedup();
                    // First look for a minor of exactly ±2^exponent over the
                    // integers -- its residue is in the target class for
                    // every p at once -- then fall back to the mod-p search.
                    let attempt = find_det_submatrix(
                        &at,
                        DET4_WITNESS_SIZE,
                        &DetTarget::PowerOfTwoAbs { exponent },
                        root_seed,
                        DET4_DYADIC_ATTEMPTS,
                    )
                    .or_else(|_| {
                        find_det_submatrix(
                            &at,
                            DET4_WITNESS_SIZE,
                            &DetTarget::ResidueIn { p, residues: residues.clone() },
                            root_seed,
                            DET4_SEARCH_ATTEMPTS,
                        )
                    });
                    let found = match attempt {
                        Ok(f) => f,
                        Err(Error::SearchExhausted { attempts, .. }) => {
                            failures.push(format!(
                                "no 91x91 witness with minor in ±2^{exponent} mod {p} at x = {x} after {attempts} attempts"
                            ));
                            root_ranks.push(RootRank {
                                x,
                                rank: 0,
                                exact: false,
                                witness_rows: Vec::new(),
                                witness_cols: Vec::new(),
                                witness_residue: None,
                                witness_det: None,
                            });
                            continue;
                        }
                        Err(e) => return Err(e),
                    };
                    let residue = match (&found.exact_det, found.residue) {
                        (Some(d), _) => bigint_mod_p(d, p),
                        (None, Some(r)) => r,
                        (None, None) => {
                            return Err(Error::Internal("witness search reported no determinant".into()))
                        }
                    };
                    // Re-check the witness determinant independently.
                    let check = submatrix_det_mod_p(&at, &found.rows, &found.cols, p)?;
                    if check != residue || !residues.contains(&check) {
                        return Err(Error::Internal(
                            "witness submatrix re-verification disagreed with the search".into(),
                        ));
                    }
                    root_ranks.push(RootRank {
                        x,
                        rank: DET4_WITNESS_SIZE,
                        exact: false,
                        witness_rows: found.rows.iter().map(|r| r + 1).collect(),
                        witness_cols: found.cols.iter().map(|c| c + 1).collect(),
                        witness_residue: Some(residue),
                        witness_det: found.exact_det.as_ref().map(format_factored),
                    });
                }
            }
        }
        let generic_rank = 96u64;
        let min_rank = root_ranks
            .iter()
            .map(|r| r.rank)
            .chain(std::iter::once(generic_rank))
            .min()
            .unwrap_or(0);
        let case_rank = if matches { min_rank } else { 0 };
        cases.push(Det4Case {
            family: CaseFamily::SpanFour,
            description: CaseFamily::SpanFour.description().into(),
            facts: CaseFacts::Univariate {
                polynomial: poly.to_string(),
                coefficients: poly.coeffs().iter().map(|c| c.to_string()).collect(),
                reference: SPAN_FOUR_REFERENCE_DISPLAY.into(),
                sign,
                matches,
                generic_rank,
                root_ranks,
                min_rank,
            },
            case_rank,
            flattening_bound: border_bound(case_rank, 9),
        });
    }

    // Span-three/two/one families: the determinant is the constant ±2^32.
    for family in [CaseFamily::SpanThree, CaseFamily::SpanTwo, CaseFamily::SpanOne] {
        let pm = det4_case_family(family)?;
        let (full_grid, random_trials) = if fast { (false, 1_500) } else { (true, 200) };
        let gc = det_constant_check(&pm, &claimed_constant, full_grid, random_trials, seed)?;
        let identity_ok = gc.counterexample.is_none();
        if let Some((point, value)) = &gc.counterexample {
            failures.push(format!(
                "{}: det at {point:?} is {value}, not ±2^32",
                family.description()
            ));
        }
        let residue_mod_p = if characteristic != 0 {
            let r = bigint_mod_p(&gc.resolved, characteristic);
            if identity_ok && r == 0 {
                failures.push(format!(
                    "{}: constant determinant vanishes mod {characteristic}",
                    family.description()
                ));
            }
            Some(r)
        } else {
            None
        };
        let rank = if identity_ok && residue_mod_p != Some(0) { 96 } else { 0 };
        cases.push(Det4Case {
            family,
            description: family.description().into(),
            facts: CaseFacts::ConstantGrid {
                vars: pm.vars().to_vec(),
                degree_bounds: gc.bounds.clone(),
                resolved_det: format_factored(&gc.resolved),
                full_grid,
                grid_points: gc.grid_points,
                random_points: gc.random_points,
                counterexample: gc
                    .counterexample
                    .as_ref()
                    .map(|(pt, v)| format!("det at {pt:?} = {v}")),
                proved_identity: gc.proved,
                residue_mod_p,
                rank,
            },
            case_rank: rank,
            flattening_bound: border_bound(rank, 9),
        });
    }

    let min_case_bound = cases.iter().map(|c| c.flattening_bound).min().unwrap_or(0);
    let lower_bound = if failures.is_empty() { min_case_bound + 1 } else { min_case_bound };
    let body = Det4Body {
        seed,
        characteristic,
        fast,
        divisor: 9,
        cases,
        lower_bound,
        upper_bound_cited: 12,
        dependencies: vec![
            "every rank-one perturbation reduces to one of the four listed normal forms under the symmetry group of det_4 (cited)".into(),
            "upper bound R(det_4) <= 12 (cited)".into(),
        ],
    };
    let verdict = if !failures.is_empty() || lower_bound < 12 {
        Verdict::Failed
    } else if fast {
        Verdict::Probabilistic
    } else {
        Verdict::Proved
    };
    let claim = if verdict == Verdict::Failed {
        format!("FAILED: {}", failures.join("; "))
    } else if characteristic == 0 {
        format!("R(det_4) >= {lower_bound}, = 12 with cited upper bound")
    } else {
        format!("R(det_4) >= {lower_bound} over fields of characteristic {characteristic}")
    };
    Ok(finish(claim, verdict, started, CertificateBody::Det4Rank12(body)))
}

// ---------------------------------------------------------------------------
// perm_n border-rank table
// ---------------------------------------------------------------------------

/// Border-rank lower bound for `perm_n` from the orbit-by-orbit rank of its
/// flattening mod `p`. The mod-p rank is a lower bound on the rational rank,
/// so the bound holds unconditionally in characteristic zero.
pub fn certify_perm_table(
    n: u32,
    p: u64,
    seed: u64,
    extended: bool,
    opts: &SymmetricOptions,
) -> Result<Certificate> {
    let started = Instant::now();
    if !(4..=7).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "permanent table certificates cover n = 4..7; got {n}"
        )));
    }
    if n == 7 && !extended {
        return Err(Error::InvalidArgument(
            "the n = 7 sweep runs for hours; pass --extended to enable it".into(),
        ));
    }
    let dims = square_dims(n);
    let plan = FlatteningPlan::default_for(&dims)?;
    let divisor = plan.divisor(&dims);
    let t = perm_tensor(n)?;
    let report = symmetric_rank(&t, &plan, p, opts)?;
    let bound = border_bound(report.total_rank, divisor);
    let body = PermTableBody {
        n,
        prime: p,
        seed,
        rows: report.nrows,
        cols: report.ncols,
        divisor,
        orphan_cols: report.orphan_cols,
        covered_cols: report.covered_cols,
        classes: report.classes,
        total_rank: report.total_rank,
        complete: report.complete,
        bound,
    };
    let claim = if body.complete {
        format!(
            "the {}x{} flattening of perm_{n} has rank {} mod {p}; border rank of perm_{n} >= {bound}",
            body.rows, body.cols, body.total_rank
        )
    } else {
        format!(
            "partial orbit sweep ({} classes, {} of {} columns): flattening rank of perm_{n} mod {p} is at least {}; border rank of perm_{n} >= {bound}",
            body.classes.len(),
            body.covered_cols,
            body.cols,
            body.total_rank
        )
    };
    Ok(finish(claim, Verdict::ProvedModP, started, CertificateBody::PermTable(body)))
}

// ---------------------------------------------------------------------------
// perm_n rank bound valid in every characteristic
// ---------------------------------------------------------------------------

const UNIT_SEARCH_ATTEMPTS: u32 = 1_000;

/// Exhibit a square submatrix of the `perm_n` flattening with determinant
/// ±1 (n = 4 or 5). Such a minor stays invertible modulo every prime, so
/// the flattening rank — and with it the border-rank bound — holds over
/// every field. The witness is assembled one orbit class at a time: a unit
/// minor is found in the representative component and transported to every
/// component in its orbit by the basis-relabeling action.
pub fn certify_perm_finite_char(n: u32, seed: u64) -> Result<Certificate> {
    let started = Instant::now();
    if !(4..=5).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "finite-characteristic witnesses cover n = 4 and 5; got {n}"
        )));
    }
    let dims = square_dims(n);
    let plan = FlatteningPlan::default_for(&dims)?;
    let divisor = plan.divisor(&dims);
    let t = perm_tensor(n)?;
    let m = rkf_matrix(&t, &plan)?;
    let col_shape = m.col_shape.clone().expect("flattening matrices carry shapes");
    let row_shape = m.row_shape.clone().expect("flattening matrices carry shapes");
    let (decomp, classes) = orbit_classes(&m, n)?;
    let mut col_to_comp: BTreeMap<u64, usize> = BTreeMap::new();
    for (i, comp) in decomp.components.iter().enumerate() {
        for &c in &comp.cols {
            col_to_comp.insert(c, i);
        }
    }
    let perms = Permutation::enumerate_all(n)?;

    let mut global_rows: BTreeSet<u64> = BTreeSet::new();
    let mut global_cols: BTreeSet<u64> = BTreeSet::new();
    let mut class_minors = Vec::new();
    let mut failures = Vec::new();
    for (ci, class) in classes.iter().enumerate() {
        let rep = &decomp.components[class.component];
        let local_rank = rank_rational(&rep.matrix)?;
        let found = match find_det_submatrix(
            &rep.matrix,
            local_rank,
            &DetTarget::UnitAbs,
            seed.wrapping_add(ci as u64 * 1009),
            UNIT_SEARCH_ATTEMPTS,
        ) {
            Ok(f) => f,
            Err(Error::SearchExhausted { attempts, .. }) => {
                failures.push(format!(
                    "no unit {local_rank}x{local_rank} minor in the component at column {} after {attempts} attempts",
                    rep.cols[0] + 1
                ));
                continue;
            }
            Err(e) => return Err(e),
        };
        let rep_rows: Vec<u64> = found.rows.iter().map(|&i| rep.rows[i as usize]).collect();
        let rep_cols: Vec<u64> = found.cols.iter().map(|&i| rep.cols[i as usize]).collect();
        // One coset representative per component in the orbit.
        let rep_elem = product_unindex(&col_shape, rep.cols[0])?;
        let mut member_sigma: BTreeMap<usize, &Permutation> = BTreeMap::new();
        for sigma in &perms {
            let (_, image) = act(sigma, &rep_elem)?;
            let target_col = product_index(&col_shape, &image)?;
            let &target = col_to_comp
                .get(&target_col)
                .ok_or_else(|| Error::Internal("orbit image lands outside all components".into()))?;
            member_sigma.entry(target).or_insert(sigma);
        }
        if member_sigma.len() as u64 != class.class_size {
            return Err(Error::Internal(format!(
                "found {} coset representatives for a class of size {}",
                member_sigma.len(),
                class.class_size
            )));
        }
        for sigma in member_sigma.values() {
            for &r in &rep_rows {
                let (_, image) = act(sigma, &product_unindex(&row_shape, r)?)?;
                if !global_rows.insert(product_index(&row_shape, &image)?) {
                    return Err(Error::Internal("transported witness rows collide".into()));
                }
            }
            for &c in &rep_cols {
                let (_, image) = act(sigma, &product_unindex(&col_shape, c)?)?;
                if !global_cols.insert(product_index(&col_shape, &image)?) {
                    return Err(Error::Internal("transported witness columns collide".into()));
                }
            }
        }
        class_minors.push(ClassMinor {
            representative_col: rep.cols[0] + 1,
            size: local_rank,
            class_size: class.class_size,
            det: found.exact_det.as_ref().and_then(|d| d.to_i64()).unwrap_or(0),
        });
    }

    if !failures.is_empty() {
        let body = PermFiniteCharBody {
            n,
            seed,
            size: 0,
            divisor,
            bound: 0,
            rows: Vec::new(),
            cols: Vec::new(),
            det: "0".into(),
            crt_primes: Vec::new(),
            class_minors,
        };
        let claim = format!("FAILED: {}", failures.join("; "));
        return Ok(finish(claim, Verdict::Failed, started, CertificateBody::PermFiniteChar(body)));
    }

    let rows0: Vec<u64> = global_rows.into_iter().collect();
    let cols0: Vec<u64> = global_cols.into_iter().collect();
    if rows0.len() != cols0.len() {
        return Err(Error::Internal(format!(
            "witness has {} rows but {} columns",
            rows0.len(),
            cols0.len()
        )));
    }
    let sub = m.submatrix(&rows0, &cols0)?;
    let crt = det_crt(&sub, seed)?;
    let unit = crt.det.abs().is_one();
    let size = rows0.len() as u64;
    let bound = border_bound(size, divisor);
    let body = PermFiniteCharBody {
        n,
        seed,
        size,
        divisor,
        bound,
        rows: rows0.iter().map(|r| r + 1).collect(),
        cols: cols0.iter().map(|c| c + 1).collect(),
        det: crt.det.to_string(),
        crt_primes: crt.primes,
        class_minors,
    };
    let (verdict, claim) = if unit {
        (
            Verdict::Proved,
            format!(
                "the flattening of perm_{n} contains a {size}x{size} submatrix with determinant {}; its rank is at least {size} and the border rank of perm_{n} is at least {bound} over every field",
                body.det
            ),
        )
    } else {
        (
            Verdict::Failed,
            format!(
                "FAILED: assembled {size}x{size} witness has determinant {}, not ±1",
                body.det
            ),
        )
    };
    Ok(finish(claim, verdict, started, CertificateBody::PermFiniteChar(body)))
}

// ---------------------------------------------------------------------------
// Replay and persistence
// ---------------------------------------------------------------------------

/// Result of replaying a certificate.
#[derive(Clone, Debug, Serialize)]
pub struct ReplayReport {
    pub pass: bool,
    pub mismatches: Vec<String>,
}

fn diff_json(path: &str, a: &serde_json::Value, b: &serde_json::Value, out: &mut Vec<String>) {
    use serde_json::Value;
    if a == b {
        return;
    }
    match (a, b) {
        (Value::Object(ma), Value::Object(mb)) => {
            let keys: BTreeSet<&String> = ma.keys().chain(mb.keys()).collect();
            for key in keys {
                let na = ma.get(key.as_str()).unwrap_or(&Value::Null);
                let nb = mb.get(key.as_str()).unwrap_or(&Value::Null);
                diff_json(&format!("{path}/{key}"), na, nb, out);
            }
        }
        (Value::Array(va), Value::Array(vb)) if va.len() == vb.len() => {
            for (i, (na, nb)) in va.iter().zip(vb).enumerate() {
                diff_json(&format!("{path}/{i}"), na, nb, out);
            }
        }
        _ => out.push(format!("{path}: stored {a}, recomputed {b}")),
    }
}

fn compare_certificates(old: &Certificate, fresh: &Certificate, out: &mut Vec<String>) {
    if old.verdict != fresh.verdict {
        out.push(format!(
            "verdict: stored {}, recomputed {}",
            old.verdict, fresh.verdict
        ));
    }
    let a = serde_json::to_value(&old.body).expect("certificate bodies serialize");
    let b = serde_json::to_value(&fresh.body).expect("certificate bodies serialize");
    diff_json("", &a, &b, out);
}

/// Replay a certificate from its stored inputs and compare every recorded
/// fact. Witness-style certificates (the finite-characteristic minors) are
/// re-checked directly from the stored indices instead of re-searched.
pub fn verify_certificate(cert: &Certificate) -> Result<ReplayReport> {
    let mut mismatches = Vec::new();
    match &cert.body {
        CertificateBody::DetLower(b) => {
            let fresh = certify_det_lower(b.n, b.prime, b.exhaustive, b.seed)?;
            compare_certificates(cert, &fresh, &mut mismatches);
        }
        CertificateBody::Det4Rank12(b) => {
            let fresh = certify_det4_rank12(b.characteristic, b.fast, b.seed)?;
            compare_certificates(cert, &fresh, &mut mismatches);
        }
        CertificateBody::PermTable(b) => {
            let fresh = certify_perm_table(b.n, b.prime, b.seed, true, &SymmetricOptions::default())?;
            if b.complete {
                compare_certificates(cert, &fresh, &mut mismatches);
            } else if let CertificateBody::PermTable(fb) = &fresh.body {
                // A partial sweep is valid when every recorded class matches
                // the full rerun.
                let by_col: BTreeMap<u64, &ClassReport> =
                    fb.classes.iter().map(|c| (c.representative_col, c)).collect();
                for stored in &b.classes {
                    match by_col.get(&stored.representative_col) {
                        Some(full) if *full == stored => {}
                        Some(_) => mismatches.push(format!(
                            "class at column {} differs from the full rerun",
                            stored.representative_col
                        )),
                        None => mismatches.push(format!(
                            "class at column {} does not exist in the full rerun",
                            stored.representative_col
                        )),
                    }
                }
                let partial_sum: u64 = b.classes.iter().map(|c| c.contribution).sum();
                if partial_sum != b.total_rank {
                    mismatches.push("partial total_rank is not the sum of its classes".into());
                }
            }
        }
        CertificateBody::PermFiniteChar(b) => {
            let dims = square_dims(b.n);
            let plan = FlatteningPlan::default_for(&dims)?;
            let m = rkf_matrix(&perm_tensor(b.n)?, &plan)?;
            if b.rows.len() != b.cols.len() || b.rows.len() as u64 != b.size {
                mismatches.push("witness index lists disagree with the stored size".into());
            } else {
                let rows0: Vec<u64> = b.rows.iter().map(|r| r - 1).collect();
                let cols0: Vec<u64> = b.cols.iter().map(|c| c - 1).collect();
                let sub = m.submatrix(&rows0, &cols0)?;
                let det = det_crt_with_primes(&sub, &b.crt_primes)?;
                if det.to_string() != b.det {
                    mismatches.push(format!("witness determinant: stored {}, recomputed {det}", b.det));
                }
                let expected_verdict = if det.abs().is_one() { Verdict::Proved } else { Verdict::Failed };
                if cert.verdict != expected_verdict {
                    mismatches.push(format!(
                        "verdict: stored {}, witness supports {expected_verdict}",
                        cert.verdict
                    ));
                }
                if border_bound(b.size, b.divisor) != b.bound {
                    mismatches.push("stored bound is not ceil(size / divisor)".into());
                }
            }
        }
    }
    Ok(ReplayReport { pass: mismatches.is_empty(), mismatches })
}

fn certificate_basename(cert: &Certificate) -> String {
    match &cert.body {
        CertificateBody::DetLower(b) => match (b.prime, b.exhaustive) {
            (Some(p), _) => format!("det-lower-n{}-p{p}", b.n),
            (None, true) => format!("det-lower-n{}-exhaustive", b.n),
            (None, false) => format!("det-lower-n{}", b.n),
        },
        CertificateBody::Det4Rank12(b) => {
            let field = if b.characteristic == 0 {
                "char0".to_string()
            } else {
                format!("p{}", b.characteristic)
            };
            if b.fast {
                format!("det4-rank12-{field}-fast")
            } else {
                format!("det4-rank12-{field}")
            }
        }
        CertificateBody::PermTable(b) => format!("perm-table-n{}-p{}", b.n, b.prime),
        CertificateBody::PermFiniteChar(b) => format!("perm-finite-char-n{}", b.n),
    }
}

/// Write a certificate into `dir` without ever overwriting an existing
/// file: name collisions get a numeric suffix. Returns the path written.
pub fn write_certificate(cert: &Certificate, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let base = certificate_basename(cert);
    let mut k = 0u32;
    loop {
        let name = if k == 0 {
            format!("{base}.json")
        } else {
            format!("{base}-{}.json", k + 1)
        };
        let path = dir.join(name);
        if !path.exists() {
            let mut text = serde_json::to_string_pretty(cert)
                .map_err(|e| Error::Internal(format!("certificate serialization: {e}")))?;
            text.push('\n');
            std::fs::write(&path, text)?;
            return Ok(path);
        }
        k += 1;
    }
}

/// Read a certificate back from disk.
pub fn read_certificate(path: &Path) -> Result<Certificate> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("certificate {path:?}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_serialization_uses_the_display_strings() {
        for (v, s) in [
            (Verdict::Proved, "\"PROVED\""),
            (Verdict::ProvedModP, "\"PROVED-MOD-P\""),
            (Verdict::Probabilistic, "\"PROBABILISTIC\""),
            (Verdict::Failed, "\"FAILED\""),
        ] {
            assert_eq!(serde_json::to_string(&v).unwrap(), s);
            assert_eq!(serde_json::from_str::<Verdict>(s).unwrap(), v);
        }
    }

    #[test]
    fn det_lower_n3_certificate() {
        let cert = certify_det_lower(3, None, false, 11).unwrap();
        assert_eq!(cert.verdict, Verdict::Proved);
        let CertificateBody::DetLower(b) = &cert.body else { panic!("wrong body") };
        assert_eq!((b.rows, b.cols, b.nnz), (9, 9, 12));
        assert_eq!(b.rank, 9);
        assert_eq!(b.divisor, 2);
        assert_eq!(b.bound, 5);
        assert!(cert.claim.contains("det_3"));
        let replay = verify_certificate(&cert).unwrap();
        assert!(replay.pass, "{:?}", replay.mismatches);
    }

    #[test]
    fn det_lower_n4_certificate() {
        let cert = certify_det_lower(4, None, false, 11).unwrap();
        assert_eq!(cert.verdict, Verdict::Proved);
        let CertificateBody::DetLower(b) = &cert.body else { panic!("wrong body") };
        assert_eq!((b.rows, b.cols), (96, 96));
        assert_eq!(b.rank, 96);
        assert_eq!(b.bound, 11);
        let factored = b.det_factored.as_deref().unwrap();
        assert!(factored == "2^32" || factored == "-2^32", "got {factored}");
        let replay = verify_certificate(&cert).unwrap();
        assert!(replay.pass, "{:?}", replay.mismatches);
    }

    #[test]
    fn det_lower_mod_p_certificate() {
        let cert = certify_det_lower(4, Some(1_000_003), false, 5).unwrap();
        assert_eq!(cert.verdict, Verdict::ProvedModP);
        let CertificateBody::DetLower(b) = &cert.body else { panic!("wrong body") };
        assert_eq!(b.rank, 96);
        assert_eq!(b.bound, 11);
        let replay = verify_certificate(&cert).unwrap();
        assert!(replay.pass, "{:?}", replay.mismatches);
    }

    #[test]
    fn det4_rank12_fast_rational() {
        let cert = certify_det4_rank12(0, true, 7).unwrap();
        assert_eq!(cert.verdict, Verdict::Probabilistic, "claim: {}", cert.claim);
        assert!(cert.claim.starts_with("R(det_4) >= 12"));
        let CertificateBody::Det4Rank12(b) = &cert.body else { panic!("wrong body") };
        assert_eq!(b.lower_bound, 12);
        assert_eq!(b.cases.len(), 4);
        let CaseFacts::Univariate { matches, root_ranks, min_rank, .. } = &b.cases[0].facts else {
            panic!("span-four case must be univariate");
        };
        assert!(matches);
        let ranks: Vec<(i64, u64)> = root_ranks.iter().map(|r| (r.x, r.rank)).collect();
        assert_eq!(ranks, vec![(1, 95), (2, 93), (4, 92)]);
        assert_eq!(*min_rank, 92);
        for case in &b.cases[1..] {
            assert_eq!(case.case_rank, 96);
            assert_eq!(case.flattening_bound, 11);
        }
    }

    #[test]
    fn det4_rank12_fast_mod_5() {
        let cert = certify_det4_rank12(5, true, 7).unwrap();
        assert_eq!(cert.verdict, Verdict::Probabilistic, "claim: {}", cert.claim);
        let CertificateBody::Det4Rank12(b) = &cert.body else { panic!("wrong body") };
        assert_eq!(b.lower_bound, 12);
        let CaseFacts::Univariate { root_ranks, .. } = &b.cases[0].facts else {
            panic!("span-four case must be univariate");
        };
        assert_eq!(root_ranks.len(), 3);
        for r in root_ranks {
            assert_eq!(r.rank, 91);
            assert!(!r.exact);
            assert_eq!(r.witness_rows.len(), 91);
            let residue = r.witness_residue.unwrap();
            let target = powmod(2, if r.x == 2 { 23 } else { 20 }, 5);
            assert!(residue == target || residue == 5 - target);
        }
        let two_32: BigInt = BigInt::one() << 32;
        for case in &b.cases[1..] {
            let CaseFacts::ConstantGrid { residue_mod_p, .. } = &case.facts else {
                panic!("span <= 3 cases are grid checks");
            };
            assert_eq!(residue_mod_p.unwrap(), bigint_mod_p(&two_32, 5));
        }
    }

    #[test]
    fn perm_table_n4_certificate() {
        let cert = certify_perm_table(4, 1_000_003, 3, false, &SymmetricOptions::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::ProvedModP);
        let CertificateBody::PermTable(b) = &cert.body else { panic!("wrong body") };
        assert!(b.complete);
        assert_eq!((b.cols, b.total_rank, b.bound), (96, 70, 8));
        let replay = verify_certificate(&cert).unwrap();
        assert!(replay.pass, "{:?}", replay.mismatches);
    }

    #[test]
    fn perm_finite_char_n4_certificate() {
        let cert = certify_perm_finite_char(4, 17).unwrap();
        assert_eq!(cert.verdict, Verdict::Proved, "claim: {}", cert.claim);
        let CertificateBody::PermFiniteChar(b) = &cert.body else { panic!("wrong body") };
        assert_eq!(b.size, 70);
        assert_eq!(b.bound, 8);
        assert!(b.det == "1" || b.det == "-1");
        let covered: u64 = b.class_minors.iter().map(|c| c.size * c.class_size).sum();
        assert_eq!(covered, 70);
        let replay = verify_certificate(&cert).unwrap();
        assert!(replay.pass, "{:?}", replay.mismatches);
    }

    #[test]
    fn certificates_round_trip_through_disk() {
        let cert = certify_det_lower(3, None, false, 2).unwrap();
        let dir = std::env::temp_dir().join(format!("koszul-certs-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        let first = write_certificate(&cert, &dir).unwrap();
        assert!(first.file_name().unwrap().to_str().unwrap().starts_with("det-lower-n3"));
        let second = write_certificate(&cert, &dir).unwrap();
        assert_ne!(first, second, "existing certificates must never be overwritten");
        assert!(second.to_str().unwrap().contains("-2.json"));
        let back = read_certificate(&first).unwrap();
        assert_eq!(back.claim, cert.claim);
        assert_eq!(back.verdict, cert.verdict);
        assert_eq!(back.body, cert.body);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn tampered_certificates_fail_replay() {
        let cert = certify_det_lower(3, None, false, 2).unwrap();
        let mut tampered = cert.clone();
        if let CertificateBody::DetLower(b) = &mut tampered.body {
            b.rank = 8;
            b.bound = 4;
        }
        let replay = verify_certificate(&tampered).unwrap();
        assert!(!replay.pass);
        assert!(!replay.mismatches.is_empty());
    }
}
