//! End-to-end acceptance checks for every shipped claim: the exact
//! flattening ranks and determinants of the determinant tensors, the
//! four-case analysis behind R(det_4) >= 12 (rationally and mod 3, 5, 7),
//! the permanent rank table with its symmetry sweep, the unit-determinant
//! witnesses valid over every field, and the exact property suites backing
//! the machinery.
//!
//! Each check prints one `criterion N PASS/FAIL` line (visible with
//! `cargo test --test acceptance -- --nocapture`) and fails the test on any
//! mismatch or blown time budget. The n = 7 permanent row is excluded here:
//! it is a multi-hour run gated behind `koszul certify perm-table --n 7
//! --extended`.

use std::time::{Duration, Instant};

use num::{BigInt, BigRational, One};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use koszul::certify::{
    certify_det4_rank12, certify_det_lower, certify_perm_finite_char, certify_perm_table,
    read_certificate, verify_certificate, write_certificate, CaseFacts, CertificateBody, Verdict,
};
use koszul::flattening::{rkf_matrix, FlatteningPlan, SparseMatrix};
use koszul::linalg::{rank_mod_p, rank_rational, submatrix_det_mod_p};
use koszul::symmetry::{
    connected_components, equivariance_check, symmetric_rank, Permutation, SymmetricOptions, Twist,
};
use koszul::tensor::{det_tensor, expand_rank_one, linear_combine, perm_tensor, RankOneTerm, Tensor};

const SEED: u64 = 0x1729;
const TABLE_PRIME: u64 = 1_000_003;

type Check = std::result::Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !($cond) {
            return Err(format!($($msg)+));
        }
    };
}

fn ck<T>(r: koszul::Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// Run one acceptance criterion, print its single pass/fail line, and fail
/// the test on a wrong fact or a blown time budget.
fn criterion(number: u32, name: &str, limit: Duration, f: impl FnOnce() -> Check) {
    let started = Instant::now();
    let outcome = f();
    let elapsed = started.elapsed();
    match outcome {
        Ok(msg) => {
            let in_time = elapsed <= limit;
            let line = format!(
                "criterion {number} {}: {name}: {msg} [{:.2?} of {:.0?} allowed]",
                if in_time { "PASS" } else { "FAIL" },
                elapsed,
                limit
            );
            println!("{line}");
            assert!(in_time, "{line}");
        }
        Err(msg) => {
            let line = format!("criterion {number} FAIL: {name}: {msg}");
            println!("{line}");
            panic!("{line}");
        }
    }
}

#[test]
fn criterion_1_det3_rank_and_bound() {
    criterion(1, "det_3 flattening", Duration::from_secs(1), || {
        let cert = ck(certify_det_lower(3, None, false, SEED))?;
        let CertificateBody::DetLower(b) = &cert.body else {
            return Err("wrong certificate body".into());
        };
        ensure!((b.rows, b.cols) == (9, 9), "matrix is {}x{}, expected 9x9", b.rows, b.cols);
        ensure!(b.rank == 9, "rank {}, expected 9", b.rank);
        ensure!(b.bound == 5, "bound {}, expected 5", b.bound);
        ensure!(cert.verdict == Verdict::Proved, "verdict {}", cert.verdict);
        Ok("9x9, rank 9, border rank >= 5".into())
    });
}

#[test]
fn criterion_2_det4_determinant() {
    criterion(2, "det_4 determinant", Duration::from_secs(10), || {
        let cert = ck(certify_det_lower(4, None, false, SEED))?;
        let CertificateBody::DetLower(b) = &cert.body else {
            return Err("wrong certificate body".into());
        };
        ensure!((b.rows, b.cols) == (96, 96), "matrix is {}x{}, expected 96x96", b.rows, b.cols);
        let factored = b.det_factored.as_deref().unwrap_or("absent");
        ensure!(
            factored == "2^32" || factored == "-2^32",
            "determinant {factored}, expected |det| = 2^32"
        );
        ensure!(b.bound == 11, "bound {}, expected 11", b.bound);
        ensure!(cert.verdict == Verdict::Proved, "verdict {}", cert.verdict);
        Ok(format!("96x96, det = {factored}, border rank >= 11"))
    });
}

#[test]
fn criterion_3_det5_residues() {
    criterion(3, "det_5 prime congruences", Duration::from_secs(30 * 60), || {
        let cert = ck(certify_det_lower(5, None, false, SEED))?;
        let CertificateBody::DetLower(b) = &cert.body else {
            return Err("wrong certificate body".into());
        };
        ensure!((b.rows, b.cols) == (2500, 2500), "matrix is {}x{}", b.rows, b.cols);
        ensure!(b.residue_checks.len() == 3, "{} residue checks, expected 3", b.residue_checks.len());
        let mut signs = std::collections::BTreeSet::new();
        for c in &b.residue_checks {
            ensure!(c.prime >= 1 << 61, "prime {} is not 62-bit", c.prime);
            ensure!(
                c.matched_sign != 0,
                "residue {} mod {} matches neither sign of 2^1600 * 3^25",
                c.computed,
                c.prime
            );
            signs.insert(c.matched_sign);
        }
        ensure!(signs.len() == 1, "inconsistent signs across primes");
        ensure!(b.bound == 27, "bound {}, expected 27", b.bound);
        ensure!(cert.verdict == Verdict::Probabilistic, "verdict {}", cert.verdict);
        Ok("det = (+/-)2^1600 * 3^25 at 3 independent 62-bit primes, border rank >= 27".into())
    });
}

#[test]
fn criterion_4_det4_rank12_rational() {
    criterion(4, "R(det_4) >= 12 over the rationals", Duration::from_secs(15 * 60), || {
        let cert = ck(certify_det4_rank12(0, false, SEED))?;
        ensure!(
            cert.claim == "R(det_4) >= 12, = 12 with cited upper bound",
            "claim was {:?}",
            cert.claim
        );
        ensure!(cert.verdict == Verdict::Proved, "verdict {}", cert.verdict);
        let CertificateBody::Det4Rank12(b) = &cert.body else {
            return Err("wrong certificate body".into());
        };
        ensure!(b.lower_bound == 12, "lower bound {}", b.lower_bound);
        let CaseFacts::Univariate { matches, root_ranks, .. } = &b.cases[0].facts else {
            return Err("missing univariate case".into());
        };
        ensure!(*matches, "determinant polynomial does not match -2^20 (x-1)(x-2)^4(x-4)^4");
        let ranks: Vec<(i64, u64)> = root_ranks.iter().map(|r| (r.x, r.rank)).collect();
        ensure!(
            ranks == [(1, 95), (2, 93), (4, 92)],
            "root ranks {ranks:?}, expected 95/93/92 at x = 1/2/4"
        );
        for case in &b.cases[1..] {
            let CaseFacts::ConstantGrid { resolved_det, proved_identity, grid_points, .. } =
                &case.facts
            else {
                return Err("missing grid case".into());
            };
            ensure!(
                resolved_det == "2^32" || resolved_det == "-2^32",
                "grid determinant {resolved_det}"
            );
            ensure!(
                *proved_identity && *grid_points > 0,
                "identity for {:?} not proved by a full grid",
                case.family
            );
        }
        Ok("polynomial exact, root ranks 95/93/92, constant cases proved on full grids".into())
    });
}

/// Rebuild the span-four matrix at one root independently of the certifier
/// and re-check a stored witness minor against its recorded residue.
fn recheck_witness(x: i64, rows1: &[u64], cols1: &[u64], residue: u64, p: u64) -> Check {
    let det4 = ck(det_tensor(4))?;
    let mut elem = ck(Tensor::new(vec![4; 4]))?;
    ck(elem.set(&[1, 2, 3, 4], BigRational::one()))?;
    let perturbed = ck(linear_combine(
        &BigRational::one(),
        &det4,
        &BigRational::from_integer(BigInt::from(-x)),
        &elem,
    ))?;
    let plan = ck(FlatteningPlan::default_for(&[4; 4]))?;
    let m = ck(rkf_matrix(&perturbed, &plan))?;
    let rows0: Vec<u64> = rows1.iter().map(|r| r - 1).collect();
    let cols0: Vec<u64> = cols1.iter().map(|c| c - 1).collect();
    let det = ck(submatrix_det_mod_p(&m, &rows0, &cols0, p))?;
    ensure!(
        det == residue,
        "witness at x = {x} mod {p}: stored residue {residue}, recomputed {det}"
    );
    Ok(String::new())
}

#[test]
fn criterion_5_det4_rank12_mod_small_primes() {
    criterion(5, "R(det_4) >= 12 in characteristics 3, 5, 7", Duration::from_secs(3 * 30 * 60), || {
        let mut found = Vec::new();
        for p in [3u64, 5, 7] {
            let cert = ck(certify_det4_rank12(p, false, SEED))?;
            ensure!(
                cert.verdict == Verdict::Proved,
                "characteristic {p}: verdict {} ({})",
                cert.verdict,
                cert.claim
            );
            let CertificateBody::Det4Rank12(b) = &cert.body else {
                return Err("wrong certificate body".into());
            };
            ensure!(b.lower_bound == 12, "characteristic {p}: lower bound {}", b.lower_bound);
            let CaseFacts::Univariate { root_ranks, .. } = &b.cases[0].facts else {
                return Err("missing univariate case".into());
            };
            let expected_roots = if p == 3 { 2 } else { 3 };
            ensure!(
                root_ranks.len() == expected_roots,
                "characteristic {p}: {} roots certified, expected {expected_roots}",
                root_ranks.len()
            );
            for r in root_ranks {
                ensure!(
                    r.witness_rows.len() == 91 && r.witness_cols.len() == 91,
                    "characteristic {p}, x = {}: witness is {}x{}",
                    r.x,
                    r.witness_rows.len(),
                    r.witness_cols.len()
                );
                let residue = r
                    .witness_residue
                    .ok_or_else(|| format!("characteristic {p}, x = {}: no residue", r.x))?;
                // |minor| must reduce to 2^20 (x = 1, 4) or 2^23 (x = 2).
                let target = koszul::linalg::primes::powmod(2, if r.x == 2 { 23 } else { 20 }, p);
                ensure!(
                    residue == target || residue == (p - target) % p,
                    "characteristic {p}, x = {}: residue {residue}, expected +/-{target}",
                    r.x
                );
                recheck_witness(r.x, &r.witness_rows, &r.witness_cols, residue, p)?;
            }
            found.push(format!("p={p}: {} witnesses", root_ranks.len()));
        }
        Ok(format!("91x91 minors found and independently re-verified ({})", found.join(", ")))
    });
}

#[test]
fn criterion_6_perm_rank_table() {
    let rows: [(u32, u64, u64, u64, Duration); 3] = [
        (4, 96, 70, 8, Duration::from_secs(10)),
        (5, 2500, 1426, 15, Duration::from_secs(2 * 60)),
        (6, 162_000, 70_692, 29, Duration::from_secs(60 * 60)),
    ];
    criterion(6, "perm_n rank table (n = 4, 5, 6)", Duration::from_secs(63 * 60 + 10), || {
        let mut summary = Vec::new();
        for (n, size, rank, bound, limit) in rows {
            let started = Instant::now();
            let cert = ck(certify_perm_table(n, TABLE_PRIME, SEED, false, &SymmetricOptions::default()))?;
            let elapsed = started.elapsed();
            let CertificateBody::PermTable(b) = &cert.body else {
                return Err("wrong certificate body".into());
            };
            ensure!(b.complete, "n = {n}: sweep incomplete");
            ensure!(cert.verdict == Verdict::ProvedModP, "n = {n}: verdict {}", cert.verdict);
            ensure!(
                (b.cols, b.total_rank, b.bound) == (size, rank, bound),
                "n = {n}: (size, rank, bound) = ({}, {}, {}), expected ({size}, {rank}, {bound})",
                b.cols,
                b.total_rank,
                b.bound
            );
            ensure!(
                elapsed <= limit,
                "n = {n}: took {elapsed:.2?}, allowed {limit:.0?}"
            );
            summary.push(format!("n={n}: ({size}, {rank}, {bound}) in {elapsed:.2?}"));
        }
        Ok(summary.join("; "))
    });
}

#[test]
fn criterion_7_symmetric_rank_cross_validation() {
    criterion(7, "orbit sweep equals direct rank (n = 4, 5)", Duration::from_secs(15 * 60), || {
        for n in [4u32, 5] {
            let t = ck(perm_tensor(n))?;
            let plan = ck(FlatteningPlan::default_for(&vec![n; n as usize]))?;
            let report = ck(symmetric_rank(&t, &plan, TABLE_PRIME, &SymmetricOptions::default()))?;
            let m = ck(rkf_matrix(&t, &plan))?;
            let direct = ck(rank_mod_p(&m, TABLE_PRIME))? as u64;
            ensure!(
                report.total_rank == direct,
                "n = {n}: orbit sweep gives {}, direct elimination gives {direct}",
                report.total_rank
            );
        }
        Ok("orbit-by-orbit rank equals whole-matrix rank mod the same prime".into())
    });
}

#[test]
fn criterion_8_perm_unit_witnesses() {
    criterion(8, "perm unit-determinant witnesses (n = 4, 5)", Duration::from_secs(125 * 60), || {
        let dir = std::env::temp_dir().join(format!("koszul-acceptance-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        let mut summary = Vec::new();
        for (n, size, limit) in [(4u32, 70u64, Duration::from_secs(5 * 60)), (5, 1426, Duration::from_secs(120 * 60))] {
            let started = Instant::now();
            let cert = ck(certify_perm_finite_char(n, SEED))?;
            let elapsed = started.elapsed();
            ensure!(
                cert.verdict == Verdict::Proved,
                "n = {n}: verdict {} ({})",
                cert.verdict,
                cert.claim
            );
            let CertificateBody::PermFiniteChar(b) = &cert.body else {
                return Err("wrong certificate body".into());
            };
            ensure!(b.size == size, "n = {n}: witness is {}x{}, expected {size}x{size}", b.size, b.size);
            ensure!(
                b.det == "1" || b.det == "-1",
                "n = {n}: determinant {}, expected +/-1",
                b.det
            );
            ensure!(elapsed <= limit, "n = {n}: took {elapsed:.2?}, allowed {limit:.0?}");
            // Persist, reload, and replay from the stored indices.
            let path = ck(write_certificate(&cert, &dir))?;
            let back = ck(read_certificate(&path))?;
            let replay = ck(verify_certificate(&back))?;
            ensure!(replay.pass, "n = {n}: replay mismatches {:?}", replay.mismatches);
            summary.push(format!("n={n}: {size}x{size} det {} in {elapsed:.2?}", b.det));
        }
        let _ = std::fs::remove_dir_all(&dir);
        Ok(summary.join("; "))
    });
}

// --- criterion 9: the exact, seed-fixed property suites -------------------

fn rank_one_flattenings_have_divisor_rank() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for i in 0..50 {
        let dims: Vec<u32> = (0..4).map(|_| rng.gen_range(3..=4)).collect();
        let vectors: Vec<Vec<BigRational>> = dims
            .iter()
            .map(|&d| {
                (0..d)
                    .map(|_| BigRational::from_integer(BigInt::from(rng.gen_range(1..=5i64))))
                    .collect()
            })
            .collect();
        let term = ck(RankOneTerm::new(vectors))?;
        let t = expand_rank_one(&term);
        let plan = ck(FlatteningPlan::default_for(&dims))?;
        let m = ck(rkf_matrix(&t, &plan))?;
        let rank = ck(rank_rational(&m))?;
        let divisor = plan.divisor(&dims);
        ensure!(
            rank == divisor,
            "instance {i} (dims {dims:?}): rank-one flattening has rank {rank}, divisor {divisor}"
        );
    }
    Ok(String::new())
}

fn flattenings_are_equivariant() -> Check {
    for n in 3..=5u32 {
        let dims = vec![n; n as usize];
        let plan = ck(FlatteningPlan::default_for(&dims))?;
        let swap = ck(Permutation::transposition(n, 1, 2))?;
        let cycle = ck(Permutation::from_images((1..=n).map(|i| i % n + 1).collect()))?;
        for sigma in [swap, cycle] {
            for (t, twist) in [
                (ck(perm_tensor(n))?, Twist::Plain),
                (ck(det_tensor(n))?, Twist::Sign),
            ] {
                let ok = ck(equivariance_check(&t, &plan, &sigma, twist))?;
                ensure!(
                    ok,
                    "n = {n}: flattening not equivariant under {:?} with twist {twist:?}",
                    sigma.images()
                );
            }
        }
    }
    Ok(String::new())
}

fn modular_rank_never_exceeds_rational_rank() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0xABCD);
    for i in 0..30 {
        let mut m = SparseMatrix::new(8, 10);
        for r in 0..8 {
            for c in 0..10 {
                if rng.gen_bool(0.4) {
                    let v = rng.gen_range(-9..=9i64);
                    if v != 0 {
                        ck(m.set(r, c, BigRational::from_integer(BigInt::from(v))))?;
                    }
                }
            }
        }
        let rational = ck(rank_rational(&m))?;
        for p in [3u64, 5, TABLE_PRIME] {
            let modular = ck(rank_mod_p(&m, p))? as u64;
            ensure!(
                modular <= rational,
                "instance {i}: rank mod {p} is {modular} > rational rank {rational}"
            );
        }
    }
    Ok(String::new())
}

fn example_matrix_decomposes_as_documented() -> Check {
    // 6x7 worked example: two components, an isolated column, a zero row.
    let entries: [(u64, u64, i64); 9] = [
        (0, 0, 1),
        (0, 3, 2),
        (1, 1, 3),
        (1, 6, 4),
        (2, 3, 5),
        (2, 5, 6),
        (4, 4, 7),
        (4, 6, 8),
        (5, 5, 9),
    ];
    let mut m = SparseMatrix::new(6, 7);
    for (r, c, v) in entries {
        ck(m.set(r, c, BigRational::from_integer(BigInt::from(v))))?;
    }
    let decomp = ck(connected_components(&m))?;
    ensure!(decomp.components.len() == 2, "{} components, expected 2", decomp.components.len());
    let cols: Vec<Vec<u64>> = decomp.components.iter().map(|c| c.cols.clone()).collect();
    ensure!(
        cols == [vec![0, 3, 5], vec![1, 4, 6]],
        "component columns {cols:?}, expected [[0, 3, 5], [1, 4, 6]]"
    );
    ensure!(decomp.orphan_cols == [2], "orphan columns {:?}, expected [2]", decomp.orphan_cols);
    ensure!(decomp.zero_rows == [3], "zero rows {:?}, expected [3]", decomp.zero_rows);
    let total: u64 = decomp
        .components
        .iter()
        .map(|c| rank_rational(&c.matrix))
        .collect::<koszul::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?
        .iter()
        .sum();
    let direct = ck(rank_rational(&m))?;
    ensure!(total == 5 && direct == 5, "component ranks sum to {total}, direct rank {direct}");
    Ok(String::new())
}

fn group_laws_hold_exhaustively() -> Check {
    for n in [3u32, 4] {
        let all = ck(Permutation::enumerate_all(n))?;
        for a in &all {
            let inv = a.inverse();
            ensure!(
                a.compose(&inv) == ck(Permutation::from_images((1..=n).collect()))?,
                "n = {n}: sigma * sigma^-1 != id for {:?}",
                a.images()
            );
            for b in &all {
                let ab = a.compose(b);
                ensure!(
                    ab.sign() == a.sign() * b.sign(),
                    "n = {n}: sign is not multiplicative on {:?} * {:?}",
                    a.images(),
                    b.images()
                );
                for c in &all {
                    ensure!(
                        ab.compose(c) == a.compose(&b.compose(c)),
                        "n = {n}: associativity fails"
                    );
                }
            }
        }
    }
    Ok(String::new())
}

#[test]
fn criterion_9_property_suites() {
    criterion(9, "exact property suites", Duration::from_secs(15 * 60), || {
        rank_one_flattenings_have_divisor_rank()?;
        flattenings_are_equivariant()?;
        modular_rank_never_exceeds_rational_rank()?;
        example_matrix_decomposes_as_documented()?;
        group_laws_hold_exhaustively()?;
        Ok("rank-one x50, equivariance n <= 5, modular rank dominance x30, \
            worked decomposition, exhaustive group laws n = 3, 4"
            .into())
    });
}
