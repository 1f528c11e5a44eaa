//! Exact linear algebra: prime-field elimination, fraction-free rational
//! methods, residue/CRT determinants, parametric matrices, and determinant-
//! targeted submatrix searches.

pub mod exact;
pub mod modp;
pub mod param;
pub mod primes;
pub mod submatrix;

pub use exact::{
    crt_lift_symmetric, det_bareiss, det_crt, det_crt_with_primes, hadamard_bound, rank_rational,
    CrtDet, DET_BAREISS_CAP, RANK_RATIONAL_CAP,
};
pub use modp::{det_mod_p, rank_mod_p, PrimeFieldMatrix};
pub use param::{
    det_constant_check, det_exact, det_univariate, lagrange_interpolate, GridCheck, MultiPoly,
    ParamMatrix, Polynomial,
};
pub use primes::{draw_primes, is_prime_u64, Montgomery, PRIME_TABLE_LEN};
pub use submatrix::{
    find_det_submatrix, submatrix_det_exact, submatrix_det_mod_p, DetTarget, SubmatrixFound,
};
