//! Exact recursive Koszul flattenings of tensors.
//!
//! A Koszul flattening turns a tensor `T` in `V_1 ⊗ … ⊗ V_d` into a large
//! structured matrix `T^∧` whose rank divided by a binomial divisor lower
//! bounds the border rank of `T`. This crate builds those matrices exactly,
//! computes their ranks and determinants over `ℚ` and over prime fields,
//! exploits the symmetric-group action on determinant and permanent tensors
//! to decompose the computation into small blocks, and emits re-checkable
//! certificates for the resulting lower bounds.
//!
//! The main entry points are [`flattening::rkf_matrix`] (matrix
//! construction), [`linalg`] (exact rank/determinant kernels),
//! [`symmetry::symmetric_rank`] (block decomposition under the group
//! action) and [`certify`] (end-to-end certified workflows).

pub mod certify;
pub mod exterior;
pub mod flattening;
pub mod linalg;
pub mod symmetry;
pub mod tensor;
pub mod textio;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("bad prime {p}: {reason}")]
    BadPrime { p: u64, reason: String },
    #[error("too large: {0}")]
    TooLarge(String),
    #[error("need more primes: {0}")]
    NeedMorePrimes(String),
    #[error("search exhausted after {attempts} attempts: {context}")]
    SearchExhausted { attempts: u64, context: String },
    #[error("equivariance violation: {0}")]
    EquivarianceViolation(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
