use num_bigint::BigInt;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("singular Weierstrass equation (discriminant is zero)")]
    SingularCurve,

    #[error("{0} is not prime")]
    NotPrime(BigInt),

    #[error("p = {0} is not a prime >= 5")]
    BadResidueCharacteristic(u64),

    #[error("division by zero")]
    DivisionByZero,

    #[error("precision must be at least 1, got {0}")]
    BadPrecision(i64),

    #[error("logarithm of zero")]
    LogOfZero,

    #[error("p-adic operands have different primes ({0} and {1})")]
    PrimeMismatch(u64, u64),

    #[error("factorization budget exhausted; unfactored cofactor {0}")]
    FactorizationBudget(BigInt),

    #[error("conductor 1: no elliptic curve over Q has good reduction everywhere")]
    ConductorOne,

    #[error("prime {prime} exceeds the point-counting budget {cap}")]
    PointCountBudget { prime: u64, cap: u64 },

    #[error("{0} is not a negative fundamental discriminant")]
    NotFundamental(BigInt),

    #[error("gcd(D, N) = {gcd} is not 1")]
    DiscNotCoprime { gcd: BigInt },

    #[error("reduction at {prime} is {found}, expected multiplicative")]
    NotMultiplicative { prime: u64, found: String },

    #[error("precision {precision} is insufficient to certify {what}")]
    PrecisionExhausted { what: &'static str, precision: i64 },

    #[error("repeated prime {0} in squarefree product")]
    RepeatedPrime(u64),

    #[error("negative Selmer corank")]
    NegativeCorank,

    #[error("invalid Frobenius module: {0}")]
    InvalidModule(String),

    #[error("module of order {order} exceeds the enumeration cap {cap}")]
    ModuleCap { order: u128, cap: u128 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Machine-readable code used in job reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::SingularCurve => "SINGULAR_CURVE",
            Error::NotPrime(_) => "NOT_PRIME",
            Error::BadResidueCharacteristic(_) => "BAD_P",
            Error::DivisionByZero => "DIVISION_BY_ZERO",
            Error::BadPrecision(_) => "BAD_PRECISION",
            Error::LogOfZero => "LOG_OF_ZERO",
            Error::PrimeMismatch(..) => "PRIME_MISMATCH",
            Error::FactorizationBudget(_) => "FACTORIZATION_BUDGET",
            Error::ConductorOne => "CONDUCTOR_ONE",
            Error::PointCountBudget { .. } => "POINT_COUNT_BUDGET",
            Error::NotFundamental(_) => "NOT_FUNDAMENTAL_DISC",
            Error::DiscNotCoprime { .. } => "DISC_NOT_COPRIME",
            Error::NotMultiplicative { .. } => "NOT_MULTIPLICATIVE",
            Error::PrecisionExhausted { .. } => "PRECISION_EXHAUSTED",
            Error::RepeatedPrime(_) => "REPEATED_PRIME",
            Error::NegativeCorank => "NEGATIVE_CORANK",
            Error::InvalidModule(_) => "INVALID_MODULE",
            Error::ModuleCap { .. } => "MODULE_CAP",
            Error::InvalidInput(_) => "INVALID_INPUT",
        }
    }
}
