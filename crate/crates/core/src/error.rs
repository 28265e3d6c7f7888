// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid field modulus {modulus}: {reason}")]
    InvalidModulus { modulus: u64, reason: &'static str },

    #[error("inversion of zero")]
    ZeroInverse,

    #[error("{value} is outside the signed range [-{bound}, {bound}]")]
    SignedOutOfRange { value: i64, bound: u64 },

    #[error("invalid sharing parameters: {0}")]
    InvalidSharingParams(String),

    #[error("expected {expected} secrets, got {got}")]
    WrongSecretCount { expected: usize, got: usize },

    #[error("insufficient shares: need {needed}, got {got}")]
    InsufficientShares { needed: usize, got: usize },

    #[error("share index {0} is not a valid party index")]
    UnknownShareIndex(usize),

    #[error("abort: too many dropouts ({survivors} surviving parties, {needed} required)")]
    TooManyDropouts { survivors: usize, needed: usize },

    #[error("rounding acceptance failure after {attempts} attempts")]
    RoundingAcceptance { attempts: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("discrete Gaussian scale {0} is below 1/2")]
    NoiseScaleTooSmall(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "modulus too small: parameters need a field of at least {required_bits} bits, \
         have {available_bits}"
    )]
    InfeasibleModulus { required_bits: u32, available_bits: u32 },

    #[error("{0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("factorization residual max|A - BC| = {residual:e} exceeds {tolerance:e}")]
    FactorizationResidual { residual: f64, tolerance: f64 },

    #[error("malformed factorization file: {0}")]
    FactorizationFormat(String),

    #[error("threshold budget violated: t_c + t_d = {sum} but (1/2 - mu) * n = {bound}")]
    ThresholdBudget { sum: usize, bound: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
