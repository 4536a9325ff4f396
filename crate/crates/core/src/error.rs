use thiserror::Error;

use crate::bagging::StructureKind;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum MathError {
    #[error("2-adic valuation of zero is undefined")]
    Nu2OfZero,
    #[error("index {0} is a sentinel slot")]
    SentinelIndex(u64),
    #[error("node {0} is a leaf and has no children")]
    LeafHasNoChildren(u64),
    #[error("index {index} lies beyond a store of {n} items")]
    IndexOutOfRange { index: u64, n: u64 },
    #[error("list size {0} exceeds the supported maximum")]
    SizeTooLarge(u64),
}

#[derive(Error, Debug)]
pub enum Error {
    #[error(transparent)]
    Math(#[from] MathError),
    #[error("digest width {got} does not match store width {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("unsupported digest width {0}")]
    UnsupportedWidth(usize),
    #[error("item index {index} out of range for list of size {n}")]
    ItemOutOfRange { index: u64, n: u64 },
    #[error("operation not supported for {0}")]
    UnsupportedKind(StructureKind),
    #[error("{kind} proof does not match {expected}")]
    KindMismatch {
        kind: StructureKind,
        expected: StructureKind,
    },
    #[error("cannot move from size {from} to size {to}")]
    BadSizes { from: u64, to: u64 },
    #[error("stale proof: proof is at size {proof}, state is at size {state}")]
    StaleProof { proof: u64, state: u64 },
    #[error("malformed encoding: {0}")]
    Malformed(String),
    #[error("integrity check failed: {0}")]
    Integrity(String),
    #[error("verification failed: {0}")]
    Rejected(#[from] crate::proofs::Reject),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
