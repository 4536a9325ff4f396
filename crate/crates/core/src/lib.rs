//! Append-only list commitments built from mountain forests: Merkle chains,
//! MMR variants, and Merkle Mountain Belts, with membership and increment
//! proofs, a bulletin-board sync model, and proof-size analysis.

pub mod analysis;
pub mod bagging;
pub mod compat;
pub mod digest;
pub mod error;
pub mod forest;
pub mod node_math;
pub mod proofs;
pub mod store;
pub mod sync;

pub use bagging::{BaggedState, Commitment, Payload, StructureKind};
pub use digest::{hasher_for_width, sha256, toy, Digest, HashFn, Hasher};
pub use error::{Error, MathError, Result};
pub use forest::{Forest, ForestKind, Peak};
pub use store::NodeStore;
