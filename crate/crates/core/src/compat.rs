//! Randomized asynchrony trials for the lazy unbagged forest.
//!
//! Items are synthetic: item `i` under seed `s` is `s ‖ i` (both little
//! endian u64) and its leaf is the hash of those sixteen octets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bagging::{unbagged_commitment_at, BaggedState, Commitment, StructureKind};
use crate::digest::{Digest, Hasher};
use crate::error::Result;
use crate::proofs::{extend_from_store, gen_from_store, verify_membership, MembershipProof};
use crate::store::NodeStore;

pub fn synthetic_item(seed: u64, i: u64) -> [u8; 16] {
    let mut out = [0u8; 16];
    out[..8].copy_from_slice(&seed.to_le_bytes());
    out[8..].copy_from_slice(&i.to_le_bytes());
    out
}

pub fn synthetic_leaves(h: &Hasher, seed: u64, n: u64) -> Vec<Digest> {
    (1..=n).map(|i| h.hash(&synthetic_item(seed, i))).collect()
}

/// A failed check: item `i`, proof size `n`, commitment size `c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CompatFailure {
    pub i: u64,
    pub n: u64,
    pub c: u64,
}

#[derive(Clone, Debug, Default)]
pub struct CompatReport {
    pub trials: u64,
    /// Individual proof/commitment verifications.
    pub checks: u64,
    pub failures: Vec<CompatFailure>,
}

impl CompatReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    fn merge(mut self, other: CompatReport) -> CompatReport {
        self.trials += other.trials;
        self.checks += other.checks;
        self.failures.extend(other.failures);
        self
    }
}

/// Window of further appends through which an extended proof of item `i`
/// made at size `n` stays valid.
pub fn recent_window(i: u64, n: u64) -> u64 {
    (n - i + 1) / 5
}

fn ummb_store(h: &Hasher, seed: u64, n: u64) -> Result<NodeStore> {
    let leaves = synthetic_leaves(h, seed, n);
    Ok(BaggedState::rebuild(StructureKind::Ummb, h.clone(), &leaves)?.store().clone())
}

/// Commitments at every size `0..=n` of a lazy unbagged store.
fn commitments(store: &NodeStore, n: u64) -> Result<Vec<Commitment>> {
    (0..=n)
        .map(|c| unbagged_commitment_at(StructureKind::Ummb, store, c))
        .collect()
}

fn check(h: &Hasher, com: &Commitment, leaf: &Digest, proof: &MembershipProof) -> bool {
    verify_membership(h, com, proof.index, leaf, proof).is_ok()
}

fn leaf_at(store: &NodeStore, i: u64) -> Digest {
    store.get(2 * i + 1).expect("leaf in store")
}

/// Extended proofs of random `(i, n)` with `n <= n_max`, checked against
/// every commitment from `n` through `n + recent_window(i, n)`.
pub fn recent_proof_compat(h: &Hasher, seed: u64, trials: u64, n_max: u64) -> Result<CompatReport> {
    let store = ummb_store(h, seed, n_max + n_max / 5)?;
    let coms = commitments(&store, n_max + n_max / 5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks: Vec<(u64, u64)> = (0..trials)
        .map(|_| {
            let n = rng.gen_range(1..=n_max);
            (rng.gen_range(1..=n), n)
        })
        .collect();
    picks
        .par_iter()
        .map(|&(i, n)| -> Result<CompatReport> {
            let proof = extend_from_store(&gen_from_store(StructureKind::Ummb, &store, i, n)?, &store)?;
            let leaf = leaf_at(&store, i);
            let mut rep = CompatReport {
                trials: 1,
                ..Default::default()
            };
            for c in n..=n + recent_window(i, n) {
                rep.checks += 1;
                if !check(h, &coms[c as usize], &leaf, &proof) {
                    rep.failures.push(CompatFailure { i, n, c });
                }
            }
            Ok(rep)
        })
        .try_reduce(CompatReport::default, |a, b| Ok(a.merge(b)))
}

/// Proofs at a random size `n <= n_max` checked against an older commitment
/// of random size `m` with `i <= m <= n`.
pub fn old_commitment_compat(h: &Hasher, seed: u64, trials: u64, n_max: u64) -> Result<CompatReport> {
    let store = ummb_store(h, seed, n_max)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6f6c64);
    let mut rep = CompatReport::default();
    for _ in 0..trials {
        let n = rng.gen_range(1..=n_max);
        let m = rng.gen_range(1..=n);
        let i = rng.gen_range(1..=m);
        let proof = gen_from_store(StructureKind::Ummb, &store, i, n)?;
        rep.trials += 1;
        rep.checks += 1;
        if !check(h, &unbagged_commitment_at(StructureKind::Ummb, &store, m)?, &leaf_at(&store, i), &proof) {
            rep.failures.push(CompatFailure { i, n, c: m });
        }
    }
    Ok(rep)
}
