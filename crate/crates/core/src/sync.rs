//! Manager / participant model over a public bulletin board.
//!
//! Every digest a participant pulls from a board is metered, together with
//! the hash evaluations it spends checking what it received.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::bagging::{BagRecord, BaggedState, Commitment, Payload, StructureKind};
use crate::digest::{CountingHash, Digest, Hasher};
use crate::error::{Error, Result};
use crate::node_math::{self, NodeCoord};
use crate::proofs::{self, IncrementProof, Layout, MembershipProof};

/// Read access to a published structure.
pub trait Board {
    fn state(&self) -> &BaggedState;

    fn kind(&self) -> StructureKind {
        self.state().kind()
    }

    fn n(&self) -> u64 {
        self.state().n()
    }

    fn head(&self) -> Commitment {
        self.state().commitment()
    }

    fn read(&self, index: u64) -> Option<Digest> {
        self.state().store().get(index)
    }

    fn leaf(&self, i: u64) -> Option<Digest> {
        self.state().leaf(i)
    }

    fn increment_proof(&self, m: u64) -> Result<IncrementProof> {
        proofs::gen_increment(self.state(), m)
    }

    fn membership_proof(&self, i: u64) -> Result<MembershipProof> {
        proofs::gen_membership(self.state(), i)
    }
}

/// The honest manager's board: node store, per-append records and head.
#[derive(Clone, Debug)]
pub struct BulletinBoard {
    state: BaggedState,
    log: Vec<BagRecord>,
}

impl BulletinBoard {
    pub fn new(kind: StructureKind, hasher: Hasher) -> Self {
        BulletinBoard {
            state: BaggedState::new(kind, hasher),
            log: Vec::new(),
        }
    }

    /// Hash `item` to a leaf, append it and publish the new head.
    pub fn manager_append(&mut self, item: &[u8]) -> Result<Commitment> {
        let leaf = self.state.hasher().hash(item);
        self.append_leaf(leaf)
    }

    pub fn append_leaf(&mut self, leaf: Digest) -> Result<Commitment> {
        let rec = self.state.append(leaf)?;
        self.log.push(rec);
        Ok(self.state.commitment())
    }

    pub fn log(&self) -> &[BagRecord] {
        &self.log
    }

    /// Rebuild from the stored leaves and compare with the published head.
    pub fn audit(&self) -> Result<()> {
        let leaves: Vec<Digest> = (1..=self.n()).map(|i| self.state.leaf(i).expect("leaf")).collect();
        let rebuilt = BaggedState::rebuild(self.kind(), self.state.hasher().clone(), &leaves)?;
        if rebuilt.commitment() != self.head() || rebuilt.store() != self.state.store() {
            return Err(Error::Integrity("board head does not match its node log".into()));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.state.checkpoint_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        let state = BaggedState::read_checkpoint(&mut bytes.as_slice())?;
        Ok(BulletinBoard { state, log: Vec::new() })
    }
}

impl Board for BulletinBoard {
    fn state(&self) -> &BaggedState {
        &self.state
    }
}

/// A board whose manager rewrote one historical item and republished
/// everything consistently on top of the forgery.
#[derive(Clone, Debug)]
pub struct AdversarialBoard {
    state: BaggedState,
}

impl AdversarialBoard {
    pub fn rewrite(honest: &BulletinBoard, item: u64, replacement: &[u8]) -> Result<Self> {
        let st = honest.state();
        let n = st.n();
        if item == 0 || item > n {
            return Err(Error::ItemOutOfRange { index: item, n });
        }
        let mut leaves: Vec<Digest> = (1..=n).map(|i| st.leaf(i).expect("leaf")).collect();
        leaves[item as usize - 1] = st.hasher().hash(replacement);
        Ok(AdversarialBoard {
            state: BaggedState::rebuild(st.kind(), st.hasher().clone(), &leaves)?,
        })
    }
}

impl Board for AdversarialBoard {
    fn state(&self) -> &BaggedState {
        &self.state
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Op {
    SyncCommitment,
    Increment,
    Membership,
    UpdateProofs,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCost {
    pub digests_received: u64,
    pub hash_evals: u64,
}

#[derive(Clone, Debug, Default)]
pub struct CccMeter {
    pub digests_received: u64,
    pub hash_evals: u64,
    pub per_op: BTreeMap<Op, OpCost>,
}

impl CccMeter {
    fn record(&mut self, op: Op, cost: OpCost) {
        self.digests_received += cost.digests_received;
        self.hash_evals += cost.hash_evals;
        let e = self.per_op.entry(op).or_default();
        e.digests_received += cost.digests_received;
        e.hash_evals += cost.hash_evals;
    }

    pub fn reset(&mut self) {
        *self = CccMeter::default();
    }
}

#[derive(Clone, Debug)]
pub struct StoredProof {
    pub leaf: Digest,
    pub proof: MembershipProof,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UpdateReport {
    pub cost: OpCost,
    pub updated: usize,
    /// Items whose proofs failed re-verification and were dropped.
    pub dropped: Vec<u64>,
}

pub struct Participant {
    counter: Arc<CountingHash>,
    hasher: Hasher,
    commitment: Commitment,
    proofs: BTreeMap<u64, StoredProof>,
    meter: CccMeter,
}

impl Participant {
    /// Start from a commitment obtained out of band.
    pub fn new(hasher: Hasher, commitment: Commitment) -> Self {
        let counter = CountingHash::new(hasher);
        Participant {
            hasher: counter.clone(),
            counter,
            commitment,
            proofs: BTreeMap::new(),
            meter: CccMeter::default(),
        }
    }

    pub fn commitment(&self) -> &Commitment {
        &self.commitment
    }

    pub fn n(&self) -> u64 {
        self.commitment.n
    }

    pub fn kind(&self) -> StructureKind {
        self.commitment.kind
    }

    pub fn meter(&self) -> &CccMeter {
        &self.meter
    }

    pub fn meter_mut(&mut self) -> &mut CccMeter {
        &mut self.meter
    }

    pub fn proofs(&self) -> &BTreeMap<u64, StoredProof> {
        &self.proofs
    }

    /// Keep a proof, after checking it against the local commitment.
    pub fn store_proof(&mut self, leaf: Digest, proof: MembershipProof) -> Result<()> {
        proofs::verify_membership(&self.hasher, &self.commitment, proof.index, &leaf, &proof)?;
        self.proofs.insert(proof.index, StoredProof { leaf, proof });
        Ok(())
    }

    fn finish(&mut self, op: Op, digests: u64, hashes_before: u64) -> OpCost {
        let cost = OpCost {
            digests_received: digests,
            hash_evals: self.counter.count() - hashes_before,
        };
        self.meter.record(op, cost);
        cost
    }

    fn check_board<B: Board + ?Sized>(&self, board: &B) -> Result<u64> {
        if board.kind() != self.kind() {
            return Err(Error::KindMismatch {
                kind: board.kind(),
                expected: self.kind(),
            });
        }
        let n = board.n();
        if n < self.n() {
            return Err(Error::BadSizes { from: self.n(), to: n });
        }
        Ok(n)
    }

    /// Bring the local commitment to the board's size.
    ///
    /// Unbagged lazy forests fetch only peaks created since the local size,
    /// recomputing a new peak locally when both its children are already
    /// held. MMB routes through increment-proof verification.
    pub fn sync_commitment<B: Board + ?Sized>(&mut self, board: &B) -> Result<OpCost> {
        let n = self.check_board(board)?;
        let m = self.n();
        let before = self.counter.count();
        if n == m {
            return Ok(self.finish(Op::SyncCommitment, 0, before));
        }
        match self.kind() {
            StructureKind::Ummb => {
                let m_peaks = node_math::ummb_peaks(m);
                let held: BTreeMap<u64, (u32, Digest)> = m_peaks
                    .iter()
                    .zip(self.commitment.peaks())
                    .map(|(c, p)| (c.index, *p))
                    .collect();
                let mut fetched = 0u64;
                let mut out = Vec::new();
                for pk in node_math::ummb_peaks(n) {
                    let node = NodeCoord::new(pk.index)?;
                    let d = if let Some(&(_, d)) = held.get(&pk.index) {
                        d
                    } else {
                        let local = node
                            .children()
                            .ok()
                            .and_then(|(l, r)| Some((held.get(&l.index())?.1, held.get(&r.index())?.1)));
                        match local {
                            Some((l, r)) => self.hasher.node(&l, &r),
                            None => {
                                fetched += 1;
                                board
                                    .read(pk.index)
                                    .filter(|d| d.width() == self.hasher.width())
                                    .ok_or_else(|| Error::Integrity(format!("board is missing node {}", pk.index)))?
                            }
                        }
                    };
                    out.push((pk.height, d));
                }
                self.commitment = Commitment {
                    kind: StructureKind::Ummb,
                    n,
                    payload: Payload::Peaks(out),
                };
                Ok(self.finish(Op::SyncCommitment, fetched, before))
            }
            StructureKind::Mmb => {
                let cost = self.verify_increment_from(board)?;
                Ok(self.finish(Op::SyncCommitment, cost, before))
            }
            k => Err(Error::UnsupportedKind(k)),
        }
    }

    /// Fetch the head and an increment proof; adopt the head only if the
    /// proof links it to the local commitment. Returns digests received.
    fn verify_increment_from<B: Board + ?Sized>(&mut self, board: &B) -> Result<u64> {
        let m = self.n();
        let proof = board.increment_proof(m)?;
        let head = board.head();
        // The unbagged head is assembled from held peaks plus the new ones.
        let (head, head_digests) = match (&head.payload, self.kind()) {
            (Payload::Peaks(peaks), StructureKind::Ummb) => {
                let held: BTreeMap<u64, (u32, Digest)> = node_math::ummb_peaks(m)
                    .iter()
                    .zip(self.commitment.peaks())
                    .map(|(c, p)| (c.index, *p))
                    .collect();
                let coords = node_math::ummb_peaks(head.n);
                if coords.len() != peaks.len() {
                    return Err(proofs::Reject::Commitment.into());
                }
                // A published peak that differs from a held one is a rewrite.
                if coords.iter().zip(peaks).any(|(c, p)| held.get(&c.index).is_some_and(|h| h != p)) {
                    return Err(proofs::Reject::Digest.into());
                }
                let fresh = coords.iter().filter(|c| !held.contains_key(&c.index)).count() as u64;
                let assembled = peaks.clone();
                (
                    Commitment {
                        payload: Payload::Peaks(assembled),
                        ..head
                    },
                    fresh,
                )
            }
            _ => {
                let s = head.size() as u64;
                (head, s)
            }
        };
        proofs::verify_increment(&self.hasher, &self.commitment, &head, &proof)?;
        self.commitment = head;
        Ok(proof.size() as u64 + head_digests)
    }

    pub fn fetch_and_verify_increment<B: Board + ?Sized>(&mut self, board: &B) -> Result<OpCost> {
        let n = self.check_board(board)?;
        let before = self.counter.count();
        if n == self.n() {
            return Ok(self.finish(Op::Increment, 0, before));
        }
        let digests = self.verify_increment_from(board)?;
        Ok(self.finish(Op::Increment, digests, before))
    }

    /// Fetch, verify and keep the proof of item `i`.
    ///
    /// Behind the board, append-only kinds take the first slots of the
    /// board's current proof; bagged kinds must be synced first.
    pub fn fetch_and_verify_membership<B: Board + ?Sized>(&mut self, board: &B, i: u64) -> Result<OpCost> {
        let n = self.check_board(board)?;
        let m = self.n();
        if i == 0 || i > n {
            return Err(Error::ItemOutOfRange { index: i, n });
        }
        if i > m {
            return Err(Error::ItemOutOfRange { index: i, n: m });
        }
        let before = self.counter.count();
        let mut proof = board.membership_proof(i)?;
        if m < n {
            if !matches!(self.kind(), StructureKind::Ummb | StructureKind::Ummr | StructureKind::Chain) {
                return Err(Error::StaleProof { proof: n, state: m });
            }
            let len = Layout::new(self.kind(), m).shape(i).expect("i <= m").len();
            proof.elements.truncate(len);
            proof.n = m;
        }
        let leaf = board.leaf(i).ok_or(Error::ItemOutOfRange { index: i, n })?;
        let digests = proof.size() as u64;
        self.store_proof(leaf, proof)?;
        Ok(self.finish(Op::Membership, digests, before))
    }

    /// Update every stored proof to the local size and re-verify it.
    pub fn update_stored_proofs<B: Board + ?Sized>(&mut self, board: &B) -> Result<UpdateReport> {
        let n = self.check_board(board)?;
        if n != self.n() {
            return Err(Error::StaleProof {
                proof: self.n(),
                state: n,
            });
        }
        let before = self.counter.count();
        let mut report = UpdateReport::default();
        let mut digests = 0;
        let items: Vec<u64> = self.proofs.keys().copied().collect();
        for i in items {
            let sp = self.proofs[&i].clone();
            if sp.proof.n == n {
                continue;
            }
            let ok = proofs::update_membership(&sp.proof, board.state(), n).and_then(|u| {
                digests += u.digests_read as u64;
                proofs::verify_membership(&self.hasher, &self.commitment, i, &sp.leaf, &u.proof)?;
                Ok(u.proof)
            });
            match ok {
                Ok(p) => {
                    report.updated += 1;
                    self.proofs.insert(i, StoredProof { leaf: sp.leaf, proof: p });
                }
                Err(_) => {
                    report.dropped.push(i);
                    self.proofs.remove(&i);
                }
            }
        }
        report.cost = self.finish(Op::UpdateProofs, digests, before);
        Ok(report)
    }
}
