use crate::bagging::{BaggedState, Commitment, Payload, StructureKind};
use crate::digest::{Digest, Hasher};
use crate::error::{Error, Result};
use crate::node_math::NodeCoord;
use crate::store::NodeStore;

use super::{fold, Layout, Reject, Side, Slot};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProofElement {
    pub digest: Digest,
    pub side: Side,
    /// The element stands for the default value and is not transmitted.
    pub is_default: bool,
}

impl ProofElement {
    fn new(digest: Digest, side: Side) -> Self {
        ProofElement {
            digest,
            side,
            is_default: false,
        }
    }

    fn slot(&self) -> Slot {
        Slot {
            side: self.side,
            default: self.is_default,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MembershipProof {
    pub kind: StructureKind,
    pub index: u64,
    pub n: u64,
    pub elements: Vec<ProofElement>,
    /// Peak of the partner mountain, carried outside the element list.
    pub extension: Option<Digest>,
}

impl MembershipProof {
    /// Transmitted digests, extension excluded.
    pub fn size(&self) -> usize {
        self.elements.iter().filter(|e| !e.is_default).count()
    }

    pub fn size_with_extension(&self) -> usize {
        self.size() + self.extension.is_some() as usize
    }
}

/// Proof from the node store alone; valid for the append-only kinds.
pub fn gen_from_store(kind: StructureKind, store: &NodeStore, i: u64, n: u64) -> Result<MembershipProof> {
    if i == 0 || i > n {
        return Err(Error::ItemOutOfRange { index: i, n });
    }
    let lay = Layout::new(kind, n);
    let width = store.width();
    let fetch = |idx: u64| -> Result<Digest> {
        store
            .get(idx)
            .ok_or_else(|| Error::Integrity(format!("store has no node {idx}")))
    };
    let mut elements = Vec::new();
    match kind {
        StructureKind::Chain => {
            let prev = if i == 1 { Digest::default_of(width) } else { fetch(2 * i)? };
            elements.push(ProofElement::new(prev, Side::Left));
            for j in i + 1..=n {
                elements.push(ProofElement::new(fetch(2 * j + 1)?, Side::Right));
            }
        }
        StructureKind::Ummb => {
            // Walk sibling(parent(j)) from the leaf up to the peak.
            let mut j = NodeCoord::leaf(i);
            while !j.is_peak(n) {
                let side = if j.is_left() { Side::Right } else { Side::Left };
                elements.push(ProofElement::new(fetch(j.sibling().index())?, side));
                j = j.parent();
            }
        }
        StructureKind::Ummr => {
            let loc = lay.locate(i).expect("item in range");
            let m = loc.mountain;
            for lvl in 0..m.height {
                let block = (i - m.first) >> lvl;
                let sib = block ^ 1;
                let last = m.first + ((sib + 1) << lvl) - 1;
                let side = if block & 1 == 0 { Side::Right } else { Side::Left };
                elements.push(ProofElement::new(fetch(lay.node_index(last, lvl))?, side));
            }
        }
        k => return Err(Error::UnsupportedKind(k)),
    }
    Ok(MembershipProof {
        kind,
        index: i,
        n,
        elements,
        extension: None,
    })
}

pub fn gen_membership(state: &BaggedState, i: u64) -> Result<MembershipProof> {
    let kind = state.kind();
    let n = state.n();
    if i == 0 || i > n {
        return Err(Error::ItemOutOfRange { index: i, n });
    }
    let base = match kind {
        StructureKind::Chain | StructureKind::Ummb | StructureKind::Ummr => {
            return gen_from_store(kind, state.store(), i, n)
        }
        StructureKind::Mmr | StructureKind::Fmmr => StructureKind::Ummr,
        StructureKind::Fmmb | StructureKind::Mmb => StructureKind::Ummb,
    };
    let mut proof = gen_from_store(base, state.store(), i, n)?;
    proof.kind = kind;
    let lay = Layout::new(kind, n);
    let loc = lay.locate(i).expect("item in range");
    let peaks = state.peaks();
    let t = peaks.len();
    let v = loc.v;
    let dflt = ProofElement {
        digest: state.hasher().default_digest(),
        side: Side::Left,
        is_default: true,
    };
    let rn = state.range_nodes();
    let el = &mut proof.elements;
    match kind {
        StructureKind::Fmmr | StructureKind::Fmmb => {
            el.push(if v == 0 { dflt } else { ProofElement::new(rn[v - 1], Side::Left) });
            el.extend(peaks[v + 1..].iter().map(|p| ProofElement::new(p.digest, Side::Right)));
        }
        StructureKind::Mmr => {
            if v + 1 < t {
                let acc = if v + 1 < t - 1 { rn[v + 1] } else { peaks[t - 1].digest };
                el.push(ProofElement::new(acc, Side::Right));
            }
            el.extend(peaks[..v].iter().rev().map(|p| ProofElement::new(p.digest, Side::Left)));
        }
        StructureKind::Mmb => {
            let (_, end) = state.ranges()[loc.g];
            el.push(if loc.l == 0 { dflt } else { ProofElement::new(rn[v - 1], Side::Left) });
            el.extend(peaks[v + 1..end].iter().map(|p| ProofElement::new(p.digest, Side::Right)));
            let belts = state.belt_nodes();
            el.push(if loc.g == 0 {
                dflt
            } else {
                ProofElement::new(belts[loc.g - 1], Side::Left)
            });
            for g in loc.g + 1..state.ranges().len() {
                el.push(ProofElement::new(state.range_root(g), Side::Right));
            }
        }
        _ => unreachable!(),
    }
    Ok(proof)
}

/// Check `leaf` as item `i` against `commitment`.
///
/// Proofs of the append-only kinds also verify against any commitment size
/// `c >= i`, using the first slots of the proof (plus the extension, which
/// stands in for the next element once the partner mountain merges).
pub fn verify_membership(
    h: &Hasher,
    commitment: &Commitment,
    i: u64,
    leaf: &Digest,
    proof: &MembershipProof,
) -> std::result::Result<(), Reject> {
    let kind = commitment.kind;
    if proof.kind != kind {
        return Err(Reject::KindMismatch {
            proof: proof.kind,
            commitment: kind,
        });
    }
    let c = commitment.n;
    if proof.index != i || i == 0 || i > c || i > proof.n {
        return Err(Reject::Index { index: i, n: c });
    }
    if leaf.width() != h.width() || proof.elements.iter().any(|e| e.digest.width() != h.width()) {
        return Err(Reject::Width);
    }
    let lay = Layout::new(kind, c);
    let expected = lay.shape(i).ok_or(Reject::Index { index: i, n: c })?;
    let mut avail: Vec<ProofElement> = proof.elements.clone();
    if c != proof.n {
        if !matches!(kind, StructureKind::Ummb | StructureKind::Ummr | StructureKind::Chain) {
            return Err(Reject::Size {
                proof: proof.n,
                commitment: c,
            });
        }
        if let Some(ext) = proof.extension {
            let side = Layout::new(kind, proof.n)
                .extension_side(i)
                .ok_or(Reject::Shape)?;
            avail.push(ProofElement::new(ext, side));
        }
        if expected.len() > avail.len() {
            return Err(Reject::Size {
                proof: proof.n,
                commitment: c,
            });
        }
        avail.truncate(expected.len());
    } else if avail.len() != expected.len() {
        return Err(Reject::Shape);
    }
    if avail.iter().map(|e| e.slot()).ne(expected.iter().copied()) {
        return Err(Reject::Shape);
    }
    let dflt = h.default_digest();
    if kind == StructureKind::Chain && i == 1 && avail[0].digest != dflt {
        return Err(Reject::Digest);
    }
    let acc = fold(
        h,
        *leaf,
        avail
            .iter()
            .map(|e| (e.side, if e.is_default { dflt } else { e.digest })),
    );
    match (&commitment.payload, kind) {
        (Payload::Peaks(peaks), StructureKind::Ummb | StructureKind::Ummr) => {
            let heights_ok = peaks.len() == lay.t()
                && peaks.iter().zip(&lay.peaks).all(|(p, m)| p.0 == m.height);
            if !heights_ok {
                return Err(Reject::Commitment);
            }
            let v = lay.locate(i).expect("item in range").v;
            if peaks[v].1 == acc {
                Ok(())
            } else {
                Err(Reject::Digest)
            }
        }
        (Payload::Root(root), _) if !kind.is_unbagged() => {
            if *root == acc {
                Ok(())
            } else {
                Err(Reject::Digest)
            }
        }
        _ => Err(Reject::Commitment),
    }
}

/// Result of bringing a proof forward to a larger size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Update {
    pub proof: MembershipProof,
    /// Digests that had to be read to perform the update.
    pub digests_read: usize,
}

/// Update `proof` to size `n_new` using `state` (at size `n_new`; for the
/// append-only kinds any larger state works since only the store is read).
pub fn update_membership(proof: &MembershipProof, state: &BaggedState, n_new: u64) -> Result<Update> {
    if n_new < proof.n {
        return Err(Error::BadSizes {
            from: proof.n,
            to: n_new,
        });
    }
    if state.kind() != proof.kind {
        return Err(Error::KindMismatch {
            kind: proof.kind,
            expected: state.kind(),
        });
    }
    if n_new == proof.n {
        return Ok(Update {
            proof: proof.clone(),
            digests_read: 0,
        });
    }
    let kind = proof.kind;
    match kind {
        StructureKind::Chain | StructureKind::Ummb | StructureKind::Ummr => {
            if state.n() < n_new {
                return Err(Error::StaleProof {
                    proof: n_new,
                    state: state.n(),
                });
            }
            let lay = Layout::new(kind, n_new);
            let shape = lay.shape(proof.index).ok_or(Error::ItemOutOfRange {
                index: proof.index,
                n: n_new,
            })?;
            let have = proof.elements.len();
            if shape.len() < have {
                return Err(Error::Integrity("proof is longer than its updated form".into()));
            }
            let fresh = gen_from_store(kind, state.store(), proof.index, n_new)?;
            if fresh.elements[..have] != proof.elements[..] {
                return Err(Error::Integrity("stored proof is not a prefix of the current one".into()));
            }
            let mut read = 0;
            for (j, e) in fresh.elements[have..].iter().enumerate() {
                let held = j == 0 && proof.extension == Some(e.digest);
                if !e.is_default && !held {
                    read += 1;
                }
            }
            Ok(Update {
                proof: fresh,
                digests_read: read,
            })
        }
        _ => {
            if state.n() != n_new {
                return Err(Error::StaleProof {
                    proof: n_new,
                    state: state.n(),
                });
            }
            let fresh = gen_membership(state, proof.index)?;
            let read = fresh
                .elements
                .iter()
                .enumerate()
                .filter(|(j, e)| !e.is_default && proof.elements.get(*j) != Some(e))
                .count();
            Ok(Update {
                proof: fresh,
                digests_read: read,
            })
        }
    }
}

/// Attach the partner mountain's peak when the proof's mountain is about to
/// merge; otherwise return the proof unchanged.
pub fn extend_recent(proof: &MembershipProof, state: &BaggedState) -> Result<MembershipProof> {
    if state.kind() != StructureKind::Ummb {
        return Err(Error::UnsupportedKind(state.kind()));
    }
    if proof.n != state.n() {
        return Err(Error::StaleProof {
            proof: proof.n,
            state: state.n(),
        });
    }
    extend_from_store(proof, state.store())
}

/// Same as [`extend_recent`], reading the partner peak from a store of any
/// size at least `proof.n`.
pub fn extend_from_store(proof: &MembershipProof, store: &NodeStore) -> Result<MembershipProof> {
    if proof.kind != StructureKind::Ummb {
        return Err(Error::UnsupportedKind(proof.kind));
    }
    let lay = Layout::new(proof.kind, proof.n);
    let mut out = proof.clone();
    out.extension = match lay.extension_side(proof.index) {
        Some(side) => {
            let v = lay.locate(proof.index).expect("item in range").v;
            let partner = match side {
                Side::Right => v + 1,
                Side::Left => v - 1,
            };
            let idx = lay.peaks[partner].index;
            Some(
                store
                    .get(idx)
                    .ok_or_else(|| Error::Integrity(format!("store has no node {idx}")))?,
            )
        }
        None => None,
    };
    Ok(out)
}
