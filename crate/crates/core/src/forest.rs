//! Bottom mountain layer: the lazily merged U-MMB forest and the eagerly
//! merged U-MMR forest, both writing into an append-only [`NodeStore`].
//!
//! U-MMB uses the sparse layout where item `n` lives at index `2n + 1` and the
//! merge peak of append `n` (if any) at `2n + 2`. U-MMR uses plain post-order.

use crate::digest::{Digest, Hasher};
use crate::error::{Error, Result};
use crate::node_math::{self, NodeCoord, MAX_N};
use crate::store::NodeStore;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ForestKind {
    /// Lazy merges, at most one per append.
    Ummb,
    /// Eager merges, cascading.
    Ummr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Peak {
    pub height: u32,
    pub digest: Digest,
    /// Store index of the peak node.
    pub index: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MergeRecord {
    pub left: Peak,
    pub right: Peak,
    pub merged: Peak,
    /// Left-to-right vector position of the merged peak after the append.
    pub position: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AppendRecord {
    pub n: u64,
    pub leaf_index: u64,
    pub merges: Vec<MergeRecord>,
    /// Internal hash evaluations spent.
    pub hashes: u64,
}

impl AppendRecord {
    /// Leftmost peak position touched by this append.
    pub fn first_changed(&self, peaks_after: usize) -> usize {
        self.merges
            .iter()
            .map(|m| m.position)
            .min()
            .unwrap_or(peaks_after - 1)
    }
}

#[derive(Clone)]
pub struct Forest {
    kind: ForestKind,
    hasher: Hasher,
    n: u64,
    peaks: Vec<Peak>,
    /// Vector positions of right members of mergeable pairs, rightmost on top.
    pairs: Vec<usize>,
    store: NodeStore,
    hash_count: u64,
}

impl std::fmt::Debug for Forest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Forest")
            .field("kind", &self.kind)
            .field("n", &self.n)
            .field("peaks", &self.peaks)
            .finish()
    }
}

impl Forest {
    pub fn new(kind: ForestKind, hasher: Hasher) -> Self {
        let mut store = NodeStore::new(hasher.width());
        if kind == ForestKind::Ummb {
            for _ in 0..3 {
                store.push_sentinel();
            }
        }
        Forest {
            kind,
            hasher,
            n: 0,
            peaks: Vec::new(),
            pairs: Vec::new(),
            store,
            hash_count: 0,
        }
    }

    pub fn kind(&self) -> ForestKind {
        self.kind
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn peaks(&self) -> &[Peak] {
        &self.peaks
    }

    pub fn pairs(&self) -> &[usize] {
        &self.pairs
    }

    pub fn store(&self) -> &NodeStore {
        &self.store
    }

    pub fn hasher(&self) -> &Hasher {
        &self.hasher
    }

    pub fn hash_count(&self) -> u64 {
        self.hash_count
    }

    pub fn width(&self) -> usize {
        self.hasher.width()
    }

    /// The peak list, left-to-right; this is the unbagged commitment.
    pub fn unbagged_commitment(&self) -> Vec<(u32, Digest)> {
        self.peaks.iter().map(|p| (p.height, p.digest)).collect()
    }

    pub fn append(&mut self, leaf: Digest) -> Result<AppendRecord> {
        match self.kind {
            ForestKind::Ummb => self.append_ummb(leaf),
            ForestKind::Ummr => self.append_ummr(leaf),
        }
    }

    fn check_leaf(&self, leaf: &Digest) -> Result<()> {
        if leaf.width() != self.width() {
            return Err(Error::WidthMismatch {
                expected: self.width(),
                got: leaf.width(),
            });
        }
        if self.n >= MAX_N {
            return Err(crate::error::MathError::SizeTooLarge(self.n + 1).into());
        }
        Ok(())
    }

    /// Add step then at most one merge step.
    pub fn append_ummb(&mut self, leaf: Digest) -> Result<AppendRecord> {
        if self.kind != ForestKind::Ummb {
            return Err(Error::UnsupportedKind(crate::bagging::StructureKind::Ummr));
        }
        self.check_leaf(&leaf)?;
        self.n += 1;
        let n = self.n;
        let leaf_index = self.store.push(leaf)?;
        debug_assert_eq!(leaf_index, 2 * n + 1);
        if self.peaks.last().is_some_and(|p| p.height == 0) {
            self.pairs.push(self.peaks.len());
        }
        self.peaks.push(Peak {
            height: 0,
            digest: leaf,
            index: leaf_index,
        });
        let mut merges = Vec::new();
        let mut hashes = 0;
        if let Some(pos) = self.pairs.pop() {
            let right = self.peaks[pos];
            let left = self.peaks.remove(pos - 1);
            let digest = self.hasher.node(&left.digest, &right.digest);
            hashes += 1;
            let index = self.store.push(digest)?;
            debug_assert_eq!(index, 2 * n + 2);
            let merged = Peak {
                height: right.height + 1,
                digest,
                index,
            };
            let at = pos - 1;
            self.peaks[at] = merged;
            if at > 0 && self.peaks[at - 1].height == merged.height {
                self.pairs.push(at);
            }
            merges.push(MergeRecord {
                left,
                right,
                merged,
                position: at,
            });
        } else {
            self.store.push_sentinel();
        }
        self.hash_count += hashes;
        Ok(AppendRecord {
            n,
            leaf_index,
            merges,
            hashes,
        })
    }

    /// Add step then merge while the two rightmost peaks share a height.
    pub fn append_ummr(&mut self, leaf: Digest) -> Result<AppendRecord> {
        if self.kind != ForestKind::Ummr {
            return Err(Error::UnsupportedKind(crate::bagging::StructureKind::Ummb));
        }
        self.check_leaf(&leaf)?;
        self.n += 1;
        let leaf_index = self.store.push(leaf)?;
        self.peaks.push(Peak {
            height: 0,
            digest: leaf,
            index: leaf_index,
        });
        let mut merges = Vec::new();
        let mut hashes = 0;
        while self.peaks.len() >= 2 {
            let t = self.peaks.len();
            let (l, r) = (self.peaks[t - 2], self.peaks[t - 1]);
            if l.height != r.height {
                break;
            }
            let digest = self.hasher.node(&l.digest, &r.digest);
            hashes += 1;
            let index = self.store.push(digest)?;
            self.peaks.truncate(t - 2);
            let merged = Peak {
                height: l.height + 1,
                digest,
                index,
            };
            self.peaks.push(merged);
            merges.push(MergeRecord {
                left: l,
                right: r,
                merged,
                position: t - 2,
            });
        }
        self.hash_count += hashes;
        Ok(AppendRecord {
            n: self.n,
            leaf_index,
            merges,
            hashes,
        })
    }

    /// Children of a mountain node, by store index and height.
    pub fn children_of(&self, index: u64, height: u32) -> (u64, u64) {
        debug_assert!(height > 0);
        match self.kind {
            ForestKind::Ummb => {
                let (l, r) = NodeCoord::new(index)
                    .and_then(|c| c.children())
                    .expect("internal node");
                (l.index(), r.index())
            }
            ForestKind::Ummr => node_math::postorder_children(index, height),
        }
    }

    /// Store index of the leaf holding item `item`.
    pub fn leaf_index(&self, item: u64) -> u64 {
        match self.kind {
            ForestKind::Ummb => 2 * item + 1,
            ForestKind::Ummr => node_math::ummr_leaf_position(item),
        }
    }

    /// Mountain coordinates for the forest of size `n`, left-to-right.
    pub fn mountains_at(kind: ForestKind, n: u64) -> Vec<node_math::MountainCoord> {
        match kind {
            ForestKind::Ummb => node_math::ummb_peaks(n),
            ForestKind::Ummr => node_math::ummr_peaks(n),
        }
    }

    /// Rebuild from a store file and check every entry matches a replay.
    pub fn from_store(kind: ForestKind, hasher: Hasher, store: &NodeStore) -> Result<Self> {
        if store.width() != hasher.width() {
            return Err(Error::WidthMismatch {
                expected: hasher.width(),
                got: store.width(),
            });
        }
        let len = store.len();
        let n = match kind {
            ForestKind::Ummb => {
                if len < 3 || !(len - 3).is_multiple_of(2) {
                    return Err(Error::Integrity(format!("store length {len} is not 2n+3")));
                }
                (len - 3) / 2
            }
            ForestKind::Ummr => {
                // invert 2n - popcount(n)
                let mut lo = 0u64;
                let mut hi = len;
                while lo < hi {
                    let mid = (lo + hi) / 2;
                    if node_math::ummr_store_len(mid) < len {
                        lo = mid + 1;
                    } else {
                        hi = mid;
                    }
                }
                if node_math::ummr_store_len(lo) != len {
                    return Err(Error::Integrity(format!(
                        "store length {len} matches no post-order forest"
                    )));
                }
                lo
            }
        };
        let mut f = Forest::new(kind, hasher);
        for item in 1..=n {
            let idx = match kind {
                ForestKind::Ummb => 2 * item + 1,
                ForestKind::Ummr => node_math::ummr_leaf_position(item),
            };
            f.append(store.at(idx))?;
        }
        if f.store.entries() != store.entries() {
            return Err(Error::Integrity("store does not match its own replay".into()));
        }
        Ok(f)
    }

    /// Peak list read straight from the store via index arithmetic.
    pub fn peaks_from_store(kind: ForestKind, store: &NodeStore, n: u64) -> Vec<Peak> {
        Self::mountains_at(kind, n)
            .into_iter()
            .map(|m| Peak {
                height: m.height,
                digest: store.at(m.index),
                index: m.index,
            })
            .collect()
    }
}
