//! Membership and increment proofs.
//!
//! Both generator and verifier derive the expected proof layout from
//! `(kind, i, n)` alone, so handedness is checked slot by slot and an
//! element list can never be replayed for a different index.

use thiserror::Error;

use crate::bagging::StructureKind;
use crate::digest::Digest;
use crate::forest::ForestKind;
use crate::node_math::{self, MountainCoord};

pub mod increment;
pub mod membership;
pub mod wire;

pub use increment::{gen_increment, verify_increment, Coord, IncrementEntry, IncrementProof};
pub use membership::{
    extend_from_store, extend_recent, gen_from_store, gen_membership, update_membership, verify_membership,
    MembershipProof, ProofElement, Update,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// One expected proof position: the sibling's side and whether it is the
/// implicit default value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Slot {
    pub side: Side,
    pub default: bool,
}

impl Slot {
    const fn left() -> Self {
        Slot {
            side: Side::Left,
            default: false,
        }
    }
    const fn right() -> Self {
        Slot {
            side: Side::Right,
            default: false,
        }
    }
    const fn left_default(default: bool) -> Self {
        Slot {
            side: Side::Left,
            default,
        }
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum Reject {
    #[error("proof kind {proof} does not match commitment kind {commitment}")]
    KindMismatch {
        proof: StructureKind,
        commitment: StructureKind,
    },
    #[error("index {index} is not provable against size {n}")]
    Index { index: u64, n: u64 },
    #[error("proof at size {proof} cannot be checked against size {commitment}")]
    Size { proof: u64, commitment: u64 },
    #[error("proof layout does not match the expected handedness sequence")]
    Shape,
    #[error("digest width does not match")]
    Width,
    #[error("derived digest does not match the commitment")]
    Digest,
    #[error("commitment payload is malformed for its kind and size")]
    Commitment,
    #[error("operation not supported for {0}")]
    Unsupported(StructureKind),
}

/// Where item `i` sits in a structure of size `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Location {
    /// Left-to-right mountain position.
    pub v: usize,
    pub mountain: MountainCoord,
    /// Range index and position inside it (MMB; the single range otherwise).
    pub g: usize,
    pub l: usize,
}

/// Per-kind size breakdown `path + r + b - r' - b'`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Decomposition {
    pub path: u64,
    pub r: u64,
    pub b: u64,
    pub r_prime: u64,
    pub b_prime: u64,
}

impl Decomposition {
    pub fn sigma(&self) -> u64 {
        self.path + self.r + self.b - self.r_prime - self.b_prime
    }
}

/// Structure of a size-`n` list of a given kind, without any digests.
#[derive(Clone, Debug)]
pub struct Layout {
    pub kind: StructureKind,
    pub n: u64,
    pub peaks: Vec<MountainCoord>,
    /// Bagging groups `[start, end)` over `peaks`.
    pub ranges: Vec<(usize, usize)>,
}

impl Layout {
    pub fn new(kind: StructureKind, n: u64) -> Self {
        let peaks = match kind.forest_kind() {
            Some(ForestKind::Ummb) => node_math::ummb_peaks(n),
            Some(ForestKind::Ummr) => node_math::ummr_peaks(n),
            None => Vec::new(),
        };
        let ranges = match kind {
            StructureKind::Mmb => node_math::range_partition(n).ranges(),
            _ if peaks.is_empty() => Vec::new(),
            _ => vec![(0, peaks.len())],
        };
        Layout {
            kind,
            n,
            peaks,
            ranges,
        }
    }

    pub fn t(&self) -> usize {
        self.peaks.len()
    }

    pub fn locate(&self, i: u64) -> Option<Location> {
        if i == 0 || i > self.n || self.kind == StructureKind::Chain {
            return None;
        }
        let v = self.peaks.partition_point(|m| m.last < i);
        let mountain = self.peaks[v];
        let g = self.ranges.partition_point(|&(_, end)| end <= v);
        Some(Location {
            v,
            mountain,
            g,
            l: v - self.ranges[g].0,
        })
    }

    /// Store index of the node with last item `last` and height `h`.
    pub fn node_index(&self, last: u64, h: u32) -> u64 {
        match self.kind.forest_kind() {
            Some(ForestKind::Ummr) => node_math::ummr_leaf_position(last) + h as u64,
            _ => 2 * last + (1u64 << h),
        }
    }

    /// Expected proof slots for item `i`, leaf to root.
    pub fn shape(&self, i: u64) -> Option<Vec<Slot>> {
        if i == 0 || i > self.n {
            return None;
        }
        if self.kind == StructureKind::Chain {
            // c_0 is sent explicitly and must equal the default value.
            let mut out = vec![Slot::left()];
            out.extend(std::iter::repeat_n(Slot::right(), (self.n - i) as usize));
            return Some(out);
        }
        let loc = self.locate(i)?;
        let m = loc.mountain;
        let mut out: Vec<Slot> = (0..m.height)
            .map(|lvl| {
                if ((i - m.first) >> lvl) & 1 == 0 {
                    Slot::right()
                } else {
                    Slot::left()
                }
            })
            .collect();
        let t = self.t();
        match self.kind {
            StructureKind::Ummb | StructureKind::Ummr | StructureKind::Chain => {}
            StructureKind::Fmmr | StructureKind::Fmmb => {
                out.push(Slot::left_default(loc.v == 0));
                out.extend(std::iter::repeat_n(Slot::right(), t - 1 - loc.v));
            }
            StructureKind::Mmr => {
                if loc.v + 1 < t {
                    out.push(Slot::right());
                }
                out.extend(std::iter::repeat_n(Slot::left(), loc.v));
            }
            StructureKind::Mmb => {
                let (_, end) = self.ranges[loc.g];
                out.push(Slot::left_default(loc.l == 0));
                out.extend(std::iter::repeat_n(Slot::right(), end - 1 - loc.v));
                out.push(Slot::left_default(loc.g == 0));
                out.extend(std::iter::repeat_n(Slot::right(), self.ranges.len() - 1 - loc.g));
            }
        }
        Some(out)
    }

    pub fn decompose(&self, i: u64) -> Option<Decomposition> {
        if i == 0 || i > self.n {
            return None;
        }
        if self.kind == StructureKind::Chain {
            return Some(Decomposition {
                r: self.n - i + 1,
                ..Default::default()
            });
        }
        let loc = self.locate(i)?;
        let path = loc.mountain.height as u64;
        let t = self.t() as u64;
        let v = loc.v as u64;
        let d = match self.kind {
            StructureKind::Ummb | StructureKind::Ummr | StructureKind::Chain => Decomposition {
                path,
                ..Default::default()
            },
            StructureKind::Fmmr | StructureKind::Fmmb => Decomposition {
                path,
                r: t - v,
                r_prime: (v == 0) as u64,
                ..Default::default()
            },
            StructureKind::Mmr => Decomposition {
                path,
                r: v + (v + 1 < t) as u64,
                ..Default::default()
            },
            StructureKind::Mmb => {
                let (start, end) = self.ranges[loc.g];
                Decomposition {
                    path,
                    r: (end - start - loc.l) as u64,
                    b: (self.ranges.len() - loc.g) as u64,
                    r_prime: (loc.l == 0) as u64,
                    b_prime: (loc.g == 0) as u64,
                }
            }
        };
        Some(d)
    }

    /// Transmitted size of the proof of the `k`-th newest item.
    pub fn sigma(&self, k: u64) -> Option<u64> {
        self.decompose(self.n.checked_sub(k)? + 1).map(|d| d.sigma())
    }

    /// Side of the extension digest for item `i`: where its mountain's
    /// mergeable partner sits, if it has one (unbagged lazy forest only).
    pub fn extension_side(&self, i: u64) -> Option<Side> {
        if self.kind != StructureKind::Ummb {
            return None;
        }
        let loc = self.locate(i)?;
        let h = loc.mountain.height;
        if loc.v + 1 < self.t() && self.peaks[loc.v + 1].height == h {
            Some(Side::Right)
        } else if loc.v > 0 && self.peaks[loc.v - 1].height == h {
            Some(Side::Left)
        } else {
            None
        }
    }
}

/// Fold a leaf through `(slot, digest)` pairs.
pub(crate) fn fold(
    h: &crate::digest::Hasher,
    leaf: Digest,
    elems: impl IntoIterator<Item = (Side, Digest)>,
) -> Digest {
    elems.into_iter().fold(leaf, |acc, (side, d)| match side {
        Side::Left => h.node(&d, &acc),
        Side::Right => h.node(&acc, &d),
    })
}
