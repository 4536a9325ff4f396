//! Bagged structures on top of a forest: the Merkle chain, backward-bagged
//! MMR, forward-bagged F-MMR and F-MMB, and the double-bagged MMB.
//!
//! Forward bagging over a group of peaks `P1..Pi` produces range nodes
//! `R1 = H(• || P1)`, `Rj = H(R(j-1) || Pj)`; the last one is the group root.
//! MMB forward-bags each range and then forward-bags the range roots into belt
//! nodes the same way. MMR folds right-to-left, `acc = H(peak || acc)`, seeded
//! with the rightmost peak.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::digest::{Digest, Hasher};
use crate::error::{Error, Result};
use crate::forest::{AppendRecord, Forest, ForestKind, Peak};
use crate::node_math::{self, RangePartition};
use crate::store::{read_exact, NodeStore};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StructureKind {
    Chain,
    Ummr,
    Mmr,
    Fmmr,
    Ummb,
    Fmmb,
    Mmb,
}

impl StructureKind {
    pub const ALL: [StructureKind; 7] = [
        StructureKind::Chain,
        StructureKind::Ummr,
        StructureKind::Mmr,
        StructureKind::Fmmr,
        StructureKind::Ummb,
        StructureKind::Fmmb,
        StructureKind::Mmb,
    ];

    pub fn tag(self) -> u8 {
        match self {
            StructureKind::Chain => 0,
            StructureKind::Ummr => 1,
            StructureKind::Mmr => 2,
            StructureKind::Fmmr => 3,
            StructureKind::Ummb => 4,
            StructureKind::Fmmb => 5,
            StructureKind::Mmb => 6,
        }
    }

    pub fn from_tag(t: u8) -> Option<Self> {
        Self::ALL.get(t as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            StructureKind::Chain => "CHAIN",
            StructureKind::Ummr => "UMMR",
            StructureKind::Mmr => "MMR",
            StructureKind::Fmmr => "FMMR",
            StructureKind::Ummb => "UMMB",
            StructureKind::Fmmb => "FMMB",
            StructureKind::Mmb => "MMB",
        }
    }

    /// Forest underneath, if any.
    pub fn forest_kind(self) -> Option<ForestKind> {
        match self {
            StructureKind::Chain => None,
            StructureKind::Ummr | StructureKind::Mmr | StructureKind::Fmmr => Some(ForestKind::Ummr),
            StructureKind::Ummb | StructureKind::Fmmb | StructureKind::Mmb => Some(ForestKind::Ummb),
        }
    }

    /// Whether the commitment is the whole peak list.
    pub fn is_unbagged(self) -> bool {
        matches!(self, StructureKind::Ummr | StructureKind::Ummb)
    }
}

impl fmt::Display for StructureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StructureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.to_ascii_uppercase().replace(['-', '_'], "");
        StructureKind::ALL
            .into_iter()
            .find(|k| k.name() == up)
            .ok_or_else(|| Error::Malformed(format!("unknown structure kind {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payload {
    Empty,
    Root(Digest),
    Peaks(Vec<(u32, Digest)>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Commitment {
    pub kind: StructureKind,
    pub n: u64,
    pub payload: Payload,
}

impl Commitment {
    pub fn root(&self) -> Option<Digest> {
        match &self.payload {
            Payload::Root(d) => Some(*d),
            _ => None,
        }
    }

    pub fn peaks(&self) -> &[(u32, Digest)] {
        match &self.payload {
            Payload::Peaks(p) => p,
            _ => &[],
        }
    }

    /// Number of digests the commitment carries.
    pub fn size(&self) -> usize {
        match &self.payload {
            Payload::Empty => 0,
            Payload::Root(_) => 1,
            Payload::Peaks(p) => p.len(),
        }
    }
}

/// Outcome of one bagged append.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BagRecord {
    pub hashes_spent: u64,
    pub nodes_written: u64,
    pub forest: Option<AppendRecord>,
}

/// Forward fold `R1 = H(seed || P1)`, `Rj = H(R(j-1) || Pj)`.
pub fn forward_bag(h: &Hasher, seed: Digest, items: &[Digest]) -> Vec<Digest> {
    let mut acc = seed;
    items
        .iter()
        .map(|p| {
            acc = h.node(&acc, p);
            acc
        })
        .collect()
}

/// Backward fold; entry `j` commits to peaks `j..`. Length `t - 1`.
pub fn backward_bag(h: &Hasher, peaks: &[Digest]) -> Vec<Digest> {
    let t = peaks.len();
    if t < 2 {
        return Vec::new();
    }
    let mut out = vec![peaks[0]; t - 1];
    let mut acc = peaks[t - 1];
    for j in (0..t - 1).rev() {
        acc = h.node(&peaks[j], &acc);
        out[j] = acc;
    }
    out
}

#[derive(Clone)]
pub struct BaggedState {
    kind: StructureKind,
    hasher: Hasher,
    forest: Option<Forest>,
    /// Chain layout: item `i` at `2i + 1`, chain node `c_i` at `2i + 2`.
    chain: Option<ChainStore>,
    /// One per peak for forward kinds (grouped by `ranges`); `t - 1` backward
    /// nodes for MMR.
    range_nodes: Vec<Digest>,
    /// Left-to-right peak intervals `[start, end)` of each bagged group.
    ranges: Vec<(usize, usize)>,
    /// One per range (MMB only).
    belt_nodes: Vec<Digest>,
    hash_counter: u64,
}

#[derive(Clone, Debug)]
struct ChainStore {
    n: u64,
    store: NodeStore,
}

impl fmt::Debug for BaggedState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BaggedState")
            .field("kind", &self.kind)
            .field("n", &self.n())
            .field("ranges", &self.ranges)
            .finish()
    }
}

impl BaggedState {
    pub fn new(kind: StructureKind, hasher: Hasher) -> Self {
        let forest = kind.forest_kind().map(|fk| Forest::new(fk, hasher.clone()));
        let chain = if kind == StructureKind::Chain {
            let mut store = NodeStore::new(hasher.width());
            for _ in 0..3 {
                store.push_sentinel();
            }
            Some(ChainStore { n: 0, store })
        } else {
            None
        };
        BaggedState {
            kind,
            hasher,
            forest,
            chain,
            range_nodes: Vec::new(),
            ranges: Vec::new(),
            belt_nodes: Vec::new(),
            hash_counter: 0,
        }
    }

    pub fn kind(&self) -> StructureKind {
        self.kind
    }

    pub fn hasher(&self) -> &Hasher {
        &self.hasher
    }

    pub fn width(&self) -> usize {
        self.hasher.width()
    }

    pub fn n(&self) -> u64 {
        match (&self.forest, &self.chain) {
            (Some(f), _) => f.n(),
            (None, Some(c)) => c.n,
            _ => 0,
        }
    }

    pub fn forest(&self) -> Option<&Forest> {
        self.forest.as_ref()
    }

    pub fn peaks(&self) -> &[Peak] {
        self.forest.as_ref().map(|f| f.peaks()).unwrap_or(&[])
    }

    pub fn store(&self) -> &NodeStore {
        match (&self.forest, &self.chain) {
            (Some(f), _) => f.store(),
            (None, Some(c)) => &c.store,
            _ => unreachable!("state has a store"),
        }
    }

    pub fn range_nodes(&self) -> &[Digest] {
        &self.range_nodes
    }

    pub fn ranges(&self) -> &[(usize, usize)] {
        &self.ranges
    }

    pub fn belt_nodes(&self) -> &[Digest] {
        &self.belt_nodes
    }

    pub fn hash_counter(&self) -> u64 {
        self.hash_counter
    }

    /// Leaf digest of item `i` (1-based).
    pub fn leaf(&self, i: u64) -> Option<Digest> {
        if i == 0 || i > self.n() {
            return None;
        }
        match &self.forest {
            Some(f) => f.store().get(f.leaf_index(i)),
            None => self.store().get(2 * i + 1),
        }
    }

    /// Chain node `c_i`; `c_0` is the default value.
    pub fn chain_node(&self, i: u64) -> Digest {
        if i == 0 {
            self.hasher.default_digest()
        } else {
            self.store().at(2 * i + 2)
        }
    }

    /// Current range split layout as a partition (MMB only; empty otherwise).
    pub fn partition(&self) -> RangePartition {
        let heights: Vec<u32> = self.peaks().iter().map(|p| p.height).collect();
        let t = heights.len();
        let split_positions = if self.kind == StructureKind::Mmb {
            self.ranges
                .iter()
                .rev()
                .skip(1)
                .map(|&(_, end)| (t - 1 - end) as u32)
                .collect()
        } else {
            Vec::new()
        };
        RangePartition {
            heights,
            split_positions,
        }
    }

    pub fn commitment(&self) -> Commitment {
        let n = self.n();
        let payload = if n == 0 {
            Payload::Empty
        } else {
            match self.kind {
                StructureKind::Chain => Payload::Root(self.chain_node(n)),
                StructureKind::Ummr | StructureKind::Ummb => {
                    Payload::Peaks(self.forest.as_ref().unwrap().unbagged_commitment())
                }
                StructureKind::Mmr => Payload::Root(
                    self.range_nodes
                        .first()
                        .copied()
                        .unwrap_or_else(|| self.peaks()[0].digest),
                ),
                StructureKind::Fmmr | StructureKind::Fmmb => {
                    Payload::Root(*self.range_nodes.last().unwrap())
                }
                StructureKind::Mmb => Payload::Root(*self.belt_nodes.last().unwrap()),
            }
        };
        Commitment {
            kind: self.kind,
            n,
            payload,
        }
    }

    /// Root of range `g` (MMB) as stored.
    pub fn range_root(&self, g: usize) -> Digest {
        self.range_nodes[self.ranges[g].1 - 1]
    }

    /// Index of the range holding peak position `v`.
    pub fn range_of_peak(&self, v: usize) -> usize {
        self.ranges
            .partition_point(|&(_, end)| end <= v)
    }

    pub fn append(&mut self, leaf: Digest) -> Result<BagRecord> {
        if leaf.width() != self.width() {
            return Err(Error::WidthMismatch {
                expected: self.width(),
                got: leaf.width(),
            });
        }
        let rec = match self.kind {
            StructureKind::Chain => self.append_chain(leaf)?,
            StructureKind::Ummr | StructureKind::Ummb => {
                let r = self.forest.as_mut().unwrap().append(leaf)?;
                BagRecord {
                    hashes_spent: r.hashes,
                    nodes_written: 1 + r.merges.len() as u64,
                    forest: Some(r),
                }
            }
            StructureKind::Mmr => self.append_mmr(leaf)?,
            StructureKind::Fmmr | StructureKind::Fmmb => self.append_forward(leaf)?,
            StructureKind::Mmb => self.append_mmb(leaf)?,
        };
        self.hash_counter += rec.hashes_spent;
        Ok(rec)
    }

    fn append_chain(&mut self, leaf: Digest) -> Result<BagRecord> {
        let c = self.chain.as_mut().unwrap();
        let prev = if c.n == 0 {
            self.hasher.default_digest()
        } else {
            c.store.at(2 * c.n + 2)
        };
        c.n += 1;
        c.store.push(leaf)?;
        let node = self.hasher.node(&prev, &leaf);
        c.store.push(node)?;
        Ok(BagRecord {
            hashes_spent: 1,
            nodes_written: 2,
            forest: None,
        })
    }

    fn append_mmr(&mut self, leaf: Digest) -> Result<BagRecord> {
        let r = self.forest.as_mut().unwrap().append(leaf)?;
        let digests: Vec<Digest> = self.peaks().iter().map(|p| p.digest).collect();
        self.range_nodes = backward_bag(&self.hasher, &digests);
        let bag = self.range_nodes.len() as u64;
        Ok(BagRecord {
            hashes_spent: r.hashes + bag,
            nodes_written: 1 + r.merges.len() as u64 + bag,
            forest: Some(r),
        })
    }

    fn append_forward(&mut self, leaf: Digest) -> Result<BagRecord> {
        let r = self.forest.as_mut().unwrap().append(leaf)?;
        let peaks = self.forest.as_ref().unwrap().peaks();
        let t = peaks.len();
        let c = r.first_changed(t);
        self.range_nodes.truncate(c);
        let mut acc = if c == 0 {
            self.hasher.default_digest()
        } else {
            self.range_nodes[c - 1]
        };
        for p in &peaks[c..] {
            acc = self.hasher.node(&acc, &p.digest);
            self.range_nodes.push(acc);
        }
        self.ranges = vec![(0, t)];
        let bag = (t - c) as u64;
        Ok(BagRecord {
            hashes_spent: r.hashes + bag,
            nodes_written: 1 + r.merges.len() as u64 + bag,
            forest: Some(r),
        })
    }

    fn append_mmb(&mut self, leaf: Digest) -> Result<BagRecord> {
        let n_new = self.n() + 1;
        let t_new = node_math::floor_log2(n_new + 1) as usize;
        // first peak position whose identity changes
        let c = match node_math::merge_position(n_new) {
            Some(j) => t_new - 1 - j as usize,
            None => t_new - 1,
        };
        let old_peaks = self.peaks();
        let old_tail_ids: Vec<u64> = old_peaks.get(c..).unwrap_or(&[]).iter().map(|p| p.index).collect();

        // Pop the range containing peak c - 1 and everything after it.
        let g_star = if c == 0 { 0 } else { self.range_of_peak(c - 1) };
        let s_star = self.ranges.get(g_star).map(|r| r.0).unwrap_or(0);
        let old_ranges: Vec<(usize, usize)> = self.ranges.drain(g_star..).collect();
        let old_belts: Vec<Digest> = self.belt_nodes.drain(g_star..).collect();
        let old_nodes: Vec<Digest> = self.range_nodes.drain(s_star..).collect();

        let r = self.forest.as_mut().unwrap().append(leaf)?;
        let f = self.forest.as_ref().unwrap();
        let peaks = f.peaks();
        debug_assert_eq!(peaks.len(), t_new);
        debug_assert_eq!(r.first_changed(t_new), c);

        // Splits after peak v for v >= max(s*, c - 1); none earlier in the tail.
        let mut bounds = Vec::new();
        let mut start = s_star;
        for v in c.saturating_sub(1).max(s_star)..t_new.saturating_sub(1) {
            let p = (t_new - 2 - v) as u32;
            if node_math::split_by_bits(n_new, p) {
                bounds.push((start, v + 1));
                start = v + 1;
            }
        }
        bounds.push((start, t_new));

        let old_id = |v: usize| -> u64 {
            if v < c {
                peaks[v].index
            } else {
                old_tail_ids[v - c]
            }
        };

        let h = &self.hasher;
        let mut hashes = r.hashes;
        let mut written = 1 + r.merges.len() as u64;
        let mut belt_unchanged = true;
        for (q, &(a, b)) in bounds.iter().enumerate() {
            let old = old_ranges
                .iter()
                .position(|&(oa, _)| oa < c + old_tail_ids.len() && old_id(oa) == peaks[a].index);
            let mut reuse = old.is_some();
            let mut acc = h.default_digest();
            for (l, peak) in peaks[a..b].iter().enumerate() {
                let reused = match old {
                    Some(oi) if reuse => {
                        let (oa, ob) = old_ranges[oi];
                        if oa + l < ob && old_id(oa + l) == peak.index {
                            Some(old_nodes[oa + l - s_star])
                        } else {
                            None
                        }
                    }
                    _ => None,
                };
                acc = match reused {
                    Some(d) => d,
                    None => {
                        reuse = false;
                        hashes += 1;
                        written += 1;
                        h.node(&acc, &peak.digest)
                    }
                };
                self.range_nodes.push(acc);
            }
            let g = g_star + q;
            let prev_belt = if g == 0 {
                h.default_digest()
            } else {
                self.belt_nodes[g - 1]
            };
            let old_root = old_ranges
                .get(q)
                .map(|&(_, ob)| old_nodes[ob - 1 - s_star]);
            let belt = if belt_unchanged && old_root == Some(acc) {
                old_belts[q]
            } else {
                belt_unchanged = false;
                hashes += 1;
                written += 1;
                h.node(&prev_belt, &acc)
            };
            self.belt_nodes.push(belt);
            self.ranges.push((a, b));
        }
        debug_assert_eq!(self.partition(), node_math::range_partition(n_new));
        debug_assert_eq!(self.range_nodes.len(), t_new);
        Ok(BagRecord {
            hashes_spent: hashes,
            nodes_written: written,
            forest: Some(r),
        })
    }

    /// Fold `append` over `leaves` from an empty state.
    pub fn rebuild(kind: StructureKind, hasher: Hasher, leaves: &[Digest]) -> Result<Self> {
        let mut s = BaggedState::new(kind, hasher);
        for l in leaves {
            s.append(*l)?;
        }
        Ok(s)
    }

    /// State of the first `m` items, rebuilt from this state's leaves.
    pub fn prefix(&self, m: u64) -> Result<Self> {
        if m > self.n() {
            return Err(Error::BadSizes { from: self.n(), to: m });
        }
        let leaves: Vec<Digest> = (1..=m).map(|i| self.leaf(i).expect("leaf")).collect();
        BaggedState::rebuild(self.kind, self.hasher.clone(), &leaves)
    }

    pub fn write_checkpoint<W: Write>(&self, w: &mut W) -> Result<()> {
        self.store().write_to(w)?;
        w.write_all(BAG_MAGIC)?;
        w.write_all(&[self.kind.tag()])?;
        let peaks = self.peaks();
        w.write_all(&(peaks.len() as u64).to_le_bytes())?;
        for p in peaks {
            w.write_all(&p.height.to_le_bytes())?;
            w.write_all(&p.index.to_le_bytes())?;
            w.write_all(p.digest.as_bytes())?;
        }
        w.write_all(&(self.range_nodes.len() as u64).to_le_bytes())?;
        for d in &self.range_nodes {
            w.write_all(d.as_bytes())?;
        }
        w.write_all(&(self.belt_nodes.len() as u64).to_le_bytes())?;
        for d in &self.belt_nodes {
            w.write_all(d.as_bytes())?;
        }
        let splits = self.partition().split_positions;
        w.write_all(&(splits.len() as u64).to_le_bytes())?;
        for s in splits {
            w.write_all(&s.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn checkpoint_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_checkpoint(&mut out).expect("vec write");
        out
    }

    /// Load a checkpoint, replaying the store and checking every section.
    pub fn read_checkpoint<R: Read>(r: &mut R) -> Result<Self> {
        let store = NodeStore::read_from(r)?;
        let mut magic = [0u8; 7];
        read_exact(r, &mut magic)?;
        if &magic != BAG_MAGIC {
            return Err(Error::Malformed("bad bagging section magic".into()));
        }
        let mut tag = [0u8; 1];
        read_exact(r, &mut tag)?;
        let kind = StructureKind::from_tag(tag[0])
            .ok_or_else(|| Error::Malformed(format!("unknown kind tag {}", tag[0])))?;
        let width = store.width();
        let hasher = crate::digest::hasher_for_width(width)?;
        let read_u64 = |r: &mut R| -> Result<u64> {
            let mut b = [0u8; 8];
            read_exact(r, &mut b)?;
            Ok(u64::from_le_bytes(b))
        };
        let read_digest = |r: &mut R| -> Result<Digest> {
            let mut b = vec![0u8; width];
            read_exact(r, &mut b)?;
            Digest::from_slice(&b)
        };
        let limit = store.len() + 1;
        let np = read_u64(r)?;
        if np > limit {
            return Err(Error::Malformed("peak count exceeds store".into()));
        }
        let mut peaks = Vec::new();
        for _ in 0..np {
            let mut hb = [0u8; 4];
            read_exact(r, &mut hb)?;
            let height = u32::from_le_bytes(hb);
            let index = read_u64(r)?;
            let digest = read_digest(r)?;
            peaks.push(Peak {
                height,
                digest,
                index,
            });
        }
        let mut lists = Vec::new();
        for _ in 0..2 {
            let c = read_u64(r)?;
            if c > limit {
                return Err(Error::Malformed("node count exceeds store".into()));
            }
            let mut v = Vec::new();
            for _ in 0..c {
                v.push(read_digest(r)?);
            }
            lists.push(v);
        }
        let ns = read_u64(r)?;
        if ns > 64 {
            return Err(Error::Malformed("too many split positions".into()));
        }
        let mut splits = Vec::new();
        for _ in 0..ns {
            let mut b = [0u8; 4];
            read_exact(r, &mut b)?;
            splits.push(u32::from_le_bytes(b));
        }
        let state = match kind.forest_kind() {
            Some(fk) => {
                let forest = Forest::from_store(fk, hasher.clone(), &store)?;
                let leaves: Vec<Digest> = (1..=forest.n())
                    .map(|i| store.at(forest.leaf_index(i)))
                    .collect();
                BaggedState::rebuild(kind, hasher, &leaves)?
            }
            None => {
                let len = store.len();
                if len < 3 || (len - 3) % 2 != 0 {
                    return Err(Error::Integrity("chain store length is not 2n+3".into()));
                }
                let leaves: Vec<Digest> = (1..=(len - 3) / 2).map(|i| store.at(2 * i + 1)).collect();
                BaggedState::rebuild(kind, hasher, &leaves)?
            }
        };
        if state.store().entries() != store.entries()
            || state.peaks() != peaks.as_slice()
            || state.range_nodes != lists[0]
            || state.belt_nodes != lists[1]
            || state.partition().split_positions != splits
        {
            return Err(Error::Integrity("checkpoint does not match its replay".into()));
        }
        Ok(state)
    }
}

/// Unbagged commitment at any size `c` up to the store's, read from the
/// append-only store.
pub fn unbagged_commitment_at(kind: StructureKind, store: &NodeStore, c: u64) -> Result<Commitment> {
    let peaks = match kind {
        StructureKind::Ummb => node_math::ummb_peaks(c),
        StructureKind::Ummr => node_math::ummr_peaks(c),
        k => return Err(Error::UnsupportedKind(k)),
    };
    let payload = if c == 0 {
        Payload::Empty
    } else {
        Payload::Peaks(
            peaks
                .iter()
                .map(|p| {
                    store
                        .get(p.index)
                        .map(|d| (p.height, d))
                        .ok_or_else(|| Error::Integrity(format!("store has no node {}", p.index)))
                })
                .collect::<Result<_>>()?,
        )
    };
    Ok(Commitment { kind, n: c, payload })
}

pub const BAG_MAGIC: &[u8; 7] = b"MMBBAG1";

/// Digests of every bagging layer built directly from the leaves, without
/// going through any append logic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectBuild {
    pub peaks: Vec<Digest>,
    pub range_nodes: Vec<Digest>,
    pub belt_nodes: Vec<Digest>,
    pub root: Option<Digest>,
}

fn perfect_tree(h: &Hasher, leaves: &[Digest]) -> Digest {
    if leaves.len() == 1 {
        return leaves[0];
    }
    let mid = leaves.len() / 2;
    h.node(&perfect_tree(h, &leaves[..mid]), &perfect_tree(h, &leaves[mid..]))
}

/// Independent construction from `n`, the height formula and the split rule.
pub fn direct_build(kind: StructureKind, h: &Hasher, leaves: &[Digest]) -> DirectBuild {
    let n = leaves.len() as u64;
    if kind == StructureKind::Chain {
        let nodes = forward_bag(h, h.default_digest(), leaves);
        return DirectBuild {
            peaks: Vec::new(),
            root: nodes.last().copied(),
            range_nodes: nodes,
            belt_nodes: Vec::new(),
        };
    }
    let heights = match kind.forest_kind().unwrap() {
        ForestKind::Ummb => node_math::height_sequence(n).heights,
        ForestKind::Ummr => node_math::ummr_heights(n),
    };
    let mut peaks = Vec::new();
    let mut off = 0usize;
    for &ht in &heights {
        let size = 1usize << ht;
        peaks.push(perfect_tree(h, &leaves[off..off + size]));
        off += size;
    }
    let (range_nodes, belt_nodes, root) = match kind {
        StructureKind::Ummr | StructureKind::Ummb => (Vec::new(), Vec::new(), None),
        StructureKind::Mmr => {
            let b = backward_bag(h, &peaks);
            let root = b.first().copied().or_else(|| peaks.first().copied());
            (b, Vec::new(), root)
        }
        StructureKind::Fmmr | StructureKind::Fmmb => {
            let r = forward_bag(h, h.default_digest(), &peaks);
            let root = r.last().copied();
            (r, Vec::new(), root)
        }
        StructureKind::Mmb => {
            let part = node_math::range_partition_structural(n);
            let mut range_nodes = Vec::new();
            let mut roots = Vec::new();
            for (a, b) in part.ranges() {
                let r = forward_bag(h, h.default_digest(), &peaks[a..b]);
                roots.push(*r.last().unwrap());
                range_nodes.extend(r);
            }
            let belts = forward_bag(h, h.default_digest(), &roots);
            let root = belts.last().copied();
            (range_nodes, belts, root)
        }
        StructureKind::Chain => unreachable!(),
    };
    DirectBuild {
        peaks,
        range_nodes,
        belt_nodes,
        root,
    }
}
