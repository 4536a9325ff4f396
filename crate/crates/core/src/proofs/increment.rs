//! Increment proofs between sizes `m < n`.
//!
//! Both sides compute a canonical plan from `(kind, m, n)`: which nodes make
//! up the covering frontier below the size-`n` peaks and, for MMB, which
//! bagging digests of the unchanged prefix are carried instead of the peaks
//! underneath them. The proof lists exactly those coordinates with their
//! digests; the verifier rejects any other coordinate list.

use std::collections::HashMap;

use crate::bagging::{BaggedState, Commitment, Payload, StructureKind};
use crate::digest::{Digest, Hasher};
use crate::error::{Error, Result};
use crate::node_math::{self, MountainCoord, NodeCoord};

use super::Reject;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coord {
    /// Mountain node by store index.
    Mountain(u64),
    /// Forward fold of the first `count` peaks of the range starting at the
    /// peak with store index `start`.
    Range { start: u64, count: u32 },
    /// Belt node over the first `count` ranges.
    Belt(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IncrementEntry {
    pub coord: Coord,
    pub digest: Digest,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IncrementProof {
    pub kind: StructureKind,
    pub m: u64,
    pub n: u64,
    pub entries: Vec<IncrementEntry>,
}

impl IncrementProof {
    /// Transmitted digests.
    pub fn size(&self) -> usize {
        self.entries.len()
    }

    /// Height of the tallest node created by the appends `m+1..=n`.
    pub fn highest_merge(&self) -> Option<u32> {
        (self.m + 1..=self.n)
            .filter_map(node_math::merge_position)
            .map(|j| j + 1)
            .max()
    }
}

/// Layout shared by generator and verifier.
#[derive(Clone, Debug)]
struct Plan {
    m_peaks: Vec<MountainCoord>,
    n_peaks: Vec<MountainCoord>,
    m_ranges: Vec<(usize, usize)>,
    n_ranges: Vec<(usize, usize)>,
    /// Leading ranges identical at both sizes (MMB).
    j: usize,
    /// Carried range prefixes: start peak index -> (peak count, position at `n`).
    runs: HashMap<u64, (usize, usize)>,
    coords: Vec<Coord>,
}

/// Nodes created after `m` whose leaves all lie after `m`, covering the
/// part of `roots` not already present at size `m`.
fn new_frontier(m: u64, roots: &[MountainCoord], out: &mut Vec<(u64, u64)>) {
    let mut stack: Vec<NodeCoord> = roots
        .iter()
        .rev()
        .map(|p| NodeCoord::new(p.index).expect("peak index"))
        .collect();
    while let Some(node) = stack.pop() {
        if node.created_at() <= m {
            continue;
        }
        let (first, _) = node.span();
        if first > m {
            out.push((first, node.index()));
        } else {
            let (l, r) = node.children().expect("straddling node has children");
            stack.push(r);
            stack.push(l);
        }
    }
}

fn plan(kind: StructureKind, m: u64, n: u64) -> Plan {
    let m_peaks = node_math::ummb_peaks(m);
    let n_peaks = node_math::ummb_peaks(n);
    let mut coords = Vec::new();
    if kind == StructureKind::Ummb {
        let mut fr = Vec::new();
        new_frontier(m, &n_peaks, &mut fr);
        coords.extend(fr.into_iter().map(|(_, idx)| Coord::Mountain(idx)));
        return Plan {
            m_peaks,
            n_peaks,
            m_ranges: Vec::new(),
            n_ranges: Vec::new(),
            j: 0,
            runs: HashMap::new(),
            coords,
        };
    }
    let m_ranges = node_math::range_partition(m).ranges();
    let n_ranges = node_math::range_partition(n).ranges();
    let c0 = m_peaks
        .iter()
        .zip(&n_peaks)
        .take_while(|(a, b)| a.index == b.index)
        .count();
    let j = m_ranges
        .iter()
        .zip(&n_ranges)
        .take_while(|(a, b)| a == b && a.1 <= c0)
        .count();
    let s = if j == 0 { 0 } else { m_ranges[j - 1].1 };
    if j > 0 {
        coords.push(Coord::Belt(j as u32));
    }
    // A range that starts with the same peak at both sizes carries the fold
    // of its leading peaks common to both.
    let m_starts: HashMap<u64, (usize, usize)> = m_ranges[j..]
        .iter()
        .map(|&(a, e)| (m_peaks[a].index, (a, e)))
        .collect();
    let mut runs = HashMap::new();
    let mut covered = std::collections::HashSet::new();
    for &(ns, ne) in &n_ranges[j..] {
        let start = n_peaks[ns].index;
        let Some(&(ms, me)) = m_starts.get(&start) else {
            continue;
        };
        let q = (0..(ne - ns).min(me - ms))
            .take_while(|&t| n_peaks[ns + t].index == m_peaks[ms + t].index)
            .count();
        runs.insert(start, (q, ns));
        covered.extend(m_peaks[ms..ms + q].iter().map(|p| p.index));
        coords.push(Coord::Range {
            start,
            count: q as u32,
        });
    }
    let mut mountains: Vec<(u64, u64)> = m_peaks[s..]
        .iter()
        .filter(|p| !covered.contains(&p.index))
        .map(|p| (p.first, p.index))
        .collect();
    new_frontier(m, &n_peaks[s..], &mut mountains);
    mountains.sort_unstable();
    coords.extend(mountains.into_iter().map(|(_, idx)| Coord::Mountain(idx)));
    Plan {
        m_peaks,
        n_peaks,
        m_ranges,
        n_ranges,
        j,
        runs,
        coords,
    }
}

pub fn gen_increment(state: &BaggedState, m: u64) -> Result<IncrementProof> {
    let kind = state.kind();
    let n = state.n();
    if !matches!(kind, StructureKind::Ummb | StructureKind::Mmb) {
        return Err(Error::UnsupportedKind(kind));
    }
    if m >= n {
        return Err(Error::BadSizes { from: m, to: n });
    }
    let p = plan(kind, m, n);
    let entries = p
        .coords
        .iter()
        .map(|&coord| {
            let digest = match coord {
                Coord::Mountain(idx) => state.store().at(idx),
                Coord::Belt(j) => state.belt_nodes()[j as usize - 1],
                Coord::Range { start, count } => state.range_nodes()[p.runs[&start].1 + count as usize - 1],
            };
            IncrementEntry { coord, digest }
        })
        .collect();
    Ok(IncrementProof {
        kind,
        m,
        n,
        entries,
    })
}

/// Derive mountain digests by closing steps from the known frontier.
struct Closer<'a> {
    h: &'a Hasher,
    m: u64,
    known: HashMap<u64, Digest>,
}

impl Closer<'_> {
    fn derive(&mut self, index: u64) -> std::result::Result<Digest, Reject> {
        if let Some(d) = self.known.get(&index) {
            return Ok(*d);
        }
        let node = NodeCoord::new(index).map_err(|_| Reject::Shape)?;
        if node.created_at() <= self.m {
            return Err(Reject::Shape);
        }
        let (l, r) = node.children().map_err(|_| Reject::Shape)?;
        let dl = self.derive(l.index())?;
        let dr = self.derive(r.index())?;
        let d = self.h.node(&dl, &dr);
        self.known.insert(index, d);
        Ok(d)
    }
}

pub fn verify_increment(
    h: &Hasher,
    commit_m: &Commitment,
    commit_n: &Commitment,
    proof: &IncrementProof,
) -> std::result::Result<(), Reject> {
    let kind = proof.kind;
    for c in [commit_m, commit_n] {
        if c.kind != kind {
            return Err(Reject::KindMismatch {
                proof: kind,
                commitment: c.kind,
            });
        }
    }
    if !matches!(kind, StructureKind::Ummb | StructureKind::Mmb) {
        return Err(Reject::Unsupported(kind));
    }
    let (m, n) = (proof.m, proof.n);
    if commit_m.n != m || commit_n.n != n || m >= n {
        return Err(Reject::Size {
            proof: n,
            commitment: commit_n.n,
        });
    }
    if proof.entries.iter().any(|e| e.digest.width() != h.width()) {
        return Err(Reject::Width);
    }
    let p = plan(kind, m, n);
    if proof.entries.iter().map(|e| e.coord).ne(p.coords.iter().copied()) {
        return Err(Reject::Shape);
    }
    let mut closer = Closer {
        h,
        m,
        known: HashMap::new(),
    };
    let mut belt = None;
    let mut carried: HashMap<u64, Digest> = HashMap::new();
    for e in &proof.entries {
        match e.coord {
            Coord::Mountain(idx) => {
                closer.known.insert(idx, e.digest);
            }
            Coord::Belt(_) => belt = Some(e.digest),
            Coord::Range { start, .. } => {
                carried.insert(start, e.digest);
            }
        }
    }

    if kind == StructureKind::Ummb {
        let held = match &commit_m.payload {
            Payload::Peaks(v) => v.as_slice(),
            Payload::Empty if m == 0 => &[],
            _ => return Err(Reject::Commitment),
        };
        if held.len() != p.m_peaks.len() || held.iter().zip(&p.m_peaks).any(|(a, b)| a.0 != b.height) {
            return Err(Reject::Commitment);
        }
        for (coord, (_, d)) in p.m_peaks.iter().zip(held) {
            closer.known.insert(coord.index, *d);
        }
        let derived = p
            .n_peaks
            .iter()
            .map(|pk| Ok((pk.height, closer.derive(pk.index)?)))
            .collect::<std::result::Result<Vec<_>, Reject>>()?;
        return if commit_n.payload == Payload::Peaks(derived) {
            Ok(())
        } else {
            Err(Reject::Digest)
        };
    }

    let dflt = h.default_digest();
    let root_of = |peaks: &[MountainCoord],
                       ranges: &[(usize, usize)],
                       closer: &mut Closer|
     -> std::result::Result<Option<Digest>, Reject> {
        let mut b = belt.unwrap_or(dflt);
        for &(start, end) in &ranges[p.j..] {
            let (mut acc, mut from) = (dflt, start);
            if let Some(&(q, _)) = p.runs.get(&peaks[start].index) {
                acc = *carried.get(&peaks[start].index).ok_or(Reject::Shape)?;
                from = start + q;
            }
            for pk in &peaks[from..end] {
                acc = h.node(&acc, &closer.derive(pk.index)?);
            }
            b = h.node(&b, &acc);
        }
        Ok(if ranges.is_empty() { None } else { Some(b) })
    };
    let root_m = root_of(&p.m_peaks, &p.m_ranges, &mut closer)?;
    let root_n = root_of(&p.n_peaks, &p.n_ranges, &mut closer)?;
    if commit_m.root() != root_m || commit_n.root() != root_n {
        return Err(Reject::Digest);
    }
    Ok(())
}
