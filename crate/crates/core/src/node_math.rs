//! Integer shape arithmetic for every structure in the crate.
//!
//! Nothing here hashes or stores anything. Positions of mountains are counted
//! from zero at the right end of the list; every `Vec` returned is ordered
//! left-to-right for display.

use crate::error::MathError;

/// Largest list size accepted anywhere in the crate (keeps `2n + 2` in range).
pub const MAX_N: u64 = 1 << 62;

/// 2-adic valuation: the largest `v` with `2^v | m`.
pub fn nu2(m: u64) -> Result<u32, MathError> {
    if m == 0 {
        return Err(MathError::Nu2OfZero);
    }
    Ok(m.trailing_zeros())
}

/// `floor(log2(x))` for `x >= 1`.
pub fn floor_log2(x: u64) -> u32 {
    debug_assert!(x > 0);
    63 - x.leading_zeros()
}

/// `ceil(log2(x))` for `x >= 1`.
pub fn ceil_log2(x: u64) -> u32 {
    debug_assert!(x > 0);
    if x == 1 {
        0
    } else {
        floor_log2(x - 1) + 1
    }
}

#[inline]
fn bit(x: u64, i: u32) -> bool {
    i < 64 && (x >> i) & 1 == 1
}

/// Mountain heights of a lazily merged forest, left-to-right.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HeightSequence {
    pub heights: Vec<u32>,
}

impl HeightSequence {
    pub fn len(&self) -> usize {
        self.heights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heights.is_empty()
    }

    /// Height of the mountain at `pos`, counted from the right.
    pub fn at_position(&self, pos: usize) -> u32 {
        self.heights[self.heights.len() - 1 - pos]
    }

    /// Compact digit rendering, e.g. `"210"` for `(2, 1, 0)`.
    pub fn digits(&self) -> String {
        self.heights.iter().map(|h| h.to_string()).collect()
    }
}

/// Height sequence of the U-MMB forest with `n` leaves; empty for `n = 0`.
pub fn height_sequence(n: u64) -> HeightSequence {
    let n1 = n + 1;
    let t = floor_log2(n1);
    let heights = (0..t).rev().map(|i| i + bit(n1, i) as u32).collect();
    HeightSequence { heights }
}

/// Position (and pre-merge height) of the pair merged while appending item `n`.
pub fn merge_position(n: u64) -> Option<u32> {
    let n1 = n + 1;
    if n1.is_power_of_two() {
        None
    } else {
        Some(n1.trailing_zeros())
    }
}

/// Mountain heights of the eagerly merged forest (one per set bit of `n`).
pub fn ummr_heights(n: u64) -> Vec<u32> {
    (0..64u32).rev().filter(|&i| bit(n, i)).collect()
}

/// Whether a lazy-layout store index holds the sentinel.
pub fn is_skipped(i: u64) -> bool {
    i == 0 || i.is_power_of_two()
}

/// A real node of the lazy-layout store, addressed by its index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeCoord {
    index: u64,
}

impl NodeCoord {
    pub fn new(index: u64) -> Result<Self, MathError> {
        if is_skipped(index) {
            return Err(MathError::SentinelIndex(index));
        }
        Ok(NodeCoord { index })
    }

    /// Coordinate of the leaf holding item `item` (1-based).
    pub fn leaf(item: u64) -> Self {
        NodeCoord { index: 2 * item + 1 }
    }

    pub fn index(self) -> u64 {
        self.index
    }

    pub fn height(self) -> u32 {
        self.index.trailing_zeros()
    }

    pub fn is_left(self) -> bool {
        bit(self.index, self.height() + 1)
    }

    pub fn sibling(self) -> NodeCoord {
        let step = 1u64 << (self.height() + 1);
        let index = if self.is_left() {
            self.index + step
        } else {
            self.index - step
        };
        NodeCoord { index }
    }

    pub fn parent(self) -> NodeCoord {
        let h = self.height();
        let mult = if self.is_left() { 3 } else { 1 };
        NodeCoord {
            index: self.index + mult * (1u64 << h),
        }
    }

    pub fn children(self) -> Result<(NodeCoord, NodeCoord), MathError> {
        let h = self.height();
        if h == 0 {
            return Err(MathError::LeafHasNoChildren(self.index));
        }
        let half = 1u64 << (h - 1);
        Ok((
            NodeCoord {
                index: self.index - 3 * half,
            },
            NodeCoord {
                index: self.index - half,
            },
        ))
    }

    /// Peak test against a store holding `n` items.
    pub fn is_peak(self, n: u64) -> bool {
        self.parent().index > 2 * n + 2
    }

    /// First and last item (1-based, inclusive) below this node.
    pub fn span(self) -> (u64, u64) {
        let h = self.height();
        let p = 1u64 << h;
        let last = (self.index - p) / 2;
        (last + 1 - p, last)
    }

    /// Node of height `h` whose rightmost descendant is item `last`.
    pub fn from_last_item(last: u64, h: u32) -> Self {
        NodeCoord {
            index: 2 * last + (1u64 << h),
        }
    }

    /// Store size after which this node exists (its creation step).
    pub fn created_at(self) -> u64 {
        if self.height() == 0 {
            (self.index - 1) / 2
        } else {
            self.index / 2 - 1
        }
    }
}

/// Full answer for a store index, including sentinel slots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoordReport {
    pub index: u64,
    pub skipped: bool,
    pub node: Option<NodeReport>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeReport {
    pub height: u32,
    pub is_left: bool,
    pub sibling: u64,
    pub parent: u64,
    pub children: Option<(u64, u64)>,
    pub is_peak: bool,
}

pub fn coord_query(i: u64, n: u64) -> Result<CoordReport, MathError> {
    if n > MAX_N {
        return Err(MathError::SizeTooLarge(n));
    }
    if i > 2 * n + 2 {
        return Err(MathError::IndexOutOfRange { index: i, n });
    }
    if is_skipped(i) {
        return Ok(CoordReport {
            index: i,
            skipped: true,
            node: None,
        });
    }
    let c = NodeCoord { index: i };
    Ok(CoordReport {
        index: i,
        skipped: false,
        node: Some(NodeReport {
            height: c.height(),
            is_left: c.is_left(),
            sibling: c.sibling().index,
            parent: c.parent().index,
            children: c.children().ok().map(|(l, r)| (l.index, r.index)),
            is_peak: c.is_peak(n),
        }),
    })
}

/// A mountain in some forest: its height, the store address of its peak and
/// the item interval it covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MountainCoord {
    pub height: u32,
    pub index: u64,
    pub first: u64,
    pub last: u64,
}

impl MountainCoord {
    pub fn contains(&self, item: u64) -> bool {
        self.first <= item && item <= self.last
    }
}

/// Peaks of the lazy forest with `n` leaves, left-to-right.
pub fn ummb_peaks(n: u64) -> Vec<MountainCoord> {
    let hs = height_sequence(n);
    let mut out = Vec::with_capacity(hs.len());
    let mut last = 0u64;
    for &h in &hs.heights {
        let first = last + 1;
        last += 1u64 << h;
        out.push(MountainCoord {
            height: h,
            index: NodeCoord::from_last_item(last, h).index(),
            first,
            last,
        });
    }
    out
}

/// Peaks of the eager forest with `n` leaves in post-order positions.
pub fn ummr_peaks(n: u64) -> Vec<MountainCoord> {
    let mut out = Vec::new();
    let mut last = 0u64;
    let mut pos_end = 0u64;
    for h in ummr_heights(n) {
        let first = last + 1;
        last += 1u64 << h;
        pos_end += (1u64 << (h + 1)) - 1;
        out.push(MountainCoord {
            height: h,
            index: pos_end - 1,
            first,
            last,
        });
    }
    out
}

/// Number of post-order store entries for an eager forest of `n` leaves.
pub fn ummr_store_len(n: u64) -> u64 {
    2 * n - n.count_ones() as u64
}

/// Children of a post-order node at `pos` with height `h >= 1`.
pub fn postorder_children(pos: u64, h: u32) -> (u64, u64) {
    (pos - (1u64 << h), pos - 1)
}

/// Post-order position of item `item` (1-based).
pub fn ummr_leaf_position(item: u64) -> u64 {
    let before = item - 1;
    2 * before - before.count_ones() as u64
}

/// Range splits of the belt over the lazy forest with `n` leaves.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RangePartition {
    /// Mountain heights, left-to-right.
    pub heights: Vec<u32>,
    /// Positions `p` (from the right) such that a split separates `p + 1` and `p`.
    pub split_positions: Vec<u32>,
}

impl RangePartition {
    /// Number of mountains in each range, left-to-right.
    pub fn range_sizes(&self) -> Vec<usize> {
        let t = self.heights.len();
        let mut sizes = Vec::new();
        let mut start = t; // exclusive upper position bound
        for &p in self.split_positions.iter().rev() {
            let p = p as usize;
            sizes.push(start - (p + 1));
            start = p + 1;
        }
        if t > 0 {
            sizes.push(start);
        }
        sizes
    }

    /// Range boundaries as left-to-right vector indices `[start, end)`.
    pub fn ranges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut s = 0;
        for size in self.range_sizes() {
            out.push((s, s + size));
            s += size;
        }
        out
    }

    /// Size of the leftmost range, `r(n, n)`.
    pub fn leftmost_size(&self) -> usize {
        self.range_sizes().first().copied().unwrap_or(0)
    }
}

/// Split test from the binary expansion of `n + 1`: bits `(1|0)` or `(01|)`.
pub fn split_by_bits(n: u64, p: u32) -> bool {
    let n1 = n + 1;
    let t = floor_log2(n1);
    if p + 1 >= t {
        return false;
    }
    bit(n1, p + 1) && (!bit(n1, p) || !bit(n1, p + 2))
}

/// Split test from the structural conditions on a height sequence.
pub fn split_by_structure(hs: &HeightSequence, p: u32) -> bool {
    let t = hs.len() as u32;
    if p + 1 >= t {
        return false;
    }
    let left = hs.at_position(p as usize + 1);
    let right = hs.at_position(p as usize);
    let height_gap = left == right + 2;
    let pair_with_left = p + 2 < t && hs.at_position(p as usize + 2) == left;
    height_gap || pair_with_left
}

pub fn range_partition(n: u64) -> RangePartition {
    let hs = height_sequence(n);
    let t = hs.len() as u32;
    let split_positions: Vec<u32> = (0..t.saturating_sub(1))
        .filter(|&p| split_by_bits(n, p))
        .collect();
    debug_assert!(
        (0..t.saturating_sub(1)).all(|p| split_by_bits(n, p) == split_by_structure(&hs, p)),
        "split characterizations disagree at n = {n}"
    );
    RangePartition {
        heights: hs.heights,
        split_positions,
    }
}

/// Same partition computed only from the structural conditions.
pub fn range_partition_structural(n: u64) -> RangePartition {
    let hs = height_sequence(n);
    let t = hs.len() as u32;
    let split_positions = (0..t.saturating_sub(1))
        .filter(|&p| split_by_structure(&hs, p))
        .collect();
    RangePartition {
        heights: hs.heights,
        split_positions,
    }
}

/// Left-to-right vector index of the U-MMB mountain holding `item`.
pub fn ummb_mountain_of(n: u64, item: u64) -> Option<(usize, MountainCoord)> {
    ummb_peaks(n)
        .into_iter()
        .enumerate()
        .find(|(_, m)| m.contains(item))
}
