use std::collections::HashSet;

use mmb_core::analysis::{r_prime_bar_empirical, sigma};
use mmb_core::compat::{synthetic_item, synthetic_leaves};
use mmb_core::node_math::{
    ceil_log2, floor_log2, height_sequence, merge_position, ummb_peaks, MountainCoord, NodeCoord,
};
use mmb_core::proofs::wire::{decode_increment, decode_membership, encode_increment, encode_membership};
use mmb_core::proofs::{gen_increment, gen_membership, update_membership, verify_membership, Coord, Layout};
use mmb_core::sync::{Board, BulletinBoard, Participant};
use mmb_core::{sha256, toy, BaggedState, Digest, Forest, ForestKind, StructureKind};
use num_rational::Ratio;
use proptest::prelude::*;

fn states(kind: StructureKind, n: u64) -> Vec<BaggedState> {
    let h = toy();
    let mut s = BaggedState::new(kind, h.clone());
    let mut out = vec![s.clone()];
    for l in synthetic_leaves(&h, 0, n) {
        s.append(l).unwrap();
        out.push(s.clone());
    }
    out
}

#[test]
fn mountain_count_and_recent_leaf_placement() {
    for n in 1..=(1u64 << 16) {
        let peaks = ummb_peaks(n);
        assert_eq!(peaks.len() as u32, floor_log2(n + 1), "n={n}");
        assert_eq!(height_sequence(n).len(), peaks.len());
        let t = peaks.len();
        for (v, m) in peaks.iter().enumerate() {
            // the newest item of a mountain is the binding case
            let k = n - m.last + 1;
            let d = floor_log2(k) as usize + 1;
            assert!(t - 1 - v < d && m.height as usize <= d, "n={n} k={k}");
        }
    }
}

#[test]
fn few_high_merges_per_window() {
    let n_max = 1u64 << 14;
    // height of the two mountains merged at each step
    let hs: Vec<Option<u32>> = (0..=n_max).map(merge_position).collect();
    for k in 1..=64u64 {
        let floor = ceil_log2(k);
        for start in 1..=n_max - k + 1 {
            let high = (start..start + k).filter(|&n| hs[n as usize].is_some_and(|h| h >= floor)).count();
            assert!(high <= 1, "k={k} window at {start}");
        }
        for m in 0..=n_max - k {
            let n = m + k;
            for p in ummb_peaks(n).iter().filter(|p| p.last > m) {
                assert!(p.height <= floor + 1, "k={k} m={m}: new leaves under height {}", p.height);
            }
        }
    }
}

#[test]
fn leaf_merge_participation_per_window() {
    let n_max = 1u64 << 14;
    // merge times of each item
    let mut times: Vec<Vec<u64>> = vec![Vec::new(); n_max as usize + 1];
    for n in 1..=n_max {
        if merge_position(n).is_some() {
            let (first, last) = NodeCoord::new(2 * n + 2).unwrap().span();
            for i in first..=last {
                times[i as usize].push(n);
            }
        }
    }
    for k in 1..=64u64 {
        let cap = ceil_log2(k) as usize + 1;
        for (i, ts) in times.iter().enumerate() {
            for (a, &t) in ts.iter().enumerate() {
                let within = ts[a..].iter().take_while(|&&u| u < t + k).count();
                assert!(within <= cap, "item {i} k={k}: {within} merges from step {t}");
            }
        }
    }
}

#[test]
fn peak_list_diff_is_small() {
    for m in 1..=(1u64 << 12) {
        let old: HashSet<u64> = ummb_peaks(m).iter().map(|p| p.index).collect();
        for k in 1..=256u64 {
            let n = m + k;
            let fresh: Vec<MountainCoord> = ummb_peaks(n).into_iter().filter(|p| !old.contains(&p.index)).collect();
            let peaks = ummb_peaks(n);
            let high_merge = fresh.first().is_some_and(|p| {
                NodeCoord::new(p.index)
                    .unwrap()
                    .children()
                    .is_ok_and(|(l, r)| old.contains(&l.index()) && old.contains(&r.index()))
            });
            // apart from that one merge, the changed peaks are the rightmost ones
            let rest = &fresh[high_merge as usize..];
            assert!(peaks.ends_with(rest), "m={m} n={n}");
            let rest = rest.len();
            assert!(rest as u32 <= ceil_log2(k) + 2, "m={m} n={n}: {rest} changed peaks");
        }
    }
}

#[test]
fn prefix_growth_exhaustive_small() {
    for kind in [StructureKind::Ummb, StructureKind::Ummr, StructureKind::Chain] {
        let st = states(kind, 96);
        for n in 1..=96usize {
            for m in 1..=n {
                for i in 1..=m as u64 {
                    let a = gen_membership(&st[m], i).unwrap();
                    let b = gen_membership(&st[n], i).unwrap();
                    assert!(b.elements.starts_with(&a.elements), "{kind} i={i} m={m} n={n}");
                }
            }
        }
    }
}

fn triple(max: u64) -> impl Strategy<Value = (u64, u64, u64)> {
    (1..=max)
        .prop_flat_map(|n| (1..=n, Just(n)))
        .prop_flat_map(|(m, n)| (1..=m, Just(m), Just(n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prefix_growth((i, m, n) in triple(1 << 10), pick in 0usize..3) {
        let kind = [StructureKind::Ummb, StructureKind::Ummr, StructureKind::Chain][pick];
        let h = toy();
        let ls = synthetic_leaves(&h, 0, n);
        let at_n = BaggedState::rebuild(kind, h.clone(), &ls).unwrap();
        let at_m = at_n.prefix(m).unwrap();
        let a = gen_membership(&at_m, i).unwrap();
        let b = gen_membership(&at_n, i).unwrap();
        prop_assert!(b.elements.starts_with(&a.elements));
        prop_assert!(verify_membership(&h, &at_m.commitment(), i, &ls[i as usize - 1], &a).is_ok());
    }

    #[test]
    fn membership_wire_round_trip((i, _m, n) in triple(2000), pick in 0usize..7, wide in any::<bool>()) {
        let kind = StructureKind::ALL[pick];
        let h = if wide { sha256() } else { toy() };
        let s = BaggedState::rebuild(kind, h.clone(), &synthetic_leaves(&h, 3, n)).unwrap();
        let p = gen_membership(&s, i).unwrap();
        let bytes = encode_membership(&p);
        prop_assert_eq!(decode_membership(&bytes, h.width()).unwrap(), p);
        prop_assert!(decode_membership(&bytes[..bytes.len() - 1], h.width()).is_err());
    }

    #[test]
    fn increment_wire_round_trip((_i, m, n) in triple(2000), mmb in any::<bool>(), wide in any::<bool>()) {
        prop_assume!(m < n);
        let kind = if mmb { StructureKind::Mmb } else { StructureKind::Ummb };
        let h = if wide { sha256() } else { toy() };
        let s = BaggedState::rebuild(kind, h.clone(), &synthetic_leaves(&h, 4, n)).unwrap();
        let p = gen_increment(&s, m).unwrap();
        let bytes = encode_increment(&p);
        prop_assert_eq!(decode_increment(&bytes, h.width()).unwrap(), p);
        prop_assert!(decode_increment(&bytes[..bytes.len() - 1], h.width()).is_err());
    }
}

#[test]
fn frozen_increment_size_constants() {
    for kind in [StructureKind::Ummb, StructureKind::Mmb] {
        let h = toy();
        let mut s = BaggedState::new(kind, h.clone());
        for (n, l) in (1u64..).zip(synthetic_leaves(&h, 0, (1 << 12) + 256)) {
            s.append(l).unwrap();
            for k in 1..=n.min(256) {
                let fl = floor_log2(k) as usize;
                let cap = if kind == StructureKind::Ummb { 2 * fl + 1 } else { 3 * fl + 6 };
                let size = gen_increment(&s, n - k).unwrap().size();
                assert!(size <= cap, "{kind} m={} n={n}: {size} > {cap}", n - k);
            }
        }
    }
}

#[test]
fn frozen_update_constants() {
    for kind in [StructureKind::Ummb, StructureKind::Mmb] {
        let st = states(kind, 1024 + 128);
        for m in 1..=1024u64 {
            let items: Vec<u64> = [1, m / 3 + 1, m / 2 + 1, m - m / 7, m].into_iter().filter(|&i| i >= 1).collect();
            let proofs: Vec<_> = items.iter().map(|&i| gen_membership(&st[m as usize], i).unwrap()).collect();
            for k in 1..=128u64 {
                let n = m + k;
                let cap = match kind {
                    StructureKind::Ummb => ceil_log2(k) as usize + 2,
                    _ => 2 * floor_log2(k) as usize + 4,
                };
                for p in &proofs {
                    let u = update_membership(p, &st[n as usize], n).unwrap();
                    assert!(u.digests_read <= cap, "{kind} i={} m={m} n={n}: {} > {cap}", p.index, u.digests_read);
                    assert_eq!(u.proof, gen_membership(&st[n as usize], p.index).unwrap());
                }
            }
        }
    }
}

fn board(kind: StructureKind, n: u64) -> (BulletinBoard, Vec<mmb_core::Commitment>) {
    let mut b = BulletinBoard::new(kind, toy());
    let mut commits = vec![b.head()];
    for i in 1..=n {
        commits.push(b.manager_append(&synthetic_item(0, i)).unwrap());
    }
    (b, commits)
}

#[test]
fn ummb_sync_fetches_logarithmically_many_peaks() {
    let (mut b, mut commits) = board(StructureKind::Ummb, 256);
    for n in 257..=(1u64 << 11) {
        commits.push(b.manager_append(&synthetic_item(0, n)).unwrap());
        for k in 1..=256u64 {
            let mut p = Participant::new(toy(), commits[(n - k) as usize].clone());
            let cost = p.sync_commitment(&b).unwrap();
            assert!(cost.digests_received <= ceil_log2(k) as u64 + 2, "m={} n={n}", n - k);
            assert_eq!(p.commitment(), &b.head());
        }
    }
}

#[test]
fn ummb_sync_for_the_large_scenario() {
    let (mut b, commits) = board(StructureKind::Ummb, 91_107);
    for i in 91_108..=91_145 {
        b.manager_append(&synthetic_item(0, i)).unwrap();
    }
    let mut p = Participant::new(toy(), commits[91_107].clone());
    let cost = p.sync_commitment(&b).unwrap();
    assert!(cost.digests_received <= 8, "{cost:?}");
    assert_eq!(p.commitment(), &b.head());
}

#[test]
fn hundred_stored_proofs_across_sixty_four_appends() {
    for m in (900u64..=1400).step_by(23) {
        let (mut b, _) = board(StructureKind::Ummb, m);
        let mut p = Participant::new(toy(), b.head());
        for j in 0..100 {
            p.fetch_and_verify_membership(&b, 1 + (j * 7919 + m) % m).unwrap();
        }
        let held = p.proofs().len() as u64;
        for i in m + 1..=m + 64 {
            b.manager_append(&synthetic_item(0, i)).unwrap();
        }
        p.sync_commitment(&b).unwrap();
        let r = p.update_stored_proofs(&b).unwrap();
        assert!(r.dropped.is_empty());
        assert_eq!(r.updated as u64, held);
        assert!(r.cost.digests_received <= held * (ceil_log2(64) as u64 + 1), "m={m}: {}", r.cost.digests_received);
    }
}

#[test]
fn board_log_replays_to_the_head() {
    for kind in StructureKind::ALL {
        let (b, _) = board(kind, 700);
        b.audit().unwrap();
        let rebuilt = BaggedState::rebuild(kind, toy(), &(1..=700).map(|i| b.leaf(i).unwrap()).collect::<Vec<_>>()).unwrap();
        assert_eq!(rebuilt.commitment(), b.head());
    }
}

#[test]
fn component_periodicity() {
    for k in 1..=128u64 {
        let kk = k + 1;
        let d = floor_log2(kk);
        let rb_period = if 2 * kk < 3 << d { 2u64 << d } else { 4u64 << d };
        let rp_period = 8u64 << d;
        let comp = |n: u64| {
            let lay = Layout::new(StructureKind::Mmb, n);
            lay.decompose(n - kk + 1).unwrap()
        };
        for n in kk..kk + 2 * rp_period {
            let (a, b, c) = (comp(n), comp(n + rb_period), comp(n + rp_period));
            assert_eq!((a.r, a.b), (b.r, b.b), "r, b: k={kk} n={n}");
            assert_eq!(a.r_prime, c.r_prime, "r': k={kk} n={n}");
        }
    }
}

#[test]
fn leftmost_intervals() {
    for d in 0..=5u32 {
        let p = 1u64 << d;
        for k in (p.max(2) - 1)..(2 * p - 1) {
            let comp = |n: u64| Layout::new(StructureKind::Mmb, n).decompose(n - k + 1).unwrap();
            for n in k..k + 5 * p {
                // the k-dependent upper end is inclusive of n + 1 = k + 2^(d+1)
                let in_leftmost = n < k + p
                    || (3 * p <= n + 1 && 2 * (n + 1) < (7 * p).max(2 * (k + 2 * p + 1)))
                    || (k + 4 * p <= n && n < k + 5 * p);
                assert_eq!(comp(n).r_prime == 1, in_leftmost, "k={k} n={n}");
            }
            let span = if 2 * (k + 1) < 3 * p { 2 * p } else { 4 * p };
            for n in k..k + span {
                assert_eq!(comp(n).b_prime, 1, "leftmost range: k={k} n={n}");
            }
        }
    }
}

#[test]
fn r_prime_mean_lower_bound() {
    let floor = Ratio::new(5i128, 16);
    for k in 1..=512u64 {
        assert!(r_prime_bar_empirical(k) >= floor, "k={k}");
        let d = floor_log2(k + 1);
        for i in 0..=3u32 {
            let len = 1u64 << (d + i);
            let hits: u64 = (k..k + len).map(|n| sigma(StructureKind::Mmb, k, n).unwrap().decomposition.r_prime).sum();
            assert!(16 * hits >= 5 * len, "k={k} i={i}");
        }
    }
}

/// Leaf set below a node, by walking down to height 0.
fn descendants(idx: u64, out: &mut Vec<u64>) {
    let c = NodeCoord::new(idx).unwrap();
    match c.children() {
        Ok((l, r)) => {
            descendants(l.index(), out);
            descendants(r.index(), out);
        }
        Err(_) => out.push(c.span().0),
    }
}

#[test]
fn increment_covering_sets_are_independent_and_exact() {
    for kind in [StructureKind::Ummb, StructureKind::Mmb] {
        let st = states(kind, 512);
        for n in 1..=512u64 {
            let lay = Layout::new(kind, n);
            for m in 0..n {
                let p = gen_increment(&st[n as usize], m).unwrap();
                let held: HashSet<u64> = ummb_peaks(m).iter().map(|c| c.index).collect();
                let mut roots: Vec<u64> = Vec::new();
                let mut sent = HashSet::new();
                for e in &p.entries {
                    match e.coord {
                        Coord::Mountain(idx) => {
                            assert!(kind == StructureKind::Mmb || !held.contains(&idx), "{kind} {m}->{n}: held peak resent");
                            assert!(sent.insert(idx), "{kind} {m}->{n}: duplicate");
                            roots.push(idx);
                        }
                        Coord::Range { start, count } => {
                            let v = lay.peaks.iter().position(|c| c.index == start).unwrap();
                            roots.extend(lay.peaks[v..v + count as usize].iter().map(|c| c.index));
                        }
                        Coord::Belt(j) => {
                            let end = lay.ranges[j as usize - 1].1;
                            roots.extend(lay.peaks[..end].iter().map(|c| c.index));
                        }
                    }
                }
                if kind == StructureKind::Ummb {
                    roots.extend(held.iter().copied());
                }
                let mut leaves = Vec::new();
                for r in &roots {
                    descendants(*r, &mut leaves);
                }
                leaves.sort_unstable();
                let want: Vec<u64> = (1..=n).collect();
                assert_eq!(leaves, want, "{kind} {m}->{n}");
            }
        }
    }
}

#[test]
fn store_replay_reconstructs_the_forest() {
    for (fk, kind) in [(ForestKind::Ummb, StructureKind::Ummb), (ForestKind::Ummr, StructureKind::Ummr)] {
        let st = states(kind, 600);
        for s in st.iter().skip(1).step_by(13) {
            let f = Forest::from_store(fk, toy(), s.store()).unwrap();
            assert_eq!(f.peaks(), s.peaks());
            let Some(top) = s.peaks().iter().find(|p| p.height > 0) else {
                continue;
            };
            let mut bytes = s.store().entries().to_vec();
            let mut raw = bytes[top.index as usize].as_bytes().to_vec();
            raw[0] ^= 1;
            bytes[top.index as usize] = Digest::from_slice(&raw).unwrap();
            let mut bad = mmb_core::NodeStore::new(8);
            for d in bytes {
                bad.push(d).unwrap();
            }
            assert!(Forest::from_store(fk, toy(), &bad).is_err());
        }
    }
}

#[test]
fn bagging_node_counts() {
    for kind in [StructureKind::Fmmr, StructureKind::Fmmb, StructureKind::Mmb] {
        for (n, s) in states(kind, 4096).iter().enumerate().skip(1) {
            let t = s.peaks().len();
            assert_eq!(s.range_nodes().len(), t, "{kind} n={n}");
            if kind == StructureKind::Mmb {
                assert_eq!(s.belt_nodes().len(), s.ranges().len(), "n={n}");
                let total = s.range_nodes().len() + s.belt_nodes().len();
                assert!(total as u32 <= 2 * floor_log2(n as u64 + 1), "n={n}");
            }
        }
    }
}
