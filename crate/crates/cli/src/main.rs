use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use mmb_core::analysis;
use mmb_core::bagging::unbagged_commitment_at;
use mmb_core::compat::{self, synthetic_item};
use mmb_core::proofs::{self, wire};
use mmb_core::sync::{Board, BulletinBoard};
use mmb_core::{hasher_for_width, BaggedState, Commitment, Error, Payload, StructureKind};

#[derive(Parser)]
#[command(name = "mmb", version, about = "Append-only commitments, proofs and proof-size surveys")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct StoreArgs {
    /// Checkpoint file holding the structure.
    #[arg(long)]
    store: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Append synthetic items to a store, creating it if missing.
    Append {
        #[arg(long)]
        kind: StructureKind,
        #[command(flatten)]
        store: StoreArgs,
        #[arg(long, default_value_t = 0)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        digest_width: usize,
    },
    /// Write a membership proof for one item.
    Prove {
        #[command(flatten)]
        store: StoreArgs,
        #[arg(long)]
        index: u64,
        /// Prove against this earlier size instead of the current one.
        #[arg(long)]
        to: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a membership proof file for the synthetic item at `--index`.
    Verify {
        proof: PathBuf,
        #[command(flatten)]
        store: StoreArgs,
        #[arg(long)]
        index: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Commitment size to check against; defaults to the proof's size.
        #[arg(long)]
        to: Option<u64>,
    },
    /// Write an increment proof between two sizes.
    IncrProve {
        #[command(flatten)]
        store: StoreArgs,
        #[arg(long)]
        from: u64,
        #[arg(long)]
        to: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check an increment proof file against the store's commitments.
    IncrVerify {
        proof: PathBuf,
        #[command(flatten)]
        store: StoreArgs,
    },
    /// Amortized proof sizes against closed forms and bounds, as CSV.
    Survey {
        #[arg(long, default_value_t = 512)]
        k_max: u64,
        /// Comma-separated kinds; all kinds when omitted.
        #[arg(long, value_delimiter = ',')]
        kind: Vec<StructureKind>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-append hash counts on a fresh structure.
    Hashstats {
        /// Comma-separated kinds; all kinds when omitted.
        #[arg(long, value_delimiter = ',')]
        kind: Vec<StructureKind>,
        #[arg(long, default_value_t = 1 << 16)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        digest_width: usize,
    },
    /// Randomized recent-proof and old-commitment compatibility trials.
    Compat {
        #[arg(long, default_value_t = 10_000)]
        count: u64,
        /// Largest proof size drawn.
        #[arg(long, default_value_t = 1 << 14)]
        to: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        digest_width: usize,
    },
}

/// Outcome of a command that ran to completion.
enum Verdict {
    Ok,
    Rejected,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(Verdict::Ok) => ExitCode::SUCCESS,
        Ok(Verdict::Rejected) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Rejected(_)) => 1,
        Some(Error::Io(_)) => 3,
        Some(_) => 2,
        None if e.downcast_ref::<io::Error>().is_some() => 3,
        None => 2,
    }
}

fn run(cmd: Cmd) -> anyhow::Result<Verdict> {
    match cmd {
        Cmd::Append {
            kind,
            store,
            count,
            seed,
            digest_width,
        } => cmd_append(kind, &store.store, count, seed, digest_width),
        Cmd::Prove { store, index, to, out } => cmd_prove(&store.store, index, to, &out),
        Cmd::Verify {
            proof,
            store,
            index,
            seed,
            to,
        } => cmd_verify(&proof, &store.store, index, seed, to),
        Cmd::IncrProve { store, from, to, out } => cmd_incr_prove(&store.store, from, to, &out),
        Cmd::IncrVerify { proof, store } => cmd_incr_verify(&proof, &store.store),
        Cmd::Survey { k_max, kind, out } => cmd_survey(k_max, &kinds_or_all(kind), out.as_deref()),
        Cmd::Hashstats {
            kind,
            count,
            seed,
            digest_width,
        } => cmd_hashstats(&kinds_or_all(kind), count, seed, digest_width),
        Cmd::Compat {
            count,
            to,
            seed,
            digest_width,
        } => cmd_compat(count, to, seed, digest_width),
    }
}

fn kinds_or_all(kinds: Vec<StructureKind>) -> Vec<StructureKind> {
    if kinds.is_empty() {
        StructureKind::ALL.to_vec()
    } else {
        kinds
    }
}

fn load(path: &Path) -> anyhow::Result<BulletinBoard> {
    BulletinBoard::load(path).with_context(|| format!("loading {}", path.display()))
}

fn read_file(path: &Path) -> anyhow::Result<Vec<u8>> {
    fs::read(path)
        .map_err(Error::from)
        .with_context(|| format!("reading {}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes)
        .map_err(Error::from)
        .with_context(|| format!("writing {}", path.display()))
}

/// Commitment of the first `c` items of a stored structure.
fn commitment_at(state: &BaggedState, c: u64) -> anyhow::Result<Commitment> {
    if c > state.n() {
        bail!(Error::BadSizes { from: state.n(), to: c });
    }
    Ok(match state.kind() {
        k @ (StructureKind::Ummb | StructureKind::Ummr) => unbagged_commitment_at(k, state.store(), c)?,
        _ if c == state.n() => state.commitment(),
        _ => state.prefix(c)?.commitment(),
    })
}

fn print_commitment(c: &Commitment) {
    println!("kind {}", c.kind);
    println!("n {}", c.n);
    match &c.payload {
        Payload::Empty => println!("head empty"),
        Payload::Root(d) => println!("root {}", d.to_hex()),
        Payload::Peaks(p) => {
            let heights: Vec<String> = p.iter().map(|(h, _)| h.to_string()).collect();
            println!("heights ({})", heights.join(","));
            for (h, d) in p {
                println!("peak {h} {}", d.to_hex());
            }
        }
    }
}

fn cmd_append(kind: StructureKind, path: &Path, count: u64, seed: u64, width: usize) -> anyhow::Result<Verdict> {
    let mut board = if path.exists() {
        let b = load(path)?;
        if b.kind() != kind {
            bail!(Error::KindMismatch {
                kind,
                expected: b.kind(),
            });
        }
        if b.state().width() != width {
            bail!(Error::WidthMismatch {
                expected: b.state().width(),
                got: width,
            });
        }
        b
    } else {
        BulletinBoard::new(kind, hasher_for_width(width)?)
    };
    let start = board.n();
    for i in start + 1..=start + count {
        board.manager_append(&synthetic_item(seed, i))?;
    }
    board.save(path).with_context(|| format!("writing {}", path.display()))?;
    let spent: u64 = board.log().iter().map(|r| r.hashes_spent).sum();
    print_commitment(&board.head());
    println!("appended {count}");
    println!("hashes {spent}");
    println!("hashes_total {}", board.state().hash_counter());
    if count > 0 {
        println!("mean_hashes_per_append {:.6}", spent as f64 / count as f64);
    }
    Ok(Verdict::Ok)
}

fn cmd_prove(path: &Path, index: u64, to: Option<u64>, out: &Path) -> anyhow::Result<Verdict> {
    let board = load(path)?;
    let st = board.state();
    let n = to.unwrap_or(st.n());
    if n > st.n() {
        bail!(Error::BadSizes { from: st.n(), to: n });
    }
    let proof = match st.kind() {
        k @ (StructureKind::Ummb | StructureKind::Ummr | StructureKind::Chain) => {
            let p = proofs::gen_from_store(k, st.store(), index, n)?;
            if k == StructureKind::Ummb {
                proofs::extend_from_store(&p, st.store())?
            } else {
                p
            }
        }
        _ if n == st.n() => proofs::gen_membership(st, index)?,
        _ => proofs::gen_membership(&st.prefix(n)?, index)?,
    };
    write_file(out, &wire::encode_membership(&proof))?;
    println!("proof {} index {} n {} digests {}", proof.kind, proof.index, proof.n, proof.size());
    Ok(Verdict::Ok)
}

fn cmd_verify(proof_path: &Path, path: &Path, index: u64, seed: u64, to: Option<u64>) -> anyhow::Result<Verdict> {
    let bytes = read_file(proof_path)?;
    let board = load(path)?;
    let st = board.state();
    let proof = wire::decode_membership(&bytes, st.width())?;
    let com = commitment_at(st, to.unwrap_or(proof.n))?;
    let leaf = st.hasher().hash(&synthetic_item(seed, index));
    match proofs::verify_membership(st.hasher(), &com, index, &leaf, &proof) {
        Ok(()) => {
            println!("accept");
            Ok(Verdict::Ok)
        }
        Err(r) => {
            println!("reject: {r}");
            Ok(Verdict::Rejected)
        }
    }
}

fn cmd_incr_prove(path: &Path, from: u64, to: Option<u64>, out: &Path) -> anyhow::Result<Verdict> {
    let board = load(path)?;
    let st = board.state();
    let proof = match to {
        Some(n) if n != st.n() => {
            if n > st.n() {
                bail!(Error::BadSizes { from: st.n(), to: n });
            }
            proofs::gen_increment(&st.prefix(n)?, from)?
        }
        _ => proofs::gen_increment(st, from)?,
    };
    write_file(out, &wire::encode_increment(&proof))?;
    println!(
        "increment {} m {} n {} digests {} highest_merge {}",
        proof.kind,
        proof.m,
        proof.n,
        proof.size(),
        proof.highest_merge().map_or("none".to_string(), |h| h.to_string())
    );
    Ok(Verdict::Ok)
}

fn cmd_incr_verify(proof_path: &Path, path: &Path) -> anyhow::Result<Verdict> {
    let bytes = read_file(proof_path)?;
    let board = load(path)?;
    let st = board.state();
    let proof = wire::decode_increment(&bytes, st.width())?;
    let from = commitment_at(st, proof.m)?;
    let to = commitment_at(st, proof.n)?;
    match proofs::verify_increment(st.hasher(), &from, &to, &proof) {
        Ok(()) => {
            println!("accept");
            Ok(Verdict::Ok)
        }
        Err(r) => {
            println!("reject: {r}");
            Ok(Verdict::Rejected)
        }
    }
}

fn cmd_survey(k_max: u64, kinds: &[StructureKind], out: Option<&Path>) -> anyhow::Result<Verdict> {
    let rows = analysis::survey(kinds, k_max)?;
    let mut buf = Vec::new();
    analysis::write_csv(&rows, &mut buf)?;
    match out {
        Some(p) => write_file(p, &buf)?,
        None => io::stdout().write_all(&buf).map_err(Error::from)?,
    }
    let bad: Vec<_> = rows.iter().filter(|r| !r.ok()).collect();
    for r in &bad {
        eprintln!("violation: {} k={} delta={:?}", r.kind, r.k, r.delta);
    }
    Ok(if bad.is_empty() { Verdict::Ok } else { Verdict::Rejected })
}

fn cmd_hashstats(kinds: &[StructureKind], count: u64, seed: u64, width: usize) -> anyhow::Result<Verdict> {
    let h = hasher_for_width(width)?;
    for &kind in kinds {
        let mut st = BaggedState::new(kind, h.clone());
        let mut hist: BTreeMap<u64, u64> = BTreeMap::new();
        let mut total = 0;
        for i in 1..=count {
            let rec = st.append(h.hash(&synthetic_item(seed, i)))?;
            total += rec.hashes_spent;
            *hist.entry(rec.hashes_spent).or_default() += 1;
        }
        let mean = if count == 0 { 0.0 } else { total as f64 / count as f64 };
        let max = hist.keys().next_back().copied().unwrap_or(0);
        let spread: Vec<String> = hist.iter().map(|(k, v)| format!("{k}:{v}")).collect();
        println!(
            "{kind} appends {count} hashes {total} mean {mean:.6} max {max} histogram {}",
            spread.join(" ")
        );
    }
    Ok(Verdict::Ok)
}

fn cmd_compat(trials: u64, n_max: u64, seed: u64, width: usize) -> anyhow::Result<Verdict> {
    if n_max == 0 {
        bail!(Error::Malformed("--to must be at least 1".into()));
    }
    let h = hasher_for_width(width)?;
    let recent = compat::recent_proof_compat(&h, seed, trials, n_max)?;
    let old = compat::old_commitment_compat(&h, seed, trials, n_max)?;
    for (name, rep) in [("recent", &recent), ("old", &old)] {
        println!(
            "{name} trials {} checks {} failures {}",
            rep.trials,
            rep.checks,
            rep.failures.len()
        );
        for f in rep.failures.iter().take(10) {
            println!("  fail i {} n {} against {}", f.i, f.n, f.c);
        }
    }
    Ok(if recent.ok() && old.ok() { Verdict::Ok } else { Verdict::Rejected })
}
