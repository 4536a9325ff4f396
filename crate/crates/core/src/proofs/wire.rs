//! Binary proof encoding.
//!
//! Membership: kind octet, LEB128 `i`, `n`, element count, then per element a
//! flag octet (bit 0 right-handed, bit 1 default) followed by the digest
//! unless default, then the extension as a LEB128 length and its octets
//! (length 0 when absent).
//!
//! Increment: kind octet with bit 7 set, LEB128 `m`, `n`, entry count, then
//! per entry a coordinate tag (0 mountain, 1 range prefix, 2 belt), its
//! LEB128 fields and the digest.

use crate::bagging::StructureKind;
use crate::digest::Digest;
use crate::error::{Error, Result};

use super::increment::{Coord, IncrementEntry, IncrementProof};
use super::membership::{MembershipProof, ProofElement};
use super::Side;

const FLAG_RIGHT: u8 = 1;
const FLAG_DEFAULT: u8 = 2;
const INCREMENT_BIT: u8 = 0x80;

fn put(out: &mut Vec<u8>, v: u64) {
    leb128::write::unsigned(out, v).expect("vec write");
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl Reader<'_> {
    fn octet(&mut self) -> Result<u8> {
        let (&b, rest) = self
            .buf
            .split_first()
            .ok_or_else(|| Error::Malformed("truncated input".into()))?;
        self.buf = rest;
        Ok(b)
    }

    fn varint(&mut self) -> Result<u64> {
        leb128::read::unsigned(&mut self.buf).map_err(|e| Error::Malformed(format!("bad varint: {e}")))
    }

    fn bytes(&mut self, len: usize) -> Result<&[u8]> {
        if self.buf.len() < len {
            return Err(Error::Malformed("truncated input".into()));
        }
        let (head, rest) = self.buf.split_at(len);
        self.buf = rest;
        Ok(head)
    }

    fn digest(&mut self, width: usize) -> Result<Digest> {
        Digest::from_slice(self.bytes(width)?)
    }

    /// A count that cannot exceed what the remaining input could hold.
    fn count(&mut self, min_item: usize) -> Result<usize> {
        let c = self.varint()?;
        if c > (self.buf.len() / min_item.max(1)) as u64 {
            return Err(Error::Malformed("count exceeds input length".into()));
        }
        Ok(c as usize)
    }

    fn finish(self) -> Result<()> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(Error::Malformed("trailing octets".into()))
        }
    }
}

fn kind_from(tag: u8) -> Result<StructureKind> {
    StructureKind::from_tag(tag).ok_or_else(|| Error::Malformed(format!("unknown kind tag {tag}")))
}

pub fn encode_membership(p: &MembershipProof) -> Vec<u8> {
    let mut out = vec![p.kind.tag()];
    put(&mut out, p.index);
    put(&mut out, p.n);
    put(&mut out, p.elements.len() as u64);
    for e in &p.elements {
        let mut flag = 0;
        if e.side == Side::Right {
            flag |= FLAG_RIGHT;
        }
        if e.is_default {
            flag |= FLAG_DEFAULT;
        }
        out.push(flag);
        if !e.is_default {
            out.extend_from_slice(e.digest.as_bytes());
        }
    }
    match &p.extension {
        Some(d) => {
            put(&mut out, d.width() as u64);
            out.extend_from_slice(d.as_bytes());
        }
        None => put(&mut out, 0),
    }
    out
}

pub fn decode_membership(buf: &[u8], width: usize) -> Result<MembershipProof> {
    let mut r = Reader { buf };
    let tag = r.octet()?;
    if tag & INCREMENT_BIT != 0 {
        return Err(Error::Malformed("not a membership proof".into()));
    }
    let kind = kind_from(tag)?;
    let index = r.varint()?;
    let n = r.varint()?;
    let count = r.count(1)?;
    let mut elements = Vec::with_capacity(count);
    for _ in 0..count {
        let flag = r.octet()?;
        if flag & !(FLAG_RIGHT | FLAG_DEFAULT) != 0 {
            return Err(Error::Malformed(format!("bad element flag {flag:#04x}")));
        }
        let side = if flag & FLAG_RIGHT != 0 { Side::Right } else { Side::Left };
        let is_default = flag & FLAG_DEFAULT != 0;
        let digest = if is_default {
            Digest::default_of(width)
        } else {
            r.digest(width)?
        };
        elements.push(ProofElement {
            digest,
            side,
            is_default,
        });
    }
    let ext_len = r.varint()?;
    let extension = match ext_len {
        0 => None,
        l if l == width as u64 => Some(r.digest(width)?),
        l => return Err(Error::Malformed(format!("extension length {l} does not match width {width}"))),
    };
    r.finish()?;
    Ok(MembershipProof {
        kind,
        index,
        n,
        elements,
        extension,
    })
}

pub fn encode_increment(p: &IncrementProof) -> Vec<u8> {
    let mut out = vec![p.kind.tag() | INCREMENT_BIT];
    put(&mut out, p.m);
    put(&mut out, p.n);
    put(&mut out, p.entries.len() as u64);
    for e in &p.entries {
        match e.coord {
            Coord::Mountain(idx) => {
                out.push(0);
                put(&mut out, idx);
            }
            Coord::Range { start, count } => {
                out.push(1);
                put(&mut out, start);
                put(&mut out, count as u64);
            }
            Coord::Belt(count) => {
                out.push(2);
                put(&mut out, count as u64);
            }
        }
        out.extend_from_slice(e.digest.as_bytes());
    }
    out
}

pub fn decode_increment(buf: &[u8], width: usize) -> Result<IncrementProof> {
    let mut r = Reader { buf };
    let tag = r.octet()?;
    if tag & INCREMENT_BIT == 0 {
        return Err(Error::Malformed("not an increment proof".into()));
    }
    let kind = kind_from(tag & !INCREMENT_BIT)?;
    let m = r.varint()?;
    let n = r.varint()?;
    let count = r.count(width + 2)?;
    let small = |v: u64| -> Result<u32> {
        u32::try_from(v).map_err(|_| Error::Malformed("coordinate out of range".into()))
    };
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let coord = match r.octet()? {
            0 => Coord::Mountain(r.varint()?),
            1 => {
                let start = r.varint()?;
                Coord::Range {
                    start,
                    count: small(r.varint()?)?,
                }
            }
            2 => Coord::Belt(small(r.varint()?)?),
            t => return Err(Error::Malformed(format!("unknown coordinate tag {t}"))),
        };
        entries.push(IncrementEntry {
            coord,
            digest: r.digest(width)?,
        });
    }
    r.finish()?;
    Ok(IncrementProof { kind, m, n, entries })
}
