//! Binary node-state files. Layout in `docs/FORMAT.md`.

use std::path::Path;

use super::{Code, MbcrCode, MscrCode, RlncState, Scheme};
use crate::error::{Error, Result};
use crate::flowgraph::profile::{profile, ProfileKind};
use crate::gf::{Elem, Field, Matrix};
use crate::params::SystemParams;

pub const MAGIC: &[u8; 4] = b"CRGC";
pub const VERSION: u16 = 1;

/// A whole cluster's symbols for one file, plus the code that produced them.
#[derive(Clone, Debug)]
pub struct NodeStateFile {
    pub code: Code,
    /// Length of the original payload (bytes for encoded files, symbols for
    /// simulator state); the last chunk is zero-padded.
    pub payload_len: u64,
    pub present: Vec<bool>,
    /// `chunks[c][i]` holds node `i`'s `α` symbols for chunk `c`.
    pub chunks: Vec<Vec<Vec<Elem>>>,
}

impl NodeStateFile {
    /// Splits `data` into chunks of `B` byte-valued symbols and encodes each.
    pub fn encode(code: Code, data: &[u8]) -> Result<Self> {
        if code.field().order() < 256 {
            return Err(Error::UnsupportedField(format!(
                "file encoding maps bytes to symbols and needs q >= 256, have {}",
                code.field()
            )));
        }
        let b = code.file_size();
        let chunks = data
            .chunks(b)
            .map(|c| {
                let mut sym: Vec<Elem> = c.iter().map(|&x| x as Elem).collect();
                sym.resize(b, 0);
                code.encode(&sym)
            })
            .collect::<Result<Vec<_>>>()?;
        let n = code.params().n;
        Ok(NodeStateFile { code, payload_len: data.len() as u64, present: vec![true; n], chunks })
    }

    /// Reassembles the payload from nodes `ids` (exactly `k`, all present).
    pub fn decode(&self, ids: &[usize]) -> Result<Vec<u8>> {
        if let Some(&i) = ids.iter().find(|&&i| i >= self.present.len() || !self.present[i]) {
            return Err(Error::Precondition(format!("node {i} is not available")));
        }
        let mut out = Vec::with_capacity(self.chunks.len() * self.code.file_size());
        for nodes in &self.chunks {
            let sel: Vec<(usize, &[Elem])> = ids.iter().map(|&i| (i, nodes[i].as_slice())).collect();
            for s in self.code.decode(&sel)? {
                let byte = u8::try_from(s).map_err(|_| Error::Format(format!("decoded symbol {s} is not a byte")))?;
                out.push(byte);
            }
        }
        if (out.len() as u64) < self.payload_len {
            return Err(Error::Format("payload shorter than recorded length".into()));
        }
        out.truncate(self.payload_len as usize);
        Ok(out)
    }

    /// Marks a node lost and zeroes its symbols.
    pub fn erase(&mut self, i: usize) {
        self.present[i] = false;
        for nodes in &mut self.chunks {
            nodes[i].iter_mut().for_each(|s| *s = 0);
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let code = &self.code;
        let p = code.params();
        let mut w = Vec::new();
        w.extend_from_slice(MAGIC);
        put16(&mut w, VERSION);
        w.push(code.scheme().tag());
        w.push(0);
        put32(&mut w, code.field().order() as u32);
        put32(&mut w, code.field().poly());
        for v in [p.n, p.d, p.k, p.r] {
            put16(&mut w, v as u16);
        }
        put32(&mut w, code.alpha() as u32);
        put32(&mut w, code.file_size() as u32);
        put32(&mut w, self.chunks.len() as u32);
        put64(&mut w, self.payload_len);
        let (ptype, pidx, stage) = match code {
            Code::Rlnc(s) => match s.profile.kind {
                ProfileKind::FirstType(z) => (1u8, z as u32, s.stage as u32),
                ProfileKind::SecondType(l) => (2u8, l as u32, s.stage as u32),
            },
            _ => (0, 0, 0),
        };
        w.push(ptype);
        w.extend_from_slice(&[0; 3]);
        put32(&mut w, pidx);
        put32(&mut w, stage);

        let mats: Vec<Matrix> = match code {
            Code::Mscr(c) => c.generators.clone(),
            Code::Mbcr(c) => c.h.clone(),
            Code::Rlnc(s) => s.matrices.clone(),
        };
        put32(&mut w, mats.len() as u32);
        for m in &mats {
            put16(&mut w, m.rows() as u16);
            put16(&mut w, m.cols() as u16);
            for i in 0..m.rows() {
                for &x in m.row(i) {
                    put32(&mut w, x);
                }
            }
        }
        w.extend(self.present.iter().map(|&b| b as u8));
        for nodes in &self.chunks {
            for node in nodes {
                for &s in node {
                    put32(&mut w, s);
                }
            }
        }
        w
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("bad magic (not a node-state file)".into()));
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let scheme = Scheme::from_tag(r.u8()?)?;
        r.u8()?;
        let q = r.u32()? as u64;
        let poly = r.u32()?;
        let field = Field::from_parts(q, poly)?;
        let (n, d, k, rr) = (r.u16()? as usize, r.u16()? as usize, r.u16()? as usize, r.u16()? as usize);
        let params = SystemParams::new(n, d, k, rr)?;
        let alpha = r.u32()? as usize;
        let b = r.u32()? as usize;
        let chunk_count = r.u32()? as usize;
        let payload_len = r.u64()?;
        let ptype = r.u8()?;
        r.take(3)?;
        let pidx = r.u32()? as usize;
        let stage = r.u32()? as usize;

        let count = r.u32()? as usize;
        if count > 4096 {
            return Err(Error::Format(format!("implausible matrix count {count}")));
        }
        let mut mats = Vec::with_capacity(count);
        for _ in 0..count {
            let (rows, cols) = (r.u16()? as usize, r.u16()? as usize);
            let data: Vec<Vec<Elem>> = (0..rows).map(|_| (0..cols).map(|_| r.u32()).collect()).collect::<Result<_>>()?;
            mats.push(Matrix::from_rows(&field, &data).map_err(|e| Error::Format(e.to_string()))?);
        }
        let code = match scheme {
            Scheme::Mscr => Code::Mscr(MscrCode::new(params, field, mats)?),
            Scheme::Mbcr => Code::Mbcr(MbcrCode::new(params, field, mats)?),
            Scheme::Rlnc => {
                let kind = match ptype {
                    1 => ProfileKind::FirstType(pidx),
                    2 => ProfileKind::SecondType(pidx),
                    t => return Err(Error::Format(format!("bad profile type {t} for an RLNC file"))),
                };
                let prof = profile(kind, &params)?;
                Code::Rlnc(RlncState::from_matrices(params, field, prof, mats, stage)?)
            }
        };
        if code.alpha() != alpha || code.file_size() != b {
            return Err(Error::Format(format!(
                "header says alpha = {alpha}, B = {b}; code has {} and {}",
                code.alpha(),
                code.file_size()
            )));
        }
        let present: Vec<bool> = r
            .take(n)?
            .iter()
            .map(|&x| match x {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(Error::Format(format!("bad presence byte {x}"))),
            })
            .collect::<Result<_>>()?;
        let need = chunk_count.checked_mul(n * alpha * 4).ok_or_else(|| Error::Format("size overflow".into()))?;
        if r.remaining() != need {
            return Err(Error::Format(format!("expected {need} symbol bytes, found {}", r.remaining())));
        }
        let mut chunks = Vec::with_capacity(chunk_count);
        for _ in 0..chunk_count {
            let nodes = (0..n).map(|_| (0..alpha).map(|_| r.u32()).collect::<Result<Vec<_>>>()).collect::<Result<_>>()?;
            chunks.push(nodes);
        }
        if chunks.iter().flatten().flatten().any(|&s| !code.field().contains(s)) {
            return Err(Error::Format("symbol outside the field".into()));
        }
        Ok(NodeStateFile { code, payload_len, present, chunks })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

fn put16(w: &mut Vec<u8>, v: u16) {
    w.extend_from_slice(&v.to_le_bytes());
}

fn put32(w: &mut Vec<u8>, v: u32) {
    w.extend_from_slice(&v.to_le_bytes());
}

fn put64(w: &mut Vec<u8>, v: u64) {
    w.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| Error::Format("truncated file".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
