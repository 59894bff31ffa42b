//! The sorter: a bounded in-memory buffer that spills sorted runs to a
//! temporary file and merges them k ways.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use num::bigint::Sign;
use num::{BigInt, Zero};
use tempfile::NamedTempFile;

use crate::term::{cmp_identity, sort_merge, FuncApp, FunId, IdxId, Poly, Rat, SubTerm, SymId, Symmetry, Term};

/// Runs merged at once.
pub const MERGE_WIDTH: usize = 16;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SortStats {
    pub generated: u64,
    pub output: u64,
    pub bytes: u64,
    pub runs: u64,
}

fn put_int(out: &mut Vec<u8>, n: &BigInt) {
    let (sign, mag) = n.to_bytes_le();
    out.push(match sign {
        Sign::Minus => 2,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    });
    out.extend_from_slice(&(mag.len() as u32).to_le_bytes());
    out.extend_from_slice(&mag);
}

fn put_u32(out: &mut Vec<u8>, n: u32) {
    out.extend_from_slice(&n.to_le_bytes());
}

fn put_poly(out: &mut Vec<u8>, p: &Poly) {
    put_u32(out, p.len() as u32);
    for t in p.terms() {
        put_term(out, t);
    }
}

fn put_term(out: &mut Vec<u8>, t: &Term) {
    put_int(out, t.coeff.numer());
    put_int(out, t.coeff.denom());
    put_u32(out, t.factors.len() as u32);
    for f in &t.factors {
        match f {
            SubTerm::Sym(s, p) => {
                out.push(0);
                put_u32(out, s.0);
                out.extend_from_slice(&p.to_le_bytes());
            }
            SubTerm::Index(i) => {
                out.push(1);
                put_u32(out, i.0);
            }
            SubTerm::Func(fa) => {
                out.push(2);
                put_u32(out, fa.id.0);
                out.push(fa.commuting as u8);
                out.push(match fa.symmetry {
                    Symmetry::None => 0,
                    Symmetry::Symmetric => 1,
                    Symmetry::Antisymmetric => 2,
                    Symmetry::Cyclic => 3,
                    Symmetry::ReverseCyclic => 4,
                });
                put_u32(out, fa.args.len() as u32);
                for a in &fa.args {
                    put_poly(out, a);
                }
            }
        }
    }
}

/// Canonical binary encoding of a term.
pub fn encode(t: &Term) -> Vec<u8> {
    let mut out = Vec::new();
    put_term(&mut out, t);
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    at: usize,
}

fn corrupt() -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, "corrupt term encoding")
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> io::Result<&[u8]> {
        let end = self.at.checked_add(n).filter(|e| *e <= self.buf.len()).ok_or_else(corrupt)?;
        let s = &self.buf[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u8(&mut self) -> io::Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> io::Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn i64(&mut self) -> io::Result<i64> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn int(&mut self) -> io::Result<BigInt> {
        let sign = match self.u8()? {
            0 => Sign::NoSign,
            1 => Sign::Plus,
            2 => Sign::Minus,
            _ => return Err(corrupt()),
        };
        let n = self.u32()? as usize;
        Ok(BigInt::from_bytes_le(sign, self.take(n)?))
    }

    fn poly(&mut self) -> io::Result<Poly> {
        let n = self.u32()? as usize;
        let mut terms = Vec::with_capacity(n);
        for _ in 0..n {
            terms.push(self.term()?);
        }
        Ok(Poly::from_sorted(terms))
    }

    fn term(&mut self) -> io::Result<Term> {
        let num = self.int()?;
        let den = self.int()?;
        if den.is_zero() {
            return Err(corrupt());
        }
        let n = self.u32()? as usize;
        let mut factors = Vec::with_capacity(n);
        for _ in 0..n {
            factors.push(match self.u8()? {
                0 => SubTerm::Sym(SymId(self.u32()?), self.i64()?),
                1 => SubTerm::Index(IdxId(self.u32()?)),
                2 => {
                    let id = FunId(self.u32()?);
                    let commuting = self.u8()? != 0;
                    let symmetry = match self.u8()? {
                        0 => Symmetry::None,
                        1 => Symmetry::Symmetric,
                        2 => Symmetry::Antisymmetric,
                        3 => Symmetry::Cyclic,
                        4 => Symmetry::ReverseCyclic,
                        _ => return Err(corrupt()),
                    };
                    let nargs = self.u32()? as usize;
                    let mut args = Vec::with_capacity(nargs);
                    for _ in 0..nargs {
                        args.push(self.poly()?);
                    }
                    SubTerm::Func(FuncApp::with_props(id, args, commuting, symmetry))
                }
                _ => return Err(corrupt()),
            });
        }
        Ok(Term { coeff: Rat::new_raw(num, den), factors })
    }
}

pub fn decode(bytes: &[u8]) -> io::Result<Term> {
    let mut c = Cursor { buf: bytes, at: 0 };
    let t = c.term()?;
    if c.at != bytes.len() {
        return Err(corrupt());
    }
    Ok(t)
}

/// Sorted runs stored back to back in one temporary file.
struct SpillFile {
    file: NamedTempFile,
    /// (byte offset, term count) of each run.
    runs: Vec<(u64, u64)>,
    end: u64,
}

impl SpillFile {
    fn new(dir: Option<&Path>) -> io::Result<Self> {
        let file = match dir {
            Some(d) => NamedTempFile::new_in(d)?,
            None => NamedTempFile::new()?,
        };
        Ok(SpillFile { file, runs: Vec::new(), end: 0 })
    }

    fn writer(&mut self) -> io::Result<RunWriter<'_>> {
        let start = self.end;
        self.file.as_file_mut().seek(SeekFrom::Start(start))?;
        Ok(RunWriter { out: BufWriter::new(self.file.as_file_mut()), start, count: 0, written: 0 })
    }

    fn add_run(&mut self, start: u64, count: u64, written: u64) {
        self.runs.push((start, count));
        self.end = start + written;
    }

    fn reader(&self, run: usize) -> io::Result<RunReader> {
        let (offset, count) = self.runs[run];
        let mut f = File::open(self.file.path())?;
        f.seek(SeekFrom::Start(offset))?;
        Ok(RunReader { input: BufReader::new(f), left: count })
    }
}

struct RunWriter<'a> {
    out: BufWriter<&'a mut File>,
    start: u64,
    count: u64,
    written: u64,
}

impl RunWriter<'_> {
    fn push(&mut self, t: &Term) -> io::Result<()> {
        let bytes = encode(t);
        self.out.write_all(&(bytes.len() as u32).to_le_bytes())?;
        self.out.write_all(&bytes)?;
        self.count += 1;
        self.written += 4 + bytes.len() as u64;
        Ok(())
    }

    fn close(mut self) -> io::Result<(u64, u64, u64)> {
        self.out.flush()?;
        Ok((self.start, self.count, self.written))
    }
}

struct RunReader {
    input: BufReader<File>,
    left: u64,
}

impl RunReader {
    fn next_term(&mut self) -> io::Result<Option<Term>> {
        if self.left == 0 {
            return Ok(None);
        }
        self.left -= 1;
        let mut len = [0u8; 4];
        self.input.read_exact(&mut len)?;
        let mut buf = vec![0u8; u32::from_le_bytes(len) as usize];
        self.input.read_exact(&mut buf)?;
        decode(&buf).map(Some)
    }
}

struct HeapItem {
    term: Term,
    source: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_identity(&other.term, &self.term).then_with(|| other.source.cmp(&self.source))
    }
}

/// Merges sorted sources, adding coefficients of equal terms.
fn merge_into(mut sources: Vec<RunReader>, mut emit: impl FnMut(Term) -> io::Result<()>) -> io::Result<()> {
    let mut heap = BinaryHeap::new();
    for (i, s) in sources.iter_mut().enumerate() {
        if let Some(term) = s.next_term()? {
            heap.push(HeapItem { term, source: i });
        }
    }
    let mut pending: Option<Term> = None;
    while let Some(HeapItem { term, source }) = heap.pop() {
        if let Some(next) = sources[source].next_term()? {
            heap.push(HeapItem { term: next, source });
        }
        match &mut pending {
            Some(p) if cmp_identity(p, &term) == Ordering::Equal => p.coeff += term.coeff,
            _ => {
                if let Some(p) = pending.take() {
                    if !p.coeff.is_zero() {
                        emit(p)?;
                    }
                }
                pending = Some(term);
            }
        }
    }
    if let Some(p) = pending {
        if !p.coeff.is_zero() {
            emit(p)?;
        }
    }
    Ok(())
}

pub struct Sorter {
    buffer: Vec<Term>,
    capacity: usize,
    spill_dir: Option<PathBuf>,
    spill: Option<SpillFile>,
    stats: SortStats,
}

impl Sorter {
    /// A sorter holding at most `capacity` terms in memory (at least one).
    pub fn new(capacity: usize, spill_dir: Option<PathBuf>) -> Self {
        Sorter { buffer: Vec::new(), capacity: capacity.max(1), spill_dir, spill: None, stats: SortStats::default() }
    }

    pub fn unbounded() -> Self {
        Sorter::new(usize::MAX, None)
    }

    pub fn add(&mut self, t: Term) -> io::Result<()> {
        self.stats.generated += 1;
        self.buffer.push(t);
        if self.buffer.len() >= self.capacity {
            self.spill_buffer()?;
        }
        Ok(())
    }

    pub fn add_all(&mut self, terms: impl IntoIterator<Item = Term>) -> io::Result<()> {
        for t in terms {
            self.add(t)?;
        }
        Ok(())
    }

    fn spill_buffer(&mut self) -> io::Result<()> {
        let run = sort_merge(std::mem::take(&mut self.buffer));
        if self.spill.is_none() {
            self.spill = Some(SpillFile::new(self.spill_dir.as_deref())?);
        }
        let spill = self.spill.as_mut().expect("created above");
        let mut w = spill.writer()?;
        for t in &run {
            w.push(t)?;
        }
        let (start, count, written) = w.close()?;
        spill.add_run(start, count, written);
        self.stats.runs += 1;
        Ok(())
    }

    /// Collapses runs MERGE_WIDTH at a time until one merge suffices.
    fn reduce_runs(&mut self) -> io::Result<()> {
        while self.spill.as_ref().is_some_and(|s| s.runs.len() > MERGE_WIDTH) {
            let old = self.spill.take().expect("checked");
            let mut next = SpillFile::new(self.spill_dir.as_deref())?;
            for group in (0..old.runs.len()).collect::<Vec<_>>().chunks(MERGE_WIDTH) {
                let readers = group.iter().map(|&r| old.reader(r)).collect::<io::Result<Vec<_>>>()?;
                let mut w = next.writer()?;
                merge_into(readers, |t| w.push(&t))?;
                let (start, count, written) = w.close()?;
                next.add_run(start, count, written);
            }
            self.spill = Some(next);
        }
        Ok(())
    }

    /// Sorted, merged, zero-free output and the statistics of this sort.
    pub fn finish(mut self) -> io::Result<(Poly, SortStats)> {
        let terms = if self.spill.is_none() {
            sort_merge(std::mem::take(&mut self.buffer))
        } else {
            if !self.buffer.is_empty() {
                self.spill_buffer()?;
            }
            self.reduce_runs()?;
            let spill = self.spill.as_ref().expect("spilled");
            let readers = (0..spill.runs.len()).map(|r| spill.reader(r)).collect::<io::Result<Vec<_>>>()?;
            let mut out = Vec::new();
            merge_into(readers, |t| {
                out.push(t);
                Ok(())
            })?;
            out
        };
        self.stats.output = terms.len() as u64;
        self.stats.bytes = terms.iter().map(|t| encode(t).len() as u64).sum();
        Ok((Poly::from_sorted(terms), self.stats))
    }
}
