//! Little-endian binary encoding used by the index and checkpoint files.

use crate::error::{Error, Result};

#[derive(Default)]
pub(crate) struct Writer {
    pub buf: Vec<u8>,
}

impl Writer {
    pub fn new(magic: &[u8]) -> Self {
        Writer { buf: magic.to_vec() }
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn str(&mut self, s: &str) {
        self.usize(s.len());
        self.buf.extend_from_slice(s.as_bytes());
    }

    pub fn f64s(&mut self, v: &[f64]) {
        self.usize(v.len());
        for &x in v {
            self.f64(x);
        }
    }
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    corrupt: fn(String) -> Error,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8], magic: &[u8], corrupt: fn(String) -> Error) -> Result<Self> {
        if buf.len() < magic.len() || &buf[..magic.len()] != magic {
            return Err(corrupt("bad magic bytes".into()));
        }
        Ok(Reader {
            buf,
            pos: magic.len(),
            corrupt,
        })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err((self.corrupt)(format!(
                "truncated at byte {} (wanted {n} more)",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| (self.corrupt)("length overflow".into()))
    }

    /// A length that must fit in the remaining bytes at `unit` bytes per element.
    pub fn len(&mut self, unit: usize) -> Result<usize> {
        let n = self.usize()?;
        if n.saturating_mul(unit) > self.buf.len() - self.pos {
            return Err((self.corrupt)(format!("length {n} exceeds remaining data")));
        }
        Ok(n)
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn str(&mut self) -> Result<String> {
        let n = self.len(1)?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| (self.corrupt)("invalid utf-8".into()))
    }

    pub fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.len(8)?;
        (0..n).map(|_| self.f64()).collect()
    }

    pub fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err((self.corrupt)(format!("{} trailing bytes", self.buf.len() - self.pos)));
        }
        Ok(())
    }
}
