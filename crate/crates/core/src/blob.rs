//! Little-endian binary blobs with an 8-byte magic and a `u32` version.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub(crate) struct BlobWriter {
    buf: Vec<u8>,
}

impl BlobWriter {
    pub fn new(magic: &[u8; 8], version: u32) -> Self {
        let mut buf = magic.to_vec();
        buf.extend_from_slice(&version.to_le_bytes());
        Self { buf }
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn f64(&mut self, v: f64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn str(&mut self, s: &str) -> &mut Self {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
        self
    }

    pub fn f64s(&mut self, v: &[f64]) -> &mut Self {
        self.buf.reserve(8 * v.len());
        for x in v {
            self.buf.extend_from_slice(&x.to_le_bytes());
        }
        self
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }

    pub fn write_to(self, path: &Path) -> Result<()> {
        fs::write(path, self.buf).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

pub(crate) struct BlobReader<'a> {
    what: &'static str,
    data: &'a [u8],
    pos: usize,
}

impl<'a> BlobReader<'a> {
    /// Checks magic and version and positions after the header.
    pub fn open(what: &'static str, data: &'a [u8], magic: &[u8; 8], version: u32) -> Result<Self> {
        let mut r = Self { what, data, pos: 0 };
        let m = r.take(8)?;
        if m != magic {
            return Err(r.bad("bad magic"));
        }
        let v = r.u32()?;
        if v != version {
            return Err(r.bad(format!("unsupported version {v}, expected {version}")));
        }
        Ok(r)
    }

    pub fn bad(&self, reason: impl Into<String>) -> Error {
        Error::Format {
            what: self.what,
            reason: reason.into(),
        }
    }

    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        if self.data.len() - self.pos < k {
            return Err(self.bad(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.data[self.pos..self.pos + k];
        self.pos += k;
        Ok(s)
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn str(&mut self) -> Result<String> {
        let k = self.u32()? as usize;
        let b = self.take(k)?;
        String::from_utf8(b.to_vec()).map_err(|_| self.bad("descriptor is not UTF-8"))
    }

    pub fn f64s(&mut self, k: usize) -> Result<Vec<f64>> {
        let bytes = k.checked_mul(8).ok_or_else(|| self.bad("length overflow"))?;
        let b = self.take(bytes)?;
        Ok(b.chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn finish(self) -> Result<()> {
        if self.pos != self.data.len() {
            return Err(self.bad(format!("{} trailing bytes", self.data.len() - self.pos)));
        }
        Ok(())
    }
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut w = BlobWriter::new(b"TESTBLOB", 3);
        w.u32(7).f64(-1.5).str("abc").f64s(&[1.0, 2.0]);
        let data = w.finish();
        let mut r = BlobReader::open("test", &data, b"TESTBLOB", 3).unwrap();
        assert_eq!(r.u32().unwrap(), 7);
        assert_eq!(r.f64().unwrap(), -1.5);
        assert_eq!(r.str().unwrap(), "abc");
        assert_eq!(r.f64s(2).unwrap(), vec![1.0, 2.0]);
        r.finish().unwrap();
        assert!(BlobReader::open("test", &data, b"TESTBLOB", 4).is_err());
        assert!(BlobReader::open("test", &data[..5], b"TESTBLOB", 3).is_err());
    }
}
