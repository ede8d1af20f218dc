//! Little-endian binary read/write helpers with byte-offset error reporting.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub(crate) struct Writer<W: Write> {
    inner: W,
}

impl<W: Write> Writer<W> {
    pub fn new(inner: W) -> Self {
        Self { inner }
    }

    pub fn bytes(&mut self, b: &[u8]) -> Result<()> {
        self.inner.write_all(b)?;
        Ok(())
    }
    pub fn u8(&mut self, v: u8) -> Result<()> {
        self.bytes(&[v])
    }
    pub fn u32(&mut self, v: u32) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    pub fn u64(&mut self, v: u64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    pub fn i64(&mut self, v: i64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    pub fn f32(&mut self, v: f32) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    pub fn f64(&mut self, v: f64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    pub fn str(&mut self, s: &str) -> Result<()> {
        self.u32(s.len() as u32)?;
        self.bytes(s.as_bytes())
    }
    pub fn into_inner(self) -> W {
        self.inner
    }
}

pub(crate) struct Reader<R: Read> {
    inner: R,
    offset: u64,
}

impl<R: Read> Reader<R> {
    pub fn new(inner: R) -> Self {
        Self { inner, offset: 0 }
    }

    pub fn offset(&self) -> u64 {
        self.offset
    }

    pub fn malformed<T>(&self, reason: impl Into<String>) -> Result<T> {
        Err(Error::Malformed {
            offset: self.offset,
            reason: reason.into(),
        })
    }

    pub fn exact<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        match self.inner.read_exact(&mut buf) {
            Ok(()) => {
                self.offset += N as u64;
                Ok(buf)
            }
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
                self.malformed("unexpected end of file")
            }
            Err(e) => Err(e.into()),
        }
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.exact::<1>()?[0])
    }
    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.exact()?))
    }
    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.exact()?))
    }
    pub fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.exact()?))
    }
    pub fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.exact()?))
    }
    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.exact()?))
    }

    /// Reads a length that must fit comfortably in memory.
    pub fn len(&mut self, limit: u64, what: &str) -> Result<usize> {
        let at = self.offset;
        let n = self.u64()?;
        if n > limit {
            return Err(Error::Malformed {
                offset: at,
                reason: format!("{what} count {n} exceeds limit {limit}"),
            });
        }
        Ok(n as usize)
    }

    pub fn str(&mut self) -> Result<String> {
        let at = self.offset;
        let n = self.u32()? as usize;
        if n > (1 << 20) {
            return Err(Error::Malformed {
                offset: at,
                reason: format!("string length {n} too large"),
            });
        }
        let mut buf = vec![0u8; n];
        if let Err(e) = self.inner.read_exact(&mut buf) {
            return if e.kind() == std::io::ErrorKind::UnexpectedEof {
                self.malformed("unexpected end of file in string")
            } else {
                Err(e.into())
            };
        }
        self.offset += n as u64;
        String::from_utf8(buf).map_err(|_| Error::Malformed {
            offset: at,
            reason: "string is not valid UTF-8".into(),
        })
    }

    pub fn magic(&mut self, want: &[u8; 8]) -> Result<()> {
        let got = self.exact::<8>()?;
        if &got != want {
            return Err(Error::Malformed {
                offset: 0,
                reason: format!(
                    "bad magic {:?}, expected {:?}",
                    String::from_utf8_lossy(&got),
                    String::from_utf8_lossy(want)
                ),
            });
        }
        Ok(())
    }
}
