//! Binary parameter files.
//!
//! Little-endian throughout:
//!
//! ```text
//! magic      8 bytes  "UNIBEAM\0"
//! version    u32      1
//! m, k       u32, u32
//! head       u8       0 = DBL, 1 = FL, 2 = SFL
//! power_in   u8       1 if the dB budget is an input feature
//! layers     u32      number of hidden layers L
//! widths     L x u32
//! fp_len     u32      fingerprint length, then fp_len UTF-8 bytes
//! blobs      f64...   per hidden layer: W, b, gamma, beta, running mean,
//!                     running variance; then output W, output b
//! ```
//!
//! Shapes follow from the header, so blobs carry no length prefixes. The
//! file must end exactly after the last blob.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{HeadKind, HiddenLayer, NetworkParams};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"UNIBEAM\0";
const VERSION: u32 = 1;

impl NetworkParams {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.m as u32).to_le_bytes());
        out.extend_from_slice(&(self.k as u32).to_le_bytes());
        out.push(self.head.code());
        out.push(u8::from(self.power_input));
        out.extend_from_slice(&(self.hidden.len() as u32).to_le_bytes());
        for l in &self.hidden {
            out.extend_from_slice(&(l.width() as u32).to_le_bytes());
        }
        out.extend_from_slice(&(self.fingerprint.len() as u32).to_le_bytes());
        out.extend_from_slice(self.fingerprint.as_bytes());
        let mut put = |xs: &mut dyn Iterator<Item = &f64>| {
            for x in xs {
                out.extend_from_slice(&x.to_le_bytes());
            }
        };
        for l in &self.hidden {
            put(&mut l.weight.iter());
            put(&mut l.bias.iter());
            put(&mut l.gamma.iter());
            put(&mut l.beta.iter());
            put(&mut l.running_mean.iter());
            put(&mut l.running_var.iter());
        }
        put(&mut self.out_weight.iter());
        put(&mut self.out_bias.iter());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(r.err(0, "bad magic; not a parameter file"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(r.err(8, &format!("unsupported version {version}")));
        }
        let m = r.u32()? as usize;
        let k = r.u32()? as usize;
        let head_at = r.pos;
        let head = HeadKind::from_code(r.u8()?).ok_or_else(|| r.err(head_at, "unknown head kind"))?;
        let power_input = r.u8()? != 0;
        let n_layers = r.u32()? as usize;
        if m == 0 || k == 0 || n_layers == 0 {
            return Err(r.err(12, "dimensions must be positive"));
        }
        let widths = (0..n_layers)
            .map(|_| r.u32().map(|w| w as usize))
            .collect::<Result<Vec<_>>>()?;
        let fp_len = r.u32()? as usize;
        let fp_at = r.pos;
        let fingerprint =
            String::from_utf8(r.take(fp_len)?.to_vec()).map_err(|_| r.err(fp_at, "fingerprint is not UTF-8"))?;

        let mut fan_in = 2 * m * k + usize::from(power_input);
        let mut hidden = Vec::with_capacity(n_layers);
        for &w in &widths {
            hidden.push(HiddenLayer {
                weight: r.matrix(w, fan_in)?,
                bias: r.matrix(1, w)?,
                gamma: r.matrix(1, w)?,
                beta: r.matrix(1, w)?,
                running_mean: r.vector(w)?,
                running_var: r.vector(w)?,
            });
            fan_in = w;
        }
        let out = head.output_dim(m, k);
        let out_weight = r.matrix(out, fan_in)?;
        let out_bias = r.matrix(1, out)?;
        if r.pos != bytes.len() {
            return Err(r.err(r.pos, "trailing bytes after the last tensor"));
        }
        Ok(NetworkParams {
            m,
            k,
            head,
            power_input,
            hidden,
            out_weight,
            out_bias,
            fingerprint,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    /// Loads and checks the head kind.
    pub fn load_expecting(path: impl AsRef<Path>, head: HeadKind) -> Result<Self> {
        let p = Self::load(path)?;
        if p.head != head {
            return Err(Error::HeadMismatch {
                expected: head,
                found: p.head,
            });
        }
        Ok(p)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, offset: usize, msg: &str) -> Error {
        Error::ParamsFormat {
            offset,
            msg: msg.to_string(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(self.err(self.pos, &format!("truncated: needed {n} more bytes"))),
        }
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn values(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| self.err(self.pos, "tensor too large"))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Array2<f64>> {
        let v = self.values(rows * cols)?;
        Ok(Array2::from_shape_vec((rows, cols), v).expect("shape matches length"))
    }

    fn vector(&mut self, n: usize) -> Result<Array1<f64>> {
        Ok(Array1::from_vec(self.values(n)?))
    }
}
