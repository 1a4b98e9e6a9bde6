//! `TKPT` checkpoints.
//!
//! ```text
//! magic "TKPT", version u16 LE
//! repeated until end of file:
//!   name_len u16, name bytes (UTF-8), rank u8, dims u32[rank], f64[prod(dims)]
//! ```
//! Optimizer state is stored as ordinary records named `adam.m.<param>`,
//! `adam.v.<param>` and a one-element `adam.step`.

use std::io::{Read, Write};
use std::path::Path;

use super::{Adam, ParamStore, Tensor};
use crate::{Error, Real, Result};

pub const TKPT_MAGIC: &[u8; 4] = b"TKPT";
pub const TKPT_VERSION: u16 = 1;

/// Ordered named tensors read from or written to a checkpoint.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    pub records: Vec<(String, Tensor<f64>)>,
}

impl Checkpoint {
    pub fn from_params<T: Real>(store: &ParamStore<T>, adam: Option<&Adam<T>>) -> Self {
        let mut records: Vec<(String, Tensor<f64>)> = store
            .ids()
            .map(|id| (store.name(id).to_string(), store.get(id).cast()))
            .collect();
        if let Some(a) = adam {
            for id in store.ids() {
                records.push((format!("adam.m.{}", store.name(id)), a.m[id.0].cast()));
            }
            for id in store.ids() {
                records.push((format!("adam.v.{}", store.name(id)), a.v[id.0].cast()));
            }
            records.push((
                "adam.step".into(),
                Tensor::new(vec![1], vec![a.step as f64]).expect("1 value"),
            ));
        }
        Self { records }
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<f64>> {
        self.records.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    fn require(&self, name: &str, shape: &[usize]) -> Result<&Tensor<f64>> {
        let t = self
            .get(name)
            .ok_or_else(|| Error::Format(format!("checkpoint is missing tensor '{name}'")))?;
        if t.shape() != shape {
            return Err(Error::Format(format!(
                "tensor '{name}' has shape {:?}, expected {shape:?}",
                t.shape()
            )));
        }
        Ok(t)
    }

    /// Overwrites every parameter of `store` from the matching record.
    pub fn load_params<T: Real>(&self, store: &mut ParamStore<T>) -> Result<()> {
        for id in store.ids().collect::<Vec<_>>() {
            let t = self.require(store.name(id), store.get(id).shape())?.cast();
            *store.get_mut(id) = t;
        }
        Ok(())
    }

    /// Restores optimizer moments and step counter for `store`.
    pub fn load_adam<T: Real>(&self, store: &ParamStore<T>, adam: &mut Adam<T>) -> Result<()> {
        for id in store.ids() {
            let shape = store.get(id).shape();
            adam.m[id.0] = self.require(&format!("adam.m.{}", store.name(id)), shape)?.cast();
            adam.v[id.0] = self.require(&format!("adam.v.{}", store.name(id)), shape)?.cast();
        }
        adam.step = self.require("adam.step", &[1])?.item() as u64;
        Ok(())
    }

    pub fn encode<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(TKPT_MAGIC)?;
        w.write_all(&TKPT_VERSION.to_le_bytes())?;
        for (name, t) in &self.records {
            let len = u16::try_from(name.len()).map_err(|_| Error::Format(format!("name too long: {name}")))?;
            let rank = u8::try_from(t.shape().len()).map_err(|_| Error::Format("rank above 255".into()))?;
            w.write_all(&len.to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            w.write_all(&[rank])?;
            for &d in t.shape() {
                let d = u32::try_from(d).map_err(|_| Error::Format("dimension above u32".into()))?;
                w.write_all(&d.to_le_bytes())?;
            }
            let mut buf = Vec::with_capacity(t.len() * 8);
            for v in t.data() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn decode<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let mut cur = Cursor { bytes: &bytes, pos: 0 };
        if cur.take(4)? != TKPT_MAGIC {
            return Err(Error::Format("bad checkpoint magic".into()));
        }
        let version = u16::from_le_bytes(cur.take(2)?.try_into().expect("2 bytes"));
        if version != TKPT_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let mut records = Vec::new();
        while cur.pos < bytes.len() {
            let len = u16::from_le_bytes(cur.take(2)?.try_into().expect("2 bytes")) as usize;
            let name = String::from_utf8(cur.take(len)?.to_vec())
                .map_err(|_| Error::Format("tensor name is not UTF-8".into()))?;
            let rank = cur.take(1)?[0] as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(u32::from_le_bytes(cur.take(4)?.try_into().expect("4 bytes")) as usize);
            }
            let n: usize = shape.iter().product();
            let raw = cur.take(
                n.checked_mul(8)
                    .ok_or_else(|| Error::Format("tensor too large".into()))?,
            )?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            records.push((name, Tensor::new(shape, data)?));
        }
        Ok(Self { records })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format(format!("truncated checkpoint at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
}

pub fn write_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    ckpt.encode(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::decode(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_optimizer_state() {
        let mut s = ParamStore::<f64>::new();
        s.add("w", Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.5]).unwrap());
        s.add("b", Tensor::new(vec![2], vec![-0.25, 0.0]).unwrap());
        let mut adam = Adam::new(&s, 1e-3);
        let g = vec![
            Some(Tensor::new(vec![2, 2], vec![0.1, 0.2, 0.3, 0.4]).unwrap()),
            Some(Tensor::new(vec![2], vec![1.0, -1.0]).unwrap()),
        ];
        adam.step(&mut s, &g).unwrap();

        let mut buf = Vec::new();
        Checkpoint::from_params(&s, Some(&adam)).encode(&mut buf).unwrap();
        let back = Checkpoint::decode(buf.as_slice()).unwrap();

        let mut s2 = ParamStore::<f64>::new();
        s2.add("w", Tensor::zeros(vec![2, 2]));
        s2.add("b", Tensor::zeros(vec![2]));
        let mut adam2 = Adam::new(&s2, 1e-3);
        back.load_params(&mut s2).unwrap();
        back.load_adam(&s2, &mut adam2).unwrap();
        assert_eq!(s2.tensors(), s.tensors());
        assert_eq!(adam2.m, adam.m);
        assert_eq!(adam2.v, adam.v);
        assert_eq!(adam2.step, 1);
    }

    #[test]
    fn truncation_and_missing_tensors() {
        let mut s = ParamStore::<f64>::new();
        s.add("w", Tensor::zeros(vec![3]));
        let mut buf = Vec::new();
        Checkpoint::from_params(&s, None).encode(&mut buf).unwrap();
        assert!(Checkpoint::decode(&buf[..buf.len() - 1]).is_err());
        let ck = Checkpoint::decode(buf.as_slice()).unwrap();
        let mut other = ParamStore::<f64>::new();
        other.add("u", Tensor::zeros(vec![3]));
        assert!(matches!(ck.load_params(&mut other), Err(Error::Format(_))));
    }
}
