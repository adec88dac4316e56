//! Binary persistence for vector stores.
//!
//! Layout (all integers little-endian):
//! magic `"FUVS"`, format version `u32`, kind `u8` (0 knowledge,
//! 1 process-data), dimension `u32`, item count `u64`, encoder-stats block
//! (`u8` presence flag; if 1: `u32` variable count, then per variable
//! `u32` name length + UTF-8 name + `f64` mean + `f64` std), then per item:
//! `u64` id, `dimension` little-endian `f64` components, `u32` payload
//! length + payload as UTF-8 JSON.
//!
//! `load(save(s))` reproduces the store bit-for-bit; re-saving a loaded
//! store yields byte-identical files.

use std::io::{Read, Write};
use std::path::Path;

use super::{
    EmbeddingVector, EncoderStats, Payload, StoreError, StoreItem, StoreKind, VariableStat,
    VectorStore,
};

const MAGIC: &[u8; 4] = b"FUVS";
const FORMAT_VERSION: u32 = 1;

/// Serializes the store to `path`.
pub fn save_store(store: &VectorStore, path: impl AsRef<Path>) -> Result<(), StoreError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    let kind_byte: u8 = match store.kind {
        StoreKind::Knowledge => 0,
        StoreKind::ProcessData => 1,
    };
    w.write_all(&[kind_byte])?;
    w.write_all(&(store.dimension as u32).to_le_bytes())?;
    w.write_all(&(store.items.len() as u64).to_le_bytes())?;
    match &store.encoder_stats {
        None => w.write_all(&[0u8])?,
        Some(stats) => {
            w.write_all(&[1u8])?;
            w.write_all(&(stats.variables.len() as u32).to_le_bytes())?;
            for var in &stats.variables {
                let name = var.name.as_bytes();
                w.write_all(&(name.len() as u32).to_le_bytes())?;
                w.write_all(name)?;
                w.write_all(&var.mean.to_le_bytes())?;
                w.write_all(&var.std.to_le_bytes())?;
            }
        }
    }
    for item in &store.items {
        w.write_all(&item.id.to_le_bytes())?;
        for c in &item.vector.0 {
            w.write_all(&c.to_le_bytes())?;
        }
        let payload = serde_json::to_vec(&item.payload)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        w.write_all(&(payload.len() as u32).to_le_bytes())?;
        w.write_all(&payload)?;
    }
    w.flush()?;
    Ok(())
}

struct CountingReader<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> CountingReader<R> {
    fn corrupt(&self, reason: impl Into<String>) -> StoreError {
        StoreError::CorruptStore { offset: self.offset, reason: reason.into() }
    }

    fn read_exact(&mut self, buf: &mut [u8]) -> Result<(), StoreError> {
        match self.inner.read_exact(buf) {
            Ok(()) => {
                self.offset += buf.len() as u64;
                Ok(())
            }
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
                Err(self.corrupt("unexpected end of file"))
            }
            Err(e) => Err(StoreError::Io(e)),
        }
    }

    fn read_u8(&mut self) -> Result<u8, StoreError> {
        let mut b = [0u8; 1];
        self.read_exact(&mut b)?;
        Ok(b[0])
    }

    fn read_u32(&mut self) -> Result<u32, StoreError> {
        let mut b = [0u8; 4];
        self.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    fn read_u64(&mut self) -> Result<u64, StoreError> {
        let mut b = [0u8; 8];
        self.read_exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }

    fn read_f64(&mut self) -> Result<f64, StoreError> {
        let mut b = [0u8; 8];
        self.read_exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }

    fn read_string(&mut self, len: usize) -> Result<String, StoreError> {
        let mut buf = vec![0u8; len];
        self.read_exact(&mut buf)?;
        String::from_utf8(buf).map_err(|_| self.corrupt("invalid UTF-8"))
    }
}

/// Deserializes a store from `path`, validating magic, version, and
/// structure. Truncated or damaged files report the byte offset of the
/// failure.
pub fn load_store(path: impl AsRef<Path>) -> Result<VectorStore, StoreError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let mut r = CountingReader { inner: std::io::BufReader::new(file), offset: 0 };

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(StoreError::CorruptStore { offset: 0, reason: "bad magic".into() });
    }
    let version = r.read_u32()?;
    if version != FORMAT_VERSION {
        return Err(StoreError::UnsupportedVersion(version));
    }
    let kind = match r.read_u8()? {
        0 => StoreKind::Knowledge,
        1 => StoreKind::ProcessData,
        other => return Err(r.corrupt(format!("unknown store kind {other}"))),
    };
    let dimension = r.read_u32()? as usize;
    let count = r.read_u64()?;

    let encoder_stats = match r.read_u8()? {
        0 => None,
        1 => {
            let n = r.read_u32()? as usize;
            let mut variables = Vec::with_capacity(n);
            for _ in 0..n {
                let len = r.read_u32()? as usize;
                let name = r.read_string(len)?;
                let mean = r.read_f64()?;
                let std = r.read_f64()?;
                variables.push(VariableStat { name, mean, std });
            }
            Some(EncoderStats { variables })
        }
        other => return Err(r.corrupt(format!("invalid stats flag {other}"))),
    };

    let mut items = Vec::with_capacity(count.min(1 << 20) as usize);
    for _ in 0..count {
        let id = r.read_u64()?;
        let mut components = Vec::with_capacity(dimension);
        for _ in 0..dimension {
            let c = r.read_f64()?;
            if !c.is_finite() {
                return Err(r.corrupt("non-finite vector component"));
            }
            components.push(c);
        }
        let payload_len = r.read_u32()? as usize;
        let payload_json = r.read_string(payload_len)?;
        let payload: Payload = serde_json::from_str(&payload_json)
            .map_err(|e| r.corrupt(format!("payload JSON: {e}")))?;
        items.push(StoreItem { id, vector: EmbeddingVector(components), payload });
    }

    Ok(VectorStore { kind, dimension, items, encoder_stats })
}
