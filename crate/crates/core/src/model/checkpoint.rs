//! Binary checkpoint format (all integers little-endian):
//!
//! ```text
//! magic "HRNNCKPT" | version u32 | header_len u64 | header JSON {config, vocab}
//! | tensor_count u32 | per tensor: name_len u32, name, ndim u32, dims u64…, f64…
//! | fnv1a-64 checksum of every preceding byte
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Model, ModelConfig};
use crate::embeddings::{EmbeddingMatrix, Vocab};
use crate::error::{Error, Result};
use crate::ndmath::{ParamStore, Tensor};

pub const MAGIC: &[u8; 8] = b"HRNNCKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    vocab: Vocab,
}

pub fn save(model: &Model, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(model)?).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<Model> {
    if !path.exists() {
        return Err(Error::MissingPath(path.to_path_buf()));
    }
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}

pub fn to_bytes(model: &Model) -> Result<Vec<u8>> {
    let header = serde_json::to_vec(&Header {
        config: model.config.clone(),
        vocab: model.vocab.clone(),
    })?;
    let mut out = Vec::with_capacity(64 + header.len() + model.num_params() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&(model.params.len() as u32).to_le_bytes());
    for (name, t) in model.params.iter() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let sum = crate::ndmath::rng_fnv1a(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    Ok(out)
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
            .ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn len(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Checkpoint("length overflow".into()))
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<Model> {
    if bytes.len() < MAGIC.len() + 4 + 8 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported format version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let (body, sum) = bytes.split_at(bytes.len() - 8);
    if crate::ndmath::rng_fnv1a(body).to_le_bytes() != sum {
        return Err(Error::Checkpoint(
            "checksum mismatch (truncated or corrupt file)".into(),
        ));
    }
    let mut cur = Cursor { bytes: body, pos: 12 };
    let header_len = cur.len()?;
    let header: Header =
        serde_json::from_slice(cur.take(header_len)?).map_err(|e| Error::Checkpoint(format!("bad header: {e}")))?;
    let count = cur.u32()? as usize;
    let mut store = ParamStore::new();
    for _ in 0..count {
        let name_len = cur.u32()? as usize;
        let name = std::str::from_utf8(cur.take(name_len)?)
            .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?
            .to_string();
        let ndim = cur.u32()? as usize;
        let shape = (0..ndim).map(|_| cur.len()).collect::<Result<Vec<_>>>()?;
        let n = shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .ok_or_else(|| Error::Checkpoint("tensor size overflow".into()))?;
        let raw = cur.take(
            n.checked_mul(8)
                .ok_or_else(|| Error::Checkpoint("tensor size overflow".into()))?,
        )?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        store.add(name, Tensor::new(shape, data)?)?;
    }
    if cur.pos != body.len() {
        return Err(Error::Checkpoint("trailing bytes after tensors".into()));
    }
    let Header { config, vocab } = header;
    let placeholder = EmbeddingMatrix {
        matrix: Tensor::zeros(&[vocab.len(), config.embed_dim]),
        vocab,
        found: 0,
    };
    let mut model = Model::build(config, &placeholder)
        .map_err(|e| Error::Checkpoint(format!("header describes an invalid model: {e}")))?;
    for id in model.params.ids().collect::<Vec<_>>() {
        store.set_trainable(id, model.params.is_trainable(id));
    }
    model
        .set_params(store)
        .map_err(|_| Error::Checkpoint("tensors do not match the configured architecture".into()))?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::tiny_embeddings;
    use crate::model::VariantId;

    fn model() -> Model {
        let cfg = ModelConfig {
            variant: VariantId::MultiProjectedAttentionRNN,
            embed_dim: 6,
            hidden: 5,
            proj_width: 4,
            head_width: 3,
            attn_hidden: 4,
            ..ModelConfig::default()
        };
        Model::build(cfg, &tiny_embeddings(10, 6)).unwrap()
    }

    #[test]
    fn round_trip_is_bitwise() {
        let m = model();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.ckpt");
        save(&m, &p).unwrap();
        let back = load(&p).unwrap();
        assert_eq!(back, m);
        for ((_, a), (_, b)) in m.params().iter().zip(back.params().iter()) {
            let a: Vec<u64> = a.data().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u64> = b.data().iter().map(|v| v.to_bits()).collect();
            assert_eq!(a, b);
        }
        assert_eq!(back.score(&[2, 5, 3]).unwrap(), m.score(&[2, 5, 3]).unwrap());
    }

    #[test]
    fn truncated_and_corrupt_files_are_checkpoint_errors() {
        let bytes = to_bytes(&model()).unwrap();
        for cut in [0, 5, 12, 40, bytes.len() / 2, bytes.len() - 1] {
            assert!(
                matches!(from_bytes(&bytes[..cut]), Err(Error::Checkpoint(_))),
                "cut {cut}"
            );
        }
        let mut flipped = bytes.clone();
        let mid = flipped.len() / 2;
        flipped[mid] ^= 0x40;
        assert!(matches!(from_bytes(&flipped), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn version_mismatch_is_reported() {
        let mut bytes = to_bytes(&model()).unwrap();
        bytes[8..12].copy_from_slice(&2u32.to_le_bytes());
        let err = from_bytes(&bytes).unwrap_err().to_string();
        assert!(err.contains("version 2"), "{err}");
    }
}
