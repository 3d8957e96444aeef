//! Flat binary checkpoint container.
//!
//! Layout: magic `FARMCKP1`, u32 entry count, then per entry: u32 name
//! length, UTF-8 name (a parameter path such as `farm/module3/lstm/W_ih`),
//! u8 dtype (1 = f32, 2 = f64), u8 rank, u64 dims, raw little-endian data.
//! A plain-text sidecar `<file>.manifest` lists every entry with its shape
//! plus a SHA-256 checksum of the binary file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Result, TensorError};
use crate::params::ParamMap;
use crate::scalar::{Dtype, Scalar};
use crate::tensor::Tensor;

const MAGIC: &[u8; 8] = b"FARMCKP1";

fn ckpt_err(msg: impl Into<String>) -> TensorError {
    TensorError::Checkpoint(msg.into())
}

pub fn manifest_path(path: &Path) -> PathBuf {
    let mut os = path.as_os_str().to_os_string();
    os.push(".manifest");
    PathBuf::from(os)
}

pub fn save<S: Scalar>(path: &Path, params: &ParamMap<S>) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(params.len() as u32).to_le_bytes());
    let mut manifest = String::new();
    for (name, param) in params.iter() {
        let value = param.value();
        buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.push(match S::DTYPE {
            Dtype::F32 => 1,
            Dtype::F64 => 2,
        });
        let shape = value.shape();
        buf.push(shape.len() as u8);
        for &d in shape {
            buf.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &v in value.data() {
            buf.extend_from_slice(&v.to_le_bytes_vec());
        }
        manifest.push_str(&format!(
            "{} {} {:?}\n",
            name,
            S::DTYPE.name(),
            shape
        ));
    }
    let digest = Sha256::digest(&buf);
    manifest.push_str(&format!("sha256 {:x}\n", digest));
    let mut f = fs::File::create(path).map_err(|e| ckpt_err(format!("create {path:?}: {e}")))?;
    f.write_all(&buf)
        .map_err(|e| ckpt_err(format!("write {path:?}: {e}")))?;
    fs::write(manifest_path(path), manifest)
        .map_err(|e| ckpt_err(format!("write manifest: {e}")))?;
    Ok(())
}

pub struct Entry<S> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<S>,
}

pub fn load_entries<S: Scalar>(path: &Path) -> Result<Vec<Entry<S>>> {
    let buf = fs::read(path).map_err(|e| ckpt_err(format!("read {path:?}: {e}")))?;
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
        if *pos + n > buf.len() {
            return Err(ckpt_err("truncated checkpoint"));
        }
        let s = &buf[*pos..*pos + n];
        *pos += n;
        Ok(s)
    };
    if take(&mut pos, 8)? != MAGIC {
        return Err(ckpt_err("bad magic (not a checkpoint file)"));
    }
    let count = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
        let name = std::str::from_utf8(take(&mut pos, name_len)?)
            .map_err(|_| ckpt_err("non-utf8 parameter name"))?
            .to_string();
        let dtype = match take(&mut pos, 1)?[0] {
            1 => Dtype::F32,
            2 => Dtype::F64,
            d => return Err(ckpt_err(format!("unknown dtype tag {d}"))),
        };
        if dtype != S::DTYPE {
            return Err(ckpt_err(format!(
                "entry {name:?} has dtype {}, expected {}",
                dtype.name(),
                S::DTYPE.name()
            )));
        }
        let rank = take(&mut pos, 1)?[0] as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize);
        }
        let numel: usize = shape.iter().product();
        let width = S::DTYPE.size_bytes();
        let raw = take(&mut pos, numel * width)?;
        let data: Vec<S> = raw
            .chunks_exact(width)
            .map(|c| S::from_le_slice(c))
            .collect();
        entries.push(Entry { name, shape, data });
    }
    if pos != buf.len() {
        return Err(ckpt_err("trailing bytes after last entry"));
    }
    Ok(entries)
}

/// Loads a checkpoint into an existing parameter map. Every entry must
/// match a registered parameter by name and shape, and vice versa.
pub fn load_into<S: Scalar>(path: &Path, params: &ParamMap<S>) -> Result<()> {
    let entries = load_entries::<S>(path)?;
    if entries.len() != params.len() {
        return Err(ckpt_err(format!(
            "checkpoint has {} entries, model has {} parameters",
            entries.len(),
            params.len()
        )));
    }
    for entry in entries {
        let param = params
            .get(&entry.name)
            .ok_or_else(|| TensorError::UnknownParam(entry.name.clone()))?;
        if param.shape() != entry.shape {
            return Err(TensorError::ShapeMismatch {
                op: "checkpoint load",
                lhs: param.shape(),
                rhs: entry.shape,
            });
        }
        param.set(Tensor::param(entry.data, &entry.shape)?)?;
    }
    Ok(())
}

/// Verifies the sidecar checksum against the binary file.
pub fn verify_manifest(path: &Path) -> Result<bool> {
    let buf = fs::read(path).map_err(|e| ckpt_err(format!("read {path:?}: {e}")))?;
    let manifest = fs::read_to_string(manifest_path(path))
        .map_err(|e| ckpt_err(format!("read manifest: {e}")))?;
    let recorded = manifest
        .lines()
        .rev()
        .find_map(|l| l.strip_prefix("sha256 "))
        .ok_or_else(|| ckpt_err("manifest missing sha256 line"))?;
    Ok(format!("{:x}", Sha256::digest(&buf)) == recorded.trim())
}
