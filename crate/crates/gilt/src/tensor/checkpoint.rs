//! Flat binary parameter container.
//!
//! Layout (all integers little-endian):
//! ```text
//! magic   8 bytes  "GILTCKPT"
//! version u32      currently 1
//! count   u64      number of entries
//! entry*: name_len u32, name bytes, trainable u8,
//!         rows u64, cols u64, payload rows*cols f64 (LE)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{ParameterSet, Tensor};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"GILTCKPT";
const VERSION: u32 = 1;

pub fn save(params: &ParameterSet, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(params.names().len() as u64).to_le_bytes())?;
    for (name, p) in params.iter() {
        let bytes = name.as_bytes();
        w.write_all(&(bytes.len() as u32).to_le_bytes())?;
        w.write_all(bytes)?;
        w.write_all(&[p.trainable as u8])?;
        w.write_all(&(p.value.rows() as u64).to_le_bytes())?;
        w.write_all(&(p.value.cols() as u64).to_le_bytes())?;
        for v in p.value.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<ParameterSet> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint(format!(
            "bad magic in {}",
            path.display()
        )));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let count = read_u64(&mut r)?;
    let mut params = ParameterSet::new();
    for _ in 0..count {
        let name_len = read_u32(&mut r)? as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name)
            .map_err(|e| Error::Checkpoint(format!("non-utf8 parameter name: {e}")))?;
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag)?;
        let rows = read_u64(&mut r)? as usize;
        let cols = read_u64(&mut r)? as usize;
        let mut data = vec![0.0f64; rows * cols];
        let mut buf = [0u8; 8];
        for v in data.iter_mut() {
            r.read_exact(&mut buf)?;
            *v = f64::from_le_bytes(buf);
        }
        params.insert(&name, Tensor::from_vec(rows, cols, data), flag[0] != 0);
    }
    Ok(params)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_preserves_everything() {
        let mut ps = ParameterSet::new();
        ps.insert("w", Tensor::from_vec(2, 3, vec![1.0, -2.5, 3.25, 0.0, 1e-300, 7.0]), true);
        ps.insert("frozen", Tensor::scalar(42.0), false);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("test.ckpt");
        save(&ps, &path).unwrap();
        let back = load(&path).unwrap();
        assert_eq!(back.names(), ps.names());
        for (name, p) in ps.iter() {
            let q = back.get(name);
            assert_eq!(q.trainable, p.trainable);
            assert_eq!(q.value.as_ref(), p.value.as_ref());
        }
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ckpt");
        std::fs::write(&path, b"not a checkpoint").unwrap();
        assert!(load(&path).is_err());
    }
}
