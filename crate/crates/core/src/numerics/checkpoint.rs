//! Binary parameter file: magic, version, a length-prefixed opaque header,
//! then per parameter its name, shape and little-endian `f32` payload.

use std::io::{Read, Write};

use super::{Matrix, ParameterStore};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"DIALAB\0P";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: Vec<u8>,
    pub params: Vec<(String, Matrix<f32>)>,
}

pub fn write_checkpoint<W: Write>(w: &mut W, header: &[u8], params: &ParameterStore<f32>) -> Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(header.len() as u64).to_le_bytes())?;
    w.write_all(header)?;
    w.write_all(&(params.len() as u32).to_le_bytes())?;
    let mut buf = Vec::new();
    for (name, m) in params.iter() {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(m.rows() as u32).to_le_bytes())?;
        w.write_all(&(m.cols() as u32).to_le_bytes())?;
        buf.clear();
        for x in m.as_slice() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

fn read_exact<R: Read>(r: &mut R, n: usize, what: &str) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    r.take(n as u64).read_to_end(&mut buf)?;
    if buf.len() != n {
        return Err(Error::Checkpoint(format!("truncated while reading {what}")));
    }
    Ok(buf)
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let b = read_exact(r, 4, what)?;
    Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
}

pub fn read_checkpoint<R: Read>(r: &mut R) -> Result<Checkpoint> {
    if read_exact(r, 8, "magic")? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = read_u32(r, "version")?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let hb = read_exact(r, 8, "header length")?;
    let header_len = u64::from_le_bytes(hb.try_into().expect("8 bytes")) as usize;
    let header = read_exact(r, header_len, "header")?;
    let count = read_u32(r, "parameter count")? as usize;
    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = read_u32(r, "name length")? as usize;
        let name = String::from_utf8(read_exact(r, name_len, "name")?)
            .map_err(|_| Error::Checkpoint("parameter name is not utf-8".into()))?;
        let rows = read_u32(r, "rows")? as usize;
        let cols = read_u32(r, "cols")? as usize;
        let bytes = read_exact(r, rows * cols * 4, &name)?;
        let data = bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        params.push((name, Matrix::from_vec(rows, cols, data)?));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Checkpoint("trailing bytes".into()));
    }
    Ok(Checkpoint { header, params })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::init_uniform;
    use crate::seed::rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut s = ParameterStore::<f32>::new();
        let mut r = rng(3);
        s.add("emb", init_uniform(7, 3, 0.5, &mut r)).unwrap();
        let mut odd = Matrix::column(vec![f32::MIN_POSITIVE, -0.0, 1e-40, f32::MAX]);
        odd.set(1, 0, -0.0);
        s.add("b", odd).unwrap();
        let mut bytes = Vec::new();
        write_checkpoint(&mut bytes, b"{\"k\":1}", &s).unwrap();
        let ck = read_checkpoint(&mut bytes.as_slice()).unwrap();
        assert_eq!(ck.header, b"{\"k\":1}");
        for ((n1, m1), (n2, m2)) in ck.params.iter().zip(s.iter()) {
            assert_eq!(n1, n2);
            let a: Vec<u32> = m1.as_slice().iter().map(|x| x.to_bits()).collect();
            let b: Vec<u32> = m2.as_slice().iter().map(|x| x.to_bits()).collect();
            assert_eq!(a, b);
        }
        let mut again = Vec::new();
        let mut loaded = s.clone();
        loaded.load(ck.params).unwrap();
        write_checkpoint(&mut again, b"{\"k\":1}", &loaded).unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn corrupt_files_rejected() {
        let mut s = ParameterStore::<f32>::new();
        s.add("w", Matrix::zeros(2, 2)).unwrap();
        let mut bytes = Vec::new();
        write_checkpoint(&mut bytes, &[], &s).unwrap();
        assert!(read_checkpoint(&mut &bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(read_checkpoint(&mut bad.as_slice()).is_err());
        bytes.push(0);
        assert!(read_checkpoint(&mut bytes.as_slice()).is_err());
    }
}
