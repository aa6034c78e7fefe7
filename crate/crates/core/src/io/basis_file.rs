//! Basis snapshot (`MEMSVDU1`) and online-state snapshot (`MEMSVDS1`):
//!
//! ```text
//! basis    magic | dim: u32 | n_c: u32 | flags: u32 (0)
//!          sigma: n_c × f64 | u_mem: n_c·dim × f64, row-major
//! state    magic | dim: u32 | n_c: u32 | flags: u32 (0)
//!          lambda: f64 | clips_seen: u64 | updates_since_reorthonormalization: u64
//!          sigma | u_mem as above
//! ```
//!
//! Readers re-validate orthonormality and ordering through
//! [`SubspaceBasis::new`]; nothing is returned on any error.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{check_magic, expect_eof, read_block, read_f64, read_u32, read_u64};
use crate::basis::SubspaceBasis;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::online::OnlineState;

pub const BASIS_MAGIC: &[u8; 8] = b"MEMSVDU1";
pub const STATE_MAGIC: &[u8; 8] = b"MEMSVDS1";

fn write_shape(w: &mut impl Write, magic: &[u8; 8], basis: &SubspaceBasis) -> Result<()> {
    let dim = u32::try_from(basis.dim()).map_err(|_| Error::InvalidConfig("dimension too large".into()))?;
    w.write_all(magic)?;
    w.write_all(&dim.to_le_bytes())?;
    w.write_all(&(basis.n_c() as u32).to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    Ok(())
}

fn write_payload(w: &mut impl Write, basis: &SubspaceBasis) -> Result<()> {
    for x in basis.sigma().iter().chain(basis.u_mem().as_slice()) {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn read_shape(r: &mut impl Read) -> Result<(usize, usize)> {
    let dim = read_u32(r, "dim")? as usize;
    let n_c = read_u32(r, "n_c")? as usize;
    let flags = read_u32(r, "flags")?;
    if flags != 0 {
        return Err(Error::Malformed(format!("unknown flags {flags:#x}")));
    }
    if dim == 0 || n_c == 0 || n_c > dim {
        return Err(Error::Malformed(format!("basis shape {n_c}x{dim}")));
    }
    Ok((dim, n_c))
}

fn read_payload(r: &mut impl Read, dim: usize, n_c: usize) -> Result<SubspaceBasis> {
    let bytes = read_block(r, 8 * n_c * (dim + 1), "basis payload")?;
    let mut values = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")));
    let sigma: Vec<f64> = values.by_ref().take(n_c).collect();
    let u = DenseMatrix::new(n_c, dim, values.collect())?;
    SubspaceBasis::new(u, sigma)
}

pub fn encode_basis(w: &mut impl Write, basis: &SubspaceBasis) -> Result<()> {
    write_shape(w, BASIS_MAGIC, basis)?;
    write_payload(w, basis)
}

pub fn decode_basis(r: &mut impl Read) -> Result<SubspaceBasis> {
    check_magic(r, BASIS_MAGIC, "MEMSVDU1")?;
    let (dim, n_c) = read_shape(r)?;
    let basis = read_payload(r, dim, n_c)?;
    expect_eof(r)?;
    Ok(basis)
}

pub fn encode_online_state(w: &mut impl Write, state: &OnlineState) -> Result<()> {
    write_shape(w, STATE_MAGIC, state.basis())?;
    let (clips_seen, since) = state.snapshot_counters();
    w.write_all(&state.lambda().to_le_bytes())?;
    w.write_all(&(clips_seen as u64).to_le_bytes())?;
    w.write_all(&(since as u64).to_le_bytes())?;
    write_payload(w, state.basis())
}

pub fn decode_online_state(r: &mut impl Read) -> Result<OnlineState> {
    check_magic(r, STATE_MAGIC, "MEMSVDS1")?;
    let (dim, n_c) = read_shape(r)?;
    let lambda = read_f64(r, "lambda")?;
    let clips_seen = read_u64(r, "clips_seen")? as usize;
    let since = read_u64(r, "reorthonormalization counter")? as usize;
    let basis = read_payload(r, dim, n_c)?;
    expect_eof(r)?;
    OnlineState::restore(basis, lambda, clips_seen, since)
}

pub fn write_basis(path: impl AsRef<Path>, basis: &SubspaceBasis) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    encode_basis(&mut w, basis)?;
    w.flush()?;
    Ok(())
}

pub fn read_basis(path: impl AsRef<Path>) -> Result<SubspaceBasis> {
    decode_basis(&mut BufReader::new(File::open(path)?))
}

pub fn write_online_state(path: impl AsRef<Path>, state: &OnlineState) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    encode_online_state(&mut w, state)?;
    w.flush()?;
    Ok(())
}

pub fn read_online_state(path: impl AsRef<Path>) -> Result<OnlineState> {
    decode_online_state(&mut BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_basis() -> SubspaceBasis {
        SubspaceBasis::new(DenseMatrix::identity(3).row_range(0..2), vec![2.0, 1.0]).unwrap()
    }

    #[test]
    fn identity_rows_round_trip() {
        let mut buf = Vec::new();
        encode_basis(&mut buf, &identity_basis()).unwrap();
        assert_eq!(buf.len(), 20 + 8 * 2 * 4);
        assert_eq!(decode_basis(&mut buf.as_slice()).unwrap(), identity_basis());
    }

    #[test]
    fn corrupt_magic() {
        let mut buf = Vec::new();
        encode_basis(&mut buf, &identity_basis()).unwrap();
        buf[0] = b'X';
        assert!(matches!(decode_basis(&mut buf.as_slice()), Err(Error::BadMagic { .. })));
        // a basis file is not a state file
        buf[0] = b'M';
        assert!(matches!(decode_online_state(&mut buf.as_slice()), Err(Error::BadMagic { .. })));
    }

    #[test]
    fn truncated_payload() {
        let mut buf = Vec::new();
        encode_basis(&mut buf, &identity_basis()).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(decode_basis(&mut buf.as_slice()), Err(Error::Truncated(_))));
    }

    #[test]
    fn non_orthonormal_payload_rejected() {
        let mut buf = Vec::new();
        encode_basis(&mut buf, &identity_basis()).unwrap();
        // first u_mem entry: 1.0 -> 2.0
        let at = 20 + 16;
        buf[at..at + 8].copy_from_slice(&2.0f64.to_le_bytes());
        assert!(decode_basis(&mut buf.as_slice()).is_err());
    }
}
