//! Persistence and synthetic data.
//!
//! Both binary formats are little-endian and start with an 8-byte magic
//! followed by three `u32` fields. Bank files store features as `f32`;
//! basis and online-state snapshots store `f64` so resumed streams continue
//! bit-for-bit.

mod bank_file;
mod basis_file;
mod synth;

pub use bank_file::{
    decode_bank, encode_bank, read_bank, write_bank, BankFileHeader, BANK_HEADER_LEN, BANK_MAGIC,
    FLAG_CENTERED,
};
pub use basis_file::{
    decode_basis, decode_online_state, encode_basis, encode_online_state, read_basis,
    read_online_state, write_basis, write_online_state, BASIS_MAGIC, STATE_MAGIC,
};
pub use synth::{generate_stream, planted_basis, ActorCount, SynthConfig};

use std::io::{self, Read};

use crate::error::{Error, Result};

pub(crate) fn read_array<const N: usize>(r: &mut impl Read, what: &str) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| eof_to_truncated(e, what))?;
    Ok(buf)
}

pub(crate) fn read_u32(r: &mut impl Read, what: &str) -> Result<u32> {
    Ok(u32::from_le_bytes(read_array(r, what)?))
}

pub(crate) fn read_u64(r: &mut impl Read, what: &str) -> Result<u64> {
    Ok(u64::from_le_bytes(read_array(r, what)?))
}

pub(crate) fn read_f64(r: &mut impl Read, what: &str) -> Result<f64> {
    Ok(f64::from_le_bytes(read_array(r, what)?))
}

/// Reads exactly `len` bytes without trusting `len` for the allocation.
pub(crate) fn read_block(r: &mut impl Read, len: usize, what: &str) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    r.take(len as u64).read_to_end(&mut buf)?;
    if buf.len() != len {
        return Err(Error::Truncated(format!("{what}: expected {len} bytes, found {}", buf.len())));
    }
    Ok(buf)
}

pub(crate) fn expect_eof(r: &mut impl Read) -> Result<()> {
    let mut probe = [0u8; 1];
    match r.read(&mut probe)? {
        0 => Ok(()),
        _ => Err(Error::Malformed("trailing bytes after last record".into())),
    }
}

pub(crate) fn check_magic(r: &mut impl Read, expected: &'static [u8; 8], name: &'static str) -> Result<()> {
    let magic: [u8; 8] = read_array(r, "magic")?;
    if &magic != expected {
        return Err(Error::BadMagic { expected: name });
    }
    Ok(())
}

fn eof_to_truncated(e: io::Error, what: &str) -> Error {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        Error::Truncated(what.to_string())
    } else {
        Error::Io(e)
    }
}
