//! Feature-bank file:
//!
//! ```text
//! header   magic "MEMSVDB1" | dim: u32 | clip_count: u32 | flags: u32
//! clip*    timestamp: i64 | actors: u32 | actors·dim × f32, row-major
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{check_magic, expect_eof, read_array, read_block, read_u32};
use crate::bank::ClipFeatures;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub const BANK_MAGIC: &[u8; 8] = b"MEMSVDB1";
pub const BANK_HEADER_LEN: usize = 20;
/// Header flag bit 0: features were mean-centered before storage.
pub const FLAG_CENTERED: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BankFileHeader {
    pub dim: u32,
    pub clip_count: u32,
    pub flags: u32,
}

impl BankFileHeader {
    pub fn centered(&self) -> bool {
        self.flags & FLAG_CENTERED != 0
    }
}

/// Serializes `clips`, narrowing features to `f32`. Fails if a clip has a
/// different width than `dim` or a value overflows `f32`.
pub fn encode_bank(w: &mut impl Write, dim: usize, clips: &[ClipFeatures], flags: u32) -> Result<()> {
    if dim == 0 || dim > u32::MAX as usize {
        return Err(Error::InvalidConfig(format!("bank dimension {dim}")));
    }
    let count = u32::try_from(clips.len()).map_err(|_| Error::InvalidConfig("too many clips".into()))?;
    if let Some(c) = clips.iter().find(|c| c.dim() != dim) {
        return Err(Error::dim(dim, c.dim()));
    }
    w.write_all(BANK_MAGIC)?;
    w.write_all(&(dim as u32).to_le_bytes())?;
    w.write_all(&count.to_le_bytes())?;
    w.write_all(&flags.to_le_bytes())?;
    for clip in clips {
        let actors = u32::try_from(clip.actors()).map_err(|_| Error::InvalidConfig("too many actors".into()))?;
        w.write_all(&clip.timestamp().to_le_bytes())?;
        w.write_all(&actors.to_le_bytes())?;
        for &x in clip.features().as_slice() {
            let narrow = x as f32;
            if !narrow.is_finite() {
                return Err(Error::Malformed(format!("value {x} does not fit in f32")));
            }
            w.write_all(&narrow.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Parses a bank image, widening features to `f64`.
pub fn decode_bank(r: &mut impl Read) -> Result<(BankFileHeader, Vec<ClipFeatures>)> {
    check_magic(r, BANK_MAGIC, "MEMSVDB1")?;
    let header = BankFileHeader {
        dim: read_u32(r, "header dim")?,
        clip_count: read_u32(r, "header clip count")?,
        flags: read_u32(r, "header flags")?,
    };
    if header.dim == 0 {
        return Err(Error::Malformed("dimension 0".into()));
    }
    let dim = header.dim as usize;
    let mut clips = Vec::new();
    for i in 0..header.clip_count {
        let timestamp = i64::from_le_bytes(read_array(r, "clip timestamp")?);
        let actors = read_u32(r, "clip actor count")? as usize;
        let len = actors
            .checked_mul(dim)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| Error::Malformed(format!("clip {i} size overflows")))?;
        let bytes = read_block(r, len, &format!("clip {i} features"))?;
        let data = bytes
            .chunks_exact(4)
            .map(|b| f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]])))
            .collect();
        clips.push(ClipFeatures::new(timestamp, DenseMatrix::new(actors, dim, data)?));
    }
    expect_eof(r)?;
    Ok((header, clips))
}

pub fn write_bank(path: impl AsRef<Path>, dim: usize, clips: &[ClipFeatures], flags: u32) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    encode_bank(&mut w, dim, clips, flags)?;
    w.flush()?;
    Ok(())
}

pub fn read_bank(path: impl AsRef<Path>) -> Result<(BankFileHeader, Vec<ClipFeatures>)> {
    decode_bank(&mut BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_bank_is_header_only() {
        let mut buf = Vec::new();
        encode_bank(&mut buf, 4, &[], 0).unwrap();
        assert_eq!(buf.len(), BANK_HEADER_LEN);
        let (h, clips) = decode_bank(&mut buf.as_slice()).unwrap();
        assert_eq!(h, BankFileHeader { dim: 4, clip_count: 0, flags: 0 });
        assert!(clips.is_empty());
    }

    #[test]
    fn rejects_mixed_dimensions() {
        let clips = [ClipFeatures::empty(0, 3), ClipFeatures::empty(1, 4)];
        assert!(matches!(encode_bank(&mut Vec::new(), 3, &clips, 0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn rejects_overflowing_values() {
        let m = DenseMatrix::from_rows(&[[1e300]]).unwrap();
        assert!(encode_bank(&mut Vec::new(), 1, &[ClipFeatures::new(0, m)], 0).is_err());
    }

    #[test]
    fn trailing_bytes() {
        let mut buf = Vec::new();
        encode_bank(&mut buf, 2, &[], 0).unwrap();
        buf.push(0);
        assert!(matches!(decode_bank(&mut buf.as_slice()), Err(Error::Malformed(_))));
    }

    #[test]
    fn centered_flag() {
        let mut buf = Vec::new();
        encode_bank(&mut buf, 2, &[], FLAG_CENTERED).unwrap();
        assert!(decode_bank(&mut buf.as_slice()).unwrap().0.centered());
    }
}
