mod common;

use common::*;
use memsvd::bank::stack_clips;
use memsvd::io::{
    decode_bank, decode_basis, decode_online_state, encode_bank, encode_basis, encode_online_state, generate_stream,
    planted_basis, read_bank, read_basis, read_online_state, write_bank, write_basis, write_online_state,
    ActorCount, SynthConfig, BANK_HEADER_LEN, FLAG_CENTERED,
};
use memsvd::linalg::{subspace_distance, svd};
use memsvd::online::init_online;
use memsvd::{compute_basis, BasisMethod, ClipFeatures, DenseMatrix, Error, SubspaceBasis};

#[test]
fn empty_bank_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.bank");
    write_bank(&path, 8, &[], 0).unwrap();
    assert_eq!(std::fs::metadata(&path).unwrap().len(), BANK_HEADER_LEN as u64);
    let (header, clips) = read_bank(&path).unwrap();
    assert_eq!((header.dim, header.clip_count, header.flags), (8, 0, 0));
    assert!(clips.is_empty());
}

#[test]
fn golden_single_clip_image() {
    let clip = ClipFeatures::new(0, DenseMatrix::from_rows(&[[1.5, -2.0]]).unwrap());
    let mut buf = Vec::new();
    encode_bank(&mut buf, 2, std::slice::from_ref(&clip), 0).unwrap();
    let mut expected = b"MEMSVDB1".to_vec();
    expected.extend_from_slice(&2u32.to_le_bytes());
    expected.extend_from_slice(&1u32.to_le_bytes());
    expected.extend_from_slice(&0u32.to_le_bytes());
    expected.extend_from_slice(&0i64.to_le_bytes());
    expected.extend_from_slice(&1u32.to_le_bytes());
    expected.extend_from_slice(&[0x00, 0x00, 0xc0, 0x3f]);
    expected.extend_from_slice(&[0x00, 0x00, 0x00, 0xc0]);
    assert_eq!(buf.len(), 40);
    assert_eq!(buf, expected);
    let (_, back) = decode_bank(&mut buf.as_slice()).unwrap();
    assert_eq!(back, vec![clip]);
}

#[test]
fn synthetic_bank_round_trips_exactly() {
    let cfg = SynthConfig { dim: 48, actors: ActorCount::Uniform { lo: 0, hi: 4 }, clip_count: 61, ..Default::default() };
    // Values representable in f32 make the f64 round trip exact too.
    let clips: Vec<ClipFeatures> = generate_stream(&cfg)
        .unwrap()
        .into_iter()
        .map(|c| {
            let t = c.timestamp();
            let f = c.into_features();
            let f32ed = DenseMatrix::from_fn(f.rows(), f.cols(), |i, j| f.get(i, j) as f32 as f64).unwrap();
            ClipFeatures::new(t, f32ed)
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stream.bank");
    write_bank(&path, 48, &clips, FLAG_CENTERED).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    let (header, back) = read_bank(&path).unwrap();
    assert!(header.centered());
    assert_eq!(back, clips);
    write_bank(&path, 48, &back, FLAG_CENTERED).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), bytes);
}

#[test]
fn bank_reader_rejects_damage() {
    let clip = ClipFeatures::new(3, DenseMatrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap());
    let mut buf = Vec::new();
    encode_bank(&mut buf, 3, &[clip], 0).unwrap();
    let mut bad_magic = buf.clone();
    bad_magic[0] = b'X';
    assert!(matches!(decode_bank(&mut bad_magic.as_slice()), Err(Error::BadMagic { .. })));
    for cut in [5, 19, 27, buf.len() - 1] {
        assert!(matches!(decode_bank(&mut &buf[..cut]), Err(Error::Truncated(_))), "cut at {cut}");
    }
    let mut trailing = buf.clone();
    trailing.push(0);
    assert!(decode_bank(&mut trailing.as_slice()).is_err());
    let wrong_dim = ClipFeatures::new(0, DenseMatrix::zeros(1, 2));
    assert!(matches!(encode_bank(&mut Vec::new(), 3, &[wrong_dim], 0), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn identity_basis_round_trips() {
    let basis = SubspaceBasis::new(DenseMatrix::identity(5).row_range(0..3), vec![3.0, 2.0, 1.0]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("id.basis");
    write_basis(&path, &basis).unwrap();
    assert_eq!(read_basis(&path).unwrap(), basis);
}

#[test]
fn random_basis_round_trips_bit_exactly() {
    let mut g = rng(3);
    let m = gaussian(40, 30, &mut g);
    let basis = compute_basis(&m, 7, BasisMethod::Exact).unwrap();
    let mut buf = Vec::new();
    encode_basis(&mut buf, &basis).unwrap();
    let back = decode_basis(&mut buf.as_slice()).unwrap();
    assert_eq!(back.u_mem().as_slice(), basis.u_mem().as_slice());
    assert_eq!(back.sigma(), basis.sigma());
}

#[test]
fn corrupt_basis_files_are_rejected() {
    let basis = SubspaceBasis::new(DenseMatrix::identity(4).row_range(0..2), vec![1.0, 1.0]).unwrap();
    let mut buf = Vec::new();
    encode_basis(&mut buf, &basis).unwrap();
    let mut bad = buf.clone();
    bad[7] = b'0';
    assert!(matches!(decode_basis(&mut bad.as_slice()), Err(Error::BadMagic { .. })));
    let mut skewed = buf.clone();
    // Overwrite the first u_mem entry (after header and two sigma values).
    let at = 20 + 16;
    skewed[at..at + 8].copy_from_slice(&2.0f64.to_le_bytes());
    assert!(decode_basis(&mut skewed.as_slice()).is_err());
    assert!(decode_basis(&mut &buf[..buf.len() - 3]).is_err());
}

#[test]
fn resumed_stream_matches_uninterrupted_run() {
    let cfg = SynthConfig { dim: 64, planted_rank: 6, drift_rate: 0.01, clip_count: 120, seed: 8, ..Default::default() };
    let clips = generate_stream(&cfg).unwrap();
    let boot = stack_clips(&clips[..4]).unwrap();
    let mut straight = init_online(&boot, 8, 0.95).unwrap();
    for c in &clips[4..] {
        straight.update(c.features()).unwrap();
    }

    let mut first = init_online(&boot, 8, 0.95).unwrap();
    for c in &clips[4..60] {
        first.update(c.features()).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.snap");
    write_online_state(&path, &first).unwrap();
    drop(first);
    let mut resumed = read_online_state(&path).unwrap();
    assert_eq!(resumed.clips_seen(), 56);
    for c in &clips[60..] {
        resumed.update(c.features()).unwrap();
    }
    let d = subspace_distance(resumed.basis().u_mem(), straight.basis().u_mem()).unwrap();
    assert!(d <= 1e-9, "resumed drift {d}");
    assert_eq!(resumed.basis(), straight.basis());

    let mut buf = Vec::new();
    encode_online_state(&mut buf, &resumed).unwrap();
    let again = decode_online_state(&mut buf.as_slice()).unwrap();
    assert_eq!(again.basis(), resumed.basis());
    assert_eq!(again.lambda(), 0.95);
}

#[test]
fn noiseless_stream_lies_in_planted_subspace() {
    let cfg = SynthConfig { dim: 40, planted_rank: 5, noise_sigma: 0.0, clip_count: 30, seed: 9, ..Default::default() };
    let clips = generate_stream(&cfg).unwrap();
    let truth = planted_basis(&cfg, 0).unwrap();
    let m = stack_clips(&clips).unwrap();
    let b = compute_basis(&m, 5, BasisMethod::Exact).unwrap();
    assert!(subspace_distance(b.u_mem(), &truth).unwrap() <= 1e-7);
    for start in (0..25).step_by(5) {
        let window = stack_clips(&clips[start..start + 5]).unwrap();
        let s = svd(&window).unwrap().sigma;
        assert!(s[5] <= 1e-8 * s[0], "window at {start}: {} vs {}", s[5], s[0]);
    }
}

#[test]
fn planted_spectrum_clears_noise_floor() {
    let cfg = SynthConfig { dim: 256, planted_rank: 10, noise_sigma: 0.01, clip_count: 61, seed: 10, ..Default::default() };
    let m = stack_clips(&generate_stream(&cfg).unwrap()).unwrap();
    assert_eq!(m.rows(), 183);
    let s = svd(&m).unwrap().sigma;
    assert!(s[9] >= 5.0 * s[10], "σ10 = {}, σ11 = {}", s[9], s[10]);
}

#[test]
fn streams_are_seeded() {
    let cfg = SynthConfig { clip_count: 10, dim: 16, planted_rank: 3, ..Default::default() };
    assert_eq!(generate_stream(&cfg).unwrap(), generate_stream(&cfg).unwrap());
    let other = SynthConfig { seed: 1, ..cfg.clone() };
    assert_ne!(generate_stream(&cfg).unwrap(), generate_stream(&other).unwrap());
    assert!(generate_stream(&SynthConfig { planted_rank: 17, ..cfg }).is_err());
}
