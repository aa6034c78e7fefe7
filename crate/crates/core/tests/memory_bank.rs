use memsvd::bank::stack_clips;
use memsvd::{ClipFeatures, DenseMatrix, Error, MemoryBank};
use proptest::prelude::*;

/// Row `i` of clip `t` is tagged `(t, i, j)` so ordering mistakes show up.
fn tagged_clip(t: i64, actors: usize, dim: usize) -> ClipFeatures {
    let m = DenseMatrix::from_fn(actors, dim, |i, j| t as f64 * 1000.0 + i as f64 * 10.0 + j as f64).unwrap();
    ClipFeatures::new(t, m)
}

#[test]
fn sixty_one_second_window() {
    let mut bank = MemoryBank::offline(30, 16);
    for t in 0..61 {
        bank.push_clip(tagged_clip(t, 3, 16)).unwrap();
    }
    let m = bank.materialize(30).unwrap();
    assert_eq!(m.shape(), (183, 16));
    assert_eq!(bank.retained_clips(), 61);
    assert_eq!(bank.retained_scalars(), 183 * 16);
}

#[test]
fn five_clip_window_matches_concatenation() {
    let mut bank = MemoryBank::offline(2, 3);
    let clips: Vec<ClipFeatures> = (10..17).map(|t| tagged_clip(t, (t % 3) as usize + 1, 3)).collect();
    for c in &clips {
        bank.push_clip(c.clone()).unwrap();
    }
    let center = 14;
    let m = bank.materialize(center).unwrap();
    let mut expected = Vec::new();
    for c in clips.iter().filter(|c| (c.timestamp() - center).abs() <= 2) {
        for row in c.features().row_iter() {
            expected.extend_from_slice(row);
        }
    }
    assert_eq!(m.as_slice(), expected.as_slice());
    assert_eq!(m.rows(), bank.n_mem(center));
}

#[test]
fn latest_center_follows_newest_clip() {
    let mut bank = MemoryBank::offline(30, 2);
    assert_eq!(bank.latest_center(), None);
    for t in 0..100 {
        bank.push_clip(tagged_clip(t, 1, 2)).unwrap();
    }
    assert_eq!(bank.latest_center(), Some(69));
    assert_eq!(bank.n_mem(69), 61);
    assert_eq!(bank.retained_clips(), 61);
}

#[test]
fn timestamps_may_skip() {
    let mut bank = MemoryBank::offline(2, 2);
    for t in [0, 1, 5, 6] {
        bank.push_clip(tagged_clip(t, 1, 2)).unwrap();
    }
    assert_eq!(bank.n_mem(4), 2);
    assert!(matches!(bank.materialize(-10), Err(Error::EmptyWindow { center: -10 })));
}

#[test]
fn stack_clips_preserves_order() {
    let clips = [tagged_clip(0, 2, 2), ClipFeatures::empty(1, 2), tagged_clip(2, 1, 2)];
    let m = stack_clips(&clips).unwrap();
    assert_eq!(m.rows(), 3);
    assert_eq!(m.row(2), clips[2].features().row(0));
}

proptest! {
    #[test]
    fn row_count_is_window_sum(
        sizes in prop::collection::vec(0usize..4, 1..40),
        w in 0u32..6,
        center_frac in 0.0f64..1.0,
        exclude in any::<bool>(),
    ) {
        let mut bank = MemoryBank::offline(w, 3).exclude_center(exclude);
        for (t, &n) in sizes.iter().enumerate() {
            bank.push_clip(tagged_clip(t as i64, n, 3)).unwrap();
        }
        let newest = sizes.len() as i64 - 1;
        let lo = (newest - i64::from(w)).max(0);
        let center = lo + ((newest - lo) as f64 * center_frac) as i64;
        let expected: usize = sizes.iter().enumerate()
            .filter(|&(t, _)| (t as i64 - center).abs() <= i64::from(w) && !(exclude && t as i64 == center))
            .map(|(_, &n)| n)
            .sum();
        prop_assert_eq!(bank.n_mem(center), expected);
        match bank.materialize(center) {
            Ok(m) => prop_assert_eq!(m.rows(), expected),
            Err(Error::EmptyWindow { .. }) => prop_assert_eq!(expected, 0),
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
        prop_assert!(bank.retained_clips() <= 2 * w as usize + 1);
    }
}
