//! Sliding-window memory of per-clip actor features.
//!
//! Each clip contributes a block of rows (one per actor, possibly none). The
//! memory matrix for a query time `t` is the vertical concatenation of every
//! block with timestamp in `[t − w, t + w]`, in timestamp order.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// One clip's actor features: `actors × dim`, one row per actor.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipFeatures {
    timestamp: i64,
    features: DenseMatrix,
}

impl ClipFeatures {
    pub fn new(timestamp: i64, features: DenseMatrix) -> Self {
        Self { timestamp, features }
    }

    /// A clip with no detected actors.
    pub fn empty(timestamp: i64, dim: usize) -> Self {
        Self { timestamp, features: DenseMatrix::zeros(0, dim) }
    }

    pub fn timestamp(&self) -> i64 {
        self.timestamp
    }

    pub fn features(&self) -> &DenseMatrix {
        &self.features
    }

    pub fn into_features(self) -> DenseMatrix {
        self.features
    }

    pub fn actors(&self) -> usize {
        self.features.rows()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }
}

/// Stacks the feature blocks of `clips` in the given order.
pub fn stack_clips<'a>(clips: impl IntoIterator<Item = &'a ClipFeatures>) -> Result<DenseMatrix> {
    let blocks: Vec<&DenseMatrix> = clips.into_iter().map(ClipFeatures::features).collect();
    Ok(DenseMatrix::vstack(&blocks)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetentionMode {
    /// Keeps the `2w + 1` most recent clip indices so a window centred `w`
    /// clips behind the newest one can be materialized.
    Offline,
    /// Validates and counts clips but retains none; the basis is maintained
    /// incrementally elsewhere.
    Online,
}

#[derive(Debug, Clone)]
pub struct MemoryBank {
    half_window: u32,
    dim: usize,
    mode: RetentionMode,
    include_center: bool,
    clips: VecDeque<ClipFeatures>,
    newest: Option<i64>,
    clips_seen: usize,
}

impl MemoryBank {
    pub fn new(half_window: u32, dim: usize, mode: RetentionMode) -> Self {
        Self {
            half_window,
            dim,
            mode,
            include_center: true,
            clips: VecDeque::new(),
            newest: None,
            clips_seen: 0,
        }
    }

    pub fn offline(half_window: u32, dim: usize) -> Self {
        Self::new(half_window, dim, RetentionMode::Offline)
    }

    pub fn online(dim: usize) -> Self {
        Self::new(0, dim, RetentionMode::Online)
    }

    /// Leave the query clip's own actors out of the materialized memory.
    pub fn exclude_center(mut self, exclude: bool) -> Self {
        self.include_center = !exclude;
        self
    }

    pub fn half_window(&self) -> u32 {
        self.half_window
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self) -> RetentionMode {
        self.mode
    }

    pub fn newest_timestamp(&self) -> Option<i64> {
        self.newest
    }

    /// The latest time whose full window `[t − w, t + w]` has arrived.
    pub fn latest_center(&self) -> Option<i64> {
        self.newest.map(|t| t - i64::from(self.half_window))
    }

    pub fn push_clip(&mut self, clip: ClipFeatures) -> Result<()> {
        self.admit(&clip)?;
        if self.mode == RetentionMode::Online {
            return Ok(());
        }
        let horizon = clip.timestamp - 2 * i64::from(self.half_window);
        self.clips.push_back(clip);
        while self.clips.front().is_some_and(|c| c.timestamp < horizon) {
            self.clips.pop_front();
        }
        Ok(())
    }

    /// Validates ordering and dimension, then records the clip as seen.
    pub(crate) fn admit(&mut self, clip: &ClipFeatures) -> Result<()> {
        if clip.dim() != self.dim {
            return Err(Error::dim(self.dim, clip.dim()));
        }
        if let Some(newest) = self.newest {
            if clip.timestamp <= newest {
                return Err(Error::OutOfOrderTimestamp { newest, got: clip.timestamp });
            }
        }
        self.newest = Some(clip.timestamp);
        self.clips_seen += 1;
        Ok(())
    }

    fn in_window(&self, center: i64) -> impl Iterator<Item = &ClipFeatures> + '_ {
        let w = i64::from(self.half_window);
        self.clips.iter().filter(move |c| {
            (c.timestamp - center).abs() <= w && (self.include_center || c.timestamp != center)
        })
    }

    /// Row count of the memory matrix around `center`.
    pub fn n_mem(&self, center: i64) -> usize {
        self.in_window(center).map(ClipFeatures::actors).sum()
    }

    /// The memory matrix `M` (`N_mem × d`) for a query at `center`.
    ///
    /// A window without any rows is an error rather than an empty matrix.
    pub fn materialize(&self, center: i64) -> Result<DenseMatrix> {
        if self.n_mem(center) == 0 {
            return Err(Error::EmptyWindow { center });
        }
        stack_clips(self.in_window(center))
    }

    pub fn retained_clips(&self) -> usize {
        self.clips.len()
    }

    /// Feature scalars currently held in memory.
    pub fn retained_scalars(&self) -> usize {
        self.clips.iter().map(|c| c.features.as_slice().len()).sum()
    }

    pub fn clips_seen(&self) -> usize {
        self.clips_seen
    }
}
