use crate::error::{Error, Result};

/// Balanced binary merge tree over `k = 2^{l+}` sectors in circular order.
///
/// Node `(h, i)` at level `h` spans sectors `[i·2^h, (i+1)·2^h)`. Levels run
/// from the leaves `h = 0` to `top = log₂k − 3`, the last level at which the
/// sectors split into at least six (here exactly eight) runs.
///
/// The extended set of a node adds one same-level neighbour on each side,
/// cyclically. The admissible rows of a node are the sectors inside its
/// parent's extended set but outside its own (all sectors outside the
/// extended set at the top level). Together with the leaf band these sets
/// tile every block column exactly once.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MergeTree {
    k: usize,
    top: usize,
}

/// A cyclic run of sectors `start, start+1, …` of length `count` (mod `k`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SectorRun {
    pub start: isize,
    pub count: usize,
}

impl MergeTree {
    pub fn new(k: usize) -> Result<Self> {
        if !k.is_power_of_two() || k < 16 {
            return Err(Error::InvalidPartition(format!(
                "merge tree needs a power of two k ≥ 16, got {k}"
            )));
        }
        Ok(MergeTree { k, top: k.trailing_zeros() as usize - 3 })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Highest level index.
    pub fn top(&self) -> usize {
        self.top
    }

    pub fn nodes_at(&self, h: usize) -> usize {
        self.k >> h
    }

    /// Sectors spanned by node `(h, i)`.
    pub fn span(&self, h: usize, i: usize) -> std::ops::Range<usize> {
        (i << h)..((i + 1) << h)
    }

    /// Extended set of node `(h, i)`.
    pub fn extended(&self, h: usize, i: usize) -> SectorRun {
        SectorRun { start: ((i as isize) - 1) << h, count: 3 << h }
    }

    /// Admissible row sectors of node `(h, i)`.
    pub fn admissible_runs(&self, h: usize, i: usize) -> Vec<SectorRun> {
        let w = 1isize << h;
        let i = i as isize;
        if h == self.top {
            return vec![SectorRun { start: (i + 2) * w, count: self.k - (3 << h) }];
        }
        if i % 2 == 0 {
            vec![SectorRun { start: (i - 2) * w, count: 1 << h }, SectorRun {
                start: (i + 2) * w,
                count: 2 << h,
            }]
        } else {
            vec![SectorRun { start: (i - 3) * w, count: 2 << h }, SectorRun {
                start: (i + 2) * w,
                count: 1 << h,
            }]
        }
    }

    /// Unit vector pointing at the midpoint of the arc spanned by `(h, i)`.
    pub fn center_angle(&self, h: usize, i: usize) -> f64 {
        let mid = (i << h) as f64 + (1usize << h) as f64 / 2.0;
        2.0 * std::f64::consts::PI * mid / self.k as f64
    }
}

impl SectorRun {
    /// Sector indices of the run, reduced mod `k`.
    pub fn sectors(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.count).map(move |d| (self.start + d as isize).rem_euclid(k as isize) as usize)
    }
}
