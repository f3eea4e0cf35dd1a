//! Extended HSS approximation of a CV matrix: an exact cyclic
//! block-tridiagonal band plus low-rank admissible blocks attached to the
//! nodes of a balanced merge tree over the sectors.
//!
//! All internal storage lives in angle-sorted order (rows sorted by the
//! angle of `s_i`, columns by the angle of `t_j`); the public operations take
//! and return vectors in the caller's original order.

mod solve;
mod tree;

use std::ops::Range;

use crate::cauchy::{
    admissible_generators, measure_separation, rho_for_xi, CVMatrix, LowRankBlock,
    MeasuredSeparation,
};
use crate::error::{Error, Result};
use crate::geometry::SectorPartition;
use crate::numeric::{CVec, DenseMatrix, FlopCounter, C64, ZERO};

pub use solve::hss_solve;
pub use tree::{MergeTree, SectorRun};

/// How generator lengths are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HssTarget {
    /// Every admissible block gets `ρ` expansion terms.
    FixedRho(usize),
    /// Each block gets the shortest `ρ` whose bound is at most `ξ`.
    FixedXi(f64),
}

/// Stored form of an admissible block.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    LowRank(LowRankBlock),
    /// Kept exactly when the expansion would be no shorter than the block.
    Dense(DenseMatrix),
}

/// Exact band block of sector `q`: rows of sectors `q−1, q, q+1`, columns
/// of sector `q`.
#[derive(Debug, Clone)]
pub struct BandBlock {
    pub sector: usize,
    pub rows: Vec<Range<usize>>,
    pub cols: Range<usize>,
    pub dense: DenseMatrix,
}

/// Admissible block of merge-tree node `(level, index)`.
#[derive(Debug, Clone)]
pub struct HssNode {
    pub level: usize,
    pub index: usize,
    pub rows: Vec<Range<usize>>,
    pub cols: Range<usize>,
    pub generator: Generator,
    /// Separation measured about the node's center (absent for empty blocks).
    pub separation: Option<MeasuredSeparation>,
}

impl HssNode {
    pub fn row_count(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    /// Inner dimension of the stored factors (`0` for dense storage).
    pub fn rank(&self) -> usize {
        match &self.generator {
            Generator::LowRank(b) => b.rank(),
            Generator::Dense(_) => 0,
        }
    }

    /// Inner dimension of an exact-or-`ξ` factorization as stored: the factor
    /// rank, or the smaller block dimension for dense storage.
    pub fn generator_length(&self) -> usize {
        match &self.generator {
            Generator::LowRank(b) => b.rank(),
            Generator::Dense(d) => d.rows().min(d.cols()),
        }
    }

    pub fn error_bound(&self) -> f64 {
        match &self.generator {
            Generator::LowRank(b) => b.error_bound,
            Generator::Dense(_) => 0.0,
        }
    }

    fn apply_flops(&self) -> u64 {
        let (m, n) = (self.row_count() as u64, self.cols.len() as u64);
        match &self.generator {
            Generator::LowRank(b) => (m + n) * b.rank() as u64,
            Generator::Dense(_) => m * n,
        }
    }
}

/// Extended balanced HSS approximation of a CV matrix.
#[derive(Debug, Clone)]
pub struct ExtendedHssMatrix {
    partition: SectorPartition,
    tree: MergeTree,
    s_sorted: Vec<C64>,
    t_sorted: Vec<C64>,
    band: Vec<BandBlock>,
    nodes: Vec<HssNode>,
    xi: f64,
    target: HssTarget,
    counter: FlopCounter,
}

fn run_ranges(offsets: &[usize], k: usize, runs: &[SectorRun]) -> Vec<Range<usize>> {
    let mut out: Vec<Range<usize>> = Vec::new();
    for run in runs {
        for q in run.sectors(k) {
            let r = offsets[q]..offsets[q + 1];
            if r.is_empty() {
                continue;
            }
            match out.last_mut() {
                Some(last) if last.end == r.start => last.end = r.end,
                _ => out.push(r),
            }
        }
    }
    out
}

fn gather(v: &[C64], ranges: &[Range<usize>]) -> Vec<C64> {
    ranges.iter().flat_map(|r| v[r.clone()].iter().copied()).collect()
}

/// Default sector count: the largest power of two not above `n / log₂ n`,
/// at least 16 and at most `n/2`.
pub fn default_k(n: usize) -> Result<usize> {
    if n < 32 {
        return Err(Error::InvalidParameter(format!("n = {n} is below the fast-path minimum 32")));
    }
    let target = n as f64 / (n as f64).log2();
    let mut k = 16;
    while (2 * k) as f64 <= target && 4 * k <= n {
        k *= 2;
    }
    Ok(k)
}

/// Builds the extended HSS approximation of `m` with `k` sectors.
pub fn build_extended_hss(m: &CVMatrix, k: usize, target: HssTarget) -> Result<ExtendedHssMatrix> {
    ExtendedHssMatrix::build(m, k, target)
}

impl ExtendedHssMatrix {
    pub fn build(cv: &CVMatrix, k: usize, target: HssTarget) -> Result<Self> {
        match target {
            HssTarget::FixedRho(0) => {
                return Err(Error::InvalidParameter("generator length ρ must be ≥ 1".into()))
            }
            HssTarget::FixedXi(xi) if !(xi > 0.0) => {
                return Err(Error::InvalidParameter(format!("ξ = {xi} must be positive")))
            }
            _ => {}
        }
        let partition = SectorPartition::build(cv.s(), cv.f(), cv.cols(), k)?;
        let tree = MergeTree::new(k)?;
        let s_sorted: Vec<C64> = partition.s_permutation().iter().map(|&i| cv.s()[i]).collect();
        let t_sorted: Vec<C64> = partition.t_permutation().iter().map(|&j| cv.t(j)).collect();
        let ro = partition.row_offsets();
        let co = partition.col_offsets();

        let entry = |i: usize, j: usize| -> Result<C64> {
            let d = s_sorted[i] - t_sorted[j];
            if d == ZERO {
                return Err(Error::SingularEntry {
                    row: partition.s_permutation()[i],
                    col: partition.t_permutation()[j],
                });
            }
            Ok(1.0 / d)
        };
        let dense_block = |rows: &[Range<usize>], cols: &Range<usize>| -> Result<DenseMatrix> {
            let idx: Vec<usize> = rows.iter().flat_map(|r| r.clone()).collect();
            let mut d = DenseMatrix::zeros(idx.len(), cols.len());
            for (a, &i) in idx.iter().enumerate() {
                for (b, j) in cols.clone().enumerate() {
                    d[(a, b)] = entry(i, j)?;
                }
            }
            Ok(d)
        };

        let mut band = Vec::with_capacity(k);
        for q in 0..k {
            let rows = run_ranges(ro, k, &[tree.extended(0, q)]);
            let cols = co[q]..co[q + 1];
            let dense = dense_block(&rows, &cols)?;
            band.push(BandBlock { sector: q, rows, cols, dense });
        }

        let mut nodes = Vec::new();
        let mut xi: f64 = 0.0;
        for h in 0..=tree.top() {
            for i in 0..tree.nodes_at(h) {
                let span = tree.span(h, i);
                let cols = co[span.start]..co[span.end];
                let rows = run_ranges(ro, k, &tree.admissible_runs(h, i));
                let s_far = gather(&s_sorted, &rows);
                let t_arc = &t_sorted[cols.clone()];
                let center = C64::from_polar(1.0, tree.center_angle(h, i));
                let (generator, separation) = if s_far.is_empty() || t_arc.is_empty() {
                    let empty = admissible_generators(&s_far, t_arc, center, 1)?;
                    (Generator::LowRank(empty), None)
                } else {
                    let sep = measure_separation(&s_far, t_arc, center);
                    if !(sep.theta < 1.0) {
                        return Err(Error::NotSeparated { theta: sep.theta });
                    }
                    let rho = match target {
                        HssTarget::FixedRho(r) => r,
                        HssTarget::FixedXi(x) => rho_for_xi(sep, x),
                    };
                    if rho >= s_far.len().min(t_arc.len()) {
                        (Generator::Dense(dense_block(&rows, &cols)?), Some(sep))
                    } else {
                        let block = admissible_generators(&s_far, t_arc, center, rho)?;
                        xi = xi.max(block.error_bound);
                        (Generator::LowRank(block), Some(sep))
                    }
                };
                nodes.push(HssNode { level: h, index: i, rows, cols, generator, separation });
            }
        }
        Ok(ExtendedHssMatrix {
            partition,
            tree,
            s_sorted,
            t_sorted,
            band,
            nodes,
            xi,
            target,
            counter: FlopCounter::new(),
        })
    }

    pub fn rows(&self) -> usize {
        self.s_sorted.len()
    }

    pub fn cols(&self) -> usize {
        self.t_sorted.len()
    }

    pub fn k(&self) -> usize {
        self.tree.k()
    }

    pub fn tree(&self) -> &MergeTree {
        &self.tree
    }

    pub fn partition(&self) -> &SectorPartition {
        &self.partition
    }

    pub fn band(&self) -> &[BandBlock] {
        &self.band
    }

    pub fn nodes(&self) -> &[HssNode] {
        &self.nodes
    }

    pub fn target(&self) -> HssTarget {
        self.target
    }

    /// Certified entrywise bound on `|H − C|`.
    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// Longest generator among the admissible blocks.
    pub fn max_rank(&self) -> usize {
        self.nodes.iter().map(|n| n.rank()).max().unwrap_or(0)
    }

    /// Largest [`HssNode::generator_length`].
    pub fn max_generator_length(&self) -> usize {
        self.nodes.iter().map(|n| n.generator_length()).max().unwrap_or(0)
    }

    /// Multiply-adds performed by matvecs and solves since construction or
    /// the last reset.
    pub fn flops(&self) -> u64 {
        self.counter.get()
    }

    pub fn reset_flops(&self) {
        self.counter.reset();
    }

    pub(crate) fn counter(&self) -> &FlopCounter {
        &self.counter
    }

    /// Multiply-adds charged for one matvec.
    pub fn matvec_flops(&self) -> u64 {
        let band: u64 = self.band.iter().map(|b| (b.dense.rows() * b.dense.cols()) as u64).sum();
        band + self.nodes.iter().map(|n| n.apply_flops()).sum::<u64>()
    }

    /// `H x` in angle-sorted coordinates.
    pub(crate) fn matvec_sorted(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.rows()];
        for b in &self.band {
            let xs = &x[b.cols.clone()];
            let mut a = 0;
            for r in &b.rows {
                for i in r.clone() {
                    y[i] += dot(b.dense.row(a), xs);
                    a += 1;
                }
            }
        }
        for node in &self.nodes {
            let xs = &x[node.cols.clone()];
            match &node.generator {
                Generator::LowRank(blk) => {
                    if blk.rank() == 0 {
                        continue;
                    }
                    let z = transpose_apply(&blk.g, xs);
                    let mut a = 0;
                    for r in &node.rows {
                        for i in r.clone() {
                            y[i] += dot(blk.f.row(a), &z);
                            a += 1;
                        }
                    }
                }
                Generator::Dense(d) => {
                    let mut a = 0;
                    for r in &node.rows {
                        for i in r.clone() {
                            y[i] += dot(d.row(a), xs);
                            a += 1;
                        }
                    }
                }
            }
        }
        self.counter.add(self.matvec_flops());
        y
    }

    /// `Hᵀ x` in angle-sorted coordinates.
    pub(crate) fn rmatvec_sorted(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.cols()];
        for b in &self.band {
            let xs = gather(x, &b.rows);
            let out = transpose_apply(&b.dense, &xs);
            for (yj, v) in y[b.cols.clone()].iter_mut().zip(out) {
                *yj += v;
            }
        }
        for node in &self.nodes {
            let xs = gather(x, &node.rows);
            let out = match &node.generator {
                Generator::LowRank(blk) => {
                    if blk.rank() == 0 {
                        continue;
                    }
                    let z = transpose_apply(&blk.f, &xs);
                    (0..blk.g.rows()).map(|j| dot(blk.g.row(j), &z)).collect()
                }
                Generator::Dense(d) => transpose_apply(d, &xs),
            };
            for (yj, v) in y[node.cols.clone()].iter_mut().zip(out) {
                *yj += v;
            }
        }
        self.counter.add(self.matvec_flops());
        y
    }

    fn to_sorted_cols(&self, x: &[C64]) -> Vec<C64> {
        self.partition.t_permutation().iter().map(|&j| x[j]).collect()
    }

    fn to_sorted_rows(&self, x: &[C64]) -> Vec<C64> {
        self.partition.s_permutation().iter().map(|&i| x[i]).collect()
    }

    pub(crate) fn from_sorted_rows(&self, y: Vec<C64>) -> Vec<C64> {
        let mut out = vec![ZERO; y.len()];
        for (&i, v) in self.partition.s_permutation().iter().zip(y) {
            out[i] = v;
        }
        out
    }

    pub(crate) fn from_sorted_cols(&self, y: Vec<C64>) -> Vec<C64> {
        let mut out = vec![ZERO; y.len()];
        for (&j, v) in self.partition.t_permutation().iter().zip(y) {
            out[j] = v;
        }
        out
    }

    /// `y ≈ C x`.
    pub fn matvec(&self, x: &[C64]) -> Result<CVec> {
        if x.len() != self.cols() {
            return Err(Error::DimensionMismatch { expected: self.cols(), got: x.len() });
        }
        let y = self.matvec_sorted(&self.to_sorted_cols(x));
        Ok(CVec::from_raw(self.from_sorted_rows(y)))
    }

    /// `y ≈ Cᵀ x` (plain transpose).
    pub fn rmatvec(&self, x: &[C64]) -> Result<CVec> {
        if x.len() != self.rows() {
            return Err(Error::DimensionMismatch { expected: self.rows(), got: x.len() });
        }
        let y = self.rmatvec_sorted(&self.to_sorted_rows(x));
        Ok(CVec::from_raw(self.from_sorted_cols(y)))
    }

    /// The implied dense matrix in original row/column order.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut sorted = DenseMatrix::zeros(self.rows(), self.cols());
        let mut scatter = |rows: &[Range<usize>], cols: &Range<usize>, block: &DenseMatrix| {
            let mut a = 0;
            for r in rows {
                for i in r.clone() {
                    for (b, j) in cols.clone().enumerate() {
                        sorted[(i, j)] += block[(a, b)];
                    }
                    a += 1;
                }
            }
        };
        for b in &self.band {
            scatter(&b.rows, &b.cols, &b.dense);
        }
        for node in &self.nodes {
            match &node.generator {
                Generator::LowRank(blk) => scatter(&node.rows, &node.cols, &blk.to_dense()),
                Generator::Dense(d) => scatter(&node.rows, &node.cols, d),
            }
        }
        let sp = self.partition.s_permutation();
        let tp = self.partition.t_permutation();
        let mut out = DenseMatrix::zeros(self.rows(), self.cols());
        for a in 0..self.rows() {
            for b in 0..self.cols() {
                out[(sp[a], tp[b])] = sorted[(a, b)];
            }
        }
        out
    }
}

/// `y ≈ C x` through the HSS structure.
pub fn hss_matvec(h: &ExtendedHssMatrix, x: &[C64]) -> Result<CVec> {
    h.matvec(x)
}

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Aᵀ x`.
pub(crate) fn transpose_apply(a: &DenseMatrix, x: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; a.cols()];
    for (i, &xi) in x.iter().enumerate() {
        if xi == ZERO {
            continue;
        }
        for (o, &v) in out.iter_mut().zip(a.row(i)) {
            *o += v * xi;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{dense_matvec, RngStream, ONE};
    use std::f64::consts::PI;

    fn annulus_knots(rng: &mut RngStream, m: usize, h: i32) -> CVec {
        let w = 0.5f64.powi(h);
        CVec::from_raw(
            (0..m)
                .map(|_| C64::from_polar(rng.uniform(1.0 - w, 1.0 + w), rng.uniform(0.0, 2.0 * PI)))
                .collect(),
        )
    }

    fn max_entry_dev(h: &ExtendedHssMatrix, cv: &CVMatrix) -> f64 {
        h.to_dense().sub(&cv.to_dense()).unwrap().max_abs()
    }

    #[test]
    fn default_k_values() {
        assert_eq!(default_k(32).unwrap(), 16);
        assert_eq!(default_k(512).unwrap(), 32);
        assert_eq!(default_k(1024).unwrap(), 64);
        assert_eq!(default_k(2048).unwrap(), 128);
        assert_eq!(default_k(4096).unwrap(), 256);
        assert!(default_k(16).is_err());
    }

    #[test]
    fn fixed_rho_small_case_reconstructs() {
        let mut rng = RngStream::new(1);
        let cv = CVMatrix::new(annulus_knots(&mut rng, 64, 2), ONE, 64).unwrap();
        let h = build_extended_hss(&cv, 16, HssTarget::FixedRho(8)).unwrap();
        assert!(max_entry_dev(&h, &cv) <= h.xi() + 1e-13);
    }

    #[test]
    fn fixed_xi_bound_holds_and_is_met() {
        let mut rng = RngStream::new(2);
        for &(n, k, xi) in &[(256, 32, 1e-3), (512, 32, 1e-6), (512, 64, 1e-9)] {
            let cv = CVMatrix::new(annulus_knots(&mut rng, n, 0), ONE, n).unwrap();
            let h = build_extended_hss(&cv, k, HssTarget::FixedXi(xi)).unwrap();
            assert!(h.xi() <= xi);
            let dev = max_entry_dev(&h, &cv);
            assert!(dev <= h.xi() + 1e-12, "n={n} k={k}: {dev} > {}", h.xi());
        }
    }

    #[test]
    fn rectangular_and_empty_sectors() {
        let s: Vec<C64> = (0..40).map(|i| C64::from_polar(0.8, 0.05 * i as f64)).collect();
        let cv = CVMatrix::new(CVec::from_raw(s), C64::from_polar(1.0, 0.01), 128).unwrap();
        let h = build_extended_hss(&cv, 16, HssTarget::FixedXi(1e-8)).unwrap();
        assert!(h.band().iter().any(|b| b.dense.rows() == 0));
        assert!(max_entry_dev(&h, &cv) <= h.xi() + 1e-12);
    }

    #[test]
    fn band_covers_each_row_three_times() {
        let mut rng = RngStream::new(3);
        let cv = CVMatrix::new(annulus_knots(&mut rng, 300, 1), ONE, 256).unwrap();
        let h = build_extended_hss(&cv, 32, HssTarget::FixedXi(1e-5)).unwrap();
        let mut count = vec![0; 300];
        for b in h.band() {
            for r in &b.rows {
                for i in r.clone() {
                    count[i] += 1;
                }
            }
        }
        assert!(count.iter().all(|&c| c == 3));
    }

    #[test]
    fn matvec_matches_dense_and_counts() {
        let mut rng = RngStream::new(4);
        let n = 512;
        let cv = CVMatrix::new(annulus_knots(&mut rng, n, 0), ONE, n).unwrap();
        let h = build_extended_hss(&cv, 32, HssTarget::FixedXi(1e-5)).unwrap();
        assert_eq!(h.flops(), 0);
        let x: Vec<C64> = (0..n).map(|_| C64::from_polar(1.0, rng.uniform(0.0, 2.0 * PI))).collect();
        let fast = h.matvec(&x).unwrap();
        let once = h.flops();
        assert_eq!(once, h.matvec_flops());
        h.matvec(&x).unwrap();
        assert_eq!(h.flops(), 2 * once);
        let exact = dense_matvec(&cv.to_dense(), &x).unwrap();
        for (a, b) in fast.iter().zip(exact.iter()) {
            assert!((a - b).norm() <= n as f64 * 1e-5);
        }
        assert_eq!(h.matvec(&[ONE]).unwrap_err(), Error::DimensionMismatch { expected: n, got: 1 });
        h.reset_flops();
        assert_eq!(h.flops(), 0);
    }

    #[test]
    fn transpose_matvec_matches_dense() {
        let mut rng = RngStream::new(5);
        let cv = CVMatrix::new(annulus_knots(&mut rng, 200, 1), C64::from_polar(1.0, 0.3), 256).unwrap();
        let h = build_extended_hss(&cv, 32, HssTarget::FixedXi(1e-8)).unwrap();
        let x: Vec<C64> = (0..200).map(|_| rng.complex_gaussian()).collect();
        let fast = h.rmatvec(&x).unwrap();
        let exact = dense_matvec(&h.to_dense().transpose(), &x).unwrap();
        for (a, b) in fast.iter().zip(exact.iter()) {
            assert!((a - b).norm() <= 1e-10);
        }
    }

    #[test]
    fn column_extraction_and_zero() {
        let mut rng = RngStream::new(6);
        let cv = CVMatrix::new(annulus_knots(&mut rng, 128, 0), ONE, 128).unwrap();
        let h = build_extended_hss(&cv, 16, HssTarget::FixedXi(1e-6)).unwrap();
        assert!(h.matvec(&vec![ZERO; 128]).unwrap().iter().all(|z| *z == ZERO));
        let col = h.matvec(CVec::unit(128, 17).as_slice()).unwrap();
        for i in 0..128 {
            assert!((col[i] - cv_entry_of(&cv, i, 17)).norm() <= h.xi());
        }
    }

    fn cv_entry_of(cv: &CVMatrix, i: usize, j: usize) -> C64 {
        crate::cauchy::cv_entry(cv, i, j).unwrap()
    }

    #[test]
    fn level_deltas_grow_for_circle_knots() {
        let mut rng = RngStream::new(7);
        let n = 1024;
        let s: Vec<C64> = (0..n).map(|_| C64::from_polar(1.0, rng.uniform(0.0, 2.0 * PI))).collect();
        let cv = CVMatrix::new(CVec::from_raw(s), ONE, n).unwrap();
        let k = 64;
        let h = build_extended_hss(&cv, k, HssTarget::FixedXi(1e-5)).unwrap();
        for node in h.nodes() {
            if let Some(sep) = node.separation {
                let floor = (3.0 * PI * (1 << node.level) as f64 / k as f64).sin();
                assert!(sep.delta >= floor - 1e-12, "level {}: {}", node.level, sep.delta);
            }
        }
    }
}
