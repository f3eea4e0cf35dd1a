//! Cauchy matrices with root-of-unity column knots and the low-rank
//! generators of their admissible blocks.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numeric::{qr_thin, rank_factor, CVec, DenseMatrix, TolMode, C64, ZERO};

/// Implicit `m × n` matrix `C_{ij} = 1/(s_i − f·ω^j)`, `ω = exp(2πi/n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CVMatrix {
    s: CVec,
    f: C64,
    n: usize,
}

impl CVMatrix {
    pub fn new(s: CVec, f: C64, n: usize) -> Result<Self> {
        if (f.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("|f| = {} is not 1", f.norm())));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        let m = CVMatrix { s, f, n };
        for (i, &si) in m.s.iter().enumerate() {
            // only the nearest column knot can coincide with s_i
            let turns = ((si / f).arg() / (2.0 * PI) * n as f64).round() as i64;
            let j = turns.rem_euclid(n as i64) as usize;
            if si == m.t(j) {
                return Err(Error::SingularEntry { row: i, col: j });
            }
        }
        Ok(m)
    }

    pub fn s(&self) -> &CVec {
        &self.s
    }

    pub fn f(&self) -> C64 {
        self.f
    }

    pub fn rows(&self) -> usize {
        self.s.len()
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    /// Column knot `t_j = f·ω^j`.
    pub fn t(&self, j: usize) -> C64 {
        self.f * C64::from_polar(1.0, 2.0 * PI * j as f64 / self.n as f64)
    }

    pub fn t_knots(&self) -> Vec<C64> {
        (0..self.n).map(|j| self.t(j)).collect()
    }

    /// Entry without bounds or singularity checks.
    pub(crate) fn entry_unchecked(&self, i: usize, tj: C64) -> C64 {
        1.0 / (self.s[i] - tj)
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> DenseMatrix {
        let t: Vec<C64> = cols.iter().map(|&j| self.t(j)).collect();
        DenseMatrix::from_fn(rows.len(), cols.len(), |a, b| self.entry_unchecked(rows[a], t[b]))
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let t = self.t_knots();
        DenseMatrix::from_fn(self.rows(), self.n, |i, j| self.entry_unchecked(i, t[j]))
    }
}

/// Entry `(i, j)` of a CV matrix.
pub fn cv_entry(m: &CVMatrix, i: usize, j: usize) -> Result<C64> {
    if i >= m.rows() {
        return Err(Error::DimensionMismatch { expected: m.rows(), got: i });
    }
    if j >= m.cols() {
        return Err(Error::DimensionMismatch { expected: m.cols(), got: j });
    }
    let d = m.s[i] - m.t(j);
    if d == ZERO {
        return Err(Error::SingularEntry { row: i, col: j });
    }
    Ok(1.0 / d)
}

/// Outcome of [`choose_f`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChosenF {
    pub f: C64,
    /// `min_i |s_iⁿ − fⁿ|`.
    pub min_gap: f64,
    /// Whether the gap is at least `1/(2n)` with all knots in the closed unit disc.
    pub guaranteed: bool,
}

/// Picks `f = exp(πi(2ℓ+1)/(n·N))`, `ℓ < N`, maximizing `min_i |s_iⁿ − fⁿ|`.
pub fn choose_f(s: &[C64], n: usize, num_candidates: usize) -> Result<ChosenF> {
    if num_candidates == 0 || n == 0 {
        return Err(Error::InvalidParameter("need n ≥ 1 and at least one candidate".into()));
    }
    let powers: Vec<C64> = s.iter().map(|z| z.powu(n as u32)).collect();
    let mut best: Option<(C64, f64)> = None;
    for l in 0..num_candidates {
        let turn = (2 * l + 1) as f64 / (n * num_candidates) as f64;
        let fn_ = C64::from_polar(1.0, PI * turn * n as f64);
        let gap = powers.iter().map(|p| (p - fn_).norm()).fold(f64::INFINITY, f64::min);
        if best.map_or(true, |(_, g)| gap > g) {
            best = Some((C64::from_polar(1.0, PI * turn), gap));
        }
    }
    let (f, min_gap) = best.expect("at least one candidate");
    // a gap at rounding level of |s_i^n| means f^n coincides with that s_i^n
    let f_n = f.powu(n as u32);
    let collides = powers.iter().any(|p| (p - f_n).norm() <= 4.0 * n as f64 * f64::EPSILON * p.norm().max(1.0));
    if min_gap.is_nan() || collides {
        return Err(Error::ChooseFFailed);
    }
    let in_disc = s.iter().all(|z| z.norm() <= 1.0 + 1e-12);
    let guaranteed = in_disc && min_gap >= 1.0 / (2.0 * n as f64);
    if !guaranteed {
        log::warn!("choose_f: min |s^n - f^n| = {min_gap:e} without the disc guarantee");
    }
    Ok(ChosenF { f, min_gap, guaranteed })
}

/// `F Gᵀ` approximation of a Cauchy block with an entrywise error bound.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankBlock {
    pub f: DenseMatrix,
    pub g: DenseMatrix,
    pub error_bound: f64,
    pub center: C64,
}

impl LowRankBlock {
    pub fn rank(&self) -> usize {
        self.f.cols()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        self.f.mul_transpose(&self.g).expect("factor shapes agree")
    }
}

/// Measured separation of a block about `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredSeparation {
    /// `max_j |t_j − c| / min_i |s_i − c|`.
    pub theta: f64,
    /// `min_i |s_i − c|`.
    pub delta: f64,
}

pub fn measure_separation(s_far: &[C64], t_arc: &[C64], c: C64) -> MeasuredSeparation {
    let delta = s_far.iter().map(|s| (s - c).norm()).fold(f64::INFINITY, f64::min);
    let reach = t_arc.iter().map(|t| (t - c).norm()).fold(0.0, f64::max);
    MeasuredSeparation { theta: reach / delta, delta }
}

/// `θ^ρ / ((1 − θ) δ)`.
pub fn generator_bound(sep: MeasuredSeparation, rho: usize) -> f64 {
    sep.theta.powi(rho as i32) / ((1.0 - sep.theta) * sep.delta)
}

/// Smallest `ρ ≥ 1` with [`generator_bound`] `≤ xi`.
pub fn rho_for_xi(sep: MeasuredSeparation, xi: f64) -> usize {
    if sep.theta <= 0.0 {
        return 1;
    }
    let rho = ((xi * (1.0 - sep.theta) * sep.delta).ln() / sep.theta.ln()).ceil();
    if rho.is_finite() && rho > 1.0 {
        let mut rho = rho as usize;
        // guard the rounding of the logarithm ratio
        while generator_bound(sep, rho) > xi {
            rho += 1;
        }
        rho
    } else {
        1
    }
}

/// Truncated expansion of `1/(s − t)` about `c`:
/// `F_{iν} = 1/(s_i − c)^{ν+1}`, `G_{jν} = (t_j − c)^ν`, `ν < ρ`.
pub fn admissible_generators(s_far: &[C64], t_arc: &[C64], c: C64, rho: usize) -> Result<LowRankBlock> {
    if rho == 0 {
        return Err(Error::InvalidParameter("generator length ρ must be ≥ 1".into()));
    }
    if s_far.is_empty() || t_arc.is_empty() {
        return Ok(LowRankBlock {
            f: DenseMatrix::zeros(s_far.len(), 0),
            g: DenseMatrix::zeros(t_arc.len(), 0),
            error_bound: 0.0,
            center: c,
        });
    }
    let sep = measure_separation(s_far, t_arc, c);
    if !(sep.theta < 1.0) {
        return Err(Error::NotSeparated { theta: sep.theta });
    }
    let mut f = DenseMatrix::zeros(s_far.len(), rho);
    for (i, &s) in s_far.iter().enumerate() {
        let r = 1.0 / (s - c);
        let row = f.row_mut(i);
        row[0] = r;
        for nu in 1..rho {
            row[nu] = row[nu - 1] * r;
        }
    }
    let mut g = DenseMatrix::zeros(t_arc.len(), rho);
    for (j, &t) in t_arc.iter().enumerate() {
        let d = t - c;
        let row = g.row_mut(j);
        row[0] = C64::new(1.0, 0.0);
        for nu in 1..rho {
            row[nu] = row[nu - 1] * d;
        }
    }
    Ok(LowRankBlock { f, g, error_bound: generator_bound(sep, rho), center: c })
}

/// Shortens the factors, dropping singular values `≤ tol`.
pub fn recompress(b: &LowRankBlock, tol: f64) -> LowRankBlock {
    if b.rank() == 0 {
        return b.clone();
    }
    let (q1, r1) = qr_thin(&b.f);
    let (q2, r2) = qr_thin(&b.g);
    let core = r1.mul_transpose(&r2).expect("shapes agree");
    let rf = rank_factor(&core, tol, TolMode::Absolute);
    if rf.rank >= b.rank() {
        return b.clone();
    }
    LowRankBlock {
        f: q1.matmul(&rf.f).expect("shapes agree"),
        g: q2.matmul(&rf.g).expect("shapes agree"),
        error_bound: b.error_bound + rf.discarded,
        center: b.center,
    }
}
