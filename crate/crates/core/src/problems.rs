//! Polynomial evaluation and interpolation, and Cauchy matrix-vector products
//! and solves, reduced to Cauchy matrices with root-of-unity column knots.
//!
//! With `t_j = f·ω^j`, `D_s = diag(s_iⁿ − fⁿ)`, `D_ω = diag(ω^j)` and
//! `D_f = diag(f^j)`,
//!
//! ```text
//! V_s = (f^{1−n}/√n) · D_s · C_{s,f} · D_ω · Ω · D_f
//! ```
//!
//! so evaluation is an FFT, a CV matvec and three diagonal scalings, and
//! interpolation inverts each factor in turn.

use serde::{Deserialize, Serialize};

use crate::baselines::dense_vandermonde;
use crate::cauchy::{choose_f, CVMatrix};
use crate::error::{Error, Result};
use crate::hss::{default_k, hss_solve, ExtendedHssMatrix, HssTarget};
use crate::numeric::{dense_solve, CVec, DenseMatrix, C64, ZERO};
use crate::transforms::{fft_in_place, Direction, Polynomial};

/// Default size below which a dense Cauchy factor replaces the HSS one.
pub const FAST_MIN: usize = 64;

/// Relative tolerance for recognizing `t_j = t_0·ω^j`.
pub const CV_DETECT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// HSS path when the column knots are scaled roots of unity.
    #[default]
    FastIfCv,
    Dense,
}

/// What to do when the hierarchical path cannot be used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    #[default]
    Dense,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FastOptions {
    /// Entrywise generator tolerance.
    pub xi: f64,
    /// Fixed generator length; overrides `xi`.
    pub rho: Option<usize>,
    /// Sector count; [`default_k`] when absent.
    pub k: Option<usize>,
    pub mode: Mode,
    pub fallback: Fallback,
    pub refine_steps: usize,
    /// Candidates for `f`; `2n` when absent.
    pub num_candidates: Option<usize>,
    /// Smallest `n` that takes the hierarchical path (at least 32).
    pub fast_min: usize,
}

impl Default for FastOptions {
    fn default() -> Self {
        FastOptions {
            xi: 1e-12,
            rho: None,
            k: None,
            mode: Mode::FastIfCv,
            fallback: Fallback::Dense,
            refine_steps: 2,
            num_candidates: None,
            fast_min: FAST_MIN,
        }
    }
}

impl FastOptions {
    pub fn target(&self) -> HssTarget {
        match self.rho {
            Some(r) => HssTarget::FixedRho(r),
            None => HssTarget::FixedXi(self.xi),
        }
    }

    fn hss(&self, cv: &CVMatrix) -> Result<ExtendedHssMatrix> {
        let k = match self.k {
            Some(k) => k,
            None => default_k(cv.cols())?,
        };
        ExtendedHssMatrix::build(cv, k, self.target())
    }
}

fn recoverable(e: &Error) -> bool {
    matches!(e, Error::HierarchicalRegularityViolation(_) | Error::NotSeparated { .. })
}

#[derive(Debug, Clone)]
enum Engine {
    Hss(Box<ExtendedHssMatrix>),
    Dense(DenseMatrix),
}

/// Precomputed factors of `V_s` for one knot set and one power-of-two `n`.
///
/// Reusable across calls and threads.
#[derive(Debug, Clone)]
pub struct EvalPlan {
    cv: CVMatrix,
    engine: Engine,
    opts: FastOptions,
    min_gap: f64,
    /// `s_iⁿ − fⁿ`.
    d_s: Vec<C64>,
    /// `ω^j`.
    omega: Vec<C64>,
    /// `f^j`.
    f_pow: Vec<C64>,
    /// `f^{1−n}/n`.
    scale: C64,
}

impl EvalPlan {
    pub fn new(s: &[C64], n: usize, opts: &FastOptions) -> Result<Self> {
        if !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        if let Some(i) = s.iter().position(|z| !z.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let s_max = s.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if s_max > 2.0 {
            log::warn!("max |s_i| = {s_max:.3} > 2; the scaling by s_i^n - f^n loses accuracy");
        }
        let chosen = choose_f(s, n, opts.num_candidates.unwrap_or(2 * n))?;
        let f = chosen.f;
        let phi = f.arg();
        let f_pow: Vec<C64> = (0..n).map(|j| C64::from_polar(1.0, j as f64 * phi)).collect();
        let f_n = C64::from_polar(1.0, n as f64 * phi);
        let d_s: Vec<C64> = s.iter().map(|z| z.powu(n as u32) - f_n).collect();
        let omega = crate::transforms::roots_of_unity(n);
        let scale = C64::from_polar(1.0 / n as f64, (1.0 - n as f64) * phi);
        let cv = CVMatrix::new(CVec::from_raw(s.to_vec()), f, n)?;
        let engine = Self::engine(&cv, opts)?;
        Ok(EvalPlan { cv, engine, opts: *opts, min_gap: chosen.min_gap, d_s, omega, f_pow, scale })
    }

    fn engine(cv: &CVMatrix, opts: &FastOptions) -> Result<Engine> {
        if opts.mode == Mode::Dense || cv.cols() < opts.fast_min.max(32) || cv.rows() == 0 {
            return Ok(Engine::Dense(cv.to_dense()));
        }
        match opts.hss(cv) {
            Ok(h) => Ok(Engine::Hss(Box::new(h))),
            Err(e) if recoverable(&e) && opts.fallback == Fallback::Dense => {
                log::warn!("HSS construction failed ({e}); using the dense Cauchy factor");
                Ok(Engine::Dense(cv.to_dense()))
            }
            Err(e) => Err(e),
        }
    }

    /// Number of knots `m`.
    pub fn m(&self) -> usize {
        self.cv.rows()
    }

    /// Number of coefficients `n`.
    pub fn n(&self) -> usize {
        self.cv.cols()
    }

    pub fn f(&self) -> C64 {
        self.cv.f()
    }

    /// `min_i |s_iⁿ − fⁿ|`.
    pub fn min_gap(&self) -> f64 {
        self.min_gap
    }

    pub fn cauchy(&self) -> &CVMatrix {
        &self.cv
    }

    /// The HSS factor, if the fast path is in use.
    pub fn hss(&self) -> Option<&ExtendedHssMatrix> {
        match &self.engine {
            Engine::Hss(h) => Some(h),
            Engine::Dense(_) => None,
        }
    }

    pub fn is_fast(&self) -> bool {
        self.hss().is_some()
    }

    fn c_apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        match &self.engine {
            Engine::Hss(h) => Ok(h.matvec(x)?.into_inner()),
            Engine::Dense(c) => Ok(crate::numeric::dense_matvec(c, x)?.into_inner()),
        }
    }

    fn c_apply_transpose(&self, x: &[C64]) -> Result<Vec<C64>> {
        match &self.engine {
            Engine::Hss(h) => Ok(h.rmatvec(x)?.into_inner()),
            Engine::Dense(c) => Ok(crate::hss::transpose_apply(c, x)),
        }
    }

    fn c_solve(&self, w: &[C64]) -> Result<Vec<C64>> {
        match &self.engine {
            Engine::Hss(h) => match hss_solve(h, w, self.opts.refine_steps) {
                Ok(u) => Ok(u.into_inner()),
                Err(e) if recoverable(&e) && self.opts.fallback == Fallback::Dense => {
                    log::warn!("HSS solve failed ({e}); using the dense Cauchy factor");
                    Ok(dense_solve(&self.cv.to_dense(), w)?.x.into_inner())
                }
                Err(e) => Err(e),
            },
            Engine::Dense(c) => Ok(dense_solve(c, w)?.x.into_inner()),
        }
    }

    /// `V_s p` for at most `n` coefficients (zero-padded).
    pub fn eval(&self, coeffs: &[C64]) -> Result<CVec> {
        let n = self.n();
        if coeffs.len() > n {
            return Err(Error::DimensionMismatch { expected: n, got: coeffs.len() });
        }
        let mut y = vec![ZERO; n];
        for (j, &c) in coeffs.iter().enumerate() {
            y[j] = c * self.f_pow[j];
        }
        fft_in_place(&mut y, Direction::Forward)?;
        for (z, w) in y.iter_mut().zip(&self.omega) {
            *z *= w;
        }
        let mut v = self.c_apply(&y)?;
        for (z, d) in v.iter_mut().zip(&self.d_s) {
            *z *= self.scale * d;
        }
        Ok(CVec::from_raw(v))
    }

    /// `V_sᵀ x`, of length `n`.
    pub fn eval_transpose(&self, x: &[C64]) -> Result<CVec> {
        if x.len() != self.m() {
            return Err(Error::DimensionMismatch { expected: self.m(), got: x.len() });
        }
        let z: Vec<C64> = x.iter().zip(&self.d_s).map(|(a, d)| a * d).collect();
        let mut y = self.c_apply_transpose(&z)?;
        for (a, w) in y.iter_mut().zip(&self.omega) {
            *a *= w;
        }
        fft_in_place(&mut y, Direction::Forward)?;
        for (a, fj) in y.iter_mut().zip(&self.f_pow) {
            *a *= self.scale * fj;
        }
        Ok(CVec::from_raw(y))
    }

    /// Coefficients `p` with `V_s p = v`; needs `m = n`.
    pub fn solve(&self, v: &[C64]) -> Result<CVec> {
        let n = self.n();
        if self.m() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.m() });
        }
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
        let w: Vec<C64> = v.iter().zip(&self.d_s).map(|(a, d)| a / d).collect();
        let mut u = self.c_solve(&w)?;
        for (a, o) in u.iter_mut().zip(&self.omega) {
            *a *= o.conj();
        }
        fft_in_place(&mut u, Direction::Inverse)?;
        // n f^{n−1} = 1/scale
        let inv_scale = 1.0 / self.scale;
        for (a, fj) in u.iter_mut().zip(&self.f_pow) {
            *a *= inv_scale * fj.conj();
        }
        Ok(CVec::from_raw(u))
    }
}

/// `v_i ≈ p(s_i)`.
///
/// The coefficient vector is zero-padded to the next power of two `n`; the
/// hierarchical path is used for `n ≥ opts.fast_min`.
pub fn polyeval_fast(p: &Polynomial, s: &[C64], opts: &FastOptions) -> Result<CVec> {
    if s.is_empty() {
        return Ok(CVec::zeros(0));
    }
    let n = p.len().max(1).next_power_of_two();
    EvalPlan::new(s, n, opts)?.eval(p.coeffs())
}

/// Output of [`polyinterp_fast`].
#[derive(Debug, Clone, PartialEq)]
pub struct Interpolation {
    pub poly: Polynomial,
    /// `‖V_s p − v‖₂/‖v‖₂` with `V_s p` from [`polyeval_fast`].
    pub residual: f64,
}

/// Index pair of two equal entries, if any.
pub fn find_duplicate(z: &[C64]) -> Option<(usize, usize)> {
    let mut idx: Vec<usize> = (0..z.len()).collect();
    idx.sort_by(|&a, &b| {
        z[a].re.total_cmp(&z[b].re).then(z[a].im.total_cmp(&z[b].im))
    });
    idx.windows(2).find(|w| z[w[0]] == z[w[1]]).map(|w| (w[0].min(w[1]), w[0].max(w[1])))
}

/// Polynomial `p` of degree below `m` with `p(s_i) = v_i`.
///
/// Power-of-two `m` goes through the Cauchy reduction; other sizes solve the
/// dense Vandermonde system.
pub fn polyinterp_fast(v: &[C64], s: &[C64], opts: &FastOptions) -> Result<Interpolation> {
    let m = s.len();
    if v.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: v.len() });
    }
    if m == 0 {
        return Err(Error::InvalidParameter("interpolation needs at least one knot".into()));
    }
    if let Some((i, j)) = find_duplicate(s) {
        return Err(Error::DuplicateKnots(i, j));
    }
    if m == 1 {
        return Ok(Interpolation { poly: Polynomial::from_vec(vec![v[0]]), residual: 0.0 });
    }
    let (poly, fit) = if m.is_power_of_two() {
        let plan = EvalPlan::new(s, m, opts)?;
        let poly = Polynomial::from_vec(plan.solve(v)?.into_inner());
        let fit = plan.eval(poly.coeffs())?;
        (poly, fit)
    } else {
        let coeffs = dense_solve(&dense_vandermonde(s, m), v)?.x;
        let poly = Polynomial::from_vec(coeffs.into_inner());
        let fit = polyeval_fast(&poly, s, opts)?;
        (poly, fit)
    };
    let vn = crate::numeric::norm2(v);
    let diff: Vec<C64> = fit.iter().zip(v).map(|(a, b)| a - b).collect();
    let residual = if vn == 0.0 { crate::numeric::norm2(&diff) } else { crate::numeric::norm2(&diff) / vn };
    Ok(Interpolation { poly, residual })
}

/// `f` with `t_j = f·ω^j` (within [`CV_DETECT_TOL`]), if such a unit `f` exists.
pub fn detect_cv(t: &[C64]) -> Option<C64> {
    let t0 = *t.first()?;
    if (t0.norm() - 1.0).abs() > CV_DETECT_TOL {
        return None;
    }
    let n = t.len();
    let omega = crate::transforms::roots_of_unity(n);
    t.iter().zip(&omega).all(|(&tj, &w)| (tj / t0 - w).norm() <= CV_DETECT_TOL).then_some(t0)
}

fn check_finite(z: &[C64]) -> Result<()> {
    match z.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

fn dense_cauchy(s: &[C64], t: &[C64]) -> Result<DenseMatrix> {
    let mut c = DenseMatrix::zeros(s.len(), t.len());
    for (i, &si) in s.iter().enumerate() {
        for (j, &tj) in t.iter().enumerate() {
            let d = si - tj;
            if d == ZERO {
                return Err(Error::SingularEntry { row: i, col: j });
            }
            c[(i, j)] = 1.0 / d;
        }
    }
    Ok(c)
}

fn fast_cv(s: &[C64], t: &[C64], opts: &FastOptions) -> Option<CVMatrix> {
    if opts.mode != Mode::FastIfCv || t.len() < opts.fast_min.max(32) || s.is_empty() {
        return None;
    }
    let f = detect_cv(t)?;
    CVMatrix::new(CVec::from_raw(s.to_vec()), f, t.len()).ok()
}

/// `v_i = Σ_j u_j/(s_i − t_j)`.
pub fn cauchy_matvec(s: &[C64], t: &[C64], u: &[C64], opts: &FastOptions) -> Result<CVec> {
    if u.len() != t.len() {
        return Err(Error::DimensionMismatch { expected: t.len(), got: u.len() });
    }
    check_finite(s)?;
    check_finite(t)?;
    if let Some(cv) = fast_cv(s, t, opts) {
        match opts.hss(&cv) {
            Ok(h) => return h.matvec(u),
            Err(e) if recoverable(&e) && opts.fallback == Fallback::Dense => {
                log::warn!("HSS construction failed ({e}); using the dense product");
            }
            Err(e) => return Err(e),
        }
    }
    let c = dense_cauchy(s, t)?;
    crate::numeric::dense_matvec(&c, u)
}

/// `u` with `Σ_j u_j/(s_i − t_j) = v_i`; needs as many row as column knots,
/// all distinct.
pub fn cauchy_solve(s: &[C64], t: &[C64], v: &[C64], opts: &FastOptions) -> Result<CVec> {
    let n = t.len();
    if s.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: s.len() });
    }
    if v.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: v.len() });
    }
    check_finite(s)?;
    check_finite(t)?;
    if let Some((i, j)) = find_duplicate(s) {
        return Err(Error::DuplicateKnots(i, j));
    }
    if let Some((i, j)) = find_duplicate(t) {
        return Err(Error::DuplicateKnots(i, j));
    }
    if n == 1 {
        let d = s[0] - t[0];
        if d == ZERO {
            return Err(Error::SingularEntry { row: 0, col: 0 });
        }
        return Ok(CVec::from_raw(vec![v[0] * d]));
    }
    if let Some(cv) = fast_cv(s, t, opts) {
        let attempt = opts.hss(&cv).and_then(|h| hss_solve(&h, v, opts.refine_steps));
        match attempt {
            Ok(u) => return Ok(u),
            Err(e) if recoverable(&e) && opts.fallback == Fallback::Dense => {
                log::warn!("HSS solve failed ({e}); using the dense solver");
            }
            Err(e) => return Err(e),
        }
    }
    let c = dense_cauchy(s, t)?;
    Ok(dense_solve(&c, v)?.x)
}

/// `y_j = Σ_i x_i s_i^j` for `j < n`.
pub fn vandermonde_transpose_matvec(s: &[C64], x: &[C64], n: usize, opts: &FastOptions) -> Result<CVec> {
    if x.len() != s.len() {
        return Err(Error::DimensionMismatch { expected: s.len(), got: x.len() });
    }
    if n == 0 {
        return Ok(CVec::zeros(0));
    }
    if s.is_empty() {
        return Ok(CVec::zeros(n));
    }
    let plan = EvalPlan::new(s, n.next_power_of_two(), opts)?;
    let mut y = plan.eval_transpose(x)?.into_inner();
    y.truncate(n);
    Ok(CVec::from_raw(y))
}
