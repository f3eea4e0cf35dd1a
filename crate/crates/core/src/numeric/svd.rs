//! Rank-revealing factorizations.
//!
//! The route is column-pivoted Householder QR, stopped once the trailing
//! block falls below a floor, followed by a one-sided (Hestenes) Jacobi SVD
//! of the small triangular factor. For the numerically low-rank blocks this
//! crate deals with, the QR stops after a few dozen steps, so the cost is
//! `O(m n r)` rather than cubic.

use super::{norm2, DenseMatrix, C64, ONE, ZERO};

/// How a rank tolerance is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum TolMode {
    /// Keep singular values `σ > tol`.
    Absolute,
    /// Keep singular values `σ > tol·σ_max`.
    Relative,
}

/// Thin SVD `A ≈ U diag(σ) Vᴴ`, singular values in nonincreasing order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
    /// Frobenius norm of the part of `A` dropped before the SVD stage.
    pub truncation: f64,
}

/// Truncated factorization `A ≈ F Gᵀ`.
#[derive(Debug, Clone)]
pub struct RankFactor {
    pub f: DenseMatrix,
    pub g: DenseMatrix,
    pub rank: usize,
    /// Upper bound on `‖A − F Gᵀ‖₂`.
    pub discarded: f64,
}

/// Relative QR stopping floor used by [`rank_factor`].
const QR_FLOOR: f64 = 1e-13;

/// `A ≈ F Gᵀ` keeping the singular values above `tol`.
pub fn rank_factor(a: &DenseMatrix, tol: f64, mode: TolMode) -> RankFactor {
    let (m, n) = (a.rows(), a.cols());
    let svd = truncated_svd(a, QR_FLOOR * a.frobenius());
    let smax = svd.sigma.first().copied().unwrap_or(0.0);
    let threshold = match mode {
        TolMode::Absolute => tol,
        TolMode::Relative => tol * smax,
    };
    let rank = svd.sigma.iter().take_while(|&&s| s > threshold).count();
    let f = DenseMatrix::from_fn(m, rank, |i, j| svd.u[(i, j)] * svd.sigma[j]);
    let g = DenseMatrix::from_fn(n, rank, |i, j| svd.v[(i, j)].conj());
    let next = svd.sigma.get(rank).copied().unwrap_or(0.0);
    RankFactor { f, g, rank, discarded: next + svd.truncation }
}

/// Singular values of `a`, accurate down to roughly `floor` (absolute);
/// values below the floor are not reported.
pub fn singular_values(a: &DenseMatrix, floor: f64) -> Vec<f64> {
    let qr = if a.rows() < a.cols() { PivotedQr::new(&a.transpose(), floor) } else { PivotedQr::new(a, floor) };
    jacobi_tall(qr.bt_cols(), qr.perm.len()).1
}

/// Full thin SVD by one-sided Jacobi. Intended for small matrices.
pub fn svd_jacobi(a: &DenseMatrix) -> Svd {
    truncated_svd(a, 0.0)
}

fn truncated_svd(a: &DenseMatrix, floor: f64) -> Svd {
    if a.rows() < a.cols() {
        let t = truncated_svd(&a.transpose(), floor);
        // Aᵀ = U Σ Vᴴ  ⇒  A = conj(V) Σ conj(U)ᴴ
        return Svd { u: conj(&t.v), sigma: t.sigma, v: conj(&t.u), truncation: t.truncation };
    }
    let (m, n) = (a.rows(), a.cols());
    let qr = PivotedQr::new(a, floor);
    // B = R Pᵀ is p × n; SVD of Bᵀ (tall) by Jacobi.
    let (ub_cols, sigma, w) = jacobi_tall(qr.bt_cols(), n);
    // B = conj(W) Σ Ubᵀ  ⇒  A ≈ (Q₁ conj W) Σ conj(Ub)ᴴ
    let q1 = qr.q_thin(m);
    let w_conj = conj(&w);
    let u = q1.matmul(&w_conj).expect("shapes agree");
    let v = DenseMatrix::from_fn(n, sigma.len(), |i, j| ub_cols[j][i].conj());
    Svd { u, sigma, v, truncation: qr.residual }
}

/// Thin factorization `A = Q R` with orthonormal `Q` (`m × p`) and `R`
/// (`p × n`), `p ≤ min(m, n)`. Column pivoting is folded back into `R`, so
/// `R` is triangular only up to a column permutation. Trailing columns whose
/// residual vanishes are dropped.
pub fn qr_thin(a: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let (m, n) = (a.rows(), a.cols());
    let qr = PivotedQr::new(a, 0.0);
    let mut r = DenseMatrix::zeros(qr.rank, n);
    for (c, &orig) in qr.perm.iter().enumerate() {
        for i in 0..qr.rank {
            r[(i, orig)] = qr.r_entry(i, c);
        }
    }
    (qr.q_thin(m), r)
}

fn conj(a: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)].conj())
}

struct PivotedQr {
    cols: Vec<Vec<C64>>,
    perm: Vec<usize>,
    reflectors: Vec<(Vec<C64>, f64)>,
    rank: usize,
    residual: f64,
}

impl PivotedQr {
    fn new(a: &DenseMatrix, floor: f64) -> Self {
        let (m, n) = (a.rows(), a.cols());
        let mut cols: Vec<Vec<C64>> = (0..n).map(|_| Vec::with_capacity(m)).collect();
        for i in 0..m {
            for (col, &z) in cols.iter_mut().zip(a.row(i)) {
                col.push(z);
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let mut norms: Vec<f64> = cols.iter().map(|c| norm2(c).powi(2)).collect();
        let mut reference = norms.clone();
        let mut reflectors = Vec::new();
        let steps = m.min(n);
        let mut residual = norms.iter().sum::<f64>().sqrt();
        let mut rank = 0;
        for j in 0..steps {
            residual = norms[j..].iter().sum::<f64>().sqrt();
            if residual <= floor || residual == 0.0 {
                break;
            }
            let piv = (j..n).fold(j, |b, c| if norms[c] > norms[b] { c } else { b });
            cols.swap(j, piv);
            norms.swap(j, piv);
            reference.swap(j, piv);
            perm.swap(j, piv);

            let x = &cols[j][j..];
            let xnorm = norm2(x);
            if xnorm == 0.0 {
                break;
            }
            let phase = if x[0].norm() == 0.0 { ONE } else { x[0] / x[0].norm() };
            let alpha = -phase * xnorm;
            let mut v = x.to_vec();
            v[0] -= alpha;
            let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            let tau = if vnorm2 == 0.0 { 0.0 } else { 2.0 / vnorm2 };
            cols[j][j] = alpha;
            for z in &mut cols[j][j + 1..] {
                *z = ZERO;
            }
            for c in j + 1..n {
                let col = &mut cols[c][j..];
                let w: C64 = v.iter().zip(col.iter()).map(|(vi, ci)| vi.conj() * ci).sum();
                let s = w * tau;
                for (ci, vi) in col.iter_mut().zip(&v) {
                    *ci -= s * vi;
                }
                norms[c] -= cols[c][j].norm_sqr();
                if norms[c] < 1e-10 * reference[c] || norms[c] < 0.0 {
                    norms[c] = cols[c][j + 1..].iter().map(|z| z.norm_sqr()).sum();
                    reference[c] = norms[c];
                }
            }
            reflectors.push((v, tau));
            rank = j + 1;
            residual = norms[j + 1..].iter().map(|v| v.max(0.0)).sum::<f64>().sqrt();
        }
        if rank == steps {
            residual = 0.0;
        }
        PivotedQr { cols, perm, reflectors, rank, residual }
    }

    /// Columns of `(R Pᵀ)ᵀ`, an `n × rank` matrix.
    fn bt_cols(&self) -> Vec<Vec<C64>> {
        let n = self.perm.len();
        let mut bt_cols: Vec<Vec<C64>> = vec![vec![ZERO; n]; self.rank];
        for (c, &orig) in self.perm.iter().enumerate() {
            for (i, col) in bt_cols.iter_mut().enumerate() {
                col[orig] = self.r_entry(i, c);
            }
        }
        bt_cols
    }

    fn r_entry(&self, i: usize, c: usize) -> C64 {
        if i <= c {
            self.cols[c][i]
        } else {
            ZERO
        }
    }

    /// First `rank` columns of `Q`.
    fn q_thin(&self, m: usize) -> DenseMatrix {
        let p = self.rank;
        let mut q = DenseMatrix::zeros(m, p);
        for k in 0..p {
            let mut e = vec![ZERO; m];
            e[k] = ONE;
            for (j, (v, tau)) in self.reflectors.iter().enumerate().rev() {
                let seg = &mut e[j..];
                let w: C64 = v.iter().zip(seg.iter()).map(|(vi, ei)| vi.conj() * ei).sum();
                let s = w * *tau;
                for (ei, vi) in seg.iter_mut().zip(v) {
                    *ei -= s * vi;
                }
            }
            for i in 0..m {
                q[(i, k)] = e[i];
            }
        }
        q
    }
}

/// One-sided Jacobi on the columns of a tall matrix `M` (`rows × cols.len()`).
/// Returns the left singular vectors as columns, the singular values, and
/// `W` with `M = U Σ Wᴴ`.
fn jacobi_tall(mut cols: Vec<Vec<C64>>, rows: usize) -> (Vec<Vec<C64>>, Vec<f64>, DenseMatrix) {
    let p = cols.len();
    let mut w: Vec<Vec<C64>> = (0..p)
        .map(|j| {
            let mut e = vec![ZERO; p];
            e[j] = ONE;
            e
        })
        .collect();
    for _sweep in 0..80 {
        let mut rotated = false;
        for i in 0..p {
            for j in i + 1..p {
                let alpha: f64 = cols[i].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[j].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let pc = phase.conj();
                rotate(&mut cols, i, j, c, s, pc);
                rotate(&mut w, i, j, c, s, pc);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<(usize, f64)> = cols.iter().map(|c| norm2(c)).enumerate().collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1));
    let sigma: Vec<f64> = order.iter().map(|&(_, s)| s).collect();
    let u_cols: Vec<Vec<C64>> = order
        .iter()
        .map(|&(k, s)| {
            if s > 0.0 {
                cols[k].iter().map(|z| z / s).collect()
            } else {
                vec![ZERO; rows]
            }
        })
        .collect();
    let w_mat = DenseMatrix::from_fn(p, p, |i, j| w[order[j].0][i]);
    (u_cols, sigma, w_mat)
}

fn rotate(cols: &mut [Vec<C64>], i: usize, j: usize, c: f64, s: f64, phase_conj: C64) {
    let (head, tail) = cols.split_at_mut(j);
    let a = &mut head[i];
    let b = &mut tail[0];
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let yb = *y * phase_conj;
        let xa = *x;
        *x = xa * c - yb * s;
        *y = xa * s + yb * c;
    }
}
