//! Recursive block solver for square extended HSS matrices.
//!
//! The solver tree halves runs of sectors. Row and column index sets of a
//! solver node are the same sorted positions, so every node is square. A
//! node with children `a`, `b` is written as
//!
//! ```text
//! A = diag(A_a, A_b) + 𝐔 𝐕ᵀ,   𝐔 = diag(U_ab, U_ba),   𝐕ᵀ = [[0, V_abᵀ], [V_baᵀ, 0]]
//! ```
//!
//! where `U_ab V_abᵀ = A[I_a, J_b]` is assembled from the band and admissible
//! terms and recompressed. The Woodbury identity reduces a solve with `A` to
//! solves with the children plus one small capacitance system
//! `K = I + 𝐕ᵀ diag(A_a, A_b)⁻¹ 𝐔`.

use std::ops::Range;

use super::{ExtendedHssMatrix, Generator};
use crate::error::{Error, Result};
use crate::numeric::{qr_thin, rank_factor, CVec, DenseMatrix, LuFactor, TolMode, C64, ZERO};

/// Leaves span at most this many sectors.
const LEAF_SECTORS: usize = 6;
/// Leaves have at most this many unknowns.
const LEAF_DIM: usize = 96;
/// Relative truncation of the coupling blocks.
const COUPLING_TOL: f64 = 1e-13;
/// Residual above which the solve is reported as failed.
const RESIDUAL_LIMIT: f64 = 1e-6;

/// `y[rows[a], cols[b]] += (u vᵀ)[a, b]` for a piece of `H[I, J]`, with
/// `rows`/`cols` local to `I`/`J`.
struct Term {
    rows: Vec<usize>,
    u: DenseMatrix,
    cols: Vec<usize>,
    v: DenseMatrix,
}

fn local_positions(ranges: &[Range<usize>], within: &Range<usize>) -> (Vec<usize>, Vec<usize>) {
    let (mut in_block, mut local) = (Vec::new(), Vec::new());
    let mut offset = 0;
    for r in ranges {
        let lo = r.start.max(within.start);
        let hi = r.end.min(within.end);
        for p in lo..hi {
            in_block.push(offset + p - r.start);
            local.push(p - within.start);
        }
        offset += r.len();
    }
    (in_block, local)
}

fn select_rows(a: &DenseMatrix, rows: &[usize]) -> DenseMatrix {
    DenseMatrix::from_fn(rows.len(), a.cols(), |i, j| a[(rows[i], j)])
}

fn dense_term(d: &DenseMatrix, rb: &[usize], rl: Vec<usize>, cb: &[usize], cl: Vec<usize>) -> Term {
    let block = DenseMatrix::from_fn(rb.len(), cb.len(), |a, b| d[(rb[a], cb[b])]);
    if rb.len() <= cb.len() {
        Term { rows: rl, u: DenseMatrix::identity(rb.len()), cols: cl, v: block.transpose() }
    } else {
        Term { rows: rl, u: block, cols: cl, v: DenseMatrix::identity(cb.len()) }
    }
}

/// Pieces of `H[I, J]` in sorted coordinates.
fn terms(h: &ExtendedHssMatrix, i_rng: &Range<usize>, j_rng: &Range<usize>) -> Vec<Term> {
    let mut out = Vec::new();
    let overlaps = |c: &Range<usize>| c.start < j_rng.end && j_rng.start < c.end;
    let one_col = |c: &Range<usize>| -> (Vec<usize>, Vec<usize>) {
        local_positions(std::slice::from_ref(c), j_rng)
    };
    for b in h.band() {
        if !overlaps(&b.cols) {
            continue;
        }
        let (rb, rl) = local_positions(&b.rows, i_rng);
        if rb.is_empty() {
            continue;
        }
        let (cb, cl) = one_col(&b.cols);
        out.push(dense_term(&b.dense, &rb, rl, &cb, cl));
    }
    for node in h.nodes() {
        if !overlaps(&node.cols) {
            continue;
        }
        let (rb, rl) = local_positions(&node.rows, i_rng);
        if rb.is_empty() {
            continue;
        }
        let (cb, cl) = one_col(&node.cols);
        match &node.generator {
            Generator::Dense(d) => out.push(dense_term(d, &rb, rl, &cb, cl)),
            Generator::LowRank(blk) => {
                if blk.rank() == 0 {
                    continue;
                }
                if blk.rank() >= rb.len().min(cb.len()) {
                    out.push(dense_term(&blk.to_dense(), &rb, rl, &cb, cl));
                } else {
                    out.push(Term {
                        rows: rl,
                        u: select_rows(&blk.f, &rb),
                        cols: cl,
                        v: select_rows(&blk.g, &cb),
                    });
                }
            }
        }
    }
    out
}

fn assemble_dense(h: &ExtendedHssMatrix, i_rng: &Range<usize>, j_rng: &Range<usize>) -> DenseMatrix {
    let mut d = DenseMatrix::zeros(i_rng.len(), j_rng.len());
    for t in terms(h, i_rng, j_rng) {
        let prod = t.u.mul_transpose(&t.v).expect("term shapes agree");
        for (a, &i) in t.rows.iter().enumerate() {
            for (b, &j) in t.cols.iter().enumerate() {
                d[(i, j)] += prod[(a, b)];
            }
        }
    }
    d
}

/// `H[I, J] ≈ U Vᵀ` with short factors. Returns the flops spent.
fn assemble_low_rank(
    h: &ExtendedHssMatrix,
    i_rng: &Range<usize>,
    j_rng: &Range<usize>,
) -> (DenseMatrix, DenseMatrix, u64) {
    let ts = terms(h, i_rng, j_rng);
    let r: usize = ts.iter().map(|t| t.u.cols()).sum();
    let mut u = DenseMatrix::zeros(i_rng.len(), r);
    let mut v = DenseMatrix::zeros(j_rng.len(), r);
    let mut c0 = 0;
    for t in &ts {
        let w = t.u.cols();
        for (a, &i) in t.rows.iter().enumerate() {
            u.row_mut(i)[c0..c0 + w].copy_from_slice(t.u.row(a));
        }
        for (b, &j) in t.cols.iter().enumerate() {
            v.row_mut(j)[c0..c0 + w].copy_from_slice(t.v.row(b));
        }
        c0 += w;
    }
    if r == 0 {
        return (u, v, 0);
    }
    let (q1, r1) = qr_thin(&u);
    let (q2, r2) = qr_thin(&v);
    let core = r1.mul_transpose(&r2).expect("shapes agree");
    let rf = rank_factor(&core, COUPLING_TOL, TolMode::Relative);
    let (m, n, r) = (i_rng.len() as u64, j_rng.len() as u64, r as u64);
    let flops = 2 * (m + n) * r * r + 2 * r * r * r + (m + n) * r * rf.rank as u64;
    (q1.matmul(&rf.f).expect("shapes"), q2.matmul(&rf.g).expect("shapes"), flops)
}

enum Kind {
    Leaf(LuFactor),
    Split {
        left: Box<SolverNode>,
        right: Box<SolverNode>,
        /// `A_a⁻¹ U_ab`
        z_a: DenseMatrix,
        /// `A_b⁻¹ U_ba`
        z_b: DenseMatrix,
        v_ab: DenseMatrix,
        v_ba: DenseMatrix,
        capacitance: LuFactor,
    },
}

struct SolverNode {
    range: Range<usize>,
    kind: Kind,
}

fn rows_of(a: &DenseMatrix, r: Range<usize>) -> DenseMatrix {
    DenseMatrix::from_fn(r.len(), a.cols(), |i, j| a[(r.start + i, j)])
}

/// `aᵀ b`.
fn tmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(a.cols(), b.cols());
    for l in 0..a.rows() {
        let (ar, br) = (a.row(l), b.row(l));
        for (i, &x) in ar.iter().enumerate() {
            if x == ZERO {
                continue;
            }
            for (o, &y) in out.row_mut(i).iter_mut().zip(br) {
                *o += x * y;
            }
        }
    }
    out
}

impl SolverNode {
    fn build(h: &ExtendedHssMatrix, sectors: Range<usize>, flops: &mut u64) -> Result<Self> {
        let co = h.partition().col_offsets();
        let range = co[sectors.start]..co[sectors.end];
        let violation = |what: &str| {
            Error::HierarchicalRegularityViolation(format!(
                "{what} singular on sectors {}..{}",
                sectors.start, sectors.end
            ))
        };
        if sectors.len() <= LEAF_SECTORS || range.len() <= LEAF_DIM {
            let d = assemble_dense(h, &range, &range);
            let lu = LuFactor::new(&d).map_err(|_| violation("leaf block"))?;
            *flops += lu.factor_flops();
            return Ok(SolverNode { range, kind: Kind::Leaf(lu) });
        }
        let mid = (sectors.start + sectors.end) / 2;
        let left = Box::new(SolverNode::build(h, sectors.start..mid, flops)?);
        let right = Box::new(SolverNode::build(h, mid..sectors.end, flops)?);
        let (u_ab, v_ab, f1) = assemble_low_rank(h, &left.range, &right.range);
        let (u_ba, v_ba, f2) = assemble_low_rank(h, &right.range, &left.range);
        *flops += f1 + f2;
        let z_a = left.apply(&u_ab, flops);
        let z_b = right.apply(&u_ba, flops);
        let (r1, r2) = (z_a.cols(), z_b.cols());
        let mut k = DenseMatrix::identity(r1 + r2);
        let top = tmul(&v_ab, &z_b);
        let bottom = tmul(&v_ba, &z_a);
        *flops += (v_ab.rows() * r1 * r2 + v_ba.rows() * r1 * r2) as u64;
        for i in 0..r1 {
            k.row_mut(i)[r1..].copy_from_slice(top.row(i));
        }
        for i in 0..r2 {
            k.row_mut(r1 + i)[..r1].copy_from_slice(bottom.row(i));
        }
        let capacitance = LuFactor::new(&k).map_err(|_| violation("capacitance system"))?;
        *flops += capacitance.factor_flops();
        Ok(SolverNode { range, kind: Kind::Split { left, right, z_a, z_b, v_ab, v_ba, capacitance } })
    }

    /// `A⁻¹ Y` for a block of right-hand sides.
    fn apply(&self, y: &DenseMatrix, flops: &mut u64) -> DenseMatrix {
        let p = y.cols() as u64;
        match &self.kind {
            Kind::Leaf(lu) => {
                let mut x = y.clone();
                lu.solve_in_place(&mut x);
                let d = lu.dim() as u64;
                *flops += d * d * p;
                x
            }
            Kind::Split { left, right, z_a, z_b, v_ab, v_ba, capacitance } => {
                let na = left.range.len();
                let w_a = left.apply(&rows_of(y, 0..na), flops);
                let w_b = right.apply(&rows_of(y, na..y.rows()), flops);
                let (r1, r2) = (z_a.cols(), z_b.cols());
                let mut t = DenseMatrix::zeros(r1 + r2, y.cols());
                let top = tmul(v_ab, &w_b);
                let bottom = tmul(v_ba, &w_a);
                for i in 0..r1 {
                    t.row_mut(i).copy_from_slice(top.row(i));
                }
                for i in 0..r2 {
                    t.row_mut(r1 + i).copy_from_slice(bottom.row(i));
                }
                capacitance.solve_in_place(&mut t);
                let s_a = rows_of(&t, 0..r1);
                let s_b = rows_of(&t, r1..r1 + r2);
                let corr_a = z_a.matmul(&s_a).expect("shapes");
                let corr_b = z_b.matmul(&s_b).expect("shapes");
                let nb = self.range.len() - na;
                let r = (r1 + r2) as u64;
                *flops += p * ((nb as u64) * r1 as u64 + (na as u64) * r2 as u64 + r * r)
                    + p * ((na as u64) * r1 as u64 + (nb as u64) * r2 as u64);
                let mut x = DenseMatrix::zeros(self.range.len(), y.cols());
                for i in 0..na {
                    for (o, (a, c)) in x.row_mut(i).iter_mut().zip(w_a.row(i).iter().zip(corr_a.row(i))) {
                        *o = a - c;
                    }
                }
                for i in 0..nb {
                    let row = x.row_mut(na + i);
                    for (o, (a, c)) in row.iter_mut().zip(w_b.row(i).iter().zip(corr_b.row(i))) {
                        *o = a - c;
                    }
                }
                x
            }
        }
    }

    fn solve_vec(&self, b: &[C64], flops: &mut u64) -> Vec<C64> {
        let y = DenseMatrix::from_fn(b.len(), 1, |i, _| b[i]);
        self.apply(&y, flops).column(0)
    }
}

fn rel_residual(h: &ExtendedHssMatrix, x: &[C64], b: &[C64]) -> (Vec<C64>, f64) {
    let hx = h.matvec_sorted(x);
    let r: Vec<C64> = b.iter().zip(&hx).map(|(bi, yi)| bi - yi).collect();
    let bn = crate::numeric::norm2(b);
    let rel = if bn == 0.0 { 0.0 } else { crate::numeric::norm2(&r) / bn };
    (r, rel)
}

/// Solves `H x = b` for square `H`, followed by `refine_steps` rounds of
/// iterative refinement against the fast matvec.
///
/// Fails with [`Error::HierarchicalRegularityViolation`] when a leaf or
/// capacitance system is singular to working precision, or when the final
/// relative residual exceeds `1e-6`.
pub fn hss_solve(h: &ExtendedHssMatrix, b: &[C64], refine_steps: usize) -> Result<CVec> {
    if h.rows() != h.cols() {
        return Err(Error::InvalidParameter(format!(
            "solve needs a square matrix, got {}×{}",
            h.rows(),
            h.cols()
        )));
    }
    if b.len() != h.rows() {
        return Err(Error::DimensionMismatch { expected: h.rows(), got: b.len() });
    }
    if b.iter().all(|&z| z == ZERO) {
        return Ok(CVec::zeros(b.len()));
    }
    let mut flops = 0;
    let root = SolverNode::build(h, 0..h.k(), &mut flops)?;
    let b_sorted: Vec<C64> = h.partition().s_permutation().iter().map(|&i| b[i]).collect();
    let mut x = root.solve_vec(&b_sorted, &mut flops);
    let (mut r, mut rel) = rel_residual(h, &x, &b_sorted);
    for _ in 0..refine_steps {
        let dx = root.solve_vec(&r, &mut flops);
        for (xi, d) in x.iter_mut().zip(dx) {
            *xi += d;
        }
        (r, rel) = rel_residual(h, &x, &b_sorted);
    }
    h.counter().add(flops);
    if !(rel <= RESIDUAL_LIMIT) {
        return Err(Error::HierarchicalRegularityViolation(format!(
            "relative residual {rel:e} after {refine_steps} refinement steps"
        )));
    }
    // sorted column positions back to original column order
    Ok(CVec::from_raw(h.from_sorted_cols(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cauchy::CVMatrix;
    use crate::hss::{build_extended_hss, HssTarget};
    use crate::numeric::{dense_matvec, norm2, RngStream, ONE};
    use std::f64::consts::PI;

    fn perturbed_roots(rng: &mut RngStream, n: usize) -> CVec {
        CVec::from_raw(
            (0..n)
                .map(|i| {
                    let eta = rng.uniform(-0.25, 0.25);
                    C64::from_polar(1.0, 2.0 * PI * (i as f64 + 0.5 + eta) / n as f64)
                })
                .collect(),
        )
    }

    fn rel_err(a: &[C64], b: &[C64]) -> f64 {
        let d: Vec<C64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        norm2(&d) / norm2(b)
    }

    #[test]
    fn manufactured_solution_256() {
        let mut rng = RngStream::new(40);
        let n = 256;
        let cv = CVMatrix::new(perturbed_roots(&mut rng, n), ONE, n).unwrap();
        let h = build_extended_hss(&cv, 16, HssTarget::FixedXi(1e-10)).unwrap();
        let x0: Vec<C64> = (0..n).map(|_| rng.complex_gaussian()).collect();
        let b = dense_matvec(&cv.to_dense(), &x0).unwrap();
        let x = hss_solve(&h, &b, 1).unwrap();
        assert!(rel_err(&x, &x0) <= 1e-6, "{}", rel_err(&x, &x0));
    }

    #[test]
    fn residual_against_dense_512() {
        let mut rng = RngStream::new(41);
        let n = 512;
        let cv = CVMatrix::new(perturbed_roots(&mut rng, n), ONE, n).unwrap();
        let h = build_extended_hss(&cv, 32, HssTarget::FixedXi(1e-12)).unwrap();
        let b: Vec<C64> = (0..n).map(|_| rng.complex_gaussian()).collect();
        let x = hss_solve(&h, &b, 2).unwrap();
        let cx = dense_matvec(&cv.to_dense(), &x).unwrap();
        assert!(rel_err(&cx, &b) <= 1e-8, "{}", rel_err(&cx, &b));
    }

    #[test]
    fn zero_rhs_and_shape_errors() {
        let mut rng = RngStream::new(42);
        let cv = CVMatrix::new(perturbed_roots(&mut rng, 64), ONE, 64).unwrap();
        let h = build_extended_hss(&cv, 16, HssTarget::FixedXi(1e-10)).unwrap();
        assert!(hss_solve(&h, &vec![ZERO; 64], 1).unwrap().iter().all(|z| *z == ZERO));
        assert!(hss_solve(&h, &[ONE], 1).is_err());
        let rect = CVMatrix::new(perturbed_roots(&mut rng, 40), ONE, 64).unwrap();
        let h = build_extended_hss(&rect, 16, HssTarget::FixedXi(1e-10)).unwrap();
        assert!(matches!(hss_solve(&h, &vec![ONE; 40], 1), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn consistent_with_fast_matvec() {
        let mut rng = RngStream::new(43);
        let n = 1024;
        let cv = CVMatrix::new(perturbed_roots(&mut rng, n), ONE, n).unwrap();
        let h = build_extended_hss(&cv, 64, HssTarget::FixedXi(1e-10)).unwrap();
        let b: Vec<C64> = (0..n).map(|_| rng.complex_gaussian()).collect();
        let x = hss_solve(&h, &b, 2).unwrap();
        let hx = h.matvec(&x).unwrap();
        assert!(rel_err(&hx, &b) <= 1e-8);
    }

    #[test]
    fn singular_system_is_reported() {
        // two row knots equal ⇒ C is singular
        let mut s = perturbed_roots(&mut RngStream::new(44), 64).into_inner();
        s[10] = s[11];
        let cv = CVMatrix::new(CVec::from_raw(s), ONE, 64).unwrap();
        let h = build_extended_hss(&cv, 16, HssTarget::FixedXi(1e-10)).unwrap();
        let b = vec![ONE; 64];
        assert!(matches!(hss_solve(&h, &b, 2), Err(Error::HierarchicalRegularityViolation(_))));
    }
}
