use super::{CVec, DenseMatrix, FlopCounter, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// `y = A x`.
pub fn dense_matvec(a: &DenseMatrix, x: &[C64]) -> Result<CVec> {
    if a.cols() != x.len() {
        return Err(Error::DimensionMismatch { expected: a.cols(), got: x.len() });
    }
    Ok((0..a.rows())
        .map(|i| a.row(i).iter().zip(x).map(|(aij, xj)| aij * xj).sum())
        .collect())
}

/// [`dense_matvec`] that also records `rows·cols` multiply-adds.
pub fn dense_matvec_counted(a: &DenseMatrix, x: &[C64], counter: &FlopCounter) -> Result<CVec> {
    let y = dense_matvec(a, x)?;
    counter.add((a.rows() * a.cols()) as u64);
    Ok(y)
}

/// Solution of a dense system together with a 1-norm condition estimate.
#[derive(Debug, Clone)]
pub struct Solved {
    pub x: CVec,
    pub cond_estimate: f64,
}

/// Solves `A x = b` by Gaussian elimination with row pivoting.
pub fn dense_solve(a: &DenseMatrix, b: &[C64]) -> Result<Solved> {
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch { expected: a.rows(), got: a.cols() });
    }
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch { expected: a.rows(), got: b.len() });
    }
    let lu = LuFactor::new(a)?;
    let x = CVec::from_raw(lu.solve_vec(b));
    Ok(Solved { x, cond_estimate: lu.cond1_estimate() })
}

/// LU factorization `P A = L U` with partial pivoting.
#[derive(Debug, Clone)]
pub struct LuFactor {
    n: usize,
    lu: Vec<C64>,
    perm: Vec<usize>,
    norm1: f64,
}

impl LuFactor {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: a.cols() });
        }
        let norm1 = (0..n)
            .map(|j| (0..n).map(|i| a[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max);
        let threshold = (n.max(1) as f64) * f64::EPSILON * a.max_abs();
        let mut lu = a.data().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[i * n + k].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot <= threshold || pivot == 0.0 {
                return Err(Error::SingularMatrix { step: k, pivot });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let inv = ONE / lu[k * n + k];
            for i in k + 1..n {
                let l = lu[i * n + k] * inv;
                lu[i * n + k] = l;
                if l == ZERO {
                    continue;
                }
                let (top, bottom) = lu.split_at_mut(i * n);
                let pivot_row = &top[k * n + k + 1..k * n + n];
                for (x, &u) in bottom[k + 1..n].iter_mut().zip(pivot_row) {
                    *x -= l * u;
                }
            }
        }
        Ok(LuFactor { n, lu, perm, norm1 })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Multiply-adds spent by the factorization.
    pub fn factor_flops(&self) -> u64 {
        let n = self.n as u64;
        n * n * n / 3
    }

    pub fn solve_vec(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc / self.lu[i * n + i];
        }
        x
    }

    /// Solves for every column of `b` (row-major `n × p`), in place.
    pub fn solve_in_place(&self, b: &mut DenseMatrix) {
        let n = self.n;
        let p = b.cols();
        let mut permuted = DenseMatrix::zeros(n, p);
        for i in 0..n {
            permuted.row_mut(i).copy_from_slice(b.row(self.perm[i]));
        }
        let data = permuted.data_mut();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[i * n + j];
                if l == ZERO {
                    continue;
                }
                let (src, dst) = data.split_at_mut(i * p);
                for (d, s) in dst[..p].iter_mut().zip(&src[j * p..j * p + p]) {
                    *d -= l * s;
                }
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[i * n + j];
                if u == ZERO {
                    continue;
                }
                let (head, tail) = data.split_at_mut(j * p);
                for (d, s) in head[i * p..i * p + p].iter_mut().zip(&tail[..p]) {
                    *d -= u * s;
                }
            }
            let inv = ONE / self.lu[i * n + i];
            for d in &mut data[i * p..i * p + p] {
                *d *= inv;
            }
        }
        *b = permuted;
    }

    /// Solves `Aᴴ x = b`.
    fn solve_adjoint(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        // Aᴴ = Uᴴ Lᴴ P
        let mut y = b.to_vec();
        for i in 0..n {
            let mut acc = y[i];
            for j in 0..i {
                acc -= self.lu[j * n + i].conj() * y[j];
            }
            y[i] = acc / self.lu[i * n + i].conj();
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in i + 1..n {
                acc -= self.lu[j * n + i].conj() * y[j];
            }
            y[i] = acc;
        }
        let mut x = vec![ZERO; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }

    /// Hager–Higham estimate of `‖A‖₁ ‖A⁻¹‖₁`.
    pub fn cond1_estimate(&self) -> f64 {
        let n = self.n;
        if n == 0 {
            return 0.0;
        }
        let mut x = vec![C64::new(1.0 / n as f64, 0.0); n];
        let mut estimate = 0.0;
        for _ in 0..5 {
            let y = self.solve_vec(&x);
            estimate = y.iter().map(|z| z.norm()).sum::<f64>();
            let sign: Vec<C64> =
                y.iter().map(|z| if z.norm() == 0.0 { ONE } else { z / z.norm() }).collect();
            let z = self.solve_adjoint(&sign);
            let (jmax, zmax) = z
                .iter()
                .enumerate()
                .map(|(j, v)| (j, v.norm()))
                .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
            if zmax <= ztx {
                break;
            }
            x = vec![ZERO; n];
            x[jmax] = ONE;
        }
        estimate * self.norm1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::RngStream;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn cauchy(s: &[f64], t: &[f64]) -> DenseMatrix {
        DenseMatrix::from_fn(s.len(), t.len(), |i, j| c(1.0 / (s[i] - t[j]), 0.0))
    }

    #[test]
    fn matvec_identity_and_zero() {
        let x = [c(1.0, 0.0), c(0.0, 2.0), c(-1.0, 0.0)];
        assert_eq!(dense_matvec(&DenseMatrix::identity(3), &x).unwrap().as_slice(), &x);
        let y = dense_matvec(&DenseMatrix::zeros(2, 2), &x[..2]).unwrap();
        assert_eq!(y.as_slice(), &[ZERO, ZERO]);
    }

    #[test]
    fn matvec_small_cauchy() {
        let a = cauchy(&[2.0, 3.0], &[0.0, 1.0]);
        let y = dense_matvec(&a, &[ONE, ONE]).unwrap();
        assert!((y[0] - c(1.5, 0.0)).norm() < 1e-15);
        assert!((y[1] - c(5.0 / 6.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn matvec_dimension_mismatch() {
        let err = dense_matvec(&DenseMatrix::identity(3), &[ONE]).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 3, got: 1 });
    }

    #[test]
    fn solve_trivial_systems() {
        let x = dense_solve(&DenseMatrix::identity(2), &[c(5.0, 0.0), c(0.0, 6.0)]).unwrap().x;
        assert_eq!(x.as_slice(), &[c(5.0, 0.0), c(0.0, 6.0)]);
        let mut d = DenseMatrix::zeros(2, 2);
        d[(0, 0)] = c(2.0, 0.0);
        d[(1, 1)] = c(4.0, 0.0);
        let x = dense_solve(&d, &[c(2.0, 0.0), c(4.0, 0.0)]).unwrap().x;
        assert!((x[0] - ONE).norm() < 1e-15 && (x[1] - ONE).norm() < 1e-15);
    }

    #[test]
    fn solve_cauchy_round_trip() {
        let a = cauchy(&[0.5, 1.5, 2.5], &[0.0, 1.0, 2.0]);
        let b = dense_matvec(&a, &[ONE, ONE, ONE]).unwrap();
        let x = dense_solve(&a, &b).unwrap().x;
        for xi in x.iter() {
            assert!((xi - ONE).norm() < 1e-10);
        }
    }

    #[test]
    fn singular_matrix_detected() {
        let a = DenseMatrix::from_fn(3, 3, |i, j| c((i + j) as f64, 0.0));
        assert!(matches!(dense_solve(&a, &[ONE; 3]), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn random_round_trip_residual() {
        let mut rng = RngStream::new(11);
        let n = 50;
        let mut a = DenseMatrix::from_fn(n, n, |_, _| rng.complex_gaussian());
        for i in 0..n {
            a[(i, i)] += c(n as f64, 0.0);
        }
        let b: Vec<C64> = (0..n).map(|_| rng.complex_gaussian()).collect();
        let x = dense_solve(&a, &b).unwrap().x;
        let r = dense_matvec(&a, &x).unwrap();
        let res: Vec<C64> = r.iter().zip(&b).map(|(u, v)| u - v).collect();
        assert!(super::super::norm2(&res) / super::super::norm2(&b) <= 1e-10);
    }

    #[test]
    fn multi_rhs_matches_single() {
        let mut rng = RngStream::new(5);
        let n = 12;
        let a = DenseMatrix::from_fn(n, n, |_, _| rng.complex_gaussian());
        let b = DenseMatrix::from_fn(n, 3, |_, _| rng.complex_gaussian());
        let lu = LuFactor::new(&a).unwrap();
        let mut x = b.clone();
        lu.solve_in_place(&mut x);
        for j in 0..3 {
            let xj = lu.solve_vec(&b.column(j));
            for i in 0..n {
                assert!((xj[i] - x[(i, j)]).norm() < 1e-12 * (1.0 + xj[i].norm()));
            }
        }
    }

    #[test]
    fn condition_estimate_is_reasonable() {
        let mut d = DenseMatrix::identity(4);
        d[(3, 3)] = c(1e-6, 0.0);
        let est = LuFactor::new(&d).unwrap().cond1_estimate();
        assert!((est - 1e6).abs() / 1e6 < 1e-9);
    }
}
