//! Reference algorithms: Horner's rule, explicit Vandermonde matrices, and the
//! remainder-tree evaluator, which is fast but loses all accuracy in double
//! precision once the degree reaches a few dozen.

use crate::numeric::{CVec, DenseMatrix, C64, ONE};
use crate::transforms::{poly_rem, subproduct_tree, Polynomial};

/// `v_i = p(s_i)` by Horner's rule.
pub fn horner_eval(p: &Polynomial, s: &[C64]) -> CVec {
    CVec::from_raw(s.iter().map(|&x| p.eval(x)).collect())
}

/// `p(s_i)` by reducing `p` down the subproduct tree of the knots.
///
/// Every remainder goes through the FFT-based Newton division. Overflowed or
/// undefined outputs are returned as they come out.
pub fn mb_eval(p: &Polynomial, s: &[C64]) -> CVec {
    if s.is_empty() {
        return CVec::zeros(0);
    }
    let tree = subproduct_tree(s);
    let levels = tree.levels();
    let top = levels.len() - 1;
    let rem = |a: &Polynomial, d: &Polynomial| poly_rem(a, d).expect("tree nodes are monic");
    let mut current = vec![rem(p, &levels[top][0])];
    for level in (0..top).rev() {
        let nodes = &levels[level];
        let mut next = Vec::with_capacity(nodes.len());
        for (i, parent) in current.iter().enumerate() {
            let left = 2 * i;
            if left + 1 < nodes.len() {
                next.push(rem(parent, &nodes[left]));
                next.push(rem(parent, &nodes[left + 1]));
            } else {
                // carried node: the divisor is unchanged
                next.push(parent.clone());
            }
        }
        current = next;
    }
    CVec::from_raw(current.into_iter().map(|r| r.coeffs().first().copied().unwrap_or_default()).collect())
}

/// `(s_i^j)`, `i < len(s)`, `j < n`.
pub fn dense_vandermonde(s: &[C64], n: usize) -> DenseMatrix {
    let mut v = DenseMatrix::zeros(s.len(), n);
    for (i, &x) in s.iter().enumerate() {
        let mut pw = ONE;
        for j in 0..n {
            v[(i, j)] = pw;
            pw *= x;
        }
    }
    v
}

/// Coefficients of `Π (x − s_i)`.
pub fn coeffs_from_roots(s: &[C64]) -> Polynomial {
    subproduct_tree(s).root()
}
