use super::{fft_in_place, Direction};
use crate::error::{Error, Result};
use crate::numeric::{CVec, C64, ONE, ZERO};

/// Polynomial with coefficients in ascending degree order.
///
/// Storage may carry trailing zeros; [`Polynomial::normalize`] strips them.
/// Entries are not required to be finite, since the remainder-tree baseline
/// is expected to overflow.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: CVec,
}

impl Polynomial {
    pub fn new(coeffs: CVec) -> Self {
        Polynomial { coeffs }
    }

    pub fn from_vec(coeffs: Vec<C64>) -> Self {
        Polynomial { coeffs: CVec::from_raw(coeffs) }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Polynomial::from_vec(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Polynomial::from_vec(Vec::new())
    }

    pub fn one() -> Self {
        Polynomial::from_vec(vec![ONE])
    }

    /// `x − a`.
    pub fn linear(a: C64) -> Self {
        Polynomial::from_vec(vec![-a, ONE])
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> CVec {
        self.coeffs
    }

    /// Stored length, including trailing zeros.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == ZERO)
    }

    /// Degree after ignoring trailing zeros; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|&c| c != ZERO)
    }

    pub fn normalize(&mut self) {
        let len = self.degree().map_or(0, |d| d + 1);
        let mut v = std::mem::take(&mut self.coeffs).into_inner();
        v.truncate(len);
        self.coeffs = CVec::from_raw(v);
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    /// Horner evaluation at one point.
    pub fn eval(&self, x: C64) -> C64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * x + c)
    }
}

fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// Linear convolution of two coefficient slices via zero-padded FFT.
fn convolve(a: &[C64], b: &[C64]) -> Vec<C64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let len = a.len() + b.len() - 1;
    if a.len() == 1 || b.len() == 1 {
        let (s, v) = if a.len() == 1 { (a[0], b) } else { (b[0], a) };
        return v.iter().map(|&x| s * x).collect();
    }
    let size = next_pow2(len);
    let mut fa = a.to_vec();
    fa.resize(size, ZERO);
    let mut fb = b.to_vec();
    fb.resize(size, ZERO);
    fft_in_place(&mut fa, Direction::Forward).expect("power of two");
    fft_in_place(&mut fb, Direction::Forward).expect("power of two");
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    fft_in_place(&mut fa, Direction::Inverse).expect("power of two");
    fa.truncate(len);
    fa
}

/// Product `p·q`.
pub fn poly_mul(p: &Polynomial, q: &Polynomial) -> Polynomial {
    Polynomial::from_vec(convolve(p.coeffs(), q.coeffs()))
}

/// Reciprocal of `a` modulo `x^len` by Newton iteration; `a[0] ≠ 0`.
fn series_inverse(a: &[C64], len: usize) -> Vec<C64> {
    let mut g = vec![ONE / a[0]];
    let iterations = usize::BITS - (len.max(1) - 1).leading_zeros();
    let mut prec = 1;
    for _ in 0..iterations {
        prec *= 2;
        let head = &a[..a.len().min(prec)];
        let mut e = convolve(head, &g);
        e.truncate(prec);
        // g ← g(2 − a g)
        for z in e.iter_mut() {
            *z = -*z;
        }
        e[0] += C64::new(2.0, 0.0);
        let mut next = convolve(&g, &e);
        next.truncate(prec);
        g = next;
    }
    g.truncate(len);
    g
}

/// Remainder `p mod d`, with `deg r < deg d`.
///
/// The quotient comes from the Newton reciprocal of the reversed divisor;
/// no stabilization is attempted.
pub fn poly_rem(p: &Polynomial, d: &Polynomial) -> Result<Polynomial> {
    poly_divrem(p, d).map(|(_, r)| r)
}

/// Quotient and remainder of `p / d`; see [`poly_rem`].
pub fn poly_divrem(p: &Polynomial, d: &Polynomial) -> Result<(Polynomial, Polynomial)> {
    let dn = d.clone().normalized();
    let m = match dn.degree() {
        None => return Err(Error::ZeroDivisor),
        Some(0) => {
            let lead = ONE / dn.coeffs()[0];
            let q = p.coeffs().iter().map(|&c| c * lead).collect();
            return Ok((Polynomial::from_vec(q), Polynomial::zero()));
        }
        Some(m) => m,
    };
    let pn = p.clone().normalized();
    let deg_p = match pn.degree() {
        None => return Ok((Polynomial::zero(), Polynomial::from_vec(vec![ZERO; m]))),
        Some(deg) => deg,
    };
    if deg_p < m {
        let mut r = pn.into_coeffs().into_inner();
        r.resize(m, ZERO);
        return Ok((Polynomial::zero(), Polynomial::from_vec(r)));
    }
    let k = deg_p - m + 1;
    let rev_d: Vec<C64> = dn.coeffs().iter().rev().copied().collect();
    let rev_p: Vec<C64> = pn.coeffs().iter().rev().copied().collect();
    let inv = series_inverse(&rev_d, k);
    let mut q_rev = convolve(&rev_p[..k.min(rev_p.len())], &inv);
    q_rev.truncate(k);
    q_rev.resize(k, ZERO);
    let q: Vec<C64> = q_rev.into_iter().rev().collect();
    let qd = convolve(&q, dn.coeffs());
    let r = (0..m).map(|i| pn.coeffs()[i] - qd[i]).collect();
    Ok((Polynomial::from_vec(q), Polynomial::from_vec(r)))
}

/// Coefficient-wise derivative.
pub fn poly_derivative(p: &Polynomial) -> Polynomial {
    Polynomial::from_vec(
        p.coeffs().iter().enumerate().skip(1).map(|(j, &c)| c * j as f64).collect(),
    )
}

/// Binary tree of products over a set of roots.
///
/// `levels[0]` holds the leaves `x − s_i`; node `i` of level `L+1` is the
/// product of nodes `2i` and `2i+1` of level `L`, or a copy of node `2i` when
/// the level has odd length.
#[derive(Debug, Clone)]
pub struct SubproductTree {
    levels: Vec<Vec<Polynomial>>,
}

impl SubproductTree {
    pub fn levels(&self) -> &[Vec<Polynomial>] {
        &self.levels
    }

    pub fn height(&self) -> usize {
        self.levels.len()
    }

    /// `Π (x − s_i)`; the constant 1 for an empty root set.
    pub fn root(&self) -> Polynomial {
        match self.levels.last().and_then(|l| l.first()) {
            Some(p) => p.clone(),
            None => Polynomial::one(),
        }
    }
}

pub fn subproduct_tree(roots: &[C64]) -> SubproductTree {
    let mut levels = vec![roots.iter().map(|&s| Polynomial::linear(s)).collect::<Vec<_>>()];
    while levels.last().map_or(false, |l| l.len() > 1) {
        let prev = levels.last().expect("nonempty");
        let next = prev
            .chunks(2)
            .map(|pair| match pair {
                [a, b] => poly_mul(a, b),
                [a] => a.clone(),
                _ => unreachable!(),
            })
            .collect();
        levels.push(next);
    }
    SubproductTree { levels }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::RngStream;

    fn close(a: &[C64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, &y)| (x - C64::new(y, 0.0)).norm() <= tol)
    }

    #[test]
    fn mul_difference_of_squares() {
        let p = poly_mul(&Polynomial::from_real(&[1.0, 1.0]), &Polynomial::from_real(&[1.0, -1.0]));
        assert!(close(p.coeffs(), &[1.0, 0.0, -1.0], 1e-15));
    }

    #[test]
    fn mul_by_one() {
        let p = Polynomial::from_real(&[3.0, -1.0, 2.0]);
        assert_eq!(poly_mul(&p, &Polynomial::one()), p);
    }

    #[test]
    fn binomial_fourth_power() {
        let lin = Polynomial::from_real(&[-2.0, 1.0]);
        let mut p = Polynomial::one();
        for _ in 0..4 {
            p = poly_mul(&p, &lin);
        }
        assert!(close(p.coeffs(), &[16.0, -32.0, 24.0, -8.0, 1.0], 1e-12));
    }

    #[test]
    fn rem_at_one() {
        let r = poly_rem(&Polynomial::from_real(&[0.0, 0.0, 1.0]), &Polynomial::from_real(&[-1.0, 1.0]))
            .unwrap();
        assert!(close(r.coeffs(), &[1.0], 1e-14));
    }

    #[test]
    fn rem_hand_long_division() {
        // x³ + 2x + 5 = (x² + 1)·x + (x + 5)
        let p = Polynomial::from_real(&[5.0, 2.0, 0.0, 1.0]);
        let d = Polynomial::from_real(&[1.0, 0.0, 1.0]);
        let r = poly_rem(&p, &d).unwrap();
        assert!(close(r.coeffs(), &[5.0, 1.0], 1e-14));
    }

    #[test]
    fn rem_of_exact_multiple_vanishes() {
        let mut rng = RngStream::new(2);
        let roots: Vec<C64> =
            (0..9).map(|_| C64::from_polar(rng.uniform01(), 6.28 * rng.uniform01())).collect();
        let d = subproduct_tree(&roots).root();
        let q = Polynomial::from_vec((0..20).map(|_| rng.complex_gaussian()).collect());
        let p = poly_mul(&d, &q);
        let r = poly_rem(&p, &d).unwrap();
        let pn = p.coeffs().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let rn = r.coeffs().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(rn <= 1e-10 * pn, "{rn}");
    }

    #[test]
    fn rem_errors_and_short_dividend() {
        let p = Polynomial::from_real(&[1.0, 2.0]);
        assert_eq!(poly_rem(&p, &Polynomial::zero()), Err(Error::ZeroDivisor));
        assert_eq!(poly_rem(&p, &Polynomial::from_real(&[0.0, 0.0])), Err(Error::ZeroDivisor));
        let r = poly_rem(&p, &Polynomial::from_real(&[1.0, 0.0, 1.0])).unwrap();
        assert!(close(r.coeffs(), &[1.0, 2.0], 0.0));
    }

    #[test]
    fn derivative_examples() {
        let d = poly_derivative(&Polynomial::from_real(&[1.0, 2.0, 3.0]));
        assert!(close(d.coeffs(), &[2.0, 6.0], 0.0));
        assert!(poly_derivative(&Polynomial::from_real(&[7.0])).is_zero());
        // d/dx (x⁵ − f⁵) = 5x⁴
        let f5 = C64::from_polar(1.0, 0.3 * 5.0);
        let mut c = vec![ZERO; 6];
        c[0] = -f5;
        c[5] = ONE;
        let d = poly_derivative(&Polynomial::from_vec(c));
        assert!(close(d.coeffs(), &[0.0, 0.0, 0.0, 0.0, 5.0], 0.0));
    }

    #[test]
    fn tree_of_single_root() {
        let t = subproduct_tree(&[ZERO]);
        assert!(close(t.root().coeffs(), &[0.0, 1.0], 0.0));
    }

    #[test]
    fn tree_of_roots_of_unity() {
        let roots = super::super::roots_of_unity(16);
        let p = subproduct_tree(&roots).root();
        let mut expect = vec![0.0; 17];
        expect[0] = -1.0;
        expect[16] = 1.0;
        assert!(close(p.coeffs(), &expect, 1e-10));
    }

    #[test]
    fn tree_of_twos_reaches_two_to_the_n() {
        let p = subproduct_tree(&vec![C64::new(2.0, 0.0); 64]).root();
        assert!((p.coeffs()[0].norm() / 2f64.powi(64) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn tree_with_odd_count_carries_nodes() {
        let roots: Vec<C64> = (1..=5).map(|i| C64::new(i as f64, 0.0)).collect();
        let t = subproduct_tree(&roots);
        assert_eq!(t.levels()[0].len(), 5);
        assert_eq!(t.levels()[1].len(), 3);
        // (x−1)…(x−5): constant −120, x⁴ coefficient −15
        let p = t.root();
        assert!((p.coeffs()[0] + C64::new(120.0, 0.0)).norm() < 1e-10);
        assert!((p.coeffs()[4] + C64::new(15.0, 0.0)).norm() < 1e-10);
    }
}
