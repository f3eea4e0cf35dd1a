//! FFT and FFT-based polynomial arithmetic.

mod poly;

use std::cell::RefCell;
use std::f64::consts::PI;

use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::numeric::{CVec, C64};

pub use poly::{poly_derivative, poly_divrem, poly_mul, poly_rem, subproduct_tree, Polynomial, SubproductTree};

/// Sign convention of a transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `y_i = Σ_j ω^{ij} x_j`, `ω = exp(2πi/n)`, unnormalized.
    Forward,
    /// `x_i = (1/n) Σ_j ω^{−ij} y_j`.
    Inverse,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Transform of a power-of-two length vector.
pub fn fft(x: &[C64], direction: Direction) -> Result<CVec> {
    let mut buf = x.to_vec();
    fft_in_place(&mut buf, direction)?;
    Ok(CVec::from_raw(buf))
}

/// In-place variant of [`fft`].
pub fn fft_in_place(buf: &mut [C64], direction: Direction) -> Result<()> {
    let n = buf.len();
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    // rustfft's forward transform uses exp(−2πi/n); ours is its inverse.
    PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        match direction {
            Direction::Forward => planner.plan_fft_inverse(n).process(buf),
            Direction::Inverse => {
                planner.plan_fft_forward(n).process(buf);
                let scale = 1.0 / n as f64;
                for z in buf.iter_mut() {
                    *z *= scale;
                }
            }
        }
    });
    Ok(())
}

/// Applies the unitary DFT matrix `Ω = (ω^{ij})/√n` (or `Ωᴴ` when `adjoint`).
pub fn apply_omega(x: &[C64], adjoint: bool) -> Result<CVec> {
    let root_n = (x.len() as f64).sqrt();
    let (direction, scale) =
        if adjoint { (Direction::Inverse, root_n) } else { (Direction::Forward, 1.0 / root_n) };
    let mut y = fft(x, direction)?;
    for z in y.iter_mut() {
        *z *= scale;
    }
    Ok(y)
}

/// `ω^j = exp(2πij/n)` for `j = 0..n`.
pub fn roots_of_unity(n: usize) -> Vec<C64> {
    (0..n).map(|j| C64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64)).collect()
}

/// Number of multiply-adds charged for one length-`n` transform.
pub fn fft_flops(n: usize) -> u64 {
    if n <= 1 {
        return 0;
    }
    (n as u64 / 2) * n.trailing_zeros() as u64
}
