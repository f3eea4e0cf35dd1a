//! Sector partition of the plane and the separation constants behind the
//! low-rank structure of CV matrices.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numeric::C64;

/// Smallest sector count for which the closed-form separation bound holds.
pub const MIN_SECTORS: usize = 12;

/// Uniform partition of the plane into `k` sectors with apex at the origin.
///
/// Sector `q` covers angles in `[2πq/k, 2π(q+1)/k)`. Both knot sets are
/// stably sorted by angle, so each bucket is a contiguous range of the
/// sorted order: rows `row_offsets[q]..row_offsets[q+1]` of the permuted
/// matrix belong to sector `q`, likewise for columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorPartition {
    k: usize,
    n: usize,
    centers: Vec<C64>,
    s_perm: Vec<usize>,
    t_perm: Vec<usize>,
    row_offsets: Vec<usize>,
    col_offsets: Vec<usize>,
}

/// Angle of `z` as a fraction of a full turn, in `[0, 1)`.
pub fn turn_fraction(z: C64) -> f64 {
    let a = z.im.atan2(z.re);
    let u = if a < 0.0 { a / (2.0 * PI) + 1.0 } else { a / (2.0 * PI) };
    if u >= 1.0 {
        0.0
    } else {
        u
    }
}

fn sector_of_fraction(u: f64, k: usize) -> usize {
    ((u * k as f64).floor() as usize).min(k - 1)
}

/// Sector index of `z` among `k` sectors.
pub fn sector_of(z: C64, k: usize) -> usize {
    sector_of_fraction(turn_fraction(z), k)
}

fn sorted_buckets(fractions: &[f64], k: usize) -> (Vec<usize>, Vec<usize>) {
    let mut perm: Vec<usize> = (0..fractions.len()).collect();
    perm.sort_by(|&a, &b| fractions[a].total_cmp(&fractions[b]));
    let mut offsets = vec![0; k + 1];
    for &i in &perm {
        offsets[sector_of_fraction(fractions[i], k) + 1] += 1;
    }
    for q in 0..k {
        offsets[q + 1] += offsets[q];
    }
    (perm, offsets)
}

impl SectorPartition {
    /// Partition for row knots `s` and column knots `t_j = f·ω^j`, `j < n`.
    pub fn build(s: &[C64], f: C64, n: usize, k: usize) -> Result<Self> {
        if k < MIN_SECTORS {
            return Err(Error::InvalidPartition(format!("k = {k} is below {MIN_SECTORS}")));
        }
        Self::build_relaxed(s, f, n, k)
    }

    /// As [`SectorPartition::build`] without the lower bound on `k`. The
    /// closed-form separation bound does not apply to such partitions;
    /// callers must measure separation per block.
    pub fn build_relaxed(s: &[C64], f: C64, n: usize, k: usize) -> Result<Self> {
        if !k.is_power_of_two() {
            return Err(Error::InvalidPartition(format!("k = {k} is not a power of two")));
        }
        if n < 2 * k {
            return Err(Error::InvalidPartition(format!("n/k < 2 for n = {n}, k = {k}")));
        }
        let s_frac: Vec<f64> = s.iter().map(|&z| turn_fraction(z)).collect();
        // t-knot angles computed exactly from j/n so ties with sector
        // boundaries resolve the same way for every j.
        let f_frac = turn_fraction(f);
        let t_frac: Vec<f64> = (0..n)
            .map(|j| {
                let u = f_frac + j as f64 / n as f64;
                if u >= 1.0 {
                    u - 1.0
                } else {
                    u
                }
            })
            .collect();
        let (s_perm, row_offsets) = sorted_buckets(&s_frac, k);
        let (t_perm, col_offsets) = sorted_buckets(&t_frac, k);
        let centers =
            (0..k).map(|q| C64::from_polar(1.0, 2.0 * PI * (q as f64 + 0.5) / k as f64)).collect();
        Ok(SectorPartition { k, n, centers, s_perm, t_perm, row_offsets, col_offsets })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rows(&self) -> usize {
        self.s_perm.len()
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    /// `φ_q = 2πq/k`.
    pub fn arc_angle(&self, q: usize) -> f64 {
        2.0 * PI * q as f64 / self.k as f64
    }

    /// Midpoint of the unit-circle arc of sector `q`.
    pub fn center(&self, q: usize) -> C64 {
        self.centers[q]
    }

    pub fn centers(&self) -> &[C64] {
        &self.centers
    }

    /// Sorted position → original row index.
    pub fn s_permutation(&self) -> &[usize] {
        &self.s_perm
    }

    /// Sorted position → original column index.
    pub fn t_permutation(&self) -> &[usize] {
        &self.t_perm
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_offsets(&self) -> &[usize] {
        &self.col_offsets
    }

    /// Original indices of the s-knots in sector `q`.
    pub fn s_bucket(&self, q: usize) -> &[usize] {
        &self.s_perm[self.row_offsets[q]..self.row_offsets[q + 1]]
    }

    /// Original indices of the t-knots in sector `q`.
    pub fn t_bucket(&self, q: usize) -> &[usize] {
        &self.t_perm[self.col_offsets[q]..self.col_offsets[q + 1]]
    }

    /// Sorted row positions of sectors `first..first+count` (cyclic).
    pub fn row_positions(&self, first: isize, count: usize) -> Vec<usize> {
        positions(&self.row_offsets, self.k, first, count)
    }

    /// Sorted column positions of sectors `first..first+count` (cyclic).
    pub fn col_positions(&self, first: isize, count: usize) -> Vec<usize> {
        positions(&self.col_offsets, self.k, first, count)
    }
}

fn positions(offsets: &[usize], k: usize, first: isize, count: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for step in 0..count.min(k) {
        let q = (first + step as isize).rem_euclid(k as isize) as usize;
        out.extend(offsets[q]..offsets[q + 1]);
    }
    out
}

/// Closed-form separation constants of a `k`-sector partition.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SeparationParams {
    pub theta: f64,
    pub delta_min: f64,
    pub k: usize,
}

/// `θ = 2 sin(π/2k) / sin(3π/k)`, `δ_min = sin(3π/k)`.
pub fn separation_params(k: usize) -> Result<SeparationParams> {
    if k < MIN_SECTORS {
        return Err(Error::InvalidParameter(format!("separation bound needs k ≥ 12, got {k}")));
    }
    let kf = k as f64;
    let delta_min = (3.0 * PI / kf).sin();
    Ok(SeparationParams { theta: 2.0 * (PI / (2.0 * kf)).sin() / delta_min, delta_min, k })
}

/// For `0 ≤ χ ≤ φ ≤ η < φ′ < χ′ ≤ π/2`: the chord from `e^{iφ}` to `e^{iη}`
/// and the distance from `e^{iη}` to the rays at angles `χ` and `χ′`.
pub fn chord_and_sector_distance(
    chi: f64,
    phi: f64,
    eta: f64,
    phi_p: f64,
    chi_p: f64,
) -> Result<(f64, f64)> {
    let ordered = 0.0 <= chi && chi <= phi && phi <= eta && eta < phi_p && phi_p < chi_p;
    if !ordered || chi_p > PI / 2.0 {
        return Err(Error::InvalidParameter(
            "angles must satisfy 0 ≤ χ ≤ φ ≤ η < φ′ < χ′ ≤ π/2".into(),
        ));
    }
    let chord = 2.0 * ((eta - phi) / 2.0).sin();
    let dist = (eta - chi).min(chi_p - eta).sin();
    Ok((chord, dist))
}

/// Radius `r = (2/θ) sin((φ′−φ)/4)` such that the arc between `φ` and `φ′`
/// and the exterior of the disc of radius `r` about the arc midpoint are
/// separated with ratio `θ`.
pub fn disc_separation_radius(phi: f64, phi_p: f64, theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!("θ = {theta} outside (0, 1)")));
    }
    if !(0.0 <= phi && phi <= phi_p && phi_p <= 2.0 * PI) {
        return Err(Error::InvalidParameter("need 0 ≤ φ ≤ φ′ ≤ 2π".into()));
    }
    Ok(2.0 / theta * ((phi_p - phi) / 4.0).sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::RngStream;

    #[test]
    fn roots_of_unity_fill_buckets_evenly() {
        let p = SectorPartition::build(&[], C64::new(1.0, 0.0), 64, 16).unwrap();
        for q in 0..16 {
            assert_eq!(p.t_bucket(q).len(), 4);
        }
        assert_eq!(p.t_bucket(0), &[0, 1, 2, 3]);
    }

    #[test]
    fn rotated_roots_keep_bucket_sizes() {
        for &f in &[C64::from_polar(1.0, 0.1), C64::from_polar(1.0, 2.0 * PI / 64.0)] {
            let p = SectorPartition::build(&[], f, 64, 16).unwrap();
            for q in 0..16 {
                assert_eq!(p.t_bucket(q).len(), 4, "f = {f}");
            }
        }
        let p = SectorPartition::build(&[], C64::from_polar(1.0, 0.1), 100, 16).unwrap();
        for q in 0..16 {
            assert!([6, 7].contains(&p.t_bucket(q).len()));
        }
    }

    #[test]
    fn knots_in_one_sector() {
        let s: Vec<C64> = (0..5).map(|i| C64::from_polar(0.5, 0.01 * i as f64)).collect();
        let p = SectorPartition::build(&s, C64::new(1.0, 0.0), 64, 16).unwrap();
        assert_eq!(p.s_bucket(0).len(), 5);
        for q in 1..16 {
            assert!(p.s_bucket(q).is_empty());
        }
    }

    #[test]
    fn random_angles_match_brute_force() {
        let mut rng = RngStream::new(19);
        let s: Vec<C64> =
            (0..1024).map(|_| C64::from_polar(1.0, 2.0 * PI * rng.uniform01())).collect();
        let p = SectorPartition::build(&s, C64::new(1.0, 0.0), 1024, 32).unwrap();
        let mut total = 0;
        for q in 0..32 {
            let lo = 2.0 * PI * q as f64 / 32.0;
            let hi = 2.0 * PI * (q + 1) as f64 / 32.0;
            let mut brute: Vec<usize> = (0..1024)
                .filter(|&i| {
                    let a = s[i].arg().rem_euclid(2.0 * PI);
                    a >= lo && a < hi
                })
                .collect();
            let mut got = p.s_bucket(q).to_vec();
            brute.sort();
            got.sort();
            assert_eq!(got, brute);
            total += got.len();
        }
        assert_eq!(total, 1024);
    }

    #[test]
    fn boundary_knot_goes_to_upper_sector() {
        let s = [C64::from_polar(1.0, 2.0 * PI / 16.0 + 1e-15), C64::new(1.0, 0.0)];
        let p = SectorPartition::build(&s, C64::new(1.0, 0.0), 64, 16).unwrap();
        assert_eq!(p.s_bucket(1), &[0]);
        assert_eq!(p.s_bucket(0), &[1]);
    }

    #[test]
    fn partition_preconditions() {
        let one = C64::new(1.0, 0.0);
        assert!(SectorPartition::build(&[], one, 64, 8).is_err());
        assert!(SectorPartition::build(&[], one, 64, 24).is_err());
        assert!(SectorPartition::build(&[], one, 30, 16).is_err());
        assert!(SectorPartition::build_relaxed(&[], one, 64, 4).is_ok());
    }

    #[test]
    fn separation_closed_forms() {
        let p = separation_params(12).unwrap();
        // reference values from 30-digit evaluation
        assert!((p.theta - 0.369_183_822_565_029).abs() < 1e-14, "{}", p.theta);
        let p = separation_params(32).unwrap();
        assert!((p.theta - 0.338_065_893_050_259).abs() < 1e-14);
        assert!((p.delta_min - 0.290_284_677_254_462).abs() < 1e-14);
        let p = separation_params(1 << 20).unwrap();
        assert!((p.theta - 1.0 / 3.0).abs() < 1e-9);
        assert!(separation_params(8).is_err());
    }

    #[test]
    fn chord_and_distance_examples() {
        let (chord, _) = chord_and_sector_distance(0.0, 0.2, 0.2, 0.5, 1.0).unwrap();
        assert_eq!(chord, 0.0);
        let (_, dist) = chord_and_sector_distance(0.0, 0.0, PI / 8.0, 0.5, PI / 2.0).unwrap();
        assert!((dist - 0.382_683).abs() < 1e-6);
        let (chord, _) = chord_and_sector_distance(0.0, 0.0, PI / 6.0, 1.0, 1.2).unwrap();
        assert!((chord - 0.517_638).abs() < 1e-6);
        assert!(chord_and_sector_distance(0.3, 0.2, 0.25, 0.5, 1.0).is_err());
    }

    #[test]
    fn chord_and_distance_match_geometry() {
        let (chi, phi, eta, phi_p, chi_p) = (0.1, 0.3, 0.45, 0.7, 1.2);
        let (chord, dist) = chord_and_sector_distance(chi, phi, eta, phi_p, chi_p).unwrap();
        let tau = C64::from_polar(1.0, eta);
        assert!((chord - (tau - C64::from_polar(1.0, phi)).norm()).abs() < 1e-14);
        // distance to a ray through the origin at angle a: |Im(τ e^{−ia})|
        let d = |a: f64| (tau * C64::from_polar(1.0, -a)).im.abs();
        assert!((dist - d(chi).min(d(chi_p))).abs() < 1e-14);
    }

    #[test]
    fn disc_radius_examples() {
        assert_eq!(disc_separation_radius(0.4, 0.4, 0.5).unwrap(), 0.0);
        let r = disc_separation_radius(0.0, 2.0 * PI / 32.0, 1.0 / 3.0).unwrap();
        assert!((r - 0.294_41).abs() < 1e-5, "{r}");
        assert!(disc_separation_radius(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn disc_radius_separates_sampled_pairs() {
        let mut rng = RngStream::new(23);
        let (phi, phi_p, theta) = (0.3, 0.9, 0.4);
        let r = disc_separation_radius(phi, phi_p, theta).unwrap();
        let c = C64::from_polar(1.0, (phi + phi_p) / 2.0);
        for _ in 0..10_000 {
            let t = C64::from_polar(1.0, rng.uniform(phi, phi_p));
            let s = c + C64::from_polar(r * (1.0 + 10.0 * rng.uniform01()), rng.uniform(0.0, 2.0 * PI));
            assert!((t - c).norm() / (s - c).norm() <= theta * (1.0 + 1e-12));
        }
    }

    #[test]
    fn permutation_round_trip() {
        let mut rng = RngStream::new(3);
        let s: Vec<C64> = (0..100).map(|_| rng.complex_gaussian()).collect();
        let p = SectorPartition::build(&s, C64::new(1.0, 0.0), 64, 16).unwrap();
        let mut inv = vec![0; 100];
        for (pos, &i) in p.s_permutation().iter().enumerate() {
            inv[i] = pos;
        }
        for i in 0..100 {
            assert_eq!(p.s_permutation()[inv[i]], i);
        }
    }
}
