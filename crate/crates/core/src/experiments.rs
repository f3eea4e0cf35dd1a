//! Randomized experiment harness: ξ-ranks of admissible blocks, accuracy of
//! fast polynomial evaluation, and the remainder-tree instability study.
//!
//! Every trial draws from its own stream derived from `(seed, cell, trial)`,
//! so cells are reproducible in isolation and results do not depend on the
//! thread count.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{horner_eval, mb_eval};
use crate::error::{Error, Result};
use crate::geometry::{SectorPartition, MIN_SECTORS};
use crate::numeric::{singular_values, DenseMatrix, RngStream, C64, ONE};
use crate::problems::{polyeval_fast, EvalPlan, FastOptions};
use crate::transforms::{fft_flops, roots_of_unity, Polynomial};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnotMode {
    /// `|s_i| = 1`.
    #[default]
    Circle,
    /// `|s_i|` uniform in `[0, 1]`.
    Disc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffMode {
    #[default]
    Real,
    Complex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: Vec<usize>,
    pub k: Vec<usize>,
    /// Radial spread exponents: `|s_i| ∈ [1 − 2^{−h}, 1 + 2^{−h})`.
    pub h: Vec<u32>,
    pub xi: Vec<f64>,
    pub degrees: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub knot_mode: KnotMode,
    pub coeff_mode: CoeffMode,
    /// Worker threads; rayon's default when absent.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: vec![1024, 2048, 4096],
            k: vec![4, 32, 512],
            h: vec![0, 1, 4],
            xi: vec![1e-2, 1e-3, 1e-4],
            degrees: vec![32, 64, 128, 256, 512, 1024, 2048, 4096],
            trials: 100,
            seed: 0,
            knot_mode: KnotMode::Circle,
            coeff_mode: CoeffMode::Real,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    fn require(&self, lists: &[(&str, bool)]) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        for &(name, empty) in lists {
            if empty {
                return Err(Error::InvalidParameter(format!("{name} list is empty")));
            }
        }
        if let Some(x) = self.xi.iter().find(|x| !(**x > 0.0)) {
            return Err(Error::InvalidParameter(format!("ξ = {x} must be positive")));
        }
        Ok(())
    }

    fn run<T: Send>(&self, job: impl FnOnce() -> T + Send) -> Result<T> {
        match self.threads {
            Some(t) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build()
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?;
                Ok(pool.install(job))
            }
            None => Ok(job()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Rank,
    Eval,
    Mb,
}

/// Aggregates for one parameter combination.
///
/// `mean`, `std` and `max` describe the ξ-rank (rank experiment) or the
/// absolute error (evaluation experiments). `max_rank` is the largest
/// ξ-rank or generator length seen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub n: usize,
    pub k: Option<usize>,
    pub h: Option<u32>,
    pub xi: Option<f64>,
    pub degree: Option<usize>,
    pub knot_mode: Option<KnotMode>,
    pub coeff_mode: Option<CoeffMode>,
    /// Trials actually run (0 for skipped cells).
    pub trials: usize,
    /// Blocks or knots the statistics were pooled over.
    pub samples: usize,
    pub skipped: bool,
    pub note: Option<String>,
    pub mean: f64,
    pub std: f64,
    pub max: f64,
    pub max_rank: usize,
    /// Mean Frobenius norm of the blocks (rank experiment).
    pub mean_norm: Option<f64>,
    /// Multiply-adds of the fast path summed over trials.
    pub flops: u64,
}

impl Cell {
    fn new(n: usize) -> Self {
        Cell {
            n,
            k: None,
            h: None,
            xi: None,
            degree: None,
            knot_mode: None,
            coeff_mode: None,
            trials: 0,
            samples: 0,
            skipped: false,
            note: None,
            mean: f64::NAN,
            std: f64::NAN,
            max: f64::NAN,
            max_rank: 0,
            mean_norm: None,
            flops: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub config: ExperimentConfig,
    pub cells: Vec<Cell>,
    /// Wall-clock seconds; not serialized, so reports of equal configs are
    /// byte-identical.
    #[serde(skip)]
    pub wall_time: f64,
}

/// Mean and sample standard deviation, computed naively so that huge values
/// overflow to infinity.
fn mean_std(x: &[f64]) -> (f64, f64) {
    if x.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() == 1 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let std = if var.is_nan() { f64::INFINITY } else { var.sqrt() };
    (mean, std)
}

fn max_of(x: &[f64]) -> f64 {
    x.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Knots with sorted uniform angles and radii uniform in
/// `[1 − 2^{−h}, 1 + 2^{−h})`.
pub fn annulus_knots(n: usize, h: u32, rng: &mut RngStream) -> Vec<C64> {
    let w = 0.5f64.powi(h as i32);
    let mut angles: Vec<f64> = (0..n).map(|_| rng.uniform(0.0, 2.0 * PI)).collect();
    let radii: Vec<f64> = (0..n).map(|_| rng.uniform(1.0 - w, 1.0 + w)).collect();
    angles.sort_by(f64::total_cmp);
    angles.iter().zip(&radii).map(|(&a, &r)| C64::from_polar(r, a)).collect()
}

/// `s = r·exp(2πiθ)` with `θ` uniform in `[0, 1)` and `r` per `mode`.
pub fn eval_knots(n: usize, mode: KnotMode, rng: &mut RngStream) -> Vec<C64> {
    (0..n)
        .map(|_| {
            let theta = rng.uniform01();
            let r = match mode {
                KnotMode::Circle => 1.0,
                KnotMode::Disc => rng.uniform01(),
            };
            C64::from_polar(r, 2.0 * PI * theta)
        })
        .collect()
}

pub fn gaussian_poly(len: usize, mode: CoeffMode, rng: &mut RngStream) -> Polynomial {
    let coeffs = (0..len)
        .map(|_| match mode {
            CoeffMode::Real => C64::new(rng.gaussian(), 0.0),
            CoeffMode::Complex => rng.complex_gaussian(),
        })
        .collect();
    Polynomial::from_vec(coeffs)
}

/// Admissible block of sector `q`: rows of every sector except `q−1, q, q+1`
/// against the columns of sector `q`.
pub fn admissible_block(part: &SectorPartition, s: &[C64], t: &[C64], q: usize) -> DenseMatrix {
    let k = part.k();
    let rows: Vec<usize> = if k > 3 {
        part.row_positions(q as isize + 2, k - 3).iter().map(|&p| part.s_permutation()[p]).collect()
    } else {
        Vec::new()
    };
    let cols = part.t_bucket(q);
    DenseMatrix::from_fn(rows.len(), cols.len(), |a, b| 1.0 / (s[rows[a]] - t[cols[b]]))
}

struct RankTrial {
    /// Per ξ: ranks of the nonempty blocks.
    ranks: Vec<Vec<usize>>,
    norms: Vec<f64>,
}

fn rank_trial(n: usize, h: u32, k: usize, xis: &[f64], rng: &mut RngStream) -> Result<RankTrial> {
    let s = annulus_knots(n, h, rng);
    let t = roots_of_unity(n);
    let part = SectorPartition::build_relaxed(&s, ONE, n, k)?;
    let floor = 1e-3 * xis.iter().copied().fold(f64::INFINITY, f64::min);
    let mut out = RankTrial { ranks: vec![Vec::new(); xis.len()], norms: Vec::new() };
    for q in 0..k {
        let block = admissible_block(&part, &s, &t, q);
        if block.rows() == 0 || block.cols() == 0 {
            continue;
        }
        let sigma = singular_values(&block, floor);
        for (r, &xi) in out.ranks.iter_mut().zip(xis) {
            r.push(sigma.iter().filter(|&&x| x > xi).count());
        }
        out.norms.push(block.frobenius());
    }
    Ok(out)
}

/// Mean ξ-ranks of the nonempty admissible blocks of `C_{s,1}` for knots in
/// annuli around the unit circle.
///
/// One cell per `(h, ξ, n, k)`; pairs with `n/k < 2` or `k < 4` are
/// skipped, and `k < 12` is flagged because the closed-form separation bound
/// does not cover it.
pub fn rank_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.require(&[("n", cfg.n.is_empty()), ("k", cfg.k.is_empty()), ("h", cfg.h.is_empty()), ("xi", cfg.xi.is_empty())])?;
    if let Some(&k) = cfg.k.iter().find(|k| !k.is_power_of_two()) {
        return Err(Error::InvalidParameter(format!("k = {k} is not a power of two")));
    }
    let start = Instant::now();
    let mut cells = Vec::new();
    for &h in &cfg.h {
        let mut grid: Vec<Vec<Cell>> = vec![Vec::new(); cfg.xi.len()];
        for &n in &cfg.n {
            for &k in &cfg.k {
                let base = Cell { k: Some(k), h: Some(h), ..Cell::new(n) };
                if n < 2 * k || k < 4 {
                    for (x, row) in cfg.xi.iter().zip(grid.iter_mut()) {
                        row.push(Cell {
                            xi: Some(*x),
                            skipped: true,
                            note: Some(if k < 4 { "no admissible rows" } else { "n/k < 2" }.into()),
                            ..base.clone()
                        });
                    }
                    continue;
                }
                let trials: Vec<RankTrial> = cfg.run(|| {
                    (0..cfg.trials)
                        .into_par_iter()
                        .map(|trial| {
                            let mut rng =
                                RngStream::derive(cfg.seed, &[1, h as u64, n as u64, k as u64, trial as u64]);
                            rank_trial(n, h, k, &cfg.xi, &mut rng)
                        })
                        .collect::<Result<Vec<_>>>()
                })??;
                let norms: Vec<f64> = trials.iter().flat_map(|t| t.norms.iter().copied()).collect();
                let mean_norm = mean_std(&norms).0;
                for (xi_idx, (&xi, row)) in cfg.xi.iter().zip(grid.iter_mut()).enumerate() {
                    let ranks: Vec<f64> =
                        trials.iter().flat_map(|t| t.ranks[xi_idx].iter().map(|&r| r as f64)).collect();
                    let (mean, std) = mean_std(&ranks);
                    row.push(Cell {
                        xi: Some(xi),
                        trials: cfg.trials,
                        samples: ranks.len(),
                        note: (k < MIN_SECTORS).then(|| format!("k < {MIN_SECTORS}: separation measured per block")),
                        mean,
                        std,
                        max: max_of(&ranks),
                        max_rank: ranks.iter().copied().fold(0.0, f64::max) as usize,
                        mean_norm: Some(mean_norm),
                        ..base.clone()
                    });
                }
            }
        }
        cells.extend(grid.into_iter().flatten());
    }
    Ok(ExperimentReport {
        kind: ExperimentKind::Rank,
        config: cfg.clone(),
        cells,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

struct EvalTrial {
    mean_error: f64,
    max_error: f64,
    generator: usize,
    flops: u64,
}

fn eval_trial(degree: usize, xi: f64, cfg: &ExperimentConfig, rng: &mut RngStream) -> Result<EvalTrial> {
    let p = gaussian_poly(degree, cfg.coeff_mode, rng);
    let s = eval_knots(degree, cfg.knot_mode, rng);
    let n = degree.next_power_of_two();
    let opts = FastOptions { xi, fast_min: 32, ..FastOptions::default() };
    let plan = EvalPlan::new(&s, n, &opts)?;
    let v = plan.eval(p.coeffs())?;
    let (generator, flops) = match plan.hss() {
        Some(h) => (h.max_generator_length(), h.flops() + 2 * fft_flops(n)),
        None => (0, (degree * n) as u64),
    };
    let errs: Vec<f64> = v.iter().zip(horner_eval(&p, &s).iter()).map(|(a, b)| (a - b).norm()).collect();
    Ok(EvalTrial { mean_error: mean_std(&errs).0, max_error: max_of(&errs), generator, flops })
}

/// Mean absolute error of [`EvalPlan::eval`] against Horner's rule for
/// Gaussian polynomials with `degree` coefficients at `degree` knots.
///
/// One cell per `(degree, ξ)`. The hierarchical path is used from 32
/// coefficients on.
pub fn eval_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.require(&[("degree", cfg.degrees.is_empty()), ("xi", cfg.xi.is_empty())])?;
    if cfg.degrees.contains(&0) {
        return Err(Error::InvalidParameter("degree must be at least 1".into()));
    }
    let start = Instant::now();
    let mut cells = Vec::new();
    for &degree in &cfg.degrees {
        for &xi in &cfg.xi {
            let trials: Vec<EvalTrial> = cfg.run(|| {
                (0..cfg.trials)
                    .into_par_iter()
                    .map(|trial| {
                        let mut rng = RngStream::derive(cfg.seed, &[2, degree as u64, xi.to_bits(), trial as u64]);
                        eval_trial(degree, xi, cfg, &mut rng)
                    })
                    .collect::<Result<Vec<_>>>()
            })??;
            let means: Vec<f64> = trials.iter().map(|t| t.mean_error).collect();
            let (mean, std) = mean_std(&means);
            cells.push(Cell {
                xi: Some(xi),
                degree: Some(degree),
                knot_mode: Some(cfg.knot_mode),
                coeff_mode: Some(cfg.coeff_mode),
                trials: cfg.trials,
                samples: cfg.trials * degree,
                mean,
                std,
                max: trials.iter().map(|t| t.max_error).fold(f64::NEG_INFINITY, f64::max),
                max_rank: trials.iter().map(|t| t.generator).max().unwrap_or(0),
                flops: trials.iter().map(|t| t.flops).sum(),
                ..Cell::new(degree.next_power_of_two())
            });
        }
    }
    Ok(ExperimentReport { kind: ExperimentKind::Eval, config: cfg.clone(), cells, wall_time: start.elapsed().as_secs_f64() })
}

/// Errors of the remainder-tree evaluator against Horner's rule for
/// Gaussian polynomials of degree `d` (`d + 1` coefficients) at `d + 1`
/// knots. Statistics are pooled over all knots and trials; overflowed or
/// undefined values count as `+∞`.
pub fn mb_comparison(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.require(&[("degree", cfg.degrees.is_empty())])?;
    let start = Instant::now();
    let mut cells = Vec::new();
    for &degree in &cfg.degrees {
        let errors: Vec<Vec<f64>> = cfg.run(|| {
            (0..cfg.trials)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = RngStream::derive(cfg.seed, &[3, degree as u64, trial as u64]);
                    let p = gaussian_poly(degree + 1, cfg.coeff_mode, &mut rng);
                    let s = eval_knots(degree + 1, cfg.knot_mode, &mut rng);
                    let fast = mb_eval(&p, &s);
                    let exact = horner_eval(&p, &s);
                    fast.iter()
                        .zip(exact.iter())
                        .map(|(a, b)| {
                            let e = (a - b).norm();
                            if e.is_finite() {
                                e
                            } else {
                                f64::INFINITY
                            }
                        })
                        .collect()
                })
                .collect()
        })?;
        let pooled: Vec<f64> = errors.into_iter().flatten().collect();
        let (mean, std) = mean_std(&pooled);
        cells.push(Cell {
            degree: Some(degree),
            knot_mode: Some(cfg.knot_mode),
            coeff_mode: Some(cfg.coeff_mode),
            trials: cfg.trials,
            samples: pooled.len(),
            mean,
            std,
            max: max_of(&pooled),
            ..Cell::new(degree + 1)
        });
    }
    Ok(ExperimentReport { kind: ExperimentKind::Mb, config: cfg.clone(), cells, wall_time: start.elapsed().as_secs_f64() })
}

/// `p(s_i)` using `x^d p(1/x)` for knots outside the unit circle, so that
/// every knot handed to the fast path lies in the closed unit disc.
pub fn polyeval_via_reverse(p: &Polynomial, s: &[C64], opts: &FastOptions) -> Result<Vec<C64>> {
    let (outer, inner): (Vec<usize>, Vec<usize>) = (0..s.len()).partition(|&i| s[i].norm() > 1.0);
    let mut out = vec![C64::new(0.0, 0.0); s.len()];
    let direct = polyeval_fast(p, &inner.iter().map(|&i| s[i]).collect::<Vec<_>>(), opts)?;
    for (&i, v) in inner.iter().zip(direct.iter()) {
        out[i] = *v;
    }
    let d = p.len().saturating_sub(1);
    let mut rev = p.coeffs().to_vec();
    rev.reverse();
    let rev = Polynomial::from_vec(rev);
    let inv: Vec<C64> = outer.iter().map(|&i| 1.0 / s[i]).collect();
    let reversed = polyeval_fast(&rev, &inv, opts)?;
    for (&i, v) in outer.iter().zip(reversed.iter()) {
        out[i] = v * s[i].powu(d as u32);
    }
    Ok(out)
}

fn fmt_sci(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "Inf".into() } else { "-Inf".into() }
    } else if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.2e}")
    }
}

fn fmt_opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    /// One header line and one row per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "kind,n,k,h,xi,degree,knot_mode,coeff_mode,trials,samples,skipped,mean,std,max,max_rank,mean_norm,flops,note\n",
        );
        let kind = match self.kind {
            ExperimentKind::Rank => "rank",
            ExperimentKind::Eval => "eval",
            ExperimentKind::Mb => "mb",
        };
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{kind},{},{},{},{},{},{},{},{},{},{},{:e},{:e},{:e},{},{},{},{}",
                c.n,
                fmt_opt(c.k),
                fmt_opt(c.h),
                fmt_opt(c.xi),
                fmt_opt(c.degree),
                fmt_opt(c.knot_mode.map(|m| format!("{m:?}").to_lowercase())),
                fmt_opt(c.coeff_mode.map(|m| format!("{m:?}").to_lowercase())),
                c.trials,
                c.samples,
                c.skipped,
                c.mean,
                c.std,
                c.max,
                c.max_rank,
                c.mean_norm.map(|v| format!("{v:e}")).unwrap_or_default(),
                c.flops,
                c.note.clone().unwrap_or_default().replace(',', ";"),
            );
        }
        out
    }

    /// Tables in the layout `ξ | n | k=… ` (ranks), `Degree | Max. Rank | Error`
    /// (evaluation) or `Degree | mean | std` (remainder tree).
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        match self.kind {
            ExperimentKind::Rank => {
                let ks = &self.config.k;
                for &h in &self.config.h {
                    let _ = writeln!(out, "ξ-ranks of the admissible blocks, h = {h}\n");
                    let head: Vec<String> = ks.iter().map(|k| format!("k={k}")).collect();
                    let _ = writeln!(out, "| ξ | n | {} |", head.join(" | "));
                    let _ = writeln!(out, "|---|---|{}", "---|".repeat(ks.len()));
                    for &xi in &self.config.xi {
                        for &n in &self.config.n {
                            let vals: Vec<String> = ks
                                .iter()
                                .map(|&k| {
                                    self.cells
                                        .iter()
                                        .find(|c| c.h == Some(h) && c.xi == Some(xi) && c.n == n && c.k == Some(k))
                                        .map(|c| if c.skipped { "–".into() } else { format!("{:.1}", c.mean) })
                                        .unwrap_or_default()
                                })
                                .collect();
                            let _ = writeln!(out, "| {xi} | {n} | {} |", vals.join(" | "));
                        }
                    }
                    let flagged: Vec<String> =
                        ks.iter().filter(|&&k| k < MIN_SECTORS && k >= 4).map(|k| format!("k={k}")).collect();
                    if !flagged.is_empty() {
                        let _ = writeln!(
                            out,
                            "\n{}: below {MIN_SECTORS} sectors; separation measured per block.",
                            flagged.join(", ")
                        );
                    }
                    out.push('\n');
                }
            }
            ExperimentKind::Eval => {
                let _ = writeln!(
                    out,
                    "Fast evaluation of {:?} Gaussian polynomials, {:?} knots\n",
                    self.config.coeff_mode, self.config.knot_mode
                );
                let multi = self.config.xi.len() > 1;
                if multi {
                    let _ = writeln!(out, "| ξ | Degree | Max. Rank | Error |\n|---|---|---|---|");
                } else {
                    let _ = writeln!(out, "| Degree | Max. Rank | Error |\n|---|---|---|");
                }
                for c in &self.cells {
                    let xi = if multi { format!("{} | ", fmt_opt(c.xi)) } else { String::new() };
                    let _ = writeln!(out, "| {xi}{} | {} | {} |", fmt_opt(c.degree), c.max_rank, fmt_sci(c.mean));
                }
            }
            ExperimentKind::Mb => {
                let _ = writeln!(
                    out,
                    "Remainder-tree evaluation, {:?} Gaussian coefficients, {:?} knots\n",
                    self.config.coeff_mode, self.config.knot_mode
                );
                let _ = writeln!(out, "| Degree | mean | std |\n|---|---|---|");
                for c in &self.cells {
                    let _ = writeln!(out, "| {} | {} | {} |", fmt_opt(c.degree), fmt_sci(c.mean), fmt_sci(c.std));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_rank_cfg() -> ExperimentConfig {
        ExperimentConfig {
            n: vec![256],
            k: vec![4, 32, 256],
            h: vec![0],
            xi: vec![1e-2, 1e-3, 1e-4],
            trials: 3,
            seed: 7,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn annulus_knots_respect_bounds() {
        let mut rng = RngStream::new(1);
        for h in [0, 1, 4] {
            let s = annulus_knots(500, h, &mut rng);
            let w = 0.5f64.powi(h as i32);
            assert!(s.iter().all(|z| z.norm() >= 1.0 - w - 1e-15 && z.norm() < 1.0 + w + 1e-15));
            let ang: Vec<f64> = s.iter().map(|z| z.arg().rem_euclid(2.0 * PI)).collect();
            assert!(ang.windows(2).all(|w| w[0] <= w[1] + 1e-12));
        }
    }

    #[test]
    fn admissible_block_excludes_neighbours() {
        let mut rng = RngStream::new(2);
        let n = 128;
        let s = annulus_knots(n, 1, &mut rng);
        let t = roots_of_unity(n);
        let part = SectorPartition::build_relaxed(&s, ONE, n, 16).unwrap();
        let mut total = 0;
        for q in 0..16 {
            let b = admissible_block(&part, &s, &t, q);
            let near: usize = [15, 0, 1].iter().map(|d| part.s_bucket((q + d) % 16).len()).sum();
            assert_eq!(b.rows(), n - near);
            assert_eq!(b.cols(), part.t_bucket(q).len());
            total += b.rows() * b.cols();
        }
        assert!(total > 0);
        let part = SectorPartition::build_relaxed(&s, ONE, n, 4).unwrap();
        assert_eq!(admissible_block(&part, &s, &t, 0).rows(), part.s_bucket(2).len());
    }

    #[test]
    fn rank_cells_skip_flag_and_monotone() {
        let r = rank_experiment(&small_rank_cfg()).unwrap();
        assert_eq!(r.cells.len(), 9);
        let skipped: Vec<&Cell> = r.cells.iter().filter(|c| c.skipped).collect();
        assert_eq!(skipped.len(), 3);
        assert!(skipped.iter().all(|c| c.k == Some(256) && c.trials == 0));
        assert!(r.cells.iter().filter(|c| c.k == Some(4)).all(|c| c.note.is_some()));
        for k in [4, 32] {
            let m: Vec<f64> = [1e-2, 1e-3, 1e-4]
                .iter()
                .map(|&x| r.cells.iter().find(|c| c.k == Some(k) && c.xi == Some(x)).unwrap().mean)
                .collect();
            assert!(m[0] <= m[1] && m[1] <= m[2], "{m:?}");
            assert!(m[0] >= 1.0 && m[2] < 20.0);
        }
        assert!(r.to_markdown().contains("| ξ | n | k=4 | k=32 | k=256 |"));
    }

    #[test]
    fn reports_are_deterministic_across_thread_counts() {
        let mut cfg = small_rank_cfg();
        cfg.threads = Some(1);
        let a = rank_experiment(&cfg).unwrap().to_json().unwrap();
        cfg.threads = Some(3);
        let mut b = rank_experiment(&cfg).unwrap();
        b.config.threads = Some(1);
        assert_eq!(a, b.to_json().unwrap());
    }

    #[test]
    fn eval_small_degrees() {
        let cfg = ExperimentConfig { degrees: vec![1, 32, 64], xi: vec![1e-5], trials: 4, seed: 3, ..Default::default() };
        let r = eval_experiment(&cfg).unwrap();
        assert!(r.cells[0].mean <= 1e-12);
        for c in &r.cells[1..] {
            assert!(c.mean <= 1e-4, "{c:?}");
            assert!(c.max_rank > 0 && c.max_rank <= 20);
        }
        assert!(r.to_markdown().contains("| Degree | Max. Rank | Error |"));
    }

    #[test]
    fn mb_low_degree_accurate() {
        let cfg = ExperimentConfig { degrees: vec![8, 16], trials: 10, seed: 4, ..Default::default() };
        let r = mb_comparison(&cfg).unwrap();
        assert!(r.cells.iter().all(|c| c.mean <= 1e-6 && c.samples == c.trials * (c.degree.unwrap() + 1)));
    }

    #[test]
    fn statistics_overflow_to_infinity() {
        let (m, s) = mean_std(&[1e200, 3e200]);
        assert!(m.is_finite() && s.is_infinite());
        let (m, _) = mean_std(&[1.0, f64::INFINITY]);
        assert!(m.is_infinite());
        assert_eq!(mean_std(&[2.0, 4.0]), (3.0, 2f64.sqrt()));
        assert_eq!(fmt_sci(f64::INFINITY), "Inf");
    }

    #[test]
    fn reverse_polynomial_evaluation_outside_disc() {
        let mut rng = RngStream::new(5);
        let p = gaussian_poly(128, CoeffMode::Complex, &mut rng);
        let s: Vec<C64> = (0..128).map(|_| C64::from_polar(rng.uniform(0.5, 1.5), rng.uniform(0.0, 6.3))).collect();
        let v = polyeval_via_reverse(&p, &s, &FastOptions::default()).unwrap();
        let h = horner_eval(&p, &s);
        for (a, b) in v.iter().zip(h.iter()) {
            assert!((a - b).norm() <= 1e-8 * b.norm().max(1.0));
        }
    }

    #[test]
    fn config_validation() {
        let bad = ExperimentConfig { trials: 0, ..Default::default() };
        assert!(rank_experiment(&bad).is_err());
        let bad = ExperimentConfig { xi: vec![], ..Default::default() };
        assert!(eval_experiment(&bad).is_err());
        let bad = ExperimentConfig { k: vec![12], ..Default::default() };
        assert!(rank_experiment(&bad).is_err());
    }
}
