//! Command-line front end.
//!
//! Complex vectors are exchanged as CSV with one `re,im` row per entry; a
//! single column is read as real values.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::baselines::{coeffs_from_roots, horner_eval};
use crate::error::{Error, Result};
use crate::experiments::{
    eval_experiment, mb_comparison, rank_experiment, CoeffMode, ExperimentConfig, ExperimentReport, KnotMode,
};
use crate::numeric::{RngStream, C64};
use crate::problems::{
    cauchy_matvec, cauchy_solve, polyeval_fast, polyinterp_fast, Fallback, FastOptions, Mode,
};
use crate::transforms::{apply_omega, fft, poly_mul, roots_of_unity, Direction, Polynomial};

#[derive(Debug, Parser)]
#[command(name = "cvhss", version, about = "Fast polynomial evaluation, interpolation and Cauchy solves")]
struct Cli {
    /// More log output (repeat for debug level).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a polynomial at the given knots.
    Polyeval {
        #[arg(long)]
        coeffs: PathBuf,
        #[arg(long)]
        knots: PathBuf,
        #[command(flatten)]
        io: Output,
        #[command(flatten)]
        fast: FastArgs,
    },
    /// Interpolate values at distinct knots; prints coefficients.
    Interp {
        #[arg(long)]
        values: PathBuf,
        #[arg(long)]
        knots: PathBuf,
        #[command(flatten)]
        io: Output,
        #[command(flatten)]
        fast: FastArgs,
    },
    /// v_i = Σ_j u_j/(s_i − t_j).
    CauchyMatvec {
        #[arg(long)]
        s: PathBuf,
        #[arg(long)]
        t: PathBuf,
        #[arg(long)]
        u: PathBuf,
        #[command(flatten)]
        io: Output,
        #[command(flatten)]
        fast: FastArgs,
    },
    /// Solve Σ_j u_j/(s_i − t_j) = v_i for u.
    CauchySolve {
        #[arg(long)]
        s: PathBuf,
        #[arg(long)]
        t: PathBuf,
        #[arg(long)]
        v: PathBuf,
        #[command(flatten)]
        io: Output,
        #[command(flatten)]
        fast: FastArgs,
    },
    /// ξ-ranks of the admissible blocks.
    RankExp {
        #[arg(long, value_delimiter = ',', default_values_t = [1024usize, 2048, 4096])]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [4usize, 32, 512])]
        k: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [0u32, 1, 4])]
        h: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_values_t = [1e-2, 1e-3, 1e-4])]
        xi: Vec<f64>,
        #[command(flatten)]
        exp: ExpArgs,
    },
    /// Accuracy of fast evaluation against Horner's rule.
    EvalExp {
        #[arg(long, value_delimiter = ',', default_values_t = [32usize, 64, 128, 256, 512, 1024, 2048, 4096])]
        degree: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [1e-5])]
        xi: Vec<f64>,
        #[command(flatten)]
        exp: ExpArgs,
    },
    /// Accuracy of the remainder-tree evaluator.
    MbExp {
        #[arg(long, value_delimiter = ',', default_values_t = [16usize, 32, 64, 128])]
        degree: Vec<usize>,
        #[command(flatten)]
        exp: ExpArgs,
    },
    /// Run a quick invariant suite.
    Selftest,
}

#[derive(Debug, Args)]
struct Output {
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Inputs carry, and outputs get, a `re,im` header line.
    #[arg(long)]
    header: bool,
}

#[derive(Debug, Args)]
struct FastArgs {
    #[arg(long, default_value_t = 1e-12)]
    xi: f64,
    /// Fixed generator length (overrides --xi).
    #[arg(long)]
    rho: Option<usize>,
    /// Sector count (power of two ≥ 16).
    #[arg(long)]
    k: Option<usize>,
    /// Use dense Cauchy factors throughout.
    #[arg(long)]
    dense: bool,
    #[arg(long, value_enum, default_value_t = FallbackArg::Dense)]
    fallback: FallbackArg,
    /// Iterative refinement steps for solves.
    #[arg(long, default_value_t = 2)]
    refine: usize,
}

#[derive(Debug, Args)]
struct ExpArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Knot placement.
    #[arg(long, value_enum, default_value_t = KnotArg::Circle)]
    mode: KnotArg,
    #[arg(long = "coeffs-mode", value_enum, default_value_t = CoeffArg::Real)]
    coeffs_mode: CoeffArg,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FallbackArg {
    Dense,
    Error,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Md,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KnotArg {
    Circle,
    Disc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CoeffArg {
    Real,
    Complex,
}

impl FastArgs {
    fn options(&self) -> FastOptions {
        FastOptions {
            xi: self.xi,
            rho: self.rho,
            k: self.k,
            mode: if self.dense { Mode::Dense } else { Mode::FastIfCv },
            fallback: match self.fallback {
                FallbackArg::Dense => Fallback::Dense,
                FallbackArg::Error => Fallback::Error,
            },
            refine_steps: self.refine,
            ..FastOptions::default()
        }
    }
}

impl ExpArgs {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            trials: self.trials,
            seed: self.seed,
            knot_mode: match self.mode {
                KnotArg::Circle => KnotMode::Circle,
                KnotArg::Disc => KnotMode::Disc,
            },
            coeff_mode: match self.coeffs_mode {
                CoeffArg::Real => CoeffMode::Real,
                CoeffArg::Complex => CoeffMode::Complex,
            },
            threads: self.threads,
            ..ExperimentConfig::default()
        }
    }
}

/// Parses a complex CSV vector.
pub fn read_complex_csv(source: impl Read, header: bool) -> Result<Vec<C64>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(header).flexible(true).trim(csv::Trim::All).from_reader(source);
    let mut out = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Io(e.to_string()))?;
        let field = |i: usize| -> Result<f64> {
            record
                .get(i)
                .ok_or_else(|| Error::InvalidParameter(format!("row {line}: missing column {i}")))?
                .parse::<f64>()
                .map_err(|e| Error::InvalidParameter(format!("row {line}: {e}")))
        };
        let z = match record.len() {
            1 => C64::new(field(0)?, 0.0),
            2 => C64::new(field(0)?, field(1)?),
            0 => continue,
            c => return Err(Error::InvalidParameter(format!("row {line}: expected 1 or 2 columns, got {c}"))),
        };
        out.push(z);
    }
    Ok(out)
}

/// Writes `re,im` rows with 17 significant digits.
pub fn write_complex_csv(sink: impl Write, z: &[C64], header: bool) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    let io = |e: csv::Error| Error::Io(e.to_string());
    if header {
        writer.write_record(["re", "im"]).map_err(io)?;
    }
    for v in z {
        writer.write_record([format!("{:.16e}", v.re), format!("{:.16e}", v.im)]).map_err(io)?;
    }
    writer.flush()?;
    Ok(())
}

fn read_file(path: &Path, header: bool) -> Result<Vec<C64>> {
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_complex_csv(file, header)
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit(io: &Output, z: &[C64]) -> Result<()> {
    write_complex_csv(sink(&io.out)?, z, io.header)
}

fn emit_report(report: &ExperimentReport, args: &ExpArgs) -> Result<()> {
    let text = match args.format {
        Format::Csv => report.to_csv(),
        Format::Md => report.to_markdown(),
        Format::Json => report.to_json()?,
    };
    sink(&args.out)?.write_all(text.as_bytes())?;
    log::info!("wall time {:.2} s", report.wall_time);
    Ok(())
}

fn check(name: &str, ok: bool, out: &mut Vec<(String, bool)>) {
    out.push((name.to_string(), ok));
}

fn rel(a: &[C64], b: &[C64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    d / b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt()
}

/// Quick invariant checks; each entry is `(name, passed)`.
pub fn selftest() -> Vec<(String, bool)> {
    let mut out = Vec::new();
    let mut rng = RngStream::new(20);
    let gauss = |rng: &mut RngStream, n: usize| -> Vec<C64> { (0..n).map(|_| rng.complex_gaussian()).collect() };

    let x = gauss(&mut rng, 1024);
    let round = fft(&fft(&x, Direction::Forward).unwrap(), Direction::Inverse).unwrap();
    check("fft round trip", rel(&round, &x) < 1e-13, &mut out);

    let y = apply_omega(&x, false).unwrap();
    let nx: f64 = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let ny: f64 = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    check("omega unitary", (ny / nx - 1.0).abs() < 1e-13, &mut out);

    let p = Polynomial::from_vec(gauss(&mut rng, 200));
    let q = Polynomial::from_vec(gauss(&mut rng, 150));
    let fast = poly_mul(&p, &q);
    let mut school = vec![C64::new(0.0, 0.0); 349];
    for (i, a) in p.coeffs().iter().enumerate() {
        for (j, b) in q.coeffs().iter().enumerate() {
            school[i + j] += a * b;
        }
    }
    let scale = p.coeffs().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
        * q.coeffs().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let err = fast.coeffs().iter().zip(&school).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    check("convolution vs schoolbook", err <= 1e-11 * scale, &mut out);

    let growth = coeffs_from_roots(&[C64::new(2.0, 0.0); 64]);
    let max = growth.coeffs().iter().map(|z| z.norm()).fold(0.0, f64::max);
    check("subproduct tree coefficient growth", max >= 2f64.powi(64) * (1.0 - 1e-6), &mut out);

    let a = C64::new(0.3, -1.7);
    let s = gauss(&mut rng, 8);
    let t = gauss(&mut rng, 8);
    let cov = s.iter().zip(&t).all(|(&si, &tj)| {
        let base = 1.0 / (si - tj);
        let shifted = 1.0 / ((si + a) - (tj + a));
        let scaled = 1.0 / (a * si - a * tj) * a;
        (shifted - base).norm() <= 1e-12 * base.norm() && (scaled - base).norm() <= 1e-12 * base.norm()
    });
    check("cauchy shift and scale covariance", cov, &mut out);

    let knots: Vec<C64> = (0..256)
        .map(|i| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (i as f64 + 0.5 + rng.uniform(-0.25, 0.25)) / 256.0))
        .collect();
    let opts = FastOptions::default();
    let low = Polynomial::from_vec(gauss(&mut rng, 3));
    let padded = Polynomial::from_vec([low.coeffs().to_vec(), vec![C64::new(0.0, 0.0); 253]].concat());
    let ok = polyeval_fast(&padded, &knots, &opts).map(|v| rel(&v, &horner_eval(&low, &knots)) <= 1e-9);
    check("degree ≤ 2 exactness", ok.unwrap_or(false), &mut out);

    let v = gauss(&mut rng, 256);
    let ok = polyinterp_fast(&v, &knots, &opts)
        .and_then(|ip| polyeval_fast(&ip.poly, &knots, &opts))
        .map(|back| rel(&back, &v) <= 1e-6);
    check("eval after interp round trip", ok.unwrap_or(false), &mut out);

    let w = roots_of_unity(64);
    let u = gauss(&mut rng, 64);
    let shifted: Vec<C64> = w.iter().map(|z| z * C64::from_polar(1.0, std::f64::consts::PI / 64.0)).collect();
    let ok = cauchy_matvec(&shifted, &w, &u, &opts)
        .and_then(|v| cauchy_solve(&shifted, &w, &v, &opts))
        .map(|back| rel(&back, &u) <= 1e-8);
    check("cauchy matvec/solve pair", ok.unwrap_or(false), &mut out);
    out
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_)
        | Error::InvalidParameter(_)
        | Error::DimensionMismatch { .. }
        | Error::NonFinite(_)
        | Error::InvalidPartition(_)
        | Error::DuplicateKnots(..) => 1,
        _ => 2,
    }
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Polyeval { coeffs, knots, io, fast } => {
            let p = Polynomial::from_vec(read_file(&coeffs, io.header)?);
            let s = read_file(&knots, io.header)?;
            emit(&io, &polyeval_fast(&p, &s, &fast.options())?)?;
        }
        Command::Interp { values, knots, io, fast } => {
            let v = read_file(&values, io.header)?;
            let s = read_file(&knots, io.header)?;
            let out = polyinterp_fast(&v, &s, &fast.options())?;
            log::info!("relative residual {:e}", out.residual);
            emit(&io, out.poly.coeffs())?;
        }
        Command::CauchyMatvec { s, t, u, io, fast } => {
            let (s, t, u) = (read_file(&s, io.header)?, read_file(&t, io.header)?, read_file(&u, io.header)?);
            emit(&io, &cauchy_matvec(&s, &t, &u, &fast.options())?)?;
        }
        Command::CauchySolve { s, t, v, io, fast } => {
            let (s, t, v) = (read_file(&s, io.header)?, read_file(&t, io.header)?, read_file(&v, io.header)?);
            emit(&io, &cauchy_solve(&s, &t, &v, &fast.options())?)?;
        }
        Command::RankExp { n, k, h, xi, exp } => {
            let cfg = ExperimentConfig { n, k, h, xi, ..exp.config() };
            emit_report(&rank_experiment(&cfg)?, &exp)?;
        }
        Command::EvalExp { degree, xi, exp } => {
            let cfg = ExperimentConfig { degrees: degree, xi, ..exp.config() };
            emit_report(&eval_experiment(&cfg)?, &exp)?;
        }
        Command::MbExp { degree, exp } => {
            let cfg = ExperimentConfig { degrees: degree, ..exp.config() };
            emit_report(&mb_comparison(&cfg)?, &exp)?;
        }
        Command::Selftest => {
            let results = selftest();
            let mut stdout = io::stdout().lock();
            for (name, ok) in &results {
                writeln!(stdout, "{} {name}", if *ok { "PASS" } else { "FAIL" })?;
            }
            return Ok(if results.iter().all(|r| r.1) { 0 } else { 2 });
        }
    }
    Ok(0)
}

/// Runs the CLI on `argv` (program name first) and returns the exit status:
/// 0 on success, 1 on usage or input errors, 2 on numerical failure.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let z = vec![C64::new(0.1, -1.0 / 3.0), C64::new(1e-300, 6.02e23), C64::new(-0.0, f64::MAX)];
        for header in [false, true] {
            let mut buf = Vec::new();
            write_complex_csv(&mut buf, &z, header).unwrap();
            assert_eq!(read_complex_csv(buf.as_slice(), header).unwrap(), z);
        }
    }

    #[test]
    fn csv_accepts_real_column_and_rejects_garbage() {
        let z = read_complex_csv("1.5\n-2\n".as_bytes(), false).unwrap();
        assert_eq!(z, vec![C64::new(1.5, 0.0), C64::new(-2.0, 0.0)]);
        assert!(read_complex_csv("1,2,3\n".as_bytes(), false).is_err());
        assert!(read_complex_csv("a,b\n".as_bytes(), false).is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["cvhss", "bogus"]), 1);
        assert_eq!(run(["cvhss", "polyeval", "--unknown-flag"]), 1);
        assert_eq!(run(["cvhss", "polyeval", "--coeffs", "/nonexistent", "--knots", "/nonexistent"]), 1);
        assert_eq!(run(["cvhss", "--help"]), 0);
    }

    #[test]
    fn selftest_passes() {
        let r = selftest();
        assert!(r.iter().all(|x| x.1), "{r:?}");
    }
}
