//! Experiment driver: generate test matrices, precheck convergence,
//! run the coupled-chain and independent-sampler estimators, take exact
//! dense oracles at desk scale, and compare report files.
//!
//! Exit codes:
//!   0  success
//!   1  invalid input or internal error
//!   2  divergence (chains blew up, burn-in failed to couple, or the
//!      precheck predicts sp >= 1 and --force was not given)
//!   3  non-convergence (inner solver or Monte Carlo loop hit its cap)
//!   4  I/O or file-format error

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use ccinv::cc::{self, BurnInConfig, CcEstimate, StoppingRule, TraceQuery};
use ccinv::error::{Error, Result};
use ccinv::generators::{
    build_dirac_matrix, build_mixed_model_matrix, dirac_dimensions, simulate_pedigree,
    LatticeSpec, MixedModelSpec,
};
use ccinv::mm::{self, AnyMatrix};
use ccinv::noise::{NoiseFamily, NoiseSpec};
use ccinv::report::{self, Method, RunReport, Timings};
use ccinv::scalar::Complex64;
use ccinv::se::{self, InnerSolver, SeConfig};
use ccinv::solvers;
use ccinv::{Scalar, SparseMatrix};

const EXIT_HELP: &str = "Exit codes: 0 success, 1 invalid input, 2 divergence, \
3 non-convergence, 4 I/O error.";

#[derive(Parser)]
#[command(name = "ccinv", version, about = "Stochastic sparse-matrix inversion experiments", after_help = EXIT_HELP)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a generated test matrix in Matrix Market format.
    Generate {
        #[command(subcommand)]
        family: GenerateCmd,
    },
    /// Estimate sp(T) and sp(S) and print a convergence verdict.
    Precheck {
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Coupled-chain trace estimate.
    InvertCc(InvertCcArgs),
    /// Independent-sampler trace estimate with an inner solver.
    InvertSe(InvertSeArgs),
    /// Exact dense-factorization trace, desk scale only.
    Oracle {
        #[arg(long)]
        matrix: PathBuf,
        /// identity | diag:<idxfile> | mm:<file>
        #[arg(long, default_value = "identity")]
        q: String,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Compare two report files: difference, z-score, CPU ratio.
    Compare {
        a: PathBuf,
        b: PathBuf,
    },
    /// Render a report file as a table.
    Report {
        input: PathBuf,
    },
}

#[derive(Subcommand)]
enum GenerateCmd {
    /// Mixed-model coefficient matrix over a simulated pedigree.
    WuSchaeffer {
        #[arg(long)]
        animals: usize,
        #[arg(long)]
        herds: usize,
        #[arg(long, default_value_t = 5)]
        generations: usize,
        /// Weight of the asymmetric relationship variant, in [0, 1].
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        /// Residual-to-additive variance ratio.
        #[arg(long, default_value_t = 3.0)]
        ratio: f64,
        #[arg(long, default_value_t = 0.2)]
        unknown_fraction: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Free lattice fermion operator on a periodic 4-torus.
    Dirac {
        #[arg(long)]
        n0: usize,
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        n2: usize,
        #[arg(long)]
        n3: usize,
        /// Hopping constant K.
        #[arg(long, default_value_t = 0.1)]
        k: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct CommonArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// identity | diag:<idxfile> | mm:<file>
    #[arg(long)]
    q: Option<String>,
    /// Relative stopping tolerance on the MC error bar.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_cycles: Option<usize>,
    /// z2 | gaussian
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the per-cycle sample series as CSV.
    #[arg(long)]
    dump_series: Option<PathBuf>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Concurrent replicate limit.
    #[arg(long)]
    jobs: Option<usize>,
    /// Skip the spectral-radius precheck.
    #[arg(long)]
    force: bool,
    /// TOML key-value file with the same names as the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct InvertCcArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Relative coupling tolerance ending burn-in.
    #[arg(long)]
    burnin_tol: Option<f64>,
    #[arg(long)]
    burnin_max_cycles: Option<usize>,
}

#[derive(Args)]
struct InvertSeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// bicg | gs
    #[arg(long)]
    inner: Option<String>,
    #[arg(long)]
    inner_tol: Option<f64>,
    #[arg(long)]
    inner_max_iter: Option<usize>,
}

/// Flag values resolved against the optional config file and defaults.
struct Resolved {
    q: String,
    tol: f64,
    max_cycles: usize,
    noise: NoiseFamily,
    seed: u64,
    replicates: usize,
    jobs: usize,
    burnin_tol: f64,
    burnin_max_cycles: usize,
    inner: InnerSolver,
    inner_tol: f64,
    inner_max_iter: usize,
}

struct ConfigFile(toml::Table);

impl ConfigFile {
    fn load(path: Option<&Path>) -> Result<Self> {
        let table = match path {
            None => toml::Table::new(),
            Some(p) => {
                let text = fs::read_to_string(p)?;
                text.parse::<toml::Table>()
                    .map_err(|e| Error::InvalidInput(format!("config {}: {e}", p.display())))?
            }
        };
        Ok(Self(table))
    }

    fn f64(&self, key: &str) -> Option<f64> {
        self.0.get(key).and_then(|v| v.as_float().or(v.as_integer().map(|i| i as f64)))
    }

    fn usize(&self, key: &str) -> Option<usize> {
        self.0.get(key).and_then(|v| v.as_integer()).map(|i| i as usize)
    }

    fn u64(&self, key: &str) -> Option<u64> {
        self.0.get(key).and_then(|v| v.as_integer()).map(|i| i as u64)
    }

    fn string(&self, key: &str) -> Option<String> {
        self.0.get(key).and_then(|v| v.as_str()).map(str::to_owned)
    }
}

fn parse_noise(s: &str) -> Result<NoiseFamily> {
    match s {
        "z2" => Ok(NoiseFamily::Z2),
        "gaussian" => Ok(NoiseFamily::Gaussian),
        other => Err(Error::InvalidInput(format!(
            "unknown noise family {other:?}; expected z2 or gaussian"
        ))),
    }
}

fn parse_inner(s: &str) -> Result<InnerSolver> {
    match s {
        "bicg" => Ok(InnerSolver::Bicg),
        "gs" => Ok(InnerSolver::GaussSeidel),
        other => Err(Error::InvalidInput(format!(
            "unknown inner solver {other:?}; expected bicg or gs"
        ))),
    }
}

fn resolve(common: &CommonArgs, cc_extra: Option<&InvertCcArgs>, se_extra: Option<&InvertSeArgs>) -> Result<Resolved> {
    let cfg = ConfigFile::load(common.config.as_deref())?;
    let stop = StoppingRule::default();
    let burn = BurnInConfig::default();
    let se_cfg = SeConfig::default();
    let noise = match &common.noise {
        Some(s) => parse_noise(s)?,
        None => match cfg.string("noise") {
            Some(s) => parse_noise(&s)?,
            None => NoiseFamily::Z2,
        },
    };
    let inner = match se_extra.and_then(|a| a.inner.clone()).or_else(|| cfg.string("inner")) {
        Some(s) => parse_inner(&s)?,
        None => se_cfg.inner,
    };
    let replicates = common.replicates.or_else(|| cfg.usize("replicates")).unwrap_or(1);
    if replicates == 0 {
        return Err(Error::InvalidInput("replicates must be at least 1".into()));
    }
    Ok(Resolved {
        q: common
            .q
            .clone()
            .or_else(|| cfg.string("q"))
            .unwrap_or_else(|| "identity".into()),
        tol: common.tol.or_else(|| cfg.f64("tol")).unwrap_or(stop.rel_tolerance),
        max_cycles: common
            .max_cycles
            .or_else(|| cfg.usize("max_cycles"))
            .unwrap_or(stop.max_cycles),
        noise,
        seed: common.seed.or_else(|| cfg.u64("seed")).unwrap_or(1),
        replicates,
        jobs: common.jobs.or_else(|| cfg.usize("jobs")).unwrap_or(1).max(1),
        burnin_tol: cc_extra
            .and_then(|a| a.burnin_tol)
            .or_else(|| cfg.f64("burnin_tol"))
            .unwrap_or(burn.tolerance),
        burnin_max_cycles: cc_extra
            .and_then(|a| a.burnin_max_cycles)
            .or_else(|| cfg.usize("burnin_max_cycles"))
            .unwrap_or(burn.max_cycles),
        inner,
        inner_tol: se_extra
            .and_then(|a| a.inner_tol)
            .or_else(|| cfg.f64("inner_tol"))
            .unwrap_or(se_cfg.inner_tol),
        inner_max_iter: se_extra
            .and_then(|a| a.inner_max_iter)
            .or_else(|| cfg.usize("inner_max_iter"))
            .unwrap_or(se_cfg.inner_max_iter),
    })
}

/// Query spec before the real/complex split.
enum QuerySpec {
    Identity,
    Diag(Vec<usize>),
    Matrix(AnyMatrix),
}

impl QuerySpec {
    fn parse(spec: &str) -> Result<Self> {
        if spec == "identity" {
            return Ok(QuerySpec::Identity);
        }
        if let Some(path) = spec.strip_prefix("diag:") {
            let text = fs::read_to_string(path)?;
            let mut idx = Vec::new();
            for (ln, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                idx.push(line.parse::<usize>().map_err(|_| {
                    Error::InvalidInput(format!("{path}:{}: bad index {line:?}", ln + 1))
                })?);
            }
            if idx.is_empty() {
                return Err(Error::InvalidInput(format!("{path}: no indices")));
            }
            return Ok(QuerySpec::Diag(idx));
        }
        if let Some(path) = spec.strip_prefix("mm:") {
            return Ok(QuerySpec::Matrix(mm::read_matrix_market(Path::new(path))?));
        }
        Err(Error::InvalidInput(format!(
            "bad query {spec:?}; expected identity, diag:<idxfile>, or mm:<file>"
        )))
    }

    fn describe(&self) -> String {
        match self {
            QuerySpec::Identity => "identity".into(),
            QuerySpec::Diag(idx) => format!("diag[{} indices]", idx.len()),
            QuerySpec::Matrix(m) => format!("general[order {}]", m.order()),
        }
    }

    fn to_real(&self) -> Result<TraceQuery<f64>> {
        match self {
            QuerySpec::Identity => Ok(TraceQuery::Identity),
            QuerySpec::Diag(idx) => Ok(TraceQuery::DiagonalIndicator(idx.clone())),
            QuerySpec::Matrix(AnyMatrix::Real(m)) => Ok(TraceQuery::General(m.clone())),
            QuerySpec::Matrix(AnyMatrix::Complex(_)) => Err(Error::InvalidInput(
                "complex Q over a real matrix is not supported".into(),
            )),
        }
    }

    fn to_complex(&self) -> Result<TraceQuery<Complex64>> {
        match self {
            QuerySpec::Identity => Ok(TraceQuery::Identity),
            QuerySpec::Diag(idx) => Ok(TraceQuery::DiagonalIndicator(idx.clone())),
            QuerySpec::Matrix(AnyMatrix::Real(m)) => Ok(TraceQuery::General(m.promote())),
            QuerySpec::Matrix(AnyMatrix::Complex(m)) => Ok(TraceQuery::General(m.clone())),
        }
    }
}

/// Real matrices with a negative diagonal entry run in complex
/// arithmetic, where the sweep scale sqrt(c_ii) is well defined.
fn load_matrix(path: &Path, notes: &mut Vec<String>) -> Result<AnyMatrix> {
    let any = mm::read_matrix_market(path)?;
    if let AnyMatrix::Real(m) = &any {
        if m.diagonal().iter().any(|&d| d < 0.0) {
            notes.push("negative diagonal entries: promoted to complex arithmetic".into());
            return Ok(AnyMatrix::Complex(m.promote()));
        }
    }
    Ok(any)
}

struct PrecheckOutcome {
    sp_t: solvers::SpectralEstimate,
    sp_s: solvers::SpectralEstimate,
}

impl PrecheckOutcome {
    fn passes(&self) -> bool {
        self.sp_t.value < 1.0 && self.sp_s.value < 1.0
    }

    fn render(&self) -> String {
        let mut out = String::new();
        let verdict = |e: &solvers::SpectralEstimate| {
            if e.value < 1.0 { "ok" } else { "DIVERGENT" }
        };
        let _ = writeln!(
            out,
            "sp(T) ~ {:.6}  [{}{}]",
            self.sp_t.value,
            verdict(&self.sp_t),
            if self.sp_t.converged { "" } else { ", estimate unconverged" }
        );
        let _ = writeln!(
            out,
            "sp(S) ~ {:.6}  [{}{}]",
            self.sp_s.value,
            verdict(&self.sp_s),
            if self.sp_s.converged { "" } else { ", estimate unconverged" }
        );
        out
    }
}

fn precheck_any(any: &AnyMatrix) -> Result<PrecheckOutcome> {
    const TOL: f64 = 1e-4;
    const MAX_IT: usize = 5_000;
    let (sp_t, sp_s) = match any {
        AnyMatrix::Real(m) => (
            solvers::spectral_radius_t(m, TOL, MAX_IT)?,
            solvers::spectral_radius_s(m, TOL, MAX_IT)?,
        ),
        AnyMatrix::Complex(m) => (
            solvers::spectral_radius_t(m, TOL, MAX_IT)?,
            solvers::spectral_radius_s(m, TOL, MAX_IT)?,
        ),
    };
    Ok(PrecheckOutcome { sp_t, sp_s })
}

/// Aggregate the per-replicate estimates into one report. With one
/// replicate this is a plain copy of its numbers.
struct Aggregate {
    estimate_re: f64,
    estimate_im: f64,
    mc_std_error: f64,
    sample_variance: f64,
    burn_in: usize,
    samples: usize,
    effective_length: f64,
    converged: bool,
    empirical_std_error: Option<f64>,
}

fn aggregate<T: Scalar>(estimates: &[CcEstimate<T>]) -> Result<Aggregate> {
    let n = estimates.len() as f64;
    let mean_re = estimates.iter().map(|e| e.value.re()).sum::<f64>() / n;
    let mean_im = estimates.iter().map(|e| e.value.im()).sum::<f64>() / n;
    let mean_err = estimates.iter().map(|e| e.mc_std_error).sum::<f64>() / n;
    let empirical = if estimates.len() > 1 {
        let re: Vec<f64> = estimates.iter().map(|e| e.value.re()).collect();
        let mut err2 = ccinv::diagnostics::empirical_std_error(&re)?.powi(2);
        if T::IS_COMPLEX {
            let im: Vec<f64> = estimates.iter().map(|e| e.value.im()).collect();
            err2 += ccinv::diagnostics::empirical_std_error(&im)?.powi(2);
        }
        Some(err2.sqrt())
    } else {
        None
    };
    let first = &estimates[0];
    Ok(Aggregate {
        estimate_re: mean_re,
        estimate_im: mean_im,
        mc_std_error: mean_err,
        sample_variance: first.sample_variance,
        burn_in: first.burn_in,
        samples: first.samples.len(),
        effective_length: first.effective_length,
        converged: estimates.iter().all(|e| e.converged),
        empirical_std_error: empirical,
    })
}

/// Run `task` for replicate indices 0..n, at most `jobs` at a time.
fn run_replicates<T, F>(n: usize, jobs: usize, task: F) -> Result<Vec<CcEstimate<T>>>
where
    T: Scalar,
    F: Fn(usize) -> Result<CcEstimate<T>> + Sync,
{
    if n == 1 || jobs == 1 {
        return (0..n).map(&task).collect();
    }
    let task = &task;
    let mut out: Vec<Option<CcEstimate<T>>> = (0..n).map(|_| None).collect();
    let mut first_err: Option<Error> = None;
    for wave in (0..n).collect::<Vec<_>>().chunks(jobs) {
        std::thread::scope(|scope| {
            let handles: Vec<_> = wave
                .iter()
                .map(|&r| (r, scope.spawn(move || task(r))))
                .collect();
            for (r, h) in handles {
                match h.join().expect("replicate thread panicked") {
                    Ok(e) => out[r] = Some(e),
                    Err(e) => {
                        if first_err.is_none() {
                            first_err = Some(e);
                        }
                    }
                }
            }
        });
        if first_err.is_some() {
            break;
        }
    }
    if let Some(e) = first_err {
        return Err(e);
    }
    Ok(out.into_iter().map(|e| e.unwrap()).collect())
}

fn dump_series<T: Scalar>(path: &Path, samples: &[T]) -> Result<()> {
    let mut out = String::from("cycle,re,im\n");
    for (i, s) in samples.iter().enumerate() {
        let _ = writeln!(out, "{},{:.17e},{:.17e}", i + 1, s.re(), s.im());
    }
    fs::write(path, out)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn finish_report(
    method: Method,
    matrix_path: &Path,
    order: usize,
    nnz: usize,
    complex: bool,
    query: String,
    agg: Aggregate,
    res: &Resolved,
    started: Instant,
    burnin_tol: Option<f64>,
    inner: Option<(f64, usize)>,
    notes: Vec<String>,
    report_path: Option<&Path>,
) -> Result<RunReport> {
    let total = started.elapsed().as_secs_f64();
    let cycles = agg.burn_in + agg.samples;
    let timings = Timings {
        total_s: total,
        burn_in_s: None,
        sampling_s: None,
        per_cycle_s: if cycles > 0 { Some(total / cycles as f64) } else { None },
        per_burn_in_cycle_s: if agg.burn_in > 0 {
            Some(total / cycles as f64)
        } else {
            None
        },
        per_effective_cycle_s: if agg.effective_length > 0.0 {
            Some(total / agg.effective_length)
        } else {
            None
        },
    };
    let report = RunReport {
        method,
        matrix: matrix_path.display().to_string(),
        order,
        nnz,
        complex,
        query,
        estimate_re: agg.estimate_re,
        estimate_im: agg.estimate_im,
        mc_std_error: agg.mc_std_error,
        sample_variance: agg.sample_variance,
        burn_in: agg.burn_in,
        samples: agg.samples,
        effective_length: agg.effective_length,
        converged: agg.converged,
        empirical_std_error: agg.empirical_std_error,
        replicates: if res.replicates > 1 { Some(res.replicates) } else { None },
        inner_rounds_per_system: inner.map(|(r, _)| r),
        inner_systems: inner.map(|(_, s)| s),
        noise: match res.noise {
            NoiseFamily::Z2 => "z2".into(),
            NoiseFamily::Gaussian => "gaussian".into(),
        },
        seed: res.seed,
        tolerance: res.tol,
        burn_in_tolerance: burnin_tol,
        timings,
        notes,
    };
    if let Some(p) = report_path {
        report.save(p)?;
    }
    print!("{}", report.render());
    Ok(report)
}

fn gate_precheck(any: &AnyMatrix, force: bool) -> Result<()> {
    if force {
        return Ok(());
    }
    let outcome = precheck_any(any)?;
    print!("{}", outcome.render());
    if !outcome.passes() {
        return Err(Error::Diverged {
            cycle: 0,
            norm: outcome.sp_t.value.max(outcome.sp_s.value),
        });
    }
    Ok(())
}

fn cmd_invert_cc(args: &InvertCcArgs) -> Result<()> {
    let res = resolve(&args.common, Some(args), None)?;
    let mut notes = Vec::new();
    let any = load_matrix(&args.common.matrix, &mut notes)?;
    gate_precheck(&any, args.common.force)?;
    let qspec = QuerySpec::parse(&res.q)?;
    let burn = BurnInConfig {
        tolerance: res.burnin_tol,
        max_cycles: res.burnin_max_cycles,
    };
    let stop = StoppingRule {
        rel_tolerance: res.tol,
        check_every: 100,
        max_cycles: res.max_cycles,
    };
    let started = Instant::now();
    let (order, nnz, complex) = (any.order(), any.nnz(), any.is_complex());

    fn run<T: Scalar>(
        c: &SparseMatrix<T>,
        q: &TraceQuery<T>,
        res: &Resolved,
        burn: &BurnInConfig,
        stop: &StoppingRule,
        series: Option<&Path>,
    ) -> Result<Aggregate> {
        let estimates = run_replicates(res.replicates, res.jobs, |r| {
            let noise = NoiseSpec::new(res.noise, res.seed + r as u64, c.order());
            cc::estimate_trace(c, q, &noise, burn, stop)
        })?;
        if let Some(p) = series {
            dump_series(p, &estimates[0].samples)?;
        }
        aggregate(&estimates)
    }

    let series = args.common.dump_series.as_deref();
    let agg = match &any {
        AnyMatrix::Real(m) => run(m, &qspec.to_real()?, &res, &burn, &stop, series)?,
        AnyMatrix::Complex(m) => run(m, &qspec.to_complex()?, &res, &burn, &stop, series)?,
    };
    finish_report(
        Method::Cc,
        &args.common.matrix,
        order,
        nnz,
        complex,
        qspec.describe(),
        agg,
        &res,
        started,
        Some(res.burnin_tol),
        None,
        notes,
        args.common.report.as_deref(),
    )?;
    Ok(())
}

fn cmd_invert_se(args: &InvertSeArgs) -> Result<()> {
    let res = resolve(&args.common, None, Some(args))?;
    let mut notes = Vec::new();
    let any = load_matrix(&args.common.matrix, &mut notes)?;
    let qspec = QuerySpec::parse(&res.q)?;
    let stop = StoppingRule {
        rel_tolerance: res.tol,
        check_every: 100,
        max_cycles: res.max_cycles,
    };
    let se_cfg = SeConfig {
        inner: res.inner,
        inner_tol: res.inner_tol,
        inner_max_iter: res.inner_max_iter,
    };
    let started = Instant::now();
    let (order, nnz, complex) = (any.order(), any.nnz(), any.is_complex());

    fn run<T: Scalar>(
        c: &SparseMatrix<T>,
        q: &TraceQuery<T>,
        res: &Resolved,
        se_cfg: &SeConfig,
        stop: &StoppingRule,
        series: Option<&Path>,
    ) -> Result<(Aggregate, f64, usize)> {
        let mut stats_cell = std::sync::Mutex::new((0usize, 0usize));
        let estimates = run_replicates(res.replicates, res.jobs, |r| {
            let noise = NoiseSpec::new(res.noise, res.seed + r as u64, c.order());
            let (est, stats) = se::se_estimate_trace(c, q, &noise, se_cfg, stop)?;
            let mut cell = stats_cell.lock().unwrap();
            cell.0 += stats.total_rounds;
            cell.1 += stats.systems;
            Ok(est)
        })?;
        if let Some(p) = series {
            dump_series(p, &estimates[0].samples)?;
        }
        let agg = aggregate(&estimates)?;
        let (rounds, systems) = *stats_cell.get_mut().unwrap();
        let per = if systems > 0 { rounds as f64 / systems as f64 } else { 0.0 };
        Ok((agg, per, systems))
    }

    let series = args.common.dump_series.as_deref();
    let (agg, rounds_per_system, systems) = match &any {
        AnyMatrix::Real(m) => run(m, &qspec.to_real()?, &res, &se_cfg, &stop, series)?,
        AnyMatrix::Complex(m) => run(m, &qspec.to_complex()?, &res, &se_cfg, &stop, series)?,
    };
    finish_report(
        Method::Se,
        &args.common.matrix,
        order,
        nnz,
        complex,
        qspec.describe(),
        agg,
        &res,
        started,
        None,
        Some((rounds_per_system, systems)),
        notes,
        args.common.report.as_deref(),
    )?;
    Ok(())
}

fn cmd_oracle(matrix: &Path, q: &str, report_path: Option<&Path>) -> Result<()> {
    let mut notes = Vec::new();
    let any = load_matrix(matrix, &mut notes)?;
    let qspec = QuerySpec::parse(q)?;
    let started = Instant::now();
    let (order, nnz, complex) = (any.order(), any.nnz(), any.is_complex());
    let (re, im) = match &any {
        AnyMatrix::Real(m) => {
            let inv = solvers::dense_lu_inverse(m, usize::MAX)?;
            (qspec.to_real()?.dense_trace(&inv), 0.0)
        }
        AnyMatrix::Complex(m) => {
            let inv = solvers::dense_lu_inverse(m, usize::MAX)?;
            let t = qspec.to_complex()?.dense_trace(&inv);
            (t.re, t.im)
        }
    };
    let res = Resolved {
        q: q.to_owned(),
        tol: 0.0,
        max_cycles: 0,
        noise: NoiseFamily::Z2,
        seed: 0,
        replicates: 1,
        jobs: 1,
        burnin_tol: 0.0,
        burnin_max_cycles: 0,
        inner: InnerSolver::Bicg,
        inner_tol: 0.0,
        inner_max_iter: 0,
    };
    let agg = Aggregate {
        estimate_re: re,
        estimate_im: im,
        mc_std_error: 0.0,
        sample_variance: 0.0,
        burn_in: 0,
        samples: 0,
        effective_length: 0.0,
        converged: true,
        empirical_std_error: None,
    };
    finish_report(
        Method::Oracle,
        matrix,
        order,
        nnz,
        complex,
        qspec.describe(),
        agg,
        &res,
        started,
        None,
        None,
        notes,
        report_path,
    )?;
    Ok(())
}

fn cmd_generate(cmd: &GenerateCmd) -> Result<()> {
    match cmd {
        GenerateCmd::WuSchaeffer {
            animals,
            herds,
            generations,
            lambda,
            ratio,
            unknown_fraction,
            seed,
            out,
        } => {
            let ped = simulate_pedigree(*animals, *herds, *generations, *unknown_fraction, *seed)?;
            let spec = MixedModelSpec {
                variance_ratio: *ratio,
                lambda: *lambda,
            };
            let m = build_mixed_model_matrix(&ped, &spec)?;
            mm::write_matrix_market(&m, out)?;
            println!(
                "wrote {} (order {}, nnz {})",
                out.display(),
                m.order(),
                m.nnz()
            );
        }
        GenerateCmd::Dirac {
            n0,
            n1,
            n2,
            n3,
            k,
            out,
        } => {
            let spec = LatticeSpec {
                extents: [*n0, *n1, *n2, *n3],
                hopping: *k,
            };
            let (order, nnz) = dirac_dimensions(&spec)?;
            let m = build_dirac_matrix(&spec)?;
            debug_assert_eq!((m.order(), m.nnz()), (order, nnz));
            mm::write_matrix_market(&m, out)?;
            println!(
                "wrote {} (order {}, nnz {})",
                out.display(),
                m.order(),
                m.nnz()
            );
        }
    }
    Ok(())
}

fn cmd_precheck(matrix: &Path) -> Result<()> {
    let mut notes = Vec::new();
    let any = load_matrix(matrix, &mut notes)?;
    for n in &notes {
        println!("note: {n}");
    }
    let outcome = precheck_any(&any)?;
    print!("{}", outcome.render());
    if !outcome.passes() {
        return Err(Error::Diverged {
            cycle: 0,
            norm: outcome.sp_t.value.max(outcome.sp_s.value),
        });
    }
    println!("verdict: convergent");
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.cmd {
        Cmd::Generate { family } => cmd_generate(family),
        Cmd::Precheck { matrix } => cmd_precheck(matrix),
        Cmd::InvertCc(args) => cmd_invert_cc(args),
        Cmd::InvertSe(args) => cmd_invert_se(args),
        Cmd::Oracle { matrix, q, report } => cmd_oracle(matrix, q, report.as_deref()),
        Cmd::Compare { a, b } => {
            let ra = RunReport::load(a)?;
            let rb = RunReport::load(b)?;
            let c = report::compare(&ra, &rb)?;
            print!("{}", c.render());
            Ok(())
        }
        Cmd::Report { input } => {
            let r = RunReport::load(input)?;
            print!("{}", r.render());
            Ok(())
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Diverged { .. } | Error::BurnInExceeded { .. } => 2,
        Error::NoConvergence { .. } | Error::Breakdown { .. } | Error::NonFiniteSample { .. } => 3,
        Error::Io(_) | Error::MatrixMarket(_) | Error::Report(_) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
