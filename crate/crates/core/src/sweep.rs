//! β₀ sweeps, derivative scans and result files.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entanglement::{ggm, log_negativity_pure, time_average, SchmidtPlan, TimeSeries};
use crate::error::{Error, Result};
use crate::groundstate::{ground_state, GroundStateSpec, BETA_CRITICAL};
use crate::lattice::{Bipartition, TorusLattice};
use crate::lindblad::{noisy_ln_series, BathParams, IntegratorConfig};
use crate::loopgroup::LoopGroup;
use crate::quench::{rate_function, EchoSeries, Quench, TimeGrid};

/// Minima of `L(t)` below this count as echo zeros.
pub const ECHO_ZERO_THRESHOLD: f64 = 1e-4;

pub const CSV_HEADER: [&str; 6] = [
    "beta0",
    "avg_ggm",
    "avg_ln",
    "min_echo",
    "d_avg_ggm",
    "d_avg_ln",
];
pub const SERIES_HEADER: [&str; 5] = ["t", "echo", "rate", "ggm", "ln"];

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSize {
    pub lx: usize,
    pub ly: usize,
}

impl Default for LatticeSize {
    fn default() -> Self {
        Self { lx: 2, ly: 7 }
    }
}

/// Uniform grid `min, min + step, …, max`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Default for BetaGrid {
    fn default() -> Self {
        Self {
            min: 0.05,
            max: 1.0,
            step: 0.01,
        }
    }
}

impl BetaGrid {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        let grid = Self { min, max, step };
        grid.validate()?;
        Ok(grid)
    }

    /// A grid holding the single value `beta`.
    pub fn single(beta: f64) -> Self {
        Self {
            min: beta,
            max: beta,
            step: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::Config(format!(
                "beta0 step must be positive, got {}",
                self.step
            )));
        }
        if !self.min.is_finite() || !self.max.is_finite() || self.max < self.min || self.min < 0.0 {
            return Err(Error::Config(format!(
                "beta0 range [{}, {}] is empty or negative",
                self.min, self.max
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.min + i as f64 * self.step)
            .collect()
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    #[default]
    Closed,
    Open,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(default)]
    pub lattice: LatticeSize,
    #[serde(default)]
    pub beta0: BetaGrid,
    #[serde(default)]
    pub time: TimeGrid,
    #[serde(default)]
    pub pipeline: Pipeline,
    #[serde(default)]
    pub bath: BathParams,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub ode_dt: Option<f64>,
    #[serde(default)]
    pub dump_series: bool,
    #[serde(default)]
    pub use_second_derivative: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            lattice: LatticeSize::default(),
            beta0: BetaGrid::default(),
            time: TimeGrid::default(),
            pipeline: Pipeline::default(),
            bath: BathParams::default(),
            output: None,
            workers: None,
            ode_dt: None,
            dump_series: false,
            use_second_derivative: false,
        }
    }
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.beta0.validate()?;
        self.time.validate()?;
        self.bath.validate()?;
        self.integrator().validate()?;
        if self.workers == Some(0) {
            return Err(Error::Config("worker count must be at least 1".into()));
        }
        Ok(())
    }

    pub fn integrator(&self) -> IntegratorConfig {
        let mut cfg = IntegratorConfig::default();
        if let Some(dt) = self.ode_dt {
            cfg.dt_ode = dt;
        }
        cfg
    }

    pub fn build_lattice(&self) -> Result<TorusLattice> {
        TorusLattice::new(self.lattice.lx, self.lattice.ly)
    }
}

/// Per-time observables of one β₀ point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSeries {
    pub times: Vec<f64>,
    pub echo: Vec<f64>,
    pub rate: Vec<f64>,
    pub ggm: Vec<f64>,
    pub ln: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OpenDiagnostics {
    pub max_trace_drift: f64,
    pub max_hermitian_deviation: f64,
    pub min_eigenvalue: f64,
    pub final_purity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub beta0: f64,
    /// Time-averaged GGM; closed pipeline only.
    pub avg_ggm: Option<f64>,
    pub avg_ln: f64,
    /// Smallest echo on the grid; closed pipeline only.
    pub min_echo: Option<f64>,
    pub echo_zero_spacings: Vec<f64>,
    pub open: Option<OpenDiagnostics>,
    pub series: Option<PointSeries>,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct Peak {
    pub beta: f64,
    pub index: usize,
    pub value: f64,
    /// The peak sits at the first or last derivative point.
    pub boundary: bool,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize)]
pub struct Derivatives {
    /// β₀ values of the interior grid points.
    pub betas: Vec<f64>,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub peak_first: Option<Peak>,
    pub peak_second: Option<Peak>,
}

impl Derivatives {
    pub fn of(values: &[f64], betas: &[f64], step: f64) -> Result<Self> {
        let first = derivative_scan(values, step)?;
        let second = second_difference(values, step)?;
        let inner = betas[1..betas.len() - 1].to_vec();
        Ok(Self {
            peak_first: locate_peak(&first, &inner),
            peak_second: locate_peak(&second, &inner),
            betas: inner,
            first,
            second,
        })
    }

    /// Peak of the first derivative, or of the second when `second` is set.
    pub fn peak(&self, second: bool) -> Option<Peak> {
        if second {
            self.peak_second
        } else {
            self.peak_first
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub records: Vec<SweepRecord>,
    /// β₀ points that were dropped, with the reason.
    pub failures: Vec<(f64, String)>,
    pub ggm: Option<Derivatives>,
    pub ln: Option<Derivatives>,
}

impl SweepResult {
    fn assemble(config: SweepConfig, outcomes: Vec<(f64, Result<SweepRecord>)>) -> Result<Self> {
        let mut records = Vec::new();
        let mut failures = Vec::new();
        for (beta0, outcome) in outcomes {
            match outcome {
                Ok(r) => records.push(r),
                Err(e @ (Error::Config(_) | Error::TooLarge(_))) => return Err(e),
                Err(e) => {
                    log::error!("beta0={beta0}: {e}");
                    failures.push((beta0, e.to_string()));
                }
            }
        }
        let complete = failures.is_empty() && records.len() >= 3;
        let betas: Vec<f64> = records.iter().map(|r| r.beta0).collect();
        let step = config.beta0.step;
        let ln = if complete {
            Some(Derivatives::of(
                &records.iter().map(|r| r.avg_ln).collect::<Vec<_>>(),
                &betas,
                step,
            )?)
        } else {
            None
        };
        let ggm_values: Option<Vec<f64>> = records.iter().map(|r| r.avg_ggm).collect();
        let ggm = match ggm_values {
            Some(v) if complete => Some(Derivatives::of(&v, &betas, step)?),
            _ => None,
        };
        Ok(Self {
            config,
            records,
            failures,
            ggm,
            ln,
        })
    }

    pub fn betas(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.beta0).collect()
    }

    pub fn avg_ggm(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.avg_ggm.unwrap_or(f64::NAN))
            .collect()
    }

    pub fn avg_ln(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.avg_ln).collect()
    }

    pub fn record(&self, beta0: f64) -> Option<&SweepRecord> {
        self.records.iter().find(|r| (r.beta0 - beta0).abs() < 1e-9)
    }
}

/// `(v[i+1] - v[i-1]) / 2h` at the interior points.
pub fn derivative_scan(values: &[f64], step: f64) -> Result<Vec<f64>> {
    if values.len() < 3 {
        return Err(Error::Config(format!(
            "derivative needs at least 3 points, got {}",
            values.len()
        )));
    }
    Ok(values
        .windows(3)
        .map(|w| (w[2] - w[0]) / (2.0 * step))
        .collect())
}

/// `(v[i+1] - 2v[i] + v[i-1]) / h²` at the interior points.
pub fn second_difference(values: &[f64], step: f64) -> Result<Vec<f64>> {
    if values.len() < 3 {
        return Err(Error::Config(format!(
            "second difference needs at least 3 points, got {}",
            values.len()
        )));
    }
    Ok(values
        .windows(3)
        .map(|w| (w[2] - 2.0 * w[1] + w[0]) / (step * step))
        .collect())
}

/// Position of the largest `|d|`; the first index wins ties.
pub fn locate_peak(derivs: &[f64], betas: &[f64]) -> Option<Peak> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &d) in derivs.iter().enumerate() {
        if d.is_nan() {
            continue;
        }
        if best.is_none_or(|(_, b)| d.abs() > b.abs()) {
            best = Some((i, d));
        }
    }
    let (index, value) = best?;
    let boundary = index == 0 || index + 1 == derivs.len();
    if boundary {
        log::warn!(
            "derivative peak at the grid boundary beta0={}",
            betas[index]
        );
    }
    Some(Peak {
        beta: betas[index],
        index,
        value,
        boundary,
    })
}

/// Times of local minima of `L(t)` below `threshold`.
pub fn echo_zeros(series: &EchoSeries, threshold: f64) -> Vec<f64> {
    let l = &series.echo;
    (1..l.len().saturating_sub(1))
        .filter(|&i| l[i] < threshold && l[i] < l[i - 1] && l[i] <= l[i + 1])
        .map(|i| series.times[i])
        .collect()
}

/// Consecutive differences of [`echo_zeros`].
pub fn echo_zero_spacings(series: &EchoSeries, threshold: f64) -> Vec<f64> {
    echo_zeros(series, threshold)
        .windows(2)
        .map(|w| w[1] - w[0])
        .collect()
}

/// `(max - min) / mean`; zero for fewer than two values.
pub fn relative_spread(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (max - min) / mean
}

/// β positions (midpoints) where `values` changes sign; exact zeros are skipped.
pub fn sign_changes(values: &[f64], betas: &[f64]) -> Vec<f64> {
    let nonzero: Vec<(f64, f64)> = values
        .iter()
        .zip(betas)
        .filter(|(v, _)| **v != 0.0)
        .map(|(v, b)| (*v, *b))
        .collect();
    nonzero
        .windows(2)
        .filter(|w| w[0].0.signum() != w[1].0.signum())
        .map(|w| 0.5 * (w[0].1 + w[1].1))
        .collect()
}

/// Indices `i` where `values[i+1] > values[i] + tol`.
pub fn monotone_violations(values: &[f64], tol: f64) -> Vec<usize> {
    values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] > w[0] + tol)
        .map(|(i, _)| i)
        .collect()
}

/// Everything the closed pipeline needs for one lattice.
pub struct ClosedContext {
    pub lattice: TorusLattice,
    pub group: LoopGroup,
    pub bipartition: Bipartition,
    pub plan: SchmidtPlan,
}

impl ClosedContext {
    pub fn new(lattice: TorusLattice) -> Result<Self> {
        let group = LoopGroup::new(&lattice);
        let bipartition = lattice.equal_block_bipartition();
        let plan = SchmidtPlan::new(&group, &bipartition)?;
        Ok(Self {
            lattice,
            group,
            bipartition,
            plan,
        })
    }

    /// Echo, GGM and block LN over `times` after the quench from `β₀`.
    pub fn point_series(&self, beta0: f64, times: &[f64]) -> Result<PointSeries> {
        let psi0 = ground_state(&GroundStateSpec::new(beta0)?, &self.group);
        let quench = Quench::new(&psi0, &self.group)?;
        let n = self.lattice.num_spins();
        let mut series = PointSeries {
            times: times.to_vec(),
            echo: Vec::with_capacity(times.len()),
            rate: Vec::with_capacity(times.len()),
            ggm: Vec::with_capacity(times.len()),
            ln: Vec::with_capacity(times.len()),
        };
        for &t in times {
            let echo = quench.echo(t);
            let psi = quench.state_at(t);
            let g = ggm(&psi, &self.group);
            let ln = log_negativity_pure(&self.plan.spectrum(&psi));
            if !(echo.is_finite() && g.is_finite() && ln.is_finite()) {
                return Err(Error::Numerical(format!(
                    "non-finite value at beta0={beta0}, t={t}: echo={echo}, ggm={g}, ln={ln}"
                )));
            }
            series.echo.push(echo);
            series.rate.push(rate_function(echo, n));
            series.ggm.push(g);
            series.ln.push(ln);
        }
        Ok(series)
    }

    /// Echo only; much cheaper than [`Self::point_series`].
    pub fn echo_series(&self, beta0: f64, times: &[f64]) -> Result<EchoSeries> {
        let psi0 = ground_state(&GroundStateSpec::new(beta0)?, &self.group);
        Ok(Quench::new(&psi0, &self.group)?.echo_series(times, self.lattice.num_spins()))
    }

    pub fn record(&self, beta0: f64, times: &[f64], keep_series: bool) -> Result<SweepRecord> {
        let series = self.point_series(beta0, times)?;
        let n = times.len();
        let avg_ggm = time_average(&TimeSeries::new(times.to_vec(), series.ggm.clone())?)?;
        let avg_ln = time_average(&TimeSeries::new(times.to_vec(), series.ln.clone())?)?;
        let echo = EchoSeries {
            times: times.to_vec(),
            echo: series.echo.clone(),
            rate: series.rate.clone(),
        };
        debug_assert_eq!(echo.echo.len(), n);
        Ok(SweepRecord {
            beta0,
            avg_ggm: Some(avg_ggm),
            avg_ln,
            min_echo: Some(echo.min_echo()),
            echo_zero_spacings: echo_zero_spacings(&echo, ECHO_ZERO_THRESHOLD),
            open: None,
            series: keep_series.then_some(series),
        })
    }
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Closed-system sweep over the β₀ grid. Deterministic for a given config.
pub fn run_closed_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let ctx = ClosedContext::new(cfg.build_lattice()?)?;
    let times = cfg.time.points();
    let betas = cfg.beta0.points();
    log::info!(
        "closed sweep on {}x{}: {} beta0 points, {} times, Schmidt blocks {}",
        cfg.lattice.lx,
        cfg.lattice.ly,
        betas.len(),
        times.len(),
        ctx.plan.num_blocks()
    );
    let outcomes = pool(cfg.workers)?.install(|| {
        betas
            .par_iter()
            .map(|&b| (b, ctx.record(b, &times, cfg.dump_series)))
            .collect()
    });
    SweepResult::assemble(cfg.clone(), outcomes)
}

/// Open-system sweep: block LN of the Lindblad trajectory for each β₀.
pub fn run_open_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let lattice = cfg.build_lattice()?;
    let bip = lattice.equal_block_bipartition();
    let integrator = cfg.integrator();
    let betas = cfg.beta0.points();
    log::info!(
        "open sweep on {}x{}: {} beta0 points, k={}, B/T_E={}",
        cfg.lattice.lx,
        cfg.lattice.ly,
        betas.len(),
        cfg.bath.k,
        cfg.bath.ratio
    );
    let outcomes = pool(cfg.workers)?.install(|| {
        betas
            .par_iter()
            .map(|&b| {
                let outcome = noisy_ln_series(b, &cfg.bath, &integrator, &lattice, &bip, &cfg.time)
                    .and_then(|noisy| {
                        let avg_ln = time_average(&noisy.series)?;
                        let series = cfg.dump_series.then(|| PointSeries {
                            times: noisy.series.times().to_vec(),
                            echo: vec![f64::NAN; noisy.series.len()],
                            rate: vec![f64::NAN; noisy.series.len()],
                            ggm: vec![f64::NAN; noisy.series.len()],
                            ln: noisy.series.values().to_vec(),
                        });
                        Ok(SweepRecord {
                            beta0: b,
                            avg_ggm: None,
                            avg_ln,
                            min_echo: None,
                            echo_zero_spacings: Vec::new(),
                            open: Some(OpenDiagnostics {
                                max_trace_drift: noisy.max_trace_drift,
                                max_hermitian_deviation: noisy.max_hermitian_deviation,
                                min_eigenvalue: noisy.min_eigenvalue,
                                final_purity: noisy.final_purity,
                            }),
                            series,
                        })
                    });
                (b, outcome)
            })
            .collect()
    });
    SweepResult::assemble(cfg.clone(), outcomes)
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    match cfg.pipeline {
        Pipeline::Closed => run_closed_sweep(cfg),
        Pipeline::Open => run_open_sweep(cfg),
    }
}

fn field(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v}"),
        _ => String::new(),
    }
}

/// Main CSV: one row per β₀, derivative columns empty at the grid ends.
pub fn write_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    let n = result.records.len();
    let deriv = |d: &Option<Derivatives>, i: usize| -> Option<f64> {
        d.as_ref().and_then(|d| {
            if i >= 1 && i + 1 < n {
                d.first.get(i - 1).copied()
            } else {
                None
            }
        })
    };
    for (i, r) in result.records.iter().enumerate() {
        w.write_record([
            format!("{}", r.beta0),
            field(r.avg_ggm),
            field(Some(r.avg_ln)),
            field(r.min_echo),
            field(deriv(&result.ggm, i)),
            field(deriv(&result.ln, i)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn series_file_name(beta0: f64) -> String {
    format!("series_{beta0:.4}.csv")
}

pub fn write_series(series: &PointSeries, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SERIES_HEADER)?;
    for i in 0..series.times.len() {
        w.write_record([
            format!("{}", series.times[i]),
            field(Some(series.echo[i])),
            field(Some(series.rate[i])),
            field(Some(series.ggm[i])),
            field(Some(series.ln[i])),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Sidecar<'a> {
    git_hash: Option<String>,
    config: &'a SweepConfig,
    lattice_spins: usize,
    beta_critical: f64,
    tolerances: Tolerances,
    peak_ggm: Option<Peak>,
    peak_ln: Option<Peak>,
    peak_ggm_second: Option<Peak>,
    peak_ln_second: Option<Peak>,
    beta_star: Option<f64>,
    echo_zero_threshold: f64,
    failures: &'a [(f64, String)],
    open: Vec<(f64, &'a OpenDiagnostics)>,
}

#[derive(Serialize)]
struct Tolerances {
    peak_band: f64,
    spacing_spread: f64,
    trace_drift: f64,
}

fn git_hash() -> Option<String> {
    let out = std::process::Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()?;
    out.status
        .success()
        .then(|| String::from_utf8_lossy(&out.stdout).trim().to_string())
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// CSV, sidecar JSON and, if requested, per-β₀ series next to the CSV.
pub fn write_outputs(result: &SweepResult, csv_path: &Path) -> Result<()> {
    if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write_csv(result, csv_path)?;
    let second = result.config.use_second_derivative;
    let pick = |d: &Option<Derivatives>, s: bool| d.as_ref().and_then(|d| d.peak(s));
    let beta_star = pick(&result.ggm, second)
        .or(pick(&result.ln, second))
        .map(|p| p.beta);
    let lattice_spins = 2 * result.config.lattice.lx * result.config.lattice.ly;
    let sidecar = Sidecar {
        git_hash: git_hash(),
        config: &result.config,
        lattice_spins,
        beta_critical: BETA_CRITICAL,
        tolerances: Tolerances {
            peak_band: 0.05,
            spacing_spread: 0.1,
            trace_drift: 1e-8,
        },
        peak_ggm: pick(&result.ggm, false),
        peak_ln: pick(&result.ln, false),
        peak_ggm_second: pick(&result.ggm, true),
        peak_ln_second: pick(&result.ln, true),
        beta_star,
        echo_zero_threshold: ECHO_ZERO_THRESHOLD,
        failures: &result.failures,
        open: result
            .records
            .iter()
            .filter_map(|r| r.open.as_ref().map(|o| (r.beta0, o)))
            .collect(),
    };
    fs::write(
        sidecar_path(csv_path),
        serde_json::to_string_pretty(&sidecar)?,
    )?;
    let dir = csv_path.parent().unwrap_or(Path::new("."));
    for r in &result.records {
        if let Some(series) = &r.series {
            write_series(series, &dir.join(series_file_name(r.beta0)))?;
        }
    }
    Ok(())
}
