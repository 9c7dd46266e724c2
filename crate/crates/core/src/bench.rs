//! Sweep harness comparing the eigenvector baseline, the two-step method and
//! proxy matrix optimization on synthetic data.
//!
//! Every (sweep value, repetition) cell draws its own dataset from a seed
//! derived from the base seed, computes the scatter pair and the eigenvector
//! solution once, and starts both iterative methods from the same initial
//! matrix: PMO uses it as its proxy, the two-step method starts at its
//! retraction. Results are scored by the normalized improvement
//! `−(f_method − f_eig) / |f_eig|`.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{generate_dataset, DataSpec};
use crate::error::{GildaError, Result};
use crate::grassmann::{retract, AmbientMatrix};
use crate::lda::{eigenvector_solution, scatter_matrices, trace_ratio_objective, LabeledDataset};
use crate::optim::{pmo_optimize, two_step_optimize, OptConfig, OptRun};

/// Smallest `|f_eig|` the improvement metric accepts.
pub const BASELINE_TOL: f64 = 1e-12;

pub const CSV_HEADER: [&str; 9] = [
    "sweep_kind",
    "sweep_value",
    "repetition",
    "method",
    "objective",
    "normalized_improvement",
    "iterations",
    "wall_time_ms",
    "status",
];

pub const STATUS_OK: &str = "ok";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Vary the ambient dimension, projection rank fixed.
    DimSweep,
    /// Vary the projection rank, ambient dimension fixed.
    ProjSweep,
}

impl SweepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepKind::DimSweep => "dim_sweep",
            SweepKind::ProjSweep => "proj_sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Eigenvector,
    TwoStep,
    Pmo,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Eigenvector, Method::TwoStep, Method::Pmo];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Eigenvector => "eigenvector",
            Method::TwoStep => "two_step",
            Method::Pmo => "pmo",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the shared initial matrix of the iterative methods is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    /// `proxy_scale · R_eig`; its retraction is the eigenvector solution.
    Eigenvector,
    /// Standard Gaussian matrix scaled by `proxy_scale`, seeded per cell.
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub values: Vec<usize>,
    /// Projection rank for a dimension sweep, ambient dimension for a rank sweep.
    pub fixed: usize,
    pub repetitions: usize,
    /// Data template; `seed` is the base seed and, in a dimension sweep, `dim`
    /// is replaced by the swept value.
    pub data: DataSpec,
    pub opt: OptConfig,
    pub init: InitStrategy,
    pub proxy_scale: f64,
    /// Record per-method wall time. Off by default so output is reproducible.
    #[serde(default)]
    pub record_timing: bool,
}

impl SweepSpec {
    /// Dimension sweep at laptop scale: d ∈ {4..64}, r = 3, 4 classes of 500.
    pub fn desk_dim(seed: u64) -> Self {
        Self {
            kind: SweepKind::DimSweep,
            values: vec![4, 8, 16, 32, 64],
            fixed: 3,
            repetitions: 10,
            data: DataSpec { dim: 4, n_classes: 4, n_per_class: 500, ecc_mean: 2.0, mean_std: 1.0, seed },
            opt: OptConfig::default(),
            init: InitStrategy::Eigenvector,
            proxy_scale: 0.1,
            record_timing: false,
        }
    }

    /// Full dimension sweep, d up to 1024 with 20 repetitions.
    pub fn paper_dim(seed: u64) -> Self {
        Self {
            values: vec![4, 8, 16, 32, 64, 128, 256, 512, 1024],
            repetitions: 20,
            ..Self::desk_dim(seed)
        }
    }

    /// Rank sweep at laptop scale: d = 100, r ∈ {2, 5, 10, 20}, 10 classes of 200.
    pub fn desk_proj(seed: u64) -> Self {
        let dim = 100;
        Self {
            kind: SweepKind::ProjSweep,
            values: vec![2, 5, 10, 20],
            fixed: dim,
            repetitions: 10,
            data: DataSpec {
                dim,
                n_classes: 10,
                n_per_class: 200,
                ecc_mean: 5.0,
                mean_std: 5.0 / dim as f64,
                seed,
            },
            opt: OptConfig::default(),
            init: InitStrategy::Eigenvector,
            proxy_scale: 0.1,
            record_timing: false,
        }
    }

    /// Full rank sweep: r ∈ {1..80}, 100 classes of 1000 points.
    pub fn paper_proj(seed: u64) -> Self {
        let desk = Self::desk_proj(seed);
        Self {
            values: vec![1, 2, 5, 10, 20, 40, 80],
            repetitions: 20,
            data: DataSpec { n_classes: 100, n_per_class: 1000, ..desk.data },
            ..desk
        }
    }

    /// `(ambient dim, projection rank)` for one sweep value.
    pub fn cell_dims(&self, value: usize) -> (usize, usize) {
        match self.kind {
            SweepKind::DimSweep => (value, self.fixed),
            SweepKind::ProjSweep => (self.fixed, value),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(GildaError::InvalidConfig("no sweep values".into()));
        }
        if self.repetitions == 0 {
            return Err(GildaError::InvalidConfig("repetitions must be >= 1".into()));
        }
        for &v in &self.values {
            let (m, p) = self.cell_dims(v);
            if p == 0 || p >= m {
                return Err(GildaError::InvalidConfig(format!(
                    "sweep value {v} gives p = {p}, m = {m}; need 1 <= p < m"
                )));
            }
            DataSpec { dim: m, ..self.data }.validate()?;
        }
        if !(self.proxy_scale > 0.0) || !self.proxy_scale.is_finite() {
            return Err(GildaError::InvalidConfig(format!("proxy_scale must be > 0, got {}", self.proxy_scale)));
        }
        self.opt.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub sweep_kind: SweepKind,
    pub sweep_value: usize,
    pub repetition: usize,
    pub method: Method,
    pub objective: Option<f64>,
    pub normalized_improvement: Option<f64>,
    pub iterations: usize,
    pub wall_time_ms: Option<f64>,
    pub status: String,
}

impl CellRecord {
    pub fn is_ok(&self) -> bool {
        self.status == STATUS_OK
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub sweep_value: usize,
    pub method: Method,
    pub n_ok: usize,
    pub median: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
    pub iqr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub records: Vec<CellRecord>,
    pub aggregates: Vec<AggregateRow>,
}

impl SweepResult {
    pub fn aggregate(&self, value: usize, method: Method) -> Option<&AggregateRow> {
        self.aggregates.iter().find(|a| a.sweep_value == value && a.method == method)
    }

    /// Number of cells whose eigenvector baseline did not produce a usable score.
    pub fn failed_cells(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.method == Method::Eigenvector && !r.is_ok())
            .count()
    }

    pub fn total_cells(&self) -> usize {
        self.records.iter().filter(|r| r.method == Method::Eigenvector).count()
    }

    pub fn all_cells_failed(&self) -> bool {
        self.total_cells() > 0 && self.failed_cells() == self.total_cells()
    }
}

/// `−(f_orth − f_eig) / |f_eig|`; positive when `f_orth` beats the baseline.
pub fn normalized_improvement(f_orth: f64, f_eig: f64) -> Result<f64> {
    if !(f_eig.abs() >= BASELINE_TOL) {
        return Err(GildaError::DegenerateBaseline(f_eig.abs()));
    }
    // + 0.0 folds −0 into +0
    Ok(-(f_orth - f_eig) / f_eig.abs() + 0.0)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one cell: SplitMix64 chained over base seed, sweep value and
/// repetition, `h = sm(sm(sm(base) ^ value) ^ rep)`.
pub fn cell_seed(base: u64, value: usize, repetition: usize) -> u64 {
    let h = splitmix64(base);
    let h = splitmix64(h ^ value as u64);
    splitmix64(h ^ repetition as u64)
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Median and quartiles of the normalized improvement per (value, method),
/// over records with status `ok`.
pub fn aggregate(values: &[usize], records: &[CellRecord]) -> Vec<AggregateRow> {
    let mut rows = Vec::with_capacity(values.len() * Method::ALL.len());
    for &value in values {
        for method in Method::ALL {
            let mut xs: Vec<f64> = records
                .iter()
                .filter(|r| r.sweep_value == value && r.method == method && r.is_ok())
                .filter_map(|r| r.normalized_improvement)
                .collect();
            xs.sort_by(f64::total_cmp);
            let stats = (!xs.is_empty()).then(|| (quantile(&xs, 0.5), quantile(&xs, 0.25), quantile(&xs, 0.75)));
            rows.push(AggregateRow {
                sweep_value: value,
                method,
                n_ok: xs.len(),
                median: stats.map(|s| s.0),
                q1: stats.map(|s| s.1),
                q3: stats.map(|s| s.2),
                iqr: stats.map(|s| s.2 - s.1),
            });
        }
    }
    rows
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn run_cell<F>(spec: &SweepSpec, value: usize, repetition: usize, source: &F) -> Vec<CellRecord>
where
    F: Fn(&DataSpec) -> Result<LabeledDataset>,
{
    let (m, p) = spec.cell_dims(value);
    let seed = cell_seed(spec.data.seed, value, repetition);
    let record = |method, objective, improvement, iterations, wall: Option<f64>, status: &str| CellRecord {
        sweep_kind: spec.kind,
        sweep_value: value,
        repetition,
        method,
        objective,
        normalized_improvement: improvement,
        iterations,
        wall_time_ms: if spec.record_timing { wall } else { None },
        status: status.to_string(),
    };
    let fail_all = |code: &str| {
        Method::ALL
            .iter()
            .map(|&method| record(method, None, None, 0, None, code))
            .collect::<Vec<_>>()
    };

    let data_spec = DataSpec { dim: m, seed, ..spec.data };
    let dataset = match source(&data_spec) {
        Ok(ds) => ds,
        Err(e) => return fail_all(e.code()),
    };
    let scatter = scatter_matrices(&dataset);

    let start = Instant::now();
    let baseline = eigenvector_solution(&scatter, p).and_then(|r| trace_ratio_objective(&r, &scatter).map(|f| (r, f)));
    let eig_ms = elapsed_ms(start);
    let (eig_point, f_eig) = match baseline {
        Ok(b) => b,
        Err(e) => return fail_all(e.code()),
    };
    let degenerate = f_eig.abs() < BASELINE_TOL;
    let score = |f: f64| if degenerate { None } else { normalized_improvement(f, f_eig).ok() };
    let ok_status = if degenerate { "degenerate_baseline" } else { STATUS_OK };

    let init = match spec.init {
        InitStrategy::Eigenvector => eig_point.as_matrix() * spec.proxy_scale,
        InitStrategy::Gaussian => {
            let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ 0x1A17));
            DMatrix::from_fn(m, p, |_, _| spec.proxy_scale * rng.sample::<f64, _>(StandardNormal))
        }
    };
    let init = AmbientMatrix::from_finite(init);

    let mut out = vec![record(Method::Eigenvector, Some(f_eig), score(f_eig), 0, Some(eig_ms), ok_status)];
    let mut push_run = |method, run: Result<OptRun>, wall| match run {
        Ok(run) => out.push(record(
            method,
            Some(run.final_objective),
            score(run.final_objective),
            run.iterations_used,
            Some(wall),
            ok_status,
        )),
        Err(e) => out.push(record(method, None, None, 0, Some(wall), e.code())),
    };

    let start = Instant::now();
    let two = retract(&init).and_then(|r0| two_step_optimize(&scatter, &r0, &spec.opt));
    push_run(Method::TwoStep, two, elapsed_ms(start));

    let start = Instant::now();
    let pmo = pmo_optimize(&scatter, &init, &spec.opt);
    push_run(Method::Pmo, pmo, elapsed_ms(start));
    out
}

/// Runs a sweep on generated data, sequentially.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    run_sweep_with(spec, 0, &generate_dataset)
}

/// Runs a sweep on up to `threads` worker threads (0 = sequential). Output
/// does not depend on the thread count.
pub fn run_sweep_threads(spec: &SweepSpec, threads: usize) -> Result<SweepResult> {
    run_sweep_with(spec, threads, &generate_dataset)
}

/// Runs a sweep with a caller-supplied data source. Per-cell failures are
/// recorded in the result; only an invalid spec is an error.
pub fn run_sweep_with<F>(spec: &SweepSpec, threads: usize, source: &F) -> Result<SweepResult>
where
    F: Fn(&DataSpec) -> Result<LabeledDataset> + Sync,
{
    spec.validate()?;
    let cells: Vec<(usize, usize)> = spec
        .values
        .iter()
        .flat_map(|&v| (0..spec.repetitions).map(move |rep| (v, rep)))
        .collect();

    let per_cell: Vec<Vec<CellRecord>> = if threads == 0 {
        cells.iter().map(|&(v, rep)| run_cell(spec, v, rep, source)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| GildaError::InvalidConfig(format!("thread pool: {e}")))?;
        pool.install(|| cells.par_iter().map(|&(v, rep)| run_cell(spec, v, rep, source)).collect())
    };

    let records: Vec<CellRecord> = per_cell.into_iter().flatten().collect();
    let aggregates = aggregate(&spec.values, &records);
    Ok(SweepResult { spec: spec.clone(), records, aggregates })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// 17 significant digits, enough to round-trip any f64.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

pub fn write_csv<W: Write>(result: &SweepResult, writer: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in &result.records {
        w.write_record([
            r.sweep_kind.as_str().to_string(),
            r.sweep_value.to_string(),
            r.repetition.to_string(),
            r.method.as_str().to_string(),
            format_opt(r.objective),
            format_opt(r.normalized_improvement),
            r.iterations.to_string(),
            format_opt(r.wall_time_ms),
            r.status.clone(),
        ])?;
    }
    w.flush()
}

pub fn write_json<W: Write>(result: &SweepResult, mut writer: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut writer, result)?;
    writer.write_all(b"\n")?;
    writer.flush()
}

pub fn write_results<W: Write>(result: &SweepResult, format: OutputFormat, writer: W) -> std::io::Result<()> {
    match format {
        OutputFormat::Csv => write_csv(result, writer),
        OutputFormat::Json => write_json(result, writer),
    }
}

fn io_error(path: &Path, e: impl fmt::Display) -> GildaError {
    GildaError::Io { path: path.to_path_buf(), message: e.to_string() }
}

pub fn emit_results(result: &SweepResult, format: OutputFormat, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    write_results(result, format, BufWriter::new(file)).map_err(|e| io_error(path, e))
}

pub fn read_json(path: &Path) -> Result<SweepResult> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| io_error(path, e))
}
