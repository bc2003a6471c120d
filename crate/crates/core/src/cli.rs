//! The `betti-thermo` experiment runner.
//!
//! Every setting can come from a JSON config (`--config run.json`) or from a
//! flag; flags win. The merged settings are validated against the invoked
//! command before any sampling starts, and outputs are written as
//! `<out>.<command>.{csv,json,dat,txt}`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::cech::{build_complex, ComplexKind, Metric};
use crate::error::{invalid, Result};
use crate::homology::betti_numbers;
use crate::limits::output::{self, plot_text, PlotData};
use crate::limits::{
    boundary_strip_check, convergence_experiment, direct_integral, estimate_betti_rate, estimate_simplex_rate,
    intensity_perturbation_check, load_or_build_curve, poissonization_gap, scaling_check, thermodynamic_integral,
    uniform_grid, BoundaryMode, CurveKey, Process, RateParams, ScalingParams, StripParams, Target,
};
use crate::pointproc::{
    poissonize, sample_binomial, sample_poisson_homogeneous, DensityGrid, IntensityGrid, PointCloud, RngStream, Window,
};

/// Environment variable overriding the curve-cache directory.
pub const CACHE_ENV: &str = "BETTI_THERMO_CACHE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Sample a point cloud.
    Sample,
    /// Build a complex and dump its simplices.
    Complex,
    /// Betti numbers of a point cloud.
    Betti,
    /// Per-volume Betti or simplex rate of a homogeneous Poisson process.
    Rate,
    /// Estimate the limit curve s -> beta_k(1, s).
    Curve,
    /// Convergence of E[beta_k]/n towards the limit integral.
    Converge,
    /// Binomial versus Poissonized expectation gap.
    Gap,
    /// Scaling, boundary-strip and perturbation checks.
    Checks,
}

impl Command {
    fn as_str(self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Complex => "complex",
            Command::Betti => "betti",
            Command::Rate => "rate",
            Command::Curve => "curve",
            Command::Converge => "converge",
            Command::Gap => "gap",
            Command::Checks => "checks",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TargetMode {
    /// One torus rate estimate per density level.
    #[default]
    Direct,
    /// Riemann sum over a cached limit curve.
    Curve,
}

/// Settings shared by the command line and JSON configs. Unset fields fall
/// back to the config file, then to per-command defaults.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Ambient dimension d.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Homology degree k.
    #[arg(long)]
    pub k: Option<usize>,
    /// Simplex dimension j (rate: estimate the simplex rate instead of beta_k).
    #[arg(long)]
    pub j: Option<usize>,
    /// Radius r (scaled radius for density experiments).
    #[arg(long)]
    pub r: Option<f64>,
    /// Intensity lambda.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Window volume L.
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub volume: Option<f64>,
    /// Sample size n.
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated increasing sample sizes.
    #[arg(long = "n-schedule", value_delimiter = ',')]
    pub n_schedule: Option<Vec<usize>>,
    /// Monte Carlo replicates.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Replicates for the limit target (defaults to --reps).
    #[arg(long = "target-reps")]
    pub target_reps: Option<usize>,
    /// Density grid JSON file.
    #[arg(long)]
    pub density: Option<PathBuf>,
    /// Point file (one point per line) for complex / betti.
    #[arg(long)]
    pub points: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub boundary: Option<BoundaryMode>,
    #[arg(long, value_enum)]
    pub process: Option<Process>,
    #[arg(long, value_enum)]
    pub target: Option<TargetMode>,
    #[arg(long, value_enum)]
    pub kind: Option<ComplexKind>,
    /// Highest simplex dimension for `complex`.
    #[arg(long = "max-dim")]
    pub max_dim: Option<usize>,
    /// Largest s on the limit-curve grid.
    #[arg(long = "s-max")]
    pub s_max: Option<f64>,
    /// Limit-curve grid step.
    #[arg(long = "s-step")]
    pub s_step: Option<f64>,
    /// Scaling factor theta for `checks`.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Number of sub-boxes for the boundary-strip check.
    #[arg(long)]
    pub boxes: Option<usize>,
    /// Intensity perturbation size for `checks`.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Worker threads.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output prefix.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

macro_rules! merge_fields {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl Settings {
    /// Fills unset fields from `other`.
    pub fn or(mut self, other: &Settings) -> Settings {
        merge_fields!(self, other; dim, k, j, r, lambda, volume, n, n_schedule, reps, target_reps, density,
            points, seed, boundary, process, target, kind, max_dim, s_max, s_step, theta, boxes, eps,
            workers, out);
        self
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "betti-thermo",
    version,
    about = "Čech complexes, Betti numbers and thermodynamic-limit experiments"
)]
pub struct Cli {
    /// Command to run; may instead be given as "command" in the config.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// JSON config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub settings: Settings,
}

/// A fully resolved and validated run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub dim: usize,
    pub k: usize,
    pub j: Option<usize>,
    pub r: f64,
    pub lambda: f64,
    pub volume: f64,
    pub n: usize,
    pub n_schedule: Vec<usize>,
    pub reps: usize,
    pub target_reps: usize,
    pub density_file: Option<PathBuf>,
    pub points_file: Option<PathBuf>,
    pub seed: u64,
    pub boundary_mode: BoundaryMode,
    pub process: Process,
    pub target: TargetMode,
    pub kind: ComplexKind,
    pub max_dim: usize,
    pub s_max: f64,
    pub s_step: f64,
    pub theta: f64,
    pub boxes: usize,
    pub eps: f64,
    pub workers: Option<usize>,
    pub output_prefix: PathBuf,
}

impl ExperimentConfig {
    /// Merges flags over an optional config file and applies defaults.
    pub fn from_cli(cli: &Cli) -> Result<Self> {
        let (file_command, file_settings) = match &cli.config {
            Some(path) => {
                let mut doc: serde_json::Map<String, serde_json::Value> =
                    serde_json::from_str(&std::fs::read_to_string(path)?)?;
                let command = doc.remove("command").map(serde_json::from_value).transpose()?;
                (command, serde_json::from_value(serde_json::Value::Object(doc))?)
            }
            None => (None, Settings::default()),
        };
        let command = cli
            .command
            .or(file_command)
            .ok_or_else(|| invalid("no command given"))?;
        Self::resolve(command, &cli.settings.clone().or(&file_settings))
    }

    pub fn resolve(command: Command, s: &Settings) -> Result<Self> {
        let dim = s.dim.unwrap_or(2);
        let k = s.k.unwrap_or(1);
        let reps = s.reps.unwrap_or(100);
        let torus_default = matches!(command, Command::Curve | Command::Converge | Command::Checks);
        let config = Self {
            command,
            dim,
            k,
            j: s.j,
            r: s.r.unwrap_or(1.0),
            lambda: s.lambda.unwrap_or(1.0),
            volume: s.volume.unwrap_or(400.0),
            n: s.n.unwrap_or(1000),
            n_schedule: s.n_schedule.clone().unwrap_or_else(|| vec![200, 400, 800, 1600]),
            reps,
            target_reps: s.target_reps.unwrap_or(reps),
            density_file: s.density.clone(),
            points_file: s.points.clone(),
            seed: s.seed.unwrap_or(0),
            boundary_mode: s.boundary.unwrap_or(if torus_default {
                BoundaryMode::Torus
            } else {
                BoundaryMode::Plain
            }),
            process: s.process.unwrap_or_default(),
            target: s.target.unwrap_or_default(),
            kind: s.kind.unwrap_or(ComplexKind::Cech),
            max_dim: s.max_dim.unwrap_or(k + 1),
            s_max: s.s_max.unwrap_or(1.3),
            s_step: s.s_step.unwrap_or(0.1),
            theta: s.theta.unwrap_or(2.0),
            boxes: s.boxes.unwrap_or(4),
            eps: s.eps.unwrap_or(0.1),
            workers: s.workers,
            output_prefix: s.out.clone().unwrap_or_else(|| PathBuf::from("betti-thermo")),
        };
        config.validate()?;
        Ok(config)
    }

    fn rate_params(&self, lambda: f64, r: f64, reps: usize) -> RateParams {
        RateParams {
            dim: self.dim,
            lambda,
            r,
            volume: self.volume,
            reps,
            boundary: self.boundary_mode,
        }
    }

    /// Checks every precondition of the command's operations.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("--{name} must be positive, got {v}")))
            }
        };
        if self.dim == 0 {
            return Err(invalid("--dim must be >= 1"));
        }
        if self.workers == Some(0) {
            return Err(invalid("--workers must be >= 1"));
        }
        let betti_k = || {
            if self.k == 0 || self.k >= self.dim {
                Err(invalid(format!("--k must satisfy 1 <= k <= d-1 (d = {})", self.dim)))
            } else {
                Ok(())
            }
        };
        let reps_ok = |reps: usize| {
            if reps < 2 {
                Err(invalid("--reps must be >= 2"))
            } else {
                Ok(())
            }
        };
        let density_dim = || -> Result<()> {
            if let Some(path) = &self.density_file {
                if !path.exists() {
                    return Err(invalid(format!("density file {} not found", path.display())));
                }
            }
            Ok(())
        };
        match self.command {
            Command::Sample => {
                density_dim()?;
                if self.density_file.is_none() {
                    self.rate_params(self.lambda, 1.0, 2).validate_window()?;
                } else if self.process == Process::Poisson && self.n == 0 {
                    return Err(invalid("--n must be >= 1 for Poissonized samples"));
                }
            }
            Command::Complex | Command::Betti => {
                positive("r", self.r)?;
                match &self.points_file {
                    Some(p) if !p.exists() => return Err(invalid(format!("point file {} not found", p.display()))),
                    Some(_) => {}
                    None => self.rate_params(self.lambda, self.r, 2).validate_window()?,
                }
            }
            Command::Rate => {
                if self.j.is_none() {
                    betti_k()?;
                }
                reps_ok(self.reps)?;
                self.rate_params(self.lambda, self.r, self.reps).validate()?;
            }
            Command::Curve => {
                betti_k()?;
                reps_ok(self.reps)?;
                positive("s-step", self.s_step)?;
                if self.s_max.is_nan() || self.s_max < 0.0 {
                    return Err(invalid("--s-max must be non-negative"));
                }
                if self.s_step > self.s_max.max(self.s_step) {
                    return Err(invalid("--s-step exceeds --s-max"));
                }
                self.rate_params(1.0, self.s_max.max(self.s_step), self.reps)
                    .validate()?;
            }
            Command::Converge | Command::Gap => {
                density_dim()?;
                if !(self.command == Command::Gap || self.k >= 1 && self.k < self.dim) {
                    betti_k()?;
                }
                reps_ok(self.reps)?;
                positive("r", self.r)?;
                if self.n_schedule.is_empty()
                    || self.n_schedule[0] == 0
                    || self.n_schedule.windows(2).any(|w| w[0] >= w[1])
                {
                    return Err(invalid("--n-schedule must be positive and strictly increasing"));
                }
                if self.command == Command::Converge {
                    reps_ok(self.target_reps)?;
                    // the target rates run at intensities up to sup f; checked once the density is loaded
                    self.rate_params(1.0, self.r, self.target_reps).validate_basic()?;
                }
            }
            Command::Checks => {
                betti_k()?;
                reps_ok(self.reps)?;
                positive("theta", self.theta)?;
                positive("eps", self.eps)?;
                self.rate_params(self.lambda, self.r, self.reps).validate()?;
                let window = Window::centered_cube(self.dim, self.volume)?;
                crate::limits::partition_boxes(&window, self.boxes, self.r)?;
            }
        }
        Ok(())
    }

    fn output(&self, ext: &str) -> PathBuf {
        let mut name = self.output_prefix.as_os_str().to_owned();
        name.push(format!(".{}.{ext}", self.command.as_str()));
        PathBuf::from(name)
    }
}

impl RateParams {
    fn validate_window(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(invalid(format!("--lambda must be non-negative, got {}", self.lambda)));
        }
        Window::centered_cube(self.dim, self.volume).map(|_| ())
    }

    fn validate_basic(&self) -> Result<()> {
        if self.volume.is_nan() || self.volume <= (3.0 * self.r).powi(self.dim as i32) {
            return Err(invalid(format!(
                "--L {} must exceed (3r)^d = {}",
                self.volume,
                (3.0 * self.r).powi(self.dim as i32)
            )));
        }
        Ok(())
    }
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    /// One-line summary for standard output.
    pub line: String,
    pub files: Vec<PathBuf>,
    /// False when a check reported a failure.
    pub success: bool,
}

/// Curve-cache directory: `$BETTI_THERMO_CACHE`, else `.betti-thermo-cache`
/// next to the output prefix.
pub fn cache_dir(prefix: &Path) -> PathBuf {
    match std::env::var_os(CACHE_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => prefix
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or_else(|| Path::new("."))
            .join(".betti-thermo-cache"),
    }
}

/// Writes plot data as whitespace-separated `x y [yerr]` lines.
pub fn emit_plot_data(data: &impl PlotData, path: &Path) -> Result<()> {
    if data.plot_rows().is_empty() {
        return Err(invalid("nothing to plot"));
    }
    output::write_atomic(path, plot_text(data).as_bytes())
}

/// Runs on a dedicated pool when a worker count is given.
pub fn run(config: &ExperimentConfig) -> Result<RunSummary> {
    match config.workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| invalid(format!("thread pool: {e}")))?;
            pool.install(|| run_command(config))
        }
        None => run_command(config),
    }
}

fn load_density(config: &ExperimentConfig) -> Result<DensityGrid> {
    let density = match &config.density_file {
        Some(path) => DensityGrid::load(path)?,
        None => DensityGrid::uniform(Window::unit_cube(config.dim)?)?,
    };
    if density.dim() != config.dim {
        return Err(invalid(format!(
            "density has dimension {} but --dim is {}",
            density.dim(),
            config.dim
        )));
    }
    Ok(density)
}

fn input_cloud(config: &ExperimentConfig) -> Result<PointCloud> {
    match &config.points_file {
        Some(path) => {
            let cloud = PointCloud::read_text(path)?;
            if cloud.dim() != config.dim {
                return Err(invalid(format!(
                    "{} has dimension {} but --dim is {}",
                    path.display(),
                    cloud.dim(),
                    config.dim
                )));
            }
            Ok(cloud)
        }
        None => sample_poisson_homogeneous(
            config.lambda,
            &Window::centered_cube(config.dim, config.volume)?,
            RngStream::from_seed(config.seed),
        ),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    output::write_atomic(path, serde_json::to_string_pretty(value)?.as_bytes())
}

fn run_command(config: &ExperimentConfig) -> Result<RunSummary> {
    let stream = RngStream::from_seed(config.seed);
    let mut files = Vec::new();
    let mut success = true;
    let line = match config.command {
        Command::Sample => {
            let cloud = match &config.density_file {
                None => sample_poisson_homogeneous(
                    config.lambda,
                    &Window::centered_cube(config.dim, config.volume)?,
                    stream,
                )?,
                Some(_) => {
                    let density = load_density(config)?;
                    match config.process {
                        Process::Binomial => sample_binomial(&density, config.n, stream)?,
                        Process::Poisson => poissonize(&density, config.n, stream)?,
                    }
                }
            };
            let header: Vec<String> = (0..cloud.dim()).map(|i| format!("x{i}")).collect();
            let mut csv = header.join(",");
            csv.push('\n');
            for p in cloud.points() {
                let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
                csv.push_str(&row.join(","));
                csv.push('\n');
            }
            let (csv_path, json_path) = (config.output("csv"), config.output("json"));
            output::write_atomic(&csv_path, csv.as_bytes())?;
            write_json(&json_path, &cloud)?;
            files.extend([csv_path, json_path]);
            format!("points: {}", cloud.len())
        }
        Command::Complex => {
            let cloud = input_cloud(config)?;
            let complex = build_complex(&cloud, config.r, config.max_dim, config.kind, &Metric::Euclidean)?;
            let mut dump = Vec::new();
            complex.write_dump(&mut dump)?;
            let counts: Vec<usize> = (0..=config.max_dim).map(|j| complex.simplex_count(j)).collect();
            let (txt, json) = (config.output("txt"), config.output("json"));
            output::write_atomic(&txt, &dump)?;
            write_json(
                &json,
                &serde_json::json!({ "kind": config.kind, "r": config.r, "simplex_counts": counts }),
            )?;
            files.extend([txt, json]);
            let counts: Vec<String> = counts.iter().map(|c| c.to_string()).collect();
            format!("simplices: {}", counts.join(" "))
        }
        Command::Betti => {
            let cloud = input_cloud(config)?;
            let complex = build_complex(&cloud, config.r, config.k + 1, config.kind, &Metric::Euclidean)?;
            let betti = betti_numbers(&complex, config.k)?;
            let json = config.output("json");
            write_json(&json, &serde_json::json!({ "r": config.r, "beta": betti.values }))?;
            files.push(json);
            format!("beta: {betti}")
        }
        Command::Rate => {
            let params = config.rate_params(config.lambda, config.r, config.reps);
            let record = match config.j {
                Some(j) => estimate_simplex_rate(&params, j, stream)?,
                None => estimate_betti_rate(&params, config.k, stream)?,
            };
            let (csv, json) = (config.output("csv"), config.output("json"));
            output::write_atomic(&csv, output::records_csv(std::slice::from_ref(&record)).as_bytes())?;
            write_json(&json, &record)?;
            files.extend([csv, json]);
            format!(
                "{} k={}: {} ± {}",
                record.quantity.as_str(),
                record.k_or_j,
                record.mean,
                record.stderr
            )
        }
        Command::Curve => {
            let key = CurveKey {
                dim: config.dim,
                k: config.k,
                volume: config.volume,
                reps: config.reps,
                seed: config.seed,
                boundary: config.boundary_mode,
                s_grid: uniform_grid(config.s_max, config.s_step)?,
            };
            let (curve, cache_path) = load_or_build_curve(&cache_dir(&config.output_prefix), &key)?;
            let (csv, json, dat) = (config.output("csv"), config.output("json"), config.output("dat"));
            output::write_atomic(&csv, output::curve_csv(&curve).as_bytes())?;
            write_json(&json, &curve)?;
            emit_plot_data(&curve, &dat)?;
            files.extend([csv, json, dat, cache_path]);
            format!(
                "curve k={}: {} grid points up to s={}",
                curve.k,
                curve.s_grid.len(),
                curve.s_range().1
            )
        }
        Command::Converge => {
            let density = load_density(config)?;
            let target = resolve_target(config, &density)?;
            let table = convergence_experiment(
                &density,
                &config.n_schedule,
                config.r,
                config.k,
                config.reps,
                stream,
                config.process,
                target,
            )?;
            let (csv, json, dat) = (config.output("csv"), config.output("json"), config.output("dat"));
            output::write_atomic(&csv, output::convergence_csv(&table).as_bytes())?;
            write_json(&json, &table)?;
            emit_plot_data(&table, &dat)?;
            files.extend([csv, json, dat]);
            let last = table.last();
            let pass = last.within_tolerance(target.value);
            format!(
                "expectation_per_n n={}: {} ± {}, target {} ± {}, gap {} ({})",
                last.n,
                last.mean,
                last.stderr,
                target.value,
                target.stderr,
                last.gap,
                if pass { "pass" } else { "fail" }
            )
        }
        Command::Gap => {
            let density = load_density(config)?;
            let table = poissonization_gap(&density, &config.n_schedule, config.r, config.k, config.reps, stream)?;
            let (csv, json, dat) = (config.output("csv"), config.output("json"), config.output("dat"));
            output::write_atomic(&csv, output::gap_csv(&table).as_bytes())?;
            write_json(&json, &table)?;
            emit_plot_data(&table, &dat)?;
            files.extend([csv, json, dat]);
            let last = table.rows.last().expect("schedule is non-empty");
            format!(
                "gap n={}: {} ± {}, gap·sqrt(n) = {}",
                last.n, last.gap, last.gap_stderr, last.scaled_gap
            )
        }
        Command::Checks => {
            let scaling = scaling_check(
                &ScalingParams {
                    dim: config.dim,
                    lambda: config.lambda,
                    theta: config.theta,
                    r: config.r,
                    volume: config.volume,
                    k: config.k,
                    reps: config.reps,
                    boundary: config.boundary_mode,
                },
                stream.child(0),
            )?;
            let strip = boundary_strip_check(
                &StripParams {
                    dim: config.dim,
                    lambda: config.lambda,
                    r: config.r,
                    volume: config.volume,
                    sub_box_count: config.boxes,
                    k: config.k,
                    reps: config.reps,
                },
                stream.child(1),
            )?;
            let window = Window::centered_cube(config.dim, config.volume)?;
            let cells = vec![2; config.dim];
            let count: usize = cells.iter().product();
            let f = IntensityGrid::new(window.clone(), cells.clone(), vec![config.lambda; count])?;
            let mut bumped = vec![config.lambda; count];
            bumped[0] += config.eps;
            let g = IntensityGrid::new(window, cells, bumped)?;
            let perturbation = intensity_perturbation_check(&f, &g, config.r, config.k, config.reps, stream.child(2))?;
            let perturbation_ok = perturbation.bound_holds && perturbation.nested != Some(false);
            success = scaling.pass && strip.all_hold && perturbation_ok;
            let json = config.output("json");
            write_json(
                &json,
                &serde_json::json!({ "scaling": scaling, "boundary_strip": strip, "perturbation": perturbation }),
            )?;
            files.push(json);
            let word = |ok: bool| if ok { "pass" } else { "FAIL" };
            format!(
                "checks: scaling {}, boundary_strip {}, perturbation {}",
                word(scaling.pass),
                word(strip.all_hold),
                word(perturbation_ok)
            )
        }
    };
    Ok(RunSummary { line, files, success })
}

fn resolve_target(config: &ExperimentConfig, density: &DensityGrid) -> Result<Target> {
    let target_stream = RngStream::new(config.seed, 1);
    let estimate = match config.target {
        TargetMode::Direct => direct_integral(
            density,
            config.r,
            config.k,
            config.volume,
            config.target_reps,
            target_stream,
            config.boundary_mode,
        )?,
        TargetMode::Curve => {
            let key = CurveKey {
                dim: config.dim,
                k: config.k,
                volume: config.volume,
                reps: config.target_reps,
                seed: config.seed,
                boundary: config.boundary_mode,
                s_grid: uniform_grid(config.s_max, config.s_step)?,
            };
            let (curve, _) = load_or_build_curve(&cache_dir(&config.output_prefix), &key)?;
            thermodynamic_integral(density, config.r, config.k, &curve)?
        }
    };
    Ok(Target {
        value: estimate.value,
        stderr: estimate.stderr,
    })
}
