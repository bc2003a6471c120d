//! Monte Carlo estimators for per-volume Betti and simplex rates, the
//! thermodynamic-limit integral, and the experiments built on them.
//!
//! Every estimator runs its replicates as independent jobs on the current
//! rayon pool. Replicate `i` always draws from `stream.child(i)` and the
//! summary statistics are accumulated sequentially in replicate order, so a
//! result depends only on the seed and never on the worker count.

mod curve;
mod experiments;
pub mod output;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use curve::{
    build_limit_curve, direct_integral, load_or_build_curve, thermodynamic_integral, uniform_grid, CurveKey,
    IntegralEstimate, LimitCurve,
};
pub use experiments::{
    boundary_strip_check, convergence_experiment, intensity_perturbation_check, partition_boxes, poissonization_gap,
    scaling_check, ConvergenceRow, ConvergenceTable, GapRow, GapTable, PerturbationReport, ScalingParams,
    ScalingReport, StripParams, StripRealization, StripReport, Target,
};

use crate::cech::{build_complex, ComplexKind, Metric, SimplicialComplex};
use crate::error::{invalid, Result};
use crate::homology::betti;
use crate::pointproc::{
    poissonize, sample_binomial, sample_poisson_homogeneous, scale_points, DensityGrid, PointCloud, RngStream, Window,
};

/// Pass threshold in combined standard errors.
pub const SIGMA_LEVEL: f64 = 3.0;

/// Relative bias allowed when comparing finite-size estimates with limits.
pub const BIAS_ALLOWANCE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    BettiRate,
    SimplexRate,
    ExpectationPerN,
    Gap,
}

impl Quantity {
    pub fn as_str(self) -> &'static str {
        match self {
            Quantity::BettiRate => "betti_rate",
            Quantity::SimplexRate => "simplex_rate",
            Quantity::ExpectationPerN => "expectation_per_n",
            Quantity::Gap => "gap",
        }
    }
}

/// How the observation window treats its faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    /// Euclidean distances inside `W_L`.
    #[default]
    Plain,
    /// Flat-torus distances on `W_L`.
    Torus,
}

impl BoundaryMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryMode::Plain => "plain",
            BoundaryMode::Torus => "torus",
        }
    }

    pub fn metric(self, window: &Window) -> Metric {
        match self {
            BoundaryMode::Plain => Metric::Euclidean,
            BoundaryMode::Torus => Metric::Torus(window.clone()),
        }
    }
}

/// Which point process feeds an expectation estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Process {
    /// `n` i.i.d. points.
    #[default]
    Binomial,
    /// `Poisson(n)` i.i.d. points.
    Poisson,
}

/// One Monte Carlo estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub quantity: Quantity,
    pub k_or_j: usize,
    /// Intensity, absent for density-driven estimates.
    pub lambda: Option<f64>,
    pub r: f64,
    /// Window volume `L` for rates, sample size `n` for expectations.
    pub l_or_n: f64,
    pub mean: f64,
    pub stderr: f64,
    pub reps: usize,
    pub master_seed: u64,
    pub boundary_mode: BoundaryMode,
}

impl EstimateRecord {
    /// `|a − b| ≤ SIGMA_LEVEL · sqrt(se_a² + se_b²)`.
    pub fn agrees_with(&self, other: &EstimateRecord) -> bool {
        let se = self.stderr.hypot(other.stderr);
        (self.mean - other.mean).abs() <= SIGMA_LEVEL * se
    }
}

/// Sample mean and standard error `sd / sqrt(reps)`, accumulated in order.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Runs `job` on `stream.child(i)` for every replicate `i`, preserving order.
pub fn replicate<T, F>(reps: usize, stream: RngStream, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(RngStream) -> Result<T> + Sync,
{
    (0..reps as u64).into_par_iter().map(|i| job(stream.child(i))).collect()
}

/// Homogeneous-process rate estimate settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub dim: usize,
    pub lambda: f64,
    pub r: f64,
    /// Window volume `L`.
    pub volume: f64,
    pub reps: usize,
    pub boundary: BoundaryMode,
}

impl RateParams {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(invalid("dimension must be >= 1"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(invalid(format!("intensity must be non-negative, got {}", self.lambda)));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(invalid(format!("radius must be positive, got {}", self.r)));
        }
        let min_volume = (3.0 * self.r).powi(self.dim as i32);
        if !(self.volume > min_volume && self.volume.is_finite()) {
            return Err(invalid(format!(
                "window volume {} must exceed (3r)^d = {min_volume}",
                self.volume
            )));
        }
        if self.reps < 2 {
            return Err(invalid("at least 2 replicates are required"));
        }
        Ok(())
    }

    pub fn window(&self) -> Result<Window> {
        Window::centered_cube(self.dim, self.volume)
    }
}

/// One realization of `C(P_L(λ), r)` with simplices up to `max_dim`.
pub fn sample_rate_complex(
    p: &RateParams,
    max_dim: usize,
    stream: RngStream,
) -> Result<(PointCloud, SimplicialComplex)> {
    let window = p.window()?;
    let cloud = sample_poisson_homogeneous(p.lambda, &window, stream)?;
    let complex = build_complex(&cloud, p.r, max_dim, ComplexKind::Cech, &p.boundary.metric(&window))?;
    Ok((cloud, complex))
}

fn rate_record(p: &RateParams, quantity: Quantity, k_or_j: usize, values: &[f64], stream: RngStream) -> EstimateRecord {
    let (mean, stderr) = mean_stderr(values);
    EstimateRecord {
        quantity,
        k_or_j,
        lambda: Some(p.lambda),
        r: p.r,
        l_or_n: p.volume,
        mean,
        stderr,
        reps: p.reps,
        master_seed: stream.master_seed,
        boundary_mode: p.boundary,
    }
}

/// Mean of `β_k(C(P_L(λ), r)) / L`.
pub fn estimate_betti_rate(p: &RateParams, k: usize, stream: RngStream) -> Result<EstimateRecord> {
    p.validate()?;
    if k == 0 || k >= p.dim {
        return Err(invalid(format!(
            "Betti rates are defined for 1 <= k <= d-1, got k = {k}, d = {}",
            p.dim
        )));
    }
    let values = replicate(p.reps, stream, |s| {
        let (_, complex) = sample_rate_complex(p, k + 1, s)?;
        Ok(betti(&complex, k)? as f64 / p.volume)
    })?;
    Ok(rate_record(p, Quantity::BettiRate, k, &values, stream))
}

/// Mean of `S_j(λ, r; L) / L`.
pub fn estimate_simplex_rate(p: &RateParams, j: usize, stream: RngStream) -> Result<EstimateRecord> {
    p.validate()?;
    let values = replicate(p.reps, stream, |s| {
        let (_, complex) = sample_rate_complex(p, j, s)?;
        Ok(complex.simplex_count(j) as f64 / p.volume)
    })?;
    Ok(rate_record(p, Quantity::SimplexRate, j, &values, stream))
}

/// Density-driven expectation settings: `β_k(C(X, r·n^{-1/d})) / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectationParams {
    pub n: usize,
    pub r: f64,
    pub k: usize,
    pub reps: usize,
}

impl ExpectationParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("sample size n must be >= 1"));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(invalid(format!("radius must be positive, got {}", self.r)));
        }
        if self.reps < 2 {
            return Err(invalid("at least 2 replicates are required"));
        }
        Ok(())
    }
}

/// `β_k(C(cloud, r_n)) / n`, evaluated on `n^{1/d}·cloud` at radius `r`.
pub fn normalized_betti(cloud: &PointCloud, n: usize, r: f64, k: usize) -> Result<f64> {
    let scaled = scale_points(cloud, (n as f64).powf(1.0 / cloud.dim() as f64))?;
    let complex = build_complex(&scaled, r, k + 1, ComplexKind::Cech, &Metric::Euclidean)?;
    Ok(betti(&complex, k)? as f64 / n as f64)
}

/// One replicate of the binomial or Poissonized expectation.
pub fn expectation_sample(
    density: &DensityGrid,
    p: &ExpectationParams,
    process: Process,
    stream: RngStream,
) -> Result<f64> {
    let cloud = match process {
        Process::Binomial => sample_binomial(density, p.n, stream)?,
        Process::Poisson => poissonize(density, p.n, stream)?,
    };
    normalized_betti(&cloud, p.n, p.r, p.k)
}

fn estimate_expectation(
    density: &DensityGrid,
    p: &ExpectationParams,
    process: Process,
    stream: RngStream,
) -> Result<EstimateRecord> {
    p.validate()?;
    let values = replicate(p.reps, stream, |s| expectation_sample(density, p, process, s))?;
    let (mean, stderr) = mean_stderr(&values);
    Ok(EstimateRecord {
        quantity: Quantity::ExpectationPerN,
        k_or_j: p.k,
        lambda: None,
        r: p.r,
        l_or_n: p.n as f64,
        mean,
        stderr,
        reps: p.reps,
        master_seed: stream.master_seed,
        boundary_mode: BoundaryMode::Plain,
    })
}

/// Mean of `β_k(C(X_n, r_n)) / n` over binomial samples.
pub fn estimate_binomial_expectation(
    density: &DensityGrid,
    p: &ExpectationParams,
    stream: RngStream,
) -> Result<EstimateRecord> {
    estimate_expectation(density, p, Process::Binomial, stream)
}

/// Mean of `β_k(C(P̄_n, r_n)) / n` over Poissonized samples.
pub fn estimate_poissonized_expectation(
    density: &DensityGrid,
    p: &ExpectationParams,
    stream: RngStream,
) -> Result<EstimateRecord> {
    estimate_expectation(density, p, Process::Poisson, stream)
}

pub fn estimate_expectation_for(
    density: &DensityGrid,
    p: &ExpectationParams,
    process: Process,
    stream: RngStream,
) -> Result<EstimateRecord> {
    estimate_expectation(density, p, process, stream)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(dim: usize, lambda: f64, r: f64, volume: f64, reps: usize, boundary: BoundaryMode) -> RateParams {
        RateParams {
            dim,
            lambda,
            r,
            volume,
            reps,
            boundary,
        }
    }

    #[test]
    fn mean_stderr_basics() {
        assert_eq!(mean_stderr(&[1.0, 1.0, 1.0]), (1.0, 0.0));
        let (m, se) = mean_stderr(&[0.0, 2.0]);
        assert_eq!(m, 1.0);
        assert!((se - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_intensity_rates_vanish() {
        let p = params(2, 0.0, 1.0, 100.0, 5, BoundaryMode::Plain);
        let rec = estimate_betti_rate(&p, 1, RngStream::from_seed(1)).unwrap();
        assert_eq!((rec.mean, rec.stderr), (0.0, 0.0));
        let rec = estimate_simplex_rate(&p, 2, RngStream::from_seed(1)).unwrap();
        assert_eq!((rec.mean, rec.stderr), (0.0, 0.0));
    }

    #[test]
    fn validation() {
        let s = RngStream::from_seed(1);
        assert!(estimate_betti_rate(&params(2, 1.0, 1.0, 8.0, 5, BoundaryMode::Torus), 1, s).is_err());
        assert!(estimate_betti_rate(&params(2, 1.0, 1.0, 100.0, 1, BoundaryMode::Plain), 1, s).is_err());
        assert!(estimate_betti_rate(&params(2, 1.0, 1.0, 100.0, 5, BoundaryMode::Plain), 2, s).is_err());
        assert!(estimate_betti_rate(&params(2, 1.0, 1.0, 100.0, 5, BoundaryMode::Plain), 0, s).is_err());
        assert!(estimate_betti_rate(&params(2, -1.0, 1.0, 100.0, 5, BoundaryMode::Plain), 1, s).is_err());
    }

    #[test]
    fn vertex_rate_is_lambda() {
        let p = params(2, 1.5, 1.0, 100.0, 200, BoundaryMode::Plain);
        let rec = estimate_simplex_rate(&p, 0, RngStream::from_seed(4)).unwrap();
        assert!((rec.mean - 1.5).abs() <= 3.0 * rec.stderr, "{rec:?}");
    }

    #[test]
    fn sparse_regime_has_no_cycles() {
        let p = params(2, 1.0, 0.05, 100.0, 20, BoundaryMode::Torus);
        let rec = estimate_betti_rate(&p, 1, RngStream::from_seed(2)).unwrap();
        assert_eq!(rec.mean, 0.0);
    }

    #[test]
    fn single_point_expectation_is_zero() {
        let d = DensityGrid::uniform(Window::unit_cube(2).unwrap()).unwrap();
        let p = ExpectationParams {
            n: 1,
            r: 1.0,
            k: 1,
            reps: 10,
        };
        let rec = estimate_binomial_expectation(&d, &p, RngStream::from_seed(3)).unwrap();
        assert_eq!(rec.mean, 0.0);
    }

    #[test]
    fn beta0_per_point_is_at_most_one() {
        let d = DensityGrid::uniform(Window::unit_cube(2).unwrap()).unwrap();
        let p = ExpectationParams {
            n: 50,
            r: 1.0,
            k: 0,
            reps: 20,
        };
        let values = replicate(p.reps, RngStream::from_seed(8), |s| {
            expectation_sample(&d, &p, Process::Binomial, s)
        })
        .unwrap();
        assert!(values.iter().all(|&v| v <= 1.0 && v > 0.0));
    }
}
