//! Experiments: scaling identity, convergence tables, Poissonization gap,
//! boundary-strip inequality and intensity perturbation.

use serde::{Deserialize, Serialize};

use super::{
    estimate_betti_rate, expectation_sample, mean_stderr, replicate, BoundaryMode, EstimateRecord, ExpectationParams,
    Process, RateParams, BIAS_ALLOWANCE, SIGMA_LEVEL,
};
use crate::cech::{build_cech, simplices_touching};
use crate::error::{invalid, Error, Result};
use crate::homology::{betti, betti_diff_bound_check, is_subcomplex};
use crate::pointproc::{
    sample_intensity, sample_poisson_homogeneous, superpose, DensityGrid, IntensityGrid, PointCloud, RngStream, Window,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub dim: usize,
    pub lambda: f64,
    pub theta: f64,
    pub r: f64,
    pub volume: f64,
    pub k: usize,
    pub reps: usize,
    pub boundary: BoundaryMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub params: ScalingParams,
    /// Estimate of `β̂_k(λ, r)`.
    pub direct: EstimateRecord,
    /// Estimate of `β̂_k(λθ, r/θ^{1/d})`.
    pub rescaled: EstimateRecord,
    /// `rescaled / θ` and its standard error.
    pub rescaled_over_theta: f64,
    pub rescaled_over_theta_stderr: f64,
    pub difference: f64,
    pub combined_stderr: f64,
    pub pass: bool,
}

/// Compares `β̂_k(λ, r)` with `β̂_k(λθ, r/θ^{1/d}) / θ`. Both sides use the
/// same stream, so `θ = 1` reproduces the direct estimate exactly.
pub fn scaling_check(p: &ScalingParams, stream: RngStream) -> Result<ScalingReport> {
    if !(p.theta > 0.0 && p.theta.is_finite()) {
        return Err(invalid(format!("theta must be positive, got {}", p.theta)));
    }
    let base = RateParams {
        dim: p.dim,
        lambda: p.lambda,
        r: p.r,
        volume: p.volume,
        reps: p.reps,
        boundary: p.boundary,
    };
    let direct = estimate_betti_rate(&base, p.k, stream)?;
    let rescaled_params = RateParams {
        lambda: p.lambda * p.theta,
        r: p.r / p.theta.powf(1.0 / p.dim as f64),
        ..base
    };
    let rescaled = estimate_betti_rate(&rescaled_params, p.k, stream)?;
    let over = rescaled.mean / p.theta;
    let over_se = rescaled.stderr / p.theta;
    let difference = direct.mean - over;
    let combined_stderr = direct.stderr.hypot(over_se);
    Ok(ScalingReport {
        params: *p,
        pass: difference.abs() <= SIGMA_LEVEL * combined_stderr,
        direct,
        rescaled,
        rescaled_over_theta: over,
        rescaled_over_theta_stderr: over_se,
        difference,
        combined_stderr,
    })
}

/// Limit value that a convergence table is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
    /// `|mean − target|`.
    pub gap: f64,
    /// `sqrt(stderr² + target_stderr²)`.
    pub combined_stderr: f64,
}

impl ConvergenceRow {
    /// `gap ≤ 3·combined_stderr + 10%·target`.
    pub fn within_tolerance(&self, target: f64) -> bool {
        self.gap <= SIGMA_LEVEL * self.combined_stderr + BIAS_ALLOWANCE * target.abs()
    }
}

/// `E[β_k]/n` along an increasing schedule of `n`, against a target limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub k: usize,
    pub r: f64,
    pub process: Process,
    pub reps: usize,
    pub master_seed: u64,
    pub target: Target,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn last(&self) -> &ConvergenceRow {
        self.rows.last().expect("convergence tables are non-empty")
    }

    pub fn row(&self, n: usize) -> Option<&ConvergenceRow> {
        self.rows.iter().find(|row| row.n == n)
    }
}

fn check_schedule(n_schedule: &[usize]) -> Result<()> {
    if n_schedule.is_empty() {
        return Err(invalid("n schedule is empty"));
    }
    if n_schedule[0] == 0 || n_schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("n schedule must be positive and strictly increasing"));
    }
    Ok(())
}

/// Runs the expectation estimator for every `n`; size `n` uses the replicate
/// streams of `stream.child(n)`, so binomial and Poissonized tables with one
/// seed share their point sequences.
#[allow(clippy::too_many_arguments)]
pub fn convergence_experiment(
    density: &DensityGrid,
    n_schedule: &[usize],
    r: f64,
    k: usize,
    reps: usize,
    stream: RngStream,
    process: Process,
    target: Target,
) -> Result<ConvergenceTable> {
    check_schedule(n_schedule)?;
    let mut rows = Vec::with_capacity(n_schedule.len());
    for &n in n_schedule {
        let p = ExpectationParams { n, r, k, reps };
        p.validate()?;
        let values = replicate(reps, stream.child(n as u64), |s| {
            expectation_sample(density, &p, process, s)
        })?;
        let (mean, stderr) = mean_stderr(&values);
        rows.push(ConvergenceRow {
            n,
            mean,
            stderr,
            gap: (mean - target.value).abs(),
            combined_stderr: stderr.hypot(target.stderr),
        });
    }
    Ok(ConvergenceTable {
        k,
        r,
        process,
        reps,
        master_seed: stream.master_seed,
        target,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub n: usize,
    pub binomial_mean: f64,
    pub binomial_stderr: f64,
    pub poisson_mean: f64,
    pub poisson_stderr: f64,
    /// `|binomial mean − Poissonized mean|`.
    pub gap: f64,
    /// Standard error of the paired per-replicate difference.
    pub gap_stderr: f64,
    /// `gap · sqrt(n)`.
    pub scaled_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapTable {
    pub k: usize,
    pub r: f64,
    pub reps: usize,
    pub master_seed: u64,
    pub rows: Vec<GapRow>,
}

/// Binomial versus Poissonized `E[β_k]/n` on common random numbers: each
/// replicate draws one point sequence, the binomial sample keeps the first
/// `n` points and the Poissonized one the first `N ~ Poisson(n)`.
pub fn poissonization_gap(
    density: &DensityGrid,
    n_schedule: &[usize],
    r: f64,
    k: usize,
    reps: usize,
    stream: RngStream,
) -> Result<GapTable> {
    check_schedule(n_schedule)?;
    let mut rows = Vec::with_capacity(n_schedule.len());
    for &n in n_schedule {
        let p = ExpectationParams { n, r, k, reps };
        p.validate()?;
        let pairs = replicate(reps, stream.child(n as u64), |s| {
            Ok((
                expectation_sample(density, &p, Process::Binomial, s)?,
                expectation_sample(density, &p, Process::Poisson, s)?,
            ))
        })?;
        let binom: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let pois: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let diff: Vec<f64> = pairs.iter().map(|p| p.0 - p.1).collect();
        let (bm, bs) = mean_stderr(&binom);
        let (pm, ps) = mean_stderr(&pois);
        let (dm, ds) = mean_stderr(&diff);
        rows.push(GapRow {
            n,
            binomial_mean: bm,
            binomial_stderr: bs,
            poisson_mean: pm,
            poisson_stderr: ps,
            gap: dm.abs(),
            gap_stderr: ds,
            scaled_gap: dm.abs() * (n as f64).sqrt(),
        });
    }
    Ok(GapTable {
        k,
        r,
        reps,
        master_seed: stream.master_seed,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripParams {
    pub dim: usize,
    pub lambda: f64,
    pub r: f64,
    pub volume: f64,
    /// Number of congruent boxes; must be `m^d`.
    pub sub_box_count: usize,
    pub k: usize,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripRealization {
    pub points: usize,
    /// `|β_k(whole) − Σ_i β_k(box i)|`.
    pub betti_difference: usize,
    /// `k`- and `(k+1)`-simplices of the whole complex missing from the union
    /// of the box complexes.
    pub lost_simplices: usize,
    /// `Σ_{j=k}^{k+1}` simplices touching the boundary strips.
    pub strip_bound: usize,
}

impl StripRealization {
    pub fn holds(&self) -> bool {
        self.betti_difference <= self.lost_simplices && self.lost_simplices <= self.strip_bound
    }

    pub fn slack(&self) -> i64 {
        self.strip_bound as i64 - self.betti_difference as i64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripReport {
    pub params: StripParams,
    pub realizations: Vec<StripRealization>,
    pub all_hold: bool,
    pub min_slack: i64,
    pub max_slack: i64,
}

/// Congruent boxes partitioning `window` into `count = m^d` pieces, plus the
/// closed slabs of half-width `r` around every internal face.
pub fn partition_boxes(window: &Window, count: usize, r: f64) -> Result<(Vec<Window>, Vec<Window>)> {
    let dim = window.dim();
    let m = (count as f64).powf(1.0 / dim as f64).round() as usize;
    if count == 0 || m.checked_pow(dim as u32) != Some(count) {
        return Err(Error::Partition(format!(
            "{count} boxes is not a perfect {dim}-th power"
        )));
    }
    for axis in 0..dim {
        let side = window.side(axis) / m as f64;
        if side <= 2.0 * r {
            return Err(Error::Partition(format!(
                "box side {side} must exceed 2r = {}",
                2.0 * r
            )));
        }
    }
    let mut boxes = Vec::with_capacity(count);
    for c in 0..count {
        let mut rest = c;
        let mut lower = vec![0.0; dim];
        let mut upper = vec![0.0; dim];
        for axis in (0..dim).rev() {
            let idx = rest % m;
            rest /= m;
            let w = window.side(axis) / m as f64;
            lower[axis] = window.lower()[axis] + idx as f64 * w;
            upper[axis] = if idx + 1 == m {
                window.upper()[axis]
            } else {
                window.lower()[axis] + (idx + 1) as f64 * w
            };
        }
        boxes.push(Window::new(lower, upper)?);
    }
    let mut strips = Vec::new();
    for axis in 0..dim {
        let w = window.side(axis) / m as f64;
        for t in 1..m {
            let face = window.lower()[axis] + t as f64 * w;
            let mut lower = window.lower().to_vec();
            let mut upper = window.upper().to_vec();
            lower[axis] = face - r;
            upper[axis] = face + r;
            strips.push(Window::new(lower, upper)?);
        }
    }
    Ok((boxes, strips))
}

fn box_label(boxes: &[Window], p: &[f64]) -> usize {
    boxes.iter().position(|b| b.contains(p)).unwrap_or(usize::MAX)
}

/// Per realization of `P_L(λ)` on the plain window, checks
/// `|β_k(C) − Σ_i β_k(C_i)| ≤ lost ≤ Σ_{j=k}^{k+1} S_j(strips)`, where `C_i` is
/// the complex of the points in box `i`.
pub fn boundary_strip_check(p: &StripParams, stream: RngStream) -> Result<StripReport> {
    let rate = RateParams {
        dim: p.dim,
        lambda: p.lambda,
        r: p.r,
        volume: p.volume,
        reps: p.reps.max(2),
        boundary: BoundaryMode::Plain,
    };
    rate.validate()?;
    if p.k == 0 {
        return Err(invalid("the strip bound applies to k >= 1"));
    }
    if p.reps == 0 {
        return Err(invalid("at least one realization is required"));
    }
    let window = rate.window()?;
    let (boxes, strips) = partition_boxes(&window, p.sub_box_count, p.r)?;
    let realizations = replicate(p.reps, stream, |s| {
        let cloud = sample_poisson_homogeneous(p.lambda, &window, s)?;
        let whole = build_cech(&cloud, p.r, p.k + 1)?;
        let labels: Vec<usize> = cloud.points().map(|x| box_label(&boxes, x)).collect();
        let mut pieces = 0usize;
        for b in 0..boxes.len() {
            let part = PointCloud::from_flat(
                cloud.dim(),
                cloud
                    .points()
                    .zip(&labels)
                    .filter(|(_, &l)| l == b)
                    .flat_map(|(x, _)| x.iter().copied())
                    .collect(),
            )
            .unwrap_or_else(|_| PointCloud::empty(cloud.dim()));
            pieces += betti(&build_cech(&part, p.r, p.k + 1)?, p.k)?;
        }
        let lost = (p.k..=p.k + 1)
            .map(|j| {
                whole
                    .simplices(j)
                    .filter(|s| s.iter().any(|&v| labels[v as usize] != labels[s[0] as usize]))
                    .count()
            })
            .sum();
        let mut strip_bound = 0;
        for j in p.k..=p.k + 1 {
            strip_bound += simplices_touching(&whole, &cloud, &strips, j)?;
        }
        Ok(StripRealization {
            points: cloud.len(),
            betti_difference: (betti(&whole, p.k)? as i64 - pieces as i64).unsigned_abs() as usize,
            lost_simplices: lost,
            strip_bound,
        })
    })?;
    let all_hold = realizations.iter().all(StripRealization::holds);
    let min_slack = realizations.iter().map(StripRealization::slack).min().unwrap_or(0);
    let max_slack = realizations.iter().map(StripRealization::slack).max().unwrap_or(0);
    Ok(StripReport {
        params: *p,
        realizations,
        all_hold,
        min_slack,
        max_slack,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub k: usize,
    pub r: f64,
    pub reps: usize,
    /// Mean of `β_k(C(P(f))) − β_k(C(P(g)))` under the max-coupling.
    pub mean_difference: f64,
    pub difference_stderr: f64,
    /// `∫ |f − g|`.
    pub l1_distance: f64,
    /// `|mean_difference| / l1_distance`; absent when `f == g`.
    pub ratio: Option<f64>,
    /// Whether the two-complex Betti bound held against `C(P(max(f, g)))`
    /// on every realization.
    pub bound_holds: bool,
    /// When one intensity dominates the other: whether the smaller complex was
    /// a subcomplex of the larger on every realization.
    pub nested: Option<bool>,
}

/// Couples `P(f)` and `P(g)` through a shared base `P(min(f, g))` plus
/// independent increments `P(f − min)` and `P(g − min)`, then compares
/// `β_k` of their complexes realization by realization.
pub fn intensity_perturbation_check(
    f: &IntensityGrid,
    g: &IntensityGrid,
    r: f64,
    k: usize,
    reps: usize,
    stream: RngStream,
) -> Result<PerturbationReport> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid(format!("radius must be positive, got {r}")));
    }
    if k == 0 {
        return Err(invalid("the perturbation bound applies to k >= 1"));
    }
    if reps < 2 {
        return Err(invalid("at least 2 replicates are required"));
    }
    let base = f.pointwise_min(g)?;
    let extra_f = f.excess_over(&base)?;
    let extra_g = g.excess_over(&base)?;
    let l1_distance = f.l1_distance(g)?;
    let f_below = f.is_dominated_by(g);
    let g_below = g.is_dominated_by(f);

    let outcomes = replicate(reps, stream, |s| {
        let shared = sample_intensity(&base, s.child(0))?;
        let inc_f = sample_intensity(&extra_f, s.child(1))?;
        let inc_g = sample_intensity(&extra_g, s.child(2))?;
        let cloud_f = superpose(&shared, &inc_f)?;
        let cloud_g = superpose(&shared, &inc_g)?;
        let cf = build_cech(&cloud_f, r, k + 1)?;
        let cg = build_cech(&cloud_g, r, k + 1)?;
        // P(max) listed so that each side is a prefix of it
        let hf = build_cech(&superpose(&cloud_f, &inc_g)?, r, k + 1)?;
        let hg = build_cech(&superpose(&cloud_g, &inc_f)?, r, k + 1)?;
        let bound = betti_diff_bound_check(&cf, &hf, k)? && betti_diff_bound_check(&cg, &hg, k)?;
        let nested = if f_below {
            is_subcomplex(&cf, &cg) && betti_diff_bound_check(&cf, &cg, k)?
        } else if g_below {
            is_subcomplex(&cg, &cf) && betti_diff_bound_check(&cg, &cf, k)?
        } else {
            true
        };
        Ok((betti(&cf, k)? as f64 - betti(&cg, k)? as f64, bound, nested))
    })?;
    let diffs: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let (mean_difference, difference_stderr) = mean_stderr(&diffs);
    Ok(PerturbationReport {
        k,
        r,
        reps,
        mean_difference,
        difference_stderr,
        l1_distance,
        ratio: (l1_distance > 0.0).then(|| mean_difference.abs() / l1_distance),
        bound_holds: outcomes.iter().all(|o| o.1),
        nested: (f_below || g_below).then(|| outcomes.iter().all(|o| o.2)),
    })
}
