//! The one-parameter curve `s ↦ β̂_k(1, s)` and the limit integral built on it.
//!
//! Any `β̂_k(λ, r)` is `λ · curve(λ^{1/d} r)`, so for a piecewise-constant
//! density the limit `∫ β̂_k(f(x), r) dx` is the finite sum
//! `Σ_c |c| f_c curve(f_c^{1/d} r)`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{estimate_betti_rate, BoundaryMode, RateParams};
use crate::error::{invalid, Error, Result};
use crate::pointproc::{DensityGrid, RngStream};

/// Sampled estimate of `s ↦ β̂_k(1, s)`, linearly interpolated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCurve {
    pub k: usize,
    pub dim: usize,
    pub s_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub stderrs: Vec<f64>,
    /// One identifier per grid point naming the estimate behind it.
    pub provenance: Vec<String>,
}

/// `0, step, 2·step, …` up to and including the first point `≥ s_max`.
pub fn uniform_grid(s_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && s_max >= 0.0 && s_max.is_finite()) {
        return Err(invalid(format!("bad curve grid: s_max = {s_max}, step = {step}")));
    }
    let n = (s_max / step - 1e-9).ceil().max(0.0) as usize;
    Ok((0..=n).map(|i| i as f64 * step).collect())
}

/// Estimates the curve with one [`estimate_betti_rate`] per grid point at
/// intensity one; grid point `i` uses `stream.child(i)`.
pub fn build_limit_curve(
    dim: usize,
    k: usize,
    s_grid: &[f64],
    volume: f64,
    reps: usize,
    stream: RngStream,
    boundary: BoundaryMode,
) -> Result<LimitCurve> {
    if s_grid.is_empty() {
        return Err(invalid("curve grid is empty"));
    }
    if s_grid[0] < 0.0 || s_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("curve grid must be non-negative and strictly increasing"));
    }
    let mut curve = LimitCurve {
        k,
        dim,
        s_grid: s_grid.to_vec(),
        values: Vec::with_capacity(s_grid.len()),
        stderrs: Vec::with_capacity(s_grid.len()),
        provenance: Vec::with_capacity(s_grid.len()),
    };
    for (i, &s) in s_grid.iter().enumerate() {
        if s == 0.0 {
            curve.values.push(0.0);
            curve.stderrs.push(0.0);
            curve.provenance.push("betti_rate:s=0:exact".into());
            continue;
        }
        let sub = stream.child(i as u64);
        let params = RateParams {
            dim,
            lambda: 1.0,
            r: s,
            volume,
            reps,
            boundary,
        };
        let rec = estimate_betti_rate(&params, k, sub)?;
        curve.values.push(rec.mean);
        curve.stderrs.push(rec.stderr);
        curve.provenance.push(format!(
            "betti_rate:k={k}:s={s}:L={volume}:reps={reps}:seed={}:stream={}:{}",
            sub.master_seed,
            sub.stream_index,
            boundary.as_str()
        ));
    }
    Ok(curve)
}

impl LimitCurve {
    pub fn s_range(&self) -> (f64, f64) {
        (self.s_grid[0], *self.s_grid.last().unwrap())
    }

    /// Interpolation weights `(index, weight)` of the grid points around `s`.
    fn weights(&self, s: f64) -> Result<[(usize, f64); 2]> {
        let (lo, hi) = self.s_range();
        if !(s >= lo && s <= hi) {
            return Err(Error::CurveCoverage {
                lo,
                hi,
                need_lo: s,
                need_hi: s,
            });
        }
        let i = self.s_grid.partition_point(|&g| g <= s);
        if i == 0 {
            return Ok([(0, 1.0), (0, 0.0)]);
        }
        let a = i - 1;
        if self.s_grid[a] == s || a + 1 == self.s_grid.len() {
            return Ok([(a, 1.0), (a, 0.0)]);
        }
        let t = (s - self.s_grid[a]) / (self.s_grid[a + 1] - self.s_grid[a]);
        Ok([(a, 1.0 - t), (a + 1, t)])
    }

    /// Interpolated `β̂_k(1, s)`.
    pub fn eval(&self, s: f64) -> Result<f64> {
        Ok(self.weights(s)?.iter().map(|&(i, w)| w * self.values[i]).sum())
    }

    /// Interpolated value with its standard error, treating grid points as
    /// independent.
    pub fn eval_with_stderr(&self, s: f64) -> Result<(f64, f64)> {
        let w = self.weights(s)?;
        let value = w.iter().map(|&(i, c)| c * self.values[i]).sum();
        let var: f64 = w.iter().map(|&(i, c)| (c * self.stderrs[i]).powi(2)).sum();
        Ok((value, var.sqrt()))
    }

    /// `β̂_k(λ, r) = λ · curve(λ^{1/d} r)`.
    pub fn rate(&self, lambda: f64, r: f64) -> Result<f64> {
        if lambda == 0.0 {
            return Ok(0.0);
        }
        Ok(lambda * self.eval(lambda.powf(1.0 / self.dim as f64) * r)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        super::output::write_atomic(path, serde_json::to_string_pretty(self)?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// `∫ β̂_k(f(x), r) dx` with a propagated standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralEstimate {
    pub value: f64,
    pub stderr: f64,
}

/// Exact Riemann sum of `|c| f_c curve(f_c^{1/d} r)` over the density cells.
pub fn thermodynamic_integral(density: &DensityGrid, r: f64, k: usize, curve: &LimitCurve) -> Result<IntegralEstimate> {
    if curve.k != k {
        return Err(invalid(format!("curve is for k = {}, not k = {k}", curve.k)));
    }
    if curve.dim != density.dim() {
        return Err(Error::DimensionMismatch {
            expected: density.dim(),
            found: curve.dim,
        });
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid(format!("radius must be positive, got {r}")));
    }
    let inv_d = 1.0 / density.dim() as f64;
    let need_hi = density.sup_value().powf(inv_d) * r;
    let (lo, hi) = curve.s_range();
    if lo > 0.0 || need_hi > hi {
        return Err(Error::CurveCoverage {
            lo,
            hi,
            need_lo: 0.0,
            need_hi,
        });
    }
    // accumulate per grid node so that shared nodes add coherently
    let mut coeff = vec![0.0; curve.s_grid.len()];
    let vol = density.cell_volume();
    for &f in density.values() {
        if f == 0.0 {
            continue;
        }
        for (i, w) in curve.weights(f.powf(inv_d) * r)? {
            coeff[i] += vol * f * w;
        }
    }
    let value = coeff.iter().zip(&curve.values).map(|(c, v)| c * v).sum();
    let var: f64 = coeff.iter().zip(&curve.stderrs).map(|(c, s)| (c * s).powi(2)).sum();
    Ok(IntegralEstimate {
        value,
        stderr: var.sqrt(),
    })
}

/// `∫ β̂_k(f(x), r) dx` with one direct rate estimate per distinct density
/// level: `Σ_level |level set| · β̂_k(f_level, r)`. Level `i` (in increasing
/// order of value) uses `stream.child(i)`.
pub fn direct_integral(
    density: &DensityGrid,
    r: f64,
    k: usize,
    volume: f64,
    reps: usize,
    stream: RngStream,
    boundary: BoundaryMode,
) -> Result<IntegralEstimate> {
    let mut levels: Vec<f64> = density.values().iter().copied().filter(|&v| v > 0.0).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut value = 0.0;
    let mut var = 0.0;
    for (i, &level) in levels.iter().enumerate() {
        let cells = density.values().iter().filter(|&&v| v == level).count();
        let measure = cells as f64 * density.cell_volume();
        let params = RateParams {
            dim: density.dim(),
            lambda: level,
            r,
            volume,
            reps,
            boundary,
        };
        let rec = estimate_betti_rate(&params, k, stream.child(i as u64))?;
        value += measure * rec.mean;
        var += (measure * rec.stderr).powi(2);
    }
    Ok(IntegralEstimate {
        value,
        stderr: var.sqrt(),
    })
}

/// Everything that determines a cached curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveKey {
    pub dim: usize,
    pub k: usize,
    pub volume: f64,
    pub reps: usize,
    pub seed: u64,
    pub boundary: BoundaryMode,
    pub s_grid: Vec<f64>,
}

impl CurveKey {
    pub fn file_name(&self) -> String {
        let (lo, hi) = (self.s_grid[0], *self.s_grid.last().unwrap());
        format!(
            "curve_d{}_k{}_L{}_reps{}_seed{}_{}_s{}-{}x{}.json",
            self.dim,
            self.k,
            self.volume,
            self.reps,
            self.seed,
            self.boundary.as_str(),
            lo,
            hi,
            self.s_grid.len()
        )
    }
}

#[derive(Serialize, Deserialize)]
struct CachedCurve {
    key: CurveKey,
    curve: LimitCurve,
}

/// Loads the curve for `key` from `dir`, building and storing it on a miss.
/// Returns the curve and the cache file path.
pub fn load_or_build_curve(dir: &Path, key: &CurveKey) -> Result<(LimitCurve, PathBuf)> {
    if key.s_grid.is_empty() {
        return Err(invalid("curve grid is empty"));
    }
    let path = dir.join(key.file_name());
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(cached) = serde_json::from_str::<CachedCurve>(&text) {
            if &cached.key == key {
                return Ok((cached.curve, path));
            }
        }
    }
    let curve = build_limit_curve(
        key.dim,
        key.k,
        &key.s_grid,
        key.volume,
        key.reps,
        RngStream::from_seed(key.seed),
        key.boundary,
    )?;
    std::fs::create_dir_all(dir)?;
    let cached = CachedCurve {
        key: key.clone(),
        curve,
    };
    super::output::write_atomic(&path, serde_json::to_string_pretty(&cached)?.as_bytes())?;
    Ok((cached.curve, path))
}
