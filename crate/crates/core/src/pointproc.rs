//! Point processes on boxes: binomial draws from a piecewise-constant density,
//! homogeneous and grid-intensity Poisson processes, Poissonization, and the
//! superposition / scaling couplings.
//!
//! All samplers are pure functions of an [`RngStream`]. Within a stream the
//! point coordinates and the Poisson point count come from two distinct
//! ChaCha streams, so [`sample_binomial`] with `n` points is a prefix of
//! [`poissonize`] whenever the Poisson count is at least `n`.

use std::collections::HashSet;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Maximum deviation of a density's total mass from one.
pub const MASS_TOLERANCE: f64 = 1e-12;

const POINT_STREAM: u64 = 0;
const COUNT_STREAM: u64 = 1;

/// Axis-aligned half-open box `[lower, upper)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Window {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(invalid("window must have dimension >= 1"));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        for (lo, hi) in lower.iter().zip(&upper) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(invalid(format!("window bounds [{lo}, {hi}) are empty or not finite")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The centred cube `W_L = [-L^{1/d}/2, L^{1/d}/2)^d` of volume `volume`.
    pub fn centered_cube(dim: usize, volume: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("window must have dimension >= 1"));
        }
        if !(volume > 0.0 && volume.is_finite()) {
            return Err(invalid(format!("window volume must be positive, got {volume}")));
        }
        let half = volume.powf(1.0 / dim as f64) / 2.0;
        Self::new(vec![-half; dim], vec![half; dim])
    }

    pub fn unit_cube(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim], vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.side(i)).product()
    }

    /// Half-open membership, matching the sampling domain.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| lo <= v && v < hi)
    }

    /// Closed membership, used for region queries such as boundary strips.
    pub fn contains_closed(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }
}

/// Finite set of distinct points in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    seed: Option<u64>,
}

impl PointCloud {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            coords: Vec::new(),
            seed: None,
        }
    }

    /// Builds a cloud from flat row-major coordinates, dropping exact
    /// duplicates (first occurrence wins).
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("point dimension must be >= 1"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(invalid(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("point coordinates must be finite"));
        }
        let mut cloud = Self {
            dim,
            coords,
            seed: None,
        };
        cloud.dedup();
        Ok(cloud)
    }

    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(dim, coords)
    }

    /// Reads whitespace- or comma-separated coordinates, one point per line.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn read_text(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut dim = None;
        let mut coords = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| invalid(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
            match dim {
                None => dim = Some(row.len()),
                Some(d) if d != row.len() => {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: row.len(),
                    })
                }
                _ => {}
            }
            coords.extend(row);
        }
        let dim = dim.ok_or_else(|| invalid(format!("{} contains no points", path.display())))?;
        Self::from_flat(dim, coords)
    }

    fn dedup(&mut self) {
        let dim = self.dim;
        let mut seen = HashSet::with_capacity(self.len());
        let mut kept = Vec::with_capacity(self.coords.len());
        for p in self.coords.chunks_exact(dim) {
            // +0.0 folds -0.0 onto 0.0
            let key: Vec<u64> = p.iter().map(|v| (v + 0.0).to_bits()).collect();
            if seen.insert(key) {
                kept.extend_from_slice(p);
            }
        }
        self.coords = kept;
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Keeps the points for which `keep` returns true, preserving order.
    pub fn filter(&self, mut keep: impl FnMut(&[f64]) -> bool) -> PointCloud {
        let coords = self.points().filter(|p| keep(p)).flatten().copied().collect();
        PointCloud {
            dim: self.dim,
            coords,
            seed: self.seed,
        }
    }

    /// Restriction to a window (half-open membership).
    pub fn restrict(&self, window: &Window) -> PointCloud {
        self.filter(|p| window.contains(p))
    }

    pub fn count_in(&self, window: &Window) -> usize {
        self.points().filter(|p| window.contains(p)).count()
    }
}

/// Reproducible random substream addressed by `(master_seed, stream_index)`.
///
/// The pair is written verbatim into the ChaCha key, so distinct pairs give
/// distinct generators. [`RngStream::child`] derives replicate streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    pub fn from_seed(master_seed: u64) -> Self {
        Self::new(master_seed, 0)
    }

    /// Child stream `i` of this stream. Children of one parent are distinct;
    /// the parent identity is folded into the child's master seed.
    pub fn child(&self, i: u64) -> RngStream {
        RngStream {
            master_seed: splitmix64(self.master_seed ^ splitmix64(self.stream_index)),
            stream_index: i,
        }
    }

    /// Generator for one purpose within this stream.
    pub fn rng(&self, purpose: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.stream_index.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(purpose);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Non-negative piecewise-constant function on a regular grid over a box.
/// Cell values are stored row-major: the last axis varies fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityGrid {
    window: Window,
    cells_per_axis: Vec<usize>,
    values: Vec<f64>,
}

impl IntensityGrid {
    pub fn new(window: Window, cells_per_axis: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if cells_per_axis.len() != window.dim() {
            return Err(Error::DimensionMismatch {
                expected: window.dim(),
                found: cells_per_axis.len(),
            });
        }
        if cells_per_axis.contains(&0) {
            return Err(invalid("cells_per_axis entries must be positive"));
        }
        let cells: usize = cells_per_axis.iter().product();
        if values.len() != cells {
            return Err(invalid(format!(
                "grid has {cells} cells but {} values were given",
                values.len()
            )));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("grid values must be finite and non-negative"));
        }
        Ok(Self {
            window,
            cells_per_axis,
            values,
        })
    }

    /// Constant intensity `lambda` over a window.
    pub fn constant(window: Window, lambda: f64) -> Result<Self> {
        let dim = window.dim();
        Self::new(window, vec![1; dim], vec![lambda])
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn cells_per_axis(&self) -> &[usize] {
        &self.cells_per_axis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell_volume(&self) -> f64 {
        self.window.volume() / self.values.len() as f64
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Integral of the function over its box.
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_volume()
    }

    /// Lower corner and per-axis widths of cell `c`.
    pub fn cell_bounds(&self, c: usize) -> (Vec<f64>, Vec<f64>) {
        let dim = self.dim();
        let mut lower = vec![0.0; dim];
        let mut width = vec![0.0; dim];
        let mut rest = c;
        for axis in (0..dim).rev() {
            let n = self.cells_per_axis[axis];
            let idx = rest % n;
            rest /= n;
            width[axis] = self.window.side(axis) / n as f64;
            lower[axis] = self.window.lower()[axis] + idx as f64 * width[axis];
        }
        (lower, width)
    }

    /// Value at `x`, zero outside the box.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        if !self.window.contains(x) {
            return 0.0;
        }
        let mut c = 0;
        for (axis, &v) in x.iter().enumerate() {
            let n = self.cells_per_axis[axis];
            let t = (v - self.window.lower()[axis]) / self.window.side(axis);
            let idx = ((t * n as f64) as usize).min(n - 1);
            c = c * n + idx;
        }
        self.values[c]
    }

    fn check_compatible(&self, other: &IntensityGrid) -> Result<()> {
        if self.window != other.window || self.cells_per_axis != other.cells_per_axis {
            return Err(invalid("intensity grids must share window and cell layout"));
        }
        Ok(())
    }

    fn combine(&self, other: &IntensityGrid, op: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| op(*a, *b).max(0.0))
            .collect();
        Ok(Self {
            window: self.window.clone(),
            cells_per_axis: self.cells_per_axis.clone(),
            values,
        })
    }

    pub fn pointwise_min(&self, other: &IntensityGrid) -> Result<Self> {
        self.combine(other, f64::min)
    }

    pub fn pointwise_max(&self, other: &IntensityGrid) -> Result<Self> {
        self.combine(other, f64::max)
    }

    /// Positive part of `self - other`.
    pub fn excess_over(&self, other: &IntensityGrid) -> Result<Self> {
        self.combine(other, |a, b| a - b)
    }

    /// `∫ |self - other|` over the shared box.
    pub fn l1_distance(&self, other: &IntensityGrid) -> Result<f64> {
        self.check_compatible(other)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).sum();
        Ok(s * self.cell_volume())
    }

    pub fn is_dominated_by(&self, other: &IntensityGrid) -> bool {
        self.check_compatible(other).is_ok() && self.values.iter().zip(&other.values).all(|(a, b)| a <= b)
    }

    fn cumulative_masses(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.values
            .iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect()
    }
}

/// Draws `count` i.i.d. points with cell probability proportional to the cell
/// value and uniform position within the cell.
fn draw_from_grid(grid: &IntensityGrid, count: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let dim = grid.dim();
    let mut coords = Vec::with_capacity(count * dim);
    if count == 0 {
        return coords;
    }
    let cumulative = grid.cumulative_masses();
    let total = *cumulative.last().unwrap();
    for _ in 0..count {
        let u = rng.random::<f64>() * total;
        let mut cell = cumulative.partition_point(|&m| m <= u);
        // guard against u landing on the last edge or in trailing zero cells
        while cell >= cumulative.len() || grid.values[cell] == 0.0 {
            cell = cell.min(cumulative.len()) - 1;
        }
        let (lower, width) = grid.cell_bounds(cell);
        for axis in 0..dim {
            coords.push(lower[axis] + rng.random::<f64>() * width[axis]);
        }
    }
    coords
}

fn poisson_count(mean: f64, rng: &mut ChaCha8Rng) -> Result<usize> {
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|e| invalid(format!("Poisson({mean}): {e}")))?;
    Ok(dist.sample(rng) as usize)
}

fn cloud_from_draws(dim: usize, coords: Vec<f64>, stream: RngStream) -> PointCloud {
    let mut cloud = PointCloud {
        dim,
        coords,
        seed: Some(stream.master_seed),
    };
    cloud.dedup();
    cloud
}

/// Probability density that is constant on the cells of a regular grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityFile", into = "DensityFile")]
pub struct DensityGrid {
    grid: IntensityGrid,
    sup_value: f64,
}

/// On-disk density layout; values are row-major and need not be normalised.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityFile {
    pub dim: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cells_per_axis: Vec<usize>,
    pub values: Vec<f64>,
}

impl TryFrom<DensityFile> for DensityGrid {
    type Error = Error;

    fn try_from(file: DensityFile) -> Result<Self> {
        let window = Window::new(file.lower, file.upper)?;
        if window.dim() != file.dim {
            return Err(Error::DimensionMismatch {
                expected: file.dim,
                found: window.dim(),
            });
        }
        DensityGrid::normalized(window, file.cells_per_axis, file.values)
    }
}

impl From<DensityGrid> for DensityFile {
    fn from(d: DensityGrid) -> Self {
        DensityFile {
            dim: d.dim(),
            lower: d.grid.window.lower.clone(),
            upper: d.grid.window.upper.clone(),
            cells_per_axis: d.grid.cells_per_axis.clone(),
            values: d.grid.values,
        }
    }
}

impl DensityGrid {
    /// Accepts values that already integrate to one within [`MASS_TOLERANCE`].
    pub fn new(window: Window, cells_per_axis: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let grid = IntensityGrid::new(window, cells_per_axis, values)?;
        let mass = grid.total_mass();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::DensityMass { mass });
        }
        let sup_value = grid.sup();
        Ok(Self { grid, sup_value })
    }

    /// Rescales non-negative cell weights so that they integrate to one.
    pub fn normalized(window: Window, cells_per_axis: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let grid = IntensityGrid::new(window, cells_per_axis, values)?;
        let mass = grid.total_mass();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::DensityMass { mass });
        }
        let values = grid.values.iter().map(|v| v / mass).collect();
        let grid = IntensityGrid { values, ..grid };
        let sup_value = grid.sup();
        Ok(Self { grid, sup_value })
    }

    /// Uniform density on a box.
    pub fn uniform(window: Window) -> Result<Self> {
        let dim = window.dim();
        Self::normalized(window, vec![1; dim], vec![1.0])
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn window(&self) -> &Window {
        &self.grid.window
    }

    pub fn cells_per_axis(&self) -> &[usize] {
        &self.grid.cells_per_axis
    }

    pub fn values(&self) -> &[f64] {
        &self.grid.values
    }

    pub fn cell_volume(&self) -> f64 {
        self.grid.cell_volume()
    }

    /// Supremum `Λ` of the density.
    pub fn sup_value(&self) -> f64 {
        self.sup_value
    }

    pub fn mass(&self) -> f64 {
        self.grid.total_mass()
    }

    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.grid.value_at(x)
    }

    /// `scale · f` as an intensity function.
    pub fn scaled(&self, scale: f64) -> IntensityGrid {
        IntensityGrid {
            values: self.grid.values.iter().map(|v| v * scale).collect(),
            ..self.grid.clone()
        }
    }

    fn check_mass(&self) -> Result<()> {
        let mass = self.mass();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::DensityMass { mass });
        }
        Ok(())
    }
}

/// `n` i.i.d. draws from `density`.
pub fn sample_binomial(density: &DensityGrid, n: usize, stream: RngStream) -> Result<PointCloud> {
    density.check_mass()?;
    let coords = draw_from_grid(&density.grid, n, &mut stream.rng(POINT_STREAM));
    Ok(cloud_from_draws(density.dim(), coords, stream))
}

/// Homogeneous Poisson process of intensity `lambda` restricted to `window`.
pub fn sample_poisson_homogeneous(lambda: f64, window: &Window, stream: RngStream) -> Result<PointCloud> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("intensity must be non-negative, got {lambda}")));
    }
    let count = poisson_count(lambda * window.volume(), &mut stream.rng(COUNT_STREAM))?;
    let grid = IntensityGrid::constant(window.clone(), 1.0)?;
    let coords = draw_from_grid(&grid, count, &mut stream.rng(POINT_STREAM));
    Ok(cloud_from_draws(window.dim(), coords, stream))
}

/// Poisson process with a piecewise-constant intensity function.
pub fn sample_intensity(intensity: &IntensityGrid, stream: RngStream) -> Result<PointCloud> {
    let count = poisson_count(intensity.total_mass(), &mut stream.rng(COUNT_STREAM))?;
    let coords = draw_from_grid(intensity, count, &mut stream.rng(POINT_STREAM));
    Ok(cloud_from_draws(intensity.dim(), coords, stream))
}

/// `N ~ Poisson(n)` i.i.d. draws from `density`: a Poisson process with
/// intensity `n·f`. Shares its point sequence with [`sample_binomial`].
pub fn poissonize(density: &DensityGrid, n: usize, stream: RngStream) -> Result<PointCloud> {
    if n == 0 {
        return Err(invalid("poissonize needs n >= 1"));
    }
    density.check_mass()?;
    let count = poisson_count(n as f64, &mut stream.rng(COUNT_STREAM))?;
    let coords = draw_from_grid(&density.grid, count, &mut stream.rng(POINT_STREAM));
    Ok(cloud_from_draws(density.dim(), coords, stream))
}

/// Union of two clouds; points of `b` follow those of `a`.
pub fn superpose(a: &PointCloud, b: &PointCloud) -> Result<PointCloud> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    let mut coords = Vec::with_capacity(a.coords.len() + b.coords.len());
    coords.extend_from_slice(&a.coords);
    coords.extend_from_slice(&b.coords);
    let mut cloud = PointCloud {
        dim: a.dim,
        coords,
        seed: a.seed.or(b.seed),
    };
    cloud.dedup();
    Ok(cloud)
}

/// Maps every point `x` to `theta·x`.
pub fn scale_points(cloud: &PointCloud, theta: f64) -> Result<PointCloud> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(invalid(format!("scale factor must be positive, got {theta}")));
    }
    Ok(PointCloud {
        dim: cloud.dim,
        coords: cloud.coords.iter().map(|c| c * theta).collect(),
        seed: cloud.seed,
    })
}
