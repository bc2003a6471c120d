//! Čech and Vietoris–Rips complexes of point clouds.
//!
//! Both builders enumerate the radius-`r` neighbor graph with a
//! [`NeighborGrid`] and grow cliques one vertex at a time, always appending a
//! vertex larger than the current maximum. Each simplex is therefore produced
//! exactly once and every dimension comes out in lexicographic order. The
//! Čech builder additionally keeps a clique only if its smallest enclosing
//! ball has radius at most `r/2`.

mod grid;
mod miniball;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use grid::NeighborGrid;
pub use miniball::{min_enclosing_ball, min_enclosing_ball_radius, Ball};

use crate::error::{invalid, Error, Result};
use crate::pointproc::{PointCloud, Window};

/// Absolute slack on the `radius ≤ r/2` inclusion test.
pub const RADIUS_TOLERANCE: f64 = 1e-12;

/// Whether a set with enclosing radius `radius` spans a simplex at scale `r`.
#[inline]
pub fn admits(radius: f64, r: f64) -> bool {
    radius <= 0.5 * r + RADIUS_TOLERANCE
}

/// Distance used for all simplex tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Metric {
    Euclidean,
    /// Flat torus obtained by identifying opposite faces of the window.
    Torus(Window),
}

impl Metric {
    /// Difference `b - a`, reduced to the minimum image on a torus.
    pub fn displacement(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        match self {
            Metric::Euclidean => b.iter().zip(a).map(|(x, y)| x - y).collect(),
            Metric::Torus(w) => b
                .iter()
                .zip(a)
                .enumerate()
                .map(|(axis, (x, y))| {
                    let side = w.side(axis);
                    let d = x - y;
                    d - side * (d / side).round()
                })
                .collect(),
        }
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.displacement(a, b).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Coordinates of `points` as seen from the first one, unwrapped across
    /// the torus seams so that the miniball can be taken in `R^d`.
    fn unwrap(&self, points: &[&[f64]]) -> Vec<Vec<f64>> {
        match self {
            Metric::Euclidean => points.iter().map(|p| p.to_vec()).collect(),
            Metric::Torus(_) => {
                let base = points[0];
                points.iter().map(|p| self.displacement(base, p)).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ComplexKind {
    Cech,
    Rips,
}

/// Finite simplicial complex on vertices `0..vertex_count`.
///
/// Dimension `j` is stored as a flat, lexicographically sorted list of
/// strictly increasing `(j+1)`-tuples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplicialComplex {
    dim_ambient: usize,
    max_dim: usize,
    vertex_count: usize,
    levels: Vec<Vec<u32>>,
}

impl SimplicialComplex {
    /// Downward closure of the given simplices. Vertex order inside a simplex
    /// does not matter; vertices must be `< vertex_count`.
    pub fn from_simplices(
        dim_ambient: usize,
        vertex_count: usize,
        max_dim: usize,
        simplices: &[Vec<usize>],
    ) -> Result<Self> {
        let mut sets: Vec<std::collections::BTreeSet<Vec<u32>>> = vec![Default::default(); max_dim + 1];
        for s in simplices {
            let mut s: Vec<u32> = s.iter().map(|&v| v as u32).collect();
            s.sort_unstable();
            s.dedup();
            if s.is_empty() {
                continue;
            }
            if s.len() > max_dim + 1 {
                return Err(invalid(format!("simplex {s:?} exceeds max_dim {max_dim}")));
            }
            if let Some(&v) = s.last() {
                if v as usize >= vertex_count {
                    return Err(invalid(format!("vertex {v} out of range 0..{vertex_count}")));
                }
            }
            // all non-empty subsets
            let m = s.len();
            for mask in 1u32..(1 << m) {
                let face: Vec<u32> = (0..m).filter(|b| mask & (1 << b) != 0).map(|b| s[b]).collect();
                sets[face.len() - 1].insert(face);
            }
        }
        let mut levels: Vec<Vec<u32>> = sets
            .into_iter()
            .map(|set| set.into_iter().flatten().collect())
            .collect();
        levels[0] = (0..vertex_count as u32).collect();
        Ok(Self {
            dim_ambient,
            max_dim,
            vertex_count,
            levels,
        })
    }

    pub fn dim_ambient(&self) -> usize {
        self.dim_ambient
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// Highest dimension with at least one simplex, `None` for the void complex.
    pub fn top_dim(&self) -> Option<usize> {
        (0..=self.max_dim).rev().find(|&j| self.simplex_count(j) > 0)
    }

    /// Number of `j`-simplices; zero above `max_dim`.
    pub fn simplex_count(&self, j: usize) -> usize {
        self.levels.get(j).map_or(0, |l| l.len() / (j + 1))
    }

    pub fn simplices(&self, j: usize) -> std::slice::ChunksExact<'_, u32> {
        match self.levels.get(j) {
            Some(l) => l.chunks_exact(j + 1),
            None => [].chunks_exact(j + 1),
        }
    }

    /// Position of a sorted simplex within its dimension.
    pub fn index_of(&self, simplex: &[u32]) -> Option<usize> {
        let j = simplex.len().checked_sub(1)?;
        let level = self.levels.get(j)?;
        let w = j + 1;
        let (mut lo, mut hi) = (0, level.len() / w);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match level[mid * w..(mid + 1) * w].cmp(simplex) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    pub fn contains(&self, simplex: &[u32]) -> bool {
        self.index_of(simplex).is_some()
    }

    /// Alternating sum `Σ_j (-1)^j S_j`.
    pub fn euler_characteristic(&self) -> i64 {
        (0..=self.max_dim)
            .map(|j| {
                let s = self.simplex_count(j) as i64;
                if j % 2 == 0 {
                    s
                } else {
                    -s
                }
            })
            .sum()
    }

    /// Writes one simplex per line, space-separated, in increasing dimension.
    pub fn write_dump(&self, out: &mut impl Write) -> std::io::Result<()> {
        for j in 0..=self.max_dim {
            for s in self.simplices(j) {
                let line: Vec<String> = s.iter().map(|v| v.to_string()).collect();
                writeln!(out, "{}", line.join(" "))?;
            }
        }
        Ok(())
    }

    /// Parses the format written by [`SimplicialComplex::write_dump`].
    pub fn read_dump(dim_ambient: usize, text: &str) -> Result<Self> {
        let mut simplices = Vec::new();
        let mut vertex_count = 0;
        let mut max_dim = 0;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let s = line
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| invalid(format!("bad simplex line {line:?}: {e}")))?;
            if s.len() == 1 {
                vertex_count = vertex_count.max(s[0] + 1);
            }
            max_dim = max_dim.max(s.len() - 1);
            simplices.push(s);
        }
        Self::from_simplices(dim_ambient, vertex_count, max_dim, &simplices)
    }
}

/// Radius-`r` neighbor graph as sorted upper adjacency lists.
fn neighbor_graph(cloud: &PointCloud, r: f64, metric: &Metric) -> Result<Vec<Vec<u32>>> {
    let grid = NeighborGrid::new(cloud, r, metric)?;
    let pairs = grid.pairs(|i, j| admits(0.5 * metric.distance(cloud.point(i), cloud.point(j)), r));
    let mut upper = vec![Vec::new(); cloud.len()];
    for (i, j) in pairs {
        upper[i as usize].push(j);
    }
    Ok(upper)
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid(format!("radius must be positive, got {r}")));
    }
    Ok(())
}

/// Builds the Čech or Rips complex of `cloud` at scale `r` up to `max_dim`.
pub fn build_complex(
    cloud: &PointCloud,
    r: f64,
    max_dim: usize,
    kind: ComplexKind,
    metric: &Metric,
) -> Result<SimplicialComplex> {
    check_radius(r)?;
    if let Metric::Torus(w) = metric {
        if w.dim() != cloud.dim() {
            return Err(Error::DimensionMismatch {
                expected: cloud.dim(),
                found: w.dim(),
            });
        }
    }
    let n = cloud.len();
    let mut levels: Vec<Vec<u32>> = vec![(0..n as u32).collect()];
    if max_dim >= 1 && n > 1 {
        let upper = neighbor_graph(cloud, r, metric)?;
        let edges: Vec<u32> = upper
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().flat_map(move |&j| [i as u32, j]))
            .collect();
        levels.push(edges);
        let adjacent = |u: u32, v: u32| upper[u as usize].binary_search(&v).is_ok();
        let mut coords: Vec<&[f64]> = Vec::with_capacity(max_dim + 1);
        for k in 1..max_dim {
            let mut next = Vec::new();
            for sigma in levels[k].chunks_exact(k + 1) {
                let last = *sigma.last().unwrap();
                for &v in &upper[last as usize] {
                    if !sigma[..k].iter().all(|&u| adjacent(u, v)) {
                        continue;
                    }
                    if kind == ComplexKind::Cech {
                        coords.clear();
                        coords.extend(sigma.iter().map(|&u| cloud.point(u as usize)));
                        coords.push(cloud.point(v as usize));
                        let local = metric.unwrap(&coords);
                        let refs: Vec<&[f64]> = local.iter().map(|p| p.as_slice()).collect();
                        if !admits(min_enclosing_ball_radius(&refs)?, r) {
                            continue;
                        }
                    }
                    next.extend_from_slice(sigma);
                    next.push(v);
                }
            }
            if next.is_empty() {
                break;
            }
            levels.push(next);
        }
    }
    levels.resize(max_dim + 1, Vec::new());
    Ok(SimplicialComplex {
        dim_ambient: cloud.dim(),
        max_dim,
        vertex_count: n,
        levels,
    })
}

/// Čech complex: simplices whose vertex set has miniball radius `≤ r/2`.
pub fn build_cech(cloud: &PointCloud, r: f64, max_dim: usize) -> Result<SimplicialComplex> {
    build_complex(cloud, r, max_dim, ComplexKind::Cech, &Metric::Euclidean)
}

/// Vietoris–Rips complex: cliques of the graph joining points at distance `≤ r`.
pub fn build_rips(cloud: &PointCloud, r: f64, max_dim: usize) -> Result<SimplicialComplex> {
    build_complex(cloud, r, max_dim, ComplexKind::Rips, &Metric::Euclidean)
}

/// `S_j`, the number of `j`-simplices.
pub fn simplex_count(complex: &SimplicialComplex, j: usize) -> usize {
    complex.simplex_count(j)
}

/// `ξ(v)`: the number of `j`-simplices containing vertex `v`.
pub fn vertex_simplex_count(complex: &SimplicialComplex, v: usize, j: usize) -> usize {
    if v >= complex.vertex_count() {
        return 0;
    }
    let v = v as u32;
    complex.simplices(j).filter(|s| s.binary_search(&v).is_ok()).count()
}

/// Per-vertex counts `ξ(v)` for every vertex at once.
pub fn vertex_simplex_counts(complex: &SimplicialComplex, j: usize) -> Vec<usize> {
    let mut counts = vec![0; complex.vertex_count()];
    for s in complex.simplices(j) {
        for &v in s {
            counts[v as usize] += 1;
        }
    }
    counts
}

/// Number of `j`-simplices with at least one vertex in the union of `regions`
/// (closed boxes).
pub fn simplices_touching(
    complex: &SimplicialComplex,
    cloud: &PointCloud,
    regions: &[Window],
    j: usize,
) -> Result<usize> {
    if let Some(w) = regions.iter().find(|w| w.dim() != cloud.dim()) {
        return Err(Error::DimensionMismatch {
            expected: cloud.dim(),
            found: w.dim(),
        });
    }
    let inside: Vec<bool> = cloud
        .points()
        .map(|p| regions.iter().any(|w| w.contains_closed(p)))
        .collect();
    Ok(complex
        .simplices(j)
        .filter(|s| s.iter().any(|&v| inside[v as usize]))
        .count())
}
