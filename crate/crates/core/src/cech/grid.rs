//! Spatial hashing for radius-`r` neighbor search, on `R^d` or a flat torus.

use std::collections::HashMap;

use super::Metric;
use crate::error::{invalid, Result};
use crate::pointproc::PointCloud;

/// Buckets points into cells at least `r` wide so that every pair within
/// distance `r` sits in adjacent cells (the `3^d` neighborhood).
#[derive(Debug, Clone)]
pub struct NeighborGrid {
    cell_width: Vec<f64>,
    origin: Vec<f64>,
    /// Cells per axis when the domain wraps around.
    wrap: Option<Vec<i64>>,
    buckets: HashMap<Vec<i64>, Vec<u32>>,
}

impl NeighborGrid {
    pub fn new(cloud: &PointCloud, r: f64, metric: &Metric) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(invalid(format!("radius must be positive, got {r}")));
        }
        let dim = cloud.dim();
        let (cell_width, origin, wrap) = match metric {
            Metric::Euclidean => (vec![r; dim], vec![0.0; dim], None),
            Metric::Torus(window) => {
                if window.dim() != dim {
                    return Err(invalid("torus window dimension differs from the cloud"));
                }
                let mut widths = Vec::with_capacity(dim);
                let mut counts = Vec::with_capacity(dim);
                for axis in 0..dim {
                    let side = window.side(axis);
                    let n = (side / r).floor() as i64;
                    if n < 3 {
                        return Err(invalid(format!(
                            "torus side {side} must exceed 3r = {} for unambiguous wrapping",
                            3.0 * r
                        )));
                    }
                    widths.push(side / n as f64);
                    counts.push(n);
                }
                (widths, window.lower().to_vec(), Some(counts))
            }
        };
        let mut grid = Self {
            cell_width,
            origin,
            wrap,
            buckets: HashMap::new(),
        };
        for (i, p) in cloud.points().enumerate() {
            let key = grid.cell_of(p);
            grid.buckets.entry(key).or_default().push(i as u32);
        }
        Ok(grid)
    }

    fn cell_of(&self, p: &[f64]) -> Vec<i64> {
        p.iter()
            .enumerate()
            .map(|(axis, &x)| {
                let c = ((x - self.origin[axis]) / self.cell_width[axis]).floor() as i64;
                match &self.wrap {
                    Some(n) => c.rem_euclid(n[axis]),
                    None => c,
                }
            })
            .collect()
    }

    /// All pairs `(i, j)`, `i < j`, accepted by `is_edge`.
    pub fn pairs(&self, mut is_edge: impl FnMut(usize, usize) -> bool) -> Vec<(u32, u32)> {
        let dim = self.cell_width.len();
        let offsets = neighborhood_offsets(dim);
        let mut out = Vec::new();
        let mut key = vec![0i64; dim];
        for (cell, members) in &self.buckets {
            for off in &offsets {
                for axis in 0..dim {
                    let c = cell[axis] + off[axis];
                    key[axis] = match &self.wrap {
                        Some(n) => c.rem_euclid(n[axis]),
                        None => c,
                    };
                }
                let Some(others) = self.buckets.get(&key) else {
                    continue;
                };
                for &i in members {
                    for &j in others {
                        if i < j && is_edge(i as usize, j as usize) {
                            out.push((i, j));
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

fn neighborhood_offsets(dim: usize) -> Vec<Vec<i64>> {
    let mut offsets = vec![Vec::with_capacity(dim)];
    for _ in 0..dim {
        offsets = offsets
            .into_iter()
            .flat_map(|o| {
                (-1..=1).map(move |d| {
                    let mut next = o.clone();
                    next.push(d);
                    next
                })
            })
            .collect();
    }
    offsets
}
