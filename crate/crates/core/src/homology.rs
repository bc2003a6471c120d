//! Betti numbers over GF(2).
//!
//! `β_k = S_k − rank ∂_k − rank ∂_{k+1}`, where ranks come from the standard
//! column reduction with lowest-entry pivots on sparse columns. Over GF(2) a
//! column is just its sorted support and column addition is a symmetric
//! difference.

use serde::{Deserialize, Serialize};

use crate::cech::{admits, Metric, NeighborGrid, SimplicialComplex};
use crate::error::{invalid, Error, Result};
use crate::pointproc::PointCloud;

/// Boundary map from `j`-simplices to `(j-1)`-simplices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryMatrix {
    pub rows: usize,
    pub cols: usize,
    /// Sorted row indices of the non-zero entries of each column.
    pub columns: Vec<Vec<u32>>,
}

impl BoundaryMatrix {
    pub fn from_columns(rows: usize, columns: Vec<Vec<u32>>) -> Result<Self> {
        let mut columns = columns;
        for c in &mut columns {
            c.sort_unstable();
            // duplicated entries cancel in GF(2)
            let mut reduced: Vec<u32> = Vec::with_capacity(c.len());
            for &v in c.iter() {
                if reduced.last() == Some(&v) {
                    reduced.pop();
                } else {
                    reduced.push(v);
                }
            }
            if reduced.last().is_some_and(|&v| v as usize >= rows) {
                return Err(invalid(format!("row index out of range 0..{rows}")));
            }
            *c = reduced;
        }
        Ok(Self {
            rows,
            cols: columns.len(),
            columns,
        })
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            columns: vec![Vec::new(); cols],
        }
    }
}

/// Builds `∂_j` of a complex.
pub fn boundary_matrix(complex: &SimplicialComplex, j: usize) -> Result<BoundaryMatrix> {
    if j == 0 || j > complex.max_dim() {
        return Err(invalid(format!("boundary index {j} outside 1..={}", complex.max_dim())));
    }
    let mut facet = Vec::with_capacity(j);
    let columns = complex
        .simplices(j)
        .map(|s| {
            let mut col: Vec<u32> = (0..=j)
                .map(|skip| {
                    facet.clear();
                    facet.extend(s.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, v)| *v));
                    complex.index_of(&facet).expect("complex is closed under faces") as u32
                })
                .collect();
            col.sort_unstable();
            col
        })
        .collect();
    Ok(BoundaryMatrix {
        rows: complex.simplex_count(j - 1),
        cols: complex.simplex_count(j),
        columns,
    })
}

/// Symmetric difference of two sorted sets, written into `out`.
fn xor_into(a: &[u32], b: &[u32], out: &mut Vec<u32>) {
    out.clear();
    let (mut i, mut k) = (0, 0);
    while i < a.len() && k < b.len() {
        match a[i].cmp(&b[k]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[k]);
                k += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                k += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[k..]);
}

/// Rank over GF(2) by left-to-right column reduction.
pub fn rank_gf2(matrix: &BoundaryMatrix) -> usize {
    // pivot_of[row] = reduced column whose lowest entry is `row`
    let mut pivot_of: Vec<Option<u32>> = vec![None; matrix.rows];
    let mut reduced: Vec<Vec<u32>> = Vec::with_capacity(matrix.cols);
    let mut scratch = Vec::new();
    let mut rank = 0;
    for column in &matrix.columns {
        let mut col = column.clone();
        while let Some(&low) = col.last() {
            match pivot_of[low as usize] {
                Some(p) => {
                    xor_into(&col, &reduced[p as usize], &mut scratch);
                    std::mem::swap(&mut col, &mut scratch);
                }
                None => {
                    pivot_of[low as usize] = Some(reduced.len() as u32);
                    rank += 1;
                    break;
                }
            }
        }
        reduced.push(col);
    }
    rank
}

/// Betti numbers `β_0..=β_max_k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BettiVector {
    pub values: Vec<usize>,
}

impl BettiVector {
    pub fn max_k(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, k: usize) -> usize {
        self.values.get(k).copied().unwrap_or(0)
    }

    /// `Σ_k (-1)^k β_k`.
    pub fn euler_characteristic(&self) -> i64 {
        self.values
            .iter()
            .enumerate()
            .map(|(k, &b)| if k % 2 == 0 { b as i64 } else { -(b as i64) })
            .sum()
    }
}

impl std::fmt::Display for BettiVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.values.iter().map(|b| b.to_string()).collect();
        f.write_str(&parts.join(" "))
    }
}

/// `β_0..=β_max_k`. The complex must contain dimension `max_k + 1`, since
/// leaving out `∂_{max_k+1}` would overstate `β_max_k`.
pub fn betti_numbers(complex: &SimplicialComplex, max_k: usize) -> Result<BettiVector> {
    if complex.max_dim() < max_k + 1 {
        return Err(Error::InsufficientDimension {
            max_dim: complex.max_dim(),
            k: max_k,
        });
    }
    // ranks[j] = rank ∂_j, with ∂_0 = 0
    let mut ranks = vec![0usize; max_k + 2];
    for (j, rank) in ranks.iter_mut().enumerate().skip(1) {
        if complex.simplex_count(j) > 0 {
            *rank = rank_gf2(&boundary_matrix(complex, j)?);
        }
    }
    let values = (0..=max_k)
        .map(|k| complex.simplex_count(k) - ranks[k] - ranks[k + 1])
        .collect();
    Ok(BettiVector { values })
}

/// Betti number `β_k` alone.
pub fn betti(complex: &SimplicialComplex, k: usize) -> Result<usize> {
    if complex.max_dim() < k + 1 {
        return Err(Error::InsufficientDimension {
            max_dim: complex.max_dim(),
            k,
        });
    }
    let rank = |j: usize| -> Result<usize> {
        if j == 0 || complex.simplex_count(j) == 0 {
            return Ok(0);
        }
        Ok(rank_gf2(&boundary_matrix(complex, j)?))
    };
    Ok(complex.simplex_count(k) - rank(k)? - rank(k + 1)?)
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    components: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
            components: n,
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        self.components -= 1;
        true
    }

    pub fn components(&self) -> usize {
        self.components
    }
}

/// Components of the graph joining points at distance `≤ r`.
pub fn connected_components(cloud: &PointCloud, r: f64) -> Result<usize> {
    connected_components_in(cloud, r, &Metric::Euclidean)
}

pub fn connected_components_in(cloud: &PointCloud, r: f64, metric: &Metric) -> Result<usize> {
    let grid = NeighborGrid::new(cloud, r, metric)?;
    let mut uf = UnionFind::new(cloud.len());
    for (i, j) in grid.pairs(|i, j| admits(0.5 * metric.distance(cloud.point(i), cloud.point(j)), r)) {
        uf.union(i as usize, j as usize);
    }
    Ok(uf.components())
}

/// Euler–Poincaré: `Σ (-1)^j S_j == Σ (-1)^k β_k`. Meaningful only when the
/// complex has no simplices above `max_dim` and `betti` covers every
/// dimension of the complex.
pub fn euler_check(complex: &SimplicialComplex, betti: &BettiVector) -> bool {
    complex.euler_characteristic() == betti.euler_characteristic()
}

/// Number of `j`-simplices of `big` that are missing from `small`.
pub fn count_difference(small: &SimplicialComplex, big: &SimplicialComplex, j: usize) -> usize {
    big.simplices(j).filter(|s| !small.contains(s)).count()
}

/// Checks `small ⊆ big` simplex by simplex.
pub fn is_subcomplex(small: &SimplicialComplex, big: &SimplicialComplex) -> bool {
    small.vertex_count() <= big.vertex_count()
        && (0..=small.max_dim()).all(|j| small.simplices(j).all(|s| big.contains(s)))
}

/// For `k1 ⊆ k2`: `|β_k(k1) − β_k(k2)| ≤ #(k-simplices) + #((k+1)-simplices)`
/// of `k2 \ k1`.
pub fn betti_diff_bound_check(k1: &SimplicialComplex, k2: &SimplicialComplex, k: usize) -> Result<bool> {
    if k == 0 {
        return Err(invalid("the Betti difference bound applies to k >= 1"));
    }
    if !is_subcomplex(k1, k2) {
        return Err(Error::NotNested("first complex is not contained in the second".into()));
    }
    let b1 = betti(k1, k)? as i64;
    let b2 = betti(k2, k)? as i64;
    let bound = count_difference(k1, k2, k) + count_difference(k1, k2, k + 1);
    Ok((b1 - b2).unsigned_abs() as usize <= bound)
}
