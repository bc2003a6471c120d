//! Smallest enclosing ball of a small point set in `R^d`.
//!
//! Welzl's recursion with the move-to-front heuristic. The ball spanned by a
//! support set is the circumball within the support's affine hull, found by
//! solving the Gram system of the support directions.

use crate::error::{invalid, Result};

/// Relative slack used when testing whether a point lies in a ball.
const CONTAINS_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn contains(&self, p: &[f64]) -> bool {
        if self.radius < 0.0 {
            return false;
        }
        let d2 = sq_dist(&self.center, p);
        let r2 = self.radius * self.radius;
        d2 <= r2 + CONTAINS_EPS * (r2 + 1.0)
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Radius of the smallest ball containing every point.
pub fn min_enclosing_ball_radius(points: &[&[f64]]) -> Result<f64> {
    Ok(min_enclosing_ball(points)?.radius)
}

pub fn min_enclosing_ball(points: &[&[f64]]) -> Result<Ball> {
    let first = points
        .first()
        .ok_or_else(|| invalid("miniball of an empty point set"))?;
    let dim = first.len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(invalid("miniball points must share one dimension"));
    }
    let mut order: Vec<&[f64]> = points.to_vec();
    let mut support: Vec<&[f64]> = Vec::with_capacity(dim + 1);
    let n = order.len();
    Ok(mtf(&mut order, n, &mut support, dim))
}

fn mtf<'a>(pts: &mut [&'a [f64]], end: usize, support: &mut Vec<&'a [f64]>, dim: usize) -> Ball {
    let mut ball = ball_from_support(support, dim);
    if support.len() == dim + 1 {
        return ball;
    }
    for i in 0..end {
        if ball.contains(pts[i]) {
            continue;
        }
        support.push(pts[i]);
        ball = mtf(pts, i, support, dim);
        support.pop();
        pts[..=i].rotate_right(1);
    }
    ball
}

/// Smallest ball with every support point on its boundary.
pub(crate) fn ball_from_support(support: &[&[f64]], dim: usize) -> Ball {
    match support {
        [] => Ball {
            center: vec![0.0; dim],
            radius: -1.0,
        },
        [p] => Ball {
            center: p.to_vec(),
            radius: 0.0,
        },
        [origin, rest @ ..] => match circumcenter(origin, rest) {
            Some(center) => {
                let radius = support.iter().map(|p| sq_dist(&center, p)).fold(0.0, f64::max).sqrt();
                Ball { center, radius }
            }
            // affinely dependent support: fall back to the widest pair
            None => widest_pair_ball(support),
        },
    }
}

fn widest_pair_ball(points: &[&[f64]]) -> Ball {
    let mut best = (0, 0, -1.0);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = sq_dist(points[i], points[j]);
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    let (a, b) = (points[best.0], points[best.1]);
    Ball {
        center: a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect(),
        radius: 0.5 * best.2.max(0.0).sqrt(),
    }
}

/// Center `origin + Σ λ_i v_i` equidistant from `origin` and every `others[i]`,
/// where `v_i = others[i] - origin`. `None` if the directions are dependent.
fn circumcenter(origin: &[f64], others: &[&[f64]]) -> Option<Vec<f64>> {
    let m = others.len();
    let dirs: Vec<Vec<f64>> = others
        .iter()
        .map(|p| p.iter().zip(origin).map(|(a, b)| a - b).collect())
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    // augmented Gram system [2 V V^T | |v_i|^2]
    let mut a = vec![vec![0.0; m + 1]; m];
    let mut scale: f64 = 0.0;
    for i in 0..m {
        for j in 0..m {
            a[i][j] = 2.0 * dot(&dirs[i], &dirs[j]);
        }
        a[i][m] = dot(&dirs[i], &dirs[i]);
        scale = scale.max(a[i][m]);
    }
    let lambda = solve(a, scale * 1e-12)?;
    let mut center = origin.to_vec();
    for (l, v) in lambda.iter().zip(&dirs) {
        for (c, x) in center.iter_mut().zip(v) {
            *c += l * x;
        }
    }
    Some(center)
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve(mut a: Vec<Vec<f64>>, pivot_tol: f64) -> Option<Vec<f64>> {
    let m = a.len();
    for col in 0..m {
        let pivot = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= pivot_tol {
            return None;
        }
        a.swap(col, pivot);
        let (top, rest) = a.split_at_mut(col + 1);
        let pivot_row = &top[col];
        for row in rest.iter_mut() {
            let f = row[col] / pivot_row[col];
            if f != 0.0 {
                for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= f * p;
                }
            }
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let s: f64 = (row + 1..m).map(|k| a[row][k] * x[k]).sum();
        x[row] = (a[row][m] - s) / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn radius(points: &[Vec<f64>]) -> f64 {
        let refs: Vec<&[f64]> = points.iter().map(|p| p.as_slice()).collect();
        min_enclosing_ball_radius(&refs).unwrap()
    }

    #[test]
    fn two_points() {
        assert!((radius(&[vec![0.0, 0.0], vec![1.0, 0.0]]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn equilateral_triangle() {
        let h = 3f64.sqrt() / 2.0;
        let r = radius(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, h]]);
        assert!((r - 1.0 / 3f64.sqrt()).abs() < 1e-12, "{r}");
    }

    #[test]
    fn collinear_points() {
        let r = radius(&[vec![0.0, 0.0], vec![0.3, 0.0], vec![1.0, 0.0]]);
        assert!((r - 0.5).abs() < 1e-12);
        let r = radius(&[vec![0.3, 0.0], vec![1.0, 0.0], vec![0.0, 0.0]]);
        assert!((r - 0.5).abs() < 1e-12);
    }

    #[test]
    fn obtuse_triangle_uses_longest_edge() {
        let r = radius(&[vec![0.0, 0.0], vec![2.0, 0.0], vec![1.0, 0.1]]);
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_point_and_empty() {
        assert_eq!(radius(&[vec![3.0, 4.0, 5.0]]), 0.0);
        assert!(min_enclosing_ball_radius(&[]).is_err());
    }

    #[test]
    fn regular_tetrahedron() {
        let pts = [
            vec![1.0, 1.0, 1.0],
            vec![1.0, -1.0, -1.0],
            vec![-1.0, 1.0, -1.0],
            vec![-1.0, -1.0, 1.0],
        ];
        assert!((radius(&pts) - 3f64.sqrt()).abs() < 1e-12);
    }
}
