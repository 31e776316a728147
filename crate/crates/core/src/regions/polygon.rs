use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Feasibility slack for vertices against halfspaces.
pub const VERTEX_TOL: f64 = 1e-9;
/// Parallel halfspace pairs are skipped below this determinant.
pub const DET_TOL: f64 = 1e-12;

/// Polygon of achievable `(R1, R2)` pairs: `α R1 + β R2 <= γ` for each halfspace, plus its
/// extreme points in counterclockwise order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRegion2D {
    pub halfspaces: Vec<[f64; 3]>,
    pub vertices: Vec<[f64; 2]>,
    #[serde(default)]
    pub meta: BTreeMap<String, serde_json::Value>,
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex hull by monotone chain, counterclockwise from the lexicographically smallest point,
/// without collinear points.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.iter().filter(|p| p[0].is_finite() && p[1].is_finite()).cloned().collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup_by(|a, b| (a[0] - b[0]).abs() <= DET_TOL && (a[1] - b[1]).abs() <= DET_TOL);
    if pts.len() <= 2 {
        return pts;
    }
    let scale = pts.iter().fold(1.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()));
    let eps = DET_TOL * scale * scale;
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= eps {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn satisfies(h: &[f64; 3], p: [f64; 2], tol: f64) -> bool {
    h[0] * p[0] + h[1] * p[1] <= h[2] + tol * (1.0 + h[2].abs())
}

impl RateRegion2D {
    /// Region cut out by `hs` and `R1, R2 >= 0`.
    pub fn from_halfspaces(mut hs: Vec<[f64; 3]>) -> Self {
        for nonneg in [[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]] {
            if !hs.contains(&nonneg) {
                hs.push(nonneg);
            }
        }
        let mut pts = Vec::new();
        for i in 0..hs.len() {
            for j in i + 1..hs.len() {
                let [a1, b1, c1] = hs[i];
                let [a2, b2, c2] = hs[j];
                let det = a1 * b2 - a2 * b1;
                if det.abs() <= DET_TOL {
                    continue;
                }
                let p = [(c1 * b2 - c2 * b1) / det, (a1 * c2 - a2 * c1) / det];
                if hs.iter().all(|h| satisfies(h, p, VERTEX_TOL)) {
                    pts.push(p);
                }
            }
        }
        RateRegion2D { halfspaces: hs, vertices: convex_hull(&pts), meta: BTreeMap::new() }
    }

    /// Convex hull of `points` (assumed in the nonnegative quadrant) with halfspaces from its edges.
    pub fn from_points(points: &[[f64; 2]]) -> Self {
        let v = convex_hull(points);
        let mut hs = Vec::new();
        match v.len() {
            0 => return Self::empty(),
            1 => {
                let p = v[0];
                hs.extend([[1.0, 0.0, p[0]], [0.0, 1.0, p[1]], [-1.0, 0.0, -p[0]], [0.0, -1.0, -p[1]]]);
            }
            2 => {
                let (p, q) = (v[0], v[1]);
                let d = [q[0] - p[0], q[1] - p[1]];
                let n = [d[1], -d[0]];
                let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
                hs.push([n[0], n[1], dot(n, p)]);
                hs.push([-n[0], -n[1], -dot(n, p)]);
                hs.push([d[0], d[1], dot(d, q)]);
                hs.push([-d[0], -d[1], -dot(d, p)]);
            }
            k => {
                for i in 0..k {
                    let (p, q) = (v[i], v[(i + 1) % k]);
                    let (a, b) = (q[1] - p[1], p[0] - q[0]);
                    hs.push([a, b, a * p[0] + b * p[1]]);
                }
            }
        }
        for h in &mut hs {
            let norm = h[0].abs().max(h[1].abs());
            if norm > 0.0 {
                *h = [h[0] / norm, h[1] / norm, h[2] / norm];
            }
        }
        RateRegion2D { halfspaces: hs, vertices: v, meta: BTreeMap::new() }
    }

    /// Region with no points, flagged `empty`.
    pub fn empty() -> Self {
        let mut meta = BTreeMap::new();
        meta.insert("empty".to_string(), serde_json::Value::Bool(true));
        RateRegion2D { halfspaces: vec![[0.0, 0.0, -1.0]], vertices: Vec::new(), meta }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.meta.insert(key.to_string(), value.into());
        self
    }

    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        !self.is_empty() && self.halfspaces.iter().all(|h| satisfies(h, p, tol))
    }

    /// Largest value of `w1 R1 + w2 R2` over the region.
    pub fn support(&self, w: [f64; 2]) -> f64 {
        self.vertices.iter().map(|v| w[0] * v[0] + w[1] * v[1]).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_r1(&self) -> f64 {
        self.support([1.0, 0.0])
    }

    pub fn max_r2(&self) -> f64 {
        self.support([0.0, 1.0])
    }

    pub fn max_sum_rate(&self) -> f64 {
        self.support([1.0, 1.0])
    }

    /// Every vertex of `self` lies in `other`.
    pub fn is_subset_of(&self, other: &RateRegion2D, tol: f64) -> bool {
        self.vertices.iter().all(|&v| other.contains(v, tol))
    }

    /// Same vertex list within `tol`.
    pub fn same_vertices(&self, other: &RateRegion2D, tol: f64) -> bool {
        self.vertices.len() == other.vertices.len()
            && self.vertices.iter().zip(&other.vertices).all(|(a, b)| (a[0] - b[0]).abs() <= tol && (a[1] - b[1]).abs() <= tol)
    }
}

/// Weighted Minkowski sum `Σ_j w_j · region_j`.
pub fn minkowski_combination(regions: &[RateRegion2D], weights: &[f64]) -> RateRegion2D {
    let mut acc: Vec<[f64; 2]> = vec![[0.0, 0.0]];
    for (r, &w) in regions.iter().zip(weights) {
        if r.is_empty() {
            return RateRegion2D::empty();
        }
        let mut next = Vec::with_capacity(acc.len() * r.vertices.len());
        for a in &acc {
            for v in &r.vertices {
                next.push([a[0] + w * v[0], a[1] + w * v[1]]);
            }
        }
        acc = convex_hull(&next);
    }
    RateRegion2D::from_points(&acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_hull_drops_interior() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.2, 0.2], [0.5, 0.0], [0.1, 0.3]];
        assert_eq!(convex_hull(&pts), vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn pentagon_from_halfspaces() {
        let r = RateRegion2D::from_halfspaces(vec![[1.0, 0.0, 2.0], [0.0, 1.0, 2.0], [1.0, 1.0, 3.0]]);
        assert_eq!(r.vertices, vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 2.0], [0.0, 2.0]]);
        assert!(r.contains([1.5, 1.5], 0.0));
        assert!(!r.contains([1.6, 1.5], 1e-9));
    }

    #[test]
    fn degenerate_regions() {
        let r = RateRegion2D::from_halfspaces(vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        assert_eq!(r.vertices, vec![[0.0, 0.0]]);
        let r = RateRegion2D::from_halfspaces(vec![[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]);
        assert_eq!(r.vertices, vec![[0.0, 0.0], [1.0, 0.0]]);
        let p = RateRegion2D::from_points(&[[0.0, 0.0], [1.0, 0.0]]);
        assert!(p.contains([0.5, 0.0], 1e-12));
        assert!(!p.contains([0.5, 0.1], 1e-12));
        assert!(!p.contains([1.5, 0.0], 1e-12));
        let p = RateRegion2D::from_points(&[[0.0, 0.0]]);
        assert!(p.contains([0.0, 0.0], 0.0));
        assert!(!p.contains([0.1, 0.0], 1e-12));
    }

    #[test]
    fn points_roundtrip() {
        let r = RateRegion2D::from_halfspaces(vec![[1.0, 0.0, 2.0], [0.0, 1.0, 2.0], [1.0, 1.0, 3.0]]);
        let p = RateRegion2D::from_points(&r.vertices);
        assert_eq!(p.vertices, r.vertices);
        for v in [[1.0, 1.0], [2.0, 1.0], [0.0, 2.0]] {
            assert!(p.contains(v, 1e-12));
        }
        assert!(!p.contains([1.6, 1.5], 1e-9));
    }

    #[test]
    fn minkowski_midpoint() {
        let a = RateRegion2D::from_points(&[[0.0, 0.0], [1.0, 0.0]]);
        let b = RateRegion2D::from_points(&[[0.0, 0.0], [0.0, 1.0]]);
        let m = minkowski_combination(&[a, b], &[0.5, 0.5]);
        assert!(m.contains([0.5, 0.5], 1e-12));
        assert_eq!(m.vertices.len(), 4);
    }
}
