//! Area, perimeter, equivalent diameter and Feret (caliper) diameters of a
//! closed polyline.

use nalgebra::{Point2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceMetrics {
    /// Absolute enclosed area.
    pub area: f64,
    /// Positive when the loop runs counter-clockwise in the plane frame,
    /// i.e. around material; holes are negative.
    pub signed_area: f64,
    pub perimeter: f64,
    /// Diameter of the circle with the same area, `2 sqrt(area / pi)`.
    pub equivalent_diameter: f64,
    pub max_feret: f64,
    pub min_feret: f64,
    pub centroid: Point2<f64>,
    pub self_intersecting: bool,
}

fn cross(o: &Point2<f64>, a: &Point2<f64>, b: &Point2<f64>) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Metrics of the closed polyline `points` (closure implicit).
pub fn compute_metrics(points: &[Point2<f64>]) -> Result<SliceMetrics> {
    if points.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "a loop needs at least 3 points, got {}",
            points.len()
        )));
    }
    let n = points.len();
    let mut twice_area = 0.0;
    let mut perimeter = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    // shift to the first point to limit cancellation far from the origin
    let o = points[0];
    for i in 0..n {
        let (p, q) = (points[i], points[(i + 1) % n]);
        let (a, b) = (p - o, q - o);
        let w = a.x * b.y - b.x * a.y;
        twice_area += w;
        cx += (a.x + b.x) * w;
        cy += (a.y + b.y) * w;
        perimeter += (q - p).norm();
    }
    let area = twice_area.abs() / 2.0;
    let centroid = if twice_area.abs() > 0.0 {
        o + Vector2::new(cx, cy) / (3.0 * twice_area)
    } else {
        let sum = points.iter().fold(Vector2::zeros(), |s, p| s + p.coords);
        Point2::from(sum / n as f64)
    };
    let hull = convex_hull(points);
    let (min_feret, max_feret) = feret_diameters(&hull);
    Ok(SliceMetrics {
        area,
        signed_area: twice_area / 2.0,
        perimeter,
        equivalent_diameter: 2.0 * (area / std::f64::consts::PI).sqrt(),
        max_feret,
        min_feret,
        centroid,
        self_intersecting: is_self_intersecting(points),
    })
}

/// Convex hull in counter-clockwise order without collinear points
/// (monotone chain).
pub fn convex_hull(points: &[Point2<f64>]) -> Vec<Point2<f64>> {
    let mut pts: Vec<Point2<f64>> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point2<f64>> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2<f64>>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for p in iter {
            while hull.len() >= start + 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    hull
}

/// `(min, max)` caliper widths of a convex polygon given counter-clockwise,
/// by rotating calipers. Degenerate hulls have zero minimum width.
pub fn feret_diameters(hull: &[Point2<f64>]) -> (f64, f64) {
    let h = hull.len();
    match h {
        0 | 1 => return (0.0, 0.0),
        2 => return (0.0, (hull[1] - hull[0]).norm()),
        _ => {}
    }
    let mut min_width = f64::INFINITY;
    let mut max_d2: f64 = 0.0;
    let mut j = 1;
    for i in 0..h {
        let (a, b) = (hull[i], hull[(i + 1) % h]);
        let edge = b - a;
        let len = edge.norm();
        // advance the antipodal pointer while the area (height) grows
        while cross(&a, &b, &hull[(j + 1) % h]) > cross(&a, &b, &hull[j]) {
            j = (j + 1) % h;
        }
        min_width = min_width.min(cross(&a, &b, &hull[j]) / len);
        // the antipodal vertex and its successor are candidate far points
        for p in [hull[j], hull[(j + 1) % h]] {
            max_d2 = max_d2.max((p - a).norm_squared()).max((p - b).norm_squared());
        }
    }
    (min_width, max_d2.sqrt())
}

fn segments_intersect(p1: &Point2<f64>, p2: &Point2<f64>, q1: &Point2<f64>, q2: &Point2<f64>) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: &Point2<f64>, b: &Point2<f64>, p: &Point2<f64>| {
        p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
    };
    (d1 == 0.0 && on(q1, q2, p1))
        || (d2 == 0.0 && on(q1, q2, p2))
        || (d3 == 0.0 && on(p1, p2, q1))
        || (d4 == 0.0 && on(p1, p2, q2))
}

/// Whether two non-adjacent edges of the closed polyline touch or cross.
/// Sweep over edges sorted by their minimum x.
fn is_self_intersecting(points: &[Point2<f64>]) -> bool {
    let n = points.len();
    if n < 4 {
        return false;
    }
    let mut edges: Vec<(f64, f64, usize)> = (0..n)
        .map(|i| {
            let (a, b) = (points[i], points[(i + 1) % n]);
            (a.x.min(b.x), a.x.max(b.x), i)
        })
        .collect();
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (k, &(_, max_x, i)) in edges.iter().enumerate() {
        for &(min_x, _, j) in &edges[k + 1..] {
            if min_x > max_x {
                break;
            }
            let adjacent = (i + 1) % n == j || (j + 1) % n == i;
            if adjacent {
                continue;
            }
            if segments_intersect(&points[i], &points[(i + 1) % n], &points[j], &points[(j + 1) % n]) {
                return true;
            }
        }
    }
    false
}
