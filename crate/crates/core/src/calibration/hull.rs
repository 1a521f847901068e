//! Convex hull and north-west frontier extraction in the input–yield plane.

use serde::{Deserialize, Serialize};

use super::CalibrationError;

/// One observation: input quantity per hectare and yield in t/ha.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Twice the signed area of `o, a, b`; positive for a counter-clockwise turn.
pub fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// `p` lies on the closed segment `a..b`.
pub fn on_segment(p: Point, a: Point, b: Point) -> bool {
    cross(a, b, p) == 0.0 && p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn lexicographic(a: &Point, b: &Point) -> std::cmp::Ordering {
    a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y))
}

/// Sorted, exact-duplicate-free copy. Rejects non-finite coordinates.
pub fn distinct_points(points: &[Point]) -> Result<Vec<Point>, CalibrationError> {
    if let Some(p) = points.iter().find(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(CalibrationError::InvalidObservation(format!("non-finite point ({}, {})", p.x, p.y)));
    }
    let mut pts = points.to_vec();
    pts.sort_by(lexicographic);
    pts.dedup();
    Ok(pts)
}

/// Convex hull by Andrew's monotone chain.
///
/// Vertices come back counter-clockwise starting from the lowest-x (then
/// lowest-y) point, without collinear boundary points. Fully collinear input
/// returns the two extreme points.
pub fn convex_hull(points: &[Point]) -> Result<Vec<Point>, CalibrationError> {
    let pts = distinct_points(points)?;
    if pts.len() < 3 {
        return Err(CalibrationError::Degenerate(format!(
            "convex hull needs at least 3 distinct points, got {}",
            pts.len()
        )));
    }

    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    Ok(hull)
}

/// Points (from `distinct`) lying on the boundary of the hull polygon.
fn boundary_points(distinct: &[Point], hull: &[Point]) -> Vec<Point> {
    if hull.len() == 2 {
        return distinct.iter().copied().filter(|&p| on_segment(p, hull[0], hull[1])).collect();
    }
    distinct
        .iter()
        .copied()
        .filter(|&p| (0..hull.len()).any(|i| on_segment(p, hull[i], hull[(i + 1) % hull.len()])))
        .collect()
}

/// Pareto-undominated subset for (minimize x, maximize y), sorted by x.
///
/// `q` dominates `p` when `q.x <= p.x` and `q.y >= p.y` with one inequality strict.
pub fn pareto_undominated(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    // x ascending, y descending: a point survives iff it beats every earlier y
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(b.y.total_cmp(&a.y)));
    pts.dedup();
    let mut best = f64::NEG_INFINITY;
    let mut out = Vec::new();
    for p in pts {
        if p.y > best {
            out.push(p);
            best = p.y;
        }
    }
    out
}

/// North-west portion of the convex hull: boundary points that no other
/// observation dominates, ordered by increasing x.
pub fn nw_frontier(points: &[Point]) -> Result<Vec<Point>, CalibrationError> {
    let hull = convex_hull(points)?;
    let distinct = distinct_points(points)?;
    let undominated = pareto_undominated(&distinct);
    let boundary = boundary_points(&distinct, &hull);
    Ok(undominated.into_iter().filter(|p| boundary.contains(p)).collect())
}

/// Frontier accumulated over one or more peeling rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeeledFrontier {
    /// Accumulated frontier points, sorted by x then y.
    pub points: Vec<Point>,
    pub rounds: usize,
}

/// Default peeling threshold: three free curve parameters plus one.
pub const DEFAULT_MIN_FRONTIER: usize = 4;

/// Repeatedly extracts the north-west frontier, removing its points from the
/// working set, until at least `min_count` points have been accumulated.
pub fn peel_frontier(points: &[Point], min_count: usize) -> Result<PeeledFrontier, CalibrationError> {
    let mut working = distinct_points(points)?;
    if working.len() < min_count {
        return Err(CalibrationError::InsufficientData { needed: min_count, available: working.len() });
    }
    let mut acc: Vec<Point> = Vec::new();
    let mut rounds = 0;
    while acc.len() < min_count && !working.is_empty() {
        let round = if working.len() >= 3 { nw_frontier(&working)? } else { pareto_undominated(&working) };
        rounds += 1;
        working.retain(|p| !round.contains(p));
        acc.extend(round);
    }
    acc.sort_by(lexicographic);
    Ok(PeeledFrontier { points: acc, rounds })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(f64, f64)]) -> Vec<Point> {
        v.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    #[test]
    fn square_with_center() {
        let hull = convex_hull(&pts(&[(0., 0.), (1., 0.), (1., 1.), (0., 1.), (0.5, 0.5)])).unwrap();
        assert_eq!(hull, pts(&[(0., 0.), (1., 0.), (1., 1.), (0., 1.)]));
    }

    #[test]
    fn triangle() {
        let hull = convex_hull(&pts(&[(0., 0.), (2., 1.), (0., 3.)])).unwrap();
        assert_eq!(hull, pts(&[(0., 0.), (2., 1.), (0., 3.)]));
    }

    #[test]
    fn collinear_returns_endpoints() {
        let hull = convex_hull(&pts(&[(0., 0.), (1., 1.), (2., 2.), (3., 3.)])).unwrap();
        assert_eq!(hull, pts(&[(0., 0.), (3., 3.)]));
    }

    #[test]
    fn too_few_distinct_points() {
        let err = convex_hull(&pts(&[(1., 1.), (1., 1.), (1., 1.), (2., 2.)])).unwrap_err();
        assert!(matches!(err, CalibrationError::Degenerate(_)));
        assert!(convex_hull(&pts(&[(1., f64::NAN), (0., 0.), (2., 0.)])).is_err());
    }

    #[test]
    fn frontier_example() {
        let f = nw_frontier(&pts(&[(0., 1.), (1., 2.), (2., 3.), (3., 0.)])).unwrap();
        assert_eq!(f, pts(&[(0., 1.), (1., 2.), (2., 3.)]));
    }

    #[test]
    fn single_dominating_point() {
        let f = nw_frontier(&pts(&[(0., 5.), (1., 2.), (2., 3.), (3., 0.), (0.5, 1.)])).unwrap();
        assert_eq!(f, pts(&[(0., 5.)]));
    }

    #[test]
    fn concave_staircase_all_kept() {
        let p = pts(&[(0., 1.), (1., 2.5), (2., 3.2), (3., 3.5)]);
        assert_eq!(nw_frontier(&p).unwrap(), p);
    }

    #[test]
    fn peel_single_round_matches_frontier() {
        let mut p = pts(&[(0., 4.2), (10., 6.0), (20., 7.0), (40., 8.0), (80., 8.4)]);
        p.extend(pts(&[(5., 3.0), (30., 5.0), (60., 6.0)]));
        let peeled = peel_frontier(&p, 4).unwrap();
        assert_eq!(peeled.rounds, 1);
        assert_eq!(peeled.points, nw_frontier(&p).unwrap());
    }

    #[test]
    fn peel_two_rounds() {
        let p = pts(&[(0., 5.), (10., 9.), (2., 4.), (4., 6.), (6., 6.5), (8., 7.), (5., 3.), (9., 5.)]);
        let peeled = peel_frontier(&p, 4).unwrap();
        assert_eq!(peeled.rounds, 2);
        assert_eq!(peeled.points, pts(&[(0., 5.), (2., 4.), (4., 6.), (6., 6.5), (8., 7.), (10., 9.)]));
    }

    #[test]
    fn peel_needs_enough_points() {
        let p = pts(&[(0., 1.), (1., 2.), (2., 0.)]);
        assert!(matches!(peel_frontier(&p, 4), Err(CalibrationError::InsufficientData { needed: 4, available: 3 })));
    }
}
