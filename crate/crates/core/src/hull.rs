//! Integer 2D convex hulls and strict point-in-polygon tests.

pub type Point = [i64; 2];

#[inline]
fn cross(o: Point, a: Point, b: Point) -> i128 {
    (a[0] - o[0]) as i128 * (b[1] - o[1]) as i128 - (a[1] - o[1]) as i128 * (b[0] - o[0]) as i128
}

/// Convex hull in counter-clockwise order without collinear vertices (Andrew's monotone chain).
/// Sorts and deduplicates `points` in place.
pub fn convex_hull(points: &mut Vec<Point>) -> Vec<Point> {
    let mut hull = Vec::with_capacity(points.len() + 1);
    convex_hull_into(points, &mut hull);
    hull
}

/// [`convex_hull`] writing into a caller-owned buffer.
pub fn convex_hull_into(points: &mut Vec<Point>, hull: &mut Vec<Point>) {
    points.sort_unstable();
    points.dedup();
    hull.clear();
    if points.len() < 3 {
        hull.extend_from_slice(points);
        return;
    }
    for &p in points.iter() {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in points.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
}

/// Whether `p` lies strictly inside the counter-clockwise convex polygon `hull`.
/// Hulls with fewer than three vertices have no interior.
pub fn strictly_inside(hull: &[Point], p: Point) -> bool {
    if hull.len() < 3 {
        return false;
    }
    (0..hull.len()).all(|i| cross(hull[i], hull[(i + 1) % hull.len()], p) > 0)
}
