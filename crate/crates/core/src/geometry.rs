// SPDX-License-Identifier: Apache-2.0

//! Planar points and segments, with the intersection test used for wall
//! occlusion.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }

    /// Angle of the vector `self -> other`, not normalized.
    pub fn angle_to(self, other: Point2) -> f64 {
        (other.y - self.y).atan2(other.x - self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point2,
    pub b: Point2,
}

impl Segment {
    pub const fn new(a: Point2, b: Point2) -> Self {
        Segment { a, b }
    }

    pub fn from_coords(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Segment::new(Point2::new(x1, y1), Point2::new(x2, y2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Orientation {
    Collinear,
    Clockwise,
    CounterClockwise,
}

fn orientation(p: Point2, q: Point2, r: Point2) -> Orientation {
    let cross = (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x);
    if cross > 0.0 {
        Orientation::CounterClockwise
    } else if cross < 0.0 {
        Orientation::Clockwise
    } else {
        Orientation::Collinear
    }
}

/// `q` lies within the bounding box of `p`-`r`; only meaningful when the
/// three points are collinear.
fn on_segment(p: Point2, q: Point2, r: Point2) -> bool {
    q.x <= p.x.max(r.x) && q.x >= p.x.min(r.x) && q.y <= p.y.max(r.y) && q.y >= p.y.min(r.y)
}

/// True iff the closed segments share at least one point. Touching endpoints
/// and collinear overlap both count.
pub fn segment_intersects(s1: &Segment, s2: &Segment) -> bool {
    let o1 = orientation(s1.a, s1.b, s2.a);
    let o2 = orientation(s1.a, s1.b, s2.b);
    let o3 = orientation(s2.a, s2.b, s1.a);
    let o4 = orientation(s2.a, s2.b, s1.b);

    if o1 != o2 && o3 != o4 {
        return true;
    }
    (o1 == Orientation::Collinear && on_segment(s1.a, s2.a, s1.b))
        || (o2 == Orientation::Collinear && on_segment(s1.a, s2.b, s1.b))
        || (o3 == Orientation::Collinear && on_segment(s2.a, s1.a, s2.b))
        || (o4 == Orientation::Collinear && on_segment(s2.a, s1.b, s2.b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(x1: f64, y1: f64, x2: f64, y2: f64) -> Segment {
        Segment::from_coords(x1, y1, x2, y2)
    }

    // Dense sampling oracle for axis-aligned collinear segments on y = 0.
    fn sampled_overlap(s1: &Segment, s2: &Segment) -> bool {
        let steps = 10_000;
        (0..=steps).any(|i| {
            let t = i as f64 / steps as f64;
            let x = s1.a.x + t * (s1.b.x - s1.a.x);
            x >= s2.a.x.min(s2.b.x) && x <= s2.a.x.max(s2.b.x)
        })
    }

    #[test]
    fn perpendicular_crossing() {
        assert!(segment_intersects(
            &seg(0.0, 0.0, 2.0, 0.0),
            &seg(1.0, -1.0, 1.0, 1.0)
        ));
    }

    #[test]
    fn parallel_disjoint() {
        assert!(!segment_intersects(
            &seg(0.0, 0.0, 1.0, 0.0),
            &seg(0.0, 1.0, 1.0, 1.0)
        ));
    }

    #[test]
    fn collinear_cases_match_sampling() {
        let base = seg(0.0, 0.0, 2.0, 0.0);
        for other in [
            seg(1.0, 0.0, 3.0, 0.0),
            seg(2.0, 0.0, 3.0, 0.0),
            seg(2.5, 0.0, 3.0, 0.0),
            seg(-1.0, 0.0, -0.1, 0.0),
            seg(0.5, 0.0, 1.5, 0.0),
        ] {
            assert_eq!(
                segment_intersects(&base, &other),
                sampled_overlap(&base, &other),
                "{other:?}"
            );
        }
        assert!(segment_intersects(&base, &seg(1.0, 0.0, 3.0, 0.0)));
    }

    #[test]
    fn touching_endpoint_counts() {
        assert!(segment_intersects(
            &seg(0.0, 0.0, 1.0, 1.0),
            &seg(1.0, 1.0, 2.0, 0.0)
        ));
        assert!(segment_intersects(
            &seg(0.0, 0.0, 2.0, 0.0),
            &seg(1.0, 0.0, 1.0, 5.0)
        ));
    }

    #[test]
    fn near_miss() {
        assert!(!segment_intersects(
            &seg(0.0, 0.0, 10.0, 0.0),
            &seg(5.0, 0.5, 5.0, 2.0)
        ));
        assert!(!segment_intersects(
            &seg(0.0, 0.0, 1.0, 1.0),
            &seg(2.0, 2.0, 3.0, 3.0)
        ));
    }

    #[test]
    fn symmetric() {
        let a = seg(0.0, 0.0, 4.0, 3.0);
        let b = seg(0.0, 3.0, 4.0, 0.0);
        assert_eq!(segment_intersects(&a, &b), segment_intersects(&b, &a));
    }
}
