//! Planar primitives for the torus and its universal cover.
//!
//! Everything here is plain value arithmetic. Coincidence tests use the
//! absolute tolerance [`GEOM_TOL`]; a segment that only touches a rectangle
//! edge counts as inside it.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use thiserror::Error;

/// Absolute tolerance for point/edge coincidence, in track units.
pub const GEOM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate segment: endpoints coincide at ({x}, {y})")]
    Degenerate { x: f64, y: f64 },
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("empty rectangle [{x_lo}, {x_hi}] x [{y_lo}, {y_hi}]")]
    EmptyRect { x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64 },
    #[error("segment direction has no component along the {0:?} axis")]
    AxisParallel(Cone),
    #[error("slope {slope} outside cone bounds [{lo}, 0]")]
    SlopeOutOfCone { slope: f64, lo: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    /// Linear interpolation: `t = 0` gives `self`, `t = 1` gives `o`.
    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        Point2::new(self.x + t * (o.x - self.x), self.y + t * (o.y - self.y))
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Closed axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl Rect {
    pub fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Result<Self, GeometryError> {
        if !(x_lo.is_finite() && x_hi.is_finite() && y_lo.is_finite() && y_hi.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if !(x_lo < x_hi && y_lo < y_hi) {
            return Err(GeometryError::EmptyRect { x_lo, x_hi, y_lo, y_hi });
        }
        Ok(Rect { x_lo, x_hi, y_lo, y_hi })
    }

    pub fn width(&self) -> f64 {
        self.x_hi - self.x_lo
    }

    pub fn height(&self) -> f64 {
        self.y_hi - self.y_lo
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.contains_tol(p, GEOM_TOL)
    }

    pub fn contains_tol(&self, p: Point2, tol: f64) -> bool {
        p.x >= self.x_lo - tol && p.x <= self.x_hi + tol && p.y >= self.y_lo - tol && p.y <= self.y_hi + tol
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Rect {
        Rect {
            x_lo: self.x_lo + dx,
            x_hi: self.x_hi + dx,
            y_lo: self.y_lo + dy,
            y_hi: self.y_hi + dy,
        }
    }

    /// Area of the intersection with another rectangle (zero when disjoint).
    pub fn overlap_area(&self, o: &Rect) -> f64 {
        let w = self.x_hi.min(o.x_hi) - self.x_lo.max(o.x_lo);
        let h = self.y_hi.min(o.y_hi) - self.y_lo.max(o.y_lo);
        if w > 0.0 && h > 0.0 {
            w * h
        } else {
            0.0
        }
    }
}

/// Which invariant cone a segment's tangent lies in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cone {
    /// Directions near the y axis; slope is `dx/dy`.
    Vertical,
    /// Directions near the x axis; slope is `-dy/dx`.
    Horizontal,
}

impl Cone {
    pub fn flip(self) -> Cone {
        match self {
            Cone::Vertical => Cone::Horizontal,
            Cone::Horizontal => Cone::Vertical,
        }
    }
}

/// The interval `[l_alpha, 0]` in which every tracked slope lives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeBounds {
    pub l_alpha: f64,
    pub zero: f64,
}

impl ConeBounds {
    pub fn new(l_alpha: f64) -> Self {
        ConeBounds { l_alpha, zero: 0.0 }
    }

    pub fn contains(&self, slope: f64, tol: f64) -> bool {
        slope >= self.l_alpha - tol && slope <= self.zero + tol
    }

    pub fn check(&self, seg: &LiftedSegment, tol: f64) -> Result<(), GeometryError> {
        if self.contains(seg.slope, tol) {
            Ok(())
        } else {
            Err(GeometryError::SlopeOutOfCone { slope: seg.slope, lo: self.l_alpha })
        }
    }
}

/// Slope of the direction `d` measured in `cone`, or `None` if `d` has no
/// component along the cone's axis.
pub fn slope_in_cone(d: Point2, cone: Cone) -> Option<f64> {
    match cone {
        Cone::Vertical if d.y != 0.0 => Some(d.x / d.y),
        Cone::Horizontal if d.x != 0.0 => Some(-d.y / d.x),
        _ => None,
    }
}

/// A segment of the lifted plane with its cone label and slope.
///
/// The slope is stored rather than recomputed: after a shear the cone label
/// may flip, and the update rules are exact while endpoint differences are not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftedSegment {
    pub p0: Point2,
    pub p1: Point2,
    pub cone: Cone,
    pub slope: f64,
}

impl LiftedSegment {
    /// Builds a segment, deriving the slope from the endpoints.
    pub fn new(p0: Point2, p1: Point2, cone: Cone) -> Result<Self, GeometryError> {
        if !(p0.is_finite() && p1.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if p0 == p1 {
            return Err(GeometryError::Degenerate { x: p0.x, y: p0.y });
        }
        let slope = slope_in_cone(p1 - p0, cone).ok_or(GeometryError::AxisParallel(cone))?;
        Ok(LiftedSegment { p0, p1, cone, slope })
    }

    /// Builds a segment and rejects slopes outside `bounds`.
    pub fn in_cone(p0: Point2, p1: Point2, cone: Cone, bounds: &ConeBounds) -> Result<Self, GeometryError> {
        let s = Self::new(p0, p1, cone)?;
        bounds.check(&s, 1e-9)?;
        Ok(s)
    }

    /// Builds a segment with an explicitly tracked slope.
    pub fn with_slope(p0: Point2, p1: Point2, cone: Cone, slope: f64) -> Result<Self, GeometryError> {
        if !(p0.is_finite() && p1.is_finite() && slope.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if p0 == p1 {
            return Err(GeometryError::Degenerate { x: p0.x, y: p0.y });
        }
        Ok(LiftedSegment { p0, p1, cone, slope })
    }

    pub fn length(&self) -> f64 {
        self.p0.dist(self.p1)
    }

    pub fn midpoint(&self) -> Point2 {
        self.p0.lerp(self.p1, 0.5)
    }

    pub fn at(&self, t: f64) -> Point2 {
        self.p0.lerp(self.p1, t)
    }

    /// Sub-segment between parameters `t0 < t1`; keeps cone and slope.
    pub fn sub(&self, t0: f64, t1: f64) -> Option<LiftedSegment> {
        let a = self.at(t0);
        let b = if t1 >= 1.0 { self.p1 } else { self.at(t1) };
        let a = if t0 <= 0.0 { self.p0 } else { a };
        (a != b).then_some(LiftedSegment { p0: a, p1: b, ..*self })
    }

    pub fn translate(&self, dx: f64, dy: f64) -> LiftedSegment {
        let d = Point2::new(dx, dy);
        LiftedSegment { p0: self.p0 + d, p1: self.p1 + d, ..*self }
    }

    pub fn reversed(&self) -> LiftedSegment {
        LiftedSegment { p0: self.p1, p1: self.p0, ..*self }
    }

    /// Slope recomputed from the endpoints, for consistency checks.
    pub fn geometric_slope(&self) -> Option<f64> {
        slope_in_cone(self.p1 - self.p0, self.cone)
    }

    pub fn bbox(&self) -> (Point2, Point2) {
        (
            Point2::new(self.p0.x.min(self.p1.x), self.p0.y.min(self.p1.y)),
            Point2::new(self.p0.x.max(self.p1.x), self.p0.y.max(self.p1.y)),
        )
    }

    /// Euclidean distance from `p` to the closed segment.
    pub fn dist_to_point(&self, p: Point2) -> f64 {
        let d = self.p1 - self.p0;
        let len2 = d.x * d.x + d.y * d.y;
        let t = (((p.x - self.p0.x) * d.x + (p.y - self.p0.y) * d.y) / len2).clamp(0.0, 1.0);
        self.at(t).dist(p)
    }
}

/// Horizontal and vertical extent `(l_h, l_v)`.
pub fn seg_lengths(seg: &LiftedSegment) -> (f64, f64) {
    ((seg.p1.x - seg.p0.x).abs(), (seg.p1.y - seg.p0.y).abs())
}

/// Parameter interval `[t0, t1]` of `seg` lying in the closed rectangle,
/// widened by [`GEOM_TOL`]. Liang-Barsky clipping.
pub fn clip_params(seg: &LiftedSegment, r: &Rect) -> Option<(f64, f64)> {
    clip_widened(seg, r, GEOM_TOL)
}

fn clip_widened(seg: &LiftedSegment, r: &Rect, tol: f64) -> Option<(f64, f64)> {
    let d = seg.p1 - seg.p0;
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    let checks = [
        (-d.x, seg.p0.x - (r.x_lo - tol)),
        (d.x, (r.x_hi + tol) - seg.p0.x),
        (-d.y, seg.p0.y - (r.y_lo - tol)),
        (d.y, (r.y_hi + tol) - seg.p0.y),
    ];
    for (p, q) in checks {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
        }
    }
    (t0 <= t1).then_some((t0, t1))
}

/// Splits `seg` into its parts inside and outside the closed rectangle `r`.
///
/// Pieces keep the order they have along `seg`. A part inside of length at most
/// [`GEOM_TOL`] (a touch) is absorbed into the outside part, and outside
/// slivers of that length are absorbed into the inside part.
pub fn cut_segment_at_rect(seg: &LiftedSegment, r: &Rect) -> (Vec<LiftedSegment>, Vec<LiftedSegment>) {
    let len = seg.length();
    let eps = GEOM_TOL / len.max(GEOM_TOL);
    // cut at the true edges; the widened rectangle only rescues pieces
    // running along an edge a rounding error outside it
    match clip_widened(seg, r, 0.0).or_else(|| clip_params(seg, r)) {
        Some((t0, t1)) if t1 - t0 > eps => {
            let t0 = if t0 <= eps { 0.0 } else { t0 };
            let t1 = if t1 >= 1.0 - eps { 1.0 } else { t1 };
            let mut outside = Vec::new();
            if t0 > 0.0 {
                outside.extend(seg.sub(0.0, t0));
            }
            let inside: Vec<_> = seg.sub(t0, t1).into_iter().collect();
            if t1 < 1.0 {
                outside.extend(seg.sub(t1, 1.0));
            }
            (inside, outside)
        }
        _ => (Vec::new(), vec![*seg]),
    }
}

fn cross(a: Point2, b: Point2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Intersection point of two closed segments, if any.
///
/// Collinear overlapping segments return the midpoint of the overlap.
pub fn segments_intersect(a: &LiftedSegment, b: &LiftedSegment) -> Option<Point2> {
    let r = a.p1 - a.p0;
    let s = b.p1 - b.p0;
    let qp = b.p0 - a.p0;
    let denom = cross(r, s);
    let scale = r.x.hypot(r.y) * s.x.hypot(s.y);
    if denom.abs() <= 1e-14 * scale {
        // parallel
        if cross(qp, r).abs() > GEOM_TOL * r.x.hypot(r.y) {
            return None;
        }
        let rr = r.x * r.x + r.y * r.y;
        let tb0 = (qp.x * r.x + qp.y * r.y) / rr;
        let tb1 = tb0 + (s.x * r.x + s.y * r.y) / rr;
        let lo = tb0.min(tb1).max(0.0);
        let hi = tb0.max(tb1).min(1.0);
        let slack = GEOM_TOL / rr.sqrt();
        if lo > hi + slack {
            return None;
        }
        return Some(a.at(0.5 * (lo + hi)));
    }
    let t = cross(qp, s) / denom;
    let u = cross(qp, r) / denom;
    let ta = GEOM_TOL / r.x.hypot(r.y);
    let tb = GEOM_TOL / s.x.hypot(s.y);
    if t < -ta || t > 1.0 + ta || u < -tb || u > 1.0 + tb {
        return None;
    }
    // average the two parametrizations so the result is symmetric in (a, b)
    let pa = a.at(t.clamp(0.0, 1.0));
    let pb = b.at(u.clamp(0.0, 1.0));
    Some(pa.lerp(pb, 0.5))
}

/// Hausdorff distance between two segments (attained at endpoints).
pub fn hausdorff(a: &LiftedSegment, b: &LiftedSegment) -> f64 {
    a.dist_to_point(b.p0)
        .max(a.dist_to_point(b.p1))
        .max(b.dist_to_point(a.p0))
        .max(b.dist_to_point(a.p1))
}
