use crate::geometry::{clip_params, seg_lengths, Cone, LiftedSegment, Point2, Rect, GEOM_TOL};
use crate::twist::{wrap01, TwistMap};

use super::first_return::{ReturnCase, ReturnEvent};
use super::{require_canonical, SegmentError, Which};

/// A periodic orbit of the horizontal shear through the middle third of a
/// returning segment. Points sit on the lattice `x_p + (1/q) Z` mod 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalOrbit {
    pub q: u64,
    pub d: f64,
    pub t: u64,
    /// Height of the orbit point `p` on the interval.
    pub y_p: f64,
    /// Lifted x of `p`.
    pub x_p: f64,
    /// Orbit x-coordinates in `[0, 1)`, in iteration order over one period.
    pub points: Vec<f64>,
    /// Orbit point closest to the right edge from the left.
    pub p1: f64,
    /// Orbit point closest to the right edge from the right.
    pub p2: f64,
    /// Distance from `p1` to the right edge in units of `d`.
    pub tau: f64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `q = floor(1/(alpha l_v) + 1)`, the smallest denominator with
/// `1/q < alpha l_v`.
pub fn orbit_denominator(alpha: f64, l_v: f64) -> Result<u64, SegmentError> {
    let product = alpha * l_v;
    if !(l_v > 0.0) || !(product < 1.0) {
        return Err(SegmentError::DegenerateInterval { l_v, product });
    }
    Ok((1.0 / product + 1.0).floor() as u64)
}

/// Builds the orbit through the interval `i2` of the horizontal strip
/// `strip = (y0, y1)` and locates it against the right edge `re_x`.
///
/// The interval is passed as a segment, not just its heights, so that the
/// orbit can be anchored in x as well.
pub fn rational_orbit(alpha: f64, i2: &LiftedSegment, strip: (f64, f64), re_x: f64) -> Result<RationalOrbit, SegmentError> {
    let (y0, _) = strip;
    let l_v = seg_lengths(i2).1;
    let q = orbit_denominator(alpha, l_v)?;
    let qf = q as f64;
    let y_lo = i2.p0.y.min(i2.p1.y) - y0;
    let t = (qf * alpha * y_lo - 1e-12).ceil().max(0.0) as u64;
    let y_p = y0 + t as f64 / (qf * alpha);
    let s = (y_p - i2.p0.y) / (i2.p1.y - i2.p0.y);
    let x_p = i2.at(s.clamp(0.0, 1.0)).x;

    let period = if t == 0 { 1 } else { q / gcd(t, q) };
    let points: Vec<f64> = (0..period).map(|n| wrap01(x_p + ((n * t) % q) as f64 / qf)).collect();
    let left = |x: f64| wrap01(re_x - x);
    let right = |x: f64| {
        let r = wrap01(x - re_x);
        if r == 0.0 {
            1.0
        } else {
            r
        }
    };
    let p1 = points.iter().cloned().min_by(|a, b| left(*a).total_cmp(&left(*b))).unwrap_or(x_p);
    let p2 = points.iter().cloned().min_by(|a, b| right(*a).total_cmp(&right(*b))).unwrap_or(x_p);
    let d = 1.0 / qf;
    Ok(RationalOrbit { q, d, t, y_p, x_p, points, p1, p2, tau: left(p1) / d })
}

/// Which end of an excision segment carries the orbit point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    /// The orbit point is the lower-left end; the segment is cut at the next
    /// left edge of S to its right.
    Bottom,
    /// The orbit point is the upper-right end; the segment is cut at the
    /// next right edge of S to its left.
    Top,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcisionStep {
    pub m: u64,
    /// The segment after this step, before its own excision.
    pub j: LiftedSegment,
    /// Part of the previous segment removed because it lay in S.
    pub excised: Option<LiftedSegment>,
    /// The companion sequence on the other side of the orbit point.
    pub j_tilde: LiftedSegment,
    pub l_h: f64,
    pub l_v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcisionSequence {
    pub anchor: Anchor,
    pub j0: LiftedSegment,
    pub j_tilde0: LiftedSegment,
    pub steps: Vec<ExcisionStep>,
    pub m2: u64,
    /// Lower bound on the horizontal length of every segment before `m2`.
    pub bound: f64,
    pub inserted_len: f64,
    pub touches_le: bool,
    pub touches_re: bool,
    pub tilde_inserted_len: f64,
    pub tau_d: f64,
    pub one_minus_tau_d: f64,
}

struct Strip {
    alpha: f64,
    y0: f64,
    y1: f64,
    x0: f64,
    x1: f64,
}

impl Strip {
    fn shear(&self, p: Point2) -> Point2 {
        Point2::new(p.x + self.alpha * (p.y - self.y0), p.y)
    }

    /// Removes the part of `[anchor, other]` beyond the first edge of S met
    /// when walking away from the anchor.
    fn excise(&self, anchor: Point2, other: Point2, kind: Anchor) -> (Point2, Option<(Point2, Point2)>) {
        let cut_at = |x: f64| {
            let s = (x - anchor.x) / (other.x - anchor.x);
            anchor.lerp(other, s)
        };
        match kind {
            Anchor::Bottom => {
                let le = self.x0 + (anchor.x - self.x0).floor() + 1.0;
                if other.x > le + GEOM_TOL {
                    let c = Point2::new(le, cut_at(le).y);
                    (c, Some((c, other)))
                } else {
                    (other, None)
                }
            }
            Anchor::Top => {
                let re = self.x1 + (anchor.x - self.x1).floor();
                if other.x < re - GEOM_TOL {
                    let c = Point2::new(re, cut_at(re).y);
                    (c, Some((other, c)))
                } else {
                    (other, None)
                }
            }
        }
    }

    /// Total horizontal length of `seg` inside copies of S, and which edges
    /// the inside pieces touch.
    fn inside(&self, seg: &LiftedSegment) -> (f64, bool, bool) {
        let (xl, xr) = (seg.p0.x.min(seg.p1.x), seg.p0.x.max(seg.p1.x));
        let mut total = 0.0;
        let (mut le, mut re) = (false, false);
        let tol = 1e-9;
        for j in (xl - self.x1).floor() as i64..=(xr - self.x0).ceil() as i64 {
            let r = Rect { x_lo: self.x0 + j as f64, x_hi: self.x1 + j as f64, y_lo: self.y0, y_hi: self.y1 };
            if let Some((ta, tb)) = clip_params(seg, &r) {
                let (a, b) = (seg.at(ta.max(0.0)).x, seg.at(tb.min(1.0)).x);
                if (b - a).abs() > GEOM_TOL {
                    total += (b - a).abs();
                    le |= (a.min(b) - r.x_lo).abs() < tol;
                    re |= (a.max(b) - r.x_hi).abs() < tol;
                }
            }
        }
        (total, le, re)
    }
}

fn oriented(a: Point2, b: Point2, slope: f64) -> Result<LiftedSegment, SegmentError> {
    Ok(LiftedSegment::with_slope(a, b, Cone::Horizontal, slope)?)
}

/// Iterates the excised segments on both sides of the orbit point until the
/// orbit point returns to the stretch between its start and the right edge
/// of S (the left edge, for a case III return), checking the growth bound at
/// every earlier step.
pub fn excision_sequence(event: &ReturnEvent, orbit: &RationalOrbit, map: &TwistMap, max_iter: u64) -> Result<ExcisionSequence, SegmentError> {
    require_canonical(map)?;
    if event.which != Which::F || !matches!(event.case_id, ReturnCase::CaseII | ReturnCase::CaseIII) {
        return Err(SegmentError::WrongCase(format!("{:?} under {:?}", event.case_id, event.which)));
    }
    let image = event.image.ok_or_else(|| SegmentError::WrongCase("missing image".into()))?;
    let i3 = event.i3.ok_or_else(|| SegmentError::WrongCase("missing I3".into()))?;
    let c = map.config();
    let strip = Strip { alpha: map.f_rate(), y0: c.y0, y1: c.y1, x0: c.x0, x1: c.x1 };
    let p = Point2::new(orbit.x_p, orbit.y_p);
    let slope0 = image.slope;

    // J runs between the orbit point and S; J~ runs away from S
    let (kind, j0, jt0, tilde_kind) = match event.case_id {
        ReturnCase::CaseII => (Anchor::Bottom, (p, i3.p1), (p, image.p0), Anchor::Top),
        _ => (Anchor::Top, (p, i3.p0), (p, image.p1), Anchor::Bottom),
    };
    let mk = |anchor: Point2, other: Point2, k: Anchor, slope: f64| match k {
        Anchor::Bottom => oriented(anchor, other, slope),
        Anchor::Top => oriented(other, anchor, slope),
    };
    let j0_seg = mk(j0.0, j0.1, kind, slope0)?;
    let jt0_seg = mk(jt0.0, jt0.1, tilde_kind, slope0)?;
    let (lh0, lv0) = seg_lengths(&j0_seg);
    let bound = (orbit.d + lh0).min(lh0 + strip.alpha * lv0);

    let copy = event.copy as f64;
    let lands = |x: f64| -> bool {
        let tol = 1e-9;
        match kind {
            Anchor::Bottom => {
                let u = wrap01(x - orbit.x_p);
                let reach = wrap01(c.x1 + copy - orbit.x_p);
                u > tol && u < 1.0 - tol && u <= reach + tol
            }
            Anchor::Top => {
                let u = wrap01(x - (c.x0 + copy));
                let reach = wrap01(orbit.x_p - (c.x0 + copy));
                (u < reach - tol) || u > 1.0 - tol
            }
        }
    };

    let (mut ja, mut jo) = j0;
    let (mut ta, mut to) = jt0;
    let mut slope = slope0;
    let mut steps = Vec::new();
    for m in 1..=max_iter {
        let (keep, removed) = strip.excise(ja, jo, kind);
        let (tkeep, _) = strip.excise(ta, to, tilde_kind);
        let excised = match removed {
            Some((a, b)) => LiftedSegment::with_slope(a, b, Cone::Horizontal, slope).ok(),
            None => None,
        };
        slope /= 1.0 - strip.alpha * slope;
        ja = strip.shear(ja);
        jo = strip.shear(keep);
        ta = strip.shear(ta);
        to = strip.shear(tkeep);
        let j = mk(ja, jo, kind, slope)?;
        let j_tilde = mk(ta, to, tilde_kind, slope)?;
        let (l_h, l_v) = seg_lengths(&j);
        steps.push(ExcisionStep { m, j, excised, j_tilde, l_h, l_v });
        if lands(ja.x) {
            let (inserted_len, touches_le, touches_re) = strip.inside(&j);
            let (tilde_inserted_len, _, _) = strip.inside(&j_tilde);
            let tau_d = orbit.tau * orbit.d;
            return Ok(ExcisionSequence {
                anchor: kind,
                j0: j0_seg,
                j_tilde0: jt0_seg,
                steps,
                m2: m,
                bound,
                inserted_len,
                touches_le,
                touches_re,
                tilde_inserted_len,
                tau_d,
                one_minus_tau_d: orbit.d - tau_d,
            });
        }
        if l_h < bound - 1e-12 * (1.0 + ja.x.abs()) {
            return Err(SegmentError::BoundViolated { m, l_h, bound });
        }
    }
    Err(SegmentError::NoInsertion { steps: max_iter })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segment::first_return;
    use crate::twist::TwistConfig;
    use approx::assert_abs_diff_eq;

    fn seg_with_lv(lv: f64) -> LiftedSegment {
        LiftedSegment::new(Point2::new(0.5, 0.41), Point2::new(0.49, 0.41 + lv), Cone::Vertical).unwrap()
    }

    #[test]
    fn denominators() {
        let a = 3.5;
        let o = rational_orbit(a, &seg_with_lv(0.3 / a), (0.4, 0.6), 0.6).unwrap();
        assert_eq!((o.q, o.d), (4, 0.25));
        let o = rational_orbit(a, &seg_with_lv(0.5 / a), (0.4, 0.6), 0.6).unwrap();
        assert_eq!(o.q, 3);
        assert_abs_diff_eq!(o.d, 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(orbit_denominator(1.0, 1.0 - 1e-9).unwrap(), 2);
        assert!(matches!(orbit_denominator(3.5, 0.0), Err(SegmentError::DegenerateInterval { .. })));
        assert!(matches!(orbit_denominator(3.5, -1.0), Err(SegmentError::DegenerateInterval { .. })));
    }

    #[test]
    fn orbit_invariants() {
        let a = 3.5;
        for k in 1..40 {
            let lv = 0.002 * k as f64;
            let s = seg_with_lv(lv);
            let o = rational_orbit(a, &s, (0.4, 0.7), 0.62).unwrap();
            let prod = a * lv;
            assert!(1.0 / o.q as f64 <= prod);
            assert!(1.0 / (o.q as f64 - 1.0) >= prod - 1e-12);
            let tq = o.t as f64 / o.q as f64;
            assert!(a * 0.01 <= tq + 1e-12 && tq < a * (0.01 + lv));
            for w in o.points.windows(2) {
                let k = (w[1] - w[0]) * o.q as f64;
                assert!((k - k.round()).abs() < 1e-9);
            }
            assert!(o.tau >= 0.0 && wrap01(0.62 - o.p1) <= wrap01(0.62 - o.p2));
        }
    }

    fn case_ii_event(m: &TwistMap) -> ReturnEvent {
        let c = *m.config();
        // lower end lands at x = 1.2 in the gap, upper end at 1.40 inside copy 1
        let s = LiftedSegment::new(Point2::new(0.5, c.y0 + 0.2), Point2::new(0.49, c.y0 + 0.26), Cone::Vertical).unwrap();
        let ev = first_return(&s, Which::F, m, 1000).unwrap();
        assert_eq!(ev.case_id, ReturnCase::CaseII);
        assert_eq!((ev.m1, ev.copy), (1, 1));
        ev
    }

    #[test]
    fn excision_on_a_case_ii_event() {
        let m = TwistConfig::symmetric(3.5).validate().unwrap();
        let c = *m.config();
        let ev = case_ii_event(&m);
        let o = rational_orbit(3.5, ev.i2.as_ref().unwrap(), (c.y0, c.y1), c.x1).unwrap();
        let seq = excision_sequence(&ev, &o, &m, 100_000).unwrap();
        assert!(seq.m2 >= 1);
        assert!(seq.inserted_len > 0.0);
        for st in &seq.steps[..seq.steps.len() - 1] {
            assert!(st.l_h >= seq.bound - 1e-12);
        }
        // without excision the growth is exactly affine
        let mut prev = seq.j0;
        for st in &seq.steps {
            if st.excised.is_none() {
                let (h, v) = seg_lengths(&prev);
                assert_abs_diff_eq!(st.l_h, h + 3.5 * v, epsilon = 1e-12);
            }
            prev = st.j;
        }
    }

    #[test]
    fn excise_cuts_at_the_next_edge() {
        let s = Strip { alpha: 3.5, y0: 0.4, y1: 0.6, x0: 0.4, x1: 0.6 };
        let a = Point2::new(0.7, 0.45);
        // bottom anchor: the free end runs to the right past the edge at 1.4
        let (keep, cut) = s.excise(a, Point2::new(1.5, 0.55), Anchor::Bottom);
        assert_abs_diff_eq!(keep.x, 1.4, epsilon = 1e-15);
        assert_abs_diff_eq!(keep.y, 0.45 + 0.1 * 0.7 / 0.8, epsilon = 1e-15);
        assert_eq!(cut.unwrap().1, Point2::new(1.5, 0.55));
        assert!(s.excise(a, Point2::new(1.3, 0.55), Anchor::Bottom).1.is_none());
        // top anchor: the free end runs to the left past the edge at 0.6
        let (keep, cut) = s.excise(a, Point2::new(0.5, 0.41), Anchor::Top);
        assert_abs_diff_eq!(keep.x, 0.6, epsilon = 1e-15);
        assert_eq!(cut.unwrap().0, Point2::new(0.5, 0.41));
        assert!(s.excise(a, Point2::new(0.65, 0.41), Anchor::Top).1.is_none());
    }

    #[test]
    fn wrong_case_rejected() {
        let m = TwistConfig::symmetric(3.5).validate().unwrap();
        let c = *m.config();
        let mut ev = case_ii_event(&m);
        let o = rational_orbit(3.5, ev.i2.as_ref().unwrap(), (c.y0, c.y1), c.x1).unwrap();
        ev.case_id = ReturnCase::CaseIV;
        assert!(matches!(excision_sequence(&ev, &o, &m, 10), Err(SegmentError::WrongCase(_))));
    }
}
