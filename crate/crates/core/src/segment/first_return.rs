use crate::geometry::{clip_params, Cone, LiftedSegment, Point2, Rect, GEOM_TOL};
use crate::twist::TwistMap;

use super::propagate::{normalize, step, Piece};
use super::{require_canonical, SegmentError, Which};

/// How the image of a segment first meets S again.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReturnCase {
    /// Some piece crosses S from one side to the other.
    CaseI,
    /// Only the upper end lies in S.
    CaseII,
    /// Only the lower end lies in S.
    CaseIII,
    /// Both ends lie in S.
    CaseIV,
}

/// First return of a segment of S to S.
///
/// For `F` and `G` the image is exact and lifted; `image` runs from its lower
/// end to its upper end (left to right for `G`, whose roles of x and y are
/// swapped). `i1`..`i3` are the thirds of the part outside S, `i1` farthest
/// from S. For `Phi` only `i4` is filled.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnEvent {
    pub which: Which,
    pub m1: u64,
    pub case_id: ReturnCase,
    pub gamma: LiftedSegment,
    pub image: Option<LiftedSegment>,
    pub i1: Option<LiftedSegment>,
    pub i2: Option<LiftedSegment>,
    pub i3: Option<LiftedSegment>,
    /// Pieces of the image inside copies of S.
    pub i4: Vec<LiftedSegment>,
    /// Integer translate of S holding the piece that decides the case.
    pub copy: i64,
    /// Whether some piece of `i4` touches the entry edge of its copy of S
    /// (the left edge for `F`).
    pub touches_le: bool,
    /// Whether some piece of `i4` touches the exit edge of its copy of S.
    pub touches_re: bool,
}

/// Coordinates in which the map acts as a positive horizontal shear.
struct Frame {
    swap: bool,
    rate: f64,
    band: (f64, f64),
    s: (f64, f64),
}

impl Frame {
    fn new(which: Which, map: &TwistMap) -> Frame {
        let c = map.config();
        match which {
            Which::G => Frame { swap: true, rate: -map.g_rate(), band: (c.x0, c.x1), s: (1.0 - c.y1, 1.0 - c.y0) },
            _ => Frame { swap: false, rate: map.f_rate(), band: (c.y0, c.y1), s: (c.x0, c.x1) },
        }
    }

    // (x, y) -> (1 - y, x) turns the downward vertical shear into a rightward one
    fn to(&self, p: Point2) -> Point2 {
        if self.swap {
            Point2::new(1.0 - p.y, p.x)
        } else {
            p
        }
    }

    fn from(&self, p: Point2) -> Point2 {
        if self.swap {
            Point2::new(p.y, 1.0 - p.x)
        } else {
            p
        }
    }

    fn cone(&self, c: Cone) -> Cone {
        if self.swap {
            c.flip()
        } else {
            c
        }
    }

    fn seg_back(&self, s: &LiftedSegment) -> LiftedSegment {
        LiftedSegment { p0: self.from(s.p0), p1: self.from(s.p1), cone: self.cone(s.cone), slope: s.slope }
    }
}

fn horizontal_slope_after(cone: Cone, slope: f64, rate: f64) -> f64 {
    match cone {
        Cone::Vertical => -1.0 / (slope + rate),
        Cone::Horizontal => slope / (1.0 - rate * slope),
    }
}

/// Smallest `m1 <= max_iter` for which the image of `seg` meets S again.
pub fn first_return(seg: &LiftedSegment, which: Which, map: &TwistMap, max_iter: u64) -> Result<ReturnEvent, SegmentError> {
    require_canonical(map)?;
    let s_rect = map.s_rect();
    if !(s_rect.contains(seg.p0) && s_rect.contains(seg.p1)) {
        return Err(SegmentError::NotInS);
    }
    match which {
        Which::Phi => phi_return(seg, map, max_iter),
        _ => shear_return(seg, which, map, max_iter),
    }
}

fn shear_return(seg: &LiftedSegment, which: Which, map: &TwistMap, max_iter: u64) -> Result<ReturnEvent, SegmentError> {
    let fr = Frame::new(which, map);
    let (mut c, mut a) = (fr.to(seg.p0), fr.to(seg.p1));
    if (a.y, a.x) < (c.y, c.x) {
        std::mem::swap(&mut c, &mut a);
    }
    let fcone = fr.cone(seg.cone);
    let mut slope = seg.slope;
    let mut cone = fcone;
    let (b0, b1) = fr.band;
    let (s0, s1) = fr.s;
    for m in 1..=max_iter {
        slope = horizontal_slope_after(cone, slope, fr.rate);
        cone = Cone::Horizontal;
        let sh = m as f64 * fr.rate;
        let c_m = Point2::new(c.x + sh * (c.y - b0), c.y);
        let a_m = Point2::new(a.x + sh * (a.y - b0), a.y);
        let image = LiftedSegment::with_slope(c_m, a_m, cone, slope)?;
        let (xl, xr) = (c_m.x.min(a_m.x), c_m.x.max(a_m.x));
        let eps = GEOM_TOL / image.length();
        let mut hits: Vec<(f64, f64, i64)> = Vec::new();
        let j_lo = (xl - s1 - GEOM_TOL).ceil() as i64;
        let j_hi = (xr - s0 + GEOM_TOL).floor() as i64;
        for j in j_lo..=j_hi {
            let r = Rect { x_lo: s0 + j as f64, x_hi: s1 + j as f64, y_lo: b0, y_hi: b1 };
            if let Some((ta, tb)) = clip_params(&image, &r) {
                if tb - ta > eps {
                    hits.push((ta.max(0.0), tb.min(1.0), j));
                }
            }
        }
        if hits.is_empty() {
            continue;
        }
        hits.sort_by(|p, q| p.0.total_cmp(&q.0));
        return Ok(classify(seg, which, m, &image, &hits, &fr));
    }
    Err(SegmentError::NoReturn(max_iter))
}

fn classify(gamma: &LiftedSegment, which: Which, m1: u64, image: &LiftedSegment, hits: &[(f64, f64, i64)], fr: &Frame) -> ReturnEvent {
    let (s0, s1) = fr.s;
    let edge_tol = 1e-9 * (1.0 + image.p1.x.abs().max(image.p0.x.abs()));
    let eps = GEOM_TOL / image.length();
    let on = |x: f64, e: f64| (x - e).abs() <= edge_tol;
    let mut touches_le = false;
    let mut touches_re = false;
    let mut chord = None;
    for &(ta, tb, j) in hits {
        let (xa, xb) = (image.at(ta).x, image.at(tb).x);
        let (le, re) = (s0 + j as f64, s1 + j as f64);
        let tl = on(xa, le) || on(xb, le);
        let tr = on(xa, re) || on(xb, re);
        touches_le |= tl;
        touches_re |= tr;
        if tl && tr && chord.is_none() {
            chord = Some(j);
        }
    }
    let first = hits[0];
    let last = hits[hits.len() - 1];
    let start_in = first.0 <= eps;
    let end_in = last.1 >= 1.0 - eps;
    let piece = |t0: f64, t1: f64| image.sub(t0, t1).map(|s| fr.seg_back(&s));
    let i4: Vec<LiftedSegment> = hits.iter().filter_map(|&(ta, tb, _)| piece(ta, tb)).collect();
    let mut ev = ReturnEvent {
        which,
        m1,
        case_id: ReturnCase::CaseI,
        gamma: *gamma,
        image: Some(fr.seg_back(image)),
        i1: None,
        i2: None,
        i3: None,
        i4,
        copy: first.2,
        touches_le,
        touches_re,
    };
    if let Some(j) = chord {
        ev.copy = j;
        return ev;
    }
    match (start_in, end_in) {
        (true, true) => {
            ev.case_id = ReturnCase::CaseIV;
            ev.i1 = piece(first.0, first.1);
            ev.i2 = if last.0 > first.1 { piece(first.1, last.0) } else { None };
            ev.i3 = piece(last.0, last.1);
        }
        (false, true) => {
            ev.case_id = ReturnCase::CaseII;
            ev.copy = last.2;
            let t4 = last.0;
            ev.i1 = piece(0.0, t4 / 3.0);
            ev.i2 = piece(t4 / 3.0, 2.0 * t4 / 3.0);
            ev.i3 = piece(2.0 * t4 / 3.0, t4);
        }
        (true, false) => {
            ev.case_id = ReturnCase::CaseIII;
            let t4 = first.1;
            let third = (1.0 - t4) / 3.0;
            ev.i3 = piece(t4, t4 + third);
            ev.i2 = piece(t4 + third, t4 + 2.0 * third);
            ev.i1 = piece(t4 + 2.0 * third, 1.0);
        }
        // an interior piece of a straight image in the strip must cross S
        (false, false) => {}
    }
    ev
}

fn phi_return(seg: &LiftedSegment, map: &TwistMap, max_iter: u64) -> Result<ReturnEvent, SegmentError> {
    let c = map.config();
    let mut dropped = 0;
    let mut pieces: Vec<Piece> = normalize(seg, map).pieces;
    let tol = 1e-9;
    for m in 1..=max_iter {
        pieces = step(&pieces, Which::Phi, map, &mut dropped);
        let hits: Vec<&Piece> = pieces.iter().filter(|p| p.in_s(map)).collect();
        if hits.is_empty() {
            continue;
        }
        let xs = |p: &Piece| (p.seg.p0.x.min(p.seg.p1.x), p.seg.p0.x.max(p.seg.p1.x));
        let ys = |p: &Piece| (p.seg.p0.y.min(p.seg.p1.y), p.seg.p0.y.max(p.seg.p1.y));
        let le = hits.iter().any(|p| (xs(p).0 - c.x0).abs() < tol);
        let re = hits.iter().any(|p| (xs(p).1 - c.x1).abs() < tol);
        let chord = hits.iter().any(|p| {
            let (x, y) = (xs(p), ys(p));
            ((x.0 - c.x0).abs() < tol && (x.1 - c.x1).abs() < tol) || ((y.0 - c.y0).abs() < tol && (y.1 - c.y1).abs() < tol)
        });
        let case_id = if chord {
            ReturnCase::CaseI
        } else if hits.len() > 1 {
            ReturnCase::CaseIV
        } else if re && !le {
            ReturnCase::CaseIII
        } else {
            ReturnCase::CaseII
        };
        return Ok(ReturnEvent {
            which: Which::Phi,
            m1: m,
            case_id,
            gamma: *seg,
            image: None,
            i1: None,
            i2: None,
            i3: None,
            i4: hits.iter().map(|p| p.lifted()).collect(),
            copy: hits[0].wrap.0,
            touches_le: le,
            touches_re: re,
        });
    }
    Err(SegmentError::NoReturn(max_iter))
}
