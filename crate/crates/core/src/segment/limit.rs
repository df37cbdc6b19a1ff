use crate::geometry::{clip_params, Cone, LiftedSegment, Point2};
use crate::twist::{lam_alpha, TwistMap};

use super::propagate::propagate;
use super::{require_canonical, SegmentError, Which};

/// The four-segment cycle inside S, each segment joining two adjacent edges
/// with slope equal to the critical slope.
///
/// Corners: `a` on the left edge, `b` on the bottom, `c` on the right, `d`
/// on the top. `l[0]..l[7]` are the edge offsets: bottom edge split
/// `l1 | l2` at `b`, right edge `l3 | l4` at `c` (from below), top edge
/// `l5 | l6` at `d` (from the right), left edge `l7 | l8` at `a` (from above).
#[derive(Debug, Clone, PartialEq)]
pub struct LimitRectangle {
    pub l: [f64; 8],
    pub a: Point2,
    pub b: Point2,
    pub c: Point2,
    pub d: Point2,
    /// `ab`, `bc`, `cd`, `da` in the order the dynamics visits them.
    pub segments: [LiftedSegment; 4],
}

impl LimitRectangle {
    fn from_corners(a: Point2, b: Point2, c: Point2, d: Point2, l: [f64; 8]) -> Result<Self, SegmentError> {
        let segments = [
            LiftedSegment::new(b, a, Cone::Vertical)?,
            LiftedSegment::new(b, c, Cone::Horizontal)?,
            LiftedSegment::new(c, d, Cone::Vertical)?,
            LiftedSegment::new(a, d, Cone::Horizontal)?,
        ];
        Ok(LimitRectangle { l, a, b, c, d, segments })
    }
}

fn strip_sizes(map: &TwistMap) -> (f64, f64) {
    let c = map.config();
    (c.x1 - c.x0, c.y1 - c.y0)
}

/// Closed-form solution of the offset equations
/// `l1 = c l8, l3 = c l2, l5 = c l4, l7 = c l6` with `c = |L_alpha|` and the
/// edge closures `l1 + l2 = l5 + l6 = W`, `l3 + l4 = l7 + l8 = H`.
pub fn limit_rectangle(map: &TwistMap) -> Result<LimitRectangle, SegmentError> {
    require_canonical(map)?;
    if !map.equal_shears() {
        return Err(SegmentError::NoRectangle("shears differ; rescale first".into()));
    }
    let la = lam_alpha(map.alpha())?;
    if la <= -1.0 {
        return Err(SegmentError::NoRectangle("alpha must exceed 2".into()));
    }
    let k = -la;
    let (w, h) = strip_sizes(map);
    let l8 = (h - k * w) / (1.0 - k * k);
    let l1 = k * l8;
    let l2 = w - l1;
    let l3 = k * l2;
    let l4 = h - l3;
    let l5 = k * l4;
    let l6 = w - l5;
    let l7 = k * l6;
    let l = [l1, l2, l3, l4, l5, l6, l7, l8];
    if l.iter().any(|v| !(*v > 0.0)) {
        return Err(SegmentError::NoRectangle(format!("non-positive offset in {l:?}")));
    }
    let cfg = map.config();
    let a = Point2::new(cfg.x0, cfg.y1 - l7);
    let b = Point2::new(cfg.x0 + l1, cfg.y0);
    let c = Point2::new(cfg.x1, cfg.y0 + l3);
    let d = Point2::new(cfg.x1 - l5, cfg.y1);
    LimitRectangle::from_corners(a, b, c, d, l)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainMap {
    F,
    G,
    FInv,
    GInv,
}

/// Applies one shear to a segment of S that has an endpoint on an edge
/// the shear fixes, and keeps the part of the image inside S that starts at
/// that endpoint.
pub fn chain_step(map: &TwistMap, kind: ChainMap, seg: &LiftedSegment) -> Result<LiftedSegment, SegmentError> {
    let c = map.config();
    let tol = 1e-9;
    let horizontal = matches!(kind, ChainMap::F | ChainMap::FInv);
    let on_fixed = |p: Point2| {
        if horizontal {
            (p.y - c.y0).abs() < tol || (p.y - c.y1).abs() < tol
        } else {
            (p.x - c.x0).abs() < tol || (p.x - c.x1).abs() < tol
        }
    };
    let (e, o) = if on_fixed(seg.p0) {
        (seg.p0, seg.p1)
    } else if on_fixed(seg.p1) {
        (seg.p1, seg.p0)
    } else {
        return Err(SegmentError::ChainBroken(format!("no endpoint on a fixed edge for {kind:?}")));
    };
    let sign = if matches!(kind, ChainMap::F | ChainMap::G) { 1.0 } else { -1.0 };
    let o2 = if horizontal {
        Point2::new(o.x + sign * map.f_rate() * (o.y - e.y), o.y)
    } else {
        Point2::new(o.x, o.y + sign * map.g_rate() * (o.x - e.x))
    };
    let ray = LiftedSegment::new(e, e + (o2 - e) * 1e3, Cone::Vertical)
        .or_else(|_| LiftedSegment::new(e, e + (o2 - e) * 1e3, Cone::Horizontal))?;
    let (_, t1) = clip_params(&ray, &map.s_rect()).ok_or_else(|| SegmentError::ChainBroken("image misses S".into()))?;
    let exit = ray.at(t1);
    let (exit_x, exit_y) = (exit.x.clamp(c.x0, c.x1), exit.y.clamp(c.y0, c.y1));
    let exit = Point2::new(exit_x, exit_y);
    let cone = if horizontal { Cone::Horizontal } else { Cone::Vertical };
    let (p0, p1) = match cone {
        Cone::Vertical if exit.y < e.y => (exit, e),
        Cone::Horizontal if exit.x < e.x => (exit, e),
        _ => (e, exit),
    };
    Ok(LiftedSegment::new(p0, p1, cone)?)
}

/// Iterates the forward corner chain with the piece machinery: each step
/// applies `F` or `G` (starting with `F`) and keeps the piece in S that
/// contains the fixed endpoint. Returns every segment of the chain.
pub fn chain_via_propagate(map: &TwistMap, start: &LiftedSegment, steps: usize) -> Result<Vec<LiftedSegment>, SegmentError> {
    let c = map.config();
    let tol = 1e-9;
    let mut out = vec![*start];
    let mut cur = *start;
    for i in 0..steps {
        let which = if i % 2 == 0 { Which::F } else { Which::G };
        let fixed = |p: Point2| match which {
            Which::F => (p.y - c.y0).abs() < tol || (p.y - c.y1).abs() < tol,
            _ => (p.x - c.x0).abs() < tol || (p.x - c.x1).abs() < tol,
        };
        let e = if fixed(cur.p0) {
            cur.p0
        } else if fixed(cur.p1) {
            cur.p1
        } else {
            return Err(SegmentError::ChainBroken(format!("step {i}: no fixed endpoint")));
        };
        let prop = propagate(&cur, which, 1, map);
        let next = prop
            .in_s(map)
            .map(|p| p.seg)
            .find(|s| s.p0.dist(e) < 1e-8 || s.p1.dist(e) < 1e-8)
            .ok_or_else(|| SegmentError::ChainBroken(format!("step {i}: lost the fixed endpoint")))?;
        out.push(next);
        cur = next;
    }
    Ok(out)
}

/// Limit rectangle of the inverse dynamics, found by iterating `F^-1` and
/// `G^-1` on corner segments until the chain settles.
///
/// Labels mirror the forward rectangle: `a` is on the right edge, `b` on the
/// bottom, `c` on the left and `d` on the top, and offsets are measured from
/// the mirrored corners.
pub fn limit_rectangle_backward(map: &TwistMap) -> Result<LimitRectangle, SegmentError> {
    require_canonical(map)?;
    if !map.equal_shears() {
        return Err(SegmentError::NoRectangle("shears differ; rescale first".into()));
    }
    let cfg = map.config();
    let (w, h) = strip_sizes(map);
    let mut seg = LiftedSegment::new(Point2::new(cfg.x1 - w / 3.0, cfg.y0), Point2::new(cfg.x1, cfg.y1 - h / 3.0), Cone::Vertical)?;
    let order = [ChainMap::FInv, ChainMap::GInv, ChainMap::FInv, ChainMap::GInv];
    let mut last = [seg; 4];
    let mut prev_b = Point2::new(f64::NAN, f64::NAN);
    for _ in 0..500 {
        for (i, k) in order.iter().enumerate() {
            seg = chain_step(map, *k, &seg)?;
            last[i] = seg;
        }
        let b = last[3].p0;
        if b.dist(prev_b) < 1e-15 {
            break;
        }
        prev_b = b;
    }
    // last[0]: bottom -> left, last[1]: left -> top, last[2]: top -> right, last[3]: right -> bottom
    let tol = 1e-9;
    let pick = |s: &LiftedSegment, f: &dyn Fn(Point2) -> bool| if f(s.p0) { s.p0 } else { s.p1 };
    let b = pick(&last[0], &|p| (p.y - cfg.y0).abs() < tol);
    let cc = pick(&last[0], &|p| (p.x - cfg.x0).abs() < tol);
    let d = pick(&last[1], &|p| (p.y - cfg.y1).abs() < tol);
    let a = pick(&last[2], &|p| (p.x - cfg.x1).abs() < tol);
    let l1 = cfg.x1 - b.x;
    let l3 = cc.y - cfg.y0;
    let l5 = d.x - cfg.x0;
    let l7 = cfg.y1 - a.y;
    let l = [l1, w - l1, l3, h - l3, l5, w - l5, l7, h - l7];
    let segments = [
        LiftedSegment::new(b, a, Cone::Vertical)?,
        LiftedSegment::new(cc, b, Cone::Horizontal)?,
        LiftedSegment::new(cc, d, Cone::Vertical)?,
        LiftedSegment::new(d, a, Cone::Horizontal)?,
    ];
    Ok(LimitRectangle { l, a, b, c: cc, d, segments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::hausdorff;
    use crate::twist::TwistConfig;
    use approx::assert_abs_diff_eq;

    fn map35() -> TwistMap {
        TwistConfig::symmetric(3.5).validate().unwrap()
    }

    #[test]
    fn offsets_pair_up() {
        let r = limit_rectangle(&map35()).unwrap();
        let l = r.l;
        for i in 0..4 {
            assert_abs_diff_eq!(l[i], l[i + 4], epsilon = 1e-10);
        }
        let k = -lam_alpha(3.5).unwrap();
        for i in [0usize, 2, 4, 6] {
            let prev = l[(i + 7) % 8];
            assert_abs_diff_eq!(l[i] / prev, k, epsilon = 1e-12);
        }
        for s in &r.segments {
            assert_abs_diff_eq!(s.slope, -k, epsilon = 1e-10);
        }
        // square S: l8 = W / (1 + c)
        let w = 1.0 / 3.5;
        assert_abs_diff_eq!(l[7], w / (1.0 + k), epsilon = 1e-14);
    }

    #[test]
    fn large_alpha_hugs_the_boundary() {
        let r = limit_rectangle(&TwistConfig::symmetric(200.0).validate().unwrap()).unwrap();
        assert!(r.l[0] / r.l[1] < 0.006);
        assert_abs_diff_eq!(r.l[0] / r.l[7], -lam_alpha(200.0).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn invariant_under_the_chain() {
        let m = map35();
        let r = limit_rectangle(&m).unwrap();
        let kinds = [ChainMap::F, ChainMap::G, ChainMap::F, ChainMap::G];
        for i in 0..4 {
            let img = chain_step(&m, kinds[i], &r.segments[i]).unwrap();
            let want = &r.segments[(i + 1) % 4];
            assert!(hausdorff(&img, want) < 1e-12, "segment {i}");
        }
        let chain = chain_via_propagate(&m, &r.segments[0], 8).unwrap();
        for (i, s) in chain.iter().enumerate() {
            assert!(hausdorff(s, &r.segments[i % 4]) < 1e-8, "step {i}");
        }
    }

    #[test]
    fn backward_is_the_mirror_image() {
        let m = map35();
        let c = *m.config();
        let f = limit_rectangle(&m).unwrap();
        let b = limit_rectangle_backward(&m).unwrap();
        let mirror = |p: Point2| Point2::new(c.x0 + c.x1 - p.x, p.y);
        for (p, q) in [(f.a, b.a), (f.b, b.b), (f.c, b.c), (f.d, b.d)] {
            assert!(mirror(p).dist(q) < 1e-12, "{p} vs {q}");
        }
        for i in 0..8 {
            assert_abs_diff_eq!(f.l[i], b.l[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn unequal_shears_rejected() {
        let t = TwistConfig { beta: 5.0, x0: 0.4, x1: 0.6, ..TwistConfig::symmetric(3.5) }.validate().unwrap();
        assert!(matches!(limit_rectangle(&t), Err(SegmentError::NoRectangle(_))));
    }
}
