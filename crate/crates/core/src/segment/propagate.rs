use crate::geometry::{Cone, LiftedSegment, Point2, GEOM_TOL};
use crate::twist::{CompositionOrder, TwistMap};

use super::{Which, MIN_PIECE_LEN};

/// A segment in the fundamental square plus the integer translation that
/// places it in the lifted plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub seg: LiftedSegment,
    pub wrap: (i64, i64),
}

impl Piece {
    pub fn lifted(&self) -> LiftedSegment {
        self.seg.translate(self.wrap.0 as f64, self.wrap.1 as f64)
    }

    pub fn in_s(&self, map: &TwistMap) -> bool {
        map.in_s(self.seg.midpoint())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Propagation {
    pub pieces: Vec<Piece>,
    /// Slivers below the minimum length that were discarded.
    pub dropped: usize,
}

impl Propagation {
    pub fn segments(&self) -> Vec<LiftedSegment> {
        self.pieces.iter().map(|p| p.seg).collect()
    }

    pub fn in_s<'a>(&'a self, map: &'a TwistMap) -> impl Iterator<Item = &'a Piece> + 'a {
        self.pieces.iter().filter(move |p| p.in_s(map))
    }
}

/// Splits `seg` where it crosses any of the vertical lines `xs` or
/// horizontal lines `ys`. Pieces below the minimum length are counted in
/// `dropped` and discarded.
fn split_at_lines(seg: &LiftedSegment, xs: &[f64], ys: &[f64], out: &mut Vec<LiftedSegment>, dropped: &mut usize) {
    let d = seg.p1 - seg.p0;
    let mut ts: Vec<f64> = Vec::new();
    let mut crossings = |start: f64, delta: f64, lines: &[f64]| {
        if delta.abs() <= GEOM_TOL {
            return;
        }
        for &c in lines {
            let t = (c - start) / delta;
            if t > 0.0 && t < 1.0 {
                ts.push(t);
            }
        }
    };
    crossings(seg.p0.x, d.x, xs);
    crossings(seg.p0.y, d.y, ys);
    ts.sort_by(f64::total_cmp);
    let mut last = 0.0;
    for t in ts.into_iter().chain(std::iter::once(1.0)) {
        if let Some(s) = seg.sub(last, t) {
            if s.length() >= MIN_PIECE_LEN {
                out.push(s);
                last = t;
            } else if t == 1.0 {
                // give the tail back to the previous piece if there is one
                match out.last_mut() {
                    Some(prev) if prev.p1 == s.p0 => prev.p1 = s.p1,
                    _ => *dropped += 1,
                }
            }
        }
    }
}

fn integer_lines(a: f64, b: f64) -> Vec<f64> {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let mut v = Vec::new();
    let mut n = lo.floor() + 1.0;
    while n < hi {
        v.push(n);
        n += 1.0;
    }
    v
}

/// Brings lifted segments back to the unit square, split along the strip
/// boundaries so each piece sits in exactly one of S, H \ S, V \ S or neither.
fn settle(segs: Vec<(LiftedSegment, (i64, i64))>, map: &TwistMap, dropped: &mut usize) -> Vec<Piece> {
    let c = map.config();
    let (xs, ys) = ([c.x0, c.x1], [c.y0, c.y1]);
    let mut out = Vec::new();
    for (seg, wrap) in segs {
        let ix = integer_lines(seg.p0.x, seg.p1.x);
        let iy = integer_lines(seg.p0.y, seg.p1.y);
        let mut parts = Vec::new();
        split_at_lines(&seg, &ix, &iy, &mut parts, dropped);
        for part in parts {
            let m = part.midpoint();
            let (sx, sy) = (m.x.floor(), m.y.floor());
            let moved = part.translate(-sx, -sy);
            let w = (wrap.0 + sx as i64, wrap.1 + sy as i64);
            let mut pieces = Vec::new();
            split_at_lines(&moved, &xs, &ys, &mut pieces, dropped);
            out.extend(pieces.into_iter().map(|seg| Piece { seg, wrap: w }));
        }
    }
    out
}

/// Splits a lifted segment into pieces of the fundamental square.
pub fn normalize(seg: &LiftedSegment, map: &TwistMap) -> Propagation {
    let mut dropped = 0;
    let pieces = settle(vec![(*seg, (0, 0))], map, &mut dropped);
    Propagation { pieces, dropped }
}

/// Slope and cone after the horizontal shear with signed rate `r`.
fn f_slope(cone: Cone, slope: f64, r: f64) -> (Cone, f64) {
    match cone {
        // (L, 1) -> (L + r, 1)
        Cone::Vertical => (Cone::Horizontal, -1.0 / (slope + r)),
        // (1, -L) -> (1 - rL, -L)
        Cone::Horizontal => (Cone::Horizontal, slope / (1.0 - r * slope)),
    }
}

/// Slope and cone after the vertical shear with signed rate `g`.
fn g_slope(cone: Cone, slope: f64, g: f64) -> (Cone, f64) {
    match cone {
        // (1, -L) -> (1, g - L)
        Cone::Horizontal => (Cone::Vertical, 1.0 / (g - slope)),
        // (L, 1) -> (L, 1 + gL)
        Cone::Vertical => (Cone::Vertical, slope / (1.0 + g * slope)),
    }
}

fn shear_piece(p: &Piece, which: Which, map: &TwistMap) -> (LiftedSegment, (i64, i64)) {
    let c = map.config();
    let s = p.seg;
    let mid = s.midpoint();
    match which {
        Which::F if map.in_h(mid) => {
            let r = map.f_rate();
            let sh = |q: Point2| Point2::new(q.x + r * (q.y - c.y0), q.y);
            let (cone, slope) = f_slope(s.cone, s.slope, r);
            (LiftedSegment { p0: sh(s.p0), p1: sh(s.p1), cone, slope }, p.wrap)
        }
        Which::G if map.in_v(mid) => {
            let g = map.g_rate();
            let sh = |q: Point2| Point2::new(q.x, q.y + g * (q.x - c.x0));
            let (cone, slope) = g_slope(s.cone, s.slope, g);
            (LiftedSegment { p0: sh(s.p0), p1: sh(s.p1), cone, slope }, p.wrap)
        }
        _ => (s, p.wrap),
    }
}

/// One application of `F` or `G` to a list of pieces.
fn shear_step(pieces: &[Piece], which: Which, map: &TwistMap, dropped: &mut usize) -> Vec<Piece> {
    let moved = pieces.iter().map(|p| shear_piece(p, which, map)).collect();
    settle(moved, map, dropped)
}

/// One step of `F`, `G` or `Phi` applied to settled pieces.
pub fn step(pieces: &[Piece], which: Which, map: &TwistMap, dropped: &mut usize) -> Vec<Piece> {
    match which {
        Which::F | Which::G => shear_step(pieces, which, map, dropped),
        Which::Phi => {
            let (first, second) = match map.order() {
                CompositionOrder::GAfterF => (Which::F, Which::G),
                CompositionOrder::FAfterG => (Which::G, Which::F),
            };
            let mid = shear_step(pieces, first, map, dropped);
            shear_step(&mid, second, map, dropped)
        }
    }
}

/// Continues a propagation from already settled pieces.
pub fn propagate_pieces(start: Propagation, which: Which, steps: usize, map: &TwistMap) -> Propagation {
    let Propagation { mut pieces, mut dropped } = start;
    for _ in 0..steps {
        pieces = step(&pieces, which, map, &mut dropped);
    }
    Propagation { pieces, dropped }
}

/// Image of `seg` under `steps` applications of the chosen map, as pieces
/// split at every strip boundary and wrapped into the unit square.
pub fn propagate(seg: &LiftedSegment, which: Which, steps: usize, map: &TwistMap) -> Propagation {
    propagate_pieces(normalize(seg, map), which, steps, map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{seg_lengths, ConeBounds};
    use crate::twist::{lam_alpha, torus_dist, TwistConfig};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn map35() -> TwistMap {
        TwistConfig::symmetric(3.5).validate().unwrap()
    }

    #[test]
    fn outside_strips_unchanged() {
        let m = map35();
        let s = LiftedSegment::new(Point2::new(0.05, 0.05), Point2::new(0.1, 0.2), Cone::Vertical).unwrap();
        for which in [Which::F, Which::G, Which::Phi] {
            let p = propagate(&s, which, 5, &m);
            assert_eq!(p.pieces.len(), 1);
            assert_eq!(p.pieces[0].seg, s);
            assert_eq!(p.dropped, 0);
        }
    }

    #[test]
    fn vertical_piece_grows_by_slope_plus_alpha() {
        let m = map35();
        let c = *m.config();
        let l = -0.2;
        let p0 = Point2::new(0.55, c.y0 + 0.05);
        let s = LiftedSegment::new(p0, Point2::new(p0.x + 0.1 * l, p0.y + 0.1), Cone::Vertical).unwrap();
        let out = propagate(&s, Which::F, 1, &m);
        let total: f64 = out.pieces.iter().map(|p| seg_lengths(&p.seg).0).sum();
        assert_abs_diff_eq!(total, (l + 3.5) * 0.1, epsilon = 1e-12);
        let lv: f64 = out.pieces.iter().map(|p| seg_lengths(&p.seg).1).sum();
        assert_abs_diff_eq!(lv, 0.1, epsilon = 1e-12);
        for p in &out.pieces {
            assert_eq!(p.seg.cone, Cone::Horizontal);
            assert_abs_diff_eq!(p.seg.slope, -1.0 / (l + 3.5), epsilon = 1e-15);
        }
    }

    #[test]
    fn stored_slope_matches_geometry() {
        let m = map35();
        let la = lam_alpha(3.5).unwrap();
        let b = ConeBounds::new(la);
        let c = *m.config();
        let s = LiftedSegment::new(Point2::new(0.5, c.y0 + 0.01), Point2::new(0.49, c.y0 + 0.06), Cone::Vertical)
            .unwrap();
        let out = propagate(&s, Which::Phi, 3, &m);
        assert!(!out.pieces.is_empty());
        for p in &out.pieces {
            let g = p.seg.geometric_slope().unwrap();
            let tol = 1e-6 / p.seg.length().max(1e-3);
            assert!((g - p.seg.slope).abs() < tol, "{g} vs {}", p.seg.slope);
            assert!(b.contains(p.seg.slope, 1e-12));
        }
    }

    fn random_seg(rng: &mut ChaCha8Rng, m: &TwistMap) -> LiftedSegment {
        let c = *m.config();
        let la = lam_alpha(m.alpha()).unwrap();
        let x = rng.gen_range(c.x0..c.x1);
        let y = rng.gen_range(c.y0..c.y1);
        let len = rng.gen_range(0.005..0.05);
        let l = rng.gen_range(la..0.0);
        let p1 = Point2::new(x + l * len, y + len);
        LiftedSegment::new(Point2::new(x, y), p1, Cone::Vertical).unwrap()
    }

    #[test]
    fn multi_step_equals_composed_single_steps() {
        let m = map35();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let s = random_seg(&mut rng, &m);
            let three = propagate(&s, Which::Phi, 3, &m);
            let mut composed = normalize(&s, &m);
            for _ in 0..3 {
                composed = propagate_pieces(composed, Which::Phi, 1, &m);
            }
            assert_eq!(three, composed);

            // point-map oracle: images of sample points lie on some piece
            for i in 0..=20 {
                let mut q = s.at(i as f64 / 20.0);
                q = Point2::new(q.x, q.y);
                for _ in 0..3 {
                    q = m.phi_torus(q);
                }
                let best = three
                    .pieces
                    .iter()
                    .map(|p| p.seg.dist_to_point(q))
                    .fold(f64::INFINITY, f64::min);
                let edge = three
                    .pieces
                    .iter()
                    .flat_map(|p| [p.seg.p0, p.seg.p1])
                    .map(|e| torus_dist(e, q))
                    .fold(f64::INFINITY, f64::min);
                assert!(best < 1e-9 || edge < 1e-9, "sample {i} off by {best}");
            }
        }
    }

    #[test]
    fn vertical_length_conserved_under_f() {
        let m = map35();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let s = random_seg(&mut rng, &m);
            let out = propagate(&s, Which::F, 4, &m);
            let lv: f64 = out.pieces.iter().map(|p| seg_lengths(&p.seg).1).sum();
            assert_abs_diff_eq!(lv, seg_lengths(&s).1, epsilon = 1e-12);
            assert_eq!(out.dropped, 0);
        }
    }

    #[test]
    fn lifted_positions_are_consistent() {
        let m = map35();
        let c = *m.config();
        // full-height vertical segment in S: F image spans exactly one unit
        let s = LiftedSegment::new(Point2::new(0.5, c.y0), Point2::new(0.5, c.y1), Cone::Vertical).unwrap();
        let out = propagate(&s, Which::F, 1, &m);
        let xs: Vec<f64> = out.pieces.iter().flat_map(|p| [p.lifted().p0.x, p.lifted().p1.x]).collect();
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_abs_diff_eq!(lo, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 1.5, epsilon = 1e-12);
    }
}
