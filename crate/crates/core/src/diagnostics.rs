//! Empirical checks on the dynamics: Lyapunov exponents, equidistribution
//! of orbits and the stable/unstable segment intersection experiment.
//!
//! Randomness comes from ChaCha streams keyed by `(seed, stream)`, so
//! parallel runs give the same numbers regardless of the worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::geometry::{cut_segment_at_rect, segments_intersect, Cone, LiftedSegment, Point2, Rect};
use crate::segment::{first_return, normalize, step, Piece, ReturnCase, ReturnEvent, Which};
use crate::twist::{lam_alpha, wrap01, CompositionOrder, Mat2, TwistMap};

pub const DEFAULT_SEED: u64 = 0x5EED;
/// Length of the seed segments of the intersection experiment.
pub const SEED_SEGMENT_LEN: f64 = 1e-3;
/// Per-side piece cap of the intersection experiment.
pub const PIECE_CAP: usize = 10_000;

/// Deterministic generator for one stream of a run.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Uniform point of the union of the two strips.
pub fn sample_domain(map: &TwistMap, rng: &mut ChaCha8Rng) -> Point2 {
    loop {
        let p = Point2::new(rng.gen(), rng.gen());
        if map.in_h(p) || map.in_v(p) {
            return p;
        }
    }
}

/// Uniform point of S.
pub fn sample_s(map: &TwistMap, rng: &mut ChaCha8Rng) -> Point2 {
    let c = map.config();
    Point2::new(rng.gen_range(c.x0..c.x1), rng.gen_range(c.y0..c.y1))
}

/// Mean log growth of a tangent vector under a sequence of matrices,
/// renormalising after every step.
pub fn lyapunov_along<I: IntoIterator<Item = Mat2>>(mats: I, v0: (f64, f64)) -> f64 {
    let mut v = v0;
    let norm = v.0.hypot(v.1);
    v = (v.0 / norm, v.1 / norm);
    let mut sum = 0.0;
    let mut n = 0usize;
    for a in mats {
        let w = (a[0][0] * v.0 + a[0][1] * v.1, a[1][0] * v.0 + a[1][1] * v.1);
        let r = w.0.hypot(w.1);
        sum += r.ln();
        v = (w.0 / r, w.1 / r);
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// One step of the map together with its local derivative.
fn phi_with_derivative(map: &TwistMap, p: Point2) -> (Point2, Mat2) {
    let id: Mat2 = [[1.0, 0.0], [0.0, 1.0]];
    let f = |q: Point2| (map.f_torus(q), if map.in_h(q) { map.df() } else { id });
    let g = |q: Point2| (map.g_torus(q), if map.in_v(q) { map.dg() } else { id });
    let ((q, a), second): ((Point2, Mat2), &dyn Fn(Point2) -> (Point2, Mat2)) = match map.order() {
        CompositionOrder::GAfterF => (f(p), &g),
        CompositionOrder::FAfterG => (g(p), &f),
    };
    let (r, b) = second(q);
    (r, crate::twist::mat_mul(&b, &a))
}

struct OrbitDerivatives<'a> {
    map: &'a TwistMap,
    p: Point2,
    left: usize,
}

impl Iterator for OrbitDerivatives<'_> {
    type Item = Mat2;
    fn next(&mut self) -> Option<Mat2> {
        if self.left == 0 {
            return None;
        }
        self.left -= 1;
        let (q, d) = phi_with_derivative(self.map, self.p);
        self.p = q;
        Some(d)
    }
}

fn random_unit(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    (t.cos(), t.sin())
}

/// Top Lyapunov exponent along the orbit of `p0`, in nats per iterate. The
/// seed fixes the initial tangent vector.
pub fn lyapunov(map: &TwistMap, p0: Point2, n: usize, seed: u64) -> f64 {
    let mut rng = stream_rng(seed, 0);
    let v0 = random_unit(&mut rng);
    lyapunov_along(OrbitDerivatives { map, p: p0, left: n }, v0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitStats {
    pub n: usize,
    pub lyapunov: f64,
    /// Largest gap over grid cells between visit frequency and cell measure.
    pub discrepancy: f64,
    pub grid: usize,
    pub seed: u64,
    pub p0: Point2,
}

/// Area of `cell` inside the union of the strips.
fn domain_area(map: &TwistMap, cell: &Rect) -> f64 {
    let c = map.config();
    let h = Rect { x_lo: 0.0, x_hi: 1.0, y_lo: c.y0, y_hi: c.y1 };
    let v = Rect { x_lo: c.x0, x_hi: c.x1, y_lo: 0.0, y_hi: 1.0 };
    cell.overlap_area(&h) + cell.overlap_area(&v) - cell.overlap_area(&map.s_rect())
}

/// Visit statistics of one orbit on a `grid x grid` partition, cells
/// weighted by their share of the strips' area. `p0 = None` draws the
/// starting point from the seed.
pub fn equidistribution(map: &TwistMap, p0: Option<Point2>, n: usize, grid: usize, seed: u64) -> OrbitStats {
    let mut rng = stream_rng(seed, 0);
    let v0 = random_unit(&mut rng);
    let p0 = p0.unwrap_or_else(|| sample_domain(map, &mut rng));
    let mut counts = vec![0u64; grid * grid];
    let g = grid as f64;
    let mut p = p0;
    let mut v = v0;
    let mut log_sum = 0.0;
    for _ in 0..n {
        let ix = ((p.x * g) as usize).min(grid - 1);
        let iy = ((p.y * g) as usize).min(grid - 1);
        counts[iy * grid + ix] += 1;
        let (q, a) = phi_with_derivative(map, p);
        let w = (a[0][0] * v.0 + a[0][1] * v.1, a[1][0] * v.0 + a[1][1] * v.1);
        let r = w.0.hypot(w.1);
        log_sum += r.ln();
        v = (w.0 / r, w.1 / r);
        p = q;
    }
    let total = domain_area(map, &Rect { x_lo: 0.0, x_hi: 1.0, y_lo: 0.0, y_hi: 1.0 });
    let mut disc: f64 = 0.0;
    for iy in 0..grid {
        for ix in 0..grid {
            let cell = Rect { x_lo: ix as f64 / g, x_hi: (ix + 1) as f64 / g, y_lo: iy as f64 / g, y_hi: (iy + 1) as f64 / g };
            let mu = domain_area(map, &cell) / total;
            let freq = counts[iy * grid + ix] as f64 / n as f64;
            disc = disc.max((freq - mu).abs());
        }
    }
    OrbitStats { n, lyapunov: if n > 0 { log_sum / n as f64 } else { 0.0 }, discrepancy: disc, grid, seed, p0 }
}

/// Runs `runs` independent orbits, stream `i` seeded by `(seed, i)`.
pub fn equidistribution_runs(map: &TwistMap, n: usize, grid: usize, seed: u64, runs: usize) -> Vec<OrbitStats> {
    (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let s: u64 = rng.gen();
            equidistribution(map, None, n, grid, s)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntersectionStatus {
    Found,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntersectionResult {
    /// Forward steps applied to the unstable segment.
    pub m: usize,
    /// Backward steps applied to the stable segment.
    pub n: usize,
    pub point: Option<Point2>,
    pub status: IntersectionStatus,
}

fn seed_segment(map: &TwistMap, at: Point2, dir: (f64, f64), cone: Cone) -> Option<LiftedSegment> {
    let norm = dir.0.hypot(dir.1);
    let h = 0.5 * SEED_SEGMENT_LEN / norm;
    let d = Point2::new(dir.0 * h, dir.1 * h);
    let s = LiftedSegment::new(at - d, at + d, cone).ok()?;
    cut_segment_at_rect(&s, &map.s_rect()).0.into_iter().next()
}

/// Unstable and stable seed directions, as `(dx, dy)`.
fn seed_directions(map: &TwistMap) -> ((f64, f64), (f64, f64)) {
    match map.eigen() {
        Ok(e) => (e.xi_expanding, e.xi_contracting),
        // below hyperbolicity there are no real eigendirections; fall back to the axes
        Err(_) => ((0.0, 1.0), (1.0, 0.0)),
    }
}

fn cap(pieces: &mut Vec<Piece>) {
    if pieces.len() > PIECE_CAP {
        pieces.sort_by(|a, b| b.seg.length().total_cmp(&a.seg.length()));
        pieces.truncate(PIECE_CAP);
    }
}

/// Spatial hash of segments over S for the pairwise test.
struct Buckets {
    rect: Rect,
    n: usize,
    cells: Vec<Vec<usize>>,
}

impl Buckets {
    fn new(rect: Rect, n: usize) -> Self {
        Buckets { rect, n, cells: vec![Vec::new(); n * n] }
    }

    fn range(&self, s: &LiftedSegment) -> (usize, usize, usize, usize) {
        let (lo, hi) = s.bbox();
        let f = |v: f64, a: f64, w: f64| (((v - a) / w * self.n as f64).floor().max(0.0) as usize).min(self.n - 1);
        let (w, h) = (self.rect.width(), self.rect.height());
        (
            f(lo.x - 1e-9, self.rect.x_lo, w),
            f(hi.x + 1e-9, self.rect.x_lo, w),
            f(lo.y - 1e-9, self.rect.y_lo, h),
            f(hi.y + 1e-9, self.rect.y_lo, h),
        )
    }

    fn insert(&mut self, i: usize, s: &LiftedSegment) {
        let (x0, x1, y0, y1) = self.range(s);
        for y in y0..=y1 {
            for x in x0..=x1 {
                self.cells[y * self.n + x].push(i);
            }
        }
    }
}

fn first_hit(fwd: &[LiftedSegment], bwd: &[LiftedSegment], rect: Rect) -> Option<Point2> {
    if fwd.is_empty() || bwd.is_empty() {
        return None;
    }
    let n = ((fwd.len() as f64).sqrt() as usize).clamp(1, 128);
    let mut b = Buckets::new(rect, n);
    for (i, s) in fwd.iter().enumerate() {
        b.insert(i, s);
    }
    let mut best: Option<(usize, usize, Point2)> = None;
    for (j, s) in bwd.iter().enumerate() {
        let (x0, x1, y0, y1) = b.range(s);
        let (slo, shi) = s.bbox();
        for y in y0..=y1 {
            for x in x0..=x1 {
                for &i in &b.cells[y * n + x] {
                    let (flo, fhi) = fwd[i].bbox();
                    if flo.x > shi.x + 1e-12 || fhi.x < slo.x - 1e-12 || flo.y > shi.y + 1e-12 || fhi.y < slo.y - 1e-12 {
                        continue;
                    }
                    if let Some(p) = segments_intersect(&fwd[i], s) {
                        // keep the lexicographically first pair so the answer is order independent
                        if best.map_or(true, |(bi, bj, _)| (i, j) < (bi, bj)) {
                            best = Some((i, j, p));
                        }
                    }
                }
            }
        }
    }
    best.map(|(_, _, p)| p)
}

/// Grows an unstable segment through `x` forward and a stable segment through
/// `y` backward, one step each per round, until pieces of the two inside S
/// cross or `budget` rounds pass.
///
/// Backward iterates are computed as forward iterates in the frame mirrored
/// about the vertical midline of S, where the inverse map becomes the
/// composition of the same shears in the opposite order.
pub fn intersection_experiment(map: &TwistMap, x: Point2, y: Point2, budget: usize) -> IntersectionResult {
    let flip = !map.is_canonical();
    let refl_x = |p: Point2| Point2::new(wrap01(1.0 - p.x), p.y);
    let (map, x, y) = if flip { (map.canonical(), refl_x(x), refl_x(y)) } else { (*map, x, y) };
    let c = *map.config();
    let mirror = |p: Point2| Point2::new(c.x0 + c.x1 - p.x, p.y);
    let mirror_seg = |s: &LiftedSegment| LiftedSegment { p0: mirror(s.p0), p1: mirror(s.p1), ..*s };
    let back_map = map.with_order(map.order().flipped());
    let s_rect = map.s_rect();
    let timeout = IntersectionResult { m: 0, n: 0, point: None, status: IntersectionStatus::Timeout };

    let (du, ds) = seed_directions(&map);
    let (Some(gu), Some(gs)) = (seed_segment(&map, x, du, Cone::Vertical), seed_segment(&map, y, ds, Cone::Horizontal)) else {
        return timeout;
    };
    let gs_m = LiftedSegment::new(mirror(gs.p0), mirror(gs.p1), Cone::Horizontal).unwrap_or(gs);

    let mut dropped = 0;
    let mut fwd = normalize(&gu, &map).pieces;
    let mut bwd = normalize(&gs_m, &map).pieces;
    let in_s = |ps: &[Piece]| -> Vec<LiftedSegment> { ps.iter().filter(|p| p.in_s(&map)).map(|p| p.seg).collect() };
    let in_s_back = |ps: &[Piece]| -> Vec<LiftedSegment> {
        ps.iter().filter(|p| p.in_s(&map)).map(|p| mirror_seg(&p.seg)).collect()
    };
    let found = |m: usize, n: usize, p: Point2| IntersectionResult {
        m,
        n,
        point: Some(if flip { refl_x(p) } else { p }),
        status: IntersectionStatus::Found,
    };

    let (mut fs, mut bs) = (in_s(&fwd), in_s_back(&bwd));
    if let Some(p) = first_hit(&fs, &bs, s_rect) {
        return found(0, 0, p);
    }
    let (mut m, mut n) = (0, 0);
    for _ in 0..budget {
        fwd = step(&fwd, Which::Phi, &map, &mut dropped);
        cap(&mut fwd);
        m += 1;
        fs = in_s(&fwd);
        if let Some(p) = first_hit(&fs, &bs, s_rect) {
            return found(m, n, p);
        }
        bwd = step(&bwd, Which::Phi, &back_map, &mut dropped);
        cap(&mut bwd);
        n += 1;
        bs = in_s_back(&bwd);
        if let Some(p) = first_hit(&fs, &bs, s_rect) {
            return found(m, n, p);
        }
    }
    IntersectionResult { m, n, ..timeout }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairOutcome {
    pub index: usize,
    pub x: Point2,
    pub y: Point2,
    pub result: IntersectionResult,
}

/// Runs the experiment on `pairs` random pairs of S, pair `i` drawn from
/// stream `i` of `seed`.
pub fn intersection_pairs(map: &TwistMap, pairs: usize, budget: usize, seed: u64) -> Vec<PairOutcome> {
    let canon = map.canonical();
    (0..pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let mut x = sample_s(&canon, &mut rng);
            let mut y = sample_s(&canon, &mut rng);
            if !map.is_canonical() {
                x = Point2::new(wrap01(1.0 - x.x), x.y);
                y = Point2::new(wrap01(1.0 - y.x), y.y);
            }
            PairOutcome { index: i, x, y, result: intersection_experiment(map, x, y, budget) }
        })
        .collect()
}

/// Random vertical-cone segments of S whose first return under `F` is of
/// the given case, drawn until `count` are found or `max_tries` run out.
/// Slopes are uniform in the cone and vertical lengths uniform up to the
/// height of S.
pub fn sample_returns(map: &TwistMap, case: ReturnCase, count: usize, seed: u64, max_tries: usize) -> Vec<ReturnEvent> {
    let c = *map.config();
    let la = lam_alpha(map.f_rate().abs()).unwrap_or(-1.0);
    let mut rng = stream_rng(seed, 0);
    let mut out = Vec::new();
    for _ in 0..max_tries {
        if out.len() == count {
            break;
        }
        let slope = rng.gen_range(la..=0.0);
        let lv = rng.gen_range(1e-3..(c.y1 - c.y0));
        let y = rng.gen_range(c.y0..(c.y1 - lv));
        let dx = slope * lv;
        let x = rng.gen_range(c.x0.max(c.x0 - dx)..c.x1.min(c.x1 - dx));
        let Ok(seg) = LiftedSegment::new(Point2::new(x, y), Point2::new(x + dx, y + lv), Cone::Vertical) else {
            continue;
        };
        if let Ok(ev) = first_return(&seg, Which::F, map, 10_000) {
            if ev.case_id == case {
                out.push(ev);
            }
        }
    }
    out
}
