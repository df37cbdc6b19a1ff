use ltm_core::diagnostics::{sample_returns, DEFAULT_SEED};
use ltm_core::geometry::{hausdorff, seg_lengths};
use ltm_core::segment::{
    chain_via_propagate, excision_sequence, limit_rectangle, propagate, rational_orbit, slope_step, ReturnCase, Which,
};
use ltm_core::twist::{lam_alpha, TwistConfig};
use ltm_core::{Cone, LiftedSegment, Point2};

#[test]
fn stored_slopes_follow_the_recursion() {
    let map = TwistConfig::symmetric(3.47).validate().unwrap();
    let c = *map.config();
    let l0 = -0.05;
    let seg = LiftedSegment::new(Point2::new(0.45, c.y0 + 0.001), Point2::new(0.45 + l0 * 0.02, c.y0 + 0.021), Cone::Vertical).unwrap();
    let after_f = propagate(&seg, Which::F, 1, &map);
    let l1 = slope_step(l0, 3.47);
    for p in &after_f.pieces {
        assert_eq!(p.seg.cone, Cone::Horizontal);
        assert!((p.seg.slope - l1).abs() < 1e-10);
    }
    let mut dropped = 0;
    let after_g = ltm_core::segment::step(&after_f.pieces, Which::G, &map, &mut dropped);
    let l2 = slope_step(l1, 3.47);
    let mut sheared = 0;
    for p in after_g.iter().filter(|p| p.seg.cone == Cone::Vertical) {
        assert!((p.seg.slope - l2).abs() < 1e-10);
        sheared += 1;
    }
    assert!(sheared > 0);
    let la = lam_alpha(3.47).unwrap();
    assert!(after_g.iter().all(|p| p.seg.slope >= la - 1e-12 && p.seg.slope <= 0.0));
}

#[test]
fn rectangle_is_a_fixed_set_of_propagation() {
    let map = TwistConfig::symmetric(3.6).validate().unwrap();
    let r = limit_rectangle(&map).unwrap();
    let chain = chain_via_propagate(&map, &r.segments[0], 8).unwrap();
    for (i, s) in chain.iter().enumerate() {
        let d = r.segments.iter().map(|t| hausdorff(s, t)).fold(f64::INFINITY, f64::min);
        assert!(d < 1e-8, "step {i}: {d}");
    }
}

#[test]
fn perturbed_chain_settles_on_the_rectangle() {
    for alpha in [3.2, 3.5, 5.0] {
        let map = TwistConfig::symmetric(alpha).validate().unwrap();
        let r = limit_rectangle(&map).unwrap();
        let ab = r.segments[0];
        for eps in [1e-3, 0.02] {
            let start = LiftedSegment::new(Point2::new(ab.p0.x + eps, ab.p0.y), Point2::new(ab.p1.x, ab.p1.y - eps), Cone::Vertical).unwrap();
            let chain = chain_via_propagate(&map, &start, 200).unwrap();
            let last = chain[200];
            let d = r.segments.iter().map(|t| hausdorff(&last, t)).fold(f64::INFINITY, f64::min);
            assert!(d < 1e-6, "alpha {alpha} eps {eps}: {d}");
        }
    }
}

#[test]
fn excision_bound_over_random_returns() {
    let map = TwistConfig::symmetric(3.5).validate().unwrap();
    let c = *map.config();
    let events = sample_returns(&map, ReturnCase::CaseII, 100, DEFAULT_SEED, 200_000);
    assert_eq!(events.len(), 100);
    for ev in &events {
        let orbit = rational_orbit(3.5, ev.i2.as_ref().unwrap(), (c.y0, c.y1), c.x1 + ev.copy as f64).unwrap();
        let seq = excision_sequence(ev, &orbit, &map, 100_000).unwrap();
        assert!(seq.inserted_len > 0.0);
        let mut prev = seq.j0;
        for st in &seq.steps {
            if st.m < seq.m2 {
                assert!(st.l_h >= seq.bound - 1e-12, "m {} l_h {} bound {}", st.m, st.l_h, seq.bound);
            }
            // the kept part grows affinely: l_h' = l_h + alpha l_v, l_v unchanged
            let (ph, pv) = seg_lengths(&prev);
            let (kh, kv) = match st.excised {
                Some(x) => (ph - seg_lengths(&x).0, pv - seg_lengths(&x).1),
                None => (ph, pv),
            };
            assert!((st.l_h - (kh + 3.5 * kv)).abs() < 1e-10, "m {}", st.m);
            assert!((st.l_v - kv).abs() < 1e-10);
            prev = st.j;
        }
    }
}
