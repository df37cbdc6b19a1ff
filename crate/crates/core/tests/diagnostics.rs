use ltm_core::diagnostics::{
    equidistribution, intersection_experiment, intersection_pairs, lyapunov, sample_s, stream_rng, IntersectionStatus, DEFAULT_SEED,
};
use ltm_core::twist::{circle_diff, TwistConfig};
use ltm_core::Point2;

fn line_dist(p: Point2, at: Point2, d: (f64, f64)) -> f64 {
    let v = (circle_diff(p.x, at.x), circle_diff(p.y, at.y));
    (v.0 * d.1 - v.1 * d.0).abs() / d.0.hypot(d.1)
}

#[test]
fn found_points_map_back_onto_both_seeds() {
    let map = TwistConfig::symmetric(3.5).validate().unwrap();
    let e = map.eigen().unwrap();
    let pairs = intersection_pairs(&map, 30, 1000, 17);
    let mut checked = 0;
    for p in &pairs {
        let r = p.result;
        assert_eq!(r.status, IntersectionStatus::Found);
        let pt = r.point.unwrap();
        assert!(map.in_s(pt));
        // rounding grows by |lambda| ~ 10 per iterate; past ten steps a double cannot be re-substituted
        if r.m.max(r.n) > 10 {
            continue;
        }
        let mut back = pt;
        for _ in 0..r.m {
            back = map.phi_inv_torus(back);
        }
        let mut fwd = pt;
        for _ in 0..r.n {
            fwd = map.phi_torus(fwd);
        }
        assert!(line_dist(back, p.x, e.xi_expanding) < 1e-6, "pair {}", p.index);
        assert!(line_dist(fwd, p.y, e.xi_contracting) < 1e-6, "pair {}", p.index);
        checked += 1;
    }
    assert!(checked >= 10, "{checked}");
}

#[test]
fn below_hyperbolicity_runs_out_of_budget() {
    let map = TwistConfig::symmetric(1.5).validate().unwrap();
    let pairs = intersection_pairs(&map, 8, 40, DEFAULT_SEED);
    let timeouts = pairs.iter().filter(|p| p.result.status == IntersectionStatus::Timeout).count();
    assert!(timeouts >= 4, "{timeouts} of 8 timed out");
}

#[test]
fn seed_through_one_point_meets_itself() {
    let map = TwistConfig::symmetric(4.2).validate().unwrap();
    let p = Point2::new(0.47, 0.53);
    let r = intersection_experiment(&map, p, p, 1);
    assert_eq!((r.status, r.m, r.n), (IntersectionStatus::Found, 0, 0));
}

#[test]
fn lyapunov_agrees_across_seeds() {
    let map = TwistConfig::symmetric(3.5).validate().unwrap();
    let v: Vec<f64> = (0..10)
        .map(|s| {
            let p = sample_s(&map, &mut stream_rng(DEFAULT_SEED, s));
            lyapunov(&map, p, 100_000, s)
        })
        .collect();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean > 0.0);
    for x in &v {
        assert!((x - mean).abs() <= 0.05 * mean, "{x} vs mean {mean}");
    }
}

#[test]
fn longer_orbits_spread_more_evenly() {
    let map = TwistConfig::symmetric(3.5).validate().unwrap();
    let short = equidistribution(&map, None, 10_000, 10, 21);
    let long = equidistribution(&map, None, 1_000_000, 10, 21);
    assert!(long.discrepancy < short.discrepancy);
    assert!((0.0..=1.0).contains(&long.discrepancy));
    let other = equidistribution(&map, None, 1_000_000, 10, 22);
    let ratio = long.discrepancy.max(other.discrepancy) / long.discrepancy.min(other.discrepancy);
    assert!(ratio < 3.0, "{ratio}");
    assert_eq!(long, equidistribution(&map, None, 1_000_000, 10, 21));
}
