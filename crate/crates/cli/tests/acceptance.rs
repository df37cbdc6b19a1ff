//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::time::{Duration, Instant};

use rand::Rng;

use ltm_cli::{parse_config, run_with, Command};
use ltm_core::certificate::{critical_alpha, ledger, threshold, threshold_comparison_table, Agreement, LedgerParams, RecordKind};
use ltm_core::diagnostics::{
    equidistribution, intersection_pairs, lyapunov, sample_returns, sample_s, stream_rng, IntersectionStatus, DEFAULT_SEED,
};
use ltm_core::geometry::{hausdorff, seg_lengths};
use ltm_core::segment::{chain_via_propagate, excision_sequence, limit_rectangle, rational_orbit, slope_step, ReturnCase};
use ltm_core::twist::{lam_alpha, wrap01, TwistConfig};
use ltm_core::{Cone, LiftedSegment, Point2};

struct Outcome {
    pass: bool,
    detail: String,
}

fn ok(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn c1_master() -> Outcome {
    let t = Instant::now();
    let flags = vec![("assert".to_string(), "true".to_string())];
    let cfg = parse_config(Command::Certify, None, &flags, None).unwrap();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_with(&cfg, &mut out, &mut err);
    let elapsed = t.elapsed();
    let out = String::from_utf8_lossy(&out);
    let a = critical_alpha(LedgerParams::default()).map(|r| r.alpha_star).unwrap_or(f64::NAN);
    let pass = code == 0 && out.contains("alpha_star=3.47") && within(a, 3.47, 0.01) && elapsed < Duration::from_secs(1);
    ok(pass, format!("alpha_star={a:.6} exit={code} time={elapsed:.2?}"))
}

fn c2_ledger() -> Outcome {
    let t = Instant::now();
    let mut worst = (f64::INFINITY, "");
    let mut pass = true;
    for r in ledger(LedgerParams::default()) {
        let m = r.margin(3.48);
        let good = if r.kind == RecordKind::BetaDefining { m >= -1e-9 } else { m > 0.0 };
        pass &= good;
        if m < worst.0 {
            worst = (m, r.id);
        }
    }
    let elapsed = t.elapsed();
    ok(pass && elapsed < Duration::from_millis(100), format!("smallest margin {:.3e} ({}) time={elapsed:.2?}", worst.0, worst.1))
}

fn c3_named() -> Outcome {
    let l = ledger(LedgerParams::default());
    let get = |id: &str| l.iter().find(|r| r.id == id).unwrap();
    let th = |id: &str| threshold(get(id), get(id).bracket).unwrap_or(f64::NAN);
    let (p, e47, e43, e44, e48) = (th("eqp"), th("eq47"), th("eq43"), th("eq44"), th("eq48"));
    let pass = within(p, 2.783, 0.005) && within(e47, 3.0, 1e-6) && within(e43, 3.47, 0.02) && within(e44, 3.18, 0.02) && within(e48, 3.07, 0.02);
    ok(pass, format!("eqp={p:.4} eq47={e47:.7} eq43={e43:.4} eq44={e44:.4} eq48={e48:.4}"))
}

fn c4_table() -> Outcome {
    let Ok(rep) = critical_alpha(LedgerParams::default()) else {
        return ok(false, "certificate failed");
    };
    let table = threshold_comparison_table(&rep);
    let listed = [2.69, 3.20, 2.75, 3.33, 2.54, 2.31];
    let mut notes = Vec::new();
    let mut all_present = true;
    for p in listed {
        match table.iter().find(|r| r.published == Some(p)) {
            Some(r) => {
                let c = r.computed.map(|c| format!("{c:.4}")).unwrap_or("-".into());
                let tag = if r.status == Agreement::Diverge { " diverges" } else { "" };
                notes.push(format!("{}:{c}/{p}{tag}", r.id));
            }
            None => all_present = false,
        }
    }
    let civ = rep.case_iv_threshold;
    let pass = all_present && (2.85..=3.00).contains(&civ) && civ < rep.alpha_star;
    ok(pass, format!("{} | caseiv={civ:.4} vs 2.95, below {:.4}", notes.join(" "), rep.alpha_star))
}

fn c5_hyperbolic() -> Outcome {
    let e = TwistConfig::symmetric(2.0).validate().unwrap().eigen().unwrap();
    let mut pass = within(e.lambda_plus, -1.0, 1e-12) && within(e.lambda_minus, -1.0, 1e-12);
    let mut rng = stream_rng(DEFAULT_SEED, 5);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let ab: f64 = rng.gen_range(4.0f64.next_up()..20.0);
        let a: f64 = rng.gen_range(1.2..5.0);
        let b = ab / a;
        let (h, w) = (1.0 / a, 1.0 / b);
        if h >= 0.98 || w >= 0.98 {
            continue;
        }
        let cfg = TwistConfig { alpha: a, beta: b, x0: 0.5 - w / 2.0, x1: 0.5 + w / 2.0, y0: 0.5 - h / 2.0, y1: 0.5 + h / 2.0, ..TwistConfig::symmetric(a) };
        let map = cfg.validate().unwrap();
        let e = map.eigen().unwrap();
        worst = worst.max((e.lambda_plus * e.lambda_minus - 1.0).abs());
        pass &= e.lambda_minus.abs() > 1.0;
        let r = map.rescale_to_equal().unwrap().eigen().unwrap();
        pass &= within(r.lambda_plus, e.lambda_plus, 1e-12) && within(r.lambda_minus, e.lambda_minus, 1e-12 * e.lambda_minus.abs());
    }
    pass &= worst < 1e-12;
    ok(pass, format!("lambda at product 4: {:.15}, {:.15}; max |product-1|={worst:.1e}", e.lambda_plus, e.lambda_minus))
}

fn c6_identities() -> Outcome {
    let p = LedgerParams::default();
    let mut worst: f64 = 0.0;
    for i in 0..=799 {
        let a = 2.01 + (10.0 - 2.01) * i as f64 / 799.0;
        let l = lam_alpha(a).unwrap();
        let b = p.beta(a);
        worst = worst.max((b * (a + l) - 2.0).abs()).max(((a + l) * (b - l.abs()) - 1.0).abs());
    }
    ok(worst < 1e-12, format!("max residual {worst:.1e} over 800 shears"))
}

fn c7_slopes() -> Outcome {
    let a = 3.47;
    let la = lam_alpha(a).unwrap();
    let mut l = 0.0;
    let mut errs = Vec::new();
    for _ in 0..30 {
        errs.push((l - la).abs());
        l = slope_step(l, a);
    }
    let ratio = errs[8] / errs[7];
    let pass = within(l, -0.3172, 1e-4) && within(ratio, la * la, 1e-3);
    ok(pass, format!("limit={l:.6} ratio={ratio:.6} L^2={:.6}", la * la))
}

fn c8_rectangle() -> Outcome {
    let map = TwistConfig::symmetric(3.5).validate().unwrap();
    let Ok(r) = limit_rectangle(&map) else {
        return ok(false, "no rectangle");
    };
    let la = lam_alpha(3.5).unwrap();
    let l = r.l;
    let pairs = [(l[0], l[4]), (l[1], l[5]), (l[2], l[6]), (l[3], l[7])];
    let eq = pairs.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let slope_err = r.segments.iter().map(|s| (s.slope - la).abs()).fold(0.0, f64::max);
    let geo_err = r
        .segments
        .iter()
        .map(|s| {
            let (h, v) = seg_lengths(s);
            match s.cone {
                Cone::Vertical => (h / v + la).abs(),
                Cone::Horizontal => (v / h + la).abs(),
            }
        })
        .fold(0.0, f64::max);
    let ab = r.segments[0];
    let start = LiftedSegment::new(Point2::new(ab.p0.x + 0.02, ab.p0.y), Point2::new(ab.p1.x, ab.p1.y - 0.02), Cone::Vertical).unwrap();
    let d = match chain_via_propagate(&map, &start, 200) {
        Ok(ch) => r.segments.iter().map(|t| hausdorff(&ch[200], t)).fold(f64::INFINITY, f64::min),
        Err(_) => f64::INFINITY,
    };
    let pass = eq < 1e-10 && slope_err < 1e-10 && geo_err < 1e-10 && d < 1e-6;
    ok(pass, format!("offset mismatch {eq:.1e}, slope error {:.1e}, hausdorff after 200 steps {d:.1e}", slope_err.max(geo_err)))
}

/// Horizontal extent after one shear of the part of `prev` walked from
/// `prev.p0` until the first sample inside S, by sampling points.
fn brute_force_step(map: &ltm_core::twist::TwistMap, prev: &LiftedSegment, samples: usize) -> f64 {
    let mut kept = Vec::new();
    for i in 0..=samples {
        let q = prev.at(i as f64 / samples as f64);
        if i > 0 && map.in_s(Point2::new(wrap01(q.x), q.y)) {
            break;
        }
        kept.push(q);
    }
    let c = map.config();
    let imgs: Vec<f64> = kept.iter().map(|q| q.x + map.f_rate() * (q.y - c.y0)).collect();
    let lo = imgs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = imgs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

fn c9_excision() -> Outcome {
    let map = TwistConfig::symmetric(3.5).validate().unwrap();
    let c = *map.config();
    let events = sample_returns(&map, ReturnCase::CaseII, 100, DEFAULT_SEED, 200_000);
    if events.len() < 100 {
        return ok(false, format!("only {} case II events", events.len()));
    }
    let n_samples = 4000;
    let (mut steps, mut worst_slack, mut worst_oracle): (usize, f64, f64) = (0, f64::INFINITY, 0.0);
    let (mut failures, mut cuts) = (0, 0);
    for ev in &events {
        let seq = rational_orbit(3.5, ev.i2.as_ref().unwrap(), (c.y0, c.y1), c.x1 + ev.copy as f64)
            .and_then(|o| excision_sequence(ev, &o, &map, 100_000));
        let Ok(seq) = seq else {
            failures += 1;
            continue;
        };
        let mut prev = seq.j0;
        for st in &seq.steps {
            cuts += st.excised.is_some() as usize;
            let oracle = brute_force_step(&map, &prev, n_samples);
            let res = seg_lengths(&prev).0 * (1.0 + 3.5 * prev.slope.abs()) / n_samples as f64;
            let gap = (oracle - st.l_h).abs();
            worst_oracle = worst_oracle.max(gap / res.max(1e-300));
            if gap > 2.0 * res + 1e-12 {
                failures += 1;
            }
            if st.m < seq.m2 {
                steps += 1;
                worst_slack = worst_slack.min(st.l_h - seq.bound);
                if st.l_h < seq.bound - 1e-12 || oracle < seq.bound - 2.0 * res - 1e-12 {
                    failures += 1;
                }
            }
            prev = st.j;
        }
    }
    ok(
        failures == 0,
        format!("100 events, {steps} pre-insertion steps, {cuts} excisions, min slack {worst_slack:.3e}, oracle gap <= {worst_oracle:.2} sample widths, {failures} failures"),
    )
}

fn c10_intersections() -> Outcome {
    let t = Instant::now();
    let map = TwistConfig::symmetric(3.5).validate().unwrap();
    let res = intersection_pairs(&map, 100, 1000, DEFAULT_SEED);
    let found = res.iter().filter(|p| p.result.status == IntersectionStatus::Found).count();
    let elapsed = t.elapsed();
    let deepest = res.iter().map(|p| p.result.m.max(p.result.n)).max().unwrap_or(0);
    ok(found >= 95 && elapsed < Duration::from_secs(60), format!("found {found}/100, deepest {deepest} rounds, time={elapsed:.2?}"))
}

fn c11_diagnostics() -> Outcome {
    let map = TwistConfig::symmetric(3.5).validate().unwrap();
    let lyap: Vec<f64> = (0..10)
        .map(|s| {
            let p = sample_s(&map, &mut stream_rng(DEFAULT_SEED, s));
            lyapunov(&map, p, 100_000, s)
        })
        .collect();
    let min_l = lyap.iter().cloned().fold(f64::INFINITY, f64::min);
    let short = equidistribution(&map, None, 10_000, 10, DEFAULT_SEED);
    let long = equidistribution(&map, None, 1_000_000, 10, DEFAULT_SEED);
    let again = equidistribution(&map, None, 1_000_000, 10, DEFAULT_SEED);
    let pass = min_l > 0.0 && long.discrepancy < short.discrepancy && long == again;
    ok(
        pass,
        format!(
            "min lyapunov {min_l:.4}, discrepancy {:.2e} -> {:.2e}, rerun identical={}",
            short.discrepancy,
            long.discrepancy,
            long == again
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("master critical shear", c1_master),
        ("ledger margins at 3.48", c2_ledger),
        ("named thresholds", c3_named),
        ("threshold comparison and case iv", c4_table),
        ("hyperbolicity and rescaling", c5_hyperbolic),
        ("growth constant identities", c6_identities),
        ("slope recursion", c7_slopes),
        ("limit rectangle", c8_rectangle),
        ("excision bound", c9_excision),
        ("intersection experiment", c10_intersections),
        ("orbit diagnostics", c11_diagnostics),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!("{} {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
