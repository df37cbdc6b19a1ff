//! Run configuration, report writers and the exit-code contract of `ltm`.
//!
//! A run is described by `key=value` pairs. They come from an optional
//! config file, then `LTM_SEED`, then command-line flags, each layer
//! overriding the previous one.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use ltm_core::certificate::{critical_alpha, threshold_comparison_table, CertificateReport, LedgerParams, ThresholdError};
use ltm_core::diagnostics::{equidistribution_runs, intersection_pairs, IntersectionStatus, DEFAULT_SEED};
use ltm_core::segment::{chain_via_propagate, limit_rectangle, normalize, step, SegmentError, Which};
use ltm_core::twist::{CompositionOrder, TwistConfig, TwistError, TwistMap};
use ltm_core::{Cone, LiftedSegment, Point2, Rect};

/// Strip bounds within this distance of an exact twist are snapped onto it.
pub const SNAP_TOL: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid twist: {0}")]
    Validation(#[from] TwistError),
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("certificate: {0}")]
    Certificate(#[from] ThresholdError),
    #[error("segments: {0}")]
    Segment(#[from] SegmentError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Certify,
    Thresholds,
    Simulate,
    Segments,
    Intersect,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Certify => "certify",
            Command::Thresholds => "thresholds",
            Command::Simulate => "simulate",
            Command::Segments => "segments",
            Command::Intersect => "intersect",
        }
    }
}

/// What `segments` traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trace {
    /// The corner chain of the limit rectangle.
    Rectangle,
    /// A short expanding segment through the centre of S, grown by the map.
    Growth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub twist: TwistConfig,
    pub ledger: LedgerParams,
    pub n: usize,
    pub grid: usize,
    pub runs: usize,
    pub budget: usize,
    pub pairs: usize,
    pub steps: usize,
    pub trace: Trace,
    pub seed: u64,
    pub out_path: Option<PathBuf>,
    pub svg: bool,
    pub assert: bool,
}

const KEYS: &[&str] = &[
    "alpha", "beta", "k", "m", "x0", "x1", "y0", "y1", "order", "delta", "kappa", "n", "grid", "runs", "budget", "pairs", "steps",
    "trace", "seed", "out", "svg", "assert",
];

/// Reads `key=value` lines. Blank lines and `#` comments are skipped.
pub fn parse_kv(text: &str) -> Result<Vec<(usize, String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CliError::Parse { line: i + 1, msg: format!("expected key=value, got {line:?}") })?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(CliError::Parse { line: i + 1, msg: format!("unknown key {k:?}") });
        }
        out.push((i + 1, k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T, CliError> {
    v.parse().map_err(|_| CliError::Parse { line, msg: format!("bad value {v:?} for {key}") })
}

fn parse_seed(line: usize, v: &str) -> Result<u64, CliError> {
    let r = match v.strip_prefix("0x").or_else(|| v.strip_prefix("0X")) {
        Some(h) => u64::from_str_radix(h, 16),
        None => v.parse(),
    };
    r.map_err(|_| CliError::Parse { line, msg: format!("bad seed {v:?}") })
}

fn parse_bool(line: usize, key: &str, v: &str) -> Result<bool, CliError> {
    match v {
        "1" | "true" | "yes" => Ok(true),
        "0" | "false" | "no" => Ok(false),
        _ => Err(CliError::Parse { line, msg: format!("bad value {v:?} for {key}") }),
    }
}

/// Builds a validated configuration. `file` is the text of a config file,
/// `env_seed` is the value of `LTM_SEED` and `flags` are `key=value`
/// overrides from the command line (reported as line 0 on error).
pub fn parse_config(command: Command, file: Option<&str>, flags: &[(String, String)], env_seed: Option<&str>) -> Result<RunConfig, CliError> {
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    if let Some(text) = file {
        for (line, k, v) in parse_kv(text)? {
            entries.insert(k, (line, v));
        }
    }
    if let Some(s) = env_seed {
        entries.insert("seed".into(), (0, s.to_string()));
    }
    for (k, v) in flags {
        if !KEYS.contains(&k.as_str()) {
            return Err(CliError::Parse { line: 0, msg: format!("unknown key {k:?}") });
        }
        entries.insert(k.clone(), (0, v.clone()));
    }
    let get = |k: &str| entries.get(k).map(|(l, v)| (*l, v.as_str()));
    let f = |k: &str| -> Result<Option<f64>, CliError> { get(k).map(|(l, v)| num::<f64>(l, k, v)).transpose() };
    let u = |k: &str, d: usize| -> Result<usize, CliError> {
        let v = get(k).map(|(l, v)| num::<usize>(l, k, v)).transpose()?.unwrap_or(d);
        if v == 0 {
            let line = get(k).map_or(0, |(l, _)| l);
            return Err(CliError::Parse { line, msg: format!("{k} must be positive") });
        }
        Ok(v)
    };

    let alpha = f("alpha")?.unwrap_or(3.5);
    let beta = f("beta")?.unwrap_or(alpha);
    let k = get("k").map(|(l, v)| num::<i32>(l, "k", v)).transpose()?.unwrap_or(1);
    let m = get("m").map(|(l, v)| num::<i32>(l, "m", v)).transpose()?.unwrap_or(-1);
    let (h, w) = (k.unsigned_abs() as f64 / alpha, m.unsigned_abs() as f64 / beta);
    let mut y0 = f("y0")?.unwrap_or(0.5 - h / 2.0);
    let mut y1 = f("y1")?.unwrap_or(y0 + h);
    if get("y0").is_none() && get("y1").is_some() {
        y0 = y1 - h;
    }
    let mut x0 = f("x0")?.unwrap_or(0.5 - w / 2.0);
    let mut x1 = f("x1")?.unwrap_or(x0 + w);
    if get("x0").is_none() && get("x1").is_some() {
        x0 = x1 - w;
    }
    // decimal configs cannot hit the twist exactly; pull near misses onto it
    if (alpha * (y1 - y0) - k.unsigned_abs() as f64).abs() <= SNAP_TOL {
        y1 = y0 + h;
    }
    if (beta * (x1 - x0) - m.unsigned_abs() as f64).abs() <= SNAP_TOL {
        x1 = x0 + w;
    }
    let order = match get("order") {
        None | Some((_, "g_after_f")) => CompositionOrder::GAfterF,
        Some((_, "f_after_g")) => CompositionOrder::FAfterG,
        Some((l, v)) => return Err(CliError::Parse { line: l, msg: format!("order must be g_after_f or f_after_g, got {v:?}") }),
    };
    let twist = TwistConfig { alpha, beta, k, m, x0, x1, y0, y1, order };
    twist.validate()?;

    let ledger = LedgerParams { delta: f("delta")?.unwrap_or(1.0), kappa: f("kappa")?.unwrap_or(2.0 / 3.0) };
    for (key, v) in [("delta", ledger.delta), ("kappa", ledger.kappa)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(CliError::Parse { line: get(key).map_or(0, |(l, _)| l), msg: format!("{key} must be positive") });
        }
    }
    let trace = match get("trace") {
        None | Some((_, "rectangle")) => Trace::Rectangle,
        Some((_, "growth")) => Trace::Growth,
        Some((l, v)) => return Err(CliError::Parse { line: l, msg: format!("trace must be rectangle or growth, got {v:?}") }),
    };
    Ok(RunConfig {
        command,
        twist,
        ledger,
        n: u("n", 100_000)?,
        grid: u("grid", 10)?,
        runs: u("runs", 4)?,
        budget: u("budget", 1000)?,
        pairs: u("pairs", 100)?,
        steps: u("steps", 8)?,
        trace,
        seed: get("seed").map(|(l, v)| parse_seed(l, v)).transpose()?.unwrap_or(DEFAULT_SEED),
        out_path: get("out").map(|(_, v)| PathBuf::from(v)),
        svg: get("svg").map(|(l, v)| parse_bool(l, "svg", v)).transpose()?.unwrap_or(false),
        assert: get("assert").map(|(l, v)| parse_bool(l, "assert", v)).transpose()?.unwrap_or(false),
    })
}

/// Full-precision float field; empty for missing values.
fn fnum(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

fn emit_csv(cfg: &RunConfig, header: &[&str], rows: &[Vec<String>], stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    match &cfg.out_path {
        Some(p) => fs::write(p, bytes)?,
        None => stdout.write_all(&bytes)?,
    }
    Ok(())
}

pub fn certificate_rows(rep: &CertificateReport) -> Vec<Vec<String>> {
    rep.per_inequality
        .iter()
        .map(|r| {
            vec![
                r.id.to_string(),
                r.anchor.to_string(),
                fnum(r.computed_threshold),
                fnum(r.published_threshold),
                fnum(Some(r.margin(rep.alpha_star))),
                r.binding.to_string(),
                r.flag.map(|f| f.as_str().to_string()).unwrap_or_default(),
            ]
        })
        .collect()
}

/// Runs one command, writing reports to `stdout` and messages to `stderr`.
/// Returns the process exit code.
pub fn run_with(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    match execute(cfg, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

pub fn run(cfg: &RunConfig) -> i32 {
    run_with(cfg, &mut io::stdout().lock(), &mut io::stderr().lock())
}

fn execute(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    writeln!(out, "# ltm {} seed={:#x}", cfg.command.name(), cfg.seed)?;
    let map = cfg.twist.validate()?;
    match cfg.command {
        Command::Certify => certify(cfg, out),
        Command::Thresholds => {
            let rep = critical_alpha(cfg.ledger)?;
            let rows: Vec<Vec<String>> = threshold_comparison_table(&rep)
                .into_iter()
                .map(|r| {
                    vec![
                        r.id.to_string(),
                        fnum(r.computed),
                        fnum(r.published),
                        fnum(r.diff),
                        r.status.as_str().to_string(),
                        r.flag.map(|f| f.as_str().to_string()).unwrap_or_default(),
                    ]
                })
                .collect();
            writeln!(out, "rows={}", rows.len())?;
            emit_csv(cfg, &["id", "computed_threshold", "published_threshold", "difference", "status", "flag"], &rows, out)?;
            Ok(0)
        }
        Command::Simulate => {
            let stats = equidistribution_runs(&map, cfg.n, cfg.grid, cfg.seed, cfg.runs);
            let rows: Vec<Vec<String>> = stats
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    vec![
                        i.to_string(),
                        format!("{:#x}", s.seed),
                        s.n.to_string(),
                        s.grid.to_string(),
                        fnum(Some(s.p0.x)),
                        fnum(Some(s.p0.y)),
                        fnum(Some(s.lyapunov)),
                        fnum(Some(s.discrepancy)),
                    ]
                })
                .collect();
            emit_csv(cfg, &["run", "seed", "n", "grid", "p0_x", "p0_y", "lyapunov", "discrepancy"], &rows, out)?;
            Ok(0)
        }
        Command::Segments => segments(cfg, &map, out),
        Command::Intersect => {
            let res = intersection_pairs(&map, cfg.pairs, cfg.budget, cfg.seed);
            let found = res.iter().filter(|p| p.result.status == IntersectionStatus::Found).count();
            writeln!(out, "found={found}/{}", res.len())?;
            let rows: Vec<Vec<String>> = res
                .iter()
                .map(|p| {
                    let r = p.result;
                    vec![
                        p.index.to_string(),
                        fnum(Some(p.x.x)),
                        fnum(Some(p.x.y)),
                        fnum(Some(p.y.x)),
                        fnum(Some(p.y.y)),
                        match r.status {
                            IntersectionStatus::Found => "found".into(),
                            IntersectionStatus::Timeout => "timeout".into(),
                        },
                        r.m.to_string(),
                        r.n.to_string(),
                        fnum(r.point.map(|q| q.x)),
                        fnum(r.point.map(|q| q.y)),
                    ]
                })
                .collect();
            emit_csv(cfg, &["pair", "x_x", "x_y", "y_x", "y_y", "status", "m", "n", "point_x", "point_y"], &rows, out)?;
            Ok(0)
        }
    }
}

fn certify(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let rep = critical_alpha(cfg.ledger)?;
    writeln!(out, "alpha_star={:.2}", rep.alpha_star)?;
    writeln!(out, "alpha_star_full={:.16e}", rep.alpha_star)?;
    writeln!(out, "product_threshold={:.16e}", rep.product_threshold())?;
    writeln!(out, "binding={}", rep.binding_id)?;
    writeln!(out, "case_iv_threshold={:.16e}", rep.case_iv_threshold)?;
    emit_csv(
        cfg,
        &["id", "anchor", "computed_threshold", "published_threshold", "margin_at_alpha_star", "binding", "flag"],
        &certificate_rows(&rep),
        out,
    )?;
    if cfg.assert && !(3.46..=3.48).contains(&rep.alpha_star) {
        writeln!(out, "assert=fail")?;
        return Ok(2);
    }
    Ok(0)
}

/// Snapshots of the traced segments, each a list of pieces inside S.
fn trace_snapshots(cfg: &RunConfig, map: &TwistMap) -> Result<Vec<Vec<LiftedSegment>>, CliError> {
    match cfg.trace {
        Trace::Rectangle => {
            let canon = map.canonical();
            let r = limit_rectangle(&canon)?;
            let chain = chain_via_propagate(&canon, &r.segments[0], cfg.steps.max(4) - 1)?;
            Ok(chain.into_iter().map(|s| vec![s]).collect())
        }
        Trace::Growth => {
            let c = map.config();
            let centre = Point2::new((c.x0 + c.x1) / 2.0, (c.y0 + c.y1) / 2.0);
            let dir = map.eigen().map(|e| e.xi_expanding).unwrap_or((0.0, 1.0));
            let h = 0.005;
            let seg = LiftedSegment::new(
                Point2::new(centre.x - dir.0 * h, centre.y - dir.1 * h),
                Point2::new(centre.x + dir.0 * h, centre.y + dir.1 * h),
                Cone::Vertical,
            )
            .map_err(SegmentError::from)?;
            let mut dropped = 0;
            let mut pieces = normalize(&seg, map).pieces;
            let mut snaps = vec![vec![seg]];
            for _ in 0..cfg.steps {
                pieces = step(&pieces, Which::Phi, map, &mut dropped);
                snaps.push(pieces.iter().filter(|p| p.in_s(map)).map(|p| p.seg).collect());
            }
            Ok(snaps)
        }
    }
}

fn segments(cfg: &RunConfig, map: &TwistMap, out: &mut dyn Write) -> Result<i32, CliError> {
    let snaps = trace_snapshots(cfg, map)?;
    let mut rows = Vec::new();
    for (i, snap) in snaps.iter().enumerate() {
        for (j, s) in snap.iter().enumerate() {
            rows.push(vec![
                i.to_string(),
                j.to_string(),
                match s.cone {
                    Cone::Vertical => "vertical".into(),
                    Cone::Horizontal => "horizontal".into(),
                },
                fnum(Some(s.p0.x)),
                fnum(Some(s.p0.y)),
                fnum(Some(s.p1.x)),
                fnum(Some(s.p1.y)),
                fnum(Some(s.slope)),
            ]);
        }
    }
    writeln!(out, "snapshots={}", snaps.len())?;
    emit_csv(cfg, &["step", "piece", "cone", "x0", "y0", "x1", "y1", "slope"], &rows, out)?;
    if cfg.svg {
        let s_rect = match cfg.trace {
            Trace::Rectangle => map.canonical().s_rect(),
            Trace::Growth => map.s_rect(),
        };
        let drawn: Vec<LiftedSegment> = match cfg.trace {
            // the chain revisits the same four sides
            Trace::Rectangle => snaps.iter().take(4).flatten().copied().collect(),
            Trace::Growth => snaps.last().cloned().unwrap_or_default(),
        };
        let path = svg_path(cfg.out_path.as_deref());
        fs::write(&path, render_svg(&s_rect, &drawn))?;
        writeln!(out, "svg={}", path.display())?;
    }
    Ok(0)
}

fn svg_path(out: Option<&Path>) -> PathBuf {
    match out {
        Some(p) => p.with_extension("svg"),
        None => PathBuf::from("segments.svg"),
    }
}

/// S fills a 1000 x 1000 canvas with a margin; y grows upward.
pub fn render_svg(s: &Rect, segs: &[LiftedSegment]) -> String {
    let (size, pad) = (1000.0, 50.0);
    let scale = (size - 2.0 * pad) / s.width().max(s.height());
    let px = |p: Point2| (pad + (p.x - s.x_lo) * scale, size - pad - (p.y - s.y_lo) * scale);
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="1000" height="1000" viewBox="0 0 1000 1000">"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{pad}" y="{:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="black" stroke-width="2"/>"#,
        size - pad - s.height() * scale,
        s.width() * scale,
        s.height() * scale
    );
    for seg in segs {
        let (a, b) = (px(seg.p0), px(seg.p1));
        let colour = match seg.cone {
            Cone::Vertical => "#c0392b",
            Cone::Horizontal => "#2471a3",
        };
        let _ = writeln!(svg, r#"<polyline points="{:.3},{:.3} {:.3},{:.3}" fill="none" stroke="{colour}" stroke-width="3"/>"#, a.0, a.1, b.0, b.1);
    }
    svg.push_str("</svg>\n");
    svg
}
