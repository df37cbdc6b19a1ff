//! Inequality ledger for the critical shear.
//!
//! Each record is a closed-form margin in `alpha` (positive means the
//! inequality holds) with every intermediate slope already replaced by its
//! worst case, the critical slope `L` or 0. `b` below is the common growth
//! constant `2 delta / (alpha - |L|)`.

use rayon::prelude::*;
use thiserror::Error;

use crate::twist::{lam_alpha, TwistConfig};

/// Lowest shear at which margins are evaluated.
pub const ALPHA_MIN_EVAL: f64 = 2.01;
pub const ALPHA_MAX_EVAL: f64 = 10.0;
/// Bracket width below which bisection stops.
pub const BISECT_TOL: f64 = 1e-9;
/// Grid size of the sign-change pre-scan.
pub const SCAN_POINTS: usize = 100;
/// Per-record comparison tolerance against published thresholds.
pub const COMPARE_TOL: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThresholdError {
    #[error("{id}: margin keeps sign {sign:+} on [{lo}, {hi}]")]
    NoSignChange { id: String, lo: f64, hi: f64, sign: f64 },
    #[error("{id}: {roots} sign changes on the bracket, largest root {largest}")]
    NonMonotoneBracket { id: String, roots: usize, largest: f64 },
    #[error("{id}: margin {margin} at alpha_star {alpha} violates the ledger")]
    LedgerViolated { id: String, alpha: f64, margin: f64 },
    #[error("case (iv) threshold {case_iv} is not below alpha_star {alpha_star}")]
    CaseIvNotBelow { case_iv: f64, alpha_star: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerParams {
    pub delta: f64,
    pub kappa: f64,
}

impl Default for LedgerParams {
    fn default() -> Self {
        LedgerParams { delta: 1.0, kappa: 2.0 / 3.0 }
    }
}

impl LedgerParams {
    /// Growth constant shared by both shears: `2 delta / (alpha - |L|)`.
    pub fn beta(&self, alpha: f64) -> f64 {
        let a = -lam(alpha);
        2.0 * self.delta / (alpha - a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RecordKind {
    /// Holds by the choice of the growth constant; checked at `>= -1e-9`.
    BetaDefining,
    /// Constraint entering the critical shear.
    Active,
    /// The final combined inequality; also active.
    Master,
    /// Both ends returning at once; must be weaker than the master.
    CaseIv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdFlag {
    /// Positive on the whole bracket.
    AlwaysSatisfied,
    /// Negative on the whole bracket.
    NeverSatisfied,
    /// More than one genuine sign change; the largest root is kept.
    NonMonotone,
    /// Zero up to rounding on the whole bracket: equality by construction.
    Identity,
}

impl ThresholdFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            ThresholdFlag::AlwaysSatisfied => "always_satisfied",
            ThresholdFlag::NeverSatisfied => "never_satisfied",
            ThresholdFlag::NonMonotone => "non_monotone",
            ThresholdFlag::Identity => "identity",
        }
    }
}

pub type MarginFn = fn(f64, &LedgerParams) -> f64;

#[derive(Debug, Clone)]
pub struct InequalityRecord {
    pub id: &'static str,
    /// The inequality as a formula, with `L` the critical slope and `b` the
    /// growth constant.
    pub anchor: &'static str,
    pub kind: RecordKind,
    margin_fn: MarginFn,
    pub params: LedgerParams,
    /// Search interval, chosen to start above any pole of the margin.
    pub bracket: (f64, f64),
    pub published_threshold: Option<f64>,
    pub computed_threshold: Option<f64>,
    pub flag: Option<ThresholdFlag>,
    pub binding: bool,
}

impl InequalityRecord {
    pub fn margin(&self, alpha: f64) -> f64 {
        (self.margin_fn)(alpha, &self.params)
    }
}

fn lam(alpha: f64) -> f64 {
    lam_alpha(alpha).unwrap_or(f64::NAN)
}

// a = |L|, s = alpha + L = alpha - a
fn parts(alpha: f64, p: &LedgerParams) -> (f64, f64, f64, f64) {
    let l = lam(alpha);
    (l, -l, alpha + l, p.beta(alpha))
}

fn eq13(al: f64, p: &LedgerParams) -> f64 {
    let (_, _, s, b) = parts(al, p);
    b * s - p.delta
}
fn eq16(al: f64, p: &LedgerParams) -> f64 {
    let (_, _, s, b) = parts(al, p);
    (b - p.delta / s) * s - p.delta
}
fn eq18(al: f64, p: &LedgerParams) -> f64 {
    let (_, _, s, _) = parts(al, p);
    s * (1.0 - p.delta / s) - p.delta
}
fn eqp(al: f64, p: &LedgerParams) -> f64 {
    let (_, _, s, _) = parts(al, p);
    s * s - 2.0 * al
}
fn eq22(al: f64, p: &LedgerParams) -> f64 {
    let (_, _, s, b) = parts(al, p);
    s * (b - p.delta / s) - p.delta
}
fn eq23(al: f64, p: &LedgerParams) -> f64 {
    let (_, a, s, _) = parts(al, p);
    s * (1.0 - a * p.delta) - p.delta
}
fn eq24(al: f64, p: &LedgerParams) -> f64 {
    let (_, a, s, b) = parts(al, p);
    s * (b - a * p.delta) - p.delta
}
fn eq32(al: f64, p: &LedgerParams) -> f64 {
    let (l, a, s, b) = parts(al, p);
    al * b - p.delta * (2.0 + l * l) / s - b * a - p.delta
}
fn eq36(al: f64, p: &LedgerParams) -> f64 {
    let (_, a, _, b) = parts(al, p);
    al * (b - p.delta / (al - a)) - p.delta
}
fn eq42(al: f64, p: &LedgerParams) -> f64 {
    let (l, a, _, _) = parts(al, p);
    let k = p.kappa;
    al - (4.0 * k + k * l * l + 2.0 * a)
}
fn eq43(al: f64, p: &LedgerParams) -> f64 {
    let (_, a, _, _) = parts(al, p);
    1.0 - (2.0 * p.kappa + a) * (1.0 / (al - a) + 1.0 / al)
}
fn eq44(al: f64, p: &LedgerParams) -> f64 {
    let (_, a, _, _) = parts(al, p);
    al * (p.kappa - a) - 1.0
}
fn eq47(al: f64, p: &LedgerParams) -> f64 {
    p.kappa - 2.0 / al
}
fn eq48(al: f64, p: &LedgerParams) -> f64 {
    let (_, a, _, _) = parts(al, p);
    al - 3.0 / (1.0 / (2.0 * a) - a)
}
fn eq49(al: f64, p: &LedgerParams) -> f64 {
    let (_, a, _, _) = parts(al, p);
    (1.0 / (2.0 * a) - a) - (1.0 / al + 1.0 / (al - a))
}
fn eq52(al: f64, p: &LedgerParams) -> f64 {
    let (l, a, _, _) = parts(al, p);
    (al - 2.0 * a) * (1.0 - l * l) - 2.0 * a * (3.0 + l * l)
}
fn eqq53(al: f64, p: &LedgerParams) -> f64 {
    let (l, a, _, _) = parts(al, p);
    (1.0 - l * l) / (2.0 * a) - (2.0 * al - a) / (al * al - 3.0 * al * a + l * l)
}
fn eq56(al: f64, p: &LedgerParams) -> f64 {
    let (l, a, _, _) = parts(al, p);
    (al - 2.0 * a) - (2.0 + al * a) / (al * (1.0 - l * l) - a * (3.0 + l * l))
}
fn eq57(al: f64, p: &LedgerParams) -> f64 {
    let (_, a, _, _) = parts(al, p);
    let num = (al - a) + al + a * al * (al - a);
    let den = al * (al - a) - al * a - (al - a) * a;
    (al - 2.0 * a) - num / den
}
fn eq58(al: f64, p: &LedgerParams) -> f64 {
    let (l, a, _, _) = parts(al, p);
    (al - 2.0 * a).powi(2) - (3.0 + l * l)
}
fn eq59(al: f64, p: &LedgerParams) -> f64 {
    let (l, a, _, _) = parts(al, p);
    (al - 2.0 * a) - (2.0 * al - a) / (al * al - 3.0 * al * a + l * l)
}
fn eq60(al: f64, p: &LedgerParams) -> f64 {
    let (l, a, _, _) = parts(al, p);
    (al - 2.0 * a) * (1.0 + 3.0 * l * l) - 4.0 * a
}
fn master(al: f64, p: &LedgerParams) -> f64 {
    let (l, _, s, b) = parts(al, p);
    1.0 - (b / (al * (1.0 - 2.0 / s)) + 2.0 / (2.0 * al + l) + b / s)
}
fn caseiv(al: f64, p: &LedgerParams) -> f64 {
    let (_, _, s, b) = parts(al, p);
    1.0 - (2.0 * b / s + 1.0 / al)
}

struct RowDef {
    id: &'static str,
    anchor: &'static str,
    kind: RecordKind,
    f: MarginFn,
    lo: f64,
    published: Option<f64>,
}

const ROWS: &[RowDef] = &[
    RowDef { id: "eq13", anchor: "b(alpha+L) > delta", kind: RecordKind::BetaDefining, f: eq13, lo: ALPHA_MIN_EVAL, published: None },
    RowDef { id: "eq16", anchor: "(b - delta/(alpha+L))(alpha+L) > delta", kind: RecordKind::BetaDefining, f: eq16, lo: ALPHA_MIN_EVAL, published: None },
    RowDef { id: "eq18", anchor: "(alpha+L)(1 - delta/(alpha+L)) > delta", kind: RecordKind::BetaDefining, f: eq18, lo: ALPHA_MIN_EVAL, published: None },
    RowDef { id: "eqp", anchor: "(alpha+L)^2 > 2 alpha", kind: RecordKind::Active, f: eqp, lo: ALPHA_MIN_EVAL, published: Some(2.783) },
    RowDef { id: "eq22", anchor: "(alpha+L)(b - delta/(alpha+L)) > delta", kind: RecordKind::BetaDefining, f: eq22, lo: ALPHA_MIN_EVAL, published: None },
    RowDef { id: "eq23", anchor: "(alpha+L)(1 - |L| delta) > delta", kind: RecordKind::BetaDefining, f: eq23, lo: ALPHA_MIN_EVAL, published: None },
    RowDef { id: "eq24", anchor: "(alpha+L)(b - |L| delta) > delta", kind: RecordKind::BetaDefining, f: eq24, lo: ALPHA_MIN_EVAL, published: None },
    RowDef { id: "eq32", anchor: "alpha b - delta(2+L^2)/(alpha+L) - b|L| > delta", kind: RecordKind::BetaDefining, f: eq32, lo: ALPHA_MIN_EVAL, published: None },
    RowDef { id: "eq36", anchor: "alpha(b - delta/(alpha-|L|)) > delta", kind: RecordKind::BetaDefining, f: eq36, lo: ALPHA_MIN_EVAL, published: None },
    RowDef { id: "eq42", anchor: "alpha > 4 kappa + kappa L^2 + 2|L|", kind: RecordKind::Active, f: eq42, lo: ALPHA_MIN_EVAL, published: Some(2.69) },
    RowDef { id: "eq43", anchor: "1 > (2 kappa + |L|)(1/(alpha-|L|) + 1/alpha)", kind: RecordKind::Active, f: eq43, lo: ALPHA_MIN_EVAL, published: Some(3.46) },
    RowDef { id: "eq44", anchor: "alpha(kappa - |L|) > 1", kind: RecordKind::Active, f: eq44, lo: ALPHA_MIN_EVAL, published: Some(3.17) },
    RowDef { id: "eq47", anchor: "kappa >= 2/alpha", kind: RecordKind::Active, f: eq47, lo: ALPHA_MIN_EVAL, published: Some(3.0) },
    RowDef { id: "eq48", anchor: "alpha > 3/(1/(2|L|) - |L|)", kind: RecordKind::Active, f: eq48, lo: 2.15, published: Some(3.07) },
    RowDef { id: "eq49", anchor: "1/(2|L|) - |L| > 1/alpha + 1/(alpha-|L|)", kind: RecordKind::Active, f: eq49, lo: ALPHA_MIN_EVAL, published: None },
    RowDef { id: "eq52", anchor: "(alpha-2|L|)(1-L^2) > 2|L|(3+L^2)", kind: RecordKind::Active, f: eq52, lo: ALPHA_MIN_EVAL, published: Some(3.20) },
    RowDef { id: "eqq53", anchor: "(1-L^2)/(2|L|) > (2 alpha-|L|)/(alpha^2 - 3 alpha|L| + L^2)", kind: RecordKind::Active, f: eqq53, lo: 2.1, published: None },
    RowDef { id: "eq56", anchor: "alpha-2|L| > (2+alpha|L|)/(alpha(1-L^2) - |L|(3+L^2))", kind: RecordKind::Active, f: eq56, lo: 2.45, published: None },
    RowDef { id: "eq57", anchor: "alpha-2|L| > ((alpha-|L|) + alpha + |L| alpha(alpha-|L|))/(alpha(alpha-|L|) - alpha|L| - (alpha-|L|)|L|)", kind: RecordKind::Active, f: eq57, lo: 2.1, published: Some(2.75) },
    RowDef { id: "eq58", anchor: "(alpha-2|L|)^2 > 3+L^2", kind: RecordKind::Active, f: eq58, lo: ALPHA_MIN_EVAL, published: Some(3.33) },
    RowDef { id: "eq59", anchor: "alpha-2|L| > (2 alpha-|L|)/(alpha^2 - 3 alpha|L| + L^2)", kind: RecordKind::Active, f: eq59, lo: 2.1, published: Some(2.54) },
    RowDef { id: "eq60", anchor: "(alpha-2|L|)(1+3L^2) > 4|L|", kind: RecordKind::Active, f: eq60, lo: ALPHA_MIN_EVAL, published: Some(2.31) },
    RowDef { id: "master", anchor: "1 > b/(alpha(1 - 2/(alpha+L))) + 2/(2 alpha+L) + b/(alpha+L)", kind: RecordKind::Master, f: master, lo: 2.6, published: Some(3.47) },
    RowDef { id: "caseiv", anchor: "1 > 2b/(alpha+L) + 1/alpha", kind: RecordKind::CaseIv, f: caseiv, lo: ALPHA_MIN_EVAL, published: Some(2.95) },
];

/// The full ledger, thresholds not yet computed.
pub fn ledger(params: LedgerParams) -> Vec<InequalityRecord> {
    ROWS
        .iter()
        .map(|s| InequalityRecord {
            id: s.id,
            anchor: s.anchor,
            kind: s.kind,
            margin_fn: s.f,
            params,
            bracket: (s.lo, ALPHA_MAX_EVAL),
            published_threshold: s.published,
            computed_threshold: None,
            flag: None,
            binding: false,
        })
        .collect()
}

/// Bisection to full double precision on a bracket with a sign change.
fn bisect(rec: &InequalityRecord, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = rec.margin(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo < tol {
            break;
        }
        let fm = rec.margin(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Genuine roots of the margin on `bracket`: sign changes found on a grid,
/// refined by bisection, with poles rejected by the size of the margin at
/// the limit point.
pub fn roots(rec: &InequalityRecord, bracket: (f64, f64), tol: f64) -> Vec<f64> {
    let (lo, hi) = bracket;
    let n = SCAN_POINTS;
    let xs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| rec.margin(x)).collect();
    let mut out = Vec::new();
    for i in 0..n - 1 {
        let (a, b) = (fs[i], fs[i + 1]);
        if !(a.is_finite() && b.is_finite()) {
            continue;
        }
        if a == 0.0 {
            out.push(xs[i]);
            continue;
        }
        if (a < 0.0) != (b < 0.0) && b != 0.0 {
            // a root leaves a residual near rounding at full precision, a pole a huge one
            let exact = bisect(rec, xs[i], xs[i + 1], 0.0);
            if rec.margin(exact).abs() < 1e-6 {
                out.push(bisect(rec, xs[i], xs[i + 1], tol));
            }
        }
    }
    if fs[n - 1] == 0.0 {
        out.push(xs[n - 1]);
    }
    out
}

/// Threshold of one record on `bracket`: the unique root, or an error
/// carrying the largest root when several exist.
pub fn threshold(rec: &InequalityRecord, bracket: (f64, f64)) -> Result<f64, ThresholdError> {
    threshold_tol(rec, bracket, BISECT_TOL)
}

pub fn threshold_tol(rec: &InequalityRecord, bracket: (f64, f64), tol: f64) -> Result<f64, ThresholdError> {
    let r = roots(rec, bracket, tol);
    match r.len() {
        0 => Err(ThresholdError::NoSignChange {
            id: rec.id.to_string(),
            lo: bracket.0,
            hi: bracket.1,
            sign: rec.margin(bracket.1).signum(),
        }),
        1 => Ok(r[0]),
        k => Err(ThresholdError::NonMonotoneBracket {
            id: rec.id.to_string(),
            roots: k,
            largest: r.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }),
    }
}

/// Fills in `computed_threshold` and `flag` from the record's own bracket.
pub fn solve_record(rec: &mut InequalityRecord, tol: f64) {
    let (lo, hi) = rec.bracket;
    let flat = (0..SCAN_POINTS).all(|i| rec.margin(lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64).abs() < 1e-12);
    if flat {
        rec.flag = Some(ThresholdFlag::Identity);
        return;
    }
    match threshold_tol(rec, rec.bracket, tol) {
        Ok(r) => rec.computed_threshold = Some(r),
        Err(ThresholdError::NonMonotoneBracket { largest, .. }) => {
            rec.computed_threshold = Some(largest);
            rec.flag = Some(ThresholdFlag::NonMonotone);
        }
        Err(ThresholdError::NoSignChange { sign, .. }) => {
            rec.flag = Some(if sign > 0.0 { ThresholdFlag::AlwaysSatisfied } else { ThresholdFlag::NeverSatisfied });
        }
        Err(_) => {}
    }
}

#[derive(Debug, Clone)]
pub struct CertificateReport {
    pub params: LedgerParams,
    pub alpha_star: f64,
    pub binding_id: &'static str,
    pub per_inequality: Vec<InequalityRecord>,
    pub case_iv_threshold: f64,
    /// Hyperbolicity needs `alpha * beta` above this.
    pub hyperbolicity_threshold: f64,
}

impl CertificateReport {
    pub fn record(&self, id: &str) -> Option<&InequalityRecord> {
        self.per_inequality.iter().find(|r| r.id == id)
    }

    /// `alpha_star^2`, the equivalent bound on `alpha * beta`.
    pub fn product_threshold(&self) -> f64 {
        self.alpha_star * self.alpha_star
    }
}

pub fn critical_alpha(params: LedgerParams) -> Result<CertificateReport, ThresholdError> {
    critical_alpha_tol(params, BISECT_TOL)
}

/// Solves every record and takes the largest active threshold.
pub fn critical_alpha_tol(params: LedgerParams, tol: f64) -> Result<CertificateReport, ThresholdError> {
    let mut recs = ledger(params);
    recs.par_iter_mut().for_each(|r| solve_record(r, tol));

    let mut alpha_star = f64::NEG_INFINITY;
    let mut binding = 0usize;
    for (i, r) in recs.iter().enumerate() {
        if matches!(r.kind, RecordKind::Active | RecordKind::Master) {
            if r.flag == Some(ThresholdFlag::NeverSatisfied) {
                return Err(ThresholdError::NoSignChange { id: r.id.into(), lo: r.bracket.0, hi: r.bracket.1, sign: -1.0 });
            }
            if let Some(t) = r.computed_threshold {
                if t > alpha_star {
                    alpha_star = t;
                    binding = i;
                }
            }
        }
    }
    recs[binding].binding = true;

    for r in &recs {
        if r.kind == RecordKind::BetaDefining {
            let m = r.margin(alpha_star);
            if m < -1e-9 {
                return Err(ThresholdError::LedgerViolated { id: r.id.into(), alpha: alpha_star, margin: m });
            }
        }
    }
    let iv = recs.iter().find(|r| r.kind == RecordKind::CaseIv).expect("ledger has a case iv record");
    let case_iv_threshold = iv.computed_threshold.ok_or_else(|| ThresholdError::NoSignChange {
        id: iv.id.into(),
        lo: iv.bracket.0,
        hi: iv.bracket.1,
        sign: iv.margin(iv.bracket.1).signum(),
    })?;
    if case_iv_threshold >= alpha_star {
        return Err(ThresholdError::CaseIvNotBelow { case_iv: case_iv_threshold, alpha_star });
    }
    let probe = alpha_star + 0.01;
    for r in &recs {
        if r.kind != RecordKind::BetaDefining && r.margin(probe) <= 0.0 {
            return Err(ThresholdError::LedgerViolated { id: r.id.into(), alpha: probe, margin: r.margin(probe) });
        }
    }
    Ok(CertificateReport {
        params,
        alpha_star,
        binding_id: recs[binding].id,
        per_inequality: recs,
        case_iv_threshold,
        hyperbolicity_threshold: 4.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperbolicityCheck {
    pub hyperbolic: bool,
    /// `|lambda_-| - 1`; zero when the eigenvalues lie on the unit circle.
    pub margin: f64,
}

pub fn hyperbolicity_check(alpha: f64, beta: f64) -> HyperbolicityCheck {
    let ab = alpha * beta;
    let margin = if ab < 4.0 {
        0.0
    } else {
        let lm = (2.0 - ab - (ab * ab - 4.0 * ab).sqrt()) / 2.0;
        lm.abs() - 1.0
    };
    HyperbolicityCheck { hyperbolic: ab > 4.0, margin }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agreement {
    Agree,
    Diverge,
    /// No published value, or no computed root.
    Unpaired,
}

impl Agreement {
    pub fn as_str(&self) -> &'static str {
        match self {
            Agreement::Agree => "agree",
            Agreement::Diverge => "diverge",
            Agreement::Unpaired => "unpaired",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub id: &'static str,
    pub computed: Option<f64>,
    pub published: Option<f64>,
    pub diff: Option<f64>,
    pub status: Agreement,
    pub flag: Option<ThresholdFlag>,
}

/// One row per record comparing the computed threshold with the published one.
pub fn threshold_comparison_table(report: &CertificateReport) -> Vec<ComparisonRow> {
    report
        .per_inequality
        .iter()
        .map(|r| {
            let diff = match (r.computed_threshold, r.published_threshold) {
                (Some(c), Some(p)) => Some((c - p).abs()),
                _ => None,
            };
            let status = match diff {
                Some(d) if d <= COMPARE_TOL => Agreement::Agree,
                Some(_) => Agreement::Diverge,
                None => Agreement::Unpaired,
            };
            ComparisonRow { id: r.id, computed: r.computed_threshold, published: r.published_threshold, diff, status, flag: r.flag }
        })
        .collect()
}

/// Equal-shear configuration at the critical parameter, for convenience.
pub fn critical_config(report: &CertificateReport) -> TwistConfig {
    TwistConfig::symmetric(report.alpha_star)
}
