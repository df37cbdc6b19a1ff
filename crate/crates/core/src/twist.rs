//! The linked twist map: two shears on crossing annular strips.
//!
//! `F` shears the horizontal strip `H = {y0 <= y <= y1}` sideways and `G`
//! shears the vertical strip `V = {x0 <= x <= x1}` up or down. Their overlap
//! `S = [x0, x1] x [y0, y1]` is where both act. A map is canonical when the
//! horizontal twist is positive and the vertical one negative.

use thiserror::Error;

use crate::geometry::{Point2, Rect};

/// Tolerance on `alpha * (y1 - y0) = |k|` and its vertical counterpart.
pub const TWIST_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TwistError {
    #[error("invalid strip bounds: need 0 < {lo} < {hi} < 1 on the {axis} axis")]
    InvalidStrip { axis: char, lo: f64, hi: f64 },
    #[error("shear magnitudes must be positive and finite (alpha={alpha}, beta={beta})")]
    NonPositiveShear { alpha: f64, beta: f64 },
    #[error("twist counts must be non-zero")]
    ZeroTwist,
    #[error("{which} twist mismatch: shear * width = {got}, expected {expected}")]
    TwistMismatch { which: char, got: f64, expected: f64 },
    #[error("twists k={k} and m={m} have the same sense")]
    SameSense { k: i32, m: i32 },
    #[error("point ({x}, {y}) is outside the union of the two strips")]
    OutOfDomain { x: f64, y: f64 },
    #[error("not hyperbolic: alpha*beta = {product} < 4")]
    NotHyperbolic { product: f64 },
    #[error("alpha = {alpha} is below 2, the critical slope is undefined")]
    SubcriticalAlpha { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CompositionOrder {
    /// `Phi = G o F`: shear horizontally first.
    #[default]
    GAfterF,
    /// `Phi = F o G`.
    FAfterG,
}

impl CompositionOrder {
    pub fn flipped(self) -> Self {
        match self {
            CompositionOrder::GAfterF => CompositionOrder::FAfterG,
            CompositionOrder::FAfterG => CompositionOrder::GAfterF,
        }
    }
}

/// Raw parameters. Use [`TwistConfig::validate`] to get a usable [`TwistMap`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistConfig {
    pub alpha: f64,
    pub beta: f64,
    pub k: i32,
    pub m: i32,
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub order: CompositionOrder,
}

impl TwistConfig {
    /// Equal shears `alpha` with single twists and `S` centred in the square.
    pub fn symmetric(alpha: f64) -> Self {
        let w = 1.0 / alpha;
        TwistConfig {
            alpha,
            beta: alpha,
            k: 1,
            m: -1,
            x0: 0.5 - w / 2.0,
            x1: 0.5 + w / 2.0,
            y0: 0.5 - w / 2.0,
            y1: 0.5 + w / 2.0,
            order: CompositionOrder::GAfterF,
        }
    }

    pub fn validate(&self) -> Result<TwistMap, TwistError> {
        let c = self;
        for (axis, lo, hi) in [('x', c.x0, c.x1), ('y', c.y0, c.y1)] {
            if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi && hi < 1.0) {
                return Err(TwistError::InvalidStrip { axis, lo, hi });
            }
        }
        if !(c.alpha > 0.0 && c.beta > 0.0 && c.alpha.is_finite() && c.beta.is_finite()) {
            return Err(TwistError::NonPositiveShear { alpha: c.alpha, beta: c.beta });
        }
        if c.k == 0 || c.m == 0 {
            return Err(TwistError::ZeroTwist);
        }
        let got = c.alpha * (c.y1 - c.y0);
        let expected = c.k.unsigned_abs() as f64;
        if (got - expected).abs() > TWIST_TOL {
            return Err(TwistError::TwistMismatch { which: 'k', got, expected });
        }
        let got = c.beta * (c.x1 - c.x0);
        let expected = c.m.unsigned_abs() as f64;
        if (got - expected).abs() > TWIST_TOL {
            return Err(TwistError::TwistMismatch { which: 'm', got, expected });
        }
        if c.k.signum() == c.m.signum() {
            return Err(TwistError::SameSense { k: c.k, m: c.m });
        }
        Ok(TwistMap { cfg: *c })
    }
}

/// Reduces a coordinate to `[0, 1)`; exactly 1.0 after rounding becomes 0.0.
pub fn wrap01(v: f64) -> f64 {
    let r = v - v.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Signed distance on the circle, in `[-0.5, 0.5)`.
pub fn circle_diff(a: f64, b: f64) -> f64 {
    let d = wrap01(a - b);
    if d >= 0.5 {
        d - 1.0
    } else {
        d
    }
}

/// Distance on the flat torus.
pub fn torus_dist(a: Point2, b: Point2) -> f64 {
    circle_diff(a.x, b.x).hypot(circle_diff(a.y, b.y))
}

/// Critical slope: the root of `L^2 + alpha L + 1 = 0` in `[-1, 0)`.
pub fn lam_alpha(alpha: f64) -> Result<f64, TwistError> {
    if !(alpha >= 2.0) {
        return Err(TwistError::SubcriticalAlpha { alpha });
    }
    // 1 / (smaller root) avoids cancellation for large alpha
    let h = alpha / 2.0;
    let disc = (h * h - 1.0).max(0.0).sqrt();
    Ok(-1.0 / (h + disc))
}

/// 2x2 matrix stored row-major.
pub type Mat2 = [[f64; 2]; 2];

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

pub fn det(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenData {
    /// Eigenvalue of modulus at most one.
    pub lambda_plus: f64,
    /// Eigenvalue of modulus at least one.
    pub lambda_minus: f64,
    /// Expanding direction, normalised so the second component is 1.
    pub xi_expanding: (f64, f64),
    /// Contracting direction, normalised so the second component is 1.
    pub xi_contracting: (f64, f64),
}

/// A validated map. All point maps assume nothing about the sign pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistMap {
    cfg: TwistConfig,
}

impl TwistMap {
    pub fn config(&self) -> &TwistConfig {
        &self.cfg
    }

    pub fn alpha(&self) -> f64 {
        self.cfg.alpha
    }

    pub fn beta(&self) -> f64 {
        self.cfg.beta
    }

    pub fn order(&self) -> CompositionOrder {
        self.cfg.order
    }

    pub fn with_order(&self, order: CompositionOrder) -> TwistMap {
        TwistMap { cfg: TwistConfig { order, ..self.cfg } }
    }

    pub fn is_canonical(&self) -> bool {
        self.cfg.k > 0
    }

    /// Signed horizontal shear rate.
    pub fn f_rate(&self) -> f64 {
        self.cfg.k.signum() as f64 * self.cfg.alpha
    }

    /// Signed vertical shear rate.
    pub fn g_rate(&self) -> f64 {
        self.cfg.m.signum() as f64 * self.cfg.beta
    }

    pub fn s_rect(&self) -> Rect {
        Rect { x_lo: self.cfg.x0, x_hi: self.cfg.x1, y_lo: self.cfg.y0, y_hi: self.cfg.y1 }
    }

    pub fn in_h(&self, p: Point2) -> bool {
        p.y >= self.cfg.y0 && p.y <= self.cfg.y1
    }

    pub fn in_v(&self, p: Point2) -> bool {
        p.x >= self.cfg.x0 && p.x <= self.cfg.x1
    }

    pub fn in_s(&self, p: Point2) -> bool {
        self.in_h(p) && self.in_v(p)
    }

    /// Whether `p` lies in the fundamental domain and in `H` or `V`.
    pub fn in_domain(&self, p: Point2) -> bool {
        p.is_finite() && (0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y) && (self.in_h(p) || self.in_v(p))
    }

    fn check(&self, p: Point2) -> Result<(), TwistError> {
        if self.in_domain(p) {
            Ok(())
        } else {
            Err(TwistError::OutOfDomain { x: p.x, y: p.y })
        }
    }

    /// `F` on the lifted plane: no wrapping, identity off the strip height.
    pub fn f_lift(&self, p: Point2) -> Point2 {
        if self.in_h(p) {
            Point2::new(p.x + self.f_rate() * (p.y - self.cfg.y0), p.y)
        } else {
            p
        }
    }

    pub fn f_inv_lift(&self, p: Point2) -> Point2 {
        if self.in_h(p) {
            Point2::new(p.x - self.f_rate() * (p.y - self.cfg.y0), p.y)
        } else {
            p
        }
    }

    pub fn g_lift(&self, p: Point2) -> Point2 {
        if self.in_v(p) {
            Point2::new(p.x, p.y + self.g_rate() * (p.x - self.cfg.x0))
        } else {
            p
        }
    }

    pub fn g_inv_lift(&self, p: Point2) -> Point2 {
        if self.in_v(p) {
            Point2::new(p.x, p.y - self.g_rate() * (p.x - self.cfg.x0))
        } else {
            p
        }
    }

    /// `F` on the torus without the domain check.
    pub fn f_torus(&self, p: Point2) -> Point2 {
        let q = self.f_lift(p);
        Point2::new(wrap01(q.x), q.y)
    }

    pub fn f_inv_torus(&self, p: Point2) -> Point2 {
        let q = self.f_inv_lift(p);
        Point2::new(wrap01(q.x), q.y)
    }

    pub fn g_torus(&self, p: Point2) -> Point2 {
        let q = self.g_lift(p);
        Point2::new(q.x, wrap01(q.y))
    }

    pub fn g_inv_torus(&self, p: Point2) -> Point2 {
        let q = self.g_inv_lift(p);
        Point2::new(q.x, wrap01(q.y))
    }

    pub fn phi_torus(&self, p: Point2) -> Point2 {
        match self.cfg.order {
            CompositionOrder::GAfterF => self.g_torus(self.f_torus(p)),
            CompositionOrder::FAfterG => self.f_torus(self.g_torus(p)),
        }
    }

    pub fn phi_inv_torus(&self, p: Point2) -> Point2 {
        match self.cfg.order {
            CompositionOrder::GAfterF => self.f_inv_torus(self.g_inv_torus(p)),
            CompositionOrder::FAfterG => self.g_inv_torus(self.f_inv_torus(p)),
        }
    }

    pub fn apply_f(&self, p: Point2) -> Result<Point2, TwistError> {
        self.check(p)?;
        Ok(self.f_torus(p))
    }

    pub fn apply_f_inv(&self, p: Point2) -> Result<Point2, TwistError> {
        self.check(p)?;
        Ok(self.f_inv_torus(p))
    }

    pub fn apply_g(&self, p: Point2) -> Result<Point2, TwistError> {
        self.check(p)?;
        Ok(self.g_torus(p))
    }

    pub fn apply_g_inv(&self, p: Point2) -> Result<Point2, TwistError> {
        self.check(p)?;
        Ok(self.g_inv_torus(p))
    }

    pub fn apply_phi(&self, p: Point2) -> Result<Point2, TwistError> {
        self.check(p)?;
        Ok(self.phi_torus(p))
    }

    pub fn apply_phi_inv(&self, p: Point2) -> Result<Point2, TwistError> {
        self.check(p)?;
        Ok(self.phi_inv_torus(p))
    }

    pub fn df(&self) -> Mat2 {
        [[1.0, self.f_rate()], [0.0, 1.0]]
    }

    pub fn dg(&self) -> Mat2 {
        [[1.0, 0.0], [self.g_rate(), 1.0]]
    }

    /// Derivative of `Phi` where both shears act.
    pub fn d_phi(&self) -> Mat2 {
        match self.cfg.order {
            CompositionOrder::GAfterF => mat_mul(&self.dg(), &self.df()),
            CompositionOrder::FAfterG => mat_mul(&self.df(), &self.dg()),
        }
    }

    pub fn eigen(&self) -> Result<EigenData, TwistError> {
        let ab = self.cfg.alpha * self.cfg.beta;
        if ab < 4.0 {
            return Err(TwistError::NotHyperbolic { product: ab });
        }
        let disc = (ab * ab - 4.0 * ab).max(0.0).sqrt();
        let lambda_minus = (2.0 - ab - disc) / 2.0;
        // product is 1; dividing avoids cancellation
        let lambda_plus = 1.0 / lambda_minus;
        let a = self.d_phi();
        let dir = |lam: f64| -> (f64, f64) {
            // (A - lam) v = 0 with v = (r, 1): r = a01 / (lam - a00)
            let denom = lam - a[0][0];
            if denom.abs() > 1e-300 {
                (a[0][1] / denom, 1.0)
            } else {
                ((lam - a[1][1]) / a[1][0], 1.0)
            }
        };
        Ok(EigenData { lambda_plus, lambda_minus, xi_expanding: dir(lambda_minus), xi_contracting: dir(lambda_plus) })
    }

    /// Same map with equal shears `sqrt(alpha beta)`; strip widths follow the
    /// new shears around the same centres.
    pub fn rescale_to_equal(&self) -> Result<TwistMap, TwistError> {
        let c = &self.cfg;
        if c.alpha == c.beta {
            return Ok(*self);
        }
        let s = (c.alpha * c.beta).sqrt();
        let (cx, cy) = ((c.x0 + c.x1) / 2.0, (c.y0 + c.y1) / 2.0);
        let hw = c.m.unsigned_abs() as f64 / s / 2.0;
        let hh = c.k.unsigned_abs() as f64 / s / 2.0;
        TwistConfig { alpha: s, beta: s, x0: cx - hw, x1: cx + hw, y0: cy - hh, y1: cy + hh, ..*c }.validate()
    }

    /// Conjugates by `x -> 1 - x` when the horizontal twist is negative,
    /// giving `k > 0, m < 0`.
    pub fn canonical(&self) -> TwistMap {
        if self.is_canonical() {
            return *self;
        }
        let c = &self.cfg;
        TwistMap { cfg: TwistConfig { k: -c.k, m: -c.m, x0: 1.0 - c.x1, x1: 1.0 - c.x0, ..*c } }
    }

    /// Whether both shears are equal, up to rounding.
    pub fn equal_shears(&self) -> bool {
        (self.cfg.alpha - self.cfg.beta).abs() <= 1e-12 * self.cfg.alpha
    }
}
