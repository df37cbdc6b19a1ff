use crate::geometry::{seg_lengths, Cone, LiftedSegment, Point2};
use crate::twist::{lam_alpha, TwistMap};

use super::{require_canonical, SegmentError};

/// Slope of a cone segment after one shear of strength `alpha`: a vertical
/// piece with slope `l` becomes a horizontal piece with slope `-1/(l+alpha)`.
/// The fixed point is the critical slope and the contraction ratio there is
/// its square.
pub fn slope_step(l: f64, alpha: f64) -> f64 {
    -1.0 / (l + alpha)
}

/// Lengths and slopes along the growth of one segment under `F` then `G`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthTrace {
    pub theta: f64,
    /// Horizontal length of the `F`-image of the top `theta` share of the segment.
    pub x: f64,
    /// Vertical length of the `G`-image of that piece.
    pub y: f64,
    /// `y / x`.
    pub eta: f64,
    /// Vertical growth factor `y / l_v` actually achieved over one `F, G` round.
    pub beta1_eff: f64,
    /// Slopes `L1..L9` met while alternating `F` and `G`.
    pub slopes: Vec<f64>,
}

/// Follows the top `theta` share of a vertical-cone segment of S through
/// one `F` and one `G`, recording the lengths and the first nine slopes.
pub fn growth_trace(map: &TwistMap, gamma: &LiftedSegment, theta: f64) -> Result<GrowthTrace, SegmentError> {
    require_canonical(map)?;
    if gamma.cone != Cone::Vertical {
        return Err(SegmentError::WrongCase("growth trace starts from a vertical-cone segment".into()));
    }
    let c = map.config();
    let (a, b) = (map.f_rate(), -map.g_rate());
    let (lo, hi) = if gamma.p0.y <= gamma.p1.y { (gamma.p0, gamma.p1) } else { (gamma.p1, gamma.p0) };
    let start = hi.lerp(lo, theta);
    let f = |p: Point2| Point2::new(p.x + a * (p.y - c.y0), p.y);
    let (u0, u1) = (f(start), f(hi));
    let x = (u1.x - u0.x).abs();
    // G fixes the left end of the horizontal piece relative to the right one
    let g = |p: Point2| Point2::new(p.x, p.y - b * (p.x - c.x0));
    let (w0, w1) = (g(u0), g(u1));
    let y = (w1.y - w0.y).abs();
    let l_v = seg_lengths(gamma).1;

    let mut slopes = vec![gamma.slope];
    let mut l = gamma.slope;
    for i in 1..9 {
        l = slope_step(l, if i % 2 == 1 { a } else { b });
        slopes.push(l);
    }
    if map.equal_shears() {
        let la = lam_alpha(a)?;
        debug_assert!(slopes.iter().all(|s| *s >= la - 1e-12 && *s <= 0.0));
    }
    Ok(GrowthTrace { theta, x, y, eta: y / x, beta1_eff: y / l_v, slopes })
}
