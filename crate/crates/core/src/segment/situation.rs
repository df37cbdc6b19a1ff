use crate::geometry::{LiftedSegment, Point2};
use crate::twist::TwistMap;

use super::SegmentError;

/// What a history of segment iterates certifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Situation {
    /// Some iterate crosses S from its left edge to its right edge.
    Situation1Horizontal,
    /// Some iterate crosses S from its bottom edge to its top edge.
    Situation1Vertical,
    /// Every snapshot holds a segment joining two adjacent edges of S, each
    /// sharing an endpoint with one from the previous snapshot.
    Situation2CornerChain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

fn edges_of(p: Point2, map: &TwistMap, tol: f64) -> Vec<Edge> {
    let c = map.config();
    let mut v = Vec::new();
    if (p.x - c.x0).abs() < tol {
        v.push(Edge::Left);
    }
    if (p.x - c.x1).abs() < tol {
        v.push(Edge::Right);
    }
    if (p.y - c.y0).abs() < tol {
        v.push(Edge::Bottom);
    }
    if (p.y - c.y1).abs() < tol {
        v.push(Edge::Top);
    }
    v
}

fn spans(s: &LiftedSegment, map: &TwistMap, a: Edge, b: Edge, tol: f64) -> bool {
    let e0 = edges_of(s.p0, map, tol);
    let e1 = edges_of(s.p1, map, tol);
    (e0.contains(&a) && e1.contains(&b)) || (e0.contains(&b) && e1.contains(&a))
}

fn is_corner(s: &LiftedSegment, map: &TwistMap, tol: f64) -> bool {
    let horizontal = [Edge::Left, Edge::Right];
    let vertical = [Edge::Bottom, Edge::Top];
    horizontal.iter().any(|h| vertical.iter().any(|v| spans(s, map, *h, *v, tol)))
}

/// Classifies a history of snapshots, each the list of pieces of one
/// iterate that lie in S (fundamental coordinates).
pub fn classify_situation(history: &[Vec<LiftedSegment>], map: &TwistMap) -> Result<Situation, SegmentError> {
    if history.is_empty() {
        return Err(SegmentError::EmptyHistory);
    }
    let tol = 1e-9;
    let s = map.s_rect();
    for snap in history {
        for seg in snap.iter().filter(|g| s.contains_tol(g.midpoint(), tol)) {
            if spans(seg, map, Edge::Left, Edge::Right, tol) {
                return Ok(Situation::Situation1Horizontal);
            }
            if spans(seg, map, Edge::Bottom, Edge::Top, tol) {
                return Ok(Situation::Situation1Vertical);
            }
        }
    }
    if history.len() >= 4 {
        let corners: Vec<Vec<&LiftedSegment>> =
            history.iter().map(|snap| snap.iter().filter(|g| is_corner(g, map, tol)).collect()).collect();
        let linked = corners.windows(2).all(|w| {
            w[0].iter().any(|a| {
                w[1].iter().any(|b| {
                    [a.p0, a.p1].iter().any(|p| b.p0.dist(*p) < 1e-8 || b.p1.dist(*p) < 1e-8)
                })
            })
        });
        if linked {
            return Ok(Situation::Situation2CornerChain);
        }
    }
    Err(SegmentError::Undetermined(history.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Cone;
    use crate::segment::limit_rectangle;
    use crate::twist::TwistConfig;

    #[test]
    fn vertical_chord() {
        let m = TwistConfig::symmetric(3.5).validate().unwrap();
        let c = *m.config();
        let chord = LiftedSegment::new(Point2::new(0.5, c.y0), Point2::new(0.45, c.y1), Cone::Vertical).unwrap();
        assert_eq!(classify_situation(&[vec![], vec![chord]], &m).unwrap(), Situation::Situation1Vertical);
    }

    #[test]
    fn rectangle_chain() {
        let m = TwistConfig::symmetric(3.5).validate().unwrap();
        let r = limit_rectangle(&m).unwrap();
        let hist: Vec<Vec<LiftedSegment>> = (0..8).map(|i| vec![r.segments[i % 4]]).collect();
        assert_eq!(classify_situation(&hist, &m).unwrap(), Situation::Situation2CornerChain);
    }

    #[test]
    fn broken_chain_undetermined() {
        let m = TwistConfig::symmetric(3.5).validate().unwrap();
        let r = limit_rectangle(&m).unwrap();
        let hist = vec![vec![r.segments[0]], vec![r.segments[2]], vec![r.segments[0]], vec![r.segments[2]]];
        // ab and cd share no endpoint
        assert!(matches!(classify_situation(&hist, &m), Err(SegmentError::Undetermined(4))));
        assert!(matches!(classify_situation(&[], &m), Err(SegmentError::EmptyHistory)));
    }
}
