//! Θ functions: the headings at a point of a cell from which a chosen border
//! is reached by a path that stays inside the cell.
//!
//! Everything is computed in the local frame where the target is the top
//! border (`y = d`), with corners `e_L = (0, d)` and `e_R = (d, d)`. The
//! maximum is obtained from the minimum by reflecting the cell across its
//! vertical midline (`x → d − x`, `θ → π − θ`, left and right turns swap).

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    circle_tangent_to_cell_border, circle_tangent_to_line_through_point, circles_through_two_points,
    turn_amount, wrap_2pi, Angle, Border, CellFrame, Circle, GeometryError, Line, Point2, TopEdge,
    TurnSense,
};
use crate::kinematics::{control_law, ControlOutput, VehicleParams, HEADING_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThetaError {
    #[error("point ({x}, {y}) lies outside the cell [0, {d}]^2")]
    PointOutsideCell { x: f64, y: f64, d: f64 },
    #[error("start and target border must differ")]
    SameBorder,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Closed arc of S¹ starting at `lo` and running counterclockwise for
/// `width` radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleInterval {
    lo: f64,
    width: f64,
}

impl AngleInterval {
    pub fn new(lo: f64, width: f64) -> Self {
        AngleInterval { lo: wrap_2pi(lo), width: width.clamp(0.0, TAU) }
    }

    /// Interval from `lo` counterclockwise to `hi`.
    pub fn from_bounds(lo: f64, hi: f64) -> Self {
        Self::new(lo, wrap_2pi(hi - lo))
    }

    pub fn full() -> Self {
        AngleInterval { lo: 0.0, width: TAU }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        wrap_2pi(self.lo + self.width)
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn is_full(&self) -> bool {
        self.width >= TAU
    }

    pub fn contains(&self, theta: f64) -> bool {
        self.contains_dilated(theta, 0.0)
    }

    /// Membership after widening both ends by `tol`.
    pub fn contains_dilated(&self, theta: f64, tol: f64) -> bool {
        if self.width + 2.0 * tol >= TAU {
            return true;
        }
        wrap_2pi(theta - self.lo + tol) <= self.width + 2.0 * tol
    }

    /// Angular distance from `theta` to the nearer endpoint.
    pub fn endpoint_distance(&self, theta: f64) -> f64 {
        if self.is_full() {
            return f64::INFINITY;
        }
        let a = wrap_2pi(theta - self.lo);
        let b = wrap_2pi(theta - self.hi());
        a.min(TAU - a).min(b.min(TAU - b))
    }

    pub fn rotated(&self, by: f64) -> Self {
        AngleInterval { lo: wrap_2pi(self.lo + by), width: self.width }
    }

    /// Image under `θ → π − θ`, which reverses orientation.
    pub fn reflected(&self) -> Self {
        AngleInterval { lo: wrap_2pi(PI - self.lo - self.width), width: self.width }
    }

    /// Intersection with another interval (0, 1 or 2 pieces).
    pub fn intersect(&self, other: &AngleInterval) -> Vec<AngleInterval> {
        if self.is_full() {
            return vec![*other];
        }
        if other.is_full() {
            return vec![*self];
        }
        let mut out = Vec::new();
        // pieces of `other` expressed relative to self.lo
        let start = wrap_2pi(other.lo - self.lo);
        for (s, w) in [(start, other.width), (start - TAU, other.width)] {
            let a = s.max(0.0);
            let b = (s + w).min(self.width);
            if b >= a {
                out.push(AngleInterval::new(self.lo + a, b - a));
            }
        }
        out
    }
}

/// Up to two disjoint closed arcs; the empty list is the empty set.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AngleIntervalSet {
    intervals: Vec<AngleInterval>,
}

/// Gaps up to this width are closed when normalizing.
pub const MERGE_GAP: f64 = 1e-9;

impl AngleIntervalSet {
    pub fn empty() -> Self {
        AngleIntervalSet { intervals: Vec::new() }
    }

    pub fn single(i: AngleInterval) -> Self {
        AngleIntervalSet { intervals: vec![i] }
    }

    pub fn full() -> Self {
        Self::single(AngleInterval::full())
    }

    /// Builds a normalized set: overlapping pieces and gaps `≤ MERGE_GAP`
    /// are merged, pieces are ordered by start angle.
    pub fn from_intervals(pieces: impl IntoIterator<Item = AngleInterval>) -> Self {
        let mut v: Vec<AngleInterval> = pieces.into_iter().collect();
        if v.iter().any(|i| i.is_full()) {
            return Self::full();
        }
        v.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut merged: Vec<AngleInterval> = Vec::new();
        for i in v {
            if let Some(last) = merged.last_mut() {
                let gap = i.lo - (last.lo + last.width);
                if gap <= MERGE_GAP {
                    let end = (last.lo + last.width).max(i.lo + i.width);
                    last.width = (end - last.lo).min(TAU);
                    continue;
                }
            }
            merged.push(i);
        }
        // seam between the last piece and the first one
        while merged.len() > 1 {
            let last = *merged.last().unwrap();
            let first = merged[0];
            let gap = first.lo + TAU - (last.lo + last.width);
            if gap <= MERGE_GAP {
                let end = (first.lo + TAU + first.width).max(last.lo + last.width);
                merged.pop();
                merged[0] = AngleInterval::new(last.lo, (end - last.lo).min(TAU));
            } else {
                break;
            }
        }
        if merged.len() == 1 && merged[0].width >= TAU - MERGE_GAP {
            return Self::full();
        }
        AngleIntervalSet { intervals: merged }
    }

    pub fn intervals(&self) -> &[AngleInterval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, theta: f64) -> bool {
        self.intervals.iter().any(|i| i.contains(theta))
    }

    pub fn contains_dilated(&self, theta: f64, tol: f64) -> bool {
        self.intervals.iter().any(|i| i.contains_dilated(theta, tol))
    }

    pub fn endpoint_distance(&self, theta: f64) -> f64 {
        self.intervals.iter().map(|i| i.endpoint_distance(theta)).fold(f64::INFINITY, f64::min)
    }

    pub fn rotated(&self, by: f64) -> Self {
        Self::from_intervals(self.intervals.iter().map(|i| i.rotated(by)))
    }

    pub fn reflected(&self) -> Self {
        Self::from_intervals(self.intervals.iter().map(|i| i.reflected()))
    }

    pub fn intersect_interval(&self, other: &AngleInterval) -> Self {
        Self::from_intervals(self.intervals.iter().flat_map(|i| i.intersect(other)))
    }

    pub fn union(&self, other: &AngleIntervalSet) -> Self {
        Self::from_intervals(self.intervals.iter().chain(other.intervals.iter()).copied())
    }

    /// Angular gap between the two pieces (`None` unless there are two).
    pub fn gap(&self) -> Option<f64> {
        match self.intervals.as_slice() {
            [a, b] => {
                let g1 = wrap_2pi(b.lo - (a.lo + a.width));
                let g2 = wrap_2pi(a.lo - (b.lo + b.width));
                Some(g1.min(g2))
            }
            _ => None,
        }
    }
}

/// Which construction produced a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundKind {
    /// Turn through a top-border corner.
    TurnLeft,
    TurnRight,
    /// Turn starting at the antipode of the command.
    LimitedTurn,
    /// Turn tangent to a border of the cell (local frame).
    TangentBorder(Border),
    /// Turn tangent to the straight line through a top corner along `θ_c`.
    Cs(TurnSense),
    Straight,
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackwardBoundCase {
    pub kind: BoundKind,
    pub witness: Option<Circle>,
}

impl BackwardBoundCase {
    fn new(kind: BoundKind, witness: Option<Circle>) -> Self {
        BackwardBoundCase { kind, witness }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaBounds {
    pub set: AngleIntervalSet,
    pub min_case: BackwardBoundCase,
    pub max_case: BackwardBoundCase,
    /// The emptiness condition for backward commands, evaluated as written
    /// (always false for forward commands).
    pub no_solution_flag: bool,
}

/// Wraps into `(-π/2, 3π/2]`, where headings pointing at the top border are
/// ordered without a seam.
pub(crate) fn up_wrap(a: f64) -> f64 {
    let w = wrap_2pi(a + FRAC_PI_2) - FRAC_PI_2;
    if w <= -FRAC_PI_2 {
        w + TAU
    } else {
        w
    }
}

/// A constant-curvature arc from `p` to the top border region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct EdgeTurn {
    pub circle: Circle,
    /// Heading at `p`, in `up_wrap` range.
    pub start: f64,
    /// Heading at the corner (or at the tangency point).
    pub out: f64,
    pub tangent: Option<Border>,
}

/// Turn from `p` through corner `edge`, with the tangent corrections that
/// keep the turn inside the cell applied.
pub(crate) fn edge_turn(
    p: Point2,
    edge: TopEdge,
    sense: TurnSense,
    d: f64,
    r: f64,
) -> Result<EdgeTurn, GeometryError> {
    let e = edge.point(d);
    let (left, right) = circles_through_two_points(p, e, r)?;
    let circle = if sense == TurnSense::Left { left } else { right };
    let start = up_wrap(circle.heading_at(p));
    let out = start + sense.sign() * turn_amount(sense, start, circle.heading_at(e));
    let correction = match (edge, sense) {
        (TopEdge::Right, TurnSense::Left) if out > FRAC_PI_2 => Some((Border::Right, FRAC_PI_2)),
        (TopEdge::Right, TurnSense::Right) if out < 0.0 => Some((Border::Top, 0.0)),
        (TopEdge::Left, TurnSense::Right) if out < FRAC_PI_2 => Some((Border::Left, FRAC_PI_2)),
        (TopEdge::Left, TurnSense::Left) if out > PI => Some((Border::Top, PI)),
        _ => None,
    };
    match correction {
        None => Ok(EdgeTurn { circle, start, out, tangent: None }),
        Some((border, out)) => {
            let c = circle_tangent_to_cell_border(p, border, sense, d, r)?;
            let start = up_wrap(c.heading_at(p));
            Ok(EdgeTurn { circle: c, start, out, tangent: Some(border) })
        }
    }
}

fn turn_kind(t: &EdgeTurn, sense: TurnSense) -> BoundKind {
    match t.tangent {
        Some(b) => BoundKind::TangentBorder(b),
        None if sense == TurnSense::Left => BoundKind::TurnLeft,
        None => BoundKind::TurnRight,
    }
}

/// Moves a point lying on a top corner slightly inside so the corner circles
/// are defined.
fn off_corner(p: Point2, d: f64) -> Point2 {
    let eps = 1e-9 * d;
    let mut q = p;
    for e in [TopEdge::Left.point(d), TopEdge::Right.point(d)] {
        if q.dist(e) < eps {
            q = Point2::new(q.x + if e.x > 0.0 { -eps } else { eps }, q.y - eps);
        }
    }
    q
}

/// Smallest (clockwise-most) heading that reaches the top, for a forward
/// command (`θ_c ∈ [0, π]`), local frame.
fn min_forward(p: Point2, tc: f64, d: f64, r: f64) -> Result<(f64, BackwardBoundCase), GeometryError> {
    let l_r = edge_turn(p, TopEdge::Right, TurnSense::Left, d, r)?;
    if tc > l_r.start && tc >= l_r.out {
        if control_law(Angle::new(l_r.start), Angle::new(tc)) == ControlOutput::TurnRight {
            let cp = tc + PI;
            let c = Circle::of_turn(p, cp, r, TurnSense::Left);
            return Ok((up_wrap(cp), BackwardBoundCase::new(BoundKind::LimitedTurn, Some(c))));
        }
        let kind = turn_kind(&l_r, TurnSense::Left);
        return Ok((l_r.start, BackwardBoundCase::new(kind, Some(l_r.circle))));
    }
    let r_r = edge_turn(p, TopEdge::Right, TurnSense::Right, d, r)?;
    if tc < r_r.start && tc <= r_r.out {
        let kind = turn_kind(&r_r, TurnSense::Right);
        return Ok((r_r.start, BackwardBoundCase::new(kind, Some(r_r.circle))));
    }
    cs_bound(p, tc, TopEdge::Right, d, r)
}

/// LS / RS / S construction through corner `edge`.
fn cs_bound(
    p: Point2,
    tc: f64,
    edge: TopEdge,
    d: f64,
    r: f64,
) -> Result<(f64, BackwardBoundCase), GeometryError> {
    let line = Line::through(edge.point(d), tc);
    let side = line.side(p);
    if side.abs() <= 1e-12 * d {
        return Ok((up_wrap(tc), BackwardBoundCase::new(BoundKind::Straight, None)));
    }
    let sense = if side > 0.0 { TurnSense::Left } else { TurnSense::Right };
    let (c, start) = circle_tangent_to_line_through_point(p, line, r, sense)?;
    Ok((up_wrap(start.value()), BackwardBoundCase::new(BoundKind::Cs(sense), Some(c))))
}

/// Smallest heading for a backward command (`θ_c ∈ (π, 2π)`), local frame.
fn min_backward(p: Point2, tc: f64, d: f64, r: f64) -> Result<(f64, BackwardBoundCase), GeometryError> {
    let cp = up_wrap(tc - PI);
    let r_r = edge_turn(p, TopEdge::Right, TurnSense::Right, d, r)?;
    if cp >= r_r.start {
        return Ok((r_r.start, BackwardBoundCase::new(turn_kind(&r_r, TurnSense::Right), Some(r_r.circle))));
    }
    let l_r = edge_turn(p, TopEdge::Right, TurnSense::Left, d, r)?;
    if cp > l_r.start {
        let c = Circle::of_turn(p, cp, r, TurnSense::Left);
        return Ok((cp, BackwardBoundCase::new(BoundKind::LimitedTurn, Some(c))));
    }
    Ok((l_r.start, BackwardBoundCase::new(turn_kind(&l_r, TurnSense::Left), Some(l_r.circle))))
}

fn mirror_point(p: Point2, d: f64) -> Point2 {
    Point2::new(d - p.x, p.y)
}

fn mirror_case(c: BackwardBoundCase, d: f64) -> BackwardBoundCase {
    let flip = |s: TurnSense| s.flipped();
    let kind = match c.kind {
        BoundKind::TurnLeft => BoundKind::TurnRight,
        BoundKind::TurnRight => BoundKind::TurnLeft,
        BoundKind::TangentBorder(b) => BoundKind::TangentBorder(b.mirrored()),
        BoundKind::Cs(s) => BoundKind::Cs(flip(s)),
        k => k,
    };
    let witness = c.witness.map(|w| Circle {
        center: mirror_point(w.center, d),
        radius: w.radius,
        sense: flip(w.sense),
    });
    BackwardBoundCase { kind, witness }
}

fn is_forward(tc: f64) -> bool {
    // [0, π] is forward; π exactly counts as forward
    wrap_2pi(tc) <= PI || wrap_2pi(tc) >= TAU - 1e-15
}

fn min_bound(p: Point2, tc: f64, d: f64, r: f64) -> Result<(f64, BackwardBoundCase), GeometryError> {
    if is_forward(tc) {
        min_forward(p, wrap_2pi(tc).min(PI), d, r)
    } else {
        min_backward(p, tc, d, r)
    }
}

fn check_inside(p: Point2, d: f64) -> Result<(), ThetaError> {
    let tol = 1e-12 * d;
    if !p.is_finite() || p.x < -tol || p.y < -tol || p.x > d + tol || p.y > d + tol {
        return Err(ThetaError::PointOutsideCell { x: p.x, y: p.y, d });
    }
    Ok(())
}

/// Θ for the top border in the local frame.
fn theta_top(p: Point2, tc: f64, params: &VehicleParams) -> Result<ThetaBounds, ThetaError> {
    let (d, r) = (params.d, params.r);
    check_inside(p, d)?;
    let p = off_corner(Point2::new(p.x.clamp(0.0, d), p.y.clamp(0.0, d)), d);
    let tc = wrap_2pi(tc);
    let (lo, min_case) = min_bound(p, tc, d, r)?;
    let (mlo, mcase) = min_bound(mirror_point(p, d), wrap_2pi(PI - tc), d, r)?;
    let hi = up_wrap(PI - mlo);
    let max_case = mirror_case(mcase, d);

    let mut no_solution = false;
    if !is_forward(tc) {
        let l_l = edge_turn(p, TopEdge::Left, TurnSense::Left, d, r)?;
        let r_r = edge_turn(p, TopEdge::Right, TurnSense::Right, d, r)?;
        let tca = Angle::new(tc);
        let left_min = control_law(Angle::new(lo), tca) == ControlOutput::TurnLeft;
        let right_max = control_law(Angle::new(hi), tca) == ControlOutput::TurnRight;
        no_solution = (left_min && lo > l_l.start) || (right_max && hi < r_r.start);
    }
    let empty = no_solution || lo > hi + HEADING_TOL;
    let set = if empty {
        AngleIntervalSet::empty()
    } else {
        AngleIntervalSet::single(AngleInterval::from_bounds(lo, hi.max(lo)))
    };
    Ok(ThetaBounds { set, min_case, max_case, no_solution_flag: no_solution })
}

/// Θ for a forward command (`θ_c ∈ [0, π]` in the frame where `frame` maps
/// the target onto the top border). `p` and the result are in cell
/// coordinates.
pub fn theta_bounds_forward(
    p: Point2,
    theta_c: Angle,
    params: &VehicleParams,
    frame: &CellFrame,
) -> Result<ThetaBounds, ThetaError> {
    theta_bounds_in_frame(p, theta_c, params, frame)
}

/// Θ for a backward command (`θ_c ∈ (π, 2π)` in the local frame).
pub fn theta_bounds_backward(
    p: Point2,
    theta_c: Angle,
    params: &VehicleParams,
    frame: &CellFrame,
) -> Result<ThetaBounds, ThetaError> {
    theta_bounds_in_frame(p, theta_c, params, frame)
}

fn theta_bounds_in_frame(
    p: Point2,
    theta_c: Angle,
    params: &VehicleParams,
    frame: &CellFrame,
) -> Result<ThetaBounds, ThetaError> {
    let local = frame.point_to_local(p);
    let tc = frame.angle_to_local(theta_c.value());
    let mut b = theta_top(local, tc, params)?;
    let back = -frame.rotation();
    b.set = b.set.rotated(back);
    Ok(b)
}

/// Headings at `p` (cell coordinates) from which `target` is reached
/// without leaving the cell.
pub fn theta_bounds(
    p: Point2,
    theta_c: Angle,
    target: Border,
    params: &VehicleParams,
) -> Result<ThetaBounds, ThetaError> {
    let frame = CellFrame::with_top(params.d, target);
    theta_bounds_in_frame(p, theta_c, params, &frame)
}

/// Headings at a point of `start` that move into the cell: the open
/// half-circle facing inward, closed at the ends (tangent headings are
/// resolved exactly by [`crate::kinematics::enters_cell`]).
pub fn entering_headings(start: Border) -> AngleInterval {
    let inward = (-start.normal()).angle();
    AngleInterval::new(inward - FRAC_PI_2, PI)
}

/// Θ restricted to a starting border: `s` is the coordinate along `start`
/// (cell coordinates), the result keeps only headings entering the cell.
pub fn theta_border_restricted(
    s: f64,
    start: Border,
    target: Border,
    theta_c: Angle,
    params: &VehicleParams,
) -> Result<AngleIntervalSet, ThetaError> {
    if start == target {
        return Err(ThetaError::SameBorder);
    }
    let p = start.point_at(s.clamp(0.0, params.d), params.d);
    let b = theta_bounds(p, theta_c, target, params)?;
    Ok(b.set.intersect_interval(&entering_headings(start)))
}
