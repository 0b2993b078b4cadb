//! Closed-form planar geometry for a single square cell: angle conventions,
//! radius-`r` circles through two points, circles tangent to a cell border or
//! to an arbitrary line, and the cell frames used to reduce every border to
//! the "top" case.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance (w.r.t. the radius) for on-circle and tangency checks.
pub const EPS_GEOM: f64 = 1e-9;
/// Relative tolerance (w.r.t. the cell size) for the on-line region `L`.
pub const EPS_LINE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeometryError {
    #[error("chord length {chord} exceeds the circle diameter {diameter}")]
    ChordTooLong { chord: f64, diameter: f64 },
    #[error("the two points coincide")]
    DegenerateChord,
    #[error("point is {distance} away from the circle center, expected radius {radius}")]
    OffCircle { distance: f64, radius: f64 },
    #[error("point is farther than 2r from the border line")]
    NoTangentCircle,
    #[error("no circle of the requested sense is tangent to the line through the point")]
    NoSolution,
}

/// Wraps an angle into `[0, 2π)`.
#[inline]
pub fn wrap_2pi(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Wraps an angle into `(-π, π]`.
#[inline]
pub fn wrap_pi(a: f64) -> f64 {
    let w = wrap_2pi(a);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Signed rotation from `from` to `to`, in `(-π, π]`. Positive is CCW.
#[inline]
pub fn signed_diff(to: f64, from: f64) -> f64 {
    wrap_pi(to - from)
}

/// Representative of `a` in the window `(center - π, center + π]`.
#[inline]
pub fn unwrap_near(a: f64, center: f64) -> f64 {
    center + signed_diff(a, center)
}

/// A heading on S¹, stored canonically in `[0, 2π)`.
#[derive(Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    pub fn new(radians: f64) -> Self {
        Angle(wrap_2pi(radians))
    }

    pub fn from_degrees(deg: f64) -> Self {
        // exact at the multiples of 45 degrees
        let w = deg.rem_euclid(360.0);
        let eighths = w / 45.0;
        if eighths.fract() == 0.0 {
            Angle(wrap_2pi(eighths * (PI / 4.0)))
        } else {
            Angle::new(w.to_radians())
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }

    /// The antipode `θ + π`.
    pub fn antipode(self) -> Angle {
        Angle::new(self.0 + PI)
    }

    pub fn rotated(self, by: f64) -> Angle {
        Angle::new(self.0 + by)
    }
}

impl fmt::Debug for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Angle({:.9} rad)", self.0)
    }
}

impl From<f64> for Angle {
    fn from(v: f64) -> Self {
        Angle::new(v)
    }
}

/// Orders `a` and `b` after wrapping both into the interval selected by
/// `reference`: `[-π, π]` when the reference lies strictly inside
/// `(-π/2, π/2)`, `[0, 2π]` otherwise (including exactly `±π/2`).
pub fn wrap_compare(a: Angle, b: Angle, reference: Angle) -> Ordering {
    let r = wrap_pi(reference.value());
    let (wa, wb) = if r > -FRAC_PI_2 && r < FRAC_PI_2 {
        (wrap_pi(a.value()), wrap_pi(b.value()))
    } else {
        (a.value(), b.value())
    };
    wa.partial_cmp(&wb).unwrap_or(Ordering::Equal)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2-D cross product.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    /// Direction angle of the vector, in `(-π, π]`.
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn unit(angle: f64) -> Point2 {
        Point2::new(angle.cos(), angle.sin())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TurnSense {
    /// Counterclockwise.
    Left,
    /// Clockwise.
    Right,
}

impl TurnSense {
    /// `+1` for left, `-1` for right.
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            TurnSense::Left => 1.0,
            TurnSense::Right => -1.0,
        }
    }

    pub fn flipped(self) -> TurnSense {
        match self {
            TurnSense::Left => TurnSense::Right,
            TurnSense::Right => TurnSense::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Point2,
    pub radius: f64,
    pub sense: TurnSense,
}

impl Circle {
    /// Heading of a vehicle travelling this circle in its sense when at `p`.
    /// `p` is not checked to lie on the circle; see [`turn_initial_angle`].
    pub fn heading_at(&self, p: Point2) -> f64 {
        wrap_2pi((p - self.center).angle() + self.sense.sign() * FRAC_PI_2)
    }

    /// Center of the circle a vehicle at `p` with heading `theta` turns on.
    pub fn of_turn(p: Point2, theta: f64, radius: f64, sense: TurnSense) -> Circle {
        let s = sense.sign();
        Circle {
            center: p + Point2::new(-theta.sin(), theta.cos()) * (s * radius),
            radius,
            sense,
        }
    }

    /// Point reached after turning through `arc` radians from heading `theta0`.
    pub fn point_after(&self, theta0: f64, arc: f64) -> Point2 {
        let s = self.sense.sign();
        let phi = theta0 + s * arc;
        self.center + Point2::new(phi.sin(), -phi.cos()) * (s * self.radius)
    }
}

/// The four borders of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Border {
    Bottom,
    Right,
    Top,
    Left,
}

impl Border {
    pub const ALL: [Border; 4] = [Border::Bottom, Border::Right, Border::Top, Border::Left];

    /// Outward unit normal.
    pub fn normal(self) -> Point2 {
        match self {
            Border::Bottom => Point2::new(0.0, -1.0),
            Border::Right => Point2::new(1.0, 0.0),
            Border::Top => Point2::new(0.0, 1.0),
            Border::Left => Point2::new(-1.0, 0.0),
        }
    }

    pub fn opposite(self) -> Border {
        match self {
            Border::Bottom => Border::Top,
            Border::Right => Border::Left,
            Border::Top => Border::Bottom,
            Border::Left => Border::Right,
        }
    }

    /// Number of CCW quarter turns that bring this border to the top.
    pub fn quarter_turns_to_top(self) -> u8 {
        match self {
            Border::Top => 0,
            Border::Right => 1,
            Border::Bottom => 2,
            Border::Left => 3,
        }
    }

    /// Border reached by rotating this one by `k` CCW quarter turns.
    pub fn rotated(self, k: u8) -> Border {
        let idx = |b: Border| match b {
            Border::Bottom => 0u8,
            Border::Right => 1,
            Border::Top => 2,
            Border::Left => 3,
        };
        Border::ALL[((idx(self) + k) % 4) as usize]
    }

    /// Image under the reflection `x -> d - x`.
    pub fn mirrored(self) -> Border {
        match self {
            Border::Right => Border::Left,
            Border::Left => Border::Right,
            b => b,
        }
    }

    /// Signed distance of `p` from the border line, positive outside the cell.
    pub fn outside_distance(self, p: Point2, d: f64) -> f64 {
        match self {
            Border::Bottom => -p.y,
            Border::Right => p.x - d,
            Border::Top => p.y - d,
            Border::Left => -p.x,
        }
    }

    /// Coordinate along the border (the free coordinate of a point on it).
    pub fn coordinate_of(self, p: Point2) -> f64 {
        match self {
            Border::Bottom | Border::Top => p.x,
            Border::Right | Border::Left => p.y,
        }
    }

    /// Point on the border at coordinate `s`.
    pub fn point_at(self, s: f64, d: f64) -> Point2 {
        match self {
            Border::Bottom => Point2::new(s, 0.0),
            Border::Right => Point2::new(d, s),
            Border::Top => Point2::new(s, d),
            Border::Left => Point2::new(0.0, s),
        }
    }
}

/// Rigid rotation of a square cell about its center by a multiple of 90°,
/// mapping world-oriented cell coordinates onto the local frame in which the
/// analyzed border is the top one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellFrame {
    pub d: f64,
    quarter_turns: u8,
}

impl CellFrame {
    pub fn new(d: f64, quarter_turns: u8) -> Self {
        assert!(d > 0.0, "cell size must be positive");
        CellFrame {
            d,
            quarter_turns: quarter_turns % 4,
        }
    }

    /// Frame in which `border` is on top.
    pub fn with_top(d: f64, border: Border) -> Self {
        CellFrame::new(d, border.quarter_turns_to_top())
    }

    pub fn quarter_turns(&self) -> u8 {
        self.quarter_turns
    }

    pub fn rotation(&self) -> f64 {
        self.quarter_turns as f64 * FRAC_PI_2
    }

    pub fn inverse(&self) -> CellFrame {
        CellFrame::new(self.d, (4 - self.quarter_turns) % 4)
    }

    pub fn point_to_local(&self, p: Point2) -> Point2 {
        let d = self.d;
        match self.quarter_turns {
            0 => p,
            1 => Point2::new(d - p.y, p.x),
            2 => Point2::new(d - p.x, d - p.y),
            _ => Point2::new(p.y, d - p.x),
        }
    }

    pub fn point_to_world(&self, p: Point2) -> Point2 {
        self.inverse().point_to_local(p)
    }

    pub fn angle_to_local(&self, a: f64) -> f64 {
        wrap_2pi(a + self.rotation())
    }

    pub fn angle_to_world(&self, a: f64) -> f64 {
        wrap_2pi(a - self.rotation())
    }

    pub fn border_to_local(&self, b: Border) -> Border {
        b.rotated(self.quarter_turns)
    }

    pub fn border_to_world(&self, b: Border) -> Border {
        b.rotated((4 - self.quarter_turns) % 4)
    }
}

/// The two radius-`r` circles through `p` and `e`, returned as
/// `(left, right)`: on the left circle the short arc from `p` to `e` is
/// travelled counterclockwise, on the right one clockwise.
pub fn circles_through_two_points(
    p: Point2,
    e: Point2,
    r: f64,
) -> Result<(Circle, Circle), GeometryError> {
    let chord = e - p;
    let q = chord.norm();
    if q == 0.0 {
        return Err(GeometryError::DegenerateChord);
    }
    if q > 2.0 * r * (1.0 + EPS_GEOM) {
        return Err(GeometryError::ChordTooLong {
            chord: q,
            diameter: 2.0 * r,
        });
    }
    let h = (r * r - 0.25 * q * q).max(0.0).sqrt();
    let mid = (p + e) * 0.5;
    // left normal of the chord direction
    let n = Point2::new(-chord.y, chord.x) * (1.0 / q);
    let left = Circle {
        center: mid + n * h,
        radius: r,
        sense: TurnSense::Left,
    };
    let right = Circle {
        center: mid - n * h,
        radius: r,
        sense: TurnSense::Right,
    };
    Ok((left, right))
}

/// Heading at `p` of a vehicle turning on `circle` (radial direction rotated
/// by +90° for left turns, -90° for right turns).
pub fn turn_initial_angle(circle: &Circle, p: Point2) -> Result<Angle, GeometryError> {
    let dist = p.dist(circle.center);
    if (dist - circle.radius).abs() > EPS_GEOM * circle.radius {
        return Err(GeometryError::OffCircle {
            distance: dist,
            radius: circle.radius,
        });
    }
    Ok(Angle::new(circle.heading_at(p)))
}

/// Turning amount (in `[0, 2π)`) needed on `circle` to go from heading
/// `from` to heading `to`.
pub fn turn_amount(sense: TurnSense, from: f64, to: f64) -> f64 {
    wrap_2pi(sense.sign() * (to - from))
}

/// Heading the vehicle has when it touches `border` tangentially while
/// turning in `sense` inside the cell.
fn tangency_heading(border: Border, sense: TurnSense) -> f64 {
    let outward = border.normal().angle();
    // inside the cell the center lies on the inner side of the border
    wrap_2pi(outward + sense.sign() * FRAC_PI_2)
}

/// Radius-`r` circle through `p`, tangent (from inside) to the line of
/// `border`, travelled in `sense`. Of the two algebraic solutions the one
/// where `p` precedes the tangency point along the travel is returned.
pub fn circle_tangent_to_cell_border(
    p: Point2,
    border: Border,
    sense: TurnSense,
    d: f64,
    r: f64,
) -> Result<Circle, GeometryError> {
    // distance from p to the line, positive inside
    let depth = -border.outside_distance(p, d);
    let off = r - depth;
    let disc = r * r - off * off;
    if disc < -EPS_GEOM * r * r {
        return Err(GeometryError::NoTangentCircle);
    }
    let s = disc.max(0.0).sqrt();
    let inward = -border.normal();
    let along = Point2::new(-inward.y, inward.x);
    // center is r inside the border line
    let base = p + inward * (r - depth);
    let target = tangency_heading(border, sense);
    let mut best: Option<(f64, Circle)> = None;
    for sign in [1.0, -1.0] {
        let c = Circle {
            center: base + along * (sign * s),
            radius: r,
            sense,
        };
        let amount = turn_amount(sense, c.heading_at(p), target);
        let amount = if amount > TAU - 1e-12 { 0.0 } else { amount };
        if best.is_none_or(|(a, _)| amount < a) {
            best = Some((amount, c));
        }
    }
    Ok(best.expect("two candidates").1)
}

/// An infinite straight line given by one of its points and its direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub point: Point2,
    pub direction: f64,
}

impl Line {
    pub fn through(point: Point2, direction: f64) -> Self {
        Line { point, direction }
    }

    /// `y = tan(slope_angle) x + intercept`.
    pub fn from_slope_intercept(slope_angle: f64, intercept: f64) -> Self {
        Line {
            point: Point2::new(0.0, intercept),
            direction: slope_angle,
        }
    }

    /// Signed distance of `p`, positive on the left of the direction.
    pub fn side(&self, p: Point2) -> f64 {
        Point2::unit(self.direction).cross(p - self.point)
    }
}

/// Radius-`r` circle through `p` tangent to `line`, travelled in `sense` so
/// that the vehicle leaves it with the line's direction. Returns the circle
/// and the heading at `p`. When `p` is on the line the circle degenerates to
/// an immediate tangency and the heading equals the line direction.
pub fn circle_tangent_to_line_through_point(
    p: Point2,
    line: Line,
    r: f64,
    sense: TurnSense,
) -> Result<(Circle, Angle), GeometryError> {
    let sgn = sense.sign();
    let u = Point2::unit(line.direction);
    let n = Point2::new(-u.y, u.x);
    // center = line.point + t u + sgn r n, with |center - p| = r
    let w = line.point - p + n * (sgn * r);
    let b = w.dot(u);
    let disc = b * b - w.dot(w) + r * r;
    if disc < -EPS_GEOM * r * r {
        return Err(GeometryError::NoSolution);
    }
    let s = disc.max(0.0).sqrt();
    let mut best: Option<(f64, Circle, f64)> = None;
    for t in [-b + s, -b - s] {
        let c = Circle {
            center: line.point + u * t + n * (sgn * r),
            radius: r,
            sense,
        };
        let heading = c.heading_at(p);
        let amount = turn_amount(sense, heading, line.direction);
        let amount = if amount > TAU - 1e-9 { 0.0 } else { amount };
        if best.is_none_or(|(a, _, _)| amount < a) {
            best = Some((amount, c, heading));
        }
    }
    let (_, c, heading) = best.expect("two candidates");
    Ok((c, Angle::new(heading)))
}

/// Which corner of the top border a CS construction passes through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TopEdge {
    /// `(0, d)`.
    Left,
    /// `(d, d)`.
    Right,
}

impl TopEdge {
    pub fn point(self, d: f64) -> Point2 {
        match self {
            TopEdge::Left => Point2::new(0.0, d),
            TopEdge::Right => Point2::new(d, d),
        }
    }
}

/// Position of a point relative to the CS border line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CsRegion {
    Above,
    OnLine,
    Below,
}

/// Classifies `p` against the line through the top-border edge with slope
/// `tan(theta_c)`: `y = m x + q` with `q = (1 - m) d` for the right edge and
/// `q = d` for the left edge. A vertical command uses the limit
/// `theta_c -> π/2⁻`, i.e. "above" means left of the edge abscissa.
pub fn cs_region_classify(p: Point2, theta_c: Angle, edge: TopEdge, d: f64) -> CsRegion {
    let tol = EPS_LINE * d;
    let e = edge.point(d);
    let t = theta_c.value();
    let cos = t.cos();
    let diff = if cos.abs() < 1e-15 {
        e.x - p.x
    } else {
        let m = t.tan();
        let q = e.y - m * e.x;
        p.y - (m * p.x + q)
    };
    if diff.abs() <= tol {
        CsRegion::OnLine
    } else if diff > 0.0 {
        CsRegion::Above
    } else {
        CsRegion::Below
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT3: f64 = 1.732_050_807_568_877_2;

    #[test]
    fn wrap_compare_selects_interval_by_reference() {
        let a = Angle::from_degrees(350.0);
        let b = Angle::from_degrees(10.0);
        assert_eq!(wrap_compare(a, b, Angle::ZERO), Ordering::Less);
        assert_eq!(wrap_compare(a, b, Angle::from_degrees(180.0)), Ordering::Greater);
        let c = Angle::from_degrees(90.0);
        for r in [0.0, 90.0, 200.0] {
            assert_eq!(wrap_compare(c, c, Angle::from_degrees(r)), Ordering::Equal);
        }
        // exactly π/2 picks the [0, 2π] wrap
        assert_eq!(wrap_compare(a, b, Angle::from_degrees(90.0)), Ordering::Greater);
    }

    #[test]
    fn degrees_exact_on_octants() {
        assert_eq!(Angle::from_degrees(90.0).value(), FRAC_PI_2);
        assert_eq!(Angle::from_degrees(180.0).value(), PI);
        assert_eq!(Angle::from_degrees(-90.0).value(), 3.0 * FRAC_PI_2);
        assert_eq!(Angle::from_degrees(360.0).value(), 0.0);
        assert_eq!(Angle::from_degrees(45.0).value(), PI / 4.0);
    }

    #[test]
    fn circles_through_symmetric_chord() {
        let (l, r) =
            circles_through_two_points(Point2::new(0.0, 0.0), Point2::new(2.0, 0.0), 2.0).unwrap();
        // chord along +x: left circle is above
        assert!((l.center.x - 1.0).abs() < 1e-12 && (l.center.y - SQRT3).abs() < 1e-12);
        assert!((r.center.x - 1.0).abs() < 1e-12 && (r.center.y + SQRT3).abs() < 1e-12);
    }

    #[test]
    fn circles_through_diameter_coincide() {
        let (l, r) =
            circles_through_two_points(Point2::new(0.0, 0.0), Point2::new(2.0, 0.0), 1.0).unwrap();
        assert!(l.center.dist(Point2::new(1.0, 0.0)) < 1e-12);
        assert!(r.center.dist(Point2::new(1.0, 0.0)) < 1e-12);
    }

    #[test]
    fn circles_through_errors() {
        assert!(matches!(
            circles_through_two_points(Point2::new(0.0, 0.0), Point2::new(0.0, 3.0), 1.0),
            Err(GeometryError::ChordTooLong { .. })
        ));
        assert_eq!(
            circles_through_two_points(Point2::new(1.0, 1.0), Point2::new(1.0, 1.0), 1.0),
            Err(GeometryError::DegenerateChord)
        );
    }

    #[test]
    fn initial_angles() {
        let r = 1.5;
        let left = Circle { center: Point2::new(0.0, 0.0), radius: r, sense: TurnSense::Left };
        let right = Circle { sense: TurnSense::Right, ..left };
        let a = turn_initial_angle(&left, Point2::new(r, 0.0)).unwrap().value();
        assert!((a - FRAC_PI_2).abs() < 1e-12);
        let a = turn_initial_angle(&right, Point2::new(r, 0.0)).unwrap().value();
        assert!((a - 3.0 * FRAC_PI_2).abs() < 1e-12);
        let a = turn_initial_angle(&left, Point2::new(0.0, r)).unwrap().value();
        assert!((a - PI).abs() < 1e-12);
        assert!(matches!(
            turn_initial_angle(&left, Point2::new(0.0, 2.0 * r)),
            Err(GeometryError::OffCircle { .. })
        ));
    }

    #[test]
    fn tangent_to_right_border_examples() {
        let c = circle_tangent_to_cell_border(
            Point2::new(0.6, 0.2),
            Border::Right,
            TurnSense::Left,
            1.0,
            0.4,
        )
        .unwrap();
        assert!(c.center.dist(Point2::new(0.6, 0.6)) < 1e-12);
        let c = circle_tangent_to_cell_border(
            Point2::new(0.2, 0.0),
            Border::Right,
            TurnSense::Left,
            1.0,
            0.4,
        )
        .unwrap();
        assert!(c.center.dist(Point2::new(0.6, 0.0)) < 1e-12);
        assert_eq!(
            circle_tangent_to_cell_border(
                Point2::new(0.0, 0.2),
                Border::Right,
                TurnSense::Left,
                1.0,
                0.4
            ),
            Err(GeometryError::NoTangentCircle)
        );
    }

    #[test]
    fn cs_regions() {
        let d = 1.0;
        let t = Angle::new(PI / 4.0);
        assert_eq!(cs_region_classify(Point2::new(0.5, 0.5), t, TopEdge::Right, d), CsRegion::OnLine);
        assert_eq!(cs_region_classify(Point2::new(0.2, 0.9), t, TopEdge::Right, d), CsRegion::Above);
        assert_eq!(cs_region_classify(Point2::new(0.9, 0.2), t, TopEdge::Right, d), CsRegion::Below);
        let v = Angle::new(FRAC_PI_2);
        assert_eq!(cs_region_classify(Point2::new(0.3, 0.5), v, TopEdge::Right, d), CsRegion::Above);
        assert_eq!(cs_region_classify(Point2::new(1.0, 0.5), v, TopEdge::Right, d), CsRegion::OnLine);
        assert_eq!(cs_region_classify(Point2::new(0.3, 0.5), v, TopEdge::Left, d), CsRegion::Below);
    }

    #[test]
    fn tangent_line_degenerate_on_line() {
        let line = Line::through(Point2::new(1.0, 1.0), PI / 4.0);
        let (c, h) =
            circle_tangent_to_line_through_point(Point2::new(0.5, 0.5), line, 2.0, TurnSense::Left)
                .unwrap();
        assert!((h.value() - PI / 4.0).abs() < 1e-9);
        assert!((c.center.dist(Point2::new(0.5, 0.5)) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn frame_roundtrip_each_rotation() {
        let p = Point2::new(0.13, 0.71);
        for k in 0..4 {
            let f = CellFrame::new(1.0, k);
            let back = f.point_to_world(f.point_to_local(p));
            assert!(back.dist(p) < 1e-12);
            let a = 1.234;
            assert!((f.angle_to_world(f.angle_to_local(a)) - a).abs() < 1e-12);
        }
        // right border lands on top
        let f = CellFrame::with_top(1.0, Border::Right);
        assert!(f.point_to_local(Point2::new(1.0, 0.5)).dist(Point2::new(0.5, 1.0)) < 1e-12);
        assert_eq!(f.border_to_local(Border::Right), Border::Top);
        let f = CellFrame::with_top(1.0, Border::Left);
        assert!(f.point_to_local(Point2::new(0.0, 0.5)).dist(Point2::new(0.5, 1.0)) < 1e-12);
        assert_eq!(f.border_to_local(Border::Left), Border::Top);
    }
}
