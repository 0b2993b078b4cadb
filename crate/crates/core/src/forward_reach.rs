//! Φ functions: arrival headings at a point of one border over all
//! trajectories that start anywhere on another border of the same cell.
//!
//! The set is a union of a left-arc family, a right-arc family and, when an S
//! or CS path lands on the point, the command heading itself. Each arc
//! family is an interval union whose endpoints belong to a finite list of
//! closed-form critical headings: circles through a cell corner, circles
//! tangent to a border line, arcs whose start heading is the antipode of the
//! command (or the command itself), the command heading, and tangential
//! arrival. Between consecutive critical headings membership is constant, so
//! it is decided once per piece by constructing the arc and checking it with
//! [`cell_exit_map`].
//!
//! Case labels mirror the piecewise tables for the two base arrival borders
//! (top and right, start on the bottom) and are used to audit coverage.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cellular_backward::{up_wrap, AngleInterval, AngleIntervalSet};
use crate::geometry::{
    circle_tangent_to_cell_border, circles_through_two_points, turn_amount, wrap_2pi, wrap_pi,
    Angle, Border, CellFrame, Circle, GeometryError, Point2, TurnSense,
};
use crate::kinematics::{cell_exit_map, Configuration, PathType, VehicleParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhiError {
    #[error("point ({x}, {y}) is not on the {border:?} border of a cell of size {d}")]
    PointNotOnBorder { x: f64, y: f64, border: Border, d: f64 },
    #[error("start and arrival border must differ")]
    UnsupportedPair,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Construction that produced an endpoint of a Φ interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EndpointKind {
    /// Arc through a corner of the cell.
    Corner(TurnSense, Corner),
    /// Arc tangent to a border line.
    Tangent(TurnSense, Border),
    /// Arc whose start heading is the antipode of the command.
    AntipodeStart(TurnSense),
    /// Arc whose start heading equals the command.
    CommandStart(TurnSense),
    /// The command heading (S / CS arrivals, or arcs aligning exactly at the point).
    Command,
    /// Arrival tangent to the arrival border.
    TangentArrival(TurnSense),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Corner {
    BottomLeft,
    BottomRight,
    TopRight,
    TopLeft,
}

impl Corner {
    pub const ALL: [Corner; 4] =
        [Corner::BottomLeft, Corner::BottomRight, Corner::TopRight, Corner::TopLeft];

    pub fn point(self, d: f64) -> Point2 {
        match self {
            Corner::BottomLeft => Point2::new(0.0, 0.0),
            Corner::BottomRight => Point2::new(d, 0.0),
            Corner::TopRight => Point2::new(d, d),
            Corner::TopLeft => Point2::new(0.0, d),
        }
    }

    fn from_point(p: Point2, d: f64) -> Corner {
        match (p.x > 0.5 * d, p.y > 0.5 * d) {
            (false, false) => Corner::BottomLeft,
            (true, false) => Corner::BottomRight,
            (true, true) => Corner::TopRight,
            (false, true) => Corner::TopLeft,
        }
    }

    fn rotated(self, k: u8, d: f64) -> Corner {
        let frame = CellFrame::new(d, k);
        Corner::from_point(frame.point_to_local(self.point(d)), d)
    }

    fn mirrored(self) -> Corner {
        match self {
            Corner::BottomLeft => Corner::BottomRight,
            Corner::BottomRight => Corner::BottomLeft,
            Corner::TopRight => Corner::TopLeft,
            Corner::TopLeft => Corner::TopRight,
        }
    }
}

impl EndpointKind {
    fn rotated(self, k: u8, d: f64) -> Self {
        match self {
            EndpointKind::Corner(s, c) => EndpointKind::Corner(s, c.rotated(k, d)),
            EndpointKind::Tangent(s, b) => EndpointKind::Tangent(s, b.rotated(k)),
            e => e,
        }
    }

    fn mirrored(self) -> Self {
        match self {
            EndpointKind::Corner(s, c) => EndpointKind::Corner(s.flipped(), c.mirrored()),
            EndpointKind::Tangent(s, b) => EndpointKind::Tangent(s.flipped(), b.mirrored()),
            EndpointKind::AntipodeStart(s) => EndpointKind::AntipodeStart(s.flipped()),
            EndpointKind::CommandStart(s) => EndpointKind::CommandStart(s.flipped()),
            EndpointKind::TangentArrival(s) => EndpointKind::TangentArrival(s.flipped()),
            EndpointKind::Command => EndpointKind::Command,
        }
    }
}

/// One Φ interval with the constructions behind its endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiInterval {
    pub interval: AngleInterval,
    pub lo_kind: EndpointKind,
    pub hi_kind: EndpointKind,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ForwardSet {
    pieces: Vec<PhiInterval>,
}

impl ForwardSet {
    pub fn pieces(&self) -> &[PhiInterval] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn is_singleton(&self) -> bool {
        self.pieces.len() == 1 && self.pieces[0].interval.width() == 0.0
    }

    pub fn as_interval_set(&self) -> AngleIntervalSet {
        AngleIntervalSet::from_intervals(self.pieces.iter().map(|p| p.interval))
    }

    pub fn contains_dilated(&self, theta: f64, tol: f64) -> bool {
        self.pieces.iter().any(|p| p.interval.contains_dilated(theta, tol))
    }

    /// All interval endpoints with their constructions.
    pub fn endpoints(&self) -> Vec<(f64, EndpointKind)> {
        self.pieces
            .iter()
            .flat_map(|p| [(p.interval.lo(), p.lo_kind), (p.interval.hi(), p.hi_kind)])
            .collect()
    }

    /// Smallest angular gap between distinct pieces.
    pub fn min_gap(&self) -> Option<f64> {
        if self.pieces.len() < 2 {
            return None;
        }
        let mut v: Vec<_> = self.pieces.iter().map(|p| p.interval).collect();
        v.sort_by(|a, b| a.lo().total_cmp(&b.lo()));
        let mut g = f64::INFINITY;
        for i in 0..v.len() {
            let a = v[i];
            let b = v[(i + 1) % v.len()];
            g = g.min(wrap_2pi(b.lo() - (a.lo() + a.width())));
        }
        Some(g)
    }

    fn map(&self, f: impl Fn(&PhiInterval) -> PhiInterval) -> ForwardSet {
        let mut pieces: Vec<_> = self.pieces.iter().map(f).collect();
        pieces.sort_by(|a, b| a.interval.lo().total_cmp(&b.interval.lo()));
        ForwardSet { pieces }
    }

    fn rotated(&self, by_quarters: u8, d: f64) -> ForwardSet {
        let by = by_quarters as f64 * FRAC_PI_2;
        self.map(|p| PhiInterval {
            interval: p.interval.rotated(by),
            lo_kind: p.lo_kind.rotated(by_quarters, d),
            hi_kind: p.hi_kind.rotated(by_quarters, d),
        })
    }

    fn mirrored(&self) -> ForwardSet {
        self.map(|p| PhiInterval {
            interval: p.interval.reflected(),
            lo_kind: p.hi_kind.mirrored(),
            hi_kind: p.lo_kind.mirrored(),
        })
    }

    /// Builds a normalized set, merging pieces that overlap or whose gap is
    /// at most [`crate::cellular_backward::MERGE_GAP`].
    fn from_pieces(mut v: Vec<PhiInterval>) -> ForwardSet {
        use crate::cellular_backward::MERGE_GAP;
        v.sort_by(|a, b| a.interval.lo().total_cmp(&b.interval.lo()));
        let mut out: Vec<PhiInterval> = Vec::new();
        for p in v {
            if let Some(last) = out.last_mut() {
                let end = last.interval.lo() + last.interval.width();
                if p.interval.lo() - end <= MERGE_GAP {
                    let new_end = end.max(p.interval.lo() + p.interval.width());
                    let hi_kind = if new_end > end { p.hi_kind } else { last.hi_kind };
                    last.interval = AngleInterval::new(last.interval.lo(), new_end - last.interval.lo());
                    last.hi_kind = hi_kind;
                    continue;
                }
            }
            out.push(p);
        }
        while out.len() > 1 {
            let last = *out.last().unwrap();
            let first = out[0];
            let end = last.interval.lo() + last.interval.width();
            if first.interval.lo() + TAU - end <= MERGE_GAP {
                let new_end = (first.interval.lo() + TAU + first.interval.width()).max(end);
                out.pop();
                out[0] = PhiInterval {
                    interval: AngleInterval::new(last.interval.lo(), new_end - last.interval.lo()),
                    lo_kind: last.lo_kind,
                    hi_kind: first.hi_kind,
                };
            } else {
                break;
            }
        }
        ForwardSet { pieces: out }
    }
}

const CHECK_TOL: f64 = 1e-7;

/// Start on `start` reached by tracing the arc of `circle` backward from
/// heading `phi`; returns `(start point, start heading)`.
fn trace_back(circle: &Circle, phi: f64, start: Border, d: f64) -> Option<(Point2, f64)> {
    let sgn = circle.sense.sign();
    let r = circle.radius;
    let c = circle.center;
    let roots = match start {
        Border::Left | Border::Right => {
            let x = if start == Border::Right { d } else { 0.0 };
            let k = (x - c.x) / (sgn * r);
            if k.abs() > 1.0 {
                return None;
            }
            let a = k.asin();
            [a, PI - a]
        }
        Border::Top | Border::Bottom => {
            let y = if start == Border::Top { d } else { 0.0 };
            let k = (c.y - y) / (sgn * r);
            if k.abs() > 1.0 {
                return None;
            }
            let a = k.acos();
            [a, -a]
        }
    };
    let mut best: Option<(f64, f64)> = None;
    for psi in roots {
        let arc = wrap_2pi(sgn * (phi - psi));
        if arc < 1e-12 {
            continue;
        }
        if best.is_none_or(|(b, _)| arc < b) {
            best = Some((arc, psi));
        }
    }
    let (arc, psi) = best?;
    let s = circle.point_after(phi, -arc);
    let along = start.coordinate_of(s);
    let tol = 1e-12 * d;
    if along < -tol || along > d + tol {
        return None;
    }
    Some((start.point_at(along.clamp(0.0, d), d), psi))
}

/// Whether the closed-loop trajectory from `s` with heading `psi` first
/// leaves the cell at `pstar` through `arrival` with heading `phi`.
fn lands_on(
    s: Point2,
    psi: f64,
    pstar: Point2,
    arrival: Border,
    phi: f64,
    tc: Angle,
    params: &VehicleParams,
    want_arc_only: bool,
) -> bool {
    let Ok(e) = cell_exit_map(Configuration::new(s.x, s.y, psi), tc, params) else {
        return false;
    };
    if e.exit_border != arrival {
        // a corner arrival may be reported on the neighbouring border
        let corner = Corner::ALL.iter().any(|c| c.point(params.d).dist(pstar) < CHECK_TOL * params.d);
        if !corner {
            return false;
        }
    }
    if e.exit_config.position().dist(pstar) > CHECK_TOL * params.d {
        return false;
    }
    if wrap_pi(e.exit_config.theta.value() - phi).abs() > CHECK_TOL {
        return false;
    }
    !want_arc_only || !matches!(e.path, PathType::LS | PathType::RS | PathType::S) || e.straight_len < 1e-9 * params.d
}

/// Whether an arc of `sense` arriving at `pstar` with heading `phi` is a
/// trajectory from `start`.
fn arc_member(
    pstar: Point2,
    phi: f64,
    sense: TurnSense,
    start: Border,
    arrival: Border,
    tc: Angle,
    params: &VehicleParams,
) -> bool {
    let circle = Circle::of_turn(pstar, phi, params.r, sense);
    let Some((s, psi)) = trace_back(&circle, phi, start, params.d) else {
        return false;
    };
    lands_on(s, psi, pstar, arrival, phi, tc, params, true)
}

/// Critical arrival headings for the arc family of `sense`.
fn arc_criticals(
    pstar: Point2,
    sense: TurnSense,
    arrival: Border,
    tc: f64,
    params: &VehicleParams,
) -> Vec<(f64, EndpointKind)> {
    let (d, r) = (params.d, params.r);
    let sg = sense.sign();
    let mut out = Vec::new();
    // center = p* + sg r (-sin φ, cos φ)
    let push_cos = |k: f64, kind: EndpointKind, out: &mut Vec<(f64, EndpointKind)>| {
        if k.abs() <= 1.0 {
            let a = k.acos();
            out.push((wrap_2pi(a), kind));
            out.push((wrap_2pi(-a), kind));
        }
    };
    // corners: |p* - e + sg r w(φ)| = r  ->  v·w = -|v|²/(2 sg r)
    for corner in Corner::ALL {
        let v = pstar - corner.point(d);
        let n = v.norm();
        if n < 1e-12 * d {
            continue;
        }
        // v·w = -v.x sin φ + v.y cos φ = n cos(φ - φ0)
        let phi0 = (-v.x).atan2(v.y);
        let k = -n / (2.0 * sg * r);
        if k.abs() <= 1.0 {
            let a = k.acos();
            out.push((wrap_2pi(phi0 + a), EndpointKind::Corner(sense, corner)));
            out.push((wrap_2pi(phi0 - a), EndpointKind::Corner(sense, corner)));
        }
    }
    // tangency with the four border lines from either side
    for (b, line, vertical) in [
        (Border::Left, 0.0, true),
        (Border::Right, d, true),
        (Border::Bottom, 0.0, false),
        (Border::Top, d, false),
    ] {
        for off in [r, -r] {
            let kind = EndpointKind::Tangent(sense, b);
            if vertical {
                // p*.x - sg r sin φ = line + off
                let k = (pstar.x - line - off) / (sg * r);
                if k.abs() <= 1.0 {
                    let a = k.asin();
                    out.push((wrap_2pi(a), kind));
                    out.push((wrap_2pi(PI - a), kind));
                }
            } else {
                // p*.y + sg r cos φ = line + off
                push_cos((line + off - pstar.y) / (sg * r), kind, &mut out);
            }
        }
    }
    // start heading equal to the antipode or to the command, start on the
    // bottom line: p*.y + sg r cos φ - sg r cos ψ0 = 0 (and the analogous
    // relation for every other border line, which the conjugated callers need)
    for (psi0, kind) in [(tc + PI, EndpointKind::AntipodeStart(sense)), (tc, EndpointKind::CommandStart(sense))] {
        for (line, vertical) in [(0.0, false), (d, false), (0.0, true), (d, true)] {
            if vertical {
                // p*.x - sg r sin φ + sg r sin ψ0 = line
                let k = (pstar.x + sg * r * psi0.sin() - line) / (sg * r);
                if k.abs() <= 1.0 {
                    let a = k.asin();
                    out.push((wrap_2pi(a), kind));
                    out.push((wrap_2pi(PI - a), kind));
                }
            } else {
                push_cos((line - pstar.y) / (sg * r) + psi0.cos(), kind, &mut out);
            }
        }
    }
    out.push((wrap_2pi(tc), EndpointKind::Command));
    out.push((wrap_2pi(tc + PI), EndpointKind::AntipodeStart(sense)));
    let tangent_arrival = (-arrival.normal()).angle();
    out.push((wrap_2pi(tangent_arrival + FRAC_PI_2), EndpointKind::TangentArrival(sense)));
    out.push((wrap_2pi(tangent_arrival - FRAC_PI_2), EndpointKind::TangentArrival(sense)));
    out
}

/// Arc family of `sense` as a list of closed pieces.
fn arc_family(
    pstar: Point2,
    sense: TurnSense,
    start: Border,
    arrival: Border,
    tc: f64,
    params: &VehicleParams,
) -> Vec<PhiInterval> {
    let tca = Angle::new(tc);
    let mut crit = arc_criticals(pstar, sense, arrival, tc, params);
    crit.sort_by(|a, b| a.0.total_cmp(&b.0));
    crit.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-13);
    let n = crit.len();
    let mut pieces = Vec::new();
    for i in 0..n {
        let (a, ka) = crit[i];
        let (b, kb) = if i + 1 < n { crit[i + 1] } else { (crit[0].0 + TAU, crit[0].1) };
        let w = b - a;
        if w < 1e-11 {
            continue;
        }
        if arc_member(pstar, a + 0.5 * w, sense, start, arrival, tca, params) {
            pieces.push(PhiInterval { interval: AngleInterval::new(a, w), lo_kind: ka, hi_kind: kb });
        }
    }
    pieces
}

/// Start of an S or CS path from `start` landing on `pstar` with heading `tc`.
fn command_arrival(
    pstar: Point2,
    start: Border,
    arrival: Border,
    tc: f64,
    params: &VehicleParams,
) -> Option<Configuration> {
    let (d, r) = (params.d, params.r);
    let tca = Angle::new(tc);
    let u = Point2::unit(tc);
    if u.dot(arrival.normal()) < -1e-12 {
        return None;
    }
    // backward ray length inside the cell
    let mut len = f64::INFINITY;
    for b in Border::ALL {
        let speed = -u.dot(b.normal());
        if speed > 1e-15 {
            let dist = (-b.outside_distance(pstar, d)).max(0.0);
            len = len.min(dist / speed);
        }
    }
    if !len.is_finite() {
        return None;
    }
    // S path
    let q_end = pstar - u * len;
    if start.outside_distance(q_end, d).abs() <= 1e-12 * d
        && lands_on(q_end, tc, pstar, arrival, tc, tca, params, false)
    {
        return Some(Configuration::new(q_end.x, q_end.y, tc));
    }
    for sense in [TurnSense::Left, TurnSense::Right] {
        let sg = sense.sign();
        let n = Point2::new(-u.y, u.x);
        // center(t) = p* - t u + sg r n
        let c0 = pstar + n * (sg * r);
        let mut ts = vec![0.0, len];
        for corner in Corner::ALL {
            // |c0 - t u - e| = r
            let w = c0 - corner.point(d);
            let b = w.dot(u);
            let disc = b * b - (w.dot(w) - r * r);
            if disc >= 0.0 {
                ts.push(b + disc.sqrt());
                ts.push(b - disc.sqrt());
            }
        }
        for (line, vertical) in [(0.0, true), (d, true), (0.0, false), (d, false)] {
            let (c, du) = if vertical { (c0.x, u.x) } else { (c0.y, u.y) };
            if du.abs() > 1e-15 {
                for off in [r, -r] {
                    ts.push((c - line - off) / du);
                }
                // start heading at the antipode lies on this line
                let psi0 = tc + PI;
                let pt = if vertical { sg * r * psi0.sin() } else { -sg * r * psi0.cos() };
                ts.push((c + pt - line) / du);
            }
        }
        ts.retain(|t| t.is_finite() && *t >= 0.0 && *t <= len);
        ts.sort_by(|a, b| a.total_cmp(b));
        let mut samples = ts.clone();
        for w in ts.windows(2) {
            if w[1] - w[0] > 1e-12 {
                samples.push(0.5 * (w[0] + w[1]));
            }
        }
        for t in samples {
            let q = pstar - u * t;
            let circle = Circle::of_turn(q, tc, r, sense);
            if let Some((s, psi)) = trace_back(&circle, tc, start, d) {
                if lands_on(s, psi, pstar, arrival, tc, tca, params, false) {
                    return Some(Configuration::new(s.x, s.y, psi));
                }
            }
        }
    }
    None
}

/// A start configuration on `start` whose trajectory lands on `pstar`
/// (border `arrival`) with heading `phi`, if the construction finds one:
/// a single arc of either sense, or an S / CS path when `phi` is the command.
pub fn witness_start(
    start: Border,
    arrival: Border,
    pstar: Point2,
    phi: f64,
    theta_c: Angle,
    params: &VehicleParams,
) -> Option<Configuration> {
    let tc = theta_c.value();
    for sense in [TurnSense::Left, TurnSense::Right] {
        let circle = Circle::of_turn(pstar, phi, params.r, sense);
        if let Some((s, psi)) = trace_back(&circle, phi, start, params.d) {
            if lands_on(s, psi, pstar, arrival, phi, theta_c, params, true) {
                return Some(Configuration::new(s.x, s.y, psi));
            }
        }
    }
    if wrap_pi(phi - tc).abs() <= 1e-9 {
        return command_arrival(pstar, start, arrival, tc, params);
    }
    None
}

/// Φ in cell coordinates for any pair of distinct borders. The base
/// operations and [`phi_general`] are thin wrappers around it.
pub fn phi_direct(
    start: Border,
    arrival: Border,
    pstar: Point2,
    theta_c: Angle,
    params: &VehicleParams,
) -> Result<ForwardSet, PhiError> {
    if start == arrival {
        return Err(PhiError::UnsupportedPair);
    }
    let d = params.d;
    if arrival.outside_distance(pstar, d).abs() > 1e-9 * d
        || Border::ALL.iter().any(|b| b.outside_distance(pstar, d) > 1e-9 * d)
    {
        return Err(PhiError::PointNotOnBorder { x: pstar.x, y: pstar.y, border: arrival, d });
    }
    let along = arrival.coordinate_of(pstar).clamp(0.0, d);
    let pstar = arrival.point_at(along, d);
    let tc = theta_c.value();
    let mut pieces = arc_family(pstar, TurnSense::Left, start, arrival, tc, params);
    pieces.extend(arc_family(pstar, TurnSense::Right, start, arrival, tc, params));
    let covered = pieces.iter().any(|p| p.interval.contains_dilated(tc, 1e-9));
    if !covered && command_arrival(pstar, start, arrival, tc, params).is_some() {
        pieces.push(PhiInterval {
            interval: AngleInterval::new(tc, 0.0),
            lo_kind: EndpointKind::Command,
            hi_kind: EndpointKind::Command,
        });
    }
    Ok(ForwardSet::from_pieces(pieces))
}

fn on_border(pstar: Point2, border: Border, d: f64) -> Result<(), PhiError> {
    let ok = border.outside_distance(pstar, d).abs() <= 1e-9 * d
        && (-1e-9 * d..=d * (1.0 + 1e-9)).contains(&border.coordinate_of(pstar));
    if ok {
        Ok(())
    } else {
        Err(PhiError::PointNotOnBorder { x: pstar.x, y: pstar.y, border, d })
    }
}

/// Bottom → top, forward command `θ_c ∈ [0, π]`.
pub fn phi_bottom_to_top_forward(pstar: Point2, theta_c: Angle, params: &VehicleParams) -> Result<ForwardSet, PhiError> {
    on_border(pstar, Border::Top, params.d)?;
    phi_direct(Border::Bottom, Border::Top, pstar, theta_c, params)
}

/// Bottom → top, backward command `θ_c ∈ (π, 2π)`.
pub fn phi_bottom_to_top_backward(pstar: Point2, theta_c: Angle, params: &VehicleParams) -> Result<ForwardSet, PhiError> {
    on_border(pstar, Border::Top, params.d)?;
    phi_direct(Border::Bottom, Border::Top, pstar, theta_c, params)
}

/// Bottom → right, right command `θ_c ∈ [-π/2, π/2]`.
pub fn phi_bottom_to_right_rightcmd(pstar: Point2, theta_c: Angle, params: &VehicleParams) -> Result<ForwardSet, PhiError> {
    on_border(pstar, Border::Right, params.d)?;
    phi_direct(Border::Bottom, Border::Right, pstar, theta_c, params)
}

/// Bottom → right, left command `θ_c ∈ (π/2, 3π/2)`.
pub fn phi_bottom_to_right_leftcmd(pstar: Point2, theta_c: Angle, params: &VehicleParams) -> Result<ForwardSet, PhiError> {
    on_border(pstar, Border::Right, params.d)?;
    phi_direct(Border::Bottom, Border::Right, pstar, theta_c, params)
}

fn base_op(arrival_local: Border, pstar: Point2, tc: Angle, params: &VehicleParams) -> Result<ForwardSet, PhiError> {
    let v = tc.value();
    match arrival_local {
        Border::Top if v <= PI => phi_bottom_to_top_forward(pstar, tc, params),
        Border::Top => phi_bottom_to_top_backward(pstar, tc, params),
        Border::Right if v <= FRAC_PI_2 || v >= 1.5 * PI => phi_bottom_to_right_rightcmd(pstar, tc, params),
        Border::Right => phi_bottom_to_right_leftcmd(pstar, tc, params),
        _ => Err(PhiError::UnsupportedPair),
    }
}

/// Φ for any ordered pair of distinct borders, obtained by rotating the cell
/// so the start border is the bottom one and, for a left arrival, mirroring
/// across the vertical midline.
pub fn phi_general(
    start: Border,
    arrival: Border,
    pstar: Point2,
    theta_c: Angle,
    params: &VehicleParams,
) -> Result<ForwardSet, PhiError> {
    if start == arrival {
        return Err(PhiError::UnsupportedPair);
    }
    let d = params.d;
    on_border(pstar, arrival, d)?;
    // rotation taking `start` to the bottom
    let k = (start.quarter_turns_to_top() + 2) % 4;
    let frame = CellFrame::new(d, k);
    let p = frame.point_to_local(pstar);
    let tc = frame.angle_to_local(theta_c.value());
    let arr = frame.border_to_local(arrival);
    let local = match arr {
        Border::Left => {
            let pm = Point2::new(d - p.x, p.y);
            base_op(Border::Right, pm, Angle::new(PI - tc), params)?.mirrored()
        }
        b => base_op(b, p, Angle::new(tc), params)?,
    };
    Ok(local.rotated((4 - k) % 4, d))
}

// ---------------------------------------------------------------------------
// Case tables

/// Which base operation a case belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BaseOp {
    TopForward,
    TopBackward,
    RightRightCmd,
    RightLeftCmd,
}

/// Case label of the piecewise tables. `Sn` is the scenario (1 or 2, as
/// ordered in each table), `Cn` the command interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PhiCase {
    // bottom -> top, forward command; scenario 1: θ_rR_out < θ_lL_out
    TopFwdC1,
    TopFwdC2,
    TopFwdS1C3Singleton,
    TopFwdS2C3,
    TopFwdC4,
    TopFwdC5,
    // bottom -> top, backward command; scenario 1: θ_lR ≤ θ_rL
    TopBwdC1,
    TopBwdC2,
    TopBwdS1C3Empty,
    TopBwdS2C3TwoSets,
    TopBwdC4,
    TopBwdC5,
    // bottom -> right, right command; scenario 1: θ_rR_out < θ_lL_out
    RightRcmdC1Antipode,
    RightRcmdC1Limited,
    RightRcmdC2,
    RightRcmdC3,
    RightRcmdS1C4Singleton,
    RightRcmdS2C4,
    RightRcmdC5,
    // bottom -> right, left command; scenario 1: θ_lR ≤ θ_rL
    RightLcmdC1,
    RightLcmdS1C2,
    RightLcmdS1C3Empty,
    RightLcmdC4,
    RightLcmdS2C2TwoSets,
    RightLcmdS2C2OneSet,
    RightLcmdS2C3,
}

impl PhiCase {
    pub const ALL: [PhiCase; 26] = [
        PhiCase::TopFwdC1,
        PhiCase::TopFwdC2,
        PhiCase::TopFwdS1C3Singleton,
        PhiCase::TopFwdS2C3,
        PhiCase::TopFwdC4,
        PhiCase::TopFwdC5,
        PhiCase::TopBwdC1,
        PhiCase::TopBwdC2,
        PhiCase::TopBwdS1C3Empty,
        PhiCase::TopBwdS2C3TwoSets,
        PhiCase::TopBwdC4,
        PhiCase::TopBwdC5,
        PhiCase::RightRcmdC1Antipode,
        PhiCase::RightRcmdC1Limited,
        PhiCase::RightRcmdC2,
        PhiCase::RightRcmdC3,
        PhiCase::RightRcmdS1C4Singleton,
        PhiCase::RightRcmdS2C4,
        PhiCase::RightRcmdC5,
        PhiCase::RightLcmdC1,
        PhiCase::RightLcmdS1C2,
        PhiCase::RightLcmdS1C3Empty,
        PhiCase::RightLcmdC4,
        PhiCase::RightLcmdS2C2TwoSets,
        PhiCase::RightLcmdS2C2OneSet,
        PhiCase::RightLcmdS2C3,
    ];

    pub fn op(self) -> BaseOp {
        use PhiCase::*;
        match self {
            TopFwdC1 | TopFwdC2 | TopFwdS1C3Singleton | TopFwdS2C3 | TopFwdC4 | TopFwdC5 => BaseOp::TopForward,
            TopBwdC1 | TopBwdC2 | TopBwdS1C3Empty | TopBwdS2C3TwoSets | TopBwdC4 | TopBwdC5 => BaseOp::TopBackward,
            RightRcmdC1Antipode | RightRcmdC1Limited | RightRcmdC2 | RightRcmdC3 | RightRcmdS1C4Singleton
            | RightRcmdS2C4 | RightRcmdC5 => BaseOp::RightRightCmd,
            _ => BaseOp::RightLeftCmd,
        }
    }
}

/// Start and arrival headings of the edge turns that delimit the tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeAngles {
    pub l_l: f64,
    pub l_l_out: f64,
    pub l_r: f64,
    pub l_r_out: f64,
    pub r_l: f64,
    pub r_l_out: f64,
    pub r_r: f64,
    pub r_r_out: f64,
}

/// Turn from a bottom corner to `pstar`, returned as (start, out) headings.
fn corner_turn(e: Point2, pstar: Point2, sense: TurnSense, r: f64) -> Result<(f64, f64), GeometryError> {
    let (l, rt) = circles_through_two_points(e, pstar, r)?;
    let c = if sense == TurnSense::Left { l } else { rt };
    let start = c.heading_at(e);
    let out = start + sense.sign() * turn_amount(sense, start, c.heading_at(pstar));
    Ok((start, out))
}

/// Heading at which the tangent circle through `pstar` meets its tangency.
fn tangent_out(pstar: Point2, border: Border, sense: TurnSense, d: f64, r: f64) -> Result<f64, GeometryError> {
    let c = circle_tangent_to_cell_border(pstar, border, sense, d, r)?;
    Ok(c.heading_at(pstar))
}

/// Arc from the bottom border that touches a side border (center abscissa
/// `cx`) and then reaches `pstar` on the top border; (start, out) headings.
fn side_tangent_turn(pstar: Point2, cx: f64, sense: TurnSense, d: f64, r: f64) -> Result<(f64, f64), GeometryError> {
    let h2 = r * r - (pstar.x - cx).powi(2);
    if h2 < 0.0 {
        return Err(GeometryError::NoTangentCircle);
    }
    // tangency lies below the arrival point
    let c = Circle { center: Point2::new(cx, pstar.y - h2.sqrt()), radius: r, sense };
    let out = c.heading_at(pstar);
    let (_, start) = trace_back(&c, out, Border::Bottom, d).ok_or(GeometryError::NoTangentCircle)?;
    Ok((start, out))
}

/// Edge-turn angles for an arrival at the top border, with the tangent
/// corrections for turns that would cross a side border.
pub fn top_edge_angles(pstar: Point2, params: &VehicleParams) -> Result<EdgeAngles, GeometryError> {
    let (d, r) = (params.d, params.r);
    let el = Point2::new(0.0, 0.0);
    let er = Point2::new(d, 0.0);
    let (l_l, l_l_out) = corner_turn(el, pstar, TurnSense::Left, r)?;
    let (mut l_r, mut l_r_out) = corner_turn(er, pstar, TurnSense::Left, r)?;
    let (mut r_l, mut r_l_out) = corner_turn(el, pstar, TurnSense::Right, r)?;
    let (r_r, r_r_out) = corner_turn(er, pstar, TurnSense::Right, r)?;
    let (l_l, l_l_out, r_r, r_r_out) = (up_wrap(l_l), up_wrap(l_l_out), up_wrap(r_r), up_wrap(r_r_out));
    if up_wrap(r_l) > FRAC_PI_2 {
        (r_l, r_l_out) = side_tangent_turn(pstar, r, TurnSense::Right, d, r)?;
    }
    if up_wrap(l_r) < FRAC_PI_2 {
        (l_r, l_r_out) = side_tangent_turn(pstar, d - r, TurnSense::Left, d, r)?;
    }
    Ok(EdgeAngles {
        l_l,
        l_l_out,
        l_r: up_wrap(l_r),
        l_r_out: up_wrap(l_r_out),
        r_l: up_wrap(r_l),
        r_l_out: up_wrap(r_l_out),
        r_r,
        r_r_out,
    })
}

/// Edge-turn angles for an arrival at the right border. The left turn from
/// the bottom-right corner is replaced by the circle tangent to the right
/// border at the point itself (arrival heading π/2); a left turn from the
/// bottom-left corner starting at or below 0 is replaced by the circle
/// tangent to the bottom border.
pub fn right_edge_angles(pstar: Point2, params: &VehicleParams) -> Result<EdgeAngles, GeometryError> {
    let (d, r) = (params.d, params.r);
    let el = Point2::new(0.0, 0.0);
    let er = Point2::new(d, 0.0);
    let (mut l_l, mut l_l_out) = corner_turn(el, pstar, TurnSense::Left, r)?;
    let (r_l, r_l_out) = corner_turn(el, pstar, TurnSense::Right, r)?;
    let (r_r, r_r_out) = match corner_turn(er, pstar, TurnSense::Right, r) {
        Ok(v) => v,
        // the point is the corner itself
        Err(GeometryError::DegenerateChord) => (PI, PI),
        Err(e) => return Err(e),
    };
    if wrap_pi(l_l) <= 0.0 {
        l_l = 0.0;
        l_l_out = tangent_out(pstar, Border::Bottom, TurnSense::Left, d, r)?;
    }
    // circle centered (d - r, y*): its bottom crossing gives the start heading
    let c = Circle { center: Point2::new(d - r, pstar.y), radius: r, sense: TurnSense::Left };
    let l_r = trace_back(&c, FRAC_PI_2, Border::Bottom, d).map(|(_, psi)| psi).unwrap_or(0.0);
    Ok(EdgeAngles {
        l_l: wrap_pi(l_l),
        l_l_out: wrap_pi(l_l_out),
        l_r: wrap_pi(l_r),
        l_r_out: FRAC_PI_2,
        r_l: wrap_pi(r_l),
        r_l_out: wrap_pi(r_l_out),
        r_r: wrap_pi(r_r),
        r_r_out: wrap_pi(r_r_out),
    })
}

/// Minimum arrival heading limited by the antipode start, top border.
pub fn eq_top_limited_min(theta_cp: f64, params: &VehicleParams) -> f64 {
    let (d, r) = (params.d, params.r);
    -((r * (theta_cp + FRAC_PI_2).sin() - d) / r).asin() + FRAC_PI_2
}

/// Maximum arrival heading limited by the antipode start, top border.
pub fn eq_top_limited_max(theta_cp: f64, params: &VehicleParams) -> f64 {
    let (d, r) = (params.d, params.r);
    ((r * (theta_cp - FRAC_PI_2).sin() - d) / r).asin() + FRAC_PI_2
}

/// Maximum arrival heading limited by the antipode start, right border at height `y`.
pub fn eq_right_limited_max(theta_cp: f64, y: f64, params: &VehicleParams) -> f64 {
    let r = params.r;
    ((r * (theta_cp - FRAC_PI_2).sin() - y) / r).asin() + FRAC_PI_2
}

/// Minimum arrival heading limited by the antipode start, right border at height `y`.
pub fn eq_right_limited_min(theta_cp: f64, y: f64, params: &VehicleParams) -> f64 {
    let r = params.r;
    -((r * (theta_cp + FRAC_PI_2).sin() - y) / r).asin() + FRAC_PI_2
}

/// Highest arrival point on the right border for which the second
/// (right-turn) set exists.
pub fn eq_y_max(theta_cp: f64, params: &VehicleParams) -> f64 {
    params.r * (1.0 + (theta_cp - FRAC_PI_2).sin())
}

/// Case label of the table for `op` at arrival point `pstar` (local frame of
/// the base operation) and command `theta_c`.
pub fn classify_case(op: BaseOp, pstar: Point2, theta_c: Angle, params: &VehicleParams) -> Result<PhiCase, GeometryError> {
    use PhiCase::*;
    let tc = theta_c.value();
    Ok(match op {
        BaseOp::TopForward => {
            let a = top_edge_angles(pstar, params)?;
            let tc = up_wrap(tc);
            let s1 = a.r_r_out < a.l_l_out;
            if tc <= a.r_l_out {
                TopFwdC1
            } else if tc >= a.l_r_out {
                TopFwdC5
            } else if s1 {
                if tc <= a.r_r_out {
                    TopFwdC2
                } else if tc < a.l_l_out {
                    TopFwdS1C3Singleton
                } else {
                    TopFwdC4
                }
            } else if tc < a.l_l_out {
                TopFwdC2
            } else if tc <= a.r_r_out {
                TopFwdS2C3
            } else {
                TopFwdC4
            }
        }
        BaseOp::TopBackward => {
            let a = top_edge_angles(pstar, params)?;
            let cp = up_wrap(tc - PI);
            let s1 = a.l_r <= a.r_l;
            if cp <= a.l_l {
                TopBwdC1
            } else if cp >= a.r_r {
                TopBwdC5
            } else if s1 {
                if cp <= a.l_r {
                    TopBwdC2
                } else if cp < a.r_l {
                    TopBwdS1C3Empty
                } else {
                    TopBwdC4
                }
            } else if cp <= a.r_l {
                TopBwdC2
            } else if cp < a.l_r {
                TopBwdS2C3TwoSets
            } else {
                TopBwdC4
            }
        }
        BaseOp::RightRightCmd => {
            let a = right_edge_angles(pstar, params)?;
            let tc = wrap_pi(tc);
            let s1 = a.r_r_out < a.l_l_out;
            if tc <= 0.0 {
                if wrap_pi(tc + PI) >= a.r_r {
                    RightRcmdC1Antipode
                } else {
                    RightRcmdC1Limited
                }
            } else if tc <= a.r_l_out {
                RightRcmdC2
            } else if tc <= a.r_r_out && (s1 || tc <= a.l_l_out) {
                RightRcmdC3
            } else if tc >= a.l_l_out && (s1 || tc >= a.r_r_out) {
                RightRcmdC5
            } else if s1 {
                RightRcmdS1C4Singleton
            } else {
                RightRcmdS2C4
            }
        }
        BaseOp::RightLeftCmd => {
            let a = right_edge_angles(pstar, params)?;
            let cp = wrap_pi(tc + PI);
            let s1 = a.l_r <= a.r_l;
            if cp < a.l_l {
                RightLcmdC1
            } else if s1 {
                if cp <= a.l_r {
                    RightLcmdS1C2
                } else if cp < a.r_l {
                    RightLcmdS1C3Empty
                } else {
                    RightLcmdC4
                }
            } else if cp < a.r_l {
                if pstar.y <= eq_y_max(cp, params) {
                    RightLcmdS2C2TwoSets
                } else {
                    RightLcmdS2C2OneSet
                }
            } else if cp < a.l_r {
                RightLcmdS2C3
            } else {
                RightLcmdC4
            }
        }
    })
}
