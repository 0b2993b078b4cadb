//! Bang-bang heading control and the exact single-cell exit map.
//!
//! Inside a cell with size `d < r` the closed-loop vehicle follows at most one
//! arc of radius `r` followed by at most one straight segment, so the first
//! border crossing can be computed in closed form. [`simulate_plan`] chains
//! the exit map across cells of a [`GridPlan`].

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{signed_diff, wrap_2pi, Angle, Border, Circle, Point2, TurnSense};
use crate::plan::{CellIndex, GridPlan};

/// Headings closer than this to the command count as aligned.
pub const HEADING_TOL: f64 = 1e-12;
/// Relative tolerance (w.r.t. `d`) for "on the border".
pub const BORDER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("invalid vehicle parameters: {0}")]
    InvalidParams(String),
    #[error("start configuration ({x}, {y}) lies outside the cell [0, {d}]^2")]
    StartOutsideCell { x: f64, y: f64, d: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    /// Minimum turning radius.
    pub r: f64,
    /// Forward speed.
    pub v: f64,
    /// Angular speed, `v / r`.
    pub omega: f64,
    /// Cell size.
    pub d: f64,
}

impl VehicleParams {
    /// Builds parameters from cell size, turning radius and speed; `ω = v/r`.
    pub fn new(d: f64, r: f64, v: f64) -> Result<Self, KinematicsError> {
        if !(v.is_finite() && v > 0.0) {
            return Err(KinematicsError::InvalidParams(format!("speed must be positive, got {v}")));
        }
        Self::from_parts(r, v, v / r, d)
    }

    pub fn from_parts(r: f64, v: f64, omega: f64, d: f64) -> Result<Self, KinematicsError> {
        let finite = [r, v, omega, d].iter().all(|x| x.is_finite());
        if !finite || r <= 0.0 || v <= 0.0 || omega <= 0.0 || d <= 0.0 {
            return Err(KinematicsError::InvalidParams(
                "r, v, omega and d must be finite and positive".into(),
            ));
        }
        if ((v / omega) - r).abs() > 1e-12 * r {
            return Err(KinematicsError::InvalidParams(format!(
                "turning radius r = {r} must equal v/omega = {}",
                v / omega
            )));
        }
        if d >= r {
            return Err(KinematicsError::InvalidParams(format!(
                "cell size d = {d} must be smaller than the minimum turning radius r = {r}"
            )));
        }
        Ok(VehicleParams { r, v, omega, d })
    }

    /// Same vehicle, unit speed; convenient in tests.
    pub fn unit_speed(d: f64, r: f64) -> Result<Self, KinematicsError> {
        Self::new(d, r, 1.0)
    }
}

/// Planar configuration `(x, y, θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub x: f64,
    pub y: f64,
    pub theta: Angle,
}

impl Configuration {
    pub fn new(x: f64, y: f64, theta: impl Into<Angle>) -> Self {
        Configuration { x, y, theta: theta.into() }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PathType {
    S,
    L,
    R,
    LS,
    RS,
}

impl PathType {
    pub fn is_turn_only(self) -> bool {
        matches!(self, PathType::L | PathType::R)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitResult {
    pub exit_border: Border,
    pub exit_config: Configuration,
    pub path: PathType,
    pub arc_angle: f64,
    pub straight_len: f64,
}

/// Output of the bang-bang law: `+ω`, `0` or `-ω`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControlOutput {
    TurnLeft,
    Straight,
    TurnRight,
}

impl ControlOutput {
    pub fn rate(self, omega: f64) -> f64 {
        match self {
            ControlOutput::TurnLeft => omega,
            ControlOutput::Straight => 0.0,
            ControlOutput::TurnRight => -omega,
        }
    }

    pub fn sense(self) -> Option<TurnSense> {
        match self {
            ControlOutput::TurnLeft => Some(TurnSense::Left),
            ControlOutput::Straight => None,
            ControlOutput::TurnRight => Some(TurnSense::Right),
        }
    }
}

/// Turns toward the command along the shorter rotation. The antipode
/// `θ = θ_c + π` resolves to a left turn.
pub fn control_law(theta: Angle, theta_c: Angle) -> ControlOutput {
    let delta = signed_diff(theta_c.value(), theta.value());
    if delta.abs() <= HEADING_TOL {
        ControlOutput::Straight
    } else if delta > 0.0 {
        ControlOutput::TurnLeft
    } else {
        ControlOutput::TurnRight
    }
}

/// Heading change still needed to align with the command (`≥ 0`).
fn turn_needed(theta: f64, theta_c: f64, sense: TurnSense) -> f64 {
    let a = wrap_2pi(sense.sign() * (theta_c - theta));
    if a > TAU - HEADING_TOL {
        0.0
    } else {
        a
    }
}

/// Whether a configuration lying on `border` leaves the cell immediately:
/// outward velocity, or tangent velocity with outward (or no) curvature.
fn leaves_through(border: Border, theta: f64, control: ControlOutput) -> Option<f64> {
    let n = border.normal();
    let u = Point2::unit(theta);
    let out = u.dot(n);
    if out > HEADING_TOL {
        return Some(out);
    }
    if out < -HEADING_TOL {
        return None;
    }
    match control.sense() {
        None => Some(0.0),
        Some(sense) => {
            let accel = Point2::new(-theta.sin(), theta.cos()) * sense.sign();
            (accel.dot(n) > 0.0).then_some(0.0)
        }
    }
}

/// Whether a configuration on `border` of a cell (with the cell's command
/// applied) moves into the cell. Tangent headings are decided by the first
/// infinitesimal motion; straight motion along the border counts as leaving.
pub fn enters_cell(border: Border, theta: Angle, theta_c: Angle) -> bool {
    leaves_through(border, theta.value(), control_law(theta, theta_c)).is_none()
}

fn snap_to_border(p: Point2, border: Border, d: f64) -> Point2 {
    let s = border.coordinate_of(p).clamp(0.0, d);
    border.point_at(s, d)
}

/// Arc angle (in `(0, 2π)`) at which the turning circle crosses `border`
/// outward, if it does. Tangential contact is not a crossing.
fn arc_crossing(circle: &Circle, theta0: f64, border: Border, d: f64) -> Option<f64> {
    let sgn = circle.sense.sign();
    let r = circle.radius;
    let c = circle.center;
    // heading φ on the circle satisfies x = cx + sgn r sin φ, y = cy - sgn r cos φ
    let phi = match border {
        Border::Right | Border::Left => {
            let line = if border == Border::Right { d } else { 0.0 };
            let k = (line - c.x) / (sgn * r);
            if !(k.abs() < 1.0) {
                return None;
            }
            // dx/ds = r cos φ
            if border == Border::Right {
                k.asin()
            } else {
                PI - k.asin()
            }
        }
        Border::Top | Border::Bottom => {
            let line = if border == Border::Top { d } else { 0.0 };
            let k = (c.y - line) / (sgn * r);
            if !(k.abs() < 1.0) {
                return None;
            }
            // dy/ds = r sin φ
            if border == Border::Top {
                k.acos()
            } else {
                -k.acos()
            }
        }
    };
    Some(wrap_2pi(sgn * (phi - theta0)))
}

/// Exact first border crossing of the closed-loop trajectory started at
/// `start` (cell-local coordinates, cell `[0, d]^2`) under command `theta_c`.
pub fn cell_exit_map(
    start: Configuration,
    theta_c: Angle,
    params: &VehicleParams,
) -> Result<ExitResult, KinematicsError> {
    let d = params.d;
    let tol = BORDER_TOL * d;
    let inside = |v: f64| v >= -tol && v <= d + tol;
    if !(start.x.is_finite() && start.y.is_finite() && inside(start.x) && inside(start.y)) {
        return Err(KinematicsError::StartOutsideCell { x: start.x, y: start.y, d });
    }
    let p = Point2::new(start.x.clamp(0.0, d), start.y.clamp(0.0, d));
    let theta = start.theta.value();
    let control = control_law(start.theta, theta_c);
    let on_border = |b: Border| b.outside_distance(p, d).abs() <= tol;

    let turn_tag = match control {
        ControlOutput::Straight => PathType::S,
        ControlOutput::TurnLeft => PathType::L,
        ControlOutput::TurnRight => PathType::R,
    };

    // immediate exit from a border start
    let mut immediate: Option<(Border, f64)> = None;
    for b in Border::ALL {
        if on_border(b) {
            if let Some(out) = leaves_through(b, theta, control) {
                if immediate.is_none_or(|(_, o)| out > o) {
                    immediate = Some((b, out));
                }
            }
        }
    }
    if let Some((b, _)) = immediate {
        let q = snap_to_border(p, b, d);
        return Ok(ExitResult {
            exit_border: b,
            exit_config: Configuration { x: q.x, y: q.y, theta: start.theta },
            path: turn_tag,
            arc_angle: 0.0,
            straight_len: 0.0,
        });
    }

    let (line_start, arc_angle) = match control.sense() {
        None => (p, 0.0),
        Some(sense) => {
            let circle = Circle::of_turn(p, theta, params.r, sense);
            let needed = turn_needed(theta, theta_c.value(), sense);
            let mut first: Option<(Border, f64)> = None;
            for b in Border::ALL {
                if let Some(mut s) = arc_crossing(&circle, theta, b, d) {
                    if on_border(b) && !(1e-9..=TAU - 1e-9).contains(&s) {
                        continue;
                    }
                    if s > TAU - 1e-12 {
                        s = 0.0;
                    }
                    if first.is_none_or(|(_, fs)| s < fs) {
                        first = Some((b, s));
                    }
                }
            }
            match first {
                Some((b, s)) if s <= needed => {
                    let q = snap_to_border(circle.point_after(theta, s), b, d);
                    let heading = Angle::new(theta + sense.sign() * s);
                    return Ok(ExitResult {
                        exit_border: b,
                        exit_config: Configuration { x: q.x, y: q.y, theta: heading },
                        path: turn_tag,
                        arc_angle: s,
                        straight_len: 0.0,
                    });
                }
                _ => (circle.point_after(theta, needed), needed),
            }
        }
    };

    // straight segment along the command
    let tc = theta_c.value();
    let u = Point2::unit(tc);
    let mut best: Option<(Border, f64)> = None;
    for b in Border::ALL {
        let n = b.normal();
        let speed_out = u.dot(n);
        if speed_out <= 1e-15 {
            continue;
        }
        let dist = (-b.outside_distance(line_start, d)).max(0.0);
        let t = dist / speed_out;
        if best.is_none_or(|(_, bt)| t < bt) {
            best = Some((b, t));
        }
    }
    let (b, t) = best.expect("a ray leaves the square through some border");
    let q = snap_to_border(line_start + u * t, b, d);
    let path = match control {
        ControlOutput::Straight => PathType::S,
        ControlOutput::TurnLeft => PathType::LS,
        ControlOutput::TurnRight => PathType::RS,
    };
    Ok(ExitResult {
        exit_border: b,
        exit_config: Configuration { x: q.x, y: q.y, theta: theta_c },
        path,
        arc_angle,
        straight_len: t,
    })
}

/// Terminal state of a multi-cell simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanOutcome {
    ReachedTarget,
    LeftMap,
    EnteredExcluded,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub cell: CellIndex,
    pub exit: ExitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub outcome: PlanOutcome,
    pub trace: Vec<TraceStep>,
}

/// Follows the plan from a world configuration, chaining [`cell_exit_map`]
/// across cells until a region-of-interest cell is entered, the map or an
/// excluded cell is entered, or `max_cells` crossings were made.
pub fn simulate_plan(
    start: Configuration,
    plan: &GridPlan,
    max_cells: usize,
) -> Result<Simulation, KinematicsError> {
    let params = plan.params();
    let d = params.d;
    let Some(mut cell) = plan.cell_containing(start.position()) else {
        return Err(KinematicsError::StartOutsideCell { x: start.x, y: start.y, d });
    };
    let mut trace = Vec::new();
    if plan.is_excluded(cell) {
        return Ok(Simulation { outcome: PlanOutcome::EnteredExcluded, trace });
    }
    let mut local = plan.to_cell_local(cell, start);
    loop {
        if plan.is_target(cell) {
            return Ok(Simulation { outcome: PlanOutcome::ReachedTarget, trace });
        }
        if trace.len() >= max_cells {
            return Ok(Simulation { outcome: PlanOutcome::BudgetExhausted, trace });
        }
        let exit = cell_exit_map(local, plan.command(cell), params)?;
        trace.push(TraceStep { cell, exit });
        let Some(next) = plan.neighbor(cell, exit.exit_border) else {
            return Ok(Simulation { outcome: PlanOutcome::LeftMap, trace });
        };
        if plan.is_target(next) {
            return Ok(Simulation { outcome: PlanOutcome::ReachedTarget, trace });
        }
        if plan.is_excluded(next) {
            return Ok(Simulation { outcome: PlanOutcome::EnteredExcluded, trace });
        }
        // same point, expressed in the neighbor's local frame
        let q = exit.exit_config;
        let (nx, ny) = match exit.exit_border {
            Border::Right => (0.0, q.y),
            Border::Left => (d, q.y),
            Border::Top => (q.x, 0.0),
            Border::Bottom => (q.x, d),
        };
        local = Configuration { x: nx, y: ny, theta: q.theta };
        cell = next;
    }
}

pub mod oracle {
    //! Fixed-step numerical integrator of `ẋ = v cos θ, ẏ = v sin θ,
    //! θ̇ = u(θ, θ_c)`, used to validate the closed-form exit map.

    use super::*;

    fn rk4_position(p: Point2, theta0: f64, rate: f64, v: f64, h: f64) -> Point2 {
        let f = |t: f64| Point2::unit(theta0 + rate * t) * v;
        let k1 = f(0.0);
        let k2 = f(0.5 * h);
        let k3 = k2;
        let k4 = f(h);
        p + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
    }

    fn outside(p: Point2, d: f64) -> Option<(Border, f64)> {
        Border::ALL
            .iter()
            .map(|&b| (b, b.outside_distance(p, d)))
            .filter(|&(_, o)| o > 0.0)
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Integrates with step `step` (time units) until the vehicle leaves the
    /// cell; the crossing inside the last step is located by bisection.
    pub fn oracle_integrate(
        start: Configuration,
        theta_c: Angle,
        params: &VehicleParams,
        step: f64,
    ) -> ExitResult {
        let d = params.d;
        let v = params.v;
        let tc = theta_c.value();
        let mut p = start.position();
        let mut theta = start.theta.value();
        let mut arc = 0.0;
        let mut straight = 0.0;
        let mut turned = false;
        let mut aligned = control_law(start.theta, theta_c) == ControlOutput::Straight;
        let first_sense = control_law(start.theta, theta_c).sense();

        // a start on the boundary heading outward leaves at once
        for b in Border::ALL {
            if b.outside_distance(p, d).abs() <= BORDER_TOL * d
                && super::leaves_through(b, theta, control_law(start.theta, theta_c)).is_some()
            {
                return ExitResult {
                    exit_border: b,
                    exit_config: start,
                    path: tag(first_sense, false, true),
                    arc_angle: 0.0,
                    straight_len: 0.0,
                };
            }
        }

        let max_steps = (100.0 * (d + TAU * params.r) / (v * step)) as usize + 10;
        for _ in 0..max_steps {
            let (rate, h_turn) = if aligned {
                (0.0, step)
            } else {
                let ctl = control_law(Angle::new(theta), theta_c);
                let rate = ctl.rate(params.omega);
                let remaining = signed_diff(tc, theta).abs();
                // stop the turn exactly at alignment inside the step
                let h = (remaining / params.omega).min(step);
                (rate, h)
            };
            let h = if aligned { step } else { h_turn };
            let next = rk4_position(p, theta, rate, v, h);
            if outside(next, d).is_some() {
                // bisection on the sub-step
                let (mut lo, mut hi) = (0.0, h);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let q = rk4_position(p, theta, rate, v, mid);
                    if outside(q, d).is_some() {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let q = rk4_position(p, theta, rate, v, hi);
                let (border, _) = outside(q, d).expect("outside at hi");
                let heading = theta + rate * hi;
                if rate != 0.0 {
                    arc += (rate * hi).abs();
                } else {
                    straight += v * hi;
                }
                let q = super::snap_to_border(q, border, d);
                return ExitResult {
                    exit_border: border,
                    exit_config: Configuration { x: q.x, y: q.y, theta: Angle::new(heading) },
                    path: tag(first_sense, turned || rate != 0.0, aligned || rate == 0.0),
                    arc_angle: arc,
                    straight_len: straight,
                };
            }
            p = next;
            if rate != 0.0 {
                theta += rate * h;
                arc += (rate * h).abs();
                turned = true;
                if h < step {
                    theta = tc;
                    aligned = true;
                    // spend the rest of the step going straight
                    let rest = step - h;
                    let q = rk4_position(p, theta, 0.0, v, rest);
                    if outside(q, d).is_none() {
                        p = q;
                        straight += v * rest;
                    }
                }
            } else {
                straight += v * h;
            }
        }
        panic!("oracle integration did not leave the cell");
    }

    fn tag(first: Option<TurnSense>, turned: bool, straight: bool) -> PathType {
        match (first, turned, straight) {
            (None, _, _) => PathType::S,
            (Some(TurnSense::Left), _, true) => PathType::LS,
            (Some(TurnSense::Right), _, true) => PathType::RS,
            (Some(TurnSense::Left), _, false) => PathType::L,
            (Some(TurnSense::Right), _, false) => PathType::R,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::oracle::oracle_integrate;
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn params(d: f64, r: f64) -> VehicleParams {
        VehicleParams::unit_speed(d, r).unwrap()
    }

    #[test]
    fn control_law_examples() {
        assert_eq!(control_law(Angle::new(1.0), Angle::new(1.0)), ControlOutput::Straight);
        assert_eq!(control_law(Angle::new(0.0), Angle::new(FRAC_PI_2)), ControlOutput::TurnLeft);
        assert_eq!(control_law(Angle::new(PI), Angle::new(1.5 * PI)), ControlOutput::TurnLeft);
        assert_eq!(control_law(Angle::new(1.0), Angle::new(0.5)), ControlOutput::TurnRight);
        // antipode tie-break
        assert_eq!(control_law(Angle::new(0.5 + PI), Angle::new(0.5)), ControlOutput::TurnLeft);
    }

    #[test]
    fn params_reject_d_ge_r() {
        assert!(VehicleParams::unit_speed(1.0, 1.0).is_err());
        assert!(VehicleParams::unit_speed(2.0, 1.0).is_err());
        assert!(VehicleParams::from_parts(2.0, 1.0, 1.0, 1.0).is_err());
        assert!(VehicleParams::from_parts(2.0, 1.0, 0.5, 1.0).is_ok());
    }

    #[test]
    fn straight_command_exits_top() {
        let p = params(1.0, 2.0);
        let e = cell_exit_map(Configuration::new(0.5, 0.0, FRAC_PI_2), Angle::new(FRAC_PI_2), &p)
            .unwrap();
        assert_eq!(e.exit_border, Border::Top);
        assert_eq!(e.path, PathType::S);
        assert!((e.exit_config.x - 0.5).abs() < 1e-12);
        assert!((e.straight_len - 1.0).abs() < 1e-12);
    }

    #[test]
    fn right_turn_exit_through_top() {
        // circle centered (2.5, 0) radius 2 meets y = 1 at x = 2.5 - sqrt(3)
        let p = params(1.0, 2.0);
        let e = cell_exit_map(Configuration::new(0.5, 0.0, FRAC_PI_2), Angle::new(0.0), &p).unwrap();
        assert_eq!(e.exit_border, Border::Top);
        assert_eq!(e.path, PathType::R);
        assert!((e.exit_config.x - (2.5 - 3f64.sqrt())).abs() < 1e-12);
        assert!((e.exit_config.theta.value() - PI / 3.0).abs() < 1e-12);
        let o = oracle_integrate(
            Configuration::new(0.5, 0.0, FRAC_PI_2),
            Angle::new(0.0),
            &p,
            1e-5,
        );
        assert!((o.exit_config.x - e.exit_config.x).abs() < 1e-4);
    }

    #[test]
    fn backward_command_gives_single_turn() {
        let p = params(1.0, 2.0);
        let e = cell_exit_map(
            Configuration::new(0.5, 0.0, FRAC_PI_2),
            Angle::new(1.5 * PI),
            &p,
        )
        .unwrap();
        assert!(e.path.is_turn_only());
        // antipodal tie turns left
        assert_eq!(e.path, PathType::L);
    }

    #[test]
    fn start_outside_is_error() {
        let p = params(1.0, 2.0);
        assert!(matches!(
            cell_exit_map(Configuration::new(1.5, 0.5, 0.0), Angle::new(0.0), &p),
            Err(KinematicsError::StartOutsideCell { .. })
        ));
    }

    #[test]
    fn outward_start_on_border_exits_immediately() {
        let p = params(1.0, 2.0);
        let e = cell_exit_map(Configuration::new(0.3, 1.0, 1.0), Angle::new(1.0), &p).unwrap();
        assert_eq!(e.exit_border, Border::Top);
        assert_eq!(e.straight_len, 0.0);
        let o = oracle_integrate(Configuration::new(0.3, 1.0, 1.0), Angle::new(1.0), &p, 1e-4);
        assert_eq!(o.exit_border, Border::Top);
        assert_eq!(o.straight_len, 0.0);
    }

    #[test]
    fn tangent_start_on_border() {
        let p = params(1.0, 2.0);
        // heading up along the right border, turning left: enters
        assert!(enters_cell(Border::Right, Angle::new(FRAC_PI_2), Angle::new(PI)));
        // turning right: leaves
        assert!(!enters_cell(Border::Right, Angle::new(FRAC_PI_2), Angle::new(0.0)));
        // straight along the border: leaves
        assert!(!enters_cell(Border::Right, Angle::new(FRAC_PI_2), Angle::new(FRAC_PI_2)));
        let e = cell_exit_map(Configuration::new(1.0, 0.2, FRAC_PI_2), Angle::new(PI), &p).unwrap();
        assert_ne!(e.arc_angle, 0.0);
    }

    #[test]
    fn oracle_convergence_order() {
        let p = params(1.0, 2.0);
        let start = Configuration::new(0.2, 0.1, 0.3);
        let tc = Angle::new(2.0);
        let exact = cell_exit_map(start, tc, &p).unwrap();
        let err = |h: f64| {
            let o = oracle_integrate(start, tc, &p, h);
            o.exit_config.position().dist(exact.exit_config.position())
        };
        let coarse = err(2e-3);
        let fine = err(1e-3);
        assert!(fine <= coarse * 0.6 + 1e-12, "coarse {coarse} fine {fine}");
    }
}
