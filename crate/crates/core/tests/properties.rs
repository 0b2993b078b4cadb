use std::f64::consts::{PI, TAU};

use curvereach::cellular_backward::{theta_bounds, AngleInterval, AngleIntervalSet};
use curvereach::cli_io::PlanFile;
use curvereach::geometry::{signed_diff, wrap_2pi, Angle, Border, CellFrame, Point2};
use curvereach::kinematics::{cell_exit_map, control_law, Configuration, ControlOutput, VehicleParams};
use curvereach::plan::{Cell, CellIndex, GridPlan};
use curvereach::propagation::{storage_bits, BorderBitmap};
use proptest::prelude::*;

fn params(ratio: f64) -> VehicleParams {
    VehicleParams::unit_speed(1.0, 1.0 / ratio).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn control_law_is_mirror_symmetric(theta in 0.0..TAU, tc in 0.0..TAU) {
        // away from the antipode, where the tie always resolves left
        prop_assume!(signed_diff(theta, tc + PI).abs() > 1e-9);
        let a = control_law(Angle::new(theta), Angle::new(tc));
        let b = control_law(Angle::new(PI - theta), Angle::new(PI - tc));
        let flipped = match a {
            ControlOutput::TurnLeft => ControlOutput::TurnRight,
            ControlOutput::TurnRight => ControlOutput::TurnLeft,
            s => s,
        };
        prop_assert_eq!(b, flipped);
    }

    #[test]
    fn exit_map_commutes_with_quarter_turns(
        x in 0.0..1.0f64, y in 0.0..1.0f64, theta in 0.0..TAU, tc in 0.0..TAU,
        ratio in 0.2..0.95f64, k in 1u8..4,
    ) {
        let p = params(ratio);
        let f = CellFrame::new(1.0, k);
        let e = cell_exit_map(Configuration::new(x, y, theta), Angle::new(tc), &p).unwrap();
        let q = f.point_to_local(Point2::new(x, y));
        let r = cell_exit_map(
            Configuration::new(q.x, q.y, f.angle_to_local(theta)),
            Angle::new(f.angle_to_local(tc)),
            &p,
        ).unwrap();
        let expect = f.point_to_local(e.exit_config.position());
        // ties at corners and antipodes may legitimately pick another border
        prop_assume!(e.exit_border.rotated(k) == r.exit_border);
        prop_assert!(expect.dist(r.exit_config.position()) < 1e-9);
        prop_assert!(signed_diff(r.exit_config.theta.value(), f.angle_to_local(e.exit_config.theta.value())).abs() < 1e-9);
    }

    #[test]
    fn exit_lies_on_its_border(x in 0.0..1.0f64, y in 0.0..1.0f64, theta in 0.0..TAU, tc in 0.0..TAU, ratio in 0.2..0.95f64) {
        let e = cell_exit_map(Configuration::new(x, y, theta), Angle::new(tc), &params(ratio)).unwrap();
        let q = e.exit_config.position();
        prop_assert!(e.exit_border.outside_distance(q, 1.0).abs() < 1e-9);
        prop_assert!((-1e-9..=1.0 + 1e-9).contains(&e.exit_border.coordinate_of(q)));
    }

    #[test]
    fn theta_bounds_mirror(x in 0.01..0.99f64, y in 0.0..0.99f64, tc in 0.0..TAU, ratio in 0.2..0.9f64) {
        // mirroring the cell maps the top-border set onto its reflection
        let p = params(ratio);
        let a = theta_bounds(Point2::new(x, y), Angle::new(tc), Border::Top, &p).unwrap().set;
        let b = theta_bounds(Point2::new(1.0 - x, y), Angle::new(PI - tc), Border::Top, &p).unwrap().set;
        for k in 0..360 {
            let th = (k as f64 + 0.5) * TAU / 360.0;
            let m = wrap_2pi(PI - th);
            if a.endpoint_distance(th) > 1e-6 {
                prop_assert_eq!(a.contains(th), b.contains(m), "heading {}", th);
            }
        }
    }

    #[test]
    fn interval_set_union_contains_parts(lo1 in 0.0..TAU, w1 in 0.0..TAU, lo2 in 0.0..TAU, w2 in 0.0..TAU, probe in 0.0..TAU) {
        let a = AngleIntervalSet::single(AngleInterval::new(lo1, w1));
        let b = AngleIntervalSet::single(AngleInterval::new(lo2, w2));
        let u = a.union(&b);
        if a.contains(probe) || b.contains(probe) {
            prop_assert!(u.contains_dilated(probe, 1e-9));
        }
        let i = a.intersect_interval(&AngleInterval::new(lo2, w2));
        if i.contains(probe) {
            prop_assert!(a.contains_dilated(probe, 1e-9) && b.contains_dilated(probe, 1e-9));
        }
    }

    #[test]
    fn crbm_round_trip(m_pos in 1usize..40, m_theta in 1usize..70, bits in proptest::collection::vec((0usize..40, 0usize..70), 0..50)) {
        let mut b = BorderBitmap::empty(m_pos, m_theta);
        for (i, j) in bits {
            b.set(i % m_pos, j % m_theta);
        }
        let back = BorderBitmap::from_crbm(&b.to_crbm()).unwrap();
        prop_assert_eq!(back, b);
    }

    #[test]
    fn plan_file_round_trip(
        n_rows in 1usize..5, n_cols in 1usize..5,
        seeds in proptest::collection::vec(proptest::option::weighted(0.8, -720.0..720.0f64), 16),
    ) {
        let cells: Vec<Cell> = (0..n_rows * n_cols)
            .map(|k| match seeds[k] {
                Some(deg) => Cell::Command(Angle::from_degrees(deg)),
                None if k == 0 => Cell::Command(Angle::ZERO),
                None => Cell::Excluded,
            })
            .collect();
        let plan = GridPlan::new(n_rows, n_cols, cells, [CellIndex::new(0, 0)], params(0.5)).unwrap();
        let file = PlanFile::from_plan(&plan, Some(12));
        let text = file.serialize();
        let parsed = PlanFile::parse(&text, "rt").unwrap();
        prop_assert_eq!(&parsed, &file);
        // whitespace does not matter
        let spaced = text.replace(' ', "   \t");
        prop_assert_eq!(PlanFile::parse(&spaced, "rt").unwrap(), parsed);
    }

    #[test]
    fn storage_formula(n in 1u64..200, m in 1u64..500) {
        let (b, d) = storage_bits(n, m);
        prop_assert_eq!(b, (m * m * 2 * n * (n - 1)) as u128);
        prop_assert_eq!(d, (m * m * m) as u128 * (n * n) as u128);
    }
}
