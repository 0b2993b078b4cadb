use std::f64::consts::FRAC_PI_2;

use curvereach::geometry::{Angle, Border};
use curvereach::kinematics::{simulate_plan, Configuration, PlanOutcome, VehicleParams};
use curvereach::plan::{Cell, CellIndex, GridPlan};
use curvereach::propagation::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_plan(seed: u64, n: usize, ratio: f64) -> GridPlan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = VehicleParams::unit_speed(1.0, 1.0 / ratio).unwrap();
    let target = CellIndex::new(rng.gen_range(0..n), rng.gen_range(0..n));
    let cells = (0..n * n)
        .map(|k| {
            let c = CellIndex::new(k / n, k % n);
            if c != target && rng.gen_bool(0.1) {
                Cell::Excluded
            } else {
                Cell::Command(Angle::from_degrees(rng.gen_range(0.0..360.0)))
            }
        })
        .collect();
    GridPlan::new(n, n, cells, [target], params).unwrap()
}

fn assert_same(a: &ReachabilityResult, b: &ReachabilityResult) {
    assert_eq!(a.borders, b.borders);
    for ((id, x), y) in a.iter().zip(&b.bitmaps) {
        assert!(x == y, "border {id} differs: {} vs {} bits", x.count_ones(), y.count_ones());
    }
}

#[test]
fn rotation_permutes_bitmaps_exactly() {
    for seed in 0..3 {
        let plan = random_plan(seed, 4, 0.6);
        let base = iterative_border_expansion(&plan, 24, ExpansionOptions::default()).unwrap();
        for k in 1..4u8 {
            let rotated = iterative_border_expansion(&plan.rotated(k), 24, ExpansionOptions::default()).unwrap();
            assert_same(&base.rotated(k), &rotated);
        }
    }
}

#[test]
fn mirror_permutes_bitmaps_exactly() {
    for seed in 0..3 {
        let plan = random_plan(seed, 4, 0.6);
        let base = iterative_border_expansion(&plan, 24, ExpansionOptions::default()).unwrap();
        let mirrored = iterative_border_expansion(&plan.mirrored(), 24, ExpansionOptions::default()).unwrap();
        let expect = base.mirrored();
        let differing: u64 = expect
            .bitmaps
            .iter()
            .zip(&mirrored.bitmaps)
            .map(|(a, b)| {
                let mut u = a.clone();
                u.union_with(b);
                2 * u.count_ones() - a.count_ones() - b.count_ones()
            })
            .sum();
        assert_eq!(differing, 0, "seed {seed}: {differing} bits break the mirror symmetry");
    }
}

#[test]
fn schedule_and_prefilter_do_not_change_the_fixed_point() {
    let plan = random_plan(11, 4, 0.8);
    let base = iterative_border_expansion(&plan, 20, ExpansionOptions { threads: Some(1), ..Default::default() }).unwrap();
    let shuffled = iterative_border_expansion(
        &plan,
        20,
        ExpansionOptions { threads: Some(8), order_seed: Some(3), ..Default::default() },
    )
    .unwrap();
    let unfiltered =
        iterative_border_expansion(&plan, 20, ExpansionOptions { prefilter: false, ..Default::default() }).unwrap();
    assert_same(&base, &shuffled);
    assert_same(&base, &unfiltered);
    assert_eq!(base.history, shuffled.history);
    assert!(base.history.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(base.history[base.history.len() - 1], base.history[base.history.len() - 2]);
}

#[test]
fn walled_off_region_stays_empty() {
    // column 1 excluded: column 0 cannot reach the target in column 2
    let params = VehicleParams::unit_speed(1.0, 2.0).unwrap();
    let cells = (0..9)
        .map(|k| if k % 3 == 1 { Cell::Excluded } else { Cell::Command(Angle::new(FRAC_PI_2)) })
        .collect();
    let plan = GridPlan::new(3, 3, cells, [CellIndex::new(2, 2)], params).unwrap();
    let r = iterative_border_expansion(&plan, 16, ExpansionOptions::default()).unwrap();
    assert!(r.bitmap(BorderId::horizontal(1, 0)).unwrap().is_empty());
    assert!(r.bitmap(BorderId::horizontal(2, 0)).unwrap().is_empty());
    assert!(!r.bitmap(BorderId::horizontal(1, 2)).unwrap().is_empty());
}

#[test]
fn propagate_border_from_full_source_matches_theta() {
    // one cell below a target: the target's bottom border is full, so the
    // propagated set is the discretized Θ toward it
    let params = VehicleParams::unit_speed(1.0, 1.5).unwrap();
    let plan = GridPlan::uniform(3, 1, Angle::from_degrees(100.0), [CellIndex::new(2, 0)], params).unwrap();
    let m = 40;
    let state = init_from_region(&plan, m).unwrap();
    let source = BorderId::horizontal(2, 0);
    let target = BorderId::horizontal(1, 0);
    let via = CellIndex::new(1, 0);
    let out = propagate_border(source, target, via, &state, &plan, false).unwrap();
    let mut disagreements = 0;
    for i in 0..m {
        let s = (i as f64 + 0.5) / m as f64;
        let theta = curvereach::cellular_backward::theta_border_restricted(
            s,
            Border::Bottom,
            Border::Top,
            plan.command(via),
            &params,
        )
        .unwrap();
        for j in 0..m {
            let h = (j as f64 + 0.5) * std::f64::consts::TAU / m as f64;
            if theta.endpoint_distance(h) < 1e-6 {
                continue;
            }
            disagreements += usize::from(theta.contains(h) != out.get(i, j));
        }
    }
    assert_eq!(disagreements, 0);
}

#[test]
fn queries_agree_with_simulation() {
    let params = VehicleParams::unit_speed(1.0, 1.6).unwrap();
    let plan = GridPlan::uniform(4, 4, Angle::from_degrees(80.0), [CellIndex::new(3, 1)], params).unwrap();
    let r = iterative_border_expansion(&plan, 64, ExpansionOptions::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut agree, mut total) = (0, 0);
    for _ in 0..4000 {
        let q = Configuration::new(rng.gen::<f64>() * 4.0, rng.gen::<f64>() * 4.0, rng.gen::<f64>() * std::f64::consts::TAU);
        let out = query_configuration(q, &r, &plan).unwrap();
        if matches!(out.basis, QueryBasis::Bit { near_boundary: true, .. }) {
            continue;
        }
        let sim = simulate_plan(q, &plan, plan.default_budget()).unwrap().outcome == PlanOutcome::ReachedTarget;
        total += 1;
        agree += usize::from(sim == (out.verdict == Verdict::Reachable));
    }
    assert!(agree as f64 >= 0.99 * total as f64, "{agree}/{total}");
    let inside = query_configuration(Configuration::new(1.5, 3.5, 1.0), &r, &plan).unwrap();
    assert_eq!(inside.verdict, Verdict::Reachable);
    assert!(query_configuration(Configuration::new(-0.1, 1.0, 0.0), &r, &plan).is_err());
}
