use twopatch::shooting::{find_thresholds, scan_mismatch, shoot_left, shoot_right, MapStatus};
use twopatch::{solve_steady_state, PatchProblem, ReactionSpec, SolverOptions};

fn reference() -> PatchProblem {
    PatchProblem::reference_logistic()
}

fn strictly(v: &[f64], increasing: bool) -> bool {
    v.windows(2).all(|w| if increasing { w[1] > w[0] + 1e-10 } else { w[1] < w[0] - 1e-10 })
}

#[test]
fn shooting_maps_are_monotone_on_their_ranges() {
    let p = reference();
    let opts = SolverOptions::default();
    let th = find_thresholds(&p, &opts).unwrap();
    let grid = |a: f64, b: f64| (0..30).map(move |i| a + (b - a) * i as f64 / 29.0);
    let left: Vec<_> = grid(1.0, th.alpha_minus)
        .map(|a| shoot_left(&p, a, &opts.flow).unwrap())
        .collect();
    let right: Vec<_> = grid(th.beta_plus, 2.2)
        .map(|b| shoot_right(&p, b, &opts.flow).unwrap())
        .collect();
    assert!(left.iter().chain(&right).all(|s| s.status == MapStatus::Valid));
    let col = |v: &[twopatch::shooting::ShootingMapSample], u: bool| -> Vec<f64> {
        v.iter().map(|s| if u { s.u_at_interface } else { s.v_at_interface }).collect()
    };
    assert!(strictly(&col(&left, true), true));
    assert!(strictly(&col(&left, false), true));
    assert!(strictly(&col(&right, true), true));
    assert!(strictly(&col(&right, false), false));
}

#[test]
fn mismatch_scan_has_one_sign_change() {
    let p = reference();
    let opts = SolverOptions::default();
    let th = find_thresholds(&p, &opts).unwrap();
    let scan = scan_mismatch(&p, &th, 64, &opts).unwrap();
    assert!(!scan.refined);
    assert_eq!(scan.alphas.len(), 64);
    assert!(scan.strictly_decreasing);
    assert_eq!(scan.sign_changes, 1);
    assert!(scan.values[0] > 0.0 && *scan.values.last().unwrap() < 0.0);
}

#[test]
fn thresholds_approach_the_capacities_for_short_patches() {
    let opts = SolverOptions::default();
    let mut prev = (0.0, f64::INFINITY);
    for l in [0.5, 0.1, 0.01, 1e-3] {
        let p = reference().with_lengths(l, l).unwrap();
        let th = find_thresholds(&p, &opts).unwrap();
        assert!(th.alpha_minus > prev.0 && th.beta_plus < prev.1);
        prev = (th.alpha_minus, th.beta_plus);
    }
    assert!((prev.0 - 2.2).abs() < 1e-3);
    assert!((prev.1 - 1.0).abs() < 1e-3);
}

#[test]
fn shrinking_patches_pull_the_endpoint_values_together() {
    let opts = SolverOptions::default();
    let mut prev_gap = f64::INFINITY;
    for scale in [1.0, 0.5, 0.25, 0.125] {
        let p = reference().with_lengths(1.0349 * scale, 1.1671 * scale).unwrap();
        let s = solve_steady_state(&p, &opts).unwrap();
        let first = s.profile.left[0].u;
        let last = s.profile.right.last().unwrap().u;
        assert!(first > 1.0 && last < 2.2);
        let gap = last - first;
        assert!(gap < prev_gap, "gap {gap} did not shrink from {prev_gap}");
        prev_gap = gap;
    }
}

#[test]
fn halving_tolerances_keeps_the_solution() {
    let p = reference();
    let a = solve_steady_state(&p, &SolverOptions::default()).unwrap();
    let b = solve_steady_state(&p, &SolverOptions::default().halved()).unwrap();
    assert!((a.matched.alpha_star - b.matched.alpha_star).abs() <= 1e-9);
    assert!((a.matched.beta_star - b.matched.beta_star).abs() <= 1e-9);
}

#[test]
fn swapped_capacities_are_rejected() {
    let err = PatchProblem::new(
        ReactionSpec::logistic(1.0, 2.2).unwrap(),
        ReactionSpec::logistic(1.0, 1.0).unwrap(),
        1.2,
        2.0,
        1.0349,
        1.1671,
    )
    .unwrap_err();
    assert!(err.to_string().contains("reverse the orientation"));
}

#[test]
fn sublinear_right_exponent_with_small_left_capacity_is_uncertified() {
    let p = PatchProblem::new(
        ReactionSpec::logistic(1.0, 0.1).unwrap(),
        ReactionSpec::richards(1.0, 2.2, 0.5).unwrap(),
        1.2,
        2.0,
        1.0349,
        1.1671,
    )
    .unwrap();
    let s = solve_steady_state(&p, &SolverOptions::default()).unwrap();
    assert!(!s.certification.certified);
    assert!(s.necessary.all_passed);
    assert_eq!(s.scan.sign_changes, 1);
}

#[test]
fn certification_follows_the_audits() {
    use twopatch::shooting::CertificationRoute;
    use twopatch::{Condition, Verdict};
    let fig = solve_steady_state(&reference(), &SolverOptions::default()).unwrap();
    assert_eq!(fig.certification.route, Some(CertificationRoute::MonotoneLeftRate));

    // the exponential factor makes f⁻ turn back up before K⁺
    let left = ReactionSpec::custom(twopatch::CustomReaction::new("tilted", 1.0, |u: f64| {
        u * (1.0 - u) * (3.0 * (1.0 - u)).exp()
    }))
    .unwrap();
    let p = PatchProblem::new(left, ReactionSpec::logistic(1.0, 1.5).unwrap(), 1.0, 1.0, 1.0, 1.0).unwrap();
    let s = solve_steady_state(&p, &SolverOptions::default()).unwrap();
    let verdict = |c| s.audits.iter().find(|r| r.condition == c).unwrap().verdict;
    assert_eq!(verdict(Condition::Mminus), Verdict::Fail);
    assert_eq!(verdict(Condition::C2minus), Verdict::Fail);
    assert!(!s.certification.certified);
    assert!(s.certification.route.is_none());
    assert!(!s.certification.reasons.is_empty());
}

#[test]
fn small_left_capacity_breaks_right_map_monotonicity_despite_passing_audits() {
    // near the origin the right orbits are almost harmonic, so v⁺(0, β) grows
    // with β just above β⁺ even though C1⁺ and C2⁺ hold
    let p = PatchProblem::new(
        ReactionSpec::logistic(1.0, 0.1).unwrap(),
        ReactionSpec::logistic(1.0, 2.2).unwrap(),
        1.2,
        2.0,
        1.0349,
        1.1671,
    )
    .unwrap();
    let opts = SolverOptions::default();
    let th = find_thresholds(&p, &opts).unwrap();
    let v = |b: f64| shoot_right(&p, b, &opts.flow).unwrap().v_at_interface;
    assert!(v(th.beta_plus + 0.01) > v(th.beta_plus));
    let s = solve_steady_state(&p, &opts).unwrap();
    assert!(s
        .audits
        .iter()
        .all(|r| r.verdict == twopatch::Verdict::Pass));
    assert!(!s.scan.strictly_decreasing);
    assert_eq!(s.scan.sign_changes, 1);
    assert!(!s.certification.certified);

    // shorter patches keep the orbits away from the harmonic regime
    let short = p.with_lengths(0.5, 0.5).unwrap();
    let s = solve_steady_state(&short, &opts).unwrap();
    assert!(s.scan.strictly_decreasing && s.certification.certified);
}

#[test]
fn right_v0_time_map_is_not_monotone_for_small_v0() {
    use twopatch::{Anchor, Side, TimeMap};
    let p = reference();
    let small = TimeMap::new(&p, Side::Right, Anchor::V0(0.05)).unwrap().monotonicity_scan(30).unwrap();
    assert!(!small.strictly_increasing);
    let reference = TimeMap::new(&p, Side::Right, Anchor::V0(0.4491)).unwrap().monotonicity_scan(30).unwrap();
    assert!(reference.strictly_increasing && reference.all_slopes_positive);
}
