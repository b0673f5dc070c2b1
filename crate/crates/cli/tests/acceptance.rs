//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twopatch::audit::{
    p_polynomial, p_polynomial_root, q_definition, q_factored, quotient_second_derivative,
    richards_closed_form_audit, sqrt_derivatives,
};
use twopatch::shooting::{find_thresholds, scan_mismatch, shoot_left, shoot_right, MapStatus};
use twopatch::{
    check_condition, compare_solutions, fd_steady_solve, flow, solve_steady_state, Anchor, Condition, Direction,
    FdGrid, FdInit, FlowOptions, PatchProblem, PhaseState, Potential, ReactionSpec, Side, SolverOptions,
    TimeMap, Verdict,
};
use twopatch_cli::commands::{self, MatchFile, SolutionRow};
use twopatch_cli::RunConfig;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    format!("{e:#}")
}

fn within(elapsed: Duration, limit: f64) -> Result<(), String> {
    ensure(
        elapsed.as_secs_f64() <= limit,
        format!("took {:.2} s, limit {limit} s", elapsed.as_secs_f64()),
    )
}

fn reference_solve() -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(e2s)?;
    let outcome = commands::solve(&RunConfig::reference(), dir.path()).map_err(e2s)?;
    let elapsed = start.elapsed();
    ensure(outcome.code == 0, format!("exit code {}", outcome.code))?;

    let rows: Vec<SolutionRow> =
        twopatch::export::read_rows(fs::File::open(dir.path().join("solution.csv")).map_err(e2s)?).map_err(e2s)?;
    for side in [Side::Left, Side::Right] {
        let half: Vec<_> = rows.iter().filter(|r| r.side == side).collect();
        ensure(
            half.windows(2).all(|w| w[1].x > w[0].x && w[1].u > w[0].u),
            format!("{side:?} profile not strictly increasing"),
        )?;
    }
    let (first, last) = (rows.first().unwrap(), rows.last().unwrap());
    ensure(first.u > 1.0 && first.u < 2.2, format!("u(-L-) = {}", first.u))?;
    ensure(last.u > 1.0 && last.u < 2.2, format!("u(L+) = {}", last.u))?;

    let m: MatchFile = serde_json::from_str(&fs::read_to_string(dir.path().join("match.json")).map_err(e2s)?)
        .map_err(e2s)?;
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).map_err(e2s)?).map_err(e2s)?;
    let neumann = report["neumann_residual"].as_f64().unwrap_or(f64::NAN).abs();
    let (density, flux) = (m.density_residual.abs(), m.flux_residual.abs());
    ensure(density <= 1e-8, format!("density residual {density:e}"))?;
    ensure(flux <= 1e-8, format!("flux residual {flux:e}"))?;
    ensure(neumann <= 1e-8, format!("Neumann residual {neumann:e}"))?;
    ensure(report["certified"] == true, "not certified")?;
    within(elapsed, 5.0)?;
    Ok(format!(
        "certified, alpha* = {:.10}, beta* = {:.10}, residuals {:.1e}/{:.1e}/{:.1e}, {:.2} s",
        m.alpha_star,
        m.beta_star,
        density,
        flux,
        neumann,
        elapsed.as_secs_f64()
    ))
}

fn oracle_equivalence() -> Check {
    let start = Instant::now();
    let p = PatchProblem::reference_logistic();
    let sol = solve_steady_state(&p, &SolverOptions::default()).map_err(e2s)?;
    let sizes = [256usize, 512, 1024, 2048];
    let mut errs = vec![];
    for n in sizes {
        let fd = fd_steady_solve(&p, FdGrid::uniform(n).map_err(e2s)?, &FdInit::Linear).map_err(e2s)?;
        errs.push(compare_solutions(&p, &fd, &sol.profile).map_err(e2s)?.linf);
    }
    let elapsed = start.elapsed();
    ensure(errs[0] <= 5e-4, format!("L-inf {:e} at n = 256", errs[0]))?;
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    ensure(ratios.iter().all(|&r| r >= 3.5), format!("refinement ratios {ratios:?}"))?;
    within(elapsed, 30.0)?;
    Ok(format!(
        "L-inf {:.2e} at n = 256, ratios {}, {:.2} s",
        errs[0],
        ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(", "),
        elapsed.as_secs_f64()
    ))
}

fn uniqueness_scan() -> Check {
    let p = PatchProblem::reference_logistic();
    let opts = SolverOptions::default();
    let th = find_thresholds(&p, &opts).map_err(e2s)?;
    let scan = scan_mismatch(&p, &th, 64, &opts).map_err(e2s)?;
    ensure(scan.alphas.len() == 64, format!("{} points", scan.alphas.len()))?;
    ensure(
        scan.alphas[0] == p.k_minus() && *scan.alphas.last().unwrap() == th.alpha_minus,
        "scan does not span [K-, alpha-]",
    )?;
    ensure(scan.strictly_decreasing, "not strictly decreasing")?;
    ensure(scan.sign_changes == 1, format!("{} sign changes", scan.sign_changes))?;
    let (first, last) = (scan.values[0], *scan.values.last().unwrap());
    ensure(first > 0.0 && last < 0.0, format!("endpoint values {first}, {last}"))?;
    Ok(format!("64 points, one sign change, mismatch {first:.4} -> {last:.4}"))
}

fn right_richards(km: f64, p: f64) -> Result<PatchProblem, String> {
    PatchProblem::new(
        ReactionSpec::logistic(1.0, km).map_err(e2s)?,
        ReactionSpec::richards(1.0, 2.2, p).map_err(e2s)?,
        1.2,
        2.0,
        1.0349,
        1.1671,
    )
    .map_err(e2s)
}

fn richards_verdicts() -> Check {
    for p in [1.0, 1.5, 2.0, 5.0] {
        let a = richards_closed_form_audit(p, 1000).map_err(e2s)?;
        ensure(
            a.c1_plus == Verdict::Pass && a.c2_plus == Verdict::Pass,
            format!("p = {p}: closed form {:?}/{:?}", a.c1_plus, a.c2_plus),
        )?;
        let problem = right_richards(1.0, p)?;
        for c in [Condition::C1plus, Condition::C2plus] {
            let r = check_condition(&problem, c, 256).map_err(e2s)?;
            ensure(r.verdict == Verdict::Pass, format!("p = {p}: grid {c} {:?}", r.verdict))?;
        }
    }
    let mut ratios = vec![];
    for p in [0.25, 0.5, 0.9] {
        let (p0, p1) = (p_polynomial(p, 0.0), p_polynomial(p, 1.0));
        ensure((p0 - (p * p - 1.0)).abs() <= 1e-9 && p0 < 0.0, format!("p = {p}: P(0) = {p0}"))?;
        ensure((p1 - 3.0 * p * p).abs() <= 1e-9 && p1 > 0.0, format!("p = {p}: P(1) = {p1}"))?;
        let a = richards_closed_form_audit(p, 1000).map_err(e2s)?;
        let z = p_polynomial_root(p).ok_or(format!("p = {p}: no root of P in (0, 1)"))?;
        ensure(a.p_sign_change && p_polynomial(p, z).abs() <= 1e-9, format!("p = {p}: sign change not detected"))?;
        // K⁻ well inside the failing range (K⁻/K⁺)^p < z*
        let ratio = (0.5 * z).powf(1.0 / p);
        let r = check_condition(&right_richards(ratio * 2.2, p)?, Condition::C2plus, 256).map_err(e2s)?;
        ensure(r.verdict == Verdict::Fail, format!("p = {p}: C2+ grid audit {:?} at K-/K+ = {ratio:e}", r.verdict))?;
        ratios.push(format!("{p}:{ratio:.2e}"));
    }
    Ok(format!("p >= 1 pass; p < 1 fail C2+ at K-/K+ {}", ratios.join(" ")))
}

fn reference_anchors() -> [(Side, Anchor); 4] {
    [
        (Side::Right, Anchor::U0(1.1)),
        (Side::Right, Anchor::V0(0.4491)),
        (Side::Left, Anchor::U0(1.75)),
        (Side::Left, Anchor::V0(0.7348)),
    ]
}

fn timemap_monotonicity() -> Check {
    let start = Instant::now();
    let p = PatchProblem::reference_logistic();
    let mut gaps = vec![];
    for (side, anchor) in reference_anchors() {
        let rep = TimeMap::new(&p, side, anchor)
            .and_then(|m| m.monotonicity_scan(50))
            .map_err(e2s)?;
        ensure(rep.samples.len() == 50, "scan size")?;
        ensure(rep.strictly_increasing, format!("{side:?} {anchor:?}: T not strictly increasing"))?;
        ensure(rep.all_slopes_positive, format!("{side:?} {anchor:?}: nonpositive dT/dE"))?;
        gaps.push(rep.min_adjacent_gap);
    }
    let elapsed = start.elapsed();
    within(elapsed, 10.0)?;
    Ok(format!(
        "4 anchors x 50 energies, smallest T gap {:.2e}, {:.2} s",
        gaps.iter().cloned().fold(f64::INFINITY, f64::min),
        elapsed.as_secs_f64()
    ))
}

fn timemap_oracle() -> Check {
    let p = PatchProblem::reference_logistic();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let variants: [(Side, bool); 4] = [(Side::Right, true), (Side::Right, false), (Side::Left, true), (Side::Left, false)];
    for (side, on_u_line) in variants {
        let mut done = 0;
        let mut tries = 0;
        while done < 20 {
            tries += 1;
            if tries > 2000 {
                return Err(format!("{side:?}: could not draw admissible anchors"));
            }
            let anchor = if on_u_line {
                Anchor::U0(rng.gen_range(1.05..2.15))
            } else {
                Anchor::V0(rng.gen_range(0.05..1.0))
            };
            let Ok(map) = TimeMap::new(&p, side, anchor) else { continue };
            let e = map.spec.energy_at(rng.gen_range(0.02..0.98));
            let t_quad = map.eval(e).map_err(e2s)?;
            let t_ode = map.flow_time(e).map_err(e2s)?;
            let err = (t_quad - t_ode).abs();
            ensure(err <= 1e-6, format!("{side:?} {anchor:?} E = {e}: |dT| = {err:e}"))?;
            worst = worst.max(err);
            done += 1;
        }
    }
    Ok(format!("80 pairs, worst |T_quad - T_ode| = {worst:.2e}"))
}

fn energy_conservation() -> Check {
    let p = PatchProblem::reference_logistic();
    let opts = FlowOptions::default();
    let sol = solve_steady_state(&p, &SolverOptions::default()).map_err(e2s)?;
    let mut worst_drift: f64 = 0.0;
    let mut worst_return: f64 = 0.0;
    let mut runs = 0;
    let mut check = |pot: &Potential, u: f64, v: f64, t: f64| -> Result<(), String> {
        let start = PhaseState::new(pot, u, v).map_err(e2s)?;
        let scale = start.energy.abs().max(1.0);
        let fwd = flow(pot, 0.0, start, t, Direction::Forward, &opts).map_err(e2s)?;
        let back = flow(pot, t, fwd.final_state, t, Direction::Backward, &opts).map_err(e2s)?;
        for run in [&fwd, &back] {
            ensure(run.energy_drift <= 1e-8 * scale, format!("drift {:e} from ({u}, {v})", run.energy_drift))?;
            worst_drift = worst_drift.max(run.energy_drift / scale);
        }
        let ret = (back.final_state.u - u).abs().max((back.final_state.v - v).abs());
        ensure(ret <= 1e-8, format!("return error {ret:e} from ({u}, {v})"))?;
        worst_return = worst_return.max(ret);
        runs += 2;
        Ok(())
    };
    let left = p.potential(Side::Left);
    let right = p.potential(Side::Right);
    // the two arcs of the steady state
    check(&left, sol.matched.alpha_star, 0.0, p.length(Side::Left))?;
    check(&right, sol.matched.beta_star, 0.0, p.length(Side::Right))?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..40 {
        let pot = if i % 2 == 0 { &left } else { &right };
        // bounded orbits: start between the capacities with moderate slope
        let u = rng.gen_range(1.0..2.2);
        let v = rng.gen_range(-0.3..0.3);
        check(pot, u, v, rng.gen_range(0.1..2.0))?;
    }
    Ok(format!(
        "{runs} runs, worst relative drift {worst_drift:.2e}, worst return {worst_return:.2e}"
    ))
}

fn fourth_order_second_difference(g: impl Fn(f64) -> f64, u: f64, h: f64) -> f64 {
    (-g(u + 2.0 * h) + 16.0 * g(u + h) - 30.0 * g(u) + 16.0 * g(u - h) - g(u - 2.0 * h)) / (12.0 * h * h)
}

fn identity_suite() -> Check {
    let mut worst_q: f64 = 0.0;
    for p in [0.25, 0.5, 1.0, 2.0, 5.0] {
        for i in 0..100 {
            let z = (i as f64 + 0.5) / 100.0;
            let (a, b) = (q_definition(p, z), q_factored(p, z));
            let err = (a - b).abs() / a.abs().max(1.0);
            ensure(err <= 1e-12, format!("Q forms differ by {err:e} at p = {p}, z = {z}"))?;
            worst_q = worst_q.max(err);
        }
    }
    let p = PatchProblem::reference_logistic();
    let mut worst_sqrt: f64 = 0.0;
    let mut worst_quot: f64 = 0.0;
    let pots = [
        p.potential(Side::Right),
        Potential::new(ReactionSpec::richards(1.0, 2.2, 0.5).map_err(e2s)?, 2.0).map_err(e2s)?,
        Potential::new(ReactionSpec::richards(1.0, 2.2, 3.0).map_err(e2s)?, 2.0).map_err(e2s)?,
    ];
    for pot in &pots {
        let k = pot.k();
        // endpoint margins: 5% of K at both ends
        for i in 0..100 {
            let u = k * (0.05 + 0.9 * i as f64 / 99.0);
            let jet = [
                pot.value(u).map_err(e2s)?,
                pot.derivative(u, 1).map_err(e2s)?,
                pot.derivative(u, 2).map_err(e2s)?,
                pot.derivative(u, 3).map_err(e2s)?,
            ];
            let s = |x: f64| pot.value(x).unwrap().sqrt();
            let exact = sqrt_derivatives(jet)[2];
            let fd = fourth_order_second_difference(s, u, 2e-3 * u);
            let floor = 1e-9 * s(u) / (u * u);
            let rel = (fd - exact).abs() / (exact.abs() + floor);
            ensure(rel <= 1e-5, format!("sqrt identity off by {rel:e} at u = {u}"))?;
            worst_sqrt = worst_sqrt.max(rel);

            let q = |x: f64| {
                let f1 = pot.derivative(x, 1).unwrap();
                pot.value(x).unwrap() / (f1 * f1)
            };
            let exact = quotient_second_derivative(jet);
            let fd = fourth_order_second_difference(q, u, 1e-3 * u);
            let rel = (fd - exact).abs() / exact.abs().max(1e-8 * q(u) / (u * u));
            ensure(rel <= 1e-5, format!("quotient identity off by {rel:e} at u = {u}"))?;
            worst_quot = worst_quot.max(rel);
        }
    }
    Ok(format!(
        "Q forms {worst_q:.1e}, sqrt identity {worst_sqrt:.1e}, quotient identity {worst_quot:.1e}"
    ))
}

fn shooting_maps() -> Check {
    let p = PatchProblem::reference_logistic();
    let opts = SolverOptions::default();
    let th = find_thresholds(&p, &opts).map_err(e2s)?;
    let grid = |a: f64, b: f64| (0..30).map(move |i| a + (b - a) * i as f64 / 29.0);
    let left = grid(p.k_minus(), th.alpha_minus)
        .map(|a| shoot_left(&p, a, &opts.flow))
        .collect::<twopatch::Result<Vec<_>>>()
        .map_err(e2s)?;
    let right = grid(th.beta_plus, p.k_plus())
        .map(|b| shoot_right(&p, b, &opts.flow))
        .collect::<twopatch::Result<Vec<_>>>()
        .map_err(e2s)?;
    ensure(
        left.iter().chain(&right).all(|s| s.status == MapStatus::Valid),
        "a shot left the admissible region",
    )?;
    let strict = |v: Vec<f64>, up: bool| {
        v.windows(2)
            .map(|w| if up { w[1] - w[0] } else { w[0] - w[1] })
            .fold(f64::INFINITY, f64::min)
    };
    let gaps = [
        ("u-(0, alpha) increasing", strict(left.iter().map(|s| s.u_at_interface).collect(), true)),
        ("v-(0, alpha) increasing", strict(left.iter().map(|s| s.v_at_interface).collect(), true)),
        ("u+(0, beta) increasing", strict(right.iter().map(|s| s.u_at_interface).collect(), true)),
        ("v+(0, beta) decreasing", strict(right.iter().map(|s| s.v_at_interface).collect(), false)),
    ];
    for (name, gap) in gaps {
        ensure(gap > 1e-10, format!("{name}: smallest step {gap:e}"))?;
    }
    Ok(format!(
        "4 maps on 30 points, smallest steps {}",
        gaps.iter().map(|(_, g)| format!("{g:.2e}")).collect::<Vec<_>>().join(", ")
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("reference solve", reference_solve),
        ("shooting vs finite differences", oracle_equivalence),
        ("uniqueness scan", uniqueness_scan),
        ("Richards condition verdicts", richards_verdicts),
        ("time-map monotonicity", timemap_monotonicity),
        ("time-map ODE oracle", timemap_oracle),
        ("energy conservation", energy_conservation),
        ("identity suite", identity_suite),
        ("monotone shooting maps", shooting_maps),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
