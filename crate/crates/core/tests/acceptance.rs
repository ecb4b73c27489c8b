mod common;

use std::cell::RefCell;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use persuasion_core::math::mean_and_se;
use persuasion_core::plausibility::ReportingCase;
use persuasion_core::policy::Ordering;
use persuasion_core::two_period::TwoPeriodCase;
use persuasion_core::*;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

type Outcome = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: persuasion_core::Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn full_disclosure_time() -> Outcome {
    let sol = lib(solve(&fig2(2.0), 3.0))?;
    let t = sol.full_disclosure_time.unwrap_or(f64::NAN);
    let t_rel = 3f64.ln() / 4.0;
    let relaxed = lib(solve(&fig2(100.0), 3.0))?;
    let t_relaxed = relaxed.full_disclosure_time.unwrap_or(f64::NAN);
    ensure((t_relaxed - t_rel).abs() < 1e-9, || {
        format!("T = {t_relaxed}, closed form {t_rel}")
    })?;
    let at_t0 = relaxed_variance_oracle(&fig2(2.0), t_rel, sol.t0);
    ensure((at_t0 - 2.0).abs() < 1e-9, || {
        format!("relaxed v̂(t₀) = {at_t0}")
    })?;
    ensure((sol.t0 - 0.0381).abs() < 1e-4, || {
        format!("t₀ = {}", sol.t0)
    })?;
    ensure((t + sol.t0 - t_rel).abs() < 1e-12, || {
        format!("shifted T = {t}")
    })?;
    Ok(format!(
        "T = {t_relaxed:.10}, t₀ = {:.7}, v̂-before-shift(t₀) − 2 = {:.1e}",
        sol.t0,
        at_t0 - 2.0
    ))
}

fn binding_obedience() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    for s0 in [100.0, 2.0] {
        let p = fig2(s0);
        let sol = lib(solve(&p, 3.0))?;
        let t_full = sol.full_disclosure_time.unwrap_or(0.0);
        let grid = linspace(0.0, t_full + 1.0, 1000);
        let rep = lib(verify_obedience(&sol, &[p], &grid, 1e-6))?;
        let gap = rep
            .points
            .iter()
            .map(|pt| pt.excess.abs())
            .fold(0.0, f64::max);
        ensure(gap < 1e-6, || format!("σ₀² = {s0}: max |excess| = {gap}"))?;
        let mut res = 0.0f64;
        for k in 1..=200 {
            let t = t_full * k as f64 / 201.0;
            res = res.max(lib(ode_residual(&sol, &[p], t, None))?.abs());
        }
        ensure(res < 1e-6, || format!("σ₀² = {s0}: ODE residual {res}"))?;
        worst = (worst.0.max(gap), worst.1.max(res));
    }
    Ok(format!(
        "max |excess| = {:.1e}, max residual = {:.1e}",
        worst.0, worst.1
    ))
}

fn reporting_round_trip() -> Outcome {
    let mut sup = 0.0f64;
    for s0 in [100.0, 2.0] {
        let p = fig2(s0);
        let sol = lib(solve(&p, 3.0))?;
        let phi = lib(build_reporting_function(
            &VariancePath::from_policy(&sol),
            &p,
        ))?;
        let t_full = sol.full_disclosure_time.unwrap_or(0.0);
        let mut grid = linspace(0.0, t_full + 1.0, 4001);
        grid.extend(phi.breakpoints());
        grid.sort_by(f64::total_cmp);
        let mut prev = (ReportTime::NegInfinity, ReportingCase::NoReport);
        for &t in &grid {
            let gap = (lib(induced_variance(&phi, t, &p))? - sol.eval_variance(t)).abs();
            sup = sup.max(gap);
            let (f, case) = (phi.phi(t), phi.case_at(t));
            ensure(prev.0.le(f), || {
                format!("σ₀² = {s0}: φ decreases at t = {t}")
            })?;
            ensure(prev.1 <= case, || {
                format!("σ₀² = {s0}: case regresses at t = {t}")
            })?;
            ensure(f.le(ReportTime::At(t)), || {
                format!("σ₀² = {s0}: φ(t) > t at t = {t}")
            })?;
            prev = (f, case);
        }
        ensure(sup < 1e-8, || format!("σ₀² = {s0}: sup gap {sup}"))?;
    }
    Ok(format!("sup |induced − v̂| = {sup:.1e}"))
}

fn random_tradeoff(rng: &mut ChaCha8Rng) -> TwoPeriodParams {
    loop {
        let tp = TwoPeriodParams {
            beta: rng.random_range(0.5..3.0),
            delta: rng.random_range(0.2..1.0),
            rho: rng.random_range(0.5..1.5),
            sigma: rng.random_range(0.05..0.5),
            sigma1_sq: rng.random_range(0.2..3.0),
        };
        match solve_two_period(&tp) {
            Ok(s) if s.case == TwoPeriodCase::Tradeoff && !s.infeasible => return tp,
            _ => continue,
        }
    }
}

fn two_period_oracle() -> Outcome {
    let example = TwoPeriodParams::new(1.0, 0.25, 1.0, 0.2, 1.0).map_err(|e| e.to_string())?;
    let sol = lib(solve_two_period(&example))?;
    ensure(
        (sol.b1 - 0.2).abs() < 1e-14 && (sol.v1 - 0.12).abs() < 1e-14,
        || format!("closed form ({}, {})", sol.b1, sol.v1),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut cases = vec![example];
    cases.extend((0..20).map(|_| random_tradeoff(&mut rng)));
    let mut worst = 0.0f64;
    for tp in &cases {
        let sol = lib(solve_two_period(tp))?;
        let gv = linspace(0.0, tp.sigma1_sq, 2001);
        let gb = cap_grid(tp, &gv);
        let (b, v) = lib(brute_force_two_period(tp, &gb, &gv))?;
        // Grid spacing around the closed form in each coordinate.
        let k = gv.partition_point(|&x| x < sol.v1).clamp(1, gv.len() - 1);
        let (hb, hv) = (gb[k] - gb[k - 1], gv[k] - gv[k - 1]);
        let steps = ((b - sol.b1).abs() / hb).max((v - sol.v1).abs() / hv);
        ensure(steps <= 1.0 + 1e-9, || {
            format!("{tp:?}: grid argmax ({b}, {v}) vs ({}, {})", sol.b1, sol.v1)
        })?;
        worst = worst.max(steps);
    }
    Ok(format!(
        "{} instances, worst gap {worst:.3} grid steps",
        cases.len()
    ))
}

fn monte_carlo() -> Outcome {
    let p = fig2(2.0);
    let sol = lib(solve(&p, 3.0))?;
    let phi = lib(build_reporting_function(
        &VariancePath::from_policy(&sol),
        &p,
    ))?;
    let cfg = SimConfig::default();
    ensure(cfg.n_paths == 10_000 && cfg.dt == 1e-3, || {
        "unexpected defaults".into()
    })?;
    let res = lib(simulate_policy(&sol, &phi, &cfg))?;
    let z = |e: &Estimate, target: f64| (e.mean - target) / e.se.unwrap_or(f64::NAN);
    let zs = z(&res.sender_loss, res.analytic_sender_loss);
    let zr = z(&res.receiver_loss, res.analytic_receiver_loss);
    ensure(
        res.sender_loss.within(res.analytic_sender_loss, 4.0),
        || format!("sender z = {zs:.2}"),
    )?;
    ensure(
        res.receiver_loss.within(res.analytic_receiver_loss, 4.0),
        || format!("receiver z = {zr:.2}"),
    )?;
    ensure(res.deviation_tests.len() == 50, || {
        format!("{} deviation times", res.deviation_tests.len())
    })?;
    let worst = res
        .deviation_tests
        .iter()
        .map(|d| d.difference.mean / d.difference.se.unwrap_or(f64::NAN))
        .fold(f64::INFINITY, f64::min);
    let all_pass = res.deviation_tests.iter().all(|d| d.passes == Some(true));
    ensure(all_pass, || {
        format!("profitable deviation, worst z = {worst:.2}")
    })?;
    Ok(format!(
        "sender z = {zs:.2}, receiver z = {zr:.2}, worst deviation margin z = {worst:.2}"
    ))
}

fn deterministic_limit() -> Outcome {
    let sigmas = [1e-1, 1e-2, 1e-3, 1e-4];
    let grid = linspace(0.0, 3.0, 601);
    let base = ProcessParams::new(-0.5, 0.0, 3.0, 0.0, 1.0).map_err(|e| e.to_string())?;
    let cor = lib(solve_any(&base, 3.0))?;
    let mut prev: Option<Vec<(f64, f64)>> = None;
    let mut sup = 0.0;
    for &s in &sigmas {
        let p = ProcessParams { sigma: s, ..base };
        let sol = lib(solve(&p, 3.0))?;
        let gaps: Vec<(f64, f64)> = grid
            .iter()
            .map(|&t| {
                let (b, v) = deterministic_oracle(&base, 3.0, t);
                ensure(
                    (cor.eval_bias(t) - b).abs() < 1e-12
                        && (cor.eval_variance(t) - v).abs() < 1e-12,
                    || format!("solver disagrees with the deterministic closed form at t = {t}"),
                )?;
                Ok((
                    (sol.eval_bias(t) - b).abs(),
                    (sol.eval_variance(t) - v).abs(),
                ))
            })
            .collect::<std::result::Result<_, String>>()?;
        if let Some(before) = &prev {
            for (k, (g, h)) in gaps.iter().zip(before).enumerate() {
                let slack = 1e-12;
                ensure(g.0 <= h.0 + slack && g.1 <= h.1 + slack, || {
                    format!("gap grows at σ = {s}, t = {}", grid[k])
                })?;
            }
        }
        sup = gaps.iter().map(|g| g.0.max(g.1)).fold(0.0, f64::max);
        prev = Some(gaps);
    }
    ensure(sup < 1e-2, || format!("sup gap at σ = 1e-4 is {sup}"))?;
    Ok(format!("sup gap at σ = 1e-4: {sup:.2e}"))
}

fn comparative_statics() -> Outcome {
    let grid = linspace(0.0, 1.5, 301);
    let sweep = |values: &[f64],
                 make: &dyn Fn(f64) -> (ProcessParams, f64),
                 bias: Ordering,
                 var: Option<Ordering>| {
        for w in values.windows(2) {
            let (p_lo, b_lo) = make(w[0]);
            let (p_hi, b_hi) = make(w[1]);
            let lo = lib(solve(&p_lo, b_lo))?;
            let hi = lib(solve(&p_hi, b_hi))?;
            let rep = comparative_statics_report(&lo, &hi, &grid);
            ensure(rep.hypothesis_holds, || {
                format!("hypothesis fails at {w:?}")
            })?;
            ensure(
                rep.bias == bias && var.is_none_or(|v| rep.variance == v),
                || format!("{w:?}: {rep:?}"),
            )?;
        }
        Ok::<(), String>(())
    };
    let up = Some(Ordering::Increasing);
    sweep(
        &[2.0, 2.5, 3.0, 3.5],
        &|beta| (fig2(100.0), beta),
        Ordering::Increasing,
        up,
    )?;
    sweep(
        &[1.5, 2.0, 2.5],
        &|sigma| {
            (
                ProcessParams {
                    sigma,
                    ..fig2(100.0)
                },
                3.0,
            )
        },
        Ordering::Increasing,
        Some(Ordering::Decreasing),
    )?;
    sweep(
        &[4.0, 4.5, 5.0],
        &|price| {
            (
                ProcessParams {
                    r: price - 1.0,
                    ..fig2(100.0)
                },
                3.0,
            )
        },
        Ordering::Decreasing,
        None,
    )?;
    Ok("b̂ ↑ β, σ and ↓ r − 2κ; v̂ ↑ β, ↓ σ".into())
}

fn multidimensional() -> Outcome {
    let p = fig5(100.0);
    let sol = lib(solve_multidim(&p))?;
    ensure(sol.i0 == Some(2), || format!("i₀ = {:?}", sol.i0))?;
    let t = &sol.times;
    ensure(t[0] == 0.0 && t[0] < t[1] && t[1] < t[2], || {
        format!("times {t:?}")
    })?;
    let expected = (4.0 / 4.5 + 4.0 / 3.5 + 4.0 / 2.5f64).sqrt();
    ensure((sol.sigma_hat - expected).abs() < 1e-8, || {
        format!("σ̂ = {}", sol.sigma_hat)
    })?;
    let rate = |a: f64, b: f64| (sol.bias_norm(a) / sol.bias_norm(b)).ln() / (b - a);
    let phase2 = rate(t[1] * 0.1, t[1] * 0.9);
    let phase3 = rate(t[1] + 0.1 * (t[2] - t[1]), t[1] + 0.9 * (t[2] - t[1]));
    ensure(
        (phase2 - 3.5).abs() < 1e-9 && (phase3 - 2.5).abs() < 1e-9,
        || format!("decay rates {phase2}, {phase3}"),
    )?;
    let comps = p.components();
    let mut res = 0.0f64;
    for (a, b) in [(t[0], t[1]), (t[1], t[2])] {
        for k in 1..100 {
            let s = a + (b - a) * k as f64 / 100.0;
            res = res.max(lib(ode_residual(&sol, &comps, s, None))?.abs());
        }
    }
    ensure(res < 1e-6, || format!("residual {res}"))?;
    let shot = lib(shoot(sol.initial_bias, &sol.nu, &p))?;
    let mut sup = 0.0f64;
    for s in linspace(0.0, t[2] + 0.2, 2001) {
        let (b, v) = shot.eval(&p, s);
        sup = sup.max((b - sol.bias_norm(s)).abs());
        for (i, vi) in v.iter().enumerate() {
            sup = sup.max((vi - sol.variance(i, s)).abs());
        }
    }
    ensure(sup < 1e-6, || format!("shoot vs closed form {sup}"))?;
    Ok(format!(
        "t₂ = {:.6}, t₃ = {:.6}, rates {phase2:.9}/{phase3:.9}, residual {res:.1e}, shoot gap {sup:.1e}",
        t[1], t[2]
    ))
}

fn one_dimensional_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let kappa = rng.random_range(-1.0..1.0);
        let sigma = rng.random_range(0.2..3.0);
        let r = (2.0f64 * kappa).max(0.0) + rng.random_range(0.3..5.0);
        let s0 = rng.random_range(-5.0f64..5.0).exp();
        let p = ProcessParams::new(kappa, sigma, r, 0.0, s0).map_err(|e| e.to_string())?;
        let beta = p.stationary_bias() * rng.random_range(1.05..6.0);
        let one = lib(solve(&p, beta))?;
        let mp = MultiParams::new(vec![kappa], vec![sigma], vec![s0], r, vec![beta])
            .map_err(|e| e.to_string())?;
        let multi = lib(solve_multidim(&mp))?;
        let t_full = one.full_disclosure_time.unwrap_or(0.0);
        let mut gap = (multi.times[0] - t_full).abs();
        for t in linspace(0.0, t_full + 0.5, 201) {
            gap = gap
                .max((multi.bias_norm(t) - one.eval_bias(t)).abs())
                .max((multi.variance(0, t) - one.eval_variance(t)).abs());
        }
        ensure(gap < 1e-8, || format!("{p:?}, β = {beta}: gap {gap}"))?;
        worst = worst.max(gap);
    }
    Ok(format!("50 instances, worst gap {worst:.1e}"))
}

fn runner() -> TestRunner {
    let config = Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn run_suite<S: Strategy>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> std::result::Result<(), TestCaseError>,
) -> std::result::Result<(), String> {
    runner()
        .run(&strategy, test)
        .map_err(|e| format!("{name}: {e}"))
}

fn eta_suite() -> std::result::Result<(), String> {
    run_suite(
        "η semigroup",
        (
            -1.0..1.0f64,
            0.0..3.0f64,
            0.0..100.0f64,
            0.0..10.0f64,
            0.0..10.0f64,
        ),
        |(kappa, sigma, v, h1, h2)| {
            let p = ProcessParams::new(kappa, sigma, 5.0, 0.0, 1.0).unwrap();
            let two = eta(eta(v, h1, &p).unwrap(), h2, &p).unwrap();
            let one = eta(v, h1 + h2, &p).unwrap();
            prop_assert!(
                (two - one).abs() <= 1e-12 * one.abs().max(f64::MIN_POSITIVE),
                "{two} vs {one}"
            );
            Ok(())
        },
    )?;
    run_suite(
        "η affine",
        (
            -1.0..1.0f64,
            0.0..3.0f64,
            0.0..100.0f64,
            0.0..100.0f64,
            0.0..1.0f64,
            0.0..10.0f64,
        ),
        |(kappa, sigma, v1, v2, a, h)| {
            let p = ProcessParams::new(kappa, sigma, 5.0, 0.0, 1.0).unwrap();
            let lhs = eta(a * v1 + (1.0 - a) * v2, h, &p).unwrap();
            let rhs = a * eta(v1, h, &p).unwrap() + (1.0 - a) * eta(v2, h, &p).unwrap();
            prop_assert!(
                (lhs - rhs).abs() <= 64.0 * f64::EPSILON * lhs.abs().max(1.0),
                "{lhs} vs {rhs}"
            );
            Ok(())
        },
    )
}

fn plausibility_suite() -> std::result::Result<(), String> {
    run_suite("policy paths plausible", instance(), |(p, beta)| {
        let deterministic = ProcessParams { sigma: 0.0, ..p };
        for (q, sol) in [
            (p, solve(&p, beta).unwrap()),
            (deterministic, solve_any(&deterministic, beta).unwrap()),
        ] {
            let horizon = sol.full_disclosure_time.unwrap_or(0.0) + 2.0;
            let grid = linspace(0.0, horizon, 400);
            let tol = 1e-9 * q.sigma0_sq.max(1.0);
            let verdict =
                is_bayes_plausible(&VariancePath::from_policy(&sol), &q, &grid, tol).unwrap();
            prop_assert!(verdict.plausible, "{:?}", verdict.violations.first());
        }
        Ok(())
    })?;
    run_suite("multidimensional paths plausible", multi_instance(), |mp| {
        let sol = solve_multidim(&mp).unwrap();
        let horizon = sol.times.last().copied().unwrap_or(0.0) + 1.0;
        let grid = linspace(0.0, horizon, 400);
        for (i, c) in mp.components().iter().enumerate() {
            let values = grid.iter().map(|&t| sol.variance(i, t)).collect();
            let path = VariancePath::sampled(grid.clone(), values).unwrap();
            let tol = 1e-9 * c.sigma0_sq.max(1.0);
            let verdict = is_bayes_plausible(&path, c, &grid, tol).unwrap();
            prop_assert!(
                verdict.plausible,
                "component {i}: {:?}",
                verdict.violations.first()
            );
        }
        Ok(())
    })
}

fn monotonicity_suite() -> std::result::Result<(), String> {
    run_suite("reporting function monotone", instance(), |(p, beta)| {
        let sol = solve(&p, beta).unwrap();
        let phi = build_reporting_function(&VariancePath::from_policy(&sol), &p).unwrap();
        let mut grid = linspace(0.0, sol.full_disclosure_time.unwrap_or(0.0) + 1.0, 300);
        grid.extend(phi.breakpoints());
        grid.sort_by(f64::total_cmp);
        let mut prev = (ReportTime::NegInfinity, ReportingCase::NoReport);
        for &t in &grid {
            let (f, case) = (phi.phi(t), phi.case_at(t));
            prop_assert!(prev.0.le(f), "φ decreases at {t}");
            prop_assert!(prev.1 <= case, "case regresses at {t}");
            prop_assert!(f.le(ReportTime::At(t)), "φ(t) > t at {t}");
            prev = (f, case);
        }
        Ok(())
    })
}

fn within_4se(values: &[f64], target: f64) -> bool {
    let (mean, se) = mean_and_se(values);
    (mean - target).abs() <= 4.0 * se.unwrap_or(0.0)
}

fn sampling_suite() -> std::result::Result<(), String> {
    let z = RefCell::new(Vec::new());
    let lag = RefCell::new(Vec::new());
    run_suite(
        "sampling law",
        (
            instance(),
            -2.0..2.0f64,
            prop::collection::vec(0.001..0.5f64, 20),
            any::<u64>(),
        ),
        |((p, _), mu0, steps, seed)| {
            let p = ProcessParams { mu0, ..p };
            let mut grid = vec![0.0];
            for h in &steps {
                grid.push(grid.last().unwrap() + h);
            }
            let path = sample_path(&p, &grid, seed).unwrap();
            let mut z = z.borrow_mut();
            let start = z.len();
            z.push((path.values[0] - mu0) / p.sigma0_sq.sqrt());
            for (k, h) in steps.iter().enumerate() {
                let mean = (p.kappa * h).exp() * path.values[k];
                z.push((path.values[k + 1] - mean) / p.no_info_variance(0.0, *h).sqrt());
            }
            let mut lag = lag.borrow_mut();
            lag.extend(z[start..].windows(2).map(|w| w[0] * w[1]));
            Ok(())
        },
    )?;
    let (z, lag) = (z.into_inner(), lag.into_inner());
    let sq: Vec<f64> = z.iter().map(|x| x * x).collect();
    ensure(within_4se(&z, 0.0), || {
        "standardized draws have nonzero mean".into()
    })?;
    ensure(within_4se(&sq, 1.0), || {
        "standardized draws have variance ≠ 1".into()
    })?;
    ensure(within_4se(&lag, 0.0), || {
        "successive draws are correlated".into()
    })?;

    let p = ProcessParams::new(-0.5, 2.0, 3.0, 0.0, 1.0).map_err(|e| e.to_string())?;
    let at_one: Vec<f64> = (0..100_000u64)
        .map(|seed| sample_path(&p, &[0.0, 1.0], seed).map(|s| s.values[1]))
        .collect::<persuasion_core::Result<_>>()
        .map_err(|e| e.to_string())?;
    let target = lib(eta(1.0, 1.0, &p))?;
    let dev: Vec<f64> = at_one.iter().map(|x| x * x).collect();
    ensure(within_4se(&at_one, 0.0), || "θ₁ mean".into())?;
    ensure(within_4se(&dev, target), || "θ₁ variance".into())
}

fn property_suites() -> Outcome {
    eta_suite()?;
    plausibility_suite()?;
    monotonicity_suite()?;
    sampling_suite()?;
    Ok("6 suites × 1000 cases plus 10⁵ seeded paths".into())
}

struct Criterion {
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            name: "full-disclosure time and t0",
            budget: Duration::from_millis(100),
            run: full_disclosure_time,
        },
        Criterion {
            name: "binding obedience",
            budget: Duration::from_secs(5),
            run: binding_obedience,
        },
        Criterion {
            name: "delayed-reporting round trip",
            budget: Duration::from_secs(1),
            run: reporting_round_trip,
        },
        Criterion {
            name: "two-period oracle",
            budget: Duration::from_secs(30),
            run: two_period_oracle,
        },
        Criterion {
            name: "Monte Carlo payoff match",
            budget: Duration::from_secs(120),
            run: monte_carlo,
        },
        Criterion {
            name: "deterministic-state limit",
            budget: Duration::from_secs(1),
            run: deterministic_limit,
        },
        Criterion {
            name: "comparative statics",
            budget: Duration::from_secs(1),
            run: comparative_statics,
        },
        Criterion {
            name: "multidimensional solver",
            budget: Duration::from_secs(10),
            run: multidimensional,
        },
        Criterion {
            name: "n = 1 reduction",
            budget: Duration::from_secs(10),
            run: one_dimensional_reduction,
        },
        Criterion {
            name: "property suites",
            budget: Duration::from_secs(60),
            run: property_suites,
        },
    ];
    let mut failed = 0;
    for (k, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= c.budget => (true, d),
            Ok(d) => (
                false,
                format!("{d}; took {elapsed:.2?}, budget {:?}", c.budget),
            ),
            Err(e) => (false, e),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} [{:>2}] {} ({:.3} s): {}",
            if ok { "PASS" } else { "FAIL" },
            k + 1,
            c.name,
            elapsed.as_secs_f64(),
            detail
        );
    }
    println!(
        "{} of {} acceptance criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
