//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wagetheft::characterization::{optimal_high_wage, optimal_low_wage, theft_eliminated};
use wagetheft::experiments::{self, random_cell, table1, Param, SweepSpec};
use wagetheft::oracle::{self, GridSpec};
use wagetheft::repeated::{self, ForecastRule, CONVERGENCE_TOL};
use wagetheft::solver::{find_break_points, positive_effort_condition};
use wagetheft::{CostSpec, Instance, MarketParams, PenaltySpec};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn unit_cost(beta_target: f64) -> Instance {
    // p = 2, gamma = 1 and sigma = 1 / (2 beta) give ideal theft beta.
    Instance::new(
        MarketParams::new(10.0, 5.0, 3.0, 1.0, 1.0).unwrap(),
        CostSpec::new(1.0, 1.0).unwrap(),
        PenaltySpec::new(0.5 / beta_target, 2.0).unwrap(),
    )
}

fn table_instances(n: usize, seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| random_cell(&mut rng).instance().unwrap())
        .collect()
}

fn illustrative() -> Outcome {
    let i = unit_cost(0.5);
    let (m, c) = (&i.market, &i.cost);
    let wl0 = optimal_low_wage(m, c, 0.0).unwrap();
    let wh0 = optimal_high_wage(m, c, 0.0).unwrap();
    let root = find_break_points(&i).unwrap().low_wage_zero.unwrap();
    let dev = (wl0 - 1.0)
        .abs()
        .max((wh0 - 2.0).abs())
        .max((root - 0.5).abs());
    outcome(
        dev <= 1e-9,
        format!("wL*(0)={wl0} wH*(0)={wh0} root={root} max_dev={dev:e}"),
    )
}

fn kinks() -> Outcome {
    let low = find_break_points(&unit_cost(0.5))
        .unwrap()
        .low_theft_switch
        .unwrap();
    let high = find_break_points(&unit_cost(3.0))
        .unwrap()
        .high_theft_switch
        .unwrap();
    let d1 = (low - (2f64.sqrt() - 1.0)).abs();
    let d2 = (high - 1.0 / 3.0).abs();
    outcome(
        d1 <= 1e-6 && d2 <= 1e-6,
        format!("bL switch {low:.10} (dev {d1:e}), bH switch {high:.10} (dev {d2:e})"),
    )
}

fn theft_rule() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut failed = 0;
    let mut count = 0;
    for i in table_instances(50, 11) {
        for a in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let r = oracle::verify_theft_rule(&i, a).unwrap();
            for s in [r.low, r.high] {
                count += 1;
                worst = worst.max(s.deviation() / s.step.max(f64::MIN_POSITIVE));
                if !s.passed() {
                    failed += 1;
                }
            }
        }
    }
    outcome(
        failed == 0,
        format!("{count} scans, {failed} failed, worst deviation {worst:.3} steps"),
    )
}

fn brute_force_agreement() -> Outcome {
    let grid = GridSpec::new(1.0, 400);
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for (n, i) in table_instances(20, 7).iter().enumerate() {
        let report = oracle::verify_agreement(i, &grid).unwrap();
        let a = oracle::compare_with_solver(i, &grid).unwrap();
        worst = worst.max(a.gap().abs() / a.tolerance());
        if !report.all_passed() {
            failures.push(format!(
                "#{n}: {}",
                report
                    .failures()
                    .map(|c| c.name.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "20 instances, worst |gap| = {worst:.4} x (2 steps); {}",
            if failures.is_empty() {
                "no failures".into()
            } else {
                failures.join("; ")
            }
        ),
    )
}

fn brute_force_refinement() -> Outcome {
    let grid = GridSpec::new(1.0, 400);
    let gaps = oracle::refinement_gaps(&unit_cost(0.5), &grid, 3).unwrap();
    let check = oracle::convergence_check(&gaps);
    let shown: Vec<String> = gaps.iter().map(|g| format!("{g:.3e}")).collect();
    let halved = table_instances(20, 7)
        .iter()
        .filter(|i| {
            oracle::convergence_check(&oracle::refinement_gaps(i, &grid, 2).unwrap()).passed
        })
        .count();
    outcome(
        check.passed,
        format!(
            "illustrative gaps on 400/799/1597 grids: {}; worst ratio {}; {halved} of 20 random instances halve on 400->799",
            shown.join(" -> "),
            check.max_deviation
        ),
    )
}

fn elimination_family() -> Outcome {
    let mut never_eliminated = true;
    let mut monotone = true;
    for &p in &table1::P {
        for &gamma in &table1::GAMMA {
            let betas: Vec<f64> = table1::SIGMA
                .iter()
                .map(|&s| {
                    let pen = PenaltySpec::new(s, p).unwrap();
                    never_eliminated &= !theft_eliminated(&pen, gamma);
                    pen.ideal_theft(gamma).unwrap().value()
                })
                .collect();
            monotone &= betas.windows(2).all(|w| w[1] < w[0]);
        }
    }
    let rows = experiments::run_sweep(&SweepSpec::preset("sigma-b").unwrap()).unwrap();
    let first = rows.first().unwrap().b_high.unwrap();
    let last = rows.last().unwrap().b_high.unwrap();
    let ratio = last / first;
    outcome(
        never_eliminated && monotone && ratio < 1e-2,
        format!("never eliminated: {never_eliminated}, beta decreasing in sigma: {monotone}, bH(5)/bH(0.25) = {ratio:e}"),
    )
}

fn positive_effort(rows: &[experiments::SweepRow]) -> Outcome {
    let mut holds = 0;
    let mut bad = 0;
    let mut smallest = f64::INFINITY;
    for r in rows {
        let i = Instance::new(
            MarketParams::new(r.price, r.y_high, r.y_low, r.u, r.gamma).unwrap(),
            CostSpec::new(r.k, r.q).unwrap(),
            PenaltySpec::new(r.sigma, r.p).unwrap(),
        );
        if !positive_effort_condition(&i.market, &i.cost).unwrap() {
            continue;
        }
        holds += 1;
        match r.a_star {
            Some(a) if a > 1e-6 => smallest = smallest.min(a),
            _ => bad += 1,
        }
    }
    outcome(
        bad == 0 && holds == rows.len(),
        format!(
            "{} cells, condition holds on {holds}, {bad} with a* <= 1e-6, smallest a* = {smallest}",
            rows.len()
        ),
    )
}

fn beta_independence(rows: &[experiments::SweepRow]) -> Outcome {
    let mut by_enforcement: HashMap<[u64; 3], f64> = HashMap::new();
    let mut mismatches = 0;
    let mut formula = 0;
    for r in rows {
        let beta = r.beta.unwrap();
        let expected = PenaltySpec::new(r.sigma, r.p)
            .unwrap()
            .ideal_theft(r.gamma)
            .unwrap()
            .value();
        if beta != expected {
            formula += 1;
        }
        let key = [r.sigma.to_bits(), r.p.to_bits(), r.gamma.to_bits()];
        if *by_enforcement.entry(key).or_insert(beta) != beta {
            mismatches += 1;
        }
    }
    let u_values = rows
        .iter()
        .map(|r| r.get(Param::ReservationUtility).to_bits())
        .collect::<std::collections::HashSet<_>>()
        .len();
    outcome(
        mismatches == 0 && formula == 0,
        format!("{} enforcement settings across {u_values} u values and all (k,q): {mismatches} differing beta, {formula} off the closed form", by_enforcement.len()),
    )
}

fn fig3_context() -> Instance {
    Instance::new(
        MarketParams::new(10.0, 50.0, 30.0, 200.0, 0.2).unwrap(),
        CostSpec::new(0.1, 3.0).unwrap(),
        PenaltySpec::new(1.0, 1.1).unwrap(),
    )
}

fn dominance(audit: &repeated::Audit) -> Outcome {
    let d = &audit.dominance;
    outcome(
        d.all_passed(),
        format!(
            "{} strategies ({} accepted): {}",
            audit.samples,
            audit.accepted,
            d.checks
                .iter()
                .map(|c| format!("{} {}", c.name, if c.passed { "ok" } else { "FAILED" }))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn optimal_fixed(audit: &repeated::Audit) -> Outcome {
    let r = audit.to_report();
    let o = &audit.optimum;
    let passed = r.checks[..3].iter().all(|c| c.passed);
    outcome(
        passed,
        format!(
            "b=({}, {}), a*={}, profit {}, best of {} samples {}, beaten {}",
            o.strategy.b_high,
            o.strategy.b_low,
            o.effort,
            o.profit,
            audit.samples,
            audit.best_sampled_profit,
            audit.beaten
        ),
    )
}

fn forecast_convergence() -> Outcome {
    let mut rules = vec![
        ForecastRule::last_observation(),
        ForecastRule::running_mean(),
    ];
    for w in [1, 2, 5, 10, 20] {
        rules.push(ForecastRule::moving_average(w).unwrap());
    }
    for alpha in [0.1, 0.25, 0.5, 0.9, 1.0] {
        rules.push(ForecastRule::exponential_smoothing(alpha).unwrap());
    }
    let mut slowest = 0;
    let mut failed = Vec::new();
    for rule in &rules {
        for c in [0.0, 0.5, 3.0, 10.0] {
            let mut f = rule.start();
            let hit = (1..=200).find(|_| {
                f.observe(c);
                (f.forecast() - c).abs() < CONVERGENCE_TOL
            });
            match hit {
                Some(t) => slowest = slowest.max(t),
                None => failed.push(format!("{rule} c={c}")),
            }
        }
    }
    outcome(
        failed.is_empty(),
        format!(
            "{} rules x 4 theft levels, slowest reached 1e-8 after {slowest} observations{}",
            rules.len(),
            if failed.is_empty() {
                String::new()
            } else {
                format!("; failed: {}", failed.join(", "))
            }
        ),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(&str, Outcome, Duration, Duration)> = Vec::new();
    let mut run = |name: &'static str, limit: Duration, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        results.push((name, o, start.elapsed(), limit));
        let (name, o, took, limit) = results.last().unwrap();
        let ok = o.passed && took <= limit;
        println!(
            "{} {name} [{:.2?}] {}",
            if ok { "PASS" } else { "FAIL" },
            took,
            o.detail
        );
        if o.passed && took > limit {
            println!("     runtime {took:.2?} exceeds {limit:?}");
        }
    };

    let secs = Duration::from_secs;
    run(
        "illustrative example: wL*(0)=1, wH*(0)=2, wL* root at 0.5",
        secs(1),
        &mut illustrative,
    );
    run(
        "kink structure: bL switch at sqrt(2)-1 (beta=0.5), bH switch at 1/3 (beta=3)",
        secs(1),
        &mut kinks,
    );
    run(
        "pointwise theft rule on 50 instances x 5 efforts",
        secs(30),
        &mut theft_rule,
    );

    let started = Instant::now();
    run(
        "brute force within two wage steps on 20 instances (400x400)",
        secs(300),
        &mut brute_force_agreement,
    );
    let remaining = secs(300).saturating_sub(started.elapsed());
    run(
        "brute force gap halves per grid refinement (fixed instance, 3 levels)",
        remaining,
        &mut brute_force_refinement,
    );

    run(
        "theft never eliminated for sigma b^p; beta and bH vanish as sigma grows",
        secs(30),
        &mut elimination_family,
    );

    let mut rows = Vec::new();
    run(
        "positive effort on every numerical-study cell",
        secs(120),
        &mut || {
            rows = experiments::run_sweep(&SweepSpec::table1()).unwrap();
            positive_effort(&rows)
        },
    );
    run("beta identical across u and (k,q)", secs(30), &mut || {
        beta_independence(&rows)
    });

    let started = Instant::now();
    let mut audit = None;
    run(
        "honest twin dominance on 500 fixed strategies",
        secs(60),
        &mut || {
            let a = repeated::audit_fixed_strategies(&fig3_context(), 500, 2024).unwrap();
            let o = dominance(&a);
            audit = Some(a);
            o
        },
    );
    let remaining = secs(60).saturating_sub(started.elapsed());
    let audit = audit.unwrap();
    run(
        "optimal fixed strategy: no theft, interior effort, unbeaten",
        remaining,
        &mut || optimal_fixed(&audit),
    );
    run(
        "forecast rules converge below 1e-8 within 200 periods",
        secs(1),
        &mut forecast_convergence,
    );

    let failed = results
        .iter()
        .filter(|(_, o, took, limit)| !o.passed || took > limit)
        .count();
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
