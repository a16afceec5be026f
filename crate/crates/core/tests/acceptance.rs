//! End-to-end acceptance checks. Runs without the libtest harness so that
//! every criterion prints one PASS/FAIL line; exits non-zero if any fails.

use std::f64::consts::{E, PI};
use std::process::ExitCode;
use std::time::Instant;

use hyperperiodic::characteristics::{inverse_trace, tau_partials, trace};
use hyperperiodic::diagnostics::{convergence_study, kernel_dimension, manufacture, sweep_epsilon, EpsFamily};
use hyperperiodic::expr::parse;
use hyperperiodic::kernels::compute_c;
use hyperperiodic::resonance::analyze;
use hyperperiodic::solver::{assemble_dense, invert_i_minus_b, Direction, LoopPlan, System};
use hyperperiodic::{solve, Grid, GridFunction, GridPair, GridSpec, ProblemSpec, SolveOptions, Solver, Strategy};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn spec(a: &str, a1: &str) -> ProblemSpec {
    ProblemSpec::builder(1.0).a(a).a1(a1).build().unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn manufactured_m1() -> Outcome {
    let start = Instant::now();
    let base = spec("1", "-1");
    let w = parse("exp(x)*(2+sin(2*pi*t))").unwrap();
    let mp = manufacture(&w, &base, GridSpec::new(64, 64).unwrap()).unwrap();
    let grids: Vec<GridSpec> = [64, 128, 256].iter().map(|&n| GridSpec::new(n, n).unwrap()).collect();
    let report = convergence_study::<f64>(&mp, &grids, SolveOptions::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let rel128 = report.entries[1].rel_err;
    let orders_ok = report.orders.iter().all(|o| (1.7..=2.3).contains(o));
    let converged = report.entries.iter().all(|e| e.converged);
    outcome(
        rel128 <= 1e-3 && orders_ok && converged && secs <= 60.0,
        format!(
            "rel_err(128^2)={rel128:.3e} orders={:?} converged={converged} runtime={secs:.1}s",
            report.orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>()
        ),
    )
}

fn characteristics_closed_forms() -> Outcome {
    let mut worst_const = 0.0f64;
    for (a, speed) in [("1", 1.0), ("2.5", 2.5), ("0.4", 0.4)] {
        let co = spec(a, "0").compile();
        for &(j, x, t, xi) in &[
            (1, 0.3, 0.1, 0.9),
            (2, 0.7, 0.55, 0.0),
            (1, 1.0, 0.2, 0.0),
            (2, 0.0, 0.9, 1.0),
        ] {
            let sign = if j == 1 { -1.0 } else { 1.0 };
            let exact = t + sign * (xi - x) / speed;
            let got = trace::<f64>(&co, j, x, t, 65).tau_at(xi);
            worst_const = worst_const.max((got - exact).abs());
        }
    }
    let co = spec("1+x", "0").compile();
    let ln2 = trace::<f64>(&co, 1, 1.0, 0.0, 256).tau_at(0.0);
    let ln2_err = (ln2 - 2f64.ln()).abs();

    let mut round_trip = 0.0f64;
    for a in ["1+x", "1+0.3*sin(2*pi*(x+t))", "2+cos(2*pi*t)*x"] {
        let co = spec(a, "0").compile();
        for &(j, x, t) in &[(1, 0.4, 0.2), (2, 0.65, 0.8), (1, 0.0, 0.5), (2, 1.0, 0.1)] {
            let curve = trace::<f64>(&co, j, x, t, 129);
            for k in 0..=20 {
                let xi = k as f64 / 20.0;
                let back = inverse_trace(&co, j, curve.tau_at(xi), x, t, 129).unwrap();
                round_trip = round_trip.max((back - xi).abs());
            }
        }
    }
    outcome(
        worst_const <= 1e-12 && ln2_err <= 1e-8 && round_trip <= 1e-9,
        format!("constant-a err={worst_const:.2e} |tau_1(0,1,0)-ln2|={ln2_err:.2e} round-trip={round_trip:.2e}"),
    )
}

fn derivative_formulas() -> Outcome {
    let problems = [
        "1.5",
        "1+x",
        "1+0.3*sin(2*pi*t)",
        "1+0.2*sin(2*pi*(x+t))",
        "2+0.5*x*cos(2*pi*t)",
    ];
    let nx = 257;
    let h = 1e-4;
    let mut worst = 0.0f64;
    for a in problems {
        let co = spec(a, "0").compile();
        for &(j, xi, x, t) in &[
            (1, 0.1, 0.7, 0.3),
            (2, 0.9, 0.35, 0.6),
            (1, 0.55, 0.95, 0.05),
            (2, 0.25, 0.05, 0.45),
        ] {
            let tau = |x: f64, t: f64| trace::<f64>(&co, j, x, t, nx).tau_at(xi);
            let (dx, dt) = tau_partials::<f64>(&co, j, xi, x, t, nx);
            let fd_x = (tau(x + h, t) - tau(x - h, t)) / (2.0 * h);
            let fd_t = (tau(x, t + h) - tau(x, t - h)) / (2.0 * h);
            worst = worst.max(rel(dx, fd_x)).max(rel(dt, fd_t));

            // Inverse trace at a time the curve reaches.
            let target = trace::<f64>(&co, j, x, t, nx).tau_at(xi);
            let inv = |x: f64, t: f64| inverse_trace(&co, j, target, x, t, nx).unwrap();
            let (ix, it) = trace::<f64>(&co, j, x, t, nx).inverse_partials(&co, target).unwrap();
            let fd_ix = (inv(x + h, t) - inv(x - h, t)) / (2.0 * h);
            let fd_it = (inv(x, t + h) - inv(x, t - h)) / (2.0 * h);
            worst = worst.max(rel(ix, fd_ix)).max(rel(it, fd_it));
        }
    }
    outcome(
        worst <= 1e-4,
        format!("max relative error over 5 problems = {worst:.2e}"),
    )
}

fn kernel_weights() -> Outcome {
    let nx = 129;
    let node = |m: usize| m as f64 / (nx - 1) as f64;
    let mut cocycle = 0.0f64;
    for (a, a1, a2) in [("1+0.3*sin(2*pi*(x+t))", "0.5+x", "cos(2*pi*t)"), ("1+x", "-1", "x*t")] {
        let co = ProblemSpec::builder(1.0).a(a).a1(a1).a2(a2).build().unwrap().compile();
        for &(j, l, xi, eta, x, t) in &[
            (1, 0, 16, 64, 112, 0.3),
            (2, 1, 120, 40, 8, 0.7),
            (1, 2, 0, 80, 128, 0.1),
        ] {
            let (xi, eta, x) = (node(xi), node(eta), node(x));
            let direct = compute_c::<f64>(&co, j, l, xi, x, t, nx);
            let mid = trace::<f64>(&co, j, x, t, nx).tau_at(eta);
            let split = compute_c::<f64>(&co, j, l, xi, eta, mid, nx) * compute_c::<f64>(&co, j, l, eta, x, t, nx);
            cocycle = cocycle.max(rel(split, direct));
        }
    }
    let mut constant = 0.0f64;
    for (a, a1, a2) in [("1", "1", "0"), ("2", "-1", "0.5"), ("0.5", "0.3", "-0.2")] {
        let s = ProblemSpec::builder(1.0).a(a).a1(a1).a2(a2).build().unwrap();
        let co = s.compile();
        let p = co.point(0.3, 0.2);
        let b = p.b();
        for j in 1..=2usize {
            let (sign, bjj) = if j == 1 { (-1.0, b[0]) } else { (1.0, b[3]) };
            for &(xi, x) in &[(0.0, 1.0), (0.8, 0.1), (0.45, 0.5)] {
                let exact = (sign * bjj / p.a * (xi - x)).exp();
                constant = constant.max(rel(compute_c::<f64>(&co, j, 0, xi, x, 0.4, 33), exact));
            }
        }
    }
    outcome(
        cocycle <= 1e-8 && constant <= 1e-10,
        format!("cocycle rel err={cocycle:.2e} constant-coefficient rel err={constant:.2e}"),
    )
}

fn resonance_analysis() -> Outcome {
    let g = GridSpec::new(65, 64).unwrap();
    let with_k = |a1: &str| ProblemSpec::builder(1.0).a1(a1).k(3).build().unwrap();
    let damped = analyze(&with_k("-1"), g);
    let amplified = analyze(&with_k("1"), g);
    let undamped = analyze(&with_k("0"), g);
    let q_err = |r: &hyperperiodic::resonance::ResonanceReport, target: f64| {
        r.factors
            .q
            .iter()
            .chain(&r.factors.q_min)
            .fold(0.0f64, |m, &q| m.max((q - target).abs()))
    };
    let (e1, e2) = (q_err(&damped, 1.0 / E), q_err(&amplified, E));
    let ok = damped.factors.q.len() == 4
        && e1 <= 1e-6
        && damped.small1
        && e2 <= 1e-6
        && amplified.small11
        && undamped.holding().is_empty();
    outcome(
        ok,
        format!(
            "a1=-1: |q_l-1/e|={e1:.1e} small1={}; a1=+1: |q_l-e|={e2:.1e} small11={}; a1=0 holding={:?}",
            damped.small1,
            amplified.small11,
            undamped.holding()
        ),
    )
}

/// Median of the steady part of the update ratios.
fn steady_ratio(ratios: &[f64]) -> f64 {
    let end = ratios.len().min(12);
    let mut r = ratios[1.min(end.saturating_sub(1))..end].to_vec();
    r.sort_by(f64::total_cmp);
    r[r.len() / 2]
}

fn trace_inversion_ratios() -> Outcome {
    let gs = GridSpec::new(33, 32).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    for (a1, expect_dir) in [("-1", Direction::Forward), ("1", Direction::Backward)] {
        let s = spec("1", a1);
        let solver = Solver::<f64>::new(&s, gs, SolveOptions::default()).unwrap();
        let q0 = solver.resonance().q0();
        let plan = LoopPlan::choose(solver.resonance()).unwrap();
        let g = Grid::new(gs, 1.0);
        let rhs = GridPair::new(
            GridFunction::from_fn(g, |x, t| 1.0 + x * (2.0 * PI * t).cos()),
            GridFunction::from_fn(g, |_, t| (2.0 * PI * t).sin()),
        );
        let (_, report) = invert_i_minus_b(solver.system(), &rhs, plan, 1e-13, 10_000).unwrap();
        let ratio = steady_ratio(&report.ratios);
        let expected = if plan.direction == Direction::Forward {
            q0
        } else {
            1.0 / q0
        };
        let good = plan.direction == expect_dir && rel(ratio, expected) <= 0.1;
        ok &= good;
        parts.push(format!(
            "a1={a1} {:?} ratio={ratio:.4} expected={expected:.4}",
            plan.direction
        ));
    }
    outcome(ok, parts.join("; "))
}

fn dense_agreement_and_kernel() -> Outcome {
    let gs = GridSpec::new(33, 32).unwrap();
    let s = ProblemSpec::builder(1.0)
        .a1("-1")
        .f("exp(x)*sin(2*pi*t)+cos(2*pi*t)")
        .build()
        .unwrap();
    let picard = solve::<f64>(&s, gs, SolveOptions::default()).unwrap();
    let dense = solve::<f64>(
        &s,
        gs,
        SolveOptions {
            strategy: Strategy::Dense,
            ..Default::default()
        },
    )
    .unwrap();
    let diff = picard.u.max_abs_diff(&dense.u).max(picard.w.max_abs_diff(&dense.w));

    let grid = Grid::new(gs, 1.0);
    let matrix = |sp: &ProblemSpec| assemble_dense(&System::<f64>::build(&sp.compile(), grid)).unwrap();
    let good = kernel_dimension(&matrix(&spec("1", "-1")), 1e-8).unwrap();
    let resonant = kernel_dimension(&matrix(&spec("1", "0")), 1e-8).unwrap();
    let drop = good.ratio / resonant.ratio;
    outcome(
        diff <= 1e-7 && good.dimension == 0 && good.ratio > 1e-3 && drop >= 1e3,
        format!(
            "|picard-dense|={diff:.2e}; non-resonant dim={} sigma ratio={:.3e}; resonant sigma ratio={:.3e} (drop {drop:.1e})",
            good.dimension, good.ratio, resonant.ratio
        ),
    )
}

fn linearity() -> Outcome {
    let gs = GridSpec::new(33, 32).unwrap();
    let opts = SolveOptions::default();
    let tol = opts.tol_abs;
    let with_f = |f: &str| ProblemSpec::builder(1.0).a("1+0.2*x").a1("-1").f(f).build().unwrap();
    let zero = solve::<f64>(&with_f("0"), gs, opts).unwrap();
    let (f1, f2) = ("exp(x)*sin(2*pi*t)", "x^2*cos(4*pi*t)+1");
    let w1 = solve::<f64>(&with_f(f1), gs, opts).unwrap().w;
    let w2 = solve::<f64>(&with_f(f2), gs, opts).unwrap().w;
    let w12 = solve::<f64>(&with_f(&format!("{f1}+{f2}")), gs, opts).unwrap().w;
    let sup = w12.max_abs_diff(&w1.zip_with(&w2, |a, b| a + b));
    let zero_norm = zero.w.sup_norm();
    outcome(
        zero_norm <= 10.0 * tol && sup <= 10.0 * tol,
        format!(
            "|w(f=0)|={zero_norm:.2e} superposition defect={sup:.2e} (bound {:.1e})",
            10.0 * tol
        ),
    )
}

fn eps_sweep() -> Outcome {
    let gs = GridSpec::new(33, 32).unwrap();
    let opts = SolveOptions::default();
    let eps = vec![0.0, 0.01, 0.02, 0.03, 0.04];
    let flat = ProblemSpec::builder(1.0)
        .a1("-1")
        .f("exp(x)*sin(2*pi*t)")
        .build()
        .unwrap();
    let flat = sweep_epsilon::<f64>(&EpsFamily::new(flat, eps.clone()).unwrap(), gs, opts).unwrap();
    let perturbed = ProblemSpec::builder(1.0)
        .a1("-1+eps")
        .f("exp(x)*sin(2*pi*t)")
        .build()
        .unwrap();
    let perturbed = sweep_epsilon::<f64>(&EpsFamily::new(perturbed, eps).unwrap(), gs, opts).unwrap();
    let rich = perturbed.richardson.expect("five eps values");
    outcome(
        flat.max_pairwise_diff <= 10.0 * opts.tol_abs && rich.consistent,
        format!(
            "eps-independent pairwise diff={:.2e}; a1=-1+eps Richardson rel diff={:.2e} (C0 estimates {:.5e}, {:.5e})",
            flat.max_pairwise_diff, rich.rel_diff_c0, rich.c0[0], rich.c0[1]
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("manufactured solution and convergence order", manufactured_m1),
        (
            "characteristics closed forms and round trip",
            characteristics_closed_forms,
        ),
        ("derivative formulas against finite differences", derivative_formulas),
        ("kernel cocycle and constant-coefficient weights", kernel_weights),
        ("resonance factors and verdicts", resonance_analysis),
        ("trace-loop update ratios", trace_inversion_ratios),
        ("dense vs Picard and kernel dimension", dense_agreement_and_kernel),
        ("zero data and superposition", linearity),
        ("eps sweep", eps_sweep),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.passed);
        println!(
            "[{}] criterion {}: {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            k + 1,
            o.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
