use std::f64::consts::PI;

use hyperperiodic::solver::{assemble_dense, invert_i_minus_b, LoopPlan, System};
use hyperperiodic::{solve, Grid, GridFunction, GridPair, GridSpec, ProblemSpec, SolveOptions, Solver, Strategy};

fn grid(nx: usize, nt: usize) -> Grid {
    Grid::new(GridSpec::new(nx, nt).unwrap(), 1.0)
}

fn system(spec: &ProblemSpec, g: Grid) -> System<f64> {
    System::build(&spec.compile(), g)
}

fn pseudo_random(g: Grid, seed: f64) -> GridPair<f64> {
    let f = |x: f64, t: f64| ((x * 12.9898 + t * 78.233 + seed) * 43758.5453).sin();
    GridPair::new(
        GridFunction::from_fn(g, f),
        GridFunction::from_fn(g, |x, t| f(t + 0.3, x - seed)),
    )
}

fn telegraph(a1: &str) -> ProblemSpec {
    ProblemSpec::builder(1.0).a1(a1).build().unwrap()
}

#[test]
fn b_transports_left_trace_at_unit_speed() {
    let g = grid(33, 32);
    let sys = system(&ProblemSpec::builder(1.0).build().unwrap(), g);
    let mut u = GridPair::zeros(g);
    u.second = GridFunction::from_fn(g, |_, t| (2.0 * PI * t).sin());
    let bu = sys.apply_b(&u);
    for i in 0..g.nx() {
        for n in 0..g.nt() {
            let exact = (2.0 * PI * (g.t(n) + g.x(i))).sin();
            assert!((bu.first.get(i, n) - exact).abs() < 1e-4);
            assert_eq!(bu.second.get(i, n), 0.0);
        }
    }
}

#[test]
fn b_weight_matches_closed_form() {
    // a1 = 1, a2 = 0 gives b11 = 0.5 and c_1(0,x,t) = exp(x/2).
    let g = grid(17, 16);
    let sys = system(&telegraph("1"), g);
    let mut u = GridPair::zeros(g);
    u.second = GridFunction::from_fn(g, |_, _| 1.0);
    let bu = sys.apply_b(&u);
    for i in 0..g.nx() {
        let exact = (0.5 * g.x(i)).exp();
        assert!((bu.first.get(i, 5) - exact).abs() < 1e-12 * exact);
    }
}

#[test]
fn d_integrates_coupling_coefficient() {
    // a1 = 0.5, a2 = -0.5: b11 = 0, b12 = 0.5, so [Du]_1 = 0.5 x for u = 1.
    let g = grid(17, 16);
    let spec = ProblemSpec::builder(1.0).a1("0.5").a2("-0.5").build().unwrap();
    let sys = system(&spec, g);
    let one = GridPair::new(
        GridFunction::from_fn(g, |_, _| 1.0),
        GridFunction::from_fn(g, |_, _| 1.0),
    );
    let du = sys.apply_d(&one);
    for i in 0..g.nx() {
        for n in [0, 7, 15] {
            assert!((du.first.get(i, n) - 0.5 * g.x(i)).abs() < 1e-13);
        }
    }
}

#[test]
fn operators_vanish_on_zero_data() {
    let g = grid(9, 8);
    let spec = ProblemSpec::builder(1.0)
        .a("1+0.3*x")
        .a1("-1")
        .a3("0.2")
        .build()
        .unwrap();
    let sys = system(&spec, g);
    let zero = GridPair::zeros(g);
    assert_eq!(sys.apply_b(&zero).sup_norm(), 0.0);
    assert_eq!(sys.apply_a(&zero).sup_norm(), 0.0);
    assert_eq!(sys.apply_d(&zero).sup_norm(), 0.0);
    assert_eq!(sys.rf().sup_norm(), 0.0);
}

#[test]
fn dense_matrix_reproduces_operator() {
    let g = grid(9, 8);
    let spec = ProblemSpec::builder(1.0)
        .a("1+0.2*sin(2*pi*(x+t))")
        .a1("-1")
        .a2("x")
        .a3("0.3")
        .r0("1+0.1*cos(2*pi*t)")
        .build()
        .unwrap();
    let sys = system(&spec, g);
    let m = assemble_dense(&sys).unwrap();
    for seed in [0.1, 0.7, 2.3] {
        let u = pseudo_random(g, seed);
        let image = &m * nalgebra::DVector::from_vec(u.flatten());
        let direct = sys.apply_operator(&u).flatten();
        let scale = direct.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        let err = image.iter().zip(&direct).fold(0.0f64, |s, (a, b)| s.max((a - b).abs()));
        assert!(err <= 1e-12 * scale, "{err}");
    }
}

#[test]
fn dense_matrix_without_couplings_is_i_minus_b_minus_a() {
    let g = grid(9, 8);
    let sys = system(&ProblemSpec::builder(1.0).build().unwrap(), g);
    let m = assemble_dense(&sys).unwrap();
    let n = sys.unknowns();
    for col in [0, 7, 40, 71, 72, 100, n - 1] {
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        let u = GridPair::unflatten(g, &e).unwrap();
        let expected = u.sub(&sys.apply_b(&u)).sub(&sys.apply_a(&u)).flatten();
        for row in 0..n {
            assert!((m[(row, col)] - expected[row]).abs() < 1e-14);
        }
    }
}

#[test]
fn invert_i_minus_b_solves_trace_system() {
    let g = grid(17, 16);
    for a1 in ["-1", "1"] {
        let spec = ProblemSpec::builder(1.0).a("1+0.3*x").a1(a1).build().unwrap();
        let solver = Solver::<f64>::new(&spec, GridSpec::new(17, 16).unwrap(), SolveOptions::default()).unwrap();
        let sys = solver.system();
        let plan = LoopPlan::choose(solver.resonance()).unwrap();

        let (zero, _) = invert_i_minus_b(sys, &GridPair::zeros(g), plan, 1e-14, 1000).unwrap();
        assert_eq!(zero.sup_norm(), 0.0);

        let rhs = pseudo_random(g, 0.4);
        let (u, report) = invert_i_minus_b(sys, &rhs, plan, 1e-14, 10_000).unwrap();
        let back = u.sub(&sys.apply_b(&u));
        assert!(
            back.max_abs_diff(&rhs) < 1e-11,
            "a1 = {a1}: {}",
            back.max_abs_diff(&rhs)
        );
        assert!(report.trace_defect < 1e-11);
    }
}

#[test]
fn zero_forcing_gives_zero_solution() {
    let r = solve::<f64>(
        &telegraph("-1"),
        GridSpec::new(17, 16).unwrap(),
        SolveOptions::default(),
    )
    .unwrap();
    assert!(r.converged);
    assert!(r.w.sup_norm() <= 1e-9);
    assert!(r.u.sup_norm() <= 1e-9);
}

#[test]
fn resonant_problem_is_refused_by_iterative_strategies() {
    let spec = telegraph("0");
    for strategy in [Strategy::Auto, Strategy::Picard] {
        let opts = SolveOptions {
            strategy,
            ..Default::default()
        };
        let err = solve::<f64>(&spec, GridSpec::new(9, 8).unwrap(), opts).unwrap_err();
        assert!(matches!(err, hyperperiodic::Error::Resonant(_)), "{err}");
    }
}

#[test]
fn picard_and_dense_agree() {
    let gs = GridSpec::new(17, 16).unwrap();
    let spec = ProblemSpec::builder(1.0)
        .a("1+0.2*x")
        .a1("-1+0.3*sin(2*pi*t)")
        .a3("0.5")
        .f("cos(2*pi*t)*(1+x^2)")
        .build()
        .unwrap();
    let solver = Solver::<f64>::new(&spec, gs, SolveOptions::default()).unwrap();
    let picard = solver.solve().unwrap();
    let dense_solver = Solver::<f64>::new(
        &spec,
        gs,
        SolveOptions {
            strategy: Strategy::Dense,
            ..Default::default()
        },
    )
    .unwrap();
    let dense = dense_solver.solve().unwrap();
    assert!(picard.converged && dense.converged);
    assert!(picard.u.max_abs_diff(&dense.u) < 1e-8);
    assert!(picard.w.max_abs_diff(&dense.w) < 1e-8);
}

#[test]
fn exact_discrete_solution_as_initial_guess_is_a_fixed_point() {
    let gs = GridSpec::new(17, 16).unwrap();
    let spec = ProblemSpec::builder(1.0).a1("-1").f("sin(2*pi*t)").build().unwrap();
    let solver = Solver::<f64>::new(&spec, gs, SolveOptions::default()).unwrap();
    let first = solver.solve().unwrap();
    let again = solver.solve_from(Some(&first.u)).unwrap();
    assert!(again.converged);
    assert!(again.iterations <= 2);
    assert!(again.u.max_abs_diff(&first.u) <= 1e-9);
}

#[test]
fn f32_solve_tracks_f64() {
    let gs = GridSpec::new(17, 16).unwrap();
    let spec = ProblemSpec::builder(1.0).a1("-1").f("sin(2*pi*t)").build().unwrap();
    let opts = SolveOptions {
        tol_abs: 1e-5,
        ..Default::default()
    };
    let wide = solve::<f64>(&spec, gs, opts).unwrap();
    let narrow = solve::<f32>(&spec, gs, opts).unwrap();
    let diff = wide
        .w
        .values()
        .iter()
        .zip(narrow.w.values())
        .fold(0.0f64, |m, (a, b)| m.max((a - *b as f64).abs()));
    assert!(diff < 1e-3, "{diff}");
}

#[test]
fn csv_has_header_and_one_row_per_node() {
    let r = solve::<f64>(&telegraph("-1"), GridSpec::new(9, 8).unwrap(), SolveOptions::default()).unwrap();
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,t,w,u1,u2"));
    assert_eq!(lines.count(), 72);
}
