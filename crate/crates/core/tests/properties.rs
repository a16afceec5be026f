use proptest::prelude::*;

use hyperperiodic::characteristics::trace;
use hyperperiodic::diagnostics::{kernel_dimension, manufacture, residual_pde_expr, sweep_epsilon, EpsFamily};
use hyperperiodic::expr::{parse, BinOp, Expr, Func, Var};
use hyperperiodic::kernels::{compute_c, compute_d};
use hyperperiodic::resonance::analyze;
use hyperperiodic::solver::{assemble_dense, System};
use hyperperiodic::{solve, Grid, GridFunction, GridPair, GridSpec, ProblemSpec, SolveOptions};

fn expr_tree() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0u32..40).prop_map(|k| Expr::constant(k as f64 / 4.0)),
        Just(Expr::var(Var::X)),
        Just(Expr::var(Var::T)),
        Just(Expr::var(Var::Eps)),
        Just(Expr::Pi),
    ];
    leaf.prop_recursive(4, 32, 2, |inner| {
        let op = prop_oneof![
            Just(BinOp::Add),
            Just(BinOp::Sub),
            Just(BinOp::Mul),
            Just(BinOp::Div),
            Just(BinOp::Pow)
        ];
        let func = prop_oneof![
            Just(Func::Sin),
            Just(Func::Cos),
            Just(Func::Exp),
            Just(Func::Log),
            Just(Func::Tanh),
            Just(Func::Sqrt)
        ];
        prop_oneof![
            inner.clone().prop_map(Expr::neg),
            (op, inner.clone(), inner.clone()).prop_map(|(o, l, r)| Expr::binary(o, l, r)),
            (func, inner).prop_map(|(f, e)| Expr::call(f, e)),
        ]
    })
}

/// Smooth positive speed and lower-order coefficients, all 1-periodic.
fn coefficients() -> impl Strategy<Value = ProblemSpec> {
    (-0.3f64..0.3, -0.3f64..0.3, -1.5f64..1.5, -0.5f64..0.5, -0.5f64..0.5).prop_map(|(ax, at, a1, a2, a3)| {
        ProblemSpec::builder(1.0)
            .a(&format!("1+({ax})*x+({at})*sin(2*pi*(t+x))"))
            .a1(&format!("{a1}+0.2*cos(2*pi*t)"))
            .a2(&format!("({a2})*x"))
            .a3(&format!("{a3}"))
            .build()
            .unwrap()
    })
}

fn grid(nx: usize, nt: usize) -> Grid {
    Grid::new(GridSpec::new(nx, nt).unwrap(), 1.0)
}

fn noise(g: Grid, seed: f64) -> GridPair<f64> {
    let f = move |x: f64, t: f64| ((x * 12.9898 + t * 78.233 + seed) * 43758.5453).sin();
    GridPair::new(
        GridFunction::from_fn(g, f),
        GridFunction::from_fn(g, move |x, t| f(t + 0.37, x + seed)),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printed_expression_reparses_to_same_tree(e in expr_tree()) {
        let text = e.to_string();
        let back = parse(&text).unwrap();
        prop_assert_eq!(back, e, "{}", text);
    }

    #[test]
    fn time_index_is_periodic(i in 0usize..9, n in 0isize..16, k in -3isize..3) {
        let g = grid(9, 16);
        let w = GridFunction::from_fn(g, |x, t| x + (2.0 * std::f64::consts::PI * t).sin());
        prop_assert_eq!(w.at(i, n), w.at(i, n + k * 16));
    }

    #[test]
    fn riemann_coefficient_identities(spec in coefficients(), x in 0.0f64..1.0, t in 0.0f64..1.0) {
        let p = spec.compile().point(x, t);
        let [b11, b12, _, b22] = p.b();
        prop_assert!((b11 + b22 - (p.a1 - p.a_t / p.a)).abs() <= 1e-12);
        prop_assert!((b11 - b12 - (p.a2 + p.a * p.a_x - p.a_t) / p.a).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn characteristics_pass_through_base_point_and_are_monotone(
        spec in coefficients(), j in 1usize..3, m in 0usize..17, t in 0.0f64..1.0,
    ) {
        let co = spec.compile();
        let x = m as f64 / 16.0;
        let curve = trace::<f64>(&co, j, x, t, 17);
        prop_assert_eq!(curve.tau[curve.base], t);
        for w in curve.tau.windows(2) {
            if j == 1 {
                prop_assert!(w[1] < w[0]);
            } else {
                prop_assert!(w[1] > w[0]);
            }
        }
    }

    #[test]
    fn kernels_are_positive_and_normalised(
        spec in coefficients(), j in 1usize..3, l in 0usize..3, x in 0.0f64..1.0, xi in 0.0f64..1.0, t in 0.0f64..1.0,
    ) {
        let co = spec.compile();
        prop_assert_eq!(compute_c(&co, j, l, x, x, t, 17), 1.0);
        prop_assert!(compute_c(&co, j, l, xi, x, t, 17) > 0.0);
        let d = compute_d(&co, j, xi, x, t, 17);
        let signed = if j == 1 { -d } else { d };
        prop_assert!(signed > 0.0);
    }

    #[test]
    fn loop_factors_are_consistent_with_verdicts(spec in coefficients()) {
        let spec = ProblemSpec { k: 2, ..spec };
        let report = analyze(&spec, GridSpec::new(17, 16).unwrap());
        for f in [&report.factors, &report.factors_plus] {
            prop_assert!(f.q.iter().chain(&f.q_min).chain(&f.q_prime).all(|&v| v >= 0.0));
        }
        if report.small1 {
            prop_assert!(report.factors.q.iter().all(|&q| q < 1.0));
        }
        if report.small11 {
            prop_assert!(report.factors.q_min.iter().all(|&q| q > 1.0));
        }
    }

    #[test]
    fn operator_is_linear(spec in coefficients(), alpha in -2.0f64..2.0, beta in -2.0f64..2.0, seed in 0.0f64..10.0) {
        let g = grid(9, 8);
        let sys = System::<f64>::build(&spec.compile(), g);
        let (u, v) = (noise(g, seed), noise(g, seed + 1.0));
        let combined = sys.apply_operator(&u.scale(alpha).add(&v.scale(beta)));
        let separate = sys.apply_operator(&u).scale(alpha).add(&sys.apply_operator(&v).scale(beta));
        prop_assert!(combined.max_abs_diff(&separate) <= 1e-11 * (1.0 + separate.sup_norm()));
    }

    #[test]
    fn scaled_identity_has_trivial_kernel(n in 1usize..40, s in 0.1f64..10.0) {
        let report = kernel_dimension(&nalgebra::DMatrix::from_diagonal_element(n, n, s), 1e-8).unwrap();
        prop_assert_eq!(report.dimension, 0);
        prop_assert!((report.ratio - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn manufactured_forcing_closes_the_equation(spec in coefficients(), c in 0.1f64..0.9, k in 1u32..3) {
        let w = parse(&format!("(2+{c}*sin({k}*2*pi*t))*exp(x)*(1+0.3*x^2)")).unwrap();
        let gs = GridSpec::new(17, 16).unwrap();
        let mp = manufacture(&w, &spec, gs).unwrap();
        prop_assert!(residual_pde_expr(&mp.w_star, &mp.spec, Grid::new(gs, 1.0)) <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn dense_matrix_matches_operator(spec in coefficients(), seed in 0.0f64..10.0) {
        let g = grid(9, 8);
        let sys = System::<f64>::build(&spec.compile(), g);
        let m = assemble_dense(&sys).unwrap();
        let u = noise(g, seed);
        let image = &m * nalgebra::DVector::from_vec(u.flatten());
        let direct = sys.apply_operator(&u).flatten();
        let err = image.iter().zip(&direct).fold(0.0f64, |s, (a, b)| s.max((a - b).abs()));
        prop_assert!(err <= 1e-12 * (1.0 + direct.iter().fold(0.0f64, |s, v| s.max(v.abs()))));
    }

    #[test]
    fn converged_solutions_satisfy_the_representation(a1 in -1.5f64..-0.5, amp in 0.1f64..2.0) {
        let spec = ProblemSpec::builder(1.0)
            .a1(&format!("{a1}"))
            .f(&format!("{amp}*cos(2*pi*t)*(1+x)"))
            .build()
            .unwrap();
        let opts = SolveOptions::default();
        let r = solve::<f64>(&spec, GridSpec::new(17, 16).unwrap(), opts).unwrap();
        prop_assert!(r.converged);
        prop_assert!(r.rep_residual <= 10.0 * opts.tol_abs);
    }

    #[test]
    fn eps_independent_sweep_is_flat(a1 in -1.5f64..-0.5) {
        let spec = ProblemSpec::builder(1.0).a1(&format!("{a1}")).f("sin(2*pi*t)").build().unwrap();
        let family = EpsFamily::new(spec, vec![0.0, 0.01, 0.02]).unwrap();
        let opts = SolveOptions::default();
        let report = sweep_epsilon::<f64>(&family, GridSpec::new(17, 16).unwrap(), opts).unwrap();
        prop_assert!(report.max_pairwise_diff <= 10.0 * opts.tol_abs);
    }
}
