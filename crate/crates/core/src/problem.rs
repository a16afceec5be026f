//! Problem instances: coefficient expressions, period, and the checks on the
//! standing assumptions (positive `a`, non-degenerate Robin datum at `x=0`,
//! periodicity).

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{parse_with_constants, Env, Expr, Program, Var};
use crate::grid::{Grid, GridSpec};

/// Coefficients of
/// `w_tt - a^2 w_xx + a1 w_t + a2 w_x + a3 w = f` on `(0,1)`, `T`-periodic in
/// time, with `w_x(0,t) = r0(t) w(0,t)` and `w_x(1,t) = r1(t) w(1,t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub a: Expr,
    pub a1: Expr,
    pub a2: Expr,
    pub a3: Expr,
    pub f: Expr,
    pub r0: Expr,
    pub r1: Expr,
    pub period: f64,
    /// Requested regularity order; the resonance checks cover `l = 0..=k`.
    pub k: usize,
    /// Value bound to `eps` when evaluating.
    pub eps: f64,
}

/// Names of the seven coefficient slots, in a fixed order.
pub const COEFFICIENT_NAMES: [&str; 7] = ["a", "a1", "a2", "a3", "f", "r0", "r1"];

impl ProblemSpec {
    /// Starts a spec with `a = 1`, `a1 = a2 = a3 = f = 0`, `r0 = r1 = 1`.
    pub fn builder(period: f64) -> ProblemBuilder {
        ProblemBuilder {
            period,
            k: 1,
            eps: 0.0,
            sources: COEFFICIENT_NAMES
                .iter()
                .map(|&n| (n, if matches!(n, "a" | "r0" | "r1") { "1" } else { "0" }.to_string()))
                .collect(),
        }
    }

    pub fn coefficient(&self, name: &str) -> Option<&Expr> {
        Some(match name {
            "a" => &self.a,
            "a1" => &self.a1,
            "a2" => &self.a2,
            "a3" => &self.a3,
            "f" => &self.f,
            "r0" => &self.r0,
            "r1" => &self.r1,
            _ => return None,
        })
    }

    pub fn coefficients(&self) -> [(&'static str, &Expr); 7] {
        [
            ("a", &self.a),
            ("a1", &self.a1),
            ("a2", &self.a2),
            ("a3", &self.a3),
            ("f", &self.f),
            ("r0", &self.r0),
            ("r1", &self.r1),
        ]
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        ProblemSpec { eps, ..self.clone() }
    }

    pub fn with_forcing(&self, f: Expr) -> Self {
        ProblemSpec { f, ..self.clone() }
    }

    /// Relabels `x -> 1 - x`, which swaps the roles of the two boundary
    /// conditions. A solution `w'` of the mirrored problem gives
    /// `w(x,t) = w'(1-x,t)`.
    pub fn mirrored(&self) -> Self {
        let flip = Expr::sub(Expr::Const(1.0), Expr::Var(Var::X));
        let m = |e: &Expr| e.substitute(Var::X, &flip);
        ProblemSpec {
            a: m(&self.a),
            a1: m(&self.a1),
            a2: Expr::neg(m(&self.a2)).simplify(),
            a3: m(&self.a3),
            f: m(&self.f),
            r0: Expr::neg(self.r1.clone()).simplify(),
            r1: Expr::neg(self.r0.clone()).simplify(),
            ..self.clone()
        }
    }

    /// Compiles the coefficients (and the symbolic derivatives of `a`) for
    /// repeated evaluation.
    pub fn compile(&self) -> Coefficients {
        Coefficients::new(self)
    }
}

/// Collects coefficient sources and parses them with `T` bound to the
/// period.
#[derive(Clone, Debug)]
pub struct ProblemBuilder {
    period: f64,
    k: usize,
    eps: f64,
    sources: Vec<(&'static str, String)>,
}

impl ProblemBuilder {
    pub fn set(mut self, name: &str, source: impl Into<String>) -> Self {
        let slot = self
            .sources
            .iter_mut()
            .find(|(n, _)| *n == name)
            .unwrap_or_else(|| panic!("unknown coefficient `{name}`"));
        slot.1 = source.into();
        self
    }

    pub fn a(self, s: &str) -> Self {
        self.set("a", s)
    }
    pub fn a1(self, s: &str) -> Self {
        self.set("a1", s)
    }
    pub fn a2(self, s: &str) -> Self {
        self.set("a2", s)
    }
    pub fn a3(self, s: &str) -> Self {
        self.set("a3", s)
    }
    pub fn f(self, s: &str) -> Self {
        self.set("f", s)
    }
    pub fn r0(self, s: &str) -> Self {
        self.set("r0", s)
    }
    pub fn r1(self, s: &str) -> Self {
        self.set("r1", s)
    }

    pub fn k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn build(self) -> Result<ProblemSpec> {
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::InvalidProblem(format!(
                "period must be positive, got {}",
                self.period
            )));
        }
        let constants = [("T", self.period)];
        let mut parsed = BTreeMap::new();
        for (name, src) in &self.sources {
            let e = parse_with_constants(src, &constants).map_err(|source| Error::Parse {
                field: name.to_string(),
                source,
            })?;
            if matches!(*name, "r0" | "r1") && e.depends_on(Var::X) {
                return Err(Error::InvalidProblem(format!("`{name}` must not depend on x")));
            }
            parsed.insert(*name, e);
        }
        let mut take = |n: &str| parsed.remove(n).expect("all slots present");
        Ok(ProblemSpec {
            a: take("a"),
            a1: take("a1"),
            a2: take("a2"),
            a3: take("a3"),
            f: take("f"),
            r0: take("r0"),
            r1: take("r1"),
            period: self.period,
            k: self.k,
            eps: self.eps,
        })
    }
}

/// Values of `a`, its first partials and the lower-order coefficients at a
/// point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointCoefficients {
    pub a: f64,
    pub a_x: f64,
    pub a_t: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl PointCoefficients {
    /// `[b11, b12, b21, b22]` of the first-order system in the Riemann
    /// invariants `u1 = w_t + a w_x`, `u2 = w_t - a w_x`.
    ///
    /// `b12` carries `-(a a_x - a_t)/(2a)`: substituting `w_x = (u1-u2)/(2a)`
    /// into `(a a_x - a_t) w_x` gives opposite signs on `u1` and `u2`.
    pub fn b(&self) -> [f64; 4] {
        let PointCoefficients {
            a, a_x, a_t, a1, a2, ..
        } = *self;
        let half_a1 = 0.5 * a1;
        let drift = 0.5 * a2 / a;
        let minus = (a * a_x - a_t) / (2.0 * a);
        let plus = (a * a_x + a_t) / (2.0 * a);
        [
            half_a1 + drift + minus,
            half_a1 - drift - minus,
            half_a1 + drift + plus,
            half_a1 - drift - plus,
        ]
    }
}

/// Compiled coefficient programs. Time arguments are reduced modulo the
/// period before evaluation.
#[derive(Clone, Debug)]
pub struct Coefficients {
    pub period: f64,
    pub eps: f64,
    a: Program,
    a_x: Program,
    a_t: Program,
    a1: Program,
    a2: Program,
    a3: Program,
    f: Program,
    r0: Program,
    r1: Program,
    a3_zero: bool,
    a_t_zero: bool,
}

impl Coefficients {
    fn new(spec: &ProblemSpec) -> Self {
        let a_x = spec.a.differentiate(Var::X);
        let a_t = spec.a.differentiate(Var::T);
        Coefficients {
            period: spec.period,
            eps: spec.eps,
            a: spec.a.compile(),
            a_x: a_x.compile(),
            a_t_zero: a_t == Expr::Const(0.0),
            a_t: a_t.compile(),
            a1: spec.a1.compile(),
            a2: spec.a2.compile(),
            a3_zero: spec.a3.simplify() == Expr::Const(0.0),
            a3: spec.a3.compile(),
            f: spec.f.compile(),
            r0: spec.r0.compile(),
            r1: spec.r1.compile(),
        }
    }

    #[inline]
    fn wrap(&self, t: f64) -> f64 {
        t.rem_euclid(self.period)
    }

    #[inline]
    pub fn a(&self, x: f64, t: f64) -> f64 {
        self.a.eval(x, self.wrap(t), self.eps)
    }

    #[inline]
    pub fn a_t(&self, x: f64, t: f64) -> f64 {
        if self.a_t_zero {
            return 0.0;
        }
        self.a_t.eval(x, self.wrap(t), self.eps)
    }

    #[inline]
    pub fn a_x(&self, x: f64, t: f64) -> f64 {
        self.a_x.eval(x, self.wrap(t), self.eps)
    }

    #[inline]
    pub fn a3(&self, x: f64, t: f64) -> f64 {
        if self.a3_zero {
            return 0.0;
        }
        self.a3.eval(x, self.wrap(t), self.eps)
    }

    #[inline]
    pub fn f(&self, x: f64, t: f64) -> f64 {
        self.f.eval(x, self.wrap(t), self.eps)
    }

    #[inline]
    pub fn r0(&self, t: f64) -> f64 {
        self.r0.eval(0.0, self.wrap(t), self.eps)
    }

    #[inline]
    pub fn r1(&self, t: f64) -> f64 {
        self.r1.eval(1.0, self.wrap(t), self.eps)
    }

    /// True when `a3` folds to the literal zero.
    pub fn a3_vanishes(&self) -> bool {
        self.a3_zero
    }

    /// True when `d a / d t` folds to the literal zero.
    pub fn a_stationary(&self) -> bool {
        self.a_t_zero
    }

    pub fn point(&self, x: f64, t: f64) -> PointCoefficients {
        let t = self.wrap(t);
        PointCoefficients {
            a: self.a.eval(x, t, self.eps),
            a_x: self.a_x.eval(x, t, self.eps),
            a_t: if self.a_t_zero {
                0.0
            } else {
                self.a_t.eval(x, t, self.eps)
            },
            a1: self.a1.eval(x, t, self.eps),
            a2: self.a2.eval(x, t, self.eps),
            a3: if self.a3_zero {
                0.0
            } else {
                self.a3.eval(x, t, self.eps)
            },
        }
    }

    /// `(b11/a, b22/a, a_t/a^2)` at a point: the integrands of the kernel
    /// exponents.
    #[inline]
    pub fn kernel_rates(&self, x: f64, t: f64) -> (f64, f64, f64) {
        let p = self.point(x, t);
        let b = p.b();
        (b[0] / p.a, b[3] / p.a, p.a_t / (p.a * p.a))
    }
}

/// Outcome of checking the standing assumptions on a grid.
#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub nx: usize,
    pub nt: usize,
    pub period: f64,
    pub k: usize,
    pub min_a: f64,
    /// `C = int_0^T a(0,t) r0(t) dt`.
    pub c_value: f64,
    /// `|C|` must exceed this for the Robin datum to count as non-degenerate.
    pub c_threshold: f64,
    pub periodicity_defect: BTreeMap<String, f64>,
    pub failures: Vec<String>,
    pub sampling_caveat: String,
}

const PERIODICITY_TOL: f64 = 1e-10;
const NONDEGENERACY_REL: f64 = 1e-8;

/// Periodic trapezoid approximation of `int_0^T a(0,t) r0(t) dt`.
pub fn compute_c(spec: &ProblemSpec, grid: GridSpec) -> f64 {
    let co = spec.compile();
    let g = Grid::new(grid, spec.period);
    let dt = g.dt();
    (0..grid.nt).map(|n| co.a(0.0, g.t(n)) * co.r0(g.t(n))).sum::<f64>() * dt
}

/// Checks positivity of `a`, the non-degeneracy of `C` and periodicity of
/// every coefficient on the grid. Never fails; violations are listed in the
/// report.
pub fn validate(spec: &ProblemSpec, grid: GridSpec) -> ValidationReport {
    let mut failures = Vec::new();
    if let Err(e) = grid.check() {
        failures.push(e.to_string());
    }
    let g = Grid::new(grid, spec.period);
    let eps = spec.eps;
    let mut min_a = f64::INFINITY;
    let mut periodicity_defect = BTreeMap::new();

    for (name, expr) in spec.coefficients() {
        let boundary_only = matches!(name, "r0" | "r1");
        let xs: Vec<f64> = if boundary_only {
            vec![if name == "r0" { 0.0 } else { 1.0 }]
        } else {
            g.xs()
        };
        let mut defect: f64 = 0.0;
        let mut failed = false;
        'outer: for &x in &xs {
            for n in 0..grid.nt {
                let t = g.t(n);
                let v0 = expr.eval(&Env::new(x, t, eps));
                let v1 = expr.eval(&Env::new(x, t + spec.period, eps));
                match (v0, v1) {
                    (Ok(v0), Ok(v1)) => {
                        defect = defect.max((v0 - v1).abs() / (1.0 + v0.abs()));
                        if name == "a" {
                            min_a = min_a.min(v0);
                        }
                    }
                    (Err(e), _) | (_, Err(e)) => {
                        failures.push(format!("{name}: {e} at (x={x}, t={t})"));
                        failed = true;
                        break 'outer;
                    }
                }
            }
        }
        if !failed && defect > PERIODICITY_TOL {
            failures.push(format!(
                "{name}: not {}-periodic in t (defect {defect:.3e})",
                spec.period
            ));
        }
        periodicity_defect.insert(name.to_string(), defect);
    }
    if !(min_a > 0.0) {
        failures.push(format!("positivity: min a = {min_a} is not positive"));
    }

    let co = spec.compile();
    let dt = g.dt();
    let products: Vec<f64> = (0..grid.nt).map(|n| co.a(0.0, g.t(n)) * co.r0(g.t(n))).collect();
    let c_value = products.iter().sum::<f64>() * dt;
    let scale = products.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let c_threshold = NONDEGENERACY_REL * spec.period * scale;
    if !(c_value.abs() > c_threshold) {
        failures.push(format!(
            "nondegeneracy: C = int a(0,t) r0(t) dt = {c_value:.6e} is zero within {c_threshold:.3e}"
        ));
    }

    ValidationReport {
        passed: failures.is_empty(),
        nx: grid.nx,
        nt: grid.nt,
        period: spec.period,
        k: spec.k,
        min_a,
        c_value,
        c_threshold,
        periodicity_defect,
        failures,
        sampling_caveat: "conditions required for all t are checked at grid times only".into(),
    }
}

/// Runs [`validate`] and turns a failed report into an error.
pub fn require_valid(spec: &ProblemSpec, grid: GridSpec) -> Result<ValidationReport> {
    let report = validate(spec, grid);
    if report.passed {
        Ok(report)
    } else {
        Err(Error::AssumptionsViolated(report.failures.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(17, 16).unwrap()
    }

    #[test]
    fn constant_robin_datum_passes() {
        let spec = ProblemSpec::builder(1.0).build().unwrap();
        let r = validate(&spec, grid());
        assert!(r.passed, "{:?}", r.failures);
        assert!((r.c_value - 1.0).abs() < 1e-15);
        assert_eq!(r.min_a, 1.0);
    }

    #[test]
    fn zero_mean_robin_datum_fails_nondegeneracy() {
        let spec = ProblemSpec::builder(1.0).r0("sin(2*pi*t)").build().unwrap();
        let r = validate(&spec, grid());
        assert!(!r.passed);
        assert!(r.c_value.abs() < 1e-15);
        assert_eq!(r.failures.len(), 1);
        assert!(r.failures[0].starts_with("nondegeneracy"));
    }

    #[test]
    fn negative_speed_fails_positivity() {
        let spec = ProblemSpec::builder(1.0).a("-1").build().unwrap();
        let r = validate(&spec, grid());
        assert!(!r.passed);
        assert!(r.failures.iter().any(|f| f.starts_with("positivity")));
    }

    #[test]
    fn non_periodic_and_domain_errors_are_reported() {
        let spec = ProblemSpec::builder(1.0).a1("t").a2("log(x)").build().unwrap();
        let r = validate(&spec, grid());
        assert!(r.failures.iter().any(|f| f.starts_with("a1: not")));
        assert!(r.failures.iter().any(|f| f.starts_with("a2: logarithm")));
        assert!(r.periodicity_defect["a1"] > 0.1);
    }

    #[test]
    fn compute_c_values() {
        let spec = ProblemSpec::builder(2.0).build().unwrap();
        assert!((compute_c(&spec, grid()) - 2.0).abs() < 1e-14);
        let spec = ProblemSpec::builder(1.0).r0("cos(2*pi*t)^2").build().unwrap();
        assert!((compute_c(&spec, grid()) - 0.5).abs() < 1e-14);
        let spec = ProblemSpec::builder(1.0).a("2").build().unwrap();
        assert!((compute_c(&spec, grid()) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn compute_c_converges_for_smooth_non_analytic_integrand() {
        // |sin|^3 has a jump in its third derivative: algebraic convergence.
        let spec = ProblemSpec::builder(1.0).r0("sqrt(sin(2*pi*t)^2)^3").build().unwrap();
        let exact = 4.0 / (3.0 * std::f64::consts::PI);
        let err = |nt| (compute_c(&spec, GridSpec::new(9, nt).unwrap()) - exact).abs();
        let (e1, e2) = (err(32), err(64));
        assert!(e1 / e2 >= 4.0, "{e1} {e2}");
    }

    #[test]
    fn trig_polynomials_are_integrated_exactly() {
        let spec = ProblemSpec::builder(1.0)
            .r0("1 + cos(2*pi*t) + sin(6*pi*t)^2 + cos(14*pi*t)")
            .build()
            .unwrap();
        // degree 7 < nt/2 = 8
        assert!((compute_c(&spec, grid()) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn period_literal_is_inlined() {
        let spec = ProblemSpec::builder(2.0).r0("1 + sin(2*pi*t/T)").build().unwrap();
        assert!(validate(&spec, grid()).passed);
    }

    #[test]
    fn validation_is_deterministic() {
        let spec = ProblemSpec::builder(1.0).a("1+0.1*sin(2*pi*t)").build().unwrap();
        let a = serde_json::to_string(&validate(&spec, grid())).unwrap();
        let b = serde_json::to_string(&validate(&spec, grid())).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn b_coefficient_identities() {
        let p = PointCoefficients {
            a: 1.3,
            a_x: 0.4,
            a_t: -0.7,
            a1: 0.2,
            a2: 0.9,
            a3: 0.0,
        };
        let b = p.b();
        assert!((b[0] + b[3] - (p.a1 - p.a_t / p.a)).abs() < 1e-12);
        assert!((b[0] - b[1] - (p.a2 / p.a + (p.a * p.a_x - p.a_t) / p.a)).abs() < 1e-12);
    }

    #[test]
    fn mirror_swaps_boundaries() {
        let spec = ProblemSpec::builder(1.0)
            .a("1+x")
            .a2("x")
            .r0("2")
            .r1("3")
            .build()
            .unwrap();
        let m = spec.mirrored();
        let env = Env::new(0.25, 0.0, 0.0);
        assert_eq!(m.a.eval(&env).unwrap(), 1.75);
        assert_eq!(m.a2.eval(&env).unwrap(), -0.75);
        assert_eq!(m.r0.eval(&env).unwrap(), -3.0);
        assert_eq!(m.r1.eval(&env).unwrap(), -2.0);
    }
}
