//! Non-resonance conditions on the boundary-to-boundary loop of
//! characteristics and the contraction factors `q_l`.
//!
//! Following a 1-characteristic from `x = 1` back to `x = 0` and then a
//! 2-characteristic from `x = 0` to `x = 1` multiplies the trace of `u1` by
//! `c_1^l(0,1,t) c_2^l(1,0,tau_1(0,1,t))`. Its logarithm at `l = 0` is the
//! loop integral of `(b11 + b22)/a`; the problem is non-resonant when that
//! integral stays away from zero.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::characteristics::{trace, Curve};
use crate::error::{Error, Result};
use crate::expr::{Env, Var};
use crate::grid::{Grid, GridSpec};
use crate::numeric::{derivative_periodic, simpson};
use crate::problem::{Coefficients, ProblemSpec};

/// Strict margin for the inequalities `|I| > 0`, `q < 1` and `q > 1`.
pub const STRICT_MARGIN: f64 = 1e-6;
/// Loop factors within this distance of 1 make fixed-point inversion
/// impractically slow.
pub const NEAR_RESONANCE: f64 = 1e-3;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct IntegralVerdict {
    pub passed: bool,
    /// `min_t |I(t)|` over the samples.
    pub min_abs: f64,
    pub sign_change: bool,
}

impl IntegralVerdict {
    fn from_samples(samples: &[f64]) -> Self {
        let min_abs = samples.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        let pos = samples.iter().any(|&v| v > 0.0);
        let neg = samples.iter().any(|&v| v < 0.0);
        let sign_change = pos && neg;
        IntegralVerdict {
            passed: min_abs > STRICT_MARGIN && !sign_change,
            min_abs,
            sign_change,
        }
    }
}

/// Loop products for one starting boundary, all weight levels.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct LoopFactors {
    /// `max_t` of the product, per `l`.
    pub q: Vec<f64>,
    /// `min_t` of the product, per `l`.
    pub q_min: Vec<f64>,
    /// `max_t |d/dt|` of the product, per `l`.
    pub q_prime: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResonanceReport {
    pub k: usize,
    /// Sample times: the grid times and their midpoints.
    pub times: Vec<f64>,
    /// Loop integral starting from `u1` at `x = 1`.
    pub integral_small: Vec<f64>,
    /// Loop integral starting from `u2` at `x = 0`.
    pub integral_small_plus: Vec<f64>,
    pub small: IntegralVerdict,
    pub small_plus: IntegralVerdict,
    /// `c_1^l(0,1,t) c_2^l(1,0,tau_1(0,1,t))`.
    pub factors: LoopFactors,
    /// `c_2^l(1,0,t) c_1^l(0,1,tau_2(1,0,t))`.
    pub factors_plus: LoopFactors,
    pub small1: bool,
    pub small11: bool,
    pub small111: bool,
    pub small1111: bool,
    /// Signed distance of each quantity from its threshold; positive means
    /// the condition holds.
    pub margins: BTreeMap<String, f64>,
    pub stationary_value: Option<f64>,
    pub near_resonance: bool,
    pub warnings: Vec<String>,
}

impl ResonanceReport {
    /// Condition names that hold, in a fixed order.
    pub fn holding(&self) -> Vec<&'static str> {
        [
            ("small", self.small.passed),
            ("small+", self.small_plus.passed),
            ("small1", self.small1),
            ("small11", self.small11),
            ("small111", self.small111),
            ("small1111", self.small1111),
        ]
        .iter()
        .filter(|(_, ok)| *ok)
        .map(|(n, _)| *n)
        .collect()
    }

    pub fn non_resonant(&self) -> bool {
        self.small.passed || self.small_plus.passed
    }

    /// `q_0` of the `u1`-loop: `max_t c_1(0,1,t) c_2(1,0,tau_1(0,1,t))`.
    pub fn q0(&self) -> f64 {
        self.factors.q[0]
    }
}

/// Integrals along one curve over `[0, 1]` of `b_jj/a` and `a_t/a^2`.
fn loop_leg(co: &Coefficients, curve: &Curve<f64>) -> (f64, f64) {
    let j = curve.j;
    let b = curve.integrate(|e, s| {
        let (b11a, b22a, _) = co.kernel_rates(e, s);
        if j == 1 {
            b11a
        } else {
            b22a
        }
    });
    let at = curve.integrate(|e, s| co.kernel_rates(e, s).2);
    let last = curve.xi.len() - 1;
    // Curves start at x = 1 (j = 1) or x = 0 (j = 2); orient both over [0,1].
    if curve.base == 0 {
        (b[last], at[last])
    } else {
        (-b[0], -at[0])
    }
}

/// `(b, at)` integrals of both legs of the loop starting at time `t` on
/// boundary `x = 1` (`plus = false`) or `x = 0` (`plus = true`).
fn loop_at(co: &Coefficients, t: f64, nx: usize, plus: bool) -> (f64, f64) {
    let (first_j, first_x, second_j, second_x) = if plus { (2, 0.0, 1, 1.0) } else { (1, 1.0, 2, 0.0) };
    let first = trace::<f64>(co, first_j, first_x, t, nx);
    let arrival = if plus {
        first.tau[first.tau.len() - 1]
    } else {
        first.tau[0]
    };
    let second = trace::<f64>(co, second_j, second_x, arrival, nx);
    let (b1, a1) = loop_leg(co, &first);
    let (b2, a2) = loop_leg(co, &second);
    (b1 + b2, a1 + a2)
}

fn factors(logs: &[(f64, f64)], k: usize, h: f64) -> LoopFactors {
    let mut out = LoopFactors {
        q: Vec::new(),
        q_min: Vec::new(),
        q_prime: Vec::new(),
    };
    for l in 0..=k {
        let p: Vec<f64> = logs.iter().map(|&(b, at)| (b - l as f64 * at).exp()).collect();
        let dp = derivative_periodic(&p, h, 1);
        out.q.push(p.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        out.q_min.push(p.iter().cloned().fold(f64::INFINITY, f64::min));
        out.q_prime.push(dp.iter().fold(0.0, |m: f64, v| m.max(v.abs())));
    }
    out
}

/// Evaluates every condition on the grid times and midpoints.
pub fn analyze(spec: &ProblemSpec, grid: GridSpec) -> ResonanceReport {
    let co = spec.compile();
    let g = Grid::new(grid, spec.period);
    let h = 0.5 * g.dt();
    let times: Vec<f64> = (0..2 * grid.nt).map(|s| s as f64 * h).collect();
    let logs: Vec<(f64, f64)> = times.iter().map(|&t| loop_at(&co, t, grid.nx, false)).collect();
    let logs_plus: Vec<(f64, f64)> = times.iter().map(|&t| loop_at(&co, t, grid.nx, true)).collect();
    let integral_small: Vec<f64> = logs.iter().map(|v| v.0).collect();
    let integral_small_plus: Vec<f64> = logs_plus.iter().map(|v| v.0).collect();
    let small = IntegralVerdict::from_samples(&integral_small);
    let small_plus = IntegralVerdict::from_samples(&integral_small_plus);
    let k = spec.k;
    let f = factors(&logs, k, h);
    let fp = factors(&logs_plus, k, h);

    let below = |lf: &LoopFactors| lf.q.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)) < 1.0 - STRICT_MARGIN;
    let above = |lf: &LoopFactors| lf.q_min.iter().fold(f64::INFINITY, |m, &v| m.min(v)) > 1.0 + STRICT_MARGIN;

    let mut margins = BTreeMap::new();
    margins.insert("small".to_string(), small.min_abs - STRICT_MARGIN);
    margins.insert("small+".to_string(), small_plus.min_abs - STRICT_MARGIN);
    let worst_max = |lf: &LoopFactors| lf.q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let worst_min = |lf: &LoopFactors| lf.q_min.iter().cloned().fold(f64::INFINITY, f64::min);
    margins.insert("small1".to_string(), 1.0 - STRICT_MARGIN - worst_max(&f));
    margins.insert("small11".to_string(), worst_min(&f) - 1.0 - STRICT_MARGIN);
    margins.insert("small111".to_string(), 1.0 - STRICT_MARGIN - worst_max(&fp));
    margins.insert("small1111".to_string(), worst_min(&fp) - 1.0 - STRICT_MARGIN);

    let closest = |lf: &LoopFactors| (lf.q[0] - 1.0).abs().min((lf.q_min[0] - 1.0).abs());
    let straddles = |lf: &LoopFactors| lf.q_min[0] <= 1.0 && lf.q[0] >= 1.0;
    let near_resonance = straddles(&f) || closest(&f) < NEAR_RESONANCE;
    let mut warnings = Vec::new();
    if near_resonance {
        warnings.push(format!(
            "loop factor q_0 range [{:.6e}, {:.6e}] is within {NEAR_RESONANCE:e} of 1; fixed-point inversion is disabled",
            f.q_min[0], f.q[0]
        ));
    }
    let stationary_value = stationary_simplification(spec, grid).ok();

    ResonanceReport {
        k,
        times,
        integral_small,
        integral_small_plus,
        small,
        small_plus,
        small1: below(&f),
        small11: above(&f),
        small111: below(&fp),
        small1111: above(&fp),
        factors: f,
        factors_plus: fp,
        margins,
        stationary_value,
        near_resonance,
        warnings,
    }
}

/// `(min_t |I|, verdict)` for the `u1`-loop and the `u2`-loop integrals.
pub fn check_small(spec: &ProblemSpec, grid: GridSpec) -> [(f64, bool); 2] {
    let r = analyze(spec, grid);
    [
        (r.small.min_abs, r.small.passed),
        (r.small_plus.min_abs, r.small_plus.passed),
    ]
}

/// `(q_l, q_l')` of the `u1`-loop.
pub fn compute_ql(spec: &ProblemSpec, grid: GridSpec, l: usize) -> (f64, f64) {
    let spec = ProblemSpec {
        k: spec.k.max(l),
        ..spec.clone()
    };
    let r = analyze(&spec, grid);
    (r.factors.q[l], r.factors.q_prime[l])
}

/// Verdicts of the weighted conditions for `l = 0..=k`, in the order
/// `small1, small11, small111, small1111`.
pub fn check_small_l(spec: &ProblemSpec, grid: GridSpec, k: usize) -> [bool; 4] {
    let spec = ProblemSpec { k, ..spec.clone() };
    let r = analyze(&spec, grid);
    [r.small1, r.small11, r.small111, r.small1111]
}

const STATIONARY_TOL: f64 = 1e-12;

/// For coefficients `a` and `a1` independent of `t`, the loop integral
/// reduces to `int_0^1 (b11 + b22)/a = int_0^1 a1/a`, evaluated by Simpson
/// on the `x` grid.
pub fn stationary_simplification(spec: &ProblemSpec, grid: GridSpec) -> Result<f64> {
    let g = Grid::new(grid, spec.period);
    for (name, e) in [("a", &spec.a), ("a1", &spec.a1)] {
        let dt = e.differentiate(Var::T);
        for &x in &g.xs() {
            for &t in &g.ts() {
                let v = dt.eval(&Env::new(x, t, spec.eps)).map_err(|source| Error::Eval {
                    field: format!("d/dt {name}"),
                    source,
                })?;
                if v.abs() > STATIONARY_TOL {
                    return Err(Error::TimeDependent(name.to_string()));
                }
            }
        }
    }
    let co = spec.compile();
    let vals: Vec<f64> = g.xs().iter().map(|&x| co.point(x, 0.0).a1 / co.a(x, 0.0)).collect();
    Ok(simpson(&vals, g.dx()))
}
