//! Verification tools: manufactured solutions, PDE and boundary residuals,
//! kernel-dimension estimates, grid convergence studies, spectral smoothness
//! indicators and parameter sweeps.

use nalgebra::DMatrix;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::expr::{Env, Expr, Var};
use crate::grid::{Grid, GridFunction, GridSpec};
use crate::numeric::{derivative_line, derivative_periodic};
use crate::problem::{require_valid, ProblemSpec};
use crate::scalar::Real;
use crate::solver::{check_size, SolveOptions, SolveResult, Solver};

/// Samples per period used to check a manufactured solution.
const SAMPLE_TIMES: usize = 256;

/// A problem whose forcing and Robin data are derived from a chosen exact
/// solution `w_star`.
#[derive(Clone, Debug)]
pub struct ManufacturedProblem {
    pub w_star: Expr,
    pub spec: ProblemSpec,
}

/// `w_tt - a^2 w_xx + a1 w_t + a2 w_x + a3 w`, built symbolically.
pub fn apply_pde(w: &Expr, spec: &ProblemSpec) -> Expr {
    let d = |e: &Expr, v| e.differentiate(v);
    let w_t = d(w, Var::T);
    let w_x = d(w, Var::X);
    let w_tt = d(&w_t, Var::T);
    let w_xx = d(&w_x, Var::X);
    let terms = [
        w_tt,
        Expr::neg(Expr::mul(Expr::pow(spec.a.clone(), Expr::constant(2.0)), w_xx)),
        Expr::mul(spec.a1.clone(), w_t),
        Expr::mul(spec.a2.clone(), w_x),
        Expr::mul(spec.a3.clone(), w.clone()),
    ];
    terms.into_iter().reduce(Expr::add).expect("non-empty").simplify()
}

/// Derives `f` and `r0`, `r1` from `w_star` and the coefficients of `base`
/// (its `f`, `r0`, `r1` are ignored), then revalidates on `grid`.
pub fn manufacture(w_star: &Expr, base: &ProblemSpec, grid: GridSpec) -> Result<ManufacturedProblem> {
    let eval = |e: &Expr, x: f64, t: f64| {
        e.eval(&Env::new(x, t, base.eps))
            .map_err(|err| Error::Manufacture(format!("cannot evaluate w_star: {err}")))
    };
    let period = base.period;
    for s in 0..SAMPLE_TIMES {
        let t = period * s as f64 / SAMPLE_TIMES as f64;
        for x in [0.0, 1.0] {
            let v = eval(w_star, x, t)?;
            if !(v.abs() > 1e-12) {
                return Err(Error::Manufacture(format!("w_star vanishes at (x={x}, t={t})")));
            }
        }
        for x in [0.0, 0.5, 1.0] {
            let (v0, v1) = (eval(w_star, x, t)?, eval(w_star, x, t + period)?);
            if (v0 - v1).abs() > 1e-9 * (1.0 + v0.abs()) {
                return Err(Error::Manufacture(format!("w_star is not {period}-periodic in t")));
            }
        }
    }
    let f = apply_pde(w_star, base);
    let quotient = Expr::div(w_star.differentiate(Var::X), w_star.clone());
    let at = |x: f64| quotient.substitute(Var::X, &Expr::constant(x)).simplify();
    let spec = ProblemSpec {
        f,
        r0: at(0.0),
        r1: at(1.0),
        ..base.clone()
    };
    require_valid(&spec, grid)?;
    Ok(ManufacturedProblem {
        w_star: w_star.clone(),
        spec,
    })
}

impl ManufacturedProblem {
    /// `w_star` at the grid nodes.
    pub fn sample<S: Real>(&self, grid: Grid) -> GridFunction<S> {
        let p = self.w_star.compile();
        let eps = self.spec.eps;
        GridFunction::from_fn(grid, |x, t| S::lit(p.eval(x, t, eps)))
    }

    /// Absolute and relative sup-norm errors of `w` against `w_star`.
    pub fn error<S: Real>(&self, w: &GridFunction<S>) -> (f64, f64) {
        let exact = self.sample::<f64>(*w.grid());
        let mut abs = 0.0f64;
        let mut rel = 0.0f64;
        for (e, v) in exact.values().iter().zip(w.values()) {
            let d = (v.as_f64() - e).abs();
            abs = abs.max(d);
            rel = rel.max(d / e.abs().max(f64::MIN_POSITIVE));
        }
        (abs, rel)
    }
}

/// Sup over interior nodes of the symbolic residual of `w`.
pub fn residual_pde_expr(w: &Expr, spec: &ProblemSpec, grid: Grid) -> f64 {
    let r = Expr::sub(apply_pde(w, spec), spec.f.clone()).simplify().compile();
    let mut sup = 0.0f64;
    for i in 1..grid.nx() - 1 {
        for n in 0..grid.nt() {
            sup = sup.max(r.eval(grid.x(i), grid.t(n), spec.eps).abs());
        }
    }
    sup
}

/// `w` as an `nx x nt` array of `f64` plus its fourth-order partials.
struct Partials {
    w: Vec<Vec<f64>>,
    w_x: Vec<Vec<f64>>,
    w_xx: Vec<Vec<f64>>,
    w_t: Vec<Vec<f64>>,
    w_tt: Vec<Vec<f64>>,
}

fn partials<S: Real>(w: &GridFunction<S>) -> Partials {
    let g = *w.grid();
    let (nx, nt) = (g.nx(), g.nt());
    let rows: Vec<Vec<f64>> = (0..nx).map(|i| w.row(i).iter().map(|v| v.as_f64()).collect()).collect();
    let w_t = rows.iter().map(|r| derivative_periodic(r, g.dt(), 1)).collect();
    let w_tt = rows.iter().map(|r| derivative_periodic(r, g.dt(), 2)).collect();
    let mut w_x = vec![vec![0.0; nt]; nx];
    let mut w_xx = vec![vec![0.0; nt]; nx];
    for n in 0..nt {
        let col: Vec<f64> = rows.iter().map(|r| r[n]).collect();
        let d1 = derivative_line(&col, g.dx(), 1);
        let d2 = derivative_line(&col, g.dx(), 2);
        for i in 0..nx {
            w_x[i][n] = d1[i];
            w_xx[i][n] = d2[i];
        }
    }
    Partials {
        w: rows,
        w_x,
        w_xx,
        w_t,
        w_tt,
    }
}

/// Sup over interior nodes of `w_tt - a^2 w_xx + a1 w_t + a2 w_x + a3 w - f`
/// with fourth-order differences (periodic in `t`, one-sided near `x = 0, 1`).
pub fn residual_pde<S: Real>(w: &GridFunction<S>, spec: &ProblemSpec) -> f64 {
    let g = *w.grid();
    let p = partials(w);
    let progs: Vec<_> = [&spec.a, &spec.a1, &spec.a2, &spec.a3, &spec.f]
        .iter()
        .map(|e| e.compile())
        .collect();
    let mut sup = 0.0f64;
    for i in 1..g.nx() - 1 {
        for n in 0..g.nt() {
            let (x, t) = (g.x(i), g.t(n));
            let c: Vec<f64> = progs.iter().map(|p| p.eval(x, t, spec.eps)).collect();
            let r =
                p.w_tt[i][n] - c[0] * c[0] * p.w_xx[i][n] + c[1] * p.w_t[i][n] + c[2] * p.w_x[i][n] + c[3] * p.w[i][n]
                    - c[4];
            sup = sup.max(r.abs());
        }
    }
    sup
}

/// `sup_t |w_x(i,t) - r_i(t) w(i,t)|` for `i = 0` and `i = 1`.
pub fn residual_boundary<S: Real>(w: &GridFunction<S>, spec: &ProblemSpec) -> (f64, f64) {
    let g = *w.grid();
    let p = partials(w);
    let (r0, r1) = (spec.r0.compile(), spec.r1.compile());
    let last = g.nx() - 1;
    let mut out = (0.0f64, 0.0f64);
    for n in 0..g.nt() {
        let t = g.t(n);
        out.0 = out.0.max((p.w_x[0][n] - r0.eval(0.0, t, spec.eps) * p.w[0][n]).abs());
        out.1 = out
            .1
            .max((p.w_x[last][n] - r1.eval(1.0, t, spec.eps) * p.w[last][n]).abs());
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelReport {
    /// Number of singular values below `rel_threshold * sigma_max`.
    pub dimension: usize,
    pub rel_threshold: f64,
    pub sigma_max: f64,
    pub sigma_min: f64,
    /// `sigma_min / sigma_max`.
    pub ratio: f64,
    /// The (up to) ten smallest singular values, ascending.
    pub tail: Vec<f64>,
}

/// Numerical kernel dimension of a square collocation matrix from its full
/// singular value decomposition.
pub fn kernel_dimension(matrix: &DMatrix<f64>, rel_threshold: f64) -> Result<KernelReport> {
    check_size(matrix.nrows().max(matrix.ncols()))?;
    let mut sigma: Vec<f64> = matrix.singular_values().iter().copied().collect();
    sigma.sort_by(f64::total_cmp);
    let sigma_max = sigma.last().copied().unwrap_or(0.0);
    let sigma_min = sigma.first().copied().unwrap_or(0.0);
    let cut = rel_threshold * sigma_max;
    Ok(KernelReport {
        dimension: sigma.iter().filter(|&&s| s < cut).count(),
        rel_threshold,
        sigma_max,
        sigma_min,
        ratio: if sigma_max > 0.0 { sigma_min / sigma_max } else { 0.0 },
        tail: sigma.iter().take(10).copied().collect(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceEntry {
    pub nx: usize,
    pub nt: usize,
    pub sup_err: f64,
    pub rel_err: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub entries: Vec<ConvergenceEntry>,
    /// `log2(e_h / e_{h/2})` between consecutive grids.
    pub orders: Vec<f64>,
    /// Errors decrease from each grid to the next.
    pub monotone: bool,
    pub warnings: Vec<String>,
}

/// Solves a manufactured problem on successively doubled grids and fits the
/// observed order of accuracy.
pub fn convergence_study<S: Real>(
    mp: &ManufacturedProblem,
    grids: &[GridSpec],
    opts: SolveOptions,
) -> Result<ConvergenceReport> {
    if grids.len() < 3 {
        return Err(Error::InvalidProblem(
            "a convergence study needs at least three grids".into(),
        ));
    }
    for w in grids.windows(2) {
        let nx_doubles = w[1].nx == 2 * w[0].nx || w[1].nx - 1 == 2 * (w[0].nx - 1);
        if w[1].nt != 2 * w[0].nt || !nx_doubles {
            return Err(Error::InvalidProblem(format!(
                "grids {}x{} -> {}x{} do not double",
                w[0].nx, w[0].nt, w[1].nx, w[1].nt
            )));
        }
    }
    let mut entries = Vec::with_capacity(grids.len());
    let mut warnings = Vec::new();
    for &g in grids {
        let result: SolveResult<S> = Solver::new(&mp.spec, g, opts)?.solve()?;
        let (sup_err, rel_err) = mp.error(&result.w);
        if !result.converged {
            warnings.push(format!("{}x{}: solver did not converge", g.nx, g.nt));
        }
        entries.push(ConvergenceEntry {
            nx: g.nx,
            nt: g.nt,
            sup_err,
            rel_err,
            iterations: result.iterations,
            converged: result.converged,
        });
    }
    let orders: Vec<f64> = entries
        .windows(2)
        .map(|w| (w[0].sup_err / w[1].sup_err).log2())
        .collect();
    let monotone = entries.windows(2).all(|w| w[1].sup_err < w[0].sup_err);
    if !monotone {
        warnings.push("errors do not decrease monotonically; the sequence is not convergent".into());
    }
    Ok(ConvergenceReport {
        entries,
        orders,
        monotone,
        warnings,
    })
}

/// Decay of Fourier coefficients in `t` along one `x`-row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Decay {
    /// Fewer than three resolved harmonics: band-limited on this grid.
    Entire,
    /// Least-squares slope of `log |c_k|` against `log k`.
    Algebraic(f64),
}

impl Serialize for Decay {
    fn serialize<Z: Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        match self {
            Decay::Entire => s.serialize_str("entire"),
            Decay::Algebraic(v) => s.serialize_f64(*v),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SliceDecay {
    pub x: f64,
    pub decay: Decay,
}

/// Coefficients below this fraction of the largest harmonic are noise.
const SPECTRAL_FLOOR: f64 = 1e-12;

/// Spectral decay exponent per `x`-row over the resolved band
/// `1 <= k <= nt/4`.
pub fn smoothness_indicator<S: Real>(w: &GridFunction<S>) -> Vec<SliceDecay> {
    let g = *w.grid();
    let nt = g.nt();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(nt);
    (0..g.nx())
        .map(|i| {
            let mut buf: Vec<Complex<f64>> = w.row(i).iter().map(|v| Complex::new(v.as_f64(), 0.0)).collect();
            fft.process(&mut buf);
            let band: Vec<(f64, f64)> = (1..=nt / 4).map(|k| (k as f64, buf[k].norm())).collect();
            let peak = band.iter().fold(0.0f64, |m, b| m.max(b.1));
            let resolved: Vec<(f64, f64)> = band
                .iter()
                .filter(|b| peak > 0.0 && b.1 > SPECTRAL_FLOOR * peak)
                .map(|&(k, c)| (k.ln(), c.ln()))
                .collect();
            let decay = if resolved.len() < 3 {
                Decay::Entire
            } else {
                let n = resolved.len() as f64;
                let mx = resolved.iter().map(|p| p.0).sum::<f64>() / n;
                let my = resolved.iter().map(|p| p.1).sum::<f64>() / n;
                let sxy: f64 = resolved.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
                let sxx: f64 = resolved.iter().map(|p| (p.0 - mx).powi(2)).sum();
                Decay::Algebraic(sxy / sxx)
            };
            SliceDecay { x: g.x(i), decay }
        })
        .collect()
}

/// A problem whose expressions may reference `eps`, with the values to
/// sweep.
#[derive(Clone, Debug)]
pub struct EpsFamily {
    pub spec: ProblemSpec,
    eps: Vec<f64>,
}

impl EpsFamily {
    /// `eps` must be sorted, distinct and lie in `[0, 1)`.
    pub fn new(spec: ProblemSpec, eps: Vec<f64>) -> Result<Self> {
        if eps.is_empty() {
            return Err(Error::InvalidProblem("empty eps list".into()));
        }
        if eps.iter().any(|e| !(0.0..1.0).contains(e)) {
            return Err(Error::InvalidProblem("eps values must lie in [0, 1)".into()));
        }
        if eps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidProblem("eps values must be sorted and distinct".into()));
        }
        Ok(EpsFamily { spec, eps })
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    /// Whether any expression references `eps`.
    pub fn depends_on_eps(&self) -> bool {
        self.spec.coefficients().iter().any(|(_, e)| e.depends_on(Var::Eps))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    /// `sup |w^eps - w^{eps_0}|`.
    pub sup_err: f64,
    /// Finite-difference estimate of `sup |d w / d eps|`.
    pub deriv_est: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Central-difference estimates of `d w / d eps` at one parameter value
/// from two step sizes.
#[derive(Clone, Debug, Serialize)]
pub struct Richardson {
    pub center: f64,
    pub steps: [f64; 2],
    /// `sup |D_h w|` for each step.
    pub c0: [f64; 2],
    /// `sup |d/dt D_h w|` for each step.
    pub c1_t: [f64; 2],
    /// `sup |d/dx D_h w|` for each step.
    pub c1_x: [f64; 2],
    /// `sup |D_h1 w - D_h2 w| / sup |D_h1 w|`.
    pub rel_diff_c0: f64,
    pub rel_diff_c1_t: f64,
    pub rel_diff_c1_x: f64,
    /// `rel_diff_c0 <= 0.05`.
    pub consistent: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub max_pairwise_diff: f64,
    /// `max sup_err / |eps - eps_0|`.
    pub lipschitz: Option<f64>,
    pub richardson: Option<Richardson>,
}

impl SweepReport {
    /// `eps,sup_err,deriv_est` with 17 significant digits.
    pub fn write_csv(&self, mut out: impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "eps,sup_err,deriv_est")?;
        for r in &self.rows {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", r.eps, r.sup_err, r.deriv_est)?;
        }
        Ok(())
    }
}

/// Relative agreement required between the two Richardson estimates.
const RICHARDSON_TOL: f64 = 0.05;

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Difference quotient `(w_b - w_a) / h` and its `t` and `x` derivatives.
fn quotient(grid: Grid, wa: &[f64], wb: &[f64], h: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (nx, nt) = (grid.nx(), grid.nt());
    let q: Vec<f64> = wa.iter().zip(wb).map(|(a, b)| (b - a) / h).collect();
    let mut q_t = Vec::with_capacity(q.len());
    for i in 0..nx {
        q_t.extend(derivative_periodic(&q[i * nt..(i + 1) * nt], grid.dt(), 1));
    }
    let mut q_x = vec![0.0; q.len()];
    for n in 0..nt {
        let col: Vec<f64> = (0..nx).map(|i| q[i * nt + n]).collect();
        for (i, d) in derivative_line(&col, grid.dx(), 1).into_iter().enumerate() {
            q_x[i * nt + n] = d;
        }
    }
    (q, q_t, q_x)
}

/// Solves every member of the family and estimates the derivative of the
/// solution with respect to `eps`.
pub fn sweep_epsilon<S: Real>(family: &EpsFamily, grid: GridSpec, opts: SolveOptions) -> Result<SweepReport> {
    let mut solutions: Vec<Vec<f64>> = Vec::with_capacity(family.eps.len());
    let mut meta = Vec::with_capacity(family.eps.len());
    let mut g = None;
    for &eps in &family.eps {
        let wrap = |e: Error| Error::SweepInstance {
            eps,
            source: Box::new(e),
        };
        let spec = family.spec.with_eps(eps);
        let result: SolveResult<S> = Solver::new(&spec, grid, opts).and_then(|s| s.solve()).map_err(wrap)?;
        g = Some(*result.w.grid());
        solutions.push(result.w.values().iter().map(|v| v.as_f64()).collect());
        meta.push((result.iterations, result.converged));
    }
    let grid = g.expect("non-empty family");
    let eps = &family.eps;
    let m = eps.len();

    let mut max_pairwise_diff = 0.0f64;
    for a in 0..m {
        for b in a + 1..m {
            max_pairwise_diff = max_pairwise_diff.max(sup_diff(&solutions[a], &solutions[b]));
        }
    }

    let rows: Vec<SweepRow> = (0..m)
        .map(|k| {
            let deriv_est = if m < 2 {
                0.0
            } else {
                let (lo, hi) = (k.saturating_sub(1), (k + 1).min(m - 1));
                sup_diff(&solutions[hi], &solutions[lo]) / (eps[hi] - eps[lo])
            };
            SweepRow {
                eps: eps[k],
                sup_err: sup_diff(&solutions[k], &solutions[0]),
                deriv_est,
                iterations: meta[k].0,
                converged: meta[k].1,
            }
        })
        .collect();
    let lipschitz = (m > 1).then(|| {
        rows.iter()
            .skip(1)
            .map(|r| r.sup_err / (r.eps - eps[0]))
            .fold(0.0f64, f64::max)
    });

    // Two symmetric step sizes around the middle value.
    let richardson = (m >= 5).then(|| {
        let c = m / 2;
        let (s1, s2) = (eps[c + 1] - eps[c - 1], eps[c + 2] - eps[c - 2]);
        let (q1, t1, x1) = quotient(grid, &solutions[c - 1], &solutions[c + 1], s1);
        let (q2, t2, x2) = quotient(grid, &solutions[c - 2], &solutions[c + 2], s2);
        let rel = |a: &[f64], b: &[f64]| {
            let n = sup(a);
            if n > 0.0 {
                sup_diff(a, b) / n
            } else {
                sup(b)
            }
        };
        let rel_diff_c0 = rel(&q1, &q2);
        Richardson {
            center: eps[c],
            steps: [0.5 * s1, 0.5 * s2],
            c0: [sup(&q1), sup(&q2)],
            c1_t: [sup(&t1), sup(&t2)],
            c1_x: [sup(&x1), sup(&x2)],
            rel_diff_c0,
            rel_diff_c1_t: rel(&t1, &t2),
            rel_diff_c1_x: rel(&x1, &x2),
            consistent: rel_diff_c0 <= RICHARDSON_TOL,
        }
    });

    Ok(SweepReport {
        rows,
        max_pairwise_diff,
        lipschitz,
        richardson,
    })
}
