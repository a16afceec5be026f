//! Solution of `u = Bu + Au + Du + Rf` and reconstruction of `w`.
//!
//! The default path is a Picard iteration `u <- (I - B)^{-1} ((A + D) u + Rf)`,
//! where `(I - B)^{-1}` is applied through the boundary-trace loop. When the
//! loop is too close to resonance or the iteration stagnates, the dense
//! collocation matrix of `I - B - A - D` is factored instead.
//!
//! The Picard operator `(I - B)^{-1} (A + D)` is not a contraction in
//! general; a few of its eigenvalues may reach or exceed modulus one. When
//! the plain iteration contracts too slowly, those modes are deflated (see
//! [`deflation`]) and the iteration continues on the remaining ones.

mod deflation;
mod dense;
mod system;
mod trace_loop;

use std::io::Write;

use serde::Serialize;

pub use dense::{assemble_dense, check_size, solve_dense, DENSE_LIMIT};
pub use system::System;
pub use trace_loop::{invert_i_minus_b, Direction, InvertReport, LoopPlan, LoopVariant};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, GridPair, GridSpec};
use crate::problem::{require_valid, ProblemSpec};
use crate::resonance::{analyze, ResonanceReport};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    Auto,
    Picard,
    Dense,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "auto" => Ok(Strategy::Auto),
            "picard" => Ok(Strategy::Picard),
            "dense" => Ok(Strategy::Dense),
            other => Err(Error::InvalidProblem(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolveOptions {
    pub strategy: Strategy,
    /// Sup-norm tolerance on the Picard update.
    pub tol_abs: f64,
    pub max_iter: usize,
    /// Relaxation factor in `(0, 1]`.
    pub relaxation: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            strategy: Strategy::Auto,
            tol_abs: 1e-10,
            max_iter: 10_000,
            relaxation: 1.0,
        }
    }
}

impl SolveOptions {
    pub fn check(&self) -> Result<()> {
        if !(self.tol_abs > 0.0) {
            return Err(Error::InvalidProblem("tol_abs must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidProblem("max_iter must be at least 1".into()));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(Error::InvalidProblem("relaxation must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult<S> {
    pub u: GridPair<S>,
    pub w: GridFunction<S>,
    /// Picard iterations (0 on the dense path).
    pub iterations: usize,
    pub final_update: f64,
    /// `sup |u - Bu - Au - Du - Rf|`.
    pub rep_residual: f64,
    pub strategy_used: Strategy,
    pub q0_used: f64,
    pub converged: bool,
    /// Trace-loop formulation used by the Picard path.
    pub plan: Option<LoopPlan>,
    /// Dimension of the deflated subspace (0 for plain Picard).
    pub deflated: usize,
    pub warnings: Vec<String>,
}

/// Serializable summary of a [`SolveResult`].
#[derive(Clone, Debug, Serialize)]
pub struct SolveSummary {
    pub nx: usize,
    pub nt: usize,
    pub iterations: usize,
    pub final_update: f64,
    pub rep_residual: f64,
    pub strategy_used: Strategy,
    pub q0_used: f64,
    pub converged: bool,
    pub plan: Option<LoopPlan>,
    pub deflated: usize,
    pub warnings: Vec<String>,
}

impl<S: Real> SolveResult<S> {
    pub fn summary(&self) -> SolveSummary {
        let g = self.w.grid();
        SolveSummary {
            nx: g.nx(),
            nt: g.nt(),
            iterations: self.iterations,
            final_update: self.final_update,
            rep_residual: self.rep_residual,
            strategy_used: self.strategy_used,
            q0_used: self.q0_used,
            converged: self.converged,
            plan: self.plan,
            deflated: self.deflated,
            warnings: self.warnings.clone(),
        }
    }

    /// Writes `x,t,w,u1,u2` rows with 17 significant digits.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        let g = *self.w.grid();
        writeln!(out, "x,t,w,u1,u2")?;
        for i in 0..g.nx() {
            for n in 0..g.nt() {
                writeln!(
                    out,
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    g.x(i),
                    g.t(n),
                    self.w.get(i, n).as_f64(),
                    self.u.first.get(i, n).as_f64(),
                    self.u.second.get(i, n).as_f64()
                )?;
            }
        }
        Ok(())
    }
}

/// Picard iterations without progress before the path is abandoned.
const STAGNATION_WINDOW: usize = 25;

/// A validated problem with its discrete operators and resonance analysis.
pub struct Solver<S> {
    system: System<S>,
    report: ResonanceReport,
    opts: SolveOptions,
}

impl<S: Real> Solver<S> {
    /// Validates the problem, analyzes resonance and builds the operators.
    pub fn new(spec: &ProblemSpec, grid: GridSpec, opts: SolveOptions) -> Result<Self> {
        opts.check()?;
        grid.check()?;
        require_valid(spec, grid)?;
        let report = analyze(spec, grid);
        let system = System::build(&spec.compile(), Grid::new(grid, spec.period));
        Ok(Solver { system, report, opts })
    }

    pub fn system(&self) -> &System<S> {
        &self.system
    }

    pub fn resonance(&self) -> &ResonanceReport {
        &self.report
    }

    pub fn options(&self) -> &SolveOptions {
        &self.opts
    }

    fn failed_conditions(&self) -> Vec<String> {
        let holding = self.report.holding();
        ["small", "small+", "small1", "small11", "small111", "small1111"]
            .iter()
            .filter(|c| !holding.contains(c))
            .map(|c| c.to_string())
            .collect()
    }

    pub fn solve(&self) -> Result<SolveResult<S>> {
        self.solve_from(None)
    }

    /// Solves starting the Picard iteration from `initial` (zero if `None`).
    pub fn solve_from(&self, initial: Option<&GridPair<S>>) -> Result<SolveResult<S>> {
        let mut warnings = self.report.warnings.clone();
        let resonant = !self.report.non_resonant();
        match self.opts.strategy {
            Strategy::Dense => {
                if resonant {
                    warnings.push(format!(
                        "no non-resonance condition holds ({}); the dense system may be singular",
                        self.failed_conditions().join(", ")
                    ));
                }
                self.dense(warnings)
            }
            Strategy::Picard | Strategy::Auto => {
                if resonant {
                    return Err(Error::Resonant(self.failed_conditions()));
                }
                let plan = match LoopPlan::choose(&self.report) {
                    Ok(p) => p,
                    Err(e) if self.opts.strategy == Strategy::Picard => return Err(e),
                    Err(e) => {
                        warnings.push(format!("{e}; using the dense path"));
                        return self.dense(warnings);
                    }
                };
                let result = self.picard(plan, initial, warnings)?;
                if result.converged || self.opts.strategy == Strategy::Picard {
                    return Ok(result);
                }
                if check_size(self.system.unknowns()).is_err() {
                    return Ok(result);
                }
                let mut warnings = result.warnings;
                warnings.push(format!(
                    "Picard iteration stopped after {} iterations with update {:.3e}; using the dense path",
                    result.iterations, result.final_update
                ));
                self.dense(warnings)
            }
        }
    }

    fn finish(&self, run: Run<S>, mut warnings: Vec<String>) -> SolveResult<S> {
        let rep_residual = self.system.residual(&run.u).as_f64();
        let w = self.system.operators().riemann_to_w(&run.u);
        let converged = run.converged && rep_residual <= 10.0 * self.opts.tol_abs;
        if !converged {
            warnings.push(format!("not converged: representation residual {rep_residual:.3e}"));
        }
        SolveResult {
            u: run.u,
            w,
            iterations: run.iterations,
            final_update: run.final_update,
            rep_residual,
            strategy_used: run.strategy,
            q0_used: self.report.q0(),
            converged,
            plan: run.plan,
            deflated: run.deflated,
            warnings,
        }
    }

    fn dense(&self, warnings: Vec<String>) -> Result<SolveResult<S>> {
        let matrix = assemble_dense(&self.system)?;
        let u = solve_dense(matrix, self.system.rf())?;
        let run = Run {
            u,
            iterations: 0,
            final_update: 0.0,
            strategy: Strategy::Dense,
            plan: None,
            deflated: 0,
            converged: true,
        };
        Ok(self.finish(run, warnings))
    }

    /// `(I - B)^{-1} ((A + D) u + Rf)`, or without `Rf` when `source` is false.
    fn picard_map(&self, u: &GridPair<S>, plan: LoopPlan, source: bool) -> Result<GridPair<S>> {
        let mut rhs = self.system.apply_ad(u);
        if source {
            rhs = rhs.add(self.system.rf());
        }
        let tol = S::lit(self.opts.tol_abs * INNER_TOL_FACTOR);
        Ok(invert_i_minus_b(&self.system, &rhs, plan, tol, self.opts.max_iter)?.0)
    }

    fn picard(&self, plan: LoopPlan, initial: Option<&GridPair<S>>, warnings: Vec<String>) -> Result<SolveResult<S>> {
        let grid = *self.system.grid();
        let omega = S::lit(self.opts.relaxation);
        let mut u = initial.cloned().unwrap_or_else(|| GridPair::zeros(grid));
        let mut updates: Vec<f64> = Vec::new();
        let mut converged = false;
        let mut slow = false;
        while updates.len() < self.opts.max_iter {
            let next = self.picard_map(&u, plan, true)?;
            let next = if self.opts.relaxation < 1.0 {
                u.zip_with(&next, |a, b| a + omega * (b - a))
            } else {
                next
            };
            let update = next.max_abs_diff(&u).as_f64();
            u = next;
            updates.push(update);
            if update <= self.opts.tol_abs {
                converged = true;
                break;
            }
            if !update.is_finite() || contraction_too_slow(&updates) {
                slow = true;
                break;
            }
        }
        let iterations = updates.len();
        if slow {
            let start = if u.is_finite() {
                u
            } else {
                initial.cloned().unwrap_or_else(|| GridPair::zeros(grid))
            };
            return self.deflated(plan, start, iterations, warnings);
        }
        if !u.is_finite() {
            return Err(Error::NonFinite("Picard iterate".into()));
        }
        let run = Run {
            u,
            iterations,
            final_update: updates.last().copied().unwrap_or(0.0),
            strategy: Strategy::Picard,
            plan: Some(plan),
            deflated: 0,
            converged,
        };
        Ok(self.finish(run, warnings))
    }

    /// Continues the Picard iteration from `u` with the dominant modes of the
    /// iteration operator deflated.
    fn deflated(&self, plan: LoopPlan, u: GridPair<S>, done: usize, warnings: Vec<String>) -> Result<SolveResult<S>> {
        let grid = *self.system.grid();
        let to_f64 = |p: &GridPair<S>| -> Vec<f64> { p.flatten().iter().map(|v| v.as_f64()).collect() };
        let from_f64 = |v: &[f64]| -> Result<GridPair<S>> {
            GridPair::unflatten(grid, &v.iter().map(|&x| S::lit(x)).collect::<Vec<_>>())
        };
        let defl = deflation::Deflation::build(self.system.unknowns(), DEFLATION_BLOCK, |v| {
            Ok(to_f64(&self.picard_map(&from_f64(v)?, plan, false)?))
        })?;
        let mut iterations = done + defl.applications;
        let mut u = to_f64(&u);
        let mut v = defl.complement(&u);
        let mut update = f64::INFINITY;
        let mut best = f64::INFINITY;
        let mut since_best = 0;
        let mut converged = false;
        while iterations < self.opts.max_iter {
            let fv = to_f64(&self.picard_map(&from_f64(&v)?, plan, true)?);
            let (next, next_v) = defl.step(&fv)?;
            update = next.iter().zip(&u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            u = next;
            v = next_v;
            iterations += 1;
            if !update.is_finite() {
                return Err(Error::NonFinite("deflated Picard iterate".into()));
            }
            if update <= self.opts.tol_abs {
                converged = true;
                break;
            }
            if update < 0.999 * best {
                best = update;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= STAGNATION_WINDOW {
                    break;
                }
            }
        }
        let run = Run {
            u: from_f64(&u)?,
            iterations,
            final_update: update,
            strategy: Strategy::Picard,
            plan: Some(plan),
            deflated: defl.dim(),
            converged,
        };
        Ok(self.finish(run, warnings))
    }
}

/// Outcome of one solution path before post-processing.
struct Run<S> {
    u: GridPair<S>,
    iterations: usize,
    final_update: f64,
    strategy: Strategy,
    plan: Option<LoopPlan>,
    deflated: usize,
    converged: bool,
}

/// Inner trace-loop tolerance relative to `tol_abs`.
const INNER_TOL_FACTOR: f64 = 1e-2;
/// Initial block size of the deflation subspace.
const DEFLATION_BLOCK: usize = 6;
/// Plain Picard is abandoned once the observed contraction exceeds this.
const SLOW_CONTRACTION: f64 = 0.7;

/// Geometric mean of the last three update ratios above
/// [`SLOW_CONTRACTION`], or a stagnating sequence.
fn contraction_too_slow(updates: &[f64]) -> bool {
    let n = updates.len();
    if n < 5 {
        return false;
    }
    let rate = (updates[n - 1] / updates[n - 4]).powf(1.0 / 3.0);
    rate > SLOW_CONTRACTION || n > STAGNATION_WINDOW && updates[n - 1] > updates[n - 1 - STAGNATION_WINDOW]
}

/// Validates, analyzes and solves in one call.
pub fn solve<S: Real>(spec: &ProblemSpec, grid: GridSpec, opts: SolveOptions) -> Result<SolveResult<S>> {
    Solver::new(spec, grid, opts)?.solve()
}
