//! First-order reformulation in the Riemann invariants
//! `u1 = w_t + a w_x`, `u2 = w_t - a w_x`, and the integral operators
//! that rebuild `w` from `u`.
//!
//! The invariants satisfy
//! `(d_t - a d_x) u1 + b11 u1 + b12 u2 + a3 w = f` and
//! `(d_t + a d_x) u2 + b21 u1 + b22 u2 + a3 w = f`.

use crate::grid::{Grid, GridFunction, GridPair};
use crate::numeric::periodic_cubic;
use crate::problem::Coefficients;
use crate::scalar::Real;

/// `b_ij` and the first partials of `a` at the grid nodes.
#[derive(Clone, Debug)]
pub struct RiemannCoeffs<S> {
    pub b11: GridFunction<S>,
    pub b12: GridFunction<S>,
    pub b21: GridFunction<S>,
    pub b22: GridFunction<S>,
    pub a_x: GridFunction<S>,
    pub a_t: GridFunction<S>,
}

pub fn compute_bij<S: Real>(co: &Coefficients, grid: Grid) -> RiemannCoeffs<S> {
    let pick = |k: usize| GridFunction::from_fn(grid, |x, t| S::lit(co.point(x, t).b()[k]));
    RiemannCoeffs {
        b11: pick(0),
        b12: pick(1),
        b21: pick(2),
        b22: pick(3),
        a_x: GridFunction::from_fn(grid, |x, t| S::lit(co.a_x(x, t))),
        a_t: GridFunction::from_fn(grid, |x, t| S::lit(co.a_t(x, t))),
    }
}

/// A function of time given at the grid times whose increment over one
/// period is `drift`, e.g. `t -> [Iu](t)`. Evaluation at unwrapped times
/// interpolates the periodic part `g(t) - (t/T) drift` with a periodic cubic.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceFunction<S> {
    /// Values at `t_n`, `n = 0..nt`.
    pub values: Vec<S>,
    /// `g(t + T) - g(t)`.
    pub drift: S,
    period: S,
    periodic_part: Vec<S>,
}

impl<S: Real> TraceFunction<S> {
    pub fn new(values: Vec<S>, drift: S, period: S) -> Self {
        let nt = values.len();
        let dt = period / S::from_index(nt);
        let periodic_part = values
            .iter()
            .enumerate()
            .map(|(n, &v)| v - S::from_index(n) * dt / period * drift)
            .collect();
        TraceFunction {
            values,
            drift,
            period,
            periodic_part,
        }
    }

    /// `g(t_n) - (t_n/T) drift`, the periodic samples behind [`Self::eval`].
    pub fn periodic_part(&self) -> &[S] {
        &self.periodic_part
    }

    pub fn period(&self) -> S {
        self.period
    }

    pub fn dt(&self) -> S {
        self.period / S::from_index(self.values.len())
    }

    pub fn eval(&self, tau: S) -> S {
        periodic_cubic(&self.periodic_part, self.dt(), tau) + tau / self.period * self.drift
    }

    /// Value one full period after `t = 0`.
    pub fn at_period(&self) -> S {
        self.values[0] + self.drift
    }

    pub fn shifted(&self, c: S) -> Self {
        TraceFunction::new(self.values.iter().map(|&v| v + c).collect(), self.drift, self.period)
    }
}

/// `F u = G u + J u`, stored as its two parts so that it can be sampled at
/// unwrapped off-grid times.
#[derive(Clone, Debug)]
pub struct FField<S> {
    pub g: TraceFunction<S>,
    pub j: GridFunction<S>,
}

impl<S: Real> FField<S> {
    /// `[Fu](x_i, tau)`.
    pub fn eval(&self, i: usize, tau: S) -> S {
        self.g.eval(tau) + periodic_cubic(self.j.row(i), self.g.dt(), tau)
    }

    pub fn on_grid(&self) -> GridFunction<S> {
        let nt = self.j.grid().nt();
        let mut out = self.j.clone();
        for i in 0..out.grid().nx() {
            for (n, v) in out.row_mut(i).iter_mut().enumerate() {
                *v += self.g.values[n % nt];
            }
        }
        out
    }
}

/// The operators `I`, `J`, `N`, `G = I + N` and `F = G + J` on a grid.
#[derive(Clone, Debug)]
pub struct IntegralOperators<S> {
    grid: Grid,
    a: GridFunction<S>,
    a0r0: Vec<S>,
    c: S,
}

impl<S: Real> IntegralOperators<S> {
    pub fn new(co: &Coefficients, grid: Grid) -> Self {
        let a = GridFunction::from_fn(grid, |x, t| S::lit(co.a(x, t)));
        let a0r0: Vec<S> = grid.ts().iter().map(|&t| S::lit(co.a(0.0, t) * co.r0(t))).collect();
        let c = a0r0.iter().copied().sum::<S>() * S::lit(grid.dt());
        IntegralOperators { grid, a, a0r0, c }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `C = int_0^T a(0,t) r0(t) dt` by the periodic trapezoid rule.
    pub fn c(&self) -> S {
        self.c
    }

    /// Speed `a` at the nodes.
    pub fn speed(&self) -> &GridFunction<S> {
        &self.a
    }

    pub fn a0r0(&self) -> &[S] {
        &self.a0r0
    }

    /// `[Iu](t) = int_0^t (u1 + u2)/2 (0, s) ds`, cumulative trapezoid.
    pub fn apply_i(&self, u: &GridPair<S>) -> TraceFunction<S> {
        let nt = self.grid.nt();
        let half = S::lit(0.5);
        let dt = S::lit(self.grid.dt());
        let h: Vec<S> = (0..nt)
            .map(|n| half * (u.first.get(0, n) + u.second.get(0, n)))
            .collect();
        let mut values = Vec::with_capacity(nt);
        let mut acc = S::zero();
        for n in 0..nt {
            values.push(acc);
            acc += half * dt * (h[n] + h[(n + 1) % nt]);
        }
        TraceFunction::new(values, acc, S::lit(self.grid.period))
    }

    /// `[Ju](x,t) = int_0^x (u1 - u2)/(2a) (s, t) ds`, cumulative trapezoid.
    pub fn apply_j(&self, u: &GridPair<S>) -> GridFunction<S> {
        let (nx, nt) = (self.grid.nx(), self.grid.nt());
        let half_dx = S::lit(0.5 * self.grid.dx());
        let two = S::lit(2.0);
        let mut out = GridFunction::zeros(self.grid);
        for n in 0..nt {
            let integrand = |i: usize| (u.first.get(i, n) - u.second.get(i, n)) / (two * self.a.get(i, n));
            let mut acc = S::zero();
            let mut prev = integrand(0);
            for i in 1..nx {
                let cur = integrand(i);
                acc += half_dx * (prev + cur);
                out.set(i, n, acc);
                prev = cur;
            }
        }
        out
    }

    /// `Nu = (1/C) int_0^T [(u1 - u2)/2 (0,t) - a(0,t) r0(t) [Iu](t)] dt`.
    /// The quadrature includes the endpoint `t = T`, where `Iu` has grown by
    /// its drift.
    pub fn compute_n(&self, u: &GridPair<S>) -> S {
        self.n_with(u, &self.apply_i(u))
    }

    fn n_with(&self, u: &GridPair<S>, iu: &TraceFunction<S>) -> S {
        let nt = self.grid.nt();
        let half = S::lit(0.5);
        let h = |n: usize, i_val: S| half * (u.first.get(0, n) - u.second.get(0, n)) - self.a0r0[n] * i_val;
        let mut sum = S::zero();
        for n in 1..nt {
            sum += h(n, iu.values[n]);
        }
        sum += half * (h(0, iu.values[0]) + h(0, iu.at_period()));
        sum * S::lit(self.grid.dt()) / self.c
    }

    /// `G u = I u + N u`.
    pub fn apply_g(&self, u: &GridPair<S>) -> TraceFunction<S> {
        let iu = self.apply_i(u);
        let nu = self.n_with(u, &iu);
        iu.shifted(nu)
    }

    /// `F u = G u + J u`.
    pub fn apply_f(&self, u: &GridPair<S>) -> FField<S> {
        FField {
            g: self.apply_g(u),
            j: self.apply_j(u),
        }
    }

    /// `w = Iu + Ju + Nu`.
    pub fn riemann_to_w(&self, u: &GridPair<S>) -> GridFunction<S> {
        self.apply_f(u).on_grid()
    }

    /// `u1 = w_t + a w_x`, `u2 = w_t - a w_x`.
    pub fn w_to_riemann(&self, w_t: &GridFunction<S>, w_x: &GridFunction<S>) -> GridPair<S> {
        let aw = self.a.zip_with(w_x, |a, d| a * d);
        GridPair::new(w_t.zip_with(&aw, |p, q| p + q), w_t.zip_with(&aw, |p, q| p - q))
    }
}
