//! Discrete operators `B`, `A`, `D` and the source term `R f` of
//! `u = Bu + Au + Du + Rf`, precomputed as interpolation taps.
//!
//! Every operator samples grid rows at the (off-grid, unwrapped) times where
//! characteristics cross them; each sample is a four-point periodic stencil
//! whose weights already include the kernel and quadrature factors.

use crate::characteristics::{x_node, CharField};
use crate::grid::{Grid, GridFunction, GridPair};
use crate::kernels::KernelField;
use crate::numeric::PeriodicStencil;
use crate::problem::Coefficients;
use crate::riemann::{FField, IntegralOperators, TraceFunction};
use crate::scalar::Real;

/// A stencil on row `row` with premultiplied weights.
#[derive(Clone, Copy, Debug)]
struct Tap<S> {
    row: u32,
    base: u32,
    w: [S; 4],
}

impl<S: Real> Tap<S> {
    fn new(row: usize, st: PeriodicStencil<S>, scale: S) -> Self {
        Tap {
            row: row as u32,
            base: st.base as u32,
            w: st.weights.map(|v| v * scale),
        }
    }

    #[inline]
    fn apply(&self, samples: &[S]) -> S {
        let n = samples.len();
        let b = self.base as usize;
        let im1 = if b == 0 { n - 1 } else { b - 1 };
        let ip1 = if b + 1 == n { 0 } else { b + 1 };
        let ip2 = if ip1 + 1 == n { 0 } else { ip1 + 1 };
        self.w[0] * samples[im1] + self.w[1] * samples[b] + self.w[2] * samples[ip1] + self.w[3] * samples[ip2]
    }
}

/// Sample of `a3 F u` along a characteristic: `F = G + J`, where `G` has a
/// drift over one period.
#[derive(Clone, Copy, Debug)]
struct FTap<S> {
    tap: Tap<S>,
    drift: S,
}

/// Where the characteristics through one node meet the boundary.
#[derive(Clone, Copy, Debug)]
pub(crate) struct BoundaryHit<S> {
    pub stencil: PeriodicStencil<S>,
    /// `tau / T`, the drift factor of `G` at the hit time.
    pub frac: S,
    /// `c_1(0,x,t)` or `c_2(1,x,t)`.
    pub c: S,
    /// `2 c_1 a(0,tau) r0(tau)` or `-2 c_2 a(1,tau) r1(tau)`.
    pub alpha: S,
}

impl<S: Real> BoundaryHit<S> {
    #[inline]
    fn sample(&self, row: &[S]) -> S {
        self.stencil.apply(row)
    }

    #[inline]
    fn sample_trace(&self, g: &TraceFunction<S>) -> S {
        self.stencil.apply(g.periodic_part()) + self.frac * g.drift
    }
}

/// Boundary-to-boundary legs of the trace loop.
#[derive(Clone, Debug)]
pub(crate) struct Leg<S> {
    pub stencils: Vec<PeriodicStencil<S>>,
    pub weights: Vec<S>,
}

impl<S: Real> Leg<S> {
    /// `out_n = weights_n * v(tau_n) + add_n`.
    pub fn apply(&self, v: &[S], add: &[S]) -> Vec<S> {
        self.stencils
            .iter()
            .zip(&self.weights)
            .zip(add)
            .map(|((st, &w), &g)| w * st.apply(v) + g)
            .collect()
    }

    /// `out_n = weights_n * v(tau_n)`.
    pub fn apply_linear(&self, v: &[S]) -> Vec<S> {
        self.stencils
            .iter()
            .zip(&self.weights)
            .map(|(st, &w)| w * st.apply(v))
            .collect()
    }
}

/// The four boundary-to-boundary maps and their approximate inverses.
#[derive(Clone, Debug)]
pub(crate) struct LoopLegs<S> {
    /// `u1(1,.) -> u2(0,.)`: times `tau_2(1,0,t)`, weights `c_2(1,0,t)`.
    pub to_left: Leg<S>,
    /// `u2(0,.) -> u1(1,.)`: times `tau_1(0,1,t)`, weights `c_1(0,1,t)`.
    pub to_right: Leg<S>,
    /// Inverse of `to_left`: times `tau_2(0,1,t)`, weights `c_2(0,1,t)`.
    pub from_left: Leg<S>,
    /// Inverse of `to_right`: times `tau_1(1,0,t)`, weights `c_1(1,0,t)`.
    pub from_right: Leg<S>,
}

/// Precomputed discretisation of the operator equation on one grid.
#[derive(Clone, Debug)]
pub struct System<S> {
    grid: Grid,
    ops: IntegralOperators<S>,
    hits: [Vec<BoundaryHit<S>>; 2],
    /// Taps of `D` acting on `u2` (family 1) and `u1` (family 2).
    taps: [Vec<Tap<S>>; 2],
    starts: [Vec<usize>; 2],
    f_taps: [Vec<FTap<S>>; 2],
    f_starts: [Vec<usize>; 2],
    rf: GridPair<S>,
    pub(crate) legs: LoopLegs<S>,
}

fn trapezoid_weight(m: usize, lo: usize, hi: usize, h: f64) -> f64 {
    if m == lo || m == hi {
        0.5 * h
    } else {
        h
    }
}

impl<S: Real> System<S> {
    /// Traces all characteristics, computes the kernels and condenses them
    /// into taps. The intermediate fields are dropped on return.
    pub fn build(co: &Coefficients, grid: Grid) -> Self {
        let chars = CharField::<S>::build(co, grid);
        let kernels = KernelField::build(co, &chars, 0);
        Self::from_fields(co, &chars, &kernels)
    }

    pub fn from_fields(co: &Coefficients, chars: &CharField<S>, kernels: &KernelField<S>) -> Self {
        let grid = *chars.grid();
        let (nx, nt) = (grid.nx(), grid.nt());
        let dt = S::lit(grid.dt());
        let period = S::lit(grid.period);
        let h = grid.dx();
        let ops = IntegralOperators::new(co, grid);
        let with_a3 = !co.a3_vanishes();

        let mut hits: [Vec<BoundaryHit<S>>; 2] = [Vec::with_capacity(nx * nt), Vec::with_capacity(nx * nt)];
        let mut taps: [Vec<Tap<S>>; 2] = [Vec::new(), Vec::new()];
        let mut starts: [Vec<usize>; 2] = [vec![0], vec![0]];
        let mut f_taps: [Vec<FTap<S>>; 2] = [Vec::new(), Vec::new()];
        let mut f_starts: [Vec<usize>; 2] = [vec![0], vec![0]];
        let mut rf = GridPair::zeros(grid);

        for i in 0..nx {
            for n in 0..nt {
                for j in 1..=2usize {
                    let curve = chars.curve(j, i, n);
                    let c = kernels.c_curve(j, 0, i, n);
                    let d = kernels.d_curve(j, i, n);
                    // Boundary end of the characteristic.
                    let (edge, xe) = if j == 1 { (0, 0.0) } else { (nx - 1, 1.0) };
                    let tau_e = curve[edge];
                    let te = tau_e.as_f64();
                    let r = if j == 1 { 2.0 * co.r0(te) } else { -2.0 * co.r1(te) };
                    hits[j - 1].push(BoundaryHit {
                        stencil: PeriodicStencil::new(tau_e, dt, nt),
                        frac: tau_e / period,
                        c: c[edge],
                        alpha: c[edge] * S::lit(co.a(xe, te) * r),
                    });

                    // Quadrature over [0, x_i] (j = 1) or [x_i, 1] (j = 2).
                    let (lo, hi) = if j == 1 { (0, i) } else { (i, nx - 1) };
                    let mut src = S::zero();
                    if lo < hi {
                        for m in lo..=hi {
                            let xi = x_node::<f64>(m, nx);
                            let tau = curve[m];
                            let tf = tau.as_f64();
                            let p = co.point(xi, tf);
                            let b = p.b();
                            let wq = S::lit(trapezoid_weight(m, lo, hi, h));
                            // D_1 = -int_0^x d_1 (b12 u2 + a3 F u),
                            // D_2 = +int_x^1 d_2 (b21 u1 + a3 F u).
                            let sgn = if j == 1 { -S::one() } else { S::one() };
                            let coef = sgn * wq * d[m];
                            let st = PeriodicStencil::new(tau, dt, nt);
                            let bc = if j == 1 { b[1] } else { b[2] };
                            if bc != 0.0 {
                                taps[j - 1].push(Tap::new(m, st, coef * S::lit(bc)));
                            }
                            if with_a3 && p.a3 != 0.0 {
                                let scale = coef * S::lit(p.a3);
                                f_taps[j - 1].push(FTap {
                                    tap: Tap::new(m, st, scale),
                                    drift: scale * tau / period,
                                });
                            }
                            // R_1 = int_0^x d_1 f, R_2 = -int_x^1 d_2 f.
                            src += -sgn * wq * d[m] * S::lit(co.f(xi, tf));
                        }
                    }
                    let target = if j == 1 { &mut rf.first } else { &mut rf.second };
                    target.set(i, n, src);
                    starts[j - 1].push(taps[j - 1].len());
                    f_starts[j - 1].push(f_taps[j - 1].len());
                }
            }
        }

        // Times tau_j(x_m, x_i, t_n) and weights c_j(x_m, x_i, t_n) for all n.
        let leg = |j: usize, m: usize, i: usize| {
            let (stencils, weights) = (0..nt)
                .map(|n| {
                    let tau = chars.tau(j, m, i, n);
                    (PeriodicStencil::new(tau, dt, nt), kernels.c(j, 0, m, i, n))
                })
                .unzip();
            Leg { stencils, weights }
        };
        let legs = LoopLegs {
            to_left: leg(2, nx - 1, 0),
            to_right: leg(1, 0, nx - 1),
            from_left: leg(2, 0, nx - 1),
            from_right: leg(1, nx - 1, 0),
        };

        System {
            grid,
            ops,
            hits,
            taps,
            starts,
            f_taps,
            f_starts,
            rf,
            legs,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn operators(&self) -> &IntegralOperators<S> {
        &self.ops
    }

    /// `R f` for the forcing the system was built with.
    pub fn rf(&self) -> &GridPair<S> {
        &self.rf
    }

    /// Number of unknowns `2 nx nt`.
    pub fn unknowns(&self) -> usize {
        2 * self.grid.spec.len()
    }

    #[inline]
    fn node(&self, i: usize, n: usize) -> usize {
        i * self.grid.nt() + n
    }

    /// `[Bu] = (c_1(0,x,t) u2(0,tau_1(0)), c_2(1,x,t) u1(1,tau_2(1)))`.
    pub fn apply_b(&self, u: &GridPair<S>) -> GridPair<S> {
        let nx = self.grid.nx();
        let left = u.second.row(0);
        let right = u.first.row(nx - 1);
        self.map_nodes(|k| {
            let (h1, h2) = (&self.hits[0][k], &self.hits[1][k]);
            (h1.c * h1.sample(left), h2.c * h2.sample(right))
        })
    }

    /// `[Au] = (2 c_1 a r0 [Gu](tau_1(0)), -2 c_2 a r1 [Fu](1, tau_2(1)))`.
    pub fn apply_a(&self, u: &GridPair<S>) -> GridPair<S> {
        let f = self.ops.apply_f(u);
        self.apply_a_with(&f)
    }

    fn apply_a_with(&self, f: &FField<S>) -> GridPair<S> {
        let nx = self.grid.nx();
        let j_right = f.j.row(nx - 1);
        self.map_nodes(|k| {
            let (h1, h2) = (&self.hits[0][k], &self.hits[1][k]);
            let g1 = h1.sample_trace(&f.g);
            let f2 = h2.sample_trace(&f.g) + h2.sample(j_right);
            (h1.alpha * g1, h2.alpha * f2)
        })
    }

    /// `[Du]`, the lower-order couplings integrated along characteristics.
    pub fn apply_d(&self, u: &GridPair<S>) -> GridPair<S> {
        let f = self.f_taps.iter().any(|t| !t.is_empty()).then(|| self.ops.apply_f(u));
        self.apply_d_with(u, f.as_ref())
    }

    fn apply_d_with(&self, u: &GridPair<S>, f: Option<&FField<S>>) -> GridPair<S> {
        let sum = |j: usize, k: usize, rows: &GridFunction<S>| -> S {
            let mut acc = S::zero();
            for tap in &self.taps[j][self.starts[j][k]..self.starts[j][k + 1]] {
                acc += tap.apply(rows.row(tap.row as usize));
            }
            if let Some(f) = f {
                let gp = f.g.periodic_part();
                for ft in &self.f_taps[j][self.f_starts[j][k]..self.f_starts[j][k + 1]] {
                    let row = ft.tap.row as usize;
                    acc += ft.tap.apply(gp) + ft.tap.apply(f.j.row(row)) + ft.drift * f.g.drift;
                }
            }
            acc
        };
        self.map_nodes(|k| (sum(0, k, &u.second), sum(1, k, &u.first)))
    }

    /// `(A + D) u`, sharing one evaluation of `F u`.
    pub fn apply_ad(&self, u: &GridPair<S>) -> GridPair<S> {
        let f = self.ops.apply_f(u);
        let a = self.apply_a_with(&f);
        let d = self.apply_d_with(u, Some(&f));
        a.add(&d)
    }

    /// `u - Bu - Au - Du`.
    pub fn apply_operator(&self, u: &GridPair<S>) -> GridPair<S> {
        let b = self.apply_b(u);
        let ad = self.apply_ad(u);
        u.sub(&b).sub(&ad)
    }

    /// `sup |u - Bu - Au - Du - Rf|`.
    pub fn residual(&self, u: &GridPair<S>) -> S {
        self.apply_operator(u).sub(&self.rf).sup_norm()
    }

    fn map_nodes(&self, mut f: impl FnMut(usize) -> (S, S)) -> GridPair<S> {
        let (nx, nt) = (self.grid.nx(), self.grid.nt());
        let mut out = GridPair::zeros(self.grid);
        for i in 0..nx {
            for n in 0..nt {
                let (a, b) = f(self.node(i, n));
                out.first.set(i, n, a);
                out.second.set(i, n, b);
            }
        }
        out
    }

    /// Fills `u` from the boundary traces: `u1 = c_1(0) u2(0, tau_1(0)) + g1`,
    /// `u2 = c_2(1) u1(1, tau_2(1)) + g2`.
    pub(crate) fn fill_from_traces(&self, left_u2: &[S], right_u1: &[S], g: &GridPair<S>) -> GridPair<S> {
        self.map_nodes(|k| {
            let (h1, h2) = (&self.hits[0][k], &self.hits[1][k]);
            (
                h1.c * h1.sample(left_u2) + g.first.values()[k],
                h2.c * h2.sample(right_u1) + g.second.values()[k],
            )
        })
    }
}
