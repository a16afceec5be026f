//! Characteristic curves `d tau_j / d xi = (-1)^j / a(xi, tau_j)`,
//! `tau_j(x; x, t) = t`, their partial derivatives with respect to the base
//! point and their inverses in `xi`.
//!
//! Curves are integrated with classical RK4 on the `x` grid, so every later
//! quadrature along a characteristic reuses the same nodes. Times are kept
//! unwrapped; only coefficient evaluation reduces them modulo the period.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::numeric::{periodic_cubic, MonotoneCubic};
use crate::problem::Coefficients;
use crate::scalar::Real;

/// `(-1)^j` for the family index `j` in `{1, 2}`.
#[inline]
pub fn family_sign<S: Real>(j: usize) -> S {
    match j {
        1 => -S::one(),
        2 => S::one(),
        _ => panic!("characteristic family must be 1 or 2, got {j}"),
    }
}

#[inline]
fn speed<S: Real>(co: &Coefficients, xi: S, tau: S) -> S {
    S::lit(co.a(xi.as_f64(), tau.as_f64()))
}

#[inline]
fn rk4_step<S: Real>(co: &Coefficients, sign: S, xi: S, tau: S, h: S) -> S {
    let rhs = |xi: S, tau: S| sign / speed(co, xi, tau);
    let half = S::lit(0.5) * h;
    let k1 = rhs(xi, tau);
    let k2 = rhs(xi + half, tau + half * k1);
    let k3 = rhs(xi + half, tau + half * k2);
    let k4 = rhs(xi + h, tau + h * k3);
    tau + h / S::lit(6.0) * (k1 + S::lit(2.0) * (k2 + k3) + k4)
}

/// `m`-th node of the uniform `x` grid with `nx` points.
#[inline]
pub fn x_node<S: Real>(m: usize, nx: usize) -> S {
    if m + 1 == nx {
        S::one()
    } else {
        S::from_index(m) / S::from_index(nx - 1)
    }
}

/// One characteristic sampled at the `x` grid nodes, plus the base point
/// itself when it lies between nodes.
#[derive(Clone, Debug)]
pub struct Curve<S> {
    pub j: usize,
    pub x: S,
    pub t: S,
    /// Increasing abscissae covering `[0, 1]`.
    pub xi: Vec<S>,
    pub tau: Vec<S>,
    /// `d tau / d xi` at the nodes.
    pub slope: Vec<S>,
    /// Position of the base point in `xi`.
    pub base: usize,
    inserted: bool,
}

/// Integrates the `j`-th characteristic through `(x, t)` across `[0, 1]`
/// with step `1/(nx-1)`. An off-grid `x` gets a shorter first step in each
/// direction.
pub fn trace<S: Real>(co: &Coefficients, j: usize, x: S, t: S, nx: usize) -> Curve<S> {
    let sign = family_sign::<S>(j);
    let h = S::one() / S::from_index(nx - 1);
    let snap = S::lit(1e-12);
    let pos = (x / h).round().to_usize().unwrap_or(0).min(nx - 1);
    let on_grid = (x - x_node::<S>(pos, nx)).abs() <= snap;

    let mut xi: Vec<S> = Vec::with_capacity(nx + 1);
    let base;
    if on_grid {
        xi.extend((0..nx).map(|m| x_node::<S>(m, nx)));
        base = pos;
    } else {
        let left = (x / h).floor().to_usize().unwrap_or(0).min(nx - 2);
        xi.extend((0..=left).map(|m| x_node::<S>(m, nx)));
        base = xi.len();
        xi.push(x);
        xi.extend((left + 1..nx).map(|m| x_node::<S>(m, nx)));
    }
    let x = xi[base];

    let mut tau = vec![S::zero(); xi.len()];
    tau[base] = t;
    for k in base + 1..xi.len() {
        tau[k] = rk4_step(co, sign, xi[k - 1], tau[k - 1], xi[k] - xi[k - 1]);
    }
    for k in (0..base).rev() {
        tau[k] = rk4_step(co, sign, xi[k + 1], tau[k + 1], xi[k] - xi[k + 1]);
    }
    let slope = xi.iter().zip(&tau).map(|(&e, &s)| sign / speed(co, e, s)).collect();
    Curve {
        j,
        x,
        t,
        xi,
        tau,
        slope,
        base,
        inserted: !on_grid,
    }
}

impl<S: Real> Curve<S> {
    /// `tau` at the grid nodes only, leaving out an inserted base point.
    pub fn grid_tau(&self) -> Vec<S> {
        self.tau
            .iter()
            .enumerate()
            .filter(|&(k, _)| !(self.inserted && k == self.base))
            .map(|(_, &v)| v)
            .collect()
    }

    fn hermite(&self) -> MonotoneCubic {
        let f = |v: &Vec<S>| v.iter().map(|s| s.as_f64()).collect::<Vec<_>>();
        MonotoneCubic::with_slopes(f(&self.xi), f(&self.tau), f(&self.slope))
    }

    /// Interpolated `tau_j(xi)` for `xi` in `[0, 1]`.
    pub fn tau_at(&self, xi: S) -> S {
        S::lit(self.hermite().eval(xi.as_f64()))
    }

    /// `int_x^{xi_k} g(eta, tau_j(eta)) d eta` at every node, by the
    /// trapezoid rule on the curve nodes.
    pub fn integrate(&self, mut g: impl FnMut(S, S) -> S) -> Vec<S> {
        let vals: Vec<S> = self.xi.iter().zip(&self.tau).map(|(&e, &s)| g(e, s)).collect();
        let half = S::lit(0.5);
        let mut out = vec![S::zero(); vals.len()];
        for k in self.base + 1..vals.len() {
            out[k] = out[k - 1] + half * (self.xi[k] - self.xi[k - 1]) * (vals[k] + vals[k - 1]);
        }
        for k in (0..self.base).rev() {
            out[k] = out[k + 1] - half * (self.xi[k + 1] - self.xi[k]) * (vals[k] + vals[k + 1]);
        }
        out
    }

    /// `int_x^{xi} g(eta, tau_j(eta)) d eta` for arbitrary `xi` in `[0, 1]`;
    /// the partial segment uses the trapezoid with the interpolated time.
    pub fn integrate_to(&self, xi: S, mut g: impl FnMut(S, S) -> S) -> S {
        let cum = self.integrate(&mut g);
        let n = self.xi.len();
        let k = self.xi.partition_point(|&v| v <= xi).clamp(1, n - 1) - 1;
        let half = S::lit(0.5);
        // Integrate from the node nearer the base so the partial segment
        // never crosses it.
        let anchor = if k < self.base { k + 1 } else { k };
        if xi == self.xi[anchor] {
            return cum[anchor];
        }
        let tau = self.tau_at(xi);
        let ga = g(self.xi[anchor], self.tau[anchor]);
        cum[anchor] + half * (xi - self.xi[anchor]) * (ga + g(xi, tau))
    }

    /// `(d tau_j / d x, d tau_j / d t)` at `xi`:
    /// `d_t tau_j = exp int_xi^x (-1)^j (a_t / a^2)(eta, tau_j) d eta` and
    /// `d_x tau_j = (-1)^(j+1) d_t tau_j / a(x, t)`.
    pub fn partials(&self, co: &Coefficients, xi: S) -> (S, S) {
        let sign = family_sign::<S>(self.j);
        let rate = |e: S, s: S| {
            let (e, s) = (e.as_f64(), s.as_f64());
            let a = co.a(e, s);
            S::lit(co.a_t(e, s) / (a * a))
        };
        // integrate_to runs from x to xi; the formula runs from xi to x.
        let dt = (-sign * self.integrate_to(xi, rate)).exp();
        let dx = -sign * dt / speed(co, self.x, self.t);
        (dx, dt)
    }

    /// Time range `[min, max]` swept over `xi` in `[0, 1]`.
    pub fn time_range(&self) -> (S, S) {
        let (a, b) = (self.tau[0], self.tau[self.tau.len() - 1]);
        (a.min(b), a.max(b))
    }

    /// Solves `tau_j(xi) = tau` for `xi` by bisection on the Hermite
    /// interpolant followed by one Newton step.
    pub fn inverse(&self, tau: S) -> Result<S> {
        let (lo, hi) = self.time_range();
        let slack = S::lit(1e-12) * (S::one() + tau.abs());
        if !(tau >= lo - slack && tau <= hi + slack) {
            return Err(Error::OutOfRange {
                tau: tau.as_f64(),
                lo: lo.as_f64(),
                hi: hi.as_f64(),
            });
        }
        let target = tau.as_f64();
        let curve = self.hermite();
        let increasing = self.j == 2;
        let xs = curve.xs();
        // Bracket on the nodes first, then bisect inside the segment.
        let tau_f: Vec<f64> = self.tau.iter().map(|v| v.as_f64()).collect();
        let k = if increasing {
            tau_f.partition_point(|&v| v <= target)
        } else {
            tau_f.partition_point(|&v| v >= target)
        }
        .clamp(1, xs.len() - 1)
            - 1;
        let (mut a, mut b) = (xs[k], xs[k + 1]);
        let below = |x: f64| (curve.eval(x) < target) == increasing;
        for _ in 0..60 {
            let mid = 0.5 * (a + b);
            if below(mid) {
                a = mid;
            } else {
                b = mid;
            }
            if b - a <= 1e-15 {
                break;
            }
        }
        let mut root = 0.5 * (a + b);
        let d = curve.derivative(root);
        if d != 0.0 {
            let step = (curve.eval(root) - target) / d;
            if step.abs() <= (xs[k + 1] - xs[k]) {
                root -= step;
            }
        }
        Ok(S::lit(root.clamp(0.0, 1.0)))
    }

    /// `(d xi~ / d x, d xi~ / d t)` of the inverse trace at time `tau`:
    /// with `E = exp int_x^{xi~} (a_x / a)(eta, tau_j(eta)) d eta`,
    /// `d_x xi~ = E` and `d_t xi~ = (-1)^(j+1) a(x, t) E`.
    pub fn inverse_partials(&self, co: &Coefficients, tau: S) -> Result<(S, S)> {
        let root = self.inverse(tau)?;
        let rate = |e: S, s: S| {
            let (e, s) = (e.as_f64(), s.as_f64());
            S::lit(co.a_x(e, s) / co.a(e, s))
        };
        let e = self.integrate_to(root, rate).exp();
        let sign = family_sign::<S>(self.j);
        Ok((e, -sign * speed(co, self.x, self.t) * e))
    }
}

/// `(d tau_j / d x, d tau_j / d t)` at `(xi, x, t)`.
pub fn tau_partials<S: Real>(co: &Coefficients, j: usize, xi: S, x: S, t: S, nx: usize) -> (S, S) {
    trace(co, j, x, t, nx).partials(co, xi)
}

/// `xi~ = tau~_j(tau, x, t)`, the point where the `j`-th characteristic
/// through `(x, t)` reaches time `tau`.
pub fn inverse_trace<S: Real>(co: &Coefficients, j: usize, tau: S, x: S, t: S, nx: usize) -> Result<S> {
    trace(co, j, x, t, nx).inverse(tau)
}

/// Both families of characteristics through every grid point, sampled at
/// every `x` node.
#[derive(Clone, Debug)]
pub struct CharField<S> {
    grid: Grid,
    /// `tau[j-1][(i * nt + n) * nx + m] = tau_j(x_m, x_i, t_n)`.
    tau: [Vec<S>; 2],
}

impl<S: Real> CharField<S> {
    pub fn build(co: &Coefficients, grid: Grid) -> Self {
        let (nx, nt) = (grid.nx(), grid.nt());
        let mut tau = [Vec::with_capacity(nx * nx * nt), Vec::with_capacity(nx * nx * nt)];
        for (jj, store) in tau.iter_mut().enumerate() {
            for i in 0..nx {
                for n in 0..nt {
                    let c = trace(co, jj + 1, x_node::<S>(i, nx), S::lit(grid.t(n)), nx);
                    store.extend_from_slice(&c.tau);
                }
            }
        }
        CharField { grid, tau }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `tau_j(x_m, x_i, t_n)`.
    #[inline]
    pub fn tau(&self, j: usize, m: usize, i: usize, n: usize) -> S {
        let nx = self.grid.nx();
        self.tau[j - 1][(i * self.grid.nt() + n) * nx + m]
    }

    /// The whole curve `m -> tau_j(x_m, x_i, t_n)`.
    #[inline]
    pub fn curve(&self, j: usize, i: usize, n: usize) -> &[S] {
        let nx = self.grid.nx();
        let start = (i * self.grid.nt() + n) * nx;
        &self.tau[j - 1][start..start + nx]
    }

    /// `tau_j(x_m, x_i, t)` for off-grid `t`: periodic cubic interpolation
    /// of `tau_j - t`, which is `T`-periodic in the base time.
    pub fn tau_at_time(&self, j: usize, m: usize, i: usize, t: S) -> S {
        let nt = self.grid.nt();
        let dt = S::lit(self.grid.dt());
        let samples: Vec<S> = (0..nt).map(|n| self.tau(j, m, i, n) - S::lit(self.grid.t(n))).collect();
        t + periodic_cubic(&samples, dt, t)
    }

    /// Writes every sampled point as `j,x,t,xi,tau`.
    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "j,x,t,xi,tau")?;
        let (nx, nt) = (self.grid.nx(), self.grid.nt());
        for j in 1..=2 {
            for i in 0..nx {
                for n in 0..nt {
                    for (m, tau) in self.curve(j, i, n).iter().enumerate() {
                        writeln!(
                            out,
                            "{j},{:.16e},{:.16e},{:.16e},{:.16e}",
                            self.grid.x(i),
                            self.grid.t(n),
                            self.grid.x(m),
                            tau.as_f64()
                        )?;
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::problem::ProblemSpec;

    fn coeffs(a: &str) -> Coefficients {
        ProblemSpec::builder(1.0).a(a).build().unwrap().compile()
    }

    #[test]
    fn constant_speed_closed_forms() {
        let co = coeffs("1");
        let c = trace::<f64>(&co, 1, 1.0, 0.0, 17);
        assert!((c.tau[0] - 1.0).abs() < 1e-14);
        let c = trace::<f64>(&co, 1, 0.3, 0.2, 17);
        for (&xi, &tau) in c.xi.iter().zip(&c.tau) {
            assert!((tau - (0.2 + 0.3 - xi)).abs() < 1e-13);
        }
        let co = coeffs("2");
        assert!((trace::<f64>(&co, 1, 1.0, 0.0, 17).tau[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn linear_speed_gives_log() {
        let co = coeffs("1+x");
        let c = trace::<f64>(&co, 1, 1.0, 0.0, 256);
        assert!((c.tau[0] - 2f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn base_point_is_exact() {
        let co = coeffs("1+0.3*sin(2*pi*(x+t))");
        for &x in &[0.0, 0.25, 0.3, 1.0] {
            let c = trace::<f64>(&co, 2, x, 0.7, 9);
            assert_eq!(c.tau[c.base], 0.7);
            assert_eq!(c.xi[c.base], x);
            assert_eq!(c.grid_tau().len(), 9);
        }
    }

    #[test]
    fn unit_speed_partials() {
        let co = coeffs("1");
        let (dx, dt) = tau_partials::<f64>(&co, 1, 0.2, 0.7, 0.1, 17);
        assert!((dx - 1.0).abs() < 1e-14 && (dt - 1.0).abs() < 1e-14);
        let (dx, dt) = tau_partials::<f64>(&co, 2, 0.2, 0.7, 0.1, 17);
        assert!((dx + 1.0).abs() < 1e-14 && (dt - 1.0).abs() < 1e-14);
    }

    #[test]
    fn inverse_examples() {
        let co = coeffs("1");
        assert!(inverse_trace::<f64>(&co, 1, 1.0, 1.0, 0.0, 17).unwrap().abs() < 1e-12);
        assert!((inverse_trace::<f64>(&co, 2, 0.5, 0.0, 0.0, 17).unwrap() - 0.5).abs() < 1e-12);
        let co = coeffs("2");
        assert!((inverse_trace::<f64>(&co, 1, 0.25, 1.0, 0.0, 17).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(
            inverse_trace::<f64>(&co, 1, 2.0, 1.0, 0.0, 17),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn field_matches_point_traces_and_is_monotone() {
        let co = coeffs("1+0.2*cos(2*pi*t)*x");
        let grid = Grid::new(GridSpec::new(9, 8).unwrap(), 1.0);
        let f = CharField::<f64>::build(&co, grid);
        for i in 0..9 {
            for n in 0..8 {
                let c1 = f.curve(1, i, n);
                let c2 = f.curve(2, i, n);
                assert!(c1.windows(2).all(|w| w[1] < w[0]));
                assert!(c2.windows(2).all(|w| w[1] > w[0]));
                assert_eq!(c1[i], grid.t(n));
            }
        }
        let c = trace::<f64>(&co, 2, grid.x(3), grid.t(5), 9);
        assert_eq!(c.tau, f.curve(2, 3, 5));
        // Interpolating in base time reproduces grid values.
        assert!((f.tau_at_time(1, 0, 3, grid.t(5)) - f.tau(1, 0, 3, 5)).abs() < 1e-14);
    }

    #[test]
    fn single_precision_trace() {
        let co = coeffs("1+x");
        let c = trace::<f32>(&co, 1, 1.0, 0.0, 64);
        assert!((c.tau[0] - 2f32.ln()).abs() < 1e-5);
    }

    #[test]
    fn csv_header() {
        let co = coeffs("1");
        let f = CharField::<f64>::build(&co, Grid::new(GridSpec::new(9, 8).unwrap(), 1.0));
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("j,x,t,xi,tau\n"));
        assert_eq!(text.lines().count(), 1 + 2 * 9 * 8 * 9);
    }
}
