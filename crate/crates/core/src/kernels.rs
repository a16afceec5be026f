//! Exponential weights along characteristics:
//! `c_j^l(xi, x, t) = exp int_x^xi (-1)^j (b_jj / a - l a_t / a^2)(eta, tau_j(eta)) d eta`
//! and `d_j = (-1)^j c_j^0 / a(xi, tau_j)`.

use crate::characteristics::{family_sign, trace, x_node, CharField, Curve};
use crate::grid::Grid;
use crate::problem::Coefficients;
use crate::scalar::Real;

/// Integrand of the exponent of `c_j^l` at `(xi, tau)`.
#[inline]
pub fn kernel_rate(co: &Coefficients, j: usize, l: usize, xi: f64, tau: f64) -> f64 {
    let (b11a, b22a, at_a2) = co.kernel_rates(xi, tau);
    let bjj = if j == 1 { b11a } else { b22a };
    family_sign::<f64>(j) * (bjj - l as f64 * at_a2)
}

impl<S: Real> Curve<S> {
    /// `c_j^l` at every node of the curve.
    pub fn weights(&self, co: &Coefficients, l: usize) -> Vec<S> {
        self.integrate(|e, s| S::lit(kernel_rate(co, self.j, l, e.as_f64(), s.as_f64())))
            .into_iter()
            .map(|v| v.exp())
            .collect()
    }

    /// `c_j^l(xi)` for arbitrary `xi` in `[0, 1]`.
    pub fn weight_at(&self, co: &Coefficients, l: usize, xi: S) -> S {
        self.integrate_to(xi, |e, s| S::lit(kernel_rate(co, self.j, l, e.as_f64(), s.as_f64())))
            .exp()
    }
}

/// `c_j^l(xi, x, t)`.
pub fn compute_c<S: Real>(co: &Coefficients, j: usize, l: usize, xi: S, x: S, t: S, nx: usize) -> S {
    trace(co, j, x, t, nx).weight_at(co, l, xi)
}

/// `d_j(xi, x, t) = (-1)^j c_j(xi, x, t) / a(xi, tau_j(xi, x, t))`.
pub fn compute_d<S: Real>(co: &Coefficients, j: usize, xi: S, x: S, t: S, nx: usize) -> S {
    let curve = trace(co, j, x, t, nx);
    let tau = curve.tau_at(xi);
    let c = curve.weight_at(co, 0, xi);
    family_sign::<S>(j) * c / S::lit(co.a(xi.as_f64(), tau.as_f64()))
}

/// `c_j^l` for `l = 0..=k` and `d_j` on every node of a [`CharField`].
#[derive(Clone, Debug)]
pub struct KernelField<S> {
    grid: Grid,
    levels: usize,
    /// `c[l][j-1]`, laid out like the characteristic field.
    c: Vec<[Vec<S>; 2]>,
    d: [Vec<S>; 2],
}

impl<S: Real> KernelField<S> {
    pub fn build(co: &Coefficients, chars: &CharField<S>, k: usize) -> Self {
        let grid = *chars.grid();
        let (nx, nt) = (grid.nx(), grid.nt());
        let len = nx * nx * nt;
        let mut c: Vec<[Vec<S>; 2]> = (0..=k)
            .map(|_| [Vec::with_capacity(len), Vec::with_capacity(len)])
            .collect();
        let mut d = [Vec::with_capacity(len), Vec::with_capacity(len)];
        let half = S::lit(0.5) / S::from_index(nx - 1);
        let mut rates = vec![(S::zero(), S::zero()); nx];
        let mut speeds = vec![S::zero(); nx];
        let mut expo = vec![S::zero(); nx];
        for j in 1..=2 {
            let sign = family_sign::<S>(j);
            for i in 0..nx {
                for n in 0..nt {
                    let curve = chars.curve(j, i, n);
                    for (m, &tau) in curve.iter().enumerate() {
                        let xi = x_node::<f64>(m, nx);
                        let tau = tau.as_f64();
                        let (b11a, b22a, at_a2) = co.kernel_rates(xi, tau);
                        let bjj = if j == 1 { b11a } else { b22a };
                        rates[m] = (S::lit(bjj), S::lit(at_a2));
                        speeds[m] = S::lit(co.a(xi, tau));
                    }
                    for (l, cl) in c.iter_mut().enumerate() {
                        let lf = S::from_index(l);
                        let g = |m: usize| sign * (rates[m].0 - lf * rates[m].1);
                        expo[i] = S::zero();
                        for m in i + 1..nx {
                            expo[m] = expo[m - 1] + half * (g(m) + g(m - 1));
                        }
                        for m in (0..i).rev() {
                            expo[m] = expo[m + 1] - half * (g(m) + g(m + 1));
                        }
                        let store = &mut cl[j - 1];
                        store.extend(expo.iter().map(|e| e.exp()));
                        if l == 0 {
                            let cs = &store[store.len() - nx..];
                            d[j - 1].extend(cs.iter().zip(&speeds).map(|(&cv, &a)| sign * cv / a));
                        }
                    }
                }
            }
        }
        KernelField {
            grid,
            levels: k + 1,
            c,
            d,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Highest weight index `k`.
    pub fn k(&self) -> usize {
        self.levels - 1
    }

    #[inline]
    fn offset(&self, m: usize, i: usize, n: usize) -> usize {
        (i * self.grid.nt() + n) * self.grid.nx() + m
    }

    /// `c_j^l(x_m, x_i, t_n)`.
    #[inline]
    pub fn c(&self, j: usize, l: usize, m: usize, i: usize, n: usize) -> S {
        self.c[l][j - 1][self.offset(m, i, n)]
    }

    /// `d_j(x_m, x_i, t_n)`.
    #[inline]
    pub fn d(&self, j: usize, m: usize, i: usize, n: usize) -> S {
        self.d[j - 1][self.offset(m, i, n)]
    }

    /// `m -> c_j^l(x_m, x_i, t_n)`.
    pub fn c_curve(&self, j: usize, l: usize, i: usize, n: usize) -> &[S] {
        let start = self.offset(0, i, n);
        &self.c[l][j - 1][start..start + self.grid.nx()]
    }

    /// `m -> d_j(x_m, x_i, t_n)`.
    pub fn d_curve(&self, j: usize, i: usize, n: usize) -> &[S] {
        let start = self.offset(0, i, n);
        &self.d[j - 1][start..start + self.grid.nx()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::problem::ProblemSpec;

    fn co(a: &str, a1: &str, a2: &str) -> Coefficients {
        ProblemSpec::builder(1.0).a(a).a1(a1).a2(a2).build().unwrap().compile()
    }

    #[test]
    fn trivial_weights() {
        let co = co("1", "0", "0");
        assert_eq!(compute_c::<f64>(&co, 1, 0, 0.0, 0.6, 0.1, 17), 1.0);
        assert_eq!(compute_d::<f64>(&co, 1, 0.2, 0.6, 0.1, 17), -1.0);
        assert_eq!(compute_d::<f64>(&co, 2, 0.2, 0.6, 0.1, 17), 1.0);
        let co2 = ProblemSpec::builder(1.0).a("2").build().unwrap().compile();
        assert_eq!(compute_d::<f64>(&co2, 1, 0.2, 0.6, 0.1, 17), -0.5);
    }

    #[test]
    fn constant_coefficient_closed_form() {
        let co = co("1", "1", "0");
        let c = compute_c::<f64>(&co, 1, 0, 0.0, 1.0, 0.3, 17);
        assert!((c - 0.5f64.exp()).abs() < 1e-14);
        let d = compute_d::<f64>(&co, 1, 0.0, 1.0, 0.3, 17);
        assert!((d + 0.5f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn stationary_speed_makes_l_irrelevant() {
        let co = co("1+x", "0.4*sin(2*pi*t)", "x");
        for l in 1..4 {
            let c0 = compute_c::<f64>(&co, 2, 0, 0.9, 0.1, 0.3, 33);
            let cl = compute_c::<f64>(&co, 2, l, 0.9, 0.1, 0.3, 33);
            assert!((c0 - cl).abs() <= 1e-14 * c0);
        }
    }

    #[test]
    fn field_matches_point_values() {
        let co = co("1+0.2*sin(2*pi*(t+x))", "0.5", "x");
        let grid = Grid::new(GridSpec::new(9, 8).unwrap(), 1.0);
        let chars = CharField::<f64>::build(&co, grid);
        let kf = KernelField::build(&co, &chars, 2);
        for &(j, l, m, i, n) in &[(1, 0, 0, 8, 3), (2, 2, 8, 0, 5), (1, 1, 2, 6, 0), (2, 0, 4, 4, 7)] {
            let point = compute_c::<f64>(&co, j, l, grid.x(m), grid.x(i), grid.t(n), 9);
            assert!(
                (kf.c(j, l, m, i, n) - point).abs() < 1e-13 * point,
                "{j} {l} {m} {i} {n}"
            );
            assert_eq!(kf.c(j, l, i, i, n), 1.0);
        }
        assert!((0..9).all(|m| kf.d(1, m, 3, 2) < 0.0 && kf.d(2, m, 3, 2) > 0.0));
        let d = compute_d::<f64>(&co, 2, grid.x(7), grid.x(2), grid.t(1), 9);
        assert!((kf.d(2, 7, 2, 1) - d).abs() < 1e-13);
    }
}
