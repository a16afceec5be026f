//! Interpolation, quadrature and finite-difference helpers.

use crate::scalar::Real;

/// Four-point Lagrange stencil on a periodic uniform grid.
#[derive(Clone, Copy, Debug)]
pub struct PeriodicStencil<S> {
    /// Index of the node left of the evaluation point, already wrapped.
    pub base: usize,
    pub weights: [S; 4],
}

impl<S: Real> PeriodicStencil<S> {
    /// Stencil for evaluating at unwrapped time `tau` on `n` nodes of
    /// spacing `dt` starting at zero.
    #[inline]
    pub fn new(tau: S, dt: S, n: usize) -> Self {
        let s = tau / dt;
        let k = s.floor();
        let f = s - k;
        let one = S::one();
        let two = S::lit(2.0);
        let six = S::lit(6.0);
        let weights = [
            -f * (f - one) * (f - two) / six,
            (f + one) * (f - one) * (f - two) / two,
            -(f + one) * f * (f - two) / two,
            (f + one) * f * (f - one) / six,
        ];
        let k = k.to_i64().expect("finite time");
        let base = k.rem_euclid(n as i64) as usize;
        PeriodicStencil { base, weights }
    }

    #[inline]
    pub fn apply(&self, samples: &[S]) -> S {
        let n = samples.len();
        let b = self.base;
        let im1 = if b == 0 { n - 1 } else { b - 1 };
        let ip1 = if b + 1 == n { 0 } else { b + 1 };
        let ip2 = if ip1 + 1 == n { 0 } else { ip1 + 1 };
        self.weights[0] * samples[im1]
            + self.weights[1] * samples[b]
            + self.weights[2] * samples[ip1]
            + self.weights[3] * samples[ip2]
    }

    /// Node indices matching `weights`.
    #[inline]
    pub fn nodes(&self, n: usize) -> [usize; 4] {
        let b = self.base;
        [(b + n - 1) % n, b, (b + 1) % n, (b + 2) % n]
    }
}

/// Periodic cubic interpolation of uniformly spaced samples.
#[inline]
pub fn periodic_cubic<S: Real>(samples: &[S], dt: S, tau: S) -> S {
    PeriodicStencil::new(tau, dt, samples.len()).apply(samples)
}

/// Cumulative trapezoid of uniformly spaced samples; `out[0] = 0`.
pub fn cumulative_trapezoid<S: Real>(values: &[S], h: S) -> Vec<S> {
    let half = S::lit(0.5) * h;
    let mut out = Vec::with_capacity(values.len());
    let mut acc = S::zero();
    out.push(acc);
    for w in values.windows(2) {
        acc += half * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Trapezoid rule over a full period of periodic samples.
pub fn periodic_trapezoid<S: Real>(values: &[S], h: S) -> S {
    values.iter().copied().sum::<S>() * h
}

/// Composite trapezoid over samples at uniform spacing.
pub fn trapezoid<S: Real>(values: &[S], h: S) -> S {
    match values.len() {
        0 | 1 => S::zero(),
        n => {
            let inner: S = values[1..n - 1].iter().copied().sum();
            h * (inner + S::lit(0.5) * (values[0] + values[n - 1]))
        }
    }
}

/// Composite Simpson over an odd number of uniformly spaced samples; falls
/// back to Simpson plus a final 3/8 panel for even counts.
pub fn simpson<S: Real>(values: &[S], h: S) -> S {
    let n = values.len();
    if n < 3 {
        return trapezoid(values, h);
    }
    let panels_end = if n % 2 == 1 { n } else { n - 3 };
    let mut acc = S::zero();
    let mut k = 0;
    while k + 2 < panels_end {
        acc += values[k] + S::lit(4.0) * values[k + 1] + values[k + 2];
        k += 2;
    }
    let mut total = acc * h / S::lit(3.0);
    if n.is_multiple_of(2) {
        let m = n - 4;
        total +=
            S::lit(3.0) * h / S::lit(8.0) * (values[m] + S::lit(3.0) * (values[m + 1] + values[m + 2]) + values[m + 3]);
    }
    total
}

/// Finite-difference weights for derivatives `0..=order` at `z` from nodes
/// `xs` (Fornberg's recursion). `result[m][k]` weights node `k` for the
/// `m`-th derivative.
pub fn fd_weights(z: f64, xs: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; order + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Fourth-order accurate derivative of order 1 or 2 along a non-periodic
/// uniform line, one-sided near the ends.
pub fn derivative_line(values: &[f64], h: f64, order: usize) -> Vec<f64> {
    assert!(order == 1 || order == 2);
    let n = values.len();
    let width = if order == 1 { 5 } else { 6 };
    assert!(n >= width, "line too short for a fourth-order stencil");
    let mut out = vec![0.0; n];
    for (k, o) in out.iter_mut().enumerate() {
        let interior = k >= 2 && k + 2 < n;
        let len = if interior || order == 1 { 5 } else { width };
        let start = if interior {
            k - 2
        } else if k < 2 {
            0
        } else {
            n - len
        };
        let xs: Vec<f64> = (start..start + len).map(|m| (m as f64 - k as f64) * h).collect();
        let w = fd_weights(0.0, &xs, order);
        *o = w[order]
            .iter()
            .zip(&values[start..start + len])
            .map(|(a, b)| a * b)
            .sum();
    }
    out
}

/// Fourth-order centred derivative of order 1 or 2 of periodic samples.
pub fn derivative_periodic(values: &[f64], h: f64, order: usize) -> Vec<f64> {
    let n = values.len();
    let at = |k: isize| values[k.rem_euclid(n as isize) as usize];
    (0..n as isize)
        .map(|k| match order {
            1 => (-at(k + 2) + 8.0 * at(k + 1) - 8.0 * at(k - 1) + at(k - 2)) / (12.0 * h),
            2 => (-at(k + 2) + 16.0 * at(k + 1) - 30.0 * at(k) + 16.0 * at(k - 1) - at(k - 2)) / (12.0 * h * h),
            _ => panic!("derivative order must be 1 or 2"),
        })
        .collect()
}

/// Monotone cubic Hermite interpolant (Fritsch-Carlson slopes) through
/// strictly increasing abscissae.
#[derive(Clone, Debug)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let n = xs.len();
        assert!(n >= 2 && ys.len() == n);
        let secants: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k])).collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for k in 1..n - 1 {
            slopes[k] = if secants[k - 1] * secants[k] <= 0.0 {
                0.0
            } else {
                0.5 * (secants[k - 1] + secants[k])
            };
        }
        Self::limited(xs, ys, slopes)
    }

    /// Hermite interpolant with given nodal slopes, limited where needed to
    /// keep each segment monotone.
    pub fn with_slopes(xs: Vec<f64>, ys: Vec<f64>, slopes: Vec<f64>) -> Self {
        assert!(xs.len() >= 2 && ys.len() == xs.len() && slopes.len() == xs.len());
        Self::limited(xs, ys, slopes)
    }

    fn limited(xs: Vec<f64>, ys: Vec<f64>, mut slopes: Vec<f64>) -> Self {
        let n = xs.len();
        for k in 0..n - 1 {
            let secant = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
            if secant == 0.0 {
                slopes[k] = 0.0;
                slopes[k + 1] = 0.0;
                continue;
            }
            let a = slopes[k] / secant;
            let b = slopes[k + 1] / secant;
            if a < 0.0 {
                slopes[k] = 0.0;
            }
            if b < 0.0 {
                slopes[k + 1] = 0.0;
            }
            let (a, b) = (a.max(0.0), b.max(0.0));
            let s = a * a + b * b;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                slopes[k] = tau * a * secant;
                slopes[k + 1] = tau * b * secant;
            }
        }
        MonotoneCubic { xs, ys, slopes }
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.partition_point(|&v| v <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = self.segment(x);
        let h = self.xs[k + 1] - self.xs[k];
        let s = (x - self.xs[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.ys[k] + h10 * h * self.slopes[k] + h01 * self.ys[k + 1] + h11 * h * self.slopes[k + 1]
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let k = self.segment(x);
        let h = self.xs[k + 1] - self.xs[k];
        let s = (x - self.xs[k]) / h;
        let s2 = s * s;
        let d00 = (6.0 * s2 - 6.0 * s) / h;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = (-6.0 * s2 + 6.0 * s) / h;
        let d11 = 3.0 * s2 - 2.0 * s;
        d00 * self.ys[k] + d10 * self.slopes[k] + d01 * self.ys[k + 1] + d11 * self.slopes[k + 1]
    }
}
