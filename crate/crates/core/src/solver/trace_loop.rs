//! Inversion of `I - B` through the scalar periodic equation for one
//! boundary trace.
//!
//! `(I - B) u = g` couples the nodes only through `u2(0,.)` and `u1(1,.)`.
//! Eliminating one of them leaves `v = M v + phi0` on `nt` values, where `M`
//! follows a characteristic loop from one boundary to the other and back. The
//! loop multiplies by the product of exponential weights, so fixed-point
//! iteration contracts forwards when that product is below one and backwards
//! (through the inverse loop) when it is above one.

use serde::Serialize;

use super::system::System;
use crate::error::{Error, Result};
use crate::grid::GridPair;
use crate::resonance::{ResonanceReport, NEAR_RESONANCE};
use crate::scalar::Real;

/// Which boundary trace is the unknown of the scalar equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopVariant {
    /// `u1(1,.)`, loop product `c_1(0,1,t) c_2(1,0,tau_1(0,1,t))`.
    RightTrace,
    /// `u2(0,.)`, loop product `c_2(1,0,t) c_1(0,1,tau_2(1,0,t))`.
    LeftTrace,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

/// A contracting formulation of the trace equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LoopPlan {
    pub variant: LoopVariant,
    pub direction: Direction,
    /// Expected contraction factor: `max q` forwards, `1 / min q` backwards.
    pub factor: f64,
}

impl LoopPlan {
    /// Picks the variant and direction with the smallest contraction
    /// factor. Fails when every loop product comes within the
    /// near-resonance band around 1.
    pub fn choose(report: &ResonanceReport) -> Result<Self> {
        let mut best: Option<LoopPlan> = None;
        for (variant, f) in [
            (LoopVariant::RightTrace, &report.factors),
            (LoopVariant::LeftTrace, &report.factors_plus),
        ] {
            let (qmax, qmin) = (f.q[0], f.q_min[0]);
            let mut consider = |direction, factor: f64| {
                if best.is_none_or(|b| factor < b.factor) {
                    best = Some(LoopPlan {
                        variant,
                        direction,
                        factor,
                    });
                }
            };
            if qmax < 1.0 - NEAR_RESONANCE {
                consider(Direction::Forward, qmax);
            }
            if qmin > 1.0 + NEAR_RESONANCE {
                consider(Direction::Backward, 1.0 / qmin);
            }
        }
        best.ok_or(Error::NearResonance {
            q_min: report.factors.q_min[0],
            q_max: report.factors.q[0],
        })
    }

    /// Forces a variant, choosing the direction from its loop product.
    pub fn for_variant(report: &ResonanceReport, variant: LoopVariant) -> Result<Self> {
        let f = match variant {
            LoopVariant::RightTrace => &report.factors,
            LoopVariant::LeftTrace => &report.factors_plus,
        };
        let (qmax, qmin) = (f.q[0], f.q_min[0]);
        if qmax < 1.0 - NEAR_RESONANCE {
            Ok(LoopPlan {
                variant,
                direction: Direction::Forward,
                factor: qmax,
            })
        } else if qmin > 1.0 + NEAR_RESONANCE {
            Ok(LoopPlan {
                variant,
                direction: Direction::Backward,
                factor: 1.0 / qmin,
            })
        } else {
            Err(Error::NearResonance {
                q_min: qmin,
                q_max: qmax,
            })
        }
    }
}

/// Convergence record of one inversion.
#[derive(Clone, Debug, Serialize)]
pub struct InvertReport {
    pub plan: LoopPlan,
    pub iterations: usize,
    /// Ratios of successive update norms of the main iteration.
    pub ratios: Vec<f64>,
    /// Defect-correction rounds after the backward iteration.
    pub corrections: usize,
    /// `sup |M v + phi0 - v|` at exit.
    pub trace_defect: f64,
}

const MAX_CORRECTIONS: usize = 50;

fn sup<S: Real>(v: &[S]) -> S {
    v.iter().fold(S::zero(), |m, x| m.max(x.abs()))
}

/// Solves `(I - B) u = g`.
pub fn invert_i_minus_b<S: Real>(
    system: &System<S>,
    g: &GridPair<S>,
    plan: LoopPlan,
    tol: S,
    max_iter: usize,
) -> Result<(GridPair<S>, InvertReport)> {
    let nx = system.grid().nx();
    let nt = system.grid().nt();
    let legs = &system.legs;
    let g1_right = g.first.row(nx - 1);
    let g2_left = g.second.row(0);
    let zeros = vec![S::zero(); nt];

    let phi = |v: &[S]| -> Vec<S> {
        match plan.variant {
            LoopVariant::RightTrace => legs.to_right.apply(&legs.to_left.apply(v, g2_left), g1_right),
            LoopVariant::LeftTrace => legs.to_left.apply(&legs.to_right.apply(v, g1_right), g2_left),
        }
    };
    // Approximate inverse of the linear part of `phi`.
    let inverse = |v: &[S]| -> Vec<S> {
        match plan.variant {
            LoopVariant::RightTrace => legs.from_left.apply_linear(&legs.from_right.apply_linear(v)),
            LoopVariant::LeftTrace => legs.from_right.apply_linear(&legs.from_left.apply_linear(v)),
        }
    };

    let mut ratios = Vec::new();
    let mut iterations = 0;
    let mut corrections = 0;
    let mut v = zeros.clone();
    let mut record = |prev: &mut Option<S>, upd: S| {
        if let Some(p) = *prev {
            if p > S::zero() && upd > S::zero() {
                ratios.push((upd / p).as_f64());
            }
        }
        *prev = Some(upd);
    };

    match plan.direction {
        Direction::Forward => {
            let mut prev = None;
            loop {
                let next = phi(&v);
                let upd = next.iter().zip(&v).fold(S::zero(), |m, (a, b)| m.max((*a - *b).abs()));
                v = next;
                iterations += 1;
                record(&mut prev, upd);
                if !upd.is_finite() {
                    return Err(Error::NonFinite("trace iteration".into()));
                }
                if upd <= tol || iterations >= max_iter {
                    break;
                }
            }
        }
        Direction::Backward => {
            // Defect correction: solve (I - M) delta = rho with the
            // contracting iteration delta <- K (delta - rho), K ~ M^{-1}.
            let mut first_round = true;
            loop {
                let rho: Vec<S> = phi(&v).iter().zip(&v).map(|(a, b)| *a - *b).collect();
                if sup(&rho) <= tol || corrections >= MAX_CORRECTIONS || iterations >= max_iter {
                    break;
                }
                let mut delta = zeros.clone();
                let mut prev = None;
                loop {
                    let shifted: Vec<S> = delta.iter().zip(&rho).map(|(d, r)| *d - *r).collect();
                    let next = inverse(&shifted);
                    let upd = next
                        .iter()
                        .zip(&delta)
                        .fold(S::zero(), |m, (a, b)| m.max((*a - *b).abs()));
                    delta = next;
                    iterations += 1;
                    if first_round {
                        record(&mut prev, upd);
                    }
                    if !upd.is_finite() {
                        return Err(Error::NonFinite("trace iteration".into()));
                    }
                    if upd <= tol * S::lit(0.1) || iterations >= max_iter {
                        break;
                    }
                }
                for (vi, di) in v.iter_mut().zip(&delta) {
                    *vi += *di;
                }
                if !first_round {
                    corrections += 1;
                }
                first_round = false;
            }
        }
    }

    let residual: Vec<S> = phi(&v).iter().zip(&v).map(|(a, b)| *a - *b).collect();
    let u = match plan.variant {
        LoopVariant::RightTrace => {
            let left = legs.to_left.apply(&v, g2_left);
            system.fill_from_traces(&left, &v, g)
        }
        LoopVariant::LeftTrace => {
            let right = legs.to_right.apply(&v, g1_right);
            system.fill_from_traces(&v, &right, g)
        }
    };
    Ok((
        u,
        InvertReport {
            plan,
            iterations,
            ratios,
            corrections,
            trace_defect: sup(&residual).as_f64(),
        },
    ))
}
