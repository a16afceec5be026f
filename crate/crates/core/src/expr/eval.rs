use thiserror::Error;

use super::{BinOp, Expr, Func, Var};

/// Values bound to the free variables.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Env {
    pub x: f64,
    pub t: f64,
    pub eps: f64,
}

impl Env {
    pub fn new(x: f64, t: f64, eps: f64) -> Self {
        Env { x, t, eps }
    }

    fn get(&self, v: Var) -> f64 {
        match v {
            Var::X => self.x,
            Var::T => self.t,
            Var::Eps => self.eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{reason} in `{subexpr}`")]
pub struct EvalError {
    pub reason: String,
    /// Printed form of the subexpression that failed.
    pub subexpr: String,
}

fn domain(reason: &str, e: &Expr) -> EvalError {
    EvalError {
        reason: reason.to_string(),
        subexpr: e.to_string(),
    }
}

fn pow_checked(base: f64, exp: f64) -> Result<f64, &'static str> {
    if base < 0.0 && exp.fract() != 0.0 {
        return Err("negative base with non-integer exponent");
    }
    if base == 0.0 && exp < 0.0 {
        return Err("division by zero");
    }
    if exp == 2.0 {
        return Ok(base * base);
    }
    Ok(base.powf(exp))
}

fn call_checked(f: Func, v: f64) -> Result<f64, &'static str> {
    Ok(match f {
        Func::Sin => v.sin(),
        Func::Cos => v.cos(),
        Func::Exp => v.exp(),
        Func::Tanh => v.tanh(),
        Func::Log => {
            if v <= 0.0 {
                return Err("logarithm of non-positive value");
            }
            v.ln()
        }
        Func::Sqrt => {
            if v < 0.0 {
                return Err("square root of negative value");
            }
            v.sqrt()
        }
    })
}

impl Expr {
    /// Evaluates in IEEE double precision, reporting the innermost failing
    /// subexpression on domain errors or overflow.
    pub fn eval(&self, env: &Env) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Var(v) => env.get(*v),
            Expr::Pi => std::f64::consts::PI,
            Expr::Neg(e) => -e.eval(env)?,
            Expr::Call(f, e) => {
                let a = e.eval(env)?;
                call_checked(*f, a).map_err(|r| domain(r, self))?
            }
            Expr::Binary(op, a, b) => {
                let l = a.eval(env)?;
                let r = b.eval(env)?;
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r == 0.0 {
                            return Err(domain("division by zero", self));
                        }
                        l / r
                    }
                    BinOp::Pow => pow_checked(l, r).map_err(|m| domain(m, self))?,
                }
            }
        };
        if !v.is_finite() {
            return Err(domain("non-finite result", self));
        }
        Ok(v)
    }

    /// Flattens the tree into a postfix program for fast repeated evaluation.
    pub fn compile(&self) -> Program {
        let mut ops = Vec::with_capacity(self.size());
        emit(self, &mut ops);
        let mut depth = 0usize;
        let mut max_depth = 0usize;
        for op in &ops {
            match op {
                Op::Const(_) | Op::Var(_) => depth += 1,
                Op::Bin(_) => depth -= 1,
                Op::Neg | Op::Call(_) => {}
            }
            max_depth = max_depth.max(depth);
        }
        Program { ops, max_depth }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Op {
    Const(f64),
    Var(Var),
    Neg,
    Bin(BinOp),
    Call(Func),
}

fn emit(e: &Expr, ops: &mut Vec<Op>) {
    match e {
        Expr::Const(c) => ops.push(Op::Const(*c)),
        Expr::Pi => ops.push(Op::Const(std::f64::consts::PI)),
        Expr::Var(v) => ops.push(Op::Var(*v)),
        Expr::Neg(a) => {
            emit(a, ops);
            ops.push(Op::Neg);
        }
        Expr::Call(f, a) => {
            emit(a, ops);
            ops.push(Op::Call(*f));
        }
        Expr::Binary(op, a, b) => {
            emit(a, ops);
            emit(b, ops);
            ops.push(Op::Bin(*op));
        }
    }
}

/// Postfix form of an [`Expr`]. Domain errors evaluate to NaN instead of
/// being reported; use [`Expr::eval`] when the failing subexpression matters.
#[derive(Clone, Debug)]
pub struct Program {
    ops: Vec<Op>,
    max_depth: usize,
}

const INLINE_STACK: usize = 32;

impl Program {
    pub fn eval(&self, x: f64, t: f64, eps: f64) -> f64 {
        if self.max_depth <= INLINE_STACK {
            let mut stack = [0.0f64; INLINE_STACK];
            self.run(&mut stack, x, t, eps)
        } else {
            let mut stack = vec![0.0f64; self.max_depth];
            self.run(&mut stack, x, t, eps)
        }
    }

    /// Constant programs (a single literal) let callers skip work.
    pub fn as_constant(&self) -> Option<f64> {
        match self.ops.as_slice() {
            [Op::Const(c)] => Some(*c),
            _ => None,
        }
    }

    fn run(&self, stack: &mut [f64], x: f64, t: f64, eps: f64) -> f64 {
        let mut sp = 0usize;
        for op in &self.ops {
            match *op {
                Op::Const(c) => {
                    stack[sp] = c;
                    sp += 1;
                }
                Op::Var(v) => {
                    stack[sp] = match v {
                        Var::X => x,
                        Var::T => t,
                        Var::Eps => eps,
                    };
                    sp += 1;
                }
                Op::Neg => stack[sp - 1] = -stack[sp - 1],
                Op::Call(f) => {
                    stack[sp - 1] = call_checked(f, stack[sp - 1]).unwrap_or(f64::NAN);
                }
                Op::Bin(op) => {
                    sp -= 1;
                    let r = stack[sp];
                    let l = stack[sp - 1];
                    stack[sp - 1] = match op {
                        BinOp::Add => l + r,
                        BinOp::Sub => l - r,
                        BinOp::Mul => l * r,
                        BinOp::Div => {
                            if r == 0.0 {
                                f64::NAN
                            } else {
                                l / r
                            }
                        }
                        BinOp::Pow => pow_checked(l, r).unwrap_or(f64::NAN),
                    };
                }
            }
        }
        stack[0]
    }
}
