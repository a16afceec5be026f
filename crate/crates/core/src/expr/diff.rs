use super::{BinOp, Expr, Func, Var};

fn c(v: f64) -> Expr {
    Expr::Const(v)
}

impl Expr {
    /// Symbolic partial derivative with respect to `v`.
    ///
    /// The result is lightly folded (constant arithmetic, additive and
    /// multiplicative identities) but otherwise unsimplified.
    pub fn differentiate(&self, v: Var) -> Expr {
        derive(self, v).simplify()
    }

    /// Replaces every occurrence of `v` by `with`.
    pub fn substitute(&self, v: Var, with: &Expr) -> Expr {
        match self {
            Expr::Var(w) if *w == v => with.clone(),
            Expr::Const(_) | Expr::Pi | Expr::Var(_) => self.clone(),
            Expr::Neg(a) => Expr::neg(a.substitute(v, with)),
            Expr::Call(f, a) => Expr::call(*f, a.substitute(v, with)),
            Expr::Binary(op, a, b) => Expr::binary(*op, a.substitute(v, with), b.substitute(v, with)),
        }
    }

    /// Constant folding plus the identities `e+0`, `e*1`, `e*0`, `e^1`, `e^0`,
    /// `--e`. Not a canonicaliser.
    pub fn simplify(&self) -> Expr {
        match self {
            Expr::Const(_) | Expr::Pi | Expr::Var(_) => self.clone(),
            Expr::Neg(a) => match a.simplify() {
                Expr::Const(v) => c(-v),
                Expr::Neg(inner) => *inner,
                s => Expr::neg(s),
            },
            Expr::Call(f, a) => {
                let s = a.simplify();
                if let Expr::Const(v) = s {
                    if let Ok(r) = Expr::call(*f, c(v)).eval(&Default::default()) {
                        return c(r);
                    }
                }
                Expr::call(*f, s)
            }
            Expr::Binary(op, a, b) => {
                let l = a.simplify();
                let r = b.simplify();
                if let (Expr::Const(_), Expr::Const(_)) = (&l, &r) {
                    if let Ok(v) = Expr::binary(*op, l.clone(), r.clone()).eval(&Default::default()) {
                        return c(v);
                    }
                }
                let is = |e: &Expr, v: f64| matches!(e, Expr::Const(x) if *x == v);
                match op {
                    BinOp::Add if is(&l, 0.0) => r,
                    BinOp::Add | BinOp::Sub if is(&r, 0.0) => l,
                    BinOp::Sub if is(&l, 0.0) => Expr::neg(r).simplify(),
                    BinOp::Mul if is(&l, 0.0) || is(&r, 0.0) => c(0.0),
                    BinOp::Mul if is(&l, 1.0) => r,
                    BinOp::Mul | BinOp::Div if is(&r, 1.0) => l,
                    BinOp::Mul if is(&l, -1.0) => Expr::neg(r).simplify(),
                    BinOp::Div if is(&l, 0.0) => c(0.0),
                    BinOp::Pow if is(&r, 1.0) => l,
                    BinOp::Pow if is(&r, 0.0) => c(1.0),
                    _ => Expr::binary(*op, l, r),
                }
            }
        }
    }
}

fn derive(e: &Expr, v: Var) -> Expr {
    if !e.depends_on(v) {
        return c(0.0);
    }
    match e {
        Expr::Const(_) | Expr::Pi => c(0.0),
        Expr::Var(w) => c(if *w == v { 1.0 } else { 0.0 }),
        Expr::Neg(a) => Expr::neg(derive(a, v)),
        Expr::Binary(op, a, b) => {
            let (a, b) = (a.as_ref(), b.as_ref());
            match op {
                BinOp::Add => Expr::add(derive(a, v), derive(b, v)),
                BinOp::Sub => Expr::sub(derive(a, v), derive(b, v)),
                BinOp::Mul => Expr::add(Expr::mul(derive(a, v), b.clone()), Expr::mul(a.clone(), derive(b, v))),
                BinOp::Div => Expr::div(
                    Expr::sub(Expr::mul(derive(a, v), b.clone()), Expr::mul(a.clone(), derive(b, v))),
                    Expr::pow(b.clone(), c(2.0)),
                ),
                BinOp::Pow => {
                    if !b.depends_on(v) {
                        // n * a^(n-1) * a'
                        Expr::mul(
                            Expr::mul(b.clone(), Expr::pow(a.clone(), Expr::sub(b.clone(), c(1.0)))),
                            derive(a, v),
                        )
                    } else {
                        // a^b * (b' ln a + b a'/a)
                        Expr::mul(
                            e.clone(),
                            Expr::add(
                                Expr::mul(derive(b, v), Expr::call(Func::Log, a.clone())),
                                Expr::div(Expr::mul(b.clone(), derive(a, v)), a.clone()),
                            ),
                        )
                    }
                }
            }
        }
        Expr::Call(f, a) => {
            let inner = derive(a, v);
            let a = a.as_ref().clone();
            let outer = match f {
                Func::Sin => Expr::call(Func::Cos, a),
                Func::Cos => Expr::neg(Expr::call(Func::Sin, a)),
                Func::Exp => e.clone(),
                Func::Log => Expr::div(c(1.0), a),
                Func::Tanh => Expr::sub(c(1.0), Expr::pow(e.clone(), c(2.0))),
                Func::Sqrt => Expr::div(c(1.0), Expr::mul(c(2.0), e.clone())),
            };
            Expr::mul(outer, inner)
        }
    }
}
