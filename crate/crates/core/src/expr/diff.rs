use super::{BinOp, Expr, Func, Var};

impl Expr {
    /// Symbolic partial derivative. Only trivial constant folding is applied.
    pub fn derivative(&self, var: Var) -> Expr {
        match self {
            Expr::Const(_) | Expr::Param(_) => Expr::Const(0.0),
            Expr::Var(v) => Expr::Const(if *v == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => Expr::neg(a.derivative(var)),
            Expr::Binary(op, a, b) => {
                let (da, db) = (a.derivative(var), b.derivative(var));
                let (a, b) = ((**a).clone(), (**b).clone());
                match op {
                    BinOp::Add => Expr::add(da, db),
                    BinOp::Sub => Expr::sub(da, db),
                    BinOp::Mul => Expr::add(Expr::mul(da, b.clone()), Expr::mul(a, db)),
                    BinOp::Div => Expr::div(
                        Expr::sub(Expr::mul(da, b.clone()), Expr::mul(a, db)),
                        Expr::pow(b, Expr::Const(2.0)),
                    ),
                    BinOp::Pow if !b.depends_on_chart() => {
                        // b' = 0: (a^b)' = b a^(b-1) a'
                        let lowered = Expr::pow(a, Expr::sub(b.clone(), Expr::Const(1.0)));
                        Expr::mul(Expr::mul(b, lowered), da)
                    }
                    BinOp::Pow => {
                        // (a^b)' = a^b (b' log a + b a'/a)
                        let whole = Expr::pow(a.clone(), b.clone());
                        let log_a = Expr::call(Func::Log, a.clone());
                        let inner = Expr::add(Expr::mul(db, log_a), Expr::div(Expr::mul(b, da), a));
                        Expr::mul(whole, inner)
                    }
                }
            }
            Expr::Call(func, a) => {
                let da = a.derivative(var);
                if da.as_const() == Some(0.0) {
                    return Expr::Const(0.0);
                }
                let a = (**a).clone();
                let outer = match func {
                    Func::Sin => Expr::call(Func::Cos, a),
                    Func::Cos => Expr::neg(Expr::call(Func::Sin, a)),
                    Func::Tan => Expr::div(
                        Expr::Const(1.0),
                        Expr::pow(Expr::call(Func::Cos, a), Expr::Const(2.0)),
                    ),
                    Func::Exp => Expr::call(Func::Exp, a),
                    Func::Log => Expr::div(Expr::Const(1.0), a),
                    Func::Sqrt => Expr::div(
                        Expr::Const(1.0),
                        Expr::mul(Expr::Const(2.0), Expr::call(Func::Sqrt, a)),
                    ),
                    Func::Abs => Expr::call(Func::Sign, a),
                    Func::Sign => Expr::Const(0.0),
                };
                Expr::mul(outer, da)
            }
        }
    }
}
