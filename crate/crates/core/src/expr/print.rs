use core::fmt;

use super::{BinOp, Expr};

// Binding strength of the grammar levels: sums, products, negation, powers,
// atoms.
const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const NEGATION: u8 = 3;
const ATOM: u8 = 5;

fn level(e: &Expr) -> u8 {
    match e {
        Expr::Const(c) if c.is_sign_negative() && *c != 0.0 => NEGATION,
        Expr::Const(_) | Expr::Var(_) | Expr::Param(_) | Expr::Call(..) => ATOM,
        Expr::Neg(_) => NEGATION,
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => SUM,
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => PRODUCT,
        Expr::Binary(BinOp::Pow, ..) => 4,
    }
}

fn child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if level(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Param(name) => f.write_str(name),
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
            Expr::Neg(a) => {
                f.write_str("-")?;
                child(f, a, NEGATION)
            }
            Expr::Binary(op, a, b) => {
                let (sym, left, right) = match op {
                    BinOp::Add => ("+", SUM, PRODUCT),
                    BinOp::Sub => ("-", SUM, PRODUCT),
                    BinOp::Mul => ("*", PRODUCT, NEGATION),
                    BinOp::Div => ("/", PRODUCT, NEGATION),
                    BinOp::Pow => ("^", ATOM, ATOM),
                };
                child(f, a, left)?;
                f.write_str(sym)?;
                // a negation right of a binary operator is parenthesised for
                // readability; the grammar would accept it bare
                let right = if level(b) == NEGATION { ATOM } else { right };
                child(f, b, right)
            }
        }
    }
}
