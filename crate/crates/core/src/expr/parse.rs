//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | atom ('^' atom)?
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};

use super::{BinOp, Expr, Func, Var};
use crate::error::{Error, Result};

pub fn parse_expression(src: &str) -> Result<Expr> {
    let mut parser = Parser { src, pos: 0 };
    let expr = parser.expr()?;
    parser.skip_ws();
    if parser.pos < src.len() {
        return Err(parser.syntax(format!(
            "unexpected `{}`",
            parser.rest().chars().next().unwrap_or(' ')
        )));
    }
    Ok(expr)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.as_bytes().get(self.pos).copied()
    }

    fn eat(&mut self, byte: u8) -> bool {
        if self.peek() == Some(byte) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn syntax(&self, message: String) -> Error {
        Error::Syntax {
            offset: self.pos,
            message,
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.atom()?;
        if self.eat(b'^') {
            let exponent = self.atom()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of input".to_string())),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.syntax("expected `)`".to_string()));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(c) => Err(self.syntax(format!("unexpected `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let digits = |pos: &mut usize| {
            let from = *pos;
            while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
                *pos += 1;
            }
            *pos - from
        };
        let mut pos = self.pos;
        let mut count = digits(&mut pos);
        if pos < bytes.len() && bytes[pos] == b'.' {
            pos += 1;
            count += digits(&mut pos);
        }
        if count == 0 {
            return Err(self.syntax("malformed number".to_string()));
        }
        if pos < bytes.len() && (bytes[pos] == b'e' || bytes[pos] == b'E') {
            let mut exp_pos = pos + 1;
            if exp_pos < bytes.len() && (bytes[exp_pos] == b'+' || bytes[exp_pos] == b'-') {
                exp_pos += 1;
            }
            if digits(&mut exp_pos) > 0 {
                pos = exp_pos;
            }
        }
        let text = &self.src[start..pos];
        let value: f64 = text.parse().map_err(|_| Error::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })?;
        self.pos = pos;
        Ok(Expr::Const(value))
    }

    fn ident(&mut self) -> Result<Expr> {
        let start = self.pos;
        let len = self
            .rest()
            .bytes()
            .take_while(|c| c.is_ascii_alphanumeric() || *c == b'_')
            .count();
        self.pos += len;
        let name = &self.src[start..self.pos];
        let func = Func::from_name(name);
        if self.peek() == Some(b'(') {
            let Some(func) = func else {
                return Err(Error::UnknownIdentifier {
                    name: name.to_string(),
                    offset: start,
                });
            };
            self.pos += 1;
            let arg = self.expr()?;
            let mut found = 1;
            while self.eat(b',') {
                self.expr()?;
                found += 1;
            }
            if !self.eat(b')') {
                return Err(self.syntax("expected `)`".to_string()));
            }
            if found != 1 {
                return Err(Error::Arity {
                    name: name.to_string(),
                    offset: start,
                    expected: 1,
                    found,
                });
            }
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        if func.is_some() {
            return Err(Error::Arity {
                name: name.to_string(),
                offset: start,
                expected: 1,
                found: 0,
            });
        }
        Ok(match name {
            "x" => Expr::Var(Var::X),
            "y" => Expr::Var(Var::Y),
            "p" => Expr::Var(Var::P),
            other => Expr::Param(other.to_string()),
        })
    }
}
