//! Scalar expressions over chart coordinates.
//!
//! Variables are `x1..xn` (0-based [`Expr::Var`] indices), with the aliases
//! `x, y, z` for the first three coordinates and `r, theta` for the first two
//! coordinates of a polar chart. Expressions evaluate over any
//! [`Numeric`] type, so a single tree gives values, gradients and Hessians.

mod parse;

use std::fmt;

use crate::jet::Numeric;

pub use parse::{parse_expression, MAX_EXPRESSION_BYTES};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Cosh,
    Sinh,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Cosh => "cosh",
            Func::Sinh => "sinh",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "cosh" => Func::Cosh,
            "sinh" => Func::Sinh,
            _ => return None,
        })
    }

    /// Value, first and second derivative at `v`.
    fn derivatives(self, v: f64) -> (f64, f64, f64) {
        match self {
            Func::Sin => (v.sin(), v.cos(), -v.sin()),
            Func::Cos => (v.cos(), -v.sin(), -v.cos()),
            Func::Tan => {
                let t = v.tan();
                let s = 1.0 + t * t;
                (t, s, 2.0 * t * s)
            }
            Func::Exp => {
                let e = v.exp();
                (e, e, e)
            }
            Func::Log => (v.ln(), 1.0 / v, -1.0 / (v * v)),
            Func::Sqrt => {
                let s = v.sqrt();
                (s, 0.5 / s, -0.25 / (s * v))
            }
            Func::Cosh => (v.cosh(), v.sinh(), v.cosh()),
            Func::Sinh => (v.sinh(), v.cosh(), v.sinh()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    pub fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Const(Constant),
    Var(usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(text: &str) -> crate::Result<Expr> {
        parse_expression(text)
    }

    pub fn num(c: f64) -> Expr {
        Expr::Num(c)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    /// Number of coordinates the expression needs (largest variable index + 1).
    pub fn required_arity(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Call(_, a) => a.required_arity(),
            Expr::Binary(_, a, b) => a.required_arity().max(b.required_arity()),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.required_arity() == 0
    }

    /// Evaluates with `n`-dimensional derivative bookkeeping at `x`.
    pub fn eval<T: Numeric>(&self, x: &[f64], n: usize) -> T {
        match self {
            Expr::Num(c) => T::constant(*c, n),
            Expr::Const(c) => T::constant(c.value(), n),
            Expr::Var(i) => T::variable(x[*i], *i, n),
            Expr::Neg(a) => a.eval::<T>(x, n).neg(),
            Expr::Call(f, a) => {
                let u = a.eval::<T>(x, n);
                let (g0, g1, g2) = f.derivatives(u.value());
                u.chain(g0, g1, g2)
            }
            Expr::Binary(op, a, b) => {
                if *op == BinOp::Pow && b.is_constant() {
                    let c = b.eval::<f64>(x, n);
                    return powc(&a.eval::<T>(x, n), c, n);
                }
                let u = a.eval::<T>(x, n);
                let v = b.eval::<T>(x, n);
                match op {
                    BinOp::Add => u.add(&v),
                    BinOp::Sub => u.sub(&v),
                    BinOp::Mul => u.mul(&v),
                    BinOp::Div => u.div(&v),
                    BinOp::Pow => {
                        // a^b = exp(b log a)
                        let (l0, l1, l2) = Func::Log.derivatives(u.value());
                        let e = v.mul(&u.chain(l0, l1, l2));
                        let (e0, e1, e2) = Func::Exp.derivatives(e.value());
                        e.chain(e0, e1, e2)
                    }
                }
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.eval::<f64>(x, x.len())
    }

    /// Symbolic partial derivative with respect to coordinate `var`.
    pub fn derivative(&self, var: usize) -> Expr {
        use BinOp::*;
        match self {
            Expr::Num(_) | Expr::Const(_) => Expr::Num(0.0),
            Expr::Var(i) => Expr::Num(if *i == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.derivative(var)),
            Expr::Binary(op, a, b) => {
                let (da, db) = (a.derivative(var), b.derivative(var));
                let (a, b) = ((**a).clone(), (**b).clone());
                match op {
                    Add => add(da, db),
                    Sub => sub(da, db),
                    Mul => add(mul(da, b), mul(a, db)),
                    Div => sub(div(da, b.clone()), div(mul(a, db), Expr::bin(Pow, b, Expr::Num(2.0)))),
                    Pow if b.is_constant() => {
                        let c = b.value(&[]);
                        mul(mul(Expr::Num(c), pow(a, Expr::Num(c - 1.0))), da)
                    }
                    Pow => {
                        // d(a^b) = a^b (b' log a + b a'/a)
                        let term = add(
                            mul(db, Expr::Call(Func::Log, Box::new(a.clone()))),
                            div(mul(b.clone(), da), a.clone()),
                        );
                        mul(Expr::bin(Pow, a, b), term)
                    }
                }
            }
            Expr::Call(f, a) => {
                let da = a.derivative(var);
                let a = (**a).clone();
                let outer = match f {
                    Func::Sin => Expr::Call(Func::Cos, Box::new(a)),
                    Func::Cos => neg(Expr::Call(Func::Sin, Box::new(a))),
                    Func::Tan => add(Expr::Num(1.0), pow(Expr::Call(Func::Tan, Box::new(a)), Expr::Num(2.0))),
                    Func::Exp => Expr::Call(Func::Exp, Box::new(a)),
                    Func::Log => div(Expr::Num(1.0), a),
                    Func::Sqrt => div(Expr::Num(0.5), Expr::Call(Func::Sqrt, Box::new(a))),
                    Func::Cosh => Expr::Call(Func::Sinh, Box::new(a)),
                    Func::Sinh => Expr::Call(Func::Cosh, Box::new(a)),
                };
                mul(outer, da)
            }
        }
    }

    /// Replaces `Var(i)` by `subs[i]`.
    pub fn substitute(&self, subs: &[Expr]) -> Expr {
        match self {
            Expr::Var(i) => subs[*i].clone(),
            Expr::Num(_) | Expr::Const(_) => self.clone(),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(subs))),
            Expr::Call(f, a) => Expr::Call(*f, Box::new(a.substitute(subs))),
            Expr::Binary(op, a, b) => Expr::bin(*op, a.substitute(subs), b.substitute(subs)),
        }
    }
}

fn is_num(e: &Expr, c: f64) -> bool {
    matches!(e, Expr::Num(v) if *v == c)
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(c) if c == 0.0 => Expr::Num(0.0),
        Expr::Neg(inner) => *inner,
        a => Expr::Neg(Box::new(a)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) {
        b
    } else if is_num(&b, 0.0) {
        a
    } else {
        Expr::bin(BinOp::Add, a, b)
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    if is_num(&b, 0.0) {
        a
    } else if is_num(&a, 0.0) {
        neg(b)
    } else {
        Expr::bin(BinOp::Sub, a, b)
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) || is_num(&b, 0.0) {
        Expr::Num(0.0)
    } else if is_num(&a, 1.0) {
        b
    } else if is_num(&b, 1.0) {
        a
    } else {
        Expr::bin(BinOp::Mul, a, b)
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) {
        Expr::Num(0.0)
    } else if is_num(&b, 1.0) {
        a
    } else {
        Expr::bin(BinOp::Div, a, b)
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    if is_num(&b, 1.0) {
        a
    } else if is_num(&b, 0.0) {
        Expr::Num(1.0)
    } else {
        Expr::bin(BinOp::Pow, a, b)
    }
}

fn powc<T: Numeric>(u: &T, c: f64, n: usize) -> T {
    if c == 0.0 {
        return T::constant(1.0, n);
    }
    if c == 1.0 {
        return u.clone();
    }
    let v = u.value();
    if c.fract() == 0.0 && c.abs() < i32::MAX as f64 {
        let k = c as i32;
        let g0 = v.powi(k);
        let g1 = c * v.powi(k - 1);
        let g2 = if k == 2 { 2.0 } else { c * (c - 1.0) * v.powi(k - 2) };
        u.chain(g0, g1, g2)
    } else {
        u.chain(v.powf(c), c * v.powf(c - 1.0), c * (c - 1.0) * v.powf(c - 2.0))
    }
}

impl fmt::Display for Expr {
    /// Prints in the parser's grammar. Composite operands are always
    /// parenthesized, so the output re-parses to an identical tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn operand(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match e {
                Expr::Num(_) | Expr::Const(_) | Expr::Var(_) | Expr::Call(..) => write!(f, "{e}"),
                _ => write!(f, "({e})"),
            }
        }
        match self {
            Expr::Num(c) => write!(f, "{c:?}"),
            Expr::Const(Constant::Pi) => write!(f, "pi"),
            Expr::Const(Constant::E) => write!(f, "e"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => {
                write!(f, "-")?;
                operand(a, f)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Binary(op, a, b) => {
                let sym = match op {
                    BinOp::Add => " + ",
                    BinOp::Sub => " - ",
                    BinOp::Mul => " * ",
                    BinOp::Div => " / ",
                    BinOp::Pow => "^",
                };
                operand(a, f)?;
                write!(f, "{sym}")?;
                operand(b, f)
            }
        }
    }
}
