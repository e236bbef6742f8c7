//! Scalar fields on chart domains with order-2 jets.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::{Dual, Jet, Numeric};

/// A scalar function of `arity` coordinates exposing value, gradient and
/// coordinate Hessian.
pub trait ScalarField: Send + Sync + fmt::Debug {
    fn arity(&self) -> usize;

    fn jet(&self, x: &[f64]) -> Jet;

    fn value(&self, x: &[f64]) -> f64 {
        self.jet(x).value
    }

    fn dual(&self, x: &[f64]) -> Dual {
        let j = self.jet(x);
        Dual {
            value: j.value,
            grad: j.grad,
        }
    }
}

pub type Field = Arc<dyn ScalarField>;

#[derive(Debug, Clone)]
pub struct ExprField {
    expr: Expr,
    arity: usize,
}

impl ExprField {
    pub fn new(expr: Expr, arity: usize) -> Result<Self> {
        let need = expr.required_arity();
        if need > arity {
            return Err(Error::VariableOutOfRange { index: need, arity });
        }
        Ok(ExprField { expr, arity })
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }
}

impl ScalarField for ExprField {
    fn arity(&self) -> usize {
        self.arity
    }
    fn jet(&self, x: &[f64]) -> Jet {
        self.expr.eval::<Jet>(x, self.arity)
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.expr.eval::<f64>(x, self.arity)
    }
    fn dual(&self, x: &[f64]) -> Dual {
        self.expr.eval::<Dual>(x, self.arity)
    }
}

/// Parses `text` into a field of the given arity.
pub fn expr_field(text: &str, arity: usize) -> Result<Field> {
    Ok(Arc::new(ExprField::new(Expr::parse(text)?, arity)?))
}

pub fn from_expr(expr: Expr, arity: usize) -> Result<Field> {
    Ok(Arc::new(ExprField::new(expr, arity)?))
}

#[derive(Debug, Clone)]
pub struct ConstantField {
    pub value: f64,
    pub arity: usize,
}

impl ScalarField for ConstantField {
    fn arity(&self) -> usize {
        self.arity
    }
    fn jet(&self, _x: &[f64]) -> Jet {
        Jet::constant(self.value, self.arity)
    }
    fn value(&self, _x: &[f64]) -> f64 {
        self.value
    }
    fn dual(&self, _x: &[f64]) -> Dual {
        Dual::constant(self.value, self.arity)
    }
}

pub fn constant(value: f64, arity: usize) -> Field {
    Arc::new(ConstantField { value, arity })
}

/// `outer ∘ (inner_1, …, inner_m)`; chain rule to second order.
#[derive(Debug, Clone)]
pub struct Composed {
    pub outer: Field,
    pub inner: Vec<Field>,
}

impl Composed {
    pub fn new(outer: Field, inner: Vec<Field>) -> Result<Self> {
        if outer.arity() != inner.len() {
            return Err(Error::DimensionMismatch {
                expected: outer.arity(),
                got: inner.len(),
            });
        }
        if let Some(first) = inner.first() {
            let n = first.arity();
            if let Some(bad) = inner.iter().find(|f| f.arity() != n) {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: bad.arity(),
                });
            }
        }
        Ok(Composed { outer, inner })
    }
}

impl ScalarField for Composed {
    fn arity(&self) -> usize {
        self.inner.first().map_or(0, |f| f.arity())
    }

    fn jet(&self, x: &[f64]) -> Jet {
        let n = x.len();
        let inner: Vec<Jet> = self.inner.iter().map(|f| f.jet(x)).collect();
        let y: Vec<f64> = inner.iter().map(|j| j.value).collect();
        let o = self.outer.jet(&y);
        let m = y.len();
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n * n];
        for (a, ja) in inner.iter().enumerate() {
            let oa = o.grad[a];
            for i in 0..n {
                grad[i] += oa * ja.grad[i];
            }
            for k in 0..n * n {
                hess[k] += oa * ja.hess[k];
            }
            for (b, jb) in inner.iter().enumerate() {
                let oab = o.hess[a * m + b];
                if oab == 0.0 {
                    continue;
                }
                for i in 0..n {
                    for j in 0..n {
                        hess[i * n + j] += oab * ja.grad[i] * jb.grad[j];
                    }
                }
            }
        }
        Jet {
            value: o.value,
            grad,
            hess,
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        let y: Vec<f64> = self.inner.iter().map(|f| f.value(x)).collect();
        self.outer.value(&y)
    }

    fn dual(&self, x: &[f64]) -> Dual {
        let inner: Vec<Dual> = self.inner.iter().map(|f| f.dual(x)).collect();
        let y: Vec<f64> = inner.iter().map(|d| d.value).collect();
        let o = self.outer.dual(&y);
        let mut grad = vec![0.0; x.len()];
        for (a, d) in inner.iter().enumerate() {
            for (g, di) in grad.iter_mut().zip(&d.grad) {
                *g += o.grad[a] * di;
            }
        }
        Dual { value: o.value, grad }
    }
}

/// A field of arity `p + k` with its first `p` arguments frozen.
#[derive(Debug, Clone)]
pub struct Frozen {
    pub inner: Field,
    pub prefix: Vec<f64>,
}

impl Frozen {
    fn full(&self, x: &[f64]) -> Vec<f64> {
        let mut v = self.prefix.clone();
        v.extend_from_slice(x);
        v
    }
}

impl ScalarField for Frozen {
    fn arity(&self) -> usize {
        self.inner.arity() - self.prefix.len()
    }

    fn jet(&self, x: &[f64]) -> Jet {
        let full = self.inner.jet(&self.full(x));
        let (p, n) = (self.prefix.len(), self.inner.arity());
        let k = n - p;
        let mut hess = Vec::with_capacity(k * k);
        for i in p..n {
            for j in p..n {
                hess.push(full.hess[i * n + j]);
            }
        }
        Jet {
            value: full.value,
            grad: full.grad[p..].to_vec(),
            hess,
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(&self.full(x))
    }

    fn dual(&self, x: &[f64]) -> Dual {
        let full = self.inner.dual(&self.full(x));
        Dual {
            value: full.value,
            grad: full.grad[self.prefix.len()..].to_vec(),
        }
    }
}

/// Central finite-difference gradient and Hessian of `f` at `x`.
pub fn fd_derivatives(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n * n];
    let f0 = f(x);
    let mut p = x.to_vec();
    for i in 0..n {
        p[i] = x[i] + h;
        let fp = f(&p);
        p[i] = x[i] - h;
        let fm = f(&p);
        p[i] = x[i];
        grad[i] = (fp - fm) / (2.0 * h);
        hess[i * n + i] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in 0..i {
            let mut s = 0.0;
            for (si, sj, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                p[i] = x[i] + si * h;
                p[j] = x[j] + sj * h;
                s += w * f(&p);
            }
            p[i] = x[i];
            p[j] = x[j];
            let v = s / (4.0 * h * h);
            hess[i * n + j] = v;
            hess[j * n + i] = v;
        }
    }
    (grad, hess)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_matches_direct_expression() {
        // F(u) = u^2 sin(u) with u = x*y + z
        let outer = expr_field("x^2 * sin(x)", 1).unwrap();
        let inner = expr_field("x*y + z", 3).unwrap();
        let comp = Composed::new(outer, vec![inner]).unwrap();
        let direct = expr_field("(x*y + z)^2 * sin(x*y + z)", 3).unwrap();
        let p = [0.3, -1.1, 0.7];
        let (a, b) = (comp.jet(&p), direct.jet(&p));
        assert!((a.value - b.value).abs() < 1e-14);
        for k in 0..9 {
            assert!((a.hess[k] - b.hess[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn frozen_extracts_trailing_block() {
        let f = expr_field("x1*x2^2 + x3^3", 3).unwrap();
        let fz = Frozen {
            inner: f,
            prefix: vec![2.0],
        };
        let j = fz.jet(&[3.0, 1.0]);
        assert_eq!(j.value, 19.0);
        assert_eq!(j.grad, vec![12.0, 3.0]);
        assert_eq!(j.hess, vec![4.0, 0.0, 0.0, 6.0]);
    }

    #[test]
    fn rejects_out_of_range_variable() {
        assert!(matches!(expr_field("x3", 2), Err(Error::VariableOutOfRange { .. })));
    }
}
