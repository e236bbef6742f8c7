//! Forward-mode derivative arithmetic.
//!
//! Expressions are evaluated over any [`Numeric`] type: plain `f64` for
//! values, [`Dual`] for value plus gradient, and [`Jet`] for the full order-2
//! jet (value, gradient, Hessian). Every elementary function is pushed through
//! [`Numeric::chain`] with its first and second derivative at the current
//! value, so the three evaluators share one code path.

use nalgebra::{DMatrix, DVector};

pub trait Numeric: Clone {
    fn constant(c: f64, n: usize) -> Self;
    fn variable(x: f64, index: usize, n: usize) -> Self;
    fn value(&self) -> f64;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Applies a scalar function `g` given `g(v)`, `g'(v)`, `g''(v)` at `v = self.value()`.
    fn chain(&self, g0: f64, g1: f64, g2: f64) -> Self;

    fn recip(&self) -> Self {
        let v = self.value();
        self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    fn div(&self, other: &Self) -> Self {
        self.mul(&other.recip())
    }
}

impl Numeric for f64 {
    fn constant(c: f64, _n: usize) -> Self {
        c
    }
    fn variable(x: f64, _index: usize, _n: usize) -> Self {
        x
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn chain(&self, g0: f64, _g1: f64, _g2: f64) -> Self {
        g0
    }
    fn recip(&self) -> Self {
        1.0 / self
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
}

/// Value and gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub grad: Vec<f64>,
}

impl Numeric for Dual {
    fn constant(c: f64, n: usize) -> Self {
        Dual {
            value: c,
            grad: vec![0.0; n],
        }
    }

    fn variable(x: f64, index: usize, n: usize) -> Self {
        let mut grad = vec![0.0; n];
        grad[index] = 1.0;
        Dual { value: x, grad }
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn add(&self, other: &Self) -> Self {
        Dual {
            value: self.value + other.value,
            grad: self.grad.iter().zip(&other.grad).map(|(a, b)| a + b).collect(),
        }
    }

    fn sub(&self, other: &Self) -> Self {
        Dual {
            value: self.value - other.value,
            grad: self.grad.iter().zip(&other.grad).map(|(a, b)| a - b).collect(),
        }
    }

    fn mul(&self, other: &Self) -> Self {
        Dual {
            value: self.value * other.value,
            grad: self
                .grad
                .iter()
                .zip(&other.grad)
                .map(|(a, b)| a * other.value + b * self.value)
                .collect(),
        }
    }

    fn neg(&self) -> Self {
        Dual {
            value: -self.value,
            grad: self.grad.iter().map(|a| -a).collect(),
        }
    }

    fn chain(&self, g0: f64, g1: f64, _g2: f64) -> Self {
        Dual {
            value: g0,
            grad: self.grad.iter().map(|a| g1 * a).collect(),
        }
    }
}

/// Order-2 jet: value, gradient and (symmetric, row-major) Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl Jet {
    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    #[inline]
    pub fn h(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.grad.len() + j]
    }

    pub fn gradient(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.grad)
    }

    pub fn hessian(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_row_slice(n, n, &self.hess)
    }
}

impl Numeric for Jet {
    fn constant(c: f64, n: usize) -> Self {
        Jet {
            value: c,
            grad: vec![0.0; n],
            hess: vec![0.0; n * n],
        }
    }

    fn variable(x: f64, index: usize, n: usize) -> Self {
        let mut j = Jet::constant(x, n);
        j.grad[index] = 1.0;
        j
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn add(&self, other: &Self) -> Self {
        Jet {
            value: self.value + other.value,
            grad: self.grad.iter().zip(&other.grad).map(|(a, b)| a + b).collect(),
            hess: self.hess.iter().zip(&other.hess).map(|(a, b)| a + b).collect(),
        }
    }

    fn sub(&self, other: &Self) -> Self {
        Jet {
            value: self.value - other.value,
            grad: self.grad.iter().zip(&other.grad).map(|(a, b)| a - b).collect(),
            hess: self.hess.iter().zip(&other.hess).map(|(a, b)| a - b).collect(),
        }
    }

    fn mul(&self, other: &Self) -> Self {
        let n = self.dim();
        let (u, v) = (self.value, other.value);
        let grad = self.grad.iter().zip(&other.grad).map(|(a, b)| a * v + b * u).collect();
        let mut hess = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                hess.push(
                    self.hess[k] * v + other.hess[k] * u + self.grad[i] * other.grad[j] + other.grad[i] * self.grad[j],
                );
            }
        }
        Jet {
            value: u * v,
            grad,
            hess,
        }
    }

    fn neg(&self) -> Self {
        Jet {
            value: -self.value,
            grad: self.grad.iter().map(|a| -a).collect(),
            hess: self.hess.iter().map(|a| -a).collect(),
        }
    }

    fn chain(&self, g0: f64, g1: f64, g2: f64) -> Self {
        let n = self.dim();
        let grad = self.grad.iter().map(|a| g1 * a).collect();
        let mut hess = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                hess.push(g1 * self.hess[i * n + j] + g2 * self.grad[i] * self.grad[j]);
            }
        }
        Jet { value: g0, grad, hess }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_second_order() {
        // f = x*y at (2,3): grad (3,2), hess [[0,1],[1,0]]
        let x = Jet::variable(2.0, 0, 2);
        let y = Jet::variable(3.0, 1, 2);
        let f = x.mul(&y);
        assert_eq!(f.value, 6.0);
        assert_eq!(f.grad, vec![3.0, 2.0]);
        assert_eq!(f.hess, vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn reciprocal_second_derivative() {
        // 1/x at x=2: -1/4, 2/8
        let x = Jet::variable(2.0, 0, 1);
        let r = x.recip();
        assert!((r.value - 0.5).abs() < 1e-15);
        assert!((r.grad[0] + 0.25).abs() < 1e-15);
        assert!((r.hess[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn dual_matches_jet_gradient() {
        let xd = Dual::variable(0.7, 0, 2);
        let yd = Dual::variable(-1.3, 1, 2);
        let xj = Jet::variable(0.7, 0, 2);
        let yj = Jet::variable(-1.3, 1, 2);
        let d = xd.mul(&yd).div(&xd.add(&Dual::constant(3.0, 2)));
        let j = xj.mul(&yj).div(&xj.add(&Jet::constant(3.0, 2)));
        assert!((d.value - j.value).abs() < 1e-15);
        for (a, b) in d.grad.iter().zip(&j.grad) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
