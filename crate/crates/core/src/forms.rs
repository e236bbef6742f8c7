//! Alternating multilinear forms on coordinate tangent spaces.
//!
//! A form of degree `k` on `ℝⁿ` is a coefficient table over strictly
//! increasing index tuples `I`, meaning `Σ_I c_I dx^{i_1} ∧ … ∧ dx^{i_k}`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::field::Field;

#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingForm {
    n: usize,
    k: usize,
    coeffs: BTreeMap<Vec<usize>, f64>,
}

/// Sorts `idx` in place and returns the permutation sign, or 0 on a repeat.
pub fn sort_with_sign(idx: &mut [usize]) -> f64 {
    let mut sign = 1.0;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        0.0
    } else {
        sign
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Determinant of a small square matrix given as row slices.
fn small_det(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        0 => 1.0,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        k => DMatrix::from_fn(k, k, |i, j| m[i][j]).determinant(),
    }
}

impl AlternatingForm {
    pub fn zero(n: usize, k: usize) -> Self {
        AlternatingForm {
            n,
            k,
            coeffs: BTreeMap::new(),
        }
    }

    /// Builds a form from `(indices, coefficient)` terms; indices may be in
    /// any order and are sorted with the corresponding sign.
    pub fn from_terms(n: usize, k: usize, terms: &[(&[usize], f64)]) -> Self {
        let mut f = AlternatingForm::zero(n, k);
        for (idx, c) in terms {
            f.add_term(idx, *c);
        }
        f
    }

    pub fn add_term(&mut self, idx: &[usize], c: f64) {
        assert_eq!(idx.len(), self.k, "term has wrong degree");
        assert!(idx.iter().all(|&i| i < self.n), "index out of range");
        let mut key = idx.to_vec();
        let s = sort_with_sign(&mut key);
        if s == 0.0 || c == 0.0 {
            return;
        }
        let e = self.coeffs.entry(key).or_insert(0.0);
        *e += s * c;
    }

    /// `dx^0 ∧ … ∧ dx^{n-1}`.
    pub fn volume(n: usize) -> Self {
        let idx: Vec<usize> = (0..n).collect();
        AlternatingForm::from_terms(n, n, &[(&idx, 1.0)])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &f64)> {
        self.coeffs.iter()
    }

    /// Coefficient of `dx^{idx}` for any index order.
    pub fn coefficient(&self, idx: &[usize]) -> f64 {
        let mut key = idx.to_vec();
        let s = sort_with_sign(&mut key);
        if s == 0.0 {
            return 0.0;
        }
        s * self.coeffs.get(&key).copied().unwrap_or(0.0)
    }

    /// `α(v_1, …, v_k)`.
    pub fn evaluate(&self, vs: &[DVector<f64>]) -> f64 {
        assert_eq!(vs.len(), self.k, "wrong number of arguments");
        let mut s = 0.0;
        for (idx, c) in &self.coeffs {
            let m: Vec<Vec<f64>> = idx.iter().map(|&i| vs.iter().map(|v| v[i]).collect()).collect();
            s += c * small_det(&m);
        }
        s
    }

    pub fn wedge(&self, other: &AlternatingForm) -> AlternatingForm {
        assert_eq!(self.n, other.n);
        let mut out = AlternatingForm::zero(self.n, self.k + other.k);
        for (a, ca) in &self.coeffs {
            for (b, cb) in &other.coeffs {
                if a.iter().any(|i| b.contains(i)) {
                    continue;
                }
                let idx: Vec<usize> = a.iter().chain(b).copied().collect();
                out.add_term(&idx, ca * cb);
            }
        }
        out.prune(0.0);
        out
    }

    /// `ι_v α`.
    pub fn interior(&self, v: &DVector<f64>) -> AlternatingForm {
        assert!(self.k > 0, "interior product of a function");
        let mut out = AlternatingForm::zero(self.n, self.k - 1);
        for (idx, c) in &self.coeffs {
            // α(v, …) picks up (−1)^p from moving slot p to the front
            for (p, &i) in idx.iter().enumerate() {
                if v[i] == 0.0 {
                    continue;
                }
                let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
                let rest: Vec<usize> = idx
                    .iter()
                    .enumerate()
                    .filter(|&(q, _)| q != p)
                    .map(|(_, &j)| j)
                    .collect();
                out.add_term(&rest, sign * c * v[i]);
            }
        }
        out.prune(0.0);
        out
    }

    /// Pullback along the linear map with columns `a` (n × m), as a form on ℝᵐ.
    pub fn pullback(&self, a: &DMatrix<f64>) -> AlternatingForm {
        let m = a.ncols();
        let cols: Vec<DVector<f64>> = (0..m).map(|j| a.column(j).into_owned()).collect();
        let mut out = AlternatingForm::zero(m, self.k);
        for idx in subsets(m, self.k) {
            let args: Vec<DVector<f64>> = idx.iter().map(|&j| cols[j].clone()).collect();
            let v = self.evaluate(&args);
            out.add_term(&idx, v);
        }
        out.prune(0.0);
        out
    }

    pub fn scale(&self, s: f64) -> AlternatingForm {
        let mut out = self.clone();
        for v in out.coeffs.values_mut() {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &AlternatingForm) -> AlternatingForm {
        assert_eq!((self.n, self.k), (other.n, other.k));
        let mut out = self.clone();
        for (idx, c) in &other.coeffs {
            out.add_term(idx, *c);
        }
        out
    }

    pub fn sub(&self, other: &AlternatingForm) -> AlternatingForm {
        self.add(&other.scale(-1.0))
    }

    /// Drops coefficients with magnitude ≤ `tol`.
    pub fn prune(&mut self, tol: f64) {
        self.coeffs.retain(|_, c| c.abs() > tol);
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().fold(0.0f64, |a, c| a.max(c.abs()))
    }

    /// Full antisymmetric table with `n^k` entries, row-major in the argument order.
    pub fn dense(&self) -> Vec<f64> {
        let total = self.n.pow(self.k as u32);
        (0..total)
            .map(|mut flat| {
                let mut idx = vec![0; self.k];
                for slot in (0..self.k).rev() {
                    idx[slot] = flat % self.n;
                    flat /= self.n;
                }
                self.coefficient(&idx)
            })
            .collect()
    }
}

/// A form whose coefficients are scalar fields.
#[derive(Debug, Clone)]
pub struct FormField {
    pub n: usize,
    pub k: usize,
    pub terms: Vec<(Vec<usize>, Field)>,
}

impl FormField {
    pub fn new(n: usize, k: usize, terms: Vec<(Vec<usize>, Field)>) -> Result<Self> {
        for (idx, f) in &terms {
            if idx.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: idx.len(),
                });
            }
            if f.arity() != n || idx.iter().any(|&i| i >= n) {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: f.arity(),
                });
            }
        }
        Ok(FormField { n, k, terms })
    }

    pub fn constant(form: &AlternatingForm) -> Self {
        let n = form.dim();
        FormField {
            n,
            k: form.degree(),
            terms: form
                .terms()
                .map(|(i, c)| (i.clone(), crate::field::constant(*c, n)))
                .collect(),
        }
    }

    pub fn at(&self, p: &[f64]) -> AlternatingForm {
        let mut out = AlternatingForm::zero(self.n, self.k);
        for (idx, f) in &self.terms {
            out.add_term(idx, f.value(p));
        }
        out
    }

    /// Exterior derivative at `p` from the coefficient gradients.
    pub fn exterior_derivative(&self, p: &[f64]) -> AlternatingForm {
        let mut out = AlternatingForm::zero(self.n, self.k + 1);
        for (idx, f) in &self.terms {
            let grad = f.dual(p).grad;
            for (i, gi) in grad.iter().enumerate() {
                if *gi == 0.0 || idx.contains(&i) {
                    continue;
                }
                let mut full = vec![i];
                full.extend_from_slice(idx);
                out.add_term(&full, *gi);
            }
        }
        out.prune(0.0);
        out
    }
}

/// Exterior derivative of a form-valued map by central differences.
pub fn exterior_derivative_fd(form: &dyn Fn(&[f64]) -> AlternatingForm, p: &[f64], h: f64) -> AlternatingForm {
    let n = p.len();
    let base = form(p);
    let mut out = AlternatingForm::zero(base.dim(), base.degree() + 1);
    let mut q = p.to_vec();
    for i in 0..n {
        q[i] = p[i] + h;
        let plus = form(&q);
        q[i] = p[i] - h;
        let minus = form(&q);
        q[i] = p[i];
        let deriv = plus.sub(&minus).scale(1.0 / (2.0 * h));
        for (idx, c) in deriv.terms() {
            if idx.contains(&i) {
                continue;
            }
            let mut full = vec![i];
            full.extend_from_slice(idx);
            out.add_term(&full, *c);
        }
    }
    out
}
