use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{best_indices, Plane, PshDefect, SearchOptions};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::forms::{AlternatingForm, FormField};
use crate::linalg;
use crate::manifold::{hessian, Domain, MetricField};
use crate::sampling::Kronecker;

/// `φ = e123 + e145 + e167 + e246 − e257 − e347 − e356` (0-based indices).
pub const PHI_TERMS: [([usize; 3], f64); 7] = [
    ([0, 1, 2], 1.0),
    ([0, 3, 4], 1.0),
    ([0, 5, 6], 1.0),
    ([1, 3, 5], 1.0),
    ([1, 4, 6], -1.0),
    ([2, 3, 6], -1.0),
    ([2, 4, 5], -1.0),
];

/// `ψ = e4567 + e2345 + e2367 − e1346 + e1357 − e1247 − e1256` (0-based indices).
pub const PSI_TERMS: [([usize; 4], f64); 7] = [
    ([3, 4, 5, 6], 1.0),
    ([1, 2, 3, 4], 1.0),
    ([1, 2, 5, 6], 1.0),
    ([0, 2, 3, 5], -1.0),
    ([0, 2, 4, 6], 1.0),
    ([0, 1, 3, 6], -1.0),
    ([0, 1, 4, 5], -1.0),
];

pub fn phi() -> AlternatingForm {
    let terms: Vec<(&[usize], f64)> = PHI_TERMS.iter().map(|(i, c)| (&i[..], *c)).collect();
    AlternatingForm::from_terms(7, 3, &terms)
}

pub fn psi() -> AlternatingForm {
    let terms: Vec<(&[usize], f64)> = PSI_TERMS.iter().map(|(i, c)| (&i[..], *c)).collect();
    AlternatingForm::from_terms(7, 4, &terms)
}

/// Flat G₂ structure on ℝ⁷ (or T⁷) with optional torsion 2-form `τ₂`.
#[derive(Debug, Clone)]
pub struct G2Structure {
    pub phi: AlternatingForm,
    pub psi: AlternatingForm,
    pub metric: MetricField,
    pub tau2: Option<FormField>,
    /// Structure constants `φ_ijk` as a dense 7×7×7 table.
    table: Vec<f64>,
}

impl G2Structure {
    pub fn standard() -> Self {
        G2Structure::on(Domain::unbounded(7))
    }

    pub fn on(domain: Domain) -> Self {
        let phi = phi();
        let table = phi.dense();
        G2Structure {
            psi: psi(),
            phi,
            metric: MetricField::euclidean(domain),
            tau2: None,
            table,
        }
    }

    pub fn with_torsion(mut self, tau2: FormField) -> Result<Self> {
        if tau2.n != 7 || tau2.k != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: tau2.k,
            });
        }
        self.tau2 = Some(tau2);
        Ok(self)
    }

    #[inline]
    fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        self.table[(i * 7 + j) * 7 + k]
    }

    /// `w` with `⟨w, x⟩ = φ(u, v, x)`.
    pub fn cross(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(7, |k, _| {
            let mut s = 0.0;
            for i in 0..7 {
                if u[i] == 0.0 {
                    continue;
                }
                for j in 0..7 {
                    s += self.c(i, j, k) * u[i] * v[j];
                }
            }
            s
        })
    }
}

pub fn g2_cross(u: &DVector<f64>, v: &DVector<f64>, g2: &G2Structure) -> Result<DVector<f64>> {
    if u.len() != 7 || v.len() != 7 {
        return Err(Error::DimensionMismatch {
            expected: 7,
            got: u.len().min(v.len()),
        });
    }
    Ok(g2.cross(u, v))
}

/// `span{u, v, u×v}` for orthonormal `u, v`.
pub fn associative_plane(g2: &G2Structure, base: Vec<f64>, u: &DVector<f64>, v: &DVector<f64>) -> Result<Plane> {
    let w = g2.cross(u, v);
    Plane::euclidean(base, vec![u.clone(), v.clone(), w])
}

/// Largest `|φ|` over the four frame triples of a 4-plane.
pub fn coassociative_residual(pl: &Plane, g2: &G2Structure) -> Result<f64> {
    if pl.dim() != 4 || pl.ambient_dim() != 7 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: pl.dim(),
        });
    }
    let mut worst = 0.0f64;
    for skip in 0..4 {
        let args: Vec<DVector<f64>> = (0..4).filter(|&a| a != skip).map(|a| pl.frame[a].clone()).collect();
        worst = worst.max(g2.phi.evaluate(&args).abs());
    }
    Ok(worst)
}

pub fn coassociative_test(pl: &Plane, g2: &G2Structure, tol: f64) -> Result<bool> {
    Ok(coassociative_residual(pl, g2)? <= tol)
}

fn orthonormal_pair(u: DVector<f64>, v: DVector<f64>) -> Option<(DVector<f64>, DVector<f64>)> {
    let nu = u.norm();
    if nu < 1e-12 {
        return None;
    }
    let u = u / nu;
    let mut v = &v - &u * u.dot(&v);
    v -= &u * u.dot(&v);
    let nv = v.norm();
    if nv < 1e-12 {
        return None;
    }
    Some((u, v / nv))
}

/// Minimum of `tr_π Hess f` over associative planes `π = span{u, v, u×v}`.
/// Low-discrepancy sampling of `(u, v)`, then projected-gradient refinement of
/// the best candidates with step halving on non-decrease.
pub fn g2_psh_defect(g2: &G2Structure, f: &dyn ScalarField, p: &[f64], opts: &SearchOptions) -> Result<PshDefect> {
    if opts.samples < 256 {
        return Err(Error::Precondition(format!(
            "need at least 256 samples, got {}",
            opts.samples
        )));
    }
    let h = hessian(&g2.metric, f, p)?;
    associative_minimum(g2, &h, p, opts)
}

/// Minimum of `tr_π H` over associative planes for a given symmetric `H`.
pub fn associative_minimum(g2: &G2Structure, h: &DMatrix<f64>, p: &[f64], opts: &SearchOptions) -> Result<PshDefect> {
    let trace = |u: &DVector<f64>, v: &DVector<f64>| {
        let w = g2.cross(u, v);
        (u.transpose() * h * u)[(0, 0)] + (v.transpose() * h * v)[(0, 0)] + (w.transpose() * h * &w)[(0, 0)]
    };
    let seq = Kronecker::new(14, opts.seed);
    let pairs: Vec<(DVector<f64>, DVector<f64>)> = (0..opts.samples)
        .into_par_iter()
        .map(|s| {
            let z = seq.gaussian(s);
            orthonormal_pair(
                DVector::from_column_slice(&z[..7]),
                DVector::from_column_slice(&z[7..14]),
            )
            .unwrap_or_else(|| (linalg::unit(7, 0), linalg::unit(7, 1)))
        })
        .collect();
    let values: Vec<f64> = pairs.par_iter().map(|(u, v)| trace(u, v)).collect();
    let sampled = values.iter().copied().fold(f64::INFINITY, f64::min);

    let step0 = 0.25 / linalg::max_abs(h).max(1e-12);
    let refined: Vec<(f64, DVector<f64>, DVector<f64>)> = best_indices(&values, opts.candidates)
        .into_par_iter()
        .map(|idx| {
            let (mut u, mut v) = pairs[idx].clone();
            let mut val = values[idx];
            let mut step = step0;
            'outer: for _ in 0..opts.refine_iters {
                let w = g2.cross(&u, &v);
                let hw = h * &w;
                // ∂/∂u of w^T H w is 2 φ(·, v, Hw) = 2 v×Hw, and ∂/∂v gives 2 Hw×u
                let gu = (h * &u + g2.cross(&v, &hw)) * 2.0;
                let gv = (h * &v + g2.cross(&hw, &u)) * 2.0;
                if gu.norm() + gv.norm() < 1e-15 {
                    break;
                }
                loop {
                    if let Some((tu, tv)) = orthonormal_pair(&u - &gu * step, &v - &gv * step) {
                        let tval = trace(&tu, &tv);
                        if tval < val {
                            u = tu;
                            v = tv;
                            val = tval;
                            break;
                        }
                    }
                    step *= 0.5;
                    if step < 1e-16 {
                        break 'outer;
                    }
                }
            }
            (val, u, v)
        })
        .collect();
    let mut best = 0;
    for (i, r) in refined.iter().enumerate() {
        if r.0 < refined[best].0 {
            best = i;
        }
    }
    let (defect, u, v) = refined[best].clone();
    Ok(PshDefect {
        defect,
        witness: associative_plane(g2, p.to_vec(), &u, &v)?,
        sampled,
    })
}

/// `𝓗^φ(f) = d(∇f ⌟ φ)` at `p` for the flat structure, `Σ_ij H_ij dx^i ∧ ι_{e_j} φ`.
pub fn hphi_form(g2: &G2Structure, f: &dyn ScalarField, p: &[f64]) -> Result<AlternatingForm> {
    let h = hessian(&g2.metric, f, p)?;
    let mut out = AlternatingForm::zero(7, 3);
    for j in 0..7 {
        let inner = g2.phi.interior(&linalg::unit(7, j));
        for i in 0..7 {
            if h[(i, j)] == 0.0 {
                continue;
            }
            let dxi = AlternatingForm::from_terms(7, 1, &[(&[i], h[(i, j)])]);
            out = out.add(&dxi.wedge(&inner));
        }
    }
    out.prune(0.0);
    Ok(out)
}
