use nalgebra::{DMatrix, DVector};

use super::{christoffel, christoffel_from_jet, Christoffel, MetricField};
use crate::error::{Error, Result};

pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// How the derivatives of the Christoffel symbols are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurvatureMode {
    /// From the second derivatives carried by the metric jets.
    Exact,
    /// Central differences of Γ with the given coordinate step.
    FiniteDifference { step: f64 },
}

/// Curvature at one point. `riemann[((i*n + j)*n + k)*n + l]` holds `R^l_ijk`,
/// the components of `R(e_i, e_j) e_k = ∇_i∇_j e_k − ∇_j∇_i e_k`.
#[derive(Debug, Clone)]
pub struct CurvaturePack {
    pub n: usize,
    pub metric: DMatrix<f64>,
    pub christoffel: Christoffel,
    pub riemann: Vec<f64>,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
}

impl CurvaturePack {
    #[inline]
    pub fn r(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.n;
        self.riemann[((i * n + j) * n + k) * n + l]
    }

    /// The vector `R(x, y) z`.
    pub fn apply(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let mut out = DVector::zeros(n);
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let xy = x[i] * y[j];
                if xy == 0.0 {
                    continue;
                }
                for k in 0..n {
                    let c = xy * z[k];
                    if c == 0.0 {
                        continue;
                    }
                    for l in 0..n {
                        out[l] += c * self.r(i, j, k, l);
                    }
                }
            }
        }
        out
    }

    pub fn ricci_form(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (x.transpose() * &self.ricci * y)[(0, 0)]
    }

    /// `⟨R(x,y)y, x⟩ / (|x|²|y|² − ⟨x,y⟩²)`.
    pub fn sectional(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let g = &self.metric;
        let ip = |a: &DVector<f64>, b: &DVector<f64>| (a.transpose() * g * b)[(0, 0)];
        let num = ip(&self.apply(x, y, y), x);
        num / (ip(x, x) * ip(y, y) - ip(x, y).powi(2))
    }

    pub fn max_riemann(&self) -> f64 {
        self.riemann.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Largest `|R^l_ijk + R^l_jik|`.
    pub fn antisymmetry_residual(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        worst = worst.max((self.r(i, j, k, l) + self.r(j, i, k, l)).abs());
                    }
                }
            }
        }
        worst
    }

    /// First Bianchi identity `R^l_ijk + R^l_jki + R^l_kij = 0`.
    pub fn bianchi_residual(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let s = self.r(i, j, k, l) + self.r(j, k, i, l) + self.r(k, i, j, l);
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// Difference between the stored Ricci tensor and the contraction of Riemann.
    pub fn contraction_residual(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for j in 0..n {
            for k in 0..n {
                let s: f64 = (0..n).map(|i| self.r(i, j, k, i)).sum();
                worst = worst.max((s - self.ricci[(j, k)]).abs());
            }
        }
        worst
    }

    pub fn riemann_nested(&self) -> Vec<Vec<Vec<Vec<f64>>>> {
        let n = self.n;
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| (0..n).map(|l| self.r(i, j, k, l)).collect()).collect())
                    .collect()
            })
            .collect()
    }
}

pub fn curvature(g: &MetricField, p: &[f64]) -> Result<CurvaturePack> {
    curvature_with(g, p, CurvatureMode::Exact)
}

pub fn curvature_with(g: &MetricField, p: &[f64], mode: CurvatureMode) -> Result<CurvaturePack> {
    let n = g.dim();
    if g.is_euclidean() {
        g.domain().check(p)?;
        return Ok(CurvaturePack {
            n,
            metric: DMatrix::identity(n, n),
            christoffel: Christoffel::zeros(n),
            riemann: vec![0.0; n * n * n * n],
            ricci: DMatrix::zeros(n, n),
            scalar: 0.0,
        });
    }
    let mj = g.jet2(p)?;
    let gamma = christoffel_from_jet(&mj);
    // dgamma[m] = ∂_m Γ
    let dgamma: Vec<Christoffel> = match mode {
        CurvatureMode::Exact => exact_christoffel_derivatives(&mj),
        CurvatureMode::FiniteDifference { step } => {
            if g.domain().boundary_distance(p) <= step {
                return Err(Error::NearBoundary {
                    point: p.to_vec(),
                    step,
                });
            }
            let mut out = Vec::with_capacity(n);
            let mut q = p.to_vec();
            for m in 0..n {
                q[m] = p[m] + step;
                let plus = christoffel(g, &q)?;
                q[m] = p[m] - step;
                let minus = christoffel(g, &q)?;
                q[m] = p[m];
                out.push(Christoffel {
                    n,
                    data: plus
                        .data
                        .iter()
                        .zip(&minus.data)
                        .map(|(a, b)| (a - b) / (2.0 * step))
                        .collect(),
                });
            }
            out
        }
    };

    let mut riemann = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            for k in 0..n {
                for l in 0..n {
                    let mut s = dgamma[i].get(l, j, k) - dgamma[j].get(l, i, k);
                    for m in 0..n {
                        s += gamma.get(l, i, m) * gamma.get(m, j, k) - gamma.get(l, j, m) * gamma.get(m, i, k);
                    }
                    riemann[((i * n + j) * n + k) * n + l] = s;
                }
            }
        }
    }
    let mut ricci = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            ricci[(j, k)] = (0..n).map(|i| riemann[((i * n + j) * n + k) * n + i]).sum();
        }
    }
    let scalar = mj.g_inv.component_mul(&ricci).sum();
    Ok(CurvaturePack {
        n,
        metric: mj.g,
        christoffel: gamma,
        riemann,
        ricci,
        scalar,
    })
}

fn exact_christoffel_derivatives(mj: &super::MetricJet) -> Vec<Christoffel> {
    let n = mj.g.nrows();
    let gi = &mj.g_inv;
    let lower = |l: usize, i: usize, j: usize| 0.5 * (mj.dg[i][(j, l)] + mj.dg[j][(i, l)] - mj.dg[l][(i, j)]);
    (0..n)
        .map(|m| {
            // ∂_m g^{-1} = −g^{-1} (∂_m g) g^{-1}
            let dgi = -(gi * &mj.dg[m] * gi);
            let dd = |a: usize, b: usize| &mj.ddg[a * n + b];
            let mut out = Christoffel::zeros(n);
            for k in 0..n {
                for i in 0..n {
                    for j in i..n {
                        let mut s = 0.0;
                        for l in 0..n {
                            let dlower = 0.5 * (dd(m, i)[(j, l)] + dd(m, j)[(i, l)] - dd(m, l)[(i, j)]);
                            s += dgi[(k, l)] * lower(l, i, j) + gi[(k, l)] * dlower;
                        }
                        out.data[(k * n + i) * n + j] = s;
                        out.data[(k * n + j) * n + i] = s;
                    }
                }
            }
            out
        })
        .collect()
}
