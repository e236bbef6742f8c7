use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::manifold::{christoffel, MetricField};

pub const MIN_CONVEXITY_GRID: usize = 8;

/// Affine-coordinate tolerance for midpoint mode.
const FLAT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConvexityMode {
    /// Smallest eigenvalue of the central-difference Riemannian Hessian.
    /// `step: None` means `1e-3` times the box width on each axis.
    Hessian { step: Option<f64> },
    /// `F(mid) ≤ (F(a) + F(c))/2 + tol` on lattice segments; needs
    /// coordinates in which straight lines are geodesics.
    Midpoint,
}

#[derive(Debug, Clone)]
pub struct ConvexityReport {
    pub pass: bool,
    /// Smallest Hessian eigenvalue, or smallest midpoint gap
    /// `(F(a)+F(c))/2 − F(mid)`.
    pub margin: f64,
    /// Where the margin is attained.
    pub witness: Vec<f64>,
    pub checked: usize,
}

fn lattice(lower: &[f64], upper: &[f64], grid: usize) -> Vec<Vec<f64>> {
    let d = lower.len();
    let total = grid.pow(d as u32);
    (0..total)
        .map(|mut idx| {
            let mut p = vec![0.0; d];
            for a in (0..d).rev() {
                let k = idx % grid;
                idx /= grid;
                p[a] = lower[a] + (upper[a] - lower[a]) * k as f64 / (grid - 1) as f64;
            }
            p
        })
        .collect()
}

/// Convexity of a base function on the box `[lower, upper]` sampled by
/// `grid` points per axis.
pub fn base_convexity_check(
    f: &(dyn Fn(&[f64]) -> Result<f64> + Sync),
    base: &MetricField,
    lower: &[f64],
    upper: &[f64],
    grid: usize,
    mode: ConvexityMode,
    tol: f64,
) -> Result<ConvexityReport> {
    let d = base.dim();
    if lower.len() != d || upper.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: lower.len(),
        });
    }
    if grid < MIN_CONVEXITY_GRID {
        return Err(Error::GridTooCoarse {
            got: grid,
            min: MIN_CONVEXITY_GRID,
        });
    }
    let points = lattice(lower, upper, grid);
    let (margins, checked): (Vec<(f64, Vec<f64>)>, usize) = match mode {
        ConvexityMode::Hessian { step } => {
            let steps: Vec<f64> = (0..d).map(|a| step.unwrap_or(1e-3 * (upper[a] - lower[a]))).collect();
            let m = points
                .par_iter()
                .map(|p| Ok((min_hessian_eigenvalue(f, base, p, &steps)?, p.clone())))
                .collect::<Result<Vec<_>>>()?;
            let n = m.len();
            (m, n)
        }
        ConvexityMode::Midpoint => {
            for p in &points {
                let r = christoffel(base, p)?.max_abs();
                if r > FLAT_TOL {
                    return Err(Error::CurvedBaseCoordinates { residual: r });
                }
            }
            let values: Vec<f64> = points.par_iter().map(|p| f(p)).collect::<Result<_>>()?;
            midpoint_gaps(&points, &values, grid, d)
        }
    };
    let (margin, witness) = margins.into_iter().fold(
        (f64::INFINITY, Vec::new()),
        |acc, (m, w)| if m < acc.0 { (m, w) } else { acc },
    );
    Ok(ConvexityReport {
        pass: margin >= -tol,
        margin,
        witness,
        checked,
    })
}

fn min_hessian_eigenvalue(
    f: &(dyn Fn(&[f64]) -> Result<f64> + Sync),
    base: &MetricField,
    p: &[f64],
    steps: &[f64],
) -> Result<f64> {
    let hess = fd_hessian(f, base, p, steps)?;
    let frame = linalg::coordinate_frame(&base.at(p)?);
    Ok(linalg::sym_eigenvalues(&linalg::in_frame(&hess, &frame))[0])
}

/// Central-difference Riemannian Hessian `∂²F − Γ·∂F` with per-axis steps.
pub fn fd_hessian(
    f: &dyn Fn(&[f64]) -> Result<f64>,
    metric: &MetricField,
    p: &[f64],
    steps: &[f64],
) -> Result<DMatrix<f64>> {
    let d = p.len();
    let at = |shifts: &[(usize, f64)]| {
        let mut q = p.to_vec();
        for &(a, s) in shifts {
            q[a] += s;
        }
        f(&q)
    };
    let f0 = f(p)?;
    let mut hess = DMatrix::zeros(d, d);
    let mut grad = DVector::zeros(d);
    for i in 0..d {
        let hi = steps[i];
        let fp = at(&[(i, hi)])?;
        let fm = at(&[(i, -hi)])?;
        grad[i] = (fp - fm) / (2.0 * hi);
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (hi * hi);
        for j in 0..i {
            let hj = steps[j];
            let v = (at(&[(i, hi), (j, hj)])? - at(&[(i, hi), (j, -hj)])? - at(&[(i, -hi), (j, hj)])?
                + at(&[(i, -hi), (j, -hj)])?)
                / (4.0 * hi * hj);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    let gamma = christoffel(metric, p)?;
    for i in 0..d {
        for j in 0..d {
            hess[(i, j)] -= (0..d).map(|k| gamma.get(k, i, j) * grad[k]).sum::<f64>();
        }
    }
    Ok(hess)
}

/// Gaps on every lattice segment `a, mid, c` along coordinate axes and,
/// in two or more dimensions, along the diagonals of coordinate planes.
fn midpoint_gaps(points: &[Vec<f64>], values: &[f64], grid: usize, d: usize) -> (Vec<(f64, Vec<f64>)>, usize) {
    let mut dirs: Vec<Vec<i64>> = Vec::new();
    for i in 0..d {
        let mut e = vec![0; d];
        e[i] = 1;
        dirs.push(e);
        for j in i + 1..d {
            for s in [1, -1] {
                let mut e = vec![0; d];
                e[i] = 1;
                e[j] = s;
                dirs.push(e);
            }
        }
    }
    let index = |k: &[i64]| k.iter().fold(0usize, |acc, &c| acc * grid + c as usize);
    let mut out = Vec::new();
    for mid in 0..points.len() {
        let mut k = vec![0i64; d];
        let mut rest = mid;
        for a in (0..d).rev() {
            k[a] = (rest % grid) as i64;
            rest /= grid;
        }
        for dir in &dirs {
            let a: Vec<i64> = k.iter().zip(dir).map(|(c, e)| c - e).collect();
            let c: Vec<i64> = k.iter().zip(dir).map(|(c, e)| c + e).collect();
            let inside = |v: &[i64]| v.iter().all(|&x| x >= 0 && x < grid as i64);
            if inside(&a) && inside(&c) {
                let gap = 0.5 * (values[index(&a)] + values[index(&c)]) - values[mid];
                out.push((gap, points[mid].clone()));
            }
        }
    }
    let n = out.len();
    (out, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Domain;

    fn line() -> MetricField {
        MetricField::euclidean(Domain::new(vec![-10.0], vec![10.0]))
    }

    #[test]
    fn square_passes_and_negative_square_fails() {
        let g = line();
        for mode in [ConvexityMode::Hessian { step: None }, ConvexityMode::Midpoint] {
            let r = base_convexity_check(&|b| Ok(b[0] * b[0]), &g, &[-1.0], &[1.0], 16, mode, 1e-8).unwrap();
            assert!(r.pass && r.margin > 0.0);
            let r = base_convexity_check(&|b| Ok(-b[0] * b[0]), &g, &[-1.0], &[1.0], 16, mode, 1e-8).unwrap();
            assert!(!r.pass);
            assert_eq!(r.witness.len(), 1);
        }
    }

    #[test]
    fn witness_locates_concave_region() {
        let g = line();
        let f = |b: &[f64]| {
            Ok(if b[0] > 0.5 {
                -(b[0] - 0.5).powi(4) * 10.0
            } else {
                b[0] * b[0]
            })
        };
        let r = base_convexity_check(&f, &g, &[-1.0], &[2.0], 31, ConvexityMode::Midpoint, 1e-8).unwrap();
        assert!(!r.pass && r.witness[0] > 0.5);
    }

    #[test]
    fn coarse_grids_are_rejected() {
        let r = base_convexity_check(&|b| Ok(b[0]), &line(), &[0.0], &[1.0], 4, ConvexityMode::Midpoint, 0.0);
        assert!(matches!(r, Err(Error::GridTooCoarse { got: 4, min: 8 })));
    }

    #[test]
    fn midpoint_mode_requires_affine_coordinates() {
        let g = MetricField::diagonal(&["1", "x^2"], Domain::new(vec![0.1, -5.0], vec![5.0, 5.0])).unwrap();
        let r = base_convexity_check(
            &|b| Ok(b[0]),
            &g,
            &[1.0, 0.0],
            &[2.0, 1.0],
            8,
            ConvexityMode::Midpoint,
            0.0,
        );
        assert!(matches!(r, Err(Error::CurvedBaseCoordinates { .. })));
    }

    #[test]
    fn riemannian_hessian_mode_on_polar_plane() {
        // r is convex on the flat plane although its coordinate Hessian vanishes
        let g = MetricField::diagonal(&["1", "x^2"], Domain::new(vec![0.1, -5.0], vec![5.0, 5.0])).unwrap();
        let r = base_convexity_check(
            &|b| Ok(b[0]),
            &g,
            &[1.0, 0.0],
            &[2.0, 1.0],
            8,
            ConvexityMode::Hessian { step: None },
            1e-6,
        )
        .unwrap();
        assert!(r.pass && r.margin > -1e-6);
        let r = base_convexity_check(
            &|b| Ok(-b[0]),
            &g,
            &[1.0, 0.0],
            &[2.0, 1.0],
            8,
            ConvexityMode::Hessian { step: None },
            1e-6,
        )
        .unwrap();
        assert!(!r.pass);
    }
}
