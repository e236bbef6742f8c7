use nalgebra::DMatrix;
use rayon::prelude::*;

use super::RiemannianSubmersion;
use crate::error::{Error, Result};
use crate::field::{Field, ScalarField};
use crate::linalg;

pub const MIN_FIBRE_GRID: usize = 32;

/// Sample count below which the invariance check of an invariant pushdown
/// is considered meaningless.
const INVARIANCE_SAMPLES: usize = 16;
const INVARIANCE_TOL: f64 = 1e-8;

fn per_axis(rs: &RiemannianSubmersion, grid: &[usize]) -> Result<Vec<usize>> {
    let d = rs.fibre_dim();
    let counts = match grid.len() {
        1 => vec![grid[0]; d],
        l if l == d => grid.to_vec(),
        l => return Err(Error::DimensionMismatch { expected: d, got: l }),
    };
    Ok(counts)
}

fn require_compact(rs: &RiemannianSubmersion) -> Result<()> {
    match rs.fibre_domain.periodic.iter().position(|p| !p) {
        Some(axis) => Err(Error::NonCompactFibre { axis }),
        None => Ok(()),
    }
}

/// Nodes `lower + k·period/N` of the tensor grid, in row-major order with
/// the last axis fastest.
pub fn fibre_grid(rs: &RiemannianSubmersion, grid: &[usize]) -> Result<Vec<Vec<f64>>> {
    require_compact(rs)?;
    let counts = per_axis(rs, grid)?;
    let dom = &rs.fibre_domain;
    let total: usize = counts.iter().product();
    Ok((0..total)
        .map(|mut idx| {
            let mut y = vec![0.0; counts.len()];
            for a in (0..counts.len()).rev() {
                let k = idx % counts[a];
                idx /= counts[a];
                y[a] = dom.lower[a] + k as f64 * dom.period(a) / counts[a] as f64;
            }
            y
        })
        .collect())
}

/// Riemannian volume density of the fibre over `b` at parameter `y`.
pub(super) fn volume_density(rs: &RiemannianSubmersion, b: &[f64], y: &[f64]) -> Result<f64> {
    let mut arg = b.to_vec();
    arg.extend_from_slice(y);
    let m = b.len();
    let k = y.len();
    let duals: Vec<_> = rs.fibre_param.iter().map(|f| f.dual(&arg)).collect();
    let p: Vec<f64> = duals.iter().map(|d| d.value).collect();
    let t = DMatrix::from_fn(duals.len(), k, |i, a| duals[i].grad[m + a]);
    let g = rs.total.at(&p)?;
    let h = t.transpose() * g * t;
    let det = h.determinant();
    if !(det > 0.0) {
        return Err(Error::RankDeficient { expected: k, point: p });
    }
    Ok(det.sqrt())
}

/// `∫_{π⁻¹(b)} f dvol` by the periodic trapezoidal rule.
pub fn fibre_integral(rs: &RiemannianSubmersion, f: &dyn ScalarField, b: &[f64], grid: &[usize]) -> Result<f64> {
    fibre_quadrature(rs, b, grid, &|_, p| Ok(f.value(p)))
}

/// Trapezoidal `∫ g dvol` over the fibre for an integrand given as a
/// function of the fibre parameter and the point of `M`.
pub fn fibre_quadrature(
    rs: &RiemannianSubmersion,
    b: &[f64],
    grid: &[usize],
    g: &(dyn Fn(&[f64], &[f64]) -> Result<f64> + Sync),
) -> Result<f64> {
    require_compact(rs)?;
    let counts = per_axis(rs, grid)?;
    if let Some(&c) = counts.iter().find(|&&c| c < MIN_FIBRE_GRID) {
        return Err(Error::GridTooCoarse {
            got: c,
            min: MIN_FIBRE_GRID,
        });
    }
    let nodes = fibre_grid(rs, &counts)?;
    let cell: f64 = (0..counts.len())
        .map(|a| rs.fibre_domain.period(a) / counts[a] as f64)
        .product();
    let values: Vec<f64> = nodes
        .par_iter()
        .map(|y| Ok(g(y, &rs.fibre_point(b, y))? * volume_density(rs, b, y)?))
        .collect::<Result<_>>()?;
    Ok(linalg::pairwise_sum(&values) * cell)
}

/// Grid maximum of `f` on the fibre over `b`, refined by a deterministic
/// compass search that halves its step whenever no neighbour improves.
pub fn fibre_supremum(
    rs: &RiemannianSubmersion,
    f: &dyn ScalarField,
    b: &[f64],
    grid: &[usize],
    refine_iters: usize,
) -> Result<f64> {
    require_compact(rs)?;
    let counts = per_axis(rs, grid)?;
    let nodes = fibre_grid(rs, &counts)?;
    let eval = |y: &[f64]| f.value(&rs.fibre_point(b, y));
    let values: Vec<f64> = nodes.par_iter().map(|y| eval(y)).collect();
    let (mut best_idx, mut best) = (0, f64::NEG_INFINITY);
    for (i, &v) in values.iter().enumerate() {
        if v > best {
            best = v;
            best_idx = i;
        }
    }
    let mut y = nodes[best_idx].clone();
    let mut steps: Vec<f64> = (0..counts.len())
        .map(|a| rs.fibre_domain.period(a) / counts[a] as f64)
        .collect();
    for _ in 0..refine_iters {
        let mut improved = false;
        for a in 0..y.len() {
            for s in [steps[a], -steps[a]] {
                let mut trial = y.clone();
                trial[a] += s;
                let v = eval(&trial);
                if v > best {
                    best = v;
                    y = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            steps.iter_mut().for_each(|s| *s *= 0.5);
            if steps.iter().all(|&s| s < 1e-14) {
                break;
            }
        }
    }
    Ok(best)
}

/// Mean of `f` over the fibre against the normalized angle measure.
pub fn haar_pushdown(rs: &RiemannianSubmersion, f: &dyn ScalarField, b: &[f64], grid: &[usize]) -> Result<f64> {
    if !rs.orbit_chart {
        return Err(Error::NotOrbitChart);
    }
    require_compact(rs)?;
    let counts = per_axis(rs, grid)?;
    if let Some(&c) = counts.iter().find(|&&c| c < MIN_FIBRE_GRID) {
        return Err(Error::GridTooCoarse {
            got: c,
            min: MIN_FIBRE_GRID,
        });
    }
    let nodes = fibre_grid(rs, &counts)?;
    let values: Vec<f64> = nodes.par_iter().map(|y| f.value(&rs.fibre_point(b, y))).collect();
    Ok(linalg::pairwise_sum(&values) / values.len() as f64)
}

/// `max − min` of `f` over fibre samples above `b`.
pub fn invariance_oscillation(rs: &RiemannianSubmersion, f: &dyn ScalarField, b: &[f64], samples: usize) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for y in super::fibre_samples(&rs.fibre_domain, samples) {
        let v = f.value(&rs.fibre_point(b, &y));
        lo = lo.min(v);
        hi = hi.max(v);
    }
    hi - lo
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PushdownKind {
    Invariant,
    Integral,
    Supremum,
    Haar,
}

/// A base function built from a function on the total space.
#[derive(Debug, Clone)]
pub struct Pushdown {
    pub kind: PushdownKind,
    pub submersion: RiemannianSubmersion,
    pub source: Field,
    pub grid: Vec<usize>,
    pub refine_iters: usize,
}

impl Pushdown {
    pub fn new(kind: PushdownKind, submersion: RiemannianSubmersion, source: Field, grid: usize) -> Self {
        Pushdown {
            kind,
            submersion,
            source,
            grid: vec![grid],
            refine_iters: 60,
        }
    }

    pub fn eval(&self, b: &[f64]) -> Result<f64> {
        let rs = &self.submersion;
        let f = &*self.source;
        match self.kind {
            PushdownKind::Invariant => {
                let osc = invariance_oscillation(rs, f, b, INVARIANCE_SAMPLES);
                if osc >= INVARIANCE_TOL {
                    return Err(Error::Precondition(format!(
                        "source is not constant on the fibre over {b:?} (oscillation {osc:.3e})"
                    )));
                }
                let y0 = rs
                    .fibre_domain
                    .lower
                    .iter()
                    .map(|l| if l.is_finite() { *l } else { 0.0 })
                    .collect::<Vec<_>>();
                Ok(f.value(&rs.fibre_point(b, &y0)))
            }
            PushdownKind::Integral => fibre_integral(rs, f, b, &self.grid),
            PushdownKind::Supremum => fibre_supremum(rs, f, b, &self.grid, self.refine_iters),
            PushdownKind::Haar => haar_pushdown(rs, f, b, &self.grid),
        }
    }
}
