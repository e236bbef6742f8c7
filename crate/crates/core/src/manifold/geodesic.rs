use nalgebra::DVector;

use super::{christoffel, MetricField};
use crate::error::{Error, PartialPath, Result};
use crate::linalg;

pub const MIN_GEODESIC_STEPS: usize = 16;

/// Sampled geodesic: `steps + 1` points and velocities at uniform times.
#[derive(Debug, Clone)]
pub struct Geodesic {
    pub dt: f64,
    pub points: Vec<DVector<f64>>,
    pub velocities: Vec<DVector<f64>>,
}

impl Geodesic {
    pub fn end(&self) -> (&DVector<f64>, &DVector<f64>) {
        (self.points.last().unwrap(), self.velocities.last().unwrap())
    }

    /// Largest relative deviation of `|γ'|_g` from its initial value.
    pub fn speed_drift(&self, g: &MetricField) -> Result<f64> {
        let s0 = linalg::norm(&g.at(self.points[0].as_slice())?, &self.velocities[0]);
        let mut worst = 0.0f64;
        for (p, v) in self.points.iter().zip(&self.velocities) {
            let s = linalg::norm(&g.at(p.as_slice())?, v);
            worst = worst.max((s - s0).abs() / s0.max(f64::MIN_POSITIVE));
        }
        Ok(worst)
    }
}

fn acceleration(g: &MetricField, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(-christoffel(g, x.as_slice())?.contract(v, v))
}

/// Integrates `x'' = −Γ(x', x')` with the classical fourth-order Runge–Kutta
/// scheme at a fixed step.
pub fn geodesic(g: &MetricField, p: &[f64], v: &[f64], time: f64, steps: usize) -> Result<Geodesic> {
    if steps < MIN_GEODESIC_STEPS {
        return Err(Error::Precondition(format!(
            "geodesic needs at least {MIN_GEODESIC_STEPS} steps, got {steps}"
        )));
    }
    let n = g.dim();
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v.len(),
        });
    }
    g.domain().check(p)?;
    let dt = time / steps as f64;
    let mut x = DVector::from_column_slice(p);
    let mut u = DVector::from_column_slice(v);
    let mut points = vec![x.clone()];
    let mut velocities = vec![u.clone()];
    let left = |points: &Vec<DVector<f64>>, velocities: &Vec<DVector<f64>>| {
        Error::LeftChart(Box::new(PartialPath {
            points: points.iter().map(|p| p.as_slice().to_vec()).collect(),
            velocities: velocities.iter().map(|p| p.as_slice().to_vec()).collect(),
        }))
    };
    for _ in 0..steps {
        let stage = |x: &DVector<f64>, u: &DVector<f64>| -> Result<(DVector<f64>, DVector<f64>)> {
            if !g.domain().contains(x.as_slice()) {
                return Err(Error::OutOfDomain {
                    point: x.as_slice().to_vec(),
                });
            }
            Ok((u.clone(), acceleration(g, x, u)?))
        };
        let step = || -> Result<(DVector<f64>, DVector<f64>)> {
            let (k1x, k1v) = stage(&x, &u)?;
            let (k2x, k2v) = stage(&(&x + &k1x * (dt / 2.0)), &(&u + &k1v * (dt / 2.0)))?;
            let (k3x, k3v) = stage(&(&x + &k2x * (dt / 2.0)), &(&u + &k2v * (dt / 2.0)))?;
            let (k4x, k4v) = stage(&(&x + &k3x * dt), &(&u + &k3v * dt))?;
            Ok((
                &x + (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (dt / 6.0),
                &u + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (dt / 6.0),
            ))
        };
        match step() {
            Ok((nx, nu)) if g.domain().contains(nx.as_slice()) => {
                x = nx;
                u = nu;
            }
            Ok(_) | Err(Error::OutOfDomain { .. }) => return Err(left(&points, &velocities)),
            Err(e) => return Err(e),
        }
        points.push(x.clone());
        velocities.push(u.clone());
    }
    Ok(Geodesic { dt, points, velocities })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Domain;
    use std::f64::consts::PI;

    #[test]
    fn flat_geodesic_is_a_straight_line() {
        let g = MetricField::euclidean(Domain::unbounded(2));
        let geo = geodesic(&g, &[1.0, 2.0], &[0.5, -1.0], 2.0, 32).unwrap();
        let (p, v) = geo.end();
        assert!((p[0] - 2.0).abs() < 1e-14 && (p[1] - 0.0).abs() < 1e-14);
        assert_eq!(v.as_slice(), &[0.5, -1.0]);
    }

    #[test]
    fn sphere_equator_closes_after_two_pi() {
        let g = MetricField::diagonal(
            &["1", "sin(x)^2"],
            Domain::new(vec![0.01, -100.0], vec![PI - 0.01, 100.0]),
        )
        .unwrap();
        let geo = geodesic(&g, &[PI / 2.0, 0.0], &[0.0, 1.0], 2.0 * PI, 1024).unwrap();
        let (p, _) = geo.end();
        assert!((p[0] - PI / 2.0).abs() < 1e-12);
        assert!((p[1] - 2.0 * PI).abs() < 1e-5);
        assert!(geo.speed_drift(&g).unwrap() < 1e-6);
    }

    #[test]
    fn leaving_the_chart_returns_partial_path() {
        let g = MetricField::diagonal(&["1", "r^2"], Domain::new(vec![0.1, -10.0], vec![5.0, 10.0])).unwrap();
        match geodesic(&g, &[1.0, 0.0], &[1.0, 0.0], 10.0, 100) {
            Err(Error::LeftChart(path)) => {
                assert!(path.points.len() > 30 && path.points.len() < 45);
                assert!(path.points.iter().all(|p| p[1] == 0.0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn too_few_steps_is_rejected() {
        let g = MetricField::euclidean(Domain::unbounded(2));
        assert!(geodesic(&g, &[0.0, 0.0], &[1.0, 0.0], 1.0, 8).is_err());
    }
}
