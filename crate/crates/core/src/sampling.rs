//! Deterministic sampling: low-discrepancy sequences for Grassmannian sweeps
//! and per-check random streams derived from a seed and a name.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type CheckRng = ChaCha8Rng;

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Random stream for one named check; independent of scheduling order.
pub fn check_rng(seed: u64, name: &str) -> CheckRng {
    ChaCha8Rng::seed_from_u64(seed ^ fnv1a(name.as_bytes()))
}

/// Additive recurrence `x_k = frac(offset + k α)` with `α_i = φ_d^{-i}`, where
/// `φ_d` is the positive root of `x^{d+1} = x + 1`.
#[derive(Debug, Clone)]
pub struct Kronecker {
    alpha: Vec<f64>,
    offset: Vec<f64>,
}

impl Kronecker {
    pub fn new(dim: usize, seed: u64) -> Self {
        let mut phi = 2.0f64;
        for _ in 0..64 {
            phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
        }
        let alpha = (1..=dim).map(|i| phi.powi(-(i as i32)).fract()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let offset = (0..dim).map(|_| rng.random::<f64>()).collect();
        Kronecker { alpha, offset }
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn point(&self, k: usize) -> Vec<f64> {
        self.alpha
            .iter()
            .zip(&self.offset)
            .map(|(a, o)| (o + k as f64 * a).fract())
            .collect()
    }

    /// Standard normal vector of length `dim` (rounded down to even) by
    /// Box–Muller on consecutive coordinate pairs.
    pub fn gaussian(&self, k: usize) -> Vec<f64> {
        let u = self.point(k);
        let mut out = Vec::with_capacity(u.len());
        for pair in u.chunks_exact(2) {
            let r = (-2.0 * pair[0].max(1e-300).ln()).sqrt();
            let t = std::f64::consts::TAU * pair[1];
            out.push(r * t.cos());
            out.push(r * t.sin());
        }
        out.truncate(u.len() / 2 * 2);
        out
    }
}

pub fn gaussian_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn unit_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    loop {
        let v = gaussian_vector(rng, n);
        let norm = v.norm();
        if norm > 1e-8 {
            return v / norm;
        }
    }
}

/// `k` Euclidean-orthonormal vectors, uniformly distributed (Haar).
pub fn orthonormal_frame<R: Rng>(rng: &mut R, n: usize, k: usize) -> Vec<DVector<f64>> {
    loop {
        let vs: Vec<DVector<f64>> = (0..k).map(|_| gaussian_vector(rng, n)).collect();
        if let Some(f) = crate::linalg::gram_schmidt(&nalgebra::DMatrix::identity(n, n), &vs) {
            return f;
        }
    }
}
