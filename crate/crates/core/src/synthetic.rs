//! Seeded synthetic point sets used by the CLI presets and the checks.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::denoise::Dataset;
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmmParams {
    pub modes: usize,
    pub dim: usize,
    pub per_mode: usize,
    pub spread: f64,
}

impl GmmParams {
    pub fn new(modes: usize, dim: usize) -> Self {
        Self { modes, dim, per_mode: 32, spread: 0.1 }
    }
}

/// Gaussian clusters around random centres, clamped to `[-1, 1]^d`.
///
/// Centres are drawn uniformly in `[-0.8, 0.8]^d`; with two modes they are the
/// antipodal pair `±c` so the two clusters are always well separated.
pub fn gmm(params: &GmmParams, seed: u64) -> Result<Dataset> {
    let GmmParams { modes, dim, per_mode, spread } = *params;
    if modes == 0 || dim == 0 || per_mode == 0 {
        return Err(Error::domain("modes, dimension and per-mode count must be positive"));
    }
    if !(spread >= 0.0) {
        return Err(Error::domain(format!("spread must be non-negative, got {spread}")));
    }
    let mut rng = stream(seed, Purpose::Dataset, 0);
    let mut centres: Vec<Vec<f64>> = Vec::with_capacity(modes);
    for m in 0..modes {
        if modes == 2 && m == 1 {
            centres.push(centres[0].iter().map(|c| -c).collect());
        } else {
            centres.push((0..dim).map(|_| rng.random_range(-0.8..0.8)).collect());
        }
    }
    let mut points = Vec::with_capacity(modes * per_mode * dim);
    for c in &centres {
        for _ in 0..per_mode {
            for &ck in c {
                let z: f64 = StandardNormal.sample(&mut rng);
                points.push((ck + spread * z).clamp(-1.0, 1.0));
            }
        }
    }
    Dataset::from_flat(dim, points)
}

/// `n` points on a random `m`-dimensional linear subspace of `R^d`.
///
/// Coordinates in the subspace are uniform in `[-1, 1]^m`; the basis is
/// orthonormal, so every point has norm at most `√m`.
pub fn plane(m: usize, dim: usize, n: usize, seed: u64) -> Result<Dataset> {
    if m == 0 || m > dim || n == 0 {
        return Err(Error::domain(format!("need 0 < m ≤ d and n > 0, got m={m}, d={dim}, n={n}")));
    }
    let mut rng = stream(seed, Purpose::Dataset, 0);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    while basis.len() < m {
        let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(a, b)| a * b).sum();
            for (a, bk) in v.iter_mut().zip(b) {
                *a -= dot * bk;
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            basis.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    let mut points = vec![0.0; n * dim];
    for row in points.chunks_mut(dim) {
        for b in &basis {
            let coef: f64 = rng.random_range(-1.0..1.0);
            for (p, bk) in row.iter_mut().zip(b) {
                *p += coef * bk;
            }
        }
    }
    Dataset::from_flat(dim, points)
}

/// `n` distinct random corners of the hypercube `{-1, 1}^d`.
pub fn cube_corners(dim: usize, n: usize, seed: u64) -> Result<Dataset> {
    if dim == 0 || n == 0 {
        return Err(Error::domain("dimension and count must be positive"));
    }
    if dim < 64 && (n as u128) > (1u128 << dim) {
        return Err(Error::domain(format!("only 2^{dim} corners exist, asked for {n}")));
    }
    let mut rng = stream(seed, Purpose::Dataset, 0);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    while rows.len() < n {
        let row: Vec<f64> = (0..dim).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        if !rows.contains(&row) {
            rows.push(row);
        }
    }
    Dataset::from_rows(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gmm_shape_and_bounds() {
        let d = gmm(&GmmParams::new(2, 64), 5).unwrap();
        assert_eq!((d.len(), d.dim()), (64, 64));
        assert!(d.iter().flatten().all(|v| (-1.0..=1.0).contains(v)));
        assert_eq!(d.to_csv_string(), gmm(&GmmParams::new(2, 64), 5).unwrap().to_csv_string());
    }

    #[test]
    fn plane_points_lie_in_the_span() {
        let d = plane(2, 32, 50, 9).unwrap();
        // the 50×32 data matrix has rank 2: any three points are linearly dependent
        let m = nalgebra::DMatrix::from_row_slice(50, 32, &d.iter().flatten().copied().collect::<Vec<_>>());
        let sv = m.singular_values();
        let mut s: Vec<f64> = sv.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        assert!(s[2] < 1e-10 * s[0]);
        assert!(d.max_norm() <= 2f64.sqrt() + 1e-12);
    }

    #[test]
    fn corners_are_distinct_signs() {
        let d = cube_corners(16, 40, 1).unwrap();
        assert!(d.iter().flatten().all(|v| v.abs() == 1.0));
        assert!(cube_corners(2, 5, 1).is_err());
    }
}
