//! Exact denoising over a finite dataset.
//!
//! With the empirical data distribution, the posterior mean `E[x0 | x_t]` under
//! Gaussian noise of level σ is a softmax-weighted convex combination of the
//! data points. That is also one mean-shift iteration of a Gaussian KDE with
//! bandwidth σ, which is why [`mean_shift_step`] shares the implementation.

use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::io::parse_f64;
use crate::rng::{splitmix64, standard_normal_vector, stream, Purpose};
use crate::Vector;

/// Finite point set `{y_i}`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    points: Vec<f64>,
    dim: usize,
}

impl Dataset {
    pub fn from_flat(dim: usize, points: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("dataset dimension must be at least 1"));
        }
        if points.is_empty() {
            return Err(Error::domain("dataset is empty"));
        }
        if !points.len().is_multiple_of(dim) {
            return Err(Error::domain(format!("{} values do not form rows of dimension {dim}", points.len())));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("dataset has non-finite entries"));
        }
        Ok(Self { points, dim })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        let mut flat = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Parse(format!("row {i} has {} columns, expected {dim}", row.len())));
            }
            flat.extend_from_slice(row);
        }
        Self::from_flat(dim, flat)
    }

    pub fn from_vectors(points: &[Vector]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = points.iter().map(|p| p.iter().copied().collect()).collect();
        Self::from_rows(&rows)
    }

    /// Parses one point per line, comma separated, no header.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|f| parse_f64(f).map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::domain("dataset is empty"));
        }
        Self::from_rows(&rows)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_csv_str(&text)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for p in self.iter() {
            let fields: Vec<String> = p.iter().map(|v| crate::io::fmt17(*v)).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    pub fn mean(&self) -> Vector {
        let mut m = Vector::zeros(self.dim);
        for p in self.iter() {
            for (a, b) in m.iter_mut().zip(p) {
                *a += b;
            }
        }
        m / self.len() as f64
    }

    /// Per-coordinate `(min, max)` over the data.
    pub fn bounds(&self) -> (Vector, Vector) {
        let mut lo = Vector::from_element(self.dim, f64::INFINITY);
        let mut hi = Vector::from_element(self.dim, f64::NEG_INFINITY);
        for p in self.iter() {
            for k in 0..self.dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    pub fn max_norm(&self) -> f64 {
        self.iter().map(|p| p.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max)
    }

    pub fn translated(&self, shift: &Vector) -> Result<Self> {
        check_dim(self.dim, shift.len())?;
        let points =
            self.points.chunks_exact(self.dim).flat_map(|p| p.iter().zip(shift.iter()).map(|(a, b)| a + b)).collect();
        Self::from_flat(self.dim, points)
    }

    /// `-‖x - y_i‖² / (2 h²)` for every point, plus the maximum.
    fn logits(&self, x: &Vector, h: f64) -> (Vec<f64>, f64) {
        let inv = 1.0 / (2.0 * h * h);
        let mut max = f64::NEG_INFINITY;
        let logits: Vec<f64> = self
            .iter()
            .map(|p| {
                let d2: f64 = p.iter().zip(x.iter()).map(|(y, xv)| (xv - y) * (xv - y)).sum();
                let l = -d2 * inv;
                if l > max {
                    max = l;
                }
                l
            })
            .collect();
        (logits, max)
    }
}

/// Denoising output `r`, the implied noise prediction `ε = (x − r)/σ` and,
/// when requested, the softmax weights over the data points.
#[derive(Clone, Debug, PartialEq)]
pub struct DenoiserOutput {
    pub r: Vector,
    pub eps: Vector,
    pub weights: Option<Vec<f64>>,
}

impl DenoiserOutput {
    pub fn from_r(x: &Vector, r: Vector, sigma: f64) -> Self {
        let eps = (x - &r) / sigma;
        Self { r, eps, weights: None }
    }
}

/// A data-prediction model `r(x; σ)` in VE coordinates.
pub trait Denoiser: Send + Sync {
    fn dim(&self) -> usize;

    fn denoise(&self, x: &Vector, sigma: f64) -> Result<DenoiserOutput>;
}

fn check_query(dim: usize, x: &Vector, sigma: f64) -> Result<()> {
    check_dim(dim, x.len())?;
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::domain(format!("noise level must be positive, got {sigma}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("query has non-finite entries"));
    }
    Ok(())
}

fn weighted_mean(data: &Dataset, x: &Vector, sigma: f64, keep_weights: bool) -> (Vector, Option<Vec<f64>>) {
    let (logits, max) = data.logits(x, sigma);
    let mut r = Vector::zeros(data.dim());
    let mut total = 0.0;
    let mut ws = Vec::with_capacity(if keep_weights { logits.len() } else { 0 });
    for (p, l) in data.iter().zip(&logits) {
        let w = (l - max).exp();
        total += w;
        if w > 0.0 {
            for (a, y) in r.iter_mut().zip(p) {
                *a += w * y;
            }
        }
        if keep_weights {
            ws.push(w);
        }
    }
    r /= total;
    let weights = keep_weights.then(|| ws.into_iter().map(|w| w / total).collect());
    (r, weights)
}

/// Posterior mean of the empirical distribution at noise level `sigma`.
pub fn optimal_denoise(data: &Dataset, x: &Vector, sigma: f64) -> Result<DenoiserOutput> {
    check_query(data.dim(), x, sigma)?;
    let (r, _) = weighted_mean(data, x, sigma, false);
    Ok(DenoiserOutput::from_r(x, r, sigma))
}

/// Like [`optimal_denoise`] but also returns the softmax weights `u_i`.
pub fn optimal_denoise_with_weights(data: &Dataset, x: &Vector, sigma: f64) -> Result<DenoiserOutput> {
    check_query(data.dim(), x, sigma)?;
    let (r, weights) = weighted_mean(data, x, sigma, true);
    let mut out = DenoiserOutput::from_r(x, r, sigma);
    out.weights = weights;
    Ok(out)
}

/// `log[(1/|I|) Σ_i N(x; y_i, h² I)]`, evaluated with log-sum-exp.
pub fn kde_log_density(data: &Dataset, x: &Vector, h: f64) -> Result<f64> {
    check_query(data.dim(), x, h)?;
    let (logits, max) = data.logits(x, h);
    let sum: f64 = logits.iter().map(|l| (l - max).exp()).sum();
    let d = data.dim() as f64;
    let norm = -0.5 * d * (2.0 * std::f64::consts::PI * h * h).ln();
    Ok(max + sum.ln() - (data.len() as f64).ln() + norm)
}

/// One Gaussian mean-shift iteration with bandwidth `h`.
pub fn mean_shift_step(data: &Dataset, x: &Vector, h: f64) -> Result<Vector> {
    optimal_denoise(data, x, h).map(|o| o.r)
}

/// The exact denoiser of a dataset, shareable across threads.
#[derive(Clone, Debug)]
pub struct OptimalDenoiser {
    data: Arc<Dataset>,
}

impl OptimalDenoiser {
    pub fn new(data: Dataset) -> Self {
        Self { data: Arc::new(data) }
    }

    pub fn from_arc(data: Arc<Dataset>) -> Self {
        Self { data }
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }
}

impl Denoiser for OptimalDenoiser {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn denoise(&self, x: &Vector, sigma: f64) -> Result<DenoiserOutput> {
        optimal_denoise(&self.data, x, sigma)
    }
}

/// Returns the same `r` for every query.
#[derive(Clone, Debug)]
pub struct ConstantDenoiser {
    value: Vector,
}

impl ConstantDenoiser {
    pub fn new(value: Vector) -> Self {
        Self { value }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(Vector::zeros(dim))
    }
}

impl Denoiser for ConstantDenoiser {
    fn dim(&self) -> usize {
        self.value.len()
    }

    fn denoise(&self, x: &Vector, sigma: f64) -> Result<DenoiserOutput> {
        check_query(self.value.len(), x, sigma)?;
        Ok(DenoiserOutput::from_r(x, self.value.clone(), sigma))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DirectionMode {
    /// Direction is a deterministic function of the seed and the query `(x, σ)`.
    FixedRandom,
    /// Each call advances to the next stream of the seed.
    PerQueryRandom,
}

/// The optimal denoiser pushed off by a controlled amount:
/// `r = r* + scale·‖r* − x‖·û`, so `‖r − r*‖ = scale·‖r* − x‖`.
#[derive(Debug)]
pub struct PerturbedDenoiser {
    base: OptimalDenoiser,
    deviation_scale: f64,
    seed: u64,
    mode: DirectionMode,
    calls: AtomicU64,
}

impl PerturbedDenoiser {
    pub fn new(base: OptimalDenoiser, deviation_scale: f64, seed: u64, mode: DirectionMode) -> Result<Self> {
        if !(deviation_scale >= 0.0) || !deviation_scale.is_finite() {
            return Err(Error::domain(format!("deviation scale must be non-negative, got {deviation_scale}")));
        }
        Ok(Self { base, deviation_scale, seed, mode, calls: AtomicU64::new(0) })
    }

    pub fn base(&self) -> &OptimalDenoiser {
        &self.base
    }

    pub fn deviation_scale(&self) -> f64 {
        self.deviation_scale
    }

    fn direction(&self, x: &Vector, sigma: f64) -> Vector {
        let index = match self.mode {
            DirectionMode::FixedRandom => {
                let mut h = splitmix64(sigma.to_bits());
                for v in x.iter() {
                    let q = (v * 1e9).round() as i64;
                    h = splitmix64(h ^ q as u64);
                }
                h
            }
            DirectionMode::PerQueryRandom => self.calls.fetch_add(1, Ordering::Relaxed),
        };
        let mut rng = stream(self.seed, Purpose::Direction, index);
        loop {
            let g = standard_normal_vector(&mut rng, x.len());
            let n = g.norm();
            if n > 0.0 {
                return g / n;
            }
        }
    }

    pub fn perturbed_denoise(&self, x: &Vector, sigma: f64) -> Result<DenoiserOutput> {
        let opt = self.base.denoise(x, sigma)?;
        if self.deviation_scale == 0.0 {
            return Ok(opt);
        }
        let radius = self.deviation_scale * (&opt.r - x).norm();
        let r = &opt.r + self.direction(x, sigma) * radius;
        Ok(DenoiserOutput::from_r(x, r, sigma))
    }
}

impl Denoiser for PerturbedDenoiser {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn denoise(&self, x: &Vector, sigma: f64) -> Result<DenoiserOutput> {
        self.perturbed_denoise(x, sigma)
    }
}
