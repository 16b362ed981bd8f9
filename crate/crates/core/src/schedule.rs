//! Handcrafted time schedules.
//!
//! All generators emit `t_N … t_0` in descending order with the two endpoints
//! pinned to exactly `t_max` and `t_min`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_T_MIN: f64 = 0.002;
pub const DEFAULT_T_MAX: f64 = 80.0;
pub const DEFAULT_RHO: f64 = 7.0;
pub const DEFAULT_EPS_S: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Uniform,
    Logsnr,
    Polynomial,
    Gits,
    Explicit,
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ScheduleKind::Uniform => "uniform",
            ScheduleKind::Logsnr => "logsnr",
            ScheduleKind::Polynomial => "polynomial",
            ScheduleKind::Gits => "gits",
            ScheduleKind::Explicit => "explicit",
        };
        f.write_str(s)
    }
}

impl FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(ScheduleKind::Uniform),
            "logsnr" => Ok(ScheduleKind::Logsnr),
            "polynomial" | "poly" | "edm" => Ok(ScheduleKind::Polynomial),
            "gits" => Ok(ScheduleKind::Gits),
            "explicit" => Ok(ScheduleKind::Explicit),
            other => Err(Error::Parse(format!("unknown schedule kind {other:?}"))),
        }
    }
}

/// Strictly decreasing timestamps `t_N … t_0` driving a sampler.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSchedule {
    kind: ScheduleKind,
    times: Vec<f64>,
    #[serde(default)]
    params: BTreeMap<String, f64>,
}

impl TimeSchedule {
    pub fn new(kind: ScheduleKind, times: Vec<f64>, params: BTreeMap<String, f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::domain("a schedule needs at least two timestamps"));
        }
        if times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::domain("schedule timestamps must be finite and positive"));
        }
        if let Some(w) = times.windows(2).find(|w| !(w[0] > w[1])) {
            return Err(Error::domain(format!("schedule is not strictly decreasing at {} -> {}", w[0], w[1])));
        }
        Ok(Self { kind, times, params })
    }

    pub fn explicit(times: Vec<f64>) -> Result<Self> {
        Self::new(ScheduleKind::Explicit, times, BTreeMap::new())
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    /// Number of intervals `N`.
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn t_max(&self) -> f64 {
        self.times[0]
    }

    pub fn t_min(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Consecutive `(t_cur, t_next)` pairs, from `t_N` downwards.
    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.windows(2).map(|w| (w[0], w[1]))
    }

    /// Keeps the timestamps at the given (increasing) indices.
    pub fn subset(&self, indices: &[usize], kind: ScheduleKind) -> Result<Self> {
        let times = indices
            .iter()
            .map(|&i| self.times.get(i).copied().ok_or_else(|| Error::domain(format!("index {i} outside schedule"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(kind, times, self.params.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: TimeSchedule = serde_json::from_str(text)?;
        Self::new(raw.kind, raw.times, raw.params)
    }
}

fn check_bounds(n_steps: usize, t_min: f64, t_max: f64) -> Result<()> {
    if n_steps < 1 {
        return Err(Error::domain("a schedule needs at least one step"));
    }
    if !(t_min > 0.0 && t_max > t_min && t_max.is_finite()) {
        return Err(Error::domain(format!("invalid time range [{t_min}, {t_max}]")));
    }
    Ok(())
}

/// Builds a descending schedule from `f(n/N)` evaluated at `n = N … 0`.
fn from_fraction(
    kind: ScheduleKind,
    n_steps: usize,
    t_min: f64,
    t_max: f64,
    params: BTreeMap<String, f64>,
    f: impl Fn(f64) -> f64,
) -> Result<TimeSchedule> {
    let mut times: Vec<f64> = (0..=n_steps).rev().map(|n| f(n as f64 / n_steps as f64)).collect();
    times[0] = t_max;
    times[n_steps] = t_min;
    TimeSchedule::new(kind, times, params)
}

/// `t_n = (t_min^{1/ρ} + (n/N)(t_max^{1/ρ} − t_min^{1/ρ}))^ρ`.
pub fn polynomial_schedule(n_steps: usize, t_min: f64, t_max: f64, rho: f64) -> Result<TimeSchedule> {
    check_bounds(n_steps, t_min, t_max)?;
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::domain(format!("rho must be positive, got {rho}")));
    }
    let lo = t_min.powf(1.0 / rho);
    let hi = t_max.powf(1.0 / rho);
    let params = BTreeMap::from([("rho".to_string(), rho), ("t_min".to_string(), t_min), ("t_max".to_string(), t_max)]);
    from_fraction(ScheduleKind::Polynomial, n_steps, t_min, t_max, params, |frac| (lo + frac * (hi - lo)).powf(rho))
}

/// Uniform in `λ = −log t`: a geometric progression from `t_max` to `t_min`.
pub fn logsnr_schedule(n_steps: usize, t_min: f64, t_max: f64) -> Result<TimeSchedule> {
    check_bounds(n_steps, t_min, t_max)?;
    let (lo, hi) = (t_min.ln(), t_max.ln());
    let params = BTreeMap::from([("t_min".to_string(), t_min), ("t_max".to_string(), t_max)]);
    from_fraction(ScheduleKind::Logsnr, n_steps, t_min, t_max, params, |frac| (lo + frac * (hi - lo)).exp())
}

/// The VP time grid, uniform in `τ ∈ [eps_s, 1]`, mapped to VE noise levels.
///
/// `τ = 1` lands on `t_max` and `τ = eps_s` on `t_min`. The warp is evaluated
/// in single precision: the published reference grids were produced that way,
/// and `ln(1 + t_min²)/eps_s` is sensitive enough that double precision moves
/// interior nodes by up to 1.2e-4. Endpoints are pinned in double precision.
/// [`vp_betas`] and [`vp_time_to_sigma`] give the double-precision warp.
pub fn uniform_schedule(n_steps: usize, t_min: f64, t_max: f64, eps_s: f64) -> Result<TimeSchedule> {
    check_bounds(n_steps, t_min, t_max)?;
    if !(eps_s > 0.0 && eps_s < 1.0) {
        return Err(Error::domain(format!("eps_s must lie in (0, 1), got {eps_s}")));
    }
    let (beta_d, beta_min) = vp_betas_single(t_min as f32, t_max as f32, eps_s as f32);
    // the exponent is quadratic in τ, so its slope is positive on [eps_s, 1] iff it is at both ends
    if !(beta_d * eps_s as f32 + beta_min > 0.0 && beta_d + beta_min > 0.0) {
        return Err(Error::domain(format!("VP warp is not monotone for t_min={t_min}, t_max={t_max}, eps_s={eps_s}")));
    }
    let params = BTreeMap::from([
        ("eps_s".to_string(), eps_s),
        ("beta_d".to_string(), f64::from(beta_d)),
        ("beta_min".to_string(), f64::from(beta_min)),
        ("t_min".to_string(), t_min),
        ("t_max".to_string(), t_max),
    ]);
    let (n, eps) = (n_steps as f32, eps_s as f32);
    from_fraction(ScheduleKind::Uniform, n_steps, t_min, t_max, params, |frac| {
        // node index counted from t_max, as τ runs 1 → eps_s
        let from_top = (n_steps as f64 * (1.0 - frac)).round() as f32;
        let tau = 1.0 + from_top / n * (eps - 1.0);
        f64::from(((0.5 * beta_d * tau * tau + beta_min * tau).exp() - 1.0).sqrt())
    })
}

fn vp_betas_single(t_min: f32, t_max: f32, eps_s: f32) -> (f32, f32) {
    let log_min = (t_min * t_min + 1.0).ln();
    let log_max = (t_max * t_max + 1.0).ln();
    let beta_d = 2.0 * (log_min / eps_s - log_max) / (eps_s - 1.0);
    (beta_d, log_max - 0.5 * beta_d)
}

/// `(β_d, β_min)` of the VP time warp whose endpoints hit `t_min` and `t_max`.
pub fn vp_betas(t_min: f64, t_max: f64, eps_s: f64) -> (f64, f64) {
    let log_min = t_min.mul_add(t_min, 1.0).ln();
    let log_max = t_max.mul_add(t_max, 1.0).ln();
    let beta_d = 2.0 / (eps_s - 1.0) * (log_min / eps_s - log_max);
    let beta_min = log_max - 0.5 * beta_d;
    (beta_d, beta_min)
}

pub fn vp_time_to_sigma(tau: f64, beta_d: f64, beta_min: f64) -> f64 {
    (0.5 * beta_d * tau * tau + beta_min * tau).exp_m1().sqrt()
}

/// Generator parameters, used by the CLI and the runner.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    pub n_steps: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub rho: f64,
    pub eps_s: f64,
}

impl ScheduleSpec {
    pub fn new(kind: ScheduleKind, n_steps: usize) -> Self {
        Self { kind, n_steps, t_min: DEFAULT_T_MIN, t_max: DEFAULT_T_MAX, rho: DEFAULT_RHO, eps_s: DEFAULT_EPS_S }
    }

    pub fn build(&self) -> Result<TimeSchedule> {
        match self.kind {
            ScheduleKind::Uniform => uniform_schedule(self.n_steps, self.t_min, self.t_max, self.eps_s),
            ScheduleKind::Logsnr => logsnr_schedule(self.n_steps, self.t_min, self.t_max),
            ScheduleKind::Polynomial => polynomial_schedule(self.n_steps, self.t_min, self.t_max, self.rho),
            ScheduleKind::Gits | ScheduleKind::Explicit => {
                Err(Error::domain(format!("{} schedules are not produced by a closed-form generator", self.kind)))
            }
        }
    }
}
