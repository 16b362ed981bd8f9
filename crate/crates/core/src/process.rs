//! Linear diffusion schemes and the change of variables between them.
//!
//! A linear scheme perturbs data with the kernel `z_t = s_t·z_0 + s_t·σ_t·ε`.
//! Every such scheme maps onto the variance-exploding one through
//! `x_t = z_t / s_t`, which keeps the signal-to-noise ratio `1/σ_t²` intact.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::denoise::Denoiser;
use crate::error::{check_dim, Error, Result};
use crate::rng::standard_normal_vector;
use crate::schedule::TimeSchedule;
use crate::Vector;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemeKind {
    /// `s(t) = 1`, `σ(t) = t`.
    Ve,
    /// `s(t) = 1/√(1+t²)`, `σ(t) = t`, so that `s²(1+σ²) = 1`.
    VpPreset,
    Custom,
}

/// The `(s_t, σ_t)` pair of a linear diffusion process.
#[derive(Clone)]
pub struct LinearScheme {
    kind: SchemeKind,
    sigma: ScalarFn,
    scale: ScalarFn,
    pub t_min: f64,
    pub t_max: f64,
}

impl fmt::Debug for LinearScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearScheme")
            .field("kind", &self.kind)
            .field("t_min", &self.t_min)
            .field("t_max", &self.t_max)
            .finish()
    }
}

impl LinearScheme {
    pub const DEFAULT_T_MIN: f64 = 0.002;
    pub const DEFAULT_T_MAX: f64 = 80.0;

    pub fn ve() -> Self {
        Self {
            kind: SchemeKind::Ve,
            sigma: Arc::new(|t| t),
            scale: Arc::new(|_| 1.0),
            t_min: Self::DEFAULT_T_MIN,
            t_max: Self::DEFAULT_T_MAX,
        }
    }

    pub fn vp() -> Self {
        Self {
            kind: SchemeKind::VpPreset,
            sigma: Arc::new(|t| t),
            scale: Arc::new(|t| 1.0 / (1.0 + t * t).sqrt()),
            t_min: Self::DEFAULT_T_MIN,
            t_max: Self::DEFAULT_T_MAX,
        }
    }

    /// Builds a scheme from closed-form `σ(t)` and `s(t)`.
    ///
    /// The invariants (σ increasing and positive, `s > 0`, `s(0) = 1`) are
    /// checked on a 257-point probe of `[0, t_max]`.
    pub fn custom(
        sigma: impl Fn(f64) -> f64 + Send + Sync + 'static,
        scale: impl Fn(f64) -> f64 + Send + Sync + 'static,
        t_min: f64,
        t_max: f64,
    ) -> Result<Self> {
        if !(t_min > 0.0 && t_max > t_min && t_max.is_finite()) {
            return Err(Error::domain(format!("invalid time range [{t_min}, {t_max}]")));
        }
        if (scale(0.0) - 1.0).abs() > 1e-12 {
            return Err(Error::domain("s(0) must equal 1"));
        }
        let mut prev_sigma = sigma(0.0);
        if !(prev_sigma >= 0.0) {
            return Err(Error::domain("σ(0) must be non-negative"));
        }
        for k in 1..=256 {
            let t = t_max * k as f64 / 256.0;
            let (sg, sc) = (sigma(t), scale(t));
            if !(sg > prev_sigma) || !sg.is_finite() {
                return Err(Error::domain(format!("σ is not strictly increasing at t={t}")));
            }
            if !(sc > 0.0) || !sc.is_finite() {
                return Err(Error::domain(format!("s is not positive at t={t}")));
            }
            prev_sigma = sg;
        }
        Ok(Self { kind: SchemeKind::Custom, sigma: Arc::new(sigma), scale: Arc::new(scale), t_min, t_max })
    }

    pub fn with_range(mut self, t_min: f64, t_max: f64) -> Self {
        self.t_min = t_min;
        self.t_max = t_max;
        self
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn sigma(&self, t: f64) -> f64 {
        (self.sigma)(t)
    }

    pub fn scale(&self, t: f64) -> f64 {
        (self.scale)(t)
    }

    /// Signal-to-noise ratio `s²/(s²σ²) = 1/σ²`; identical for a scheme and its VE transform.
    pub fn snr(&self, t: f64) -> f64 {
        let s = self.scale(t);
        let sg = self.sigma(t);
        (s * s) / (s * s * sg * sg)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t.is_finite() && (0.0..=self.t_max).contains(&t) {
            Ok(())
        } else {
            Err(Error::domain(format!("time {t} outside [0, {}]", self.t_max)))
        }
    }

    fn positive_scale(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let s = self.scale(t);
        if s > 0.0 {
            Ok(s)
        } else {
            Err(Error::domain(format!("scale s({t}) = {s} is not positive")))
        }
    }
}

/// One forward draw `x = s·x0 + s·σ·ε` together with its ingredients.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardSample {
    pub t: f64,
    pub x: Vector,
    pub x0: Vector,
    pub eps: Vector,
}

pub fn perturb<R: Rng + ?Sized>(scheme: &LinearScheme, x0: &Vector, t: f64, rng: &mut R) -> Result<ForwardSample> {
    let eps = standard_normal_vector(rng, x0.len());
    perturb_with_noise(scheme, x0, t, eps)
}

/// Forward perturbation with a caller-supplied noise draw.
pub fn perturb_with_noise(scheme: &LinearScheme, x0: &Vector, t: f64, eps: Vector) -> Result<ForwardSample> {
    scheme.check_time(t)?;
    check_dim(x0.len(), eps.len())?;
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("x0 has non-finite entries"));
    }
    let s = scheme.scale(t);
    let noise = s * scheme.sigma(t);
    let x = x0 * s + &eps * noise;
    Ok(ForwardSample { t, x, x0: x0.clone(), eps })
}

/// `x = z / s(t)`: maps a state of `scheme` to VE coordinates.
pub fn to_ve(scheme: &LinearScheme, z: &Vector, t: f64) -> Result<Vector> {
    let s = scheme.positive_scale(t)?;
    Ok(z / s)
}

/// `z = s(t)·x`: inverse of [`to_ve`].
pub fn from_ve(scheme: &LinearScheme, x: &Vector, t: f64) -> Result<Vector> {
    let s = scheme.positive_scale(t)?;
    Ok(x * s)
}

/// Runs two samplers along `schedule` and returns the largest relative gap
/// `‖z_t/s_t − x_t‖ / ‖x_t‖` between them.
///
/// The first works in the scheme's own coordinates with the first-order
/// exponential-integrator update
/// `z_next = (s_next/s_cur)·z + s_next·(σ_next − σ_cur)·ε(z)`; the second is
/// the plain Euler step on the VE PF-ODE. `denoiser` always receives VE
/// coordinates and the noise level σ.
pub fn verify_space_equivalence(
    scheme: &LinearScheme,
    denoiser: &dyn Denoiser,
    schedule: &TimeSchedule,
    x_init_ve: &Vector,
) -> Result<f64> {
    check_dim(denoiser.dim(), x_init_ve.len())?;
    let tol = 1e-12 * scheme.t_max;
    for &t in schedule.times() {
        if t < scheme.t_min - tol || t > scheme.t_max + tol {
            return Err(Error::domain(format!(
                "schedule time {t} outside scheme range [{}, {}]",
                scheme.t_min, scheme.t_max
            )));
        }
    }

    let times = schedule.times();
    let mut z = from_ve(scheme, x_init_ve, times[0])?;
    let mut x = x_init_ve.clone();
    let mut worst = 0.0_f64;
    for pair in times.windows(2) {
        let (t_cur, t_next) = (pair[0], pair[1]);
        let (s_cur, s_next) = (scheme.scale(t_cur), scheme.scale(t_next));
        let (sg_cur, sg_next) = (scheme.sigma(t_cur), scheme.sigma(t_next));

        let out_z = denoiser.denoise(&(&z / s_cur), sg_cur)?;
        z = &z * (s_next / s_cur) + &out_z.eps * (s_next * (sg_next - sg_cur));

        let out_x = denoiser.denoise(&x, sg_cur)?;
        x = &x + &out_x.eps * (sg_next - sg_cur);

        let gap = (&z / s_next - &x).norm();
        let denom = x.norm();
        let rel = if denom > 0.0 { gap / denom } else { gap };
        worst = worst.max(rel);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoise::{ConstantDenoiser, Dataset, OptimalDenoiser};
    use crate::rng::{stream, Purpose};
    use crate::schedule::polynomial_schedule;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn zero_noise_limit_returns_origin() {
        let mut rng = stream(1, Purpose::InitialNoise, 0);
        let s = perturb(&LinearScheme::ve(), &v(&[1.0, 1.0]), 0.0, &mut rng).unwrap();
        assert_eq!(s.x, v(&[1.0, 1.0]));
    }

    #[test]
    fn vp_forced_noise_is_scaled_origin() {
        let s = perturb_with_noise(&LinearScheme::vp(), &v(&[2.0, 0.0]), 1.0, v(&[0.0, 0.0])).unwrap();
        assert!((s.x[0] - 2.0 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.x[1], 0.0);
    }

    #[test]
    fn ve_shell_at_unit_sigma() {
        let mut rng = stream(11, Purpose::InitialNoise, 0);
        let s = perturb(&LinearScheme::ve(), &Vector::zeros(10_000), 1.0, &mut rng).unwrap();
        let n = s.x.norm();
        assert!((97.0..=103.0).contains(&n), "norm {n}");
        assert_eq!(s.x, s.eps);
    }

    #[test]
    fn perturb_rejects_bad_inputs() {
        let mut rng = stream(1, Purpose::InitialNoise, 0);
        let ve = LinearScheme::ve();
        assert!(perturb(&ve, &v(&[f64::NAN]), 1.0, &mut rng).is_err());
        assert!(perturb(&ve, &v(&[0.0]), 81.0, &mut rng).is_err());
        assert!(perturb(&ve, &v(&[0.0]), -1.0, &mut rng).is_err());
    }

    #[test]
    fn perturb_marginal_variance() {
        let scheme = LinearScheme::vp();
        let t = 1.5;
        let x0 = v(&[0.3, -0.7]);
        let mut rng = stream(5, Purpose::InitialNoise, 0);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let s = perturb(&scheme, &x0, t, &mut rng).unwrap();
            let dev = &s.x - &x0 * scheme.scale(t);
            for c in dev.iter() {
                sum += c;
                sum_sq += c * c;
            }
        }
        let m = (2 * n) as f64;
        let var = sum_sq / m - (sum / m).powi(2);
        let target = (scheme.scale(t) * scheme.sigma(t)).powi(2);
        // standard error of a Gaussian sample variance is target·√(2/m)
        let se = target * (2.0 / m).sqrt();
        assert!((var - target).abs() < 3.0 * se, "var {var} target {target}");
    }

    #[test]
    fn ve_transforms_are_identity() {
        let ve = LinearScheme::ve();
        let z = v(&[3.0, 4.0]);
        assert_eq!(to_ve(&ve, &z, 17.0).unwrap(), z);
        assert_eq!(from_ve(&ve, &v(&[1.0, 2.0]), 3.0).unwrap(), v(&[1.0, 2.0]));
    }

    #[test]
    fn vp_transforms() {
        let vp = LinearScheme::vp();
        let x = to_ve(&vp, &v(&[3.0, 4.0]), 1.0).unwrap();
        assert!((x[0] - 3.0 * 2f64.sqrt()).abs() < 1e-14);
        assert!((x[1] - 4.0 * 2f64.sqrt()).abs() < 1e-14);
        let z = from_ve(&vp, &v(&[1.0, 0.0]), 1.0).unwrap();
        assert!((z[0] - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        let back = from_ve(&vp, &to_ve(&vp, &v(&[3.0, 4.0]), 7.3).unwrap(), 7.3).unwrap();
        assert!((back - v(&[3.0, 4.0])).norm() / 5.0 < 1e-12);
    }

    #[test]
    fn snr_is_preserved() {
        let vp = LinearScheme::vp();
        let ve = LinearScheme::ve();
        for &t in &[0.01, 0.5, 1.0, 10.0, 80.0] {
            let a = vp.snr(t);
            let b = ve.snr(t);
            assert!((a - b).abs() / b < 1e-12);
            assert!((vp.scale(t).powi(2) * (1.0 + vp.sigma(t).powi(2)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn custom_scheme_validation() {
        assert!(LinearScheme::custom(|t| t, |_| 1.0, 0.002, 80.0).is_ok());
        assert!(LinearScheme::custom(|t| -t, |_| 1.0, 0.002, 80.0).is_err());
        assert!(LinearScheme::custom(|t| t, |_| 2.0, 0.002, 80.0).is_err());
        assert!(LinearScheme::custom(|t| t, |t| 1.0 - t, 0.002, 80.0).is_err());
    }

    #[test]
    fn equivalence_ve_is_exact() {
        let data = Dataset::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.5]]).unwrap();
        let den = OptimalDenoiser::new(data);
        let sched = polynomial_schedule(5, 0.002, 80.0, 7.0).unwrap();
        let gap = verify_space_equivalence(&LinearScheme::ve(), &den, &sched, &v(&[30.0, -50.0])).unwrap();
        assert_eq!(gap, 0.0);
    }

    #[test]
    fn equivalence_vp_two_point() {
        let data = Dataset::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        let den = OptimalDenoiser::new(data);
        let sched = polynomial_schedule(5, 0.002, 80.0, 7.0).unwrap();
        let gap = verify_space_equivalence(&LinearScheme::vp(), &den, &sched, &v(&[30.0, -50.0])).unwrap();
        assert!(gap < 1e-9, "{gap}");
    }

    #[test]
    fn equivalence_vp_constant_denoiser() {
        let den = ConstantDenoiser::new(v(&[0.25, -0.5]));
        let sched = polynomial_schedule(2, 0.002, 80.0, 7.0).unwrap();
        let gap = verify_space_equivalence(&LinearScheme::vp(), &den, &sched, &v(&[10.0, 20.0])).unwrap();
        assert!(gap < 1e-12, "{gap}");
    }

    #[test]
    fn equivalence_rejects_out_of_range_schedule() {
        let den = ConstantDenoiser::new(v(&[0.0]));
        let sched = polynomial_schedule(3, 0.002, 100.0, 7.0).unwrap();
        assert!(verify_space_equivalence(&LinearScheme::vp(), &den, &sched, &v(&[1.0])).is_err());
    }
}
