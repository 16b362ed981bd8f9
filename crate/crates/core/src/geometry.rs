//! Regularity statistics of sampling trajectories.
//!
//! Conventions: node 0 of a [`Trajectory`] is the initial noise `x̂_{t_N}` and
//! the last node is the sample `x̂_{t_0}`. The chord runs between the two.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::denoise::{kde_log_density, Dataset, Denoiser, OptimalDenoiser, PerturbedDenoiser};
use crate::error::{check_dim, Error, Result};
use crate::io::fmt17;
use crate::rng::standard_normal_vector;
use crate::schedule::TimeSchedule;
use crate::solvers::{sample, SolverSpec, Trajectory};
use crate::Vector;

/// Absolute slack, in log-density, for the likelihood orderings.
pub const LIKELIHOOD_TOL: f64 = 1e-9;

fn chord(traj: &Trajectory) -> Result<(Vector, f64)> {
    if traj.len() < 2 {
        return Err(Error::domain("trajectory needs at least two nodes"));
    }
    let c = traj.initial() - traj.final_state();
    let len = c.norm();
    if !(len > 0.0) {
        return Err(Error::domain("trajectory endpoints coincide"));
    }
    Ok((c / len, len))
}

/// Residual of `x̂_{t_n} − x̂_{t_0}` after removing its component along `u`.
fn chord_residual(x: &Vector, origin: &Vector, u: &Vector) -> Vector {
    let d = x - origin;
    let along = d.dot(u);
    d - u * along
}

/// Per-node perpendicular distance to the chord, and distance to the final sample.
pub fn deviation_profile(traj: &Trajectory) -> Result<(Vec<f64>, Vec<f64>)> {
    let (u, _) = chord(traj)?;
    let origin = traj.final_state();
    let mut dev = Vec::with_capacity(traj.len());
    let mut dist = Vec::with_capacity(traj.len());
    for x in &traj.states {
        // the explicit residual avoids the cancellation in ‖d‖² − ⟨d, u⟩²
        dev.push(chord_residual(x, origin, &u).norm());
        dist.push((x - origin).norm());
    }
    Ok((dev, dist))
}

/// Mean reconstruction error and explained variance over a set of trajectories.
///
/// `recon_error[k-1]` is the root-mean-square (over nodes) distance between a
/// trajectory and its reconstruction from the chord plus the top `k − 1`
/// principal directions of the chord residuals. `explained_variance_ratio[k-1]`
/// is the share of the top `k` eigenvalues of the (uncentered) residual scatter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaReport {
    pub k_values: Vec<usize>,
    pub recon_error: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    /// Per trajectory: the unit chord followed by up to `k_max − 1` principal directions.
    pub basis: Vec<Vec<Vec<f64>>>,
}

struct SinglePca {
    recon_error: Vec<f64>,
    ratio: Vec<f64>,
    basis: Vec<Vec<f64>>,
}

fn pca_single(traj: &Trajectory, k_max: usize) -> Result<SinglePca> {
    let (u, _) = chord(traj)?;
    let origin = traj.final_state();
    let n = traj.len();
    let residuals: Vec<Vector> = traj.states.iter().map(|x| chord_residual(x, origin, &u)).collect();

    // eigenvectors of the d×d scatter from the n×n Gram matrix
    let gram = DMatrix::from_fn(n, n, |a, b| residuals[a].dot(&residuals[b]));
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lambdas: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let trace: f64 = residuals.iter().map(Vector::norm_squared).sum();

    let mut pcs: Vec<Vector> = Vec::new();
    for &i in order.iter().take(k_max.saturating_sub(1)) {
        let v = eig.eigenvectors.column(i);
        let mut p = Vector::zeros(u.len());
        for (a, r) in residuals.iter().enumerate() {
            p.axpy(v[a], r, 1.0);
        }
        let norm = p.norm();
        if norm > 1e-12 * trace.sqrt().max(f64::MIN_POSITIVE) {
            pcs.push(p / norm);
        }
    }

    let mut recon_error = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let used = &pcs[..(k - 1).min(pcs.len())];
        let sq: f64 = residuals
            .iter()
            .map(|e| {
                let mut rest = e.clone();
                for p in used {
                    let c = rest.dot(p);
                    rest.axpy(-c, p, 1.0);
                }
                rest.norm_squared()
            })
            .sum();
        recon_error.push((sq / n as f64).sqrt());
    }
    for w in 1..recon_error.len() {
        // re-orthogonalisation round-off must not make the curve tick upward
        recon_error[w] = recon_error[w].min(recon_error[w - 1]);
    }

    let mut ratio = Vec::with_capacity(k_max);
    let total: f64 = lambdas.iter().sum();
    let mut acc = 0.0;
    for k in 1..=k_max {
        if let Some(l) = lambdas.get(k - 1) {
            acc += l;
        }
        ratio.push(if total > 0.0 { (acc / total).min(1.0) } else { 1.0 });
    }

    let mut basis = vec![u.iter().copied().collect::<Vec<_>>()];
    basis.extend(pcs.iter().map(|p| p.iter().copied().collect()));
    Ok(SinglePca { recon_error, ratio, basis })
}

pub fn pca_reconstruct(trajs: &[Trajectory], k_max: usize) -> Result<PcaReport> {
    if trajs.is_empty() {
        return Err(Error::domain("no trajectories to analyse"));
    }
    if k_max == 0 {
        return Err(Error::domain("k_max must be at least 1"));
    }
    for t in trajs {
        if t.len() < k_max + 1 {
            return Err(Error::domain(format!(
                "trajectory has {} nodes, need at least {} for k_max = {k_max}",
                t.len(),
                k_max + 1
            )));
        }
    }
    let singles: Vec<SinglePca> = trajs.par_iter().map(|t| pca_single(t, k_max)).collect::<Result<_>>()?;
    let m = singles.len() as f64;
    let mut recon_error = vec![0.0; k_max];
    let mut ratio = vec![0.0; k_max];
    for s in &singles {
        for k in 0..k_max {
            recon_error[k] += s.recon_error[k] / m;
            ratio[k] += s.ratio[k] / m;
        }
    }
    Ok(PcaReport {
        k_values: (1..=k_max).collect(),
        recon_error,
        explained_variance_ratio: ratio,
        basis: singles.into_iter().map(|s| s.basis).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthAndAngles {
    pub length: f64,
    /// Angle between consecutive displacements, one per interior node.
    pub angles_deg: Vec<f64>,
    pub cosines: Vec<f64>,
}

/// Polyline length and turning angles. A zero-length segment reports angle 0.
pub fn length_and_angles(traj: &Trajectory) -> Result<LengthAndAngles> {
    if traj.len() < 2 {
        return Err(Error::domain("trajectory needs at least two nodes"));
    }
    let steps: Vec<Vector> = traj.states.windows(2).map(|w| &w[1] - &w[0]).collect();
    let length = steps.iter().map(Vector::norm).sum();
    let mut angles_deg = Vec::with_capacity(steps.len().saturating_sub(1));
    let mut cosines = Vec::with_capacity(angles_deg.capacity());
    for w in steps.windows(2) {
        let (na, nb) = (w[0].norm(), w[1].norm());
        let cos = if na > 0.0 && nb > 0.0 { (w[0].dot(&w[1]) / (na * nb)).clamp(-1.0, 1.0) } else { 1.0 };
        cosines.push(cos);
        angles_deg.push(cos.acos().to_degrees());
    }
    Ok(LengthAndAngles { length, angles_deg, cosines })
}

fn eps_norms_by_node(traj: &Trajectory) -> Vec<Option<f64>> {
    traj.states
        .iter()
        .zip(&traj.denoised)
        .zip(&traj.times)
        .map(|((x, r), t)| r.as_ref().map(|r| ((x - r) / *t).norm()))
        .collect()
}

/// `‖(x̂_{t_n} − r(x̂_{t_n}))/t_n‖` at every node that carries a denoising output.
pub fn eps_norm_profile(traj: &Trajectory) -> Vec<f64> {
    eps_norms_by_node(traj).into_iter().flatten().collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodProfile {
    pub bandwidths: Vec<f64>,
    /// `values[b][n]`: KDE log-density of node `n` at bandwidth `b`.
    pub values: Vec<Vec<f64>>,
    /// Same for the denoising output at node `n`, where present.
    pub denoised_values: Vec<Vec<Option<f64>>>,
    /// Non-decreasing from `t_N` to `t_0` at every bandwidth.
    pub monotone: bool,
    /// `p_h(r(x̂)) ≥ p_h(x̂)` wherever `r` was recorded.
    pub denoised_dominates: bool,
    pub monotone_violations: usize,
    pub dominance_violations: usize,
}

pub fn likelihood_profile(traj: &Trajectory, data: &Dataset, bandwidths: &[f64]) -> Result<LikelihoodProfile> {
    check_dim(data.dim(), traj.dim())?;
    if let Some(h) = bandwidths.iter().find(|h| !(**h > 0.0)) {
        return Err(Error::domain(format!("bandwidth must be positive, got {h}")));
    }
    let mut values = Vec::with_capacity(bandwidths.len());
    let mut denoised_values = Vec::with_capacity(bandwidths.len());
    let mut monotone_violations = 0;
    let mut dominance_violations = 0;
    for &h in bandwidths {
        let row: Vec<f64> = traj.states.iter().map(|x| kde_log_density(data, x, h)).collect::<Result<_>>()?;
        monotone_violations += row.windows(2).filter(|w| w[1] < w[0] - LIKELIHOOD_TOL).count();
        let drow: Vec<Option<f64>> = traj
            .denoised
            .iter()
            .map(|r| r.as_ref().map(|r| kde_log_density(data, r, h)).transpose())
            .collect::<Result<_>>()?;
        dominance_violations +=
            row.iter().zip(&drow).filter(|(p, q)| matches!(q, Some(q) if *q < **p - LIKELIHOOD_TOL)).count();
        values.push(row);
        denoised_values.push(drow);
    }
    Ok(LikelihoodProfile {
        bandwidths: bandwidths.to_vec(),
        values,
        denoised_values,
        monotone: monotone_violations == 0,
        denoised_dominates: dominance_violations == 0,
        monotone_violations,
        dominance_violations,
    })
}

/// Optimal- versus perturbed-driven Euler sampling from a common start.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisReport {
    pub times: Vec<f64>,
    pub deviation_scale: f64,
    /// `‖r*(x̂*) − r(x̂*)‖` along the optimal trajectory.
    pub deviation_on_optimal: Vec<f64>,
    /// `‖r*(x̂) − r(x̂)‖` along the perturbed trajectory, i.e. `d1`.
    pub deviation_on_sampled: Vec<f64>,
    /// `‖r*(x̂) − x̂‖` along the perturbed trajectory, i.e. `d2`.
    pub d2: Vec<f64>,
    pub ratio: Vec<f64>,
    /// Distance between the two sampling trajectories at every node.
    pub state_gap: Vec<f64>,
    #[serde(skip)]
    pub optimal_states: Vec<Vector>,
    #[serde(skip)]
    pub sampled_states: Vec<Vector>,
    #[serde(skip)]
    pub r_on_optimal: Vec<Vector>,
    #[serde(skip)]
    pub r_star_on_optimal: Vec<Vector>,
    #[serde(skip)]
    pub r_star_on_sampled: Vec<Vector>,
}

impl DiagnosisReport {
    pub fn max_ratio(&self) -> f64 {
        self.ratio.iter().copied().fold(0.0, f64::max)
    }
}

pub fn deviation_diagnosis(
    data: &Dataset,
    perturbed: &PerturbedDenoiser,
    schedule: &TimeSchedule,
    x_init: &Vector,
) -> Result<DiagnosisReport> {
    let scale = perturbed.deviation_scale();
    if scale > 1.0 {
        return Err(Error::domain(format!("deviation scale {scale} exceeds 1")));
    }
    check_dim(data.dim(), x_init.len())?;
    let optimal = OptimalDenoiser::new(data.clone());
    let spec = SolverSpec::euler();
    let opt_traj = sample(&spec, &optimal, schedule, x_init)?;
    let pert_traj = sample(&spec, perturbed, schedule, x_init)?;

    let steps = schedule.steps();
    let mut report = DiagnosisReport {
        times: schedule.times()[..steps].to_vec(),
        deviation_scale: scale,
        deviation_on_optimal: Vec::with_capacity(steps),
        deviation_on_sampled: Vec::with_capacity(steps),
        d2: Vec::with_capacity(steps),
        ratio: Vec::with_capacity(steps),
        state_gap: opt_traj.states.iter().zip(&pert_traj.states).map(|(a, b)| (a - b).norm()).collect(),
        optimal_states: opt_traj.states.clone(),
        sampled_states: pert_traj.states.clone(),
        r_on_optimal: Vec::with_capacity(steps),
        r_star_on_optimal: Vec::with_capacity(steps),
        r_star_on_sampled: Vec::with_capacity(steps),
    };
    for n in 0..steps {
        let t = schedule.times()[n];
        let x_star = &opt_traj.states[n];
        let r_star_star = opt_traj.denoised[n].clone().expect("euler records every step");
        let r_on_star = perturbed.denoise(x_star, t)?.r;
        report.deviation_on_optimal.push((&r_star_star - &r_on_star).norm());

        let x = &pert_traj.states[n];
        let r = pert_traj.denoised[n].as_ref().expect("euler records every step");
        let r_star = optimal.denoise(x, t)?.r;
        let d1 = (&r_star - r).norm();
        let d2 = (&r_star - x).norm();
        report.deviation_on_sampled.push(d1);
        report.d2.push(d2);
        report.ratio.push(if d2 > 0.0 { d1 / d2 } else { 0.0 });
        report.r_on_optimal.push(r_on_star);
        report.r_star_on_optimal.push(r_star_star);
        report.r_star_on_sampled.push(r_star);
    }
    Ok(report)
}

/// Empirical mean and standard deviation of `‖z‖` for `z ~ N(0, σ² I_d)`.
pub fn gaussian_shell_check<R: Rng + ?Sized>(
    d: usize,
    sigma: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if d == 0 {
        return Err(Error::domain("dimension must be at least 1"));
    }
    if n_samples < 100 {
        return Err(Error::domain(format!("need at least 100 samples, got {n_samples}")));
    }
    if !(sigma >= 0.0) {
        return Err(Error::domain(format!("sigma must be non-negative, got {sigma}")));
    }
    let norms: Vec<f64> = (0..n_samples).map(|_| standard_normal_vector(rng, d).norm() * sigma).collect();
    let mean = norms.iter().sum::<f64>() / n_samples as f64;
    let var = norms.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n_samples - 1) as f64;
    Ok((mean, var.sqrt()))
}

/// All single-trajectory statistics, as written by the `geometry` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub times: Vec<f64>,
    pub deviation: Vec<f64>,
    pub sample_distance: Vec<f64>,
    pub endpoint_distance: f64,
    pub max_deviation_ratio: f64,
    pub length: f64,
    pub step_angles_deg: Vec<f64>,
    pub step_cosines: Vec<f64>,
    pub eps_norms: Vec<Option<f64>>,
    pub bandwidths: Vec<f64>,
    pub likelihood_curve: Vec<Vec<f64>>,
    pub monotone: bool,
    pub denoised_dominates: bool,
}

impl GeometryReport {
    pub fn analyze(traj: &Trajectory, data: &Dataset, bandwidths: &[f64]) -> Result<Self> {
        let (deviation, sample_distance) = deviation_profile(traj)?;
        let (_, endpoint_distance) = chord(traj)?;
        let max_dev = deviation.iter().copied().fold(0.0, f64::max);
        let la = length_and_angles(traj)?;
        let lik = likelihood_profile(traj, data, bandwidths)?;
        Ok(Self {
            times: traj.times.clone(),
            deviation,
            sample_distance,
            endpoint_distance,
            max_deviation_ratio: max_dev / endpoint_distance,
            length: la.length,
            step_angles_deg: la.angles_deg,
            step_cosines: la.cosines,
            eps_norms: eps_norms_by_node(traj),
            bandwidths: lik.bandwidths,
            likelihood_curve: lik.values,
            monotone: lik.monotone,
            denoised_dominates: lik.denoised_dominates,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// `node,t,deviation,distance,eps_norm,logp_h1,…`, one bandwidth column each.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node,t,deviation,distance,eps_norm");
        for b in 1..=self.bandwidths.len() {
            out.push_str(&format!(",logp_h{b}"));
        }
        out.push('\n');
        for n in 0..self.times.len() {
            out.push_str(&format!(
                "{n},{},{},{},{}",
                fmt17(self.times[n]),
                fmt17(self.deviation[n]),
                fmt17(self.sample_distance[n]),
                self.eps_norms[n].map(fmt17).unwrap_or_default()
            ));
            for row in &self.likelihood_curve {
                out.push(',');
                out.push_str(&fmt17(row[n]));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoise::DirectionMode;
    use crate::rng::{stream, Purpose};
    use crate::schedule::polynomial_schedule;

    fn path(points: &[&[f64]]) -> Trajectory {
        let n = points.len();
        Trajectory {
            times: (0..n).map(|i| (n - i) as f64).collect(),
            states: points.iter().map(|p| Vector::from_column_slice(p)).collect(),
            denoised: vec![None; n],
            nfe: 0,
        }
    }

    #[test]
    fn hand_geometry() {
        let t = path(&[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 0.0]]);
        let (dev, dist) = deviation_profile(&t).unwrap();
        assert_eq!(dev, vec![0.0, 1.0, 0.0]);
        assert!((dist[1] - 2f64.sqrt()).abs() < 1e-15);
        let la = length_and_angles(&t).unwrap();
        assert!((la.angles_deg[0] - 90.0).abs() < 1e-12);
        assert!((la.length - 2.0 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn straight_line_has_zero_angles() {
        let t = path(&[&[0.0, 0.0], &[1.0, 2.0], &[1.0, 2.0], &[3.0, 6.0]]);
        let la = length_and_angles(&t).unwrap();
        assert!(la.angles_deg.iter().all(|a| a.abs() < 1e-6));
        let (dev, _) = deviation_profile(&t).unwrap();
        assert!(dev.iter().all(|d| *d < 1e-12));
    }

    #[test]
    fn coincident_endpoints_rejected() {
        let t = path(&[&[1.0, 0.0], &[2.0, 0.0], &[1.0, 0.0]]);
        assert!(deviation_profile(&t).is_err());
    }

    #[test]
    fn planar_pca_is_exact_at_two() {
        let t = path(&[&[0.0, 0.0, 0.0], &[1.0, 2.0, 0.0], &[2.0, 2.5, 0.0], &[3.0, 1.0, 0.0], &[4.0, 0.0, 0.0]]);
        let rep = pca_reconstruct(std::slice::from_ref(&t), 3).unwrap();
        assert!(rep.recon_error[1] < 1e-9);
        let (dev, _) = deviation_profile(&t).unwrap();
        let rms = (dev.iter().map(|d| d * d).sum::<f64>() / dev.len() as f64).sqrt();
        assert!((rep.recon_error[0] - rms).abs() < 1e-12);
        assert!((rep.explained_variance_ratio[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pca_needs_enough_nodes() {
        let t = path(&[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 0.0]]);
        assert!(pca_reconstruct(&[t], 3).is_err());
    }

    #[test]
    fn point_mass_eps_norm() {
        let data = Dataset::from_rows(&[vec![0.0, 0.0, 0.0]]).unwrap();
        let den = OptimalDenoiser::new(data);
        let x = Vector::from_vec(vec![48.0, 0.0, 64.0]);
        let sched = polynomial_schedule(5, 0.002, 80.0, 7.0).unwrap();
        let traj = sample(&SolverSpec::euler(), &den, &sched, &x).unwrap();
        let eps = eps_norm_profile(&traj);
        assert_eq!(eps.len(), 5);
        assert_eq!(eps[0], 1.0);
    }

    #[test]
    fn constant_trajectory_is_monotone() {
        let data = Dataset::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let t = path(&[&[0.5], &[0.5], &[0.5]]);
        let lik = likelihood_profile(&t, &data, &[0.1, 1.0]).unwrap();
        assert!(lik.monotone && lik.denoised_dominates);
        assert!(likelihood_profile(&t, &data, &[0.0]).is_err());
    }

    #[test]
    fn zero_perturbation_diagnosis() {
        let data = Dataset::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.3]]).unwrap();
        let p = PerturbedDenoiser::new(OptimalDenoiser::new(data.clone()), 0.0, 3, DirectionMode::FixedRandom).unwrap();
        let sched = polynomial_schedule(8, 0.002, 80.0, 7.0).unwrap();
        let rep = deviation_diagnosis(&data, &p, &sched, &Vector::from_vec(vec![30.0, -50.0])).unwrap();
        assert!(rep.deviation_on_optimal.iter().all(|d| *d == 0.0));
        assert!(rep.state_gap.iter().all(|d| *d == 0.0));
    }

    #[test]
    fn diagnosis_ratio_bounded_by_scale() {
        let data = Dataset::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.3], vec![0.2, -0.9]]).unwrap();
        let p =
            PerturbedDenoiser::new(OptimalDenoiser::new(data.clone()), 0.5, 11, DirectionMode::FixedRandom).unwrap();
        let sched = polynomial_schedule(20, 0.002, 80.0, 7.0).unwrap();
        let rep = deviation_diagnosis(&data, &p, &sched, &Vector::from_vec(vec![-20.0, 70.0])).unwrap();
        assert!(rep.ratio.iter().all(|r| *r <= 0.5 + 1e-12));
        assert!(rep.max_ratio() < 1.0);
    }

    #[test]
    fn shell_statistics() {
        let mut rng = stream(1, Purpose::Shell, 0);
        assert_eq!(gaussian_shell_check(50, 0.0, 100, &mut rng).unwrap(), (0.0, 0.0));
        let (m, _) = gaussian_shell_check(400, 1.0, 500, &mut rng).unwrap();
        assert!((m - 20.0).abs() < 0.2);
        assert!(gaussian_shell_check(5, 1.0, 10, &mut rng).is_err());
    }

    #[test]
    fn report_round_trips() {
        let data = Dataset::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.3]]).unwrap();
        let den = OptimalDenoiser::new(data.clone());
        let sched = polynomial_schedule(6, 0.002, 80.0, 7.0).unwrap();
        let traj = sample(&SolverSpec::euler(), &den, &sched, &Vector::from_vec(vec![40.0, 9.0])).unwrap();
        let rep = GeometryReport::analyze(&traj, &data, &[0.1, 1.0, 10.0]).unwrap();
        assert_eq!(GeometryReport::from_json(&rep.to_json().unwrap()).unwrap(), rep);
        let csv = rep.to_csv();
        assert!(csv.starts_with("node,t,deviation,distance,eps_norm,logp_h1,logp_h2,logp_h3\n"));
        assert_eq!(csv.lines().count(), 8);
    }
}
