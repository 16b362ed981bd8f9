//! Built-in acceptance checks on synthetic fixtures.
//!
//! Each check returns a [`CriterionOutcome`] instead of panicking so the CLI
//! can print a table and the test harness can assert per criterion.

use std::fmt;

use rand::Rng;
use serde::Serialize;

use crate::denoise::{kde_log_density, optimal_denoise_with_weights, Dataset, Denoiser, OptimalDenoiser};
use crate::error::Result;
use crate::geometry::{
    deviation_profile, eps_norm_profile, gaussian_shell_check, length_and_angles, likelihood_profile, pca_reconstruct,
};
use crate::gits::{dp_schedule, global_error, CostMatrix, DpResult, FineGrid, DEFAULT_GAMMA};
use crate::process::{verify_space_equivalence, LinearScheme};
use crate::rng::{initial_noise, standard_normal_vector, stream, Purpose};
use crate::runner::{gits_search, run_gits, run_sample, DatasetSource, GitsConfig, SampleConfig};
use crate::schedule::{
    logsnr_schedule, polynomial_schedule, uniform_schedule, ScheduleKind, ScheduleSpec, TimeSchedule, DEFAULT_EPS_S,
    DEFAULT_RHO, DEFAULT_T_MAX, DEFAULT_T_MIN,
};
use crate::solvers::{
    euler_step, euler_update, sample, second_order_step, Formulation, HistoryNode, Method, SolverSpec, Trajectory,
};
use crate::synthetic::{cube_corners, gmm, plane, GmmParams};
use crate::Vector;

pub const VERIFY_SEED: u64 = 20_240_517;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionOutcome {
    fn new(id: u32, name: &'static str, passed: bool, detail: String) -> Self {
        Self { id, name, passed, detail }
    }

    fn from_result(id: u32, name: &'static str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => Self::new(id, name, passed, detail),
            Err(e) => Self::new(id, name, false, format!("error: {e}")),
        }
    }
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {:>2} {:<34} {}", if self.passed { "PASS" } else { "FAIL" }, self.id, self.name, self.detail)
    }
}

fn two_mode(dim: usize, seed: u64) -> Result<Dataset> {
    gmm(&GmmParams::new(2, dim), seed)
}

/// Published schedules for 3 to 10 steps, rounded to four decimals.
pub const PUBLISHED_UNIFORM: [&[f64]; 8] = [
    &[80.0000, 6.9503, 1.2867, 0.0020],
    &[80.0000, 11.7343, 2.8237, 0.8565, 0.0020],
    &[80.0000, 16.5063, 4.7464, 1.7541, 0.6502, 0.0020],
    &[80.0000, 20.9656, 6.9503, 2.8237, 1.2867, 0.5272, 0.0020],
    &[80.0000, 25.0154, 9.3124, 4.0679, 2.0043, 1.0249, 0.4447, 0.0020],
    &[80.0000, 28.6496, 11.7343, 5.4561, 2.8237, 1.5621, 0.8565, 0.3852, 0.0020],
    &[80.0000, 31.8981, 14.1472, 6.9503, 3.7419, 2.1599, 1.2867, 0.7382, 0.3401, 0.0020],
    &[80.0000, 34.8018, 16.5063, 8.5141, 4.7464, 2.8237, 1.7541, 1.0985, 0.6502, 0.3047, 0.0020],
];

pub const PUBLISHED_LOGSNR: [&[f64]; 8] = [
    &[80.0000, 2.3392, 0.0684, 0.0020],
    &[80.0000, 5.6569, 0.4000, 0.0283, 0.0020],
    &[80.0000, 9.6090, 1.1542, 0.1386, 0.0167, 0.0020],
    &[80.0000, 13.6798, 2.3392, 0.4000, 0.0684, 0.0117, 0.0020],
    &[80.0000, 17.6057, 3.8745, 0.8527, 0.1876, 0.0413, 0.0091, 0.0020],
    &[80.0000, 21.2732, 5.6569, 1.5042, 0.4000, 0.1064, 0.0283, 0.0075, 0.0020],
    &[80.0000, 24.6462, 7.5929, 2.3392, 0.7207, 0.2220, 0.0684, 0.0211, 0.0065, 0.0020],
    &[80.0000, 27.7258, 9.6090, 3.3302, 1.1542, 0.4000, 0.1386, 0.0480, 0.0167, 0.0058, 0.0020],
];

#[allow(clippy::approx_constant)] // a published table entry, not 1/π
pub const PUBLISHED_POLYNOMIAL: [&[f64]; 8] = [
    &[80.0000, 9.7232, 0.4700, 0.0020],
    &[80.0000, 17.5278, 2.5152, 0.1698, 0.0020],
    &[80.0000, 24.4083, 5.8389, 0.9654, 0.0851, 0.0020],
    &[80.0000, 30.1833, 9.7232, 2.5152, 0.4700, 0.0515, 0.0020],
    &[80.0000, 34.9922, 13.6986, 4.6371, 1.2866, 0.2675, 0.0352, 0.0020],
    &[80.0000, 39.0167, 17.5278, 7.1005, 2.5152, 0.7434, 0.1698, 0.0261, 0.0020],
    &[80.0000, 42.4152, 21.1087, 9.7232, 4.0661, 1.5017, 0.4700, 0.1166, 0.0204, 0.0020],
    &[80.0000, 45.3137, 24.4083, 12.3816, 5.8389, 2.5152, 0.9654, 0.3183, 0.0851, 0.0167, 0.0020],
];

/// 1: closed-form generators against the published four-decimal rows.
pub fn schedule_table() -> CriterionOutcome {
    let run = || -> Result<(bool, String)> {
        let mut worst = 0.0_f64;
        let mut bad = Vec::new();
        for (row, n) in (3..=10).enumerate() {
            let built = [
                ("uniform", uniform_schedule(n, DEFAULT_T_MIN, DEFAULT_T_MAX, DEFAULT_EPS_S)?, PUBLISHED_UNIFORM[row]),
                ("logsnr", logsnr_schedule(n, DEFAULT_T_MIN, DEFAULT_T_MAX)?, PUBLISHED_LOGSNR[row]),
                (
                    "polynomial",
                    polynomial_schedule(n, DEFAULT_T_MIN, DEFAULT_T_MAX, DEFAULT_RHO)?,
                    PUBLISHED_POLYNOMIAL[row],
                ),
            ];
            for (name, sched, expect) in built {
                let gap = sched.times().iter().zip(expect).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                worst = worst.max(gap);
                if sched.times().len() != expect.len() || gap > 0.5e-4 + 1e-12 {
                    bad.push(format!("{name} N={n}"));
                }
            }
        }
        Ok((bad.is_empty(), format!("24 rows, max |diff| {worst:.2e} (limit 5e-5){}", list_failures(&bad))))
    };
    CriterionOutcome::from_result(1, "schedule table reproduction", run())
}

fn list_failures(bad: &[String]) -> String {
    if bad.is_empty() {
        String::new()
    } else {
        format!("; failing: {}", bad.join(", "))
    }
}

fn rel(a: &Vector, b: &Vector) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// 2: native versus generalized-denoising-output second-order steps.
pub fn second_order_equivalence() -> CriterionOutcome {
    let run = || -> Result<(bool, String)> {
        let mut worst = 0.0_f64;
        let mut count = 0;
        for (di, dim) in [2usize, 64].into_iter().enumerate() {
            let data = two_mode(dim, VERIFY_SEED + di as u64)?;
            let den = OptimalDenoiser::new(data);
            for (mi, method) in [Method::Heun, Method::Dpm2, Method::Spndm, Method::DeisAb1].into_iter().enumerate() {
                let mut rng = stream(VERIFY_SEED, Purpose::Evaluation, (di * 10 + mi) as u64);
                for _ in 0..100 {
                    let t_cur = 10f64.powf(rng.random_range(-1.5..1.9));
                    let t_next = t_cur * rng.random_range(0.05..0.95);
                    let t_prev = t_cur * rng.random_range(1.05..3.0);
                    // history comes from an Euler step into the current node
                    let x_prev = standard_normal_vector(&mut rng, dim) * t_prev;
                    let r_prev = den.denoise(&x_prev, t_prev)?.r;
                    let x = euler_update(&x_prev, &r_prev, t_prev, t_cur);
                    let hist = HistoryNode { t: t_prev, x: x_prev, r: r_prev };
                    let native = second_order_step(&SolverSpec::new(method), &den, &x, t_cur, t_next, Some(&hist))?;
                    let general = second_order_step(
                        &SolverSpec::new(method).with_formulation(Formulation::Generalized),
                        &den,
                        &x,
                        t_cur,
                        t_next,
                        Some(&hist),
                    )?;
                    worst = worst.max(rel(&native.x_next, &general.x_next));
                    count += 1;
                }
            }
        }
        Ok((worst <= 1e-9, format!("{count} steps, max relative gap {worst:.2e} (limit 1e-9)")))
    };
    CriterionOutcome::from_result(2, "native vs generalized solvers", run())
}

/// 3: an Euler step to zero noise lands on the denoising output.
pub fn euler_to_zero() -> CriterionOutcome {
    let run = || -> Result<(bool, String)> {
        let mut worst = 0.0_f64;
        for (di, dim) in [2usize, 64].into_iter().enumerate() {
            let den = OptimalDenoiser::new(two_mode(dim, VERIFY_SEED + di as u64)?);
            let mut rng = stream(VERIFY_SEED, Purpose::Evaluation, 100 + di as u64);
            for _ in 0..200 {
                let t = 10f64.powf(rng.random_range(-2.5..1.9));
                let x = standard_normal_vector(&mut rng, dim) * t;
                let (x_next, out) = euler_step(&den, &x, t, 0.0)?;
                worst = worst.max(rel(&x_next, &out.r));
            }
        }
        Ok((worst <= 1e-12, format!("400 queries, max relative gap {worst:.2e} (limit 1e-12)")))
    };
    CriterionOutcome::from_result(3, "euler step to zero noise", run())
}

/// 4: VP and VE samplers agree after the change of variables.
pub fn space_equivalence() -> CriterionOutcome {
    let run = || -> Result<(bool, String)> {
        let mut worst = 0.0_f64;
        let mut cases = 0;
        for (di, dim) in [2usize, 64].into_iter().enumerate() {
            let den = OptimalDenoiser::new(two_mode(dim, VERIFY_SEED + di as u64)?);
            let x_init = initial_noise(VERIFY_SEED, Purpose::Evaluation, 200 + di as u64, dim, DEFAULT_T_MAX);
            for scheme in [LinearScheme::ve(), LinearScheme::vp()] {
                for steps in [5, 10] {
                    let sched = polynomial_schedule(steps, DEFAULT_T_MIN, DEFAULT_T_MAX, DEFAULT_RHO)?;
                    worst = worst.max(verify_space_equivalence(&scheme, &den, &sched, &x_init)?);
                    cases += 1;
                }
            }
        }
        Ok((worst < 1e-9, format!("{cases} runs, max relative gap {worst:.2e} (limit 1e-9)")))
    };
    CriterionOutcome::from_result(4, "VP/VE sampler equivalence", run())
}

/// 5: Tweedie identity, convex hull membership and the two noise limits.
pub fn denoiser_correctness() -> CriterionOutcome {
    let run = || -> Result<(bool, String)> {
        let dim = 2;
        let data = two_mode(dim, VERIFY_SEED)?;
        let den = OptimalDenoiser::new(data.clone());
        let mut rng = stream(VERIFY_SEED, Purpose::Evaluation, 300);

        let mut tweedie = 0.0_f64;
        for _ in 0..50 {
            let i = rng.random_range(0..data.len());
            let sigma: f64 = rng.random_range(0.2..3.0);
            let x = Vector::from_column_slice(data.point(i)) + standard_normal_vector(&mut rng, dim) * sigma;
            let r = den.denoise(&x, sigma)?.r;
            let step = 1e-4 * sigma;
            let mut grad = Vector::zeros(dim);
            for k in 0..dim {
                let mut up = x.clone();
                let mut down = x.clone();
                up[k] += step;
                down[k] -= step;
                grad[k] = (kde_log_density(&data, &up, sigma)? - kde_log_density(&data, &down, sigma)?) / (2.0 * step);
            }
            let score_fd = grad * (sigma * sigma);
            let score = &r - &x;
            tweedie = tweedie.max(rel(&score_fd, &score));
        }

        let mut hull = 0usize;
        let (lo, hi) = data.bounds();
        for _ in 0..10_000 {
            let sigma = 10f64.powf(rng.random_range(-3.0..2.0));
            let x = standard_normal_vector(&mut rng, dim) * rng.random_range(0.0..100.0);
            let out = optimal_denoise_with_weights(&data, &x, sigma)?;
            let w = out.weights.as_deref().unwrap_or_default();
            let total: f64 = w.iter().sum();
            let mut mix = Vector::zeros(dim);
            for (wi, p) in w.iter().zip(data.iter()) {
                mix += Vector::from_column_slice(p) * *wi;
            }
            let inside_box = out.r.iter().enumerate().all(|(k, v)| *v >= lo[k] - 1e-12 && *v <= hi[k] + 1e-12);
            let ok = w.iter().all(|v| *v >= 0.0)
                && (total - 1.0).abs() < 1e-12
                && (&mix - &out.r).norm() < 1e-12
                && inside_box;
            if !ok {
                hull += 1;
            }
        }

        let mut limits = 0.0_f64;
        let mean = data.mean();
        for _ in 0..100 {
            let x = standard_normal_vector(&mut rng, dim) * 2.0;
            let nearest = data
                .iter()
                .map(Vector::from_column_slice)
                .min_by(|a, b| (a - &x).norm().total_cmp(&(b - &x).norm()))
                .expect("dataset is non-empty");
            limits = limits.max((den.denoise(&x, 1e-4)?.r - nearest).norm());
            limits = limits.max((den.denoise(&x, 1e8)?.r - &mean).norm());
        }

        let passed = tweedie <= 1e-4 && hull == 0 && limits <= 1e-9;
        Ok((
            passed,
            format!(
                "tweedie rel {tweedie:.2e} (limit 1e-4), hull failures {hull}/10000, limit gap {limits:.2e} (limit 1e-9)"
            ),
        ))
    };
    CriterionOutcome::from_result(5, "KDE denoiser correctness", run())
}

/// 6: KDE likelihood along optimal Euler trajectories.
pub fn likelihood_monotone() -> CriterionOutcome {
    let run = || -> Result<(bool, String)> {
        let dim = 64;
        let data = two_mode(dim, VERIFY_SEED)?;
        let den = OptimalDenoiser::new(data.clone());
        let sched = polynomial_schedule(50, DEFAULT_T_MIN, DEFAULT_T_MAX, DEFAULT_RHO)?;
        let bandwidths = [0.1, 1.0, 10.0];
        let mut monotone = 0;
        let mut dominance = 0;
        for k in 0..20 {
            let x = initial_noise(VERIFY_SEED, Purpose::Evaluation, 400 + k, dim, DEFAULT_T_MAX);
            let traj = sample(&SolverSpec::euler(), &den, &sched, &x)?;
            let lik = likelihood_profile(&traj, &data, &bandwidths)?;
            monotone += lik.monotone_violations;
            dominance += lik.dominance_violations;
        }
        Ok((
            monotone == 0 && dominance == 0,
            format!("20 trajectories x 3 bandwidths: {monotone} monotonicity and {dominance} dominance violations"),
        ))
    };
    CriterionOutcome::from_result(6, "likelihood monotonicity", run())
}

/// 7: Gaussian shell, trajectory length and the ε-norm band.
pub fn concentration_and_length() -> CriterionOutcome {
    let run = || -> Result<(bool, String)> {
        let mut rng = stream(VERIFY_SEED, Purpose::Shell, 0);
        let (shell_mean, shell_std) = gaussian_shell_check(10_000, 1.0, 1000, &mut rng)?;
        let shell_ok = (99.5..=100.5).contains(&shell_mean);

        let sched = polynomial_schedule(100, DEFAULT_T_MIN, DEFAULT_T_MAX, DEFAULT_RHO)?;
        let cube = OptimalDenoiser::new(cube_corners(1024, 64, VERIFY_SEED)?);
        let target = DEFAULT_T_MAX * 1024f64.sqrt();
        let mut worst_len = 1.0_f64;
        let mut worst_start = 1.0_f64;
        for k in 0..4 {
            let x = initial_noise(VERIFY_SEED, Purpose::Evaluation, 500 + k, 1024, DEFAULT_T_MAX);
            let traj = sample(&SolverSpec::euler(), &cube, &sched, &x)?;
            let ratio = length_and_angles(&traj)?.length / target;
            if (ratio - 1.0).abs() > (worst_len - 1.0).abs() || k == 0 {
                worst_len = ratio;
                worst_start = x.norm() / target;
            }
        }
        let length_ok = (0.95..=1.05).contains(&worst_len);

        let (m, d) = (2usize, 512usize);
        let flat = OptimalDenoiser::new(plane(m, d, 64, VERIFY_SEED)?);
        let lo = ((d - 2 * m) as f64).sqrt();
        let hi = (d as f64).sqrt() + 3.0 * ((2 * m) as f64).sqrt();
        let (mut inside, mut total) = (0usize, 0usize);
        let mut range = (f64::INFINITY, f64::NEG_INFINITY);
        for k in 0..8 {
            let x = initial_noise(VERIFY_SEED, Purpose::Evaluation, 600 + k, d, DEFAULT_T_MAX);
            let traj = sample(&SolverSpec::euler(), &flat, &sched, &x)?;
            for e in eps_norm_profile(&traj) {
                total += 1;
                inside += usize::from(e >= lo && e <= hi);
                range = (range.0.min(e), range.1.max(e));
            }
        }
        let frac = inside as f64 / total as f64;
        let eps_ok = frac >= 0.95;

        Ok((
            shell_ok && length_ok && eps_ok,
            format!(
                "shell mean {shell_mean:.3} std {shell_std:.3}; worst length ratio {worst_len:.4} (its ||x_T|| ratio {worst_start:.4}); eps-norm in [{lo:.3}, {hi:.3}] at {:.1}% of {total} nodes (observed {:.3}..{:.3})",
                100.0 * frac,
                range.0,
                range.1
            ),
        ))
    };
    CriterionOutcome::from_result(7, "concentration and trajectory length", run())
}

/// `γ`-weighted cost of `path`, accumulated from the final (unweighted) jump backwards.
pub fn path_cost(costs: &CostMatrix, path: &[usize], gamma: f64) -> f64 {
    let hops = path.len() - 1;
    let mut acc = costs.get(path[hops - 1], path[hops]).expect("i < j");
    for h in (0..hops - 1).rev() {
        acc += gamma * costs.get(path[h], path[h + 1]).expect("i < j");
    }
    acc
}

/// Minimum over every monotone `budget`-jump path, summed from the last jump backwards.
pub fn brute_force_dp(costs: &CostMatrix, budget: usize, gamma: f64) -> Option<(f64, Vec<usize>)> {
    let n_t = costs.intervals();
    if budget == 0 || budget > n_t {
        return None;
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut inner: Vec<usize> = (1..budget).collect();
    loop {
        let mut path = vec![0];
        path.extend(&inner);
        path.push(n_t);
        let acc = path_cost(costs, &path, gamma);
        if best.as_ref().is_none_or(|(b, _)| acc < *b) {
            best = Some((acc, path));
        }
        // next (budget-1)-combination of 1..n_t-1 in lexicographic order
        let k = inner.len();
        let mut pos = k;
        while pos > 0 && inner[pos - 1] == n_t - 1 - (k - pos) {
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
        inner[pos - 1] += 1;
        for q in pos..k {
            inner[q] = inner[q - 1] + 1;
        }
    }
    best
}

/// 8 with a pluggable search routine, so a broken one can be shown to fail.
pub fn dp_optimality_with(dp: impl Fn(&CostMatrix, usize, f64) -> Result<DpResult>) -> CriterionOutcome {
    let run = || -> Result<(bool, String)> {
        let mut rng = stream(VERIFY_SEED, Purpose::Evaluation, 800);
        let mut cases = 0;
        let mut bad = Vec::new();
        for nodes in 2..=8usize {
            for trial in 0..20 {
                let integer = trial % 2 == 1;
                let times: Vec<f64> = (0..nodes).map(|i| (nodes - i) as f64).collect();
                let costs = CostMatrix::from_fn(times, 1, |_, _| {
                    if integer {
                        rng.random_range(0..5) as f64
                    } else {
                        rng.random_range(0.0..1.0)
                    }
                })?;
                for budget in 1..=(nodes - 1).min(7) {
                    for gamma in [1.0, DEFAULT_GAMMA] {
                        cases += 1;
                        let (want, _) = brute_force_dp(&costs, budget, gamma).expect("feasible");
                        let got = dp(&costs, budget, gamma)?;
                        // paths of equal real cost may round differently, so the
                        // extracted path is checked by re-summing it rather than
                        // by comparing it with the enumeration's first minimizer
                        let valid = got.path_indices.len() == budget + 1
                            && got.path_indices.first() == Some(&0)
                            && got.path_indices.last() == Some(&(nodes - 1))
                            && got.path_indices.windows(2).all(|w| w[0] < w[1]);
                        let resummed = valid.then(|| path_cost(&costs, &got.path_indices, gamma));
                        if got.total_cost != want || resummed != Some(want) {
                            bad.push(format!(
                                "nodes={nodes} budget={budget} gamma={gamma}: got {} via {:?}, exhaustive {want}",
                                got.total_cost, got.path_indices
                            ));
                        }
                    }
                }
            }
        }
        Ok((
            bad.is_empty(),
            format!(
                "{cases} cases, {} mismatches against exhaustive enumeration{}",
                bad.len(),
                list_failures(&bad[..bad.len().min(3)])
            ),
        ))
    };
    CriterionOutcome::from_result(8, "schedule search optimality", run())
}

pub fn dp_optimality() -> CriterionOutcome {
    dp_optimality_with(dp_schedule)
}

/// Settings of the schedule-quality comparison.
#[derive(Clone, Copy, Debug)]
pub struct GitsComparison {
    pub dim: usize,
    pub teacher_nfe: usize,
    pub warmup: usize,
    pub gamma: f64,
    pub reference_nfe: usize,
    pub eval_samples: usize,
    pub repetitions: usize,
}

impl Default for GitsComparison {
    fn default() -> Self {
        Self {
            dim: 64,
            teacher_nfe: 60,
            warmup: 64,
            gamma: DEFAULT_GAMMA,
            reference_nfe: 640,
            eval_samples: 16,
            repetitions: 10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RepetitionResult {
    pub seed: u64,
    /// `(nfe, gits, uniform, logsnr, polynomial)` global errors.
    pub errors: Vec<(usize, f64, f64, f64, f64)>,
}

impl RepetitionResult {
    pub fn gits_wins(&self) -> bool {
        self.errors.iter().all(|(_, g, u, l, p)| g <= u && g <= l && g <= p)
    }
}

pub fn gits_repetition(cfg: &GitsComparison, seed: u64, budgets: &[usize]) -> Result<RepetitionResult> {
    let data = two_mode(cfg.dim, seed)?;
    let den = OptimalDenoiser::new(data.clone());
    let fine = FineGrid::polynomial(cfg.teacher_nfe, DEFAULT_T_MIN, DEFAULT_T_MAX)?;
    let warmup: Vec<Vector> =
        (0..cfg.warmup).map(|k| initial_noise(seed, Purpose::Warmup, k as u64, cfg.dim, DEFAULT_T_MAX)).collect();
    let (_, found) = gits_search(&data, &fine, &warmup, budgets, cfg.gamma)?;

    let inits: Vec<Vector> = (0..cfg.eval_samples)
        .map(|k| initial_noise(seed, Purpose::Evaluation, k as u64, cfg.dim, DEFAULT_T_MAX))
        .collect();
    let reference_grid = polynomial_schedule(cfg.reference_nfe, DEFAULT_T_MIN, DEFAULT_T_MAX, DEFAULT_RHO)?;
    let reference: Vec<Trajectory> =
        inits.iter().map(|x| sample(&SolverSpec::ipndm(4), &den, &reference_grid, x)).collect::<Result<_>>()?;

    let euler = SolverSpec::euler();
    let mut errors = Vec::with_capacity(budgets.len());
    for (nfe, gits) in budgets.iter().zip(&found) {
        let err = |s: &TimeSchedule| global_error(s, &euler, &den, &inits, &reference);
        let handcrafted = |kind| ScheduleSpec::new(kind, *nfe).build();
        errors.push((
            *nfe,
            err(&gits.schedule)?,
            err(&handcrafted(ScheduleKind::Uniform)?)?,
            err(&handcrafted(ScheduleKind::Logsnr)?)?,
            err(&handcrafted(ScheduleKind::Polynomial)?)?,
        ));
    }
    Ok(RepetitionResult { seed, errors })
}

/// 9: searched schedules against the handcrafted ones on the exact model.
pub fn gits_beats_handcrafted() -> CriterionOutcome {
    let run = || -> Result<(bool, String)> {
        let cfg = GitsComparison::default();
        let budgets = [5, 10];
        let mut wins = 0;
        let mut losses = Vec::new();
        let mut totals = [[0.0; 4]; 2];
        for rep in 0..cfg.repetitions {
            let seed = VERIFY_SEED + 1000 * rep as u64;
            let res = gits_repetition(&cfg, seed, &budgets)?;
            for (acc, &(_, g, u, l, p)) in totals.iter_mut().zip(&res.errors) {
                for (a, e) in acc.iter_mut().zip([g, u, l, p]) {
                    *a += e / cfg.repetitions as f64;
                }
            }
            if res.gits_wins() {
                wins += 1;
            } else {
                losses.push(format!("seed {seed}"));
            }
        }
        let need = (cfg.repetitions * 9).div_ceil(10);
        let means: Vec<String> = budgets
            .iter()
            .zip(&totals)
            .map(|(n, [g, u, l, p])| format!("nfe {n} mean gits {g:.3} uniform {u:.3} logsnr {l:.3} polynomial {p:.3}"))
            .collect();
        Ok((
            wins >= need,
            format!(
                "won {wins}/{} repetitions (need {need}); {}{}",
                cfg.repetitions,
                means.join("; "),
                list_failures(&losses[..losses.len().min(3)])
            ),
        ))
    };
    CriterionOutcome::from_result(9, "searched schedule vs handcrafted", run())
}

/// 10: deviation endpoints, PCA monotonicity and the k = 1 identity.
pub fn regularity_self_consistency() -> CriterionOutcome {
    let run = || -> Result<(bool, String)> {
        let dim = 64;
        let den = OptimalDenoiser::new(two_mode(dim, VERIFY_SEED)?);
        let sched = polynomial_schedule(20, DEFAULT_T_MIN, DEFAULT_T_MAX, DEFAULT_RHO)?;
        let mut issues = Vec::new();
        let mut identity = 0.0_f64;
        for k in 0..5 {
            let x = initial_noise(VERIFY_SEED, Purpose::Evaluation, 1000 + k, dim, DEFAULT_T_MAX);
            let traj = sample(&SolverSpec::euler(), &den, &sched, &x)?;
            let (dev, dist) = deviation_profile(&traj)?;
            let scale = dist[0];
            if dev[0] > 1e-9 * scale || dev[dev.len() - 1] > 1e-9 * scale {
                issues.push(format!("trajectory {k}: endpoint deviation"));
            }
            let k_max = traj.len() - 2;
            let pca = pca_reconstruct(std::slice::from_ref(&traj), k_max)?;
            if pca.recon_error.windows(2).any(|w| w[1] > w[0]) {
                issues.push(format!("trajectory {k}: reconstruction error increases"));
            }
            if pca.explained_variance_ratio.windows(2).any(|w| w[1] < w[0]) {
                issues.push(format!("trajectory {k}: explained variance decreases"));
            }
            let rms = (dev.iter().map(|d| d * d).sum::<f64>() / dev.len() as f64).sqrt();
            identity = identity.max((pca.recon_error[0] - rms).abs());
            let full = pca.explained_variance_ratio[k_max - 1];
            if (full - 1.0).abs() > 1e-9 {
                issues.push(format!("trajectory {k}: full-basis ratio {full}"));
            }
        }
        if identity > 1e-9 {
            issues.push(format!("k=1 error differs from RMS deviation by {identity:.2e}"));
        }
        Ok((issues.is_empty(), format!("5 trajectories, k=1 identity gap {identity:.2e}{}", list_failures(&issues))))
    };
    CriterionOutcome::from_result(10, "regularity analytics consistency", run())
}

/// 11: identical single-threaded runs give identical bytes.
pub fn determinism() -> CriterionOutcome {
    let run = || -> Result<(bool, String)> {
        let sample_cfg = SampleConfig {
            seed: 7,
            dataset: DatasetSource::Gmm(GmmParams::new(2, 2)),
            solver: SolverSpec::ipndm(4),
            schedule: ScheduleSpec::new(ScheduleKind::Polynomial, 10),
            batch: 2,
            threads: Some(1),
        };
        let sample_same = run_sample(&sample_cfg)? == run_sample(&sample_cfg)?;
        let mut gits_cfg = GitsConfig::new(DatasetSource::Gmm(GmmParams::new(2, 8)), vec![5, 10]);
        gits_cfg.seed = 7;
        gits_cfg.warmup = 8;
        gits_cfg.dump_costs = true;
        gits_cfg.threads = Some(1);
        let gits_same = run_gits(&gits_cfg)? == run_gits(&gits_cfg)?;
        Ok((sample_same && gits_same, format!("sample identical: {sample_same}, gits identical: {gits_same}")))
    };
    CriterionOutcome::from_result(11, "single-threaded determinism", run())
}

pub type Check = fn() -> CriterionOutcome;

pub const ALL_CHECKS: [Check; 11] = [
    schedule_table,
    second_order_equivalence,
    euler_to_zero,
    space_equivalence,
    denoiser_correctness,
    likelihood_monotone,
    concentration_and_length,
    dp_optimality,
    gits_beats_handcrafted,
    regularity_self_consistency,
    determinism,
];

pub fn run_all() -> Vec<CriterionOutcome> {
    ALL_CHECKS.iter().map(|check| check()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brute_force_enumerates_every_path() {
        let c = CostMatrix::from_fn(vec![4.0, 3.0, 2.0, 1.0, 0.5], 1, |i, j| (j - i) as f64 * (j - i) as f64).unwrap();
        // straight jumps of length one are cheapest under a convex cost
        let (cost, path) = brute_force_dp(&c, 4, 1.0).unwrap();
        assert_eq!((cost, path), (4.0, vec![0, 1, 2, 3, 4]));
        let (cost, path) = brute_force_dp(&c, 2, 1.0).unwrap();
        assert_eq!((cost, path), (8.0, vec![0, 2, 4]));
        assert!(brute_force_dp(&c, 5, 1.0).is_none());
    }

    #[test]
    fn cheap_checks_pass() {
        for check in [schedule_table, euler_to_zero, dp_optimality] {
            let out = check();
            assert!(out.passed, "{out}");
        }
    }
}
