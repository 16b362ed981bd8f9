//! Geometry-inspired time scheduling.
//!
//! A handful of warmup trajectories are solved on a fine grid with an accurate
//! teacher. Every possible Euler jump `i → j` between grid nodes is scored by
//! its distance to the teacher's own state at `j`, and a shortest-path dynamic
//! program over the resulting upper-triangular cost matrix picks the coarse
//! schedule.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::denoise::Denoiser;
use crate::error::{check_dim, Error, Result};
use crate::io::fmt17;
use crate::schedule::{polynomial_schedule, ScheduleKind, TimeSchedule, DEFAULT_RHO};
use crate::solvers::{euler_update, sample, SolverSpec, Trajectory};
use crate::Vector;

pub const DEFAULT_TEACHER_NFE: usize = 60;
pub const DEFAULT_WARMUP: usize = 256;
pub const DEFAULT_GAMMA: f64 = 1.15;

/// The search space: a fine time grid and the solver that walks it.
#[derive(Clone, Debug, PartialEq)]
pub struct FineGrid {
    pub grid: TimeSchedule,
    pub teacher: SolverSpec,
}

impl FineGrid {
    pub fn new(grid: TimeSchedule, teacher: SolverSpec) -> Result<Self> {
        teacher.validate()?;
        Ok(Self { grid, teacher })
    }

    /// Polynomial (ρ = 7) grid with `intervals` steps and a fourth-order iPNDM teacher.
    pub fn polynomial(intervals: usize, t_min: f64, t_max: f64) -> Result<Self> {
        let grid = polynomial_schedule(intervals, t_min, t_max, DEFAULT_RHO)?;
        Self::new(grid, SolverSpec::ipndm(4))
    }

    pub fn intervals(&self) -> usize {
        self.grid.steps()
    }

    pub fn times(&self) -> &[f64] {
        self.grid.times()
    }
}

/// One fine-grid teacher trajectory per warmup sample, in warmup order.
pub fn build_teacher(fine: &FineGrid, denoiser: &dyn Denoiser, warmup: &[Vector]) -> Result<Vec<Trajectory>> {
    if warmup.is_empty() {
        return Err(Error::domain("warmup set is empty"));
    }
    warmup.par_iter().map(|x| sample(&fine.teacher, denoiser, &fine.grid, x)).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostMetric {
    #[default]
    L2,
}

impl CostMetric {
    fn distance(self, a: &Vector, b: &Vector) -> f64 {
        match self {
            CostMetric::L2 => (a - b).norm(),
        }
    }
}

/// Average Euler-jump cost between fine-grid nodes.
///
/// Entries with `i ≥ j` are undefined and stored as NaN.
#[derive(Clone, Debug)]
pub struct CostMatrix {
    times: Vec<f64>,
    c: Vec<f64>,
    batch: usize,
    metric: CostMetric,
}

impl CostMatrix {
    /// Builds a matrix from `cost(i, j)` evaluated for every `i < j` of `times`.
    pub fn from_fn(times: Vec<f64>, batch: usize, mut cost: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let n = times.len();
        if n < 2 {
            return Err(Error::domain("a cost matrix needs at least two grid nodes"));
        }
        let mut c = vec![f64::NAN; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = cost(i, j);
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::domain(format!("cost c[{i}][{j}] = {v} is not a finite non-negative number")));
                }
                c[i * n + j] = v;
            }
        }
        Ok(Self { times, c, batch, metric: CostMetric::L2 })
    }

    pub fn nodes(&self) -> usize {
        self.times.len()
    }

    /// Number of fine intervals `N_t`.
    pub fn intervals(&self) -> usize {
        self.times.len() - 1
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn metric(&self) -> CostMetric {
        self.metric
    }

    /// `c[i][j]` for `i < j`, `None` otherwise.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        (i < j && j < self.nodes()).then(|| self.c[i * self.nodes() + j])
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.c[i * self.nodes() + j]
    }

    /// Header `i,0,1,…,N_t`; row `i` fills only the columns `j > i`.
    pub fn to_csv(&self) -> String {
        let n = self.nodes();
        let mut out = String::from("i");
        for j in 0..n {
            out.push_str(&format!(",{j}"));
        }
        out.push('\n');
        for i in 0..n {
            out.push_str(&i.to_string());
            for j in 0..n {
                out.push(',');
                if let Some(v) = self.get(i, j) {
                    out.push_str(&fmt17(v));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Cost of every Euler jump along every teacher trajectory, averaged over the batch.
///
/// The jump from node `i` reuses the teacher's recorded denoising output there,
/// so each (trajectory, node) pair costs at most one denoiser evaluation.
pub fn build_cost_matrix(fine: &FineGrid, denoiser: &dyn Denoiser, teachers: &[Trajectory]) -> Result<CostMatrix> {
    if teachers.is_empty() {
        return Err(Error::domain("no teacher trajectories"));
    }
    let times = fine.times();
    let n = times.len();
    for (b, t) in teachers.iter().enumerate() {
        if t.times.as_slice() != times {
            return Err(Error::domain(format!("teacher {b} was not recorded on the fine grid")));
        }
        check_dim(denoiser.dim(), t.dim())?;
    }

    let per_traj: Vec<Vec<f64>> = teachers
        .par_iter()
        .map(|traj| {
            let mut c = vec![0.0; n * n];
            for i in 0..n - 1 {
                let x_i = &traj.states[i];
                let r_i = match &traj.denoised[i] {
                    Some(r) => r.clone(),
                    None => denoiser.denoise(x_i, times[i])?.r,
                };
                for j in i + 1..n {
                    let jump = euler_update(x_i, &r_i, times[i], times[j]);
                    c[i * n + j] = CostMetric::L2.distance(&jump, &traj.states[j]);
                }
            }
            Ok(c)
        })
        .collect::<Result<_>>()?;

    // sequential, index-ordered reduction keeps the mean independent of thread count
    let batch = teachers.len();
    let mut sum = vec![0.0; n * n];
    for c in &per_traj {
        for (s, v) in sum.iter_mut().zip(c) {
            *s += v;
        }
    }
    CostMatrix::from_fn(times.to_vec(), batch, |i, j| sum[i * n + j] / batch as f64)
}

/// Output of the schedule search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DpResult {
    pub schedule: TimeSchedule,
    pub path_indices: Vec<usize>,
    pub total_cost: f64,
    pub gamma: f64,
    #[serde(skip)]
    pub value_table: Option<Vec<Vec<f64>>>,
}

impl DpResult {
    pub fn budget(&self) -> usize {
        self.path_indices.len() - 1
    }
}

/// Filled value table `V[j][k]`: cheapest cost from node `j` to the last node
/// in exactly `k` jumps, where every jump but the final one is scaled by `γ`.
#[derive(Clone, Debug)]
pub struct DpTable<'a> {
    costs: &'a CostMatrix,
    gamma: f64,
    max_budget: usize,
    // v[k][j], k = 0 unused
    v: Vec<Vec<f64>>,
}

impl<'a> DpTable<'a> {
    #[allow(clippy::needless_range_loop)]
    pub fn fill(costs: &'a CostMatrix, max_budget: usize, gamma: f64) -> Result<Self> {
        let n_t = costs.intervals();
        if max_budget == 0 {
            return Err(Error::domain("NFE budget must be at least 1"));
        }
        if max_budget > n_t {
            return Err(Error::Infeasible { budget: max_budget, intervals: n_t });
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::domain(format!("gamma must be positive, got {gamma}")));
        }
        let mut v = vec![vec![f64::INFINITY; n_t + 1]; max_budget + 1];
        for i in 0..n_t {
            v[1][i] = costs.at(i, n_t);
        }
        for k in 2..=max_budget {
            for j in 0..n_t {
                let mut best = f64::INFINITY;
                for i in j + 1..n_t {
                    let cand = gamma * costs.at(j, i) + v[k - 1][i];
                    if cand < best {
                        best = cand;
                    }
                }
                v[k][j] = best;
            }
        }
        Ok(Self { costs, gamma, max_budget, v })
    }

    pub fn max_budget(&self) -> usize {
        self.max_budget
    }

    pub fn value(&self, node: usize, steps: usize) -> f64 {
        self.v[steps][node]
    }

    /// Walks the table forward from node 0, taking the first minimizing successor.
    pub fn extract(&self, budget: usize) -> Result<DpResult> {
        let n_t = self.costs.intervals();
        if budget == 0 || budget > self.max_budget {
            return Err(Error::Infeasible { budget, intervals: self.max_budget.min(n_t) });
        }
        let mut path = vec![0];
        let mut m = 0;
        for k in (2..=budget).rev() {
            let target = self.v[k][m];
            let next = (m + 1..n_t)
                .find(|&j| target == self.gamma * self.costs.at(m, j) + self.v[k - 1][j])
                .ok_or_else(|| Error::Precondition(format!("no minimizing successor of node {m}")))?;
            path.push(next);
            m = next;
        }
        path.push(n_t);
        let schedule = TimeSchedule::new(
            ScheduleKind::Gits,
            path.iter().map(|&i| self.costs.times()[i]).collect(),
            [("gamma".to_string(), self.gamma)].into_iter().collect(),
        )?;
        let value_table = (0..=n_t).map(|j| (1..=budget).map(|k| self.v[k][j]).collect()).collect();
        Ok(DpResult {
            schedule,
            path_indices: path,
            total_cost: self.v[budget][0],
            gamma: self.gamma,
            value_table: Some(value_table),
        })
    }
}

/// Optimal `budget`-step schedule through the fine grid.
pub fn dp_schedule(costs: &CostMatrix, budget: usize, gamma: f64) -> Result<DpResult> {
    DpTable::fill(costs, budget, gamma)?.extract(budget)
}

/// Schedules for several budgets from a single table fill.
pub fn dp_schedules(costs: &CostMatrix, budgets: &[usize], gamma: f64) -> Result<Vec<DpResult>> {
    let max = budgets.iter().copied().max().ok_or_else(|| Error::domain("no budgets given"))?;
    let table = DpTable::fill(costs, max, gamma)?;
    budgets.iter().map(|&b| table.extract(b)).collect()
}

/// Mean endpoint distance between `spec` on `schedule` and the reference runs.
pub fn global_error(
    schedule: &TimeSchedule,
    spec: &SolverSpec,
    denoiser: &dyn Denoiser,
    x_inits: &[Vector],
    reference: &[Trajectory],
) -> Result<f64> {
    if x_inits.is_empty() {
        return Err(Error::domain("no initial states"));
    }
    if x_inits.len() != reference.len() {
        return Err(Error::domain(format!(
            "{} initial states but {} reference trajectories",
            x_inits.len(),
            reference.len()
        )));
    }
    for (b, (x, r)) in x_inits.iter().zip(reference).enumerate() {
        if r.initial() != x {
            return Err(Error::domain(format!("reference {b} starts from a different state")));
        }
    }
    let errors: Vec<f64> = x_inits
        .par_iter()
        .zip(reference)
        .map(|(x, r)| Ok((sample(spec, denoiser, schedule, x)?.final_state() - r.final_state()).norm()))
        .collect::<Result<_>>()?;
    Ok(errors.iter().sum::<f64>() / errors.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoise::{ConstantDenoiser, Dataset, OptimalDenoiser};

    fn four_node() -> CostMatrix {
        let table = [[0.0, 1.0, 5.0, 9.0], [0.0, 0.0, 1.0, 5.0], [0.0, 0.0, 0.0, 1.0]];
        CostMatrix::from_fn(vec![3.0, 2.0, 1.0, 0.5], 1, |i, j| table[i][j]).unwrap()
    }

    #[test]
    fn four_node_tie_prefers_smaller_index() {
        let res = dp_schedule(&four_node(), 2, 1.0).unwrap();
        assert_eq!(res.path_indices, vec![0, 1, 3]);
        assert_eq!(res.total_cost, 6.0);
        assert_eq!(res.schedule.times(), &[3.0, 2.0, 0.5]);
    }

    #[test]
    fn forced_paths() {
        let c = four_node();
        assert_eq!(dp_schedule(&c, 3, 1.15).unwrap().path_indices, vec![0, 1, 2, 3]);
        let one = dp_schedule(&c, 1, 1.15).unwrap();
        assert_eq!(one.path_indices, vec![0, 3]);
        assert_eq!(one.total_cost, 9.0);
    }

    #[test]
    fn infeasible_budgets() {
        let c = four_node();
        assert!(matches!(dp_schedule(&c, 4, 1.0), Err(Error::Infeasible { budget: 4, intervals: 3 })));
        assert!(dp_schedule(&c, 0, 1.0).is_err());
        assert!(dp_schedule(&c, 2, 0.0).is_err());
    }

    #[test]
    fn last_jump_is_not_scaled() {
        let res = dp_schedule(&four_node(), 2, 2.0).unwrap();
        // [0,1,3] = 2·1 + 5 = 7, [0,2,3] = 2·5 + 1 = 11
        assert_eq!(res.path_indices, vec![0, 1, 3]);
        assert_eq!(res.total_cost, 7.0);
    }

    #[test]
    fn one_fill_serves_every_budget() {
        let c = CostMatrix::from_fn((0..9).map(|i| 9.0 - i as f64).collect(), 1, |i, j| {
            ((i * 7 + j * 13) % 11) as f64 + 0.25 * (j - i) as f64
        })
        .unwrap();
        let all = dp_schedules(&c, &[1, 2, 3, 4, 5, 6, 7, 8], 1.15).unwrap();
        for (k, r) in all.iter().enumerate() {
            assert_eq!(r, &{
                let mut solo = dp_schedule(&c, k + 1, 1.15).unwrap();
                solo.value_table = r.value_table.clone();
                solo
            });
        }
    }

    #[test]
    fn cost_matrix_csv_shape() {
        let csv = four_node().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "i,0,1,2,3");
        assert_eq!(lines.len(), 5);
        assert!(lines[4].starts_with("3,,,,"));
        assert!(lines[1].starts_with("0,,1.0000000000000000e0"));
    }

    #[test]
    fn euler_teacher_has_zero_adjacent_cost() {
        let data = Dataset::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.2], vec![0.3, -0.8]]).unwrap();
        let den = OptimalDenoiser::new(data);
        let grid = polynomial_schedule(12, 0.002, 80.0, 7.0).unwrap();
        let fine = FineGrid::new(grid, SolverSpec::euler()).unwrap();
        let warm = vec![Vector::from_vec(vec![50.0, -70.0]), Vector::from_vec(vec![-10.0, 90.0])];
        let teachers = build_teacher(&fine, &den, &warm).unwrap();
        let c = build_cost_matrix(&fine, &den, &teachers).unwrap();
        for i in 0..12 {
            assert_eq!(c.get(i, i + 1), Some(0.0));
        }
        assert!(c.get(3, 3).is_none());
        assert!(c.get(0, 12).unwrap() > 0.0);
    }

    #[test]
    fn constant_denoiser_costs_vanish() {
        let den = ConstantDenoiser::new(Vector::from_vec(vec![0.4, -0.2, 0.9]));
        let fine = FineGrid::polynomial(20, 0.002, 80.0).unwrap();
        let warm = vec![Vector::from_vec(vec![60.0, 10.0, -40.0])];
        let teachers = build_teacher(&fine, &den, &warm).unwrap();
        let c = build_cost_matrix(&fine, &den, &teachers).unwrap();
        for i in 0..20 {
            for j in i + 1..=20 {
                assert!(c.get(i, j).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn global_error_rejects_mismatched_inits() {
        let den = ConstantDenoiser::zeros(1);
        let sched = polynomial_schedule(4, 0.002, 80.0, 7.0).unwrap();
        let x = vec![Vector::from_vec(vec![1.0])];
        let reference = vec![sample(&SolverSpec::euler(), &den, &sched, &Vector::from_vec(vec![2.0])).unwrap()];
        assert!(global_error(&sched, &SolverSpec::euler(), &den, &x, &reference).is_err());
        assert!(global_error(&sched, &SolverSpec::euler(), &den, &x, &[]).is_err());
    }
}
