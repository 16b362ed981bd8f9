//! PF-ODE samplers in the VE parameterization (`σ = t`).
//!
//! The empirical PF-ODE reads `dx/dt = (x − r(x; t)) / t`. One Euler step is
//! the convex combination
//!
//! ```text
//! x_next = (t_next / t_cur)·x + ((t_cur − t_next) / t_cur)·r(x; t_cur)
//! ```
//!
//! and every second-order method below replaces `r` by a corrected output
//! `R = r + ((t_next − t_cur)/2)·D̂`, where `D̂` is a finite difference of the
//! denoising trajectory. [`Formulation::Native`] evaluates each method through
//! its usual noise-prediction update instead, and the two routes agree to
//! rounding.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::denoise::{Denoiser, DenoiserOutput};
use crate::error::{check_dim, Error, Result};
use crate::io::{fmt17, parse_f64};
use crate::schedule::TimeSchedule;
use crate::Vector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Euler,
    Heun,
    Dpm2,
    Spndm,
    Ipndm,
    DeisAb1,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Euler, Method::Heun, Method::Dpm2, Method::Spndm, Method::Ipndm, Method::DeisAb1];

    pub fn is_second_order(self) -> bool {
        matches!(self, Method::Heun | Method::Dpm2 | Method::Spndm | Method::DeisAb1)
    }

    pub fn needs_history(self) -> bool {
        matches!(self, Method::Spndm | Method::DeisAb1)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::Euler => "euler",
            Method::Heun => "heun",
            Method::Dpm2 => "dpm2",
            Method::Spndm => "spndm",
            Method::Ipndm => "ipndm",
            Method::DeisAb1 => "deis_ab1",
        };
        f.write_str(s)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "euler" | "ddim" => Ok(Method::Euler),
            "heun" | "edm" => Ok(Method::Heun),
            "dpm2" | "dpm_solver_2" => Ok(Method::Dpm2),
            "spndm" | "s_pndm" => Ok(Method::Spndm),
            "ipndm" => Ok(Method::Ipndm),
            "deis_ab1" | "deis" => Ok(Method::DeisAb1),
            other => Err(Error::Parse(format!("unknown solver {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    #[default]
    Native,
    Generalized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverSpec {
    pub method: Method,
    /// Maximum multistep order, only read by iPNDM.
    pub order: usize,
    /// Replace the first step with the analytic Gaussian-prior step.
    pub afs: bool,
    pub formulation: Formulation,
}

impl SolverSpec {
    pub const DEFAULT_IPNDM_ORDER: usize = 4;

    pub fn new(method: Method) -> Self {
        Self { method, order: Self::DEFAULT_IPNDM_ORDER, afs: false, formulation: Formulation::Native }
    }

    pub fn euler() -> Self {
        Self::new(Method::Euler)
    }

    pub fn ipndm(order: usize) -> Self {
        Self::new(Method::Ipndm).with_order(order)
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    pub fn with_afs(mut self, afs: bool) -> Self {
        self.afs = afs;
        self
    }

    pub fn with_formulation(mut self, formulation: Formulation) -> Self {
        self.formulation = formulation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.method == Method::Ipndm && !(1..=4).contains(&self.order) {
            return Err(Error::domain(format!("iPNDM order must be in [1, 4], got {}", self.order)));
        }
        Ok(())
    }

    /// Denoiser evaluations spent on an `n_steps` schedule.
    pub fn expected_nfe(&self, n_steps: usize) -> usize {
        let afs = usize::from(self.afs && n_steps > 0);
        let evaluated = n_steps - afs;
        match self.method {
            // every step but the last spends two evaluations
            Method::Heun | Method::Dpm2 => (2 * evaluated).saturating_sub(1),
            _ => evaluated,
        }
    }
}

impl fmt::Display for SolverSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.method)?;
        if self.method == Method::Ipndm {
            write!(f, "(order {})", self.order)?;
        }
        if self.afs {
            f.write_str("+afs")?;
        }
        Ok(())
    }
}

/// A sampling trajectory and its coupled denoising trajectory.
///
/// Index 0 is `t_N`. `denoised[n]` is `r(x̂_{t_n})` when the sampler evaluated
/// the denoiser at that node.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    pub denoised: Vec<Option<Vector>>,
    pub nfe: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vector::len)
    }

    pub fn initial(&self) -> &Vector {
        &self.states[0]
    }

    pub fn final_state(&self) -> &Vector {
        &self.states[self.states.len() - 1]
    }

    /// Same trajectory shifted by `shift` in every state and denoising output.
    pub fn translated(&self, shift: &Vector) -> Trajectory {
        Trajectory {
            times: self.times.clone(),
            states: self.states.iter().map(|s| s + shift).collect(),
            denoised: self.denoised.iter().map(|d| d.as_ref().map(|r| r + shift)).collect(),
            nfe: self.nfe,
        }
    }

    /// CSV with header `t,x0,…,x{d-1}[,r0,…,r{d-1}]`; missing outputs are empty.
    pub fn to_csv(&self, with_denoised: bool) -> String {
        let d = self.dim();
        let mut header = vec!["t".to_string()];
        header.extend((0..d).map(|k| format!("x{k}")));
        if with_denoised {
            header.extend((0..d).map(|k| format!("r{k}")));
        }
        let mut out = header.join(",");
        out.push('\n');
        for n in 0..self.len() {
            let mut row = vec![fmt17(self.times[n])];
            row.extend(self.states[n].iter().map(|v| fmt17(*v)));
            if with_denoised {
                match &self.denoised[n] {
                    Some(r) => row.extend(r.iter().map(|v| fmt17(*v))),
                    None => row.extend(std::iter::repeat_n(String::new(), d)),
                }
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Trajectory> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty trajectory file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.first() != Some(&"t") {
            return Err(Error::Parse("trajectory header must start with `t`".into()));
        }
        let d = cols.iter().filter(|c| c.starts_with('x')).count();
        let dr = cols.iter().filter(|c| c.starts_with('r')).count();
        if d == 0 || (dr != 0 && dr != d) || cols.len() != 1 + d + dr {
            return Err(Error::Parse(format!("malformed trajectory header {header:?}")));
        }
        let mut traj = Trajectory { times: Vec::new(), states: Vec::new(), denoised: Vec::new(), nfe: 0 };
        for (lineno, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols.len() {
                return Err(Error::Parse(format!(
                    "row {} has {} fields, expected {}",
                    lineno + 1,
                    fields.len(),
                    cols.len()
                )));
            }
            let num = |f: &str| parse_f64(f).map_err(Error::Parse);
            traj.times.push(num(fields[0])?);
            let x = fields[1..=d].iter().map(|f| num(f)).collect::<Result<Vec<_>>>()?;
            traj.states.push(Vector::from_vec(x));
            let r_fields = &fields[1 + d..];
            if dr == 0 || r_fields.iter().all(|f| f.trim().is_empty()) {
                traj.denoised.push(None);
            } else {
                let r = r_fields.iter().map(|f| num(f)).collect::<Result<Vec<_>>>()?;
                traj.denoised.push(Some(Vector::from_vec(r)));
            }
        }
        if traj.states.is_empty() {
            return Err(Error::Parse("trajectory has no rows".into()));
        }
        if traj.times.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(Error::Parse("trajectory times are not strictly decreasing".into()));
        }
        traj.nfe = traj.denoised.iter().filter(|d| d.is_some()).count();
        Ok(traj)
    }
}

fn check_times(t_cur: f64, t_next: f64) -> Result<()> {
    if !(t_cur > 0.0) || !t_cur.is_finite() {
        return Err(Error::domain(format!("current time must be positive, got {t_cur}")));
    }
    if !(t_next >= 0.0) {
        return Err(Error::domain(format!("next time must be non-negative, got {t_next}")));
    }
    if t_next > t_cur {
        return Err(Error::domain(format!("steps run backward in time: {t_next} > {t_cur}")));
    }
    Ok(())
}

/// The convex combination `(t_next/t_cur)·x + ((t_cur − t_next)/t_cur)·r`.
pub fn euler_update(x: &Vector, r: &Vector, t_cur: f64, t_next: f64) -> Vector {
    let keep = t_next / t_cur;
    let pull = (t_cur - t_next) / t_cur;
    x * keep + r * pull
}

/// One Euler step; exactly one denoiser evaluation.
pub fn euler_step(denoiser: &dyn Denoiser, x: &Vector, t_cur: f64, t_next: f64) -> Result<(Vector, DenoiserOutput)> {
    check_times(t_cur, t_next)?;
    let out = denoiser.denoise(x, t_cur)?;
    let x_next = euler_update(x, &out.r, t_cur, t_next);
    Ok((x_next, out))
}

/// Gaussian-prior first step: the Euler step with `r ≡ 0`, no evaluation.
pub fn afs_step(x: &Vector, t_cur: f64, t_next: f64) -> Result<Vector> {
    check_times(t_cur, t_next)?;
    Ok(x * (t_next / t_cur))
}

/// A previously visited node, kept for the multistep methods.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryNode {
    pub t: f64,
    pub x: Vector,
    pub r: Vector,
}

impl HistoryNode {
    pub fn eps(&self) -> Vector {
        (&self.x - &self.r) / self.t
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub x_next: Vector,
    /// Denoiser output at the step's starting point `(x, t_cur)`.
    pub output: DenoiserOutput,
    pub nfe: usize,
}

/// One step of Heun, DPM-Solver-2, S-PNDM or DEIS ρAB1.
///
/// S-PNDM and DEIS ρAB1 read the previous node from `history`. Heun and
/// DPM-Solver-2 spend two evaluations, except when `t_next = 0`, where the
/// correction would evaluate the denoiser at zero noise and the step falls
/// back to Euler. A zero-length step returns `x` unchanged after one
/// evaluation.
pub fn second_order_step(
    spec: &SolverSpec,
    denoiser: &dyn Denoiser,
    x: &Vector,
    t_cur: f64,
    t_next: f64,
    history: Option<&HistoryNode>,
) -> Result<StepOutcome> {
    check_times(t_cur, t_next)?;
    if !spec.method.is_second_order() {
        return Err(Error::Precondition(format!("{} is not a second-order method", spec.method)));
    }
    if spec.method.needs_history() {
        let prev = history
            .ok_or_else(|| Error::Precondition(format!("{} needs the previous denoising output", spec.method)))?;
        check_dim(x.len(), prev.x.len())?;
        if !(prev.t > t_cur) {
            return Err(Error::Precondition(format!("history time {} must precede the current time {t_cur}", prev.t)));
        }
    }

    let out = denoiser.denoise(x, t_cur)?;
    let mut nfe = 1;
    if t_next == t_cur {
        return Ok(StepOutcome { x_next: x.clone(), output: out, nfe });
    }
    let h = t_next - t_cur;
    let eps = &out.eps;
    let r = &out.r;

    let x_next = match spec.method {
        Method::Heun | Method::Dpm2 if t_next == 0.0 => euler_update(x, r, t_cur, t_next),
        Method::Heun => {
            let x_mid = euler_update(x, r, t_cur, t_next);
            let mid = denoiser.denoise(&x_mid, t_next)?;
            nfe += 1;
            match spec.formulation {
                Formulation::Native => x + (eps * 0.5 + &mid.eps * 0.5) * h,
                Formulation::Generalized => {
                    let gamma = t_cur / t_next;
                    let slope = (&mid.r - r) * (gamma / h);
                    euler_update(x, &(r + slope * (0.5 * h)), t_cur, t_next)
                }
            }
        }
        Method::Dpm2 => {
            let s = (t_cur * t_next).sqrt();
            let x_mid = x + eps * (s - t_cur);
            let mid = denoiser.denoise(&x_mid, s)?;
            nfe += 1;
            match spec.formulation {
                Formulation::Native => x + &mid.eps * h,
                Formulation::Generalized => {
                    let gamma = t_cur / s;
                    let slope = (&mid.r - r) * (gamma / (0.5 * h));
                    euler_update(x, &(r + slope * (0.5 * h)), t_cur, t_next)
                }
            }
        }
        Method::Spndm => {
            let prev = history.expect("checked above");
            match spec.formulation {
                Formulation::Native => x + (eps * 3.0 - prev.eps()) * (0.5 * h),
                Formulation::Generalized => {
                    let slope = (r - &prev.r) / h;
                    euler_update(x, &(r + slope * (0.5 * h)), t_cur, t_next)
                }
            }
        }
        Method::DeisAb1 => {
            let prev = history.expect("checked above");
            let back = t_cur - prev.t;
            match spec.formulation {
                Formulation::Native => {
                    let c_cur = ((t_next - prev.t).powi(2) - back * back) / (2.0 * back);
                    let c_prev = h * h / (-2.0 * back);
                    x + eps * c_cur + prev.eps() * c_prev
                }
                Formulation::Generalized => {
                    let slope = (r - &prev.r) / back;
                    euler_update(x, &(r + slope * (0.5 * h)), t_cur, t_next)
                }
            }
        }
        Method::Euler | Method::Ipndm => unreachable!("filtered above"),
    };
    Ok(StepOutcome { x_next, output: out, nfe })
}

/// Adams–Bashforth weights on `ε`, most recent first, for `k` available values.
pub fn adams_bashforth_coefficients(k: usize) -> &'static [f64] {
    const AB1: [f64; 1] = [1.0];
    const AB2: [f64; 2] = [1.5, -0.5];
    const AB3: [f64; 3] = [23.0 / 12.0, -16.0 / 12.0, 5.0 / 12.0];
    const AB4: [f64; 4] = [55.0 / 24.0, -59.0 / 24.0, 37.0 / 24.0, -9.0 / 24.0];
    match k {
        0 | 1 => &AB1,
        2 => &AB2,
        3 => &AB3,
        _ => &AB4,
    }
}

/// iPNDM step: `x + (t_next − t_cur)·Σ_j b_j ε_j` with the newest `ε` first.
///
/// `eps_history` holds previous noise predictions, most recent first; entries
/// beyond `order − 1` are ignored. The returned output carries the new `ε`.
pub fn ipndm_step(
    denoiser: &dyn Denoiser,
    x: &Vector,
    t_cur: f64,
    t_next: f64,
    eps_history: &[Vector],
    order: usize,
) -> Result<(Vector, DenoiserOutput)> {
    check_times(t_cur, t_next)?;
    if !(1..=4).contains(&order) {
        return Err(Error::domain(format!("iPNDM order must be in [1, 4], got {order}")));
    }
    let out = denoiser.denoise(x, t_cur)?;
    let used = eps_history.len().min(order - 1);
    let coeffs = adams_bashforth_coefficients(used + 1);
    let mut slope = &out.eps * coeffs[0];
    for (b, e) in coeffs[1..].iter().zip(eps_history) {
        check_dim(x.len(), e.len())?;
        slope += e * *b;
    }
    let x_next = x + slope * (t_next - t_cur);
    Ok((x_next, out))
}

/// Runs `spec` over every interval of `schedule`, starting from `x_init` at `t_N`.
///
/// Heun and DPM-Solver-2 take a plain Euler step on the final interval, so they
/// spend `2N − 1` evaluations. S-PNDM and DEIS ρAB1 warm up with one Euler step.
pub fn sample(
    spec: &SolverSpec,
    denoiser: &dyn Denoiser,
    schedule: &TimeSchedule,
    x_init: &Vector,
) -> Result<Trajectory> {
    spec.validate()?;
    check_dim(denoiser.dim(), x_init.len())?;
    let n_steps = schedule.steps();
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut denoised = Vec::with_capacity(n_steps + 1);
    states.push(x_init.clone());
    let mut nfe = 0;
    let mut prev: Option<HistoryNode> = None;
    let mut eps_history: VecDeque<Vector> = VecDeque::with_capacity(4);

    for (n, (t_cur, t_next)) in schedule.intervals().enumerate() {
        let x = &states[n];
        let last = n + 1 == n_steps;
        if n == 0 && spec.afs {
            let x_next = afs_step(x, t_cur, t_next).map_err(|e| e.at_step(n))?;
            let zero = Vector::zeros(x.len());
            eps_history.push_front(x / t_cur);
            prev = Some(HistoryNode { t: t_cur, x: x.clone(), r: zero });
            denoised.push(None);
            states.push(x_next);
            continue;
        }

        let (x_next, out, used) = match spec.method {
            Method::Euler => {
                let (x_next, out) = euler_step(denoiser, x, t_cur, t_next).map_err(|e| e.at_step(n))?;
                (x_next, out, 1)
            }
            Method::Ipndm => {
                let hist: Vec<Vector> = eps_history.iter().cloned().collect();
                let (x_next, out) =
                    ipndm_step(denoiser, x, t_cur, t_next, &hist, spec.order).map_err(|e| e.at_step(n))?;
                eps_history.push_front(out.eps.clone());
                eps_history.truncate(3);
                (x_next, out, 1)
            }
            Method::Heun | Method::Dpm2 if last => {
                let (x_next, out) = euler_step(denoiser, x, t_cur, t_next).map_err(|e| e.at_step(n))?;
                (x_next, out, 1)
            }
            Method::Spndm | Method::DeisAb1 if prev.is_none() => {
                let (x_next, out) = euler_step(denoiser, x, t_cur, t_next).map_err(|e| e.at_step(n))?;
                (x_next, out, 1)
            }
            _ => {
                let step =
                    second_order_step(spec, denoiser, x, t_cur, t_next, prev.as_ref()).map_err(|e| e.at_step(n))?;
                (step.x_next, step.output, step.nfe)
            }
        };
        nfe += used;
        prev = Some(HistoryNode { t: t_cur, x: x.clone(), r: out.r.clone() });
        denoised.push(Some(out.r));
        states.push(x_next);
    }
    denoised.push(None);

    Ok(Trajectory { times: schedule.times().to_vec(), states, denoised, nfe })
}
