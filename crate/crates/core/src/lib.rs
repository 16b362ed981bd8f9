//! Sampling laboratory for ODE-based diffusion models.
//!
//! The crate is organised bottom-up:
//!
//! * [`process`]: linear diffusion schemes `(s_t, σ_t)`, forward perturbation and
//!   the VP ↔ VE change of variables.
//! * [`denoise`]: the exact denoiser of a finite dataset under a Gaussian KDE,
//!   KDE log-densities, mean shift and a controlled perturbed denoiser.
//! * [`schedule`]: handcrafted time schedules (uniform, logSNR, polynomial).
//! * [`solvers`]: Euler, Heun, DPM-Solver-2, S-PNDM, DEIS ρAB1 and iPNDM steppers
//!   in the VE parameterization, plus full trajectory sampling.
//! * [`gits`]: teacher trajectories, local truncation cost matrices and the
//!   dynamic program that turns them into a time schedule.
//! * [`geometry`]: trajectory regularity statistics.
//! * [`runner`] and [`verify`]: experiment orchestration behind the CLI and the
//!   built-in acceptance checks.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod denoise;
pub mod error;
pub mod geometry;
pub mod gits;
pub mod io;
pub mod process;
pub mod rng;
pub mod runner;
pub mod schedule;
pub mod solvers;
pub mod synthetic;
pub mod verify;

pub use denoise::{
    kde_log_density, mean_shift_step, optimal_denoise, ConstantDenoiser, Dataset, Denoiser, DenoiserOutput,
    DirectionMode, OptimalDenoiser, PerturbedDenoiser,
};
pub use error::{Error, Result};
pub use geometry::{GeometryReport, PcaReport};
pub use gits::{CostMatrix, DpResult, FineGrid};
pub use process::{LinearScheme, SchemeKind};
pub use schedule::{ScheduleKind, TimeSchedule};
pub use solvers::{Formulation, Method, SolverSpec, Trajectory};

/// Dense state vector in `R^d`.
pub type Vector = nalgebra::DVector<f64>;
