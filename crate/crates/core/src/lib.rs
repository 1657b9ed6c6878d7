//! Explicit exponential Runge-Kutta methods for linear stiff problems
//! `u' + Au = Bu`: matrix-function kernels, φ-function tableaus with a stiff
//! order-condition checker, a precomputed-coefficient integrator, the 1D
//! advection-diffusion test problem and a convergence harness.

pub mod error;
pub mod harness;
pub mod integrator;
pub mod matfun;
pub mod problems;
pub mod tableau;

pub use error::{Error, Result};
pub use integrator::{exact_solution, integrate, precompute, rk4_reference, step, LinearProblem, StepperPlan};
pub use matfun::{expm, fractional_power, phi, phi_action, OperatorMatrix};
pub use tableau::{check_order_conditions, MethodTableau, PhiCombo};
