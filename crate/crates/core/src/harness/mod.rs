//! Convergence sweeps on the advection-diffusion problem and observed-order
//! fitting.

pub mod cli;
mod csv_io;

use std::fmt;

use log::warn;
use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrator::{exact_solution, integrate, rk4_reference, step_count, LinearProblem};
use crate::problems::{build_advection_diffusion, discrete_norm, AdvectionDiffusionSpec, Norm};
use crate::tableau::MethodTableau;

pub use csv_io::{emit_csv, parse_csv, write_csv, CsvTable};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Reference {
    /// `e^{−T(A−B)} u0`
    Expm,
    /// Classical RK4 with the given step.
    Rk4 { tau: f64 },
}

#[derive(Clone, Debug)]
pub struct ConvergenceConfig {
    pub method: MethodTableau,
    pub problem: AdvectionDiffusionSpec,
    /// Strictly decreasing, each dividing the final time.
    pub taus: Vec<f64>,
    pub reference: Reference,
    pub norms: Vec<Norm>,
}

/// `T · 2^{−k}` for `k = k_min..=k_max`.
pub fn dyadic_steps(t_final: f64, k_min: i32, k_max: i32) -> Vec<f64> {
    (k_min..=k_max).map(|k| t_final * 2f64.powi(-k)).collect()
}

impl ConvergenceConfig {
    /// Default sweep `τ = T·2^{−k}`, `k = 3..=9`, against the exponential
    /// reference, in all three norms.
    pub fn new(method: MethodTableau, problem: AdvectionDiffusionSpec) -> Self {
        Self {
            taus: dyadic_steps(problem.t_final, 3, 9),
            method,
            problem,
            reference: Reference::Expm,
            norms: Norm::ALL.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        if self.taus.is_empty() {
            return Err(Error::Config("empty step-size list".into()));
        }
        if self.taus.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::Config("step sizes must be strictly decreasing".into()));
        }
        for &tau in &self.taus {
            step_count(self.problem.t_final, tau)?;
        }
        if let Reference::Rk4 { tau } = self.reference {
            step_count(self.problem.t_final, tau)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub tau: f64,
    /// Aligned with [`ConvergenceReport::norms`].
    pub errors: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub method: String,
    pub problem: String,
    pub norms: Vec<Norm>,
    /// Sorted by decreasing step size.
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope per norm; `None` if fewer than three usable rows.
    pub fitted_orders: Vec<Option<f64>>,
}

impl ConvergenceReport {
    fn column(&self, norm: Norm) -> Option<usize> {
        self.norms.iter().position(|&n| n == norm)
    }

    /// `(τ, error)` pairs in the given norm.
    pub fn errors(&self, norm: Norm) -> Vec<(f64, f64)> {
        match self.column(norm) {
            Some(c) => self.rows.iter().map(|r| (r.tau, r.errors[c])).collect(),
            None => Vec::new(),
        }
    }

    pub fn fitted_order(&self, norm: Norm) -> Option<f64> {
        self.column(norm).and_then(|c| self.fitted_orders[c])
    }

    /// Observed order between each row and its predecessor.
    pub fn pairwise_orders(&self, norm: Norm) -> Vec<f64> {
        self.errors(norm)
            .windows(2)
            .map(|w| (w[1].1 / w[0].1).ln() / (w[1].0 / w[0].0).ln())
            .collect()
    }
}

impl fmt::Display for ConvergenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "method {} on {}", self.method, self.problem)?;
        write!(f, "{:>14}", "tau")?;
        for n in &self.norms {
            write!(f, " {:>14} {:>7}", format!("err_{n}"), "order")?;
        }
        writeln!(f)?;
        let pairwise: Vec<Vec<f64>> = self.norms.iter().map(|&n| self.pairwise_orders(n)).collect();
        for (k, row) in self.rows.iter().enumerate() {
            write!(f, "{:>14.6e}", row.tau)?;
            for (c, e) in row.errors.iter().enumerate() {
                if k == 0 {
                    write!(f, " {e:>14.6e} {:>7}", "-")?;
                } else {
                    write!(f, " {e:>14.6e} {:>7.3}", pairwise[c][k - 1])?;
                }
            }
            writeln!(f)?;
        }
        write!(f, "fitted order:")?;
        for (n, o) in self.norms.iter().zip(&self.fitted_orders) {
            match o {
                Some(o) => write!(f, " {n}={o:.4}")?,
                None => write!(f, " {n}=n/a")?,
            }
        }
        Ok(())
    }
}

fn fingerprint(spec: &AdvectionDiffusionSpec, reference: Reference) -> String {
    let r = match reference {
        Reference::Expm => "expm".to_string(),
        Reference::Rk4 { tau } => format!("rk4(tau={tau:e})"),
    };
    format!(
        "advection-diffusion nu={} n={} T={} reference={r}",
        spec.nu, spec.n, spec.t_final
    )
}

pub fn reference_solution(prob: &LinearProblem, reference: Reference) -> Result<DVector<f64>> {
    match reference {
        Reference::Expm => exact_solution(prob, prob.t_final()),
        Reference::Rk4 { tau } => rk4_reference(prob, tau),
    }
}

/// Integrates at every step size (in parallel) and measures the final-time
/// error in each requested norm.
pub fn run_convergence(cfg: &ConvergenceConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let prob = build_advection_diffusion(&cfg.problem)?;
    let grid = *prob.grid().expect("advection-diffusion problems carry a grid");
    let reference = reference_solution(&prob, cfg.reference)?;

    let rows = cfg
        .taus
        .par_iter()
        .map(|&tau| {
            let u = integrate(&cfg.method, &prob, tau)?;
            let diff = u - &reference;
            Ok(ConvergenceRow {
                tau,
                errors: cfg
                    .norms
                    .iter()
                    .map(|&n| discrete_norm(&diff, &grid, n))
                    .collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let fitted_orders = (0..cfg.norms.len())
        .map(|c| {
            let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.tau, r.errors[c])).collect();
            match fit_order(&pts) {
                Ok(o) => Some(o),
                Err(e) => {
                    warn!("{}: {e}", cfg.norms[c]);
                    None
                }
            }
        })
        .collect();

    Ok(ConvergenceReport {
        method: cfg.method.name().to_string(),
        problem: fingerprint(&cfg.problem, cfg.reference),
        norms: cfg.norms.clone(),
        rows,
        fitted_orders,
    })
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Slope of `log(err)` against `log(τ)`. Rows with non-positive or
/// non-finite error are dropped with a warning.
pub fn fit_order(rows: &[(f64, f64)]) -> Result<f64> {
    let mut xs = Vec::with_capacity(rows.len());
    let mut ys = Vec::with_capacity(rows.len());
    for &(tau, err) in rows {
        if err > 0.0 && err.is_finite() && tau > 0.0 {
            xs.push(tau.ln());
            ys.push(err.ln());
        } else {
            warn!("excluding row tau={tau:e} err={err:e} from order fit");
        }
    }
    let distinct = xs.windows(2).any(|w| w[0] != w[1]);
    if xs.len() < 3 || !distinct {
        return Err(Error::Fit { usable: xs.len() });
    }
    Ok(least_squares_slope(&xs, &ys))
}
