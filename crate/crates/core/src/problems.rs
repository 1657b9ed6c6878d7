//! The 1D advection-diffusion test problem
//! `∂_t u − ν ∂_xx u = ∂_x u` on `(0, 1)` with homogeneous Dirichlet data,
//! discretized on interior nodes with second-order central differences,
//! plus grid norms and relative-boundedness probes.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::integrator::LinearProblem;
use crate::matfun::{fractional_power, norm2, OperatorMatrix};

/// Uniform grid of `n` interior nodes `x_i = i h`, `h = 1/(n+1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D {
    n: usize,
    h: f64,
}

impl Grid1D {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("grid needs at least one interior node".into()));
        }
        Ok(Self {
            n,
            h: 1.0 / (n as f64 + 1.0),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Interior node coordinates `x_1, ..., x_n`.
    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (1..=self.n).map(move |i| i as f64 * self.h)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdvectionDiffusionSpec {
    pub nu: f64,
    pub n: usize,
    pub t_final: f64,
}

impl Default for AdvectionDiffusionSpec {
    fn default() -> Self {
        Self {
            nu: 0.2,
            n: 199,
            t_final: 1.0,
        }
    }
}

impl AdvectionDiffusionSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(Error::Config(format!("nu must be positive, got {}", self.nu)));
        }
        if self.n < 3 {
            return Err(Error::Config(format!("n must be at least 3, got {}", self.n)));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::Config(format!(
                "final time must be positive, got {}",
                self.t_final
            )));
        }
        Ok(())
    }
}

fn tridiagonal(n: usize, lower: f64, diag: f64, upper: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag
        } else if j + 1 == i {
            lower
        } else if i + 1 == j {
            upper
        } else {
            0.0
        }
    })
}

/// Diffusion matrix `(ν/h²) tridiag(−1, 2, −1)`.
pub fn diffusion_matrix(nu: f64, grid: &Grid1D) -> OperatorMatrix {
    let c = nu / (grid.h * grid.h);
    OperatorMatrix::new(tridiagonal(grid.n, -c, 2.0 * c, -c)).expect("finite stencil")
}

/// Central advection matrix `(1/2h) tridiag(−1, 0, 1)`.
pub fn advection_matrix(grid: &Grid1D) -> OperatorMatrix {
    let c = 0.5 / grid.h;
    OperatorMatrix::new(tridiagonal(grid.n, -c, 0.0, c)).expect("finite stencil")
}

/// `u_0(x) = 64 x³ (1 − x)³` sampled at the interior nodes.
pub fn initial_condition(grid: &Grid1D) -> DVector<f64> {
    DVector::from_iterator(grid.n, grid.nodes().map(|x| 64.0 * (x * (1.0 - x)).powi(3)))
}

pub fn build_advection_diffusion(spec: &AdvectionDiffusionSpec) -> Result<LinearProblem> {
    spec.validate()?;
    let grid = Grid1D::new(spec.n)?;
    let a = diffusion_matrix(spec.nu, &grid).verify_spd()?;
    let b = advection_matrix(&grid);
    LinearProblem::new(a, b, initial_condition(&grid), spec.t_final)?.with_grid(grid)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    pub const ALL: [Norm; 3] = [Norm::L1, Norm::L2, Norm::Linf];

    pub fn label(self) -> &'static str {
        match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
            Norm::Linf => "linf",
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l1" => Ok(Norm::L1),
            "l2" => Ok(Norm::L2),
            "linf" | "inf" | "max" => Ok(Norm::Linf),
            other => Err(Error::InvalidArgument(format!("unknown norm `{other}`"))),
        }
    }
}

/// Grid-weighted norm; `L1 = h Σ|v|`, `L2 = (h Σ v²)^½`, `Linf = max |v|`.
///
/// # Panics
/// If `v.len() != grid.n()`.
pub fn discrete_norm(v: &DVector<f64>, grid: &Grid1D, which: Norm) -> f64 {
    assert_eq!(v.len(), grid.n, "vector length must match grid");
    match which {
        Norm::L1 => grid.h * v.iter().map(|x| x.abs()).sum::<f64>(),
        Norm::L2 => (grid.h * v.norm_squared()).sqrt(),
        Norm::Linf => v.amax(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeRow {
    pub n: usize,
    /// `‖B A^{−γ}‖₂`
    pub b_a_neg_gamma: f64,
    /// `‖A^{−γ} B‖₂`
    pub a_neg_gamma_b: f64,
    /// `‖B‖₂`
    pub b_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeTable {
    pub gamma: f64,
    pub rows: Vec<ProbeRow>,
}

impl ProbeTable {
    /// Ratios of successive rows, `(‖BA^{−γ}‖, ‖A^{−γ}B‖, ‖B‖)`.
    pub fn growth_ratios(&self) -> Vec<(f64, f64, f64)> {
        self.rows
            .windows(2)
            .map(|w| {
                (
                    w[1].b_a_neg_gamma / w[0].b_a_neg_gamma,
                    w[1].a_neg_gamma_b / w[0].a_neg_gamma_b,
                    w[1].b_norm / w[0].b_norm,
                )
            })
            .collect()
    }
}

impl fmt::Display for ProbeTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = self.gamma;
        writeln!(
            f,
            "{:>6} {:>16} {:>16} {:>14}",
            "n",
            format!("|B A^-{g}|"),
            format!("|A^-{g} B|"),
            "|B|"
        )?;
        let ratios = self.growth_ratios();
        for (k, r) in self.rows.iter().enumerate() {
            write!(
                f,
                "{:>6} {:>16.6} {:>16.6} {:>14.4}",
                r.n, r.b_a_neg_gamma, r.a_neg_gamma_b, r.b_norm
            )?;
            if k > 0 {
                let (x, y, z) = ratios[k - 1];
                write!(f, "   ratios {x:.4} {y:.4} {z:.4}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Spectral norms of `B A^{−γ}`, `A^{−γ} B` and `B` on each resolution.
pub fn boundedness_probe(spec: &AdvectionDiffusionSpec, gamma: f64, n_list: &[usize]) -> Result<ProbeTable> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "probe exponent must lie in (0, 1], got {gamma}"
        )));
    }
    let rows = n_list
        .iter()
        .map(|&n| {
            let prob = build_advection_diffusion(&AdvectionDiffusionSpec { n, ..*spec })?;
            let a_pow = fractional_power(prob.a(), -gamma)?;
            let b = prob.b().as_matrix();
            Ok(ProbeRow {
                n,
                b_a_neg_gamma: norm2(&(b * a_pow.as_matrix())),
                a_neg_gamma_b: norm2(&(a_pow.as_matrix() * b)),
                b_norm: norm2(b),
            })
        })
        .collect::<Result<_>>()?;
    Ok(ProbeTable { gamma, rows })
}

/// Seeded random SPD matrix `G Gᵀ + I`, `G` with uniform(−1, 1) entries.
pub fn random_spd<R: Rng + ?Sized>(n: usize, rng: &mut R) -> OperatorMatrix {
    let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let m = &g * g.transpose() + DMatrix::identity(n, n);
    let sym = (&m + m.transpose()) * 0.5;
    OperatorMatrix::new(sym)
        .and_then(OperatorMatrix::verify_spd)
        .expect("G Gᵀ + I is SPD")
}

/// Matrix with uniform(−1, 1) entries.
pub fn random_operator<R: Rng + ?Sized>(n: usize, rng: &mut R) -> OperatorMatrix {
    OperatorMatrix::new(DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)))
        .expect("finite entries")
}

/// Random SPD `A`, random `B` scaled to `‖B‖₂ = 0.9 ‖A‖₂^{1/2}`, random unit
/// `u0`, final time `t_final`.
pub fn random_linear_problem<R: Rng + ?Sized>(n: usize, t_final: f64, rng: &mut R) -> LinearProblem {
    let a = random_spd(n, rng);
    let b_raw = random_operator(n, rng);
    let target = 0.9 * norm2(a.as_matrix()).sqrt();
    let b = b_raw.scaled(target / norm2(b_raw.as_matrix()));
    let u0 = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    let u0 = &u0 / u0.norm();
    LinearProblem::new(a, b, u0, t_final).expect("consistent dimensions")
}
