use std::fmt;

use nalgebra::DMatrix;

use super::{CoefficientEvaluator, MethodTableau};
use crate::error::{Error, Result};
use crate::matfun::{norm2, OperatorMatrix};

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionResidual {
    pub name: String,
    pub residual: f64,
}

/// Per-stage data for the strong form of the `Σ b_i J ψ_{2,i} = 0` condition:
/// it holds at a stage when either factor vanishes as an operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageVerdict {
    /// 1-based stage number.
    pub stage: usize,
    pub b_norm: f64,
    pub psi_norm: f64,
}

impl StageVerdict {
    pub fn holds(&self, tol: f64) -> bool {
        self.b_norm <= tol || self.psi_norm <= tol
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    pub method: String,
    pub tau: f64,
    pub tol: f64,
    pub conditions: Vec<ConditionResidual>,
    /// `max_J ‖Σ_{i≥2} b_i(−τA) J ψ_{2,i}(−τA)‖` over the supplied samples.
    pub weak_residual: f64,
    pub stages: Vec<StageVerdict>,
}

impl ResidualReport {
    pub fn residual(&self, name: &str) -> Option<f64> {
        self.conditions
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.residual)
    }

    pub fn conditions_pass(&self) -> bool {
        self.conditions.iter().all(|c| c.residual <= self.tol)
    }

    pub fn strong_form_holds(&self) -> bool {
        self.stages.iter().all(|s| s.holds(self.tol))
    }

    pub fn weak_form_holds(&self) -> bool {
        self.weak_residual <= self.tol
    }

    pub fn passes(&self) -> bool {
        self.conditions_pass() && self.strong_form_holds()
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

impl fmt::Display for ResidualReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "method {}  tau = {:e}  tol = {:e}",
            self.method, self.tau, self.tol
        )?;
        for c in &self.conditions {
            writeln!(
                f,
                "  {:<28} {:>12.3e}  {}",
                c.name,
                c.residual,
                verdict(c.residual <= self.tol)
            )?;
        }
        writeln!(
            f,
            "  {:<28} {:>12.3e}  {}",
            "weak sum_i b_i J psi2_i",
            self.weak_residual,
            verdict(self.weak_form_holds())
        )?;
        for s in &self.stages {
            writeln!(
                f,
                "  stage {}: |b| = {:.3e}  |psi2| = {:.3e}  {}",
                s.stage,
                s.b_norm,
                s.psi_norm,
                verdict(s.holds(self.tol))
            )?;
        }
        writeln!(
            f,
            "strong form: {}",
            verdict(self.strong_form_holds())
        )?;
        write!(f, "overall: {}", verdict(self.passes()))
    }
}

/// `ψ_{2,i}(−τA) = c_i² φ_2(−c_i τA) − Σ_{j<i} c_j a_ij(−τA)` for 0-based
/// stage `i ≥ 1`.
pub fn psi2(tab: &MethodTableau, i: usize, tau: f64, a: &OperatorMatrix) -> Result<DMatrix<f64>> {
    let mut ev = CoefficientEvaluator::new(tau, a)?;
    psi2_with(&mut ev, tab, i)
}

pub(crate) fn psi2_with(
    ev: &mut CoefficientEvaluator<'_>,
    tab: &MethodTableau,
    i: usize,
) -> Result<DMatrix<f64>> {
    if i == 0 || i >= tab.stages() {
        return Err(Error::InvalidArgument(format!(
            "psi2 stage index {i} outside 1..{}",
            tab.stages()
        )));
    }
    let ci = tab.c()[i];
    let mut out = if ci > 0.0 {
        ev.phi(2, ci)?.as_matrix() * (ci * ci)
    } else {
        DMatrix::zeros(ev.dim(), ev.dim())
    };
    for (j, combo) in tab.a_row(i).iter().enumerate() {
        let cj = tab.c()[j];
        if cj != 0.0 && !combo.is_zero() {
            out -= ev.evaluate(combo)? * cj;
        }
    }
    Ok(out)
}

/// Evaluates the third-order stiff conditions at `−τA`:
///
/// * `Σ b_i = φ_1`, `Σ c_i b_i = φ_2`, `Σ c_i² b_i = 2φ_3`
/// * row sums `Σ_j a_ij = c_i φ_1(−c_i τA)` for every stage after the first
/// * `Σ_{i≥2} b_i J ψ_{2,i} = 0`, weakly over the sampled `J` and strongly
///   per stage (`b_i ≡ 0` or `ψ_{2,i} ≡ 0`).
pub fn check_order_conditions(
    tab: &MethodTableau,
    tau: f64,
    a: &OperatorMatrix,
    j_samples: &[OperatorMatrix],
    tol: f64,
) -> Result<ResidualReport> {
    if j_samples.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one J sample is required".into(),
        ));
    }
    let n = a.dim();
    for j in j_samples {
        crate::matfun::check_len("J sample", n, j.dim())?;
    }

    let mut ev = CoefficientEvaluator::new(tau, a)?;
    ev.prepare_tableau(tab)?;
    let s = tab.stages();
    let c = tab.c();

    let b: Vec<DMatrix<f64>> = tab
        .b_all()
        .iter()
        .map(|combo| ev.evaluate(combo))
        .collect::<Result<_>>()?;

    let weighted_sum = |power: i32| {
        b.iter()
            .zip(c)
            .fold(DMatrix::zeros(n, n), |acc, (bi, ci)| acc + bi * ci.powi(power))
    };
    let phi1 = ev.phi(1, 1.0)?.as_matrix().clone();
    let phi2 = ev.phi(2, 1.0)?.as_matrix().clone();
    let phi3 = ev.phi(3, 1.0)?.as_matrix().clone();

    let mut conditions = vec![
        ConditionResidual {
            name: "sum b_i = phi1".into(),
            residual: norm2(&(weighted_sum(0) - phi1)),
        },
        ConditionResidual {
            name: "sum c_i b_i = phi2".into(),
            residual: norm2(&(weighted_sum(1) - phi2)),
        },
    ];
    for i in 1..s {
        let mut row = DMatrix::zeros(n, n);
        for combo in tab.a_row(i) {
            row += ev.evaluate(combo)?;
        }
        if c[i] > 0.0 {
            row -= ev.phi(1, c[i])?.as_matrix() * c[i];
        }
        conditions.push(ConditionResidual {
            name: format!("row {} sum = c_{} phi1", i + 1, i + 1),
            residual: norm2(&row),
        });
    }
    conditions.push(ConditionResidual {
        name: "sum c_i^2 b_i = 2 phi3".into(),
        residual: norm2(&(weighted_sum(2) - phi3 * 2.0)),
    });

    let psi: Vec<DMatrix<f64>> = (1..s)
        .map(|i| psi2_with(&mut ev, tab, i))
        .collect::<Result<_>>()?;

    let weak_residual = j_samples
        .iter()
        .map(|jm| {
            let sum = psi
                .iter()
                .zip(&b[1..])
                .fold(DMatrix::zeros(n, n), |acc, (p, bi)| {
                    acc + bi * jm.as_matrix() * p
                });
            norm2(&sum)
        })
        .fold(0.0, f64::max);

    let stages = psi
        .iter()
        .zip(&b[1..])
        .enumerate()
        .map(|(k, (p, bi))| StageVerdict {
            stage: k + 2,
            b_norm: norm2(bi),
            psi_norm: norm2(p),
        })
        .collect();

    Ok(ResidualReport {
        method: tab.name().to_string(),
        tau,
        tol,
        conditions,
        weak_residual,
        stages,
    })
}
