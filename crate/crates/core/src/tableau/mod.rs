//! Exponential Runge-Kutta tableaus whose entries are linear combinations of
//! φ-functions, and a numerical checker for the stiff order conditions of a
//! third-order method.
//!
//! A term `w · φ_j(−σ τA)` is a [`PhiTerm`] with weight `w`, index `j` and
//! argument scale `σ`. Within a tableau the `a_ij` terms conventionally carry
//! `σ = c_i` and the `b_i` terms carry `σ = 1`.

mod conditions;
pub mod file;

use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::matfun::{phi_family, OperatorMatrix};
use nalgebra::DMatrix;

pub use conditions::{check_order_conditions, psi2, ConditionResidual, ResidualReport, StageVerdict};

/// Default tolerance on operator 2-norm residuals.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiTerm {
    pub weight: f64,
    pub phi_index: usize,
    pub arg_scale: f64,
}

/// `Σ weight · φ_index(−arg_scale · τA)`; the empty combination is zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhiCombo {
    terms: Vec<PhiTerm>,
}

/// Single-term combination `φ_index(−arg_scale · τA)`, the building block for
/// writing tableaus by hand.
pub fn phi_term(phi_index: usize, arg_scale: f64) -> PhiCombo {
    PhiCombo {
        terms: vec![PhiTerm {
            weight: 1.0,
            phi_index,
            arg_scale,
        }],
    }
}

impl PhiCombo {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(terms: Vec<PhiTerm>) -> Result<Self> {
        for (i, t) in terms.iter().enumerate() {
            validate_term(t).map_err(|msg| Error::Tableau(format!("term {i}: {msg}")))?;
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[PhiTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.weight == 0.0)
    }

    pub fn max_index(&self) -> usize {
        self.terms.iter().map(|t| t.phi_index).max().unwrap_or(0)
    }
}

pub(crate) fn validate_term(t: &PhiTerm) -> std::result::Result<(), String> {
    if t.phi_index == 0 {
        return Err("phi index must be >= 1".into());
    }
    if !t.weight.is_finite() {
        return Err(format!("weight {} is not finite", t.weight));
    }
    if !(t.arg_scale > 0.0 && t.arg_scale <= 1.0) {
        return Err(format!("scale {} outside (0, 1]", t.arg_scale));
    }
    Ok(())
}

impl Mul<f64> for PhiCombo {
    type Output = PhiCombo;

    fn mul(mut self, alpha: f64) -> PhiCombo {
        for t in &mut self.terms {
            t.weight *= alpha;
        }
        self
    }
}

impl Add for PhiCombo {
    type Output = PhiCombo;

    fn add(mut self, rhs: PhiCombo) -> PhiCombo {
        self.terms.extend(rhs.terms);
        self
    }
}

impl Neg for PhiCombo {
    type Output = PhiCombo;

    fn neg(self) -> PhiCombo {
        self * -1.0
    }
}

impl Sub for PhiCombo {
    type Output = PhiCombo;

    fn sub(self, rhs: PhiCombo) -> PhiCombo {
        self + (-rhs)
    }
}

/// An explicit exponential Runge-Kutta method.
///
/// `a[i]` holds the coefficients `a_ij` for `j < i`, so the table is strictly
/// lower triangular by construction. Stage indices are 0-based here; reports
/// print them 1-based.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodTableau {
    name: String,
    c: Vec<f64>,
    a: Vec<Vec<PhiCombo>>,
    b: Vec<PhiCombo>,
}

impl MethodTableau {
    pub fn new(
        name: impl Into<String>,
        c: Vec<f64>,
        a: Vec<Vec<PhiCombo>>,
        b: Vec<PhiCombo>,
    ) -> Result<Self> {
        let s = c.len();
        let bad = |msg: String| Err(Error::Tableau(msg));
        if s == 0 {
            return bad("a method needs at least one stage".into());
        }
        if c[0] != 0.0 {
            return bad(format!("first node must be 0, got {}", c[0]));
        }
        if let Some(ci) = c.iter().find(|ci| !(0.0..=1.0).contains(*ci)) {
            return bad(format!("node {ci} outside [0, 1]"));
        }
        if a.len() != s {
            return bad(format!("expected {s} rows of a, got {}", a.len()));
        }
        for (i, row) in a.iter().enumerate() {
            if row.len() != i {
                return bad(format!(
                    "row {} of a must have {i} entries (explicit method), got {}",
                    i + 1,
                    row.len()
                ));
            }
        }
        if b.len() != s {
            return bad(format!("expected {s} weights b, got {}", b.len()));
        }
        for combo in a.iter().flatten().chain(&b) {
            for t in combo.terms() {
                validate_term(t).map_err(Error::Tableau)?;
            }
        }
        Ok(Self {
            name: name.into(),
            c,
            a,
            b,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn stages(&self) -> usize {
        self.c.len()
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// `a_ij` with 0-based `j < i`.
    pub fn a(&self, i: usize, j: usize) -> &PhiCombo {
        &self.a[i][j]
    }

    pub fn a_row(&self, i: usize) -> &[PhiCombo] {
        &self.a[i]
    }

    pub fn b(&self, i: usize) -> &PhiCombo {
        &self.b[i]
    }

    pub fn b_all(&self) -> &[PhiCombo] {
        &self.b
    }

    pub(crate) fn combos(&self) -> impl Iterator<Item = &PhiCombo> {
        self.a.iter().flatten().chain(&self.b)
    }
}

/// The fourth-stage third-order method satisfying the strong stiff order
/// conditions: `c = (0, 1/2, 1/2, 1)`, `b_2 = 0`.
pub fn erk43() -> MethodTableau {
    let p = phi_term;
    let c = vec![0.0, 0.5, 0.5, 1.0];
    let a = vec![
        vec![],
        vec![p(1, 0.5) * 0.5],
        vec![p(1, 0.5) * 0.5 - p(2, 0.5) * 0.5, p(2, 0.5) * 0.5],
        vec![
            p(1, 1.0) - p(2, 1.0) * 2.0,
            p(1, 1.0),
            -p(1, 1.0) + p(2, 1.0) * 2.0,
        ],
    ];
    let b = vec![
        p(1, 1.0) - p(2, 1.0) * 3.0 + p(3, 1.0) * 4.0,
        PhiCombo::zero(),
        p(2, 1.0) * 4.0 - p(3, 1.0) * 8.0,
        -p(2, 1.0) + p(3, 1.0) * 4.0,
    ];
    MethodTableau::new("erk43", c, a, b).expect("builtin tableau is valid")
}

/// Three-stage third-order ETD3RK scheme; satisfies only the weak form of
/// the stiff conditions.
pub fn etd3rk() -> MethodTableau {
    let p = phi_term;
    let c = vec![0.0, 0.5, 1.0];
    let a = vec![
        vec![],
        vec![p(1, 0.5) * 0.5],
        vec![-p(1, 1.0), p(1, 1.0) * 2.0],
    ];
    let b = vec![
        p(1, 1.0) - p(2, 1.0) * 3.0 + p(3, 1.0) * 4.0,
        p(2, 1.0) * 4.0 - p(3, 1.0) * 8.0,
        -p(2, 1.0) + p(3, 1.0) * 4.0,
    ];
    MethodTableau::new("etd3rk", c, a, b).expect("builtin tableau is valid")
}

pub fn exp_euler() -> MethodTableau {
    MethodTableau::new("exp-euler", vec![0.0], vec![vec![]], vec![phi_term(1, 1.0)])
        .expect("builtin tableau is valid")
}

pub fn builtin_tableaus() -> Vec<MethodTableau> {
    vec![erk43(), etd3rk(), exp_euler()]
}

/// Looks up a builtin by CLI name (`erk43`, `etd3rk`, `exp-euler`).
/// Underscores are accepted in place of hyphens.
pub fn builtin(name: &str) -> Option<MethodTableau> {
    let name = name.replace('_', "-");
    builtin_tableaus().into_iter().find(|t| t.name() == name)
}

/// Evaluates φ-combinations at `−τA`, sharing one φ-family computation per
/// distinct argument scale.
pub struct CoefficientEvaluator<'a> {
    a: &'a OperatorMatrix,
    tau: f64,
    families: HashMap<u64, Vec<OperatorMatrix>>,
}

impl<'a> CoefficientEvaluator<'a> {
    pub fn new(tau: f64, a: &'a OperatorMatrix) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "step size must be positive, got {tau}"
            )));
        }
        Ok(Self {
            a,
            tau,
            families: HashMap::new(),
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// Makes `φ_0..=φ_k` at `−scale·τA` available.
    pub fn prepare(&mut self, scale: f64, k: usize) -> Result<()> {
        let key = scale.to_bits();
        if self.families.get(&key).is_some_and(|f| f.len() > k) {
            return Ok(());
        }
        let fam = phi_family(k, &self.a.scaled(-scale * self.tau))?;
        self.families.insert(key, fam);
        Ok(())
    }

    /// Prepares every φ needed by a tableau, plus φ_1..φ_3 at scale 1 and
    /// φ_1, φ_2 at each node, which the condition checker uses.
    pub fn prepare_tableau(&mut self, tab: &MethodTableau) -> Result<()> {
        let mut need: Vec<(f64, usize)> = vec![(1.0, 3)];
        need.extend(tab.c().iter().filter(|&&c| c > 0.0).map(|&c| (c, 2)));
        for combo in tab.combos() {
            need.extend(combo.terms().iter().map(|t| (t.arg_scale, t.phi_index)));
        }
        let mut by_scale: HashMap<u64, (f64, usize)> = HashMap::new();
        for (s, k) in need {
            let e = by_scale.entry(s.to_bits()).or_insert((s, k));
            e.1 = e.1.max(k);
        }
        for (s, k) in by_scale.into_values() {
            self.prepare(s, k)?;
        }
        Ok(())
    }

    /// `φ_k(−scale·τA)`.
    pub fn phi(&mut self, k: usize, scale: f64) -> Result<&OperatorMatrix> {
        self.prepare(scale, k)?;
        Ok(&self.families[&scale.to_bits()][k])
    }

    pub fn evaluate(&mut self, combo: &PhiCombo) -> Result<DMatrix<f64>> {
        let n = self.a.dim();
        let mut out = DMatrix::zeros(n, n);
        for t in combo.terms() {
            let p = self.phi(t.phi_index, t.arg_scale)?;
            out.zip_apply(p.as_matrix(), |o, x| *o += t.weight * x);
        }
        Ok(out)
    }
}

/// `Σ_t weight_t · φ_{index_t}(−scale_t · τA)`.
pub fn evaluate_coefficient(combo: &PhiCombo, tau: f64, a: &OperatorMatrix) -> Result<DMatrix<f64>> {
    CoefficientEvaluator::new(tau, a)?.evaluate(combo)
}
