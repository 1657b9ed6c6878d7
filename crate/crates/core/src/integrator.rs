//! Time stepping for `u' + Au = Bu` with explicit exponential Runge-Kutta
//! methods:
//!
//! ```text
//! U_i     = e^{−c_i τA} u_n + τ Σ_{j<i} a_ij(−τA) B U_j
//! u_{n+1} = e^{−τA} u_n     + τ Σ_i   b_i(−τA)  B U_i
//! ```
//!
//! The default path evaluates every coefficient matrix once per step size
//! ([`StepperPlan`]) so that steps are matrix-vector products only.
//! [`integrate_action`] is a matrix-free path built on [`phi_action`] and is
//! kept for cross-validation.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::matfun::{check_len, expm, phi_action, OperatorMatrix};
use crate::problems::Grid1D;
use crate::tableau::{CoefficientEvaluator, MethodTableau};

/// Max-norm above which the explicit reference integrator is declared unstable.
pub const INSTABILITY_THRESHOLD: f64 = 1e12;

/// `u' + Au = Bu`, `u(0) = u0` on `[0, T]`.
#[derive(Clone, Debug)]
pub struct LinearProblem {
    a: OperatorMatrix,
    b: OperatorMatrix,
    u0: DVector<f64>,
    t_final: f64,
    grid: Option<Grid1D>,
}

impl LinearProblem {
    pub fn new(a: OperatorMatrix, b: OperatorMatrix, u0: DVector<f64>, t_final: f64) -> Result<Self> {
        let n = a.dim();
        check_len("B", n, b.dim())?;
        check_len("u0", n, u0.len())?;
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(Error::Config(format!(
                "final time must be finite and positive, got {t_final}"
            )));
        }
        if u0.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            a,
            b,
            u0,
            t_final,
            grid: None,
        })
    }

    pub fn with_grid(mut self, grid: Grid1D) -> Result<Self> {
        check_len("grid", self.dim(), grid.n())?;
        self.grid = Some(grid);
        Ok(self)
    }

    /// Same operators and final time, different initial value.
    pub fn with_initial_value(&self, u0: DVector<f64>) -> Result<Self> {
        check_len("u0", self.dim(), u0.len())?;
        Ok(Self {
            u0,
            ..self.clone()
        })
    }

    pub fn a(&self) -> &OperatorMatrix {
        &self.a
    }

    pub fn b(&self) -> &OperatorMatrix {
        &self.b
    }

    pub fn u0(&self) -> &DVector<f64> {
        &self.u0
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn grid(&self) -> Option<&Grid1D> {
        self.grid.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }
}

fn fingerprint(m: &DMatrix<f64>) -> u64 {
    let mut h = DefaultHasher::new();
    m.nrows().hash(&mut h);
    for x in m.iter() {
        x.to_bits().hash(&mut h);
    }
    h.finish()
}

/// Coefficient matrices of one method evaluated at `−τA`.
#[derive(Clone, Debug)]
pub struct StepperPlan {
    method: String,
    tau: f64,
    a_fingerprint: u64,
    dim: usize,
    /// `(c, e^{−cτA})` for each distinct positive node, and for `c = 1`.
    propagators: Vec<(f64, DMatrix<f64>)>,
    stage_propagator: Vec<Option<usize>>,
    full_propagator: usize,
    a_coeffs: Vec<Vec<Option<DMatrix<f64>>>>,
    b_coeffs: Vec<Option<DMatrix<f64>>>,
}

/// Evaluates every matrix the scheme needs at step size `tau`.
pub fn precompute(tab: &MethodTableau, tau: f64, a: &OperatorMatrix) -> Result<StepperPlan> {
    let mut ev = CoefficientEvaluator::new(tau, a)?;

    let mut propagators: Vec<(f64, DMatrix<f64>)> = Vec::new();
    let mut index_of = |c: f64, ev: &mut CoefficientEvaluator<'_>| -> Result<usize> {
        if let Some(k) = propagators.iter().position(|(s, _)| *s == c) {
            return Ok(k);
        }
        propagators.push((c, ev.phi(0, c)?.as_matrix().clone()));
        Ok(propagators.len() - 1)
    };
    let mut stage_propagator = Vec::with_capacity(tab.stages());
    for &c in tab.c() {
        stage_propagator.push(if c > 0.0 {
            Some(index_of(c, &mut ev)?)
        } else {
            None
        });
    }
    let full_propagator = index_of(1.0, &mut ev)?;

    let mut eval = |combo: &crate::tableau::PhiCombo| -> Result<Option<DMatrix<f64>>> {
        if combo.is_zero() {
            Ok(None)
        } else {
            ev.evaluate(combo).map(Some)
        }
    };
    let a_coeffs = (0..tab.stages())
        .map(|i| tab.a_row(i).iter().map(&mut eval).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let b_coeffs = tab.b_all().iter().map(&mut eval).collect::<Result<Vec<_>>>()?;

    Ok(StepperPlan {
        method: tab.name().to_string(),
        tau,
        a_fingerprint: fingerprint(a.as_matrix()),
        dim: a.dim(),
        propagators,
        stage_propagator,
        full_propagator,
        a_coeffs,
        b_coeffs,
    })
}

impl StepperPlan {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nodes with a stored propagator `e^{−cτA}`, in first-use order.
    pub fn propagator_nodes(&self) -> Vec<f64> {
        self.propagators.iter().map(|(c, _)| *c).collect()
    }

    pub fn propagator(&self, c: f64) -> Option<&DMatrix<f64>> {
        self.propagators
            .iter()
            .find(|(s, _)| *s == c)
            .map(|(_, m)| m)
    }

    /// `a_ij(−τA)` (0-based), `None` for a zero coefficient.
    pub fn a_coefficient(&self, i: usize, j: usize) -> Option<&DMatrix<f64>> {
        self.a_coeffs.get(i)?.get(j)?.as_ref()
    }

    pub fn b_coefficient(&self, i: usize) -> Option<&DMatrix<f64>> {
        self.b_coeffs.get(i)?.as_ref()
    }

    /// Whether this plan was built from exactly this method, step and operator.
    pub fn is_valid_for(&self, tab: &MethodTableau, tau: f64, a: &OperatorMatrix) -> bool {
        self.method == tab.name()
            && self.tau.to_bits() == tau.to_bits()
            && self.dim == a.dim()
            && self.a_fingerprint == fingerprint(a.as_matrix())
    }
}

/// One step of the scheme; stages are formed in index order.
pub fn step(plan: &StepperPlan, b: &OperatorMatrix, u: &DVector<f64>) -> Result<DVector<f64>> {
    check_len("step B", plan.dim, b.dim())?;
    check_len("step u", plan.dim, u.len())?;
    let tau = plan.tau;
    let s = plan.stage_propagator.len();

    // B U_j for each finished stage
    let mut bu: Vec<DVector<f64>> = Vec::with_capacity(s);
    for i in 0..s {
        let mut stage = match plan.stage_propagator[i] {
            Some(k) => &plan.propagators[k].1 * u,
            None => u.clone(),
        };
        for (j, coeff) in plan.a_coeffs[i].iter().enumerate() {
            if let Some(m) = coeff {
                stage.gemv(tau, m, &bu[j], 1.0);
            }
        }
        bu.push(b.as_matrix() * stage);
    }

    let mut next = &plan.propagators[plan.full_propagator].1 * u;
    for (coeff, bui) in plan.b_coeffs.iter().zip(&bu) {
        if let Some(m) = coeff {
            next.gemv(tau, m, bui, 1.0);
        }
    }
    Ok(next)
}

/// Number of steps of size `tau` that land exactly on `t_final`.
pub fn step_count(t_final: f64, tau: f64) -> Result<usize> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::Config(format!("step size must be positive, got {tau}")));
    }
    let n = (t_final / tau).round();
    if n < 1.0 || (n * tau - t_final).abs() > f64::EPSILON * t_final {
        return Err(Error::Config(format!(
            "step size {tau} does not divide the final time {t_final}"
        )));
    }
    Ok(n as usize)
}

/// `u_N ≈ u(T)` after `N = T/τ` steps sharing one precomputed plan.
pub fn integrate(tab: &MethodTableau, prob: &LinearProblem, tau: f64) -> Result<DVector<f64>> {
    let steps = step_count(prob.t_final, tau)?;
    let plan = precompute(tab, tau, &prob.a)?;
    let mut u = prob.u0.clone();
    for _ in 0..steps {
        u = step(&plan, &prob.b, &u)?;
    }
    Ok(u)
}

/// Adds `τ Σ_j coeff_j(−τA) w_j` plus, if `start` is given, the propagated
/// start vector `e^{−cτA} start`, using one augmented exponential per distinct
/// argument scale.
fn combine_by_action(
    neg_a: &OperatorMatrix,
    tau: f64,
    node: f64,
    start: &DVector<f64>,
    coeffs: &[crate::tableau::PhiCombo],
    ws: &[DVector<f64>],
) -> Result<DVector<f64>> {
    let n = start.len();
    // (scale, per-index accumulated vectors)
    let mut groups: Vec<(f64, Vec<DVector<f64>>)> = Vec::new();
    for (combo, w) in coeffs.iter().zip(ws) {
        for t in combo.terms() {
            let pos = match groups.iter().position(|(s, _)| *s == t.arg_scale) {
                Some(p) => p,
                None => {
                    groups.push((t.arg_scale, Vec::new()));
                    groups.len() - 1
                }
            };
            let vs = &mut groups[pos].1;
            if vs.len() < t.phi_index {
                vs.resize(t.phi_index, DVector::zeros(n));
            }
            vs[t.phi_index - 1].axpy(t.weight, w, 1.0);
        }
    }

    let mut out = DVector::zeros(n);
    let mut start_used = node == 0.0;
    if start_used {
        out += start;
    }
    let zero = DVector::zeros(n);
    for (scale, vs) in groups {
        let h = scale * tau;
        // τ φ_k(−hA) V = h^k φ_k(−hA) (τ V / h^k)
        let rescaled: Vec<DVector<f64>> = vs
            .iter()
            .enumerate()
            .map(|(k, v)| v * (tau / h.powi(k as i32 + 1)))
            .collect();
        let v0 = if !start_used && scale == node {
            start_used = true;
            start
        } else {
            &zero
        };
        out += phi_action(neg_a, h, v0, &rescaled)?;
    }
    if !start_used {
        out += phi_action(neg_a, node * tau, start, &[])?;
    }
    Ok(out)
}

/// One step through [`phi_action`] without forming coefficient matrices.
pub fn step_action(
    tab: &MethodTableau,
    a: &OperatorMatrix,
    b: &OperatorMatrix,
    tau: f64,
    u: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_len("step B", a.dim(), b.dim())?;
    check_len("step u", a.dim(), u.len())?;
    let neg_a = a.scaled(-1.0);
    let mut bu: Vec<DVector<f64>> = Vec::with_capacity(tab.stages());
    for i in 0..tab.stages() {
        let stage = combine_by_action(&neg_a, tau, tab.c()[i], u, tab.a_row(i), &bu)?;
        bu.push(b.as_matrix() * stage);
    }
    combine_by_action(&neg_a, tau, 1.0, u, tab.b_all(), &bu)
}

/// Matrix-free counterpart of [`integrate`].
pub fn integrate_action(tab: &MethodTableau, prob: &LinearProblem, tau: f64) -> Result<DVector<f64>> {
    let steps = step_count(prob.t_final, tau)?;
    let mut u = prob.u0.clone();
    for _ in 0..steps {
        u = step_action(tab, &prob.a, &prob.b, tau, &u)?;
    }
    Ok(u)
}

/// `u(t) = e^{−t(A−B)} u0`.
pub fn exact_solution(prob: &LinearProblem, t: f64) -> Result<DVector<f64>> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time must be finite and non-negative, got {t}"
        )));
    }
    let gen = OperatorMatrix::new((prob.b.as_matrix() - prob.a.as_matrix()) * t)?;
    Ok(expm(&gen)?.as_matrix() * &prob.u0)
}

/// Classical RK4 on `u' = (B − A)u`.
pub fn rk4_reference(prob: &LinearProblem, tau: f64) -> Result<DVector<f64>> {
    let steps = step_count(prob.t_final, tau)?;
    let rhs = prob.b.as_matrix() - prob.a.as_matrix();
    let mut u = prob.u0.clone();
    for _ in 0..steps {
        let k1 = &rhs * &u;
        let k2 = &rhs * (&u + &k1 * (0.5 * tau));
        let k3 = &rhs * (&u + &k2 * (0.5 * tau));
        let k4 = &rhs * (&u + &k3 * tau);
        u += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (tau / 6.0);
        let max_abs = u.amax();
        if !(max_abs <= INSTABILITY_THRESHOLD) {
            return Err(Error::Instability { tau, max_abs });
        }
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matfun::norm2;
    use crate::problems::{random_linear_problem, random_spd};
    use crate::tableau::{builtin_tableaus, erk43, etd3rk, exp_euler};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar(a: f64, b: f64, u0: f64, t: f64) -> LinearProblem {
        LinearProblem::new(
            OperatorMatrix::from_rows(1, &[a]).unwrap(),
            OperatorMatrix::from_rows(1, &[b]).unwrap(),
            DVector::from_element(1, u0),
            t,
        )
        .unwrap()
    }

    #[test]
    fn exp_euler_plan_contents() {
        let a = OperatorMatrix::from_diagonal(&[1.0, 2.0]).unwrap();
        let plan = precompute(&exp_euler(), 0.1, &a).unwrap();
        assert_eq!(plan.propagator_nodes(), vec![1.0]);
        let phi1 = crate::matfun::phi(1, &a.scaled(-0.1)).unwrap();
        assert!((plan.b_coefficient(0).unwrap() - phi1.as_matrix()).amax() < 1e-15);
        let e = expm(&a.scaled(-0.1)).unwrap();
        assert!((plan.propagator(1.0).unwrap() - e.as_matrix()).amax() < 1e-15);
    }

    #[test]
    fn erk43_plan_shares_duplicate_nodes() {
        let a = OperatorMatrix::from_diagonal(&[1.0, 2.0]).unwrap();
        let plan = precompute(&erk43(), 0.1, &a).unwrap();
        assert_eq!(plan.propagator_nodes(), vec![0.5, 1.0]);
        assert!(plan.b_coefficient(1).is_none());
    }

    #[test]
    fn plan_depends_on_step_size() {
        let a = OperatorMatrix::from_diagonal(&[1.0, 2.0]).unwrap();
        let tab = erk43();
        let p1 = precompute(&tab, 0.1, &a).unwrap();
        let p2 = precompute(&tab, 0.2, &a).unwrap();
        for c in [0.5, 1.0] {
            assert!((p1.propagator(c).unwrap() - p2.propagator(c).unwrap()).amax() > 0.0);
        }
        assert!(p1.is_valid_for(&tab, 0.1, &a));
        assert!(!p1.is_valid_for(&tab, 0.2, &a));
        assert!(!p1.is_valid_for(&etd3rk(), 0.1, &a));
        assert!(!p1.is_valid_for(&tab, 0.1, &a.scaled(2.0)));
    }

    #[test]
    fn zero_b_step_is_pure_propagation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_spd(6, &mut rng);
        let u = DVector::from_fn(6, |i, _| i as f64);
        let e = expm(&a.scaled(-0.3)).unwrap();
        for tab in builtin_tableaus() {
            let plan = precompute(&tab, 0.3, &a).unwrap();
            let next = step(&plan, &OperatorMatrix::zeros(6), &u).unwrap();
            assert!((next - e.as_matrix() * &u).amax() < 1e-14);
        }
    }

    #[test]
    fn scalar_stiff_step_matches_exact() {
        let prob = scalar(1.0, 0.5, 1.0, 0.1);
        let u1 = integrate(&erk43(), &prob, 0.1).unwrap()[0];
        let exact = (-0.05f64).exp();
        assert!((exact - 0.951229425).abs() < 1e-9);
        assert!((u1 - exact).abs() <= 0.1f64.powi(4));
    }

    #[test]
    fn zero_a_reduces_to_classical_rk() {
        // φ_k(0) = 1/k! turns erk43 into the classical scheme
        //   c = (0, 1/2, 1/2, 1), a = (1/2; 1/4, 1/4; 0, 1, 0), b = (1/6, 0, 2/3, 1/6).
        // Stage by stage for u' = u:
        //   U2 = 1 + h/2, U3 = 1 + h/2 + h²/8, U4 = 1 + h U2 = 1 + h + h²/2,
        //   u1 = 1 + h (1/6 + 2/3 U3 + 1/6 U4) = 1 + h + h²/2 + h³/6,
        // i.e. a third-order Taylor polynomial with error h⁴/24 + O(h⁵).
        let prob = scalar(0.0, 1.0, 1.0, 0.1);
        let u1 = integrate(&erk43(), &prob, 0.1).unwrap()[0];
        let h = 0.1f64;
        let taylor3 = 1.0 + h + h * h / 2.0 + h.powi(3) / 6.0;
        assert!((u1 - taylor3).abs() < 1e-15);
        assert!((u1 - 1.105_166_666_666_667).abs() < 1e-15);
        let err = (h.exp() - u1).abs();
        assert!(err > 4.2e-6 && err < 4.3e-6, "{err:e}");
    }

    #[test]
    fn step_rejects_dimension_mismatch() {
        let a = OperatorMatrix::identity(3);
        let plan = precompute(&erk43(), 0.1, &a).unwrap();
        assert!(step(&plan, &OperatorMatrix::zeros(2), &DVector::zeros(3)).is_err());
        assert!(step(&plan, &OperatorMatrix::zeros(3), &DVector::zeros(2)).is_err());
    }

    #[test]
    fn step_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let prob = random_linear_problem(8, 1.0, &mut rng);
        let plan = precompute(&erk43(), 0.01, prob.a()).unwrap();
        let x = step(&plan, prob.b(), prob.u0()).unwrap();
        let y = step(&plan, prob.b(), prob.u0()).unwrap();
        assert_eq!(
            x.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            y.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn zero_b_integration_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_spd(7, &mut rng);
        let u0 = DVector::from_fn(7, |i, _| (i as f64).cos());
        let prob = LinearProblem::new(a.clone(), OperatorMatrix::zeros(7), u0.clone(), 1.0).unwrap();
        let want = expm(&a.scaled(-1.0)).unwrap().as_matrix() * &u0;
        for tab in builtin_tableaus() {
            for tau in [0.5, 0.125, 1.0 / 64.0] {
                let got = integrate(&tab, &prob, tau).unwrap();
                assert!((got - &want).norm() <= 1e-10 * u0.norm(), "{}", tab.name());
            }
        }
    }

    #[test]
    fn random_problem_matches_exact_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let prob = random_linear_problem(10, 1.0, &mut rng);
        let exact = exact_solution(&prob, 1.0).unwrap();
        let got = integrate(&erk43(), &prob, 1e-3).unwrap();
        assert!((got - &exact).norm() <= 1e-8 * exact.norm());
    }

    #[test]
    fn non_dividing_step_is_rejected() {
        let prob = scalar(1.0, 0.0, 1.0, 1.0);
        assert!(matches!(integrate(&erk43(), &prob, 0.3), Err(Error::Config(_))));
        assert!(matches!(rk4_reference(&prob, 0.3), Err(Error::Config(_))));
        assert_eq!(step_count(1.0, 1.0 / 512.0).unwrap(), 512);
        assert_eq!(step_count(1.0, 1e-3).unwrap(), 1000);
    }

    #[test]
    fn action_path_matches_dense_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let prob = random_linear_problem(10, 1.0, &mut rng);
        for tab in builtin_tableaus() {
            let dense = integrate(&tab, &prob, 0.05).unwrap();
            let action = integrate_action(&tab, &prob, 0.05).unwrap();
            assert!((&dense - action).norm() <= 1e-10 * dense.norm(), "{}", tab.name());
        }
    }

    #[test]
    fn exact_solution_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let prob = random_linear_problem(5, 1.0, &mut rng);
        assert_eq!(exact_solution(&prob, 0.0).unwrap(), *prob.u0());
        assert!(exact_solution(&prob, -1.0).is_err());

        let same = LinearProblem::new(prob.a().clone(), prob.a().clone(), prob.u0().clone(), 1.0).unwrap();
        assert!((exact_solution(&same, 0.7).unwrap() - prob.u0()).amax() < 1e-15);
    }

    #[test]
    fn exact_solution_agrees_with_rk4() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let prob = random_linear_problem(6, 1.0, &mut rng);
        let exact = exact_solution(&prob, 1.0).unwrap();
        let rk4 = rk4_reference(&prob, 1e-4).unwrap();
        assert!((exact - rk4).norm() <= 1e-9);
    }

    #[test]
    fn rk4_scalar_and_trivial_cases() {
        let u = rk4_reference(&scalar(1.0, 0.0, 1.0, 0.1), 0.1).unwrap()[0];
        let h = 0.1f64;
        let want = 1.0 - h + h * h / 2.0 - h.powi(3) / 6.0 + h.powi(4) / 24.0;
        assert!((u - want).abs() <= 4.0 * f64::EPSILON);
        assert!((u - 0.90483750).abs() < 1e-8);

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let prob = random_linear_problem(4, 1.0, &mut rng);
        let same = LinearProblem::new(prob.a().clone(), prob.a().clone(), prob.u0().clone(), 1.0).unwrap();
        assert_eq!(rk4_reference(&same, 0.25).unwrap(), *prob.u0());
        let zero = LinearProblem::new(OperatorMatrix::zeros(4), OperatorMatrix::zeros(4), prob.u0().clone(), 1.0).unwrap();
        assert_eq!(rk4_reference(&zero, 0.25).unwrap(), *prob.u0());
    }

    #[test]
    fn rk4_reports_instability() {
        let prob = scalar(1e4, 0.0, 1.0, 1.0);
        match rk4_reference(&prob, 0.125) {
            Err(Error::Instability { tau, .. }) => assert_eq!(tau, 0.125),
            other => panic!("expected instability, got {other:?}"),
        }
    }

    #[test]
    fn local_error_is_fourth_order() {
        let tab = erk43();
        let (xs, ys): (Vec<f64>, Vec<f64>) = (4..=10)
            .map(|k| {
                let tau = 2f64.powi(-k);
                let prob = scalar(1.0, 0.5, 1.0, tau);
                let u1 = integrate(&tab, &prob, tau).unwrap()[0];
                (tau.ln(), (u1 - (-0.5 * tau).exp()).abs().ln())
            })
            .unzip();
        let slope = crate::harness::least_squares_slope(&xs, &ys);
        assert!((3.9..=4.1).contains(&slope), "slope {slope}");
    }

    #[test]
    fn plan_matrices_bounded_on_stiff_operator() {
        let a = crate::problems::build_advection_diffusion(&Default::default()).unwrap();
        let plan = precompute(&erk43(), 1.0 / 8.0, a.a()).unwrap();
        for i in 0..4 {
            if let Some(m) = plan.b_coefficient(i) {
                assert!(norm2(m) <= 1.0);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn integrate_is_linear_in_initial_value(seed in 0u64..1000, alpha in -3.0..3.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let prob = random_linear_problem(6, 1.0, &mut rng);
            let v0 = DVector::from_fn(6, |i, _| (i as f64 * 0.7 + seed as f64).sin());
            let combined = prob.with_initial_value(prob.u0() * alpha + &v0).unwrap();
            let other = prob.with_initial_value(v0).unwrap();
            let tab = erk43();
            let lhs = integrate(&tab, &combined, 0.125).unwrap();
            let rhs = integrate(&tab, &prob, 0.125).unwrap() * alpha + integrate(&tab, &other, 0.125).unwrap();
            prop_assert!((lhs - rhs).amax() <= 1e-12);
        }
    }
}
