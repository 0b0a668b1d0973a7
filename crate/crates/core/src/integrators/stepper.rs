//! Implicit stepping of the discrete evolution equations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::integrators::regularity::REGULARITY_DET_TOL;
use crate::integrators::scheme::{Scheme, SchemeKind, StepWindow};
use crate::trajectory::TrajectoryRecord;

/// Absolute max-norm tolerance on the stacked step residual.
pub const NEWTON_TOL: f64 = 1e-12;
/// Newton iteration cap.
pub const MAX_NEWTON_ITER: usize = 50;

/// Result of a converged Newton solve.
#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub x: DVector<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Damped Newton iteration on `residual(x) = 0` with an analytic Jacobian.
///
/// Takes full steps while they reduce the residual max-norm, backtracking by
/// halves otherwise. Converges when the max-norm drops to `tol`.
pub fn damped_newton(
    mut residual: impl FnMut(&DVector<f64>) -> DVector<f64>,
    mut jacobian: impl FnMut(&DVector<f64>) -> DMatrix<f64>,
    x0: DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<NewtonOutcome> {
    let mut x = x0;
    let mut r = residual(&x);
    let mut r_norm = r.amax();
    for iteration in 0..max_iter {
        if r_norm <= tol {
            return Ok(NewtonOutcome {
                x,
                residual_norm: r_norm,
                iterations: iteration,
            });
        }
        let jac = jacobian(&x);
        let lu = jac.lu();
        let delta = lu.solve(&(-&r)).ok_or(Error::RegularityFailure {
            determinant: 0.0,
        })?;
        let mut t = 1.0;
        loop {
            let x_new = &x + &delta * t;
            let r_new = residual(&x_new);
            let r_new_norm = r_new.amax();
            if r_new_norm < r_norm || r_new_norm <= tol {
                x = x_new;
                r = r_new;
                r_norm = r_new_norm;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::SolverFailure {
                    residual: r_norm,
                    iterations: iteration,
                });
            }
        }
    }
    if r_norm <= tol {
        return Ok(NewtonOutcome {
            x,
            residual_norm: r_norm,
            iterations: max_iter,
        });
    }
    Err(Error::SolverFailure {
        residual: r_norm,
        iterations: max_iter,
    })
}

impl<'m> Scheme<'m> {
    /// Momentum-equation residual for the unknown window `cur`, given the
    /// constant contribution of the previous window:
    /// `D₁L_d(cur) + F⁻(cur) + [D₂L_d(prev) + F⁺(prev)]`.
    fn momentum_residual(&self, cur: &StepWindow, prev_part: &DVector<f64>) -> DVector<f64> {
        self.d1_lagrangian(cur) + self.force_minus(cur) + prev_part
    }

    /// Jacobian of the stacked residual `(momentum, P_d)` with respect to
    /// `(q₁, S₁)` of the unknown window; this is exactly the regularity
    /// matrix evaluated at that window.
    pub(crate) fn step_jacobian(&self, cur: &StepWindow) -> DMatrix<f64> {
        let n = self.dim();
        let mut jac = DMatrix::zeros(n + 1, n + 1);
        let top_left = self.d2_d1_lagrangian(cur) + self.d2_force_minus(cur);
        let top_right = self.d4_d1_lagrangian(cur) + self.d4_force_minus(cur);
        let (_, d2p, _, d4p) = self.constraint_gradient(cur);
        jac.view_mut((0, 0), (n, n)).copy_from(&top_left);
        jac.view_mut((0, n), (n, 1)).copy_from(&top_right);
        jac.view_mut((n, 0), (1, n)).copy_from(&d2p.transpose());
        jac[(n, n)] = d4p;
        jac
    }

    fn unpack(&self, x: &DVector<f64>, prev: &StepWindow) -> StepWindow {
        let n = self.dim();
        StepWindow {
            q0: prev.q1.clone(),
            q1: x.rows(0, n).into_owned(),
            s0: prev.s1,
            s1: x[n],
        }
    }

    /// Advances the discrete flow by one step: given
    /// `(q_{k−1}, q_k, S_{k−1}, S_k)` on the discrete constraint, solves the
    /// coupled discrete evolution equations for `(q_k, q_{k+1}, S_k, S_{k+1})`.
    pub fn step(&self, prev: &StepWindow) -> Result<StepWindow> {
        let n = self.dim();
        if prev.dim() != n {
            return Err(Error::InvalidInput(format!(
                "window dimension {} != model dimension {n}",
                prev.dim()
            )));
        }
        let prev_part = self.d2_lagrangian(prev) + self.force_plus(prev);

        // Initial guess: linear extrapolation of both q and S.
        let mut guess = DVector::zeros(n + 1);
        for i in 0..n {
            guess[i] = 2.0 * prev.q1[i] - prev.q0[i];
        }
        guess[n] = prev.s1 + (prev.s1 - prev.s0);

        let outcome = damped_newton(
            |x| {
                let cur = self.unpack(x, prev);
                let mut r = DVector::zeros(n + 1);
                r.rows_mut(0, n)
                    .copy_from(&self.momentum_residual(&cur, &prev_part));
                r[n] = self.constraint_residual(&cur);
                r
            },
            |x| self.step_jacobian(&self.unpack(x, prev)),
            guess,
            NEWTON_TOL,
            MAX_NEWTON_ITER,
        )?;

        let next = self.unpack(&outcome.x, prev);

        // Regularity is checked post hoc at the accepted solution: the
        // discrete flow is well-defined only where this matrix is invertible.
        let jac = self.step_jacobian(&next);
        let det = jac.clone().lu().determinant();
        let scale: f64 = jac
            .row_iter()
            .map(|row| row.amax())
            .product();
        if det.abs() <= REGULARITY_DET_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::RegularityFailure { determinant: det });
        }
        Ok(next)
    }

    /// Staggered fast path for the extended Verlet scheme: the momentum
    /// equation does not involve `S_{k+1}`, so `q_{k+1}` is solved first and
    /// the entropy update follows in closed form from `P_d = 0`.
    pub fn step_verlet_staggered(&self, prev: &StepWindow) -> Result<StepWindow> {
        if self.kind() != Some(SchemeKind::Verlet1) {
            return Err(Error::InvalidInput(
                "staggered stepping applies to the extended Verlet scheme only".into(),
            ));
        }
        let n = self.dim();
        let prev_part = self.d2_lagrangian(prev) + self.force_plus(prev);
        let mut guess = DVector::zeros(n);
        for i in 0..n {
            guess[i] = 2.0 * prev.q1[i] - prev.q0[i];
        }
        let s0 = prev.s1;
        let with_q = |x: &DVector<f64>| StepWindow {
            q0: prev.q1.clone(),
            q1: x.clone(),
            s0,
            s1: s0,
        };
        let outcome = damped_newton(
            |x| self.momentum_residual(&with_q(x), &prev_part),
            |x| {
                let cur = with_q(x);
                self.d2_d1_lagrangian(&cur) + self.d2_force_minus(&cur)
            },
            guess,
            NEWTON_TOL,
            MAX_NEWTON_ITER,
        )?;
        let mut cur = with_q(&outcome.x);
        // P_d = U_S(q0, S0) (S1 - S0)/h + <F^fr(q0, v_d, S0), v_d> = 0.
        let v = self.velocity(&cur);
        let us = self.model().potential().d_s(&cur.q0, s0);
        let power = self.model().friction_force(&cur.q0, &v, s0).dot(&v);
        cur.s1 = s0 - self.h() * power / us;
        Ok(cur)
    }

    /// Builds the initial window from `(q₀, q₁, S₀)` by solving the discrete
    /// constraint `P_d(q₀, q₁, S₀, S₁) = 0` for `S₁`.
    pub fn initialize(&self, q0: DVector<f64>, q1: DVector<f64>, s0: f64) -> Result<StepWindow> {
        let template = StepWindow::new(q0, q1, s0, s0)?;
        let outcome = damped_newton(
            |x| {
                let w = StepWindow {
                    s1: x[0],
                    ..template.clone()
                };
                DVector::from_element(1, self.constraint_residual(&w))
            },
            |x| {
                let w = StepWindow {
                    s1: x[0],
                    ..template.clone()
                };
                let (_, _, _, d4) = self.constraint_gradient(&w);
                DMatrix::from_element(1, 1, d4)
            },
            DVector::from_element(1, s0),
            NEWTON_TOL,
            MAX_NEWTON_ITER,
        )?;
        Ok(StepWindow {
            s1: outcome.x[0],
            ..template
        })
    }

    /// Runs the discrete flow for `steps` rows of diagnostics.
    ///
    /// Row `k` (for `k = 0..steps−1`) reports the window
    /// `(q_k, q_{k+1}, S_k, S_{k+1})`: time `t_k = kh`, position `q_k`,
    /// discrete velocity, entropy `S_k`, temperature, internal energy, the
    /// scheme-consistent energy sample `E_k`, and `|E_k − E_0|/|E_0|`.
    pub fn run(&self, init: &StepWindow, steps: usize) -> Result<Vec<TrajectoryRecord>> {
        Ok(self.run_with_final(init, steps)?.0)
    }

    /// Like [`Scheme::run`], also returning the last window reached, whose
    /// `(q₁, S₁)` is the final state `(q_N, S_N)` of the trajectory.
    pub fn run_with_final(
        &self,
        init: &StepWindow,
        steps: usize,
    ) -> Result<(Vec<TrajectoryRecord>, StepWindow)> {
        if steps < 1 {
            return Err(Error::InvalidInput("steps must be >= 1".into()));
        }
        let mut records = Vec::with_capacity(steps);
        let mut window = init.clone();
        let mut e0 = 0.0;
        for k in 0..steps {
            let energy = self.energy(&window);
            if k == 0 {
                e0 = energy;
            }
            records.push(TrajectoryRecord {
                step: k,
                t: k as f64 * self.h(),
                q: window.q0.clone(),
                v: self.velocity(&window),
                s: window.s0,
                temperature: self
                    .model()
                    .temperature(&window.q0, window.s0)
                    .map_err(|e| e.at_step(k))?,
                internal_energy: self.model().potential().internal_energy(&window.q0, window.s0),
                energy,
                rel_energy_err: (energy - e0).abs() / e0.abs(),
            });
            if k + 1 < steps {
                window = self.step(&window).map_err(|e| e.at_step(k + 1))?;
            }
        }
        Ok((records, window))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{
        mass_spring_gas_model, IdealGasParams, MassSpringParams, SystemModel,
    };

    const R_GAS: f64 = 8.314462618;
    const ALL_KINDS: [SchemeKind; 3] = [
        SchemeKind::Verlet1,
        SchemeKind::Midpoint2,
        SchemeKind::Symmetrized3,
    ];

    fn case1_model(lambda: f64) -> SystemModel {
        let mp = MassSpringParams::new(5.0, 5.0, lambda).unwrap();
        let gp = IdealGasParams::new(1.5, 1.0, R_GAS, 300.0, 0.0, 2.494e-2).unwrap();
        mass_spring_gas_model(&mp, &gp, None).unwrap()
    }

    #[test]
    fn frictionless_step_keeps_entropy_exactly() {
        let model = case1_model(0.0);
        for kind in ALL_KINDS {
            let scheme = Scheme::new(kind, &model, 1e-3).unwrap();
            let init = scheme
                .initialize(
                    DVector::from_element(1, 0.3),
                    DVector::from_element(1, 0.3),
                    0.0,
                )
                .unwrap();
            assert_eq!(init.s1, 0.0);
            let mut w = init;
            for _ in 0..50 {
                w = scheme.step(&w).unwrap();
                assert_eq!(w.s1, 0.0, "{kind:?} produced entropy without friction");
            }
        }
    }

    #[test]
    fn verlet_step_matches_linear_solve_oracle() {
        // Window (0.3, 0.3, 0, 0), Case 1, lambda = 0.2, h = 1e-3:
        // q2 solves 5 (q2 - 0.6 + 0.3)/1e-6 + 5*0.3 = -0.2 (q2 - 0.3)/1e-3,
        // i.e. q2 = 0.3 - 1.5/(5e6 + 200).
        let model = case1_model(0.2);
        let scheme = Scheme::new(SchemeKind::Verlet1, &model, 1e-3).unwrap();
        let w = StepWindow::scalar(0.3, 0.3, 0.0, 0.0).unwrap();
        let next = scheme.step(&w).unwrap();
        let expected = 0.3 - 1.5 / (5e6 + 200.0);
        assert!(
            (next.q1[0] - expected).abs() <= 1e-12,
            "q2 = {}, expected {expected}",
            next.q1[0]
        );

        // Entropy update: S2 = S1 + h lambda v_d^2 / T(S1). The solver
        // leaves |P_d| <= 1e-12, i.e. |S2 - expected| <= 1e-12 h / T.
        let v = (next.q1[0] - 0.3) / 1e-3;
        let s_expected = 1e-3 * 0.2 * v * v / 300.0;
        assert!((next.s1 - s_expected).abs() <= 1e-15);
    }

    #[test]
    fn staggered_fast_path_agrees_with_coupled_solve() {
        let model = case1_model(0.2);
        let scheme = Scheme::new(SchemeKind::Verlet1, &model, 1e-3).unwrap();
        let mut coupled = StepWindow::scalar(0.3, 0.3, 0.0, 0.0).unwrap();
        let mut staggered = coupled.clone();
        for _ in 0..200 {
            coupled = scheme.step(&coupled).unwrap();
            staggered = scheme.step_verlet_staggered(&staggered).unwrap();
            assert!((coupled.q1[0] - staggered.q1[0]).abs() <= 1e-12);
            assert!((coupled.s1 - staggered.s1).abs() <= 1e-12);
        }
    }

    #[test]
    fn staggered_path_rejected_for_other_schemes() {
        let model = case1_model(0.2);
        let scheme = Scheme::new(SchemeKind::Midpoint2, &model, 1e-3).unwrap();
        let w = StepWindow::scalar(0.3, 0.3, 0.0, 0.0).unwrap();
        assert!(scheme.step_verlet_staggered(&w).is_err());
    }

    #[test]
    fn initialize_with_equal_positions_keeps_entropy() {
        let model = case1_model(5.0);
        for kind in ALL_KINDS {
            let scheme = Scheme::new(kind, &model, 1e-3).unwrap();
            let w = scheme
                .initialize(
                    DVector::from_element(1, 0.1),
                    DVector::from_element(1, 0.1),
                    0.02,
                )
                .unwrap();
            assert_eq!(w.s1, 0.02);
        }
    }

    #[test]
    fn initialize_verlet_closed_form() {
        let model = case1_model(0.2);
        let h = 1e-3;
        let scheme = Scheme::new(SchemeKind::Verlet1, &model, h).unwrap();
        let (x0, x1, s0) = (0.3, 0.3004, 0.0);
        let w = scheme
            .initialize(
                DVector::from_element(1, x0),
                DVector::from_element(1, x1),
                s0,
            )
            .unwrap();
        let v = (x1 - x0) / h;
        let expected = s0 + h * 0.2 * v * v / 300.0;
        assert!((w.s1 - expected).abs() <= 1e-12 * expected.abs());
        assert!(scheme.constraint_residual(&w).abs() <= 10.0 * NEWTON_TOL);
    }

    #[test]
    fn initialize_symmetrized_matches_bisection_oracle() {
        let model = case1_model(5.0);
        let h = 1e-3;
        let scheme = Scheme::new(SchemeKind::Symmetrized3, &model, h).unwrap();
        let (x0, x1, s0) = (0.3, 0.302, 0.01);
        let w = scheme
            .initialize(
                DVector::from_element(1, x0),
                DVector::from_element(1, x1),
                s0,
            )
            .unwrap();

        // Independent bisection on the averaged-temperature constraint.
        let residual = |s1: f64| {
            scheme.constraint_residual(&StepWindow::scalar(x0, x1, s0, s1).unwrap())
        };
        let v = (x1 - x0) / h;
        let (mut lo, mut hi) = (s0, s0 + 2.0 * h * 5.0 * v * v / 300.0);
        assert!(residual(lo) <= 0.0 && residual(hi) >= 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if residual(mid) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((w.s1 - 0.5 * (lo + hi)).abs() <= 1e-10 * w.s1.abs().max(1e-12));
    }

    #[test]
    fn run_reports_rows_and_satisfies_constraint() {
        let model = case1_model(0.2);
        for kind in ALL_KINDS {
            let scheme = Scheme::new(kind, &model, 1e-3).unwrap();
            let init = scheme
                .initialize(
                    DVector::from_element(1, 0.3),
                    DVector::from_element(1, 0.3),
                    0.0,
                )
                .unwrap();
            let records = scheme.run(&init, 500).unwrap();
            assert_eq!(records.len(), 500);
            assert_eq!(records[0].rel_energy_err, 0.0);
            assert_eq!(records[17].step, 17);
            assert!((records[17].t - 17.0e-3).abs() <= 1e-15);

            // Re-derive windows and check |P_d| <= 10 * newton_tol.
            let mut w = init;
            for _ in 0..499 {
                w = scheme.step(&w).unwrap();
                assert!(scheme.constraint_residual(&w).abs() <= 10.0 * NEWTON_TOL);
            }
        }
    }

    #[test]
    fn entropy_is_monotone_for_all_friction_levels() {
        for lambda in [0.0, 0.2, 5.0, 10.0] {
            let model = case1_model(lambda);
            for kind in ALL_KINDS {
                let scheme = Scheme::new(kind, &model, 1e-3).unwrap();
                let init = scheme
                    .initialize(
                        DVector::from_element(1, 0.3),
                        DVector::from_element(1, 0.3),
                        0.0,
                    )
                    .unwrap();
                let records = scheme.run(&init, 2000).unwrap();
                for pair in records.windows(2) {
                    assert!(
                        pair[1].s >= pair[0].s - 1e-12,
                        "{kind:?} lambda {lambda}: entropy decreased"
                    );
                }
            }
        }
    }

    #[test]
    fn frictionless_run_has_bounded_energy_error() {
        let model = case1_model(0.0);
        for kind in ALL_KINDS {
            let scheme = Scheme::new(kind, &model, 1e-3).unwrap();
            let init = scheme
                .initialize(
                    DVector::from_element(1, 0.3),
                    DVector::from_element(1, 0.3),
                    0.0,
                )
                .unwrap();
            let records = scheme.run(&init, 20_000).unwrap();
            assert!(records.iter().all(|r| r.s == 0.0));
            let max_err = records
                .iter()
                .map(|r| r.rel_energy_err)
                .fold(0.0, f64::max);
            assert!(max_err <= 1e-7, "{kind:?}: max rel energy err {max_err:e}");
        }
    }

    /// With no friction the entropy decouples and the coupled solve must
    /// reproduce, bit for bit, a purely mechanical variational integrator
    /// built from the same discrete Lagrangian (same Newton driver on the
    /// q-block only).
    #[test]
    fn reversible_limit_reduces_to_mechanical_integrator() {
        let model = case1_model(0.0);
        for kind in ALL_KINDS {
            let scheme = Scheme::new(kind, &model, 1e-3).unwrap();
            let s_frozen = 0.0;
            let init = scheme
                .initialize(
                    DVector::from_element(1, 0.3),
                    DVector::from_element(1, 0.2999),
                    s_frozen,
                )
                .unwrap();
            assert_eq!(init.s1, s_frozen);

            let mut coupled = init.clone();
            let mut mech = (init.q0.clone(), init.q1.clone());
            for _ in 0..1000 {
                coupled = scheme.step(&coupled).unwrap();

                // Mechanical discrete Euler-Lagrange solve with S frozen.
                let prev = StepWindow {
                    q0: mech.0.clone(),
                    q1: mech.1.clone(),
                    s0: s_frozen,
                    s1: s_frozen,
                };
                let prev_part = scheme.d2_lagrangian(&prev) + scheme.force_plus(&prev);
                let cur_of = |x: &DVector<f64>| StepWindow {
                    q0: prev.q1.clone(),
                    q1: x.clone(),
                    s0: s_frozen,
                    s1: s_frozen,
                };
                let guess = DVector::from_element(1, 2.0 * prev.q1[0] - prev.q0[0]);
                let outcome = damped_newton(
                    |x| {
                        let cur = cur_of(x);
                        scheme.d1_lagrangian(&cur) + scheme.force_minus(&cur) + &prev_part
                    },
                    |x| {
                        let cur = cur_of(x);
                        scheme.d2_d1_lagrangian(&cur) + scheme.d2_force_minus(&cur)
                    },
                    guess,
                    NEWTON_TOL,
                    MAX_NEWTON_ITER,
                )
                .unwrap();
                mech = (prev.q1.clone(), outcome.x);

                assert_eq!(
                    coupled.q1[0], mech.1[0],
                    "{kind:?}: coupled and mechanical trajectories diverged"
                );
                assert_eq!(coupled.s1, s_frozen);
            }
        }
    }

    #[test]
    fn second_order_schemes_converge_quadratically() {
        // Max position error vs the closed form over a 10 s horizon, h vs h/2.
        use crate::continuous::ExactSolutionParams;
        let mp = MassSpringParams::new(5.0, 5.0, 0.2).unwrap();
        let gp = IdealGasParams::new(1.5, 1.0, R_GAS, 300.0, 0.0, 2.494e-2).unwrap();
        let model = mass_spring_gas_model(&mp, &gp, None).unwrap();

        let max_err = |kind: SchemeKind, h: f64| -> f64 {
            let scheme = Scheme::new(kind, &model, h).unwrap();
            let init = scheme
                .initialize(
                    DVector::from_element(1, 0.3),
                    DVector::from_element(1, 0.3),
                    0.0,
                )
                .unwrap();
            // Legendre-consistent initial velocity for the exact orbit.
            let p0 = -(scheme.d1_lagrangian(&init) + scheme.force_minus(&init));
            let v0 = model.mass_solve(&p0)[0];
            let exact = ExactSolutionParams::new(&mp, &gp, init.q0[0], v0, 0.0).unwrap();
            let steps = (10.0 / h).round() as usize;
            let records = scheme.run(&init, steps).unwrap();
            records
                .iter()
                .map(|r| (r.q[0] - exact.position(r.t).0).abs())
                .fold(0.0, f64::max)
        };

        for kind in [SchemeKind::Midpoint2, SchemeKind::Symmetrized3] {
            let e1 = max_err(kind, 1e-3);
            let e2 = max_err(kind, 5e-4);
            let ratio = e1 / e2;
            assert!(
                (3.2..=4.8).contains(&ratio),
                "{kind:?}: error ratio {ratio} outside 4 +/- 20% (e1 = {e1:.3e}, e2 = {e2:.3e})"
            );
        }
        let e1 = max_err(SchemeKind::Verlet1, 1e-3);
        let e2 = max_err(SchemeKind::Verlet1, 5e-4);
        assert!(
            e1 / e2 >= 2.0,
            "scheme 1 should converge at least linearly, ratio {}",
            e1 / e2
        );
    }

    #[test]
    fn alpha_family_with_independent_constraint_map_runs() {
        // Lagrangian sampled at the midpoint, constraint through the
        // one-sided map: still a valid discretization (the maps need not
        // coincide), and the second law must hold along its runs.
        let model = case1_model(0.2);
        let scheme = Scheme::from_alpha(&model, 1e-3, 0.5, 0.0).unwrap();
        let init = scheme
            .initialize(
                DVector::from_element(1, 0.3),
                DVector::from_element(1, 0.3),
                0.0,
            )
            .unwrap();
        let records = scheme.run(&init, 2000).unwrap();
        for pair in records.windows(2) {
            assert!(pair[1].s >= pair[0].s - 1e-12);
        }
        let max_err = records.iter().map(|r| r.rel_energy_err).fold(0.0, f64::max);
        assert!(max_err < 1e-6, "mixed-map scheme energy error {max_err:e}");
    }
}
