//! Newton's method for the implicit-Euler nonlinear system, with a pluggable
//! inner linear solver.
//!
//! Each outer iteration solves (I - Δt·∂rhs/∂u)·δ = u^n - u + Δt·rhs(u) and
//! updates u ← u + δ. The inner right-hand side has zero mass whenever the
//! current iterate has the mass of u^n, so conservative inner solvers keep the
//! outer iteration conservative; non-conservative inner solvers (Jacobi,
//! Gauss-Seidel) hand their drift to the outer iterate, which the trace
//! records rather than repairs.

use crate::error::{Error, Result};
use crate::grid::State1;
use crate::linear_solvers::{
    agglomeration_operators, cgc, gauss_seidel, gmres, jacobi, richardson, IterationTrace,
    LinearSystem, TraceEntry,
};
use crate::pseudo::pseudo_solve_linear;
use crate::scalar::Real;
use crate::semidisc::{ImplicitEulerSystem, SemiDiscretization1D};
use crate::tableau::ButcherTableau;

/// Inner linear solver selection for the Newton systems.
#[derive(Clone, Debug)]
pub enum InnerSolver<R> {
    /// Direct LU solve.
    Exact,
    Richardson { theta: R },
    Jacobi,
    GaussSeidel,
    Gmres,
    /// Two-level coarse grid correction; the coarse operator is the same
    /// discretization rebuilt on the agglomerated (2Δx) mesh at the restricted
    /// state, solved exactly.
    CoarseGridCorrection,
    /// Explicit RK pseudo-time iteration on the linear system, one ERK step of
    /// size `step` per inner iteration.
    PseudoErk { tableau: ButcherTableau<R>, step: R },
}

/// Initial guess policy for the inner (increment) systems.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerGuess {
    /// δ₀ = 0; the natural choice, with zero mass.
    Zero,
    /// Warm start from the previous outer iteration's increment.
    PreviousIncrement,
}

#[derive(Clone, Debug)]
pub struct NewtonConfig<R> {
    pub outer_iterations: usize,
    pub inner: InnerSolver<R>,
    pub inner_iterations: usize,
    pub guess: InnerGuess,
}

impl<R: Real> NewtonConfig<R> {
    pub fn exact(outer_iterations: usize) -> Self {
        Self {
            outer_iterations,
            inner: InnerSolver::Exact,
            inner_iterations: 1,
            guess: InnerGuess::Zero,
        }
    }
}

/// Linear system of one Newton iteration at the state `u`:
/// (I - αA)δ = b with A = ∂rhs/∂u, α = Δt and b = u^n - u + Δt·rhs(u).
pub fn newton_linear_system<R: Real>(
    sys: &ImplicitEulerSystem<R>,
    u: &[R],
) -> LinearSystem<R> {
    let a = sys.semi.rhs_jacobian(u);
    let b = sys.newton_rhs(u);
    LinearSystem::with_uniform_volume(a, sys.dt, b, sys.semi.grid.dx())
}

fn solve_inner<R: Real>(
    sys: &ImplicitEulerSystem<R>,
    lin: &LinearSystem<R>,
    u: &[R],
    x0: &[R],
    cfg: &NewtonConfig<R>,
) -> Result<Vec<R>> {
    let iters = cfg.inner_iterations;
    Ok(match &cfg.inner {
        InnerSolver::Exact => lin.solve_direct()?,
        InnerSolver::Richardson { theta } => richardson(lin, *theta, x0, iters).0,
        InnerSolver::Jacobi => jacobi(lin, x0, iters)?.0,
        InnerSolver::GaussSeidel => gauss_seidel(lin, x0, iters)?.0,
        InnerSolver::Gmres => gmres(lin, x0, iters).0,
        InnerSolver::CoarseGridCorrection => {
            let m = lin.m();
            let (restriction, prolongation) = agglomeration_operators::<R>(m)?;
            // rediscretize on the agglomerated mesh at the restricted state
            let coarse_grid = sys.semi.grid.coarsen()?;
            let coarse_semi = SemiDiscretization1D::new(coarse_grid, sys.semi.flux);
            let uc = restriction.mul_vec(u);
            let mut coarse_matrix = coarse_semi.rhs_jacobian(&uc);
            coarse_matrix.scale(-sys.dt);
            for i in 0..coarse_grid.m() {
                coarse_matrix[(i, i)] += R::one();
            }
            cgc(lin, x0, &restriction, &prolongation, &coarse_matrix, iters)?.0
        }
        InnerSolver::PseudoErk { tableau, step } => {
            pseudo_solve_linear(lin, tableau, &vec![*step; iters], x0, false).0
        }
    })
}

/// Newton iteration for one implicit Euler step. Returns the final iterate and
/// a trace holding, per outer iteration, the volume-weighted nonlinear
/// residual ‖g(u)‖ and the mass error against u^n.
pub fn newton_solve<R: Real>(
    sys: &ImplicitEulerSystem<R>,
    u0: &State1<R>,
    cfg: &NewtonConfig<R>,
) -> Result<(State1<R>, IterationTrace<R>)> {
    if cfg.outer_iterations == 0 || cfg.inner_iterations == 0 {
        return Err(Error::InvalidSpec(
            "Newton configuration needs positive iteration counts".into(),
        ));
    }
    let m = sys.m();
    let mut u = u0.clone();
    let mut trace = IterationTrace::new();
    trace.push(TraceEntry {
        iteration: 0,
        residual: sys.residual_norm(u.values()),
        mass_error: u.mass_error(&sys.un, 0)?,
        predicted_mass_error: None,
    });
    let mut warm = vec![R::zero(); m];
    for k in 1..=cfg.outer_iterations {
        let lin = newton_linear_system(sys, u.values());
        let x0 = match cfg.guess {
            InnerGuess::Zero => vec![R::zero(); m],
            InnerGuess::PreviousIncrement => warm.clone(),
        };
        let delta = solve_inner(sys, &lin, u.values(), &x0, cfg)?;
        if delta.iter().any(|d| !d.is_finite()) {
            return Err(Error::SolverFailure(format!(
                "inner solver produced non-finite increment at outer iteration {k}"
            )));
        }
        for (ui, di) in u.values_mut().iter_mut().zip(&delta) {
            *ui += *di;
        }
        warm = delta;
        trace.push(TraceEntry {
            iteration: k,
            residual: sys.residual_norm(u.values()),
            mass_error: u.mass_error(&sys.un, 0)?,
            predicted_mass_error: None,
        });
    }
    Ok((u, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::ScalarFlux;
    use crate::grid::Grid1D;

    fn burgers_system(m: usize, cfl: f64) -> ImplicitEulerSystem<f64> {
        let grid = Grid1D::<f64>::new(-1.5, 1.5, m).unwrap();
        let semi = SemiDiscretization1D::new(grid, ScalarFlux::UpwindBurgers);
        let un = State1::from_profile(grid, |x| (-x * x).exp());
        ImplicitEulerSystem::new(semi, cfl * grid.dx(), un)
    }

    #[test]
    fn one_exact_step_solves_linear_problem() {
        // advection is linear, so a single exact Newton step is the
        // implicit Euler solution
        let grid = Grid1D::<f64>::new(-1.5, 1.5, 6).unwrap();
        let semi = SemiDiscretization1D::new(grid, ScalarFlux::CentralAverage);
        let un = State1::from_profile(grid, |x| (-50.0 * x * x).exp());
        let sys = ImplicitEulerSystem::new(semi, 0.5, un.clone());
        let (u, trace) = newton_solve(&sys, &un, &NewtonConfig::exact(1)).unwrap();
        assert!(sys.residual_norm(u.values()) < 1e-12);
        assert!(trace.last_mass_error().unwrap().abs() < 1e-14);
    }

    #[test]
    fn newton_rhs_has_zero_mass_along_the_iteration() {
        let sys = burgers_system(24, 1.0);
        let mut u = sys.un.clone();
        for _ in 0..3 {
            let lin = newton_linear_system(&sys, u.values());
            let rhs_mass = lin.mass(&lin.b);
            assert!(rhs_mass.abs() < 1e-13, "rhs mass {rhs_mass:e}");
            let delta = lin.solve_direct().unwrap();
            for (ui, di) in u.values_mut().iter_mut().zip(&delta) {
                *ui += *di;
            }
        }
    }

    #[test]
    fn exact_newton_conserves_mass() {
        let sys = burgers_system(32, 1.0);
        let (u, _) = newton_solve(&sys, &sys.un.clone(), &NewtonConfig::exact(4)).unwrap();
        assert!(u.mass_error(&sys.un, 0).unwrap().abs() < 1e-13);
    }

    #[test]
    fn newton_converges_superlinearly_on_smooth_burgers() {
        let sys = burgers_system(64, 1.0);
        let (_, trace) = newton_solve(&sys, &sys.un.clone(), &NewtonConfig::exact(4)).unwrap();
        let r: Vec<f64> = trace.entries.iter().map(|e| e.residual).collect();
        // quadratic-type contraction: r_{k+1}/r_k² stays bounded while the
        // residual is above round-off
        for k in 1..r.len() - 1 {
            if r[k] > 1e-12 {
                let ratio = r[k + 1] / (r[k] * r[k]);
                assert!(ratio < 50.0, "r = {r:?}");
            }
        }
        assert!(r.last().unwrap() < &1e-10);
    }

    #[test]
    fn gmres_inner_matches_exact_on_enough_iterations() {
        let sys = burgers_system(16, 1.0);
        let cfg = NewtonConfig {
            outer_iterations: 2,
            inner: InnerSolver::Gmres,
            inner_iterations: 16,
            guess: InnerGuess::Zero,
        };
        let (u_gmres, _) = newton_solve(&sys, &sys.un.clone(), &cfg).unwrap();
        let (u_exact, _) = newton_solve(&sys, &sys.un.clone(), &NewtonConfig::exact(2)).unwrap();
        assert!(u_gmres.max_abs_diff(&u_exact) < 1e-9);
    }

    #[test]
    fn zero_iteration_config_is_rejected() {
        let sys = burgers_system(8, 1.0);
        let mut cfg = NewtonConfig::<f64>::exact(1);
        cfg.outer_iterations = 0;
        assert!(newton_solve(&sys, &sys.un.clone(), &cfg).is_err());
    }
}
