//! 1D semidiscrete operator, the implicit-Euler residual function and its
//! Jacobians.
//!
//! The semidiscretization is the true right-hand side of u_t = rhs(u) with
//! rhs_i = -(f̂_{i+1/2} - f̂_{i-1/2})/Δx. An implicit Euler step solves
//! g(u) = 0 with g_i = (u_i - u_i^n)/Δt + (f̂_{i+1/2} - f̂_{i-1/2})/Δx.

use crate::error::Result;
use crate::flux::ScalarFlux;
use crate::grid::{Grid1D, State1};
use crate::linalg::DMat;
use crate::scalar::{weighted_norm2, Real};

/// Finite-volume semidiscretization of a scalar conservation law.
#[derive(Clone, Copy, Debug)]
pub struct SemiDiscretization1D<R> {
    pub grid: Grid1D<R>,
    pub flux: ScalarFlux,
}

impl<R: Real> SemiDiscretization1D<R> {
    pub fn new(grid: Grid1D<R>, flux: ScalarFlux) -> Self {
        Self { grid, flux }
    }

    /// Interface fluxes: `out[i] = f̂_{i+1/2}(u)`, periodic indexing.
    pub fn interface_fluxes(&self, u: &[R], out: &mut [R]) {
        let m = self.grid.m();
        debug_assert_eq!(u.len(), m);
        debug_assert_eq!(out.len(), m);
        let (p, q) = self.flux.stencil();
        let width = p + q + 1;
        let mut stencil = vec![R::zero(); width];
        for i in 0..m {
            for (k, slot) in stencil.iter_mut().enumerate() {
                let idx = self.grid.wrap(i as isize - p as isize + k as isize);
                *slot = u[idx];
            }
            out[i] = self.flux.interface(&stencil);
        }
    }

    /// rhs_i = -(f̂_{i+1/2} - f̂_{i-1/2})/Δx written into `out`,
    /// given precomputed interface fluxes.
    pub fn rhs_from_fluxes(&self, fluxes: &[R], out: &mut [R]) {
        let m = self.grid.m();
        let inv_dx = R::one() / self.grid.dx();
        for i in 0..m {
            let left = fluxes[self.grid.wrap(i as isize - 1)];
            out[i] = -(fluxes[i] - left) * inv_dx;
        }
    }

    pub fn rhs_values(&self, u: &[R], out: &mut [R]) {
        let mut fluxes = vec![R::zero(); self.grid.m()];
        self.interface_fluxes(u, &mut fluxes);
        self.rhs_from_fluxes(&fluxes, out);
    }

    /// Semidiscrete right-hand side as a field.
    pub fn rhs(&self, u: &State1<R>) -> State1<R> {
        let mut out = State1::zeros(self.grid, 1);
        self.rhs_values(u.values(), out.values_mut());
        out
    }

    /// Dense Jacobian ∂rhs/∂u. Volume-weighted column sums vanish because the
    /// differentiated stencil still telescopes.
    pub fn rhs_jacobian(&self, u: &[R]) -> DMat<R> {
        let m = self.grid.m();
        let (p, q) = self.flux.stencil();
        let width = p + q + 1;
        let inv_dx = R::one() / self.grid.dx();
        let mut jac = DMat::zeros(m, m);
        let mut stencil = vec![R::zero(); width];
        for i in 0..m {
            // interface i+1/2 contributes -∂f̂/∂w / Δx to row i and +/Δx to row i+1
            for (k, slot) in stencil.iter_mut().enumerate() {
                let idx = self.grid.wrap(i as isize - p as isize + k as isize);
                *slot = u[idx];
            }
            for k in 0..width {
                let col = self.grid.wrap(i as isize - p as isize + k as isize);
                let d = self.flux.derivative(&stencil, k) * inv_dx;
                jac[(i, col)] -= d;
                let below = self.grid.wrap(i as isize + 1);
                jac[(below, col)] += d;
            }
        }
        jac
    }
}

/// Nonlinear system of one implicit Euler step: g(u) = 0.
#[derive(Clone, Debug)]
pub struct ImplicitEulerSystem<R> {
    pub semi: SemiDiscretization1D<R>,
    pub dt: R,
    pub un: State1<R>,
}

impl<R: Real> ImplicitEulerSystem<R> {
    pub fn new(semi: SemiDiscretization1D<R>, dt: R, un: State1<R>) -> Self {
        Self { semi, dt, un }
    }

    pub fn m(&self) -> usize {
        self.semi.grid.m()
    }

    /// g values; optionally records the interface fluxes of this evaluation.
    pub fn g_values(&self, u: &[R], out: &mut [R], record_fluxes: Option<&mut [R]>) {
        let m = self.m();
        let mut local = vec![R::zero(); m];
        let fluxes: &mut [R] = match record_fluxes {
            Some(buf) => buf,
            None => &mut local,
        };
        self.semi.interface_fluxes(u, fluxes);
        let inv_dx = R::one() / self.semi.grid.dx();
        let inv_dt = R::one() / self.dt;
        let un = self.un.values();
        for i in 0..m {
            let left = fluxes[self.semi.grid.wrap(i as isize - 1)];
            out[i] = (u[i] - un[i]) * inv_dt + (fluxes[i] - left) * inv_dx;
        }
    }

    pub fn g_eval(&self, u: &State1<R>) -> State1<R> {
        let mut out = State1::zeros(self.semi.grid, 1);
        self.g_values(u.values(), out.values_mut(), None);
        out
    }

    /// Volume-weighted norm of g(u).
    pub fn residual_norm(&self, u: &[R]) -> R {
        let mut g = vec![R::zero(); self.m()];
        self.g_values(u, &mut g, None);
        weighted_norm2(self.semi.grid.dx(), &g)
    }

    /// Newton system matrix I - Δt·∂rhs/∂u = Δt·∂g/∂u.
    pub fn newton_matrix(&self, u: &[R]) -> DMat<R> {
        let mut m = self.semi.rhs_jacobian(u);
        m.scale(-self.dt);
        for i in 0..self.m() {
            m[(i, i)] += R::one();
        }
        m
    }

    /// Newton right-hand side u^n - u + Δt·rhs(u); zero mass whenever u has
    /// the mass of u^n.
    pub fn newton_rhs(&self, u: &[R]) -> Vec<R> {
        let m = self.m();
        let mut rhs = vec![R::zero(); m];
        self.semi.rhs_values(u, &mut rhs);
        let un = self.un.values();
        for i in 0..m {
            rhs[i] = un[i] - u[i] + self.dt * rhs[i];
        }
        rhs
    }

    /// Fully converged implicit Euler step via exact Newton iterations.
    pub fn solve_direct(&self, tol: R, max_iters: usize) -> Result<State1<R>> {
        let mut u = self.un.clone();
        for _ in 0..max_iters {
            let mat = self.newton_matrix(u.values());
            let rhs = self.newton_rhs(u.values());
            let delta = mat.lu()?.solve(&rhs);
            for (ui, di) in u.values_mut().iter_mut().zip(&delta) {
                *ui += *di;
            }
            if self.residual_norm(u.values()) <= tol {
                return Ok(u);
            }
        }
        Ok(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;
    use crate::linalg::solve_dense;

    fn advection_upwind(m: usize) -> SemiDiscretization1D<f64> {
        let grid = Grid1D::<f64>::new(-1.0, 1.0, m).unwrap();
        SemiDiscretization1D::new(grid, ScalarFlux::UpwindAdvection)
    }

    #[test]
    fn constant_state_has_zero_rhs() {
        let semi = advection_upwind(16);
        let u = State1::from_profile(semi.grid, |_| 0.7);
        let rhs = semi.rhs(&u);
        for &v in rhs.values() {
            assert!(v.abs() < 1e-15);
        }
    }

    #[test]
    fn rhs_always_has_zero_mass() {
        for flux in [
            ScalarFlux::CentralAverage,
            ScalarFlux::CentralDifference,
            ScalarFlux::UpwindAdvection,
            ScalarFlux::UpwindBurgers,
        ] {
            let grid = Grid1D::<f64>::new(-1.0, 1.0, 24).unwrap();
            let semi = SemiDiscretization1D::new(grid, flux);
            let u = State1::from_profile(grid, |x| 0.5 + 0.4 * (3.0 * x).sin());
            let rhs = semi.rhs(&u);
            assert!(
                rhs.total_mass(0).unwrap().abs() < 1e-14,
                "flux {flux:?} violates telescoping"
            );
        }
    }

    #[test]
    fn unit_impulse_rhs_stencil() {
        // upwind advection: rhs = -(u_i - u_{i-1})/Δx, so an impulse at j
        // produces -1/Δx at j and +1/Δx at j+1 (hand stencil application).
        let semi = advection_upwind(8);
        let dx = semi.grid.dx();
        let j = 3;
        let mut u = State1::zeros(semi.grid, 1);
        u.set_value(j, 0, 1.0);
        let rhs = semi.rhs(&u);
        for i in 0..8 {
            let expected = if i == j {
                -1.0 / dx
            } else if i == j + 1 {
                1.0 / dx
            } else {
                0.0
            };
            assert!((rhs.value(i, 0) - expected).abs() < 1e-14, "cell {i}");
        }
    }

    #[test]
    fn g_vanishes_on_constant_consistent_state() {
        let semi = advection_upwind(12);
        let un = State1::from_profile(semi.grid, |_| 1.3);
        let sys = ImplicitEulerSystem::new(semi, 0.1, un.clone());
        let g = sys.g_eval(&un);
        for &v in g.values() {
            assert!(v.abs() < 1e-14);
        }
    }

    #[test]
    fn g_mass_identity() {
        // Σ|Ω|g(u) = (mass(u) - mass(u^n))/Δt on periodic grids
        let semi = advection_upwind(20);
        let un = State1::from_profile(semi.grid, |x| (-3.0 * x * x).exp());
        let dt = 0.05;
        let sys = ImplicitEulerSystem::new(semi, dt, un.clone());
        let u = State1::from_profile(semi.grid, |x| 0.2 + (-x * x).exp());
        let g = sys.g_eval(&u);
        let lhs = g.total_mass(0).unwrap();
        let rhs = (u.total_mass(0).unwrap() - un.total_mass(0).unwrap()) / dt;
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn exact_linear_solve_zeroes_g() {
        // advection on a coarse grid: direct solve of the Newton system is the
        // implicit Euler solution, so g at the solution is ~0
        let grid = Grid1D::<f64>::new(-1.5, 1.5, 6).unwrap();
        let semi = SemiDiscretization1D::new(grid, ScalarFlux::CentralAverage);
        let un = State1::from_profile(grid, |x| (-50.0 * x * x).exp());
        let sys = ImplicitEulerSystem::new(semi, 0.5, un.clone());
        let mat = sys.newton_matrix(un.values());
        let rhs = sys.newton_rhs(un.values());
        let delta = solve_dense(&mat, &rhs).unwrap();
        let mut u = un.clone();
        for (ui, di) in u.values_mut().iter_mut().zip(&delta) {
            *ui += *di;
        }
        assert!(sys.residual_norm(u.values()) < 1e-12);
    }

    #[test]
    fn advection_central_average_assembles_skew_operator() {
        // Newton matrix for the central-average flux at Δt = Δx is
        // I - αA with α = -Δt/Δx and A = Tridiag(-1/2, 0, 1/2) periodic.
        let grid = Grid1D::<f64>::new(-1.5, 1.5, 6).unwrap();
        let semi = SemiDiscretization1D::new(grid, ScalarFlux::CentralAverage);
        let un = State1::from_profile(grid, |x| (-50.0 * x * x).exp());
        let sys = ImplicitEulerSystem::new(semi, grid.dx(), un);
        let mat = sys.newton_matrix(&[0.0; 6]);
        for i in 0..6usize {
            for j in 0..6usize {
                let im = (i + 5) % 6;
                let ip = (i + 1) % 6;
                let expected = if j == i {
                    1.0
                } else if j == im {
                    -0.5
                } else if j == ip {
                    0.5
                } else {
                    0.0
                };
                assert!((mat[(i, j)] - expected).abs() < 1e-14, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn burgers_jacobian_structure_and_fd_oracle() {
        let grid = Grid1D::<f64>::new(-1.5, 1.5, 6).unwrap();
        let semi = SemiDiscretization1D::new(grid, ScalarFlux::UpwindBurgers);
        let un = State1::from_profile(grid, |x| (-x * x).exp());
        let dt = 0.5;
        let sys = ImplicitEulerSystem::new(semi, dt, un.clone());
        let u = un.values().to_vec();
        let mat = sys.newton_matrix(&u);

        // lower bidiagonal plus the single wrap entry in the top-right corner
        for i in 0..6usize {
            for j in 0..6usize {
                let allowed = j == i || j == (i + 5) % 6;
                if !allowed {
                    assert!(mat[(i, j)].abs() < 1e-15, "unexpected entry ({i},{j})");
                }
            }
        }
        assert!(mat[(0, 5)].abs() > 0.05, "periodic corner entry missing");

        // finite-difference oracle on g: ∂(Δt·g)/∂u ≈ newton_matrix
        let h = 1e-7;
        for j in 0..6 {
            let mut up = u.clone();
            let mut dn = u.clone();
            up[j] += h;
            dn[j] -= h;
            let mut gp = vec![0.0; 6];
            let mut gm = vec![0.0; 6];
            sys.g_values(&up, &mut gp, None);
            sys.g_values(&dn, &mut gm, None);
            for i in 0..6 {
                let fd = dt * (gp[i] - gm[i]) / (2.0 * h);
                assert!(
                    (fd - mat[(i, j)]).abs() < 1e-6,
                    "entry ({i},{j}): fd {fd} vs {}",
                    mat[(i, j)]
                );
            }
        }
    }

    #[test]
    fn jacobian_columns_telescope() {
        // Σ_i |Ω_i| (∂rhs/∂u · y)_i = 0 for arbitrary y
        let grid = Grid1D::<f64>::new(-1.5, 1.5, 12).unwrap();
        let semi = SemiDiscretization1D::new(grid, ScalarFlux::UpwindBurgers);
        let u: Vec<f64> = (0..12).map(|i| 0.3 + 0.05 * (i as f64)).collect();
        let jac = semi.rhs_jacobian(&u);
        let mut state = 88172645463325252u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for _ in 0..100 {
            let y: Vec<f64> = (0..12).map(|_| next()).collect();
            let jy = jac.mul_vec(&y);
            let mass: f64 = jy.iter().map(|v| v * grid.dx()).sum();
            assert!(mass.abs() < 1e-12);
        }
    }

    #[test]
    fn direct_solve_conserves_mass() {
        // the solution of (I - Δt·rhs')x = b inherits the mass of b
        let grid = Grid1D::<f64>::new(-1.5, 1.5, 32).unwrap();
        let semi = SemiDiscretization1D::new(grid, ScalarFlux::UpwindBurgers);
        let un = State1::from_profile(grid, |x| (-x * x).exp());
        let sys = ImplicitEulerSystem::new(semi, 0.05, un.clone());
        let u = sys.solve_direct(1e-13, 20).unwrap();
        let drift = u.mass_error(&un, 0).unwrap();
        assert!(drift.abs() < 1e-12, "drift {drift:e}");
    }
}
