//! Physical flux functions and numerical flux stencils.
//!
//! A numerical flux maps the stencil values (w_{i-p}, .., w_{i+q}) at the
//! interface i+1/2 to a flux value. A flux is consistent when
//! f̂(u, .., u) = f(u); `consistency_defect` checks this empirically.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Scalar numerical flux stencils used by the 1D discretizations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalarFlux {
    /// f̂_{i+1/2} = (w_i + w_{i+1})/2 for f(u) = u. Its flux differences
    /// assemble the periodic operator Tridiag(-1/2, 0, 1/2).
    CentralAverage,
    /// f̂_{i+1/2} = (w_{i+1} - w_i)/2, the raw central difference used as a
    /// linear-system building block. Not consistent: f̂(u, u) = 0 ≠ u.
    CentralDifference,
    /// f̂_{i+1/2} = w_i for f(u) = u (advection at unit speed).
    UpwindAdvection,
    /// f̂_{i+1/2} = w_i²/2 for f(u) = u²/2.
    UpwindBurgers,
}

impl ScalarFlux {
    /// Stencil extent (p, q): the interface flux reads w_{i-p} .. w_{i+q}.
    pub fn stencil(&self) -> (usize, usize) {
        match self {
            ScalarFlux::CentralAverage | ScalarFlux::CentralDifference => (0, 1),
            ScalarFlux::UpwindAdvection | ScalarFlux::UpwindBurgers => (0, 0),
        }
    }

    pub fn stencil_width(&self) -> usize {
        let (p, q) = self.stencil();
        p + q + 1
    }

    /// Interface value from the stencil slice `w = [w_{i-p}, .., w_{i+q}]`.
    pub fn interface<R: Real>(&self, w: &[R]) -> R {
        debug_assert_eq!(w.len(), self.stencil_width());
        match self {
            ScalarFlux::CentralAverage => (w[0] + w[1]) * R::half(),
            ScalarFlux::CentralDifference => central_difference(w[0], w[1]),
            ScalarFlux::UpwindAdvection => w[0],
            ScalarFlux::UpwindBurgers => w[0] * w[0] * R::half(),
        }
    }

    /// ∂f̂/∂w_k at the stencil values.
    pub fn derivative<R: Real>(&self, w: &[R], k: usize) -> R {
        debug_assert!(k < self.stencil_width());
        match self {
            ScalarFlux::CentralAverage => R::half(),
            ScalarFlux::CentralDifference => {
                if k == 0 {
                    -R::half()
                } else {
                    R::half()
                }
            }
            ScalarFlux::UpwindAdvection => R::one(),
            ScalarFlux::UpwindBurgers => w[0],
        }
    }

    /// Physical flux the stencil discretizes.
    pub fn physical<R: Real>(&self, u: R) -> R {
        match self {
            ScalarFlux::CentralAverage
            | ScalarFlux::CentralDifference
            | ScalarFlux::UpwindAdvection => u,
            ScalarFlux::UpwindBurgers => u * u * R::half(),
        }
    }

    /// |f̂(u, .., u) - f(u)| at one state.
    pub fn consistency_defect<R: Real>(&self, u: R) -> R {
        let w = vec![u; self.stencil_width()];
        (self.interface(&w) - self.physical(u)).abs()
    }

    /// Largest consistency defect over the sample states.
    pub fn max_consistency_defect<R: Real>(&self, samples: &[R]) -> R {
        samples
            .iter()
            .fold(R::zero(), |m, &u| m.max(self.consistency_defect(u)))
    }

    /// Whether the stencil is consistent with its physical flux.
    pub fn is_consistent(&self) -> bool {
        !matches!(self, ScalarFlux::CentralDifference)
    }
}

/// The raw central difference (w_{i+1} - w_i)/2.
pub fn central_difference<R: Real>(left: R, right: R) -> R {
    (right - left) * R::half()
}

// ---------------------------------------------------------------------------
// Compressible Euler fluxes (2D)
// ---------------------------------------------------------------------------

pub const GAMMA: f64 = 1.4;

/// Conserved state (ρ, ρu, ρv, ρE).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EulerState<R> {
    pub rho: R,
    pub mom_x: R,
    pub mom_y: R,
    pub energy: R,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl<R: Real> EulerState<R> {
    pub fn from_slice(v: &[R]) -> Self {
        Self {
            rho: v[0],
            mom_x: v[1],
            mom_y: v[2],
            energy: v[3],
        }
    }

    pub fn from_primitive(rho: R, u: R, v: R, p: R, gamma: R) -> Self {
        let kinetic = (u * u + v * v) * R::half();
        let internal = p / ((gamma - R::one()) * rho);
        Self {
            rho,
            mom_x: rho * u,
            mom_y: rho * v,
            energy: rho * (internal + kinetic),
        }
    }

    pub fn velocity(&self) -> (R, R) {
        (self.mom_x / self.rho, self.mom_y / self.rho)
    }

    /// p = (γ-1)·ρe with e = E - (u²+v²)/2; errors on vacuum states.
    pub fn pressure(&self, gamma: R) -> Result<R> {
        if !(self.rho > R::zero()) {
            return Err(Error::VacuumState {
                rho: self.rho.to_f64().unwrap_or(f64::NAN),
                p: f64::NAN,
            });
        }
        let (u, v) = self.velocity();
        let internal = self.energy / self.rho - (u * u + v * v) * R::half();
        let p = (gamma - R::one()) * self.rho * internal;
        if !(p > R::zero()) {
            return Err(Error::VacuumState {
                rho: self.rho.to_f64().unwrap_or(f64::NAN),
                p: p.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(p)
    }
}

/// Physical Euler flux along one axis.
pub fn euler_physical_flux<R: Real>(s: &EulerState<R>, axis: Axis, gamma: R) -> Result<[R; 4]> {
    let p = s.pressure(gamma)?;
    let (u, v) = s.velocity();
    Ok(match axis {
        Axis::X => [
            s.mom_x,
            s.mom_x * u + p,
            s.mom_y * u,
            (s.energy + p) * u,
        ],
        Axis::Y => [
            s.mom_y,
            s.mom_x * v,
            s.mom_y * v + p,
            (s.energy + p) * v,
        ],
    })
}

/// Fourth-order centered interface flux from four already evaluated physical
/// fluxes f_{i-1}, f_i, f_{i+1}, f_{i+2}: (-f_{i-1} + 7f_i + 7f_{i+1} - f_{i+2})/12.
pub fn centered4_combine<R: Real>(f: &[[R; 4]; 4]) -> [R; 4] {
    let w1 = R::of(1.0 / 12.0);
    let w7 = R::of(7.0 / 12.0);
    let mut out = [R::zero(); 4];
    for c in 0..4 {
        out[c] = -w1 * f[0][c] + w7 * f[1][c] + w7 * f[2][c] - w1 * f[3][c];
    }
    out
}

/// Fourth-order centered flux straight from the four stencil states.
pub fn centered4_euler<R: Real>(
    states: &[EulerState<R>; 4],
    axis: Axis,
    gamma: R,
) -> Result<[R; 4]> {
    let f = [
        euler_physical_flux(&states[0], axis, gamma)?,
        euler_physical_flux(&states[1], axis, gamma)?,
        euler_physical_flux(&states[2], axis, gamma)?,
        euler_physical_flux(&states[3], axis, gamma)?,
    ];
    Ok(centered4_combine(&f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_difference_matches_printed_rule() {
        assert_eq!(central_difference(1.0, 1.0), 0.0);
        assert_eq!(central_difference(0.0, 1.0), 0.5);
        assert_eq!(
            ScalarFlux::CentralDifference.interface(&[0.0, 1.0]),
            0.5f64
        );
    }

    #[test]
    fn central_difference_is_flagged_inconsistent() {
        assert!(!ScalarFlux::CentralDifference.is_consistent());
        // f̂(u, u) = 0 while f(u) = u
        assert!(ScalarFlux::CentralDifference.consistency_defect(2.0f64) > 1.9);
    }

    #[test]
    fn upwind_advection_is_identity_and_consistent() {
        assert_eq!(ScalarFlux::UpwindAdvection.interface(&[1.0f64]), 1.0);
        assert_eq!(ScalarFlux::UpwindAdvection.interface(&[0.0f64]), 0.0);
        let samples: Vec<f64> = (0..100).map(|k| -2.0 + 4.0 * k as f64 / 99.0).collect();
        assert_eq!(
            ScalarFlux::UpwindAdvection.max_consistency_defect(&samples),
            0.0
        );
    }

    #[test]
    fn upwind_burgers_values() {
        assert_eq!(ScalarFlux::UpwindBurgers.interface(&[2.0f64]), 2.0);
        assert_eq!(ScalarFlux::UpwindBurgers.interface(&[0.0f64]), 0.0);
        assert!(ScalarFlux::UpwindBurgers.is_consistent());
    }

    #[test]
    fn consistent_fluxes_have_machine_zero_defect() {
        let samples: Vec<f64> = (0..1000).map(|k| -2.0 + 4.0 * k as f64 / 999.0).collect();
        for flux in [
            ScalarFlux::CentralAverage,
            ScalarFlux::UpwindAdvection,
            ScalarFlux::UpwindBurgers,
        ] {
            assert_eq!(flux.max_consistency_defect(&samples), 0.0, "{flux:?}");
        }
    }

    #[test]
    fn empirical_lipschitz_bound_on_stencil_arguments() {
        // finite-difference sensitivity of each argument stays bounded on [-2, 2]
        let h = 1e-6;
        let samples: Vec<f64> = (0..50).map(|k| -2.0 + 4.0 * k as f64 / 49.0).collect();
        for flux in [
            ScalarFlux::CentralAverage,
            ScalarFlux::CentralDifference,
            ScalarFlux::UpwindAdvection,
            ScalarFlux::UpwindBurgers,
        ] {
            let width = flux.stencil_width();
            for &u in &samples {
                for k in 0..width {
                    let mut lo = vec![u; width];
                    let mut hi = vec![u; width];
                    lo[k] -= h;
                    hi[k] += h;
                    let slope = (flux.interface(&hi) - flux.interface(&lo)) / (2.0 * h);
                    assert!(slope.abs() <= 2.5, "{flux:?} arg {k} slope {slope}");
                }
            }
        }
    }

    #[test]
    fn euler_stagnation_flux() {
        let gamma = 1.4f64;
        let s = EulerState::from_primitive(1.0, 0.0, 0.0, 0.7, gamma);
        let f = euler_physical_flux(&s, Axis::X, gamma).unwrap();
        assert!((f[0]).abs() < 1e-15);
        assert!((f[1] - 0.7).abs() < 1e-14);
        assert!((f[2]).abs() < 1e-15);
        assert!((f[3]).abs() < 1e-15);
    }

    #[test]
    fn equation_of_state_hand_value() {
        // (ρ, u, v, E) = (1, 1, 0, 2): p = (γ-1)·ρ·(E - u²/2) = 0.4·1.5 = 0.6
        let s = EulerState::<f64> {
            rho: 1.0,
            mom_x: 1.0,
            mom_y: 0.0,
            energy: 2.0,
        };
        assert!((s.pressure(1.4).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn vacuum_state_is_rejected() {
        let s = EulerState::<f64> {
            rho: 1.0,
            mom_x: 3.0,
            mom_y: 0.0,
            energy: 1.0,
        };
        assert!(matches!(s.pressure(1.4), Err(Error::VacuumState { .. })));
    }

    #[test]
    fn centered4_is_exact_on_constant_states() {
        let gamma = 1.4f64;
        let s = EulerState::from_primitive(1.0, 1.0, 0.0, 1.0 / (gamma * 0.25), gamma);
        let f = euler_physical_flux(&s, Axis::X, gamma).unwrap();
        let combined = centered4_euler(&[s, s, s, s], Axis::X, gamma).unwrap();
        for c in 0..4 {
            assert!((combined[c] - f[c]).abs() < 1e-13, "component {c}");
        }
    }

    #[test]
    fn centered4_difference_is_fourth_order() {
        // The interface weights are built so the flux difference
        // (f̂_{i+1/2} - f̂_{i-1/2})/h approximates d/dx f to 4th order.
        // Oracle: smooth φ(x) = sin x with φ'(0) = 1.
        let phi = |x: f64| [x.sin(); 4];
        let mut errors = Vec::new();
        for &h in &[0.1f64, 0.05, 0.025] {
            let right = centered4_combine(&[phi(-h), phi(0.0), phi(h), phi(2.0 * h)]);
            let left = centered4_combine(&[phi(-2.0 * h), phi(-h), phi(0.0), phi(h)]);
            errors.push(((right[0] - left[0]) / h - 1.0).abs());
        }
        let order01 = (errors[0] / errors[1]).log2();
        let order12 = (errors[1] / errors[2]).log2();
        assert!(order01 > 3.9, "observed order {order01}");
        assert!(order12 > 3.9, "observed order {order12}");
    }
}
