//! Explicit Runge-Kutta pseudo-time iterations for the implicit Euler step,
//! the modification constant of the effective flux, the conservative-form
//! flux reconstruction, and schedule strategies (including root-first
//! schedules that restore consistency).
//!
//! A pseudo-time step of size Δτ_k = μ_k·Δt marches dU/dτ = -g(U) where g is
//! the implicit-Euler residual function. Truncating after N iterations leaves
//! a locally conservative scheme whose numerical flux is consistent with
//! c·f, c = 1 - Π_l φ(-μ_l).

use crate::error::{Error, Result};
use crate::grid::State1;
use crate::linear_solvers::{IterationTrace, LinearSystem, TraceEntry};
use crate::scalar::Real;
use crate::semidisc::ImplicitEulerSystem;
use crate::tableau::ButcherTableau;

/// Ordered pseudo-time step ratios μ_k = Δτ_k/Δt. An empty schedule is the
/// identity iteration (zero steps, c = 0).
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoSchedule<R> {
    mu: Vec<R>,
}

impl<R: Real> PseudoSchedule<R> {
    pub fn new(mu: Vec<R>) -> Result<Self> {
        if mu.iter().any(|&m| !(m > R::zero()) || !m.is_finite()) {
            return Err(Error::InvalidSpec(
                "pseudo-time step ratios must be positive and finite".into(),
            ));
        }
        Ok(Self { mu })
    }

    /// N equal steps.
    pub fn constant(mu: R, n: usize) -> Self {
        Self { mu: vec![mu; n] }
    }

    pub fn mus(&self) -> &[R] {
        &self.mu
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Total pseudo-time reached, Σμ_k (in units of Δt).
    pub fn total(&self) -> R {
        self.mu.iter().copied().sum()
    }

    /// Π_l φ(-μ_l); the empty product is 1.
    pub fn stability_product(&self, tab: &ButcherTableau<R>) -> R {
        self.mu
            .iter()
            .fold(R::one(), |acc, &mu| acc * tab.stability_function(-mu))
    }

    /// Modification constant c(μ_0, .., μ_{N-1}) = 1 - Π_l φ(-μ_l): the factor
    /// multiplying the physical flux in the effective conservation law.
    pub fn modification_constant(&self, tab: &ButcherTableau<R>) -> R {
        R::one() - self.stability_product(tab)
    }
}

/// Smallest positive real root of φ(-μ) within (0, upper], if any.
pub fn stability_root<R: Real>(tab: &ButcherTableau<R>) -> Result<R> {
    let upper = R::of(3.0);
    if tab.stages() == 1 {
        // φ(-μ) = 1 - b_0·μ with b_0 = 1: the root is exactly 1
        return Ok(R::one());
    }
    let phi = |mu: R| tab.stability_function(-mu);
    // scan for the first sign change, then bisect
    let samples = 192;
    let step = upper / R::of_usize(samples);
    let mut lo = R::zero();
    let mut f_lo = phi(lo);
    let mut bracket = None;
    for k in 1..=samples {
        let hi = step * R::of_usize(k);
        let f_hi = phi(hi);
        if f_hi == R::zero() {
            return Ok(hi);
        }
        if f_lo * f_hi < R::zero() {
            bracket = Some((lo, hi, f_lo));
            break;
        }
        lo = hi;
        f_lo = f_hi;
    }
    let (mut lo, mut hi, mut f_lo) = bracket.ok_or_else(|| Error::NoRealRoot {
        tableau: tab.name().to_string(),
        upper: 3.0,
    })?;
    for _ in 0..200 {
        let mid = (lo + hi) * R::half();
        let f_mid = phi(mid);
        if f_mid == R::zero() {
            return Ok(mid);
        }
        if f_lo * f_mid < R::zero() {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    Ok((lo + hi) * R::half())
}

/// Schedule [μ_root, base, .., base] whose first step hits a real root of the
/// stability function, forcing the modification constant to 1 regardless of
/// the tail.
pub fn root_first_schedule<R: Real>(
    tab: &ButcherTableau<R>,
    base_mu: R,
    n_tail: usize,
) -> Result<PseudoSchedule<R>> {
    let root = stability_root(tab)?;
    let mut mu = Vec::with_capacity(n_tail + 1);
    mu.push(root);
    mu.extend(std::iter::repeat_n(base_mu, n_tail));
    PseudoSchedule::new(mu)
}

/// Result of a pseudo-time solve.
pub struct PseudoRun<R> {
    pub state: State1<R>,
    pub trace: IterationTrace<R>,
    /// Stage interface fluxes per iterate (N entries of s·m values, stage-major),
    /// recorded when requested so flux reconstructions reuse the exact values.
    pub stage_fluxes: Option<Vec<Vec<R>>>,
}

/// Options for [`pseudo_solve`].
#[derive(Clone, Debug, Default)]
pub struct PseudoOptions<R> {
    pub record_trace: bool,
    pub record_stage_fluxes: bool,
    /// Strongly imposed cell value applied after every pseudo-iterate
    /// (inflow pinning for non-periodic data).
    pub pinned: Option<(usize, R)>,
}

/// One explicit RK pseudo-time iterate of size Δτ = μ·Δt, optionally recording
/// interface fluxes of every stage (stage-major layout).
pub fn erk_pseudo_step<R: Real>(
    sys: &ImplicitEulerSystem<R>,
    tab: &ButcherTableau<R>,
    u: &State1<R>,
    mu: R,
    mut record: Option<&mut [R]>,
) -> State1<R> {
    let m = sys.m();
    let s = tab.stages();
    let dtau = mu * sys.dt;
    let a = tab.a();
    let mut stage_g: Vec<Vec<R>> = Vec::with_capacity(s);
    let mut stage_u = vec![R::zero(); m];
    for j in 0..s {
        stage_u.copy_from_slice(u.values());
        for (l, g_l) in stage_g.iter().enumerate() {
            let w = a[(j, l)];
            if w != R::zero() {
                for i in 0..m {
                    stage_u[i] -= dtau * w * g_l[i];
                }
            }
        }
        let mut g = vec![R::zero(); m];
        match record.as_deref_mut() {
            Some(buf) => sys.g_values(&stage_u, &mut g, Some(&mut buf[j * m..(j + 1) * m])),
            None => sys.g_values(&stage_u, &mut g, None),
        }
        stage_g.push(g);
    }
    let mut next = u.clone();
    for (j, g_j) in stage_g.iter().enumerate() {
        let w = dtau * tab.b()[j];
        for i in 0..m {
            next.values_mut()[i] -= w * g_j[i];
        }
    }
    next
}

/// Run the pseudo-time iteration u^(k+1) = ERK(u^(k)) for every μ in the
/// schedule, starting from u^(0) = u^n. The trace records the relative
/// residual ‖g(u^(k))‖/‖g(u^(0))‖ and the mass error against u^n.
pub fn pseudo_solve<R: Real>(
    sys: &ImplicitEulerSystem<R>,
    tab: &ButcherTableau<R>,
    schedule: &PseudoSchedule<R>,
    opts: &PseudoOptions<R>,
) -> PseudoRun<R> {
    let m = sys.m();
    let s = tab.stages();
    let mut u = sys.un.clone();
    if let Some((cell, value)) = opts.pinned {
        u.set_value(cell, 0, value);
    }
    let mut trace = IterationTrace::new();
    // a pinned cell is a constraint, not an equation: mask it from the norm
    let residual_of = |u: &State1<R>| {
        let mut g = vec![R::zero(); m];
        sys.g_values(u.values(), &mut g, None);
        if let Some((cell, _)) = opts.pinned {
            g[cell] = R::zero();
        }
        crate::scalar::weighted_norm2(sys.semi.grid.dx(), &g)
    };
    let r0 = if opts.record_trace {
        let r = residual_of(&u);
        trace.push(TraceEntry {
            iteration: 0,
            residual: R::one(),
            mass_error: R::zero(),
            predicted_mass_error: None,
        });
        r
    } else {
        R::zero()
    };
    let mut fluxes = if opts.record_stage_fluxes {
        Some(Vec::with_capacity(schedule.len()))
    } else {
        None
    };
    for (k, &mu) in schedule.mus().iter().enumerate() {
        let mut buf = if fluxes.is_some() {
            vec![R::zero(); s * m]
        } else {
            Vec::new()
        };
        u = erk_pseudo_step(sys, tab, &u, mu, fluxes.as_ref().map(|_| buf.as_mut_slice()));
        if let Some((cell, value)) = opts.pinned {
            u.set_value(cell, 0, value);
        }
        if let Some(store) = fluxes.as_mut() {
            store.push(buf);
        }
        if opts.record_trace {
            let r = residual_of(&u);
            let rel = if r0 > R::zero() { r / r0 } else { r };
            trace.push(TraceEntry {
                iteration: k + 1,
                residual: rel,
                mass_error: u.mass_error(&sys.un, 0).unwrap_or_else(|_| R::nan()),
                predicted_mass_error: None,
            });
        }
    }
    PseudoRun {
        state: u,
        trace,
        stage_fluxes: fluxes,
    }
}

/// Interface fluxes ĥ_{i+1/2} of the truncated iteration in conservative
/// form: ĥ = Σ_k μ_k bᵀ(I + μ_k A)⁻¹ (Π_{l>k} φ(-μ_l)) f̂^{(k)}_{i+1/2},
/// assembled from the recorded stage fluxes.
pub fn h_flux<R: Real>(
    tab: &ButcherTableau<R>,
    schedule: &PseudoSchedule<R>,
    stage_fluxes: &[Vec<R>],
    m: usize,
) -> Vec<R> {
    let n = schedule.len();
    assert_eq!(stage_fluxes.len(), n);
    // suffix products Π_{l>k} φ(-μ_l)
    let mus = schedule.mus();
    let mut suffix = vec![R::one(); n];
    for k in (0..n.saturating_sub(1)).rev() {
        suffix[k] = suffix[k + 1] * tab.stability_function(-mus[k + 1]);
    }
    let mut h = vec![R::zero(); m];
    for k in 0..n {
        let mut w = tab.weighted_b_row(mus[k]);
        for wj in &mut w {
            *wj *= suffix[k];
        }
        let record = &stage_fluxes[k];
        for (j, &wj) in w.iter().enumerate() {
            let stage = &record[j * m..(j + 1) * m];
            for i in 0..m {
                h[i] += wj * stage[i];
            }
        }
    }
    h
}

/// Outcome of the conservative-form reconstruction check.
pub struct FluxFormCheck<R> {
    pub state: State1<R>,
    pub h: Vec<R>,
    /// max_i |(u_i^(N) - u_i^n)/Δt + (ĥ_{i+1/2} - ĥ_{i-1/2})/Δx|
    pub max_residual: R,
}

/// Run the pseudo-time iteration with flux recording and verify that the
/// final iterate satisfies the flux-difference form with the reconstructed ĥ.
pub fn flux_form_check<R: Real>(
    sys: &ImplicitEulerSystem<R>,
    tab: &ButcherTableau<R>,
    schedule: &PseudoSchedule<R>,
) -> FluxFormCheck<R> {
    let opts = PseudoOptions {
        record_stage_fluxes: true,
        ..Default::default()
    };
    let run = pseudo_solve(sys, tab, schedule, &opts);
    let m = sys.m();
    let h = h_flux(tab, schedule, run.stage_fluxes.as_ref().unwrap(), m);
    let grid = sys.semi.grid;
    let inv_dx = R::one() / grid.dx();
    let inv_dt = R::one() / sys.dt;
    let un = sys.un.values();
    let u = run.state.values();
    let mut max_residual = R::zero();
    for i in 0..m {
        let left = h[grid.wrap(i as isize - 1)];
        let r = (u[i] - un[i]) * inv_dt + (h[i] - left) * inv_dx;
        max_residual = max_residual.max(r.abs());
    }
    FluxFormCheck {
        state: run.state,
        h,
        max_residual,
    }
}

/// Pseudo-time iteration for a linear system (I - αA)x = b: each step applies
/// the ERK method with step size μ to dx/dτ = b - (I - αA)x. With the
/// one-stage method this is exactly the Richardson iteration with θ = μ.
pub fn pseudo_solve_linear<R: Real>(
    sys: &LinearSystem<R>,
    tab: &ButcherTableau<R>,
    steps: &[R],
    x0: &[R],
    record_trace: bool,
) -> (Vec<R>, IterationTrace<R>) {
    let m = sys.m();
    let s = tab.stages();
    let a = tab.a();
    let mut x = x0.to_vec();
    let mut trace = IterationTrace::new();
    let push = |trace: &mut IterationTrace<R>, k: usize, x: &[R]| {
        trace.push(TraceEntry {
            iteration: k,
            residual: sys.residual_norm(x),
            mass_error: sys.mass(x) - sys.mass(&sys.b),
            predicted_mass_error: None,
        });
    };
    if record_trace {
        push(&mut trace, 0, &x);
    }
    let mut stage_x = vec![R::zero(); m];
    for (k, &mu) in steps.iter().enumerate() {
        let mut stage_r: Vec<Vec<R>> = Vec::with_capacity(s);
        for j in 0..s {
            stage_x.copy_from_slice(&x);
            for (l, r_l) in stage_r.iter().enumerate() {
                let w = a[(j, l)];
                if w != R::zero() {
                    for i in 0..m {
                        stage_x[i] += mu * w * r_l[i];
                    }
                }
            }
            stage_r.push(sys.residual(&stage_x));
        }
        for (j, r_j) in stage_r.iter().enumerate() {
            let w = mu * tab.b()[j];
            for i in 0..m {
                x[i] += w * r_j[i];
            }
        }
        if record_trace {
            push(&mut trace, k + 1, &x);
        }
    }
    (x, trace)
}
