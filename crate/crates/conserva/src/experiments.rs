//! Canonical experiment drivers: the coarse single-iteration solver
//! comparison, modification-constant tables, advection convergence and
//! propagation-speed studies, Burgers shock experiments, pseudo-time schedule
//! strategies and the 2D vortex benchmark. All drivers run in `f64`.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    l2_error, measure_speed, measured_front, step_front_prediction, track_peak,
    triangle_shock_prediction, unwrap_positions, ExactSolution, ShockPrediction,
};
use crate::error::{Error, Result};
use crate::euler2d::{
    density_minimum_location, pseudo_solve_2d, vortex_state, Euler2dSystem, VortexParams,
};
use crate::flux::ScalarFlux;
use crate::grid::{write_csv_1d, write_csv_2d, Grid1D, Grid2D, State1};
use crate::linalg::DMat;
use crate::linear_solvers::{
    agglomeration_operators, cgc, gauss_seidel, gmres, jacobi, richardson, LinearSystem,
};
use crate::newton::{newton_solve, InnerGuess, InnerSolver, NewtonConfig};
use crate::pseudo::{
    pseudo_solve, pseudo_solve_linear, root_first_schedule, PseudoOptions, PseudoSchedule,
};
use crate::semidisc::{ImplicitEulerSystem, SemiDiscretization1D};
use crate::tableau::ButcherTableau;

type Tab = ButcherTableau<f64>;
type Schedule = PseudoSchedule<f64>;

/// Solvers exercised by the comparison tables and mass audits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum SolverTag {
    Exact,
    Richardson,
    Jacobi,
    GaussSeidel,
    Gmres,
    Cgc,
    PseudoHeun,
}

impl SolverTag {
    pub const ALL: [SolverTag; 7] = [
        SolverTag::Exact,
        SolverTag::Richardson,
        SolverTag::Jacobi,
        SolverTag::GaussSeidel,
        SolverTag::Gmres,
        SolverTag::Cgc,
        SolverTag::PseudoHeun,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            SolverTag::Exact => "exact",
            SolverTag::Richardson => "richardson",
            SolverTag::Jacobi => "jacobi",
            SolverTag::GaussSeidel => "gauss_seidel",
            SolverTag::Gmres => "gmres",
            SolverTag::Cgc => "cgc",
            SolverTag::PseudoHeun => "pseudo_heun",
        }
    }
}

/// Mass error and residual of one solver after one iteration/time step.
#[derive(Clone, Copy, Debug)]
pub struct MethodOutcome {
    pub tag: SolverTag,
    pub mass_error: f64,
    pub residual: f64,
}

// ---------------------------------------------------------------------------
// Coarse single-iteration comparison (table1)
// ---------------------------------------------------------------------------

/// Periodic skew-symmetric central operator Tridiag(-1/2, 0, 1/2).
pub fn central_advection_operator(m: usize) -> DMat<f64> {
    let mut a = DMat::zeros(m, m);
    for i in 0..m {
        a[(i, (i + 1) % m)] = 0.5;
        a[(i, (i + m - 1) % m)] = -0.5;
    }
    a
}

/// The advection implicit-Euler linear system (I - αA)u = u^n with
/// α = -Δt/Δx on (-1.5, 1.5] and Gaussian initial data exp(-50x²).
pub fn advection_linear_system(m: usize, cfl: f64) -> (Grid1D<f64>, LinearSystem<f64>) {
    let grid = Grid1D::<f64>::new(-1.5, 1.5, m).unwrap();
    let un = State1::from_profile(grid, |x| (-50.0 * x * x).exp());
    let dt = cfl * grid.dx();
    let alpha = -dt / grid.dx();
    let sys = LinearSystem::with_uniform_volume(
        central_advection_operator(m),
        alpha,
        un.values().to_vec(),
        grid.dx(),
    );
    (grid, sys)
}

/// Coarse advection operator rediscretized on the agglomerated mesh, as the
/// implicit-Euler matrix I - α_c A_c with α_c = -Δt/(2Δx).
fn advection_coarse_matrix(m: usize, dt: f64, dx: f64) -> DMat<f64> {
    let mc = m / 2;
    let alpha_c = -dt / (2.0 * dx);
    let a_c = central_advection_operator(mc);
    let mut mat = DMat::from_fn(mc, mc, |i, j| -alpha_c * a_c[(i, j)]);
    for i in 0..mc {
        mat[(i, i)] += 1.0;
    }
    mat
}

fn advection_apply_method(
    sys: &LinearSystem<f64>,
    grid: &Grid1D<f64>,
    dt: f64,
    tag: SolverTag,
    iters: usize,
) -> Result<Vec<f64>> {
    let x0 = sys.b.clone(); // the previous state is the right-hand side
    Ok(match tag {
        SolverTag::Exact => sys.solve_direct()?,
        SolverTag::Richardson => richardson(sys, 0.5, &x0, iters).0,
        SolverTag::Jacobi => jacobi(sys, &x0, iters)?.0,
        SolverTag::GaussSeidel => gauss_seidel(sys, &x0, iters)?.0,
        SolverTag::Gmres => gmres(sys, &x0, iters).0,
        SolverTag::Cgc => {
            let (restriction, prolongation) = agglomeration_operators::<f64>(sys.m())?;
            let coarse = advection_coarse_matrix(sys.m(), dt, grid.dx());
            cgc(sys, &x0, &restriction, &prolongation, &coarse, iters)?.0
        }
        SolverTag::PseudoHeun => {
            pseudo_solve_linear(sys, &Tab::heun(), &vec![0.5; iters], &x0, false).0
        }
    })
}

/// Single-iteration mass errors and residuals for the coarse advection
/// problem (Δx = Δt = 0.5, one iteration per solver, initial guess u^n).
pub fn table1_advection() -> Result<Vec<MethodOutcome>> {
    let (grid, sys) = advection_linear_system(6, 1.0);
    let dt = grid.dx();
    let mut out = Vec::new();
    for tag in SolverTag::ALL {
        let x = advection_apply_method(&sys, &grid, dt, tag, 1)?;
        out.push(MethodOutcome {
            tag,
            mass_error: sys.mass(&x) - sys.mass(&sys.b),
            residual: sys.residual_norm(&x),
        });
    }
    Ok(out)
}

/// The coarse Burgers implicit-Euler system (Δx = Δt = 0.5, exp(-x²) data).
pub fn burgers_coarse_system(m: usize, cfl: f64) -> ImplicitEulerSystem<f64> {
    let grid = Grid1D::<f64>::new(-1.5, 1.5, m).unwrap();
    let semi = SemiDiscretization1D::new(grid, ScalarFlux::UpwindBurgers);
    let un = State1::from_profile(grid, |x| (-x * x).exp());
    ImplicitEulerSystem::new(semi, cfl * grid.dx(), un)
}

/// Tableau lookup for specs: a built-in name or a path to a JSON document.
fn resolve_tableau(name: &str) -> Result<Tab> {
    if name.ends_with(".json") || name.contains('/') {
        let text = fs::read_to_string(name)?;
        Tab::from_json(&text)
    } else {
        Tab::by_name(name)
    }
}

fn inner_solver_for(tag: SolverTag) -> InnerSolver<f64> {
    match tag {
        SolverTag::Exact => InnerSolver::Exact,
        SolverTag::Richardson => InnerSolver::Richardson { theta: 0.5 },
        SolverTag::Jacobi => InnerSolver::Jacobi,
        SolverTag::GaussSeidel => InnerSolver::GaussSeidel,
        SolverTag::Gmres => InnerSolver::Gmres,
        SolverTag::Cgc => InnerSolver::CoarseGridCorrection,
        SolverTag::PseudoHeun => InnerSolver::PseudoErk {
            tableau: Tab::heun(),
            step: 0.5,
        },
    }
}

/// Single-iteration mass errors and residuals for the coarse Burgers problem:
/// one Newton iteration whose inner system is solved with one iteration of
/// each method from a zero initial guess. The residual is the volume-weighted
/// norm of the nonlinear residual function after the step.
pub fn table1_burgers() -> Result<Vec<MethodOutcome>> {
    let sys = burgers_coarse_system(6, 1.0);
    let mut out = Vec::new();
    for tag in SolverTag::ALL {
        let cfg = NewtonConfig {
            outer_iterations: 1,
            inner: inner_solver_for(tag),
            inner_iterations: 1,
            guess: InnerGuess::Zero,
        };
        let (u, _) = newton_solve(&sys, &sys.un.clone(), &cfg)?;
        out.push(MethodOutcome {
            tag,
            mass_error: u.mass_error(&sys.un, 0)?,
            residual: sys.residual_norm(u.values()),
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Modification-constant table (table2)
// ---------------------------------------------------------------------------

/// Modification constants for the three built-in methods under the constant
/// schedule μ_l = 1/20 (N = 4) and the halving schedule μ_l = 2^-l.
pub fn table2() -> [[f64; 3]; 2] {
    let tabs = [Tab::explicit_euler(), Tab::heun(), Tab::ssprk3()];
    let constant = Schedule::constant(0.05, 4);
    let halving = Schedule::new(vec![1.0, 0.5, 0.25, 0.125]).unwrap();
    let mut out = [[0.0; 3]; 2];
    for (k, tab) in tabs.iter().enumerate() {
        out[0][k] = constant.modification_constant(tab);
        out[1][k] = halving.modification_constant(tab);
    }
    out
}

// ---------------------------------------------------------------------------
// Advection convergence and speed measurement
// ---------------------------------------------------------------------------

/// March the 1D upwind advection problem with pseudo-time iterations.
/// Returns the final state and the largest mass drift seen along the run.
fn run_advection_pseudo(
    grid: Grid1D<f64>,
    tab: &Tab,
    schedule: &Schedule,
    t_end: f64,
    mut per_step: impl FnMut(usize, &State1<f64>),
) -> Result<(State1<f64>, f64)> {
    let dt = grid.dx();
    let n_steps = (t_end / dt).round() as usize;
    if ((n_steps as f64 * dt) - t_end).abs() > 1e-9 * t_end.max(1.0) {
        return Err(Error::InvalidSpec(format!(
            "t_end = {t_end} is not an integer number of steps of {dt}"
        )));
    }
    let semi = SemiDiscretization1D::new(grid, ScalarFlux::UpwindAdvection);
    let mut u = State1::from_profile(grid, |x| (-50.0 * x * x).exp());
    let mass0 = u.total_mass(0)?;
    let mut max_drift = 0.0f64;
    per_step(0, &u);
    for step in 1..=n_steps {
        let sys = ImplicitEulerSystem::new(semi, dt, u);
        let run = pseudo_solve(&sys, tab, schedule, &PseudoOptions::default());
        u = run.state;
        max_drift = max_drift.max((u.total_mass(0)? - mass0).abs());
        per_step(step, &u);
    }
    Ok((u, max_drift))
}

/// One grid of the advection convergence study.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConvergencePoint {
    pub j: u32,
    pub dx: f64,
    pub error_original: f64,
    pub error_modified: f64,
    pub max_mass_drift: f64,
}

/// Advection on (-1, 1] to T = 0.25 with Δt = Δx = 2/(40·2^j): L2 errors of
/// the final state against the exact solutions of the original and the
/// speed-modified equations.
pub fn advection_convergence_point(tab: &Tab, schedule: &Schedule, j: u32) -> Result<ConvergencePoint> {
    let m = 40usize << j;
    let grid = Grid1D::new(-1.0, 1.0, m)?;
    let t_end = 0.25;
    let (u, max_mass_drift) = run_advection_pseudo(grid, tab, schedule, t_end, |_, _| {})?;
    let c = schedule.modification_constant(tab);
    let original = ExactSolution::AdvectedGaussian {
        decay: 50.0,
        c: 1.0,
        a: -1.0,
        b: 1.0,
    };
    let modified = original.with_speed_factor(c);
    Ok(ConvergencePoint {
        j,
        dx: grid.dx(),
        error_original: l2_error(&u, &original, t_end),
        error_modified: l2_error(&u, &modified, t_end),
        max_mass_drift,
    })
}

/// Convergence sweep over j = j_min..=j_max, optionally in parallel.
pub fn advection_convergence(
    tab: &Tab,
    schedule: &Schedule,
    j_min: u32,
    j_max: u32,
    jobs: usize,
) -> Result<Vec<ConvergencePoint>> {
    let js: Vec<u32> = (j_min..=j_max).collect();
    let slots: Vec<Mutex<Option<Result<ConvergencePoint>>>> =
        js.iter().map(|_| Mutex::new(None)).collect();
    let cursor = AtomicUsize::new(0);
    let workers = jobs.max(1).min(js.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = cursor.fetch_add(1, Ordering::Relaxed);
                if k >= js.len() {
                    break;
                }
                let result = advection_convergence_point(tab, schedule, js[k]);
                *slots[k].lock().unwrap() = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("worker finished"))
        .collect()
}

/// Propagation-speed measurement for the pseudo-time iterated advection
/// scheme at fixed Δx on the short periodic domain (-0.2, 0.2].
#[derive(Clone, Debug, Serialize)]
pub struct SpeedMeasurement {
    pub tableau: String,
    pub mu: f64,
    pub iterations: usize,
    /// φ(-μ)^N, the predicted speed error 1 - c.
    pub predicted_speed_error: f64,
    pub measured_speed_error: f64,
    #[serde(skip)]
    pub times: Vec<f64>,
    #[serde(skip)]
    pub peaks: Vec<f64>,
}

pub fn advection_speed(tab: &Tab, mu: f64, iterations: usize) -> Result<SpeedMeasurement> {
    let m = 133;
    let grid = Grid1D::new(-0.2, 0.2, m)?;
    let t_end = 6.0;
    let dt = grid.dx();
    let schedule = Schedule::constant(mu, iterations);
    let mut times = Vec::new();
    let mut raw_peaks = Vec::new();
    let (_, _) = run_advection_pseudo(grid, tab, &schedule, t_end, |step, u| {
        times.push(step as f64 * dt);
        raw_peaks.push(track_peak(u).expect("pulse stays unimodal"));
    })?;
    let peaks = unwrap_positions(&raw_peaks, grid.length());
    let speed = measure_speed(&times, &peaks)?;
    let phi = tab.stability_function(-mu);
    Ok(SpeedMeasurement {
        tableau: tab.name().to_string(),
        mu,
        iterations,
        predicted_speed_error: phi.powi(iterations as i32),
        measured_speed_error: 1.0 - speed,
        times,
        peaks,
    })
}

// ---------------------------------------------------------------------------
// Burgers shock experiments
// ---------------------------------------------------------------------------

fn run_burgers_pseudo(
    grid: Grid1D<f64>,
    u0: State1<f64>,
    tab: &Tab,
    schedule: &Schedule,
    t_end: f64,
    pinned: Option<(usize, f64)>,
) -> Result<(State1<f64>, f64)> {
    let dt = grid.dx();
    let n_steps = (t_end / dt).round() as usize;
    let semi = SemiDiscretization1D::new(grid, ScalarFlux::UpwindBurgers);
    let opts = PseudoOptions {
        pinned,
        ..Default::default()
    };
    let mut u = u0;
    let mass0 = u.total_mass(0)?;
    let mut max_drift = 0.0f64;
    for _ in 0..n_steps {
        let sys = ImplicitEulerSystem::new(semi, dt, u);
        let run = pseudo_solve(&sys, tab, schedule, &opts);
        u = run.state;
        max_drift = max_drift.max((u.total_mass(0)? - mass0).abs());
    }
    Ok((u, max_drift))
}

#[derive(Clone, Debug)]
pub struct TriangleResult {
    pub c: f64,
    pub prediction: ShockPrediction<f64>,
    pub tip_measured: f64,
    pub error_original: f64,
    pub error_modified: f64,
    pub max_mass_drift: f64,
    pub state: State1<f64>,
}

/// Triangular wave under Burgers' equation on (0, 1], upwind flux,
/// Δt = Δx = 1/resolution, pseudo-time iterations per implicit step.
pub fn burgers_triangle(
    resolution: usize,
    t_end: f64,
    tab: &Tab,
    schedule: &Schedule,
) -> Result<TriangleResult> {
    let grid = Grid1D::new(0.0, 1.0, resolution)?;
    let u0 = State1::from_profile(grid, |x| if x <= 0.5 { x } else { 0.0 });
    let (state, max_mass_drift) = run_burgers_pseudo(grid, u0, tab, schedule, t_end, None)?;
    let c = schedule.modification_constant(tab);
    let prediction = triangle_shock_prediction(c, t_end);
    let tip_measured = measured_front(&state, prediction.height * 0.5)
        .ok_or_else(|| Error::SolverFailure("no shock front found".into()))?;
    let original = ExactSolution::BurgersTriangle { c: 1.0 };
    let modified = ExactSolution::BurgersTriangle { c };
    Ok(TriangleResult {
        c,
        prediction,
        tip_measured,
        error_original: l2_error(&state, &original, t_end),
        error_modified: l2_error(&state, &modified, t_end),
        max_mass_drift,
        state,
    })
}

#[derive(Clone, Debug)]
pub struct StepRun {
    pub iterations: usize,
    pub c: f64,
    pub front_predicted: f64,
    pub front_measured: f64,
    pub state: State1<f64>,
}

/// Step data under Burgers' equation with inflow value 1 strongly imposed at
/// the leftmost cell each pseudo-iterate.
pub fn burgers_step(resolution: usize, t_end: f64, mu: f64, iterations: usize) -> Result<StepRun> {
    let grid = Grid1D::new(0.0, 1.0, resolution)?;
    let u0 = State1::from_profile(grid, |x| if x <= 0.24 { 1.0 } else { 0.0 });
    let tab = Tab::explicit_euler();
    let schedule = Schedule::constant(mu, iterations);
    let (state, _) = run_burgers_pseudo(grid, u0, &tab, &schedule, t_end, Some((0, 1.0)))?;
    let c = schedule.modification_constant(&tab);
    let front = step_front_prediction(c, t_end, 0.24);
    let front_measured = measured_front(&state, 0.5 * front.height)
        .ok_or_else(|| Error::SolverFailure("no front found".into()))?;
    Ok(StepRun {
        iterations,
        c,
        front_predicted: front.location,
        front_measured,
        state,
    })
}

/// Relative residual histories of the two pseudo-time step strategies over
/// the first physical step of the triangular-wave problem (Δx = Δt = 1/250).
/// Both schedules reach the same pseudo-time point Στμ = 3; the root-first
/// first iterate removes the smooth propagation-speed residual outright.
#[derive(Clone, Debug)]
pub struct StrategyComparison {
    pub schedule_1: Vec<f64>,
    pub schedule_2: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
}

pub fn burgers_strategy_residuals() -> Result<StrategyComparison> {
    let tab = Tab::explicit_euler();
    let s1 = Schedule::constant(0.25, 12);
    let s2 = root_first_schedule(&tab, 0.25, 8)?;
    if (s1.total() - s2.total()).abs() > 1e-12 {
        return Err(Error::InvalidSpec(
            "strategies must reach the same pseudo-time point".into(),
        ));
    }
    let grid = Grid1D::new(0.0, 1.0, 250)?;
    let u0 = State1::from_profile(grid, |x| if x <= 0.5 { x } else { 0.0 });
    let semi = SemiDiscretization1D::new(grid, ScalarFlux::UpwindBurgers);
    let sys = ImplicitEulerSystem::new(semi, grid.dx(), u0);
    let run = |schedule: &Schedule| {
        let opts = PseudoOptions {
            record_trace: true,
            ..Default::default()
        };
        let out = pseudo_solve(&sys, &tab, schedule, &opts);
        out.trace.entries.iter().map(|e| e.residual).collect()
    };
    Ok(StrategyComparison {
        schedule_1: run(&s1),
        schedule_2: run(&s2),
        c1: s1.modification_constant(&tab),
        c2: s2.modification_constant(&tab),
    })
}

// ---------------------------------------------------------------------------
// 2D vortex benchmark
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VortexStrategy {
    /// Nine iterations with μ = 0.2 (modification constant ≈ 0.866).
    Constant,
    /// Root-first: μ₀ = 1 then four iterations with μ = 0.2 (constant 1).
    RootFirst,
}

impl VortexStrategy {
    pub fn schedule(&self) -> Schedule {
        match self {
            VortexStrategy::Constant => Schedule::constant(0.2, 9),
            VortexStrategy::RootFirst => {
                root_first_schedule(&Tab::explicit_euler(), 0.2, 4).unwrap()
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct VortexResult {
    pub c: f64,
    pub expected_center_x: f64,
    pub center: (f64, f64),
    pub density_mass_drift: f64,
    pub initial_density_mass: f64,
    pub error_original: f64,
    pub error_modified: f64,
    pub state: crate::grid::State2<f64>,
}

/// Isentropic vortex on (-5, 15] × (-5, 5] with Δx = Δy and Δt = Δx/4,
/// marched to `t_end` with pseudo-time iterations per implicit step.
pub fn euler_vortex(strategy: VortexStrategy, dx: f64, t_end: f64) -> Result<VortexResult> {
    let mx = (20.0 / dx).round() as usize;
    let my = (10.0 / dx).round() as usize;
    let grid = Grid2D::new(-5.0, 15.0, -5.0, 5.0, mx, my)?;
    let dt = dx / 4.0;
    let n_steps = (t_end / dt).round() as usize;
    if ((n_steps as f64) * dt - t_end).abs() > 1e-9 {
        return Err(Error::InvalidSpec(format!(
            "t_end = {t_end} is not an integer number of steps of {dt}"
        )));
    }
    let params = VortexParams::default();
    let tab = Tab::explicit_euler();
    let schedule = strategy.schedule();
    let c = schedule.modification_constant(&tab);
    let mut u = vortex_state(grid, &params, 0.0)?;
    let mass0 = u.total_mass(0)?;
    let mut drift = 0.0f64;
    for _ in 0..n_steps {
        let sys = Euler2dSystem::new(grid, dt, u, params.gamma);
        let (next, _) = pseudo_solve_2d(&sys, &tab, &schedule, false)?;
        u = next;
        drift = drift.max((u.total_mass(0)? - mass0).abs());
    }
    let center = density_minimum_location(&u);
    let density_l2 = |cx: f64| {
        let mut acc = 0.0;
        for j in 0..grid.my() {
            for i in 0..grid.mx() {
                let (x, y) = grid.point(i, j);
                let d = u.value(grid.index(i, j), 0) - params.density_at(&grid, cx, x, y);
                acc += grid.dx() * grid.dy() * d * d;
            }
        }
        acc.sqrt()
    };
    Ok(VortexResult {
        c,
        expected_center_x: c * t_end,
        center,
        density_mass_drift: drift,
        initial_density_mass: mass0,
        error_original: density_l2(t_end),
        error_modified: density_l2(c * t_end),
        state: u,
    })
}

// ---------------------------------------------------------------------------
// Mass audits over full runs
// ---------------------------------------------------------------------------

/// Advection mass audit: march the linear system to T = 6 with every solver
/// (five iterations per step, one for the coarse grid correction) and report
/// the largest mass drift.
pub fn mass_audit_advection(dx: f64) -> Result<Vec<(SolverTag, f64)>> {
    let m = (3.0 / dx).round() as usize;
    let (grid, template) = advection_linear_system(m, 1.0);
    let dt = grid.dx();
    let n_steps = (6.0 / dt).round() as usize;
    let mut out = Vec::new();
    let exact_lu = template.system_matrix().lu()?;
    let (restriction, prolongation) = agglomeration_operators::<f64>(m)?;
    let coarse = advection_coarse_matrix(m, dt, grid.dx());
    for tag in SolverTag::ALL {
        let mut sys = template.clone();
        let mass0 = sys.mass(&sys.b);
        let mut drift = 0.0f64;
        for _ in 0..n_steps {
            let x0 = sys.b.clone();
            let x = match tag {
                SolverTag::Exact => exact_lu.solve(&sys.b),
                SolverTag::Richardson => richardson(&sys, 0.5, &x0, 5).0,
                SolverTag::Jacobi => jacobi(&sys, &x0, 5)?.0,
                SolverTag::GaussSeidel => gauss_seidel(&sys, &x0, 5)?.0,
                SolverTag::Gmres => gmres(&sys, &x0, 5).0,
                SolverTag::Cgc => cgc(&sys, &x0, &restriction, &prolongation, &coarse, 1)?.0,
                SolverTag::PseudoHeun => {
                    pseudo_solve_linear(&sys, &Tab::heun(), &[0.5; 5], &x0, false).0
                }
            };
            drift = drift.max((sys.mass(&x) - mass0).abs());
            sys.b = x;
        }
        out.push((tag, drift));
    }
    Ok(out)
}

/// Burgers mass audit: march to T = 0.6 with two Newton iterations per step
/// and five inner iterations (one for the coarse grid correction).
pub fn mass_audit_burgers(dx: f64) -> Result<Vec<(SolverTag, f64)>> {
    let m = (3.0 / dx).round() as usize;
    let n_steps = (0.6 / dx).round() as usize;
    let template = burgers_coarse_system(m, 1.0);
    let mut out = Vec::new();
    for tag in SolverTag::ALL {
        let inner_iterations = if tag == SolverTag::Cgc { 1 } else { 5 };
        let cfg = NewtonConfig {
            outer_iterations: 2,
            inner: inner_solver_for(tag),
            inner_iterations,
            guess: InnerGuess::Zero,
        };
        let mut un = template.un.clone();
        let mass0 = un.total_mass(0)?;
        let mut drift = 0.0f64;
        for _ in 0..n_steps {
            let sys = ImplicitEulerSystem::new(template.semi, template.dt, un.clone());
            let (u, _) = newton_solve(&sys, &un, &cfg)?;
            drift = drift.max((u.total_mass(0)? - mass0).abs());
            un = u;
        }
        out.push((tag, drift));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Experiment specs, manifests and file output
// ---------------------------------------------------------------------------

/// Schedule description inside an experiment spec.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleSpec {
    Constant { mu: f64, n: usize },
    Explicit { mu: Vec<f64> },
    RootFirst { base_mu: f64, n_tail: usize },
}

impl ScheduleSpec {
    pub fn build(&self, tab: &Tab) -> Result<Schedule> {
        match self {
            ScheduleSpec::Constant { mu, n } => Schedule::new(vec![*mu; *n]),
            ScheduleSpec::Explicit { mu } => Schedule::new(mu.clone()),
            ScheduleSpec::RootFirst { base_mu, n_tail } => {
                root_first_schedule(tab, *base_mu, *n_tail)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ProblemTag {
    Advection,
    Burgers,
}

/// A batch experiment description, loadable from JSON.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentSpec {
    /// Coarse single-iteration solver comparison.
    Table1 { problem: ProblemTag },
    /// Modification constants of the built-in methods for two schedules.
    Table2,
    /// Grid-refinement study of the pseudo-time iterated advection scheme.
    AdvectionConvergence {
        tableau: String,
        schedule: ScheduleSpec,
        j_min: u32,
        j_max: u32,
    },
    /// Propagation-speed measurement at fixed Δx.
    AdvectionSpeed {
        tableau: String,
        mu: f64,
        iterations: usize,
    },
    /// Triangular-wave shock location and convergence target.
    BurgersTriangle {
        resolution: usize,
        t_end: f64,
        tableau: String,
        schedule: ScheduleSpec,
    },
    /// Step-data shock locations for several iteration counts.
    BurgersStep {
        resolution: usize,
        t_end: f64,
        mu: f64,
        iterations: Vec<usize>,
    },
    /// Residual histories of the two pseudo-time step strategies.
    BurgersStrategies,
    /// Isentropic vortex with a pseudo-time step strategy.
    EulerVortex {
        strategy: VortexStrategy,
        dx: f64,
        t_end: f64,
    },
    /// Mass drift of every solver over a full run.
    MassAudit { problem: ProblemTag, dx: f64 },
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Per-field summary of masses over a run.
#[derive(Clone, Debug, Serialize)]
pub struct MassSummary {
    pub label: String,
    pub max_drift: f64,
}

/// Written next to the output files after a successful run.
#[derive(Serialize)]
pub struct RunManifest {
    pub spec: ExperimentSpec,
    pub outputs: Vec<String>,
    pub schedule: Option<Vec<f64>>,
    pub modification_constant: Option<f64>,
    pub wall_time_seconds: f64,
    pub mass_summary: Vec<MassSummary>,
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

fn method_table_csv(rows: &[MethodOutcome]) -> String {
    let mut s = String::from("method,mass_error,residual\n");
    for row in rows {
        s.push_str(&format!(
            "{},{},{}\n",
            row.tag.label(),
            row.mass_error,
            row.residual
        ));
    }
    s
}

/// Execute a spec and write its artifacts into `out_dir`. Returns the
/// manifest (also written as `manifest.json`).
pub fn run_spec_to_dir(spec: &ExperimentSpec, out_dir: &Path, jobs: usize) -> Result<RunManifest> {
    fs::create_dir_all(out_dir)?;
    let start = Instant::now();
    let mut outputs = Vec::new();
    let mut schedule_echo = None;
    let mut constant = None;
    let mut mass_summary = Vec::new();

    match spec {
        ExperimentSpec::Table1 { problem } => {
            let rows = match problem {
                ProblemTag::Advection => table1_advection()?,
                ProblemTag::Burgers => table1_burgers()?,
            };
            let name = match problem {
                ProblemTag::Advection => "table1_advection.csv",
                ProblemTag::Burgers => "table1_burgers.csv",
            };
            outputs.push(write_file(out_dir, name, &method_table_csv(&rows))?);
        }
        ExperimentSpec::Table2 => {
            let c = table2();
            let mut s = String::from("schedule,euler,heun,ssprk3\n");
            s.push_str(&format!("constant_0.05_x4,{},{},{}\n", c[0][0], c[0][1], c[0][2]));
            s.push_str(&format!("halving_2_pow_minus_l,{},{},{}\n", c[1][0], c[1][1], c[1][2]));
            outputs.push(write_file(out_dir, "table2.csv", &s)?);
            constant = Some(c[0][0]);
        }
        ExperimentSpec::AdvectionConvergence {
            tableau,
            schedule,
            j_min,
            j_max,
        } => {
            let tab = resolve_tableau(tableau)?;
            let sched = schedule.build(&tab)?;
            schedule_echo = Some(sched.mus().to_vec());
            constant = Some(sched.modification_constant(&tab));
            let points = advection_convergence(&tab, &sched, *j_min, *j_max, jobs)?;
            let mut s = String::from("j,dx,error_original,error_modified,max_mass_drift\n");
            for p in &points {
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    p.j, p.dx, p.error_original, p.error_modified, p.max_mass_drift
                ));
                mass_summary.push(MassSummary {
                    label: format!("grid_j{}", p.j),
                    max_drift: p.max_mass_drift,
                });
            }
            outputs.push(write_file(out_dir, "convergence.csv", &s)?);
        }
        ExperimentSpec::AdvectionSpeed {
            tableau,
            mu,
            iterations,
        } => {
            let tab = resolve_tableau(tableau)?;
            let result = advection_speed(&tab, *mu, *iterations)?;
            constant = Some(1.0 - result.predicted_speed_error);
            let mut s = String::from("t,peak_x\n");
            for (t, x) in result.times.iter().zip(&result.peaks) {
                s.push_str(&format!("{t},{x}\n"));
            }
            outputs.push(write_file(out_dir, "peaks.csv", &s)?);
            let summary = format!(
                "tableau,mu,iterations,predicted_speed_error,measured_speed_error\n{},{},{},{},{}\n",
                result.tableau,
                result.mu,
                result.iterations,
                result.predicted_speed_error,
                result.measured_speed_error
            );
            outputs.push(write_file(out_dir, "speed.csv", &summary)?);
        }
        ExperimentSpec::BurgersTriangle {
            resolution,
            t_end,
            tableau,
            schedule,
        } => {
            let tab = resolve_tableau(tableau)?;
            let sched = schedule.build(&tab)?;
            schedule_echo = Some(sched.mus().to_vec());
            let result = burgers_triangle(*resolution, *t_end, &tab, &sched)?;
            constant = Some(result.c);
            mass_summary.push(MassSummary {
                label: "triangle".into(),
                max_drift: result.max_mass_drift,
            });
            let mut buf = Vec::new();
            write_csv_1d(&result.state, &mut buf)?;
            outputs.push(write_file(
                out_dir,
                "triangle_solution.csv",
                std::str::from_utf8(&buf).unwrap(),
            )?);
            let summary = format!(
                "c,tip_predicted,tip_height,tip_measured,error_original,error_modified\n{},{},{},{},{},{}\n",
                result.c,
                result.prediction.location,
                result.prediction.height,
                result.tip_measured,
                result.error_original,
                result.error_modified
            );
            outputs.push(write_file(out_dir, "triangle_summary.csv", &summary)?);
        }
        ExperimentSpec::BurgersStep {
            resolution,
            t_end,
            mu,
            iterations,
        } => {
            let mut summary = String::from("iterations,c,front_predicted,front_measured\n");
            for &n in iterations {
                let run = burgers_step(*resolution, *t_end, *mu, n)?;
                summary.push_str(&format!(
                    "{},{},{},{}\n",
                    run.iterations, run.c, run.front_predicted, run.front_measured
                ));
                let mut buf = Vec::new();
                write_csv_1d(&run.state, &mut buf)?;
                outputs.push(write_file(
                    out_dir,
                    &format!("step_solution_n{n}.csv"),
                    std::str::from_utf8(&buf).unwrap(),
                )?);
            }
            outputs.push(write_file(out_dir, "step_summary.csv", &summary)?);
        }
        ExperimentSpec::BurgersStrategies => {
            let cmp = burgers_strategy_residuals()?;
            let rows = cmp.schedule_1.len().max(cmp.schedule_2.len());
            let mut s = String::from("iteration,strategy1_relative_residual,strategy2_relative_residual\n");
            for k in 0..rows {
                let a = cmp.schedule_1.get(k).map(|v| v.to_string()).unwrap_or_default();
                let b = cmp.schedule_2.get(k).map(|v| v.to_string()).unwrap_or_default();
                s.push_str(&format!("{k},{a},{b}\n"));
            }
            outputs.push(write_file(out_dir, "strategies.csv", &s)?);
            constant = Some(cmp.c2);
        }
        ExperimentSpec::EulerVortex { strategy, dx, t_end } => {
            let result = euler_vortex(*strategy, *dx, *t_end)?;
            constant = Some(result.c);
            schedule_echo = Some(strategy.schedule().mus().to_vec());
            mass_summary.push(MassSummary {
                label: "density".into(),
                max_drift: result.density_mass_drift,
            });
            let mut buf = Vec::new();
            write_csv_2d(&result.state, &mut buf)?;
            outputs.push(write_file(
                out_dir,
                "vortex_solution.csv",
                std::str::from_utf8(&buf).unwrap(),
            )?);
            let summary = format!(
                "c,expected_center_x,center_x,center_y,density_mass_drift,error_original,error_modified\n{},{},{},{},{},{},{}\n",
                result.c,
                result.expected_center_x,
                result.center.0,
                result.center.1,
                result.density_mass_drift,
                result.error_original,
                result.error_modified
            );
            outputs.push(write_file(out_dir, "vortex_summary.csv", &summary)?);
        }
        ExperimentSpec::MassAudit { problem, dx } => {
            let rows = match problem {
                ProblemTag::Advection => mass_audit_advection(*dx)?,
                ProblemTag::Burgers => mass_audit_burgers(*dx)?,
            };
            let mut s = String::from("method,max_mass_drift\n");
            for (tag, drift) in &rows {
                s.push_str(&format!("{},{}\n", tag.label(), drift));
                mass_summary.push(MassSummary {
                    label: tag.label().into(),
                    max_drift: *drift,
                });
            }
            let name = match problem {
                ProblemTag::Advection => "mass_audit_advection.csv",
                ProblemTag::Burgers => "mass_audit_burgers.csv",
            };
            outputs.push(write_file(out_dir, name, &s)?);
        }
    }

    let manifest = RunManifest {
        spec: spec.clone(),
        outputs: outputs
            .iter()
            .map(|p| p.to_string_lossy().into_owned())
            .collect(),
        schedule: schedule_echo,
        modification_constant: constant,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        mass_summary,
    };
    let mut file = fs::File::create(out_dir.join("manifest.json"))?;
    file.write_all(serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(manifest)
}
