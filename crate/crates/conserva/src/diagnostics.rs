//! Error norms against exact or speed-modified solutions, propagation-speed
//! measurement from peak tracking, and shock-location predictions.

use crate::error::{Error, Result};
use crate::grid::State1;
use crate::scalar::Real;

/// Wrap x into the half-open interval (a, b].
pub fn wrap_periodic<R: Real>(x: R, a: R, b: R) -> R {
    let length = b - a;
    let mut y = x - length * ((x - a) / length).floor();
    if y <= a {
        y += length;
    }
    if y > b {
        y -= length;
    }
    y
}

/// Closed-form reference solutions. Each family carries the speed factor `c`
/// of the effective conservation law u_t + c·f(u)_x = 0; `c = 1` is the
/// original equation.
#[derive(Clone, Copy, Debug)]
pub enum ExactSolution<R> {
    /// Periodic advected profile u(x, t) = exp(-decay·ξ²), ξ = wrap(x - c·t).
    AdvectedGaussian { decay: R, c: R, a: R, b: R },
    /// Expanding linear ramp on (0, 1]: u = x/(ct+1) up to the tip ½√(ct+1).
    BurgersTriangle { c: R },
    /// Unit step translating at the jump speed c/2 from `front0`.
    BurgersStep { c: R, front0: R },
}

impl<R: Real> ExactSolution<R> {
    /// The same family with a different speed factor.
    pub fn with_speed_factor(&self, c: R) -> Self {
        match *self {
            ExactSolution::AdvectedGaussian { decay, a, b, .. } => {
                ExactSolution::AdvectedGaussian { decay, c, a, b }
            }
            ExactSolution::BurgersTriangle { .. } => ExactSolution::BurgersTriangle { c },
            ExactSolution::BurgersStep { front0, .. } => ExactSolution::BurgersStep { c, front0 },
        }
    }

    pub fn eval(&self, x: R, t: R) -> R {
        match *self {
            ExactSolution::AdvectedGaussian { decay, c, a, b } => {
                let xi = wrap_periodic(x - c * t, a, b);
                // evaluate against the nearest periodic image of the pulse at 0
                let length = b - a;
                let mut d = xi;
                if d > length * R::half() {
                    d -= length;
                }
                if d < -length * R::half() {
                    d += length;
                }
                (-decay * d * d).exp()
            }
            ExactSolution::BurgersTriangle { c } => {
                let denom = c * t + R::one();
                if x <= denom.sqrt() * R::half() {
                    x / denom
                } else {
                    R::zero()
                }
            }
            ExactSolution::BurgersStep { c, front0 } => {
                if x <= front0 + c * t * R::half() {
                    R::one()
                } else {
                    R::zero()
                }
            }
        }
    }
}

/// Volume-weighted L2 error sqrt(Σ|Ω_i|(u_i - exact(x_i, t))²).
pub fn l2_error<R: Real>(u: &State1<R>, exact: &ExactSolution<R>, t: R) -> R {
    let grid = *u.grid();
    let mut acc = R::zero();
    for i in 0..grid.m() {
        let d = u.value(i, 0) - exact.eval(grid.point(i), t);
        acc += grid.dx() * d * d;
    }
    acc.sqrt()
}

/// L2 error against an arbitrary profile.
pub fn l2_error_fn<R: Real>(u: &State1<R>, f: impl Fn(R) -> R) -> R {
    let grid = *u.grid();
    let mut acc = R::zero();
    for i in 0..grid.m() {
        let d = u.value(i, 0) - f(grid.point(i));
        acc += grid.dx() * d * d;
    }
    acc.sqrt()
}

/// Peak abscissa of a unimodal pulse: argmax cell refined by quadratic
/// interpolation through the maximum and its two periodic neighbours.
pub fn track_peak<R: Real>(u: &State1<R>) -> Result<R> {
    let grid = *u.grid();
    let m = grid.m();
    let values = u.values();
    let mut imax = 0;
    for i in 1..m {
        if values[i] > values[imax] {
            imax = i;
        }
    }
    let left = values[grid.wrap(imax as isize - 1)];
    let mid = values[imax];
    let right = values[grid.wrap(imax as isize + 1)];
    let denom = left - R::two() * mid + right;
    if !(denom < R::zero()) {
        return Err(Error::NonUnimodal(format!(
            "no concave maximum at cell {imax}"
        )));
    }
    let offset = R::half() * (left - right) / denom;
    Ok(grid.point(imax) + offset * grid.dx())
}

/// Undo periodic wrapping of a position series by minimal-displacement
/// continuation: each sample moves by less than half a period.
pub fn unwrap_positions<R: Real>(raw: &[R], period: R) -> Vec<R> {
    let mut out = Vec::with_capacity(raw.len());
    let mut offset = R::zero();
    for (k, &x) in raw.iter().enumerate() {
        if k > 0 {
            let prev = out[k - 1];
            let mut step = x + offset - prev;
            while step > period * R::half() {
                offset -= period;
                step -= period;
            }
            while step < -period * R::half() {
                offset += period;
                step += period;
            }
        }
        out.push(x + offset);
    }
    out
}

/// Least-squares slope of positions against time: the measured propagation
/// speed. Needs at least two samples.
pub fn measure_speed<R: Real>(t: &[R], x: &[R]) -> Result<R> {
    if t.len() != x.len() || t.len() < 2 {
        return Err(Error::DimensionMismatch(
            "speed measurement needs two equal-length series".into(),
        ));
    }
    let n = R::of_usize(t.len());
    let t_mean = t.iter().copied().sum::<R>() / n;
    let x_mean = x.iter().copied().sum::<R>() / n;
    let mut num = R::zero();
    let mut den = R::zero();
    for (&ti, &xi) in t.iter().zip(x) {
        num += (ti - t_mean) * (xi - x_mean);
        den += (ti - t_mean) * (ti - t_mean);
    }
    if den == R::zero() {
        return Err(Error::DimensionMismatch(
            "speed measurement needs distinct times".into(),
        ));
    }
    Ok(num / den)
}

/// Predicted shock data for the effective conservation law with factor c.
#[derive(Clone, Copy, Debug)]
pub struct ShockPrediction<R> {
    /// Abscissa of the shock (triangle tip or step front).
    pub location: R,
    /// Solution value just left of the shock.
    pub height: R,
}

/// Triangular wave: tip at ½√(ct+1), height location/(ct+1).
pub fn triangle_shock_prediction<R: Real>(c: R, t: R) -> ShockPrediction<R> {
    let denom = c * t + R::one();
    let location = denom.sqrt() * R::half();
    ShockPrediction {
        location,
        height: location / denom,
    }
}

/// Step function: front at front0 + c·t/2 (jump speed from the flux jump
/// divided by the state jump), height 1.
pub fn step_front_prediction<R: Real>(c: R, t: R, front0: R) -> ShockPrediction<R> {
    ShockPrediction {
        location: front0 + c * t * R::half(),
        height: R::one(),
    }
}

/// Measured shock location: the largest grid point whose value exceeds the
/// threshold (half the predicted height is the robust choice for smeared
/// fronts).
pub fn measured_front<R: Real>(u: &State1<R>, threshold: R) -> Option<R> {
    let grid = *u.grid();
    (0..grid.m())
        .rev()
        .find(|&i| u.value(i, 0) > threshold)
        .map(|i| grid.point(i))
}
