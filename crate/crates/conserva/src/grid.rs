//! Periodic uniform meshes and cell-value state storage.
//!
//! Grids carry the point set x_i = a + i·Δx (i = 0..m-1) on the half-open
//! periodic domain (a, b]; the point at index 0 represents the wrapped seam
//! a ≡ b. Every conservation statement in the crate is phrased through the
//! volume-weighted mass functional implemented here.

use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Anything that provides per-cell volumes.
pub trait Mesh<R: Real>: Clone + PartialEq {
    fn n_cells(&self) -> usize;
    fn volume(&self, idx: usize) -> R;
}

/// Uniform periodic 1D mesh on (a, b].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D<R> {
    a: R,
    b: R,
    m: usize,
    dx: R,
}

impl<R: Real> Grid1D<R> {
    pub fn new(a: R, b: R, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidGrid("cell count must be positive".into()));
        }
        if !(b > a) {
            return Err(Error::InvalidGrid("domain (a, b] needs b > a".into()));
        }
        let dx = (b - a) / R::of_usize(m);
        Ok(Self { a, b, m, dx })
    }

    /// Mesh with prescribed spacing; `b - a` must be an integer multiple of `dx`.
    pub fn with_spacing(a: R, b: R, dx: R) -> Result<Self> {
        let m = ((b - a) / dx).round();
        let m = m
            .to_usize()
            .ok_or_else(|| Error::InvalidGrid("spacing does not divide the domain".into()))?;
        let grid = Self::new(a, b, m)?;
        if ((grid.dx - dx) / dx).abs() > R::of(1e-10) {
            return Err(Error::InvalidGrid(format!(
                "dx = {dx} does not divide the domain length"
            )));
        }
        Ok(grid)
    }

    pub fn a(&self) -> R {
        self.a
    }

    pub fn b(&self) -> R {
        self.b
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dx(&self) -> R {
        self.dx
    }

    pub fn length(&self) -> R {
        self.b - self.a
    }

    /// Grid point x_i = a + i·Δx.
    pub fn point(&self, i: usize) -> R {
        self.a + R::of_usize(i) * self.dx
    }

    /// Periodic index wrap.
    pub fn wrap(&self, i: isize) -> usize {
        let m = self.m as isize;
        (((i % m) + m) % m) as usize
    }

    /// Agglomerated mesh with half the cells (2Δx spacing).
    pub fn coarsen(&self) -> Result<Self> {
        if self.m % 2 != 0 {
            return Err(Error::InvalidGrid(
                "agglomeration needs an even cell count".into(),
            ));
        }
        Self::new(self.a, self.b, self.m / 2)
    }
}

impl<R: Real> Mesh<R> for Grid1D<R> {
    fn n_cells(&self) -> usize {
        self.m
    }

    fn volume(&self, _idx: usize) -> R {
        self.dx
    }
}

/// Uniform periodic 2D mesh on (x0, x1] × (y0, y1].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid2D<R> {
    x0: R,
    x1: R,
    y0: R,
    y1: R,
    mx: usize,
    my: usize,
    dx: R,
    dy: R,
}

impl<R: Real> Grid2D<R> {
    pub fn new(x0: R, x1: R, y0: R, y1: R, mx: usize, my: usize) -> Result<Self> {
        if mx == 0 || my == 0 {
            return Err(Error::InvalidGrid("cell counts must be positive".into()));
        }
        if !(x1 > x0 && y1 > y0) {
            return Err(Error::InvalidGrid("degenerate 2D domain".into()));
        }
        Ok(Self {
            x0,
            x1,
            y0,
            y1,
            mx,
            my,
            dx: (x1 - x0) / R::of_usize(mx),
            dy: (y1 - y0) / R::of_usize(my),
        })
    }

    pub fn mx(&self) -> usize {
        self.mx
    }

    pub fn my(&self) -> usize {
        self.my
    }

    pub fn dx(&self) -> R {
        self.dx
    }

    pub fn dy(&self) -> R {
        self.dy
    }

    pub fn x_length(&self) -> R {
        self.x1 - self.x0
    }

    pub fn point(&self, i: usize, j: usize) -> (R, R) {
        (
            self.x0 + R::of_usize(i) * self.dx,
            self.y0 + R::of_usize(j) * self.dy,
        )
    }

    pub fn x0(&self) -> R {
        self.x0
    }

    pub fn y0(&self) -> R {
        self.y0
    }

    /// Flat cell index, x fastest.
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.mx && j < self.my);
        j * self.mx + i
    }

    pub fn wrap_x(&self, i: isize) -> usize {
        let m = self.mx as isize;
        (((i % m) + m) % m) as usize
    }

    pub fn wrap_y(&self, j: isize) -> usize {
        let m = self.my as isize;
        (((j % m) + m) % m) as usize
    }
}

impl<R: Real> Mesh<R> for Grid2D<R> {
    fn n_cells(&self) -> usize {
        self.mx * self.my
    }

    fn volume(&self, _idx: usize) -> R {
        self.dx * self.dy
    }
}

/// Cell values on a grid, `q` components per cell, component-major per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct StateField<R, G> {
    grid: G,
    q: usize,
    values: Vec<R>,
}

pub type State1<R> = StateField<R, Grid1D<R>>;
pub type State2<R> = StateField<R, Grid2D<R>>;

impl<R: Real, G: Mesh<R>> StateField<R, G> {
    pub fn zeros(grid: G, q: usize) -> Self {
        let n = grid.n_cells();
        Self {
            grid,
            q,
            values: vec![R::zero(); n * q],
        }
    }

    pub fn from_values(grid: G, q: usize, values: Vec<R>) -> Result<Self> {
        if values.len() != grid.n_cells() * q {
            return Err(Error::DimensionMismatch(format!(
                "expected {} values, got {}",
                grid.n_cells() * q,
                values.len()
            )));
        }
        Ok(Self { grid, q, values })
    }

    pub fn grid(&self) -> &G {
        &self.grid
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n_cells(&self) -> usize {
        self.grid.n_cells()
    }

    pub fn values(&self) -> &[R] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [R] {
        &mut self.values
    }

    pub fn value(&self, cell: usize, component: usize) -> R {
        self.values[cell * self.q + component]
    }

    pub fn set_value(&mut self, cell: usize, component: usize, v: R) {
        self.values[cell * self.q + component] = v;
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Total mass of one component: Σ_i |Ω_i| u_{i,component}.
    pub fn total_mass(&self, component: usize) -> Result<R> {
        if component >= self.q {
            return Err(Error::ComponentOutOfRange {
                component,
                q: self.q,
            });
        }
        let mut acc = R::zero();
        for cell in 0..self.n_cells() {
            acc += self.grid.volume(cell) * self.value(cell, component);
        }
        Ok(acc)
    }

    /// Mass difference against a reference field on the same grid.
    pub fn mass_error(&self, reference: &Self, component: usize) -> Result<R> {
        if self.grid != reference.grid || self.q != reference.q {
            return Err(Error::GridMismatch);
        }
        Ok(self.total_mass(component)? - reference.total_mass(component)?)
    }

    /// Mass difference summed over all components.
    pub fn mass_error_total(&self, reference: &Self) -> Result<R> {
        let mut acc = R::zero();
        for c in 0..self.q {
            acc += self.mass_error(reference, c)?;
        }
        Ok(acc)
    }

    /// `self += s * other`.
    pub fn scaled_add(&mut self, s: R, other: &Self) {
        debug_assert_eq!(self.values.len(), other.values.len());
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> R {
        self.values
            .iter()
            .zip(&other.values)
            .fold(R::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// Volume-weighted L2 norm over all components.
    pub fn disc_norm(&self) -> R {
        let mut acc = R::zero();
        for cell in 0..self.n_cells() {
            let vol = self.grid.volume(cell);
            for c in 0..self.q {
                let v = self.value(cell, c);
                acc += vol * v * v;
            }
        }
        acc.sqrt()
    }
}

impl<R: Real> State1<R> {
    /// Scalar field sampled from a profile at the grid points.
    pub fn from_profile(grid: Grid1D<R>, f: impl Fn(R) -> R) -> Self {
        let values = (0..grid.m()).map(|i| f(grid.point(i))).collect();
        Self {
            grid,
            q: 1,
            values,
        }
    }
}

impl<R: Real> State2<R> {
    /// Multi-component field filled from a per-point closure.
    pub fn from_profile_components(
        grid: Grid2D<R>,
        q: usize,
        mut f: impl FnMut(R, R, &mut [R]),
    ) -> Self {
        let mut values = vec![R::zero(); grid.n_cells() * q];
        for j in 0..grid.my() {
            for i in 0..grid.mx() {
                let (x, y) = grid.point(i, j);
                let cell = grid.index(i, j);
                f(x, y, &mut values[cell * q..(cell + 1) * q]);
            }
        }
        Self { grid, q, values }
    }
}

/// CSV dump of a 1D field: `x,u0[,u1..]` per row.
pub fn write_csv_1d<R: Real, W: Write>(state: &State1<R>, mut w: W) -> std::io::Result<()> {
    write!(w, "x")?;
    for c in 0..state.q() {
        write!(w, ",u{c}")?;
    }
    writeln!(w)?;
    for i in 0..state.n_cells() {
        write!(w, "{}", state.grid().point(i))?;
        for c in 0..state.q() {
            write!(w, ",{}", state.value(i, c))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// CSV dump of a 2D field: `x,y,u0[,u1..]` per row.
pub fn write_csv_2d<R: Real, W: Write>(state: &State2<R>, mut w: W) -> std::io::Result<()> {
    write!(w, "x,y")?;
    for c in 0..state.q() {
        write!(w, ",u{c}")?;
    }
    writeln!(w)?;
    let grid = *state.grid();
    for j in 0..grid.my() {
        for i in 0..grid.mx() {
            let (x, y) = grid.point(i, j);
            let cell = grid.index(i, j);
            write!(w, "{x},{y}")?;
            for c in 0..state.q() {
                write!(w, ",{}", state.value(cell, c))?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}
