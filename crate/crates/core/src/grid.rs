//! Uniform grids with Dirichlet endpoints, sampled fields and quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr};

/// `n` interior points `x_i = x_min + i h`, `i = 1..=n`, with
/// `h = (x_max - x_min) / (n + 1)`. The endpoints carry the Dirichlet data
/// and are not part of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Grid> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_min >= x_max {
            return Err(Error::InvalidGrid(format!("need x_min < x_max, got [{x_min}, {x_max}]")));
        }
        if n < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 interior points, got {n}")));
        }
        Ok(Grid { x_min, x_max, n })
    }

    /// Half-line grid on `(x_min, x_max]` whose left Dirichlet point sits ten
    /// spacings away from the origin, standing off an `x = 0` singularity.
    pub fn standoff(x_max: f64, n: usize) -> Result<Grid> {
        let x_min = 10.0 * x_max / (n as f64 + 11.0);
        Grid::new(x_min, x_max, n)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n as f64 + 1.0)
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// Interior point `i` in `0..n` (the first interior point is index 0).
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 1.0) * self.h()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Cell midpoints `x_i + h/2` for `i = 0..=n`, including the two
    /// boundary half-cells.
    pub fn half_points(&self) -> Vec<f64> {
        let h = self.h();
        (0..=self.n).map(|i| self.x_min + (i as f64 + 0.5) * h).collect()
    }

    pub fn same_domain(&self, other: &Grid) -> bool {
        self.x_min == other.x_min && self.x_max == other.x_max
    }
}

/// Values on the interior points of a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.n() {
            return Err(Error::LengthMismatch { expected: grid.n(), found: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index, x: grid.x(index) });
        }
        Ok(Field { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Field> {
        Field::new(grid, grid.points().into_iter().map(f).collect())
    }

    pub fn constant(grid: Grid, v: f64) -> Result<Field> {
        Field::new(grid, vec![v; grid.n()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        Field::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Evaluate `e` at every interior point.
pub fn sample(e: &Expr, grid: &Grid, params: &Bindings) -> Result<Field> {
    let values = grid
        .points()
        .into_iter()
        .enumerate()
        .map(|(index, x)| e.eval(x, params).map_err(|source| Error::Sample { index, x, source }))
        .collect::<Result<Vec<_>>>()?;
    Field::new(*grid, values)
}

pub(crate) fn sample_at(e: &Expr, xs: &[f64], params: &Bindings) -> Result<Vec<f64>> {
    xs.iter()
        .enumerate()
        .map(|(index, &x)| e.eval(x, params).map_err(|source| Error::Sample { index, x, source }))
        .collect()
}

/// Cumulative trapezoidal integral starting at the first interior point,
/// `F(x_1) = 0`.
pub fn cumulative_integral(f: &Field) -> Field {
    let h = f.grid.h();
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(f.values.len());
    out.push(0.0);
    for w in f.values.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    Field { grid: f.grid, values: out }
}

/// Cumulative integral using one Simpson panel per cell; `midpoints[i]` is the
/// integrand at `x_i + h/2` in the numbering of [`Grid::half_points`], so only
/// the interior cells `1..n` are used. `F(x_1) = 0`.
pub fn cumulative_integral_simpson(nodes: &Field, midpoints: &[f64]) -> Result<Field> {
    let n = nodes.grid.n();
    if midpoints.len() != n + 1 {
        return Err(Error::LengthMismatch { expected: n + 1, found: midpoints.len() });
    }
    let h = nodes.grid.h();
    let f = &nodes.values;
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(n);
    out.push(0.0);
    for i in 1..n {
        acc += h / 6.0 * (f[i - 1] + 4.0 * midpoints[i] + f[i]);
        out.push(acc);
    }
    Field::new(nodes.grid, out)
}

/// Antiderivative of an expression on the grid, lower limit at the first
/// interior point, fourth order in `h`.
pub fn antiderivative(e: &Expr, grid: &Grid, params: &Bindings) -> Result<Field> {
    let nodes = sample(e, grid, params)?;
    let mids = sample_at(e, &grid.half_points(), params)?;
    cumulative_integral_simpson(&nodes, &mids)
}

/// Trapezoidal integral over `[x_min, x_max]`. The two boundary values are
/// extrapolated linearly from the first two interior points on each side,
/// so linear integrands are integrated exactly.
pub fn quadrature(f: &Field) -> f64 {
    let v = &f.values;
    let n = v.len();
    let h = f.grid.h();
    let left = 2.0 * v[0] - v[1];
    let right = 2.0 * v[n - 1] - v[n - 2];
    let inner: f64 = v.iter().sum::<f64>();
    h * (inner + 0.5 * (left + right))
}

/// `sqrt(quadrature(f^2))`.
pub fn l2_norm(values: &[f64], grid: &Grid) -> f64 {
    let sq = Field { grid: *grid, values: values.iter().map(|v| v * v).collect() };
    quadrature(&sq).max(0.0).sqrt()
}
