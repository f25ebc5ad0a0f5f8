//! Banded finite-difference images of ladder and Sturm-Liouville operators.
//!
//! The discrete adjoint is the matrix transpose. Factorization identities such
//! as the symmetry of `XᵀX` therefore hold exactly, and only the continuum
//! identities carry an `O(h²)` discretization error.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr};
use crate::grid::{sample, sample_at, Field, Grid};

/// Boundary rows dropped from every residual measurement by default.
pub const DEFAULT_BUFFER: usize = 5;

/// First-order operator `η = a d/dx + b`; its formal adjoint is
/// `η† = -a d/dx + (b - a')`.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderSpec {
    pub a: Expr,
    pub b: Expr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Which {
    Eta,
    EtaDagger,
}

impl LadderSpec {
    pub fn new(a: Expr, b: Expr) -> LadderSpec {
        LadderSpec { a, b }
    }

    /// Zeroth-order coefficient of the formal adjoint, `b - a'`.
    pub fn adjoint_b(&self) -> Expr {
        (self.b.clone() - self.a.d()).simplify()
    }
}

/// Square band matrix on the interior points of a grid. Entry `(i, i + k)` for
/// `|k| <= bandwidth` is stored at `data[i * (2 bandwidth + 1) + k + bandwidth]`;
/// slots falling outside the matrix hold zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedOperator {
    grid: Grid,
    bandwidth: usize,
    data: Vec<f64>,
    symmetric: bool,
}

impl BandedOperator {
    pub fn zeros(grid: Grid, bandwidth: usize) -> BandedOperator {
        let width = 2 * bandwidth + 1;
        BandedOperator { grid, bandwidth, data: vec![0.0; grid.n() * width], symmetric: true }
    }

    pub fn identity(grid: Grid) -> BandedOperator {
        BandedOperator::diagonal(grid, &vec![1.0; grid.n()])
    }

    pub fn diagonal(grid: Grid, d: &[f64]) -> BandedOperator {
        assert_eq!(d.len(), grid.n(), "diagonal length must match the grid");
        BandedOperator { grid, bandwidth: 0, data: d.to_vec(), symmetric: true }
    }

    /// Build from a closure `(i, j) -> A_ij` over the band. The symmetry flag
    /// is set by an exact comparison.
    pub fn from_fn(grid: Grid, bandwidth: usize, f: impl Fn(usize, usize) -> f64) -> BandedOperator {
        let mut op = BandedOperator::zeros(grid, bandwidth);
        let n = grid.n();
        for i in 0..n {
            for j in op.row_range(i) {
                let slot = op.slot(i, j);
                op.data[slot] = f(i, j);
            }
        }
        op.symmetric = op.exactly_symmetric();
        op
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// True only when the matrix equals its transpose bit for bit.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    fn width(&self) -> usize {
        2 * self.bandwidth + 1
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        i * self.width() + (j + self.bandwidth - i)
    }

    /// Column indices of the stored band in row `i`.
    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.bandwidth)..(i + self.bandwidth + 1).min(self.n())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i.abs_diff(j) > self.bandwidth || i >= self.n() || j >= self.n() {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// Main diagonal and, for `k >= 1`, the `k`-th superdiagonal.
    pub fn band(&self, k: isize) -> Vec<f64> {
        let n = self.n() as isize;
        (0..n).filter(|&i| (0..n).contains(&(i + k))).map(|i| self.get(i as usize, (i + k) as usize)).collect()
    }

    fn exactly_symmetric(&self) -> bool {
        (0..self.n())
            .all(|i| self.row_range(i).filter(|&j| j > i).all(|j| self.get(i, j).to_bits() == self.get(j, i).to_bits()))
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n(), "vector length must match the operator");
        (0..self.n()).map(|i| self.row_range(i).map(|j| self.data[self.slot(i, j)] * v[j]).sum()).collect()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A - Aᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n() {
            for j in self.row_range(i).filter(|&j| j > i) {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &BandedOperator, s: f64) -> Result<BandedOperator> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let w = self.bandwidth.max(other.bandwidth);
        Ok(BandedOperator::from_fn(self.grid, w, |i, j| self.get(i, j) + s * other.get(i, j)))
    }

    pub fn scale(&self, s: f64) -> BandedOperator {
        BandedOperator {
            grid: self.grid,
            bandwidth: self.bandwidth,
            data: self.data.iter().map(|v| s * v).collect(),
            symmetric: self.symmetric,
        }
    }

    pub fn add_diagonal(&self, d: &[f64]) -> BandedOperator {
        assert_eq!(d.len(), self.n(), "diagonal length must match the operator");
        let mut out = self.clone();
        for (i, di) in d.iter().enumerate() {
            let slot = out.slot(i, i);
            out.data[slot] += di;
        }
        out
    }

    /// Dense row-major copy, for small matrices.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| (0..self.n()).map(|j| self.get(i, j)).collect()).collect()
    }

    /// Text dump: a header line `n h bandwidth`, then one line per stored
    /// diagonal `offset: v_0 v_1 ...`, offsets from `-bandwidth` to
    /// `+bandwidth`. Values of diagonal `k` start at row `max(0, -k)`.
    pub fn dump(&self) -> String {
        let mut out = format!("# n={} h={:e} bandwidth={}\n", self.n(), self.grid.h(), self.bandwidth);
        for k in -(self.bandwidth as isize)..=(self.bandwidth as isize) {
            let _ = write!(out, "{k}:");
            for v in self.band(k) {
                let _ = write!(out, " {v:e}");
            }
            out.push('\n');
        }
        out
    }
}

/// Exact banded product; bandwidths add. Each entry sums over `k` in ascending
/// order, so `compose(transpose(X), X)` is bitwise symmetric.
pub fn compose(a: &BandedOperator, b: &BandedOperator) -> Result<BandedOperator> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    let w = a.bandwidth + b.bandwidth;
    Ok(BandedOperator::from_fn(a.grid, w, |i, j| {
        let lo = i.saturating_sub(a.bandwidth).max(j.saturating_sub(b.bandwidth));
        let hi = (i + a.bandwidth).min(j + b.bandwidth).min(a.n() - 1);
        (lo..=hi).map(|k| a.get(i, k) * b.get(k, j)).sum()
    }))
}

/// Exact transpose; an involution.
pub fn transpose(a: &BandedOperator) -> BandedOperator {
    if a.symmetric {
        return a.clone();
    }
    let mut t = BandedOperator::from_fn(a.grid, a.bandwidth, |i, j| a.get(j, i));
    t.symmetric = a.symmetric;
    t
}

/// `D(w) A D(w)⁻¹`, entry `A_ij w_i / w_j`.
pub fn conjugate_by_weight(a: &BandedOperator, w: &Field) -> Result<BandedOperator> {
    if *w.grid() != a.grid {
        return Err(Error::GridMismatch);
    }
    if let Some(i) = w.values().iter().position(|&v| v <= 0.0) {
        return Err(Error::NonPositive { what: "weight", value: w.values()[i], x: a.grid.x(i) });
    }
    Ok(conjugate_by_diagonal(a, w.values()))
}

pub(crate) fn conjugate_by_diagonal(a: &BandedOperator, w: &[f64]) -> BandedOperator {
    BandedOperator::from_fn(a.grid, a.bandwidth, |i, j| if i == j { a.get(i, i) } else { a.get(i, j) * w[i] / w[j] })
}

/// Central-difference image of `η` with Dirichlet closure; `η†` is its exact
/// transpose.
pub fn ladder_matrix(s: &LadderSpec, g: &Grid, params: &Bindings, which: Which) -> Result<BandedOperator> {
    let a = sample(&s.a, g, params)?;
    let b = sample(&s.b, g, params)?;
    let half = 0.5 / g.h();
    let (a, b) = (a.values(), b.values());
    let eta = BandedOperator::from_fn(*g, 1, |i, j| {
        if j + 1 == i {
            -a[i] * half
        } else if j == i + 1 {
            a[i] * half
        } else {
            b[i]
        }
    });
    Ok(match which {
        Which::Eta => eta,
        Which::EtaDagger => transpose(&eta),
    })
}

/// Conservative three-point image of `-d/dx m d/dx + V` with the mass sampled
/// at half-points. Exactly symmetric.
pub fn sturm_liouville_matrix(mass: &Expr, potential: &Field, g: &Grid, params: &Bindings) -> Result<BandedOperator> {
    if potential.grid() != g {
        return Err(Error::GridMismatch);
    }
    let xs = g.half_points();
    let m = sample_at(mass, &xs, params)?;
    if let Some(i) = m.iter().position(|&v| v <= 0.0) {
        return Err(Error::NonPositive { what: "mass", value: m[i], x: xs[i] });
    }
    let h2 = g.h() * g.h();
    let v = potential.values();
    let mut op =
        BandedOperator::from_fn(*g, 1, |i, j| if j == i { (m[i] + m[i + 1]) / h2 + v[i] } else { -m[i.max(j)] / h2 });
    op.symmetric = true;
    Ok(op)
}

/// Continuum commutator `[η, η†] = 2ab' - aa''`.
pub fn commutator_symbol(s: &LadderSpec) -> Expr {
    let a = &s.a;
    (2.0 * a.clone() * s.b.d() - a.clone() * a.d().d()).simplify()
}

/// Smooth test vector for operator identities: a Gaussian centred on the
/// domain with width a tenth of its length.
pub fn probe(g: &Grid) -> Vec<f64> {
    let centre = 0.5 * (g.x_min() + g.x_max());
    let sigma = g.length() / 10.0;
    g.points().into_iter().map(|x| (-0.5 * ((x - centre) / sigma).powi(2)).exp()).collect()
}

/// `max |lhs - rhs| / max |lhs|` over rows `buffer..n-buffer`. Falls back to
/// the absolute deviation when `lhs` vanishes there.
pub fn relative_residual(lhs: &[f64], rhs: &[f64], buffer: usize) -> f64 {
    let n = lhs.len();
    let rows = buffer.min(n / 2)..n.saturating_sub(buffer);
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for i in rows {
        num = num.max((lhs[i] - rhs[i]).abs());
        den = den.max(lhs[i].abs());
    }
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// Apply a product of operators, rightmost first.
pub fn apply_chain(chain: &[&BandedOperator], v: &[f64]) -> Vec<f64> {
    chain.iter().rev().fold(v.to_vec(), |acc, op| op.matvec(&acc))
}

/// Relative residual of `lhs_chain u - rhs_chain u` on the probe.
pub fn identity_residual(lhs: &[&BandedOperator], rhs: &[&BandedOperator], g: &Grid, buffer: usize) -> f64 {
    let u = probe(g);
    relative_residual(&apply_chain(lhs, &u), &apply_chain(rhs, &u), buffer)
}
